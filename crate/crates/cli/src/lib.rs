//! `rislab` command line.
//!
//! ```text
//! rislab run              [--config FILE] [--out DIR] [--seed N]...
//! rislab sweep            --dimension power|elements --values V,V,...
//! rislab baseline         --agent random|ucb|oracle
//! rislab check-gradients  [--trials N]
//! ```
//!
//! The output directory defaults to `$RISLAB_OUT`, then `./out`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rislab::agents::AgentKind;
use rislab::harness::{self, RunOptions, RunResult, SweepDimension};
use rislab::{gradcheck, io, ExperimentConfig};

pub const OUT_ENV: &str = "RISLAB_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "rislab",
    version,
    about = "RIS-assisted MISO sum-rate experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config; omitted keys take their defaults.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, value_name = "DIR", env = OUT_ENV, default_value = "out")]
    pub out: PathBuf,

    /// Replace the configured seeds; repeat or comma-separate.
    #[arg(long = "seed", value_name = "N", value_delimiter = ',')]
    pub seeds: Vec<u64>,

    /// Also write agent checkpoints to <out>/checkpoints/.
    #[arg(long)]
    pub checkpoints: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dimension {
    /// Transmit power in dBm.
    Power,
    /// Total RIS element count.
    Elements,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineKind {
    Random,
    Ucb,
    Oracle,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train and evaluate the configured agents; writes summary.json and curves/.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Repeat `run` over one swept parameter; writes sweep.json and point<i>/.
    Sweep {
        #[arg(long, value_enum)]
        dimension: Dimension,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        values: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a single reference policy.
    Baseline {
        #[arg(long, value_enum)]
        agent: BaselineKind,
        #[command(flatten)]
        common: Common,
    },
    /// Compare backprop against central finite differences on random networks.
    CheckGradients {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_config(common: &Common) -> rislab::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => io::parse_config(path)?,
        None => ExperimentConfig::default(),
    };
    if !common.seeds.is_empty() {
        cfg.seeds = common.seeds.clone();
        cfg.validate()?;
    }
    Ok(cfg)
}

fn report_run(out: &mut dyn Write, result: &RunResult) -> std::io::Result<()> {
    writeln!(
        out,
        "card(A)={} seeds={:?} fingerprint={} ({:.1}s)",
        result.cardinality, result.config.seeds, result.fingerprint, result.wall_clock_secs
    )?;
    writeln!(
        out,
        "{:<8} {:>10} {:>9} {:>11}",
        "agent", "eval_mean", "std", "normalized"
    )?;
    for p in &result.policies {
        let norm = p
            .normalized_mean
            .map_or_else(|| "-".to_string(), |n| format!("{n:.3}"));
        writeln!(
            out,
            "{:<8} {:>10.4} {:>9.4} {:>11}",
            p.agent, p.eval_mean, p.eval_std, norm
        )?;
    }
    Ok(())
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run { common } => {
            let cfg = load_config(&common)?;
            let opts = RunOptions {
                keep_checkpoints: common.checkpoints,
            };
            let result = harness::run_experiment_with(&cfg, opts)?;
            let summary = io::write_run(&result, &common.out)?;
            io::write_checkpoints(&result, &common.out)?;
            report_run(out, &result)?;
            writeln!(out, "wrote {}", summary.display())?;
        }
        Command::Baseline { agent, common } => {
            let mut cfg = load_config(&common)?;
            cfg.agents = vec![match agent {
                BaselineKind::Random => AgentKind::Random,
                BaselineKind::Ucb => AgentKind::Ucb,
                BaselineKind::Oracle => AgentKind::Oracle,
            }];
            cfg.validate()?;
            let opts = RunOptions {
                keep_checkpoints: common.checkpoints,
            };
            let result = harness::run_experiment_with(&cfg, opts)?;
            let summary = io::write_run(&result, &common.out)?;
            io::write_checkpoints(&result, &common.out)?;
            report_run(out, &result)?;
            writeln!(out, "wrote {}", summary.display())?;
        }
        Command::Sweep {
            dimension,
            values,
            common,
        } => {
            let cfg = load_config(&common)?;
            let dim = match dimension {
                Dimension::Power => SweepDimension::PowerDbm,
                Dimension::Elements => SweepDimension::Elements,
            };
            let opts = RunOptions {
                keep_checkpoints: common.checkpoints,
            };
            let results = harness::sweep_with(&cfg, dim, &values, opts)?;
            let path = io::write_sweep(dim, &values, &results, &common.out)?;
            for (i, r) in results.iter().enumerate() {
                io::write_checkpoints(r, &common.out.join(format!("point{i}")))?;
            }
            let summary = io::SweepSummary::from_results(dim, &values, &results);
            write!(out, "{}", summary.render_table())?;
            writeln!(out, "wrote {}", path.display())?;
        }
        Command::CheckGradients { trials, seed } => {
            let report = gradcheck::run_trials(trials, seed)?;
            for sizes in &report.failed {
                writeln!(out, "FAIL net {sizes:?}")?;
            }
            writeln!(
                out,
                "{}/{} trials passed, worst absolute error {:.3e}, worst relative error {:.3e}",
                trials - report.failed.len(),
                trials,
                report.worst_abs_err,
                report.worst_rel_err
            )?;
            if !report.passed() {
                return Err(format!("{} gradient trials failed", report.failed.len()).into());
            }
        }
    }
    Ok(())
}

/// Parses `argv` (including the program name) and runs it. Returns the
/// process exit code: 0 on success, 2 on usage errors, 1 otherwise.
pub fn cli_main<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                return 2;
            }
            let _ = write!(out, "{rendered}");
            return 0;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
