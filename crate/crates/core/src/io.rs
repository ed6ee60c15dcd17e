//! Config files and result artifacts.
//!
//! A run directory looks like:
//!
//! ```text
//! out/
//!   summary.json               rislab-summary v1
//!   curves/drp_seed0.csv       step,action_index,reward
//!   curves/...
//! ```
//!
//! A sweep writes one run directory per point (`point0/`, `point1/`, ...)
//! plus `sweep.json` (rislab-sweep v1) at the top. Floats use the shortest
//! decimal that round-trips, so reruns of one config are byte-identical.
//! Wall-clock time is kept out of these files for the same reason.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{AgentCheckpoint, AgentKind};
use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, MetricsLog, PolicySummary, RunResult, SweepDimension};

pub const CSV_HEADER: [&str; 3] = ["step", "action_index", "reward"];
pub const SUMMARY_SCHEMA: &str = "rislab-summary";
pub const SWEEP_SCHEMA: &str = "rislab-sweep";
pub const SCHEMA_VERSION: u32 = 1;

pub fn parse_config_str(text: &str, context: &str) -> Result<ExperimentConfig> {
    let text = if text.trim().is_empty() { "{}" } else { text };
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|source| Error::Parse {
        context: context.to_string(),
        source,
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, &path.display().to_string())
}

pub fn config_to_string(cfg: &ExperimentConfig) -> String {
    let mut s = serde_json::to_string_pretty(cfg).expect("config serializes");
    s.push('\n');
    s
}

pub fn write_config(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    write_file(path, config_to_string(cfg).as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn training_csv_bytes(log: &MetricsLog) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for e in log.entries() {
        w.write_record([
            e.step.to_string(),
            e.action_index.to_string(),
            e.reward.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_training_csv(log: &MetricsLog, path: &Path) -> Result<()> {
    write_file(path, &training_csv_bytes(log))
}

/// Reads a curve file; extra columns are ignored, missing ones are named.
pub fn read_training_csv(path: &Path) -> Result<MetricsLog> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let schema = |message: String| Error::Schema {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    let mut cols = [0usize; 3];
    for (slot, name) in cols.iter_mut().zip(CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| schema(format!("missing column {name:?}")))?;
    }
    let mut log = MetricsLog::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| rec.get(cols[i]).unwrap_or("");
        let bad = |i: usize| {
            schema(format!(
                "row {}: bad {} {:?}",
                row + 1,
                CSV_HEADER[i],
                field(i)
            ))
        };
        let step = field(0).parse().map_err(|_| bad(0))?;
        let action = field(1).parse().map_err(|_| bad(1))?;
        let reward = field(2).parse().map_err(|_| bad(2))?;
        log.push(step, action, reward)?;
    }
    Ok(log)
}

pub fn curve_file_name(agent: AgentKind, seed: u64) -> String {
    format!("{agent}_seed{seed}.csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRef {
    pub agent: AgentKind,
    pub seed: u64,
    /// Relative to the summary's directory.
    pub path: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub schema_version: u32,
    pub rislab_version: String,
    pub fingerprint: String,
    pub seeds: Vec<u64>,
    pub cardinality: usize,
    pub state_len: usize,
    pub power_dbm: f64,
    pub ris_elements_total: usize,
    pub policies: Vec<PolicySummary>,
    pub curves: Vec<CurveRef>,
    pub config: ExperimentConfig,
}

impl Summary {
    pub fn from_result(result: &RunResult) -> Self {
        let curves = result
            .training
            .iter()
            .map(|s| CurveRef {
                agent: s.agent,
                seed: s.seed,
                path: format!("curves/{}", curve_file_name(s.agent, s.seed)),
                rows: s.log.len(),
            })
            .collect();
        Self {
            schema: SUMMARY_SCHEMA.into(),
            schema_version: SCHEMA_VERSION,
            rislab_version: crate::VERSION.into(),
            fingerprint: result.fingerprint.clone(),
            seeds: result.config.seeds.clone(),
            cardinality: result.cardinality,
            state_len: result.state_len,
            power_dbm: result.config.system.power_dbm,
            ris_elements_total: result.config.system.ris_elements_total,
            policies: result.policies.clone(),
            curves,
            config: result.config.clone(),
        }
    }

    pub fn policy(&self, kind: AgentKind) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.agent == kind)
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("summary serializes");
    bytes.push(b'\n');
    bytes
}

pub fn write_summary_json(result: &RunResult, path: &Path) -> Result<()> {
    write_file(path, &json_bytes(&Summary::from_result(result)))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, schema: &str) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|source| Error::Parse {
        context: path.display().to_string(),
        source,
    })?;
    let found = value.get("schema").and_then(|v| v.as_str()).unwrap_or("");
    if found != schema {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: format!("expected schema {schema:?}, found {found:?}"),
        });
    }
    serde_json::from_value(value).map_err(|source| Error::Parse {
        context: path.display().to_string(),
        source,
    })
}

pub fn read_summary_json(path: &Path) -> Result<Summary> {
    read_json(path, SUMMARY_SCHEMA)
}

/// Writes `summary.json` and every training curve under `dir`.
pub fn write_run(result: &RunResult, dir: &Path) -> Result<PathBuf> {
    for s in &result.training {
        let path = dir.join("curves").join(curve_file_name(s.agent, s.seed));
        write_training_csv(&s.log, &path)?;
    }
    let summary = dir.join("summary.json");
    write_summary_json(result, &summary)?;
    Ok(summary)
}

pub fn write_checkpoint(ckpt: &AgentCheckpoint, path: &Path) -> Result<()> {
    write_file(path, &json_bytes(ckpt))
}

pub fn read_checkpoint(path: &Path) -> Result<AgentCheckpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ckpt: AgentCheckpoint = serde_json::from_str(&text).map_err(|source| Error::Parse {
        context: path.display().to_string(),
        source,
    })?;
    if ckpt.format != AgentCheckpoint::FORMAT || ckpt.version != AgentCheckpoint::VERSION {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: format!("unsupported checkpoint {} v{}", ckpt.format, ckpt.version),
        });
    }
    Ok(ckpt)
}

/// Writes every checkpoint kept in `result` to `dir/checkpoints/`.
pub fn write_checkpoints(result: &RunResult, dir: &Path) -> Result<()> {
    for (kind, seed, ckpt) in &result.checkpoints {
        write_checkpoint(
            ckpt,
            &dir.join("checkpoints")
                .join(format!("{kind}_seed{seed}.json")),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub agent: AgentKind,
    /// One normalized 5-seed mean per sweep value; `null` without an oracle.
    pub normalized: Vec<Option<f64>>,
    pub eval_mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub fingerprint: String,
    pub cardinality: usize,
    /// Relative to the sweep file's directory.
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema: String,
    pub schema_version: u32,
    pub rislab_version: String,
    pub dimension: SweepDimension,
    pub values: Vec<f64>,
    pub points: Vec<SweepPoint>,
    /// Methods as rows, sweep values as columns.
    pub table: Vec<SweepRow>,
}

impl SweepSummary {
    pub fn from_results(dim: SweepDimension, values: &[f64], results: &[RunResult]) -> Self {
        let points = values
            .iter()
            .zip(results)
            .enumerate()
            .map(|(i, (&value, r))| SweepPoint {
                value,
                fingerprint: r.fingerprint.clone(),
                cardinality: r.cardinality,
                summary: format!("point{i}/summary.json"),
            })
            .collect();
        let agents: Vec<AgentKind> = results
            .first()
            .map(|r| r.policies.iter().map(|p| p.agent).collect())
            .unwrap_or_default();
        let table = agents
            .into_iter()
            .map(|agent| SweepRow {
                agent,
                normalized: results.iter().map(|r| r.normalized(agent)).collect(),
                eval_mean: results
                    .iter()
                    .map(|r| r.eval_mean(agent).unwrap_or(f64::NAN))
                    .collect(),
            })
            .collect();
        Self {
            schema: SWEEP_SCHEMA.into(),
            schema_version: SCHEMA_VERSION,
            rislab_version: crate::VERSION.into(),
            dimension: dim,
            values: values.to_vec(),
            points,
            table,
        }
    }

    /// Plain-text table of normalized rates to 3 decimals.
    pub fn render_table(&self) -> String {
        let mut out = format!("{:<8}", self.dimension.as_str());
        for v in &self.values {
            out.push_str(&format!(" {v:>7}"));
        }
        out.push('\n');
        for row in &self.table {
            out.push_str(&format!("{:<8}", row.agent.as_str()));
            for n in &row.normalized {
                match n {
                    Some(n) => out.push_str(&format!(" {n:>7.3}")),
                    None => out.push_str(&format!(" {:>7}", "-")),
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn write_sweep(
    dim: SweepDimension,
    values: &[f64],
    results: &[RunResult],
    dir: &Path,
) -> Result<PathBuf> {
    for (i, r) in results.iter().enumerate() {
        write_run(r, &dir.join(format!("point{i}")))?;
    }
    let path = dir.join("sweep.json");
    write_file(
        &path,
        &json_bytes(&SweepSummary::from_results(dim, values, results)),
    )?;
    Ok(path)
}

pub fn read_sweep_json(path: &Path) -> Result<SweepSummary> {
    read_json(path, SWEEP_SCHEMA)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::CommonConfig;
    use crate::environment::Environment;
    use crate::harness::{run_experiment, ScheduleConfig};

    fn log(rewards: &[f64]) -> MetricsLog {
        let mut log = MetricsLog::new();
        for (i, &r) in rewards.iter().enumerate() {
            log.push(i as u64, i % 3, r).unwrap();
        }
        log
    }

    #[test]
    fn empty_document_is_default() {
        let cfg = parse_config_str("", "empty").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(parse_config_str("{}", "braces").unwrap(), cfg);
        let env = Environment::new(cfg.system.clone()).unwrap();
        assert_eq!(env.codebook().len(), 4);
        assert_eq!(cfg.system.kappa1_db, 30.0);
        assert_eq!(cfg.system.kappa2_db, 30.0);
        assert_eq!(cfg.common.epsilon, 0.3);
        assert_eq!(cfg.common.dropout_p, 0.2);
        assert_eq!(cfg.drp.learning_rate, 0.001);
        assert_eq!(cfg.dqn.learning_rate, 0.0002);
        assert_eq!(cfg.dqn.batch_size, 128);
        assert_eq!(cfg.dqn.tau, 0.18);
        assert_eq!(cfg.dqn.target_update_every, 100);
        assert_eq!(cfg.system.noise_dbm, -110.0);
        assert_eq!(cfg.system.carrier_hz, 35e9);
        assert_eq!(cfg.system.n_group, 16);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config_str(r#"{"fooo": 1}"#, "x")
            .unwrap_err()
            .to_string();
        assert!(err.contains("fooo"), "{err}");
        let err = parse_config_str(r#"{"system": {"fooo": 1}}"#, "x")
            .unwrap_err()
            .to_string();
        assert!(err.contains("fooo"), "{err}");
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_config_str("{\n  \"seeds\": [1,\n}", "cfg.json")
            .unwrap_err()
            .to_string();
        assert!(err.contains("cfg.json") && err.contains("line 3"), "{err}");
    }

    #[test]
    fn bad_grouping_names_both_values() {
        let err = parse_config_str(r#"{"system": {"n_group": 5}}"#, "x")
            .unwrap_err()
            .to_string();
        assert!(err.contains('5') && err.contains("32"), "{err}");
    }

    #[test]
    fn config_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.system.power_dbm = 27.5;
        cfg.schedule.train_steps = Some(123);
        cfg.seeds = vec![9, 10];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        write_config(&cfg, &path).unwrap();
        assert_eq!(parse_config(&path).unwrap(), cfg);
    }

    #[test]
    fn csv_shapes() {
        let empty = String::from_utf8(training_csv_bytes(&MetricsLog::new())).unwrap();
        assert_eq!(empty, "step,action_index,reward\n");
        let three = String::from_utf8(training_csv_bytes(&log(&[1.0, 0.1, 2.5e-9]))).unwrap();
        assert_eq!(three.lines().count(), 4);
        assert_eq!(three.lines().nth(2).unwrap(), "1,1,0.1");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rewards = [std::f64::consts::PI, 1.0 / 3.0, 1e-300, 12345.678901234567];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        write_training_csv(&log(&rewards), &path).unwrap();
        assert_eq!(
            read_training_csv(&path).unwrap().rewards(),
            rewards.to_vec()
        );
    }

    #[test]
    fn csv_missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        fs::write(&path, "step,reward\n0,1.0\n").unwrap();
        let err = read_training_csv(&path).unwrap_err().to_string();
        assert!(err.contains("action_index"), "{err}");
    }

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            agents: vec![AgentKind::Drp, AgentKind::Ucb],
            seeds: vec![0, 1],
            schedule: ScheduleConfig {
                train_steps: Some(25),
                eval_steps: 10,
                ucb_train_steps: Some(30),
            },
            common: CommonConfig {
                hidden: vec![8],
                ..CommonConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn run_bundle_round_trip_and_stability() {
        let res = run_experiment(&small()).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let summary_path = write_run(&res, a.path()).unwrap();
        write_run(&run_experiment(&small()).unwrap(), b.path()).unwrap();

        let summary = read_summary_json(&summary_path).unwrap();
        assert_eq!(summary.policies, res.policies);
        assert_eq!(summary.config, res.config);
        for c in &summary.curves {
            let log = read_training_csv(&a.path().join(&c.path)).unwrap();
            assert_eq!(log.len(), c.rows);
            assert_eq!(Some(&log), res.series(c.agent, c.seed));
            let other = fs::read(b.path().join(&c.path)).unwrap();
            assert_eq!(fs::read(a.path().join(&c.path)).unwrap(), other);
        }
        assert_eq!(summary.curves.len(), 4);
        assert_eq!(
            fs::read(&summary_path).unwrap(),
            fs::read(b.path().join("summary.json")).unwrap()
        );
    }

    #[test]
    fn oracle_only_summary_is_exactly_one() {
        let mut ec = small();
        ec.agents = vec![AgentKind::Oracle];
        let res = run_experiment(&ec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let s = read_summary_json(&write_run(&res, dir.path()).unwrap()).unwrap();
        assert_eq!(
            s.policy(AgentKind::Oracle).unwrap().normalized_mean,
            Some(1.0)
        );
    }

    #[test]
    fn checkpoints_round_trip() {
        let res = crate::harness::run_experiment_with(
            &small(),
            crate::harness::RunOptions {
                keep_checkpoints: true,
            },
        )
        .unwrap();
        assert_eq!(res.checkpoints.len(), 4);
        let dir = tempfile::tempdir().unwrap();
        write_checkpoints(&res, dir.path()).unwrap();
        let back = read_checkpoint(&dir.path().join("checkpoints/drp_seed1.json")).unwrap();
        let (_, _, orig) = res
            .checkpoints
            .iter()
            .find(|(k, s, _)| *k == AgentKind::Drp && *s == 1)
            .unwrap();
        assert_eq!(&back, orig);
        assert!(back.network.is_some());
    }

    #[test]
    fn summary_schema_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        fs::write(&path, r#"{"schema": "other"}"#).unwrap();
        let err = read_summary_json(&path).unwrap_err().to_string();
        assert!(err.contains("rislab-summary"), "{err}");
    }

    #[test]
    fn sweep_table_shape() {
        let values = [10.0, 40.0];
        let results = crate::harness::sweep(&small(), SweepDimension::PowerDbm, &values).unwrap();
        let s = SweepSummary::from_results(SweepDimension::PowerDbm, &values, &results);
        assert_eq!(s.table.len(), 4);
        assert!(s.table.iter().all(|r| r.normalized.len() == 2));
        let oracle = s
            .table
            .iter()
            .find(|r| r.agent == AgentKind::Oracle)
            .unwrap();
        assert!(oracle.normalized.iter().all(|&n| n == Some(1.0)));
        let text = s.render_table();
        assert!(
            text.contains("1.000") && text.lines().count() == 5,
            "{text}"
        );

        let dir = tempfile::tempdir().unwrap();
        let path = write_sweep(SweepDimension::PowerDbm, &values, &results, dir.path()).unwrap();
        assert_eq!(read_sweep_json(&path).unwrap(), s);
        for p in &s.points {
            assert!(dir.path().join(&p.summary).exists());
        }
    }
}
