//! Experimental protocol: train with exploration, evaluate greedily on a
//! fresh channel stream, and normalize against the exhaustive oracle run on
//! that same stream.
//!
//! Per seed, every policy (learners, the random baseline and the oracle)
//! is evaluated on the identical channel sequence drawn from the seed's
//! evaluation stream, so each normalized rate is at most 1 exactly.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::{
    Agent, AgentCheckpoint, AgentKind, CommonConfig, DqnAgent, DqnConfig, DrpAgent, DrpConfig,
    ExhaustiveAgent, Mode, RandomAgent, UcbAgent,
};
use crate::environment::{Environment, SystemConfig, MAX_ENUMERATION};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

pub const DEFAULT_TRAIN_MULTIPLIER: u64 = 50;
pub const DEFAULT_UCB_MULTIPLIER: u64 = 500;
pub const DEFAULT_EVAL_STEPS: u64 = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    /// Training length for DRP / DQN; `None` means `50·card(A)`.
    pub train_steps: Option<u64>,
    pub eval_steps: u64,
    /// Training length for UCB; `None` means `500·card(A)`.
    pub ucb_train_steps: Option<u64>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            train_steps: None,
            eval_steps: DEFAULT_EVAL_STEPS,
            ucb_train_steps: None,
        }
    }
}

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub agents: Vec<AgentKind>,
    pub common: CommonConfig,
    pub drp: DrpConfig,
    pub dqn: DqnConfig,
    pub schedule: ScheduleConfig,
    pub seeds: Vec<u64>,
    pub compute_oracle: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig::default(),
            agents: vec![AgentKind::Drp, AgentKind::Dqn, AgentKind::Ucb],
            common: CommonConfig::default(),
            drp: DrpConfig::default(),
            dqn: DqnConfig::default(),
            schedule: ScheduleConfig::default(),
            seeds: vec![0, 1, 2, 3, 4],
            compute_oracle: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.common.validate()?;
        self.dqn.validate()?;
        if !(self.drp.learning_rate > 0.0 && self.drp.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "drp.learning_rate must be positive, got {}",
                self.drp.learning_rate
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.agents.is_empty() {
            return Err(Error::Config("at least one agent is required".into()));
        }
        let mut sorted = self.agents.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.agents.len() {
            return Err(Error::Config(format!(
                "duplicate agents in {:?}",
                self.agents
            )));
        }
        if self.schedule.eval_steps == 0
            || self.schedule.train_steps == Some(0)
            || self.schedule.ucb_train_steps == Some(0)
        {
            return Err(Error::Config("step counts must be positive".into()));
        }
        let env = Environment::new(self.system.clone())?;
        let needs_oracle = self.compute_oracle || self.agents.contains(&AgentKind::Oracle);
        if needs_oracle && env.space().cardinality() > MAX_ENUMERATION {
            return Err(Error::Config(format!(
                "exhaustive search over {} actions exceeds the limit of {MAX_ENUMERATION}",
                env.space().cardinality()
            )));
        }
        Ok(())
    }

    pub fn train_steps(&self, cardinality: usize) -> u64 {
        self.schedule
            .train_steps
            .unwrap_or(DEFAULT_TRAIN_MULTIPLIER * cardinality as u64)
    }

    pub fn ucb_train_steps(&self, cardinality: usize) -> u64 {
        self.schedule
            .ucb_train_steps
            .unwrap_or(DEFAULT_UCB_MULTIPLIER * cardinality as u64)
    }

    pub fn steps_for(&self, kind: AgentKind, cardinality: usize) -> u64 {
        match kind {
            AgentKind::Ucb => self.ucb_train_steps(cardinality),
            _ => self.train_steps(cardinality),
        }
    }

    /// Hex SHA-256 prefix of the canonical JSON encoding.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub step: u64,
    pub action_index: usize,
    pub reward: f64,
}

/// Append-only per-step record of a training run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsLog {
    entries: Vec<LogEntry>,
}

impl MetricsLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: u64, action_index: usize, reward: f64) -> Result<()> {
        if let Some(last) = self.entries.last() {
            if step <= last.step {
                return Err(Error::Domain(format!(
                    "log steps must increase: {step} after {}",
                    last.step
                )));
            }
        }
        self.entries.push(LogEntry {
            step,
            action_index,
            reward,
        });
        Ok(())
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.reward).collect()
    }

    pub fn mean_reward(&self) -> Option<f64> {
        (!self.entries.is_empty())
            .then(|| self.entries.iter().map(|e| e.reward).sum::<f64>() / self.len() as f64)
    }
}

/// Runs `steps` interactions with exploration active, logging every
/// `(action, reward)`. Draws `steps + 1` channel blocks from `rng`.
pub fn train<R: Rng + ?Sized>(
    agent: &mut dyn Agent,
    env: &Environment,
    steps: u64,
    rng: &mut R,
) -> Result<MetricsLog> {
    agent.set_mode(Mode::Train);
    let mut log = MetricsLog::new();
    if steps == 0 {
        return Ok(log);
    }
    let mut step = env.step(rng);
    for t in 0..steps {
        let action = agent.select(&step)?;
        let reward = step.reward(action);
        let next = env.step(rng);
        agent.observe(&step.state, action, reward, &next.state)?;
        log.push(t, action, reward)?;
        step = next;
    }
    Ok(log)
}

/// Per-step rewards of the greedy policy over `steps` fresh channel blocks.
pub fn evaluate_rewards<R: Rng + ?Sized>(
    agent: &mut dyn Agent,
    env: &Environment,
    steps: u64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    agent.set_mode(Mode::Eval);
    (0..steps)
        .map(|_| {
            let step = env.step(rng);
            agent.select(&step).map(|a| step.reward(a))
        })
        .collect()
}

/// Mean sum rate of the greedy policy over `steps` fresh channel blocks.
pub fn evaluate<R: Rng + ?Sized>(
    agent: &mut dyn Agent,
    env: &Environment,
    steps: u64,
    rng: &mut R,
) -> Result<f64> {
    let rewards = evaluate_rewards(agent, env, steps, rng)?;
    if rewards.is_empty() {
        return Err(Error::Domain("evaluation needs at least one step".into()));
    }
    Ok(rewards.iter().sum::<f64>() / rewards.len() as f64)
}

pub fn normalized_rate(agent_mean: f64, oracle_mean: f64) -> Result<f64> {
    if oracle_mean.is_nan() || oracle_mean <= 0.0 {
        return Err(Error::Domain(format!(
            "oracle mean must be positive to normalize, got {oracle_mean}"
        )));
    }
    Ok(agent_mean / oracle_mean)
}

/// Trailing-window mean and population standard deviation. Position `i`
/// covers the last `min(i + 1, window)` values.
pub fn rolling_mean(series: &[f64], window: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if window == 0 {
        return Err(Error::Domain("rolling window must be >= 1".into()));
    }
    let mut means = Vec::with_capacity(series.len());
    let mut stds = Vec::with_capacity(series.len());
    for i in 0..series.len() {
        let w = &series[(i + 1).saturating_sub(window)..=i];
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        means.push(mean);
        stds.push(var.sqrt());
    }
    Ok((means, stds))
}

/// Mean and sample standard deviation (`n − 1`; zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn make_agent(
    kind: AgentKind,
    env: &Environment,
    ec: &ExperimentConfig,
    seed: u64,
) -> Result<Box<dyn Agent>> {
    let (state_len, n) = (env.state_len(), env.space().cardinality());
    let mut init = stream(seed, Stream::AgentInit);
    let explore = stream(seed, Stream::AgentExplore);
    Ok(match kind {
        AgentKind::Drp => Box::new(DrpAgent::new(
            state_len, n, &ec.common, &ec.drp, &mut init, explore,
        )?),
        AgentKind::Dqn => Box::new(DqnAgent::new(
            state_len,
            n,
            &ec.common,
            &ec.dqn,
            &mut init,
            explore,
            stream(seed, Stream::Replay),
        )?),
        AgentKind::Ucb => Box::new(UcbAgent::new(n)),
        AgentKind::Random => Box::new(RandomAgent::new(n, explore)),
        AgentKind::Oracle => Box::new(ExhaustiveAgent::new()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSeries {
    pub agent: AgentKind,
    pub seed: u64,
    pub log: MetricsLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub agent: AgentKind,
    pub train_steps: u64,
    pub eval_mean_per_seed: Vec<f64>,
    pub eval_mean: f64,
    pub eval_std: f64,
    pub normalized_per_seed: Option<Vec<f64>>,
    pub normalized_mean: Option<f64>,
    pub normalized_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub fingerprint: String,
    pub cardinality: usize,
    pub state_len: usize,
    /// Configured agents in order, then the random baseline and the oracle.
    pub policies: Vec<PolicySummary>,
    pub training: Vec<TrainingSeries>,
    pub checkpoints: Vec<(AgentKind, u64, AgentCheckpoint)>,
    pub wall_clock_secs: f64,
}

impl RunResult {
    pub fn policy(&self, kind: AgentKind) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.agent == kind)
    }

    pub fn normalized(&self, kind: AgentKind) -> Option<f64> {
        self.policy(kind).and_then(|p| p.normalized_mean)
    }

    pub fn eval_mean(&self, kind: AgentKind) -> Option<f64> {
        self.policy(kind).map(|p| p.eval_mean)
    }

    pub fn series(&self, kind: AgentKind, seed: u64) -> Option<&MetricsLog> {
        self.training
            .iter()
            .find(|s| s.agent == kind && s.seed == seed)
            .map(|s| &s.log)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub keep_checkpoints: bool,
}

struct SeedOutcome {
    eval: Vec<(AgentKind, f64)>,
    oracle: Option<f64>,
    training: Vec<TrainingSeries>,
    checkpoints: Vec<(AgentKind, u64, AgentCheckpoint)>,
}

fn run_seed(
    ec: &ExperimentConfig,
    env: &Environment,
    seed: u64,
    opts: RunOptions,
) -> Result<SeedOutcome> {
    let card = env.space().cardinality();
    let eval_steps = ec.schedule.eval_steps;
    let eval_stream = || stream(seed, Stream::EvalChannels);
    let mut out = SeedOutcome {
        eval: Vec::new(),
        oracle: None,
        training: Vec::new(),
        checkpoints: Vec::new(),
    };

    for &kind in &ec.agents {
        let mut agent = make_agent(kind, env, ec, seed)?;
        let steps = ec.steps_for(kind, card);
        let log = train(
            agent.as_mut(),
            env,
            steps,
            &mut stream(seed, Stream::TrainChannels),
        )?;
        out.training.push(TrainingSeries {
            agent: kind,
            seed,
            log,
        });
        let mean = if kind == AgentKind::Random {
            let mut baseline = RandomAgent::new(card, stream(seed, Stream::RandomBaseline));
            evaluate(&mut baseline, env, eval_steps, &mut eval_stream())?
        } else {
            evaluate(agent.as_mut(), env, eval_steps, &mut eval_stream())?
        };
        out.eval.push((kind, mean));
        if opts.keep_checkpoints {
            out.checkpoints.push((kind, seed, agent.checkpoint()));
        }
    }
    if !ec.agents.contains(&AgentKind::Random) {
        let mut baseline = RandomAgent::new(card, stream(seed, Stream::RandomBaseline));
        let mean = evaluate(&mut baseline, env, eval_steps, &mut eval_stream())?;
        out.eval.push((AgentKind::Random, mean));
    }
    if ec.compute_oracle || ec.agents.contains(&AgentKind::Oracle) {
        let oracle = match out.eval.iter().find(|(k, _)| *k == AgentKind::Oracle) {
            Some(&(_, m)) => m,
            None => {
                let m = evaluate(
                    &mut ExhaustiveAgent::new(),
                    env,
                    eval_steps,
                    &mut eval_stream(),
                )?;
                out.eval.push((AgentKind::Oracle, m));
                m
            }
        };
        out.oracle = Some(oracle);
    }
    Ok(out)
}

pub fn run_experiment(ec: &ExperimentConfig) -> Result<RunResult> {
    run_experiment_with(ec, RunOptions::default())
}

pub fn run_experiment_with(ec: &ExperimentConfig, opts: RunOptions) -> Result<RunResult> {
    let started = Instant::now();
    ec.validate()?;
    let env = Environment::new(ec.system.clone())?;
    let card = env.space().cardinality();

    let outcomes = ec
        .seeds
        .iter()
        .map(|&seed| run_seed(ec, &env, seed, opts))
        .collect::<Result<Vec<_>>>()?;

    let kinds: Vec<AgentKind> = outcomes[0].eval.iter().map(|(k, _)| *k).collect();
    let mut policies = Vec::with_capacity(kinds.len());
    for kind in kinds {
        let per_seed: Vec<f64> = outcomes
            .iter()
            .map(|o| {
                o.eval
                    .iter()
                    .find(|(k, _)| *k == kind)
                    .expect("same policies per seed")
                    .1
            })
            .collect();
        let (eval_mean, eval_std) = mean_std(&per_seed);
        let normalized = outcomes
            .iter()
            .zip(&per_seed)
            .map(|(o, &m)| o.oracle.map(|orc| normalized_rate(m, orc)).transpose())
            .collect::<Result<Option<Vec<f64>>>>()?;
        let stats = normalized.as_deref().map(mean_std);
        let trained = ec.agents.contains(&kind);
        policies.push(PolicySummary {
            agent: kind,
            train_steps: if trained { ec.steps_for(kind, card) } else { 0 },
            eval_mean_per_seed: per_seed,
            eval_mean,
            eval_std,
            normalized_mean: stats.map(|s| s.0),
            normalized_std: stats.map(|s| s.1),
            normalized_per_seed: normalized,
        });
    }

    let mut training = Vec::new();
    let mut checkpoints = Vec::new();
    for o in outcomes {
        training.extend(o.training);
        checkpoints.extend(o.checkpoints);
    }
    Ok(RunResult {
        config: ec.clone(),
        fingerprint: ec.fingerprint(),
        cardinality: card,
        state_len: env.state_len(),
        policies,
        training,
        checkpoints,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepDimension {
    PowerDbm,
    /// Total RIS element count `N_tot`.
    Elements,
}

impl SweepDimension {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepDimension::PowerDbm => "power_dbm",
            SweepDimension::Elements => "elements",
        }
    }
}

/// `ec` with one swept field replaced.
pub fn sweep_point(
    ec: &ExperimentConfig,
    dim: SweepDimension,
    value: f64,
) -> Result<ExperimentConfig> {
    let mut point = ec.clone();
    match dim {
        SweepDimension::PowerDbm => point.system.power_dbm = value,
        SweepDimension::Elements => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(Error::Config(format!(
                    "element count must be a positive integer, got {value}"
                )));
            }
            point.system.ris_elements_total = value as usize;
        }
    }
    Ok(point)
}

pub fn sweep(ec: &ExperimentConfig, dim: SweepDimension, values: &[f64]) -> Result<Vec<RunResult>> {
    sweep_with(ec, dim, values, RunOptions::default())
}

pub fn sweep_with(
    ec: &ExperimentConfig,
    dim: SweepDimension,
    values: &[f64],
    opts: RunOptions,
) -> Result<Vec<RunResult>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|&v| run_experiment_with(&sweep_point(ec, dim, v)?, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use rand::SeedableRng;

    fn quick(agents: Vec<AgentKind>, seeds: Vec<u64>) -> ExperimentConfig {
        ExperimentConfig {
            agents,
            seeds,
            schedule: ScheduleConfig {
                train_steps: Some(40),
                eval_steps: 20,
                ucb_train_steps: Some(40),
            },
            common: CommonConfig {
                hidden: vec![8],
                ..CommonConfig::default()
            },
            dqn: DqnConfig {
                batch_size: 8,
                ..DqnConfig::default()
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn rolling_examples() {
        let (m, s) = rolling_mean(&[1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(m, vec![1.0, 1.5, 2.5]);
        assert_eq!(s, vec![0.0, 0.5, 0.5]);
        let (m, s) = rolling_mean(&[4.0; 10], 3).unwrap();
        assert!(m.iter().all(|&x| x == 4.0) && s.iter().all(|&x| x == 0.0));
        let series = [0.3, -1.0, 7.5, 2.0];
        assert_eq!(rolling_mean(&series, 1).unwrap().0, series.to_vec());
        assert!(rolling_mean(&series, 0).is_err());
    }

    #[test]
    fn normalization() {
        assert_eq!(normalized_rate(3.0, 3.0).unwrap(), 1.0);
        assert_eq!(normalized_rate(1.0, 4.0).unwrap(), 0.25);
        assert!(normalized_rate(1.0, 0.0).is_err());
        assert!(normalized_rate(1.0, -2.0).is_err());
    }

    #[test]
    fn metrics_log_is_strictly_increasing() {
        let mut log = MetricsLog::new();
        log.push(0, 1, 2.0).unwrap();
        log.push(3, 1, 2.0).unwrap();
        assert!(log.push(3, 0, 1.0).is_err());
        assert_eq!(log.len(), 2);
    }

    #[test]
    fn zero_training_steps() {
        let env = Environment::new(SystemConfig::default()).unwrap();
        let mut agent = UcbAgent::new(env.space().cardinality());
        let log = train(&mut agent, &env, 0, &mut SimRng::seed_from_u64(0)).unwrap();
        assert!(log.is_empty());
        assert_eq!(agent.state().t, 0);
    }

    #[test]
    fn training_is_deterministic() {
        let ec = quick(vec![AgentKind::Drp], vec![3]);
        let env = Environment::new(ec.system.clone()).unwrap();
        let run = || {
            let mut a = make_agent(AgentKind::Drp, &env, &ec, 3).unwrap();
            train(a.as_mut(), &env, 50, &mut SimRng::seed_from_u64(8)).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn oracle_evaluation_is_mean_of_optima() {
        let env = Environment::new(SystemConfig::default()).unwrap();
        let mean = evaluate(
            &mut ExhaustiveAgent::new(),
            &env,
            25,
            &mut SimRng::seed_from_u64(1),
        )
        .unwrap();
        let mut rng = SimRng::seed_from_u64(1);
        let direct: f64 = (0..25)
            .map(|_| env.step(&mut rng).best().unwrap().1)
            .sum::<f64>()
            / 25.0;
        assert_eq!(mean, direct);
    }

    #[test]
    fn deterministic_agent_eval_repeats() {
        let env = Environment::new(SystemConfig::default()).unwrap();
        let ec = quick(vec![AgentKind::Drp], vec![0]);
        let mut agent = make_agent(AgentKind::Drp, &env, &ec, 0).unwrap();
        train(agent.as_mut(), &env, 30, &mut SimRng::seed_from_u64(2)).unwrap();
        let a = evaluate(agent.as_mut(), &env, 40, &mut SimRng::seed_from_u64(5)).unwrap();
        let b = evaluate(agent.as_mut(), &env, 40, &mut SimRng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_eval_is_dominated_by_oracle() {
        let env = Environment::new(SystemConfig::default()).unwrap();
        let mut random = RandomAgent::new(16, SimRng::seed_from_u64(0));
        let r = evaluate(&mut random, &env, 100, &mut SimRng::seed_from_u64(6)).unwrap();
        let o = evaluate(
            &mut ExhaustiveAgent::new(),
            &env,
            100,
            &mut SimRng::seed_from_u64(6),
        )
        .unwrap();
        assert!(r <= o);
    }

    #[test]
    fn oracle_only_run_normalizes_to_one() {
        let ec = quick(vec![AgentKind::Oracle], vec![7]);
        let res = run_experiment(&ec).unwrap();
        assert_eq!(res.normalized(AgentKind::Oracle), Some(1.0));
        let random = res.normalized(AgentKind::Random).unwrap();
        assert!(random <= 1.0);
    }

    #[test]
    fn schedule_and_fingerprint() {
        let ec = quick(vec![AgentKind::Drp, AgentKind::Ucb], vec![1, 2]);
        let res = run_experiment(&ec).unwrap();
        assert_eq!(res.series(AgentKind::Drp, 1).unwrap().len(), 40);
        assert_eq!(res.policies.len(), 4);
        for p in &res.policies {
            let n = p.normalized_mean.unwrap();
            assert!(n <= 1.0, "{:?} {n}", p.agent);
            for &v in p.normalized_per_seed.as_ref().unwrap() {
                assert!(v <= 1.0);
            }
        }
        assert_ne!(res.series(AgentKind::Drp, 1), res.series(AgentKind::Drp, 2));

        let default = ExperimentConfig::default();
        assert_eq!(default.train_steps(16), 800);
        assert_eq!(default.ucb_train_steps(16), 8000);
        assert_eq!(default.schedule.eval_steps, 300);

        let mut other = ec.clone();
        assert_eq!(other.fingerprint(), ec.fingerprint());
        other.system.power_dbm = 41.0;
        assert_ne!(other.fingerprint(), ec.fingerprint());
        let mut other = ec.clone();
        other.seeds.push(9);
        assert_ne!(other.fingerprint(), ec.fingerprint());
    }

    #[test]
    fn sweep_points() {
        let ec = ExperimentConfig::default();
        let cards: Vec<usize> = [32.0, 64.0, 96.0, 128.0]
            .iter()
            .map(|&v| {
                let p = sweep_point(&ec, SweepDimension::Elements, v).unwrap();
                Environment::new(p.system).unwrap().space().cardinality()
            })
            .collect();
        assert_eq!(cards, vec![16, 64, 256, 1024]);
        assert!(sweep_point(&ec, SweepDimension::Elements, 31.5).is_err());
        let p = sweep_point(&ec, SweepDimension::PowerDbm, 10.0).unwrap();
        assert_eq!(p.system.power_dbm, 10.0);
        assert!(sweep(&ec, SweepDimension::PowerDbm, &[]).is_err());
    }

    #[test]
    fn single_value_sweep_equals_run() {
        let ec = quick(vec![AgentKind::Ucb], vec![4]);
        let swept = sweep(&ec, SweepDimension::PowerDbm, &[ec.system.power_dbm]).unwrap();
        let direct = run_experiment(&ec).unwrap();
        assert_eq!(swept.len(), 1);
        assert_eq!(swept[0].policies, direct.policies);
        assert_eq!(swept[0].training, direct.training);
        assert_eq!(swept[0].fingerprint, direct.fingerprint);
    }

    #[test]
    fn validation_errors() {
        let mut ec = quick(vec![AgentKind::Drp], vec![]);
        assert!(ec.validate().is_err());
        ec.seeds = vec![0];
        ec.agents = vec![AgentKind::Drp, AgentKind::Drp];
        assert!(ec.validate().is_err());
        ec.agents = vec![AgentKind::Drp];
        ec.schedule.train_steps = Some(0);
        assert!(ec.validate().is_err());
    }
}
