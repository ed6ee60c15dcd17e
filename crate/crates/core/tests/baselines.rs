//! Reference policies: ordering and Monte-Carlo agreement.

use rand::SeedableRng;
use rislab::agents::{ExhaustiveAgent, RandomAgent, UcbAgent};
use rislab::harness::{evaluate_rewards, train};
use rislab::{Environment, SimRng, SystemConfig};

#[test]
fn random_training_mean_matches_uniform_play() {
    let env = Environment::new(SystemConfig::default()).unwrap();
    let n = env.space().cardinality();
    let mut agent = RandomAgent::new(n, SimRng::seed_from_u64(1));
    let log = train(&mut agent, &env, 5000, &mut SimRng::seed_from_u64(2)).unwrap();
    let agent_mean = log.mean_reward().unwrap();

    // Expected reward of a uniform action, averaged over independent blocks.
    let mut rng = SimRng::seed_from_u64(99);
    let blocks = 5000;
    let exact: f64 = (0..blocks)
        .map(|_| {
            let step = env.step(&mut rng);
            (0..n).map(|a| step.reward(a)).sum::<f64>() / n as f64
        })
        .sum::<f64>()
        / blocks as f64;
    let rel = (agent_mean - exact).abs() / exact;
    assert!(
        rel < 0.02,
        "random {agent_mean} vs uniform play {exact} ({rel})"
    );
}

#[test]
fn per_step_ordering_on_a_shared_stream() {
    for n_tot in [32, 64] {
        let env = Environment::new(SystemConfig {
            ris_elements_total: n_tot,
            ..SystemConfig::default()
        })
        .unwrap();
        let n = env.space().cardinality();
        let mut ucb = UcbAgent::new(n);
        train(&mut ucb, &env, 20 * n as u64, &mut SimRng::seed_from_u64(3)).unwrap();

        let eval = |agent: &mut dyn rislab::Agent| {
            evaluate_rewards(agent, &env, 200, &mut SimRng::seed_from_u64(4)).unwrap()
        };
        let oracle = eval(&mut ExhaustiveAgent::new());
        let random = eval(&mut RandomAgent::new(n, SimRng::seed_from_u64(5)));
        let learned = eval(&mut ucb);
        for t in 0..200 {
            assert!(random[t] <= oracle[t] && learned[t] <= oracle[t]);
            assert!(random[t] >= 0.0);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&random) < mean(&learned), "n_tot {n_tot}");
        assert!(mean(&learned) <= mean(&oracle));
    }
}
