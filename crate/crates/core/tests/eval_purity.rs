//! Eval mode: deterministic selection and no learning.

use rand::SeedableRng;
use rislab::agents::{AgentKind, CommonConfig, Mode};
use rislab::harness::{evaluate, make_agent, train, ExperimentConfig};
use rislab::{Environment, SimRng};

fn config() -> ExperimentConfig {
    let mut ec = ExperimentConfig {
        common: CommonConfig {
            hidden: vec![16, 16],
            ..CommonConfig::default()
        },
        ..ExperimentConfig::default()
    };
    ec.dqn.batch_size = 8;
    ec.dqn.target_update_every = 5;
    ec
}

#[test]
fn eval_mode_is_pure() {
    let ec = config();
    let env = Environment::new(ec.system.clone()).unwrap();
    for kind in [AgentKind::Drp, AgentKind::Dqn, AgentKind::Ucb] {
        let mut agent = make_agent(kind, &env, &ec, 1).unwrap();
        train(agent.as_mut(), &env, 60, &mut SimRng::seed_from_u64(2)).unwrap();
        agent.set_mode(Mode::Eval);
        let before = agent.checkpoint();

        let mut rng = SimRng::seed_from_u64(3);
        for _ in 0..20 {
            let step = env.step(&mut rng);
            let a = agent.select(&step).unwrap();
            for _ in 0..3 {
                assert_eq!(agent.select(&step).unwrap(), a, "{kind}");
            }
            let next = env.step(&mut rng);
            agent
                .observe(&step.state, a, step.reward(a), &next.state)
                .unwrap();
        }
        assert_eq!(agent.checkpoint(), before, "{kind} learned in eval mode");

        let x = evaluate(agent.as_mut(), &env, 30, &mut SimRng::seed_from_u64(4)).unwrap();
        let y = evaluate(agent.as_mut(), &env, 30, &mut SimRng::seed_from_u64(4)).unwrap();
        assert_eq!(x, y, "{kind}");
        assert_eq!(agent.checkpoint(), before, "{kind} changed by evaluate");
    }
}

#[test]
fn train_mode_does_learn() {
    let ec = config();
    let env = Environment::new(ec.system.clone()).unwrap();
    for kind in [AgentKind::Drp, AgentKind::Dqn, AgentKind::Ucb] {
        let mut agent = make_agent(kind, &env, &ec, 1).unwrap();
        let before = agent.checkpoint();
        train(agent.as_mut(), &env, 20, &mut SimRng::seed_from_u64(2)).unwrap();
        assert_ne!(agent.checkpoint(), before, "{kind}");
    }
}
