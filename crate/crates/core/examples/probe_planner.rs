//! Scratch measurements for planner test calibration. Not part of the crate.

use dynlab::dynamics::{DynamicsConfig, DynamicsModel, LatentState};
use dynlab::envs::{EnvConfig, SimState, ACTIONS};
use dynlab::planner::{
    evaluate_policy, plan_model_search, plan_true_search, PlanPolicy, PlannerConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    // 1) Squeeze scenario pick rate under the value tie-break.
    let mut cfg = EnvConfig::billiards_control();
    cfg.action_impulse = 0.05;
    let s = SimState {
        positions: vec![
            [0.5435957292149698, 0.1490604876770652],
            [0.6097360909636742, 0.45333947319067824],
            [0.1998066294463367, 0.6097703438371784],
        ],
        velocities: vec![
            [0.0025633590902876674, -0.04095596476437322],
            [-0.09550251782481979, -0.15008960968443672],
            [-0.0492044016699683, -6.298510333373197e-5],
        ],
        radii: vec![cfg.radius; 3],
        masses: vec![1.0, 30.0, 1.0],
    };
    let plan = PlannerConfig::true_env(0);
    let mut picks = [0usize; 9];
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        picks[plan_true_search(&s, &cfg, &plan, &mut rng).unwrap().action] += 1;
    }
    println!("squeeze picks {picks:?}");

    // 2) Budget-1 uniformity over 900 seeds.
    let base = EnvConfig::billiards_control();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let start = dynlab::envs::sample_initial_state(&base, &mut rng).unwrap();
    let mut b1 = PlannerConfig::true_env(0);
    b1.budget = 1;
    let mut counts = [0usize; 9];
    for seed in 0..900 {
        let mut prng = ChaCha8Rng::seed_from_u64(seed);
        counts[plan_true_search(&start, &base, &b1, &mut prng).unwrap().action] += 1;
    }
    println!("budget-1 counts {counts:?}");

    // 3) Untrained model (constant reward 0.5): uniformity over 90 seeds,
    //    reduced depth/budget for speed; also timing.
    let mc = DynamicsConfig {
        objects: 3,
        latent_dim: 4,
        actions: Some(ACTIONS),
        separate_proposal_std: true,
        mask_velocity: false,
    };
    let model = DynamicsModel::new(mc, 11).unwrap();
    let z = LatentState::from_sim(&start, 4);
    let mut mp = PlannerConfig::model(0);
    mp.budget = 20;
    mp.depth = 5;
    let mut mcounts = [0usize; 9];
    let t0 = Instant::now();
    for seed in 0..90 {
        let mut prng = ChaCha8Rng::seed_from_u64(seed);
        mcounts[plan_model_search(&z, &model, &mp, &mut prng).unwrap().action] += 1;
    }
    println!("model uniform counts {mcounts:?} ({:?})", t0.elapsed());

    // 4) Policy gap at 30 episodes.
    let r = evaluate_policy(&PlanPolicy::Random, &base, 30, 100, 77_000).unwrap();
    let m = evaluate_policy(
        &PlanPolicy::MctsTrue(PlannerConfig::true_env(0)),
        &base,
        30,
        100,
        77_000,
    )
    .unwrap();
    let se = (r.std_err * r.std_err + m.std_err * m.std_err).sqrt();
    println!(
        "random {:.3}+-{:.3} mcts {:.3}+-{:.3} gap/se {:.1}",
        r.mean,
        r.std_err,
        m.mean,
        m.std_err,
        (m.mean - r.mean) / se
    );
}
