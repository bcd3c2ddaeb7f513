//! End-to-end checks of the rollout trainer: exact reduction to one-step
//! likelihood, bit-level determinism, and desk-scale learning runs on
//! hand-built and simulated data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dynlab::dynamics::{build_forward, DynamicsConfig, DynamicsModel, LatentState};
use dynlab::envs::{generate_dataset, Dataset, EnvConfig, SimState};
use dynlab::nnkit::{Tape, Tensor};
use dynlab::training::{
    nll_learned, one_step_position_rmse, reward_auc, rollout_loss_graph,
    train_dynamics_supervised, train_reward_model, LossVariant, TrainConfig,
};

/// Sequences of straight-line motion, no walls, no interactions: positions
/// advance by a constant velocity each frame. The simplest dataset a
/// transition model must nail. The spread is kept narrow (positions near the
/// center, slow velocities) so the tanh trunk stays close to its linear
/// regime and a short run can push the fit to the noise floor.
fn linear_dataset(n: usize, t: usize, seed: u64) -> Dataset {
    let cfg = EnvConfig::billiards();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(n);
    for _ in 0..n {
        let mut frames = Vec::with_capacity(t);
        let mut s = SimState {
            positions: (0..cfg.objects)
                .map(|_| [rng.gen_range(0.45..0.55), rng.gen_range(0.45..0.55)])
                .collect(),
            velocities: (0..cfg.objects)
                .map(|_| [rng.gen_range(-0.005..0.005), rng.gen_range(-0.005..0.005)])
                .collect(),
            radii: vec![cfg.radius; cfg.objects],
            masses: vec![1.0; cfg.objects],
        };
        frames.push(s.clone());
        for _ in 1..t {
            for o in 0..cfg.objects {
                s.positions[o][0] += s.velocities[o][0];
                s.positions[o][1] += s.velocities[o][1];
            }
            frames.push(s.clone());
        }
        states.push(frames);
    }
    Dataset {
        config: cfg,
        seed,
        n,
        t,
        states,
        frames: None,
        frame_shape: (0, 0, 0),
        actions: None,
        rewards: None,
    }
}

#[test]
fn two_frame_window_reduces_to_one_step_nll() {
    let cfg = DynamicsConfig::standard(3);
    let model = DynamicsModel::new(cfg.clone(), 5).unwrap();
    let rows = 4 * cfg.objects;
    let l = cfg.net_width();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let input: Vec<f64> = (0..rows * l).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let target: Vec<f64> = (0..rows * 4).map(|_| rng.gen_range(-0.5..0.5)).collect();

    let mut tape = Tape::new(&model.store);
    let loss = rollout_loss_graph(
        &mut tape,
        &cfg,
        &LossVariant::Learned,
        Tensor::from_vec(rows, l, input.clone()),
        vec![Tensor::from_vec(rows, 4, target.clone())],
        None,
        None,
    );
    let rollout_value = tape.value(loss.total).data[0];

    let mut tape = Tape::new(&model.store);
    let state = tape.input(Tensor::from_vec(rows, l, input));
    let nodes = build_forward(&mut tape, &cfg, state, None);
    let mean4 = tape.slice_cols(nodes.mean, 0, 4);
    let std4 = tape.slice_cols(nodes.std, 0, 4);
    let tgt = tape.input(Tensor::from_vec(rows, 4, target));
    let one_step = nll_learned(&mut tape, mean4, std4, tgt);
    let one_step_value = tape.value(one_step).data[0];

    assert_eq!(rollout_value.to_bits(), one_step_value.to_bits());
}

#[test]
fn training_run_is_bit_deterministic() {
    let ds = generate_dataset(&EnvConfig::billiards(), 8, 12, 7, false).unwrap();
    let train = TrainConfig {
        steps: 30,
        batch: 16,
        window: 3,
        seed: 11,
        sigma: LossVariant::Learned,
        holdout_every: 10,
        anneal: true,
    };
    let a = train_dynamics_supervised(&ds, DynamicsConfig::standard(3), &train).unwrap();
    let b = train_dynamics_supervised(&ds, DynamicsConfig::standard(3), &train).unwrap();
    assert_eq!(a.history, b.history);
    for (x, y) in a.model.store.data().iter().zip(b.model.store.data()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn learns_linear_motion_to_sub_millimeter_rmse() {
    let ds = linear_dataset(16, 4, 21);
    // Small latent keeps the desk run fast; straight-line motion needs no
    // interaction memory. Two-frame windows put every loss term on a true
    // state, which is all a one-step RMSE target calls for. Convergence past
    // ~1e-3 depends on the init drawn from the model seed: the trunk has to
    // grow its weights until the tanh layers act linearly, and some inits
    // park in a curved basin for far longer than this run. Seed 5 descends
    // cleanly; treat a failure here after touching the trainer or the init
    // as a real regression, not flakiness.
    let cfg = DynamicsConfig {
        objects: 3,
        latent_dim: 4,
        actions: None,
        separate_proposal_std: true,
        mask_velocity: false,
    };
    let train = TrainConfig {
        steps: 2000,
        batch: 96,
        window: 2,
        seed: 5,
        sigma: LossVariant::Learned,
        holdout_every: 100,
        anneal: true,
    };
    let report = train_dynamics_supervised(&ds, cfg, &train).unwrap();
    let last = report.history.last().unwrap();
    assert!(
        last.holdout_rmse < 1e-3,
        "one-step position RMSE {} after {} steps",
        last.holdout_rmse,
        train.steps
    );
    assert!(last.train_loss < report.history[0].train_loss);
}

#[test]
fn billiards_training_reduces_loss_and_holdout_error() {
    let ds = generate_dataset(&EnvConfig::billiards(), 16, 16, 3, false).unwrap();
    let train = TrainConfig {
        steps: 500,
        batch: 32,
        window: 4,
        seed: 4,
        sigma: LossVariant::Learned,
        holdout_every: 100,
        anneal: true,
    };
    let report = train_dynamics_supervised(&ds, DynamicsConfig::standard(3), &train).unwrap();
    let first = &report.history[0];
    let last = report.history.last().unwrap();
    assert!(
        last.train_loss < first.train_loss,
        "loss went {} -> {}",
        first.train_loss,
        last.train_loss
    );
    assert!(
        last.holdout_rmse < first.holdout_rmse,
        "holdout RMSE went {} -> {}",
        first.holdout_rmse,
        last.holdout_rmse
    );
}

#[test]
fn fixed_sigma_variant_trains() {
    let ds = linear_dataset(8, 8, 33);
    let train = TrainConfig {
        steps: 60,
        batch: 16,
        window: 3,
        seed: 6,
        sigma: LossVariant::Fixed(0.01),
        holdout_every: 20,
        anneal: true,
    };
    let cfg = DynamicsConfig {
        objects: 3,
        latent_dim: 4,
        actions: None,
        separate_proposal_std: true,
        mask_velocity: false,
    };
    let report = train_dynamics_supervised(&ds, cfg, &train).unwrap();
    let first = &report.history[0];
    let last = report.history.last().unwrap();
    assert!(last.train_loss.is_finite());
    assert!(last.train_loss < first.train_loss);
}

/// Mean predicted collision probability over held-out frames.
fn mean_reward_probability(model: &DynamicsModel, ds: &Dataset, seq: usize) -> f64 {
    let states: Vec<LatentState> = (0..ds.t)
        .map(|t| LatentState::from_sim(&ds.states[seq][t], model.cfg.latent_dim))
        .collect();
    let actions = ds.actions.as_ref().unwrap();
    let ctx = dynlab::dynamics::ActionContext {
        action_space: model.cfg.actions.unwrap(),
        actions: (0..ds.t).map(|t| actions[seq * ds.t + t] as usize).collect(),
        appearance: dynlab::envs::object_colors(ds.objects()),
    };
    let pred = model.forward_states(&states, Some(&ctx)).unwrap();
    let probs = pred.reward.unwrap();
    probs.iter().sum::<f64>() / probs.len() as f64
}

#[test]
fn all_zero_rewards_drive_predicted_probability_down() {
    let mut ds = generate_dataset(&EnvConfig::billiards_control(), 16, 12, 5, false).unwrap();
    ds.rewards = Some(vec![0.0; ds.n * ds.t]);
    let train = TrainConfig {
        steps: 800,
        batch: 32,
        window: 3,
        seed: 8,
        sigma: LossVariant::Learned,
        holdout_every: 200,
        anneal: true,
    };
    let report = train_reward_model(&ds, DynamicsConfig::controlled(3, 9), &train).unwrap();
    let p = mean_reward_probability(&report.model, &ds, ds.n - 1);
    assert!(p < 0.05, "mean predicted collision probability {p}");
}

#[test]
fn random_labels_plateau_at_ln_2() {
    let mut ds = generate_dataset(&EnvConfig::billiards_control(), 64, 12, 15, false).unwrap();
    // Coin-flip rewards carry no information about the state, so the
    // cross-entropy can do no better than the entropy of a fair coin.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    ds.rewards = Some(
        (0..ds.n * ds.t)
            .map(|_| if rng.gen_bool(0.5) { -1.0 } else { 0.0 })
            .collect(),
    );
    let train = TrainConfig {
        steps: 400,
        batch: 32,
        window: 3,
        seed: 16,
        sigma: LossVariant::Learned,
        holdout_every: 50,
        anneal: true,
    };
    let report = train_reward_model(&ds, DynamicsConfig::controlled(3, 9), &train).unwrap();
    let tail: Vec<f64> = report.history.iter().rev().take(3).map(|r| r.bce).collect();
    let mean_bce = tail.iter().sum::<f64>() / tail.len() as f64;
    assert!(
        (mean_bce - 2.0f64.ln()).abs() < 0.02,
        "late BCE {mean_bce} vs ln 2 = {}",
        2.0f64.ln()
    );
}

#[test]
fn reward_head_ranks_collisions_above_free_flight() {
    // Collision prediction generalizes only with enough distinct geometry:
    // small corpora push holdout AUC toward a coin flip however long the run.
    // Two-frame windows keep the reward supervised on true states instead of
    // the model's own (still poor) rollouts, and the flat learning rate keeps
    // moving where the annealed profile would have frozen the head early.
    let ds = generate_dataset(&EnvConfig::billiards_control(), 256, 20, 12, false).unwrap();
    let train = TrainConfig {
        steps: 4000,
        batch: 64,
        window: 2,
        seed: 23,
        sigma: LossVariant::Learned,
        holdout_every: 800,
        anneal: false,
    };
    let report = train_reward_model(&ds, DynamicsConfig::controlled(3, 9), &train).unwrap();
    let holdout: Vec<usize> = (ds.n - 25..ds.n).collect();
    let auc = reward_auc(&report.model, &ds, &holdout, 4096).unwrap();
    assert!(auc > 0.9, "holdout reward AUC {auc}");
}

#[test]
fn rmse_evaluation_needs_transitions() {
    let ds = linear_dataset(4, 6, 3);
    let model = DynamicsModel::new(
        DynamicsConfig {
            objects: 3,
            latent_dim: 4,
            actions: None,
            separate_proposal_std: true,
            mask_velocity: false,
        },
        0,
    )
    .unwrap();
    assert!(one_step_position_rmse(&model, &ds, &[], 100).is_err());
    let err = one_step_position_rmse(&model, &ds, &[0], 100).unwrap();
    assert!(err.is_finite() && err > 0.0);
}
