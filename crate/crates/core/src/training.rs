//! Supervised training of the transition and reward models on ground-truth
//! state sequences.
//!
//! Training samples fixed-length windows from a dataset, runs the model
//! forward for the whole window with each predicted mean fed back as the
//! next input, and scores every step's position and velocity slices under
//! the predicted Gaussians. Supervising the rollout rather than single
//! steps is what keeps long model rollouts stable; with a window of two
//! frames the loss reduces exactly to one-step likelihood. The latent slice
//! starts at zero in every window and is never supervised, leaving it as a
//! free memory channel.
//!
//! The reward model trains jointly: the same rollout adds a binary
//! cross-entropy term between the reward head's collision probability and
//! the recorded reward, so both objectives shape one shared interaction
//! encoding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{
    build_forward, build_reward, ActionContext, DynamicsConfig, DynamicsModel, LatentState,
};
use crate::envs::{object_colors, Dataset};
use crate::nnkit::{adam_update, annealed_lr, lr_schedule, AdamState, NodeId, Tape, Tensor};
use crate::{Error, Result};

/// How the generative std enters the likelihood.
#[derive(Debug, Clone, PartialEq)]
pub enum LossVariant {
    /// Use the stds predicted by the network (default).
    Learned,
    /// Use one fixed std for every supervised dimension.
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Optimizer steps. The schedule compresses the full decay profile into
    /// this many updates, so short desk-scale runs see the whole anneal.
    pub steps: usize,
    pub batch: usize,
    /// Frames per sampled window; the rollout horizon is one less.
    pub window: usize,
    pub seed: u64,
    pub sigma: LossVariant,
    /// Record a history row (train loss, holdout error) every this many
    /// steps.
    pub holdout_every: usize,
    /// When true (default), the published decay profile is compressed so the
    /// whole anneal plays out over `steps`. When false, the raw per-kilostep
    /// schedule is used; short runs then train at the schedule's early-phase
    /// rate throughout.
    pub anneal: bool,
}

impl TrainConfig {
    pub fn standard(seed: u64) -> Self {
        TrainConfig {
            steps: 4000,
            batch: 256,
            window: 8,
            seed,
            sigma: LossVariant::Learned,
            holdout_every: 200,
            anneal: true,
        }
    }

    fn lr(&self, step: usize) -> f64 {
        if self.anneal {
            annealed_lr(step as u64, self.steps as u64)
        } else {
            lr_schedule(step as u64 / 1000)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::Config(format!(
                "window {} too short; need at least two frames",
                self.window
            )));
        }
        if self.batch == 0 || self.steps == 0 {
            return Err(Error::Config("batch and steps must be positive".into()));
        }
        if self.holdout_every == 0 {
            return Err(Error::Config("holdout_every must be positive".into()));
        }
        if let LossVariant::Fixed(s) = self.sigma {
            if !(s > 0.0) {
                return Err(Error::Config(format!("fixed sigma must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub step: usize,
    pub train_loss: f64,
    pub holdout_rmse: f64,
}

#[derive(Debug)]
pub struct TrainReport {
    pub model: DynamicsModel,
    pub history: Vec<HistoryRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardHistoryRow {
    pub step: usize,
    pub joint_loss: f64,
    pub bce: f64,
}

#[derive(Debug)]
pub struct RewardReport {
    pub model: DynamicsModel,
    pub history: Vec<RewardHistoryRow>,
}

pub fn history_csv(history: &[HistoryRow]) -> String {
    let mut out = String::from("step,train_nll,holdout_pos_rmse\n");
    for row in history {
        out.push_str(&format!("{},{},{}\n", row.step, row.train_loss, row.holdout_rmse));
    }
    out
}

pub fn reward_history_csv(history: &[RewardHistoryRow]) -> String {
    let mut out = String::from("step,joint_loss,bce\n");
    for row in history {
        out.push_str(&format!("{},{},{}\n", row.step, row.joint_loss, row.bce));
    }
    out
}

/// Gaussian negative log likelihood with predicted stds, averaged over
/// every supervised entry: mean of ½((x−μ)/σ)² + ln σ + ½ ln 2π.
pub fn nll_learned(tape: &mut Tape, mean: NodeId, std: NodeId, target: NodeId) -> NodeId {
    let d = tape.sub(target, mean);
    let d2 = tape.mul(d, d);
    let ln_std = tape.ln(std);
    // 1/σ² as exp(−2 ln σ), keeping the graph within the available ops.
    let neg2 = tape.scale(ln_std, -2.0);
    let inv_var = tape.exp(neg2);
    let quad = tape.mul(d2, inv_var);
    let half_quad = tape.scale(quad, 0.5);
    let with_ln = tape.add(half_quad, ln_std);
    let shifted = tape.add_const(with_ln, 0.5 * (2.0 * std::f64::consts::PI).ln());
    tape.mean_all(shifted)
}

/// Gaussian negative log likelihood with one fixed std.
pub fn nll_fixed(tape: &mut Tape, mean: NodeId, sigma: f64, target: NodeId) -> NodeId {
    assert!(sigma > 0.0, "fixed sigma must be positive, got {sigma}");
    let d = tape.sub(target, mean);
    let d2 = tape.mul(d, d);
    let quad = tape.scale(d2, 0.5 / (sigma * sigma));
    let shifted = tape.add_const(quad, sigma.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln());
    tape.mean_all(shifted)
}

/// Binary cross-entropy between probabilities `p` and labels `y` in {0, 1},
/// averaged; probabilities are clamped away from 0 and 1.
fn bce_mean(tape: &mut Tape, p: NodeId, y: NodeId) -> NodeId {
    let eps = 1e-7;
    let pc = tape.clamp(p, eps, 1.0 - eps);
    let ln_p = tape.ln(pc);
    let pos = tape.mul(y, ln_p);
    let neg_p = tape.scale(pc, -1.0);
    let omp = tape.add_const(neg_p, 1.0);
    let ln_omp = tape.ln(omp);
    let neg_y = tape.scale(y, -1.0);
    let omy = tape.add_const(neg_y, 1.0);
    let neg = tape.mul(omy, ln_omp);
    let sum = tape.add(pos, neg);
    let mean = tape.mean_all(sum);
    tape.scale(mean, -1.0)
}

/// Loss nodes of one recorded training window.
pub struct RolloutLoss {
    pub total: NodeId,
    /// Rollout NLL alone, averaged over steps.
    pub nll: NodeId,
    /// Reward BCE alone, averaged over steps, when reward targets were given.
    pub bce: Option<NodeId>,
}

/// Records the full multi-step training graph: `horizon` forwards with the
/// predicted means fed back, a Gaussian likelihood per step on the first
/// four (position, velocity) columns, and optionally the reward head's
/// cross-entropy per step.
///
/// `input0` is (batch·objects, net width); each target (batch·objects, 4);
/// each one-hot (batch, action space) with the appearance rows
/// (batch·objects, 3); each reward target (batch, 1) in {0, 1}.
pub fn rollout_loss_graph(
    tape: &mut Tape,
    cfg: &DynamicsConfig,
    sigma: &LossVariant,
    input0: Tensor,
    targets: Vec<Tensor>,
    actions: Option<(Vec<Tensor>, Tensor)>,
    reward_targets: Option<Vec<Tensor>>,
) -> RolloutLoss {
    let h = targets.len();
    assert!(h >= 1, "rollout loss needs at least one target step");
    assert_eq!(
        cfg.actions.is_some(),
        actions.is_some(),
        "action tensors must be supplied iff the config has an action space"
    );
    if reward_targets.is_some() {
        assert!(actions.is_some(), "reward supervision needs actions");
    }

    let (hot_nodes, app_node) = match actions {
        Some((hots, app)) => {
            assert_eq!(hots.len(), h, "one-hot count {} for horizon {h}", hots.len());
            let app = tape.input(app);
            let hots = hots.into_iter().map(|t| tape.input(t)).collect::<Vec<_>>();
            (Some(hots), Some(app))
        }
        None => (None, None),
    };
    let reward_nodes: Option<Vec<NodeId>> = reward_targets.map(|v| {
        assert_eq!(v.len(), h, "reward target count {} for horizon {h}", v.len());
        v.into_iter().map(|t| tape.input(t)).collect()
    });

    let mut state = tape.input(input0);
    let mut nll_sum: Option<NodeId> = None;
    let mut bce_sum: Option<NodeId> = None;
    for (k, target) in targets.into_iter().enumerate() {
        let ctx = hot_nodes
            .as_ref()
            .map(|hots| (hots[k], app_node.expect("appearance set with actions")));
        let nodes = build_forward(tape, cfg, state, ctx);
        let mean4 = tape.slice_cols(nodes.mean, 0, 4);
        let tgt = tape.input(target);
        let step_nll = match sigma {
            LossVariant::Learned => {
                let std4 = tape.slice_cols(nodes.std, 0, 4);
                nll_learned(tape, mean4, std4, tgt)
            }
            LossVariant::Fixed(s) => nll_fixed(tape, mean4, *s, tgt),
        };
        nll_sum = Some(match nll_sum {
            Some(acc) => tape.add(acc, step_nll),
            None => step_nll,
        });
        if let Some(rewards) = &reward_nodes {
            let p = build_reward(tape, cfg, nodes.d1);
            let step_bce = bce_mean(tape, p, rewards[k]);
            bce_sum = Some(match bce_sum {
                Some(acc) => tape.add(acc, step_bce),
                None => step_bce,
            });
        }
        state = nodes.mean;
    }

    let nll = tape.scale(nll_sum.expect("at least one step"), 1.0 / h as f64);
    let bce = bce_sum.map(|acc| tape.scale(acc, 1.0 / h as f64));
    let total = match bce {
        Some(b) => tape.add(nll, b),
        None => nll,
    };
    RolloutLoss { total, nll, bce }
}

struct WindowBatch {
    input0: Tensor,
    targets: Vec<Tensor>,
    hots: Option<Vec<Tensor>>,
    appearance: Option<Tensor>,
    reward_targets: Option<Vec<Tensor>>,
}

fn sample_windows(
    ds: &Dataset,
    cfg: &DynamicsConfig,
    seqs: &[usize],
    train: &TrainConfig,
    with_rewards: bool,
    rng: &mut ChaCha8Rng,
) -> WindowBatch {
    let o = cfg.objects;
    let l = cfg.net_width();
    let h = train.window - 1;
    let b = train.batch;
    let mut input0 = Tensor::zeros(b * o, l);
    let mut targets: Vec<Tensor> = (0..h).map(|_| Tensor::zeros(b * o, 4)).collect();
    let space = cfg.actions.unwrap_or(0);
    let mut hots: Option<Vec<Tensor>> = cfg
        .actions
        .map(|a| (0..h).map(|_| Tensor::zeros(b, a)).collect());
    let mut reward_targets: Option<Vec<Tensor>> =
        with_rewards.then(|| (0..h).map(|_| Tensor::zeros(b, 1)).collect());

    for bi in 0..b {
        let seq = seqs[rng.gen_range(0..seqs.len())];
        let start = rng.gen_range(0..=ds.t - train.window);
        let z0 = LatentState::from_sim(&ds.states[seq][start], cfg.latent_dim);
        for obj in 0..o {
            let row = z0.net_row(obj);
            input0.data[(bi * o + obj) * l..(bi * o + obj + 1) * l].copy_from_slice(&row);
        }
        for k in 0..h {
            let s = &ds.states[seq][start + k + 1];
            for obj in 0..o {
                let base = (bi * o + obj) * 4;
                targets[k].data[base] = s.positions[obj][0];
                targets[k].data[base + 1] = s.positions[obj][1];
                targets[k].data[base + 2] = s.velocities[obj][0];
                targets[k].data[base + 3] = s.velocities[obj][1];
            }
            if let Some(hots) = &mut hots {
                let a = ds.actions.as_ref().expect("actions required")[seq * ds.t + start + k];
                hots[k].data[bi * space + a as usize] = 1.0;
            }
            if let Some(rt) = &mut reward_targets {
                let r = ds.rewards.as_ref().expect("rewards required")[seq * ds.t + start + k + 1];
                rt[k].data[bi] = if r < -0.5 { 1.0 } else { 0.0 };
            }
        }
    }

    let appearance = cfg.actions.map(|_| {
        let colors = object_colors(o);
        let mut t = Tensor::zeros(b * o, 3);
        for bi in 0..b {
            for (obj, c) in colors.iter().enumerate() {
                t.data[(bi * o + obj) * 3..(bi * o + obj + 1) * 3].copy_from_slice(c);
            }
        }
        t
    });

    WindowBatch {
        input0,
        targets,
        hots,
        appearance,
        reward_targets,
    }
}

/// Last ~10% of sequences (at least one) are held out of training.
fn split_sequences(n: usize) -> (Vec<usize>, Vec<usize>) {
    let holdout = (n / 10).max(1);
    let cut = n - holdout;
    ((0..cut).collect(), (cut..n).collect())
}

fn check_dataset(ds: &Dataset, train: &TrainConfig) -> Result<()> {
    if ds.n < 2 {
        return Err(Error::Config(format!(
            "dataset has {} sequences; need at least 2 for a holdout split",
            ds.n
        )));
    }
    if ds.t < train.window {
        return Err(Error::Config(format!(
            "sequences of {} frames cannot fill windows of {}",
            ds.t, train.window
        )));
    }
    Ok(())
}

/// One-step position RMSE over ground-truth transitions of the given
/// sequences, capped at `cap` transitions. Inputs are rebuilt from truth at
/// every frame (zero latent), so this measures pure one-step prediction.
pub fn one_step_position_rmse(
    model: &DynamicsModel,
    ds: &Dataset,
    seqs: &[usize],
    cap: usize,
) -> Result<f64> {
    let mut states = Vec::new();
    let mut targets: Vec<[f64; 2]> = Vec::new();
    let mut step_actions = Vec::new();
    'outer: for &seq in seqs {
        for t in 0..ds.t - 1 {
            states.push(LatentState::from_sim(&ds.states[seq][t], model.cfg.latent_dim));
            for o in 0..ds.objects() {
                targets.push(ds.states[seq][t + 1].positions[o]);
            }
            if model.cfg.actions.is_some() {
                step_actions
                    .push(ds.actions.as_ref().expect("actions required")[seq * ds.t + t] as usize);
            }
            if states.len() >= cap {
                break 'outer;
            }
        }
    }
    if states.is_empty() {
        return Err(Error::Config("no transitions to evaluate".into()));
    }
    let ctx = model.cfg.actions.map(|space| ActionContext {
        action_space: space,
        actions: step_actions,
        appearance: object_colors(ds.objects()),
    });
    let pred = model.forward_states(&states, ctx.as_ref())?;
    let o = ds.objects();
    let mut sq_sum = 0.0;
    for (i, tgt) in targets.iter().enumerate() {
        let row = pred.mean_row(i / o, i % o);
        sq_sum += (row[0] - tgt[0]).powi(2) + (row[1] - tgt[1]).powi(2);
    }
    Ok((sq_sum / (2.0 * targets.len() as f64)).sqrt())
}

/// Area under the ROC curve for the reward head over transitions of the
/// given sequences (midrank handling for tied scores). Errors when the
/// transitions contain only one class.
pub fn reward_auc(model: &DynamicsModel, ds: &Dataset, seqs: &[usize], cap: usize) -> Result<f64> {
    let space = model
        .cfg
        .actions
        .ok_or_else(|| Error::Config("reward AUC needs an action-conditioned model".into()))?;
    let actions = ds
        .actions
        .as_ref()
        .ok_or_else(|| Error::Config("dataset has no actions".into()))?;
    let rewards = ds
        .rewards
        .as_ref()
        .ok_or_else(|| Error::Config("dataset has no rewards".into()))?;

    let mut scores = Vec::new();
    let mut labels = Vec::new();
    let appearance = object_colors(ds.objects());
    'outer: for &seq in seqs {
        let mut states = Vec::new();
        let mut acts = Vec::new();
        for t in 0..ds.t - 1 {
            states.push(LatentState::from_sim(&ds.states[seq][t], model.cfg.latent_dim));
            acts.push(actions[seq * ds.t + t] as usize);
            labels.push(rewards[seq * ds.t + t + 1] < -0.5);
        }
        let ctx = ActionContext {
            action_space: space,
            actions: acts,
            appearance: appearance.clone(),
        };
        let pred = model.forward_states(&states, Some(&ctx))?;
        scores.extend(pred.reward.expect("controlled model emits rewards"));
        if scores.len() >= cap {
            labels.truncate(scores.len());
            break 'outer;
        }
    }

    let positives = labels.iter().filter(|&&y| y).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Config(format!(
            "AUC needs both classes; got {positives} positives of {}",
            labels.len()
        )));
    }
    // Mann-Whitney with midranks.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum += midrank;
            }
        }
        i = j + 1;
    }
    let p = positives as f64;
    let n = negatives as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Trains the plain transition model. Whole sequences are held out for the
/// history's position-error column.
pub fn train_dynamics_supervised(
    ds: &Dataset,
    dyn_cfg: DynamicsConfig,
    train: &TrainConfig,
) -> Result<TrainReport> {
    train.validate()?;
    dyn_cfg.validate()?;
    if dyn_cfg.actions.is_some() {
        return Err(Error::Config(
            "action-conditioned models train via train_reward_model".into(),
        ));
    }
    check_dataset(ds, train)?;
    if ds.objects() != dyn_cfg.objects {
        return Err(Error::Config(format!(
            "dataset has {} objects, model expects {}",
            ds.objects(),
            dyn_cfg.objects
        )));
    }

    let (train_seqs, holdout_seqs) = split_sequences(ds.n);
    let mut model = DynamicsModel::new(dyn_cfg, train.seed)?;
    let mut adam = AdamState::new(model.store.len());
    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    let mut history = Vec::new();

    for step in 0..train.steps {
        let batch = sample_windows(ds, &model.cfg, &train_seqs, train, false, &mut rng);
        let mut tape = Tape::new(&model.store);
        let loss = rollout_loss_graph(
            &mut tape,
            &model.cfg,
            &train.sigma,
            batch.input0,
            batch.targets,
            None,
            None,
        );
        let value = tape.value(loss.total).data[0];
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("training loss at step {step}")));
        }
        if step % train.holdout_every == 0 {
            let rmse = one_step_position_rmse(&model, ds, &holdout_seqs, 1024)?;
            history.push(HistoryRow { step, train_loss: value, holdout_rmse: rmse });
        }
        let grads = tape.backward(loss.total)?;
        drop(tape);
        adam_update(&mut model.store, &grads, &mut adam, train.lr(step))
            .map_err(|e| Error::NonFinite(format!("at step {step}: {e}")))?;
    }
    let final_rmse = one_step_position_rmse(&model, ds, &holdout_seqs, 1024)?;
    let final_loss = history.last().map_or(f64::NAN, |r| r.train_loss);
    history.push(HistoryRow {
        step: train.steps,
        train_loss: final_loss,
        holdout_rmse: final_rmse,
    });
    Ok(TrainReport { model, history })
}

/// Trains the action-conditioned model jointly on transition likelihood and
/// reward cross-entropy.
pub fn train_reward_model(
    ds: &Dataset,
    dyn_cfg: DynamicsConfig,
    train: &TrainConfig,
) -> Result<RewardReport> {
    train.validate()?;
    dyn_cfg.validate()?;
    if dyn_cfg.actions.is_none() {
        return Err(Error::Config("reward training needs an action space".into()));
    }
    if ds.actions.is_none() || ds.rewards.is_none() {
        return Err(Error::Config("reward training needs actions and rewards".into()));
    }
    check_dataset(ds, train)?;
    if ds.objects() != dyn_cfg.objects {
        return Err(Error::Config(format!(
            "dataset has {} objects, model expects {}",
            ds.objects(),
            dyn_cfg.objects
        )));
    }

    let (train_seqs, _holdout) = split_sequences(ds.n);
    let mut model = DynamicsModel::new(dyn_cfg, train.seed)?;
    let mut adam = AdamState::new(model.store.len());
    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    let mut history = Vec::new();

    for step in 0..train.steps {
        let batch = sample_windows(ds, &model.cfg, &train_seqs, train, true, &mut rng);
        let mut tape = Tape::new(&model.store);
        let loss = rollout_loss_graph(
            &mut tape,
            &model.cfg,
            &train.sigma,
            batch.input0,
            batch.targets,
            Some((batch.hots.expect("actions"), batch.appearance.expect("appearance"))),
            batch.reward_targets,
        );
        let value = tape.value(loss.total).data[0];
        let bce = tape.value(loss.bce.expect("reward loss present")).data[0];
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("training loss at step {step}")));
        }
        if step % train.holdout_every == 0 {
            history.push(RewardHistoryRow { step, joint_loss: value, bce });
        }
        let grads = tape.backward(loss.total)?;
        drop(tape);
        adam_update(&mut model.store, &grads, &mut adam, train.lr(step))
            .map_err(|e| Error::NonFinite(format!("at step {step}: {e}")))?;
    }
    Ok(RewardReport { model, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor(rows: usize, cols: usize, data: &[f64]) -> Tensor {
        Tensor::from_vec(rows, cols, data.to_vec())
    }

    #[test]
    fn nll_of_perfect_prediction_with_unit_std_is_half_ln_2pi() {
        let store = crate::nnkit::ParamStore::new();
        let mut tape = Tape::new(&store);
        let mean = tape.input(tensor(2, 4, &[0.1; 8]));
        let std = tape.input(tensor(2, 4, &[1.0; 8]));
        let target = tape.input(tensor(2, 4, &[0.1; 8]));
        let loss = nll_learned(&mut tape, mean, std, target);
        let want = 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((tape.value(loss).data[0] - want).abs() < 1e-15);
    }

    #[test]
    fn quadratic_term_scales_with_squared_error() {
        let store = crate::nnkit::ParamStore::new();
        let mut tape = Tape::new(&store);
        let base = 0.5 * (2.0 * std::f64::consts::PI).ln();
        let mean = tape.input(tensor(1, 2, &[0.0, 0.0]));
        let t1 = tape.input(tensor(1, 2, &[0.2, 0.2]));
        let t2 = tape.input(tensor(1, 2, &[0.4, 0.4]));
        let l1 = nll_fixed(&mut tape, mean, 1.0, t1);
        let l2 = nll_fixed(&mut tape, mean, 1.0, t2);
        let (v1, v2) = (tape.value(l1).data[0], tape.value(l2).data[0]);
        assert!(((v2 - base) - 4.0 * (v1 - base)).abs() < 1e-12);
    }

    #[test]
    fn nll_matches_scalar_reference() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 6 * 4;
        let means: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let stds: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..2.0)).collect();
        let targets: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let store = crate::nnkit::ParamStore::new();
        let mut tape = Tape::new(&store);
        let m = tape.input(tensor(6, 4, &means));
        let s = tape.input(tensor(6, 4, &stds));
        let t = tape.input(tensor(6, 4, &targets));
        let loss = nll_learned(&mut tape, m, s, t);

        let mut want = 0.0;
        for i in 0..n {
            let z = (targets[i] - means[i]) / stds[i];
            want += 0.5 * z * z + stds[i].ln() + 0.5 * (2.0 * std::f64::consts::PI).ln();
        }
        want /= n as f64;
        assert!((tape.value(loss).data[0] - want).abs() < 1e-12);
    }

    #[test]
    fn bce_closed_forms() {
        let store = crate::nnkit::ParamStore::new();
        let mut tape = Tape::new(&store);
        let half = tape.input(tensor(2, 1, &[0.5, 0.5]));
        let y = tape.input(tensor(2, 1, &[1.0, 0.0]));
        let loss = bce_mean(&mut tape, half, y);
        assert!((tape.value(loss).data[0] - 2.0f64.ln()).abs() < 1e-12);

        let p = tape.input(tensor(1, 1, &[0.9]));
        let y1 = tape.input(tensor(1, 1, &[1.0]));
        let loss = bce_mean(&mut tape, p, y1);
        assert!((tape.value(loss).data[0] + 0.9f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn config_validation_rejects_degenerate_setups() {
        let mut c = TrainConfig::standard(0);
        c.window = 1;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::standard(0);
        c.sigma = LossVariant::Fixed(0.0);
        assert!(c.validate().is_err());
        assert!(TrainConfig::standard(0).validate().is_ok());
    }
}
