//! Object-factored transition model with relational attention, plus the
//! collision-reward head.
//!
//! Each object carries an 18-dimensional state laid out as position (2),
//! size (2), velocity (2), and a free latent slice (12 by default). The
//! network sees the 16 dimensions excluding size: sizes do not influence
//! motion and are carried through predictions unchanged. Per predicted
//! state the network emits a mean, a generative std, and (optionally via a
//! dedicated head) a proposal std, all strictly positive through softplus.
//!
//! For the action-conditioned variant, a one-hot action is embedded with a
//! linear layer to `objects * ACTION_ENC` values, split per object, and
//! concatenated to the object states together with a 3-channel appearance
//! code, so the network can tell the controlled object from the others.

pub mod net;

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::SimState;
use crate::nnkit::{ParamStore, Tape, Tensor};
use crate::{Error, Result};

pub use net::{build_forward, build_reward, ForwardNodes, STD_FLOOR};

/// Dimensions reserved per object ahead of the latent slice: pos, size, velo.
pub const RESERVED_DIMS: usize = 6;
/// Default latent width, giving the 18-dimensional full state.
pub const LATENT_DIM: usize = 12;
/// Width of the per-object action embedding.
pub const ACTION_ENC: usize = 4;
/// Appearance code width: mean value per color channel.
pub const APPEARANCE_DIM: usize = 3;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub objects: usize,
    /// Free latent dimensions per object (0 disables the latent slice).
    pub latent_dim: usize,
    /// Action-space size for the control variant; None for plain physics.
    pub actions: Option<usize>,
    /// Predict proposal stds with a dedicated head instead of reusing the
    /// generative stds.
    pub separate_proposal_std: bool,
    /// Zero the velocity slice of the network input (ablation).
    pub mask_velocity: bool,
}

impl DynamicsConfig {
    pub fn standard(objects: usize) -> Self {
        DynamicsConfig {
            objects,
            latent_dim: LATENT_DIM,
            actions: None,
            separate_proposal_std: true,
            mask_velocity: false,
        }
    }

    pub fn controlled(objects: usize, actions: usize) -> Self {
        DynamicsConfig {
            actions: Some(actions),
            ..Self::standard(objects)
        }
    }

    /// Per-object width of the network state: pos + velo + latent.
    pub fn net_width(&self) -> usize {
        4 + self.latent_dim
    }

    /// Per-object width after action/appearance conditioning.
    pub fn input_width(&self) -> usize {
        self.net_width()
            + if self.actions.is_some() {
                ACTION_ENC + APPEARANCE_DIM
            } else {
                0
            }
    }

    /// Full stored width per object, including the carried size.
    pub fn state_dim(&self) -> usize {
        RESERVED_DIMS + self.latent_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.objects < 2 {
            return Err(Error::Config(format!(
                "relational dynamics needs at least 2 objects, got {}",
                self.objects
            )));
        }
        if self.net_width() % 4 != 0 {
            return Err(Error::Config(format!(
                "latent_dim {} must be a multiple of 4 so the reward head widths divide evenly",
                self.latent_dim
            )));
        }
        if let Some(a) = self.actions {
            if a == 0 {
                return Err(Error::Config("action space must be non-empty".into()));
            }
        }
        Ok(())
    }
}

/// Per-object filtered state. Layout per object: indices 0-1 position,
/// 2-3 size, 4-5 velocity, 6.. latent.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState {
    pub objects: usize,
    pub latent_dim: usize,
    data: Vec<f64>,
}

impl LatentState {
    pub fn zeros(objects: usize, latent_dim: usize) -> Self {
        LatentState {
            objects,
            latent_dim,
            data: vec![0.0; objects * (RESERVED_DIMS + latent_dim)],
        }
    }

    /// Builds a state from simulator ground truth: positions and velocities
    /// copied, size set to the disc diameter in both axes, latent zeroed.
    pub fn from_sim(s: &SimState, latent_dim: usize) -> Self {
        let mut z = Self::zeros(s.objects(), latent_dim);
        for o in 0..s.objects() {
            z.set_pos(o, s.positions[o]);
            z.set_size(o, [2.0 * s.radii[o], 2.0 * s.radii[o]]);
            z.set_velo(o, s.velocities[o]);
        }
        z
    }

    pub fn dim(&self) -> usize {
        RESERVED_DIMS + self.latent_dim
    }

    fn row(&self, o: usize) -> &[f64] {
        let d = self.dim();
        &self.data[o * d..(o + 1) * d]
    }

    fn row_mut(&mut self, o: usize) -> &mut [f64] {
        let d = self.dim();
        &mut self.data[o * d..(o + 1) * d]
    }

    pub fn pos(&self, o: usize) -> [f64; 2] {
        let r = self.row(o);
        [r[0], r[1]]
    }

    pub fn size(&self, o: usize) -> [f64; 2] {
        let r = self.row(o);
        [r[2], r[3]]
    }

    pub fn velo(&self, o: usize) -> [f64; 2] {
        let r = self.row(o);
        [r[4], r[5]]
    }

    pub fn latent(&self, o: usize) -> &[f64] {
        &self.row(o)[RESERVED_DIMS..]
    }

    pub fn set_pos(&mut self, o: usize, v: [f64; 2]) {
        self.row_mut(o)[..2].copy_from_slice(&v);
    }

    pub fn set_size(&mut self, o: usize, v: [f64; 2]) {
        self.row_mut(o)[2..4].copy_from_slice(&v);
    }

    pub fn set_velo(&mut self, o: usize, v: [f64; 2]) {
        self.row_mut(o)[4..6].copy_from_slice(&v);
    }

    pub fn set_latent(&mut self, o: usize, v: &[f64]) {
        assert_eq!(v.len(), self.latent_dim, "latent width {} vs {}", v.len(), self.latent_dim);
        self.row_mut(o)[RESERVED_DIMS..].copy_from_slice(v);
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        (0..self.objects).map(|o| self.pos(o)).collect()
    }

    /// The per-object network input row: (pos, velo, latent), size excluded.
    pub fn net_row(&self, o: usize) -> Vec<f64> {
        let r = self.row(o);
        let mut out = Vec::with_capacity(4 + self.latent_dim);
        out.extend_from_slice(&r[..2]);
        out.extend_from_slice(&r[4..6]);
        out.extend_from_slice(&r[RESERVED_DIMS..]);
        out
    }

    /// Writes a predicted (pos, velo, latent) row back, keeping size.
    pub fn apply_net_row(&mut self, o: usize, row: &[f64]) {
        assert_eq!(
            row.len(),
            4 + self.latent_dim,
            "net row width {} vs {}",
            row.len(),
            4 + self.latent_dim
        );
        let r = self.row_mut(o);
        r[..2].copy_from_slice(&row[..2]);
        r[4..6].copy_from_slice(&row[2..4]);
        r[RESERVED_DIMS..].copy_from_slice(&row[4..]);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Conditioning for the control variant. For a batched forward pass,
/// `actions` holds one action per batch element; for a rollout, one action
/// per step. `appearance` holds one color code per object, shared across
/// the batch.
#[derive(Debug, Clone)]
pub struct ActionContext {
    pub action_space: usize,
    pub actions: Vec<usize>,
    pub appearance: Vec<[f64; 3]>,
}

impl ActionContext {
    pub fn validate(&self) -> Result<()> {
        if let Some(&a) = self.actions.iter().find(|&&a| a >= self.action_space) {
            return Err(Error::Config(format!(
                "action {a} outside action space {}",
                self.action_space
            )));
        }
        Ok(())
    }

    /// One-hot matrix (actions.len(), action_space).
    pub fn one_hot(&self) -> Tensor {
        let mut t = Tensor::zeros(self.actions.len(), self.action_space);
        for (b, &a) in self.actions.iter().enumerate() {
            t.data[b * self.action_space + a] = 1.0;
        }
        t
    }

    /// Appearance rows (batch * objects, 3).
    pub fn appearance_rows(&self, batch: usize) -> Tensor {
        let o = self.appearance.len();
        let mut t = Tensor::zeros(batch * o, APPEARANCE_DIM);
        for b in 0..batch {
            for (i, app) in self.appearance.iter().enumerate() {
                t.data[(b * o + i) * APPEARANCE_DIM..(b * o + i + 1) * APPEARANCE_DIM]
                    .copy_from_slice(app);
            }
        }
        t
    }
}

/// One-step prediction for a batch of states: Gaussians over the next
/// (pos, velo, latent) per object, carried sizes, and collision
/// probabilities when the model is action-conditioned.
#[derive(Debug, Clone)]
pub struct TransitionPrediction {
    pub objects: usize,
    pub net_width: usize,
    /// (batch * objects, net_width)
    pub mean: Tensor,
    pub std: Tensor,
    pub proposal_std: Tensor,
    /// Sizes carried over from the inputs, per batch element per object.
    pub sizes: Vec<Vec<[f64; 2]>>,
    pub reward: Option<Vec<f64>>,
}

impl TransitionPrediction {
    pub fn batch(&self) -> usize {
        self.sizes.len()
    }

    pub fn mean_row(&self, b: usize, o: usize) -> &[f64] {
        self.mean.row(b * self.objects + o)
    }

    pub fn std_row(&self, b: usize, o: usize) -> &[f64] {
        self.std.row(b * self.objects + o)
    }

    pub fn proposal_std_row(&self, b: usize, o: usize) -> &[f64] {
        self.proposal_std.row(b * self.objects + o)
    }

    /// The predicted mean as full states, sizes carried.
    pub fn next_states(&self, latent_dim: usize) -> Vec<LatentState> {
        let mut out = Vec::with_capacity(self.batch());
        for b in 0..self.batch() {
            let mut z = LatentState::zeros(self.objects, latent_dim);
            for o in 0..self.objects {
                z.apply_net_row(o, self.mean_row(b, o));
                z.set_size(o, self.sizes[b][o]);
            }
            out.push(z);
        }
        out
    }
}

/// Registers every parameter block in canonical order. The same order drives
/// initialization, so (config, seed) pins every weight.
fn register_params(store: &mut ParamStore, cfg: &DynamicsConfig) -> Result<()> {
    let l = cfg.net_width();
    let input = cfg.input_width();
    let mut blocks: Vec<(String, Vec<usize>)> = Vec::new();
    if let Some(a) = cfg.actions {
        blocks.push(("act.w".into(), vec![a, cfg.objects * ACTION_ENC]));
        blocks.push(("act.b".into(), vec![cfg.objects * ACTION_ENC]));
    }
    let layer = |name: &str, iw: usize, ow: usize, blocks: &mut Vec<(String, Vec<usize>)>| {
        blocks.push((format!("{name}.w"), vec![iw, ow]));
        blocks.push((format!("{name}.b"), vec![ow]));
    };
    layer("dyn.s1", input, 2 * l, &mut blocks);
    layer("dyn.s2", 2 * l, 2 * l, &mut blocks);
    layer("dyn.s3", 2 * l, 2 * l, &mut blocks);
    layer("dyn.c2", 4 * l, 4 * l, &mut blocks);
    layer("dyn.c3", 4 * l, 2 * l, &mut blocks);
    layer("dyn.c4", 2 * l, 2 * l, &mut blocks);
    layer("dyn.a1", 4 * l, 4 * l, &mut blocks);
    layer("dyn.a2", 4 * l, 2 * l, &mut blocks);
    layer("dyn.a3", 2 * l, 1, &mut blocks);
    layer("dyn.d2", 2 * l, 2 * l, &mut blocks);
    layer("dyn.d3", 2 * l, 2 * l, &mut blocks);
    layer("dyn.d4", 4 * l, 2 * l, &mut blocks);
    layer("dyn.d5", 2 * l, 2 * l, &mut blocks);
    if cfg.separate_proposal_std {
        layer("dyn.q", 2 * l, l, &mut blocks);
    }
    layer("rew.h1", 2 * l, 2 * l, &mut blocks);
    layer("rew.h2", 2 * l, l, &mut blocks);
    layer("rew.h4", l, l / 2, &mut blocks);
    layer("rew.h5a", l / 2, l / 4, &mut blocks);
    layer("rew.h5b", l / 4, l, &mut blocks);
    for (name, shape) in &blocks {
        store.add_block(name, shape)?;
    }
    Ok(())
}

/// Uniform Xavier weights, zero biases, drawn in block registration order.
///
/// The final reward projection starts at zero so the head opens at
/// probability exactly 0.5 on every unit. With random init, one unit of the
/// averaged sigmoid bank can be pushed into positive saturation by its
/// neighbours' growing activations and freeze there, flooring the mean
/// probability at 1/width; zero init moves the whole bank in lockstep and
/// rules that out.
fn init_params(store: &mut ParamStore, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<(String, Vec<usize>)> = store
        .blocks()
        .iter()
        .map(|b| (b.name.clone(), b.shape.clone()))
        .collect();
    for (name, shape) in blocks {
        match shape.len() {
            2 if name != "rew.h5b.w" => {
                let a = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
                store.fill_with(&name, || rng.gen_range(-a..a));
            }
            _ => store.fill_with(&name, || 0.0),
        }
    }
}

/// Parameters plus architecture constants, with checkpointing.
#[derive(Debug, Clone)]
pub struct DynamicsModel {
    pub cfg: DynamicsConfig,
    pub store: ParamStore,
}

impl DynamicsModel {
    pub fn new(cfg: DynamicsConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut store = ParamStore::new();
        register_params(&mut store, &cfg)?;
        init_params(&mut store, seed);
        Ok(DynamicsModel { cfg, store })
    }

    fn sidecar(path: &Path) -> PathBuf {
        path.with_extension("json")
    }

    /// Writes the parameter file at `path` and the architecture sidecar at
    /// `path` with a .json extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.store.save(path)?;
        let json = serde_json::to_vec_pretty(&self.cfg)?;
        std::fs::write(Self::sidecar(path), json)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let store = ParamStore::load(path)?;
        let cfg: DynamicsConfig =
            serde_json::from_slice(&std::fs::read(Self::sidecar(path))?)?;
        cfg.validate()?;
        let mut expected = ParamStore::new();
        register_params(&mut expected, &cfg)?;
        if expected.blocks().len() != store.blocks().len()
            || expected
                .blocks()
                .iter()
                .zip(store.blocks())
                .any(|(a, b)| a.name != b.name || a.shape != b.shape)
        {
            return Err(Error::Format(format!(
                "checkpoint {} does not match its architecture sidecar",
                path.display()
            )));
        }
        Ok(DynamicsModel { cfg, store })
    }

    /// Assembles the (batch * objects, net_width) input rows for a batch.
    pub fn input_tensor(&self, states: &[LatentState]) -> Result<Tensor> {
        let o = self.cfg.objects;
        let w = self.cfg.net_width();
        let mut t = Tensor::zeros(states.len() * o, w);
        for (b, z) in states.iter().enumerate() {
            if z.objects != o || z.latent_dim != self.cfg.latent_dim {
                return Err(Error::Config(format!(
                    "state with {} objects / latent {} fed to a model with {} / {}",
                    z.objects, z.latent_dim, o, self.cfg.latent_dim
                )));
            }
            for i in 0..o {
                t.data[(b * o + i) * w..(b * o + i + 1) * w].copy_from_slice(&z.net_row(i));
            }
        }
        Ok(t)
    }

    /// One batched prediction step. `ctx` must be present iff the model is
    /// action-conditioned, with one action per batch element.
    pub fn forward_states(
        &self,
        states: &[LatentState],
        ctx: Option<&ActionContext>,
    ) -> Result<TransitionPrediction> {
        if states.is_empty() {
            return Err(Error::Config("empty batch".into()));
        }
        if self.cfg.actions.is_some() != ctx.is_some() {
            return Err(Error::Config(
                "action context must be supplied iff the model is action-conditioned".into(),
            ));
        }
        let input = self.input_tensor(states)?;
        let mut tape = Tape::new(&self.store);
        let state = tape.input(input);
        let ctx_nodes = match ctx {
            None => None,
            Some(c) => {
                c.validate()?;
                if c.actions.len() != states.len() {
                    return Err(Error::Config(format!(
                        "{} actions for a batch of {}",
                        c.actions.len(),
                        states.len()
                    )));
                }
                if c.appearance.len() != self.cfg.objects {
                    return Err(Error::Config(format!(
                        "{} appearance codes for {} objects",
                        c.appearance.len(),
                        self.cfg.objects
                    )));
                }
                let hot = tape.input(c.one_hot());
                let app = tape.input(c.appearance_rows(states.len()));
                Some((hot, app))
            }
        };
        let nodes = build_forward(&mut tape, &self.cfg, state, ctx_nodes);
        let reward = if self.cfg.actions.is_some() {
            let r = build_reward(&mut tape, &self.cfg, nodes.d1);
            Some(tape.value(r).data.clone())
        } else {
            None
        };
        Ok(TransitionPrediction {
            objects: self.cfg.objects,
            net_width: self.cfg.net_width(),
            mean: tape.value(nodes.mean).clone(),
            std: tape.value(nodes.std).clone(),
            proposal_std: tape.value(nodes.proposal_std).clone(),
            sizes: states
                .iter()
                .map(|z| (0..z.objects).map(|o| z.size(o)).collect())
                .collect(),
            reward,
        })
    }

    /// Deterministic mean rollout: feeds each predicted mean back as the
    /// next input for `t` steps. With actions, `ctx.actions` must hold one
    /// action per step. Returns the `t` predicted states (the start state is
    /// the caller's).
    pub fn rollout_mean(
        &self,
        start: &LatentState,
        t: usize,
        ctx: Option<&ActionContext>,
    ) -> Result<Vec<LatentState>> {
        if t == 0 {
            return Err(Error::Config("rollout needs at least one step".into()));
        }
        if let Some(c) = ctx {
            if c.actions.len() != t {
                return Err(Error::Config(format!(
                    "{} actions for a rollout of {t} steps",
                    c.actions.len()
                )));
            }
        }
        let mut out = Vec::with_capacity(t);
        let mut state = start.clone();
        for step in 0..t {
            let step_ctx = ctx.map(|c| ActionContext {
                action_space: c.action_space,
                actions: vec![c.actions[step]],
                appearance: c.appearance.clone(),
            });
            let pred = self.forward_states(std::slice::from_ref(&state), step_ctx.as_ref())?;
            state = pred.next_states(self.cfg.latent_dim).pop().expect("batch of 1");
            if !state.is_finite() {
                return Err(Error::NonFinite(format!(
                    "rollout diverged at step {step}"
                )));
            }
            out.push(state.clone());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::EnvConfig;
    use crate::envs::sample_initial_state;
    use tempfile::tempdir;

    fn sample_latent_state(seed: u64) -> LatentState {
        let cfg = EnvConfig::billiards();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sim = sample_initial_state(&cfg, &mut rng).unwrap();
        LatentState::from_sim(&sim, LATENT_DIM)
    }

    #[test]
    fn state_layout_round_trips_through_net_rows() {
        let mut z = LatentState::zeros(2, LATENT_DIM);
        z.set_pos(1, [0.25, 0.75]);
        z.set_size(1, [0.2, 0.2]);
        z.set_velo(1, [-0.05, 0.01]);
        z.set_latent(1, &[1.0; LATENT_DIM]);
        let row = z.net_row(1);
        assert_eq!(row.len(), 16);
        assert_eq!(&row[..4], &[0.25, 0.75, -0.05, 0.01]);

        let mut back = LatentState::zeros(2, LATENT_DIM);
        back.set_size(1, [0.2, 0.2]);
        back.apply_net_row(1, &row);
        assert_eq!(back.row(1), z.row(1));
    }

    #[test]
    fn config_validation_rejects_bad_setups() {
        assert!(DynamicsConfig::standard(1).validate().is_err());
        let mut odd = DynamicsConfig::standard(3);
        odd.latent_dim = 5;
        assert!(odd.validate().is_err());
        assert!(DynamicsConfig::controlled(3, 0).validate().is_err());
        assert!(DynamicsConfig::standard(2).validate().is_ok());
    }

    #[test]
    fn forward_shapes_and_positive_stds() {
        let model = DynamicsModel::new(DynamicsConfig::standard(3), 7).unwrap();
        let states = vec![sample_latent_state(1), sample_latent_state(2)];
        let pred = model.forward_states(&states, None).unwrap();
        assert_eq!(pred.mean.rows, 6);
        assert_eq!(pred.mean.cols, 16);
        assert!(pred.std.data.iter().all(|&s| s >= STD_FLOOR));
        assert!(pred.proposal_std.data.iter().all(|&s| s >= STD_FLOOR));
        assert!(pred.reward.is_none());
        // Sizes carried exactly.
        assert_eq!(pred.sizes[0][0], states[0].size(0));
        let next = pred.next_states(LATENT_DIM);
        assert_eq!(next[1].size(2), states[1].size(2));
    }

    #[test]
    fn controlled_model_requires_matching_context() {
        let model = DynamicsModel::new(DynamicsConfig::controlled(3, 9), 7).unwrap();
        let states = vec![sample_latent_state(1)];
        assert!(model.forward_states(&states, None).is_err());
        let bad = ActionContext {
            action_space: 9,
            actions: vec![9],
            appearance: vec![[1.0, 0.0, 0.0]; 3],
        };
        assert!(model.forward_states(&states, Some(&bad)).is_err());
        let good = ActionContext { actions: vec![3], ..bad };
        let pred = model.forward_states(&states, Some(&good)).unwrap();
        let r = pred.reward.unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0] > 0.0 && r[0] < 1.0);
    }

    #[test]
    fn rollout_is_deterministic_and_starts_with_one_forward() {
        let model = DynamicsModel::new(DynamicsConfig::standard(3), 11).unwrap();
        let start = sample_latent_state(5);
        let one = model.rollout_mean(&start, 1, None).unwrap();
        let pred = model.forward_states(std::slice::from_ref(&start), None).unwrap();
        assert_eq!(one[0], pred.next_states(LATENT_DIM)[0]);

        let a = model.rollout_mean(&start, 20, None).unwrap();
        let b = model.rollout_mean(&start, 20, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn checkpoint_round_trip_is_bit_identical() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.stvp");
        let model = DynamicsModel::new(DynamicsConfig::controlled(3, 9), 99).unwrap();
        model.save(&path).unwrap();
        let back = DynamicsModel::load(&path).unwrap();
        assert_eq!(back.cfg, model.cfg);
        assert_eq!(back.store.data(), model.store.data());
    }

    #[test]
    fn checkpoint_with_wrong_sidecar_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.stvp");
        let model = DynamicsModel::new(DynamicsConfig::standard(3), 1).unwrap();
        model.save(&path).unwrap();
        // Claim a different latent width in the sidecar; every trunk shape
        // moves with it. (A different object count alone would be fine: no
        // action-free parameter block depends on it.)
        let other = DynamicsConfig {
            latent_dim: 8,
            ..DynamicsConfig::standard(3)
        };
        std::fs::write(
            path.with_extension("json"),
            serde_json::to_vec(&other).unwrap(),
        )
        .unwrap();
        assert!(DynamicsModel::load(&path).is_err());
    }

    #[test]
    fn different_seeds_give_different_weights() {
        let a = DynamicsModel::new(DynamicsConfig::standard(3), 1).unwrap();
        let b = DynamicsModel::new(DynamicsConfig::standard(3), 2).unwrap();
        assert_ne!(a.store.data(), b.store.data());
        let c = DynamicsModel::new(DynamicsConfig::standard(3), 1).unwrap();
        assert_eq!(a.store.data(), c.store.data());
    }
}
