//! Tape graph builders for the transition network and the reward head.
//!
//! The transition trunk splits into a self-dynamics path (S layers), a
//! relational path over object pairs (C layers) weighted by learned
//! attention (A layers, exponential output, diagonal masked), and an output
//! trunk (D layers) on the sum of both. All rows are laid out as
//! (batch * objects, features); pairwise tensors as
//! (batch * objects * objects, features) with the partner index fastest.

use crate::nnkit::{NodeId, Tape};

use super::DynamicsConfig;

/// Standard-deviation outputs get softplus plus this floor, keeping every
/// Gaussian well-conditioned no matter what the raw head emits.
pub const STD_FLOOR: f64 = 1e-4;

/// Node handles into a recorded forward pass.
pub struct ForwardNodes {
    /// Full per-object input after any action/appearance concatenation.
    pub input: NodeId,
    /// Joint per-object code D1 = relational + self dynamics, input to both
    /// the output trunk and the reward head.
    pub d1: NodeId,
    /// Pre-output code D4, which the proposal-std head branches from.
    pub d4: NodeId,
    /// Predicted next-state mean, (batch * objects, l).
    pub mean: NodeId,
    /// Generative std, strictly positive, same shape as mean.
    pub std: NodeId,
    /// Proposal std: a dedicated head when the config asks for one,
    /// otherwise the generative std node.
    pub proposal_std: NodeId,
}

fn layer(tape: &mut Tape, x: NodeId, name: &str) -> NodeId {
    let w = tape.param(&format!("{name}.w"));
    let b = tape.param(&format!("{name}.b"));
    tape.affine(x, w, b)
}

/// Records the transition network on `tape`.
///
/// `state` must be (batch * objects, net_width) with columns (pos 2, velo 2,
/// latent). `ctx` supplies one-hot actions (batch, action_space) and
/// per-object appearances (batch * objects, 3) and is required exactly when
/// the config declares an action space.
pub fn build_forward(
    tape: &mut Tape,
    cfg: &DynamicsConfig,
    state: NodeId,
    ctx: Option<(NodeId, NodeId)>,
) -> ForwardNodes {
    let o = cfg.objects;
    let l = cfg.net_width();
    let rows = tape.value(state).rows;
    assert!(
        rows % o == 0,
        "forward: {rows} rows do not factor into batches of {o} objects"
    );
    let batch = rows / o;
    assert_eq!(
        tape.value(state).cols,
        l,
        "forward: state width {} does not match network width {l}",
        tape.value(state).cols
    );
    assert_eq!(
        cfg.actions.is_some(),
        ctx.is_some(),
        "forward: action context must be supplied iff the config has an action space"
    );

    let state = if cfg.mask_velocity {
        let pos = tape.slice_cols(state, 0, 2);
        let velo = tape.slice_cols(state, 2, 4);
        let rest = tape.slice_cols(state, 4, l);
        let zeroed = tape.scale(velo, 0.0);
        let head = tape.concat_cols(pos, zeroed);
        tape.concat_cols(head, rest)
    } else {
        state
    };

    let input = match ctx {
        None => state,
        Some((onehot, appearance)) => {
            let a = cfg.actions.expect("checked above");
            let hot = tape.value(onehot);
            assert!(
                hot.rows == batch && hot.cols == a,
                "forward: one-hot actions ({}, {}) do not match (batch {batch}, actions {a})",
                hot.rows, hot.cols
            );
            // (batch, O * enc) rows hold the objects' encodings back to
            // back, so a row-major reshape is exactly the per-object split.
            let emb = layer(tape, onehot, "act");
            let emb = tape.reshape(emb, batch * o, super::ACTION_ENC);
            let with_action = tape.concat_cols(state, emb);
            tape.concat_cols(with_action, appearance)
        }
    };

    let s1 = layer(tape, input, "dyn.s1");
    let s2 = layer(tape, s1, "dyn.s2");
    let s2 = tape.relu(s2);
    let s3 = layer(tape, s2, "dyn.s3");
    let s3 = tape.add(s3, s2);

    let c1 = tape.pair_concat(s1, o);
    let c2 = layer(tape, c1, "dyn.c2");
    let c2 = tape.relu(c2);
    let c3 = layer(tape, c2, "dyn.c3");
    let c3 = tape.relu(c3);
    let c4 = layer(tape, c3, "dyn.c4");
    let c4 = tape.add(c4, c3);

    let a1 = layer(tape, c1, "dyn.a1");
    let a1 = tape.relu(a1);
    let a2 = layer(tape, a1, "dyn.a2");
    let a2 = tape.relu(a2);
    let a3 = layer(tape, a2, "dyn.a3");
    let a3 = tape.exp(a3);

    let r1 = tape.mul(c4, a3);
    let r2 = tape.masked_pair_sum(r1, o);

    let d1 = tape.add(r2, s3);
    let d2 = layer(tape, d1, "dyn.d2");
    let d2 = tape.tanh(d2);
    let d3 = layer(tape, d2, "dyn.d3");
    let d3 = tape.tanh(d3);
    let d3 = tape.add(d3, d2);
    let cat = tape.concat_cols(d3, s1);
    let d4 = layer(tape, cat, "dyn.d4");
    let d4 = tape.tanh(d4);
    let d5 = layer(tape, d4, "dyn.d5");
    let d5 = tape.add(d5, d4);

    let mean = tape.slice_cols(d5, 0, l);
    let raw_std = tape.slice_cols(d5, l, 2 * l);
    let std = tape.softplus(raw_std);
    let std = tape.add_const(std, STD_FLOOR);
    let proposal_std = if cfg.separate_proposal_std {
        let q = layer(tape, d4, "dyn.q");
        let q = tape.softplus(q);
        tape.add_const(q, STD_FLOOR)
    } else {
        std
    };

    ForwardNodes {
        input,
        d1,
        d4,
        mean,
        std,
        proposal_std,
    }
}

/// Records the reward head on `tape`, taking the joint code D1 from a
/// forward pass. Per-object features are summed over the object dimension
/// before the final narrow layers, so the output cannot depend on object
/// order. Returns per-batch collision probabilities of shape (batch, 1):
/// the sigmoid layer emits l values per batch element, reduced by mean.
pub fn build_reward(tape: &mut Tape, cfg: &DynamicsConfig, d1: NodeId) -> NodeId {
    let o = cfg.objects;
    let l = cfg.net_width();
    let batch = tape.value(d1).rows / o;

    let h1 = layer(tape, d1, "rew.h1");
    let h1 = tape.relu(h1);
    let h2 = layer(tape, h1, "rew.h2");
    let h3 = tape.group_sum_rows(h2, o);
    let h4 = layer(tape, h3, "rew.h4");
    let h4 = tape.relu(h4);
    let h5 = layer(tape, h4, "rew.h5a");
    let h5 = tape.relu(h5);
    let h5 = layer(tape, h5, "rew.h5b");
    let h5 = tape.sigmoid(h5);
    let stacked = tape.reshape(h5, batch * l, 1);
    let summed = tape.group_sum_rows(stacked, l);
    tape.scale(summed, 1.0 / l as f64)
}
