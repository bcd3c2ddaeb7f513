//! Monte-Carlo tree search for the impulse-control task, in two variants:
//! one that plans against the true simulator and one that plans inside the
//! learned model, rolling latent means forward and spending the reward head
//! as a collision penalty. Also runs full episodes under the random,
//! search-on-simulator, and search-on-model policies so they can be compared
//! on equal footing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ActionContext, DynamicsModel, LatentState};
use crate::envs::{
    object_colors, sample_initial_state, step_controlled, EnvConfig, SimState, ACTIONS,
};
use crate::fusion::{filter_step, initialize_beliefs, synthetic_detector, BeliefState};
use crate::{Error, Result};

/// Search budget and scoring constants. The two constructors carry the
/// defaults for planning on the simulator and on the learned model; the
/// model variant gets a smaller budget because each expansion evaluates all
/// actions at once, and a discount below one because model rollouts drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    /// Exploration constant in the upper-confidence score.
    pub exploration: f64,
    /// Rollout horizon in environment steps, counting the expansion step.
    pub depth: usize,
    /// Number of search iterations per planned action.
    pub budget: usize,
    /// Per-step discount applied inside rollout returns.
    pub discount: f64,
    pub seed: u64,
}

impl PlannerConfig {
    pub fn true_env(seed: u64) -> Self {
        PlannerConfig {
            exploration: 1.0,
            depth: 20,
            budget: 200,
            discount: 1.0,
            seed,
        }
    }

    pub fn model(seed: u64) -> Self {
        PlannerConfig {
            exploration: 1.0,
            depth: 20,
            budget: 50,
            discount: 0.95,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("planner budget must be at least 1".into()));
        }
        if self.depth == 0 {
            return Err(Error::Config("rollout depth must be at least 1".into()));
        }
        if !(self.exploration >= 0.0) {
            return Err(Error::Config(format!(
                "exploration constant must be >= 0, got {}",
                self.exploration
            )));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::Config(format!(
                "discount must be in (0, 1], got {}",
                self.discount
            )));
        }
        Ok(())
    }
}

/// One search-tree node. `children[a]` is the arena index of the child
/// reached by action `a`, or None while that action is untried. `visits`
/// counts the rollouts whose value entered `value_sum`, so the node's value
/// estimate is `value_sum / visits`.
#[derive(Debug, Clone)]
pub struct MctsNode<S> {
    pub state: S,
    /// Action that led here from the parent; None at the root.
    pub action: Option<usize>,
    pub visits: u64,
    pub value_sum: f64,
    pub children: Vec<Option<usize>>,
}

impl<S> MctsNode<S> {
    fn new(state: S, action: Option<usize>, action_space: usize) -> Self {
        MctsNode {
            state,
            action,
            visits: 0,
            value_sum: 0.0,
            children: vec![None; action_space],
        }
    }
}

/// A finished search: the chosen action and the full tree (root at index 0)
/// for inspection.
#[derive(Debug, Clone)]
pub struct SearchOutcome<S> {
    pub action: usize,
    pub nodes: Vec<MctsNode<S>>,
}

/// Upper-confidence score of a child under `parent_visits` total parent
/// rollouts: mean value plus `c * sqrt(ln(parent) / child)`. An unvisited
/// child scores infinite, so direct callers try each action once before
/// re-ranking; ties among infinities break toward the lowest action index
/// by scan order.
pub fn uct_score<S>(child: &MctsNode<S>, parent_visits: u64, c: f64) -> f64 {
    assert!(
        parent_visits >= 1,
        "uct: parent visits {parent_visits} must be >= 1"
    );
    if child.visits == 0 {
        return f64::INFINITY;
    }
    let n = child.visits as f64;
    child.value_sum / n + c * ((parent_visits as f64).ln() / n).sqrt()
}

/// Discount-weighted mean of a reward sequence: sum(g^k r_k) / sum(g^k).
/// At discount 1 this is the arithmetic mean, so both planner variants
/// share one value definition and both keep values inside the reward range.
fn discounted_mean(rewards: &[f64], discount: f64) -> f64 {
    assert!(!rewards.is_empty(), "discounted mean of no rewards");
    let mut num = 0.0;
    let mut den = 0.0;
    let mut w = 1.0;
    for &r in rewards {
        num += w * r;
        den += w;
        w *= discount;
    }
    num / den
}

/// Picks the child to descend into: any unvisited child wins first (lowest
/// action index), otherwise the best upper-confidence score, with exact
/// ties broken uniformly at random so a signal-free search cannot develop
/// an index bias.
fn select_child<S>(
    nodes: &[MctsNode<S>],
    parent: usize,
    c: f64,
    rng: &mut ChaCha8Rng,
) -> usize {
    let p = &nodes[parent];
    let mut best: Vec<usize> = Vec::new();
    let mut best_score = f64::NEG_INFINITY;
    for slot in &p.children {
        let Some(ci) = *slot else { continue };
        if nodes[ci].visits == 0 {
            return ci;
        }
        let s = uct_score(&nodes[ci], p.visits, c);
        if s > best_score {
            best_score = s;
            best.clear();
            best.push(ci);
        } else if s == best_score {
            best.push(ci);
        }
    }
    assert!(!best.is_empty(), "select on a childless node");
    if best.len() == 1 {
        best[0]
    } else {
        best[rng.gen_range(0..best.len())]
    }
}

/// The root action with the most visits. Visit ties break toward the best
/// value estimate first (visit counts flatten at small budgets, where the
/// value estimates still separate), then uniformly at random so a
/// signal-free search stays unbiased.
fn most_visited_action<S>(nodes: &[MctsNode<S>], rng: &mut ChaCha8Rng) -> usize {
    let mut best: Vec<usize> = Vec::new();
    let mut most = 0u64;
    for (a, slot) in nodes[0].children.iter().enumerate() {
        let Some(ci) = *slot else { continue };
        let v = nodes[ci].visits;
        if best.is_empty() || v > most {
            most = v;
            best.clear();
            best.push(a);
        } else if v == most {
            best.push(a);
        }
    }
    assert!(!best.is_empty(), "no action was ever expanded");
    if best.len() > 1 {
        let value = |&a: &usize| {
            let ci = nodes[0].children[a].expect("tied child exists");
            nodes[ci].value_sum / nodes[ci].visits as f64
        };
        let top = best.iter().map(value).fold(f64::NEG_INFINITY, f64::max);
        best.retain(|a| value(a) == top);
    }
    if best.len() == 1 {
        best[0]
    } else {
        best[rng.gen_range(0..best.len())]
    }
}

/// Returns a description of the first bookkeeping violation in a search
/// tree, or None if the invariants hold: every node's visit count is one
/// (its creation rollout) plus the visits of its children, and every value
/// sum is finite.
pub fn tree_consistency_violation<S>(nodes: &[MctsNode<S>]) -> Option<String> {
    for (i, n) in nodes.iter().enumerate() {
        if !n.value_sum.is_finite() {
            return Some(format!("node {i}: value sum {} not finite", n.value_sum));
        }
        if n.visits == 0 {
            return Some(format!("node {i}: zero visits"));
        }
        let child_sum: u64 = n
            .children
            .iter()
            .flatten()
            .map(|&ci| nodes[ci].visits)
            .sum();
        if n.visits != child_sum + 1 {
            return Some(format!(
                "node {i}: visits {} != children {child_sum} + 1",
                n.visits
            ));
        }
    }
    None
}

/// Plans one action against the true simulator. Each iteration descends by
/// upper-confidence scores until reaching a node with untried actions,
/// expands one untried action chosen uniformly at random, finishes the
/// horizon with a uniform-random rollout, and backs the rollout's mean
/// reward up the path. The returned action is the most-visited root child.
pub fn plan_true_search(
    state: &SimState,
    cfg: &EnvConfig,
    plan: &PlannerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<SearchOutcome<SimState>> {
    plan.validate()?;
    let mut nodes = vec![MctsNode::new(state.clone(), None, ACTIONS)];
    nodes[0].visits = 1;
    for _ in 0..plan.budget {
        // Descend while fully expanded.
        let mut path = vec![0usize];
        let mut at = 0usize;
        while nodes[at].children.iter().all(|c| c.is_some()) {
            at = select_child(&nodes, at, plan.exploration, rng);
            path.push(at);
        }
        // Expand one untried action.
        let untried: Vec<usize> = (0..ACTIONS)
            .filter(|&a| nodes[at].children[a].is_none())
            .collect();
        let a = untried[rng.gen_range(0..untried.len())];
        let (next, r0) = step_controlled(&nodes[at].state, a, cfg)?;
        // Random-policy rollout to the horizon; the expansion step is the
        // first of `depth` rewards.
        let mut rewards = Vec::with_capacity(plan.depth);
        rewards.push(r0);
        let mut s = next.clone();
        for _ in 1..plan.depth {
            let ra = rng.gen_range(0..ACTIONS);
            let (ns, r) = step_controlled(&s, ra, cfg)?;
            rewards.push(r);
            s = ns;
        }
        let value = discounted_mean(&rewards, plan.discount);
        let child = nodes.len();
        nodes.push(MctsNode::new(next, Some(a), ACTIONS));
        nodes[at].children[a] = Some(child);
        path.push(child);
        for &n in &path {
            nodes[n].visits += 1;
            nodes[n].value_sum += value;
        }
    }
    let action = most_visited_action(&nodes, rng);
    Ok(SearchOutcome { action, nodes })
}

pub fn plan_action_true(
    state: &SimState,
    cfg: &EnvConfig,
    plan: &PlannerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<usize> {
    Ok(plan_true_search(state, cfg, plan, rng)?.action)
}

/// Plans one action inside the learned model, starting from a belief mean.
/// Each iteration descends to a leaf and expands every action at once: one
/// batched forward pass yields all child states and their collision
/// probabilities, then all children's rollouts advance in lockstep with
/// independent random actions. Rewards are the negated collision
/// probabilities; each child's discounted mean return backs up through the
/// shared path.
pub fn plan_model_search(
    z: &LatentState,
    model: &DynamicsModel,
    plan: &PlannerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<SearchOutcome<LatentState>> {
    plan.validate()?;
    let space = model.cfg.actions.ok_or_else(|| {
        Error::Config("model planning needs an action-conditioned model".into())
    })?;
    if z.objects != model.cfg.objects || z.latent_dim != model.cfg.latent_dim {
        return Err(Error::Config(format!(
            "planning state has {} objects / latent {}, model expects {} / {}",
            z.objects, z.latent_dim, model.cfg.objects, model.cfg.latent_dim
        )));
    }
    let colors = object_colors(model.cfg.objects);
    let mut nodes = vec![MctsNode::new(z.clone(), None, space)];
    nodes[0].visits = 1;
    for _ in 0..plan.budget {
        let mut path = vec![0usize];
        let mut at = 0usize;
        while nodes[at].children[0].is_some() {
            at = select_child(&nodes, at, plan.exploration, rng);
            path.push(at);
        }
        // Expand all actions of the leaf in one batch.
        let fan: Vec<LatentState> = vec![nodes[at].state.clone(); space];
        let ctx = ActionContext {
            action_space: space,
            actions: (0..space).collect(),
            appearance: colors.clone(),
        };
        let pred = model.forward_states(&fan, Some(&ctx))?;
        let probs = pred.reward.as_ref().expect("action-conditioned model");
        let child_states = pred.next_states(model.cfg.latent_dim);
        let mut num: Vec<f64> = probs.iter().map(|&p| -p).collect();
        let mut den = 1.0;
        let mut w = plan.discount;
        // Lockstep random rollouts from every child.
        let mut cur = child_states.clone();
        for _ in 1..plan.depth {
            let ctx = ActionContext {
                action_space: space,
                actions: (0..space).map(|_| rng.gen_range(0..space)).collect(),
                appearance: colors.clone(),
            };
            let pred = model.forward_states(&cur, Some(&ctx))?;
            let probs = pred.reward.as_ref().expect("action-conditioned model");
            for (n, &p) in num.iter_mut().zip(probs) {
                *n += w * -p;
            }
            den += w;
            w *= plan.discount;
            cur = pred.next_states(model.cfg.latent_dim);
            if let Some(bad) = cur.iter().position(|s| !s.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "model rollout diverged on child {bad}"
                )));
            }
        }
        let values: Vec<f64> = num.iter().map(|n| n / den).collect();
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("rollout value {bad}")));
        }
        let mut total = 0.0;
        for (a, (state, &v)) in child_states.into_iter().zip(&values).enumerate() {
            let ci = nodes.len();
            let mut child = MctsNode::new(state, Some(a), space);
            child.visits = 1;
            child.value_sum = v;
            nodes.push(child);
            nodes[at].children[a] = Some(ci);
            total += v;
        }
        for &n in &path {
            nodes[n].visits += space as u64;
            nodes[n].value_sum += total;
        }
    }
    let action = most_visited_action(&nodes, rng);
    Ok(SearchOutcome { action, nodes })
}

pub fn plan_action_model(
    z: &LatentState,
    model: &DynamicsModel,
    plan: &PlannerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<usize> {
    Ok(plan_model_search(z, model, plan, rng)?.action)
}

/// How actions are chosen during an episode.
#[derive(Debug, Clone)]
pub enum PlanPolicy<'a> {
    /// Uniform-random actions.
    Random,
    /// Search against the true simulator from the exact current state.
    MctsTrue(PlannerConfig),
    /// Search inside the learned model from a filtered belief. The belief is
    /// tracked from noisy synthetic detections, never from the true state.
    MctsModel {
        model: &'a DynamicsModel,
        planner: PlannerConfig,
        /// Detector position noise fed to the filter.
        detector_noise: f64,
    },
}

/// One executed environment step: the state the action was taken in, the
/// action, and the reward it returned.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub state: SimState,
    pub action: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub total_reward: f64,
    pub trace: Vec<StepRecord>,
}

/// Reorders a detection set so object slots line up with `reference`
/// positions. Used once per episode: the controlled disc must sit in slot 0
/// of the filter for action conditioning to mean anything, standing in for
/// the appearance cues a real detector would provide.
fn anchor_detection_order(
    det: &crate::fusion::DetectionSet,
    reference: &[[f64; 2]],
) -> crate::fusion::DetectionSet {
    let perm = crate::fusion::match_objects(reference, &det.positions());
    crate::fusion::DetectionSet {
        objects: perm.iter().map(|&j| det.objects[j].clone()).collect(),
    }
}

/// Runs one episode of the control task under a policy and returns the full
/// step trace. The model-planning policy never sees the true state: it takes
/// a rest action on the first step while the filter accumulates the two
/// detections it needs, then plans every later action from the belief mean
/// and filters each new detection with the action it actually took.
pub fn run_episode(
    policy: &PlanPolicy,
    cfg: &EnvConfig,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeOutcome> {
    if steps == 0 {
        return Err(Error::Config("episode needs at least one step".into()));
    }
    if let PlanPolicy::MctsModel { model, .. } = policy {
        if model.cfg.actions != Some(ACTIONS) {
            return Err(Error::Config(format!(
                "episode model must cover the {ACTIONS}-action space, has {:?}",
                model.cfg.actions
            )));
        }
        if model.cfg.objects != cfg.objects {
            return Err(Error::Config(format!(
                "episode model covers {} objects, world has {}",
                model.cfg.objects, cfg.objects
            )));
        }
    }
    let mut state = sample_initial_state(cfg, rng)?;
    let mut belief: Option<BeliefState> = None;
    let mut det_prev = None;
    if let PlanPolicy::MctsModel { detector_noise, .. } = policy {
        let det = synthetic_detector(&state, *detector_noise, rng);
        det_prev = Some(anchor_detection_order(&det, &state.positions));
    }
    let mut trace = Vec::with_capacity(steps);
    let mut total = 0.0;
    for t in 0..steps {
        let action = match policy {
            PlanPolicy::Random => rng.gen_range(0..ACTIONS),
            PlanPolicy::MctsTrue(plan) => plan_action_true(&state, cfg, plan, rng)?,
            PlanPolicy::MctsModel { model, planner, .. } => match &belief {
                None => crate::envs::REST_ACTION,
                Some(b) => plan_action_model(&b.mean, model, planner, rng)?,
            },
        };
        let (next, reward) = step_controlled(&state, action, cfg)?;
        trace.push(StepRecord {
            t,
            state: state.clone(),
            action,
            reward,
        });
        total += reward;
        if let PlanPolicy::MctsModel {
            model,
            detector_noise,
            ..
        } = policy
        {
            let det = synthetic_detector(&next, *detector_noise, rng);
            belief = Some(match belief.take() {
                None => initialize_beliefs(
                    det_prev.as_ref().expect("first detection recorded"),
                    &det,
                    model.cfg.latent_dim,
                ),
                Some(b) => {
                    let ctx = ActionContext {
                        action_space: ACTIONS,
                        actions: vec![action],
                        appearance: object_colors(cfg.objects),
                    };
                    filter_step(model, &b, &det, Some(&ctx))?
                }
            });
            det_prev = Some(det);
        }
        state = next;
    }
    Ok(EpisodeOutcome {
        total_reward: total,
        trace,
    })
}

/// Cumulative-reward statistics for a batch of episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyStats {
    pub mean: f64,
    pub std_err: f64,
    /// Per-episode cumulative rewards, in episode order.
    pub rewards: Vec<f64>,
}

/// Runs `episodes` independent episodes in parallel and reports the mean
/// cumulative reward with its standard error. Episode `e` uses stream `e`
/// of the seed, so results do not depend on thread count or schedule.
pub fn evaluate_policy(
    policy: &PlanPolicy,
    cfg: &EnvConfig,
    episodes: usize,
    steps: usize,
    seed: u64,
) -> Result<PolicyStats> {
    if episodes == 0 {
        return Err(Error::Config("need at least one episode".into()));
    }
    let rewards: Vec<f64> = (0..episodes)
        .into_par_iter()
        .map(|e| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(e as u64);
            run_episode(policy, cfg, steps, &mut rng).map(|out| out.total_reward)
        })
        .collect::<Result<_>>()?;
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let std_err = if rewards.len() < 2 {
        0.0
    } else {
        let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    Ok(PolicyStats {
        mean,
        std_err,
        rewards,
    })
}
