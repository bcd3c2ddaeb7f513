//! Gaussian belief filtering over object states.
//!
//! The filter tracks one Gaussian belief per object and state slice. Each
//! step the transition model proposes the next state (shared means,
//! separately predicted stds), a detector reports noisy positions and sizes
//! in arbitrary order, detections are matched to the proposal, and the two
//! are fused per slice: position and velocity by a product of Gaussians,
//! size from the detection alone, latent from the dynamics alone. The
//! velocity observation is synthesized from the difference between the
//! matched detection and the previous position belief.
//!
//! A synthetic detector stands in for a learned recognition model: it
//! reports ground-truth positions and sizes with i.i.d. Gaussian noise on
//! the positions, in uniformly shuffled order.

mod matching;

pub use matching::{assignment_cost, match_objects};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{ActionContext, DynamicsModel, LatentState, TransitionPrediction};
use crate::envs::SimState;
use crate::{Error, Result};

/// Smallest std a detection may report. Keeps products of Gaussians finite
/// when the detector is configured noiseless.
pub const DETECTOR_STD_FLOOR: f64 = 1e-6;

/// Independent Gaussian over a small vector, diagonal by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl GaussianBelief {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Self {
        assert_eq!(
            mean.len(),
            std.len(),
            "belief: mean width {} vs std width {}",
            mean.len(),
            std.len()
        );
        assert!(
            std.iter().all(|&s| s > 0.0),
            "belief: non-positive std in {std:?}"
        );
        GaussianBelief { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Normalized product of two Gaussians over the same variable: precisions
/// add, the mean is the precision-weighted average. Commutative.
pub fn product_of_gaussians(a: &GaussianBelief, b: &GaussianBelief) -> GaussianBelief {
    assert_eq!(
        a.dim(),
        b.dim(),
        "product: width {} vs {}",
        a.dim(),
        b.dim()
    );
    let mut mean = Vec::with_capacity(a.dim());
    let mut std = Vec::with_capacity(a.dim());
    for i in 0..a.dim() {
        let (va, vb) = (a.std[i] * a.std[i], b.std[i] * b.std[i]);
        mean.push((vb * a.mean[i] + va * b.mean[i]) / (va + vb));
        std.push((va * vb / (va + vb)).sqrt());
    }
    GaussianBelief::new(mean, std)
}

/// Velocity belief from the difference of two position beliefs: the mean is
/// the displacement, the variances add.
pub fn velocity_belief(pos_t: &GaussianBelief, pos_prev: &GaussianBelief) -> GaussianBelief {
    assert_eq!(pos_t.dim(), 2, "velocity: position width {}", pos_t.dim());
    assert_eq!(pos_prev.dim(), 2, "velocity: position width {}", pos_prev.dim());
    let mean = vec![
        pos_t.mean[0] - pos_prev.mean[0],
        pos_t.mean[1] - pos_prev.mean[1],
    ];
    let std = (0..2)
        .map(|i| (pos_t.std[i] * pos_t.std[i] + pos_prev.std[i] * pos_prev.std[i]).sqrt())
        .collect();
    GaussianBelief::new(mean, std)
}

/// One detected object: position and size beliefs.
#[derive(Debug, Clone)]
pub struct Detection {
    pub pos: GaussianBelief,
    pub size: GaussianBelief,
}

/// One frame's detections, in deliberately unspecified object order.
#[derive(Debug, Clone)]
pub struct DetectionSet {
    pub objects: Vec<Detection>,
}

impl DetectionSet {
    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.objects
            .iter()
            .map(|d| [d.pos.mean[0], d.pos.mean[1]])
            .collect()
    }
}

/// Reports the true state with i.i.d. Gaussian position noise of scale
/// `sigma_det` and uniformly shuffled object order. Sizes (disc diameters)
/// are reported exactly. Reported stds are `sigma_det` floored at
/// [`DETECTOR_STD_FLOOR`].
pub fn synthetic_detector(
    state: &SimState,
    sigma_det: f64,
    rng: &mut impl Rng,
) -> DetectionSet {
    assert!(sigma_det >= 0.0, "detector noise must be >= 0, got {sigma_det}");
    let reported = sigma_det.max(DETECTOR_STD_FLOOR);
    let mut objects: Vec<Detection> = (0..state.objects())
        .map(|o| {
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            let d = 2.0 * state.radii[o];
            Detection {
                pos: GaussianBelief::new(
                    vec![
                        state.positions[o][0] + sigma_det * nx,
                        state.positions[o][1] + sigma_det * ny,
                    ],
                    vec![reported; 2],
                ),
                size: GaussianBelief::new(vec![d, d], vec![reported; 2]),
            }
        })
        .collect();
    objects.shuffle(rng);
    DetectionSet { objects }
}

/// Per-object, per-slice Gaussian belief over the full state. `mean` and
/// `std` share the state layout (position, size, velocity, latent), so the
/// mean doubles as the point estimate fed back into the dynamics model.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    pub mean: LatentState,
    pub std: LatentState,
}

impl BeliefState {
    pub fn objects(&self) -> usize {
        self.mean.objects
    }

    pub fn pos_belief(&self, o: usize) -> GaussianBelief {
        GaussianBelief::new(self.mean.pos(o).to_vec(), self.std.pos(o).to_vec())
    }

    pub fn size_belief(&self, o: usize) -> GaussianBelief {
        GaussianBelief::new(self.mean.size(o).to_vec(), self.std.size(o).to_vec())
    }

    pub fn velo_belief(&self, o: usize) -> GaussianBelief {
        GaussianBelief::new(self.mean.velo(o).to_vec(), self.std.velo(o).to_vec())
    }

    pub fn latent_belief(&self, o: usize) -> GaussianBelief {
        GaussianBelief::new(self.mean.latent(o).to_vec(), self.std.latent(o).to_vec())
    }

    fn set_slices(
        &mut self,
        o: usize,
        pos: &GaussianBelief,
        size: &GaussianBelief,
        velo: &GaussianBelief,
        latent: &GaussianBelief,
    ) {
        self.mean.set_pos(o, [pos.mean[0], pos.mean[1]]);
        self.std.set_pos(o, [pos.std[0], pos.std[1]]);
        self.mean.set_size(o, [size.mean[0], size.mean[1]]);
        self.std.set_size(o, [size.std[0], size.std[1]]);
        self.mean.set_velo(o, [velo.mean[0], velo.mean[1]]);
        self.std.set_velo(o, [velo.std[0], velo.std[1]]);
        self.mean.set_latent(o, &latent.mean);
        self.std.set_latent(o, &latent.std);
    }
}

/// Builds the belief at t=1 from the first two detections. Object order
/// follows `det_0`; `det_1` is matched to it. Velocities come from the
/// position difference, latents from a standard-normal prior.
pub fn initialize_beliefs(
    det_0: &DetectionSet,
    det_1: &DetectionSet,
    latent_dim: usize,
) -> BeliefState {
    let n = det_0.objects.len();
    assert_eq!(
        n,
        det_1.objects.len(),
        "initialize: {n} objects at t=0 vs {} at t=1",
        det_1.objects.len()
    );
    let perm = match_objects(&det_0.positions(), &det_1.positions());
    let mut belief = BeliefState {
        mean: LatentState::zeros(n, latent_dim),
        std: LatentState::zeros(n, latent_dim),
    };
    let prior = GaussianBelief::new(vec![0.0; latent_dim], vec![1.0; latent_dim]);
    for o in 0..n {
        let first = &det_0.objects[o];
        let current = &det_1.objects[perm[o]];
        let velo = velocity_belief(&current.pos, &first.pos);
        belief.set_slices(o, &current.pos, &current.size, &velo, &prior);
    }
    belief
}

/// Wraps a one-element transition prediction as a belief over the next
/// state, using the separately predicted proposal stds. The size slice is
/// not predicted by the network and is carried from `prev` unchanged.
pub fn proposal_from_prediction(
    pred: &TransitionPrediction,
    prev: &BeliefState,
) -> BeliefState {
    assert_eq!(pred.batch(), 1, "proposal: batch {} predictions", pred.batch());
    let mut out = prev.clone();
    for o in 0..prev.objects() {
        out.mean.apply_net_row(o, pred.mean_row(0, o));
        out.std.apply_net_row(o, pred.proposal_std_row(0, o));
    }
    out
}

/// Fuses a dynamics proposal with a detection set. Detections are matched
/// to the proposal means; position and velocity multiply as Gaussians, size
/// copies the detection, latent copies the proposal. `prev` supplies the
/// previous position beliefs for the velocity observation.
pub fn fuse_step(
    prev: &BeliefState,
    proposal: &BeliefState,
    detection: &DetectionSet,
) -> BeliefState {
    let n = prev.objects();
    assert_eq!(
        n,
        detection.objects.len(),
        "fuse: {n} tracked objects vs {} detections",
        detection.objects.len()
    );
    let proposal_pos: Vec<[f64; 2]> = (0..n).map(|o| proposal.mean.pos(o)).collect();
    let perm = match_objects(&proposal_pos, &detection.positions());
    let mut out = proposal.clone();
    for o in 0..n {
        let det = &detection.objects[perm[o]];
        let pos = product_of_gaussians(&proposal.pos_belief(o), &det.pos);
        let velo_obs = velocity_belief(&det.pos, &prev.pos_belief(o));
        let velo = product_of_gaussians(&proposal.velo_belief(o), &velo_obs);
        out.set_slices(o, &pos, &det.size, &velo, &proposal.latent_belief(o));
    }
    out
}

/// One full filter step: propose with the dynamics model, then fuse with
/// the detection. `ctx`, when present, must carry exactly one action.
pub fn filter_step(
    model: &DynamicsModel,
    prev: &BeliefState,
    detection: &DetectionSet,
    ctx: Option<&ActionContext>,
) -> Result<BeliefState> {
    if let Some(c) = ctx {
        if c.actions.len() != 1 {
            return Err(Error::Config(format!(
                "filter step wants exactly one action, got {}",
                c.actions.len()
            )));
        }
    }
    let pred = model.forward_states(std::slice::from_ref(&prev.mean), ctx)?;
    let proposal = proposal_from_prediction(&pred, prev);
    Ok(fuse_step(prev, &proposal, detection))
}

/// Renders a filter trajectory as CSV with columns t, object, slice, mean,
/// std. Slice names: pos_x, pos_y, size_x, size_y, velo_x, velo_y,
/// latent_0, latent_1, ...
pub fn trace_csv(states: &[BeliefState]) -> String {
    let mut out = String::from("t,object,slice,mean,std\n");
    for (t, s) in states.iter().enumerate() {
        for o in 0..s.objects() {
            let mut push = |slice: &str, mean: f64, std: f64| {
                out.push_str(&format!("{t},{o},{slice},{mean},{std}\n"));
            };
            let (pm, ps) = (s.mean.pos(o), s.std.pos(o));
            push("pos_x", pm[0], ps[0]);
            push("pos_y", pm[1], ps[1]);
            let (zm, zs) = (s.mean.size(o), s.std.size(o));
            push("size_x", zm[0], zs[0]);
            push("size_y", zm[1], zs[1]);
            let (vm, vs) = (s.mean.velo(o), s.std.velo(o));
            push("velo_x", vm[0], vs[0]);
            push("velo_y", vm[1], vs[1]);
            for (k, (m, d)) in s.mean.latent(o).iter().zip(s.std.latent(o)).enumerate() {
                push(&format!("latent_{k}"), *m, *d);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn b(mean: &[f64], std: &[f64]) -> GaussianBelief {
        GaussianBelief::new(mean.to_vec(), std.to_vec())
    }

    fn pdf(x: f64, mean: f64, std: f64) -> f64 {
        let z = (x - mean) / std;
        (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
    }

    #[test]
    fn product_of_gaussians_closed_forms() {
        let equal = product_of_gaussians(&b(&[0.3], &[0.2]), &b(&[0.3], &[0.2]));
        assert!((equal.mean[0] - 0.3).abs() < 1e-15);
        assert!((equal.std[0] - 0.2 / 2.0f64.sqrt()).abs() < 1e-15);

        let diffuse = product_of_gaussians(&b(&[0.3], &[0.2]), &b(&[50.0], &[1e6]));
        assert!((diffuse.mean[0] - 0.3).abs() < 1e-6);
        assert!((diffuse.std[0] - 0.2).abs() < 1e-6);

        let mixed = product_of_gaussians(&b(&[0.0], &[1.0]), &b(&[3.0], &[2.0]));
        assert!((mixed.mean[0] - 0.6).abs() < 1e-12);
        assert!((mixed.std[0] - 0.8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn product_is_commutative_and_adds_precision() {
        let x = b(&[0.1, -0.4], &[0.3, 0.05]);
        let y = b(&[0.7, 0.2], &[0.9, 0.4]);
        let xy = product_of_gaussians(&x, &y);
        let yx = product_of_gaussians(&y, &x);
        assert_eq!(xy, yx);
        for i in 0..2 {
            let precision = 1.0 / (xy.std[i] * xy.std[i]);
            let want = 1.0 / (x.std[i] * x.std[i]) + 1.0 / (y.std[i] * y.std[i]);
            assert!((precision - want).abs() < 1e-9 * want);
        }
    }

    /// The defining property: the pointwise product of the two densities is
    /// proportional to the fused density, with one constant across x.
    #[test]
    fn product_density_is_proportional_to_fused_density() {
        let x = b(&[0.1], &[0.25]);
        let y = b(&[0.9], &[0.6]);
        let fused = product_of_gaussians(&x, &y);
        let ratio_at = |t: f64| {
            pdf(t, x.mean[0], x.std[0]) * pdf(t, y.mean[0], y.std[0])
                / pdf(t, fused.mean[0], fused.std[0])
        };
        let base = ratio_at(fused.mean[0]);
        for k in 0..10 {
            let t = fused.mean[0] + (k as f64 - 4.5) * fused.std[0];
            let r = ratio_at(t);
            assert!(
                (r - base).abs() < 1e-9 * base,
                "ratio drifted at x={t}: {r} vs {base}"
            );
        }
    }

    #[test]
    fn velocity_belief_closed_forms() {
        let stay = velocity_belief(&b(&[0.4, 0.4], &[0.01, 0.01]), &b(&[0.4, 0.4], &[0.01, 0.01]));
        assert_eq!(stay.mean, vec![0.0, 0.0]);
        assert!((stay.std[0] - 0.01 * 2.0f64.sqrt()).abs() < 1e-15);

        let moved = velocity_belief(
            &b(&[0.5, 0.5], &[0.01, 0.01]),
            &b(&[0.4, 0.45], &[0.01, 0.01]),
        );
        assert!((moved.mean[0] - 0.1).abs() < 1e-12);
        assert!((moved.mean[1] - 0.05).abs() < 1e-12);
        assert!((moved.std[0] - 0.014142135623730951).abs() < 1e-15);

        // Translating both positions leaves the velocity untouched.
        let shifted = velocity_belief(
            &b(&[0.5 + 7.25, 0.5 + 7.25], &[0.01, 0.01]),
            &b(&[0.4 + 7.25, 0.45 + 7.25], &[0.01, 0.01]),
        );
        assert!((shifted.mean[0] - moved.mean[0]).abs() < 1e-12);
        assert!((shifted.mean[1] - moved.mean[1]).abs() < 1e-12);
    }

    fn three_ball_state() -> SimState {
        SimState {
            positions: vec![[0.2, 0.2], [0.8, 0.3], [0.5, 0.8]],
            velocities: vec![[0.01, 0.0], [0.0, 0.02], [-0.01, -0.01]],
            radii: vec![0.1; 3],
            masses: vec![1.0; 3],
        }
    }

    #[test]
    fn noiseless_detector_reports_exact_positions() {
        let state = three_ball_state();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let det = synthetic_detector(&state, 0.0, &mut rng);
        let perm = match_objects(&state.positions, &det.positions());
        for o in 0..3 {
            let d = &det.objects[perm[o]];
            assert_eq!(d.pos.mean, state.positions[o].to_vec());
            assert_eq!(d.size.mean, vec![0.2, 0.2]);
            assert_eq!(d.pos.std, vec![DETECTOR_STD_FLOOR; 2]);
        }
    }

    #[test]
    fn detector_noise_has_the_right_scale() {
        let state = three_ball_state();
        let sigma = 0.05;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut abs_sum = 0.0;
        let mut count = 0usize;
        for _ in 0..10_000 {
            let det = synthetic_detector(&state, sigma, &mut rng);
            let perm = match_objects(&state.positions, &det.positions());
            for o in 0..3 {
                let d = &det.objects[perm[o]];
                abs_sum += (d.pos.mean[0] - state.positions[o][0]).abs();
                abs_sum += (d.pos.mean[1] - state.positions[o][1]).abs();
                count += 2;
            }
        }
        // E|N(0, s)| = s * sqrt(2/pi); allow three standard errors of the
        // mean of |N| (std s * sqrt(1 - 2/pi)).
        let mad = abs_sum / count as f64;
        let want = sigma * (2.0 / std::f64::consts::PI).sqrt();
        let se = sigma * (1.0 - 2.0 / std::f64::consts::PI).sqrt() / (count as f64).sqrt();
        assert!(
            (mad - want).abs() < 3.0 * se,
            "mean abs deviation {mad} vs {want} (3se {})",
            3.0 * se
        );
    }

    #[test]
    fn detector_shuffle_is_uniform() {
        let state = three_ball_state();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Identify the permutation by matching noiseless detections back to
        // the true object order.
        let mut counts = [0usize; 6];
        let index_of = |p: &[usize]| -> usize {
            // Lehmer code for O=3: 2*p[0] + (p[1] > p[2]) as usize.
            2 * p[0] + usize::from(p[1] > p[2])
        };
        let draws = 10_000;
        for _ in 0..draws {
            let det = synthetic_detector(&state, 0.0, &mut rng);
            let perm = match_objects(&state.positions, &det.positions());
            counts[index_of(&perm)] += 1;
        }
        let expected = draws as f64 / 6.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // 99.9th percentile of chi-squared with 5 degrees of freedom.
        assert!(chi2 < 20.515, "chi^2 {chi2} over counts {counts:?}");
    }

    #[test]
    fn initialization_recovers_velocities() {
        let sigma = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut t0 = three_ball_state();
        t0.velocities = vec![[0.0, 0.0], [0.125, 0.0], [0.02, -0.03]];
        let mut t1 = t0.clone();
        for o in 0..3 {
            t1.positions[o][0] += t1.velocities[o][0];
            t1.positions[o][1] += t1.velocities[o][1];
        }
        let det0 = synthetic_detector(&t0, sigma, &mut rng);
        let det1 = synthetic_detector(&t1, sigma, &mut rng);
        let belief = initialize_beliefs(&det0, &det1, 12);

        // Objects follow det_0's (shuffled) order; match back to truth.
        let perm = match_objects(&t0.positions, &det0.positions());
        for o in 0..3 {
            let v = belief.mean.velo(perm[o]);
            assert!((v[0] - t0.velocities[o][0]).abs() < 1e-12);
            assert!((v[1] - t0.velocities[o][1]).abs() < 1e-12);
            let l = belief.latent_belief(perm[o]);
            assert!(l.mean.iter().all(|&m| m == 0.0));
            assert!(l.std.iter().all(|&s| s == 1.0));
        }
        // The static object's velocity is exactly zero.
        let v0 = belief.mean.velo(perm[0]);
        assert_eq!(v0, [0.0, 0.0]);
    }

    fn uniform_belief(objects: usize, pos: &[[f64; 2]], std: f64) -> BeliefState {
        let mut s = BeliefState {
            mean: LatentState::zeros(objects, 12),
            std: LatentState::zeros(objects, 12),
        };
        for o in 0..objects {
            s.mean.set_pos(o, pos[o]);
            s.mean.set_size(o, [0.2, 0.2]);
            s.std.set_pos(o, [std; 2]);
            s.std.set_size(o, [std; 2]);
            s.std.set_velo(o, [std; 2]);
            s.std.set_latent(o, &vec![1.0; 12]);
        }
        s
    }

    #[test]
    fn fusion_obeys_the_diffuse_limits() {
        let prev = uniform_belief(2, &[[0.3, 0.3], [0.7, 0.7]], 0.1);
        let mut proposal = uniform_belief(2, &[[0.32, 0.3], [0.7, 0.72]], 0.05);
        proposal.mean.set_velo(0, [0.02, 0.0]);
        proposal.mean.set_velo(1, [0.0, 0.02]);

        // Diffuse detections: the proposal passes through.
        let diffuse = DetectionSet {
            objects: (0..2)
                .map(|o| Detection {
                    pos: GaussianBelief::new(vec![0.5, 0.5 + o as f64 * 0.01], vec![1e6; 2]),
                    size: GaussianBelief::new(vec![0.25, 0.25], vec![1e6; 2]),
                })
                .collect(),
        };
        let fused = fuse_step(&prev, &proposal, &diffuse);
        for o in 0..2 {
            let p = fused.mean.pos(o);
            let want = proposal.mean.pos(o);
            assert!((p[0] - want[0]).abs() < 1e-6 && (p[1] - want[1]).abs() < 1e-6);
        }

        // Sharp detections: the detection wins.
        let sharp = DetectionSet {
            objects: vec![
                Detection {
                    pos: GaussianBelief::new(vec![0.71, 0.73], vec![DETECTOR_STD_FLOOR; 2]),
                    size: GaussianBelief::new(vec![0.2, 0.2], vec![DETECTOR_STD_FLOOR; 2]),
                },
                Detection {
                    pos: GaussianBelief::new(vec![0.33, 0.31], vec![DETECTOR_STD_FLOOR; 2]),
                    size: GaussianBelief::new(vec![0.2, 0.2], vec![DETECTOR_STD_FLOOR; 2]),
                },
            ],
        };
        let fused = fuse_step(&prev, &proposal, &sharp);
        // Matching routes detection 1 to object 0 and detection 0 to object 1.
        let p0 = fused.mean.pos(0);
        assert!((p0[0] - 0.33).abs() < 1e-6 && (p0[1] - 0.31).abs() < 1e-6);
        let p1 = fused.mean.pos(1);
        assert!((p1[0] - 0.71).abs() < 1e-6 && (p1[1] - 0.73).abs() < 1e-6);
        // Size copies the detection; latent copies the proposal.
        assert_eq!(fused.mean.size(0), [0.2, 0.2]);
        assert_eq!(fused.mean.latent(0), proposal.mean.latent(0));
    }

    /// Shrinking the detection std pulls the fused mean monotonically
    /// toward the detection.
    #[test]
    fn fused_position_moves_monotonically_with_detector_noise() {
        let prev = uniform_belief(2, &[[0.3, 0.3], [0.7, 0.7]], 0.1);
        let proposal = uniform_belief(2, &[[0.3, 0.3], [0.7, 0.7]], 0.05);
        let det_at = |std: f64| DetectionSet {
            objects: vec![
                Detection {
                    pos: GaussianBelief::new(vec![0.36, 0.3], vec![std; 2]),
                    size: GaussianBelief::new(vec![0.2, 0.2], vec![std; 2]),
                },
                Detection {
                    pos: GaussianBelief::new(vec![0.7, 0.64], vec![std; 2]),
                    size: GaussianBelief::new(vec![0.2, 0.2], vec![std; 2]),
                },
            ],
        };
        let mut last = f64::INFINITY;
        for std in [0.5, 0.1, 0.02, 0.004, DETECTOR_STD_FLOOR] {
            let fused = fuse_step(&prev, &proposal, &det_at(std));
            let gap = (fused.mean.pos(0)[0] - 0.36).abs();
            assert!(gap < last, "gap {gap} did not shrink at std {std}");
            last = gap;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn trace_csv_lists_every_slice() {
        let s = uniform_belief(2, &[[0.3, 0.3], [0.7, 0.7]], 0.1);
        let csv = trace_csv(&[s.clone(), s]);
        let lines: Vec<&str> = csv.lines().collect();
        // Header + 2 steps * 2 objects * (6 + 12) slices.
        assert_eq!(lines.len(), 1 + 2 * 2 * 18);
        assert_eq!(lines[0], "t,object,slice,mean,std");
        assert!(lines[1].starts_with("0,0,pos_x,0.3,"));
        assert!(lines.iter().any(|l| l.starts_with("1,1,latent_11,")));
    }
}
