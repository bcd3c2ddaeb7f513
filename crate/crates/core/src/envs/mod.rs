//! Ground-truth physics environments on the unit square.
//!
//! Two base worlds: elastic billiards (hard discs, mirror walls) and clipped
//! pairwise gravity with a weak spring toward the canvas center. A third
//! variant adds a 9-action impulse control on object 0 and a collision
//! penalty, for the planning task.
//!
//! Conventions shared by every environment: canvas is [0, 1] x [0, 1],
//! positions are disc centers, masses default to 1, one frame advances time
//! by `dt` (default 1), and all simulation runs in f64.

pub mod billiards;
pub mod control;
pub mod dataset;
pub mod energy;
pub mod gravity;
pub mod render;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use billiards::{step_billiards, step_billiards_events};
pub use control::{action_impulse, step_controlled, ACTIONS, REST_ACTION};
pub use dataset::{generate_dataset, Dataset};
pub use energy::{energy_series, kinetic_energy};
pub use gravity::step_gravity;
pub use render::{object_colors, render_frame, Image};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKind {
    Billiards,
    Gravity,
    BilliardsControl,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Billiards => "billiards",
            EnvKind::Gravity => "gravity",
            EnvKind::BilliardsControl => "billiards-control",
        }
    }
}

/// Full description of a world. Unknown keys are rejected when deserialized
/// so a typo in a config file fails loudly instead of silently using a
/// default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub kind: EnvKind,
    pub objects: usize,
    pub radius: f64,
    pub mass: f64,
    pub dt: f64,
    /// Billiards: per-component std of the Gaussian velocity draw.
    /// Gravity: tangential launch speed.
    pub velocity_scale: f64,
    /// When false (the default), each billiards draw is rescaled to the same
    /// total kinetic energy. When true, a per-sequence energy factor in
    /// [0.25, 4.0] is applied instead, for energy-diversity studies.
    pub diverse_energy: bool,
    pub gravity_g: f64,
    /// Pair forces are clipped below this separation to avoid singularities.
    pub force_clip_dist: f64,
    /// Spring constant of the central basin (acceleration per unit offset).
    pub basin_strength: f64,
    /// Impulse magnitude added to the controlled ball per action frame.
    pub action_impulse: f64,
    /// Rendered frame edge length in pixels.
    pub resolution: usize,
}

impl EnvConfig {
    pub fn billiards() -> Self {
        EnvConfig {
            kind: EnvKind::Billiards,
            objects: 3,
            radius: 0.1,
            mass: 1.0,
            dt: 1.0,
            velocity_scale: 0.055,
            diverse_energy: false,
            gravity_g: 0.0,
            force_clip_dist: 0.0,
            basin_strength: 0.0,
            action_impulse: 0.0,
            resolution: 32,
        }
    }

    pub fn gravity() -> Self {
        EnvConfig {
            kind: EnvKind::Gravity,
            objects: 3,
            radius: 0.06,
            mass: 1.0,
            dt: 1.0,
            velocity_scale: 0.02,
            diverse_energy: false,
            gravity_g: 1.2e-4,
            force_clip_dist: 0.15,
            basin_strength: 1.0e-2,
            action_impulse: 0.0,
            resolution: 50,
        }
    }

    pub fn billiards_control() -> Self {
        EnvConfig {
            action_impulse: 0.01,
            kind: EnvKind::BilliardsControl,
            ..EnvConfig::billiards()
        }
    }

    pub fn for_kind(kind: EnvKind) -> Self {
        match kind {
            EnvKind::Billiards => Self::billiards(),
            EnvKind::Gravity => Self::gravity(),
            EnvKind::BilliardsControl => Self::billiards_control(),
        }
    }

    /// Target total kinetic energy of a constant-energy draw.
    pub fn energy_target(&self) -> f64 {
        self.objects as f64 * self.mass * self.velocity_scale * self.velocity_scale
    }

    pub fn validate(&self) -> Result<()> {
        if self.objects < 1 {
            return Err(Error::Config("need at least one object".into()));
        }
        if !(self.radius > 0.0 && self.radius < 0.5) {
            return Err(Error::Config(format!(
                "radius {} must lie in (0, 0.5)",
                self.radius
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt {} must be positive", self.dt)));
        }
        if self.resolution < 2 {
            return Err(Error::Config("resolution must be at least 2".into()));
        }
        Ok(())
    }
}

/// Instantaneous world state: disc centers, velocities, and per-object
/// constants. All vectors have one entry per object.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub positions: Vec<[f64; 2]>,
    pub velocities: Vec<[f64; 2]>,
    pub radii: Vec<f64>,
    pub masses: Vec<f64>,
}

impl SimState {
    pub fn objects(&self) -> usize {
        self.positions.len()
    }

    pub fn total_momentum(&self) -> [f64; 2] {
        let mut p = [0.0, 0.0];
        for (v, &m) in self.velocities.iter().zip(&self.masses) {
            p[0] += m * v[0];
            p[1] += m * v[1];
        }
        p
    }

    /// Instantaneous kinetic energy from the velocity field (the
    /// position-difference proxy lives in [`energy`]).
    pub fn kinetic_energy_velocity(&self) -> f64 {
        self.velocities
            .iter()
            .zip(&self.masses)
            .map(|(v, &m)| 0.5 * m * (v[0] * v[0] + v[1] * v[1]))
            .sum()
    }
}

/// How many whole-configuration draws to attempt before declaring the
/// packing infeasible.
const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

/// Draws disc centers uniformly in the admissible region, rejecting any
/// configuration with overlaps, and reports how many draws it took. Whole
/// configurations are redrawn (not single discs) so accepted samples are
/// exactly uniform on the overlap-free set.
///
/// For billiards the admissible region is the whole canvas minus the wall
/// margin. Gravity has no walls; its admissible region is the central square
/// from which orbits stay on canvas: balls launched tangentially around the
/// center cannot outgrow their initial center distance by much, so capping
/// that distance at placement time is what keeps long runs in view.
pub fn sample_positions(cfg: &EnvConfig, rng: &mut impl Rng) -> Result<(Vec<[f64; 2]>, usize)> {
    let r = cfg.radius;
    let (lo, hi) = match cfg.kind {
        EnvKind::Billiards | EnvKind::BilliardsControl => (r, 1.0 - r),
        EnvKind::Gravity => (0.25, 0.75),
    };
    if hi <= lo {
        return Err(Error::Config(format!("radius {r} leaves no admissible region")));
    }
    for attempt in 1..=MAX_PLACEMENT_ATTEMPTS {
        let positions: Vec<[f64; 2]> = (0..cfg.objects)
            .map(|_| [rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)])
            .collect();
        let mut ok = true;
        'pairs: for i in 0..positions.len() {
            for j in i + 1..positions.len() {
                let dx = positions[i][0] - positions[j][0];
                let dy = positions[i][1] - positions[j][1];
                if dx * dx + dy * dy < (2.0 * r) * (2.0 * r) {
                    ok = false;
                    break 'pairs;
                }
            }
        }
        if ok {
            return Ok((positions, attempt));
        }
    }
    Err(Error::Config(format!(
        "could not place {} discs of radius {r} in {MAX_PLACEMENT_ATTEMPTS} attempts",
        cfg.objects
    )))
}

/// Samples a full initial state: uniform overlap-free positions plus
/// kind-specific velocities.
///
/// Billiards velocities are i.i.d. Gaussian, rescaled to the configured
/// total energy (or to a per-sequence energy factor in diverse mode, drawn
/// uniformly from [0.5, 2.0] on the scale). Gravity velocities point
/// orthogonal to the offset from the canvas center and the whole system is
/// shifted into the zero-momentum frame.
pub fn sample_initial_state(cfg: &EnvConfig, rng: &mut impl Rng) -> Result<SimState> {
    cfg.validate()?;
    let (positions, _) = sample_positions(cfg, rng)?;
    let scale_factor = if cfg.diverse_energy {
        rng.gen_range(0.5..=2.0)
    } else {
        1.0
    };
    let mut state = SimState {
        positions,
        velocities: vec![[0.0, 0.0]; cfg.objects],
        radii: vec![cfg.radius; cfg.objects],
        masses: vec![cfg.mass; cfg.objects],
    };
    match cfg.kind {
        EnvKind::Billiards | EnvKind::BilliardsControl => {
            let s = cfg.velocity_scale;
            loop {
                for v in &mut state.velocities {
                    v[0] = s * rng.sample::<f64, _>(StandardNormal);
                    v[1] = s * rng.sample::<f64, _>(StandardNormal);
                }
                let e = state.kinetic_energy_velocity();
                if e > 1e-12 {
                    let target = cfg.energy_target() * scale_factor * scale_factor;
                    let k = (target / e).sqrt();
                    for v in &mut state.velocities {
                        v[0] *= k;
                        v[1] *= k;
                    }
                    break;
                }
            }
        }
        EnvKind::Gravity => {
            // Momentum zeroing freezes the center of mass wherever it starts,
            // and the basin effectively binds each ball to that frozen point.
            // Shift the draw so the center of mass is the canvas center
            // (redrawing when the shift pushes a ball off-canvas); combined
            // with tangential launches, orbits then cannot outgrow their
            // initial distance from the center by much.
            let total: f64 = state.masses.iter().sum();
            loop {
                let mut com = [0.0f64; 2];
                for (p, m) in state.positions.iter().zip(&state.masses) {
                    com[0] += m * p[0] / total;
                    com[1] += m * p[1] / total;
                }
                let shift = [0.5 - com[0], 0.5 - com[1]];
                let ok = state.positions.iter().all(|p| {
                    let x = p[0] + shift[0];
                    let y = p[1] + shift[1];
                    (cfg.radius..=1.0 - cfg.radius).contains(&x)
                        && (cfg.radius..=1.0 - cfg.radius).contains(&y)
                });
                if ok {
                    for p in &mut state.positions {
                        p[0] += shift[0];
                        p[1] += shift[1];
                    }
                    break;
                }
                let (positions, _) = sample_positions(cfg, rng)?;
                state.positions = positions;
            }
            let speed = cfg.velocity_scale * scale_factor;
            for (v, p) in state.velocities.iter_mut().zip(&state.positions) {
                let dx = p[0] - 0.5;
                let dy = p[1] - 0.5;
                let norm = (dx * dx + dy * dy).sqrt();
                let (tx, ty) = if norm < 1e-9 {
                    (1.0, 0.0)
                } else {
                    (-dy / norm, dx / norm)
                };
                *v = [speed * tx, speed * ty];
            }
            gravity::remove_momentum(&mut state);
        }
    }
    Ok(state)
}

/// Advances one frame of whichever world the config describes. Control
/// environments should use [`step_controlled`] to pass an action; this entry
/// point applies the rest action.
pub fn step(state: &SimState, cfg: &EnvConfig, dt: f64) -> SimState {
    match cfg.kind {
        EnvKind::Billiards | EnvKind::BilliardsControl => step_billiards(state, dt),
        EnvKind::Gravity => step_gravity(state, cfg, dt),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn placement_is_overlap_free_and_in_bounds() {
        let cfg = EnvConfig::billiards();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let s = sample_initial_state(&cfg, &mut rng).unwrap();
            for p in &s.positions {
                assert!(p[0] >= cfg.radius && p[0] <= 1.0 - cfg.radius);
                assert!(p[1] >= cfg.radius && p[1] <= 1.0 - cfg.radius);
            }
            for i in 0..s.objects() {
                for j in i + 1..s.objects() {
                    let dx = s.positions[i][0] - s.positions[j][0];
                    let dy = s.positions[i][1] - s.positions[j][1];
                    assert!((dx * dx + dy * dy).sqrt() >= 2.0 * cfg.radius - 1e-12);
                }
            }
        }
    }

    #[test]
    fn acceptance_rate_matches_monte_carlo_overlap_probability() {
        // The generator redraws whole configurations, so its acceptance rate
        // estimates the same probability as a direct Monte-Carlo count of
        // overlap-free triples.
        let cfg = EnvConfig::billiards();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 40_000usize;
        let mut accepted = 0usize;
        let lo = cfg.radius;
        let hi = 1.0 - cfg.radius;
        for _ in 0..draws {
            let ps: Vec<[f64; 2]> = (0..cfg.objects)
                .map(|_| [rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)])
                .collect();
            let mut ok = true;
            for i in 0..ps.len() {
                for j in i + 1..ps.len() {
                    let dx = ps[i][0] - ps[j][0];
                    let dy = ps[i][1] - ps[j][1];
                    if dx * dx + dy * dy < 4.0 * cfg.radius * cfg.radius {
                        ok = false;
                    }
                }
            }
            accepted += ok as usize;
        }
        let p_direct = accepted as f64 / draws as f64;

        let mut rng2 = ChaCha8Rng::seed_from_u64(12);
        let samples = 4_000usize;
        let mut attempts = 0usize;
        for _ in 0..samples {
            attempts += sample_positions(&cfg, &mut rng2).unwrap().1;
        }
        let p_generator = samples as f64 / attempts as f64;

        // Three-sigma band for the combined estimators.
        let var = p_direct * (1.0 - p_direct) * (1.0 / draws as f64)
            + p_direct * (1.0 - p_direct) / (attempts as f64);
        let tol = 3.0 * var.sqrt();
        assert!(
            (p_direct - p_generator).abs() < tol,
            "direct {p_direct:.4} vs generator {p_generator:.4} (tol {tol:.4})"
        );
    }

    #[test]
    fn constant_energy_mode_fixes_the_draw_energy() {
        let cfg = EnvConfig::billiards();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let target = cfg.energy_target();
        for _ in 0..50 {
            let s = sample_initial_state(&cfg, &mut rng).unwrap();
            let e = s.kinetic_energy_velocity();
            assert!((e - target).abs() / target < 1e-12, "energy {e} target {target}");
        }
    }

    #[test]
    fn diverse_energy_mode_varies_the_draw_energy() {
        let cfg = EnvConfig {
            diverse_energy: true,
            ..EnvConfig::billiards()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let base = EnvConfig::billiards().energy_target();
        let mut lowest = f64::INFINITY;
        let mut highest = 0.0f64;
        for _ in 0..200 {
            let s = sample_initial_state(&cfg, &mut rng).unwrap();
            let e = s.kinetic_energy_velocity() / base;
            lowest = lowest.min(e);
            highest = highest.max(e);
            assert!((0.25 - 1e-9..=4.0 + 1e-9).contains(&e), "factor {e}");
        }
        assert!(lowest < 0.5, "never saw a low-energy draw (min {lowest})");
        assert!(highest > 2.0, "never saw a high-energy draw (max {highest})");
    }

    #[test]
    fn gravity_initial_state_has_zero_momentum() {
        let cfg = EnvConfig::gravity();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let s = sample_initial_state(&cfg, &mut rng).unwrap();
            let p = s.total_momentum();
            assert!(p[0].abs() < 1e-12 && p[1].abs() < 1e-12, "momentum {p:?}");
        }
    }

    #[test]
    fn infeasible_packing_is_an_error() {
        let cfg = EnvConfig {
            objects: 12,
            radius: 0.24,
            ..EnvConfig::billiards()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_positions(&cfg, &mut rng).is_err());
    }

    #[test]
    fn config_json_rejects_unknown_keys() {
        let mut v = serde_json::to_value(EnvConfig::billiards()).unwrap();
        v.as_object_mut()
            .unwrap()
            .insert("velocty_scale".into(), 1.0.into());
        assert!(serde_json::from_value::<EnvConfig>(v).is_err());
    }
}
