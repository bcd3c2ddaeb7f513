//! Kinetic-energy proxy from position differences.
//!
//! E_t = 1/2 * sum_o m_o * |p_t - p_(t-1)|^2 / dt^2. Defined from positions
//! rather than stored velocities so the same diagnostic applies to model
//! rollouts, filtered trajectories, and ground truth alike. Undefined at
//! t = 0, which is an error rather than a silent zero.

use crate::{Error, Result};

/// Energy at frame `t` (t >= 1) of a trajectory laid out as `[frame][object]`.
pub fn kinetic_energy(
    positions: &[Vec<[f64; 2]>],
    masses: &[f64],
    dt: f64,
    t: usize,
) -> Result<f64> {
    if t == 0 {
        return Err(Error::Config(
            "position-difference energy is undefined at t = 0".into(),
        ));
    }
    if t >= positions.len() {
        return Err(Error::Config(format!(
            "frame {t} out of range for trajectory of length {}",
            positions.len()
        )));
    }
    let (prev, cur) = (&positions[t - 1], &positions[t]);
    assert_eq!(cur.len(), masses.len(), "object count mismatch");
    let mut e = 0.0;
    for ((p, q), &m) in cur.iter().zip(prev).zip(masses) {
        let dx = (p[0] - q[0]) / dt;
        let dy = (p[1] - q[1]) / dt;
        e += 0.5 * m * (dx * dx + dy * dy);
    }
    Ok(e)
}

/// Energies for every defined frame, t = 1..len.
pub fn energy_series(positions: &[Vec<[f64; 2]>], masses: &[f64], dt: f64) -> Vec<f64> {
    (1..positions.len())
        .map(|t| kinetic_energy(positions, masses, dt, t).expect("t >= 1 in range"))
        .collect()
}
