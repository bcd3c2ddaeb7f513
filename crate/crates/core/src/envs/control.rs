//! Impulse control on top of billiards: 9 actions (8 compass directions
//! plus rest) push object 0, and touching any other disc costs reward -1.

use super::{billiards, EnvConfig, SimState};
use crate::{Error, Result};

pub const ACTIONS: usize = 9;
pub const REST_ACTION: usize = 8;

/// Velocity change for an action: actions 0..8 point along compass
/// directions counterclockwise from +x in 45 degree steps, all with the same
/// magnitude; action 8 is rest.
pub fn action_impulse(action: usize, magnitude: f64) -> [f64; 2] {
    assert!(action < ACTIONS, "action {action} out of range");
    if action == REST_ACTION {
        return [0.0, 0.0];
    }
    let angle = action as f64 * std::f64::consts::FRAC_PI_4;
    [magnitude * angle.cos(), magnitude * angle.sin()]
}

/// Applies the impulse to object 0, advances one billiards frame, and
/// returns the new state with the collision reward: -1 if object 0 touched
/// any other disc during the frame, else 0.
pub fn step_controlled(state: &SimState, action: usize, cfg: &EnvConfig) -> Result<(SimState, f64)> {
    if action >= ACTIONS {
        return Err(Error::Config(format!(
            "action {action} out of range, expected 0..{ACTIONS}"
        )));
    }
    let mut s = state.clone();
    let imp = action_impulse(action, cfg.action_impulse);
    s.velocities[0][0] += imp[0];
    s.velocities[0][1] += imp[1];
    let (next, contacts) = billiards::step_billiards_events(&s, cfg.dt);
    let hit = contacts.iter().any(|&(i, j)| i == 0 || j == 0);
    Ok((next, if hit { -1.0 } else { 0.0 }))
}
