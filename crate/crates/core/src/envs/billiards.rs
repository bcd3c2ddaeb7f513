//! Elastic hard-disc billiards with mirror walls.
//!
//! The stepper is event-driven: within one frame it repeatedly finds the
//! earliest contact (disc-disc or disc-wall), advances every disc linearly to
//! that instant, applies the elastic impulse, and continues with the
//! remaining time. Motion between events is exactly linear and impulses are
//! exactly elastic, so kinetic energy is conserved to floating-point
//! precision and discs never overlap after a step.
//!
//! Simultaneous contacts are resolved one at a time in a fixed order (walls
//! first, then pairs, each by ascending object index), which keeps the
//! stepper deterministic even in degenerate configurations.

use super::SimState;

/// Hard cap on events per frame; generous, since random states produce at
/// most a handful. If it is ever hit the remaining time elapses without
/// further resolution rather than looping forever.
const MAX_EVENTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Event {
    /// Disc `i` reaches wall `axis` (0 = x, 1 = y) on the low or high side.
    Wall { i: usize, axis: usize, high: bool },
    Pair { i: usize, j: usize },
}

/// Advances one frame. See [`step_billiards_events`] for the contact list.
pub fn step_billiards(state: &SimState, dt: f64) -> SimState {
    step_billiards_events(state, dt).0
}

/// Advances one frame and reports every disc-disc contact that occurred
/// during it, in chronological order.
pub fn step_billiards_events(state: &SimState, dt: f64) -> (SimState, Vec<(usize, usize)>) {
    assert!(dt > 0.0, "dt {dt} must be positive");
    let mut s = state.clone();
    let mut contacts = Vec::new();
    let mut remaining = dt;

    for _ in 0..MAX_EVENTS {
        let Some((t, ev)) = earliest_event(&s, remaining) else {
            break;
        };
        advance(&mut s, t);
        remaining -= t;
        match ev {
            Event::Wall { i, axis, high } => {
                // Pin the coordinate to the wall exactly so bound invariants
                // hold without tolerance, then reflect.
                let r = s.radii[i];
                s.positions[i][axis] = if high { 1.0 - r } else { r };
                s.velocities[i][axis] = -s.velocities[i][axis];
            }
            Event::Pair { i, j } => {
                collide_pair(&mut s, i, j);
                contacts.push((i, j));
            }
        }
        if remaining <= 0.0 {
            return (s, contacts);
        }
    }
    advance(&mut s, remaining);
    (s, contacts)
}

fn advance(s: &mut SimState, t: f64) {
    for (p, v) in s.positions.iter_mut().zip(&s.velocities) {
        p[0] += v[0] * t;
        p[1] += v[1] * t;
    }
}

/// Finds the earliest contact within `horizon`. Scan order breaks exact
/// ties: walls before pairs, lower indices first.
fn earliest_event(s: &SimState, horizon: f64) -> Option<(f64, Event)> {
    let mut best: Option<(f64, Event)> = None;
    let mut consider = |t: f64, ev: Event| {
        if t <= horizon && best.map_or(true, |(bt, _)| t < bt) {
            best = Some((t, ev));
        }
    };

    for i in 0..s.objects() {
        let r = s.radii[i];
        for axis in 0..2 {
            let v = s.velocities[i][axis];
            let p = s.positions[i][axis];
            if v > 0.0 {
                let t = (1.0 - r - p) / v;
                consider(t.max(0.0), Event::Wall { i, axis, high: true });
            } else if v < 0.0 {
                let t = (r - p) / v;
                consider(t.max(0.0), Event::Wall { i, axis, high: false });
            }
        }
    }

    for i in 0..s.objects() {
        for j in i + 1..s.objects() {
            if let Some(t) = pair_contact_time(s, i, j) {
                consider(t, Event::Pair { i, j });
            }
        }
    }
    best
}

/// First future instant at which discs i and j touch, if they are
/// approaching. Solves |d + w t| = r_i + r_j for the smaller root.
fn pair_contact_time(s: &SimState, i: usize, j: usize) -> Option<f64> {
    let d = [
        s.positions[i][0] - s.positions[j][0],
        s.positions[i][1] - s.positions[j][1],
    ];
    let w = [
        s.velocities[i][0] - s.velocities[j][0],
        s.velocities[i][1] - s.velocities[j][1],
    ];
    let b = d[0] * w[0] + d[1] * w[1];
    if b >= 0.0 {
        return None; // separating or tangential
    }
    let a = w[0] * w[0] + w[1] * w[1];
    let rr = s.radii[i] + s.radii[j];
    let c = d[0] * d[0] + d[1] * d[1] - rr * rr;
    if c <= 0.0 {
        // Touching (or fractionally inside from round-off) while
        // approaching: contact is now.
        return Some(0.0);
    }
    let disc = b * b - a * c;
    if disc <= 0.0 || a == 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / a;
    (t >= 0.0).then_some(t)
}

/// Elastic impulse along the center line; reduces to swapping normal
/// velocity components for equal masses.
fn collide_pair(s: &mut SimState, i: usize, j: usize) {
    let dx = s.positions[j][0] - s.positions[i][0];
    let dy = s.positions[j][1] - s.positions[i][1];
    let dist = (dx * dx + dy * dy).sqrt();
    if dist < 1e-12 {
        return; // coincident centers carry no usable normal
    }
    let n = [dx / dist, dy / dist];
    let rel = (s.velocities[i][0] - s.velocities[j][0]) * n[0]
        + (s.velocities[i][1] - s.velocities[j][1]) * n[1];
    if rel <= 0.0 {
        return; // already separating along the normal
    }
    let (mi, mj) = (s.masses[i], s.masses[j]);
    let ki = 2.0 * mj / (mi + mj) * rel;
    let kj = 2.0 * mi / (mi + mj) * rel;
    s.velocities[i][0] -= ki * n[0];
    s.velocities[i][1] -= ki * n[1];
    s.velocities[j][0] += kj * n[0];
    s.velocities[j][1] += kj * n[1];
}
