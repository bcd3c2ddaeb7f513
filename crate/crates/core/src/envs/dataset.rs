//! Dataset generation and the on-disk container.
//!
//! Sequences are generated independently, each from its own counter-indexed
//! ChaCha stream of the dataset seed, so generation parallelizes without
//! changing results and any sequence can be regenerated in isolation.
//!
//! Container layout (integers and floats little-endian):
//!
//! ```text
//! magic "STVD" | version u16 | header len u32 | header JSON |
//! n u64 | t u64 | o u64 | h u64 | w u64 | c u64 | flags u8 |
//! f32 arrays in order: positions (n t o 2), velocities (n t o 2),
//!   radii (n o), masses (n o), then optionally frames (n t h w c),
//!   actions (n t), rewards (n t) as the flag bits indicate.
//! ```
//!
//! The header JSON holds the full environment config and the seed; loading
//! rejects unknown keys, wrong magic, and trailing bytes. Arrays are stored
//! in f32; simulation runs in f64 and casts on store, so regenerating from
//! the stored seed and config reproduces the file byte for byte.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    control, object_colors, render_frame, sample_initial_state, step, EnvConfig, EnvKind, SimState,
};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"STVD";
const VERSION: u16 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    config: EnvConfig,
    seed: u64,
}

/// A generated dataset: per-frame simulator states, plus rendered frames and
/// action/reward tracks when the environment calls for them.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub config: EnvConfig,
    pub seed: u64,
    pub n: usize,
    pub t: usize,
    /// `states[sequence][frame]`.
    pub states: Vec<Vec<SimState>>,
    /// Flattened `(n, t, h, w, c)` when rendered.
    pub frames: Option<Vec<f32>>,
    /// `(height, width, channels)` of one frame; (0, 0, 0) when absent.
    pub frame_shape: (usize, usize, usize),
    /// `actions[sequence * t + frame]` drives the transition frame -> frame+1.
    /// The final entry per sequence is drawn but never applied.
    pub actions: Option<Vec<u8>>,
    /// `rewards[sequence * t + frame]` was received entering that frame;
    /// index 0 is always 0.
    pub rewards: Option<Vec<f32>>,
}

impl Dataset {
    pub fn objects(&self) -> usize {
        self.config.objects
    }

    /// Positions of one sequence as `[frame][object]`, for the evaluators.
    pub fn positions(&self, seq: usize) -> Vec<Vec<[f64; 2]>> {
        self.states[seq].iter().map(|s| s.positions.clone()).collect()
    }
}

struct SequenceData {
    states: Vec<SimState>,
    frames: Option<Vec<f32>>,
    actions: Option<Vec<u8>>,
    rewards: Option<Vec<f32>>,
}

fn generate_sequence(
    cfg: &EnvConfig,
    t: usize,
    seed: u64,
    index: usize,
    with_frames: bool,
) -> Result<SequenceData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    let controlled = cfg.kind == EnvKind::BilliardsControl;
    let colors = controlled.then(|| object_colors(cfg.objects));

    let mut states = Vec::with_capacity(t);
    let mut actions = controlled.then(|| Vec::with_capacity(t));
    let mut rewards = controlled.then(|| Vec::with_capacity(t));
    let mut state = sample_initial_state(cfg, &mut rng)?;
    if let Some(r) = rewards.as_mut() {
        r.push(0.0f32);
    }
    for frame in 0..t {
        states.push(state.clone());
        if frame + 1 == t {
            if let Some(a) = actions.as_mut() {
                a.push(rng.gen_range(0..control::ACTIONS) as u8);
            }
            break;
        }
        if controlled {
            let action = rng.gen_range(0..control::ACTIONS);
            let (next, reward) = control::step_controlled(&state, action, cfg)?;
            actions.as_mut().unwrap().push(action as u8);
            rewards.as_mut().unwrap().push(reward as f32);
            state = next;
        } else {
            state = step(&state, cfg, cfg.dt);
        }
    }

    let frames = with_frames.then(|| {
        let mut buf = Vec::new();
        for s in &states {
            let img = render_frame(s, cfg.resolution, colors.as_deref());
            buf.extend(img.data.iter().map(|&v| v as f32));
        }
        buf
    });
    Ok(SequenceData {
        states,
        frames,
        actions,
        rewards,
    })
}

/// Generates `n` sequences of `t` frames each. Sequences are independent
/// and the result is a pure function of (config, n, t, seed, with_frames).
pub fn generate_dataset(
    cfg: &EnvConfig,
    n: usize,
    t: usize,
    seed: u64,
    with_frames: bool,
) -> Result<Dataset> {
    cfg.validate()?;
    if n == 0 || t < 2 {
        return Err(Error::Config(format!(
            "dataset needs n >= 1 and t >= 2, got n = {n}, t = {t}"
        )));
    }
    let sequences: Vec<SequenceData> = (0..n)
        .into_par_iter()
        .map(|i| generate_sequence(cfg, t, seed, i, with_frames))
        .collect::<Result<_>>()?;

    let controlled = cfg.kind == EnvKind::BilliardsControl;
    let channels = if controlled { 3 } else { 1 };
    let frame_shape = if with_frames {
        (cfg.resolution, cfg.resolution, channels)
    } else {
        (0, 0, 0)
    };
    let mut out = Dataset {
        config: cfg.clone(),
        seed,
        n,
        t,
        states: Vec::with_capacity(n),
        frames: with_frames.then(Vec::new),
        frame_shape,
        actions: controlled.then(Vec::new),
        rewards: controlled.then(Vec::new),
    };
    for seq in sequences {
        out.states.push(seq.states);
        if let (Some(dst), Some(src)) = (out.frames.as_mut(), seq.frames) {
            dst.extend(src);
        }
        if let (Some(dst), Some(src)) = (out.actions.as_mut(), seq.actions) {
            dst.extend(src);
        }
        if let (Some(dst), Some(src)) = (out.rewards.as_mut(), seq.rewards) {
            dst.extend(src);
        }
    }
    Ok(out)
}

impl Dataset {
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        let header = serde_json::to_vec(&Header {
            config: self.config.clone(),
            seed: self.seed,
        })?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        let (h, wd, c) = self.frame_shape;
        for dim in [self.n, self.t, self.config.objects, h, wd, c] {
            w.write_all(&(dim as u64).to_le_bytes())?;
        }
        let flags = (self.frames.is_some() as u8)
            | ((self.actions.is_some() as u8) << 1)
            | ((self.rewards.is_some() as u8) << 2);
        w.write_all(&[flags])?;

        let mut put = |v: f32| w.write_all(&v.to_le_bytes());
        for seq in &self.states {
            for s in seq {
                for p in &s.positions {
                    put(p[0] as f32)?;
                    put(p[1] as f32)?;
                }
            }
        }
        for seq in &self.states {
            for s in seq {
                for v in &s.velocities {
                    put(v[0] as f32)?;
                    put(v[1] as f32)?;
                }
            }
        }
        for seq in &self.states {
            for &r in &seq[0].radii {
                put(r as f32)?;
            }
        }
        for seq in &self.states {
            for &m in &seq[0].masses {
                put(m as f32)?;
            }
        }
        if let Some(frames) = &self.frames {
            for &v in frames {
                put(v)?;
            }
        }
        if let Some(actions) = &self.actions {
            for &a in actions {
                put(a as f32)?;
            }
        }
        if let Some(rewards) = &self.rewards {
            for &r in rewards {
                put(r)?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format(format!(
                "bad dataset magic {magic:?}, expected {MAGIC:?}"
            )));
        }
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b2)?;
        let version = u16::from_le_bytes(b2);
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported dataset version {version}, expected {VERSION}"
            )));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let header_len = u32::from_le_bytes(b4) as usize;
        if header_len > 1 << 20 {
            return Err(Error::Format("implausible header length".into()));
        }
        let mut header = vec![0u8; header_len];
        r.read_exact(&mut header)?;
        let header: Header = serde_json::from_slice(&header)?;

        let mut dims = [0usize; 6];
        let mut b8 = [0u8; 8];
        for d in &mut dims {
            r.read_exact(&mut b8)?;
            *d = u64::from_le_bytes(b8) as usize;
        }
        let [n, t, o, h, wd, c] = dims;
        if o != header.config.objects {
            return Err(Error::Format(format!(
                "object count {o} does not match config ({})",
                header.config.objects
            )));
        }
        if n == 0 || t == 0 || n.saturating_mul(t) > 1 << 28 {
            return Err(Error::Format(format!("implausible dataset shape {n} x {t}")));
        }
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let flags = flag[0];

        let mut take = |count: usize| -> Result<Vec<f32>> {
            let mut out = Vec::with_capacity(count);
            let mut buf = [0u8; 4];
            for _ in 0..count {
                r.read_exact(&mut buf)?;
                out.push(f32::from_le_bytes(buf));
            }
            Ok(out)
        };
        let positions = take(n * t * o * 2)?;
        let velocities = take(n * t * o * 2)?;
        let radii = take(n * o)?;
        let masses = take(n * o)?;
        let frames = if flags & 1 != 0 {
            Some(take(n * t * h * wd * c)?)
        } else {
            None
        };
        let actions = if flags & 2 != 0 {
            Some(take(n * t)?.into_iter().map(|a| a as u8).collect())
        } else {
            None
        };
        let rewards = if flags & 4 != 0 { Some(take(n * t)?) } else { None };
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(Error::Format("trailing bytes after dataset payload".into()));
        }

        let mut states = Vec::with_capacity(n);
        for i in 0..n {
            let mut seq = Vec::with_capacity(t);
            for f in 0..t {
                let base = (i * t + f) * o * 2;
                let mut s = SimState {
                    positions: Vec::with_capacity(o),
                    velocities: Vec::with_capacity(o),
                    radii: radii[i * o..(i + 1) * o].iter().map(|&v| v as f64).collect(),
                    masses: masses[i * o..(i + 1) * o].iter().map(|&v| v as f64).collect(),
                };
                for k in 0..o {
                    s.positions.push([
                        positions[base + 2 * k] as f64,
                        positions[base + 2 * k + 1] as f64,
                    ]);
                    s.velocities.push([
                        velocities[base + 2 * k] as f64,
                        velocities[base + 2 * k + 1] as f64,
                    ]);
                }
                seq.push(s);
            }
            states.push(seq);
        }
        Ok(Dataset {
            config: header.config,
            seed: header.seed,
            n,
            t,
            states,
            frames,
            frame_shape: (h, wd, c),
            actions,
            rewards,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut r)
    }
}
