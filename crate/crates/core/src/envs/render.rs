//! Anti-aliased disc rasterization.
//!
//! World coordinates [0, 1] map to pixel coordinates [0, resolution]; pixel
//! (row, col) covers the unit square with center (col + 0.5, row + 0.5), so
//! the image row index follows world y directly. Discs are composited
//! additively per channel and the result saturates at 1.

use super::SimState;

/// Row-major image, layout (y, x, channel), values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Image {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }
}

/// Evenly spaced fully saturated hues, one per object; three objects get
/// pure red, green, blue. These double as the appearance codes the
/// action-conditioned dynamics model sees.
pub fn object_colors(n: usize) -> Vec<[f64; 3]> {
    (0..n)
        .map(|i| {
            let h = i as f64 / n as f64 * 6.0;
            let x = 1.0 - (h % 2.0 - 1.0f64).abs();
            match h as usize {
                0 => [1.0, x, 0.0],
                1 => [x, 1.0, 0.0],
                2 => [0.0, 1.0, x],
                3 => [0.0, x, 1.0],
                4 => [x, 0.0, 1.0],
                _ => [1.0, 0.0, x],
            }
        })
        .collect()
}

/// Renders the state at `resolution` x `resolution`. With `colors` the image
/// has three channels and disc i uses colors[i]; otherwise one grayscale
/// channel with unit intensity per disc.
pub fn render_frame(state: &SimState, resolution: usize, colors: Option<&[[f64; 3]]>) -> Image {
    let channels = if colors.is_some() { 3 } else { 1 };
    let mut img = Image::zeros(resolution, resolution, channels);
    let res = resolution as f64;

    for (o, p) in state.positions.iter().enumerate() {
        let cx = p[0] * res;
        let cy = p[1] * res;
        let r = state.radii[o] * res;
        let color: &[f64] = match colors {
            Some(cs) => &cs[o],
            None => &[1.0],
        };

        // Only pixels whose centers lie within half a diagonal of the rim
        // can be partially covered.
        let y_lo = ((cy - r - 1.0).floor().max(0.0)) as usize;
        let y_hi = ((cy + r + 1.0).ceil().min(res)) as usize;
        let x_lo = ((cx - r - 1.0).floor().max(0.0)) as usize;
        let x_hi = ((cx + r + 1.0).ceil().min(res)) as usize;
        for y in y_lo..y_hi {
            for x in x_lo..x_hi {
                let dx = x as f64 + 0.5 - cx;
                let dy = y as f64 + 0.5 - cy;
                let d = (dx * dx + dy * dy).sqrt();
                let cov = coverage(d, r, x as f64, y as f64, cx, cy);
                if cov > 0.0 {
                    for (c, &col) in color.iter().enumerate() {
                        let v = &mut img.data[(y * resolution + x) * channels + c];
                        *v = (*v + cov * col).min(1.0);
                    }
                }
            }
        }
    }
    img
}

/// Fraction of the unit pixel at (px, py) covered by the disc. Pixels
/// clearly inside or outside short-circuit; rim pixels are supersampled on a
/// 16x16 grid.
fn coverage(center_dist: f64, radius: f64, px: f64, py: f64, cx: f64, cy: f64) -> f64 {
    const HALF_DIAG: f64 = std::f64::consts::SQRT_2 / 2.0;
    if center_dist <= radius - HALF_DIAG {
        return 1.0;
    }
    if center_dist >= radius + HALF_DIAG {
        return 0.0;
    }
    const N: usize = 16;
    let mut inside = 0u32;
    let r2 = radius * radius;
    for sy in 0..N {
        let y = py + (sy as f64 + 0.5) / N as f64;
        let dy = y - cy;
        for sx in 0..N {
            let x = px + (sx as f64 + 0.5) / N as f64;
            let dx = x - cx;
            inside += (dx * dx + dy * dy <= r2) as u32;
        }
    }
    inside as f64 / (N * N) as f64
}
