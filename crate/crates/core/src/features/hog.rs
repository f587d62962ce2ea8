//! 31-channel HOG in the Felzenszwalb layout:
//!
//! * channels 0..18: contrast-sensitive orientations (20 degree bins over 360)
//! * channels 18..27: contrast-insensitive orientations (bins folded mod 180)
//! * channels 27..31: gradient energy under each of the four block normalizations
//!
//! Gradients are central differences with replicated borders. Each pixel votes
//! its magnitude into the nearest orientation bin and bilinearly into the four
//! surrounding cells. Every cell is normalized by the four 2x2 blocks that
//! contain it and clipped at [`TRUNCATION`].

use std::f64::consts::PI;

use super::FeatureMap;
use crate::error::{Error, Result};

pub const HOG_CHANNELS: usize = 31;
pub const ORIENTATIONS: usize = 9;
pub const TRUNCATION: f64 = 0.2;
const EPS: f64 = 1e-4;
const TEXTURE_WEIGHT: f64 = 0.2357;

/// Block offsets, in the order of the four texture channels.
pub const BLOCKS: [(isize, isize); 4] = [(-1, -1), (0, -1), (-1, 0), (0, 0)];

pub fn extract_hog(plane: &[f64], width: usize, height: usize, cell_size: usize) -> Result<FeatureMap> {
    if plane.len() != width * height {
        return Err(Error::Size(format!(
            "plane of {} values for {width}x{height}",
            plane.len()
        )));
    }
    if cell_size == 0 || width < cell_size || height < cell_size {
        return Err(Error::Size(format!(
            "plane {width}x{height} is smaller than one {cell_size}px cell"
        )));
    }
    let cols = width / cell_size;
    let rows = height / cell_size;
    let hist = orientation_histograms(plane, width, height, cell_size, rows, cols);
    Ok(normalize(&hist, rows, cols))
}

fn orientation_histograms(
    plane: &[f64],
    width: usize,
    height: usize,
    cell_size: usize,
    rows: usize,
    cols: usize,
) -> Vec<[f64; 2 * ORIENTATIONS]> {
    let (uu, vv): (Vec<f64>, Vec<f64>) = (0..ORIENTATIONS)
        .map(|o| {
            let a = o as f64 * PI / ORIENTATIONS as f64;
            (a.cos(), a.sin())
        })
        .unzip();

    let mut hist = vec![[0.0; 2 * ORIENTATIONS]; rows * cols];
    let at = |x: usize, y: usize| plane[y * width + x];
    let s = cell_size as f64;

    for y in 0..rows * cell_size {
        let (yu, yd) = (y.saturating_sub(1), (y + 1).min(height - 1));
        let yp = (y as f64 + 0.5) / s - 0.5;
        let iyp = yp.floor();
        let vy0 = yp - iyp;
        let iyp = iyp as isize;
        for x in 0..cols * cell_size {
            let (xl, xr) = (x.saturating_sub(1), (x + 1).min(width - 1));
            let dx = at(xr, y) - at(xl, y);
            let dy = at(x, yd) - at(x, yu);
            let v = (dx * dx + dy * dy).sqrt();
            if v == 0.0 {
                continue;
            }

            let mut best = 0.0;
            let mut best_o = 0;
            for o in 0..ORIENTATIONS {
                let dot = uu[o] * dx + vv[o] * dy;
                if dot > best {
                    best = dot;
                    best_o = o;
                } else if -dot > best {
                    best = -dot;
                    best_o = o + ORIENTATIONS;
                }
            }

            let xp = (x as f64 + 0.5) / s - 0.5;
            let ixp = xp.floor();
            let vx0 = xp - ixp;
            let ixp = ixp as isize;
            for (cy, wy) in [(iyp, 1.0 - vy0), (iyp + 1, vy0)] {
                if cy < 0 || cy >= rows as isize {
                    continue;
                }
                for (cx, wx) in [(ixp, 1.0 - vx0), (ixp + 1, vx0)] {
                    if cx < 0 || cx >= cols as isize {
                        continue;
                    }
                    hist[cy as usize * cols + cx as usize][best_o] += wx * wy * v;
                }
            }
        }
    }
    hist
}

fn normalize(hist: &[[f64; 2 * ORIENTATIONS]], rows: usize, cols: usize) -> FeatureMap {
    let energy: Vec<f64> = hist
        .iter()
        .map(|h| {
            (0..ORIENTATIONS)
                .map(|o| {
                    let s = h[o] + h[o + ORIENTATIONS];
                    s * s
                })
                .sum()
        })
        .collect();
    let clamp_r = |r: isize| r.clamp(0, rows as isize - 1) as usize;
    let clamp_c = |c: isize| c.clamp(0, cols as isize - 1) as usize;

    let mut out = FeatureMap::zeros(rows, cols, HOG_CHANNELS);
    for r in 0..rows {
        for c in 0..cols {
            let mut norms = [0.0; 4];
            for (n, (bx, by)) in norms.iter_mut().zip(BLOCKS) {
                let r0 = r as isize + by;
                let c0 = c as isize + bx;
                let mut sum = 0.0;
                for dr in 0..2 {
                    for dc in 0..2 {
                        sum += energy[clamp_r(r0 + dr) * cols + clamp_c(c0 + dc)];
                    }
                }
                *n = 1.0 / (sum + EPS).sqrt();
            }

            let h = &hist[r * cols + c];
            let mut texture = [0.0; 4];
            for o in 0..2 * ORIENTATIONS {
                let mut acc = 0.0;
                for (t, n) in texture.iter_mut().zip(norms) {
                    let clipped = (h[o] * n).min(TRUNCATION);
                    acc += clipped;
                    *t += clipped;
                }
                out.set(r, c, o, 0.5 * acc);
            }
            for o in 0..ORIENTATIONS {
                let folded = h[o] + h[o + ORIENTATIONS];
                let acc: f64 = norms.iter().map(|n| (folded * n).min(TRUNCATION)).sum();
                out.set(r, c, 2 * ORIENTATIONS + o, 0.5 * acc);
            }
            for (i, t) in texture.iter().enumerate() {
                out.set(r, c, 3 * ORIENTATIONS + i, TEXTURE_WEIGHT * t);
            }
        }
    }
    out
}
