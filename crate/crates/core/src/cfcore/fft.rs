use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::features::FeatureMap;

/// Multi-channel grid of complex values, channel-planar like [`FeatureMap`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralGrid {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub data: Vec<Complex64>,
}

impl SpectralGrid {
    pub fn zeros(rows: usize, cols: usize, channels: usize) -> Self {
        Self {
            rows,
            cols,
            channels,
            data: vec![Complex64::new(0.0, 0.0); rows * cols * channels],
        }
    }

    pub fn bins(&self) -> usize {
        self.rows * self.cols
    }

    pub fn channel(&self, k: usize) -> &[Complex64] {
        let n = self.bins();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn channel_mut(&mut self, k: usize) -> &mut [Complex64] {
        let n = self.bins();
        &mut self.data[k * n..(k + 1) * n]
    }

    pub fn same_shape(&self, other: &SpectralGrid) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.channels == other.channels
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `(1 - rate) * self + rate * fresh`, elementwise, evaluated as
    /// `self + rate * (fresh - self)` so blending a grid with itself is exact.
    /// Rates 0 and 1 return the endpoints bit for bit.
    pub fn blend(&self, fresh: &SpectralGrid, rate: f64) -> Result<SpectralGrid> {
        if !self.same_shape(fresh) {
            return Err(Error::Size(format!(
                "cannot blend {}x{}x{} with {}x{}x{}",
                self.rows, self.cols, self.channels, fresh.rows, fresh.cols, fresh.channels
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&fresh.data)
            .map(|(&a, &b)| {
                if rate == 0.0 {
                    a
                } else if rate == 1.0 {
                    b
                } else {
                    a + (b - a) * rate
                }
            })
            .collect();
        Ok(SpectralGrid { data, ..*self })
    }
}

/// Unnormalized forward / `1/T`-normalized inverse 2-D DFT for one grid size.
#[derive(Clone)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({}x{})", self.rows, self.cols)
    }
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty grid");
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn transform(&self, plane: &mut [Complex64], inverse: bool) {
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        row.process(plane);
        let mut t = transpose(plane, self.rows, self.cols);
        col.process(&mut t);
        let back = transpose(&t, self.cols, self.rows);
        plane.copy_from_slice(&back);
        if inverse {
            let scale = 1.0 / (self.rows * self.cols) as f64;
            plane.iter_mut().for_each(|v| *v *= scale);
        }
    }

    pub fn forward_plane(&self, plane: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = plane.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        buf
    }

    pub fn forward_in_place(&self, plane: &mut [Complex64]) {
        self.transform(plane, false);
    }

    pub fn inverse_in_place(&self, plane: &mut [Complex64]) {
        self.transform(plane, true);
    }

    pub fn dft2(&self, grid: &FeatureMap) -> SpectralGrid {
        assert_eq!((grid.rows, grid.cols), (self.rows, self.cols), "grid size");
        let mut out = SpectralGrid::zeros(self.rows, self.cols, grid.channels);
        for k in 0..grid.channels {
            let spec = self.forward_plane(grid.channel(k));
            out.channel_mut(k).copy_from_slice(&spec);
        }
        out
    }

    /// Inverse transform of every channel, complex result.
    pub fn idft2_complex(&self, grid: &SpectralGrid) -> SpectralGrid {
        assert_eq!((grid.rows, grid.cols), (self.rows, self.cols), "grid size");
        let mut out = grid.clone();
        for k in 0..grid.channels {
            self.inverse_in_place(out.channel_mut(k));
        }
        out
    }

    /// Inverse transform keeping real parts.
    pub fn idft2(&self, grid: &SpectralGrid) -> FeatureMap {
        let spatial = self.idft2_complex(grid);
        FeatureMap::from_planes(
            grid.rows,
            grid.cols,
            grid.channels,
            spatial.data.iter().map(|c| c.re).collect(),
        )
        .expect("shape preserved")
    }
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = src[r * cols + c];
        }
    }
    out
}

pub fn dft2(grid: &FeatureMap) -> SpectralGrid {
    Fft2::new(grid.rows, grid.cols).dft2(grid)
}

pub fn idft2(grid: &SpectralGrid) -> FeatureMap {
    Fft2::new(grid.rows, grid.cols).idft2(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(rows: usize, cols: usize, k: usize, seed: u64) -> FeatureMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureMap::from_planes(rows, cols, k, (0..rows * cols * k).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap()
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut g = FeatureMap::zeros(6, 5, 1);
        g.set(0, 0, 0, 2.0);
        let s = dft2(&g);
        assert!(s.data.iter().all(|c| (c.re - 2.0).abs() < 1e-14 && c.im.abs() < 1e-14));
    }

    #[test]
    fn round_trip() {
        for (r, c) in [(8, 8), (7, 12), (1, 5)] {
            let g = random_grid(r, c, 2, 3);
            let back = idft2(&dft2(&g));
            let err = g.data().iter().zip(back.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{r}x{c}: {err}");
        }
    }

    #[test]
    fn hermitian_symmetry() {
        let (rows, cols) = (6, 7);
        let s = dft2(&random_grid(rows, cols, 1, 4));
        for r in 0..rows {
            for c in 0..cols {
                let a = s.data[r * cols + c];
                let b = s.data[((rows - r) % rows) * cols + (cols - c) % cols];
                assert!((a - b.conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_direct_dft() {
        let (rows, cols) = (4, 6);
        let g = random_grid(rows, cols, 1, 8);
        let s = dft2(&g);
        for u in 0..rows {
            for v in 0..cols {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..rows {
                    for c in 0..cols {
                        let ph = -2.0 * std::f64::consts::PI
                            * (u as f64 * r as f64 / rows as f64 + v as f64 * c as f64 / cols as f64);
                        acc += Complex64::from_polar(g.get(r, c, 0), ph);
                    }
                }
                assert!((acc - s.data[u * cols + v]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn blend_limits() {
        let a = dft2(&random_grid(4, 4, 2, 1));
        let b = dft2(&random_grid(4, 4, 2, 2));
        assert_eq!(a.blend(&b, 0.0).unwrap(), a);
        assert_eq!(a.blend(&b, 1.0).unwrap(), b);
        assert!(a.blend(&dft2(&random_grid(4, 4, 1, 2)), 0.5).is_err());
    }
}
