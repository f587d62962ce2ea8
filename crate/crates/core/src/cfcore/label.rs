use rustfft::num_complex::Complex64;

use super::fft::Fft2;
use crate::error::{Error, Result};

/// Desired correlation output: a Gaussian with its peak at the zero-shift bin
/// (0, 0), wrapped circularly.
#[derive(Clone, Debug)]
pub struct GaussianLabel {
    pub rows: usize,
    pub cols: usize,
    /// Standard deviation in cells.
    pub bandwidth: f64,
    pub values: Vec<f64>,
    /// Unnormalized DFT of `values`.
    pub spectrum: Vec<Complex64>,
}

/// Signed circular offset of bin `i` from bin 0 on an axis of length `n`.
pub fn wrapped_offset(i: usize, n: usize) -> isize {
    if 2 * i > n {
        i as isize - n as isize
    } else {
        i as isize
    }
}

/// Bandwidth is `sqrt(target_w * target_h / 16)`, in cells.
pub fn make_label(rows: usize, cols: usize, target_w: f64, target_h: f64) -> GaussianLabel {
    assert!(rows > 0 && cols > 0, "label grid must be non-empty");
    let bandwidth = (target_w * target_h).sqrt() / 4.0;
    let inv = -0.5 / (bandwidth * bandwidth);
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let dr = wrapped_offset(r, rows) as f64;
        for c in 0..cols {
            let dc = wrapped_offset(c, cols) as f64;
            values.push(((dr * dr + dc * dc) * inv).exp());
        }
    }
    let spectrum = Fft2::new(rows, cols).forward_plane(&values);
    GaussianLabel {
        rows,
        cols,
        bandwidth,
        values,
        spectrum,
    }
}

/// Selects the `filter_rows x filter_cols` block of a window, and the
/// adjoint: zero-pads such a block back into the window. The block is centred.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CropOperator {
    pub window_rows: usize,
    pub window_cols: usize,
    pub filter_rows: usize,
    pub filter_cols: usize,
    pub offset: (usize, usize),
}

impl CropOperator {
    pub fn centered(window_rows: usize, window_cols: usize, filter_rows: usize, filter_cols: usize) -> Result<Self> {
        if filter_rows == 0 || filter_cols == 0 || filter_rows > window_rows || filter_cols > window_cols {
            return Err(Error::Size(format!(
                "filter {filter_rows}x{filter_cols} does not fit window {window_rows}x{window_cols}"
            )));
        }
        Ok(Self {
            window_rows,
            window_cols,
            filter_rows,
            filter_cols,
            offset: ((window_rows - filter_rows) / 2, (window_cols - filter_cols) / 2),
        })
    }

    pub fn identity(rows: usize, cols: usize) -> Self {
        Self {
            window_rows: rows,
            window_cols: cols,
            filter_rows: rows,
            filter_cols: cols,
            offset: (0, 0),
        }
    }

    pub fn filter_len(&self) -> usize {
        self.filter_rows * self.filter_cols
    }

    pub fn window_len(&self) -> usize {
        self.window_rows * self.window_cols
    }

    pub fn crop(&self, window: &[f64]) -> Vec<f64> {
        let (r0, c0) = self.offset;
        let mut out = Vec::with_capacity(self.filter_len());
        for r in 0..self.filter_rows {
            let start = (r0 + r) * self.window_cols + c0;
            out.extend_from_slice(&window[start..start + self.filter_cols]);
        }
        out
    }

    pub fn pad(&self, block: &[f64]) -> Vec<f64> {
        let (r0, c0) = self.offset;
        let mut out = vec![0.0; self.window_len()];
        for r in 0..self.filter_rows {
            let start = (r0 + r) * self.window_cols + c0;
            out[start..start + self.filter_cols]
                .copy_from_slice(&block[r * self.filter_cols..(r + 1) * self.filter_cols]);
        }
        out
    }
}
