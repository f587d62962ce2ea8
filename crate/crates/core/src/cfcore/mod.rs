//! Background-aware correlation filter.
//!
//! The filter `w` has a small spatial support (the target) inside a larger
//! training window, so every circular shift of the window is a real
//! background sample. Learning minimizes
//!
//! ```text
//! E(w) = sum_j (y_j - sum_k <w_k, crop(shift_j(x_k))>)^2 + lambda * sum_k |w_k|^2
//! ```
//!
//! by ADMM on the split `g = pad(w)`: the `g` step is a rank-one solve per
//! frequency bin, the `w` step a ridge shrinkage of the cropped inverse
//! transform, followed by dual ascent and a geometric penalty increase.
//!
//! DFT convention: unnormalized forward, `1/T` inverse. Detection computes
//! `R = idft2(sum_k conj(g_k) * z_k)`, so bin `(i, j)` scores the window
//! content circularly shifted by `(i, j)`.

mod fft;
mod label;

pub use fft::{dft2, idft2, Fft2, SpectralGrid};
pub use label::{make_label, wrapped_offset, CropOperator, GaussianLabel};

use log::warn;
use rustfft::num_complex::Complex64;

use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::response::ResponseMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LearnStatus {
    Converged,
    /// Training features carried no energy; the filter is zero.
    ZeroEnergy,
}

#[derive(Clone, Debug)]
pub struct FilterModel {
    /// Full-window filter spectrum used for detection.
    pub g_hat: SpectralGrid,
    /// Running spectral template of the training features.
    pub model_xf: SpectralGrid,
    /// Cropped spatial filter, `filter_rows x filter_cols x K`.
    pub filter: FeatureMap,
    pub crop: CropOperator,
    pub status: LearnStatus,
}

impl FilterModel {
    pub fn filter_rows(&self) -> usize {
        self.crop.filter_rows
    }

    pub fn filter_cols(&self) -> usize {
        self.crop.filter_cols
    }

    pub fn window_rows(&self) -> usize {
        self.crop.window_rows
    }

    pub fn window_cols(&self) -> usize {
        self.crop.window_cols
    }
}

/// ADMM settings pulled from the tracker configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmmSettings {
    pub lambda: f64,
    pub iterations: usize,
    pub penalty_init: f64,
    pub penalty_scale: f64,
    pub penalty_max: f64,
}

impl From<&TrackerConfig> for AdmmSettings {
    fn from(cfg: &TrackerConfig) -> Self {
        Self {
            lambda: cfg.lambda,
            iterations: cfg.admm_iterations,
            penalty_init: cfg.admm_penalty_init,
            penalty_scale: cfg.admm_penalty_scale,
            penalty_max: cfg.admm_penalty_max,
        }
    }
}

fn check_inputs(xf: &SpectralGrid, label: &GaussianLabel, crop: &CropOperator) -> Result<()> {
    if (xf.rows, xf.cols) != (label.rows, label.cols)
        || (xf.rows, xf.cols) != (crop.window_rows, crop.window_cols)
    {
        return Err(Error::Size(format!(
            "features {}x{}, label {}x{}, crop window {}x{}",
            xf.rows, xf.cols, label.rows, label.cols, crop.window_rows, crop.window_cols
        )));
    }
    if !xf.is_finite() {
        return Err(Error::Numeric("non-finite training features".into()));
    }
    Ok(())
}

pub fn learn_filter(
    xf: &SpectralGrid,
    label: &GaussianLabel,
    crop: &CropOperator,
    cfg: &TrackerConfig,
) -> Result<FilterModel> {
    let fft = Fft2::new(xf.rows, xf.cols);
    learn_filter_traced(&fft, xf, label, crop, AdmmSettings::from(cfg), |_, _| {})
}

/// ADMM solve, calling `observe(iteration, w)` with the cropped spatial filter
/// after every outer iteration.
pub fn learn_filter_traced(
    fft: &Fft2,
    xf: &SpectralGrid,
    label: &GaussianLabel,
    crop: &CropOperator,
    settings: AdmmSettings,
    mut observe: impl FnMut(usize, &FeatureMap),
) -> Result<FilterModel> {
    check_inputs(xf, label, crop)?;
    let (rows, cols, channels) = (xf.rows, xf.cols, xf.channels);
    let bins = xf.bins();

    let energy: Vec<f64> = (0..bins)
        .map(|b| (0..channels).map(|k| xf.data[k * bins + b].norm_sqr()).sum())
        .collect();
    if energy.iter().all(|&e| e == 0.0) {
        warn!("training features have zero energy; returning a zero filter");
        return Ok(FilterModel {
            g_hat: SpectralGrid::zeros(rows, cols, channels),
            model_xf: xf.clone(),
            filter: FeatureMap::zeros(crop.filter_rows, crop.filter_cols, channels),
            crop: *crop,
            status: LearnStatus::ZeroEnergy,
        });
    }

    let y_conj: Vec<Complex64> = label.spectrum.iter().map(|c| c.conj()).collect();
    let mut g = SpectralGrid::zeros(rows, cols, channels);
    let mut h = SpectralGrid::zeros(rows, cols, channels);
    let mut dual = SpectralGrid::zeros(rows, cols, channels);
    let mut w = FeatureMap::zeros(crop.filter_rows, crop.filter_cols, channels);
    let mut mu = settings.penalty_init;
    let mut scratch = vec![Complex64::new(0.0, 0.0); bins];

    for iter in 0..settings.iterations {
        // g step: per bin, minimize |conj(y) - x^H g|^2 + mu |g - v|^2 with
        // v = h - dual. Sherman-Morrison gives g = v + x (conj(y) - x^H v) / (mu + x^H x).
        for b in 0..bins {
            let mut xhv = Complex64::new(0.0, 0.0);
            for k in 0..channels {
                let i = k * bins + b;
                xhv += xf.data[i].conj() * (h.data[i] - dual.data[i]);
            }
            let coef = (y_conj[b] - xhv) / (mu + energy[b]);
            for k in 0..channels {
                let i = k * bins + b;
                g.data[i] = h.data[i] - dual.data[i] + xf.data[i] * coef;
            }
        }

        // w step: ridge shrinkage of the cropped spatial solution.
        let shrink = mu / (settings.lambda + mu);
        let mut wdata = Vec::with_capacity(crop.filter_len() * channels);
        for k in 0..channels {
            for (s, (a, b)) in scratch.iter_mut().zip(g.channel(k).iter().zip(dual.channel(k))) {
                *s = a + b;
            }
            fft.inverse_in_place(&mut scratch);
            let real: Vec<f64> = scratch.iter().map(|c| c.re).collect();
            wdata.extend(crop.crop(&real).into_iter().map(|v| v * shrink));
        }
        w = FeatureMap::from_planes(crop.filter_rows, crop.filter_cols, channels, wdata)?;

        // h = DFT(pad(w)); dual ascent on g - h.
        for k in 0..channels {
            let padded = crop.pad(w.channel(k));
            let spec = fft.forward_plane(&padded);
            h.channel_mut(k).copy_from_slice(&spec);
        }
        for ((d, a), b) in dual.data.iter_mut().zip(&g.data).zip(&h.data) {
            *d += a - b;
        }
        mu = (settings.penalty_scale * mu).min(settings.penalty_max);
        observe(iter, &w);
    }

    if !g.is_finite() {
        return Err(Error::Numeric("filter solve diverged".into()));
    }
    Ok(FilterModel {
        g_hat: g,
        model_xf: xf.clone(),
        filter: w,
        crop: *crop,
        status: LearnStatus::Converged,
    })
}

/// Correlation spectrum `sum_k conj(g_k) z_k`.
pub fn response_spectrum(g_hat: &SpectralGrid, zf: &SpectralGrid) -> Result<Vec<Complex64>> {
    if !g_hat.same_shape(zf) {
        return Err(Error::Size(format!(
            "filter {}x{}x{} vs features {}x{}x{}",
            g_hat.rows, g_hat.cols, g_hat.channels, zf.rows, zf.cols, zf.channels
        )));
    }
    let bins = g_hat.bins();
    let mut acc = vec![Complex64::new(0.0, 0.0); bins];
    for k in 0..g_hat.channels {
        for ((a, g), z) in acc.iter_mut().zip(g_hat.channel(k)).zip(zf.channel(k)) {
            *a += g.conj() * z;
        }
    }
    Ok(acc)
}

pub fn compute_response_with(fft: &Fft2, model: &FilterModel, zf: &SpectralGrid) -> Result<ResponseMap> {
    let mut spec = response_spectrum(&model.g_hat, zf)?;
    fft.inverse_in_place(&mut spec);
    ResponseMap::new(zf.rows, zf.cols, spec.iter().map(|c| c.re).collect())
}

pub fn compute_response(model: &FilterModel, zf: &SpectralGrid) -> Result<ResponseMap> {
    compute_response_with(&Fft2::new(zf.rows, zf.cols), model, zf)
}

/// Direct evaluation of the training objective over every circular shift of
/// the window. `O(T * D * K)`; used only to check the solver.
pub fn eval_objective(
    w: &FeatureMap,
    features: &FeatureMap,
    label: &[f64],
    crop: &CropOperator,
    lambda: f64,
) -> f64 {
    let (rows, cols) = (features.rows, features.cols);
    let (r0, c0) = crop.offset;
    let mut data_term = 0.0;
    for sr in 0..rows {
        for sc in 0..cols {
            let mut pred = 0.0;
            for k in 0..features.channels {
                for fr in 0..w.rows {
                    let r = (r0 + fr + sr) % rows;
                    for fc in 0..w.cols {
                        let c = (c0 + fc + sc) % cols;
                        pred += w.get(fr, fc, k) * features.get(r, c, k);
                    }
                }
            }
            let e = label[sr * cols + sc] - pred;
            data_term += e * e;
        }
    }
    let reg: f64 = w.data().iter().map(|v| v * v).sum();
    data_term + lambda * reg
}
