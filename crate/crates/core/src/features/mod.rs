//! Fused colour/gradient features: the frame is converted to HSV, a 31-channel
//! HOG is extracted from each of the H, S and V planes, and the three blocks
//! are stacked into one 93-channel map.

mod hog;
mod hsv;
mod window;

pub use hog::{extract_hog, HOG_CHANNELS, TRUNCATION};
pub use hsv::{rgb_to_hsv, rgb_to_hsv_pixel, HsvImage};
pub use window::CosineWindow;

use crate::error::{Error, Result};
use crate::frame::Frame;

pub const FUSED_CHANNELS: usize = 3 * HOG_CHANNELS;

/// Grid of `channels`-dimensional cell descriptors. Stored channel-planar so
/// each channel can be handed to the FFT as one contiguous row-major plane.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(rows: usize, cols: usize, channels: usize) -> Self {
        Self {
            rows,
            cols,
            channels,
            data: vec![0.0; rows * cols * channels],
        }
    }

    /// Builds from channel-planar data (`channel`, then `row`, then `col`).
    pub fn from_planes(rows: usize, cols: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols * channels {
            return Err(Error::Size(format!(
                "{} values for a {rows}x{cols}x{channels} feature map",
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            channels,
            data,
        })
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(channel * self.rows + row) * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, channel: usize, value: f64) {
        self.data[(channel * self.rows + row) * self.cols + col] = value;
    }

    /// The K-vector of one cell.
    pub fn cell(&self, row: usize, col: usize) -> Vec<f64> {
        (0..self.channels).map(|k| self.get(row, col, k)).collect()
    }

    pub fn channel(&self, channel: usize) -> &[f64] {
        let n = self.rows * self.cols;
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// Stacks maps of equal grid size along the channel axis.
    pub fn concat(maps: &[FeatureMap]) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| Error::Size("nothing to concatenate".into()))?;
        if maps.iter().any(|m| m.rows != first.rows || m.cols != first.cols) {
            return Err(Error::Size("feature grids differ in size".into()));
        }
        let channels = maps.iter().map(|m| m.channels).sum();
        let data = maps.iter().flat_map(|m| m.data.iter().copied()).collect();
        Ok(Self {
            rows: first.rows,
            cols: first.cols,
            channels,
            data,
        })
    }
}

/// HSV conversion, HOG on each plane, concatenation in H, S, V order. Hue is
/// rescaled to `[0, 1]` so all planes share a dynamic range.
pub fn fuse(frame: &Frame, cell_size: usize) -> Result<FeatureMap> {
    let hsv = rgb_to_hsv(frame);
    let (w, h) = (hsv.width, hsv.height);
    let hue: Vec<f64> = hsv.h.iter().map(|v| v / 360.0).collect();
    let blocks = [
        extract_hog(&hue, w, h, cell_size)?,
        extract_hog(&hsv.s, w, h, cell_size)?,
        extract_hog(&hsv.v, w, h, cell_size)?,
    ];
    FeatureMap::concat(&blocks)
}

pub fn apply_window(features: &FeatureMap, window: &CosineWindow) -> Result<FeatureMap> {
    if window.rows != features.rows || window.cols != features.cols {
        return Err(Error::Size(format!(
            "window {}x{} does not match feature grid {}x{}",
            window.rows, window.cols, features.rows, features.cols
        )));
    }
    let n = features.rows * features.cols;
    let data = features
        .data
        .iter()
        .enumerate()
        .map(|(i, v)| v * window.weights[i % n])
        .collect();
    Ok(FeatureMap {
        data,
        ..features.clone()
    })
}
