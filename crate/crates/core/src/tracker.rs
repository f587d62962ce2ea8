//! Per-frame tracking loop: scale pyramid search, masked detection, and the
//! moving-average model update.

use log::{debug, warn};

use crate::cfcore::{
    compute_response_with, learn_filter_traced, make_label, wrapped_offset, AdmmSettings, CropOperator, Fft2,
    FilterModel, GaussianLabel, SpectralGrid,
};
use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::features::{apply_window, fuse, CosineWindow, FeatureMap};
use crate::frame::Frame;
use crate::geometry::BoundingBox;
use crate::response::{detect, Detection, MaskParams, ResponseMap};

/// Windows larger than this many pixels per side (geometric mean) are
/// downsampled to it before feature extraction. Smaller windows are never
/// upsampled, so one cell always covers at least `cell_size` frame pixels.
pub const MAX_WINDOW_SIDE: f64 = 200.0;

const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;

/// Fixed sampling geometry derived from the first frame.
#[derive(Clone, Debug)]
struct Geometry {
    frame_size: (usize, usize),
    grid_rows: usize,
    grid_cols: usize,
    cell_size: usize,
    /// Padded window at unit scale, pixels `(w, h)`.
    base_window: (f64, f64),
    target_area_cells: f64,
    label: GaussianLabel,
    crop: CropOperator,
    cosine: CosineWindow,
    fft: Fft2,
}

impl Geometry {
    fn canvas(&self) -> (usize, usize) {
        (self.grid_cols * self.cell_size, self.grid_rows * self.cell_size)
    }
}

#[derive(Clone, Debug)]
pub struct TrackerState {
    pub model: FilterModel,
    /// Target centre `(x, y)` in pixels.
    pub position: (f64, f64),
    pub target_size: (f64, f64),
    pub base_target_size: (f64, f64),
    pub current_scale: f64,
    pub window_size: (f64, f64),
    pub config: TrackerConfig,
    geometry: Geometry,
}

#[derive(Clone, Debug)]
pub struct ScaleSample {
    pub scale_factor: f64,
    pub response: ResponseMap,
    pub peak_value: f64,
    pub peak_location: (usize, usize),
    /// Masking diagnostics; `None` when the mask is disabled.
    pub detection: Option<Detection>,
}

impl ScaleSample {
    pub fn uncertain(&self) -> bool {
        self.detection.as_ref().is_some_and(|d| d.fallback)
    }
}

/// Everything computed for one tracked frame.
#[derive(Clone, Debug)]
pub struct FrameResult {
    pub bbox: BoundingBox,
    pub samples: Vec<ScaleSample>,
    /// Index into `samples` of the chosen scale.
    pub best: usize,
    /// The chosen sample's mask was empty and the raw peak was used.
    pub uncertain: bool,
}

/// Scale factors `step^i` for `i` in `-(S-1)/2 ..= (S-1)/2`.
pub fn scale_factors(num_scales: usize, step: f64) -> Vec<f64> {
    let half = (num_scales / 2) as i32;
    (-half..=half).map(|i| step.powi(i)).collect()
}

/// Linear blend `a + rate * (b - a)` of two same-shape feature maps.
fn blend_maps(a: &FeatureMap, b: &FeatureMap, rate: f64) -> Result<FeatureMap> {
    if (a.rows, a.cols, a.channels) != (b.rows, b.cols, b.channels) {
        return Err(Error::Size(format!(
            "cannot blend {}x{}x{} with {}x{}x{}",
            a.rows, a.cols, a.channels, b.rows, b.cols, b.channels
        )));
    }
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            if rate == 0.0 {
                x
            } else if rate == 1.0 {
                y
            } else {
                x + (y - x) * rate
            }
        })
        .collect();
    FeatureMap::from_planes(a.rows, a.cols, a.channels, data)
}

impl TrackerState {
    pub fn init(frame: &Frame, initial_box: BoundingBox, cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        let (fw, fh) = (frame.width() as f64, frame.height() as f64);
        let (cx, cy) = initial_box.center();
        let position = (cx.clamp(0.0, fw - 1.0), cy.clamp(0.0, fh - 1.0));
        let target = (initial_box.w, initial_box.h);
        let pad = (1.0 + cfg.search_padding).sqrt();
        let base_window = (target.0 * pad, target.1 * pad);

        let side = (base_window.0 * base_window.1).sqrt();
        let shrink = if side > MAX_WINDOW_SIDE { MAX_WINDOW_SIDE / side } else { 1.0 };
        let cell = cfg.cell_size as f64;
        let grid_cols = (base_window.0 * shrink / cell).round() as usize;
        let grid_rows = (base_window.1 * shrink / cell).round() as usize;
        let target_cells = (target.0 * shrink / cell, target.1 * shrink / cell);
        let filter_cols = target_cells.0.floor() as usize;
        let filter_rows = target_cells.1.floor() as usize;
        if filter_rows == 0 || filter_cols == 0 {
            return Err(Error::Init(format!(
                "target {}x{} px covers less than one {}px cell",
                target.0, target.1, cfg.cell_size
            )));
        }
        if filter_rows >= grid_rows || filter_cols >= grid_cols {
            return Err(Error::Init(format!(
                "filter {filter_rows}x{filter_cols} cells does not fit the {grid_rows}x{grid_cols} search grid"
            )));
        }
        let crop = CropOperator::centered(grid_rows, grid_cols, filter_rows, filter_cols)
            .map_err(|e| Error::Init(e.to_string()))?;

        let geometry = Geometry {
            frame_size: (frame.width(), frame.height()),
            grid_rows,
            grid_cols,
            cell_size: cfg.cell_size,
            base_window,
            target_area_cells: target_cells.0 * target_cells.1,
            label: make_label(grid_rows, grid_cols, target_cells.0, target_cells.1),
            crop,
            cosine: CosineWindow::hann(grid_rows, grid_cols),
            fft: Fft2::new(grid_rows, grid_cols),
        };
        debug!(
            "init at ({:.1}, {:.1}): window {:.1}x{:.1} px, grid {}x{} cells, filter {}x{}",
            position.0, position.1, base_window.0, base_window.1, grid_rows, grid_cols, filter_rows, filter_cols
        );

        let xf = extract(&geometry, frame, position, base_window)?;
        let model = learn(&geometry, &xf, &cfg)?;
        Ok(Self {
            model,
            position,
            target_size: target,
            base_target_size: target,
            current_scale: 1.0,
            window_size: base_window,
            config: cfg,
            geometry,
        })
    }

    /// Search grid size in cells, `(rows, cols)`.
    pub fn grid_size(&self) -> (usize, usize) {
        (self.geometry.grid_rows, self.geometry.grid_cols)
    }

    /// Frame pixels per response cell along `(x, y)` at the current scale.
    pub fn cell_extent(&self) -> (f64, f64) {
        let (cw, ch) = self.geometry.canvas();
        let c = self.geometry.cell_size as f64;
        (self.window_size.0 / cw as f64 * c, self.window_size.1 / ch as f64 * c)
    }

    pub fn bbox(&self) -> BoundingBox {
        BoundingBox::from_center(self.position.0, self.position.1, self.target_size.0, self.target_size.1)
    }

    fn mask_params(&self) -> MaskParams {
        MaskParams {
            proposal_ratio: self.config.proposal_ratio,
            ratio_tolerance: self.config.ratio_tolerance,
            area_threshold: self.config.area_threshold,
            target_area: self.geometry.target_area_cells,
        }
    }

    fn check_frame(&self, frame: &Frame) -> Result<()> {
        let expected = self.geometry.frame_size;
        if (frame.width(), frame.height()) != expected {
            return Err(Error::Size(format!(
                "frame is {}x{}, sequence frames are {}x{}",
                frame.width(),
                frame.height(),
                expected.0,
                expected.1
            )));
        }
        Ok(())
    }

    /// Windowed fused features of the search window at the current position
    /// and scale.
    pub fn features(&self, frame: &Frame) -> Result<FeatureMap> {
        self.check_frame(frame)?;
        window_features(&self.geometry, frame, self.position, self.window_size)
    }

    /// Scores the window around the current position at every pyramid scale.
    /// Samples are ordered by scale index.
    pub fn scale_pyramid(&self, frame: &Frame) -> Result<Vec<ScaleSample>> {
        self.check_frame(frame)?;
        let params = self.mask_params();
        scale_factors(self.config.num_scales, self.config.scale_step)
            .into_iter()
            .map(|factor| {
                let size = (self.window_size.0 * factor, self.window_size.1 * factor);
                let zf = extract(&self.geometry, frame, self.position, size)?;
                let response = compute_response_with(&self.geometry.fft, &self.model, &zf)?;
                let (detection, peak_location, peak_value) = if self.config.reliable_mask {
                    let d = detect(&response, &params);
                    let p = (d.peak.row, d.peak.col);
                    let v = d.peak.value;
                    (Some(d), p, v)
                } else {
                    let p = response.argmax();
                    let v = response.get(p.0, p.1);
                    (None, p, v)
                };
                Ok(ScaleSample {
                    scale_factor: factor,
                    response,
                    peak_value,
                    peak_location,
                    detection,
                })
            })
            .collect()
    }

    pub fn track_frame(&mut self, frame: &Frame) -> Result<BoundingBox> {
        Ok(self.track_frame_detailed(frame)?.bbox)
    }

    pub fn track_frame_detailed(&mut self, frame: &Frame) -> Result<FrameResult> {
        let samples = self.scale_pyramid(frame)?;
        let mut best = 0;
        for (i, s) in samples.iter().enumerate() {
            if s.peak_value > samples[best].peak_value {
                best = i;
            }
        }
        let chosen = &samples[best];
        let uncertain = chosen.uncertain();
        if uncertain {
            warn!("reliable mask empty; using the unmasked peak");
        }

        let (rows, cols) = self.grid_size();
        let dr = wrapped_offset(chosen.peak_location.0, rows) as f64;
        let dc = wrapped_offset(chosen.peak_location.1, cols) as f64;
        let (ex, ey) = self.cell_extent();
        let f = chosen.scale_factor;
        let (fw, fh) = self.geometry.frame_size;
        self.position = (
            (self.position.0 + dc * ex * f).clamp(0.0, fw as f64 - 1.0),
            (self.position.1 + dr * ey * f).clamp(0.0, fh as f64 - 1.0),
        );
        self.set_scale(self.current_scale * f);

        let fresh_xf = extract(&self.geometry, frame, self.position, self.window_size)?;
        let template = self.model.model_xf.blend(&fresh_xf, self.config.eta)?;
        let fresh = learn(&self.geometry, &template, &self.config)?;
        self.update_model(&fresh_xf, &fresh)?;

        let bbox = self.bbox();
        debug!(
            "peak ({dr}, {dc}) cells at scale {:.4}, value {:.4}; box {bbox}",
            f, chosen.peak_value
        );
        Ok(FrameResult {
            bbox,
            samples,
            best,
            uncertain,
        })
    }

    fn set_scale(&mut self, scale: f64) {
        let s = scale.clamp(MIN_SCALE, MAX_SCALE);
        self.current_scale = s;
        self.target_size = (self.base_target_size.0 * s, self.base_target_size.1 * s);
        self.window_size = (self.geometry.base_window.0 * s, self.geometry.base_window.1 * s);
    }

    /// Moving average of the spectral template, the detection filter and the
    /// spatial filter towards freshly computed ones, at rate `eta`.
    pub fn update_model(&mut self, new_xf: &SpectralGrid, new_filter: &FilterModel) -> Result<()> {
        let eta = self.config.eta;
        let model_xf = self.model.model_xf.blend(new_xf, eta)?;
        let g_hat = self.model.g_hat.blend(&new_filter.g_hat, eta)?;
        let filter = blend_maps(&self.model.filter, &new_filter.filter, eta)?;
        self.model.model_xf = model_xf;
        self.model.g_hat = g_hat;
        self.model.filter = filter;
        self.model.status = new_filter.status;
        Ok(())
    }
}

fn window_features(geometry: &Geometry, frame: &Frame, center: (f64, f64), size: (f64, f64)) -> Result<FeatureMap> {
    let (cw, ch) = geometry.canvas();
    let patch = frame.sample_region(center.0, center.1, size.0, size.1, cw, ch);
    apply_window(&fuse(&patch, geometry.cell_size)?, &geometry.cosine)
}

fn extract(geometry: &Geometry, frame: &Frame, center: (f64, f64), size: (f64, f64)) -> Result<SpectralGrid> {
    Ok(geometry.fft.dft2(&window_features(geometry, frame, center, size)?))
}

fn learn(geometry: &Geometry, xf: &SpectralGrid, cfg: &TrackerConfig) -> Result<FilterModel> {
    learn_filter_traced(
        &geometry.fft,
        xf,
        &geometry.label,
        &geometry.crop,
        AdmmSettings::from(cfg),
        |_, _| {},
    )
}

/// Initializes on the first frame with `initial_box` and tracks the rest.
/// The returned trajectory starts with `initial_box`.
pub fn track_sequence<I>(frames: I, initial_box: BoundingBox, cfg: &TrackerConfig) -> Result<Vec<BoundingBox>>
where
    I: IntoIterator<Item = Result<Frame>>,
{
    let mut frames = frames.into_iter();
    let first = frames.next().ok_or_else(|| Error::Init("sequence has no frames".into()))??;
    let mut state = TrackerState::init(&first, initial_box, cfg.clone())?;
    let mut boxes = vec![initial_box];
    for frame in frames {
        boxes.push(state.track_frame(&frame?)?);
    }
    Ok(boxes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn textured_frame(width: usize, height: usize, seed: u64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coarse: Vec<[u8; 3]> = (0..(width / 8 + 2) * (height / 8 + 2))
            .map(|_| [rng.gen(), rng.gen(), rng.gen()])
            .collect();
        let mut f = Frame::filled(width, height, [0, 0, 0]).unwrap();
        for y in 0..height {
            for x in 0..width {
                f.set_pixel(x, y, coarse[(y / 8) * (width / 8 + 2) + x / 8]);
            }
        }
        f
    }

    #[test]
    fn pyramid_factors() {
        let f = scale_factors(5, 1.01);
        let expected = [1.01f64.powi(-2), 1.01f64.powi(-1), 1.0, 1.01, 1.01f64.powi(2)];
        assert_eq!(f, expected);
        assert_eq!(scale_factors(1, 1.01), vec![1.0]);
    }

    #[test]
    fn self_detection_peaks_at_origin() {
        let frame = textured_frame(160, 120, 3);
        let b = BoundingBox::new(64.0, 44.0, 32.0, 32.0).unwrap();
        let mut state = TrackerState::init(&frame, b, default_config()).unwrap();
        let samples = state.scale_pyramid(&frame).unwrap();
        let unit = &samples[samples.len() / 2];
        assert_eq!(unit.scale_factor, 1.0);
        assert_eq!(unit.peak_location, (0, 0));
        let out = state.track_frame(&frame).unwrap();
        let (ex, _) = state.cell_extent();
        assert!((out.center().0 - b.center().0).abs() < ex);
        assert!((out.center().1 - b.center().1).abs() < ex);
    }

    #[test]
    fn tiny_box_is_rejected() {
        let frame = textured_frame(64, 64, 1);
        let b = BoundingBox::new(10.0, 10.0, 3.0, 3.0).unwrap();
        assert!(matches!(
            TrackerState::init(&frame, b, default_config()),
            Err(Error::Init(_))
        ));
    }

    #[test]
    fn box_partly_outside_frame() {
        let frame = textured_frame(96, 96, 2);
        let b = BoundingBox::new(-10.0, 80.0, 24.0, 24.0).unwrap();
        let state = TrackerState::init(&frame, b, default_config()).unwrap();
        assert_eq!(state.position, (2.0, 92.0));
    }

    #[test]
    fn frame_size_mismatch() {
        let frame = textured_frame(96, 96, 2);
        let b = BoundingBox::new(30.0, 30.0, 24.0, 24.0).unwrap();
        let mut state = TrackerState::init(&frame, b, default_config()).unwrap();
        let other = textured_frame(100, 96, 2);
        assert!(matches!(state.track_frame(&other), Err(Error::Size(_))));
    }

    #[test]
    fn update_model_limits() {
        let frame = textured_frame(96, 96, 4);
        let b = BoundingBox::new(30.0, 30.0, 24.0, 24.0).unwrap();
        let base = TrackerState::init(&frame, b, default_config()).unwrap();
        let other = TrackerState::init(&textured_frame(96, 96, 5), b, default_config()).unwrap();

        let mut s = base.clone();
        s.config.eta = 0.0;
        s.update_model(&other.model.model_xf, &other.model).unwrap();
        assert_eq!(s.model.g_hat, base.model.g_hat);
        assert_eq!(s.model.model_xf, base.model.model_xf);
        assert_eq!(s.model.filter, base.model.filter);

        s.config.eta = 1.0;
        s.update_model(&other.model.model_xf, &other.model).unwrap();
        assert_eq!(s.model.g_hat, other.model.g_hat);
        assert_eq!(s.model.model_xf, other.model.model_xf);
        assert_eq!(s.model.filter, other.model.filter);

        let mut s = base.clone();
        let same = base.model.clone();
        s.update_model(&same.model_xf, &same).unwrap();
        assert_eq!(s.model.g_hat, base.model.g_hat);
        assert_eq!(s.model.filter, base.model.filter);
    }

    #[test]
    fn static_scene_does_not_drift() {
        let frame = textured_frame(160, 120, 9);
        let b = BoundingBox::new(60.0, 40.0, 32.0, 28.0).unwrap();
        let frames = (0..10).map(|_| Ok(frame.clone()));
        let boxes = track_sequence(frames, b, &default_config()).unwrap();
        for out in &boxes {
            let (x, y) = out.center();
            assert!((x - 76.0).abs() < 4.0 && (y - 54.0).abs() < 4.0, "{out}");
        }
    }
}
