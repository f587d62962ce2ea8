//! Reliable response map.
//!
//! The raw correlation response is quantized to 8-bit gray, a threshold is
//! searched so that the fraction of cells above it is close to a target
//! proposal ratio, the above-threshold cells are split into 8-connected
//! components and components smaller than a fraction of the target area are
//! discarded. Multiplying the surviving binary mask with the response removes
//! steep, isolated distractor peaks before the argmax.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ResponseMap {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl ResponseMap {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::Size(format!(
                "{} values for a {rows}x{cols} response",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// First maximum in row-major order (smallest row, then smallest column).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        (best / self.cols, best % self.cols)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedResponse {
    pub rows: usize,
    pub cols: usize,
    pub gray: Vec<u8>,
}

/// Affine map of `[min, max]` onto `[0, 255]`, rounding half up. A constant
/// map quantizes to all zeros.
pub fn quantize(response: &ResponseMap) -> QuantizedResponse {
    let (lo, hi) = (response.min(), response.max());
    let range = hi - lo;
    let gray = if range > 0.0 {
        response
            .values
            .iter()
            .map(|v| ((v - lo) / range * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8)
            .collect()
    } else {
        vec![0; response.values.len()]
    };
    QuantizedResponse {
        rows: response.rows,
        cols: response.cols,
        gray,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdSearchState {
    pub threshold: u8,
    /// Cells with gray value strictly above `threshold`.
    pub above: usize,
    pub below: usize,
    pub ratio: f64,
    /// False when no threshold met the tolerance and the closest one was taken.
    pub within_tolerance: bool,
}

impl ThresholdSearchState {
    fn at(histogram: &[usize; 256], total: usize, threshold: u8) -> Self {
        let above: usize = histogram[threshold as usize + 1..].iter().sum();
        let below = total - above;
        Self {
            threshold,
            above,
            below,
            ratio: above as f64 / (above + below) as f64,
            within_tolerance: false,
        }
    }
}

fn histogram(q: &QuantizedResponse) -> [usize; 256] {
    let mut h = [0usize; 256];
    for &g in &q.gray {
        h[g as usize] += 1;
    }
    h
}

/// Scans thresholds 0..=255 upward and returns the first whose above-threshold
/// fraction is within `tolerance` of `proposal_ratio`. If none is, returns the
/// closest one (lowest threshold on ties) with `within_tolerance == false`.
pub fn threshold_search(q: &QuantizedResponse, proposal_ratio: f64, tolerance: f64) -> ThresholdSearchState {
    let hist = histogram(q);
    let total = q.gray.len();
    let mut best: Option<ThresholdSearchState> = None;
    for th in 0..=255u8 {
        let mut s = ThresholdSearchState::at(&hist, total, th);
        let dev = (s.ratio - proposal_ratio).abs();
        if dev < tolerance {
            s.within_tolerance = true;
            return s;
        }
        match best {
            Some(b) if (b.ratio - proposal_ratio).abs() <= dev => {}
            _ => best = Some(s),
        }
    }
    best.expect("256 thresholds scanned")
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReliableMask {
    pub rows: usize,
    pub cols: usize,
    /// 1 where the response is kept.
    pub binary: Vec<u8>,
    pub threshold_used: u8,
    pub proposal_ratio_achieved: f64,
    pub min_component_area: f64,
    pub components_kept: usize,
    pub components_removed: usize,
}

impl ReliableMask {
    pub fn all_ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            binary: vec![1; rows * cols],
            threshold_used: 0,
            proposal_ratio_achieved: 1.0,
            min_component_area: 0.0,
            components_kept: 1,
            components_removed: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.binary.iter().all(|&b| b == 0)
    }
}

/// 8-connected components of the non-zero cells, as lists of flat indices.
pub fn connected_components(binary: &[u8], rows: usize, cols: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; binary.len()];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..binary.len() {
        if binary[start] == 0 || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(i) = queue.pop_front() {
            comp.push(i);
            let (r, c) = ((i / cols) as isize, (i % cols) as isize);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                        continue;
                    }
                    let j = nr as usize * cols + nc as usize;
                    if binary[j] != 0 && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        components.push(comp);
    }
    components
}

/// Binarizes at `state.threshold` and drops components whose area (in cells)
/// is below `area_threshold * target_area`.
pub fn build_mask(
    q: &QuantizedResponse,
    state: &ThresholdSearchState,
    area_threshold: f64,
    target_area: f64,
) -> ReliableMask {
    let mut binary: Vec<u8> = q.gray.iter().map(|&g| u8::from(g > state.threshold)).collect();
    let min_area = area_threshold * target_area;
    let (mut kept, mut removed) = (0, 0);
    for comp in connected_components(&binary, q.rows, q.cols) {
        if (comp.len() as f64) < min_area {
            removed += 1;
            for i in comp {
                binary[i] = 0;
            }
        } else {
            kept += 1;
        }
    }
    ReliableMask {
        rows: q.rows,
        cols: q.cols,
        binary,
        threshold_used: state.threshold,
        proposal_ratio_achieved: state.ratio,
        min_component_area: min_area,
        components_kept: kept,
        components_removed: removed,
    }
}

pub fn reliable_response(response: &ResponseMap, mask: &ReliableMask) -> Result<ResponseMap> {
    if (response.rows, response.cols) != (mask.rows, mask.cols) {
        return Err(Error::Size(format!(
            "response {}x{} vs mask {}x{}",
            response.rows, response.cols, mask.rows, mask.cols
        )));
    }
    let values = response
        .values
        .iter()
        .zip(&mask.binary)
        .map(|(&v, &m)| if m != 0 { v } else { 0.0 })
        .collect();
    ResponseMap::new(response.rows, response.cols, values)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub row: usize,
    pub col: usize,
    pub value: f64,
    /// Set when the map is identically zero (nothing survived the mask).
    pub uncertain: bool,
}

pub fn locate_peak(reliable: &ResponseMap) -> Peak {
    let (row, col) = reliable.argmax();
    Peak {
        row,
        col,
        value: reliable.get(row, col),
        uncertain: reliable.values.iter().all(|&v| v == 0.0),
    }
}

/// Parameters of the masking step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskParams {
    pub proposal_ratio: f64,
    pub ratio_tolerance: f64,
    pub area_threshold: f64,
    /// Target area in response cells.
    pub target_area: f64,
}

#[derive(Clone, Debug)]
pub struct Detection {
    pub peak: Peak,
    pub quantized: QuantizedResponse,
    pub search: ThresholdSearchState,
    pub mask: ReliableMask,
    pub reliable: ResponseMap,
    /// True when the mask removed everything and the raw argmax was used.
    pub fallback: bool,
}

/// Full masking pipeline on one response map. The peak is taken over cells
/// the mask keeps; if it keeps none, the unmasked argmax is returned with
/// `fallback` set.
pub fn detect(response: &ResponseMap, params: &MaskParams) -> Detection {
    let quantized = quantize(response);
    let search = threshold_search(&quantized, params.proposal_ratio, params.ratio_tolerance);
    let mask = build_mask(&quantized, &search, params.area_threshold, params.target_area);
    let reliable = reliable_response(response, &mask).expect("mask built from this response");

    let mut best: Option<usize> = None;
    for (i, (&v, &m)) in response.values.iter().zip(&mask.binary).enumerate() {
        if m != 0 && best.is_none_or(|b| v > response.values[b]) {
            best = Some(i);
        }
    }
    let (peak, fallback) = match best {
        Some(i) => (
            Peak {
                row: i / response.cols,
                col: i % response.cols,
                value: response.values[i],
                uncertain: false,
            },
            false,
        ),
        None => {
            let (row, col) = response.argmax();
            (
                Peak {
                    row,
                    col,
                    value: response.get(row, col),
                    uncertain: true,
                },
                true,
            )
        }
    };
    Detection {
        peak,
        quantized,
        search,
        mask,
        reliable,
        fallback,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(rows: usize, cols: usize, gray: Vec<u8>) -> QuantizedResponse {
        QuantizedResponse { rows, cols, gray }
    }

    fn map(rows: usize, cols: usize, values: Vec<f64>) -> ResponseMap {
        ResponseMap::new(rows, cols, values).unwrap()
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(&map(1, 3, vec![0.0, 0.5, 1.0])).gray, vec![0, 128, 255]);
        assert_eq!(quantize(&map(1, 3, vec![-1.0, 0.0, 1.0])).gray, vec![0, 128, 255]);
        assert_eq!(quantize(&map(2, 2, vec![3.5; 4])).gray, vec![0; 4]);
    }

    #[test]
    fn threshold_two_level_grid() {
        let mut gray = vec![10u8; 100];
        gray[..25].fill(200);
        let s = threshold_search(&q(10, 10, gray), 0.25, 0.05);
        assert_eq!(s.threshold, 10);
        assert_eq!((s.above, s.below), (25, 75));
        assert_eq!(s.ratio, 0.25);
        assert!(s.within_tolerance);
    }

    #[test]
    fn threshold_fallback_on_flat_map() {
        let s = threshold_search(&q(4, 4, vec![0; 16]), 0.2, 0.05);
        assert!(!s.within_tolerance);
        assert_eq!(s.ratio, 0.0);
        assert_eq!(s.threshold, 0);
    }

    fn blob_map(blobs: &[(usize, usize, usize, usize)]) -> QuantizedResponse {
        let (rows, cols) = (20, 20);
        let mut gray = vec![0u8; rows * cols];
        for &(r0, c0, h, w) in blobs {
            for r in r0..r0 + h {
                for c in c0..c0 + w {
                    gray[r * cols + c] = 255;
                }
            }
        }
        q(rows, cols, gray)
    }

    fn state_at(th: u8, qr: &QuantizedResponse) -> ThresholdSearchState {
        ThresholdSearchState::at(&histogram(qr), qr.gray.len(), th)
    }

    #[test]
    fn area_pruning_examples() {
        let single = blob_map(&[(2, 2, 5, 6)]);
        let m = build_mask(&single, &state_at(0, &single), 0.20, 100.0);
        assert_eq!(m.binary.iter().filter(|&&b| b == 1).count(), 30);

        let small = blob_map(&[(2, 2, 2, 5)]);
        let m = build_mask(&small, &state_at(0, &small), 0.20, 100.0);
        assert!(m.is_empty());
        assert_eq!(m.components_removed, 1);

        let two = blob_map(&[(2, 2, 5, 6), (12, 12, 1, 5)]);
        let m = build_mask(&two, &state_at(0, &two), 0.20, 100.0);
        assert_eq!(m.binary.iter().filter(|&&b| b == 1).count(), 30);
        assert_eq!(m.binary[12 * 20 + 12], 0);
        assert_eq!((m.components_kept, m.components_removed), (1, 1));
    }

    #[test]
    fn diagonal_cells_are_connected() {
        let mut gray = vec![0u8; 9];
        gray[0] = 255;
        gray[4] = 255;
        gray[8] = 255;
        assert_eq!(connected_components(&gray, 3, 3).len(), 1);
    }

    #[test]
    fn reliable_response_identity_and_annihilation() {
        let r = map(2, 2, vec![1.0, -2.0, 3.0, 4.0]);
        assert_eq!(reliable_response(&r, &ReliableMask::all_ones(2, 2)).unwrap(), r);
        let mut zeros = ReliableMask::all_ones(2, 2);
        zeros.binary.fill(0);
        assert!(reliable_response(&r, &zeros).unwrap().values.iter().all(|&v| v == 0.0));
        assert!(reliable_response(&r, &ReliableMask::all_ones(3, 2)).is_err());
    }

    #[test]
    fn peak_tie_break_and_fallback() {
        let mut v = vec![0.0; 36];
        v[3 * 6 + 5] = 2.0;
        assert_eq!(locate_peak(&map(6, 6, v.clone())).row, 3);
        v[3 * 6 + 5] = 0.0;
        v[2 * 6 + 2] = 1.0;
        v[4 * 6 + 4] = 1.0;
        let p = locate_peak(&map(6, 6, v));
        assert_eq!((p.row, p.col, p.uncertain), (2, 2, false));
        assert!(locate_peak(&map(6, 6, vec![0.0; 36])).uncertain);
    }

    /// Broad Gaussian bump plus a taller single-cell spike: the spike wins the
    /// raw argmax but is removed by the area test.
    #[test]
    fn steep_distractor_is_masked_out() {
        let (rows, cols) = (30, 30);
        let mut v = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                let d2 = ((r as f64 - 10.0).powi(2) + (c as f64 - 12.0).powi(2)) / (2.0 * 3.0f64.powi(2));
                v[r * cols + c] = (-d2).exp();
            }
        }
        v[22 * cols + 22] = 1.6;
        v[22 * cols + 23] = 1.1;
        let r = map(rows, cols, v);
        assert_eq!(r.argmax(), (22, 22));
        let params = MaskParams {
            proposal_ratio: 0.05,
            ratio_tolerance: 0.10,
            area_threshold: 0.20,
            target_area: 64.0,
        };
        let d = detect(&r, &params);
        assert!(!d.fallback);
        assert_eq!((d.peak.row, d.peak.col), (10, 12));
        assert_eq!(locate_peak(&d.reliable).row, 10);
    }

    proptest! {
        #[test]
        fn counting_is_exact_and_monotone(gray in proptest::collection::vec(any::<u8>(), 1..200)) {
            let n = gray.len();
            let qr = q(1, n, gray.clone());
            let hist = histogram(&qr);
            let mut prev = usize::MAX;
            for th in 0..=255u8 {
                let s = ThresholdSearchState::at(&hist, n, th);
                prop_assert_eq!(s.above + s.below, n);
                prop_assert_eq!(s.above, gray.iter().filter(|&&g| g > th).count());
                prop_assert_eq!(s.ratio, s.above as f64 / n as f64);
                prop_assert!(s.above <= prev);
                prev = s.above;
            }
        }

        #[test]
        fn masked_map_bounded_by_response(values in proptest::collection::vec(0.0f64..10.0, 64)) {
            let r = map(8, 8, values);
            let params = MaskParams { proposal_ratio: 0.1, ratio_tolerance: 0.05, area_threshold: 0.2, target_area: 10.0 };
            let d = detect(&r, &params);
            for i in 0..64 {
                prop_assert!(d.reliable.values[i] <= r.values[i]);
                if d.mask.binary[i] == 1 {
                    prop_assert_eq!(d.reliable.values[i], r.values[i]);
                }
            }
            if !d.fallback {
                prop_assert_eq!(d.mask.binary[d.peak.row * 8 + d.peak.col], 1);
            }
        }
    }
}
