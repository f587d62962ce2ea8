use std::f64::consts::PI;

/// Separable Hann taper over a cell grid. Edge weights are 0; a 1x1 grid has
/// the single weight 1.
#[derive(Clone, Debug, PartialEq)]
pub struct CosineWindow {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
}

fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
        .collect()
}

impl CosineWindow {
    pub fn hann(rows: usize, cols: usize) -> Self {
        let wr = hann(rows);
        let wc = hann(cols);
        let weights = wr
            .iter()
            .flat_map(|r| wc.iter().map(move |c| r * c))
            .collect();
        Self {
            rows,
            cols,
            weights,
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![1.0; rows * cols],
        }
    }
}
