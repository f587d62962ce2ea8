//! Grayscale PNG dumps of response maps, masks and feature channels.

use std::path::Path;

use image::GrayImage;

use crate::error::{Error, Result};
use crate::response::{QuantizedResponse, ReliableMask, ResponseMap};

/// Each grid cell becomes a `zoom x zoom` block of pixels.
fn save_bytes(path: &Path, rows: usize, cols: usize, bytes: &[u8], zoom: usize) -> Result<()> {
    if bytes.len() != rows * cols || zoom == 0 {
        return Err(Error::Size(format!("{} values for a {rows}x{cols} grid", bytes.len())));
    }
    let img = GrayImage::from_fn((cols * zoom) as u32, (rows * zoom) as u32, |x, y| {
        image::Luma([bytes[(y as usize / zoom) * cols + x as usize / zoom]])
    });
    img.save(path)?;
    Ok(())
}

/// Min-max normalizes `values` to 0..=255.
pub fn save_gray(path: &Path, rows: usize, cols: usize, values: &[f64], zoom: usize) -> Result<()> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let bytes: Vec<u8> = values
        .iter()
        .map(|v| if range > 0.0 { ((v - lo) / range * 255.0).round() as u8 } else { 0 })
        .collect();
    save_bytes(path, rows, cols, &bytes, zoom)
}

/// Response maps are stored with the zero shift at the corner; this rolls it
/// to the centre so the image reads like the search window.
pub fn centered(response: &ResponseMap) -> Vec<f64> {
    let (rows, cols) = (response.rows, response.cols);
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let rr = (r + rows / 2) % rows;
            let cc = (c + cols / 2) % cols;
            out[rr * cols + cc] = response.get(r, c);
        }
    }
    out
}

pub fn save_response(path: &Path, response: &ResponseMap, zoom: usize) -> Result<()> {
    save_gray(path, response.rows, response.cols, &centered(response), zoom)
}

pub fn save_quantized(path: &Path, q: &QuantizedResponse, zoom: usize) -> Result<()> {
    let map = ResponseMap::new(q.rows, q.cols, q.gray.iter().map(|&g| g as f64).collect())?;
    let bytes: Vec<u8> = centered(&map).iter().map(|&v| v as u8).collect();
    save_bytes(path, q.rows, q.cols, &bytes, zoom)
}

pub fn save_mask(path: &Path, mask: &ReliableMask, zoom: usize) -> Result<()> {
    let map = ResponseMap::new(mask.rows, mask.cols, mask.binary.iter().map(|&b| b as f64).collect())?;
    let bytes: Vec<u8> = centered(&map).iter().map(|&v| if v > 0.0 { 255 } else { 0 }).collect();
    save_bytes(path, mask.rows, mask.cols, &bytes, zoom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_roll_moves_origin_to_middle() {
        let mut values = vec![0.0; 16];
        values[0] = 1.0;
        let r = ResponseMap::new(4, 4, values).unwrap();
        let c = centered(&r);
        assert_eq!(c[2 * 4 + 2], 1.0);
    }

    #[test]
    fn writes_scaled_png() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.png");
        save_gray(&path, 2, 3, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], 4).unwrap();
        let img = image::open(&path).unwrap().to_luma8();
        assert_eq!(img.dimensions(), (12, 8));
        assert_eq!(img.get_pixel(0, 0).0[0], 0);
        assert_eq!(img.get_pixel(11, 7).0[0], 255);
        assert!(save_gray(&path, 2, 2, &[0.0; 3], 1).is_err());
    }
}
