use std::path::Path;

use image::{ImageBuffer, Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

/// Decoded 8-bit RGB image, row-major, 3 samples per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Size(format!("frame dimensions {width}x{height}")));
        }
        let expected = width * height * 3;
        if pixels.len() != expected {
            return Err(Error::Size(format!(
                "pixel buffer holds {} bytes, expected {expected}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let pixels = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self::new(width, height, pixels)
    }

    /// Decodes any format the `image` crate reads. Grayscale sources are
    /// replicated across the three channels.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::NotFound(path.to_path_buf()));
        }
        let img = image::open(path)?.to_rgb8();
        let (w, h) = img.dimensions();
        Self::new(w as usize, h as usize, img.into_raw())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_image().save(path)?;
        Ok(())
    }

    pub fn to_image(&self) -> RgbImage {
        ImageBuffer::<Rgb<u8>, _>::from_raw(
            self.width as u32,
            self.height as u32,
            self.pixels.clone(),
        )
        .expect("buffer length checked at construction")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Resamples the region of size `src_w` x `src_h` centred on `(cx, cy)`
    /// into an `out_w` x `out_h` frame with bilinear interpolation. Samples
    /// outside the frame replicate the nearest edge pixel.
    pub fn sample_region(
        &self,
        cx: f64,
        cy: f64,
        src_w: f64,
        src_h: f64,
        out_w: usize,
        out_h: usize,
    ) -> Frame {
        let sx = src_w / out_w as f64;
        let sy = src_h / out_h as f64;
        let x0 = cx - src_w / 2.0;
        let y0 = cy - src_h / 2.0;
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;

        let xs: Vec<(usize, usize, f64)> = (0..out_w)
            .map(|u| {
                let x = (x0 + (u as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
                let xi = x.floor();
                let x1 = (xi as usize + 1).min(self.width - 1);
                (xi as usize, x1, x - xi)
            })
            .collect();

        let mut pixels = Vec::with_capacity(out_w * out_h * 3);
        for v in 0..out_h {
            let y = (y0 + (v as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
            let yi = y.floor();
            let fy = y - yi;
            let r0 = yi as usize;
            let r1 = (r0 + 1).min(self.height - 1);
            for &(c0, c1, fx) in &xs {
                for ch in 0..3 {
                    let p = |r: usize, c: usize| self.pixels[(r * self.width + c) * 3 + ch] as f64;
                    let top = p(r0, c0) * (1.0 - fx) + p(r0, c1) * fx;
                    let bottom = p(r1, c0) * (1.0 - fx) + p(r1, c1) * fx;
                    let value = top * (1.0 - fy) + bottom * fy;
                    pixels.push(value.round().clamp(0.0, 255.0) as u8);
                }
            }
        }
        Frame {
            width: out_w,
            height: out_h,
            pixels,
        }
    }

    /// Draws a one-pixel rectangle outline, clipped to the frame.
    pub fn draw_box(&mut self, b: &BoundingBox, rgb: [u8; 3]) {
        let x0 = b.x.round() as i64;
        let y0 = b.y.round() as i64;
        let x1 = (b.x + b.w).round() as i64 - 1;
        let y1 = (b.y + b.h).round() as i64 - 1;
        let (w, h) = (self.width as i64, self.height as i64);
        let mut put = |x: i64, y: i64| {
            if x >= 0 && y >= 0 && x < w && y < h {
                self.set_pixel(x as usize, y as usize, rgb);
            }
        };
        for x in x0..=x1 {
            put(x, y0);
            put(x, y1);
        }
        for y in y0..=y1 {
            put(x0, y);
            put(x1, y);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_buffer_length() {
        assert!(Frame::new(2, 2, vec![0; 12]).is_ok());
        assert!(matches!(Frame::new(2, 2, vec![0; 11]), Err(Error::Size(_))));
        assert!(matches!(Frame::new(0, 2, vec![]), Err(Error::Size(_))));
    }

    #[test]
    fn identity_resample_is_exact() {
        let pixels: Vec<u8> = (0..4 * 3 * 3).map(|i| (i * 7 % 256) as u8).collect();
        let f = Frame::new(4, 3, pixels).unwrap();
        let g = f.sample_region(2.0, 1.5, 4.0, 3.0, 4, 3);
        assert_eq!(f, g);
    }

    #[test]
    fn out_of_bounds_replicates_edges() {
        let mut f = Frame::filled(4, 4, [10, 20, 30]).unwrap();
        f.set_pixel(0, 0, [200, 200, 200]);
        let g = f.sample_region(-10.0, -10.0, 4.0, 4.0, 2, 2);
        assert!(g.pixels().chunks(3).all(|p| p == [200, 200, 200]));
    }
}
