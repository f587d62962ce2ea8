use crate::frame::Frame;

/// Three real-valued planes: hue in degrees `[0, 360)`, saturation and value
/// in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HsvImage {
    pub width: usize,
    pub height: usize,
    pub h: Vec<f64>,
    pub s: Vec<f64>,
    pub v: Vec<f64>,
}

/// Hexcone conversion of a single pixel. Hue is 0 for achromatic pixels.
pub fn rgb_to_hsv_pixel(rgb: [u8; 3]) -> (f64, f64, f64) {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let h = h.rem_euclid(360.0);
    // rem_euclid can round a tiny negative up to exactly 360.
    let h = if h >= 360.0 { 0.0 } else { h };
    (h, s, max)
}

pub fn rgb_to_hsv(frame: &Frame) -> HsvImage {
    let n = frame.width() * frame.height();
    let mut out = HsvImage {
        width: frame.width(),
        height: frame.height(),
        h: Vec::with_capacity(n),
        s: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
    };
    for px in frame.pixels().chunks_exact(3) {
        let (h, s, v) = rgb_to_hsv_pixel([px[0], px[1], px[2]]);
        out.h.push(h);
        out.s.push(s);
        out.v.push(v);
    }
    out
}
