//! Synthetic sequences with exact ground truth.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::geometry::BoundingBox;
use crate::ingest::{FrameSource, Sequence};

pub const PRESETS: [&str; 5] = ["static", "translate", "zoom", "occlude", "distractor"];

/// Smallest rendered box side, in pixels (one cell at the default cell size).
pub const MIN_BOX_SIDE: f64 = 4.0;

const CANVAS: (usize, usize) = (320, 240);

/// Value noise: a lattice of random colours with period `period` pixels,
/// smoothly interpolated.
#[derive(Clone, Debug, PartialEq)]
pub struct Texture {
    pub seed: u64,
    pub period: f64,
    /// Colours are drawn in `[lo, hi]` per channel.
    pub lo: u8,
    pub hi: u8,
    lattice: Vec<[f64; 3]>,
}

const LATTICE: usize = 64;

impl Texture {
    pub fn new(seed: u64, period: f64, lo: u8, hi: u8) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lattice = (0..LATTICE * LATTICE)
            .map(|_| {
                let mut c = [0.0; 3];
                for v in &mut c {
                    *v = rng.gen_range(lo as f64..=hi as f64);
                }
                c
            })
            .collect();
        Self {
            seed,
            period,
            lo,
            hi,
            lattice,
        }
    }

    /// Colour at texture coordinates `(u, v)` in pixels.
    pub fn sample(&self, u: f64, v: f64) -> [f64; 3] {
        let (gu, gv) = (u / self.period, v / self.period);
        let (iu, iv) = (gu.floor(), gv.floor());
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let (tu, tv) = (smooth(gu - iu), smooth(gv - iv));
        let wrap = |i: f64| i.rem_euclid(LATTICE as f64) as usize;
        let (u0, v0) = (wrap(iu), wrap(iv));
        let (u1, v1) = ((u0 + 1) % LATTICE, (v0 + 1) % LATTICE);
        let at = |r: usize, c: usize| self.lattice[r * LATTICE + c];
        let mut out = [0.0; 3];
        for (ch, o) in out.iter_mut().enumerate() {
            let top = at(v0, u0)[ch] * (1.0 - tu) + at(v0, u1)[ch] * tu;
            let bottom = at(v1, u0)[ch] * (1.0 - tu) + at(v1, u1)[ch] * tu;
            *o = top * (1.0 - tv) + bottom * tv;
        }
        out
    }
}

/// Centre `(x, y)` in pixels and a size multiplier, one per frame.
pub type Trajectory = Vec<(f64, f64, f64)>;

/// A textured rectangle moving over the background.
#[derive(Clone, Debug, PartialEq)]
pub struct Sprite {
    pub texture: Texture,
    /// Size `(w, h)` at multiplier 1.
    pub size: (f64, f64),
    /// Texture coordinates of the top-left corner.
    pub texture_origin: (f64, f64),
    pub trajectory: Trajectory,
}

impl Sprite {
    pub fn bbox(&self, frame: usize) -> BoundingBox {
        let (x, y, s) = self.trajectory[frame];
        BoundingBox::from_center(x, y, self.size.0 * s, self.size.1 * s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Distractor {
    pub sprite: Sprite,
    /// Drawn over the target instead of beneath it.
    pub in_front: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Occluder {
    pub rect: BoundingBox,
    pub frames: Range<usize>,
    pub texture: Texture,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub name: String,
    pub canvas_size: (usize, usize),
    pub background: Texture,
    pub target: Sprite,
    pub distractors: Vec<Distractor>,
    pub occluders: Vec<Occluder>,
    pub seed: u64,
}

impl SceneSpec {
    pub fn frame_count(&self) -> usize {
        self.target.trajectory.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.frame_count();
        if n == 0 {
            return Err(Error::Scene("empty trajectory".into()));
        }
        let (cw, ch) = (self.canvas_size.0 as f64, self.canvas_size.1 as f64);
        for (label, sprite) in std::iter::once(("target", &self.target))
            .chain(self.distractors.iter().map(|d| ("distractor", &d.sprite)))
        {
            if sprite.trajectory.len() != n {
                return Err(Error::Scene(format!(
                    "{label} trajectory has {} frames, expected {n}",
                    sprite.trajectory.len()
                )));
            }
            for f in 0..n {
                let b = sprite.bbox(f);
                if b.w < MIN_BOX_SIDE || b.h < MIN_BOX_SIDE {
                    return Err(Error::Scene(format!("{label} box {b} at frame {f} is too small")));
                }
                if b.x < 0.0 || b.y < 0.0 || b.x + b.w > cw || b.y + b.h > ch {
                    return Err(Error::Scene(format!("{label} box {b} at frame {f} leaves the canvas")));
                }
            }
        }
        Ok(())
    }
}

/// Coverage of pixel `[p, p+1)` by the interval `[lo, hi)`.
fn coverage(p: usize, lo: f64, hi: f64) -> f64 {
    let p = p as f64;
    (hi.min(p + 1.0) - lo.max(p)).clamp(0.0, 1.0)
}

fn composite(canvas: &mut [[f64; 3]], width: usize, b: &BoundingBox, scale: f64, texture: &Texture, origin: (f64, f64)) {
    let height = canvas.len() / width;
    let x0 = b.x.floor().max(0.0) as usize;
    let y0 = b.y.floor().max(0.0) as usize;
    let x1 = ((b.x + b.w).ceil() as usize).min(width);
    let y1 = ((b.y + b.h).ceil() as usize).min(height);
    for y in y0..y1 {
        let cy = coverage(y, b.y, b.y + b.h);
        for x in x0..x1 {
            let alpha = cy * coverage(x, b.x, b.x + b.w);
            if alpha <= 0.0 {
                continue;
            }
            let u = origin.0 + (x as f64 + 0.5 - b.x) / scale;
            let v = origin.1 + (y as f64 + 0.5 - b.y) / scale;
            let c = texture.sample(u, v);
            let px = &mut canvas[y * width + x];
            for ch in 0..3 {
                px[ch] = px[ch] * (1.0 - alpha) + c[ch] * alpha;
            }
        }
    }
}

pub fn render_frame(spec: &SceneSpec, index: usize) -> Result<Frame> {
    let (w, h) = spec.canvas_size;
    let mut canvas: Vec<[f64; 3]> = (0..w * h)
        .map(|i| spec.background.sample((i % w) as f64 + 0.5, (i / w) as f64 + 0.5))
        .collect();
    let draw = |canvas: &mut Vec<[f64; 3]>, s: &Sprite| {
        composite(canvas, w, &s.bbox(index), s.trajectory[index].2, &s.texture, s.texture_origin)
    };
    for d in spec.distractors.iter().filter(|d| !d.in_front) {
        draw(&mut canvas, &d.sprite);
    }
    draw(&mut canvas, &spec.target);
    for d in spec.distractors.iter().filter(|d| d.in_front) {
        draw(&mut canvas, &d.sprite);
    }
    for o in spec.occluders.iter().filter(|o| o.frames.contains(&index)) {
        composite(&mut canvas, w, &o.rect, 1.0, &o.texture, (0.0, 0.0));
    }
    let pixels = canvas
        .iter()
        .flat_map(|c| c.map(|v| v.round().clamp(0.0, 255.0) as u8))
        .collect();
    Frame::new(w, h, pixels)
}

/// Renders every frame into an in-memory sequence with exact ground truth.
pub fn render(spec: &SceneSpec) -> Result<Sequence> {
    spec.validate()?;
    let n = spec.frame_count();
    let frames = (0..n).map(|i| render_frame(spec, i)).collect::<Result<Vec<_>>>()?;
    let truth = (0..n).map(|i| spec.target.bbox(i)).collect();
    Sequence::new(spec.name.clone(), FrameSource::Memory(frames), Some(truth))
}

pub fn target_texture(seed: u64) -> Texture {
    Texture::new(seed.wrapping_mul(2).wrapping_add(1), 5.0, 0, 255)
}

pub fn background_texture(seed: u64) -> Texture {
    Texture::new(seed.wrapping_mul(2).wrapping_add(1_000_003), 14.0, 70, 150)
}

pub fn linear(n: usize, start: (f64, f64), step: (f64, f64)) -> Trajectory {
    (0..n)
        .map(|f| (start.0 + step.0 * f as f64, start.1 + step.1 * f as f64, 1.0))
        .collect()
}

/// Canonical scenes on a 320x240 canvas.
pub fn preset(name: &str, seed: u64) -> Result<SceneSpec> {
    let canvas_size = CANVAS;
    let target_size = (32.0, 32.0);
    let (target, distractors, occluders) = match name {
        "static" => (linear(10, (160.0, 120.0), (0.0, 0.0)), vec![], vec![]),
        "translate" => (linear(30, (130.0, 120.0), (2.0, 0.0)), vec![], vec![]),
        "zoom" => {
            let t = (0..21).map(|f| (160.0, 120.0, 1.01f64.powi(f))).collect();
            (t, vec![], vec![])
        }
        "occlude" => {
            let occluder = Occluder {
                rect: BoundingBox::from_center(170.0, 120.0, 48.0, 48.0),
                frames: 15..26,
                texture: Texture::new(seed.wrapping_add(77), 9.0, 40, 200),
            };
            (linear(40, (150.0, 120.0), (1.0, 0.0)), vec![], vec![occluder])
        }
        "distractor" => {
            // A smaller cut of the target's own texture that passes over it
            // in the opposite direction; centres coincide at frame 15.
            let n = 30;
            let target = linear(n, (130.0, 120.0), (1.0, 0.0));
            let d = Distractor {
                sprite: Sprite {
                    texture: target_texture(seed),
                    size: (22.0, 22.0),
                    texture_origin: (5.0, 5.0),
                    trajectory: linear(n, (190.0, 120.0), (-3.0, 0.0)),
                },
                in_front: true,
            };
            (target, vec![d], vec![])
        }
        _ => return Err(Error::UnknownPreset(name.to_string())),
    };
    Ok(SceneSpec {
        name: name.to_string(),
        canvas_size,
        background: background_texture(seed),
        target: Sprite {
            texture: target_texture(seed),
            size: target_size,
            texture_origin: (0.0, 0.0),
            trajectory: target,
        },
        distractors,
        occluders,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_scene_is_constant() {
        let seq = render(&preset("static", 3).unwrap()).unwrap();
        assert_eq!(seq.len(), 10);
        let first = seq.frame(0).unwrap();
        for i in 1..10 {
            assert_eq!(seq.frame(i).unwrap(), first);
        }
        let gt = seq.ground_truth.as_ref().unwrap();
        assert!(gt.iter().all(|b| *b == gt[0]));
    }

    #[test]
    fn translate_moves_two_pixels() {
        let spec = preset("translate", 1).unwrap();
        let seq = render(&spec).unwrap();
        assert_eq!(seq.len(), 30);
        let gt = seq.ground_truth.unwrap();
        for w in gt.windows(2) {
            assert_eq!(w[1].x - w[0].x, 2.0);
            assert_eq!(w[1].y, w[0].y);
        }
    }

    #[test]
    fn zoom_follows_one_percent() {
        let spec = preset("zoom", 1).unwrap();
        for (f, &(_, _, s)) in spec.target.trajectory.iter().enumerate() {
            assert!((s - 1.01f64.powi(f as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_pixels() {
        let spec = preset("distractor", 7).unwrap();
        let a = render(&spec).unwrap();
        let b = render(&spec).unwrap();
        for i in 0..a.len() {
            assert_eq!(a.frame(i).unwrap(), b.frame(i).unwrap());
        }
        let c = render(&preset("distractor", 8).unwrap()).unwrap();
        assert_ne!(a.frame(0).unwrap(), c.frame(0).unwrap());
    }

    #[test]
    fn distractor_crosses_at_frame_15() {
        let spec = preset("distractor", 1).unwrap();
        let d = &spec.distractors[0].sprite;
        let (tx, _, _) = spec.target.trajectory[15];
        let (dx, _, _) = d.trajectory[15];
        assert!((tx - dx).abs() < 1e-9);
        assert!(d.size.0 < spec.target.size.0);
        assert_eq!(d.texture, spec.target.texture);
    }

    #[test]
    fn leaving_canvas_is_an_error() {
        let mut spec = preset("translate", 1).unwrap();
        spec.target.trajectory = linear(30, (130.0, 120.0), (8.0, 0.0));
        assert!(matches!(render(&spec), Err(Error::Scene(_))));
    }

    #[test]
    fn unknown_preset() {
        let err = preset("bogus", 1).unwrap_err();
        assert!(matches!(err, Error::UnknownPreset(_)));
        for p in PRESETS {
            assert!(err.to_string().contains(p));
        }
    }
}
