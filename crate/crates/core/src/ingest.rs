use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::geometry::BoundingBox;

pub const IMAGE_DIR: &str = "img";
pub const GROUND_TRUTH_FILE: &str = "groundtruth_rect.txt";
const IMAGE_EXTENSIONS: &[&str] = &["jpg", "jpeg", "png", "bmp"];

#[derive(Clone, Debug)]
pub enum FrameSource {
    Files(Vec<PathBuf>),
    Memory(Vec<Frame>),
}

/// An image sequence with optional per-frame ground truth (0-based boxes).
#[derive(Clone, Debug)]
pub struct Sequence {
    pub name: String,
    pub frames: FrameSource,
    pub ground_truth: Option<Vec<BoundingBox>>,
}

impl Sequence {
    pub fn new(
        name: impl Into<String>,
        frames: FrameSource,
        ground_truth: Option<Vec<BoundingBox>>,
    ) -> Result<Self> {
        let seq = Self {
            name: name.into(),
            frames,
            ground_truth,
        };
        if seq.is_empty() {
            return Err(Error::Format(format!("sequence {:?} has no frames", seq.name)));
        }
        if let Some(gt) = &seq.ground_truth {
            if gt.len() != seq.len() {
                return Err(Error::Format(format!(
                    "sequence {:?}: {} ground-truth boxes for {} frames",
                    seq.name,
                    gt.len(),
                    seq.len()
                )));
            }
        }
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        match &self.frames {
            FrameSource::Files(p) => p.len(),
            FrameSource::Memory(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frame(&self, index: usize) -> Result<Frame> {
        match &self.frames {
            FrameSource::Files(p) => Frame::load(&p[index]),
            FrameSource::Memory(f) => Ok(f[index].clone()),
        }
    }

    pub fn frame_paths(&self) -> Option<&[PathBuf]> {
        match &self.frames {
            FrameSource::Files(p) => Some(p),
            FrameSource::Memory(_) => None,
        }
    }

    /// Writes the sequence in the benchmark layout: `img/NNNN.png` plus a
    /// 1-based `groundtruth_rect.txt` when ground truth is present.
    pub fn write_to(&self, root: &Path) -> Result<()> {
        let img_dir = root.join(IMAGE_DIR);
        fs::create_dir_all(&img_dir)?;
        for i in 0..self.len() {
            self.frame(i)?
                .save(&img_dir.join(format!("{:04}.png", i + 1)))?;
        }
        if let Some(gt) = &self.ground_truth {
            write_boxes(&root.join(GROUND_TRUTH_FILE), gt)?;
        }
        Ok(())
    }
}

/// Parses `x,y,w,h` with comma, tab or whitespace separators. Values are
/// returned as written (1-based on disk).
pub fn parse_groundtruth_line(line: &str) -> Result<BoundingBox> {
    let fields: Vec<&str> = line
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    if fields.len() != 4 {
        return Err(Error::Format(format!(
            "expected 4 fields in ground-truth line {line:?}, found {}",
            fields.len()
        )));
    }
    let mut v = [0.0; 4];
    for (slot, field) in v.iter_mut().zip(&fields) {
        *slot = field
            .parse()
            .map_err(|_| Error::Format(format!("not a number: {field:?} in {line:?}")))?;
    }
    BoundingBox::new(v[0], v[1], v[2], v[3])
}

/// Reads a box file (one line per frame, 1-based) into 0-based boxes.
pub fn read_boxes(path: &Path) -> Result<Vec<BoundingBox>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| parse_groundtruth_line(l).map(BoundingBox::from_one_based))
        .collect()
}

/// Writes 0-based boxes as 1-based `x,y,w,h` lines, rounded to 1/100 px.
pub fn write_boxes(path: &Path, boxes: &[BoundingBox]) -> Result<()> {
    let round = |v: f64| (v * 100.0).round() / 100.0;
    let mut out = String::new();
    for b in boxes {
        let b = b.to_one_based();
        let r = BoundingBox {
            x: round(b.x),
            y: round(b.y),
            w: round(b.w),
            h: round(b.h),
        };
        out.push_str(&r.to_string());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn frame_number(path: &Path) -> Option<u64> {
    path.file_stem()?.to_str()?.parse().ok()
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

pub fn load_sequence(root: &Path) -> Result<Sequence> {
    if !root.is_dir() {
        return Err(Error::NotFound(root.to_path_buf()));
    }
    let img_dir = root.join(IMAGE_DIR);
    if !img_dir.is_dir() {
        return Err(Error::NotFound(img_dir));
    }

    let mut numbered = Vec::new();
    for entry in fs::read_dir(&img_dir)? {
        let path = entry?.path();
        if !is_image(&path) {
            continue;
        }
        let n = frame_number(&path).ok_or_else(|| {
            Error::Format(format!("image file without a numeric name: {}", path.display()))
        })?;
        numbered.push((n, path));
    }
    if numbered.is_empty() {
        return Err(Error::Format(format!("no images in {}", img_dir.display())));
    }
    numbered.sort();
    let paths: Vec<PathBuf> = numbered.into_iter().map(|(_, p)| p).collect();

    let gt_path = root.join(GROUND_TRUTH_FILE);
    let ground_truth = if gt_path.is_file() {
        Some(read_boxes(&gt_path)?)
    } else {
        None
    };

    let name = root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| root.display().to_string());
    Sequence::new(name, FrameSource::Files(paths), ground_truth)
}
