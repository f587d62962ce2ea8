//! One-pass evaluation: overlap and centre-error metrics, success and
//! precision curves, and multi-sequence reports.

mod export;

pub use export::{export_curves, format_report, write_report};

use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::ingest::Sequence;
use crate::tracker::TrackerState;

/// Success thresholds 0.00, 0.05, ..., 1.00.
pub const SUCCESS_POINTS: usize = 21;
/// Precision thresholds 0..=50 px.
pub const PRECISION_POINTS: usize = 51;
/// Overlap above which a frame counts as correct.
pub const SUCCESS_OVERLAP: f64 = 0.5;
pub const PRECISION_PIXELS: f64 = 20.0;

/// Intersection over union, in `[0, 1]`.
pub fn overlap(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Euclidean distance between box centres.
pub fn center_error(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

pub fn success_thresholds() -> Vec<f64> {
    (0..SUCCESS_POINTS).map(|i| i as f64 / 20.0).collect()
}

pub fn precision_thresholds() -> Vec<f64> {
    (0..PRECISION_POINTS).map(|i| i as f64).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuccessCurve {
    pub thresholds: Vec<f64>,
    /// Fraction of frames with overlap strictly above each threshold.
    pub rates: Vec<f64>,
    pub auc: f64,
}

impl SuccessCurve {
    pub fn from_overlaps(overlaps: &[f64]) -> Self {
        let thresholds = success_thresholds();
        let n = overlaps.len().max(1) as f64;
        let rates = thresholds
            .iter()
            .map(|&t| overlaps.iter().filter(|&&o| o > t).count() as f64 / n)
            .collect();
        Self::from_rates(rates)
    }

    fn from_rates(rates: Vec<f64>) -> Self {
        let auc = rates.iter().sum::<f64>() / rates.len() as f64;
        Self {
            thresholds: success_thresholds(),
            rates,
            auc,
        }
    }

    /// Rate at overlap 0.5.
    pub fn success_rate(&self) -> f64 {
        self.rates[10]
    }

    pub fn is_monotone(&self) -> bool {
        self.rates.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionCurve {
    pub thresholds: Vec<f64>,
    /// Fraction of frames with centre error at most each threshold.
    pub rates: Vec<f64>,
    pub precision_at_20: f64,
}

impl PrecisionCurve {
    pub fn from_errors(errors: &[f64]) -> Self {
        let thresholds = precision_thresholds();
        let n = errors.len().max(1) as f64;
        let rates = thresholds
            .iter()
            .map(|&t| errors.iter().filter(|&&e| e <= t).count() as f64 / n)
            .collect();
        Self::from_rates(rates)
    }

    fn from_rates(rates: Vec<f64>) -> Self {
        let precision_at_20 = rates[PRECISION_PIXELS as usize];
        Self {
            thresholds: precision_thresholds(),
            rates,
            precision_at_20,
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.rates.windows(2).all(|w| w[1] >= w[0])
    }
}

/// What a tracker produced for one sequence.
#[derive(Clone, Debug)]
pub struct TrackOutput {
    /// One box per frame, starting with the initialization box.
    pub boxes: Vec<BoundingBox>,
    /// Time spent in the per-frame loop, excluding initialization and frame
    /// decoding.
    pub track_seconds: Option<f64>,
}

pub trait SequenceTracker: Sync {
    fn name(&self) -> &str;
    fn run(&self, sequence: &Sequence, init: BoundingBox) -> Result<TrackOutput>;
}

/// The correlation-filter tracker under a fixed configuration.
#[derive(Clone, Debug)]
pub struct RctTracker {
    pub name: String,
    pub config: TrackerConfig,
}

impl RctTracker {
    pub fn new(config: TrackerConfig) -> Self {
        let name = if config.reliable_mask { "RCT" } else { "RCT-nomask" };
        Self {
            name: name.to_string(),
            config,
        }
    }
}

impl SequenceTracker for RctTracker {
    fn name(&self) -> &str {
        &self.name
    }

    fn run(&self, sequence: &Sequence, init: BoundingBox) -> Result<TrackOutput> {
        let first = sequence.frame(0)?;
        let mut state = TrackerState::init(&first, init, self.config.clone())?;
        let mut boxes = Vec::with_capacity(sequence.len());
        boxes.push(init);
        let mut seconds = 0.0;
        for i in 1..sequence.len() {
            let frame = sequence.frame(i)?;
            let start = Instant::now();
            boxes.push(state.track_frame(&frame)?);
            seconds += start.elapsed().as_secs_f64();
        }
        Ok(TrackOutput {
            boxes,
            track_seconds: Some(seconds),
        })
    }
}

/// Replays boxes computed by a function of the sequence. Used for metric
/// checks and for scoring precomputed trajectories.
pub struct Playback<F> {
    pub name: String,
    pub boxes: F,
}

impl<F> Playback<F>
where
    F: Fn(&Sequence) -> Vec<BoundingBox> + Sync,
{
    pub fn new(name: impl Into<String>, boxes: F) -> Self {
        Self {
            name: name.into(),
            boxes,
        }
    }
}

impl<F> SequenceTracker for Playback<F>
where
    F: Fn(&Sequence) -> Vec<BoundingBox> + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn run(&self, sequence: &Sequence, _init: BoundingBox) -> Result<TrackOutput> {
        Ok(TrackOutput {
            boxes: (self.boxes)(sequence),
            track_seconds: None,
        })
    }
}

#[derive(Clone, Debug)]
pub struct SequenceResult {
    pub name: String,
    /// Frames scored (all but the first).
    pub frames: usize,
    pub success: SuccessCurve,
    pub precision: PrecisionCurve,
    pub boxes: Vec<BoundingBox>,
    pub fps: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkipNote {
    pub sequence: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub success: SuccessCurve,
    pub precision: PrecisionCurve,
    pub frames: usize,
}

impl Aggregate {
    /// Weighted mean of per-sequence curves; `weights` are per-sequence.
    fn combine(results: &[SequenceResult], weight: impl Fn(&SequenceResult) -> f64) -> Option<Self> {
        let total: f64 = results.iter().map(&weight).sum();
        if results.is_empty() || total <= 0.0 {
            return None;
        }
        let mean = |pick: &dyn Fn(&SequenceResult) -> &[f64], len: usize| -> Vec<f64> {
            (0..len)
                .map(|i| results.iter().map(|r| weight(r) * pick(r)[i]).sum::<f64>() / total)
                .collect()
        };
        Some(Self {
            success: SuccessCurve::from_rates(mean(&|r| &r.success.rates, SUCCESS_POINTS)),
            precision: PrecisionCurve::from_rates(mean(&|r| &r.precision.rates, PRECISION_POINTS)),
            frames: results.iter().map(|r| r.frames).sum(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct TrackerReport {
    pub tracker: String,
    /// Ordered by sequence name.
    pub sequences: Vec<SequenceResult>,
    pub skipped: Vec<SkipNote>,
    /// Every sequence weighted equally (headline numbers).
    pub sequence_mean: Option<Aggregate>,
    /// Every scored frame weighted equally.
    pub frame_weighted: Option<Aggregate>,
}

impl TrackerReport {
    pub fn fps(&self) -> Option<f64> {
        let (frames, secs) = self
            .sequences
            .iter()
            .filter_map(|s| s.fps.map(|f| (s.frames as f64, s.frames as f64 / f)))
            .fold((0.0, 0.0), |(a, b), (f, s)| (a + f, b + s));
        (secs > 0.0).then(|| frames / secs)
    }
}

#[derive(Clone, Debug, Default)]
pub struct OpeReport {
    pub trackers: Vec<TrackerReport>,
}

impl OpeReport {
    pub fn is_empty(&self) -> bool {
        self.trackers.iter().all(|t| t.sequences.is_empty())
    }
}

/// Scores one trajectory against ground truth, skipping the first frame.
pub fn score_sequence(name: &str, boxes: &[BoundingBox], truth: &[BoundingBox]) -> Result<SequenceResult> {
    if boxes.len() != truth.len() {
        return Err(Error::Format(format!(
            "{name}: {} tracked boxes for {} ground-truth boxes",
            boxes.len(),
            truth.len()
        )));
    }
    if truth.len() < 2 {
        return Err(Error::Format(format!("{name}: nothing to score after the first frame")));
    }
    let pairs = || boxes.iter().zip(truth).skip(1);
    let overlaps: Vec<f64> = pairs().map(|(b, g)| overlap(b, g)).collect();
    let errors: Vec<f64> = pairs().map(|(b, g)| center_error(b, g)).collect();
    Ok(SequenceResult {
        name: name.to_string(),
        frames: overlaps.len(),
        success: SuccessCurve::from_overlaps(&overlaps),
        precision: PrecisionCurve::from_errors(&errors),
        boxes: boxes.to_vec(),
        fps: None,
    })
}

fn evaluate_one(tracker: &dyn SequenceTracker, seq: &Sequence) -> std::result::Result<SequenceResult, SkipNote> {
    let skip = |reason: String| SkipNote {
        sequence: seq.name.clone(),
        reason,
    };
    let truth = seq
        .ground_truth
        .as_ref()
        .ok_or_else(|| skip("no ground truth".into()))?;
    let output = tracker.run(seq, truth[0]).map_err(|e| skip(e.to_string()))?;
    let mut result = score_sequence(&seq.name, &output.boxes, truth).map_err(|e| skip(e.to_string()))?;
    result.fps = output
        .track_seconds
        .filter(|&s| s > 0.0)
        .map(|s| result.frames as f64 / s);
    Ok(result)
}

/// Runs every tracker on every sequence once, initialized from the first
/// ground-truth box. `jobs` bounds how many sequences run at once.
pub fn run_ope_with(sequences: &[Sequence], trackers: &[&dyn SequenceTracker], jobs: usize) -> Result<OpeReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut report = OpeReport::default();
    for &tracker in trackers {
        let outcomes: Vec<_> = pool.install(|| {
            sequences
                .par_iter()
                .map(|seq| evaluate_one(tracker, seq))
                .collect()
        });
        let mut results = Vec::new();
        let mut skipped = Vec::new();
        for outcome in outcomes {
            match outcome {
                Ok(r) => {
                    info!(
                        "{} / {}: success {:.3}, AUC {:.3}, precision@20 {:.3}",
                        tracker.name(),
                        r.name,
                        r.success.success_rate(),
                        r.success.auc,
                        r.precision.precision_at_20
                    );
                    results.push(r);
                }
                Err(note) => {
                    warn!("{} / {} skipped: {}", tracker.name(), note.sequence, note.reason);
                    skipped.push(note);
                }
            }
        }
        results.sort_by(|a, b| a.name.cmp(&b.name));
        skipped.sort_by(|a, b| a.sequence.cmp(&b.sequence));
        report.trackers.push(TrackerReport {
            tracker: tracker.name().to_string(),
            sequence_mean: Aggregate::combine(&results, |_| 1.0),
            frame_weighted: Aggregate::combine(&results, |r| r.frames as f64),
            sequences: results,
            skipped,
        });
    }
    Ok(report)
}

/// OPE of the correlation-filter tracker under `cfg`.
pub fn run_ope(sequences: &[Sequence], cfg: &TrackerConfig, jobs: usize) -> Result<OpeReport> {
    let tracker = RctTracker::new(cfg.clone());
    run_ope_with(sequences, &[&tracker], jobs)
}
