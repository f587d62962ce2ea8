use rct_core::eval::{center_error, run_ope, RctTracker, SequenceTracker};
use rct_core::synth::{self, PRESETS};
use rct_core::{load_sequence, track_sequence, BoundingBox, Error, Frame, Sequence, TrackerConfig, TrackerState};

fn render(name: &str, seed: u64) -> Sequence {
    synth::render(&synth::preset(name, seed).unwrap()).unwrap()
}

fn track(seq: &Sequence, cfg: &TrackerConfig) -> Vec<BoundingBox> {
    let init = seq.ground_truth.as_ref().unwrap()[0];
    track_sequence((0..seq.len()).map(|i| seq.frame(i)), init, cfg).unwrap()
}

#[test]
fn synth_round_trip_through_disk() {
    let seq = render("occlude", 4);
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("occlude");
    seq.write_to(&root).unwrap();
    let back = load_sequence(&root).unwrap();
    assert_eq!(back.name, "occlude");
    assert_eq!(back.len(), seq.len());
    for (a, b) in back.ground_truth.as_ref().unwrap().iter().zip(seq.ground_truth.as_ref().unwrap()) {
        assert!((a.x - b.x).abs() < 0.006 && (a.y - b.y).abs() < 0.006);
        assert!((a.w - b.w).abs() < 0.006 && (a.h - b.h).abs() < 0.006);
    }
    for i in [0, 17, seq.len() - 1] {
        assert_eq!(back.frame(i).unwrap(), seq.frame(i).unwrap());
    }
}

#[test]
fn presets_are_deterministic_per_seed() {
    for name in PRESETS {
        let (a, b, c) = (render(name, 7), render(name, 7), render(name, 8));
        assert_eq!(a.frame(3).unwrap(), b.frame(3).unwrap(), "{name}");
        assert_ne!(a.frame(3).unwrap(), c.frame(3).unwrap(), "{name}");
    }
}

#[test]
fn tracking_is_deterministic() {
    let seq = render("distractor", 2);
    let cfg = TrackerConfig::default();
    assert_eq!(track(&seq, &cfg), track(&seq, &cfg));
}

#[test]
fn trajectory_starts_with_initial_box() {
    let seq = render("static", 1);
    let boxes = track(&seq, &TrackerConfig::default());
    assert_eq!(boxes.len(), seq.len());
    assert_eq!(boxes[0], seq.ground_truth.as_ref().unwrap()[0]);
}

#[test]
fn masked_and_unmasked_agree_without_distractors() {
    let seq = render("translate", 5);
    let masked = track(&seq, &TrackerConfig::default());
    let unmasked = track(
        &seq,
        &TrackerConfig {
            reliable_mask: false,
            ..TrackerConfig::default()
        },
    );
    for (a, b) in masked.iter().zip(&unmasked) {
        assert!(center_error(a, b) < 1.0);
    }
}

#[test]
fn shifted_scene_gives_shifted_track() {
    // Same texture and motion, start moved by whole cells.
    let mut spec = synth::preset("translate", 3).unwrap();
    let base = synth::render(&spec).unwrap();
    for p in &mut spec.target.trajectory {
        p.0 += 16.0;
        p.1 -= 8.0;
    }
    let moved = synth::render(&spec).unwrap();
    let (a, b) = (track(&base, &TrackerConfig::default()), track(&moved, &TrackerConfig::default()));
    for (p, q) in a.iter().zip(&b) {
        let (pc, qc) = (p.center(), q.center());
        assert!((qc.0 - pc.0 - 16.0).abs() < 2.0 && (qc.1 - pc.1 + 8.0).abs() < 2.0, "{p:?} {q:?}");
    }
}

#[test]
fn occluded_target_is_reacquired() {
    let seq = render("occlude", 1);
    let boxes = track(&seq, &TrackerConfig::default());
    let truth = seq.ground_truth.as_ref().unwrap();
    let last = boxes.len() - 1;
    assert!(center_error(&boxes[last], &truth[last]) < 10.0);
}

#[test]
fn rct_tracker_reports_timing() {
    let seq = render("static", 1);
    let out = RctTracker::new(TrackerConfig::default())
        .run(&seq, seq.ground_truth.as_ref().unwrap()[0])
        .unwrap();
    assert_eq!(out.boxes.len(), seq.len());
    assert!(out.track_seconds.unwrap() > 0.0);
}

#[test]
fn ope_over_presets() {
    let seqs: Vec<_> = ["static", "translate", "zoom"].iter().map(|p| render(p, 1)).collect();
    let report = run_ope(&seqs, &TrackerConfig::default(), 2).unwrap();
    let t = &report.trackers[0];
    assert_eq!(t.sequences.len(), 3);
    let names: Vec<_> = t.sequences.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["static", "translate", "zoom"]);
    let agg = t.sequence_mean.as_ref().unwrap();
    assert_eq!(agg.success.success_rate(), 1.0);
    assert_eq!(agg.precision.precision_at_20, 1.0);
}

#[test]
fn init_clamps_box_outside_frame() {
    let frame = Frame::filled(64, 48, [50, 60, 70]).unwrap();
    let b = BoundingBox::new(200.0, 200.0, 16.0, 16.0).unwrap();
    let state = TrackerState::init(&frame, b, TrackerConfig::default()).unwrap();
    assert_eq!(state.position, (63.0, 47.0));
    assert_eq!(state.target_size, (16.0, 16.0));
}

#[test]
fn init_rejects_box_smaller_than_a_cell() {
    let frame = Frame::filled(64, 48, [50, 60, 70]).unwrap();
    let b = BoundingBox::new(10.0, 10.0, 3.0, 20.0).unwrap();
    assert!(matches!(
        TrackerState::init(&frame, b, TrackerConfig::default()),
        Err(Error::Init(_))
    ));
}
