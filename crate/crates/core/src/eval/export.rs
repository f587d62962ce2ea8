use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Aggregate, OpeReport, TrackerReport};
use crate::error::{Error, Result};

const REPORT_FILE: &str = "report.txt";

/// File-name-safe version of a tracker name.
fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_csv(path: &Path, thresholds: &[f64], rates: &[f64]) -> Result<()> {
    let mut out = String::from("threshold,rate\n");
    for (t, r) in thresholds.iter().zip(rates) {
        writeln!(out, "{t:.6},{r:.6}").unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

struct Series<'a> {
    label: String,
    thresholds: &'a [f64],
    rates: &'a [f64],
}

fn svg_plot(title: &str, x_label: &str, x_max: f64, series: &[Series]) -> String {
    let (w, h) = (480.0, 360.0);
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let px = |x: f64| left + x / x_max * pw;
    let py = |y: f64| top + (1.0 - y) * ph;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{title}</text>"#, w / 2.0).unwrap();
    writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let (x, y) = (px(f * x_max), py(f));
        writeln!(s, r##"<line x1="{x:.1}" y1="{top}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/>"##, top + ph).unwrap();
        writeln!(s, r##"<line x1="{left}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, left + pw).unwrap();
        writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            top + ph + 16.0,
            f * x_max
        )
        .unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{f:.1}</text>"#, left - 6.0, y + 4.0).unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"#,
        left + pw / 2.0,
        h - 12.0
    )
    .unwrap();
    for (i, series) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = series
            .thresholds
            .iter()
            .zip(series.rates)
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        writeln!(
            s,
            r#"<polyline class="series" fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        )
        .unwrap();
        let ly = top + 16.0 + 16.0 * i as f64;
        writeln!(
            s,
            r#"<text class="label" x="{:.1}" y="{ly:.1}" fill="{colour}" text-anchor="end">{}</text>"#,
            left + pw - 8.0,
            series.label
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn headline(t: &TrackerReport) -> Result<&Aggregate> {
    t.sequence_mean.as_ref().ok_or(Error::EmptyReport)
}

/// Writes `threshold,rate` CSVs for every tracker's aggregate and
/// per-sequence curves, one SVG per curve family, and the text report.
/// Returns the paths written.
pub fn export_curves(report: &OpeReport, dir: &Path) -> Result<Vec<PathBuf>> {
    if report.is_empty() {
        return Err(Error::EmptyReport);
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut success_series = Vec::new();
    let mut precision_series = Vec::new();
    for t in report.trackers.iter().filter(|t| t.sequence_mean.is_some()) {
        let agg = headline(t)?;
        let name = slug(&t.tracker);
        for (family, thresholds, rates) in [
            ("success", &agg.success.thresholds, &agg.success.rates),
            ("precision", &agg.precision.thresholds, &agg.precision.rates),
        ] {
            let path = dir.join(format!("{name}_{family}.csv"));
            write_csv(&path, thresholds, rates)?;
            written.push(path);
        }
        for seq in &t.sequences {
            let base = format!("{name}_{}", slug(&seq.name));
            for (family, thresholds, rates) in [
                ("success", &seq.success.thresholds, &seq.success.rates),
                ("precision", &seq.precision.thresholds, &seq.precision.rates),
            ] {
                let path = dir.join(format!("{base}_{family}.csv"));
                write_csv(&path, thresholds, rates)?;
                written.push(path);
            }
        }
        success_series.push(Series {
            label: format!("{} [{:.3}]", t.tracker, agg.success.auc),
            thresholds: &agg.success.thresholds,
            rates: &agg.success.rates,
        });
        precision_series.push(Series {
            label: format!("{} [{:.3}]", t.tracker, agg.precision.precision_at_20),
            thresholds: &agg.precision.thresholds,
            rates: &agg.precision.rates,
        });
    }
    let plots = [
        ("success.svg", svg_plot("Success plots of OPE", "Overlap threshold", 1.0, &success_series)),
        (
            "precision.svg",
            svg_plot("Precision plots of OPE", "Location error threshold", 50.0, &precision_series),
        ),
    ];
    for (file, svg) in plots {
        let path = dir.join(file);
        fs::write(&path, svg)?;
        written.push(path);
    }
    let path = dir.join(REPORT_FILE);
    write_report(report, &path)?;
    written.push(path);
    Ok(written)
}

fn row(out: &mut String, name: &str, frames: usize, agg_or_seq: (f64, f64, f64), fps: Option<f64>) {
    let (succ, auc, prec) = agg_or_seq;
    let fps = fps.map_or_else(|| "-".to_string(), |f| format!("{f:.1}"));
    writeln!(out, "{name:<24} {frames:>7} {succ:>10.4} {auc:>8.4} {prec:>10.4} {fps:>8}").unwrap();
}

/// Per-sequence and aggregate tables for every tracker.
pub fn format_report(report: &OpeReport) -> String {
    let mut out = String::new();
    for t in &report.trackers {
        writeln!(out, "tracker: {}", t.tracker).unwrap();
        writeln!(
            out,
            "{:<24} {:>7} {:>10} {:>8} {:>10} {:>8}",
            "sequence", "frames", "success", "AUC", "prec@20", "fps"
        )
        .unwrap();
        for s in &t.sequences {
            let m = (s.success.success_rate(), s.success.auc, s.precision.precision_at_20);
            row(&mut out, &s.name, s.frames, m, s.fps);
        }
        for (label, agg) in [("mean (sequences)", &t.sequence_mean), ("mean (frames)", &t.frame_weighted)] {
            if let Some(a) = agg {
                let m = (a.success.success_rate(), a.success.auc, a.precision.precision_at_20);
                let fps = if label.ends_with("(frames)") { t.fps() } else { None };
                row(&mut out, label, a.frames, m, fps);
            }
        }
        writeln!(out, "evaluated: {}, skipped: {}", t.sequences.len(), t.skipped.len()).unwrap();
        for note in &t.skipped {
            writeln!(out, "skipped {}: {}", note.sequence, note.reason).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_report(report: &OpeReport, path: &Path) -> Result<()> {
    fs::write(path, format_report(report))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{run_ope_with, Playback, SequenceTracker};
    use crate::frame::Frame;
    use crate::geometry::BoundingBox;
    use crate::ingest::{FrameSource, Sequence};

    fn sequence() -> Sequence {
        let truth: Vec<_> = (0..6)
            .map(|i| BoundingBox::new(i as f64, 2.0, 10.0, 10.0).unwrap())
            .collect();
        let frames = vec![Frame::filled(8, 8, [9, 9, 9]).unwrap(); truth.len()];
        Sequence::new("seq one", FrameSource::Memory(frames), Some(truth)).unwrap()
    }

    #[test]
    fn empty_report_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            export_curves(&OpeReport::default(), dir.path()),
            Err(Error::EmptyReport)
        ));
    }

    #[test]
    fn csv_rows_and_svg_series() {
        let seqs = [sequence()];
        let exact = Playback::new("exact", |s: &Sequence| s.ground_truth.clone().unwrap());
        let shifted = Playback::new("shifted", |s: &Sequence| {
            s.ground_truth.as_ref().unwrap().iter().map(|b| b.translate(4.0, 0.0)).collect()
        });
        let trackers: [&dyn SequenceTracker; 2] = [&exact, &shifted];
        let report = run_ope_with(&seqs, &trackers, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export_curves(&report, dir.path()).unwrap();

        let csv = fs::read_to_string(dir.path().join("exact_success.csv")).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 22);
        assert_eq!(lines[0], "threshold,rate");
        assert_eq!(lines[1], "0.000000,1.000000");
        assert_eq!(lines[21], "1.000000,0.000000");
        let csv = fs::read_to_string(dir.path().join("exact_precision.csv")).unwrap();
        assert_eq!(csv.lines().count(), 52);
        assert!(dir.path().join("shifted_seq_one_success.csv").exists());

        for family in ["success.svg", "precision.svg"] {
            let svg = fs::read_to_string(dir.path().join(family)).unwrap();
            assert_eq!(svg.matches(r#"class="series""#).count(), 2);
            assert_eq!(svg.matches(r#"class="label""#).count(), 2);
            assert!(svg.contains("exact [") && svg.contains("shifted ["));
        }
        let text = fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
        assert!(text.contains("tracker: exact") && text.contains("mean (frames)"));
    }
}
