use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use rct_core::debug;
use rct_core::eval::{export_curves, format_report, run_ope_with, RctTracker, SequenceTracker, SkipNote};
use rct_core::features::FeatureMap;
use rct_core::ingest::write_boxes;
use rct_core::synth;
use rct_core::{load_sequence, parse_groundtruth_line, BoundingBox, Error, Sequence, TrackerConfig, TrackerState};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

/// Correlation-filter tracker with reliable-response masking.
#[derive(Parser, Debug)]
#[command(name = "rct", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Track one sequence and write its trajectory.
    Track(TrackArgs),
    /// One-pass evaluation over every sequence under a dataset root.
    Eval(EvalArgs),
    /// Render a synthetic preset in the sequence directory layout.
    Synth(SynthArgs),
    /// Dump features, responses or masks for one frame.
    Inspect(InspectArgs),
}

/// Overrides for individual configuration keys.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, alias = "num_scales")]
    num_scales: Option<usize>,
    #[arg(long, alias = "scale_step")]
    scale_step: Option<f64>,
    #[arg(long, alias = "cell_size")]
    cell_size: Option<usize>,
    #[arg(long, alias = "proposal_ratio")]
    proposal_ratio: Option<f64>,
    #[arg(long, alias = "ratio_tolerance")]
    ratio_tolerance: Option<f64>,
    #[arg(long, alias = "area_threshold")]
    area_threshold: Option<f64>,
    #[arg(long, alias = "search_padding")]
    search_padding: Option<f64>,
    #[arg(long, alias = "admm_iterations")]
    admm_iterations: Option<usize>,
    #[arg(long, alias = "admm_penalty_init")]
    admm_penalty_init: Option<f64>,
    #[arg(long, alias = "admm_penalty_scale")]
    admm_penalty_scale: Option<f64>,
    #[arg(long, alias = "admm_penalty_max")]
    admm_penalty_max: Option<f64>,
    #[arg(long, alias = "reliable_mask")]
    reliable_mask: Option<bool>,
}

impl ConfigArgs {
    fn resolve(&self) -> rct_core::Result<TrackerConfig> {
        let mut cfg = match &self.config {
            Some(path) => TrackerConfig::load(path)?,
            None => TrackerConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            )*};
        }
        apply!(
            lambda,
            eta,
            num_scales,
            scale_step,
            cell_size,
            proposal_ratio,
            ratio_tolerance,
            area_threshold,
            search_padding,
            admm_iterations,
            admm_penalty_init,
            admm_penalty_scale,
            admm_penalty_max,
            reliable_mask
        );
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct TrackArgs {
    sequence: PathBuf,
    /// Initial box `x,y,w,h` (1-based); defaults to the first ground-truth line.
    #[arg(long)]
    init: Option<String>,
    /// Trajectory file; defaults to `<sequence name>_rct.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write every frame with the tracked box drawn on it.
    #[arg(long)]
    dump_frames: Option<PathBuf>,
    /// Write the chosen scale's response, quantized map and mask per frame.
    #[arg(long)]
    dump_response: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct EvalArgs {
    root: PathBuf,
    #[arg(long, default_value = "report")]
    report: PathBuf,
    /// Sequences evaluated in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Also evaluate the tracker with the reliable mask disabled.
    #[arg(long)]
    ablation: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args, Debug)]
struct SynthArgs {
    preset: String,
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct InspectArgs {
    sequence: PathBuf,
    /// 1-based frame number.
    #[arg(long)]
    frame: usize,
    #[arg(long)]
    init: Option<String>,
    #[arg(long, default_value = "inspect")]
    out: PathBuf,
    #[arg(long)]
    features: bool,
    #[arg(long)]
    response: bool,
    #[arg(long)]
    mask: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Numeric(_)) => EXIT_NUMERIC,
        Some(Error::Config(_) | Error::UnknownPreset(_)) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Track(a) => track(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth_cmd(a),
        Command::Inspect(a) => inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn initial_box(seq: &Sequence, init: Option<&str>) -> anyhow::Result<BoundingBox> {
    if let Some(text) = init {
        let b = parse_groundtruth_line(text).with_context(|| format!("--init {text:?}"))?;
        return Ok(BoundingBox::from_one_based(b));
    }
    seq.ground_truth
        .as_ref()
        .map(|gt| gt[0])
        .ok_or_else(|| anyhow!("{}: no ground truth; pass --init x,y,w,h", seq.name))
}

fn load(path: &Path) -> anyhow::Result<Sequence> {
    Ok(load_sequence(path)?)
}

fn track(args: TrackArgs) -> anyhow::Result<()> {
    let cfg = args.config.resolve()?;
    let seq = load(&args.sequence)?;
    let init = initial_box(&seq, args.init.as_deref())?;
    for dir in [&args.dump_frames, &args.dump_response].into_iter().flatten() {
        fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
    }

    let first = seq.frame(0)?;
    let mut state = TrackerState::init(&first, init, cfg)?;
    let mut boxes = vec![init];
    if let Some(dir) = &args.dump_frames {
        dump_frame(dir, 0, first, &init)?;
    }
    let mut seconds = 0.0;
    let mut uncertain = 0;
    for i in 1..seq.len() {
        let frame = seq.frame(i)?;
        let start = Instant::now();
        let result = state.track_frame_detailed(&frame)?;
        seconds += start.elapsed().as_secs_f64();
        if result.uncertain {
            uncertain += 1;
        }
        if let Some(dir) = &args.dump_response {
            let sample = &result.samples[result.best];
            debug::save_response(&dir.join(format!("{:04}_response.png", i + 1)), &sample.response, 8)?;
            if let Some(d) = &sample.detection {
                debug::save_quantized(&dir.join(format!("{:04}_quantized.png", i + 1)), &d.quantized, 8)?;
                debug::save_mask(&dir.join(format!("{:04}_mask.png", i + 1)), &d.mask, 8)?;
            }
        }
        if let Some(dir) = &args.dump_frames {
            dump_frame(dir, i, frame, &result.bbox)?;
        }
        boxes.push(result.bbox);
    }

    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}_rct.txt", seq.name)));
    write_boxes(&out, &boxes)?;
    let tracked = seq.len() - 1;
    let fps = if seconds > 0.0 { tracked as f64 / seconds } else { 0.0 };
    println!(
        "{}: {} frames, {tracked} tracked in {seconds:.3} s ({fps:.1} FPS), {uncertain} uncertain; trajectory in {}",
        seq.name,
        seq.len(),
        out.display()
    );
    Ok(())
}

fn dump_frame(dir: &Path, index: usize, mut frame: rct_core::Frame, b: &BoundingBox) -> anyhow::Result<()> {
    frame.draw_box(b, [255, 0, 0]);
    frame.save(&dir.join(format!("{:04}.png", index + 1)))?;
    Ok(())
}

fn eval(args: EvalArgs) -> anyhow::Result<()> {
    let cfg = args.config.resolve()?;
    let mut dirs: Vec<PathBuf> = fs::read_dir(&args.root)
        .with_context(|| format!("dataset root {}", args.root.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        bail!("no sequence directories under {}", args.root.display());
    }

    let mut sequences = Vec::new();
    let mut load_failures = Vec::new();
    for dir in &dirs {
        match load_sequence(dir) {
            Ok(seq) => sequences.push(seq),
            Err(e) => {
                warn!("skipping {}: {e}", dir.display());
                load_failures.push(SkipNote {
                    sequence: dir.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
                    reason: e.to_string(),
                });
            }
        }
    }

    let mut trackers = vec![RctTracker::new(cfg.clone())];
    if args.ablation {
        trackers.push(RctTracker::new(TrackerConfig {
            reliable_mask: false,
            ..cfg
        }));
    }
    let refs: Vec<&dyn SequenceTracker> = trackers.iter().map(|t| t as &dyn SequenceTracker).collect();
    let mut report = run_ope_with(&sequences, &refs, args.jobs)?;
    for t in &mut report.trackers {
        t.skipped.extend(load_failures.iter().cloned());
        t.skipped.sort_by(|a, b| a.sequence.cmp(&b.sequence));
    }
    if report.is_empty() {
        eprint!("{}", format_report(&report));
        bail!("every sequence under {} failed", args.root.display());
    }
    export_curves(&report, &args.report)?;
    print!("{}", format_report(&report));
    info!("report written to {}", args.report.display());
    Ok(())
}

fn synth_cmd(args: SynthArgs) -> anyhow::Result<()> {
    let spec = synth::preset(&args.preset, args.seed)?;
    let seq = synth::render(&spec)?;
    seq.write_to(&args.out)?;
    println!("{}: {} frames written to {}", args.preset, seq.len(), args.out.display());
    Ok(())
}

/// Per-block energy of a fused feature map: one plane per 31-channel HOG
/// block, summing squares over its channels.
fn block_energy(features: &FeatureMap) -> Vec<Vec<f64>> {
    let per_block = features.channels / 3;
    (0..3)
        .map(|b| {
            let mut plane = vec![0.0; features.rows * features.cols];
            for k in b * per_block..(b + 1) * per_block {
                for (p, v) in plane.iter_mut().zip(features.channel(k)) {
                    *p += v * v;
                }
            }
            plane
        })
        .collect()
}

fn inspect(args: InspectArgs) -> anyhow::Result<()> {
    let cfg = args.config.resolve()?;
    let seq = load(&args.sequence)?;
    if args.frame == 0 || args.frame > seq.len() {
        return Err(Error::Format(format!("frame {} outside 1..={}", args.frame, seq.len())).into());
    }
    let (all, features, response, mask) = {
        let any = args.features || args.response || args.mask;
        (!any, args.features, args.response, args.mask)
    };
    fs::create_dir_all(&args.out).with_context(|| args.out.display().to_string())?;

    let init = initial_box(&seq, args.init.as_deref())?;
    let mut state = TrackerState::init(&seq.frame(0)?, init, cfg)?;
    for i in 1..args.frame - 1 {
        state.track_frame(&seq.frame(i)?)?;
    }
    let frame = seq.frame(args.frame - 1)?;
    let n = args.frame;
    let mut written = Vec::new();

    if all || features {
        let map = state.features(&frame)?;
        for (name, plane) in ["hue", "saturation", "value"].iter().zip(block_energy(&map)) {
            let path = args.out.join(format!("{n:04}_features_{name}.png"));
            debug::save_gray(&path, map.rows, map.cols, &plane, 8)?;
            written.push(path);
        }
    }
    if all || response || mask {
        let samples = state.scale_pyramid(&frame)?;
        for (i, s) in samples.iter().enumerate() {
            if all || response {
                let path = args.out.join(format!("{n:04}_response_s{i}.png"));
                debug::save_response(&path, &s.response, 8)?;
                written.push(path);
            }
            if let (true, Some(d)) = (all || mask, &s.detection) {
                let path = args.out.join(format!("{n:04}_mask_s{i}.png"));
                debug::save_mask(&path, &d.mask, 8)?;
                written.push(path);
                println!(
                    "scale {:.4}: threshold {}, proposal ratio {:.3}, components kept {} removed {}, peak {:?}{}",
                    s.scale_factor,
                    d.mask.threshold_used,
                    d.mask.proposal_ratio_achieved,
                    d.mask.components_kept,
                    d.mask.components_removed,
                    s.peak_location,
                    if d.fallback { " (fallback)" } else { "" }
                );
            }
        }
    }
    for p in &written {
        println!("{}", p.display());
    }
    Ok(())
}
