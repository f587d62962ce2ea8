use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rct(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rct")).args(args).current_dir(cwd).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn synth_track_eval_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for preset in ["translate", "static"] {
        let o = rct(&["synth", preset, &format!("data/{preset}"), "--seed", "2"], d);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }

    let o = rct(&["track", "data/translate"], d);
    assert_eq!(code(&o), 0);
    let traj = fs::read_to_string(d.join("translate_rct.txt")).unwrap();
    assert_eq!(traj.lines().count(), 30);
    let gt = fs::read_to_string(d.join("data/translate/groundtruth_rect.txt")).unwrap();
    assert_eq!(traj.lines().next(), gt.lines().next());

    let o = rct(&["track", "data/static", "--init", "145,105,32,32", "--out", "s.txt", "--eta", "0.02"], d);
    assert_eq!(code(&o), 0);
    assert!(fs::read_to_string(d.join("s.txt")).unwrap().starts_with("145,105,32,32"));

    let o = rct(&["eval", "data", "--report", "rep", "--jobs", "2", "--ablation"], d);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("tracker: RCT") && stdout.contains("tracker: RCT-nomask"));
    for f in ["success.svg", "precision.svg", "report.txt", "RCT_success.csv", "RCT-nomask_static_precision.csv"] {
        assert!(d.join("rep").join(f).exists(), "{f}");
    }

    let o = rct(&["inspect", "data/translate", "--frame", "4", "--mask", "--out", "ins"], d);
    assert_eq!(code(&o), 0);
    let masks = fs::read_dir(d.join("ins")).unwrap().count();
    assert_eq!(masks, 5);
}

#[test]
fn eval_skips_broken_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&rct(&["synth", "static", "data/good"], d)), 0);
    fs::create_dir_all(d.join("data/broken/img")).unwrap();
    let o = rct(&["eval", "data", "--report", "rep"], d);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("skipped broken"));

    fs::remove_dir_all(d.join("data/good")).unwrap();
    let o = rct(&["eval", "data", "--report", "rep2"], d);
    assert_eq!(code(&o), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&rct(&["frobnicate"], d)), 1);
    assert_eq!(code(&rct(&["synth", "nope", "x"], d)), 1);
    assert_eq!(code(&rct(&["track", "missing"], d)), 2);
    assert_eq!(code(&rct(&["synth", "static", "seq"], d)), 0);
    assert_eq!(code(&rct(&["track", "seq", "--lambda", "-1"], d)), 1);
    fs::write(d.join("bad.cfg"), "lambda = 0.01\nbogus = 3\n").unwrap();
    assert_eq!(code(&rct(&["track", "seq", "--config", "bad.cfg"], d)), 1);
    fs::write(d.join("good.cfg"), "# tuned\nlambda = 0.01\nreliable_mask = false\n").unwrap();
    assert_eq!(code(&rct(&["track", "seq", "--config", "good.cfg"], d)), 0);
    assert_eq!(code(&rct(&["inspect", "seq", "--frame", "99"], d)), 2);
    assert_eq!(code(&rct(&["--help"], d)), 0);
}
