use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn fgo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fgo"))
        .current_dir(dir)
        .env_remove("FGO_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn synth(dir: &Path, kind: &str, extra: &[&str]) {
    let mut args = vec!["synth", kind, "--size", "48", "--out", "data"];
    args.extend_from_slice(extra);
    ok(&fgo(dir, &args));
}

fn run_args<'a>(stem: &'a str, out: &'a str) -> Vec<String> {
    vec![
        "run".into(),
        "--image".into(),
        format!("data/{stem}.ppm"),
        "--contours".into(),
        format!("data/{stem}_contours.lm1"),
        "--segments".into(),
        format!("data/{stem}_segments.lm1"),
        "--gt".into(),
        format!("data/{stem}.sm1"),
        "--out".into(),
        out.into(),
    ]
}

fn run(dir: &Path, args: &[String]) -> Output {
    fgo(dir, &args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn synth_writes_four_files() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), "overlapping-squares", &[]);
    synth(tmp.path(), "annulus", &["--radius", "18", "--name", "ring"]);
    let mut names: Vec<String> = fs::read_dir(tmp.path().join("data"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "overlapping-squares.ppm",
            "overlapping-squares.sm1",
            "overlapping-squares_contours.lm1",
            "overlapping-squares_segments.lm1",
            "ring.ppm",
            "ring.sm1",
            "ring_contours.lm1",
            "ring_segments.lm1",
        ]
    );
    let bad = fgo(tmp.path(), &["synth", "triangle"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown kind"));
}

#[test]
fn run_writes_maps_and_visualizations() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), "overlapping-squares", &[]);
    let mut args = run_args("overlapping-squares", "out");
    args.extend(["--weights".into(), "0.05,0.15,0.80".into()]);
    ok(&run(tmp.path(), &args));
    let out = tmp.path().join("out");
    let fm1 = fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "fm1"))
        .count();
    assert_eq!(fm1, 16);
    assert_eq!(fs::read_to_string(out.join("index.txt")).unwrap().lines().count(), 17);
    for pgm in ["direction.pgm", "correctness.pgm"] {
        let bytes = fs::read(out.join(pgm)).unwrap();
        assert!(bytes.starts_with(b"P5\n48 48\n255\n"), "{pgm}");
        assert_eq!(bytes.len(), "P5\n48 48\n255\n".len() + 48 * 48);
    }
    let report = fs::read_to_string(out.join("run.txt")).unwrap();
    assert!(report.contains("junctions=2"));
    assert!(report.contains("gt1.fgca="));
}

#[test]
fn runs_are_bit_identical() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), "overlapping-squares", &["--gradient", "0.2"]);
    for out in ["a", "b"] {
        let mut args = run_args("overlapping-squares", out);
        args.extend(["--preset".into(), "with-both".into()]);
        ok(&run(tmp.path(), &args));
    }
    for e in fs::read_dir(tmp.path().join("a")).unwrap() {
        let name = e.unwrap().file_name();
        let a = fs::read(tmp.path().join("a").join(&name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(&name)).unwrap();
        assert!(a == b, "{name:?} differs");
    }
}

#[test]
fn tj_without_labels_falls_back_with_a_warning() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), "isolated-square", &[]);
    let out = fgo(tmp.path(), &["run", "--image", "data/isolated-square.ppm", "--preset", "with-tj", "--out", "o"]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("moved onto alphaRef"));
    let report = fs::read_to_string(tmp.path().join("o/run.txt")).unwrap();
    assert!(report.contains("weights=1,0,0"), "{report}");
}

#[test]
fn missing_or_malformed_inputs_fail() {
    let tmp = TempDir::new().unwrap();
    let missing = fgo(tmp.path(), &["run", "--image", "nope.ppm"]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.ppm"));

    fs::write(tmp.path().join("bad.ppm"), "P6\n2 2\n255\nxx").unwrap();
    assert!(!fgo(tmp.path(), &["run", "--image", "bad.ppm"]).status.success());
    assert!(!fgo(tmp.path(), &["run", "--image", "bad.ppm", "--weights", "0.5,0.6,0"]).status.success());
}

#[test]
fn config_precedence_and_seed_override() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), "isolated-square", &[]);
    fs::write(tmp.path().join("c.cfg"), "preset=with-sa\nseed=3\nsigma=2.0\n").unwrap();
    let base = ["run", "--image", "data/isolated-square.ppm", "--config", "c.cfg", "--set", "sigma=2.1"];

    let mut args = base.to_vec();
    args.extend(["--out", "o1"]);
    ok(&fgo(tmp.path(), &args));
    let cfg = fs::read_to_string(tmp.path().join("o1/config.txt")).unwrap();
    assert!(cfg.contains("alphaSA=0.65\n") && cfg.contains("sigma=2.1\n") && cfg.contains("seed=3\n"), "{cfg}");

    let mut args = base.to_vec();
    args.extend(["--out", "o2"]);
    let out = Command::new(env!("CARGO_BIN_EXE_fgo"))
        .current_dir(tmp.path())
        .env("FGO_SEED", "17")
        .args(&args)
        .output()
        .unwrap();
    ok(&out);
    assert!(fs::read_to_string(tmp.path().join("o2/config.txt")).unwrap().contains("seed=17\n"));
}

fn dataset(dir: &Path) {
    synth(dir, "overlapping-squares", &[]);
    synth(dir, "shaded-edge", &["--gradient", "0.5"]);
    synth(dir, "annulus", &["--gradient", "0.1"]);
    let line = |id: &str, stem: &str| {
        format!("id={id} image=data/{stem}.ppm gt=data/{stem}.sm1 contours=data/{stem}_contours.lm1 segments=data/{stem}_segments.lm1\n")
    };
    let text = line("a", "overlapping-squares") + &line("b", "shaded-edge") + &line("c", "annulus");
    fs::write(dir.join("m.txt"), &text).unwrap();
    fs::write(dir.join("m_bad.txt"), text + "id=x image=missing.ppm gt=missing.sm1\n").unwrap();
    fs::write(dir.join("all_bad.txt"), "id=x image=missing.ppm gt=missing.sm1\n").unwrap();
}

#[test]
fn eval_reports_and_comparison() {
    let tmp = TempDir::new().unwrap();
    dataset(tmp.path());
    let out = fgo(tmp.path(), &["eval", "--manifest", "m_bad.txt", "--compare", "reference,with-sa", "--out", "e"]);
    ok(&out);
    let e = tmp.path().join("e");
    let report = fs::read_to_string(e.join("eval_with-sa.txt")).unwrap();
    assert_eq!(report.lines().filter(|l| l.starts_with("image.")).count(), 3);
    assert!(report.contains("skipped=1"));
    assert!(report.contains("p_value="));
    let cmp = fs::read_to_string(e.join("comparison.txt")).unwrap();
    let p: f64 = cmp.lines().find_map(|l| l.strip_prefix("p_value=")).unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&p));

    let all_bad = fgo(tmp.path(), &["eval", "--manifest", "all_bad.txt", "--out", "e2"]);
    assert!(!all_bad.status.success());
    assert!(!fgo(tmp.path(), &["eval", "--manifest", "m.txt", "--compare", "reference"]).status.success());
}

#[test]
fn tune_two_weights_writes_weights_and_trace() {
    let tmp = TempDir::new().unwrap();
    dataset(tmp.path());
    ok(&fgo(
        tmp.path(),
        &["--jobs", "2", "tune", "--manifest", "m.txt", "--weights", "alphaRef,alphaSA", "--split", "all", "--out", "t"],
    ));
    let t = tmp.path().join("t");
    let mut cfg = String::new();
    for line in fs::read_to_string(t.join("tuned_weights.txt")).unwrap().lines() {
        if let Some((k, v)) = line.split_once('=') {
            if !k.starts_with('#') {
                cfg.push_str(&format!("{k}={v}\n"));
            }
        }
    }
    assert!(cfg.contains("alphaTJ=0\n"));
    let a: Vec<f64> = cfg.lines().map(|l| l.split_once('=').unwrap().1.parse().unwrap()).collect();
    assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);

    // The tuned file is a valid config.
    fs::write(tmp.path().join("tuned.cfg"), &cfg).unwrap();
    ok(&fgo(tmp.path(), &["eval", "--manifest", "m.txt", "--config", "tuned.cfg", "--out", "e"]));

    let trace = fs::read_to_string(t.join("trace.txt")).unwrap();
    let rows: Vec<Vec<f64>> = trace
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() > 5);
    assert!(rows.iter().all(|r| r[4] == 0.0 && (r[2] + r[3] - 1.0).abs() < 1e-9));
    let best = rows.iter().map(|r| r[5]).fold(f64::MIN, f64::max);
    let reported: f64 = fs::read_to_string(t.join("tuned_weights.txt"))
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix("# objective="))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(best, reported);
}
