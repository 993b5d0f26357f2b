use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use streaklite::dataset::{simulate_sample, DatasetConfig};
use streaklite::image::NoiseParams;
use streaklite::pgm::{encode_pgm, save_pgm};
use streaklite::rng;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streaklite")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Text without `#` comment lines.
fn body_of(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

fn body(path: &Path) -> String {
    body_of(&fs::read_to_string(path).unwrap())
}

#[test]
fn simulate_is_reproducible_from_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    ok(&["simulate", "--seed", "5", "--n", "3", "-o", p(&a)]);
    ok(&["simulate", "--seed", "5", "--n", "3", "-o", p(&b)]);
    ok(&["simulate", "--config", p(&a.join("manifest.txt")), "-o", p(&c)]);

    let manifest = fs::read_to_string(a.join("manifest.csv")).unwrap();
    let rows: Vec<&str> = manifest.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 3);
    for (i, row) in rows.iter().enumerate() {
        let name = format!("frame_{i:05}.pgm");
        let bytes = fs::read(a.join(&name)).unwrap();
        assert_eq!(bytes, fs::read(b.join(&name)).unwrap());
        assert_eq!(bytes, fs::read(c.join(&name)).unwrap());
        // the recorded per-frame seed regenerates the frame on its own
        let seed: u64 = row.split(',').nth(1).unwrap().parse().unwrap();
        let sample = simulate_sample(&DatasetConfig::default(), &mut rng::seeded(seed)).unwrap();
        assert_eq!(bytes, encode_pgm(&sample.frame));
    }
}

#[test]
fn training_is_deterministic_and_needs_its_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["simulate", "--seed", "2", "--n", "0", "--rows", "4000", "-o", p(&data)]);
    let dataset = data.join("dataset.csv");
    for name in ["m1", "m2"] {
        ok(&["train", p(&dataset), "--seed", "9", "--folds", "2", "-o", p(&dir.path().join(name))]);
    }
    let m1 = fs::read(dir.path().join("m1/model.txt")).unwrap();
    assert_eq!(m1, fs::read(dir.path().join("m2/model.txt")).unwrap());
    assert!(body(&dir.path().join("m1/folds.csv")).starts_with("fold,accuracy\n"));

    let missing = run(&["train", p(&dir.path().join("nope.csv")), "--seed", "9", "-o", p(dir.path())]);
    assert_eq!(code(&missing), 3);
}

#[test]
fn detect_reproduces_the_golden_output() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["detect", p(&fixture("streak.pgm")), "--model", p(&fixture("model.txt")), "-o", p(dir.path())]);
    assert_eq!(body(&dir.path().join("components.csv")), fs::read_to_string(fixture("streak_components.csv")).unwrap());
    assert_eq!(body(&dir.path().join("detections.csv")), fs::read_to_string(fixture("streak_detections.csv")).unwrap());
    let stamp = fs::read_to_string(dir.path().join("components.csv")).unwrap();
    assert!(stamp.starts_with("# streaklite "), "{stamp}");
}

#[test]
fn no_growth_emits_the_crude_components() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["detect", p(&fixture("streak.pgm")), "--model", p(&fixture("model.txt")), "--no-growth", "-o", p(dir.path())]);
    let frame = streaklite::pgm::load_pgm(fixture("streak.pgm")).unwrap();
    let model = streaklite::classifier::load_model(fixture("model.txt")).unwrap();
    let crude = streaklite::detector::crude_classify(&frame, &model, 35).unwrap();
    assert_eq!(body(&dir.path().join("components.csv")), body_of(&streaklite::detector::components_csv(&crude, None)));
    assert!(!dir.path().join("detections.csv").exists());
}

#[test]
fn pure_noise_exits_cleanly_with_nothing_found() {
    let dir = tempfile::tempdir().unwrap();
    let frame = dir.path().join("noise.pgm");
    save_pgm(&streaklite::image::gaussian_background(48, 48, NoiseParams::standard(3)).unwrap(), &frame).unwrap();
    let out = ok(&["detect", p(&frame), "--model", p(&fixture("model.txt")), "-o", p(dir.path())]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0 component(s)");
    assert_eq!(body(&dir.path().join("components.csv")).lines().count(), 1);
}

#[test]
fn config_and_io_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["simulate", "--n", "1", "-o", p(dir.path())])), 2, "missing seed");
    assert_eq!(code(&run(&["simulate", "--seed", "1", "-s", "colour=red", "-o", p(dir.path())])), 2);
    let bad = dir.path().join("bad.pgm");
    fs::write(&bad, b"P5\n4 4\n255\nxx").unwrap();
    assert_eq!(code(&run(&["detect", p(&bad), "--model", p(&fixture("model.txt")), "-o", p(dir.path())])), 3);
    assert_eq!(code(&run(&["detect", p(&fixture("streak.pgm")), "--model", p(&bad), "-o", p(dir.path())])), 3);
}

#[test]
fn sweep_bench_and_analyze_write_stamped_tables() {
    let dir = tempfile::tempdir().unwrap();
    let model = fixture("model.txt");
    let sweep = dir.path().join("sweep");
    ok(&["sweep", "--seed", "4", "--grid", "2,4", "--trials", "3", "--methods", "crude,grown,baseline", "--model", p(&model), "-o", p(&sweep)]);
    assert_eq!(body(&sweep.join("sweep.csv")).lines().count(), 1 + 2 * 3 * 3);
    let bench = dir.path().join("bench");
    ok(&["bench", "--seed", "4", "--width", "160", "--height", "120", "--reps", "2", "--model", p(&model), "-o", p(&bench)]);
    assert!(body(&bench.join("bench.csv")).starts_with("width,height,repetitions,proposed_s,baseline_s,ratio\n160,120,2,"));
    let analyze = dir.path().join("analyze");
    ok(&["analyze", "--seed", "4", "--samples", "2000", "-o", p(&analyze)]);
    for f in [sweep.join("sweep.csv"), bench.join("bench.csv"), analyze.join("densities.csv")] {
        assert!(fs::read_to_string(&f).unwrap().starts_with("# streaklite "), "{}", f.display());
    }
}
