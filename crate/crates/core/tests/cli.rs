//! The `noiser` binary: subcommands, files written and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use noiser::data::{synthetic_scene, Exposure};
use noiser::SrmParams;

fn noiser(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noiser")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = noiser(&["train", "--variant", "var3", "--iters", "12", "--width", "3", "--seed", "4", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let model = SrmParams::load(dir.path().join("model.nser")).unwrap();
    assert_eq!(model.hidden_width(), 3);
    let curves = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    let mut lines = curves.lines();
    assert_eq!(lines.next(), Some("iter,loss,l1,tv,grey_distance,color_constancy"));
    let iters: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(iters, ["0", "10", "12"]);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let cfg = manifest["config"]["train"].as_str().unwrap();
    assert!(cfg.contains("sigma=3") && cfg.contains("iterations=12") && cfg.contains("seed=4"), "{cfg}");
    assert!(dir.path().join("training_curves.csv").is_file());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# short run\niterations=5\nsigma=2.5\nhidden_width=2\nseed=9\n").unwrap();
    let out = noiser(&["train", "--config", path(&cfg), "--seed", "1", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    for want in ["iterations=5", "sigma=2.5", "hidden_width=2", "seed=1"] {
        assert!(manifest.contains(want), "{want} missing from {manifest}");
    }
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    for args in [
        vec!["train", "--variant", "xl", "--out", d],
        vec!["train", "--iters", "0", "--out", d],
        vec!["train", "--mode", "color:128,0,nope", "--out", d],
        vec!["frobnicate"],
        vec!["experiment", "prop9", "--out", d],
        vec!["predict-mapping", "128,0,0"],
    ] {
        assert_eq!(noiser(&args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn io_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.nser");
    fs::write(&bad, b"NSERxx").unwrap();
    let out = dir.path().join("o");
    assert_eq!(noiser(&["enhance", "--checkpoint", path(&dir.path().join("missing")), "x.png", "--out", path(&out)]).status.code(), Some(2));
    assert_eq!(noiser(&["enhance", "--checkpoint", path(&bad), "x.png", "--out", path(&out)]).status.code(), Some(2));
}

#[test]
fn enhance_files_and_dirs_with_timing() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("m.nser");
    SrmParams::new(0, 3).unwrap().save(&ckpt).unwrap();
    let input = dir.path().join("in");
    fs::create_dir(&input).unwrap();
    synthetic_scene(30, 20, Exposure::Dark, 0).save(input.join("a.png")).unwrap();
    synthetic_scene(30, 20, Exposure::Dark, 1).save(input.join("b.png")).unwrap();
    fs::write(input.join("c.png"), b"junk").unwrap();
    let single = dir.path().join("single.ppm");
    synthetic_scene(12, 12, Exposure::Bright, 2).save(&single).unwrap();
    let out = dir.path().join("out");
    let res = noiser(&["enhance", "--checkpoint", path(&ckpt), path(&input), path(&single), "--out", path(&out), "--time"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("a.png 30x20") && stdout.contains(" ms"), "{stdout}");
    assert!(stdout.contains("enhanced 3 images"), "{stdout}");
    for name in ["a.png", "b.png", "single.ppm"] {
        assert!(out.join(name).is_file(), "{name}");
    }
}

#[test]
fn eval_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("x.png");
    synthetic_scene(16, 16, Exposure::Dark, 3).save(&img).unwrap();
    let res = noiser(&["eval", path(&img), path(&img)]);
    assert!(res.status.success());
    let text = String::from_utf8_lossy(&res.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "file,psnr,ssim,grey_distance,color_constancy,mean_r,mean_g,mean_b");
    assert!(lines[1].starts_with("x.png,99.000000,1.000000,"));
    assert!(lines[2].starts_with("mean,99.000000"));
}

#[test]
fn predict_mapping_prints_table() {
    let res = noiser(&["predict-mapping", "red"]);
    assert!(res.status.success());
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.contains("trends R:up G:down B:down"), "{text}");
    let white = text.lines().find(|l| l.starts_with("white")).unwrap();
    assert!(white.contains("training (255,0,0)"), "{white}");
    let red = text.lines().find(|l| l.starts_with("red")).unwrap();
    assert!(red.contains("opposite (0,255,255)"), "{red}");
}

#[test]
fn short_experiment_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let res = noiser(&["experiment", "mapping-red", "--iters", "3", "--out", path(dir.path())]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(dir.path().join("manifest.json").is_file());
    assert!(dir.path().join("mapping.csv").is_file());
}
