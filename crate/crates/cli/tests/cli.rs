mod common;

use clap::Parser;
use common::{annotation_json, cli, snapshot};
use footprint_cli::{parse_invocation, resolve, Cli, CliError, StageConfig};
use footprint_core::formats::{decode_pmap, encode_pgm, encode_pgm_samples, encode_pmap};
use footprint_core::raster::{BinaryMask, ProbMap};
use footprint_core::targets::PolygonRing;
use std::path::Path;
use std::process::Command;

fn inv(args: &[&str]) -> Result<footprint_cli::Invocation, CliError> {
    parse_invocation(std::iter::once("footprint").chain(args.iter().copied()))
}

fn with_config(args: &[&str], doc: &str) -> Result<footprint_cli::Invocation, CliError> {
    resolve(
        Cli::try_parse_from(std::iter::once("footprint").chain(args.iter().copied())).unwrap(),
        Some(doc),
    )
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_footprint"))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn extract_defaults() {
    let i = inv(&[
        "extract",
        "--mode",
        "multi",
        "--input",
        "a.pmap",
        "--out-dir",
        "o",
    ])
    .unwrap();
    let StageConfig::Extract(c) = i.stage else {
        panic!()
    };
    assert_eq!(c.params.threshold, 0.3);
    assert_eq!(c.params.min_area, 140);
    assert!(c.params.use_spacing);
}

#[test]
fn out_of_range_threshold_is_usage_error() {
    let e = inv(&[
        "extract",
        "--threshold",
        "1.5",
        "--input",
        "a",
        "--out-dir",
        "o",
    ])
    .unwrap_err();
    assert_eq!(e.exit_code(), 1);
    assert!(e.to_string().contains("1.5"));
    let e = inv(&[
        "fuse",
        "--threshold",
        "-0.1",
        "--input",
        "a",
        "--output",
        "o",
    ])
    .unwrap_err();
    assert_eq!(e.exit_code(), 1);
    assert_eq!(
        inv(&["eval", "--iou", "0", "--pred", "a", "--gt", "b", "--report", "r"])
            .unwrap_err()
            .exit_code(),
        1
    );
    assert_eq!(
        inv(&["split", "--k", "1", "--index", "i"])
            .unwrap_err()
            .exit_code(),
        1
    );
}

#[test]
fn flags_override_config_override_defaults() {
    let i = with_config(&["split", "--index", "i.json", "--k", "3"], r#"{"k": 5}"#).unwrap();
    let StageConfig::Split(c) = i.stage else {
        panic!()
    };
    assert_eq!(c.params.k, 3);
    let i = with_config(&["split", "--index", "i.json"], r#"{"k": 4}"#).unwrap();
    let StageConfig::Split(c) = i.stage else {
        panic!()
    };
    assert_eq!(c.params.k, 4);
    let i = with_config(
        &["split"],
        r#"{"index": "i.json", "stage": "split", "threads": 2}"#,
    )
    .unwrap();
    assert_eq!(i.threads, Some(2));
    let StageConfig::Split(c) = i.stage else {
        panic!()
    };
    assert_eq!(c.params.k, 5);
}

#[test]
fn config_errors() {
    assert!(with_config(&["split", "--index", "i"], r#"{"kk": 5}"#).is_err());
    assert!(with_config(&["split", "--index", "i"], r#"{"stage": "fuse"}"#).is_err());
    assert!(with_config(&["split", "--index", "i"], r#"[1]"#).is_err());
    assert!(with_config(&["split", "--index", "i"], r#"{"k": "five"}"#).is_err());
    assert!(inv(&["split", "--index", "i", "--bogus"]).is_err());
    assert_eq!(
        inv(&["--config", "/nonexistent/c.json", "split"])
            .unwrap_err()
            .exit_code(),
        2
    );
}

#[test]
fn conflicting_flags() {
    let base = [
        "cutmix",
        "--image-a",
        "a",
        "--targets-a",
        "b",
        "--image-b",
        "c",
        "--targets-b",
        "d",
    ];
    let mut both = base.to_vec();
    both.extend([
        "--out-image",
        "x",
        "--out-targets",
        "y",
        "--box",
        "0,0,1,1",
        "--seed",
        "3",
    ]);
    assert_eq!(inv(&both).unwrap_err().exit_code(), 1);
    let mut neither = base.to_vec();
    neither.extend(["--out-image", "x", "--out-targets", "y"]);
    assert!(inv(&neither).is_err());
    assert!(inv(&["lr", "--schedule", "onecycle", "--recursive"]).is_err());
}

#[test]
fn config_hash_tracks_params_only() {
    let hash = |args: &[&str]| {
        let s = inv(args).unwrap().stage;
        footprint_cli::io::config_hash(s.name(), &s.params())
    };
    let a = hash(&["extract", "--input", "a.pmap", "--out-dir", "o1"]);
    assert_eq!(
        a,
        hash(&[
            "--threads",
            "3",
            "extract",
            "--input",
            "b.pmap",
            "--out-dir",
            "o2"
        ])
    );
    assert_eq!(
        a,
        hash(&[
            "extract",
            "--input",
            "a.pmap",
            "--out-dir",
            "o1",
            "--threshold",
            "0.3"
        ])
    );
    assert_ne!(
        a,
        hash(&[
            "extract",
            "--input",
            "a.pmap",
            "--out-dir",
            "o1",
            "--threshold",
            "0.31"
        ])
    );
    assert_ne!(
        a,
        hash(&[
            "extract",
            "--input",
            "a.pmap",
            "--out-dir",
            "o1",
            "--min-area",
            "139"
        ])
    );
    assert_ne!(
        a,
        hash(&[
            "extract",
            "--input",
            "a.pmap",
            "--out-dir",
            "o1",
            "--no-spacing"
        ])
    );
    assert_ne!(
        a,
        hash(&[
            "extract",
            "--input",
            "a.pmap",
            "--out-dir",
            "o1",
            "--mode",
            "single"
        ])
    );
}

#[test]
fn help_and_exit_codes() {
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(
        bin().arg("--version").output().unwrap().status.code(),
        Some(0)
    );
    assert_eq!(bin().arg("nope").output().unwrap().status.code(), Some(1));
    let out = bin()
        .args([
            "extract",
            "--threshold",
            "1.5",
            "--input",
            "x",
            "--out-dir",
            "y",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside [0, 1]"));
}

#[test]
fn missing_input_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let good = dir.path().join("good.pmap");
    std::fs::write(&good, encode_pmap(&ProbMap::zeros(2, 4, 4).unwrap())).unwrap();
    let status = bin()
        .args([
            "extract",
            "--input",
            p(&good),
            "--input",
            p(&dir.path().join("missing.pmap")),
            "--out-dir",
            p(&out),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn eval_on_published_counts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("counts.csv");
    std::fs::write(
        &csv,
        "image_id,tp,fp,fn\ntile_a,400,250,600\ntile_b,311,150,409\n",
    )
    .unwrap();
    let report = dir.path().join("report.json");
    cli(&["eval", "--counts", p(&csv), "--report", p(&report)]).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(
        v["global"],
        serde_json::json!({"tp": 711, "fp": 400, "fn": 1009})
    );
    assert!((v["f1_percent"].as_f64().unwrap() - 50.23).abs() <= 0.02);
    assert_eq!(v["per_image"].as_array().unwrap().len(), 2);
    let m: serde_json::Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("report.json.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(m["inputs"][0]["name"], "counts.csv");
    assert_eq!(m["outputs"][0]["name"], "report.json");
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

fn two_squares(dir: &Path) -> std::path::PathBuf {
    let ann = dir.join("ann.json");
    let rings = vec![
        PolygonRing::rect(10.0, 10.0, 30.0, 30.0),
        PolygonRing::rect(30.0, 10.0, 50.0, 30.0),
    ];
    std::fs::write(&ann, annotation_json(&[("pair".into(), rings)])).unwrap();
    ann
}

#[test]
fn single_vs_multi_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let ann = two_squares(dir.path());
    let t = dir.path().join("t");
    cli(&[
        "targets",
        "--annotations",
        p(&ann),
        "--height",
        "40",
        "--width",
        "60",
        "--out-dir",
        p(&t),
    ])
    .unwrap();
    let building = t.join("pair.building.pgm");
    let out = cli(&[
        "extract",
        "--mode",
        "single",
        "--input",
        p(&building),
        "--out-dir",
        p(&dir.path().join("s")),
    ])
    .unwrap();
    assert_eq!(out.stdout, "pair: 1 instance(s)\n");
    let out = cli(&[
        "extract",
        "--input",
        p(&building),
        "--out-dir",
        p(&dir.path().join("m")),
    ])
    .unwrap();
    assert_eq!(out.stdout, "pair: 2 instance(s)\n");
    let gj: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("m/pair.geojson")).unwrap()).unwrap();
    assert_eq!(gj["features"].as_array().unwrap().len(), 2);
    assert_eq!(gj["features"][0]["properties"]["area_px"], 400);
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let ann = two_squares(dir.path());
    let mut snaps = Vec::new();
    for run in 0..2 {
        let root = dir.path().join(format!("run{run}"));
        cli(&[
            "targets",
            "--annotations",
            p(&ann),
            "--height",
            "40",
            "--width",
            "60",
            "--format",
            "pmap",
            "--out-dir",
            p(&root.join("t")),
        ])
        .unwrap();
        cli(&[
            "extract",
            "--input",
            p(&root.join("t/pair.pmap")),
            "--out-dir",
            p(&root.join("e")),
        ])
        .unwrap();
        cli(&[
            "eval",
            "--pred",
            p(&root.join("e/pair.geojson")),
            "--gt",
            p(&root.join("e/pair.imap")),
            "--colormap",
            p(&root.join("v/c.ppm")),
            "--csv",
            p(&root.join("v/c.csv")),
            "--report",
            p(&root.join("v/r.json")),
        ])
        .unwrap();
        snaps.push(snapshot(&root));
    }
    assert_eq!(snaps[0], snaps[1]);
    assert!(snaps[0].contains_key("v/c.ppm"));
}

#[test]
fn tile_then_split() {
    let dir = tempfile::tempdir().unwrap();
    let (h, w) = (40, 64);
    let samples: Vec<u8> = (0..h * w)
        .map(|i| if (i / w) < 16 && (i % w) < 16 { 0 } else { 9 })
        .collect();
    let src = dir.path().join("src.pgm");
    std::fs::write(&src, encode_pgm_samples(h, w, &samples)).unwrap();
    let index = dir.path().join("index.json");
    let out = cli(&[
        "tile",
        "--input",
        p(&src),
        "--size",
        "16",
        "--index",
        p(&index),
        "--out-dir",
        p(&dir.path().join("tiles")),
    ])
    .unwrap();
    assert_eq!(out.stdout, "8 tile(s), 1 blank\n");
    assert!(dir.path().join("tiles/tile_000001.pgm").exists());
    assert!(!dir.path().join("tiles/tile_000000.pgm").exists());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"k": 5}"#).unwrap();
    let out = cli(&[
        "--config",
        p(&cfg),
        "split",
        "--index",
        p(&index),
        "--k",
        "3",
    ])
    .unwrap();
    assert_eq!(out.stdout, "fold sizes [3, 2, 2]\n");
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&index).unwrap()).unwrap();
    assert_eq!(
        v[0],
        serde_json::json!({"tile_id": 0, "row": 0, "col": 0, "blank": true, "fold": null})
    );
    assert_eq!(v[1]["fold"], 0);
    assert_eq!(v[7]["fold"], 0);
}

#[test]
fn tile_subdivide_remaps_annotations() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src.pgm");
    std::fs::write(&src, encode_pgm_samples(1024, 1024, &vec![5; 1024 * 1024])).unwrap();
    let ann = dir.path().join("ann.json");
    std::fs::write(
        &ann,
        annotation_json(&[(
            "s".into(),
            vec![PolygonRing::rect(600.0, 600.0, 620.0, 620.0)],
        )]),
    )
    .unwrap();
    let crops = dir.path().join("crops");
    cli(&[
        "tile",
        "--input",
        p(&src),
        "--index",
        p(&dir.path().join("i.json")),
        "--out-dir",
        p(&crops),
        "--subdivide",
        "--annotations",
        p(&ann),
    ])
    .unwrap();
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(crops.join("crops.json")).unwrap()).unwrap();
    assert_eq!(
        v["tile_000000_q3"][0]["points"],
        serde_json::json!([[88.0, 88.0], [108.0, 88.0], [108.0, 108.0], [88.0, 108.0]])
    );
    for q in 0..3 {
        assert_eq!(v[format!("tile_000000_q{q}")], serde_json::json!([]));
    }
    assert!(crops.join("tile_000000_q2.pgm").exists());
}

#[test]
fn lossmath_and_lr() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("p.pmap");
    let gt = dir.path().join("g.pgm");
    std::fs::write(
        &pred,
        encode_pmap(&ProbMap::from_vec(1, 10, 10, vec![0.5; 100]).unwrap()),
    )
    .unwrap();
    std::fs::write(
        &gt,
        encode_pgm(&BinaryMask::from_vec(10, 10, vec![1; 100]).unwrap()),
    )
    .unwrap();
    let run = |op: &str| {
        cli(&["lossmath", op, "--pred", p(&pred), "--gt", p(&gt)])
            .unwrap()
            .stdout
    };
    assert_eq!(run("bce"), "0.693147181\n");
    assert_eq!(run("dice"), "0.333333111\n");
    assert_eq!(run("channel"), "0.513240146\n");
    assert_eq!(
        cli(&["lossmath", "total", "--losses", "0.6,0.3,0.3"])
            .unwrap()
            .stdout,
        "0.36\n"
    );
    let gc = cli(&["lossmath", "gradcheck", "--seed", "7", "--cases", "3"])
        .unwrap()
        .stdout;
    assert!(gc.trim().parse::<f64>().unwrap() <= 1e-4);
    assert!(inv(&["lossmath", "gradcheck"]).is_err());

    let csv = cli(&["lr"]).unwrap().stdout;
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 102);
    assert_eq!(
        (lines[0], lines[1], lines[41], lines[101]),
        ("epoch,lr", "0,5e-6", "40,1e-4", "100,5e-9")
    );
    let poly = cli(&["lr", "--schedule", "poly"]).unwrap().stdout;
    assert!(poly.contains("\n0,1e-3\n") && poly.ends_with("\n100,0e0\n"));
    let out = dir.path().join("lr.csv");
    cli(&[
        "lr",
        "--schedule",
        "poly",
        "--recursive",
        "--output",
        p(&out),
    ])
    .unwrap();
    assert!(dir.path().join("lr.csv.manifest.json").exists());
}

#[test]
fn cutmix_box_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, v: f32, c: usize| {
        let path = dir.path().join(name);
        std::fs::write(
            &path,
            encode_pmap(&ProbMap::from_vec(c, 8, 8, vec![v; c * 64]).unwrap()),
        )
        .unwrap();
        path
    };
    let (ia, ta, ib, tb) = (
        write("ia", 0.25, 1),
        write("ta", 0.0, 3),
        write("ib", 0.75, 1),
        write("tb", 1.0, 3),
    );
    let (oi, ot) = (dir.path().join("oi.pmap"), dir.path().join("ot.pmap"));
    let base = [
        "cutmix",
        "--image-a",
        p(&ia),
        "--targets-a",
        p(&ta),
        "--image-b",
        p(&ib),
        "--targets-b",
        p(&tb),
        "--out-image",
        p(&oi),
        "--out-targets",
        p(&ot),
    ];
    let mut args = base.to_vec();
    args.extend(["--box", "2,2,4,4"]);
    cli(&args).unwrap();
    let img = decode_pmap(&std::fs::read(&oi).unwrap()).unwrap();
    let tgt = decode_pmap(&std::fs::read(&ot).unwrap()).unwrap();
    assert_eq!((img.get(0, 0, 0), img.get(0, 3, 3)), (0.25, 0.75));
    for c in 0..3 {
        assert_eq!((tgt.get(c, 0, 0), tgt.get(c, 3, 3)), (0.0, 1.0));
    }
    let mut seeded = base.to_vec();
    seeded.extend(["--seed", "11"]);
    let a = cli(&seeded).unwrap().stdout;
    assert_eq!(a, cli(&seeded).unwrap().stdout);
    let b: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert!(b["row"].as_u64().unwrap() + b["height"].as_u64().unwrap() <= 8);
}
