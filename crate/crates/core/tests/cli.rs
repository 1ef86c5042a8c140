use std::path::Path;
use std::process::{Command, Output};

use fuselab::report::{parse_report, ParsedReport};

const SMALL: &[&str] = &["--per-class", "80", "--epochs", "4", "--hidden", "16,12"];

fn fuselab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fuselab")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = fuselab(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn experiment(dir: &Path, extra: &[&str]) -> ParsedReport {
    let mut args = vec!["experiment", "--out", p(dir)];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    ok(&args);
    parse_report(&std::fs::read_to_string(dir.join("experiment.report")).unwrap()).unwrap()
}

#[test]
fn experiment_report_has_one_row_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let r = experiment(dir.path(), &["--methods", "direct,permute,cca", "--models", "2", "--seeds", "0,1"]);
    assert_eq!(r.kind, "experiment");
    assert_eq!(r.get("rows"), Some("direct,permute,cca"));
    for key in ["row.direct", "row.permute", "row.cca", "row.base_models_avg", "row.ensemble"] {
        let v = r.get_f64(key).unwrap();
        assert!((0.0..=1.0).contains(&v), "{key} = {v}");
    }
    for m in ["direct", "permute", "cca"] {
        assert!(r.get_f64(&format!("method.{m}.barrier")).unwrap() >= 0.0);
        assert!(r.get_f64(&format!("method.{m}.merged_loss")).unwrap().is_finite());
    }
    assert!(r.get("method.cca.layer.1.cca_mean").is_some());
    let e0 = r.get_f64("method.direct.endpoint_accuracy.0").unwrap();
    let e1 = r.get_f64("method.direct.endpoint_accuracy.1").unwrap();
    assert!((r.get_f64("row.base_models_avg").unwrap() - (e0 + e1) / 2.0).abs() <= 1e-12);
}

#[test]
fn dirichlet_split_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let r = experiment(dir.path(), &["--methods", "cca", "--split", "dirichlet", "--alpha", "0.5,0.5"]);
    assert_eq!(r.get("split"), Some("dirichlet"));
    assert_eq!(r.get("alpha"), Some("0.5,0.5"));
    let sizes: Vec<usize> = r.get("part_sizes").unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(sizes.iter().sum::<usize>(), r.get("train_size").unwrap().parse::<usize>().unwrap());
}

#[test]
fn merge_then_eval_matches_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let r = experiment(d, &["--methods", "cca,permute", "--gamma", "1e-3x"]);
    for (method, row) in [("cca", "row.cca"), ("permute", "row.permute")] {
        let merged = d.join(format!("cli_{method}.model"));
        ok(&[
            "merge",
            p(&d.join("model_0.model")),
            p(&d.join("model_1.model")),
            "--method",
            method,
            "--gamma",
            "1e-3x",
            "--probes",
            p(&d.join("train.data")),
            "--out",
            p(&merged),
        ]);
        let pipeline = std::fs::read(d.join(format!("merged_{method}.model"))).unwrap();
        assert_eq!(std::fs::read(&merged).unwrap(), pipeline, "{method} merged model differs");
        let merge_report = parse_report(&std::fs::read_to_string(d.join(format!("cli_{method}.model.report"))).unwrap()).unwrap();
        assert_eq!(merge_report.get("method"), Some(method));

        let eval = parse_report(&ok(&["eval", p(&merged), "--data", p(&d.join("test.data"))])).unwrap();
        let acc = eval.get_f64("model.0.accuracy").unwrap();
        assert!((acc - r.get_f64(row).unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn experiment_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let extra = ["--seeds", "5,6,7", "--gamma-search", "1e-4x,1e-2x", "--repair"];
    experiment(a.path(), &extra);
    experiment(b.path(), &extra);
    let read = |d: &Path| ParsedReport::without_timestamp(&std::fs::read_to_string(d.join("experiment.report")).unwrap());
    assert_eq!(read(a.path()), read(b.path()));
    for f in ["model_2.model", "merged_cca.model", "train.data"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn single_threaded_run_matches_default() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    experiment(a.path(), &["--methods", "cca"]);
    let out = Command::new(env!("CARGO_BIN_EXE_fuselab"))
        .env("FUSELAB_THREADS", "1")
        .args(["experiment", "--methods", "cca", "--out", p(b.path())])
        .args(SMALL)
        .output()
        .unwrap();
    assert!(out.status.success());
    let read = |d: &Path| ParsedReport::without_timestamp(&std::fs::read_to_string(d.join("experiment.report")).unwrap());
    assert_eq!(read(a.path()), read(b.path()));

    let bad = Command::new(env!("CARGO_BIN_EXE_fuselab"))
        .env("FUSELAB_THREADS", "zero")
        .args(["experiment"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn step_by_step_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = parse_report(&ok(&["gen-data", "--per-class", "60", "--seed", "3", "--split", "eighty-twenty", "--out", p(d)])).unwrap();
    assert_eq!(gen.get("train_size"), Some("192"));
    assert_eq!(gen.get("part1_class_counts"), Some("38,38,10,10"));
    let train = p(&d.join("train.data")).to_string();
    for (i, seed) in ["1", "2", "3"].iter().enumerate() {
        let out = d.join(format!("m{i}.model"));
        ok(&["train", "--data", &train, "--seed", seed, "--epochs", "3", "--hidden", "10,8", "--out", p(&out)]);
    }
    let m: Vec<String> = (0..3).map(|i| p(&d.join(format!("m{i}.model"))).to_string()).collect();
    let test = p(&d.join("test.data")).to_string();
    let eval = parse_report(&ok(&["eval", &m[0], &m[1], &m[2], "--data", &test])).unwrap();
    assert!(eval.get_f64("ensemble_accuracy").is_ok());

    let barrier = parse_report(&ok(&["barrier", &m[0], &m[1], "--data", &test, "--method", "permute", "--grid", "5"])).unwrap();
    assert_eq!(barrier.get_f64("point.0.lambda").unwrap(), 0.0);
    assert_eq!(barrier.get_f64("point.4.lambda").unwrap(), 1.0);
    assert!(barrier.get_f64("barrier").unwrap() >= 0.0);

    let analysis = parse_report(&ok(&["analyze", &m[0], &m[1], &m[2], "--probes", &train])).unwrap();
    assert!(analysis.get_f64("mean.permute.relative_frobenius").unwrap().is_finite());
    assert!(analysis.get_f64("mean.cca.relative_frobenius").unwrap().is_finite());

    let merged = p(&d.join("merged.model")).to_string();
    let report = ok(&["merge", &m[0], &m[1], &m[2], "--method", "cca", "--reference", "1", "--repair", "--probes", &train, "--out", &merged]);
    let report = parse_report(&report).unwrap();
    assert_eq!(report.get("reference"), Some("1"));
    assert_eq!(report.get("repair"), Some("on"));
    assert!(report.get("layer.0.gamma_used").is_some());
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "methods=direct\nepochs=2\nper_class=50\nhidden=8,8\n").unwrap();
    let out = dir.path().join("out");
    ok(&["experiment", "--config", p(&cfg), "--epochs", "3", "--out", p(&out)]);
    let r = parse_report(&std::fs::read_to_string(out.join("experiment.report")).unwrap()).unwrap();
    assert_eq!(r.get("rows"), Some("direct"));
    assert_eq!(r.get("epochs"), Some("3"));
    assert_eq!(r.get("per_class"), Some("50"));
    assert_eq!(r.get("hidden"), Some("8,8"));
}

#[test]
fn errors_name_the_problem() {
    let out = fuselab(&["experiment", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));

    let out = fuselab(&["eval", "/nonexistent/x.model", "--data", "/nonexistent/y.data"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("load-data") && err.contains("/nonexistent/y.data"), "{err}");

    let out = fuselab(&["experiment", "--split", "disjoint", "--seeds", "0,1,2", "--per-class", "20", "--epochs", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage `data`"));
}
