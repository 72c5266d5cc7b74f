mod common;

use std::fs;
use std::path::{Path, PathBuf};

use quant::harness::Model;
use quant::MeanSubtraction;
use tempfile::TempDir;

use common::*;

struct Fixture {
    dir: TempDir,
    train: PathBuf,
    test: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut r = rng(42);
        let train = dir.path().join("Shift_TRAIN.tsv");
        let test = dir.path().join("Shift_TEST.tsv");
        write_tsv(&train, &shifted_task(&mut r, 45, 40, 3));
        write_tsv(&test, &shifted_task(&mut r, 30, 40, 3));
        Self { dir, train, test }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fit(f: &Fixture, model: &Path, extra: &[&str]) {
    let mut args = vec!["fit", "--train", s(&f.train), "--model", s(model), "--trees", "40"];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert!(out.status.success(), "{}", stderr(&out));
}

fn predictions(csv: &str) -> Vec<(String, Vec<f64>)> {
    csv.lines()
        .skip(1)
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            (
                fields[1].to_string(),
                fields[2..].iter().map(|p| p.parse().unwrap()).collect(),
            )
        })
        .collect()
}

#[test]
fn fit_then_predict_training_file_recovers_labels() {
    let f = Fixture::new();
    let model = f.path("m.qnt");
    fit(&f, &model, &[]);
    let out = run(&["predict", "--model", s(&model), "--data", s(&f.train)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "row,predicted,p_c0,p_c1,p_c2");
    let labels: Vec<String> = fs::read_to_string(&f.train)
        .unwrap()
        .lines()
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect();
    let preds = predictions(&text);
    assert_eq!(preds.len(), labels.len());
    for ((label, proba), truth) in preds.iter().zip(&labels) {
        assert_eq!(label, truth);
        assert!((proba.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn predict_to_file_matches_stdout() {
    let f = Fixture::new();
    let model = f.path("m.qnt");
    fit(&f, &model, &[]);
    let csv = f.path("pred.csv");
    let a = run(&["predict", "--model", s(&model), "--data", s(&f.test), "--out", s(&csv)]);
    assert!(a.status.success());
    let b = run(&["predict", "--model", s(&model), "--data", s(&f.test), "--threads", "3"]);
    assert_eq!(fs::read_to_string(&csv).unwrap(), stdout(&b));
}

#[test]
fn model_files_are_byte_identical_for_same_seed() {
    let f = Fixture::new();
    let (a, b, c) = (f.path("a.qnt"), f.path("b.qnt"), f.path("c.qnt"));
    fit(&f, &a, &["--seed", "5", "--threads", "1"]);
    fit(&f, &b, &["--seed", "5", "--threads", "4"]);
    fit(&f, &c, &["--seed", "6"]);
    let bytes = fs::read(&a).unwrap();
    assert_eq!(&bytes[..4], b"QNT1");
    assert_eq!(bytes, fs::read(&b).unwrap());
    assert_ne!(bytes, fs::read(&c).unwrap());
}

#[test]
fn preset_and_flags_reach_the_model() {
    let f = Fixture::new();
    let fast = f.path("fast.qnt");
    fit(&f, &fast, &["--preset", "fast"]);
    let t = *Model::load(&fast).unwrap().transform().config();
    assert_eq!((t.depth, t.divisor), (5, 8));

    let custom = f.path("custom.qnt");
    fit(
        &f,
        &custom,
        &[
            "--preset",
            "fast",
            "--div",
            "2",
            "--reps",
            "raw,fft",
            "--no-mean-subtract",
            "--split-frac",
            "sqrt",
        ],
    );
    let m = Model::load(&custom).unwrap();
    let t = m.transform().config();
    assert_eq!((t.depth, t.divisor), (5, 2));
    assert_eq!(t.representations.to_string(), "raw,fft");
    assert_eq!(t.mean_subtraction, MeanSubtraction::None);
    assert_eq!(m.forest().config().features_per_split.to_string(), "sqrt");
    assert_eq!(m.forest().trees().len(), 40);
}

#[test]
fn conflicting_mean_flags_are_rejected() {
    let f = Fixture::new();
    let out = run(&[
        "fit",
        "--train",
        s(&f.train),
        "--model",
        s(&f.path("m.qnt")),
        "--no-mean-subtract",
        "--all-mean-subtract",
    ]);
    assert!(!out.status.success());
}

#[test]
fn empty_data_file_is_an_error() {
    let f = Fixture::new();
    let empty = f.path("empty.tsv");
    fs::write(&empty, "").unwrap();
    let out = run(&["fit", "--train", s(&empty), "--model", s(&f.path("m.qnt"))]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.starts_with("error:"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
}

#[test]
fn invalid_flag_values_are_errors() {
    let f = Fixture::new();
    for bad in [
        ["--div", "0"],
        ["--reps", "raw,wavelet"],
        ["--split-frac", "1.5"],
        ["--smooth-window", "4"],
    ] {
        let out = run(&[
            "fit",
            "--train",
            s(&f.train),
            "--model",
            s(&f.path("m.qnt")),
            bad[0],
            bad[1],
        ]);
        assert!(!out.status.success(), "{bad:?} accepted");
        assert!(stderr(&out).starts_with("error:"), "{bad:?}: {}", stderr(&out));
    }
}

#[test]
fn predict_rejects_wrong_length() {
    let f = Fixture::new();
    let model = f.path("m.qnt");
    fit(&f, &model, &[]);
    let short = f.path("short.tsv");
    fs::write(&short, "c0\t1\t2\t3\n").unwrap();
    let out = run(&["predict", "--model", s(&model), "--data", s(&short)]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("length"), "{}", stderr(&out));
}

#[test]
fn corrupted_and_future_models_are_rejected() {
    let f = Fixture::new();
    let model = f.path("m.qnt");
    fit(&f, &model, &[]);
    let bytes = fs::read(&model).unwrap();

    let mut flipped = bytes.clone();
    flipped[40] ^= 0x10;
    let bad = f.path("bad.qnt");
    fs::write(&bad, &flipped).unwrap();
    let out = run(&["predict", "--model", s(&bad), "--data", s(&f.test)]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error:"));
    assert!(stderr(&out).contains("checksum"), "{}", stderr(&out));

    let mut future = bytes.clone();
    future[4..8].copy_from_slice(&99u32.to_le_bytes());
    let newer = f.path("newer.qnt");
    fs::write(&newer, &future).unwrap();
    let out = run(&["predict", "--model", s(&newer), "--data", s(&f.test)]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("version"), "{}", stderr(&out));

    let cut = f.path("cut.qnt");
    fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
    let out = run(&["predict", "--model", s(&cut), "--data", s(&f.test)]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("truncated"), "{}", stderr(&out));
}

#[test]
fn eval_single_resample_and_determinism() {
    let f = Fixture::new();
    let args = |out: &Path| {
        vec![
            "eval".to_string(),
            "--train".into(),
            s(&f.train).into(),
            "--test".into(),
            s(&f.test).into(),
            "--trees".into(),
            "30".into(),
            "--no-timings".into(),
            "--out".into(),
            s(out).into(),
        ]
    };
    let (a, b) = (f.path("a.csv"), f.path("b.csv"));
    for p in [&a, &b] {
        let out = quant().args(args(p)).output().unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(stderr(&out).contains("Shift: accuracy"));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "dataset,resample,accuracy,train_seconds,test_seconds");
    assert_eq!(lines.len(), 2);
    assert!(
        lines[1].starts_with("Shift,0,") && lines[1].ends_with(",,"),
        "{}",
        lines[1]
    );
}

#[test]
fn eval_records_timings_and_verbose_phases() {
    let f = Fixture::new();
    let out = run(&[
        "eval",
        "--train",
        s(&f.train),
        "--test",
        s(&f.test),
        "--resamples",
        "2",
        "--trees",
        "20",
        "--name",
        "Renamed",
        "--verbose",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let err = stderr(&out);
    assert!(err.contains("transform") && err.contains("classifier"), "{err}");
    let rows = quant::dataset::read_results(stdout(&out).as_bytes()).unwrap();
    assert_eq!(rows.len(), 2);
    for (r, row) in rows.iter().enumerate() {
        assert_eq!(row.dataset, "Renamed");
        assert_eq!(row.resample, r);
        assert!(row.train_seconds.unwrap() > 0.0 && row.test_seconds.unwrap() > 0.0);
    }
}

#[test]
fn sweep_writes_one_row_per_dataset_value_fold() {
    let f = Fixture::new();
    let out = run(&[
        "sweep",
        "--axis",
        "div",
        "--values",
        "1,4,8",
        "--folds",
        "3",
        "--trees",
        "10",
        s(&f.train),
        s(&f.test),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "dataset,axis,value,fold,accuracy,seconds");
    assert_eq!(lines.len(), 1 + 2 * 3 * 3);
    assert!(lines.iter().any(|l| l.starts_with("Shift,divisor,8,2,")), "{text}");

    let out = run(&["sweep", "--axis", "depth", "--values", "0,3,x", s(&f.train)]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains('0') && err.contains('x'), "{err}");
}

#[test]
fn sweep_over_representation_sets() {
    let f = Fixture::new();
    let out = run(&[
        "sweep",
        "--axis",
        "representations",
        "--values",
        "raw,raw+fft",
        "--folds",
        "2",
        "--trees",
        "5",
        s(&f.train),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1 + 2 * 2);
    assert!(text.contains(",raw+fft,"), "{text}");
}

fn write_results(dir: &Path, name: &str, rows: &[(String, usize, f64)]) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, results_csv(rows)).unwrap();
    p
}

#[test]
fn compare_identical_swapped_and_mismatched() {
    let f = Fixture::new();
    let base: Vec<(String, usize, f64)> = (0..6)
        .flat_map(|d| (0..3).map(move |r| (format!("D{d}"), r, 0.6 + 0.05 * d as f64 + 0.01 * r as f64)))
        .collect();
    let a = write_results(f.dir.path(), "a.csv", &base);
    let out = run(&["compare", s(&a), s(&a)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report = stdout(&out);
    assert!(report.contains("win/draw/loss (A vs B): 0/6/0"), "{report}");
    assert_eq!(p_value(&report), 1.0);

    let other: Vec<(String, usize, f64)> = base
        .iter()
        .enumerate()
        .map(|(i, (n, r, acc))| (n.clone(), *r, acc + [0.02, -0.01, 0.03][i % 3]))
        .collect();
    let b = write_results(f.dir.path(), "b.csv", &other);
    let ab = stdout(&run(&["compare", s(&a), s(&b)]));
    let ba = stdout(&run(&["compare", s(&b), s(&a)]));
    assert_eq!(p_value(&ab), p_value(&ba));
    let wdl = |r: &str| {
        r.lines()
            .find(|l| l.starts_with("win/draw/loss"))
            .unwrap()
            .rsplit(' ')
            .next()
            .unwrap()
            .to_string()
    };
    let (w, d, l) = {
        let parts: Vec<String> = wdl(&ab).split('/').map(str::to_string).collect();
        (parts[0].clone(), parts[1].clone(), parts[2].clone())
    };
    assert_eq!(wdl(&ba), format!("{l}/{d}/{w}"));

    let missing = write_results(f.dir.path(), "missing.csv", &base[..base.len() - 1]);
    let out = run(&["compare", s(&a), s(&missing)]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("D5/2"), "{}", stderr(&out));
}

#[test]
fn eval_archive_restricted_to_named_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(3);
    for name in ["Alpha", "Beta"] {
        let sub = dir.path().join(name);
        fs::create_dir(&sub).unwrap();
        write_tsv(&sub.join(format!("{name}_TRAIN.tsv")), &shifted_task(&mut r, 20, 16, 2));
        write_tsv(&sub.join(format!("{name}_TEST.tsv")), &shifted_task(&mut r, 20, 16, 2));
    }
    let out = run(&[
        "eval",
        "--archive",
        s(dir.path()),
        "--datasets",
        "Beta",
        "--trees",
        "10",
        "--no-timings",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("Beta,0,"));

    let out = run(&["eval", "--archive", s(dir.path()), "--datasets", "Gamma"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("Gamma"));
}
