#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use quant::{LabeledDataset, TimeSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn quant() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quant"))
}

pub fn run(args: &[&str]) -> Output {
    quant().args(args).output().expect("failed to launch quant")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Balanced two-class sample: class 0 is N(0, 1) noise, class 1 is N(0, 1.5^2).
pub fn scale_task(rng: &mut ChaCha8Rng, size: usize, len: usize) -> LabeledDataset {
    let narrow = Normal::new(0.0, 1.0).unwrap();
    let wide = Normal::new(0.0, 1.5).unwrap();
    let mut series = Vec::with_capacity(size);
    let mut labels = Vec::with_capacity(size);
    for i in 0..size {
        let class = i % 2;
        let dist = if class == 0 { narrow } else { wide };
        series.push(TimeSeries::new((0..len).map(|_| dist.sample(rng)).collect()).unwrap());
        labels.push(class);
    }
    LabeledDataset::new(series, labels, vec!["0".into(), "1".into()]).unwrap()
}

/// Balanced two-class sample of N(0, 1) noise plus a unit bump of width 8
/// centred at `centers[class]`.
pub fn bump_task(rng: &mut ChaCha8Rng, size: usize, len: usize, centers: [usize; 2]) -> LabeledDataset {
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut series = Vec::with_capacity(size);
    let mut labels = Vec::with_capacity(size);
    for i in 0..size {
        let class = i % 2;
        let c = centers[class];
        let values = (0..len)
            .map(|t| noise.sample(rng) + if (c - 4..c + 4).contains(&t) { 1.0 } else { 0.0 })
            .collect();
        series.push(TimeSeries::new(values).unwrap());
        labels.push(class);
    }
    LabeledDataset::new(series, labels, vec!["0".into(), "1".into()]).unwrap()
}

/// Small `classes`-class problem where class `c` has a level shift of `c`.
pub fn shifted_task(rng: &mut ChaCha8Rng, size: usize, len: usize, classes: usize) -> LabeledDataset {
    let mut series = Vec::with_capacity(size);
    let mut labels = Vec::with_capacity(size);
    for i in 0..size {
        let class = i % classes;
        let values = (0..len).map(|_| class as f64 + rng.gen_range(-1.0..1.0)).collect();
        series.push(TimeSeries::new(values).unwrap());
        labels.push(class);
    }
    let names = (0..classes).map(|c| format!("c{c}")).collect();
    LabeledDataset::new(series, labels, names).unwrap()
}

pub fn to_tsv(data: &LabeledDataset) -> String {
    let mut s = String::new();
    for (x, &y) in data.series().iter().zip(data.labels()) {
        s.push_str(&data.class_names()[y]);
        for v in x.values() {
            write!(s, "\t{v}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn write_tsv(path: &Path, data: &LabeledDataset) {
    fs::write(path, to_tsv(data)).unwrap();
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Results CSV with one row per (dataset, resample).
pub fn results_csv(rows: &[(String, usize, f64)]) -> String {
    let mut s = String::from("dataset,resample,accuracy,train_seconds,test_seconds\n");
    for (name, r, acc) in rows {
        writeln!(s, "{name},{r},{acc},,").unwrap();
    }
    s
}

/// Pulls `p = <value>` out of the compare report.
pub fn p_value(report: &str) -> f64 {
    let line = report.lines().find(|l| l.contains("p = ")).expect("no p-value line");
    let tail = &line[line.find("p = ").unwrap() + 4..];
    tail.split_whitespace().next().unwrap().parse().unwrap()
}
