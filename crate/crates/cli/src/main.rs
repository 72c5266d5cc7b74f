use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use quant::dataset::{self, ResultRow};
use quant::harness::{self, EvalOptions, Model, SweepAxis, SweepSpec};
use quant::{MeanSubtraction, RepresentationMask, SplitFeatures, TrainConfig, TransformConfig};

#[derive(Parser)]
#[command(
    name = "quant",
    version,
    about = "Quantile interval features + extremely randomized trees for time series classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a TSV dataset and write it to disk.
    Fit {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Predict labels and class probabilities for a TSV dataset.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Predictions CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Fit and score over resamples of train/test splits.
    Eval {
        #[arg(long, required_unless_present = "archive", requires = "test")]
        train: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        /// Directory of UCR-style dataset folders (NAME/NAME_TRAIN.tsv, NAME/NAME_TEST.tsv).
        #[arg(long, conflicts_with_all = ["train", "test"])]
        archive: Option<PathBuf>,
        /// Restrict --archive to these datasets.
        #[arg(long, value_delimiter = ',')]
        datasets: Vec<String>,
        /// Dataset name for --train/--test (default: derived from the file name).
        #[arg(long)]
        name: Option<String>,
        #[arg(long, default_value_t = 1)]
        resamples: usize,
        /// Results CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave the timing columns empty so the CSV is reproducible byte for byte.
        #[arg(long)]
        no_timings: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Sensitivity sweep of one parameter under stratified k-fold CV.
    Sweep {
        #[arg(long)]
        axis: String,
        /// Comma-separated values; representation sets join names with `+`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Long-form CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dataset TSV files.
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Compare two results CSVs (A vs B).
    Compare { a: PathBuf, b: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Default,
    Fast,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, value_enum, default_value = "default")]
    preset: Preset,
    #[arg(long)]
    depth: Option<usize>,
    /// Quantiles per interval = interval length / DIV.
    #[arg(long)]
    div: Option<usize>,
    #[arg(long)]
    trees: Option<usize>,
    /// `sqrt` or a fraction of the features in (0, 1].
    #[arg(long)]
    split_frac: Option<String>,
    /// Comma list of raw, diff1, diff2, fft.
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    smooth_window: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, conflicts_with = "all_mean_subtract")]
    no_mean_subtract: bool,
    #[arg(long)]
    all_mean_subtract: bool,
    /// Log progress and per-phase timings to stderr.
    #[arg(long)]
    verbose: bool,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<(TransformConfig, TrainConfig)> {
        let mut transform = match self.preset {
            Preset::Default => TransformConfig::default(),
            Preset::Fast => TransformConfig::fast(),
        };
        if let Some(d) = self.depth {
            transform.depth = d;
        }
        if let Some(v) = self.div {
            transform.divisor = v;
        }
        if let Some(w) = self.smooth_window {
            transform.smooth_window = w;
        }
        if let Some(reps) = &self.reps {
            transform.representations = reps.parse::<RepresentationMask>()?;
        }
        if self.no_mean_subtract {
            transform.mean_subtraction = MeanSubtraction::None;
        } else if self.all_mean_subtract {
            transform.mean_subtraction = MeanSubtraction::All;
        }
        transform.validate()?;

        let mut train = TrainConfig {
            seed: self.seed,
            ..TrainConfig::default()
        };
        if let Some(n) = self.trees {
            train.num_trees = n;
        }
        if let Some(s) = &self.split_frac {
            train.features_per_split = s.parse::<SplitFeatures>()?;
        }
        train.validate()?;
        Ok((transform, train))
    }
}

fn init_logging(verbose: bool) {
    let level = if verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `Coffee_TRAIN.tsv` -> `Coffee`.
fn dataset_name(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    stem.strip_suffix("_TRAIN")
        .or_else(|| stem.strip_suffix("_TEST"))
        .unwrap_or(stem)
        .to_string()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_fit(train: &Path, model_path: &Path, config: &ConfigArgs) -> Result<()> {
    let (transform, train_config) = config.resolve()?;
    let data = dataset::load_tsv(train)?;
    let (model, timings) = harness::with_threads(config.threads, || Model::fit(&data, &transform, &train_config))??;
    model
        .save(model_path)
        .with_context(|| format!("cannot write {}", model_path.display()))?;
    println!(
        "fitted {} examples of length {} ({} classes), {} features",
        data.len(),
        data.series_len(),
        data.num_classes(),
        model.transform().num_features()
    );
    println!(
        "transform {:.3}s, classifier {:.3}s",
        timings.transform_seconds, timings.classifier_seconds
    );
    Ok(())
}

fn cmd_predict(model_path: &Path, data_path: &Path, out: Option<&Path>, threads: Option<usize>) -> Result<()> {
    let model = Model::load(model_path).with_context(|| format!("cannot load model {}", model_path.display()))?;
    let raw = dataset::read_tsv(data_path)?;
    let n = raw.series[0].len();
    if n != model.transform().series_len() {
        bail!(
            "data series have length {n} but the model was fitted to length {}",
            model.transform().series_len()
        );
    }
    let proba = harness::with_threads(threads, || model.predict_proba(&raw.series))??;
    let mut w = output(out)?;
    write!(w, "row,predicted")?;
    for name in model.class_names() {
        write!(w, ",{}", csv_field(&format!("p_{name}")))?;
    }
    writeln!(w)?;
    for (i, row) in proba.iter().enumerate() {
        let label = &model.class_names()[quant::forest::argmax(row)];
        write!(w, "{i},{}", csv_field(label))?;
        for p in row {
            write!(w, ",{p}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn archive_pairs(dir: &Path, only: &[String]) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .with_context(|| format!("cannot read archive {}", dir.display()))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|name| only.is_empty() || only.contains(name))
        .collect();
    names.sort();
    if let Some(missing) = only.iter().find(|n| !names.contains(n)) {
        bail!("dataset {missing} not found in {}", dir.display());
    }
    names
        .into_iter()
        .map(|name| {
            let train = dir.join(&name).join(format!("{name}_TRAIN.tsv"));
            let test = dir.join(&name).join(format!("{name}_TEST.tsv"));
            if !train.is_file() || !test.is_file() {
                bail!(
                    "{}: expected {name}_TRAIN.tsv and {name}_TEST.tsv",
                    dir.join(&name).display()
                );
            }
            Ok((name, train, test))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    train: Option<&Path>,
    test: Option<&Path>,
    archive: Option<&Path>,
    only: &[String],
    name: Option<&str>,
    resamples: usize,
    out: Option<&Path>,
    no_timings: bool,
    config: &ConfigArgs,
) -> Result<()> {
    let (transform, train_config) = config.resolve()?;
    if resamples == 0 {
        bail!("--resamples must be at least 1");
    }
    let pairs = match (archive, train, test) {
        (Some(dir), _, _) => archive_pairs(dir, only)?,
        (None, Some(tr), Some(te)) => {
            vec![(
                name.map_or_else(|| dataset_name(tr), str::to_string),
                tr.to_path_buf(),
                te.to_path_buf(),
            )]
        }
        _ => bail!("give either --train and --test, or --archive"),
    };
    let opts = EvalOptions {
        resamples,
        seed: config.seed,
        transform,
        train: train_config,
        record_timings: !no_timings,
    };

    let started = Instant::now();
    let mut all_rows: Vec<ResultRow> = Vec::new();
    for (name, train_path, test_path) in &pairs {
        let (train_set, test_set) =
            dataset::load_split(train_path, test_path).with_context(|| format!("loading {name}"))?;
        let report = harness::with_threads(config.threads, || harness::evaluate(name, &train_set, &test_set, &opts))??;
        let s = report.summary();
        eprintln!(
            "{name}: accuracy {:.4} ± {:.4} over {} resample(s), {:.2}s",
            s.mean_accuracy,
            s.std_accuracy,
            report.rows.len(),
            s.total_seconds
        );
        if config.verbose {
            eprintln!(
                "{name}: transform {:.3}s, classifier {:.3}s",
                s.transform_seconds, s.classifier_seconds
            );
        }
        for (r, reason) in &report.skipped {
            eprintln!("warning: {name}: resample {r} skipped: {reason}");
        }
        all_rows.extend(report.rows);
    }
    let mut w = output(out)?;
    dataset::write_results(&mut w, &all_rows)?;
    w.flush()?;
    eprintln!("total time {:.2}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_sweep(
    axis: &str,
    values: &[String],
    folds: usize,
    datasets: &[PathBuf],
    out: Option<&Path>,
    config: &ConfigArgs,
) -> Result<()> {
    let (transform, train_config) = config.resolve()?;
    let spec = SweepSpec::new(axis.parse::<SweepAxis>()?, values, folds, config.seed)?;
    let loaded = datasets
        .iter()
        .map(|p| Ok((dataset_name(p), dataset::load_tsv(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (name, data) in &loaded {
        let r = harness::with_threads(config.threads, || {
            harness::run_sweep(name, data, &spec, &transform, &train_config)
        })??;
        if config.verbose {
            eprintln!("{name}: {} rows", r.len());
        }
        rows.extend(r);
    }
    let mut w = output(out)?;
    harness::write_sweep(&mut w, &rows)?;
    w.flush()?;
    Ok(())
}

fn cmd_compare(a: &Path, b: &Path) -> Result<()> {
    let rows_a = dataset::read_results_file(a)?;
    let rows_b = dataset::read_results_file(b)?;
    let report = harness::compare(&rows_a, &rows_b)?;
    println!("A: {}", a.display());
    println!("B: {}", b.display());
    println!("{report}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { train, model, config } => {
            init_logging(config.verbose);
            cmd_fit(&train, &model, &config)
        }
        Command::Predict {
            model,
            data,
            out,
            threads,
        } => {
            init_logging(false);
            cmd_predict(&model, &data, out.as_deref(), threads)
        }
        Command::Eval {
            train,
            test,
            archive,
            datasets,
            name,
            resamples,
            out,
            no_timings,
            config,
        } => {
            init_logging(config.verbose);
            cmd_eval(
                train.as_deref(),
                test.as_deref(),
                archive.as_deref(),
                &datasets,
                name.as_deref(),
                resamples,
                out.as_deref(),
                no_timings,
                &config,
            )
        }
        Command::Sweep {
            axis,
            values,
            folds,
            out,
            datasets,
            config,
        } => {
            init_logging(config.verbose);
            cmd_sweep(&axis, &values, folds, &datasets, out.as_deref(), &config)
        }
        Command::Compare { a, b } => {
            init_logging(false);
            cmd_compare(&a, &b)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
