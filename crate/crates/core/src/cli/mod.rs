//! Command-line front end.
//!
//! Subcommands: `gen-data`, `train`, `merge`, `eval`, `barrier`, `analyze`,
//! `experiment`. Every subcommand accepts `--config <file>` with
//! `key=value` lines whose keys are long flag names; flags given on the
//! command line take precedence over the file, which takes precedence over
//! the built-in defaults. `FUSELAB_THREADS` caps the worker threads.

pub mod experiment;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::analyze;
use crate::cca::{select_gamma, Gamma};
use crate::datagen::{self, load_dataset, save_dataset, SplitKind, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::{ensemble_accuracy, interpolation_curve, merged_model, EvalOptions, DEFAULT_GRID_SIZE};
use crate::merge::{align, AlignMethod};
use crate::model::{apply_plan, load_model, save_model, MethodTag};
use crate::report::{fmt_f64, ReportWriter};
use crate::trainer::{cross_entropy_accuracy, train, TrainConfig};

use experiment::{probe_rows, run_experiment, ExperimentConfig};

pub const THREADS_ENV: &str = "FUSELAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fuselab", version, about = "Merge MLPs by aligning hidden features (CCA, permutation, direct averaging)")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset and its stratified train/test holdout.
    GenData(GenDataArgs),
    /// Train one model on a dataset file.
    Train(TrainArgs),
    /// Merge model files into the first (or --reference) model.
    Merge(MergeArgs),
    /// Accuracy and loss of model files on a dataset, plus their ensemble.
    Eval(EvalArgs),
    /// Loss barrier along the linear path between two models.
    Barrier(BarrierArgs),
    /// Alignment diagnostics for 2 or 3 models.
    Analyze(AnalyzeArgs),
    /// Full protocol: data, training, merging with each method, evaluation.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Full,
    EightyTwenty,
    Dirichlet,
    Disjoint,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Direct,
    Permute,
    Cca,
}

impl From<MethodArg> for MethodTag {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Direct => MethodTag::Identity,
            MethodArg::Permute => MethodTag::Permute,
            MethodArg::Cca => MethodTag::Cca,
        }
    }
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// key=value file supplying defaults for long flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenDataArgs {
    #[arg(long, default_value_t = datagen::DEFAULT_NUM_CLASSES)]
    classes: usize,
    #[arg(long, default_value_t = datagen::DEFAULT_PER_CLASS)]
    per_class: usize,
    #[arg(long, default_value_t = datagen::DEFAULT_DIM)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of each class held out as test data.
    #[arg(long, default_value_t = experiment::TEST_FRACTION)]
    test_fraction: f64,
    /// Also write the two parts of this split of the training data.
    #[arg(long, value_enum, default_value_t = SplitArg::Full)]
    split: SplitArg,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.5])]
    alpha: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [64usize, 64])]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    /// Model seed; the shuffle seed is derived from it unless given.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    shuffle_seed: Option<u64>,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct MergeArgs {
    /// Model files; the reference is the first unless --reference is given.
    #[arg(required = true, num_args = 2..)]
    models: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = MethodArg::Cca)]
    method: MethodArg,
    /// Ridge added to the scatter matrices; a trailing `x` makes it relative
    /// to the mean scatter diagonal.
    #[arg(long, default_value_t = Gamma::default().to_string())]
    gamma: String,
    /// Candidate gammas; the one giving the best merged accuracy on the
    /// probe dataset is used.
    #[arg(long, value_delimiter = ',')]
    gamma_search: Option<Vec<String>>,
    #[arg(long)]
    repair: bool,
    /// Dataset file whose features are the alignment probes.
    #[arg(long)]
    probes: PathBuf,
    #[arg(long)]
    probe_subsample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    reference: usize,
    /// Output model file; the report goes next to it with a `.report` suffix.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(required = true, num_args = 1..)]
    models: Vec<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct BarrierArgs {
    model_a: PathBuf,
    model_b: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Alignment applied to model B before interpolating.
    #[arg(long, value_enum, default_value_t = MethodArg::Direct)]
    method: MethodArg,
    #[arg(long, default_value_t = Gamma::default().to_string())]
    gamma: String,
    /// Alignment probes; defaults to --data.
    #[arg(long)]
    probes: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(required = true, num_args = 2..=3)]
    models: Vec<PathBuf>,
    #[arg(long)]
    probes: PathBuf,
    #[arg(long, default_value_t = Gamma::default().to_string())]
    gamma: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Direct, MethodArg::Permute, MethodArg::Cca])]
    methods: Vec<MethodArg>,
    /// Number of models; defaults to the number of seeds.
    #[arg(long)]
    models: Option<usize>,
    /// One seed per model.
    #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1])]
    seeds: Vec<u64>,
    #[arg(long, value_enum, default_value_t = SplitArg::Full)]
    split: SplitArg,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.5])]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = Gamma::default().to_string())]
    gamma: String,
    #[arg(long, value_delimiter = ',')]
    gamma_search: Option<Vec<String>>,
    #[arg(long)]
    repair: bool,
    #[arg(long, default_value_t = 0)]
    reference: usize,
    #[arg(long, default_value_t = datagen::DEFAULT_NUM_CLASSES)]
    classes: usize,
    #[arg(long, default_value_t = datagen::DEFAULT_PER_CLASS)]
    per_class: usize,
    #[arg(long, default_value_t = datagen::DEFAULT_DIM)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [64usize, 64])]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long)]
    probe_subsample: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    grid: usize,
    /// Directory for data, models and the report.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArg,
}

/// Parse `args` (including the program name), run the subcommand, and
/// return the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let pool = match thread_pool() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))
}

/// Splice `key=value` lines from `--config <file>` in front of the user's
/// own flags, so the user's flags override them.
fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => args
            .get(pos + 1)
            .cloned()
            .ok_or_else(|| Error::Config("--config needs a file path".into()))?,
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut injected = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("{path}:{}: expected key=value", n + 1)))?;
        let (k, v) = (k.trim().replace('_', "-"), v.trim());
        if k == "config" {
            continue;
        }
        match v {
            "true" | "on" | "yes" => injected.push(format!("--{k}")),
            "false" | "off" | "no" => {}
            _ => injected.push(format!("--{k}={v}")),
        }
    }
    // Program name and subcommand come first; positionals stay with the user args.
    let split_at = 2.min(args.len());
    let mut out = args[..split_at].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[split_at..]);
    Ok(out)
}

fn parse_gamma(s: &str) -> Result<Gamma> {
    s.parse()
}

fn parse_gamma_list(list: &[String]) -> Result<Vec<Gamma>> {
    list.iter().map(|s| parse_gamma(s)).collect()
}

fn split_kind(split: SplitArg, alpha: &[f64]) -> Result<SplitKind> {
    Ok(match split {
        SplitArg::Full => SplitKind::Full,
        SplitArg::EightyTwenty => SplitKind::EightyTwenty,
        SplitArg::Disjoint => SplitKind::DisjointClasses,
        SplitArg::Dirichlet => {
            let [a, b] = alpha[..] else {
                return Err(Error::Config(format!("--alpha needs exactly 2 values, got {}", alpha.len())));
            };
            SplitKind::Dirichlet([a, b])
        }
    })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    print!("{text}");
    if let Some(p) = path {
        std::fs::write(p, text).map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

fn with_stage<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Config(format!("stage `{stage}` failed: {e}")))
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train_cmd(a),
        Command::Merge(a) => merge_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Barrier(a) => barrier_cmd(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Experiment(a) => experiment_cmd(a),
    }
}

fn gen_data(a: GenDataArgs) -> Result<()> {
    let all = with_stage("generate", datagen::generate(a.classes, a.per_class, a.dim, a.seed))?;
    let (train, test) = with_stage("holdout", datagen::holdout(&all, a.test_fraction, a.seed.wrapping_add(1)))?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    save_dataset(&train, a.out.join("train.data"))?;
    save_dataset(&test, a.out.join("test.data"))?;
    let mut w = ReportWriter::new("dataset");
    w.field("classes", a.classes)
        .field("per_class", a.per_class)
        .field("dim", a.dim)
        .field("seed", a.seed)
        .field("train_size", train.len())
        .field("test_size", test.len());
    let kind = split_kind(a.split, &a.alpha)?;
    if kind != SplitKind::Full {
        let spec = SplitSpec::new(kind, a.seed.wrapping_add(2))?;
        let (p1, p2) = with_stage("split", datagen::split(&train, &spec))?;
        save_dataset(&p1, a.out.join("train.part1.data"))?;
        save_dataset(&p2, a.out.join("train.part2.data"))?;
        w.field("split", kind.name())
            .list("part1_class_counts", &p1.class_counts())
            .list("part2_class_counts", &p2.class_counts());
    }
    write_output(None, &w.finish())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let ds = with_stage("load-data", load_dataset(&a.data))?;
    let base = TrainConfig::for_seed(a.seed);
    let cfg = TrainConfig {
        hidden_widths: a.hidden,
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        momentum: a.momentum,
        init_seed: a.seed,
        shuffle_seed: a.shuffle_seed.unwrap_or(base.shuffle_seed),
    };
    let model = with_stage("train", train(&ds, &cfg))?;
    save_model(&model, &a.out)?;
    let (loss, acc) = cross_entropy_accuracy(&model, &ds)?;
    let mut w = ReportWriter::new("train");
    w.field("model", a.out.display())
        .field("init_seed", cfg.init_seed)
        .field("shuffle_seed", cfg.shuffle_seed)
        .field("train_loss", fmt_f64(loss))
        .field("train_accuracy", fmt_f64(acc));
    write_output(None, &w.finish())
}

fn merge_cmd(a: MergeArgs) -> Result<()> {
    let models = with_stage(
        "load-models",
        a.models.iter().map(load_model).collect::<Result<Vec<_>>>(),
    )?;
    let probe_ds = with_stage("load-probes", load_dataset(&a.probes))?;
    let probes = probe_rows(&probe_ds, a.probe_subsample, probe_ds.seed().wrapping_add(3))?;
    let mut gamma = parse_gamma(&a.gamma)?;
    let tag = MethodTag::from(a.method);
    if let (Some(list), MethodTag::Cca) = (&a.gamma_search, tag) {
        let grid = parse_gamma_list(list)?;
        let reference = models
            .get(a.reference)
            .ok_or_else(|| Error::Config(format!("reference index {} out of range", a.reference)))?;
        let pairs: Vec<_> = models
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != a.reference)
            .map(|(_, m)| (reference.clone(), m.clone()))
            .collect();
        gamma = with_stage("gamma-search", select_gamma(&grid, &pairs, &probes, &probe_ds))?;
    }
    let method = AlignMethod::from_tag(tag, gamma);
    let options = EvalOptions {
        reference: a.reference,
        repair: a.repair,
        probes: Some(probes),
        ..EvalOptions::default()
    };
    let (merged, notes) = with_stage("merge", merged_model(method, &models, &probe_ds, &options))?;
    save_model(&merged, &a.out)?;

    let mut w = ReportWriter::new("merge");
    w.field("method", method)
        .field("gamma", method.gamma().map(|g| g.to_string()).unwrap_or_else(|| "none".into()))
        .field("reference", a.reference)
        .field("models", models.len());
    for (i, p) in a.models.iter().enumerate() {
        w.field(&format!("input.{i}"), p.display());
    }
    w.field("output", a.out.display());
    if let Some(al) = notes.alignments.first() {
        if let (Some(corrs), Some(gammas)) = (&al.canonical_correlations, &al.gammas) {
            for (l, (c, g)) in corrs.iter().zip(gammas).enumerate() {
                w.field(&format!("layer.{l}.gamma_used"), fmt_f64(*g));
                w.field(&format!("layer.{l}.cca_mean"), fmt_f64(c.mean()));
                w.field(&format!("layer.{l}.cca_min"), fmt_f64(c.min()));
                w.field(&format!("layer.{l}.cca_max"), fmt_f64(c.max()));
            }
        }
    }
    w.field("repair", if a.repair { "on" } else { "off" });
    if a.repair {
        w.field("repair_skipped", notes.repair_skipped.len());
    }
    let report_path = {
        let mut s = a.out.clone().into_os_string();
        s.push(".report");
        PathBuf::from(s)
    };
    write_output(Some(&report_path), &w.finish())
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let ds = with_stage("load-data", load_dataset(&a.data))?;
    let models = with_stage(
        "load-models",
        a.models.iter().map(load_model).collect::<Result<Vec<_>>>(),
    )?;
    let mut w = ReportWriter::new("eval");
    w.field("data", a.data.display()).field("samples", ds.len());
    let mut accs = Vec::new();
    for (i, (m, p)) in models.iter().zip(&a.models).enumerate() {
        let (loss, acc) = with_stage("evaluate", cross_entropy_accuracy(m, &ds))?;
        w.field(&format!("model.{i}.path"), p.display())
            .field(&format!("model.{i}.loss"), fmt_f64(loss))
            .field(&format!("model.{i}.accuracy"), fmt_f64(acc));
        accs.push(acc);
    }
    if models.len() > 1 {
        w.field("base_models_avg", fmt_f64(accs.iter().sum::<f64>() / accs.len() as f64));
        w.field("ensemble_accuracy", fmt_f64(with_stage("ensemble", ensemble_accuracy(&models, &ds))?));
    }
    write_output(a.out.as_deref(), &w.finish())
}

fn barrier_cmd(a: BarrierArgs) -> Result<()> {
    let ds = with_stage("load-data", load_dataset(&a.data))?;
    let model_a = with_stage("load-models", load_model(&a.model_a))?;
    let model_b = with_stage("load-models", load_model(&a.model_b))?;
    let probes = match &a.probes {
        Some(p) => with_stage("load-probes", load_dataset(p))?.features().clone(),
        None => ds.features().clone(),
    };
    let method = AlignMethod::from_tag(a.method.into(), parse_gamma(&a.gamma)?);
    let plan = with_stage("align", align(&model_a, &model_b, method, &probes))?.plan;
    let aligned = apply_plan(&model_b, &plan)?;
    let curve = with_stage("interpolate", interpolation_curve(&model_a, &aligned, &ds, a.grid))?;
    let mut w = ReportWriter::new("barrier");
    w.field("method", method).field("grid", a.grid);
    for (i, ((l, loss), acc)) in curve.lambdas.iter().zip(&curve.losses).zip(&curve.accuracies).enumerate() {
        w.field(&format!("point.{i}.lambda"), fmt_f64(*l))
            .field(&format!("point.{i}.loss"), fmt_f64(*loss))
            .field(&format!("point.{i}.accuracy"), fmt_f64(*acc));
    }
    w.field("barrier", fmt_f64(curve.barrier));
    write_output(a.out.as_deref(), &w.finish())
}

fn analyze_cmd(a: AnalyzeArgs) -> Result<()> {
    let models = with_stage(
        "load-models",
        a.models.iter().map(load_model).collect::<Result<Vec<_>>>(),
    )?;
    let probes = with_stage("load-probes", load_dataset(&a.probes))?;
    let report = with_stage("analyze", analyze(&models, probes.features(), parse_gamma(&a.gamma)?))?;
    write_output(a.out.as_deref(), &report.to_text())
}

fn experiment_cmd(a: ExperimentArgs) -> Result<()> {
    let models = a.models.unwrap_or(a.seeds.len());
    if models != a.seeds.len() {
        return Err(Error::Config(format!(
            "--models {models} needs exactly {models} seeds, got {}",
            a.seeds.len()
        )));
    }
    let cfg = ExperimentConfig {
        num_classes: a.classes,
        per_class: a.per_class,
        dim: a.dim,
        data_seed: a.data_seed,
        split: split_kind(a.split, &a.alpha)?,
        methods: a.methods.into_iter().map(MethodTag::from).collect(),
        seeds: a.seeds,
        hidden_widths: a.hidden,
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        momentum: a.momentum,
        gamma: parse_gamma(&a.gamma)?,
        gamma_search: a.gamma_search.as_deref().map(parse_gamma_list).transpose()?,
        repair: a.repair,
        reference: a.reference,
        probe_subsample: a.probe_subsample,
        grid_size: a.grid,
        out: a.out,
    };
    let outcome = run_experiment(&cfg)?;
    print!("{}", outcome.report_text);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines_are_spliced_before_user_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.cfg");
        std::fs::write(&cfg, "# defaults\nepochs=3\nrepair=true\nprobe_subsample=10\nverbose=false\n").unwrap();
        let args: Vec<String> = ["fuselab", "experiment", "--config", cfg.to_str().unwrap(), "--epochs", "5"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let out = expand_config(args).unwrap();
        assert_eq!(&out[..5], &["fuselab", "experiment", "--epochs=3", "--repair", "--probe-subsample=10"]);
        let cli = Cli::try_parse_from(&out).unwrap();
        match cli.command {
            Command::Experiment(e) => {
                assert_eq!(e.epochs, 5);
                assert!(e.repair);
                assert_eq!(e.probe_subsample, Some(10));
            }
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        assert_eq!(run(["fuselab", "experiment", "--bogus"]), 2);
        assert_eq!(run(["fuselab", "frobnicate"]), 2);
    }

    #[test]
    fn missing_file_fails_with_nonzero_exit() {
        assert_eq!(run(["fuselab", "eval", "/nonexistent/m.model", "--data", "/nonexistent/d.data"]), 1);
    }

    #[test]
    fn split_kinds_from_flags() {
        assert_eq!(split_kind(SplitArg::Dirichlet, &[0.5, 0.5]).unwrap(), SplitKind::Dirichlet([0.5, 0.5]));
        assert!(split_kind(SplitArg::Dirichlet, &[0.5]).is_err());
        assert_eq!(split_kind(SplitArg::Disjoint, &[]).unwrap(), SplitKind::DisjointClasses);
    }
}
