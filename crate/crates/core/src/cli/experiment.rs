//! End-to-end protocol: generate and split data, train models with
//! distinct seeds, merge with each method, evaluate, and emit one combined
//! report with a row per method.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cca::{score_gammas, select_gamma, Gamma};
use crate::datagen::{self, Dataset, SplitKind, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::{evaluate_merge, merged_model, EvalOptions, MergeReport, DEFAULT_GRID_SIZE};
use crate::linalg::Matrix;
use crate::merge::AlignMethod;
use crate::model::{save_model, MethodTag, MlpModel};
use crate::report::{fmt_f64, ReportWriter};
use crate::trainer::{train, TrainConfig};

/// Offset added to the first model seeds to obtain the held-out pair used
/// for gamma search.
pub const HOLDOUT_SEED_OFFSET: u64 = 10_000;
pub const TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub num_classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub data_seed: u64,
    pub split: SplitKind,
    pub methods: Vec<MethodTag>,
    pub seeds: Vec<u64>,
    pub hidden_widths: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub gamma: Gamma,
    pub gamma_search: Option<Vec<Gamma>>,
    pub repair: bool,
    pub reference: usize,
    pub probe_subsample: Option<usize>,
    pub grid_size: usize,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            num_classes: datagen::DEFAULT_NUM_CLASSES,
            per_class: datagen::DEFAULT_PER_CLASS,
            dim: datagen::DEFAULT_DIM,
            data_seed: 0,
            split: SplitKind::Full,
            methods: vec![MethodTag::Identity, MethodTag::Permute, MethodTag::Cca],
            seeds: vec![0, 1],
            hidden_widths: t.hidden_widths,
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            gamma: Gamma::default(),
            gamma_search: None,
            repair: false,
            reference: 0,
            probe_subsample: None,
            grid_size: DEFAULT_GRID_SIZE,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            hidden_widths: self.hidden_widths.clone(),
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            ..TrainConfig::for_seed(seed)
        }
    }
}

/// Train and test data of an experiment, plus the per-model training sets.
pub struct ExperimentData {
    pub train: Dataset,
    pub test: Dataset,
    pub parts: Vec<Dataset>,
}

pub fn prepare_data(cfg: &ExperimentConfig) -> Result<ExperimentData> {
    let all = datagen::generate(cfg.num_classes, cfg.per_class, cfg.dim, cfg.data_seed)?;
    let (train, test) = datagen::holdout(&all, TEST_FRACTION, cfg.data_seed.wrapping_add(1))?;
    let k = cfg.seeds.len();
    let parts = match cfg.split {
        SplitKind::Full => vec![train.clone(); k],
        kind => {
            if k != 2 {
                return Err(Error::Config(format!(
                    "the {} split is two-way; it needs exactly 2 models, got {k}",
                    kind.name()
                )));
            }
            let spec = SplitSpec::new(kind, cfg.data_seed.wrapping_add(2))?;
            let (p1, p2) = datagen::split(&train, &spec)?;
            vec![p1, p2]
        }
    };
    Ok(ExperimentData { train, test, parts })
}

/// Probe rows used for alignment: the training features, optionally a
/// seeded subsample of them.
pub fn probe_rows(train: &Dataset, subsample: Option<usize>, seed: u64) -> Result<Matrix> {
    match subsample {
        None => Ok(train.features().clone()),
        Some(n) if n >= 2 && n <= train.len() => {
            let mut idx: Vec<usize> = (0..train.len()).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            idx.truncate(n);
            idx.sort_unstable();
            Ok(train.features().select_rows(&idx))
        }
        Some(n) => Err(Error::Config(format!(
            "probe subsample {n} must lie in 2..={}",
            train.len()
        ))),
    }
}

pub struct ExperimentOutcome {
    pub report_text: String,
    pub reports: Vec<MergeReport>,
    pub models: Vec<MlpModel>,
    pub gamma: Gamma,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    if cfg.seeds.len() < 2 {
        return Err(Error::Config("an experiment needs at least 2 models".into()));
    }
    if cfg.methods.is_empty() {
        return Err(Error::Config("no merge methods requested".into()));
    }
    let data = prepare_data(cfg).map_err(|e| stage("data", e))?;
    let models = cfg
        .seeds
        .par_iter()
        .zip(data.parts.par_iter())
        .map(|(&seed, part)| train(part, &cfg.train_config(seed)))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| stage("train", e))?;
    let probes = probe_rows(&data.train, cfg.probe_subsample, cfg.data_seed.wrapping_add(3))?;

    let (gamma, gamma_scores) = match &cfg.gamma_search {
        Some(grid) if cfg.methods.contains(&MethodTag::Cca) => {
            let heldout = cfg.seeds[..2]
                .par_iter()
                .zip(data.parts.par_iter())
                .map(|(&s, part)| train(part, &cfg.train_config(s.wrapping_add(HOLDOUT_SEED_OFFSET))))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| stage("gamma-search", e))?;
            let pairs = vec![(heldout[0].clone(), heldout[1].clone())];
            let best = select_gamma(grid, &pairs, &probes, &data.train).map_err(|e| stage("gamma-search", e))?;
            let scores = score_gammas(grid, &pairs, &probes, &data.train);
            (best, Some(grid.iter().copied().zip(scores).collect::<Vec<_>>()))
        }
        _ => (cfg.gamma, None),
    };

    let options = EvalOptions {
        reference: cfg.reference,
        repair: cfg.repair,
        grid_size: cfg.grid_size,
        seeds: cfg.seeds.clone(),
        probes: Some(probes.clone()),
    };
    let mut reports = Vec::with_capacity(cfg.methods.len());
    for &tag in &cfg.methods {
        let method = AlignMethod::from_tag(tag, gamma);
        let report = evaluate_merge(method, &models, &data.train, &data.test, &options)
            .map_err(|e| stage(&format!("merge:{tag}"), e))?;
        reports.push(report);
    }

    let report_text = render(cfg, &data, gamma, gamma_scores.as_deref(), &reports);

    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        datagen::save_dataset(&data.train, dir.join("train.data"))?;
        datagen::save_dataset(&data.test, dir.join("test.data"))?;
        for (i, m) in models.iter().enumerate() {
            save_model(m, dir.join(format!("model_{i}.model")))?;
        }
        for &tag in &cfg.methods {
            let method = AlignMethod::from_tag(tag, gamma);
            let (merged, _) = merged_model(method, &models, &data.train, &options)?;
            save_model(&merged, dir.join(format!("merged_{tag}.model")))?;
        }
        let path = dir.join("experiment.report");
        std::fs::write(&path, &report_text).map_err(|e| Error::io(path, e))?;
    }

    Ok(ExperimentOutcome {
        report_text,
        reports,
        models,
        gamma,
    })
}

fn stage(name: &str, e: Error) -> Error {
    Error::Config(format!("stage `{name}` failed: {e}"))
}

fn render(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    gamma: Gamma,
    gamma_scores: Option<&[(Gamma, f64)]>,
    reports: &[MergeReport],
) -> String {
    let mut w = ReportWriter::new("experiment");
    w.field("classes", cfg.num_classes)
        .field("per_class", cfg.per_class)
        .field("dim", cfg.dim)
        .field("data_seed", cfg.data_seed)
        .field("split", cfg.split.name());
    match cfg.split {
        SplitKind::Dirichlet(a) => w.list("alpha", &a),
        _ => w.field("alpha", "none"),
    };
    w.field("models", cfg.seeds.len())
        .list("seeds", &cfg.seeds)
        .list("hidden", &cfg.hidden_widths)
        .field("epochs", cfg.epochs)
        .field("batch_size", cfg.batch_size)
        .field("learning_rate", cfg.learning_rate)
        .field("momentum", cfg.momentum)
        .field("reference", cfg.reference)
        .field("repair", if cfg.repair { "on" } else { "off" })
        .field("gamma", gamma)
        .field("train_size", data.train.len())
        .field("test_size", data.test.len())
        .list(
            "part_sizes",
            &data.parts.iter().map(Dataset::len).collect::<Vec<_>>(),
        );
    if let Some(scores) = gamma_scores {
        for (g, s) in scores {
            w.field(&format!("gamma_search.{g}"), fmt_f64(*s));
        }
    }
    if let Some(first) = reports.first() {
        w.comment("reference rows");
        w.field("row.base_models_avg", fmt_f64(first.base_models_avg));
        w.field("row.ensemble", fmt_f64(first.ensemble_accuracy));
    }
    w.comment("one row per merge method: merged test accuracy");
    let names: Vec<&str> = reports.iter().map(|r| r.method.tag().name()).collect();
    w.list("rows", &names);
    for r in reports {
        w.field(&format!("row.{}", r.method.tag().name()), fmt_f64(r.merged_accuracy));
    }
    for r in reports {
        w.comment(&format!("method {}", r.method.tag().name()));
        r.write_fields(&mut w, &format!("method.{}.", r.method.tag().name()));
    }
    w.finish()
}
