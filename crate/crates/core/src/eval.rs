//! Merged-model quality: accuracy, logit ensembles and loss barriers along
//! linear interpolation paths.

use rayon::prelude::*;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::merge::{merge_many_detailed, repair_reset, AlignMethod};
use crate::model::{apply_plan, MlpModel};
use crate::report::{fmt_f64, ReportWriter};
use crate::trainer::{argmax, cross_entropy_accuracy};

pub const DEFAULT_GRID_SIZE: usize = 21;

/// Accuracy of the averaged logits of `models`.
pub fn ensemble_accuracy(models: &[MlpModel], ds: &Dataset) -> Result<f64> {
    let first = models
        .first()
        .ok_or_else(|| Error::Config("ensemble needs at least one model".into()))?;
    let mut sum: Matrix = first.forward(ds.features())?;
    for m in &models[1..] {
        if m.output_dim() != first.output_dim() {
            return Err(Error::shape(
                None,
                format!("ensemble output dims differ: {} vs {}", first.output_dim(), m.output_dim()),
            ));
        }
        sum += m.forward(ds.features())?;
    }
    let mean = sum / models.len() as f64;
    let correct = ds
        .labels()
        .iter()
        .enumerate()
        .filter(|&(i, &y)| argmax(mean.row(i).iter().copied()) == y)
        .count();
    Ok(correct as f64 / ds.len() as f64)
}

/// Parameters `(1-λ)·θ_a + λ·θ_b`.
pub fn interpolate(a: &MlpModel, b: &MlpModel, lambda: f64) -> Result<MlpModel> {
    a.zip_with(b, |x, y| (1.0 - lambda) * x + lambda * y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierCurve {
    pub lambdas: Vec<f64>,
    pub losses: Vec<f64>,
    pub accuracies: Vec<f64>,
    /// `max_λ loss(λ) - ((1-λ)·loss(0) + λ·loss(1))`.
    pub barrier: f64,
}

pub fn interpolation_curve(model_a: &MlpModel, aligned_b: &MlpModel, ds: &Dataset, grid_size: usize) -> Result<BarrierCurve> {
    if grid_size < 3 {
        return Err(Error::Config(format!("interpolation grid needs at least 3 points, got {grid_size}")));
    }
    if !model_a.same_architecture(aligned_b) {
        return Err(Error::shape(None, "interpolation needs two models of the same architecture"));
    }
    let last = (grid_size - 1) as f64;
    let lambdas: Vec<f64> = (0..grid_size).map(|k| k as f64 / last).collect();
    let points = lambdas
        .par_iter()
        .map(|&l| interpolate(model_a, aligned_b, l).and_then(|m| cross_entropy_accuracy(&m, ds)))
        .collect::<Result<Vec<_>>>()?;
    let (losses, accuracies): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
    let (l0, l1) = (losses[0], losses[grid_size - 1]);
    let barrier = lambdas
        .iter()
        .zip(&losses)
        .map(|(&l, &loss)| loss - ((1.0 - l) * l0 + l * l1))
        .fold(0.0, f64::max);
    Ok(BarrierCurve {
        lambdas,
        losses,
        accuracies,
        barrier,
    })
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Index of the reference model within the model list.
    pub reference: usize,
    pub repair: bool,
    pub grid_size: usize,
    /// Seeds recorded in the report, one per model.
    pub seeds: Vec<u64>,
    /// Probe rows for alignment; `None` uses the training features.
    pub probes: Option<Matrix>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            reference: 0,
            repair: false,
            grid_size: DEFAULT_GRID_SIZE,
            seeds: Vec::new(),
            probes: None,
        }
    }
}

/// Summary of one layer's canonical correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerCcaSummary {
    pub layer: usize,
    pub gamma: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeReport {
    pub method: AlignMethod,
    pub reference: usize,
    pub seeds: Vec<u64>,
    pub endpoint_accuracies: Vec<f64>,
    pub base_models_avg: f64,
    pub ensemble_accuracy: f64,
    pub merged_accuracy: f64,
    pub merged_loss: f64,
    /// Loss barrier between the reference and the first aligned model.
    pub barrier: f64,
    pub cca_layers: Vec<LayerCcaSummary>,
    pub repair: bool,
    pub repair_skipped: Vec<(usize, usize)>,
}

impl MergeReport {
    pub fn to_text(&self) -> String {
        let mut w = ReportWriter::new("merge");
        self.write_fields(&mut w, "");
        w.finish()
    }

    /// Write all fields with `prefix` prepended to each key.
    pub fn write_fields(&self, w: &mut ReportWriter, prefix: &str) {
        let k = |s: &str| format!("{prefix}{s}");
        w.field(&k("method"), self.method);
        w.field(&k("gamma"), self.method.gamma().map(|g| g.to_string()).unwrap_or_else(|| "none".into()));
        w.field(&k("reference"), self.reference);
        w.field(&k("models"), self.endpoint_accuracies.len());
        w.list(&k("seeds"), &self.seeds);
        for (i, a) in self.endpoint_accuracies.iter().enumerate() {
            w.field(&k(&format!("endpoint_accuracy.{i}")), fmt_f64(*a));
        }
        w.field(&k("base_models_avg"), fmt_f64(self.base_models_avg));
        w.field(&k("ensemble_accuracy"), fmt_f64(self.ensemble_accuracy));
        w.field(&k("merged_accuracy"), fmt_f64(self.merged_accuracy));
        w.field(&k("merged_loss"), fmt_f64(self.merged_loss));
        w.field(&k("barrier"), fmt_f64(self.barrier));
        for s in &self.cca_layers {
            let p = format!("layer.{}.", s.layer);
            w.field(&k(&format!("{p}gamma_used")), fmt_f64(s.gamma));
            w.field(&k(&format!("{p}cca_mean")), fmt_f64(s.mean));
            w.field(&k(&format!("{p}cca_min")), fmt_f64(s.min));
            w.field(&k(&format!("{p}cca_max")), fmt_f64(s.max));
        }
        w.field(&k("repair"), if self.repair { "on" } else { "off" });
        if self.repair {
            w.field(&k("repair_skipped"), self.repair_skipped.len());
            let listed: Vec<String> = self.repair_skipped.iter().map(|(l, n)| format!("{l}:{n}")).collect();
            w.list(&k("repair_skipped_neurons"), &listed);
        }
    }
}

/// Merge `models` into the reference with `method` and measure everything
/// the merge report carries. Accuracies are on `test_ds`; alignment uses the
/// training features unless explicit probes are given.
pub fn evaluate_merge(
    method: AlignMethod,
    models: &[MlpModel],
    train_ds: &Dataset,
    test_ds: &Dataset,
    options: &EvalOptions,
) -> Result<MergeReport> {
    let (merged, outcome) = merged_model(method, models, train_ds, options)?;
    let reference = &models[options.reference];
    let others: Vec<&MlpModel> = others_of(models, options.reference);

    let endpoint_accuracies = models
        .iter()
        .map(|m| cross_entropy_accuracy(m, test_ds).map(|(_, a)| a))
        .collect::<Result<Vec<_>>>()?;
    let base_models_avg = endpoint_accuracies.iter().sum::<f64>() / endpoint_accuracies.len() as f64;
    let ensemble_accuracy = ensemble_accuracy(models, test_ds)?;
    let (merged_loss, merged_accuracy) = cross_entropy_accuracy(&merged, test_ds)?;

    let aligned_first = apply_plan(others[0], &outcome.alignments[0].plan)?;
    let barrier = interpolation_curve(reference, &aligned_first, test_ds, options.grid_size)?.barrier;

    let cca_layers = match (&outcome.alignments[0].canonical_correlations, &outcome.alignments[0].gammas) {
        (Some(corrs), Some(gammas)) => corrs
            .iter()
            .zip(gammas)
            .enumerate()
            .map(|(layer, (c, &gamma))| LayerCcaSummary {
                layer,
                gamma,
                mean: c.mean(),
                min: c.min(),
                max: c.max(),
            })
            .collect(),
        _ => Vec::new(),
    };

    Ok(MergeReport {
        method,
        reference: options.reference,
        seeds: options.seeds.clone(),
        endpoint_accuracies,
        base_models_avg,
        ensemble_accuracy,
        merged_accuracy,
        merged_loss,
        barrier,
        cca_layers,
        repair: options.repair,
        repair_skipped: outcome.repair_skipped,
    })
}

fn others_of(models: &[MlpModel], reference: usize) -> Vec<&MlpModel> {
    models
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != reference)
        .map(|(_, m)| m)
        .collect()
}

/// Alignments of the merge plus repair notes.
#[derive(Debug, Clone)]
pub struct MergedWithNotes {
    pub alignments: Vec<crate::merge::Alignment>,
    pub repair_skipped: Vec<(usize, usize)>,
}

/// The merged model exactly as `evaluate_merge` builds it.
pub fn merged_model(
    method: AlignMethod,
    models: &[MlpModel],
    train_ds: &Dataset,
    options: &EvalOptions,
) -> Result<(MlpModel, MergedWithNotes)> {
    if models.len() < 2 {
        return Err(Error::Config("merging needs at least two models".into()));
    }
    if options.reference >= models.len() {
        return Err(Error::Config(format!(
            "reference index {} out of range for {} models",
            options.reference,
            models.len()
        )));
    }
    let probes = options.probes.as_ref().unwrap_or(train_ds.features());
    let reference = &models[options.reference];
    let others: Vec<MlpModel> = others_of(models, options.reference).into_iter().cloned().collect();
    let outcome = merge_many_detailed(reference, &others, method, probes)?;
    let (model, repair_skipped) = if options.repair {
        let r = repair_reset(&outcome.model, reference, probes)?;
        (r.model, r.skipped)
    } else {
        (outcome.model, Vec::new())
    };
    Ok((
        model,
        MergedWithNotes {
            alignments: outcome.alignments,
            repair_skipped,
        },
    ))
}
