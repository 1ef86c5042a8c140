//! Fusing aligned models by parameter averaging, and the post-merge
//! statistics reset against a reference model.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::cca::{cca_plan, Gamma};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::matching::{identity_plan, permute_plan};
use crate::model::{apply_plan, AlignmentPlan, DenseLayer, MethodTag, MlpModel};

/// How the non-reference models are aligned before averaging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlignMethod {
    Direct,
    Permute,
    Cca(Gamma),
}

impl AlignMethod {
    pub fn tag(&self) -> MethodTag {
        match self {
            AlignMethod::Direct => MethodTag::Identity,
            AlignMethod::Permute => MethodTag::Permute,
            AlignMethod::Cca(_) => MethodTag::Cca,
        }
    }

    pub fn from_tag(tag: MethodTag, gamma: Gamma) -> Self {
        match tag {
            MethodTag::Identity => AlignMethod::Direct,
            MethodTag::Permute => AlignMethod::Permute,
            MethodTag::Cca => AlignMethod::Cca(gamma),
        }
    }

    pub fn gamma(&self) -> Option<Gamma> {
        match self {
            AlignMethod::Cca(g) => Some(*g),
            _ => None,
        }
    }
}

impl fmt::Display for AlignMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag().name())
    }
}

impl FromStr for AlignMethod {
    type Err = Error;

    /// Method name; CCA uses the default gamma.
    fn from_str(s: &str) -> Result<Self> {
        Ok(AlignMethod::from_tag(s.parse()?, Gamma::default()))
    }
}

/// An alignment of one model onto a reference.
#[derive(Debug, Clone)]
pub struct Alignment {
    pub plan: AlignmentPlan,
    /// Per-layer canonical correlations (CCA only).
    pub canonical_correlations: Option<Vec<Vector>>,
    /// Per-layer absolute gammas actually used (CCA only).
    pub gammas: Option<Vec<f64>>,
}

/// Align `other` onto `reference`.
pub fn align(reference: &MlpModel, other: &MlpModel, method: AlignMethod, probes: &Matrix) -> Result<Alignment> {
    if !reference.same_architecture(other) {
        return Err(Error::shape(
            None,
            format!(
                "cannot align {:?} onto {:?}",
                other.architecture(),
                reference.architecture()
            ),
        ));
    }
    Ok(match method {
        AlignMethod::Direct => Alignment {
            plan: identity_plan(other),
            canonical_correlations: None,
            gammas: None,
        },
        AlignMethod::Permute => Alignment {
            plan: permute_plan(reference, other, probes)?,
            canonical_correlations: None,
            gammas: None,
        },
        AlignMethod::Cca(gamma) => {
            let al = cca_plan(reference, other, probes, gamma)?;
            Alignment {
                plan: al.plan,
                gammas: Some(al.solutions.iter().map(|s| s.gamma).collect()),
                canonical_correlations: Some(al.solutions.into_iter().map(|s| s.correlations).collect()),
            }
        }
    })
}

/// `½(θ_A + θ_B')` where `B'` is `model_b` rewritten by `plan`.
pub fn merge_pair(model_a: &MlpModel, model_b: &MlpModel, plan: &AlignmentPlan) -> Result<MlpModel> {
    if !model_a.same_architecture(model_b) {
        return Err(Error::shape(None, "merge_pair needs two models of the same architecture"));
    }
    let aligned = apply_plan(model_b, plan)?;
    model_a.zip_with(&aligned, |x, y| (x + y) * 0.5)
}

/// Uniform average of parameter sets of identical architecture, summed in
/// the given order.
pub fn average(models: &[MlpModel]) -> Result<MlpModel> {
    let (first, rest) = models
        .split_first()
        .ok_or_else(|| Error::Config("cannot average an empty model list".into()))?;
    let mut acc = first.clone();
    for m in rest {
        acc = acc.zip_with(m, |x, y| x + y)?;
    }
    let k = models.len() as f64;
    let layers = acc
        .layers()
        .iter()
        .map(|l| DenseLayer::new(l.weights() / k, l.bias() / k, l.activation()))
        .collect::<Result<Vec<_>>>()?;
    MlpModel::new(layers, first.input_dim(), None)
}

/// Result of an all-to-one merge.
#[derive(Debug, Clone)]
pub struct MergeOutcome {
    pub model: MlpModel,
    /// One alignment per entry of `others`, in order.
    pub alignments: Vec<Alignment>,
}

/// Align every model in `others` to `reference`, then average all of them
/// with the reference.
pub fn merge_many(reference: &MlpModel, others: &[MlpModel], method: AlignMethod, probes: &Matrix) -> Result<MlpModel> {
    merge_many_detailed(reference, others, method, probes).map(|o| o.model)
}

pub fn merge_many_detailed(
    reference: &MlpModel,
    others: &[MlpModel],
    method: AlignMethod,
    probes: &Matrix,
) -> Result<MergeOutcome> {
    if others.is_empty() {
        return Err(Error::Config("merge_many needs at least one model besides the reference".into()));
    }
    let alignments = others
        .par_iter()
        .enumerate()
        .map(|(idx, other)| {
            align(reference, other, method, probes).map_err(|e| Error::Alignment {
                model: idx + 1,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if others.len() == 1 {
        let model = merge_pair(reference, &others[0], &alignments[0].plan)?;
        return Ok(MergeOutcome { model, alignments });
    }
    let mut aligned = Vec::with_capacity(others.len() + 1);
    aligned.push(reference.clone());
    for (other, al) in others.iter().zip(&alignments) {
        aligned.push(apply_plan(other, &al.plan)?);
    }
    Ok(MergeOutcome {
        model: average(&aligned)?,
        alignments,
    })
}

/// Neurons are skipped by the reset when their merged pre-activation std
/// falls below this.
pub const REPAIR_MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct RepairOutcome {
    pub model: MlpModel,
    /// `(layer, neuron)` pairs left untouched because they were constant.
    pub skipped: Vec<(usize, usize)>,
}

/// Rescale every hidden neuron of `merged` so that its pre-activation mean
/// and standard deviation on `probes` equal those of `reference`.
///
/// Layers are processed in order so each reset sees the inputs produced by
/// the already-reset layers before it. Only the neuron's own incoming
/// weights and bias change; the output layer is left alone.
pub fn repair_reset(merged: &MlpModel, reference: &MlpModel, probes: &Matrix) -> Result<RepairOutcome> {
    if probes.nrows() == 0 {
        return Err(Error::Config("repair needs a nonempty probe set".into()));
    }
    if !merged.same_architecture(reference) {
        return Err(Error::shape(None, "repair needs the merged and reference models to share an architecture"));
    }
    let ref_trace = reference.forward_trace(probes)?;
    let mut layers: Vec<DenseLayer> = merged.layers().to_vec();
    let mut skipped = Vec::new();
    let mut input = probes.clone();
    for l in 0..merged.num_hidden() {
        let pre = layers[l].pre_activation(&input);
        let (mu_m, sd_m) = linalg::column_mean_std(&pre);
        let (mu_r, sd_r) = linalg::column_mean_std(&ref_trace[l].pre);
        let (mut w, mut b, act) = layers[l].clone().into_parts();
        for j in 0..w.nrows() {
            if sd_m[j] < REPAIR_MIN_STD {
                skipped.push((l, j));
                continue;
            }
            let scale = sd_r[j] / sd_m[j];
            w.row_mut(j).scale_mut(scale);
            b[j] = (b[j] - mu_m[j]) * scale + mu_r[j];
        }
        layers[l] = DenseLayer::new(w, b, act)?;
        input = layers[l].pre_activation(&input).map(|v| v.max(0.0));
    }
    let model = MlpModel::new(layers, merged.input_dim(), merged.seed_tag().map(str::to_string))?;
    Ok(RepairOutcome { model, skipped })
}
