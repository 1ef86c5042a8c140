//! Diagnostics of alignment quality: how often the optimal permutation
//! departs from each neuron's best correlate, how CCA coefficients track
//! correlations, and how consistent alignments are across three models.

use crate::activations::{capture, correlations, CorrelationMatrix};
use crate::cca::{cca_plan, Gamma};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::matching::{linear_sum_assignment, Assignment};
use crate::merge::{align, AlignMethod};
use crate::model::{LayerTransform, MlpModel};
use crate::report::{fmt_f64, ReportWriter};

/// Percent of rows whose matched column does not attain the row maximum.
pub fn non_optimal_matches(c: &CorrelationMatrix, assignment: &Assignment) -> Result<f64> {
    let v = c.values();
    if assignment.mapping.len() != v.nrows() || assignment.mapping.iter().any(|&j| j >= v.ncols()) {
        return Err(Error::shape(None, "assignment does not fit the correlation matrix"));
    }
    let n = v.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let misses = (0..n)
        .filter(|&i| {
            let best = v.row(i).max();
            v[(i, assignment.mapping[i])] < best
        })
        .count();
    Ok(100.0 * misses as f64 / n as f64)
}

/// Column indices of `row` ordered by decreasing value; ties keep the
/// lower index first.
fn ranked(row: impl Iterator<Item = f64>) -> Vec<usize> {
    let vals: Vec<f64> = row.collect();
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    idx
}

/// Percent of rows `i` whose `k_corr`-th most correlated column of `c`
/// is among the `k_coeff` largest `|t[i, ·]|` entries.
pub fn topk_coefficient_coverage(c: &Matrix, t: &Matrix, k_corr: usize, k_coeff: usize) -> Result<f64> {
    if c.shape() != t.shape() {
        return Err(Error::shape(None, "correlation and transform shapes differ"));
    }
    let n = c.ncols();
    if k_corr == 0 || k_coeff == 0 || k_corr > n || k_coeff > n {
        return Err(Error::Config(format!(
            "top-k ranks must lie in 1..={n}, got k_corr={k_corr}, k_coeff={k_coeff}"
        )));
    }
    let rows = c.nrows();
    if rows == 0 {
        return Ok(0.0);
    }
    let hits = (0..rows)
        .filter(|&i| {
            let target = ranked(c.row(i).iter().copied())[k_corr - 1];
            ranked(t.row(i).iter().map(|v| v.abs()))[..k_coeff].contains(&target)
        })
        .count();
    Ok(100.0 * hits as f64 / rows as f64)
}

/// 1-Wasserstein distance between two empirical distributions, as the
/// integral of the absolute difference of their quantile functions.
pub fn wasserstein_1d(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::Config("Wasserstein distance needs nonempty samples".into()));
    }
    let mut p = p.to_vec();
    let mut q = q.to_vec();
    p.sort_by(f64::total_cmp);
    q.sort_by(f64::total_cmp);
    let (n, m) = (p.len(), q.len());
    // Quantile breakpoints in units of 1/(n·m): p steps every m, q every n.
    let total = (n * m) as f64;
    let (mut i, mut j, mut pos) = (0usize, 0usize, 0usize);
    let mut acc = 0.0;
    while i < n && j < m {
        let next_p = (i + 1) * m;
        let next_q = (j + 1) * n;
        let next = next_p.min(next_q);
        acc += (next - pos) as f64 * (p[i] - q[j]).abs();
        pos = next;
        if next_p == next {
            i += 1;
        }
        if next_q == next {
            j += 1;
        }
    }
    Ok(acc / total)
}

/// The `k`-th largest value of each row.
fn kth_per_row(values: &Matrix, k: usize) -> Vec<f64> {
    values
        .row_iter()
        .map(|r| {
            let mut v: Vec<f64> = r.iter().copied().collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v[k - 1]
        })
        .collect()
}

/// `W(top-k correlations, top-k |T|) / W(top-k correlations, permutation reference)`
/// where the reference is all ones for `k = 1` and all zeros otherwise.
/// A zero denominator gives `+∞`.
pub fn coefficient_distribution_ratio(c: &Matrix, t: &Matrix, k: usize) -> Result<f64> {
    if c.shape() != t.shape() {
        return Err(Error::shape(None, "correlation and transform shapes differ"));
    }
    if k == 0 || k > c.ncols() {
        return Err(Error::Config(format!("k must lie in 1..={}, got {k}", c.ncols())));
    }
    let corr = kth_per_row(c, k);
    let coef = kth_per_row(&t.map(f64::abs), k);
    let reference = vec![if k == 1 { 1.0 } else { 0.0 }; corr.len()];
    let num = wasserstein_1d(&corr, &coef)?;
    let den = wasserstein_1d(&corr, &reference)?;
    Ok(if den == 0.0 { f64::INFINITY } else { num / den })
}

/// Direct vs indirect alignment of C onto B for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct IndirectLayer {
    pub layer: usize,
    /// Percent of C-neurons whose B-partner differs (permutations only).
    pub mismatch_pct: Option<f64>,
    /// `‖T_CAB − T_CB‖_F`.
    pub frobenius: f64,
    /// `‖T_CAB − T_CB‖_F / ‖T_CB‖_F`.
    pub relative_frobenius: f64,
}

/// Compare `T_CAB = T_BA⁻¹·T_CA` (C aligned to B through reference A)
/// with the direct alignment `T_CB`, per merging layer.
pub fn indirect_matching_diagnostics(
    a: &MlpModel,
    b: &MlpModel,
    c: &MlpModel,
    method: AlignMethod,
    probes: &Matrix,
) -> Result<Vec<IndirectLayer>> {
    let t_ba = align(a, b, method, probes)?.plan;
    let t_ca = align(a, c, method, probes)?.plan;
    let t_cb = align(b, c, method, probes)?.plan;
    t_ba.transforms()
        .iter()
        .zip(t_ca.transforms())
        .zip(t_cb.transforms())
        .enumerate()
        .map(|(layer, ((ba, ca), cb))| indirect_layer(layer, ba, ca, cb))
        .collect()
}

fn indirect_layer(layer: usize, ba: &LayerTransform, ca: &LayerTransform, cb: &LayerTransform) -> Result<IndirectLayer> {
    let cab = ba.inverted().compose(ca)?;
    let diff = cab.forward() - cb.forward();
    let frobenius = diff.norm();
    let denom = cb.forward().norm();
    let relative_frobenius = if denom > 0.0 { frobenius / denom } else { f64::INFINITY };
    let mismatch_pct = match (cab.mapping(), cb.mapping()) {
        (Some(indirect), Some(direct)) => {
            let n = indirect.len().max(1);
            let differ = indirect.iter().zip(&direct).filter(|(x, y)| x != y).count();
            Some(100.0 * differ as f64 / n as f64)
        }
        _ => None,
    };
    Ok(IndirectLayer {
        layer,
        mismatch_pct,
        frobenius,
        relative_frobenius,
    })
}

/// Coverage pairs `(k_corr, k_coeff)` reported by default.
pub const DEFAULT_COVERAGE_PAIRS: [(usize, usize); 2] = [(1, 5), (2, 10)];

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisLayer {
    pub layer: usize,
    pub non_optimal_pct: f64,
    pub topk_coverage: Vec<((usize, usize), f64)>,
    pub wasserstein_ratio_top1: f64,
    pub wasserstein_ratio_top2: f64,
    pub permute_indirect: Option<IndirectLayer>,
    pub cca_indirect: Option<IndirectLayer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub gamma: Gamma,
    pub num_models: usize,
    pub layers: Vec<AnalysisLayer>,
}

/// Pairwise diagnostics on the first two models and, with a third model,
/// the indirect-matching comparison for both Permute and CCA.
pub fn analyze(models: &[MlpModel], probes: &Matrix, gamma: Gamma) -> Result<AnalysisReport> {
    if !(2..=3).contains(&models.len()) {
        return Err(Error::Config(format!("analysis takes 2 or 3 models, got {}", models.len())));
    }
    let (a, b) = (&models[0], &models[1]);
    let acts_a = capture(a, probes)?;
    let acts_b = capture(b, probes)?;
    let cca = cca_plan(a, b, probes, gamma)?;
    let triple = match models.get(2) {
        Some(c) => Some((
            indirect_matching_diagnostics(a, b, c, AlignMethod::Permute, probes)?,
            indirect_matching_diagnostics(a, b, c, AlignMethod::Cca(gamma), probes)?,
        )),
        None => None,
    };
    let mut layers = Vec::with_capacity(acts_a.len());
    for (l, (xa, xb)) in acts_a.iter().zip(&acts_b).enumerate() {
        let corr = correlations(xa, xb)?;
        let assignment = linear_sum_assignment(&corr)?;
        let t = cca.plan.transforms()[l].forward();
        let n = corr.values().ncols();
        let topk_coverage = DEFAULT_COVERAGE_PAIRS
            .iter()
            .filter(|&&(kc, _)| kc <= n)
            .map(|&(kc, kf)| {
                let kf = kf.min(n);
                topk_coefficient_coverage(corr.values(), t, kc, kf).map(|p| ((kc, kf), p))
            })
            .collect::<Result<Vec<_>>>()?;
        let ratio2 = if n >= 2 {
            coefficient_distribution_ratio(corr.values(), t, 2)?
        } else {
            f64::NAN
        };
        layers.push(AnalysisLayer {
            layer: l,
            non_optimal_pct: non_optimal_matches(&corr, &assignment)?,
            topk_coverage,
            wasserstein_ratio_top1: coefficient_distribution_ratio(corr.values(), t, 1)?,
            wasserstein_ratio_top2: ratio2,
            permute_indirect: triple.as_ref().map(|(p, _)| p[l].clone()),
            cca_indirect: triple.as_ref().map(|(_, c)| c[l].clone()),
        });
    }
    Ok(AnalysisReport {
        gamma,
        num_models: models.len(),
        layers,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 { f64::NAN } else { sum / n as f64 }
}

impl AnalysisReport {
    pub fn to_text(&self) -> String {
        let mut w = ReportWriter::new("analysis");
        w.field("models", self.num_models);
        w.field("gamma", self.gamma);
        w.comment("coefficient ranking uses |T|");
        for l in &self.layers {
            let p = format!("layer.{}.", l.layer);
            w.field(&format!("{p}non_optimal_pct"), fmt_f64(l.non_optimal_pct));
            for ((kc, kf), pct) in &l.topk_coverage {
                w.field(&format!("{p}topk_coverage.{kc}_{kf}"), fmt_f64(*pct));
            }
            w.field(&format!("{p}wasserstein_ratio.top1"), fmt_f64(l.wasserstein_ratio_top1));
            w.field(&format!("{p}wasserstein_ratio.top2"), fmt_f64(l.wasserstein_ratio_top2));
            if let Some(pi) = &l.permute_indirect {
                w.field(&format!("{p}permute.mismatch_pct"), fmt_f64(pi.mismatch_pct.unwrap_or(f64::NAN)));
                w.field(&format!("{p}permute.frobenius"), fmt_f64(pi.frobenius));
                w.field(&format!("{p}permute.relative_frobenius"), fmt_f64(pi.relative_frobenius));
            }
            if let Some(ci) = &l.cca_indirect {
                w.field(&format!("{p}cca.frobenius"), fmt_f64(ci.frobenius));
                w.field(&format!("{p}cca.relative_frobenius"), fmt_f64(ci.relative_frobenius));
            }
        }
        w.field("mean.non_optimal_pct", fmt_f64(mean(self.layers.iter().map(|l| l.non_optimal_pct))));
        w.field(
            "mean.wasserstein_ratio.top1",
            fmt_f64(mean(self.layers.iter().map(|l| l.wasserstein_ratio_top1))),
        );
        w.field(
            "mean.wasserstein_ratio.top2",
            fmt_f64(mean(self.layers.iter().map(|l| l.wasserstein_ratio_top2))),
        );
        if self.num_models == 3 {
            let perm = self.layers.iter().filter_map(|l| l.permute_indirect.as_ref());
            let cca = self.layers.iter().filter_map(|l| l.cca_indirect.as_ref());
            w.field(
                "mean.permute.mismatch_pct",
                fmt_f64(mean(perm.clone().filter_map(|i| i.mismatch_pct))),
            );
            w.field("mean.permute.relative_frobenius", fmt_f64(mean(perm.map(|i| i.relative_frobenius))));
            w.field("mean.cca.relative_frobenius", fmt_f64(mean(cca.map(|i| i.relative_frobenius))));
        }
        w.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::solve_max;

    #[test]
    fn non_optimal_example() {
        let c = Matrix::from_row_slice(2, 2, &[0.9, 0.8, 0.85, 0.1]);
        let a = solve_max(&c).unwrap();
        let pct = non_optimal_matches(&CorrelationMatrix::from_values(c), &a).unwrap();
        assert_eq!(pct, 50.0);
    }

    #[test]
    fn identity_dominant_has_no_misses() {
        let c = Matrix::from_fn(4, 4, |i, j| if i == j { 0.9 } else { 0.1 });
        let a = solve_max(&c).unwrap();
        assert_eq!(non_optimal_matches(&CorrelationMatrix::from_values(c.clone()), &a).unwrap(), 0.0);
        assert_eq!(topk_coefficient_coverage(&c, &Matrix::identity(4, 4), 1, 1).unwrap(), 100.0);
        assert_eq!(topk_coefficient_coverage(&c, &c, 1, 1).unwrap(), 100.0);
    }

    #[test]
    fn wasserstein_examples() {
        assert_eq!(wasserstein_1d(&[0.0, 1.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(wasserstein_1d(&[0.0], &[5.0]).unwrap(), 5.0);
        assert_eq!(wasserstein_1d(&[3.0, 1.0, 2.0], &[2.0, 3.0, 1.0]).unwrap(), 0.0);
        // {0} vs {0, 1}: half the mass moves by 1.
        assert_eq!(wasserstein_1d(&[0.0], &[0.0, 1.0]).unwrap(), 0.5);
        assert!(wasserstein_1d(&[], &[1.0]).is_err());
    }

    #[test]
    fn ratio_for_permutation_and_self() {
        let c = Matrix::from_row_slice(3, 3, &[0.7, 0.2, 0.1, 0.3, 0.4, 0.9, 0.5, 0.6, 0.2]);
        let p = crate::linalg::permutation_matrix(&[0, 2, 1]);
        assert_eq!(coefficient_distribution_ratio(&c, &p, 1).unwrap(), 1.0);
        assert_eq!(coefficient_distribution_ratio(&c, &p, 2).unwrap(), 1.0);
        assert_eq!(coefficient_distribution_ratio(&c, &c, 1).unwrap(), 0.0);
    }

    #[test]
    fn ratio_zero_denominator_is_infinite() {
        let c = Matrix::identity(2, 2);
        let t = Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]);
        assert_eq!(coefficient_distribution_ratio(&c, &t, 1).unwrap(), f64::INFINITY);
    }
}
