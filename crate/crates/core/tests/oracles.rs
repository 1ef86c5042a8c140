//! Library results checked against slow, obviously-correct reimplementations.

mod common;

use fuselab::activations::{capture, correlations, scatter, ActivationMatrix};
use fuselab::analysis::{coefficient_distribution_ratio, topk_coefficient_coverage, wasserstein_1d};
use fuselab::cca::{cca_plan, inv_sqrt, Gamma};
use fuselab::linalg::max_abs_diff;
use fuselab::merge::{merge_many, repair_reset, AlignMethod};
use fuselab::model::Activation;
use fuselab::{LayerTransform, Matrix, MlpModel};
use rand::Rng;

use common::{gaussian, median_centered, monomial_copy, permuted_copy, rng};

fn naive_forward(model: &MlpModel, x: &Matrix) -> Vec<Vec<f64>> {
    (0..x.nrows())
        .map(|r| {
            let mut h: Vec<f64> = x.row(r).iter().copied().collect();
            for layer in model.layers() {
                let w = layer.weights();
                let mut out = vec![0.0; w.nrows()];
                for i in 0..w.nrows() {
                    let mut s = layer.bias()[i];
                    for j in 0..w.ncols() {
                        s += w[(i, j)] * h[j];
                    }
                    out[i] = match layer.activation() {
                        Activation::Relu => s.max(0.0),
                        Activation::Identity => s,
                    };
                }
                h = out;
            }
            h
        })
        .collect()
}

#[test]
fn forward_matches_scalar_loops() {
    let model = init_model(5, &[9, 7], 3, 4);
    let x = gaussian(13, 5, 5);
    let fast = model.forward(&x).unwrap();
    for (r, row) in naive_forward(&model, &x).iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            assert!((fast[(r, c)] - v).abs() <= 1e-12);
        }
    }
}

#[test]
fn scatter_matches_triple_loop() {
    let xa = gaussian(17, 4, 1);
    let xb = gaussian(17, 4, 2);
    let a = ActivationMatrix::from_raw(&xa, 0);
    let b = ActivationMatrix::from_raw(&xb, 0);
    let s = scatter(&a, &b, 0.0).unwrap();
    let mean = |x: &Matrix, j: usize| (0..17).map(|i| x[(i, j)]).sum::<f64>() / 17.0;
    for p in 0..4 {
        for q in 0..4 {
            let (mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0);
            for i in 0..17 {
                let (ap, aq) = (xa[(i, p)] - mean(&xa, p), xa[(i, q)] - mean(&xa, q));
                let (bp, bq) = (xb[(i, p)] - mean(&xb, p), xb[(i, q)] - mean(&xb, q));
                aa += ap * aq;
                bb += bp * bq;
                ab += ap * bq;
            }
            assert!((s.s_aa[(p, q)] - aa).abs() <= 1e-10);
            assert!((s.s_bb[(p, q)] - bb).abs() <= 1e-10);
            assert!((s.s_ab[(p, q)] - ab).abs() <= 1e-10);
        }
    }
}

#[test]
fn correlations_match_pairwise_pearson() {
    let xa = gaussian(40, 3, 3);
    let xb = &xa * gaussian(3, 3, 4) + gaussian(40, 3, 5) * 0.5;
    let c = correlations(&ActivationMatrix::from_raw(&xa, 0), &ActivationMatrix::from_raw(&xb, 0)).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let u: Vec<f64> = xa.column(i).iter().copied().collect();
            let v: Vec<f64> = xb.column(j).iter().copied().collect();
            let (mu, mv) = (u.iter().sum::<f64>() / 40.0, v.iter().sum::<f64>() / 40.0);
            let cov: f64 = u.iter().zip(&v).map(|(a, b)| (a - mu) * (b - mv)).sum();
            let su: f64 = u.iter().map(|a| (a - mu).powi(2)).sum::<f64>().sqrt();
            let sv: f64 = v.iter().map(|b| (b - mv).powi(2)).sum::<f64>().sqrt();
            assert!((c.values()[(i, j)] - cov / (su * sv)).abs() <= 1e-12);
        }
    }
}

#[test]
fn dead_neuron_correlations_are_zero() {
    let mut x = gaussian(20, 3, 9);
    x.column_mut(1).fill(4.0);
    let a = ActivationMatrix::from_raw(&x, 0);
    let c = correlations(&a, &a).unwrap();
    assert_eq!(c.dead_rows(), &[false, true, false]);
    assert!(c.values().row(1).iter().all(|&v| v == 0.0));
    assert!(c.values().column(1).iter().all(|&v| v == 0.0));
    assert!(c.is_degenerate(1, 0));
}

#[test]
fn general_transform_inverse_matches_adjugate() {
    let (a, b, c, d) = (2.0, -1.5, 0.25, 3.0);
    let t = LayerTransform::general(Matrix::from_row_slice(2, 2, &[a, b, c, d]), 0).unwrap();
    let det = a * d - b * c;
    let expect = Matrix::from_row_slice(2, 2, &[d / det, -b / det, -c / det, a / det]);
    assert!(max_abs_diff(t.inverse(), &expect) <= 1e-14);
}

#[test]
fn inv_sqrt_squares_to_the_inverse() {
    let g = gaussian(30, 5, 12);
    let s = g.transpose() * &g;
    let w = inv_sqrt(&s, 0.5).unwrap();
    let reg = &s + Matrix::identity(5, 5) * 0.5;
    assert!(max_abs_diff(&(&w * &reg * &w), &Matrix::identity(5, 5)) <= 1e-10);
    assert!(max_abs_diff(&w, &w.transpose()) <= 1e-12);
}

fn sorted_desc_ranks(row: &[f64]) -> Vec<usize> {
    // Selection-sort style: repeatedly take the largest remaining (lowest index on ties).
    let mut left: Vec<usize> = (0..row.len()).collect();
    let mut out = Vec::new();
    while !left.is_empty() {
        let (pos, _) = left
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bp, bv), (p, &j)| if row[j] > bv { (p, row[j]) } else { (bp, bv) });
        out.push(left.remove(pos));
    }
    out
}

#[test]
fn topk_coverage_matches_sort_oracle() {
    let mut r = rng(21);
    for _ in 0..30 {
        let n = r.random_range(2..9);
        let c = Matrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
        let t = Matrix::from_fn(n, n, |_, _| r.random_range(-2.0..2.0));
        let kc = r.random_range(1..=n);
        let kf = r.random_range(1..=n);
        let hits = (0..n)
            .filter(|&i| {
                let crow: Vec<f64> = c.row(i).iter().copied().collect();
                let trow: Vec<f64> = t.row(i).iter().map(|v| v.abs()).collect();
                sorted_desc_ranks(&trow)[..kf].contains(&sorted_desc_ranks(&crow)[kc - 1])
            })
            .count();
        let got = topk_coefficient_coverage(&c, &t, kc, kf).unwrap();
        assert!((got - 100.0 * hits as f64 / n as f64).abs() <= 1e-12);
    }
}

#[test]
fn wasserstein_unequal_sizes_by_fine_quantiles() {
    let p = [0.0, 1.0, 5.0];
    let q = [2.0, 3.0];
    // Evaluate both quantile functions on a grid fine enough to be exact
    // (all breakpoints are multiples of 1/6).
    let steps = 6000;
    let quantile = |s: &[f64], u: f64| s[((u * s.len() as f64) as usize).min(s.len() - 1)];
    let oracle: f64 = (0..steps)
        .map(|k| {
            let u = (k as f64 + 0.5) / steps as f64;
            (quantile(&p, u) - quantile(&q, u)).abs()
        })
        .sum::<f64>()
        / steps as f64;
    assert!((wasserstein_1d(&p, &q).unwrap() - oracle).abs() <= 1e-9);
    assert_eq!(wasserstein_1d(&[0.0, 1.0], &[1.0, 2.0]).unwrap(), 1.0);
    assert_eq!(wasserstein_1d(&[0.0], &[5.0]).unwrap(), 5.0);
}

#[test]
fn distribution_ratio_examples() {
    let c = Matrix::from_row_slice(2, 2, &[0.9, 0.1, 0.2, 0.7]);
    assert_eq!(coefficient_distribution_ratio(&c, &c, 1).unwrap(), 0.0);
    let p = Matrix::identity(2, 2);
    assert!((coefficient_distribution_ratio(&c, &p, 1).unwrap() - 1.0).abs() <= 1e-12);
}

#[test]
fn cca_recovers_permutation_and_rescaling() {
    let probes = gaussian(1500, 6, 31);
    let a = median_centered(&init_model(6, &[12, 10], 3, 30), &probes);
    let (b, pd) = monomial_copy(&a, 32, 0.5, 2.0);
    let plan = cca_plan(&a, &b, &probes, Gamma::Absolute(1e-8)).unwrap().plan;
    for (t, m) in plan.transforms().iter().zip(pd.transforms()) {
        let n = m.dim();
        assert!(max_abs_diff(&(t.forward() * m.forward()), &Matrix::identity(n, n)) <= 1e-5);
    }
    let (c, pi) = permuted_copy(&a, 33);
    let plan = cca_plan(&a, &c, &probes, Gamma::Absolute(1e-8)).unwrap().plan;
    for (t, m) in plan.transforms().iter().zip(pi.transforms()) {
        assert!(max_abs_diff(t.forward(), &m.forward().transpose()) <= 1e-5);
    }
    let merged = merge_many(&a, &[b, c], AlignMethod::Cca(Gamma::Absolute(1e-8)), &probes).unwrap();
    assert!(max_abs_diff(&merged.forward(&probes).unwrap(), &a.forward(&probes).unwrap()) <= 1e-5);
}

#[test]
fn permute_merge_of_permuted_copies_is_the_reference() {
    let probes = gaussian(300, 6, 41);
    let a = median_centered(&init_model(6, &[12, 10], 3, 40), &probes);
    let others: Vec<MlpModel> = (0..3).map(|k| permuted_copy(&a, 50 + k).0).collect();
    let merged = merge_many(&a, &others, AlignMethod::Permute, &probes).unwrap();
    assert!(merged.max_param_diff(&a) <= 1e-8);
}

#[test]
fn repair_matches_reference_statistics() {
    let probes = gaussian(300, 6, 61);
    let a = init_model(6, &[12, 10], 3, 60);
    let b = init_model(6, &[12, 10], 3, 62);
    let merged = merge_many(&a, &[b], AlignMethod::Direct, &probes).unwrap();
    let fixed = repair_reset(&merged, &a, &probes).unwrap();
    let got = fixed.model.forward_trace(&probes).unwrap();
    let want = a.forward_trace(&probes).unwrap();
    for l in 0..2 {
        let (mg, sg) = fuselab::linalg::column_mean_std(&got[l].pre);
        let (mr, sr) = fuselab::linalg::column_mean_std(&want[l].pre);
        for j in 0..mg.len() {
            if fixed.skipped.contains(&(l, j)) {
                continue;
            }
            assert!((mg[j] - mr[j]).abs() <= 1e-6);
            assert!((sg[j] - sr[j]).abs() <= 1e-6);
        }
    }
    // Output layer untouched.
    assert_eq!(fixed.model.layers()[2], merged.layers()[2]);
    let acts = capture(&fixed.model, &probes).unwrap();
    assert_eq!(acts.len(), 2);
}

fn init_model(d: usize, widths: &[usize], k: usize, seed: u64) -> MlpModel {
    fuselab::trainer::init_model(d, widths, k, seed).unwrap()
}
