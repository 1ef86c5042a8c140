#![allow(dead_code)]

use fuselab::linalg::permutation_matrix;
use fuselab::model::TransformKind;
use fuselab::{apply_plan, AlignmentPlan, LayerTransform, Matrix, MethodTag, MlpModel};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut r = rng(seed);
    Matrix::from_fn(rows, cols, |_, _| r.sample(StandardNormal))
}

pub fn random_mapping(n: usize, r: &mut ChaCha8Rng) -> Vec<usize> {
    let mut m: Vec<usize> = (0..n).collect();
    m.shuffle(r);
    m
}

/// `B = Π(A)` with a fresh random permutation per hidden layer.
pub fn permuted_copy(a: &MlpModel, seed: u64) -> (MlpModel, AlignmentPlan) {
    let mut r = rng(seed);
    let transforms = a
        .hidden_widths()
        .iter()
        .enumerate()
        .map(|(l, &n)| LayerTransform::permutation(&random_mapping(n, &mut r), l).unwrap())
        .collect();
    let plan = AlignmentPlan::new(transforms, MethodTag::Permute).unwrap();
    (apply_plan(a, &plan).unwrap(), plan)
}

/// `B = (Π·D)(A)` with D positive diagonal, entries in `[lo, hi]`.
pub fn monomial_copy(a: &MlpModel, seed: u64, lo: f64, hi: f64) -> (MlpModel, AlignmentPlan) {
    let mut r = rng(seed);
    let transforms = a
        .hidden_widths()
        .iter()
        .enumerate()
        .map(|(l, &n)| {
            let p = permutation_matrix(&random_mapping(n, &mut r));
            let d = Matrix::from_diagonal(&fuselab::Vector::from_fn(n, |_, _| r.random_range(lo..=hi)));
            let t = LayerTransform::general(p * d, l).unwrap();
            assert_eq!(t.kind(), TransformKind::General);
            t
        })
        .collect();
    let plan = AlignmentPlan::new(transforms, MethodTag::Cca).unwrap();
    (apply_plan(a, &plan).unwrap(), plan)
}

/// Shift every hidden bias so the neuron's pre-activation median on
/// `probes` is zero: each neuron fires on about half the probes, so none is
/// dead and every hidden feature is identifiable from activations.
pub fn median_centered(model: &MlpModel, probes: &Matrix) -> MlpModel {
    use fuselab::model::DenseLayer;
    let mut layers = model.layers().to_vec();
    let mut input = probes.clone();
    for l in 0..model.num_hidden() {
        let pre = layers[l].pre_activation(&input);
        let (w, mut b, act) = layers[l].clone().into_parts();
        for j in 0..pre.ncols() {
            let mut col: Vec<f64> = pre.column(j).iter().copied().collect();
            col.sort_by(f64::total_cmp);
            b[j] -= col[col.len() / 2];
        }
        layers[l] = DenseLayer::new(w, b, act).unwrap();
        input = layers[l].pre_activation(&input).map(|v| v.max(0.0));
    }
    MlpModel::new(layers, model.input_dim(), None).unwrap()
}
