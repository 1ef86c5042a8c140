//! Regularized CCA in closed form and the CCA Merge alignment transforms.
//!
//! With whitening `Wa = (S_aa + γI)^{-1/2}`, `Wb = (S_bb + γI)^{-1/2}` and
//! `U·Σ·Vᵀ = SVD(Wa·S_ab·Wb)`, the canonical projections are `P_a = Wa·U`
//! and `P_b = Wb·V`. Model B's layer is brought into A's space with
//! `T = (P_b·P_a⁻¹)ᵀ`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{SymmetricEigen, SVD};

use crate::activations::{capture, scatter, ScatterStats};
use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::model::{AlignmentPlan, LayerTransform, MethodTag, MlpModel};

/// Eigenvalues of the regularized scatter are clamped to at least this.
pub const EIGEN_FLOOR: f64 = 1e-12;
/// Relative factor of the default gamma.
pub const DEFAULT_RELATIVE_GAMMA: f64 = 1e-3;
/// Relative factors searched when no grid is given.
pub const DEFAULT_GAMMA_GRID: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];

const SYMMETRY_TOL: f64 = 1e-8;
const SVD_MAX_ITER: usize = 10_000;

/// Ridge added to both scatter matrices.
///
/// `Absolute(g)` adds `g·I` as is. `Relative(f)` adds
/// `f · mean(diag(S_aa + S_bb) / 2)·I`, resolved separately for each layer.
/// Textual form: `0.001` is absolute, `1e-3x` is relative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Absolute(f64),
    Relative(f64),
}

impl Default for Gamma {
    fn default() -> Self {
        Gamma::Relative(DEFAULT_RELATIVE_GAMMA)
    }
}

impl Gamma {
    pub fn resolve(&self, stats: &ScatterStats) -> f64 {
        match *self {
            Gamma::Absolute(g) => g,
            Gamma::Relative(f) => f * stats.scale(),
        }
    }

    fn raw(&self) -> f64 {
        match *self {
            Gamma::Absolute(g) | Gamma::Relative(g) => g,
        }
    }

    pub fn default_grid() -> Vec<Gamma> {
        DEFAULT_GAMMA_GRID.iter().map(|&f| Gamma::Relative(f)).collect()
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Absolute(g) => write!(f, "{g:e}"),
            Gamma::Relative(g) => write!(f, "{g:e}x"),
        }
    }
}

impl FromStr for Gamma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (num, relative) = match s.strip_suffix('x') {
            Some(n) => (n, true),
            None => (s, false),
        };
        let v: f64 = num
            .parse()
            .map_err(|_| Error::Config(format!("cannot parse gamma `{s}`")))?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("gamma must be finite and nonnegative, got `{s}`")));
        }
        Ok(if relative { Gamma::Relative(v) } else { Gamma::Absolute(v) })
    }
}

/// `(S + γI)^{-1/2}` through a symmetric eigendecomposition.
pub fn inv_sqrt(s: &Matrix, gamma: f64) -> Result<Matrix> {
    let scale = s.amax().max(1.0);
    if !linalg::is_symmetric(s, SYMMETRY_TOL * scale) {
        return Err(Error::Validation("inv_sqrt needs a symmetric matrix".into()));
    }
    if !linalg::all_finite(s) {
        return Err(Error::numerical(None, "scatter matrix has non-finite entries"));
    }
    let n = s.nrows();
    let reg = s + Matrix::identity(n, n) * gamma;
    let eig = SymmetricEigen::new(reg);
    let scaled = Vector::from_iterator(n, eig.eigenvalues.iter().map(|&l| l.max(EIGEN_FLOOR).powf(-0.5)));
    let q = &eig.eigenvectors;
    let mut out = q * Matrix::from_diagonal(&scaled) * q.transpose();
    out = (&out + out.transpose()) * 0.5;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcaSolution {
    pub p_a: Matrix,
    pub p_b: Matrix,
    /// Canonical correlations, nonincreasing, clamped to `[0, 1]`.
    pub correlations: Vector,
    /// The absolute gamma that was added to both scatter matrices.
    pub gamma: f64,
    pub layer_index: usize,
}

pub fn solve_cca(stats: &ScatterStats) -> Result<CcaSolution> {
    let layer = stats.layer_index;
    let wa = inv_sqrt(&stats.s_aa, stats.gamma).map_err(|e| at_layer(e, layer))?;
    let wb = inv_sqrt(&stats.s_bb, stats.gamma).map_err(|e| at_layer(e, layer))?;
    let whitened = &wa * &stats.s_ab * &wb;
    if !linalg::all_finite(&whitened) {
        return Err(Error::numerical(layer, "whitened cross-scatter is not finite"));
    }
    let n = whitened.nrows();
    let svd = SVD::try_new(whitened, true, true, f64::EPSILON, SVD_MAX_ITER)
        .ok_or_else(|| Error::numerical(layer, "SVD did not converge"))?;
    let u = svd.u.ok_or_else(|| Error::numerical(layer, "SVD returned no U"))?;
    let v = svd
        .v_t
        .ok_or_else(|| Error::numerical(layer, "SVD returned no V"))?
        .transpose();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut u_sorted = Matrix::zeros(n, n);
    let mut v_sorted = Matrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        // Sign convention: the largest-magnitude entry of each U column is positive.
        let col = u.column(src);
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, 0.0_f64), |best, (i, &x)| if x.abs() > best.1.abs() { (i, x) } else { best })
            .0;
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        u_sorted.set_column(k, &(col * sign));
        v_sorted.set_column(k, &(v.column(src) * sign));
    }
    let correlations = Vector::from_iterator(n, order.iter().map(|&i| svd.singular_values[i].clamp(0.0, 1.0)));
    Ok(CcaSolution {
        p_a: wa * u_sorted,
        p_b: wb * v_sorted,
        correlations,
        gamma: stats.gamma,
        layer_index: layer,
    })
}

fn at_layer(e: Error, layer: usize) -> Error {
    match e {
        Error::Numerical { layer: None, detail } => Error::Numerical {
            layer: Some(layer),
            detail,
        },
        other => other,
    }
}

/// `T = (P_b·P_a⁻¹)ᵀ`, aligning model B's neurons to model A's.
pub fn build_transform(sol: &CcaSolution, layer_index: usize) -> Result<LayerTransform> {
    let (pa_inv, rcond) = linalg::invert(&sol.p_a, Some(layer_index))
        .map_err(|_| near_singular(layer_index, 0.0))?;
    if rcond < linalg::MIN_RCOND {
        return Err(near_singular(layer_index, rcond));
    }
    let forward = (&sol.p_b * pa_inv).transpose();
    LayerTransform::general(forward, layer_index).map_err(|e| match e {
        Error::Numerical { detail, .. } => Error::numerical(
            layer_index,
            format!("{detail}; try a larger gamma"),
        ),
        other => other,
    })
}

fn near_singular(layer: usize, rcond: f64) -> Error {
    Error::numerical(
        layer,
        format!("CCA projection for model A is near-singular (rcond {rcond:.3e}); try a larger gamma"),
    )
}

/// A CCA alignment of model B onto model A with its per-layer solutions.
#[derive(Debug, Clone)]
pub struct CcaAlignment {
    pub plan: AlignmentPlan,
    pub solutions: Vec<CcaSolution>,
}

pub fn cca_plan(model_a: &MlpModel, model_b: &MlpModel, probes: &Matrix, gamma: Gamma) -> Result<CcaAlignment> {
    if !model_a.same_architecture(model_b) {
        return Err(Error::shape(None, "CCA alignment needs two models of the same architecture"));
    }
    let acts_a = capture(model_a, probes)?;
    let acts_b = capture(model_b, probes)?;
    let mut transforms = Vec::with_capacity(acts_a.len());
    let mut solutions = Vec::with_capacity(acts_a.len());
    for (i, (a, b)) in acts_a.iter().zip(&acts_b).enumerate() {
        let stats = scatter(a, b, 0.0)?;
        let g = gamma.resolve(&stats);
        let sol = solve_cca(&stats.with_gamma(g))?;
        transforms.push(build_transform(&sol, i)?);
        solutions.push(sol);
    }
    Ok(CcaAlignment {
        plan: AlignmentPlan::new(transforms, MethodTag::Cca)?,
        solutions,
    })
}

/// Mean merged accuracy on `eval_ds` for each candidate; failed merges score `-∞`.
pub fn score_gammas(
    candidates: &[Gamma],
    model_pairs: &[(MlpModel, MlpModel)],
    probes: &Matrix,
    eval_ds: &Dataset,
) -> Vec<f64> {
    candidates
        .iter()
        .map(|&g| {
            let mut total = 0.0;
            for (a, b) in model_pairs {
                let acc = cca_plan(a, b, probes, g)
                    .and_then(|al| crate::merge::merge_pair(a, b, &al.plan))
                    .and_then(|merged| crate::trainer::cross_entropy_accuracy(&merged, eval_ds));
                match acc {
                    Ok((_, acc)) => total += acc,
                    Err(_) => return f64::NEG_INFINITY,
                }
            }
            total / model_pairs.len() as f64
        })
        .collect()
}

/// Candidate with the best mean merged accuracy on held-out pairs; ties go
/// to the larger gamma.
pub fn select_gamma(
    candidates: &[Gamma],
    model_pairs: &[(MlpModel, MlpModel)],
    probes: &Matrix,
    eval_ds: &Dataset,
) -> Result<Gamma> {
    if candidates.is_empty() || model_pairs.is_empty() {
        return Err(Error::Selection("need at least one candidate and one model pair".into()));
    }
    let scores = score_gammas(candidates, model_pairs, probes, eval_ds);
    let mut best: Option<(Gamma, f64)> = None;
    for (&g, &s) in candidates.iter().zip(&scores) {
        if s == f64::NEG_INFINITY {
            continue;
        }
        best = match best {
            Some((bg, bs)) if bs > s || (bs == s && bg.raw() >= g.raw()) => Some((bg, bs)),
            _ => Some((g, s)),
        };
    }
    best.map(|(g, _)| g)
        .ok_or_else(|| Error::Selection("every gamma candidate failed numerically".into()))
}
