//! Hidden-layer activations on a probe set and the centered statistics
//! computed from them.

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::model::MlpModel;

/// Columns with variance below this are treated as dead neurons.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Centered `m×n` post-activation outputs of one hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    values: Matrix,
    column_means: Vector,
    layer_index: usize,
}

impl ActivationMatrix {
    /// Center `raw` column-wise, remembering the means.
    pub fn from_raw(raw: &Matrix, layer_index: usize) -> Self {
        let column_means = linalg::column_means(raw);
        let values = linalg::center_columns(raw, &column_means);
        Self {
            values,
            column_means,
            layer_index,
        }
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn column_means(&self) -> &Vector {
        &self.column_means
    }

    pub fn layer_index(&self) -> usize {
        self.layer_index
    }

    pub fn m(&self) -> usize {
        self.values.nrows()
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    /// Population variance of each column.
    pub fn variances(&self) -> Vector {
        let m = self.m() as f64;
        Vector::from_iterator(
            self.width(),
            self.values.column_iter().map(|c| c.norm_squared() / m),
        )
    }

    pub fn degenerate_columns(&self) -> Vec<bool> {
        self.variances().iter().map(|&v| v < DEGENERATE_VARIANCE).collect()
    }
}

/// Post-activation outputs of every hidden layer, centered per column.
pub fn capture(model: &MlpModel, probes: &Matrix) -> Result<Vec<ActivationMatrix>> {
    if probes.nrows() < 2 {
        return Err(Error::Config(format!(
            "activation statistics need at least 2 probes, got {}",
            probes.nrows()
        )));
    }
    let traces = model.forward_trace(probes)?;
    Ok(traces[..model.num_hidden()]
        .iter()
        .enumerate()
        .map(|(i, t)| ActivationMatrix::from_raw(&t.post, i))
        .collect())
}

/// Raw (unregularized) scatter matrices of a pair of centered activations.
/// `gamma` is carried along and added only where the statistics are
/// consumed, as `S + γI`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterStats {
    pub s_aa: Matrix,
    pub s_bb: Matrix,
    pub s_ab: Matrix,
    pub gamma: f64,
    pub m: usize,
    pub layer_index: usize,
}

impl ScatterStats {
    /// `mean(diag(S_aa + S_bb) / 2)`, the scale relative gammas refer to.
    pub fn scale(&self) -> f64 {
        let n = self.s_aa.nrows() as f64;
        (self.s_aa.trace() + self.s_bb.trace()) / (2.0 * n)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn width(&self) -> usize {
        self.s_aa.nrows()
    }
}

pub fn scatter(a: &ActivationMatrix, b: &ActivationMatrix, gamma: f64) -> Result<ScatterStats> {
    check_pair(a, b)?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Config(format!("gamma must be finite and nonnegative, got {gamma}")));
    }
    let xa = a.values();
    let xb = b.values();
    let s_aa = symmetrize(xa.tr_mul(xa));
    let s_bb = symmetrize(xb.tr_mul(xb));
    let s_ab = xa.tr_mul(xb);
    Ok(ScatterStats {
        s_aa,
        s_bb,
        s_ab,
        gamma,
        m: a.m(),
        layer_index: a.layer_index(),
    })
}

fn symmetrize(s: Matrix) -> Matrix {
    (&s + s.transpose()) * 0.5
}

fn check_pair(a: &ActivationMatrix, b: &ActivationMatrix) -> Result<()> {
    if a.m() != b.m() {
        return Err(Error::shape(
            a.layer_index(),
            format!("probe counts differ: {} vs {}", a.m(), b.m()),
        ));
    }
    if a.width() != b.width() {
        return Err(Error::shape(
            a.layer_index(),
            format!("layer widths differ: {} vs {}", a.width(), b.width()),
        ));
    }
    Ok(())
}

/// Pearson correlations `C[i, j] = corr(a_i, b_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    values: Matrix,
    dead_a: Vec<bool>,
    dead_b: Vec<bool>,
}

impl CorrelationMatrix {
    /// Wrap an arbitrary score matrix with no degenerate neurons.
    pub fn from_values(values: Matrix) -> Self {
        let (r, c) = values.shape();
        Self {
            values,
            dead_a: vec![false; r],
            dead_b: vec![false; c],
        }
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn is_degenerate(&self, i: usize, j: usize) -> bool {
        self.dead_a[i] || self.dead_b[j]
    }

    pub fn dead_rows(&self) -> &[bool] {
        &self.dead_a
    }

    pub fn dead_cols(&self) -> &[bool] {
        &self.dead_b
    }

    pub fn transpose(&self) -> Self {
        Self {
            values: self.values.transpose(),
            dead_a: self.dead_b.clone(),
            dead_b: self.dead_a.clone(),
        }
    }
}

pub fn correlations(a: &ActivationMatrix, b: &ActivationMatrix) -> Result<CorrelationMatrix> {
    check_pair(a, b)?;
    if a.m() < 2 {
        return Err(Error::Config("correlations need at least 2 probes".into()));
    }
    let m = a.m() as f64;
    let var_a = a.variances();
    let var_b = b.variances();
    let dead_a: Vec<bool> = var_a.iter().map(|&v| v < DEGENERATE_VARIANCE).collect();
    let dead_b: Vec<bool> = var_b.iter().map(|&v| v < DEGENERATE_VARIANCE).collect();
    let cov = a.values().tr_mul(b.values()) / m;
    let values = Matrix::from_fn(a.width(), b.width(), |i, j| {
        if dead_a[i] || dead_b[j] {
            0.0
        } else {
            cov[(i, j)] / (var_a[i].sqrt() * var_b[j].sqrt())
        }
    });
    Ok(CorrelationMatrix {
        values,
        dead_a,
        dead_b,
    })
}
