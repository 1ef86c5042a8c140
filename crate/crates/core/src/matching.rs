//! Baseline alignments: one-to-one neuron matching by linear sum
//! assignment on activation correlations, and the identity plan used by
//! direct averaging.

use crate::activations::{capture, correlations, CorrelationMatrix};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{AlignmentPlan, LayerTransform, MethodTag, MlpModel};

/// `mapping[i]` is the model-B neuron matched to model-A neuron `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub mapping: Vec<usize>,
    pub total_score: f64,
}

/// Maximize `Σ_i C[i, mapping[i]]` exactly.
///
/// Solved as a min-cost assignment on `-C` with the shortest augmenting
/// path Hungarian method (O(n³)). Among all optimal assignments the
/// lexicographically smallest mapping is returned: every optimal assignment
/// lives on the zero-reduced-cost edges of the final dual solution, so the
/// rows are fixed one at a time to their smallest feasible tight column.
pub fn linear_sum_assignment(c: &CorrelationMatrix) -> Result<Assignment> {
    solve_max(c.values())
}

pub fn solve_max(scores: &Matrix) -> Result<Assignment> {
    if !scores.is_square() {
        return Err(Error::Validation(format!(
            "assignment needs a square matrix, got {}x{}",
            scores.nrows(),
            scores.ncols()
        )));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("assignment matrix has non-finite entries".into()));
    }
    let n = scores.nrows();
    if n == 0 {
        return Ok(Assignment {
            mapping: Vec::new(),
            total_score: 0.0,
        });
    }
    let cost = |i: usize, j: usize| -scores[(i, j)];
    let (mut row_to_col, u, v) = hungarian(n, cost);

    let scale = scores.amax().max(1.0);
    let tol = 1e-11 * scale;
    let tight: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j == row_to_col[i] || cost(i, j) - u[i] - v[j] <= tol)
                .collect()
        })
        .collect();
    canonicalize(&tight, &mut row_to_col);

    let total_score = row_to_col.iter().enumerate().map(|(i, &j)| scores[(i, j)]).sum();
    Ok(Assignment {
        mapping: row_to_col,
        total_score,
    })
}

/// Minimum-cost perfect matching. Returns the row→column assignment and
/// the row and column potentials (reduced cost `cost - u_i - v_j ≥ 0`).
fn hungarian(n: usize, cost: impl Fn(usize, usize) -> f64) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    // 1-based internally; index 0 is the virtual source column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[owner[j] - 1] = j - 1;
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Rewrite a perfect matching on the tight graph into the lexicographically
/// smallest one.
fn canonicalize(tight: &[Vec<usize>], row_to_col: &mut [usize]) {
    let n = row_to_col.len();
    let mut col_to_row = vec![0; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_to_row[j] = i;
    }
    for i in 0..n {
        for &j in &tight[i] {
            if j >= row_to_col[i] {
                break;
            }
            let holder = col_to_row[j];
            if holder < i {
                continue;
            }
            // Row i takes j; its old column becomes free and `holder` must
            // reach it along an alternating path through rows after i.
            let freed = row_to_col[i];
            let mut r2c = row_to_col.to_vec();
            let mut c2r = col_to_row.clone();
            r2c[i] = j;
            c2r[j] = i;
            let mut visited = vec![false; n];
            visited[j] = true;
            if reroute(holder, i, freed, tight, &mut r2c, &mut c2r, &mut visited) {
                row_to_col.copy_from_slice(&r2c);
                col_to_row = c2r;
                break;
            }
        }
    }
}

fn reroute(
    row: usize,
    fixed_upto: usize,
    freed: usize,
    tight: &[Vec<usize>],
    r2c: &mut [usize],
    c2r: &mut [usize],
    visited: &mut [bool],
) -> bool {
    for &c in &tight[row] {
        if visited[c] {
            continue;
        }
        visited[c] = true;
        let ok = c == freed || {
            let o = c2r[c];
            o > fixed_upto && reroute(o, fixed_upto, freed, tight, r2c, c2r, visited)
        };
        if ok {
            r2c[row] = c;
            c2r[c] = row;
            return true;
        }
    }
    false
}

/// Permute alignment of B onto A with the statistics it was built from.
#[derive(Debug, Clone)]
pub struct PermuteAlignment {
    pub plan: AlignmentPlan,
    pub correlations: Vec<CorrelationMatrix>,
    pub assignments: Vec<Assignment>,
}

pub fn permute_alignment(model_a: &MlpModel, model_b: &MlpModel, probes: &Matrix) -> Result<PermuteAlignment> {
    if !model_a.same_architecture(model_b) {
        return Err(Error::shape(None, "permute alignment needs two models of the same architecture"));
    }
    let acts_a = capture(model_a, probes)?;
    let acts_b = capture(model_b, probes)?;
    let mut transforms = Vec::with_capacity(acts_a.len());
    let mut corrs = Vec::with_capacity(acts_a.len());
    let mut assignments = Vec::with_capacity(acts_a.len());
    for (i, (a, b)) in acts_a.iter().zip(&acts_b).enumerate() {
        let c = correlations(a, b)?;
        let assignment = linear_sum_assignment(&c)?;
        transforms.push(LayerTransform::permutation(&assignment.mapping, i)?);
        corrs.push(c);
        assignments.push(assignment);
    }
    Ok(PermuteAlignment {
        plan: AlignmentPlan::new(transforms, MethodTag::Permute)?,
        correlations: corrs,
        assignments,
    })
}

pub fn permute_plan(model_a: &MlpModel, model_b: &MlpModel, probes: &Matrix) -> Result<AlignmentPlan> {
    permute_alignment(model_a, model_b, probes).map(|a| a.plan)
}

pub fn identity_plan(model: &MlpModel) -> AlignmentPlan {
    AlignmentPlan::identity(&model.hidden_widths())
}
