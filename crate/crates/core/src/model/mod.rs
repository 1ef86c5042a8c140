//! Feed-forward MLPs and the alignment transforms applied to them.
//!
//! A model is an ordered chain of dense layers `x_i = σ(W_i·x_{i-1} + b_i)`.
//! Every hidden layer is a merging layer: an [`AlignmentPlan`] carries one
//! invertible [`LayerTransform`] per hidden layer, and applying it rewrites
//! `W_i ← T_i·W_i·T_{i-1}⁻¹`, `b_i ← T_i·b_i`. The output layer only receives
//! the inverse of the last hidden transform on its input side.

mod io;

pub use io::{load_model, read_model, save_model, write_model, MODEL_FORMAT_VERSION};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// Tolerance on `forward·inverse == I` for every transform.
pub const TRANSFORM_INVERSE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    fn apply(self, z: &Matrix) -> Matrix {
        match self {
            Activation::Relu => z.map(|v| v.max(0.0)),
            Activation::Identity => z.clone(),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::parse("activation", format!("unknown activation `{other}`"))),
        }
    }
}

/// One dense layer: `weights` is `out × in`, `bias` has length `out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: Matrix,
    bias: Vector,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vector, activation: Activation) -> Result<Self> {
        if bias.len() != weights.nrows() {
            return Err(Error::Validation(format!(
                "bias length {} does not match weight rows {}",
                bias.len(),
                weights.nrows()
            )));
        }
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::Validation("layer has an empty weight matrix".into()));
        }
        if !linalg::all_finite(&weights) || bias.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("layer has non-finite parameters".into()));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &Vector {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    /// Pre-activations `X·Wᵀ + 1·bᵀ` for row-major samples `x`.
    pub fn pre_activation(&self, x: &Matrix) -> Matrix {
        let mut z = x * self.weights.transpose();
        for mut row in z.row_iter_mut() {
            for (v, b) in row.iter_mut().zip(self.bias.iter()) {
                *v += b;
            }
        }
        z
    }

    pub fn into_parts(self) -> (Matrix, Vector, Activation) {
        (self.weights, self.bias, self.activation)
    }
}

/// Pre- and post-activation outputs of one layer over a batch.
#[derive(Debug, Clone)]
pub struct LayerTrace {
    pub pre: Matrix,
    pub post: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<DenseLayer>,
    input_dim: usize,
    seed_tag: Option<String>,
}

impl MlpModel {
    pub fn new(layers: Vec<DenseLayer>, input_dim: usize, seed_tag: Option<String>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Validation("input_dim must be positive".into()));
        }
        if layers.len() < 2 {
            return Err(Error::Validation(format!(
                "a model needs at least 2 layers, got {}",
                layers.len()
            )));
        }
        let mut prev = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.in_dim() != prev {
                return Err(Error::Validation(format!(
                    "layer {i} expects {} inputs but receives {prev}",
                    layer.in_dim()
                )));
            }
            prev = layer.out_dim();
        }
        if layers.last().map(DenseLayer::activation) != Some(Activation::Identity) {
            return Err(Error::Validation("final layer must use the identity activation".into()));
        }
        Ok(Self {
            layers,
            input_dim,
            seed_tag,
        })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(DenseLayer::out_dim).unwrap_or(0)
    }

    pub fn seed_tag(&self) -> Option<&str> {
        self.seed_tag.as_deref()
    }

    pub fn with_seed_tag(mut self, tag: Option<String>) -> Self {
        self.seed_tag = tag;
        self
    }

    pub fn num_hidden(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.num_hidden()].iter().map(DenseLayer::out_dim).collect()
    }

    /// Widths of every layer including the input, e.g. `[16, 64, 64, 4]`.
    pub fn architecture(&self) -> Vec<usize> {
        std::iter::once(self.input_dim)
            .chain(self.layers.iter().map(DenseLayer::out_dim))
            .collect()
    }

    pub fn same_architecture(&self, other: &MlpModel) -> bool {
        self.architecture() == other.architecture()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.activation == b.activation)
    }

    fn check_input(&self, inputs: &Matrix) -> Result<()> {
        if inputs.ncols() != self.input_dim {
            return Err(Error::shape(
                0,
                format!("model expects {} input features, got {}", self.input_dim, inputs.ncols()),
            ));
        }
        if !linalg::all_finite(inputs) {
            return Err(Error::Validation("inputs contain non-finite values".into()));
        }
        Ok(())
    }

    /// Logits for each input row.
    pub fn forward(&self, inputs: &Matrix) -> Result<Matrix> {
        self.check_input(inputs)?;
        let mut x = inputs.clone();
        for layer in &self.layers {
            x = layer.activation.apply(&layer.pre_activation(&x));
        }
        Ok(x)
    }

    /// Pre- and post-activation outputs of every layer, in order.
    pub fn forward_trace(&self, inputs: &Matrix) -> Result<Vec<LayerTrace>> {
        self.check_input(inputs)?;
        let mut traces: Vec<LayerTrace> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let x = traces.last().map(|t| &t.post).unwrap_or(inputs);
            let pre = layer.pre_activation(x);
            let post = layer.activation.apply(&pre);
            traces.push(LayerTrace { pre, post });
        }
        Ok(traces)
    }

    /// Elementwise combination of two same-architecture models.
    pub fn zip_with(&self, other: &MlpModel, f: impl Fn(f64, f64) -> f64) -> Result<MlpModel> {
        if !self.same_architecture(other) {
            return Err(Error::shape(
                None,
                format!("architectures differ: {:?} vs {:?}", self.architecture(), other.architecture()),
            ));
        }
        let layers = self
            .layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| {
                DenseLayer::new(
                    a.weights.zip_map(&b.weights, &f),
                    a.bias.zip_map(&b.bias, &f),
                    a.activation,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        MlpModel::new(layers, self.input_dim, None)
    }

    /// Largest absolute parameter difference against a same-architecture model.
    pub fn max_param_diff(&self, other: &MlpModel) -> f64 {
        assert!(self.same_architecture(other), "max_param_diff on different architectures");
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| {
                let bias = a
                    .bias
                    .iter()
                    .zip(b.bias.iter())
                    .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()));
                linalg::max_abs_diff(&a.weights, &b.weights).max(bias)
            })
            .fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| linalg::all_finite(&l.weights) && l.bias.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Permutation,
    General,
}

/// Invertible `n×n` map applied to one hidden layer's outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTransform {
    forward: Matrix,
    inverse: Matrix,
    kind: TransformKind,
    layer_index: usize,
}

impl LayerTransform {
    pub fn identity(n: usize, layer_index: usize) -> Self {
        Self {
            forward: Matrix::identity(n, n),
            inverse: Matrix::identity(n, n),
            kind: TransformKind::Permutation,
            layer_index,
        }
    }

    /// Permutation with `forward[i, mapping[i]] = 1`: output neuron `i`
    /// takes the source neuron `mapping[i]`.
    pub fn permutation(mapping: &[usize], layer_index: usize) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &j in mapping {
            if j >= n || std::mem::replace(&mut seen[j], true) {
                return Err(Error::Validation(format!(
                    "mapping {mapping:?} is not a permutation of 0..{n}"
                )));
            }
        }
        let forward = linalg::permutation_matrix(mapping);
        let inverse = forward.transpose();
        Ok(Self {
            forward,
            inverse,
            kind: TransformKind::Permutation,
            layer_index,
        })
    }

    /// General invertible transform; the inverse is computed here and the
    /// construction fails on near-singular input.
    pub fn general(forward: Matrix, layer_index: usize) -> Result<Self> {
        let (mut inverse, rcond) = linalg::invert(&forward, Some(layer_index))?;
        if rcond < linalg::MIN_RCOND {
            return Err(Error::numerical(
                layer_index,
                format!("transform is near-singular (rcond {rcond:.3e})"),
            ));
        }
        let n = forward.nrows();
        let eye = Matrix::identity(n, n);
        let residual = linalg::max_abs_diff(&(&forward * &inverse), &eye);
        if residual > 1e-12 {
            // one Newton-Schulz refinement step
            inverse = &inverse * (&eye * 2.0 - &forward * &inverse);
        }
        let residual = linalg::max_abs_diff(&(&forward * &inverse), &eye);
        if residual > TRANSFORM_INVERSE_TOL {
            return Err(Error::numerical(
                layer_index,
                format!("transform inverse residual {residual:.3e} exceeds tolerance"),
            ));
        }
        Ok(Self {
            forward,
            inverse,
            kind: TransformKind::General,
            layer_index,
        })
    }

    pub fn forward(&self) -> &Matrix {
        &self.forward
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn layer_index(&self) -> usize {
        self.layer_index
    }

    pub fn dim(&self) -> usize {
        self.forward.nrows()
    }

    /// The transform undoing this one.
    pub fn inverted(&self) -> Self {
        Self {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
            kind: self.kind,
            layer_index: self.layer_index,
        }
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn compose(&self, first: &LayerTransform) -> Result<Self> {
        if self.dim() != first.dim() {
            return Err(Error::shape(self.layer_index, "cannot compose transforms of different sizes"));
        }
        let kind = match (self.kind, first.kind) {
            (TransformKind::Permutation, TransformKind::Permutation) => TransformKind::Permutation,
            _ => TransformKind::General,
        };
        Ok(Self {
            forward: &self.forward * &first.forward,
            inverse: &first.inverse * &self.inverse,
            kind,
            layer_index: self.layer_index,
        })
    }

    /// For permutation transforms, `mapping[i]` is the source neuron sent to `i`.
    pub fn mapping(&self) -> Option<Vec<usize>> {
        if self.kind != TransformKind::Permutation {
            return None;
        }
        Some(
            self.forward
                .row_iter()
                .map(|row| row.iter().position(|&v| v == 1.0).expect("permutation row without a 1"))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodTag {
    Identity,
    Permute,
    Cca,
}

impl MethodTag {
    pub fn name(self) -> &'static str {
        match self {
            MethodTag::Identity => "direct",
            MethodTag::Permute => "permute",
            MethodTag::Cca => "cca",
        }
    }
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" | "identity" => Ok(MethodTag::Identity),
            "permute" => Ok(MethodTag::Permute),
            "cca" => Ok(MethodTag::Cca),
            other => Err(Error::Config(format!(
                "unknown method `{other}` (expected direct, permute or cca)"
            ))),
        }
    }
}

/// One transform per hidden layer, mapping a model into a reference
/// model's representation space.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentPlan {
    transforms: Vec<LayerTransform>,
    method: MethodTag,
}

impl AlignmentPlan {
    pub fn new(transforms: Vec<LayerTransform>, method: MethodTag) -> Result<Self> {
        for (i, t) in transforms.iter().enumerate() {
            if t.layer_index != i {
                return Err(Error::Validation(format!(
                    "transform at position {i} is tagged for layer {}",
                    t.layer_index
                )));
            }
        }
        Ok(Self { transforms, method })
    }

    pub fn identity(widths: &[usize]) -> Self {
        Self {
            transforms: widths
                .iter()
                .enumerate()
                .map(|(i, &n)| LayerTransform::identity(n, i))
                .collect(),
            method: MethodTag::Identity,
        }
    }

    pub fn transforms(&self) -> &[LayerTransform] {
        &self.transforms
    }

    pub fn method(&self) -> MethodTag {
        self.method
    }

    pub fn len(&self) -> usize {
        self.transforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transforms.is_empty()
    }

    /// Plan whose transforms undo this plan's.
    pub fn inverted(&self) -> Self {
        Self {
            transforms: self.transforms.iter().map(LayerTransform::inverted).collect(),
            method: self.method,
        }
    }

    pub fn check_fits(&self, model: &MlpModel) -> Result<()> {
        let widths = model.hidden_widths();
        if widths.len() != self.transforms.len() {
            return Err(Error::shape(
                None,
                format!(
                    "plan has {} transforms but the model has {} hidden layers",
                    self.transforms.len(),
                    widths.len()
                ),
            ));
        }
        for (i, (t, &n)) in self.transforms.iter().zip(&widths).enumerate() {
            if t.dim() != n {
                return Err(Error::shape(
                    i,
                    format!("transform is {}x{} but the layer has {n} neurons", t.dim(), t.dim()),
                ));
            }
        }
        Ok(())
    }
}

/// Rewrite `model` into the plan's target space:
/// `W_i' = T_i·W_i·T_{i-1}⁻¹`, `b_i' = T_i·b_i`, with identity at the input
/// and at the output layer.
pub fn apply_plan(model: &MlpModel, plan: &AlignmentPlan) -> Result<MlpModel> {
    plan.check_fits(model)?;
    let transforms = plan.transforms();
    let layers = model
        .layers()
        .iter()
        .enumerate()
        .map(|(i, layer)| {
            let mut w = layer.weights().clone();
            let mut b = layer.bias().clone();
            if let Some(t) = transforms.get(i) {
                w = t.forward() * w;
                b = t.forward() * b;
            }
            if i > 0 {
                w *= transforms[i - 1].inverse();
            }
            DenseLayer::new(w, b, layer.activation())
        })
        .collect::<Result<Vec<_>>>()?;
    MlpModel::new(layers, model.input_dim(), model.seed_tag.clone())
}
