//! ReLU feed-forward networks and perturbation regions.
//!
//! A network is an ordered stack of affine layers `z⁽ⁱ⁾ = W⁽ⁱ⁾ ẑ⁽ⁱ⁻¹⁾ + b⁽ⁱ⁾`
//! with ReLU post-activations on hidden layers and an identity final layer.
//! Robustness properties are phrased against a single output neuron: the
//! property holds on a region iff `f(x) > 0` everywhere in it. Classification
//! margins are reduced to this form by [`Network::encode_margin`].

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from loading, validating, or evaluating networks and regions.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model/property JSON: {detail}")]
    Parse { detail: String },
    #[error("unsupported activation {name:?} (expected \"relu\" or \"linear\")")]
    UnsupportedActivation { name: String },
    #[error("layer {layer}: expected {expected} input columns, found {found}")]
    DimensionMismatch {
        layer: usize,
        expected: usize,
        found: usize,
    },
    #[error("layer {layer}: ragged or empty weight matrix")]
    RaggedMatrix { layer: usize },
    #[error("layer {layer}: bias length {bias_len} does not match {rows} rows")]
    BiasMismatch {
        layer: usize,
        rows: usize,
        bias_len: usize,
    },
    #[error("layer {layer} contains a non-finite weight or bias")]
    NonFinite { layer: usize },
    #[error("network has no layers")]
    EmptyNetwork,
    #[error("final layer must use the identity activation")]
    NonLinearOutput,
    #[error("operation requires a single-output network, found {outputs} outputs")]
    NotSingleOutput { outputs: usize },
    #[error("operation requires a multi-output network, found {outputs} output")]
    NotMultiOutput { outputs: usize },
    #[error("input has dimension {found}, network expects {expected}")]
    InputDimension { expected: usize, found: usize },
    #[error("target class {target} out of range for {outputs} outputs")]
    TargetOutOfRange { target: usize, outputs: usize },
    #[error("region dimension {found} does not match expected {expected}")]
    RegionDimension { expected: usize, found: usize },
    #[error("region has lower > upper in coordinate {coord}")]
    EmptyRegion { coord: usize },
    #[error("epsilon must be finite and >= 0, got {value}")]
    BadEpsilon { value: f64 },
}

/// Dense row-major matrix; rows index output neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Build from a row-per-neuron nested vector. All rows must share a length.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Option<Matrix> {
        let r = rows.len();
        let c = rows.first()?.len();
        if c == 0 || rows.iter().any(|row| row.len() != c) {
            return None;
        }
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            data.extend_from_slice(row);
        }
        Some(Matrix { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// `W x` for a column vector `x` of length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(w, xi)| w * xi).sum())
            .collect()
    }

    /// `v W` for a row vector `v` of length `rows`; result has length `cols`.
    pub fn vecmat(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            if *vi == 0.0 {
                continue;
            }
            for (j, w) in self.row(i).iter().enumerate() {
                out[j] += vi * w;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Nested-vector view, used when serializing models back to JSON.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Post-activation applied to a layer's affine output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

/// One affine layer plus its activation.
#[derive(Debug, Clone)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }
}

/// Validated feed-forward network.
///
/// Invariants enforced at construction: layer dimensions chain, all entries
/// are finite, and the final layer uses the identity activation. Verification
/// entry points additionally require a single output neuron
/// ([`Network::require_single_output`]); multi-output networks are accepted at
/// load time so that classification heads can be margin-encoded.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
}

/// On-disk model format: `{"layers": [{"weights": [[...]], "bias": [...],
/// "activation": "relu"|"linear"}]}` with row-major weights (rows = output
/// neurons).
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    layers: Vec<LayerFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: String,
}

impl Network {
    /// Validate and wrap a stack of layers.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Network, ModelError> {
        if layers.is_empty() {
            return Err(ModelError::EmptyNetwork);
        }
        for (idx, layer) in layers.iter().enumerate() {
            let n = idx + 1; // 1-based layer numbering in messages
            if layer.bias.len() != layer.out_dim() {
                return Err(ModelError::BiasMismatch {
                    layer: n,
                    rows: layer.out_dim(),
                    bias_len: layer.bias.len(),
                });
            }
            if idx > 0 {
                let expected = layers[idx - 1].out_dim();
                if layer.in_dim() != expected {
                    return Err(ModelError::DimensionMismatch {
                        layer: n,
                        expected,
                        found: layer.in_dim(),
                    });
                }
            }
            let finite = layer.weights.data.iter().all(|w| w.is_finite())
                && layer.bias.iter().all(|b| b.is_finite());
            if !finite {
                return Err(ModelError::NonFinite { layer: n });
            }
        }
        if layers.last().unwrap().activation != Activation::Linear {
            return Err(ModelError::NonLinearOutput);
        }
        Ok(Network { layers })
    }

    /// Parse a model from its JSON text.
    pub fn from_json(text: &str) -> Result<Network, ModelError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelError::Parse {
            detail: e.to_string(),
        })?;
        let mut layers = Vec::with_capacity(file.layers.len());
        for (idx, lf) in file.layers.into_iter().enumerate() {
            let activation = match lf.activation.as_str() {
                "relu" => Activation::Relu,
                "linear" => Activation::Linear,
                other => {
                    return Err(ModelError::UnsupportedActivation {
                        name: other.to_string(),
                    })
                }
            };
            let weights = Matrix::from_rows(lf.weights)
                .ok_or(ModelError::RaggedMatrix { layer: idx + 1 })?;
            layers.push(Layer {
                weights,
                bias: lf.bias,
                activation,
            });
        }
        Network::from_layers(layers)
    }

    /// Serialize back to the JSON model format.
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    weights: l.weights.to_rows(),
                    bias: l.bias.clone(),
                    activation: match l.activation {
                        Activation::Relu => "relu".to_string(),
                        Activation::Linear => "linear".to_string(),
                    },
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Number of layers `N`.
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    /// Total number of hidden (ReLU) neurons `m`.
    pub fn hidden_neuron_count(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.activation == Activation::Relu)
            .map(|l| l.out_dim())
            .sum()
    }

    pub fn require_single_output(&self) -> Result<(), ModelError> {
        let outputs = self.output_dim();
        if outputs != 1 {
            return Err(ModelError::NotSingleOutput { outputs });
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.input_dim() {
            return Err(ModelError::InputDimension {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Evaluate all output neurons at `x`.
    pub fn forward_all(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        for layer in &self.layers {
            let mut z = layer.weights.matvec(&a);
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi += bi;
            }
            if layer.activation == Activation::Relu {
                for zi in z.iter_mut() {
                    *zi = zi.max(0.0);
                }
            }
            a = z;
        }
        Ok(a)
    }

    /// Evaluate the scalar output of a single-output network at `x`.
    pub fn forward(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.require_single_output()?;
        Ok(self.forward_all(x)?[0])
    }

    /// Pre-activation values of every layer at `x` (last entry = output).
    pub fn preactivations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, ModelError> {
        self.check_input(x)?;
        let mut a = x.to_vec();
        let mut pres = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut z = layer.weights.matvec(&a);
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi += bi;
            }
            pres.push(z.clone());
            if layer.activation == Activation::Relu {
                for zi in z.iter_mut() {
                    *zi = zi.max(0.0);
                }
            }
            a = z;
        }
        Ok(pres)
    }

    /// Subgradient of the scalar output at `x`, with the convention
    /// `ReLU'(0) = 0` (a kink contributes nothing exactly on its boundary).
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.require_single_output()?;
        let pres = self.preactivations(x)?;
        // Backward pass: start from the output row and fold each hidden
        // layer's active mask into the running row vector.
        let last = self.layers.len() - 1;
        let mut row: Vec<f64> = self.layers[last].weights.row(0).to_vec();
        for i in (0..last).rev() {
            let masked: Vec<f64> = row
                .iter()
                .zip(&pres[i])
                .map(|(r, z)| if *z > 0.0 { *r } else { 0.0 })
                .collect();
            row = self.layers[i].weights.vecmat(&masked);
        }
        Ok(row)
    }

    /// Reduce a multi-output classification head to single-output margin
    /// networks, one per competitor class.
    ///
    /// Each returned network computes `f_target − f_j` for one `j ≠ target`;
    /// the original net strictly argmax-selects `target` at `x` iff every
    /// returned network is positive at `x`. Verifying each margin separately
    /// keeps the per-layer affine structure intact (no min operator enters the
    /// network).
    pub fn encode_margin(&self, target: usize) -> Result<Vec<Network>, ModelError> {
        let outputs = self.output_dim();
        if outputs < 2 {
            return Err(ModelError::NotMultiOutput { outputs });
        }
        if target >= outputs {
            return Err(ModelError::TargetOutOfRange { target, outputs });
        }
        let last = self.layers.last().unwrap();
        let mut margins = Vec::with_capacity(outputs - 1);
        for j in 0..outputs {
            if j == target {
                continue;
            }
            let row: Vec<f64> = last
                .weights
                .row(target)
                .iter()
                .zip(last.weights.row(j))
                .map(|(t, c)| t - c)
                .collect();
            let bias = vec![last.bias[target] - last.bias[j]];
            let mut layers = self.layers[..self.layers.len() - 1].to_vec();
            layers.push(Layer {
                weights: Matrix::from_rows(vec![row]).expect("margin row is non-empty"),
                bias,
                activation: Activation::Linear,
            });
            margins.push(Network::from_layers(layers)?);
        }
        Ok(margins)
    }
}

/// Load a model file from disk and validate it.
pub fn load_network(path: impl AsRef<Path>) -> Result<Network, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Network::from_json(&text)
}

/// An axis-aligned input region: the L∞ ball of radius `epsilon` around `x0`,
/// optionally clipped per coordinate (e.g. to a valid data range).
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSet {
    pub x0: Vec<f64>,
    pub epsilon: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// On-disk property format: `{"x0": [...], "epsilon": e, "clip": [[lo,hi],...]?}`.
#[derive(Debug, Serialize, Deserialize)]
struct PropertyFile {
    x0: Vec<f64>,
    epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clip: Option<Vec<[f64; 2]>>,
}

impl PerturbationSet {
    pub fn new(x0: Vec<f64>, epsilon: f64) -> Result<PerturbationSet, ModelError> {
        Self::with_clip(x0, epsilon, None)
    }

    pub fn with_clip(
        x0: Vec<f64>,
        epsilon: f64,
        clip: Option<&[(f64, f64)]>,
    ) -> Result<PerturbationSet, ModelError> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(ModelError::BadEpsilon { value: epsilon });
        }
        if let Some(clip) = clip {
            if clip.len() != x0.len() {
                return Err(ModelError::RegionDimension {
                    expected: x0.len(),
                    found: clip.len(),
                });
            }
        }
        let mut lo = Vec::with_capacity(x0.len());
        let mut hi = Vec::with_capacity(x0.len());
        for (i, c) in x0.iter().enumerate() {
            let (mut l, mut h) = (c - epsilon, c + epsilon);
            if let Some(clip) = clip {
                l = l.max(clip[i].0);
                h = h.min(clip[i].1);
            }
            if l > h {
                return Err(ModelError::EmptyRegion { coord: i });
            }
            lo.push(l);
            hi.push(h);
        }
        Ok(PerturbationSet { x0, epsilon, lo, hi })
    }

    /// Rebuild a region directly from box corners (used by input splits).
    pub fn from_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<PerturbationSet, ModelError> {
        if lo.len() != hi.len() {
            return Err(ModelError::RegionDimension {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        let mut x0 = Vec::with_capacity(lo.len());
        let mut eps: f64 = 0.0;
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if l > h {
                return Err(ModelError::EmptyRegion { coord: i });
            }
            x0.push(0.5 * (l + h));
            eps = eps.max(0.5 * (h - l));
        }
        Ok(PerturbationSet { x0, epsilon: eps, lo, hi })
    }

    /// Parse a property from its JSON text.
    pub fn from_json(text: &str) -> Result<PerturbationSet, ModelError> {
        let file: PropertyFile = serde_json::from_str(text).map_err(|e| ModelError::Parse {
            detail: e.to_string(),
        })?;
        let clip: Option<Vec<(f64, f64)>> = file
            .clip
            .map(|c| c.into_iter().map(|[l, h]| (l, h)).collect());
        PerturbationSet::with_clip(file.x0, file.epsilon, clip.as_deref())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// Box center (equals `x0` when the ball is unclipped).
    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    /// Per-coordinate half-widths.
    pub fn radii(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (h - l))
            .collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(xi, (l, h))| *xi >= l - tol && *xi <= h + tol)
    }

    /// Split the box in half along `coord`. Children share the boundary.
    pub fn bisect(&self, coord: usize) -> (PerturbationSet, PerturbationSet) {
        let mid = 0.5 * (self.lo[coord] + self.hi[coord]);
        let mut left_hi = self.hi.clone();
        left_hi[coord] = mid;
        let mut right_lo = self.lo.clone();
        right_lo[coord] = mid;
        let left = PerturbationSet::from_box(self.lo.clone(), left_hi)
            .expect("bisection preserves box validity");
        let right = PerturbationSet::from_box(right_lo, self.hi.clone())
            .expect("bisection preserves box validity");
        (left, right)
    }
}

/// Load a property file from disk.
pub fn load_property(path: impl AsRef<Path>) -> Result<PerturbationSet, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    PerturbationSet::from_json(&text)
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = std::iter::once(self.input_dim().to_string())
            .chain(self.layers.iter().map(|l| l.out_dim().to_string()))
            .collect();
        write!(f, "network {}", dims.join("-"))
    }
}
