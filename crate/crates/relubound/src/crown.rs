//! Backward linear relaxation of ReLU networks.
//!
//! Given a rectangle around every pre-activation vector, each ReLU neuron is
//! sandwiched between two lines on its interval. Folding those lines backward
//! from the output row through every layer yields a pair of affine functions
//! of the *input* that bracket the network, and those concretize over the
//! input box much more tightly than plain interval propagation because they
//! keep track of how coordinates cancel.
//!
//! The relaxation of an unstable neuron (interval straddling zero) is the
//! chord from `(l, 0)` to `(u, u)` on the side that must over-approximate, and
//! a line `z ↦ αz` through the origin (any `α ∈ [0, 1]` is valid) on the side
//! that must under-approximate. Which side is which depends on the sign of the
//! folded coefficient, so slopes are chosen during the backward pass, not per
//! neuron in isolation.

use serde::{Deserialize, Serialize};

use crate::interval::LayerBounds;
use crate::model::{Activation, Network, PerturbationSet};

/// Choice of the free slope `α` for unstable neurons on the
/// under-approximating side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaPolicy {
    /// `α = 0`: the under-approximating line is the zero function.
    #[default]
    Zero,
    /// `α = 1` when `u ≥ |l|`, else `α = 0`: pick the endpoint slope that
    /// hugs the ReLU on its longer side.
    Adaptive,
}

impl AlphaPolicy {
    fn alpha(self, l: f64, u: f64) -> f64 {
        match self {
            AlphaPolicy::Zero => 0.0,
            AlphaPolicy::Adaptive => {
                if u >= -l {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Two bounding lines for one ReLU neuron on the interval `[l, u]`:
/// `lower_slope·z + lower_intercept ≤ max(z, 0) ≤ upper_slope·z + upper_intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReluRelaxation {
    pub lower_slope: f64,
    pub lower_intercept: f64,
    pub upper_slope: f64,
    pub upper_intercept: f64,
}

/// Bounding lines for `max(z, 0)` on `[l, u]` (requires `l ≤ u`).
pub fn relax_relu(l: f64, u: f64, alpha: f64) -> ReluRelaxation {
    debug_assert!(l <= u, "inconsistent neuron interval [{l}, {u}]");
    debug_assert!((0.0..=1.0).contains(&alpha));
    if l >= 0.0 {
        // Provably active: the ReLU is the identity on the interval.
        ReluRelaxation {
            lower_slope: 1.0,
            lower_intercept: 0.0,
            upper_slope: 1.0,
            upper_intercept: 0.0,
        }
    } else if u <= 0.0 {
        // Provably inactive: the ReLU is identically zero.
        ReluRelaxation {
            lower_slope: 0.0,
            lower_intercept: 0.0,
            upper_slope: 0.0,
            upper_intercept: 0.0,
        }
    } else {
        let upper_slope = u / (u - l);
        ReluRelaxation {
            lower_slope: alpha,
            lower_intercept: 0.0,
            upper_slope,
            upper_intercept: -u * l / (u - l),
        }
    }
}

/// One affine function of the network input: `x ↦ coeffs·x + constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineBound {
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl AffineBound {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, xi)| a * xi).sum::<f64>() + self.constant
    }
}

/// The slopes and intercepts actually substituted for one hidden layer's
/// ReLUs while deriving one side of the bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRelaxation {
    pub slope: Vec<f64>,
    pub intercept: Vec<f64>,
}

/// A pair of affine functions of the input bracketing the scalar output, with
/// the per-layer relaxations that produced each side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearBounds {
    pub lower: AffineBound,
    pub upper: AffineBound,
    /// Entry `i` is the relaxation substituted at hidden layer `i` (forward
    /// order) for the lower bound; stable layers get identity/zero slopes.
    pub lower_relaxations: Vec<LayerRelaxation>,
    pub upper_relaxations: Vec<LayerRelaxation>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Lower,
    Upper,
}

/// Fold the output row backward through every hidden layer, substituting one
/// bounding line per neuron, and return the resulting affine function of the
/// input together with the substituted relaxations (in forward layer order).
fn backward_side(
    net: &Network,
    bounds: &LayerBounds,
    policy: AlphaPolicy,
    side: Side,
) -> (AffineBound, Vec<LayerRelaxation>) {
    let layers = net.layers();
    let last = layers.len() - 1;
    let mut coeffs: Vec<f64> = layers[last].weights.row(0).to_vec();
    let mut constant = layers[last].bias[0];
    let mut relaxations: Vec<LayerRelaxation> = Vec::with_capacity(last);

    for i in (0..last).rev() {
        let rect = &bounds.pre[i];
        let n = coeffs.len();
        let mut slope = Vec::with_capacity(n);
        let mut intercept = Vec::with_capacity(n);
        for (c, (l, u)) in coeffs.iter().zip(rect.lo.iter().zip(&rect.hi)) {
            let (l, u) = (*l, *u);
            // A linear hidden layer passes through untouched.
            let relax = if layers[i].activation == Activation::Relu {
                relax_relu(l, u, policy.alpha(l, u))
            } else {
                ReluRelaxation {
                    lower_slope: 1.0,
                    lower_intercept: 0.0,
                    upper_slope: 1.0,
                    upper_intercept: 0.0,
                }
            };
            // A non-negative coefficient keeps the inequality direction, so
            // the lower side needs the lower line there; a negative
            // coefficient flips it, so the chord takes over.
            let wants_lower_line = match side {
                Side::Lower => *c >= 0.0,
                Side::Upper => *c < 0.0,
            };
            if wants_lower_line {
                slope.push(relax.lower_slope);
                intercept.push(relax.lower_intercept);
            } else {
                slope.push(relax.upper_slope);
                intercept.push(relax.upper_intercept);
            }
        }
        // Substitute ẑ ← slope∘z + intercept, then z ← W ẑ_prev + b.
        let mut masked = Vec::with_capacity(n);
        for j in 0..n {
            constant += coeffs[j] * intercept[j];
            masked.push(coeffs[j] * slope[j]);
        }
        constant += masked
            .iter()
            .zip(&layers[i].bias)
            .map(|(m, b)| m * b)
            .sum::<f64>();
        coeffs = layers[i].weights.vecmat(&masked);
        relaxations.push(LayerRelaxation { slope, intercept });
    }

    relaxations.reverse();
    (AffineBound { coeffs, constant }, relaxations)
}

/// Derive bracketing affine functions of the input for a single-output
/// network, using the given pre-activation rectangles for every hidden layer.
///
/// Soundness is conditional on the rectangles: with interval-propagated
/// rectangles the result is a guaranteed bound; with sampled rectangles it
/// holds on the same probabilistic terms as the rectangles themselves.
pub fn backward_bounds(net: &Network, bounds: &LayerBounds, policy: AlphaPolicy) -> LinearBounds {
    debug_assert_eq!(net.output_dim(), 1);
    debug_assert_eq!(bounds.pre.len(), net.num_layers());
    let (lower, lower_relaxations) = backward_side(net, bounds, policy, Side::Lower);
    let (upper, upper_relaxations) = backward_side(net, bounds, policy, Side::Upper);
    LinearBounds {
        lower,
        upper,
        lower_relaxations,
        upper_relaxations,
    }
}

/// Minimize/maximize the bracketing affine functions over the input box:
/// each side is evaluated at the box center and pushed outward by the
/// coefficient-weighted radii of its own coefficient row.
pub fn concretize(linear: &LinearBounds, region: &PerturbationSet) -> (f64, f64) {
    let center = region.center();
    let radii = region.radii();
    let spread = |coeffs: &[f64]| -> f64 {
        coeffs
            .iter()
            .zip(&radii)
            .map(|(a, r)| a.abs() * r)
            .sum::<f64>()
    };
    let lo = linear.lower.eval(&center) - spread(&linear.lower.coeffs);
    let hi = linear.upper.eval(&center) + spread(&linear.upper.coeffs);
    (lo, hi)
}

/// Convenience: backward bounds + concretization in one call.
pub fn output_range(
    net: &Network,
    bounds: &LayerBounds,
    region: &PerturbationSet,
    policy: AlphaPolicy,
) -> (f64, f64) {
    concretize(&backward_bounds(net, bounds, policy), region)
}
