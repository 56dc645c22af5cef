//! Tail-model corrections for sampled extremes, and coverage diagnostics.
//!
//! An empirical minimum over `n` draws sits above the true minimum by an
//! unknown gap. Near a distribution's edge the mass below level `Y₁ + t`
//! typically grows like a power `t^a`; fitting that exponent from the spacings
//! of the smallest order statistics yields an estimate of the extra margin
//! needed so that at most a mass `p` of outcomes can undershoot the corrected
//! bound. The same machinery applies to the maximum by symmetry.
//!
//! The exponent fit uses three anchor spacings, so it degenerates whenever the
//! sample has ties at the edge (e.g. a ReLU output with an atom at zero). The
//! fallback widens by the observed spread of the retained tail instead, which
//! is crude but finite and non-negative.
//!
//! These corrections are *estimates*, not certificates: each corrected side
//! holds with the per-neuron probability budget, and [`network_confidence`]
//! aggregates the budgets across every monitored neuron by a union bound.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{IntervalVector, LayerBounds, Provenance};
use crate::sampling::ReachEstimate;

/// Errors from tail-model fitting and bound adjustment.
#[derive(Debug, Error)]
pub enum EvtError {
    #[error("{name} must lie strictly inside (0, 1), got {value}")]
    ParameterOutOfRange { name: &'static str, value: f64 },
    #[error("tail fitting needs at least {needed} samples (got {n}): the two tails must not overlap")]
    SampleTooSmall { n: usize, needed: usize },
    #[error("retained tail has {got} values, need {needed}")]
    TailTooShort { needed: usize, got: usize },
    #[error("degenerate tail spacings at layer {layer}, neuron {neuron} ({side} side)")]
    DegenerateTail {
        layer: usize,
        neuron: usize,
        side: &'static str,
    },
    #[error("bounds shape mismatch between estimate and envelope at layer {layer}")]
    ShapeMismatch { layer: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("lipschitz constant must be finite and positive, got {value}")]
    BadLipschitz { value: f64 },
    #[error("delta must be finite and non-negative, got {value}")]
    BadDelta { value: f64 },
}

/// What to do when a tail's spacings carry no exponent information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FallbackPolicy {
    /// Widen by the spread of the retained tail (finite, conservative in the
    /// typical atom-at-the-boundary case).
    #[default]
    Spread,
    /// Refuse to adjust and surface [`EvtError::DegenerateTail`].
    Fail,
}

/// Parameters of the tail-model correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvtConfig {
    /// Per-neuron, per-side mass allowed to escape the corrected bound.
    pub p: f64,
    /// Tail-size exponent: `ν = ⌊n^ξ⌋` order statistics enter the fit.
    pub xi: f64,
    pub fallback: FallbackPolicy,
}

impl EvtConfig {
    /// Split a total two-sided failure budget of 1% evenly over `m` monitored
    /// neurons: `p = 0.005 / m`, so the network-level confidence is 0.99.
    pub fn with_neuron_budget(m: usize) -> EvtConfig {
        EvtConfig {
            p: 0.005 / m.max(1) as f64,
            xi: 0.85,
            fallback: FallbackPolicy::Spread,
        }
    }

    fn validate(&self) -> Result<(), EvtError> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(EvtError::ParameterOutOfRange { name: "p", value: self.p });
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(EvtError::ParameterOutOfRange { name: "xi", value: self.xi });
        }
        Ok(())
    }
}

/// Number of order statistics entering the tail fit: `ν = ⌊n^ξ⌋`.
pub fn tail_count(n: usize, xi: f64) -> usize {
    (n as f64).powf(xi).floor() as usize
}

/// Order statistics worth retaining per side when sampling: the fit reads one
/// index past `ν` on the upper side, so keep `ν + 2`.
pub fn tail_retention(n: usize, xi: f64) -> usize {
    tail_count(n, xi) + 2
}

/// Which end of the sorted sample a tail describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSide {
    Lower,
    Upper,
}

impl TailSide {
    fn name(self) -> &'static str {
        match self {
            TailSide::Lower => "lower",
            TailSide::Upper => "upper",
        }
    }
}

/// Fitted correction for one side of one neuron.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideAdjustment {
    /// Margin added beyond the empirical extreme (always ≥ 0).
    pub error: f64,
    /// Fitted decay exponent, when the spacings supported a fit.
    pub tail_index: Option<f64>,
    /// True when the spread fallback replaced the fit.
    pub fallback_used: bool,
}

/// Fit the decay exponent of one tail from its anchor spacings.
///
/// `tail` is the retained slice of the ascending sorted sample: for the lower
/// side the `ν+2` smallest values, for the upper side the `ν+2` largest (still
/// ascending). Returns `None` when the spacings are degenerate (ties at the
/// anchors, or a ratio from which no positive finite exponent follows).
pub fn tail_index(tail: &[f64], nu: usize, side: TailSide) -> Result<Option<f64>, EvtError> {
    let needed = match side {
        TailSide::Lower => nu,
        TailSide::Upper => nu + 1,
    };
    if tail.len() < needed || nu < 4 {
        return Err(EvtError::TailTooShort {
            needed: needed.max(4),
            got: tail.len(),
        });
    }
    let t = tail.len();
    // Gap between the 2nd and 3rd order statistics, and the reach out to the
    // ν-th: their ratio grows like ν^(1/a) for a mass curve ~ tᵃ.
    let (near, far) = match side {
        TailSide::Lower => (tail[2] - tail[1], tail[nu - 1] - tail[2]),
        TailSide::Upper => (tail[t - 2] - tail[t - 3], tail[t - 3] - tail[t - 1 - nu]),
    };
    if near <= 0.0 || near.is_nan() || far <= 0.0 || far.is_nan() {
        return Ok(None);
    }
    let a = (nu as f64).ln() / (far / near).ln();
    if a.is_finite() && a > 0.0 {
        Ok(Some(a))
    } else {
        Ok(None)
    }
}

/// Margin to add beyond one side's empirical extreme so that at most a mass
/// `p` of outcomes escapes it, under the fitted power-law tail.
pub fn evt_error(
    tail: &[f64],
    nu: usize,
    side: TailSide,
    p: f64,
    fallback: FallbackPolicy,
) -> Result<SideAdjustment, EvtError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(EvtError::ParameterOutOfRange { name: "p", value: p });
    }
    let index = tail_index(tail, nu, side)?;
    let t = tail.len();
    if let Some(a) = index {
        // Extreme gap scaled by the p-quantile of the fitted tail curve.
        let gap = match side {
            TailSide::Lower => tail[1] - tail[0],
            TailSide::Upper => tail[t - 1] - tail[t - 2],
        };
        let denom = (1.0 - p).powf(-a) - 1.0;
        if denom > 0.0 && gap >= 0.0 {
            let error = gap / denom;
            if error.is_finite() {
                return Ok(SideAdjustment {
                    error,
                    tail_index: Some(a),
                    fallback_used: false,
                });
            }
        }
    }
    match fallback {
        FallbackPolicy::Spread => {
            let error = match side {
                TailSide::Lower => tail[nu - 1] - tail[0],
                TailSide::Upper => tail[t - 1] - tail[t - nu],
            };
            Ok(SideAdjustment {
                error: error.max(0.0),
                tail_index: None,
                fallback_used: true,
            })
        }
        // Caller substitutes the real layer/neuron coordinates.
        FallbackPolicy::Fail => Err(EvtError::DegenerateTail {
            layer: usize::MAX,
            neuron: usize::MAX,
            side: side.name(),
        }),
    }
}

/// Both sides' corrections for one neuron, plus whether the envelope clamp
/// engaged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronAdjustment {
    pub lower: SideAdjustment,
    pub upper: SideAdjustment,
    pub lower_clamped: bool,
    pub upper_clamped: bool,
}

/// Sampled rectangles widened by fitted tail corrections and clamped into a
/// guaranteed envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvtAdjustedBounds {
    /// Adjusted rectangles, same shape as the estimate (last layer = output).
    pub bounds: LayerBounds,
    /// Per-layer, per-neuron fit diagnostics.
    pub adjustments: Vec<Vec<NeuronAdjustment>>,
    /// Union-bound confidence that every hidden neuron's true reachable set
    /// respects its adjusted rectangle: `max(0, 1 − 2mp)` over the `m` hidden
    /// neurons (the output entry is a diagnostic with the same per-side `p`).
    pub confidence: f64,
    /// Order statistics used per tail fit.
    pub nu: usize,
    /// Per-neuron, per-side escape mass.
    pub p: f64,
}

/// Union-bound confidence that all `m` neurons' two-sided corrected bounds
/// hold simultaneously when each side is allowed escape mass `p`.
pub fn network_confidence(m: usize, p: f64) -> f64 {
    (1.0 - 2.0 * m as f64 * p).max(0.0)
}

/// Widen every sampled rectangle by its fitted tail correction, clamping into
/// the guaranteed envelope so the result is never looser than the envelope.
pub fn adjust_bounds(
    estimate: &ReachEstimate,
    envelope: &LayerBounds,
    config: &EvtConfig,
) -> Result<EvtAdjustedBounds, EvtError> {
    config.validate()?;
    let n = estimate.accepted;
    let nu = tail_count(n, config.xi);
    let needed = 2 * nu + 6;
    if n < needed || nu < 4 {
        return Err(EvtError::SampleTooSmall { n, needed: needed.max(14) });
    }
    if envelope.pre.len() != estimate.layers.len() {
        return Err(EvtError::ShapeMismatch { layer: envelope.pre.len().min(estimate.layers.len()) });
    }

    let mut pre = Vec::with_capacity(estimate.layers.len());
    let mut adjustments = Vec::with_capacity(estimate.layers.len());
    for (li, layer) in estimate.layers.iter().enumerate() {
        let env = &envelope.pre[li];
        if env.len() != layer.len() {
            return Err(EvtError::ShapeMismatch { layer: li });
        }
        let mut lo = Vec::with_capacity(layer.len());
        let mut hi = Vec::with_capacity(layer.len());
        let mut neuron_adjustments = Vec::with_capacity(layer.len());
        for (ni, summary) in layer.iter().enumerate() {
            let locate = |e: EvtError| match e {
                EvtError::DegenerateTail { side, .. } => EvtError::DegenerateTail {
                    layer: li,
                    neuron: ni,
                    side,
                },
                other => other,
            };
            let lower = evt_error(&summary.lower_tail, nu, TailSide::Lower, config.p, config.fallback)
                .map_err(locate)?;
            let upper = evt_error(&summary.upper_tail, nu, TailSide::Upper, config.p, config.fallback)
                .map_err(locate)?;
            let raw_lo = summary.min - lower.error;
            let raw_hi = summary.max + upper.error;
            let clamped_lo = raw_lo.max(env.lo[ni]);
            let clamped_hi = raw_hi.min(env.hi[ni]);
            neuron_adjustments.push(NeuronAdjustment {
                lower,
                upper,
                lower_clamped: clamped_lo > raw_lo,
                upper_clamped: clamped_hi < raw_hi,
            });
            lo.push(clamped_lo);
            hi.push(clamped_hi);
        }
        pre.push(IntervalVector { lo, hi });
        adjustments.push(neuron_adjustments);
    }

    let hidden: usize = estimate.layers[..estimate.layers.len() - 1]
        .iter()
        .map(|l| l.len())
        .sum();
    Ok(EvtAdjustedBounds {
        bounds: LayerBounds {
            pre,
            provenance: Provenance::Adjusted,
        },
        adjustments,
        confidence: network_confidence(hidden, config.p),
        nu,
        p: config.p,
    })
}

// --- Coverage diagnostics -------------------------------------------------

/// Natural log of the gamma function for positive arguments (Lanczos
/// approximation, g = 7, 9 terms; ~15 significant digits on this range).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // Reflection keeps the approximation on its accurate half-line.
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Product of the layers' Frobenius norms: a cheap global Lipschitz upper
/// bound for the network in the Euclidean norm (ReLU is 1-Lipschitz, and the
/// Frobenius norm dominates the spectral norm).
pub fn lipschitz_upper(net: &crate::model::Network) -> f64 {
    net.layers()
        .iter()
        .map(|l| l.weights.frobenius_norm())
        .product()
}

/// Probability that `n` uniform draws from a `d`-dimensional region land at
/// least one point whose function value is within `delta` of the true extreme
/// of an `lipschitz`-Lipschitz function — the geometric coverage argument:
/// a ball of radius `delta/L` around the extremizer has volume fraction at
/// least `(delta/L)^d · π^(d/2) / Γ(d/2 + 1)` of the unit-diameter region, and
/// missing it `n` times has probability at most `exp(−n·fraction)`.
pub fn worst_case_probability(
    n: usize,
    delta: f64,
    lipschitz: f64,
    dim: usize,
) -> Result<f64, EvtError> {
    if dim == 0 {
        return Err(EvtError::ZeroDimension);
    }
    if lipschitz <= 0.0 || !lipschitz.is_finite() {
        return Err(EvtError::BadLipschitz { value: lipschitz });
    }
    if delta < 0.0 || !delta.is_finite() {
        return Err(EvtError::BadDelta { value: delta });
    }
    let d = dim as f64;
    let log_ball = (d / 2.0) * std::f64::consts::PI.ln() + d * (delta / lipschitz).ln()
        - ln_gamma(d / 2.0 + 1.0);
    let exponent = n as f64 * log_ball.exp();
    Ok(1.0 - (-exponent).exp())
}
