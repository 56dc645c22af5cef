//! Tolerance-limit sampling of reachable sets.
//!
//! Uniform samples through the network give empirical min/max rectangles for
//! every pre-activation vector. Order statistics make those rectangles
//! probabilistic tolerance limits: with `n ≥ ln(1−ψ)/ln(R)` samples, the
//! empirical extreme covers at least a fraction `R` of the input distribution
//! on that side with confidence `ψ`. The guarantee is per side, per neuron;
//! [`union_sample_size`] scales `n` so a union bound makes it hold for all
//! monitored events simultaneously.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{IntervalVector, LayerBounds, Provenance};
use crate::model::{ModelError, Network, PerturbationSet};
use crate::rng::stream_rng;

/// Errors from sample-size computation or region sampling.
#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("{name} must lie strictly inside (0, 1), got {value}")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("union bound requires at least one event")]
    ZeroEvents,
    #[error("required sample size overflows (psi={psi}, r={r}, events={events})")]
    SampleSizeOverflow { psi: f64, r: f64, events: usize },
    #[error("sample plan requests zero points")]
    EmptyPlan,
    #[error("rejection sampling accepted {accepted}/{requested} points in {attempts} draws")]
    RejectionBudget {
        requested: usize,
        accepted: usize,
        attempts: usize,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_probability(name: &'static str, value: f64) -> Result<(), SamplingError> {
    if !(value > 0.0 && value < 1.0) {
        return Err(SamplingError::ProbabilityOutOfRange { name, value });
    }
    Ok(())
}

/// Smallest `n` such that `1 − Rⁿ ≥ ψ`: with that many i.i.d. draws, the
/// one-sided empirical extreme is an `(R, ψ)` tolerance limit.
pub fn wilks_sample_size(psi: f64, r: f64) -> Result<usize, SamplingError> {
    union_sample_size(psi, r, 1)
}

/// Sample size for `events` simultaneous one-sided tolerance limits: splits
/// the failure budget `1 − ψ` evenly across the events (union bound), so
/// `n = ⌈ln((1−ψ)/events) / ln(R)⌉`. With `events = 1` this is exactly the
/// single-limit size.
pub fn union_sample_size(psi: f64, r: f64, events: usize) -> Result<usize, SamplingError> {
    check_probability("psi", psi)?;
    check_probability("r", r)?;
    if events == 0 {
        return Err(SamplingError::ZeroEvents);
    }
    // ln((1−ψ)/events) = ln1p(−ψ) − ln(events), keeping precision for ψ → 1.
    let log_budget = (-psi).ln_1p() - (events as f64).ln();
    let n = (log_budget / r.ln()).ceil();
    if !n.is_finite() || n > 9.0e15 {
        return Err(SamplingError::SampleSizeOverflow { psi, r, events });
    }
    Ok((n as usize).max(1))
}

/// A half-space condition on one hidden neuron's pre-activation, used to
/// restrict sampling to one branch of a ReLU split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConstraint {
    /// 0-based layer index into the network's layer stack.
    pub layer: usize,
    /// Neuron index within that layer.
    pub neuron: usize,
    /// `true` requires `z ≥ 0`, `false` requires `z ≤ 0`.
    pub active: bool,
}

impl SplitConstraint {
    pub fn satisfied_by(&self, preactivations: &[Vec<f64>]) -> bool {
        let z = preactivations[self.layer][self.neuron];
        if self.active {
            z >= 0.0
        } else {
            z <= 0.0
        }
    }
}

/// How many points to draw and which order statistics to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    /// Accepted sample count.
    pub n: usize,
    /// Order statistics retained per neuron per side (sorted extremes); the
    /// tail-model corrections need the `ν` most extreme values plus two.
    pub tail_len: usize,
    /// Base RNG seed.
    pub seed: u64,
    /// Stream index, so different domains draw independent sequences from the
    /// same seed.
    pub stream: u64,
}

impl SamplePlan {
    pub fn new(n: usize, tail_len: usize, seed: u64, stream: u64) -> SamplePlan {
        SamplePlan { n, tail_len, seed, stream }
    }
}

/// Empirical statistics for one neuron's pre-activation over the sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronSummary {
    pub min: f64,
    pub max: f64,
    /// Smallest retained values, ascending.
    pub lower_tail: Vec<f64>,
    /// Largest retained values, ascending.
    pub upper_tail: Vec<f64>,
}

/// An input point together with the scalar output it achieved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub input: Vec<f64>,
    pub value: f64,
}

/// Sampled reachable-set estimate: per-neuron summaries for every layer's
/// pre-activation, the min/max rectangles in propagation form, and the inputs
/// that achieved the extreme outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachEstimate {
    /// `layers[i][j]` summarizes neuron `j` of layer `i` (last layer = output).
    pub layers: Vec<Vec<NeuronSummary>>,
    /// Same extremes as rectangles, tagged [`Provenance::Sampled`].
    pub bounds: LayerBounds,
    /// Sample achieving the smallest output.
    pub worst: SamplePoint,
    /// Sample achieving the largest output.
    pub best: SamplePoint,
    pub accepted: usize,
    pub rejected: usize,
}

fn draw_point(
    rng: &mut impl rand::Rng,
    region: &PerturbationSet,
) -> Vec<f64> {
    region
        .lo()
        .iter()
        .zip(region.hi())
        .map(|(l, h)| {
            if h > l {
                rng.random_range(*l..=*h)
            } else {
                *l
            }
        })
        .collect()
}

/// Draw `n` uniform points from the region, discarding points that violate
/// any constraint. Gives up once the draw budget (50 per requested point) is
/// spent, reporting how many points were accepted.
pub fn sample_region(
    net: &Network,
    region: &PerturbationSet,
    constraints: &[SplitConstraint],
    plan: &SamplePlan,
) -> Result<Vec<Vec<f64>>, SamplingError> {
    if plan.n == 0 {
        return Err(SamplingError::EmptyPlan);
    }
    let mut rng = stream_rng(plan.seed, plan.stream);
    let budget = plan.n.saturating_mul(50);
    let mut accepted = Vec::with_capacity(plan.n);
    let mut attempts = 0usize;
    while accepted.len() < plan.n && attempts < budget {
        attempts += 1;
        let x = draw_point(&mut rng, region);
        if constraints.is_empty() {
            accepted.push(x);
            continue;
        }
        let pres = net.preactivations(&x)?;
        if constraints.iter().all(|c| c.satisfied_by(&pres)) {
            accepted.push(x);
        }
    }
    if accepted.len() < plan.n {
        return Err(SamplingError::RejectionBudget {
            requested: plan.n,
            accepted: accepted.len(),
            attempts,
        });
    }
    Ok(accepted)
}

/// Run the sampling plan and summarize every layer's pre-activations.
///
/// The returned rectangles are the empirical min/max per neuron — tolerance
/// limits at the confidence implied by `plan.n`, not guaranteed enclosures.
pub fn estimate_reachable_sets(
    net: &Network,
    region: &PerturbationSet,
    constraints: &[SplitConstraint],
    plan: &SamplePlan,
) -> Result<ReachEstimate, SamplingError> {
    net.require_single_output()?;
    if plan.n == 0 {
        return Err(SamplingError::EmptyPlan);
    }
    let mut rng = stream_rng(plan.seed, plan.stream);
    let budget = plan.n.saturating_mul(50);

    // Column-major storage: all sampled values for each neuron.
    let widths: Vec<usize> = net.layers().iter().map(|l| l.out_dim()).collect();
    let mut columns: Vec<Vec<Vec<f64>>> = widths
        .iter()
        .map(|w| vec![Vec::with_capacity(plan.n); *w])
        .collect();
    let mut worst: Option<SamplePoint> = None;
    let mut best: Option<SamplePoint> = None;
    let mut accepted = 0usize;
    let mut attempts = 0usize;

    while accepted < plan.n && attempts < budget {
        attempts += 1;
        let x = draw_point(&mut rng, region);
        let pres = net.preactivations(&x)?;
        if !constraints.iter().all(|c| c.satisfied_by(&pres)) {
            continue;
        }
        accepted += 1;
        for (layer_cols, z) in columns.iter_mut().zip(&pres) {
            for (col, zi) in layer_cols.iter_mut().zip(z) {
                col.push(*zi);
            }
        }
        let out = *pres.last().unwrap().first().unwrap();
        if worst.as_ref().is_none_or(|w| out < w.value) {
            worst = Some(SamplePoint { input: x.clone(), value: out });
        }
        if best.as_ref().is_none_or(|b| out > b.value) {
            best = Some(SamplePoint { input: x, value: out });
        }
    }
    if accepted < plan.n {
        return Err(SamplingError::RejectionBudget {
            requested: plan.n,
            accepted,
            attempts,
        });
    }

    let tail = plan.tail_len.min(plan.n);
    let mut layers = Vec::with_capacity(columns.len());
    let mut pre = Vec::with_capacity(columns.len());
    for layer_cols in columns.iter_mut() {
        let mut summaries = Vec::with_capacity(layer_cols.len());
        let mut lo = Vec::with_capacity(layer_cols.len());
        let mut hi = Vec::with_capacity(layer_cols.len());
        for col in layer_cols.iter_mut() {
            col.sort_unstable_by(|a, b| a.total_cmp(b));
            let min = col[0];
            let max = col[col.len() - 1];
            summaries.push(NeuronSummary {
                min,
                max,
                lower_tail: col[..tail].to_vec(),
                upper_tail: col[col.len() - tail..].to_vec(),
            });
            lo.push(min);
            hi.push(max);
        }
        layers.push(summaries);
        pre.push(IntervalVector { lo, hi });
    }

    Ok(ReachEstimate {
        layers,
        bounds: LayerBounds {
            pre,
            provenance: Provenance::Sampled,
        },
        worst: worst.expect("at least one accepted sample"),
        best: best.expect("at least one accepted sample"),
        accepted,
        rejected: attempts - accepted,
    })
}
