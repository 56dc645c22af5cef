//! Branch-and-bound robustness verification.
//!
//! The property under test is `f(x) > 0` for every `x` in the perturbation
//! region. Verification runs in three phases: a projected-gradient attack
//! that tries to refute the property outright, a bounding pass that combines
//! the sampled, tail-corrected reachable sets with deterministic interval and
//! backward linear bounds, and a branch-and-bound loop that splits the
//! domains the bounds cannot decide — bisecting the input box or fixing the
//! sign of an unstable neuron — and re-samples each child.
//!
//! A `Robust` verdict means every leaf of the final domain cover had a
//! strictly positive lower bound; because the sampled reachable sets are only
//! probabilistically sound, the verdict carries the union-bound confidence
//! `1 − 2mp` over the `m` hidden neurons. A `NotRobust` verdict is absolute:
//! it is only issued for a concrete input that re-evaluates to a
//! non-positive output inside the region. Bound-only violations (an upper
//! bound below zero without a witness) are surfaced as diagnostics instead.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::crown::{output_range, AlphaPolicy};
use crate::evt::{
    adjust_bounds, network_confidence, tail_count, tail_retention, EvtConfig, EvtError,
    FallbackPolicy,
};
use crate::interval::{interval_affine, IntervalVector, LayerBounds, Provenance};
use crate::model::{Activation, ModelError, Network, PerturbationSet};
use crate::sampling::{
    estimate_reachable_sets, ReachEstimate, SamplePlan, SamplingError, SplitConstraint,
};

/// Errors from verification and certification.
#[derive(Debug, Error)]
pub enum VerifierError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Evt(#[from] EvtError),
    #[error("invalid verifier configuration: {detail}")]
    BadConfig { detail: String },
    #[error("domain cannot be split further (no coordinate wider than 1e-12 and no unstable neuron)")]
    Unsplittable,
    #[error("property already fails at the center point (output {value})")]
    PropertyFailsAtCenter { value: f64 },
}

/// How an undecided domain is subdivided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitStrategy {
    /// Bisect the widest input coordinate (ties break to the lowest index).
    Input,
    /// Constrain the sign of the unstable neuron with the widest estimated
    /// pre-activation interval; falls back to an input split when every
    /// neuron is stable.
    Relu,
    /// `Input` for boxes of dimension ≤ 10, `Relu` above — input bisection
    /// loses its bite in high dimension, while sign constraints keep
    /// rejection-sampling acceptance high in low dimension.
    #[serde(rename = "auto")]
    Auto,
}

/// Which bounding pipeline backs the verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMethod {
    /// Sampled reachable sets with tail corrections, intersected pointwise
    /// with the deterministic bounds; verdict confidence `1 − 2mp`.
    Sampled,
    /// Deterministic backward linear bounds over interval rectangles only;
    /// verdict confidence 1.
    Crown,
}

/// Projected-gradient attack schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PgdConfig {
    /// Descent steps per restart.
    pub steps: usize,
    /// Restarts; the first starts at the region center, the rest at uniform
    /// random points.
    pub restarts: usize,
    /// Step length as a fraction of each coordinate's radius.
    pub step_frac: f64,
}

impl Default for PgdConfig {
    fn default() -> PgdConfig {
        PgdConfig { steps: 60, restarts: 12, step_frac: 0.25 }
    }
}

/// Knobs for [`verify`] and [`certify_epsilon`].
#[derive(Debug, Clone, PartialEq)]
pub struct VerifierConfig {
    /// Accepted samples per domain.
    pub n: usize,
    /// Per-neuron, per-side escape mass; `None` splits a 1% two-sided budget
    /// evenly over the hidden neurons (`p = 0.005 / m`).
    pub p: Option<f64>,
    /// Tail-size exponent for the corrections.
    pub xi: f64,
    /// Subdomains bounded per round.
    pub batch: usize,
    pub timeout: Duration,
    /// Domains deeper than this are abandoned (verdict degrades to Unknown).
    pub max_depth: usize,
    pub split: SplitStrategy,
    pub method: BoundMethod,
    pub alpha_policy: AlphaPolicy,
    pub pgd: PgdConfig,
    pub seed: u64,
    /// Halve the per-domain sample count with depth (floored where the tail
    /// fits still have enough data).
    pub decay: bool,
}

impl Default for VerifierConfig {
    fn default() -> VerifierConfig {
        VerifierConfig {
            n: 10_000,
            p: None,
            xi: 0.85,
            batch: 8,
            timeout: Duration::from_secs(60),
            max_depth: 40,
            split: SplitStrategy::Auto,
            method: BoundMethod::Sampled,
            alpha_policy: AlphaPolicy::Zero,
            pgd: PgdConfig::default(),
            seed: 0,
            decay: false,
        }
    }
}

impl VerifierConfig {
    fn validate(&self) -> Result<(), VerifierError> {
        if self.batch == 0 {
            return Err(VerifierError::BadConfig { detail: "batch must be positive".into() });
        }
        if self.timeout.is_zero() {
            return Err(VerifierError::BadConfig { detail: "timeout must be positive".into() });
        }
        if let Some(p) = self.p {
            if !(p > 0.0 && p < 1.0) {
                return Err(VerifierError::BadConfig {
                    detail: format!("p must lie in (0, 1), got {p}"),
                });
            }
        }
        if self.method == BoundMethod::Sampled {
            if !(self.xi > 0.0 && self.xi < 1.0) {
                return Err(VerifierError::BadConfig {
                    detail: format!("xi must lie in (0, 1), got {}", self.xi),
                });
            }
            let needed = 2 * tail_count(self.n, self.xi) + 6;
            if self.n < needed {
                return Err(VerifierError::BadConfig {
                    detail: format!(
                        "n = {} leaves too little data outside the tails; need at least {} at xi = {}",
                        self.n, needed, self.xi
                    ),
                });
            }
        }
        Ok(())
    }

    /// Per-domain sample count at `depth`: halves per level under `decay`,
    /// but never past the point where the tail fits run out of data.
    fn samples_at_depth(&self, depth: usize) -> usize {
        if !self.decay {
            return self.n;
        }
        let mut n = self.n;
        for _ in 0..depth {
            let half = n / 2;
            if half >= 2 * tail_count(half, self.xi) + 6 {
                n = half;
            } else {
                break;
            }
        }
        n
    }
}

/// One unverified subproblem in the branch-and-bound tree.
#[derive(Debug, Clone)]
pub struct Domain {
    /// Input box (shrunk by input splits; sign splits keep the parent box).
    pub region: PerturbationSet,
    /// Accumulated neuron sign constraints from sign splits.
    pub split_constraints: Vec<SplitConstraint>,
    /// Latest `(f_lower, f_upper)` computed for this domain.
    pub bounds: (f64, f64),
    pub depth: usize,
}

/// Verification outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Robust,
    NotRobust,
    Unknown,
}

/// Counters and bounds describing a verification run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyStats {
    /// Domains bounded, including the root.
    pub domains_explored: usize,
    /// Branch-and-bound rounds (each re-samples a batch of children).
    pub resample_rounds: usize,
    /// Domains retired with a strictly positive lower bound.
    pub pruned: usize,
    /// Domains retired because their sign constraints were proven empty.
    pub infeasible_pruned: usize,
    /// Domains whose rejection sampling ran out of budget and fell back to
    /// deterministic sign-clipped bounds.
    pub fallback_bounds: usize,
    /// Domains abandoned at the depth cap or because nothing was splittable.
    pub abandoned: usize,
    /// Domains whose upper bound was negative without a concrete witness.
    pub bound_violations: usize,
    /// Smallest lower bound over the final leaf cover.
    pub final_lower: f64,
    pub wall_time_ms: f64,
}

/// Final answer of [`verify`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    /// `1 − 2mp` for Robust under sampled bounds, 1.0 for NotRobust (the
    /// counterexample is concrete) and for Robust under deterministic
    /// bounds, 0.0 for Unknown.
    pub confidence: f64,
    /// Present exactly when `status == NotRobust`; re-evaluates to a
    /// non-positive output inside the region.
    pub counterexample: Option<Vec<f64>>,
    pub stats: VerifyStats,
}

/// Projected gradient descent looking for `x` in the region with
/// `f(x) ≤ 0`. Returns a point only after re-evaluating it; `None` simply
/// means the attack failed, not that no counterexample exists.
pub fn pgd_attack(
    net: &Network,
    region: &PerturbationSet,
    pgd: &PgdConfig,
    seed: u64,
) -> Result<Option<Vec<f64>>, ModelError> {
    net.require_single_output()?;
    if region.dim() != net.input_dim() {
        return Err(ModelError::InputDimension {
            expected: net.input_dim(),
            found: region.dim(),
        });
    }
    let mut rng = crate::rng::stream_rng(seed, 0);
    let (lo, hi) = (region.lo(), region.hi());
    let center = region.center();
    let radii = region.radii();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for restart in 0..pgd.restarts.max(1) {
        let mut x: Vec<f64> = if restart == 0 {
            center.clone()
        } else {
            lo.iter()
                .zip(hi)
                .map(|(l, h)| if h > l { rng.random_range(*l..=*h) } else { *l })
                .collect()
        };
        for _ in 0..pgd.steps {
            let value = net.forward(&x)?;
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, x.clone()));
            }
            let grad = net.gradient(&x)?;
            for i in 0..x.len() {
                let step = pgd.step_frac * radii[i];
                x[i] = (x[i] - step * grad[i].signum()).clamp(lo[i], hi[i]);
            }
        }
        let value = net.forward(&x)?;
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, x));
        }
    }
    if let Some((_, x)) = best {
        // Trust only a fresh evaluation of the candidate.
        if net.forward(&x)? <= 0.0 && region.contains(&x, 0.0) {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

/// Interval propagation with sign constraints clipped in: an `active`
/// constraint floors that neuron's pre-activation rectangle at zero, an
/// `inactive` one caps it, and downstream layers see the clipped values.
/// Returns `None` when a clip empties a rectangle — proof that no input in
/// the box satisfies the constraints.
fn clipped_ibp(
    net: &Network,
    region: &PerturbationSet,
    constraints: &[SplitConstraint],
) -> Option<LayerBounds> {
    let mut current = IntervalVector { lo: region.lo().to_vec(), hi: region.hi().to_vec() };
    let mut pre = Vec::with_capacity(net.num_layers());
    for (i, layer) in net.layers().iter().enumerate() {
        let mut z = interval_affine(layer, &current);
        for c in constraints.iter().filter(|c| c.layer == i) {
            if c.active {
                z.lo[c.neuron] = z.lo[c.neuron].max(0.0);
            } else {
                z.hi[c.neuron] = z.hi[c.neuron].min(0.0);
            }
            if z.lo[c.neuron] > z.hi[c.neuron] {
                return None;
            }
        }
        pre.push(z.clone());
        current = match layer.activation {
            Activation::Relu => IntervalVector {
                lo: z.lo.iter().map(|l| l.max(0.0)).collect(),
                hi: z.hi.iter().map(|h| h.max(0.0)).collect(),
            },
            Activation::Linear => z,
        };
    }
    Some(LayerBounds { pre, provenance: Provenance::Ibp })
}

/// Result of bounding one domain.
struct DomainBounds {
    f_lower: f64,
    f_upper: f64,
    /// Raw sample statistics (absent on the deterministic path).
    estimate: Option<ReachEstimate>,
    /// Rectangles to drive neuron-split selection: tail-adjusted when
    /// sampling succeeded, sign-clipped interval bounds otherwise.
    rectangles: LayerBounds,
    /// Sampling ran out of rejection budget and deterministic bounds were
    /// used instead.
    fallback: bool,
}

enum BoundOutcome {
    Bounded(DomainBounds),
    /// The domain's sign constraints admit no input at all.
    Infeasible,
}

fn bound_domain(
    net: &Network,
    domain: &Domain,
    cfg: &VerifierConfig,
    evt: &EvtConfig,
    stream: u64,
) -> Result<BoundOutcome, VerifierError> {
    let Some(envelope) = clipped_ibp(net, &domain.region, &domain.split_constraints) else {
        return Ok(BoundOutcome::Infeasible);
    };
    let (det_lo, det_hi) = output_range(net, &envelope, &domain.region, cfg.alpha_policy);
    let out = envelope.output();
    let (env_lo, env_hi) = (out.lo[0], out.hi[0]);
    let mut f_lower = det_lo.max(env_lo);
    let mut f_upper = det_hi.min(env_hi);

    if cfg.method == BoundMethod::Crown {
        return Ok(BoundOutcome::Bounded(DomainBounds {
            f_lower,
            f_upper,
            estimate: None,
            rectangles: envelope,
            fallback: false,
        }));
    }

    let n = cfg.samples_at_depth(domain.depth);
    let plan = SamplePlan::new(n, tail_retention(n, cfg.xi), cfg.seed, stream);
    let estimate =
        match estimate_reachable_sets(net, &domain.region, &domain.split_constraints, &plan) {
            Ok(est) => est,
            Err(SamplingError::RejectionBudget { .. }) => {
                // The constrained cell is too thin to sample; keep the
                // deterministic sign-clipped bounds and let the caller force
                // an input split next time.
                return Ok(BoundOutcome::Bounded(DomainBounds {
                    f_lower,
                    f_upper,
                    estimate: None,
                    rectangles: envelope,
                    fallback: true,
                }));
            }
            Err(e) => return Err(e.into()),
        };
    let adjusted = adjust_bounds(&estimate, &envelope, evt)?;
    // Fold the backward relaxation over both the raw sampled rectangles and
    // the tail-adjusted ones, then keep the pointwise-best bound from every
    // source. Each lower candidate sits at or below the sampled minimum and
    // each upper candidate at or above the sampled maximum, so the combined
    // pair stays ordered. The tail-adjusted rectangles often clamp to the
    // interval envelope when the per-neuron exceedance budget is tiny, which
    // would throw away all sampling information — the raw fold is what
    // actually tightens, and it carries the same per-run confidence.
    let (smp_lo, smp_hi) = output_range(net, &estimate.bounds, &domain.region, cfg.alpha_policy);
    let (adj_lo, adj_hi) = output_range(net, &adjusted.bounds, &domain.region, cfg.alpha_policy);
    f_lower = f_lower.max(smp_lo).max(adj_lo);
    f_upper = f_upper.min(smp_hi).min(adj_hi);
    Ok(BoundOutcome::Bounded(DomainBounds {
        f_lower,
        f_upper,
        estimate: Some(estimate),
        rectangles: adjusted.bounds,
        fallback: false,
    }))
}

/// Split an undecided domain in two. `rectangles` supplies per-neuron
/// pre-activation intervals for neuron selection (ignored for input splits).
pub fn split_domain(
    net: &Network,
    domain: &Domain,
    strategy: SplitStrategy,
    rectangles: &LayerBounds,
) -> Result<(Domain, Domain), VerifierError> {
    let strategy = match strategy {
        SplitStrategy::Auto => {
            if domain.region.dim() <= 10 {
                SplitStrategy::Input
            } else {
                SplitStrategy::Relu
            }
        }
        s => s,
    };
    if strategy == SplitStrategy::Relu {
        // Widest unstable, not-yet-constrained neuron in a ReLU layer.
        let mut pick: Option<(usize, usize, f64)> = None;
        for (li, layer) in net.layers().iter().enumerate() {
            if layer.activation != Activation::Relu {
                continue;
            }
            let rect = &rectangles.pre[li];
            for j in 0..rect.len() {
                if rect.lo[j] < 0.0
                    && rect.hi[j] > 0.0
                    && !domain
                        .split_constraints
                        .iter()
                        .any(|c| c.layer == li && c.neuron == j)
                {
                    let w = rect.width(j);
                    if pick.map(|(_, _, best)| w > best).unwrap_or(true) {
                        pick = Some((li, j, w));
                    }
                }
            }
        }
        if let Some((layer, neuron, _)) = pick {
            let child = |active: bool| {
                let mut constraints = domain.split_constraints.clone();
                constraints.push(SplitConstraint { layer, neuron, active });
                Domain {
                    region: domain.region.clone(),
                    split_constraints: constraints,
                    bounds: domain.bounds,
                    depth: domain.depth + 1,
                }
            };
            return Ok((child(true), child(false)));
        }
        // All neurons stable: fall through to an input split.
    }
    let (lo, hi) = (domain.region.lo(), domain.region.hi());
    let mut coord = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..domain.region.dim() {
        let w = hi[i] - lo[i];
        if w > best {
            best = w;
            coord = i;
        }
    }
    if best < 1e-12 {
        return Err(VerifierError::Unsplittable);
    }
    let (left, right) = domain.region.bisect(coord);
    let child = |region: PerturbationSet| Domain {
        region,
        split_constraints: domain.split_constraints.clone(),
        bounds: domain.bounds,
        depth: domain.depth + 1,
    };
    Ok((child(left), child(right)))
}

/// Heap entry: pops smallest `f_lower` first, then insertion order.
struct QueueEntry {
    f_lower: f64,
    seq: u64,
    domain: Domain,
    rectangles: LayerBounds,
    /// False once rejection sampling failed here; forces input splits.
    sampled_ok: bool,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for QueueEntry {}
impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap: "greater" must mean "pop first", i.e. smaller bound.
        other
            .f_lower
            .total_cmp(&self.f_lower)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Cex {
    point: Vec<f64>,
}

/// Check a candidate violation against the original network and region.
fn revalidate(net: &Network, root: &PerturbationSet, x: &[f64]) -> Option<Cex> {
    let value = net.forward(x).ok()?;
    if value <= 0.0 && root.contains(x, 0.0) {
        Some(Cex { point: x.to_vec() })
    } else {
        None
    }
}

/// Verify `f(x) > 0` over the region by attack, probabilistic bounding, and
/// branch-and-bound. Timeouts and depth exhaustion yield `Unknown`, never an
/// error.
pub fn verify(
    net: &Network,
    region: &PerturbationSet,
    cfg: &VerifierConfig,
) -> Result<Verdict, VerifierError> {
    let start = Instant::now();
    net.require_single_output()?;
    if region.dim() != net.input_dim() {
        return Err(ModelError::InputDimension {
            expected: net.input_dim(),
            found: region.dim(),
        }
        .into());
    }
    cfg.validate()?;

    let m = net.hidden_neuron_count();
    let p = cfg.p.unwrap_or(0.005 / m.max(1) as f64);
    let evt = EvtConfig { p, xi: cfg.xi, fallback: FallbackPolicy::Spread };
    let robust_confidence = match cfg.method {
        BoundMethod::Sampled => network_confidence(m, p),
        BoundMethod::Crown => 1.0,
    };

    let mut stats = VerifyStats {
        domains_explored: 0,
        resample_rounds: 0,
        pruned: 0,
        infeasible_pruned: 0,
        fallback_bounds: 0,
        abandoned: 0,
        bound_violations: 0,
        final_lower: f64::INFINITY,
        wall_time_ms: 0.0,
    };
    let finish = |status: Status,
                  confidence: f64,
                  counterexample: Option<Vec<f64>>,
                  mut stats: VerifyStats|
     -> Verdict {
        stats.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        Verdict { status, confidence, counterexample, stats }
    };

    if let Some(cex) = pgd_attack(net, region, &cfg.pgd, cfg.seed)? {
        // No bounding ran, so no lower bound is known.
        stats.final_lower = f64::NEG_INFINITY;
        return Ok(finish(Status::NotRobust, 1.0, Some(cex), stats));
    }

    // Stream 0 belongs to the attack; domains take 1, 2, ... in creation
    // order so multi-threaded bounding stays reproducible.
    let mut next_stream: u64 = 1;
    let mut next_seq: u64 = 0;
    let root = Domain {
        region: region.clone(),
        split_constraints: Vec::new(),
        bounds: (f64::NEG_INFINITY, f64::INFINITY),
        depth: 0,
    };

    let mut queue: BinaryHeap<QueueEntry> = BinaryHeap::new();
    // Lower bounds of domains that left the queue for good.
    let mut retired_lower = f64::INFINITY;

    let enqueue = |outcome: BoundOutcome,
                       mut domain: Domain,
                       queue: &mut BinaryHeap<QueueEntry>,
                       stats: &mut VerifyStats,
                       retired_lower: &mut f64,
                       next_seq: &mut u64|
     -> Option<Cex> {
        stats.domains_explored += 1;
        let bounds = match outcome {
            BoundOutcome::Infeasible => {
                stats.infeasible_pruned += 1;
                return None;
            }
            BoundOutcome::Bounded(b) => b,
        };
        if bounds.fallback {
            stats.fallback_bounds += 1;
        }
        if let Some(est) = &bounds.estimate {
            if est.worst.value <= 0.0 {
                if let Some(cex) = revalidate(net, region, &est.worst.input) {
                    return Some(cex);
                }
            }
        }
        if bounds.f_upper < 0.0 {
            stats.bound_violations += 1;
        }
        domain.bounds = (bounds.f_lower, bounds.f_upper);
        if bounds.f_lower > 0.0 {
            stats.pruned += 1;
            *retired_lower = retired_lower.min(bounds.f_lower);
            return None;
        }
        if domain.depth >= cfg.max_depth {
            stats.abandoned += 1;
            *retired_lower = retired_lower.min(bounds.f_lower);
            return None;
        }
        let seq = *next_seq;
        *next_seq += 1;
        queue.push(QueueEntry {
            f_lower: bounds.f_lower,
            seq,
            domain,
            rectangles: bounds.rectangles,
            sampled_ok: !bounds.fallback,
        });
        None
    };

    let root_outcome = bound_domain(net, &root, cfg, &evt, next_stream)?;
    next_stream += 1;
    if let Some(cex) =
        enqueue(root_outcome, root, &mut queue, &mut stats, &mut retired_lower, &mut next_seq)
    {
        stats.final_lower = retired_lower.min(queue_min(&queue));
        return Ok(finish(Status::NotRobust, 1.0, Some(cex.point), stats));
    }

    while !queue.is_empty() {
        if start.elapsed() > cfg.timeout {
            stats.final_lower = retired_lower.min(queue_min(&queue));
            return Ok(finish(Status::Unknown, 0.0, None, stats));
        }
        stats.resample_rounds += 1;

        // Pop enough parents that their children fill one batch.
        let parents_wanted = (cfg.batch / 2).max(1);
        let mut parents = Vec::with_capacity(parents_wanted);
        while parents.len() < parents_wanted {
            match queue.pop() {
                Some(e) => parents.push(e),
                None => break,
            }
        }

        let mut children: Vec<(Domain, u64)> = Vec::with_capacity(parents.len() * 2);
        for parent in parents {
            let strategy = if parent.sampled_ok { cfg.split } else { SplitStrategy::Input };
            match split_domain(net, &parent.domain, strategy, &parent.rectangles) {
                Ok((a, b)) => {
                    children.push((a, next_stream));
                    children.push((b, next_stream + 1));
                    next_stream += 2;
                }
                Err(VerifierError::Unsplittable) => {
                    stats.abandoned += 1;
                    retired_lower = retired_lower.min(parent.f_lower);
                }
                Err(e) => return Err(e),
            }
        }

        let outcomes: Result<Vec<BoundOutcome>, VerifierError> = children
            .par_iter()
            .map(|(d, stream)| bound_domain(net, d, cfg, &evt, *stream))
            .collect();
        let outcomes = outcomes?;
        for ((domain, _), outcome) in children.into_iter().zip(outcomes) {
            if let Some(cex) =
                enqueue(outcome, domain, &mut queue, &mut stats, &mut retired_lower, &mut next_seq)
            {
                stats.final_lower = retired_lower.min(queue_min(&queue));
                return Ok(finish(Status::NotRobust, 1.0, Some(cex.point), stats));
            }
        }
    }

    stats.final_lower = retired_lower;
    if stats.abandoned == 0 {
        Ok(finish(Status::Robust, robust_confidence, None, stats))
    } else {
        Ok(finish(Status::Unknown, 0.0, None, stats))
    }
}

fn queue_min(queue: &BinaryHeap<QueueEntry>) -> f64 {
    queue.iter().map(|e| e.f_lower).fold(f64::INFINITY, f64::min)
}

/// Output bounds over the whole region from a single bounding pass — the
/// branch-and-bound root, without any splitting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootBounds {
    pub f_lower: f64,
    pub f_upper: f64,
    /// Interval spanned by the sampled outputs themselves (absent when the
    /// deterministic pipeline ran). Always contained in the true output
    /// range, since every sample is a real network evaluation.
    pub sampled_output: Option<(f64, f64)>,
    /// `1 − 2mp` when sampling backed the bound, 1.0 otherwise.
    pub confidence: f64,
}

/// Bound the output over `region` in one shot using the configured pipeline
/// (no attack, no branching). Uses the same random stream as [`verify`]'s
/// root domain, so the two agree on identical configurations.
pub fn bound_root(
    net: &Network,
    region: &PerturbationSet,
    cfg: &VerifierConfig,
) -> Result<RootBounds, VerifierError> {
    net.require_single_output()?;
    if region.dim() != net.input_dim() {
        return Err(ModelError::InputDimension {
            expected: net.input_dim(),
            found: region.dim(),
        }
        .into());
    }
    cfg.validate()?;
    let m = net.hidden_neuron_count();
    let p = cfg.p.unwrap_or(0.005 / m.max(1) as f64);
    let evt = EvtConfig { p, xi: cfg.xi, fallback: FallbackPolicy::Spread };
    let root = Domain {
        region: region.clone(),
        split_constraints: Vec::new(),
        bounds: (f64::NEG_INFINITY, f64::INFINITY),
        depth: 0,
    };
    let BoundOutcome::Bounded(bounds) = bound_domain(net, &root, cfg, &evt, 1)? else {
        unreachable!("the root domain has no sign constraints to make it infeasible");
    };
    let sampled_output = bounds.estimate.as_ref().map(|est| {
        let out = est.bounds.output();
        (out.lo[0], out.hi[0])
    });
    let confidence = if sampled_output.is_some() { network_confidence(m, p) } else { 1.0 };
    Ok(RootBounds { f_lower: bounds.f_lower, f_upper: bounds.f_upper, sampled_output, confidence })
}

/// Largest perturbation radius around `x0` (up to `eps_hi`) at which
/// [`verify`] still answers Robust, located by binary search to a precision
/// of `1e-4 · eps_hi`. Unknown verdicts count as not certified, so the
/// result is conservative.
pub fn certify_epsilon(
    net: &Network,
    x0: &[f64],
    cfg: &VerifierConfig,
    eps_hi: f64,
) -> Result<f64, VerifierError> {
    if !(eps_hi > 0.0 && eps_hi.is_finite()) {
        return Err(VerifierError::BadConfig {
            detail: format!("eps_hi must be positive and finite, got {eps_hi}"),
        });
    }
    let center_value = net.forward(x0)?;
    if center_value <= 0.0 {
        return Err(VerifierError::PropertyFailsAtCenter { value: center_value });
    }
    let robust_at = |eps: f64| -> Result<bool, VerifierError> {
        let region = PerturbationSet::new(x0.to_vec(), eps)?;
        Ok(verify(net, &region, cfg)?.status == Status::Robust)
    };
    if robust_at(eps_hi)? {
        return Ok(eps_hi);
    }
    let (mut lo, mut hi) = (0.0_f64, eps_hi);
    while hi - lo > 1e-4 * eps_hi {
        let mid = 0.5 * (lo + hi);
        if robust_at(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
