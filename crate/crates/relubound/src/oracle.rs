//! Exact output range by activation-pattern enumeration.
//!
//! On any fixed assignment of signs to the ReLU pre-activations the network
//! collapses to one affine function, valid on the polytope where the input
//! box and the sign constraints agree. Enumerating sign patterns therefore
//! partitions the box into linear cells; minimizing and maximizing the cell's
//! affine output with an LP over each feasible cell gives the exact reachable
//! range — exponential in the number of genuinely unstable neurons, which is
//! why this is an oracle for small networks rather than a verifier.
//!
//! Two prunings keep the tree small: neurons whose interval bounds are
//! one-signed never branch, and within a branch the exact affine form of a
//! pre-activation often proves one-signedness over the whole box even when
//! interval propagation could not. Deep branches additionally get an LP
//! feasibility probe so an infeasible subtree dies before it forks.

use rayon::prelude::*;
use thiserror::Error;

use crate::interval::ibp;
use crate::model::{Activation, ModelError, Network, PerturbationSet};
use crate::simplex::{solve_lp, LpError, LpProblem, LpSolution};

/// Errors from exact-range computation.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{count} unstable neurons exceed the enumeration cap {max}")]
    TooManyUnstable { count: usize, max: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("no activation pattern admitted a feasible cell (numerical inconsistency)")]
    NoFeasiblePattern,
    #[error("internal inconsistency: {detail}")]
    Internal { detail: String },
}

/// Exact reachable output range with witnesses and search statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactRange {
    pub lo: f64,
    pub hi: f64,
    /// Input achieving `lo` (vertex of some cell).
    pub argmin: Vec<f64>,
    /// Input achieving `hi`.
    pub argmax: Vec<f64>,
    /// Sign patterns whose cells turned out non-empty.
    pub feasible_patterns: usize,
    /// Leaves reached by the enumeration (feasible or not).
    pub explored_patterns: usize,
    /// Total simplex invocations, including feasibility probes.
    pub lp_calls: usize,
}

/// Branches with at least this many accumulated sign constraints get an LP
/// feasibility probe before forking further; shallow trees skip the probes
/// because the leaf LPs discover infeasibility cheaply enough.
const PROBE_DEPTH: usize = 8;

/// One fully-determined cell: the output restricted to it, and the halfspaces
/// carving it out of the box.
struct Leaf {
    coeffs: Vec<f64>,
    constant: f64,
    constraints: Vec<(Vec<f64>, f64)>,
}

/// Range of an affine form over the input box.
fn affine_range(coeffs: &[f64], constant: f64, region: &PerturbationSet) -> (f64, f64) {
    let center = region.center();
    let radii = region.radii();
    let mid = coeffs.iter().zip(&center).map(|(a, c)| a * c).sum::<f64>() + constant;
    let spread: f64 = coeffs.iter().zip(&radii).map(|(a, r)| a.abs() * r).sum();
    (mid - spread, mid + spread)
}

struct Explorer<'a> {
    net: &'a Network,
    region: &'a PerturbationSet,
    ibp_pre: Vec<crate::interval::IntervalVector>,
    leaves: Vec<Leaf>,
    probe_calls: usize,
}

impl Explorer<'_> {
    /// Enumerate sign choices for layer `li` given the affine forms of the
    /// previous layer's post-activations, then recurse into the next layer.
    fn explore_layer(
        &mut self,
        li: usize,
        post_rows: &[Vec<f64>],
        post_consts: &[f64],
        constraints: &mut Vec<(Vec<f64>, f64)>,
    ) -> Result<(), OracleError> {
        let layer = &self.net.layers()[li];
        let width = layer.out_dim();
        let d0 = self.region.dim();

        // Pre-activation affine forms for this layer.
        let mut rows = Vec::with_capacity(width);
        let mut consts = Vec::with_capacity(width);
        for r in 0..width {
            let w = layer.weights.row(r);
            let mut row = vec![0.0; d0];
            let mut c = layer.bias[r];
            for (k, wk) in w.iter().enumerate() {
                if *wk != 0.0 {
                    for (dst, src) in row.iter_mut().zip(&post_rows[k]) {
                        *dst += wk * src;
                    }
                    c += wk * post_consts[k];
                }
            }
            rows.push(row);
            consts.push(c);
        }

        if li + 1 == self.net.num_layers() {
            // Output layer: the network is affine here; record the leaf.
            self.leaves.push(Leaf {
                coeffs: rows.into_iter().next().expect("single output row"),
                constant: consts[0],
                constraints: constraints.clone(),
            });
            return Ok(());
        }

        if layer.activation == Activation::Linear {
            return self.explore_layer(li + 1, &rows, &consts, constraints);
        }
        self.assign_neuron(li, 0, &rows, &consts, Vec::new(), Vec::new(), constraints)
    }

    /// Walk the layer's neurons, fixing provably one-signed ones and forking
    /// on the rest.
    #[allow(clippy::too_many_arguments)]
    fn assign_neuron(
        &mut self,
        li: usize,
        j: usize,
        rows: &[Vec<f64>],
        consts: &[f64],
        mut post_rows: Vec<Vec<f64>>,
        mut post_consts: Vec<f64>,
        constraints: &mut Vec<(Vec<f64>, f64)>,
    ) -> Result<(), OracleError> {
        let d0 = self.region.dim();
        if j == rows.len() {
            return self.explore_layer(li + 1, &post_rows, &post_consts, constraints);
        }
        let (a, c) = (&rows[j], consts[j]);
        let (form_lo, form_hi) = affine_range(a, c, self.region);
        let ibp_rect = &self.ibp_pre[li];
        let active = ibp_rect.lo[j] >= 0.0 || form_lo >= 0.0;
        let inactive = !active && (ibp_rect.hi[j] <= 0.0 || form_hi <= 0.0);

        if active {
            post_rows.push(a.clone());
            post_consts.push(c);
            return self.assign_neuron(li, j + 1, rows, consts, post_rows, post_consts, constraints);
        }
        if inactive {
            post_rows.push(vec![0.0; d0]);
            post_consts.push(0.0);
            return self.assign_neuron(li, j + 1, rows, consts, post_rows, post_consts, constraints);
        }

        // Genuinely two-signed: fork. Active branch demands a·x + c ≥ 0,
        // i.e. (−a)·x ≤ c; inactive demands a·x ≤ −c.
        let neg_a: Vec<f64> = a.iter().map(|v| -v).collect();

        {
            constraints.push((neg_a, c));
            if self.branch_is_viable(constraints)? {
                let mut pr = post_rows.clone();
                let mut pc = post_consts.clone();
                pr.push(a.clone());
                pc.push(c);
                self.assign_neuron(li, j + 1, rows, consts, pr, pc, constraints)?;
            }
            constraints.pop();
        }
        {
            constraints.push((a.clone(), -c));
            if self.branch_is_viable(constraints)? {
                post_rows.push(vec![0.0; d0]);
                post_consts.push(0.0);
                self.assign_neuron(li, j + 1, rows, consts, post_rows, post_consts, constraints)?;
            }
            constraints.pop();
        }
        Ok(())
    }

    /// Deep branches get a phase-1 LP probe; shallow ones are always viable.
    fn branch_is_viable(&mut self, constraints: &[(Vec<f64>, f64)]) -> Result<bool, OracleError> {
        if constraints.len() < PROBE_DEPTH {
            return Ok(true);
        }
        self.probe_calls += 1;
        let problem = LpProblem {
            objective: vec![0.0; self.region.dim()],
            constraints: constraints.to_vec(),
            lower: self.region.lo().to_vec(),
            upper: self.region.hi().to_vec(),
        };
        Ok(!matches!(solve_lp(&problem)?, LpSolution::Infeasible))
    }
}

/// Exact reachable range of a single-output network over the box.
///
/// `max_unstable` caps the number of interval-unstable ReLU neurons before
/// enumeration is attempted; beyond roughly 20 the worst case is hopeless.
pub fn exact_range(
    net: &Network,
    region: &PerturbationSet,
    max_unstable: usize,
) -> Result<ExactRange, OracleError> {
    net.require_single_output()?;
    if region.dim() != net.input_dim() {
        return Err(ModelError::InputDimension {
            expected: net.input_dim(),
            found: region.dim(),
        }
        .into());
    }
    let envelope = ibp(net, region);
    let unstable: usize = net
        .layers()
        .iter()
        .enumerate()
        .filter(|(_, l)| l.activation == Activation::Relu)
        .map(|(i, l)| {
            (0..l.out_dim())
                .filter(|&j| envelope.pre[i].lo[j] < 0.0 && envelope.pre[i].hi[j] > 0.0)
                .count()
        })
        .sum();
    if unstable > max_unstable {
        return Err(OracleError::TooManyUnstable { count: unstable, max: max_unstable });
    }

    let d0 = net.input_dim();
    let identity: Vec<Vec<f64>> = (0..d0)
        .map(|i| {
            let mut row = vec![0.0; d0];
            row[i] = 1.0;
            row
        })
        .collect();
    let mut explorer = Explorer {
        net,
        region,
        ibp_pre: envelope.pre,
        leaves: Vec::new(),
        probe_calls: 0,
    };
    let mut constraints = Vec::new();
    explorer.explore_layer(0, &identity, &vec![0.0; d0], &mut constraints)?;

    let explored = explorer.leaves.len();

    // Each feasible leaf contributes a min and a max LP; infeasible leaves
    // are discovered by their first LP and contribute nothing.
    struct LeafOutcome {
        lp_calls: usize,
        range: Option<(f64, Vec<f64>, f64, Vec<f64>)>,
    }
    let outcomes: Result<Vec<LeafOutcome>, OracleError> = explorer
        .leaves
        .par_iter()
        .map(|leaf| {
            let base = LpProblem {
                objective: leaf.coeffs.clone(),
                constraints: leaf.constraints.clone(),
                lower: region.lo().to_vec(),
                upper: region.hi().to_vec(),
            };
            let min_sol = solve_lp(&base)?;
            let (min_val, min_pt) = match min_sol {
                LpSolution::Optimal { value, point } => (value + leaf.constant, point),
                LpSolution::Infeasible => {
                    return Ok(LeafOutcome { lp_calls: 1, range: None })
                }
                LpSolution::Unbounded => {
                    return Err(OracleError::Internal {
                        detail: "bounded cell reported unbounded".to_string(),
                    })
                }
            };
            let neg = LpProblem {
                objective: leaf.coeffs.iter().map(|v| -v).collect(),
                ..base
            };
            let (max_val, max_pt) = match solve_lp(&neg)? {
                LpSolution::Optimal { value, point } => (-value + leaf.constant, point),
                other => {
                    return Err(OracleError::Internal {
                        detail: format!("max LP on a feasible cell returned {other:?}"),
                    })
                }
            };
            Ok(LeafOutcome {
                lp_calls: 2,
                range: Some((min_val, min_pt, max_val, max_pt)),
            })
        })
        .collect();
    let outcomes = outcomes?;

    let mut lp_calls = explorer.probe_calls;
    let mut feasible = 0;
    let mut best: Option<(f64, Vec<f64>, f64, Vec<f64>)> = None;
    for o in outcomes {
        lp_calls += o.lp_calls;
        if let Some((lo, lo_pt, hi, hi_pt)) = o.range {
            feasible += 1;
            best = Some(match best {
                None => (lo, lo_pt, hi, hi_pt),
                Some((blo, blo_pt, bhi, bhi_pt)) => {
                    let (nlo, nlo_pt) = if lo < blo { (lo, lo_pt) } else { (blo, blo_pt) };
                    let (nhi, nhi_pt) = if hi > bhi { (hi, hi_pt) } else { (bhi, bhi_pt) };
                    (nlo, nlo_pt, nhi, nhi_pt)
                }
            });
        }
    }
    let Some((lo, argmin, hi, argmax)) = best else {
        return Err(OracleError::NoFeasiblePattern);
    };
    Ok(ExactRange {
        lo,
        hi,
        argmin,
        argmax,
        feasible_patterns: feasible,
        explored_patterns: explored,
        lp_calls,
    })
}
