//! Interval bound propagation through affine layers and ReLU.
//!
//! The interval transformer pushes an axis-aligned box through each layer:
//! affine maps distribute signed weights over the endpoint pair, ReLU clamps
//! both endpoints at zero. The result is a sound but often loose enclosure of
//! every pre-activation and of the output; downstream relaxations only need
//! the pre-activation rectangles, so that is what [`ibp`] records.

use serde::{Deserialize, Serialize};

use crate::model::{Activation, Layer, Network, PerturbationSet};

/// How a set of intermediate bounds was produced. Sound provenances guarantee
/// containment of the true reachable set; `Sampled` bounds hold only with the
/// statistical confidence attached to the sampling plan that built them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Interval bound propagation: sound.
    Ibp,
    /// Empirical min/max over a tolerance-limit sample: probabilistically sound.
    Sampled,
    /// Sampled bounds widened by a tail-model error estimate and clamped into
    /// the guaranteed envelope: still probabilistic, but never looser than the
    /// guaranteed rectangles they were clamped against.
    Adjusted,
}

/// Lower/upper bounds for one vector of neurons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalVector {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl IntervalVector {
    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }

    /// True iff every coordinate satisfies `lo <= hi`.
    pub fn is_consistent(&self) -> bool {
        self.lo.iter().zip(&self.hi).all(|(l, h)| l <= h)
    }

    /// Coordinate-wise intersection with another interval vector.
    pub fn intersect(&self, other: &IntervalVector) -> IntervalVector {
        IntervalVector {
            lo: self
                .lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| a.max(*b))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| a.min(*b))
                .collect(),
        }
    }

    /// True iff `self` is contained in `other` up to `tol` per endpoint.
    pub fn contained_in(&self, other: &IntervalVector, tol: f64) -> bool {
        self.lo
            .iter()
            .zip(&other.lo)
            .all(|(a, b)| *a >= b - tol)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| *a <= b + tol)
    }
}

/// Pre-activation rectangles for every layer of a network, plus the output
/// interval, tagged with how they were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerBounds {
    /// One entry per layer, in forward order; entry `i` bounds `z⁽ⁱ⁺¹⁾`
    /// *before* its activation. The final entry bounds the output.
    pub pre: Vec<IntervalVector>,
    pub provenance: Provenance,
}

impl LayerBounds {
    /// The output interval (last layer is affine, so pre = post).
    pub fn output(&self) -> &IntervalVector {
        self.pre.last().expect("bounds cover at least one layer")
    }

    /// Bounds for hidden layer `i` (0-based), i.e. the ReLU inputs.
    pub fn hidden(&self, i: usize) -> &IntervalVector {
        &self.pre[i]
    }
}

/// Propagate an interval through one affine layer: for each row, sort weight
/// signs onto the matching endpoints.
pub fn interval_affine(layer: &Layer, input: &IntervalVector) -> IntervalVector {
    let n = layer.out_dim();
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for i in 0..n {
        let mut l = layer.bias[i];
        let mut h = layer.bias[i];
        for (j, w) in layer.weights.row(i).iter().enumerate() {
            if *w >= 0.0 {
                l += w * input.lo[j];
                h += w * input.hi[j];
            } else {
                l += w * input.hi[j];
                h += w * input.lo[j];
            }
        }
        lo.push(l);
        hi.push(h);
    }
    IntervalVector { lo, hi }
}

fn relu_interval(v: &IntervalVector) -> IntervalVector {
    IntervalVector {
        lo: v.lo.iter().map(|l| l.max(0.0)).collect(),
        hi: v.hi.iter().map(|h| h.max(0.0)).collect(),
    }
}

/// Interval bound propagation over the whole network for an input box.
pub fn ibp(net: &Network, region: &PerturbationSet) -> LayerBounds {
    let mut current = IntervalVector {
        lo: region.lo().to_vec(),
        hi: region.hi().to_vec(),
    };
    let mut pre = Vec::with_capacity(net.num_layers());
    for layer in net.layers() {
        let z = interval_affine(layer, &current);
        pre.push(z.clone());
        current = match layer.activation {
            Activation::Relu => relu_interval(&z),
            Activation::Linear => z,
        };
    }
    LayerBounds {
        pre,
        provenance: Provenance::Ibp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{toy_network, toy_region};
    use crate::rng::stream_rng;
    use rand::Rng;

    #[test]
    fn toy_layer_rectangles() {
        let bounds = ibp(&toy_network(), &toy_region());
        assert_eq!(bounds.provenance, Provenance::Ibp);
        assert_eq!(bounds.pre.len(), 3);
        // Layer 1: 2x+y over [−2,2]×[−1,3] → [−5,7]; −3x+4y → [−10,18].
        assert_eq!(bounds.pre[0].lo, vec![-5.0, -10.0]);
        assert_eq!(bounds.pre[0].hi, vec![7.0, 18.0]);
        // Layer 2 from ReLU([−5,7]×[−10,18]) = [0,7]×[0,18]:
        // 4a−2b → [−36,28]; 2a+b → [0,32].
        assert_eq!(bounds.pre[1].lo, vec![-36.0, 0.0]);
        assert_eq!(bounds.pre[1].hi, vec![28.0, 32.0]);
        // Output −2c+d from [0,28]×[0,32] → [−56,32].
        assert_eq!(bounds.output().lo, vec![-56.0]);
        assert_eq!(bounds.output().hi, vec![32.0]);
    }

    #[test]
    fn affine_is_exact_for_single_layer() {
        // For one affine row over a box the interval transformer is exact:
        // compare against corner enumeration.
        let net = toy_network();
        let layer = &net.layers()[0];
        let input = IntervalVector {
            lo: vec![-2.0, -1.0],
            hi: vec![2.0, 3.0],
        };
        let out = interval_affine(layer, &input);
        let corners = [
            [-2.0, -1.0],
            [-2.0, 3.0],
            [2.0, -1.0],
            [2.0, 3.0],
        ];
        for i in 0..2 {
            let vals: Vec<f64> = corners
                .iter()
                .map(|c| layer.weights.row(i).iter().zip(c).map(|(w, x)| w * x).sum::<f64>())
                .collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(out.lo[i], lo);
            assert_eq!(out.hi[i], hi);
        }
    }

    #[test]
    fn ibp_contains_sampled_values() {
        // Soundness probe: every sampled trajectory stays inside every rectangle.
        let net = toy_network();
        let region = toy_region();
        let bounds = ibp(&net, &region);
        let mut rng = stream_rng(29, 0);
        for _ in 0..500 {
            let x: Vec<f64> = region
                .lo()
                .iter()
                .zip(region.hi())
                .map(|(l, h)| rng.random_range(*l..=*h))
                .collect();
            let pres = net.preactivations(&x).unwrap();
            for (rect, z) in bounds.pre.iter().zip(&pres) {
                for (i, zi) in z.iter().enumerate() {
                    assert!(
                        *zi >= rect.lo[i] - 1e-12 && *zi <= rect.hi[i] + 1e-12,
                        "value {zi} escapes [{}, {}]",
                        rect.lo[i],
                        rect.hi[i]
                    );
                }
            }
        }
    }

    #[test]
    fn degenerate_region_gives_point_intervals() {
        let net = toy_network();
        let region = crate::model::PerturbationSet::new(vec![0.0, 1.0], 0.0).unwrap();
        let bounds = ibp(&net, &region);
        let pres = net.preactivations(&[0.0, 1.0]).unwrap();
        for (rect, z) in bounds.pre.iter().zip(&pres) {
            assert_eq!(rect.lo, *z);
            assert_eq!(rect.hi, *z);
        }
        assert_eq!(bounds.output().lo[0], 6.0);
        assert_eq!(bounds.output().hi[0], 6.0);
    }

    #[test]
    fn interval_vector_ops() {
        let a = IntervalVector { lo: vec![0.0, -1.0], hi: vec![2.0, 1.0] };
        let b = IntervalVector { lo: vec![1.0, -2.0], hi: vec![3.0, 0.5] };
        let c = a.intersect(&b);
        assert_eq!(c.lo, vec![1.0, -1.0]);
        assert_eq!(c.hi, vec![2.0, 0.5]);
        assert!(c.is_consistent());
        assert!(c.contained_in(&a, 0.0));
        assert!(c.contained_in(&b, 0.0));
        let empty = IntervalVector { lo: vec![2.0], hi: vec![1.0] };
        assert!(!empty.is_consistent());
    }

    #[test]
    fn monotone_in_region_size() {
        // Growing the box can only widen every rectangle.
        let net = toy_network();
        let small = crate::model::PerturbationSet::new(vec![0.0, 1.0], 1.0).unwrap();
        let large = toy_region();
        let bs = ibp(&net, &small);
        let bl = ibp(&net, &large);
        for (s, l) in bs.pre.iter().zip(&bl.pre) {
            assert!(s.contained_in(l, 0.0));
        }
    }
}
