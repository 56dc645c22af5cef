//! Acceptance suite: nine go/no-go checks covering the whole pipeline, from
//! the toy-network golden values through statistical coverage to the
//! branch-and-bound verifier. Each check prints one `criterion N: PASS` line
//! (run with `--nocapture` to see them all).

use std::path::Path;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::Rng;

use relubound::crown::{backward_bounds, concretize, AlphaPolicy};
use relubound::evt::{evt_error, tail_count, worst_case_probability, FallbackPolicy, TailSide};
use relubound::interval::ibp;
use relubound::model::{
    load_network, load_property, Activation, Layer, Matrix, Network, PerturbationSet,
};
use relubound::oracle::exact_range;
use relubound::rng::stream_rng;
use relubound::sampling::{union_sample_size, wilks_sample_size};
use relubound::verifier::{
    bound_root, certify_epsilon, verify, BoundMethod, Status, VerifierConfig,
};

fn toy() -> (Network, PerturbationSet) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    (
        load_network(dir.join("toy_model.json")).expect("toy model fixture"),
        load_property(dir.join("toy_property.json")).expect("toy property fixture"),
    )
}

#[test]
fn criterion_1_toy_interval_and_backward_golden_values() {
    let start = Instant::now();
    let (net, region) = toy();

    let rects = ibp(&net, &region);
    let out = rects.output();
    assert_eq!(out.lo[0], -56.0, "interval lower bound");
    assert_eq!(out.hi[0], 32.0, "interval upper bound");

    let linear = backward_bounds(&net, &rects, AlphaPolicy::Zero);
    let (lower, upper) = concretize(&linear, &region);
    assert!((lower - -42.0).abs() <= 0.05, "backward lower {lower}");
    assert!((upper - 24.3).abs() <= 0.05, "backward upper {upper}");

    // Relaxation substituted at the second hidden layer on the lower side:
    // slopes diag(0.4375, 1) and intercepts (15.75, 0) — the chord through
    // [-36, 28] for the negatively-weighted neuron, identity for the stable
    // one.
    let relax = &linear.lower_relaxations[1];
    assert!((relax.slope[0] - 0.4375).abs() <= 1e-9, "slope {:?}", relax.slope);
    assert!((relax.slope[1] - 1.0).abs() <= 1e-9);
    assert!((relax.intercept[0] - 15.75).abs() <= 1e-9, "intercept {:?}", relax.intercept);
    assert!(relax.intercept[1].abs() <= 1e-9);

    // Final lower-side affine form over the input.
    let a = &linear.lower.coeffs;
    assert!((a[0] - -1.75).abs() <= 0.01 && (a[1] - -0.875).abs() <= 0.01, "coeffs {a:?}");
    assert!((linear.lower.constant - -35.88).abs() <= 0.01, "constant {}", linear.lower.constant);

    assert!(start.elapsed() < Duration::from_secs(1), "took {:?}", start.elapsed());
    println!(
        "criterion 1: PASS — interval [-56, 32] exact, backward [{lower:.4}, {upper:.4}], \
         relaxation artifacts match"
    );
}

#[test]
fn criterion_2_exact_oracle_range() {
    let start = Instant::now();
    let (net, region) = toy();
    let exact = exact_range(&net, &region, 20).expect("toy enumeration");
    assert!((exact.lo - -33.0).abs() <= 0.05, "oracle lower {}", exact.lo);
    assert!((exact.hi - 18.89).abs() <= 0.05, "oracle upper {}", exact.hi);
    assert!(exact.lp_calls <= 16, "{} pattern LPs", exact.lp_calls);
    assert!(start.elapsed() < Duration::from_secs(1), "took {:?}", start.elapsed());
    println!(
        "criterion 2: PASS — exact range [{:.4}, {:.4}] in {} LP calls",
        exact.lo, exact.hi, exact.lp_calls
    );
}

#[test]
fn criterion_3_sampled_bounds_tighten_crown_within_the_oracle_range() {
    let start = Instant::now();
    let (net, region) = toy();
    let exact = exact_range(&net, &region, 20).expect("toy enumeration");

    let seeds = 20u64;
    let mut lowers = Vec::with_capacity(seeds as usize);
    for seed in 0..seeds {
        let cfg = VerifierConfig { n: 10_000, seed, ..VerifierConfig::default() };
        let root = bound_root(&net, &region, &cfg).expect("root bounds");
        assert!(
            root.f_lower > -42.0,
            "seed {seed}: lower {} must strictly beat the deterministic -42",
            root.f_lower
        );
        let (s_lo, s_hi) = root.sampled_output.expect("sampled interval");
        assert!(
            s_lo >= exact.lo - 1e-9 && s_hi <= exact.hi + 1e-9,
            "seed {seed}: sampled interval [{s_lo}, {s_hi}] outside the exact range"
        );
        lowers.push(root.f_lower);
    }
    let mean = lowers.iter().sum::<f64>() / lowers.len() as f64;
    assert!((-35.5..=-33.5).contains(&mean), "seed-averaged lower bound {mean}");
    assert!(start.elapsed() < Duration::from_secs(10), "took {:?}", start.elapsed());
    println!(
        "criterion 3: PASS — seed-averaged sampled lower bound {mean:.4} over {seeds} seeds, \
         all runs tighter than -42 and inside the exact range"
    );
}

#[test]
fn criterion_4_tolerance_limit_sample_sizes_match_exact_arithmetic() {
    let wilks = wilks_sample_size(0.99, 0.995).expect("valid parameters");
    assert_eq!(wilks, 919);
    // Exact integer cross-check: n is the smallest count with
    // (199/200)^n ≤ 1/100, i.e. 199^n · 100 ≤ 200^n.
    let covers = |n: u32| BigUint::from(199u32).pow(n) * 100u32 <= BigUint::from(200u32).pow(n);
    assert!(covers(wilks as u32), "919 must reach the coverage target");
    assert!(!covers(wilks as u32 - 1), "918 must fall short");

    let union = union_sample_size(0.99, 0.999, 4).expect("valid parameters");
    assert!(union <= 10_000, "union size {union}");
    // Per-event confidence budget (1-psi)/4 = 1/400 at full per-event
    // coverage 999/1000: smallest n with 999^n · 400 ≤ 1000^n.
    let covers_union =
        |n: u32| BigUint::from(999u32).pow(n) * 400u32 <= BigUint::from(1000u32).pow(n);
    assert!(covers_union(union as u32));
    assert!(!covers_union(union as u32 - 1));
    println!("criterion 4: PASS — sizes {wilks} and {union} certified by exact integer powers");
}

#[test]
fn criterion_5_tolerance_intervals_cover_fresh_samples() {
    let start = Instant::now();
    let n = wilks_sample_size(0.95, 0.99).expect("valid parameters");
    let g = |x: f64| (3.0 * x).sin() + 0.5 * x;
    let (a, b) = (-2.0, 2.0);

    let trials = 200usize;
    let fresh_n = 100_000usize;
    // Each side promises ≥ 99% coverage with confidence 0.95; fresh-sample
    // noise gets its own 3σ slack on the 1% mass estimate.
    let mass_slack = 3.0 * (0.01_f64 * 0.99 / fresh_n as f64).sqrt();
    let mut lower_ok = 0usize;
    let mut upper_ok = 0usize;
    for trial in 0..trials {
        let mut rng = stream_rng(505, trial as u64);
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for _ in 0..n {
            let v = g(rng.random_range(a..b));
            min = min.min(v);
            max = max.max(v);
        }
        let mut below = 0usize;
        let mut above = 0usize;
        for _ in 0..fresh_n {
            let v = g(rng.random_range(a..b));
            if v < min {
                below += 1;
            } else if v > max {
                above += 1;
            }
        }
        if (below as f64) / (fresh_n as f64) <= 0.01 + mass_slack {
            lower_ok += 1;
        }
        if (above as f64) / (fresh_n as f64) <= 0.01 + mass_slack {
            upper_ok += 1;
        }
    }
    let need = 0.95 - 3.0 * (0.95_f64 * 0.05 / trials as f64).sqrt();
    let lower_rate = lower_ok as f64 / trials as f64;
    let upper_rate = upper_ok as f64 / trials as f64;
    assert!(lower_rate >= need, "lower-side success rate {lower_rate} < {need}");
    assert!(upper_rate >= need, "upper-side success rate {upper_rate} < {need}");
    assert!(start.elapsed() < Duration::from_secs(30), "took {:?}", start.elapsed());
    println!(
        "criterion 5: PASS — n = {n} samples cover each side in {lower_rate:.3}/{upper_rate:.3} \
         of {trials} trials (bar {need:.3})"
    );
}

#[test]
fn criterion_6_tail_corrections_cover_true_minima() {
    let start = Instant::now();
    let n = 10_000usize;
    let p = 0.01;
    let xi = 0.85;
    let nu = tail_count(n, xi);
    let trials = 300usize;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    let need = 1.0 - p - 3.0 * sigma;

    // Affine stream: boundary minimum, unit tail index. Quadratic stream:
    // interior minimum, tail index one-half (the conservative regime).
    let run = |name: &str, sample: &dyn Fn(&mut rand_chacha::ChaCha8Rng) -> f64, true_min: f64| {
        let mut covered = 0usize;
        for trial in 0..trials {
            let mut rng = stream_rng(606, trial as u64);
            let mut values: Vec<f64> = (0..n).map(|_| sample(&mut rng)).collect();
            values.sort_unstable_by(f64::total_cmp);
            let tail = &values[..nu + 2];
            let adj = evt_error(tail, nu, TailSide::Lower, p, FallbackPolicy::Spread)
                .expect("tail fit");
            let l_hat = tail[0] - adj.error;
            if l_hat <= true_min {
                covered += 1;
            }
        }
        let rate = covered as f64 / trials as f64;
        assert!(rate >= need, "{name}: coverage {rate} < {need}");
        rate
    };

    let affine_rate = run("affine", &|rng| 2.0 * rng.random_range(0.0..1.0) - 1.0, -1.0);
    let quad_rate = run(
        "quadratic",
        &|rng| {
            let x: f64 = rng.random_range(0.0..1.0);
            (x - 0.3) * (x - 0.3)
        },
        0.0,
    );
    assert!(start.elapsed() < Duration::from_secs(60), "took {:?}", start.elapsed());
    println!(
        "criterion 6: PASS — lower-tail coverage {affine_rate:.3} (affine) and {quad_rate:.3} \
         (quadratic) over {trials} trials (bar {need:.3})"
    );
}

/// Random single-output ReLU net with `dim` inputs plus a margin-separated
/// output shift, with the exact minimum attached. Instances whose minimum
/// sits within 15% of the range of zero are excluded by construction: sign
/// agreement is ill-posed for a probabilistic method at razor-edge margins.
fn margin_instance(rng: &mut impl Rng) -> (Network, PerturbationSet, f64) {
    loop {
        let dim = rng.random_range(2..=6);
        let h1 = rng.random_range(3..=6);
        let mut layers = vec![Layer {
            weights: Matrix::from_rows(
                (0..h1).map(|_| (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect()).collect(),
            )
            .unwrap(),
            bias: (0..h1).map(|_| rng.random_range(-0.5..0.5)).collect(),
            activation: Activation::Relu,
        }];
        let mut width = h1;
        if rng.random::<f64>() < 0.4 {
            let h2 = rng.random_range(3..=4);
            layers.push(Layer {
                weights: Matrix::from_rows(
                    (0..h2)
                        .map(|_| (0..width).map(|_| rng.random_range(-1.5..1.5)).collect())
                        .collect(),
                )
                .unwrap(),
                bias: (0..h2).map(|_| rng.random_range(-0.5..0.5)).collect(),
                activation: Activation::Relu,
            });
            width = h2;
        }
        layers.push(Layer {
            weights: Matrix::from_rows(vec![(0..width)
                .map(|_| rng.random_range(-1.5..1.5))
                .collect()])
            .unwrap(),
            bias: vec![0.0],
            activation: Activation::Linear,
        });
        let net = Network::from_layers(layers).unwrap();
        let region = PerturbationSet::new(
            (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect(),
            rng.random_range(0.3..0.8),
        )
        .unwrap();
        let exact = match exact_range(&net, &region, 20) {
            Ok(e) => e,
            Err(_) => continue,
        };
        let spread = (exact.hi - exact.lo).max(1e-3);
        let target = if rng.random::<f64>() < 0.5 { 1.0 } else { -1.0 };
        let shift = -exact.lo + target * 0.15 * spread;
        let mut layers = net.layers().to_vec();
        layers.last_mut().unwrap().bias[0] += shift;
        return (Network::from_layers(layers).unwrap(), region, exact.lo + shift);
    }
}

#[test]
fn criterion_7_verdicts_agree_with_the_exact_oracle() {
    let mut rng = stream_rng(707, 0);
    let instances = 50usize;
    let mut robust = 0usize;
    let mut not_robust = 0usize;
    let mut unknown = 0usize;
    for index in 0..instances {
        let (net, region, true_min) = margin_instance(&mut rng);
        let cfg = VerifierConfig {
            timeout: Duration::from_secs(30),
            seed: index as u64,
            ..VerifierConfig::default()
        };
        let verdict = verify(&net, &region, &cfg).expect("verification runs");
        match verdict.status {
            Status::Robust => {
                assert!(true_min > 0.0, "instance {index}: Robust but true minimum {true_min}");
                robust += 1;
            }
            Status::NotRobust => {
                assert!(
                    true_min <= 0.0,
                    "instance {index}: NotRobust but true minimum {true_min}"
                );
                let cex = verdict.counterexample.expect("witness required");
                assert!(net.forward(&cex).unwrap() <= 0.0, "instance {index}: stale witness");
                assert!(region.contains(&cex, 0.0), "instance {index}: witness outside region");
                not_robust += 1;
            }
            Status::Unknown => unknown += 1,
        }
    }
    assert!(unknown * 10 < instances, "{unknown}/{instances} Unknown is not below 10%");
    println!(
        "criterion 7: PASS — {robust} robust / {not_robust} not-robust verdicts all agree with \
         the exact minima; {unknown} unknown"
    );
}

#[test]
fn criterion_8_certified_radii_dominate_the_deterministic_pipeline() {
    let mut rng = stream_rng(808, 0);
    let nets = 30usize;
    let eps_hi = 1.0;
    let mut with_unstable = 0usize;
    let mut strict = 0usize;
    for index in 0..nets {
        // Build a net whose deterministic certification threshold falls
        // strictly inside (0, eps_hi): shift the output so the center value
        // is 30% of the deterministic bound's drop across the ball.
        let (net, x0, unstable) = loop {
            let h = rng.random_range(3..=5);
            let mut layers = vec![Layer {
                weights: Matrix::from_rows(
                    (0..h).map(|_| (0..2).map(|_| rng.random_range(-1.5..1.5)).collect()).collect(),
                )
                .unwrap(),
                bias: (0..h).map(|_| rng.random_range(-0.5..0.5)).collect(),
                activation: Activation::Relu,
            }];
            layers.push(Layer {
                weights: Matrix::from_rows(vec![(0..h)
                    .map(|_| rng.random_range(-1.5..1.5))
                    .collect()])
                .unwrap(),
                bias: vec![0.0],
                activation: Activation::Linear,
            });
            let net = Network::from_layers(layers).unwrap();
            let x0: Vec<f64> = (0..2).map(|_| rng.random_range(-0.3..0.3)).collect();
            let region = PerturbationSet::new(x0.clone(), eps_hi).unwrap();
            let f0 = net.forward(&x0).unwrap();
            let crown_cfg = VerifierConfig {
                method: BoundMethod::Crown,
                max_depth: 0,
                ..VerifierConfig::default()
            };
            let root = bound_root(&net, &region, &crown_cfg).unwrap();
            if root.f_lower >= f0 - 1e-6 {
                continue; // bound never crosses zero inside the ball
            }
            let center_target = 0.3 * (f0 - root.f_lower);
            let mut layers = net.layers().to_vec();
            layers.last_mut().unwrap().bias[0] += center_target - f0;
            let net = Network::from_layers(layers).unwrap();
            let rects = ibp(&net, &region);
            let unstable: usize = rects.pre[..rects.pre.len() - 1]
                .iter()
                .map(|r| r.lo.iter().zip(&r.hi).filter(|(l, h)| **l < 0.0 && **h > 0.0).count())
                .sum();
            break (net, x0, unstable);
        };

        let sampled_cfg = VerifierConfig {
            n: 2_000,
            max_depth: 0,
            seed: index as u64,
            ..VerifierConfig::default()
        };
        let crown_cfg = VerifierConfig {
            method: BoundMethod::Crown,
            max_depth: 0,
            seed: index as u64,
            ..VerifierConfig::default()
        };
        let sampled_eps = certify_epsilon(&net, &x0, &sampled_cfg, eps_hi).expect("certify");
        let crown_eps = certify_epsilon(&net, &x0, &crown_cfg, eps_hi).expect("certify");
        assert!(
            sampled_eps >= crown_eps,
            "net {index}: sampled radius {sampled_eps} below deterministic {crown_eps}"
        );
        if unstable >= 2 {
            with_unstable += 1;
            if sampled_eps > crown_eps + 1e-9 {
                strict += 1;
            }
        }
    }
    assert!(with_unstable >= 10, "only {with_unstable} nets had ≥ 2 unstable neurons");
    assert!(
        2 * strict >= with_unstable,
        "strict improvement on {strict}/{with_unstable} nets with ≥ 2 unstable neurons"
    );
    println!(
        "criterion 8: PASS — sampled certified radius ≥ deterministic on all {nets} nets, \
         strictly larger on {strict}/{with_unstable} with ≥ 2 unstable neurons"
    );
}

#[test]
fn criterion_9_excess_probability_matches_the_1d_closed_form() {
    let closed = |n: f64, delta: f64, lip: f64| 1.0 - (-2.0 * n * delta / lip).exp();
    for n in [1usize, 10, 100, 1_000, 10_000] {
        for delta in [1e-3, 1e-2, 0.1, 0.5] {
            for lip in [0.5, 1.0, 2.0, 10.0] {
                let got = worst_case_probability(n, delta, lip, 1).expect("valid parameters");
                let want = closed(n as f64, delta, lip);
                assert!(
                    (got - want).abs() <= 1e-10,
                    "n={n} delta={delta} L={lip}: {got} vs {want}"
                );
            }
        }
    }

    // Nondecreasing in n and delta, nonincreasing in L and (for delta/L < 1)
    // in the dimension.
    let mut prev = 0.0;
    for n in [1usize, 10, 100, 1_000] {
        let w = worst_case_probability(n, 0.01, 1.0, 2).unwrap();
        assert!(w >= prev);
        prev = w;
    }
    let mut prev = 0.0;
    for delta in [0.001, 0.01, 0.1, 0.5] {
        let w = worst_case_probability(100, delta, 1.0, 2).unwrap();
        assert!(w >= prev);
        prev = w;
    }
    let mut prev = 1.0;
    for lip in [0.5, 1.0, 2.0, 10.0] {
        let w = worst_case_probability(100, 0.01, lip, 2).unwrap();
        assert!(w <= prev);
        prev = w;
    }
    let mut prev = 1.0;
    for dim in 1..=6 {
        let w = worst_case_probability(1_000, 0.05, 1.0, dim).unwrap();
        assert!(w <= prev, "dimension {dim}: {w} > {prev}");
        prev = w;
    }
    println!("criterion 9: PASS — 1-D closed form to 1e-10 and all four monotonicities");
}
