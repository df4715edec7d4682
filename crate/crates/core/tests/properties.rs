use std::f64::consts::PI;

use proptest::prelude::*;
use teich_recur::deviations::*;
use teich_recur::flat::*;
use teich_recur::hyperbolic::*;
use teich_recur::markov::*;
use teich_recur::walk::{run_walk, WalkConfig};

fn hpoint() -> impl Strategy<Value = HPoint> {
    (-5.0..5.0f64, 0.05..20.0f64).prop_map(|(x, y)| HPoint::new(x, y).unwrap())
}

/// `[[a, b], [c, d]]` with determinant one, as a product of a shear, a scaling and a rotation.
fn sl2() -> impl Strategy<Value = Isometry2> {
    (-2.0..2.0f64, -1.5..1.5f64, 0.0..2.0 * PI).prop_map(|(u, t, th)| {
        let shear = Isometry2::new(1.0, u, 0.0, 1.0).unwrap();
        shear.compose(&Isometry2::geodesic(t)).compose(&Isometry2::rotation(th))
    })
}

fn permutation(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|v| Permutation::from_images(v).unwrap())
}

fn origami() -> impl Strategy<Value = TranslationSurface> {
    (1usize..=6)
        .prop_flat_map(|n| (permutation(n), permutation(n)))
        .prop_filter_map("disconnected", |(h, v)| build_origami(&h, &v).ok())
}

fn sojourns() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..5.0f64, 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_a_metric(p in hpoint(), q in hpoint(), r in hpoint()) {
        let (pq, qp, pr, qr) = (distance(p, q).unwrap(), distance(q, p).unwrap(), distance(p, r).unwrap(), distance(q, r).unwrap());
        prop_assert!(distance(p, p).unwrap().abs() < 1e-9);
        prop_assert!(pq >= 0.0);
        prop_assert!((pq - qp).abs() <= 1e-9 * (1.0 + pq));
        prop_assert!(pr <= pq + qr + 1e-9 * (1.0 + pr));
    }

    #[test]
    fn isometries_preserve_distance(g in sl2(), p in hpoint(), q in hpoint()) {
        let d = distance(p, q).unwrap();
        let moved = distance(apply(&g, p).unwrap(), apply(&g, q).unwrap()).unwrap();
        prop_assert!((d - moved).abs() <= 1e-7 * (1.0 + d));
    }

    #[test]
    fn polar_round_trip(t1 in 0.1..20.0f64, t2 in 0.1..20.0f64, phi in -3.0..3.0f64) {
        let pc = PolarChange::new(t1, t2).unwrap();
        let (d, psi) = (pc.radius(phi).unwrap(), pc.angle(phi).unwrap());
        let rebuilt = polar_point(d, psi).unwrap();
        let (seen_d, seen_psi) = polar_coordinates(pc.circle_point(phi).unwrap()).unwrap();
        prop_assert!((seen_d - d).abs() <= 1e-8 * d.max(1.0));
        prop_assert!(wrap_angle(seen_psi - psi).abs() <= 1e-8);
        if d < 15.0 {
            prop_assert!(distance(rebuilt, pc.circle_point(phi).unwrap()).unwrap() < 1e-8);
        }
    }

    #[test]
    fn radius_derivative_identity(t1 in 0.1..12.0f64, t2 in 0.1..12.0f64, phi in 0.05..3.0f64) {
        let pc = PolarChange::new(t1, t2).unwrap();
        let h = FD_STEP;
        let fd = (pc.radius(phi + h).unwrap() - pc.radius(phi - h).unwrap()) / (2.0 * h);
        let scale = t1.sinh() * t2.sinh() * phi.sin();
        let residual = fd * pc.radius(phi).unwrap().sinh() + scale;
        prop_assert!(residual.abs() <= 1e-6 * scale.abs().max(1e-3), "residual {residual}");
    }

    #[test]
    fn psi_is_injective_when_i_is_inside(t1 in 0.1..8.0f64, gap in 0.05..4.0f64) {
        let pc = PolarChange::new(t1, t1 + gap).unwrap();
        let mut prev = pc.angle(0.0).unwrap();
        let mut total = 0.0;
        for k in 1..=2000 {
            let psi = pc.angle(2.0 * PI * k as f64 / 2000.0).unwrap();
            let step = wrap_angle(psi - prev);
            prop_assert!(step > 0.0);
            total += step;
            prev = psi;
        }
        prop_assert!((total - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn derivative_ratios_at_large_equal_radii(t in 12.0..20.0f64) {
        // the lower bound of the claim holds; the upper one is off by the factor 2/(1+η)
        let r = derivative_bound_report(&PolarChange::new(t, t).unwrap(), 0.05).unwrap();
        prop_assert!(r.worst_lower_ratio <= 1.0);
        prop_assert!((r.worst_upper_ratio - 2.0 / 1.05).abs() < 0.01);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gauss_bonnet_on_origamis(s in origami()) {
        let excess: i64 = s.cone_points().iter().map(|c| c.multiple as i64 - 1).sum();
        prop_assert_eq!(excess, 2 * s.genus() as i64 - 2);
    }

    #[test]
    fn area_and_saddles_are_invariant(s in origami(), g in sl2(), theta in 0.0..2.0 * PI) {
        let moved = s.apply_linear(&g).unwrap();
        prop_assert!((moved.area() - s.area()).abs() <= 1e-9 * s.area());
        let rotated = s.apply_linear_delaunay(&Isometry2::rotation(theta)).unwrap();
        let (a, b) = (v0(&s, 0.5).unwrap(), v0(&rotated, 0.5).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn hitting_bound_is_monotone(c in 0.05..0.95f64, b in 0.1..4.0f64, extra in 0.1..10.0f64, ratio in 1.6..100.0f64, n in 0u32..50) {
        let dc = DriftCondition::new(c, b).unwrap();
        let l = b / (1.0 - c) + extra;
        // start outside the larger level too
        let v = ratio * l;
        let here = hitting_tail_bound(v, &dc, l, n).unwrap().value;
        prop_assert!(hitting_tail_bound(v, &dc, l, n + 1).unwrap().value < here);
        prop_assert!(hitting_tail_bound(v, &dc, l * 1.5, n).unwrap().value <= here);
    }

    #[test]
    fn merging_preserves_total_time(taus in sojourns(), c_prime in 0.0..2.0f64) {
        let seq = SojournSequence::new(taus.clone(), c_prime).unwrap();
        let merged: f64 = seq.merged.iter().sum();
        prop_assert!((merged - seq.total()).abs() <= 1e-12 * (1.0 + seq.total()));
        prop_assert!(seq.outside().all(|t| t == 0.0 || t > c_prime));
    }

    #[test]
    fn occupation_matches_riemann_sum(taus in sojourns(), t in 0.5..40.0f64) {
        let seq = SojournSequence::new(taus, 0.0).unwrap();
        let occ = occupation_process(&seq, t).unwrap();
        prop_assert!((0.0..=1.0).contains(&occ));
        // boundaries of the piecewise-constant indicator; the last sojourn continues
        let mut ends = Vec::new();
        let mut clock = 0.0;
        for tau in &seq.merged {
            clock += tau;
            ends.push(clock);
        }
        let last = seq.merged.len() - 1;
        let n = 1_000_000;
        let h = t / n as f64;
        let mut j = 0;
        let mut outside = 0u64;
        for k in 0..n {
            let x = (k as f64 + 0.5) * h;
            while j < last && x >= ends[j] {
                j += 1;
            }
            if j % 2 == 1 {
                outside += 1;
            }
        }
        let riemann = outside as f64 / n as f64;
        // each switch costs at most one midpoint cell
        prop_assert!((occ - riemann).abs() <= (seq.merged.len() as f64 + 1.0) / n as f64 + 1e-6);
    }

    #[test]
    fn chernoff_minimizer_beats_the_grid(mean in 0.2..3.0f64, excess in 0.1..5.0f64) {
        let eta = TailModel::exponential(mean).unwrap();
        let lambda_prime = mean + excess;
        let theta0 = 1.0 / mean;
        let r = chernoff_outside_rate(&eta, lambda_prime, theta0).unwrap();
        let f = |th: f64| eta.mgf(th) * (-th * lambda_prime).exp();
        prop_assert!((f(0.0) - 1.0).abs() < 1e-15);
        for k in 0..200 {
            let th = theta0 * (1.0 - 1e-9) * k as f64 / 200.0;
            prop_assert!(r.gamma <= f(th) + 1e-12);
        }
    }

    #[test]
    fn walk_steps_respect_the_operator_norm(seed in 0u64..1000) {
        let cfg = WalkConfig { tau: 1.0, delta: 0.5, n_steps: 12, seed, ..WalkConfig::default() };
        let rec = run_walk(&builtin("L3").unwrap(), &cfg).unwrap();
        for w in rec.v_values.windows(2) {
            prop_assert!((w[1].ln() - w[0].ln()).abs() <= (1.0 + cfg.delta) * cfg.tau + 1e-9);
        }
    }
}

#[test]
fn iterated_drift_bound_dominates_exact_expectations() {
    for m in 0..=100 {
        let exact = FixtureChain::exact_pmv(m);
        for (x, e) in exact.iter().enumerate() {
            assert!(*e <= iterated_drift_bound(FixtureChain::v(x), &FIXTURE_DRIFT, m) + 1e-12, "m = {m}, x = {x}");
        }
    }
}

#[test]
fn occupation_lower_bound_below_exact_tail() {
    for l in [2.0, 4.0, 8.0] {
        for n in [10u32, 30, 60] {
            let law = FixtureChain::exact_occupation_counts(0, l, n);
            let e_sn: f64 = law.iter().enumerate().map(|(k, p)| k as f64 * p).sum::<f64>() / n as f64;
            for lambda in [0.3, 0.6, 0.9] {
                let tail: f64 = law.iter().enumerate().filter(|(k, _)| *k as f64 / n as f64 > lambda).map(|(_, p)| p).sum();
                assert!(occupation_lower_bound(e_sn, lambda).unwrap() <= tail + 1e-12);
            }
        }
    }
}

#[test]
fn deviation_rate_is_anti_monotone_in_lambda() {
    let eta = TailModel::exponential(1.0).unwrap();
    let xi = TailModel::deterministic(2.0).unwrap();
    let gammas: Vec<f64> = [0.6, 0.75, 0.9].iter().map(|&l| deviation_rate(&eta, &xi, l, 10.0).unwrap().gamma).collect();
    assert!(gammas.windows(2).all(|w| w[1] <= w[0]), "{gammas:?}");
}

#[test]
fn torus_lattice_growth_is_quadratic() {
    let torus = builtin("torus").unwrap();
    for l in [5.0, 10.0, 20.0] {
        let ratio = enumerate_saddle_connections(&torus, 2.0 * l).unwrap().len() as f64 / enumerate_saddle_connections(&torus, l).unwrap().len() as f64;
        assert!((3.2..=4.8).contains(&ratio), "L = {l}: {ratio}");
    }
}
