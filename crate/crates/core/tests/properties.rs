use num_bigint::BigUint;
use opgrowth::combinatorics::{binomial, overlap_placements, pattern_count, OverlapPattern};
use opgrowth::gf::{gf_corrected, gf_lo, CorrectionOptions, LoSolution};
use opgrowth::master_equation::{build_generator, evolve, EvolveOptions};
use opgrowth::observables::{dressed_otoc, echo, otoc_weight_polynomial, rotoc, ObservableSet};
use opgrowth::series::{apply_operator, solve_composition};
use opgrowth::{ModelParams, TruncatedSeries, WeightDistribution};
use proptest::prelude::*;

fn series(coeffs: Vec<f64>) -> TruncatedSeries {
    TruncatedSeries::new(0, coeffs)
}

fn assert_close(a: &TruncatedSeries, b: &TruncatedSeries, tol: f64) {
    let top = a.top().min(b.top());
    for p in a.offset().min(b.offset())..=top {
        let (x, y) = (a.get(p).unwrap_or(0.0), b.get(p).unwrap_or(0.0));
        assert!((x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0), "x^{p}: {x} vs {y}");
    }
}

fn coeffs(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ring_laws(a in coeffs(33), b in coeffs(33), c in coeffs(33)) {
        let (a, b, c) = (series(a), series(b), series(c));
        assert_close(&a.mul(&b).mul(&c), &a.mul(&b.mul(&c)), 1e-12);
        assert_close(&a.mul(&b.add(&c)), &a.mul(&b).add(&a.mul(&c)), 1e-12);
        assert_close(&a.mul(&b), &b.mul(&a), 1e-12);
    }

    #[test]
    fn composition_with_an_inverse_round_trips(f in coeffs(25), tail in coeffs(24), lead in 0.8..1.25f64) {
        let mut g = vec![0.0, lead];
        // geometric decay keeps the inverse's coefficients moderate
        g.extend(tail.iter().enumerate().map(|(j, v)| 0.3 * v * 0.7f64.powi(j as i32)));
        let g = series(g);
        let id = TruncatedSeries::from_polynomial(&[0.0, 1.0], 24);
        let inv = solve_composition(&g, &id, id.scale(1.0 / lead), 1e-12).unwrap();
        let f = series(f);
        assert_close(&f.compose(&inv).unwrap().compose(&g).unwrap(), &f, 1e-10);
    }

    #[test]
    fn leading_modes_are_eigenfunctions(order in 2usize..=3, kappa in 0.0..2.0f64, r in 0.0..1.0f64, k in 1usize..=6) {
        let p = ModelParams::pure(order, 1.0, 100, kappa, r).unwrap();
        let lo = LoSolution::new(&p).unwrap();
        let gk = lo.gk_series(k, 48).unwrap();
        let a0 = apply_operator(&lo.a0_operator(), &gk, None).unwrap();
        assert_close(&a0, &gk.scale(lo.lambda(k)), 1e-10);
        // power-law structure against the closed form of G_1
        let g1 = lo.g1_series(48).unwrap();
        assert_close(&g1.powi(k as i32).unwrap(), &gk, 1e-12);
    }

    #[test]
    fn two_body_eigenfunction_has_binomial_coefficients(kappa in 0.0..2.0f64, r in 0.0..1.0f64, k in 1usize..=6) {
        let p = ModelParams::pure(2, 1.0, 100, kappa, r).unwrap();
        let lo = LoSolution::new(&p).unwrap();
        let gk = lo.gk_series(k, 40).unwrap();
        let re = p.r_eff();
        for m in k..=40 {
            let b: f64 = binomial(m as i64 - 1, k as i64 - 1).unwrap().to_string().parse().unwrap();
            let expect = b * re.powi((m - k) as i32);
            prop_assert!((gk.coeff(m as i32) - expect).abs() <= 1e-12 * expect.max(1.0));
        }
    }

    #[test]
    fn corrected_series_have_no_nonpositive_powers(order in 2usize..=3, w0 in 1usize..=4, t in 0.0..6.0f64) {
        let p = ModelParams::pure(order, 1.0, 100, 0.5, 1.0).unwrap();
        let b0 = WeightDistribution::delta(w0, 100).unwrap();
        let s = gf_corrected(&p, &b0, t, 2, &CorrectionOptions::default(), 60).unwrap();
        for j in s.offset()..=0 {
            prop_assert!(s.coeff(j).abs() <= 1e-10, "x^{}: {}", j, s.coeff(j));
        }
    }

    #[test]
    fn three_body_corrections_keep_parity(w0 in 1usize..=5, t in 0.0..5.0f64, kappa in 0.0..1.0f64) {
        let p = ModelParams::pure(3, 1.0, 100, kappa, 1.0).unwrap();
        let b0 = WeightDistribution::delta(w0, 100).unwrap();
        let s = gf_corrected(&p, &b0, t, 2, &CorrectionOptions::default(), 60).unwrap();
        for w in (1..=60).filter(|w| (w + w0) % 2 == 1) {
            prop_assert!(s.coeff(w as i32).abs() <= 1e-12 * s.max_abs());
        }
    }

    #[test]
    fn series_and_distribution_observables_agree(order in 2usize..=3, w0 in 1usize..=4, t in 0.0..4.0f64) {
        let p = ModelParams::pure(order, 1.0, 100, 0.5, 1.0).unwrap();
        let b0 = WeightDistribution::delta(w0, 100).unwrap();
        let s = gf_corrected(&p, &b0, t, 2, &CorrectionOptions::default(), 160).unwrap();
        let radius = LoSolution::new(&p).unwrap().radius();
        let from_series = ObservableSet::from_series(t, &s, 100, radius).unwrap();
        // every extracted coefficient, including the tail beyond w = N
        let b = WeightDistribution::new((1..=s.top()).map(|w| s.coeff(w)).collect()).unwrap();
        let from_dist = ObservableSet::from_distribution(t, &b, 100);
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
        prop_assert!(rel(from_series.mean_w, from_dist.mean_w) < 1e-8);
        prop_assert!(rel(from_series.echo, from_dist.echo) < 1e-8);
        for v in 0..3 {
            prop_assert!(rel(from_series.otoc[v], from_dist.otoc[v]) < 1e-8);
            prop_assert!(rel(from_series.rotoc[v], from_dist.rotoc[v]) < 1e-8);
        }
    }

    #[test]
    fn rotoc_ignores_the_overall_scale(b in prop::collection::vec(0.0..1.0f64, 1..30), lambda in 1e-6..1e6f64) {
        prop_assume!(b.iter().sum::<f64>() > 1e-3);
        let n = 30;
        let d = WeightDistribution::new(b.clone()).unwrap();
        let scaled = WeightDistribution::new(b.iter().map(|v| v * lambda).collect()).unwrap();
        for v in 1..=3 {
            let (x, y) = (rotoc(&d, v, n).unwrap(), rotoc(&scaled, v, n).unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * x.abs());
        }
        prop_assert!((echo(&scaled) - lambda * echo(&d)).abs() <= 1e-12 * echo(&scaled));
        let o = dressed_otoc(&d, 1, n).unwrap();
        prop_assert!(o >= 0.0);
    }

    #[test]
    fn evolution_stays_nonnegative(order in 2usize..=3, kappa in 0.0..1.0f64, r in 0.0..1.0f64,
                                   b in prop::collection::vec(0.0..1.0f64, 1..6)) {
        let n = 30;
        let p = ModelParams::pure(order, 1.0, n, kappa, r).unwrap();
        let mut full = b.clone();
        full.resize(n, 0.0);
        let b0 = WeightDistribution::new(full).unwrap();
        let scale = b.iter().fold(0.0f64, |m, v| m.max(*v));
        for s in evolve(&build_generator(&p).unwrap(), &b0, &[0.0, 0.5, 2.0, 5.0], EvolveOptions::default()).unwrap() {
            prop_assert!(s.values().iter().all(|v| *v >= -1e-9 * scale));
        }
    }

    #[test]
    fn three_body_parity_is_exact(kappa in 0.0..1.0f64, r in 0.0..1.0f64, w0 in 1usize..=4) {
        let n = 40;
        let p = ModelParams::pure(3, 1.0, n, kappa, r).unwrap();
        let gen = build_generator(&p).unwrap();
        for (row, col, _) in gen.triples() {
            prop_assert!((row + col) % 2 == 0, "entry ({}, {}) couples the parity sectors", row, col);
        }
        let b0 = WeightDistribution::delta(2 * w0, n).unwrap();
        let out = evolve(&gen, &b0, &[0.0, 3.0], EvolveOptions::default()).unwrap();
        for (w, v) in out[1].iter() {
            if w % 2 == 1 {
                prop_assert!(v.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn pattern_counts_cover_all_strings(qubits in 1u64..=6, n in 1u64..=4, w in 0u64..=6) {
        prop_assume!(n <= qubits && w <= qubits);
        let mut total = BigUint::from(0u32);
        for pp in 0..=n {
            for m in 0..=n - pp {
                total += overlap_placements(n, pp, m, w, qubits);
            }
        }
        let all = BigUint::from(3u32).pow(n as u32) * binomial(qubits as i64, n as i64).unwrap();
        prop_assert_eq!(total, all);
    }

    #[test]
    fn pattern_count_vanishes_outside_its_range(n in 2u64..=5, pp in 0u64..=5, m in 0u64..=5, w in 0u64..=6, qubits in 1u64..=6) {
        prop_assume!(w <= qubits && pp + m <= n);
        let pat = OverlapPattern { n, p: pp, m, w, qubits };
        match pattern_count(&pat) {
            Err(_) => prop_assert!(pp % 2 == 0),
            Ok(c) => {
                prop_assert!(pp % 2 == 1);
                let in_range = pp <= w && m <= w - pp && n - m - pp <= qubits - w;
                prop_assert_eq!(c == BigUint::from(0u32), !in_range);
            }
        }
    }
}

#[test]
fn first_order_difference_converges_in_n() {
    // N (G^(≤1) - G^(0)) = G^(1) exactly, so the drift tests the whole pipeline
    let b0 = |n| WeightDistribution::delta(2, n).unwrap();
    let scaled = |n: usize| {
        let p = ModelParams::pure(2, 1.0, n, 0.5, 1.0).unwrap();
        let opts = CorrectionOptions::default();
        let g1 = gf_corrected(&p, &b0(n), 2.0, 1, &opts, 40).unwrap();
        let g0 = gf_corrected(&p, &b0(n), 2.0, 0, &opts, 40).unwrap();
        g1.sub(&g0).scale(n as f64)
    };
    let (a, b, c) = (scaled(100), scaled(200), scaled(400));
    for w in 1..=40 {
        assert!((a.coeff(w) - c.coeff(w)).abs() <= 5.0 / 100.0 * a.coeff(w).abs().max(1e-12));
        assert!((b.coeff(w) - c.coeff(w)).abs() <= 5.0 / 200.0 * b.coeff(w).abs().max(1e-12));
    }
}

#[test]
fn leading_order_plateau_is_reached() {
    for (order, w0) in [(2usize, 1usize), (2, 3), (3, 1), (3, 2)] {
        let p = ModelParams::pure(order, 1.0, 100, 0.5, 1.0).unwrap();
        let t = 50.0 / 1.5;
        let s = gf_lo(&p, &WeightDistribution::delta(w0, 100).unwrap(), t, 200).unwrap();
        let (s0, s1) = (1..=200).fold((0.0, 0.0), |(a, b), w| (a + s.coeff(w), b + w as f64 * s.coeff(w)));
        let expect = w0 as f64 / (1.0 - p.r_eff());
        assert!((s1 / s0 - expect).abs() < 1e-6, "L={order} w0={w0}: {} vs {expect}", s1 / s0);
    }
}

#[test]
fn single_probe_coefficient_grows_with_weight() {
    for n in [10usize, 100] {
        let c = |w: usize| {
            let poly = otoc_weight_polynomial(1, n).unwrap();
            poly.iter().enumerate().map(|(j, a)| a * (w as f64).powi(j as i32)).sum::<f64>()
        };
        for w in 1..n {
            assert!(c(w + 1) > c(w));
        }
        // fully scrambled edge: 8N / (3N) = 8/3
        assert!((c(n) - 8.0 / 3.0).abs() < 1e-12);
    }
}
