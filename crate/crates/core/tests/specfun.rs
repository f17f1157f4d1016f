mod common;

use std::f64::consts::PI;

use eio_lab::rician::PosteriorParams;
use eio_lab::specfun::{
    bessel_i, bessel_i_scaled, exp_integral_e1, expected_log2_affine, marcum_q1, nuttall_q,
    sector_mass, sector_mass_about, sector_mass_quadrature, sector_mass_two_term, SectorRegion,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

fn post(re: f64, im: f64, v: f64) -> PosteriorParams {
    PosteriorParams::new(Complex64::new(re, im), v, 0.5).unwrap()
}

#[test]
fn marcum_matches_oracle_on_grid() {
    for &a in &[0.0, 0.3, 1.0, 2.5, 5.0, 8.0] {
        for &b in &[0.0, 0.2, 1.0, 3.0, 6.0, 9.5] {
            let got = marcum_q1(a, b).unwrap();
            let want = common::marcum_oracle(a, b);
            assert!((got - want).abs() < 1e-9, "Q1({a}, {b}) = {got}, oracle {want}");
        }
    }
}

#[test]
fn nuttall_matches_oracle_for_higher_orders() {
    for n in [1u32, 2, 5, 12] {
        for &(a, b) in &[(0.5, 0.5), (2.0, 1.0), (4.0, 4.5), (7.0, 2.0)] {
            let got = nuttall_q(n, a, b).unwrap();
            let want = common::nuttall_oracle(n, a, b);
            assert!((got - want).abs() < 1e-9, "Q_1,{n}({a}, {b}) = {got}, oracle {want}");
        }
    }
}

#[test]
fn bessel_against_power_series() {
    // small-argument power series, summed directly
    for n in 0..4u32 {
        for &x in &[0.01f64, 0.5, 2.0, 6.0] {
            let mut term = (0.5 * x).powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
            let mut sum = 0.0;
            for k in 0..60 {
                sum += term;
                term *= 0.25 * x * x / ((k + 1) as f64 * (k + 1 + n) as f64);
            }
            let got = bessel_i(n, x).unwrap();
            assert!((got - sum).abs() <= 1e-13 * sum.max(1.0), "I_{n}({x})");
            let scaled = bessel_i_scaled(n, x).unwrap();
            assert!((scaled - sum * (-x).exp()).abs() <= 1e-13);
        }
    }
}

#[test]
fn e1_matches_oracle() {
    for &z in &[0.01, 0.1, 0.7, 1.0, 2.0, 5.0, 12.0, 30.0] {
        let got = exp_integral_e1(z).unwrap();
        let want = common::e1_oracle(z);
        assert!((got - want).abs() < 1e-9, "E1({z}) = {got}, oracle {want}");
    }
}

#[test]
fn full_circle_sector_is_marcum() {
    let p = post(0.8, -0.3, 0.4);
    let s = (2.0 / p.variance).sqrt();
    for &r in &[0.0, 0.3, 1.0, 2.0] {
        let got = sector_mass(SectorRegion::new(r, PI).unwrap(), &p).unwrap();
        let want = marcum_q1(p.mean.norm() * s, r * s).unwrap();
        assert!((got - want).abs() < 1e-10, "r = {r}");
    }
}

#[test]
fn sector_matches_density_integral() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..12 {
        let m = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let v = rng.random_range(0.05..2.0);
        let r = rng.random_range(0.0..2.0);
        let phi = rng.random_range(0.05..PI);
        let c = rng.random_range(-PI..PI);
        let p = post(m.0, m.1, v);
        let region = SectorRegion::new(r, phi).unwrap();
        let got = sector_mass_about(region, &p, c).unwrap().value;
        let want = common::sector_oracle(m, v, r, phi, c);
        assert!((got - want).abs() < 1e-8, "m={m:?} v={v} r={r} phi={phi} c={c}: {got} vs {want}");
    }
}

#[test]
fn concentrated_posterior_uses_a_consistent_route() {
    // |m|^2 / v large enough that the harmonic series is slow
    let p = post(3.0, 1.0, 0.002);
    let region = SectorRegion::new(2.9, 0.05).unwrap();
    let got = sector_mass_about(region, &p, p.mean.arg()).unwrap();
    let want = common::sector_oracle((3.0, 1.0), 0.002, 2.9, 0.05, p.mean.arg());
    assert!((got.value - want).abs() < 1e-8, "{got:?} vs {want}");
}

#[test]
fn two_term_form_tracks_series_for_diffuse_posteriors() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let v: f64 = rng.random_range(0.5..2.0);
        // a = |m| sqrt(2 / v) <= 0.5
        let m = rng.random_range(0.0..0.35) * v.sqrt();
        let p = post(m, 0.0, v);
        let region = SectorRegion::new(rng.random_range(0.0..1.5), rng.random_range(0.0..PI)).unwrap();
        let full = sector_mass(region, &p).unwrap();
        let approx = sector_mass_two_term(region, &p, 0.0).unwrap();
        assert!((full - approx).abs() < 2e-2, "{full} vs {approx}");
    }
}

#[test]
fn expected_log2_affine_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 1_000_000;
    for _ in 0..20 {
        let a: f64 = rng.random_range(0.2..3.0);
        let b: f64 = rng.random_range(0.1..10.0);
        let p = rng.random_range(0.1..5.0);
        let exp = Exp::new(1.0 / p).unwrap();
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v = (a + b * exp.sample(&mut rng)).log2();
            s1 += v;
            s2 += v * v;
        }
        let mean = s1 / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        let got = expected_log2_affine(a, b, p).unwrap();
        assert!((got - mean).abs() < 3.0 * se + 1e-12, "a={a} b={b} p={p}: {got} vs {mean} +- {se}");
    }
}

#[test]
fn domain_errors() {
    assert!(marcum_q1(-1.0, 1.0).is_err());
    assert!(marcum_q1(1.0, f64::NAN).is_err());
    assert!(exp_integral_e1(0.0).is_err());
    assert!(SectorRegion::new(-0.1, 1.0).is_err());
    assert!(SectorRegion::new(0.1, 4.0).is_err());
    assert!(expected_log2_affine(0.0, 1.0, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn marcum_is_a_tail_probability(a in 0.0..8.0f64, b1 in 0.0..8.0f64, b2 in 0.0..8.0f64) {
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let q_lo = marcum_q1(a, lo).unwrap();
        let q_hi = marcum_q1(a, hi).unwrap();
        prop_assert!((0.0..=1.0).contains(&q_lo));
        prop_assert!(q_lo >= q_hi - 1e-14);
    }

    #[test]
    fn sector_mass_monotone(
        re in -2.0..2.0f64, im in -2.0..2.0f64, v in 0.05..2.0f64,
        r1 in 0.0..2.5f64, r2 in 0.0..2.5f64, p1 in 0.0..PI, p2 in 0.0..PI,
    ) {
        let p = post(re, im, v);
        let (r_lo, r_hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let (f_lo, f_hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let m = |r, f| sector_mass(SectorRegion::new(r, f).unwrap(), &p).unwrap();
        // slack covers series round-off (~1e-12), far inside the 1e-8 accuracy
        prop_assert!(m(r_lo, f_hi) >= m(r_hi, f_hi) - 1e-10);
        prop_assert!(m(r_lo, f_hi) >= m(r_lo, f_lo) - 1e-10);
        let x = m(r_lo, f_lo);
        prop_assert!((-1e-10..=1.0 + 1e-10).contains(&x));
    }

    #[test]
    fn sector_routes_agree(
        re in -2.0..2.0f64, im in -2.0..2.0f64, v in 0.05..2.0f64,
        r in 0.0..2.5f64, phi in 0.0..PI, c in -PI..PI,
    ) {
        let p = post(re, im, v);
        let region = SectorRegion::new(r, phi).unwrap();
        let a = sector_mass_about(region, &p, c).unwrap().value;
        let b = sector_mass_quadrature(region, &p, c).unwrap();
        prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
    }

    #[test]
    fn e1_decreasing_and_bracketed(z in 0.01..50.0f64) {
        let e = exp_integral_e1(z).unwrap();
        // e^{-z} ln(1 + 2/z) / 2 < E1(z) < e^{-z} ln(1 + 1/z)
        prop_assert!(e > 0.5 * (-z).exp() * (1.0 + 2.0 / z).ln());
        prop_assert!(e < (-z).exp() * (1.0 + 1.0 / z).ln());
        prop_assert!(exp_integral_e1(z * 1.01).unwrap() < e);
    }
}
