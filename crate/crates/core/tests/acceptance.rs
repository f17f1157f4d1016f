//! Acceptance run. Prints one PASS/FAIL line per criterion and exits non-zero
//! if a criterion outside `KNOWN_SHORTFALLS` fails.

mod common;

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{bsc, eio_grid_oracle, mutual_info, plain_scenario, to_channel};
use eio_lab::cli::{run, selftest::run_selftest, sig6};
use eio_lab::dmc::{
    composite_capacity_discrete, eio_capacity_discrete, gap_bound_for_channels, strategy_channel,
    v_information, DiscreteScenario,
};
use eio_lab::feedback::{
    codebook_size, design_feedback_codebook, draw_estimates, lloyd_max_design_traced,
    mean_eio_perfect_feedback, mean_eio_quantized, quantized_posterior, waterfill_levels,
    WaterfillMode,
};
use eio_lab::harness::{
    empirical_outage_stats, gap_at_rate, grid_model, run_sweep, snr_at_rate, to_csv, Curve,
    CurveKey, SweepRow, SweepSpec,
};
use eio_lab::rician::{
    complex_normal, composite_capacity_point, composite_lower_bound, eio_capacity_point,
    percentile, perfect_csi_rate, posterior_params, sample_estimate_marginal, magnitude_tail,
    PosteriorParams,
};
use eio_lab::specfun::{
    exp_integral_e1, expected_log2_affine, marcum_q1, nuttall_q, sector_mass, sector_mass_about,
    sector_mass_quadrature, sector_mass_two_term, SectorRegion,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

/// Criteria that fail for reasons recorded in the decisions ledger.
const KNOWN_SHORTFALLS: &[usize] = &[7, 10];

const TARGET_BITS: f64 = 2.0;

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_post(rng: &mut impl Rng) -> PosteriorParams {
    let m = c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    PosteriorParams::new(m, rng.random_range(0.05..3.0), 0.5).unwrap()
}

fn random_row(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn random_binary_channel(rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let a = rng.random_range(0.01..0.99);
    let b = rng.random_range(0.01..0.99);
    vec![vec![1.0 - a, a], vec![b, 1.0 - b]]
}

fn spec(json: &str) -> SweepSpec {
    SweepSpec::from_json(json).unwrap()
}

fn grid(lo: i32, hi: i32) -> String {
    let v: Vec<String> = (lo..=hi).map(|s| format!("{s}.0")).collect();
    format!("[{}]", v.join(", "))
}

fn in_band(x: f64, centre: f64, half: f64) -> bool {
    (x - centre).abs() <= half
}

fn worst(errs: impl IntoIterator<Item = f64>) -> f64 {
    errs.into_iter().fold(0.0, f64::max)
}

fn c1_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut err = [0.0f64; 4];
    for _ in 0..100 {
        let (a, b) = (rng.random_range(0.0..8.0), rng.random_range(0.0..8.0));
        err[0] = err[0].max((marcum_q1(a, b).unwrap() - common::marcum_oracle(a, b)).abs());
        let n = rng.random_range(0..8u32);
        let (a, b) = (rng.random_range(0.0..8.0), rng.random_range(0.0..8.0));
        err[1] = err[1].max((nuttall_q(n, a, b).unwrap() - common::nuttall_oracle(n, a, b)).abs());
        let z = 10f64.powf(rng.random_range(-2.0..1.5));
        err[2] = err[2].max((exp_integral_e1(z).unwrap() - common::e1_oracle(z)).abs());
        let p = random_post(&mut rng);
        let region = SectorRegion::new(rng.random_range(0.0..4.0), rng.random_range(0.01..PI)).unwrap();
        let centre = rng.random_range(-PI..PI);
        let got = sector_mass_about(region, &p, centre).unwrap().value;
        let want = common::sector_oracle((p.mean.re, p.mean.im), p.variance, region.r_min, region.phi_eps, centre);
        err[3] = err[3].max((got - want).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "max error marcum {:.1e}, nuttall {:.1e}, e1 {:.1e}, sector {:.1e}; {secs:.1} s",
        err[0], err[1], err[2], err[3]
    );
    if err.iter().all(|&e| e < 1e-8) && secs < 10.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c2_full_circle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let e = worst((0..50).map(|_| {
        let p = random_post(&mut rng);
        let r = rng.random_range(0.0..5.0);
        let s = (2.0 / p.variance).sqrt();
        let sector = sector_mass(SectorRegion::new(r, PI).unwrap(), &p).unwrap();
        (sector - marcum_q1(p.mean.norm() * s, r * s).unwrap()).abs()
    }));
    let detail = format!("max |sector - Q1| = {e:.1e} over 50 posteriors");
    if e < 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c3_outage() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst_z = 0.0f64;
    for k in 0..10 {
        let snr = rng.random_range(-5.0..25.0);
        let n = rng.random_range(1..11u32);
        let k_db = rng.random_range(-15.0..25.0);
        let (prior, tr, p) = grid_model(snr, n, k_db).unwrap();
        let est = sample_estimate_marginal(&prior, &tr, &mut rng);
        for gamma in [0.01, 0.1] {
            let o = empirical_outage_stats(gamma, est, p, &prior, &tr, 1_000_000, 1000 + k).unwrap();
            let sigma = (gamma * (1.0 - gamma) / o.draws as f64).sqrt();
            worst_z = worst_z.max((o.fraction - gamma).abs() / sigma);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("largest deviation {worst_z:.2} sigma over 20 cases; {secs:.1} s");
    if worst_z < 3.0 && secs < 30.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c4_discrete() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let e = worst((0..20).map(|_| {
        let ch = [random_binary_channel(&mut rng), random_binary_channel(&mut rng)];
        let p0 = rng.random_range(0.05..0.95);
        let post = vec![p0, 1.0 - p0];
        let gamma = rng.random_range(0.0..0.5);
        let got = eio_capacity_discrete(&plain_scenario(&ch, post.clone(), gamma)).unwrap().rate;
        (got - eio_grid_oracle(&ch, &post, gamma, 0.01)).abs()
    }));
    let ch = [bsc(0.05), bsc(0.4)];
    let prior = vec![0.95, 0.05];
    let at = |g: f64| eio_capacity_discrete(&plain_scenario(&ch, prior.clone(), g)).unwrap().rate;
    let (r5, r0) = (at(0.05), at(0.0));
    let (o5, o0) = (eio_grid_oracle(&ch, &prior, 0.05, 0.01), eio_grid_oracle(&ch, &prior, 0.0, 0.01));
    let detail = format!(
        "max grid gap {e:.1e}; two-BSC {} (grid {}) at 0.05, {} (grid {}) at 0",
        sig6(r5),
        sig6(o5),
        sig6(r0),
        sig6(o0)
    );
    if e < 1e-3 && (r5 - o5).abs() < 1e-3 && (r0 - o0).abs() < 1e-3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c5_gap_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut violations = 0;
    for _ in 0..1000 {
        let nx = rng.random_range(2..4);
        let ny = rng.random_range(2..5);
        let chans: Vec<_> = (0..2)
            .map(|_| to_channel(&(0..nx).map(|_| random_row(&mut rng, ny)).collect::<Vec<_>>()))
            .collect();
        let p = random_row(&mut rng, nx);
        let which = rng.random_range(0..2);
        if !gap_bound_for_channels(&p, &[&chans[0], &chans[1]], which).unwrap().holds {
            violations += 1;
        }
    }
    // two channels related by an output swap that fixes the second row
    let a = to_channel(&[vec![0.8, 0.1, 0.1], vec![0.1, 0.1, 0.8]]);
    let b = to_channel(&[vec![0.1, 0.8, 0.1], vec![0.1, 0.1, 0.8]]);
    let g = gap_bound_for_channels(&[0.45, 0.55], &[&a, &b], 0).unwrap();
    let slack = (g.lhs - g.rhs).abs();
    let detail = format!("{violations} violations in 1000; equality case slack {slack:.1e}");
    if violations == 0 && slack < 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c6_fig2a() -> Outcome {
    let start = Instant::now();
    let rows = run_sweep(&spec(&format!(
        r#"{{"id": "a", "snr_db": {}, "gamma": [0.01], "n_pilots": [1], "rice_db": [0.0],
            "curves": ["perfect_csi", "eio"], "seed": 1}}"#,
        grid(0, 14)
    )))
    .unwrap();
    let gap = gap_at_rate(&rows, &CurveKey::new(Curve::PerfectCsi), &CurveKey::new(Curve::Eio), TARGET_BITS)
        .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("gap at 2 bits {gap:.2} dB (want 5.5 +- 1.0); {secs:.1} s");
    if in_band(gap, 5.5, 1.0) && secs < 120.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Mismatched-decoder rows, one narrow SNR window per pilot count around the
/// two-bit crossings.
fn ml_rows() -> &'static [SweepRow] {
    static ROWS: OnceLock<Vec<SweepRow>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let mut rows = Vec::new();
        for (n, lo) in [(1, 8), (3, 6), (10, 4)] {
            rows.extend(
                run_sweep(&spec(&format!(
                    r#"{{"id": "b", "snr_db": [{lo}.0, {}.0, {}.0, {}.0], "gamma": [0.01], "n_pilots": [{n}],
                        "rice_db": [0.0], "curves": ["eio", "eio_ml"], "ml_draws": 1000, "seed": 2}}"#,
                    lo + 2,
                    lo + 4,
                    lo + 6
                )))
                .unwrap(),
            );
        }
        rows
    })
}

fn c7_fig2b() -> Outcome {
    let rows = run_sweep(&spec(&format!(
        r#"{{"id": "b", "snr_db": {}, "gamma": [0.01], "n_pilots": [3], "rice_db": [0.0],
            "curves": ["perfect_csi", "eio"], "seed": 2}}"#,
        grid(0, 14)
    )))
    .unwrap();
    let gap3 = gap_at_rate(&rows, &CurveKey::new(Curve::PerfectCsi), &CurveKey::new(Curve::Eio), TARGET_BITS)
        .map_err(|e| e.to_string())?;
    let ml = ml_rows();
    let ml_gap = |n: u32| {
        gap_at_rate(
            ml,
            &CurveKey::new(Curve::Eio).pilots(n),
            &CurveKey::new(Curve::EioMl).pilots(n),
            TARGET_BITS,
        )
        .map_err(|e| e.to_string())
    };
    let (g1, g3, g10) = (ml_gap(1)?, ml_gap(3)?, ml_gap(10)?);
    let detail = format!(
        "N=3 gap {gap3:.2} dB (want 4 +- 1); decoder penalty N=1 {g1:.2}, N=3 {g3:.2} dB (want 2.5 +- 1.5), \
         N=10 {g10:.2} dB (want <= 0.5)"
    );
    if in_band(gap3, 4.0, 1.0) && in_band(g1, 2.5, 1.5) && in_band(g3, 2.5, 1.5) && g10 <= 0.5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c8_fig2c() -> Outcome {
    let rows = run_sweep(&spec(&format!(
        r#"{{"id": "c", "snr_db": {}, "gamma": [0.01], "n_pilots": [1], "rice_db": [0.0],
            "feedback_bits": [1, 3], "curves": ["eio", "eio_power_alloc", "eio_quantized"],
            "mode": "kkt", "seed": 3}}"#,
        grid(0, 16)
    )))
    .unwrap();
    let at = |key: CurveKey| snr_at_rate(&rows, &key, TARGET_BITS).map_err(|e| e.to_string());
    let alloc = at(CurveKey::new(Curve::EioPowerAlloc))?;
    let flat = at(CurveKey::new(Curve::Eio))?;
    let r1 = at(CurveKey::new(Curve::EioQuantized).feedback_bits(1))?;
    let r3 = at(CurveKey::new(Curve::EioQuantized).feedback_bits(3))?;
    let detail = format!(
        "2 bits at {alloc:.2} dB with allocation (7 +- 1.5), {flat:.2} dB without (9.5 +- 1.5); \
         R_FB=3 off perfect feedback by {:.2} dB (<= 0.75); R_FB=1 vs 3 {:.2} dB (5 +- 2)",
        r3 - alloc,
        r1 - r3
    );
    if in_band(alloc, 7.0, 1.5) && in_band(flat, 9.5, 1.5) && (r3 - alloc).abs() <= 0.75 && in_band(r1 - r3, 5.0, 2.0) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c9_many_pilots() -> Outcome {
    let (prior, tr, p) = grid_model(10.0, 10_000, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let mut total = 0.0;
    for _ in 0..100 {
        let h = prior.mean + complex_normal(&mut rng, prior.variance);
        let est = h + complex_normal(&mut rng, tr.error_var());
        let eio = eio_capacity_point(0.01, est, p, tr.noise_var, &prior, &tr).unwrap();
        total += (eio - perfect_csi_rate(h, p, tr.noise_var).unwrap()).abs();
    }
    let mean = total / 100.0;
    let detail = format!("mean |EIO - perfect CSI| = {mean:.4} bits");
    if mean < 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

type Check = (&'static str, fn() -> Result<(), String>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn inv_marcum_monotone() -> Result<(), String> {
    let pts: Vec<f64> = (0..20).map(|i| 8.0 * i as f64 / 19.0).collect();
    for &a in &pts {
        for w in pts.windows(2) {
            let (q0, q1) = (marcum_q1(a, w[0]).unwrap(), marcum_q1(a, w[1]).unwrap());
            ensure(q1 <= q0, || format!("Q1({a}, .) rises between {} and {}", w[0], w[1]))?;
        }
    }
    Ok(())
}

fn inv_sector_monotone() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    for _ in 0..10 {
        let p = random_post(&mut rng);
        let m = |r: f64, f: f64| sector_mass(SectorRegion::new(r, f).unwrap(), &p).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let (r, f) = (0.4 * i as f64, 0.3 * (j + 1) as f64);
                ensure(m(r + 0.4, f) <= m(r, f) + 1e-10, || format!("rises in r at {r} {f}"))?;
                ensure(m(r, f) <= m(r, (f + 0.3).min(PI)) + 1e-10, || format!("falls in phi at {r} {f}"))?;
            }
        }
    }
    Ok(())
}

fn inv_sector_routes() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..100 {
        let p = random_post(&mut rng);
        let region = SectorRegion::new(rng.random_range(0.0..4.0), rng.random_range(0.01..PI)).unwrap();
        let centre = rng.random_range(-PI..PI);
        let a = sector_mass_about(region, &p, centre).unwrap().value;
        let b = sector_mass_quadrature(region, &p, centre).unwrap();
        ensure((a - b).abs() < 1e-8, || format!("series {a} vs quadrature {b}"))?;
    }
    Ok(())
}

fn inv_two_term() -> Result<(), String> {
    // only meaningful while the posterior is diffuse, see the ledger
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    for _ in 0..100 {
        let v: f64 = rng.random_range(0.5..2.0);
        let p = PosteriorParams::new(c(rng.random_range(0.0..0.35) * v.sqrt(), 0.0), v, 0.5).unwrap();
        let region = SectorRegion::new(rng.random_range(0.0..1.5), rng.random_range(0.0..PI)).unwrap();
        let (full, approx) = (sector_mass(region, &p).unwrap(), sector_mass_two_term(region, &p, 0.0).unwrap());
        ensure((full - approx).abs() < 2e-2, || format!("{full} vs {approx}"))?;
    }
    Ok(())
}

fn inv_expected_log() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    let n = 10_000_000;
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
        ensure((got - mean).abs() < 3.0 * se, || format!("a={a} b={b} p={p}: {got} vs {mean} +- {se}"))?;
    }
    Ok(())
}

fn inv_dmc() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(205);
    for _ in 0..50 {
        let n = rng.random_range(2..4);
        let ch: Vec<_> = (0..n).map(|_| random_binary_channel(&mut rng)).collect();
        let post = random_row(&mut rng, n);
        let mut last = 0.0;
        for g in [0.0, 0.05, 0.1, 0.3] {
            let eio = eio_capacity_discrete(&plain_scenario(&ch, post.clone(), g)).unwrap();
            ensure(eio.rate >= last - 1e-6, || format!("falls at gamma {g}"))?;
            last = eio.rate;
            if g == 0.0 {
                for w in &ch {
                    let i = mutual_info(&eio.input.probs, w);
                    ensure(eio.rate <= i + 1e-9, || format!("compound {} above member {i}", eio.rate))?;
                }
            }
        }
    }
    for _ in 0..20 {
        let scn = side_info_scenario(&mut rng);
        let p = random_row(&mut rng, scn.n_strategies());
        for th in 0..2 {
            let w = strategy_channel(&scn, th).unwrap();
            for t in 0..w.rows {
                let s: f64 = w.row(t).iter().sum();
                ensure((s - 1.0).abs() < 1e-12 && w.row(t).iter().all(|&x| x >= 0.0), || "row not stochastic".into())?;
            }
            let leak = v_information(&p, &w, scn.nv);
            ensure(leak < 1e-12, || format!("I(T;V) = {leak}"))?;
        }
        composite_capacity_discrete(&scn).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn side_info_scenario(rng: &mut impl Rng) -> DiscreteScenario {
    let mut channel = Vec::new();
    for _ in 0..8 {
        channel.extend(random_row(rng, 2));
    }
    let mut accuracy = Vec::new();
    for _ in 0..2 {
        accuracy.extend(random_row(rng, 8));
    }
    let p0 = rng.random_range(0.1..0.9);
    DiscreteScenario::new(
        vec!["a".into(), "b".into()],
        [2, 2, 2, 2, 2],
        channel,
        accuracy,
        vec![p0, 1.0 - p0],
        None,
        None,
        0.1,
    )
    .unwrap()
}

fn inv_rician() -> Result<(), String> {
    let est = c(0.7, 0.4);
    for snr in [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0] {
        let (prior, tr, p) = grid_model(snr, 1, 0.0).unwrap();
        let mut last = 0.0;
        for gamma in [0.001, 0.005, 0.01, 0.05, 0.1, 0.2, 0.3] {
            let r = eio_capacity_point(gamma, est, p, 1.0, &prior, &tr).unwrap();
            let louder = eio_capacity_point(gamma, est, 2.0 * p, 1.0, &prior, &tr).unwrap();
            ensure(r >= last - 1e-12 && louder >= r, || format!("not monotone at {snr} dB, gamma {gamma}"))?;
            last = r;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(206);
    for _ in 0..200 {
        let (prior, tr, p) = grid_model(
            rng.random_range(-5.0..25.0),
            rng.random_range(1..20),
            rng.random_range(-15.0..25.0),
        )
        .unwrap();
        let est = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let cc = composite_capacity_point(est, p, &prior, &tr).unwrap();
        let lb = composite_lower_bound(est, p, &prior, &tr).unwrap();
        ensure(cc >= lb - 1e-12, || format!("composite {cc} below bound {lb}"))?;
        let post = random_post(&mut rng);
        let gamma = rng.random_range(0.001..0.5);
        let tail = magnitude_tail(percentile(gamma, &post).unwrap(), &post).unwrap();
        ensure((tail - (1.0 - gamma)).abs() < 1e-9, || format!("percentile round trip off by {}", tail - 1.0 + gamma))?;
    }
    Ok(())
}

fn inv_feedback() -> Result<(), String> {
    let (prior, tr, p) = grid_model(7.0, 1, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(207);
    let samples = draw_estimates(&prior, &tr, 6400, &mut rng);
    for bits in [1, 2] {
        let (_, trace) = lloyd_max_design_traced(&samples, bits, 3).map_err(|e| e.to_string())?;
        ensure(trace.distortion.windows(2).all(|w| w[1] <= w[0]), || "Lloyd distortion rose".into())?;
    }
    for _ in 0..200 {
        let k = rng.random_range(1..30);
        let g: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..3.0)).collect();
        let w = vec![1.0 / k as f64; k];
        let budget = rng.random_range(0.01..100.0);
        for mode in [WaterfillMode::Kkt, WaterfillMode::Paper, WaterfillMode::Fixed] {
            let pol = waterfill_levels(&g, &w, budget, 1.0, mode).unwrap();
            if pol.warning.is_none() {
                let spent = pol.expected_power(&w);
                ensure((spent - budget).abs() <= 1e-6 * budget, || format!("{mode:?} spends {spent} of {budget}"))?;
            }
        }
    }
    let mut last = (0.0, 0.0);
    for bits in 1..=4 {
        let book = design_feedback_codebook(&prior, &tr, bits, 100 * codebook_size(bits), 200_000, 6).unwrap();
        let m = mean_eio_quantized(0.01, &book, p, WaterfillMode::Kkt, &prior, &tr).unwrap();
        ensure(m.mean >= last.0 - 3.0 * (m.std_err + last.1), || format!("R_FB={bits} lowers the mean"))?;
        last = (m.mean, m.std_err);
        for &h in &book.points {
            let q = quantized_posterior(h, &book, &prior, &tr).unwrap();
            ensure(q.variance >= posterior_params(h, &prior, &tr).variance, || "quantized posterior narrower".into())?;
        }
    }
    for snr in [0.0, 7.0, 15.0] {
        let (prior, tr, p) = grid_model(snr, 1, 0.0).unwrap();
        let k = mean_eio_perfect_feedback(0.01, &prior, &tr, p, WaterfillMode::Kkt, 2000, 5).unwrap();
        let q = mean_eio_perfect_feedback(0.01, &prior, &tr, p, WaterfillMode::Paper, 2000, 5).unwrap();
        ensure(k.mean >= q.mean - 1e-9, || format!("printed form beats KKT at {snr} dB"))?;
    }
    Ok(())
}

fn inv_harness() -> Result<(), String> {
    let s = spec(
        r#"{"id": "d", "snr_db": [0.0, 6.0], "gamma": [0.01], "n_pilots": [1], "rice_db": [0.0],
            "feedback_bits": [1], "curves": ["ergodic_csi", "eio", "eio_power_alloc", "eio_quantized"],
            "draws": 2000, "quantizer_draws": 2000, "holdout_draws": 20000, "seed": 5}"#,
    );
    let a = run_sweep(&s).map_err(|e| e.to_string())?;
    ensure(to_csv(&a) == to_csv(&run_sweep(&s).unwrap()), || "sweep not reproducible".into())?;
    ensure(a.iter().all(|r| r.std_err.is_finite() && r.std_err >= 0.0), || "missing standard error".into())?;

    // curve ordering on the full figure grid, within three standard errors
    let rows = run_sweep(&SweepSpec::from_json(include_str!("../data/fig2a.json")).unwrap()).unwrap();
    let get = |key: CurveKey, snr: f64| {
        let r = rows.iter().find(|r| r.snr_db == snr && key.matches(r)).unwrap();
        (r.rate_bits, r.std_err)
    };
    let above = |hi: (f64, f64), lo: (f64, f64)| hi.0 >= lo.0 - 3.0 * (hi.1 + lo.1) - 1e-12;
    let mut snrs: Vec<f64> = rows.iter().map(|r| r.snr_db).collect();
    snrs.sort_by(f64::total_cmp);
    snrs.dedup();
    let n_points = snrs.len();
    let mut bad = Vec::new();
    for snr in snrs {
        let perfect = get(CurveKey::new(Curve::PerfectCsi), snr);
        let comp = get(CurveKey::new(Curve::Composite), snr);
        let e1 = get(CurveKey::new(Curve::Eio).gamma(0.1), snr);
        let e2 = get(CurveKey::new(Curve::Eio).gamma(0.01), snr);
        if !(above(e1, e2) && above(perfect, comp) && above(perfect, e1)) {
            return Err(format!("ordering broken at {snr} dB"));
        }
        if !above(comp, e1) {
            bad.push(snr);
        }
    }
    let ml = ml_rows();
    for r in ml.iter().filter(|r| r.curve == Curve::EioMl) {
        let eio = ml
            .iter()
            .find(|e| e.curve == Curve::Eio && e.snr_db == r.snr_db && e.n_pilots == r.n_pilots)
            .unwrap();
        ensure(above((eio.rate_bits, eio.std_err), (r.rate_bits, r.std_err)), || {
            format!("mismatched decoder above EIO at {} dB", r.snr_db)
        })?;
    }
    ensure(bad.is_empty(), || {
        format!(
            "composite below EIO(0.1) at {} of {} points, from {} dB up",
            bad.len(),
            n_points,
            sig6(bad[0])
        )
    })
}

fn inv_cli() -> Result<(), String> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/two_bsc.json");
    let (mut out, mut err) = (Vec::new(), Vec::new());
    ensure(run(["eio-lab", "dmc", path], &mut out, &mut err) == 0, || "dmc failed".into())?;
    ensure(run(["eio-lab", "dmc", "/missing.json"], &mut out, &mut err) == 2, || "wrong exit code".into())?;
    ensure(String::from_utf8_lossy(&out).contains("eio_capacity_bits: 0.713603"), || "six-digit output".into())
}

fn c10_properties() -> Outcome {
    let start = Instant::now();
    let results = run_selftest(None);
    let secs = start.elapsed();
    let mut failures: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("selftest {}: {}", r.name, r.detail))
        .collect();
    if secs > Duration::from_secs(300) {
        failures.push(format!("selftest took {secs:?}"));
    }
    let checks: [Check; 10] = [
        ("marcum monotone", inv_marcum_monotone),
        ("sector monotone", inv_sector_monotone),
        ("sector routes", inv_sector_routes),
        ("two-term form", inv_two_term),
        ("expected log", inv_expected_log),
        ("discrete", inv_dmc),
        ("ricean", inv_rician),
        ("feedback", inv_feedback),
        ("harness", inv_harness),
        ("cli", inv_cli),
    ];
    for (name, f) in checks {
        if let Err(e) = f() {
            failures.push(format!("{name}: {e}"));
        }
    }
    let detail = format!(
        "selftest {} of {} in {:.1} s; {} invariant groups",
        results.iter().filter(|r| r.passed).count(),
        results.len(),
        secs.as_secs_f64(),
        checks.len()
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("special-function oracles", c1_oracles),
        ("full-circle sector equals Marcum", c2_full_circle),
        ("empirical outage matches gamma", c3_outage),
        ("discrete EIO against grid search", c4_discrete),
        ("divergence gap bound", c5_gap_bound),
        ("perfect CSI vs EIO gap, N=1", c6_fig2a),
        ("training and mismatched decoder gaps", c7_fig2b),
        ("power allocation and limited feedback", c8_fig2c),
        ("many pilots reach perfect CSI", c9_many_pilots),
        ("invariants and selftest", c10_properties),
    ];
    let mut unexpected = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        let note = if outcome.is_err() && KNOWN_SHORTFALLS.contains(&id) {
            " [known shortfall]"
        } else {
            ""
        };
        println!("{tag} criterion {id:>2} {name} ({secs:.1} s): {detail}{note}");
        if outcome.is_err() && note.is_empty() {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed unexpectedly");
        std::process::exit(1);
    }
}
