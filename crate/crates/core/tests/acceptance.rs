//! Acceptance suite. One test per criterion, each printing a single
//! `A# <name>: PASS/FAIL (observed vs tolerance)` line; run with
//! `cargo test --test acceptance -- --nocapture` to see all lines.
//!
//! Identity criteria use exact oracles; decay criteria are windowed fits on a
//! large box, since whole-plane rates are only mirrored on a torus while the
//! smallest resolved frequencies have not yet frozen.

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::TAU;
use std::sync::LazyLock;
use std::time::Instant;

use oldroyd2d::diag::{self, lookup};
use oldroyd2d::initial::{generate, GeneratorKind, GeneratorSpec};
use oldroyd2d::linear;
use oldroyd2d::lp;
use oldroyd2d::model::{self, State};
use oldroyd2d::ops;
use oldroyd2d::{
    DiagnosticsConfig, DiagnosticsRecord, Fft2d, GridSpec, Integrator, ModelParams,
    Representation, ScalarField, Scheme, StepperConfig, SymTensorField, Tracker, VectorField,
};

fn verdict(id: &str, what: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("{id} {what}: {tag} ({detail})");
    assert!(ok, "{id} {what}: FAIL ({detail})");
}

fn band_spec(amplitude: f64, band: i64) -> GeneratorSpec {
    let mut spec = GeneratorSpec::new(GeneratorKind::RandomBand);
    spec.amplitude = amplitude;
    spec.mode = (band, 0);
    spec
}

fn tracked_run(
    grid: GridSpec,
    params: ModelParams,
    cfg: StepperConfig,
    dcfg: DiagnosticsConfig,
    initial: State,
    cadence: f64,
    fft: &Fft2d,
) -> Vec<DiagnosticsRecord> {
    let mut integ = Integrator::new(grid, params, cfg, fft).unwrap();
    let mut tracker = Tracker::new(dcfg, params, grid, fft).unwrap();
    integ.run(initial, cadence, |s| tracker.observe(s)).unwrap();
    tracker.into_records()
}

fn joint_l2(r: &DiagnosticsRecord) -> f64 {
    let u = lookup(&r.lp_norms_u, 2.0).unwrap();
    let t = lookup(&r.lp_norms_tau, 2.0).unwrap();
    u.hypot(t)
}

/// Shared co-rotation benchmark run behind A1, A2 and the first half of A3:
/// n=128, L=2pi, a=mu=1, nu=0, dt=1e-3, records at every step so the
/// quadrature under the identity residual stays at the 1e-6 level.
struct CoroRun {
    records: Vec<DiagnosticsRecord>,
    params: ModelParams,
    runtime_s: f64,
}

static CORO: LazyLock<CoroRun> = LazyLock::new(|| {
    let grid = GridSpec::new(128, TAU).unwrap();
    let fft = Fft2d::new(128);
    let params = ModelParams::corotation(1.0, 1.0);
    let initial = generate(&band_spec(0.5, 2), &grid, 11, &fft).unwrap();
    let dcfg = DiagnosticsConfig {
        p_list: vec![2.0, 4.0, f64::INFINITY],
        sigma_list: vec![],
        b0_every: 0,
        ..DiagnosticsConfig::default()
    };
    let cfg = StepperConfig::new(1e-3, Scheme::IfRk4, 2.0);
    let t0 = Instant::now();
    let records = tracked_run(grid, params, cfg, dcfg, initial, 0.0, &fft);
    CoroRun {
        records,
        params,
        runtime_s: t0.elapsed().as_secs_f64(),
    }
});

#[test]
fn a1_corotation_stress_energy_identity() {
    let run = &*CORO;
    let residual = diag::tau_energy_identity(&run.records, &run.params).unwrap();
    let ok = residual <= 1e-5 && run.runtime_s <= 120.0;
    verdict(
        "A1",
        "co-rotation stress energy identity",
        ok,
        &format!(
            "residual={residual:.3e}, tol=1e-5; runtime={:.0}s, budget=120s",
            run.runtime_s
        ),
    );
}

#[test]
fn a2_corotation_lp_decay_bound() {
    let run = &*CORO;
    let margin = diag::tau_lp_decay_check(&run.records, &run.params).unwrap();
    verdict(
        "A2",
        "stress Lp decay bound, p in {2, 4, inf}",
        margin <= 1e-4,
        &format!("worst margin={margin:.3e}, tol=1e-4"),
    );
}

#[test]
fn a3_velocity_energy_budget_and_euler_limit() {
    // Budget residual at t = 1 from the shared co-rotation run.
    let run = &*CORO;
    let at_one = run
        .records
        .iter()
        .min_by(|a, b| {
            (a.t - 1.0)
                .abs()
                .partial_cmp(&(b.t - 1.0).abs())
                .unwrap()
        })
        .unwrap();
    let residual = at_one.velocity_energy_residual.unwrap();

    // With tau0 = 0 the co-rotation system degenerates to 2-D Euler; the
    // dealiased Galerkin truncation conserves energy exactly, so only time
    // integration drift remains.
    let grid = GridSpec::new(64, TAU).unwrap();
    let fft = Fft2d::new(64);
    let params = ModelParams::corotation(1.0, 1.0);
    let with_tau = generate(&band_spec(1.0, 4), &grid, 5, &fft).unwrap();
    let euler0 = State::new(
        0.0,
        with_tau.u,
        SymTensorField::zeros(64, Representation::Spectral),
        &grid,
    )
    .unwrap();
    let dcfg = DiagnosticsConfig {
        p_list: vec![2.0],
        sigma_list: vec![],
        b0_every: 0,
        ..DiagnosticsConfig::default()
    };
    let cfg = StepperConfig::new(1e-3, Scheme::IfRk4, 1.0);
    let records = tracked_run(grid, params, cfg, dcfg, euler0, 0.01, &fft);
    let e0 = lookup(&records[0].lp_norms_u, 2.0).unwrap().powi(2);
    let drift = records
        .iter()
        .map(|r| (lookup(&r.lp_norms_u, 2.0).unwrap().powi(2) - e0).abs() / e0)
        .fold(0.0, f64::max);

    let ok = residual <= 1e-5 && drift <= 1e-8;
    verdict(
        "A3",
        "kinetic energy budget and Euler conservation",
        ok,
        &format!("budget residual(t=1)={residual:.3e}, tol=1e-5; Euler drift={drift:.3e}, tol=1e-8"),
    );
}

#[test]
fn a4_noncorotation_monotone_energy() {
    let grid = GridSpec::new(64, TAU).unwrap();
    let fft = Fft2d::new(64);
    let params = ModelParams::noncorotation(1.0);
    let initial = generate(&band_spec(1e-2, 4), &grid, 17, &fft).unwrap();
    let dcfg = DiagnosticsConfig {
        p_list: vec![2.0],
        sigma_list: vec![],
        b0_every: 0,
        ..DiagnosticsConfig::default()
    };
    let cfg = StepperConfig::new(5e-3, Scheme::IfRk4, 10.0);
    let records = tracked_run(grid, params, cfg, dcfg, initial, 0.1, &fft);
    let worst_slope = diag::monotonicity_check_e_eta(&records, &params).unwrap();
    verdict(
        "A4",
        "modified energy E_eta is non-increasing",
        worst_slope <= 1e-8,
        &format!("worst dE/dt={worst_slope:.3e}, tol=1e-8 per unit time"),
    );
}

#[test]
fn a5_linear_dispersion_matches_mode_oracle() {
    let grid = GridSpec::new(32, TAU).unwrap();
    let fft = Fft2d::new(32);
    let mut worst_dev: f64 = 0.0;
    for k in [1, 2, 3] {
        let dev = linear::linear_regime_check(&grid, (k, 0), 1e-8, 5.0, &fft).unwrap();
        worst_dev = worst_dev.max(dev);
    }

    // Quadratic-root oracle for m'' + k^2 m' + k^2 m = 0, written directly.
    let mut worst_eig: f64 = 0.0;
    for k in 1..=10 {
        let k2 = (k * k) as f64;
        let root = Complex64::new(k2 * k2 - 4.0 * k2, 0.0).sqrt();
        let plus = (Complex64::new(-k2, 0.0) + root) / 2.0;
        let minus = (Complex64::new(-k2, 0.0) - root) / 2.0;
        let (lp, lm) = linear::mode_eigenvalues(k as f64);
        let scale = k2.max(1.0);
        worst_eig = worst_eig
            .max((lp - plus).norm() / scale)
            .max((lm - minus).norm() / scale);
    }
    // Pinned values: complex pair, double root, and a stiff real split.
    let (lp1, _) = linear::mode_eigenvalues(1.0);
    let (lp2, lm2) = linear::mode_eigenvalues(2.0);
    let (lp10, lm10) = linear::mode_eigenvalues(10.0);
    let pinned = (lp1 - Complex64::new(-0.5, 0.75f64.sqrt())).norm()
        + (lp2 - Complex64::new(-2.0, 0.0)).norm()
        + (lm2 - Complex64::new(-2.0, 0.0)).norm()
        + (lp10.re + 1.010_205_144_336_442_2).abs()
        + (lm10.re + 98.989_794_855_663_56).abs() / 100.0;

    let ok = worst_dev <= 1e-4 && worst_eig <= 1e-12 && pinned <= 5e-12;
    verdict(
        "A5",
        "solver matches per-mode linear oracle (k=1,2,3)",
        ok,
        &format!(
            "worst deviation={worst_dev:.3e}, tol=1e-4; eigentable error={worst_eig:.3e}, tol=1e-12"
        ),
    );
}

#[test]
fn a6_decay_exponents_on_large_box() {
    // Flat-modulus random band: bounded but non-vanishing low-frequency
    // content, the class behind the -1/2 energy rate. Gaussian data on a
    // torus is mean-free and decays a full power faster, outside this window.
    let grid = GridSpec::new(512, 100.0).unwrap();
    let fft = Fft2d::new(512);
    let params = ModelParams::noncorotation(1.0);
    let initial = generate(&band_spec(1e-2, 16), &grid, 2026, &fft).unwrap();
    let dcfg = DiagnosticsConfig {
        p_list: vec![2.0],
        sigma_list: vec![],
        b0_every: 0,
        ..DiagnosticsConfig::default()
    };
    let cfg = StepperConfig::new(0.2, Scheme::IfRk4, 200.0);
    let t0 = Instant::now();
    let records = tracked_run(grid, params, cfg, dcfg, initial, 2.0, &fft);
    let runtime_s = t0.elapsed().as_secs_f64();

    let window = (10.0, 200.0);
    let (slope_l2, r2_l2) = diag::decay_exponent_fit(&records, joint_l2, window).unwrap();
    let (slope_grad, r2_grad) = diag::decay_exponent_fit(
        &records,
        |r| r.grad_l2_u.hypot(r.grad_l2_tau),
        window,
    )
    .unwrap();

    let ok = (-0.65..=-0.35).contains(&slope_l2)
        && (-1.3..=-0.7).contains(&slope_grad)
        && r2_l2 >= 0.95
        && r2_grad >= 0.95
        && runtime_s <= 1800.0;
    verdict(
        "A6",
        "decay exponents over t in [10, 200]",
        ok,
        &format!(
            "L2 slope={slope_l2:.3} (window [-0.65, -0.35], r2={r2_l2:.4}); \
             grad slope={slope_grad:.3} (window [-1.3, -0.7], r2={r2_grad:.4}); \
             runtime={runtime_s:.0}s, budget=1800s"
        ),
    );
}

#[test]
fn a7_littlewood_paley_partition_and_bony() {
    let grid = GridSpec::new(128, TAU).unwrap();
    let part = lp::DyadicPartition::new(&grid).unwrap();
    let (nonhom, hom) = lp::partition_residuals(&part);
    let partition_worst = nonhom.max(hom);

    let g64 = GridSpec::new(64, TAU).unwrap();
    let fft = Fft2d::new(64);
    let part64 = lp::DyadicPartition::new(&g64).unwrap();
    let mut rng = StdRng::seed_from_u64(1234);
    let random_dealiased = |rng: &mut StdRng| {
        let mut f =
            ScalarField::from_fn(&g64, |_, _| rng.random_range(-1.0..1.0)).to_spectral(&fft);
        ops::dealias(&mut f, &g64);
        f
    };
    let mut worst_bony: f64 = 0.0;
    for _ in 0..100 {
        let u = random_dealiased(&mut rng);
        let v = random_dealiased(&mut rng);
        let bony = lp::bony_paraproduct(&u, &v, &part64, &fft);
        let direct = u.to_real(&fft).mul_real(&v.to_real(&fft));
        let sum = bony.t_uv.add(&bony.t_vu).add(&bony.remainder);
        let rel = sum.sub(&direct).l2_norm(&g64) / direct.l2_norm(&g64);
        worst_bony = worst_bony.max(rel);
    }

    let ok = partition_worst <= 1e-12 && worst_bony <= 1e-10;
    verdict(
        "A7",
        "dyadic partition of unity and Bony reconstruction",
        ok,
        &format!(
            "partition residual={partition_worst:.3e}, tol=1e-12; \
             Bony error={worst_bony:.3e} over 100 pairs, tol=1e-10"
        ),
    );
}

/// Smooth but not band-limited data whose quadratic interactions alias at the
/// n = 64 folding frequencies; refinement to n = 128 removes that signal.
fn aliasing_probe_state(g: &GridSpec, fft: &Fft2d) -> State {
    let c = std::f64::consts::PI;
    let w2 = 0.02;
    let bump = move |x: f64, y: f64, cx: f64, cy: f64| {
        (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * w2)).exp()
    };
    let mut w = ScalarField::from_fn(g, |x, y| bump(x, y, c, c)).to_spectral(fft);
    w.data[[0, 0]] = Complex64::new(0.0, 0.0);
    let u = ops::biot_savart(&w, (0.0, 0.0), g).unwrap();
    let tau = SymTensorField {
        c11: ScalarField::from_fn(g, |x, y| bump(x, y, c * 0.8, c)).to_spectral(fft),
        c12: ScalarField::from_fn(g, |x, y| 0.7 * bump(x, y, c, c * 1.2)).to_spectral(fft),
        c22: ScalarField::from_fn(g, |x, y| -0.5 * bump(x, y, c * 1.1, c * 0.9)).to_spectral(fft),
    };
    State::new(0.0, u, tau, g).unwrap()
}

#[test]
fn a8_gamma_residual_refines_and_vanishes_linearly() {
    let params = ModelParams::corotation(1.0, 1.0);
    let mut residuals = Vec::new();
    for n in [64usize, 128] {
        let g = GridSpec::new(n, TAU).unwrap();
        let fft = Fft2d::new(n);
        let s = aliasing_probe_state(&g, &fft);
        let rates = model::tendencies(&s, &params, &g, &fft);
        residuals.push(model::gamma_residual(&s, &rates, &params, &g, &fft).unwrap());
    }
    let gain = residuals[0] / residuals[1];

    // Linear regime: tiny band-limited data leaves only quadratic dust.
    let g = GridSpec::new(64, TAU).unwrap();
    let fft = Fft2d::new(64);
    let tiny = generate(&band_spec(1e-11, 4), &g, 61, &fft).unwrap();
    let scale = tiny.u.spectral_moment(&g, |k2| 1.0 + k2).sqrt()
        + tiny.tau.spectral_moment(&g, |k2| 1.0 + k2).sqrt();
    let mut worst_linear: f64 = 0.0;
    for p in [ModelParams::corotation(1.0, 1.0), ModelParams::noncorotation(0.4)] {
        let rates = model::tendencies(&tiny, &p, &g, &fft);
        let res = model::gamma_residual(&tiny, &rates, &p, &g, &fft).unwrap();
        worst_linear = worst_linear.max(res / scale);
    }

    let ok = gain >= 8.0 && residuals[0] > 1e-10 && worst_linear <= 1e-8;
    verdict(
        "A8",
        "vorticity-stress structural residual",
        ok,
        &format!(
            "refinement gain 64->128 = {gain:.1}x (>= 8 required, coarse={:.3e}); \
             linear-regime residual={worst_linear:.3e} x scale, tol=1e-8",
            residuals[0]
        ),
    );
}

#[test]
fn a9_temporal_order_via_richardson() {
    let grid = GridSpec::new(32, TAU).unwrap();
    let fft = Fft2d::new(32);
    let params = ModelParams::noncorotation(0.5);
    let initial = generate(&band_spec(0.5, 3), &grid, 9, &fft).unwrap();
    let t_end = 0.12;
    let mut finals = Vec::new();
    for dt in [0.01, 0.005, 0.0025] {
        let cfg = StepperConfig::new(dt, Scheme::IfRk4, t_end);
        let mut integ = Integrator::new(grid, params, cfg, &fft).unwrap();
        let out = integ.run(initial.clone(), 2.0 * t_end, |_| Ok(())).unwrap();
        finals.push(out.final_state);
    }
    let diff = |a: &State, b: &State| {
        let du = VectorField {
            c1: a.u.c1.sub(&b.u.c1),
            c2: a.u.c2.sub(&b.u.c2),
        };
        let dtau = a.tau.sub(&b.tau);
        (du.l2_norm_sq(&grid) + dtau.l2_norm_sq(&grid)).sqrt()
    };
    let d12 = diff(&finals[0], &finals[1]);
    let d23 = diff(&finals[1], &finals[2]);
    let order = (d12 / d23).log2();
    verdict(
        "A9",
        "temporal convergence order (dt, dt/2, dt/4)",
        order >= 3.0,
        &format!("observed order={order:.2}, required >= 3; |d12|={d12:.3e}, |d23|={d23:.3e}"),
    );
}

#[test]
fn a10_commutator_ratio_corpus() {
    let grid = GridSpec::new(64, TAU).unwrap();
    let fft = Fft2d::new(64);
    let part = lp::DyadicPartition::new(&grid).unwrap();
    let ps = [1.5, 2.0, 4.0];
    let lambda = 37.5;

    // Band 12 gives each sample ~300 modes, enough that the commutator norm
    // concentrates and the corpus maximum stops wandering with the seed
    // (narrow bands showed 7-12% cross-seed spread, band 12 stays under 4%).
    let mut corpus_max = [[0.0f64; 3]; 2];
    let mut worst_scale_dev: f64 = 0.0;
    for (c, base) in [(0usize, 1000u64), (1, 2000)] {
        for i in 0..50 {
            let s = generate(&band_spec(1.0, 12), &grid, base + i, &fft).unwrap();
            for (pi, &p) in ps.iter().enumerate() {
                let ratio = lp::commutator_lp_ratio(&s.u, &s.tau, p, &grid, &fft, &part).unwrap();
                assert!(ratio.is_finite() && ratio > 0.0, "ratio {ratio} at p={p}");
                corpus_max[c][pi] = corpus_max[c][pi].max(ratio);
                if p == 2.0 {
                    let scaled = lp::commutator_lp_ratio(
                        &s.u.scaled(lambda),
                        &s.tau.scaled(lambda),
                        p,
                        &grid,
                        &fft,
                        &part,
                    )
                    .unwrap();
                    worst_scale_dev = worst_scale_dev.max((scaled - ratio).abs() / ratio);
                }
            }
        }
    }
    let mut worst_spread: f64 = 0.0;
    for pi in 0..3 {
        let (a, b) = (corpus_max[0][pi], corpus_max[1][pi]);
        worst_spread = worst_spread.max((a - b).abs() / a.max(b));
    }

    let ok = worst_scale_dev <= 1e-10 && worst_spread <= 0.10;
    verdict(
        "A10",
        "commutator bound ratio on 50-sample corpus",
        ok,
        &format!(
            "max ratios p=1.5/2/4: {:.3}/{:.3}/{:.3}; scale invariance dev={worst_scale_dev:.3e}, \
             tol=1e-10; cross-seed spread={:.1}%, tol=10%",
            corpus_max[0][0], corpus_max[0][1], corpus_max[0][2],
            worst_spread * 100.0
        ),
    );
}
