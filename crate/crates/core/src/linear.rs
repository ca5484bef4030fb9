//! Closed-form linear theory for the undamped coupled system.
//!
//! Dropping the quadratic terms (with `a = nu = 0`, unit stress diffusion)
//! and writing `v = P div tau` for the solenoidal part of the stress
//! divergence, each Fourier mode of the pair `(u, v)` obeys
//!
//! ```text
//!   u' = v,        v' = -k^2 v - k^2 u,
//! ```
//!
//! i.e. the damped-oscillator equation `m'' + k^2 m' + k^2 m = 0` for the
//! velocity amplitude. Its roots cross from an underdamped conjugate pair
//! (`k < 2`, dispersive decay at rate `k^2/2`) through a double root at
//! `k = 2` to an overdamped pair with a slow root near `-1` as `k` grows.
//! These exact mode solutions serve as the oracle for the full nonlinear
//! solver at small amplitude.
//!
//! The unit coefficient on the `-k^2 u` restoring term corresponds to a
//! stress source `grad u + (grad u)^T`; with the deformation tensor
//! normalized as the symmetric average, that is a source weight of 2, which
//! is what [`linear_regime_check`] runs the solver with.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::fft::Fft2d;
use crate::field::{Representation, ScalarField, SymTensorField, VectorField};
use crate::grid::GridSpec;
use crate::integrator::{Integrator, Scheme, StepperConfig};
use crate::model::{ModelParams, RotationMode, State};
use crate::ops;

/// One Fourier mode of the linearized pair: velocity amplitude and the
/// amplitude of the projected stress divergence, both along the solenoidal
/// direction `k_perp / |k|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub k: (f64, f64),
    pub uhat: Complex64,
    pub vhat: Complex64,
}

impl ModeState {
    pub fn k_mag(&self) -> f64 {
        (self.k.0 * self.k.0 + self.k.1 * self.k.1).sqrt()
    }
}

/// Roots of `lambda^2 + k^2 lambda + k^2 = 0`, sorted by real part
/// descending; the underdamped pair (`k < 2`) puts the positive imaginary
/// root first.
pub fn mode_eigenvalues(k_mag: f64) -> (Complex64, Complex64) {
    assert!(k_mag > 0.0, "evolved modes need k != 0");
    let k2 = k_mag * k_mag;
    let disc = k2 * k2 - 4.0 * k2;
    if disc >= 0.0 {
        let root = disc.sqrt();
        let slow = Complex64::new((-k2 + root) / 2.0, 0.0);
        let fast = Complex64::new((-k2 - root) / 2.0, 0.0);
        (slow, fast)
    } else {
        let im = (-disc).sqrt() / 2.0;
        (
            Complex64::new(-k2 / 2.0, im),
            Complex64::new(-k2 / 2.0, -im),
        )
    }
}

/// Exact propagation of a mode by time `t`: the matrix exponential of
/// `[[0, 1], [-k^2, -k^2]]` acting on `(uhat, vhat)`, with the defective
/// (double-root) branch handled by the secular formula `(c0 + c1 t) e^{lt}`.
pub fn evolve_mode(m0: ModeState, t: f64) -> ModeState {
    assert!(t >= 0.0, "evolve_mode needs t >= 0");
    let k2 = m0.k_mag().powi(2);
    let (lp, lm) = mode_eigenvalues(m0.k_mag());
    let (u, v) = (m0.uhat, m0.vhat);
    // treat near-coincident roots with the defective formula to avoid
    // catastrophic cancellation in the Lagrange weights
    let (uhat, vhat) = if (lp - lm).norm() <= 1e-9 * k2.max(1.0) {
        let l = Complex64::new(-k2 / 2.0, 0.0);
        let slope = v - l * u;
        let e = (l * t).exp();
        let m = (u + slope * t) * e;
        let dm = (v + l * slope * t) * e;
        (m, dm)
    } else {
        // m(t) = c+ e^{l+ t} + c- e^{l- t} with m(0) = u, m'(0) = v
        let cp = (v - lm * u) / (lp - lm);
        let cm = (v - lp * u) / (lm - lp);
        let ep = (lp * t).exp();
        let em = (lm * t).exp();
        (cp * ep + cm * em, cp * lp * ep + cm * lm * em)
    };
    ModeState {
        k: m0.k,
        uhat,
        vhat,
    }
}

/// Dispersion table rows `(k, Re l+, Im l+, Re l-, Im l-)` for
/// `k = 1 ..= k_max`.
pub fn dispersion_rows(k_max: usize) -> Vec<(f64, f64, f64, f64, f64)> {
    (1..=k_max)
        .map(|k| {
            let (lp, lm) = mode_eigenvalues(k as f64);
            (k as f64, lp.re, lp.im, lm.re, lm.im)
        })
        .collect()
}

/// Model configuration whose linearization matches the mode oracle: no
/// damping, no solvent viscosity, unit stress diffusion, full rotational
/// coupling, and source weight 2 (see the module notes on the deformation
/// normalization).
pub fn oracle_params() -> ModelParams {
    ModelParams::full(0.0, 1.0, 0.0, 2.0, 1.0)
}

/// Runs the full nonlinear solver on single-mode initial data of amplitude
/// `eps` and compares `(uhat, vhat)` per record against [`evolve_mode`] over
/// `t` in `[0, t_end]`; returns the largest deviation relative to the initial
/// amplitude. The wavevector is given in integer grid units.
pub fn linear_regime_check(
    grid: &GridSpec,
    kvec: (i32, i32),
    eps: f64,
    t_end: f64,
    fft: &Fft2d,
) -> Result<f64> {
    if kvec == (0, 0) {
        return Err(CoreError::Precondition(
            "linear_regime_check needs a nonzero wavevector".into(),
        ));
    }
    if eps == 0.0 {
        return Ok(0.0);
    }
    let params = oracle_params();
    debug_assert_eq!(params.rotation, RotationMode::Full);
    let k0 = grid.k0();
    let k = (kvec.0 as f64 * k0, kvec.1 as f64 * k0);
    let k_mag = (k.0 * k.0 + k.1 * k.1).sqrt();
    // solenoidal unit direction for this mode
    let e_perp = (-k.1 / k_mag, k.0 / k_mag);
    let u = VectorField {
        c1: ScalarField::from_fn(grid, |x, y| eps * e_perp.0 * (k.0 * x + k.1 * y).cos())
            .to_spectral(fft),
        c2: ScalarField::from_fn(grid, |x, y| eps * e_perp.1 * (k.0 * x + k.1 * y).cos())
            .to_spectral(fft),
    };
    let initial = State::new(0.0, u, SymTensorField::zeros(grid.n, Representation::Spectral), grid)?;

    let idx = (
        kvec.0.rem_euclid(grid.n as i32) as usize,
        kvec.1.rem_euclid(grid.n as i32) as usize,
    );
    let amp0 = {
        let c = (
            initial.u.c1.data[[idx.0, idx.1]],
            initial.u.c2.data[[idx.0, idx.1]],
        );
        c.0 * e_perp.0 + c.1 * e_perp.1
    };
    let scale = amp0.norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let m0 = ModeState {
        k,
        uhat: amp0,
        vhat: Complex64::new(0.0, 0.0),
    };

    let mut cfg = StepperConfig::new(0.01, Scheme::IfRk4, t_end);
    cfg.blowup_factor = 1e6;
    let mut stepper = Integrator::new(*grid, params, cfg, fft)?;
    let mut worst: f64 = 0.0;
    let v_scale = scale * k_mag.max(1.0);
    stepper.run(initial, 0.25, |s| {
        let oracle = evolve_mode(m0, s.t);
        let u_amp = s.u.c1.data[[idx.0, idx.1]] * e_perp.0
            + s.u.c2.data[[idx.0, idx.1]] * e_perp.1;
        let div_tau = ops::divergence_tensor(&s.tau, grid);
        let v = ops::leray_project(&div_tau, grid);
        let v_amp =
            v.c1.data[[idx.0, idx.1]] * e_perp.0 + v.c2.data[[idx.0, idx.1]] * e_perp.1;
        worst = worst.max((u_amp - oracle.uhat).norm() / scale);
        worst = worst.max((v_amp - oracle.vhat).norm() / v_scale);
        Ok(())
    })?;
    Ok(worst)
}
