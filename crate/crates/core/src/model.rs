//! Right-hand sides of the viscoelastic systems and the structural vorticity
//! field.
//!
//! The evolved system couples an incompressible velocity `u` with a symmetric
//! extra-stress tensor `tau`:
//!
//! ```text
//! du/dt + u.grad u + grad P = div tau + nu Lap u,         div u = 0,
//! dtau/dt + u.grad tau + a tau + Q(grad u, tau) = alpha D(u) + mu Lap tau,
//! ```
//!
//! with `D(u)` the symmetric and `Omega(u)` the antisymmetric part of the
//! velocity gradient and the drag term
//!
//! ```text
//! Q(grad u, tau) = tau Omega - Omega tau + b (D tau + tau D),  b in [-1,1].
//! ```
//!
//! In co-rotation mode the drag keeps only the commutator `tau Omega - Omega
//! tau` and the stress equation carries no deformation source, so the
//! Frobenius norm of `tau` is transported, damped and diffused but never fed;
//! that structure is what the stress-energy identities quantify. Full mode
//! keeps the `b` part and the `alpha D(u)` source.
//!
//! All quadratic terms are evaluated pointwise on the grid and dealiased, so
//! for band-limited states the discrete system is a genuine Fourier-Galerkin
//! truncation: the transport and drag pairings that vanish in the continuum
//! vanish here to roundoff, which is what makes the conservation checks sharp.
//!
//! The structural field `Gamma = mu omega - R tau` (with `omega` the scalar
//! vorticity and `R` the tensor-to-scalar Riesz operator) satisfies a pure
//! transport equation with lower-order sources; `gamma_residual` measures how
//! well the discrete tendencies honor it.

use crate::error::{CoreError, Result};
use crate::fft::Fft2d;
use crate::field::{Representation, ScalarField, SymTensorField, VectorField};
use crate::grid::GridSpec;
use crate::lp::riesz_commutator;
use crate::ops;
use num_complex::Complex64;

/// Which drag bilinearity the stress equation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationMode {
    /// Commutator drag only, no deformation source in the stress equation.
    Corotation,
    /// Full drag including the `b` part, with the `alpha D(u)` source.
    Full,
}

/// Coefficients of the coupled system.
#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    /// Stress damping rate, >= 0.
    pub a: f64,
    /// Stress diffusivity, >= 0.
    pub mu: f64,
    /// Kinematic viscosity, >= 0.
    pub nu: f64,
    /// Coupling strength of the deformation source, > 0 (unused in
    /// co-rotation mode, where the stress equation has no source).
    pub alpha: f64,
    /// Slip parameter of the drag term, in [-1, 1] (unused in co-rotation).
    pub b: f64,
    pub rotation: RotationMode,
}

impl ModelParams {
    /// Co-rotation system: damping `a`, stress diffusivity `mu`, inviscid.
    pub fn corotation(a: f64, mu: f64) -> Self {
        ModelParams {
            a,
            mu,
            nu: 0.0,
            alpha: 1.0,
            b: 0.0,
            rotation: RotationMode::Corotation,
        }
    }

    /// Inviscid noncorotation system: no damping, unit coupling and stress
    /// diffusivity, general slip parameter.
    pub fn noncorotation(b: f64) -> Self {
        ModelParams {
            a: 0.0,
            mu: 1.0,
            nu: 0.0,
            alpha: 1.0,
            b,
            rotation: RotationMode::Full,
        }
    }

    pub fn full(a: f64, mu: f64, nu: f64, alpha: f64, b: f64) -> Self {
        ModelParams {
            a,
            mu,
            nu,
            alpha,
            b,
            rotation: RotationMode::Full,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a >= 0.0
            && self.mu >= 0.0
            && self.nu >= 0.0
            && self.alpha > 0.0
            && (-1.0..=1.0).contains(&self.b)
            && [self.a, self.mu, self.nu, self.alpha, self.b]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(CoreError::InvalidSpec(format!(
                "model parameters need a, mu, nu >= 0, alpha > 0, |b| <= 1; \
                 got a={} mu={} nu={} alpha={} b={}",
                self.a, self.mu, self.nu, self.alpha, self.b
            )))
        }
    }
}

/// Instantaneous solver state, spectral representation throughout.
#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    pub u: VectorField,
    pub tau: SymTensorField,
}

impl State {
    /// Wrap fields into a state, enforcing the divergence-free velocity
    /// invariant at roundoff scale.
    pub fn new(t: f64, u: VectorField, tau: SymTensorField, grid: &GridSpec) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CoreError::InvalidSpec(format!("state time {t} invalid")));
        }
        if u.repr() != Representation::Spectral || tau.repr() != Representation::Spectral {
            return Err(CoreError::Representation(
                "state fields must be spectral".into(),
            ));
        }
        let div = ops::divergence(&u, grid).l2_norm(grid);
        let grad = u.spectral_moment(grid, |k2| k2).sqrt();
        if div > 1e-10 * grad.max(f64::MIN_POSITIVE) {
            return Err(CoreError::Precondition(format!(
                "state velocity not divergence-free: |div u| = {div:.3e} vs |grad u| = {grad:.3e}"
            )));
        }
        Ok(State { t, u, tau })
    }

    pub fn zeros(n: usize) -> Self {
        State {
            t: 0.0,
            u: VectorField::zeros(n, Representation::Spectral),
            tau: SymTensorField::zeros(n, Representation::Spectral),
        }
    }
}

/// Symmetric part of the velocity gradient, `D(u) = (grad u + grad u^T)/2`,
/// spectral in and out.
pub fn deformation(u: &VectorField, grid: &GridSpec) -> SymTensorField {
    u.require(Representation::Spectral, "deformation");
    let d1u1 = ops::derivative(&u.c1, 0, grid);
    let d2u1 = ops::derivative(&u.c1, 1, grid);
    let d1u2 = ops::derivative(&u.c2, 0, grid);
    let d2u2 = ops::derivative(&u.c2, 1, grid);
    SymTensorField {
        c11: d1u1,
        c12: d2u1.add(&d1u2).scaled(0.5),
        c22: d2u2,
    }
}

/// Scalar vorticity `omega = d1 u2 - d2 u1`; the antisymmetric gradient part
/// is `Omega(u) = [[0, -omega/2], [omega/2, 0]]`.
pub fn vorticity(u: &VectorField, grid: &GridSpec) -> ScalarField {
    ops::curl2d(u, grid)
}

/// Assemble the drag tensor from real-space vorticity, deformation and
/// stress; forward-transformed and dealiased. With `Omega` as above,
///
/// ```text
/// tau Omega - Omega tau = [[t12 w, (t22 - t11) w / 2], [., -t12 w]],
/// D tau + tau D = [[2(D11 t11 + D12 t12), D11 t12 + D12 t22 + t11 D12 + t12 D22], [., 2(D12 t12 + D22 t22)]].
/// ```
fn q_from_reals(
    w: &ScalarField,
    d: Option<(&SymTensorField, f64)>,
    tau: &SymTensorField,
    grid: &GridSpec,
    fft: &Fft2d,
) -> SymTensorField {
    w.require(Representation::Real, "q_from_reals");
    tau.require(Representation::Real, "q_from_reals");
    let n = grid.n;
    let at = |f: &ScalarField, i: usize, j: usize| f.data[[i, j]].re;
    let assemble = |f: &dyn Fn(usize, usize) -> f64| {
        let mut out = ScalarField::zeros(n, Representation::Real);
        for ((i, j), z) in out.data.indexed_iter_mut() {
            *z = Complex64::new(f(i, j), 0.0);
        }
        let mut s = out.to_spectral(fft);
        ops::dealias(&mut s, grid);
        s
    };
    let c11 = assemble(&|i, j| {
        let mut v = at(&tau.c12, i, j) * at(w, i, j);
        if let Some((d, b)) = d {
            v += b * 2.0 * (at(&d.c11, i, j) * at(&tau.c11, i, j) + at(&d.c12, i, j) * at(&tau.c12, i, j));
        }
        v
    });
    let c12 = assemble(&|i, j| {
        let mut v = (at(&tau.c22, i, j) - at(&tau.c11, i, j)) * at(w, i, j) / 2.0;
        if let Some((d, b)) = d {
            v += b
                * (at(&d.c11, i, j) * at(&tau.c12, i, j)
                    + at(&d.c12, i, j) * at(&tau.c22, i, j)
                    + at(&tau.c11, i, j) * at(&d.c12, i, j)
                    + at(&tau.c12, i, j) * at(&d.c22, i, j));
        }
        v
    });
    let c22 = assemble(&|i, j| {
        let mut v = -at(&tau.c12, i, j) * at(w, i, j);
        if let Some((d, b)) = d {
            v += b * 2.0 * (at(&d.c12, i, j) * at(&tau.c12, i, j) + at(&d.c22, i, j) * at(&tau.c22, i, j));
        }
        v
    });
    SymTensorField { c11, c12, c22 }
}

/// Drag tensor `Q(grad u, tau)`: the commutator with `Omega(u)` plus, in full
/// mode, `b (D tau + tau D)`. Spectral inputs, dealiased spectral output.
pub fn bilinear_q(
    u: &VectorField,
    tau: &SymTensorField,
    params: &ModelParams,
    grid: &GridSpec,
    fft: &Fft2d,
) -> SymTensorField {
    let w = vorticity(u, grid).to_real(fft);
    let tau_real = tau.to_real(fft);
    match params.rotation {
        RotationMode::Corotation => q_from_reals(&w, None, &tau_real, grid, fft),
        RotationMode::Full => {
            let d = deformation(u, grid).to_real(fft);
            q_from_reals(&w, Some((&d, params.b)), &tau_real, grid, fft)
        }
    }
}

/// Instantaneous tendencies of both fields.
#[derive(Debug, Clone)]
pub struct Tendencies {
    pub du: VectorField,
    pub dtau: SymTensorField,
}

/// The non-diagonal part of the right-hand sides: transport, drag, and the
/// cross-coupling terms, skipping `nu Lap u`, `-a tau` and `mu Lap tau`
/// (those are diagonal Fourier multipliers the integrator handles exactly):
///
/// ```text
/// du/dt  ~ P(-div(u x u) + div tau)
/// dtau/dt ~ -div(u tau) - Q + [alpha D(u) in full mode]
/// ```
///
/// with `P` the Leray projection and every quadratic term dealiased. The
/// transport terms use the conservative form, valid because `div u = 0`.
pub fn explicit_tendencies(
    state: &State,
    params: &ModelParams,
    grid: &GridSpec,
    fft: &Fft2d,
) -> Tendencies {
    let u = &state.u;
    let tau = &state.tau;
    let u_real = u.to_real(fft);
    let tau_real = tau.to_real(fft);

    // velocity: advection, stress divergence, Leray projection
    let adv_u = VectorField {
        c1: ops::advect_scalar(&u_real, &u_real.c1, grid, fft),
        c2: ops::advect_scalar(&u_real, &u_real.c2, grid, fft),
    };
    let div_tau = ops::divergence_tensor(tau, grid);
    let du = ops::leray_project(&div_tau.sub(&adv_u), grid);

    // stress: transport, drag, source
    let w = vorticity(u, grid).to_real(fft);
    let d_spec = match params.rotation {
        RotationMode::Full => Some(deformation(u, grid)),
        RotationMode::Corotation => None,
    };
    let q = match &d_spec {
        Some(d) => q_from_reals(&w, Some((&d.to_real(fft), params.b)), &tau_real, grid, fft),
        None => q_from_reals(&w, None, &tau_real, grid, fft),
    };
    let mut dtau = SymTensorField {
        c11: ops::advect_scalar(&u_real, &tau_real.c11, grid, fft),
        c12: ops::advect_scalar(&u_real, &tau_real.c12, grid, fft),
        c22: ops::advect_scalar(&u_real, &tau_real.c22, grid, fft),
    }
    .scaled(-1.0);
    dtau.axpy(-1.0, &q);
    if let Some(d) = &d_spec {
        dtau.axpy(params.alpha, d);
    }
    Tendencies { du, dtau }
}

/// Complete instantaneous right-hand sides:
///
/// ```text
/// du/dt  = P(-div(u x u) + div tau) + nu Lap u
/// dtau/dt = -div(u tau) - a tau - Q + [alpha D(u) in full mode] + mu Lap tau
/// ```
pub fn tendencies(state: &State, params: &ModelParams, grid: &GridSpec, fft: &Fft2d) -> Tendencies {
    let mut td = explicit_tendencies(state, params, grid, fft);
    if params.nu != 0.0 {
        td.du.axpy(
            params.nu,
            &ops::laplacian(&state.u.c1, grid).into_c1_of(&ops::laplacian(&state.u.c2, grid)),
        );
    }
    td.dtau.axpy(-params.a, &state.tau);
    if params.mu != 0.0 {
        td.dtau.axpy(
            params.mu,
            &SymTensorField {
                c11: ops::laplacian(&state.tau.c11, grid),
                c12: ops::laplacian(&state.tau.c12, grid),
                c22: ops::laplacian(&state.tau.c22, grid),
            },
        );
    }
    td
}

/// Velocity tendency alone; see `tendencies`.
pub fn rhs_velocity(state: &State, params: &ModelParams, grid: &GridSpec, fft: &Fft2d) -> VectorField {
    tendencies(state, params, grid, fft).du
}

/// Stress tendency alone; see `tendencies`.
pub fn rhs_stress(state: &State, params: &ModelParams, grid: &GridSpec, fft: &Fft2d) -> SymTensorField {
    tendencies(state, params, grid, fft).dtau
}

/// Recover the pressure eliminated by the projection: the mean-zero solution
/// of `Lap P = div(div tau - u.grad u)`.
pub fn pressure_recover(state: &State, params: &ModelParams, grid: &GridSpec, fft: &Fft2d) -> ScalarField {
    let _ = params;
    let u_real = state.u.to_real(fft);
    let adv_u = VectorField {
        c1: ops::advect_scalar(&u_real, &u_real.c1, grid, fft),
        c2: ops::advect_scalar(&u_real, &u_real.c2, grid, fft),
    };
    let force = ops::divergence_tensor(&state.tau, grid).sub(&adv_u);
    ops::inverse_laplacian(&ops::divergence(&force, grid), grid)
}

/// Structural field `Gamma = mu omega - R tau`, spectral.
pub fn gamma_field(state: &State, params: &ModelParams, grid: &GridSpec) -> ScalarField {
    let w = vorticity(&state.u, grid);
    let r = ops::riesz_r(&state.tau, grid);
    w.scaled(params.mu).sub(&r)
}

/// L2 norm of the defect in the transport identity for `Gamma`:
///
/// ```text
/// dGamma/dt + P(u.grad Gamma)
///   = a R tau + R Q + [R, u.grad] tau - alpha R D(u) (full) + mu nu Lap omega
/// ```
///
/// evaluated with the given tendencies. For band-limited states under the
/// dealiased product rule the defect is pure roundoff; for under-resolved
/// data it measures aliasing and shrinks at the spectral rate as the grid is
/// refined.
pub fn gamma_residual(
    state: &State,
    rates: &Tendencies,
    params: &ModelParams,
    grid: &GridSpec,
    fft: &Fft2d,
) -> Result<f64> {
    let u_real = state.u.to_real(fft);
    let gamma = gamma_field(state, params, grid);
    let gamma_real = gamma.to_real(fft);

    let mut res = ops::curl2d(&rates.du, grid).scaled(params.mu);
    res.axpy(-1.0, &ops::riesz_r(&rates.dtau, grid));
    res.axpy(1.0, &ops::advect_scalar(&u_real, &gamma_real, grid, fft));
    res.axpy(-params.a, &ops::riesz_r(&state.tau, grid));
    let q = bilinear_q(&state.u, &state.tau, params, grid, fft);
    res.axpy(-1.0, &ops::riesz_r(&q, grid));
    res.axpy(-1.0, &riesz_commutator(&state.u, &state.tau, grid, fft)?);
    if params.rotation == RotationMode::Full {
        // the source enters the stress equation with +alpha D, so it appears
        // on the transport side of the Gamma identity with the opposite sign
        res.axpy(params.alpha, &ops::riesz_r(&deformation(&state.u, grid), grid));
    }
    if params.nu != 0.0 && params.mu != 0.0 {
        let w = vorticity(&state.u, grid);
        res.axpy(-params.mu * params.nu, &ops::laplacian(&w, grid));
    }
    Ok(res.l2_norm(grid))
}

impl ScalarField {
    /// Pair two scalars into a vector field; small helper for tendency
    /// assembly.
    fn into_c1_of(self, c2: &ScalarField) -> VectorField {
        VectorField {
            c1: self,
            c2: c2.clone(),
        }
    }
}

/// Pairings entering the energy rates, computed spectrally.
pub fn coupling_pairings(state: &State, grid: &GridSpec) -> (f64, f64) {
    let div_tau = ops::divergence_tensor(&state.tau, grid);
    let d = deformation(&state.u, grid);
    let p1 = crate::field::pair_vector(&div_tau, &state.u, grid);
    let p2 = crate::field::pair_tensor(&d, &state.tau, grid);
    (p1, p2)
}

/// Drag-stress pairing `<Q, tau>` in the Frobenius inner product.
pub fn drag_pairing(
    state: &State,
    params: &ModelParams,
    grid: &GridSpec,
    fft: &Fft2d,
) -> f64 {
    let q = bilinear_q(&state.u, &state.tau, params, grid, fft);
    crate::field::pair_tensor(&q, &state.tau, grid)
}

/// Divergence defect of a velocity tendency relative to its gradient size;
/// used by the conservation tests.
pub fn divergence_defect(v: &VectorField, grid: &GridSpec) -> f64 {
    let div = ops::divergence(v, grid).l2_norm(grid);
    let grad = v.spectral_moment(grid, |k2| k2).sqrt();
    div / grad.max(f64::MIN_POSITIVE)
}
