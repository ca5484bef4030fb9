//! Spectral calculus on the periodic grid.
//!
//! All operators here act on spectral-representation fields and return
//! spectral fields (multiplier algebra); the only exceptions are the product
//! helpers at the bottom, which consume real-representation factors and push
//! the result back through the forward transform with the dealiasing mask
//! applied.
//!
//! Odd-order derivative multipliers zero the Nyquist mode (it has no
//! well-defined sign); even-order multipliers keep it. Inverse operators leave
//! the zero mode at zero.

use crate::error::{CoreError, Result};
use crate::fft::Fft2d;
use crate::field::{Representation, ScalarField, SymTensorField, VectorField};
use crate::grid::GridSpec;
use num_complex::Complex64;

/// Spectral derivative along `axis` (0 = x1, 1 = x2): multiply by `i k`,
/// Nyquist zeroed.
pub fn derivative(f: &ScalarField, axis: usize, grid: &GridSpec) -> ScalarField {
    f.require(Representation::Spectral, "derivative");
    assert!(axis < 2);
    let n = grid.n;
    let ks = grid.wavenumbers();
    let mut out = f.clone();
    for i in 0..n {
        for j in 0..n {
            let idx = if axis == 0 { i } else { j };
            let m = grid.mode(idx);
            let fac = if m == -(n as i64) / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, ks[idx])
            };
            out.data[[i, j]] *= fac;
        }
    }
    out
}

/// Gradient of a scalar: `(d1 g, d2 g)`.
pub fn gradient(g: &ScalarField, grid: &GridSpec) -> VectorField {
    VectorField {
        c1: derivative(g, 0, grid),
        c2: derivative(g, 1, grid),
    }
}

/// Row-wise divergence of a symmetric tensor:
/// `(d1 t11 + d2 t12, d1 t12 + d2 t22)`.
pub fn divergence_tensor(t: &SymTensorField, grid: &GridSpec) -> VectorField {
    let d1_t11 = derivative(&t.c11, 0, grid);
    let d2_t12 = derivative(&t.c12, 1, grid);
    let d1_t12 = derivative(&t.c12, 0, grid);
    let d2_t22 = derivative(&t.c22, 1, grid);
    VectorField {
        c1: d1_t11.add(&d2_t12),
        c2: d1_t12.add(&d2_t22),
    }
}

/// Scalar divergence `d1 v1 + d2 v2`.
pub fn divergence(v: &VectorField, grid: &GridSpec) -> ScalarField {
    derivative(&v.c1, 0, grid).add(&derivative(&v.c2, 1, grid))
}

/// Scalar vorticity `d1 v2 - d2 v1`.
pub fn curl2d(v: &VectorField, grid: &GridSpec) -> ScalarField {
    derivative(&v.c2, 0, grid).sub(&derivative(&v.c1, 1, grid))
}

/// Laplacian multiplier `-|k|^2`.
pub fn laplacian(f: &ScalarField, grid: &GridSpec) -> ScalarField {
    f.require(Representation::Spectral, "laplacian");
    let ks = grid.wavenumbers();
    let mut out = f.clone();
    for ((i, j), z) in out.data.indexed_iter_mut() {
        *z *= -(ks[i] * ks[i] + ks[j] * ks[j]);
    }
    out
}

/// Inverse Laplacian: divide by `-|k|^2`, zero mode mapped to zero.
pub fn inverse_laplacian(f: &ScalarField, grid: &GridSpec) -> ScalarField {
    f.require(Representation::Spectral, "inverse_laplacian");
    let ks = grid.wavenumbers();
    let mut out = f.clone();
    for ((i, j), z) in out.data.indexed_iter_mut() {
        let k2 = ks[i] * ks[i] + ks[j] * ks[j];
        if k2 == 0.0 {
            *z = Complex64::new(0.0, 0.0);
        } else {
            *z /= -k2;
        }
    }
    out
}

/// Leray projection onto divergence-free fields:
/// `vhat - k (k . vhat)/|k|^2`, identity on the zero mode.
pub fn leray_project(v: &VectorField, grid: &GridSpec) -> VectorField {
    v.c1.require(Representation::Spectral, "leray_project");
    v.c2.require(Representation::Spectral, "leray_project");
    let ks = grid.wavenumbers();
    let mut out = v.clone();
    let n = grid.n;
    for i in 0..n {
        for j in 0..n {
            let (kx, ky) = (ks[i], ks[j]);
            let k2 = kx * kx + ky * ky;
            if k2 == 0.0 {
                continue;
            }
            let dot = kx * out.c1.data[[i, j]] + ky * out.c2.data[[i, j]];
            out.c1.data[[i, j]] -= kx * dot / k2;
            out.c2.data[[i, j]] -= ky * dot / k2;
        }
    }
    out
}

/// The structural multiplier `R = inv_laplacian(curl(div(.)))` applied to a
/// symmetric tensor; maps isotropic tensors to zero, and `t12 = cos x1` to
/// `cos x1` on the unit-frequency box.
pub fn riesz_r(t: &SymTensorField, grid: &GridSpec) -> ScalarField {
    let d = divergence_tensor(t, grid);
    inverse_laplacian(&curl2d(&d, grid), grid)
}

/// Velocity from vorticity: `u = grad^perp inv_laplacian(omega) + mean_u`,
/// `grad^perp = (-d2, d1)`. Errors if the vorticity carries a zero mode.
pub fn biot_savart(omega: &ScalarField, mean_u: (f64, f64), grid: &GridSpec) -> Result<VectorField> {
    omega.require(Representation::Spectral, "biot_savart");
    let n2 = (grid.n * grid.n) as f64;
    let mean_omega = omega.data[[0, 0]].norm() / n2;
    let scale = omega.l2_norm(grid);
    if mean_omega > 1e-10 * (1.0 + scale) {
        return Err(CoreError::Precondition(format!(
            "biot_savart needs mean-zero vorticity, got mean {mean_omega:.3e}"
        )));
    }
    let psi = inverse_laplacian(omega, grid);
    let mut u = VectorField {
        c1: derivative(&psi, 1, grid).scaled(-1.0),
        c2: derivative(&psi, 0, grid),
    };
    u.c1.data[[0, 0]] = Complex64::new(mean_u.0 * n2, 0.0);
    u.c2.data[[0, 0]] = Complex64::new(mean_u.1 * n2, 0.0);
    Ok(u)
}

/// Zero every mode outside the square dealiasing mask
/// `max(|m1|, |m2|) <= cutoff`.
pub fn dealias(f: &mut ScalarField, grid: &GridSpec) {
    f.require(Representation::Spectral, "dealias");
    for ((i, j), z) in f.data.indexed_iter_mut() {
        if !grid.retained(i, j) {
            *z = Complex64::new(0.0, 0.0);
        }
    }
}

pub fn dealias_vector(v: &mut VectorField, grid: &GridSpec) {
    dealias(&mut v.c1, grid);
    dealias(&mut v.c2, grid);
}

pub fn dealias_tensor(t: &mut SymTensorField, grid: &GridSpec) {
    dealias(&mut t.c11, grid);
    dealias(&mut t.c12, grid);
    dealias(&mut t.c22, grid);
}

/// Dealiased quadratic product: multiply on the grid, transform forward, mask.
///
/// For factors already band-limited to the mask this equals the exact Galerkin
/// projection of the product (aliased images of retained-mode products land
/// outside the mask), which is what keeps the discrete energy identities exact.
pub fn dealiased_product(
    a: &ScalarField,
    b: &ScalarField,
    grid: &GridSpec,
    fft: &Fft2d,
) -> ScalarField {
    let mut p = a.mul_real(b).to_spectral(fft);
    dealias(&mut p, grid);
    p
}

/// Dealiased conservative advection `P(div(u f)) = P(d1(u1 f) + d2(u2 f))`.
///
/// Equals `P(u . grad f)` whenever `u` is divergence-free, since the two forms
/// agree pointwise for trigonometric interpolants with `div u = 0`.
pub fn advect_scalar(
    u_real: &VectorField,
    f_real: &ScalarField,
    grid: &GridSpec,
    fft: &Fft2d,
) -> ScalarField {
    let p1 = dealiased_product(&u_real.c1, f_real, grid, fft);
    let p2 = dealiased_product(&u_real.c2, f_real, grid, fft);
    derivative(&p1, 0, grid).add(&derivative(&p2, 1, grid))
}

/// Mean value of the field, read off the spectral zero mode.
pub fn mean(f: &ScalarField, grid: &GridSpec) -> f64 {
    f.require(Representation::Spectral, "mean");
    let n2 = (grid.n * grid.n) as f64;
    f.data[[0, 0]].re / n2
}
