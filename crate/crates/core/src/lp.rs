//! Dyadic Littlewood-Paley analysis on the periodic grid.
//!
//! The partition of unity is built the telescoping way: a radial
//! $C^\infty$ cutoff $\chi$ equals 1 on $|\xi| \le 3/4$ and 0 on
//! $|\xi| \ge 4/3$, and the annulus bump is $\varphi(\xi) = \chi(\xi/2) -
//! \chi(\xi)$, supported on $3/4 \le |\xi| \le 8/3$. Then
//!
//! * $\chi(\xi) + \sum_{j \ge 0} \varphi(2^{-j}\xi) = 1$ for every $\xi$
//!   (nonhomogeneous flavor, low block $\Delta_{-1} = \chi(D)$),
//! * $\sum_{j \in Z} \varphi(2^{-j}\xi) = 1$ for $\xi \ne 0$ (homogeneous),
//!
//! exactly by telescoping, so the partition residual on the grid is pure
//! floating-point dust. Shells two apart have disjoint supports, and since at
//! most two consecutive bumps overlap, $1/2 \le \chi^2 + \sum \varphi^2 \le 1$
//! holds automatically.
//!
//! Besov norms are $\| 2^{js} \|\Delta_j f\|_{L^p} \|_{\ell^r}$ over the
//! shells; vector/tensor fields enter through the pointwise Euclidean /
//! Frobenius magnitude of their components (expressed here as per-component
//! multiplicity weights). Bony's decomposition splits a pointwise product as
//! $uv = T_u v + T_v u + R(u,v)$ with $T_u v = \sum_j S_{j-1}u\,\Delta_j v$
//! and the diagonal remainder over $|j - j'| \le 1$.

use crate::error::{CoreError, Result};
use crate::fft::Fft2d;
use crate::field::{lp_of_magnitude_sq, Representation, ScalarField, SymTensorField, VectorField};
use crate::grid::GridSpec;
use crate::ops;
use ndarray::Array2;

/// Lower edge of the annulus bump support.
const PHI_LO: f64 = 0.75;
/// Upper edge of the annulus bump support, `8/3`.
const PHI_HI: f64 = 8.0 / 3.0;
/// Upper edge of the low-frequency cutoff support, `4/3`.
const CHI_HI: f64 = 4.0 / 3.0;

/// `exp(-1/t)` continued by zero: the standard smooth one-sided mollifier.
fn bump_half(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, strictly increasing between.
fn smooth_step(t: f64) -> f64 {
    let a = bump_half(t);
    let b = bump_half(1.0 - t);
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        1.0
    } else {
        a / (a + b)
    }
}

/// Radial low-pass cutoff: 1 on `r <= 3/4`, 0 on `r >= 4/3`.
pub fn chi(r: f64) -> f64 {
    smooth_step((CHI_HI - r.abs()) / (CHI_HI - PHI_LO))
}

/// Annulus bump `phi(r) = chi(r/2) - chi(r)`, supported on `[3/4, 8/3]`.
pub fn phi(r: f64) -> f64 {
    chi(r.abs() / 2.0) - chi(r.abs())
}

/// Shell index bookkeeping for one grid: the dyadic blocks that can touch any
/// retained nonzero wavenumber.
#[derive(Debug, Clone, Copy)]
pub struct DyadicPartition {
    pub grid: GridSpec,
    /// Lowest shell with support on the grid (relevant homogeneously).
    pub j_min: i32,
    /// Highest shell with support on the grid.
    pub j_max: i32,
}

impl DyadicPartition {
    pub fn new(grid: &GridSpec) -> Result<Self> {
        let k_lo = grid.k0();
        let k_hi = grid.k0() * (grid.n as f64 / 2.0) * 2.0_f64.sqrt();
        // phi(2^-j k) != 0 needs 3/4 < 2^-j k < 8/3
        let j_min = (k_lo.log2() - PHI_HI.log2()).ceil() as i32;
        let j_max = (k_hi.log2() - PHI_LO.log2()).floor() as i32;
        if j_max - j_min + 1 < 3 {
            return Err(CoreError::InvalidSpec(format!(
                "grid too coarse for a dyadic partition: only {} shell(s) fit",
                (j_max - j_min + 1).max(0)
            )));
        }
        Ok(DyadicPartition {
            grid: *grid,
            j_min,
            j_max,
        })
    }

    /// Shells of the homogeneous decomposition, low to high.
    pub fn homogeneous_shells(&self) -> Vec<i32> {
        (self.j_min..=self.j_max).collect()
    }

    /// Shells of the nonhomogeneous decomposition: the low block `j = -1`
    /// (the `chi` cutoff) followed by `j = 0, 1, ...`.
    pub fn nonhomogeneous_shells(&self) -> Vec<i32> {
        (-1..=self.j_max.max(0)).collect()
    }

    /// Multiplier value of block `j` at radius `k`.
    pub fn weight(&self, j: i32, k: f64, homogeneous: bool) -> f64 {
        if !homogeneous && j == -1 {
            chi(k)
        } else {
            debug_assert!(homogeneous || j >= 0);
            phi(k / 2.0_f64.powi(j))
        }
    }
}

/// Spectral multiplier extraction of one dyadic block. The homogeneous flavor
/// zeroes the mean; `j = -1` nonhomogeneously is the `chi` low block. Indices
/// below the decomposition's range give a zero field, not an error: those
/// shells simply carry no grid content.
pub fn dyadic_block(
    f: &ScalarField,
    j: i32,
    homogeneous: bool,
    part: &DyadicPartition,
) -> ScalarField {
    f.require(Representation::Spectral, "dyadic_block");
    if !homogeneous && j < -1 {
        return ScalarField::zeros(f.n(), Representation::Spectral);
    }
    let grid = &part.grid;
    let ks = grid.wavenumbers();
    let mut out = f.clone();
    for ((i, jj), z) in out.data.indexed_iter_mut() {
        let k = (ks[i] * ks[i] + ks[jj] * ks[jj]).sqrt();
        let w = if homogeneous && k == 0.0 {
            0.0
        } else {
            part.weight(j, k, homogeneous)
        };
        *z *= w;
    }
    out
}

/// Largest deviation of the partition sum from 1 over retained grid modes:
/// returns `(nonhomogeneous, homogeneous)`; the homogeneous sum skips the
/// zero mode.
pub fn partition_residuals(part: &DyadicPartition) -> (f64, f64) {
    let grid = &part.grid;
    let ks = grid.wavenumbers();
    let mut worst_n: f64 = 0.0;
    let mut worst_h: f64 = 0.0;
    for i in 0..grid.n {
        for j in 0..grid.n {
            if !grid.retained(i, j) {
                continue;
            }
            let k = (ks[i] * ks[i] + ks[j] * ks[j]).sqrt();
            let mut sum_n = chi(k);
            for jj in 0..=part.j_max {
                sum_n += phi(k / 2.0_f64.powi(jj));
            }
            worst_n = worst_n.max((sum_n - 1.0).abs());
            if k > 0.0 {
                let mut sum_h = 0.0;
                for jj in part.j_min..=part.j_max {
                    sum_h += phi(k / 2.0_f64.powi(jj));
                }
                worst_h = worst_h.max((sum_h - 1.0).abs());
            }
        }
    }
    (worst_n, worst_h)
}

/// A multi-component field for joint norms: spectral components with their
/// pointwise multiplicity weights (1 for vector components, 2 for a symmetric
/// tensor's off-diagonal).
pub type WeightedParts<'a> = &'a [(&'a ScalarField, f64)];

pub fn vector_parts(v: &VectorField) -> [(&ScalarField, f64); 2] {
    [(&v.c1, 1.0), (&v.c2, 1.0)]
}

pub fn tensor_parts(t: &SymTensorField) -> [(&ScalarField, f64); 3] {
    [(&t.c11, 1.0), (&t.c12, 2.0), (&t.c22, 1.0)]
}

/// Squared L2 norms of every shell in one pass over the spectra
/// (Parseval with the block multipliers applied mode by mode). Index 0 of the
/// result is the first shell of the corresponding flavor.
pub fn shell_l2_profile(parts: WeightedParts, homogeneous: bool, part: &DyadicPartition) -> Vec<f64> {
    let shells = if homogeneous {
        part.homogeneous_shells()
    } else {
        part.nonhomogeneous_shells()
    };
    let grid = &part.grid;
    let ks = grid.wavenumbers();
    let n2 = (grid.n * grid.n) as f64;
    let norm = grid.box_length * grid.box_length / (n2 * n2);
    let mut out = vec![0.0; shells.len()];
    for (f, mult) in parts {
        f.require(Representation::Spectral, "shell_l2_profile");
        for ((i, j), z) in f.data.indexed_iter() {
            let k = (ks[i] * ks[i] + ks[j] * ks[j]).sqrt();
            if homogeneous && k == 0.0 {
                continue;
            }
            let m2 = z.norm_sqr();
            if m2 == 0.0 {
                continue;
            }
            for (idx, &jj) in shells.iter().enumerate() {
                let w = part.weight(jj, k, homogeneous);
                if w != 0.0 {
                    out[idx] += mult * (w * w) * m2 * norm;
                }
            }
        }
    }
    out
}

/// Lp norm of one block of a weighted multi-component field. `p = 2` stays in
/// spectral space; other `p` transform the block and use grid quadrature on
/// the pointwise joint magnitude.
pub fn shell_lp_norm(
    parts: WeightedParts,
    j: i32,
    homogeneous: bool,
    p: f64,
    part: &DyadicPartition,
    fft: &Fft2d,
) -> f64 {
    let grid = &part.grid;
    if p == 2.0 {
        let mut sq = 0.0;
        for (f, mult) in parts {
            let b = dyadic_block(f, j, homogeneous, part);
            sq += mult * b.spectral_moment(grid, |_| 1.0);
        }
        return sq.sqrt();
    }
    let blocks: Vec<Array2<f64>> = parts
        .iter()
        .map(|(f, _)| {
            dyadic_block(f, j, homogeneous, part)
                .to_real(fft)
                .data
                .mapv(|z| z.re)
        })
        .collect();
    let n = grid.n;
    let mags = (0..n * n).map(|idx| {
        let (i, jj) = (idx / n, idx % n);
        blocks
            .iter()
            .zip(parts.iter())
            .map(|(b, (_, mult))| mult * b[[i, jj]] * b[[i, jj]])
            .sum::<f64>()
    });
    lp_of_magnitude_sq(mags, p, grid)
}

/// Besov norm `|| 2^{js} ||Delta_j f||_p ||_{l^r}` of a weighted
/// multi-component field; `p` and `r` may be `f64::INFINITY`.
pub fn besov_norm(
    parts: WeightedParts,
    s: f64,
    p: f64,
    r: f64,
    homogeneous: bool,
    part: &DyadicPartition,
    fft: &Fft2d,
) -> f64 {
    assert!(p >= 1.0 && r >= 1.0, "Besov indices need p, r >= 1");
    let shells = if homogeneous {
        part.homogeneous_shells()
    } else {
        part.nonhomogeneous_shells()
    };
    let mut acc: f64 = 0.0;
    for &j in &shells {
        let bnorm = shell_lp_norm(parts, j, homogeneous, p, part, fft);
        let term = (s * j as f64).exp2() * bnorm;
        if r.is_infinite() {
            acc = acc.max(term);
        } else {
            acc += term.powf(r);
        }
    }
    if r.is_infinite() {
        acc
    } else {
        acc.powf(1.0 / r)
    }
}

/// `sup_j 2^{-sigma j} ||Delta_j (u, tau)||_{L^2}` over homogeneous shells:
/// the negative-regularity envelope that controls the decay framework.
pub fn negative_besov_sup(
    u: &VectorField,
    tau: &SymTensorField,
    sigma: f64,
    part: &DyadicPartition,
) -> f64 {
    let parts = [
        (&u.c1, 1.0),
        (&u.c2, 1.0),
        (&tau.c11, 1.0),
        (&tau.c12, 2.0),
        (&tau.c22, 1.0),
    ];
    let profile = shell_l2_profile(&parts, true, part);
    let shells = part.homogeneous_shells();
    shells
        .iter()
        .zip(profile.iter())
        .map(|(&j, &sq)| (-sigma * j as f64).exp2() * sq.sqrt())
        .fold(0.0, f64::max)
}

/// The three Bony pieces of a pointwise product, in real representation:
/// `uv = t_uv + t_vu + remainder` exactly on the grid.
pub struct BonyDecomposition {
    pub t_uv: ScalarField,
    pub t_vu: ScalarField,
    pub remainder: ScalarField,
}

/// Nonhomogeneous Bony paraproduct split of `u * v`.
pub fn bony_paraproduct(
    u: &ScalarField,
    v: &ScalarField,
    part: &DyadicPartition,
    fft: &Fft2d,
) -> BonyDecomposition {
    u.require(Representation::Spectral, "bony_paraproduct");
    v.require(Representation::Spectral, "bony_paraproduct");
    let shells = part.nonhomogeneous_shells();
    let blocks_u: Vec<ScalarField> = shells
        .iter()
        .map(|&j| dyadic_block(u, j, false, part).to_real(fft))
        .collect();
    let blocks_v: Vec<ScalarField> = shells
        .iter()
        .map(|&j| dyadic_block(v, j, false, part).to_real(fft))
        .collect();
    let n = part.grid.n;
    let zero = || ScalarField::zeros(n, Representation::Real);

    // running partial sums S_{j-1} = sum of blocks strictly below j-1
    let mut t_uv = zero();
    let mut t_vu = zero();
    let mut remainder = zero();
    let mut s_u = zero();
    let mut s_v = zero();
    for (idx, _) in shells.iter().enumerate() {
        // S_{j-1} contains blocks with index <= idx - 2
        if idx >= 2 {
            s_u.axpy(1.0, &blocks_u[idx - 2]);
            s_v.axpy(1.0, &blocks_v[idx - 2]);
        }
        t_uv.axpy(1.0, &s_u.mul_real(&blocks_v[idx]));
        t_vu.axpy(1.0, &s_v.mul_real(&blocks_u[idx]));
        let mut near = blocks_u[idx].clone();
        if idx >= 1 {
            near.axpy(1.0, &blocks_u[idx - 1]);
        }
        if idx + 1 < shells.len() {
            near.axpy(1.0, &blocks_u[idx + 1]);
        }
        remainder.axpy(1.0, &near.mul_real(&blocks_v[idx]));
    }
    BonyDecomposition {
        t_uv,
        t_vu,
        remainder,
    }
}

/// First Bony piece `T_u v = sum_j S_{j-1}u Delta_j v` on its own.
pub fn paraproduct(
    u: &ScalarField,
    v: &ScalarField,
    part: &DyadicPartition,
    fft: &Fft2d,
) -> ScalarField {
    bony_paraproduct(u, v, part, fft).t_uv
}

/// Diagonal Bony remainder `R(u, v) = sum_{|j-j'|<=1} Delta_j u Delta_{j'} v`.
pub fn bony_remainder(
    u: &ScalarField,
    v: &ScalarField,
    part: &DyadicPartition,
    fft: &Fft2d,
) -> ScalarField {
    bony_paraproduct(u, v, part, fft).remainder
}

/// Commutator `[R, u.grad] tau = R(P(u.grad tau)) - P(u.grad (R tau))`, with
/// every advection in the dealiased conservative form. Spectral output.
/// Rejects velocities whose divergence is not zero at roundoff scale, since
/// the conservative advection form assumes incompressibility.
pub fn riesz_commutator(
    u: &VectorField,
    tau: &SymTensorField,
    grid: &GridSpec,
    fft: &Fft2d,
) -> Result<ScalarField> {
    let u_spec = u.to_spectral(fft);
    let div_u = ops::divergence(&u_spec, grid).l2_norm(grid);
    let grad_u = u_spec.spectral_moment(grid, |k2| k2).sqrt();
    if div_u > 1e-10 * grad_u.max(f64::MIN_POSITIVE) {
        return Err(CoreError::Precondition(format!(
            "riesz_commutator needs div u = 0; got |div u| = {:.3e} vs |grad u| = {:.3e}",
            div_u, grad_u
        )));
    }
    let u_real = u.to_real(fft);
    let tau_spec = tau.to_spectral(fft);
    let tau_real = tau_spec.to_real(fft);
    let adv = SymTensorField {
        c11: ops::advect_scalar(&u_real, &tau_real.c11, grid, fft),
        c12: ops::advect_scalar(&u_real, &tau_real.c12, grid, fft),
        c22: ops::advect_scalar(&u_real, &tau_real.c22, grid, fft),
    };
    let r_of_adv = ops::riesz_r(&adv, grid);
    let r_tau_real = ops::riesz_r(&tau_spec, grid).to_real(fft);
    let adv_of_r = ops::advect_scalar(&u_real, &r_tau_real, grid, fft);
    Ok(r_of_adv.sub(&adv_of_r))
}

/// `sum_j ||Delta_j f||_{L^inf}` over nonhomogeneous shells; controls the
/// sup norm from above and feeds the stress integrability diagnostics.
pub fn b0_infty1_norm(parts: WeightedParts, part: &DyadicPartition, fft: &Fft2d) -> f64 {
    besov_norm(parts, 0.0, f64::INFINITY, 1.0, false, part, fft)
}

/// Ratio `||[R, u.grad]tau||_p / (||grad u||_p (||tau||_q + ||tau||_{B^0_{inf,1}}))`
/// with the conjugate pairing `q = p/(p-1)` for `p < 2` and `q = p` otherwise.
/// Scale-invariant in both `u` and `tau`.
pub fn commutator_lp_ratio(
    u: &VectorField,
    tau: &SymTensorField,
    p: f64,
    grid: &GridSpec,
    fft: &Fft2d,
    part: &DyadicPartition,
) -> Result<f64> {
    assert!(p > 1.0 && p.is_finite());
    let q = if p < 2.0 { p / (p - 1.0) } else { p };
    let comm = riesz_commutator(u, tau, grid, fft)?.to_real(fft);
    let lhs = comm.lp_norm(p, grid);

    let us = u.to_spectral(fft);
    let g11 = ops::derivative(&us.c1, 0, grid).to_real(fft);
    let g12 = ops::derivative(&us.c1, 1, grid).to_real(fft);
    let g21 = ops::derivative(&us.c2, 0, grid).to_real(fft);
    let g22 = ops::derivative(&us.c2, 1, grid).to_real(fft);
    let n = grid.n;
    let mags = (0..n * n).map(|idx| {
        let ij = (idx / n, idx % n);
        g11.data[ij].re.powi(2)
            + g12.data[ij].re.powi(2)
            + g21.data[ij].re.powi(2)
            + g22.data[ij].re.powi(2)
    });
    let grad_u_p = lp_of_magnitude_sq(mags, p, grid);

    let tau_real = tau.to_real(fft);
    let tau_q = tau_real.lp_norm(q, grid);
    let tau_spec = tau.to_spectral(fft);
    let parts = tensor_parts(&tau_spec);
    let tau_b = b0_infty1_norm(&parts, part, fft);
    Ok(lhs / (grad_u_p * (tau_q + tau_b)))
}
