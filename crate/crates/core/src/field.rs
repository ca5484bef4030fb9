//! Field containers: scalar, velocity vector, and symmetric 2x2 tensor.
//!
//! Every field stores an `n x n` complex array plus an explicit
//! [`Representation`] tag; conversions go through [`ScalarField::to_real`] /
//! [`ScalarField::to_spectral`] and are never implicit. Axis 0 of the array is
//! the `x1` coordinate, axis 1 is `x2`: `data[[i, j]] = f(x1_i, x2_j)` in real
//! space, and `data[[m1, m2]]` (FFT mode ordering) in spectral space.
//!
//! Real-space fields keep their imaginary parts at zero; products and
//! quadrature norms read only the real part.

use crate::error::Result;
use crate::fft::Fft2d;
use crate::grid::GridSpec;
use ndarray::Array2;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Real,
    Spectral,
}

impl std::fmt::Display for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Representation::Real => write!(f, "real"),
            Representation::Spectral => write!(f, "spectral"),
        }
    }
}

/// One scalar component on the grid.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub data: Array2<Complex64>,
    pub repr: Representation,
}

impl ScalarField {
    pub fn zeros(n: usize, repr: Representation) -> Self {
        ScalarField {
            data: Array2::zeros((n, n)),
            repr,
        }
    }

    /// Sample a real-valued function of `(x1, x2)` on the grid.
    pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let data = Array2::from_shape_fn((grid.n, grid.n), |(i, j)| {
            Complex64::new(f(grid.coord(i), grid.coord(j)), 0.0)
        });
        ScalarField {
            data,
            repr: Representation::Real,
        }
    }

    pub fn constant(grid: &GridSpec, c: f64) -> Self {
        ScalarField {
            data: Array2::from_elem((grid.n, grid.n), Complex64::new(c, 0.0)),
            repr: Representation::Real,
        }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    /// Panics unless the field is in the expected representation. Ops state
    /// their representation preconditions in terms of this check.
    #[track_caller]
    pub fn require(&self, repr: Representation, what: &str) {
        assert!(
            self.repr == repr,
            "representation mismatch: {what} expects a {repr} field, got {}",
            self.repr
        );
    }

    pub fn to_spectral(&self, fft: &Fft2d) -> Self {
        match self.repr {
            Representation::Spectral => self.clone(),
            Representation::Real => {
                let mut data = self.data.clone();
                fft.forward(&mut data);
                ScalarField {
                    data,
                    repr: Representation::Spectral,
                }
            }
        }
    }

    pub fn to_real(&self, fft: &Fft2d) -> Self {
        match self.repr {
            Representation::Real => self.clone(),
            Representation::Spectral => {
                let mut data = self.data.clone();
                fft.inverse(&mut data);
                // the inverse of a Hermitian-symmetric spectrum is real up to
                // roundoff; drop the imaginary dust so products stay exact
                for z in data.iter_mut() {
                    z.im = 0.0;
                }
                ScalarField {
                    data,
                    repr: Representation::Real,
                }
            }
        }
    }

    /// Pointwise product of two real-representation fields.
    pub fn mul_real(&self, other: &Self) -> Self {
        self.require(Representation::Real, "mul_real");
        other.require(Representation::Real, "mul_real");
        let mut data = self.data.clone();
        for (z, w) in data.iter_mut().zip(other.data.iter()) {
            *z = Complex64::new(z.re * w.re, 0.0);
        }
        ScalarField {
            data,
            repr: Representation::Real,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        ScalarField {
            data: self.data.mapv(|z| z * c),
            repr: self.repr,
        }
    }

    /// `self += c * other`; both fields must share a representation.
    pub fn axpy(&mut self, c: f64, other: &Self) {
        assert_eq!(self.repr, other.repr, "axpy mixes representations");
        for (z, w) in self.data.iter_mut().zip(other.data.iter()) {
            *z += c * w;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Largest `|Re f|` over grid points (real representation).
    pub fn max_abs(&self) -> f64 {
        self.require(Representation::Real, "max_abs");
        self.data.iter().map(|z| z.re.abs()).fold(0.0, f64::max)
    }

    /// Weighted spectral sum `(L^2/n^4) * sum w(|k|^2) |fhat|^2`.
    ///
    /// With `w = 1` this is the squared L2 norm (Parseval for the
    /// unnormalized-forward convention); `w = |k|^2` gives the squared L2 norm
    /// of the gradient.
    pub fn spectral_moment(&self, grid: &GridSpec, w: impl Fn(f64) -> f64) -> f64 {
        self.require(Representation::Spectral, "spectral_moment");
        let ks = grid.wavenumbers();
        let n = self.n();
        let mut sum = 0.0;
        for i in 0..n {
            let kx2 = ks[i] * ks[i];
            for j in 0..n {
                let k2 = kx2 + ks[j] * ks[j];
                sum += w(k2) * self.data[[i, j]].norm_sqr();
            }
        }
        let n2 = (grid.n * grid.n) as f64;
        sum * grid.box_length * grid.box_length / (n2 * n2)
    }

    /// L2 norm in either representation (spectral Parseval or exact grid
    /// quadrature; the two agree to roundoff).
    pub fn l2_norm(&self, grid: &GridSpec) -> f64 {
        match self.repr {
            Representation::Spectral => self.spectral_moment(grid, |_| 1.0).sqrt(),
            Representation::Real => {
                let s: f64 = self.data.iter().map(|z| z.re * z.re).sum();
                (s * grid.cell_area()).sqrt()
            }
        }
    }

    /// Lp quadrature norm on the grid (real representation); `p` may be
    /// `f64::INFINITY`.
    pub fn lp_norm(&self, p: f64, grid: &GridSpec) -> f64 {
        self.require(Representation::Real, "lp_norm");
        lp_of_magnitude_sq(self.data.iter().map(|z| z.re * z.re), p, grid)
    }
}

/// `(sum |f|^p dx)^(1/p)` from an iterator over squared pointwise magnitudes.
pub(crate) fn lp_of_magnitude_sq(
    mag_sq: impl Iterator<Item = f64>,
    p: f64,
    grid: &GridSpec,
) -> f64 {
    assert!(p >= 1.0, "lp_norm needs p >= 1, got {p}");
    if p.is_infinite() {
        return mag_sq.fold(0.0, f64::max).sqrt();
    }
    let sum: f64 = mag_sq.map(|m2| m2.powf(p / 2.0)).sum();
    (sum * grid.cell_area()).powf(1.0 / p)
}

/// Velocity field with components `u1`, `u2`.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub c1: ScalarField,
    pub c2: ScalarField,
}

/// Symmetric stress tensor with independent components `t11`, `t12`, `t22`.
#[derive(Debug, Clone)]
pub struct SymTensorField {
    pub c11: ScalarField,
    pub c12: ScalarField,
    pub c22: ScalarField,
}

impl VectorField {
    pub fn zeros(n: usize, repr: Representation) -> Self {
        VectorField {
            c1: ScalarField::zeros(n, repr),
            c2: ScalarField::zeros(n, repr),
        }
    }

    pub fn components(&self) -> [&ScalarField; 2] {
        [&self.c1, &self.c2]
    }

    pub fn repr(&self) -> Representation {
        debug_assert_eq!(self.c1.repr, self.c2.repr);
        self.c1.repr
    }

    #[track_caller]
    pub fn require(&self, repr: Representation, what: &str) {
        self.c1.require(repr, what);
        self.c2.require(repr, what);
    }

    pub fn to_spectral(&self, fft: &Fft2d) -> Self {
        VectorField {
            c1: self.c1.to_spectral(fft),
            c2: self.c2.to_spectral(fft),
        }
    }

    pub fn to_real(&self, fft: &Fft2d) -> Self {
        VectorField {
            c1: self.c1.to_real(fft),
            c2: self.c2.to_real(fft),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        VectorField {
            c1: self.c1.scaled(c),
            c2: self.c2.scaled(c),
        }
    }

    pub fn axpy(&mut self, c: f64, other: &Self) {
        self.c1.axpy(c, &other.c1);
        self.c2.axpy(c, &other.c2);
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Squared L2 norm summed over components (either representation).
    pub fn l2_norm_sq(&self, grid: &GridSpec) -> f64 {
        self.components()
            .iter()
            .map(|c| {
                let v = c.l2_norm(grid);
                v * v
            })
            .sum()
    }

    pub fn l2_norm(&self, grid: &GridSpec) -> f64 {
        self.l2_norm_sq(grid).sqrt()
    }

    /// Lp norm of the pointwise Euclidean magnitude (real representation).
    pub fn lp_norm(&self, p: f64, grid: &GridSpec) -> f64 {
        self.c1.require(Representation::Real, "lp_norm");
        self.c2.require(Representation::Real, "lp_norm");
        let mags = self
            .c1
            .data
            .iter()
            .zip(self.c2.data.iter())
            .map(|(a, b)| a.re * a.re + b.re * b.re);
        lp_of_magnitude_sq(mags, p, grid)
    }

    /// Largest pointwise magnitude (real representation).
    pub fn max_magnitude(&self, grid: &GridSpec) -> f64 {
        self.lp_norm(f64::INFINITY, grid)
    }

    /// Sum of component spectral moments; see [`ScalarField::spectral_moment`].
    pub fn spectral_moment(&self, grid: &GridSpec, w: impl Fn(f64) -> f64 + Copy) -> f64 {
        self.components()
            .iter()
            .map(|c| c.spectral_moment(grid, w))
            .sum()
    }
}

impl SymTensorField {
    pub fn zeros(n: usize, repr: Representation) -> Self {
        SymTensorField {
            c11: ScalarField::zeros(n, repr),
            c12: ScalarField::zeros(n, repr),
            c22: ScalarField::zeros(n, repr),
        }
    }

    /// Independent components with their Frobenius multiplicities
    /// (the off-diagonal appears twice in the full 2x2 matrix).
    pub fn components(&self) -> [(&ScalarField, f64); 3] {
        [(&self.c11, 1.0), (&self.c12, 2.0), (&self.c22, 1.0)]
    }

    pub fn repr(&self) -> Representation {
        debug_assert_eq!(self.c11.repr, self.c12.repr);
        debug_assert_eq!(self.c11.repr, self.c22.repr);
        self.c11.repr
    }

    #[track_caller]
    pub fn require(&self, repr: Representation, what: &str) {
        self.c11.require(repr, what);
        self.c12.require(repr, what);
        self.c22.require(repr, what);
    }

    pub fn to_spectral(&self, fft: &Fft2d) -> Self {
        SymTensorField {
            c11: self.c11.to_spectral(fft),
            c12: self.c12.to_spectral(fft),
            c22: self.c22.to_spectral(fft),
        }
    }

    pub fn to_real(&self, fft: &Fft2d) -> Self {
        SymTensorField {
            c11: self.c11.to_real(fft),
            c12: self.c12.to_real(fft),
            c22: self.c22.to_real(fft),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        SymTensorField {
            c11: self.c11.scaled(c),
            c12: self.c12.scaled(c),
            c22: self.c22.scaled(c),
        }
    }

    pub fn axpy(&mut self, c: f64, other: &Self) {
        self.c11.axpy(c, &other.c11);
        self.c12.axpy(c, &other.c12);
        self.c22.axpy(c, &other.c22);
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Squared L2 norm of the full matrix field (Frobenius pointwise).
    pub fn l2_norm_sq(&self, grid: &GridSpec) -> f64 {
        self.components()
            .iter()
            .map(|(c, w)| {
                let v = c.l2_norm(grid);
                w * v * v
            })
            .sum()
    }

    pub fn l2_norm(&self, grid: &GridSpec) -> f64 {
        self.l2_norm_sq(grid).sqrt()
    }

    /// Lp norm of the pointwise Frobenius magnitude (real representation).
    pub fn lp_norm(&self, p: f64, grid: &GridSpec) -> f64 {
        for (c, _) in self.components() {
            c.require(Representation::Real, "lp_norm");
        }
        let mags = self
            .c11
            .data
            .iter()
            .zip(self.c12.data.iter())
            .zip(self.c22.data.iter())
            .map(|((a, b), c)| a.re * a.re + 2.0 * b.re * b.re + c.re * c.re);
        lp_of_magnitude_sq(mags, p, grid)
    }

    /// Largest pointwise Frobenius magnitude (real representation).
    pub fn max_magnitude(&self, grid: &GridSpec) -> f64 {
        self.lp_norm(f64::INFINITY, grid)
    }

    /// Frobenius-weighted sum of component spectral moments.
    pub fn spectral_moment(&self, grid: &GridSpec, w: impl Fn(f64) -> f64 + Copy) -> f64 {
        self.components()
            .iter()
            .map(|(c, mult)| mult * c.spectral_moment(grid, w))
            .sum()
    }
}

/// Check that all spectral content respects Hermitian symmetry, i.e. that the
/// field is real-valued; returns the largest asymmetry found.
pub fn hermitian_defect(f: &ScalarField, grid: &GridSpec) -> Result<f64> {
    f.require(Representation::Spectral, "hermitian_defect");
    let n = grid.n;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let ic = (n - i) % n;
            let jc = (n - j) % n;
            let d = (f.data[[i, j]] - f.data[[ic, jc]].conj()).norm();
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

/// Real L2 pairing of two real-valued fields, evaluated in spectral space:
/// `(L^2/n^4) sum Re(f conj(g))` equals the integral of the pointwise product.
pub fn pair_scalar(f: &ScalarField, g: &ScalarField, grid: &GridSpec) -> f64 {
    f.require(Representation::Spectral, "pair_scalar");
    g.require(Representation::Spectral, "pair_scalar");
    let n2 = (grid.n * grid.n) as f64;
    let norm = grid.box_length * grid.box_length / (n2 * n2);
    f.data
        .iter()
        .zip(g.data.iter())
        .map(|(a, b)| (a * b.conj()).re)
        .sum::<f64>()
        * norm
}

/// Euclidean pairing of vector fields.
pub fn pair_vector(a: &VectorField, b: &VectorField, grid: &GridSpec) -> f64 {
    pair_scalar(&a.c1, &b.c1, grid) + pair_scalar(&a.c2, &b.c2, grid)
}

/// Frobenius pairing of symmetric tensor fields (off-diagonal counted twice).
pub fn pair_tensor(a: &SymTensorField, b: &SymTensorField, grid: &GridSpec) -> f64 {
    pair_scalar(&a.c11, &b.c11, grid)
        + 2.0 * pair_scalar(&a.c12, &b.c12, grid)
        + pair_scalar(&a.c22, &b.c22, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, l: f64) -> GridSpec {
        GridSpec::new(n, l).unwrap()
    }

    #[test]
    fn parseval_matches_quadrature() {
        let g = grid(32, 2.0 * std::f64::consts::PI);
        let fft = Fft2d::new(g.n);
        let f = ScalarField::from_fn(&g, |x, y| (x.sin() + 0.3 * (2.0 * y).cos()) * 0.7);
        let real_l2 = f.l2_norm(&g);
        let spec_l2 = f.to_spectral(&fft).l2_norm(&g);
        assert!((real_l2 - spec_l2).abs() < 1e-12 * real_l2.max(1.0));
    }

    #[test]
    fn lp_norm_examples() {
        // constant c has ||f||_p = |c| L^(2/p)
        let g = grid(16, 3.0);
        let f = ScalarField::constant(&g, -2.0);
        for p in [1.0, 2.0, 4.0] {
            let expect = 2.0 * 9.0f64.powf(1.0 / p);
            assert!((f.lp_norm(p, &g) - expect).abs() < 1e-12);
        }
        assert!((f.lp_norm(f64::INFINITY, &g) - 2.0).abs() < 1e-15);

        // sin(x1) on L = 2 pi: ||f||_2 = sqrt(2 pi^2), sup-norm 1 on this grid
        let g = grid(128, 2.0 * std::f64::consts::PI);
        let f = ScalarField::from_fn(&g, |x, _| x.sin());
        let expect = (2.0 * std::f64::consts::PI.powi(2)).sqrt();
        assert!((f.lp_norm(2.0, &g) - expect).abs() < 1e-12);
        assert!((f.lp_norm(f64::INFINITY, &g) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn tensor_frobenius_counts_offdiagonal_twice() {
        let g = grid(16, 1.0);
        let mut t = SymTensorField::zeros(g.n, Representation::Real);
        t.c12 = ScalarField::constant(&g, 1.0);
        // |tau|_F = sqrt(2) pointwise, so the L2 norm over the unit box is sqrt(2)
        assert!((t.l2_norm(&g) - 2.0f64.sqrt()).abs() < 1e-14);
        assert!((t.lp_norm(f64::INFINITY, &g) - 2.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn real_fields_have_hermitian_spectra() {
        let g = grid(32, 1.0);
        let fft = Fft2d::new(g.n);
        let f = ScalarField::from_fn(&g, |x, y| (13.0 * x).sin() * (4.0 * y).cos() + x * 0.0);
        let s = f.to_spectral(&fft);
        assert!(hermitian_defect(&s, &g).unwrap() < 1e-9);
    }
}
