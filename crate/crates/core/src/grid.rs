//! Uniform periodic grid on the square torus `[0, L)^2`.
//!
//! Spectral layout follows the usual FFT ordering: along each axis the index
//! `i` carries the signed integer mode `m = i` for `i < n/2` and `m = i - n`
//! otherwise, so `i = n/2` is the Nyquist mode `-n/2`. Physical wavenumbers
//! are `k = (2 pi / L) m`.

use crate::error::{CoreError, Result};

/// Default retained fraction of the one-sided spectrum (the 2/3 rule).
pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

/// Grid resolution, box size, and dealiasing cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Points per dimension; even, at least 16, a power of two in practice.
    pub n: usize,
    /// Side length `L` of the periodic box.
    pub box_length: f64,
    /// Fraction of `n/2` retained by the dealiasing mask, in `(0, 1]`.
    pub dealias_fraction: f64,
}

impl GridSpec {
    /// Grid with the default 2/3-rule dealiasing.
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        Self::with_dealias_fraction(n, box_length, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias_fraction(n: usize, box_length: f64, dealias_fraction: f64) -> Result<Self> {
        let g = GridSpec {
            n,
            box_length,
            dealias_fraction,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 16 || self.n % 2 != 0 {
            return Err(CoreError::InvalidSpec(format!(
                "grid n must be even and >= 16, got {}",
                self.n
            )));
        }
        if !(self.box_length > 0.0) || !self.box_length.is_finite() {
            return Err(CoreError::InvalidSpec(format!(
                "box_length must be positive and finite, got {}",
                self.box_length
            )));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(CoreError::InvalidSpec(format!(
                "dealias_fraction must lie in (0, 1], got {}",
                self.dealias_fraction
            )));
        }
        if self.dealias_cutoff() < 4 {
            return Err(CoreError::InvalidSpec(format!(
                "dealias cutoff floor({} * {}/2) = {} retains fewer than 4 modes per dimension",
                self.dealias_fraction,
                self.n,
                self.dealias_cutoff()
            )));
        }
        Ok(())
    }

    /// Grid spacing `L/n`.
    pub fn dx(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Quadrature weight of one grid cell, `(L/n)^2`.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dx()
    }

    /// Fundamental wavenumber `2 pi / L`.
    pub fn k0(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.box_length
    }

    /// Signed integer mode for FFT index `i`.
    #[inline]
    pub fn mode(&self, i: usize) -> i64 {
        debug_assert!(i < self.n);
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Physical wavenumber for FFT index `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        self.k0() * self.mode(i) as f64
    }

    /// Largest retained signed mode per dimension, `floor(fraction * n/2)`.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.dealias_fraction * (self.n as f64) / 2.0).floor() as i64
    }

    /// True if the FFT index pair survives the square dealiasing mask
    /// `max(|m1|, |m2|) <= cutoff`.
    #[inline]
    pub fn retained(&self, i: usize, j: usize) -> bool {
        let c = self.dealias_cutoff();
        self.mode(i).abs() <= c && self.mode(j).abs() <= c
    }

    /// Per-axis table of signed modes in FFT order.
    pub fn modes(&self) -> Vec<i64> {
        (0..self.n).map(|i| self.mode(i)).collect()
    }

    /// Per-axis table of physical wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// Physical coordinate of grid point `i` along one axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.dx() * i as f64
    }
}
