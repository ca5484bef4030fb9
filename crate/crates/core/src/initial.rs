//! Named initial-data generators.
//!
//! Each generator produces a valid [`State`] (spectral fields, divergence-free
//! velocity, dealiased) from a small set of parameters, so experiments can be
//! described entirely by a name plus numbers. Localized generators keep the
//! field magnitude at the box boundary below `1e-12` times the amplitude, which
//! makes periodic data a faithful stand-in for whole-plane data.

use ndarray::Array2;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::TAU;

use crate::error::{CoreError, Result};
use crate::fft::Fft2d;
use crate::field::{Representation, ScalarField, SymTensorField, VectorField};
use crate::grid::GridSpec;
use crate::model::State;
use crate::ops;

/// The closed set of generator names accepted by run configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// Taylor-Green cellular flow, zero stress.
    TaylorGreen,
    /// Gaussian stream function vortex, zero stress.
    LocalizedVortex,
    /// Mean-free localized isotropic stress, zero velocity.
    LocalizedIsotropicTau,
    /// Random phases with unit spectral modulus on a low-frequency band,
    /// normalized so the joint H1 norm equals the amplitude.
    RandomBand,
    /// Single divergence-free cosine mode, zero stress.
    SingleMode,
    /// Spatially constant isotropic stress, zero velocity.
    ConstantTau,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 6] = [
        GeneratorKind::TaylorGreen,
        GeneratorKind::LocalizedVortex,
        GeneratorKind::LocalizedIsotropicTau,
        GeneratorKind::RandomBand,
        GeneratorKind::SingleMode,
        GeneratorKind::ConstantTau,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::TaylorGreen => "taylor_green",
            GeneratorKind::LocalizedVortex => "localized_vortex",
            GeneratorKind::LocalizedIsotropicTau => "localized_isotropic_tau",
            GeneratorKind::RandomBand => "random_band",
            GeneratorKind::SingleMode => "single_mode",
            GeneratorKind::ConstantTau => "constant_tau",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                CoreError::InvalidSpec(format!(
                    "unknown generator '{s}'; expected one of {}",
                    Self::ALL.map(|k| k.name()).join(", ")
                ))
            })
    }
}

/// Parameters for [`generate`]. Not every field is read by every kind; the
/// per-kind meaning is documented on [`GeneratorKind`].
#[derive(Debug, Clone, Copy)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Overall field scale. For `random_band` this is the exact joint H1 norm
    /// of the generated state; for `constant_tau` it is the diagonal value.
    pub amplitude: f64,
    /// Gaussian width of the localized profiles, in box units.
    pub width: f64,
    /// Integer mode: the wavevector for `single_mode`, and `(band, _)` for
    /// `random_band` where modes with `0 < |m|^2 <= band^2` are populated.
    pub mode: (i64, i64),
    /// Uniform multiplier applied to the finished state. Kept separate from
    /// `amplitude` so parameter sweeps can rescale without touching shape
    /// parameters.
    pub epsilon: f64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind) -> Self {
        GeneratorSpec {
            kind,
            amplitude: 1.0,
            width: 0.0,
            mode: (1, 0),
            epsilon: 1.0,
        }
    }

    fn validate(&self, grid: &GridSpec) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(CoreError::InvalidSpec(format!(
                "generator amplitude {} invalid",
                self.amplitude
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(CoreError::InvalidSpec(format!(
                "generator epsilon {} invalid",
                self.epsilon
            )));
        }
        match self.kind {
            GeneratorKind::LocalizedVortex | GeneratorKind::LocalizedIsotropicTau => {
                if !(self.width.is_finite() && self.width > 0.0) {
                    return Err(CoreError::InvalidSpec(format!(
                        "localized generator needs a positive width, got {}",
                        self.width
                    )));
                }
                // Fewer than four grid points across the core cannot represent
                // the profile.
                if self.width < 4.0 * grid.dx() {
                    return Err(CoreError::InvalidSpec(format!(
                        "width {} under-resolved: fewer than 4 grid points across it (dx = {})",
                        self.width,
                        grid.dx()
                    )));
                }
            }
            GeneratorKind::SingleMode => {
                let (m1, m2) = self.mode;
                let c = grid.dealias_cutoff();
                if (m1, m2) == (0, 0) || m1.abs() > c || m2.abs() > c {
                    return Err(CoreError::InvalidSpec(format!(
                        "single_mode wavevector ({m1}, {m2}) outside the retained band (cutoff {c})"
                    )));
                }
            }
            GeneratorKind::RandomBand => {
                let band = self.mode.0;
                let c = grid.dealias_cutoff();
                if band < 1 || band > c {
                    return Err(CoreError::InvalidSpec(format!(
                        "random_band band {band} outside [1, {c}]"
                    )));
                }
                // The amplitude is an exact norm target here, so it must be a
                // usable norm.
                if self.amplitude <= 0.0 {
                    return Err(CoreError::InvalidSpec(format!(
                        "random_band amplitude {} must be positive",
                        self.amplitude
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn spectral_index(m: i64, n: usize) -> usize {
    m.rem_euclid(n as i64) as usize
}

/// Place a unit-amplitude cosine with the given phase at the conjugate mode
/// pair `+-(m1, m2)`. Forward transforms are unnormalized, so a real cosine of
/// amplitude one carries `n^2 / 2` at each of the two modes.
fn set_cosine_mode(
    data: &mut Array2<Complex64>,
    n: usize,
    m: (i64, i64),
    phase: f64,
    weight: Complex64,
) {
    let half = 0.5 * (n * n) as f64;
    let coeff = Complex64::from_polar(half, phase) * weight;
    let (i, j) = (spectral_index(m.0, n), spectral_index(m.1, n));
    let (ic, jc) = (spectral_index(-m.0, n), spectral_index(-m.1, n));
    data[[i, j]] += coeff;
    data[[ic, jc]] += coeff.conj();
}

fn taylor_green(amplitude: f64, grid: &GridSpec, fft: &Fft2d) -> Result<(VectorField, SymTensorField)> {
    let k0 = grid.k0();
    let u1 = ScalarField::from_fn(grid, |x, y| amplitude * (k0 * x).sin() * (k0 * y).cos());
    let u2 = ScalarField::from_fn(grid, |x, y| -amplitude * (k0 * x).cos() * (k0 * y).sin());
    let u = VectorField {
        c1: u1.to_spectral(fft),
        c2: u2.to_spectral(fft),
    };
    Ok((u, SymTensorField::zeros(grid.n, Representation::Spectral)))
}

/// Gaussian sampled around the box center. Effectively compactly supported
/// once `width << length`, so periodization changes nothing at roundoff scale.
fn centered_gaussian(grid: &GridSpec, width: f64) -> ScalarField {
    let c = 0.5 * grid.box_length;
    ScalarField::from_fn(grid, |x, y| {
        let (dx, dy) = (x - c, y - c);
        (-(dx * dx + dy * dy) / (width * width)).exp()
    })
}

fn localized_vortex(
    amplitude: f64,
    width: f64,
    grid: &GridSpec,
    fft: &Fft2d,
) -> Result<(VectorField, SymTensorField)> {
    // u = perp-gradient of the stream function, so div u = 0 structurally.
    let psi = centered_gaussian(grid, width).scaled(amplitude).to_spectral(fft);
    let mut u = VectorField {
        c1: ops::derivative(&psi, 1, grid).scaled(-1.0),
        c2: ops::derivative(&psi, 0, grid),
    };
    ops::dealias_vector(&mut u, grid);
    Ok((u, SymTensorField::zeros(grid.n, Representation::Spectral)))
}

fn localized_isotropic_tau(
    amplitude: f64,
    width: f64,
    grid: &GridSpec,
    fft: &Fft2d,
) -> Result<(VectorField, SymTensorField)> {
    // Laplacian-of-Gaussian profile: localized like the Gaussian but with an
    // exactly empty zero mode, so the stress has nothing that cannot decay.
    // Scaled so the center value is the amplitude:
    //   -(w^2/4) Lap exp(-r^2/w^2) = (1 - r^2/w^2) exp(-r^2/w^2).
    let h = centered_gaussian(grid, width).to_spectral(fft);
    let mut g = ops::laplacian(&h, grid).scaled(-amplitude * width * width / 4.0);
    ops::dealias(&mut g, grid);
    let tau = SymTensorField {
        c11: g.clone(),
        c12: ScalarField::zeros(grid.n, Representation::Spectral),
        c22: g,
    };
    Ok((VectorField::zeros(grid.n, Representation::Spectral), tau))
}

fn single_mode(
    amplitude: f64,
    mode: (i64, i64),
    grid: &GridSpec,
) -> Result<(VectorField, SymTensorField)> {
    let n = grid.n;
    let (m1, m2) = (mode.0 as f64, mode.1 as f64);
    let mag = (m1 * m1 + m2 * m2).sqrt();
    // Unit vector perpendicular to the wavevector keeps the mode
    // divergence-free.
    let e_perp = (-m2 / mag, m1 / mag);
    let mut u = VectorField::zeros(n, Representation::Spectral);
    set_cosine_mode(
        &mut u.c1.data,
        n,
        mode,
        0.0,
        Complex64::new(amplitude * e_perp.0, 0.0),
    );
    set_cosine_mode(
        &mut u.c2.data,
        n,
        mode,
        0.0,
        Complex64::new(amplitude * e_perp.1, 0.0),
    );
    Ok((u, SymTensorField::zeros(n, Representation::Spectral)))
}

fn constant_tau(value: f64, grid: &GridSpec) -> Result<(VectorField, SymTensorField)> {
    let n = grid.n;
    let mut tau = SymTensorField::zeros(n, Representation::Spectral);
    let zero_mode = Complex64::new(value * (n * n) as f64, 0.0);
    tau.c11.data[[0, 0]] = zero_mode;
    tau.c22.data[[0, 0]] = zero_mode;
    Ok((VectorField::zeros(n, Representation::Spectral), tau))
}

/// Random phases with unit spectral modulus on `0 < |m|^2 <= band^2`.
///
/// The flat modulus matters: it puts the data in the decay class whose
/// low-frequency content is bounded but not vanishing, the class behind the
/// `(1+t)^{-1/2}` energy decay rate. (Smooth localized data on a torus is
/// mean-free, its spectrum vanishes linearly at the origin, and it decays a
/// full power faster.) The velocity is built directly from flat-modulus
/// divergence-free modes; the three stress components get independent phases.
/// The finished state is rescaled so its joint H1 norm equals `amplitude`
/// exactly, making smallness conditions directly configurable.
fn random_band(
    amplitude: f64,
    band: i64,
    seed: u64,
    grid: &GridSpec,
) -> Result<(VectorField, SymTensorField)> {
    let n = grid.n;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut u = VectorField::zeros(n, Representation::Spectral);
    let mut tau = SymTensorField::zeros(n, Representation::Spectral);
    for m1 in -band..=band {
        for m2 in -band..=band {
            let r2 = m1 * m1 + m2 * m2;
            // One representative per conjugate pair.
            let in_half_plane = m1 > 0 || (m1 == 0 && m2 > 0);
            if r2 == 0 || r2 > band * band || !in_half_plane {
                continue;
            }
            let mag = (r2 as f64).sqrt();
            let e_perp = (-(m2 as f64) / mag, m1 as f64 / mag);
            let theta = rng.random_range(0.0..TAU);
            set_cosine_mode(&mut u.c1.data, n, (m1, m2), theta, e_perp.0.into());
            set_cosine_mode(&mut u.c2.data, n, (m1, m2), theta, e_perp.1.into());
            for comp in [&mut tau.c11, &mut tau.c12, &mut tau.c22] {
                let theta = rng.random_range(0.0..TAU);
                set_cosine_mode(&mut comp.data, n, (m1, m2), theta, Complex64::ONE);
            }
        }
    }
    let h1_sq = u.spectral_moment(grid, |k2| 1.0 + k2) + tau.spectral_moment(grid, |k2| 1.0 + k2);
    let scale = amplitude / h1_sq.sqrt();
    Ok((u.scaled(scale), tau.scaled(scale)))
}

/// Build the initial state described by `spec` on `grid`. The seed only
/// affects `random_band`; it fully determines the randomized fields.
pub fn generate(spec: &GeneratorSpec, grid: &GridSpec, seed: u64, fft: &Fft2d) -> Result<State> {
    grid.validate()?;
    spec.validate(grid)?;
    let (u, tau) = match spec.kind {
        GeneratorKind::TaylorGreen => taylor_green(spec.amplitude, grid, fft)?,
        GeneratorKind::LocalizedVortex => localized_vortex(spec.amplitude, spec.width, grid, fft)?,
        GeneratorKind::LocalizedIsotropicTau => {
            localized_isotropic_tau(spec.amplitude, spec.width, grid, fft)?
        }
        GeneratorKind::RandomBand => random_band(spec.amplitude, spec.mode.0, seed, grid)?,
        GeneratorKind::SingleMode => single_mode(spec.amplitude, spec.mode, grid)?,
        GeneratorKind::ConstantTau => constant_tau(spec.amplitude, grid)?,
    };
    State::new(0.0, u.scaled(spec.epsilon), tau.scaled(spec.epsilon), grid)
}

/// Pointwise sum of two states on the same grid. Both inputs are valid states
/// and the constraints are linear, so the sum is validated directly.
pub fn superpose(a: &State, b: &State, grid: &GridSpec) -> Result<State> {
    if a.u.c1.n() != b.u.c1.n() {
        return Err(CoreError::InvalidSpec(format!(
            "superpose needs matching grids, got {} and {}",
            a.u.c1.n(),
            b.u.c1.n()
        )));
    }
    State::new(a.t, a.u.add(&b.u), a.tau.add(&b.tau), grid)
}
