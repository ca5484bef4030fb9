//! Periodic 2-D pseudo-spectral solver and diagnostics for inviscid
//! Oldroyd-B viscoelastic flow.
//!
//! The library evolves a velocity / extra-stress pair $(u, \tau)$ on the
//! square torus $[0,L)^2$:
//!
//! ```text
//! du/dt + u.grad u + grad P = div tau + nu Lap u,        div u = 0,
//! dtau/dt + u.grad tau + a tau + Q(grad u, tau) = alpha D(u) + mu Lap tau,
//! ```
//!
//! with $D(u) = (\nabla u + \nabla u^T)/2$, $\Omega(u) = (\nabla u - \nabla u^T)/2$
//! and $Q(\nabla u,\tau) = \tau\Omega - \Omega\tau + b(D\tau + \tau D)$.
//! The co-rotation variant keeps only the rotational part
//! $Q(\Omega,\tau) = \tau\Omega - \Omega\tau$ and carries no $D(u)$ source.
//!
//! Modules, bottom up:
//!
//! * [`grid`], [`fft`], [`field`], [`ops`] -- grid bookkeeping, unnormalized
//!   forward / $1/n^2$ inverse transforms, field containers with an explicit
//!   representation tag, and the spectral calculus (derivatives, Leray
//!   projection, Biot-Savart, `R = inv_laplacian(curl(div(.)))`, dealiasing).
//! * [`lp`] -- dyadic Littlewood-Paley machinery: smooth partition of unity,
//!   shell decompositions, Besov norms, Bony paraproducts, and the commutator
//!   `[R, u.grad]`.
//! * [`model`] -- the Oldroyd-B right-hand sides, pressure recovery, and the
//!   structural field `Gamma = mu*vorticity - R(tau)` with its residual.
//! * [`integrator`] -- integrating-factor RK4 / SSP-RK3 stepping, CFL control,
//!   blow-up detection, and the record-producing run loop.
//! * [`diagnostics`] -- norms, energy functionals and identities, Fourier
//!   splitting, decay-rate fits, and the CSV record schema.
//! * [`linear`] -- the per-mode linearized oscillator oracle and the
//!   linear-regime consistency check.
//! * [`initial`] -- deterministic initial-data generators.

pub mod diag;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod initial;
pub mod integrator;
pub mod linear;
pub mod lp;
pub mod model;
pub mod ops;

pub use diag::{DiagnosticsConfig, DiagnosticsRecord, SplittingProfile, Tracker};
pub use error::CoreError;
pub use fft::Fft2d;
pub use field::{Representation, ScalarField, SymTensorField, VectorField};
pub use grid::GridSpec;
pub use initial::{GeneratorKind, GeneratorSpec};
pub use integrator::{Integrator, RunOutput, Scheme, StepperConfig};
pub use linear::ModeState;
pub use model::{ModelParams, RotationMode, State};
