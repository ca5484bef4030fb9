//! Time integration with exact spectral integrating factors.
//!
//! The linear parts that are diagonal in Fourier space, `nu Lap` on the
//! velocity and `-a + mu Lap` on the stress, are applied through exponential
//! factors, so stiffness from the stress diffusion never restricts the step.
//! The remaining terms (transport, drag, cross-coupling) advance with an
//! explicit Runge-Kutta tableau:
//!
//! * `IfRk4`: classical fourth-order tableau in integrating-factor form; the
//!   workhorse scheme, which also stays exact on purely linear data.
//! * `IfSsprk3`: third-order strong-stability-preserving tableau applied to
//!   the exponentially transformed variable. Its inverse factors grow like
//!   `exp((a + mu k^2) dt)`, so it wants `dt (a + mu k_max^2)` moderate;
//!   offered for cross-checking the time discretization, not as the default.
//!
//! A step never produces silent garbage: non-finite norms raise a blow-up
//! error carrying the time and last H1 size, and `run` additionally enforces
//! a configurable H1 ceiling relative to the initial state.

use crate::error::{CoreError, Result};
use crate::fft::Fft2d;
use crate::field::{Representation, ScalarField, SymTensorField, VectorField};
use crate::grid::GridSpec;
use crate::model::{explicit_tendencies, ModelParams, State, Tendencies};
use crate::ops;
use ndarray::Array2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    IfRk4,
    IfSsprk3,
}

/// Stepping controls. `dt` is the nominal step and also the ceiling the
/// adaptive CFL logic never exceeds.
#[derive(Debug, Clone, Copy)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub t_end: f64,
    /// CFL safety factor in (0, 1].
    pub cfl_safety: f64,
    /// Re-evaluate dt from the CFL condition before every step.
    pub adapt: bool,
    /// Blow-up ceiling: error out when the H1 norm exceeds this multiple of
    /// the initial one.
    pub blowup_factor: f64,
}

impl StepperConfig {
    pub fn new(dt: f64, scheme: Scheme, t_end: f64) -> Self {
        StepperConfig {
            dt,
            scheme,
            t_end,
            cfl_safety: 0.5,
            adapt: false,
            blowup_factor: 1e8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.dt > 0.0
            && self.dt.is_finite()
            && self.t_end >= 0.0
            && self.t_end.is_finite()
            && self.cfl_safety > 0.0
            && self.cfl_safety <= 1.0
            && self.blowup_factor > 1.0;
        if ok {
            Ok(())
        } else {
            Err(CoreError::InvalidSpec(format!(
                "stepper config needs dt > 0, t_end >= 0, cfl_safety in (0,1], \
                 blowup_factor > 1; got dt={} t_end={} cfl_safety={} blowup_factor={}",
                self.dt, self.t_end, self.cfl_safety, self.blowup_factor
            )))
        }
    }
}

/// Exponential multiplier tables for one dt value.
struct Factors {
    dt_bits: u64,
    u_half: Array2<f64>,
    u_full: Array2<f64>,
    u_neg_half: Array2<f64>,
    u_neg_full: Array2<f64>,
    tau_half: Array2<f64>,
    tau_full: Array2<f64>,
    tau_neg_half: Array2<f64>,
    tau_neg_full: Array2<f64>,
}

fn exponential_table(grid: &GridSpec, rate: impl Fn(f64) -> f64, s: f64) -> Array2<f64> {
    let ks = grid.wavenumbers();
    Array2::from_shape_fn((grid.n, grid.n), |(i, j)| {
        let k2 = ks[i] * ks[i] + ks[j] * ks[j];
        (rate(k2) * s).exp()
    })
}

impl Factors {
    fn build(grid: &GridSpec, params: &ModelParams, dt: f64) -> Self {
        let lu = |k2: f64| -params.nu * k2;
        let lt = |k2: f64| -(params.a + params.mu * k2);
        Factors {
            dt_bits: dt.to_bits(),
            u_half: exponential_table(grid, lu, dt / 2.0),
            u_full: exponential_table(grid, lu, dt),
            u_neg_half: exponential_table(grid, lu, -dt / 2.0),
            u_neg_full: exponential_table(grid, lu, -dt),
            tau_half: exponential_table(grid, lt, dt / 2.0),
            tau_full: exponential_table(grid, lt, dt),
            tau_neg_half: exponential_table(grid, lt, -dt / 2.0),
            tau_neg_full: exponential_table(grid, lt, -dt),
        }
    }
}

fn mul_table(f: &ScalarField, table: &Array2<f64>) -> ScalarField {
    f.require(Representation::Spectral, "integrating factor");
    let mut out = f.clone();
    out.data.zip_mut_with(table, |z, &w| *z *= w);
    out
}

/// Joint (velocity, stress) point in phase space; stage arithmetic.
struct Psi {
    u: VectorField,
    tau: SymTensorField,
}

impl Psi {
    fn from_state(s: &State) -> Self {
        Psi {
            u: s.u.clone(),
            tau: s.tau.clone(),
        }
    }

    fn from_rates(td: Tendencies) -> Self {
        Psi {
            u: td.du,
            tau: td.dtau,
        }
    }

    fn axpy(&mut self, c: f64, o: &Psi) {
        self.u.axpy(c, &o.u);
        self.tau.axpy(c, &o.tau);
    }

    fn scaled(&self, c: f64) -> Psi {
        Psi {
            u: self.u.scaled(c),
            tau: self.tau.scaled(c),
        }
    }

    fn apply(&self, fu: &Array2<f64>, ft: &Array2<f64>) -> Psi {
        Psi {
            u: VectorField {
                c1: mul_table(&self.u.c1, fu),
                c2: mul_table(&self.u.c2, fu),
            },
            tau: SymTensorField {
                c11: mul_table(&self.tau.c11, ft),
                c12: mul_table(&self.tau.c12, ft),
                c22: mul_table(&self.tau.c22, ft),
            },
        }
    }
}

/// Summary of a completed `run`.
#[derive(Debug)]
pub struct RunOutput {
    pub final_state: State,
    pub steps: usize,
    pub records: usize,
}

pub struct Integrator<'a> {
    pub grid: GridSpec,
    pub params: ModelParams,
    pub cfg: StepperConfig,
    fft: &'a Fft2d,
    factors: Option<Factors>,
}

impl<'a> Integrator<'a> {
    pub fn new(
        grid: GridSpec,
        params: ModelParams,
        cfg: StepperConfig,
        fft: &'a Fft2d,
    ) -> Result<Self> {
        grid.validate()?;
        params.validate()?;
        cfg.validate()?;
        assert_eq!(fft.size(), grid.n, "transform size must match the grid");
        Ok(Integrator {
            grid,
            params,
            cfg,
            fft,
            factors: None,
        })
    }

    fn factors_for(&mut self, dt: f64) -> &Factors {
        let rebuild = match &self.factors {
            Some(f) => f.dt_bits != dt.to_bits(),
            None => true,
        };
        if rebuild {
            self.factors = Some(Factors::build(&self.grid, &self.params, dt));
        }
        self.factors.as_ref().unwrap()
    }

    fn nonlinear(&self, psi: &Psi, t: f64) -> Psi {
        // stage states are divergence-free by construction; skip re-validation
        let s = State {
            t,
            u: psi.u.clone(),
            tau: psi.tau.clone(),
        };
        Psi::from_rates(explicit_tendencies(&s, &self.params, &self.grid, self.fft))
    }

    /// One step of the configured scheme with the nominal dt.
    pub fn step(&mut self, state: &State) -> Result<State> {
        self.step_by(state, self.cfg.dt)
    }

    /// One step with an explicit dt (used for the final clip onto t_end).
    pub fn step_by(&mut self, state: &State, dt: f64) -> Result<State> {
        let t = state.t;
        let psi = Psi::from_state(state);
        let scheme = self.cfg.scheme;
        self.factors_for(dt);
        let f = self.factors.as_ref().unwrap();
        // the borrow checker cannot see that nonlinear() leaves factors
        // untouched, so snapshot the tables we need
        let (u_half, u_full, tau_half, tau_full) = (
            f.u_half.clone(),
            f.u_full.clone(),
            f.tau_half.clone(),
            f.tau_full.clone(),
        );
        let (u_neg_half, u_neg_full, tau_neg_half, tau_neg_full) = (
            f.u_neg_half.clone(),
            f.u_neg_full.clone(),
            f.tau_neg_half.clone(),
            f.tau_neg_full.clone(),
        );

        let next = match scheme {
            Scheme::IfRk4 => {
                let k1 = self.nonlinear(&psi, t);
                let mut s1 = psi.scaled(1.0);
                s1.axpy(dt / 2.0, &k1);
                let s1 = s1.apply(&u_half, &tau_half);
                let k2 = self.nonlinear(&s1, t + dt / 2.0);
                let mut s2 = psi.apply(&u_half, &tau_half);
                s2.axpy(dt / 2.0, &k2);
                let k3 = self.nonlinear(&s2, t + dt / 2.0);
                let mut s3 = psi.apply(&u_full, &tau_full);
                s3.axpy(dt, &k3.apply(&u_half, &tau_half));
                let k4 = self.nonlinear(&s3, t + dt);
                let mut out = psi.apply(&u_full, &tau_full);
                out.axpy(dt / 6.0, &k1.apply(&u_full, &tau_full));
                let mut k23 = k2.scaled(1.0);
                k23.axpy(1.0, &k3);
                out.axpy(dt / 3.0, &k23.apply(&u_half, &tau_half));
                out.axpy(dt / 6.0, &k4);
                out
            }
            Scheme::IfSsprk3 => {
                // strong-stability tableau on w(s) = e^{-L s} psi(t + s)
                let g1 = self.nonlinear(&psi, t);
                let mut w1 = psi.scaled(1.0);
                w1.axpy(dt, &g1);
                let g2 = self
                    .nonlinear(&w1.apply(&u_full, &tau_full), t + dt)
                    .apply(&u_neg_full, &tau_neg_full);
                let mut w2 = w1.scaled(1.0);
                w2.axpy(dt, &g2);
                let mut w2s = psi.scaled(3.0 / 4.0);
                w2s.axpy(1.0 / 4.0, &w2);
                let g3 = self
                    .nonlinear(&w2s.apply(&u_half, &tau_half), t + dt / 2.0)
                    .apply(&u_neg_half, &tau_neg_half);
                let mut w3 = w2s.scaled(1.0);
                w3.axpy(dt, &g3);
                let mut out = psi.scaled(1.0 / 3.0);
                out.axpy(2.0 / 3.0, &w3);
                out.apply(&u_full, &tau_full)
            }
        };

        let u = ops::leray_project(&next.u, &self.grid);
        let tau = next.tau;
        let h1_sq = u.spectral_moment(&self.grid, |k2| 1.0 + k2)
            + tau.spectral_moment(&self.grid, |k2| 1.0 + k2);
        if !h1_sq.is_finite() {
            return Err(CoreError::BlowUp {
                t: t + dt,
                h1: f64::INFINITY,
                reason: "non-finite field values after step".into(),
            });
        }
        Ok(State {
            t: t + dt,
            u,
            tau,
        })
    }

    /// CFL-limited step: `cfl_safety * dx / (max |u| + 1e-12)`, never above
    /// the configured nominal dt and never more than doubling the previous
    /// step.
    pub fn cfl_dt(&self, state: &State, prev_dt: f64) -> f64 {
        let speed = state.u.to_real(self.fft).max_magnitude(&self.grid);
        let cand = self.cfg.cfl_safety * self.grid.dx() / (speed + 1e-12);
        cand.min(self.cfg.dt).min(2.0 * prev_dt)
    }

    /// March from `initial` to `cfg.t_end`, invoking `observer` on the
    /// initial state, at every `cadence` interval of simulated time
    /// (`cadence = 0` means every step), and on the final state. The last
    /// step is clipped so the final time is exactly `t_end`. Identical
    /// configurations reproduce bit-identical trajectories.
    pub fn run(
        &mut self,
        initial: State,
        cadence: f64,
        mut observer: impl FnMut(&State) -> Result<()>,
    ) -> Result<RunOutput> {
        self.cfg.validate()?;
        if !(cadence >= 0.0) {
            return Err(CoreError::InvalidSpec(format!(
                "record cadence must be >= 0, got {cadence}"
            )));
        }
        let t_end = self.cfg.t_end;
        let h1_sq_initial = initial.u.spectral_moment(&self.grid, |k2| 1.0 + k2)
            + initial.tau.spectral_moment(&self.grid, |k2| 1.0 + k2);
        let ceiling_sq = if h1_sq_initial > 0.0 {
            self.cfg.blowup_factor * self.cfg.blowup_factor * h1_sq_initial
        } else {
            f64::INFINITY
        };

        let mut state = initial;
        let mut steps = 0usize;
        let mut records = 0usize;
        observer(&state)?;
        records += 1;
        let mut next_record = if cadence > 0.0 {
            (state.t / cadence).floor() * cadence + cadence
        } else {
            f64::NEG_INFINITY
        };
        let tiny = 1e-12 * t_end.max(1.0);
        let mut prev_dt = self.cfg.dt;

        while state.t < t_end - tiny {
            let mut dt = if self.cfg.adapt {
                self.cfl_dt(&state, prev_dt)
            } else {
                self.cfg.dt
            };
            let mut lands = false;
            if state.t + dt >= t_end - tiny {
                dt = t_end - state.t;
                lands = true;
            }
            state = self.step_by(&state, dt)?;
            if lands {
                state.t = t_end;
            }
            steps += 1;
            prev_dt = dt;

            let h1_sq = state.u.spectral_moment(&self.grid, |k2| 1.0 + k2)
                + state.tau.spectral_moment(&self.grid, |k2| 1.0 + k2);
            if h1_sq > ceiling_sq {
                return Err(CoreError::BlowUp {
                    t: state.t,
                    h1: h1_sq.sqrt(),
                    reason: format!(
                        "H1 norm exceeded {} times its initial value",
                        self.cfg.blowup_factor
                    ),
                });
            }

            let due = cadence == 0.0 || state.t + tiny >= next_record || lands;
            if due {
                observer(&state)?;
                records += 1;
                while cadence > 0.0 && next_record <= state.t + tiny {
                    next_record += cadence;
                }
            }
        }

        Ok(RunOutput {
            final_state: state,
            steps,
            records,
        })
    }
}
