//! Mixed-hybrid finite elements with non-overlapping domain decomposition for
//!
//! ```text
//! ∂ₜh = ν ∂ₓ²h + (λ/2)(∂ₓh)² + f(t, x)
//! ```
//!
//! in the mixed form `u = -ν ∂ₓh`, `∂ₜh + ∂ₓu + β u² = f` with `α = 1/ν` and
//! `β = -α²λ/2`. Every mesh cell is its own subdomain: lowest-order
//! Raviart–Thomas fluxes, piecewise-constant heights and interface Lagrange
//! multipliers give a 5×5 system per cell, and cells talk to each other only
//! through Robin transmission data. Each backward-Euler step is solved by a
//! Red-Black Picard iteration over those local systems.

mod forcing;
mod local;
mod march;
mod stromatolite;
mod sweep;

pub use forcing::{ConstantForcing, FnForcing, GridForcing, NodalForcing, ZeroForcing};
pub use local::{
    apply_dirichlet_left, apply_dirichlet_right, assemble_local, ElementKind, LocalInputs,
    LocalSystem, Lu5, Matrix5, NeighborTrace, Vector5,
};
pub use march::{time_march, Boundary, BoundaryFn, MarchResult, MhfeSolver, Record};
pub use stromatolite::{
    convergence_study, fitted_order, printed_boundary_value, stromatolite_exact,
    stromatolite_run, ConvergenceRow, ConvergenceStudy, DtPolicy, StromatoliteConfig, StromatoliteRun,
};
pub use sweep::{red_black_sweep, LocalFactors, SweepContext};

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Uniform partition of `[a, b]` into `m` cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    pub a: f64,
    pub b: f64,
    pub m: usize,
}

impl Mesh1D {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(invalid(format!("mesh needs at least 2 cells, got {m}")));
        }
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(invalid(format!("invalid interval [{a}, {b}]")));
        }
        Ok(Self { a, b, m })
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.m as f64
    }

    /// Node `j` for `j = 0..=m`.
    pub fn node(&self, j: usize) -> f64 {
        self.a + j as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.m).map(|j| self.node(j)).collect()
    }

    /// Midpoint of cell `j` for `j = 0..m`.
    pub fn center(&self, j: usize) -> f64 {
        self.a + (j as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.center(j)).collect()
    }
}

/// Local unknowns of one element.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ElementState {
    pub l1: f64,
    pub l2: f64,
    pub u1: f64,
    pub u2: f64,
    pub h: f64,
}

impl ElementState {
    pub fn from_array(x: [f64; 5]) -> Self {
        Self { l1: x[0], l2: x[1], u1: x[2], u2: x[3], h: x[4] }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.l1, self.l2, self.u1, self.u2, self.h]
    }
}

/// Physical and iteration parameters of the MHFE solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpzParameters {
    pub nu: f64,
    pub lambda: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub dt: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl KpzParameters {
    /// Parameters with the default iteration controls (`tol = 1e-10`, 10⁴ sweeps).
    pub fn new(nu: f64, lambda: f64, chi1: f64, chi2: f64, dt: f64) -> Self {
        Self { nu, lambda, chi1, chi2, dt, tol: 1e-10, max_iters: 10_000 }
    }

    pub fn with_tolerance(mut self, tol: f64, max_iters: usize) -> Self {
        self.tol = tol;
        self.max_iters = max_iters;
        self
    }

    pub fn alpha(&self) -> f64 {
        1.0 / self.nu
    }

    pub fn beta(&self) -> f64 {
        -self.lambda / (2.0 * self.nu * self.nu)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(invalid(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.chi1 > 0.0 && self.chi2 > 0.0) {
            return Err(invalid("Robin coefficients chi1, chi2 must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(invalid("tolerance must be positive and max_iters >= 1"));
        }
        if !self.lambda.is_finite() {
            return Err(invalid("lambda must be finite"));
        }
        Ok(())
    }
}
