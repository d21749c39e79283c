//! Finite-difference semi-implicit Euler–Maruyama reference solver.

use serde::{Deserialize, Serialize};

use super::{Diffusion, Drift};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdBoundary {
    /// Nodes `i/m`, `i = 0..m`.
    Periodic,
    /// Interior nodes `i/(m+1)`, `i = 1..=m`, with zero boundary values.
    Dirichlet,
}

#[derive(Clone, Debug)]
pub struct FdProblem {
    pub nu: f64,
    pub drift: Drift,
    pub diffusion: Diffusion,
    pub dt: f64,
    pub m: usize,
    pub boundary: FdBoundary,
}

impl FdProblem {
    pub fn new(nu: f64, drift: Drift, diffusion: Diffusion, dt: f64, m: usize, boundary: FdBoundary) -> Result<Self> {
        if !(nu > 0.0) || !(dt > 0.0) {
            return Err(invalid("nu and dt must be positive"));
        }
        if m < 3 {
            return Err(invalid(format!("finite-difference grid needs at least 3 nodes, got {m}")));
        }
        Ok(Self { nu, drift, diffusion, dt, m, boundary })
    }

    pub fn dx(&self) -> f64 {
        match self.boundary {
            FdBoundary::Periodic => 1.0 / self.m as f64,
            FdBoundary::Dirichlet => 1.0 / (self.m + 1) as f64,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let dx = self.dx();
        match self.boundary {
            FdBoundary::Periodic => (0..self.m).map(|i| i as f64 * dx).collect(),
            FdBoundary::Dirichlet => (1..=self.m).map(|i| i as f64 * dx).collect(),
        }
    }
}

/// `(I + ΔtνA_D)⁻¹[Y + F(Y)Δt + G(Y)ΔW]` with `A_D = −δ²/Δx²`, the negated
/// centred second difference. `dw` holds `ΔW` at the grid nodes.
pub fn step_fd_euler_maruyama(state: &[f64], problem: &FdProblem, dw: &[f64]) -> Result<Vec<f64>> {
    if state.len() != problem.m || dw.len() != problem.m {
        return Err(Error::Dimension(format!(
            "grid has {} nodes, state {}, noise {}",
            problem.m,
            state.len(),
            dw.len()
        )));
    }
    let rhs: Vec<f64> = state
        .iter()
        .zip(dw)
        .map(|(&y, &w)| y + problem.drift.eval(y) * problem.dt + problem.diffusion.eval(y) * w)
        .collect();
    let r = problem.dt * problem.nu / problem.dx().powi(2);
    match problem.boundary {
        FdBoundary::Dirichlet => thomas(-r, 1.0 + 2.0 * r, -r, &rhs),
        FdBoundary::Periodic => cyclic(-r, 1.0 + 2.0 * r, -r, &rhs),
    }
}

/// Constant-coefficient tridiagonal solve.
fn thomas(lower: f64, diag: f64, upper: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    general_thomas(lower, &vec![diag; rhs.len()], upper, rhs)
}

/// Periodic tridiagonal solve by Sherman–Morrison on the Thomas solver.
fn cyclic(lower: f64, diag: f64, upper: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    // A = T + u vᵀ with u = (γ, 0, …, upper) and v = (1, 0, …, lower/γ)
    let gamma = -diag;
    let mut tdiag = vec![diag; n];
    tdiag[0] = diag - gamma;
    tdiag[n - 1] = diag - upper * lower / gamma;
    let x = general_thomas(lower, &tdiag, upper, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = upper;
    let z = general_thomas(lower, &tdiag, upper, &u)?;
    let vx = x[0] + lower / gamma * x[n - 1];
    let vz = z[0] + lower / gamma * z[n - 1];
    if (1.0 + vz).abs() < 1e-300 {
        return Err(Error::Numeric("singular cyclic system".into()));
    }
    let f = vx / (1.0 + vz);
    Ok(x.iter().zip(&z).map(|(a, b)| a - f * b).collect())
}

fn general_thomas(lower: f64, diag: &[f64], upper: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let denom = diag[i] - if i > 0 { lower * c[i - 1] } else { 0.0 };
        if denom.abs() < 1e-300 {
            return Err(Error::Numeric("singular tridiagonal system".into()));
        }
        c[i] = upper / denom;
        d[i] = (rhs[i] - if i > 0 { lower * d[i - 1] } else { 0.0 }) / denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}
