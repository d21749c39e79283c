//! Spectral Galerkin integrators for semilinear SPDEs
//!
//! ```text
//! dX = [νAX + F(X)] dt + G(X) dW
//! ```
//!
//! on the periodic unit interval with `A = ∂ₓ²` and cylindrical Wiener noise
//! truncated to the first `J` basis modes. Nonlinear products are formed on a
//! padded grid of `4J` points and projected back.

mod fd;
mod study;

pub use fd::{step_fd_euler_maruyama, FdBoundary, FdProblem};
pub use study::{
    mc_error_norm, refinement_study, write_trajectory_csv, InitialData, RefinementRow, RefinementSetup,
    StepRule,
};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::{periodic_grid, TrigBasis, Transform};
use crate::error::{invalid, Error, Result};
use crate::noise::NoiseRealization;

pub type PointwiseFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Diagonal of `−A` on the basis, with the diffusion coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralOperator {
    pub eigenvalues: Vec<f64>,
    pub nu: f64,
}

impl SpectralOperator {
    /// `λ_j = (2π n_j)²` for the first `modes` modes.
    pub fn periodic_laplacian(modes: usize, nu: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(invalid(format!("nu must be positive, got {nu}")));
        }
        Ok(Self { eigenvalues: TrigBasis::new(modes)?.laplacian_eigenvalues(), nu })
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Coefficients on the first `J` basis modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    pub coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(modes: usize) -> Self {
        Self { coeffs: vec![0.0; modes] }
    }

    pub fn constant(modes: usize, c: f64) -> Self {
        let mut f = Self::zeros(modes);
        f.coeffs[0] = c;
        f
    }

    /// Projection of `f` sampled on the transform grid.
    pub fn from_fn(transform: &Transform, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = periodic_grid(transform.grid_size()).into_iter().map(f).collect();
        let mut coeffs = vec![0.0; transform.basis().modes];
        transform.from_grid(&values, &mut coeffs);
        Self { coeffs }
    }

    pub fn basis_size(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: f64) -> f64 {
        TrigBasis { modes: self.coeffs.len() }.eval(&self.coeffs, x)
    }

    pub fn eval_many(&self, points: &[f64]) -> Vec<f64> {
        points.iter().map(|&x| self.eval(x)).collect()
    }

    /// Copies the common leading modes into a field of `modes` coefficients.
    pub fn resized(&self, modes: usize) -> Self {
        let mut c = vec![0.0; modes];
        let k = modes.min(self.coeffs.len());
        c[..k].copy_from_slice(&self.coeffs[..k]);
        Self { coeffs: c }
    }
}

#[derive(Clone, Default)]
pub enum Drift {
    #[default]
    Zero,
    Pointwise(PointwiseFn),
}

impl Drift {
    fn eval(&self, u: f64) -> f64 {
        match self {
            Drift::Zero => 0.0,
            Drift::Pointwise(f) => f(u),
        }
    }
}

impl std::fmt::Debug for Drift {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Drift::Zero => write!(f, "Zero"),
            Drift::Pointwise(_) => write!(f, "Pointwise"),
        }
    }
}

/// Noise coefficient `G`, applied pointwise.
#[derive(Clone, Default)]
pub enum Diffusion {
    #[default]
    Zero,
    /// `G(u) = σ`.
    Additive(f64),
    /// `G(u) = λu`.
    Multiplicative(f64),
    /// General `G(u)`; not usable with the Milstein scheme.
    Pointwise(PointwiseFn),
}

impl Diffusion {
    fn eval(&self, u: f64) -> f64 {
        match self {
            Diffusion::Zero => 0.0,
            Diffusion::Additive(s) => *s,
            Diffusion::Multiplicative(l) => l * u,
            Diffusion::Pointwise(g) => g(u),
        }
    }

    /// `G'(u)G(u)`, when known in closed form.
    fn derivative_product(&self, u: f64) -> Option<f64> {
        match self {
            Diffusion::Zero | Diffusion::Additive(_) => Some(0.0),
            Diffusion::Multiplicative(l) => Some(l * l * u),
            Diffusion::Pointwise(_) => None,
        }
    }
}

impl std::fmt::Debug for Diffusion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diffusion::Zero => write!(f, "Zero"),
            Diffusion::Additive(s) => write!(f, "Additive({s})"),
            Diffusion::Multiplicative(l) => write!(f, "Multiplicative({l})"),
            Diffusion::Pointwise(_) => write!(f, "Pointwise"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    EulerGalerkin,
    LordRougemont,
    Milstein,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler-galerkin" => Ok(Scheme::EulerGalerkin),
            "lord-rougemont" => Ok(Scheme::LordRougemont),
            "milstein" => Ok(Scheme::Milstein),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// `dX = [νAX + F(X)]dt + G(X)dW` on `J` modes with step `Δt`.
#[derive(Clone, Debug)]
pub struct SemilinearProblem {
    pub operator: SpectralOperator,
    pub drift: Drift,
    pub diffusion: Diffusion,
    pub dt: f64,
    transform: Transform,
    /// `Σ_j χ_j(x_i)²` on the transform grid.
    noise_trace: Vec<f64>,
}

impl SemilinearProblem {
    pub fn new(operator: SpectralOperator, drift: Drift, diffusion: Diffusion, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        let basis = TrigBasis::new(operator.modes())?;
        let transform = Transform::new(basis, (4 * basis.modes).max(8))?;
        let noise_trace = periodic_grid(transform.grid_size()).into_iter().map(|x| basis.sum_of_squares(x)).collect();
        Ok(Self { operator, drift, diffusion, dt, transform, noise_trace })
    }

    /// Stochastic heat equation `dX = ν∂ₓ²X dt + λX dW`.
    pub fn heat(modes: usize, nu: f64, lambda: f64, dt: f64) -> Result<Self> {
        Self::new(
            SpectralOperator::periodic_laplacian(modes, nu)?,
            Drift::Zero,
            Diffusion::Multiplicative(lambda),
            dt,
        )
    }

    pub fn modes(&self) -> usize {
        self.operator.modes()
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    fn check(&self, state: &SpectralField, dw: &[f64]) -> Result<()> {
        if state.basis_size() != self.modes() || dw.len() != self.modes() {
            return Err(Error::Dimension(format!(
                "problem has {} modes, state {}, noise {}",
                self.modes(),
                state.basis_size(),
                dw.len()
            )));
        }
        Ok(())
    }

    /// `Y + F_J(Y)Δt + (G(Y)ΔW)_J`, plus the Milstein term when asked.
    fn explicit_part(&self, state: &SpectralField, dw: &[f64], milstein: bool) -> Result<Vec<f64>> {
        let mut out = state.coeffs.clone();
        let no_drift = matches!(self.drift, Drift::Zero);
        let no_noise = matches!(self.diffusion, Diffusion::Zero);
        if no_drift && no_noise {
            return Ok(out);
        }
        let m = self.transform.grid_size();
        let mut y = vec![0.0; m];
        let mut w = vec![0.0; m];
        self.transform.to_grid(&state.coeffs, &mut y);
        self.transform.to_grid(dw, &mut w);
        let mut density = vec![0.0; m];
        for i in 0..m {
            let mut v = self.drift.eval(y[i]) * self.dt + self.diffusion.eval(y[i]) * w[i];
            if milstein {
                let gg = self.diffusion.derivative_product(y[i]).ok_or_else(|| {
                    Error::Unsupported("Milstein needs a diffusion with closed-form G'G".into())
                })?;
                v += gg * 0.5 * (w[i] * w[i] - self.dt * self.noise_trace[i]);
            }
            density[i] = v;
        }
        let mut proj = vec![0.0; self.modes()];
        self.transform.from_grid(&density, &mut proj);
        for (o, p) in out.iter_mut().zip(proj) {
            *o += p;
        }
        Ok(out)
    }

    fn damping(&self, j: usize) -> f64 {
        (-self.dt * self.operator.nu * self.operator.eigenvalues[j]).exp()
    }
}

/// `Y_{n+1} = (I + ΔtνΛ)⁻¹[Y_n + F_J(Y_n)Δt + (G(Y_n)ΔW)_J]`.
pub fn step_euler_galerkin(state: &SpectralField, problem: &SemilinearProblem, dw: &[f64]) -> Result<SpectralField> {
    problem.check(state, dw)?;
    let mut c = problem.explicit_part(state, dw, false)?;
    for (j, v) in c.iter_mut().enumerate() {
        *v /= 1.0 + problem.dt * problem.operator.nu * problem.operator.eigenvalues[j];
    }
    Ok(SpectralField::new(c))
}

/// Exponential Euler: `Y_{n+1} = e^{ΔtνA}[Y_n + F_J(Y_n)Δt + (G(Y_n)ΔW)_J]`.
pub fn step_lord_rougemont(state: &SpectralField, problem: &SemilinearProblem, dw: &[f64]) -> Result<SpectralField> {
    problem.check(state, dw)?;
    let mut c = problem.explicit_part(state, dw, false)?;
    for (j, v) in c.iter_mut().enumerate() {
        *v *= problem.damping(j);
    }
    Ok(SpectralField::new(c))
}

/// Exponential Euler plus the Itô correction
/// `(G'(Y)G(Y)·½((ΔW)² − Δt Σ_j χ_j²))_J`.
pub fn step_milstein(state: &SpectralField, problem: &SemilinearProblem, dw: &[f64]) -> Result<SpectralField> {
    problem.check(state, dw)?;
    let mut c = problem.explicit_part(state, dw, true)?;
    for (j, v) in c.iter_mut().enumerate() {
        *v *= problem.damping(j);
    }
    Ok(SpectralField::new(c))
}

pub fn step(scheme: Scheme, state: &SpectralField, problem: &SemilinearProblem, dw: &[f64]) -> Result<SpectralField> {
    match scheme {
        Scheme::EulerGalerkin => step_euler_galerkin(state, problem, dw),
        Scheme::LordRougemont => step_lord_rougemont(state, problem, dw),
        Scheme::Milstein => step_milstein(state, problem, dw),
    }
}

fn check_noise(problem: &SemilinearProblem, noise: &NoiseRealization) -> Result<()> {
    if noise.modes != problem.modes() {
        return Err(Error::Dimension(format!(
            "noise has {} modes, problem {}",
            noise.modes,
            problem.modes()
        )));
    }
    if (noise.dt - problem.dt).abs() > 1e-12 * problem.dt {
        return Err(Error::Dimension(format!("noise dt {} differs from problem dt {}", noise.dt, problem.dt)));
    }
    Ok(())
}

/// States at every step, starting with `initial`.
pub fn integrate(
    problem: &SemilinearProblem,
    scheme: Scheme,
    initial: &SpectralField,
    noise: &NoiseRealization,
) -> Result<Vec<SpectralField>> {
    check_noise(problem, noise)?;
    let mut traj = Vec::with_capacity(noise.n_time + 1);
    traj.push(initial.clone());
    for n in 0..noise.n_time {
        let next = step(scheme, traj.last().expect("nonempty"), problem, noise.row(n))?;
        traj.push(next);
    }
    Ok(traj)
}

/// Like [`integrate`] but keeps only the final state.
pub fn integrate_final(
    problem: &SemilinearProblem,
    scheme: Scheme,
    initial: &SpectralField,
    noise: &NoiseRealization,
) -> Result<SpectralField> {
    check_noise(problem, noise)?;
    let mut y = initial.clone();
    for n in 0..noise.n_time {
        y = step(scheme, &y, problem, noise.row(n))?;
    }
    Ok(y)
}
