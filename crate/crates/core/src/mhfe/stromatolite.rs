//! The laminar stromatolite benchmark: a parabolic profile that the
//! deterministic equation transports exactly, used for mesh-refinement studies.

use serde::{Deserialize, Serialize};

use super::{time_march, Boundary, ConstantForcing, KpzParameters, Mesh1D, Record};
use crate::error::{Error, Result};

/// Closed-form solution
/// `A + (v + λ)t − (λ/ν) log(2λt + B) − (x − x₀)² / (2λt + B)`.
///
/// It satisfies `∂ₜh = ν∂ₓ²h + (λ/2)(∂ₓh)² + v + λ` whenever `λ = ν`.
#[allow(clippy::too_many_arguments)]
pub fn stromatolite_exact(
    t: f64,
    x: f64,
    a: f64,
    b: f64,
    x0: f64,
    v: f64,
    nu: f64,
    lambda: f64,
) -> Result<f64> {
    let arg = 2.0 * lambda * t + b;
    if !(arg > 0.0) {
        return Err(Error::Domain(format!("log argument 2λt + B = {arg} is not positive")));
    }
    Ok(a + (v + lambda) * t - (lambda / nu) * arg.ln() - (x - x0).powi(2) / arg)
}

/// `t − log(2t + 1) − 1/(2t + 1) − 1`, the boundary trace quoted alongside
/// the benchmark. It differs from the closed form at `x = ±1` by `t`; kept for
/// comparison only.
pub fn printed_boundary_value(t: f64) -> f64 {
    t - (2.0 * t + 1.0).ln() - 1.0 / (2.0 * t + 1.0) - 1.0
}

/// How `Δt` follows `Δx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DtPolicy {
    /// `Δt = Δx / ratio`.
    Linear { ratio: f64 },
    /// `Δt = Δx³`.
    Cubic,
    Fixed { dt: f64 },
}

impl DtPolicy {
    pub fn dt(&self, dx: f64) -> f64 {
        match *self {
            DtPolicy::Linear { ratio } => dx / ratio,
            DtPolicy::Cubic => dx.powi(3),
            DtPolicy::Fixed { dt } => dt,
        }
    }

    /// Largest `Δt` not exceeding the policy value that divides `t_final`.
    pub fn dividing_dt(&self, dx: f64, t_final: f64) -> f64 {
        let target = self.dt(dx);
        if t_final <= 0.0 {
            return target;
        }
        t_final / (t_final / target).ceil()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StromatoliteConfig {
    pub a: f64,
    pub b: f64,
    pub x0: f64,
    pub v: f64,
    pub nu: f64,
    pub lambda: f64,
    pub domain: (f64, f64),
    pub chi1: f64,
    pub chi2: f64,
    pub dt_policy: DtPolicy,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for StromatoliteConfig {
    /// `A = −1`, `B = 1`, `x₀ = 0`, `v = ν = λ = 1` on `[−1, 1]`,
    /// `χ₁ = χ₂ = 0.1`, `Δt = Δx/16`.
    fn default() -> Self {
        Self {
            a: -1.0,
            b: 1.0,
            x0: 0.0,
            v: 1.0,
            nu: 1.0,
            lambda: 1.0,
            domain: (-1.0, 1.0),
            chi1: 0.1,
            chi2: 0.1,
            dt_policy: DtPolicy::Linear { ratio: 16.0 },
            tol: 1e-10,
            max_iters: 100_000,
        }
    }
}

impl StromatoliteConfig {
    pub fn exact(&self, t: f64, x: f64) -> Result<f64> {
        stromatolite_exact(t, x, self.a, self.b, self.x0, self.v, self.nu, self.lambda)
    }

    pub fn params(&self, dx: f64, t_final: f64) -> KpzParameters {
        KpzParameters::new(self.nu, self.lambda, self.chi1, self.chi2, self.dt_policy.dividing_dt(dx, t_final))
            .with_tolerance(self.tol, self.max_iters)
    }

    fn check(&self) -> Result<()> {
        if (self.lambda - self.nu).abs() > 1e-12 * self.nu.abs().max(1.0) {
            return Err(Error::Unsupported(format!(
                "closed form solves the equation only for lambda = nu (got {} and {})",
                self.lambda, self.nu
            )));
        }
        Ok(())
    }
}

/// Result of one benchmark run.
#[derive(Clone, Debug, Serialize)]
pub struct StromatoliteRun {
    pub m: usize,
    pub dx: f64,
    pub dt: f64,
    pub centers: Vec<f64>,
    pub numeric: Vec<f64>,
    pub exact: Vec<f64>,
    pub max_error: f64,
    /// `(Δx Σ (H_j − h(T, x_j))²)^{1/2}` over cell centers.
    pub l2_error: f64,
    /// `‖H − h‖₂ / ‖h‖₂` over cell centers.
    pub relative_l2_error: f64,
    pub total_sweeps: usize,
}

/// Runs the benchmark on `m` cells up to `t_final` with exact Dirichlet data
/// and initial profile.
pub fn stromatolite_run(cfg: &StromatoliteConfig, m: usize, t_final: f64) -> Result<StromatoliteRun> {
    cfg.check()?;
    let mesh = Mesh1D::new(cfg.domain.0, cfg.domain.1, m)?;
    let params = cfg.params(mesh.dx(), t_final);
    cfg.exact(0.0, cfg.domain.0)?;
    cfg.exact(t_final, cfg.domain.0)?;
    let c = *cfg;
    let exact = move |t: f64, x: f64| c.exact(t, x).unwrap_or(f64::NAN);
    let (a, b) = cfg.domain;
    let boundary = Boundary::dirichlet(move |t| exact(t, a), move |t| exact(t, b));
    let forcing = ConstantForcing(cfg.v + cfg.lambda);
    let result = time_march(mesh, params, boundary, |x| exact(0.0, x), &forcing, t_final, Record::FinalOnly)?;
    let centers = mesh.centers();
    let reference: Vec<f64> = centers.iter().map(|&x| exact(t_final, x)).collect();
    let numeric = result.final_heights().to_vec();
    let (mut diff2, mut ref2, mut max_error) = (0.0, 0.0, 0.0f64);
    for (u, e) in numeric.iter().zip(&reference) {
        diff2 += (u - e) * (u - e);
        ref2 += e * e;
        max_error = max_error.max((u - e).abs());
    }
    Ok(StromatoliteRun {
        m,
        dx: mesh.dx(),
        dt: params.dt,
        centers,
        numeric,
        exact: reference,
        max_error,
        l2_error: (diff2 * mesh.dx()).sqrt(),
        relative_l2_error: (diff2 / ref2).sqrt(),
        total_sweeps: result.total_sweeps,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConvergenceRow {
    pub m: usize,
    pub dx: f64,
    pub dt: f64,
    pub error: f64,
    pub max_error: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log E` against `log Δx`.
    pub order: f64,
}

/// Mesh refinement study; `E` is the discrete L² error at `t_final`.
pub fn convergence_study(cfg: &StromatoliteConfig, ms: &[usize], t_final: f64) -> Result<ConvergenceStudy> {
    if ms.len() < 2 {
        return Err(Error::InvalidArgument("convergence study needs at least two meshes".into()));
    }
    let rows = ms
        .iter()
        .map(|&m| {
            stromatolite_run(cfg, m, t_final).map(|r| ConvergenceRow {
                m,
                dx: r.dx,
                dt: r.dt,
                error: r.l2_error,
                max_error: r.max_error,
                relative_error: r.relative_l2_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let hs: Vec<f64> = rows.iter().map(|r| r.dx).collect();
    let es: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let order = fitted_order(&hs, &es)?;
    Ok(ConvergenceStudy { rows, order })
}

/// Least-squares slope of `log E` against `log h`.
pub fn fitted_order(h: &[f64], errors: &[f64]) -> Result<f64> {
    if h.len() != errors.len() || h.len() < 2 {
        return Err(Error::Fit("need at least two (h, E) pairs of equal length".into()));
    }
    if h.iter().chain(errors).any(|v| !(*v > 0.0)) {
        return Err(Error::Fit("step sizes and errors must be positive".into()));
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("step sizes are all equal".into()));
    }
    Ok(sxy / sxx)
}
