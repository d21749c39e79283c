//! Monte Carlo error norm, refinement studies and trajectory export.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{integrate_final, Diffusion, Drift, Scheme, SemilinearProblem, SpectralField, SpectralOperator};
use crate::basis::periodic_grid;
use crate::error::{invalid, Error, Result};
use crate::noise::{draw_gaussian_matrix, RngStream};

/// `sqrt(mean_r ∫₀¹ |a_r − b_r|² dx)` with the periodic rectangle rule on each
/// realization's samples.
pub fn mc_error_norm(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() {
        return Err(invalid("no realizations"));
    }
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("{} vs {} realizations", a.len(), b.len())));
    }
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::Dimension("realizations sampled on different grids".into()));
        }
        total += x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / x.len() as f64;
    }
    Ok((total / a.len() as f64).sqrt())
}

/// How the number of time steps grows with the number of modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `N = J²`.
    Quadratic,
    /// `N = c·J²`.
    ScaledQuadratic(usize),
    Fixed(usize),
}

impl StepRule {
    pub fn steps(&self, modes: usize) -> usize {
        match *self {
            StepRule::Quadratic => modes * modes,
            StepRule::ScaledQuadratic(c) => c * modes * modes,
            StepRule::Fixed(n) => n,
        }
    }
}

pub type InitialData = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A refinement study of `dX = [νAX + F(X)]dt + G(X)dW` up to `t_final`.
#[derive(Clone)]
pub struct RefinementSetup {
    pub nu: f64,
    pub drift: Drift,
    pub diffusion: Diffusion,
    pub initial: InitialData,
    pub t_final: f64,
    pub steps: StepRule,
}

impl RefinementSetup {
    /// Heat instance `dX = ν∂ₓ²X dt + λX dW`, `X₀ ≡ 1`.
    pub fn heat(nu: f64, lambda: f64, t_final: f64) -> Self {
        Self {
            nu,
            drift: Drift::Zero,
            diffusion: Diffusion::Multiplicative(lambda),
            initial: Arc::new(|_| 1.0),
            t_final,
            steps: StepRule::Quadratic,
        }
    }

    pub fn problem(&self, modes: usize) -> Result<SemilinearProblem> {
        let n = self.steps.steps(modes);
        if n == 0 {
            return Err(invalid("step rule gives zero steps"));
        }
        SemilinearProblem::new(
            SpectralOperator::periodic_laplacian(modes, self.nu)?,
            self.drift.clone(),
            self.diffusion.clone(),
            self.t_final / n as f64,
        )
    }
}

impl std::fmt::Debug for RefinementSetup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RefinementSetup")
            .field("nu", &self.nu)
            .field("drift", &self.drift)
            .field("diffusion", &self.diffusion)
            .field("t_final", &self.t_final)
            .field("steps", &self.steps)
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub j_coarse: usize,
    pub j_fine: usize,
    pub error: f64,
    /// Standard error of the mean-square estimate, propagated to the norm.
    pub std_error: f64,
}

/// For each consecutive pair in `js`, the Monte Carlo norm of the difference
/// between final states. Every realization draws one tableau at the finest
/// resolution; coarser runs use its leading columns summed over time blocks.
pub fn refinement_study(
    setup: &RefinementSetup,
    scheme: Scheme,
    js: &[usize],
    realizations: usize,
    seed: u64,
) -> Result<Vec<RefinementRow>> {
    if js.len() < 2 || js.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("mode list must be increasing with at least two entries"));
    }
    if realizations == 0 {
        return Err(invalid("need at least one realization"));
    }
    let j_max = *js.last().expect("nonempty");
    let n_max = setup.steps.steps(j_max);
    let factors = js
        .iter()
        .map(|&j| {
            let n = setup.steps.steps(j);
            if n == 0 || n_max % n != 0 {
                Err(invalid(format!("{n} steps at J = {j} do not nest in {n_max}")))
            } else {
                Ok(n_max / n)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let problems = js.iter().map(|&j| setup.problem(j)).collect::<Result<Vec<_>>>()?;
    let initials: Vec<SpectralField> =
        problems.iter().map(|p| SpectralField::from_fn(p.transform(), |x| (setup.initial)(x))).collect();
    let eval_points = periodic_grid(4 * j_max);
    let dt_fine = setup.t_final / n_max as f64;

    let per_realization = (0..realizations)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let fine = draw_gaussian_matrix(RngStream::new(seed, r as u64), n_max, j_max, dt_fine)?;
            let finals = problems
                .iter()
                .zip(&initials)
                .zip(&factors)
                .map(|((p, y0), &f)| {
                    let noise = fine.truncate_modes(p.modes())?.coarsen_time(f)?;
                    Ok(integrate_final(p, scheme, y0, &noise)?.eval_many(&eval_points))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(finals
                .windows(2)
                .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / w[0].len() as f64)
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let m = realizations as f64;
    Ok((0..js.len() - 1)
        .map(|k| {
            let sq: Vec<f64> = per_realization.iter().map(|v| v[k]).collect();
            let mean = sq.iter().sum::<f64>() / m;
            let var = if realizations > 1 {
                sq.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1.0)
            } else {
                0.0
            };
            let error = mean.sqrt();
            let std_error = if error > 0.0 { (var / m).sqrt() / (2.0 * error) } else { 0.0 };
            RefinementRow { j_coarse: js[k], j_fine: js[k + 1], error, std_error }
        })
        .collect())
}

/// CSV with columns `t, x_1, …` holding each state evaluated at `points`.
pub fn write_trajectory_csv<W: Write>(w: W, trajectory: &[SpectralField], dt: f64, points: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend(points.iter().map(|x| format!("x={x}")));
    out.write_record(&header)?;
    for (n, state) in trajectory.iter().enumerate() {
        let mut row = vec![format!("{}", n as f64 * dt)];
        row.extend(state.eval_many(points).iter().map(|v| format!("{v:e}")));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}
