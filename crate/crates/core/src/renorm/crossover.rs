//! Roughness of the Hopf–Cole transform of the spectral heat solution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hopf_cole;
use crate::error::{invalid, Result};
use crate::growth::{height_stats_f64, RoughnessSeries};
use crate::noise::{draw_gaussian_matrix, RngStream};
use crate::spectral::{step, Scheme, SemilinearProblem, SpectralField};
use crate::stats::{fit_two_regimes, mean_stderr, TwoRegimeFit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossoverConfig {
    pub nu: f64,
    /// Noise coefficient of the heat equation `dz = ν∂ₓ²z dt + λ z dW`.
    pub lambda: f64,
    pub modes: usize,
    pub steps: usize,
    pub t_final: f64,
    pub scheme: Scheme,
    pub realizations: usize,
    pub seed: u64,
    pub samples_per_decade: usize,
}

impl Default for CrossoverConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            lambda: 1.0,
            modes: 128,
            steps: 128 * 128,
            t_final: 1.0,
            scheme: Scheme::Milstein,
            realizations: 50,
            seed: 2024,
            samples_per_decade: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverReport {
    /// Realization-averaged roughness of `h = log z`.
    pub series: RoughnessSeries,
    pub roughness_stderr: Vec<f64>,
    pub fit: TwoRegimeFit,
    /// Early log-log slope over the magnitude of the late one.
    pub slope_ratio: f64,
}

/// Step indices roughly log-spaced between 1 and `n`.
fn sample_steps(n: usize, per_decade: usize) -> Vec<usize> {
    let decades = (n as f64).log10();
    let count = (decades * per_decade as f64).ceil() as usize;
    let mut out: Vec<usize> = (0..=count)
        .map(|k| (10f64.powf(k as f64 / per_decade as f64).round() as usize).clamp(1, n))
        .collect();
    out.push(n);
    out.dedup();
    out
}

/// Runs `realizations` heat solutions from `z₀ ≡ 1`, records the roughness of
/// `log z` on the solver grid and splits its log-log curve into two regimes.
pub fn crossover_roughness(cfg: &CrossoverConfig) -> Result<CrossoverReport> {
    if cfg.steps == 0 || cfg.realizations == 0 || cfg.samples_per_decade == 0 || !(cfg.t_final > 0.0) {
        return Err(invalid("steps, realizations, samples_per_decade and t_final must be positive"));
    }
    let dt = cfg.t_final / cfg.steps as f64;
    let problem = SemilinearProblem::heat(cfg.modes, cfg.nu, cfg.lambda, dt)?;
    let samples = sample_steps(cfg.steps, cfg.samples_per_decade);
    let grid = problem.transform().grid_size();

    let curves = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| -> Result<Vec<(f64, f64)>> {
            let noise = draw_gaussian_matrix(RngStream::new(cfg.seed, r as u64), cfg.steps, cfg.modes, dt)?;
            let mut z = SpectralField::constant(cfg.modes, 1.0);
            let mut values = vec![0.0; grid];
            let mut w = Vec::with_capacity(samples.len());
            let mut next = 0;
            for k in 1..=cfg.steps {
                z = step(cfg.scheme, &z, &problem, noise.row(k - 1))?;
                if samples[next] == k {
                    problem.transform().to_grid(&z.coeffs, &mut values);
                    w.push(height_stats_f64(&hopf_cole(&values)?));
                    next += 1;
                }
            }
            Ok(w)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut series = RoughnessSeries::default();
    let mut roughness_stderr = Vec::with_capacity(samples.len());
    for (i, &k) in samples.iter().enumerate() {
        let hs: Vec<f64> = curves.iter().map(|c| c[i].0).collect();
        let ws: Vec<f64> = curves.iter().map(|c| c[i].1).collect();
        let (m, se) = mean_stderr(&ws);
        series.push(k as f64 * dt, mean_stderr(&hs).0, m);
        roughness_stderr.push(se);
    }
    let lt: Vec<f64> = series.times.iter().map(|t| t.ln()).collect();
    let lw: Vec<f64> = series.roughness.iter().map(|w| w.ln()).collect();
    let fit = fit_two_regimes(&lt, &lw, 3)?;
    let slope_ratio = fit.early.slope / fit.late.slope.abs();
    Ok(CrossoverReport { series, roughness_stderr, fit, slope_ratio })
}
