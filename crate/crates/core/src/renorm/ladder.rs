//! The κ ladder comparing MHFE solutions of KPZ with mollified noise against
//! the Hopf–Cole transform of the spectral heat solution on the same noise,
//! and the joint (grid, κ) refinement study of the renormalized equation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{estimate_shift, hopf_cole, kappa_refinement_error, renormalized_forcing, Counterterm, RenormConstants, ShiftEstimate, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::mhfe::{Boundary, KpzParameters, Mesh1D, MhfeSolver};
use crate::noise::{draw_gaussian_matrix, Mollifier, MollifierKind, NoiseRealization, RngStream};
use crate::spectral::{step, Diffusion, Drift, Scheme, SemilinearProblem, SpectralField, SpectralOperator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderConfig {
    pub nu: f64,
    pub lambda: f64,
    pub kappas: Vec<f64>,
    pub mollifiers: Vec<MollifierKind>,
    /// MHFE cells on `[0, 1]`; the noise carries `cells − 1` modes.
    pub cells: usize,
    pub t_final: f64,
    /// Time step; defaults to `Δx³`.
    pub dt: Option<f64>,
    pub realizations: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// Trajectories are sampled every this many steps (and at the end).
    pub record_every: usize,
    pub counterterm: Counterterm,
    /// Robin transmission coefficient; defaults to `Δx/2`.
    pub chi: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            lambda: 2.0,
            kappas: vec![1.0, 0.5, 0.25, 0.125, 0.0625],
            mollifiers: vec![MollifierKind::Bump, MollifierKind::Gaussian],
            cells: 64,
            t_final: 1.0 / 64.0,
            dt: None,
            realizations: 20,
            seed: 2024,
            scheme: Scheme::EulerGalerkin,
            record_every: 64,
            counterterm: Counterterm::Grid,
            chi: None,
            tol: 1e-10,
            max_iters: 10_000,
        }
    }
}

impl LadderConfig {
    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| (1.0 / self.cells as f64).powi(3))
    }

    pub fn steps(&self) -> Result<usize> {
        step_count(self.t_final, self.dt())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) || !(self.lambda != 0.0) {
            return Err(invalid("nu must be positive and lambda nonzero"));
        }
        if self.kappas.is_empty() || self.kappas.iter().any(|k| !(*k > 0.0)) {
            return Err(invalid("kappa ladder must be nonempty and positive"));
        }
        if self.mollifiers.is_empty() || self.cells < 4 || self.realizations == 0 || self.record_every == 0 {
            return Err(invalid("need a mollifier, at least 4 cells, one realization and record_every >= 1"));
        }
        self.steps().map(|_| ())
    }
}

fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(t_final > 0.0) || !(dt > 0.0) {
        return Err(invalid(format!("invalid horizon T = {t_final}, dt = {dt}")));
    }
    let n = (t_final / dt).round();
    if n < 1.0 || (n * dt - t_final).abs() > 1e-9 * t_final {
        return Err(invalid(format!("dt = {dt} does not divide T = {t_final}")));
    }
    Ok(n as usize)
}

/// Per-(mollifier, κ) outcome of the ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub constants: RenormConstants,
    /// Classical-KPZ vs Hopf–Cole shift and residual.
    pub shift: ShiftEstimate,
    /// Realization-averaged spatial mean of the final height, without and with
    /// the counterterm.
    pub mean_classical: f64,
    pub mean_renormalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub config: LadderConfig,
    pub rows: Vec<LadderRow>,
    pub mean_hopf_cole: f64,
    /// Distance between the shift-corrected final profiles of the first two
    /// mollifiers, per κ.
    pub cross_distance: Vec<f64>,
}

impl LadderReport {
    pub fn rows_for(&self, kind: MollifierKind) -> Vec<&LadderRow> {
        self.rows.iter().filter(|r| r.constants.kind == kind).collect()
    }
}

struct RealizationOut {
    hc: Trajectory,
    /// Indexed like `LadderReport::rows`.
    classical: Vec<Trajectory>,
    renormalized_final: Vec<Vec<f64>>,
}

fn counterterm_value(choice: Counterterm, constants: &RenormConstants, nu: f64) -> Counterterm {
    match choice {
        // the Itô constants are derived for unit diffusion
        Counterterm::Ito => Counterterm::Fixed(constants.c_ito / nu),
        Counterterm::Grid => Counterterm::Fixed(constants.c_grid.unwrap_or(constants.c_ito) / nu),
        other => other,
    }
}

fn mhfe_params(nu: f64, lambda: f64, chi: Option<f64>, mesh: &Mesh1D, dt: f64, tol: f64, max_iters: usize) -> KpzParameters {
    let chi = chi.unwrap_or(0.5 * mesh.dx());
    KpzParameters::new(nu, lambda, chi, chi, dt).with_tolerance(tol, max_iters)
}

/// Marches the periodic MHFE solver from `h ≡ 0` under `forcing`, sampling
/// cell heights every `every` steps.
fn mhfe_trajectory(
    mesh: Mesh1D,
    params: KpzParameters,
    forcing: &crate::mhfe::GridForcing,
    every: usize,
) -> Result<Trajectory> {
    let mut solver = MhfeSolver::new(mesh, params, Boundary::Periodic, |_| 0.0)?;
    let mut traj = Trajectory::default();
    traj.push(0.0, solver.heights());
    let n = forcing.steps();
    for k in 1..=n {
        solver.step(forcing)?;
        if k % every == 0 || k == n {
            traj.push(solver.time(), solver.heights());
        }
    }
    Ok(traj)
}

/// `h = (2ν/λ) log z` for `dz = ν∂ₓ²z dt + (λ/2ν) z dW`, `z₀ ≡ 1`, sampled at
/// `points` every `every` steps.
fn hopf_cole_trajectory(
    noise: &NoiseRealization,
    nu: f64,
    lambda: f64,
    scheme: Scheme,
    points: &[f64],
    every: usize,
) -> Result<Trajectory> {
    let problem = SemilinearProblem::new(
        SpectralOperator::periodic_laplacian(noise.modes, nu)?,
        Drift::Zero,
        Diffusion::Multiplicative(lambda / (2.0 * nu)),
        noise.dt,
    )?;
    let scale = 2.0 * nu / lambda;
    let to_h = |z: &SpectralField| -> Result<Vec<f64>> {
        Ok(hopf_cole(&z.eval_many(points))?.into_iter().map(|v| scale * v).collect())
    };
    let mut z = SpectralField::constant(noise.modes, 1.0);
    let mut traj = Trajectory::default();
    traj.push(0.0, to_h(&z)?);
    for k in 1..=noise.n_time {
        z = step(scheme, &z, &problem, noise.row(k - 1))?;
        if k % every == 0 || k == noise.n_time {
            traj.push(k as f64 * noise.dt, to_h(&z)?);
        }
    }
    Ok(traj)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Runs the ladder: one noise realization per stream `(seed, r)` drives the
/// heat solver (unmollified) and, for every mollifier and κ, the MHFE solver
/// for classical and renormalized KPZ.
pub fn run_ladder(cfg: &LadderConfig) -> Result<LadderReport> {
    cfg.validate()?;
    let modes = cfg.cells - 1;
    let dt = cfg.dt();
    let n_steps = cfg.steps()?;
    let mesh = Mesh1D::new(0.0, 1.0, cfg.cells)?;
    let nodes = mesh.nodes();
    let centers = mesh.centers();
    let params = mhfe_params(cfg.nu, cfg.lambda, cfg.chi, &mesh, dt, cfg.tol, cfg.max_iters);
    let ladder: Vec<(Mollifier, RenormConstants)> = cfg
        .mollifiers
        .iter()
        .flat_map(|&kind| cfg.kappas.iter().map(move |&k| (kind, k)))
        .map(|(kind, k)| {
            let phi = Mollifier::new(kind, k)?;
            Ok((phi, RenormConstants::compute(&phi, modes)?.on_grid(cfg.cells)))
        })
        .collect::<Result<_>>()?;

    let outs = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| -> Result<RealizationOut> {
            let noise = draw_gaussian_matrix(RngStream::new(cfg.seed, r as u64), n_steps, modes, dt)?;
            let hc = hopf_cole_trajectory(&noise, cfg.nu, cfg.lambda, cfg.scheme, &centers, cfg.record_every)?;
            let mut classical = Vec::with_capacity(ladder.len());
            let mut renormalized_final = Vec::with_capacity(ladder.len());
            for (phi, constants) in &ladder {
                let f = renormalized_forcing(&noise, phi, constants, Counterterm::None, cfg.lambda, &nodes)?;
                classical.push(mhfe_trajectory(mesh, params, &f, cfg.record_every)?);
                let choice = counterterm_value(cfg.counterterm, constants, cfg.nu);
                let f = renormalized_forcing(&noise, phi, constants, choice, cfg.lambda, &nodes)?;
                let t = mhfe_trajectory(mesh, params, &f, n_steps)?;
                renormalized_final.push(t.final_profile().expect("nonempty").to_vec());
            }
            Ok(RealizationOut { hc, classical, renormalized_final })
        })
        .collect::<Result<Vec<_>>>()?;

    let hc: Vec<Trajectory> = outs.iter().map(|o| o.hc.clone()).collect();
    let realizations = outs.len() as f64;
    let mut rows = Vec::with_capacity(ladder.len());
    for (i, (_, constants)) in ladder.iter().enumerate() {
        let kpz: Vec<Trajectory> = outs.iter().map(|o| o.classical[i].clone()).collect();
        let shift = estimate_shift(&kpz, &hc, cfg.lambda)?;
        let mean_classical = kpz.iter().map(|t| mean(t.final_profile().expect("nonempty"))).sum::<f64>() / realizations;
        let mean_renormalized = outs.iter().map(|o| mean(&o.renormalized_final[i])).sum::<f64>() / realizations;
        rows.push(LadderRow { constants: *constants, shift, mean_classical, mean_renormalized });
    }
    let mean_hopf_cole = hc.iter().map(|t| mean(t.final_profile().expect("nonempty"))).sum::<f64>() / realizations;

    let mut cross_distance = Vec::new();
    if cfg.mollifiers.len() >= 2 {
        let nk = cfg.kappas.len();
        for k in 0..nk {
            let (a, b) = (k, nk + k);
            let (sa, sb) = (
                0.5 * cfg.lambda * rows[a].shift.c_hat * cfg.t_final,
                0.5 * cfg.lambda * rows[b].shift.c_hat * cfg.t_final,
            );
            let sq = outs
                .iter()
                .map(|o| {
                    let p = o.classical[a].final_profile().expect("nonempty");
                    let q = o.classical[b].final_profile().expect("nonempty");
                    p.iter().zip(q).map(|(x, y)| (x - sa - (y - sb)).powi(2)).sum::<f64>() / p.len() as f64
                })
                .sum::<f64>()
                / realizations;
            cross_distance.push(sq.sqrt());
        }
    }
    Ok(LadderReport { config: cfg.clone(), rows, mean_hopf_cole, cross_distance })
}

/// One rung of the refinement study: `cells` MHFE cells with mollifier scale `kappa`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaLevel {
    pub cells: usize,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KappaRefinementConfig {
    pub nu: f64,
    pub lambda: f64,
    pub levels: Vec<KappaLevel>,
    pub mollifier: MollifierKind,
    pub t_final: f64,
    pub realizations: usize,
    pub seed: u64,
    pub counterterm: Counterterm,
    /// Robin transmission coefficient; defaults to `Δx/2`.
    pub chi: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for KappaRefinementConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            lambda: 2.0,
            levels: [(8, 0.25), (16, 0.125), (32, 0.0625), (64, 0.03125)]
                .into_iter()
                .map(|(cells, kappa)| KappaLevel { cells, kappa })
                .collect(),
            mollifier: MollifierKind::Bump,
            t_final: 1.0 / 64.0,
            realizations: 100,
            seed: 2024,
            counterterm: Counterterm::Grid,
            chi: None,
            tol: 1e-10,
            max_iters: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaRefinementRow {
    pub coarse: KappaLevel,
    pub fine: KappaLevel,
    pub error: f64,
    pub std_error: f64,
}

/// Consecutive-level errors of the renormalized MHFE solution at `t_final`.
/// Level `ℓ` uses `Δt = Δx³`; its noise is the finest tableau truncated to
/// `cells − 1` modes and summed over blocks of `(N_max/N)³` fine steps.
pub fn kappa_refinement_study(cfg: &KappaRefinementConfig) -> Result<Vec<KappaRefinementRow>> {
    if cfg.levels.len() < 2 || cfg.levels.windows(2).any(|w| w[1].cells <= w[0].cells) {
        return Err(invalid("need at least two levels with increasing cell counts"));
    }
    if cfg.realizations == 0 {
        return Err(invalid("need at least one realization"));
    }
    let finest = *cfg.levels.last().expect("nonempty");
    let dt_fine = (1.0 / finest.cells as f64).powi(3);
    let n_fine = step_count(cfg.t_final, dt_fine)?;
    let factors = cfg
        .levels
        .iter()
        .map(|l| {
            if finest.cells % l.cells != 0 {
                return Err(Error::Config(format!("{} cells do not nest in {}", l.cells, finest.cells)));
            }
            Ok((finest.cells / l.cells).pow(3))
        })
        .collect::<Result<Vec<_>>>()?;
    let setups = cfg
        .levels
        .iter()
        .map(|l| {
            let phi = Mollifier::new(cfg.mollifier, l.kappa)?;
            let constants = RenormConstants::compute(&phi, l.cells - 1)?.on_grid(l.cells);
            let mesh = Mesh1D::new(0.0, 1.0, l.cells)?;
            let dt = (1.0 / l.cells as f64).powi(3);
            Ok((phi, constants, mesh, mhfe_params(cfg.nu, cfg.lambda, cfg.chi, &mesh, dt, cfg.tol, cfg.max_iters)))
        })
        .collect::<Result<Vec<_>>>()?;

    let finals = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| -> Result<Vec<Vec<f64>>> {
            let fine = draw_gaussian_matrix(RngStream::new(cfg.seed, r as u64), n_fine, finest.cells - 1, dt_fine)?;
            setups
                .iter()
                .zip(&cfg.levels)
                .zip(&factors)
                .map(|(((phi, constants, mesh, params), level), &f)| {
                    let noise = fine.truncate_modes(level.cells - 1)?.coarsen_time(f)?;
                    let choice = counterterm_value(cfg.counterterm, constants, cfg.nu);
                    let forcing = renormalized_forcing(&noise, phi, constants, choice, cfg.lambda, &mesh.nodes())?;
                    let t = mhfe_trajectory(*mesh, *params, &forcing, usize::MAX)?;
                    Ok(t.final_profile().expect("nonempty").to_vec())
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    (0..cfg.levels.len() - 1)
        .map(|k| {
            let coarse: Vec<Vec<f64>> = finals.iter().map(|f| f[k].clone()).collect();
            let fine: Vec<Vec<f64>> = finals.iter().map(|f| f[k + 1].clone()).collect();
            let (error, std_error) = kappa_refinement_error(&coarse, &fine)?;
            Ok(KappaRefinementRow { coarse: cfg.levels[k], fine: cfg.levels[k + 1], error, std_error })
        })
        .collect()
}
