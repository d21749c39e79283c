//! Hopf–Cole transform, renormalization constants for mollified noise, the
//! renormalized forcing for the MHFE solver and the shift/refinement
//! comparisons between the two solution notions.

mod crossover;
mod ladder;

pub use crossover::{crossover_roughness, CrossoverConfig, CrossoverReport};
pub use ladder::{
    kappa_refinement_study, run_ladder, KappaLevel, KappaRefinementConfig, KappaRefinementRow,
    LadderConfig, LadderReport, LadderRow,
};

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::basis::{wavenumber, TrigBasis};
use crate::error::{invalid, Error, Result};
use crate::mhfe::GridForcing;
use crate::noise::{mollify_spectral, white_noise_field, Mollifier, MollifierKind, NoiseRealization, Profile};

/// Pointwise natural logarithm.
pub fn hopf_cole(z: &[f64]) -> Result<Vec<f64>> {
    z.iter()
        .enumerate()
        .map(|(index, &value)| if value > 0.0 { Ok(value.ln()) } else { Err(Error::Positivity { index, value }) })
        .collect()
}

const QUAD_TOL: f64 = 1e-12;
/// Half-width used for profiles without compact support.
const UNBOUNDED_REACH: f64 = 40.0;

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, what: &str) -> Result<f64> {
    let out = quadrature::double_exponential::integrate(f, a, b, QUAD_TOL);
    if !out.integral.is_finite() || out.error_estimate > 1e-8 * out.integral.abs().max(1.0) {
        return Err(Error::Numeric(format!(
            "{what}: quadrature on [{a}, {b}] did not converge (estimate {}, error {})",
            out.integral, out.error_estimate
        )));
    }
    Ok(out.integral)
}

fn reach(phi: &dyn Profile) -> f64 {
    phi.support().unwrap_or(UNBOUNDED_REACH)
}

/// `(1/κ) ∫ φ²`.
pub fn renorm_c1(phi: &dyn Profile, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(invalid(format!("kappa must be positive, got {kappa}")));
    }
    let r = reach(phi);
    let half = integrate(|u| phi.eval(u).powi(2), 0.0, r, "C1")?;
    let other = integrate(|u| phi.eval(u).powi(2), -r, 0.0, "C1")?;
    Ok((half + other) / kappa)
}

/// `(4π/√3)|log κ|`.
pub fn c2_leading(kappa: f64) -> f64 {
    4.0 * PI / 3f64.sqrt() * kappa.ln().abs()
}

/// The double-integral part of `C⁽²⁾`,
/// `−8 ∫_{ℝ₊} ∫_ℝ x φ′(y) φ(y) φ²(y) log φ(y) / (x² − xy + y²) dx dy`.
/// The inner integral only converges as a principal value; it is taken
/// symmetrically, `∫₀^∞ [k(x, y) + k(−x, y)] dx`.
pub fn c2_correction(phi: &dyn Profile) -> Result<f64> {
    let kernel = |x: f64, y: f64| x / (x * x - x * y + y * y);
    let inner = |y: f64| -> Result<f64> {
        // x = y·t/(1 − t) maps (0, 1) onto (0, ∞)
        integrate(
            |t| {
                let x = y * t / (1.0 - t);
                let jac = y / ((1.0 - t) * (1.0 - t));
                if !jac.is_finite() {
                    return 0.0;
                }
                (kernel(x, y) + kernel(-x, y)) * jac
            },
            0.0,
            1.0,
            "C2 inner",
        )
    };
    let weight = |y: f64| {
        let p = phi.eval(y);
        if p <= 0.0 {
            0.0
        } else {
            phi.derivative(y) * p.powi(3) * p.ln()
        }
    };
    let failure = std::cell::RefCell::new(None);
    let outer = integrate(
        |y| {
            if y <= 0.0 {
                return 0.0;
            }
            let w = weight(y);
            if w == 0.0 {
                return 0.0;
            }
            match inner(y) {
                Ok(v) => w * v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        reach(phi),
        "C2 outer",
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(-8.0 * outer?)
}

/// `C⁽²⁾ = (4π/√3)|log κ| + correction` and `C⁽³⁾ = −C⁽²⁾/4`.
pub fn renorm_c2_c3(phi: &dyn Profile, kappa: f64) -> Result<(f64, f64)> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(invalid(format!("kappa must lie in (0, 1], got {kappa}")));
    }
    let c2 = c2_leading(kappa) + c2_correction(phi)?;
    Ok((c2, -c2 / 4.0))
}

/// `½ Σ_j φ(κ n_j)²` over the first `modes` basis functions: the Itô
/// correction of `log z` for `dz = ∂ₓ²z dt + z dW_κ`, and the shift between
/// classical KPZ with mollified noise and the Hopf–Cole solution.
pub fn ito_constant(phi: &Mollifier, modes: usize) -> f64 {
    0.5 * (0..modes).map(|j| phi.multiplier(wavenumber(j) as f64).powi(2)).sum::<f64>()
}

/// [`ito_constant`] with each mode weighted by `cos²(π n Δx)`, the symbol of
/// the trapezoid rule that turns nodal forcing into cell forcing on a grid of
/// `cells` cells. This is the shift the MHFE discretization actually sees.
pub fn grid_ito_constant(phi: &Mollifier, modes: usize, cells: usize) -> f64 {
    let dx = 1.0 / cells as f64;
    0.5 * (0..modes)
        .map(|j| {
            let n = wavenumber(j) as f64;
            (phi.multiplier(n) * (PI * n * dx).cos()).powi(2)
        })
        .sum::<f64>()
}

/// Which constant the renormalized equation subtracts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Counterterm {
    /// Classical KPZ.
    None,
    /// [`ito_constant`] for the noise's mode count.
    Ito,
    /// [`grid_ito_constant`] for the noise's mode count and the solver grid.
    #[default]
    Grid,
    /// `C⁽¹⁾ + C⁽²⁾ + C⁽³⁾`.
    Total,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormConstants {
    pub kind: MollifierKind,
    pub kappa: f64,
    /// Mode count `c_ito` was summed over.
    pub modes: usize,
    pub c1: f64,
    pub c2: f64,
    pub c2_leading: f64,
    pub c3: f64,
    pub c_total: f64,
    pub c_ito: f64,
    /// Set by [`RenormConstants::on_grid`].
    pub c_grid: Option<f64>,
    pub cells: Option<usize>,
}

impl RenormConstants {
    pub fn compute(phi: &Mollifier, modes: usize) -> Result<Self> {
        let c1 = renorm_c1(&phi.kind, phi.kappa)?;
        let (c2, c3) = renorm_c2_c3(&phi.kind, phi.kappa.min(1.0))?;
        Ok(Self {
            kind: phi.kind,
            kappa: phi.kappa,
            modes,
            c1,
            c2,
            c2_leading: c2_leading(phi.kappa.min(1.0)),
            c3,
            c_total: c1 + c2 + c3,
            c_ito: ito_constant(phi, modes),
            c_grid: None,
            cells: None,
        })
    }

    /// Adds the grid-consistent constant for a `cells`-cell unit interval.
    pub fn on_grid(mut self, cells: usize) -> Self {
        let phi = Mollifier { kind: self.kind, kappa: self.kappa };
        self.c_grid = Some(grid_ito_constant(&phi, self.modes, cells));
        self.cells = Some(cells);
        self
    }

    pub fn value(&self, choice: Counterterm) -> Result<f64> {
        Ok(match choice {
            Counterterm::None => 0.0,
            Counterterm::Ito => self.c_ito,
            Counterterm::Grid => self
                .c_grid
                .ok_or_else(|| Error::Config("grid constant requested but no grid was given".into()))?,
            Counterterm::Total => self.c_total,
            Counterterm::Fixed(c) => c,
        })
    }
}

/// Nodal forcing `ξ_κ − (λ/2)C` per time step, where `ξ_κ` is the
/// spectrally mollified noise evaluated at `nodes`.
pub fn renormalized_forcing(
    noise: &NoiseRealization,
    phi: &Mollifier,
    constants: &RenormConstants,
    counterterm: Counterterm,
    lambda: f64,
    nodes: &[f64],
) -> Result<GridForcing> {
    if constants.kind != phi.kind || (constants.kappa - phi.kappa).abs() > 1e-12 * phi.kappa {
        return Err(Error::Config(format!(
            "constants were computed for {:?} at kappa = {}, noise is mollified with {:?} at kappa = {}",
            constants.kind, constants.kappa, phi.kind, phi.kappa
        )));
    }
    if matches!(counterterm, Counterterm::Ito | Counterterm::Grid) && constants.modes != noise.modes {
        return Err(Error::Config(format!(
            "Itô constant summed over {} modes, noise has {}",
            constants.modes, noise.modes
        )));
    }
    if counterterm == Counterterm::Grid && constants.cells != Some(nodes.len().saturating_sub(1)) {
        return Err(Error::Config(format!(
            "grid constant computed for {:?} cells, forcing sampled on {} nodes",
            constants.cells,
            nodes.len()
        )));
    }
    let shift = 0.5 * lambda * constants.value(counterterm)?;
    let mollified = mollify_spectral(noise, phi);
    let field = white_noise_field(&mollified, &TrigBasis::new(noise.modes)?, nodes)?;
    let values = field.into_iter().flat_map(|row| row.into_iter().map(move |v| v - shift)).collect();
    GridForcing::new(values, nodes.len())
}

/// Profiles of one realization at increasing times.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub profiles: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn push(&mut self, t: f64, profile: Vec<f64>) {
        self.times.push(t);
        self.profiles.push(profile);
    }

    pub fn final_profile(&self) -> Option<&[f64]> {
        self.profiles.last().map(|p| p.as_slice())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftEstimate {
    pub c_hat: f64,
    /// Standard error over realizations.
    pub c_hat_se: f64,
    /// Monte Carlo distance of the final profiles after removing the shift.
    pub residual: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Fits `mean_x(h_kpz − h_hc)(t) ≈ (λ/2)·Ĉ·t` through the origin, pooled over
/// realizations, and measures what is left at the final time.
pub fn estimate_shift(kpz: &[Trajectory], hc: &[Trajectory], lambda: f64) -> Result<ShiftEstimate> {
    if kpz.is_empty() || kpz.len() != hc.len() {
        return Err(Error::Dimension(format!("{} KPZ vs {} Hopf–Cole trajectories", kpz.len(), hc.len())));
    }
    let mut per_realization = Vec::with_capacity(kpz.len());
    let mut sq = 0.0;
    for (a, b) in kpz.iter().zip(hc) {
        if a.times.len() != b.times.len() || a.times.iter().zip(&b.times).any(|(s, t)| (s - t).abs() > 1e-12) {
            return Err(Error::Dimension("trajectories are recorded at different times".into()));
        }
        let (mut num, mut den) = (0.0, 0.0);
        for ((t, p), q) in a.times.iter().zip(&a.profiles).zip(&b.profiles) {
            if p.len() != q.len() {
                return Err(Error::Dimension("profiles on different grids".into()));
            }
            let s = 0.5 * lambda * t;
            let d = mean(p) - mean(q);
            num += s * d;
            den += s * s;
        }
        if !(den > 0.0) {
            return Err(Error::Fit("shift fit needs a positive time and nonzero λ".into()));
        }
        per_realization.push((num / den, a));
    }
    let slopes: Vec<f64> = per_realization.iter().map(|(c, _)| *c).collect();
    let (c_hat, c_hat_se) = crate::stats::mean_stderr(&slopes);
    for ((_, a), b) in per_realization.iter().zip(hc) {
        let t = *a.times.last().expect("nonempty");
        let shift = 0.5 * lambda * c_hat * t;
        let p = a.final_profile().expect("nonempty");
        let q = b.final_profile().expect("nonempty");
        sq += p.iter().zip(q).map(|(x, y)| (x - shift - y).powi(2)).sum::<f64>() / p.len() as f64;
    }
    Ok(ShiftEstimate { c_hat, c_hat_se, residual: (sq / kpz.len() as f64).sqrt() })
}

/// `sqrt(E ∫₀¹ |h_fine − h_coarse|² dx)` for cell-average profiles, each fine
/// cell lying inside one coarse cell. Returns the norm and its standard error.
pub fn kappa_refinement_error(coarse: &[Vec<f64>], fine: &[Vec<f64>]) -> Result<(f64, f64)> {
    if coarse.is_empty() || coarse.len() != fine.len() {
        return Err(Error::Dimension(format!("{} coarse vs {} fine realizations", coarse.len(), fine.len())));
    }
    let mut sq = Vec::with_capacity(coarse.len());
    for (c, f) in coarse.iter().zip(fine) {
        if c.is_empty() || f.len() % c.len() != 0 {
            return Err(Error::Config(format!("a {}-cell grid does not nest in a {}-cell grid", c.len(), f.len())));
        }
        let r = f.len() / c.len();
        sq.push(f.iter().enumerate().map(|(i, v)| (v - c[i / r]).powi(2)).sum::<f64>() / f.len() as f64);
    }
    let (m, se) = crate::stats::mean_stderr(&sq);
    let err = m.sqrt();
    Ok((err, if err > 0.0 { se / (2.0 * err) } else { 0.0 }))
}

/// CSV with one line per κ: the analytic constants, the empirical shift and
/// the residual profile error.
pub fn write_comparison_csv<W: Write>(w: W, rows: &[LadderRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "mollifier", "kappa", "C1", "C2", "C3", "C_total", "C_ito", "C_grid", "C_hat_empirical", "C_hat_se", "residual_error",
        "mean_classical", "mean_renormalized",
    ])?;
    for r in rows {
        let c = &r.constants;
        out.write_record([
            format!("{:?}", c.kind).to_lowercase(),
            format!("{}", c.kappa),
            format!("{:e}", c.c1),
            format!("{:e}", c.c2),
            format!("{:e}", c.c3),
            format!("{:e}", c.c_total),
            format!("{:e}", c.c_ito),
            c.c_grid.map(|v| format!("{v:e}")).unwrap_or_default(),
            format!("{:e}", r.shift.c_hat),
            format!("{:e}", r.shift.c_hat_se),
            format!("{:e}", r.shift.residual),
            format!("{:e}", r.mean_classical),
            format!("{:e}", r.mean_renormalized),
        ])?;
    }
    out.flush()?;
    Ok(())
}
