//! Lattice growth models (ballistic deposition, random deposition, random
//! deposition with surface relaxation) on a periodic strip, and the roughness
//! scaling toolkit.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::noise::RngStream;
use crate::stats::{fit_loglog, mean_stderr, LineFit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GrowthModel {
    #[serde(rename = "bd")]
    Ballistic,
    #[serde(rename = "rd")]
    Random,
    #[serde(rename = "rd-relax")]
    RandomRelax,
}

impl std::str::FromStr for GrowthModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bd" => Ok(GrowthModel::Ballistic),
            "rd" => Ok(GrowthModel::Random),
            "rd-relax" => Ok(GrowthModel::RandomRelax),
            other => Err(Error::Config(format!("unknown growth model `{other}`"))),
        }
    }
}

/// Column heights of a periodic strip of `L` sites.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    heights: Vec<i64>,
    deposited: u64,
}

impl Lattice {
    pub fn new(l: usize) -> Result<Self> {
        if l == 0 {
            return Err(invalid("lattice needs at least one site"));
        }
        Ok(Self { heights: vec![0; l], deposited: 0 })
    }

    pub fn from_heights(heights: Vec<i64>) -> Result<Self> {
        if heights.is_empty() {
            return Err(invalid("lattice needs at least one site"));
        }
        Ok(Self { heights, deposited: 0 })
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    pub fn heights(&self) -> &[i64] {
        &self.heights
    }

    pub fn deposited(&self) -> u64 {
        self.deposited
    }

    /// Time in monolayers.
    pub fn time(&self) -> f64 {
        self.deposited as f64 / self.len() as f64
    }

    fn neighbors(&self, i: usize) -> (usize, usize) {
        let l = self.len();
        ((i + l - 1) % l, (i + 1) % l)
    }

    /// The particle sticks at the first contact: `h(i) ← max(h(i−1), h(i)+1, h(i+1))`.
    pub fn deposit_bd(&mut self, i: usize) {
        let (left, right) = self.neighbors(i);
        let h = &mut self.heights;
        h[i] = (h[i] + 1).max(h[left]).max(h[right]);
        self.deposited += 1;
    }

    pub fn deposit_rd(&mut self, i: usize) {
        self.heights[i] += 1;
        self.deposited += 1;
    }

    /// Lands on the lowest of `i−1, i, i+1`, staying at `i` on ties with it
    /// and picking uniformly between equally low neighbours. Returns the site.
    pub fn deposit_rd_relax<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) -> usize {
        let (left, right) = self.neighbors(i);
        let h = &self.heights;
        let site = if h[i] <= h[left] && h[i] <= h[right] {
            i
        } else if h[left] < h[right] {
            left
        } else if h[right] < h[left] {
            right
        } else if rng.random_bool(0.5) {
            left
        } else {
            right
        };
        self.heights[site] += 1;
        self.deposited += 1;
        site
    }

    pub fn deposit<R: Rng + ?Sized>(&mut self, model: GrowthModel, i: usize, rng: &mut R) {
        match model {
            GrowthModel::Ballistic => self.deposit_bd(i),
            GrowthModel::Random => self.deposit_rd(i),
            GrowthModel::RandomRelax => {
                self.deposit_rd_relax(i, rng);
            }
        }
    }

    /// Mean height and roughness of the current interface.
    pub fn stats(&self) -> (f64, f64) {
        height_stats(&self.heights)
    }
}

/// `(h̄, w)` with `w = sqrt((1/L) Σ (h_i − h̄)²)`.
pub fn height_stats(heights: &[i64]) -> (f64, f64) {
    let n = heights.len() as f64;
    let mean = heights.iter().map(|&h| h as f64).sum::<f64>() / n;
    let var = heights.iter().map(|&h| (h as f64 - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// [`height_stats`] for real-valued interfaces.
pub fn height_stats_f64(heights: &[f64]) -> (f64, f64) {
    let n = heights.len() as f64;
    let mean = heights.iter().sum::<f64>() / n;
    let var = heights.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean height and roughness sampled over time (in monolayers).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoughnessSeries {
    pub times: Vec<f64>,
    pub mean_height: Vec<f64>,
    pub roughness: Vec<f64>,
}

impl RoughnessSeries {
    pub fn push(&mut self, t: f64, mean: f64, w: f64) {
        self.times.push(t);
        self.mean_height.push(mean);
        self.roughness.push(w);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "mean_height", "roughness"])?;
        for i in 0..self.len() {
            out.serialize((self.times[i], self.mean_height[i], self.roughness[i]))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Statistics of interface snapshots `(t, heights)`.
pub fn roughness_stats(snapshots: &[(f64, Vec<i64>)]) -> Result<RoughnessSeries> {
    if snapshots.is_empty() {
        return Err(invalid("no snapshots"));
    }
    let mut s = RoughnessSeries::default();
    for (t, h) in snapshots {
        if h.is_empty() {
            return Err(invalid("empty snapshot"));
        }
        let (mean, w) = height_stats(h);
        s.push(*t, mean, w);
    }
    Ok(s)
}

/// Roughly `per_decade` log-spaced times in `[t_min, t_max]`, deduplicated
/// after rounding to whole deposits on a strip of `l` sites.
pub fn geometric_times(t_min: f64, t_max: f64, per_decade: usize, l: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0) || !(t_max >= t_min) || per_decade == 0 || l == 0 {
        return Err(invalid("need 0 < t_min <= t_max, per_decade >= 1 and l >= 1"));
    }
    let decades = (t_max / t_min).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    let mut out: Vec<f64> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = (t_min * 10f64.powf(k as f64 / per_decade as f64)).min(t_max);
        let t = (t * l as f64).ceil() / l as f64;
        if out.last().is_none_or(|&p| t > p) {
            out.push(t);
        }
    }
    Ok(out)
}

/// One growth run sampled at `times` (monolayers, increasing).
pub fn simulate(model: GrowthModel, l: usize, times: &[f64], stream: RngStream) -> Result<RoughnessSeries> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(invalid("sample times must be nonnegative and nondecreasing"));
    }
    let mut lattice = Lattice::new(l)?;
    let mut rng = stream.rng();
    let mut series = RoughnessSeries::default();
    for &t in times {
        let target = (t * l as f64).ceil() as u64;
        while lattice.deposited < target {
            let i = rng.random_range(0..l);
            lattice.deposit(model, i, &mut rng);
        }
        let (mean, w) = lattice.stats();
        series.push(lattice.time(), mean, w);
    }
    Ok(series)
}

/// Ensemble-averaged roughness of one strip width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSeries {
    pub model: GrowthModel,
    pub l: usize,
    pub runs: usize,
    /// Ensemble means of `h̄` and `w`.
    pub series: RoughnessSeries,
    pub roughness_stderr: Vec<f64>,
}

/// `runs` independent runs; run `r` uses stream `(seed, r)`.
pub fn run_ensemble(model: GrowthModel, l: usize, times: &[f64], runs: usize, seed: u64) -> Result<EnsembleSeries> {
    if runs == 0 {
        return Err(invalid("need at least one run"));
    }
    let all = (0..runs)
        .into_par_iter()
        .map(|r| simulate(model, l, times, RngStream::new(seed, r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut series = RoughnessSeries::default();
    let mut roughness_stderr = Vec::with_capacity(times.len());
    for k in 0..all[0].len() {
        let ws: Vec<f64> = all.iter().map(|s| s.roughness[k]).collect();
        let hs: Vec<f64> = all.iter().map(|s| s.mean_height[k]).collect();
        let (w, se) = mean_stderr(&ws);
        series.push(all[0].times[k], mean_stderr(&hs).0, w);
        roughness_stderr.push(se);
    }
    Ok(EnsembleSeries { model, l, runs, series, roughness_stderr })
}

/// Per-width pieces of a scaling fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeFit {
    pub l: usize,
    pub beta: LineFit,
    pub beta_window: (f64, f64),
    pub w_sat: f64,
    pub saturation_window: (f64, f64),
    pub t_cross: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub alpha: f64,
    pub alpha_se: f64,
    pub beta: f64,
    pub beta_se: f64,
    pub z: f64,
    pub z_se: f64,
    /// `z − α/β` and its propagated standard error.
    pub closure: f64,
    pub closure_se: f64,
    pub sizes: Vec<SizeFit>,
}

fn window(series: &RoughnessSeries, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    series
        .times
        .iter()
        .zip(&series.roughness)
        .filter(|(t, w)| **t >= lo && **t <= hi && **w > 0.0)
        .map(|(t, w)| (*t, *w))
        .unzip()
}

/// Log-log slope of `w(t)` over `t ∈ [lo, hi]`.
pub fn fit_growth_exponent(series: &RoughnessSeries, lo: f64, hi: f64) -> Result<LineFit> {
    let (t, w) = window(series, lo, hi);
    if t.len() < 3 {
        return Err(Error::Fit(format!("growth window [{lo}, {hi}] holds {} samples", t.len())));
    }
    fit_loglog(&t, &w)
}

fn fit_size(s: &EnsembleSeries) -> Result<SizeFit> {
    let series = &s.series;
    let n = series.len();
    if n < 8 {
        return Err(Error::Fit(format!("L = {}: only {n} samples", s.l)));
    }
    let t_last = series.times[n - 1];
    let late = &series.roughness[3 * n / 4..];
    let w_late = late.iter().sum::<f64>() / late.len() as f64;
    let mut t_cross = series
        .times
        .iter()
        .zip(&series.roughness)
        .find(|(_, w)| **w >= 0.9 * w_late)
        .map(|(t, _)| *t)
        .unwrap_or(t_last);
    let mut result = None;
    for _ in 0..2 {
        let beta_window = (1.0, t_cross / 4.0);
        let saturation_window = (4.0 * t_cross, t_last);
        let beta = fit_growth_exponent(series, beta_window.0, beta_window.1).map_err(|e| {
            Error::Fit(format!("L = {}: β window [1, {:.3}] (t_x ≈ {t_cross:.3}): {e}", s.l, beta_window.1))
        })?;
        let (ts, ws) = window(series, saturation_window.0, saturation_window.1);
        if ts.is_empty() {
            return Err(Error::Fit(format!(
                "L = {}: no samples in the saturation window [{:.3}, {t_last:.3}]",
                s.l, saturation_window.0
            )));
        }
        let w_sat = ws.iter().sum::<f64>() / ws.len() as f64;
        // intersection of log w = a + β log t with log w = log w_sat
        t_cross = ((w_sat.ln() - beta.intercept) / beta.slope).exp();
        result = Some(SizeFit { l: s.l, beta, beta_window, w_sat, saturation_window, t_cross });
    }
    Ok(result.expect("loop runs"))
}

/// β from the pre-crossover window of the widest strip, α from saturated
/// widths, `z` from crossover times. Per-width fits are kept in `sizes`.
pub fn fit_exponents(ensembles: &[EnsembleSeries]) -> Result<ScalingFit> {
    if ensembles.len() < 2 {
        return Err(Error::Fit("exponent fit needs at least two widths".into()));
    }
    let sizes = ensembles.iter().map(fit_size).collect::<Result<Vec<_>>>()?;
    let ls: Vec<f64> = sizes.iter().map(|s| s.l as f64).collect();
    let alpha = fit_loglog(&ls, &sizes.iter().map(|s| s.w_sat).collect::<Vec<_>>())?;
    let zfit = fit_loglog(&ls, &sizes.iter().map(|s| s.t_cross).collect::<Vec<_>>())?;
    // the largest strip has the longest pre-crossover window
    let widest = sizes.iter().max_by_key(|s| s.l).expect("nonempty");
    let (beta, beta_se) = (widest.beta.slope, widest.beta.slope_se);
    let closure = zfit.slope - alpha.slope / beta;
    let closure_se = (zfit.slope_se.powi(2)
        + (alpha.slope_se / beta).powi(2)
        + (alpha.slope * beta_se / (beta * beta)).powi(2))
    .sqrt();
    Ok(ScalingFit {
        alpha: alpha.slope,
        alpha_se: alpha.slope_se,
        beta,
        beta_se,
        z: zfit.slope,
        z_se: zfit.slope_se,
        closure,
        closure_se,
        sizes,
    })
}

/// Curves rescaled by `u = t/L^z`, `y = w/L^α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Collapse {
    pub alpha: f64,
    pub z: f64,
    pub curves: Vec<(usize, Vec<(f64, f64)>)>,
    /// RMS over a common log-spaced `u` grid of the across-curve standard
    /// deviation of `log y`.
    pub spread: f64,
}

impl Collapse {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["L", "u", "y"])?;
        for (l, pts) in &self.curves {
            for (u, y) in pts {
                out.serialize((l, u, y))?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn interp_log(pts: &[(f64, f64)], u: f64) -> f64 {
    let lu = u.ln();
    let k = pts.partition_point(|p| p.0.ln() <= lu).clamp(1, pts.len() - 1);
    let (u0, y0) = (pts[k - 1].0.ln(), pts[k - 1].1.ln());
    let (u1, y1) = (pts[k].0.ln(), pts[k].1.ln());
    if u1 == u0 {
        return y0;
    }
    y0 + (y1 - y0) * (lu - u0) / (u1 - u0)
}

/// Family–Vicsek rescaling and its collapse quality on `grid_points` common
/// abscissae.
pub fn family_vicsek_collapse(ensembles: &[EnsembleSeries], alpha: f64, z: f64, grid_points: usize) -> Result<Collapse> {
    if ensembles.is_empty() || grid_points < 2 {
        return Err(invalid("collapse needs curves and at least two grid points"));
    }
    let curves: Vec<(usize, Vec<(f64, f64)>)> = ensembles
        .iter()
        .map(|e| {
            let l = e.l as f64;
            let pts = e
                .series
                .times
                .iter()
                .zip(&e.series.roughness)
                .filter(|(t, w)| **t > 0.0 && **w > 0.0)
                .map(|(t, w)| (t / l.powf(z), w / l.powf(alpha)))
                .collect::<Vec<_>>();
            (e.l, pts)
        })
        .collect();
    if curves.iter().any(|(_, p)| p.len() < 2) {
        return Err(Error::Fit("a curve has fewer than two positive samples".into()));
    }
    let lo = curves.iter().map(|(_, p)| p[0].0).fold(f64::MIN, f64::max);
    let hi = curves.iter().map(|(_, p)| p[p.len() - 1].0).fold(f64::MAX, f64::min);
    if !(hi > lo) {
        return Err(Error::Fit(format!("rescaled time ranges do not overlap (lo = {lo}, hi = {hi})")));
    }
    let mut acc = 0.0;
    for k in 0..grid_points {
        let u = (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (grid_points - 1) as f64).exp();
        let ys: Vec<f64> = curves.iter().map(|(_, p)| interp_log(p, u)).collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        acc += ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64;
    }
    Ok(Collapse { alpha, z, curves, spread: (acc / grid_points as f64).sqrt() })
}
