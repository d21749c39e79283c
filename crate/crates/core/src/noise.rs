//! Seeded Gaussian randomness: Brownian increments of the truncated cylindrical
//! Wiener process, space-time white-noise fields and their mollified versions.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::basis::{wavenumber, TrigBasis};
use crate::error::{invalid, Error, Result};

/// A reproducible random stream: one `(seed, stream_id)` pair per Monte Carlo
/// realization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// ChaCha8 keyed by the seed, with the stream id selecting an independent
    /// keystream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// `n` standard normal draws.
    pub fn normals(&self, n: usize) -> Vec<f64> {
        let mut rng = self.rng();
        (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    }
}

/// Gaussian increments `ΔW_j` over `n_time` steps and `modes` basis modes,
/// row-major in time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    pub dt: f64,
    pub modes: usize,
    pub n_time: usize,
    increments: Vec<f64>,
}

const BINARY_MAGIC: &[u8; 8] = b"KPZNOISE";

impl NoiseRealization {
    pub fn from_parts(increments: Vec<f64>, n_time: usize, modes: usize, dt: f64) -> Result<Self> {
        check_shape(modes, dt)?;
        if increments.len() != n_time * modes {
            return Err(Error::Dimension(format!(
                "{} increments for a {n_time}×{modes} tableau",
                increments.len()
            )));
        }
        Ok(Self { dt, modes, n_time, increments })
    }

    pub fn zeros(n_time: usize, modes: usize, dt: f64) -> Result<Self> {
        Self::from_parts(vec![0.0; n_time * modes], n_time, modes, dt)
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.increments[n * self.modes..(n + 1) * self.modes]
    }

    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.increments[n * self.modes + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_time).map(|n| self.get(n, j)).collect()
    }

    /// Keeps the first `modes` columns; a coarse run driven by the result sees
    /// the same Brownian paths as the fine one on the shared modes.
    pub fn truncate_modes(&self, modes: usize) -> Result<Self> {
        if modes == 0 || modes > self.modes {
            return Err(invalid(format!("cannot truncate {} modes to {modes}", self.modes)));
        }
        let inc = (0..self.n_time).flat_map(|n| self.row(n)[..modes].iter().copied()).collect();
        Self::from_parts(inc, self.n_time, modes, self.dt)
    }

    /// Sums blocks of `factor` consecutive steps: increments over `factor·Δt`.
    pub fn coarsen_time(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.n_time % factor != 0 {
            return Err(invalid(format!("{} steps do not split into blocks of {factor}", self.n_time)));
        }
        let n_time = self.n_time / factor;
        let mut inc = vec![0.0; n_time * self.modes];
        for n in 0..self.n_time {
            let dst = &mut inc[(n / factor) * self.modes..(n / factor + 1) * self.modes];
            for (d, s) in dst.iter_mut().zip(self.row(n)) {
                *d += s;
            }
        }
        Self::from_parts(inc, n_time, self.modes, self.dt * factor as f64)
    }

    /// `a·self + b·other` on identical shapes.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.modes != other.modes || self.n_time != other.n_time {
            return Err(Error::Dimension("noise tableaux differ in shape".into()));
        }
        let inc = self.increments.iter().zip(&other.increments).map(|(x, y)| a * x + b * y).collect();
        Self::from_parts(inc, self.n_time, self.modes, self.dt)
    }

    /// CSV dump: a `dt,modes,n_time` header record, then one record per step.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
        out.write_record(["dt", "modes", "n_time"])?;
        out.write_record([format!("{:e}", self.dt), self.modes.to_string(), self.n_time.to_string()])?;
        for n in 0..self.n_time {
            out.write_record(self.row(n).iter().map(|v| format!("{v:e}")))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).has_headers(true).from_reader(r);
        let mut records = rdr.records();
        let head = records.next().ok_or_else(|| Error::Config("noise CSV is empty".into()))??;
        let field = |i: usize| -> Result<&str> {
            head.get(i).ok_or_else(|| Error::Config(format!("noise CSV header lacks field {i}")))
        };
        let parse_err = |e: std::num::ParseFloatError| Error::Config(format!("noise CSV: {e}"));
        let dt: f64 = field(0)?.trim().parse().map_err(parse_err)?;
        let modes: usize = field(1)?.trim().parse().map_err(|e| Error::Config(format!("noise CSV: {e}")))?;
        let n_time: usize = field(2)?.trim().parse().map_err(|e| Error::Config(format!("noise CSV: {e}")))?;
        let mut inc = Vec::with_capacity(modes * n_time);
        for rec in records {
            for v in rec?.iter() {
                inc.push(v.trim().parse().map_err(parse_err)?);
            }
        }
        Self::from_parts(inc, n_time, modes, dt)
    }

    /// Little-endian binary dump: magic, `modes`, `n_time` (u64), `dt`, values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.modes as u64).to_le_bytes())?;
        w.write_all(&(self.n_time as u64).to_le_bytes())?;
        w.write_all(&self.dt.to_le_bytes())?;
        for v in &self.increments {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Config("not a noise dump (bad magic)".into()));
        }
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let modes = u64::from_le_bytes(next(&mut r)?) as usize;
        let n_time = u64::from_le_bytes(next(&mut r)?) as usize;
        let dt = f64::from_le_bytes(next(&mut r)?);
        check_shape(modes, dt)?;
        let mut inc = Vec::with_capacity(modes * n_time);
        for _ in 0..modes * n_time {
            inc.push(f64::from_le_bytes(next(&mut r)?));
        }
        Self::from_parts(inc, n_time, modes, dt)
    }
}

fn check_shape(modes: usize, dt: f64) -> Result<()> {
    if modes == 0 {
        return Err(invalid("noise tableau needs at least one mode"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

/// I.i.d. `N(0, dt)` increments, drawn row by row from `stream`.
pub fn draw_gaussian_matrix(stream: RngStream, n_time: usize, modes: usize, dt: f64) -> Result<NoiseRealization> {
    check_shape(modes, dt)?;
    if n_time == 0 {
        return Err(invalid("noise tableau needs at least one time step"));
    }
    let sd = dt.sqrt();
    let inc = stream.normals(n_time * modes).into_iter().map(|z| z * sd).collect();
    NoiseRealization::from_parts(inc, n_time, modes, dt)
}

/// `ζ(t_n, x_i) = Σ_j ΔW_j(t_n) χ_j(x_i) / Δt`, one row per time step.
pub fn white_noise_field(real: &NoiseRealization, basis: &TrigBasis, points: &[f64]) -> Result<Vec<Vec<f64>>> {
    if basis.modes != real.modes {
        return Err(Error::Dimension(format!(
            "basis has {} modes, noise has {}",
            basis.modes, real.modes
        )));
    }
    let table = basis.table(points);
    let inv_dt = 1.0 / real.dt;
    Ok((0..real.n_time)
        .map(|n| {
            let row = real.row(n);
            table
                .chunks_exact(real.modes)
                .map(|chi| chi.iter().zip(row).map(|(c, w)| c * w).sum::<f64>() * inv_dt)
                .collect()
        })
        .collect())
}

/// A unit-scale mollifier profile.
pub trait Profile: Sync {
    fn eval(&self, u: f64) -> f64;
    /// Half-width of the support, `None` when unbounded.
    fn support(&self) -> Option<f64>;
    /// `φ′(u)`; central differences unless overridden.
    fn derivative(&self, u: f64) -> f64 {
        let h = 1e-6 * u.abs().max(1e-2);
        (self.eval(u + h) - self.eval(u - h)) / (2.0 * h)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierKind {
    /// `exp(1 − 1/(1 − u²))` on `|u| < 1`, zero outside.
    Bump,
    /// `exp(−u²/2)`.
    Gaussian,
}

impl Profile for MollifierKind {
    fn eval(&self, u: f64) -> f64 {
        match self {
            MollifierKind::Bump => {
                let s = u * u;
                if s < 1.0 {
                    (1.0 - 1.0 / (1.0 - s)).exp()
                } else {
                    0.0
                }
            }
            MollifierKind::Gaussian => (-0.5 * u * u).exp(),
        }
    }

    fn support(&self) -> Option<f64> {
        match self {
            MollifierKind::Bump => Some(1.0),
            MollifierKind::Gaussian => None,
        }
    }

    fn derivative(&self, u: f64) -> f64 {
        match self {
            MollifierKind::Bump => {
                let s = 1.0 - u * u;
                if s > 0.0 {
                    -2.0 * u / (s * s) * self.eval(u)
                } else {
                    0.0
                }
            }
            MollifierKind::Gaussian => -u * self.eval(u),
        }
    }
}

/// Closure-backed profile.
pub struct FnProfile<F> {
    pub f: F,
    pub support: Option<f64>,
}

impl<F: Fn(f64) -> f64 + Sync> Profile for FnProfile<F> {
    fn eval(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    fn support(&self) -> Option<f64> {
        self.support
    }
}

/// An even profile `φ` with `φ(0) = 1` at scale `κ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub kind: MollifierKind,
    pub kappa: f64,
}

/// Multiples of the standard deviation kept by the truncated Gaussian kernel.
const GAUSSIAN_CUTOFF: f64 = 8.0;

impl Mollifier {
    pub fn new(kind: MollifierKind, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(invalid(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self { kind, kappa })
    }

    pub fn bump(kappa: f64) -> Result<Self> {
        Self::new(MollifierKind::Bump, kappa)
    }

    pub fn gaussian(kappa: f64) -> Result<Self> {
        Self::new(MollifierKind::Gaussian, kappa)
    }

    /// Unit-scale profile `φ(u)`.
    pub fn profile(&self, u: f64) -> f64 {
        self.kind.eval(u)
    }

    /// Fourier multiplier `φ(κn)` for integer frequency `n`.
    pub fn multiplier(&self, n: f64) -> f64 {
        self.kind.eval(self.kappa * n)
    }

    /// Unnormalized spatial kernel `φ(x/κ)`.
    pub fn kernel(&self, x: f64) -> f64 {
        self.kind.eval(x / self.kappa)
    }

    /// Half-width beyond which the spatial kernel is treated as zero.
    pub fn kernel_radius(&self) -> f64 {
        match self.kind {
            MollifierKind::Bump => self.kappa,
            MollifierKind::Gaussian => GAUSSIAN_CUTOFF * self.kappa,
        }
    }
}

/// Multiplies column `j` by `φ(κ n_j)`, `n_j` the wavenumber of mode `j`.
pub fn mollify_spectral(real: &NoiseRealization, phi: &Mollifier) -> NoiseRealization {
    let weights: Vec<f64> = (0..real.modes).map(|j| phi.multiplier(wavenumber(j) as f64)).collect();
    let inc = real
        .increments
        .chunks_exact(real.modes)
        .flat_map(|row| row.iter().zip(&weights).map(|(v, w)| v * w))
        .collect();
    NoiseRealization { increments: inc, ..*real }
}

/// Discrete periodic convolution of samples on `x_i = i·L/m` with the kernel
/// `φ(x/κ)` rescaled to unit discrete mass.
pub fn mollify_convolution(field: &[f64], phi: &Mollifier, length: f64) -> Result<Vec<f64>> {
    let m = field.len();
    if m == 0 {
        return Err(invalid("empty field"));
    }
    if 2.0 * phi.kernel_radius() > length {
        return Err(invalid(format!(
            "kernel support {} exceeds the domain length {length}",
            2.0 * phi.kernel_radius()
        )));
    }
    let dx = length / m as f64;
    let reach = ((phi.kernel_radius() / dx).floor() as usize).min(m / 2);
    let offsets: Vec<isize> = (-(reach as isize)..=reach as isize).collect();
    let mut weights: Vec<f64> = offsets.iter().map(|&d| phi.kernel(d as f64 * dx)).collect();
    // an even m with reach = m/2 would count the antipodal point twice
    if 2 * reach == m {
        weights[0] = 0.0;
    }
    let mass: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= mass;
    }
    let mi = m as isize;
    Ok((0..mi)
        .map(|i| {
            offsets
                .iter()
                .zip(&weights)
                .map(|(&d, w)| w * field[(i - d).rem_euclid(mi) as usize])
                .sum()
        })
        .collect())
}

/// Heat kernel `G_k(u) = exp(−u²/(2k²)) / (k√(2π))`.
pub fn gaussian_kernel(k: f64, u: f64) -> f64 {
    (-(u * u) / (2.0 * k * k)).exp() / (k * (2.0 * PI).sqrt())
}

/// `C_k(0) = ∫ G_k(u)² du = 1/(2k√π)`.
pub fn gaussian_c0(k: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(invalid(format!("k must be positive, got {k}")));
    }
    Ok(0.5 / (k * PI.sqrt()))
}

/// `∫_{−a}^{a} G_k(u)² du` by double-exponential quadrature.
pub fn gaussian_c0_quadrature(k: f64, a: f64) -> Result<f64> {
    if !(k > 0.0) || !(a > 0.0) {
        return Err(invalid("k and the half-width must be positive"));
    }
    Ok(quadrature::double_exponential::integrate(|u| gaussian_kernel(k, u).powi(2), -a, a, 1e-14).integral)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_values() {
        let b = MollifierKind::Bump;
        assert_eq!(b.eval(0.0), 1.0);
        assert_eq!(b.eval(1.0), 0.0);
        assert_eq!(b.eval(-1.5), 0.0);
        assert!((b.eval(0.5) - (-1.0f64 / 3.0).exp()).abs() < 1e-15);
        assert!((b.eval(0.5) - 0.7165).abs() < 1e-4);
    }

    #[test]
    fn c0_values() {
        assert!((gaussian_c0(1.0).unwrap() - 0.28209479).abs() < 1e-8);
        assert!((gaussian_c0(0.5).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-14);
        assert!(gaussian_c0(0.0).is_err());
    }

    #[test]
    fn coarsen_and_truncate() {
        let r = NoiseRealization::from_parts((0..12).map(f64::from).collect(), 4, 3, 0.5).unwrap();
        let c = r.coarsen_time(2).unwrap();
        assert_eq!(c.row(0), &[3.0, 5.0, 7.0]);
        assert_eq!(c.dt, 1.0);
        let t = r.truncate_modes(2).unwrap();
        assert_eq!(t.row(3), &[9.0, 10.0]);
        assert!(r.coarsen_time(3).is_err());
    }
}
