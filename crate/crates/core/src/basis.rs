//! Real orthonormal trigonometric basis of L²(0, 1) and FFT transforms
//! between its coefficients and uniform periodic grids.
//!
//! Mode `j` has wavenumber `n = ⌈j/2⌉`: `χ₀ = 1`, `χ_{2n−1} = √2 cos 2πnx`,
//! `χ_{2n} = √2 sin 2πnx`.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Wavenumber of mode `j`.
pub fn wavenumber(j: usize) -> usize {
    j.div_ceil(2)
}

/// `χ_j(x)`.
pub fn basis_function(j: usize, x: f64) -> f64 {
    let n = wavenumber(j) as f64;
    match j {
        0 => 1.0,
        j if j % 2 == 1 => SQRT_2 * (2.0 * PI * n * x).cos(),
        _ => SQRT_2 * (2.0 * PI * n * x).sin(),
    }
}

/// The first `modes` basis functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrigBasis {
    pub modes: usize,
}

impl TrigBasis {
    pub fn new(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(invalid("basis needs at least one mode"));
        }
        Ok(Self { modes })
    }

    pub fn max_wavenumber(&self) -> usize {
        wavenumber(self.modes - 1)
    }

    /// Eigenvalues `(2πn)²` of `−∂ₓ²`, nondecreasing in `j`.
    pub fn laplacian_eigenvalues(&self) -> Vec<f64> {
        (0..self.modes).map(|j| (2.0 * PI * wavenumber(j) as f64).powi(2)).collect()
    }

    pub fn eval(&self, coeffs: &[f64], x: f64) -> f64 {
        coeffs.iter().enumerate().map(|(j, c)| c * basis_function(j, x)).sum()
    }

    /// Row-major `points × modes` table of `χ_j(x_i)`.
    pub fn table(&self, points: &[f64]) -> Vec<f64> {
        let mut t = Vec::with_capacity(points.len() * self.modes);
        for &x in points {
            t.extend((0..self.modes).map(|j| basis_function(j, x)));
        }
        t
    }

    /// `Σ_j χ_j(x)²`.
    pub fn sum_of_squares(&self, x: f64) -> f64 {
        (0..self.modes).map(|j| basis_function(j, x).powi(2)).sum()
    }
}

/// `x_i = i / m` for `i = 0..m`.
pub fn periodic_grid(m: usize) -> Vec<f64> {
    (0..m).map(|i| i as f64 / m as f64).collect()
}

/// Cached FFT plans for one (modes, grid size) pair.
#[derive(Clone)]
pub struct Transform {
    basis: TrigBasis,
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("modes", &self.basis.modes).field("m", &self.m).finish()
    }
}

impl Transform {
    /// Needs `m > 2 n_max` so every mode is resolved on the grid.
    pub fn new(basis: TrigBasis, m: usize) -> Result<Self> {
        if m <= 2 * basis.max_wavenumber() {
            return Err(Error::Dimension(format!(
                "grid of {m} points cannot resolve wavenumber {}",
                basis.max_wavenumber()
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            basis,
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        })
    }

    pub fn basis(&self) -> TrigBasis {
        self.basis
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    /// Values at `x_i = i/m`.
    pub fn to_grid(&self, coeffs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.basis.modes);
        let m = self.m;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        buf[0].re = coeffs[0];
        let h = SQRT_2 / 2.0;
        for (j, &c) in coeffs.iter().enumerate().skip(1) {
            let n = wavenumber(j);
            let z = if j % 2 == 1 { Complex64::new(c * h, 0.0) } else { Complex64::new(0.0, -c * h) };
            buf[n] += z;
            buf[m - n] += z.conj();
        }
        self.inverse.process(&mut buf);
        for (o, z) in out.iter_mut().zip(&buf) {
            *o = z.re;
        }
    }

    /// Orthogonal projection of grid values onto the basis (exact for fields
    /// band-limited below `m/2` up to the resolved modes).
    pub fn from_grid(&self, values: &[f64], out: &mut [f64]) {
        debug_assert_eq!(values.len(), self.m);
        let m = self.m as f64;
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        out[0] = buf[0].re / m;
        for (j, o) in out.iter_mut().enumerate().skip(1) {
            let z = buf[wavenumber(j)] / m;
            *o = if j % 2 == 1 { SQRT_2 * z.re } else { -SQRT_2 * z.im };
        }
    }
}
