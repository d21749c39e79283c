//! Backward-Euler time marching with a Red-Black fixed point per step.

use std::sync::Arc;

use super::sweep::{red_black_sweep, LocalFactors, SweepContext};
use super::{ElementState, KpzParameters, Mesh1D, NodalForcing};
use crate::error::{invalid, Error, Result};

pub type BoundaryFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Boundary {
    Periodic,
    /// `h(t, a)` and `h(t, b)`.
    Dirichlet { left: BoundaryFn, right: BoundaryFn },
}

impl Boundary {
    pub fn dirichlet(
        left: impl Fn(f64) -> f64 + Send + Sync + 'static,
        right: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Boundary::Dirichlet { left: Arc::new(left), right: Arc::new(right) }
    }

    pub fn constant(left: f64, right: f64) -> Self {
        Self::dirichlet(move |_| left, move |_| right)
    }

    fn values(&self, t: f64) -> Option<(f64, f64)> {
        match self {
            Boundary::Periodic => None,
            Boundary::Dirichlet { left, right } => Some((left(t), right(t))),
        }
    }
}

impl std::fmt::Debug for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Periodic => write!(f, "Periodic"),
            Boundary::Dirichlet { .. } => write!(f, "Dirichlet"),
        }
    }
}

/// Which cell-height fields a march keeps.
#[derive(Clone, Debug, PartialEq)]
pub enum Record {
    FinalOnly,
    /// Initial field plus every `k`-th step (and the final one).
    Every(usize),
}

#[derive(Clone, Debug)]
pub struct MarchResult {
    pub times: Vec<f64>,
    /// Cell heights `H_{j+1/2}` at each recorded time.
    pub heights: Vec<Vec<f64>>,
    pub final_states: Vec<ElementState>,
    pub total_sweeps: usize,
    pub max_sweeps_per_step: usize,
}

impl MarchResult {
    pub fn final_heights(&self) -> &[f64] {
        self.heights.last().expect("march records at least the final field")
    }
}

/// Incremental MHFE integrator; [`time_march`] drives it to a final time.
pub struct MhfeSolver {
    mesh: Mesh1D,
    params: KpzParameters,
    boundary: Boundary,
    factors: LocalFactors,
    nodes: Vec<f64>,
    states: Vec<ElementState>,
    scratch: Vec<ElementState>,
    h_previous: Vec<f64>,
    forcing_buf: Vec<f64>,
    step: usize,
    time: f64,
    pub total_sweeps: usize,
    pub max_sweeps_per_step: usize,
}

impl MhfeSolver {
    /// Initializes cell heights by midpoint sampling of `h0`, traces by nodal
    /// sampling and fluxes from the half-cell relations.
    pub fn new(
        mesh: Mesh1D,
        params: KpzParameters,
        boundary: Boundary,
        h0: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let centers: Vec<f64> = mesh.centers().into_iter().map(&h0).collect();
        Self::from_cell_heights(mesh, params, boundary, &centers, Some(&h0))
    }

    /// Starts from given cell heights; traces come from `h0` when available and
    /// from neighbour averages otherwise.
    pub fn from_cell_heights(
        mesh: Mesh1D,
        params: KpzParameters,
        boundary: Boundary,
        heights: &[f64],
        h0: Option<&dyn Fn(f64) -> f64>,
    ) -> Result<Self> {
        params.validate()?;
        if heights.len() != mesh.m {
            return Err(Error::Dimension(format!(
                "{} initial heights for {} cells",
                heights.len(),
                mesh.m
            )));
        }
        let m = mesh.m;
        let dx = mesh.dx();
        let periodic = matches!(boundary, Boundary::Periodic);
        let node_value = |j: usize| -> f64 {
            if let Some(f) = h0 {
                return f(mesh.node(j));
            }
            match j {
                0 if periodic => 0.5 * (heights[0] + heights[m - 1]),
                0 => heights[0],
                j if j == m && periodic => 0.5 * (heights[0] + heights[m - 1]),
                j if j == m => heights[m - 1],
                j => 0.5 * (heights[j - 1] + heights[j]),
            }
        };
        let half = params.alpha() * dx / 2.0;
        let states: Vec<ElementState> = (0..m)
            .map(|j| {
                let (l1, l2, h) = (node_value(j), node_value(j + 1), heights[j]);
                ElementState { l1, l2, u1: (l1 - h) / half, u2: (h - l2) / half, h }
            })
            .collect();
        let factors = LocalFactors::new(&params, dx)?;
        Ok(Self {
            nodes: mesh.nodes(),
            h_previous: heights.to_vec(),
            forcing_buf: vec![0.0; m + 1],
            scratch: Vec::with_capacity(m),
            mesh,
            params,
            boundary,
            factors,
            states,
            step: 0,
            time: 0.0,
            total_sweeps: 0,
            max_sweeps_per_step: 0,
        })
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn params(&self) -> &KpzParameters {
        &self.params
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn states(&self) -> &[ElementState] {
        &self.states
    }

    pub fn heights(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.h).collect()
    }

    /// Advances one time step, iterating sweeps from the previous level's
    /// states until the relative change drops to `tol`.
    pub fn step(&mut self, forcing: &dyn NodalForcing) -> Result<usize> {
        self.step += 1;
        let t = self.step as f64 * self.params.dt;
        forcing.fill(self.step, t, &self.nodes, &mut self.forcing_buf);
        for (hp, s) in self.h_previous.iter_mut().zip(&self.states) {
            *hp = s.h;
        }
        let dirichlet = self.boundary.values(t);
        let ctx = SweepContext::new(
            &self.params,
            self.mesh.dx(),
            dirichlet,
            &self.h_previous,
            &self.forcing_buf,
            &self.factors,
        );
        let mut change = f64::INFINITY;
        let mut sweeps = 0;
        while sweeps < self.params.max_iters {
            change = red_black_sweep(&mut self.states, &mut self.scratch, &ctx);
            sweeps += 1;
            if !change.is_finite() {
                break;
            }
            if change <= self.params.tol {
                break;
            }
        }
        self.time = t;
        self.total_sweeps += sweeps;
        self.max_sweeps_per_step = self.max_sweeps_per_step.max(sweeps);
        if !(change <= self.params.tol) {
            return Err(Error::NonConvergence {
                step: self.step,
                time: t,
                iterations: sweeps,
                last_change: change,
            });
        }
        Ok(sweeps)
    }
}

/// Number of steps of size `dt` in `[0, t_final]`; `dt` must divide `t_final`
/// up to rounding.
pub(crate) fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(t_final >= 0.0) || !(dt > 0.0) {
        return Err(invalid(format!("invalid horizon T = {t_final}, dt = {dt}")));
    }
    let n = (t_final / dt).round();
    if ((n * dt) - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(invalid(format!("dt = {dt} does not divide T = {t_final}")));
    }
    Ok(n as usize)
}

/// Marches from `h0` to `t_final`.
pub fn time_march(
    mesh: Mesh1D,
    params: KpzParameters,
    boundary: Boundary,
    h0: impl Fn(f64) -> f64,
    forcing: &dyn NodalForcing,
    t_final: f64,
    record: Record,
) -> Result<MarchResult> {
    let mut solver = MhfeSolver::new(mesh, params, boundary, h0)?;
    let n_steps = step_count(t_final, params.dt)?;
    let mut times = vec![0.0];
    let mut heights = vec![solver.heights()];
    for n in 1..=n_steps {
        solver.step(forcing)?;
        let keep = match record {
            Record::FinalOnly => false,
            Record::Every(k) => k > 0 && n % k == 0,
        };
        if keep || n == n_steps {
            times.push(solver.time());
            heights.push(solver.heights());
        }
    }
    if let Record::FinalOnly = record {
        // drop the initial snapshot unless it is also the final one
        if heights.len() > 1 {
            times.remove(0);
            heights.remove(0);
        }
    }
    Ok(MarchResult {
        times,
        heights,
        final_states: solver.states().to_vec(),
        total_sweeps: solver.total_sweeps,
        max_sweeps_per_step: solver.max_sweeps_per_step,
    })
}
