use crate::error::{Error, Result};

/// Source term `f(t, x)` sampled at mesh nodes.
pub trait NodalForcing: Sync {
    /// Writes `f(t_step, x_j)` for every node into `out` (`out.len() == nodes.len()`).
    /// `step` counts from 1 for the first backward-Euler step.
    fn fill(&self, step: usize, time: f64, nodes: &[f64], out: &mut [f64]);
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroForcing;

impl NodalForcing for ZeroForcing {
    fn fill(&self, _step: usize, _time: f64, _nodes: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantForcing(pub f64);

impl NodalForcing for ConstantForcing {
    fn fill(&self, _step: usize, _time: f64, _nodes: &[f64], out: &mut [f64]) {
        out.fill(self.0);
    }
}

/// Forcing given by a closure `f(t, x)`.
pub struct FnForcing<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> NodalForcing for FnForcing<F> {
    fn fill(&self, _step: usize, time: f64, nodes: &[f64], out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(nodes) {
            *o = (self.0)(time, x);
        }
    }
}

/// Pre-sampled forcing: one row of nodal values per time step (row-major).
#[derive(Clone, Debug)]
pub struct GridForcing {
    values: Vec<f64>,
    n_nodes: usize,
}

impl GridForcing {
    pub fn new(values: Vec<f64>, n_nodes: usize) -> Result<Self> {
        if n_nodes == 0 || values.len() % n_nodes != 0 {
            return Err(Error::Dimension(format!(
                "{} forcing values do not form rows of {n_nodes} nodes",
                values.len()
            )));
        }
        Ok(Self { values, n_nodes })
    }

    pub fn steps(&self) -> usize {
        self.values.len() / self.n_nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn row(&self, step_index: usize) -> &[f64] {
        &self.values[step_index * self.n_nodes..(step_index + 1) * self.n_nodes]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl NodalForcing for GridForcing {
    fn fill(&self, step: usize, _time: f64, _nodes: &[f64], out: &mut [f64]) {
        out.copy_from_slice(self.row(step - 1));
    }
}
