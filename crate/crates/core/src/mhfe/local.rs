//! Element-local 5×5 systems of the hybridized mixed method.
//!
//! Unknown ordering is `[l1, l2, U1, U2, H]`: interface traces at the left and
//! right node, nodal fluxes `u = -ν ∂ₓh` at the same nodes, and the cellwise
//! constant height.

use super::{ElementState, KpzParameters};
use crate::error::{Error, Result};

pub type Matrix5 = [[f64; 5]; 5];
pub type Vector5 = [f64; 5];

/// Which rows of the local system carry Dirichlet data instead of Robin data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Interior,
    LeftBoundary,
    RightBoundary,
    /// A single element touching both ends (only for `m = 1` style tests).
    BothBoundaries,
}

/// Interface data one element reads from a neighbour at the shared node.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NeighborTrace {
    pub trace: f64,
    pub flux: f64,
}

impl NeighborTrace {
    /// Data the right-hand neighbour sees from `state` (its right node).
    pub fn right_of(state: &ElementState) -> Self {
        Self { trace: state.l2, flux: state.u2 }
    }

    /// Data the left-hand neighbour sees from `state` (its left node).
    pub fn left_of(state: &ElementState) -> Self {
        Self { trace: state.l1, flux: state.u1 }
    }
}

/// Inputs of one local assembly.
#[derive(Clone, Copy, Debug)]
pub struct LocalInputs {
    /// The element's own iterate `k-1`; only its fluxes enter (lagged `U²`).
    pub previous: ElementState,
    pub left: NeighborTrace,
    pub right: NeighborTrace,
    /// Height of the element at the previous time level.
    pub h_previous_time: f64,
    /// Forcing at the left and right node.
    pub forcing: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalSystem {
    pub matrix: Matrix5,
    pub rhs: Vector5,
}

/// Assembles the Robin-transmission fixed-point system of one interior element.
pub fn assemble_local(inputs: &LocalInputs, params: &KpzParameters, dx: f64) -> LocalSystem {
    LocalSystem {
        matrix: interior_matrix(params, dx),
        rhs: interior_rhs(inputs, params, dx),
    }
}

pub(crate) fn interior_matrix(params: &KpzParameters, dx: f64) -> Matrix5 {
    let (c1, c2) = (params.chi1, params.chi2);
    let half = params.alpha() * dx / 2.0;
    [
        [1.0, 0.0, c1, 0.0, 0.0],
        [0.0, 1.0, 0.0, -c2, 0.0],
        [0.0, 0.0, half + c1, 0.0, 1.0],
        [0.0, 0.0, 0.0, half + c2, -1.0],
        [0.0, 0.0, -1.0, 1.0, dx / params.dt],
    ]
}

pub(crate) fn interior_rhs(inputs: &LocalInputs, params: &KpzParameters, dx: f64) -> Vector5 {
    let (c1, c2) = (params.chi1, params.chi2);
    let LocalInputs { previous, left, right, h_previous_time, forcing } = *inputs;
    let robin_left = left.trace + c1 * left.flux;
    let nonlinear = params.beta() * dx / 2.0 * (previous.u1 * previous.u1 + previous.u2 * previous.u2);
    [
        robin_left,
        right.trace - c2 * right.flux,
        robin_left,
        -right.trace + c2 * right.flux,
        dx / 2.0 * (forcing.0 + forcing.1) - nonlinear + dx / params.dt * h_previous_time,
    ]
}

fn check_kind(kind: ElementKind, allowed: &[ElementKind], what: &str) -> Result<()> {
    if allowed.contains(&kind) {
        Ok(())
    } else {
        Err(Error::Logic(format!("{what} applied to a {kind:?} element")))
    }
}

/// Replaces the left Robin rows by the Dirichlet condition `l1 = g`,
/// `αΔx/2·U1 + H = g`.
pub fn apply_dirichlet_left(
    system: &mut LocalSystem,
    kind: ElementKind,
    value: f64,
    params: &KpzParameters,
    dx: f64,
) -> Result<()> {
    check_kind(kind, &[ElementKind::LeftBoundary, ElementKind::BothBoundaries], "left Dirichlet row")?;
    let half = params.alpha() * dx / 2.0;
    system.matrix[0] = [1.0, 0.0, 0.0, 0.0, 0.0];
    system.rhs[0] = value;
    system.matrix[2] = [0.0, 0.0, half, 0.0, 1.0];
    system.rhs[2] = value;
    Ok(())
}

/// Replaces the right Robin rows by `l2 = g`, `αΔx/2·U2 − H = −g`.
pub fn apply_dirichlet_right(
    system: &mut LocalSystem,
    kind: ElementKind,
    value: f64,
    params: &KpzParameters,
    dx: f64,
) -> Result<()> {
    check_kind(kind, &[ElementKind::RightBoundary, ElementKind::BothBoundaries], "right Dirichlet row")?;
    let half = params.alpha() * dx / 2.0;
    system.matrix[1] = [0.0, 1.0, 0.0, 0.0, 0.0];
    system.rhs[1] = value;
    system.matrix[3] = [0.0, 0.0, 0.0, half, -1.0];
    system.rhs[3] = -value;
    Ok(())
}

/// The matrix for a given element kind (rhs is handled separately).
pub(crate) fn matrix_for(kind: ElementKind, params: &KpzParameters, dx: f64) -> Matrix5 {
    let mut sys = LocalSystem { matrix: interior_matrix(params, dx), rhs: [0.0; 5] };
    match kind {
        ElementKind::Interior => {}
        ElementKind::LeftBoundary => {
            apply_dirichlet_left(&mut sys, kind, 0.0, params, dx).expect("kind checked");
        }
        ElementKind::RightBoundary => {
            apply_dirichlet_right(&mut sys, kind, 0.0, params, dx).expect("kind checked");
        }
        ElementKind::BothBoundaries => {
            apply_dirichlet_left(&mut sys, kind, 0.0, params, dx).expect("kind checked");
            apply_dirichlet_right(&mut sys, kind, 0.0, params, dx).expect("kind checked");
        }
    }
    sys.matrix
}

/// LU factorization with partial pivoting of a 5×5 matrix.
#[derive(Clone, Debug)]
pub struct Lu5 {
    lu: Matrix5,
    perm: [usize; 5],
}

impl Lu5 {
    pub fn factor(matrix: &Matrix5) -> Result<Self> {
        let mut lu = *matrix;
        let mut perm = [0, 1, 2, 3, 4];
        let scale = matrix
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        for col in 0..5 {
            let pivot = (col..5)
                .max_by(|&a, &b| lu[a][col].abs().total_cmp(&lu[b][col].abs()))
                .expect("non-empty range");
            if lu[pivot][col].abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Numeric(format!("singular 5x5 system (column {col})")));
            }
            lu.swap(col, pivot);
            perm.swap(col, pivot);
            for row in col + 1..5 {
                let factor = lu[row][col] / lu[col][col];
                lu[row][col] = factor;
                for k in col + 1..5 {
                    lu[row][k] -= factor * lu[col][k];
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, rhs: &Vector5) -> Vector5 {
        let mut x = [0.0; 5];
        for i in 0..5 {
            let mut acc = rhs[self.perm[i]];
            for k in 0..i {
                acc -= self.lu[i][k] * x[k];
            }
            x[i] = acc;
        }
        for i in (0..5).rev() {
            let mut acc = x[i];
            for k in i + 1..5 {
                acc -= self.lu[i][k] * x[k];
            }
            x[i] = acc / self.lu[i][i];
        }
        x
    }

    /// 1-norm condition number estimate computed from the explicit inverse.
    pub fn condition_number(&self, matrix: &Matrix5) -> f64 {
        let norm1 = |m: &Matrix5| {
            (0..5)
                .map(|c| (0..5).map(|r| m[r][c].abs()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        let mut inverse = [[0.0; 5]; 5];
        for c in 0..5 {
            let mut e = [0.0; 5];
            e[c] = 1.0;
            let col = self.solve(&e);
            for r in 0..5 {
                inverse[r][c] = col[r];
            }
        }
        norm1(matrix) * norm1(&inverse)
    }
}

impl LocalSystem {
    pub fn solve(&self) -> Result<ElementState> {
        let x = Lu5::factor(&self.matrix)?.solve(&self.rhs);
        Ok(ElementState::from_array(x))
    }
}
