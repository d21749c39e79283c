//! One Red-Black fixed-point sweep over all local systems.

use super::local::{interior_rhs, matrix_for, ElementKind, LocalInputs, Lu5, NeighborTrace};
use super::{ElementState, KpzParameters};
use crate::error::Result;

/// Factorizations of the three distinct local matrices of a mesh.
#[derive(Clone, Debug)]
pub struct LocalFactors {
    interior: Lu5,
    left: Lu5,
    right: Lu5,
}

impl LocalFactors {
    pub fn new(params: &KpzParameters, dx: f64) -> Result<Self> {
        Ok(Self {
            interior: Lu5::factor(&matrix_for(ElementKind::Interior, params, dx))?,
            left: Lu5::factor(&matrix_for(ElementKind::LeftBoundary, params, dx))?,
            right: Lu5::factor(&matrix_for(ElementKind::RightBoundary, params, dx))?,
        })
    }
}

/// Everything a sweep needs besides the element states.
pub struct SweepContext<'a> {
    pub params: &'a KpzParameters,
    pub dx: f64,
    /// `Some((h(t_n, a), h(t_n, b)))` for Dirichlet ends, `None` for periodic.
    pub dirichlet: Option<(f64, f64)>,
    /// Cell heights at the previous time level.
    pub h_previous_time: &'a [f64],
    /// Forcing at the `m + 1` nodes at the current time level.
    pub forcing: &'a [f64],
    pub factors: &'a LocalFactors,
}

impl<'a> SweepContext<'a> {
    pub fn new(
        params: &'a KpzParameters,
        dx: f64,
        dirichlet: Option<(f64, f64)>,
        h_previous_time: &'a [f64],
        forcing: &'a [f64],
        factors: &'a LocalFactors,
    ) -> Self {
        Self { params, dx, dirichlet, h_previous_time, forcing, factors }
    }

    fn kind(&self, i: usize, m: usize) -> ElementKind {
        match self.dirichlet {
            None => ElementKind::Interior,
            Some(_) if i == 0 => ElementKind::LeftBoundary,
            Some(_) if i == m - 1 => ElementKind::RightBoundary,
            Some(_) => ElementKind::Interior,
        }
    }

    /// Solves element `i` reading neighbour data from `neighbors` and its own
    /// lagged fluxes from `own_previous`.
    fn solve_element(&self, i: usize, neighbors: &[ElementState], own_previous: &ElementState) -> ElementState {
        let m = neighbors.len();
        let left_index = if i == 0 { m - 1 } else { i - 1 };
        let right_index = if i == m - 1 { 0 } else { i + 1 };
        let inputs = LocalInputs {
            previous: *own_previous,
            left: NeighborTrace::right_of(&neighbors[left_index]),
            right: NeighborTrace::left_of(&neighbors[right_index]),
            h_previous_time: self.h_previous_time[i],
            forcing: (self.forcing[i], self.forcing[i + 1]),
        };
        let mut rhs = interior_rhs(&inputs, self.params, self.dx);
        let lu = match (self.kind(i, m), self.dirichlet) {
            (ElementKind::LeftBoundary, Some((ga, _))) => {
                rhs[0] = ga;
                rhs[2] = ga;
                &self.factors.left
            }
            (ElementKind::RightBoundary, Some((_, gb))) => {
                rhs[1] = gb;
                rhs[3] = -gb;
                &self.factors.right
            }
            _ => &self.factors.interior,
        };
        ElementState::from_array(lu.solve(&rhs))
    }
}

/// Parity convention: element `i` (0-based) is "even" when `i + 1` is even.
fn is_even_element(i: usize) -> bool {
    (i + 1) % 2 == 0
}

/// Performs one Red-Black iteration in place and returns the relative change
/// `‖Xᵏ − Xᵏ⁻¹‖ / ‖Xᵏ‖` over all unknowns (absolute change if `‖Xᵏ‖ = 0`).
///
/// Order: the two Dirichlet boundary elements from iterate `k-1`, then all
/// even elements, then all odd elements using the fresh even data. Within a
/// colour every element reads the same snapshot, so the result does not depend
/// on the visiting order.
pub fn red_black_sweep(
    states: &mut [ElementState],
    previous: &mut Vec<ElementState>,
    ctx: &SweepContext<'_>,
) -> f64 {
    let m = states.len();
    previous.clear();
    previous.extend_from_slice(states);

    let boundary = ctx.dirichlet.is_some();
    if boundary {
        states[0] = ctx.solve_element(0, previous, &previous[0]);
        states[m - 1] = ctx.solve_element(m - 1, previous, &previous[m - 1]);
    }
    let interior = |i: usize| !boundary || (i != 0 && i != m - 1);

    for parity_even in [true, false] {
        let snapshot: Vec<(usize, ElementState)> = (0..m)
            .filter(|&i| is_even_element(i) == parity_even && interior(i))
            .map(|i| (i, ctx.solve_element(i, states, &previous[i])))
            .collect();
        for (i, s) in snapshot {
            states[i] = s;
        }
    }

    let mut diff = 0.0;
    let mut norm = 0.0;
    for (new, old) in states.iter().zip(previous.iter()) {
        for (a, b) in new.to_array().iter().zip(old.to_array()) {
            diff += (a - b) * (a - b);
            norm += a * a;
        }
    }
    if norm > 0.0 {
        (diff / norm).sqrt()
    } else {
        diff.sqrt()
    }
}
