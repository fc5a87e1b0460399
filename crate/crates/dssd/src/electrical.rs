//! Independent ground truth for the static fixed point.
//!
//! The network is read as an electrical circuit: every edge is a unit
//! resistor, every node is additionally tied to a common grounded node
//! through its own unit resistor, and a current `s` is injected at the
//! source and extracted at ground. The node potentials then solve
//! `(D + I - A) v = s e_1`, and the averaging iteration of
//! [`crate::dynamics`] converges to exactly these potentials.
//!
//! The solve here is a dense direct factorization, so its error profile is
//! independent of the iteration it is used to validate.

use nalgebra::{DMatrix, DVector};

use crate::graph::{Graph, SOURCE};

/// Grounded conductance matrix `D + I - A`. Strictly diagonally dominant,
/// hence nonsingular for every graph, connected or not.
pub fn grounded_conductance(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut m = -g.adjacency_matrix();
    for i in 0..n {
        m[(i, i)] = (g.degree(i) + 1) as f64;
    }
    m
}

/// Node potentials of the grounded network with `s` Ampere injected at the
/// source. Panics if `s` is not a positive finite number; an LU failure is
/// unreachable for a valid graph and treated as a defect.
pub fn potentials(g: &Graph, s: f64) -> Vec<f64> {
    assert!(s > 0.0 && s.is_finite(), "source strength must be positive");
    let mut rhs = DVector::zeros(g.n());
    rhs[SOURCE] = s;
    let v = grounded_conductance(g)
        .lu()
        .solve(&rhs)
        .expect("grounded conductance matrix is nonsingular");
    v.as_slice().to_vec()
}

/// Residual check for a claimed fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointReport {
    /// `||(D + I - A) x - s e_1||_inf / s`.
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Measures how well `x` solves the grounded potential equation.
pub fn check_fixed_point(g: &Graph, x: &[f64], s: f64, tol: f64) -> FixedPointReport {
    assert_eq!(x.len(), g.n(), "state length must match the graph");
    assert!(s > 0.0 && s.is_finite(), "source strength must be positive");
    let mut rhs = DVector::zeros(g.n());
    rhs[SOURCE] = s;
    let residual_vec = grounded_conductance(g) * DVector::from_column_slice(x) - rhs;
    let residual = residual_vec.amax() / s;
    FixedPointReport {
        residual,
        tol,
        pass: residual <= tol,
    }
}
