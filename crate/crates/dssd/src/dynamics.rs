//! The synchronous state-update iteration.
//!
//! Every node carries a scalar state, an estimate of its potential in the
//! grounded electrical network of [`crate::electrical`]. Per step, the
//! source node averages its neighbors' states together with the injected
//! strength `s`; every other node averages its neighbors alone:
//!
//! ```text
//! x_1(k+1) = (sum_{j in N_1} x_j(k) + s) / (d_1 + 1)
//! x_i(k+1) =  sum_{j in N_i} x_j(k)      / (d_i + 1)     i > 1
//! ```
//!
//! A sum over an empty neighborhood is 0, so an isolated source holds `s`
//! and an isolated non-source node drops to 0. Nodes compare their state
//! against a threshold to decide whether they are cut from the source.

use nalgebra::DVector;
use thiserror::Error;

use crate::graph::{Graph, SOURCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("state vector has {state} entries but the graph has {graph} nodes")]
    DimensionMismatch { state: usize, graph: usize },
    #[error("source strength must be positive, got {0}")]
    NonpositiveStrength(f64),
    #[error("cut detection threshold must be positive, got {0}")]
    NonpositiveThreshold(f64),
    #[error("convergence tolerance must be positive, got {0}")]
    NonpositiveTolerance(f64),
    #[error("max_iter must be at least 1")]
    ZeroMaxIter,
}

/// Per-node states at one iteration, together with the iteration counter
/// and the source strength driving the update.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    x: Vec<f64>,
    k: u64,
    s: f64,
}

impl StateVector {
    /// Fresh all-zero state at iteration 0.
    pub fn zeros(n: usize, s: f64) -> Result<Self, DynamicsError> {
        if s <= 0.0 || !s.is_finite() {
            return Err(DynamicsError::NonpositiveStrength(s));
        }
        Ok(Self {
            x: vec![0.0; n],
            k: 0,
            s,
        })
    }

    /// Wraps externally produced states (e.g. from the asynchronous engine).
    pub fn from_states(x: Vec<f64>, k: u64, s: f64) -> Result<Self, DynamicsError> {
        if s <= 0.0 || !s.is_finite() {
            return Err(DynamicsError::NonpositiveStrength(s));
        }
        Ok(Self { x, k, s })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// One synchronous update over `g`.
    pub fn step(&self, g: &Graph) -> Result<Self, DynamicsError> {
        self.check_dim(g)?;
        let mut next = vec![0.0; self.x.len()];
        for (i, slot) in next.iter_mut().enumerate() {
            let mut sum = 0.0;
            for &j in g.neighbors(i) {
                sum += self.x[j];
            }
            if i == SOURCE {
                sum += self.s;
            }
            *slot = sum / (g.degree(i) + 1) as f64;
        }
        Ok(Self {
            x: next,
            k: self.k + 1,
            s: self.s,
        })
    }

    /// Same update in matrix form, `x' = (D + I)^-1 (A x + s e_1)`.
    ///
    /// Kept alongside [`StateVector::step`] as a cross-check; the two agree
    /// to within floating-point reassociation error (<= 1e-12 relative).
    pub fn step_vectorized(&self, g: &Graph) -> Result<Self, DynamicsError> {
        self.check_dim(g)?;
        let a = g.adjacency_matrix();
        let mut y = a * DVector::from_column_slice(&self.x);
        y[SOURCE] += self.s;
        for i in 0..self.x.len() {
            y[i] /= (g.degree(i) + 1) as f64;
        }
        Ok(Self {
            x: y.as_slice().to_vec(),
            k: self.k + 1,
            s: self.s,
        })
    }

    /// Threshold test: belief 1 means the node considers itself cut from
    /// the source. The comparison is inclusive: `x_i <= epsilon` detects.
    pub fn cut_beliefs(&self, epsilon: f64) -> Result<CutBeliefVector, DynamicsError> {
        if epsilon <= 0.0 || !epsilon.is_finite() {
            return Err(DynamicsError::NonpositiveThreshold(epsilon));
        }
        Ok(CutBeliefVector {
            beliefs: self.x.iter().map(|&v| v <= epsilon).collect(),
            epsilon,
        })
    }

    fn check_dim(&self, g: &Graph) -> Result<(), DynamicsError> {
        if self.x.len() != g.n() {
            return Err(DynamicsError::DimensionMismatch {
                state: self.x.len(),
                graph: g.n(),
            });
        }
        Ok(())
    }
}

/// Binary cut beliefs plus the threshold that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CutBeliefVector {
    beliefs: Vec<bool>,
    epsilon: f64,
}

impl CutBeliefVector {
    pub fn beliefs(&self) -> &[bool] {
        &self.beliefs
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn is_cut(&self, i: usize) -> bool {
        self.beliefs[i]
    }
}

/// Result of iterating to a fixed point; `converged` is false when the
/// iteration budget ran out first.
#[derive(Debug, Clone)]
pub struct Convergence {
    pub state: StateVector,
    pub converged: bool,
    /// Last observed max-norm step difference.
    pub delta: f64,
}

/// Iterates from the zero state on a fixed graph until successive iterates
/// differ by at most `tol * s` in max norm, or `max_iter` steps elapse.
pub fn run_to_convergence(
    g: &Graph,
    s: f64,
    tol: f64,
    max_iter: u64,
) -> Result<Convergence, DynamicsError> {
    if tol <= 0.0 || !tol.is_finite() {
        return Err(DynamicsError::NonpositiveTolerance(tol));
    }
    if max_iter == 0 {
        return Err(DynamicsError::ZeroMaxIter);
    }
    let mut current = StateVector::zeros(g.n(), s)?;
    let mut delta = f64::INFINITY;
    for _ in 0..max_iter {
        let next = current.step(g)?;
        delta = next
            .x
            .iter()
            .zip(&current.x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        current = next;
        if delta <= tol * s {
            return Ok(Convergence {
                state: current,
                converged: true,
                delta,
            });
        }
    }
    Ok(Convergence {
        state: current,
        converged: false,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn isolated_source_holds_strength() {
        let g = Graph::edgeless(1).unwrap();
        let x = StateVector::zeros(1, 5.0).unwrap();
        let x1 = x.step(&g).unwrap();
        assert_eq!(x1.x(), &[5.0]);
        assert_eq!(x1.k(), 1);
        let x2 = x1.step(&g).unwrap();
        assert_eq!(x2.x(), &[5.0]);
    }

    #[test]
    fn isolated_non_source_drops_to_zero() {
        let g = Graph::edgeless(3).unwrap();
        let x = StateVector::from_states(vec![0.0, 7.0, 3.0], 0, 1.0).unwrap();
        let x1 = x.step(&g).unwrap();
        assert_eq!(x1.x()[1], 0.0);
        assert_eq!(x1.x()[2], 0.0);
    }

    #[test]
    fn two_node_fixed_point() {
        // x1 = (x2 + s)/2, x2 = x1/2  =>  (2s/3, s/3).
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let out = run_to_convergence(&g, 3.0, 1e-12, 10_000).unwrap();
        assert!(out.converged);
        assert_abs_diff_eq!(out.state.x()[0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(out.state.x()[1], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn star_fixed_point() {
        // Source-centered star with 3 leaves: node-law balance gives
        // center 2s/5 and leaves s/5.
        let g = Graph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let out = run_to_convergence(&g, 5.0, 1e-12, 10_000).unwrap();
        assert!(out.converged);
        assert_abs_diff_eq!(out.state.x()[0], 2.0, epsilon = 1e-9);
        for leaf in 1..4 {
            assert_abs_diff_eq!(out.state.x()[leaf], 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn vectorized_matches_scalar() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = 10;
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random_bool(0.3) {
                        edges.push((i, j));
                    }
                }
            }
            let g = Graph::new(n, edges).unwrap();
            let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            let x = StateVector::from_states(x0, 0, 2.5).unwrap();
            let a = x.step(&g).unwrap();
            let b = x.step_vectorized(&g).unwrap();
            for (u, v) in a.x().iter().zip(b.x()) {
                let scale = u.abs().max(1.0);
                assert!((u - v).abs() <= 1e-12 * scale, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn vectorized_edgeless() {
        let g = Graph::edgeless(3).unwrap();
        let x = StateVector::zeros(3, 4.0).unwrap();
        let x1 = x.step_vectorized(&g).unwrap();
        assert_eq!(x1.x(), &[4.0, 0.0, 0.0]);
    }

    #[test]
    fn belief_threshold_is_inclusive() {
        let x = StateVector::from_states(vec![0.005, 0.02, 0.01], 3, 1.0).unwrap();
        let beliefs = x.cut_beliefs(0.01).unwrap();
        assert!(beliefs.is_cut(0)); // below
        assert!(!beliefs.is_cut(1)); // above
        assert!(beliefs.is_cut(2)); // exactly at the threshold
    }

    #[test]
    fn belief_rejects_bad_threshold() {
        let x = StateVector::zeros(2, 1.0).unwrap();
        assert!(matches!(
            x.cut_beliefs(0.0),
            Err(DynamicsError::NonpositiveThreshold(_))
        ));
    }

    #[test]
    fn dimension_mismatch_detected() {
        let g = Graph::edgeless(3).unwrap();
        let x = StateVector::zeros(2, 1.0).unwrap();
        assert_eq!(
            x.step(&g).unwrap_err(),
            DynamicsError::DimensionMismatch { state: 2, graph: 3 }
        );
    }

    #[test]
    fn non_convergence_is_flagged() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let out = run_to_convergence(&g, 3.0, 1e-12, 2).unwrap();
        assert!(!out.converged);
        assert_eq!(out.state.k(), 2);
    }

    #[test]
    fn single_node_converges_in_one_step() {
        let g = Graph::edgeless(1).unwrap();
        let out = run_to_convergence(&g, 9.0, 1e-10, 10).unwrap();
        assert!(out.converged);
        assert_eq!(out.state.x(), &[9.0]);
    }
}
