//! Jump-linear analysis of the state update over a Markov graph process.
//!
//! Over a graph set {G_1, ..., G_N} switched by a Markov chain, the update
//! is the jump-linear recursion
//!
//! ```text
//! x(k+1) = J_i x(k) + B_i w,    J_i = (D_i + I)^-1 A_i,
//!                               B_i = (D_i + I)^-1,  w = s e_1,
//! ```
//!
//! with i the chain state at step k. This module builds the switched
//! matrices, forms the mean/second-moment transition operators
//!
//! ```text
//! C = (P^T (x) I_n)   diag[J_i]         (Nn   x Nn)
//! D = (P^T (x) I_n^2) diag[J_i (x) J_i] (Nn^2 x Nn^2)
//! ```
//!
//! checks their spectral radii, and evaluates the closed forms for the
//! limiting mean `mu` and correlation `Q` of the state vector. For an
//! ergodic chain with entrywise-positive P, `mu(i) > 0` holds exactly for
//! the nodes that reach the source in the union graph, which is what makes
//! the threshold detector of [`crate::dynamics`] sound for mobile networks.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Graph, SOURCE};
use crate::process::{ErgodicityViolation, MarkovChainSpec, ProcessError};

/// Default cap on the row dimension N*n^2 of the dense second-moment
/// operator; larger systems are refused rather than silently thrashing.
pub const DEFAULT_DIMENSION_CAP: usize = 20_000;

/// Classification threshold for "positive" limiting means, relative to s.
/// Zeros of `mu` are structural, so anything above round-off is positive.
pub const POSITIVITY_RTOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JlsError {
    #[error("source strength must be positive, got {0}")]
    NonpositiveStrength(f64),
    #[error("chain is not ergodic ({0}); limiting moments are undefined")]
    NotErgodic(ErgodicityViolation),
    #[error(
        "second-moment operator needs {required} rows, above the cap of {cap}; \
         raise the cap explicitly to proceed"
    )]
    DimensionCapExceeded { required: usize, cap: usize },
    #[error("second-moment operator has spectral radius {rho_d} >= 1; no limit exists")]
    UnstableSecondMoment { rho_d: f64 },
    #[error(transparent)]
    Process(#[from] ProcessError),
}

/// The switched system matrices for one graph set plus its chain.
#[derive(Debug, Clone)]
pub struct JlsSystem {
    chain: MarkovChainSpec,
    /// J_i = (D_i + I)^-1 A_i, one per graph.
    j: Vec<DMatrix<f64>>,
    /// Diagonal of B_i = (D_i + I)^-1, one per graph.
    b_diag: Vec<DVector<f64>>,
    /// Input vector w = s e_1.
    w: DVector<f64>,
    s: f64,
}

/// Per-graph update matrix `(D + I)^-1 A`.
pub fn averaging_matrix(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut m = g.adjacency_matrix();
    for i in 0..n {
        let scale = 1.0 / (g.degree(i) + 1) as f64;
        for j in 0..n {
            m[(i, j)] *= scale;
        }
    }
    m
}

/// Max absolute row sum.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum())
        .fold(0.0, f64::max)
}

/// Spectral radius via a full eigenvalue computation (Schur form with a
/// bounded iteration count; an uncapped iteration can stall on Kronecker
/// products with clustered eigenvalue magnitudes). Falls back to the
/// shifted power iteration, which is provably convergent here because
/// every matrix this crate feeds in is nonnegative.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    assert_eq!(m.nrows(), m.ncols(), "spectral radius needs a square matrix");
    for eps in [f64::EPSILON, 1e-13, 1e-10] {
        if let Some(schur) = m.clone().try_schur(eps, 100_000) {
            return schur
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
        }
    }
    power_iteration_radius(m, 1_000_000)
}

/// Spectral radius of a nonnegative matrix by shifted power iteration on a
/// strictly positive start vector. For nonnegative M the radius is itself
/// an eigenvalue, so rho(M + dI) = rho(M) + d; the shift removes the
/// oscillation a periodic pattern would otherwise cause. Independent route
/// used to cross-check [`spectral_radius`].
pub fn power_iteration_radius(m: &DMatrix<f64>, max_iterations: usize) -> f64 {
    assert!(
        m.iter().all(|&v| v >= 0.0),
        "power iteration route assumes a nonnegative matrix"
    );
    let n = m.nrows();
    let shift = 0.01 * inf_norm(m).max(1.0);
    let shifted = m + DMatrix::<f64>::identity(n, n) * shift;
    let mut v = DVector::from_element(n, 1.0);
    let mut radius = 0.0;
    for _ in 0..max_iterations {
        let next = &shifted * &v;
        let norm = next.amax();
        if norm == 0.0 {
            return 0.0;
        }
        if (norm - radius).abs() <= 1e-13 * norm {
            return norm - shift;
        }
        radius = norm;
        v = next / norm;
    }
    radius - shift
}

/// Solves `(I - M) y = rhs` by summing the geometric series
/// `rhs + M rhs + M^2 rhs + ...`, valid when rho(M) < 1. Second route used
/// to cross-check the direct factorizations in [`JlsSystem::predict`].
pub fn neumann_solve(
    m: &DMatrix<f64>,
    rhs: &DVector<f64>,
    max_terms: usize,
    tol: f64,
) -> Option<DVector<f64>> {
    let mut y = rhs.clone();
    for _ in 0..max_terms {
        let next = m * &y + rhs;
        let delta = (&next - &y).amax();
        y = next;
        if delta <= tol {
            return Some(y);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Column-stacking operators

/// Stacks the columns of a matrix into one tall vector.
pub fn stack_columns(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`stack_columns`] for a known shape.
pub fn unstack_columns(v: &DVector<f64>, nrows: usize, ncols: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), nrows * ncols, "shape mismatch in unstack");
    DMatrix::from_column_slice(nrows, ncols, v.as_slice())
}

/// Stacks a sequence of equally sized matrices into one tall vector.
pub fn stack_sequence(ms: &[DMatrix<f64>]) -> DVector<f64> {
    let block = ms[0].nrows() * ms[0].ncols();
    let mut out = DVector::zeros(block * ms.len());
    for (i, m) in ms.iter().enumerate() {
        out.rows_mut(i * block, block)
            .copy_from(&stack_columns(m));
    }
    out
}

/// Inverse of [`stack_sequence`] for `count` square n x n blocks.
pub fn unstack_sequence(v: &DVector<f64>, n: usize, count: usize) -> Vec<DMatrix<f64>> {
    assert_eq!(v.len(), n * n * count, "shape mismatch in unstack");
    (0..count)
        .map(|i| {
            let block = DVector::from_column_slice(&v.as_slice()[i * n * n..(i + 1) * n * n]);
            unstack_columns(&block, n, n)
        })
        .collect()
}

// ---------------------------------------------------------------------------

/// Limiting moments and spectral diagnostics produced by [`JlsSystem::predict`].
#[derive(Debug, Clone)]
pub struct JlsPrediction {
    /// Limiting mean of the state vector.
    pub mu: DVector<f64>,
    /// Limiting correlation matrix, E[x x^T] in the limit. Symmetric PSD.
    pub correlation: DMatrix<f64>,
    /// Stacked per-regime mean blocks, length N*n.
    pub q_stacked: DVector<f64>,
    pub rho_c: f64,
    pub rho_d: f64,
    /// Entry i is true iff mu(i) exceeds the positivity threshold.
    pub positivity: Vec<bool>,
    /// Source reachability in the union graph, the combinatorial side of
    /// the positivity claim.
    pub union_reachability: Vec<bool>,
    /// True iff P is entrywise positive, the hypothesis under which the
    /// positivity/reachability equivalence is guaranteed.
    pub theorem_backed: bool,
    pub s: f64,
}

impl JlsPrediction {
    pub fn positivity_pattern(&self) -> &[bool] {
        &self.positivity
    }

    /// True iff the positivity pattern equals union-graph reachability.
    pub fn matches_reachability(&self) -> bool {
        self.positivity == self.union_reachability
    }
}

impl JlsSystem {
    /// Builds J_i, B_i and w = s e_1 for every graph in the chain's set.
    pub fn new(chain: MarkovChainSpec, s: f64) -> Result<Self, JlsError> {
        if s <= 0.0 || !s.is_finite() {
            return Err(JlsError::NonpositiveStrength(s));
        }
        let n = chain.node_count();
        let j: Vec<DMatrix<f64>> = chain.graphs().iter().map(averaging_matrix).collect();
        let b_diag: Vec<DVector<f64>> = chain
            .graphs()
            .iter()
            .map(|g| DVector::from_fn(n, |i, _| 1.0 / (g.degree(i) + 1) as f64))
            .collect();
        let mut w = DVector::zeros(n);
        w[SOURCE] = s;
        Ok(Self {
            chain,
            j,
            b_diag,
            w,
            s,
        })
    }

    pub fn chain(&self) -> &MarkovChainSpec {
        &self.chain
    }

    pub fn node_count(&self) -> usize {
        self.chain.node_count()
    }

    pub fn regime_count(&self) -> usize {
        self.chain.state_count()
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn update_matrix(&self, i: usize) -> &DMatrix<f64> {
        &self.j[i]
    }

    pub fn input_diag(&self, i: usize) -> &DVector<f64> {
        &self.b_diag[i]
    }

    /// Mean and second-moment transition operators, dense. Block (i, j) of
    /// C is `p_ji J_j`; block (i, j) of D is `p_ji (J_j (x) J_j)`.
    pub fn build_c_d(&self) -> Result<(DMatrix<f64>, DMatrix<f64>), JlsError> {
        self.build_c_d_capped(DEFAULT_DIMENSION_CAP)
    }

    pub fn build_c_d_capped(
        &self,
        cap: usize,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>), JlsError> {
        let n = self.node_count();
        let count = self.regime_count();
        let required = count * n * n;
        if required > cap {
            return Err(JlsError::DimensionCapExceeded { required, cap });
        }
        let p = self.chain.transition_matrix();
        let mut c = DMatrix::zeros(count * n, count * n);
        let mut d = DMatrix::zeros(required, required);
        for bi in 0..count {
            for bj in 0..count {
                let weight = p[(bj, bi)];
                if weight == 0.0 {
                    continue;
                }
                c.view_mut((bi * n, bj * n), (n, n))
                    .copy_from(&(&self.j[bj] * weight));
                let f = self.j[bj].kronecker(&self.j[bj]);
                d.view_mut((bi * n * n, bj * n * n), (n * n, n * n))
                    .copy_from(&(f * weight));
            }
        }
        Ok((c, d))
    }

    /// Evaluates the closed forms for the limiting mean and correlation.
    ///
    /// Refuses non-ergodic chains and systems whose second-moment operator
    /// is not a contraction (neither limit would exist).
    pub fn predict(&self) -> Result<JlsPrediction, JlsError> {
        self.predict_capped(DEFAULT_DIMENSION_CAP)
    }

    pub fn predict_capped(&self, cap: usize) -> Result<JlsPrediction, JlsError> {
        if let Some(violation) = self.chain.ergodicity_violation() {
            return Err(JlsError::NotErgodic(violation));
        }
        let n = self.node_count();
        let count = self.regime_count();
        let p = self.chain.transition_matrix();
        let pi = self.chain.stationary_distribution()?;
        let (c, d) = self.build_c_d_capped(cap)?;
        let rho_c = spectral_radius(&c);
        let rho_d = spectral_radius(&d);
        if rho_d >= 1.0 {
            return Err(JlsError::UnstableSecondMoment { rho_d });
        }

        // Mean side: block j of psi aggregates inflows i -> j, weighted by
        // the stationary occupancy of i; then q = (I - C)^-1 psi and the
        // mean is the sum of the per-regime blocks.
        let b_w: Vec<DVector<f64>> = (0..count)
            .map(|i| self.b_diag[i].component_mul(&self.w))
            .collect();
        let psi = self.stacked_input_with(&pi);
        let identity_c = DMatrix::identity(count * n, count * n);
        let q_stacked = (identity_c - &c)
            .lu()
            .solve(&psi)
            .expect("I - C is nonsingular when rho(C) < 1");
        let mut mu = DVector::zeros(n);
        for i in 0..count {
            mu += q_stacked.rows(i * n, n);
        }

        // Second-moment side: the three-term inhomogeneity per regime,
        // stacked, solved against I - D, unstacked and symmetrized.
        let r_blocks: Vec<DMatrix<f64>> = (0..count)
            .map(|j| {
                let mut r = DMatrix::zeros(n, n);
                for i in 0..count {
                    let p_ij = p[(i, j)];
                    if p_ij == 0.0 {
                        continue;
                    }
                    let q_i = DVector::from(q_stacked.rows(i * n, n));
                    let jq = &self.j[i] * &q_i;
                    let term = &b_w[i] * b_w[i].transpose() * pi[i]
                        + &jq * b_w[i].transpose()
                        + &b_w[i] * jq.transpose();
                    r += term * p_ij;
                }
                r
            })
            .collect();
        let identity_d = DMatrix::identity(count * n * n, count * n * n);
        let stacked_r = stack_sequence(&r_blocks);
        let solved = (identity_d - &d)
            .lu()
            .solve(&stacked_r)
            .expect("I - D is nonsingular when rho(D) < 1");
        let q_blocks = unstack_sequence(&solved, n, count);
        let mut correlation = DMatrix::zeros(n, n);
        for block in &q_blocks {
            // Symmetrize to strip asymmetric round-off before PSD checks.
            correlation += (block + block.transpose()) * 0.5;
        }

        let tol_pos = POSITIVITY_RTOL * self.s;
        let positivity: Vec<bool> = mu.iter().map(|&v| v > tol_pos).collect();
        let union_reachability = self.chain.graphs().union_graph().connected_to_source();
        Ok(JlsPrediction {
            mu,
            correlation,
            q_stacked,
            rho_c,
            rho_d,
            positivity,
            union_reachability,
            theorem_backed: self.chain.is_entrywise_positive(),
            s: self.s,
        })
    }

    /// Positivity pattern of the limiting mean. When P is not entrywise
    /// positive the pattern is still computed, but `theorem_backed` on the
    /// prediction is false and no reachability guarantee applies.
    pub fn positivity_pattern(&self) -> Result<Vec<bool>, JlsError> {
        Ok(self.predict()?.positivity)
    }

    /// Stacked mean-side input vector psi, block j = sum_i p_ij B_i w pi_i.
    pub fn stacked_input(&self) -> Result<DVector<f64>, JlsError> {
        let pi = self.chain.stationary_distribution()?;
        Ok(self.stacked_input_with(&pi))
    }

    fn stacked_input_with(&self, pi: &[f64]) -> DVector<f64> {
        let n = self.node_count();
        let count = self.regime_count();
        let p = self.chain.transition_matrix();
        let mut psi = DVector::zeros(count * n);
        for j in 0..count {
            let mut block = DVector::zeros(n);
            for i in 0..count {
                block += self.b_diag[i].component_mul(&self.w) * (p[(i, j)] * pi[i]);
            }
            psi.rows_mut(j * n, n).copy_from(&block);
        }
        psi
    }

    /// Empirical mean and second moment of x(k_max) over independent chain
    /// realizations. Trial t draws from stream t of a counter RNG seeded by
    /// `seed`, so trials are reproducible and order-independent.
    pub fn monte_carlo_moments(
        &self,
        k_max: u64,
        trials: u64,
        seed: u64,
    ) -> Result<(DVector<f64>, DMatrix<f64>), JlsError> {
        assert!(trials >= 1, "at least one trial is required");
        let n = self.node_count();
        let mut mean = DVector::zeros(n);
        let mut second = DMatrix::zeros(n, n);
        for trial in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            let mut regime = self.chain.sample_initial(&mut rng)?;
            let mut x = DVector::zeros(n);
            for _ in 0..k_max {
                x = &self.j[regime] * x + self.b_diag[regime].component_mul(&self.w);
                regime = self.chain.step(regime, &mut rng);
            }
            mean += &x;
            second += &x * x.transpose();
        }
        mean /= trials as f64;
        second /= trials as f64;
        Ok((mean, second))
    }
}
