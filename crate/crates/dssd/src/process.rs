//! Generators for the time-varying graph sequence G(k).
//!
//! Four process kinds are supported: a static graph, group random-walk
//! mobility with range-limited links, an explicit Markov chain over a
//! fixed set of graphs, and i.i.d. per-link failure of a base graph.
//! Every generator takes its randomness from an injected RNG, so a seed
//! fully determines the produced sequence.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::graph::{Graph, GraphSet, SOURCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcessError {
    #[error("mobility config: {0}")]
    InvalidMobility(String),
    #[error("positions length {found} does not match configured node count {expected}")]
    PositionsLength { expected: usize, found: usize },
    #[error("transition matrix must be {n}x{n} to match the graph set, found {rows}x{cols}")]
    TransitionShape {
        n: usize,
        rows: usize,
        cols: usize,
    },
    #[error("transition matrix row {row} sums to {sum}, not 1")]
    RowNotStochastic { row: usize, sum: f64 },
    #[error("transition matrix entry ({row},{col}) is negative")]
    NegativeEntry { row: usize, col: usize },
    #[error("initial distribution: {0}")]
    InvalidInitial(String),
    #[error("chain is not ergodic: {0}")]
    NotErgodic(ErgodicityViolation),
    #[error("failure step must be at least 1 (node {node})")]
    FailureStepZero { node: usize },
    #[error("the source node cannot be scheduled to fail")]
    SourceFailure,
    #[error("failure schedule node {index} out of range for {n} nodes")]
    FailureIndexOutOfRange { index: usize, n: usize },
    #[error("link failure probability {0} is outside [0, 1]")]
    BadFailureProbability(f64),
}

/// Which ergodicity requirement a chain violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErgodicityViolation {
    /// The positive-entry pattern of P is not strongly connected.
    NotIrreducible,
    /// Irreducible but periodic with the given period > 1.
    Periodic(u64),
}

impl std::fmt::Display for ErgodicityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::NotIrreducible => write!(f, "not irreducible"),
            Self::Periodic(p) => write!(f, "irreducible but periodic with period {p}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Group random-walk mobility

/// Two-dimensional group random walk. Each node belongs to a group; per
/// step, each coordinate receives an independent Gaussian increment with
/// the group's mean and variance. Positions start in the unit square but
/// are unconstrained afterwards; links follow the unit-disk rule.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityConfig {
    assignments: Vec<usize>,
    means: Vec<[f64; 2]>,
    variances: Vec<f64>,
    range: f64,
}

impl MobilityConfig {
    pub fn new(
        assignments: Vec<usize>,
        means: Vec<[f64; 2]>,
        variances: Vec<f64>,
        range: f64,
    ) -> Result<Self, ProcessError> {
        if assignments.is_empty() {
            return Err(ProcessError::InvalidMobility("no nodes".into()));
        }
        if means.len() != variances.len() || means.is_empty() {
            return Err(ProcessError::InvalidMobility(
                "means and variances must list one entry per group".into(),
            ));
        }
        if let Some(&g) = assignments.iter().find(|&&g| g >= means.len()) {
            return Err(ProcessError::InvalidMobility(format!(
                "group index {g} out of range for {} groups",
                means.len()
            )));
        }
        if variances.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(ProcessError::InvalidMobility(
                "variances must be nonnegative".into(),
            ));
        }
        if range <= 0.0 || !range.is_finite() {
            return Err(ProcessError::InvalidMobility(
                "communication range must be positive".into(),
            ));
        }
        Ok(Self {
            assignments,
            means,
            variances,
            range,
        })
    }

    pub fn n(&self) -> usize {
        self.assignments.len()
    }

    pub fn range(&self) -> f64 {
        self.range
    }
}

/// Advances every node by one random-walk increment and rebuilds the
/// unit-disk graph from the new positions.
pub fn mobility_step(
    positions: &[[f64; 2]],
    cfg: &MobilityConfig,
    rng: &mut impl Rng,
) -> Result<(Vec<[f64; 2]>, Graph), ProcessError> {
    if positions.len() != cfg.n() {
        return Err(ProcessError::PositionsLength {
            expected: cfg.n(),
            found: positions.len(),
        });
    }
    let mut next = Vec::with_capacity(positions.len());
    for (u, pos) in positions.iter().enumerate() {
        let group = cfg.assignments[u];
        let std_dev = cfg.variances[group].sqrt();
        let mut moved = *pos;
        for axis in 0..2 {
            let normal = Normal::new(cfg.means[group][axis], std_dev)
                .expect("validated variance yields a valid normal");
            moved[axis] += normal.sample(rng);
        }
        next.push(moved);
    }
    let graph = Graph::random_geometric(&next, cfg.range).expect("positions are finite");
    Ok((next, graph))
}

/// Uniform initial deployment in the unit square.
pub fn uniform_positions(n: usize, rng: &mut impl Rng) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
        .collect()
}

// ---------------------------------------------------------------------------
// Markov chain over a graph set

/// Initial distribution over graph indices.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialDistribution {
    /// Start from the stationary distribution (requires ergodicity).
    Stationary,
    Explicit(Vec<f64>),
}

/// Homogeneous Markov chain over the members of a [`GraphSet`], with
/// ergodicity established at construction rather than assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChainSpec {
    graphs: GraphSet,
    p: DMatrix<f64>,
    initial: InitialDistribution,
    ergodicity: Result<(), ErgodicityViolation>,
    entrywise_positive: bool,
}

impl MarkovChainSpec {
    /// Builds a chain from row-major transition rows. Rows must be
    /// nonnegative and sum to 1 within 1e-12.
    pub fn new(
        graphs: GraphSet,
        rows: Vec<Vec<f64>>,
        initial: Option<Vec<f64>>,
    ) -> Result<Self, ProcessError> {
        let n = graphs.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(ProcessError::TransitionShape {
                n,
                rows: rows.len(),
                cols: rows.first().map_or(0, Vec::len),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < 0.0 || !v.is_finite() {
                    return Err(ProcessError::NegativeEntry { row: i, col: j });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(ProcessError::RowNotStochastic { row: i, sum });
            }
        }
        let p = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let initial = match initial {
            None => InitialDistribution::Stationary,
            Some(dist) => {
                if dist.len() != n {
                    return Err(ProcessError::InvalidInitial(format!(
                        "expected {n} entries, found {}",
                        dist.len()
                    )));
                }
                if dist.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                    return Err(ProcessError::InvalidInitial("negative entry".into()));
                }
                let sum: f64 = dist.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(ProcessError::InvalidInitial(format!("sums to {sum}, not 1")));
                }
                InitialDistribution::Explicit(dist)
            }
        };
        let ergodicity = check_ergodicity(&p);
        let entrywise_positive = p.iter().all(|&v| v > 0.0);
        Ok(Self {
            graphs,
            p,
            initial,
            ergodicity,
            entrywise_positive,
        })
    }

    pub fn graphs(&self) -> &GraphSet {
        &self.graphs
    }

    pub fn node_count(&self) -> usize {
        self.graphs.n()
    }

    pub fn state_count(&self) -> usize {
        self.graphs.len()
    }

    pub fn transition_matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn is_ergodic(&self) -> bool {
        self.ergodicity.is_ok()
    }

    pub fn ergodicity_violation(&self) -> Option<ErgodicityViolation> {
        self.ergodicity.err()
    }

    /// True iff every transition probability is strictly positive.
    pub fn is_entrywise_positive(&self) -> bool {
        self.entrywise_positive
    }

    /// Solves the balance system `pi P = pi`, `sum pi = 1`.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>, ProcessError> {
        self.ergodicity.map_err(ProcessError::NotErgodic)?;
        let n = self.state_count();
        // (P^T - I) pi = 0 with the last balance row replaced by sum = 1.
        let mut m = self.p.transpose() - DMatrix::<f64>::identity(n, n);
        let mut rhs = DVector::zeros(n);
        for j in 0..n {
            m[(n - 1, j)] = 1.0;
        }
        rhs[n - 1] = 1.0;
        let pi = m
            .lu()
            .solve(&rhs)
            .expect("ergodic balance system is nonsingular");
        let pi: Vec<f64> = pi.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = pi.iter().sum();
        let pi: Vec<f64> = pi.iter().map(|v| v / total).collect();
        // Post-condition from the construction: residual beyond round-off
        // would be a defect, not an input error.
        let residual = (0..n)
            .map(|j| {
                let flow: f64 = (0..n).map(|i| pi[i] * self.p[(i, j)]).sum();
                (flow - pi[j]).abs()
            })
            .fold(0.0, f64::max);
        assert!(
            residual <= 1e-10,
            "stationary solve residual {residual} exceeds 1e-10"
        );
        Ok(pi)
    }

    /// Samples the successor of `current` from its transition row.
    pub fn step(&self, current: usize, rng: &mut impl Rng) -> usize {
        assert!(current < self.state_count(), "graph index out of range");
        let r: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_positive = current;
        for j in 0..self.state_count() {
            let p = self.p[(current, j)];
            if p > 0.0 {
                last_positive = j;
            }
            acc += p;
            if r < acc {
                return j;
            }
        }
        last_positive
    }

    /// Samples the index of the first graph in the sequence.
    pub fn sample_initial(&self, rng: &mut impl Rng) -> Result<usize, ProcessError> {
        let dist = match &self.initial {
            InitialDistribution::Stationary => self.stationary_distribution()?,
            InitialDistribution::Explicit(d) => d.clone(),
        };
        let r: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (j, &p) in dist.iter().enumerate() {
            if p > 0.0 {
                last_positive = j;
            }
            acc += p;
            if r < acc {
                return Ok(j);
            }
        }
        Ok(last_positive)
    }
}

/// Irreducibility plus aperiodicity on the positive-entry pattern of `p`.
fn check_ergodicity(p: &DMatrix<f64>) -> Result<(), ErgodicityViolation> {
    let n = p.nrows();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| p[(i, j)] > 0.0).collect())
        .collect();
    let pred: Vec<Vec<usize>> = (0..n)
        .map(|j| (0..n).filter(|&i| p[(i, j)] > 0.0).collect())
        .collect();
    let reach = |adj: &Vec<Vec<usize>>| -> Vec<bool> {
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    };
    let forward = reach(&succ);
    let backward = reach(&pred);
    if !(forward.iter().all(|&b| b) && backward.iter().all(|&b| b)) {
        return Err(ErgodicityViolation::NotIrreducible);
    }
    // Period = gcd of (level[u] + 1 - level[v]) over pattern edges, using
    // BFS levels from state 0. Every closed-walk length is a multiple.
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &v in &succ[u] {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut period = 0u64;
    for u in 0..n {
        for &v in &succ[u] {
            let diff = (level[u] as u64 + 1) - level[v] as u64;
            period = gcd(period, diff);
        }
    }
    if period == 1 {
        Ok(())
    } else {
        Err(ErgodicityViolation::Periodic(period))
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

// ---------------------------------------------------------------------------
// Node failures

/// Nodes scheduled to fail at given steps. A failed node keeps its index
/// but loses all incident edges from its failure step onward.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FailureSchedule {
    entries: Vec<(usize, u64)>,
}

impl FailureSchedule {
    pub fn new(entries: Vec<(usize, u64)>) -> Result<Self, ProcessError> {
        for &(node, step) in &entries {
            if node == SOURCE {
                return Err(ProcessError::SourceFailure);
            }
            if step == 0 {
                return Err(ProcessError::FailureStepZero { node });
            }
        }
        Ok(Self { entries })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, u64)] {
        &self.entries
    }

    /// Validates node indices against a concrete graph size.
    pub fn check_against(&self, n: usize) -> Result<(), ProcessError> {
        match self.entries.iter().find(|&&(node, _)| node >= n) {
            Some(&(index, _)) => Err(ProcessError::FailureIndexOutOfRange { index, n }),
            None => Ok(()),
        }
    }

    /// Nodes whose failure step is at or before `k`.
    pub fn failed_by(&self, k: u64) -> BTreeSet<usize> {
        self.entries
            .iter()
            .filter(|&&(_, step)| step <= k)
            .map(|&(node, _)| node)
            .collect()
    }
}

/// Removes every edge incident to a node failed at or before step `k`.
pub fn apply_failures(g: &Graph, schedule: &FailureSchedule, k: u64) -> Graph {
    let failed = schedule.failed_by(k);
    if failed.is_empty() {
        g.clone()
    } else {
        g.without_incident_edges(&failed)
    }
}

// ---------------------------------------------------------------------------
// Unified generator

/// A graph-sequence generator. Each call to [`GraphProcess::next_graph`]
/// yields G(k) for k = 0, 1, 2, ... in order; generators own their RNG so
/// a seed pins the whole sequence.
#[derive(Debug, Clone)]
pub enum GraphProcess {
    Static {
        graph: Graph,
    },
    Mobility {
        positions: Vec<[f64; 2]>,
        cfg: MobilityConfig,
        rng: ChaCha8Rng,
        started: bool,
    },
    Markov {
        spec: MarkovChainSpec,
        rng: ChaCha8Rng,
        current: Option<usize>,
    },
    IidLinkFailure {
        base: Graph,
        failure_prob: f64,
        rng: ChaCha8Rng,
    },
}

impl GraphProcess {
    pub fn new_static(graph: Graph) -> Self {
        Self::Static { graph }
    }

    pub fn new_mobility(
        initial_positions: Vec<[f64; 2]>,
        cfg: MobilityConfig,
        rng: ChaCha8Rng,
    ) -> Result<Self, ProcessError> {
        if initial_positions.len() != cfg.n() {
            return Err(ProcessError::PositionsLength {
                expected: cfg.n(),
                found: initial_positions.len(),
            });
        }
        Ok(Self::Mobility {
            positions: initial_positions,
            cfg,
            rng,
            started: false,
        })
    }

    pub fn new_markov(spec: MarkovChainSpec, rng: ChaCha8Rng) -> Self {
        Self::Markov {
            spec,
            rng,
            current: None,
        }
    }

    pub fn new_iid_link_failure(
        base: Graph,
        failure_prob: f64,
        rng: ChaCha8Rng,
    ) -> Result<Self, ProcessError> {
        if !(0.0..=1.0).contains(&failure_prob) || !failure_prob.is_finite() {
            return Err(ProcessError::BadFailureProbability(failure_prob));
        }
        Ok(Self::IidLinkFailure {
            base,
            failure_prob,
            rng,
        })
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Static { graph } => graph.n(),
            Self::Mobility { cfg, .. } => cfg.n(),
            Self::Markov { spec, .. } => spec.node_count(),
            Self::IidLinkFailure { base, .. } => base.n(),
        }
    }

    /// Current node positions, for mobility processes only.
    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        match self {
            Self::Mobility { positions, .. } => Some(positions),
            _ => None,
        }
    }

    /// Produces the next graph in the sequence.
    pub fn next_graph(&mut self) -> Result<Graph, ProcessError> {
        match self {
            Self::Static { graph } => Ok(graph.clone()),
            Self::Mobility {
                positions,
                cfg,
                rng,
                started,
            } => {
                if !*started {
                    *started = true;
                    return Ok(Graph::random_geometric(positions, cfg.range())
                        .expect("positions are finite"));
                }
                let (next, graph) = mobility_step(positions, cfg, rng)?;
                *positions = next;
                Ok(graph)
            }
            Self::Markov { spec, rng, current } => {
                let idx = match *current {
                    None => spec.sample_initial(rng)?,
                    Some(idx) => spec.step(idx, rng),
                };
                *current = Some(idx);
                Ok(spec.graphs().get(idx).clone())
            }
            Self::IidLinkFailure {
                base,
                failure_prob,
                rng,
            } => {
                let edges: Vec<(usize, usize)> = base
                    .edges()
                    .filter(|_| !rng.random_bool(*failure_prob))
                    .collect();
                Ok(Graph::new(base.n(), edges).expect("subset of valid edges"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn two_state_graphs() -> GraphSet {
        let g1 = Graph::new(2, [(0, 1)]).unwrap();
        let g2 = Graph::edgeless(2).unwrap();
        GraphSet::new(vec![g1, g2]).unwrap()
    }

    #[test]
    fn degenerate_mobility_keeps_positions() {
        let cfg = MobilityConfig::new(vec![0, 0], vec![[0.0, 0.0]], vec![0.0], 0.5).unwrap();
        let positions = vec![[0.1, 0.1], [0.4, 0.1]];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (next, g) = mobility_step(&positions, &cfg, &mut rng).unwrap();
        assert_eq!(next, positions);
        assert!(g.contains_edge(0, 1));
    }

    #[test]
    fn deterministic_drift_crosses_range_threshold() {
        // Two nodes 0.2 apart closing at 0.006 per step link up strictly
        // below 0.11, i.e. at step 15.
        let cfg = MobilityConfig::new(
            vec![0, 1],
            vec![[0.003, 0.0], [-0.003, 0.0]],
            vec![0.0, 0.0],
            0.11,
        )
        .unwrap();
        let mut positions = vec![[0.0, 0.0], [0.2, 0.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut first_link = None;
        for k in 1..=40u32 {
            let (next, g) = mobility_step(&positions, &cfg, &mut rng).unwrap();
            positions = next;
            if first_link.is_none() && g.contains_edge(0, 1) {
                first_link = Some(k);
            }
        }
        // Distance after k steps is 0.2 - 0.006k; < 0.11 first at k = 16.
        assert_eq!(first_link, Some(16));
    }

    #[test]
    fn stationary_uniform_two_state() {
        let spec = MarkovChainSpec::new(
            two_state_graphs(),
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            None,
        )
        .unwrap();
        let pi = spec.stationary_distribution().unwrap();
        assert_abs_diff_eq!(pi[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(pi[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn stationary_by_balance_equations() {
        // pi = (2/3, 1/3) solves the balance equations for this chain.
        let spec = MarkovChainSpec::new(
            two_state_graphs(),
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            None,
        )
        .unwrap();
        let pi = spec.stationary_distribution().unwrap();
        assert_abs_diff_eq!(pi[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pi[1], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_chain_is_not_ergodic() {
        let spec = MarkovChainSpec::new(
            two_state_graphs(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            Some(vec![1.0, 0.0]),
        )
        .unwrap();
        assert!(!spec.is_ergodic());
        assert_eq!(
            spec.ergodicity_violation(),
            Some(ErgodicityViolation::NotIrreducible)
        );
        assert!(matches!(
            spec.stationary_distribution(),
            Err(ProcessError::NotErgodic(ErgodicityViolation::NotIrreducible))
        ));
        // Absorbing state: every successor of 0 is 0.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert_eq!(spec.step(0, &mut rng), 0);
        }
    }

    #[test]
    fn two_cycle_is_periodic() {
        let spec = MarkovChainSpec::new(
            two_state_graphs(),
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            Some(vec![1.0, 0.0]),
        )
        .unwrap();
        assert_eq!(
            spec.ergodicity_violation(),
            Some(ErgodicityViolation::Periodic(2))
        );
    }

    #[test]
    fn uniform_chain_successors_are_balanced() {
        let spec = MarkovChainSpec::new(
            two_state_graphs(),
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            None,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 10_000;
        let ones = (0..trials)
            .filter(|_| spec.step(0, &mut rng) == 1)
            .count() as f64;
        // 4 sigma around the binomial mean.
        let sigma = (trials as f64 * 0.25).sqrt();
        assert!((ones - trials as f64 * 0.5).abs() < 4.0 * sigma);
    }

    #[test]
    fn occupancy_matches_stationary() {
        let spec = MarkovChainSpec::new(
            two_state_graphs(),
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            None,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut state = spec.sample_initial(&mut rng).unwrap();
        let steps = 1_000_000u64;
        let mut count0 = 0u64;
        for _ in 0..steps {
            if state == 0 {
                count0 += 1;
            }
            state = spec.step(state, &mut rng);
        }
        let occupancy = count0 as f64 / steps as f64;
        assert!(
            (occupancy - 2.0 / 3.0).abs() < 0.01,
            "occupancy {occupancy}"
        );
    }

    #[test]
    fn rejects_bad_transition_rows() {
        let err = MarkovChainSpec::new(
            two_state_graphs(),
            vec![vec![0.6, 0.6], vec![0.5, 0.5]],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, ProcessError::RowNotStochastic { row: 0, .. }));

        let err = MarkovChainSpec::new(
            two_state_graphs(),
            vec![vec![1.5, -0.5], vec![0.5, 0.5]],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, ProcessError::NegativeEntry { row: 0, col: 1 }));
    }

    #[test]
    fn failure_schedule_rules() {
        assert_eq!(
            FailureSchedule::new(vec![(SOURCE, 5)]).unwrap_err(),
            ProcessError::SourceFailure
        );
        assert_eq!(
            FailureSchedule::new(vec![(2, 0)]).unwrap_err(),
            ProcessError::FailureStepZero { node: 2 }
        );

        let path = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let schedule = FailureSchedule::new(vec![(1, 5)]).unwrap();
        assert_eq!(apply_failures(&path, &schedule, 4), path);
        let cut = apply_failures(&path, &schedule, 5);
        assert_eq!(cut.edge_count(), 0);
        assert_eq!(
            cut.connected_to_source(),
            vec![true, false, false]
        );

        let empty = FailureSchedule::default();
        assert_eq!(apply_failures(&path, &empty, 100), path);
    }

    #[test]
    fn failures_are_monotone() {
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let schedule = FailureSchedule::new(vec![(1, 3), (3, 7), (4, 7)]).unwrap();
        let mut prev = apply_failures(&g, &schedule, 0);
        for k in 1..12 {
            let cur = apply_failures(&g, &schedule, k);
            for (a, b) in cur.edges() {
                assert!(prev.contains_edge(a, b), "edge ({a},{b}) reappeared at k={k}");
            }
            prev = cur;
        }
    }

    #[test]
    fn processes_are_deterministic_under_seed() {
        let cfg = MobilityConfig::new(
            vec![0, 0, 1, 1],
            vec![[0.003, 0.003], [-0.003, -0.003]],
            vec![0.0003, 0.0003],
            0.3,
        )
        .unwrap();
        let make = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let positions = uniform_positions(4, &mut rng);
            GraphProcess::new_mobility(positions, cfg.clone(), ChaCha8Rng::seed_from_u64(100))
                .unwrap()
        };
        let mut a = make();
        let mut b = make();
        for _ in 0..25 {
            assert_eq!(a.next_graph().unwrap(), b.next_graph().unwrap());
        }

        let base = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut a =
            GraphProcess::new_iid_link_failure(base.clone(), 0.3, ChaCha8Rng::seed_from_u64(5))
                .unwrap();
        let mut b =
            GraphProcess::new_iid_link_failure(base, 0.3, ChaCha8Rng::seed_from_u64(5)).unwrap();
        for _ in 0..25 {
            assert_eq!(a.next_graph().unwrap(), b.next_graph().unwrap());
        }
    }

    #[test]
    fn markov_process_emits_graphs_from_the_set() {
        let spec = MarkovChainSpec::new(
            two_state_graphs(),
            vec![vec![0.3, 0.7], vec![0.6, 0.4]],
            None,
        )
        .unwrap();
        let graphs = spec.graphs().clone();
        let mut process = GraphProcess::new_markov(spec, ChaCha8Rng::seed_from_u64(8));
        for _ in 0..50 {
            let g = process.next_graph().unwrap();
            assert!(g == *graphs.get(0) || g == *graphs.get(1));
        }
    }
}
