//! Event-driven asynchronous execution of the state update.
//!
//! Each logical iteration has three phases, mirroring a real deployment:
//!
//! 1. discovery: every node broadcasts a batch of beacons; receivers count
//!    them per sender and, at the end of each discovery window, qualify a
//!    link as reliable iff its packet reception ratio exceeds the
//!    threshold (strictly);
//! 2. state broadcast: every node broadcasts its current state; receivers
//!    buffer the last state heard from each tabled neighbor;
//! 3. local update: every node evaluates the update rule over the reliable
//!    neighbors in its table, using buffered states for neighbors that
//!    have been silent, and first evicting neighbors silent for
//!    `evict_limit` iterations or more.
//!
//! Messages can be dropped by a configurable loss model. With no loss the
//! trace equals the synchronous engine's trace exactly, including the
//! floating-point summation order. Everything runs in one deterministic
//! event loop; ties are broken by (step, sender id), so a seed pins the
//! whole execution.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use thiserror::Error;

use crate::graph::{Graph, SOURCE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("PRR is undefined for zero sent beacons")]
    ZeroSent,
    #[error("invalid protocol parameters: {0}")]
    InvalidParams(String),
    #[error("graph at step {step} has {found} nodes, expected {expected}")]
    GraphSizeChanged {
        step: u64,
        expected: usize,
        found: usize,
    },
    #[error("source strength must be positive, got {0}")]
    NonpositiveStrength(f64),
}

/// Packet reception ratio: received / sent.
pub fn compute_prr(received: u64, sent: u64) -> Result<f64, ProtocolError> {
    if sent == 0 {
        return Err(ProtocolError::ZeroSent);
    }
    Ok(received as f64 / sent as f64)
}

/// Reliability gate: strictly above the threshold qualifies.
pub fn is_reliable(prr: f64, threshold: f64) -> bool {
    prr > threshold
}

/// Tunable protocol parameters. Defaults follow the deployed values:
/// PRR threshold 0.8, stale at 2 missed iterations, eviction at 4,
/// 10 beacons per one-iteration discovery window.
#[derive(Debug, Clone, PartialEq)]
pub struct AsyncParams {
    pub prr_threshold: f64,
    /// Missed iterations after which a neighbor's buffered state counts as
    /// stale (it keeps being used; the flag is observable in the table).
    pub stale_limit: u32,
    /// Missed iterations at which a neighbor is removed from the table.
    pub evict_limit: u32,
    pub beacons_per_window: u32,
    /// Discovery window length in iterations.
    pub window_len: u32,
    /// Whether an evicted neighbor may re-qualify in a later window.
    pub rediscovery: bool,
}

impl Default for AsyncParams {
    fn default() -> Self {
        Self {
            prr_threshold: 0.8,
            stale_limit: 2,
            evict_limit: 4,
            beacons_per_window: 10,
            window_len: 1,
            rediscovery: true,
        }
    }
}

impl AsyncParams {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(0.0..1.0).contains(&self.prr_threshold) {
            return Err(ProtocolError::InvalidParams(format!(
                "prr_threshold {} must lie in [0, 1)",
                self.prr_threshold
            )));
        }
        if self.evict_limit < self.stale_limit {
            return Err(ProtocolError::InvalidParams(format!(
                "evict_limit {} must be >= stale_limit {}",
                self.evict_limit, self.stale_limit
            )));
        }
        if self.beacons_per_window == 0 || self.window_len == 0 {
            return Err(ProtocolError::InvalidParams(
                "beacons_per_window and window_len must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-message loss process.
#[derive(Debug, Clone, PartialEq)]
pub enum LossModel {
    None,
    /// Each message dropped independently with the given probability.
    Bernoulli { rate: f64 },
    /// Two-state burst loss per directed link: messages are dropped while
    /// the link is in its bad state; `enter`/`exit` are the per-message
    /// transition probabilities into and out of that state.
    Burst { enter: f64, exit: f64 },
}

impl LossModel {
    fn validate(&self) -> Result<(), ProtocolError> {
        let ok = |p: &f64| (0.0..=1.0).contains(p) && p.is_finite();
        match self {
            Self::None => Ok(()),
            Self::Bernoulli { rate } if ok(rate) => Ok(()),
            Self::Burst { enter, exit } if ok(enter) && ok(exit) => Ok(()),
            _ => Err(ProtocolError::InvalidParams(
                "loss probabilities must lie in [0, 1]".into(),
            )),
        }
    }
}

/// Burst-state bookkeeping per directed link.
struct LossState {
    bad: Vec<bool>,
    n: usize,
}

impl LossState {
    fn new(n: usize) -> Self {
        Self {
            bad: vec![false; n * n],
            n,
        }
    }

    /// Whether one message on the directed link sender -> receiver drops.
    fn message_dropped(&mut self, model: &LossModel, sender: usize, receiver: usize, rng: &mut impl Rng) -> bool {
        match model {
            LossModel::None => false,
            LossModel::Bernoulli { rate } => *rate > 0.0 && rng.random_bool(*rate),
            LossModel::Burst { enter, exit } => {
                let idx = sender * self.n + receiver;
                if self.bad[idx] {
                    if *exit > 0.0 && rng.random_bool(*exit) {
                        self.bad[idx] = false;
                    }
                } else if *enter > 0.0 && rng.random_bool(*enter) {
                    self.bad[idx] = true;
                }
                self.bad[idx]
            }
        }
    }
}

/// One tabled neighbor as seen by a node.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborEntry {
    /// Last successfully received state, if any was ever received.
    pub state: Option<f64>,
    /// Iteration of the last successful state reception.
    pub last_iteration: Option<u64>,
    /// Consecutive iterations without a state broadcast from this neighbor.
    pub missed: u32,
    /// Outcome of the most recent discovery window with beacon evidence.
    pub reliable: bool,
}

impl NeighborEntry {
    fn fresh(reliable: bool) -> Self {
        Self {
            state: None,
            last_iteration: None,
            missed: 0,
            reliable,
        }
    }

    /// Whether the buffered state is currently a stale reuse.
    pub fn is_stale(&self, params: &AsyncParams) -> bool {
        self.missed >= params.stale_limit
    }

    /// Whether the entry contributes to a local update: it must be
    /// reliable and must have delivered at least one state.
    pub fn contributes(&self) -> bool {
        self.reliable && self.state.is_some()
    }
}

/// Protocol state owned by a single node: its scalar state plus the
/// neighbor table driving its updates.
#[derive(Debug, Clone)]
pub struct NodeRuntime {
    id: usize,
    state: f64,
    table: BTreeMap<usize, NeighborEntry>,
    evicted: BTreeSet<usize>,
}

impl NodeRuntime {
    pub fn new(id: usize) -> Self {
        Self {
            id,
            state: 0.0,
            table: BTreeMap::new(),
            evicted: BTreeSet::new(),
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn state(&self) -> f64 {
        self.state
    }

    pub fn set_state(&mut self, state: f64) {
        self.state = state;
    }

    pub fn neighbor(&self, id: usize) -> Option<&NeighborEntry> {
        self.table.get(&id)
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }

    /// Applies one finished discovery window. `received` maps sender id to
    /// the number of beacons heard from it; senders absent from the map
    /// delivered nothing. Links with beacon evidence are (re)qualified
    /// against the PRR gate; tabled links without any evidence keep their
    /// flag and are left to the staleness machinery.
    pub fn apply_discovery_window(
        &mut self,
        received: &BTreeMap<usize, u64>,
        sent: u64,
        params: &AsyncParams,
    ) -> Result<(), ProtocolError> {
        for (&sender, &count) in received {
            if count == 0 {
                continue;
            }
            let reliable = is_reliable(compute_prr(count, sent)?, params.prr_threshold);
            match self.table.get_mut(&sender) {
                Some(entry) => entry.reliable = reliable,
                None => {
                    if reliable && (params.rediscovery || !self.evicted.contains(&sender)) {
                        self.table.insert(sender, NeighborEntry::fresh(true));
                    }
                }
            }
        }
        Ok(())
    }

    /// Buffers a received state broadcast.
    pub fn record_state(&mut self, sender: usize, state: f64, iteration: u64) {
        if let Some(entry) = self.table.get_mut(&sender) {
            entry.state = Some(state);
            entry.last_iteration = Some(iteration);
            entry.missed = 0;
        }
    }

    /// Bumps the missed counter of every tabled neighbor that did not
    /// deliver a state this iteration.
    pub fn finish_state_phase(&mut self, delivered: &BTreeSet<usize>) {
        for (&sender, entry) in self.table.iter_mut() {
            if !delivered.contains(&sender) {
                entry.missed = entry.missed.saturating_add(1);
            }
        }
    }

    /// Removes neighbors silent for `evict_limit` iterations or more,
    /// returning the evicted ids.
    pub fn evict_overdue(&mut self, params: &AsyncParams) -> Vec<usize> {
        let overdue: Vec<usize> = self
            .table
            .iter()
            .filter(|(_, e)| e.missed >= params.evict_limit)
            .map(|(&id, _)| id)
            .collect();
        for id in &overdue {
            self.table.remove(id);
            self.evicted.insert(*id);
        }
        overdue
    }

    /// The update rule evaluated on this node's current neighbor view:
    /// contributing entries supply their buffered states, the degree is
    /// their count, and the source adds its strength before normalizing.
    pub fn local_update(&self, s: f64) -> f64 {
        let mut sum = 0.0;
        let mut degree = 0usize;
        for entry in self.table.values() {
            if entry.contributes() {
                sum += entry.state.expect("contributing entry has a state");
                degree += 1;
            }
        }
        if self.id == SOURCE {
            sum += s;
        }
        sum / (degree + 1) as f64
    }
}

/// Record of one eviction, for post-run inspection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvictionRecord {
    pub step: u64,
    pub node: usize,
    pub neighbor: usize,
}

/// Full asynchronous run output: `states[k][i]` is node i's state at
/// iteration k, for k = 0..=steps.
#[derive(Debug, Clone)]
pub struct AsyncTrace {
    pub states: Vec<Vec<f64>>,
    pub evictions: Vec<EvictionRecord>,
}

/// Runs the protocol for `steps` iterations over the graph sequence
/// produced by `graph_at(k)`, k = 0..steps-1.
pub fn run_async(
    mut graph_at: impl FnMut(u64) -> Graph,
    n: usize,
    s: f64,
    steps: u64,
    params: &AsyncParams,
    loss: &LossModel,
    rng: &mut impl Rng,
) -> Result<AsyncTrace, ProtocolError> {
    params.validate()?;
    loss.validate()?;
    if s <= 0.0 || !s.is_finite() {
        return Err(ProtocolError::NonpositiveStrength(s));
    }

    let mut nodes: Vec<NodeRuntime> = (0..n).map(NodeRuntime::new).collect();
    let mut states = vec![vec![0.0; n]];
    let mut evictions = Vec::new();
    let mut loss_state = LossState::new(n);
    // Beacon counts accumulate across the window: windows[receiver][sender].
    let mut window_counts: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); n];

    for k in 0..steps {
        let graph = graph_at(k);
        if graph.n() != n {
            return Err(ProtocolError::GraphSizeChanged {
                step: k,
                expected: n,
                found: graph.n(),
            });
        }

        // Discovery phase: beacons travel over current links, subject to
        // loss; receivers accumulate counts until the window closes.
        for receiver in 0..n {
            for &sender in graph.neighbors(receiver) {
                let mut heard = 0u64;
                for _ in 0..params.beacons_per_window {
                    if !loss_state.message_dropped(loss, sender, receiver, rng) {
                        heard += 1;
                    }
                }
                *window_counts[receiver].entry(sender).or_insert(0) += heard;
            }
        }
        if (k + 1) % params.window_len as u64 == 0 {
            let sent = params.beacons_per_window as u64 * params.window_len as u64;
            for (receiver, counts) in window_counts.iter_mut().enumerate() {
                nodes[receiver].apply_discovery_window(counts, sent, params)?;
                counts.clear();
            }
        }

        // State phase: everyone broadcasts the state it holds at the start
        // of the iteration; receivers buffer what arrives.
        let snapshot: Vec<f64> = nodes.iter().map(NodeRuntime::state).collect();
        let mut delivered: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for receiver in 0..n {
            for &sender in graph.neighbors(receiver) {
                if !loss_state.message_dropped(loss, sender, receiver, rng) {
                    nodes[receiver].record_state(sender, snapshot[sender], k);
                    delivered[receiver].insert(sender);
                }
            }
        }
        for (receiver, heard) in delivered.iter().enumerate() {
            nodes[receiver].finish_state_phase(heard);
        }

        // Eviction, then the simultaneous update.
        for node in nodes.iter_mut() {
            for neighbor in node.evict_overdue(params) {
                evictions.push(EvictionRecord {
                    step: k,
                    node: node.id(),
                    neighbor,
                });
            }
        }
        let next: Vec<f64> = nodes.iter().map(|node| node.local_update(s)).collect();
        for (node, &value) in nodes.iter_mut().zip(&next) {
            node.set_state(value);
        }
        states.push(next);
    }

    Ok(AsyncTrace { states, evictions })
}
