//! Synchronous message-passing simulation of the guarded-command algorithms.
//!
//! Processes cannot read each other's memory here; each keeps a cache of its
//! neighbors' last-broadcast records and coordinates moves over a five-round
//! cycle:
//!
//! 1. **Broadcast**: everyone sends its record; caches refresh; each node
//!    decides from its cache whether some rule is enabled and, if so, draws
//!    a random vote.
//! 2. **Vote**: enabled nodes broadcast their draw. Every node endorses the
//!    sender of the strictly largest vote it can see — the received votes
//!    plus its own draw when enabled; a tie endorses nobody.
//! 3. **Execute**: a node that believes itself enabled and is endorsed by
//!    *every* neighbor fires its lowest enabled rule on its cached view,
//!    updating its own record and its cached copies of the neighbors it
//!    wrote.
//! 4. **Update**: executors broadcast their new record plus the written
//!    entries; a neighbor named in the writes adopts its new record.
//! 5. **Repair**: nodes that adopted a record rebroadcast it so third-party
//!    caches catch up before the next cycle.
//!
//! Counting a node's own vote in step 2 is what keeps executors pairwise at
//! distance three or more: two nodes within distance two share a pool
//! member, so they can never both hold the strict maximum everywhere they
//! need to. The invariant is structural — dropped messages can only shrink
//! the executor set, never break the spacing — so concurrent moves touch
//! disjoint closed neighborhoods and serialize in any order.

pub mod fault;

use std::collections::BTreeMap;

use itertools::Itertools;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{AlgorithmError, AlgorithmSpec, WitnessPolicy};
use crate::engine::state::{Configuration, NeighborhoodView, ProcState};
use crate::engine::trace::MoveRecord;
use crate::seeds;
use crate::topology::{Graph, ProcId};
pub use fault::FaultPlan;

/// Seed stream tags keeping vote draws, cache garbage, and corruption
/// draws decoupled from one another.
const VOTE_STREAM: u64 = 0x766f7465;
const CACHE_STREAM: u64 = 0x63616368;
const CORRUPT_STREAM: u64 = 0x636f7272;

/// Errors from simulator construction.
#[derive(Debug, Error)]
pub enum TransformerError {
    #[error("vote-range multiplier must be at least 2, got {0}")]
    CapacityTooSmall(u64),
    #[error("start phase must lie in 1..=5, got {0}")]
    BadStartPhase(u8),
    #[error("network-size bound {bound} is below the actual size {n}")]
    SizeBoundTooSmall { bound: usize, n: usize },
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
}

/// Tuning knobs for a simulated run.
#[derive(Debug, Clone)]
pub struct TrParams {
    /// Vote-range multiplier: votes are drawn from `1..=multiplier * bound`.
    /// At least 2, so the range strictly exceeds the network size and a
    /// strictly unique maximum is more likely than not.
    pub capacity_factor: u64,
    /// Upper bound on the network size known to every node; defaults to the
    /// actual size.
    pub size_bound: Option<usize>,
    /// Seed for vote draws and initial cache garbage.
    pub seed: u64,
    /// Phase the very first round runs (1..=5). Starting past phase 1
    /// models joining mid-cycle: the remainder of that cycle is quiescent
    /// because every coordination flag starts cleared.
    pub start_phase: u8,
    /// Cycle budget for [`Simulator::run_to_silence`].
    pub max_cycles: usize,
    /// Tie-break among witnesses when a rule fires.
    pub witness: WitnessPolicy,
    /// Message-loss plan.
    pub fault: FaultPlan,
}

impl Default for TrParams {
    fn default() -> Self {
        TrParams {
            capacity_factor: 2,
            size_bound: None,
            seed: 0,
            start_phase: 1,
            max_cycles: 500,
            witness: WitnessPolicy::LowestId,
            fault: FaultPlan::None,
        }
    }
}

#[derive(Debug, Clone)]
enum Payload {
    State(ProcState),
    Vote(u64),
    Winner(ProcId),
    Update { state: ProcState, writes: BTreeMap<ProcId, ProcState> },
}

/// Per-node runtime: the real record, the neighbor cache, and the
/// coordination flags that live for one cycle.
#[derive(Debug, Clone)]
struct NodeRuntime {
    state: ProcState,
    cache: BTreeMap<ProcId, ProcState>,
    believes_enabled: bool,
    draw: u64,
    endorsed: Option<ProcId>,
    executed: bool,
    adopted: bool,
    last_writes: BTreeMap<ProcId, ProcState>,
    rng: ChaCha8Rng,
}

/// Everything that happened during one cycle, full or partial.
#[derive(Debug, Clone, Serialize)]
pub struct CycleRecord {
    pub index: usize,
    pub first_round: usize,
    pub rounds: usize,
    /// Whether this cycle contained a broadcast phase. The first cycle of a
    /// run started past phase 1 does not, so its caches stay unvalidated.
    pub had_broadcast_phase: bool,
    /// Nodes that believed some rule enabled at the broadcast phase.
    pub enabled: Vec<ProcId>,
    pub executors: Vec<ProcId>,
    pub moves: Vec<MoveRecord>,
    /// Projected configuration (every node's real record) at cycle start.
    pub pre: Configuration,
    pub post: Configuration,
    pub broadcasts: usize,
}

/// Per-cycle numbers for the metrics export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleMetrics {
    pub cycle: usize,
    pub rounds: usize,
    pub bcasts: usize,
    pub moves: usize,
    /// Enabled count at the broadcast phase; absent for a partial cycle.
    pub enabled: Option<usize>,
}

/// Whole-run numbers for the metrics export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    pub cycles: usize,
    pub rounds: usize,
    pub bcasts: usize,
    pub moves: usize,
    pub converged: bool,
    pub per_cycle: Vec<CycleMetrics>,
}

impl Metrics {
    pub fn from_records(records: &[CycleRecord], converged: bool) -> Self {
        Metrics {
            cycles: records.len(),
            rounds: records.iter().map(|r| r.rounds).sum(),
            bcasts: records.iter().map(|r| r.broadcasts).sum(),
            moves: records.iter().map(|r| r.moves.len()).sum(),
            converged,
            per_cycle: records
                .iter()
                .map(|r| CycleMetrics {
                    cycle: r.index,
                    rounds: r.rounds,
                    bcasts: r.broadcasts,
                    moves: r.moves.len(),
                    enabled: r.had_broadcast_phase.then_some(r.enabled.len()),
                })
                .collect(),
        }
    }
}

#[derive(Default)]
struct CycleAcc {
    had_broadcast_phase: bool,
    enabled: Vec<ProcId>,
    executors: Vec<ProcId>,
    moves: Vec<MoveRecord>,
    broadcasts: usize,
    rounds: usize,
}

/// The synchronous network simulator.
pub struct Simulator<'a> {
    graph: &'a Graph,
    alg: AlgorithmSpec,
    params: TrParams,
    vote_range: u64,
    nodes: Vec<NodeRuntime>,
    round: usize,
    cycles_run: usize,
}

impl<'a> Simulator<'a> {
    pub fn new(
        graph: &'a Graph,
        alg: AlgorithmSpec,
        init: &Configuration,
        params: TrParams,
    ) -> Result<Self, TransformerError> {
        if params.capacity_factor < 2 {
            return Err(TransformerError::CapacityTooSmall(params.capacity_factor));
        }
        if !(1..=5).contains(&params.start_phase) {
            return Err(TransformerError::BadStartPhase(params.start_phase));
        }
        let bound = params.size_bound.unwrap_or(graph.n());
        if bound < graph.n() {
            return Err(TransformerError::SizeBoundTooSmall { bound, n: graph.n() });
        }
        alg.validate(graph, init)?;
        let vote_range = params.capacity_factor * bound as u64;
        let nodes = (0..graph.n())
            .map(|i| {
                // Caches start as arbitrary garbage — domain-valid but
                // unrelated to the true records — exactly what a node
                // rebooting into a running network would hold.
                let mut cache_rng = seeds::rng_for(seeds::mix(params.seed, CACHE_STREAM), i as u64);
                let cache = graph
                    .neighbors(i)
                    .iter()
                    .map(|&j| {
                        let domain = alg.domain(graph, j);
                        (j, domain[cache_rng.gen_range(0..domain.len())])
                    })
                    .collect();
                NodeRuntime {
                    state: init.state(i),
                    cache,
                    believes_enabled: false,
                    draw: 0,
                    endorsed: None,
                    executed: false,
                    adopted: false,
                    last_writes: BTreeMap::new(),
                    rng: seeds::rng_for(seeds::mix(params.seed, VOTE_STREAM), i as u64),
                }
            })
            .collect();
        Ok(Simulator { graph, alg, params, vote_range, nodes, round: 0, cycles_run: 0 })
    }

    /// Phase (1..=5) the next round will run.
    pub fn current_phase(&self) -> u8 {
        ((self.params.start_phase as usize - 1 + self.round) % 5 + 1) as u8
    }

    /// Global rounds elapsed.
    pub fn rounds_elapsed(&self) -> usize {
        self.round
    }

    /// Replaces the message-loss plan mid-run, e.g. to open a drop window
    /// only after the system has stabilized.
    pub fn set_fault(&mut self, plan: FaultPlan) {
        self.params.fault = plan;
    }

    /// Runs a single round and reports the phase it executed. Leaves the
    /// simulator mid-cycle; a later [`run_cycle`](Self::run_cycle) simply
    /// completes the current cycle.
    pub fn step_one_round(&mut self) -> u8 {
        let phase = self.current_phase();
        let mut acc = CycleAcc::default();
        self.step_round(&mut acc);
        phase
    }

    /// Every node's real record, as a configuration.
    pub fn projected_config(&self) -> Configuration {
        Configuration::new(self.nodes.iter().map(|n| n.state).collect())
    }

    /// Whether every cache entry matches the neighbor's real record.
    pub fn check_cache_coherent(&self) -> Result<(), CoherencyViolation> {
        for (i, node) in self.nodes.iter().enumerate() {
            for &j in self.graph.neighbors(i) {
                let cached = node.cache[&j];
                if cached != self.nodes[j].state {
                    return Err(CoherencyViolation {
                        node: i,
                        neighbor: j,
                        cached,
                        actual: self.nodes[j].state,
                    });
                }
            }
        }
        Ok(())
    }

    /// Overwrites `count` nodes' records and caches with uniform garbage,
    /// modeling a transient fault. Returns the nodes hit, ascending.
    pub fn corrupt(&mut self, fault_seed: u64, count: usize) -> Vec<ProcId> {
        let n = self.graph.n();
        let mut rng = seeds::rng_for(seeds::mix(fault_seed, CORRUPT_STREAM), 0);
        let mut hit = rand::seq::index::sample(&mut rng, n, count.min(n)).into_vec();
        hit.sort_unstable();
        for &i in &hit {
            let domain = self.alg.domain(self.graph, i);
            self.nodes[i].state = domain[rng.gen_range(0..domain.len())];
            let neighbor_garbage: Vec<(ProcId, ProcState)> = self
                .graph
                .neighbors(i)
                .iter()
                .map(|&j| {
                    let domain = self.alg.domain(self.graph, j);
                    (j, domain[rng.gen_range(0..domain.len())])
                })
                .collect();
            self.nodes[i].cache.extend(neighbor_garbage);
        }
        hit
    }

    // Phase handlers walk process ids to read `inbox[i]` while mutating
    // `self.nodes[i]`; an iterator over either side would pin the borrow.
    #[allow(clippy::needless_range_loop)]
    fn step_round(&mut self, acc: &mut CycleAcc) {
        let phase = self.current_phase();
        let n = self.graph.n();

        if phase == 1 {
            for node in &mut self.nodes {
                node.believes_enabled = false;
                node.draw = 0;
                node.endorsed = None;
                node.executed = false;
                node.adopted = false;
                node.last_writes.clear();
            }
        }

        // Collect this round's broadcasts.
        let mut outbox: Vec<(ProcId, Payload)> = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let payload = match phase {
                1 => Some(Payload::State(node.state)),
                2 if node.believes_enabled => Some(Payload::Vote(node.draw)),
                3 => node.endorsed.map(Payload::Winner),
                4 if node.executed => Some(Payload::Update {
                    state: node.state,
                    writes: node.last_writes.clone(),
                }),
                5 if node.adopted => Some(Payload::State(node.state)),
                _ => None,
            };
            if let Some(p) = payload {
                outbox.push((i, p));
            }
        }
        acc.broadcasts += outbox.len();

        // Synchronous delivery to every neighbor the fault plan spares.
        let mut inbox: Vec<Vec<(ProcId, Payload)>> = vec![Vec::new(); n];
        for (from, payload) in &outbox {
            for &to in self.graph.neighbors(*from) {
                if !self.params.fault.drops(self.round, *from, to) {
                    inbox[to].push((*from, payload.clone()));
                }
            }
        }

        match phase {
            1 => {
                acc.had_broadcast_phase = true;
                for i in 0..n {
                    for (from, payload) in &inbox[i] {
                        if let Payload::State(s) = payload {
                            self.nodes[i].cache.insert(*from, *s);
                        }
                    }
                    let enabled = {
                        let node = &self.nodes[i];
                        let view =
                            NeighborhoodView::of_cache(self.graph, i, &node.state, &node.cache);
                        self.alg.enabled_on(&view)
                    };
                    let node = &mut self.nodes[i];
                    node.believes_enabled = enabled;
                    if enabled {
                        node.draw = node.rng.gen_range(1..=self.vote_range);
                        acc.enabled.push(i);
                    }
                }
            }
            2 => {
                for i in 0..n {
                    let mut pool: Vec<(ProcId, u64)> = inbox[i]
                        .iter()
                        .filter_map(|(from, p)| match p {
                            Payload::Vote(v) => Some((*from, *v)),
                            _ => None,
                        })
                        .collect();
                    let node = &mut self.nodes[i];
                    if node.believes_enabled {
                        pool.push((i, node.draw));
                    }
                    node.endorsed = strict_unique_max(&pool);
                }
            }
            3 => {
                for i in 0..n {
                    let endorsements: Vec<ProcId> = inbox[i]
                        .iter()
                        .filter_map(|(_, p)| match p {
                            Payload::Winner(w) => Some(*w),
                            _ => None,
                        })
                        .collect();
                    let unanimous = endorsements.len() == self.graph.degree(i)
                        && endorsements.iter().all(|&w| w == i);
                    if !(self.nodes[i].believes_enabled && unanimous) {
                        continue;
                    }
                    // Fire the lowest enabled rule on the cached view. The
                    // guard may have evaporated if the cache was corrupted
                    // mid-cycle; then the execution degenerates to a no-op.
                    let fired = {
                        let node = &self.nodes[i];
                        let view =
                            NeighborhoodView::of_cache(self.graph, i, &node.state, &node.cache);
                        self.alg.default_move(&view, self.params.witness)
                    };
                    let Some((rule, witness, ws)) = fired else { continue };
                    assert!(ws.is_local_to(self.graph, i), "rule wrote outside the neighborhood");
                    let writes = ws.as_map();
                    let node = &mut self.nodes[i];
                    for (&target, &value) in &writes {
                        if target == i {
                            node.state = value;
                        } else {
                            node.cache.insert(target, value);
                        }
                    }
                    node.executed = true;
                    node.last_writes = writes.clone();
                    acc.moves.push(MoveRecord {
                        step: acc.moves.len(),
                        proc: i,
                        rule,
                        witness,
                        writes,
                    });
                    acc.executors.push(i);
                }
            }
            4 => {
                for i in 0..n {
                    for (from, payload) in &inbox[i] {
                        if let Payload::Update { state, writes } = payload {
                            self.nodes[i].cache.insert(*from, *state);
                            if let Some(&value) = writes.get(&i) {
                                if value != self.nodes[i].state {
                                    self.nodes[i].state = value;
                                    self.nodes[i].adopted = true;
                                }
                            }
                        }
                    }
                }
            }
            5 => {
                for i in 0..n {
                    for (from, payload) in &inbox[i] {
                        if let Payload::State(s) = payload {
                            self.nodes[i].cache.insert(*from, *s);
                        }
                    }
                }
            }
            _ => unreachable!("phases run 1..=5"),
        }

        self.round += 1;
        acc.rounds += 1;
    }

    /// Runs rounds up to and including the next phase-5 round.
    pub fn run_cycle(&mut self) -> CycleRecord {
        let index = self.cycles_run;
        self.cycles_run += 1;
        let first_round = self.round;
        let pre = self.projected_config();
        let mut acc = CycleAcc::default();
        loop {
            let phase = self.current_phase();
            self.step_round(&mut acc);
            if phase == 5 {
                break;
            }
        }
        CycleRecord {
            index,
            first_round,
            rounds: acc.rounds,
            had_broadcast_phase: acc.had_broadcast_phase,
            enabled: acc.enabled,
            executors: acc.executors,
            moves: acc.moves,
            pre,
            post: self.projected_config(),
            broadcasts: acc.broadcasts,
        }
    }

    /// Runs cycles until one with a broadcast phase reports nothing enabled
    /// (the system is silent) or the cycle budget runs out.
    pub fn run_to_silence(&mut self) -> (Metrics, Vec<CycleRecord>) {
        let mut records = Vec::new();
        let mut converged = false;
        while records.len() < self.params.max_cycles {
            let record = self.run_cycle();
            let silent = record.had_broadcast_phase && record.enabled.is_empty();
            records.push(record);
            if silent {
                converged = true;
                break;
            }
        }
        (Metrics::from_records(&records, converged), records)
    }
}

/// Sender of the strictly unique maximum vote, if any.
fn strict_unique_max(pool: &[(ProcId, u64)]) -> Option<ProcId> {
    let max = pool.iter().map(|&(_, v)| v).max()?;
    let mut holders = pool.iter().filter(|&&(_, v)| v == max);
    let winner = holders.next()?.0;
    holders.next().is_none().then_some(winner)
}

/// A cache entry that disagrees with the neighbor's real record.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("node {node} caches {cached:?} for neighbor {neighbor}, whose record is {actual:?}")]
pub struct CoherencyViolation {
    pub node: ProcId,
    pub neighbor: ProcId,
    pub cached: ProcState,
    pub actual: ProcState,
}

/// Two same-cycle executors closer than distance three.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("executors {a} and {b} are at distance {distance}, closer than 3")]
pub struct ExclusionViolation {
    pub a: ProcId,
    pub b: ProcId,
    pub distance: usize,
}

/// Checks that all same-cycle executors are pairwise at distance >= 3.
pub fn check_exclusion(g: &Graph, executors: &[ProcId]) -> Result<(), ExclusionViolation> {
    for (idx, &a) in executors.iter().enumerate() {
        for &b in &executors[idx + 1..] {
            let distance = g.distance(a, b).unwrap_or(usize::MAX);
            if distance < 3 {
                return Err(ExclusionViolation { a, b, distance });
            }
        }
    }
    Ok(())
}

/// Replays a cycle's executions serially in *every* order and demands each
/// ordering re-derives the recorded moves and lands on the recorded
/// post-configuration. Meaningful for fault-free cycles, where caches match
/// the projected configuration.
pub fn serialization_witness(
    g: &Graph,
    alg: &AlgorithmSpec,
    policy: WitnessPolicy,
    record: &CycleRecord,
) -> Result<(), String> {
    let count = record.executors.len();
    for order in record.executors.iter().copied().permutations(count) {
        let mut cfg = record.pre.clone();
        for e in order.iter().copied() {
            let view = NeighborhoodView::of_config(g, &cfg, e);
            let (rule, witness, ws) = alg.default_move(&view, policy).ok_or_else(|| {
                format!("order {order:?}: executor {e} is disabled when its turn comes")
            })?;
            let recorded =
                record.moves.iter().find(|m| m.proc == e).expect("executor has a recorded move");
            if recorded.rule != rule || recorded.witness != witness || recorded.writes != ws.as_map()
            {
                return Err(format!(
                    "order {order:?}: executor {e} re-derives rule {rule} witness {witness:?}, \
                     but the cycle recorded rule {} witness {:?}",
                    recorded.rule, recorded.witness
                ));
            }
            cfg = cfg.with_writes(&ws);
        }
        if cfg != record.post {
            return Err(format!("order {order:?} ends at {cfg:?}, cycle ended at {:?}", record.post));
        }
    }
    Ok(())
}

/// Probability that, among `participants` independent uniform draws from
/// `1..=range`, some draw is strictly greater than all others: the chance a
/// fully-enabled clique executes anything in one cycle.
pub fn unique_max_probability(participants: usize, range: u64) -> f64 {
    let n = participants as f64;
    let r = range as f64;
    // Sum over the winner's value v: n * P(one node draws v) * P(the other
    // n-1 all draw below v).
    (1..=range).map(|v| n * (1.0 / r) * (((v - 1) as f64 / r).powf(n - 1.0))).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::InitSpec;
    use crate::topology;

    fn pointers(qs: &[Option<ProcId>]) -> Configuration {
        Configuration::new(qs.iter().map(|&q| ProcState::Pointer { q }).collect())
    }

    fn all_free(n: usize) -> Configuration {
        Configuration::new(vec![ProcState::Pointer { q: None }; n])
    }

    fn params(seed: u64) -> TrParams {
        TrParams { seed, ..TrParams::default() }
    }

    #[test]
    fn constructor_validates_parameters() {
        let g = topology::path(3).unwrap();
        let alg = AlgorithmSpec::mmat11();
        let init = all_free(3);
        let bad = TrParams { capacity_factor: 1, ..TrParams::default() };
        assert!(Simulator::new(&g, alg, &init, bad).is_err());
        let bad = TrParams { start_phase: 0, ..TrParams::default() };
        assert!(Simulator::new(&g, alg, &init, bad).is_err());
        let bad = TrParams { start_phase: 6, ..TrParams::default() };
        assert!(Simulator::new(&g, alg, &init, bad).is_err());
        let bad = TrParams { size_bound: Some(2), ..TrParams::default() };
        assert!(Simulator::new(&g, alg, &init, bad).is_err());
    }

    #[test]
    fn lone_enabled_node_always_executes() {
        // Matched pair 0-1 plus 2 pointing at taken 1: only 2 is enabled
        // (withdrawal), so it must win every endorsement and fire.
        let g = topology::path(3).unwrap();
        let alg = AlgorithmSpec::mmat11();
        let init = pointers(&[Some(1), Some(0), Some(1)]);
        for seed in 0..10 {
            let mut sim = Simulator::new(&g, alg, &init, params(seed)).unwrap();
            let record = sim.run_cycle();
            assert_eq!(record.enabled, vec![2], "seed {seed}");
            assert_eq!(record.executors, vec![2], "seed {seed}");
            assert_eq!(record.moves[0].rule, 5);
            assert_eq!(record.post, pointers(&[Some(1), Some(0), None]));
            // Next cycle observes silence.
            let record = sim.run_cycle();
            assert!(record.enabled.is_empty());
            assert_eq!(record.broadcasts, 3, "only the broadcast phase speaks");
        }
    }

    #[test]
    fn caches_are_coherent_at_full_cycle_boundaries() {
        let g = topology::cycle(6).unwrap();
        let alg = AlgorithmSpec::mmat11();
        let init = all_free(6);
        let mut sim = Simulator::new(&g, alg, &init, params(42)).unwrap();
        for _ in 0..12 {
            let record = sim.run_cycle();
            assert!(record.had_broadcast_phase);
            sim.check_cache_coherent().unwrap_or_else(|v| panic!("{v}"));
        }
    }

    #[test]
    fn executors_keep_their_distance() {
        let g = topology::path(7).unwrap();
        let alg = AlgorithmSpec::mmat11();
        for seed in 0..30 {
            let mut sim = Simulator::new(&g, alg, &all_free(7), params(seed)).unwrap();
            let (metrics, records) = sim.run_to_silence();
            assert!(metrics.converged, "seed {seed}");
            for record in &records {
                check_exclusion(&g, &record.executors).unwrap_or_else(|v| panic!("seed {seed}: {v}"));
            }
            assert!(alg.is_legitimate(&g, &sim.projected_config()), "seed {seed}");
        }
    }

    #[test]
    fn complete_graph_admits_at_most_one_executor() {
        let g = topology::complete(5).unwrap();
        let alg = AlgorithmSpec::mmat11();
        let mut saw_execution = false;
        for seed in 0..20 {
            let mut sim = Simulator::new(&g, alg, &all_free(5), params(seed)).unwrap();
            let record = sim.run_cycle();
            assert!(record.executors.len() <= 1, "seed {seed}: {:?}", record.executors);
            saw_execution |= !record.executors.is_empty();
        }
        assert!(saw_execution, "unique maxima happen often at this vote range");
    }

    #[test]
    fn paired_write_is_adopted_by_the_partner() {
        // On a two-clique both nodes start free; whoever executes the
        // pairing rule writes both pointers, and the partner must adopt.
        let g = topology::complete(2).unwrap();
        let alg = AlgorithmSpec::mmat11();
        for seed in 0..20 {
            let mut sim = Simulator::new(&g, alg, &all_free(2), params(seed)).unwrap();
            let (metrics, records) = sim.run_to_silence();
            assert!(metrics.converged);
            for record in &records {
                assert!(record.executors.len() <= 1, "seed {seed}: both fired");
            }
            assert_eq!(sim.projected_config(), pointers(&[Some(1), Some(0)]));
            sim.check_cache_coherent().unwrap();
        }
    }

    #[test]
    fn start_phase_midway_stays_quiescent_then_recovers() {
        let g = topology::path(4).unwrap();
        let alg = AlgorithmSpec::mmat11();
        for start_phase in 2..=5u8 {
            let p = TrParams { start_phase, seed: 7, ..TrParams::default() };
            let mut sim = Simulator::new(&g, alg, &all_free(4), p).unwrap();
            let record = sim.run_cycle();
            assert!(!record.had_broadcast_phase);
            assert_eq!(record.rounds as u8, 5 - start_phase + 1);
            assert!(record.executors.is_empty(), "partial cycle must not execute");
            assert_eq!(record.broadcasts, 0, "coordination flags start cleared");
            assert_eq!(record.pre, record.post);
            let (metrics, _) = sim.run_to_silence();
            assert!(metrics.converged);
            assert!(alg.is_legitimate(&g, &sim.projected_config()));
        }
    }

    #[test]
    fn counted_algorithm_runs_through_the_simulator() {
        let g = topology::cycle(5).unwrap();
        let alg = AlgorithmSpec::mkdom11(1).unwrap();
        let init = alg.initial_config(&g, &InitSpec::AllOnesCorrectCounters).unwrap();
        let mut sim = Simulator::new(&g, alg, &init, params(3)).unwrap();
        let (metrics, records) = sim.run_to_silence();
        assert!(metrics.converged);
        for record in &records {
            check_exclusion(&g, &record.executors).unwrap();
        }
        let final_cfg = sim.projected_config();
        assert!(alg.is_legitimate(&g, &final_cfg));
        crate::verifier::structure_check(&g, &alg, &final_cfg).unwrap();
    }

    #[test]
    fn serialization_witness_accepts_clean_cycles() {
        let g = topology::path(9).unwrap();
        let alg = AlgorithmSpec::mmat11();
        let mut multi = 0;
        for seed in 0..40 {
            let mut sim = Simulator::new(&g, alg, &all_free(9), params(seed)).unwrap();
            let (_, records) = sim.run_to_silence();
            for record in &records {
                serialization_witness(&g, &alg, WitnessPolicy::LowestId, record)
                    .unwrap_or_else(|e| panic!("seed {seed}, cycle {}: {e}", record.index));
                if record.executors.len() >= 2 {
                    multi += 1;
                }
            }
        }
        assert!(multi >= 5, "want several genuinely concurrent cycles, saw {multi}");
    }

    #[test]
    fn dropped_messages_stall_but_never_derail() {
        let g = topology::path(4).unwrap();
        let alg = AlgorithmSpec::mmat11();
        // Lose everything for the first two full cycles.
        let p = TrParams {
            seed: 5,
            fault: FaultPlan::DropAll { from: 0, to: 9 },
            ..TrParams::default()
        };
        let mut sim = Simulator::new(&g, alg, &all_free(4), p).unwrap();
        for _ in 0..2 {
            let record = sim.run_cycle();
            assert!(record.moves.is_empty(), "no endorsements can form while all is lost");
        }
        let (metrics, records) = sim.run_to_silence();
        assert!(metrics.converged, "drops ended, so the run must finish");
        for record in &records {
            check_exclusion(&g, &record.executors).unwrap();
        }
        assert!(alg.is_legitimate(&g, &sim.projected_config()));
    }

    #[test]
    fn corruption_after_convergence_is_reabsorbed() {
        let g = topology::cycle(6).unwrap();
        let alg = AlgorithmSpec::mmat11();
        let mut sim = Simulator::new(&g, alg, &all_free(6), params(11)).unwrap();
        let (metrics, _) = sim.run_to_silence();
        assert!(metrics.converged);
        let hit = sim.corrupt(99, 2);
        assert_eq!(hit.len(), 2);
        let (metrics, records) = sim.run_to_silence();
        assert!(metrics.converged, "corruption must be transient");
        for record in &records {
            check_exclusion(&g, &record.executors).unwrap();
        }
        assert!(alg.is_legitimate(&g, &sim.projected_config()));
    }

    #[test]
    fn metrics_export_shape() {
        let g = topology::path(3).unwrap();
        let alg = AlgorithmSpec::mmat11();
        let mut sim = Simulator::new(&g, alg, &all_free(3), params(0)).unwrap();
        let (metrics, _) = sim.run_to_silence();
        let json = serde_json::to_value(&metrics).unwrap();
        for key in ["cycles", "rounds", "bcasts", "moves", "converged", "per_cycle"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["rounds"].as_u64().unwrap(), 5 * json["cycles"].as_u64().unwrap());
    }

    #[test]
    fn silent_network_speaks_once_per_cycle() {
        let g = topology::cycle(4).unwrap();
        let alg = AlgorithmSpec::mmat11();
        let legit = pointers(&[Some(1), Some(0), Some(3), Some(2)]);
        let mut sim = Simulator::new(&g, alg, &legit, params(0)).unwrap();
        let record = sim.run_cycle();
        assert!(record.enabled.is_empty());
        assert_eq!(record.broadcasts, 4, "one state broadcast per node, nothing else");
        assert_eq!(record.pre, record.post);
    }

    #[test]
    fn unique_max_probability_closed_form() {
        // Two draws from 1..=4: P(no tie) = 1 - 4/16.
        assert!((unique_max_probability(2, 4) - 0.75).abs() < 1e-12);
        // One participant always wins.
        assert!((unique_max_probability(1, 7) - 1.0).abs() < 1e-12);
        // Probability grows with the range for fixed participants.
        assert!(unique_max_probability(5, 100) > unique_max_probability(5, 10));
    }

    #[test]
    fn execution_is_fair_across_a_symmetric_clique() {
        let g = topology::complete(5).unwrap();
        let alg = AlgorithmSpec::mmat11();
        let mut wins = [0usize; 5];
        for seed in 0..600 {
            let mut sim = Simulator::new(&g, alg, &all_free(5), params(seed)).unwrap();
            let record = sim.run_cycle();
            if let [only] = record.executors[..] {
                wins[only] += 1;
            }
        }
        let total: usize = wins.iter().sum();
        assert!(total > 300, "unique maxima should be common, saw {total}");
        let expected = total as f64 / 5.0;
        for (node, &w) in wins.iter().enumerate() {
            assert!(
                (w as f64) > expected * 0.6 && (w as f64) < expected * 1.4,
                "node {node} won {w} of {total}; symmetry is broken"
            );
        }
    }
}
