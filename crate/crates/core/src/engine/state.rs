//! Per-process variable records, global configurations, and the
//! locality-scoped views and write sets that guarded commands operate on.
//!
//! A rule never sees the whole configuration: guards and commands receive a
//! [`NeighborhoodView`] restricted to the center process and its one-hop
//! neighbors, and produce a [`WriteSet`] that may only name processes in
//! that same closed neighborhood. Read locality is therefore structural and
//! write locality is asserted on every applied move.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::topology::{Graph, ProcId};

/// The variables one process owns, for whichever algorithm is running.
///
/// * `Pointer`: a single matching pointer `q` naming a neighbor or nothing.
/// * `Counted`: a membership flag `x` plus a neighbor-membership counter `c`
///   ranging over `0..=degree`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProcState {
    Pointer { q: Option<ProcId> },
    Counted { x: bool, c: usize },
}

impl ProcState {
    /// Pointer value; panics if this record is not a pointer record.
    pub fn q(&self) -> Option<ProcId> {
        match *self {
            ProcState::Pointer { q } => q,
            ProcState::Counted { .. } => panic!("expected pointer record, found counted record"),
        }
    }

    /// Membership flag; panics if this record is not a counted record.
    pub fn x(&self) -> bool {
        match *self {
            ProcState::Counted { x, .. } => x,
            ProcState::Pointer { .. } => panic!("expected counted record, found pointer record"),
        }
    }

    /// Counter value; panics if this record is not a counted record.
    pub fn c(&self) -> usize {
        match *self {
            ProcState::Counted { c, .. } => c,
            ProcState::Pointer { .. } => panic!("expected counted record, found pointer record"),
        }
    }
}

/// A full assignment of one [`ProcState`] per process.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    states: Vec<ProcState>,
}

impl Configuration {
    pub fn new(states: Vec<ProcState>) -> Self {
        Configuration { states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: ProcId) -> ProcState {
        self.states[i]
    }

    pub fn states(&self) -> &[ProcState] {
        &self.states
    }

    pub fn set(&mut self, i: ProcId, s: ProcState) {
        self.states[i] = s;
    }

    /// Applies a write set, returning the successor configuration.
    pub fn with_writes(&self, writes: &WriteSet) -> Configuration {
        let mut next = self.clone();
        for &(i, s) in writes.entries() {
            next.states[i] = s;
        }
        next
    }
}

/// What a single process can observe when evaluating its rules: its own
/// record plus the records of its one-hop neighbors, however those records
/// are sourced (global configuration or a node-local cache).
#[derive(Debug, Clone, Copy)]
pub struct NeighborhoodView<'a> {
    center: ProcId,
    graph: &'a Graph,
    source: ViewSource<'a>,
}

#[derive(Debug, Clone, Copy)]
enum ViewSource<'a> {
    Config(&'a Configuration),
    Cache { own: &'a ProcState, cache: &'a BTreeMap<ProcId, ProcState> },
}

impl<'a> NeighborhoodView<'a> {
    /// View backed by a global configuration.
    pub fn of_config(graph: &'a Graph, cfg: &'a Configuration, center: ProcId) -> Self {
        debug_assert_eq!(cfg.len(), graph.n());
        NeighborhoodView { center, graph, source: ViewSource::Config(cfg) }
    }

    /// View backed by a node's own record and its neighbor cache, as used by
    /// the message-passing simulator.
    pub fn of_cache(
        graph: &'a Graph,
        center: ProcId,
        own: &'a ProcState,
        cache: &'a BTreeMap<ProcId, ProcState>,
    ) -> Self {
        NeighborhoodView { center, graph, source: ViewSource::Cache { own, cache } }
    }

    pub fn center(&self) -> ProcId {
        self.center
    }

    /// Sorted neighbor ids of the center.
    pub fn neighbors(&self) -> &[ProcId] {
        self.graph.neighbors(self.center)
    }

    /// Degree of a process in the closed neighborhood (graph knowledge a
    /// process is assumed to have about its neighbors).
    pub fn degree_of(&self, j: ProcId) -> usize {
        assert!(
            j == self.center || self.graph.has_edge(self.center, j),
            "read outside closed neighborhood: {} asked about {}",
            self.center,
            j
        );
        self.graph.degree(j)
    }

    /// Record of the center or one of its neighbors. Panics on any attempt
    /// to read outside the closed neighborhood.
    pub fn state_of(&self, j: ProcId) -> ProcState {
        assert!(
            j == self.center || self.graph.has_edge(self.center, j),
            "read outside closed neighborhood: {} asked about {}",
            self.center,
            j
        );
        match self.source {
            ViewSource::Config(cfg) => cfg.state(j),
            ViewSource::Cache { own, cache } => {
                if j == self.center {
                    *own
                } else {
                    *cache.get(&j).expect("cache holds every one-hop neighbor")
                }
            }
        }
    }

    /// Record of the center process.
    pub fn own_state(&self) -> ProcState {
        self.state_of(self.center)
    }
}

/// New records for the processes a move writes, keyed by process id.
///
/// Entries carry the full record for each written process; rewriting a
/// value equal to the old one is permitted (such writes count as part of
/// the move but change nothing).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteSet {
    entries: Vec<(ProcId, ProcState)>,
}

impl WriteSet {
    pub fn new(mut entries: Vec<(ProcId, ProcState)>) -> Self {
        entries.sort_unstable_by_key(|&(i, _)| i);
        debug_assert!(entries.windows(2).all(|w| w[0].0 != w[1].0), "duplicate write target");
        WriteSet { entries }
    }

    pub fn entries(&self) -> &[(ProcId, ProcState)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All written ids lie inside the closed one-hop neighborhood of `center`.
    pub fn is_local_to(&self, graph: &Graph, center: ProcId) -> bool {
        self.entries
            .iter()
            .all(|&(i, _)| i == center || graph.has_edge(center, i))
    }

    /// Map form used in trace exports: `{"0": {"q": 1}, ...}`.
    pub fn as_map(&self) -> BTreeMap<ProcId, ProcState> {
        self.entries.iter().copied().collect()
    }
}
