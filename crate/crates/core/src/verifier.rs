//! Exhaustive state-space verification for the built-in algorithms.
//!
//! Three independent checks, each reporting a concrete counterexample on
//! failure rather than a bare boolean:
//!
//! - **Closure**: over every configuration in the variable domains, the
//!   legitimacy predicate holds exactly at the silent configurations.
//! - **Convergence**: the longest move sequence to silence, maximized over
//!   every start configuration *and* every scheduling and witness choice
//!   (every enabled process, every enabled rule, every witness), stays
//!   within the algorithm's move bound; any reachable cycle is a livelock
//!   and is reported as one.
//! - **Structure oracles**: at silence, the configuration must encode the
//!   object the algorithm claims to compute, checked by brute force from
//!   the definition (maximal matching, minimal k-dominating set, maximal
//!   k-dependent set), not by trusting the legitimacy predicate.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{matched_pairs, member_set, AlgorithmSpec, Witness};
use crate::engine::state::{Configuration, NeighborhoodView, ProcState};
use crate::engine::trace::RuleId;
use crate::topology::{Graph, ProcId};

/// Default ceiling on how many configurations an exhaustive check may visit.
pub const DEFAULT_STATE_CAP: u128 = 10_000_000;

/// Errors raised before a verification even starts.
#[derive(Debug, Error)]
pub enum VerifierError {
    #[error(
        "state space has {total} configurations, over the cap of {cap}; \
         use a smaller graph or raise the cap"
    )]
    StateSpaceTooLarge { total: u128, cap: u128 },
}

// ---------------------------------------------------------------------------
// Brute-force structure oracles.
// ---------------------------------------------------------------------------

fn membership(n: usize, members: &[ProcId]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in members {
        m[v] = true;
    }
    m
}

/// `pairs` is a matching: vertex-disjoint edges of `g`.
pub fn is_matching(g: &Graph, pairs: &[(ProcId, ProcId)]) -> bool {
    let mut used = vec![false; g.n()];
    pairs.iter().all(|&(a, b)| {
        let fresh = a < g.n() && b < g.n() && !used[a] && !used[b] && g.has_edge(a, b);
        if fresh {
            used[a] = true;
            used[b] = true;
        }
        fresh
    })
}

/// `pairs` is a matching no edge of `g` can extend.
pub fn is_maximal_matching(g: &Graph, pairs: &[(ProcId, ProcId)]) -> bool {
    if !is_matching(g, pairs) {
        return false;
    }
    let mut used = vec![false; g.n()];
    for &(a, b) in pairs {
        used[a] = true;
        used[b] = true;
    }
    g.edges().iter().all(|&(a, b)| used[a] || used[b])
}

/// Every process outside `members` has at least `k` neighbors inside.
pub fn is_k_dominating(g: &Graph, members: &[ProcId], k: usize) -> bool {
    let m = membership(g.n(), members);
    (0..g.n()).all(|v| m[v] || g.neighbors(v).iter().filter(|&&u| m[u]).count() >= k)
}

/// `members` k-dominates and no single removal still does. Removing one
/// element is the only case to try: domination survives adding processes,
/// so if any proper subset worked, dropping one element would too.
pub fn is_minimal_k_dominating(g: &Graph, members: &[ProcId], k: usize) -> bool {
    if !is_k_dominating(g, members, k) {
        return false;
    }
    members.iter().all(|&drop| {
        let rest: Vec<ProcId> = members.iter().copied().filter(|&v| v != drop).collect();
        !is_k_dominating(g, &rest, k)
    })
}

/// Every process inside `members` has at most `k` neighbors inside.
pub fn is_k_dependent(g: &Graph, members: &[ProcId], k: usize) -> bool {
    let m = membership(g.n(), members);
    (0..g.n()).all(|v| !m[v] || g.neighbors(v).iter().filter(|&&u| m[u]).count() <= k)
}

/// `members` is k-dependent and no single addition keeps it so. One
/// addition is the only case to try: dependence survives removing
/// processes, so if any proper superset worked, one extra element would.
pub fn is_maximal_k_dependent(g: &Graph, members: &[ProcId], k: usize) -> bool {
    if !is_k_dependent(g, members, k) {
        return false;
    }
    let m = membership(g.n(), members);
    (0..g.n()).filter(|&v| !m[v]).all(|v| {
        let mut extended = members.to_vec();
        extended.push(v);
        !is_k_dependent(g, &extended, k)
    })
}

/// Minimality checked the expensive way: no proper subset k-dominates.
/// Exists to cross-check the single-removal shortcut on small graphs.
pub fn is_minimal_k_dominating_by_power_set(g: &Graph, members: &[ProcId], k: usize) -> bool {
    assert!(members.len() <= 20, "power-set oracle is for small graphs");
    if !is_k_dominating(g, members, k) {
        return false;
    }
    for mask in 0..(1u32 << members.len()) - 1 {
        let subset: Vec<ProcId> = members
            .iter()
            .enumerate()
            .filter(|(idx, _)| mask & (1 << idx) != 0)
            .map(|(_, &v)| v)
            .collect();
        if is_k_dominating(g, &subset, k) {
            return false;
        }
    }
    true
}

/// Maximality checked the expensive way: no proper superset is k-dependent.
/// Exists to cross-check the single-addition shortcut on small graphs.
pub fn is_maximal_k_dependent_by_power_set(g: &Graph, members: &[ProcId], k: usize) -> bool {
    if !is_k_dependent(g, members, k) {
        return false;
    }
    let m = membership(g.n(), members);
    let outside: Vec<ProcId> = (0..g.n()).filter(|&v| !m[v]).collect();
    assert!(outside.len() <= 20, "power-set oracle is for small graphs");
    for mask in 1..(1u32 << outside.len()) {
        let mut superset = members.to_vec();
        superset.extend(
            outside.iter().enumerate().filter(|(idx, _)| mask & (1 << idx) != 0).map(|(_, &v)| v),
        );
        if is_k_dependent(g, &superset, k) {
            return false;
        }
    }
    true
}

/// Checks that `cfg` encodes the structure its algorithm computes, from the
/// definition. Meant for silent configurations; the verdict is a readable
/// reason on failure.
pub fn structure_check(g: &Graph, alg: &AlgorithmSpec, cfg: &Configuration) -> Result<(), String> {
    match alg {
        AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat => {
            let pairs = matched_pairs(g, cfg);
            // Every pointer must be part of a reciprocated pair before the
            // pair list means anything.
            for i in 0..g.n() {
                if let Some(j) = cfg.state(i).q() {
                    if cfg.state(j).q() != Some(i) {
                        return Err(format!("process {i} points at {j} without reciprocation"));
                    }
                }
            }
            if !is_maximal_matching(g, &pairs) {
                return Err(format!("pairs {pairs:?} are not a maximal matching"));
            }
            Ok(())
        }
        AlgorithmSpec::MkDom { k } => {
            let members = member_set(cfg);
            check_counters(g, cfg)?;
            if !is_minimal_k_dominating(g, &members, *k) {
                return Err(format!("members {members:?} are not a minimal {k}-dominating set"));
            }
            Ok(())
        }
        AlgorithmSpec::MkDep { k } => {
            let members = member_set(cfg);
            check_counters(g, cfg)?;
            if !is_maximal_k_dependent(g, &members, *k) {
                return Err(format!("members {members:?} are not a maximal {k}-dependent set"));
            }
            Ok(())
        }
    }
}

fn check_counters(g: &Graph, cfg: &Configuration) -> Result<(), String> {
    for i in 0..g.n() {
        let truth = g.neighbors(i).iter().filter(|&&j| cfg.state(j).x()).count();
        let c = cfg.state(i).c();
        if c != truth {
            return Err(format!("process {i} holds counter {c} but has {truth} member neighbors"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Exhaustive configuration enumeration.
// ---------------------------------------------------------------------------

/// Number of domain-valid configurations of `alg` on `g`.
pub fn state_space_size(g: &Graph, alg: &AlgorithmSpec) -> u128 {
    (0..g.n()).map(|i| alg.domain(g, i).len() as u128).product()
}

/// Iterates every domain-valid configuration via a mixed-radix counter.
#[derive(Debug)]
pub struct ConfigEnumerator {
    domains: Vec<Vec<ProcState>>,
    digits: Vec<usize>,
    done: bool,
}

impl ConfigEnumerator {
    /// Fails up front when the state space exceeds `cap` (default
    /// [`DEFAULT_STATE_CAP`]), naming the offending product.
    pub fn new(g: &Graph, alg: &AlgorithmSpec, cap: Option<u128>) -> Result<Self, VerifierError> {
        let cap = cap.unwrap_or(DEFAULT_STATE_CAP);
        let total = state_space_size(g, alg);
        if total > cap {
            return Err(VerifierError::StateSpaceTooLarge { total, cap });
        }
        let domains: Vec<Vec<ProcState>> = (0..g.n()).map(|i| alg.domain(g, i)).collect();
        Ok(ConfigEnumerator { digits: vec![0; domains.len()], domains, done: false })
    }
}

impl Iterator for ConfigEnumerator {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        if self.done {
            return None;
        }
        let cfg = Configuration::new(
            self.digits.iter().zip(&self.domains).map(|(&d, dom)| dom[d]).collect(),
        );
        // Increment the mixed-radix counter, least-significant digit first.
        self.done = true;
        for (digit, dom) in self.digits.iter_mut().zip(&self.domains) {
            *digit += 1;
            if *digit < dom.len() {
                self.done = false;
                break;
            }
            *digit = 0;
        }
        Some(cfg)
    }
}

// ---------------------------------------------------------------------------
// Closure.
// ---------------------------------------------------------------------------

/// Outcome of the exhaustive closure check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClosureReport {
    /// Configurations examined.
    pub config_count: usize,
    /// Silent configurations among them.
    pub silent_count: usize,
    /// A configuration where no rule is enabled yet legitimacy fails.
    pub silent_illegitimate: Option<Configuration>,
    /// A configuration satisfying legitimacy where some rule is enabled.
    pub legitimate_active: Option<Configuration>,
    /// A silent configuration whose encoded structure fails its oracle.
    pub structure_failure: Option<(Configuration, String)>,
}

impl ClosureReport {
    pub fn holds(&self) -> bool {
        self.silent_illegitimate.is_none()
            && self.legitimate_active.is_none()
            && self.structure_failure.is_none()
    }
}

/// Checks legitimacy ⇔ silence over every domain-valid configuration, and
/// runs the structure oracle at each silent one.
pub fn verify_closure(
    g: &Graph,
    alg: &AlgorithmSpec,
    cap: Option<u128>,
) -> Result<ClosureReport, VerifierError> {
    let mut report = ClosureReport {
        config_count: 0,
        silent_count: 0,
        silent_illegitimate: None,
        legitimate_active: None,
        structure_failure: None,
    };
    for cfg in ConfigEnumerator::new(g, alg, cap)? {
        report.config_count += 1;
        let silent = crate::engine::is_silent(g, alg, &cfg);
        let legitimate = alg.is_legitimate(g, &cfg);
        if silent {
            report.silent_count += 1;
            if report.structure_failure.is_none() {
                if let Err(reason) = structure_check(g, alg, &cfg) {
                    report.structure_failure = Some((cfg.clone(), reason));
                }
            }
        }
        if silent && !legitimate && report.silent_illegitimate.is_none() {
            report.silent_illegitimate = Some(cfg.clone());
        }
        if legitimate && !silent && report.legitimate_active.is_none() {
            report.legitimate_active = Some(cfg);
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Convergence.
// ---------------------------------------------------------------------------

/// One scheduling choice in a counterexample path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub proc: ProcId,
    pub rule: RuleId,
    pub witness: Witness,
}

/// Outcome of the exhaustive convergence check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config_count: usize,
    /// Move bound the algorithm claims for this graph.
    pub bound: usize,
    /// Longest move sequence to silence over all starts and all choices.
    pub worst_moves: usize,
    /// A start configuration realizing `worst_moves`, with the choices.
    pub worst_start: Option<Configuration>,
    pub worst_path: Option<Vec<PathStep>>,
    /// A cycle of configurations reachable from some start: a livelock.
    pub livelock: Option<Vec<Configuration>>,
}

impl ConvergenceReport {
    pub fn holds(&self) -> bool {
        self.livelock.is_none() && self.worst_moves <= self.bound
    }
}

/// Every move available at `cfg`: each enabled process, each enabled rule,
/// each witness — strictly more adversarial than the engine, which commits
/// to the lowest enabled rule.
fn successors(
    g: &Graph,
    alg: &AlgorithmSpec,
    cfg: &Configuration,
) -> Vec<(PathStep, Configuration)> {
    let mut out = Vec::new();
    for i in 0..g.n() {
        let view = NeighborhoodView::of_config(g, cfg, i);
        for &rule in alg.rule_ids() {
            for w in alg.witnesses(&view, rule) {
                let next = cfg.with_writes(&alg.command(&view, rule, w));
                out.push((PathStep { proc: i, rule, witness: w }, next));
            }
        }
    }
    out
}

/// Longest-path memo entry: remaining moves to silence and the first step
/// of one maximizing continuation.
type MemoEntry = (usize, Option<PathStep>);

struct DepthSearch<'a> {
    g: &'a Graph,
    alg: &'a AlgorithmSpec,
    memo: HashMap<Configuration, MemoEntry>,
    on_stack: HashSet<Configuration>,
}

enum DepthOutcome {
    Depth(usize),
    Livelock(Vec<Configuration>),
}

impl<'a> DepthSearch<'a> {
    fn new(g: &'a Graph, alg: &'a AlgorithmSpec) -> Self {
        DepthSearch { g, alg, memo: HashMap::new(), on_stack: HashSet::new() }
    }

    /// Longest move count from `start`, or a reachable cycle. Iterative
    /// post-order DFS so pathological chains cannot overflow the call stack.
    fn longest_from(&mut self, start: &Configuration) -> DepthOutcome {
        if let Some(&(d, _)) = self.memo.get(start) {
            return DepthOutcome::Depth(d);
        }
        struct Frame {
            cfg: Configuration,
            succs: Vec<(PathStep, Configuration)>,
            next: usize,
            best: MemoEntry,
        }
        let mut stack = vec![Frame {
            cfg: start.clone(),
            succs: successors(self.g, self.alg, start),
            next: 0,
            best: (0, None),
        }];
        self.on_stack.insert(start.clone());
        while let Some(frame) = stack.last_mut() {
            if frame.next < frame.succs.len() {
                let (step, next_cfg) = frame.succs[frame.next].clone();
                frame.next += 1;
                if let Some(&(d, _)) = self.memo.get(&next_cfg) {
                    if d + 1 > frame.best.0 {
                        frame.best = (d + 1, Some(step));
                    }
                } else if self.on_stack.contains(&next_cfg) {
                    // The move sequence revisits a configuration: livelock.
                    let mut cycle: Vec<Configuration> = stack
                        .iter()
                        .skip_while(|f| f.cfg != next_cfg)
                        .map(|f| f.cfg.clone())
                        .collect();
                    cycle.push(next_cfg);
                    for f in &stack {
                        self.on_stack.remove(&f.cfg);
                    }
                    return DepthOutcome::Livelock(cycle);
                } else {
                    self.on_stack.insert(next_cfg.clone());
                    let succs = successors(self.g, self.alg, &next_cfg);
                    stack.push(Frame { cfg: next_cfg, succs, next: 0, best: (0, None) });
                }
            } else {
                let done = stack.pop().expect("loop condition saw a frame");
                self.on_stack.remove(&done.cfg);
                if let Some(parent) = stack.last_mut() {
                    if done.best.0 + 1 > parent.best.0 {
                        let step = parent.succs[parent.next - 1].0;
                        parent.best = (done.best.0 + 1, Some(step));
                    }
                }
                self.memo.insert(done.cfg, done.best);
            }
        }
        DepthOutcome::Depth(self.memo[start].0)
    }

    /// Reconstructs one maximizing move sequence from `start`.
    fn path_from(&self, start: &Configuration) -> Vec<PathStep> {
        let mut path = Vec::new();
        let mut cfg = start.clone();
        while let Some(&(d, Some(step))) = self.memo.get(&cfg) {
            if d == 0 {
                break;
            }
            path.push(step);
            let view = NeighborhoodView::of_config(self.g, &cfg, step.proc);
            cfg = cfg.with_writes(&self.alg.command(&view, step.rule, step.witness));
        }
        path
    }
}

/// Finds the longest move sequence to silence over every start
/// configuration and every scheduling choice, or a livelock cycle.
pub fn verify_convergence(
    g: &Graph,
    alg: &AlgorithmSpec,
    cap: Option<u128>,
) -> Result<ConvergenceReport, VerifierError> {
    let mut report = ConvergenceReport {
        config_count: 0,
        bound: alg.move_bound(g.n()),
        worst_moves: 0,
        worst_start: None,
        worst_path: None,
        livelock: None,
    };
    let mut search = DepthSearch::new(g, alg);
    for cfg in ConfigEnumerator::new(g, alg, cap)? {
        report.config_count += 1;
        match search.longest_from(&cfg) {
            DepthOutcome::Depth(d) => {
                if d > report.worst_moves || report.worst_start.is_none() {
                    report.worst_moves = d;
                    report.worst_start = Some(cfg);
                }
            }
            DepthOutcome::Livelock(cycle) => {
                report.livelock = Some(cycle);
                return Ok(report);
            }
        }
    }
    if let Some(start) = &report.worst_start {
        report.worst_path = Some(search.path_from(start));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Combined report.
// ---------------------------------------------------------------------------

/// Combined verdict over both exhaustive checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub algorithm: String,
    pub n: usize,
    pub closure: ClosureReport,
    pub convergence: ConvergenceReport,
}

impl VerificationReport {
    pub fn holds(&self) -> bool {
        self.closure.holds() && self.convergence.holds()
    }
}

/// Runs closure and convergence back to back.
pub fn verify(
    g: &Graph,
    alg: &AlgorithmSpec,
    cap: Option<u128>,
) -> Result<VerificationReport, VerifierError> {
    Ok(VerificationReport {
        algorithm: alg.to_string(),
        n: g.n(),
        closure: verify_closure(g, alg, cap)?,
        convergence: verify_convergence(g, alg, cap)?,
    })
}
