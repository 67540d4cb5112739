//! The built-in guarded-command algorithms: maximal matching via pointer
//! negotiation, minimal k-dominating set, and maximal k-dependent set, the
//! latter two over membership flags with neighbor-membership counters.
//!
//! Every rule is written against a [`NeighborhoodView`], so a guard can only
//! read the closed one-hop neighborhood, and every command returns a
//! [`WriteSet`] naming processes in that same neighborhood. Rules are
//! numbered from 1 in listing order; when several guards hold at once the
//! engine fires the lowest-numbered rule.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::state::{Configuration, NeighborhoodView, ProcState, WriteSet};
use crate::engine::trace::{RuleId, Trace};
use crate::seeds;
use crate::topology::{Graph, ProcId};

/// Neighbor bound by a guard's existential quantifier, when the rule has one.
pub type Witness = Option<ProcId>;

/// How to choose among several witnesses that satisfy the same guard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WitnessPolicy {
    /// Bind the satisfying neighbor with the smallest id (the default).
    #[default]
    LowestId,
    /// Bind the satisfying neighbor with the largest id.
    HighestId,
}

impl WitnessPolicy {
    fn pick(self, witnesses: &[Witness]) -> Witness {
        // Witness lists are produced in ascending neighbor order.
        match self {
            WitnessPolicy::LowestId => witnesses[0],
            WitnessPolicy::HighestId => witnesses[witnesses.len() - 1],
        }
    }
}

impl fmt::Display for WitnessPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WitnessPolicy::LowestId => write!(f, "lowest"),
            WitnessPolicy::HighestId => write!(f, "highest"),
        }
    }
}

impl FromStr for WitnessPolicy {
    type Err = AlgorithmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lowest" | "lowest-id" => Ok(WitnessPolicy::LowestId),
            "highest" | "highest-id" => Ok(WitnessPolicy::HighestId),
            _ => Err(AlgorithmError::BadSelector {
                selector: s.to_string(),
                reason: "expected lowest or highest".into(),
            }),
        }
    }
}

/// Errors from algorithm construction and configuration validation.
#[derive(Debug, Error)]
pub enum AlgorithmError {
    #[error("minimal k-domination requires k >= 1, got k={0}")]
    DominationKTooSmall(usize),
    #[error("bad algorithm selector `{selector}`: {reason}")]
    BadSelector { selector: String, reason: String },
    #[error("configuration has {got} records but the graph has {want} processes")]
    LengthMismatch { got: usize, want: usize },
    #[error("process {0}: record kind does not match the algorithm's variables")]
    SchemaMismatch(ProcId),
    #[error("process {proc}: {reason}")]
    OutOfDomain { proc: ProcId, reason: String },
    #[error("init preset `{preset}` does not apply to {alg}")]
    PresetNotApplicable { preset: String, alg: String },
}

/// One of the built-in algorithms, with its parameters.
///
/// A value of this type bundles the ordered rule list, the per-process
/// variable domain, and the legitimacy predicate that the engine, verifier,
/// and simulator all share.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmSpec {
    /// Maximal matching: each process holds a pointer `q` naming a neighbor
    /// or nothing; five rules negotiate reciprocated pairs.
    MMat,
    /// Minimal k-dominating set (`k >= 1`): membership flag `x` plus a
    /// counter `c` of neighbors believed to be members.
    MkDom { k: usize },
    /// Maximal k-dependent set (`k >= 0`): same variables as `MkDom`, with
    /// the membership inequalities reversed.
    MkDep { k: usize },
    /// Negative-control fixture: maximal matching with the withdrawal rule
    /// (Rule 5) removed, so mispointed processes can get stuck. Exists to
    /// prove the verifier reports closure failures instead of masking them.
    BrokenMMat,
}

impl AlgorithmSpec {
    pub fn mmat11() -> Self {
        AlgorithmSpec::MMat
    }

    pub fn mkdom11(k: usize) -> Result<Self, AlgorithmError> {
        if k < 1 {
            return Err(AlgorithmError::DominationKTooSmall(k));
        }
        Ok(AlgorithmSpec::MkDom { k })
    }

    pub fn mkdep11(k: usize) -> Result<Self, AlgorithmError> {
        Ok(AlgorithmSpec::MkDep { k })
    }

    pub fn broken_fixture() -> Self {
        AlgorithmSpec::BrokenMMat
    }

    /// Ordered rule identifiers, lowest (highest priority) first.
    pub fn rule_ids(&self) -> &'static [RuleId] {
        match self {
            AlgorithmSpec::MMat => &[1, 2, 3, 4, 5],
            AlgorithmSpec::BrokenMMat => &[1, 2, 3, 4],
            AlgorithmSpec::MkDom { .. } | AlgorithmSpec::MkDep { .. } => &[1, 2, 3],
        }
    }

    /// Short description of what a rule does.
    pub fn rule_label(&self, rule: RuleId) -> &'static str {
        match (self, rule) {
            (AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat, 1) => "accept a proposal",
            (AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat, 2) => "pair with a free neighbor",
            (AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat, 3) => "claim the pointed neighbor",
            (AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat, 4) => "switch to a willing neighbor",
            (AlgorithmSpec::MMat, 5) => "withdraw a dead pointer",
            (AlgorithmSpec::MkDom { .. } | AlgorithmSpec::MkDep { .. }, 1) => "fix the counter",
            (AlgorithmSpec::MkDom { .. }, 2) => "join the set (under-dominated)",
            (AlgorithmSpec::MkDom { .. }, 3) => "leave the set (redundant)",
            (AlgorithmSpec::MkDep { .. }, 2) => "leave the set (over-crowded)",
            (AlgorithmSpec::MkDep { .. }, 3) => "join the set (room available)",
            _ => "unknown rule",
        }
    }

    /// All witnesses for which `rule`'s guard holds on `view`, in ascending
    /// neighbor order. Empty means the rule is disabled. Rules without an
    /// existential quantifier yield `[None]` when enabled.
    pub fn witnesses(&self, view: &NeighborhoodView<'_>, rule: RuleId) -> Vec<Witness> {
        match self {
            AlgorithmSpec::MMat => mmat_witnesses(view, rule),
            AlgorithmSpec::BrokenMMat => {
                if rule == 5 {
                    Vec::new()
                } else {
                    mmat_witnesses(view, rule)
                }
            }
            AlgorithmSpec::MkDom { k } => mkdom_witnesses(view, rule, *k),
            AlgorithmSpec::MkDep { k } => mkdep_witnesses(view, rule, *k),
        }
    }

    /// The records `rule` writes when fired on `view` with `witness`.
    ///
    /// The caller must pass a witness returned by [`Self::witnesses`] for
    /// the same view; commands assume their guard holds.
    pub fn command(&self, view: &NeighborhoodView<'_>, rule: RuleId, witness: Witness) -> WriteSet {
        match self {
            AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat => mmat_command(view, rule, witness),
            AlgorithmSpec::MkDom { k } => mkdom_command(view, rule, *k),
            AlgorithmSpec::MkDep { k } => mkdep_command(view, rule, *k),
        }
    }

    /// Rule ids whose guards hold on `view`, ascending.
    pub fn enabled_rules_on(&self, view: &NeighborhoodView<'_>) -> Vec<RuleId> {
        self.rule_ids()
            .iter()
            .copied()
            .filter(|&r| !self.witnesses(view, r).is_empty())
            .collect()
    }

    /// Whether any rule is enabled on `view`.
    pub fn enabled_on(&self, view: &NeighborhoodView<'_>) -> bool {
        self.rule_ids().iter().any(|&r| !self.witnesses(view, r).is_empty())
    }

    /// The move the engine would fire on `view`: the lowest enabled rule
    /// with the witness chosen by `policy`.
    pub fn default_move(
        &self,
        view: &NeighborhoodView<'_>,
        policy: WitnessPolicy,
    ) -> Option<(RuleId, Witness, WriteSet)> {
        for &rule in self.rule_ids() {
            let witnesses = self.witnesses(view, rule);
            if !witnesses.is_empty() {
                let w = policy.pick(&witnesses);
                return Some((rule, w, self.command(view, rule, w)));
            }
        }
        None
    }

    /// The closed-form legitimacy predicate for this algorithm.
    pub fn is_legitimate(&self, g: &Graph, cfg: &Configuration) -> bool {
        match self {
            AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat => mmat_legitimate(g, cfg),
            AlgorithmSpec::MkDom { k } => mkdom_legitimate(g, cfg, *k),
            AlgorithmSpec::MkDep { k } => mkdep_legitimate(g, cfg, *k),
        }
    }

    /// Ordered domain of process `i`'s record under this algorithm.
    pub fn domain(&self, g: &Graph, i: ProcId) -> Vec<ProcState> {
        match self {
            AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat => {
                let mut out = vec![ProcState::Pointer { q: None }];
                out.extend(g.neighbors(i).iter().map(|&j| ProcState::Pointer { q: Some(j) }));
                out
            }
            AlgorithmSpec::MkDom { .. } | AlgorithmSpec::MkDep { .. } => {
                let mut out = Vec::with_capacity(2 * (g.degree(i) + 1));
                for x in [false, true] {
                    for c in 0..=g.degree(i) {
                        out.push(ProcState::Counted { x, c });
                    }
                }
                out
            }
        }
    }

    /// Checks length, record kind, and per-process domain membership.
    pub fn validate(&self, g: &Graph, cfg: &Configuration) -> Result<(), AlgorithmError> {
        if cfg.len() != g.n() {
            return Err(AlgorithmError::LengthMismatch { got: cfg.len(), want: g.n() });
        }
        for i in 0..g.n() {
            match (self, cfg.state(i)) {
                (AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat, ProcState::Pointer { q }) => {
                    if let Some(j) = q {
                        if !g.has_edge(i, j) {
                            return Err(AlgorithmError::OutOfDomain {
                                proc: i,
                                reason: format!("pointer names {j}, which is not a neighbor"),
                            });
                        }
                    }
                }
                (
                    AlgorithmSpec::MkDom { .. } | AlgorithmSpec::MkDep { .. },
                    ProcState::Counted { c, .. },
                ) => {
                    if c > g.degree(i) {
                        return Err(AlgorithmError::OutOfDomain {
                            proc: i,
                            reason: format!("counter {c} exceeds degree {}", g.degree(i)),
                        });
                    }
                }
                _ => return Err(AlgorithmError::SchemaMismatch(i)),
            }
        }
        Ok(())
    }

    /// Forces a raw configuration into the domain: pointers at non-neighbors
    /// become empty, counters clamp to `0..=degree`. Record kind and length
    /// must already match.
    pub fn sanitize(&self, g: &Graph, cfg: &Configuration) -> Result<Configuration, AlgorithmError> {
        if cfg.len() != g.n() {
            return Err(AlgorithmError::LengthMismatch { got: cfg.len(), want: g.n() });
        }
        let mut states = Vec::with_capacity(g.n());
        for i in 0..g.n() {
            let fixed = match (self, cfg.state(i)) {
                (AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat, ProcState::Pointer { q }) => {
                    let q = q.filter(|&j| g.has_edge(i, j));
                    ProcState::Pointer { q }
                }
                (
                    AlgorithmSpec::MkDom { .. } | AlgorithmSpec::MkDep { .. },
                    ProcState::Counted { x, c },
                ) => ProcState::Counted { x, c: c.min(g.degree(i)) },
                _ => return Err(AlgorithmError::SchemaMismatch(i)),
            };
            states.push(fixed);
        }
        Ok(Configuration::new(states))
    }

    /// Builds the configuration named by an init preset.
    pub fn initial_config(&self, g: &Graph, init: &InitSpec) -> Result<Configuration, AlgorithmError> {
        match init {
            InitSpec::AllBottom => Ok(Configuration::new(
                (0..g.n())
                    .map(|_| match self {
                        AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat => {
                            ProcState::Pointer { q: None }
                        }
                        _ => ProcState::Counted { x: false, c: 0 },
                    })
                    .collect(),
            )),
            InitSpec::AllOnesCorrectCounters => match self {
                AlgorithmSpec::MkDom { .. } | AlgorithmSpec::MkDep { .. } => {
                    Ok(Configuration::new(
                        (0..g.n()).map(|i| ProcState::Counted { x: true, c: g.degree(i) }).collect(),
                    ))
                }
                _ => Err(AlgorithmError::PresetNotApplicable {
                    preset: "all-ones-correct-counters".into(),
                    alg: self.to_string(),
                }),
            },
            InitSpec::Random { seed } => Ok(Configuration::new(
                (0..g.n())
                    .map(|i| {
                        let domain = self.domain(g, i);
                        let mut rng = seeds::rng_for(*seed, i as u64);
                        domain[rng.gen_range(0..domain.len())]
                    })
                    .collect(),
            )),
            InitSpec::Adversarial => Ok(Configuration::new(
                (0..g.n())
                    .map(|i| match self {
                        AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat => ProcState::Pointer {
                            q: g.neighbors(i).first().copied(),
                        },
                        _ => ProcState::Counted { x: true, c: 0 },
                    })
                    .collect(),
            )),
        }
    }

    /// Worst-case serial move bound from any configuration of `n` processes.
    pub fn move_bound(&self, n: usize) -> usize {
        match self {
            AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat => n / 2 + n,
            AlgorithmSpec::MkDom { .. } | AlgorithmSpec::MkDep { .. } => 4 * n,
        }
    }

    /// Progress score of one transition, used by the adversarial daemon to
    /// pick the least-productive enabled process: total change in the
    /// potential pair where one exists, otherwise the number of changed
    /// variable slots.
    pub fn progress_units(&self, g: &Graph, before: &Configuration, after: &Configuration) -> usize {
        match self {
            AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat => {
                let (a0, b0) = mmat_potentials(g, before);
                let (a1, b1) = mmat_potentials(g, after);
                a0.abs_diff(a1) + b0.abs_diff(b1)
            }
            AlgorithmSpec::MkDom { .. } | AlgorithmSpec::MkDep { .. } => (0..g.n())
                .map(|i| match (before.state(i), after.state(i)) {
                    (ProcState::Counted { x: x0, c: c0 }, ProcState::Counted { x: x1, c: c1 }) => {
                        usize::from(x0 != x1) + usize::from(c0 != c1)
                    }
                    (s0, s1) => usize::from(s0 != s1),
                })
                .sum(),
        }
    }
}

impl fmt::Display for AlgorithmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgorithmSpec::MMat => write!(f, "mmat11"),
            AlgorithmSpec::MkDom { k } => write!(f, "mkdom11:k={k}"),
            AlgorithmSpec::MkDep { k } => write!(f, "mkdep11:k={k}"),
            AlgorithmSpec::BrokenMMat => write!(f, "broken-fixture"),
        }
    }
}

impl FromStr for AlgorithmSpec {
    type Err = AlgorithmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| AlgorithmError::BadSelector {
            selector: s.to_string(),
            reason: reason.to_string(),
        };
        let parse_k = |rest: &str| -> Result<usize, AlgorithmError> {
            rest.strip_prefix("k=")
                .ok_or_else(|| bad("expected k=<integer>"))?
                .parse::<usize>()
                .map_err(|_| bad("k must be a non-negative integer"))
        };
        match s.split_once(':') {
            None => match s {
                "mmat11" => Ok(AlgorithmSpec::MMat),
                "broken-fixture" => Ok(AlgorithmSpec::broken_fixture()),
                "mkdom11" | "mkdep11" => Err(bad("missing parameter, e.g. mkdom11:k=1")),
                _ => Err(bad("unknown algorithm; expected mmat11, mkdom11:k=_, mkdep11:k=_")),
            },
            Some(("mkdom11", rest)) => AlgorithmSpec::mkdom11(parse_k(rest)?),
            Some(("mkdep11", rest)) => AlgorithmSpec::mkdep11(parse_k(rest)?),
            Some(_) => Err(bad("unknown algorithm; expected mmat11, mkdom11:k=_, mkdep11:k=_")),
        }
    }
}

/// Initial-configuration presets accepted by the engine front ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitSpec {
    /// Every pointer empty, or every flag 0 with counter 0 (a correct count).
    AllBottom,
    /// Every flag 1 with counter equal to the degree (a correct count).
    AllOnesCorrectCounters,
    /// Per-process uniform draw from the variable domain.
    Random { seed: u64 },
    /// A deliberately bad start: every pointer aimed at its lowest neighbor
    /// (mass mispointing), or every flag 1 with counter 0 (every counter
    /// wrong wherever a member has a neighbor).
    Adversarial,
}

impl FromStr for InitSpec {
    type Err = AlgorithmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-bottom" => Ok(InitSpec::AllBottom),
            "all-ones-correct-counters" => Ok(InitSpec::AllOnesCorrectCounters),
            "adversarial" => Ok(InitSpec::Adversarial),
            _ => {
                if let Some(rest) = s.strip_prefix("random:seed=") {
                    let seed = rest.parse::<u64>().map_err(|_| AlgorithmError::BadSelector {
                        selector: s.to_string(),
                        reason: "seed must be an integer".into(),
                    })?;
                    Ok(InitSpec::Random { seed })
                } else {
                    Err(AlgorithmError::BadSelector {
                        selector: s.to_string(),
                        reason: "expected all-bottom, all-ones-correct-counters, adversarial, \
                                 or random:seed=_"
                            .into(),
                    })
                }
            }
        }
    }
}

/// Number of the view's neighbors whose membership flag is set.
pub fn count_of(view: &NeighborhoodView<'_>) -> usize {
    view.neighbors().iter().filter(|&&j| view.state_of(j).x()).count()
}

// ---------------------------------------------------------------------------
// Maximal matching rules.
// ---------------------------------------------------------------------------

/// `q_j` names the center's id.
fn points_at(view: &NeighborhoodView<'_>, j: ProcId, target: ProcId) -> bool {
    view.state_of(j).q() == Some(target)
}

fn mmat_witnesses(view: &NeighborhoodView<'_>, rule: RuleId) -> Vec<Witness> {
    let i = view.center();
    let q = view.own_state().q();
    // "Mispointed": the pointed neighbor points at some third process, so the
    // pointer can never be reciprocated as things stand.
    let mispointed = |j: ProcId| matches!(view.state_of(j).q(), Some(t) if t != i);
    match rule {
        // Free process accepts one of the neighbors proposing to it.
        1 => match q {
            None => view
                .neighbors()
                .iter()
                .filter(|&&j| points_at(view, j, i))
                .map(|&j| Some(j))
                .collect(),
            Some(_) => Vec::new(),
        },
        // Free process pairs up with a free neighbor, writing both pointers.
        2 => match q {
            None => view
                .neighbors()
                .iter()
                .filter(|&&j| view.state_of(j).q().is_none())
                .map(|&j| Some(j))
                .collect(),
            Some(_) => Vec::new(),
        },
        // The pointed neighbor is free: force it to point back.
        3 => match q {
            Some(j) if view.state_of(j).q().is_none() => vec![None],
            _ => Vec::new(),
        },
        // The pointed neighbor is taken, but some neighbor is free or already
        // proposing to the center: switch to it.
        4 => match q {
            Some(j) if mispointed(j) => view
                .neighbors()
                .iter()
                .filter(|&&m| view.state_of(m).q().is_none() || points_at(view, m, i))
                .map(|&m| Some(m))
                .collect(),
            _ => Vec::new(),
        },
        // The pointed neighbor is taken and nobody else is available: give up.
        5 => match q {
            Some(j)
                if mispointed(j)
                    && view
                        .neighbors()
                        .iter()
                        .all(|&m| !(view.state_of(m).q().is_none() || points_at(view, m, i))) =>
            {
                vec![None]
            }
            _ => Vec::new(),
        },
        _ => panic!("maximal matching has no rule {rule}"),
    }
}

fn mmat_command(view: &NeighborhoodView<'_>, rule: RuleId, witness: Witness) -> WriteSet {
    let i = view.center();
    let point = |target: Option<ProcId>| ProcState::Pointer { q: target };
    match (rule, witness) {
        (1, Some(j)) => WriteSet::new(vec![(i, point(Some(j)))]),
        (2, Some(j)) => WriteSet::new(vec![(i, point(Some(j))), (j, point(Some(i)))]),
        (3, None) => {
            let j = view.own_state().q().expect("rule 3 requires a pointer");
            WriteSet::new(vec![(j, point(Some(i)))])
        }
        // The write to the witness is unconditional even when it already
        // points here; the idempotent write is still part of the move.
        (4, Some(m)) => WriteSet::new(vec![(i, point(Some(m))), (m, point(Some(i)))]),
        (5, None) => WriteSet::new(vec![(i, point(None))]),
        (r, w) => panic!("bad witness {w:?} for matching rule {r}"),
    }
}

fn mmat_legitimate(g: &Graph, cfg: &Configuration) -> bool {
    for i in 0..g.n() {
        match cfg.state(i).q() {
            // Matched condition: a pointer must be reciprocated.
            Some(j) => {
                if cfg.state(j).q() != Some(i) {
                    return false;
                }
            }
            // Maximality: a free process may have no free neighbor and no
            // neighbor proposing to it.
            None => {
                let blocked = g.neighbors(i).iter().all(|&j| {
                    matches!(cfg.state(j).q(), Some(t) if t != i)
                });
                if !blocked {
                    return false;
                }
            }
        }
    }
    true
}

/// Reciprocated pointer pairs `(i, j)` with `i < j`: the matching the
/// configuration currently encodes.
pub fn matched_pairs(g: &Graph, cfg: &Configuration) -> Vec<(ProcId, ProcId)> {
    let mut pairs = Vec::new();
    for &(a, b) in g.edges() {
        if cfg.state(a).q() == Some(b) && cfg.state(b).q() == Some(a) {
            pairs.push((a, b));
        }
    }
    pairs
}

/// Potential pair for the matching algorithm: `(pairs, mispointed)`.
///
/// A process counts as mispointed when its pointer is not reciprocated —
/// including pointers at still-free neighbors, since a free target can
/// accept a different suitor. Measured this way, the pair count never
/// decreases, the mispointed count never increases, and every rule changes
/// at least one of the two, which is what bounds every run by n/2 + n moves.
pub fn mmat_potentials(g: &Graph, cfg: &Configuration) -> (usize, usize) {
    let pairs = matched_pairs(g, cfg).len();
    let mispointed = (0..g.n())
        .filter(|&i| match cfg.state(i).q() {
            Some(j) => cfg.state(j).q() != Some(i),
            None => false,
        })
        .count();
    (pairs, mispointed)
}

// ---------------------------------------------------------------------------
// Membership-flag rules (k-domination and k-dependence).
// ---------------------------------------------------------------------------

fn mkdom_witnesses(view: &NeighborhoodView<'_>, rule: RuleId, k: usize) -> Vec<Witness> {
    let own = view.own_state();
    let (x, c) = (own.x(), own.c());
    let count = count_of(view);
    let enabled = match rule {
        1 => c != count,
        // Join: correctly counted, not a member, and short of k member
        // neighbors, so nobody else can cover this process.
        2 => !x && c == count && c < k,
        // Leave: correctly counted member that is itself k-covered, and
        // every non-member neighbor stays covered with one member fewer.
        3 => {
            x && c == count
                && c >= k
                && view.neighbors().iter().all(|&j| {
                    let s = view.state_of(j);
                    s.x() || s.c() > k
                })
        }
        _ => panic!("k-domination has no rule {rule}"),
    };
    if enabled {
        vec![None]
    } else {
        Vec::new()
    }
}

fn mkdom_command(view: &NeighborhoodView<'_>, rule: RuleId, k: usize) -> WriteSet {
    let _ = k;
    let i = view.center();
    let own = view.own_state();
    match rule {
        1 => WriteSet::new(vec![(i, ProcState::Counted { x: own.x(), c: count_of(view) })]),
        2 => flip_and_adjust(view, true),
        3 => flip_and_adjust(view, false),
        r => panic!("k-domination has no rule {r}"),
    }
}

fn mkdep_witnesses(view: &NeighborhoodView<'_>, rule: RuleId, k: usize) -> Vec<Witness> {
    let own = view.own_state();
    let (x, c) = (own.x(), own.c());
    let count = count_of(view);
    let enabled = match rule {
        1 => c != count,
        // Leave: correctly counted member with more than k member neighbors.
        2 => x && c == count && c > k,
        // Join: correctly counted non-member with room, and every member
        // neighbor still has at most k member neighbors afterwards.
        3 => {
            !x && c == count
                && c <= k
                && view.neighbors().iter().all(|&j| {
                    let s = view.state_of(j);
                    !s.x() || s.c() < k
                })
        }
        _ => panic!("k-dependence has no rule {rule}"),
    };
    if enabled {
        vec![None]
    } else {
        Vec::new()
    }
}

fn mkdep_command(view: &NeighborhoodView<'_>, rule: RuleId, k: usize) -> WriteSet {
    let _ = k;
    let i = view.center();
    let own = view.own_state();
    match rule {
        1 => WriteSet::new(vec![(i, ProcState::Counted { x: own.x(), c: count_of(view) })]),
        2 => flip_and_adjust(view, false),
        3 => flip_and_adjust(view, true),
        r => panic!("k-dependence has no rule {r}"),
    }
}

/// Sets the center's flag to `joining` and bumps each neighbor's counter by
/// one in the matching direction, clamped to its `0..=degree` domain.
fn flip_and_adjust(view: &NeighborhoodView<'_>, joining: bool) -> WriteSet {
    let i = view.center();
    let own = view.own_state();
    let mut writes = vec![(i, ProcState::Counted { x: joining, c: own.c() })];
    for &j in view.neighbors() {
        let s = view.state_of(j);
        let c = s.c();
        let adjusted = if joining {
            if c < view.degree_of(j) { Some(c + 1) } else { None }
        } else if c > 0 {
            Some(c - 1)
        } else {
            None
        };
        if let Some(c) = adjusted {
            writes.push((j, ProcState::Counted { x: s.x(), c }));
        }
    }
    WriteSet::new(writes)
}

fn mkdom_legitimate(g: &Graph, cfg: &Configuration, k: usize) -> bool {
    (0..g.n()).all(|i| {
        let s = cfg.state(i);
        let count = g.neighbors(i).iter().filter(|&&j| cfg.state(j).x()).count();
        if s.c() != count {
            return false;
        }
        if !s.x() {
            // Non-members must be k-covered.
            s.c() >= k
        } else {
            // Members must be non-redundant: removing one must break
            // coverage somewhere (possibly at the member itself).
            s.c() < k
                || g.neighbors(i).iter().any(|&j| {
                    let t = cfg.state(j);
                    !t.x() && t.c() <= k
                })
        }
    })
}

fn mkdep_legitimate(g: &Graph, cfg: &Configuration, k: usize) -> bool {
    (0..g.n()).all(|i| {
        let s = cfg.state(i);
        let count = g.neighbors(i).iter().filter(|&&j| cfg.state(j).x()).count();
        if s.c() != count {
            return false;
        }
        if s.x() {
            // Members may have at most k member neighbors.
            s.c() <= k
        } else {
            // Non-members must be blocked from joining: either too many
            // member neighbors already, or some member neighbor is full.
            s.c() > k
                || g.neighbors(i).iter().any(|&j| {
                    let t = cfg.state(j);
                    t.x() && t.c() >= k
                })
        }
    })
}

/// Ids whose membership flag is set: the set the configuration encodes.
pub fn member_set(cfg: &Configuration) -> Vec<ProcId> {
    (0..cfg.len()).filter(|&i| cfg.state(i).x()).collect()
}

// ---------------------------------------------------------------------------
// Per-trace conservation laws.
// ---------------------------------------------------------------------------

/// A violated per-move or per-process law in an executed trace.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum TraceLawViolation {
    #[error("step {step}: matched-pair count fell from {before} to {after}")]
    PairCountFell { step: usize, before: usize, after: usize },
    #[error("step {step}: mispointed count rose from {before} to {after}")]
    MispointedRose { step: usize, before: usize, after: usize },
    #[error("step {step}: move changed neither potential")]
    StalledMove { step: usize },
    #[error("process {proc}: counter-fix rule fired {count} times (cap 1)")]
    CounterFixRepeated { proc: ProcId, count: usize },
    #[error("process {proc}: counter-fix rule fired at step {step} but was not its first move")]
    CounterFixNotFirst { proc: ProcId, step: usize },
    #[error("process {proc}: rule {rule} fired {count} times (cap {cap})")]
    RuleCapExceeded { proc: ProcId, rule: RuleId, count: usize, cap: usize },
    #[error("trace has {moves} moves, over the {cap} bound")]
    TotalMovesExceeded { moves: usize, cap: usize },
    #[error("process {proc}: counter correct after step {correct_at} but stale after step {step}")]
    CountCorrectnessLost { proc: ProcId, correct_at: usize, step: usize },
}

/// Checks the move-count and monotonicity laws that bound every run of the
/// built-in algorithms, by replaying `trace` move by move.
///
/// For the matching algorithm: the pair count never decreases, the
/// mispointed count never increases, and each move changes at least one.
/// For the membership algorithms: per process, the counter-fix rule fires
/// at most once and only as the first move, rule 3 fires at most once,
/// rule 2 at most twice; and once a counter matches its true neighbor
/// count it stays matched. Total moves must stay within the move bound.
pub fn check_trace_laws(
    alg: &AlgorithmSpec,
    g: &Graph,
    trace: &Trace,
) -> Result<(), Vec<TraceLawViolation>> {
    let mut violations = Vec::new();
    let seq = trace.replay();

    match alg {
        AlgorithmSpec::MMat | AlgorithmSpec::BrokenMMat => {
            for (step, window) in seq.windows(2).enumerate() {
                let (a0, b0) = mmat_potentials(g, &window[0]);
                let (a1, b1) = mmat_potentials(g, &window[1]);
                if a1 < a0 {
                    violations.push(TraceLawViolation::PairCountFell { step, before: a0, after: a1 });
                }
                if b1 > b0 {
                    violations.push(TraceLawViolation::MispointedRose { step, before: b0, after: b1 });
                }
                if (a0, b0) == (a1, b1) {
                    violations.push(TraceLawViolation::StalledMove { step });
                }
            }
        }
        AlgorithmSpec::MkDom { .. } | AlgorithmSpec::MkDep { .. } => {
            // Per-process rule caps, and counter-fix only as a first move.
            let mut moved: Vec<bool> = vec![false; g.n()];
            let mut per_rule: Vec<[usize; 3]> = vec![[0; 3]; g.n()];
            for m in &trace.moves {
                let idx = (m.rule - 1) as usize;
                per_rule[m.proc][idx] += 1;
                if m.rule == 1 && moved[m.proc] {
                    violations
                        .push(TraceLawViolation::CounterFixNotFirst { proc: m.proc, step: m.step });
                }
                moved[m.proc] = true;
            }
            for (proc, counts) in per_rule.iter().enumerate() {
                if counts[0] > 1 {
                    violations
                        .push(TraceLawViolation::CounterFixRepeated { proc, count: counts[0] });
                }
                if counts[1] > 2 {
                    violations.push(TraceLawViolation::RuleCapExceeded {
                        proc,
                        rule: 2,
                        count: counts[1],
                        cap: 2,
                    });
                }
                if counts[2] > 1 {
                    violations.push(TraceLawViolation::RuleCapExceeded {
                        proc,
                        rule: 3,
                        count: counts[2],
                        cap: 1,
                    });
                }
            }
            // Counter correctness is stable once achieved.
            let true_count = |cfg: &Configuration, i: ProcId| {
                g.neighbors(i).iter().filter(|&&j| cfg.state(j).x()).count()
            };
            let mut correct_since: Vec<Option<usize>> = (0..g.n())
                .map(|i| (seq[0].state(i).c() == true_count(&seq[0], i)).then_some(0))
                .collect();
            for (step, cfg) in seq.iter().enumerate().skip(1) {
                for (i, since) in correct_since.iter_mut().enumerate() {
                    let ok = cfg.state(i).c() == true_count(cfg, i);
                    match (*since, ok) {
                        (Some(at), false) => {
                            violations.push(TraceLawViolation::CountCorrectnessLost {
                                proc: i,
                                correct_at: at,
                                step: step - 1,
                            });
                            *since = None;
                        }
                        (None, true) => *since = Some(step),
                        _ => {}
                    }
                }
            }
        }
    }

    let cap = alg.move_bound(g.n());
    if trace.len() > cap {
        violations.push(TraceLawViolation::TotalMovesExceeded { moves: trace.len(), cap });
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
