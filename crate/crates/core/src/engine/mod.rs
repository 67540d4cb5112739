//! Serial execution engine: one process moves at a time, and a move
//! atomically reads the closed neighborhood and writes back into it.
//!
//! Each step the engine computes the enabled set, asks the daemon to pick a
//! mover, fires that process's lowest-numbered enabled rule, and checks that
//! every write lands inside the mover's closed neighborhood before applying
//! it. A run ends at a silent configuration (nothing enabled) or when the
//! step budget runs out.

pub mod daemon;
pub mod state;
pub mod trace;

use thiserror::Error;

use crate::algorithms::{AlgorithmError, AlgorithmSpec, WitnessPolicy};
use crate::engine::daemon::Daemon;
use crate::engine::state::{Configuration, NeighborhoodView};
use crate::engine::trace::{MoveRecord, RuleId, Trace};
use crate::topology::{Graph, ProcId};

/// Errors from running the serial engine.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
}

/// Rule ids enabled at process `i`, ascending.
pub fn enabled_rules(g: &Graph, alg: &AlgorithmSpec, cfg: &Configuration, i: ProcId) -> Vec<RuleId> {
    alg.enabled_rules_on(&NeighborhoodView::of_config(g, cfg, i))
}

/// Processes with at least one enabled rule, ascending.
pub fn enabled_processes(g: &Graph, alg: &AlgorithmSpec, cfg: &Configuration) -> Vec<ProcId> {
    (0..g.n())
        .filter(|&i| alg.enabled_on(&NeighborhoodView::of_config(g, cfg, i)))
        .collect()
}

/// Whether no process has an enabled rule.
pub fn is_silent(g: &Graph, alg: &AlgorithmSpec, cfg: &Configuration) -> bool {
    enabled_processes(g, alg, cfg).is_empty()
}

/// Fires process `i`'s lowest enabled rule and returns the move made, or
/// `None` when `i` is disabled. Panics if the command tries to write outside
/// `i`'s closed neighborhood — no rule should, and a violation means the
/// algorithm is broken, not the input.
pub fn apply_move(
    g: &Graph,
    alg: &AlgorithmSpec,
    cfg: &Configuration,
    i: ProcId,
    witness: WitnessPolicy,
) -> Option<(RuleId, Option<ProcId>, Configuration)> {
    let view = NeighborhoodView::of_config(g, cfg, i);
    let (rule, w, ws) = alg.default_move(&view, witness)?;
    assert!(
        ws.is_local_to(g, i),
        "rule {rule} at process {i} writes outside its closed neighborhood"
    );
    Some((rule, w, cfg.with_writes(&ws)))
}

/// Step budget used when the caller does not set one.
pub fn default_budget(n: usize) -> usize {
    10 * n + 100
}

/// Runs the engine from `init` until silence or until `budget` moves have
/// fired, recording every move. The initial configuration must be within
/// the algorithm's variable domains; pre-clean raw input with
/// [`AlgorithmSpec::sanitize`] if needed.
pub fn run(
    g: &Graph,
    alg: &AlgorithmSpec,
    init: &Configuration,
    daemon: &mut Daemon,
    witness: WitnessPolicy,
    budget: Option<usize>,
) -> Result<Trace, EngineError> {
    alg.validate(g, init)?;
    let budget = budget.unwrap_or_else(|| default_budget(g.n()));
    let mut cfg = init.clone();
    let mut moves = Vec::new();
    let mut budget_exhausted = false;
    // A move writes only inside the mover's closed neighborhood, so guards
    // can flip only within distance two of the mover. Track per-process
    // enabledness and refresh just that ball after each move.
    let mut enabled_flags: Vec<bool> =
        (0..g.n()).map(|i| alg.enabled_on(&NeighborhoodView::of_config(g, &cfg, i))).collect();
    let mut enabled: Vec<ProcId> =
        (0..g.n()).filter(|&i| enabled_flags[i]).collect();
    loop {
        if enabled.is_empty() {
            break;
        }
        if moves.len() >= budget {
            budget_exhausted = true;
            break;
        }
        let p = daemon.select(g, alg, &cfg, witness, &enabled);
        let (rule, w, next) =
            apply_move(g, alg, &cfg, p, witness).expect("daemon picked an enabled process");
        let writes = {
            let view = NeighborhoodView::of_config(g, &cfg, p);
            alg.command(&view, rule, w).as_map()
        };
        moves.push(MoveRecord { step: moves.len(), proc: p, rule, witness: w, writes });
        cfg = next;
        enabled_flags[p] = alg.enabled_on(&NeighborhoodView::of_config(g, &cfg, p));
        for q in g.within_two(p) {
            enabled_flags[q] = alg.enabled_on(&NeighborhoodView::of_config(g, &cfg, q));
        }
        enabled.clear();
        enabled.extend((0..g.n()).filter(|&i| enabled_flags[i]));
    }
    debug_assert_eq!(enabled, enabled_processes(g, alg, &cfg));
    Ok(Trace { initial: init.clone(), moves, final_config: cfg, budget_exhausted })
}
