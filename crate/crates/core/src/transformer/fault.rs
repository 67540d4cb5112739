//! Fault injection for the message-passing simulator: message loss during
//! chosen rounds, and transient state corruption.
//!
//! Message drops are decided per (round, sender, receiver) from a seed, so a
//! faulty run replays byte-for-byte. Corruption overwrites a node's record
//! and its neighbor cache with uniform draws from the variable domains,
//! modeling the arbitrary transient faults the algorithms must absorb.

use std::str::FromStr;

use rand::Rng;

use crate::seeds;
use crate::topology::ProcId;

/// Message-loss plan, applied per (round, sender, receiver) delivery edge.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum FaultPlan {
    /// Deliver everything.
    #[default]
    None,
    /// Drop every message in rounds `from..=to`.
    DropAll { from: usize, to: usize },
    /// Drop each delivery independently with probability `p` in rounds
    /// `from..=to`, decided deterministically from `seed`.
    DropRandom { p: f64, from: usize, to: usize, seed: u64 },
}

impl FaultPlan {
    /// Whether the delivery `sender -> receiver` in `round` is lost.
    pub fn drops(&self, round: usize, sender: ProcId, receiver: ProcId) -> bool {
        match *self {
            FaultPlan::None => false,
            FaultPlan::DropAll { from, to } => (from..=to).contains(&round),
            FaultPlan::DropRandom { p, from, to, seed } => {
                if !(from..=to).contains(&round) {
                    return false;
                }
                // Hash the delivery edge into a fresh generator so the
                // verdict is stable regardless of query order.
                let tag = seeds::mix(seeds::mix(seed, round as u64), pack(sender, receiver));
                seeds::rng_for(tag, 0x64726f70).gen::<f64>() < p
            }
        }
    }

    /// Whether any drops can occur at or after `round`.
    pub fn active_at_or_after(&self, round: usize) -> bool {
        match *self {
            FaultPlan::None => false,
            FaultPlan::DropAll { to, .. } | FaultPlan::DropRandom { to, .. } => round <= to,
        }
    }
}

fn pack(a: ProcId, b: ProcId) -> u64 {
    ((a as u64) << 32) | (b as u64 & 0xffff_ffff)
}

/// Error from parsing a fault descriptor.
#[derive(Debug, thiserror::Error)]
#[error("bad fault descriptor `{descriptor}`: {reason}")]
pub struct BadFaultDescriptor {
    pub descriptor: String,
    pub reason: String,
}

impl FromStr for FaultPlan {
    type Err = BadFaultDescriptor;

    /// Accepts `none`, `drop-all:FROM..TO`, and `drop:P:FROM..TO:seed=N`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| BadFaultDescriptor {
            descriptor: s.to_string(),
            reason: reason.to_string(),
        };
        let parse_range = |text: &str| -> Result<(usize, usize), BadFaultDescriptor> {
            let (a, b) = text.split_once("..").ok_or_else(|| bad("expected FROM..TO"))?;
            let from = a.parse().map_err(|_| bad("FROM must be an integer"))?;
            let to = b.parse().map_err(|_| bad("TO must be an integer"))?;
            if from > to {
                return Err(bad("range must satisfy FROM <= TO"));
            }
            Ok((from, to))
        };
        if s == "none" {
            return Ok(FaultPlan::None);
        }
        if let Some(rest) = s.strip_prefix("drop-all:") {
            let (from, to) = parse_range(rest)?;
            return Ok(FaultPlan::DropAll { from, to });
        }
        if let Some(rest) = s.strip_prefix("drop:") {
            let mut parts = rest.splitn(3, ':');
            let p: f64 = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad("expected drop:P:FROM..TO:seed=N"))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(bad("P must be within 0..=1"));
            }
            let (from, to) = parse_range(parts.next().ok_or_else(|| bad("missing round range"))?)?;
            let seed = parts
                .next()
                .and_then(|t| t.strip_prefix("seed="))
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad("missing seed=N"))?;
            return Ok(FaultPlan::DropRandom { p, from, to, seed });
        }
        Err(bad("expected none, drop-all:FROM..TO, or drop:P:FROM..TO:seed=N"))
    }
}
