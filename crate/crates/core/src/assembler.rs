//! The outer assembly loop with rollback, and brute-force combination counting.
//!
//! Each step asks [`select_next`] for a placement, attaches it, and then
//! checks the most recent window of `τ_rb` steps. When the window looks poor
//! the last `τ_rb` bricks are removed and the loop resumes from the shorter
//! combination. Two guards keep this from cycling: a removed brick may not
//! be chosen again for the same step index, and a step index that has been
//! assembled five times no longer triggers rollbacks.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bo::{select_next, BoConfig, Evaluator, Observation, ShapeEvaluator};
use crate::error::{Error, Result};
use crate::lattice::{
    enumerate_attachments, Bounds, Combination, Direction, Primitive, CELLS_PER_BRICK,
};
use crate::occupiability::TargetShape;
use crate::stability::{StabilityConfig, StabilityModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RollbackMode {
    /// Roll back when the window's total shortfall from a full 8-cell score reaches `α`.
    Shortfall,
    /// Roll back when `Σ (max_j y_o − y_o) < α`, the max taken over each step's observations.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssemblyConfig {
    /// Bricks to add (`T`).
    pub steps: usize,
    /// Bricks removed per rollback (`τ_rb`).
    pub rollback_window: usize,
    /// Rollback threshold `α`. Zero disables rollback in shortfall mode.
    pub rollback_threshold: f64,
    pub rollback_mode: RollbackMode,
    /// A step index assembled this many times no longer rolls back.
    pub max_repeats: usize,
    pub initial: Vec<Primitive>,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            steps: 10,
            rollback_window: 2,
            rollback_threshold: 12.0,
            rollback_mode: RollbackMode::Shortfall,
            max_repeats: 5,
            initial: vec![Primitive {
                a1: 0,
                a2: 0,
                z: 0,
                dir: Direction::Lengthwise,
            }],
        }
    }
}

impl AssemblyConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.steps < 1 {
            return bad("steps must be >= 1");
        }
        if self.rollback_window < 1 {
            return bad("rollback window must be >= 1");
        }
        if !(self.rollback_threshold.is_finite() && self.rollback_threshold >= 0.0) {
            return bad("rollback threshold must be >= 0");
        }
        if self.max_repeats < 1 {
            return bad("max repeats must be >= 1");
        }
        if self.initial.is_empty() {
            return bad("initial combination must not be empty");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssemblyStatus {
    Complete,
    Saturated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Step counter after attaching the brick (before any rollback).
    pub t: usize,
    pub brick: Primitive,
    pub y_o: f64,
    pub y_s: f64,
    pub observations: Vec<Observation>,
    pub rollback: bool,
    /// Bricks removed by the rollback, most recent first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed: Vec<Primitive>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyTrace {
    pub config: serde_json::Value,
    pub steps: Vec<StepRecord>,
    #[serde(rename = "final")]
    pub final_bricks: Vec<Primitive>,
    pub status: AssemblyStatus,
}

impl AssemblyTrace {
    pub fn rollbacks(&self) -> usize {
        self.steps.iter().filter(|s| s.rollback).count()
    }

    /// Rebuilds the final combination from the initial bricks and the step records.
    pub fn replay(&self, initial: &[Primitive], window: usize) -> Result<Combination> {
        let mut c = Combination::from_bricks(initial.iter().copied())?;
        for s in &self.steps {
            c.push(s.brick)?;
            if s.rollback {
                for _ in 0..window {
                    c.pop();
                }
            }
        }
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serialization is infallible")
    }
}

/// Observer hook called after every attach and every rollback; used by instrumented runs.
pub trait AssemblyObserver {
    fn attached(&mut self, _t: usize, _brick: &Primitive, _excluded: &HashSet<Primitive>) {}
    fn rolled_back(
        &mut self,
        _t: usize,
        _removed: &[Primitive],
        _len_before: usize,
        _len_after: usize,
    ) {
    }
}

impl AssemblyObserver for () {}

/// Assembles toward `target` scoring candidates by occupiability and static stability.
pub fn assemble(
    target: &TargetShape,
    cfg: &AssemblyConfig,
    bo: &BoConfig,
    stability: &StabilityConfig,
) -> Result<AssemblyTrace> {
    stability.validate()?;
    let evaluator = ShapeEvaluator {
        target,
        stability: stability as &dyn StabilityModel,
    };
    let mut trace = assemble_with(&evaluator, cfg, bo, &mut ())?;
    trace.config = serde_json::json!({
        "assembly": cfg,
        "bo": bo,
        "stability": stability,
        "target": { "extents": target.extents(), "cells": target.len() },
    });
    Ok(trace)
}

/// The assembly loop against any evaluator.
pub fn assemble_with(
    evaluator: &dyn Evaluator,
    cfg: &AssemblyConfig,
    bo: &BoConfig,
    observer: &mut dyn AssemblyObserver,
) -> Result<AssemblyTrace> {
    cfg.validate()?;
    bo.validate()?;
    let mut c = Combination::from_bricks(cfg.initial.iter().copied())?;
    let bounds = evaluator.bounds();
    if let Some(b) = c.bricks().iter().find(|b| !bounds.contains(b)) {
        return Err(Error::InvalidConfig(format!(
            "initial brick {b} lies outside the grid"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(bo.seed);
    let ideal = CELLS_PER_BRICK as f64;
    let tau = cfg.rollback_window;

    let mut t = 0usize;
    // (chosen y_o, best y_o among the step's observations) for steps 1..=t
    let mut window: Vec<(f64, f64)> = Vec::new();
    let mut visits: HashMap<usize, usize> = HashMap::new();
    let mut excluded: HashMap<usize, HashSet<Primitive>> = HashMap::new();
    let mut steps = Vec::new();
    let mut status = AssemblyStatus::Complete;

    while t < cfg.steps {
        let step = t + 1;
        let excl = excluded.get(&step).cloned().unwrap_or_default();
        let (brick, observations) = match select_next(&c, bo, evaluator, &excl, &mut rng) {
            Ok(r) => r,
            Err(Error::Saturated) => {
                status = AssemblyStatus::Saturated;
                break;
            }
            Err(e) => return Err(e),
        };
        c.push(brick)?;
        t = step;
        observer.attached(t, &brick, &excl);
        let chosen = observations
            .iter()
            .find(|o| o.primitive == brick)
            .expect("chosen is observed");
        let best = observations.iter().map(|o| o.y_o).fold(f64::MIN, f64::max);
        window.push((chosen.y_o, best));
        let count = visits.entry(t).or_insert(0);
        *count += 1;

        let mut record = StepRecord {
            t,
            brick,
            y_o: chosen.y_o,
            y_s: chosen.y_s,
            observations,
            rollback: false,
            removed: Vec::new(),
        };

        if t >= tau && *count < cfg.max_repeats {
            let recent = &window[window.len() - tau..];
            let trigger = match cfg.rollback_mode {
                RollbackMode::Shortfall => {
                    let shortfall: f64 = recent.iter().map(|(y, _)| ideal - y).sum();
                    cfg.rollback_threshold > 0.0 && shortfall >= cfg.rollback_threshold
                }
                RollbackMode::Literal => {
                    let regret: f64 = recent.iter().map(|(y, best)| best - y).sum();
                    regret < cfg.rollback_threshold
                }
            };
            if trigger {
                let before = c.len();
                for k in 0..tau {
                    let removed = c.pop().expect("window lies within the assembled steps");
                    excluded.entry(t - k).or_default().insert(removed);
                    record.removed.push(removed);
                }
                window.truncate(window.len() - tau);
                excluded.retain(|s, _| *s <= t);
                observer.rolled_back(t, &record.removed, before, c.len());
                t -= tau;
                record.rollback = true;
            }
        }
        steps.push(record);
    }

    Ok(AssemblyTrace {
        config: serde_json::Value::Null,
        steps,
        final_bricks: c.bricks().to_vec(),
        status,
    })
}

/// How brick sets are identified when counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountConvention {
    /// Unordered sets containing the origin brick `(0, 0, 0, 0)`, all bricks on layers `>= 0`.
    AnchoredSets,
    /// Ordered growth sequences from the origin brick, each brick attaching to an earlier one.
    Sequences,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CombinationCount {
    pub n: usize,
    pub convention: CountConvention,
    pub total: u64,
    /// For `n = 2`: placements of the second brick parallel / perpendicular to the first.
    pub parallel: Option<u64>,
    pub perpendicular: Option<u64>,
}

/// Brute-force enumeration of `n`-brick combinations grown from the origin brick.
pub fn count_combinations(n: usize, convention: CountConvention) -> Result<CombinationCount> {
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidConfig(format!(
            "combination counting supports n = 2 or 3, got {n}"
        )));
    }
    let origin = Primitive {
        a1: 0,
        a2: 0,
        z: 0,
        dir: Direction::Lengthwise,
    };
    let bounds = Bounds::unbounded();
    let mut sequences = 0u64;
    let mut sets: BTreeSet<Vec<Primitive>> = BTreeSet::new();
    let mut grow = vec![Combination::seeded(origin)];
    for _ in 1..n {
        let mut next = Vec::new();
        for c in &grow {
            for p in enumerate_attachments(c, &bounds)? {
                next.push(c.with_unchecked(p));
            }
        }
        grow = next;
    }
    for c in &grow {
        sequences += 1;
        let mut key = c.bricks().to_vec();
        key.sort();
        sets.insert(key);
    }
    let total = match convention {
        CountConvention::AnchoredSets => sets.len() as u64,
        CountConvention::Sequences => sequences,
    };
    let (parallel, perpendicular) = if n == 2 {
        let par = grow
            .iter()
            .filter(|c| c.bricks()[1].dir == origin.dir)
            .count() as u64;
        (Some(par), Some(grow.len() as u64 - par))
    } else {
        (None, None)
    };
    Ok(CombinationCount {
        n,
        convention,
        total,
        parallel,
        perpendicular,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occupiability::coverage;

    fn p(a1: i32, a2: i32, z: i32, d: i64) -> Primitive {
        Primitive::new(a1, a2, z, Direction::from_index(d).unwrap()).unwrap()
    }

    #[test]
    fn two_brick_counts() {
        let c = count_combinations(2, CountConvention::AnchoredSets).unwrap();
        assert_eq!(
            (c.total, c.parallel, c.perpendicular),
            (46, Some(21), Some(25))
        );
        assert_eq!(
            count_combinations(2, CountConvention::Sequences)
                .unwrap()
                .total,
            46
        );
        assert!(count_combinations(4, CountConvention::Sequences).is_err());
    }

    #[test]
    fn three_brick_counts_under_each_convention() {
        // Frozen from an exhaustive enumeration; the published 3,566 uses an unstated convention.
        assert_eq!(
            count_combinations(3, CountConvention::AnchoredSets)
                .unwrap()
                .total,
            3556
        );
        assert_eq!(
            count_combinations(3, CountConvention::Sequences)
                .unwrap()
                .total,
            4036
        );
    }

    #[test]
    fn config_validation() {
        assert!(AssemblyConfig::default().validate().is_ok());
        assert!(AssemblyConfig {
            steps: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(AssemblyConfig {
            rollback_window: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(AssemblyConfig {
            initial: vec![],
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn single_forced_step_covers_target() {
        let target = TargetShape::cuboid((0, 0, 0), [4, 2, 2], [4, 2, 2]).unwrap();
        let cfg = AssemblyConfig {
            steps: 1,
            ..Default::default()
        };
        let trace = assemble(
            &target,
            &cfg,
            &BoConfig::default(),
            &StabilityConfig::default(),
        )
        .unwrap();
        assert_eq!(trace.status, AssemblyStatus::Complete);
        let c = Combination::from_bricks(trace.final_bricks.iter().copied()).unwrap();
        assert_eq!(coverage(&c, &target), 1.0);
        assert_eq!(trace.final_bricks, vec![p(0, 0, 0, 0), p(0, 0, 1, 0)]);
    }

    #[test]
    fn saturation_returns_partial_trace() {
        let target = TargetShape::cuboid((0, 0, 0), [4, 2, 2], [4, 2, 2]).unwrap();
        let cfg = AssemblyConfig {
            steps: 3,
            ..Default::default()
        };
        let trace = assemble(
            &target,
            &cfg,
            &BoConfig::default(),
            &StabilityConfig::default(),
        )
        .unwrap();
        assert_eq!(trace.status, AssemblyStatus::Saturated);
        assert_eq!(trace.final_bricks.len(), 2);
    }

    #[test]
    fn zero_threshold_never_rolls_back() {
        let target = TargetShape::cuboid((0, 0, 0), [4, 4, 2], [12, 12, 3]).unwrap();
        let cfg = AssemblyConfig {
            steps: 6,
            rollback_threshold: 0.0,
            ..Default::default()
        };
        let trace = assemble(
            &target,
            &cfg,
            &BoConfig::default(),
            &StabilityConfig::default(),
        )
        .unwrap();
        assert_eq!(trace.rollbacks(), 0);
        assert_eq!(trace.steps.len(), 6);
        assert_eq!(trace.final_bricks.len(), 7);
    }

    #[test]
    fn trace_replays_and_round_trips() {
        let target = TargetShape::cuboid((0, 0, 0), [8, 4, 2], [12, 12, 3]).unwrap();
        let cfg = AssemblyConfig {
            steps: 6,
            rollback_threshold: 6.0,
            ..Default::default()
        };
        let trace = assemble(
            &target,
            &cfg,
            &BoConfig::default(),
            &StabilityConfig::default(),
        )
        .unwrap();
        let c = trace.replay(&cfg.initial, cfg.rollback_window).unwrap();
        assert_eq!(c.bricks(), trace.final_bricks.as_slice());
        let back: AssemblyTrace = serde_json::from_str(&trace.to_json()).unwrap();
        assert_eq!(back, trace);
    }
}
