//! Acquisition, random scalarization and per-step candidate selection.
//!
//! One assembly step observes `q` candidate placements. The first `v` are
//! drawn uniformly from the feasible set; each later one is the maximizer of
//! a randomly weighted sum of two GP-UCB acquisitions (one surrogate per
//! objective) over a fresh sample of `ζ` feasible placements. The step then
//! keeps the observed placement with the highest occupiability score, using
//! the stability score to break ties.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{encode, FitConfig, GpModel};
use crate::lattice::{enumerate_attachments, sample_from, Bounds, Combination, Primitive};
use crate::occupiability::{occupiability_score, TargetShape};
use crate::stability::StabilityModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoConfig {
    /// Uniformly sampled candidates per step (`v`).
    pub initial_random: usize,
    /// Total observed candidates per step (`q`).
    pub candidates: usize,
    /// Feasible placements scored per acquisition maximization (`ζ`).
    pub acquisition_samples: usize,
    /// When set, score as many placements as fit in this many seconds instead of `ζ`.
    pub time_budget: Option<f64>,
    /// Exploration weight `γ_t = gamma0 + gamma1 · ln(1 + t)`, `t` = observations so far.
    pub gamma0: f64,
    pub gamma1: f64,
    pub lambda_o: (f64, f64),
    pub lambda_s: (f64, f64),
    pub seed: u64,
    pub fit: FitConfig,
}

impl Default for BoConfig {
    fn default() -> Self {
        BoConfig {
            initial_random: 10,
            candidates: 20,
            acquisition_samples: 1000,
            time_budget: None,
            gamma0: 1.0,
            gamma1: 1.0,
            lambda_o: (0.8, 0.9),
            lambda_s: (0.0, 0.1),
            seed: 0,
            fit: FitConfig::default(),
        }
    }
}

impl BoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.initial_random < 1 || self.candidates <= self.initial_random {
            return bad(format!(
                "need candidates > initial_random >= 1, got q = {}, v = {}",
                self.candidates, self.initial_random
            ));
        }
        if self.acquisition_samples < 1 {
            return bad("acquisition_samples must be >= 1".into());
        }
        if let Some(t) = self.time_budget {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("time budget must be positive, got {t}"));
            }
        }
        if !(self.gamma0 >= 0.0 && self.gamma1 >= 0.0) {
            return bad("gamma parameters must be >= 0".into());
        }
        for (name, (lo, hi)) in [("lambda_o", self.lambda_o), ("lambda_s", self.lambda_s)] {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return bad(format!(
                    "{name} range must satisfy 0 <= lo <= hi <= 1, got ({lo}, {hi})"
                ));
            }
        }
        Ok(())
    }

    pub fn gamma(&self, t: usize) -> f64 {
        self.gamma0 + self.gamma1 * (1.0 + t as f64).ln()
    }
}

/// One evaluated candidate placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    #[serde(rename = "brick")]
    pub primitive: Primitive,
    pub y_o: f64,
    pub y_s: f64,
}

/// Scores a candidate placement against the current combination.
pub trait Evaluator: Sync {
    /// Region in which placements are considered.
    fn bounds(&self) -> Bounds;
    /// `(y_o, y_s)` of attaching `p` to `c`; both are maximized.
    fn evaluate(&self, c: &Combination, p: &Primitive) -> Result<(f64, f64)>;
}

/// Occupiability against a target shape plus negated stability penalty.
pub struct ShapeEvaluator<'a> {
    pub target: &'a TargetShape,
    pub stability: &'a dyn StabilityModel,
}

impl Evaluator for ShapeEvaluator<'_> {
    fn bounds(&self) -> Bounds {
        self.target.bounds()
    }

    fn evaluate(&self, c: &Combination, p: &Primitive) -> Result<(f64, f64)> {
        let y_o = occupiability_score(p, c, self.target)? as f64;
        let mut bricks = c.bricks().to_vec();
        bricks.push(*p);
        let y_s = -self.stability.penalty(&bricks)?;
        Ok((y_o, y_s))
    }
}

/// GP-UCB: `μ + γ σ`.
pub fn ucb(mean: f64, variance: f64, gamma: f64) -> f64 {
    mean + gamma * variance.max(0.0).sqrt()
}

/// `λ_o · UCB_o(p) + λ_s · UCB_s(p)`.
pub fn scalarized_acquisition(
    p: &Primitive,
    model_o: &GpModel,
    model_s: &GpModel,
    lambda_o: f64,
    lambda_s: f64,
    gamma: f64,
) -> f64 {
    let x = encode(p);
    let (mo, vo) = model_o.posterior(&x);
    let (ms, vs) = model_s.posterior(&x);
    lambda_o * ucb(mo, vo, gamma) + lambda_s * ucb(ms, vs, gamma)
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Feasible placements not already observed and not excluded.
fn open_placements(
    c: &Combination,
    bounds: &Bounds,
    seen: &HashSet<Primitive>,
    excluded: &HashSet<Primitive>,
) -> Result<Vec<Primitive>> {
    Ok(enumerate_attachments(c, bounds)?
        .into_iter()
        .filter(|p| !seen.contains(p) && !excluded.contains(p))
        .collect())
}

/// Argmax of the scalarized acquisition; ties go to the lexicographically smallest placement.
pub fn maximize_acquisition<I: IntoIterator<Item = Primitive>>(
    samples: I,
    model_o: &GpModel,
    model_s: &GpModel,
    lambda_o: f64,
    lambda_s: f64,
    gamma: f64,
    deadline: Option<Instant>,
) -> Option<Primitive> {
    let mut best: Option<(f64, Primitive)> = None;
    for (i, p) in samples.into_iter().enumerate() {
        let a = scalarized_acquisition(&p, model_o, model_s, lambda_o, lambda_s, gamma);
        let better = match best {
            None => true,
            Some((ba, bp)) => a > ba || (a == ba && p < bp),
        };
        if better {
            best = Some((a, p));
        }
        if deadline.is_some_and(|d| i > 0 && Instant::now() >= d) {
            break;
        }
    }
    best.map(|(_, p)| p)
}

/// Fits both surrogates on `history` and returns the acquisition maximizer over
/// `ζ` sampled feasible placements that are neither in `history` nor `excluded`.
pub fn query_candidate(
    c: &Combination,
    history: &[Observation],
    cfg: &BoConfig,
    bounds: &Bounds,
    excluded: &HashSet<Primitive>,
    rng: &mut ChaCha8Rng,
) -> Result<Primitive> {
    if history.is_empty() {
        return Err(Error::InvalidConfig(
            "query_candidate needs at least one observation".into(),
        ));
    }
    let seen: HashSet<Primitive> = history.iter().map(|o| o.primitive).collect();
    let pool = open_placements(c, bounds, &seen, excluded)?;
    if pool.is_empty() {
        return Err(Error::Saturated);
    }

    let xs: Vec<_> = history.iter().map(|o| encode(&o.primitive)).collect();
    let yo: Vec<f64> = history.iter().map(|o| o.y_o).collect();
    let ys: Vec<f64> = history.iter().map(|o| o.y_s).collect();
    let model_o = GpModel::fit(&xs, &yo, &cfg.fit)?;
    let model_s = GpModel::fit(&xs, &ys, &cfg.fit)?;

    let lambda_o = draw(rng, cfg.lambda_o);
    let lambda_s = draw(rng, cfg.lambda_s);
    let gamma = cfg.gamma(history.len());

    let (samples, deadline) = match cfg.time_budget {
        Some(secs) => (
            sample_from(&pool, pool.len(), rng),
            Some(Instant::now() + Duration::from_secs_f64(secs)),
        ),
        None => (sample_from(&pool, cfg.acquisition_samples, rng), None),
    };
    maximize_acquisition(
        samples, &model_o, &model_s, lambda_o, lambda_s, gamma, deadline,
    )
    .ok_or(Error::Saturated)
}

/// Index of the best observation: highest `y_o`, then highest `y_s`, then earliest.
pub fn best_observation(obs: &[Observation]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, o) in obs.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                let cur = &obs[b];
                o.y_o > cur.y_o || (o.y_o == cur.y_o && o.y_s > cur.y_s)
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Runs one full selection step: `v` random observations, then BO queries up
/// to `q` observations in total. Returns the chosen placement and every observation.
pub fn select_next(
    c: &Combination,
    cfg: &BoConfig,
    evaluator: &dyn Evaluator,
    excluded: &HashSet<Primitive>,
    rng: &mut ChaCha8Rng,
) -> Result<(Primitive, Vec<Observation>)> {
    if c.is_empty() {
        return Err(Error::NoStructure);
    }
    let bounds = evaluator.bounds();
    let pool = open_placements(c, &bounds, &HashSet::new(), excluded)?;
    if pool.is_empty() {
        return Err(Error::Saturated);
    }
    let mut history = Vec::with_capacity(cfg.candidates);
    for p in sample_from(&pool, cfg.initial_random, rng) {
        let (y_o, y_s) = evaluator.evaluate(c, &p)?;
        history.push(Observation {
            primitive: p,
            y_o,
            y_s,
        });
    }
    while history.len() < cfg.candidates && history.len() < pool.len() {
        let p = query_candidate(c, &history, cfg, &bounds, excluded, rng)?;
        let (y_o, y_s) = evaluator.evaluate(c, &p)?;
        history.push(Observation {
            primitive: p,
            y_o,
            y_s,
        });
    }
    let best = best_observation(&history).expect("at least one observation");
    Ok((history[best].primitive, history))
}

/// Uniform sample of `q` placements, keep the best scoring one.
pub fn select_greedy(
    c: &Combination,
    samples: usize,
    evaluator: &dyn Evaluator,
    rng: &mut ChaCha8Rng,
) -> Result<(Primitive, Vec<Observation>)> {
    let pool = enumerate_attachments(c, &evaluator.bounds())?;
    if pool.is_empty() {
        return Err(Error::Saturated);
    }
    let mut history = Vec::with_capacity(samples);
    for p in sample_from(&pool, samples, rng) {
        let (y_o, y_s) = evaluator.evaluate(c, &p)?;
        history.push(Observation {
            primitive: p,
            y_o,
            y_s,
        });
    }
    let best = best_observation(&history).expect("at least one observation");
    Ok((history[best].primitive, history))
}
