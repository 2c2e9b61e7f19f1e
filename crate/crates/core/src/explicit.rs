//! Explicit evaluation functions and the baseline comparison.
//!
//! Instead of a target shape, each step maximizes the increase of a closed-form
//! function of the combination: height, width, depth or connected studs.
//! Stability and rollback are switched off. Four methods are compared:
//!
//! * `bo`: the Bayesian-optimization selection step with `λ_s = 0`.
//! * `greedy`: best of `q` uniformly sampled feasible placements.
//! * `random`: one uniformly sampled feasible placement.
//! * `oracle`: the best achievable value after `t` steps.
//!
//! The oracle values are closed-form: one brick adds at most one layer, at
//! most 3 studs of extent along either plan axis (it must share a stud with
//! an existing brick), and at most 8 engaged studs (each engaged cell sits
//! above an occupied cell, and the seed brick's cells sit on the ground).

use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bo::{select_greedy, select_next, BoConfig, Evaluator};
use crate::error::{Error, Result};
use crate::lattice::{enumerate_attachments, Bounds, Combination, Direction, Primitive};
use crate::occupiability::{connected_studs, depth, height, width};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Height,
    Width,
    Depth,
    Studs,
}

impl Objective {
    pub const ALL: [Objective; 4] = [
        Objective::Height,
        Objective::Width,
        Objective::Depth,
        Objective::Studs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Objective::Height => "height",
            Objective::Width => "width",
            Objective::Depth => "depth",
            Objective::Studs => "studs",
        }
    }

    pub fn value(self, bricks: &[Primitive]) -> Result<f64> {
        let v = match self {
            Objective::Height => height(bricks)?,
            Objective::Width => width(bricks)?,
            Objective::Depth => depth(bricks)?,
            Objective::Studs => connected_studs(bricks)?,
        };
        Ok(v as f64)
    }

    /// Best achievable value after `t` steps from the default seed brick.
    pub fn oracle(self, t: usize) -> f64 {
        let t = t as f64;
        match self {
            Objective::Height => t + 1.0,
            Objective::Width => 4.0 + 3.0 * t,
            Objective::Depth => 2.0 + 3.0 * t,
            Objective::Studs => 8.0 * t,
        }
    }
}

impl FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Objective::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown objective {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bo,
    Random,
    Greedy,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Bo, Method::Random, Method::Greedy, Method::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bo => "bo",
            Method::Random => "random",
            Method::Greedy => "greedy",
            Method::Oracle => "oracle",
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

/// Scores a placement by the increase it brings to an explicit function.
pub struct ExplicitEvaluator {
    pub objective: Objective,
    pub bounds: Bounds,
}

impl Evaluator for ExplicitEvaluator {
    fn bounds(&self) -> Bounds {
        self.bounds
    }

    fn evaluate(&self, c: &Combination, p: &Primitive) -> Result<(f64, f64)> {
        let before = self.objective.value(c.bricks())?;
        let mut bricks = c.bricks().to_vec();
        bricks.push(*p);
        Ok((self.objective.value(&bricks)? - before, 0.0))
    }
}

fn seed_brick() -> Primitive {
    Primitive {
        a1: 0,
        a2: 0,
        z: 0,
        dir: Direction::Lengthwise,
    }
}

/// Per-step values `f(c_1), …, f(c_T)` for one method and seed.
pub fn assemble_explicit(
    objective: Objective,
    method: Method,
    steps: usize,
    seed: u64,
    bo: &BoConfig,
) -> Result<Vec<f64>> {
    if steps < 1 {
        return Err(Error::InvalidConfig("steps must be >= 1".into()));
    }
    if method == Method::Oracle {
        return Ok((1..=steps).map(|t| objective.oracle(t)).collect());
    }
    let bo = BoConfig {
        lambda_s: (0.0, 0.0),
        seed,
        ..*bo
    };
    bo.validate()?;
    let evaluator = ExplicitEvaluator {
        objective,
        bounds: Bounds::unbounded(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Combination::seeded(seed_brick());
    let mut values = Vec::with_capacity(steps);
    let mut best = f64::MIN;
    for _ in 0..steps {
        let brick = match method {
            Method::Random => {
                let pool = enumerate_attachments(&c, &evaluator.bounds)?;
                *pool.choose(&mut rng).ok_or(Error::Saturated)?
            }
            Method::Greedy => select_greedy(&c, bo.candidates, &evaluator, &mut rng)?.0,
            Method::Bo => select_next(&c, &bo, &evaluator, &Default::default(), &mut rng)?.0,
            Method::Oracle => unreachable!(),
        };
        c.push(brick)?;
        best = best.max(objective.value(c.bricks())?);
        values.push(best);
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: Method,
    pub objective: Objective,
    /// `None` for the seed-independent oracle series.
    pub seed: Option<u64>,
    pub step: usize,
    pub value: f64,
}

/// All curves for the given objectives, methods and seeds, in a fixed order.
/// `run` lets callers parallelize independent `(objective, method, seed)` jobs.
pub fn benchmark_with<F>(
    objectives: &[Objective],
    methods: &[Method],
    steps: usize,
    seeds: &[u64],
    bo: &BoConfig,
    run: F,
) -> Result<Vec<BenchRow>>
where
    F: FnOnce(
        Vec<(Objective, Method, Option<u64>)>,
        &(dyn Fn(&(Objective, Method, Option<u64>)) -> Result<Vec<f64>> + Sync),
    ) -> Vec<Result<Vec<f64>>>,
{
    let mut jobs = Vec::new();
    for &objective in objectives {
        for &method in methods {
            if method == Method::Oracle {
                jobs.push((objective, method, None));
            } else {
                jobs.extend(seeds.iter().map(|&s| (objective, method, Some(s))));
            }
        }
    }
    let work = |&(objective, method, seed): &(Objective, Method, Option<u64>)| {
        assemble_explicit(objective, method, steps, seed.unwrap_or(0), bo)
    };
    let results = run(jobs.clone(), &work);
    let mut rows = Vec::new();
    for ((objective, method, seed), values) in jobs.into_iter().zip(results) {
        for (i, value) in values?.into_iter().enumerate() {
            rows.push(BenchRow {
                method,
                objective,
                seed,
                step: i + 1,
                value,
            });
        }
    }
    Ok(rows)
}

/// Sequential [`benchmark_with`].
pub fn benchmark(
    objectives: &[Objective],
    methods: &[Method],
    steps: usize,
    seeds: &[u64],
    bo: &BoConfig,
) -> Result<Vec<BenchRow>> {
    benchmark_with(objectives, methods, steps, seeds, bo, |jobs, work| {
        jobs.iter().map(work).collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: Method,
    pub objective: Objective,
    pub step: usize,
    pub n: usize,
    pub mean: f64,
    /// 1.96 population standard deviations.
    pub halfwidth: f64,
}

pub fn summarize(rows: &[BenchRow]) -> Vec<SummaryRow> {
    let mut groups: std::collections::BTreeMap<(Objective, Method, usize), Vec<f64>> =
        Default::default();
    for r in rows {
        groups
            .entry((r.objective, r.method, r.step))
            .or_default()
            .push(r.value);
    }
    groups
        .into_iter()
        .map(|((objective, method, step), vals)| {
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            SummaryRow {
                method,
                objective,
                step,
                n: vals.len(),
                mean,
                halfwidth: 1.96 * std,
            }
        })
        .collect()
}

/// `method,objective,seed,step,value`; the oracle series has an empty seed.
pub fn rows_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("method,objective,seed,step,value\n");
    for r in rows {
        let seed = r.seed.map(|s| s.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.method.name(),
            r.objective.name(),
            seed,
            r.step,
            r.value
        );
    }
    out
}

/// `method,objective,step,n,mean,halfwidth`.
pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("method,objective,step,n,mean,halfwidth\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.method.name(),
            r.objective.name(),
            r.step,
            r.n,
            r.mean,
            r.halfwidth
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive maximum of `objective` over every sequence of `t` attachments.
    fn brute_force_best(objective: Objective, t: usize) -> f64 {
        fn rec(c: &Combination, left: usize, objective: Objective) -> f64 {
            if left == 0 {
                return objective.value(c.bricks()).unwrap();
            }
            enumerate_attachments(c, &Bounds::unbounded())
                .unwrap()
                .into_iter()
                .map(|p| rec(&c.with_unchecked(p), left - 1, objective))
                .fold(f64::MIN, f64::max)
        }
        rec(&Combination::seeded(seed_brick()), t, objective)
    }

    #[test]
    fn oracle_matches_exhaustive_search() {
        for objective in Objective::ALL {
            for t in 1..=2 {
                assert_eq!(
                    objective.oracle(t),
                    brute_force_best(objective, t),
                    "{objective:?} t={t}"
                );
            }
        }
    }

    #[test]
    #[ignore = "slow exhaustive search over three steps"]
    fn oracle_matches_exhaustive_search_three_steps() {
        for objective in Objective::ALL {
            assert_eq!(objective.oracle(3), brute_force_best(objective, 3));
        }
    }

    #[test]
    fn oracle_curves() {
        let bo = BoConfig::default();
        assert_eq!(
            assemble_explicit(Objective::Height, Method::Oracle, 3, 0, &bo).unwrap(),
            vec![2.0, 3.0, 4.0]
        );
        assert_eq!(
            assemble_explicit(Objective::Width, Method::Oracle, 2, 9, &bo).unwrap(),
            vec![7.0, 10.0]
        );
    }

    #[test]
    fn methods_never_beat_the_oracle() {
        let bo = BoConfig::default();
        for objective in Objective::ALL {
            for method in [Method::Random, Method::Greedy, Method::Bo] {
                let values = assemble_explicit(objective, method, 4, 3, &bo).unwrap();
                assert_eq!(values.len(), 4);
                for (t, v) in values.iter().enumerate() {
                    assert!(
                        *v <= objective.oracle(t + 1),
                        "{method:?} {objective:?} step {t}"
                    );
                }
                assert!(values.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn benchmark_rows_and_summary() {
        let bo = BoConfig::default();
        let rows = benchmark(&[Objective::Height], &Method::ALL, 3, &[0, 1], &bo).unwrap();
        // three seeded methods x two seeds x three steps, plus one oracle series
        assert_eq!(rows.len(), 3 * 2 * 3 + 3);
        let csv = rows_to_csv(&rows);
        assert!(csv.starts_with("method,objective,seed,step,value\n"));
        assert!(csv.contains("oracle,height,,3,4\n"));
        let summary = summarize(&rows);
        let oracle = summary
            .iter()
            .find(|s| s.method == Method::Oracle && s.step == 2)
            .unwrap();
        assert_eq!((oracle.mean, oracle.halfwidth, oracle.n), (3.0, 0.0, 1));
        assert!(summary_to_csv(&summary).starts_with("method,objective,step,n,mean,halfwidth\n"));
    }

    #[test]
    fn parse_names() {
        assert_eq!("studs".parse::<Objective>().unwrap(), Objective::Studs);
        assert_eq!("greedy".parse::<Method>().unwrap(), Method::Greedy);
        assert!("tallness".parse::<Objective>().is_err());
    }
}
