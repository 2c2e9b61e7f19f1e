//! Static stability scoring.
//!
//! The structure is cut at every layer interface. Above each cut the bricks
//! form a rigid load whose plan-view center of mass must rest over the
//! support region: the stud contacts between the two layers at the cut, or
//! the footprints of the lowest layer for the cut against the ground. The
//! support region is the convex hull of the unit squares of the contact
//! cells. A lateral push is emulated by shifting the center of mass by `δ`
//! along each of the four axis directions; every shifted position that falls
//! outside the hull contributes its distance to the hull boundary.
//!
//! Every brick weighs the same and its mass sits at its footprint centroid.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{component_count, PlanRect, Primitive};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    /// Lateral shift of the center of mass, in stud units.
    pub perturbation: f64,
    pub w_margin: f64,
    pub w_disconnect: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            perturbation: 0.5,
            w_margin: 1.0,
            w_disconnect: 1000.0,
        }
    }
}

impl StabilityConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if ok(self.perturbation) && ok(self.w_margin) && ok(self.w_disconnect) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "stability parameters must be finite and >= 0: {self:?}"
            )))
        }
    }
}

/// Anything that can score how unstable a brick set is. Zero means stable.
pub trait StabilityModel: Send + Sync {
    fn penalty(&self, bricks: &[Primitive]) -> Result<f64>;
}

impl StabilityModel for StabilityConfig {
    fn penalty(&self, bricks: &[Primitive]) -> Result<f64> {
        stability_penalty(bricks, self)
    }
}

type Point = (f64, f64);

pub fn stability_penalty(bricks: &[Primitive], cfg: &StabilityConfig) -> Result<f64> {
    if bricks.is_empty() {
        return Err(Error::EmptyCombination);
    }
    let mut layers: BTreeMap<i32, Vec<&Primitive>> = BTreeMap::new();
    for b in bricks {
        layers.entry(b.z).or_default().push(b);
    }
    let ground = *layers.keys().next().expect("non-empty");
    let top = *layers.keys().next_back().expect("non-empty");

    let shifts = [
        (cfg.perturbation, 0.0),
        (-cfg.perturbation, 0.0),
        (0.0, cfg.perturbation),
        (0.0, -cfg.perturbation),
    ];

    let mut margin_penalty = 0.0;
    for k in ground..=top {
        let load: Vec<&Primitive> = bricks.iter().filter(|b| b.z >= k).collect();
        let support: Vec<PlanRect> = if k == ground {
            layers[&k].iter().map(|b| b.plan_rect()).collect()
        } else {
            let upper = layers.get(&k).map(Vec::as_slice).unwrap_or(&[]);
            let lower = layers.get(&(k - 1)).map(Vec::as_slice).unwrap_or(&[]);
            upper
                .iter()
                .flat_map(|u| {
                    lower
                        .iter()
                        .filter_map(|l| u.plan_rect().intersect(&l.plan_rect()))
                })
                .collect()
        };
        // An unsupported load means the set is disconnected; the component term covers it.
        if support.is_empty() {
            continue;
        }
        let hull = convex_hull(support.iter().flat_map(rect_corners).collect());
        let com = center_of_mass(&load);
        for (dx, dy) in shifts {
            let margin = signed_margin(&hull, (com.0 + dx, com.1 + dy));
            margin_penalty += (-margin).max(0.0);
        }
    }

    let disconnected = (component_count(bricks) - 1) as f64;
    Ok(cfg.w_margin * margin_penalty + cfg.w_disconnect * disconnected)
}

fn center_of_mass(bricks: &[&Primitive]) -> Point {
    let n = bricks.len() as f64;
    let (sx, sy) = bricks.iter().fold((0.0, 0.0), |(sx, sy), b| {
        let (cx, cy, _) = b.center();
        (sx + cx, sy + cy)
    });
    (sx / n, sy / n)
}

fn rect_corners(r: &PlanRect) -> [Point; 4] {
    let (x0, y0) = (r.lo.0 as f64, r.lo.1 as f64);
    let (x1, y1) = (r.hi.0 as f64, r.hi.1 as f64);
    [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Counter-clockwise hull by the monotone chain method.
pub(crate) fn convex_hull(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * vx, a.1 + t * vy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Distance to the hull boundary, positive inside and negative outside.
pub(crate) fn signed_margin(hull: &[Point], p: Point) -> f64 {
    let n = hull.len();
    let edges = (0..n).map(|i| (hull[i], hull[(i + 1) % n]));
    let dist = edges
        .clone()
        .map(|(a, b)| segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min);
    let inside = n >= 3 && edges.into_iter().all(|(a, b)| cross(a, b, p) >= 0.0);
    if inside {
        dist
    } else {
        -dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{enumerate_attachments, Bounds, Combination, Direction};
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(a1: i32, a2: i32, z: i32, d: i64) -> Primitive {
        Primitive::new(a1, a2, z, Direction::from_index(d).unwrap()).unwrap()
    }

    fn penalty(bricks: &[Primitive]) -> f64 {
        stability_penalty(bricks, &StabilityConfig::default()).unwrap()
    }

    #[test]
    fn single_brick_and_stack_are_stable() {
        assert_eq!(penalty(&[p(0, 0, 0, 0)]), 0.0);
        let stack: Vec<_> = (0..5).map(|z| p(0, 0, z, 0)).collect();
        assert_eq!(penalty(&stack), 0.0);
    }

    #[test]
    fn staircase_is_unstable() {
        let stairs = [p(0, 0, 0, 0), p(3, 0, 1, 0), p(6, 0, 2, 0)];
        assert!(penalty(&stairs) > 0.0);
    }

    #[test]
    fn two_brick_overhang_values() {
        // Hand-computed against the unit-square hull of the contact cells.
        let values: Vec<f64> = (0..4)
            .map(|t| penalty(&[p(0, 0, 0, 0), p(t, 0, 1, 0)]))
            .collect();
        assert_eq!(values, vec![0.0, 0.0, 0.5, 4.0]);
    }

    #[test]
    fn disconnected_sets_pay_per_component() {
        let cfg = StabilityConfig::default();
        let v = stability_penalty(&[p(0, 0, 0, 0), p(10, 0, 0, 0)], &cfg).unwrap();
        assert_eq!(v, 1000.0);
        assert!(stability_penalty(&[], &cfg).is_err());
    }

    #[test]
    fn hull_and_margin() {
        let hull = convex_hull(vec![
            (0.0, 0.0),
            (4.0, 0.0),
            (4.0, 2.0),
            (0.0, 2.0),
            (2.0, 1.0),
        ]);
        assert_eq!(hull.len(), 4);
        assert_eq!(signed_margin(&hull, (2.0, 1.0)), 1.0);
        assert_eq!(signed_margin(&hull, (5.0, 1.0)), -1.0);
        assert!((signed_margin(&hull, (7.0, 6.0)) + 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_config() {
        let cfg = StabilityConfig {
            perturbation: -1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(StabilityConfig::default().validate().is_ok());
    }

    fn random_combination(seed: u64, n: usize) -> Combination {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = Combination::seeded(p(0, 0, 0, rng.gen_range(0..2)));
        for _ in 0..n {
            let all = enumerate_attachments(&c, &Bounds::unbounded()).unwrap();
            c.push(*all.choose(&mut rng).unwrap()).unwrap();
        }
        c
    }

    proptest! {
        #[test]
        fn penalty_is_nonnegative_and_translation_invariant(seed in 0u64..1000, d1 in -7i32..7, d2 in -7i32..7) {
            let c = random_combination(seed, 5);
            let base = penalty(c.bricks());
            prop_assert!(base >= 0.0);
            let moved: Vec<_> = c.bricks().iter().map(|b| b.translated(d1, d2, 0).unwrap()).collect();
            prop_assert!((penalty(&moved) - base).abs() < 1e-9);
        }

        #[test]
        fn penalty_ignores_order(seed in 0u64..1000) {
            let c = random_combination(seed, 5);
            let mut shuffled = c.bricks().to_vec();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed + 1));
            prop_assert!((penalty(&shuffled) - penalty(c.bricks())).abs() < 1e-9);
        }
    }
}
