//! Discrete geometry of 2x4 primitives.
//!
//! A brick is stored by the integer coordinates of its minimum corner (the
//! *anchor*), its layer `z` and a direction. The lengthwise direction covers
//! 4 x 2 studs, the breadthwise direction 2 x 4 studs; every brick is exactly
//! one layer tall. The center convention used by the surrogate model is
//! `center = anchor + length / 2` on the two plan axes, see [`Primitive::center`].
//!
//! Two bricks *connect* when they sit on adjacent layers and their plan-view
//! footprints share at least one stud cell. Bricks on the same layer never
//! connect, and no two bricks may share a cell.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A lattice cell `(i, j, k)`: two plan axes in stud units and a layer index.
pub type Cell = (i32, i32, i32);

/// Number of lattice cells covered by one brick.
pub const CELLS_PER_BRICK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// 4 studs along the first axis, 2 along the second.
    Lengthwise,
    /// 2 studs along the first axis, 4 along the second.
    Breadthwise,
}

impl Direction {
    pub const ALL: [Direction; 2] = [Direction::Lengthwise, Direction::Breadthwise];

    pub fn from_index(d: i64) -> Result<Self> {
        match d {
            0 => Ok(Direction::Lengthwise),
            1 => Ok(Direction::Breadthwise),
            other => Err(Error::InvalidPrimitive(format!(
                "direction must be 0 or 1, got {other}"
            ))),
        }
    }

    pub fn index(self) -> i32 {
        match self {
            Direction::Lengthwise => 0,
            Direction::Breadthwise => 1,
        }
    }

    /// Plan-view size `(L1, L2)` in studs.
    pub fn size(self) -> (i32, i32) {
        match self {
            Direction::Lengthwise => (4, 2),
            Direction::Breadthwise => (2, 4),
        }
    }
}

/// One placed 2x4 brick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Primitive {
    pub a1: i32,
    pub a2: i32,
    pub z: i32,
    pub dir: Direction,
}

impl Primitive {
    pub fn new(a1: i32, a2: i32, z: i32, dir: Direction) -> Result<Self> {
        if z < 0 {
            return Err(Error::InvalidPrimitive(format!(
                "layer must be >= 0, got {z}"
            )));
        }
        Ok(Primitive { a1, a2, z, dir })
    }

    /// Builds a brick from the `[a1, a2, z, d]` tuple used by every file format.
    pub fn from_tuple(t: [i64; 4]) -> Result<Self> {
        let conv = |v: i64| {
            i32::try_from(v)
                .map_err(|_| Error::InvalidPrimitive(format!("coordinate {v} out of range")))
        };
        Primitive::new(
            conv(t[0])?,
            conv(t[1])?,
            conv(t[2])?,
            Direction::from_index(t[3])?,
        )
    }

    pub fn to_tuple(self) -> [i64; 4] {
        [
            self.a1 as i64,
            self.a2 as i64,
            self.z as i64,
            self.dir.index() as i64,
        ]
    }

    /// Builds a brick from its plan-view center `(x1, x2)`, bottom layer and direction.
    /// The center must land on the lattice (integer for both plan axes).
    pub fn from_center(x1: f64, x2: f64, x3: f64, d: i64) -> Result<Self> {
        let dir = Direction::from_index(d)?;
        let (l1, l2) = dir.size();
        let a1 = x1 - l1 as f64 / 2.0;
        let a2 = x2 - l2 as f64 / 2.0;
        for v in [a1, a2, x3] {
            if v.fract() != 0.0 || !v.is_finite() {
                return Err(Error::InvalidPrimitive(format!(
                    "center ({x1}, {x2}, {x3}) is not on the stud lattice"
                )));
            }
        }
        Primitive::new(a1 as i32, a2 as i32, x3 as i32, dir)
    }

    /// Plan-view center and bottom layer, `(x1, x2, x3)`.
    pub fn center(&self) -> (f64, f64, f64) {
        let (l1, l2) = self.dir.size();
        (
            self.a1 as f64 + l1 as f64 / 2.0,
            self.a2 as f64 + l2 as f64 / 2.0,
            self.z as f64,
        )
    }

    pub fn size(&self) -> (i32, i32) {
        self.dir.size()
    }

    /// Half-open plan rectangle `[a1, a1 + L1) x [a2, a2 + L2)`.
    pub fn plan_rect(&self) -> PlanRect {
        let (l1, l2) = self.size();
        PlanRect {
            lo: (self.a1, self.a2),
            hi: (self.a1 + l1, self.a2 + l2),
        }
    }

    /// The 8 cells covered by this brick, ordered by first axis then second.
    pub fn footprint(&self) -> impl Iterator<Item = Cell> + '_ {
        let (l1, l2) = self.size();
        (0..l1).flat_map(move |i| (0..l2).map(move |j| (self.a1 + i, self.a2 + j, self.z)))
    }

    /// Shifts the brick in plan view and by whole layers.
    pub fn translated(&self, d1: i32, d2: i32, dz: i32) -> Result<Self> {
        Primitive::new(self.a1 + d1, self.a2 + d2, self.z + dz, self.dir)
    }

    fn sort_key(&self) -> (i32, i32, i32, i32) {
        (self.z, self.a1, self.a2, self.dir.index())
    }
}

/// Lexicographic on `(z, a1, a2, d)`.
impl Ord for Primitive {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Primitive {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}, {}, {}]",
            self.a1,
            self.a2,
            self.z,
            self.dir.index()
        )
    }
}

impl Serialize for Primitive {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_tuple().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Primitive {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let t = <[i64; 4]>::deserialize(d)?;
        Primitive::from_tuple(t).map_err(serde::de::Error::custom)
    }
}

/// Half-open axis-aligned rectangle in plan view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanRect {
    pub lo: (i32, i32),
    pub hi: (i32, i32),
}

impl PlanRect {
    pub fn intersect(&self, other: &PlanRect) -> Option<PlanRect> {
        let lo = (self.lo.0.max(other.lo.0), self.lo.1.max(other.lo.1));
        let hi = (self.hi.0.min(other.hi.0), self.hi.1.min(other.hi.1));
        (lo.0 < hi.0 && lo.1 < hi.1).then_some(PlanRect { lo, hi })
    }

    pub fn area(&self) -> i32 {
        (self.hi.0 - self.lo.0) * (self.hi.1 - self.lo.1)
    }

    pub fn cells(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        (self.lo.0..self.hi.0).flat_map(move |i| (self.lo.1..self.hi.1).map(move |j| (i, j)))
    }
}

/// Number of stud cells shared in plan view, regardless of layers.
pub fn plan_overlap(p: &Primitive, q: &Primitive) -> i32 {
    p.plan_rect()
        .intersect(&q.plan_rect())
        .map_or(0, |r| r.area())
}

/// True when the bricks sit on adjacent layers and share at least one stud in plan view.
pub fn connects(p: &Primitive, q: &Primitive) -> bool {
    (p.z - q.z).abs() == 1 && plan_overlap(p, q) > 0
}

/// True when the bricks share at least one lattice cell.
pub fn overlaps(p: &Primitive, q: &Primitive) -> bool {
    p.z == q.z && plan_overlap(p, q) > 0
}

/// Half-open box of admissible cells. Layers below zero are never admissible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: [i32; 3],
    pub hi: [i32; 3],
}

impl Bounds {
    /// `[0, m1) x [0, m2) x [0, m3)`.
    pub fn extents(m1: i32, m2: i32, m3: i32) -> Result<Self> {
        if m1 <= 0 || m2 <= 0 || m3 <= 0 {
            return Err(Error::InvalidConfig(format!(
                "extents must be positive, got ({m1}, {m2}, {m3})"
            )));
        }
        Ok(Bounds {
            lo: [0, 0, 0],
            hi: [m1, m2, m3],
        })
    }

    /// Plan axes and height effectively unbounded.
    pub fn unbounded() -> Self {
        const BIG: i32 = 1 << 24;
        Bounds {
            lo: [-BIG, -BIG, 0],
            hi: [BIG, BIG, BIG],
        }
    }

    pub fn contains_cell(&self, (i, j, k): Cell) -> bool {
        (self.lo[0]..self.hi[0]).contains(&i)
            && (self.lo[1]..self.hi[1]).contains(&j)
            && (self.lo[2]..self.hi[2]).contains(&k)
    }

    pub fn contains(&self, p: &Primitive) -> bool {
        let (l1, l2) = p.size();
        p.a1 >= self.lo[0]
            && p.a1 + l1 <= self.hi[0]
            && p.a2 >= self.lo[1]
            && p.a2 + l2 <= self.hi[1]
            && p.z >= self.lo[2].max(0)
            && p.z < self.hi[2]
    }
}

/// An ordered, non-overlapping, connected sequence of bricks.
///
/// Every brick after the first connects to at least one earlier brick, so
/// the structure is always a single connected component.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Combination {
    bricks: Vec<Primitive>,
    cells: HashSet<Cell>,
}

impl Combination {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn seeded(seed: Primitive) -> Self {
        let mut c = Self::new();
        c.bricks.push(seed);
        c.cells.extend(seed.footprint());
        c
    }

    /// Validates and builds a combination from an assembly sequence.
    pub fn from_bricks<I: IntoIterator<Item = Primitive>>(bricks: I) -> Result<Self> {
        let mut c = Self::new();
        for b in bricks {
            c.push(b)?;
        }
        Ok(c)
    }

    /// Appends a brick after checking overlap and connection.
    pub fn push(&mut self, p: Primitive) -> Result<()> {
        let index = self.bricks.len();
        if p.footprint().any(|cell| self.cells.contains(&cell)) {
            return Err(Error::Overlap { index, brick: p });
        }
        if !self.bricks.is_empty() && !self.bricks.iter().any(|b| connects(b, &p)) {
            return Err(Error::Disconnected { index, brick: p });
        }
        self.cells.extend(p.footprint());
        self.bricks.push(p);
        Ok(())
    }

    /// Removes and returns the most recently placed brick.
    pub fn pop(&mut self) -> Option<Primitive> {
        let p = self.bricks.pop()?;
        for cell in p.footprint() {
            self.cells.remove(&cell);
        }
        Some(p)
    }

    pub fn bricks(&self) -> &[Primitive] {
        &self.bricks
    }

    pub fn len(&self) -> usize {
        self.bricks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bricks.is_empty()
    }

    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.cells.contains(&cell)
    }

    pub fn cells(&self) -> &HashSet<Cell> {
        &self.cells
    }

    /// True when `p` fits without overlap and touches the structure.
    pub fn can_attach(&self, p: &Primitive) -> bool {
        !p.footprint().any(|cell| self.cells.contains(&cell))
            && self.bricks.iter().any(|b| connects(b, p))
    }

    /// Copy of this combination with `p` appended, without validation.
    pub(crate) fn with_unchecked(&self, p: Primitive) -> Combination {
        let mut c = self.clone();
        c.cells.extend(p.footprint());
        c.bricks.push(p);
        c
    }
}

/// Every placement inside `bounds` that attaches to `c` without overlap,
/// sorted lexicographically on `(z, a1, a2, d)`.
pub fn enumerate_attachments(c: &Combination, bounds: &Bounds) -> Result<Vec<Primitive>> {
    if c.is_empty() {
        return Err(Error::NoStructure);
    }
    let mut found = BTreeSet::new();
    for b in c.bricks() {
        let (b1, b2) = b.size();
        for z in [b.z - 1, b.z + 1] {
            if z < 0 {
                continue;
            }
            for dir in Direction::ALL {
                let (l1, l2) = dir.size();
                for a1 in (b.a1 - l1 + 1)..(b.a1 + b1) {
                    for a2 in (b.a2 - l2 + 1)..(b.a2 + b2) {
                        let p = Primitive { a1, a2, z, dir };
                        if bounds.contains(&p) && !p.footprint().any(|cell| c.is_occupied(cell)) {
                            found.insert(p);
                        }
                    }
                }
            }
        }
    }
    Ok(found.into_iter().collect())
}

/// Uniform sample without replacement of `min(count, |feasible|)` attachments.
pub fn sample_attachments(
    c: &Combination,
    bounds: &Bounds,
    count: usize,
    seed: u64,
) -> Result<Vec<Primitive>> {
    let feasible = enumerate_attachments(c, bounds)?;
    if feasible.is_empty() {
        return Err(Error::Saturated);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_from(&feasible, count, &mut rng))
}

/// Uniform sample without replacement, in draw order.
pub fn sample_from<R: rand::Rng + ?Sized>(
    pool: &[Primitive],
    count: usize,
    rng: &mut R,
) -> Vec<Primitive> {
    pool.choose_multiple(rng, count.min(pool.len()))
        .copied()
        .collect()
}

/// Number of connected components of the connection graph over `bricks`.
pub fn component_count(bricks: &[Primitive]) -> usize {
    let mut seen = vec![false; bricks.len()];
    let mut components = 0;
    for start in 0..bricks.len() {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in 0..bricks.len() {
                if !seen[j] && connects(&bricks[i], &bricks[j]) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(a1: i32, a2: i32, z: i32, d: i64) -> Primitive {
        Primitive::new(a1, a2, z, Direction::from_index(d).unwrap()).unwrap()
    }

    #[test]
    fn footprint_cells() {
        let cells: BTreeSet<Cell> = p(0, 0, 0, 0).footprint().collect();
        let expected: BTreeSet<Cell> = (0..4)
            .flat_map(|i| (0..2).map(move |j| (i, j, 0)))
            .collect();
        assert_eq!(cells, expected);

        let cells: BTreeSet<Cell> = p(0, 0, 0, 1).footprint().collect();
        let expected: BTreeSet<Cell> = (0..2)
            .flat_map(|i| (0..4).map(move |j| (i, j, 0)))
            .collect();
        assert_eq!(cells, expected);

        let cells: BTreeSet<Cell> = p(2, 5, 3, 0).footprint().collect();
        let expected: BTreeSet<Cell> = (2..6)
            .flat_map(|i| (5..7).map(move |j| (i, j, 3)))
            .collect();
        assert_eq!(cells, expected);
    }

    #[test]
    fn connection_examples() {
        assert!(connects(&p(0, 0, 0, 0), &p(0, 0, 1, 0)));
        assert!(!connects(&p(0, 0, 0, 0), &p(4, 0, 1, 0)));
        assert!(connects(&p(0, 0, 0, 0), &p(3, 1, 1, 0)));
        assert_eq!(plan_overlap(&p(0, 0, 0, 0), &p(3, 1, 1, 0)), 1);
        // same layer never connects
        assert!(!connects(&p(0, 0, 0, 0), &p(4, 0, 0, 0)));
    }

    #[test]
    fn overlap_examples() {
        assert!(overlaps(&p(0, 0, 0, 0), &p(0, 0, 0, 0)));
        assert!(!overlaps(&p(0, 0, 0, 0), &p(0, 0, 1, 0)));
        assert!(overlaps(&p(0, 0, 0, 0), &p(3, 0, 0, 1)));
        assert_eq!(plan_overlap(&p(0, 0, 0, 0), &p(3, 0, 0, 1)), 2);
    }

    #[test]
    fn rejects_negative_layer_and_bad_direction() {
        assert!(Primitive::new(0, 0, -1, Direction::Lengthwise).is_err());
        assert!(Direction::from_index(2).is_err());
        assert!(Primitive::from_tuple([0, 0, 0, 7]).is_err());
    }

    #[test]
    fn center_round_trip() {
        let b = p(3, 1, 2, 0);
        assert_eq!(b.center(), (5.0, 2.0, 2.0));
        assert_eq!(Primitive::from_center(5.0, 2.0, 2.0, 0).unwrap(), b);
        assert!(Primitive::from_center(5.5, 2.0, 2.0, 0).is_err());
    }

    #[test]
    fn single_brick_has_46_attachments() {
        let c = Combination::seeded(p(0, 0, 0, 0));
        let all = enumerate_attachments(&c, &Bounds::unbounded()).unwrap();
        assert_eq!(all.len(), 46);
        let parallel = all
            .iter()
            .filter(|b| b.dir == Direction::Lengthwise)
            .count();
        assert_eq!((parallel, all.len() - parallel), (21, 25));
        assert!(all.iter().all(|b| b.z == 1));
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn raised_brick_attaches_above_and_below() {
        let c = Combination::seeded(p(0, 0, 3, 0));
        let all = enumerate_attachments(&c, &Bounds::unbounded()).unwrap();
        assert_eq!(all.len(), 92);
    }

    #[test]
    fn bounds_clip_attachments() {
        let c = Combination::seeded(p(0, 0, 0, 0));
        let bounds = Bounds::extents(4, 8, 4).unwrap();
        let all = enumerate_attachments(&c, &Bounds::unbounded()).unwrap();
        let clipped = enumerate_attachments(&c, &bounds).unwrap();
        let expected: Vec<_> = all.iter().copied().filter(|b| bounds.contains(b)).collect();
        assert_eq!(clipped, expected);
        assert!(clipped.len() < 46 && !clipped.is_empty());
    }

    #[test]
    fn empty_combination_has_no_attachments() {
        assert!(matches!(
            enumerate_attachments(&Combination::new(), &Bounds::unbounded()),
            Err(Error::NoStructure)
        ));
    }

    #[test]
    fn sampling_is_reproducible_and_clamped() {
        let c = Combination::seeded(p(0, 0, 0, 0));
        let b = Bounds::unbounded();
        let all = enumerate_attachments(&c, &b).unwrap();
        let s1 = sample_attachments(&c, &b, 10, 42).unwrap();
        let s2 = sample_attachments(&c, &b, 10, 42).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.iter().collect::<HashSet<_>>().len(), 10);
        let other = sample_attachments(&c, &b, 10, 43).unwrap();
        assert!(other.iter().all(|x| all.contains(x)));
        let mut everything = sample_attachments(&c, &b, 100, 1).unwrap();
        everything.sort();
        assert_eq!(everything, all);
    }

    #[test]
    fn combination_push_validates() {
        let mut c = Combination::seeded(p(0, 0, 0, 0));
        assert!(matches!(
            c.push(p(10, 10, 1, 0)),
            Err(Error::Disconnected { index: 1, .. })
        ));
        assert!(matches!(
            c.push(p(0, 0, 0, 1)),
            Err(Error::Overlap { index: 1, .. })
        ));
        c.push(p(2, 0, 1, 1)).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.cells().len(), 16);
        assert_eq!(c.pop(), Some(p(2, 0, 1, 1)));
        assert_eq!(c.cells().len(), 8);
    }

    fn arb_primitive() -> impl Strategy<Value = Primitive> {
        (-6..6i32, -6..6i32, 0..4i32, 0..2i64).prop_map(|(a1, a2, z, d)| p(a1, a2, z, d))
    }

    proptest! {
        #[test]
        fn footprint_has_eight_cells(b in arb_primitive()) {
            prop_assert_eq!(b.footprint().collect::<HashSet<_>>().len(), CELLS_PER_BRICK);
        }

        #[test]
        fn relations_are_symmetric(a in arb_primitive(), b in arb_primitive()) {
            prop_assert_eq!(connects(&a, &b), connects(&b, &a));
            prop_assert_eq!(overlaps(&a, &b), overlaps(&b, &a));
            let shared = a.footprint().filter(|c| b.footprint().any(|d| d == *c)).count();
            prop_assert_eq!(overlaps(&a, &b), shared > 0);
        }

        #[test]
        fn attachments_revalidate(seq in proptest::collection::vec((0..5usize, 0..200usize), 1..6)) {
            let mut c = Combination::seeded(p(0, 0, 1, 0));
            for (_, pick) in seq {
                let all = enumerate_attachments(&c, &Bounds::unbounded()).unwrap();
                let unique: HashSet<_> = all.iter().collect();
                prop_assert_eq!(unique.len(), all.len());
                for cand in &all {
                    prop_assert!(c.bricks().iter().all(|b| !overlaps(b, cand)));
                    prop_assert!(c.bricks().iter().any(|b| connects(b, cand)));
                }
                c.push(all[pick % all.len()]).unwrap();
            }
        }
    }
}
