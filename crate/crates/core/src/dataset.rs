//! Combinatorial 3D shape dataset: schema, generators, validation,
//! order augmentation and statistics.
//!
//! Classes come in three groups. Group A holds every two-brick connection
//! type. Group B holds parametric building blocks (bars, lines, plates,
//! walls, cuboids, square pyramids). Group C holds composite objects built
//! from those blocks.
//!
//! Instances are stored as JSON lines, `{"class": ..., "bricks": [[a1, a2, z, d], ...]}`,
//! where the brick order is an assembly sequence.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    connects, enumerate_attachments, overlaps, Bounds, Combination, Direction, Primitive,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeClass {
    Parallel,
    Perpendicular,
    Bar,
    Line,
    Plate,
    Wall,
    Cuboid,
    SquarePyramid,
    Bench,
    Sofa,
    Cup,
    Hollow,
    Table,
    Car,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 14] = [
        ShapeClass::Parallel,
        ShapeClass::Perpendicular,
        ShapeClass::Bar,
        ShapeClass::Line,
        ShapeClass::Plate,
        ShapeClass::Wall,
        ShapeClass::Cuboid,
        ShapeClass::SquarePyramid,
        ShapeClass::Bench,
        ShapeClass::Sofa,
        ShapeClass::Cup,
        ShapeClass::Hollow,
        ShapeClass::Table,
        ShapeClass::Car,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::Parallel => "parallel",
            ShapeClass::Perpendicular => "perpendicular",
            ShapeClass::Bar => "bar",
            ShapeClass::Line => "line",
            ShapeClass::Plate => "plate",
            ShapeClass::Wall => "wall",
            ShapeClass::Cuboid => "cuboid",
            ShapeClass::SquarePyramid => "square_pyramid",
            ShapeClass::Bench => "bench",
            ShapeClass::Sofa => "sofa",
            ShapeClass::Cup => "cup",
            ShapeClass::Hollow => "hollow",
            ShapeClass::Table => "table",
            ShapeClass::Car => "car",
        }
    }

    pub fn group(self) -> char {
        match self {
            ShapeClass::Parallel | ShapeClass::Perpendicular => 'a',
            ShapeClass::Bar
            | ShapeClass::Line
            | ShapeClass::Plate
            | ShapeClass::Wall
            | ShapeClass::Cuboid
            | ShapeClass::SquarePyramid => 'b',
            _ => 'c',
        }
    }
}

impl fmt::Display for ShapeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ShapeClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown shape class {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeInstance {
    #[serde(rename = "class")]
    pub class_label: ShapeClass,
    #[serde(rename = "bricks")]
    pub sequence: Vec<Primitive>,
}

impl ShapeInstance {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("instance serialization is infallible")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Empty,
    FirstNotGrounded,
    Overlap,
    NoContact,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::Empty => "empty sequence",
            ViolationKind::FirstNotGrounded => "first brick not on layer 0",
            ViolationKind::Overlap => "overlap",
            ViolationKind::NoContact => "no contact",
        })
    }
}

/// First offending brick of an invalid sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "index {}: {}", self.index, self.kind)
    }
}

/// Each brick must avoid every earlier brick and touch at least one; the first sits on layer 0.
pub fn validate_sequence(seq: &[Primitive]) -> std::result::Result<(), Violation> {
    let Some(first) = seq.first() else {
        return Err(Violation {
            index: 0,
            kind: ViolationKind::Empty,
        });
    };
    if first.z != 0 {
        return Err(Violation {
            index: 0,
            kind: ViolationKind::FirstNotGrounded,
        });
    }
    for (i, b) in seq.iter().enumerate().skip(1) {
        let earlier = &seq[..i];
        if earlier.iter().any(|e| overlaps(e, b)) {
            return Err(Violation {
                index: i,
                kind: ViolationKind::Overlap,
            });
        }
        if !earlier.iter().any(|e| connects(e, b)) {
            return Err(Violation {
                index: i,
                kind: ViolationKind::NoContact,
            });
        }
    }
    Ok(())
}

/// Orders a brick set into a valid assembly sequence: start from the smallest
/// brick on layer 0, then repeatedly add the smallest brick touching the placed ones.
pub fn assembly_order(bricks: &[Primitive]) -> Option<Vec<Primitive>> {
    let mut rest: Vec<Primitive> = bricks.to_vec();
    rest.sort();
    let start = rest.iter().position(|b| b.z == 0)?;
    let mut order = vec![rest.remove(start)];
    while !rest.is_empty() {
        let next = rest
            .iter()
            .position(|b| order.iter().any(|o| connects(o, b)))?;
        order.push(rest.remove(next));
    }
    validate_sequence(&order).ok()?;
    Some(order)
}

/// All 46 two-brick connection types with the lower brick at the origin.
pub fn generate_group_a() -> Vec<ShapeInstance> {
    let origin = Primitive {
        a1: 0,
        a2: 0,
        z: 0,
        dir: Direction::Lengthwise,
    };
    enumerate_attachments(&Combination::seeded(origin), &Bounds::unbounded())
        .expect("seed is non-empty")
        .into_iter()
        .map(|p| ShapeInstance {
            class_label: if p.dir == origin.dir {
                ShapeClass::Parallel
            } else {
                ShapeClass::Perpendicular
            },
            sequence: vec![origin, p],
        })
        .collect()
}

/// Parameters of the group-B generators. Sizes are in studs unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum GroupBParams {
    /// Vertical stack of `bricks` lengthwise bricks, alternately shifted by one stud.
    Bar { bricks: usize },
    /// Horizontal line: `bricks` bricks end to end, bridged by a second row.
    Line { bricks: usize },
    /// Two interlocked layers covering `width x depth`.
    Plate { width: i32, depth: i32 },
    /// Two-stud-thick running-bond wall.
    Wall { width: i32, layers: usize },
    /// Solid box with alternating brick directions per layer.
    Cuboid {
        width: i32,
        depth: i32,
        layers: usize,
    },
    /// Square levels of two layers each, shrinking by 2 studs per side per level.
    SquarePyramid { base: i32, levels: usize },
}

impl GroupBParams {
    pub fn class(&self) -> ShapeClass {
        match self {
            GroupBParams::Bar { .. } => ShapeClass::Bar,
            GroupBParams::Line { .. } => ShapeClass::Line,
            GroupBParams::Plate { .. } => ShapeClass::Plate,
            GroupBParams::Wall { .. } => ShapeClass::Wall,
            GroupBParams::Cuboid { .. } => ShapeClass::Cuboid,
            GroupBParams::SquarePyramid { .. } => ShapeClass::SquarePyramid,
        }
    }
}

fn brick(a1: i32, a2: i32, z: i32, dir: Direction) -> Primitive {
    Primitive { a1, a2, z, dir }
}

fn round_up4(v: i32) -> i32 {
    ((v.max(4) + 3) / 4) * 4
}

fn need_multiple_of_4(shape: &'static str, name: &str, v: i32) -> Result<()> {
    if v >= 4 && v % 4 == 0 {
        Ok(())
    } else {
        Err(Error::Untileable {
            shape,
            reason: format!("{name} = {v} must be a positive multiple of 4"),
            suggestion: format!("{name} = {}", round_up4(v)),
        })
    }
}

fn need_at_least(shape: &'static str, name: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::Untileable {
            shape,
            reason: format!("{name} = {v} is below the minimum {min}"),
            suggestion: format!("{name} = {min}"),
        })
    }
}

/// Bricks of one direction tiling `[x, x + w) x [y, y + d)` on layer `z`.
fn tile(x: i32, y: i32, w: i32, d: i32, z: i32, dir: Direction) -> Vec<Primitive> {
    let (l1, l2) = dir.size();
    let mut out = Vec::new();
    for i in (0..w).step_by(l1 as usize) {
        for j in (0..d).step_by(l2 as usize) {
            out.push(brick(x + i, y + j, z, dir));
        }
    }
    out
}

/// Two brick layers tiling `w x d` (multiples of 4) that interlock into one
/// connected piece. Both tilings come from a Hamiltonian cycle on the grid of
/// 2x2-stud super-cells: consecutive cycle edges alternate between layers.
fn interlocked_tilings(w: i32, d: i32) -> [Vec<(i32, i32, Direction)>; 2] {
    let (cols, rows) = (w / 2, d / 2);
    let mut cycle = Vec::with_capacity((cols * rows) as usize);
    for r in 0..rows {
        if r % 2 == 0 {
            cycle.extend((1..cols).map(|c| (c, r)));
        } else {
            cycle.extend((1..cols).rev().map(|c| (c, r)));
        }
    }
    cycle.extend((0..rows).rev().map(|r| (0, r)));
    let mut layers = [Vec::new(), Vec::new()];
    for (k, &a) in cycle.iter().enumerate() {
        let b = cycle[(k + 1) % cycle.len()];
        let dir = if a.1 == b.1 {
            Direction::Lengthwise
        } else {
            Direction::Breadthwise
        };
        layers[k % 2].push((2 * a.0.min(b.0), 2 * a.1.min(b.1), dir));
    }
    for layer in &mut layers {
        layer.sort_by_key(|&(a1, a2, dir)| (a1, a2, dir.index()));
    }
    layers
}

/// Solid block whose consecutive layers interlock.
fn block(x: i32, y: i32, w: i32, d: i32, z0: i32, layers: usize) -> Vec<Primitive> {
    let tilings = interlocked_tilings(w, d);
    (0..layers as i32)
        .flat_map(|k| {
            tilings[(k % 2) as usize]
                .iter()
                .map(move |&(i, j, dir)| brick(x + i, y + j, z0 + k, dir))
        })
        .collect()
}

/// Two-stud-thick square ring with interlocking corners.
fn ring(x: i32, y: i32, size: i32, z0: i32, layers: usize) -> Vec<Primitive> {
    let mut out = Vec::new();
    for k in 0..layers as i32 {
        let z = z0 + k;
        if k % 2 == 0 {
            out.extend(tile(x, y, size, 2, z, Direction::Lengthwise));
            out.extend(tile(x, y + size - 2, size, 2, z, Direction::Lengthwise));
            out.extend(tile(x, y + 2, 2, size - 4, z, Direction::Breadthwise));
            out.extend(tile(
                x + size - 2,
                y + 2,
                2,
                size - 4,
                z,
                Direction::Breadthwise,
            ));
        } else {
            out.extend(tile(x, y, 2, size, z, Direction::Breadthwise));
            out.extend(tile(x + size - 2, y, 2, size, z, Direction::Breadthwise));
            out.extend(tile(x + 2, y, size - 4, 2, z, Direction::Lengthwise));
            out.extend(tile(
                x + 2,
                y + size - 2,
                size - 4,
                2,
                z,
                Direction::Lengthwise,
            ));
        }
    }
    out
}

fn running_bond(x: i32, y: i32, width: i32, z0: i32, layers: usize) -> Vec<Primitive> {
    (0..layers as i32)
        .flat_map(|k| {
            if k % 2 == 0 {
                tile(x, y, width, 2, z0 + k, Direction::Lengthwise)
            } else {
                tile(x + 2, y, width - 4, 2, z0 + k, Direction::Lengthwise)
            }
        })
        .collect()
}

fn finish(class: ShapeClass, bricks: Vec<Primitive>) -> Result<ShapeInstance> {
    let sequence = assembly_order(&bricks).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "{class} bricks do not form a connected, non-overlapping set"
        ))
    })?;
    Ok(ShapeInstance {
        class_label: class,
        sequence,
    })
}

pub fn generate_group_b(params: &GroupBParams) -> Result<ShapeInstance> {
    let class = params.class();
    let bricks = match *params {
        GroupBParams::Bar { bricks } => {
            need_at_least("bar", "bricks", bricks, 1)?;
            (0..bricks as i32)
                .map(|k| brick(k % 2, 0, k, Direction::Lengthwise))
                .collect()
        }
        GroupBParams::Line { bricks } => {
            need_at_least("line", "bricks", bricks, 1)?;
            let n = bricks as i32;
            let mut out: Vec<_> = (0..n)
                .map(|i| brick(4 * i, 0, 0, Direction::Lengthwise))
                .collect();
            out.extend((0..n - 1).map(|i| brick(4 * i + 2, 0, 1, Direction::Lengthwise)));
            out
        }
        GroupBParams::Plate { width, depth } => {
            need_multiple_of_4("plate", "width", width)?;
            need_multiple_of_4("plate", "depth", depth)?;
            block(0, 0, width, depth, 0, 2)
        }
        GroupBParams::Wall { width, layers } => {
            need_multiple_of_4("wall", "width", width)?;
            need_at_least("wall", "layers", layers, 1)?;
            if width < 8 && layers > 1 {
                return Err(Error::Untileable {
                    shape: "wall",
                    reason: format!("width = {width} leaves no room for offset courses"),
                    suggestion: "width = 8".into(),
                });
            }
            running_bond(0, 0, width, 0, layers)
        }
        GroupBParams::Cuboid {
            width,
            depth,
            layers,
        } => {
            need_multiple_of_4("cuboid", "width", width)?;
            need_multiple_of_4("cuboid", "depth", depth)?;
            need_at_least("cuboid", "layers", layers, 2)?;
            block(0, 0, width, depth, 0, layers)
        }
        GroupBParams::SquarePyramid { base, levels } => {
            need_multiple_of_4("square_pyramid", "base", base)?;
            need_at_least("square_pyramid", "levels", levels, 1)?;
            let max_levels = (base / 4) as usize;
            if levels > max_levels {
                return Err(Error::Untileable {
                    shape: "square_pyramid",
                    reason: format!("{levels} levels shrink a {base}-stud base below 4 studs"),
                    suggestion: format!("levels = {max_levels} or base = {}", 4 * levels),
                });
            }
            (0..levels as i32)
                .flat_map(|l| block(2 * l, 2 * l, base - 4 * l, base - 4 * l, 2 * l, 2))
                .collect()
        }
    };
    finish(class, bricks)
}

/// Size knob for the composite group-C objects; `scale >= 1`.
pub fn generate_group_c(class: ShapeClass, scale: usize) -> Result<ShapeInstance> {
    need_at_least(class.name(), "scale", scale, 1)?;
    let s = scale as i32;
    let bricks = match class {
        ShapeClass::Table => {
            let (w, d, legs) = (8 + 4 * s, 8, 1 + s);
            let mut out = block(0, 0, w, d, legs, 2);
            for (x, y) in [(0, 0), (w - 4, 0), (0, d - 2), (w - 4, d - 2)] {
                out.extend((0..legs).map(|z| brick(x, y, z, Direction::Lengthwise)));
            }
            out
        }
        ShapeClass::Bench => {
            let (w, legs) = (8 + 8 * s, 2);
            let mut out = block(0, 0, w, 4, legs, 2);
            for x in [0, w - 4] {
                for z in 0..legs {
                    out.push(brick(x, 0, z, Direction::Lengthwise));
                    out.push(brick(x, 2, z, Direction::Lengthwise));
                }
            }
            out
        }
        ShapeClass::Sofa => {
            let w = 8 + 4 * s;
            let mut out = block(0, 0, w, 8, 0, 2);
            out.extend(running_bond(0, 6, w, 2, 1 + s as usize));
            out
        }
        ShapeClass::Cup => {
            let size = 4 + 4 * s;
            let mut out = block(0, 0, size, size, 0, 2);
            out.extend(ring(0, 0, size, 2, 1 + s as usize));
            out
        }
        ShapeClass::Hollow => ring(0, 0, 4 + 4 * s, 0, 2 + s as usize),
        ShapeClass::Car => {
            let w = 8 + 4 * s;
            let mut out = Vec::new();
            for (x, y) in [(0, 0), (w - 4, 0), (0, 6), (w - 4, 6)] {
                out.push(brick(x, y, 0, Direction::Lengthwise));
            }
            out.extend(block(0, 0, w, 8, 1, 2));
            out.extend(block(2 * s, 0, 4, 8, 3, 2));
            out
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "{other} is not a group C class"
            )));
        }
    };
    finish(class, bricks)
}

/// Group A plus a small parametric sweep of groups B and C.
pub fn generate_collection(group: char) -> Result<Vec<ShapeInstance>> {
    let mut out = Vec::new();
    if group == 'a' || group == '*' {
        out.extend(generate_group_a());
    }
    if group == 'b' || group == '*' {
        for n in 1..=5 {
            out.push(generate_group_b(&GroupBParams::Bar { bricks: 2 * n })?);
            out.push(generate_group_b(&GroupBParams::Line { bricks: n + 1 })?);
            out.push(generate_group_b(&GroupBParams::Wall {
                width: 4 + 4 * n as i32,
                layers: 1 + n,
            })?);
        }
        for (w, d) in [(4, 4), (8, 4), (8, 8), (12, 8)] {
            out.push(generate_group_b(&GroupBParams::Plate {
                width: w,
                depth: d,
            })?);
            out.push(generate_group_b(&GroupBParams::Cuboid {
                width: w,
                depth: d,
                layers: 3,
            })?);
        }
        for (base, levels) in [(4, 1), (8, 2), (12, 3)] {
            out.push(generate_group_b(&GroupBParams::SquarePyramid {
                base,
                levels,
            })?);
        }
    }
    if group == 'c' || group == '*' {
        for class in ShapeClass::ALL.into_iter().filter(|c| c.group() == 'c') {
            for scale in 1..=3 {
                out.push(generate_group_c(class, scale)?);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "unknown group {group:?}; expected a, b, c or all"
        )));
    }
    Ok(out)
}

/// Random valid assembly orders of the same brick set. Each order is drawn by
/// repeatedly picking a uniformly random remaining brick that keeps the prefix valid.
pub fn augment(instance: &ShapeInstance, seed: u64, count: usize) -> Vec<Vec<Primitive>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut rest = instance.sequence.clone();
            let mut order: Vec<Primitive> = Vec::with_capacity(rest.len());
            while !rest.is_empty() {
                let options: Vec<usize> = (0..rest.len())
                    .filter(|&i| {
                        if order.is_empty() {
                            rest[i].z == 0
                        } else {
                            order.iter().any(|o| connects(o, &rest[i]))
                        }
                    })
                    .collect();
                let &pick = options
                    .choose(&mut rng)
                    .expect("connected set always has a next brick");
                order.push(rest.swap_remove(pick));
            }
            order
        })
        .collect()
}

/// Every valid assembly order of a brick set (exponential; small sets only).
pub fn valid_orders(bricks: &[Primitive]) -> Vec<Vec<Primitive>> {
    fn rec(
        bricks: &[Primitive],
        used: &mut Vec<bool>,
        order: &mut Vec<Primitive>,
        out: &mut Vec<Vec<Primitive>>,
    ) {
        if order.len() == bricks.len() {
            out.push(order.clone());
            return;
        }
        for i in 0..bricks.len() {
            if used[i] {
                continue;
            }
            let ok = if order.is_empty() {
                bricks[i].z == 0
            } else {
                order.iter().any(|o| connects(o, &bricks[i]))
            };
            if ok {
                used[i] = true;
                order.push(bricks[i]);
                rec(bricks, used, order, out);
                order.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(
        bricks,
        &mut vec![false; bricks.len()],
        &mut Vec::new(),
        &mut out,
    );
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStats {
    pub class: ShapeClass,
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Per-class instance count and brick-count mean / population std, in class order.
pub fn stats(collection: &[ShapeInstance]) -> Vec<ClassStats> {
    let mut groups: BTreeMap<ShapeClass, Vec<f64>> = BTreeMap::new();
    for inst in collection {
        groups
            .entry(inst.class_label)
            .or_default()
            .push(inst.sequence.len() as f64);
    }
    groups
        .into_iter()
        .map(|(class, sizes)| {
            let n = sizes.len() as f64;
            let mean = sizes.iter().sum::<f64>() / n;
            let std = (sizes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
            ClassStats {
                class,
                count: sizes.len(),
                mean,
                std,
            }
        })
        .collect()
}

/// `class,count,mean,std`.
pub fn stats_to_csv(stats: &[ClassStats]) -> String {
    let mut out = String::from("class,count,mean,std\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{:?},{:?}\n",
            s.class, s.count, s.mean, s.std
        ));
    }
    out
}

/// Parses JSON lines, skipping blank lines. Errors carry the 1-based line number.
pub fn read_jsonl(text: &str) -> Vec<(usize, Result<ShapeInstance>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, ShapeInstance::from_json_line(l)))
        .collect()
}

pub fn write_jsonl(instances: &[ShapeInstance]) -> String {
    instances.iter().map(|i| i.to_json_line() + "\n").collect()
}

/// Brick sets are equal ignoring order.
pub fn same_brick_set(a: &[Primitive], b: &[Primitive]) -> bool {
    a.len() == b.len() && a.iter().collect::<HashSet<_>>() == b.iter().collect::<HashSet<_>>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a1: i32, a2: i32, z: i32, d: i64) -> Primitive {
        Primitive::new(a1, a2, z, Direction::from_index(d).unwrap()).unwrap()
    }

    #[test]
    fn validation_examples() {
        assert!(validate_sequence(&[p(0, 0, 0, 0), p(0, 0, 1, 0)]).is_ok());
        assert_eq!(
            validate_sequence(&[p(0, 0, 0, 0), p(10, 10, 1, 0)]),
            Err(Violation {
                index: 1,
                kind: ViolationKind::NoContact
            })
        );
        assert_eq!(
            validate_sequence(&[p(0, 0, 0, 0), p(0, 0, 0, 1)]),
            Err(Violation {
                index: 1,
                kind: ViolationKind::Overlap
            })
        );
        assert_eq!(
            validate_sequence(&[]).unwrap_err().kind,
            ViolationKind::Empty
        );
        assert_eq!(
            validate_sequence(&[p(0, 0, 1, 0)]).unwrap_err().kind,
            ViolationKind::FirstNotGrounded
        );
        assert_eq!(
            Violation {
                index: 1,
                kind: ViolationKind::NoContact
            }
            .to_string(),
            "index 1: no contact"
        );
    }

    #[test]
    fn group_a() {
        let a = generate_group_a();
        assert_eq!(a.len(), 46);
        assert_eq!(
            a.iter()
                .filter(|i| i.class_label == ShapeClass::Parallel)
                .count(),
            21
        );
        assert_eq!(
            a.iter()
                .filter(|i| i.class_label == ShapeClass::Perpendicular)
                .count(),
            25
        );
        assert_eq!(a, generate_group_a());
        assert!(a.iter().all(|i| validate_sequence(&i.sequence).is_ok()));
    }

    #[test]
    fn bar_of_three() {
        let bar = generate_group_b(&GroupBParams::Bar { bricks: 3 }).unwrap();
        assert_eq!(bar.sequence.len(), 3);
        assert!(bar.sequence.iter().all(|b| b.dir == Direction::Lengthwise));
        assert_eq!(crate::occupiability::height(&bar.sequence).unwrap(), 3);
        assert!(validate_sequence(&bar.sequence).is_ok());
    }

    #[test]
    fn cuboid_fills_its_box() {
        let c = generate_group_b(&GroupBParams::Cuboid {
            width: 8,
            depth: 8,
            layers: 2,
        })
        .unwrap();
        assert_eq!(c.sequence.len(), 16);
        let cells: HashSet<_> = c.sequence.iter().flat_map(|b| b.footprint()).collect();
        let expected: HashSet<_> = (0..8)
            .flat_map(|i| (0..8).flat_map(move |j| (0..2).map(move |k| (i, j, k))))
            .collect();
        assert_eq!(cells, expected);
    }

    #[test]
    fn pyramid_levels_shrink() {
        let pyr = generate_group_b(&GroupBParams::SquarePyramid { base: 8, levels: 2 }).unwrap();
        assert!(validate_sequence(&pyr.sequence).is_ok());
        let cells: HashSet<_> = pyr.sequence.iter().flat_map(|b| b.footprint()).collect();
        let level0 = cells.iter().filter(|c| c.2 == 0).count();
        let level1 = cells.iter().filter(|c| c.2 == 2).count();
        assert_eq!((level0, level1), (64, 16));
        assert!(cells
            .iter()
            .filter(|c| c.2 >= 2)
            .all(|c| (2..6).contains(&c.0) && (2..6).contains(&c.1)));
    }

    #[test]
    fn untileable_params_suggest_a_fix() {
        let err = generate_group_b(&GroupBParams::Cuboid {
            width: 6,
            depth: 8,
            layers: 2,
        })
        .unwrap_err();
        assert!(err.to_string().contains("width = 8"), "{err}");
        assert!(generate_group_b(&GroupBParams::SquarePyramid { base: 8, levels: 3 }).is_err());
        assert!(generate_group_b(&GroupBParams::Bar { bricks: 0 }).is_err());
    }

    #[test]
    fn every_generated_instance_validates() {
        let all = generate_collection('*').unwrap();
        for inst in &all {
            assert!(validate_sequence(&inst.sequence).is_ok(), "{inst:?}");
        }
        let classes: HashSet<_> = all.iter().map(|i| i.class_label).collect();
        assert_eq!(classes.len(), 14);
        assert!(generate_collection('x').is_err());
    }

    #[test]
    fn stats_examples() {
        let s = stats(&generate_group_a());
        assert_eq!(s.len(), 2);
        assert_eq!(
            (s[0].class, s[0].count, s[0].mean, s[0].std),
            (ShapeClass::Parallel, 21, 2.0, 0.0)
        );
        assert_eq!(
            (s[1].class, s[1].count, s[1].mean, s[1].std),
            (ShapeClass::Perpendicular, 25, 2.0, 0.0)
        );

        let ten = generate_group_b(&GroupBParams::Bar { bricks: 10 }).unwrap();
        let twenty = generate_group_b(&GroupBParams::Bar { bricks: 20 }).unwrap();
        let one = stats(std::slice::from_ref(&ten));
        assert_eq!((one[0].count, one[0].mean, one[0].std), (1, 10.0, 0.0));
        let two = stats(&[ten, twenty]);
        assert_eq!((two[0].mean, two[0].std), (15.0, 5.0));
        assert_eq!(
            stats_to_csv(&s),
            "class,count,mean,std\nparallel,21,2.0,0.0\nperpendicular,25,2.0,0.0\n"
        );
    }

    #[test]
    fn stack_has_one_order() {
        let inst = ShapeInstance {
            class_label: ShapeClass::Parallel,
            sequence: vec![p(0, 0, 0, 0), p(0, 0, 1, 0)],
        };
        let orders: HashSet<_> = augment(&inst, 5, 20).into_iter().collect();
        assert_eq!(orders.len(), 1);
    }

    #[test]
    fn augmented_orders_stay_valid() {
        let bar = generate_group_b(&GroupBParams::Bar { bricks: 3 }).unwrap();
        for order in augment(&bar, 11, 30) {
            assert!(validate_sequence(&order).is_ok());
            assert!(same_brick_set(&order, &bar.sequence));
        }
    }

    #[test]
    fn l_shape_orders_match_permutation_brute_force() {
        // Two bricks side by side on the ground, bridged by one above.
        let bricks = [p(0, 0, 0, 0), p(4, 0, 0, 0), p(3, 0, 1, 1)];
        let mut brute = HashSet::new();
        for perm in [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ] {
            let seq: Vec<_> = perm.iter().map(|&i| bricks[i]).collect();
            if validate_sequence(&seq).is_ok() {
                brute.insert(seq);
            }
        }
        let listed: HashSet<_> = valid_orders(&bricks).into_iter().collect();
        assert_eq!(listed, brute);
        assert_eq!(brute.len(), 2);
        let inst = ShapeInstance {
            class_label: ShapeClass::Line,
            sequence: bricks.to_vec(),
        };
        let sampled: HashSet<_> = augment(&inst, 3, 200).into_iter().collect();
        assert_eq!(sampled, brute);
    }

    #[test]
    fn jsonl_round_trip() {
        let a = generate_group_a();
        let text = write_jsonl(&a);
        assert_eq!(text.lines().count(), 46);
        let back: Vec<_> = read_jsonl(&text)
            .into_iter()
            .map(|(_, r)| r.unwrap())
            .collect();
        assert_eq!(back, a);
        assert!(ShapeInstance::from_json_line(r#"{"class":"blob","bricks":[]}"#).is_err());
        assert!(text.starts_with(r#"{"class":"parallel","bricks":[[0,0,0,0],"#));
    }
}
