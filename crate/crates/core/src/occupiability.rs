//! Target shapes, the occupiability field, and shape-side evaluation functions.
//!
//! A cell is *occupied* when some brick covers it, and *occupiable* when it
//! belongs to the target and is not yet occupied. The occupiability score of
//! a candidate brick counts its occupiable cells, so it ranges over `0..=8`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{connects, plan_overlap, Bounds, Cell, Combination, Primitive};

/// Desired voxel set inside a `[0, m1) x [0, m2) x [0, m3)` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetShape {
    extents: [i32; 3],
    cells: BTreeSet<Cell>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetFile {
    extents: [i32; 3],
    cells: Vec<[i32; 3]>,
}

impl TargetShape {
    pub fn new<I: IntoIterator<Item = Cell>>(extents: [i32; 3], cells: I) -> Result<Self> {
        let bounds = Bounds::extents(extents[0], extents[1], extents[2])
            .map_err(|e| Error::InvalidTarget(e.to_string()))?;
        let cells: BTreeSet<Cell> = cells.into_iter().collect();
        if cells.is_empty() {
            return Err(Error::InvalidTarget("target has no cells".into()));
        }
        if let Some(&cell) = cells.iter().find(|c| !bounds.contains_cell(**c)) {
            return Err(Error::OutOfExtents { cell, extents });
        }
        Ok(TargetShape { extents, cells })
    }

    /// Solid box of `size` cells starting at `origin`.
    pub fn cuboid(origin: Cell, size: [i32; 3], extents: [i32; 3]) -> Result<Self> {
        let cells = (0..size[0]).flat_map(|i| {
            (0..size[1]).flat_map(move |j| {
                (0..size[2]).map(move |k| (origin.0 + i, origin.1 + j, origin.2 + k))
            })
        });
        TargetShape::new(extents, cells)
    }

    /// Voxelizes a brick set. Without explicit extents the grid is the
    /// tightest box from the origin that holds every brick.
    pub fn from_bricks(bricks: &[Primitive], extents: Option<[i32; 3]>) -> Result<Self> {
        let cells: Vec<Cell> = bricks.iter().flat_map(|b| b.footprint()).collect();
        if let Some(&cell) = cells.iter().find(|c| c.0 < 0 || c.1 < 0) {
            return Err(Error::InvalidTarget(format!(
                "cell {cell:?} has a negative coordinate; translate the bricks first"
            )));
        }
        let extents = extents.unwrap_or_else(|| {
            let max = |f: fn(&Cell) -> i32| cells.iter().map(f).max().unwrap_or(0) + 1;
            [max(|c| c.0), max(|c| c.1), max(|c| c.2)]
        });
        TargetShape::new(extents, cells)
    }

    pub fn extents(&self) -> [i32; 3] {
        self.extents
    }

    pub fn bounds(&self) -> Bounds {
        Bounds {
            lo: [0, 0, 0],
            hi: self.extents,
        }
    }

    pub fn cells(&self) -> &BTreeSet<Cell> {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells.contains(&cell)
    }

    fn check_cell(&self, cell: Cell) -> Result<()> {
        if self.bounds().contains_cell(cell) {
            Ok(())
        } else {
            Err(Error::OutOfExtents {
                cell,
                extents: self.extents,
            })
        }
    }

    pub fn to_json(&self) -> String {
        let file = TargetFile {
            extents: self.extents,
            cells: self.cells.iter().map(|&(i, j, k)| [i, j, k]).collect(),
        };
        serde_json::to_string(&file).expect("target serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TargetFile = serde_json::from_str(text)?;
        TargetShape::new(
            file.extents,
            file.cells.into_iter().map(|[i, j, k]| (i, j, k)),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        TargetShape::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// The occupancy and occupiability fields of a combination against a target.
#[derive(Debug, Clone, Copy)]
pub struct OccupiabilityGrid<'a> {
    pub target: &'a TargetShape,
    pub combination: &'a Combination,
}

impl<'a> OccupiabilityGrid<'a> {
    pub fn new(target: &'a TargetShape, combination: &'a Combination) -> Self {
        OccupiabilityGrid {
            target,
            combination,
        }
    }

    pub fn occupancy(&self, cell: Cell) -> Result<u8> {
        self.target.check_cell(cell)?;
        Ok(self.combination.is_occupied(cell) as u8)
    }

    pub fn occupiability(&self, cell: Cell) -> Result<u8> {
        self.target.check_cell(cell)?;
        Ok((self.target.contains(cell) && !self.combination.is_occupied(cell)) as u8)
    }
}

/// Number of occupiable cells covered by `candidate`.
pub fn occupiability_score(
    candidate: &Primitive,
    c: &Combination,
    target: &TargetShape,
) -> Result<u32> {
    let grid = OccupiabilityGrid::new(target, c);
    candidate
        .footprint()
        .map(|cell| grid.occupiability(cell).map(u32::from))
        .sum()
}

/// Fraction of target cells covered by the combination.
pub fn coverage(c: &Combination, target: &TargetShape) -> f64 {
    let covered = target
        .cells()
        .iter()
        .filter(|cell| c.is_occupied(**cell))
        .count();
    covered as f64 / target.len() as f64
}

fn non_empty(bricks: &[Primitive]) -> Result<()> {
    if bricks.is_empty() {
        Err(Error::EmptyCombination)
    } else {
        Ok(())
    }
}

/// Top layer index plus one.
pub fn height(bricks: &[Primitive]) -> Result<i64> {
    non_empty(bricks)?;
    Ok(bricks.iter().map(|b| b.z as i64).max().unwrap_or(0) + 1)
}

/// Extent of the occupied cells along the first axis.
pub fn width(bricks: &[Primitive]) -> Result<i64> {
    non_empty(bricks)?;
    let lo = bricks.iter().map(|b| b.plan_rect().lo.0).min().unwrap_or(0);
    let hi = bricks.iter().map(|b| b.plan_rect().hi.0).max().unwrap_or(0);
    Ok((hi - lo) as i64)
}

/// Extent of the occupied cells along the second axis.
pub fn depth(bricks: &[Primitive]) -> Result<i64> {
    non_empty(bricks)?;
    let lo = bricks.iter().map(|b| b.plan_rect().lo.1).min().unwrap_or(0);
    let hi = bricks.iter().map(|b| b.plan_rect().hi.1).max().unwrap_or(0);
    Ok((hi - lo) as i64)
}

/// Engaged stud-cavity cells summed over all connected brick pairs.
pub fn connected_studs(bricks: &[Primitive]) -> Result<i64> {
    non_empty(bricks)?;
    let mut total = 0i64;
    for (i, p) in bricks.iter().enumerate() {
        for q in &bricks[i + 1..] {
            if connects(p, q) {
                total += plan_overlap(p, q) as i64;
            }
        }
    }
    Ok(total)
}
