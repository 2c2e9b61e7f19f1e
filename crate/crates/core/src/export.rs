//! Geometry export: Wavefront OBJ meshes and run-length-encoded voxel grids.
//!
//! Bricks are meshed as plain cuboids without studs. Plan axes use one unit
//! per stud; each layer is `layer_height` units tall.
//!
//! The voxel format is plain text. The header line is
//! `VOXRLE v1 m1 m2 m3`; the body lists runs as `<value> <length>` pairs,
//! one per line, over cells ordered with the first axis fastest, then the
//! second axis, then the layer.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::{Bounds, Primitive};

pub const DEFAULT_LAYER_HEIGHT: f64 = 1.2;

/// Triangle mesh with one group per brick.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshDoc {
    pub vertices: Vec<[f64; 3]>,
    /// Zero-based vertex indices.
    pub faces: Vec<[usize; 3]>,
    /// `(group name, first face index)`.
    pub groups: Vec<(String, usize)>,
}

// Outward-facing triangles over the corner numbering used in `cuboid_corners`.
#[rustfmt::skip]
const CUBOID_FACES: [[usize; 3]; 12] = [
    [0, 2, 1], [0, 3, 2], // bottom
    [4, 5, 6], [4, 6, 7], // top
    [0, 1, 5], [0, 5, 4], // front (min second axis)
    [2, 3, 7], [2, 7, 6], // back
    [1, 2, 6], [1, 6, 5], // right (max first axis)
    [3, 0, 4], [3, 4, 7], // left
];

fn cuboid_corners(b: &Primitive, layer_height: f64) -> [[f64; 3]; 8] {
    let r = b.plan_rect();
    let (x0, y0, x1, y1) = (r.lo.0 as f64, r.lo.1 as f64, r.hi.0 as f64, r.hi.1 as f64);
    let (z0, z1) = (b.z as f64 * layer_height, (b.z + 1) as f64 * layer_height);
    [
        [x0, y0, z0],
        [x1, y0, z0],
        [x1, y1, z0],
        [x0, y1, z0],
        [x0, y0, z1],
        [x1, y0, z1],
        [x1, y1, z1],
        [x0, y1, z1],
    ]
}

pub fn mesh(bricks: &[Primitive], layer_height: f64) -> Result<MeshDoc> {
    if bricks.is_empty() {
        return Err(Error::EmptyCombination);
    }
    if !(layer_height.is_finite() && layer_height > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "layer height must be positive, got {layer_height}"
        )));
    }
    let mut doc = MeshDoc {
        vertices: Vec::new(),
        faces: Vec::new(),
        groups: Vec::new(),
    };
    for (i, b) in bricks.iter().enumerate() {
        let base = doc.vertices.len();
        doc.groups.push((format!("brick_{i}"), doc.faces.len()));
        doc.vertices.extend(cuboid_corners(b, layer_height));
        doc.faces
            .extend(CUBOID_FACES.iter().map(|f| f.map(|v| v + base)));
    }
    Ok(doc)
}

impl MeshDoc {
    /// Wavefront OBJ text with 1-based indices.
    pub fn to_obj(&self) -> String {
        let mut out = String::from("# brickbo export\n");
        for v in &self.vertices {
            let _ = writeln!(out, "v {:.4} {:.4} {:.4}", v[0], v[1], v[2]);
        }
        for (gi, (name, start)) in self.groups.iter().enumerate() {
            let end = self.groups.get(gi + 1).map_or(self.faces.len(), |g| g.1);
            let _ = writeln!(out, "g {name}");
            for f in &self.faces[*start..end] {
                let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
            }
        }
        out
    }
}

pub fn to_obj(bricks: &[Primitive], layer_height: f64) -> Result<String> {
    Ok(mesh(bricks, layer_height)?.to_obj())
}

/// Dense occupancy grid over `[0, m1) x [0, m2) x [0, m3)`, first axis fastest.
pub fn voxel_grid(bricks: &[Primitive], extents: [i32; 3]) -> Result<Vec<u8>> {
    let bounds = Bounds::extents(extents[0], extents[1], extents[2])?;
    let [m1, m2, m3] = extents.map(|m| m as usize);
    let mut grid = vec![0u8; m1 * m2 * m3];
    for b in bricks {
        for cell in b.footprint() {
            if !bounds.contains_cell(cell) {
                return Err(Error::OutOfExtents { cell, extents });
            }
            let (i, j, k) = (cell.0 as usize, cell.1 as usize, cell.2 as usize);
            grid[i + m1 * (j + m2 * k)] = 1;
        }
    }
    Ok(grid)
}

pub fn to_voxels(bricks: &[Primitive], extents: [i32; 3]) -> Result<String> {
    let grid = voxel_grid(bricks, extents)?;
    let mut out = format!("VOXRLE v1 {} {} {}\n", extents[0], extents[1], extents[2]);
    let mut iter = grid.iter().peekable();
    while let Some(&v) = iter.next() {
        let mut run = 1usize;
        while iter.next_if(|&&w| w == v).is_some() {
            run += 1;
        }
        let _ = writeln!(out, "{v} {run}");
    }
    Ok(out)
}

/// Parses the RLE voxel text back into extents and a dense grid.
pub fn parse_voxels(text: &str) -> Result<([i32; 3], Vec<u8>)> {
    let bad = |m: String| Error::InvalidConfig(format!("bad voxel file: {m}"));
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
    if header.len() != 5 || header[0] != "VOXRLE" || header[1] != "v1" {
        return Err(bad(format!("header {header:?}")));
    }
    let mut extents = [0i32; 3];
    for (e, s) in extents.iter_mut().zip(&header[2..]) {
        *e = s.parse().map_err(|_| bad(format!("extent {s:?}")))?;
    }
    let mut grid = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let mut parts = line.split_whitespace();
        let (Some(v), Some(n), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad(format!("run {line:?}")));
        };
        let v: u8 = v.parse().map_err(|_| bad(format!("value {v:?}")))?;
        let n: usize = n.parse().map_err(|_| bad(format!("length {n:?}")))?;
        grid.extend(std::iter::repeat_n(v, n));
    }
    let expected = extents
        .iter()
        .map(|&m| m.max(0) as usize)
        .product::<usize>();
    if grid.len() != expected {
        return Err(bad(format!("{} cells for extents {extents:?}", grid.len())));
    }
    Ok((extents, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Direction;

    fn p(a1: i32, a2: i32, z: i32, d: i64) -> Primitive {
        Primitive::new(a1, a2, z, Direction::from_index(d).unwrap()).unwrap()
    }

    /// Minimal independent reader: vertex positions, face count, group names.
    fn parse_obj(text: &str) -> (Vec<[f64; 3]>, usize, Vec<String>) {
        let mut verts = Vec::new();
        let mut faces = 0;
        let mut groups = Vec::new();
        for line in text.lines() {
            let t: Vec<&str> = line.split_whitespace().collect();
            match t.first() {
                Some(&"v") => verts.push([
                    t[1].parse().unwrap(),
                    t[2].parse().unwrap(),
                    t[3].parse().unwrap(),
                ]),
                Some(&"f") => {
                    for idx in &t[1..] {
                        let i: usize = idx.parse().unwrap();
                        assert!(i >= 1 && i <= verts.len());
                    }
                    faces += 1;
                }
                Some(&"g") => groups.push(t[1].to_string()),
                _ => {}
            }
        }
        (verts, faces, groups)
    }

    #[test]
    fn single_and_double_brick_meshes() {
        let (v, f, g) = parse_obj(&to_obj(&[p(0, 0, 0, 0)], 1.2).unwrap());
        assert_eq!((v.len(), f, g.len()), (8, 12, 1));
        let (v, f, g) = parse_obj(&to_obj(&[p(0, 0, 0, 0), p(1, 0, 1, 1)], 1.2).unwrap());
        assert_eq!(
            (v.len(), f, g),
            (16, 24, vec!["brick_0".to_string(), "brick_1".to_string()])
        );
        assert!(to_obj(&[], 1.2).is_err());
    }

    #[test]
    fn obj_bounding_box_matches_cells() {
        let bricks = [p(0, 0, 0, 0), p(3, 1, 1, 1), p(2, 3, 2, 0)];
        let (v, _, _) = parse_obj(&to_obj(&bricks, 1.2).unwrap());
        let lo = |a: usize| v.iter().map(|x| x[a]).fold(f64::MAX, f64::min);
        let hi = |a: usize| v.iter().map(|x| x[a]).fold(f64::MIN, f64::max);
        let cells: Vec<_> = bricks.iter().flat_map(|b| b.footprint()).collect();
        let cmin = |f: fn(&(i32, i32, i32)) -> i32| cells.iter().map(f).min().unwrap() as f64;
        let cmax = |f: fn(&(i32, i32, i32)) -> i32| cells.iter().map(f).max().unwrap() as f64 + 1.0;
        assert_eq!((lo(0), hi(0)), (cmin(|c| c.0), cmax(|c| c.0)));
        assert_eq!((lo(1), hi(1)), (cmin(|c| c.1), cmax(|c| c.1)));
        assert!((lo(2) - cmin(|c| c.2) * 1.2).abs() < 1e-9);
        assert!((hi(2) - cmax(|c| c.2) * 1.2).abs() < 1e-9);
    }

    #[test]
    fn faces_point_outward() {
        let m = mesh(&[p(0, 0, 0, 0)], 1.0).unwrap();
        let center = [2.0, 1.0, 0.5];
        for f in &m.faces {
            let [a, b, c] = f.map(|i| m.vertices[i]);
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let w = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let n = [
                u[1] * w[2] - u[2] * w[1],
                u[2] * w[0] - u[0] * w[2],
                u[0] * w[1] - u[1] * w[0],
            ];
            let out = [a[0] - center[0], a[1] - center[1], a[2] - center[2]];
            assert!(n[0] * out[0] + n[1] * out[1] + n[2] * out[2] > 0.0);
        }
    }

    #[test]
    fn obj_is_byte_stable() {
        let b = [p(0, 0, 0, 0), p(2, 0, 1, 1)];
        assert_eq!(to_obj(&b, 1.2).unwrap(), to_obj(&b, 1.2).unwrap());
    }

    #[test]
    fn voxel_counts() {
        let (_, grid) = parse_voxels(&to_voxels(&[], [3, 3, 2]).unwrap()).unwrap();
        assert!(grid.iter().all(|&v| v == 0));
        let text = to_voxels(&[p(0, 0, 0, 0)], [8, 8, 3]).unwrap();
        assert!(text.starts_with("VOXRLE v1 8 8 3\n"));
        let (ext, grid) = parse_voxels(&text).unwrap();
        assert_eq!(ext, [8, 8, 3]);
        assert_eq!(grid.iter().filter(|&&v| v == 1).count(), 8);
        let three = [p(0, 0, 0, 0), p(2, 0, 1, 1), p(1, 3, 2, 0)];
        let grid = voxel_grid(&three, [8, 8, 3]).unwrap();
        assert_eq!(grid.iter().filter(|&&v| v == 1).count(), 24);
        assert!(to_voxels(&[p(6, 0, 0, 0)], [8, 8, 3]).is_err());
    }
}
