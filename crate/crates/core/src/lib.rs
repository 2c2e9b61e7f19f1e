//! Sequential assembly of 2x4 brick primitives into a target 3D shape.
//!
//! Each assembly step picks where the next brick goes by multi-objective
//! Bayesian optimization over the feasible placements. The two objectives are
//! how many still-empty target cells the brick would fill (occupiability) and
//! how stable the resulting structure is.
//!
//! ```
//! use brickbo::{assemble, AssemblyConfig, BoConfig, StabilityConfig, TargetShape};
//!
//! let target = TargetShape::cuboid((0, 0, 0), [8, 4, 2], [12, 8, 3]).unwrap();
//! let cfg = AssemblyConfig { steps: 3, ..Default::default() };
//! let trace = assemble(&target, &cfg, &BoConfig::default(), &StabilityConfig::default()).unwrap();
//! assert_eq!(trace.final_bricks.len(), 4);
//! ```
//!
//! The guide in `book/` walks through every module; its code snippets are
//! compiled as doctests of this crate.

pub mod assembler;
pub mod bo;
pub mod dataset;
pub mod error;
pub mod explicit;
pub mod export;
pub mod gp;
pub mod lattice;
pub mod occupiability;
pub mod stability;

pub use assembler::{assemble, AssemblyConfig, AssemblyStatus, AssemblyTrace, RollbackMode};
pub use bo::{BoConfig, Observation};
pub use error::{Error, Result};
pub use lattice::{Bounds, Combination, Direction, Primitive};
pub use occupiability::TargetShape;
pub use stability::StabilityConfig;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/occupiability.md")]
    mod occupiability {}
    #[doc = include_str!("../../../book/src/stability.md")]
    mod stability {}
    #[doc = include_str!("../../../book/src/surrogate.md")]
    mod surrogate {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/assembly.md")]
    mod assembly {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
    #[doc = include_str!("../../../book/src/dataset.md")]
    mod dataset {}
    #[doc = include_str!("../../../book/src/export.md")]
    mod export {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
