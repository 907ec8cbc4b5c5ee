//! P1 finite elements on nested uniform triangulations of the unit square.

mod assemble;
mod functional;
mod mesh;
mod sparse;

pub use assemble::{
    assemble, assemble_with, p1_gradients, solve, DofLayout, DIRECT_SOLVE_LIMIT, FemSystem, ForwardSolution, Source,
};
pub use functional::{evaluate_at_patch, outflow, Patch, WeightFunction};
pub(crate) use functional::outflow_nodal;
pub use mesh::{
    build_mesh_hierarchy, cells_for_width, BoundaryTag, MeshHierarchy, MeshLevel, TriangleKind,
};
pub use sparse::{band_solve, pcg, BandCholesky, CgOutcome, CsrMatrix};
