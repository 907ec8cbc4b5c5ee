//! Uniform triangulations of the unit square.
//!
//! Nodes sit on an `(n+1) x (n+1)` lattice, numbered row-major
//! (`node = j * (n + 1) + i`, `x1 = i h`, `x2 = j h`). Every cell is split by the
//! diagonal from its lower-left to its upper-right corner:
//!
//! ```text
//!  D-----C
//!  | up / |
//!  |  /   |
//!  | / lo |
//!  A-----B
//! ```
//!
//! Element `2 c` is the lower triangle `A B C`, element `2 c + 1` the upper
//! triangle `A C D` of cell `c = cj * n + ci`. With all diagonals parallel,
//! halving `h` splits every triangle into four congruent children, so the
//! levels of a hierarchy are exactly nested.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryTag {
    /// `x1 = 0`, pressure 1.
    DirichletLeft,
    /// `x1 = 1`, pressure 0.
    DirichletRight,
    /// `x2 = 0` or `x2 = 1`, zero flux.
    Neumann,
    Interior,
}

impl BoundaryTag {
    pub fn is_dirichlet(self) -> bool {
        matches!(self, BoundaryTag::DirichletLeft | BoundaryTag::DirichletRight)
    }

    /// Prescribed pressure on Dirichlet nodes.
    pub fn dirichlet_value(self) -> Option<f64> {
        match self {
            BoundaryTag::DirichletLeft => Some(1.0),
            BoundaryTag::DirichletRight => Some(0.0),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TriangleKind {
    Lower,
    Upper,
}

#[derive(Clone, Debug)]
pub struct MeshLevel {
    level: usize,
    cells: usize,
    elements: Vec<[usize; 3]>,
    tags: Vec<BoundaryTag>,
    /// Parent element on the next coarser level, if any.
    parents: Option<Vec<usize>>,
}

impl MeshLevel {
    /// A single uniform mesh with `cells` cells per side.
    pub fn uniform(cells: usize) -> Result<Self> {
        Self::build(0, cells, false)
    }

    fn build(level: usize, cells: usize, with_parents: bool) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidParameter("mesh needs at least one cell".into()));
        }
        let n = cells;
        let stride = n + 1;
        let mut elements = Vec::with_capacity(2 * n * n);
        for cj in 0..n {
            for ci in 0..n {
                let a = cj * stride + ci;
                let b = a + 1;
                let c = a + stride + 1;
                let d = a + stride;
                elements.push([a, b, c]);
                elements.push([a, c, d]);
            }
        }
        let mut tags = Vec::with_capacity(stride * stride);
        for j in 0..=n {
            for i in 0..=n {
                let tag = if i == 0 {
                    BoundaryTag::DirichletLeft
                } else if i == n {
                    BoundaryTag::DirichletRight
                } else if j == 0 || j == n {
                    BoundaryTag::Neumann
                } else {
                    BoundaryTag::Interior
                };
                tags.push(tag);
            }
        }
        let parents = with_parents.then(|| {
            assert!(n % 2 == 0);
            let nc = n / 2;
            (0..elements.len())
                .map(|e| {
                    let cell = e / 2;
                    let (ci, cj) = (cell % n, cell / n);
                    let (pi, pj) = (ci / 2, cj / 2);
                    // centroid of the child in parent-cell local coordinates (units of h)
                    let (ox, oy) = ((ci % 2) as f64, (cj % 2) as f64);
                    let (cx, cy) = if e % 2 == 0 {
                        (ox + 2.0 / 3.0, oy + 1.0 / 3.0)
                    } else {
                        (ox + 1.0 / 3.0, oy + 2.0 / 3.0)
                    };
                    let upper = cy > cx;
                    2 * (pj * nc + pi) + usize::from(upper)
                })
                .collect()
        });
        Ok(MeshLevel {
            level,
            cells,
            elements,
            tags,
            parents,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Cells per side, `1 / h`.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn node_count(&self) -> usize {
        (self.cells + 1) * (self.cells + 1)
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.cells + 1) + i
    }

    /// Lattice indices `(i, j)` of a node.
    pub fn node_indices(&self, node: usize) -> (usize, usize) {
        (node % (self.cells + 1), node / (self.cells + 1))
    }

    pub fn coords(&self, node: usize) -> [f64; 2] {
        let (i, j) = self.node_indices(node);
        let h = self.h();
        [i as f64 * h, j as f64 * h]
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn element_kind(&self, element: usize) -> TriangleKind {
        if element % 2 == 0 {
            TriangleKind::Lower
        } else {
            TriangleKind::Upper
        }
    }

    pub fn element_area(&self) -> f64 {
        0.5 * self.h() * self.h()
    }

    pub fn tag(&self, node: usize) -> BoundaryTag {
        self.tags[node]
    }

    pub fn tags(&self) -> &[BoundaryTag] {
        &self.tags
    }

    /// Parent element index on level `level - 1`; `None` on the coarsest level.
    pub fn parent_element(&self, element: usize) -> Option<usize> {
        self.parents.as_ref().map(|p| p[element])
    }

    /// Refinement factor from `self` to a finer nested mesh `fine`.
    pub fn refinement_factor(&self, fine: &MeshLevel) -> Result<usize> {
        if fine.cells % self.cells != 0 {
            return Err(Error::MeshMismatch(format!(
                "mesh with {} cells is not nested in mesh with {} cells",
                self.cells, fine.cells
            )));
        }
        Ok(fine.cells / self.cells)
    }

    /// Barycentric interpolation weights of the lattice point
    /// `(i_fine, j_fine) / fine_cells`, which must lie on a lattice that nests
    /// this mesh. Returns the three vertices of the containing triangle and
    /// their weights.
    pub fn interpolation_weights(
        &self,
        i_fine: usize,
        j_fine: usize,
        fine_cells: usize,
    ) -> Result<[(usize, f64); 3]> {
        let n = self.cells;
        if fine_cells % n != 0 || i_fine > fine_cells || j_fine > fine_cells {
            return Err(Error::MeshMismatch(format!(
                "point ({i_fine}, {j_fine})/{fine_cells} not on a lattice nesting {n} cells"
            )));
        }
        let r = fine_cells / n;
        let ci = (i_fine / r).min(n - 1);
        let cj = (j_fine / r).min(n - 1);
        let di = (i_fine - ci * r) as f64 / r as f64;
        let dj = (j_fine - cj * r) as f64 / r as f64;
        let a = self.node(ci, cj);
        let b = a + 1;
        let c = a + n + 2;
        let d = a + n + 1;
        Ok(if di >= dj {
            // lower: v = vA + (vB - vA) di + (vC - vB) dj
            [(a, 1.0 - di), (b, di - dj), (c, dj)]
        } else {
            // upper: v = vA + (vC - vD) di + (vD - vA) dj
            [(a, 1.0 - dj), (c, di), (d, dj - di)]
        })
    }

    /// The six elements adjacent to an interior node.
    pub fn node_star(&self, node: usize) -> Result<[usize; 6]> {
        let (i, j) = self.node_indices(node);
        let n = self.cells;
        if i == 0 || j == 0 || i >= n || j >= n {
            return Err(Error::MeshMismatch(format!(
                "node ({i}, {j}) is not interior to the {n}-cell mesh"
            )));
        }
        let cell = |ci: usize, cj: usize| cj * n + ci;
        Ok([
            2 * cell(i, j),
            2 * cell(i, j) + 1,
            2 * cell(i - 1, j),
            2 * cell(i - 1, j - 1),
            2 * cell(i - 1, j - 1) + 1,
            2 * cell(i, j - 1) + 1,
        ])
    }
}

/// Nested meshes `h_l = h0 2^-l`, `l = 0..=L`.
#[derive(Clone, Debug)]
pub struct MeshHierarchy {
    levels: Vec<MeshLevel>,
}

impl MeshHierarchy {
    pub fn levels(&self) -> &[MeshLevel] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &MeshLevel {
        &self.levels[l]
    }

    pub fn finest(&self) -> &MeshLevel {
        self.levels.last().expect("hierarchy is never empty")
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// Cells per side for a width `h`, rejecting widths whose inverse is not an
/// integer.
pub fn cells_for_width(h: f64) -> Result<usize> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidParameter(format!("mesh width {h} outside (0, 1]")));
    }
    let n = (1.0 / h).round();
    if ((1.0 / h) - n).abs() > 1e-9 * n {
        return Err(Error::InvalidParameter(format!(
            "1/h0 = {} is not an integer",
            1.0 / h
        )));
    }
    Ok(n as usize)
}

pub fn build_mesh_hierarchy(h0: f64, levels: usize) -> Result<MeshHierarchy> {
    let n0 = cells_for_width(h0)?;
    let levels = (0..=levels)
        .map(|l| MeshLevel::build(l, n0 << l, l > 0))
        .collect::<Result<Vec<_>>>()?;
    Ok(MeshHierarchy { levels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarsest_counts() {
        let hier = build_mesh_hierarchy(1.0 / 8.0, 0).unwrap();
        let m = hier.level(0);
        assert_eq!(m.node_count(), 81);
        assert_eq!(m.elements().len(), 128);
    }

    #[test]
    fn finest_width_after_two_refinements() {
        let hier = build_mesh_hierarchy(1.0 / 8.0, 2).unwrap();
        assert_eq!(hier.finest().cells(), 32);
        assert_eq!(hier.finest().h(), 1.0 / 32.0);
    }

    #[test]
    fn rejects_non_integer_inverse_width() {
        assert!(build_mesh_hierarchy(0.3, 1).is_err());
        assert!(build_mesh_hierarchy(0.0, 1).is_err());
    }

    #[test]
    fn coarse_vertices_are_fine_vertices() {
        let hier = build_mesh_hierarchy(0.25, 2).unwrap();
        for pair in hier.levels().windows(2) {
            let (c, f) = (&pair[0], &pair[1]);
            for node in 0..c.node_count() {
                let (i, j) = c.node_indices(node);
                assert_eq!(c.coords(node), f.coords(f.node(2 * i, 2 * j)));
            }
        }
    }

    fn vertex_xy(mesh: &MeshLevel, e: usize) -> Vec<[f64; 2]> {
        mesh.elements()[e].iter().map(|&v| mesh.coords(v)).collect()
    }

    fn inside(tri: &[[f64; 2]], p: [f64; 2]) -> bool {
        let sign = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
            (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        };
        let d1 = sign(tri[0], tri[1], p);
        let d2 = sign(tri[1], tri[2], p);
        let d3 = sign(tri[2], tri[0], p);
        d1 >= -1e-14 && d2 >= -1e-14 && d3 >= -1e-14
    }

    #[test]
    fn every_coarse_triangle_is_union_of_four_children() {
        let hier = build_mesh_hierarchy(0.25, 1).unwrap();
        let (c, f) = (hier.level(0), hier.level(1));
        let mut children = vec![0usize; c.elements().len()];
        for e in 0..f.elements().len() {
            let p = f.parent_element(e).unwrap();
            children[p] += 1;
            let parent = vertex_xy(c, p);
            for v in vertex_xy(f, e) {
                assert!(inside(&parent, v), "child {e} vertex {v:?} outside parent {p}");
            }
        }
        assert!(children.iter().all(|&k| k == 4));
    }

    #[test]
    fn stars_have_six_distinct_elements_touching_the_node() {
        let m = MeshLevel::uniform(4).unwrap();
        let node = m.node(2, 1);
        let star = m.node_star(node).unwrap();
        let mut sorted = star.to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 6);
        for e in star {
            assert!(m.elements()[e].contains(&node));
        }
        let touching = m.elements().iter().filter(|t| t.contains(&node)).count();
        assert_eq!(touching, 6);
        assert!(m.node_star(m.node(0, 2)).is_err());
    }

    #[test]
    fn interpolation_weights_reproduce_linear_functions() {
        let coarse = MeshLevel::uniform(4).unwrap();
        let f = |x: [f64; 2]| 0.3 + 2.0 * x[0] - 1.5 * x[1];
        for j in 0..=16 {
            for i in 0..=16 {
                let w = coarse.interpolation_weights(i, j, 16).unwrap();
                let v: f64 = w.iter().map(|&(n, wt)| wt * f(coarse.coords(n))).sum();
                let exact = f([i as f64 / 16.0, j as f64 / 16.0]);
                assert!((v - exact).abs() < 1e-13);
            }
        }
    }
}
