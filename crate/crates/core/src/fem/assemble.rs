//! Stiffness assembly with vertex (trapezoidal) quadrature of the coefficient.
//!
//! P1 gradients are constant per element, so the element matrix is
//! `|tau| grad(phi_a) . grad(phi_b) * mean_v k(v)`. The reference matrices
//! `|tau| grad(phi_a) . grad(phi_b)` are independent of `h` in 2-D and are
//! computed once per triangle kind.

use std::sync::Arc;

use super::mesh::{MeshLevel, TriangleKind};
use super::sparse::{band_solve, pcg, CsrMatrix};
use crate::error::{Error, Result};
use crate::randfield::FieldSample;

/// Gradients of the three P1 hat functions of a triangle.
pub fn p1_gradients(v: [[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    let mut g = [[0.0; 2]; 3];
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        g[a] = [(v[b][1] - v[c][1]) / det, (v[c][0] - v[b][0]) / det];
    }
    g
}

fn reference_stiffness(kind: TriangleKind) -> [[f64; 3]; 3] {
    let v = match kind {
        TriangleKind::Lower => [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
        TriangleKind::Upper => [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
    };
    let g = p1_gradients(v);
    let mut k = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            k[a][b] = 0.5 * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
        }
    }
    k
}

/// Degree-of-freedom numbering and precomputed scatter positions for one mesh.
#[derive(Debug)]
pub struct DofLayout {
    cells: usize,
    /// `dof_of[node]`, `None` on Dirichlet nodes.
    dof_of: Vec<Option<usize>>,
    node_of: Vec<usize>,
    /// Dirichlet value per node (0 on free nodes).
    boundary_values: Vec<f64>,
    pattern: CsrMatrix,
    /// Per element, per local pair `(a, b)`: CSR slot when both are free.
    scatter: Vec<[[Option<usize>; 3]; 3]>,
    elements: Vec<[usize; 3]>,
    kinds: Vec<TriangleKind>,
    lower: [[f64; 3]; 3],
    upper: [[f64; 3]; 3],
    lumped_mass: Vec<f64>,
}

impl DofLayout {
    pub fn new(mesh: &MeshLevel) -> Self {
        let nodes = mesh.node_count();
        let mut dof_of = vec![None; nodes];
        let mut node_of = Vec::new();
        let mut boundary_values = vec![0.0; nodes];
        for node in 0..nodes {
            match mesh.tag(node).dirichlet_value() {
                Some(g) => boundary_values[node] = g,
                None => {
                    dof_of[node] = Some(node_of.len());
                    node_of.push(node);
                }
            }
        }
        let elements = mesh.elements().to_vec();
        let mut columns = vec![Vec::new(); node_of.len()];
        for tri in &elements {
            for &a in tri {
                if let Some(da) = dof_of[a] {
                    for &b in tri {
                        if let Some(db) = dof_of[b] {
                            columns[da].push(db);
                        }
                    }
                }
            }
        }
        let pattern = CsrMatrix::from_pattern(columns);
        let scatter = elements
            .iter()
            .map(|tri| {
                let mut s = [[None; 3]; 3];
                for a in 0..3 {
                    for b in 0..3 {
                        if let (Some(da), Some(db)) = (dof_of[tri[a]], dof_of[tri[b]]) {
                            s[a][b] = pattern.position(da, db);
                        }
                    }
                }
                s
            })
            .collect();
        let kinds = (0..elements.len()).map(|e| mesh.element_kind(e)).collect();
        let area = mesh.element_area();
        let mut lumped_mass = vec![0.0; nodes];
        for tri in &elements {
            for &v in tri {
                lumped_mass[v] += area / 3.0;
            }
        }
        DofLayout {
            cells: mesh.cells(),
            dof_of,
            node_of,
            boundary_values,
            pattern,
            scatter,
            elements,
            kinds,
            lower: reference_stiffness(TriangleKind::Lower),
            upper: reference_stiffness(TriangleKind::Upper),
            lumped_mass,
        }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dof_count(&self) -> usize {
        self.node_of.len()
    }

    pub fn node_count(&self) -> usize {
        self.dof_of.len()
    }

    pub fn dof_of(&self, node: usize) -> Option<usize> {
        self.dof_of[node]
    }

    pub fn node_of(&self, dof: usize) -> usize {
        self.node_of[dof]
    }

    fn local(&self, element: usize) -> &[[f64; 3]; 3] {
        match self.kinds[element] {
            TriangleKind::Lower => &self.lower,
            TriangleKind::Upper => &self.upper,
        }
    }

    /// Element stiffness `|tau| grad(phi_a).grad(phi_b) * mean k` for one element.
    pub fn element_matrix(&self, element: usize, k_vertex: &[f64]) -> [[f64; 3]; 3] {
        let tri = self.elements[element];
        let kbar = (k_vertex[tri[0]] + k_vertex[tri[1]] + k_vertex[tri[2]]) / 3.0;
        let mut m = *self.local(element);
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= kbar;
            }
        }
        m
    }

    /// Full stiffness matrix over all nodes, Dirichlet rows included.
    pub fn full_matrix(&self, k_vertex: &[f64]) -> Vec<Vec<(usize, f64)>> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.node_count()];
        for (e, tri) in self.elements.iter().enumerate() {
            let m = self.element_matrix(e, k_vertex);
            for a in 0..3 {
                for b in 0..3 {
                    rows[tri[a]].push((tri[b], m[a][b]));
                }
            }
        }
        for row in rows.iter_mut() {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            *row = merged;
        }
        rows
    }
}

/// Reduced linear system over the free (interior and Neumann) nodes.
#[derive(Clone, Debug)]
pub struct FemSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    layout: Arc<DofLayout>,
}

impl FemSystem {
    pub fn layout(&self) -> &DofLayout {
        &self.layout
    }
}

/// Nodal source term, integrated with the same vertex rule as the stiffness.
#[derive(Clone, Copy, Debug)]
pub enum Source<'a> {
    Zero,
    Nodal(&'a [f64]),
}

/// Assembles the stiffness system on `layout` for vertex coefficients `k`.
pub fn assemble_with(layout: &Arc<DofLayout>, k: &[f64], source: Source<'_>) -> Result<FemSystem> {
    if k.len() != layout.node_count() {
        return Err(Error::MeshMismatch(format!(
            "field has {} vertex values, mesh has {} nodes",
            k.len(),
            layout.node_count()
        )));
    }
    let mut matrix = layout.pattern.clone();
    let mut rhs = vec![0.0; layout.dof_count()];
    if let Source::Nodal(f) = source {
        if f.len() != layout.node_count() {
            return Err(Error::MeshMismatch("source term size".into()));
        }
        for (d, r) in rhs.iter_mut().enumerate() {
            let node = layout.node_of[d];
            *r = layout.lumped_mass[node] * f[node];
        }
    }
    for (e, tri) in layout.elements.iter().enumerate() {
        let kbar = (k[tri[0]] + k[tri[1]] + k[tri[2]]) / 3.0;
        let local = layout.local(e);
        let slots = &layout.scatter[e];
        for a in 0..3 {
            let Some(da) = layout.dof_of[tri[a]] else {
                continue;
            };
            for b in 0..3 {
                let v = kbar * local[a][b];
                match slots[a][b] {
                    Some(slot) => matrix.data[slot] += v,
                    None => rhs[da] -= v * layout.boundary_values[tri[b]],
                }
            }
        }
    }
    Ok(FemSystem {
        matrix,
        rhs,
        layout: Arc::clone(layout),
    })
}

/// Convenience wrapper building a fresh layout for `mesh`.
pub fn assemble(mesh: &MeshLevel, field: &FieldSample, source: Source<'_>) -> Result<FemSystem> {
    let layout = Arc::new(DofLayout::new(mesh));
    if field.cells() != mesh.cells() {
        return Err(Error::MeshMismatch(format!(
            "field tabulated on {} cells, mesh has {}",
            field.cells(),
            mesh.cells()
        )));
    }
    assemble_with(&layout, field.values(), source)
}

/// FE solution with Dirichlet values restored.
#[derive(Clone, Debug)]
pub struct ForwardSolution {
    cells: usize,
    nodal: Vec<f64>,
    pub relative_residual: f64,
    pub iterations: usize,
    /// Flop proxy: band factorisation size, or CG iterations times nonzeros.
    pub work: u64,
}

impl ForwardSolution {
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn nodal(&self) -> &[f64] {
        &self.nodal
    }

    /// Builds a solution from nodal values directly (testing and replay).
    pub fn from_nodal(cells: usize, nodal: Vec<f64>) -> Result<Self> {
        if nodal.len() != (cells + 1) * (cells + 1) {
            return Err(Error::MeshMismatch("nodal vector size".into()));
        }
        Ok(ForwardSolution {
            cells,
            nodal,
            relative_residual: 0.0,
            iterations: 0,
            work: 0,
        })
    }

    /// Writes `x,y,value` rows for inspection.
    pub fn write_csv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "x,y,value")?;
        let stride = self.cells + 1;
        let h = 1.0 / self.cells as f64;
        for (node, v) in self.nodal.iter().enumerate() {
            let (i, j) = (node % stride, node / stride);
            writeln!(out, "{},{},{}", i as f64 * h, j as f64 * h, v)?;
        }
        Ok(())
    }
}

/// Systems with fewer unknowns are solved by band Cholesky, larger ones by CG.
pub const DIRECT_SOLVE_LIMIT: usize = 10_000;

pub fn solve(system: &FemSystem, tol: f64) -> Result<ForwardSolution> {
    let layout = &system.layout;
    let n = layout.dof_count();
    let outcome = if n < DIRECT_SOLVE_LIMIT {
        band_solve(&system.matrix, &system.rhs, tol)?
    } else {
        pcg(&system.matrix, &system.rhs, tol, 20 * n + 100)?
    };
    let mut nodal = layout.boundary_values.clone();
    for (d, v) in outcome.solution.iter().enumerate() {
        nodal[layout.node_of[d]] = *v;
    }
    Ok(ForwardSolution {
        cells: layout.cells,
        nodal,
        relative_residual: outcome.relative_residual,
        iterations: outcome.iterations,
        work: if n < DIRECT_SOLVE_LIMIT {
            (n * (layout.cells + 1) * (layout.cells + 1)) as u64
        } else {
            (outcome.iterations * system.matrix.nnz()) as u64
        },
    })
}
