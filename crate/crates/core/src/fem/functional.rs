//! Output functionals: boundary outflow and local patch averages.

use super::assemble::ForwardSolution;
use super::mesh::MeshLevel;
use crate::error::{Error, Result};
use crate::randfield::FieldSample;

/// Nodal weight function: one on `x1 = 1`, zero elsewhere.
#[derive(Clone, Debug)]
pub struct WeightFunction {
    cells: usize,
    values: Vec<f64>,
}

impl WeightFunction {
    pub fn outflow(mesh: &MeshLevel) -> Self {
        let n = mesh.cells();
        let values = (0..mesh.node_count())
            .map(|node| if mesh.node_indices(node).0 == n { 1.0 } else { 0.0 })
            .collect();
        WeightFunction { cells: n, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `-sum_tau |tau| mean_v k(v) grad(w).grad(p)` over the elements where `w`
/// is not constant (the last column of cells).
pub fn outflow(solution: &ForwardSolution, field: &FieldSample, w: &WeightFunction) -> Result<f64> {
    let n = solution.cells();
    if field.cells() != n || w.cells != n {
        return Err(Error::MeshMismatch(format!(
            "outflow inputs on {} / {} / {} cells",
            solution.cells(),
            field.cells(),
            w.cells
        )));
    }
    Ok(outflow_nodal(n, solution.nodal(), field.values(), &w.values))
}

pub(crate) fn outflow_nodal(n: usize, p: &[f64], k: &[f64], w: &[f64]) -> f64 {
    let stride = n + 1;
    let h = 1.0 / n as f64;
    let area = 0.5 * h * h;
    let mut total = 0.0;
    for cj in 0..n {
        // any cell with nonzero grad w touches column n; w is zero on columns < n-1
        for ci in n.saturating_sub(1)..n {
            let a = cj * stride + ci;
            let (b, c, d) = (a + 1, a + stride + 1, a + stride);
            for tri in [[a, b, c], [a, c, d]] {
                let gw = grad_on(tri, w, h);
                if gw == [0.0, 0.0] {
                    continue;
                }
                let gp = grad_on(tri, p, h);
                let kbar = (k[tri[0]] + k[tri[1]] + k[tri[2]]) / 3.0;
                total -= area * kbar * (gw[0] * gp[0] + gw[1] * gp[1]);
            }
        }
    }
    total
}

fn grad_on(tri: [usize; 3], v: &[f64], h: f64) -> [f64; 2] {
    // right triangles of the structured mesh: lower A B C or upper A C D
    let (a, second, third) = (tri[0], tri[1], tri[2]);
    if second == a + 1 {
        [(v[second] - v[a]) / h, (v[third] - v[second]) / h]
    } else {
        [(v[second] - v[third]) / h, (v[third] - v[a]) / h]
    }
}

/// A six-triangle star around a node of the reference mesh.
#[derive(Clone, Debug)]
pub struct Patch {
    reference_cells: usize,
    node: (usize, usize),
    /// Vertex lattice indices of each of the six triangles.
    triangles: [[(usize, usize); 3]; 6],
}

impl Patch {
    pub fn around(reference: &MeshLevel, i: usize, j: usize) -> Result<Self> {
        let node = reference.node(i, j);
        let star = reference.node_star(node).map_err(|_| Error::NodeNotOnMesh {
            node: (i as f64 * reference.h(), j as f64 * reference.h()),
            mesh: format!("{}-cell reference (interior)", reference.cells()),
        })?;
        let triangles = star.map(|e| reference.elements()[e].map(|v| reference.node_indices(v)));
        Ok(Patch {
            reference_cells: reference.cells(),
            node: (i, j),
            triangles,
        })
    }

    pub fn node(&self) -> (usize, usize) {
        self.node
    }

    pub fn reference_cells(&self) -> usize {
        self.reference_cells
    }

    pub fn centre(&self) -> [f64; 2] {
        let h = 1.0 / self.reference_cells as f64;
        [self.node.0 as f64 * h, self.node.1 as f64 * h]
    }

    pub fn triangles(&self) -> &[[(usize, usize); 3]; 6] {
        &self.triangles
    }

    /// Linear functional `p -> patch average of p` on a (coarser or equal)
    /// nested solution mesh, as sparse `(node, weight)` pairs.
    pub fn weights_on(&self, solution_mesh: &MeshLevel) -> Result<Vec<(usize, f64)>> {
        if self.reference_cells % solution_mesh.cells() != 0 {
            return Err(Error::MeshMismatch(format!(
                "solution mesh with {} cells does not nest in the {}-cell reference mesh",
                solution_mesh.cells(),
                self.reference_cells
            )));
        }
        // equal-area triangles: average = mean over triangles of the vertex means
        let mut acc: Vec<(usize, f64)> = Vec::new();
        for tri in &self.triangles {
            for &(i, j) in tri {
                for (node, w) in solution_mesh.interpolation_weights(i, j, self.reference_cells)? {
                    if w != 0.0 {
                        acc.push((node, w / 18.0));
                    }
                }
            }
        }
        acc.sort_by_key(|&(n, _)| n);
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (n, w) in acc {
            match merged.last_mut() {
                Some(last) if last.0 == n => last.1 += w,
                _ => merged.push((n, w)),
            }
        }
        Ok(merged)
    }
}

/// Area average of `p_h` over the patch. Each reference triangle lies inside a
/// single solution-mesh triangle, on which `p_h` is linear, so the vertex mean
/// times the area integrates it exactly.
pub fn evaluate_at_patch(solution: &ForwardSolution, patch: &Patch) -> Result<f64> {
    let mesh = MeshLevel::uniform(solution.cells())?;
    let weights = patch.weights_on(&mesh)?;
    Ok(weights.iter().map(|&(n, w)| w * solution.nodal()[n]).sum())
}
