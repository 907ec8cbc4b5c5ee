use std::sync::Arc;

use bayes_ratio::fem::{
    assemble, assemble_with, band_solve, build_mesh_hierarchy, evaluate_at_patch, outflow, pcg, solve, DofLayout,
    ForwardSolution, MeshLevel, Patch, Source, WeightFunction,
};
use bayes_ratio::randfield::{realise_field, sample_parameters, BasisOptions, CovarianceSpec, FieldSample, KlBasis};
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

fn random_field(cells: usize, seed: u64) -> FieldSample {
    let basis = KlBasis::build(CovarianceSpec::new(1.0, 0.3).unwrap(), 30, cells, BasisOptions::default()).unwrap();
    let mesh = MeshLevel::uniform(cells).unwrap();
    realise_field(&basis, &sample_parameters(&basis, seed), &mesh).unwrap()
}

#[test]
fn manufactured_linear_pressure_on_every_level() {
    let hierarchy = build_mesh_hierarchy(0.125, 4).unwrap();
    for mesh in hierarchy.levels() {
        let field = FieldSample::constant(mesh.cells(), 1.0);
        let system = assemble(mesh, &field, Source::Zero).unwrap();
        let sol = solve(&system, 1e-13).unwrap();
        for node in 0..mesh.node_count() {
            let exact = 1.0 - mesh.coords(node)[0];
            assert!((sol.nodal()[node] - exact).abs() < 1e-9, "cells {} node {node}", mesh.cells());
        }
        let flux = outflow(&sol, &field, &WeightFunction::outflow(mesh)).unwrap();
        assert!((flux - 1.0).abs() < 1e-9, "cells {} flux {flux}", mesh.cells());
    }
}

#[test]
fn manufactured_scaled_coefficient() {
    let mesh = MeshLevel::uniform(16).unwrap();
    let field = FieldSample::constant(16, 3.5);
    let sol = solve(&assemble(&mesh, &field, Source::Zero).unwrap(), 1e-13).unwrap();
    let flux = outflow(&sol, &field, &WeightFunction::outflow(&mesh)).unwrap();
    assert!((flux - 3.5).abs() < 1e-9);
}

/// Element stiffness from the barycentric gradient system, independent of the
/// reference-element tables.
fn oracle_element(v: [[f64; 2]; 3], kbar: f64) -> [[f64; 3]; 3] {
    let a = Matrix3::new(1.0, v[0][0], v[0][1], 1.0, v[1][0], v[1][1], 1.0, v[2][0], v[2][1]);
    let inv = a.try_inverse().unwrap();
    let grads: Vec<Vector3<f64>> = (0..3).map(|i| inv.column(i).into()).collect();
    let area = 0.5 * a.determinant().abs();
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = area * kbar * (grads[i][1] * grads[j][1] + grads[i][2] * grads[j][2]);
        }
    }
    m
}

#[test]
fn element_matrices_match_gradient_oracle() {
    let mesh = MeshLevel::uniform(8).unwrap();
    let layout = DofLayout::new(&mesh);
    let field = random_field(8, 5);
    let k = field.values();
    for (e, tri) in mesh.elements().iter().enumerate() {
        let v = [mesh.coords(tri[0]), mesh.coords(tri[1]), mesh.coords(tri[2])];
        let kbar = (k[tri[0]] + k[tri[1]] + k[tri[2]]) / 3.0;
        let want = oracle_element(v, kbar);
        let got = layout.element_matrix(e, k);
        for a in 0..3 {
            for b in 0..3 {
                assert!((want[a][b] - got[a][b]).abs() < 1e-12, "element {e} ({a},{b})");
            }
        }
    }
}

#[test]
fn assembled_rows_annihilate_constants() {
    let mesh = MeshLevel::uniform(8).unwrap();
    let layout = DofLayout::new(&mesh);
    let field = random_field(8, 9);
    for row in layout.full_matrix(field.values()) {
        let s: f64 = row.iter().map(|&(_, v)| v).sum();
        assert!(s.abs() < 1e-12);
    }
}

/// Any nodal `w` equal to 1 on `x1 = 1` and 0 on `x1 = 0` gives the same
/// flux `-a(p_h, w)` as the library's weight function.
#[test]
fn outflow_is_independent_of_the_weight_extension() {
    let mesh = MeshLevel::uniform(16).unwrap();
    let field = random_field(16, 3);
    let sol = solve(&assemble(&mesh, &field, Source::Zero).unwrap(), 1e-13).unwrap();
    let lib = outflow(&sol, &field, &WeightFunction::outflow(&mesh)).unwrap();
    let layout = DofLayout::new(&mesh);
    let rows = layout.full_matrix(field.values());
    let n = mesh.cells();
    for variant in 0..3 {
        let w: Vec<f64> = (0..mesh.node_count())
            .map(|node| {
                let (i, j) = mesh.node_indices(node);
                let x = mesh.coords(node);
                match (i, variant) {
                    (0, _) => 0.0,
                    (i, _) if i == n => 1.0,
                    (_, 0) => x[0],
                    (_, 1) => x[0] * x[0] + 0.3 * (j as f64).sin(),
                    _ => ((i * 7 + j * 3) % 5) as f64 / 4.0,
                }
            })
            .collect();
        let a_pw: f64 = rows
            .iter()
            .enumerate()
            .map(|(r, row)| w[r] * row.iter().map(|&(c, v)| v * sol.nodal()[c]).sum::<f64>())
            .sum();
        assert!((-a_pw - lib).abs() < 1e-9 * lib.abs(), "variant {variant}: {} vs {lib}", -a_pw);
    }
    // inflow at x1 = 0 balances the outflow
    let inflow: f64 = rows
        .iter()
        .enumerate()
        .filter(|(r, _)| mesh.node_indices(*r).0 == 0)
        .map(|(_, row)| row.iter().map(|&(c, v)| v * sol.nodal()[c]).sum::<f64>())
        .sum();
    assert!((inflow - lib).abs() < 1e-9 * lib.abs());
}

/// Coarse P1 interpolant at a point, with the mesh's diagonal from (0,0) to (1,1) per cell.
fn p1_at(nodal: &[f64], cells: usize, x: [f64; 2]) -> f64 {
    let h = 1.0 / cells as f64;
    let ci = ((x[0] / h).floor() as usize).min(cells - 1);
    let cj = ((x[1] / h).floor() as usize).min(cells - 1);
    let (s, t) = (x[0] / h - ci as f64, x[1] / h - cj as f64);
    let stride = cells + 1;
    let a = nodal[cj * stride + ci];
    let b = nodal[cj * stride + ci + 1];
    let c = nodal[(cj + 1) * stride + ci + 1];
    let d = nodal[(cj + 1) * stride + ci];
    if s >= t {
        a + s * (b - a) + t * (c - b)
    } else {
        a + t * (d - a) + s * (c - d)
    }
}

/// Patch average by a centroid rule on 4^6 sub-triangles per star triangle.
fn oracle_patch_average(nodal: &[f64], cells: usize, patch: &Patch) -> f64 {
    let hr = 1.0 / patch.reference_cells() as f64;
    let mut total = 0.0;
    let mut count = 0.0;
    for tri in patch.triangles() {
        let v: Vec<[f64; 2]> = tri.iter().map(|&(i, j)| [i as f64 * hr, j as f64 * hr]).collect();
        let mut stack = vec![[v[0], v[1], v[2]]];
        for _ in 0..6 {
            stack = stack
                .into_iter()
                .flat_map(|[a, b, c]| {
                    let m = |p: [f64; 2], q: [f64; 2]| [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
                    let (ab, bc, ca) = (m(a, b), m(b, c), m(c, a));
                    [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
                })
                .collect();
        }
        for [a, b, c] in stack {
            let g = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
            total += p1_at(nodal, cells, g);
            count += 1.0;
        }
    }
    total / count
}

#[test]
fn patch_average_matches_fine_quadrature() {
    let reference = MeshLevel::uniform(64).unwrap();
    for cells in [8usize, 16, 64] {
        let mesh = MeshLevel::uniform(cells).unwrap();
        let nodal: Vec<f64> = (0..mesh.node_count())
            .map(|n| {
                let [x, y] = mesh.coords(n);
                (3.0 * x).sin() + x * y * y - 0.4 * y
            })
            .collect();
        let sol = ForwardSolution::from_nodal(cells, nodal.clone()).unwrap();
        for (i, j) in [(16, 16), (16, 48), (48, 32), (5, 59), (33, 7)] {
            let patch = Patch::around(&reference, i, j).unwrap();
            let got = evaluate_at_patch(&sol, &patch).unwrap();
            let want = oracle_patch_average(&nodal, cells, &patch);
            assert!((got - want).abs() < 1e-12, "cells {cells} node ({i},{j}): {got} vs {want}");
        }
    }
}

#[test]
fn patch_average_of_linear_function_is_its_centre_value() {
    let reference = MeshLevel::uniform(32).unwrap();
    let mesh = MeshLevel::uniform(32).unwrap();
    let nodal: Vec<f64> = (0..mesh.node_count())
        .map(|n| {
            let [x, y] = mesh.coords(n);
            2.0 - 3.0 * x + 0.5 * y
        })
        .collect();
    let sol = ForwardSolution::from_nodal(32, nodal).unwrap();
    let patch = Patch::around(&reference, 10, 21).unwrap();
    let [x, y] = patch.centre();
    assert!((evaluate_at_patch(&sol, &patch).unwrap() - (2.0 - 3.0 * x + 0.5 * y)).abs() < 1e-13);
}

#[test]
fn flux_for_a_coefficient_varying_across_the_flow() {
    // k = 1 + x2 varies across the flow: pressure stays 1 - x1 and the flux is 3/2
    let mut errs = Vec::new();
    for cells in [8usize, 16, 32, 64] {
        let mesh = MeshLevel::uniform(cells).unwrap();
        let k: Vec<f64> = (0..mesh.node_count()).map(|n| 1.0 + mesh.coords(n)[1]).collect();
        let field = FieldSample::from_values(cells, k).unwrap();
        let sol = solve(&assemble(&mesh, &field, Source::Zero).unwrap(), 1e-13).unwrap();
        let flux = outflow(&sol, &field, &WeightFunction::outflow(&mesh)).unwrap();
        errs.push((flux - 1.5).abs());
    }
    for e in &errs {
        assert!(*e < 1e-3, "{errs:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn band_cholesky_agrees_with_cg(seed in 0u64..1_000_000, cells in prop::sample::select(vec![4usize, 8, 16, 32])) {
        let mesh = MeshLevel::uniform(cells).unwrap();
        let layout = Arc::new(DofLayout::new(&mesh));
        let field = random_field(cells, seed);
        let system = assemble_with(&layout, field.values(), Source::Zero).unwrap();
        let direct = band_solve(&system.matrix, &system.rhs, 1e-12).unwrap();
        let iterative = pcg(&system.matrix, &system.rhs, 1e-13, 10_000).unwrap();
        let scale = iterative.solution.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in direct.solution.iter().zip(&iterative.solution) {
            prop_assert!((a - b).abs() <= 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn discrete_maximum_principle(seed in 0u64..1_000_000) {
        let mesh = MeshLevel::uniform(16).unwrap();
        let field = random_field(16, seed);
        let sol = solve(&assemble(&mesh, &field, Source::Zero).unwrap(), 1e-12).unwrap();
        for v in sol.nodal() {
            prop_assert!(*v >= -1e-9 && *v <= 1.0 + 1e-9);
        }
    }
}
