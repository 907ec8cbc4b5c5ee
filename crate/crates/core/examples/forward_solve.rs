//! Solve the Darcy problem for one random coefficient on a mesh hierarchy and
//! print the outflow on each level.

use bayes_ratio::fem::{assemble, build_mesh_hierarchy, outflow, solve, Source, WeightFunction};
use bayes_ratio::randfield::{realise_field, sample_parameters, BasisOptions, CovarianceSpec, KlBasis};

fn main() -> bayes_ratio::Result<()> {
    let basis = KlBasis::build(CovarianceSpec::new(1.0, 0.3)?, 100, 128, BasisOptions::default())?;
    let xi = sample_parameters(&basis, 3);
    let hierarchy = build_mesh_hierarchy(0.125, 4)?;
    let mut previous = None;
    for mesh in hierarchy.levels() {
        let field = realise_field(&basis, &xi, mesh)?;
        let sol = solve(&assemble(mesh, &field, Source::Zero)?, 1e-10)?;
        let flux = outflow(&sol, &field, &WeightFunction::outflow(mesh))?;
        let change = previous.map_or(String::new(), |p: f64| format!("  change {:.2e}", (flux - p).abs()));
        println!("h = 1/{:<4} outflow {flux:.6}{change}", mesh.cells());
        previous = Some(flux);
    }
    Ok(())
}
