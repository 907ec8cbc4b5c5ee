//! The forward map `xi -> (phi, theta, psi)` on every level of a hierarchy.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::bayes::{likelihood, ObservationOperator, ObservationSet};
use crate::error::{Error, Result};
use crate::fem::{self, assemble_with, outflow_nodal, DofLayout, MeshHierarchy, Source, WeightFunction};
use crate::randfield::{realise_field, FieldSample, KlBasis, ParameterVector};

/// Quantity of interest `phi(p_h)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quantity {
    /// Flux through `x1 = 1`.
    Outflow,
    /// A constant, independent of the solution.
    Constant(f64),
}

#[derive(Clone, Copy, Debug)]
pub struct ProblemOptions {
    pub solver_tol: f64,
    pub quantity: Quantity,
    /// Replace every coefficient draw by a constant field (debugging).
    pub frozen_coefficient: Option<f64>,
}

impl Default for ProblemOptions {
    fn default() -> Self {
        ProblemOptions {
            solver_tol: 1e-10,
            quantity: Quantity::Outflow,
            frozen_coefficient: None,
        }
    }
}

/// Solve counter per level. Totals are order-independent.
#[derive(Debug)]
pub struct CostMeter {
    cells: Vec<u64>,
    solves: Vec<AtomicU64>,
}

impl CostMeter {
    fn new(cells: Vec<u64>) -> Self {
        let solves = cells.iter().map(|_| AtomicU64::new(0)).collect();
        CostMeter { cells, solves }
    }

    fn record(&self, level: usize) {
        self.solves[level].fetch_add(1, Ordering::Relaxed);
    }

    pub fn solves(&self, level: usize) -> u64 {
        self.solves[level].load(Ordering::Relaxed)
    }

    /// `sum_l solves_l h_l^-2`.
    pub fn units(&self) -> f64 {
        self.cells
            .iter()
            .zip(&self.solves)
            .map(|(c, s)| (c * c * s.load(Ordering::Relaxed)) as f64)
            .sum()
    }
}

/// One forward evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleEval {
    pub phi: f64,
    /// `Phi = |y - H|^2 / (2 sigma^2)`, so `theta = exp(-misfit)`.
    pub misfit: f64,
    pub theta: f64,
    pub psi: f64,
}

pub struct Problem {
    basis: Arc<KlBasis>,
    hierarchy: MeshHierarchy,
    layouts: Vec<Arc<DofLayout>>,
    weights: Vec<WeightFunction>,
    data: ObservationSet,
    operators: Vec<ObservationOperator>,
    options: ProblemOptions,
    meter: CostMeter,
}

impl Problem {
    pub fn new(
        basis: Arc<KlBasis>,
        hierarchy: MeshHierarchy,
        data: ObservationSet,
        options: ProblemOptions,
    ) -> Result<Self> {
        for mesh in hierarchy.levels() {
            if basis.tabulation_cells() % mesh.cells() != 0 {
                return Err(Error::MeshMismatch(format!(
                    "KL basis tabulated on {} cells cannot serve a {}-cell mesh",
                    basis.tabulation_cells(),
                    mesh.cells()
                )));
            }
        }
        let layouts = hierarchy
            .levels()
            .iter()
            .map(|m| Arc::new(DofLayout::new(m)))
            .collect();
        let weights = hierarchy.levels().iter().map(WeightFunction::outflow).collect();
        let operators = hierarchy
            .levels()
            .iter()
            .map(|m| ObservationOperator::new(&data.layout, m))
            .collect::<Result<Vec<_>>>()?;
        let meter = CostMeter::new(hierarchy.levels().iter().map(|m| m.cells() as u64).collect());
        Ok(Problem {
            basis,
            hierarchy,
            layouts,
            weights,
            data,
            operators,
            options,
            meter,
        })
    }

    /// Same problem with different data (fresh cost meter).
    pub fn with_data(&self, data: ObservationSet) -> Result<Self> {
        Problem::new(Arc::clone(&self.basis), self.hierarchy.clone(), data, self.options)
    }

    pub fn with_options(&self, options: ProblemOptions) -> Result<Self> {
        Problem::new(Arc::clone(&self.basis), self.hierarchy.clone(), self.data.clone(), options)
    }

    pub fn basis(&self) -> &KlBasis {
        &self.basis
    }

    pub fn hierarchy(&self) -> &MeshHierarchy {
        &self.hierarchy
    }

    pub fn data(&self) -> &ObservationSet {
        &self.data
    }

    pub fn options(&self) -> &ProblemOptions {
        &self.options
    }

    pub fn meter(&self) -> &CostMeter {
        &self.meter
    }

    pub fn levels(&self) -> usize {
        self.hierarchy.len()
    }

    /// `h_l^-2`.
    pub fn level_cost(&self, level: usize) -> f64 {
        let c = self.hierarchy.level(level).cells() as f64;
        c * c
    }

    /// Coefficient field on the given level.
    pub fn field(&self, level: usize, xi: &ParameterVector) -> Result<FieldSample> {
        let mesh = self.hierarchy.level(level);
        match self.options.frozen_coefficient {
            Some(k) => Ok(FieldSample::constant(mesh.cells(), k)),
            None => realise_field(&self.basis, xi, mesh),
        }
    }

    fn evaluate_field(&self, level: usize, field: &FieldSample) -> Result<SampleEval> {
        let layout = &self.layouts[level];
        let system = assemble_with(layout, field.values(), Source::Zero)?;
        let solution = fem::solve(&system, self.options.solver_tol)?;
        self.meter.record(level);
        let phi = match self.options.quantity {
            Quantity::Outflow => outflow_nodal(
                layout.cells(),
                solution.nodal(),
                field.values(),
                self.weights[level].values(),
            ),
            Quantity::Constant(c) => c,
        };
        let observed = self.operators[level].apply(solution.nodal());
        let l = likelihood(observed, &self.data, phi);
        Ok(SampleEval {
            phi,
            misfit: l.misfit,
            theta: l.theta,
            psi: l.psi,
        })
    }

    /// Solves once on `level`.
    pub fn evaluate(&self, level: usize, xi: &ParameterVector) -> Result<SampleEval> {
        let field = self.field(level, xi)?;
        self.evaluate_field(level, &field)
    }

    /// Solves on `level` and `level - 1` with the same coefficient draw; the
    /// coarse field is the fine field restricted to the coarse vertices.
    pub fn evaluate_coupled(&self, level: usize, xi: &ParameterVector) -> Result<(SampleEval, SampleEval)> {
        assert!(level >= 1);
        let fine = self.field(level, xi)?;
        let coarse = restrict(&fine, self.hierarchy.level(level - 1).cells())?;
        Ok((self.evaluate_field(level, &fine)?, self.evaluate_field(level - 1, &coarse)?))
    }
}

/// Vertex values of a fine field at the vertices of a nested coarse mesh.
pub fn restrict(fine: &FieldSample, coarse_cells: usize) -> Result<FieldSample> {
    let nf = fine.cells();
    if nf % coarse_cells != 0 {
        return Err(Error::MeshMismatch(format!("{coarse_cells} cells do not nest in {nf}")));
    }
    let r = nf / coarse_cells;
    let side_f = nf + 1;
    let mut values = Vec::with_capacity((coarse_cells + 1).pow(2));
    for j in 0..=coarse_cells {
        for i in 0..=coarse_cells {
            values.push(fine.values()[j * r * side_f + i * r]);
        }
    }
    FieldSample::from_values(coarse_cells, values)
}
