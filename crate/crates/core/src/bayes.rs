//! Observation operator, likelihood factors and synthetic data.
//!
//! Observations are local pressure averages over six-triangle stars of the
//! reference mesh `h*`, centred at the `m` interior nodes of a uniform grid of
//! spacing `1/(sqrt(m) + 1)`. Nodes are snapped to the nearest reference
//! vertex (exact whenever the spacing is a multiple of `h*`) and ordered
//! row-major: `x2` index outer, `x1` index inner.

use std::io::{BufRead, Write};
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fem::{self, assemble_with, DofLayout, ForwardSolution, MeshLevel, Patch, Source};
use crate::randfield::{realise_field, sample_parameters, KlBasis};
use crate::seed;

/// Where the observations sit: `m` reference-mesh vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationLayout {
    pub reference_cells: usize,
    /// Lattice indices on the reference mesh.
    pub nodes: Vec<(usize, usize)>,
}

impl ObservationLayout {
    pub fn grid(m: usize, reference_cells: usize) -> Result<Self> {
        let side = (m as f64).sqrt().round() as usize;
        if side == 0 || side * side != m {
            return Err(Error::InvalidParameter(format!(
                "observation count {m} is not a positive perfect square"
            )));
        }
        let spacing = 1.0 / (side as f64 + 1.0);
        let mut nodes = Vec::with_capacity(m);
        for b in 1..=side {
            for a in 1..=side {
                let i = (a as f64 * spacing * reference_cells as f64).round() as usize;
                let j = (b as f64 * spacing * reference_cells as f64).round() as usize;
                if i == 0 || j == 0 || i >= reference_cells || j >= reference_cells {
                    return Err(Error::InvalidParameter(format!(
                        "observation grid of {m} nodes does not fit strictly inside a {reference_cells}-cell reference mesh"
                    )));
                }
                nodes.push((i, j));
            }
        }
        let mut sorted = nodes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != nodes.len() {
            return Err(Error::InvalidParameter(format!(
                "reference mesh with {reference_cells} cells is too coarse to separate {m} observation nodes"
            )));
        }
        Ok(ObservationLayout {
            reference_cells,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn coords(&self) -> Vec<[f64; 2]> {
        let h = 1.0 / self.reference_cells as f64;
        self.nodes
            .iter()
            .map(|&(i, j)| [i as f64 * h, j as f64 * h])
            .collect()
    }

    pub fn patches(&self) -> Result<Vec<Patch>> {
        let reference = MeshLevel::uniform(self.reference_cells)?;
        self.nodes
            .iter()
            .map(|&(i, j)| Patch::around(&reference, i, j))
            .collect()
    }
}

/// Data set with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    pub layout: ObservationLayout,
    pub y: Vec<f64>,
    pub noise_variance: f64,
    pub truth_seed: u64,
    pub noise_seed: u64,
    /// Observations before noise was added.
    pub noiseless: Vec<f64>,
}

impl ObservationSet {
    pub fn m(&self) -> usize {
        self.y.len()
    }

    /// Same data with a different noise level. The noise realisation is kept
    /// as a fixed standard-normal draw, rescaled.
    pub fn with_noise_variance(&self, noise_variance: f64) -> Result<Self> {
        if !(noise_variance > 0.0) {
            return Err(Error::InvalidParameter("noise variance must be positive".into()));
        }
        let ratio = (noise_variance / self.noise_variance).sqrt();
        let y = self
            .y
            .iter()
            .zip(&self.noiseless)
            .map(|(y, clean)| clean + (y - clean) * ratio)
            .collect();
        Ok(ObservationSet {
            y,
            noise_variance,
            ..self.clone()
        })
    }

    pub fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "# bayes-ratio observation data v1")?;
        writeln!(out, "m = {}", self.m())?;
        writeln!(out, "noise_variance = {:.16e}", self.noise_variance)?;
        writeln!(out, "reference_cells = {}", self.layout.reference_cells)?;
        writeln!(out, "truth_seed = {}", self.truth_seed)?;
        writeln!(out, "noise_seed = {}", self.noise_seed)?;
        writeln!(out, "# node i j x1 x2 (reference lattice indices, row-major)")?;
        for (&(i, j), c) in self.layout.nodes.iter().zip(self.layout.coords()) {
            writeln!(out, "node {i} {j} {:.16e} {:.16e}", c[0], c[1])?;
        }
        writeln!(out, "# y value noiseless")?;
        for (y, clean) in self.y.iter().zip(&self.noiseless) {
            writeln!(out, "y {y:.16e} {clean:.16e}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn read(reader: impl BufRead, context: &str) -> Result<Self> {
        let mut header = std::collections::BTreeMap::new();
        let mut nodes = Vec::new();
        let mut y = Vec::new();
        let mut noiseless = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::parse(context, format!("bad line {line:?}"));
            match fields.as_slice() {
                ["node", i, j, ..] => {
                    nodes.push((i.parse().map_err(|_| bad())?, j.parse().map_err(|_| bad())?))
                }
                ["y", v, clean] => {
                    y.push(v.parse().map_err(|_| bad())?);
                    noiseless.push(clean.parse().map_err(|_| bad())?);
                }
                [key, "=", value] => {
                    header.insert(key.to_string(), value.to_string());
                }
                _ => return Err(bad()),
            }
        }
        let get = |k: &str| {
            header
                .get(k)
                .ok_or_else(|| Error::parse(context, format!("missing header key {k}")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::parse(context, format!("bad value for {k}")))
        };
        let int = |k: &str| -> Result<u64> {
            get(k)?
                .parse()
                .map_err(|_| Error::parse(context, format!("bad value for {k}")))
        };
        let m = int("m")? as usize;
        if nodes.len() != m || y.len() != m {
            return Err(Error::parse(
                context,
                format!("header says m = {m}, found {} nodes and {} values", nodes.len(), y.len()),
            ));
        }
        Ok(ObservationSet {
            layout: ObservationLayout {
                reference_cells: int("reference_cells")? as usize,
                nodes,
            },
            y,
            noise_variance: num("noise_variance")?,
            truth_seed: int("truth_seed")?,
            noise_seed: int("noise_seed")?,
            noiseless,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read(f, &path.display().to_string())
    }
}

/// Observation functional `H` restricted to one solution mesh, stored as
/// sparse nodal weights per observation.
#[derive(Clone, Debug)]
pub struct ObservationOperator {
    cells: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl ObservationOperator {
    pub fn new(layout: &ObservationLayout, solution_mesh: &MeshLevel) -> Result<Self> {
        let rows = layout
            .patches()?
            .iter()
            .map(|p| p.weights_on(solution_mesh))
            .collect::<Result<Vec<_>>>()?;
        Ok(ObservationOperator {
            cells: solution_mesh.cells(),
            rows,
        })
    }

    pub fn apply(&self, nodal: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(n, w)| w * nodal[n]).sum())
            .collect()
    }
}

/// `H(p_h)` for one solution, one patch average per observation node.
pub fn observe(solution: &ForwardSolution, layout: &ObservationLayout) -> Result<Vec<f64>> {
    let mesh = MeshLevel::uniform(solution.cells())?;
    let op = ObservationOperator::new(layout, &mesh)?;
    if op.cells != solution.cells() {
        return Err(Error::MeshMismatch("observation operator".into()));
    }
    Ok(op.apply(solution.nodal()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodEval {
    pub observed: Vec<f64>,
    /// Misfit `|y - H|^2 / (2 sigma^2)`.
    pub misfit: f64,
    pub theta: f64,
    pub psi: f64,
}

pub fn likelihood(observed: Vec<f64>, data: &ObservationSet, phi: f64) -> LikelihoodEval {
    let sq: f64 = observed.iter().zip(&data.y).map(|(h, y)| (y - h).powi(2)).sum();
    let misfit = sq / (2.0 * data.noise_variance);
    let theta = (-misfit).exp();
    LikelihoodEval {
        observed,
        misfit,
        theta,
        psi: theta * phi,
    }
}

/// Draws a truth sample from the prior, solves on the reference mesh,
/// observes and adds `N(0, sigma^2)` noise.
pub fn generate_data(
    truth_seed: u64,
    basis: &KlBasis,
    reference_cells: usize,
    m: usize,
    noise_variance: f64,
    noise_seed: u64,
    solver_tol: f64,
) -> Result<ObservationSet> {
    if !(noise_variance >= 0.0) {
        return Err(Error::InvalidParameter("noise variance must be >= 0".into()));
    }
    let layout = ObservationLayout::grid(m, reference_cells)?;
    let mesh = MeshLevel::uniform(reference_cells)?;
    let xi = sample_parameters(basis, seed::derive(&[seed::tag::TRUTH, truth_seed]));
    let field = realise_field(basis, &xi, &mesh)?;
    let dofs = std::sync::Arc::new(DofLayout::new(&mesh));
    let system = assemble_with(&dofs, field.values(), Source::Zero)?;
    let solution = fem::solve(&system, solver_tol)?;
    let noiseless = ObservationOperator::new(&layout, &mesh)?.apply(solution.nodal());
    let mut rng = seed::rng(&[seed::tag::NOISE, noise_seed]);
    let sigma = noise_variance.sqrt();
    let y = noiseless
        .iter()
        .map(|v| {
            let e: f64 = StandardNormal.sample(&mut rng);
            v + sigma * e
        })
        .collect();
    Ok(ObservationSet {
        layout,
        y,
        noise_variance,
        truth_seed,
        noise_seed,
        noiseless,
    })
}
