//! Truncated Karhunen-Loeve expansion of the separable exponential covariance
//! `sigma^2 exp(-|x - y|_1 / lambda)` on the unit square, and realisations of
//! the diffusion coefficient under uniform or Gaussian (log-normal) priors.
//!
//! The 1-norm kernel factorises into two 1-D kernels `exp(-|s - t| / lambda)`
//! on `[0, 1]`, whose eigenpairs are known in closed form up to the roots of
//!
//! ```text
//! even:  c cos(w/2) - w sin(w/2) = 0      eigenfunction cos(w (x - 1/2))
//! odd:   w cos(w/2) + c sin(w/2) = 0      eigenfunction sin(w (x - 1/2))
//! ```
//!
//! with `c = 1 / lambda` and eigenvalue `2c / (w^2 + c^2)`. In `t = w/2` the
//! k-th even root lies in `(k pi, k pi + pi/2)` and the k-th odd root in
//! `(k pi + pi/2, (k + 1) pi)`, one root per bracket, so plain bisection is
//! enough. 2-D modes are tensor products sorted by eigenvalue.
//!
//! Eigenfunctions are stored as 1-D factor tables on the lattice of the finest
//! mesh in play; any nested coarser mesh reads them by striding, so shared
//! vertices see bit-identical field values on every level.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::MeshLevel;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub variance: f64,
    pub correlation_length: f64,
    /// Norm in the kernel; only the separable 1-norm is supported.
    #[serde(default = "one")]
    pub norm_order: u8,
}

fn one() -> u8 {
    1
}

impl CovarianceSpec {
    pub fn new(variance: f64, correlation_length: f64) -> Result<Self> {
        let spec = CovarianceSpec {
            variance,
            correlation_length,
            norm_order: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0) || !(self.correlation_length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "covariance needs positive variance and correlation length, got {} and {}",
                self.variance, self.correlation_length
            )));
        }
        if self.norm_order != 1 {
            return Err(Error::InvalidParameter(format!(
                "only the 1-norm exponential kernel is supported, got r = {}",
                self.norm_order
            )));
        }
        Ok(())
    }

    /// The kernel itself, `sigma^2 exp(-|x - y|_1 / lambda)`.
    pub fn kernel(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let d = (x[0] - y[0]).abs() + (x[1] - y[1]).abs();
        self.variance * (-d / self.correlation_length).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    /// `xi_j ~ U[-1, 1]`, `k = u`.
    Uniform,
    /// `xi_j ~ N(0, 1)`, `k = k* + exp(u)`.
    Gaussian,
}

impl PriorKind {
    pub fn name(self) -> &'static str {
        match self {
            PriorKind::Uniform => "uniform",
            PriorKind::Gaussian => "gaussian",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(PriorKind::Uniform),
            "gaussian" => Ok(PriorKind::Gaussian),
            other => Err(Error::parse("prior", format!("unknown prior kind {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// One eigenpair of the unit-variance 1-D kernel `exp(-|s - t| / lambda)` on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode1d {
    pub parity: Parity,
    pub frequency: f64,
    pub eigenvalue: f64,
    /// Normalising factor giving unit L2 norm; also the sup norm of the eigenfunction.
    pub amplitude: f64,
}

impl Mode1d {
    pub fn eval(&self, x: f64) -> f64 {
        let s = x - 0.5;
        match self.parity {
            Parity::Even => self.amplitude * (self.frequency * s).cos(),
            Parity::Odd => self.amplitude * (self.frequency * s).sin(),
        }
    }
}

const ROOT_TOL: f64 = 1e-12;

fn bisect(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    index: usize,
    parity: &'static str,
) -> Result<f64> {
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(Error::RootNotBracketed {
            index,
            parity,
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    let s_lo = f_lo.signum();
    while hi - lo > ROOT_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The `count` leading eigenpairs of the 1-D exponential kernel, ordered by
/// decreasing eigenvalue (alternating even and odd).
pub fn modes_1d(correlation_length: f64, count: usize) -> Result<Vec<Mode1d>> {
    let c = 1.0 / correlation_length;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let pi = std::f64::consts::PI;
    let mut modes = Vec::with_capacity(count);
    for idx in 0..count {
        let k = (idx / 2) as f64;
        // t = w/2
        let (parity, t) = if idx % 2 == 0 {
            let f = |t: f64| c * t.cos() - 2.0 * t * t.sin();
            (Parity::Even, bisect(f, k * pi, k * pi + half_pi, idx, "even")?)
        } else {
            let f = |t: f64| 2.0 * t * t.cos() + c * t.sin();
            (Parity::Odd, bisect(f, k * pi + half_pi, (k + 1.0) * pi, idx, "odd")?)
        };
        let w = 2.0 * t;
        let eigenvalue = 2.0 * c / (w * w + c * c);
        let sinc = w.sin() / (2.0 * w);
        let norm_sq = match parity {
            Parity::Even => 0.5 + sinc,
            Parity::Odd => 0.5 - sinc,
        };
        modes.push(Mode1d {
            parity,
            frequency: w,
            eigenvalue,
            amplitude: 1.0 / norm_sq.sqrt(),
        });
    }
    Ok(modes)
}

/// Largest 1-D pool tried before giving up.
const MAX_POOL: usize = 1 << 14;

/// Index pairs `(p, q)` of the `count` leading tensor modes and the pool size used.
fn leading_pairs(correlation_length: f64, count: usize) -> Result<(Vec<Mode1d>, Vec<(usize, usize)>)> {
    let mut pool = ((2.0 * (count as f64).sqrt()).ceil() as usize).max(8);
    loop {
        let modes = modes_1d(correlation_length, pool + 1)?;
        let mut pairs: Vec<(usize, usize)> = (0..pool)
            .flat_map(|p| (0..pool).map(move |q| (p, q)))
            .collect();
        let ev = |&(p, q): &(usize, usize)| modes[p].eigenvalue * modes[q].eigenvalue;
        pairs.sort_by(|a, b| ev(b).total_cmp(&ev(a)).then(a.cmp(b)));
        if pairs.len() >= count {
            let last = ev(&pairs[count - 1]);
            // every excluded pair has eigenvalue <= mu_0 mu_pool
            let excluded_max = modes[0].eigenvalue * modes[pool].eigenvalue;
            if excluded_max < last {
                pairs.truncate(count);
                let mut used = modes;
                used.truncate(pool);
                return Ok((used, pairs));
            }
        }
        if pool >= MAX_POOL {
            return Err(Error::ModePoolExhausted {
                requested: count,
                pool,
            });
        }
        pool *= 2;
    }
}

/// Truncated KL basis with eigenfunctions tabulated on a lattice.
#[derive(Clone, Debug)]
pub struct KlBasis {
    spec: CovarianceSpec,
    prior: PriorKind,
    mean: f64,
    k_star: f64,
    tabulation_cells: usize,
    modes: Vec<Mode1d>,
    pairs: Vec<(usize, usize)>,
    eigenvalues: Vec<f64>,
    std_devs: Vec<f64>,
    /// `tables[p][i] = f_p(i / tabulation_cells)`.
    tables: Vec<Vec<f64>>,
    /// Modes grouped by first factor: `groups[g] = (p, [(j, q)])`.
    groups: Vec<(usize, Vec<(usize, usize)>)>,
}

/// Options besides the covariance and truncation order.
#[derive(Clone, Copy, Debug)]
pub struct BasisOptions {
    pub prior: PriorKind,
    /// Constant prior mean `m0`.
    pub mean: f64,
    /// Offset `k*` added to `exp(u)` under the Gaussian prior.
    pub k_star: f64,
}

impl Default for BasisOptions {
    fn default() -> Self {
        BasisOptions {
            prior: PriorKind::Gaussian,
            mean: 0.0,
            k_star: 0.0,
        }
    }
}

pub fn build_kl_basis(spec: CovarianceSpec, modes: usize, mesh: &MeshLevel) -> Result<KlBasis> {
    KlBasis::build(spec, modes, mesh.cells(), BasisOptions::default())
}

impl KlBasis {
    pub fn build(
        spec: CovarianceSpec,
        count: usize,
        tabulation_cells: usize,
        options: BasisOptions,
    ) -> Result<Self> {
        spec.validate()?;
        if count == 0 {
            return Err(Error::InvalidParameter("KL truncation order must be >= 1".into()));
        }
        if tabulation_cells == 0 {
            return Err(Error::InvalidParameter("tabulation mesh needs cells".into()));
        }
        let (modes, pairs) = leading_pairs(spec.correlation_length, count)?;
        Self::assemble(spec, options, tabulation_cells, modes, pairs)
    }

    fn assemble(
        spec: CovarianceSpec,
        options: BasisOptions,
        tabulation_cells: usize,
        modes: Vec<Mode1d>,
        pairs: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let eigenvalues: Vec<f64> = pairs
            .iter()
            .map(|&(p, q)| spec.variance * modes[p].eigenvalue * modes[q].eigenvalue)
            .collect();
        let std_devs = eigenvalues.iter().map(|e| e.sqrt()).collect();
        let n = tabulation_cells;
        let tables = modes
            .iter()
            .map(|m| (0..=n).map(|i| m.eval(i as f64 / n as f64)).collect())
            .collect();
        let mut groups: Vec<(usize, Vec<(usize, usize)>)> = Vec::new();
        let mut firsts: Vec<usize> = pairs.iter().map(|&(p, _)| p).collect();
        firsts.sort_unstable();
        firsts.dedup();
        for p in firsts {
            let members = pairs
                .iter()
                .enumerate()
                .filter(|(_, pq)| pq.0 == p)
                .map(|(j, pq)| (j, pq.1))
                .collect();
            groups.push((p, members));
        }
        let basis = KlBasis {
            spec,
            prior: options.prior,
            mean: options.mean,
            k_star: options.k_star,
            tabulation_cells,
            modes,
            pairs,
            eigenvalues,
            std_devs,
            tables,
            groups,
        };
        if basis.prior == PriorKind::Uniform {
            let decay_sum: f64 = basis.decay_sequence().iter().sum();
            if !(decay_sum < basis.mean) {
                return Err(Error::InadmissibleUniformPrior {
                    decay_sum,
                    mean_min: basis.mean,
                });
            }
        }
        Ok(basis)
    }

    pub fn spec(&self) -> CovarianceSpec {
        self.spec
    }

    pub fn prior(&self) -> PriorKind {
        self.prior
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn k_star(&self) -> f64 {
        self.k_star
    }

    /// Truncation order `J`.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn tabulation_cells(&self) -> usize {
        self.tabulation_cells
    }

    /// `gamma_j^2`, non-increasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// 1-D index pair `(p, q)` of mode `j`: `phi_j(x) = f_p(x1) f_q(x2)`.
    pub fn mode_pair(&self, j: usize) -> (usize, usize) {
        self.pairs[j]
    }

    pub fn modes_1d(&self) -> &[Mode1d] {
        &self.modes
    }

    /// `b_j = gamma_j ||phi_j||_inf`.
    pub fn decay_sequence(&self) -> Vec<f64> {
        self.pairs
            .iter()
            .zip(&self.std_devs)
            .map(|(&(p, q), s)| s * self.modes[p].amplitude * self.modes[q].amplitude)
            .collect()
    }

    /// `phi_j` at lattice vertex `(i, k)` of the tabulation mesh.
    pub fn eigenfunction_at(&self, j: usize, i: usize, k: usize) -> f64 {
        let (p, q) = self.pairs[j];
        self.tables[p][i] * self.tables[q][k]
    }

    /// `phi_j` at an arbitrary point.
    pub fn eigenfunction(&self, j: usize, x: [f64; 2]) -> f64 {
        let (p, q) = self.pairs[j];
        self.modes[p].eval(x[0]) * self.modes[q].eval(x[1])
    }

    /// `sum_{j < J} gamma_j^2 phi_j(x)^2` at a tabulation vertex.
    pub fn mercer_partial_sum(&self, i: usize, k: usize, modes: usize) -> f64 {
        (0..modes.min(self.len()))
            .map(|j| self.eigenvalues[j] * self.eigenfunction_at(j, i, k).powi(2))
            .sum()
    }

    fn stride_for(&self, mesh: &MeshLevel) -> Result<usize> {
        let n = mesh.cells();
        if self.tabulation_cells % n != 0 {
            return Err(Error::MeshMismatch(format!(
                "mesh with {n} cells is not nested in the {}-cell tabulation mesh",
                self.tabulation_cells
            )));
        }
        Ok(self.tabulation_cells / n)
    }

    /// Log-field `u(x; xi) = m0 + sum_j gamma_j xi_j phi_j(x)` at mesh vertices.
    pub fn log_field(&self, xi: &ParameterVector, mesh: &MeshLevel) -> Result<Vec<f64>> {
        if xi.values.len() != self.len() {
            return Err(Error::InvalidParameter(format!(
                "parameter vector has {} entries, basis has {}",
                xi.values.len(),
                self.len()
            )));
        }
        let stride = self.stride_for(mesh)?;
        let n = mesh.cells();
        let side = n + 1;
        let mut u = vec![self.mean; side * side];
        let mut g = vec![0.0; side];
        for (p, members) in &self.groups {
            g.iter_mut().for_each(|v| *v = 0.0);
            for &(j, q) in members {
                let coef = self.std_devs[j] * xi.values[j];
                let tq = &self.tables[q];
                for (k, gv) in g.iter_mut().enumerate() {
                    *gv += coef * tq[k * stride];
                }
            }
            let tp = &self.tables[*p];
            for (k, gv) in g.iter().enumerate() {
                let row = &mut u[k * side..(k + 1) * side];
                for (i, uv) in row.iter_mut().enumerate() {
                    *uv += tp[i * stride] * gv;
                }
            }
        }
        Ok(u)
    }

    /// Writes the basis cache (see the crate README for the layout).
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "# bayes-ratio kl-basis v1")?;
        writeln!(out, "variance {:e}", self.spec.variance)?;
        writeln!(out, "correlation_length {:e}", self.spec.correlation_length)?;
        writeln!(out, "norm_order {}", self.spec.norm_order)?;
        writeln!(out, "prior {}", self.prior.name())?;
        writeln!(out, "mean {:e}", self.mean)?;
        writeln!(out, "k_star {:e}", self.k_star)?;
        writeln!(out, "modes {}", self.len())?;
        writeln!(out, "tabulation_cells {}", self.tabulation_cells)?;
        writeln!(out, "modes_1d {}", self.modes.len())?;
        for m in &self.modes {
            let parity = match m.parity {
                Parity::Even => "even",
                Parity::Odd => "odd",
            };
            writeln!(out, "{parity} {:e} {:e} {:e}", m.frequency, m.eigenvalue, m.amplitude)?;
        }
        writeln!(out, "eigenvalues")?;
        for (j, &(p, q)) in self.pairs.iter().enumerate() {
            writeln!(out, "{p} {q} {:e}", self.eigenvalues[j])?;
        }
        writeln!(out, "tables")?;
        for t in &self.tables {
            let row: Vec<String> = t.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_cache(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let ctx = path.display().to_string();
        let mut lines = file.lines().filter(|l| {
            l.as_ref()
                .map(|s| !s.trim().is_empty() && !s.starts_with('#'))
                .unwrap_or(true)
        });
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::parse(ctx.clone(), "unexpected end of file"))?
                .map_err(Error::from)
        };
        fn value<T: std::str::FromStr>(line: &str, key: &str, ctx: &str) -> Result<T> {
            let rest = line
                .strip_prefix(key)
                .ok_or_else(|| Error::parse(ctx, format!("expected key {key}, got {line:?}")))?;
            rest.trim()
                .parse()
                .map_err(|_| Error::parse(ctx, format!("bad value for {key}: {rest:?}")))
        }
        let variance: f64 = value(&next()?, "variance", &ctx)?;
        let correlation_length: f64 = value(&next()?, "correlation_length", &ctx)?;
        let norm_order: u8 = value(&next()?, "norm_order", &ctx)?;
        let prior_name: String = value(&next()?, "prior", &ctx)?;
        let mean: f64 = value(&next()?, "mean", &ctx)?;
        let k_star: f64 = value(&next()?, "k_star", &ctx)?;
        let count: usize = value(&next()?, "modes", &ctx)?;
        let tabulation_cells: usize = value(&next()?, "tabulation_cells", &ctx)?;
        let pool: usize = value(&next()?, "modes_1d", &ctx)?;
        let spec = CovarianceSpec {
            variance,
            correlation_length,
            norm_order,
        };
        spec.validate()?;
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::parse(ctx.clone(), format!("bad number {s:?}")))
        };
        let mut modes = Vec::with_capacity(pool);
        for _ in 0..pool {
            let line = next()?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::parse(ctx.clone(), format!("bad 1-D mode line {line:?}")));
            }
            let parity = match f[0] {
                "even" => Parity::Even,
                "odd" => Parity::Odd,
                other => return Err(Error::parse(ctx.clone(), format!("bad parity {other:?}"))),
            };
            modes.push(Mode1d {
                parity,
                frequency: parse_f(f[1])?,
                eigenvalue: parse_f(f[2])?,
                amplitude: parse_f(f[3])?,
            });
        }
        if next()? != "eigenvalues" {
            return Err(Error::parse(ctx.clone(), "missing eigenvalues section"));
        }
        let mut pairs = Vec::with_capacity(count);
        for _ in 0..count {
            let line = next()?;
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::parse(ctx.clone(), format!("bad eigenvalue line {line:?}"));
            if f.len() != 3 {
                return Err(bad());
            }
            let p: usize = f[0].parse().map_err(|_| bad())?;
            let q: usize = f[1].parse().map_err(|_| bad())?;
            if p >= pool || q >= pool {
                return Err(bad());
            }
            pairs.push((p, q));
        }
        let options = BasisOptions {
            prior: PriorKind::parse(&prior_name)?,
            mean,
            k_star,
        };
        let basis = Self::assemble(spec, options, tabulation_cells, modes, pairs)?;
        Ok(basis)
    }
}

/// A draw of the KL coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterVector {
    pub values: Vec<f64>,
    pub prior: PriorKind,
}

impl ParameterVector {
    pub fn zeros(len: usize, prior: PriorKind) -> Self {
        ParameterVector {
            values: vec![0.0; len],
            prior,
        }
    }
}

/// Draws `J` i.i.d. coefficients from the prior marginal with a stream seeded by `seed`.
pub fn sample_parameters(basis: &KlBasis, seed: u64) -> ParameterVector {
    let mut rng = seed::rng(&[seed]);
    let values = match basis.prior {
        PriorKind::Gaussian => (0..basis.len()).map(|_| rng.sample(StandardNormal)).collect(),
        PriorKind::Uniform => (0..basis.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
    };
    ParameterVector {
        values,
        prior: basis.prior,
    }
}

/// Vertex values of the diffusion coefficient on one mesh.
#[derive(Clone, Debug)]
pub struct FieldSample {
    cells: usize,
    values: Vec<f64>,
    pub k_min: f64,
    pub k_max: f64,
}

impl FieldSample {
    pub fn constant(cells: usize, value: f64) -> Self {
        FieldSample {
            cells,
            values: vec![value; (cells + 1) * (cells + 1)],
            k_min: value,
            k_max: value,
        }
    }

    pub fn from_values(cells: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != (cells + 1) * (cells + 1) {
            return Err(Error::MeshMismatch(format!(
                "{} values for a {cells}-cell mesh",
                values.len()
            )));
        }
        let k_min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let k_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(k_min > 0.0) {
            return Err(Error::NonPositiveCoefficient { k_min });
        }
        Ok(FieldSample {
            cells,
            values,
            k_min,
            k_max,
        })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn realise_field(basis: &KlBasis, xi: &ParameterVector, mesh: &MeshLevel) -> Result<FieldSample> {
    let mut u = basis.log_field(xi, mesh)?;
    if basis.prior == PriorKind::Gaussian {
        for v in u.iter_mut() {
            *v = basis.k_star + v.exp();
        }
    }
    FieldSample::from_values(mesh.cells(), u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> CovarianceSpec {
        CovarianceSpec::new(1.0, 0.3).unwrap()
    }

    #[test]
    fn roots_satisfy_transcendental_equations() {
        let c = 1.0 / 0.3;
        for m in modes_1d(0.3, 20).unwrap() {
            let t = m.frequency / 2.0;
            let r = match m.parity {
                Parity::Even => c * t.cos() - m.frequency * t.sin(),
                Parity::Odd => m.frequency * t.cos() + c * t.sin(),
            };
            assert!(r.abs() < 1e-9 * m.frequency.max(1.0), "residual {r}");
        }
    }

    #[test]
    fn one_dimensional_eigenfunctions_are_orthonormal() {
        let modes = modes_1d(0.3, 6).unwrap();
        let n = 20_000;
        for a in &modes {
            for b in &modes {
                // composite Simpson
                let h = 1.0 / n as f64;
                let mut s = 0.0;
                for i in 0..=n {
                    let x = i as f64 * h;
                    let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    s += w * a.eval(x) * b.eval(x);
                }
                s *= h / 3.0;
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((s - expected).abs() < 1e-8, "{s} vs {expected}");
            }
        }
    }

    #[test]
    fn first_eigenvalue_is_product_of_leading_1d_eigenvalues() {
        for lambda in [0.1, 0.3, 1.0, 3.0] {
            let s = CovarianceSpec::new(1.0, lambda).unwrap();
            let basis = KlBasis::build(s, 1, 4, BasisOptions::default()).unwrap();
            let m = modes_1d(lambda, 1).unwrap();
            assert!((basis.eigenvalues()[0] - m[0].eigenvalue.powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn eigenvalues_are_non_increasing_with_lexicographic_ties() {
        let basis = KlBasis::build(spec(), 300, 8, BasisOptions::default()).unwrap();
        let ev = basis.eigenvalues();
        for j in 1..ev.len() {
            assert!(ev[j] <= ev[j - 1]);
            if ev[j] == ev[j - 1] {
                assert!(basis.mode_pair(j) > basis.mode_pair(j - 1));
            }
        }
        assert_eq!(basis.mode_pair(1), (0, 1));
        assert_eq!(basis.mode_pair(2), (1, 0));
    }

    #[test]
    fn mercer_sums_bounded_and_monotone() {
        let basis = KlBasis::build(spec(), 200, 8, BasisOptions::default()).unwrap();
        for k in 0..=8 {
            for i in 0..=8 {
                let mut prev = 0.0;
                for j in [1, 10, 50, 100, 200] {
                    let s = basis.mercer_partial_sum(i, k, j);
                    assert!(s >= prev && s <= 1.0 + 1e-12);
                    prev = s;
                }
            }
        }
    }

    #[test]
    fn zero_parameters_give_unit_or_mean_field() {
        let mesh = MeshLevel::uniform(8).unwrap();
        let basis = KlBasis::build(spec(), 10, 8, BasisOptions::default()).unwrap();
        let f = realise_field(&basis, &ParameterVector::zeros(10, PriorKind::Gaussian), &mesh).unwrap();
        assert!(f.values().iter().all(|&v| v == 1.0));

        let opts = BasisOptions {
            prior: PriorKind::Uniform,
            mean: 10.0,
            k_star: 0.0,
        };
        let basis = KlBasis::build(spec(), 10, 8, opts).unwrap();
        let f = realise_field(&basis, &ParameterVector::zeros(10, PriorKind::Uniform), &mesh).unwrap();
        assert!(f.values().iter().all(|&v| v == 10.0));
    }

    #[test]
    fn uniform_prior_requires_admissible_mean() {
        let opts = BasisOptions {
            prior: PriorKind::Uniform,
            mean: 0.5,
            k_star: 0.0,
        };
        assert!(matches!(
            KlBasis::build(spec(), 10, 8, opts),
            Err(Error::InadmissibleUniformPrior { .. })
        ));
    }

    #[test]
    fn sampling_is_deterministic_and_supported() {
        let basis = KlBasis::build(spec(), 50, 8, BasisOptions::default()).unwrap();
        assert_eq!(sample_parameters(&basis, 11), sample_parameters(&basis, 11));
        assert_ne!(sample_parameters(&basis, 11), sample_parameters(&basis, 12));
        let opts = BasisOptions {
            prior: PriorKind::Uniform,
            mean: 100.0,
            k_star: 0.0,
        };
        let basis = KlBasis::build(spec(), 50, 8, opts).unwrap();
        for s in 0..50 {
            assert!(sample_parameters(&basis, s).values.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn gaussian_moments() {
        let basis = KlBasis::build(spec(), 5, 4, BasisOptions::default()).unwrap();
        let n = 10_000;
        let draws: Vec<ParameterVector> = (0..n).map(|s| sample_parameters(&basis, s)).collect();
        for j in 0..5 {
            let col: Vec<f64> = draws.iter().map(|d| d.values[j]).collect();
            let m = crate::stats::mean(&col);
            let v = crate::stats::sample_variance(&col);
            assert!(m.abs() < 4.0 / (n as f64).sqrt(), "mean {m}");
            assert!((v - 1.0).abs() < 0.1, "variance {v}");
        }
    }

    #[test]
    fn tabulation_rejects_non_nested_mesh() {
        let basis = KlBasis::build(spec(), 5, 8, BasisOptions::default()).unwrap();
        let mesh = MeshLevel::uniform(3).unwrap();
        let xi = ParameterVector::zeros(5, PriorKind::Gaussian);
        assert!(realise_field(&basis, &xi, &mesh).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let basis = KlBasis::build(spec(), 40, 16, BasisOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kl.txt");
        basis.write_cache(&path).unwrap();
        let back = KlBasis::read_cache(&path).unwrap();
        assert_eq!(back.eigenvalues(), basis.eigenvalues());
        let mesh = MeshLevel::uniform(16).unwrap();
        let xi = sample_parameters(&basis, 3);
        assert_eq!(
            realise_field(&basis, &xi, &mesh).unwrap().values(),
            realise_field(&back, &xi, &mesh).unwrap().values()
        );
    }
}
