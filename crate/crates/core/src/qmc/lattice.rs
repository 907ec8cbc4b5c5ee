use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;

use super::normal::{inverse_normal_cdf, inverse_normal_cdf_clamped};
use crate::error::{Error, Result};
use crate::randfield::{ParameterVector, PriorKind};
use crate::seed;

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    File,
    Cbc,
}

/// Rank-1 lattice rule `{ frac(i z / N) : i = 1..N }`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeRule {
    n: u64,
    z: Vec<u64>,
    provenance: Provenance,
}

impl LatticeRule {
    /// Validates `gcd(z_j, N) = 1` and `1 <= z_j <= N - 1` (all zero when `N = 1`).
    pub fn new(n: u64, z: Vec<u64>, provenance: Provenance) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("lattice needs N >= 1".into()));
        }
        for (j, &zj) in z.iter().enumerate() {
            let in_range = if n == 1 { zj == 0 } else { (1..n).contains(&zj) };
            if !in_range || gcd(zj, n) != 1 {
                return Err(Error::NotCoprime {
                    component: j + 1,
                    value: zj,
                    n,
                });
            }
        }
        Ok(LatticeRule { n, z, provenance })
    }

    pub fn points(&self) -> u64 {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.z.len()
    }

    pub fn generating_vector(&self) -> &[u64] {
        &self.z
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Restriction to the first `dim` components.
    pub fn truncated(&self, dim: usize) -> Result<Self> {
        if dim > self.z.len() {
            return Err(Error::ShortGeneratingVector {
                found: self.z.len(),
                needed: dim,
            });
        }
        Ok(LatticeRule {
            n: self.n,
            z: self.z[..dim].to_vec(),
            provenance: self.provenance,
        })
    }

    /// Writes the vector as `index value` lines (1-based), the same format the
    /// loader reads.
    pub fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "# rank-1 lattice, N = {}, dimension = {}", self.n, self.z.len())?;
        for (j, z) in self.z.iter().enumerate() {
            writeln!(out, "{} {}", j + 1, z)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

/// Parses a generating vector: one integer per line, or `index value` pairs
/// with 1-based consecutive indices. Blank lines and `#` comments are
/// skipped. Components are reduced modulo `N` (published vectors target the
/// largest `N` of an embedded family) and checked for coprimality.
pub fn parse_generating_vector(reader: impl BufRead, n: u64, dim: usize) -> Result<LatticeRule> {
    let mut z = Vec::with_capacity(dim);
    for (lineno, line) in reader.lines().enumerate() {
        if z.len() == dim {
            break;
        }
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        let bad = |msg: &str| Error::parse(format!("generating vector line {}", lineno + 1), msg);
        let value: u64 = match fields.as_slice() {
            [v] => v.parse().map_err(|_| bad("not an integer"))?,
            [idx, v] => {
                let idx: usize = idx.parse().map_err(|_| bad("bad index"))?;
                if idx != z.len() + 1 {
                    return Err(bad(&format!("expected index {}, found {idx}", z.len() + 1)));
                }
                v.parse().map_err(|_| bad("not an integer"))?
            }
            _ => return Err(bad("expected `value` or `index value`")),
        };
        z.push(value % n);
    }
    if z.len() < dim {
        return Err(Error::ShortGeneratingVector {
            found: z.len(),
            needed: dim,
        });
    }
    LatticeRule::new(n, z, Provenance::File)
}

pub fn load_generating_vector(path: &Path, n: u64, dim: usize) -> Result<LatticeRule> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    parse_generating_vector(file, n, dim)
}

/// Uniform random shift on `[0, 1)^J`.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomShift {
    pub values: Vec<f64>,
    pub seed: u64,
}

impl RandomShift {
    pub fn zero(dim: usize) -> Self {
        RandomShift {
            values: vec![0.0; dim],
            seed: 0,
        }
    }

    pub fn draw(seed: u64, dim: usize) -> Self {
        let mut rng = seed::rng(&[seed]);
        RandomShift {
            values: (0..dim).map(|_| rng.gen::<f64>()).collect(),
            seed,
        }
    }
}

/// `frac(i z / N + shift)`, for `i` in `1..=N`.
pub fn lattice_point(rule: &LatticeRule, shift: &RandomShift, i: u64) -> Vec<f64> {
    let mut out = vec![0.0; rule.dimension()];
    lattice_point_into(rule, shift, i, &mut out);
    out
}

pub(crate) fn lattice_point_into(rule: &LatticeRule, shift: &RandomShift, i: u64, out: &mut [f64]) {
    let n = rule.n;
    let i = i % n;
    for ((o, &z), d) in out.iter_mut().zip(&rule.z).zip(&shift.values) {
        let r = ((i as u128 * z as u128) % n as u128) as f64 / n as f64;
        let mut v = r + d;
        if v >= 1.0 {
            v -= 1.0;
        }
        *o = v;
    }
}

/// Maps a point of the unit cube to prior coefficients: `2 v - 1` (uniform)
/// or the inverse normal CDF (Gaussian; 0 and 1 rejected).
pub fn map_to_parameters(point: &[f64], prior: PriorKind) -> Result<ParameterVector> {
    let values = match prior {
        PriorKind::Uniform => point.iter().map(|v| 2.0 * v - 1.0).collect(),
        PriorKind::Gaussian => point
            .iter()
            .map(|&v| inverse_normal_cdf(v))
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(ParameterVector { values, prior })
}

/// As [`map_to_parameters`], clamping Gaussian arguments that hit 0 exactly.
pub(crate) fn map_to_parameters_clamped(point: &[f64], prior: PriorKind) -> ParameterVector {
    let values = match prior {
        PriorKind::Uniform => point.iter().map(|v| 2.0 * v - 1.0).collect(),
        PriorKind::Gaussian => point.iter().map(|&v| inverse_normal_cdf_clamped(v)).collect(),
    };
    ParameterVector { values, prior }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_point() {
        let rule = LatticeRule::new(4, vec![1, 3], Provenance::Cbc).unwrap();
        assert_eq!(lattice_point(&rule, &RandomShift::zero(2), 2), vec![0.5, 0.5]);
        assert_eq!(lattice_point(&rule, &RandomShift::zero(2), 4), vec![0.0, 0.0]);
    }

    #[test]
    fn gcd_rules() {
        assert!(parse_generating_vector("1\n3\n5\n".as_bytes(), 2, 3).is_ok());
        let err = parse_generating_vector("1 1\n2 4\n".as_bytes(), 8, 2).unwrap_err();
        assert!(matches!(err, Error::NotCoprime { component: 2, value: 4, n: 8 }));
        assert!(matches!(
            parse_generating_vector("1 1\n".as_bytes(), 8, 2),
            Err(Error::ShortGeneratingVector { found: 1, needed: 2 })
        ));
        assert!(parse_generating_vector("1 1\n3 5\n".as_bytes(), 8, 2).is_err());
    }

    #[test]
    fn published_header_components_reduce_modulo_n() {
        let rule = parse_generating_vector("1 1\n2 182667\n".as_bytes(), 1024, 2).unwrap();
        assert_eq!(rule.generating_vector(), &[1, 182_667 % 1024]);
    }

    #[test]
    fn mapping() {
        let u = map_to_parameters(&[0.5, 0.0, 1.0], PriorKind::Uniform).unwrap();
        assert_eq!(u.values, vec![0.0, -1.0, 1.0]);
        let g = map_to_parameters(&[0.5], PriorKind::Gaussian).unwrap();
        assert_eq!(g.values, vec![0.0]);
        assert!(map_to_parameters(&[0.0], PriorKind::Gaussian).is_err());
    }
}
