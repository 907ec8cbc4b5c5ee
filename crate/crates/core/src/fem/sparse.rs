//! Compressed sparse row storage and a Jacobi-preconditioned conjugate
//! gradient solver.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub(crate) rows: usize,
    pub(crate) indptr: Vec<usize>,
    pub(crate) indices: Vec<usize>,
    pub(crate) data: Vec<f64>,
}

impl CsrMatrix {
    /// Builds the symbolic pattern from per-row sorted, deduplicated column lists.
    pub(crate) fn from_pattern(columns: Vec<Vec<usize>>) -> Self {
        let rows = columns.len();
        let mut indptr = Vec::with_capacity(rows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        for mut cols in columns {
            cols.sort_unstable();
            cols.dedup();
            indices.extend_from_slice(&cols);
            indptr.push(indices.len());
        }
        let nnz = indices.len();
        CsrMatrix {
            rows,
            indptr,
            indices,
            data: vec![0.0; nnz],
        }
    }

    pub(crate) fn position(&self, row: usize, col: usize) -> Option<usize> {
        let range = self.indptr[row]..self.indptr[row + 1];
        self.indices[range.clone()]
            .binary_search(&col)
            .ok()
            .map(|k| range.start + k)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |k| self.data[k])
    }

    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[row]..self.indptr[row + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.data[range].iter().copied())
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.rows) {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, r)).collect()
    }
}

/// Outcome of a conjugate gradient solve.
#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `|b - A x| / |b|` recomputed from the returned iterate.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned CG with the matrix diagonal as preconditioner.
///
/// Converges on the recurrence residual, then recomputes `b - A x`; if that
/// drifted above `tol` the iteration restarts from the current iterate.
pub fn pcg(matrix: &CsrMatrix, rhs: &[f64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = matrix.rows;
    let b_norm = dot(rhs, rhs).sqrt();
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = matrix.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut target = 0.5 * tol * b_norm;
    loop {
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        loop {
            let res = dot(&r, &r).sqrt();
            if history.len() == 8 {
                history.remove(0);
            }
            history.push(res / b_norm);
            if res <= target {
                break;
            }
            if iterations >= max_iter {
                return Err(Error::NotConverged {
                    iterations,
                    residual: res / b_norm,
                    history,
                });
            }
            matrix.matvec(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
            iterations += 1;
        }
        matrix.matvec(&x, &mut ap);
        for i in 0..n {
            r[i] = rhs[i] - ap[i];
        }
        let true_res = dot(&r, &r).sqrt() / b_norm;
        if true_res <= tol {
            return Ok(CgOutcome {
                solution: x,
                iterations,
                relative_residual: true_res,
            });
        }
        target *= 0.1;
    }
}
/// Cholesky factor of a symmetric positive definite band matrix, stored
/// row-wise: `band[i * (w + 1) + k] = L[i][i - w + k]`.
#[derive(Clone, Debug)]
pub struct BandCholesky {
    rows: usize,
    width: usize,
    band: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(matrix: &CsrMatrix) -> Result<Self> {
        let n = matrix.rows;
        let mut w = 0;
        for r in 0..n {
            for &c in &matrix.indices[matrix.indptr[r]..matrix.indptr[r + 1]] {
                w = w.max(r.abs_diff(c));
            }
        }
        let stride = w + 1;
        let mut band = vec![0.0; n * stride];
        for r in 0..n {
            for k in matrix.indptr[r]..matrix.indptr[r + 1] {
                let c = matrix.indices[k];
                if c <= r {
                    band[r * stride + w + c - r] = matrix.data[k];
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(w);
            for j in lo..=i {
                let start = lo.max(j.saturating_sub(w));
                let mut s = band[i * stride + w + j - i];
                let ri = &band[i * stride + w + start - i..i * stride + w + j - i];
                let rj = &band[j * stride + w + start - j..j * stride + w];
                for (a, b) in ri.iter().zip(rj) {
                    s -= a * b;
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NotConverged {
                            iterations: 0,
                            residual: f64::NAN,
                            history: vec![s],
                        });
                    }
                    band[i * stride + w] = s.sqrt();
                } else {
                    band[i * stride + w + j - i] = s / band[j * stride + w];
                }
            }
        }
        Ok(BandCholesky { rows: n, width: w, band })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Approximate flop count of the factorisation.
    pub fn work(&self) -> u64 {
        (self.rows * self.width * self.width) as u64
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, w) = (self.rows, self.width);
        let stride = w + 1;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(w);
            let mut s = y[i];
            for j in lo..i {
                s -= self.band[i * stride + w + j - i] * y[j];
            }
            y[i] = s / self.band[i * stride + w];
        }
        for i in (0..n).rev() {
            y[i] /= self.band[i * stride + w];
            let yi = y[i];
            for j in i.saturating_sub(w)..i {
                y[j] -= self.band[i * stride + w + j - i] * yi;
            }
        }
        y
    }
}

/// Direct band Cholesky solve with iterative refinement until the relative
/// residual is below `tol`.
pub fn band_solve(matrix: &CsrMatrix, rhs: &[f64], tol: f64) -> Result<CgOutcome> {
    let n = matrix.rows;
    let b_norm = dot(rhs, rhs).sqrt();
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let chol = BandCholesky::factor(matrix)?;
    let mut x = chol.solve(rhs);
    let mut r = vec![0.0; n];
    let mut history = Vec::new();
    for step in 0..4 {
        matrix.matvec(&x, &mut r);
        for i in 0..n {
            r[i] = rhs[i] - r[i];
        }
        let res = dot(&r, &r).sqrt() / b_norm;
        history.push(res);
        if res <= tol {
            return Ok(CgOutcome {
                solution: x,
                iterations: step,
                relative_residual: res,
            });
        }
        let dx = chol.solve(&r);
        for i in 0..n {
            x[i] += dx[i];
        }
    }
    Err(Error::NotConverged {
        iterations: 4,
        residual: *history.last().unwrap(),
        history,
    })
}

