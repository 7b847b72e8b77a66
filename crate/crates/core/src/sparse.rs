//! Minimal sparse symmetric linear algebra: CSR storage, Jacobi-
//! preconditioned conjugate gradients, and a dense LU fallback used as the
//! direct-solve oracle on coarse problems.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets; duplicate entries accumulate.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> CsrMatrix {
        let mut counts = vec![0usize; n + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(i, j, v) in triplets {
            let slot = next[i];
            cols[slot] = j;
            vals[slot] = v;
            next[i] += 1;
        }
        // sort each row and merge duplicates
        let mut out_cols = Vec::with_capacity(triplets.len());
        let mut out_vals = Vec::with_capacity(triplets.len());
        let mut row_ptr = vec![0usize; n + 1];
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            scratch.clear();
            for k in counts[i]..counts[i + 1] {
                scratch.push((cols[k], vals[k]));
            }
            scratch.sort_by_key(|e| e.0);
            let mut idx = 0;
            while idx < scratch.len() {
                let col = scratch[idx].0;
                let mut v = 0.0;
                while idx < scratch.len() && scratch[idx].0 == col {
                    v += scratch[idx].1;
                    idx += 1;
                }
                out_cols.push(col);
                out_vals.push(v);
            }
            row_ptr[i + 1] = out_cols.len();
        }
        CsrMatrix { n, row_ptr, cols: out_cols, vals: out_vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[k] == i {
                    d[i] = self.vals[k];
                }
            }
        }
        d
    }

    /// Max |A − Aᵀ| entry, for symmetry checks.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                let vt = self.get(j, i);
                worst = worst.max((self.vals[k] - vt).abs());
            }
        }
        worst
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            if self.cols[k] == j {
                return self.vals[k];
            }
        }
        0.0
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                a[i][self.cols[k]] = self.vals[k];
            }
        }
        a
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgSummary {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for SPD systems.
/// Converges when ‖Ax − b‖₂ ≤ tol_rel·‖b‖₂.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    tol_rel: f64,
    max_iter: usize,
) -> Result<CgSummary> {
    let n = a.dim();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(CgSummary { iterations: 0, relative_residual: 0.0 });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 0..max_iter {
        let rnorm = norm(&r);
        if rnorm <= tol_rel * bnorm {
            return Ok(CgSummary { iterations: it, relative_residual: rnorm / bnorm });
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverDivergence { residual: rnorm / bnorm, iterations: it });
        }
        let alpha = rz / pap;
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
    }
    let rnorm = norm(&r);
    if rnorm <= tol_rel * bnorm {
        Ok(CgSummary { iterations: max_iter, relative_residual: rnorm / bnorm })
    } else {
        Err(Error::SolverDivergence { residual: rnorm / bnorm, iterations: max_iter })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Dense LU solve with partial pivoting; the direct-solve oracle for coarse
/// systems.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x: Vec<f64> = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (pivot_row, pivot_val) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if pivot_val < 1e-300 {
            return Err(Error::SolverDivergence { residual: f64::INFINITY, iterations: col });
        }
        m.swap(col, pivot_row);
        x.swap(col, pivot_row);
        perm.swap(col, pivot_row);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= m[col][col];
        for r in 0..col {
            x[r] -= m[r][col] * x[col];
        }
    }
    Ok(x)
}

/// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations.
/// The matrix is destroyed. Used as the dense spectral oracle.
pub fn symmetric_eigenvalues(a: &mut [Vec<f64>], max_sweeps: usize) -> Vec<f64> {
    let n = a.len();
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() < 1e-13 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn csr_accumulates_duplicates() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 5.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 1), 5.0);
        assert_eq!(a.get(0, 1), 0.0);
    }

    #[test]
    fn cg_matches_dense_lu() {
        let n = 80;
        let a = laplacian_1d(n);
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let b: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let mut x = vec![0.0; n];
        let summary = conjugate_gradient(&a, &b, &mut x, 1e-12, 10_000).unwrap();
        assert!(summary.relative_residual <= 1e-12);
        let dense = dense_solve(&a.to_dense(), &b).unwrap();
        for i in 0..n {
            assert!((x[i] - dense[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn cg_zero_rhs_returns_zero() {
        let a = laplacian_1d(10);
        let mut x = vec![1.0; 10];
        let s = conjugate_gradient(&a, &vec![0.0; 10], &mut x, 1e-12, 100).unwrap();
        assert_eq!(s.iterations, 0);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cg_rejects_indefinite_directions() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        let mut x = vec![0.0; 2];
        let r = conjugate_gradient(&a, &[0.0, 1.0], &mut x, 1e-12, 100);
        assert!(matches!(r, Err(Error::SolverDivergence { .. })));
    }

    #[test]
    fn symmetric_laplacian_reports_no_asymmetry() {
        assert_eq!(laplacian_1d(30).asymmetry(), 0.0);
    }

    #[test]
    fn jacobi_eigenvalues_of_1d_laplacian() {
        // Known spectrum: 2 − 2 cos(kπ/(n+1)).
        let n = 12;
        let mut a = laplacian_1d(n).to_dense();
        let mut eigs = symmetric_eigenvalues(&mut a, 100);
        eigs.sort_by(f64::total_cmp);
        for (k, e) in eigs.iter().enumerate() {
            let expect = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((e - expect).abs() < 1e-10);
        }
    }
}
