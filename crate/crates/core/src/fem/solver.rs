//! Symmetric positive-definite solves: sparse Cholesky for moderate sizes,
//! Jacobi-preconditioned conjugate gradients beyond.

use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use super::FemError;

/// Lower triangle of a symmetric matrix in compressed-column form, rows
/// sorted within each column.
#[derive(Clone, Debug)]
pub struct SymCsc {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SymCsc {
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let (r, c) = if row >= col { (row, col) } else { (col, row) };
        let lo = self.col_ptr[c];
        let k = lo + self.row_idx[lo..self.col_ptr[c + 1]].binary_search(&r).expect("entry outside the sparsity pattern");
        self.values[k] += v;
    }

    /// y = A x using both triangles.
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let (r, a) = (self.row_idx[k], self.values[k]);
                y[r] += a * x[c];
                if r != c {
                    y[c] += a * x[r];
                }
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|c| if self.row_idx[self.col_ptr[c]] == c { self.values[self.col_ptr[c]] } else { 0.0 }).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Required relative residual ‖b − Ax‖/‖b‖.
    pub rel_residual: f64,
    /// Largest system handed to the direct factorisation.
    pub direct_limit: usize,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { rel_residual: 1e-10, direct_limit: 1_500_000, max_iterations: 200_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Cholesky,
    Pcg,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub kind: SolverKind,
    pub iterations: usize,
    pub rel_residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(a: &SymCsc, x: &[f64], b: &[f64], r: &mut [f64]) -> f64 {
    a.mul(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let nb = norm(b);
    if nb == 0.0 {
        norm(r)
    } else {
        norm(r) / nb
    }
}

pub fn solve_spd(a: &SymCsc, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveStats), FemError> {
    if a.n == 0 {
        return Ok((Vec::new(), SolveStats { kind: SolverKind::Cholesky, iterations: 0, rel_residual: 0.0 }));
    }
    if a.n <= opts.direct_limit {
        direct(a, b, opts)
    } else {
        pcg(a, b, opts)
    }
}

fn direct(a: &SymCsc, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveStats), FemError> {
    let symbolic = SymbolicSparseColMat::new_checked(a.n, a.n, a.col_ptr.clone(), None, a.row_idx.clone());
    let m = SparseColMat::new(symbolic, a.values.clone());
    let llt = m
        .sp_cholesky(Side::Lower)
        .map_err(|e| FemError::SingularSystem(format!("Cholesky factorisation failed: {e:?}")))?;
    let mut x = vec![0.0; a.n];
    let mut r = b.to_vec();
    let mut res = f64::INFINITY;
    // a couple of refinement steps absorb the factorisation's rounding
    for step in 0..4 {
        let rhs = Mat::<f64>::from_fn(a.n, 1, |i, _| r[i]);
        let dx = llt.solve(&rhs);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += dx[(i, 0)];
        }
        res = residual(a, &x, b, &mut r);
        if res <= opts.rel_residual {
            return Ok((x, SolveStats { kind: SolverKind::Cholesky, iterations: step + 1, rel_residual: res }));
        }
    }
    Err(FemError::NonConvergence { iterations: 4, rel_residual: res, detail: "direct solve with iterative refinement".into() })
}

fn pcg(a: &SymCsc, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveStats), FemError> {
    let n = a.n;
    let inv: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let nb = norm(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok((x, SolveStats { kind: SolverKind::Pcg, iterations: 0, rel_residual: 0.0 }));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=opts.max_iterations {
        a.mul(&p, &mut q);
        let alpha = rz / p.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let res = norm(&r) / nb;
        if res <= opts.rel_residual {
            // confirm against the true residual
            let res = residual(a, &x, b, &mut q);
            if res <= opts.rel_residual {
                return Ok((x, SolveStats { kind: SolverKind::Pcg, iterations: it, rel_residual: res }));
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = residual(a, &x, b, &mut q);
    Err(FemError::NonConvergence { iterations: opts.max_iterations, rel_residual: res, detail: "Jacobi-preconditioned CG".into() })
}
