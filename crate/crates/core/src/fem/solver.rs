use super::assembly::CsrMatrix;
use crate::{Error, Result};

/// Iteration cap of the conjugate gradient solver.
pub const MAX_CG_ITERATIONS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    Jacobi,
    /// Symmetric Gauss–Seidel sweep.
    #[default]
    SymmetricGaussSeidel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Sgs<'a> {
    a: &'a CsrMatrix,
    diag: Vec<f64>,
    diag_pos: Vec<usize>,
}

impl<'a> Sgs<'a> {
    fn new(a: &'a CsrMatrix) -> Self {
        let mut diag = vec![0.0; a.n()];
        let mut diag_pos = vec![0; a.n()];
        for i in 0..a.n() {
            for p in a.row_ptr[i]..a.row_ptr[i + 1] {
                if a.cols[p] as usize == i {
                    diag[i] = a.vals[p];
                    diag_pos[i] = p;
                }
            }
        }
        Sgs { a, diag, diag_pos }
    }

    /// `z = (D + U)^{-1} D (D + L)^{-1} r`
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let a = self.a;
        let n = a.n();
        // forward: (D + L) y = r
        for i in 0..n {
            let mut s = r[i];
            for p in a.row_ptr[i]..self.diag_pos[i] {
                s -= a.vals[p] * z[a.cols[p] as usize];
            }
            z[i] = s / self.diag[i];
        }
        // scale by D, backward: (D + U) z = D y
        for i in (0..n).rev() {
            let mut s = self.diag[i] * z[i];
            for p in self.diag_pos[i] + 1..a.row_ptr[i + 1] {
                s -= a.vals[p] * z[a.cols[p] as usize];
            }
            z[i] = s / self.diag[i];
        }
    }
}

/// Preconditioned conjugate gradients for `A x = b` with `A` symmetric
/// positive definite. `x` holds the initial guess on entry.
///
/// Stops when `‖b - A x‖ ≤ rel_tol ‖b‖`.
pub fn pcg(
    a: &CsrMatrix,
    rhs: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    precond: Preconditioner,
) -> Result<SolveStats> {
    let n = a.n();
    let b_norm = dot(rhs, rhs).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let sgs = matches!(precond, Preconditioner::SymmetricGaussSeidel).then(|| Sgs::new(a));
    let inv_diag: Vec<f64> = match &sgs {
        Some(_) => Vec::new(),
        None => a.diagonal().iter().map(|d| 1.0 / d).collect(),
    };
    let apply = |r: &[f64], z: &mut [f64]| match &sgs {
        Some(p) => p.apply(r, z),
        None => z
            .iter_mut()
            .zip(r.iter().zip(&inv_diag))
            .for_each(|(z, (r, d))| *z = r * d),
    };

    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    r.iter_mut().zip(rhs).for_each(|(r, b)| *r = b - *r);
    let target = rel_tol * b_norm;
    let mut res = dot(&r, &r).sqrt();
    if res <= target {
        return Ok(SolveStats {
            iterations: 0,
            relative_residual: res / b_norm,
        });
    }
    let mut z = vec![0.0; n];
    apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for it in 1..=MAX_CG_ITERATIONS {
        a.mul_vec(&p, &mut q);
        let alpha = rz / dot(&p, &q);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        res = dot(&r, &r).sqrt();
        if res <= target {
            return Ok(SolveStats {
                iterations: it,
                relative_residual: res / b_norm,
            });
        }
        apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_CG_ITERATIONS,
        residual: res / b_norm,
    })
}
