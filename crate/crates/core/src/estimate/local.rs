//! Local Neumann problems in the edge-bubble enrichment space of one cell.
//!
//! The enrichment space of `K` is spanned by the three piecewise linear hats
//! at the edge midpoints of the partition of `K` obtained by two rounds of
//! newest vertex bisection. Hat `i` sits on the midpoint of edge `i`
//! (opposite local vertex `i`).

use std::sync::atomic::{AtomicBool, Ordering};

use crate::fem::{p1_gradients, p1_local, RhsField};
use crate::quadrature::TRI6;

type Mat3 = [[f64; 3]; 3];

/// Local condition number above which a warning is logged.
pub const CONDITION_WARNING: f64 = 1e12;

static WARNED: AtomicBool = AtomicBool::new(false);

/// Nodes of the refined cell: the vertices `0..3`, then the midpoint of
/// edge `i` at `3 + i`.
const SUBCELLS: [[usize; 3]; 4] = [[5, 3, 0], [5, 1, 3], [4, 3, 2], [4, 0, 3]];

/// Everything about a cell the local problems need, independent of the
/// parametric coefficients.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    /// Gradients of the barycentric coordinates.
    pub grads: [[f64; 2]; 3],
    /// Enrichment stiffness matrix.
    pub stiffness: Mat3,
    /// Enrichment mass matrix.
    pub mass: Mat3,
    /// `coupling[j][i] = (λ_j, v_i)_K`.
    pub coupling: Mat3,
    /// `(f, v_i)_K`.
    pub load: [f64; 3],
    /// Outward normal of edge `i` scaled by `|e_i| / 4`; the jump term of
    /// hat `i` is `b (∇w_K - ∇w_K') · edge_weight[i]`.
    pub edge_weight: [[f64; 2]; 3],
}

impl CellGeometry {
    pub fn new(p: &[[f64; 2]; 3], f: &RhsField) -> CellGeometry {
        let (grads, _) = p1_gradients(p);
        let mut nodes = [[0.0; 2]; 6];
        nodes[..3].copy_from_slice(p);
        for i in 0..3 {
            let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            nodes[3 + i] = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        }
        // value of λ_j at node n
        let lambda = |j: usize, n: usize| -> f64 {
            if n < 3 {
                (n == j) as u8 as f64
            } else if n - 3 == j {
                0.0
            } else {
                0.5
            }
        };
        let mut stiffness = [[0.0; 3]; 3];
        let mut mass = [[0.0; 3]; 3];
        let mut coupling = [[0.0; 3]; 3];
        let mut load = [0.0; 3];
        let f_zero = f.is_zero();
        for sub in SUBCELLS {
            let q = sub.map(|n| nodes[n]);
            let (ks, ms) = p1_local(&q);
            let (_, area) = p1_gradients(&q);
            for a in 0..3 {
                for b in 0..3 {
                    if sub[a] >= 3 && sub[b] >= 3 {
                        stiffness[sub[a] - 3][sub[b] - 3] += ks[a][b];
                        mass[sub[a] - 3][sub[b] - 3] += ms[a][b];
                    }
                    if sub[b] >= 3 {
                        for (j, row) in coupling.iter_mut().enumerate() {
                            row[sub[b] - 3] += lambda(j, sub[a]) * ms[a][b];
                        }
                    }
                }
            }
            if !f_zero {
                for (l, w) in TRI6.iter() {
                    let x = l[0] * q[0][0] + l[1] * q[1][0] + l[2] * q[2][0];
                    let y = l[0] * q[0][1] + l[1] * q[1][1] + l[2] * q[2][1];
                    let fw = w * area * f.eval(x, y);
                    for a in 0..3 {
                        if sub[a] >= 3 {
                            load[sub[a] - 3] += fw * l[a];
                        }
                    }
                }
            }
        }
        let mut edge_weight = [[0.0; 2]; 3];
        for (i, ew) in edge_weight.iter_mut().enumerate() {
            let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            *ew = [0.25 * (b[1] - a[1]), -0.25 * (b[0] - a[0])];
        }
        CellGeometry {
            grads,
            stiffness,
            mass,
            coupling,
            load,
            edge_weight,
        }
    }

    /// Gradient of the linear function with vertex values `w`.
    #[inline]
    pub fn gradient(&self, w: &[f64; 3]) -> [f64; 2] {
        let g = &self.grads;
        [
            w[0] * g[0][0] + w[1] * g[1][0] + w[2] * g[2][0],
            w[0] * g[0][1] + w[1] * g[1][1] + w[2] * g[2][1],
        ]
    }

    /// Solves the local problem for coefficients `(b, c)`, cell values `w`
    /// and per-edge gradient differences `∇w_K - ∇w_K'` (zero where there
    /// is no jump). Returns the enrichment coefficients of the local error.
    #[inline]
    pub fn solve(&self, b: f64, c: f64, w: &[f64; 3], grad_jump: &[[f64; 2]; 3]) -> [f64; 3] {
        let s = b.max(c);
        let (bs, cs) = (b / s, c / s);
        let mut a = [[0.0; 3]; 3];
        let mut rhs = [0.0; 3];
        for i in 0..3 {
            for k in 0..3 {
                a[i][k] = bs * self.stiffness[i][k] + cs * self.mass[i][k];
            }
            let cw = self.coupling[0][i] * w[0] + self.coupling[1][i] * w[1] + self.coupling[2][i] * w[2];
            let jump = grad_jump[i][0] * self.edge_weight[i][0] + grad_jump[i][1] * self.edge_weight[i][1];
            rhs[i] = (self.load[i] - c * cw - b * jump) / s;
        }
        solve3(&a, &rhs)
    }

    /// `‖Σ e_i v_i‖₂,K`
    #[inline]
    pub fn norm(&self, e: &[f64; 3]) -> f64 {
        let m = &self.mass;
        let mut s = 0.0;
        for i in 0..3 {
            s += e[i] * (m[i][0] * e[0] + m[i][1] * e[1] + m[i][2] * e[2]);
        }
        s.max(0.0).sqrt()
    }
}

/// Solves a symmetric positive definite 3×3 system with the explicit inverse.
fn solve3(a: &Mat3, r: &[f64; 3]) -> [f64; 3] {
    let c00 = a[1][1] * a[2][2] - a[1][2] * a[2][1];
    let c01 = a[1][2] * a[2][0] - a[1][0] * a[2][2];
    let c02 = a[1][0] * a[2][1] - a[1][1] * a[2][0];
    let det = a[0][0] * c00 + a[0][1] * c01 + a[0][2] * c02;
    let inv = [
        [
            c00,
            a[0][2] * a[2][1] - a[0][1] * a[2][2],
            a[0][1] * a[1][2] - a[0][2] * a[1][1],
        ],
        [
            c01,
            a[0][0] * a[2][2] - a[0][2] * a[2][0],
            a[0][2] * a[1][0] - a[0][0] * a[1][2],
        ],
        [
            c02,
            a[0][1] * a[2][0] - a[0][0] * a[2][1],
            a[0][0] * a[1][1] - a[0][1] * a[1][0],
        ],
    ]
    .map(|row| row.map(|v| v / det));
    if !WARNED.load(Ordering::Relaxed) {
        let norm1 = |m: &Mat3| {
            (0..3)
                .map(|j| (0..3).map(|i| m[i][j].abs()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        let cond = norm1(a) * norm1(&inv);
        if !(cond <= CONDITION_WARNING) && !WARNED.swap(true, Ordering::Relaxed) {
            log::warn!("local estimator system has condition number {cond:.3e}");
        }
    }
    [0, 1, 2].map(|i| inv[i][0] * r[0] + inv[i][1] * r[1] + inv[i][2] * r[2])
}
