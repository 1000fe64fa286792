//! Spectral-series reference solutions on rectangles.
//!
//! On `[x0, x0+lx] × [y0, y0+ly]` the Dirichlet Laplacian has eigenpairs
//! `ψ_ij = 2/√(lx ly) sin(iπ(x-x0)/lx) sin(jπ(y-y0)/ly)` and
//! `λ_ij = π²(i²/lx² + j²/ly²)`, so `u = Σ λ_ij^{-s} (f, ψ_ij) ψ_ij`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::fem::{FeFunction, RhsField};
use crate::mesh::{Domain, Rectangle};
use crate::quadrature::{bary_point, gauss_legendre, TRI6};
use crate::{Error, Result};

/// First zero of the Bessel function `J_0`.
pub const BESSEL_J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// Default number of retained modes.
pub const DEFAULT_MODES: usize = 10_000;

/// Lower bound `π j₀₁² / |Ω|` of the first Dirichlet eigenvalue.
pub fn faber_krahn_lambda0(domain: Domain) -> f64 {
    PI * BESSEL_J0_FIRST_ZERO * BESSEL_J0_FIRST_ZERO / domain.area()
}

/// Dirichlet eigenvalue of mode `(i, j)` on `rect`.
pub fn eigenvalue(rect: &Rectangle, i: u32, j: u32) -> f64 {
    let (i, j) = (i as f64, j as f64);
    PI * PI * (i * i / (rect.lx * rect.lx) + j * j / (rect.ly * rect.ly))
}

/// One retained term `coeff · ψ_ij` of the series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub i: u32,
    pub j: u32,
    /// `λ_ij^{-s} (f, ψ_ij)`
    pub coeff: f64,
}

/// Truncated eigenfunction expansion of the solution.
#[derive(Debug, Clone)]
pub struct SpectralSolution {
    rect: Rectangle,
    s: f64,
    modes: Vec<Mode>,
    max_i: usize,
    max_j: usize,
    tail_bound: f64,
}

/// Nonzero Fourier-sine coefficients `(f, ψ_ij)` over the candidate box
/// `i, j ≤ k`, together with `‖f‖²`.
struct Coefficients {
    k: usize,
    values: Vec<(u32, u32, f64)>,
    norm_sq: f64,
}

fn sine_coefficients(rect: &Rectangle, f: &RhsField, s: f64) -> Result<Coefficients> {
    let sqrt_area = rect.area().sqrt();
    match *f {
        RhsField::Constant(v) => {
            let k = 4001u32;
            let values = (1..=k)
                .step_by(2)
                .flat_map(|i| {
                    (1..=k)
                        .step_by(2)
                        .map(move |j| (i, j, 8.0 * v * sqrt_area / (PI * PI * i as f64 * j as f64)))
                })
                .collect();
            Ok(Coefficients {
                k: k as usize,
                values,
                norm_sq: v * v * rect.area(),
            })
        }
        RhsField::SineMode {
            rect: r,
            i,
            j,
            amplitude,
        } => {
            if r != *rect {
                return Err(Error::Unsupported("sine data on a different rectangle".into()));
            }
            Ok(Coefficients {
                k: i.max(j) as usize,
                values: vec![(i, j, 0.5 * amplitude * sqrt_area)],
                norm_sq: 0.25 * amplitude * amplitude * rect.area(),
            })
        }
        RhsField::TestII => {
            if *rect != Domain::UnitSquare.rectangle().unwrap() {
                return Err(Error::Unsupported(
                    "the two-disc data is defined on the unit square only".into(),
                ));
            }
            // small s needs a wider box: high modes are damped less
            let k = if s < 0.4 { 600 } else { 400 };
            let q = test_ii_disc_coefficients(k);
            let mut values = Vec::with_capacity(k * k / 2);
            for i in 1..=k {
                for j in 1..=k {
                    let one = if i % 2 == 1 && j % 2 == 1 {
                        8.0 / (PI * PI * i as f64 * j as f64)
                    } else {
                        0.0
                    };
                    // second disc by the point reflection (x, y) ↦ (1-x, 1-y)
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    let c = one - 2.0 * q[(i - 1) * k + (j - 1)] * (1.0 + sign);
                    if c != 0.0 {
                        values.push((i as u32, j as u32, c));
                    }
                }
            }
            Ok(Coefficients {
                k,
                values,
                norm_sq: 1.0,
            })
        }
    }
}

/// `(χ_D, ψ_ij)` on the unit square for the quarter disc `D` of radius 0.6
/// at the origin, for `i, j ≤ k`.
///
/// With `x = 0.6 sin φ` the inner integral in `y` is explicit:
/// `2 ∫₀^{π/2} sin(iπ·0.6 sin φ) (1 - cos(jπ·0.6 cos φ)) / (jπ) · 0.6 cos φ dφ`.
pub(crate) fn test_ii_disc_coefficients(k: usize) -> Vec<f64> {
    let r = 0.6;
    let (nodes, weights) = gauss_legendre(k + 64);
    let q = nodes.len();
    let half = 0.25 * PI;
    let phi: Vec<f64> = nodes.iter().map(|t| half * (t + 1.0)).collect();
    let w: Vec<f64> = weights
        .iter()
        .zip(&phi)
        .map(|(w, p)| w * half * r * p.cos())
        .collect();
    let sines = |arg: &dyn Fn(f64) -> f64| -> Vec<f64> {
        // rows: mode index, columns: node; recurrence in the mode index
        let mut out = vec![0.0; k * q];
        for (n, &p) in phi.iter().enumerate() {
            let t = PI * arg(p);
            let (s1, c1) = t.sin_cos();
            let (mut prev, mut cur) = (0.0, s1);
            for m in 0..k {
                out[m * q + n] = cur;
                let next = 2.0 * c1 * cur - prev;
                prev = cur;
                cur = next;
            }
        }
        out
    };
    let sx = sines(&|p| r * p.sin());
    let cy = {
        let mut out = vec![0.0; k * q];
        for (n, &p) in phi.iter().enumerate() {
            let t = PI * r * p.cos();
            for m in 0..k {
                let j = (m + 1) as f64;
                out[m * q + n] = (1.0 - (j * t).cos()) / (j * PI);
            }
        }
        out
    };
    let mut res = vec![0.0; k * k];
    res.par_chunks_mut(k).enumerate().for_each(|(i, row)| {
        let a = &sx[i * q..(i + 1) * q];
        for (j, slot) in row.iter_mut().enumerate() {
            let b = &cy[j * q..(j + 1) * q];
            let acc: f64 = a.iter().zip(b).zip(&w).map(|((x, y), w)| x * y * w).sum();
            *slot = 2.0 * acc;
        }
    });
    res
}

/// Truncated series of the solution of `(-Δ)^s u = f` on a rectangle.
///
/// The `modes` terms of largest `|λ^{-s}(f, ψ)|` are kept; ties go to the
/// smaller `(i, j)`.
pub fn spectral_reference(domain: Domain, f: &RhsField, s: f64, modes: usize) -> Result<SpectralSolution> {
    let rect = domain
        .rectangle()
        .ok_or_else(|| Error::Unsupported(format!("no spectral reference on {domain}")))?;
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Domain(format!("fractional order s = {s} not in (0, 1]")));
    }
    if modes == 0 {
        return Err(Error::Config("at least one mode is required".into()));
    }
    let coef = sine_coefficients(&rect, f, s)?;
    let k = coef.k;
    let box_mass: f64 = coef.values.iter().map(|v| v.2 * v.2).sum();
    let mut cand: Vec<Mode> = coef
        .values
        .par_iter()
        .map(|&(i, j, c)| Mode {
            i,
            j,
            coeff: eigenvalue(&rect, i, j).powf(-s) * c,
        })
        .collect();
    let order = |a: &Mode, b: &Mode| {
        b.coeff
            .abs()
            .total_cmp(&a.coeff.abs())
            .then((a.i, a.j).cmp(&(b.i, b.j)))
    };
    if cand.len() > modes {
        cand.select_nth_unstable_by(modes - 1, order);
    }
    let dropped: f64 = cand.iter().skip(modes).map(|m| m.coeff * m.coeff).sum();
    cand.truncate(modes);
    cand.sort_unstable_by(order);
    // modes outside the candidate box have λ ≥ π² k² / max(lx, ly)² and
    // carry at most the Parseval remainder of f
    let lmax = rect.lx.max(rect.ly);
    let outside_lambda = PI * PI * (k as f64 + 1.0).powi(2) / (lmax * lmax);
    let remainder = (coef.norm_sq - box_mass).max(0.0);
    let tail_bound = (dropped + outside_lambda.powf(-2.0 * s) * remainder).sqrt();
    let max_i = cand.iter().map(|m| m.i).max().unwrap_or(0) as usize;
    let max_j = cand.iter().map(|m| m.j).max().unwrap_or(0) as usize;
    Ok(SpectralSolution {
        rect,
        s,
        modes: cand,
        max_i,
        max_j,
        tail_bound,
    })
}

impl SpectralSolution {
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Upper bound of `‖u - u_T‖₂` for the retained truncation `u_T`.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// `‖u_T‖₂` by Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.modes.iter().map(|m| m.coeff * m.coeff).sum::<f64>().sqrt()
    }

    fn fill_sines(n: usize, t: f64, out: &mut [f64]) {
        // out[m] = sin((m+1) t)
        let (s1, c1) = t.sin_cos();
        let (mut prev, mut cur) = (0.0, s1);
        for o in out.iter_mut().take(n) {
            *o = cur;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
    }

    fn eval_with(&self, x: f64, y: f64, sx: &mut [f64], sy: &mut [f64]) -> f64 {
        let r = &self.rect;
        Self::fill_sines(self.max_i, PI * (x - r.x0) / r.lx, sx);
        Self::fill_sines(self.max_j, PI * (y - r.y0) / r.ly, sy);
        let norm = 2.0 / r.area().sqrt();
        norm * self
            .modes
            .iter()
            .map(|m| m.coeff * sx[m.i as usize - 1] * sy[m.j as usize - 1])
            .sum::<f64>()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut sx = vec![0.0; self.max_i];
        let mut sy = vec![0.0; self.max_j];
        self.eval_with(x, y, &mut sx, &mut sy)
    }

    /// Truncation with the `t` leading modes.
    pub fn truncated(&self, t: usize) -> SpectralSolution {
        let modes: Vec<Mode> = self.modes.iter().take(t).copied().collect();
        let dropped: f64 = self.modes.iter().skip(t).map(|m| m.coeff * m.coeff).sum();
        SpectralSolution {
            rect: self.rect,
            s: self.s,
            max_i: modes.iter().map(|m| m.i).max().unwrap_or(0) as usize,
            max_j: modes.iter().map(|m| m.j).max().unwrap_or(0) as usize,
            modes,
            tail_bound: (self.tail_bound.powi(2) + dropped).sqrt(),
        }
    }
}

/// `‖u_ref - u_h‖₂` with the 6-point rule on every cell of `u_h`'s mesh.
pub fn l2_error(u_ref: &SpectralSolution, u_h: &FeFunction) -> f64 {
    let mesh = u_h.mesh();
    let per_cell: Vec<f64> = (0..mesh.n_cells())
        .into_par_iter()
        .map_init(
            || (vec![0.0; u_ref.max_i], vec![0.0; u_ref.max_j]),
            |(sx, sy), c| {
                let p = mesh.cell_coords(c);
                let v = u_h.cell_values(c);
                let area = mesh.cell_area(c);
                let mut acc = 0.0;
                for (l, w) in TRI6.iter() {
                    let x = bary_point(&p, l);
                    let uh = l[0] * v[0] + l[1] * v[1] + l[2] * v[2];
                    let d = u_ref.eval_with(x[0], x[1], sx, sy) - uh;
                    acc += w * d * d;
                }
                acc * area
            },
        )
        .collect();
    per_cell.iter().sum::<f64>().sqrt()
}

/// `eta / error`
pub fn effectivity(eta: f64, error: f64) -> Result<f64> {
    if !(error > 0.0) {
        return Err(Error::Domain(format!(
            "effectivity needs a positive error, got {error}"
        )));
    }
    Ok(eta / error)
}
