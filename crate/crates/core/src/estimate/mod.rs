//! Hierarchical a posteriori error estimation.
//!
//! Per cell, the error of a parametric solution is approximated by the
//! solution of a local Neumann problem in an enrichment space (see
//! [`local`]). Three global estimates are built from it: the sum of
//! per-problem estimates ([`global_triangle_estimate`]), the combined
//! estimate on a shared mesh ([`estimate_on_mesh`] with weights) and the
//! combined estimate on the union mesh ([`global_union_estimate`]).

pub mod local;

use std::sync::Arc;

use rayon::prelude::*;

pub use local::CellGeometry;

use crate::fem::{FeFunction, ParametricState, RhsField};
use crate::mesh::{ancestor_map, transfer_values, TriMesh};
use crate::rational::RationalScheme;
use crate::{Error, Result};

const CHUNK: usize = 256;

/// One reaction–diffusion problem on a given mesh.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub b: f64,
    pub c: f64,
    pub solution: &'a FeFunction,
}

/// Output of [`estimate_on_mesh`].
#[derive(Debug, Clone)]
pub struct MeshEstimate {
    /// `indicators[l][K] = η_{l,K}`.
    pub indicators: Vec<Vec<f64>>,
    /// `‖Σ_l weight_l e_{l,K}‖` per cell when weights were given.
    pub combined: Option<Vec<f64>>,
}

/// Global estimates at one checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalEstimates {
    pub eta_triangle: f64,
    pub eta_union: f64,
    pub per_problem: Vec<f64>,
}

fn cell_gradients(mesh: &TriMesh) -> Vec<[[f64; 2]; 3]> {
    (0..mesh.n_cells())
        .map(|c| crate::fem::p1_gradients(&mesh.cell_coords(c)).0)
        .collect()
}

#[inline]
fn grad(g: &[[f64; 2]; 3], w: &[f64; 3]) -> [f64; 2] {
    [
        w[0] * g[0][0] + w[1] * g[1][0] + w[2] * g[2][0],
        w[0] * g[0][1] + w[1] * g[1][1] + w[2] * g[2][1],
    ]
}

/// Local indicators of several problems whose solutions live on `mesh`.
///
/// With `weights`, the per-cell norm of the weighted sum of local errors is
/// returned as well (the single-mesh combined estimator).
pub fn estimate_on_mesh(
    mesh: &Arc<TriMesh>,
    f: &RhsField,
    problems: &[Problem<'_>],
    weights: Option<&[f64]>,
) -> Result<MeshEstimate> {
    for p in problems {
        if !Arc::ptr_eq(p.solution.mesh(), mesh) && !p.solution.mesh().same_cells(mesh) {
            return Err(Error::Structure(
                "solution does not live on the estimated mesh".into(),
            ));
        }
    }
    if let Some(w) = weights {
        if w.len() != problems.len() {
            return Err(Error::Config(format!(
                "{} weights for {} problems",
                w.len(),
                problems.len()
            )));
        }
    }
    let n = mesh.n_cells();
    let grads = cell_gradients(mesh);
    let np = problems.len();
    // per cell: np indicators followed by the combined value
    let stride = np + 1;
    let mut flat = vec![0.0; n * stride];
    flat.par_chunks_mut(CHUNK * stride)
        .enumerate()
        .for_each(|(chunk, out)| {
            for (off, slot) in out.chunks_mut(stride).enumerate() {
                let k = chunk * CHUNK + off;
                let geo = CellGeometry::new(&mesh.cell_coords(k), f);
                let nbrs = [0, 1, 2].map(|i| mesh.neighbor(k, i));
                let mut comb = [0.0; 3];
                for (l, p) in problems.iter().enumerate() {
                    let w = p.solution.cell_values(k);
                    let gk = grad(&grads[k], &w);
                    let jumps = nbrs.map(|nb| match nb {
                        Some(o) => {
                            let go = grad(&grads[o], &p.solution.cell_values(o));
                            [gk[0] - go[0], gk[1] - go[1]]
                        }
                        None => [0.0; 2],
                    });
                    let e = geo.solve(p.b, p.c, &w, &jumps);
                    slot[l] = geo.norm(&e);
                    if let Some(wt) = weights {
                        for i in 0..3 {
                            comb[i] += wt[l] * e[i];
                        }
                    }
                }
                slot[np] = geo.norm(&comb);
            }
        });
    let indicators = (0..np)
        .map(|l| (0..n).map(|k| flat[k * stride + l]).collect())
        .collect();
    let combined = weights.map(|_| (0..n).map(|k| flat[k * stride + np]).collect());
    Ok(MeshEstimate { indicators, combined })
}

/// `η_{l,K}` for one problem.
pub fn local_indicators(
    mesh: &Arc<TriMesh>,
    w: &FeFunction,
    b: f64,
    c: f64,
    f: &RhsField,
) -> Result<Vec<f64>> {
    let est = estimate_on_mesh(mesh, f, &[Problem { b, c, solution: w }], None)?;
    Ok(est.indicators.into_iter().next().unwrap())
}

/// `η_l = (Σ_K η_{l,K}²)^{1/2}`
pub fn problem_estimate(indicators: &[f64]) -> f64 {
    indicators.iter().map(|e| e * e).sum::<f64>().sqrt()
}

/// `η = C Σ_l a_l η_l`, together with the per-problem `η_l`.
pub fn global_triangle_estimate(
    scheme: &RationalScheme,
    states: &[ParametricState],
) -> Result<(f64, Vec<f64>)> {
    if states.len() != scheme.n() {
        return Err(Error::Structure(format!(
            "{} states for {} problems",
            states.len(),
            scheme.n()
        )));
    }
    if states.iter().any(|s| s.dirty) {
        return Err(Error::Structure(
            "estimate requested for an unsolved problem".into(),
        ));
    }
    let per: Vec<f64> = states.iter().map(|s| problem_estimate(&s.indicators)).collect();
    let sum: f64 = per.iter().zip(scheme.a()).map(|(e, a)| a * e).sum();
    Ok((scheme.scale() * sum, per))
}

/// Number of interior edges of `union` across which the solution on
/// `coarse` may jump, i.e. whose two cells lie in different cells of
/// `coarse`.
pub fn jump_edge_count(coarse: &TriMesh, union: &TriMesh) -> Result<usize> {
    let anc = ancestor_map(coarse, union)?;
    Ok(union
        .edge_cells()
        .iter()
        .filter(|p| p[1] != crate::mesh::NONE && anc[p[0] as usize] != anc[p[1] as usize])
        .count())
}

/// Per-cell combined local errors on the union mesh and their global norm.
#[derive(Debug, Clone)]
pub struct UnionEstimate {
    pub total: f64,
    pub per_cell: Vec<f64>,
}

/// `η̃ = (Σ_K̃ ‖C Σ_l a_l e_{l,K̃}‖²)^{1/2}`, solving every local problem on
/// the cells of `union` with the parametric solutions transferred there.
pub fn global_union_estimate(
    scheme: &RationalScheme,
    states: &[ParametricState],
    union: &Arc<TriMesh>,
    f: &RhsField,
) -> Result<UnionEstimate> {
    if states.len() != scheme.n() {
        return Err(Error::Structure(format!(
            "{} states for {} problems",
            states.len(),
            scheme.n()
        )));
    }
    // ancestor maps per distinct mesh
    let mut meshes: Vec<&Arc<TriMesh>> = Vec::new();
    let mut group = Vec::with_capacity(states.len());
    for s in states {
        let g = match meshes.iter().position(|m| Arc::ptr_eq(m, &s.mesh)) {
            Some(g) => g,
            None => {
                meshes.push(&s.mesh);
                meshes.len() - 1
            }
        };
        group.push(g);
    }
    let ancestors: Vec<Vec<u32>> = meshes
        .par_iter()
        .map(|m| ancestor_map(m, union))
        .collect::<Result<_>>()?;
    let values: Vec<Vec<f64>> = states
        .par_iter()
        .zip(&group)
        .map(|(s, &g)| transfer_values(&s.mesh, s.solution.values(), union, &ancestors[g]))
        .collect();
    let weights: Vec<f64> = scheme.a().iter().map(|a| scheme.scale() * a).collect();
    let coeffs: Vec<(f64, f64)> = (0..scheme.n()).map(|l| (scheme.b()[l], scheme.c(l))).collect();
    let grads = cell_gradients(union);
    let cells = union.cells();
    let cell_vals = |l: usize, k: usize| cells[k].map(|v| values[l][v as usize]);

    let n = union.n_cells();
    let mut per_cell = vec![0.0; n];
    per_cell
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(chunk, out)| {
            for (off, slot) in out.iter_mut().enumerate() {
                let k = chunk * CHUNK + off;
                let geo = CellGeometry::new(&union.cell_coords(k), f);
                let nbrs = [0, 1, 2].map(|i| union.neighbor(k, i));
                let mut comb = [0.0; 3];
                for l in 0..states.len() {
                    let anc = &ancestors[group[l]];
                    let w = cell_vals(l, k);
                    let gk = grad(&grads[k], &w);
                    let jumps = nbrs.map(|nb| match nb {
                        // union edges inside one cell of T_l carry no jump
                        Some(o) if anc[o] != anc[k] => {
                            let go = grad(&grads[o], &cell_vals(l, o));
                            [gk[0] - go[0], gk[1] - go[1]]
                        }
                        _ => [0.0; 2],
                    });
                    let (b, c) = coeffs[l];
                    let e = geo.solve(b, c, &w, &jumps);
                    for i in 0..3 {
                        comb[i] += weights[l] * e[i];
                    }
                }
                *slot = geo.norm(&comb);
            }
        });
    let total = per_cell.iter().map(|e| e * e).sum::<f64>().sqrt();
    Ok(UnionEstimate { total, per_cell })
}

/// Both global estimates for clean states.
pub fn global_estimates(
    scheme: &RationalScheme,
    states: &[ParametricState],
    union: &Arc<TriMesh>,
    f: &RhsField,
) -> Result<GlobalEstimates> {
    let (eta_triangle, per_problem) = global_triangle_estimate(scheme, states)?;
    let eta_union = global_union_estimate(scheme, states, union, f)?.total;
    Ok(GlobalEstimates {
        eta_triangle,
        eta_union,
        per_problem,
    })
}
