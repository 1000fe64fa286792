//! P1 Galerkin discretization of `-b Δw + c w = f` with homogeneous
//! Dirichlet data, and recombination of parametric solutions.

mod assembly;
mod function;
mod solver;

use std::sync::Arc;

pub use assembly::{assemble_load, assemble_operators, CsrMatrix, MeshOperators};
pub(crate) use assembly::{p1_gradients, p1_local};
pub use function::{FeFunction, RhsField};
pub use solver::{pcg, Preconditioner, SolveStats, MAX_CG_ITERATIONS};

use crate::mesh::{ancestor_map, transfer_values, TriMesh};
use crate::rational::RationalScheme;
use crate::{Error, Result};

/// Default relative residual tolerance of the algebraic solver.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Per-problem state of the adaptive loop.
#[derive(Debug, Clone)]
pub struct ParametricState {
    pub index: usize,
    pub mesh: Arc<TriMesh>,
    pub solution: FeFunction,
    /// `η_{l,K}`, one per cell of `mesh`.
    pub indicators: Vec<f64>,
    pub dirty: bool,
}

/// Operators and load vector of one mesh, shared by all problems on it.
#[derive(Debug)]
pub struct Discretization {
    mesh: Arc<TriMesh>,
    ops: MeshOperators,
    load: Vec<f64>,
}

impl Discretization {
    pub fn new(mesh: Arc<TriMesh>, f: &RhsField) -> Discretization {
        let ops = assemble_operators(&mesh);
        let load = assemble_load(&mesh, f);
        Discretization { mesh, ops, load }
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn operators(&self) -> &MeshOperators {
        &self.ops
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    /// Solves `(b K + c M) w = F`, scaled by `1 / max(b, c)`, starting from
    /// `guess` (interior values) when given.
    pub fn solve(
        &self,
        b: f64,
        c: f64,
        guess: Option<Vec<f64>>,
        rel_tol: f64,
    ) -> Result<(FeFunction, SolveStats)> {
        if !(b > 0.0 && c > 0.0) {
            return Err(Error::Domain(format!(
                "coefficients b = {b}, c = {c} must be positive"
            )));
        }
        let n = self.mesh.n_interior();
        let s = b.max(c);
        let a = self.ops.stiffness.combine(b / s, &self.ops.mass, c / s);
        let rhs: Vec<f64> = self.load.iter().map(|v| v / s).collect();
        let mut x = match guess {
            Some(g) if g.len() == n => g,
            _ => vec![0.0; n],
        };
        let stats = pcg(&a, &rhs, &mut x, rel_tol, Preconditioner::default())?;
        Ok((FeFunction::from_interior(self.mesh.clone(), &x), stats))
    }
}

/// Galerkin solution of `-b Δw + c w = f` on `mesh`.
pub fn assemble_and_solve(
    mesh: &Arc<TriMesh>,
    b: f64,
    c: f64,
    f: &RhsField,
    rel_tol: f64,
) -> Result<FeFunction> {
    let disc = Discretization::new(mesh.clone(), f);
    disc.solve(b, c, None, rel_tol).map(|(w, _)| w)
}

/// `C Σ_l a_l w_l` represented on `union`.
///
/// Solutions living on the same mesh are summed there first, so each
/// distinct mesh is transferred once.
pub fn combine_on_union(
    scheme: &RationalScheme,
    solutions: &[&FeFunction],
    union: &Arc<TriMesh>,
) -> Result<FeFunction> {
    if solutions.len() != scheme.n() {
        return Err(Error::Structure(format!(
            "{} solutions for {} problems",
            solutions.len(),
            scheme.n()
        )));
    }
    let mut groups: Vec<(&Arc<TriMesh>, Vec<f64>)> = Vec::new();
    for (w, &a) in solutions.iter().zip(scheme.a()) {
        let idx = match groups.iter().position(|(m, _)| Arc::ptr_eq(m, w.mesh())) {
            Some(i) => i,
            None => {
                groups.push((w.mesh(), vec![0.0; w.mesh().n_vertices()]));
                groups.len() - 1
            }
        };
        let acc = &mut groups[idx].1;
        for (s, v) in acc.iter_mut().zip(w.values()) {
            *s += a * v;
        }
    }
    let mut total = vec![0.0; union.n_vertices()];
    for (mesh, vals) in groups {
        let on_union = if mesh.same_cells(union) {
            vals
        } else {
            let anc = ancestor_map(mesh, union)?;
            transfer_values(mesh, &vals, union, &anc)
        };
        for (t, v) in total.iter_mut().zip(on_union) {
            *t += v;
        }
    }
    let c = scheme.scale();
    total.iter_mut().for_each(|v| *v *= c);
    FeFunction::new(union.clone(), total)
}

/// `‖f‖₂` for a finite element function.
pub fn l2_norm(f: &FeFunction) -> f64 {
    f.l2_norm()
}
