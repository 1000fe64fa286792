use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::mesh::{ancestor_map, barycentric, transfer_values, Rectangle, TriMesh};
use crate::quadrature::integrate_tri;
use crate::{Error, Result};

/// Right-hand side data of the fractional problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhsField {
    Constant(f64),
    /// `-1` inside the quarter discs of radius 0.6 around `(0,0)` and
    /// `(1,1)`, `+1` elsewhere.
    TestII,
    /// `amplitude · sin(iπ(x-x0)/lx) · sin(jπ(y-y0)/ly)` on `rect`.
    SineMode {
        rect: Rectangle,
        i: u32,
        j: u32,
        amplitude: f64,
    },
}

impl RhsField {
    /// The `L²`-normalized Dirichlet eigenfunction `(i, j)` of `rect`.
    pub fn eigenfunction(rect: Rectangle, i: u32, j: u32) -> RhsField {
        RhsField::SineMode {
            rect,
            i,
            j,
            amplitude: 2.0 / rect.area().sqrt(),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            RhsField::Constant(v) => v,
            RhsField::TestII => {
                let inside = x * x + y * y < 0.36 || (x - 1.0) * (x - 1.0) + (y - 1.0) * (y - 1.0) < 0.36;
                if inside {
                    -1.0
                } else {
                    1.0
                }
            }
            RhsField::SineMode {
                rect,
                i,
                j,
                amplitude,
            } => {
                amplitude
                    * (i as f64 * PI * (x - rect.x0) / rect.lx).sin()
                    * (j as f64 * PI * (y - rect.y0) / rect.ly).sin()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(
            self,
            RhsField::Constant(v) if *v == 0.0
        ) || matches!(self, RhsField::SineMode { amplitude, .. } if *amplitude == 0.0)
    }

    /// `‖f‖₂` on the domain covered by `mesh`, by per-cell quadrature.
    pub fn l2_norm(&self, mesh: &TriMesh) -> f64 {
        (0..mesh.n_cells())
            .map(|c| integrate_tri(&mesh.cell_coords(c), |x, y| self.eval(x, y).powi(2)))
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Display for RhsField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhsField::Constant(v) if *v == 1.0 => write!(f, "one"),
            RhsField::Constant(v) => write!(f, "constant({v})"),
            RhsField::TestII => write!(f, "testII"),
            RhsField::SineMode { i, j, amplitude, .. } => {
                write!(f, "sine({i},{j})x{amplitude}")
            }
        }
    }
}

/// A continuous piecewise linear function: a mesh and one value per vertex.
#[derive(Debug, Clone)]
pub struct FeFunction {
    mesh: Arc<TriMesh>,
    values: Vec<f64>,
}

impl FeFunction {
    pub fn zero(mesh: Arc<TriMesh>) -> FeFunction {
        let n = mesh.n_vertices();
        FeFunction {
            mesh,
            values: vec![0.0; n],
        }
    }

    pub fn new(mesh: Arc<TriMesh>, values: Vec<f64>) -> Result<FeFunction> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::Structure(format!(
                "{} nodal values for {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        Ok(FeFunction { mesh, values })
    }

    /// Nodal interpolant of `g`.
    pub fn interpolate<G: Fn(f64, f64) -> f64>(mesh: Arc<TriMesh>, g: G) -> FeFunction {
        let values = mesh.vertices().iter().map(|p| g(p[0], p[1])).collect();
        FeFunction { mesh, values }
    }

    /// Builds a function from values on the interior vertices; boundary
    /// vertices get zero.
    pub fn from_interior(mesh: Arc<TriMesh>, interior: &[f64]) -> FeFunction {
        let values = (0..mesh.n_vertices())
            .map(|v| mesh.dof(v).map_or(0.0, |d| interior[d]))
            .collect();
        FeFunction { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Values at interior vertices, in dof order.
    pub fn interior_values(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.n_interior()];
        for (v, &x) in self.values.iter().enumerate() {
            if let Some(d) = self.mesh.dof(v) {
                out[d] = x;
            }
        }
        out
    }

    /// Values at the three vertices of cell `c`.
    #[inline]
    pub fn cell_values(&self, c: usize) -> [f64; 3] {
        self.mesh.cells()[c].map(|v| self.values[v as usize])
    }

    pub fn eval_in_cell(&self, c: usize, x: f64, y: f64) -> f64 {
        let l = barycentric(&self.mesh.cell_coords(c), [x, y]);
        let v = self.cell_values(c);
        l[0] * v[0] + l[1] * v[1] + l[2] * v[2]
    }

    /// Point evaluation; `None` outside the mesh.
    pub fn eval(&self, x: f64, y: f64) -> Option<f64> {
        let (c, l) = self.mesh.locate(x, y)?;
        let v = self.cell_values(c);
        Some(l[0] * v[0] + l[1] * v[1] + l[2] * v[2])
    }

    pub fn l2_norm(&self) -> f64 {
        (0..self.mesh.n_cells())
            .map(|c| {
                // exact mass-matrix form for P1
                let v = self.cell_values(c);
                let s = v[0] + v[1] + v[2];
                let sq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                self.mesh.cell_area(c) * (sq + s * s) / 12.0
            })
            .sum::<f64>()
            .sqrt()
    }

    /// The same function represented on a refinement of its mesh.
    pub fn transfer_to(&self, target: &Arc<TriMesh>) -> Result<FeFunction> {
        if Arc::ptr_eq(&self.mesh, target) {
            return Ok(self.clone());
        }
        let anc = ancestor_map(&self.mesh, target)?;
        Ok(FeFunction {
            mesh: target.clone(),
            values: transfer_values(&self.mesh, &self.values, target, &anc),
        })
    }
}
