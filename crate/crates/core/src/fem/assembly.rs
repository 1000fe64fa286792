use crate::mesh::TriMesh;
use crate::quadrature::TRI6;

use super::RhsField;

/// Symmetric sparse matrix in compressed row storage.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn n(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            *yi = self.cols[lo..hi]
                .iter()
                .zip(&self.vals[lo..hi])
                .map(|(&j, &a)| a * x[j as usize])
                .sum();
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[lo..hi].binary_search(&(j as u32)) {
            Ok(p) => self.vals[lo + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.get(i, i)).collect()
    }

    /// `α A + β B` for matrices with the same pattern.
    pub fn combine(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> CsrMatrix {
        debug_assert_eq!(self.cols, other.cols);
        CsrMatrix {
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals: self
                .vals
                .iter()
                .zip(&other.vals)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        }
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n() {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p] as usize;
                worst = worst.max((self.vals[p] - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Stiffness and mass matrices of the P1 space with homogeneous Dirichlet
/// conditions, on a common sparsity pattern.
#[derive(Debug, Clone)]
pub struct MeshOperators {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
}

/// Gradients of the barycentric coordinates and the area of a triangle.
#[inline]
pub(crate) fn p1_gradients(p: &[[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]));
    let inv = 0.5 / area;
    let mut g = [[0.0; 2]; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        *gi = [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv];
    }
    (g, area)
}

/// Local P1 stiffness and mass matrices of a triangle.
#[inline]
pub(crate) fn p1_local(p: &[[f64; 2]; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let (g, area) = p1_gradients(p);
    let mut k = [[0.0; 3]; 3];
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
            m[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (k, m)
}

pub fn assemble_operators(mesh: &TriMesh) -> MeshOperators {
    let n = mesh.n_interior();
    let dof = |v: u32| mesh.dof(v as usize);
    // pattern: diagonal plus interior-interior edges
    let mut count = vec![1usize; n];
    for e in mesh.edges() {
        if let (Some(a), Some(b)) = (dof(e[0]), dof(e[1])) {
            count[a] += 1;
            count[b] += 1;
        }
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    for c in &count {
        row_ptr.push(row_ptr.last().unwrap() + c);
    }
    let nnz = *row_ptr.last().unwrap();
    let mut cols = vec![0u32; nnz];
    let mut fill: Vec<usize> = row_ptr[..n].to_vec();
    for (i, f) in fill.iter_mut().enumerate() {
        cols[*f] = i as u32;
        *f += 1;
    }
    for e in mesh.edges() {
        if let (Some(a), Some(b)) = (dof(e[0]), dof(e[1])) {
            cols[fill[a]] = b as u32;
            fill[a] += 1;
            cols[fill[b]] = a as u32;
            fill[b] += 1;
        }
    }
    for i in 0..n {
        cols[row_ptr[i]..row_ptr[i + 1]].sort_unstable();
    }
    let mut kv = vec![0.0; nnz];
    let mut mv = vec![0.0; nnz];
    for c in 0..mesh.n_cells() {
        let (k, m) = p1_local(&mesh.cell_coords(c));
        let d = mesh.cells()[c].map(dof);
        for i in 0..3 {
            let Some(r) = d[i] else { continue };
            let row = &cols[row_ptr[r]..row_ptr[r + 1]];
            for j in 0..3 {
                let Some(col) = d[j] else { continue };
                let p = row_ptr[r] + row.binary_search(&(col as u32)).expect("pattern entry");
                kv[p] += k[i][j];
                mv[p] += m[i][j];
            }
        }
    }
    MeshOperators {
        stiffness: CsrMatrix {
            row_ptr: row_ptr.clone(),
            cols: cols.clone(),
            vals: kv,
        },
        mass: CsrMatrix {
            row_ptr,
            cols,
            vals: mv,
        },
    }
}

/// `(f, φ_i)` for every interior hat function.
pub fn assemble_load(mesh: &TriMesh, f: &RhsField) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_interior()];
    if f.is_zero() {
        return out;
    }
    for c in 0..mesh.n_cells() {
        let p = mesh.cell_coords(c);
        let area = mesh.cell_area(c);
        let mut local = [0.0; 3];
        for (l, w) in TRI6.iter() {
            let x = l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0];
            let y = l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1];
            let fw = w * f.eval(x, y);
            for i in 0..3 {
                local[i] += fw * l[i];
            }
        }
        for (i, &v) in mesh.cells()[c].iter().enumerate() {
            if let Some(d) = mesh.dof(v as usize) {
                out[d] += area * local[i];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_initial_mesh, refine, Domain};

    #[test]
    fn operators_are_symmetric_with_positive_diagonal() {
        let t = make_initial_mesh(Domain::LShape, 96).unwrap();
        let t = refine(&t, &[3, 50, 51]).unwrap();
        let ops = assemble_operators(&t);
        assert!(ops.stiffness.asymmetry() < 1e-14);
        assert!(ops.mass.asymmetry() < 1e-14);
        assert!(ops.stiffness.diagonal().iter().all(|&d| d > 0.0));
        assert!(ops.mass.diagonal().iter().all(|&d| d > 0.0));
    }

    #[test]
    fn stiffness_row_sums_vanish_away_from_boundary() {
        // K applied to the all-ones vector is zero at vertices not adjacent
        // to the boundary
        let t = make_initial_mesh(Domain::Square, 128).unwrap();
        let ops = assemble_operators(&t);
        let ones = vec![1.0; ops.stiffness.n()];
        let mut y = vec![0.0; ones.len()];
        ops.stiffness.mul_vec(&ones, &mut y);
        let v = t
            .vertices()
            .iter()
            .position(|p| p[0] == 0.0 && p[1] == 0.0)
            .unwrap();
        assert!(y[t.dof(v).unwrap()].abs() < 1e-13);
    }

    #[test]
    fn load_of_constant_is_a_third_of_the_support() {
        // the centre of the 8-cell unit square touches 6 cells of area 1/8
        let t = make_initial_mesh(Domain::UnitSquare, 8).unwrap();
        let f = assemble_load(&t, &RhsField::Constant(1.0));
        assert_eq!(f.len(), 1);
        assert!((f[0] - 0.25).abs() < 1e-15);
    }
}
