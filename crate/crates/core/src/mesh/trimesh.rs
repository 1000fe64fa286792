use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::Arc;

use rustc_hash::FxHashMap;

use super::Domain;
use crate::quadrature::signed_area;
use crate::{Error, Result};

/// Sentinel for "no cell" / "no dof".
pub const NONE: u32 = u32::MAX;

/// Deepest bisection level; beyond it midpoint coordinates stop being exact.
pub const MAX_DEPTH: u8 = 90;

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

fn next_id() -> u64 {
    NEXT_MESH_ID.fetch_add(1, AtomicOrdering::Relaxed)
}

/// Position of a cell in the bisection forest: the initial cell it descends
/// from and the sequence of child choices, most significant bit first.
///
/// The derived order is `(root, path, depth)`, which is a preorder of the
/// forest: an ancestor sorts immediately before its descendants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    root: u32,
    path: u128,
    depth: u8,
}

impl CellKey {
    pub fn root(root: u32) -> Self {
        CellKey {
            root,
            path: 0,
            depth: 0,
        }
    }

    pub fn root_index(&self) -> u32 {
        self.root
    }

    /// Number of bisections separating the cell from its initial cell.
    pub fn generation(&self) -> u8 {
        self.depth
    }

    pub fn child(&self, which: u8) -> CellKey {
        debug_assert!(which < 2 && self.depth < 127);
        let bit = (which as u128) << (127 - self.depth as u32);
        CellKey {
            root: self.root,
            path: self.path | bit,
            depth: self.depth + 1,
        }
    }

    pub fn parent(&self) -> Option<CellKey> {
        if self.depth == 0 {
            return None;
        }
        let depth = self.depth - 1;
        Some(CellKey {
            root: self.root,
            path: self.path & prefix_mask(depth),
            depth,
        })
    }

    /// Child choice made at `level` (0-based) on the way down.
    pub fn branch(&self, level: u8) -> u8 {
        ((self.path >> (127 - level as u32)) & 1) as u8
    }

    /// True when `self` is `other` or one of its ancestors.
    pub fn contains(&self, other: &CellKey) -> bool {
        self.root == other.root
            && self.depth <= other.depth
            && other.path & prefix_mask(self.depth) == self.path
    }
}

fn prefix_mask(depth: u8) -> u128 {
    if depth == 0 {
        0
    } else {
        !0u128 << (128 - depth as u32)
    }
}

/// Vertices of the two children of `cell`, given in `(apex, left, right)`
/// order with the refinement edge `left–right`.
///
/// Both children take the midpoint of the refinement edge as their apex
/// (newest vertex), which also keeps counterclockwise orientation.
#[inline]
pub(crate) fn bisect_vertices<T: Copy>(v: [T; 3], mid: T) -> [[T; 3]; 2] {
    [[mid, v[0], v[1]], [mid, v[2], v[0]]]
}

#[inline]
pub(crate) fn midpoint(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    // exact for the dyadic coordinates produced by bisection
    [0.5 * (a[0] + b[0]) + 0.0, 0.5 * (a[1] + b[1]) + 0.0]
}

#[inline]
pub(crate) fn coord_key(p: [f64; 2]) -> (u64, u64) {
    // +0.0 folds a negative zero onto positive zero
    ((p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits())
}

/// The coarse triangulation all meshes of one run descend from.
#[derive(Debug)]
pub struct InitialMesh {
    id: u64,
    domain: Domain,
    vertices: Vec<[f64; 2]>,
    cells: Vec<[u32; 3]>,
}

impl InitialMesh {
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_coords(&self, root: u32) -> [[f64; 2]; 3] {
        let c = self.cells[root as usize];
        c.map(|v| self.vertices[v as usize])
    }

    /// Vertex coordinates of the forest cell `key`, obtained by replaying
    /// its bisections from the root.
    pub fn key_coords(&self, key: &CellKey) -> [[f64; 2]; 3] {
        let mut p = self.cell_coords(key.root);
        for level in 0..key.depth {
            let m = midpoint(p[1], p[2]);
            p = bisect_vertices(p, m)[key.branch(level) as usize];
        }
        p
    }
}

/// Orders a triangle so that it is counterclockwise and its refinement edge
/// (`v[1]–v[2]`) is the longest edge. Ties go to the edge whose opposite
/// vertex has the smallest index.
fn orient_root(tri: [u32; 3], coords: &[[f64; 2]]) -> [u32; 3] {
    let p = tri.map(|v| coords[v as usize]);
    let tri = if signed_area(p[0], p[1], p[2]) < 0.0 {
        [tri[0], tri[2], tri[1]]
    } else {
        tri
    };
    let len2 = |a: u32, b: u32| {
        let (pa, pb) = (coords[a as usize], coords[b as usize]);
        (pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)
    };
    let mut best = 0;
    for i in 1..3 {
        let li = len2(tri[(i + 1) % 3], tri[(i + 2) % 3]);
        let lb = len2(tri[(best + 1) % 3], tri[(best + 2) % 3]);
        if li > lb || (li == lb && tri[i] < tri[best]) {
            best = i;
        }
    }
    [tri[best], tri[(best + 1) % 3], tri[(best + 2) % 3]]
}

/// Uniform triangulation of `domain` into right triangles: a grid of squares,
/// each cut along its lower-left to upper-right diagonal.
pub fn make_initial_mesh(domain: Domain, target_cells: usize) -> Result<TriMesh> {
    let n = domain.grid_resolution(target_cells)?;
    let (x0, y0, side, per_side) = match domain {
        Domain::Square => (-1.0, -1.0, 2.0, n),
        Domain::UnitSquare => (0.0, 0.0, 1.0, n),
        Domain::LShape => (-1.0, -1.0, 2.0, 2 * n),
    };
    let h = side / per_side as f64;
    let coord = |i: usize| -> [f64; 2] {
        let (ix, iy) = (i % (per_side + 1), i / (per_side + 1));
        [x0 + ix as f64 * h + 0.0, y0 + iy as f64 * h + 0.0]
    };
    let square_in_domain = |ix: usize, iy: usize| -> bool {
        match domain {
            Domain::LShape => !(ix < n && iy < n),
            _ => true,
        }
    };

    let grid_points = (per_side + 1) * (per_side + 1);
    let mut used = vec![false; grid_points];
    let mut squares = Vec::new();
    for iy in 0..per_side {
        for ix in 0..per_side {
            if !square_in_domain(ix, iy) {
                continue;
            }
            let a = iy * (per_side + 1) + ix;
            let quad = [a, a + 1, a + per_side + 2, a + per_side + 1];
            for &q in &quad {
                used[q] = true;
            }
            squares.push(quad);
        }
    }
    let mut renumber = vec![NONE; grid_points];
    let mut vertices = Vec::new();
    for (i, &u) in used.iter().enumerate() {
        if u {
            renumber[i] = vertices.len() as u32;
            vertices.push(coord(i));
        }
    }
    let mut cells = Vec::with_capacity(2 * squares.len());
    for [a, b, c, d] in squares {
        let [a, b, c, d] = [a, b, c, d].map(|v| renumber[v]);
        cells.push(orient_root([a, b, c], &vertices));
        cells.push(orient_root([a, c, d], &vertices));
    }
    let initial = Arc::new(InitialMesh {
        id: next_id(),
        domain,
        vertices,
        cells,
    });
    Ok(TriMesh::initial(initial))
}

/// A conforming triangulation that is a leaf set of the bisection forest of
/// its [`InitialMesh`].
///
/// Cells are stored in forest preorder and vertices are numbered by first
/// appearance, so two meshes with the same leaves are identical values.
/// Local vertex order of every cell is `(apex, left, right)`,
/// counterclockwise, with refinement edge `left–right`.
#[derive(Debug, Clone)]
pub struct TriMesh {
    id: u64,
    initial: Arc<InitialMesh>,
    keys: Vec<CellKey>,
    cells: Vec<[u32; 3]>,
    vertices: Vec<[f64; 2]>,
    boundary: Vec<bool>,
    edges: Vec<[u32; 2]>,
    edge_cells: Vec<[u32; 2]>,
    cell_edges: Vec<[u32; 3]>,
    dof: Vec<u32>,
    n_interior: usize,
}

impl TriMesh {
    fn initial(initial: Arc<InitialMesh>) -> TriMesh {
        let leaves = (0..initial.n_cells() as u32)
            .map(|r| (CellKey::root(r), initial.cell_coords(r)))
            .collect();
        TriMesh::from_leaves(initial, leaves)
    }

    /// Builds a mesh from forest leaves and their vertex coordinates.
    pub(crate) fn from_leaves(
        initial: Arc<InitialMesh>,
        mut leaves: Vec<(CellKey, [[f64; 2]; 3])>,
    ) -> TriMesh {
        leaves.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut index: FxHashMap<(u64, u64), u32> = FxHashMap::default();
        index.reserve(leaves.len() / 2 + 16);
        let mut vertices = Vec::with_capacity(leaves.len() / 2 + 16);
        let mut keys = Vec::with_capacity(leaves.len());
        let mut cells = Vec::with_capacity(leaves.len());
        for (key, p) in leaves {
            let tri = p.map(|q| {
                *index.entry(coord_key(q)).or_insert_with(|| {
                    vertices.push(q);
                    (vertices.len() - 1) as u32
                })
            });
            keys.push(key);
            cells.push(tri);
        }

        // edges: sort (min, max, cell, local) and pair up
        let mut half: Vec<(u32, u32, u32, u8)> = Vec::with_capacity(3 * cells.len());
        for (c, t) in cells.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (t[(i + 1) % 3], t[(i + 2) % 3]);
                half.push((a.min(b), a.max(b), c as u32, i as u8));
            }
        }
        half.sort_unstable();
        let mut edges = Vec::with_capacity(half.len() / 2 + 16);
        let mut edge_cells: Vec<[u32; 2]> = Vec::with_capacity(half.len() / 2 + 16);
        let mut cell_edges = vec![[NONE; 3]; cells.len()];
        let mut i = 0;
        while i < half.len() {
            let (a, b, c, l) = half[i];
            let e = edges.len() as u32;
            edges.push([a, b]);
            let mut pair = [c, NONE];
            cell_edges[c as usize][l as usize] = e;
            let mut j = i + 1;
            while j < half.len() && half[j].0 == a && half[j].1 == b {
                let (_, _, c2, l2) = half[j];
                // a third cell on one edge only happens for corrupt input;
                // check_conforming reports it
                if pair[1] == NONE {
                    pair[1] = c2;
                }
                cell_edges[c2 as usize][l2 as usize] = e;
                j += 1;
            }
            edge_cells.push(pair);
            i = j;
        }

        let mut boundary = vec![false; vertices.len()];
        for (e, pair) in edges.iter().zip(&edge_cells) {
            if pair[1] == NONE {
                boundary[e[0] as usize] = true;
                boundary[e[1] as usize] = true;
            }
        }
        let mut dof = vec![NONE; vertices.len()];
        let mut n_interior = 0;
        for (v, &b) in boundary.iter().enumerate() {
            if !b {
                dof[v] = n_interior as u32;
                n_interior += 1;
            }
        }
        TriMesh {
            id: next_id(),
            initial,
            keys,
            cells,
            vertices,
            boundary,
            edges,
            edge_cells,
            cell_edges,
            dof,
            n_interior,
        }
    }

    /// Process-unique identity of this mesh value (clones share it).
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn initial_mesh(&self) -> &Arc<InitialMesh> {
        &self.initial
    }

    pub fn domain(&self) -> Domain {
        self.initial.domain
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Number of interior vertices, i.e. the dimension of the P1 space with
    /// homogeneous Dirichlet conditions.
    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn keys(&self) -> &[CellKey] {
        &self.keys
    }

    pub fn cells(&self) -> &[[u32; 3]] {
        &self.cells
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    /// Interior dof number of vertex `v`, if it is interior.
    pub fn dof(&self, v: usize) -> Option<usize> {
        let d = self.dof[v];
        (d != NONE).then_some(d as usize)
    }

    pub fn edges(&self) -> &[[u32; 2]] {
        &self.edges
    }

    /// The one or two cells adjacent to each edge (`NONE` in the second slot
    /// for boundary edges).
    pub fn edge_cells(&self) -> &[[u32; 2]] {
        &self.edge_cells
    }

    /// `cell_edges()[c][i]` is the edge of cell `c` opposite its local vertex `i`.
    pub fn cell_edges(&self) -> &[[u32; 3]] {
        &self.cell_edges
    }

    /// The cell across local edge `i` of cell `c`, if any.
    pub fn neighbor(&self, c: usize, i: usize) -> Option<usize> {
        let pair = self.edge_cells[self.cell_edges[c][i] as usize];
        let other = if pair[0] as usize == c { pair[1] } else { pair[0] };
        (other != NONE).then_some(other as usize)
    }

    pub fn cell_coords(&self, c: usize) -> [[f64; 2]; 3] {
        self.cells[c].map(|v| self.vertices[v as usize])
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let p = self.cell_coords(c);
        signed_area(p[0], p[1], p[2])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_area(c)).sum()
    }

    /// Largest cell diameter.
    pub fn max_diameter(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| {
                let p = self.cell_coords(c);
                (0..3).map(|i| dist(p[i], p[(i + 1) % 3])).fold(0.0_f64, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle over all cells, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut best = f64::INFINITY;
        for c in 0..self.n_cells() {
            let p = self.cell_coords(c);
            for i in 0..3 {
                let (a, b, o) = (p[(i + 1) % 3], p[(i + 2) % 3], p[i]);
                let u = [a[0] - o[0], a[1] - o[1]];
                let v = [b[0] - o[0], b[1] - o[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (norm(u) * norm(v));
                best = best.min(cos.clamp(-1.0, 1.0).acos());
            }
        }
        best
    }

    /// Same leaves as `other` (and therefore the same mesh value).
    pub fn same_cells(&self, other: &TriMesh) -> bool {
        self.keys == other.keys
    }

    /// Verifies conformity: positive areas, at most two cells per edge, and
    /// every single-cell edge on the domain boundary.
    pub fn check_conforming(&self) -> Result<()> {
        let domain = self.domain();
        for c in 0..self.n_cells() {
            if self.cell_area(c) <= 0.0 {
                return Err(Error::Structure(format!("cell {c} is degenerate or inverted")));
            }
        }
        let mut uses = vec![0u32; self.edges.len()];
        for ce in &self.cell_edges {
            for &e in ce {
                uses[e as usize] += 1;
            }
        }
        for (e, &u) in uses.iter().enumerate() {
            let [a, b] = self.edges[e];
            match u {
                1 => {
                    let m = midpoint(self.vertices[a as usize], self.vertices[b as usize]);
                    let pa = self.vertices[a as usize];
                    let pb = self.vertices[b as usize];
                    if !(domain.on_boundary(pa[0], pa[1])
                        && domain.on_boundary(pb[0], pb[1])
                        && domain.on_boundary(m[0], m[1]))
                    {
                        return Err(Error::Structure(format!(
                            "edge {e} has one cell but is not on the boundary (hanging node)"
                        )));
                    }
                }
                2 => {}
                n => {
                    return Err(Error::Structure(format!("edge {e} is shared by {n} cells")));
                }
            }
        }
        Ok(())
    }

    /// Index of a cell containing the point (linear scan).
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, [f64; 3])> {
        let tol = -1e-12;
        for c in 0..self.n_cells() {
            let l = barycentric(&self.cell_coords(c), [x, y]);
            if l.iter().all(|&li| li >= tol) {
                return Some((c, l));
            }
        }
        None
    }
}

impl PartialEq for TriMesh {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.initial, &other.initial) && self.keys == other.keys
    }
}

/// Barycentric coordinates of `x` with respect to the triangle `p`.
pub fn barycentric(p: &[[f64; 2]; 3], x: [f64; 2]) -> [f64; 3] {
    let area = signed_area(p[0], p[1], p[2]);
    let l0 = signed_area(x, p[1], p[2]) / area;
    let l1 = signed_area(p[0], x, p[2]) / area;
    [l0, l1, 1.0 - l0 - l1]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    norm([a[0] - b[0], a[1] - b[1]])
}

fn norm(u: [f64; 2]) -> f64 {
    (u[0] * u[0] + u[1] * u[1]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_square_sizes() {
        let t = make_initial_mesh(Domain::Square, 512).unwrap();
        assert_eq!(t.n_cells(), 512);
        assert_eq!(t.n_vertices(), 289);
        assert_eq!(t.n_interior(), 225);
        assert!((t.total_area() - 4.0).abs() < 1e-12);
        t.check_conforming().unwrap();
    }

    #[test]
    fn initial_lshape_sizes() {
        let t = make_initial_mesh(Domain::LShape, 384).unwrap();
        assert_eq!(t.n_cells(), 384);
        assert!((t.total_area() - 3.0).abs() < 1e-12);
        // 17×17 grid minus the 8×8 block strictly inside the removed quadrant
        assert_eq!(t.n_vertices(), 289 - 64);
        t.check_conforming().unwrap();
    }

    #[test]
    fn minimal_unit_square() {
        let t = make_initial_mesh(Domain::UnitSquare, 2).unwrap();
        assert_eq!(t.n_cells(), 2);
        assert_eq!(t.n_vertices(), 4);
        assert_eq!(t.n_interior(), 0);
    }

    #[test]
    fn unreachable_cell_count_is_config_error() {
        assert!(matches!(
            make_initial_mesh(Domain::UnitSquare, 6),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn roots_bisect_their_hypotenuse() {
        let t = make_initial_mesh(Domain::Square, 8).unwrap();
        for c in 0..t.n_cells() {
            let p = t.cell_coords(c);
            let d = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
            let ref_edge = d(p[1], p[2]);
            assert!(ref_edge > d(p[0], p[1]) && ref_edge > d(p[0], p[2]));
            assert!(t.cell_area(c) > 0.0);
        }
    }

    #[test]
    fn key_relations() {
        let r = CellKey::root(3);
        let a = r.child(1).child(0).child(1);
        assert!(r.contains(&a));
        assert!(r.child(1).contains(&a));
        assert!(!r.child(0).contains(&a));
        assert_eq!(a.parent().unwrap().parent().unwrap(), r.child(1));
        assert_eq!(a.generation(), 3);
        assert!(r < r.child(0) && r.child(0) < r.child(0).child(1) && r.child(0).child(1) < r.child(1));
        assert_eq!(a.branch(0), 1);
        assert_eq!(a.branch(1), 0);
    }

    #[test]
    fn key_coords_replay_matches_children() {
        let t = make_initial_mesh(Domain::UnitSquare, 2).unwrap();
        let init = t.initial_mesh();
        let k = CellKey::root(0).child(1).child(0);
        let p = init.key_coords(&k);
        let root = init.cell_coords(0);
        let m = midpoint(root[1], root[2]);
        let c1 = bisect_vertices(root, m)[1];
        let m2 = midpoint(c1[1], c1[2]);
        assert_eq!(p, bisect_vertices(c1, m2)[0]);
    }
}
