use std::collections::VecDeque;

use rustc_hash::{FxHashMap, FxHashSet};

use super::trimesh::{bisect_vertices, coord_key, midpoint, CellKey, TriMesh, MAX_DEPTH};
use crate::{Error, Result};

type Point = [f64; 2];
type PointKey = (u64, u64);

fn edge_key(a: Point, b: Point) -> (PointKey, PointKey) {
    let (ka, kb) = (coord_key(a), coord_key(b));
    if ka <= kb {
        (ka, kb)
    } else {
        (kb, ka)
    }
}

/// Working copy of a leaf set during conformity closure.
struct Closure {
    keys: Vec<CellKey>,
    coords: Vec<[Point; 3]>,
    alive: Vec<bool>,
    vertices: FxHashSet<PointKey>,
    edges: FxHashMap<(PointKey, PointKey), [u32; 2]>,
}

impl Closure {
    fn new(mesh: &TriMesh) -> Closure {
        let n = mesh.n_cells();
        let mut c = Closure {
            keys: mesh.keys().to_vec(),
            coords: (0..n).map(|i| mesh.cell_coords(i)).collect(),
            alive: vec![true; n],
            vertices: mesh.vertices().iter().map(|&p| coord_key(p)).collect(),
            edges: FxHashMap::default(),
        };
        c.edges.reserve(mesh.edges().len() * 2);
        for i in 0..n {
            c.link(i as u32);
        }
        c
    }

    fn link(&mut self, cell: u32) {
        let p = self.coords[cell as usize];
        for i in 0..3 {
            let slot = self
                .edges
                .entry(edge_key(p[(i + 1) % 3], p[(i + 2) % 3]))
                .or_insert([u32::MAX; 2]);
            if slot[0] == u32::MAX {
                slot[0] = cell;
            } else {
                slot[1] = cell;
            }
        }
    }

    fn unlink(&mut self, cell: u32) {
        let p = self.coords[cell as usize];
        for i in 0..3 {
            let k = edge_key(p[(i + 1) % 3], p[(i + 2) % 3]);
            if let Some(slot) = self.edges.get_mut(&k) {
                if slot[0] == cell {
                    slot[0] = slot[1];
                    slot[1] = u32::MAX;
                } else if slot[1] == cell {
                    slot[1] = u32::MAX;
                }
                if slot[0] == u32::MAX {
                    self.edges.remove(&k);
                }
            }
        }
    }

    fn has_hanging_node(&self, cell: usize) -> bool {
        let p = self.coords[cell];
        (0..3).any(|i| {
            self.vertices
                .contains(&coord_key(midpoint(p[(i + 1) % 3], p[(i + 2) % 3])))
        })
    }

    /// Bisects `cell`; returns the two children and the neighbor across
    /// the bisected edge, if any.
    fn bisect(&mut self, cell: u32) -> Result<([u32; 2], Option<u32>)> {
        let c = cell as usize;
        let key = self.keys[c];
        if key.generation() >= MAX_DEPTH {
            return Err(Error::Structure(format!(
                "bisection depth limit {MAX_DEPTH} reached"
            )));
        }
        let p = self.coords[c];
        let neighbor = self
            .edges
            .get(&edge_key(p[1], p[2]))
            .and_then(|slot| slot.iter().copied().find(|&o| o != u32::MAX && o != cell));
        self.unlink(cell);
        self.alive[c] = false;
        let m = midpoint(p[1], p[2]);
        self.vertices.insert(coord_key(m));
        let mut children = [0u32; 2];
        for (which, child) in bisect_vertices(p, m).into_iter().enumerate() {
            let id = self.keys.len() as u32;
            self.keys.push(key.child(which as u8));
            self.coords.push(child);
            self.alive.push(true);
            self.link(id);
            children[which] = id;
        }
        Ok((children, neighbor))
    }
}

/// Bisects every marked cell at least once and closes the result to a
/// conforming mesh by newest vertex bisection.
///
/// `marked` holds cell indices of `mesh`; duplicates are ignored.
pub fn refine(mesh: &TriMesh, marked: &[usize]) -> Result<TriMesh> {
    if let Some(&bad) = marked.iter().find(|&&c| c >= mesh.n_cells()) {
        return Err(Error::Config(format!(
            "marked cell {bad} out of range for a mesh with {} cells",
            mesh.n_cells()
        )));
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }
    let mut work = Closure::new(mesh);
    let mut forced = vec![false; mesh.n_cells()];
    let mut queue = VecDeque::with_capacity(2 * marked.len());
    for &c in marked {
        if !forced[c] {
            forced[c] = true;
            queue.push_back(c as u32);
        }
    }
    while let Some(cell) = queue.pop_front() {
        let c = cell as usize;
        if !work.alive[c] {
            continue;
        }
        let must = forced.get(c).copied().unwrap_or(false);
        if !must && !work.has_hanging_node(c) {
            continue;
        }
        if let Some(f) = forced.get_mut(c) {
            *f = false;
        }
        let (children, neighbor) = work.bisect(cell)?;
        queue.extend(children);
        queue.extend(neighbor);
    }
    let leaves = work
        .keys
        .iter()
        .zip(&work.coords)
        .zip(&work.alive)
        .filter(|(_, &a)| a)
        .map(|((&k, &p), _)| (k, p))
        .collect();
    Ok(TriMesh::from_leaves(mesh.initial_mesh().clone(), leaves))
}

/// Splits every cell into four by two rounds of bisection.
pub fn uniform_refine(mesh: &TriMesh) -> Result<TriMesh> {
    let all: Vec<usize> = (0..mesh.n_cells()).collect();
    let once = refine(mesh, &all)?;
    let all: Vec<usize> = (0..once.n_cells()).collect();
    refine(&once, &all)
}
