use std::sync::Arc;

use super::trimesh::{bisect_vertices, CellKey, TriMesh};
use crate::{Error, Result};

fn check_family(meshes: &[&TriMesh]) -> Result<()> {
    let first = meshes[0].initial_mesh();
    if meshes[1..].iter().any(|m| !Arc::ptr_eq(m.initial_mesh(), first)) {
        return Err(Error::Structure(
            "meshes do not descend from one initial mesh".into(),
        ));
    }
    Ok(())
}

/// Coarsest common refinement of meshes sharing one initial mesh.
///
/// Per initial cell the refinement trees are merged, so the result is the
/// set of deepest cells over all inputs. The output does not depend on the
/// input order.
pub fn union_mesh(meshes: &[&TriMesh]) -> Result<TriMesh> {
    if meshes.is_empty() {
        return Err(Error::Config("union of an empty mesh list".into()));
    }
    check_family(meshes)?;
    let mut distinct: Vec<&TriMesh> = Vec::with_capacity(meshes.len());
    for &m in meshes {
        if !distinct.iter().any(|d| d.id() == m.id() || d.same_cells(m)) {
            distinct.push(m);
        }
    }
    if distinct.len() == 1 {
        return Ok(distinct[0].clone());
    }
    let mut all: Vec<(CellKey, u32, u32)> = distinct
        .iter()
        .enumerate()
        .flat_map(|(mi, m)| {
            m.keys()
                .iter()
                .enumerate()
                .map(move |(c, &k)| (k, mi as u32, c as u32))
        })
        .collect();
    all.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    all.dedup_by(|b, a| a.0 == b.0);
    let mut leaves = Vec::with_capacity(all.len());
    for (i, &(k, mi, c)) in all.iter().enumerate() {
        // in preorder a key followed by one of its descendants is not a leaf
        if let Some(next) = all.get(i + 1) {
            if k.contains(&next.0) {
                continue;
            }
        }
        leaves.push((k, distinct[mi as usize].cell_coords(c as usize)));
    }
    Ok(TriMesh::from_leaves(distinct[0].initial_mesh().clone(), leaves))
}

/// For each cell of `fine`, the index of the `coarse` cell containing it.
pub fn ancestor_map(coarse: &TriMesh, fine: &TriMesh) -> Result<Vec<u32>> {
    check_family(&[coarse, fine])?;
    let ck = coarse.keys();
    let mut out = Vec::with_capacity(fine.n_cells());
    let mut j = 0usize;
    for fk in fine.keys() {
        while j + 1 < ck.len() && ck[j + 1] <= *fk {
            j += 1;
        }
        if !ck[j].contains(fk) {
            return Err(Error::Structure(
                "target mesh is not a refinement of the source mesh".into(),
            ));
        }
        out.push(j as u32);
    }
    Ok(out)
}

/// Nodal values of a P1 function on `coarse` interpolated onto `fine`,
/// which must refine `coarse`. Exact since the spaces are nested.
pub fn transfer_values(coarse: &TriMesh, values: &[f64], fine: &TriMesh, ancestors: &[u32]) -> Vec<f64> {
    if coarse.same_cells(fine) {
        return values.to_vec();
    }
    let mut out = vec![0.0; fine.n_vertices()];
    for (c, &a) in ancestors.iter().enumerate() {
        let a = a as usize;
        let mut v = coarse.cells()[a].map(|i| values[i as usize]);
        let from = coarse.keys()[a].generation();
        let key = fine.keys()[c];
        for level in from..key.generation() {
            let m = 0.5 * (v[1] + v[2]);
            v = bisect_vertices(v, m)[key.branch(level) as usize];
        }
        for (i, &vert) in fine.cells()[c].iter().enumerate() {
            out[vert as usize] = v[i];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_initial_mesh, refine, Domain};

    #[test]
    fn union_is_idempotent_and_absorbing() {
        let t = make_initial_mesh(Domain::Square, 32).unwrap();
        let u = union_mesh(&[&t, &t]).unwrap();
        assert!(u.same_cells(&t));
        let all: Vec<usize> = (0..t.n_cells()).collect();
        let r = refine(&t, &all).unwrap();
        assert!(union_mesh(&[&t, &r]).unwrap().same_cells(&r));
        assert!(union_mesh(&[&r, &t]).unwrap().same_cells(&r));
    }

    #[test]
    fn union_is_commutative() {
        let t = make_initial_mesh(Domain::Square, 32).unwrap();
        let a = refine(&t, &[1, 2]).unwrap();
        let b = refine(&t, &[20]).unwrap();
        let ab = union_mesh(&[&a, &b]).unwrap();
        let ba = union_mesh(&[&b, &a]).unwrap();
        assert!(ab.same_cells(&ba));
        assert_eq!(ab.vertices(), ba.vertices());
        assert_eq!(ab.cells(), ba.cells());
        ab.check_conforming().unwrap();
    }

    #[test]
    fn foreign_families_are_rejected() {
        let t1 = make_initial_mesh(Domain::Square, 8).unwrap();
        let t2 = make_initial_mesh(Domain::Square, 8).unwrap();
        assert!(matches!(union_mesh(&[&t1, &t2]), Err(Error::Structure(_))));
        assert!(matches!(ancestor_map(&t1, &t2), Err(Error::Structure(_))));
    }

    #[test]
    fn coarsening_is_not_a_refinement() {
        let t = make_initial_mesh(Domain::Square, 8).unwrap();
        let r = refine(&t, &[0]).unwrap();
        assert!(ancestor_map(&r, &t).is_err());
        let map = ancestor_map(&t, &r).unwrap();
        assert_eq!(map.len(), r.n_cells());
    }
}
