use std::collections::HashSet;
use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use proptest::prelude::*;

use fracmesh::mesh::{
    ancestor_map, make_initial_mesh, refine, transfer_values, union_mesh, Domain, MeshFile, TriMesh,
};

type Tri = [[f64; 2]; 3];

fn bits(p: [f64; 2]) -> (u64, u64) {
    ((p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits())
}

fn mid(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Bisect (apex, left, right) at the midpoint of left-right.
fn bisect(t: &Tri) -> [Tri; 2] {
    let m = mid(t[1], t[2]);
    [[m, t[0], t[1]], [m, t[2], t[0]]]
}

/// Brute-force closure: bisect the marked triangles, then bisect any
/// triangle with a vertex at one of its edge midpoints until none is left.
fn naive_refine(cells: Vec<Tri>, marked: &[usize]) -> Vec<Tri> {
    let marked: HashSet<usize> = marked.iter().copied().collect();
    let mut tris: Vec<Tri> = Vec::new();
    for (i, t) in cells.into_iter().enumerate() {
        if marked.contains(&i) {
            tris.extend(bisect(&t));
        } else {
            tris.push(t);
        }
    }
    loop {
        let verts: HashSet<(u64, u64)> = tris.iter().flat_map(|t| t.iter().map(|&p| bits(p))).collect();
        let hanging = tris
            .iter()
            .position(|t| (0..3).any(|i| verts.contains(&bits(mid(t[(i + 1) % 3], t[(i + 2) % 3])))));
        match hanging {
            Some(k) => {
                let t = tris.swap_remove(k);
                tris.extend(bisect(&t));
            }
            None => return tris,
        }
    }
}

fn canonical(tris: impl IntoIterator<Item = Tri>) -> Vec<[(u64, u64); 3]> {
    let mut v: Vec<[(u64, u64); 3]> = tris
        .into_iter()
        .map(|t| {
            let mut k = t.map(bits);
            k.sort();
            k
        })
        .collect();
    v.sort();
    v
}

fn cells_of(mesh: &TriMesh) -> Vec<Tri> {
    (0..mesh.n_cells()).map(|c| mesh.cell_coords(c)).collect()
}

/// A few rounds of random refinement, driven by `picks`.
fn random_mesh(domain: Domain, cells: usize, picks: &[Vec<prop::sample::Index>]) -> TriMesh {
    let mut mesh = make_initial_mesh(domain, cells).unwrap();
    for round in picks {
        let n = mesh.n_cells();
        let marked: Vec<usize> = round.iter().map(|ix| ix.index(n)).collect();
        mesh = refine(&mesh, &marked).unwrap();
    }
    mesh
}

fn picks() -> impl Strategy<Value = Vec<Vec<prop::sample::Index>>> {
    prop::collection::vec(prop::collection::vec(any::<prop::sample::Index>(), 1..4), 0..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closure_matches_brute_force(history in picks(), last in prop::collection::vec(any::<prop::sample::Index>(), 1..5), l in any::<bool>()) {
        let domain = if l { Domain::LShape } else { Domain::UnitSquare };
        let cells = if l { 24 } else { 8 };
        let mesh = random_mesh(domain, cells, &history);
        let marked: Vec<usize> = last.iter().map(|ix| ix.index(mesh.n_cells())).collect();
        let fast = refine(&mesh, &marked).unwrap();
        let slow = naive_refine(cells_of(&mesh), &marked);
        prop_assert_eq!(canonical(cells_of(&fast)), canonical(slow));
    }

    #[test]
    fn refined_meshes_are_conforming_with_bounded_angles(history in picks()) {
        let mesh = random_mesh(Domain::Square, 32, &history);
        mesh.check_conforming().unwrap();
        prop_assert!((mesh.total_area() - 4.0).abs() < 1e-12);
        // bisection of right isosceles triangles only produces similar ones
        prop_assert!(mesh.min_angle() >= FRAC_PI_4 - 1e-12);
    }

    #[test]
    fn union_of_refinements_is_refinement_of_union(a in prop::collection::vec(any::<prop::sample::Index>(), 1..6),
                                                   b in prop::collection::vec(any::<prop::sample::Index>(), 1..6)) {
        let base = make_initial_mesh(Domain::Square, 32).unwrap();
        let n = base.n_cells();
        let ma: Vec<usize> = a.iter().map(|i| i.index(n)).collect();
        let mb: Vec<usize> = b.iter().map(|i| i.index(n)).collect();
        let ra = refine(&base, &ma).unwrap();
        let rb = refine(&base, &mb).unwrap();
        let both: Vec<usize> = ma.iter().chain(&mb).copied().collect();
        let joint = refine(&base, &both).unwrap();
        let u = union_mesh(&[&ra, &rb]).unwrap();
        prop_assert!(u.same_cells(&joint));
        u.check_conforming().unwrap();
    }

    #[test]
    fn transfer_reproduces_coarse_function(history in picks(), more in picks()) {
        let coarse = random_mesh(Domain::Square, 32, &history);
        let mut fine = coarse.clone();
        for round in &more {
            let n = fine.n_cells();
            let marked: Vec<usize> = round.iter().map(|ix| ix.index(n)).collect();
            fine = refine(&fine, &marked).unwrap();
        }
        let vals: Vec<f64> = coarse.vertices().iter().map(|p| (1.3 * p[0] - 0.7 * p[1]).sin() + p[0] * p[1]).collect();
        let anc = ancestor_map(&coarse, &fine).unwrap();
        let moved = transfer_values(&coarse, &vals, &fine, &anc);
        for (c, &a) in anc.iter().enumerate() {
            let a = a as usize;
            let pc = coarse.cell_coords(a);
            let va = coarse.cells()[a].map(|v| vals[v as usize]);
            for (k, &v) in fine.cells()[c].iter().enumerate() {
                let x = fine.cell_coords(c)[k];
                let l = fracmesh::mesh::barycentric(&pc, x);
                let expect = l[0] * va[0] + l[1] * va[1] + l[2] * va[2];
                prop_assert!((moved[v as usize] - expect).abs() <= 1e-13 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn mesh_file_round_trip_is_bit_exact(history in picks()) {
        let mesh = random_mesh(Domain::LShape, 96, &history);
        let file = MeshFile::from(&mesh);
        let text = file.to_text();
        let back = MeshFile::read(text.as_bytes()).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.to_text(), text);
    }
}

#[test]
fn refine_leaves_shared_input_untouched() {
    let base = Arc::new(make_initial_mesh(Domain::UnitSquare, 32).unwrap());
    let keys = base.keys().to_vec();
    let fine = refine(&base, &[0, 5, 17]).unwrap();
    assert_eq!(base.keys(), keys.as_slice());
    assert!(fine.n_cells() > base.n_cells());
    assert!(ancestor_map(&fine, &base).is_err());
}

#[test]
fn union_of_unrelated_initial_meshes_fails() {
    let a = make_initial_mesh(Domain::Square, 32).unwrap();
    let b = make_initial_mesh(Domain::Square, 32).unwrap();
    assert!(union_mesh(&[&a, &b]).is_err());
}
