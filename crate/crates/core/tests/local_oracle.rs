//! The single-cell local problem against exact values computed with
//! `oracles/local_problem.py`.

use fracmesh::estimate::CellGeometry;
use fracmesh::fem::RhsField;

const P: [[f64; 2]; 3] = [[0.1, 0.2], [1.3, 0.4], [0.5, 1.1]];
const W: [f64; 3] = [0.5, -0.25, 0.75];
const G_NB: [[f64; 2]; 3] = [[1.0 / 3.0, -0.4], [-0.5, 1.0 / 7.0], [2.0 / 9.0, 3.0 / 11.0]];

const MASS: [[f64; 3]; 3] = [
    [0.083333333333333333, 0.020833333333333333, 0.020833333333333333],
    [0.020833333333333333, 0.041666666666666667, 0.0],
    [0.020833333333333333, 0.0, 0.041666666666666667],
];
const STIFFNESS: [[f64; 3]; 3] = [[2.45, -0.97, -1.48], [-0.97, 2.45, 0.0], [-1.48, 0.0, 2.45]];
const ERROR: [f64; 3] = [0.10505615603573955, -0.067803491761422307, 0.19179536658730489];
const NORM: f64 = 0.056451482756686385;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300) || (a - b).abs() <= 1e-16
}

#[test]
fn enrichment_matrices() {
    let g = CellGeometry::new(&P, &RhsField::Constant(2.0));
    for i in 0..3 {
        for j in 0..3 {
            assert!(
                close(g.mass[i][j], MASS[i][j], 1e-13),
                "mass {i}{j}: {}",
                g.mass[i][j]
            );
            assert!(
                close(g.stiffness[i][j], STIFFNESS[i][j], 1e-13),
                "stiffness {i}{j}: {}",
                g.stiffness[i][j]
            );
        }
    }
}

#[test]
fn local_error_and_norm() {
    let g = CellGeometry::new(&P, &RhsField::Constant(2.0));
    let gw = g.gradient(&W);
    let jumps = G_NB.map(|n| [gw[0] - n[0], gw[1] - n[1]]);
    let e = g.solve(0.3, 5.0, &W, &jumps);
    for i in 0..3 {
        assert!(close(e[i], ERROR[i], 1e-12), "e[{i}] = {}", e[i]);
    }
    assert!(close(g.norm(&e), NORM, 1e-12), "norm {}", g.norm(&e));
}
