//! Quadrature rules on triangles and intervals.

/// Symmetric 6-point rule, exact for polynomials of degree 4.
///
/// Entries are barycentric coordinates `(λ0, λ1, λ2)` and weights that sum
/// to one; multiply by the triangle area.
pub const TRI6: [([f64; 3], f64); 6] = {
    const A: f64 = 0.091_576_213_509_770_743;
    const B: f64 = 0.445_948_490_915_964_89;
    const WA: f64 = 0.109_951_743_655_321_87;
    const WB: f64 = 0.223_381_589_678_011_47;
    [
        ([1.0 - 2.0 * A, A, A], WA),
        ([A, 1.0 - 2.0 * A, A], WA),
        ([A, A, 1.0 - 2.0 * A], WA),
        ([1.0 - 2.0 * B, B, B], WB),
        ([B, 1.0 - 2.0 * B, B], WB),
        ([B, B, 1.0 - 2.0 * B], WB),
    ]
};

/// Maps barycentric coordinates to a point of the triangle `p`.
#[inline]
pub fn bary_point(p: &[[f64; 2]; 3], l: &[f64; 3]) -> [f64; 2] {
    [
        l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
        l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
    ]
}

/// Signed area of the triangle `(a, b, c)`; positive for counterclockwise order.
#[inline]
pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

/// Integrates `g` over the triangle with [`TRI6`].
pub fn integrate_tri<F: FnMut(f64, f64) -> f64>(p: &[[f64; 2]; 3], mut g: F) -> f64 {
    let area = signed_area(p[0], p[1], p[2]);
    let mut acc = 0.0;
    for (l, w) in TRI6.iter() {
        let x = bary_point(p, l);
        acc += w * g(x[0], x[1]);
    }
    acc * area
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
