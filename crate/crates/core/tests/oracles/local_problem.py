"""Exact local enrichment problem on one triangle.

Prints the frozen values used by tests/local_oracle.rs. The residual is
written with the volume term (grad w, grad v)_K and the averaged normal
flux on the edge of each hat, independently of the implementation's
jump-only form.
"""
import sympy as sp

x, y = sp.symbols("x y")
R = sp.Rational

P = [sp.Matrix([R(1, 10), R(1, 5)]), sp.Matrix([R(13, 10), R(2, 5)]), sp.Matrix([R(1, 2), R(11, 10)])]
f = 2
b, c = R(3, 10), 5
w = [R(1, 2), R(-1, 4), R(3, 4)]
# gradient of the neighbour's discrete solution across edge i
g_nb = [sp.Matrix([R(1, 3), R(-2, 5)]), sp.Matrix([R(-1, 2), R(1, 7)]), sp.Matrix([R(2, 9), R(3, 11)])]


def mid(a, b_):
    return (a + b_) / 2


# node 3 + i is the midpoint of the edge opposite vertex i
nodes = P + [mid(P[(i + 1) % 3], P[(i + 2) % 3]) for i in range(3)]
A, B, C = P
M0, M1, M2 = nodes[3], nodes[4], nodes[5]
# two rounds of newest vertex bisection, the first at M0 on edge B-C
subs = [(M2, M0, A), (M2, B, M0), (M1, M0, C), (M1, A, M0)]


def linear(tri, vals):
    # the affine function through (tri[k], vals[k])
    a0, a1, a2 = sp.symbols("a0 a1 a2")
    eqs = [a0 + a1 * p[0] + a2 * p[1] - v for p, v in zip(tri, vals)]
    s = sp.solve(eqs, [a0, a1, a2])
    return s[a0] + s[a1] * x + s[a2] * y


def integrate(tri, expr):
    (x0, y0), (x1, y1), (x2, y2) = [tuple(p) for p in tri]
    u, v = sp.symbols("u v")
    X = x0 + u * (x1 - x0) + v * (x2 - x0)
    Y = y0 + u * (y1 - y0) + v * (y2 - y0)
    jac = sp.Abs((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))
    e = expr.subs({x: X, y: Y}, simultaneous=True)
    return sp.integrate(sp.integrate(e * jac, (v, 0, 1 - u)), (u, 0, 1))


def node_value(p, k):
    return 1 if p == nodes[3 + k] else 0


hats = [[linear(t, [node_value(p, k) for p in t]) for t in subs] for k in range(3)]
wlin = linear(P, w)
gw = sp.Matrix([sp.diff(wlin, x), sp.diff(wlin, y)])

K = sp.zeros(3)
Mm = sp.zeros(3)
for i in range(3):
    for j in range(3):
        for t, hi, hj in zip(subs, hats[i], hats[j]):
            K[i, j] += integrate(t, sp.diff(hi, x) * sp.diff(hj, x) + sp.diff(hi, y) * sp.diff(hj, y))
            Mm[i, j] += integrate(t, hi * hj)

rhs = sp.zeros(3, 1)
for i in range(3):
    vol = 0
    for t, h in zip(subs, hats[i]):
        vol += integrate(t, f * h - c * wlin * h - b * (gw[0] * sp.diff(h, x) + gw[1] * sp.diff(h, y)))
    a, bb = P[(i + 1) % 3], P[(i + 2) % 3]
    edge = bb - a
    length = sp.sqrt(edge.dot(edge))
    # outward normal for a counterclockwise triangle
    n = sp.Matrix([edge[1], -edge[0]]) / length
    hat_integral = length / 2
    avg_flux = ((gw + g_nb[i]) / 2).dot(n)
    rhs[i] = vol + b * avg_flux * hat_integral

s = max(b, c)
Asys = (b * K + c * Mm) / s
e = Asys.LUsolve(rhs / s)
norm = sp.sqrt((e.T * Mm * e)[0])

print("jump inputs (grad w_K - grad w_nb):")
for i in range(3):
    d = gw - g_nb[i]
    print(f"  [{sp.N(d[0], 17)}, {sp.N(d[1], 17)}]")
print("mass", [[sp.N(Mm[i, j], 17) for j in range(3)] for i in range(3)])
print("stiffness", [[sp.N(K[i, j], 17) for j in range(3)] for i in range(3)])
print("error coefficients", [sp.N(v, 17) for v in e])
print("norm", sp.N(norm, 17))
