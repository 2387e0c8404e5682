"""Independent reference values for the half-Schwarzschild test cases.

Everything here is computed from closed forms with sympy/scipy and shares no
code with the C++ library. Values printed by this script are frozen into the
C++ unit and acceptance tests.
"""
import numpy as np
import sympy as sp
from scipy import integrate

m = 1.0
a = m / 2.0

# conformal factor and metric scale at r = 2 on the x1 axis
phi2 = 1 + m / (2 * 2.0)
print("phi^4 at r=2:", repr(phi2**4))

# hemisphere / sphere flux: integrand -8 phi^3 d_r phi, integrated numerically
def flux(r, solid_angle):
    x = sp.symbols("x")
    ph = 1 + m / (2 * x)
    dph = sp.diff(ph, x)
    val = float((-8 * ph**3 * dph * x**2).subs(x, r)) * solid_angle
    return val / (16 * np.pi)

print("hemisphere flux r=10:", repr(flux(10.0, 2 * np.pi)), "closed form", 0.5 * (1 + 1 / 20) ** 3)
print("sphere flux r=10:", repr(flux(10.0, 4 * np.pi)))

# Christoffel Gamma^1_11 at (2,0,0): 2 phi^-1 d1 phi
X1, X2, X3 = sp.symbols("x1 x2 x3", real=True)
R = sp.sqrt(X1**2 + X2**2 + X3**2)
PHI = 1 + m / (2 * R)
G = PHI**4 * sp.eye(3)
Ginv = G.inv()
coords = [X1, X2, X3]
def christoffel(k, i, j):
    return sum(Ginv[k, l] * (sp.diff(G[j, l], coords[i]) + sp.diff(G[i, l], coords[j]) - sp.diff(G[i, j], coords[l])) for l in range(3)) / 2
pt = {X1: 2.0, X2: 0.0, X3: 0.0}
print("Gamma^1_11 at (2,0,0):", repr(float(christoffel(0, 0, 0).subs(pt))),
      "formula", repr(float((2 / PHI * sp.diff(PHI, X1)).subs(pt))))
pt2 = {X1: 1.3, X2: -0.7, X3: 0.4}
print("Gamma^3_12 at (1.3,-0.7,0.4):", repr(float(christoffel(2, 0, 1).subs(pt2))))
print("Gamma^1_33 at (1.3,-0.7,0.4):", repr(float(christoffel(0, 2, 2).subs(pt2))))

# extrapolation samples
for radii in ([20, 40, 80], [20, 40, 80, 160]):
    v = [m * (1 + m / (2 * r)) ** 3 / 2 for r in radii]
    print("samples", radii, [repr(x) for x in v])

# exact harmonic coordinate of the truncated problem:
# u_T = c (r - a + a^2/r) cos(theta), c = r_out / (r_out - a + a^2/r_out)
def bulk_exact(r_out, r_in=a):
    c = r_out / (r_out - a + a * a / r_out)
    r, th = sp.symbols("r th", positive=True)
    f = c * (r - a + a * a / r)
    # Cartesian components in the (x1,x3) plane (axisymmetric, phi = 0 slice)
    x, z = sp.symbols("x z", real=True)
    rr = sp.sqrt(x**2 + z**2)
    u = c * (rr - a + a * a / rr) * z / rr
    ph = 1 + a / rr
    du = [sp.diff(u, x), 0, sp.diff(u, z)]
    dph = [sp.diff(ph, x), 0, sp.diff(ph, z)]
    # use y-derivatives of an axisymmetric function at y = 0
    yv = sp.symbols("y", real=True)
    rr3 = sp.sqrt(x**2 + yv**2 + z**2)
    u3 = c * (rr3 - a + a * a / rr3) * z / rr3
    ph3 = 1 + a / rr3
    cs = [x, yv, z]
    du3 = [sp.diff(u3, q) for q in cs]
    dph3 = [sp.diff(ph3, q) for q in cs]
    hess = sp.zeros(3, 3)
    for i in range(3):
        for j in range(3):
            val = sp.diff(u3, cs[i], cs[j])
            for k in range(3):
                gam = 2 / ph3 * (int(k == i) * dph3[j] + int(k == j) * dph3[i] - int(i == j) * dph3[k])
                val -= gam * du3[k]
            hess[i, j] = val
    hess2 = sum(hess[i, j] ** 2 for i in range(3) for j in range(3)) / ph3**8
    grad = sp.sqrt(sum(d**2 for d in du3)) / ph3**2
    integrand = (hess2 / grad) * ph3**6
    fn = sp.lambdify((x, yv, z), integrand.subs(yv, 0), "numpy")
    fgrad = sp.lambdify((x, yv, z), grad, "numpy")
    def g(t, s):  # s = log r, t = theta ; volume r^3 sin(t) ds dt * 2pi
        rv = np.exp(s)
        return fn(rv * np.sin(t), 0.0, rv * np.cos(t)) * rv**3 * np.sin(t) * 2 * np.pi
    val, err = integrate.dblquad(g, np.log(r_in), np.log(r_out), 0.0, np.pi / 2, epsabs=1e-11, epsrel=1e-10)
    # min |grad u| on Sigma: at r = a
    gmin = fgrad(a, 0.0, 0.0)
    return val / (16 * np.pi), gmin, c

for r_out in (50.0, 100.0, 200.0, 400.0, 1e4):
    b, gmin, c = bulk_exact(r_out)
    print(f"r_out={r_out}: B={b!r} min|grad u| on Sigma={gmin!r} c={c!r}")
