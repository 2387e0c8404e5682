"""Reference behaviour of the single-exponent fit v(r) = M + c r^-p.

p from a least-squares line through (log r_k, log|v_{k+1}-v_k|), then (M, c)
by linear least squares, then p refined by minimizing the residual.
"""
import numpy as np
from scipy.optimize import minimize_scalar

def fit(r, v):
    r = np.asarray(r, float); v = np.asarray(v, float)
    def lin(p):
        A = np.vstack([np.ones_like(r), r**-p]).T
        coef, *_ = np.linalg.lstsq(A, v, rcond=None)
        res = v - A @ coef
        return coef, np.sqrt(np.mean(res**2))
    best = minimize_scalar(lambda p: lin(p)[1], bounds=(1e-3, 12), method="bounded",
                           options={"xatol": 1e-12})
    coef, res = lin(best.x)
    return coef[0], best.x, res

m = 1.0
for radii in ([20, 40, 80], [20, 40, 80, 160], [20, 40, 80, 160, 320]):
    v = [m * (1 + m / (2 * r)) ** 3 / 2 for r in radii]
    M, p, res = fit(radii, v)
    print(radii, "M=", repr(M), "p=", p, "res=", res, "err=", M - 0.5)
