"""Independent oracles used by the test suite.

Metric derivatives come from exact sympy differentiation of the chart
expressions; the tensor assembly below is deliberately written with explicit
index loops (a second implementation path, independent of the package's
vectorized einsum assembly).  Distance oracles use 1-D quadrature and
closed-form space-form geometry.
"""

from math import fsum

import numpy as np
import sympy as sp
from scipy.integrate import quad
from scipy.optimize import brentq

_X = sp.symbols("x1 x2 x3", real=True)


class SymbolicMetricOracle:
    """Curvature oracle: exact symbolic metric derivatives + loop assembly."""

    def __init__(self, g_matrix):
        g = sp.Matrix(g_matrix)
        self._g_fn = sp.lambdify(_X, g, "numpy")
        dg = [[[sp.diff(g[a, b], _X[c]) for b in range(3)] for a in range(3)] for c in range(3)]
        self._dg_fn = sp.lambdify(_X, dg, "numpy")
        ddg = [
            [[[sp.diff(dg[c][a][b], _X[d]) for b in range(3)] for a in range(3)] for c in range(3)]
            for d in range(3)
        ]
        self._ddg_fn = sp.lambdify(_X, ddg, "numpy")
        self._g_sym = g

    def _data(self, point):
        args = tuple(float(v) for v in point)
        g = np.asarray(self._g_fn(*args), dtype=float)
        dg = np.asarray(self._dg_fn(*args), dtype=float)
        ddg = np.asarray(self._ddg_fn(*args), dtype=float)
        return g, dg, ddg

    def christoffel(self, point):
        g, dg, _ = self._data(point)
        g_inv = np.linalg.inv(g)
        ra = range(3)
        gamma = np.zeros((3, 3, 3))
        for c in ra:
            for a in ra:
                for b in ra:
                    gamma[c, a, b] = 0.5 * fsum(
                        g_inv[c, d] * (dg[a, d, b] + dg[b, d, a] - dg[d, a, b])
                        for d in ra
                    )
        return gamma

    def _riemann_up(self, point):
        g, dg, ddg = self._data(point)
        g_inv = np.linalg.inv(g)
        ra = range(3)
        gamma = self.christoffel(point)
        dg_inv = np.zeros((3, 3, 3))
        for e in ra:
            for c in ra:
                for d in ra:
                    dg_inv[e, c, d] = -fsum(
                        g_inv[c, a] * dg[e, a, b] * g_inv[b, d] for a in ra for b in ra
                    )
        dgamma = np.zeros((3, 3, 3, 3))
        for e in ra:
            for c in ra:
                for a in ra:
                    for b in ra:
                        dgamma[e, c, a, b] = 0.5 * fsum(
                            dg_inv[e, c, d] * (dg[a, d, b] + dg[b, d, a] - dg[d, a, b])
                            + g_inv[c, d]
                            * (ddg[e, a, d, b] + ddg[e, b, d, a] - ddg[e, d, a, b])
                            for d in ra
                        )
        riem_up = np.zeros((3, 3, 3, 3))
        for a in ra:
            for b in ra:
                for c in ra:
                    for d in ra:
                        riem_up[a, b, c, d] = (
                            dgamma[c, a, d, b]
                            - dgamma[d, a, c, b]
                            + fsum(gamma[a, c, e] * gamma[e, d, b] for e in ra)
                            - fsum(gamma[a, d, e] * gamma[e, c, b] for e in ra)
                        )
        return g, riem_up

    def riemann(self, point):
        g, riem_up = self._riemann_up(point)
        return np.einsum("ae,ebcd->abcd", g, riem_up)

    def ricci(self, point):
        _, riem_up = self._riemann_up(point)
        return np.einsum("abad->bd", riem_up)

    def scalar(self, point):
        g, riem_up = self._riemann_up(point)
        ric = np.einsum("abad->bd", riem_up)
        return float(np.einsum("bd,bd->", np.linalg.inv(g), ric))

    def scalar_gradient(self, point, h=1e-4):
        # exact-symbolic Sc is too slow; differentiate the assembled field
        point = np.asarray(point, dtype=float)
        out = np.zeros(3)
        for a in range(3):
            e = np.zeros(3)
            e[a] = h
            out[a] = (
                8 * (self.scalar(point + e / 2) - self.scalar(point - e / 2))
                - (self.scalar(point + e) - self.scalar(point - e))
            ) / (6 * h)
        return out

    def scalar_laplacian(self, point, h=2e-3):
        """Covariant Laplacian of Sc via divergence form and nested stencils."""
        point = np.asarray(point, dtype=float)

        def flux(q):
            # sqrt(det g) g^{ab} d_b Sc evaluated at q
            g, _, _ = self._data(q)
            g_inv = np.linalg.inv(g)
            sq = np.sqrt(np.linalg.det(g))
            grad = self.scalar_gradient(q, h=h)
            return sq * g_inv @ grad

        div = np.zeros(3)
        for a in range(3):
            e = np.zeros(3)
            e[a] = h
            div[a] = (
                8 * (flux(point + e / 2)[a] - flux(point - e / 2)[a])
                - (flux(point + e)[a] - flux(point - e)[a])
            ) / (6 * h)
        g, _, _ = self._data(point)
        return float(np.sum(div) / np.sqrt(np.linalg.det(g)))


class ConformalScalarOracle:
    """Exact Sc, grad Sc and Laplacian Sc for g = exp(2 phi) delta.

    Uses the closed conformal-flat expressions, fully symbolic and therefore
    independent of any finite differencing:
    Sc = exp(-2 phi) (-4 lap phi - 2 |grad phi|^2),
    Lap_g f = exp(-3 phi) d_a (exp(phi) d_a f).
    """

    def __init__(self, phi_expr_fn):
        phi = phi_expr_fn(*_X)
        lap_phi = sum(sp.diff(phi, v, 2) for v in _X)
        grad2 = sum(sp.diff(phi, v) ** 2 for v in _X)
        sc = sp.exp(-2 * phi) * (-4 * lap_phi - 2 * grad2)
        lap_sc = sp.exp(-3 * phi) * sum(
            sp.diff(sp.exp(phi) * sp.diff(sc, v), v) for v in _X
        )
        grad_sc = [sp.diff(sc, v) for v in _X]
        self.scalar = lambda p: float(sp.lambdify(_X, sc)(*map(float, p)))
        self._grad = sp.lambdify(_X, grad_sc)
        self.scalar_laplacian = lambda p: float(sp.lambdify(_X, lap_sc)(*map(float, p)))

    def scalar_gradient(self, p):
        return np.asarray(self._grad(*map(float, p)), dtype=float)


def schwarzschild_symbolic(mass):
    r = sp.sqrt(_X[0] ** 2 + _X[1] ** 2 + _X[2] ** 2)
    psi = 2 * mass / (r - 2 * mass)
    g = sp.Matrix(
        3, 3, lambda a, b: sp.KroneckerDelta(a, b) + psi * _X[a] * _X[b] / r**2
    )
    return SymbolicMetricOracle(g)


def conformal_symbolic(phi_expr_fn):
    phi = phi_expr_fn(*_X)
    conf = sp.exp(2 * phi)
    g = sp.Matrix(3, 3, lambda a, b: conf * sp.KroneckerDelta(a, b))
    return SymbolicMetricOracle(g)


def round_sphere_symbolic(radius):
    r2 = _X[0] ** 2 + _X[1] ** 2 + _X[2] ** 2
    conf = (2 * radius**2 / (radius**2 + r2)) ** 2
    g = sp.Matrix(3, 3, lambda a, b: conf * sp.KroneckerDelta(a, b))
    return SymbolicMetricOracle(g)


def polynomial_symbolic(terms):
    h = sp.zeros(3, 3)
    for a, b, c, (e1, e2, e3) in terms:
        mono = sp.nsimplify(c, rational=True) * _X[0] ** e1 * _X[1] ** e2 * _X[2] ** e3
        h[a, b] += mono
        if a != b:
            h[b, a] += mono
    g = sp.eye(3) + h
    return SymbolicMetricOracle(g)


# ---------------------------------------------------------------------------
# distance and surface oracles
# ---------------------------------------------------------------------------

def s3_chart_embedding(x, radius=1.0):
    """Map stereographic chart points into the sphere of the given radius in R^4."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    R2 = radius**2
    w = radius * (R2 - r2) / (R2 + r2)
    rest = 2.0 * R2 * x / (R2 + r2)[..., np.newaxis]
    return np.concatenate([w[..., np.newaxis], rest], axis=-1)


def s3_distance(x, y, radius=1.0):
    """Geodesic distance between chart points of the round 3-sphere."""
    ex = s3_chart_embedding(x, radius)
    ey = s3_chart_embedding(y, radius)
    c = np.clip(np.sum(ex * ey, axis=-1) / radius**2, -1.0, 1.0)
    return radius * np.arccos(c)


def hyperbolic_distance(x, y, radius=1.0):
    """Geodesic distance in the Poincare ball of the given radius."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    R2 = radius**2
    num = 2.0 * R2 * np.sum((x - y) ** 2, axis=-1)
    den = (R2 - np.sum(x * x, axis=-1)) * (R2 - np.sum(y * y, axis=-1))
    return radius * np.arccosh(1.0 + num / den)


def schwarzschild_radial_endpoint(r_start, proper_length, mass=1.0):
    """Areal radius reached by walking the given proper length radially outward."""

    def length(r_end):
        val, _ = quad(
            lambda r: 1.0 / np.sqrt(1.0 - 2.0 * mass / r), r_start, r_end
        )
        return val - proper_length

    hi = r_start + proper_length * 3.0 + 1.0
    return brentq(length, r_start, hi, xtol=1e-13, rtol=1e-14)


def schwarzschild_sphere_mean_curvature(r, mass=1.0):
    """Mean curvature of the coordinate sphere |x| = r (inward-normal sign)."""
    return (2.0 / r) * np.sqrt(1.0 - 2.0 * mass / r)


def schwarzschild_sphere_hawking_mass(r, mass=1.0):
    """Closed-form Hawking mass of the areal coordinate sphere (equals mass)."""
    area = 4.0 * np.pi * r**2
    willmore = 16.0 * np.pi * (1.0 - 2.0 * mass / r)
    return np.sqrt(area / (16.0 * np.pi) ** 3) * (16.0 * np.pi - willmore)
