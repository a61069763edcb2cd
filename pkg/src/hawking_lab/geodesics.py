"""Exponential map and perturbed-sphere embedding by geodesic integration.

Geodesics solve x'' + Gamma(x)(x', x') = 0 with an adaptive embedded
Runge-Kutta pair (DOP853).  Building a surface needs one geodesic per grid
node; :class:`GeodesicFan` integrates the whole fan of unit-speed radial
geodesics in a single stacked ODE solve, samples it on Chebyshev-Lobatto
arclength nodes, and reconstructs positions at arbitrary per-node radii by
barycentric interpolation.  Re-embedding the same fan at a new radius or
graph function is then just interpolation, which is what makes radius
ladders and coefficient optimizers affordable.
"""

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    DomainError,
    DomainExit,
    GridTooCoarse,
    PerturbationTooLarge,
    StepLimit,
)
from .manifold import _christoffel_from, curvature_packet
from .surface import extrinsic_geometry

__all__ = [
    "GeodesicConfig",
    "exp_map",
    "GeodesicFan",
    "embed_sphere",
    "surface_tangents",
    "geodesic_sphere_surface",
]


class GeodesicConfig:
    """Integrator tolerances for geodesic shooting."""

    def __init__(self, rel_tol=1e-10, abs_tol=1e-12, max_steps=100_000):
        if rel_tol <= 0 or abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if max_steps < 100:
            raise ValueError("max_steps must be at least 100")
        self.rel_tol = float(rel_tol)
        self.abs_tol = float(abs_tol)
        self.max_steps = int(max_steps)

    def as_dict(self):
        return {
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "max_steps": self.max_steps,
        }


def _geodesic_rhs(metric, n_points, cfg, counter):
    def rhs(t, y):
        counter[0] += 1
        if counter[0] > 16 * cfg.max_steps:
            raise StepLimit("geodesic integration exceeded the step budget")
        state = y.reshape(2, n_points, 3)
        x, v = state[0], state[1]
        # raw (unguarded) Christoffel evaluation: the terminal domain event
        # owns boundary handling, and trial steps may probe past the margin
        gamma = _christoffel_from(np.linalg.inv(metric.metric(x)), metric.metric_deriv(x))
        acc = -np.einsum("ncab,na,nb->nc", gamma, v, v)
        return np.concatenate([v.ravel(), acc.ravel()])

    return rhs


def _domain_event(metric, n_points):
    def event(t, y):
        x = y.reshape(2, n_points, 3)[0]
        return float(np.min(metric.domain_margin(x)))

    event.terminal = True
    event.direction = -1.0
    return event


def _integrate(metric, x0, v0, t_end, cfg, t_eval=None):
    """Integrate a stack of geodesics; returns the solve_ivp solution."""
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    n = x0.shape[0]
    if not np.all(metric.domain_guard(x0)):
        raise DomainError("geodesic initial point outside the chart")
    counter = [0]
    sol = solve_ivp(
        _geodesic_rhs(metric, n, cfg, counter),
        (0.0, t_end),
        np.concatenate([x0.ravel(), v0.ravel()]),
        method="DOP853",
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        t_eval=t_eval,
        events=[_domain_event(metric, n)],
        dense_output=False,
    )
    if sol.status == 1:
        raise DomainExit("a geodesic reached the chart boundary")
    if not sol.success:
        raise StepLimit(f"geodesic integrator failed: {sol.message}")
    return sol


def exp_map(metric, p, v, cfg=None):
    """Exponential map: endpoint of the geodesic with initial velocity ``v``.

    Integrates x'' + Gamma(x)(x', x') = 0 over unit parameter time.  Raises
    DomainExit if the geodesic leaves the chart and StepLimit when the step
    budget is exhausted.
    """
    if cfg is None:
        cfg = GeodesicConfig()
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.all(v == 0.0):
        if not np.all(metric.domain_guard(p)):
            raise DomainError("base point outside the chart")
        return p.copy()
    sol = _integrate(metric, p[np.newaxis], v[np.newaxis], 1.0, cfg)
    return sol.y[:3, -1].copy()


class GeodesicFan:
    """All radial geodesics from one centre, sampled for fast re-evaluation.

    The fan shoots the unit-speed geodesic in direction Theta(node) for every
    grid node, records states on Chebyshev-Lobatto arclength nodes in
    ``[0, s_max]``, and exposes barycentric interpolants for positions and
    velocities at per-node arclengths.
    """

    def __init__(self, metric, p, grid, s_max, cfg=None, packet=None, n_samples=33):
        if cfg is None:
            cfg = GeodesicConfig()
        self.metric = metric
        self.p = np.asarray(p, dtype=float)
        self.grid = grid
        self.s_max = float(s_max)
        self.cfg = cfg
        if packet is None:
            packet = curvature_packet(metric, p)
        self.packet = packet
        if n_samples < 8:
            raise ValueError("need at least 8 arclength samples")

        # unit directions in the orthonormal frame of the packet
        directions = grid.unit @ packet.frame  # (N, 3) chart components
        n = grid.n_nodes
        k = np.arange(n_samples)
        nodes = 0.5 * self.s_max * (1.0 - np.cos(np.pi * k / (n_samples - 1)))
        nodes[0] = 0.0
        nodes[-1] = self.s_max
        x0 = np.broadcast_to(self.p, (n, 3))
        sol = _integrate(metric, x0, directions, self.s_max, cfg, t_eval=nodes)
        states = sol.y.reshape(2, n, 3, nodes.size)
        self._nodes = nodes
        self._positions = np.moveaxis(states[0], -1, 0)   # (M, N, 3)
        self._velocities = np.moveaxis(states[1], -1, 0)  # (M, N, 3)
        w = np.ones(n_samples)
        w[1::2] = -1.0
        w[0] *= 0.5
        w[-1] *= 0.5
        self._bary_w = w

    def _interpolate(self, samples, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < -1e-12) or np.any(s > self.s_max * (1.0 + 1e-12)):
            raise DomainError("arclength outside the sampled fan range")
        diff = s[np.newaxis, :] - self._nodes[:, np.newaxis]  # (M, N)
        exact = np.isclose(diff, 0.0, atol=1e-15 * max(1.0, self.s_max))
        diff = np.where(exact, 1.0, diff)
        w = self._bary_w[:, np.newaxis] / diff
        num = np.einsum("mn,mnc->nc", w, samples)
        den = np.sum(w, axis=0)
        out = num / den[:, np.newaxis]
        hit_col, hit_row = np.nonzero(exact.T)
        out[hit_col] = samples[hit_row, hit_col]
        return out

    def positions_at(self, s):
        """Chart positions at per-node arclengths ``s`` of shape (N,)."""
        return self._interpolate(self._positions, s)

    def velocities_at(self, s):
        """Outward unit-speed geodesic velocities at per-node arclengths."""
        return self._interpolate(self._velocities, s)


def _as_w_values(w, grid):
    if w is None:
        return np.zeros(grid.n_nodes)
    if np.isscalar(w):
        return np.full(grid.n_nodes, float(w))
    if callable(w):
        return np.asarray(w(grid), dtype=float)
    w = np.asarray(w, dtype=float)
    if w.shape != (grid.n_nodes,):
        raise ValueError("w values must match the grid layout")
    return w


def embed_sphere(metric, p, rho, w, grid, cfg=None, fan=None, injectivity_bound=None):
    """Positions of the perturbed geodesic sphere Exp_p[rho (1 - w) Theta].

    ``w`` may be None, a scalar, a node array or a callable of the grid.
    Directions are taken in the orthonormal frame at ``p``.  A prebuilt
    :class:`GeodesicFan` may be passed to skip re-integration.
    """
    w_values = _as_w_values(w, grid)
    if np.max(np.abs(w_values)) >= 1.0:
        raise PerturbationTooLarge("need |w| < 1 for a radial graph")
    bound = injectivity_bound
    if bound is None:
        bound = metric.injectivity_bound(p)
    if rho > bound:
        raise DomainError(
            f"radius {rho} exceeds the injectivity bound {bound:.6g}"
        )
    if fan is None:
        s_max = rho * float(np.max(1.0 - w_values)) * (1.0 + 1e-9)
        fan = GeodesicFan(metric, p, grid, s_max, cfg)
    return fan.positions_at(rho * (1.0 - w_values))


def surface_tangents(positions, grid, fd_order=4):
    """Coordinate tangents Z_i = d(embedding)/d theta^i on the grid.

    Derivatives are centred stencils of the requested order in theta1 (with
    the pole-crossing extension) and periodic stencils in theta2.
    """
    if grid.n_theta < 8 or grid.n_phi < 16:
        raise GridTooCoarse("tangent stencils need at least an 8 x 16 grid")
    positions = np.asarray(positions, dtype=float)
    return np.stack(
        [grid.dtheta(positions, fd_order), grid.dphi(positions, fd_order)], axis=1
    )


def geodesic_sphere_surface(
    metric,
    p,
    rho,
    w,
    grid,
    cfg=None,
    fan=None,
    fd_order=4,
    packet=None,
    injectivity_bound=None,
):
    """Full pipeline: embed a perturbed geodesic sphere and compute its
    extrinsic geometry, orienting the normal against the outward geodesic
    velocities."""
    w_values = _as_w_values(w, grid)
    if np.max(np.abs(w_values)) >= 1.0:
        raise PerturbationTooLarge("need |w| < 1 for a radial graph")
    if fan is None:
        bound = injectivity_bound
        if bound is None:
            bound = metric.injectivity_bound(p)
        if rho > bound:
            raise DomainError(
                f"radius {rho} exceeds the injectivity bound {bound:.6g}"
            )
        s_max = rho * float(np.max(1.0 - w_values)) * (1.0 + 1e-9)
        fan = GeodesicFan(metric, p, grid, s_max, cfg, packet=packet)
    radii = rho * (1.0 - w_values)
    positions = fan.positions_at(radii)
    velocities = fan.velocities_at(radii)
    tangents = surface_tangents(positions, grid, fd_order)
    return extrinsic_geometry(metric, grid, positions, tangents, velocities, fd_order)
