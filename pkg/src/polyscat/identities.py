"""Numerical checks of the corner-scattering identities.

* the orthogonality identity
  ``int_U (q - q') u' u0 = int_dU (u0 d_nu(u' - u) - (u' - u) d_nu u0)``
  (Green's second identity applied to ``(Delta + q)(u' - u) = (q - q') u'``),
* the corner limit ``J(s) -> (q - q')(x_c) u'(x_c)`` of the normalized
  exponential moment over a cone,
* the non-vanishing of the total field at small contrast,
* the scaling of the scattered field's ``H^2`` norm with the contrast.

Fields enter either as callables ``f(points)`` or as samples on a
:class:`~polyscat.grid.Grid`, which are interpolated with cubic splines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from .conelab import CGOVector, _rho, default_rho, fan_transform
from .errors import ExtrapolationUnstable, InputError, RegionNotLipschitzRepresentable, ZeroDenominator
from .forward import FieldSolution, IncidentWave, h2_seminorm
from .geometry import Cone
from .grid import Grid
from .media import sup_norm, support_indicator


def harmonic_exponential(rho, points) -> np.ndarray:
    """``exp(rho . x)``; harmonic because ``rho . rho = 0``."""
    r = _rho(rho)
    if abs(r @ r) > 1e-12 * np.sum(np.abs(r) ** 2):
        raise InputError("rho must satisfy rho . rho = 0")
    return np.exp(np.asarray(points, dtype=float) @ r)


def discrete_laplacian(f: np.ndarray, h: float) -> np.ndarray:
    """Five/seven-point Laplacian on the interior of a sampled field."""
    n = f.ndim
    c = f[(slice(1, -1),) * n]
    out = -2 * n * c
    for ax in range(n):
        for s in (0, 2):
            sl = [slice(1, -1)] * n
            sl[ax] = slice(s, f.shape[ax] - 2 + s)
            out = out + f[tuple(sl)]
    return out / h**2


class GridInterpolant:
    """Cubic-spline interpolation of cell-centred complex samples."""

    def __init__(self, grid: Grid, samples: np.ndarray, order: int = 3):
        if samples.shape != grid.shape:
            raise InputError("samples do not match grid")
        self.grid, self.order = grid, order
        self._re = ndimage.spline_filter(np.ascontiguousarray(samples.real), order=order, mode="nearest")
        self._im = ndimage.spline_filter(np.ascontiguousarray(samples.imag), order=order, mode="nearest")

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        idx = self.grid.index_of(pts.reshape(-1, self.grid.n)).T
        kw = dict(order=self.order, mode="nearest", prefilter=False)
        out = ndimage.map_coordinates(self._re, idx, **kw) + 1j * ndimage.map_coordinates(self._im, idx, **kw)
        return out.reshape(pts.shape[:-1])


def as_field(f, grid: Grid = None) -> Callable:
    if callable(f):
        return f
    if np.isscalar(f):
        val = complex(f)
        return lambda x: np.full(np.shape(x)[:-1], val)
    if grid is None:
        raise InputError("sampled fields need their grid")
    return GridInterpolant(grid, np.asarray(f))


# ---------------------------------------------------------------------------
# integration regions
# ---------------------------------------------------------------------------


def _gauss(a, b, order):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w


def _graded_radial(r, order, levels, ratio=0.5):
    """Gauss-Legendre on geometrically graded panels toward ``0``."""
    edges = np.concatenate([[0.0], r * ratio ** np.arange(levels, -1, -1)])
    pts, wts = zip(*(_gauss(a, b, order) for a, b in zip(edges[:-1], edges[1:])))
    return np.concatenate(pts), np.concatenate(wts)


@dataclass(frozen=True)
class Disc:
    """Disc (2D) or ball (3D) region."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    @property
    def n(self) -> int:
        return len(self.center)

    def volume_rule(self, order=48):
        r, wr = _gauss(0.0, self.radius, order)
        if self.n == 2:
            t = 2 * np.pi * np.arange(2 * order) / (2 * order)
            R, T = np.meshgrid(r, t, indexing="ij")
            pts = self.center + np.stack([R * np.cos(T), R * np.sin(T)], axis=-1)
            w = (wr[:, None] * R) * (2 * np.pi / (2 * order))
            return pts.reshape(-1, 2), w.ravel()
        dirs, wd = _sphere_rule(order)
        pts = self.center + r[:, None, None] * dirs[None, :, :]
        w = (wr * r**2)[:, None] * wd[None, :]
        return pts.reshape(-1, 3), w.ravel()

    def boundary_rule(self, order=48):
        if self.n == 2:
            t = 2 * np.pi * np.arange(4 * order) / (4 * order)
            nrm = np.column_stack([np.cos(t), np.sin(t)])
            w = np.full(len(t), 2 * np.pi * self.radius / len(t))
            return self.center + self.radius * nrm, nrm, w
        dirs, wd = _sphere_rule(order)
        return self.center + self.radius * dirs, dirs, wd * self.radius**2


def _sphere_rule(order):
    x, wx = np.polynomial.legendre.leggauss(order)
    phi = 2 * np.pi * np.arange(2 * order) / (2 * order)
    st = np.sqrt(1 - x**2)
    dirs = np.stack(np.broadcast_arrays(st[:, None] * np.cos(phi), st[:, None] * np.sin(phi), x[:, None]), axis=-1)
    w = wx[:, None] * np.full(phi.shape, 2 * np.pi / len(phi))[None, :]
    return dirs.reshape(-1, 3), w.ravel()


@dataclass(frozen=True)
class Sector:
    """``B(apex, radius) ∩ C`` for a cone ``C`` with that apex (a quarter disc for the quadrant)."""

    cone: Cone
    radius: float

    @property
    def n(self) -> int:
        return self.cone.dimension

    @property
    def apex(self) -> np.ndarray:
        return self.cone.apex

    def _angles(self):
        w = self.cone.generators
        a0 = np.arctan2(w[0, 1], w[0, 0])
        span = (np.arctan2(w[1, 1], w[1, 0]) - a0) % (2 * np.pi)
        if span > np.pi:
            a0, span = a0 + span, 2 * np.pi - span
        return a0, span

    def volume_rule(self, order=32, levels=0):
        r, wr = _graded_radial(self.radius, order, levels) if levels else _gauss(0.0, self.radius, order)
        if self.n == 2:
            a0, span = self._angles()
            t, wt = _gauss(a0, a0 + span, order)
            R, T = np.meshgrid(r, t, indexing="ij")
            pts = self.apex + np.stack([R * np.cos(T), R * np.sin(T)], axis=-1)
            w = (wr * r)[:, None] * wt[None, :]
            return pts.reshape(-1, 2), w.ravel()
        dirs, wd = _cone_directions(self.cone.generators, order)
        pts = self.apex + r[:, None, None] * dirs[None, :, :]
        w = (wr * r**2)[:, None] * wd[None, :]
        return pts.reshape(-1, 3), w.ravel()

    def boundary_rule(self, order=32):
        if self.n != 2:
            raise RegionNotLipschitzRepresentable("boundary quadrature is implemented for 2D sectors only")
        a0, span = self._angles()
        w = self.cone.generators
        inward = self.cone.inward_normals()
        pts, nrm, wts = [], [], []
        t, wt = _gauss(0.0, self.radius, order)
        for g, nu in zip(w, inward):
            pts.append(self.apex + t[:, None] * g)
            nrm.append(np.repeat(-nu[None, :], order, axis=0))
            wts.append(wt)
        a, wa = _gauss(a0, a0 + span, 2 * order)
        radial = np.column_stack([np.cos(a), np.sin(a)])
        pts.append(self.apex + self.radius * radial)
        nrm.append(radial)
        wts.append(self.radius * wa)
        return np.vstack(pts), np.vstack(nrm), np.concatenate(wts)


def _cone_directions(gens, order):
    """Unit directions and solid-angle weights covering a 3D cone (fan of flat triangles)."""
    x, wx = np.polynomial.legendre.leggauss(order)
    s = 0.5 * (x + 1)
    S, T = np.meshgrid(s, s, indexing="ij")
    W = np.outer(0.5 * wx, 0.5 * wx) * S
    dirs, wts = [], []
    for j in range(1, len(gens) - 1):
        a, b, c = gens[0], gens[j], gens[j + 1]
        e1, e2 = b - a, c - a
        nrm = np.cross(e1, e2)
        area2 = np.linalg.norm(nrm)
        dist = abs(a @ nrm) / area2
        P = (a + (S * (1 - T))[..., None] * e1 + (S * T)[..., None] * e2).reshape(-1, 3)
        plen = np.linalg.norm(P, axis=1)
        dirs.append(P / plen[:, None])
        wts.append(W.ravel() * area2 * dist / plen**3)
    return np.vstack(dirs), np.concatenate(wts)


# ---------------------------------------------------------------------------
# orthogonality identity
# ---------------------------------------------------------------------------


@dataclass
class OrthogonalityTerms:
    volume: complex
    boundary: complex

    @property
    def residual(self) -> float:
        return float(abs(self.volume - self.boundary))


def _normal_derivative(f, pts, nrm, step):
    return (f(pts + step * nrm) - f(pts - step * nrm)) / (2 * step)


def orthogonality_terms(U, q, qp, u, up, u0, grid: Grid = None, step: float = None, order: int = 48) -> OrthogonalityTerms:
    """Both sides of the orthogonality identity on the region ``U``.

    Normal derivatives are centred differences across the boundary with step
    ``step`` (the grid spacing by default), i.e. one ghost layer outside ``U``.
    """
    if not hasattr(U, "volume_rule") or not hasattr(U, "boundary_rule"):
        raise RegionNotLipschitzRepresentable(f"unsupported region {type(U).__name__}")
    q, qp, u, up, u0 = (as_field(f, grid) for f in (q, qp, u, up, u0))
    if step is None:
        step = grid.h if grid is not None else 1e-5
    xv, wv = U.volume_rule(order)
    vol = np.sum(wv * (q(xv) - qp(xv)) * up(xv) * u0(xv))
    xb, nb, wb = U.boundary_rule(order)

    def diff(x):
        return up(x) - u(x)

    bdry = np.sum(wb * (u0(xb) * _normal_derivative(diff, xb, nb, step) - diff(xb) * _normal_derivative(u0, xb, nb, step)))
    return OrthogonalityTerms(complex(vol), complex(bdry))


def alessandrini_residual(U, q, qp, u, up, u0, grid: Grid = None, step: float = None, order: int = 48) -> float:
    """``|volume term - boundary term|`` of the orthogonality identity."""
    return orthogonality_terms(U, q, qp, u, up, u0, grid, step, order).residual


def fitted_order(hs, errs) -> float:
    """Least-squares slope of ``log err`` against ``log h``."""
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


@dataclass
class ConvergenceStudy:
    hs: list
    residuals: list
    volume_terms: list
    records: list = field(default_factory=list)

    @property
    def order(self) -> float:
        return fitted_order(self.hs, self.residuals)

    @property
    def pairwise_orders(self) -> list:
        return [float(np.log(self.residuals[i] / self.residuals[i + 1]) / np.log(self.hs[i] / self.hs[i + 1])) for i in range(len(self.hs) - 1)]


def quarter_disc_study(hs=(1 / 32, 1 / 64, 1 / 128), k: float = 1.0, Vp: complex = 0.5, d=(1.0, 0.0),
                       apex=(-0.5, -0.5), radius: float = 0.8, rho_scale: float = 2.0, tol: float = 1e-11) -> ConvergenceStudy:
    """Orthogonality residual on a quarter disc under grid refinement.

    Both media occupy the square ``[-1, 1]^2``: ``V = -1`` there (so ``q = 0``,
    ``u`` harmonic inside) and ``V' = Vp`` (``q' = k^2 (1 + Vp)``); ``u`` and
    ``u'`` come from the forward solver on a grid of step ``h`` and
    ``u0 = exp(rho . (x - apex))`` with ``rho`` the quadrant's interior frequency.
    """
    from .forward import solve_total_field
    from .geometry import square
    from .media import builtin_potential

    V = builtin_potential("square", -1.0, side=2.0)
    Vp_pot = builtin_potential("square", Vp, side=2.0)
    inc = IncidentWave(np.asarray(d, dtype=float), k)
    cone = Cone(np.asarray(apex, dtype=float), np.eye(2))
    U = Sector(cone, radius)
    rho = default_rho(cone).scaled(rho_scale)
    ap = np.asarray(apex, dtype=float)
    u0 = lambda x: np.exp((np.asarray(x) - ap) @ rho.rho)
    hs, res, vols, recs = list(hs), [], [], []
    for h in hs:
        grid = Grid.from_step(2, 1.25, h)
        sol = solve_total_field(V, inc, grid, tol=tol)
        solp = solve_total_field(Vp_pot, inc, grid, tol=tol)
        terms = orthogonality_terms(U, 0.0, k**2 * (1 + Vp), sol.u, solp.u, u0, grid=grid)
        res.append(terms.residual)
        vols.append(terms.volume)
        recs.append({"h": h, "residual": terms.residual, "volume": terms.volume, "boundary": terms.boundary})
    study = ConvergenceStudy(hs, res, vols, recs)
    for r in study.records:
        r["fitted_order"] = study.order
    return study


# ---------------------------------------------------------------------------
# corner limit
# ---------------------------------------------------------------------------


def richardson(s_values, J_values) -> complex:
    """Value at ``1/s = 0`` of the polynomial in ``1/s`` through the given points."""
    h = 1.0 / np.asarray(s_values, dtype=float)
    J = np.asarray(J_values, dtype=complex)
    A = np.vander(h, len(h), increasing=True)
    return complex(np.linalg.solve(A, J)[0])


@dataclass
class CornerLimit:
    s: list
    J: list
    estimates: list
    limit: complex

    def records(self) -> list:
        return [{"s": s, "re_J": J.real, "im_J": J.imag} for s, J in zip(self.s, self.J)]


def corner_moment(cone: Cone, radius: float, dq, up, rho, s: float, grid: Grid = None, order: int = 32, levels: int = 14) -> complex:
    """``J(s) = int_{B ∩ C} exp(s rho . (x - x_c)) dq u' dx / int_C exp(s rho . (x - x_c)) dx``."""
    dq, up = as_field(dq, grid), as_field(up, grid)
    r = _rho(rho)
    x, w = Sector(cone, radius).volume_rule(order, levels=levels)
    num = np.sum(w * np.exp(s * ((x - cone.apex) @ r)) * dq(x) * up(x))
    cone0 = Cone(np.zeros(cone.dimension), cone.generators)
    return complex(num / fan_transform(cone0, s * r))


def corner_limit(cone: Cone, radius: float, dq, up, rho=None, s_list: Sequence[float] = (16, 32, 64, 128),
                 grid: Grid = None, tol: float = 0.1, nodes: int = 3) -> CornerLimit:
    """Richardson-extrapolated ``lim_{s -> inf} J(s)``.

    Each window of ``nodes`` consecutive scales gives an estimate; the last
    one is returned, and :class:`ExtrapolationUnstable` is raised when two
    successive estimates differ by more than ``tol`` relative.
    """
    if rho is None:
        rho = default_rho(cone)
    s_list = sorted(float(s) for s in s_list)
    J = [corner_moment(cone, radius, dq, up, rho, s, grid) for s in s_list]
    nodes = min(nodes, len(s_list))
    est = [richardson(s_list[i:i + nodes], J[i:i + nodes]) for i in range(len(s_list) - nodes + 1)]
    for a, b in zip(est, est[1:]):
        if abs(b - a) > tol * max(abs(b), 1e-300):
            raise ExtrapolationUnstable(f"successive extrapolations {a:.6g} and {b:.6g} disagree")
    return CornerLimit(s_list, J, est, est[-1])


# ---------------------------------------------------------------------------
# nodal set and scattered-norm bound
# ---------------------------------------------------------------------------


@dataclass
class NodalReport:
    min_abs_u: float
    argmin: np.ndarray
    sup_us: float

    @property
    def bound(self) -> float:
        """``1 - sup |u_s|``, the lower bound for unit-modulus incidence."""
        return 1.0 - self.sup_us


def nodal_check(sol: FieldSolution) -> NodalReport:
    a = np.abs(sol.u)
    i = np.unravel_index(np.argmin(a), a.shape)
    return NodalReport(float(a[i]), sol.grid.points[i].copy(), float(np.max(np.abs(sol.us))))


def scattered_norm_ratio(sol: FieldSolution, V, inc: IncidentWave = None) -> float:
    """``||u_s||_{H^2} / (k^2 ||V||_inf ||u_i||_{L^2(Omega)})``."""
    inc = inc or sol.incident
    vmax = sup_norm(V) if not isinstance(V, np.ndarray) else float(np.max(np.abs(V)))
    if vmax == 0:
        raise ZeroDenominator("the potential vanishes identically")
    chi = support_indicator(V, sol.grid)
    ui_l2 = np.sqrt(sol.grid.cell_volume * np.sum(chi * np.abs(inc(sol.grid.points)) ** 2))
    return h2_seminorm(sol.us, sol.grid) / (inc.k**2 * vmax * ui_l2)
