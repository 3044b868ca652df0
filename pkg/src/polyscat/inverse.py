"""Distinguishability and single-pattern reconstruction on a known geometry.

The potential is linear in its cell values, ``V = sum_j v_j B_j`` with
``B_j`` the rasterized cell indicators (for nested families ``V_j - V_{j-1}``
multiplies the ``j``-th shell), so a geometry is rasterized once and reused
for every forward solve.  The far field depends holomorphically on the
values, which lets one complex finite difference per cell supply both real
Jacobian columns.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import HypothesisViolated, InputError, NoConvergence, StalledOptimization
from .farfield import FarFieldPattern, far_field, far_field_distance, sphere_directions
from .forward import IncidentWave, solve_total_field
from .geometry import CellPartition, NestedFamily, check_cell_clearance, check_nested, pixel_lattice
from .grid import Grid
from .hashing import canonical_json, content_hash
from .media import PiecewiseConstantPotential, region_fraction

logger = logging.getLogger(__name__)

GAP_FLOOR = 1e-9
CAMPAIGN_FLOOR = 1e-6
NODAL_THRESHOLD = 1e-6
BORN_CONTRAST = 0.05


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """Known geometry plus the measurement setup of one experiment."""

    geometry: object
    incident: IncidentWave
    grid: Grid
    n_dirs: int = 64
    seed: int = 0
    tol: float = 1e-10
    candidates: tuple = ()

    def __post_init__(self):
        g = self.geometry
        if isinstance(g, CellPartition):
            check_cell_clearance(g, min(self.grid.h, g.d0 / 4))
        elif isinstance(g, NestedFamily):
            check_nested(g)
        else:
            raise InputError("geometry must be a CellPartition or a NestedFamily")
        if g.dimension != self.grid.n:
            raise InputError("geometry and grid dimensions differ")
        object.__setattr__(self, "_basis", None)

    @property
    def n_cells(self) -> int:
        return len(self.geometry.regions)

    @property
    def directions(self) -> np.ndarray:
        return sphere_directions(self.grid.n, self.n_dirs)

    @property
    def basis(self) -> np.ndarray:
        """``(n_cells,) + grid.shape`` array with ``V = sum_j v_j basis[j]``."""
        if self._basis is None:
            fr = [np.zeros(self.grid.shape) if r is None else region_fraction(r, self.grid) for r in self.geometry.regions]
            b = np.array(fr)
            if isinstance(self.geometry, NestedFamily):
                # V = sum_j (v_j - v_{j-1}) chi_{D_j} = sum_j v_j (chi_{D_j} - chi_{D_{j+1}})
                b = b - np.concatenate([b[1:], np.zeros((1,) + self.grid.shape)])
            object.__setattr__(self, "_basis", b)
        return self._basis

    def samples(self, values) -> np.ndarray:
        v = _as_values(values, self.n_cells)
        return np.tensordot(v, self.basis, axes=1)

    def potential(self, values) -> PiecewiseConstantPotential:
        return PiecewiseConstantPotential(self.geometry, _as_values(values, self.n_cells))

    def solve(self, values):
        return solve_total_field(self.samples(values), self.incident, self.grid, tol=self.tol)

    def pattern(self, values) -> FarFieldPattern:
        return far_field(None, self.solve(values), directions=self.directions)

    def to_dict(self) -> dict:
        from .geometry import structure_to_dict

        return {
            "geometry": structure_to_dict(self.geometry),
            "incident": self.incident.to_dict(),
            "grid": self.grid.to_dict(),
            "n_dirs": self.n_dirs,
            "seed": self.seed,
            "tol": self.tol,
        }

    def hash(self) -> str:
        return content_hash(self.to_dict())


def _as_values(values, n) -> np.ndarray:
    v = np.asarray(values, dtype=complex).ravel()
    if v.shape != (n,):
        raise InputError(f"expected {n} cell values, got {v.size}")
    return v


def pixel_spec(k: float = 16.0, d=(1.0, 0.0), side: float = 0.25, N: int = 64, R: float = 0.5,
               n_dirs: int = 64, seed: int = 0, tol: float = 1e-10) -> ExperimentSpec:
    """3x3 pixel lattice of side ``side`` centred at 0, centre pixel ordered last.

    ``k = 16`` keeps the single-pattern Jacobian well conditioned (smallest to
    largest singular value about 0.03; at ``k = 4`` it is below 1e-6).

    With the defaults the lattice spans ``[-0.375, 0.375]^2`` and pixel edges
    fall on grid-cell faces of the ``64^2`` grid on ``[-0.5, 0.5]^2``.
    """
    cells = pixel_lattice((3, 3), side)
    cells = cells[:4] + cells[5:] + cells[4:5]
    part = CellPartition(tuple(cells), side / 5)
    return ExperimentSpec(part, IncidentWave(np.asarray(d, dtype=float), k), Grid(2, R, N), n_dirs, seed, tol)


# ---------------------------------------------------------------------------
# distinguishability
# ---------------------------------------------------------------------------


def vertex_moduli(sol, vertices) -> np.ndarray:
    """Bilinear (trilinear) interpolation of ``|u|`` at the given points."""
    idx = sol.grid.index_of(np.atleast_2d(vertices)).T
    return ndimage.map_coordinates(np.abs(sol.u), idx, order=1, mode="nearest")


@dataclass
class GapReport:
    gap: float
    verdict: str
    min_abs_u: float
    min_abs_up: float
    vertices: np.ndarray = field(repr=False)
    abs_u: np.ndarray = field(repr=False)
    abs_up: np.ndarray = field(repr=False)

    def to_record(self) -> dict:
        return {"gap": self.gap, "verdict": self.verdict, "min_abs_u": self.min_abs_u, "min_abs_up": self.min_abs_up}


def _gap_report(sol, solp, A, Ap, vertices, floor) -> GapReport:
    gap = far_field_distance(A, Ap)
    au, aup = vertex_moduli(sol, vertices), vertex_moduli(solp, vertices)
    tu = NODAL_THRESHOLD * np.abs(sol.u).max()
    tup = NODAL_THRESHOLD * np.abs(solp.u).max()
    bad = (au <= tu) & (aup <= tup)
    if np.any(bad):
        x = vertices[np.flatnonzero(bad)[0]]
        raise HypothesisViolated(f"both total fields vanish at the vertex {x.tolist()}")
    verdict = "DISTINGUISHED" if gap > floor else "IDENTICAL"
    return GapReport(gap, verdict, float(au.min()), float(aup.min()), vertices, au, aup)


def distinguishability(spec: ExperimentSpec, V, Vp, floor: float = GAP_FLOOR) -> GapReport:
    """Far-field gap between two value assignments on the geometry of ``spec``."""
    v, vp = _as_values(V, spec.n_cells), _as_values(Vp, spec.n_cells)
    sol = spec.solve(v)
    solp = sol if np.array_equal(v, vp) else spec.solve(vp)
    A = far_field(None, sol, directions=spec.directions)
    Ap = A if solp is sol else far_field(None, solp, directions=spec.directions)
    return _gap_report(sol, solp, A, Ap, spec.geometry.vertices(), floor)


def nested_distinguishability(spec: ExperimentSpec, V, spec_p: ExperimentSpec, Vp, floor: float = GAP_FLOOR) -> GapReport:
    """Gap between two nested-family potentials, possibly with different shells.

    The vertex report covers the shells of both families.
    """
    for s in (spec, spec_p):
        if not isinstance(s.geometry, NestedFamily):
            raise InputError("nested_distinguishability needs NestedFamily geometries")
    if spec.grid.to_dict() != spec_p.grid.to_dict() or spec.incident.to_dict() != spec_p.incident.to_dict() or spec.n_dirs != spec_p.n_dirs:
        raise InputError("both experiments must share grid, incidence and directions")
    for s, vals in ((spec, V), (spec_p, Vp)):
        s.potential(vals)  # enforces V_1 != 0 and V_{j+1} != V_j
    same = spec.geometry is spec_p.geometry or spec_p.hash() == spec.hash()
    v, vp = _as_values(V, spec.n_cells), _as_values(Vp, spec_p.n_cells)
    sol = spec.solve(v)
    solp = sol if same and np.array_equal(v, vp) else spec_p.solve(vp)
    A = far_field(None, sol, directions=spec.directions)
    Ap = A if solp is sol else far_field(None, solp, directions=spec.directions)
    verts = np.unique(np.vstack([spec.geometry.vertices(), spec_p.geometry.vertices()]), axis=0)
    return _gap_report(sol, solp, A, Ap, verts, floor)


def random_values(rng: np.random.Generator, n: int, bound: float) -> np.ndarray:
    """Values with real and imaginary parts uniform in ``[-bound, bound]``."""
    return rng.uniform(-bound, bound, n) + 1j * rng.uniform(-bound, bound, n)


def born_bound(spec: ExperimentSpec, contrast: float = BORN_CONTRAST) -> float:
    """Box half-width keeping ``k^2 |V| <= contrast`` for every value in the box."""
    return contrast / (spec.incident.k**2 * np.sqrt(2))


def distinguishability_campaign(spec: ExperimentSpec, n_pairs: int = 50, contrast: float = BORN_CONTRAST,
                                floor: float = CAMPAIGN_FLOOR) -> list:
    """Gaps over seeded random distinct pairs; pairs below ``floor`` are flagged as counterexample candidates."""
    rng = np.random.default_rng(spec.seed)
    b = born_bound(spec, contrast)
    h = spec.hash()
    records = []
    for i in range(n_pairs):
        v = random_values(rng, spec.n_cells, b)
        vp = random_values(rng, spec.n_cells, b)
        rep = distinguishability(spec, v, vp, floor=GAP_FLOOR)
        rec = {"kind": "distinguishability", "spec": h, "pair": i, "V": v, "Vp": vp, **rep.to_record()}
        rec["counterexample_candidate"] = bool(rep.gap < floor)
        if rec["counterexample_candidate"]:
            logger.warning("pair %d: gap %.3e below %.1e, counterexample candidate", i, rep.gap, floor)
        records.append(rec)
    return records


def perturbation_sweep(spec: ExperimentSpec, base, cell: int = 0, sizes: Sequence[float] = None) -> tuple[list, float]:
    """Gap against perturbation size of one cell value; returns the records and the log-log slope."""
    base = _as_values(base, spec.n_cells)
    if sizes is None:
        sizes = np.abs(base).max() * np.logspace(-4, -0.5, 8)
    A = spec.pattern(base)
    records = []
    for t in sizes:
        v = base.copy()
        v[cell] += t
        gap = far_field_distance(A, spec.pattern(v))
        records.append({"kind": "perturbation", "cell": cell, "size": float(t), "gap": gap})
    slope = float(np.polyfit(np.log([r["size"] for r in records]), np.log([r["gap"] for r in records]), 1)[0])
    return records, slope


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------


@dataclass
class Reconstruction:
    values: np.ndarray
    residual: float
    iterations: int
    history: list
    converged: bool

    def to_record(self) -> dict:
        return {"values": self.values, "residual": self.residual, "iterations": self.iterations, "history": self.history}


def _stack(z: np.ndarray) -> np.ndarray:
    return np.concatenate([z.real, z.imag])


def reconstruct_cells(spec: ExperimentSpec, A_meas: FarFieldPattern, init, maxit: int = 50, rtol: float = None,
                      fd_step: float = 1e-6, xtol: float = 1e-12, gtol: float = 1e-6, min_damping: float = 2.0**-30) -> Reconstruction:
    """Gauss-Newton fit of complex cell values to a measured pattern.

    ``rtol`` is the target relative residual ``||F(v) - A|| / ||A||`` (by
    default ten times the solver tolerance).  Iteration also stops at a
    stationary point (relative gradient below ``gtol``), which is where noisy
    data end.  Each iteration costs one solve
    per cell for the forward-difference Jacobian plus the line search; the
    step is halved until the objective decreases, so accepted objectives are
    non-increasing.
    """
    if A_meas.directions.shape != spec.directions.shape or not np.allclose(A_meas.directions, spec.directions, atol=1e-12):
        raise InputError("measured pattern does not use the experiment's direction set")
    rtol = 10 * spec.tol if rtol is None else rtol
    a = A_meas.values
    anorm = np.linalg.norm(a)
    v = _as_values(init, spec.n_cells).copy()
    F = spec.pattern(v).values
    r = F - a
    obj = float(np.linalg.norm(r))
    history = [obj / anorm]
    scale = max(np.abs(v).max(), float(anorm / max(np.abs(spec.samples(np.ones(spec.n_cells))).sum(), 1.0)), 1e-3)
    it = 0
    while history[-1] > rtol:
        if it >= maxit:
            raise NoConvergence(f"Gauss-Newton reached {maxit} iterations at relative residual {history[-1]:.3e}")
        it += 1
        delta = fd_step * scale
        D = np.empty((len(a), spec.n_cells), dtype=complex)
        for j in range(spec.n_cells):
            e = v.copy()
            e[j] += delta
            D[:, j] = (spec.pattern(e).values - F) / delta
        J = np.block([[D.real, -D.imag], [D.imag, D.real]])
        rs = _stack(r)
        # relative gradient ||J^T r|| / (||J|| ||r||): zero at a least-squares stationary point
        stationarity = np.linalg.norm(J.T @ rs) / (np.linalg.norm(J, 2) * np.linalg.norm(rs))
        p, *_ = np.linalg.lstsq(J, -rs, rcond=None)
        step = p[: spec.n_cells] + 1j * p[spec.n_cells:]
        if stationarity <= gtol or np.linalg.norm(step) <= xtol * (np.linalg.norm(v) + xtol):
            logger.debug("Gauss-Newton stationary after %d iterations", it)
            return Reconstruction(v, history[-1], it, history, True)
        t = 1.0
        while True:
            trial = v + t * step
            Ft = spec.pattern(trial).values
            ot = float(np.linalg.norm(Ft - a))
            if ot < obj:
                break
            t *= 0.5
            if t < min_damping:
                raise StalledOptimization(f"no decrease along the Gauss-Newton step at relative residual {history[-1]:.3e}")
        v, F, r, obj = trial, Ft, Ft - a, ot
        history.append(obj / anorm)
        scale = max(np.abs(v).max(), 1e-3 * scale)
        logger.debug("GN iteration %d: residual %.3e, damping %.3g", it, history[-1], t)
    return Reconstruction(v, history[-1], it, history, True)


def add_noise(A: FarFieldPattern, level: float, rng: np.random.Generator) -> FarFieldPattern:
    """Additive complex Gaussian noise with ``||noise|| = level ||A||``."""
    z = rng.standard_normal(A.values.shape) + 1j * rng.standard_normal(A.values.shape)
    z *= level * np.linalg.norm(A.values) / np.linalg.norm(z)
    return FarFieldPattern(A.directions, A.values + z, A.k, A.incident)


def noise_sweep(spec: ExperimentSpec, truth, levels: Sequence[float] = (0.01,), init=None, maxit: int = 50) -> list:
    """Reconstruction error under noisy data; reports ``amplification = value error / noise level``."""
    truth = _as_values(truth, spec.n_cells)
    init = np.zeros(spec.n_cells, complex) if init is None else init
    rng = np.random.default_rng(spec.seed)
    A = spec.pattern(truth)
    records = []
    for lev in levels:
        rec = reconstruct_cells(spec, add_noise(A, lev, rng), init, maxit=maxit, rtol=0.0)
        err = float(np.linalg.norm(rec.values - truth) / np.linalg.norm(truth))
        records.append({"kind": "noise", "level": float(lev), "value_error": err, "amplification": err / lev,
                        "residual": rec.residual, "iterations": rec.iterations})
    return records


def refined(spec: ExperimentSpec, factor: int) -> ExperimentSpec:
    """Same experiment on a grid with ``factor`` times as many cells per axis."""
    g = spec.grid
    return ExperimentSpec(spec.geometry, spec.incident, Grid(g.n, g.R, g.N * factor), spec.n_dirs, spec.seed, spec.tol)


def reconstruction_run(spec: ExperimentSpec, truth=None, contrast: float = BORN_CONTRAST, maxit: int = 50,
                       data_refine: int = 1) -> dict:
    """Synthetic reconstruction from zero initial values; one ledger record.

    By default the data come from the inversion grid itself (no model
    error).  ``data_refine > 1`` generates them on a finer grid instead, so
    the misfit includes discretization error.
    """
    if truth is None:
        truth = random_values(np.random.default_rng(spec.seed), spec.n_cells, born_bound(spec, contrast))
    truth = _as_values(truth, spec.n_cells)
    data_spec = spec if data_refine == 1 else refined(spec, int(data_refine))
    A = data_spec.pattern(truth)
    rtol = None if data_refine == 1 else 0.0
    rec = reconstruct_cells(spec, A, np.zeros(spec.n_cells, complex), maxit=maxit, rtol=rtol)
    err = np.abs(rec.values - truth) / np.abs(truth)
    return {"kind": "reconstruction", "spec": spec.hash(), "data_refine": int(data_refine), "truth": truth,
            **rec.to_record(), "max_relative_error": float(err.max())}


# ---------------------------------------------------------------------------
# ledgers
# ---------------------------------------------------------------------------


def write_ledger(records: Sequence[dict], path) -> Path:
    """One canonical JSON object per line; byte-identical for identical records."""
    path = Path(path)
    with path.open("w") as fh:
        for rec in records:
            fh.write(canonical_json(rec) + "\n")
    return path
