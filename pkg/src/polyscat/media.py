"""Scattering potentials and their rasterization onto a grid.

Two classes of media are represented.  :class:`PiecewiseConstantPotential`
carries one complex value per region of a cell partition, a nested family or
a union of analytic shapes.  :class:`AdmissiblePotential` is ``chi_P * phi``
with ``phi`` given by a sampler.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from .errors import InadmissiblePotential, InputError, MissingFile, SupportOutsideGrid
from .geometry import (
    CellPartition,
    NestedFamily,
    Polytope,
    box,
    cube,
    square,
    structure_from_dict,
    structure_to_dict,
)
from .grid import Grid

SUBSAMPLES = 4


@dataclass(frozen=True)
class Ball:
    """Disc (2D) or ball (3D); used for analytic reference media."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.radius > 0:
            raise InputError("radius must be positive")

    @property
    def dimension(self) -> int:
        return len(self.center)

    @property
    def bbox(self):
        return self.center - self.radius, self.center + self.radius

    @property
    def volume(self) -> float:
        return np.pi * self.radius**2 if self.dimension == 2 else 4.0 / 3.0 * np.pi * self.radius**3

    @property
    def vertices(self) -> np.ndarray:
        return np.zeros((0, self.dimension))

    def facet_distance(self, points) -> np.ndarray:
        return np.linalg.norm(np.asarray(points, dtype=float) - self.center, axis=-1) - self.radius

    def contains(self, points, closed=False) -> np.ndarray:
        d = self.facet_distance(points)
        return d <= 0 if closed else d < 0

    def to_dict(self) -> dict:
        return {"shape": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True)
class ShapeUnion:
    """Disjoint analytic shapes with no admissibility requirement (reference media)."""

    shapes: tuple

    @property
    def regions(self) -> list:
        return list(self.shapes)

    @property
    def dimension(self) -> int:
        return self.shapes[0].dimension


Structure = Union[CellPartition, NestedFamily, ShapeUnion]


def _values(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim == 2 and arr.shape[1] == 2 and not np.iscomplexobj(arr):
        arr = arr[:, 0] + 1j * arr[:, 1]
    return np.asarray(arr, dtype=complex).reshape(-1)


@dataclass(frozen=True)
class PiecewiseConstantPotential:
    """``V = sum_j V_j chi_{Sigma_j}``; for nested shells ``Sigma_j = D_j minus closure(D_{j+1})``."""

    structure: Structure
    values: np.ndarray

    def __post_init__(self):
        vals = _values(self.values)
        object.__setattr__(self, "values", vals)
        regions = self.structure.regions
        if len(vals) != len(regions):
            raise InputError(f"{len(regions)} regions but {len(vals)} values")
        for j, (r, v) in enumerate(zip(regions, vals)):
            if r is None and v != 0:
                raise InadmissiblePotential(f"empty region {j + 1} carries nonzero value")
        if isinstance(self.structure, NestedFamily):
            live = [v for r, v in zip(regions, vals) if r is not None]
            if live[0] == 0:
                raise InadmissiblePotential("nested potentials need V_1 != 0")
            for j in range(1, len(live)):
                if live[j] == live[j - 1]:
                    raise InadmissiblePotential(f"nested values {j} and {j + 1} coincide")

    @property
    def dimension(self) -> int:
        return self.structure.dimension

    def terms(self) -> list:
        """Additive indicator decomposition ``[(shape, coefficient), ...]``."""
        regions = self.structure.regions
        if isinstance(self.structure, NestedFamily):
            out, prev = [], 0.0
            for r, v in zip(regions, self.values):
                if r is None:
                    break
                out.append((r, v - prev))
                prev = v
            return out
        return [(r, v) for r, v in zip(regions, self.values) if r is not None and v != 0]

    def evaluate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.zeros(pts.shape[:-1], dtype=complex)
        for shape, c in self.terms():
            out += c * shape.contains(pts)
        return out

    def vertices(self) -> np.ndarray:
        regions = [r for r in self.structure.regions if r is not None]
        return np.unique(np.vstack([r.vertices for r in regions]), axis=0)

    def bbox(self):
        los, his = zip(*(r.bbox for r in self.structure.regions if r is not None))
        return np.min(los, axis=0), np.max(his, axis=0)

    def with_values(self, values) -> "PiecewiseConstantPotential":
        return PiecewiseConstantPotential(self.structure, values)

    def scaled(self, s) -> "PiecewiseConstantPotential":
        return PiecewiseConstantPotential(self.structure, self.values * s)

    def to_dict(self) -> dict:
        if isinstance(self.structure, ShapeUnion):
            d = {"shapes": [s.to_dict() for s in self.structure.shapes]}
        else:
            d = structure_to_dict(self.structure)
        d["values"] = [[float(v.real), float(v.imag)] for v in self.values]
        return d


@dataclass(frozen=True)
class AdmissiblePotential:
    """``V = chi_P * phi`` with ``phi`` C^alpha near the vertices and nonzero there.

    Hölder continuity is declared through ``alpha`` and not verified.
    """

    cell: Polytope
    phi: Callable[[np.ndarray], np.ndarray]
    alpha: float

    def __post_init__(self):
        n = self.cell.dimension
        if not (self.alpha > 0 if n == 2 else self.alpha > 0.25):
            raise InadmissiblePotential(f"Hölder exponent {self.alpha} too small for n={n}")
        at_vertices = np.asarray(self.phi(self.cell.vertices), dtype=complex)
        if np.any(np.abs(at_vertices) == 0):
            raise InadmissiblePotential("phi vanishes at a vertex of the cell")

    @property
    def dimension(self) -> int:
        return self.cell.dimension

    def terms(self) -> list:
        return [(self.cell, 1.0)]

    def evaluate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        inside = self.cell.contains(pts)
        out = np.zeros(pts.shape[:-1], dtype=complex)
        out[inside] = self.phi(pts[inside])
        return out

    def vertices(self) -> np.ndarray:
        return self.cell.vertices

    def bbox(self):
        return self.cell.bbox


Potential = Union[PiecewiseConstantPotential, AdmissiblePotential]


def _subsample_offsets(n: int, h: float, m: int = SUBSAMPLES) -> np.ndarray:
    t = ((np.arange(m) + 0.5) / m - 0.5) * h
    return np.stack(np.meshgrid(*([t] * n), indexing="ij"), axis=-1).reshape(-1, n)


def _check_support(V, grid: Grid) -> None:
    if V.dimension != grid.n:
        raise InputError("potential and grid dimensions differ")
    lo, hi = V.bbox()
    if np.any(lo <= -grid.R) or np.any(hi >= grid.R):
        raise SupportOutsideGrid(f"support box [{lo}, {hi}] not strictly inside [-{grid.R}, {grid.R}]^{grid.n}")


def rasterize(V, grid: Grid, subsamples: int = SUBSAMPLES) -> np.ndarray:
    """Cell samples of ``V``: cell value inside, 0 outside, subsample mean on cut cells."""
    _check_support(V, grid)
    pts = grid.points.reshape(-1, grid.n)
    out = np.zeros(pts.shape[0], dtype=complex)
    half_diag = 0.5 * np.sqrt(grid.n) * grid.h
    offsets = _subsample_offsets(grid.n, grid.h, subsamples)
    sampler = getattr(V, "phi", None)
    for shape, coef in V.terms():
        lo, hi = shape.bbox
        near = np.all((pts >= lo - half_diag) & (pts <= hi + half_diag), axis=1)
        idx = np.flatnonzero(near)
        phi = shape.facet_distance(pts[idx])
        full = idx[phi < -half_diag]
        cut = idx[np.abs(phi) <= half_diag]
        sub = pts[cut][:, None, :] + offsets[None, :, :]
        mask = shape.contains(sub)
        if sampler is None:
            out[full] += coef
            out[cut] += coef * mask.mean(axis=1)
        else:
            out[full] += coef * np.asarray(sampler(pts[full]), dtype=complex)
            vals = np.zeros(mask.shape, dtype=complex)
            vals[mask] = sampler(sub[mask])
            out[cut] += coef * vals.mean(axis=1)
    return out.reshape(grid.shape)


def sup_norm(V, grid: Grid = None, samples_per_axis: int = None) -> float:
    """``||V||_inf``: exact for piecewise-constant media, sampled for ``chi_P phi``.

    With ``grid`` the maximum is taken over the rasterized samples; otherwise
    ``phi`` is sampled on a lattice of the closed cell that contains its vertices.
    """
    if isinstance(V, PiecewiseConstantPotential):
        if isinstance(V.structure, NestedFamily):
            live = [v for r, v in zip(V.structure.regions, V.values) if r is not None]
            return float(np.max(np.abs(live)))
        return float(np.max(np.abs(V.values), initial=0.0))
    if grid is not None:
        return float(np.max(np.abs(rasterize(V, grid))))
    n = V.dimension
    m = samples_per_axis or (513 if n == 2 else 65)
    lo, hi = V.cell.bbox
    axes = [np.linspace(lo[a], hi[a], m) for a in range(n)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    pts = np.vstack([pts[V.cell.contains(pts, closed=True)], V.cell.vertices])
    return float(np.max(np.abs(V.phi(pts))))


def contrast_product(V, k: float, grid: Grid = None) -> float:
    return k**2 * sup_norm(V, grid)


# ---------------------------------------------------------------------------
# built-in media and file I/O
# ---------------------------------------------------------------------------


def ball_potential(center, radius, value) -> PiecewiseConstantPotential:
    return PiecewiseConstantPotential(ShapeUnion((Ball(center, radius),)), [value])


def builtin_potential(name: str, value=1.0, **params) -> PiecewiseConstantPotential:
    """Analytic media by name: ``disc``, ``ball``, ``square``, ``cube``, ``L-shape``."""
    if name in ("disc", "ball"):
        n = 2 if name == "disc" else 3
        return ball_potential(params.get("center", np.zeros(n)), params.get("radius", 1.0), value)
    if name == "square":
        cell = square(params.get("center", (0.0, 0.0)), params.get("side", 1.0))
        return PiecewiseConstantPotential(CellPartition((cell,), params.get("d0", 0.1)), [value])
    if name == "cube":
        cell = cube(params.get("center", (0.0, 0.0, 0.0)), params.get("side", 1.0))
        return PiecewiseConstantPotential(CellPartition((cell,), params.get("d0", 0.1)), [value])
    if name == "L-shape":
        s = params.get("side", 1.0)
        o = np.asarray(params.get("origin", (-s, -s)), dtype=float)
        cells = (box(o, o + (2 * s, s)), box(o + (0, s), o + (s, 2 * s)))
        return PiecewiseConstantPotential(CellPartition(cells, params.get("d0", 0.1)), [value, value])
    raise InputError(f"unknown built-in medium {name!r}")


def potential_from_dict(d: dict) -> PiecewiseConstantPotential:
    if "builtin" in d:
        params = dict(d)
        name = params.pop("builtin")
        value = _values([params.pop("value", [1.0, 0.0])])[0]
        return builtin_potential(name, value, **params)
    if "shapes" in d:
        shapes = []
        for s in d["shapes"]:
            if s.get("shape") not in ("ball", "disc"):
                raise InputError(f"unknown analytic shape {s.get('shape')!r}")
            shapes.append(Ball(s["center"], s["radius"]))
        return PiecewiseConstantPotential(ShapeUnion(tuple(shapes)), _values(d["values"]))
    structure = structure_from_dict(d)
    vals = _values(d["values"])
    order = d.get("ordering")
    if order is not None and "cells" in d:
        vals = vals[list(order)]
    return PiecewiseConstantPotential(structure, vals)


def load_potential(path) -> PiecewiseConstantPotential:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path, "potential file")
    return potential_from_dict(json.loads(path.read_text()))


def region_fraction(shape, grid: Grid, subsamples: int = SUBSAMPLES) -> np.ndarray:
    """Volume fraction of each grid cell covered by ``shape``."""
    return rasterize(PiecewiseConstantPotential(ShapeUnion((shape,)), [1.0]), grid, subsamples).real


def support_indicator(V, grid: Grid) -> np.ndarray:
    """Volume fraction of each grid cell lying in ``{V != 0}``."""
    if isinstance(V, np.ndarray):
        return (V != 0).astype(float)
    if isinstance(V, AdmissiblePotential):
        return region_fraction(V.cell, grid)
    regions = V.structure.regions
    out = np.zeros(grid.shape)
    if isinstance(V.structure, NestedFamily):
        fr = [region_fraction(r, grid) if r is not None else np.zeros(grid.shape) for r in regions] + [np.zeros(grid.shape)]
        for j, v in enumerate(V.values):
            if v != 0:
                out += fr[j] - fr[j + 1]
        return out
    for r, v in zip(regions, V.values):
        if r is not None and v != 0:
            out += region_fraction(r, grid)
    return out
