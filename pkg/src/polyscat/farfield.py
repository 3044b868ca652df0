"""Far-field patterns of solved fields and distances between patterns."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DirectionMismatch, InputError
from .forward import FieldSolution, _samples

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


def sphere_directions(n: int, count: int) -> np.ndarray:
    """Uniform angles on the circle (2D) or a Fibonacci point set on the sphere (3D)."""
    j = np.arange(count)
    if n == 2:
        t = 2 * np.pi * j / count
        return np.column_stack([np.cos(t), np.sin(t)])
    if n == 3:
        z = 1.0 - (2 * j + 1) / count
        r = np.sqrt(1.0 - z * z)
        phi = GOLDEN_ANGLE * j
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    raise InputError("dimension must be 2 or 3")


def sphere_area(n: int) -> float:
    return 2 * np.pi if n == 2 else 4 * np.pi


def far_field_constant(n: int, k: float) -> complex:
    return 1.0 / (4 * np.pi) if n == 3 else np.exp(1j * np.pi / 4) / np.sqrt(8 * np.pi * k)


@dataclass(frozen=True)
class FarFieldPattern:
    directions: np.ndarray
    values: np.ndarray
    k: float
    incident: np.ndarray

    def __post_init__(self):
        dirs = np.asarray(self.directions, dtype=float)
        vals = np.asarray(self.values, dtype=complex)
        if dirs.shape[0] != vals.shape[0]:
            raise InputError("one value per direction is required")
        if not np.allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12):
            raise InputError("far-field directions must be unit vectors")
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "incident", np.asarray(self.incident, dtype=float))

    @property
    def n(self) -> int:
        return self.directions.shape[1]

    def norm(self) -> float:
        """Equal-weight ``L^2(S^{n-1})`` norm."""
        w = sphere_area(self.n) / len(self.values)
        return float(np.sqrt(w * np.sum(np.abs(self.values) ** 2)))

    def __sub__(self, other):
        _check_compatible(self, other)
        return FarFieldPattern(self.directions, self.values - other.values, self.k, self.incident)


def far_field(V, sol: FieldSolution, k: float = None, directions=64) -> FarFieldPattern:
    """``A(xhat) = c_n k^2 sum_y h^n exp(-i k xhat . y) V(y) u(y)``.

    ``directions`` is an array of unit vectors or a count passed to
    :func:`sphere_directions`.  ``V`` may be ``None`` to reuse the samples
    stored on the solution.
    """
    grid = sol.grid
    k = sol.k if k is None else float(k)
    if abs(k - sol.k) > 1e-14 * max(1.0, k):
        raise InputError("far field requested at a wavenumber other than the solve's")
    Vs = sol.V if V is None else _samples(V, grid)
    if np.ndim(directions) == 0:
        directions = sphere_directions(grid.n, int(directions))
    dirs = np.asarray(directions, dtype=float)
    src = (Vs * sol.u).ravel()
    nz = np.flatnonzero(src)
    pts = grid.points.reshape(-1, grid.n)[nz]
    src = src[nz]
    vals = np.empty(len(dirs), dtype=complex)
    chunk = max(1, 4_000_000 // max(1, len(nz)))
    for s in range(0, len(dirs), chunk):
        phase = np.exp(-1j * k * (dirs[s:s + chunk] @ pts.T))
        vals[s:s + chunk] = phase @ src
    vals *= far_field_constant(grid.n, k) * k**2 * grid.cell_volume
    return FarFieldPattern(dirs, vals, k, sol.incident.d)


def _check_compatible(A: FarFieldPattern, B: FarFieldPattern) -> None:
    if A.directions.shape != B.directions.shape or not np.allclose(A.directions, B.directions, atol=1e-12, rtol=0):
        raise DirectionMismatch("patterns sampled on different direction sets")
    if abs(A.k - B.k) > 1e-14 * max(1.0, A.k):
        raise DirectionMismatch("patterns computed at different wavenumbers")


def far_field_distance(A: FarFieldPattern, B: FarFieldPattern) -> float:
    """``||A - B|| / (||A|| + ||B||)``: 0 iff the samples agree, at most 1."""
    _check_compatible(A, B)
    diff = np.linalg.norm(A.values - B.values)
    if diff == 0:
        return 0.0
    return float(diff / (np.linalg.norm(A.values) + np.linalg.norm(B.values)))


def relative_l2(A, B) -> float:
    """``||A - B|| / ||B||`` on matching samples; ``B`` is the reference."""
    a = A.values if isinstance(A, FarFieldPattern) else np.asarray(A)
    b = B.values if isinstance(B, FarFieldPattern) else np.asarray(B)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


# ---------------------------------------------------------------------------
# pattern CSV
# ---------------------------------------------------------------------------


def write_pattern_csv(A: FarFieldPattern, path, geometry_hash: str = "") -> Path:
    """Columns ``theta[, phi], re_A, im_A``; one ``#`` header line carrying k, d and the geometry hash."""
    path = Path(path)
    d = A.directions
    if A.n == 2:
        ang = np.arctan2(d[:, 1], d[:, 0])[:, None]
        cols = ["theta"]
    else:
        ang = np.column_stack([np.arccos(np.clip(d[:, 2], -1, 1)), np.arctan2(d[:, 1], d[:, 0])])
        cols = ["theta", "phi"]
    header = {"k": A.k, "d": A.incident.tolist(), "geometry": geometry_hash, "n": A.n}
    with path.open("w") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        fh.write(",".join(cols + ["re_A", "im_A"]) + "\n")
        for a, v in zip(ang, A.values):
            fh.write(",".join(f"{x:.17g}" for x in (*a, v.real, v.imag)) + "\n")
    return path


def read_pattern_csv(path) -> tuple[FarFieldPattern, dict]:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# "):
        raise InputError(f"{path} lacks a pattern header")
    header = json.loads(lines[0][2:])
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[2:] if ln.strip()])
    if header["n"] == 2:
        t = data[:, 0]
        dirs = np.column_stack([np.cos(t), np.sin(t)])
        vals = data[:, 1] + 1j * data[:, 2]
    else:
        th, ph = data[:, 0], data[:, 1]
        dirs = np.column_stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
        vals = data[:, 2] + 1j * data[:, 3]
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return FarFieldPattern(dirs, vals, header["k"], header["d"]), header
