"""Lippmann-Schwinger solver for ``(Delta + k^2 (1 + V)) u = 0`` with plane-wave incidence.

The scattered field satisfies ``u_s = k^2 L_V u_s + k^2 L_V u_i`` where
``L_V f = int Phi(x - y) V(y) f(y) dy``.  On a uniform cell-centred grid the
volume potential is a discrete convolution, applied with zero-padded FFTs;
the kernel's singular cell is replaced by the exact integral of ``Phi`` over
the ball (disc) of equal volume.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, gmres
from scipy.special import hankel1

from .errors import (
    DivergentSeries,
    EvaluationAtSingularity,
    InputError,
    NoConvergence,
    ShapeMismatch,
)
from .grid import Grid
from .media import rasterize

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAXIT = 1000
GMRES_RESTART = 60

#: worker threads used by the FFTs; set by the command line ``--threads`` flag
FFT_WORKERS = 1


def green_kernel(n: int, k: float, x) -> np.ndarray:
    """Outgoing fundamental solution of ``Delta + k^2`` at points ``x`` (last axis of length n).

    ``exp(ik|x|) / (4 pi |x|)`` in 3D and ``(i/4) H_0^(1)(k|x|)`` in 2D.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (n,):
        raise InputError(f"expected {n}-dimensional points")
    return green_radial(n, k, np.linalg.norm(x, axis=-1))


def green_radial(n: int, k: float, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r == 0):
        raise EvaluationAtSingularity("fundamental solution evaluated at the origin")
    if n == 3:
        return np.exp(1j * k * r) / (4.0 * np.pi * r)
    if n == 2:
        if not k > 0:
            raise InputError("the 2D kernel needs k > 0")
        return 0.25j * hankel1(0, k * r)
    raise InputError("dimension must be 2 or 3")


def ball_integral(n: int, k: float, a: float) -> complex:
    """``int_{|y| < a} Phi(y) dy``, used for the singular grid cell."""
    if n == 3:
        if k == 0:
            return a * a / 2.0
        return ((np.exp(1j * k * a) * (1.0 - 1j * k * a) - 1.0) / k**2).item()
    ka = k * a
    return (1j * np.pi * a * hankel1(1, ka) / (2.0 * k) - 1.0 / k**2).item()


def equal_volume_radius(n: int, h: float) -> float:
    return h / np.sqrt(np.pi) if n == 2 else h * (3.0 / (4.0 * np.pi)) ** (1.0 / 3.0)


class VolumePotential:
    """FFT application of ``f -> int Phi(x - y) f(y) dy`` on a grid."""

    def __init__(self, grid: Grid, k: float):
        self.grid, self.k = grid, float(k)
        n, N, h = grid.n, grid.N, grid.h
        m = np.arange(2 * N)
        m = np.where(m < N, m, m - 2 * N) * h
        offs = np.stack(np.meshgrid(*([m] * n), indexing="ij"), axis=-1)
        r = np.linalg.norm(offs, axis=-1)
        zero = r == 0
        r[zero] = 1.0
        ker = green_radial(n, self.k, r) * h**n
        ker[(0,) * n] = ball_integral(n, self.k, equal_volume_radius(n, h))
        # offset index N is never reached by a linear convolution of length-N data
        for ax in range(n):
            sl = [slice(None)] * n
            sl[ax] = N
            ker[tuple(sl)] = 0.0
        self.kernel_hat = sfft.fftn(ker, workers=FFT_WORKERS)

    def __call__(self, f: np.ndarray) -> np.ndarray:
        if f.shape != self.grid.shape:
            raise ShapeMismatch(f"field shape {f.shape} does not match grid {self.grid.shape}")
        s = tuple(2 * N for N in f.shape)
        out = sfft.ifftn(self.kernel_hat * sfft.fftn(f, s=s, workers=FFT_WORKERS), workers=FFT_WORKERS)
        return out[tuple(slice(0, N) for N in f.shape)]


@lru_cache(maxsize=8)
def volume_potential(grid: Grid, k: float) -> VolumePotential:
    return VolumePotential(grid, k)


def apply_volume_potential(V_samples, f, k: float, grid: Grid) -> np.ndarray:
    """Samples of ``L_V f = int Phi(x - y) V(y) f(y) dy``."""
    V_samples = np.asarray(V_samples)
    f = np.asarray(f)
    if V_samples.shape != grid.shape or f.shape != grid.shape:
        raise ShapeMismatch("potential and field samples must match the grid shape")
    if not np.any(V_samples):
        return np.zeros(grid.shape, dtype=complex)
    return volume_potential(grid, float(k))(V_samples * f)


@dataclass(frozen=True)
class IncidentWave:
    """Plane wave ``exp(i k x . d)``."""

    d: np.ndarray
    k: float

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise InputError("incident direction must be a unit vector")
        if not self.k > 0:
            raise InputError("wavenumber must be positive")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "k", float(self.k))

    @classmethod
    def from_angle(cls, theta: float, k: float) -> "IncidentWave":
        return cls(np.array([np.cos(theta), np.sin(theta)]), k)

    def __call__(self, x) -> np.ndarray:
        return np.exp(1j * self.k * (np.asarray(x, dtype=float) @ self.d))

    def to_dict(self) -> dict:
        return {"k": self.k, "d": self.d.tolist()}


@dataclass
class FieldSolution:
    grid: Grid
    incident: IncidentWave
    V: np.ndarray
    us: np.ndarray
    u: np.ndarray
    method: str
    iterations: int = 0
    residual: float = 0.0
    history: list = field(default_factory=list)

    @property
    def k(self) -> float:
        return self.incident.k

    @property
    def ui(self) -> np.ndarray:
        return self.u - self.us


def _samples(V, grid: Grid) -> np.ndarray:
    if isinstance(V, np.ndarray):
        if V.shape != grid.shape:
            raise ShapeMismatch("potential samples do not match the grid")
        return V.astype(complex)
    return rasterize(V, grid)


def solve_total_field(
    V,
    inc: IncidentWave,
    grid: Grid,
    method: str = "iterative",
    tol: float = DEFAULT_TOL,
    maxit: int = DEFAULT_MAXIT,
    terms: int = 20,
) -> FieldSolution:
    """Solve the discrete Lippmann-Schwinger equation.

    ``method="born"`` sums ``terms`` terms of the Neumann series;
    ``method="iterative"`` runs restarted GMRES on ``(I - k^2 L_V) u_s = k^2 L_V u_i``
    to relative residual ``tol``.
    """
    Vs = _samples(V, grid)
    ui = inc(grid.points)
    k2 = inc.k**2
    if not np.any(Vs):
        return FieldSolution(grid, inc, Vs, np.zeros(grid.shape, complex), ui.copy(), method)
    L = volume_potential(grid, inc.k)
    rhs = k2 * L(Vs * ui)

    if method == "born":
        us = np.zeros(grid.shape, dtype=complex)
        term = rhs
        norms = []
        for m in range(terms):
            us = us + term
            tn = float(np.linalg.norm(term))
            norms.append(tn)
            if m >= 1 and tn > norms[-2] and tn > norms[0]:
                raise DivergentSeries(f"Neumann series terms grow: |t_{m + 1}|/|t_1| = {tn / norms[0]:.3g}")
            if m + 1 < terms:
                term = k2 * L(Vs * term)
        res = np.linalg.norm(us - k2 * L(Vs * us) - rhs) / np.linalg.norm(rhs)
        return FieldSolution(grid, inc, Vs, us, ui + us, "born", terms, float(res), norms)

    if method != "iterative":
        raise InputError(f"unknown solver method {method!r}")
    shape, size = grid.shape, Vs.size

    def matvec(x):
        x = x.reshape(shape)
        return (x - k2 * L(Vs * x)).ravel()

    A = LinearOperator((size, size), matvec=matvec, dtype=complex)
    history = []
    b = rhs.ravel()
    bn = np.linalg.norm(b)
    x, info = gmres(
        A, b, rtol=tol, atol=0.0, restart=GMRES_RESTART, maxiter=maxit,
        callback=lambda pr: history.append(float(pr)), callback_type="pr_norm",
    )
    res = float(np.linalg.norm(matvec(x) - b) / bn)
    if info != 0 or res > 10 * tol:
        raise NoConvergence(f"GMRES stopped after {len(history)} iterations at residual {res:.3e}")
    us = x.reshape(shape)
    logger.debug("GMRES converged in %d iterations, residual %.2e", len(history), res)
    return FieldSolution(grid, inc, Vs, us, ui + us, "iterative", len(history), res, history)


def h2_seminorm(f: np.ndarray, grid: Grid) -> float:
    """Discrete ``H^2`` norm over the grid interior (one boundary layer dropped).

    Includes the ``L^2`` part, all first derivatives and all ordered pairs of
    second derivatives, each from centred differences.
    """
    f = np.asarray(f)
    if f.shape != grid.shape:
        raise ShapeMismatch("field does not match grid")
    n, h = grid.n, grid.h
    inner = (slice(1, -1),) * n

    def shift(ax_steps):
        sl = []
        for ax in range(n):
            s = ax_steps.get(ax, 0)
            sl.append(slice(1 + s, f.shape[ax] - 1 + s))
        return f[tuple(sl)]

    total = np.sum(np.abs(f[inner]) ** 2)
    c = f[inner]
    for a in range(n):
        da = (shift({a: 1}) - shift({a: -1})) / (2 * h)
        daa = (shift({a: 1}) - 2 * c + shift({a: -1})) / h**2
        total += np.sum(np.abs(da) ** 2) + np.sum(np.abs(daa) ** 2)
        for b in range(a + 1, n):
            dab = (shift({a: 1, b: 1}) - shift({a: 1, b: -1}) - shift({a: -1, b: 1}) + shift({a: -1, b: -1})) / (4 * h * h)
            total += 2 * np.sum(np.abs(dab) ** 2)
    return float(np.sqrt(total * h**n))


# ---------------------------------------------------------------------------
# field dumps
# ---------------------------------------------------------------------------

FIELD_MAGIC = b"POLYSCAT-FIELD 1\n"


def _field_header(sol: FieldSolution) -> dict:
    g = sol.grid
    return {
        "n": g.n,
        "R": g.R,
        "h": g.h,
        "counts": list(g.counts),
        "k": sol.k,
        "d": sol.incident.d.tolist(),
        "method": sol.method,
        "iterations": sol.iterations,
        "residual": sol.residual,
    }


def write_field_dump(sol: FieldSolution, path, fmt: str = "bin") -> Path:
    """Write ``u_s`` and ``u`` with a header line.

    Binary layout: magic line, one JSON header line (sorted keys), then
    ``u_s`` followed by ``u`` as little-endian complex128 in C order.
    """
    path = Path(path)
    header = _field_header(sol)
    if fmt == "bin":
        with path.open("wb") as fh:
            fh.write(FIELD_MAGIC)
            fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
            fh.write(np.ascontiguousarray(sol.us, dtype="<c16").tobytes())
            fh.write(np.ascontiguousarray(sol.u, dtype="<c16").tobytes())
        return path
    if fmt == "csv":
        pts = sol.grid.points.reshape(-1, sol.grid.n)
        cols = ["x", "y", "z"][: sol.grid.n] + ["re_us", "im_us", "re_u", "im_u"]
        us, u = sol.us.ravel(), sol.u.ravel()
        data = np.column_stack([pts, us.real, us.imag, u.real, u.imag])
        with path.open("w") as fh:
            fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
            fh.write(",".join(cols) + "\n")
            np.savetxt(fh, data, delimiter=",", fmt="%.17g")
        return path
    raise InputError(f"unknown field dump format {fmt!r}")


def read_field_dump(path) -> tuple[dict, np.ndarray, np.ndarray]:
    """Inverse of :func:`write_field_dump` for the binary format."""
    with Path(path).open("rb") as fh:
        if fh.readline() != FIELD_MAGIC:
            raise InputError(f"{path} is not a polyscat field dump")
        header = json.loads(fh.readline())
        shape = tuple(header["counts"])
        size = int(np.prod(shape))
        raw = np.frombuffer(fh.read(), dtype="<c16")
    if raw.size != 2 * size:
        raise InputError("field dump is truncated")
    return header, raw[:size].reshape(shape), raw[size:].reshape(shape)
