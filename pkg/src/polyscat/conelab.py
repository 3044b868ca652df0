"""Laplace transforms of convex polyhedral cones at isotropic complex frequencies.

For ``rho`` in C^n with ``rho . rho = 0`` (bilinear) the exponential
``exp(rho . x)`` is harmonic, and over a simplex cone generated by unit
vectors ``w_1..w_n``

    int_C exp(rho . x) dx = |det(w_1, ..., w_n)| / prod_j (-rho . w_j),

valid when every ``Re(-rho . w_j) > 0``.  General cones are fanned into
simplex cones.  :func:`choose_rho` builds the frequency
``rho = -R_eps - i I`` whose transform over the piece next to the edge ``w_1``
blows up like ``1/eps`` while the remainder of the cone stays bounded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InputError, NonConvergent, NoSeparatingVector
from .geometry import Cone, _max_margin
from .hashing import content_hash


@dataclass(frozen=True)
class CGOVector:
    """An isotropic complex frequency with the data used to build it (3D)."""

    rho: np.ndarray
    z: Optional[np.ndarray] = None
    w: Optional[np.ndarray] = None
    I: Optional[np.ndarray] = None
    eps: Optional[float] = None
    R_eps: Optional[np.ndarray] = None
    margin: Optional[float] = None

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        object.__setattr__(self, "rho", rho)
        mag2 = float(np.sum(np.abs(rho) ** 2))
        if mag2 == 0:
            raise InputError("rho must be nonzero")
        if abs(rho @ rho) > 1e-12 * mag2:
            raise InputError(f"rho . rho = {rho @ rho} is not zero")

    def scaled(self, s: float) -> "CGOVector":
        return CGOVector(s * self.rho, self.z, self.w, self.I, self.eps, self.R_eps, self.margin)

    @property
    def n(self) -> int:
        return len(self.rho)


def _rho(rho) -> np.ndarray:
    return np.asarray(rho.rho if isinstance(rho, CGOVector) else rho, dtype=complex)


def simplex_cone_transform(generators, rho) -> complex:
    """``|det W| / prod_j (-rho . w_j)`` for the simplex cone spanned by the rows of ``generators``."""
    W = np.asarray(generators, dtype=float)
    rho = _rho(rho)
    n = W.shape[1]
    if W.shape != (n, n):
        raise InputError("a simplex cone has exactly n generators")
    W = W / np.linalg.norm(W, axis=1, keepdims=True)
    det = abs(np.linalg.det(W))
    if det < 1e-14:
        raise InputError("simplex generators are linearly dependent")
    p = -(W @ rho)
    if np.any(p.real <= 0):
        raise NonConvergent(f"Re(-rho . w_j) = {p.real.min():.3e} <= 0")
    return complex(det / np.prod(p))


def _fan(gens, root: int = 0) -> list:
    g = np.roll(gens, -root, axis=0)
    return [np.array([g[0], g[j], g[j + 1]]) for j in range(1, len(g) - 1)]


def check_convergence(cone: Cone, rho) -> None:
    p = -(cone.generators @ _rho(rho))
    if np.any(p.real <= 0):
        raise NonConvergent(f"Re(-rho . w_j) = {p.real.min():.3e} <= 0 on some generator")


def fan_transform(cone: Cone, rho, root: int = 0) -> complex:
    """Transform of a general cone as a sum over simplex cones fanned from generator ``root``."""
    rho = _rho(rho)
    check_convergence(cone, rho)
    if cone.dimension == 2 or cone.is_simplex:
        return simplex_cone_transform(cone.generators, rho)
    return complex(sum(simplex_cone_transform(t, rho) for t in _fan(cone.generators, root)))


def split_transform(cone: Cone, rho) -> tuple[complex, complex]:
    """``(C_1 part, C' part)``: the simplex cone on ``w_1, w_2, w_m`` and the cone on ``w_2..w_m``."""
    rho = _rho(rho)
    check_convergence(cone, rho)
    w = cone.generators
    c1 = simplex_cone_transform(np.array([w[0], w[1], w[-1]]), rho)
    rest = w[1:]
    if len(rest) < 3:
        return c1, 0j
    c2 = complex(sum(simplex_cone_transform(t, rho) for t in _fan(rest, 0)))
    return c1, c2


def choose_rho(cone: Cone, eps: float) -> CGOVector:
    """``rho = -R_eps - i I`` with ``R_eps = (z + eps w) / |z + eps w|``, ``w = w_1``.

    ``z`` is the unit vector orthogonal to ``w_1`` maximizing ``min_{j>1} z . w_j``
    (a small linear program); ``I = z x w``.
    """
    if cone.dimension != 3:
        raise InputError("choose_rho is the 3D construction; use interior_rho in 2D")
    if not eps > 0:
        raise InputError("eps must be positive")
    w = cone.generators[0]
    z, margin = _max_margin(cone.generators[1:], equality=w)
    if margin <= 1e-12:
        raise NoSeparatingVector("no z with z . w_1 = 0 and z . w_j > 0 for j > 1")
    z = z - (z @ w) * w
    z /= np.linalg.norm(z)
    I = np.cross(z, w)
    I /= np.linalg.norm(I)
    R = (z + eps * w) / np.linalg.norm(z + eps * w)
    rho = -R - 1j * I
    return CGOVector(rho, z=z, w=w.copy(), I=I, eps=float(eps), R_eps=R, margin=margin)


def interior_rho(cone: Cone, orientation: int = 1) -> CGOVector:
    """2D frequency with ``-Re rho`` along the cone bisector and ``|Re rho| = 1``."""
    if cone.dimension != 2:
        raise InputError("interior_rho is the 2D construction")
    cone.halfspace_direction()
    a = cone.generators.sum(axis=0)
    a /= np.linalg.norm(a)
    perp = np.array([-a[1], a[0]]) * (1 if orientation >= 0 else -1)
    return CGOVector(-a + 1j * perp)


def default_rho(cone: Cone, eps: float = 0.1) -> CGOVector:
    return interior_rho(cone) if cone.dimension == 2 else choose_rho(cone, eps)


def cone_hash(cone: Cone) -> str:
    return content_hash({"apex": np.round(cone.apex, 12), "generators": np.round(cone.generators, 12)})


@dataclass
class Certificate:
    cone_hash: str
    rho: np.ndarray
    eps: Optional[float]
    records: list

    @property
    def min_scaled(self) -> float:
        return min(r["sn_abs_T"] for r in self.records)

    @property
    def max_scaled(self) -> float:
        return max(r["sn_abs_T"] for r in self.records)

    @property
    def spread(self) -> float:
        return (self.max_scaled - self.min_scaled) / self.max_scaled

    @property
    def certified(self) -> bool:
        return self.min_scaled > 0


def certify_nonvanishing(cone: Cone, s_list: Sequence[float], rho=None, eps: float = 0.1) -> Certificate:
    """Evaluate ``s^n |T(s)|`` with ``T(s) = int_C exp(s rho . x) dx`` over a scale sweep.

    By homogeneity the scaled modulus is constant in ``s``; a positive minimum
    is the lower-bound certificate.  In 3D each record also carries the ``C_1``
    and ``C'`` pieces.
    """
    if rho is None:
        rho = default_rho(cone, eps)
    r = _rho(rho)
    n = cone.dimension
    eps_used = rho.eps if isinstance(rho, CGOVector) else None
    h = cone_hash(cone)
    records = []
    for s in s_list:
        T = fan_transform(cone, s * r)
        rec = {"cone": h, "eps": eps_used, "s": float(s), "sn_abs_T": float(s**n * abs(T)), "T": T}
        if n == 3:
            c1, c2 = split_transform(cone, s * r)
            rec["C1_part"] = float(abs(c1))
            rec["Cprime_part"] = float(abs(c2))
        records.append(rec)
    return Certificate(h, r, eps_used, records)


def laplace_split_sweep(cone: Cone, eps_list: Sequence[float]) -> list:
    """One record per ``eps`` with ``|C_1 part|``, ``|C' part|`` and ``|T|`` at the ``choose_rho`` frequency."""
    h = cone_hash(cone)
    out = []
    for eps in eps_list:
        rho = choose_rho(cone, eps)
        c1, c2 = split_transform(cone, rho)
        out.append(
            {
                "cone": h,
                "eps": float(eps),
                "s": 1.0,
                "sn_abs_T": float(abs(fan_transform(cone, rho))),
                "C1_part": float(abs(c1)),
                "Cprime_part": float(abs(c2)),
            }
        )
    return out
