"""Independent reference computations used by the test suite.

Each oracle avoids the code path it checks: hulls by exhaustive plane
enumeration, Bessel functions by power series, clearance by connected-component
labelling, sup norms by dense sampling.
"""

import itertools
import math

import numpy as np
from scipy import ndimage


def brute_force_extreme_points(points, tol=1e-9):
    """Indices of the hull vertices of a 3D point set in general position.

    A point is a vertex iff it lies on some plane through three input points
    with every other point on one side.
    """
    P = np.asarray(points, dtype=float)
    m = len(P)
    ext = set()
    for i, j, k in itertools.combinations(range(m), 3):
        nrm = np.cross(P[j] - P[i], P[k] - P[i])
        if np.linalg.norm(nrm) < 1e-12:
            continue
        s = (P - P[i]) @ nrm
        if np.all(s <= tol) or np.all(s >= -tol):
            ext.update((i, j, k))
    return sorted(ext)


def bessel_j0_y0(x, terms=60):
    """``J_0`` and ``Y_0`` from their ascending power series."""
    j0 = 0.0
    y_sum = 0.0
    harmonic = 0.0
    for m in range(terms):
        if m > 0:
            harmonic += 1.0 / m
        c = (-1) ** m * (x / 2) ** (2 * m) / math.factorial(m) ** 2
        j0 += c
        y_sum += c * harmonic
    gamma = 0.57721566490153286
    y0 = (2 / math.pi) * ((math.log(x / 2) + gamma) * j0 - y_sum)
    return j0, y0


def laplace_1d(p):
    """``int_0^inf exp(-p t) dt = 1/p`` for ``Re p > 0``."""
    assert p.real > 0
    return 1.0 / p


def regular_polygon_angle(m):
    return (m - 2) * math.pi / m


def clearance_by_labelling(cells, d0, h, pad=None):
    """Clearance verdict from connected components of the free set.

    Cell ``j`` passes if some vertex at distance ``>= d0`` from later cells has
    a free lattice node within one step that shares a component with the box
    boundary.  Uses a fresh lattice and exact point-polygon distances computed
    here from facet data.
    """
    live = [c for c in cells if c is not None]
    lo = np.min([c.vertices.min(axis=0) for c in live], axis=0)
    hi = np.max([c.vertices.max(axis=0) for c in live], axis=0)
    pad = d0 + 2 * h if pad is None else pad
    lo, hi = lo - pad, hi + pad
    counts = np.ceil((hi - lo) / h).astype(int) + 1
    axes = [lo[a] + h * np.arange(counts[a]) for a in range(2)]
    X, Y = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])

    def dist(cell, q):
        # distance to a convex polygon: 0 inside, else min over edges
        V = cell.vertices
        out = np.full(len(q), np.inf)
        for a, b in zip(V, np.roll(V, -1, axis=0)):
            t = np.clip(((q - a) @ (b - a)) / ((b - a) @ (b - a)), 0, 1)
            out = np.minimum(out, np.linalg.norm(q - (a + t[:, None] * (b - a)), axis=1))
        inside = np.all(q @ cell.normals.T - cell.offsets < 0, axis=1)
        out[inside] = 0.0
        return out

    verdicts = []
    for j, cell in enumerate(cells):
        if cell is None:
            verdicts.append(True)
            continue
        later = [c for c in cells[j + 1:] if c is not None]
        dmin = np.min([dist(c, pts) for c in later], axis=0) if later else np.full(len(pts), np.inf)
        free = (dmin >= d0 - 1e-9).reshape(counts)
        lab, _ = ndimage.label(free)
        border = set(np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]]))) - {0}
        ok = False
        for v in cell.vertices:
            if later and min(dist(c, v[None])[0] for c in later) < d0 - 1e-9:
                continue
            idx = np.rint((v - lo) / h).astype(int)
            for off in itertools.product((-1, 0, 1), repeat=2):
                a, b = idx + off
                if 0 <= a < counts[0] and 0 <= b < counts[1] and lab[a, b] in border:
                    ok = True
        verdicts.append(ok)
    return verdicts


def dense_sup(phi, lo, hi, m=2001):
    x = np.linspace(lo[0], hi[0], m)
    y = np.linspace(lo[1], hi[1], m)
    X, Y = np.meshgrid(x, y, indexing="ij")
    return float(np.max(np.abs(phi(np.stack([X, Y], axis=-1)))))
