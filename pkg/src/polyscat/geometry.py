"""Convex polytopes, vertex cones, and the two admissibility structures.

A cell is stored by its extreme points and its facet inequalities
``normal . x <= offset`` with outward unit normals.  Cones are stored by their
unit edge generators; in 3D consecutive generators span a boundary facet.
Everything here is an immutable value: operations return new objects.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .errors import (
    ClearanceViolated,
    DegeneratePolytope,
    InputError,
    MissingFile,
    NestingViolated,
    NoSeparatingVector,
    NotAVertex,
)

#: Points closer than this to a hyperplane count as lying on it.
TOL = 1e-9


def _as_points(points, n=None) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise InputError(f"expected an (m, n) array of points, got shape {pts.shape}")
    if n is not None and pts.shape[1] != n:
        raise InputError(f"expected {n}-dimensional points, got {pts.shape[1]}")
    if not np.all(np.isfinite(pts)):
        raise InputError("point coordinates must be finite")
    return pts


@dataclass(frozen=True, eq=False)
class Polytope:
    """Bounded open convex polytope (polygon or polyhedron).

    Attributes
    ----------
    vertices : ndarray, shape (m, n)
        Extreme points. Counter-clockwise in 2D, lexicographic in 3D.
    normals : ndarray, shape (F, n)
        Outward unit facet normals.
    offsets : ndarray, shape (F,)
        Facet offsets, the closed cell is ``normals @ x <= offsets``.
    facets : tuple of tuple of int
        Vertex indices of each facet; cyclically ordered for 3D facets.
    """

    vertices: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    facets: tuple
    volume: float

    @property
    def dimension(self) -> int:
        return self.vertices.shape[1]

    @property
    def edges(self) -> tuple:
        if self.dimension == 2:
            return tuple(tuple(sorted(f)) for f in self.facets)
        out = set()
        for f in self.facets:
            for a, b in zip(f, f[1:] + f[:1]):
                out.add((min(a, b), max(a, b)))
        return tuple(sorted(out))

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def facet_distance(self, points) -> np.ndarray:
        """Largest signed facet distance; negative inside, a lower bound on the distance outside."""
        pts = np.asarray(points, dtype=float)
        return np.max(pts @ self.normals.T - self.offsets, axis=-1)

    def contains(self, points, closed: bool = False) -> np.ndarray:
        phi = self.facet_distance(points)
        return phi <= TOL if closed else phi < -TOL

    def distance(self, points) -> np.ndarray:
        """Euclidean distance to the closed polytope (zero inside)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        flat = pts.reshape(-1, self.dimension)
        best = np.full(flat.shape[0], np.inf)
        for a, b in self.edges:
            best = np.minimum(best, _segment_distance(flat, self.vertices[a], self.vertices[b]))
        if self.dimension == 3:
            for fi, f in enumerate(self.facets):
                nu, off = self.normals[fi], self.offsets[fi]
                poly = self.vertices[list(f)]
                foot = flat - np.outer(flat @ nu - off, nu)
                inside = np.ones(flat.shape[0], dtype=bool)
                for p, q in zip(poly, np.roll(poly, -1, axis=0)):
                    inward = np.cross(nu, q - p)
                    inside &= (foot - p) @ inward >= -TOL
                d = np.abs(flat @ nu - off)
                best = np.where(inside, np.minimum(best, d), best)
        best[self.facet_distance(flat) <= 0.0] = 0.0
        return best.reshape(pts.shape[:-1])

    def vertex_index(self, x) -> int:
        x = np.asarray(x, dtype=float)
        d = np.linalg.norm(self.vertices - x, axis=1)
        i = int(np.argmin(d))
        if d[i] > TOL * max(1.0, float(np.abs(x).max(initial=0.0))):
            raise NotAVertex(f"{x.tolist()} is not a vertex of the polytope")
        return i

    def translated(self, t) -> "Polytope":
        return validate_admissible_cell(self.vertices + np.asarray(t, dtype=float))

    def same_as(self, other: "Polytope", tol: float = 1e-9) -> bool:
        if other is None or self.vertices.shape != other.vertices.shape:
            return False
        a = self.vertices[np.lexsort(self.vertices.T[::-1])]
        b = other.vertices[np.lexsort(other.vertices.T[::-1])]
        return bool(np.allclose(a, b, atol=tol, rtol=0.0))

    def to_dict(self) -> dict:
        return {"vertices": self.vertices.tolist()}

    def __repr__(self) -> str:
        return f"Polytope(n={self.dimension}, vertices={len(self.vertices)}, facets={len(self.facets)})"


def _segment_distance(pts, a, b) -> np.ndarray:
    ab = b - a
    t = np.clip((pts - a) @ ab / (ab @ ab), 0.0, 1.0)
    return np.linalg.norm(pts - a - t[:, None] * ab, axis=1)


def _order_facet(vertices, idx, normal) -> tuple:
    pts = vertices[idx]
    c = pts.mean(axis=0)
    u = pts[0] - c
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    ang = np.arctan2((pts - c) @ v, (pts - c) @ u)
    order = np.argsort(ang)
    return tuple(int(idx[i]) for i in order)


def validate_admissible_cell(points) -> Polytope:
    """Convex hull of ``points`` as an admissible cell.

    Redundant input points (interior, or on an edge or facet without being
    extreme) are dropped.  Raises :class:`DegeneratePolytope` if the hull is
    not full-dimensional.
    """
    pts = _as_points(points)
    m, n = pts.shape
    if n not in (2, 3):
        raise InputError(f"only 2D and 3D cells are supported, got n={n}")
    if m < n + 1:
        raise DegeneratePolytope(f"need at least {n + 1} points, got {m}")
    scale = max(1.0, float(np.abs(pts).max()))
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[-1] <= TOL * scale * max(1.0, sv[0]):
        raise DegeneratePolytope("points do not span a full-dimensional cell")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegeneratePolytope(str(exc)) from exc

    # merge coplanar simplices into facets
    planes: list[tuple[np.ndarray, float]] = []
    for eq in hull.equations:
        nu, off = eq[:-1], -eq[-1]
        nrm = np.linalg.norm(nu)
        nu, off = nu / nrm, off / nrm
        if not any(np.allclose(nu, p[0], atol=1e-9) and abs(off - p[1]) <= TOL * scale for p in planes):
            planes.append((nu, off))
    normals = np.array([p[0] for p in planes])
    offsets = np.array([p[1] for p in planes])

    cand = pts[np.unique(hull.vertices)]
    keep = []
    for v in cand:
        on = np.abs(normals @ v - offsets) <= TOL * scale
        if np.linalg.matrix_rank(normals[on], tol=1e-9) == n:
            keep.append(v)
    verts = np.unique(np.array(keep), axis=0)
    if n == 2:
        c = verts.mean(axis=0)
        ang = np.arctan2(verts[:, 1] - c[1], verts[:, 0] - c[0])
        verts = verts[np.argsort(ang)]
        start = int(np.lexsort(verts.T[::-1])[0])
        verts = np.roll(verts, -start, axis=0)

    facets = []
    for nu, off in zip(normals, offsets):
        idx = np.flatnonzero(np.abs(verts @ nu - off) <= TOL * scale)
        if n == 2:
            if len(idx) != 2:
                raise DegeneratePolytope("inconsistent 2D hull facet")
            a, b = int(idx[0]), int(idx[1])
            # orient edges counter-clockwise
            if (a, b) == (0, len(verts) - 1):
                a, b = b, a
            facets.append((a, b))
        else:
            if len(idx) < 3:
                raise DegeneratePolytope("inconsistent 3D hull facet")
            facets.append(_order_facet(verts, idx, nu))
    return Polytope(
        vertices=verts,
        normals=normals,
        offsets=offsets,
        facets=tuple(facets),
        volume=float(hull.volume),
    )


# ---------------------------------------------------------------------------
# built-in cells
# ---------------------------------------------------------------------------


def box(lo, hi) -> Polytope:
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    corners = np.array(list(itertools.product(*zip(lo, hi))))
    return validate_admissible_cell(corners)


def square(center=(0.0, 0.0), side=1.0) -> Polytope:
    c = np.asarray(center, dtype=float)
    return box(c - side / 2, c + side / 2)


def cube(center=(0.0, 0.0, 0.0), side=1.0) -> Polytope:
    c = np.asarray(center, dtype=float)
    return box(c - side / 2, c + side / 2)


def regular_polygon(m: int, radius=1.0, center=(0.0, 0.0), rotation=0.0) -> Polytope:
    t = rotation + 2 * np.pi * np.arange(m) / m
    pts = np.asarray(center, dtype=float) + radius * np.column_stack([np.cos(t), np.sin(t)])
    return validate_admissible_cell(pts)


def pixel_lattice(shape: Sequence[int], side=1.0, origin=None) -> list[Polytope]:
    """Unit-cell lattice ordered left to right, then top to bottom (row-major from the top).

    ``origin`` is the lower corner of the lattice; by default it is centered at 0.
    """
    shape = tuple(int(s) for s in shape)
    n = len(shape)
    if origin is None:
        origin = -0.5 * side * np.array(shape[::-1], dtype=float)
    origin = np.asarray(origin, dtype=float)
    cells = []
    if n == 2:
        rows, cols = shape
        for r in range(rows):
            for c in range(cols):
                lo = origin + side * np.array([c, rows - 1 - r])
                cells.append(box(lo, lo + side))
    else:
        for idx in itertools.product(*(range(s) for s in shape)):
            lo = origin + side * np.array(idx[::-1], dtype=float)
            cells.append(box(lo, lo + side))
    return cells


# ---------------------------------------------------------------------------
# cones
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Cone:
    """Open convex polyhedral cone ``apex + {sum_j a_j w_j : a_j > 0}``.

    Generators are normalized on construction.  In 3D they must be ordered so
    that consecutive pairs (cyclically) span boundary facets.
    """

    apex: np.ndarray
    generators: np.ndarray

    def __post_init__(self):
        w = _as_points(self.generators)
        n = w.shape[1]
        if n not in (2, 3):
            raise InputError("cones must be 2D or 3D")
        norms = np.linalg.norm(w, axis=1)
        if np.any(norms <= TOL):
            raise InputError("zero generator")
        w = w / norms[:, None]
        if n == 2 and len(w) != 2:
            raise InputError("a 2D cone has exactly two generators")
        if n == 3 and len(w) < 3:
            raise InputError("a 3D cone needs at least three generators")
        for i, j in itertools.combinations(range(len(w)), 2):
            if np.linalg.norm(w[i] - w[j]) <= 1e-12:
                raise InputError("generators must be pairwise distinct")
        object.__setattr__(self, "generators", w)
        apex = np.zeros(n) if self.apex is None else np.asarray(self.apex, dtype=float)
        object.__setattr__(self, "apex", apex)

    @property
    def dimension(self) -> int:
        return self.generators.shape[1]

    @property
    def m(self) -> int:
        return len(self.generators)

    @property
    def is_simplex(self) -> bool:
        return self.m == self.dimension

    def inward_normals(self) -> np.ndarray:
        w = self.generators
        inner = w.mean(axis=0)
        if self.dimension == 2:
            rot = np.array([[0.0, -1.0], [1.0, 0.0]])
            out = [rot @ w[0], rot @ w[1]]
            out = [v if v @ w[1 - i] > 0 else -v for i, v in enumerate(out)]
            return np.array(out)
        out = []
        for a, b in zip(w, np.roll(w, -1, axis=0)):
            v = np.cross(a, b)
            v /= np.linalg.norm(v)
            out.append(v if v @ inner > 0 else -v)
        return np.array(out)

    def contains_direction(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.all(theta @ self.inward_normals().T > TOL, axis=-1)

    def contains(self, points) -> np.ndarray:
        return self.contains_direction(np.asarray(points, dtype=float) - self.apex)

    def halfspace_direction(self) -> tuple[np.ndarray, float]:
        """Unit ``a`` maximizing ``min_j a . w_j``; raises if that margin is not positive."""
        a, margin = _max_margin(self.generators, equality=None)
        if margin <= 1e-12:
            raise NoSeparatingVector("cone is not contained in an open half-space")
        return a, margin

    def rotated(self, Q) -> "Cone":
        Q = np.asarray(Q, dtype=float)
        return Cone(apex=Q @ self.apex, generators=self.generators @ Q.T)

    def rerooted(self, k: int) -> "Cone":
        """Same cone with the generator list cyclically shifted to start at index ``k``."""
        return Cone(apex=self.apex, generators=np.roll(self.generators, -k, axis=0))


def _max_margin(w, equality=None) -> tuple[np.ndarray, float]:
    """Solve max t s.t. z . w_j >= t, |z_i| <= 1 (and z . equality = 0); return (unit z, margin)."""
    m, n = w.shape
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-w, np.ones((m, 1))])
    b_ub = np.zeros(m)
    A_eq = b_eq = None
    if equality is not None:
        A_eq = np.append(equality, 0.0)[None, :]
        b_eq = np.zeros(1)
    bounds = [(-1.0, 1.0)] * n + [(None, 1.0)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success:
        return np.zeros(n), 0.0
    z = res.x[:n]
    nz = np.linalg.norm(z)
    if nz <= 1e-14:
        return z, 0.0
    z = z / nz
    return z, float(np.min(w @ z))


def cone_at_vertex(p: Polytope, x_c) -> Cone:
    """Tangent cone of ``p`` at its vertex ``x_c``, generated by the incident edges."""
    i = p.vertex_index(x_c)
    V = p.vertices
    if p.dimension == 2:
        m = len(V)
        gens = [V[(i + 1) % m] - V[i], V[(i - 1) % m] - V[i]]
        return Cone(apex=V[i].copy(), generators=np.array(gens))
    # neighbours of i inside each incident facet, then chain facets around the vertex
    pairs = []
    for f in p.facets:
        if i in f:
            k = f.index(i)
            pairs.append((f[k - 1], f[(k + 1) % len(f)]))
    chain = [pairs[0][0], pairs[0][1]]
    used = {0}
    while len(used) < len(pairs):
        last = chain[-1]
        for j, (a, b) in enumerate(pairs):
            if j in used:
                continue
            if a == last or b == last:
                chain.append(b if a == last else a)
                used.add(j)
                break
        else:
            raise NotAVertex("vertex facets do not close up")
    if chain[-1] == chain[0]:
        chain = chain[:-1]
    gens = V[chain] - V[i]
    return Cone(apex=V[i].copy(), generators=gens)


# ---------------------------------------------------------------------------
# admissibility structures
# ---------------------------------------------------------------------------


def _projection_overlap(a: Polytope, b: Polytope, axis) -> bool:
    pa, pb = a.vertices @ axis, b.vertices @ axis
    return min(pa.max(), pb.max()) - max(pa.min(), pb.min()) > TOL


def interiors_intersect(a: Polytope, b: Polytope) -> bool:
    """Separating-axis test for the open cells."""
    axes = list(a.normals) + list(b.normals)
    if a.dimension == 3:
        for (i, j), (k, l) in itertools.product(a.edges, b.edges):
            ax = np.cross(a.vertices[j] - a.vertices[i], b.vertices[l] - b.vertices[k])
            nrm = np.linalg.norm(ax)
            if nrm > 1e-12:
                axes.append(ax / nrm)
    return all(_projection_overlap(a, b, ax) for ax in axes)


@dataclass(frozen=True)
class CellPartition:
    """Ordered cells ``Sigma_1, Sigma_2, ...``; ``None`` marks an empty cell."""

    cells: tuple
    d0: float

    def __post_init__(self):
        cells = tuple(self.cells)
        object.__setattr__(self, "cells", cells)
        if not self.d0 > 0:
            raise InputError("clearance d0 must be positive")
        live = [c for c in cells if c is not None]
        if not live:
            raise InputError("partition has no nonempty cell")
        dims = {c.dimension for c in live}
        if len(dims) != 1:
            raise InputError("cells of mixed dimension")
        for (i, a), (j, b) in itertools.combinations(enumerate(cells), 2):
            if a is not None and b is not None and interiors_intersect(a, b):
                raise InputError(f"cells {i + 1} and {j + 1} overlap")

    @property
    def dimension(self) -> int:
        return next(c for c in self.cells if c is not None).dimension

    @property
    def regions(self) -> list:
        return list(self.cells)

    def vertices(self) -> np.ndarray:
        return np.unique(np.vstack([c.vertices for c in self.cells if c is not None]), axis=0)

    def bbox(self):
        los, his = zip(*(c.bbox for c in self.cells if c is not None))
        return np.min(los, axis=0), np.max(his, axis=0)


@dataclass(frozen=True)
class NestedFamily:
    """Shells ``D_1 ⊇ D_2 ⊇ ...``; trailing ``None`` entries are empty shells."""

    shells: tuple
    m0: float

    def __post_init__(self):
        object.__setattr__(self, "shells", tuple(self.shells))
        if not self.m0 > 0:
            raise InputError("margin m0 must be positive")
        if self.shells[0] is None:
            raise InputError("outermost shell must be nonempty")

    @property
    def dimension(self) -> int:
        return self.shells[0].dimension

    @property
    def regions(self) -> list:
        return list(self.shells)

    def vertices(self) -> np.ndarray:
        return np.unique(np.vstack([c.vertices for c in self.shells if c is not None]), axis=0)

    def bbox(self):
        return self.shells[0].bbox


def check_nested(fam: NestedFamily) -> float:
    """Return the smallest facet clearance between consecutive shells.

    Raises :class:`NestingViolated` at the first pair whose inner shell comes
    closer than ``m0`` to the outer boundary.
    """
    margin = np.inf
    for j in range(len(fam.shells) - 1):
        outer, inner = fam.shells[j], fam.shells[j + 1]
        if inner is None:
            continue
        if outer is None:
            raise NestingViolated(j, f"shell {j + 1} is empty but shell {j + 2} is not")
        gap = float(np.min(outer.offsets[None, :] - inner.vertices @ outer.normals.T))
        if gap < fam.m0 - TOL:
            raise NestingViolated(j)
        margin = min(margin, gap)
    return margin


@dataclass(frozen=True)
class ClearanceReport:
    """Successful clearance check: one witness path (vertex first) per nonempty cell, keyed 1-based."""

    h: float
    witnesses: dict = field(default_factory=dict)
    passed: bool = True


def _bfs_to_boundary(free: np.ndarray, start: tuple) -> Optional[list]:
    """Frontier BFS on a boolean grid; returns the index path from ``start`` to the array boundary."""
    n = free.ndim
    parent = np.full(free.shape, -1, dtype=np.int8)
    visited = np.zeros(free.shape, dtype=bool)
    visited[start] = True
    frontier = np.zeros(free.shape, dtype=bool)
    frontier[start] = True
    moves = [(ax, s) for ax in range(n) for s in (1, -1)]
    border = np.zeros(free.shape, dtype=bool)
    for ax in range(n):
        sl = [slice(None)] * n
        sl[ax] = 0
        border[tuple(sl)] = True
        sl[ax] = -1
        border[tuple(sl)] = True
    hit = None
    while frontier.any():
        reached = frontier & border
        if reached.any():
            hit = tuple(int(v[0]) for v in np.nonzero(reached))
            break
        new = np.zeros(free.shape, dtype=bool)
        for code, (ax, s) in enumerate(moves):
            shifted = np.zeros(free.shape, dtype=bool)
            src = [slice(None)] * n
            dst = [slice(None)] * n
            if s > 0:
                src[ax], dst[ax] = slice(0, -1), slice(1, None)
            else:
                src[ax], dst[ax] = slice(1, None), slice(0, -1)
            shifted[tuple(dst)] = frontier[tuple(src)]
            cand = shifted & free & ~visited & ~new
            parent[cand] = code
            new |= cand
        visited |= new
        frontier = new
    if hit is None:
        return None
    path = [hit]
    cur = hit
    while cur != start:
        ax, s = moves[parent[cur]]
        cur = tuple(c - s if a == ax else c for a, c in enumerate(cur))
        path.append(cur)
    return path[::-1]


def check_cell_clearance(part: CellPartition, h: float) -> ClearanceReport:
    """Certify the cell-geometry path condition on a rasterized complement.

    For every nonempty cell a vertex is sought that is joined to the boundary
    of an enlarged bounding box by a grid path whose nodes keep distance
    ``>= d0`` from every later cell.  Raises :class:`ClearanceViolated` naming
    the first failing cell (1-based).
    """
    if not 0 < h <= part.d0 / 4 + 1e-15:
        raise InputError(f"grid step h={h} must satisfy 0 < h <= d0/4 = {part.d0 / 4}")
    lo, hi = part.bbox()
    pad = part.d0 + 2 * h
    lo, hi = lo - pad, hi + pad
    counts = np.ceil((hi - lo) / h).astype(int) + 1
    axes = [lo[a] + h * np.arange(counts[a]) for a in range(len(lo))]
    nodes = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    flat = nodes.reshape(-1, len(lo))
    cells = part.cells
    # dist_after[j] = distance to the union of cells with index > j
    dist_after = [None] * len(cells)
    running = np.full(flat.shape[0], np.inf)
    for j in range(len(cells) - 1, -1, -1):
        dist_after[j] = running.copy()
        if cells[j] is not None:
            running = np.minimum(running, cells[j].distance(flat))
    report = ClearanceReport(h=h)
    for j, cell in enumerate(cells):
        if cell is None:
            continue
        free = (dist_after[j] >= part.d0 - TOL).reshape(counts)
        later = [c for c in cells[j + 1:] if c is not None]
        path = None
        for v in cell.vertices:
            if later and min(float(c.distance(v[None, :])[0]) for c in later) < part.d0 - TOL:
                continue
            idx = np.rint((v - lo) / h).astype(int)
            # nearest free node within one diagonal step of the vertex
            best = None
            for off in itertools.product((-1, 0, 1), repeat=len(lo)):
                cand = tuple(int(c) for c in idx + np.array(off))
                if all(0 <= c < counts[a] for a, c in enumerate(cand)) and free[cand]:
                    d = np.linalg.norm(nodes[cand] - v)
                    if best is None or d < best[0]:
                        best = (d, cand)
            if best is None:
                continue
            steps = _bfs_to_boundary(free, best[1])
            if steps is not None:
                path = np.vstack([v[None, :], np.array([nodes[s] for s in steps])])
                break
        if path is None:
            raise ClearanceViolated(j + 1)
        report.witnesses[j + 1] = path
    return report


def clearance_passes(part: CellPartition, h: float) -> bool:
    try:
        check_cell_clearance(part, h)
    except ClearanceViolated:
        return False
    return True


# ---------------------------------------------------------------------------
# JSON I/O
# ---------------------------------------------------------------------------


def cell_from_dict(d) -> Optional[Polytope]:
    if d is None:
        return None
    if "shape" in d:
        name = d["shape"]
        if name == "square":
            return square(d.get("center", (0.0, 0.0)), d.get("side", 1.0))
        if name == "cube":
            return cube(d.get("center", (0.0, 0.0, 0.0)), d.get("side", 1.0))
        if name == "box":
            return box(d["lo"], d["hi"])
        if name == "regular_polygon":
            return regular_polygon(d["m"], d.get("radius", 1.0), d.get("center", (0.0, 0.0)), d.get("rotation", 0.0))
        raise InputError(f"unknown polytope shape {name!r}")
    verts = d.get("vertices", [])
    if len(verts) == 0:
        return None
    return validate_admissible_cell(verts)


def partition_from_dict(d: dict) -> CellPartition:
    cells = [cell_from_dict(c) for c in d["cells"]]
    order = d.get("ordering")
    if order is not None:
        if sorted(order) != list(range(len(cells))):
            raise InputError("ordering must be a permutation of the cell indices")
        cells = [cells[i] for i in order]
    part = CellPartition(tuple(cells), float(d.get("d0", 0.1)))
    if "dimension" in d and d["dimension"] != part.dimension:
        raise InputError("declared dimension does not match cell coordinates")
    return part


def partition_to_dict(part: CellPartition) -> dict:
    return {
        "dimension": part.dimension,
        "cells": [None if c is None else c.to_dict() for c in part.cells],
        "ordering": list(range(len(part.cells))),
        "d0": part.d0,
    }


def nested_from_dict(d: dict) -> NestedFamily:
    return NestedFamily(tuple(cell_from_dict(s) for s in d["shells"]), float(d.get("m0", 0.05)))


def nested_to_dict(fam: NestedFamily) -> dict:
    return {
        "dimension": fam.dimension,
        "shells": [None if s is None else s.to_dict() for s in fam.shells],
        "m0": fam.m0,
    }


def structure_from_dict(d: dict):
    if "shells" in d:
        return nested_from_dict(d)
    if "cells" in d:
        return partition_from_dict(d)
    raise InputError("geometry document needs 'cells' or 'shells'")


def structure_to_dict(s) -> dict:
    return nested_to_dict(s) if isinstance(s, NestedFamily) else partition_to_dict(s)


def load_geometry(path):
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path, "geometry file")
    return structure_from_dict(json.loads(path.read_text()))
