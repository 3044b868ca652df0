"""Closed-form reference solutions used as independent oracles.

None of these route through the grid solver: the penetrable-disc pattern is
a separation-of-variables Bessel series, the Born pattern of a ball is the
Fourier transform of its indicator, and the Newtonian potential of a ball is
elementary.
"""

from __future__ import annotations

import numpy as np
from scipy.special import h1vp, hankel1, jv, jvp


def disc_far_field(theta, k: float, a: float, V: complex, theta_inc: float = 0.0, nmax: int = None) -> np.ndarray:
    """Far field of a homogeneous disc of radius ``a`` and contrast ``V`` (``k_in = k sqrt(1+V)``).

    Normalized so that ``u_s ~ exp(ikr)/sqrt(r) * A(theta)``.
    """
    theta = np.asarray(theta, dtype=float)
    k1 = k * np.sqrt(1.0 + complex(V))
    if nmax is None:
        nmax = int(abs(k1) * a + 4 * (abs(k1) * a) ** (1 / 3) + 15)
    ka, k1a = k * a, k1 * a
    out = np.zeros(theta.shape, dtype=complex)
    for m in range(-nmax, nmax + 1):
        num = k1 * jvp(m, k1a) * jv(m, ka) - k * jvp(m, ka) * jv(m, k1a)
        den = k * h1vp(m, ka) * jv(m, k1a) - k1 * jvp(m, k1a) * hankel1(m, ka)
        b = (1j) ** m * num / den
        out += b * (-1j) ** m * np.exp(1j * m * (theta - theta_inc))
    return np.sqrt(2.0 / (np.pi * k)) * np.exp(-1j * np.pi / 4) * out


def born_ball_far_field(xhat, d, k: float, a: float, V0: complex, center=None) -> np.ndarray:
    """First Born approximation ``(k^2 V0 / 4 pi) int_ball exp(i k (d - xhat) . y) dy``."""
    xhat = np.atleast_2d(np.asarray(xhat, dtype=float))
    d = np.asarray(d, dtype=float)
    qv = k * (d[None, :] - xhat)
    q = np.linalg.norm(qv, axis=1)
    qa = q * a
    small = qa < 1e-3
    safe = np.where(small, 1.0, qa)
    form = np.where(
        small,
        4 * np.pi * a**3 / 3 * (1 - qa**2 / 10),
        4 * np.pi * (np.sin(safe) - safe * np.cos(safe)) / np.where(small, 1.0, q) ** 3,
    )
    out = k**2 * V0 / (4 * np.pi) * form
    if center is not None:
        out = out * np.exp(1j * qv @ np.asarray(center, dtype=float))
    return out


def newtonian_ball(x, a: float) -> np.ndarray:
    """``int_{|y|<a} dy / (4 pi |x - y|)`` (3D, unit density)."""
    r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
    inside = a * a / 2 - r * r / 6
    outside = a**3 / (3 * np.where(r > 0, r, 1.0))
    return np.where(r < a, inside, outside)


# ---------------------------------------------------------------------------
# cone Laplace transforms by direct quadrature
# ---------------------------------------------------------------------------

TRUNCATION = 40.0


def _radial(dirs, rho, n, panels_per_unit=0.25, order=16, chunk=2048):
    """``int_0^{R(theta)} r^{n-1} exp(r rho . theta) dr`` by composite Gauss-Legendre.

    ``R(theta) = TRUNCATION / c(theta)`` with decay rate ``c = -Re(rho . theta)``.
    Returns the values and the analytic bound on the discarded tail.  Directions
    are processed in chunks, each with enough panels for its worst oscillation.
    """
    p = dirs @ rho
    c = -p.real
    if np.any(c <= 0):
        raise ValueError("integrand does not decay along some direction")
    R = TRUNCATION / c
    x, w = np.polynomial.legendre.leggauss(order)
    vals = np.empty(len(p), dtype=complex)
    for lo in range(0, len(p), chunk):
        sl = slice(lo, lo + chunk)
        # oscillations per unit of the scaled radius, plus the decay scale itself
        scale = TRUNCATION * (1.0 + np.abs(p[sl].imag) / c[sl])
        panels = int(np.ceil(panels_per_unit * scale.max())) + 4
        edges = np.linspace(0.0, 1.0, panels + 1)
        t = (0.5 * (edges[:-1, None] + edges[1:, None]) + 0.5 * (edges[1:, None] - edges[:-1, None]) * x).ravel()
        wt = (0.5 * (edges[1:, None] - edges[:-1, None]) * w).ravel()
        r = R[sl, None] * t[None, :]
        vals[sl] = (r ** (n - 1) * np.exp(r * p[sl, None])) @ wt * R[sl]
    cR = TRUNCATION
    if n == 2:
        tail = np.exp(-cR) * (R / c + 1 / c**2)
    else:
        tail = np.exp(-cR) * (R**2 / c + 2 * R / c**2 + 2 / c**3)
    return vals, tail


def _angles_2d(w):
    a0 = np.arctan2(w[0, 1], w[0, 0])
    a1 = np.arctan2(w[1, 1], w[1, 0])
    span = (a1 - a0) % (2 * np.pi)
    if span > np.pi:
        a0, span = a1, 2 * np.pi - span
    return a0, span


def quadrature_cone_transform(generators, rho, rtol: float = 1e-12, max_order: int = 1024) -> tuple[complex, float]:
    """``int_C exp(rho . x) dx`` by angular Gauss-Legendre (order doubled to convergence) over a radial rule.

    3D cones are split into the flat triangles of the generator polygon and
    each triangle is collapsed onto a square; the radial direction uses the
    solid-angle weight ``dist / |p|^3``.  Returns ``(value, tail_bound)``.
    """
    w = np.asarray(generators, dtype=float)
    w = w / np.linalg.norm(w, axis=1, keepdims=True)
    rho = np.asarray(rho, dtype=complex)
    n = w.shape[1]

    def estimate(order):
        x, wt = np.polynomial.legendre.leggauss(order)
        if n == 2:
            a0, span = _angles_2d(w)
            ang = a0 + 0.5 * span * (x + 1)
            dirs = np.column_stack([np.cos(ang), np.sin(ang)])
            vals, tail = _radial(dirs, rho, 2)
            ww = 0.5 * span * wt
            return complex(ww @ vals), float(ww @ tail)
        total, tail_total = 0j, 0.0
        s = 0.5 * (x + 1)
        S, T = np.meshgrid(s, s, indexing="ij")
        WW = np.outer(0.5 * wt, 0.5 * wt) * S
        for j in range(1, len(w) - 1):
            a, b, c = w[0], w[j], w[j + 1]
            e1, e2 = b - a, c - a
            nrm = np.cross(e1, e2)
            area2 = np.linalg.norm(nrm)
            dist = abs(a @ nrm) / area2
            P = a + (S * (1 - T))[..., None] * e1 + (S * T)[..., None] * e2
            P = P.reshape(-1, 3)
            plen = np.linalg.norm(P, axis=1)
            dirs = P / plen[:, None]
            vals, tail = _radial(dirs, rho, 3)
            jac = (WW.ravel() * area2) * dist / plen**3
            total += jac @ vals
            tail_total += float(jac @ tail)
        return complex(total), tail_total

    order = 16
    prev, _ = estimate(order)
    while order < max_order:
        order *= 2
        cur, tail = estimate(order)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur, tail
        prev = cur
    raise ArithmeticError(f"angular quadrature did not converge by order {max_order}")
