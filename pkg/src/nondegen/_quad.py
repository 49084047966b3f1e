"""Panel quadrature shared by the transform modules.

Integrands of the form (smooth radial profile) x (oscillation at rate k)
are integrated with Gauss-Legendre panels: logarithmic panels where the
kernel does not oscillate (k x < 1), linear panels of half an oscillation
period beyond.  The embedded lower-order rule on the same panels provides
the error estimate, so every transform value carries one.
"""

from __future__ import annotations

import math

import numpy as np

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(order: int):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def panel_edges(a: float, b: float, osc_rate: float, *,
                n_log: int = 160, per_period: float = 2.0,
                max_width: float | None = None) -> np.ndarray:
    """Panel edges on [a, b] for an integrand oscillating like cos(osc_rate x).

    `max_width` additionally caps the panel width (needed when the smooth
    factor has structure on a linear scale, e.g. localized bumps).
    """
    if b <= a:
        return np.array([a, b])
    x_osc = 1.0 / osc_rate if osc_rate > 0 else b
    edges = []
    lo = a
    hi = min(b, max(x_osc, a * 1.0000001))
    if hi > a:
        n = max(8, int(n_log * math.log10(max(hi / max(a, 1e-300), 10.0)) / 7.0))
        edges.append(np.geomspace(max(a, 1e-300), hi, n + 1))
        lo = hi
    if b > lo:
        width = b - lo if osc_rate <= 0 else math.pi / (per_period * osc_rate)
        if max_width is not None:
            width = min(width, max_width)
        n = min(int(math.ceil((b - lo) / width)), 400_000)
        n = max(n, 32 if osc_rate <= 0 else 1)
        edges.append(np.linspace(lo, b, n + 1))
    out = np.unique(np.concatenate(edges))
    if max_width is not None:
        # subdivide any long log panel straddling fine linear structure
        gaps = np.diff(out)
        if np.any(gaps > max_width):
            pieces = [out]
            for i in np.nonzero(gaps > max_width)[0]:
                k = int(math.ceil(gaps[i] / max_width))
                pieces.append(np.linspace(out[i], out[i + 1], k + 1))
            out = np.unique(np.concatenate(pieces))
    return out


def feature_scale_from_samples(x: np.ndarray, amp: np.ndarray,
                               rel: float = 1e-6) -> float | None:
    """Width/24 of the region where |amp| is non-negligible (None if wide)."""
    top = np.max(amp)
    if top <= 0:
        return None
    idx = np.nonzero(amp > rel * top)[0]
    lo, hi = x[idx[0]], x[min(idx[-1] + 1, len(x) - 1)]
    return float((hi - lo) / 24.0)


def panel_integrate(fvec, edges: np.ndarray, order: int = 8):
    """(value, error) of int f over the panels; fvec must accept arrays."""
    if len(edges) < 2:
        return 0.0, 0.0
    mids = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)

    def rule(n):
        x, w = _gl(n)
        pts = mids[:, None] + half[:, None] * x[None, :]
        vals = fvec(pts.ravel()).reshape(pts.shape)
        return float(np.dot(vals @ w, half).real) if np.isrealobj(vals) \
            else complex(np.dot(vals @ w, half))

    hi = rule(order)
    lo = rule(max(order // 2, 2))
    return hi, abs(hi - lo)


def oscillatory_integral(fvec, a: float, b: float, osc_rate: float,
                         order: int = 8, per_period: float = 2.0,
                         max_width: float | None = None):
    edges = panel_edges(a, b, osc_rate, per_period=per_period,
                        max_width=max_width)
    return panel_integrate(fvec, edges, order=order)
