"""Quadrature rules for the semi-infinite reflection-kernel integrals.

The radial integrals all have the shape ``int_{t0}^{inf} dt e^{-2t} P(t)``
after substituting the ambient axial decay rate ``t = s0`` for the
transverse momentum, with ``P`` a smooth rational function.  A fixed set of
Gauss-Legendre panels anchored at ``t0`` resolves this to near machine
precision once the exponential has decayed; the tail beyond the last panel
edge is below 1e-34 of the total and is dropped.

Node doubling on the same panel layout provides the error estimate.  The
module also carries the uniform azimuthal averaging rule (exact for the
finite trigonometric polynomials produced by the planar kernels) and a
Richardson-extrapolated finite-difference stencil used as the independent
cross-check for analytically differentiated quantities.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureNonConvergence

__all__ = [
    "DEFAULT_PANEL_OFFSETS",
    "QuadRule",
    "panel_rule",
    "radial_rule",
    "integrate_with_doubling",
    "phi_nodes",
    "fd_jet",
]

# Panel edges relative to the lower limit t0.  The integrand carries
# exp(-2 t), so the truncated tail beyond t0 + 40 contributes a relative
# exp(-80) ~ 2e-35.
DEFAULT_PANEL_OFFSETS = (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 40.0)


@lru_cache(maxsize=32)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@dataclass(frozen=True)
class QuadRule:
    """Nodes and weights of a composite rule on a bounded interval."""

    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Contract integrand samples (first axis = nodes) with the weights."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


def panel_rule(edges: np.ndarray, n: int) -> QuadRule:
    """Gauss-Legendre rule with ``n`` nodes on each panel between edges."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("panel edges must be strictly increasing")
    x, w = _leggauss(n)
    nodes = []
    weights = []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        nodes.append(0.5 * (a + b) + half * x)
        weights.append(half * w)
    return QuadRule(np.concatenate(nodes), np.concatenate(weights))


def radial_rule(
    t0: float, n: int = 16, offsets: tuple[float, ...] = DEFAULT_PANEL_OFFSETS
) -> QuadRule:
    """Composite rule for ``int_{t0}^{t0+offsets[-1]} dt`` anchored at ``t0``."""
    return panel_rule(t0 + np.asarray(offsets, dtype=float), n)


def integrate_with_doubling(
    f,
    t0: float,
    rel_tol: float = 1e-9,
    abs_tol: float = 0.0,
    n_start: int = 16,
    max_doublings: int = 3,
    offsets: tuple[float, ...] = DEFAULT_PANEL_OFFSETS,
):
    """Integrate ``f`` over the anchored panels with node-doubling control.

    Parameters
    ----------
    f : callable
        Vectorized integrand: maps a node array of shape ``(m,)`` to samples
        of shape ``(m, ...)``.
    t0 : float
        Lower integration limit (the panel anchor).
    rel_tol, abs_tol : float
        Acceptance thresholds for the doubling estimate
        ``max|I_2n - I_n| <= max(rel_tol * max|I_2n|, abs_tol)``.

    Returns
    -------
    value : ndarray
        The converged integral (finest rule evaluated).
    err : float
        The final doubling estimate.

    Raises
    ------
    QuadratureNonConvergence
        If the estimate still exceeds the threshold after ``max_doublings``.
    """
    n = n_start
    value = radial_rule(t0, n, offsets).integrate(f(radial_rule(t0, n, offsets).nodes))
    err = np.inf
    for _ in range(max_doublings):
        n *= 2
        rule = radial_rule(t0, n, offsets)
        refined = rule.integrate(f(rule.nodes))
        err = float(np.max(np.abs(refined - value)))
        scale = float(np.max(np.abs(refined)))
        value = refined
        if err <= max(rel_tol * scale, abs_tol):
            return value, err
    raise QuadratureNonConvergence(
        f"doubling estimate {err:.3e} above tolerance after n={n} nodes/panel"
    )


def phi_nodes(n: int) -> np.ndarray:
    """Uniform azimuthal grid for the mean over [0, 2 pi).

    The arithmetic mean over these nodes equals the true angular average
    exactly for trigonometric polynomials of degree < n, which covers every
    kernel chain assembled here (degree <= 15) with margin.
    """
    if n < 1:
        raise ValueError("need at least one azimuthal node")
    return 2.0 * np.pi * np.arange(n) / n


def _fd_once(f, x0: float, y0: float, h: float, f00):
    fp0 = f(x0 + h, y0)
    fm0 = f(x0 - h, y0)
    f0p = f(x0, y0 + h)
    f0m = f(x0, y0 - h)
    fpp = f(x0 + h, y0 + h)
    fpm = f(x0 + h, y0 - h)
    fmp = f(x0 - h, y0 + h)
    fmm = f(x0 - h, y0 - h)
    return {
        "x": (fp0 - fm0) / (2.0 * h),
        "y": (f0p - f0m) / (2.0 * h),
        "xx": (fp0 - 2.0 * f00 + fm0) / h**2,
        "yy": (f0p - 2.0 * f00 + f0m) / h**2,
        "xy": (fpp - fpm - fmp + fmm) / (4.0 * h**2),
    }


def fd_jet(f, x0: float, y0: float, h: float = 2e-3) -> dict:
    """Value and derivatives of ``f`` to second order by central differences.

    One Richardson step combines the stencils at ``h`` and ``h/2``, lifting
    the leading error from O(h^2) to O(h^4).  ``f`` may return arrays; the
    result maps the keys ``v, x, y, xx, xy, yy`` to like-shaped arrays.
    """
    f00 = f(x0, y0)
    coarse = _fd_once(f, x0, y0, h, f00)
    fine = _fd_once(f, x0, y0, 0.5 * h, f00)
    out = {k: (4.0 * fine[k] - coarse[k]) / 3.0 for k in coarse}
    out["v"] = f00
    return out
