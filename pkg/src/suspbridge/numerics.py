"""Deterministic numerical kernels: composite Gauss-Legendre quadrature,
a fixed-step RK4 integrator for scalar second-order ODEs, and a symmetric
tridiagonal generalized eigensolver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import DivergenceError, NumericalError, ParameterError

__all__ = [
    "Grid",
    "make_grid",
    "integrate",
    "rk4_step",
    "solve_ivp_2nd_order",
    "sym_tridiag_generalized_eig",
]


@dataclass(frozen=True, eq=False)
class Grid:
    """Composite Gauss-Legendre rule on ``(0, domain_length)``."""

    domain_length: float
    nodes: np.ndarray
    weights: np.ndarray
    panel_count: int
    points_per_panel: int

    @property
    def size(self) -> int:
        return self.nodes.size

    def same_as(self, other: "Grid") -> bool:
        return (
            self is other
            or (
                self.domain_length == other.domain_length
                and self.nodes.shape == other.nodes.shape
                and bool(np.array_equal(self.nodes, other.nodes))
            )
        )


def make_grid(domain_length: float, panel_count: int = 256, points_per_panel: int = 4) -> Grid:
    if not domain_length > 0 or not np.isfinite(domain_length):
        raise ParameterError(f"domain_length must be positive and finite, got {domain_length}")
    if int(panel_count) != panel_count or panel_count < 1:
        raise ParameterError(f"panel_count must be an integer >= 1, got {panel_count}")
    if points_per_panel not in (2, 3, 4, 5):
        raise ParameterError(f"points_per_panel must be in {{2,3,4,5}}, got {points_per_panel}")
    panel_count = int(panel_count)

    ref_x, ref_w = leggauss(points_per_panel)
    width = domain_length / panel_count
    left = np.arange(panel_count) * width
    nodes = (left[:, None] + 0.5 * width * (ref_x[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * width * ref_w, panel_count)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return Grid(float(domain_length), nodes, weights, panel_count, points_per_panel)


def integrate(grid: Grid, samples) -> float | np.ndarray:
    """Quadrature of ``samples`` (last axis = nodes)."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape[-1] != grid.size:
        raise ParameterError(
            f"samples have {samples.shape[-1]} entries along the last axis, grid has {grid.size} nodes"
        )
    return samples @ grid.weights


def rk4_step(f, x, s, ds, h):
    """One classical RK4 step for ``s'' = f(x, s, s')``; broadcasts over arrays."""
    k1s, k1v = ds, f(x, s, ds)
    k2s = ds + 0.5 * h * k1v
    k2v = f(x + 0.5 * h, s + 0.5 * h * k1s, k2s)
    k3s = ds + 0.5 * h * k2v
    k3v = f(x + 0.5 * h, s + 0.5 * h * k2s, k3s)
    k4s = ds + h * k3v
    k4v = f(x + h, s + h * k3s, k4s)
    s_new = s + h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
    ds_new = ds + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return s_new, ds_new


def solve_ivp_2nd_order(f, x0: float, s0: float, ds0: float, x_end: float, step_count: int):
    """Fixed-step RK4 for ``s'' = f(x, s, s')``.

    Returns ``(x, s, ds)`` sampled at ``step_count + 1`` uniform abscissae,
    both endpoints included.
    """
    if int(step_count) != step_count or step_count < 1:
        raise ParameterError(f"step_count must be an integer >= 1, got {step_count}")
    step_count = int(step_count)
    x = np.linspace(x0, x_end, step_count + 1)
    h = (x_end - x0) / step_count
    s = np.empty(step_count + 1)
    ds = np.empty(step_count + 1)
    s[0], ds[0] = s0, ds0
    for i in range(step_count):
        s[i + 1], ds[i + 1] = rk4_step(f, x[i], s[i], ds[i], h)
        if not (np.isfinite(s[i + 1]) and np.isfinite(ds[i + 1])):
            raise DivergenceError(f"non-finite state at x = {x[i + 1]!r}", abscissa=float(x[i + 1]))
    return x, s, ds


def sym_tridiag_generalized_eig(diag, offdiag, weight_diag, count: int):
    """Smallest ``count`` eigenpairs of ``A v = lam W v``.

    ``A`` is symmetric tridiagonal (``diag``, ``offdiag``) and ``W`` is the
    positive diagonal ``weight_diag``. The problem is symmetrized with
    ``W^{-1/2}``; returned eigenvectors are W-orthonormal columns.
    """
    diag = np.asarray(diag, dtype=float)
    offdiag = np.asarray(offdiag, dtype=float)
    w = np.asarray(weight_diag, dtype=float)
    n = diag.size
    if offdiag.size != n - 1 or w.size != n:
        raise ParameterError("inconsistent tridiagonal/weight sizes")
    if np.any(~(w > 0)):
        raise ParameterError("weight_diag must be strictly positive")
    if int(count) != count or not 1 <= count <= n:
        raise ParameterError(f"count must lie in [1, {n}], got {count}")

    r = 1.0 / np.sqrt(w)
    d = diag * r * r
    e = offdiag * r[:-1] * r[1:]
    try:
        lam, z = eigh_tridiagonal(d, e, select="i", select_range=(0, int(count) - 1))
    except LinAlgError as exc:
        raise NumericalError(f"tridiagonal eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(lam)):
        raise NumericalError("tridiagonal eigensolver returned non-finite eigenvalues")
    if np.any(np.diff(lam) <= 0):
        raise NumericalError("eigenvalues are not strictly increasing (degenerate spectrum)")
    return lam, z * r[:, None]
