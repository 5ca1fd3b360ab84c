"""Modal bases on ``(0, pi)``: the analytic sine modes and the eigenfunctions
of the weighted Sturm-Liouville problem

    -(H0 / xi^2 u')' = lam xi u,   u(0) = u(pi) = 0.

The weighted problem is discretized with centred finite differences in
symmetric form. The eigenvectors are carried to the quadrature grid by
cubic splines and then Rayleigh-Ritz refined with the quadrature mass and
stiffness matrices, so every downstream integral sees a basis that is
exactly orthonormal (and stiffness-diagonal) under the same rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh

from .cable import CableProfile
from .errors import NumericalError, ParameterError
from .numerics import Grid, sym_tridiag_generalized_eig

__all__ = [
    "SineModes",
    "SpectralBasis",
    "build_sine_basis",
    "solve_weighted_eigenbasis",
    "fd_eigenvalues",
    "project",
    "reconstruct",
]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True, eq=False)
class SineModes:
    grid: Grid
    e: np.ndarray
    de: np.ndarray
    dde: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.e.shape[0]

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(1, self.n_modes + 1, dtype=float)


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Both modal bases sampled on one quadrature grid.

    ``eigenvalues`` are the Ritz values on the quadrature grid;
    ``fd_eigenvalues`` are the raw finite-difference eigenvalues (second
    order in the FD spacing) kept for convergence studies.
    ``weight`` is the xi actually used (all ones under the debug override).
    """

    n_modes: int
    profile: CableProfile | None
    grid: Grid
    eigenvalues: np.ndarray
    fd_eigenvalues: np.ndarray
    weight: np.ndarray
    u_samples: np.ndarray
    du_samples: np.ndarray
    sine: SineModes
    H0: float
    fd_points: int

    @property
    def e_samples(self):
        return self.sine.e

    @property
    def de_samples(self):
        return self.sine.de

    @property
    def dde_samples(self):
        return self.sine.dde


def build_sine_basis(n_modes: int, grid: Grid) -> SineModes:
    if int(n_modes) != n_modes or n_modes < 1:
        raise ParameterError(f"n_modes must be an integer >= 1, got {n_modes}")
    if not math.isclose(grid.domain_length, math.pi, rel_tol=1e-14):
        raise ParameterError("sine modes require the scaled span (0, pi)")
    k = np.arange(1, int(n_modes) + 1, dtype=float)[:, None]
    kx = k * grid.nodes[None, :]
    e = SQRT_2_OVER_PI * np.sin(kx)
    de = SQRT_2_OVER_PI * k * np.cos(kx)
    dde = -k * k * e
    for arr in (e, de, dde):
        arr.setflags(write=False)
    return SineModes(grid, e, de, dde)


def _xi_function(profile: CableProfile | None, xi_one: bool):
    if xi_one:
        return lambda x: np.ones_like(np.asarray(x, dtype=float))
    if profile is None:
        raise ParameterError("a cable profile is required unless xi is forced to one")

    def xi(x):
        _, ds, _ = profile.evaluate(x)
        return np.sqrt(1.0 + ds * ds)

    return xi


def _fd_problem(xi, H0: float, fd_points: int):
    n = int(fd_points)
    h = math.pi / (n + 1)
    x = h * np.arange(1, n + 1)
    x_mid = h * (np.arange(n + 1) + 0.5)
    coef = H0 / xi(x_mid) ** 2
    diag = (coef[:-1] + coef[1:]) / (h * h)
    off = -coef[1:-1] / (h * h)
    return x, diag, off, xi(x)


def fd_eigenvalues(profile: CableProfile | None, count: int, fd_points: int, xi_one: bool = False, H0=None):
    """Raw finite-difference eigenvalues of the weighted problem."""
    H0 = profile.params.H0 if H0 is None else H0
    _, diag, off, w = _fd_problem(_xi_function(profile, xi_one), H0, fd_points)
    lam, _ = sym_tridiag_generalized_eig(diag, off, w, count)
    return lam


def solve_weighted_eigenbasis(
    profile: CableProfile | None,
    n_modes: int = 16,
    fd_points: int = 4096,
    grid: Grid | None = None,
    xi_one: bool = False,
    H0: float | None = None,
) -> SpectralBasis:
    """Weighted eigenpairs sampled on ``grid`` (defaults to the profile's).

    ``xi_one=True`` replaces the weight by 1 (debug hook); ``H0`` must then
    be given if no profile is supplied.
    """
    if int(n_modes) != n_modes or n_modes < 1:
        raise ParameterError(f"n_modes must be an integer >= 1, got {n_modes}")
    n_modes = int(n_modes)
    if fd_points < 16 * n_modes:
        raise ParameterError(f"fd_points = {fd_points} violates the resolution guard fd_points >= 16 n_modes")
    if grid is None:
        if profile is None:
            raise ParameterError("grid is required when no profile is given")
        grid = profile.grid
    if profile is not None:
        if not math.isclose(profile.params.L, math.pi, rel_tol=1e-14):
            raise ParameterError("the weighted eigenproblem is posed on the scaled span (0, pi)")
        if not profile.grid.same_as(grid):
            raise ParameterError("profile grid and basis grid differ")
        H0 = profile.params.H0
    if H0 is None or not H0 > 0:
        raise ParameterError("H0 must be positive")

    xi_fn = _xi_function(profile, xi_one)
    x_fd, diag, off, w_fd = _fd_problem(xi_fn, H0, fd_points)
    fd_lam, vecs = sym_tridiag_generalized_eig(diag, off, w_fd, n_modes)

    knots = np.concatenate(([0.0], x_fd, [math.pi]))
    values = np.vstack([np.zeros(n_modes), vecs, np.zeros(n_modes)])
    spline = CubicSpline(knots, values, axis=0)
    u0 = spline(grid.nodes).T
    du0 = spline(grid.nodes, 1).T

    weight = np.asarray(xi_fn(grid.nodes), dtype=float)
    stiff_coef = H0 / weight**2
    mass = (u0 * (weight * grid.weights)) @ u0.T
    stiff = (du0 * (stiff_coef * grid.weights)) @ du0.T
    try:
        ritz, coeffs = eigh(stiff, mass)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Rayleigh-Ritz refinement failed: {exc}") from exc
    u = coeffs.T @ u0
    du = coeffs.T @ du0
    sign = np.where(du[:, 0] < 0, -1.0, 1.0)[:, None]
    u *= sign
    du *= sign
    if np.any(ritz <= 0) or np.any(np.diff(ritz) <= 0):
        raise NumericalError("weighted eigenvalues are not positive and strictly increasing")

    for arr in (ritz, fd_lam, weight, u, du):
        arr.setflags(write=False)
    return SpectralBasis(
        n_modes=n_modes,
        profile=profile,
        grid=grid,
        eigenvalues=ritz,
        fd_eigenvalues=fd_lam,
        weight=weight,
        u_samples=u,
        du_samples=du,
        sine=build_sine_basis(n_modes, grid),
        H0=float(H0),
        fd_points=int(fd_points),
    )


def _check_samples(samples, grid: Grid) -> np.ndarray:
    samples = np.asarray(samples, dtype=float)
    if samples.shape[-1] != grid.size:
        raise ParameterError(f"expected {grid.size} samples along the last axis, got {samples.shape[-1]}")
    return samples


def project(samples, basis: SpectralBasis, inner: str = "plain") -> np.ndarray:
    """Modal coefficients: ``int f e_k`` (plain) or ``int xi f u_k`` (weighted)."""
    samples = _check_samples(samples, basis.grid)
    w = basis.grid.weights
    if inner == "plain":
        return samples @ (basis.e_samples * w).T
    if inner == "weighted":
        return samples @ (basis.u_samples * (basis.weight * w)).T
    raise ParameterError(f"unknown inner product {inner!r}")


def reconstruct(coeffs, basis: SpectralBasis, which: str = "sine", derivative: int = 0) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[-1] != basis.n_modes:
        raise ParameterError(f"expected {basis.n_modes} coefficients, got {coeffs.shape[-1]}")
    if which == "sine":
        rows = (basis.e_samples, basis.de_samples, basis.dde_samples)
    elif which == "weighted":
        if derivative == 2:
            raise ParameterError("second derivatives of the weighted basis are not stored")
        rows = (basis.u_samples, basis.du_samples)
    else:
        raise ParameterError(f"unknown basis {which!r}")
    if derivative not in (0, 1, 2):
        raise ParameterError(f"derivative must be 0, 1 or 2, got {derivative}")
    return coeffs @ rows[derivative]
