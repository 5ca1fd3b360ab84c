"""Restoring forces: hangers with slackening and the nonlocal cable stretch.

Hanger rows carry a dead load ``W`` per unit length. With ``kappa(x)`` the
local Hooke constant and ``d`` the relative displacement deck minus cable,

    F(d)   = kappa (d + W/kappa)^+          (zero once the hanger slackens)
    Phi(d) = F(d) - W = max(kappa d, -W)
    Psi(d) = kappa d^2 / 2                  for d >= -W/kappa
           = -W d - W^2 / (2 kappa)         otherwise

so that ``Phi(0) = Psi(0) = 0`` and ``Psi' = Phi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cable import CableProfile
from .errors import ParameterError
from .numerics import integrate
from .spectral import SpectralBasis

__all__ = [
    "HangerLaw",
    "build_hanger_law",
    "hanger_force",
    "NonlocalOperatorData",
    "build_nonlocal_operator",
    "h_direct",
    "alt_cable_force",
    "ALT_MODELS",
]

ALT_MODELS = ("first_order", "timoshenko", "biot_von_karman")


@dataclass(frozen=True, eq=False)
class HangerLaw:
    kappa0: float
    deck_weight_per_hanger_row: float
    unloaded_length: np.ndarray
    kappa_samples: np.ndarray
    slack_threshold_samples: np.ndarray

    @property
    def W(self) -> float:
        return self.deck_weight_per_hanger_row

    def phi(self, d):
        """Phi evaluated nodewise; ``d`` has nodes on its last axis."""
        return np.maximum(self.kappa_samples * d, -self.W)

    def force(self, d):
        return self.phi(d) + self.W

    def psi(self, d):
        k = self.kappa_samples
        taut = d >= self.slack_threshold_samples
        return np.where(taut, 0.5 * k * d * d, -self.W * d - self.W * self.W / (2.0 * k))

    def slack(self, d):
        return d < self.slack_threshold_samples

    @property
    def lipschitz(self) -> float:
        return float(np.max(self.kappa_samples))


def build_hanger_law(profile: CableProfile, kappa0: float, deck_weight_per_hanger_row: float) -> HangerLaw:
    if not (np.isfinite(kappa0) and kappa0 > 0):
        raise ParameterError(f"kappa0 must be positive, got {kappa0}")
    W = float(deck_weight_per_hanger_row)
    if not (np.isfinite(W) and W >= 0):
        raise ParameterError(f"deck weight per hanger row must be non-negative, got {W}")
    if np.any(profile.s <= 0):
        raise ParameterError("cable profile dips to s <= 0: hangers would have non-positive length")
    lam = profile.s / (1.0 + W / kappa0)
    kappa = kappa0 / lam
    threshold = -W / kappa
    for arr in (lam, kappa, threshold):
        arr.setflags(write=False)
    return HangerLaw(float(kappa0), W, lam, kappa, threshold)


def hanger_force(law: HangerLaw, displacement: float, node_index: int):
    """``(F, Phi, Psi)`` at one node for relative displacement deck - cable."""
    n = law.kappa_samples.size
    if not -n <= node_index < n:
        raise ParameterError(f"node_index {node_index} out of range for {n} nodes")
    k = float(law.kappa_samples[node_index])
    W = law.W
    d = float(displacement)
    phi = max(k * d, -W)
    psi = 0.5 * k * d * d if k * d >= -W else -W * d - W * W / (2.0 * k)
    return phi + W, phi, psi


@dataclass(frozen=True, eq=False)
class NonlocalOperatorData:
    """Rank-one modal form of the cable-stretch force.

    ``a_vec[k] = int s' u_k' / xi`` and ``b_vec[k] = int (s''/xi^3) u_k``;
    integration by parts gives ``a = -b``.
    """

    prefactor: float
    a_vec: np.ndarray
    b_vec: np.ndarray
    b_grid: np.ndarray
    s_prime_over_xi: np.ndarray

    def stretch(self, coeffs):
        """``int s' p' / xi`` for modal ``p``."""
        return np.asarray(coeffs) @ self.a_vec

    def modal_force(self, coeffs):
        """Projection onto ``u_k`` of ``-h(p)``."""
        return self.prefactor * np.multiply.outer(self.stretch(coeffs), self.b_vec)

    def h_samples(self, coeffs):
        """``h(p)`` on the grid."""
        return -self.prefactor * np.multiply.outer(self.stretch(coeffs), self.b_grid)


def build_nonlocal_operator(profile: CableProfile, basis: SpectralBasis, AE: float) -> NonlocalOperatorData:
    if not (np.isfinite(AE) and AE > 0):
        raise ParameterError(f"AE must be positive, got {AE}")
    if not profile.grid.same_as(basis.grid):
        raise ParameterError("profile and basis live on different grids")
    w = basis.grid.weights
    sp_xi = profile.s_prime / profile.xi
    b_grid = profile.s_second / profile.xi**3
    a_vec = basis.du_samples @ (sp_xi * w)
    b_vec = basis.u_samples @ (b_grid * w)
    for arr in (a_vec, b_vec, b_grid, sp_xi):
        arr.setflags(write=False)
    return NonlocalOperatorData(float(AE / profile.L_c), a_vec, b_vec, b_grid, sp_xi)


def h_direct(profile: CableProfile, AE: float, p_prime_samples) -> np.ndarray:
    """``h(p)`` by direct quadrature of its defining integral."""
    grid = profile.grid
    stretch = integrate(grid, profile.s_prime * np.asarray(p_prime_samples) / profile.xi)
    return -AE / profile.L_c * np.multiply.outer(stretch, profile.s_second / profile.xi**3)


def _sine_second_derivative(profile: CableProfile, p_samples, n_sine: int) -> np.ndarray:
    grid = profile.grid
    L = profile.params.L
    k = np.arange(1, n_sine + 1, dtype=float)[:, None] * (np.pi / L)
    modes = np.sqrt(2.0 / L) * np.sin(k * grid.nodes[None, :])
    coeffs = (modes * grid.weights) @ np.asarray(p_samples, dtype=float)
    return coeffs @ (-(k * k) * modes)


def alt_cable_force(
    model: str,
    profile: CableProfile,
    p_samples,
    p_prime_samples,
    AE: float,
    n_sine: int = 64,
    xi_one: bool = False,
) -> np.ndarray:
    """Cable force field under one of the classical simplifications.

    ``first_order`` is ``h(p)``; ``timoshenko`` and ``biot_von_karman`` are
    the reduced forms built on the parabolic constant ``load_mass g / H0``.
    ``xi_one`` drops the local-length weight from the first-order form.
    """
    if model not in ALT_MODELS:
        raise ParameterError(f"unknown cable force model {model!r}; expected one of {ALT_MODELS}")
    grid = profile.grid
    p = np.asarray(p_samples, dtype=float)
    dp = np.asarray(p_prime_samples, dtype=float)
    if p.shape != (grid.size,) or dp.shape != (grid.size,):
        raise ParameterError("p samples must lie on the profile grid")
    prefactor = AE / profile.L_c
    if model == "first_order":
        xi = np.ones_like(profile.xi) if xi_one else profile.xi
        stretch = integrate(grid, profile.s_prime * dp / xi)
        return -prefactor * stretch * profile.s_second / xi**3
    slope = profile.params.load_mass * profile.params.g / profile.params.H0
    dpp = _sine_second_derivative(profile, p, n_sine)
    if model == "timoshenko":
        amplitude = integrate(grid, slope * p + 0.5 * dp * dp)
    else:
        amplitude = slope * integrate(grid, p)
    return prefactor * amplitude * (profile.s_second - dpp)
