"""Named initial-data presets.

Amplitudes are given as fractions of the slack threshold (the smallest
relative deck-cable displacement that slackens a hanger), so a preset keeps
its character when the physical parameters change. The deck is started
from rest position with a velocity in its first sine mode; the velocity is
sized with a linearized frequency estimate so that the peak deflection is
roughly ``fraction * threshold``.
"""

from __future__ import annotations

import math

import numpy as np

from .dynamics import BridgeSystem, ModalState
from .errors import ParameterError

__all__ = ["SCENARIOS", "deck_frequency_estimate", "velocity_for_fraction", "make_initial_state", "torsional_share"]

SCENARIOS = ("equilibrium", "longitudinal", "torsional-perturbed", "slackening")


def deck_frequency_estimate(system: BridgeSystem) -> float:
    """Frequency of the first deck mode with the cables held fixed.

    The hangers act as springs of stiffness ``kappa(x)`` (two rows unless
    the single-beam configuration is used).
    """
    p = system.params
    e1 = system.basis.e_samples[0]
    rows = 1 if system.mode == "single_beam" else 2
    spring = 0.0 if system.mode == "linear_decoupled" else rows * float((system.law.kappa_samples * e1 * e1) @ system.grid.weights)
    return math.sqrt((system.stiffness[2, 0] + spring) / p.M)


def velocity_for_fraction(system: BridgeSystem, fraction: float) -> float:
    """First-mode deck velocity whose deflection peaks near ``fraction`` times the slack threshold."""
    peak_per_coeff = math.sqrt(2.0 / math.pi)
    return fraction * system.slack_threshold * deck_frequency_estimate(system) / peak_per_coeff


def make_initial_state(
    system: BridgeSystem,
    scenario: str,
    amplitude: float = 0.5,
    slack_amplitude: float = 2.0,
    theta_perturbation: float = 1e-4,
) -> ModalState:
    """Build the modal initial state for a named scenario.

    * ``equilibrium``: everything zero.
    * ``longitudinal``: deck velocity in mode 1 at ``amplitude`` (below the
      slack threshold), cables and torsion at rest.
    * ``slackening``: the same at ``slack_amplitude`` (above the threshold);
      the data stay on the symmetric manifold ``p1 = p2, theta = 0``.
    * ``torsional-perturbed``: ``slackening`` plus a torsion angle
      ``theta_perturbation`` in mode 1.
    """
    if scenario not in SCENARIOS:
        raise ParameterError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
    if not (math.isfinite(amplitude) and amplitude >= 0):
        raise ParameterError(f"initial.amplitude must be non-negative, got {amplitude}")
    if not (math.isfinite(slack_amplitude) and slack_amplitude >= 0):
        raise ParameterError(f"initial.slack_amplitude must be non-negative, got {slack_amplitude}")
    if not math.isfinite(theta_perturbation):
        raise ParameterError(f"initial.theta_perturbation must be finite, got {theta_perturbation}")

    state = ModalState.zeros(system.n_modes)
    if scenario == "equilibrium":
        return state
    fraction = amplitude if scenario == "longitudinal" else slack_amplitude
    state.vel[2, 0] = velocity_for_fraction(system, fraction)
    if scenario == "torsional-perturbed":
        if system.mode == "single_beam":
            raise ParameterError("the single-beam configuration has no torsion")
        state.pos[3, 0] = theta_perturbation
    return state


def torsional_share(energies) -> np.ndarray:
    """Fraction of the corrected total energy held by the torsional terms."""
    total = np.array([e.total_corrected for e in energies])
    torsion = np.array([e.kinetic_deck_torsion + e.torsional_stiffness for e in energies])
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(total != 0, torsion / total, 0.0)
