"""Fixed-step time integration of the modal system and the Picard oracle.

``picard_map`` freezes the nonlinear and nonlocal terms along an input
trajectory, which turns the bridge equations into the forced linear
decoupled system; that system is then advanced with the same one-step
method used by ``run``. Consequently a trajectory produced by ``run`` is an
exact discrete fixed point of the map when both use the same time step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import BridgeSystem, EnergyBreakdown, ModalState, energy, modal_rhs_forced_linear
from .errors import BlowUpError, HorizonTooLargeError, ParameterError

__all__ = [
    "IntegratorConfig",
    "PicardConfig",
    "Trajectory",
    "PicardResult",
    "step",
    "run",
    "zt_norm",
    "zt_distance",
    "picard_map",
    "picard_solve",
    "frozen_trajectory",
    "max_stable_dt",
]

log = logging.getLogger(__name__)

METHODS = ("verlet", "rk4")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "verlet"
    dt: float = 1e-3
    t_end: float = 10.0
    snapshot_every: int = 10
    energy_audit_every: int = 10

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ParameterError(f"t_end must be positive, got {self.t_end}")
        for name in ("snapshot_every", "energy_audit_every"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ParameterError(f"{name} must be an integer >= 1, got {value}")

    @property
    def step_count(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class PicardConfig:
    horizon: float = 0.1
    max_iterations: int = 20
    convergence_tol: float = 1e-6
    inner_dt: float = 1e-3

    def __post_init__(self):
        if not self.horizon > 0:
            raise ParameterError(f"horizon must be positive, got {self.horizon}")
        if not self.convergence_tol > 0:
            raise ParameterError(f"convergence_tol must be positive, got {self.convergence_tol}")
        if not self.inner_dt > 0:
            raise ParameterError(f"inner_dt must be positive, got {self.inner_dt}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ParameterError(f"max_iterations must be >= 1, got {self.max_iterations}")

    @property
    def step_count(self) -> int:
        n = int(round(self.horizon / self.inner_dt))
        if n < 1:
            raise ParameterError("horizon shorter than one inner step")
        return n


@dataclass
class Trajectory:
    """Snapshots, energy audit and hanger events of one run.

    ``residual_integral[j]`` holds ``W int_0^t int (p1' + p2') dx dt`` at the
    audit time ``energy_times[j]`` (trapezoidal in time, every step).
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    energy_times: np.ndarray
    energies: list[EnergyBreakdown]
    residual_integral: np.ndarray
    events: list[dict] = field(default_factory=list)
    max_abs: np.ndarray | None = None

    @property
    def final(self) -> ModalState:
        return ModalState(float(self.times[-1]), self.positions[-1].copy(), self.velocities[-1].copy())

    def energy_series(self, name: str) -> np.ndarray:
        return np.array([getattr(e, name) for e in self.energies])

    def relative_drift(self, name: str = "total_corrected") -> float:
        """``max_t |E(t) - E(0)| / |E(0)|``."""
        series = self.energy_series(name)
        scale = abs(series[0])
        if scale == 0:
            return float(np.max(np.abs(series - series[0])))
        return float(np.max(np.abs(series - series[0])) / scale)


def _verlet(system: BridgeSystem, pos, vel, acc, dt, accel):
    vel_half = vel + 0.5 * dt * acc
    pos_new = pos + dt * vel_half
    acc_new = accel(pos_new)
    return pos_new, vel_half + 0.5 * dt * acc_new, acc_new


def _rk4(pos, vel, dt, accel):
    a1 = accel(pos)
    x2, v2 = pos + 0.5 * dt * vel, vel + 0.5 * dt * a1
    a2 = accel(x2)
    x3, v3 = pos + 0.5 * dt * v2, vel + 0.5 * dt * a2
    a3 = accel(x3)
    x4, v4 = pos + dt * v3, vel + dt * a3
    a4 = accel(x4)
    pos_new = pos + dt / 6.0 * (vel + 2.0 * v2 + 2.0 * v3 + v4)
    vel_new = vel + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    return pos_new, vel_new


def step(state: ModalState, rhs, config: IntegratorConfig) -> ModalState:
    """Advance one step. ``rhs(pos)`` returns accelerations."""
    dt = config.dt
    if config.method == "verlet":
        pos, vel, _ = _verlet(None, state.pos, state.vel, rhs(state.pos), dt, rhs)
    else:
        pos, vel = _rk4(state.pos, state.vel, dt, rhs)
    new = ModalState(state.t + dt, pos, vel)
    if not new.is_finite():
        raise BlowUpError(f"non-finite state at t = {new.t!r}", t=new.t)
    return new


def max_stable_dt(system: BridgeSystem) -> float:
    """Linear stability bound ``2 / omega_max`` of the explicit steppers.

    ``omega_max`` comes from the diagonal modal stiffness plus the largest
    hanger stiffness (taut hangers only make the system stiffer). The deck
    bending term grows like ``k^4``, so the bound shrinks like ``n^-2``.
    """
    omega2 = system.stiffness / system.masses[:, None]
    if system.mode != "linear_decoupled":
        rows = np.array([1.0, 1.0, 2.0, 2.0 * system.params.ell**2])
        omega2 = omega2 + (system.law.lipschitz * rows / system.masses)[:, None]
    return 2.0 / math.sqrt(float(np.max(omega2)))


def run(initial: ModalState, system: BridgeSystem, config: IntegratorConfig, log_events: bool = True) -> Trajectory:
    if initial.n_modes != system.n_modes:
        raise ParameterError("initial state and system have different mode counts")
    limit = max_stable_dt(system)
    if config.dt > limit:
        log.warning("dt = %g exceeds the linear stability bound %.3g for %d modes", config.dt, limit, system.n_modes)
    accel = system.accelerations
    dt = config.dt
    n_steps = config.step_count
    pos = initial.pos.copy()
    vel = initial.vel.copy()
    t0 = initial.t
    acc = accel(pos)

    weight = system.params.hanger_row_weight
    n_cables = 1 if system.mode == "single_beam" else 2

    def mean_rate(v):
        return weight * float(np.sum(system.cable_mean(v[:n_cables])))

    snaps_t, snaps_x, snaps_v = [t0], [pos.copy()], [vel.copy()]
    e_t, e_list, e_res = [t0], [energy(initial, system)], [0.0]
    residual = 0.0
    rate = mean_rate(vel)
    max_abs = np.abs(pos).copy()

    events: list[dict] = []
    slack_prev = _slack_masks(system, pos) if log_events else None

    def partial_trajectory():
        return Trajectory(
            np.array(snaps_t), np.array(snaps_x), np.array(snaps_v), np.array(e_t), e_list, np.array(e_res), events, max_abs
        )

    for i in range(1, n_steps + 1):
        if config.method == "verlet":
            pos, vel, acc = _verlet(system, pos, vel, acc, dt, accel)
        else:
            pos, vel = _rk4(pos, vel, dt, accel)
        t = t0 + i * dt
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(vel))):
            raise BlowUpError(f"non-finite state at t = {t!r}", t=t, partial=partial_trajectory())
        np.maximum(max_abs, np.abs(pos), out=max_abs)
        new_rate = mean_rate(vel)
        residual += 0.5 * dt * (rate + new_rate)
        rate = new_rate

        if log_events:
            slack_now = _slack_masks(system, pos)
            for row, (before, after) in enumerate(zip(slack_prev, slack_now), start=1):
                changed = np.flatnonzero(before != after)
                for node in changed:
                    events.append(
                        {"t": t, "node_index": int(node), "row": row, "direction": "slack" if after[node] else "taut"}
                    )
            slack_prev = slack_now

        if i % config.snapshot_every == 0 or i == n_steps:
            snaps_t.append(t)
            snaps_x.append(pos.copy())
            snaps_v.append(vel.copy())
        if i % config.energy_audit_every == 0 or i == n_steps:
            e_t.append(t)
            e_list.append(energy(ModalState(t, pos, vel), system))
            e_res.append(residual)

    if events:
        log.info("%d hanger slack/taut transitions logged", len(events))
    return partial_trajectory()


def _slack_masks(system: BridgeSystem, pos):
    d1, d2 = system.hanger_arguments(pos)
    masks = [system.law.slack(d1)]
    if d2 is not None:
        masks.append(system.law.slack(d2))
    return masks


# --- Picard oracle ---------------------------------------------------------


def zt_norm(system: BridgeSystem, positions, velocities) -> float:
    """Discrete Z_T norm: sum over components of the sup-in-time squared norms.

    Positions are measured in H^1_xi (weights lam_k), H^2 (k^4) and H^1
    (k^2); velocities in the plain modal L^2 norm.
    """
    positions = np.asarray(positions)
    velocities = np.asarray(velocities)
    k = system.basis.sine.wavenumbers
    lam = system.basis.eigenvalues
    pos_w = np.vstack([lam, lam, k**4, k**2])
    sq_pos = np.sum(pos_w * positions**2, axis=-1)
    sq_vel = np.sum(velocities**2, axis=-1)
    return float(math.sqrt(np.sum(np.max(sq_pos, axis=0)) + np.sum(np.max(sq_vel, axis=0))))


def zt_distance(system: BridgeSystem, traj_a, traj_b) -> float:
    return zt_norm(system, traj_a[0] - traj_b[0], traj_a[1] - traj_b[1])


def frozen_trajectory(initial: ModalState, n_steps: int):
    pos = np.repeat(initial.pos[None], n_steps + 1, axis=0)
    vel = np.repeat(initial.vel[None], n_steps + 1, axis=0)
    return pos, vel


def _linear_twin(system: BridgeSystem) -> BridgeSystem:
    params = replace(system.params, mode_flag="linear_decoupled")
    return BridgeSystem(params, system.profile, system.basis, system.law, system.nonlocal_op, system.printed_exponents)


def picard_map(input_trajectory, initial: ModalState, system: BridgeSystem, config: PicardConfig, method: str = "verlet"):
    """One application of the fixed-point map.

    ``input_trajectory`` is ``(positions, velocities)`` of shape
    ``(N + 1, 4, n)`` on the grid ``t_i = t0 + i inner_dt``. Returns the
    solution of the forced linear system on the same grid.
    """
    positions = np.asarray(input_trajectory[0], dtype=float)
    n_steps = config.step_count
    if positions.shape != (n_steps + 1, 4, system.n_modes):
        raise ParameterError(
            f"input trajectory must have shape ({n_steps + 1}, 4, {system.n_modes}); got {positions.shape}"
        )
    if system.mode == "single_beam":
        raise ParameterError("picard_map supports the full bridge only")
    linear = _linear_twin(system)
    dt = config.inner_dt
    forcing = [system.nonlinear_forcing_samples(x) for x in positions]

    def accel_at(i, pos):
        return modal_rhs_forced_linear(ModalState(0.0, pos, np.zeros_like(pos)), linear, forcing[i])

    out_x = np.empty_like(positions)
    out_v = np.empty_like(positions)
    pos, vel = initial.pos.copy(), initial.vel.copy()
    out_x[0], out_v[0] = pos, vel
    if method == "verlet":
        acc = accel_at(0, pos)
        for i in range(n_steps):
            vel_half = vel + 0.5 * dt * acc
            pos = pos + dt * vel_half
            acc = accel_at(i + 1, pos)
            vel = vel_half + 0.5 * dt * acc
            out_x[i + 1], out_v[i + 1] = pos, vel
    else:
        raise ParameterError(f"picard_map supports method 'verlet' only, got {method!r}")
    if not (np.all(np.isfinite(out_x)) and np.all(np.isfinite(out_v))):
        raise BlowUpError("non-finite values in the Picard linear solve")
    return out_x, out_v


@dataclass
class PicardResult:
    positions: np.ndarray
    velocities: np.ndarray
    times: np.ndarray
    distances: list[float]
    ratios: list[float]
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.distances)

    @property
    def contraction_ratio(self) -> float:
        """Largest step ratio once the iteration has left the frozen start.

        The first ratio compares against the step away from the constant
        initial trajectory, which is not a difference of two map outputs,
        so it is excluded whenever later ratios exist.
        """
        if not self.ratios:
            return 0.0
        tail = self.ratios[1:] or self.ratios
        return max(tail)


def picard_solve(initial: ModalState, system: BridgeSystem, config: PicardConfig) -> PicardResult:
    """Iterate the map from the frozen initial state until the Z_T step
    falls below ``convergence_tol``.

    Raises ``HorizonTooLargeError`` after three consecutive step ratios >= 1.
    """
    n_steps = config.step_count
    current = frozen_trajectory(initial, n_steps)
    distances: list[float] = []
    ratios: list[float] = []
    converged = False
    for _ in range(config.max_iterations):
        nxt = picard_map(current, initial, system, config)
        dist = zt_distance(system, nxt, current)
        if distances and distances[-1] > 0:
            ratios.append(dist / distances[-1])
        distances.append(dist)
        current = nxt
        if dist <= config.convergence_tol:
            converged = True
            break
        if len(ratios) >= 3 and all(r >= 1.0 for r in ratios[-3:]):
            raise HorizonTooLargeError(
                f"Picard iteration not contracting on horizon {config.horizon}: "
                f"ratios {ratios[-3:]}; try a smaller horizon",
                ratios,
            )
    times = initial.t + config.inner_dt * np.arange(n_steps + 1)
    return PicardResult(current[0], current[1], times, distances, ratios, converged)
