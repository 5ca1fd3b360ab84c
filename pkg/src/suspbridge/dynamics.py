"""Semi-discrete Galerkin form of the bridge equations.

Unknowns are the cable displacements ``p1, p2`` (expanded in the weighted
eigenbasis ``u_k``), the deck deflection ``y`` and the torsion angle
``theta`` (both expanded in the sine modes ``e_k``). Positions and
velocities are stored as ``(4, n)`` arrays with rows ``p1, p2, y, theta``.

For mode ``k`` the equations read

    m p1''     = -lam_k p1 + (AE/Lc)(a.p1) b_k + int Phi(y + l th - p1) u_k
    m p2''     = -lam_k p2 + (AE/Lc)(a.p2) b_k + int Phi(y - l th - p2) u_k
    M y''      = -EI k^4 y - int [Phi_1 + Phi_2] e_k
    M l^2/3 th'' = -GK k^2 th + l int [Phi_2 - Phi_1] e_k
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, field, fields

import numpy as np

from .cable import CableParams, CableProfile, solve_cable
from .errors import ParameterError
from .forces import HangerLaw, NonlocalOperatorData, build_hanger_law, build_nonlocal_operator
from .numerics import make_grid
from .spectral import SpectralBasis, project, solve_weighted_eigenbasis

__all__ = [
    "MODES",
    "BridgeParams",
    "ModalState",
    "EnergyBreakdown",
    "BridgeSystem",
    "build_system",
    "project_initial_data",
    "modal_rhs",
    "modal_rhs_forced_linear",
    "single_beam_rhs",
    "energy",
    "state_csv_header",
    "states_to_csv",
]

MODES = ("full_bridge", "single_beam", "linear_decoupled")
ROWS = ("p1", "p2", "y", "th")


@dataclass(frozen=True)
class BridgeParams:
    M: float = 20.0
    m: float = 10.0
    ell: float = 0.2
    EI: float = 100.0
    GK: float = 50.0
    AE: float = 3000.0
    H0: float = 1000.0
    g: float = 9.81
    kappa0: float = 100.0
    n_modes: int = 16
    mode_flag: str = "full_bridge"

    def __post_init__(self):
        for name in ("M", "m", "ell", "EI", "GK", "AE", "H0", "g", "kappa0"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be positive and finite, got {value}")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ParameterError(f"n_modes must be >= 1, got {self.n_modes}")
        if self.mode_flag not in MODES:
            raise ParameterError(f"mode_flag must be one of {MODES}, got {self.mode_flag!r}")

    @property
    def load_mass(self) -> float:
        """Deck mass per unit length carried by one cable."""
        return self.M if self.mode_flag == "single_beam" else 0.5 * self.M

    @property
    def hanger_row_weight(self) -> float:
        return self.load_mass * self.g

    @property
    def torsional_inertia(self) -> float:
        return self.M * self.ell**2 / 3.0

    def cable_params(self, s0: float = 1.0) -> CableParams:
        return CableParams(H0=self.H0, m=self.m, load_mass=self.load_mass, g=self.g, L=math.pi, s0=s0)


@dataclass
class ModalState:
    t: float
    pos: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        self.pos = np.asarray(self.pos, dtype=float)
        self.vel = np.asarray(self.vel, dtype=float)
        if self.pos.ndim != 2 or self.pos.shape[0] != 4 or self.pos.shape != self.vel.shape:
            raise ParameterError(f"state arrays must both have shape (4, n); got {self.pos.shape}, {self.vel.shape}")

    @classmethod
    def zeros(cls, n_modes: int, t: float = 0.0) -> "ModalState":
        return cls(t, np.zeros((4, n_modes)), np.zeros((4, n_modes)))

    @property
    def n_modes(self) -> int:
        return self.pos.shape[1]

    p1 = property(lambda self: self.pos[0])
    p2 = property(lambda self: self.pos[1])
    y = property(lambda self: self.pos[2])
    theta = property(lambda self: self.pos[3])
    p1_dot = property(lambda self: self.vel[0])
    p2_dot = property(lambda self: self.vel[1])
    y_dot = property(lambda self: self.vel[2])
    theta_dot = property(lambda self: self.vel[3])

    def copy(self) -> "ModalState":
        return ModalState(self.t, self.pos.copy(), self.vel.copy())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.pos)) and np.all(np.isfinite(self.vel)))


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy terms of one state.

    ``total_nominal`` is the plain sum of the eleven terms. Along exact
    solutions it changes at the rate ``W int (p1' + p2') dx`` (``W`` being the
    deck weight per hanger row), because the deck weight does work on the
    cables through the hangers. ``total_corrected`` subtracts
    ``W int (p1 + p2) dx`` and is the conserved quantity.
    """

    kinetic_deck_translation: float
    kinetic_deck_torsion: float
    kinetic_cables: float
    bending: float
    torsional_stiffness: float
    cable_stretch_nonlocal_1: float
    cable_stretch_nonlocal_2: float
    cable_quadratic: float
    cable_linear: float
    cable_gravity: float
    hanger_potential: float
    total_nominal: float
    total_corrected: float

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def as_tuple(self):
        return astuple(self)

    @property
    def kinetic(self) -> float:
        return self.kinetic_deck_translation + self.kinetic_deck_torsion + self.kinetic_cables


@dataclass(frozen=True, eq=False)
class BridgeSystem:
    """Everything the right-hand side needs, precomputed once."""

    params: BridgeParams
    profile: CableProfile
    basis: SpectralBasis
    law: HangerLaw
    nonlocal_op: NonlocalOperatorData
    printed_exponents: bool = False
    masses: np.ndarray = field(init=False, repr=False)
    stiffness: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = self.params
        n = self.basis.n_modes
        if n != p.n_modes:
            raise ParameterError("basis size differs from params.n_modes")
        k = self.basis.sine.wavenumbers
        if self.printed_exponents:
            ky, kth = k**2, k
        else:
            ky, kth = k**4, k**2
        lam = self.basis.eigenvalues
        stiffness = np.vstack([lam, lam, p.EI * ky, p.GK * kth])
        masses = np.array([p.m, p.m, p.M, p.torsional_inertia])
        w = self.basis.grid.weights
        object.__setattr__(self, "stiffness", stiffness)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "_U", self.basis.u_samples)
        object.__setattr__(self, "_E", self.basis.e_samples)
        object.__setattr__(self, "_Uw", (self.basis.u_samples * w).T)
        object.__setattr__(self, "_Ew", (self.basis.e_samples * w).T)
        object.__setattr__(self, "_u_mean", self.basis.u_samples @ w)

    @property
    def n_modes(self) -> int:
        return self.basis.n_modes

    @property
    def mode(self) -> str:
        return self.params.mode_flag

    @property
    def grid(self):
        return self.basis.grid

    @property
    def slack_threshold(self) -> float:
        """Smallest relative displacement magnitude that slackens a hanger."""
        return float(np.min(-self.law.slack_threshold_samples))

    def fields(self, pos):
        """Grid samples of ``p1, p2, y, theta``."""
        pos = np.asarray(pos)
        return pos[..., :2, :] @ self._U, pos[..., 2:, :] @ self._E

    def hanger_arguments(self, pos):
        """Relative displacements ``(d1, d2)`` of the two hanger rows."""
        (p, q), (y, th) = _split(self.fields(pos))
        ell = self.params.ell
        if self.mode == "single_beam":
            return y - p, None
        return y + ell * th - p, y - ell * th - q

    def nonlinear_forces(self, pos) -> np.ndarray:
        """Hanger and cable-stretch modal forces (everything not in ``stiffness``)."""
        pos = np.asarray(pos, dtype=float)
        out = np.zeros_like(pos)
        if self.mode == "linear_decoupled":
            return out
        d1, d2 = self.hanger_arguments(pos)
        phi1 = self.law.phi(d1)
        if self.mode == "single_beam":
            out[0] = self.nonlocal_op.modal_force(pos[0]) + phi1 @ self._Uw
            out[2] = -(phi1 @ self._Ew)
            return out
        phi2 = self.law.phi(d2)
        out[0] = self.nonlocal_op.modal_force(pos[0]) + phi1 @ self._Uw
        out[1] = self.nonlocal_op.modal_force(pos[1]) + phi2 @ self._Uw
        out[2] = -((phi1 + phi2) @ self._Ew)
        out[3] = self.params.ell * ((phi2 - phi1) @ self._Ew)
        return out

    def accelerations(self, pos) -> np.ndarray:
        pos = np.asarray(pos, dtype=float)
        acc = (self.nonlinear_forces(pos) - self.stiffness * pos) / self.masses[:, None]
        if self.mode == "single_beam":
            acc[1] = 0.0
            acc[3] = 0.0
        return acc

    def project_forcing(self, g_samples) -> np.ndarray:
        """Modal loads ``(g_i, u_k)`` for rows 0-1 and ``(g_i, e_k)`` for rows 2-3."""
        g = np.asarray(g_samples, dtype=float)
        if g.shape[-2:] != (4, self.grid.size):
            raise ParameterError(f"forcing must have shape (4, {self.grid.size})")
        return np.concatenate([g[..., :2, :] @ self._Uw, g[..., 2:, :] @ self._Ew], axis=-2)

    def nonlinear_forcing_samples(self, pos) -> np.ndarray:
        """Grid forcings ``g1..g4`` obtained by freezing ``pos`` in the nonlinear terms."""
        pos = np.asarray(pos, dtype=float)
        out = np.zeros((4, self.grid.size))
        if self.mode == "linear_decoupled":
            return out
        d1, d2 = self.hanger_arguments(pos)
        phi1 = self.law.phi(d1)
        minus_h1 = -self.nonlocal_op.h_samples(pos[0])
        if self.mode == "single_beam":
            out[0] = minus_h1 + phi1
            out[2] = -phi1
            return out
        phi2 = self.law.phi(d2)
        out[0] = minus_h1 + phi1
        out[1] = -self.nonlocal_op.h_samples(pos[1]) + phi2
        out[2] = -(phi1 + phi2)
        out[3] = self.params.ell * (phi2 - phi1)
        return out

    def cable_mean(self, coeffs):
        """``int p dx`` for modal cable coefficients."""
        return np.asarray(coeffs) @ self._u_mean


def _split(fields_pair):
    cables, deck = fields_pair
    return (cables[..., 0, :], cables[..., 1, :]), (deck[..., 0, :], deck[..., 1, :])


def build_system(
    params: BridgeParams,
    s0: float = 1.0,
    panel_count: int = 256,
    points_per_panel: int = 4,
    fd_points: int = 4096,
    ivp_steps: int = 4096,
    xi_one: bool = False,
    printed_exponents: bool = False,
    profile: CableProfile | None = None,
) -> BridgeSystem:
    if profile is None:
        grid = make_grid(math.pi, panel_count, points_per_panel)
        profile = solve_cable(params.cable_params(s0), grid=grid, step_count=ivp_steps)
    basis = solve_weighted_eigenbasis(profile, params.n_modes, fd_points, xi_one=xi_one)
    law = build_hanger_law(profile, params.kappa0, params.hanger_row_weight)
    nonlocal_op = build_nonlocal_operator(profile, basis, params.AE)
    return BridgeSystem(params, profile, basis, law, nonlocal_op, printed_exponents)


def project_initial_data(
    basis: SpectralBasis,
    y0=None,
    theta0=None,
    p10=None,
    p20=None,
    y1=None,
    theta1=None,
    p11=None,
    p21=None,
    t: float = 0.0,
) -> ModalState:
    """Galerkin projection of grid-sampled initial data.

    Cable fields use the xi-weighted inner product against ``u_k``; deck
    fields use the plain inner product against ``e_k``. ``None`` means zero.
    """
    nodes = basis.grid.size

    def take(f):
        if f is None:
            return np.zeros(nodes)
        f = np.asarray(f, dtype=float)
        if f.shape != (nodes,):
            raise ParameterError(f"initial field must have shape ({nodes},), got {f.shape}")
        return f

    pos = np.vstack(
        [
            project(take(p10), basis, "weighted"),
            project(take(p20), basis, "weighted"),
            project(take(y0), basis, "plain"),
            project(take(theta0), basis, "plain"),
        ]
    )
    vel = np.vstack(
        [
            project(take(p11), basis, "weighted"),
            project(take(p21), basis, "weighted"),
            project(take(y1), basis, "plain"),
            project(take(theta1), basis, "plain"),
        ]
    )
    return ModalState(t, pos, vel)


def modal_rhs(state: ModalState, system: BridgeSystem) -> np.ndarray:
    if state.n_modes != system.n_modes:
        raise ParameterError("state and system have different mode counts")
    return system.accelerations(state.pos)


def modal_rhs_forced_linear(state: ModalState, system: BridgeSystem, g_samples) -> np.ndarray:
    """Accelerations of the linear decoupled system driven by grid forcings."""
    if system.mode != "linear_decoupled":
        raise ParameterError("forced linear right-hand side requires mode_flag = 'linear_decoupled'")
    if state.n_modes != system.n_modes:
        raise ParameterError("state and system have different mode counts")
    return (system.project_forcing(g_samples) - system.stiffness * state.pos) / system.masses[:, None]


def single_beam_rhs(state: ModalState, system: BridgeSystem) -> np.ndarray:
    if system.mode != "single_beam":
        raise ParameterError("single_beam_rhs requires mode_flag = 'single_beam'")
    return modal_rhs(state, system)


def energy(state: ModalState, system: BridgeSystem) -> EnergyBreakdown:
    """Per-term energy by quadrature of the reconstructed fields."""
    p = system.params
    basis = system.basis
    profile = system.profile
    w = basis.grid.weights
    xi = basis.weight
    pos, vel = state.pos, state.vel
    single = system.mode == "single_beam"
    linear = system.mode == "linear_decoupled"
    n_cables = 1 if single else 2

    cab = pos[:n_cables] @ basis.u_samples
    dcab = pos[:n_cables] @ basis.du_samples
    vcab = vel[:n_cables] @ basis.u_samples
    ydd = pos[2] @ basis.dde_samples
    vy = vel[2] @ basis.e_samples
    dth = pos[3] @ basis.de_samples
    vth = vel[3] @ basis.e_samples

    kin_y = 0.5 * p.M * (vy * vy) @ w
    kin_th = 0.0 if single else p.M * p.ell**2 / 6.0 * (vth * vth) @ w
    kin_c = 0.5 * p.m * np.sum((vcab * vcab) @ (xi * w))
    bend = 0.5 * p.EI * (ydd * ydd) @ w
    tors = 0.0 if single else 0.5 * p.GK * (dth * dth) @ w

    stretch = [0.0, 0.0]
    hanger = 0.0
    if not linear:
        sp_xi = profile.s_prime / profile.xi
        for i in range(n_cables):
            gamma = (sp_xi * dcab[i]) @ w
            stretch[i] = 0.5 * system.nonlocal_op.prefactor * gamma * gamma
        d1, d2 = system.hanger_arguments(pos)
        hanger = system.law.psi(d1) @ w
        if d2 is not None:
            hanger += system.law.psi(d2) @ w
    quad = p.H0 * np.sum((dcab * dcab) @ (w / (2.0 * xi * xi)))
    lin = -p.H0 * np.sum(dcab @ (profile.s_prime * w))
    grav = -p.m * p.g * np.sum(cab @ (profile.xi * w))

    terms = [kin_y, kin_th, kin_c, bend, tors, stretch[0], stretch[1], quad, lin, grav, hanger]
    terms = [float(v) + 0.0 for v in terms]
    total = math.fsum(terms)
    correction = p.hanger_row_weight * float(np.sum(cab @ w))
    return EnergyBreakdown(*terms, total_nominal=total, total_corrected=total - correction)


def potential_energy(pos, system: BridgeSystem) -> float:
    """Corrected potential (total energy at zero velocity)."""
    return energy(ModalState(0.0, pos, np.zeros_like(pos)), system).total_corrected


def state_csv_header(n_modes: int) -> list[str]:
    names = ["t"]
    for prefix in ("", "d"):
        for row in ROWS:
            names.extend(f"{prefix}{row}_{k}" for k in range(1, n_modes + 1))
    return names


def states_to_csv(times, positions, velocities, fh=None) -> str:
    positions = np.asarray(positions)
    velocities = np.asarray(velocities)
    n = positions.shape[-1]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(state_csv_header(n))
    for t, x, v in zip(times, positions, velocities):
        writer.writerow([repr(float(t))] + [repr(float(a)) for a in x.ravel()] + [repr(float(a)) for a in v.ravel()])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text
