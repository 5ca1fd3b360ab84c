"""Estimator-style wrappers around the functional modules.

These follow scikit-learn conventions (hyperparameters in ``__init__``,
learned state in trailing-underscore attributes set by ``fit``, ``fit``
returning ``self``) so they compose with ``get_params``/``set_params``,
``clone`` and parameter sweeps. There is nothing statistical being learned:
"fitting" means solving the deterministic setup problem once.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cable import CableParams, solve_cable
from .dynamics import BridgeParams, ModalState, build_system
from .integration import IntegratorConfig, PicardConfig, picard_solve, run
from .numerics import make_grid
from .scenarios import make_initial_state
from .spectral import project, reconstruct, solve_weighted_eigenbasis

__all__ = ["CableEquilibrium", "WeightedModalBasis", "BridgeSimulator"]


def _abscissae(X) -> np.ndarray:
    x = np.asarray(X, dtype=float)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise ValueError(f"expected abscissae of shape (n,) or (n, 1), got {x.shape}")
    return x


class CableEquilibrium(BaseEstimator):
    """Equilibrium cable shape; ``predict`` evaluates ``s(x)``.

    ``fit`` ignores its arguments and solves the boundary-value problem
    for the current hyperparameters.
    """

    def __init__(
        self,
        H0=1000.0,
        m=10.0,
        load_mass=10.0,
        g=9.81,
        L=math.pi,
        s0=1.0,
        tolerance=1e-9,
        panel_count=256,
        points_per_panel=4,
        step_count=4096,
    ):
        self.H0 = H0
        self.m = m
        self.load_mass = load_mass
        self.g = g
        self.L = L
        self.s0 = s0
        self.tolerance = tolerance
        self.panel_count = panel_count
        self.points_per_panel = points_per_panel
        self.step_count = step_count

    def fit(self, X=None, y=None):
        params = CableParams(self.H0, self.m, self.load_mass, self.g, self.L, self.s0)
        grid = make_grid(self.L, self.panel_count, self.points_per_panel)
        self.profile_ = solve_cable(params, self.tolerance, grid, self.step_count)
        self.apex_value_ = self.profile_.apex_value
        self.cable_length_ = self.profile_.L_c
        return self

    def predict(self, X):
        check_is_fitted(self, "profile_")
        return self.profile_.evaluate(_abscissae(X))[0]

    def slope(self, X):
        check_is_fitted(self, "profile_")
        return self.profile_.evaluate(_abscissae(X))[1]


class WeightedModalBasis(TransformerMixin, BaseEstimator):
    """Projection of grid-sampled fields onto a modal basis.

    ``which='weighted'`` uses the cable eigenfunctions with the
    xi-weighted inner product, ``which='sine'`` the plain sine modes.
    ``transform`` maps samples of shape ``(n_fields, n_nodes)`` to
    coefficients ``(n_fields, n_modes)``; ``inverse_transform`` goes back.
    """

    def __init__(self, n_modes=16, fd_points=4096, which="weighted", xi_one=False, cable=None):
        self.n_modes = n_modes
        self.fd_points = fd_points
        self.which = which
        self.xi_one = xi_one
        self.cable = cable

    def fit(self, X=None, y=None):
        if self.which not in ("weighted", "sine"):
            raise ValueError(f"which must be 'weighted' or 'sine', got {self.which!r}")
        cable = self.cable if self.cable is not None else CableEquilibrium()
        if not hasattr(cable, "profile_"):
            cable = cable.fit()
        self.basis_ = solve_weighted_eigenbasis(cable.profile_, self.n_modes, self.fd_points, xi_one=self.xi_one)
        self.eigenvalues_ = self.basis_.eigenvalues
        self.nodes_ = self.basis_.grid.nodes
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        inner = "weighted" if self.which == "weighted" else "plain"
        return project(np.atleast_2d(X), self.basis_, inner)

    def inverse_transform(self, X):
        check_is_fitted(self, "basis_")
        return reconstruct(np.atleast_2d(X), self.basis_, self.which)


class BridgeSimulator(BaseEstimator):
    """Full bridge model; ``predict`` returns modal positions at snapshot times.

    ``predict(X)`` accepts ``None`` (use the configured scenario) or an
    array of initial states of shape ``(8, n_modes)`` (positions then
    velocities, rows ``p1, p2, y, theta``).
    """

    def __init__(
        self,
        M=20.0,
        m=10.0,
        ell=0.2,
        EI=100.0,
        GK=50.0,
        AE=3000.0,
        H0=1000.0,
        g=9.81,
        kappa0=100.0,
        n_modes=16,
        mode_flag="full_bridge",
        method="verlet",
        dt=1e-3,
        t_end=10.0,
        snapshot_every=10,
        energy_audit_every=10,
        scenario="longitudinal",
        amplitude=0.5,
        slack_amplitude=2.0,
        theta_perturbation=1e-4,
    ):
        self.M = M
        self.m = m
        self.ell = ell
        self.EI = EI
        self.GK = GK
        self.AE = AE
        self.H0 = H0
        self.g = g
        self.kappa0 = kappa0
        self.n_modes = n_modes
        self.mode_flag = mode_flag
        self.method = method
        self.dt = dt
        self.t_end = t_end
        self.snapshot_every = snapshot_every
        self.energy_audit_every = energy_audit_every
        self.scenario = scenario
        self.amplitude = amplitude
        self.slack_amplitude = slack_amplitude
        self.theta_perturbation = theta_perturbation

    def _integrator(self):
        return IntegratorConfig(self.method, self.dt, self.t_end, self.snapshot_every, self.energy_audit_every)

    def fit(self, X=None, y=None):
        params = BridgeParams(
            self.M, self.m, self.ell, self.EI, self.GK, self.AE, self.H0, self.g, self.kappa0, self.n_modes, self.mode_flag
        )
        self._integrator()  # validate early
        self.system_ = build_system(params)
        self.slack_threshold_ = self.system_.slack_threshold
        return self

    def initial_state(self, X=None):
        check_is_fitted(self, "system_")
        if X is None:
            return make_initial_state(
                self.system_, self.scenario, self.amplitude, self.slack_amplitude, self.theta_perturbation
            )
        X = np.asarray(X, dtype=float)
        if X.shape != (8, self.n_modes):
            raise ValueError(f"initial state must have shape (8, {self.n_modes}), got {X.shape}")
        return ModalState(0.0, X[:4], X[4:])

    def simulate(self, X=None):
        """Run the integrator and return the full trajectory record."""
        self.trajectory_ = run(self.initial_state(X), self.system_, self._integrator())
        return self.trajectory_

    def predict(self, X=None):
        return self.simulate(X).positions

    def score(self, X=None, y=None):
        """Negative relative drift of the corrected energy (higher is better)."""
        return -self.simulate(X).relative_drift("total_corrected")

    def picard(self, X=None, horizon=0.1, max_iterations=20, convergence_tol=1e-6):
        config = PicardConfig(horizon, max_iterations, convergence_tol, self.dt)
        return picard_solve(self.initial_state(X), self.system_, config)
