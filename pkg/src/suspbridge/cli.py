"""Command-line front end.

Each subcommand builds what it needs from one :class:`SimulationConfig`,
writes plot-ready CSV/JSON files into the output directory and finishes
with ``manifest.json`` (config hash, command, headline metrics, files).
Library errors map to exit codes: parameter 2, numerical 3, blow-up 4.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cable import compare_sag_conventions, solve_cable
from .config import DEFAULTS_VERSION, SimulationConfig, config_hash, emit_config, parse_config
from .dynamics import BridgeSystem, EnergyBreakdown, build_system, states_to_csv
from .errors import BridgeError, ParameterError
from .forces import ALT_MODELS, alt_cable_force
from .integration import IntegratorConfig, PicardConfig, picard_solve, run
from .numerics import make_grid
from .scenarios import make_initial_state, torsional_share

__all__ = ["main", "build_parser", "COMMANDS", "RunContext"]

log = logging.getLogger("suspbridge")


@dataclass
class RunContext:
    """Everything a subcommand needs, plus bookkeeping for the manifest."""

    config: SimulationConfig
    out_dir: Path
    xi_one: bool = False
    printed_exponents: bool = False
    files: list[str] = field(default_factory=list)

    def wants(self, fmt: str) -> bool:
        return fmt in self.config.output.formats

    def write_text(self, name: str, text: str) -> None:
        path = self.out_dir / name
        path.write_text(text, encoding="utf-8")
        self.files.append(name)

    def write_json(self, name: str, payload) -> None:
        self.write_text(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def write_rows(self, name: str, header, rows) -> None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
        self.write_text(name, buf.getvalue())

    def system(self, **overrides) -> BridgeSystem:
        cfg = self.config
        return build_system(
            overrides.get("params", cfg.bridge),
            s0=cfg.cable.s0,
            panel_count=cfg.grid.panel_count,
            points_per_panel=cfg.grid.points_per_panel,
            fd_points=cfg.grid.fd_points,
            ivp_steps=cfg.cable.ivp_steps,
            xi_one=self.xi_one,
            printed_exponents=self.printed_exponents,
        )


def _energy_rows(times, energies):
    names = [n for n in EnergyBreakdown.field_names() if n not in ("total_nominal", "total_corrected")]
    header = ["t", "total_nominal", "total_corrected"] + names
    rows = [[t, e.total_nominal, e.total_corrected] + [getattr(e, n) for n in names] for t, e in zip(times, energies)]
    return header, rows


def cmd_cable(ctx: RunContext) -> dict:
    cfg = ctx.config
    grid = make_grid(math.pi, cfg.grid.panel_count, cfg.grid.points_per_panel)
    params = cfg.bridge.cable_params(cfg.cable.s0)
    profile = solve_cable(params, tolerance=cfg.cable.tolerance, grid=grid, step_count=cfg.cable.ivp_steps)
    if ctx.wants("csv"):
        ctx.write_text("cable_profile.csv", profile.to_csv())
    sag = compare_sag_conventions(1000.0, 1.0 / 12.0)
    if ctx.wants("json"):
        ctx.write_json("sag_conventions.json", sag)
    load = (params.load_mass + params.m * profile.xi) * params.g
    ode_residual = np.max(np.abs(params.H0 * profile.s_second - load) / load)
    return {
        "apex_value": profile.apex_value,
        "cable_length": profile.L_c,
        "shoot_residual": profile.shoot_residual,
        "symmetry_error": float(np.max(np.abs(profile.s - profile.s[::-1]))),
        "ode_residual": float(ode_residual),
        "sag_gap_reproducing_readings": sag["reproducing"],
    }


def cmd_eigs(ctx: RunContext) -> dict:
    system = ctx.system()
    basis = system.basis
    lam = basis.eigenvalues
    w = basis.grid.weights
    gram = (basis.u_samples * (basis.weight * w)) @ basis.u_samples.T
    if ctx.wants("json"):
        ctx.write_json("eigenvalues.json", [float(v) for v in lam])
    if ctx.wants("csv"):
        n = basis.n_modes
        nodes = basis.grid.nodes[:, None]
        ctx.write_rows("basis_u.csv", ["x"] + [f"u_{k}" for k in range(1, n + 1)], np.hstack([nodes, basis.u_samples.T]))
        ctx.write_rows("basis_e.csv", ["x"] + [f"e_{k}" for k in range(1, n + 1)], np.hstack([nodes, basis.e_samples.T]))
    k = basis.sine.wavenumbers
    return {
        "eigenvalues": [float(v) for v in lam],
        "eigenvalues_over_H0": [float(v) for v in lam / basis.H0],
        "max_rel_dev_from_H0_k2": float(np.max(np.abs(lam / (basis.H0 * k * k) - 1.0))),
        "orthonormality_error": float(np.max(np.abs(gram - np.eye(basis.n_modes)))),
        "xi_one": ctx.xi_one,
    }


def _simulate(ctx: RunContext, system: BridgeSystem, name_prefix: str = ""):
    cfg = ctx.config
    init = cfg.initial
    initial = make_initial_state(system, init.scenario, init.amplitude, init.slack_amplitude, init.theta_perturbation)
    traj = run(initial, system, cfg.integrator)
    if ctx.wants("csv"):
        ctx.write_text(f"{name_prefix}trajectory.csv", states_to_csv(traj.times, traj.positions, traj.velocities))
        header, rows = _energy_rows(traj.energy_times, traj.energies)
        ctx.write_rows(f"{name_prefix}energy.csv", header, rows)
    if ctx.wants("json"):
        text = "".join(json.dumps(e, sort_keys=True) + "\n" for e in traj.events)
        ctx.write_text(f"{name_prefix}events.jsonl", text)
    return initial, traj


def cmd_simulate(ctx: RunContext) -> dict:
    system = ctx.system()
    initial, traj = _simulate(ctx, system)
    share = torsional_share(traj.energies)
    return {
        "scenario": ctx.config.initial.scenario,
        "slack_threshold": system.slack_threshold,
        "initial_deck_velocity": float(initial.vel[2, 0]),
        "relative_drift_total_corrected": traj.relative_drift("total_corrected"),
        "relative_drift_total_nominal": traj.relative_drift("total_nominal"),
        "slack_events": len(traj.events),
        "max_abs_theta": float(np.max(np.abs(traj.positions[:, 3]))),
        "max_abs_p1_minus_p2": float(np.max(np.abs(traj.positions[:, 0] - traj.positions[:, 1]))),
        "torsional_share_initial": float(share[0]),
        "torsional_share_max": float(np.max(share)),
    }


def cmd_energy_audit(ctx: RunContext) -> dict:
    system = ctx.system()
    _, traj = _simulate(ctx, system)
    e_nom = traj.energy_series("total_nominal")
    change = e_nom - e_nom[0]
    residual = traj.residual_integral
    if ctx.wants("csv"):
        ctx.write_rows(
            "energy_residual.csv",
            ["t", "total_nominal_change", "residual_integral"],
            zip(traj.energy_times, change, residual),
        )
    scale = float(np.max(np.abs(residual)))
    mismatch = float(np.max(np.abs(change - residual)))
    return {
        "relative_drift_total_corrected": traj.relative_drift("total_corrected"),
        "relative_drift_total_nominal": traj.relative_drift("total_nominal"),
        "residual_sup": scale,
        "residual_match_relative": mismatch / scale if scale > 0 else mismatch,
    }


def cmd_picard(ctx: RunContext) -> dict:
    cfg = ctx.config
    system = ctx.system()
    init = cfg.initial
    initial = make_initial_state(system, init.scenario, init.amplitude, init.slack_amplitude, init.theta_perturbation)
    result = picard_solve(initial, system, cfg.picard)

    # reference: the full nonlinear Verlet run on the same window and step
    ref = run(
        initial,
        system,
        IntegratorConfig("verlet", cfg.picard.inner_dt, cfg.picard.horizon, snapshot_every=1, energy_audit_every=10**9),
        log_events=False,
    )
    n = min(len(ref.times), len(result.times))
    sup_diff = float(np.max(np.abs(result.positions[:n] - ref.positions[:n])))

    ladder = {}
    for horizon in (2.0 * cfg.picard.horizon, cfg.picard.horizon, 0.5 * cfg.picard.horizon):
        sub = PicardConfig(horizon, cfg.picard.max_iterations, cfg.picard.convergence_tol, cfg.picard.inner_dt)
        try:
            ladder[repr(horizon)] = picard_solve(initial, system, sub).contraction_ratio
        except BridgeError as exc:
            ladder[repr(horizon)] = f"failed: {exc}"

    if ctx.wants("csv"):
        ctx.write_text("picard_trajectory.csv", states_to_csv(result.times, result.positions, result.velocities))
    if ctx.wants("json"):
        ctx.write_json(
            "picard_report.json",
            {"distances": result.distances, "ratios": result.ratios, "ladder": ladder, "converged": result.converged},
        )
    return {
        "converged": result.converged,
        "iterations": result.iterations,
        "contraction_ratio": result.contraction_ratio,
        "final_distance": result.distances[-1],
        "sup_diff_vs_verlet": sup_diff,
        "ladder_contraction_ratios": ladder,
    }


def cmd_force_compare(ctx: RunContext) -> dict:
    cfg = ctx.config
    system = ctx.system()
    profile = system.profile
    basis = system.basis
    # a finite cable displacement: first weighted mode scaled to a fraction of the slack threshold
    shape = basis.u_samples[0] / np.max(np.abs(basis.u_samples[0]))
    scale = cfg.initial.amplitude * system.slack_threshold
    p = scale * shape
    dp = scale * basis.du_samples[0] / np.max(np.abs(basis.u_samples[0]))
    forces = {m: alt_cable_force(m, profile, p, dp, cfg.bridge.AE, xi_one=ctx.xi_one) for m in ALT_MODELS}
    if ctx.wants("csv"):
        ctx.write_rows(
            "force_compare.csv",
            ["x", "h_first_order", "h_timoshenko", "h_bvk"],
            zip(profile.grid.nodes, *(forces[m] for m in ALT_MODELS)),
        )
    stack = np.vstack([forces[m] for m in ALT_MODELS])
    ref = np.max(np.abs(stack))
    spread = float(np.max(np.ptp(stack, axis=0)) / ref) if ref > 0 else 0.0
    return {
        "displacement_peak": scale,
        "max_abs_force": {m: float(np.max(np.abs(forces[m]))) for m in ALT_MODELS},
        "max_relative_spread": spread,
    }


COMMANDS = {
    "cable": cmd_cable,
    "eigs": cmd_eigs,
    "simulate": cmd_simulate,
    "picard": cmd_picard,
    "energy-audit": cmd_energy_audit,
    "force-compare": cmd_force_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="suspbridge", description="Suspension-bridge modal dynamics toolkit.")
    parser.add_argument("command", nargs="?", choices=sorted(COMMANDS), help="subcommand to run")
    parser.add_argument("--config", type=Path, help="dotted-key configuration file")
    parser.add_argument("--out", type=Path, help="output directory (overrides output.directory)")
    parser.add_argument("--seed-manifest", action="store_true", help="write the fully resolved configuration to config.txt")
    parser.add_argument("--debug-xi-one", action="store_true", help="replace the cable weight xi by 1 in the eigenproblem")
    parser.add_argument("--printed-exponents", action="store_true", help="use k^2 and k for the deck modal stiffness")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command is None and not args.seed_manifest:
        parser.error("a subcommand is required unless --seed-manifest is given")

    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return ParameterError.exit_code

    try:
        config = parse_config(text)
        out_dir = args.out if args.out is not None else Path(config.output.directory)
        out_dir.mkdir(parents=True, exist_ok=True)
        ctx = RunContext(config, out_dir, args.debug_xi_one, args.printed_exponents)
        if args.seed_manifest:
            ctx.write_text("config.txt", emit_config(config))
        # overflow on the way to a blow-up is reported through BlowUpError
        with np.errstate(over="ignore", invalid="ignore"):
            metrics = COMMANDS[args.command](ctx) if args.command else {}
    except BridgeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code

    flags = {"debug_xi_one": args.debug_xi_one, "printed_exponents": args.printed_exponents}
    manifest = {
        "command": args.command or "seed-manifest",
        "config_hash": config_hash(config, flags),
        "defaults_version": DEFAULTS_VERSION,
        "package_version": __version__,
        "flags": flags,
        "metrics": _jsonable(metrics),
        "files": sorted(ctx.files),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for key, value in manifest["metrics"].items():
        print(f"{key}: {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
