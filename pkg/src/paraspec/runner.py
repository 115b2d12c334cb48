"""Experiment orchestration: dispatch, file outputs, manifest, exit codes.

All numeric output is deterministic for a fixed (config, seed, build): floats
are serialized with shortest round-trip repr, JSON keys are sorted, and
Monte Carlo reductions run in sample-index order.  Outputs are accumulated in
memory and written only on success, so failed runs leave no partial files.
Exit codes: 0 success (verdict holds or holds-with-equality), 2 verdict
violated, 1 operational error.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import io
import json
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._expr import eval_profile_expr
from .averaging import build_averaged, compare, principal_eigenpair
from .config import ExperimentConfig, config_from_dict, override_path, parse_config
from .errors import ParaspecError
from .evolution import StepperConfig
from .grid import Grid1D
from .spectrum import (estimate_lyapunov_random, estimate_spectrum_interval,
                       track_principal, trace_to_rows)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATED = 2


def _fmt(value: float) -> str:
    return repr(float(value))


def _csv_bytes(header: str, rows) -> bytes:
    buf = io.StringIO()
    buf.write(header + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue().encode()


def _json_bytes(payload: dict) -> bytes:
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode()


def _start_profile(cfg: ExperimentConfig, grid: Grid1D) -> np.ndarray:
    u0 = eval_profile_expr(cfg.run.u0, grid.nodes)
    if cfg.coefficients.bc == "dirichlet":
        u0 = u0.copy()
        u0[0] = u0[-1] = 0.0
    return u0


def _discretization(cfg: ExperimentConfig) -> dict:
    return {"L": cfg.grid.length, "n_interior": cfg.grid.n_interior,
            "dt": cfg.stepper.dt, "scheme": cfg.stepper.scheme}


def _stepper(cfg: ExperimentConfig) -> StepperConfig:
    return StepperConfig(scheme=cfg.stepper.scheme, dt=cfg.stepper.dt,
                         positivity_required=cfg.stepper.positivity_required)


def _run_eigen(cfg: ExperimentConfig) -> tuple[dict[str, bytes], int]:
    grid = cfg.grid.build()
    field = cfg.coefficients.build(grid)
    driver = cfg.driver.build(cfg.seed)
    problem = build_averaged(field, driver, grid, "ensemble")
    lam, phi = principal_eigenpair(problem.operator)
    payload = {"lambda_hat": lam, "provenance": problem.provenance,
               "discretization": _discretization(cfg), "seeds": [cfg.seed]}
    files = {"eigen.json": _json_bytes(payload),
             "profile.csv": _csv_bytes("x,value", zip(grid.nodes, phi))}
    return files, EXIT_OK


def _run_spectrum(cfg: ExperimentConfig) -> tuple[dict[str, bytes], int]:
    grid = cfg.grid.build()
    field = cfg.coefficients.build(grid)
    driver = cfg.driver.build(cfg.seed)
    trace = track_principal(_start_profile(cfg, grid), field, driver, grid,
                            _stepper(cfg), cfg.run.horizon, cfg.run.burn_in)
    est = estimate_spectrum_interval(trace, cfg.run.ladder)
    payload = {
        "lambda_inf": est.lambda_inf_hat, "lambda_sup": est.lambda_sup_hat,
        "burn_in": est.burn_in,
        "ladder": [{"T": T, "min": lo, "max": hi, "n_windows": n}
                   for T, lo, hi, n in est.per_window_minmax],
        "discretization": _discretization(cfg), "seeds": [cfg.seed],
    }
    files = {"spectrum.json": _json_bytes(payload),
             "trace.csv": _csv_bytes("t,kappa,log_norm_increment", trace_to_rows(trace))}
    return files, EXIT_OK


def _run_lyapunov(cfg: ExperimentConfig) -> tuple[dict[str, bytes], int]:
    grid = cfg.grid.build()
    field = cfg.coefficients.build(grid)
    est = estimate_lyapunov_random(field, cfg.driver.frequencies, grid,
                                   _stepper(cfg), cfg.run.n_omega,
                                   cfg.run.horizon, cfg.seed, cfg.run.burn_in,
                                   u0=_start_profile(cfg, grid))
    payload = {
        "lambda_random": est.lambda_hat, "dispersion": est.dispersion,
        "per_omega": [{"index": i, "phase": list(phase), "horizon": hz, "estimate": lam}
                      for i, (phase, hz, lam) in enumerate(est.per_omega)],
        "discretization": _discretization(cfg), "seeds": [cfg.seed],
    }
    return {"lyapunov.json": _json_bytes(payload)}, EXIT_OK


def _run_compare(cfg: ExperimentConfig) -> tuple[dict[str, bytes], int]:
    grid = cfg.grid.build()
    field = cfg.coefficients.build(grid)
    phase = cfg.driver.build(cfg.seed).phase
    report = compare(field, cfg.driver.frequencies, grid, _stepper(cfg),
                     run_kind=cfg.run.kind, horizon=cfg.run.horizon,
                     burn_in=cfg.run.burn_in,
                     ladder=cfg.run.ladder or None, phase=phase,
                     n_omega=cfg.run.n_omega, seed=cfg.seed,
                     tol_eq=cfg.tolerances.tol_eq, tol_ineq=cfg.tolerances.tol_ineq,
                     u0=_start_profile(cfg, grid))
    files = {"report.json": _json_bytes(
        report.to_json_dict(_discretization(cfg), [cfg.seed]))}
    code = EXIT_VIOLATED if report.verdict == "violated" else EXIT_OK
    return files, code


def _run_sweep(cfg: ExperimentConfig) -> tuple[dict[str, bytes], int]:
    files: dict[str, bytes] = {}
    rows = []
    any_violated = False
    for i, value in enumerate(cfg.sweep.values):
        raw = override_path(cfg.raw, cfg.sweep.path, value)
        raw["experiment"] = "compare"
        raw.pop("sweep", None)
        row = {"index": i, "value": value}
        try:
            cell_cfg = config_from_dict(raw).with_seed(cfg.seed)
            cell_files, cell_code = _run_compare(cell_cfg)
            report = json.loads(cell_files["report.json"])
            files[f"cells/cell_{i:03d}/report.json"] = cell_files["report.json"]
            row.update(gap=report["gap"], lambda_hat=report["lambda_hat"],
                       verdict=report["verdict"], error="")
            any_violated |= report["verdict"] == "violated"
        except ParaspecError as exc:
            row.update(gap=float("nan"), lambda_hat=float("nan"),
                       verdict="error", error=str(exc).replace("\n", " "))
        rows.append(row)
    buf = io.StringIO()
    buf.write("index,value,gap,lambda_hat,verdict,error\n")
    for row in rows:
        buf.write(f"{row['index']},{_fmt(row['value'])},{_fmt(row['gap'])},"
                  f"{_fmt(row['lambda_hat'])},{row['verdict']},\"{row['error']}\"\n")
    files["sweep.csv"] = buf.getvalue().encode()
    return files, (EXIT_VIOLATED if any_violated else EXIT_OK)


_DISPATCH = {
    "eigen": _run_eigen,
    "spectrum": _run_spectrum,
    "lyapunov": _run_lyapunov,
    "compare": _run_compare,
    "sweep": _run_sweep,
}


def run_experiment(cfg: ExperimentConfig, out_dir: Path, seed_override: int | None = None,
                   quiet: bool = False) -> int:
    """Execute one experiment, writing outputs and a checksum manifest."""
    started = time.time()
    if seed_override is not None:
        cfg = cfg.with_seed(seed_override)
    try:
        files, code = _DISPATCH[cfg.experiment](cfg)
    except ParaspecError as exc:
        if not quiet:
            print(f"error: {exc}")
        return EXIT_ERROR

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "artifact_version": __version__,
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "config": cfg.raw,
        "wall_clock_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "duration_seconds": time.time() - started,
        "outputs": {name: hashlib.sha256(blob).hexdigest()
                    for name, blob in sorted(files.items())},
    }
    for name, blob in files.items():
        path = out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(blob)
    (out_dir / "manifest.json").write_bytes(_json_bytes(manifest))
    if not quiet:
        for name in sorted(files):
            print(f"wrote {out_dir / name}")
        print(f"exit {code}")
    return code


def run_config_file(path: Path, out_dir: Path, seed_override: int | None = None,
                    quiet: bool = False, expect_experiment: str | None = None) -> int:
    try:
        cfg = parse_config(Path(path).read_text())
        if expect_experiment is not None and cfg.experiment != expect_experiment:
            raise ParaspecError(
                f"config declares experiment {cfg.experiment!r}, "
                f"but the {expect_experiment!r} subcommand was invoked")
    except ParaspecError as exc:
        if not quiet:
            print(f"error: {exc}")
        return EXIT_ERROR
    return run_experiment(cfg, out_dir, seed_override=seed_override, quiet=quiet)
