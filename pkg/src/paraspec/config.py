"""Declarative experiment configuration (TOML) with exhaustive validation.

The full grammar is documented in the README.  ``parse_config`` collects every
violation it can find (unknown keys, missing fields, misaligned times, angle
indices past the driver dimension) and reports them together.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from ._expr import eval_profile_expr
from .coefficients import Coefficients, Harmonic, Signal, TorusFlow, sample_phase
from .errors import ConfigurationError
from .grid import Grid1D, build_grid

EXPERIMENTS = ("eigen", "lyapunov", "spectrum", "compare", "sweep")

_ALIGN_RTOL = 1e-8


@dataclass(frozen=True)
class GridSpec:
    length: float = float(np.pi)
    n_interior: int = 63

    def build(self) -> Grid1D:
        return build_grid(self.length, self.n_interior)


@dataclass(frozen=True)
class StepperSpec:
    scheme: str = "implicit-euler"
    dt: float = 0.01
    positivity_required: bool = True


@dataclass(frozen=True)
class SignalSpec:
    constant: float = 0.0
    harmonics: tuple[dict, ...] = ()

    def build(self) -> Signal:
        return Signal(constant=self.constant,
                      harmonics=tuple(Harmonic(angle=h["angle"],
                                               multiple=h.get("multiple", 1),
                                               cos_amp=h.get("cos", 0.0),
                                               sin_amp=h.get("sin", 0.0))
                                      for h in self.harmonics))


@dataclass(frozen=True)
class TermSpec:
    profile: str
    signal: SignalSpec


@dataclass(frozen=True)
class CoefficientsSpec:
    bc: str = "dirichlet"
    diffusion: str = "1.0"
    advection: str = "0.0"
    b_left: float = -1.0
    b_right: float = 1.0
    c_terms: tuple[TermSpec, ...] = ()
    d_left: tuple[SignalSpec, ...] = ()
    d_right: tuple[SignalSpec, ...] = ()

    def build(self, grid: Grid1D) -> Coefficients:
        return Coefficients(
            diffusion=eval_profile_expr(self.diffusion, grid.nodes),
            advection=eval_profile_expr(self.advection, grid.nodes),
            bc=self.bc,
            b_left=self.b_left,
            b_right=self.b_right,
            reaction_terms=tuple((t.signal.build(), eval_profile_expr(t.profile, grid.nodes))
                                 for t in self.c_terms),
            robin_left=tuple(s.build() for s in self.d_left),
            robin_right=tuple(s.build() for s in self.d_right),
        )


@dataclass(frozen=True)
class DriverSpec:
    frequencies: tuple[float, ...] = (1.0,)
    phase: tuple[float, ...] | None = None  # None: Haar-sampled from the seed

    @property
    def k(self) -> int:
        return len(self.frequencies)

    def build(self, seed: int) -> TorusFlow:
        phase = (sample_phase(seed, self.k, index=0) if self.phase is None
                 else np.asarray(self.phase, dtype=float))
        return TorusFlow(np.asarray(self.frequencies, dtype=float), phase)


@dataclass(frozen=True)
class RunSpec:
    kind: str = "nonautonomous"
    horizon: float = 500.0
    burn_in: float = 50.0
    ladder: tuple[float, ...] = ()
    n_omega: int = 8
    u0: str = "1.0"


@dataclass(frozen=True)
class ToleranceSpec:
    tol_eq: float = 2e-3
    tol_ineq: float = 5e-3


@dataclass(frozen=True)
class SweepSpec:
    path: str = ""
    values: tuple[float, ...] = ()


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = 0
    grid: GridSpec = GridSpec()
    stepper: StepperSpec = StepperSpec()
    coefficients: CoefficientsSpec = CoefficientsSpec()
    driver: DriverSpec = DriverSpec()
    run: RunSpec = RunSpec()
    tolerances: ToleranceSpec = ToleranceSpec()
    sweep: SweepSpec | None = None
    raw: dict = dc_field(default_factory=dict, repr=False)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)


_SCHEMA = {
    "experiment": str, "seed": int,
    "grid": {"length": float, "n_interior": int},
    "stepper": {"scheme": str, "dt": float, "positivity_required": bool},
    "coefficients": {
        "bc": str, "diffusion": str, "advection": str,
        "b_left": float, "b_right": float,
        "c_terms": [{"profile": str, "constant": float,
                     "harmonics": [{"angle": int, "multiple": int,
                                    "cos": float, "sin": float}]}],
        "d_left": [{"constant": float,
                    "harmonics": [{"angle": int, "multiple": int,
                                   "cos": float, "sin": float}]}],
        "d_right": [{"constant": float,
                     "harmonics": [{"angle": int, "multiple": int,
                                    "cos": float, "sin": float}]}],
    },
    "driver": {"frequencies": [float], "phase": [float]},
    "run": {"kind": str, "horizon": float, "burn_in": float,
            "ladder": [float], "n_omega": int, "u0": str},
    "tolerances": {"tol_eq": float, "tol_ineq": float},
    "sweep": {"path": str, "values": [float]},
}


def _walk(data, schema, path, errors):
    """Collect unknown keys and coarse type mismatches, depth first."""
    if isinstance(schema, dict):
        if not isinstance(data, dict):
            errors.append(f"{path or '<root>'}: expected a table")
            return
        for key, value in data.items():
            if key not in schema:
                errors.append(f"unknown key {path + key!r}")
                continue
            _walk(value, schema[key], f"{path}{key}.", errors)
    elif isinstance(schema, list):
        if not isinstance(data, list):
            errors.append(f"{path[:-1]}: expected an array")
            return
        for i, item in enumerate(data):
            _walk(item, schema[0], f"{path}{i}.", errors)
    else:
        ok = {float: (int, float), int: (int,), str: (str,), bool: (bool,)}[schema]
        if isinstance(data, bool) and schema is not bool:
            errors.append(f"{path[:-1]}: expected {schema.__name__}, got bool")
        elif not isinstance(data, ok):
            errors.append(
                f"{path[:-1]}: expected {schema.__name__}, got {type(data).__name__}")


def _aligned(value: float, dt: float) -> bool:
    m = value / dt
    return abs(m - round(m)) <= _ALIGN_RTOL * max(1.0, abs(m))


def _signal_specs(raw_list) -> tuple[SignalSpec, ...]:
    return tuple(SignalSpec(constant=float(d.get("constant", 0.0)),
                            harmonics=tuple(d.get("harmonics", ())))
                 for d in raw_list)


def config_from_dict(data: dict) -> ExperimentConfig:
    """Validate a raw config dict and build the typed configuration.

    Raises ConfigurationError listing every violation found, not just the first.
    """
    errors: list[str] = []
    _walk(data, _SCHEMA, "", errors)

    experiment = data.get("experiment")
    if experiment is None:
        errors.append("missing required key 'experiment'")
    elif experiment not in EXPERIMENTS:
        errors.append(f"experiment must be one of {EXPERIMENTS}, got {experiment!r}")

    grid = GridSpec(**{k: data.get("grid", {}).get(k, getattr(GridSpec, k))
                       for k in ("length", "n_interior")})
    st_raw = data.get("stepper", {})
    stepper = StepperSpec(scheme=st_raw.get("scheme", "implicit-euler"),
                          dt=float(st_raw.get("dt", 0.01)),
                          positivity_required=st_raw.get("positivity_required", True))
    co_raw = data.get("coefficients", {})
    coefficients = CoefficientsSpec(
        bc=co_raw.get("bc", "dirichlet"),
        diffusion=co_raw.get("diffusion", "1.0"),
        advection=co_raw.get("advection", "0.0"),
        b_left=float(co_raw.get("b_left", -1.0)),
        b_right=float(co_raw.get("b_right", 1.0)),
        c_terms=tuple(TermSpec(profile=t.get("profile", "1.0"),
                               signal=SignalSpec(constant=float(t.get("constant", 0.0)),
                                                 harmonics=tuple(t.get("harmonics", ()))))
                      for t in co_raw.get("c_terms", ())),
        d_left=_signal_specs(co_raw.get("d_left", ())),
        d_right=_signal_specs(co_raw.get("d_right", ())),
    )
    dr_raw = data.get("driver", {})
    driver = DriverSpec(
        frequencies=tuple(float(f) for f in dr_raw.get("frequencies", (1.0,))),
        phase=tuple(float(p) for p in dr_raw["phase"]) if "phase" in dr_raw else None,
    )
    rn_raw = data.get("run", {})
    run = RunSpec(kind=rn_raw.get("kind", "nonautonomous"),
                  horizon=float(rn_raw.get("horizon", 500.0)),
                  burn_in=float(rn_raw.get("burn_in", 50.0)),
                  ladder=tuple(float(T) for T in rn_raw.get("ladder", ())),
                  n_omega=int(rn_raw.get("n_omega", 8)),
                  u0=rn_raw.get("u0", "1.0"))
    tl_raw = data.get("tolerances", {})
    tolerances = ToleranceSpec(tol_eq=float(tl_raw.get("tol_eq", 2e-3)),
                               tol_ineq=float(tl_raw.get("tol_ineq", 5e-3)))
    sweep = None
    if "sweep" in data:
        sw = data["sweep"]
        sweep = SweepSpec(path=sw.get("path", ""),
                          values=tuple(float(v) for v in sw.get("values", ())))

    # semantic checks
    if grid.length <= 0:
        errors.append(f"grid.length must be positive, got {grid.length}")
    if grid.n_interior < 2:
        errors.append(f"grid.n_interior must be >= 2, got {grid.n_interior}")
    if stepper.dt <= 0:
        errors.append(f"stepper.dt must be positive, got {stepper.dt}")
    if stepper.scheme not in ("implicit-euler", "crank-nicolson"):
        errors.append(f"unknown stepper.scheme {stepper.scheme!r}")
    elif stepper.positivity_required and stepper.scheme != "implicit-euler":
        errors.append("stepper.positivity_required requires the implicit-euler scheme")
    if run.kind not in ("nonautonomous", "random"):
        errors.append(f"run.kind must be nonautonomous or random, got {run.kind!r}")
    if driver.phase is not None and len(driver.phase) != driver.k:
        errors.append(
            f"driver.phase has {len(driver.phase)} entries for k={driver.k} frequencies")

    k = driver.k
    all_signals = ([(f"coefficients.c_terms.{i}", t.signal)
                    for i, t in enumerate(coefficients.c_terms)]
                   + [(f"coefficients.d_left.{i}", s)
                      for i, s in enumerate(coefficients.d_left)]
                   + [(f"coefficients.d_right.{i}", s)
                      for i, s in enumerate(coefficients.d_right)])
    for where, spec in all_signals:
        for h in spec.harmonics:
            if h.get("angle", 1) > k:
                errors.append(
                    f"{where}: angle index {h.get('angle')} exceeds driver dimension {k}")

    if stepper.dt > 0:
        for label, value in ([("run.horizon", run.horizon), ("run.burn_in", run.burn_in)]
                             + [(f"run.ladder[{i}]", T) for i, T in enumerate(run.ladder)]):
            if not _aligned(value, stepper.dt):
                errors.append(
                    f"{label} = {value} is not an integer multiple of dt = {stepper.dt}")
    if run.burn_in >= run.horizon:
        errors.append(f"run.burn_in {run.burn_in} must be below run.horizon {run.horizon}")

    if experiment in ("spectrum",) and not run.ladder:
        errors.append("spectrum experiments need run.ladder")
    if experiment == "compare" and run.kind == "nonautonomous" and not run.ladder:
        errors.append("nonautonomous compare experiments need run.ladder")
    if experiment == "sweep":
        if sweep is None or not sweep.path:
            errors.append("sweep experiments need a [sweep] table with a path")
        elif not sweep.values:
            errors.append("sweep.values must be non-empty")

    if errors:
        raise ConfigurationError("invalid configuration:\n  - " + "\n  - ".join(errors))
    return ExperimentConfig(experiment=experiment, seed=int(data.get("seed", 0)),
                            grid=grid, stepper=stepper, coefficients=coefficients,
                            driver=driver, run=run, tolerances=tolerances,
                            sweep=sweep, raw=data)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a TOML experiment configuration."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"config is not valid TOML: {exc}") from exc
    return config_from_dict(data)


def override_path(data: dict, path: str, value) -> dict:
    """Deep-copied dict with the dotted path (int segments index arrays) replaced."""
    import copy

    out = copy.deepcopy(data)
    node = out
    parts = path.split(".")
    for part in parts[:-1]:
        node = node[int(part)] if part.isdigit() else node[part]
    last = parts[-1]
    if last.isdigit():
        node[int(last)] = value
    else:
        node[last] = value
    return out
