"""Principal-direction tracking, growth-rate traces, and exponent estimates.

Forward iteration with per-step renormalization converges onto the dominant
positive direction of the cocycle; the trace records, at every step end time,

  - the Rayleigh quotient of the assembled generator on the normalized
    profile (column ``kappa`` in exports), and
  - the raw log stretch ln(||u_{n+1}||/||u_n||) of the step.

Exponent estimators convert per-step stretches back to generator-scale rates
through the scheme's scalar update (see ``step_rate_from_stretch``), so every
reported lambda is comparable with eigenvalues of the assembled operator at
the same discretization.  The growth-interval estimator works directly on
Rayleigh samples, which live on that scale already.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .coefficients import Coefficients, TorusFlow, sample_phase
from .errors import (AlignmentError, ConfigurationError, DegenerateInputError,
                     InsufficientDataError, OracleFailureError, RankLossError)
from .evolution import (CocycleStepper, StepperConfig, step_rate_from_stretch,
                        steps_between, require_nonnegative_start)
from .grid import Grid1D


@dataclass(frozen=True)
class PrincipalTrace:
    """Per-step record of the tracked principal direction.

    All three arrays have one entry per step, indexed by the step's end time:
    times[k] = (k+1)*dt, rayleigh[k] the Rayleigh rate at that time,
    log_increments[k] the step's log stretch.
    """

    dt: float
    scheme: str
    burn_in: float
    horizon: float
    times: np.ndarray = dc_field(repr=False)
    rayleigh: np.ndarray = dc_field(repr=False)
    log_increments: np.ndarray = dc_field(repr=False)
    snapshot_times: np.ndarray = dc_field(repr=False, default=None)
    snapshots: np.ndarray = dc_field(repr=False, default=None)

    def __post_init__(self):
        if not (len(self.times) == len(self.rayleigh) == len(self.log_increments)):
            raise ConfigurationError("trace arrays must have equal lengths")

    @property
    def n_steps(self) -> int:
        return self.times.size

    def burn_steps(self) -> int:
        return int(round(self.burn_in / self.dt))

    def post_burn_rates(self) -> np.ndarray:
        """Generator-scale per-step rates after burn-in."""
        r = np.exp(self.log_increments[self.burn_steps():])
        return step_rate_from_stretch(r, self.dt, self.scheme)

    def post_burn_rayleigh(self) -> np.ndarray:
        return self.rayleigh[self.burn_steps():]

    def index_of(self, t: float) -> int:
        m = t / self.dt
        mi = round(m)
        if abs(m - mi) > 1e-8 * max(1.0, abs(m)) or not (1 <= mi <= self.n_steps):
            raise AlignmentError(f"time {t} is not a recorded sample time")
        return int(mi) - 1

    def window_average(self, start: float, stop: float) -> float:
        """Trapezoid average of the Rayleigh samples over [start, stop]."""
        a = self.index_of(start)
        b = self.index_of(stop)
        if b <= a:
            raise InsufficientDataError(f"empty window [{start}, {stop}]")
        chunk = self.rayleigh[a:b + 1]
        total = chunk.sum() - 0.5 * (chunk[0] + chunk[-1])
        return float(total * self.dt / (stop - start))


def track_principal(u0: np.ndarray, field: Coefficients, driver: TorusFlow,
                    grid: Grid1D, cfg: StepperConfig, horizon: float,
                    burn_in: float = 50.0,
                    snapshot_times: np.ndarray | None = None) -> PrincipalTrace:
    """Advance a nonnegative start field, renormalizing every step.

    Burn-in is recorded on the trace and excluded by the estimators; the
    transient dies off exponentially fast, at the separation rate of the
    cocycle.  Snapshots of the normalized profile are kept at the requested
    lattice times.
    """
    u0 = np.asarray(u0, dtype=float)
    require_nonnegative_start(u0)
    if not np.any(u0 > 0):
        raise DegenerateInputError("start field must be nonzero")
    if burn_in < 0 or burn_in >= horizon:
        raise ConfigurationError(f"need 0 <= burn_in < horizon, got {burn_in}, {horizon}")
    kernel = CocycleStepper(field, grid, cfg, driver)
    n_steps = steps_between(0.0, horizon, cfg.dt)
    steps_between(0.0, burn_in, cfg.dt)  # alignment check

    want_snapshot: dict[int, int] = {}
    if snapshot_times is not None:
        snapshot_times = np.asarray(snapshot_times, dtype=float)
        for pos, ts in enumerate(snapshot_times):
            want_snapshot[steps_between(0.0, float(ts), cfg.dt)] = pos
        snaps = np.zeros((snapshot_times.size, grid.n_nodes))
    else:
        snaps = None

    dt = cfg.dt
    u = kernel.take_dof(u0)
    u = u / kernel.dof_norm(u)
    if snaps is not None and 0 in want_snapshot:
        snaps[want_snapshot[0]] = kernel.to_full(u)

    times = (1.0 + np.arange(n_steps)) * dt
    rayleigh = np.empty(n_steps)
    log_inc = np.empty(n_steps)
    for j in range(n_steps):
        u_new, bands = kernel.advance_lattice(u, j)
        r = kernel.dof_norm(u_new)
        if r == 0.0 or not np.isfinite(r):
            raise DegenerateInputError(f"field collapsed at step {j}")
        w = u_new / r
        sub, diag, sup = bands
        aw = diag * w
        aw[1:] += sub[1:] * w[:-1]
        aw[:-1] += sup[:-1] * w[1:]
        rayleigh[j] = kernel.dof_inner(aw, w)
        log_inc[j] = np.log(r)
        u = w
        if snaps is not None and (j + 1) in want_snapshot:
            snaps[want_snapshot[j + 1]] = kernel.to_full(u)

    return PrincipalTrace(dt=dt, scheme=cfg.scheme, burn_in=float(burn_in),
                          horizon=float(horizon), times=times, rayleigh=rayleigh,
                          log_increments=log_inc, snapshot_times=snapshot_times,
                          snapshots=snaps)


@dataclass(frozen=True)
class SpectrumEstimate:
    lambda_inf_hat: float
    lambda_sup_hat: float
    window_ladder: tuple[float, ...]
    per_window_minmax: tuple[tuple[float, float, float, int], ...]  # (T, min, max, count)
    burn_in: float
    window_starts_max_t: tuple[float, ...] = ()

    @property
    def width(self) -> float:
        return self.lambda_sup_hat - self.lambda_inf_hat


def sliding_window_starts(trace: PrincipalTrace, window: float) -> np.ndarray:
    """Start times for sliding windows of the given length, stride ~ window/10."""
    dt = trace.dt
    stride_steps = max(1, int(np.ceil(window / (10.0 * dt))))
    first = max(trace.burn_steps(), 1)  # samples begin at t = dt
    win_steps = int(round(window / dt))
    starts = np.arange(first, trace.n_steps - win_steps + 1, stride_steps)
    return starts * dt


def estimate_spectrum_interval(trace: PrincipalTrace,
                               ladder: tuple[float, ...]) -> SpectrumEstimate:
    """Sliding-window averages of the Rayleigh samples across a window ladder.

    The min and max at the largest window length are reported as the estimated
    endpoints of the growth-rate interval.  The full limit set is not
    computable from a finite trace; the ladder makes the finite surrogate
    explicit.
    """
    if not ladder:
        raise ConfigurationError("window ladder must be non-empty")
    ladder = tuple(sorted(float(T) for T in ladder))
    t_max = ladder[-1]
    if trace.horizon < 2.0 * t_max + trace.burn_in:
        raise InsufficientDataError(
            f"trace horizon {trace.horizon} too short for window {t_max} "
            f"(need >= {2 * t_max + trace.burn_in})")
    rows = []
    largest = None
    starts_used: tuple[float, ...] = ()
    for T in ladder:
        starts = sliding_window_starts(trace, T)
        avgs = np.array([trace.window_average(s, s + T) for s in starts])
        rows.append((T, float(avgs.min()), float(avgs.max()), int(avgs.size)))
        largest = (float(avgs.min()), float(avgs.max()))
        if T == t_max:
            starts_used = tuple(float(s) for s in starts)
    return SpectrumEstimate(lambda_inf_hat=largest[0], lambda_sup_hat=largest[1],
                            window_ladder=ladder, per_window_minmax=tuple(rows),
                            burn_in=trace.burn_in, window_starts_max_t=starts_used)


@dataclass(frozen=True)
class LyapunovEstimate:
    lambda_hat: float
    per_omega: tuple[tuple[tuple[float, ...], float, float], ...]  # (phase, horizon, estimate)
    dispersion: float


def estimate_lyapunov_random(field: Coefficients, frequencies, grid: Grid1D,
                             cfg: StepperConfig, n_omega: int, horizon: float,
                             seed: int, burn_in: float = 50.0,
                             u0: np.ndarray | None = None) -> LyapunovEstimate:
    """Monte Carlo growth-rate estimate over Haar-sampled driver phases.

    Per-phase estimates are means of generator-scale step rates after burn-in;
    the sample mean is reduced in index order so parallel execution cannot
    change the result.  Dispersion is the max pairwise gap, which for an
    ergodic driver should shrink like 1/horizon.
    """
    if n_omega < 2:
        raise ConfigurationError(f"need at least 2 phase samples, got {n_omega}")
    frequencies = np.atleast_1d(np.asarray(frequencies, dtype=float))
    if u0 is None:
        u0 = np.ones(grid.n_nodes)
        if field.bc == "dirichlet":
            u0[0] = u0[-1] = 0.0
    per = []
    for i in range(n_omega):
        phase = sample_phase(seed, frequencies.size, index=i)
        driver = TorusFlow(frequencies, phase)
        trace = track_principal(u0, field, driver, grid, cfg, horizon, burn_in)
        lam = float(trace.post_burn_rates().mean())
        per.append((tuple(float(p) for p in phase), float(horizon), lam))
    estimates = np.array([p[2] for p in per])
    return LyapunovEstimate(lambda_hat=float(estimates.mean()),
                            per_omega=tuple(per),
                            dispersion=float(estimates.max() - estimates.min()))


@dataclass(frozen=True)
class SeparationEstimate:
    lambda1: float
    lambda2: float
    mu: float
    dispersion: float
    reliable: bool
    burn_in_sufficient: bool


def estimate_separation(field: Coefficients, driver: TorusFlow, grid: Grid1D,
                        cfg: StepperConfig, horizon: float,
                        burn_in: float | None = None) -> SeparationEstimate:
    """Top two growth rates by two-vector iteration with re-orthogonalization.

    After every step the leading vector is normalized and the second is
    orthogonalized against it in the trapezoid inner product; both stretch
    factors convert to generator-scale rates and are averaged after burn-in.
    The gap mu = lambda1 - lambda2 is flagged unreliable when it is within
    10x the block-to-block scatter of its own estimate.
    """
    if burn_in is None:
        burn_in = horizon / 10.0
    if horizon < 10.0 * burn_in * (1.0 - 1e-12):
        raise ConfigurationError(
            f"horizon {horizon} must be at least 10x burn-in {burn_in}")
    kernel = CocycleStepper(field, grid, cfg, driver)
    n_steps = steps_between(0.0, horizon, cfg.dt)
    burn_steps = steps_between(0.0, burn_in, cfg.dt)

    u = kernel.take_dof(np.ones(grid.n_nodes))
    v = kernel.take_dof(np.sin(2.0 * np.pi * grid.nodes / grid.length))
    u /= kernel.dof_norm(u)
    v -= kernel.dof_inner(v, u) * u
    v /= kernel.dof_norm(v)

    pair = np.column_stack([u, v])
    rate1 = np.empty(n_steps)
    rate2 = np.empty(n_steps)
    for j in range(n_steps):
        pair, _ = kernel.advance_lattice(pair, j)
        a, b = pair[:, 0], pair[:, 1]
        r1 = kernel.dof_norm(a)
        a = a / r1
        b = b - kernel.dof_inner(b, a) * a
        r2 = kernel.dof_norm(b)
        if r2 < 1e-250 or not np.isfinite(r2):
            raise RankLossError(f"second vector collapsed at step {j}")
        b = b / r2
        rate1[j] = r1
        rate2[j] = r2
        pair = np.column_stack([a, b])

    rho1 = step_rate_from_stretch(rate1[burn_steps:], cfg.dt, cfg.scheme)
    rho2 = step_rate_from_stretch(rate2[burn_steps:], cfg.dt, cfg.scheme)
    lam1 = float(rho1.mean())
    lam2 = float(rho2.mean())
    mu = lam1 - lam2
    gaps = rho1 - rho2
    blocks = np.array_split(gaps, 4)
    block_means = np.array([b.mean() for b in blocks])
    dispersion = float(block_means.max() - block_means.min())
    reliable = bool(mu >= 10.0 * dispersion)
    burn_ok = bool(mu > 0 and burn_in >= 10.0 / mu)
    return SeparationEstimate(lambda1=lam1, lambda2=lam2, mu=float(mu),
                              dispersion=dispersion, reliable=reliable,
                              burn_in_sufficient=burn_ok)


def _check_periodicity(field: Coefficients, driver: TorusFlow, period: float) -> None:
    signals = [s for s, _ in field.reaction_terms]
    signals += list(field.robin_left) + list(field.robin_right)
    for sig in signals:
        for h in sig.harmonics:
            cycles = period * driver.frequencies[h.angle - 1] * h.multiple
            if abs(cycles - round(cycles)) > 1e-9 * max(1.0, abs(cycles)):
                raise ConfigurationError(
                    f"coefficients are not {period}-periodic: harmonic on angle "
                    f"{h.angle} completes {cycles} cycles")


def floquet_oracle(field: Coefficients, driver: TorusFlow, grid: Grid1D,
                   cfg: StepperConfig, period: float,
                   max_iter: int = 100_000) -> float:
    """Growth rate of the dominant one-period direction, by power iteration.

    Applies the period map through the stepper (never materializing it),
    renormalizing each step, until the accumulated one-period log growth is
    stable to 1e-12 in relative terms; then averages the Rayleigh rate over
    one period along the converged direction.  Reporting on the generator
    scale keeps the value comparable with the eigensolver and the trace-based
    interval estimates at the same discretization: an autonomous problem
    reproduces its principal eigenvalue to solver precision, and a periodic
    one reproduces the full-period window average of the tracked trace.
    """
    _check_periodicity(field, driver, period)
    m = steps_between(0.0, period, cfg.dt)
    if m < 1:
        raise ConfigurationError(f"period {period} shorter than one step")
    kernel = CocycleStepper(field, grid, cfg, driver)
    u0 = np.ones(grid.n_nodes)
    if field.bc == "dirichlet":
        u0[0] = u0[-1] = 0.0
    x = kernel.take_dof(u0)
    x /= kernel.dof_norm(x)

    growth_prev = None
    for _ in range(max_iter):
        growth = 0.0
        for j in range(m):
            x, _ = kernel.advance_lattice(x, j)
            r = kernel.dof_norm(x)
            x /= r
            growth += np.log(r)
        if growth_prev is not None and abs(growth - growth_prev) <= 1e-12 * max(1.0, abs(growth)):
            break
        growth_prev = growth
    else:
        raise OracleFailureError(
            f"one-period power iteration did not converge in {max_iter} sweeps")

    rates = np.empty(m)
    for j in range(m):
        x, bands = kernel.advance_lattice(x, j)
        r = kernel.dof_norm(x)
        x /= r
        sub, diag, sup = bands
        ax = diag * x
        ax[1:] += sub[1:] * x[:-1]
        ax[:-1] += sup[:-1] * x[1:]
        rates[j] = kernel.dof_inner(ax, x)
    return float(rates.mean())


def trace_to_rows(trace: PrincipalTrace):
    """(t, kappa, log_norm_increment) rows for CSV export."""
    for k in range(trace.n_steps):
        yield trace.times[k], trace.rayleigh[k], trace.log_increments[k]
