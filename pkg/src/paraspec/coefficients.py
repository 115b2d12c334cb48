"""Problem coefficients driven by a Kronecker flow on the torus.

The zero-order coefficient is a finite sum of separable terms

    c(t, x) = sum_k  f_k(angles(t)) * g_k(x),

where each ``f_k`` is a trigonometric polynomial in the torus angles and each
``g_k`` is a sampled spatial profile.  Robin boundary coefficients at the two
endpoints are trigonometric polynomials of time alone.  The driver advances
angles linearly mod 1, which is ergodic with respect to the uniform (Haar)
measure whenever the frequencies are rationally independent; rational
independence is the caller's responsibility and is not checked.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, WindowError
from .grid import Grid1D

BOUNDARY_FLUX_FLOOR = 1e-12  # smallest admissible |b * outward normal|
ELLIPTICITY_FLOOR = 1e-12    # smallest admissible diffusion coefficient

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
ROBIN = "robin"
BC_KINDS = (DIRICHLET, NEUMANN, ROBIN)


@dataclass(frozen=True)
class Harmonic:
    """One term amp_c*cos(2*pi*m*theta_j) + amp_s*sin(2*pi*m*theta_j)."""

    angle: int          # 1-based torus angle index
    multiple: int = 1
    cos_amp: float = 0.0
    sin_amp: float = 0.0

    def __post_init__(self):
        if self.angle < 1:
            raise ConfigurationError(f"angle index must be >= 1, got {self.angle}")
        if self.multiple < 1:
            raise ConfigurationError(f"harmonic multiple must be >= 1, got {self.multiple}")
        if not (np.isfinite(self.cos_amp) and np.isfinite(self.sin_amp)):
            raise ConfigurationError("harmonic amplitudes must be finite")


@dataclass(frozen=True)
class Signal:
    """Trigonometric polynomial in the torus angles; bounded by constant + sum |amps|."""

    constant: float = 0.0
    harmonics: tuple[Harmonic, ...] = ()

    def max_angle(self) -> int:
        return max((h.angle for h in self.harmonics), default=0)

    def bound(self) -> float:
        return abs(self.constant) + sum(abs(h.cos_amp) + abs(h.sin_amp) for h in self.harmonics)

    def mean(self) -> float:
        """Haar mean: every nontrivial harmonic integrates to zero."""
        return self.constant

    def eval(self, angles: np.ndarray) -> float | np.ndarray:
        """Evaluate at torus angles, shape (k,) for one time or (m, k) for a path."""
        angles = np.asarray(angles, dtype=float)
        out = np.full(angles.shape[:-1], self.constant)
        for h in self.harmonics:
            phase = 2.0 * np.pi * h.multiple * angles[..., h.angle - 1]
            out = out + h.cos_amp * np.cos(phase) + h.sin_amp * np.sin(phase)
        return out if out.ndim else float(out)


def constant_signal(value: float) -> Signal:
    return Signal(constant=float(value))


@dataclass(frozen=True)
class TorusFlow:
    """Kronecker flow angles(t) = (phase + t * frequencies) mod 1 on [0,1)^k."""

    frequencies: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        f = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        p = np.mod(np.atleast_1d(np.asarray(self.phase, dtype=float)), 1.0)
        if f.ndim != 1 or f.size < 1:
            raise ConfigurationError("frequencies must be a non-empty 1-d sequence")
        if p.shape != f.shape:
            raise ConfigurationError(
                f"phase has shape {p.shape}, frequencies {f.shape}")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "phase", p)

    @property
    def k(self) -> int:
        return self.frequencies.size

    def angles(self, t: float) -> np.ndarray:
        return np.mod(self.phase + t * self.frequencies, 1.0)

    def angles_path(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        return np.mod(self.phase[None, :] + times[:, None] * self.frequencies[None, :], 1.0)

    def advance(self, s: float) -> "TorusFlow":
        """Time-translate of the driver: the returned flow starts at angles(s)."""
        return replace(self, phase=self.angles(s))


def sample_phase(seed: int, k: int, index: int = 0) -> np.ndarray:
    """Haar-uniform torus point, reproducible from (seed, index).

    Splitting rule: stream = PCG64(SeedSequence(seed, spawn_key=(index,))).
    Parallel samplers with distinct indices never share a stream.
    """
    if k < 1:
        raise ConfigurationError(f"torus dimension must be >= 1, got {k}")
    ss = np.random.SeedSequence(seed, spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(ss)).random(k)


@dataclass(frozen=True)
class Coefficients:
    """Coefficient bundle of the parabolic problem on a fixed grid.

    diffusion/advection: per-node samples of the second/first order coefficients.
    reaction_terms: separable terms (Signal, per-node profile) summing to c(t, x).
    robin_left/right: Signals summing to the Robin coefficient at each endpoint.
    b_left/b_right: boundary flux coefficients; the outward normal is -1 at x=0
    and +1 at x=length, and b times the normal must be positive.
    """

    diffusion: np.ndarray
    advection: np.ndarray
    bc: str
    b_left: float = -1.0
    b_right: float = 1.0
    reaction_terms: tuple[tuple[Signal, np.ndarray], ...] = ()
    robin_left: tuple[Signal, ...] = ()
    robin_right: tuple[Signal, ...] = ()

    def __post_init__(self):
        if self.bc not in BC_KINDS:
            raise ConfigurationError(f"unknown boundary condition {self.bc!r}")
        a = np.asarray(self.diffusion, dtype=float)
        if a.min() < ELLIPTICITY_FLOOR:
            raise ConfigurationError(
                f"diffusion must stay above {ELLIPTICITY_FLOOR}, min is {a.min()}")
        if self.bc in (NEUMANN, ROBIN):
            if -self.b_left < BOUNDARY_FLUX_FLOOR or self.b_right < BOUNDARY_FLUX_FLOOR:
                raise ConfigurationError(
                    "boundary flux must satisfy b*normal > 0 at both endpoints "
                    f"(b_left={self.b_left}, b_right={self.b_right})")
        if self.bc in (DIRICHLET, NEUMANN) and (self.robin_left or self.robin_right):
            raise ConfigurationError(f"{self.bc} problems carry no Robin coefficient")

    def max_angle(self) -> int:
        sigs = [s for s, _ in self.reaction_terms]
        sigs += list(self.robin_left) + list(self.robin_right)
        return max((s.max_angle() for s in sigs), default=0)

    def check_driver(self, driver: TorusFlow) -> None:
        if self.max_angle() > driver.k:
            raise ConfigurationError(
                f"coefficients reference angle {self.max_angle()} "
                f"but the driver has only {driver.k}")

    def reaction_bound(self) -> float:
        """Uniform bound on |c(t, x)| over all times and nodes."""
        return sum(s.bound() * np.abs(np.asarray(g, dtype=float)).max()
                   for s, g in self.reaction_terms)

    def is_separable(self) -> bool:
        """Syntactic test for c(t,x) = c1(x) + c2(t) with time-constant Robin data.

        Each reaction term must either be time-constant (no harmonics) or carry a
        spatially constant profile; all Robin signals must be time-constant.
        Semantic equivalences (several terms cancelling in x) are not detected.
        """
        for sig, prof in self.reaction_terms:
            prof = np.asarray(prof, dtype=float)
            spatially_const = prof.size == 0 or (prof.max() == prof.min())
            if sig.harmonics and not spatially_const:
                return False
        for sig in self.robin_left + self.robin_right:
            if sig.harmonics:
                return False
        return True


def reaction_at(field_: Coefficients, driver: TorusFlow, t: float) -> np.ndarray:
    """Per-node values of c(t, x) along the driven path."""
    field_.check_driver(driver)
    angles = driver.angles(t)
    n = len(field_.diffusion)
    out = np.zeros(n)
    for sig, prof in field_.reaction_terms:
        out += sig.eval(angles) * np.asarray(prof, dtype=float)
    return out


def robin_at(field_: Coefficients, driver: TorusFlow, t: float) -> tuple[float, float]:
    """Robin coefficient (left, right) at time t; zero for Dirichlet/Neumann."""
    field_.check_driver(driver)
    angles = driver.angles(t)
    left = sum(s.eval(angles) for s in field_.robin_left)
    right = sum(s.eval(angles) for s in field_.robin_right)
    return float(left), float(right)


def _signal_window_average(sig: Signal, driver: TorusFlow, span: tuple[float, float],
                           panels: int) -> float:
    lo, hi = span
    times = np.linspace(lo, hi, panels + 1)
    values = sig.eval(driver.angles_path(times))
    return float(np.trapezoid(values, times) / (hi - lo))


@dataclass(frozen=True)
class AveragedCoefficients:
    """Time- or ensemble-averaged data: a reaction profile and Robin constants."""

    reaction: np.ndarray
    robin_left: float
    robin_right: float


def window_average(field_: Coefficients, driver: TorusFlow, start: float, stop: float,
                   panels: int = 256) -> AveragedCoefficients:
    """Trapezoid average of the coefficients over [start, stop].

    The quadrature factors through the separable terms, so the cost is one
    scalar quadrature per Signal regardless of grid size.  Error is
    O(((stop-start)/panels)^2) for the smooth signals in scope.
    """
    if stop <= start:
        raise WindowError(f"need stop > start, got [{start}, {stop}]")
    if panels < 2:
        raise ConfigurationError(f"need at least 2 quadrature panels, got {panels}")
    field_.check_driver(driver)
    span = (float(start), float(stop))
    n = len(field_.diffusion)
    c_bar = np.zeros(n)
    for sig, prof in field_.reaction_terms:
        c_bar += _signal_window_average(sig, driver, span, panels) * np.asarray(prof, dtype=float)
    d_left = sum(_signal_window_average(s, driver, span, panels) for s in field_.robin_left)
    d_right = sum(_signal_window_average(s, driver, span, panels) for s in field_.robin_right)
    return AveragedCoefficients(reaction=c_bar, robin_left=float(d_left),
                                robin_right=float(d_right))


def ensemble_average(field_: Coefficients) -> AveragedCoefficients:
    """Exact Haar average: every nontrivial harmonic drops, constants remain."""
    n = len(field_.diffusion)
    c_hat = np.zeros(n)
    for sig, prof in field_.reaction_terms:
        c_hat += sig.mean() * np.asarray(prof, dtype=float)
    d_left = sum(s.mean() for s in field_.robin_left)
    d_right = sum(s.mean() for s in field_.robin_right)
    return AveragedCoefficients(reaction=c_hat, robin_left=float(d_left),
                                robin_right=float(d_right))


def averaged_field(field_: Coefficients, avg: AveragedCoefficients) -> Coefficients:
    """Autonomous coefficient bundle built from averaged data."""
    robin_l = (constant_signal(avg.robin_left),) if field_.bc == ROBIN else ()
    robin_r = (constant_signal(avg.robin_right),) if field_.bc == ROBIN else ()
    return Coefficients(
        diffusion=field_.diffusion,
        advection=field_.advection,
        bc=field_.bc,
        b_left=field_.b_left,
        b_right=field_.b_right,
        reaction_terms=((constant_signal(1.0), np.asarray(avg.reaction, dtype=float)),),
        robin_left=robin_l,
        robin_right=robin_r,
    )


def profile(expr_values, grid: Grid1D) -> np.ndarray:
    """Per-node samples from a callable of x, a scalar, or an array."""
    if callable(expr_values):
        return np.asarray(expr_values(grid.nodes), dtype=float) * np.ones(grid.n_nodes)
    arr = np.asarray(expr_values, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.n_nodes, float(arr))
    if arr.shape != (grid.n_nodes,):
        raise ConfigurationError(
            f"profile has {arr.shape[0]} samples, grid has {grid.n_nodes} nodes")
    return arr
