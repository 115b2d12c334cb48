"""Canonical coefficient families used by the experiment scripts and tests.

Periods are chosen to sit exactly on the step lattice: the separable family
oscillates as sin(2*pi*t) with dt = 0.01 (100 steps per period), while the
sin(t)*cos(x) family keeps its natural 2*pi period by using dt = 2*pi/628.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coefficients import (DIRICHLET, NEUMANN, ROBIN, Coefficients, Harmonic,
                           Signal, TorusFlow, constant_signal)
from .grid import Grid1D, build_grid

PI = np.pi
DT_SINT = 2.0 * PI / 628.0  # step-aligned 2*pi period


@dataclass(frozen=True)
class Family:
    name: str
    field: Coefficients
    frequencies: tuple[float, ...]
    dt: float
    period: float | None   # None for quasiperiodic/random drivers
    separable: bool

    def driver(self, phase=None) -> TorusFlow:
        k = len(self.frequencies)
        return TorusFlow(np.array(self.frequencies),
                         np.zeros(k) if phase is None else np.asarray(phase, dtype=float))


def _ones(grid: Grid1D) -> np.ndarray:
    return np.ones(grid.n_nodes)


def dirichlet_laplacian(grid: Grid1D) -> Coefficients:
    """Pure second-derivative operator with Dirichlet walls."""
    return Coefficients(diffusion=_ones(grid), advection=np.zeros(grid.n_nodes),
                        bc=DIRICHLET)


def neumann_constant(grid: Grid1D, c0: float) -> Coefficients:
    """Insulated endpoints and a constant zero-order term."""
    return Coefficients(diffusion=_ones(grid), advection=np.zeros(grid.n_nodes),
                        bc=NEUMANN,
                        reaction_terms=((constant_signal(c0), _ones(grid)),))


def sine_of_t(amplitude: float = 1.0) -> Signal:
    """sin(t) realized on angle 1 with frequency 1/(2*pi)."""
    return Signal(harmonics=(Harmonic(angle=1, sin_amp=amplitude),))


def sine_unit_period(amplitude: float = 1.0, angle: int = 1) -> Signal:
    """sin(2*pi*t) on the given angle with unit frequency."""
    return Signal(harmonics=(Harmonic(angle=angle, sin_amp=amplitude),))


def separable_periodic(grid: Grid1D) -> Family:
    """c(t,x) = 0.5*cos(x) + sin(2*pi*t), Dirichlet: the equality regime."""
    field = Coefficients(
        diffusion=_ones(grid), advection=np.zeros(grid.n_nodes), bc=DIRICHLET,
        reaction_terms=(
            (constant_signal(1.0), 0.5 * np.cos(grid.nodes)),
            (sine_unit_period(1.0), _ones(grid)),
        ))
    return Family("separable-periodic", field, (1.0,), 0.01, 1.0, True)


def nonseparable_periodic(grid: Grid1D, beta: float) -> Family:
    """c(t,x) = beta*sin(t)*cos(x), Dirichlet: the strict-inequality regime."""
    field = Coefficients(
        diffusion=_ones(grid), advection=np.zeros(grid.n_nodes), bc=DIRICHLET,
        reaction_terms=((sine_of_t(beta), np.cos(grid.nodes)),))
    return Family(f"nonseparable-periodic-beta{beta:g}", field,
                  (1.0 / (2.0 * PI),), DT_SINT, 2.0 * PI, beta == 0.0)


def quasiperiodic_separable(grid: Grid1D) -> Family:
    """c(t,x) = 0.5*cos(x) + 0.8*sin(2*pi*t) + 0.5*cos(2*pi*sqrt(2)*t)."""
    field = Coefficients(
        diffusion=_ones(grid), advection=np.zeros(grid.n_nodes), bc=DIRICHLET,
        reaction_terms=(
            (constant_signal(1.0), 0.5 * np.cos(grid.nodes)),
            (Signal(harmonics=(Harmonic(angle=1, sin_amp=0.8),)), _ones(grid)),
            (Signal(harmonics=(Harmonic(angle=2, cos_amp=0.5),)), _ones(grid)),
        ))
    return Family("quasiperiodic-separable", field, (1.0, np.sqrt(2.0)), 0.01,
                  None, True)


def random_nonseparable(grid: Grid1D) -> Family:
    """Torus-driven, spatially coupled on both angles: strict inequality a.s."""
    field = Coefficients(
        diffusion=_ones(grid), advection=np.zeros(grid.n_nodes), bc=DIRICHLET,
        reaction_terms=(
            (Signal(harmonics=(Harmonic(angle=1, sin_amp=1.0),)), np.cos(grid.nodes)),
            (Signal(harmonics=(Harmonic(angle=2, cos_amp=0.6),)),
             np.sin(PI * grid.nodes / grid.length)),
        ))
    return Family("random-nonseparable", field, (1.0 / (2.0 * PI), np.sqrt(2.0) / (2.0 * PI)),
                  0.01, None, False)


def random_separable(grid: Grid1D) -> Family:
    """c(t,x) = 0.5*cos(x) + sin(2*pi*(omega + t)): equality a.s."""
    field = Coefficients(
        diffusion=_ones(grid), advection=np.zeros(grid.n_nodes), bc=DIRICHLET,
        reaction_terms=(
            (constant_signal(1.0), 0.5 * np.cos(grid.nodes)),
            (sine_unit_period(1.0), _ones(grid)),
        ))
    return Family("random-separable", field, (1.0,), 0.01, 1.0, True)


def robin_modulated(grid: Grid1D, amplitude: float = 1.0) -> Family:
    """Zero reaction, Robin coefficient d(t) = 1 + amplitude*sin(t) at both walls."""
    d_sig = Signal(constant=1.0, harmonics=(Harmonic(angle=1, sin_amp=amplitude),))
    field = Coefficients(
        diffusion=_ones(grid), advection=np.zeros(grid.n_nodes), bc=ROBIN,
        b_left=-1.0, b_right=1.0,
        robin_left=(d_sig,), robin_right=(d_sig,))
    return Family("robin-modulated", field, (1.0 / (2.0 * PI),), DT_SINT,
                  2.0 * PI, amplitude == 0.0)


def suite(n_interior: int = 63, length: float = PI) -> dict[str, Family]:
    """The comparison suite: equality cases, strict cases, and a boundary-driven case."""
    grid = build_grid(length, n_interior)
    fams = [
        separable_periodic(grid),
        nonseparable_periodic(grid, 0.5),
        nonseparable_periodic(grid, 1.0),
        quasiperiodic_separable(grid),
        random_separable(grid),
        random_nonseparable(grid),
        robin_modulated(grid),
    ]
    return {f.name: f for f in fams}
