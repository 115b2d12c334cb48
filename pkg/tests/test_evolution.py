import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from paraspec import (Coefficients, EvolutionState, StepperConfig, TorusFlow,
                      adjoint_step, build_grid, constant_signal, evolve,
                      inner_product, principal_eigenpair, assemble, step)
from paraspec.errors import (AlignmentError, ConfigurationError,
                             PositivityError)


def laplacian_field(grid, bc="dirichlet", c0=None, advection=0.0):
    terms = ()
    if c0 is not None:
        terms = ((constant_signal(c0), np.ones(grid.n_nodes)),)
    return Coefficients(diffusion=np.ones(grid.n_nodes),
                        advection=advection * np.ones(grid.n_nodes),
                        bc=bc, reaction_terms=terms)


@pytest.fixture
def drv():
    return TorusFlow([1.0], [0.0])


def dirichlet_start(grid, rng=None):
    u = np.zeros(grid.n_nodes)
    if rng is None:
        u[1:-1] = 1.0
    else:
        u[1:-1] = rng.random(grid.n_interior)
    return u


def test_config_validation():
    with pytest.raises(ConfigurationError):
        StepperConfig(scheme="leapfrog")
    with pytest.raises(ConfigurationError):
        StepperConfig(dt=-0.1)
    with pytest.raises(ConfigurationError):
        StepperConfig(scheme="crank-nicolson", positivity_required=True)


def test_scalar_update_on_constant_mode(drv):
    # constant reaction c0=1 with insulated walls: the all-ones direction
    # evolves by the scalar backward-Euler update 1/(1 - dt)
    grid = build_grid(1.0, 3)
    field = laplacian_field(grid, bc="neumann", c0=1.0)
    cfg = StepperConfig(dt=0.1)
    state = EvolutionState(t=0.0, u=np.ones(grid.n_nodes), driver=drv)
    out = step(state, field, grid, cfg)
    assert np.allclose(out.u, 1 / 0.9, rtol=1e-14)
    assert out.t == pytest.approx(0.1)


def test_heat_step_is_dissipative(grid_pi3, drv):
    field = laplacian_field(grid_pi3)
    cfg = StepperConfig(dt=0.05)
    u0 = dirichlet_start(grid_pi3, np.random.default_rng(0))
    out = step(EvolutionState(0.0, u0, drv), field, grid_pi3, cfg)
    n0 = np.sqrt(inner_product(u0, u0, grid_pi3))
    n1 = np.sqrt(inner_product(out.u, out.u, grid_pi3))
    assert n1 <= n0


def test_one_step_strict_interior_positivity(drv):
    # oracle: the inverse of an irreducible M-matrix is entrywise positive
    grid = build_grid(np.pi, 10)
    field = laplacian_field(grid)
    cfg = StepperConfig(dt=0.01, positivity_required=True)
    op = assemble(field, drv, cfg.dt, grid)
    n = op.n_dof
    dense = np.diag(1 - cfg.dt * op.diag)
    for i in range(1, n):
        dense[i, i - 1] = -cfg.dt * op.sub[i]
        dense[i - 1, i] = -cfg.dt * op.sup[i - 1]
    inverse = np.linalg.inv(dense)
    assert inverse.min() > 0

    u0 = np.zeros(grid.n_nodes)
    u0[3] = 1.0  # nonnegative, nonzero, mostly zeros
    out = step(EvolutionState(0.0, u0, drv), field, grid, cfg)
    assert np.all(out.u[1:-1] > 0)


def test_order_preservation(drv):
    grid = build_grid(np.pi, 15)
    field = laplacian_field(grid)
    cfg = StepperConfig(dt=0.01, positivity_required=True)
    rng = np.random.default_rng(42)
    for _ in range(100):
        u = dirichlet_start(grid, rng)
        v = u + 0.5 * rng.random(grid.n_nodes) * (grid.nodes > 0) * (grid.nodes < np.pi)
        su = step(EvolutionState(0.0, u, drv), field, grid, cfg)
        sv = step(EvolutionState(0.0, v, drv), field, grid, cfg)
        assert np.all(su.u <= sv.u + 1e-15)


@settings(max_examples=30, deadline=None)
@given(u=arrays(np.float64, 9, elements=st.floats(-5, 5)),
       v=arrays(np.float64, 9, elements=st.floats(-5, 5)),
       a=st.floats(-2, 2), b=st.floats(-2, 2))
def test_step_linearity(u, v, a, b):
    grid = build_grid(np.pi, 7)
    field = laplacian_field(grid, advection=0.7)
    cfg = StepperConfig(dt=0.02)
    drv = TorusFlow([1.0], [0.0])
    s = lambda w: step(EvolutionState(0.0, w, drv), field, grid, cfg).u
    lhs = s(a * u + b * v)
    rhs = a * s(u) + b * s(v)
    scale = max(1.0, np.max(np.abs(lhs)))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


def test_evolve_zero_interval_is_identity(grid_pi3, drv):
    field = laplacian_field(grid_pi3)
    cfg = StepperConfig(dt=0.01)
    u0 = dirichlet_start(grid_pi3)
    out = evolve(u0, 0.0, 0.0, field, drv, grid_pi3, cfg)
    assert np.array_equal(out, u0)


def test_evolve_cocycle_bitwise(drv):
    grid = build_grid(np.pi, 15)
    field = Coefficients(diffusion=np.ones(grid.n_nodes),
                         advection=np.zeros(grid.n_nodes), bc="dirichlet",
                         reaction_terms=((constant_signal(1.0), 0.5 * np.cos(grid.nodes)),))
    cfg = StepperConfig(dt=0.01)
    rng = np.random.default_rng(7)
    u0 = dirichlet_start(grid, rng)
    whole = evolve(u0, 0.0, 2.0, field, drv, grid, cfg)
    half = evolve(evolve(u0, 0.0, 1.0, field, drv, grid, cfg),
                  1.0, 2.0, field, drv, grid, cfg)
    assert np.array_equal(whole, half)


def test_evolve_misaligned_interval(grid_pi3, drv):
    field = laplacian_field(grid_pi3)
    cfg = StepperConfig(dt=0.01)
    with pytest.raises(AlignmentError):
        evolve(dirichlet_start(grid_pi3), 0.0, 0.505001, field, drv, grid_pi3, cfg)


def test_evolve_constant_mode_exponential(drv):
    # oracle: scalar exponential on the all-ones mode, O(dt) relative error
    grid = build_grid(1.0, 5)
    c0, t_end = 0.8, 2.0
    field = laplacian_field(grid, bc="neumann", c0=c0)
    cfg = StepperConfig(dt=0.01)
    out = evolve(np.ones(grid.n_nodes), 0.0, t_end, field, drv, grid, cfg)
    exact = np.exp(c0 * t_end)
    rel = np.max(np.abs(out - exact)) / exact
    assert rel <= 1.5 * cfg.dt * c0**2 * t_end / 2


def test_positivity_loss_raises(drv):
    grid = build_grid(np.pi, 5)
    field = laplacian_field(grid, c0=50.0)
    cfg = StepperConfig(dt=10.0, positivity_required=True)
    with pytest.raises(PositivityError):
        step(EvolutionState(0.0, dirichlet_start(grid), drv), field, grid, cfg)


def test_adjoint_equals_step_for_symmetric_operator(grid_pi3, drv):
    field = laplacian_field(grid_pi3)
    cfg = StepperConfig(dt=0.02)
    u = dirichlet_start(grid_pi3, np.random.default_rng(3))
    forward = step(EvolutionState(0.0, u, drv), field, grid_pi3, cfg)
    dual = adjoint_step(EvolutionState(0.0, u, drv), field, grid_pi3, cfg)
    assert np.allclose(forward.u, dual.u, rtol=1e-13, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(u=arrays(np.float64, 9, elements=st.floats(-5, 5)),
       v=arrays(np.float64, 9, elements=st.floats(-5, 5)))
def test_adjoint_duality(u, v):
    # <B u, v> = <u, B* v> in the trapezoid inner product, Robin case included
    grid = build_grid(np.pi, 7)
    d_sig = constant_signal(0.8)
    field = Coefficients(diffusion=1.0 + 0.2 * np.cos(grid.nodes),
                         advection=0.5 * np.ones(grid.n_nodes), bc="robin",
                         robin_left=(d_sig,), robin_right=(d_sig,))
    cfg = StepperConfig(dt=0.02)
    drv = TorusFlow([1.0], [0.0])
    bu = step(EvolutionState(0.0, u, drv), field, grid, cfg).u
    bsv = adjoint_step(EvolutionState(0.0, v, drv), field, grid, cfg).u
    lhs = inner_product(bu, v, grid)
    rhs = inner_product(u, bsv, grid)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs), abs(rhs))


def test_adjoint_composition_reverses_order():
    # oracle: dense matrices of three steps at n=8, product transposed;
    # time-dependent reaction so the three step maps genuinely differ
    from paraspec import Harmonic, Signal

    grid = build_grid(np.pi, 8)
    field = Coefficients(diffusion=np.ones(grid.n_nodes),
                         advection=np.zeros(grid.n_nodes), bc="dirichlet",
                         reaction_terms=((Signal(harmonics=(Harmonic(angle=1, sin_amp=1.0),)),
                                          np.cos(grid.nodes)),))
    cfg = StepperConfig(dt=0.05)
    drv = TorusFlow([0.3], [0.1])
    n = grid.n_interior

    def dense_step(driver):
        cols = []
        for i in range(n):
            e = np.zeros(grid.n_nodes)
            e[1 + i] = 1.0
            cols.append(step(EvolutionState(0.0, e, driver), field, grid, cfg).u[1:-1])
        return np.column_stack(cols)

    d0 = drv
    d1 = drv.advance(cfg.dt)
    d2 = drv.advance(2 * cfg.dt)
    b0, b1, b2 = dense_step(d0), dense_step(d1), dense_step(d2)
    product = b2 @ b1 @ b0

    # adjoint composition applied in reverse order: W^-1 (B2 B1 B0)^T W
    w_vec = grid.quad_weights()[1:-1]
    rng = np.random.default_rng(5)
    v = np.zeros(grid.n_nodes)
    v[1:-1] = rng.random(n)
    z = adjoint_step(EvolutionState(0.0, v, d2), field, grid, cfg)
    z = adjoint_step(EvolutionState(0.0, z.u, d1), field, grid, cfg)
    z = adjoint_step(EvolutionState(0.0, z.u, d0), field, grid, cfg)
    expected = (product.T @ (w_vec * v[1:-1])) / w_vec
    assert np.allclose(z.u[1:-1], expected, rtol=1e-11, atol=1e-14)


def test_adjoint_direction_is_invariant_functional(drv):
    # autonomous case: pairing any evolved field against the adjoint principal
    # direction grows by the same scalar factor every step
    grid = build_grid(np.pi, 12)
    field = laplacian_field(grid, advection=1.0)
    cfg = StepperConfig(dt=0.02)
    op = assemble(field, drv, cfg.dt, grid)
    n = op.n_dof
    dense = np.zeros((n, n))
    dense[np.arange(n), np.arange(n)] = op.diag
    dense[np.arange(1, n), np.arange(n - 1)] = op.sub[1:]
    dense[np.arange(n - 1), np.arange(1, n)] = op.sup[:-1]
    w_vec = grid.quad_weights()[1:-1]
    # adjoint of A in the weighted product: W^-1 A^T W
    adj = np.diag(1 / w_vec) @ dense.T @ np.diag(w_vec)
    eigvals, eigvecs = np.linalg.eig(adj)
    w_star = np.real(eigvecs[:, np.argmax(np.real(eigvals))])
    w_star *= np.sign(w_star.sum())
    assert np.all(w_star > 0)  # dual direction is positive a.e.

    w_star_full = np.zeros(grid.n_nodes)
    w_star_full[1:-1] = w_star
    rng = np.random.default_rng(11)
    ratios = []
    for _ in range(5):
        u = dirichlet_start(grid, rng)
        su = step(EvolutionState(0.0, u, drv), field, grid, cfg)
        ratios.append(inner_product(su.u, w_star_full, grid)
                      / inner_product(u, w_star_full, grid))
    assert np.max(ratios) - np.min(ratios) <= 1e-10 * max(ratios)


def test_cn_and_ie_growth_rates_consistent(drv):
    # autonomous decay rate vs the eigensolver: backward Euler error halves
    # with dt, Crank-Nicolson error quarters
    grid = build_grid(np.pi, 15)
    field = laplacian_field(grid)
    lam, _ = principal_eigenpair(assemble(field, drv, 0.0, grid))
    u0 = np.zeros(grid.n_nodes)
    u0[1:-1] = np.sin(grid.nodes[1:-1])

    def raw_rate(scheme, dt, t_end=40.0):
        cfg = StepperConfig(scheme=scheme, dt=dt)
        # split to avoid under/overflow: measure over the last 10 units
        mid = evolve(u0, 0.0, t_end - 10.0, field, drv, grid, cfg)
        mid /= np.sqrt(inner_product(mid, mid, grid))
        out = evolve(mid, t_end - 10.0, t_end, field, drv, grid, cfg)
        return np.log(inner_product(out, out, grid)) / 2 / 10.0

    for scheme, order_factor in (("implicit-euler", 2.0), ("crank-nicolson", 4.0)):
        e1 = abs(raw_rate(scheme, 0.02) - lam)
        e2 = abs(raw_rate(scheme, 0.01) - lam)
        assert e1 / e2 == pytest.approx(order_factor, rel=0.2)
