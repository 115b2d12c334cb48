"""Tridiagonal elliptic operator with boundary conditions folded in.

Interior stencil for  A u = diffusion * u'' + advection * u' + c(t,x) u:

  - diffusion: second-order central differences,
  - advection: first-order one-sided differences, sided so that the
    off-diagonal contribution is nonnegative (forward difference where the
    advection coefficient is >= 0, backward otherwise).  This keeps every
    off-diagonal entry of A nonnegative at any grid spacing, which is what the
    order-preservation and Perron-positivity guarantees of the time stepper
    rest on.

Neumann/Robin rows eliminate a second-order ghost node: with outward normal
nu = -1 at x=0, the condition b*u' + d(t)*u = 0 gives the ghost value
u_{-1} = u_1 + (2h*d/b_left)*u_0, folded into row 0 (mirrored at x=L).  The
advection term at the boundary substitutes u' = -d*u/b from the same
condition.  Diagonals are assembled as -(sub+sup) plus zero/boundary terms, so
pure-Neumann rows annihilate constants exactly in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .coefficients import (DIRICHLET, ELLIPTICITY_FLOOR, NEUMANN, ROBIN,
                           Coefficients, TorusFlow, reaction_at, robin_at)
from .errors import (EllipticityError, PreconditionError, ShapeError)
from .grid import Grid1D, inner_product, norm


@dataclass(frozen=True)
class StencilParts:
    """Time-independent pieces of the operator over degrees of freedom."""

    sub: np.ndarray        # coefficient of u_{i-1} in row i; sub[0] = 0
    sup: np.ndarray        # coefficient of u_{i+1} in row i; sup[-1] = 0
    neg_row_sum: np.ndarray  # -(full-stencil sub + sup), Dirichlet couplings included
    kd_left: float         # Robin: diagonal contribution per unit of d_left(t)
    kd_right: float
    bc: str

    @property
    def n_dof(self) -> int:
        return self.sub.size


def dof_slice(bc: str) -> slice:
    """Nodes that are degrees of freedom: interior for Dirichlet, all otherwise."""
    return slice(1, -1) if bc == DIRICHLET else slice(None)


def stencil_parts(field: Coefficients, grid: Grid1D) -> StencilParts:
    a = np.asarray(field.diffusion, dtype=float)
    adv = np.asarray(field.advection, dtype=float)
    if a.shape != (grid.n_nodes,) or adv.shape != (grid.n_nodes,):
        raise ShapeError("coefficient profiles must have one sample per node")
    if a.min() < ELLIPTICITY_FLOOR:
        raise EllipticityError(
            f"diffusion dips to {a.min()}, below the floor {ELLIPTICITY_FLOOR}")
    h = grid.h
    t1 = a / h**2
    up = np.maximum(adv, 0.0) / h
    dn = np.maximum(-adv, 0.0) / h
    sub_full = t1 + dn
    sup_full = t1 + up
    if field.bc == DIRICHLET:
        rows = slice(1, -1)
        neg = -(sub_full[rows] + sup_full[rows])
        sub = sub_full[rows].copy()
        sup = sup_full[rows].copy()
        sub[0] = 0.0   # couples to the eliminated boundary value
        sup[-1] = 0.0
        kd_l = kd_r = 0.0
    else:
        sub = sub_full.copy()
        sup = sup_full.copy()
        sub[0] = 0.0
        sup[0] = 2.0 * t1[0]
        sup[-1] = 0.0
        sub[-1] = 2.0 * t1[-1]
        neg = -(sub + sup)
        kd_l = 2.0 * a[0] / (h * field.b_left) - adv[0] / field.b_left
        kd_r = -2.0 * a[-1] / (h * field.b_right) - adv[-1] / field.b_right
    return StencilParts(sub=sub, sup=sup, neg_row_sum=neg,
                        kd_left=float(kd_l), kd_right=float(kd_r), bc=field.bc)


@dataclass(frozen=True)
class TridiagonalOperator:
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    bc: str
    t: float
    grid: Grid1D = dc_field(repr=False)

    @property
    def n_dof(self) -> int:
        return self.diag.size


def operator_from_parts(parts: StencilParts, reaction_dof: np.ndarray,
                        d_left: float, d_right: float, t: float,
                        grid: Grid1D) -> TridiagonalOperator:
    diag = parts.neg_row_sum + reaction_dof
    if parts.bc == ROBIN:
        diag = diag.copy()
        diag[0] += parts.kd_left * d_left
        diag[-1] += parts.kd_right * d_right
    return TridiagonalOperator(sub=parts.sub, diag=diag, sup=parts.sup,
                               bc=parts.bc, t=float(t), grid=grid)


def assemble(field: Coefficients, driver: TorusFlow, t: float,
             grid: Grid1D) -> TridiagonalOperator:
    """Operator A(t) over degrees of freedom, boundary condition folded in."""
    parts = stencil_parts(field, grid)
    c_nodes = reaction_at(field, driver, t)
    d_l, d_r = robin_at(field, driver, t) if field.bc == ROBIN else (0.0, 0.0)
    return operator_from_parts(parts, c_nodes[dof_slice(field.bc)], d_l, d_r, t, grid)


def apply(op: TridiagonalOperator, u: np.ndarray) -> np.ndarray:
    """Matrix-vector product on a full-node field; Dirichlet output boundaries are zero."""
    u = np.asarray(u, dtype=float)
    if u.shape != (op.grid.n_nodes,):
        raise ShapeError(f"field has shape {u.shape}, grid has {op.grid.n_nodes} nodes")
    ud = u[dof_slice(op.bc)]
    y = op.diag * ud
    y[1:] += op.sub[1:] * ud[:-1]
    y[:-1] += op.sup[:-1] * ud[1:]
    out = np.zeros(op.grid.n_nodes)
    out[dof_slice(op.bc)] = y
    return out


def rayleigh_rate(op: TridiagonalOperator, w: np.ndarray) -> float:
    """Rayleigh quotient <A w, w> on a unit-norm profile.

    For the spatially discrete flow du/dt = A(t)u this is exactly the
    instantaneous growth rate d/dt ln||u|| evaluated at u = w.
    """
    grid = op.grid
    r = norm(w, grid)
    if abs(r - 1.0) > 1e-12:
        raise PreconditionError(f"profile must be unit norm, got ||w|| = {r}")
    return inner_product(apply(op, w), w, grid)


def rayleigh_rate_by_parts(field: Coefficients, driver: TorusFlow, t: float,
                           w: np.ndarray, grid: Grid1D) -> float:
    """Summation-by-parts form of the Rayleigh quotient (consistency check only).

    Computes -int a (w')^2 - int a' w' w + int (adv*w' + c*w) w plus the
    endpoint flux a*w'*w*nu, with w' taken from the boundary condition at the
    endpoints (zero flux for Dirichlet/Neumann).  Agrees with rayleigh_rate up
    to discretization error; the one-sided advection makes that O(h).
    """
    w = np.asarray(w, dtype=float)
    r = norm(w, grid)
    if abs(r - 1.0) > 1e-12:
        raise PreconditionError(f"profile must be unit norm, got ||w|| = {r}")
    a = np.asarray(field.diffusion, dtype=float)
    adv = np.asarray(field.advection, dtype=float)
    c = reaction_at(field, driver, t)
    h = grid.h
    dw = np.gradient(w, h, edge_order=2)
    da = np.gradient(a, h, edge_order=2)
    quad = grid.quad_weights()
    val = float(
        -np.dot(quad, a * dw * dw)
        - np.dot(quad, da * dw * w)
        + np.dot(quad, (adv * dw + c * w) * w)
    )
    if field.bc == ROBIN:
        d_l, d_r = robin_at(field, driver, t)
        # nu = -1 at x=0: flux term is -a*w'(0)*w(0) with w'(0) = -d_l*w(0)/b_left
        val += a[0] * d_l * w[0] ** 2 / field.b_left
        val += -a[-1] * d_r * w[-1] ** 2 / field.b_right
    return val


@dataclass(frozen=True)
class MMatrixReport:
    passed: bool
    min_margin: float
    row: int | None = None
    reason: str | None = None


def check_m_matrix_bands(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray,
                         dt: float) -> MMatrixReport:
    m_diag = 1.0 - dt * diag
    margin = m_diag - dt * (np.abs(sub) + np.abs(sup))
    if sub.min() < 0.0 or sup.min() < 0.0:
        row = int(np.argmin(np.minimum(sub, sup)))
        return MMatrixReport(False, float(margin.min()), row,
                             "positive off-diagonal would be lost")
    if m_diag.min() <= 0.0:
        row = int(np.argmin(m_diag))
        return MMatrixReport(False, float(margin.min()), row,
                             f"nonpositive diagonal {m_diag[row]:.3e} in I - dt*A")
    if margin.min() <= 0.0:
        row = int(np.argmin(margin))
        return MMatrixReport(False, float(margin.min()), row,
                             f"diagonal dominance fails by {margin[row]:.3e}")
    return MMatrixReport(True, float(margin.min()))


def check_m_matrix(op: TridiagonalOperator, dt: float) -> MMatrixReport:
    """Check that I - dt*A is a strictly diagonally dominant M-matrix.

    Positive diagonal, nonpositive off-diagonals and row dominance margin
    1 - dt*c(x_i) > 0 (the stencil rows sum to the reaction term) imply the
    implicit-Euler solution operator is entrywise positive.
    """
    if dt <= 0:
        raise PreconditionError(f"dt must be positive, got {dt}")
    return check_m_matrix_bands(op.sub, op.diag, op.sup, dt)
