"""Time integrators: baseline SAV, GSAV, and positivity-preserving stabilized SAV.

All steppers are pure functions SimState -> StepReport.  The PS-SAV family
updates the auxiliary variable R through a scalar quadratic whose unique
positive root keeps R > 0 for any time step; the baseline SAV family tracks
q = sqrt(E1 + C) and offers no such guarantee.

Forcing enters each scheme through the time-discrete flow equation (f is
evaluated at t^{n+1} for backward-Euler steps and at t^{n+1/2} for
Crank-Nicolson steps); the auxiliary update then follows from
dR/dt = (1/M)(f, phi_t) - (1/M)(phi_t, phi_t) in the flow's inner product,
which collapses to the unforced law when f = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np

from . import models
from .errors import EnergyShiftViolation, NegativeDiscriminant
from .models import FlowKind, ModelSpec, PotentialKind
from .spectral import Grid, RealField, apply_operator, inner_hm1, inner_l2

FLAG_QUADRATIC_DEGENERATE = "QUADRATIC_DEGENERATE"
FLAG_FORCED_ROOT_FALLBACK = "FORCED_ROOT_FALLBACK"


class SchemeFamily(Enum):
    SAV = "sav"
    GSAV = "gsav"
    PSSAV = "pssav"


class SchemeOrder(Enum):
    FIRST = "1"
    CN = "cn"


@dataclass(frozen=True)
class SchemeKind:
    family: SchemeFamily
    order: SchemeOrder = SchemeOrder.FIRST
    relaxed: bool = False


@dataclass(frozen=True)
class SimState:
    """phi^n, optional phi^{n-1}, the scalar auxiliary (R or q), and time."""

    phi: RealField
    aux: float
    t: float
    step_index: int
    phi_prev: Optional[RealField] = None


@dataclass(frozen=True)
class StepReport:
    new_state: SimState
    xi: float
    dissipation: float
    solver_flags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class QuadCoeffs:
    """Coefficients of a*R^2 + b*R + c = 0 for the auxiliary update."""

    a: float
    b: float
    c: float


def solve_R_quadratic(coeffs: QuadCoeffs, r_scale: float = 1.0) -> float:
    """Return the larger real root, stably.

    For the unforced schemes c <= 0 and b > 0, so the larger root is the
    unique nonnegative one; it is computed in the cancellation-free form
    -2c / (b + sqrt(b^2 - 4ac)).  Near-zero leading coefficients fall back
    to the linear root -c/b.
    """
    a, b, c = coeffs.a, coeffs.b, coeffs.c
    if a < 0:
        raise ValueError(f"quadratic leading coefficient must be >= 0, got {a}")
    tol_a = 1e-14 * abs(c) / max(r_scale, 1.0)
    if a <= tol_a:
        return -c / b
    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise NegativeDiscriminant(f"discriminant {disc} < 0 for {coeffs}")
    root = math.sqrt(disc)
    if c <= 0 and b + root > 0:
        return -2.0 * c / (b + root)
    return (-b + root) / (2.0 * a)


def _root_nearest(coeffs: QuadCoeffs, target: float) -> tuple[float, bool]:
    """Real root closest to target; vertex fallback when none exists (forced mode)."""
    a, b, c = coeffs.a, coeffs.b, coeffs.c
    if a * max(abs(target), 1.0) <= 1e-14 * max(abs(b), 1e-300):
        return -c / b, False
    disc = b * b - 4.0 * a * c
    if disc < 0:
        return -b / (2.0 * a), True
    root = math.sqrt(disc)
    if b >= 0:
        r1 = (-b - root) / (2.0 * a)
    else:
        r1 = (-b + root) / (2.0 * a)
    r2 = c / (a * r1) if r1 != 0 else (-b + root) / (2.0 * a)
    if abs(r1 - target) <= abs(r2 - target):
        return r1, False
    return r2, False


def _degenerate_tol(phi: RealField, dt: float) -> float:
    """||phi1||^2 below this is treated as the exact phi1 = 0 branch."""
    return 1e-28 * max(1.0, inner_l2(phi, phi)) / dt**2


# Spectral helpers; steppers work on raw coefficient arrays internally.


def _lam(model: ModelSpec, grid: Grid) -> np.ndarray:
    return grid.k2 if model.a_kind.value == "neg-laplacian" else grid.k4


def _gsym(model: ModelSpec, grid: Grid):
    return 1.0 if model.flow is FlowKind.L2 else grid.k2


def _fft(f: RealField) -> np.ndarray:
    return np.fft.fft2(f.values)


def _ifft(grid: Grid, coeff: np.ndarray) -> RealField:
    return RealField(grid, np.fft.ifft2(coeff).real)


def _flow_inner(model: ModelSpec, f: RealField, g: RealField) -> float:
    return inner_l2(f, g) if model.flow is FlowKind.L2 else inner_hm1(f, g)


def _shifted_energy(e: float, shift: float, what: str) -> float:
    ec = e + shift
    if ec <= 0:
        raise EnergyShiftViolation(f"{what} + C = {ec:.6e} is not positive")
    return ec


def validate_scheme_model(scheme: SchemeKind, model: ModelSpec) -> None:
    """Scope rules: thin-film models run under PS-SAV only; SAV has no relaxation."""
    if model.potential.kind is not PotentialKind.DOUBLE_WELL:
        if scheme.family is not SchemeFamily.PSSAV:
            raise ValueError("thin-film models are only supported with the pssav family")
    if scheme.relaxed and scheme.family is SchemeFamily.SAV:
        raise ValueError("relaxation applies to R-based schemes, not baseline SAV")


def init_state(phi0: RealField, model: ModelSpec, scheme: SchemeKind) -> SimState:
    """Set the auxiliary variable: q0 = sqrt(E1 + C) for SAV, R0 = E + C otherwise."""
    validate_scheme_model(scheme, model)
    shift = model.require_shift()
    if scheme.family is SchemeFamily.SAV:
        aux = math.sqrt(_shifted_energy(models.energy_nonlinear(phi0, model), shift, "E1(phi0)"))
    else:
        aux = _shifted_energy(models.energy_total(phi0, model), shift, "E(phi0)")
    return SimState(phi=phi0, aux=aux, t=0.0, step_index=0, phi_prev=None)


def relax_R(state: SimState, model: ModelSpec) -> SimState:
    """Calibrate R^{n+1} <- min(R^{n+1}, E(phi^{n+1}) + C) after a step."""
    bound = models.energy_total(state.phi, model) + model.require_shift()
    return replace(state, aux=min(state.aux, bound))


def _make_state(state: SimState, phi_new: RealField, aux_new: float, dt: float) -> SimState:
    return SimState(
        phi=phi_new,
        aux=aux_new,
        t=state.t + dt,
        step_index=state.step_index + 1,
        phi_prev=state.phi,
    )


# ---------------------------------------------------------------------------
# Baseline SAV
# ---------------------------------------------------------------------------


def _sav_common(state, model, dt, force, half: bool, b_field, rhs1_extra_hat):
    """Shared two-solve machinery for the SAV steps.

    half=True uses the Crank-Nicolson operator (I + dt/2 * M eps2 G A).
    """
    grid = state.phi.grid
    lam = _lam(model, grid)
    gsym = _gsym(model, grid)
    M = model.mobility
    cop = (0.5 if half else 1.0) * M * dt * model.eps2
    denom = 1.0 + cop * gsym * lam

    rhs1_hat = _fft(state.phi) + rhs1_extra_hat
    if force is not None:
        rhs1_hat = rhs1_hat + dt * _fft(force)
    phi1 = _ifft(grid, rhs1_hat / denom)

    b_hat = _fft(b_field)
    scale2 = (0.5 if half else 1.0) * M * dt
    phi2 = _ifft(grid, -scale2 * gsym * b_hat / denom)

    q_rhs = state.aux + 0.5 * inner_l2(b_field, phi1 - state.phi)
    q_new = q_rhs / (1.0 - 0.5 * inner_l2(b_field, phi2))
    phi_new = phi1 + q_new * phi2
    return phi_new, q_new


def step_sav1(
    state: SimState, model: ModelSpec, dt: float, force: Optional[RealField] = None
) -> StepReport:
    """First-order baseline SAV: two constant-coefficient solves plus a scalar."""
    shift = model.require_shift()
    e1 = _shifted_energy(models.energy_nonlinear(state.phi, model), shift, "E1(phi^n)")
    b_field = (1.0 / math.sqrt(e1)) * models.nonlinear_force(state.phi, model)
    phi_new, q_new = _sav_common(state, model, dt, force, half=False, b_field=b_field,
                                 rhs1_extra_hat=0.0)
    xi = q_new / math.sqrt(
        _shifted_energy(models.energy_nonlinear(phi_new, model), shift, "E1(phi^{n+1})")
    )
    new_state = _make_state(state, phi_new, q_new, dt)
    return StepReport(new_state, xi=xi, dissipation=state.aux - q_new)


def step_sav_cn(
    state: SimState, model: ModelSpec, dt: float, force: Optional[RealField] = None
) -> StepReport:
    """Crank-Nicolson SAV with extrapolated phi_hat = (3 phi^n - phi^{n-1})/2.

    Requires phi_prev; the first step of a trajectory is taken with step_sav1
    (see make_stepper).  `force` must be evaluated at t^{n+1/2}.
    """
    if state.phi_prev is None:
        raise ValueError("step_sav_cn requires phi_prev; bootstrap with step_sav1")
    shift = model.require_shift()
    grid = state.phi.grid
    phi_hat = RealField(grid, 1.5 * state.phi.values - 0.5 * state.phi_prev.values)
    e1 = _shifted_energy(models.energy_nonlinear(phi_hat, model), shift, "E1(phi_hat)")
    b_field = (1.0 / math.sqrt(e1)) * models.nonlinear_force(phi_hat, model)

    lam = _lam(model, grid)
    gsym = _gsym(model, grid)
    cop = 0.5 * model.mobility * dt * model.eps2
    # rhs1 carries the explicit half of the CN operator and q^n's share of Gb
    extra = -cop * gsym * lam * _fft(state.phi)
    extra = extra - 0.5 * model.mobility * dt * state.aux * gsym * _fft(b_field)
    phi_new, q_new = _sav_common(state, model, dt, force, half=True, b_field=b_field,
                                 rhs1_extra_hat=extra)
    xi = q_new / math.sqrt(
        _shifted_energy(models.energy_nonlinear(phi_new, model), shift, "E1(phi^{n+1})")
    )
    new_state = _make_state(state, phi_new, q_new, dt)
    return StepReport(new_state, xi=xi, dissipation=state.aux - q_new)


# ---------------------------------------------------------------------------
# GSAV
# ---------------------------------------------------------------------------


def step_gsav(
    state: SimState,
    model: ModelSpec,
    dt: float,
    order: int = 1,
    force: Optional[RealField] = None,
) -> StepReport:
    """k-th order IMEX GSAV (k in {1, 2}): one solve, then the xi correction.

    R^{n+1} = R^n / (1 + M dt (G mu, mu)/(E(phi_hat)+C) - dt (f, mu)/(E(phi_hat)+C)),
    phi^{n+1} = [1 - (1 - xi)^{k+1}] phi_bar^{n+1}.
    """
    if order not in (1, 2):
        raise ValueError(f"GSAV order must be 1 or 2, got {order}")
    shift = model.require_shift()
    grid = state.phi.grid
    if order == 1:
        alpha = 1.0
        beta = state.phi.values
        phi_hat = state.phi
    else:
        if state.phi_prev is None:
            raise ValueError("second-order GSAV requires phi_prev; bootstrap with order 1")
        alpha = 1.5
        beta = 2.0 * state.phi.values - 0.5 * state.phi_prev.values
        phi_hat = RealField(grid, 2.0 * state.phi.values - state.phi_prev.values)

    ec = _shifted_energy(models.energy_total(phi_hat, model), shift, "E(phi_hat)")
    fprime = models.nonlinear_force(phi_hat, model)

    lam = _lam(model, grid)
    gsym = _gsym(model, grid)
    M = model.mobility
    denom = alpha + M * dt * model.eps2 * gsym * lam
    rhs_hat = np.fft.fft2(beta) - M * dt * gsym * _fft(fprime)
    if force is not None:
        rhs_hat = rhs_hat + dt * _fft(force)
    phi_bar_hat = rhs_hat / denom
    phi_bar = _ifft(grid, phi_bar_hat)

    mu_hat = model.eps2 * lam * phi_bar_hat + _fft(fprime)
    gmu = grid.length**2 / grid.n**4 * float((gsym * np.abs(mu_hat) ** 2).sum())
    fmu = 0.0
    if force is not None:
        mu_bar = _ifft(grid, mu_hat)
        fmu = inner_l2(force, mu_bar)

    r_new = state.aux / (1.0 + M * dt * gmu / ec - dt * fmu / ec)
    xi = r_new / ec
    phi_new = (1.0 - (1.0 - xi) ** (order + 1)) * phi_bar
    new_state = _make_state(state, phi_new, r_new, dt)
    return StepReport(new_state, xi=xi, dissipation=state.aux - r_new)


# ---------------------------------------------------------------------------
# PS-SAV
# ---------------------------------------------------------------------------


def _pssav_first(state, model, dt, force, hm1: bool) -> StepReport:
    """Backward-Euler PS-SAV; hm1 switches operator, right-hand side and metric."""
    shift = model.require_shift()
    grid = state.phi.grid
    M = model.mobility
    ec = _shifted_energy(models.energy_total(state.phi, model), shift, "E(phi^n)")
    mu_exp = models.chemical_potential(state.phi, model)

    lam = _lam(model, grid)
    gfac = grid.k2 if hm1 else 1.0
    denom = 1.0 + M * model.stabilizer * dt * model.eps2 * gfac * lam
    phi1 = _ifft(grid, -M * gfac * _fft(mu_exp) / denom) * (1.0 / ec)

    flags = set()
    inner = (lambda f, g: inner_hm1(f, g)) if hm1 else (lambda f, g: inner_l2(f, g))
    p_l2 = inner_l2(phi1, phi1)

    if force is None:
        if p_l2 <= _degenerate_tol(state.phi, dt):
            flags.add(FLAG_QUADRATIC_DEGENERATE)
            phi_new, r_new = state.phi, state.aux
        else:
            a = inner(phi1, phi1)
            r_new = solve_R_quadratic(
                QuadCoeffs(a, M / dt, -(M / dt) * state.aux), r_scale=state.aux
            )
            phi_new = state.phi + dt * r_new * phi1
    else:
        phi2 = _ifft(grid, _fft(force) / denom)
        a = inner(phi1, phi1)
        b = M / dt + 2.0 * inner(phi1, phi2) - inner(force, phi1)
        c = inner(phi2, phi2) - inner(force, phi2) - (M / dt) * state.aux
        if p_l2 <= _degenerate_tol(state.phi, dt):
            flags.add(FLAG_QUADRATIC_DEGENERATE)
            r_new = -c / b
        else:
            r_new, fell_back = _root_nearest(QuadCoeffs(a, b, c), target=ec)
            if fell_back:
                flags.add(FLAG_FORCED_ROOT_FALLBACK)
        phi_new = state.phi + dt * (r_new * phi1 + phi2)

    xi = r_new / (models.energy_total(phi_new, model) + shift)
    new_state = _make_state(state, phi_new, r_new, dt)
    return StepReport(new_state, xi=xi, dissipation=state.aux - r_new, solver_flags=frozenset(flags))


def _pssav_cn(state, model, dt, force, hm1: bool) -> StepReport:
    """Crank-Nicolson PS-SAV with the adaptive stabilizer of the R update."""
    if state.phi_prev is None:
        raise ValueError("CN PS-SAV requires phi_prev; bootstrap with the first-order step")
    shift = model.require_shift()
    grid = state.phi.grid
    M = model.mobility
    rn = state.aux
    phi_hat = RealField(grid, 1.5 * state.phi.values - 0.5 * state.phi_prev.values)
    ec_hat = _shifted_energy(models.energy_total(phi_hat, model), shift, "E(phi_hat)")

    # mu_explicit = eps2 * A phi^n + F'(phi_hat)
    a_op = models.operator_for(model, grid)
    mu_exp = model.eps2 * apply_operator(state.phi, a_op) + models.nonlinear_force(phi_hat, model)

    lam = _lam(model, grid)
    gfac = grid.k2 if hm1 else 1.0
    denom = 1.0 + 0.5 * M * dt * model.eps2 * gfac * lam
    phi1 = _ifft(grid, -M * gfac * _fft(mu_exp) / denom) * (1.0 / (2.0 * ec_hat))

    inner = (lambda f, g: inner_hm1(f, g)) if hm1 else (lambda f, g: inner_l2(f, g))
    flags = set()
    p_l2 = inner_l2(phi1, phi1)

    if p_l2 <= _degenerate_tol(state.phi, dt):
        # phi1 = 0 branch: s^{n+1} = 0 and the state is a fixed point (unforced)
        flags.add(FLAG_QUADRATIC_DEGENERATE)
        if force is None:
            phi_new, r_new = state.phi, rn
            xi = r_new / (models.energy_total(phi_new, model) + shift)
            return StepReport(
                _make_state(state, phi_new, r_new, dt),
                xi=xi,
                dissipation=0.0,
                solver_flags=frozenset(flags),
            )
        p = 0.0
        s_cn = 0.0
    else:
        p = inner(phi1, phi1)
        if rn * p <= M / dt:
            s_cn = 0.0
        else:
            s_cn = rn * p / (M * dt) - 1.0 / dt**2

    if force is None:
        a = p
        b = M / dt + M * s_cn * dt + 2.0 * rn * p
        c = rn * rn * p - (M / dt) * rn - M * s_cn * dt * rn
        # the stabilizer rule guarantees c <= 0; clamp roundoff so the larger
        # root cannot dip below zero in the s > 0 branch
        c = min(c, 0.0)
        r_new = solve_R_quadratic(QuadCoeffs(a, b, c), r_scale=rn)
        phi_new = state.phi + dt * (r_new + rn) * phi1
    else:
        phi2 = _ifft(grid, _fft(force) / denom)
        p12 = inner(phi1, phi2)
        f1 = inner(force, phi1)
        a = p
        b = M / dt + M * s_cn * dt + 2.0 * rn * p + 2.0 * p12 - f1
        c = (
            rn * rn * p
            + 2.0 * rn * p12
            + inner(phi2, phi2)
            - rn * f1
            - inner(force, phi2)
            - (M / dt) * rn
            - M * s_cn * dt * rn
        )
        target = models.energy_total(state.phi, model) + shift
        r_new, fell_back = _root_nearest(QuadCoeffs(a, b, c), target=target)
        if fell_back:
            flags.add(FLAG_FORCED_ROOT_FALLBACK)
        phi_new = state.phi + dt * ((r_new + rn) * phi1 + phi2)

    xi = r_new / (models.energy_total(phi_new, model) + shift)
    new_state = _make_state(state, phi_new, r_new, dt)
    return StepReport(new_state, xi=xi, dissipation=rn - r_new, solver_flags=frozenset(flags))


def step_pssav1_L2(
    state: SimState, model: ModelSpec, dt: float, force: Optional[RealField] = None
) -> StepReport:
    """First-order PS-SAV for L2 flows: one solve, one quadratic, one update."""
    if model.flow is not FlowKind.L2:
        raise ValueError("step_pssav1_L2 requires an L2-flow model")
    return _pssav_first(state, model, dt, force, hm1=False)


def step_pssav_cn_L2(
    state: SimState, model: ModelSpec, dt: float, force: Optional[RealField] = None
) -> StepReport:
    if model.flow is not FlowKind.L2:
        raise ValueError("step_pssav_cn_L2 requires an L2-flow model")
    return _pssav_cn(state, model, dt, force, hm1=False)


def step_pssav1_Hm1(
    state: SimState, model: ModelSpec, dt: float, force: Optional[RealField] = None
) -> StepReport:
    """First-order PS-SAV for H^-1 flows; mass-preserving by construction."""
    if model.flow is not FlowKind.HM1:
        raise ValueError("step_pssav1_Hm1 requires an H^-1-flow model")
    return _pssav_first(state, model, dt, force, hm1=True)


def step_pssav_cn_Hm1(
    state: SimState, model: ModelSpec, dt: float, force: Optional[RealField] = None
) -> StepReport:
    if model.flow is not FlowKind.HM1:
        raise ValueError("step_pssav_cn_Hm1 requires an H^-1-flow model")
    return _pssav_cn(state, model, dt, force, hm1=True)


# ---------------------------------------------------------------------------
# Driver glue
# ---------------------------------------------------------------------------

ForceFn = Callable[[float], RealField]


def make_stepper(scheme: SchemeKind, model: ModelSpec):
    """Bind a scheme/model pair to an advance(state, dt, force_fn) callable.

    Handles force evaluation times (t^{n+1} vs t^{n+1/2}) and the first-step
    bootstrap of the multistep schemes by their first-order siblings.
    """
    validate_scheme_model(scheme, model)
    second = scheme.order is SchemeOrder.CN
    family = scheme.family

    def advance(state: SimState, dt: float, force_fn: Optional[ForceFn] = None) -> StepReport:
        first_step = state.phi_prev is None
        use_first_order = not second or first_step
        if use_first_order:
            f = force_fn(state.t + dt) if force_fn else None
            if family is SchemeFamily.SAV:
                return step_sav1(state, model, dt, f)
            if family is SchemeFamily.GSAV:
                return step_gsav(state, model, dt, order=1, force=f)
            if model.flow is FlowKind.L2:
                return step_pssav1_L2(state, model, dt, f)
            return step_pssav1_Hm1(state, model, dt, f)
        if family is SchemeFamily.GSAV:
            f = force_fn(state.t + dt) if force_fn else None
            return step_gsav(state, model, dt, order=2, force=f)
        f = force_fn(state.t + 0.5 * dt) if force_fn else None
        if family is SchemeFamily.SAV:
            return step_sav_cn(state, model, dt, f)
        if model.flow is FlowKind.L2:
            return step_pssav_cn_L2(state, model, dt, f)
        return step_pssav_cn_Hm1(state, model, dt, f)

    return advance
