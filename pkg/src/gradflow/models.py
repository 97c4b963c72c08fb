"""The three phase-field models as instances of one abstract gradient flow.

A model is phi_t = -M * G * mu with mu = eps2 * A * phi + F'(phi), where
G = I (L2 flow) or G = -Laplacian (H^-1 flow).  The free energy is

    E(phi) = eps2/2 * (A phi, phi) + integral of F,

with F acting on phi itself (double well) or on grad(phi) (the two thin-film
potentials).  The Cahn-Hilliard 1/eps^2 prefactor on the potential is folded
into the double-well `scale`, so `eps2` always stores the coefficient of the
quadratic part (alpha_0 in the examples).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NumericalBlowup
from .spectral import (
    Grid,
    OperatorKind,
    OperatorSpectrum,
    RealField,
    apply_operator,
    divergence,
    gradient,
    inner_l2,
    operator_spectrum,
    two_thirds_truncation,
)

BLOWUP_MAX_ABS = 1e8


class PotentialKind(Enum):
    DOUBLE_WELL = "double-well"
    MBE_SLOPE = "mbe-slope"
    MBE_NOSLOPE = "mbe-noslope"


@dataclass(frozen=True)
class Potential:
    """Nonlinear potential; `scale` multiplies the double well only."""

    kind: PotentialKind
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"potential scale must be positive, got {self.scale}")

    @property
    def on_gradient(self) -> bool:
        return self.kind is not PotentialKind.DOUBLE_WELL


class FlowKind(Enum):
    L2 = "l2"
    HM1 = "hm1"


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of one gradient-flow model.

    shift is the energy constant C; None means "resolve from the initial
    state" via resolve_shift.  stabilizer is the first-order PS-SAV constant
    s > 0 (the CN schemes pick their own adaptive s each step).
    """

    flow: FlowKind
    a_kind: OperatorKind
    eps2: float
    mobility: float
    potential: Potential
    shift: float | None = None
    stabilizer: float = 1.0
    dealias: bool = False

    def __post_init__(self):
        if not self.eps2 > 0:
            raise ValueError(f"eps2 must be positive, got {self.eps2}")
        if not self.mobility > 0:
            raise ValueError(f"mobility must be positive, got {self.mobility}")
        if self.stabilizer < 0:
            raise ValueError(f"stabilizer must be nonnegative, got {self.stabilizer}")

    def require_shift(self) -> float:
        if self.shift is None:
            raise ValueError(
                "energy shift C is unresolved; call resolve_shift(model, phi0) first"
            )
        return self.shift


def allen_cahn(
    eps2: float, mobility: float = 1.0, scale: float = 1.0, **kwargs
) -> ModelSpec:
    """phi_t = M*(eps2*Lap(phi) - scale*(phi^3 - phi))."""
    return ModelSpec(
        FlowKind.L2,
        OperatorKind.NEG_LAPLACIAN,
        eps2,
        mobility,
        Potential(PotentialKind.DOUBLE_WELL, scale),
        **kwargs,
    )


def cahn_hilliard(
    eps2: float, mobility: float = 1.0, scale: float = 1.0, **kwargs
) -> ModelSpec:
    """phi_t = -M*Lap(eps2*Lap(phi) + scale*(1 - phi^2)*phi)."""
    return ModelSpec(
        FlowKind.HM1,
        OperatorKind.NEG_LAPLACIAN,
        eps2,
        mobility,
        Potential(PotentialKind.DOUBLE_WELL, scale),
        **kwargs,
    )


def thin_film(
    eps2: float, mobility: float = 1.0, slope_selection: bool = True, **kwargs
) -> ModelSpec:
    """Epitaxial thin-film model: phi_t = -M*(eps2*Lap^2 phi + f(grad phi))."""
    kind = PotentialKind.MBE_SLOPE if slope_selection else PotentialKind.MBE_NOSLOPE
    return ModelSpec(
        FlowKind.L2,
        OperatorKind.BILAPLACIAN,
        eps2,
        mobility,
        Potential(kind),
        **kwargs,
    )


def operator_for(model: ModelSpec, grid: Grid) -> OperatorSpectrum:
    return operator_spectrum(grid, model.a_kind)


def _nonlinear_density(phi: RealField, model: ModelSpec) -> np.ndarray:
    pot = model.potential
    if pot.kind is PotentialKind.DOUBLE_WELL:
        return pot.scale * 0.25 * (phi.values**2 - 1.0) ** 2
    gx, gy = gradient(phi)
    g2 = gx.values**2 + gy.values**2
    if pot.kind is PotentialKind.MBE_SLOPE:
        return 0.25 * (g2 - 1.0) ** 2
    return -0.5 * np.log1p(g2)


def energy_quadratic(phi: RealField, model: ModelSpec) -> float:
    """eps2/2 * (A phi, phi); for A = Lap^2 this equals eps2/2 * ||Lap phi||^2."""
    return 0.5 * model.eps2 * inner_l2(phi, apply_operator(phi, operator_for(model, phi.grid)))


def energy_nonlinear(phi: RealField, model: ModelSpec) -> float:
    """Integral of F(phi) (or F(grad phi)) with the h^2-weighted grid sum."""
    return phi.grid.spacing**2 * float(_nonlinear_density(phi, model).sum())


def energy_total(phi: RealField, model: ModelSpec) -> float:
    e = energy_quadratic(phi, model) + energy_nonlinear(phi, model)
    if not np.isfinite(e):
        raise NumericalBlowup(f"energy is non-finite ({e})")
    return e


def nonlinear_force(phi: RealField, model: ModelSpec) -> RealField:
    """Variational derivative of the nonlinear energy (F'(phi) or -div F'(grad phi))."""
    pot = model.potential
    if pot.kind is PotentialKind.DOUBLE_WELL:
        out = RealField(phi.grid, pot.scale * (phi.values**3 - phi.values))
    else:
        gx, gy = gradient(phi)
        g2 = gx.values**2 + gy.values**2
        if pot.kind is PotentialKind.MBE_SLOPE:
            coeff = g2 - 1.0
        else:
            coeff = -1.0 / (1.0 + g2)
        out = -divergence(
            RealField(phi.grid, coeff * gx.values),
            RealField(phi.grid, coeff * gy.values),
        )
    if model.dealias:
        out = two_thirds_truncation(out)
    return out


def chemical_potential(phi: RealField, model: ModelSpec) -> RealField:
    """mu = eps2 * A phi + F'(phi)."""
    return model.eps2 * apply_operator(phi, operator_for(model, phi.grid)) + nonlinear_force(
        phi, model
    )


def check_blowup(phi: RealField) -> None:
    if phi.max_abs() > BLOWUP_MAX_ABS:
        raise NumericalBlowup(f"|phi|_inf = {phi.max_abs():.3e} exceeds {BLOWUP_MAX_ABS:.0e}")


def default_shift(phi0: RealField, model: ModelSpec) -> float:
    """C = max(1, 1 - E(phi0)), so E(phi0) + C >= 1."""
    return max(1.0, 1.0 - energy_total(phi0, model))


def resolve_shift(model: ModelSpec, phi0: RealField) -> ModelSpec:
    """Fill in the default energy shift when the model left it unset."""
    if model.shift is not None:
        return model
    return dataclasses.replace(model, shift=default_shift(phi0, model))


class ManufacturedCase(Enum):
    """Exact solutions with compensating forcing on Omega = (0, 2)^2."""

    AC_CASE_A = "ac-case-a"
    CH_CASE_A = "ch-case-a"

    @property
    def domain_length(self) -> float:
        return 2.0


def _spatial_profile(case: ManufacturedCase, grid: Grid) -> np.ndarray:
    X, Y = grid.mesh
    if case is ManufacturedCase.AC_CASE_A:
        return np.exp(np.sin(np.pi * X) * np.sin(np.pi * Y))
    return np.cos(np.pi * X) * np.cos(np.pi * Y)


def exact_solution(case: ManufacturedCase, grid: Grid, t: float) -> RealField:
    return RealField(grid, _spatial_profile(case, grid) * np.sin(t))


def exact_solution_dt(case: ManufacturedCase, grid: Grid, t: float) -> RealField:
    return RealField(grid, _spatial_profile(case, grid) * np.cos(t))


def forcing(case: ManufacturedCase, model: ModelSpec, grid: Grid, t: float) -> RealField:
    """External force making exact_solution solve the flow exactly.

    L2 flow:   f = phi_t + M * mu(phi_e)
    H^-1 flow: f = phi_t - M * Lap(mu(phi_e))

    The time derivative is analytic; operator parts are evaluated spectrally
    (exact for the single-mode CH profile, spectrally accurate for AC).
    """
    phi_e = exact_solution(case, grid, t)
    dphi = exact_solution_dt(case, grid, t)
    mu = chemical_potential(phi_e, model)
    if model.flow is FlowKind.L2:
        return dphi + model.mobility * mu
    lap_mu = -apply_operator(mu, operator_spectrum(grid, OperatorKind.NEG_LAPLACIAN))
    return dphi - model.mobility * lap_mu


def manufactured_model(case: ManufacturedCase, **kwargs) -> ModelSpec:
    """Model parameters used with each manufactured case (M, alpha_0, scale)."""
    if case is ManufacturedCase.AC_CASE_A:
        return allen_cahn(eps2=0.01**2, mobility=1.0, **kwargs)
    return cahn_hilliard(eps2=0.04, mobility=0.005, scale=1.0, **kwargs)
