"""Equivalence checks between the linear-source and square-root-source gases.

At infinite volume the two perturbed ideal gases have the same pressure
and the same temperature-independent condensate density nu^2/mu^2.  At
finite volume their pressure difference reduces exactly to zero-mode and
constant terms (the p != 0 parts cancel identically on a shared lattice),
which makes the convergence claim testable as a rate fit on a ladder of
box sides, and makes densities recoverable by differentiating pressures
in mu (convex in mu, so the derivative of the limit is the limit of the
derivatives wherever it exists).
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import NonConvergenceError, StepSizeError, require
from .lattice_ideal import (ThermoPoint, build_lattice, critical_density_finite,
                            critical_density_limit)
from .nonlinear_model import (pressure_sqrt_source, pressure_sqrt_source_limit,
                              zero_mode_pressure_series)
from .source_model import pressure_source

__all__ = [
    "ConvergenceLadder",
    "DensityReport",
    "RateFit",
    "EquivalenceResult",
    "delta_pressure",
    "delta_pressure_closed_form",
    "density_from_pressure",
    "density_limit",
    "condensate_density_limit",
    "condensate_temperature_spread",
    "fit_rate",
    "verify_equivalence",
]


@dataclass(frozen=True)
class ConvergenceLadder:
    """A quantity evaluated on increasing box sides, with an optional rate fit.

    `fitted_rate` is the exponent r in |value - limit_ref| ~ C * V^(-r),
    fitted in log-log coordinates over V = side^d; it is populated only
    when at least three rungs exist.
    """

    d: int
    sides: tuple
    values: tuple
    limit_ref: float
    fitted_rate: Optional[float] = None
    fit_residual: Optional[float] = None

    def __post_init__(self):
        require(len(self.sides) == len(self.values), "sides/values length mismatch")
        require(all(b > a for a, b in zip(self.sides, self.sides[1:])),
                "sides must be strictly increasing")
        require(all(math.isfinite(v) for v in self.values), "values must be finite")

    @property
    def volumes(self) -> tuple:
        return tuple(float(s) ** self.d for s in self.sides)

    @property
    def gaps(self) -> tuple:
        return tuple(abs(v - self.limit_ref) for v in self.values)


class RateFit(NamedTuple):
    rate: float
    residual: float


@dataclass(frozen=True)
class DensityReport:
    """Total, critical, and condensate densities at one point."""

    rho_total: float
    rho_c: float
    method: str  # "analytic" or "finite-difference"

    def __post_init__(self):
        require(self.rho_c >= 0.0, "rho_c must be nonnegative")
        require(self.method in ("analytic", "finite-difference"), "unknown method")

    @property
    def rho_0(self) -> float:
        return self.rho_total - self.rho_c


def delta_pressure(point: ThermoPoint, rel_tol: float = 1e-10) -> float:
    """Finite-volume pressure difference, linear source minus sqrt source.

    The p != 0 contributions are computed once per model on the same
    lattice, so they cancel in the subtraction up to rounding and the
    result equals `delta_pressure_closed_form` to near machine precision.
    Negative for nu > 0 at finite volume; tends to 0 as V grows.
    """
    p_lin = pressure_source(point)
    p_sqrt = pressure_sqrt_source(point, rel_tol=rel_tol)
    return p_lin.total - p_sqrt.total


def delta_pressure_closed_form(point: ThermoPoint, rel_tol: float = 1e-10) -> float:
    """The same difference assembled from zero-mode and constant terms only."""
    beta, mu, nu = point.beta, point.mu, point.nu
    v = point.volume
    zero_lin = -math.log1p(-math.exp(beta * mu)) / (beta * v)
    series = zero_mode_pressure_series(point, rel_tol=rel_tol)
    return (zero_lin - nu * nu / mu) - series.numeric_log_sum


def density_from_pressure(pressure_of_mu: Callable[[float], float],
                          point: ThermoPoint,
                          h: float = None,
                          rho_c_of_mu: Callable[[float], float] = None,
                          onesided_tol: float = 1e-3,
                          convexity_tol: float = 1e-10) -> DensityReport:
    """Particle density as a central mu-derivative of a pressure evaluator.

    Parameters
    ----------
    pressure_of_mu : callable
        mu -> pressure at fixed (beta, nu, lattice or limit).
    point : ThermoPoint
        Supplies mu (and beta for defaults); mu + h must stay below 0.
    h : float, optional
        Step; defaults to max(1e-5, |mu| * 1e-4).  A second evaluation at
        h/2 is not performed here; instead the two one-sided differences
        must agree within `onesided_tol`, which bounds h * p'' directly.
    rho_c_of_mu : callable, optional
        mu -> critical density matched to the evaluator (finite or limit).
        Defaults to 0, in which case rho_0 equals rho_total.

    Raises
    ------
    StepSizeError
        If mu + h >= 0, the one-sided differences disagree by more than
        `onesided_tol`, or the three-point stencil violates convexity.
    """
    mu = point.mu
    if h is None:
        h = max(1e-5, abs(mu) * 1e-4)
    require(h > 0.0, "h must be positive")
    if mu + h >= 0.0:
        raise StepSizeError("mu + h must remain below 0")

    p_minus = pressure_of_mu(mu - h)
    p_center = pressure_of_mu(mu)
    p_plus = pressure_of_mu(mu + h)

    second = p_plus + p_minus - 2.0 * p_center
    if second < -convexity_tol * max(1.0, abs(p_center)):
        raise StepSizeError(f"pressure stencil is not convex in mu (D2={second:.3e})")
    d_plus = (p_plus - p_center) / h
    d_minus = (p_center - p_minus) / h
    if abs(d_plus - d_minus) > onesided_tol:
        raise StepSizeError(
            f"one-sided differences disagree by {abs(d_plus - d_minus):.3e}; "
            "reduce the step h")

    rho_total = (p_plus - p_minus) / (2.0 * h)
    rho_c = rho_c_of_mu(mu) if rho_c_of_mu is not None else 0.0
    return DensityReport(rho_total=rho_total, rho_c=rho_c, method="finite-difference")


def density_limit(beta: float, mu: float, nu: float, d: int = 3) -> float:
    """Infinite-volume particle density nu^2/mu^2 + critical density."""
    return nu * nu / (mu * mu) + critical_density_limit(beta, mu, d)


def condensate_density_limit(beta: float, mu: float, nu: float, d: int = 3) -> float:
    """Infinite-volume condensate density, total minus critical.

    Evaluates to nu^2/mu^2 for either model; beta enters the two terms of
    the subtraction but drops out of the result.
    """
    rho_c = critical_density_limit(beta, mu, d)
    return density_limit(beta, mu, nu, d) - rho_c


def condensate_temperature_spread(mu: float, nu: float, d: int,
                                  betas: Sequence[float],
                                  h: float = 1e-5) -> tuple:
    """Finite-difference condensate densities across a beta grid.

    Returns (values, spread).  Each value differentiates the limit
    pressure of the sqrt-source model at its beta and subtracts the
    matching critical density; temperature independence of the condensate
    means the spread stays at rounding level.
    """
    values = []
    for beta in betas:
        point = ThermoPoint(beta=beta, mu=mu, nu=nu)
        rep = density_from_pressure(
            lambda m: pressure_sqrt_source_limit(beta, m, nu, d), point, h=h,
            rho_c_of_mu=lambda m: critical_density_limit(beta, m, d))
        values.append(rep.rho_0)
    return tuple(values), max(values) - min(values)


def fit_rate(ladder: ConvergenceLadder) -> RateFit:
    """Least-squares decay exponent of log|value - limit_ref| against log V.

    Requires at least three rungs with strictly positive gaps; an
    underflowing gap makes the fit degenerate and raises.
    """
    gaps = ladder.gaps
    require(len(gaps) >= 3, "rate fit needs at least 3 ladder points")
    if any(g <= 0.0 or not math.isfinite(g) for g in gaps):
        raise NonConvergenceError("degenerate rate fit: a ladder gap vanished")
    x = np.log(ladder.volumes)
    y = np.log(gaps)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return RateFit(rate=-float(slope), residual=resid)


@dataclass(frozen=True)
class EquivalenceResult:
    """Outcome of the pressure-equivalence and condensate-equality checks."""

    ladder: ConvergenceLadder
    density_linear: DensityReport
    density_sqrt: DensityReport
    identity_rel_errors: tuple
    passed: bool


def verify_equivalence(beta: float, mu: float, nu: float, d: int,
                       sides: Sequence[int], p_max: float = 10.0,
                       rel_tol: float = 1e-10, fd_step: float = 1e-5,
                       rate_threshold: float = 0.9,
                       condensate_tol: float = 1e-4) -> EquivalenceResult:
    """Pressure-gap ladder plus condensate comparison for both models.

    The ladder holds delta_pressure on each side; the fitted decay rate in
    V must reach `rate_threshold` and the finite-difference condensate
    densities of the two models at the largest side must agree within
    `condensate_tol` for the result to pass.  For nu = 0 the gap vanishes
    identically and the rate fit is skipped.

    Raises NonConvergenceError if the gap ladder is not strictly
    decreasing in magnitude (nu > 0).
    """
    require(len(sides) >= 1, "at least one side required")
    values = []
    identity_errors = []
    lattices = {}
    for side in sides:
        lat = build_lattice(d, float(side), p_max)
        lattices[side] = lat
        point = ThermoPoint(beta=beta, mu=mu, nu=nu, lattice=lat)
        dp = delta_pressure(point, rel_tol=rel_tol)
        closed = delta_pressure_closed_form(point, rel_tol=rel_tol)
        scale = max(abs(closed), 1e-300)
        identity_errors.append(abs(dp - closed) / scale)
        values.append(dp)

    ladder = ConvergenceLadder(d=d, sides=tuple(sides), values=tuple(values),
                               limit_ref=0.0)
    if nu > 0.0:
        gaps = ladder.gaps
        if not all(b < a for a, b in zip(gaps, gaps[1:])):
            raise NonConvergenceError("pressure-gap ladder is not monotone decreasing")
        if len(sides) >= 3:
            fit = fit_rate(ladder)
            ladder = replace(ladder, fitted_rate=fit.rate, fit_residual=fit.residual)

    largest = lattices[sides[-1]]
    point = ThermoPoint(beta=beta, mu=mu, nu=nu, lattice=largest)

    def rho_c_fn(m):
        return critical_density_finite(
            ThermoPoint(beta=beta, mu=m, nu=nu, lattice=largest))

    dens_lin = density_from_pressure(
        lambda m: pressure_source(
            ThermoPoint(beta=beta, mu=m, nu=nu, lattice=largest)).total,
        point, h=fd_step, rho_c_of_mu=rho_c_fn)
    dens_sqrt = density_from_pressure(
        lambda m: pressure_sqrt_source(
            ThermoPoint(beta=beta, mu=m, nu=nu, lattice=largest),
            rel_tol=rel_tol).total,
        point, h=fd_step, rho_c_of_mu=rho_c_fn)

    condensates_agree = abs(dens_lin.rho_0 - dens_sqrt.rho_0) <= condensate_tol
    if nu == 0.0:
        passed = all(v == 0.0 for v in values) and condensates_agree
    else:
        rate_ok = ladder.fitted_rate is None or ladder.fitted_rate >= rate_threshold
        passed = rate_ok and condensates_agree
    return EquivalenceResult(ladder=ladder, density_linear=dens_lin,
                             density_sqrt=dens_sqrt,
                             identity_rel_errors=tuple(identity_errors),
                             passed=passed)
