"""Ideal Bose gas with a linear symmetry-breaking source on the zero mode.

The source term -nu*sqrt(V)*(a0*e^{-i phi} + a0^dagger*e^{i phi}) is removed
exactly by displacing the zero mode by -(nu/mu)*e^{i phi}*sqrt(V), which
leaves a free mode at energy -mu plus the extensive constant nu^2*V/mu.
All finite-volume quantities of this model therefore have closed forms,
and the displaced-field averages give the condensate amplitude directly.

The zero-mode pressure is -(1/(beta*V))*log(1 - e^{beta*mu}), the positive
sign being fixed by the partition sum of the displaced mode,
sum_n e^{beta*mu*n} = (1 - e^{beta*mu})^{-1}; its mu-derivative reproduces
the depletion density (1/V)*(e^{-beta*mu} - 1)^{-1} term by term.
"""

import cmath
import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import DomainError, require
from .lattice_ideal import PressureBreakdown, ThermoPoint, pressure_ideal_primed

__all__ = [
    "ShiftParameters",
    "QuasiAverage",
    "shift_parameters",
    "pressure_source",
    "quasiaverage",
    "condensate_density_source",
    "zero_mode_depletion",
    "solve_mu_finite",
    "solve_mu_exact",
    "mu_star",
]


@dataclass(frozen=True)
class ShiftParameters:
    """Zero-mode displacement and the constant it leaves in the Hamiltonian.

    Invariants: |displacement|^2 / V = nu^2/mu^2 and
    energy_offset = mu * |displacement|^2.
    """

    displacement: complex   # -(nu/mu) e^{i phi} sqrt(V)
    energy_offset: float    # nu^2 V / mu


@dataclass(frozen=True)
class QuasiAverage:
    """Scaled zero-mode average <a0/sqrt(V)> and its squared magnitude."""

    eta: complex

    @property
    def magnitude_sq(self) -> float:
        return abs(self.eta) ** 2


def _require_stable(mu: float) -> None:
    if mu >= 0.0:
        raise DomainError("outside stability domain (mu must be < 0)")


def shift_parameters(mu: float, nu: float, phi: float, volume: float) -> ShiftParameters:
    """Displacement -(nu/mu)e^{i phi}sqrt(V) and offset nu^2 V/mu of the shift."""
    _require_stable(mu)
    require(nu >= 0.0, "nu must be nonnegative")
    require(volume > 0.0, "volume must be positive")
    disp = -(nu / mu) * cmath.exp(1j * phi) * math.sqrt(volume)
    return ShiftParameters(displacement=disp, energy_offset=nu * nu * volume / mu)


def pressure_source(point: ThermoPoint, rel_tol: float = None) -> PressureBreakdown:
    """Exact finite-volume pressure of the linear-source model.

    zero_mode = -(1/(beta*V))*log(1 - e^{beta*mu}), constant = -nu^2/mu,
    primed = ideal-gas pressure of the p != 0 modes on the point's lattice.
    Both non-primed parts are nonnegative for mu < 0, nu >= 0.
    """
    beta, mu, nu = point.beta, point.mu, point.nu
    _require_stable(mu)
    primed = pressure_ideal_primed(point, rel_tol=rel_tol)
    v = point.volume
    zero_mode = -math.log1p(-math.exp(beta * mu)) / (beta * v)
    constant = -nu * nu / mu
    return PressureBreakdown(zero_mode=zero_mode, primed=primed.primed,
                             constant=constant,
                             truncation_bound=primed.truncation_bound)


def quasiaverage(point: ThermoPoint) -> QuasiAverage:
    """<a0/sqrt(V)> = -(nu/mu) e^{i phi}, exact at every volume.

    The displaced field has zero thermal average, so only the shift
    survives; for nu = 0 the selection rule <a0> = 0 is recovered.
    """
    _require_stable(point.mu)
    return QuasiAverage(eta=-(point.nu / point.mu) * cmath.exp(1j * point.phi))


def condensate_density_source(mu: float, nu: float) -> float:
    """Condensate density nu^2/mu^2 (temperature independent)."""
    _require_stable(mu)
    require(nu >= 0.0, "nu must be nonnegative")
    return nu * nu / (mu * mu)


def zero_mode_depletion(beta: float, mu: float, volume: float) -> float:
    """Thermal population (1/V)*(e^{-beta*mu} - 1)^{-1} of the displaced mode."""
    require(beta > 0.0, "beta must be positive")
    require(volume > 0.0, "volume must be positive")
    _require_stable(mu)
    return 1.0 / (volume * math.expm1(-beta * mu))


def solve_mu_finite(beta: float, volume: float, rho0: float, nu: float) -> float:
    """Finite-volume chemical potential at fixed condensate density rho0.

    Solves the small-mu quadratic beta*V*rho0*mu^2 + mu - beta*V*nu^2 = 0
    and returns its negative root,
    mu = -(1 + sqrt(1 + (2*beta*V*nu)^2 * rho0)) / (2*beta*V*rho0).
    """
    require(beta > 0.0 and volume > 0.0, "beta and volume must be positive")
    require(rho0 > 0.0, "rho0 must be positive")
    require(nu >= 0.0, "nu must be nonnegative")
    a = beta * volume * rho0
    disc = 1.0 + (2.0 * beta * volume * nu) ** 2 * rho0
    return -(1.0 + math.sqrt(disc)) / (2.0 * a)


def solve_mu_exact(beta: float, volume: float, rho0: float, nu: float) -> float:
    """Root of nu^2/mu^2 + (1/V)(e^{-beta*mu}-1)^{-1} = rho0 on (-inf, 0).

    Cross-check for `solve_mu_finite`; the left side is the exact
    finite-volume zero-mode density of this model and is strictly
    increasing in mu, so the root is unique and bracketable.
    """
    require(beta > 0.0 and volume > 0.0, "beta and volume must be positive")
    require(rho0 > 0.0, "rho0 must be positive")
    require(nu > 0.0, "nu must be positive for the exact solver")

    def f(mu):
        return nu * nu / (mu * mu) + zero_mode_depletion(beta, mu, volume) - rho0

    hi = -1e-12
    lo = solve_mu_finite(beta, volume, rho0, nu)
    while f(lo) > 0.0:
        lo *= 2.0
        if lo < -1e12:
            raise DomainError("failed to bracket the chemical potential")
    return brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)


def mu_star(rho0: float, nu: float) -> float:
    """Infinite-volume chemical potential -nu/sqrt(rho0)."""
    require(rho0 > 0.0, "rho0 must be positive")
    require(nu >= 0.0, "nu must be nonnegative")
    return -nu / math.sqrt(rho0)
