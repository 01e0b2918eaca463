"""Ideal Bose gas on a periodic box: mode lattice and thermodynamics.

A box of side `l` in `d` dimensions with periodic boundary conditions
carries the dual momentum lattice p = 2*pi*n/l (n integer vector) with
single-particle dispersion |p|^2/2.  This module builds that lattice up to
a momentum cutoff and evaluates the ideal-gas pressure and critical
(thermal) density, both at finite volume and in the infinite-volume limit.

Finite mode sums carry a certified truncation bound: the discarded modes
beyond the cutoff are compared against a d-dimensional Gaussian-tail
integral over the region |p| > p_max - pi*sqrt(d)/l.  The inward shift by
half a lattice-cell diagonal makes the comparison an honest upper bound
for radially decreasing summands.

Chemical potentials are restricted to mu < 0 (mu <= 0 for the limiting
critical density); no ideal-gas quantity is evaluated outside that domain.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc, gamma as gamma_fn

from .errors import DomainError, NonConvergenceError, ResourceGuardError, require
from .summation import stable_sum

__all__ = [
    "ModeLattice",
    "ThermoPoint",
    "PressureBreakdown",
    "build_lattice",
    "dispersion",
    "occupation",
    "pressure_ideal_primed",
    "pressure_ideal_limit",
    "critical_density_finite",
    "critical_density_tail_bound",
    "critical_density_limit",
    "polylog",
]

DEFAULT_MAX_MODES = 20_000_000


@dataclass(frozen=True, eq=False)
class ModeLattice:
    """The finite dual lattice of a periodic box.

    Modes are stored in canonical order, sorted by (|p|^2, lexicographic
    integer components), so the zero mode (when present) sits at index 0
    and all mode sums have a reproducible evaluation order.
    """

    d: int
    l: float
    p_max: float
    modes: np.ndarray = field(repr=False)       # shape (n_modes, d)
    energies: np.ndarray = field(repr=False)    # |p|^2 / 2 per mode
    includes_zero: bool

    def __post_init__(self):
        self.modes.setflags(write=False)
        self.energies.setflags(write=False)

    @property
    def volume(self) -> float:
        return self.l ** self.d

    @property
    def n_modes(self) -> int:
        return self.modes.shape[0]

    @property
    def nonzero_energies(self) -> np.ndarray:
        """Energies of all p != 0 modes."""
        return self.energies[1:] if self.includes_zero else self.energies


@dataclass(frozen=True)
class ThermoPoint:
    """A grand-canonical evaluation point (beta, mu, nu, phi) on a lattice."""

    beta: float
    mu: float
    nu: float = 0.0
    phi: float = 0.0
    lattice: ModeLattice = None

    def __post_init__(self):
        require(self.beta > 0.0, "beta must be positive")
        require(self.nu >= 0.0, "nu must be nonnegative")
        require(0.0 <= self.phi < 2.0 * math.pi, "phi must lie in [0, 2*pi)")

    @property
    def volume(self) -> float:
        return self.lattice.volume


@dataclass(frozen=True)
class PressureBreakdown:
    """A pressure split into zero-mode, p != 0, and constant parts.

    `total` is defined as the floating-point sum of the three parts, so the
    decomposition identity holds exactly at the arithmetic level.
    `truncation_bound` bounds the error from the momentum cutoff and any
    truncated series entering the parts.
    """

    zero_mode: float
    primed: float
    constant: float
    truncation_bound: float

    def __post_init__(self):
        require(self.truncation_bound >= 0.0, "truncation_bound must be >= 0")

    @property
    def total(self) -> float:
        return self.zero_mode + self.primed + self.constant


def _require_stable(mu: float) -> None:
    if mu >= 0.0:
        raise DomainError("outside stability domain (mu must be < 0)")


def build_lattice(d: int, l: float, p_max: float,
                  max_modes: int = DEFAULT_MAX_MODES) -> ModeLattice:
    """Enumerate all dual-lattice modes with |p| <= p_max.

    Parameters
    ----------
    d : int
        Spatial dimension, >= 1.
    l : float
        Box side length, > 0.  The lattice spacing is 2*pi/l.
    p_max : float
        Euclidean momentum cutoff, > 0.
    max_modes : int
        Resource guard; enumeration is refused if the mode count can
        exceed this.

    Returns
    -------
    ModeLattice
        Modes in canonical (|p|^2, lexicographic) order, zero mode first.
    """
    require(d >= 1 and int(d) == d, "d must be an integer >= 1")
    require(l > 0.0, "l must be positive")
    require(p_max > 0.0, "p_max must be positive")
    d = int(d)

    radius = p_max * l / (2.0 * math.pi)
    r_int = int(math.floor(radius + 1e-12))
    # Ball-volume estimate of the mode count, checked before enumeration.
    est = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * (radius + 1.0) ** d
    if est > 4.0 * max_modes:
        raise ResourceGuardError(
            f"estimated mode count {est:.3g} exceeds the limit {max_modes}")

    axis = np.arange(-r_int, r_int + 1, dtype=np.int64)
    r2 = radius * radius * (1.0 + 1e-14)
    chunks = []
    if d == 1:
        n = axis[axis.astype(float) ** 2 <= r2, None]
        chunks.append(n)
    else:
        # Slice along the first axis to keep peak memory bounded.
        rest = np.meshgrid(*([axis] * (d - 1)), indexing="ij")
        rest = np.stack([g.ravel() for g in rest], axis=1)
        rest_sq = (rest.astype(float) ** 2).sum(axis=1)
        for n1 in axis:
            keep = rest_sq <= r2 - float(n1) ** 2
            if not keep.any():
                continue
            block = np.empty((int(keep.sum()), d), dtype=np.int64)
            block[:, 0] = n1
            block[:, 1:] = rest[keep]
            chunks.append(block)
    n_all = np.concatenate(chunks, axis=0)
    if n_all.shape[0] > max_modes:
        raise ResourceGuardError(
            f"mode count {n_all.shape[0]} exceeds the limit {max_modes}")

    nsq = (n_all * n_all).sum(axis=1)
    # Integer sort keys make the canonical order exact: |n|^2 first, then
    # lexicographic components.
    order = np.lexsort(tuple(n_all[:, k] for k in range(d - 1, -1, -1)) + (nsq,))
    n_all = n_all[order]
    nsq = nsq[order]

    step = 2.0 * math.pi / l
    modes = step * n_all.astype(float)
    energies = 0.5 * step * step * nsq.astype(float)
    includes_zero = bool(nsq.size > 0 and nsq[0] == 0)
    return ModeLattice(d=d, l=float(l), p_max=float(p_max), modes=modes,
                       energies=energies, includes_zero=includes_zero)


def dispersion(p) -> float:
    """Single-particle energy |p|^2 / 2 of a momentum vector (or batch)."""
    arr = np.asarray(p, dtype=float)
    out = 0.5 * (arr * arr).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def occupation(beta: float, mu: float, lam: float) -> float:
    """Mean occupation (exp(beta*(lam - mu)) - 1)^-1 of a mode with energy lam.

    Requires mu < lam; the occupation is strictly positive and depends only
    on lam - mu.
    """
    require(beta > 0.0, "beta must be positive")
    if mu >= lam:
        raise DomainError("occupation requires mu < lambda")
    return 1.0 / math.expm1(beta * (lam - mu))


# ---------------------------------------------------------------------------
# Tail bounds for the momentum cutoff.
#
# Both summands used here are dominated by the radially decreasing function
# C * exp(beta*mu) * exp(-beta*r^2/2).  Each discarded mode p is compared
# with the average of the dominating function, evaluated half a cell
# diagonal h = pi*sqrt(d)/l closer to the origin, over the lattice cell
# centered at p; those cells are disjoint and lie in |q| > p_max - h.  In
# radial coordinates the bound is
#
#   (1/V) sum_{|p|>p_max} f(|p|)
#     <= (2 pi)^-d S_{d-1} int_{r>a} exp(-beta*max(0, r-h)^2/2) r^(d-1) dr,
#
# a = max(0, p_max - h).  The plateau piece r in (a, h) integrates to
# (h^d - a^d)/d; beyond it the substitution u = r - h and a binomial
# expansion of (u + h)^(d-1) reduce everything to upper incomplete gamma
# functions.  The bound is loose for p_max below a couple of cell
# diagonals but remains valid there.
# ---------------------------------------------------------------------------

def _gaussian_moment_tail(beta: float, k: int, u0: float) -> float:
    """int_{u0}^inf u^k exp(-beta u^2/2) du, exact in closed form."""
    s = 0.5 * (k + 1)
    x = 0.5 * beta * u0 * u0
    return 0.5 * (2.0 / beta) ** s * gammaincc(s, x) * gamma_fn(s)


def _mode_tail_bound(beta: float, mu: float, d: int, l: float, p_max: float) -> float:
    """Bound on (1/V) * sum over |p| > p_max of exp(beta*(mu - |p|^2/2))."""
    h = math.pi * math.sqrt(d) / l
    a = max(0.0, p_max - h)
    plateau = (max(h, a) ** d - a ** d) / d
    u0 = max(0.0, a - h)
    decaying = sum(math.comb(d - 1, k) * h ** (d - 1 - k)
                   * _gaussian_moment_tail(beta, k, u0)
                   for k in range(d))
    surface = 2.0 * math.pi ** (d / 2.0) / gamma_fn(d / 2.0)
    return ((2.0 * math.pi) ** (-d) * math.exp(beta * mu) * surface
            * (plateau + decaying))


def pressure_ideal_primed(point: ThermoPoint, rel_tol: float = None) -> PressureBreakdown:
    """Ideal-gas pressure carried by all p != 0 modes, with tail bound.

    Evaluates -(1/(beta*V)) * sum_{0 < |p| <= p_max} log(1 - e^(beta*(mu - lam)))
    on the point's lattice.  The zero-mode and constant parts of the
    returned breakdown are zero.

    Raises NonConvergenceError when `rel_tol` is given and the certified
    cutoff bound exceeds rel_tol * |value|.
    """
    beta, mu, lat = point.beta, point.mu, point.lattice
    _require_stable(mu)
    lam = lat.nonzero_energies
    v = lat.volume
    terms = -np.log1p(-np.exp(beta * (mu - lam))) / (beta * v)
    primed = stable_sum(terms)
    # -log(1-x) <= x/(1-x) <= x/(1 - e^(beta*mu)) for x = e^(beta*(mu-lam)).
    factor = 1.0 / (beta * (1.0 - math.exp(beta * mu)))
    bound = factor * _mode_tail_bound(beta, mu, lat.d, lat.l, lat.p_max)
    if rel_tol is not None and bound > rel_tol * max(abs(primed), 1e-300):
        raise NonConvergenceError(
            f"cutoff tail bound {bound:.3e} exceeds rel_tol * |pressure|")
    return PressureBreakdown(zero_mode=0.0, primed=primed, constant=0.0,
                             truncation_bound=bound)


def pressure_ideal_limit(beta: float, mu: float, d: int = 3,
                         tol: float = 1e-15) -> float:
    """Infinite-volume ideal-gas pressure, polylog(d/2+1, e^(beta*mu)) based."""
    require(beta > 0.0, "beta must be positive")
    _require_stable(mu)
    z = math.exp(beta * mu)
    return polylog(d / 2.0 + 1.0, z, tol=tol) * (2.0 * math.pi * beta) ** (-d / 2.0) / beta


def critical_density_finite(point: ThermoPoint, rel_tol: float = None) -> float:
    """Thermal density of the p != 0 modes at finite volume."""
    beta, mu, lat = point.beta, point.mu, point.lattice
    _require_stable(mu)
    lam = lat.nonzero_energies
    terms = 1.0 / np.expm1(beta * (lam - mu))
    value = stable_sum(terms) / lat.volume
    if rel_tol is not None:
        bound = critical_density_tail_bound(point)
        if bound > rel_tol * max(abs(value), 1e-300):
            raise NonConvergenceError(
                f"cutoff tail bound {bound:.3e} exceeds rel_tol * density")
    return value


def critical_density_tail_bound(point: ThermoPoint) -> float:
    """Certified bound on the cutoff error of `critical_density_finite`."""
    beta, mu, lat = point.beta, point.mu, point.lattice
    _require_stable(mu)
    factor = 1.0 / (1.0 - math.exp(beta * mu))
    return factor * _mode_tail_bound(beta, mu, lat.d, lat.l, lat.p_max)


def critical_density_limit(beta: float, mu: float, d: int = 3,
                           tol: float = 1e-9) -> float:
    """Infinite-volume critical density (2*pi*beta)^(-d/2) * polylog(d/2, e^(beta*mu)).

    mu = 0 is admissible for d >= 3 only; for d <= 2 the defining series
    diverges there and a NonConvergenceError is raised.
    """
    require(beta > 0.0, "beta must be positive")
    if mu > 0.0:
        raise DomainError("outside stability domain (mu must be <= 0 here)")
    z = 1.0 if mu == 0.0 else math.exp(beta * mu)
    return polylog(d / 2.0, z, tol=tol) * (2.0 * math.pi * beta) ** (-d / 2.0)


def polylog(s: float, z: float, tol: float = 1e-12,
            max_terms: int = 50_000_000) -> float:
    """Bose function sum_{k>=1} z^k / k^s with a certified truncation error.

    For z < 1 the series is summed until the geometric tail bound
    z^(K+1) / ((K+1)^s (1-z)) drops below `tol` (relative to the partial
    sum when it exceeds 1).  At z = 1 (admissible for s > 1) the partial
    sum is completed with the midpoint of the integral sandwich
    (K+1)^(1-s)/(s-1) <= tail <= K^(1-s)/(s-1), whose half-width is kept
    below `tol`.

    Raises
    ------
    DomainError
        If z is outside [0, 1] or s <= 0.
    NonConvergenceError
        If z = 1 with s <= 1 (divergent), or `max_terms` is hit first.
    """
    require(s > 0.0, "s must be positive")
    require(0.0 <= z <= 1.0, "z must lie in [0, 1]")
    if z == 0.0:
        return 0.0

    if z == 1.0:
        if s <= 1.0:
            raise NonConvergenceError(f"polylog series diverges at z=1 for s={s} <= 1")
        # Half-width of the integral sandwich decays like (s/2) K^(-s).
        k_needed = int(math.ceil((2.0 * tol / s) ** (-1.0 / s))) + 10
        if k_needed > max_terms:
            raise NonConvergenceError(
                f"polylog(z=1) needs {k_needed} terms for tol={tol:.1e}")
        k = np.arange(1, k_needed + 1, dtype=float)
        partial = stable_sum(k ** (-s))
        hi = k_needed ** (1.0 - s) / (s - 1.0)
        lo = (k_needed + 1.0) ** (1.0 - s) / (s - 1.0)
        return partial + 0.5 * (hi + lo)

    log_z = math.log(z)
    total = 0.0
    k_start = 1
    block = 4096
    collected = []
    while True:
        k = np.arange(k_start, min(k_start + block, max_terms + 1), dtype=float)
        if k.size == 0:
            raise NonConvergenceError(f"polylog did not converge within {max_terms} terms")
        terms = np.exp(k * log_z - s * np.log(k))
        collected.append(terms)
        k_end = int(k[-1])
        total += float(terms.sum())
        tail = z ** (k_end + 1) / ((k_end + 1) ** s * (1.0 - z))
        if tail <= tol * max(1.0, abs(total)):
            break
        k_start = k_end + 1
        block = min(2 * block, 1_000_000)
    return stable_sum(np.concatenate(collected))
