import math

import mpmath as mp
import numpy as np
import pytest

from bose_limits.errors import NonConvergenceError, StepSizeError
from bose_limits.equivalence import (ConvergenceLadder, condensate_density_limit,
                                     condensate_temperature_spread, delta_pressure,
                                     delta_pressure_closed_form, density_from_pressure,
                                     density_limit, fit_rate, verify_equivalence)
from bose_limits.lattice_ideal import (ThermoPoint, build_lattice,
                                       critical_density_finite,
                                       critical_density_limit, pressure_ideal_limit)
from bose_limits.source_model import (condensate_density_source, pressure_source,
                                      zero_mode_depletion)


def mp_pressure_gap(beta, mu, nu, volume, n_terms):
    """Extended-precision zero-mode pressure gap, independent of the library."""
    with mp.workdps(30):
        s = mp.fsum(mp.exp(beta * (mu * n + 2 * nu * mp.sqrt(volume * (n + 1))))
                    for n in range(n_terms + 1))
        sqrt_part = mp.log(s) / (beta * volume)
        linear_part = -mp.log(1 - mp.exp(beta * mu)) / (beta * volume) \
            - mp.mpf(nu) ** 2 / mu
        return float(linear_part - sqrt_part)


class TestDeltaPressure:
    def test_nu_zero_is_exactly_zero(self, lattice_d3_l16):
        point = ThermoPoint(beta=1.0, mu=-0.5, nu=0.0, lattice=lattice_d3_l16)
        assert delta_pressure(point) == 0.0

    @pytest.mark.parametrize("beta,mu,nu", [(1.0, -0.5, 0.1), (0.7, -1.3, 0.3),
                                            (2.0, -0.2, 0.05)])
    def test_decomposition_identity(self, lattice_d3_l16, beta, mu, nu):
        point = ThermoPoint(beta=beta, mu=mu, nu=nu, lattice=lattice_d3_l16)
        dp = delta_pressure(point)
        closed = delta_pressure_closed_form(point)
        assert abs(dp - closed) / abs(closed) < 1e-12

    def test_matches_extended_precision_oracle(self, lattice_d3_l16):
        beta, mu, nu = 1.0, -0.5, 0.1
        point = ThermoPoint(beta=beta, mu=mu, nu=nu, lattice=lattice_d3_l16)
        oracle = mp_pressure_gap(beta, mu, nu, lattice_d3_l16.volume, 12000)
        assert delta_pressure(point) == pytest.approx(oracle, rel=1e-9)

    def test_magnitude_decreases_along_ladder(self):
        beta, mu, nu = 1.0, -0.5, 0.1
        vals = []
        for side in (8, 16, 32):
            lat = build_lattice(3, float(side), 8.0)
            vals.append(abs(delta_pressure(
                ThermoPoint(beta=beta, mu=mu, nu=nu, lattice=lat))))
        assert vals[0] > vals[1] > vals[2]


class TestDensityFromPressure:
    def test_recovers_analytic_condensate(self):
        beta, mu, nu = 1.0, -0.5, 0.1
        point = ThermoPoint(beta=beta, mu=mu, nu=nu)
        report = density_from_pressure(
            lambda m: -nu * nu / m + pressure_ideal_limit(beta, m, 3),
            point, h=1e-4,
            rho_c_of_mu=lambda m: critical_density_limit(beta, m, 3, tol=1e-14))
        assert report.rho_0 == pytest.approx(0.04, abs=1e-6)
        assert report.method == "finite-difference"

    def test_depletion_derivative_identity(self):
        beta, vol = 1.0, 100.0
        point = ThermoPoint(beta=beta, mu=-0.5, nu=0.0)
        report = density_from_pressure(
            lambda m: -math.log1p(-math.exp(beta * m)) / (beta * vol),
            point, h=1e-4)
        assert report.rho_total == pytest.approx(
            zero_mode_depletion(beta, -0.5, vol), abs=1e-8)

    def test_nu_zero_condensate_is_finite_size_only(self):
        beta, mu = 1.0, -0.5
        lat = build_lattice(3, 8.0, 8.0)
        point = ThermoPoint(beta=beta, mu=mu, nu=0.0, lattice=lat)
        report = density_from_pressure(
            lambda m: pressure_source(
                ThermoPoint(beta=beta, mu=m, nu=0.0, lattice=lat)).total,
            point, h=1e-5,
            rho_c_of_mu=lambda m: critical_density_finite(
                ThermoPoint(beta=beta, mu=m, nu=0.0, lattice=lat)))
        v = lat.volume
        assert 0.0 < report.rho_0 < 5.0 / v

    def test_step_too_large(self):
        beta, nu = 1.0, 0.1
        point = ThermoPoint(beta=beta, mu=-0.5, nu=nu)
        with pytest.raises(StepSizeError):
            density_from_pressure(
                lambda m: -nu * nu / m + pressure_ideal_limit(beta, m, 3),
                point, h=0.2)

    def test_step_crossing_zero(self):
        point = ThermoPoint(beta=1.0, mu=-0.01, nu=0.1)
        with pytest.raises(StepSizeError):
            density_from_pressure(lambda m: -0.01 / m, point, h=0.02)


class TestCondensateLimit:
    def test_value(self):
        assert condensate_density_limit(1.0, -0.5, 0.1, 3) == pytest.approx(
            0.04, rel=1e-13)

    def test_nu_zero(self):
        assert condensate_density_limit(1.0, -0.5, 0.0, 3) == 0.0

    def test_equals_linear_source_condensate(self):
        for mu, nu in [(-0.5, 0.1), (-1.2, 0.3), (-0.1, 0.1)]:
            assert condensate_density_limit(1.0, mu, nu, 3) == pytest.approx(
                condensate_density_source(mu, nu), rel=1e-12)

    def test_temperature_spread(self):
        values, spread = condensate_temperature_spread(
            -0.5, 0.1, 3, (0.5, 1.0, 2.0), h=1e-5)
        assert spread < 1e-10
        for v in values:
            assert v == pytest.approx(0.04, abs=1e-5)


class TestFitRate:
    def test_exact_inverse_volume(self):
        sides = (8, 16, 32, 64)
        values = tuple(3.0 + 2.5 / float(s) ** 3 for s in sides)
        ladder = ConvergenceLadder(d=3, sides=sides, values=values, limit_ref=3.0)
        fit = fit_rate(ladder)
        assert fit.rate == pytest.approx(1.0, abs=1e-6)

    def test_square_root_law(self):
        sides = (8, 16, 32, 64)
        values = tuple(1.0 / math.sqrt(float(s) ** 3) for s in sides)
        ladder = ConvergenceLadder(d=3, sides=sides, values=values, limit_ref=0.0)
        assert fit_rate(ladder).rate == pytest.approx(0.5, abs=1e-6)

    def test_degenerate_gap(self):
        ladder = ConvergenceLadder(d=3, sides=(8, 16, 32), values=(1.0, 1.0, 1.0),
                                   limit_ref=1.0)
        with pytest.raises(NonConvergenceError):
            fit_rate(ladder)

    def test_needs_three_points(self):
        ladder = ConvergenceLadder(d=3, sides=(8, 16), values=(1.0, 0.5),
                                   limit_ref=0.0)
        with pytest.raises(Exception):
            fit_rate(ladder)


class TestVerifyEquivalence:
    def test_ladder_against_extended_precision(self):
        beta, mu, nu = 1.0, -0.5, 0.1
        sides = (8, 16, 32)
        result = verify_equivalence(beta, mu, nu, 3, sides, p_max=8.0)
        oracle_gaps = []
        for side in sides:
            v = float(side) ** 3
            n_terms = int(0.7 * v) + 200
            oracle_gaps.append(abs(mp_pressure_gap(beta, mu, nu, v, n_terms)))
        for ours, oracle in zip(result.ladder.gaps, oracle_gaps):
            assert ours == pytest.approx(oracle, rel=1e-9)
        oracle_rate = -np.polyfit(np.log([float(s) ** 3 for s in sides]),
                                  np.log(oracle_gaps), 1)[0]
        assert result.ladder.fitted_rate == pytest.approx(oracle_rate, abs=1e-6)
        # the gap carries a log(V)/V component, so the window rate sits
        # below the 0.9 pass threshold on these sides
        assert result.passed == (oracle_rate >= 0.9)

    def test_identity_errors_small(self):
        result = verify_equivalence(1.0, -0.5, 0.1, 3, (8, 16), p_max=8.0)
        assert all(err < 1e-12 for err in result.identity_rel_errors)

    def test_nu_zero_ladder_vanishes(self):
        result = verify_equivalence(1.0, -0.5, 0.0, 3, (4, 8, 12), p_max=8.0)
        assert all(v == 0.0 for v in result.ladder.values)
        assert result.ladder.fitted_rate is None
        assert result.passed

    def test_condensate_equality_bound(self):
        beta, mu, nu = 1.0, -0.5, 0.1
        result = verify_equivalence(beta, mu, nu, 3, (8, 16), p_max=8.0)
        v = 16.0 ** 3
        bound = 2.0 * zero_mode_depletion(beta, mu, 1.0) / v + 1e-6
        diff = abs(result.density_linear.rho_0 - result.density_sqrt.rho_0)
        assert diff <= bound


class TestConvexityInvariant:
    @pytest.mark.parametrize("model", ["linear", "sqrt"])
    def test_pressure_convex_in_mu(self, model):
        from bose_limits.nonlinear_model import pressure_sqrt_source

        lat = build_lattice(3, 8.0, 8.0)
        mus = np.linspace(-1.5, -0.1, 10)
        vals = []
        for m in mus:
            point = ThermoPoint(beta=1.0, mu=m, nu=0.1, lattice=lat)
            if model == "linear":
                vals.append(pressure_source(point).total)
            else:
                vals.append(pressure_sqrt_source(point).total)
        assert np.all(np.diff(vals, 2) >= -1e-10)


class TestDerivativeConvergence:
    def test_rate_exceeds_threshold(self):
        beta, mu, nu = 1.0, -0.5, 0.1
        target = density_limit(beta, mu, nu, 3)
        h = 1e-5
        gaps = []
        sides = (4, 6, 8, 10, 12)
        for side in sides:
            lat = build_lattice(3, float(side), 9.0)

            def p(m, lat=lat):
                return pressure_source(
                    ThermoPoint(beta=beta, mu=m, nu=nu, lattice=lat)).total

            rho = (p(mu + h) - p(mu - h)) / (2.0 * h)
            gaps.append(abs(rho - target))
        ladder = ConvergenceLadder(d=3, sides=sides, values=tuple(gaps), limit_ref=0.0)
        assert fit_rate(ladder).rate >= 0.9
