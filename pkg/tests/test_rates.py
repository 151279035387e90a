#!/usr/bin/env python3

###############################################################################
# Module Imports
###############################################################################

import math
import numpy as np
import pytest
import scipy.special
import time

from pynv import quadrature, rates
from pynv.core import (
    UNITS, DomainError, SpinParams, ToleranceError, boltzmann_exponent,
    thermal_energy_mev)
from pynv.rates import (
    APhononParams, EPhononParams, QuadratureSpec, RateTable)

###############################################################################

E, A = EPhononParams(), APhononParams()
P = SpinParams()
P0 = P._replace(xi_perp=0.0)


def log_slope(func, temps):
    return np.polyfit(np.log(temps), np.log([func(t) for t in temps]), 1)[0]


class TestQuadrature:

    def test_polynomial_is_exact(self):
        result = quadrature.integrate(
            lambda x: x ** 4, 0.0, 2.0, QuadratureSpec())
        assert result.value == pytest.approx(32 / 5, rel=1e-14)

    def test_fixed_rule(self):
        assert quadrature.fixed_quad(np.sin, 0, math.pi) == pytest.approx(
            2.0, rel=1e-12)

    def test_empty_interval(self):
        assert quadrature.integrate(np.exp, 1.0, 1.0, QuadratureSpec()) == (
            0.0, 0.0, 0)

    def test_tolerance_error(self):
        spec = QuadratureSpec(rel_tol=1e-15, abs_tol=1e-300,
                              max_subdivisions=10)
        with pytest.raises(ToleranceError):
            quadrature.integrate(lambda x: np.abs(x - 0.3) ** 0.5, 0, 1, spec)

    def test_bad_spec(self):
        with pytest.raises(Exception):
            QuadratureSpec(max_subdivisions=5)


class TestIntegrands:

    def test_series_matches_exact(self):
        z = np.array([-1.001e-3, -0.999e-3, 0.999e-3, 1.001e-3])
        assert np.allclose(rates._b(z), z / np.expm1(z), rtol=1e-12)

    def test_removable_points(self):
        assert rates._b(np.array([0.0]))[0] == 1.0
        assert rates._integrand_e(np.array([0.7]), 0.7)[0] == 0.0
        assert rates._integrand_a(np.array([0.0]))[0] == 0.0

    def test_upper_limit(self):
        assert rates.upper_limit() == 50.0
        assert rates.upper_limit(3.0) == 80.0


class TestBoseIntegrals:

    def test_e_phonon_zeta(self):
        expected = 24 * scipy.special.zeta(4)
        assert expected == pytest.approx(25.9758, abs=1e-4)
        start = time.perf_counter()
        assert rates.bose_integral_e(0.0) == pytest.approx(expected, rel=1e-6)
        assert time.perf_counter() - start < 1.0

    def test_a_phonon_zeta(self):
        expected = 720 * scipy.special.zeta(6)
        assert expected == pytest.approx(732.487, abs=1e-3)
        assert rates.bose_integral_a() == pytest.approx(expected, rel=1e-6)

    @pytest.mark.parametrize('xi', [0.0, 0.5])
    def test_high_temperature_closed_form(self, xi):
        t = 5000.0
        p = P._replace(xi_perp=xi)
        c = E.omega_e / thermal_energy_mev(t)
        x_perp = boltzmann_exponent(t, p)
        s = xi / E.omega_e
        closed = c ** 3 / 3 * (1 - s) ** 2 * (1 + s / 2)
        assert rates.bose_integral_e(x_perp, c) == pytest.approx(
            closed, rel=1e-3)

    def test_domain(self):
        with pytest.raises(DomainError):
            rates.bose_integral_e(2.0, 1.0)
        with pytest.raises(DomainError):
            rates.bose_integral_e(-0.1)

    def test_full_output(self):
        result = rates.bose_integral_e(0.0, full_output=True)
        assert result.error < 1e-8 * result.value
        assert result.panels >= 1

    def test_small_cutoff_series(self):
        # x⁴eˣ/(eˣ−1)² = x²(1 − x²/12 + x⁴/240 − x⁶/6048 + x⁸/172800 ...)
        c = 0.5029
        series = (c ** 3 / 3 - c ** 5 / 60 + c ** 7 / 1680 -
                  c ** 9 / 54432 + c ** 11 / 1900800)
        assert rates.bose_integral_e(0.0, c) == pytest.approx(
            series, rel=1e-6)

    def test_room_temperature_cutoff(self):
        c = E.omega_e / thermal_energy_mev(300)
        assert c == pytest.approx(0.5029, abs=1e-4)

    @pytest.mark.parametrize('x_perp', [0.0, 0.18, 2.0])
    def test_fixed_rule_agrees(self, x_perp):
        c = E.omega_e / thermal_energy_mev(300) + x_perp
        fixed = quadrature.fixed_quad(
            lambda x: rates._integrand_e(x, x_perp), x_perp, c)
        assert rates.bose_integral_e(x_perp, c) == pytest.approx(
            fixed, rel=1e-8)

    @pytest.mark.parametrize('integral', [
        lambda c: rates.bose_integral_e(0.0, c),
        lambda c: rates.bose_integral_e(0.5, c),
        rates.bose_integral_a])
    def test_monotone_in_cutoff(self, integral):
        values = [integral(c) for c in np.linspace(0.6, 50, 30)]
        assert values[0] > 0
        assert all(a < b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize('integral', [
        lambda q: rates.bose_integral_e(0.0, q=q, full_output=True),
        lambda q: rates.bose_integral_e(0.18, 0.5, q, True),
        lambda q: rates.bose_integral_e(3.0, 40.0, q, True),
        lambda q: rates.bose_integral_a(q=q, full_output=True)])
    def test_tolerance_halving(self, integral):
        coarse = integral(QuadratureSpec(rel_tol=1e-8))
        fine = integral(QuadratureSpec(rel_tol=5e-9))
        assert abs(fine.value - coarse.value) <= coarse.error


class TestRateLaws:

    @pytest.mark.parametrize('t', [5.0, 50.0, 295.0, 550.0])
    def test_detailed_balance(self, t):
        x = boltzmann_exponent(t, P)
        ratio = rates.w_up(t, E, P) / rates.w_down(t, E, P)
        assert ratio == pytest.approx(math.exp(-x), rel=1e-12)

    def test_zero_temperature(self):
        assert rates.w_down(0, E, P) == 0.0
        assert rates.w_up(0, E, P) == 0.0
        assert rates.w_a(0, A) == 0.0

    def test_splitting_above_cutoff(self):
        assert rates.w_down(100, E, P._replace(xi_perp=20.0)) == 0.0

    def test_t5_law(self):
        slope = log_slope(lambda t: rates.w_down(t, E, P0),
                          np.linspace(2, 8, 7))
        assert slope == pytest.approx(5, abs=0.02)

    def test_t7_law(self):
        slope = log_slope(lambda t: rates.w_a(t, A), np.linspace(4, 20, 9))
        assert slope == pytest.approx(7, abs=0.02)

    def test_low_temperature_prefactor(self):
        expected = E.b_e * 10 ** 5 * 24 * scipy.special.zeta(4)
        assert rates.w_down(10, E, P0) == pytest.approx(expected, rel=1e-3)

    def test_quadratic_law_is_flat(self):
        ratios = [rates.w_down(t, E, P0) / t ** 2
                  for t in np.arange(295, 555, 5.0)]
        assert max(ratios) / min(ratios) - 1 < 0.01

    def test_quadratic_law_matches_q(self):
        t = 550.0
        q = rates.q_constant(E, P0)
        assert rates.w_down(t, E, P0) / t ** 2 == pytest.approx(q, rel=5e-3)

    def test_w_down_from_q(self):
        assert rates.w_down_from_q(300, 0.83e6) == pytest.approx(0.83e6 * 9e4)

    def test_room_temperature_value(self):
        c = E.omega_e / thermal_energy_mev(300)
        fixed = quadrature.fixed_quad(lambda x: rates._integrand_e(x, 0.0),
                                      0.0, c)
        value = rates.w_down(300, E, P0)
        assert value == pytest.approx(E.b_e * 300 ** 5 * fixed, rel=1e-8)
        assert value == pytest.approx(1.34255e11, rel=1e-4)

    def test_a_phonon_high_temperature(self):
        t = A.omega_a / (0.05 * UNITS.k_boltzmann * 1e3)
        theta = A.omega_a * 1e-3 / UNITS.k_boltzmann
        expected = A.b_a / 5 * theta ** 5 * t ** 2
        assert rates.w_a(t, A) == pytest.approx(expected, rel=0.01)


class TestQConstant:

    def test_cross_consistency(self):
        q_mhz = rates.q_constant(E, P) / 1e6
        assert q_mhz == pytest.approx(0.742, abs=0.002)
        assert abs(q_mhz / 0.83 - 1) < 0.30

    def test_omega_dependence(self):
        q13 = rates.q_constant(E, P0)
        q14 = rates.q_constant(E._replace(omega_e=14.0), P0)
        assert q14 / q13 == pytest.approx((14 / 13) ** 3, rel=1e-12)

    def test_rescaling(self):
        q = rates.q_constant(E, P)
        assert rates.q_rescaled(q, P, P0, E) == pytest.approx(
            rates.q_constant(E, P0), rel=1e-12)

    def test_splitting_above_cutoff(self):
        with pytest.raises(DomainError):
            rates.q_constant(E, P._replace(xi_perp=13.0))


class TestSpectralDensity:

    def test_inverse(self):
        eta = rates.eta_e_from_b_e(E)
        assert rates.b_e_from_eta_e(eta) == pytest.approx(E.b_e, rel=1e-12)

    def test_formula(self):
        eta = rates.eta_e_from_b_e(E)
        expected = (64 / math.pi * UNITS.hbar * eta ** 2 *
                    UNITS.k_boltzmann ** 5)
        assert expected == pytest.approx(1.32, rel=1e-12)

    def test_value(self):
        eta = rates.eta_e_from_b_e(E)
        expected = math.sqrt(math.pi * 1.32 / (
            64 * UNITS.hbar * UNITS.k_boltzmann ** 5))
        assert eta == pytest.approx(expected, rel=1e-12)
        assert eta == pytest.approx(1.43932e17, rel=1e-4)


class TestPhononParams:

    @pytest.mark.parametrize('kwargs', [
        {'b_e': 0.0}, {'omega_e': 0.0}, {'omega_e': 200.0}])
    def test_e_invariants(self, kwargs):
        with pytest.raises(Exception) as error:
            EPhononParams(**kwargs)
        assert list(kwargs)[0] in str(error.value)

    def test_a_invariants(self):
        with pytest.raises(Exception):
            APhononParams(omega_a=170.0)


class TestRateTable:

    def test_memoises(self):
        table = RateTable()
        first = table.w_down(295, E, P)
        assert table.w_down(295.0, E, P) == first
        assert table.info()['w_down'].hits == 1
        assert first == rates.w_down(295, E, P)

    def test_w_up(self):
        table = RateTable()
        assert table.w_up(295, E, P) == pytest.approx(
            rates.w_up(295, E, P), rel=1e-15)

    def test_clear(self):
        table = RateTable(maxsize=8)
        table.w_a(100, A)
        table.clear()
        assert table.info()['w_a'].currsize == 0
        assert repr(table) == 'RateTable(maxsize=8)'
