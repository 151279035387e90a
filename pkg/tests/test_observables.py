#!/usr/bin/env python3

###############################################################################
# Module Imports
###############################################################################

import math
import numpy as np
import pytest

from pynv import observables as obs
from pynv import rates
from pynv.core import DomainError, beta_factor, odmr_splitting
from pynv.observables import (
    Center, ODMRModelParams, OpticalRates, VisibilityParams)

###############################################################################

CENTER = Center()
CENTER0 = CENTER.at_zero_strain()
ODMR = ODMRModelParams()
Q_FIT = 0.83e6


class TestOpticalRates:

    def test_gamma_one(self):
        assert obs.gamma_one(OpticalRates()) == pytest.approx(22.222, abs=1e-3)

    def test_gamma_infinity(self):
        assert obs.gamma_infinity(OpticalRates()) == pytest.approx(
            14.324, abs=1e-3)

    def test_gamma_one_domain(self):
        with pytest.raises(DomainError):
            obs.gamma_one(OpticalRates(k_rad=0.0, k_isc=0.0))

    def test_gamma_infinity_table(self):
        center = CENTER._replace(gamma_inf_table=((300, 14.0), (500, 18.0)))
        assert obs.gamma_infinity_at(400, center) == pytest.approx(16.0)
        assert obs.gamma_infinity_at(400, CENTER) == obs.gamma_infinity(
            CENTER.optical)

    def test_negative_rates(self):
        with pytest.raises(Exception):
            OpticalRates(k_rad=-1.0)


class TestMotionalNarrowing:

    def test_quadratic_formula(self):
        t = 295.0
        w = Q_FIT * t ** 2 / 1e6
        expected = beta_factor(t, CENTER.spin) * 2 * math.pi * 775 ** 2 / w
        value = obs.gamma_mn(t, CENTER, 'quadratic', Q_FIT)
        assert value == pytest.approx(expected, rel=1e-12)
        assert value == pytest.approx(56.5, abs=0.1)

    @pytest.mark.parametrize('t', [295.0, 400.0, 550.0])
    def test_exact_against_quadratic(self, t):
        exact = obs.gamma_mn(t, CENTER, 'exact')
        quadratic = obs.gamma_mn(t, CENTER, 'quadratic')
        assert exact == pytest.approx(quadratic, rel=0.10)

    @pytest.mark.parametrize('t', [345.0, 450.0, 550.0])
    def test_exact_against_quadratic_unstrained(self, t):
        exact = obs.gamma_mn(t, CENTER0, 'exact')
        quadratic = obs.gamma_mn(t, CENTER0, 'quadratic')
        assert exact == pytest.approx(quadratic, rel=0.015)

    def test_zero_temperature(self):
        with pytest.raises(DomainError):
            obs.gamma_mn(0, CENTER)

    def test_unknown_mode(self):
        with pytest.raises(DomainError):
            obs.w_down_mhz(300, CENTER, mode='cubic')

    def test_fast_exchange_ratio(self):
        assert obs.fast_exchange_ratio(295, CENTER) > 10

    def test_zero_rate(self):
        with pytest.raises(DomainError):
            obs.motional_narrowing_width(0.0, 1.0, 775.0)

    def test_homogeneous_width(self):
        t = 350.0
        assert obs.homogeneous_width(t, CENTER) == pytest.approx(
            obs.gamma_infinity(CENTER.optical) + obs.gamma_mn(t, CENTER))


class TestODMR:

    def test_zero_power(self):
        t = 300.0
        gamma_h = obs.homogeneous_width(t, CENTER)
        assert obs.odmr_linewidth(0, t, ODMR, CENTER) == pytest.approx(
            ODMR.gamma_inh + gamma_h)
        assert obs.odmr_contrast(0, t, ODMR, CENTER) == 0.0

    @pytest.mark.parametrize('t', [295.0, 420.0, 550.0])
    def test_half_saturation(self, t):
        p = obs.half_saturation_power(t, ODMR, CENTER, 'quadratic', Q_FIT)
        contrast = obs.odmr_contrast(p, t, ODMR, CENTER, 'quadratic', Q_FIT)
        assert contrast == pytest.approx(ODMR.c_max / 2, rel=1e-12)

    def test_saturation(self):
        assert obs.odmr_contrast(1e9, 300, ODMR, CENTER) == pytest.approx(
            ODMR.c_max, rel=1e-6)

    def test_gamma1_override(self):
        m = ODMR._replace(gamma1=10.0)
        t = 300.0
        gamma_h = obs.homogeneous_width(t, CENTER)
        drive = 4 * math.pi * m.kappa * 0.2
        assert obs.odmr_contrast(0.2, t, m, CENTER) == pytest.approx(
            m.c_max * drive / (drive + 10.0 * gamma_h))

    def test_power_broadening(self):
        widths = [obs.odmr_linewidth(p, 300, ODMR, CENTER)
                  for p in (0.0, 0.05, 0.2, 0.4)]
        assert all(a < b for a, b in zip(widths, widths[1:]))

    def test_negative_power(self):
        with pytest.raises(DomainError):
            obs.odmr_linewidth(-0.1, 300, ODMR, CENTER)

    def test_narrowing_with_temperature(self):
        w315 = obs.odmr_linewidth(0.44, 315, ODMR, CENTER)
        w455 = obs.odmr_linewidth(0.44, 455, ODMR, CENTER)
        assert w455 < w315

    def test_invalid_params(self):
        with pytest.raises(Exception):
            ODMRModelParams(c_max=1.5)


class TestSpectrum:

    def test_lorentzian(self):
        f = np.array([-5.0, 0.0, 5.0])
        assert np.allclose(obs.lorentzian_dip(f, 0.0, 10.0), [0.5, 1, 0.5])

    def test_centre_is_d_parallel(self):
        assert obs.odmr_centre(300, CENTER) == pytest.approx(1420.0)

    def test_symmetric_without_slope(self):
        t = 300.0
        f0 = obs.odmr_centre(t, CENTER)
        offsets = np.linspace(1, 300, 50)
        grid = np.concatenate([f0 - offsets[::-1], f0 + offsets])
        s = obs.odmr_spectrum(grid, t, 0.1, ODMR, CENTER)
        assert np.allclose(s[:50], s[50:][::-1], rtol=1e-12)

    def test_dip_depth(self):
        t, p_rf = 300.0, 0.1
        f0 = obs.odmr_centre(t, CENTER)
        split = odmr_splitting(t, CENTER.spin)
        fwhm = obs.odmr_linewidth(p_rf, t, ODMR, CENTER)
        contrast = obs.odmr_contrast(p_rf, t, ODMR, CENTER)
        f = np.array([f0 - split / 2])
        other = obs.lorentzian_dip(f, f0 + split / 2, fwhm)[0]
        s = obs.odmr_spectrum(f, t, p_rf, ODMR, CENTER, baseline=(0.0, 2.0))
        assert s[0] == pytest.approx(2.0 * (1 - contrast * (1 + other)))

    def test_baseline_far_away(self):
        f = np.array([-1e6, 1e6]) + 1420.0
        s = obs.odmr_spectrum(f, 300, 0.1, ODMR, CENTER, baseline=(1e-6, 1.0))
        assert s == pytest.approx([0.0, 2.0], abs=1e-6)

    def test_grid_must_increase(self):
        with pytest.raises(DomainError):
            obs.odmr_spectrum([1.0, 1.0], 300, 0.1, ODMR, CENTER)


class TestZPL:

    def test_zero_temperature_limit(self):
        assert obs.zpl_width(0, CENTER0) == pytest.approx(16.2)
        assert obs.zpl_width(1, CENTER0) == pytest.approx(16.2, abs=0.01)

    def test_monotone(self):
        widths = [obs.zpl_width(t, CENTER0) for t in np.linspace(2, 300, 30)]
        assert all(a < b for a, b in zip(widths, widths[1:]))

    def test_scale_gap(self):
        t = 295.0
        w_down = rates.w_down(t, CENTER0.e_phonon, CENTER0.spin) / 1e6
        assert w_down / (2 * math.pi) < obs.zpl_width(t, CENTER0) / 10

    def test_components(self):
        t = 40.0
        w_down = rates.w_down(t, CENTER0.e_phonon, CENTER0.spin) / 1e6
        w_a = rates.w_a(t, CENTER0.a_phonon) / 1e6
        assert obs.zpl_width(t, CENTER0) == pytest.approx(
            w_down / (2 * math.pi) + w_a / math.pi + 16.2, rel=1e-12)

    def test_table_gives_same_value(self):
        table = rates.RateTable()
        assert obs.zpl_width(80, CENTER0, table) == obs.zpl_width(80, CENTER0)


class TestVisibility:

    @pytest.mark.parametrize('sign', [1, -1])
    def test_zero_temperature(self, sign):
        v = VisibilityParams(sign_branch=sign)
        assert obs.visibility(0, v, CENTER0) == pytest.approx(
            sign * 0.6 / 1.4, abs=1e-12)
        assert abs(obs.visibility(0, v, CENTER0)) == pytest.approx(
            0.4286, abs=1e-4)

    def test_branches_are_antisymmetric_without_strain(self):
        plus = obs.visibility(15, VisibilityParams(sign_branch=1), CENTER0)
        minus = obs.visibility(15, VisibilityParams(sign_branch=-1), CENTER0)
        assert plus == pytest.approx(-minus, rel=1e-12)

    def test_fades_with_temperature(self):
        v = VisibilityParams()
        values = [obs.visibility(t, v, CENTER0) for t in (2, 10, 20, 40)]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert values[-1] < 0.05

    @pytest.mark.parametrize('kwargs', [
        {'a_branching': 1.2}, {'r_rate': 0.0}, {'sign_branch': 0}])
    def test_invariants(self, kwargs):
        with pytest.raises(Exception):
            VisibilityParams(**kwargs)


class TestDiagnostics:

    def test_room_temperature(self):
        report = obs.room_temperature_diagnostics(CENTER, Q_FIT)
        assert report['gamma_mn_quadratic_MHz'] == pytest.approx(56.5, abs=0.1)
        assert report['gamma_h_quadratic_MHz'] == pytest.approx(
            report['gamma_mn_quadratic_MHz'] + report['gamma_infinity_MHz'])
        assert report['quoted_MHz'] == 55.0
        assert abs(report['deviation_gamma_mn']) < 0.05


class TestLimits:

    def test_gamma_mn_decreasing(self):
        temps = np.arange(295, 555, 5.0)
        values = [obs.gamma_mn(t, CENTER) for t in temps]
        assert all(a > b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize('t', [295.0, 450.0])
    def test_power_broadening_asymptote(self, t):
        gamma_h = obs.homogeneous_width(t, CENTER)
        coefficient = math.sqrt(
            4 * math.pi * ODMR.kappa * gamma_h / obs.gamma_one(CENTER.optical))
        powers = np.geomspace(1e4, 1e6, 9)
        widths = [obs.odmr_linewidth(p, t, ODMR, CENTER) for p in powers]
        slope = np.polyfit(np.sqrt(powers), widths, 1)[0]
        assert slope == pytest.approx(coefficient, rel=1e-3)
        excess = widths[-1] - ODMR.gamma_inh
        assert excess / math.sqrt(powers[-1]) == pytest.approx(
            coefficient, rel=1e-4)

    @pytest.mark.parametrize('t', [450.0, 550.0])
    def test_resolved_minima(self, t):
        m = ODMR._replace(gamma_inh=1.0)
        p_rf = 1e-3
        split = odmr_splitting(t, CENTER.spin)
        fwhm = obs.odmr_linewidth(p_rf, t, m, CENTER)
        assert split >= 2 * fwhm
        f0 = obs.odmr_centre(t, CENTER)
        grid = np.linspace(f0 - split, f0 + split, 40001)
        s = obs.odmr_spectrum(grid, t, p_rf, m, CENTER)
        half = grid.size // 2
        low = grid[np.argmin(s[:half])]
        high = grid[half + np.argmin(s[half:])]
        assert high - low == pytest.approx(split, abs=0.02 * fwhm)

    @pytest.mark.parametrize('sign', [1, -1])
    def test_visibility_magnitude_decreasing(self, sign):
        v = VisibilityParams(sign_branch=sign)
        values = [abs(obs.visibility(t, v, CENTER0))
                  for t in np.arange(2, 302, 2.0)]
        assert all(a > b for a, b in zip(values, values[1:]))


class TestOdmrQ:

    def test_same_strain(self):
        t = 320.0
        center = CENTER._replace(spin=CENTER.spin._replace(xi_perp=4.6))
        assert obs.w_down_from_odmr_q(t, center) == pytest.approx(
            0.83 * t ** 2, rel=1e-12)

    def test_rescaled_to_zero_strain(self):
        t = 400.0
        expected = rates.q_rescaled(
            Q_FIT, CENTER.spin, CENTER0.spin, CENTER0.e_phonon) * t ** 2
        value = obs.w_down_from_odmr_q(t, CENTER0)
        assert value == pytest.approx(expected / 1e6, rel=1e-12)
        assert value / t ** 2 == pytest.approx(1.688, abs=2e-3)

    def test_consistency(self):
        report = obs.q_consistency(CENTER)
        assert report['q_zpl_MHz_per_K2'] == pytest.approx(0.7427, abs=2e-3)
        assert report['q_odmr_MHz_per_K2'] == pytest.approx(0.83)
        assert report['relative_deviation'] == pytest.approx(-0.105, abs=3e-3)
        assert report['z_score'] == pytest.approx(
            (report['q_zpl_MHz_per_K2'] - 0.83) / 0.06, rel=1e-12)
        assert report['consistent']
        assert report['q_odmr_zero_strain_MHz_per_K2'] == pytest.approx(
            1.688, abs=2e-3)

    def test_inconsistent_phonon_parameters(self):
        center = CENTER._replace(e_phonon=CENTER.e_phonon._replace(b_e=2.6))
        report = obs.q_consistency(center)
        assert report['relative_deviation'] > 0.30
        assert not report['consistent']
