#!/usr/bin/env python3

"""
Modelos de Observables.

Forward models for every measured quantity: the motional-narrowing
linewidth, the power broadened ODMR linewidth and contrast, the ODMR
spectrum as a sum of two Lorentzian dips on a linear background, the ZPL
width and the ZPL polarisation visibility.

The observables of one NV centre depend on several parameter groups at
once; they travel together in a Center. Widths are full widths at half
maximum and every frequency or rate returned here is in MHz.
"""

###############################################################################
# Módulos Importados
###############################################################################

import collections
import logbook
import math
import numpy as np

from pynv import rates
from pynv.core import (
    ConfigError, DomainError, SpinParams, Temperature, UNITS, beta_factor,
    fine_structure_levels, odmr_splitting, reduction_factor)
from pynv.rates import APhononParams, EPhononParams, DEFAULT_QUAD

###############################################################################
# Constantes Globales Y Variables
###############################################################################

log = logbook.Logger(__name__)

ROOM_TEMPERATURE = 295.0
QUOTED_ROOM_WIDTH = 55.0
ODMR_Q = 0.83e6
ODMR_Q_ERROR = 0.06e6
ODMR_XI_PERP = 4.6
Q_AGREEMENT = 0.30
FAST_EXCHANGE_WARNING = 10.0

###############################################################################
# Contenedores
###############################################################################


def _require(condition, field, message):
    if not condition:
        raise ConfigError(field, message)


class OpticalRates(collections.namedtuple(
        'OpticalRates', 'k_rad k_isc gamma0', defaults=(20.0, 50.0, 16.2))):
    """Tasa radiativa, tasa ISC y anchura residual de la ZPL, en MHz."""

    __slots__ = ()

    def __new__(cls, *args, **kwargs):
        self = super().__new__(cls, *args, **kwargs)
        for field, value in zip(self._fields, self):
            _require(value >= 0, field, 'must be >= 0')
        return self


class ODMRModelParams(collections.namedtuple(
        'ODMRModelParams', 'gamma_inh c_max kappa gamma1',
        defaults=(33.0, 0.16, 210.0, None))):
    """
    Parámetros de la saturación ODMR.

    gamma_inh in MHz, c_max as a fraction, kappa in MHz²/W. gamma1 in MHz
    overrides the value derived from the optical rates when not None.
    """

    __slots__ = ()

    def __new__(cls, *args, **kwargs):
        self = super().__new__(cls, *args, **kwargs)
        _require(self.gamma_inh >= 0, 'gamma_inh', 'must be >= 0')
        _require(0 <= self.c_max <= 1, 'c_max', 'must lie in [0, 1]')
        _require(self.kappa >= 0, 'kappa', 'must be >= 0')
        _require(
            self.gamma1 is None or self.gamma1 >= 0, 'gamma1',
            'must be >= 0')
        return self


class VisibilityParams(collections.namedtuple(
        'VisibilityParams', 'a_branching r_rate sign_branch',
        defaults=(0.40, 80.0, 1))):
    """Parámetros del modelo de visibilidad de polarización de la ZPL."""

    __slots__ = ()

    def __new__(cls, *args, **kwargs):
        self = super().__new__(cls, *args, **kwargs)
        _require(
            0 <= self.a_branching <= 1, 'a_branching', 'must lie in [0, 1]')
        _require(self.r_rate > 0, 'r_rate', 'must be positive')
        _require(self.sign_branch in (1, -1), 'sign_branch', 'must be +1 or -1')
        return self


class Center(collections.namedtuple(
        'Center', 'spin e_phonon a_phonon optical quad gamma_inf_table',
        defaults=(SpinParams(), EPhononParams(), APhononParams(),
                  OpticalRates(), DEFAULT_QUAD, None))):
    """
    Un centro NV con todos sus grupos de parámetros.

    gamma_inf_table optionally replaces the temperature independent Γ∞ by
    a tuple of (T, Γ∞) pairs interpolated linearly.
    """

    __slots__ = ()

    def at_zero_strain(self):
        """El mismo centro con ξ⊥ = 0."""
        return self._replace(spin=self.spin._replace(xi_perp=0.0))

###############################################################################
# Tasas en MHz
###############################################################################


def _w_down(t, center, table=None):
    source = rates if table is None else table
    return source.w_down(t, center.e_phonon, center.spin, center.quad) / 1e6


def _w_up(t, center, table=None):
    source = rates if table is None else table
    return source.w_up(t, center.e_phonon, center.spin, center.quad) / 1e6


def _w_a(t, center, table=None):
    source = rates if table is None else table
    return source.w_a(t, center.a_phonon, center.quad) / 1e6


def w_down_mhz(t, center, mode='exact', q=None, table=None):
    """
    W↓ en MHz.

    mode='exact' integrates the Raman integral; mode='quadratic' uses
    Q·T² with Q in Hz·K⁻², taken from the closed form when q is None.
    """
    if mode == 'exact':
        return _w_down(t, center, table)
    if mode == 'quadratic':
        q = rates.q_constant(center.e_phonon, center.spin) if q is None else q
        return rates.w_down_from_q(t, q) / 1e6
    raise DomainError('unknown mode {!r}'.format(mode))

###############################################################################
# Anchuras Homogéneas
###############################################################################


def gamma_infinity(o):
    """Γ∞ = (k + 0.5·k_ISC)/π."""
    return (o.k_rad + 0.5 * o.k_isc) / math.pi


def gamma_one(o):
    """Tasa efectiva de relajación de espín γ₁ = k·k_ISC/(k + 0.5·k_ISC)."""
    denominator = o.k_rad + 0.5 * o.k_isc
    if denominator <= 0:
        raise DomainError('gamma_one needs k_rad + 0.5*k_isc > 0')
    return o.k_rad * o.k_isc / denominator


def gamma_infinity_at(t, center):
    """Γ∞ a la temperatura t, usando la tabla del centro si existe."""
    if not center.gamma_inf_table:
        return gamma_infinity(center.optical)
    table = np.asarray(center.gamma_inf_table, dtype=float)
    return float(np.interp(Temperature.of(t).kelvin, table[:, 0], table[:, 1]))


def motional_narrowing_width(w_down, beta, d_perp):
    """β·2π·D⊥²/W↓, todas las frecuencias en MHz."""
    if not w_down > 0:
        raise DomainError('motional narrowing needs W_down > 0')
    return beta * 2 * math.pi * d_perp ** 2 / w_down


def fast_exchange_ratio(t, center, mode='exact', q=None, table=None):
    """W↓/(2D⊥); el intercambio rápido exige un valor grande."""
    return w_down_mhz(t, center, mode, q, table) / (2 * center.spin.d_perp)


def gamma_mn(t, center, mode='exact', q=None, table=None):
    """
    Anchura por estrechamiento de movimiento Γ_MN en MHz.

    Γ_MN = β(T)·2π·D⊥²/W↓ in the fast exchange approximation. A warning is
    logged when W↓/(2D⊥) drops below 10.
    """
    t = Temperature.of(t)
    if t.kelvin == 0:
        raise DomainError('gamma_mn is undefined at T = 0')
    w = w_down_mhz(t, center, mode, q, table)
    ratio = w / (2 * center.spin.d_perp)
    if ratio < FAST_EXCHANGE_WARNING:
        log.warning(
            'fast exchange ratio W_down/2D_perp = {:.3g} at {} K', ratio,
            t.kelvin)
    return motional_narrowing_width(
        w, beta_factor(t, center.spin), center.spin.d_perp)


def homogeneous_width(t, center, mode='exact', q=None, table=None):
    """Γ_h = Γ∞ + Γ_MN(T)."""
    return (gamma_infinity_at(t, center) +
            gamma_mn(t, center, mode, q, table))

###############################################################################
# ODMR
###############################################################################


def _gamma1(m, center):
    return gamma_one(center.optical) if m.gamma1 is None else m.gamma1


def odmr_linewidth(p_rf, t, m, center, mode='exact', q=None, table=None):
    """
    Anchura ODMR ensanchada por potencia, en MHz.

    Γ_inh + Γ_h·(1 + 4πκP/(Γ_h·γ₁))^½ with P the RF power in W.
    """
    if p_rf < 0:
        raise DomainError('RF power must be >= 0')
    gamma_h = homogeneous_width(t, center, mode, q, table)
    drive = 4 * math.pi * m.kappa * p_rf / (gamma_h * _gamma1(m, center))
    return m.gamma_inh + gamma_h * math.sqrt(1 + drive)


def odmr_contrast(p_rf, t, m, center, mode='exact', q=None, table=None):
    """Contraste ODMR C_max·4πκP/(4πκP + γ₁Γ_h)."""
    if p_rf < 0:
        raise DomainError('RF power must be >= 0')
    gamma_h = homogeneous_width(t, center, mode, q, table)
    drive = 4 * math.pi * m.kappa * p_rf
    if drive == 0:
        return 0.0
    return m.c_max * drive / (drive + _gamma1(m, center) * gamma_h)


def half_saturation_power(t, m, center, mode='exact', q=None, table=None):
    """Potencia RF (W) a la que el contraste vale C_max/2."""
    gamma_h = homogeneous_width(t, center, mode, q, table)
    return _gamma1(m, center) * gamma_h / (4 * math.pi * m.kappa)


def lorentzian_dip(f, centre, fwhm):
    """Lorentziana de altura unidad y anchura completa fwhm."""
    half = fwhm / 2
    return half ** 2 / ((np.asarray(f, dtype=float) - centre) ** 2 + half ** 2)


def odmr_centre(t, center):
    """Centro f₀ de las dos transiciones de espín, en MHz."""
    levels = fine_structure_levels(reduction_factor(t, center.spin),
                                   center.spin)
    return float(np.mean(levels.transitions))


def odmr_spectrum(f_grid, t, p_rf, m, center, baseline=(0.0, 1.0),
                  mode='exact', q=None, amplitudes=(1.0, 1.0), table=None):
    """
    Espectro ODMR: dos lorentzianas restadas a un fondo lineal.

    baseline is (slope per MHz, offset) about f₀; each dip has the ODMR
    linewidth as FWHM and removes the ODMR contrast times its amplitude
    as a fraction of the local background.
    """
    f = np.asarray(f_grid, dtype=float)
    if f.ndim != 1 or not f.size:
        raise DomainError('frequency grid must be a nonempty 1-d array')
    if np.any(np.diff(f) <= 0):
        raise DomainError('frequency grid must be strictly increasing')
    centre = odmr_centre(t, center)
    splitting = odmr_splitting(t, center.spin)
    fwhm = odmr_linewidth(p_rf, t, m, center, mode, q, table)
    contrast = odmr_contrast(p_rf, t, m, center, mode, q, table)
    slope, offset = baseline
    background = offset + slope * (f - centre)
    dips = (amplitudes[0] * lorentzian_dip(f, centre - splitting / 2, fwhm) +
            amplitudes[1] * lorentzian_dip(f, centre + splitting / 2, fwhm))
    return background * (1 - contrast * dips)

###############################################################################
# ZPL
###############################################################################


def zpl_width(t, center, table=None):
    """
    Anchura de la ZPL en MHz.

    W↓/2π + W_A/π + γ₀, with W↓ at the strain of the given centre (use
    Center.at_zero_strain for the bulk comparison).
    """
    t = Temperature.of(t)
    return (_w_down(t, center, table) / (2 * math.pi) +
            _w_a(t, center, table) / math.pi + center.optical.gamma0)


def w_down_from_odmr_q(t, center, q=ODMR_Q, xi_fit=ODMR_XI_PERP):
    """
    W↓ en MHz que implica un Q ajustado a datos ODMR.

    q in Hz·K⁻² belongs to a centre with h·ξ⊥ = xi_fit meV; it is carried
    to the strain of the given centre with rates.q_rescaled before Q·T².
    """
    q_here = rates.q_rescaled(
        q, center.spin._replace(xi_perp=xi_fit), center.spin,
        center.e_phonon)
    return rates.w_down_from_q(t, q_here) / 1e6


def visibility(t, v, center, table=None):
    """
    Visibilidad de polarización de la ZPL.

    V = (W↑ − W↓ ± r(1−a)/(1+a))/(W↓ + W↑ + r), sign from v.sign_branch.
    """
    t = Temperature.of(t)
    down, up = _w_down(t, center, table), _w_up(t, center, table)
    branch = v.sign_branch * v.r_rate * (1 - v.a_branching) / (
        1 + v.a_branching)
    return (up - down + branch) / (down + up + v.r_rate)

###############################################################################
# Diagnósticos
###############################################################################


def room_temperature_diagnostics(center, q=None, t=ROOM_TEMPERATURE):
    """
    Componentes de la anchura homogénea a temperatura ambiente.

    Reports Γ_MN (quadratic and exact), Γ∞ and their sum next to the
    quoted 55 MHz, without choosing which reading the quoted value refers
    to.
    """
    quadratic = gamma_mn(t, center, 'quadratic', q)
    exact = gamma_mn(t, center, 'exact')
    g_inf = gamma_infinity_at(t, center)
    return collections.OrderedDict([
        ('temperature_K', float(t)),
        ('gamma_mn_quadratic_MHz', quadratic),
        ('gamma_mn_exact_MHz', exact),
        ('gamma_infinity_MHz', g_inf),
        ('gamma_h_quadratic_MHz', g_inf + quadratic),
        ('quoted_MHz', QUOTED_ROOM_WIDTH),
        ('deviation_gamma_mn', quadratic / QUOTED_ROOM_WIDTH - 1),
        ('deviation_gamma_h', (g_inf + quadratic) / QUOTED_ROOM_WIDTH - 1)])

###############################################################################


def q_consistency(center, q=ODMR_Q, q_error=ODMR_Q_ERROR,
                  xi_fit=ODMR_XI_PERP, units=UNITS):
    """
    Compara el Q de los parámetros de la ZPL con el Q ajustado en ODMR.

    The closed form Q is evaluated from the E-phonon parameters of the
    centre at the strain of the ODMR fit. Q values in MHz·K⁻².
    """
    spin = center.spin._replace(xi_perp=xi_fit)
    computed = rates.q_constant(center.e_phonon, spin, units) / 1e6
    fitted, error = q / 1e6, q_error / 1e6
    deviation = computed / fitted - 1
    log.debug('Q from ZPL parameters {:.4g} vs ODMR {:.4g} MHz/K^2',
              computed, fitted)
    return collections.OrderedDict([
        ('xi_perp_meV', xi_fit),
        ('q_zpl_MHz_per_K2', computed),
        ('q_odmr_MHz_per_K2', fitted),
        ('q_odmr_error_MHz_per_K2', error),
        ('relative_deviation', deviation),
        ('z_score', (computed - fitted) / error if error else math.nan),
        ('tolerance', Q_AGREEMENT),
        ('consistent', abs(deviation) <= Q_AGREEMENT),
        ('q_odmr_zero_strain_MHz_per_K2', rates.q_rescaled(
            fitted, spin, spin._replace(xi_perp=0.0), center.e_phonon))])
