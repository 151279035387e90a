#!/usr/bin/env python3

"""
Tasas de Dispersión de Fonones.

Two-phonon Raman integrals and the rate laws derived from them: the
population transfer rates W↓ and W↑ between the ³E orbital branches (E
phonons), the pure dephasing rate W_A (A₁ phonons), the high temperature
closed form W↓ = Q·T² and the spectral density coefficient η_E.

The singular factors of both integrands are written through
b(z) = z/(e^z − 1), which is replaced by its Taylor series within 1e-3 of
z = 0. The integrands therefore never evaluate 0/0 at the removable end
points.

All rates are returned in Hz.
"""

###############################################################################
# Módulos Importados
###############################################################################

import collections
import functools
import logbook
import math
import numpy as np

from pynv import quadrature
from pynv.core import (
    ConfigError, DomainError, Temperature, UNITS, boltzmann_exponent,
    thermal_energy_mev)

###############################################################################
# Constantes Globales Y Variables
###############################################################################

log = logbook.Logger(__name__)

SERIES_RADIUS = 1e-3

###############################################################################
# Contenedores
###############################################################################


def _require(condition, field, message):
    if not condition:
        raise ConfigError(field, message)


class EPhononParams(collections.namedtuple(
        'EPhononParams', 'b_e omega_e', defaults=(1.32, 13.0))):
    """
    Acoplamiento con fonones E.

    b_e in Hz·K⁻⁵, cutoff omega_e in meV.
    """

    __slots__ = ()

    def __new__(cls, *args, **kwargs):
        self = super().__new__(cls, *args, **kwargs)
        _require(self.b_e > 0, 'b_e', 'must be positive')
        _require(
            0 < self.omega_e <= UNITS.debye_energy_reference, 'omega_e',
            'must lie in (0, {}] meV'.format(UNITS.debye_energy_reference))
        return self


class APhononParams(collections.namedtuple(
        'APhononParams', 'b_a omega_a', defaults=(24e-6, 37.0))):
    """
    Acoplamiento cuadrático con fonones A₁.

    b_a in Hz·K⁻⁷, cutoff omega_a in meV.
    """

    __slots__ = ()

    def __new__(cls, *args, **kwargs):
        self = super().__new__(cls, *args, **kwargs)
        _require(self.b_a > 0, 'b_a', 'must be positive')
        _require(
            0 < self.omega_a <= UNITS.debye_energy_reference, 'omega_a',
            'must lie in (0, {}] meV'.format(UNITS.debye_energy_reference))
        return self


class QuadratureSpec(collections.namedtuple(
        'QuadratureSpec', 'rel_tol abs_tol max_subdivisions',
        defaults=(1e-10, 1e-14, 200))):
    """Tolerancias de la cuadratura adaptativa."""

    __slots__ = ()

    def __new__(cls, *args, **kwargs):
        self = super().__new__(cls, *args, **kwargs)
        _require(self.rel_tol > 0, 'rel_tol', 'must be positive')
        _require(self.abs_tol > 0, 'abs_tol', 'must be positive')
        _require(
            int(self.max_subdivisions) == self.max_subdivisions and
            self.max_subdivisions >= 10, 'max_subdivisions',
            'must be an integer >= 10')
        return self


DEFAULT_QUAD = QuadratureSpec()

###############################################################################
# Integrandos
###############################################################################


def _b(z):
    """b(z) = z/(e^z − 1), con serie de Taylor cerca de cero."""
    z = np.asarray(z, dtype=float)
    near = np.abs(z) < SERIES_RADIUS
    with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
        exact = z / np.expm1(np.where(near, 1.0, z))
    z2 = z * z
    series = 1 - z / 2 + z2 / 12 - z2 * z2 / 720
    return np.where(near, series, exact)


def _integrand_e(x, x_perp):
    # x²eˣ(x−x⊥)²/[(eˣ−1)(e^{x−x⊥}−1)] = x·b(−x)·y·b(y), y = x − x⊥
    y = x - x_perp
    return x * _b(-x) * y * _b(y)


def _integrand_a(x):
    # eˣx⁶/(eˣ−1)² = x⁴·b(x)·b(−x)
    return x ** 4 * _b(x) * _b(-x)


def upper_limit(x_perp=0.0):
    """Límite superior que sustituye a infinito."""
    return max(50.0, 10 * x_perp + 50.0)

###############################################################################
# Integrales de Bose
###############################################################################


def bose_integral_e(x_perp, x_max=None, q=DEFAULT_QUAD, full_output=False):
    """
    Integral de Raman para fonones E.

    ∫_{x⊥}^{x_max} x²eˣ(x−x⊥)² / [(eˣ−1)(e^{x−x⊥}−1)] dx. x_max=None
    stands for infinity. With full_output the QuadResult is returned.
    """
    x_max = upper_limit(x_perp) if x_max is None else x_max
    if not 0 <= x_perp <= x_max:
        raise DomainError(
            'need 0 <= x_perp <= x_max, got x_perp={}, x_max={}'
            .format(x_perp, x_max))
    result = quadrature.integrate(
        functools.partial(_integrand_e, x_perp=x_perp), x_perp, x_max, q)
    return result if full_output else result.value


def bose_integral_a(x_max=None, q=DEFAULT_QUAD, full_output=False):
    """Integral ∫₀^{x_max} eˣx⁶/(eˣ−1)² dx para fonones A₁."""
    x_max = upper_limit() if x_max is None else x_max
    if not x_max >= 0:
        raise DomainError('x_max must be >= 0, got {}'.format(x_max))
    result = quadrature.integrate(_integrand_a, 0.0, x_max, q)
    return result if full_output else result.value

###############################################################################
# Leyes de Tasas
###############################################################################


def w_down(t, e, p, q=DEFAULT_QUAD, units=UNITS):
    """
    Tasa de transferencia W↓ en Hz.

    B_E·T⁵·∫_{x⊥}^{Ω_E/k_BT}; zero at T = 0 and whenever the splitting
    exceeds the cutoff.
    """
    t = Temperature.of(t)
    if t.kelvin == 0:
        return 0.0
    x_perp = boltzmann_exponent(t, p, units)
    x_max = e.omega_e / thermal_energy_mev(t, units)
    if x_perp >= x_max:
        log.debug('w_down: splitting above cutoff at {} K', t.kelvin)
        return 0.0
    return e.b_e * t.kelvin ** 5 * bose_integral_e(x_perp, x_max, q)


def w_up(t, e, p, q=DEFAULT_QUAD, units=UNITS):
    """W↑ = W↓·e^{−hξ⊥/k_BT} (balance detallado)."""
    x = boltzmann_exponent(t, p, units)
    return w_down(t, e, p, q, units) * math.exp(-x)


def w_a(t, a, q=DEFAULT_QUAD, units=UNITS):
    """Tasa de desfase puro W_A en Hz."""
    t = Temperature.of(t)
    if t.kelvin == 0:
        return 0.0
    x_max = a.omega_a / thermal_energy_mev(t, units)
    return a.b_a * t.kelvin ** 7 * bose_integral_a(x_max, q)


def _bracket(e, p):
    s = p.xi_perp / e.omega_e
    if s >= 1:
        raise DomainError(
            'closed form needs h·xi_perp < omega_e ({} >= {} meV)'
            .format(p.xi_perp, e.omega_e))
    return (1 - s) ** 2 * (1 + s / 2)


def q_constant(e, p, units=UNITS):
    """
    Coeficiente Q de la ley W↓ = Q·T², en Hz·K⁻².

    Q = (B_E/3)(Ω_E/k_B)³(1 − hξ⊥/Ω_E)²(1 + hξ⊥/2Ω_E), the limit of
    W↓/T² when both x⊥ and Ω_E/k_BT are small.
    """
    cutoff_kelvin = e.omega_e * 1e-3 / units.k_boltzmann
    return e.b_e / 3 * cutoff_kelvin ** 3 * _bracket(e, p)


def q_rescaled(q, p_from, p_to, e):
    """
    Reescala un Q ajustado a otro desdoblamiento ξ⊥.

    Only the strain bracket of the closed form depends on ξ⊥, so the ratio
    of brackets carries Q between centres with different strain.
    """
    return q * _bracket(e, p_to) / _bracket(e, p_from)


def w_down_from_q(t, q):
    """W↓ = Q·T² a partir de un Q ajustado (mismas unidades que Q)."""
    return q * Temperature.of(t).kelvin ** 2

###############################################################################
# Densidad Espectral
###############################################################################


def eta_e_from_b_e(e, units=UNITS):
    """
    Coeficiente η_E de la densidad espectral J_E(ω) ≈ η_E·ω³.

    Inverts B_E = (64/π)·ℏ·η_E²·k_B⁵ with ℏ in eV·s and k_B in eV/K, so
    η_E comes out in eV⁻³·s⁻¹.
    """
    if not e.b_e > 0:
        raise DomainError('b_e must be positive')
    return math.sqrt(
        math.pi * e.b_e / (64 * units.hbar * units.k_boltzmann ** 5))


def b_e_from_eta_e(eta, units=UNITS):
    """Relación directa B_E = (64/π)·ℏ·η_E²·k_B⁵ en Hz·K⁻⁵."""
    return 64 / math.pi * units.hbar * eta ** 2 * units.k_boltzmann ** 5

###############################################################################
# Memoria de Tasas
###############################################################################


class RateTable:
    """
    Tabla de memoria para las tasas.

    Exact-match lookup keyed by (T, parameters, quadrature spec). The
    fitter evaluates the same temperature grids over and over; the
    underlying functools.lru_cache is safe under concurrent use.
    """

    def __init__(self, maxsize=4096):
        self.maxsize = maxsize
        self._w_down = functools.lru_cache(maxsize)(self._compute_w_down)
        self._w_a = functools.lru_cache(maxsize)(self._compute_w_a)

    def __repr__(self):
        return '{}(maxsize={})'.format(self.__class__.__name__, self.maxsize)

    @staticmethod
    def _compute_w_down(kelvin, e, p, q):
        return w_down(kelvin, e, p, q)

    @staticmethod
    def _compute_w_a(kelvin, a, q):
        return w_a(kelvin, a, q)

    def w_down(self, t, e, p, q=DEFAULT_QUAD):
        return self._w_down(Temperature.of(t).kelvin, e, p, q)

    def w_up(self, t, e, p, q=DEFAULT_QUAD):
        return self.w_down(t, e, p, q) * math.exp(-boltzmann_exponent(t, p))

    def w_a(self, t, a, q=DEFAULT_QUAD):
        return self._w_a(Temperature.of(t).kelvin, a, q)

    def info(self):
        return {'w_down': self._w_down.cache_info(),
                'w_a': self._w_a.cache_info()}

    def clear(self):
        self._w_down.cache_clear()
        self._w_a.cache_clear()

###############################################################################
