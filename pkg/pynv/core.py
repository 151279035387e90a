#!/usr/bin/env python3

"""

Constantes, Unidades y Estructura Fina

pynv builds every observable on top of a handful of physical constants and
the temperature dependent fine structure of the NV centre's ³E level. This
module holds those foundations: the unit ledger, the parameter containers
shared by the other modules, the exception hierarchy of the package, and the
dynamically averaged spin Hamiltonian together with the ODMR splitting it
implies.

Canonical internal units are kelvin for temperatures, meV for energies and
MHz for the fine-structure constants. Phonon rates are computed in Hz by
pynv.rates; conversions between energies and frequencies only go through
UnitConstants.
"""


###############################################################################
# Modulos Importados
###############################################################################

import collections
import logbook
import math
import numpy as np

###############################################################################
# Constantes Globales Y Variables
###############################################################################

log = logbook.Logger(__name__)

###############################################################################
# Excepciones
###############################################################################


class PynvError(Exception):
    """Base de todos los errores del paquete."""


class DomainError(PynvError, ValueError):
    """Un argumento viola el dominio o la precondición de una operación."""


class ToleranceError(PynvError, ArithmeticError):
    """La cuadratura agotó sus subdivisiones sin alcanzar la tolerancia."""


class ConfigError(PynvError, ValueError):
    """
    Configuración inválida.

    The offending field is kept in ``field`` so that the command line can
    name it in its message.
    """

    def __init__(self, field, message):
        super().__init__('{}: {}'.format(field, message))
        self.field = field


class RegimeError(PynvError, ValueError):
    """Los parámetros del oráculo estocástico no están en intercambio rápido."""


class DecayError(PynvError):
    """La coherencia no decae lo suficiente dentro de la ventana temporal."""


class AliasingError(PynvError):
    """La frecuencia de salto excede la frecuencia de Nyquist de la malla."""


class ModelError(PynvError, KeyError):
    """Tipo de serie desconocido o parámetro ausente."""

    def __str__(self):
        return str(self.args[0]) if self.args else ''


class SchemaError(PynvError, ValueError):
    """Un archivo CSV no respeta el esquema de su tipo de serie."""


class ParseError(PynvError, ValueError):
    """El archivo de configuración no es un documento JSON válido."""


class OutputError(PynvError, OSError):
    """No se pudo leer o escribir un archivo."""

###############################################################################
# Contenedores
###############################################################################


def _require(condition, field, message):
    if not condition:
        raise ConfigError(field, message)


class UnitConstants(collections.namedtuple(
        'UnitConstants', 'h_planck k_boltzmann debye_energy_reference',
        defaults=(4.135667696e-15, 8.617333262e-5, 168.0))):
    """
    Constantes físicas.

    h_planck in eV·s, k_boltzmann in eV/K (CODATA 2018) and the diamond
    Debye energy in meV, which only bounds the phonon cutoffs.
    """

    __slots__ = ()

    def __new__(cls, *args, **kwargs):
        self = super().__new__(cls, *args, **kwargs)
        for field, value in zip(self._fields, self):
            _require(
                math.isfinite(value) and value > 0, field,
                'must be strictly positive')
        return self

    @property
    def hbar(self):
        """Constante de Planck reducida en eV·s."""
        return self.h_planck / (2 * math.pi)


UNITS = UnitConstants()


class SpinParams(collections.namedtuple(
        'SpinParams', 'd_parallel d_perp a_hyperfine xi_perp',
        defaults=(1420.0, 775.0, 40.0, 4.6))):
    """
    Parámetros de la estructura fina del nivel ³E.

    d_parallel, d_perp and a_hyperfine are frequencies in MHz; xi_perp is
    the strain splitting expressed as the energy h·ξ⊥ in meV.
    """

    __slots__ = ()

    def __new__(cls, *args, **kwargs):
        self = super().__new__(cls, *args, **kwargs)
        _require(self.d_perp > 0, 'd_perp', 'must be positive')
        _require(self.a_hyperfine >= 0, 'a_hyperfine', 'must be >= 0')
        _require(self.xi_perp >= 0, 'xi_perp', 'must be >= 0')
        _require(
            self.d_parallel > self.d_perp, 'd_parallel',
            'must exceed d_perp')
        return self


class Temperature(collections.namedtuple('Temperature', 'kelvin')):
    """Temperatura en kelvin."""

    __slots__ = ()

    def __new__(cls, kelvin):
        kelvin = float(kelvin)
        if not kelvin >= 0 or math.isinf(kelvin):
            raise DomainError(
                'temperature must be finite and >= 0 K, got {}'.format(kelvin))
        return super().__new__(cls, kelvin)

    @classmethod
    def of(cls, value):
        """Acepta una Temperature o un número en kelvin."""
        return value if isinstance(value, cls) else cls(value)

###############################################################################
# Conversiones de Unidades
###############################################################################


def energy_mev_to_frequency_hz(e, units=UNITS):
    """Convierte una energía en meV a la frecuencia equivalente en Hz."""
    return e * 1e-3 / units.h_planck


def frequency_hz_to_energy_mev(f, units=UNITS):
    """Inversa exacta de energy_mev_to_frequency_hz."""
    return f * units.h_planck * 1e3


def thermal_energy_mev(t, units=UNITS):
    """k_B·T en meV."""
    return units.k_boltzmann * Temperature.of(t).kelvin * 1e3


def boltzmann_exponent(t, p, units=UNITS):
    """
    Exponente x = hξ⊥/k_BT.

    Returns infinity at T = 0 for a positive splitting and 0 for a zero
    splitting at any temperature.
    """
    t = Temperature.of(t)
    if p.xi_perp < 0:
        raise DomainError('xi_perp must be >= 0')
    if p.xi_perp == 0:
        return 0.0
    if t.kelvin == 0:
        return math.inf
    return p.xi_perp / thermal_energy_mev(t, units)

###############################################################################
# Factores de Temperatura
###############################################################################


def reduction_factor(t, p, units=UNITS):
    """
    Factor de reducción R(T).

    R = (e^x − 1)/(e^x + 1) = tanh(x/2) with x = hξ⊥/k_BT. The limit
    R = 1 is returned at T = 0.
    """
    x = boltzmann_exponent(t, p, units)
    if math.isinf(x):
        return 1.0
    return math.tanh(x / 2)


def beta_factor(t, p, units=UNITS):
    """
    Factor β(T) del estrechamiento por movimiento.

    β = 8u/(1+u)³ with u = e^{−x}; bounded by 32/27 (reached at u = 1/2)
    and equal to 1 for a vanishing splitting. β = 0 at T = 0.
    """
    x = boltzmann_exponent(t, p, units)
    if math.isinf(x):
        return 0.0
    u = math.exp(-x)
    return 8 * u / (1 + u) ** 3

###############################################################################
# Estructura Fina
###############################################################################

FineStructure = collections.namedtuple('FineStructure', 'levels transitions')


def spin_matrices():
    """Matrices de espín S = 1 en la base (+1, 0, −1)."""
    s = 1 / math.sqrt(2)
    sx = np.array([[0, s, 0], [s, 0, s], [0, s, 0]], dtype=complex)
    sy = np.array([[0, -1j * s, 0], [1j * s, 0, -1j * s], [0, 1j * s, 0]])
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    return sx, sy, sz


def spin_hamiltonian(r, p):
    """H = D∥(Sz² − 2/3) − D⊥·r·(Sx² − Sy²), en MHz."""
    sx, sy, sz = spin_matrices()
    eye = np.eye(3)
    return (p.d_parallel * (sz @ sz - 2 / 3 * eye) -
            p.d_perp * r * (sx @ sx - sy @ sy))


def closed_form_levels(r, p):
    """Autovalores analíticos, en orden ascendente."""
    d_par, d_perp = p.d_parallel, p.d_perp
    return np.sort([
        -2 * d_par / 3, d_par / 3 - d_perp * r, d_par / 3 + d_perp * r])


def fine_structure_levels(r, p):
    """
    Niveles de la estructura fina promediada.

    Diagonalises the spin Hamiltonian numerically and returns the three
    ascending levels together with the two spin transitions measured from
    the level with m_s = 0 character, the upper one (D∥ + D⊥r) first.
    """
    if not 0 <= r <= 1:
        raise DomainError('reduction factor must lie in [0, 1], got {}'
                          .format(r))
    levels = np.linalg.eigvalsh(spin_hamiltonian(r, p))
    # m_s = 0 is the isolated level at −2D∥/3, always the lowest for D∥ > D⊥
    ground = levels[0]
    transitions = np.array([levels[2] - ground, levels[1] - ground])
    return FineStructure(levels, transitions)


def odmr_splitting(t, p, units=UNITS):
    """
    Desdoblamiento ODMR observado, en MHz.

    Δ = (2/3)D⊥R + (4/3)[A² + D⊥²R²]^½ with R = R(T); tends to (4/3)A at
    high temperature.
    """
    r = reduction_factor(t, p, units)
    return (2 / 3 * p.d_perp * r +
            4 / 3 * math.sqrt(p.a_hyperfine ** 2 + (p.d_perp * r) ** 2))

###############################################################################
