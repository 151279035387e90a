#!/usr/bin/env python3

"""
Ajustes de ODMR, ZPL y visibilidad.

Default parameter sets at the published values, synthetic data bundles on
the measured grids, and the fits that extract Γ_inh, κ, C_max, Q and hξ⊥
from the six ODMR datasets and {B_E, Ω_E, B_A, Ω_A, γ₀, a} from the ZPL
width and polarisation visibility.
"""

###############################################################################
# Módulos Importados
###############################################################################

import collections
import logbook
import numpy as np

from pynv import utils
from pynv.core import DomainError
from pynv.fitting import lm, models

###############################################################################
# Constantes Globales Y Variables
###############################################################################

log = logbook.Logger(__name__)

ODMR_KINDS = ('linewidth_vs_T', 'linewidth_vs_P', 'contrast_vs_P',
              'splitting_vs_T')

ODMR_TEMPERATURES = np.arange(295.0, 555.0, 15.0)
ODMR_POWERS = np.array([0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5])
ODMR_RF_POWERS = (0.4, 0.2, 0.05)
ODMR_SWEEP_TEMPERATURE = 294.0

ZPL_TEMPERATURES = np.array([
    2, 4, 6, 8, 10, 12.5, 15, 20, 25, 30, 40, 50, 60, 70, 80, 100, 125, 150,
    175, 200, 225, 250, 275, 300], dtype=float)
VISIBILITY_TEMPERATURES = np.array(
    [2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 25, 30], dtype=float)

# incertidumbres típicas de las medidas
LINEWIDTH_SIGMA = 2.0
CONTRAST_SIGMA = 0.004
SPLITTING_SIGMA = 1.0
VISIBILITY_SIGMA = 0.01

###############################################################################
# Conjuntos de Parámetros
###############################################################################


def _with_overrides(params, overrides):
    unknown = set(overrides) - {p.name for p in params}
    if unknown:
        raise DomainError('unknown parameter(s) {}'.format(
            ', '.join(sorted(unknown))))
    return [p._replace(value=overrides[p.name]) if p.name in overrides
            else p for p in params]


def odmr_parameters(**overrides):
    """Γ_inh, κ, C_max, Q (MHz·K⁻²) y hξ⊥ (meV) en los valores publicados."""
    return _with_overrides([
        lm.Parameter('gamma_inh', 33.0, 0.0, transform='log'),
        lm.Parameter('kappa', 210.0, 0.0, transform='log'),
        lm.Parameter('c_max', 0.16, 0.0, 1.0, transform='log'),
        lm.Parameter('q_mhz', 0.83, 0.0, transform='log'),
        lm.Parameter('xi_perp', 4.6, 0.0, transform='log')], overrides)


def zpl_parameters(**overrides):
    return _with_overrides([
        lm.Parameter('b_e', 1.32, 0.0, transform='log'),
        lm.Parameter('omega_e', 13.0, 0.0, 168.0, transform='log'),
        lm.Parameter('b_a', 24e-6, 0.0, transform='log'),
        lm.Parameter('omega_a', 37.0, 0.0, 168.0, transform='log'),
        lm.Parameter('gamma0', 16.2, 0.0, transform='log')], overrides)


def visibility_parameters(**overrides):
    """Los de la ZPL más la fracción de ramificación a ∈ [0, 1]."""
    return _with_overrides(
        zpl_parameters() + [lm.Parameter('a_branching', 0.40, 0.0, 1.0)],
        overrides)


def _values(params):
    return collections.OrderedDict((p.name, p.value) for p in params)

###############################################################################
# Datos Sintéticos
###############################################################################


@utils.listify()
def reference_odmr_bundle(params=None, noise=False, seed=0, context=None):
    """
    Las seis series ODMR sintéticas.

    Linewidth against temperature at 400, 200 and 50 mW of RF, linewidth
    and contrast against RF power at 294 K, and the splitting at 50 mW.
    With noise=True each series gets Gaussian noise of its sigma, seeded
    by seed plus the series index.
    """
    values = _values(params or odmr_parameters())
    layout = [('linewidth_vs_T', ODMR_TEMPERATURES, {'rf_power_W': p},
               LINEWIDTH_SIGMA) for p in ODMR_RF_POWERS]
    layout += [
        ('linewidth_vs_P', ODMR_POWERS, {'T_K': ODMR_SWEEP_TEMPERATURE},
         LINEWIDTH_SIGMA),
        ('contrast_vs_P', ODMR_POWERS, {'T_K': ODMR_SWEEP_TEMPERATURE},
         CONTRAST_SIGMA),
        ('splitting_vs_T', ODMR_TEMPERATURES, {'rf_power_W': 0.05},
         SPLITTING_SIGMA)]
    for index, (kind, x, conditions, sigma) in enumerate(layout):
        yield models.synthesize_dataset(
            kind, values, x, sigma if noise else 0.0, seed + index,
            conditions, sigma, context)


def reference_zpl_bundle(params=None, noise=False, seed=0, context=None):
    """
    Anchura de la ZPL entre 2 y 300 K, con ξ⊥ = 0.

    sigma is 2 % of the width plus 0.5 MHz.
    """
    values = _values(params or zpl_parameters())
    conditions = {'xi_perp_meV': 0.0}
    clean = models.synthesize_dataset(
        'zpl_vs_T', values, ZPL_TEMPERATURES, conditions=conditions,
        context=context)
    sigma = 0.02 * clean.y + 0.5
    if not noise:
        return [clean._replace(sigma=sigma)]
    return [models.synthesize_dataset(
        'zpl_vs_T', values, ZPL_TEMPERATURES, sigma, seed, conditions,
        context=context)]


@utils.listify()
def reference_visibility_bundle(params=None, noise=False, seed=0,
                                context=None):
    """Visibilidad de dos centros, uno por cada signo de la rama."""
    values = _values(params or visibility_parameters())
    for index, sign in enumerate((1, -1)):
        yield models.synthesize_dataset(
            'visibility_vs_T', values, VISIBILITY_TEMPERATURES,
            VISIBILITY_SIGMA if noise else 0.0, seed + index,
            {'sign_branch': sign, 'xi_perp_meV': 0.0}, VISIBILITY_SIGMA,
            context)

###############################################################################
# Ajustes
###############################################################################


def _check_kinds(series_list, allowed):
    for s in series_list:
        if s.kind not in allowed:
            raise DomainError('{} series not allowed here, expected one of {}'
                              .format(s.kind, ', '.join(allowed)))


def fit_odmr(series_list, initial=None, options=lm.LMOptions(),
             context=None):
    """
    Ajuste simultáneo de las series ODMR.

    The five parameters are shared by all series; γ₁ and Γ∞ stay fixed at
    the values implied by the optical rates of the context, and W↓ follows
    the quadratic law Q·T².
    """
    series_list = list(series_list)
    _check_kinds(series_list, ODMR_KINDS)
    return models.fit_series(
        series_list, initial or odmr_parameters(), options, context)


def _merge(first, second):
    parameters = collections.OrderedDict(first.parameters)
    parameters.update(second.parameters)
    uncertainties = collections.OrderedDict(first.uncertainties)
    uncertainties.update(
        (k, v) for k, v in second.uncertainties.items() if k in second.names)
    n1, n2 = len(first.names), len(second.names)
    cov = np.zeros((n1 + n2, n1 + n2))
    cov[:n1, :n1] = first.covariance
    cov[n1:, n1:] = second.covariance
    chi2 = first.chi2 + second.chi2
    dof = first.dof + second.dof
    return lm.FitResult(
        parameters=parameters, uncertainties=uncertainties, covariance=cov,
        names=first.names + second.names, chi2=chi2,
        chi2_reduced=chi2 / dof if dof > 0 else float('nan'), dof=dof,
        n_iterations=first.n_iterations + second.n_iterations,
        converged=first.converged and second.converged,
        singular=first.singular or second.singular,
        weighted=first.weighted and second.weighted,
        residual_norms=first.residual_norms + second.residual_norms,
        message='zpl: {}; visibility: {}'.format(
            first.message, second.message))


def fit_zpl_and_visibility(zpl, vis, initial=None, mode='joint',
                           options=lm.LMOptions(), context=None):
    """
    Ajuste de la anchura de la ZPL y de la visibilidad.

    mode='joint' fits all series at once with B_E and Ω_E shared;
    mode='sequential' fits the ZPL first and then only a on the visibility
    with B_E and Ω_E held at the ZPL estimates. vis may be empty, in which
    case a_branching is dropped. Residual norms list the ZPL series first.
    """
    zpl, vis = list(zpl), list(vis)
    _check_kinds(zpl, ('zpl_vs_T',))
    _check_kinds(vis, ('visibility_vs_T',))
    initial = list(initial or visibility_parameters())
    zpl_initial = [p for p in initial if p.name != 'a_branching']
    if not vis:
        return models.fit_series(zpl, zpl_initial, options, context)
    if mode == 'joint':
        return models.fit_series(zpl + vis, initial, options, context)
    if mode != 'sequential':
        raise DomainError('unknown fit mode {!r}'.format(mode))
    first = models.fit_series(zpl, zpl_initial, options, context)
    shared = ('b_e', 'omega_e')
    vis_initial = [
        lm.Parameter(name, first.parameters[name], fixed=True)
        for name in shared]
    vis_initial += [p for p in initial if p.name == 'a_branching']
    second = models.fit_series(vis, vis_initial, options, context)
    return _merge(first, second)

###############################################################################
