#!/usr/bin/env python3

"""
Series de datos y modelos.

Every DataSeries kind maps to a model in the MODELS registry. A model
receives the current parameter values, the series and a FitContext that
supplies the quantities held fixed during a fit (the optical rates, r, Γ∞
and the quadrature tolerances), and returns the predicted y values.
"""

###############################################################################
# Módulos Importados
###############################################################################

import collections
import collections.abc
import logbook
import numpy as np

from pynv import observables, utils
from pynv.core import DomainError, ModelError, odmr_splitting
from pynv.fitting import lm
from pynv.rates import RateTable

###############################################################################
# Constantes Globales Y Variables
###############################################################################

log = logbook.Logger(__name__)

MODELS = collections.OrderedDict()

###############################################################################
# Contenedores
###############################################################################


class DataSeries(collections.namedtuple(
        'DataSeries', 'kind x y sigma conditions',
        defaults=(None, None))):
    """
    Una serie de medidas de un mismo tipo.

    x, y and sigma are float arrays; sigma=None means unit weights.
    conditions holds the quantities fixed along the series (rf_power_W,
    T_K, optical_power_mW, sign_branch, xi_perp_meV).
    """

    __slots__ = ()

    def __new__(cls, kind, x, y, sigma=None, conditions=None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or not x.size:
            raise DomainError('{}: x and y must be nonempty 1-d arrays of '
                              'equal length'.format(kind))
        if np.any(np.diff(x) <= 0):
            raise DomainError('{}: x must be strictly increasing'.format(kind))
        if sigma is not None:
            sigma = np.broadcast_to(
                np.asarray(sigma, dtype=float), x.shape).copy()
            if not np.all(sigma > 0):
                raise DomainError('{}: sigma must be > 0'.format(kind))
        return super().__new__(
            cls, kind, x, y, sigma, dict(conditions or {}))

    @property
    def weights(self):
        return np.ones_like(self.y) if self.sigma is None else self.sigma

    def condition(self, key, default=None):
        if key in self.conditions:
            return self.conditions[key]
        if default is None:
            raise ModelError(
                '{} series needs the condition {!r}'.format(self.kind, key))
        return default


class FitContext(collections.namedtuple(
        'FitContext', 'center odmr visibility table',
        defaults=(observables.Center(), observables.ODMRModelParams(),
                  observables.VisibilityParams(), None))):
    """Cantidades fijas durante un ajuste y la tabla de tasas compartida."""

    __slots__ = ()

    def with_table(self):
        return self if self.table is not None else self._replace(
            table=RateTable())


Model = collections.namedtuple('Model', 'kind func requires')

###############################################################################
# Registro
###############################################################################


def register(kind, requires=()):
    """Registra la función de un modelo para un tipo de serie."""
    def _register(func):
        MODELS[kind] = Model(kind, func, tuple(requires))
        return func
    return _register


def get_model(kind):
    try:
        return MODELS[kind]
    except KeyError:
        raise ModelError('unknown series kind {!r}'.format(kind)) from None


def _center(values, context, xi_perp=None):
    c = context.center
    spin = c.spin._replace(xi_perp=values.get('xi_perp', c.spin.xi_perp)
                           if xi_perp is None else xi_perp)
    e = c.e_phonon._replace(
        b_e=values.get('b_e', c.e_phonon.b_e),
        omega_e=values.get('omega_e', c.e_phonon.omega_e))
    a = c.a_phonon._replace(
        b_a=values.get('b_a', c.a_phonon.b_a),
        omega_a=values.get('omega_a', c.a_phonon.omega_a))
    optical = c.optical._replace(
        gamma0=values.get('gamma0', c.optical.gamma0))
    return c._replace(spin=spin, e_phonon=e, a_phonon=a, optical=optical)


def _odmr(values, context):
    m = context.odmr
    return m._replace(
        gamma_inh=values.get('gamma_inh', m.gamma_inh),
        c_max=values.get('c_max', m.c_max),
        kappa=values.get('kappa', m.kappa))


def _q_hz(values):
    return values['q_mhz'] * 1e6

###############################################################################
# Modelos
###############################################################################


@register('constant', requires=('c',))
def constant_model(values, s, context):
    return np.full_like(s.x, values['c'])


@register('linear', requires=('slope', 'intercept'))
def linear_model(values, s, context):
    return values['slope'] * s.x + values['intercept']


@register('exponential', requires=('amplitude', 'rate'))
def exponential_model(values, s, context):
    return values['amplitude'] * np.exp(-values['rate'] * s.x)


@register('linewidth_vs_T', requires=('gamma_inh', 'kappa', 'q_mhz', 'xi_perp'))
def linewidth_vs_t(values, s, context):
    center, m = _center(values, context), _odmr(values, context)
    p_rf = s.condition('rf_power_W')
    return np.array([observables.odmr_linewidth(
        p_rf, t, m, center, 'quadratic', _q_hz(values), context.table)
        for t in s.x])


@register('linewidth_vs_P', requires=('gamma_inh', 'kappa', 'q_mhz', 'xi_perp'))
def linewidth_vs_p(values, s, context):
    center, m = _center(values, context), _odmr(values, context)
    t = s.condition('T_K')
    return np.array([observables.odmr_linewidth(
        p, t, m, center, 'quadratic', _q_hz(values), context.table)
        for p in s.x])


@register('contrast_vs_P', requires=('c_max', 'kappa', 'q_mhz', 'xi_perp'))
def contrast_vs_p(values, s, context):
    center, m = _center(values, context), _odmr(values, context)
    t = s.condition('T_K')
    return np.array([observables.odmr_contrast(
        p, t, m, center, 'quadratic', _q_hz(values), context.table)
        for p in s.x])


@register('splitting_vs_T', requires=('xi_perp',))
def splitting_vs_t(values, s, context):
    spin = _center(values, context).spin
    return np.array([odmr_splitting(t, spin) for t in s.x])


@register('zpl_vs_T', requires=('b_e', 'omega_e', 'b_a', 'omega_a', 'gamma0'))
def zpl_vs_t(values, s, context):
    center = _center(values, context, s.condition('xi_perp_meV', 0.0))
    return np.array([observables.zpl_width(t, center, context.table)
                     for t in s.x])


@register('visibility_vs_T', requires=('b_e', 'omega_e', 'a_branching'))
def visibility_vs_t(values, s, context):
    center = _center(values, context, s.condition('xi_perp_meV', 0.0))
    v = context.visibility._replace(
        a_branching=values['a_branching'],
        sign_branch=int(s.condition('sign_branch', context.visibility.
                                    sign_branch)))
    return np.array([observables.visibility(t, v, center, context.table)
                     for t in s.x])

###############################################################################
# Residuos
###############################################################################


def _values(params):
    if isinstance(params, collections.abc.Mapping):
        return params
    return collections.OrderedDict((p.name, p.value) for p in params)


@utils.log_errors(log.error)
def _evaluate(model, values, s, context):
    y = np.asarray(model.func(values, s, context), dtype=float)
    if not np.all(np.isfinite(y)):
        raise DomainError('{} model returned non-finite values'.format(
            model.kind))
    return y


def predict(params, s, context=None):
    """Valores del modelo para una serie."""
    context = (context or FitContext()).with_table()
    values = _values(params)
    model = get_model(s.kind)
    missing = [name for name in model.requires if name not in values]
    if missing:
        raise ModelError('{} model needs parameter(s) {}'.format(
            s.kind, ', '.join(missing)))
    return _evaluate(model, values, s, context)


def series_residuals(params, series_list, context=None):
    """Residuos ponderados de cada serie, por separado."""
    context = (context or FitContext()).with_table()
    return [(predict(params, s, context) - s.y) / s.weights
            for s in series_list]


def residual_vector(params, series_list, context=None):
    """
    Vector de residuos ponderados (modelo − y)/σ.

    params is a sequence of Parameter or a mapping name → value. Series
    are concatenated in the given order, points in x order.
    """
    if not series_list:
        raise DomainError('no data series given')
    return np.concatenate(series_residuals(params, series_list, context))


def jacobian(params, series_list, context=None, options=lm.LMOptions()):
    """
    ∂residuo/∂parámetro por diferencias centrales en el espacio interno.

    Columns follow the order of the free parameters; fixed parameters
    have no column.
    """
    params = list(params)
    context = (context or FitContext()).with_table()
    u = [p.to_internal() for p in lm.free_parameters(params)]
    return lm.finite_difference_jacobian(
        lambda v: residual_vector(
            lm.values_from_internal(params, v), series_list, context),
        u, options.rel_step, options.abs_step, options.workers)

###############################################################################
# Ajuste Genérico
###############################################################################


def fit_series(series_list, initial, options=lm.LMOptions(), context=None):
    """Ajuste simultáneo de varias series con parámetros compartidos."""
    series_list, initial = list(series_list), list(initial)
    context = (context or FitContext()).with_table()
    for s in series_list:
        get_model(s.kind)
    log.info('fitting {} series ({} points) with {} free parameters',
             len(series_list), sum(len(s.x) for s in series_list),
             len(lm.free_parameters(initial)))
    result = lm.levenberg_marquardt(
        lambda values: residual_vector(values, series_list, context),
        initial, options,
        weighted=all(s.sigma is not None for s in series_list))
    norms = [float(np.linalg.norm(r)) for r in series_residuals(
        result.parameters, series_list, context)]
    log.info('fit finished: chi2_reduced {:.4g}, converged {}',
             result.chi2_reduced, result.converged)
    return result._replace(residual_norms=norms)

###############################################################################
# Datos Sintéticos
###############################################################################


def synthesize_dataset(kind, params, x, noise_sigma=0.0, seed=0,
                       conditions=None, sigma=None, context=None):
    """
    Serie sintética y = modelo(x) + ruido gaussiano.

    noise_sigma may be a scalar or one value per point. The series sigma
    defaults to noise_sigma, or to unit weights for noiseless data.
    The generator is keyed by seed alone, so equal seeds give equal
    series.
    """
    get_model(kind)
    template = DataSeries(kind, x, np.zeros(len(x)), None, conditions)
    y = predict(params, template, context)
    noise_sigma = np.broadcast_to(
        np.asarray(noise_sigma, dtype=float), y.shape)
    if np.any(noise_sigma < 0):
        raise DomainError('noise_sigma must be >= 0')
    if np.any(noise_sigma > 0):
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(seed)))
        y = y + rng.normal(0.0, 1.0, y.shape) * noise_sigma
    if sigma is None and np.all(noise_sigma > 0):
        sigma = noise_sigma
    return DataSeries(kind, template.x, y, sigma, conditions)

###############################################################################
