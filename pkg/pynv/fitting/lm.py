#!/usr/bin/env python3

"""
Levenberg-Marquardt.

Weighted nonlinear least squares over named parameters. Bounds and
positivity are enforced by mapping every free parameter to an unbounded
internal coordinate; the damped normal equations are solved in that
coordinate after scaling by the initial magnitudes. The driver itself is
sequential, only the finite-difference columns of the Jacobian run on a
thread pool.
"""

###############################################################################
# Módulos Importados
###############################################################################

import collections
import concurrent.futures
import logbook
import math
import numpy as np

from pynv.core import ConfigError, DomainError

###############################################################################
# Constantes Globales Y Variables
###############################################################################

log = logbook.Logger(__name__)

TRANSFORMS = ('none', 'log')

###############################################################################
# Contenedores
###############################################################################


class Parameter(collections.namedtuple(
        'Parameter', 'name value lower upper fixed transform',
        defaults=(-math.inf, math.inf, False, 'none'))):
    """
    Parámetro de ajuste.

    transform='log' fits ln(value) and needs lower >= 0; lower=0 then
    only expresses positivity.
    """

    __slots__ = ()

    def __new__(cls, *args, **kwargs):
        self = super().__new__(cls, *args, **kwargs)
        if self.transform not in TRANSFORMS:
            raise ConfigError(self.name, 'unknown transform {!r}'.format(
                self.transform))
        if not self.lower < self.upper:
            raise ConfigError(self.name, 'lower bound must be below upper')
        if not self.lower <= self.value <= self.upper:
            raise ConfigError(self.name, 'value {} outside [{}, {}]'.format(
                self.value, self.lower, self.upper))
        if self.transform == 'log' and not (
                self.lower >= 0 and self.value > 0):
            raise ConfigError(
                self.name, 'log transform needs positive bounds and value')
        return self

    def _log_bounds(self):
        if self.transform == 'none':
            return self.value, self.lower, self.upper
        lower = math.log(self.lower) if self.lower > 0 else -math.inf
        return math.log(self.value), lower, math.log(self.upper)

    def to_internal(self):
        """Coordenada interna sin cotas."""
        z, lo, hi = self._log_bounds()
        if math.isfinite(lo) and math.isfinite(hi):
            # sin(u) = ±1 anula la derivada; se aparta del borde
            s = 2 * (z - lo) / (hi - lo) - 1
            return math.asin(min(max(s, -1 + 1e-9), 1 - 1e-9))
        if math.isfinite(lo):
            return math.sqrt(max((z - lo + 1) ** 2 - 1, 1e-12))
        if math.isfinite(hi):
            return math.sqrt(max((hi - z + 1) ** 2 - 1, 1e-12))
        return z

    def from_internal(self, u):
        """Inversa de to_internal; el resultado respeta siempre las cotas."""
        _, lo, hi = self._log_bounds()
        if math.isfinite(lo) and math.isfinite(hi):
            z = lo + (hi - lo) * (math.sin(u) + 1) / 2
        elif math.isfinite(lo):
            z = lo - 1 + math.sqrt(u * u + 1)
        elif math.isfinite(hi):
            z = hi + 1 - math.sqrt(u * u + 1)
        else:
            z = u
        if self.transform == 'log':
            return min(max(math.exp(z), self.lower), self.upper)
        return min(max(z, self.lower), self.upper)


class LMOptions(collections.namedtuple(
        'LMOptions',
        'max_iterations ftol xtol initial_damping rel_step abs_step '
        'svd_cutoff workers',
        defaults=(1000, 1e-10, 1e-12, 1e-3, 1e-6, 1e-8, 1e-12, None))):
    """Criterios de parada y de diferenciación numérica."""

    __slots__ = ()


FitResult = collections.namedtuple(
    'FitResult',
    'parameters uncertainties covariance names chi2 chi2_reduced dof '
    'n_iterations converged singular weighted residual_norms message',
    defaults=(True, None, ''))

###############################################################################
# Espacio Interno
###############################################################################


def free_parameters(params):
    free = [p for p in params if not p.fixed]
    if not free:
        raise DomainError('at least one parameter must be free')
    return free


def values_from_internal(params, u):
    """Diccionario nombre → valor externo para el vector interno u."""
    values = collections.OrderedDict((p.name, p.value) for p in params)
    for p, ui in zip(free_parameters(params), u):
        values[p.name] = p.from_internal(ui)
    return values


def finite_difference_jacobian(fun, u, rel_step=1e-6, abs_step=1e-8,
                               workers=None):
    """
    Jacobiano por diferencias centrales.

    Step h_j = max(rel_step·|u_j|, abs_step). Each column is an independent
    pair of evaluations, mapped over a thread pool in column order.
    """
    u = np.asarray(u, dtype=float)

    def column(j):
        h = max(rel_step * abs(u[j]), abs_step)
        plus, minus = u.copy(), u.copy()
        plus[j] += h
        minus[j] -= h
        return (np.asarray(fun(plus)) - np.asarray(fun(minus))) / (2 * h)

    if workers == 1 or len(u) == 1:
        columns = [column(j) for j in range(len(u))]
    else:
        with concurrent.futures.ThreadPoolExecutor(workers) as executor:
            columns = list(executor.map(column, range(len(u))))
    return np.column_stack(columns)

###############################################################################
# Covarianza
###############################################################################


def _covariance(jac, cutoff):
    # pseudo-inversa de JᵀJ = V·S²·Vᵀ truncando S² < cutoff·max(S²)
    _, s, vt = np.linalg.svd(jac, full_matrices=False)
    s2 = s ** 2
    keep = s2 > cutoff * s2.max() if s2.size and s2.max() > 0 else s2 > 0
    inverse = np.where(keep, 1 / np.where(keep, s2, 1.0), 0.0)
    cov = (vt.T * inverse) @ vt
    return (cov + cov.T) / 2, not keep.all()


def _external_covariance(params, u, cov_internal):
    # regla de la cadena con dv/du por diferencias centrales
    free = free_parameters(params)
    d = np.empty(len(free))
    for j, (p, uj) in enumerate(zip(free, u)):
        h = max(1e-6 * abs(uj), 1e-9)
        d[j] = (p.from_internal(uj + h) - p.from_internal(uj - h)) / (2 * h)
    return cov_internal * np.outer(d, d)

###############################################################################
# Algoritmo
###############################################################################


def levenberg_marquardt(objective, initial, options=LMOptions(),
                        weighted=True):
    """
    Ajuste por mínimos cuadrados de Levenberg-Marquardt.

    objective maps an OrderedDict of parameter values to the vector of
    weighted residuals. initial is a sequence of Parameter. The damping
    starts at initial_damping·max diag(JᵀJ) and follows the gain ratio;
    only steps that lower chi² are accepted. Returns a FitResult with
    the covariance of the free parameters from the truncated SVD
    pseudo-inverse. Non-convergence and a singular covariance are flagged
    on the result.
    """
    params = list(initial)
    free = free_parameters(params)
    names = [p.name for p in free]
    u0 = np.array([p.to_internal() for p in free])
    scale = np.where(np.abs(u0) > 0, np.abs(u0), 1.0)

    def residuals(w):
        return np.asarray(
            objective(values_from_internal(params, w * scale)), dtype=float)

    def jacobian(w):
        return finite_difference_jacobian(
            lambda v: residuals(v / scale), w * scale, options.rel_step,
            options.abs_step, options.workers) * scale

    w = u0 / scale
    r = residuals(w)
    if r.size < len(free):
        raise DomainError('{} residuals for {} free parameters'.format(
            r.size, len(free)))
    f = 0.5 * r @ r
    jac = jacobian(w)
    a, g = jac.T @ jac, jac.T @ r
    mu = options.initial_damping * max(np.max(np.diag(a)), 1e-300)
    nu = 2.0
    converged, message = False, 'maximum number of iterations reached'
    iteration = 0
    while iteration < options.max_iterations:
        iteration += 1
        if f == 0 or np.max(np.abs(g)) == 0:
            converged, message = True, 'zero gradient'
            break
        try:
            step = np.linalg.solve(a + mu * np.eye(len(w)), -g)
        except np.linalg.LinAlgError:
            mu *= nu
            nu *= 2
            continue
        if np.linalg.norm(step) <= options.xtol * (
                np.linalg.norm(w) + options.xtol):
            converged, message = True, 'step below xtol'
            break
        r_new = residuals(w + step)
        f_new = 0.5 * r_new @ r_new
        predicted = 0.5 * step @ (mu * step - g)
        rho = (f - f_new) / predicted if predicted > 0 else -1.0
        if rho > 0 and f_new < f:
            decrease = (f - f_new) / f
            w, r, f = w + step, r_new, f_new
            log.debug('lm iteration {}: chi2 {:.10g}, mu {:.3g}',
                      iteration, 2 * f, mu)
            jac = jacobian(w)
            a, g = jac.T @ jac, jac.T @ r
            if decrease < options.ftol:
                converged, message = True, 'relative chi2 decrease below ftol'
                break
            mu *= max(1 / 3, 1 - (2 * rho - 1) ** 3)
            nu = 2.0
        else:
            mu *= nu
            nu *= 2
            if not math.isfinite(mu):
                message = 'damping overflow'
                break

    if converged and f > 0:
        # paso final de Gauss-Newton sin amortiguar
        step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        r_new = residuals(w + step)
        if 0.5 * r_new @ r_new < f:
            w, r, f = w + step, r_new, 0.5 * r_new @ r_new

    u = w * scale
    jac = jacobian(w) / scale
    cov_internal, singular = _covariance(jac, options.svd_cutoff)
    cov = _external_covariance(params, u, cov_internal)
    chi2 = 2 * f
    dof = r.size - len(free)
    chi2_reduced = chi2 / dof if dof > 0 else math.nan
    factor = math.sqrt(chi2_reduced) if dof > 0 else 1.0
    sigma = np.sqrt(np.clip(np.diag(cov), 0, None)) * factor
    values = values_from_internal(params, u)
    uncertainties = collections.OrderedDict((p.name, 0.0) for p in params)
    uncertainties.update(zip(names, sigma.tolist()))
    if not converged:
        log.warning('fit did not converge after {} iterations: {}',
                    iteration, message)
    if singular:
        log.warning('singular covariance, some directions are unconstrained')
    log.debug('lm finished: {} (chi2 {:.6g}, {} iterations)',
              message, chi2, iteration)
    return FitResult(
        parameters=values, uncertainties=uncertainties, covariance=cov,
        names=names, chi2=chi2, chi2_reduced=chi2_reduced, dof=dof,
        n_iterations=iteration, converged=converged, singular=singular,
        weighted=weighted, message=message)

###############################################################################
