#!/usr/bin/env python3

"""
Reglas de Cuadratura.

Adaptive Gauss-Kronrod bisection and a fixed Gauss-Legendre rule. Both
evaluate the integrand on numpy arrays of nodes; neither ever samples the
end points of an interval, so integrands with removable end-point
singularities only have to be well defined in the open interval.
"""

###############################################################################
# Módulos Importados
###############################################################################

import collections
import functools
import heapq
import logbook
import numpy as np

from pynv.core import ToleranceError

###############################################################################
# Constantes Globales Y Variables
###############################################################################

log = logbook.Logger(__name__)

# nodos y pesos Gauss 7 / Kronrod 15, mitad positiva (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS = np.zeros(15)
# los nodos de Gauss son los de índice impar en _XGK
_GAUSS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])

QuadResult = collections.namedtuple('QuadResult', 'value error panels')

###############################################################################


def gauss_kronrod(f, a, b):
    """
    Regla G7-K15 en [a, b].

    Returns the Kronrod estimate and the QUADPACK error estimate.
    """
    half = (b - a) / 2
    centre = (a + b) / 2
    fx = np.asarray(f(centre + half * _NODES), dtype=float)
    kronrod = half * np.dot(_KRONROD, fx)
    gauss = half * np.dot(_GAUSS, fx)
    mean = kronrod / 2 / half if half else 0.0
    resasc = abs(half) * np.dot(_KRONROD, np.abs(fx - mean))
    error = abs(kronrod - gauss)
    if resasc and error:
        error = resasc * min(1.0, (200 * error / resasc) ** 1.5)
    return kronrod, error


def integrate(f, a, b, spec):
    """
    Cuadratura adaptativa por bisección.

    The panel with the largest error estimate is split in two until the
    summed error falls below max(abs_tol, rel_tol·|I|). Raises
    ToleranceError when spec.max_subdivisions panels are not enough.
    """
    if b == a:
        return QuadResult(0.0, 0.0, 0)
    value, error = gauss_kronrod(f, a, b)
    # heap ordenado por error decreciente; el contador desempata
    heap = [(-error, 0, a, b, value)]
    total, total_error, counter = value, error, 1
    while total_error > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if len(heap) >= spec.max_subdivisions:
            raise ToleranceError(
                'quadrature on [{}, {}] did not reach rel_tol={} with {} '
                'subdivisions (error {:.3g})'.format(
                    a, b, spec.rel_tol, spec.max_subdivisions, total_error))
        neg_error, _, left, right, panel = heapq.heappop(heap)
        mid = (left + right) / 2
        v1, e1 = gauss_kronrod(f, left, mid)
        v2, e2 = gauss_kronrod(f, mid, right)
        heapq.heappush(heap, (-e1, counter, left, mid, v1))
        heapq.heappush(heap, (-e2, counter + 1, mid, right, v2))
        counter += 2
        # se recalcula la suma para no acumular error de redondeo
        total = sum(item[4] for item in heap)
        total_error = sum(-item[0] for item in heap)
    log.debug('integrate [{:.6g}, {:.6g}]: {} panels, error {:.3g}',
              a, b, len(heap), total_error)
    return QuadResult(total, total_error, len(heap))


@functools.lru_cache(maxsize=8)
def _legendre(n):
    return np.polynomial.legendre.leggauss(n)


def fixed_quad(f, a, b, n=200):
    """Regla fija de Gauss-Legendre con n nodos."""
    if b == a:
        return 0.0
    nodes, weights = _legendre(n)
    half = (b - a) / 2
    return half * np.dot(weights, f((a + b) / 2 + half * nodes))

###############################################################################
