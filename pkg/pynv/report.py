#!/usr/bin/env python3

"""
Archivos de Salida.

CSV series and tables, JSON documents and SVG plots. Numbers are written
with 17 significant digits so that a file read back reproduces the values
bit for bit; identical inputs always produce identical bytes.
"""

###############################################################################
# Módulos Importados
###############################################################################

import collections
import csv
import io
import json
import logbook
import lxml.etree
import math
import numpy as np
import pathlib

from pynv import utils
from pynv.core import DomainError, OutputError, SchemaError
from pynv.fitting import DataSeries

###############################################################################
# Constantes Globales Y Variables
###############################################################################

log = logbook.Logger(__name__)

CSV_HEADERS = collections.OrderedDict([
    ('linewidth_vs_T', ('T_K', 'linewidth_MHz', 'sigma_MHz')),
    ('linewidth_vs_P', ('P_W', 'linewidth_MHz', 'sigma_MHz')),
    ('contrast_vs_P', ('P_W', 'contrast', 'sigma')),
    ('splitting_vs_T', ('T_K', 'splitting_MHz', 'sigma_MHz')),
    ('zpl_vs_T', ('T_K', 'zpl_MHz', 'sigma_MHz')),
    ('visibility_vs_T', ('T_K', 'visibility', 'sigma'))])

INTEGER_CONDITIONS = ('sign_branch',)

SVG_NS = 'http://www.w3.org/2000/svg'
SVG_DOCTYPE = ('<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" '
               '"http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">')
WIDTH, HEIGHT = 640, 480
MARGIN = collections.namedtuple('Margin', 'left right top bottom')(
    80, 30, 40, 60)
PALETTE = ('#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e',
           '#8c564b', '#e377c2', '#7f7f7f')

###############################################################################
# Contenedores
###############################################################################

Curve = collections.namedtuple('Curve', 'label x y')
Points = collections.namedtuple('Points', 'label x y sigma')
Axes = collections.namedtuple(
    'Axes', 'title xlabel ylabel log_y', defaults=('', '', '', False))

###############################################################################
# CSV
###############################################################################


def format_number(value):
    """Formato de ida y vuelta con 17 cifras significativas."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return '{:.17g}'.format(float(value))


def _writer(path, text):
    try:
        path = pathlib.Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(str(path), 'w', encoding='utf-8', newline='') as file:
            file.write(text)
    except OSError as error:
        raise OutputError('cannot write {}: {}'.format(path, error)) from error
    log.debug('wrote {}', path)
    return path


def csv_text(header, rows, comments=()):
    buffer = io.StringIO()
    for key, value in comments:
        buffer.write('# {}={}\n'.format(key, value))
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            ['' if v is None else v if isinstance(v, str) else
             format_number(v) for v in row])
    return buffer.getvalue()


def write_table(path, header, rows, comments=()):
    """Tabla CSV con comentarios '# clave=valor' delante del encabezado."""
    return _writer(path, csv_text(header, rows, comments))


def write_series(path, series):
    comments = [(k, format_number(v) if isinstance(v, (int, float)) else v)
                for k, v in sorted(series.conditions.items())]
    sigma = [None] * len(series.x) if series.sigma is None else series.sigma
    rows = zip(series.x, series.y, sigma)
    return write_table(path, CSV_HEADERS[series.kind], rows, comments)


def _number(cell, path, lineno):
    try:
        value = float(cell)
    except ValueError:
        raise SchemaError('{}:{}: {!r} is not a number'.format(
            path, lineno, cell)) from None
    if not math.isfinite(value):
        raise SchemaError('{}:{}: {!r} is not finite'.format(
            path, lineno, cell))
    return value


def _condition(key, value):
    if key in INTEGER_CONDITIONS:
        return int(float(value))
    try:
        return float(value)
    except ValueError:
        return value


@utils.morph(OSError, OutputError)
def _read_lines(path):
    with open(str(path), encoding='utf-8') as file:
        return file.read().splitlines()


def read_series(path, kind=None):
    """
    Lee una serie desde CSV.

    The kind is recognised from the header unless given. An empty sigma
    column means unit weights; a partially filled one is an error.
    """
    conditions, header, rows = {}, None, []
    for lineno, line in enumerate(_read_lines(path), 1):
        if not line.strip():
            continue
        if line.startswith('#'):
            key, sep, value = line[1:].partition('=')
            if sep:
                conditions[key.strip()] = _condition(key.strip(), value.strip())
            continue
        cells = next(csv.reader([line]))
        if header is None:
            header = tuple(c.strip() for c in cells)
            continue
        if len(cells) != 3:
            raise SchemaError('{}:{}: expected 3 cells, got {}'.format(
                path, lineno, len(cells)))
        rows.append((lineno, [c.strip() for c in cells]))
    matches = [k for k, h in CSV_HEADERS.items() if h == header]
    if kind is None and not matches:
        raise SchemaError('{}: unknown header {}'.format(
            path, ','.join(header or ())))
    kind = kind or matches[0]
    if header != CSV_HEADERS.get(kind):
        raise SchemaError('{}: header must be {}'.format(
            path, ','.join(CSV_HEADERS.get(kind, ()))))
    if not rows:
        raise SchemaError('{}: no data rows'.format(path))
    x = [_number(r[0], path, n) for n, r in rows]
    y = [_number(r[1], path, n) for n, r in rows]
    empty = [r[2] == '' for _, r in rows]
    if all(empty):
        sigma = None
    elif any(empty):
        raise SchemaError('{}: sigma column is only partially filled'.format(
            path))
    else:
        sigma = [_number(r[2], path, n) for n, r in rows]
    try:
        return DataSeries(kind, x, y, sigma, conditions)
    except DomainError as error:
        raise SchemaError('{}: {}'.format(path, error)) from error

###############################################################################
# JSON
###############################################################################


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        # JSON no admite nan ni infinito
        return float(value) if math.isfinite(value) else None
    return value


def json_text(document):
    return json.dumps(_plain(document), indent=2, sort_keys=True) + '\n'


def write_json(path, document):
    return _writer(path, json_text(document))


def fit_result_document(result, config=None, series=()):
    """Documento JSON de un FitResult, con la configuración usada."""
    return collections.OrderedDict([
        ('parameters', result.parameters),
        ('uncertainties', result.uncertainties),
        ('free_parameters', result.names),
        ('covariance', result.covariance),
        ('chi2', result.chi2),
        ('chi2_reduced', result.chi2_reduced),
        ('chi2_unscaled', not result.weighted),
        ('dof', result.dof),
        ('n_iterations', result.n_iterations),
        ('converged', result.converged),
        ('singular', result.singular),
        ('residual_norms', result.residual_norms),
        ('series', [s.kind for s in series]),
        ('message', result.message),
        ('config', config)])

###############################################################################
# SVG
###############################################################################


def _nice_ticks(lo, hi, count=6):
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    raw = (hi - lo) / count
    magnitude = 10 ** math.floor(math.log10(raw))
    step = min((m * magnitude for m in (1, 2, 2.5, 5, 10)
                if m * magnitude >= raw), default=10 * magnitude)
    start = math.ceil(lo / step - 1e-9) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9)
                                            + 1)]


def _limits(values):
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def _attrs(**kwargs):
    return {k.replace('_', '-'): v for k, v in kwargs.items()}


def _sub(parent, tag, text=None, **attrs):
    element = lxml.etree.SubElement(
        parent, '{{{}}}{}'.format(SVG_NS, tag), _attrs(**attrs))
    if text is not None:
        element.text = text
    return element


def _fmt(value):
    return '{:.2f}'.format(value)


def render_svg(curves=(), points=(), axes=Axes(), path=None):
    """
    Gráfica SVG 1.1 de curvas y puntos con barras de error.

    Curves become polylines, points become circles with vertical error
    bars. With axes.log_y the y axis is logarithmic and every y value must
    be positive. Returns the document bytes and writes them to path when
    given.
    """
    curves, points = list(curves), list(points)
    if not curves and not points:
        raise DomainError('nothing to plot')
    xs, ys = [], []
    for item in curves + points:
        x = np.asarray(item.x, dtype=float)
        y = np.asarray(item.y, dtype=float)
        if x.shape != y.shape or not x.size:
            raise DomainError('{}: x and y must match'.format(item.label))
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DomainError('{}: non-finite data'.format(item.label))
        if axes.log_y and np.any(y <= 0):
            raise DomainError('{}: log axis needs y > 0'.format(item.label))
        xs.append(x)
        ys.append(y)
    for item in points:
        if item.sigma is not None:
            y = np.asarray(item.y, dtype=float)
            s = np.asarray(item.sigma, dtype=float)
            ys.append(y + s)
            if not axes.log_y:
                ys.append(y - s)
    transform = np.log10 if axes.log_y else (lambda v: v)
    x_lo, x_hi = _limits(np.concatenate(xs))
    y_lo, y_hi = _limits(transform(np.concatenate(ys)))
    plot_w = WIDTH - MARGIN.left - MARGIN.right
    plot_h = HEIGHT - MARGIN.top - MARGIN.bottom

    def px(x):
        return MARGIN.left + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return MARGIN.top + (y_hi - transform(y)) / (y_hi - y_lo) * plot_h

    root = lxml.etree.Element(
        '{{{}}}svg'.format(SVG_NS), nsmap={None: SVG_NS},
        version='1.1', width=str(WIDTH), height=str(HEIGHT),
        viewBox='0 0 {} {}'.format(WIDTH, HEIGHT))
    _sub(root, 'title', axes.title or 'pynv')
    _sub(root, 'rect', x='0', y='0', width=str(WIDTH), height=str(HEIGHT),
         fill='white')
    frame = _sub(root, 'g', stroke='black', stroke_width='1')
    _sub(frame, 'rect', x=str(MARGIN.left), y=str(MARGIN.top),
         width=str(plot_w), height=str(plot_h), fill='none')
    labels = _sub(root, 'g', font_family='sans-serif', font_size='12')
    for tick in _nice_ticks(x_lo, x_hi):
        if x_lo <= tick <= x_hi:
            x = _fmt(px(tick))
            y = MARGIN.top + plot_h
            _sub(frame, 'line', x1=x, y1=_fmt(y), x2=x, y2=_fmt(y + 5))
            _sub(labels, 'text', '{:.4g}'.format(tick), x=x,
                 y=_fmt(y + 20), text_anchor='middle')
    if axes.log_y:
        y_ticks = [d for d in range(math.floor(y_lo), math.ceil(y_hi) + 1)
                   if y_lo <= d <= y_hi] or [round((y_lo + y_hi) / 2, 2)]
        y_ticks = [(10.0 ** d, d) for d in y_ticks]
    else:
        y_ticks = [(t, t) for t in _nice_ticks(y_lo, y_hi)
                   if y_lo <= t <= y_hi]
    for value, position in y_ticks:
        y = _fmt(MARGIN.top + (y_hi - position) / (y_hi - y_lo) * plot_h)
        _sub(frame, 'line', x1=str(MARGIN.left - 5), y1=y,
             x2=str(MARGIN.left), y2=y)
        _sub(labels, 'text', '{:.4g}'.format(value),
             x=str(MARGIN.left - 8), y=y, text_anchor='end',
             dominant_baseline='middle')
    _sub(labels, 'text', axes.xlabel, x=_fmt(MARGIN.left + plot_w / 2),
         y=str(HEIGHT - 15), text_anchor='middle')
    _sub(labels, 'text', axes.ylabel, x='20', y=_fmt(MARGIN.top + plot_h / 2),
         text_anchor='middle',
         transform='rotate(-90 20 {})'.format(_fmt(MARGIN.top + plot_h / 2)))
    if axes.title:
        _sub(labels, 'text', axes.title, x=_fmt(WIDTH / 2), y='25',
             text_anchor='middle', font_size='14')
    legend = _sub(root, 'g', font_family='sans-serif', font_size='11')
    for index, item in enumerate(curves + points):
        colour = PALETTE[index % len(PALETTE)]
        x = np.asarray(item.x, dtype=float)
        y = np.asarray(item.y, dtype=float)
        if isinstance(item, Curve):
            _sub(root, 'polyline', fill='none', stroke=colour,
                 stroke_width='1.5', points=' '.join(
                     '{},{}'.format(_fmt(px(a)), _fmt(py(b)))
                     for a, b in zip(x, y)))
        else:
            group = _sub(root, 'g', stroke=colour, fill=colour)
            sigma = (np.zeros_like(y) if item.sigma is None
                     else np.asarray(item.sigma, dtype=float))
            for a, b, s in zip(x, y, sigma):
                if s > 0:
                    low = b - s if not axes.log_y or b - s > 0 else b
                    _sub(group, 'line', x1=_fmt(px(a)), y1=_fmt(py(low)),
                         x2=_fmt(px(a)), y2=_fmt(py(b + s)))
                _sub(group, 'circle', cx=_fmt(px(a)), cy=_fmt(py(b)), r='3')
        ly = MARGIN.top + 15 + 16 * index
        lx = WIDTH - MARGIN.right - 150
        _sub(legend, 'line', x1=str(lx), y1=str(ly), x2=str(lx + 20),
             y2=str(ly), stroke=colour, stroke_width='2')
        _sub(legend, 'text', item.label, x=str(lx + 26), y=str(ly),
             dominant_baseline='middle')
    document = lxml.etree.tostring(
        root, xml_declaration=True, encoding='UTF-8', pretty_print=True,
        doctype=SVG_DOCTYPE)
    if path is not None:
        try:
            path = pathlib.Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(document)
        except OSError as error:
            raise OutputError('cannot write {}: {}'.format(
                path, error)) from error
    return document

###############################################################################
