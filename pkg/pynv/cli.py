#!/usr/bin/env python3

"""
Línea de Comandos.

pynv rates | odmr simulate | odmr fit | zpl eval | zpl fit |
visibility eval | visibility fit | mn validate | report

Every command reads the optional JSON run configuration, echoes the
validated configuration to the output directory as config.json and writes
its artifacts there. Exit codes: 0 success, 1 other package error, 2
usage or configuration parse error, 3 invalid configuration value, 4 fit
did not converge (artifacts are still written), 5 input/output failure.
"""

###############################################################################
# Módulos Importados
###############################################################################

import argparse
import collections
import json
import logbook
import math
import numpy as np
import pathlib
import sys

from pynv import observables, rates, report, stochastic, utils
from pynv.core import (
    ConfigError, OutputError, ParseError, PynvError, SpinParams,
    UnitConstants, boltzmann_exponent, odmr_splitting)
from pynv.fitting import (
    DataSeries, FitContext, Parameter, bundles, fit_odmr, fit_series,
    fit_zpl_and_visibility, odmr_parameters, predict, visibility_parameters)

###############################################################################
# Constantes Globales Y Variables
###############################################################################

log = logbook.Logger(__name__)

EXIT_OK, EXIT_ERROR, EXIT_PARSE, EXIT_CONFIG = 0, 1, 2, 3
EXIT_NOT_CONVERGED, EXIT_IO = 4, 5

SECTIONS = collections.OrderedDict([
    ('constants', UnitConstants),
    ('spin', SpinParams),
    ('e_phonon', rates.EPhononParams),
    ('a_phonon', rates.APhononParams),
    ('optical', observables.OpticalRates),
    ('odmr', observables.ODMRModelParams),
    ('visibility', observables.VisibilityParams),
    ('quadrature', rates.QuadratureSpec),
    ('monte_carlo', stochastic.MonteCarloSpec)])

###############################################################################
# Configuración
###############################################################################


class RunConfig(collections.namedtuple(
        'RunConfig', list(SECTIONS) + ['output_dir'])):
    """Configuración validada de una ejecución."""

    __slots__ = ()

    @property
    def center(self):
        return observables.Center(
            self.spin, self.e_phonon, self.a_phonon, self.optical,
            self.quadrature)

    @property
    def context(self):
        return FitContext(self.center, self.odmr, self.visibility)

    def document(self):
        doc = collections.OrderedDict(
            (name, getattr(self, name)._asdict()) for name in SECTIONS)
        doc['output_dir'] = self.output_dir
        return doc


@utils.morph(OSError, OutputError)
def _read_text(path):
    with open(str(path), encoding='utf-8') as file:
        return file.read()


def _section(name, data):
    if not isinstance(data, dict):
        raise ConfigError(name, 'must be a JSON object')
    cls = SECTIONS[name]
    unknown = sorted(set(data) - set(cls._fields))
    if unknown:
        raise ConfigError('{}.{}'.format(name, unknown[0]), 'unknown key')
    try:
        return cls(**data)
    except ConfigError as error:
        raise ConfigError(
            '{}.{}'.format(name, error.field),
            str(error).partition(': ')[2]) from error
    except TypeError as error:
        raise ConfigError(name, 'invalid value ({})'.format(error)) from error


def _load_json(path):
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as error:
        raise ParseError('{}: line {}, column {}: {}'.format(
            path, error.lineno, error.colno, error.msg)) from error


def parse_config(path=None):
    """
    Lee y valida la configuración JSON.

    Omitted sections take the published values; path=None gives the pure
    defaults. Raises ParseError with line and column for malformed JSON
    and ConfigError naming the field for invalid values or unknown keys.
    """
    data = {} if path is None else _load_json(path)
    if not isinstance(data, dict):
        raise ConfigError('config', 'top level must be a JSON object')
    unknown = sorted(set(data) - set(SECTIONS) - {'output_dir'})
    if unknown:
        raise ConfigError(unknown[0], 'unknown key')
    output_dir = data.get('output_dir', '.')
    if not isinstance(output_dir, str):
        raise ConfigError('output_dir', 'must be a string')
    sections = [_section(name, data.get(name, {})) for name in SECTIONS]
    return RunConfig(*sections, output_dir=output_dir)

###############################################################################
# Utilidades de los Comandos
###############################################################################


def _grid(tmin, tmax, step):
    if not step > 0:
        raise ConfigError('--step', 'must be positive')
    if not 0 < tmin <= tmax:
        raise ConfigError('--tmin', 'need 0 < tmin <= tmax')
    n = int(math.floor((tmax - tmin) / step + 1e-9)) + 1
    return np.round(tmin + step * np.arange(n), 9)


def _center(args, cfg):
    center = cfg.center
    return center.at_zero_strain() if getattr(args, 'xi_zero', False) else (
        center)


def _model_values(cfg):
    """Valores de todos los parámetros de ajuste tomados de la configuración."""
    q = rates.q_constant(cfg.e_phonon, cfg.spin, cfg.constants)
    return collections.OrderedDict([
        ('gamma_inh', cfg.odmr.gamma_inh), ('kappa', cfg.odmr.kappa),
        ('c_max', cfg.odmr.c_max), ('q_mhz', q / 1e6),
        ('xi_perp', cfg.spin.xi_perp), ('b_e', cfg.e_phonon.b_e),
        ('omega_e', cfg.e_phonon.omega_e), ('b_a', cfg.a_phonon.b_a),
        ('omega_a', cfg.a_phonon.omega_a), ('gamma0', cfg.optical.gamma0),
        ('a_branching', cfg.visibility.a_branching)])


def _initial(params, values):
    return [p._replace(value=values[p.name]) for p in params]


@utils.listify()
def _read_all(paths):
    for path in paths:
        yield report.read_series(path)


def _dense(s, n=200):
    x = np.linspace(s.x[0], s.x[-1], n if len(s.x) > 1 else 1)
    return DataSeries(s.kind, x, np.zeros(x.size), None, s.conditions)


def _overlay(series_list, values, context, path, title, log_y=False,
             extra_points=()):
    curves, points = [], []
    for index, s in enumerate(series_list):
        label = '{} {}'.format(s.kind, ' '.join(
            '{}={}'.format(k, v) for k, v in sorted(s.conditions.items())))
        dense = _dense(s)
        curves.append(report.Curve(
            'model {}'.format(index + 1), dense.x,
            predict(values, dense, context)))
        points.append(report.Points(label.strip(), s.x, s.y, s.sigma))
    points.extend(extra_points)
    xlabel = 'T (K)' if s.kind.endswith('_T') else 'P (W)'
    return report.render_svg(
        curves, points, report.Axes(title, xlabel, s.kind, log_y), path)


def _finish_fit(result, cfg, series, out, name):
    report.write_json(out / 'fit_result.json', report.fit_result_document(
        result, cfg.document(), series))
    for key, value in result.parameters.items():
        log.info('{} = {:.6g} ± {:.2g}', key, value,
                 result.uncertainties.get(key, 0.0))
    if not result.converged:
        log.error('{} fit did not converge: {}', name, result.message)
        return EXIT_NOT_CONVERGED
    return EXIT_OK

###############################################################################
# Comandos
###############################################################################


@utils.ignore(PynvError)
def _gamma_mn(t, center, mode):
    return observables.gamma_mn(t, center, mode)


def cmd_rates(args, cfg, out):
    """W↓, W↑, W_A, Γ_MN y Q sobre una malla de temperaturas."""
    center = _center(args, cfg)
    e, spin, quad, units = (center.e_phonon, center.spin, center.quad,
                            cfg.constants)
    q = rates.q_constant(e, spin, units)
    rows, downs, was = [], [], []
    for t in _grid(args.tmin, args.tmax, args.step):
        down = rates.w_down(t, e, spin, quad, units)
        up = down * math.exp(-boltzmann_exponent(t, spin, units))
        wa = rates.w_a(t, center.a_phonon, quad, units)
        rows.append((t, down, up, wa, _gamma_mn(t, center, args.mode), q,
                     down / t ** 2))
        downs.append(down)
        was.append(wa)
    header = ('T_K', 'w_down_Hz', 'w_up_Hz', 'w_a_Hz', 'gamma_mn_MHz',
              'q_Hz_per_K2', 'w_down_over_T2_Hz_per_K2')
    report.write_table(out / 'rates.csv', header, rows, [
        ('mode', args.mode), ('xi_perp_meV', report.format_number(
            spin.xi_perp))])
    temps = [r[0] for r in rows]
    if all(d > 0 for d in downs + was):
        report.render_svg(
            [report.Curve('W_down', temps, downs),
             report.Curve('W_A', temps, was)],
            axes=report.Axes('Phonon rates', 'T (K)', 'rate (Hz)', True),
            path=out / 'rates.svg')
    diagnostics = observables.room_temperature_diagnostics(center)
    diagnostics['q_consistency'] = observables.q_consistency(
        cfg.center, units=units)
    report.write_json(out / 'room_temperature.json', diagnostics)
    log.info('Q = {:.6g} MHz/K^2 ({} temperatures written)', q / 1e6,
             len(rows))
    return EXIT_OK


def cmd_odmr_simulate(args, cfg, out):
    """Espectro ODMR a una temperatura y curvas frente a T."""
    center, m = _center(args, cfg), cfg.odmr
    table = rates.RateTable()
    t, p_rf = args.temp, args.rf_power
    centre = observables.odmr_centre(t, center)
    splitting = odmr_splitting(t, center.spin)
    width = observables.odmr_linewidth(p_rf, t, m, center, args.mode,
                                       table=table)
    contrast = observables.odmr_contrast(p_rf, t, m, center, args.mode,
                                         table=table)
    span = args.span or 4 * (splitting + 2 * width)
    freqs = np.linspace(centre - span / 2, centre + span / 2, args.points)
    signal = observables.odmr_spectrum(
        freqs, t, p_rf, m, center, mode=args.mode, table=table)
    summary = collections.OrderedDict([
        ('T_K', t), ('rf_power_W', p_rf), ('mode', args.mode),
        ('centre_MHz', centre), ('splitting_MHz', splitting),
        ('linewidth_MHz', width), ('contrast', contrast),
        ('half_saturation_power_W', observables.half_saturation_power(
            t, m, center, args.mode, table=table))])
    report.write_table(
        out / 'spectrum.csv', ('f_MHz', 'signal'), zip(freqs, signal),
        [(k, v if isinstance(v, str) else report.format_number(v))
         for k, v in summary.items()])
    curves = []
    for temp in _grid(args.tmin, args.tmax, args.step):
        curves.append((
            temp,
            observables.odmr_linewidth(p_rf, temp, m, center, args.mode,
                                       table=table),
            observables.odmr_contrast(p_rf, temp, m, center, args.mode,
                                      table=table),
            odmr_splitting(temp, center.spin),
            observables.homogeneous_width(temp, center, args.mode,
                                          table=table)))
    report.write_table(
        out / 'curves.csv',
        ('T_K', 'linewidth_MHz', 'contrast', 'splitting_MHz', 'gamma_h_MHz'),
        curves, [('rf_power_W', report.format_number(p_rf))])
    report.write_json(out / 'odmr_summary.json', summary)
    report.render_svg(
        [report.Curve('{} K, {} W'.format(t, p_rf), freqs, signal)],
        axes=report.Axes('ODMR spectrum', 'f (MHz)', 'signal'),
        path=out / 'spectrum.svg')
    log.info('ODMR at {} K: splitting {:.4g} MHz, linewidth {:.4g} MHz',
             t, splitting, width)
    return EXIT_OK


def cmd_odmr_fit(args, cfg, out):
    series = _read_all(args.files)
    initial = _initial(odmr_parameters(), _model_values(cfg))
    result = fit_odmr(series, initial, context=cfg.context)
    for kind in sorted({s.kind for s in series}):
        _overlay([s for s in series if s.kind == kind], result.parameters,
                 cfg.context, out / 'odmr_fit_{}.svg'.format(kind), kind)
    return _finish_fit(result, cfg, series, out, 'ODMR')


def cmd_zpl_eval(args, cfg, out):
    """
    Anchura de la ZPL, sus tres contribuciones y W↓/2π según el Q de ODMR.

    The last column carries the ODMR fitted Q (at its own strain) to the
    strain of this run before evaluating Q·T².
    """
    center = _center(args, cfg)
    table = rates.RateTable()
    rows = []
    for t in _grid(args.tmin, args.tmax, args.step):
        down = observables.w_down_mhz(t, center, table=table)
        wa = table.w_a(t, center.a_phonon, center.quad) / 1e6
        from_q = observables.w_down_from_odmr_q(t, center)
        rows.append((t, observables.zpl_width(t, center, table),
                     down / (2 * math.pi), wa / math.pi,
                     center.optical.gamma0, from_q / (2 * math.pi)))
    report.write_table(
        out / 'zpl.csv', ('T_K', 'zpl_MHz', 'w_down_term_MHz',
                          'w_a_term_MHz', 'gamma0_MHz',
                          'w_down_from_odmr_q_MHz'), rows,
        [('xi_perp_meV', report.format_number(center.spin.xi_perp)),
         ('odmr_q_MHz_per_K2', report.format_number(
             observables.ODMR_Q / 1e6)),
         ('odmr_xi_perp_meV', report.format_number(
             observables.ODMR_XI_PERP))])
    temps = [r[0] for r in rows]
    report.render_svg(
        [report.Curve('ZPL width', temps, [r[1] for r in rows]),
         report.Curve('W_down/2pi from ODMR Q', temps,
                      [r[5] for r in rows])],
        axes=report.Axes('ZPL width', 'T (K)', 'width (MHz)', True),
        path=out / 'zpl.svg')
    return EXIT_OK


def cmd_zpl_fit(args, cfg, out):
    series = _read_all(args.files)
    initial = _initial(visibility_parameters(), _model_values(cfg))
    result = fit_zpl_and_visibility(series, [], initial, context=cfg.context)
    _overlay(series, result.parameters, cfg.context, out / 'zpl_fit.svg',
             'ZPL width', log_y=True)
    return _finish_fit(result, cfg, series, out, 'ZPL')


def cmd_visibility_eval(args, cfg, out):
    center = _center(args, cfg)
    table = rates.RateTable()
    v = cfg.visibility
    rows = [(t, observables.visibility(t, v._replace(sign_branch=1), center,
                                       table),
             observables.visibility(t, v._replace(sign_branch=-1), center,
                                    table))
            for t in _grid(args.tmin, args.tmax, args.step)]
    report.write_table(
        out / 'visibility.csv', ('T_K', 'visibility_plus',
                                 'visibility_minus'), rows,
        [('a_branching', report.format_number(v.a_branching))])
    temps = [r[0] for r in rows]
    report.render_svg(
        [report.Curve('+', temps, [r[1] for r in rows]),
         report.Curve('-', temps, [r[2] for r in rows])],
        axes=report.Axes('ZPL visibility', 'T (K)', 'visibility'),
        path=out / 'visibility.svg')
    return EXIT_OK


def cmd_visibility_fit(args, cfg, out):
    vis = _read_all(args.files)
    zpl = _read_all(args.zpl)
    values = _model_values(cfg)
    if zpl:
        initial = _initial(visibility_parameters(), values)
        result = fit_zpl_and_visibility(
            zpl, vis, initial, args.mode, context=cfg.context)
    else:
        initial = [Parameter('b_e', values['b_e'], fixed=True),
                   Parameter('omega_e', values['omega_e'], fixed=True),
                   Parameter('a_branching', values['a_branching'], 0.0, 1.0)]
        result = fit_series(vis, initial, context=cfg.context)
    _overlay(vis, result.parameters, cfg.context, out / 'visibility_fit.svg',
             'ZPL visibility')
    return _finish_fit(result, cfg, zpl + vis, out, 'visibility')


def cmd_mn_validate(args, cfg, out):
    """Oráculo estocástico frente a la anchura de intercambio rápido."""
    center = _center(args, cfg)
    spin = center.spin
    x = boltzmann_exponent(args.temp, spin)
    if args.rate_multiple is not None:
        w_down = args.rate_multiple * 2 * spin.d_perp
    else:
        w_down = observables.w_down_mhz(args.temp, center)
    w_up = w_down * math.exp(-x)
    result = stochastic.validate_fast_exchange(
        spin, w_down, w_up, cfg.monte_carlo, progress=True)
    result['temperature_K'] = args.temp
    result['within_tolerance'] = abs(result['relative_error']) <= 0.05
    report.write_json(out / 'mn_report.json', result)
    log.info('motional narrowing: MC {:.5g} MHz vs formula {:.5g} MHz '
             '({:+.2%})', result['fwhm_mc'], result['fwhm_formula'],
             result['relative_error'])
    return EXIT_OK


def _odmr_q_points(zpl, odmr, document, values, context):
    """
    W↓/2π que implica el Q de ODMR, a las temperaturas de los datos ODMR.

    Q and ξ⊥ come from the ODMR fit document when it has them, otherwise
    from the published fit; the points are carried to the strain of the
    ZPL data. Error bars scale with the uncertainty of Q.
    """
    fitted = document.get('parameters', {})
    q = fitted.get('q_mhz', observables.ODMR_Q / 1e6)
    q_error = document.get('uncertainties', {}).get('q_mhz') or (
        observables.ODMR_Q_ERROR / 1e6)
    xi_fit = fitted.get('xi_perp', observables.ODMR_XI_PERP)
    xi_zpl = zpl[0].conditions.get('xi_perp_meV', 0.0) if zpl else 0.0
    center = context.center._replace(
        e_phonon=rates.EPhononParams(values['b_e'], values['omega_e']),
        spin=context.center.spin._replace(xi_perp=xi_zpl))
    temps = sorted({float(t) for s in odmr if s.kind.endswith('_vs_T')
                    for t in s.x}) or list(_grid(295, 550, 25))
    y = [observables.w_down_from_odmr_q(t, center, q * 1e6, xi_fit) /
         (2 * math.pi) for t in temps]
    return report.Points('W_down/2pi from ODMR Q', temps, y,
                         [v * q_error / q for v in y])


def cmd_report(args, cfg, out):
    """Paneles de ODMR, ZPL y visibilidad con datos y modelo."""
    values = _model_values(cfg)
    document = _load_json(args.fit) if args.fit else {}
    values.update(document.get('parameters', {}))
    context = cfg.context
    odmr = _read_all(args.odmr) or [
        s for s in bundles.reference_odmr_bundle(
            _initial(odmr_parameters(), values), context=context)
        if s.kind == 'linewidth_vs_T']
    zpl = _read_all(args.zpl) or bundles.reference_zpl_bundle(
        _initial(visibility_parameters(), values)[:5], context=context)
    vis = _read_all(args.vis) or bundles.reference_visibility_bundle(
        _initial(visibility_parameters(), values), context=context)
    for kind in sorted({s.kind for s in odmr}):
        _overlay([s for s in odmr if s.kind == kind], values, context,
                 out / 'odmr_panel_{}.svg'.format(kind), kind)
    _overlay(zpl, values, context, out / 'zpl_panel.svg', 'ZPL width',
             log_y=True,
             extra_points=[_odmr_q_points(zpl, odmr, document, values,
                                          context)])
    _overlay(vis, values, context, out / 'visibility_panel.svg',
             'ZPL visibility')
    return EXIT_OK

###############################################################################
# Analizador de Argumentos
###############################################################################


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON run configuration')
    common.add_argument('--out', help='output directory')
    common.add_argument('--seed', type=int, help='Monte Carlo seed')
    common.add_argument('--debug', action='store_true')

    def grid(p, tmin, tmax, step):
        p.add_argument('--tmin', type=float, default=tmin)
        p.add_argument('--tmax', type=float, default=tmax)
        p.add_argument('--step', type=float, default=step)

    def xi_zero(p):
        p.add_argument('--xi-zero', action='store_true',
                       help='evaluate at zero strain')

    def mode(p):
        p.add_argument('--mode', choices=('exact', 'quadratic'),
                       default='exact')

    parser = argparse.ArgumentParser(
        prog='pynv', description='NV centre electron-phonon model.')
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')

    p = commands.add_parser('rates', parents=[common])
    grid(p, 295, 550, 5)
    xi_zero(p)
    mode(p)
    p.set_defaults(func=cmd_rates)

    odmr = commands.add_parser('odmr').add_subparsers(
        dest='action', metavar='ACTION')
    p = odmr.add_parser('simulate', parents=[common])
    p.add_argument('--temp', type=float, default=295.0)
    p.add_argument('--rf-power', type=float, default=0.05)
    p.add_argument('--span', type=float, default=0.0)
    p.add_argument('--points', type=int, default=2001)
    grid(p, 295, 550, 5)
    xi_zero(p)
    mode(p)
    p.set_defaults(func=cmd_odmr_simulate)
    p = odmr.add_parser('fit', parents=[common])
    p.add_argument('files', nargs='+')
    p.set_defaults(func=cmd_odmr_fit)

    zpl = commands.add_parser('zpl').add_subparsers(
        dest='action', metavar='ACTION')
    p = zpl.add_parser('eval', parents=[common])
    grid(p, 2, 300, 2)
    xi_zero(p)
    p.set_defaults(func=cmd_zpl_eval)
    p = zpl.add_parser('fit', parents=[common])
    p.add_argument('files', nargs='+')
    p.set_defaults(func=cmd_zpl_fit)

    vis = commands.add_parser('visibility').add_subparsers(
        dest='action', metavar='ACTION')
    p = vis.add_parser('eval', parents=[common])
    grid(p, 2, 60, 1)
    xi_zero(p)
    p.set_defaults(func=cmd_visibility_eval)
    p = vis.add_parser('fit', parents=[common])
    p.add_argument('files', nargs='+')
    p.add_argument('--zpl', nargs='*', default=[])
    group = p.add_mutually_exclusive_group()
    group.add_argument('--joint', dest='mode', action='store_const',
                       const='joint')
    group.add_argument('--sequential', dest='mode', action='store_const',
                       const='sequential')
    p.set_defaults(func=cmd_visibility_fit, mode='joint')

    mn = commands.add_parser('mn').add_subparsers(
        dest='action', metavar='ACTION')
    p = mn.add_parser('validate', parents=[common])
    p.add_argument('--temp', type=float, default=295.0)
    p.add_argument('--rate-multiple', type=float,
                   help='use W_down = multiple * 2 D_perp (MHz)')
    xi_zero(p)
    p.set_defaults(func=cmd_mn_validate)

    p = commands.add_parser('report', parents=[common])
    p.add_argument('--odmr', nargs='*', default=[])
    p.add_argument('--zpl', nargs='*', default=[])
    p.add_argument('--vis', nargs='*', default=[])
    p.add_argument('--fit', help='fit_result.json with parameters to plot')
    p.set_defaults(func=cmd_report)
    return parser

###############################################################################


def run_command(argv):
    """Ejecuta un comando y devuelve el código de salida."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return error.code if isinstance(error.code, int) else EXIT_PARSE
    if not hasattr(args, 'func'):
        parser.print_usage(sys.stderr)
        return EXIT_PARSE
    out = pathlib.Path(args.out or '.')
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as error:
        print('cannot create {}: {}'.format(out, error), file=sys.stderr)
        return EXIT_IO
    setup = utils.default_logging(args.debug, str(out / 'pynv.log'))
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg = cfg._replace(monte_carlo=stochastic.MonteCarloSpec(
                **dict(cfg.monte_carlo._asdict(), seed=args.seed)))
        out = pathlib.Path(args.out or cfg.output_dir)
        report.write_json(out / 'config.json', cfg.document())
        return args.func(args, cfg, out)
    except ParseError as error:
        log.error('{}', error)
        return EXIT_PARSE
    except ConfigError as error:
        log.error('invalid configuration: {}', error)
        return EXIT_CONFIG
    except OutputError as error:
        log.error('{}', error)
        return EXIT_IO
    except PynvError as error:
        log.error('{}', error)
        return EXIT_ERROR
    finally:
        setup.pop_application()


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == '__main__':
    main()
