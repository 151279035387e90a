#!/usr/bin/env python3

"""
Oráculo Estocástico del Estrechamiento por Movimiento.

A spin transition whose frequency jumps between +δ (upper orbital branch)
and −δ (lower branch) with rates W↓ (upper → lower) and W↑ (lower → upper)
is simulated trajectory by trajectory. Dwell times are drawn exactly from
exponential distributions, the phase accrues exactly within each dwell, and
the trajectory average of e^{iφ(t)} gives the coherence G(t). Its Fourier
transform is the exchange averaged line, whose width is compared with the
fast exchange result β·2πδ²/W↓.

Every trajectory owns a Philox stream keyed by (seed, trajectory index), and
trajectories are reduced in a fixed order inside fixed batches, so results
do not depend on the number of worker threads.

Units: frequencies and rates in MHz, times in µs.
"""

###############################################################################
# Módulos Importados
###############################################################################

import collections
import concurrent.futures
import logbook
import math
import numpy as np
import scipy.linalg

from pynv import utils
from pynv.core import AliasingError, ConfigError, DecayError, RegimeError

###############################################################################
# Constantes Globales Y Variables
###############################################################################

log = logbook.Logger(__name__)

FAST_EXCHANGE_MINIMUM = 20.0
DECAY_THRESHOLD = 1e-3
NOISE_FLOOR = 4.0
TAIL_FRACTION = 0.05
PADDING = 4

###############################################################################
# Contenedores
###############################################################################


class TelegraphConfig(collections.namedtuple(
        'TelegraphConfig',
        'delta w_down w_up t_total n_trajectories seed n_time_samples '
        'initial_site n_batches',
        defaults=(20000, 0, 2 ** 14, None, 20))):
    """
    Configuración del proceso telegráfico.

    initial_site is 'upper' or 'lower' to force the starting branch, or
    None to sample it from the stationary distribution.
    """

    __slots__ = ()

    def __new__(cls, *args, **kwargs):
        self = super().__new__(cls, *args, **kwargs)
        if not self.delta >= 0:
            raise ConfigError('delta', 'must be >= 0')
        if not (self.w_down >= 0 and self.w_up >= 0):
            raise ConfigError('w_down', 'rates must be >= 0')
        if not self.t_total > 0:
            raise ConfigError('t_total', 'must be positive')
        if self.n_trajectories < 1:
            raise ConfigError('n_trajectories', 'must be >= 1')
        if self.seed < 0:
            raise ConfigError('seed', 'must be >= 0')
        if self.n_time_samples < 2:
            raise ConfigError('n_time_samples', 'must be >= 2')
        if self.initial_site not in (None, 'upper', 'lower'):
            raise ConfigError('initial_site', "must be 'upper' or 'lower'")
        if self.initial_site is None and self.w_down + self.w_up == 0:
            raise ConfigError(
                'initial_site', 'needed when both rates vanish')
        if not 1 <= self.n_batches <= self.n_trajectories:
            raise ConfigError('n_batches', 'must lie in [1, n_trajectories]')
        return self

    @property
    def p_upper(self):
        """Ocupación estacionaria de la rama superior."""
        return self.w_up / (self.w_up + self.w_down)

    @property
    def times(self):
        return np.linspace(0.0, self.t_total, self.n_time_samples)


class MonteCarloSpec(collections.namedtuple(
        'MonteCarloSpec',
        'n_trajectories seed n_time_samples t_total_factor n_batches '
        'n_bootstrap workers',
        defaults=(20000, 0, 2 ** 14, 10.0, 20, 200, None))):
    """Ajustes de Monte Carlo usados por validate_fast_exchange."""

    __slots__ = ()

    def __new__(cls, *args, **kwargs):
        self = super().__new__(cls, *args, **kwargs)
        if self.n_trajectories < 1:
            raise ConfigError('n_trajectories', 'must be >= 1')
        if self.seed < 0:
            raise ConfigError('seed', 'must be >= 0')
        if not self.t_total_factor > 0:
            raise ConfigError('t_total_factor', 'must be positive')
        if self.n_bootstrap < 0:
            raise ConfigError('n_bootstrap', 'must be >= 0')
        return self


Coherence = collections.namedtuple(
    'Coherence',
    'times g n_trajectories upper_fraction upper_fraction_stderr batch_g '
    'config', defaults=(None,) * 5)

LineshapeResult = collections.namedtuple(
    'LineshapeResult', 'freq_grid spectrum fwhm peak_center stderr_fwhm')

###############################################################################
# Trayectorias
###############################################################################


def _generator(seed, index):
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence(seed, spawn_key=(index,))))


def _trajectory(c, index, times):
    """Fasor e^{iφ(t)} y tiempo en la rama superior de una trayectoria."""
    rng = _generator(c.seed, index)
    if c.initial_site is None:
        upper = rng.random() < c.p_upper
    else:
        upper = c.initial_site == 'upper'
    first, second = (c.w_down, c.w_up) if upper else (c.w_up, c.w_down)
    sign0 = 1.0 if upper else -1.0
    # ritmo medio de saltos, para dimensionar los bloques de tiempos
    mean_rate = 2 * c.w_down * c.w_up / (c.w_down + c.w_up) if (
        c.w_down and c.w_up) else 0.0
    block = int(1.2 * mean_rate * c.t_total) + 64
    dwells, elapsed, parity = [], 0.0, 0
    while elapsed < c.t_total:
        draw = rng.standard_exponential(block)
        rate = np.where((np.arange(block) + parity) % 2 == 0, first, second)
        with np.errstate(divide='ignore'):
            piece = draw / rate
        dwells.append(piece)
        elapsed += piece.sum()
        parity = (parity + block) % 2
    dwells = np.concatenate(dwells)
    ends = np.minimum(np.cumsum(dwells), c.t_total)
    last = np.searchsorted(ends, c.t_total, side='left')
    ends = ends[:last + 1]
    durations = np.diff(ends, prepend=0.0)
    signs = np.where(np.arange(ends.size) % 2 == 0, sign0, -sign0)
    omega = 2 * math.pi * c.delta
    phase_ends = np.cumsum(signs * omega * durations)
    k = np.minimum(np.searchsorted(ends, times, side='right'), ends.size - 1)
    start = np.where(k > 0, ends[k - 1], 0.0)
    phase_start = np.where(k > 0, phase_ends[k - 1], 0.0)
    phase = phase_start + signs[k] * omega * (times - start)
    upper_time = durations[signs > 0].sum()
    return np.exp(1j * phase), upper_time


def _batch(c, indices, times):
    total = np.zeros(times.size, dtype=complex)
    upper = np.zeros(len(indices))
    for j, index in enumerate(indices):
        phasor, upper[j] = _trajectory(c, index, times)
        total += phasor
    return total, upper


def simulate_coherence(c, workers=None, progress=False):
    """
    Coherencia promediada G(t) del proceso telegráfico.

    Returns a Coherence with the uniform time grid, the average G, the
    batch averages used for bootstrap errors and the fraction of time spent
    in the upper branch.
    """
    if not isinstance(c, TelegraphConfig):
        raise ConfigError('config', 'expected a TelegraphConfig')
    times = c.times
    batches = np.array_split(np.arange(c.n_trajectories), c.n_batches)
    log.debug('simulating {} trajectories in {} batches',
              c.n_trajectories, c.n_batches)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        jobs = pool.map(lambda idx: _batch(c, idx, times), batches)
        if progress:
            jobs = utils.pbar(jobs, 'MONTE CARLO', len(batches))
        results = list(jobs)
    total = np.zeros(times.size, dtype=complex)
    for batch_total, _ in results:
        total += batch_total
    g = total / c.n_trajectories
    batch_g = np.array([
        batch_total / len(idx)
        for (batch_total, _), idx in zip(results, batches)])
    upper = np.concatenate([u for _, u in results]) / c.t_total
    stderr = (upper.std(ddof=1) / math.sqrt(upper.size)
              if upper.size > 1 else math.nan)
    return Coherence(times, g, c.n_trajectories, float(upper.mean()),
                     float(stderr), batch_g, c)

###############################################################################
# Oráculo Analítico
###############################################################################


def exchange_coherence(times, delta, w_down, w_up):
    """
    Coherencia exacta del intercambio entre dos sitios.

    G(t) = 1ᵀ·exp((iΩ + K)t)·p_eq with Ω = diag(+2πδ, −2πδ) and the rate
    matrix K of the two branches; the propagator over one grid step comes
    from scipy.linalg.expm.
    """
    times = np.asarray(times, dtype=float)
    omega = 2 * math.pi * delta
    generator = np.array([
        [1j * omega - w_down, w_up],
        [w_down, -1j * omega - w_up]])
    p_eq = np.array([w_up, w_down]) / (w_up + w_down)
    step = times[1] - times[0]
    propagator = scipy.linalg.expm(generator * step)
    state = p_eq.astype(complex)
    g = np.empty(times.size, dtype=complex)
    for n in range(times.size):
        g[n] = state.sum()
        state = propagator @ state
    return Coherence(times, g)


def exchange_fwhm(delta, w_down, w_up):
    """
    FWHM (MHz) de la línea en intercambio rápido.

    HWHM = 4·p_up·p_down·(2·2πδ)²/(4(W↓ + W↑)) in angular units; the FWHM in
    MHz equals β·2πδ²/W↓ with β = 8u/(1+u)³, u = W↑/W↓.
    """
    total = w_down + w_up
    p_up, p_down = w_up / total, w_down / total
    hwhm = 4 * p_up * p_down * (2 * 2 * math.pi * delta) ** 2 / (4 * total)
    return hwhm / math.pi

###############################################################################
# Forma de Línea
###############################################################################


def _spectrum(times, g):
    dt = times[1] - times[0]
    weighted = np.array(g, dtype=complex)
    weighted[0] *= 0.5
    n = PADDING * times.size
    padded = np.zeros(n, dtype=complex)
    padded[:times.size] = weighted
    spectrum = 2 * dt * np.fft.fft(padded).real
    freqs = np.fft.fftfreq(n, dt)
    freqs, spectrum = np.fft.fftshift(freqs), np.fft.fftshift(spectrum)
    spectrum = np.clip(spectrum, 0.0, None)
    area = spectrum.sum() * (freqs[1] - freqs[0])
    return freqs, spectrum / area


def _past_noise_floor(times, g, n_trajectories):
    """
    Sustituye la cola ruidosa de G(t) por su decaimiento exponencial.

    Past the last sample with |G| >= NOISE_FLOOR/√n the average is Monte
    Carlo noise. Those samples are replaced by a complex exponential fitted
    to log|G| and the unwrapped phase between half height and the floor,
    weighted by |G|. Without a usable fit the tail is set to zero.
    """
    if not n_trajectories:
        return g
    amplitude = np.abs(g)
    floor = NOISE_FLOOR / math.sqrt(n_trajectories) * amplitude[0]
    above = np.flatnonzero(amplitude >= floor)
    cut = above[-1] + 1 if above.size else 1
    if cut >= g.size:
        return g
    below_half = np.flatnonzero(amplitude[:cut] < 0.5 * amplitude[0])
    start = min(below_half[0] if below_half.size else 0, max(cut - 8, 0))
    keep = np.arange(start, cut)[amplitude[start:cut] >= floor]
    t, segment, weight = times[keep], g[keep], amplitude[keep]
    out = np.array(g, dtype=complex)
    out[cut:] = 0.0
    if segment.size < 3:
        return out
    rate, log_a = np.polyfit(t, np.log(weight), 1, w=weight)
    omega, phase = np.polyfit(t, np.unwrap(np.angle(segment)), 1, w=weight)
    if rate < 0:
        out[cut:] = np.exp(log_a + rate * times[cut:]) * np.exp(
            1j * (phase + omega * times[cut:]))
    log.debug('coherence tail replaced after {:.4g} us ({} of {} samples)',
              times[cut], g.size - cut, g.size)
    return out


def _half_crossing(freqs, spectrum, peak, half, step):
    i = peak
    while 0 <= i + step < spectrum.size and spectrum[i + step] > half:
        i += step
    j = i + step
    if not 0 <= j < spectrum.size:
        return math.nan
    # interpolación lineal entre i (por encima) y j (por debajo)
    return freqs[i] + (half - spectrum[i]) * (
        freqs[j] - freqs[i]) / (spectrum[j] - spectrum[i])


def _width(freqs, spectrum):
    peak = int(np.argmax(spectrum))
    half = spectrum[peak] / 2
    left = _half_crossing(freqs, spectrum, peak, half, -1)
    right = _half_crossing(freqs, spectrum, peak, half, +1)
    centre = freqs[peak]
    if 0 < peak < spectrum.size - 1:
        a, b, c = spectrum[peak - 1:peak + 2]
        curvature = a - 2 * b + c
        if curvature:
            centre += 0.5 * (a - c) / curvature * (freqs[1] - freqs[0])
    return right - left, centre


def _bootstrap(gt, n_bootstrap):
    if gt.batch_g is None or len(gt.batch_g) < 2 or not n_bootstrap:
        return math.nan
    seed = gt.config.seed if gt.config is not None else 0
    # flujo siguiente al del último trayecto
    rng = _generator(seed, gt.n_trajectories or 0)
    n = len(gt.batch_g)
    widths = []
    for _ in range(n_bootstrap):
        pick = rng.integers(0, n, n)
        g = _past_noise_floor(
            gt.times, gt.batch_g[pick].mean(0), gt.n_trajectories)
        widths.append(_width(*_spectrum(gt.times, g))[0])
    return float(np.nanstd(widths, ddof=1))


def lineshape_from_coherence(gt, delta=None, n_bootstrap=200):
    """
    Espectro normalizado a partir de G(t).

    The spectrum 2·Re∫G(t)e^{−i2πft}dt is computed by FFT with zero
    padding, clipped at zero and normalised to unit area. For Monte Carlo
    averages (n_trajectories set) the samples past the noise floor
    NOISE_FLOOR/√n are replaced by the fitted exponential decay first. The
    FWHM comes from linear interpolation at half maximum.

    Raises DecayError when |G| has not decayed below max(1e-3,
    3/√n_trajectories) of |G(0)| over the last samples, and AliasingError
    when the jump frequency δ reaches the Nyquist frequency of the grid.
    """
    times = np.asarray(gt.times, dtype=float)
    g = np.asarray(gt.g, dtype=complex)
    steps = np.diff(times)
    if times.size < 2 or not np.allclose(steps, steps[0], rtol=1e-9):
        raise DecayError('coherence must be sampled on a uniform grid')
    if delta is None and gt.config is not None:
        delta = gt.config.delta
    nyquist = 1 / (2 * steps[0])
    if delta is not None and abs(delta) >= nyquist:
        raise AliasingError(
            'delta = {} MHz is beyond the Nyquist frequency {:.6g} MHz'
            .format(delta, nyquist))
    threshold = DECAY_THRESHOLD
    if gt.n_trajectories:
        threshold = max(threshold, 3 / math.sqrt(gt.n_trajectories))
    tail = np.abs(g[-max(1, int(TAIL_FRACTION * g.size)):]).mean()
    if tail > threshold * abs(g[0]):
        raise DecayError(
            'coherence tail {:.3g} above {:.3g}; increase t_total'
            .format(tail, threshold))
    freqs, spectrum = _spectrum(
        times, _past_noise_floor(times, g, gt.n_trajectories))
    fwhm, centre = _width(freqs, spectrum)
    return LineshapeResult(
        freqs, spectrum, fwhm, centre, _bootstrap(gt, n_bootstrap))

###############################################################################
# Validación
###############################################################################


def default_config(delta, w_down, w_up, spec=MonteCarloSpec()):
    """TelegraphConfig con t_total = t_total_factor/Γ esperado."""
    gamma = exchange_fwhm(delta, w_down, w_up)
    return TelegraphConfig(
        delta=delta, w_down=w_down, w_up=w_up,
        t_total=spec.t_total_factor / gamma,
        n_trajectories=spec.n_trajectories, seed=spec.seed,
        n_time_samples=spec.n_time_samples,
        n_batches=min(spec.n_batches, spec.n_trajectories))


def validate_fast_exchange(p, w_down, w_up, spec=MonteCarloSpec(),
                           progress=False):
    """
    Compara la anchura Monte Carlo con β·2πD⊥²/W↓.

    The exchange sites sit at ±D⊥ (bare D⊥, not D⊥·R). Rates in MHz.
    Raises RegimeError unless W↓ >= 20·(2D⊥).
    """
    delta = p.d_perp
    if w_down < FAST_EXCHANGE_MINIMUM * 2 * delta:
        raise RegimeError(
            'W_down = {:.6g} MHz is below {}·2D_perp = {:.6g} MHz'.format(
                w_down, FAST_EXCHANGE_MINIMUM,
                FAST_EXCHANGE_MINIMUM * 2 * delta))
    if not 0 < w_up <= w_down:
        raise RegimeError('need 0 < W_up <= W_down')
    u = w_up / w_down
    beta = 8 * u / (1 + u) ** 3
    formula = beta * 2 * math.pi * delta ** 2 / w_down
    config = default_config(delta, w_down, w_up, spec)
    log.info('mn validate: delta={} MHz, W_down={:.6g} MHz, W_up={:.6g} MHz,'
             ' {} trajectories', delta, w_down, w_up, config.n_trajectories)
    gt = simulate_coherence(config, spec.workers, progress)
    line = lineshape_from_coherence(gt, delta, spec.n_bootstrap)
    relative = line.fwhm / formula - 1
    spread = 1.96 * line.stderr_fwhm / formula
    expected_upper = config.p_upper
    occupancy_z = (gt.upper_fraction - expected_upper) / (
        gt.upper_fraction_stderr or math.inf)
    return collections.OrderedDict([
        ('site_convention', '+/-D_perp'),
        ('delta_MHz', delta),
        ('w_down_MHz', w_down),
        ('w_up_MHz', w_up),
        ('x', -math.log(u)),
        ('beta', beta),
        ('t_total_us', config.t_total),
        ('n_trajectories', config.n_trajectories),
        ('seed', config.seed),
        ('fwhm_mc', line.fwhm),
        ('fwhm_mc_stderr', line.stderr_fwhm),
        ('fwhm_formula', formula),
        ('relative_error', relative),
        ('relative_error_ci', [relative - spread, relative + spread]),
        ('peak_center_MHz', line.peak_center),
        ('upper_fraction', gt.upper_fraction),
        ('upper_fraction_expected', expected_upper),
        ('occupancy_z', occupancy_z)])

###############################################################################
