"""Cyclic N-of-M codewords and their spike-event renderings."""
import csv
import enum
import math

import attr
import numpy as np

from .exceptions import GeometryError
from .logger import logger
from .utils import format_float, iter_data_lines, open_text

#: Out-of-band channel id carried by teacher events.
TEACHER_CHANNEL = -1

RASTER_HEADER = ('channel', 'time_ms', 'kind')


class SpikeKind(enum.Enum):
    SIGNAL = 'signal'
    NOISE = 'noise'
    TEACHER = 'teacher'


def n_bins(t_cycle, t_bin):
    """Number of phase bins B, or GeometryError if T_bin does not divide."""
    if t_bin <= 0 or t_cycle <= 0:
        raise GeometryError(
            'T_cycle and T_bin must be positive (got %r, %r)' % (
                t_cycle, t_bin))
    ratio = t_cycle / t_bin
    b = int(round(ratio))
    if b < 1 or abs(ratio - b) > 1e-9 * max(1.0, ratio):
        raise GeometryError(
            'T_cycle (%r ms) is not an integer multiple of T_bin (%r ms)' % (
                t_cycle, t_bin))
    return b


def check_geometry(m, n, t_cycle, t_bin):
    if m < 0 or n < 0:
        raise GeometryError('M and N must be non-negative (got %r, %r)' % (
            m, n))
    if n > m:
        raise GeometryError('N (%d) must not exceed M (%d)' % (n, m))
    return n_bins(t_cycle, t_bin)


@attr.s(frozen=True)
class CyclicPattern(object):
    """An N-of-M codeword: N distinct channels, one phase bin each."""
    m = attr.ib()
    n = attr.ib()
    t_cycle = attr.ib()
    t_bin = attr.ib()
    # Tuple of (channel, bin), sorted by channel.
    entries = attr.ib(converter=lambda e: tuple(
        sorted((int(c), int(b)) for c, b in e)), repr=False)

    def __attrs_post_init__(self):
        b = check_geometry(self.m, self.n, self.t_cycle, self.t_bin)
        if len(self.entries) != self.n:
            raise GeometryError('pattern has %d entries, expected N=%d' % (
                len(self.entries), self.n))
        channels = set()
        for c, phase in self.entries:
            if not 0 <= c < self.m:
                raise GeometryError('channel %d outside [0, %d)' % (
                    c, self.m))
            if not 0 <= phase < b:
                raise GeometryError('phase bin %d outside [0, %d)' % (
                    phase, b))
            channels.add(c)
        if len(channels) != len(self.entries):
            raise GeometryError('pattern channels are not distinct')

    @property
    def n_bins(self):
        return n_bins(self.t_cycle, self.t_bin)

    @property
    def spike_density(self):
        """D_spike: spikes per ms within one cycle."""
        return self.n / self.t_cycle

    @property
    def activity(self):
        """f = N/M, the chance a given channel is active."""
        return self.n / self.m if self.m else 0.0

    @property
    def channels(self):
        return tuple(c for c, _ in self.entries)

    def phase_ms(self, entry):
        return entry[1] * self.t_bin


@attr.s(frozen=True)
class SpikeEvent(object):
    channel = attr.ib()
    time = attr.ib()
    kind = attr.ib(default=SpikeKind.SIGNAL)

    def __attrs_post_init__(self):
        if self.time < 0:
            raise GeometryError('spike time must be >= 0 (got %r)' % (
                self.time,))
        if self.kind is SpikeKind.TEACHER:
            if self.channel != TEACHER_CHANNEL:
                raise GeometryError('teacher events use channel %d' % (
                    TEACHER_CHANNEL,))
        elif self.channel < 0:
            raise GeometryError('negative channel %r' % (self.channel,))


def _non_negative(instance, attribute, value):
    if value < 0:
        raise GeometryError('%s must be >= 0 (got %r)' % (
            attribute.name, value))


@attr.s(frozen=True)
class NoiseSpec(object):
    """Background Poisson rate (Hz per channel) and Gaussian jitter (ms)."""
    poisson_rate = attr.ib(default=0.0, validator=_non_negative)
    jitter_sigma = attr.ib(default=0.0, validator=_non_negative)

    @property
    def is_clean(self):
        return self.poisson_rate == 0 and self.jitter_sigma == 0


def generate_pattern(m, n, t_cycle, t_bin, rng):
    b = check_geometry(m, n, t_cycle, t_bin)
    channels = rng.choice(m, size=n, replace=False)
    bins = rng.integers(0, b, size=n)
    return CyclicPattern(m=m, n=n, t_cycle=t_cycle, t_bin=t_bin,
                         entries=zip(channels.tolist(), bins.tolist()))


def info_content(m, n, t_cycle, t_bin):
    """Bits in one codeword: spatial choice plus one phase per spike."""
    b = check_geometry(m, n, t_cycle, t_bin)
    # math.log2 takes arbitrary-size ints, so the binomial stays exact.
    return math.log2(math.comb(m, n)) + n * math.log2(b)


def info_content_approx(m, n, t_cycle, t_bin):
    b = check_geometry(m, n, t_cycle, t_bin)
    ln_binom = math.lgamma(m + 1) - math.lgamma(m - n + 1) - math.lgamma(
        n + 1)
    return ln_binom / math.log(2) + n * math.log2(b)


def _sort_key(event):
    return (event.time, event.channel, event.kind.value)


def render_cycles(p, n_cycles, t_start=0.0):
    """Signal events for ``n_cycles`` exact repeats of ``p``."""
    if n_cycles < 0:
        raise ValueError('n_cycles must be >= 0 (got %r)' % (n_cycles,))
    b = p.n_bins
    events = [
        SpikeEvent(c, t_start + (k * b + phase) * p.t_bin)
        for k in range(n_cycles)
        for c, phase in p.entries
    ]
    events.sort(key=_sort_key)
    return events


def apply_noise(events, spec, t_end, m, rng):
    """Jitter signal spikes and add Poisson background on every channel.

    Each rendered signal spike is jittered independently, so a pattern
    shifts differently from cycle to cycle.
    """
    if spec.is_clean:
        return list(events)
    out = []
    signal = [e for e in events if e.kind is SpikeKind.SIGNAL]
    other = [e for e in events if e.kind is not SpikeKind.SIGNAL]
    if signal and spec.jitter_sigma > 0:
        shifts = rng.normal(0.0, spec.jitter_sigma, size=len(signal))
        upper = np.nextafter(t_end, 0.0)
        times = np.clip(np.array([e.time for e in signal]) + shifts,
                        0.0, upper)
        n_clamped = int(np.count_nonzero(
            (times == 0.0) | (times == upper)))
        if n_clamped:
            logger.debug('Clamped %d jittered spikes to [0, %r).',
                         n_clamped, t_end)
        out.extend(SpikeEvent(e.channel, float(t), SpikeKind.SIGNAL)
                   for e, t in zip(signal, times))
    else:
        out.extend(signal)
    out.extend(other)
    if spec.poisson_rate > 0 and t_end > 0 and m > 0:
        lam = spec.poisson_rate * t_end / 1000.0
        counts = rng.poisson(lam, size=m)
        channels = np.repeat(np.arange(m), counts)
        times = rng.uniform(0.0, t_end, size=channels.size)
        out.extend(SpikeEvent(int(c), float(t), SpikeKind.NOISE)
                   for c, t in zip(channels, times))
    out.sort(key=_sort_key)
    return out


def render_raster(p, n_clean, n_noisy, spec, rng):
    """Clean cycles followed by cycles with noise, as in a raster figure."""
    events = render_cycles(p, n_clean)
    t0 = n_clean * p.t_cycle
    noisy = render_cycles(p, n_noisy, t_start=0.0)
    noisy = apply_noise(noisy, spec, n_noisy * p.t_cycle, p.m, rng)
    events.extend(attr.evolve(e, time=e.time + t0) for e in noisy)
    return events


def write_raster(events, fname_or_fobj):
    with open_text(fname_or_fobj, 'w') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(RASTER_HEADER)
        for e in events:
            writer.writerow((e.channel, format_float(e.time), e.kind.value))


def write_pattern(p, fname_or_fobj):
    with open_text(fname_or_fobj, 'w') as f:
        f.write('%d,%d,%s,%s\n' % (p.m, p.n, format_float(p.t_cycle),
                                   format_float(p.t_bin)))
        for c, phase in p.entries:
            f.write('%d,%d\n' % (c, phase))


def read_pattern(fname_or_fobj):
    with open_text(fname_or_fobj) as f:
        lines = iter_data_lines(f)
        try:
            header = next(lines)
        except StopIteration:
            raise GeometryError('pattern file has no geometry header')
        try:
            m, n, t_cycle, t_bin = header.split(',')
            m, n, t_cycle, t_bin = int(m), int(n), float(t_cycle), float(
                t_bin)
            entries = [tuple(int(x) for x in line.split(','))
                       for line in lines]
        except ValueError as exc:
            raise GeometryError('malformed pattern file: %s' % (exc,))
    return CyclicPattern(m=m, n=n, t_cycle=t_cycle, t_bin=t_bin,
                         entries=entries)
