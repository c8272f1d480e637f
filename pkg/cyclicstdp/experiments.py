"""Single-neuron convergence, capacity and interference experiments."""
from concurrent.futures import ThreadPoolExecutor
import csv

import attr
import numpy as np

from .codec import generate_pattern
from .engine import (
    Mode, Network, Schedule, resolve_weight_scale, restore_weights, run,
    snapshot_weights,
)
from .exceptions import ConfigError
from .logger import logger
from .plasticity import LockClass, SynapseArray, class_histogram
from .utils import format_float, make_rng, open_text

CONVERGENCE_HEADER = ('iteration', 'mean_phase_ms', 'mean_abs_error_ms',
                      'miss_fraction')
RECRUITMENT_HEADER = ('iteration',) + tuple(c.label for c in LockClass)
CAPACITY_HEADER = ('set_size', 'tolerance_ms', 'hits', 'total')


def _positive_ascending(instance, attribute, value):
    if not value or any(t <= 0 for t in value) or list(value) != sorted(
            value):
        raise ConfigError('must be positive and ascending: %r' % (value,),
                          key=attribute.name)


@attr.s(frozen=True)
class Exp1Config(object):
    n_trials = attr.ib(default=100)
    n_repeats = attr.ib(default=30)
    target_phase = attr.ib(default=18.0)
    recall_cycles = attr.ib(default=4)
    # 1-based, as in "extracted on the third iteration".
    measured_cycle = attr.ib(default=3)

    def __attrs_post_init__(self):
        if not 1 <= self.measured_cycle <= self.recall_cycles:
            raise ConfigError('must be in [1, %d]' % self.recall_cycles,
                              key='measured_cycle')


@attr.s(frozen=True)
class Exp2Config(object):
    set_sizes = attr.ib(default=(5, 10, 15, 20, 25, 30), converter=tuple)
    n_repeats = attr.ib(default=30)
    n_presentations = attr.ib(default=5)
    tolerances = attr.ib(default=(0.5, 1.0, 2.0, 3.0, 5.0, 7.0),
                         converter=tuple, validator=_positive_ascending)


def circular_distance(a, b, t_cycle):
    d = abs(a - b) % t_cycle
    return min(d, t_cycle - d)


@attr.s
class RecallMetrics(object):
    tolerances = attr.ib(converter=tuple)
    # Per presentation: phase of the nearest spike, or None.
    recalled = attr.ib(default=attr.Factory(list))
    errors = attr.ib(default=attr.Factory(list))
    histogram = attr.ib(default=None)

    @property
    def total(self):
        return len(self.recalled)

    def hit_flags(self, tolerance):
        return [e is not None and e <= tolerance for e in self.errors]

    @property
    def hits(self):
        return {tol: sum(self.hit_flags(tol)) for tol in self.tolerances}


def compute_metrics(trace, taught_phases, tolerances, snapshot=None):
    """Score presentation k of ``trace`` against ``taught_phases[k]``."""
    metrics = RecallMetrics(tolerances=tolerances)
    t_cycle = trace.t_cycle
    for k, taught in enumerate(taught_phases):
        spikes = trace.spikes_in_cycle(k)
        if not spikes:
            metrics.recalled.append(None)
            metrics.errors.append(None)
            continue
        nearest = min(spikes,
                      key=lambda s: circular_distance(s, taught, t_cycle))
        metrics.recalled.append(nearest)
        metrics.errors.append(circular_distance(nearest, taught, t_cycle))
    if snapshot is not None:
        metrics.histogram = class_histogram(snapshot.lock_class)
    return metrics


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _recall(net, pattern, n_cycles, taught_phase, tolerances):
    snap = snapshot_weights(net)
    test = restore_weights(net, snap, mode=Mode.RECALL)
    trace = run(test, Schedule.for_pattern(pattern, n_cycles), None)
    return compute_metrics(trace, [taught_phase] * n_cycles, tolerances,
                           snapshot=snap)


@attr.s
class Exp1Result(object):
    config = attr.ib()
    # (trials, iterations): recalled phase, NaN when silent.
    phases = attr.ib(repr=False)
    # (trials, iterations, classes): synapse counts after each iteration.
    histograms = attr.ib(repr=False)
    # (trials, iterations, classes): commits made during each iteration.
    commits = attr.ib(repr=False)
    t_cycle = attr.ib(default=35.0)

    def errors(self):
        d = np.abs(self.phases - self.config.target_phase) % self.t_cycle
        return np.minimum(d, self.t_cycle - d)

    def first_spike_iteration(self, trial):
        """1-based iteration of the first recalled spike, or None."""
        hits = np.flatnonzero(~np.isnan(self.phases[trial]))
        return int(hits[0]) + 1 if hits.size else None

    def convergence_rows(self):
        errors = self.errors()
        rows = []
        for it in range(self.phases.shape[1]):
            col = self.phases[:, it]
            seen = ~np.isnan(col)
            if seen.any():
                mean_phase = float(col[seen].mean())
                mean_err = float(errors[seen, it].mean())
            else:
                mean_phase = mean_err = None
            rows.append((it + 1, mean_phase, mean_err,
                         1.0 - float(seen.mean())))
        return rows

    def recruitment_rows(self):
        mean = self.histograms.mean(axis=0)
        return [(it + 1,) + tuple(float(x) for x in mean[it])
                for it in range(mean.shape[0])]

    def write_convergence(self, fname_or_fobj, header=''):
        _write_rows(fname_or_fobj, header, CONVERGENCE_HEADER,
                    self.convergence_rows())

    def write_recruitment(self, fname_or_fobj, header=''):
        _write_rows(fname_or_fobj, header, RECRUITMENT_HEADER,
                    self.recruitment_rows())


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def _write_rows(fname_or_fobj, header, columns, rows):
    with open_text(fname_or_fobj, 'w') as f:
        f.write(header)
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _exp1_trial(cfg, ecfg, seed, trial, weight_scale):
    pattern = generate_pattern(cfg.M, cfg.N, cfg.T_cyc, cfg.T_bin,
                               make_rng(seed, 'pattern', trial))
    lifetimes = make_rng(seed, 'synapse-lifetimes', trial)
    net = Network.build(cfg, weight_scale)
    train = Schedule.for_pattern(pattern, 1, teacher_phase=ecfg.target_phase)
    n_classes = len(LockClass)
    phases = np.full(ecfg.n_repeats, np.nan)
    histograms = np.zeros((ecfg.n_repeats, n_classes))
    commits = np.zeros((ecfg.n_repeats, n_classes))
    for it in range(ecfg.n_repeats):
        trace = run(net, train, lifetimes)
        for cls, count in trace.commit_counts().items():
            commits[it, cls] = count
        metrics = _recall(net, pattern, ecfg.recall_cycles,
                          ecfg.target_phase, ())
        phase = metrics.recalled[ecfg.measured_cycle - 1]
        if phase is not None:
            phases[it] = phase
        for cls, count in metrics.histogram.items():
            histograms[it, cls] = count
    logger.debug('Trial %d: first recalled spike at iteration %s.', trial,
                 next((i + 1 for i, x in enumerate(phases)
                       if not np.isnan(x)), None))
    return phases, histograms, commits


def run_experiment1(cfg, ecfg, seed, threads=1, weight_scale=None):
    """Teach one spike time repeatedly; test recall after every repeat."""
    if weight_scale is None:
        weight_scale = resolve_weight_scale(cfg, seed)
    logger.info('Experiment I: %d trials x %d repeats, target %.1f ms.',
                ecfg.n_trials, ecfg.n_repeats, ecfg.target_phase)
    results = _map(
        lambda trial: _exp1_trial(cfg, ecfg, seed, trial, weight_scale),
        range(ecfg.n_trials), threads)
    phases, histograms, commits = (np.array(x) for x in zip(*results))
    return Exp1Result(config=ecfg, phases=phases, histograms=histograms,
                      commits=commits, t_cycle=cfg.T_cyc)


@attr.s
class SetResult(object):
    size = attr.ib()
    taught_phases = attr.ib()
    metrics = attr.ib(repr=False)

    def hits(self, tolerance):
        return sum(m.hits[tolerance] for m in self.metrics)

    @property
    def total(self):
        return sum(m.total for m in self.metrics)

    def misses_by_presentation(self, tolerance):
        n = max(m.total for m in self.metrics)
        misses = [0] * n
        for m in self.metrics:
            for k, hit in enumerate(m.hit_flags(tolerance)):
                misses[k] += not hit
        return misses


@attr.s
class Exp2Result(object):
    config = attr.ib()
    sets = attr.ib(repr=False)

    def capacity_rows(self):
        return [(s.size, tol, s.hits(tol), s.total)
                for s in self.sets for tol in self.config.tolerances]

    def write_capacity(self, fname_or_fobj, header=''):
        _write_rows(fname_or_fobj, header, CAPACITY_HEADER,
                    self.capacity_rows())


def train_association(net, pattern, phase, n_repeats, lifetimes):
    net.begin_association()
    net.mode = Mode.TRAINING
    return run(net, Schedule.for_pattern(pattern, n_repeats,
                                         teacher_phase=phase), lifetimes)


def _exp2_set(cfg, ecfg, seed, size, weight_scale):
    b = int(round(cfg.T_cyc / cfg.T_bin))
    phase_rng = make_rng(seed, 'experiment', size)
    phases = [float(x) * cfg.T_bin for x in phase_rng.integers(0, b, size)]
    patterns = [generate_pattern(cfg.M, cfg.N, cfg.T_cyc, cfg.T_bin,
                                 make_rng(seed, 'pattern', size, j))
                for j in range(size)]
    lifetimes = make_rng(seed, 'synapse-lifetimes', size)
    net = Network.build(cfg, weight_scale)
    for pattern, phase in zip(patterns, phases):
        train_association(net, pattern, phase, ecfg.n_repeats, lifetimes)
    metrics = [_recall(net, pattern, ecfg.n_presentations, phase,
                       ecfg.tolerances)
               for pattern, phase in zip(patterns, phases)]
    result = SetResult(size=size, taught_phases=phases, metrics=metrics)
    logger.debug('Set of %d: %d/%d hits at %.1f ms.', size,
                 result.hits(ecfg.tolerances[-1]), result.total,
                 ecfg.tolerances[-1])
    return result


def run_experiment2(cfg, ecfg, seed, threads=1, weight_scale=None):
    """Store pattern sets of growing size on one neuron and score recall."""
    if weight_scale is None:
        weight_scale = resolve_weight_scale(cfg, seed)
    logger.info('Experiment II: set sizes %s, tolerances %s ms.',
                ', '.join(str(s) for s in ecfg.set_sizes),
                ', '.join(format_float(t) for t in ecfg.tolerances))
    sets = _map(lambda size: _exp2_set(cfg, ecfg, seed, size, weight_scale),
                ecfg.set_sizes, threads)
    return Exp2Result(config=ecfg, sets=sets)


@attr.s(frozen=True)
class InterferenceResult(object):
    target_phase = attr.ib()
    before = attr.ib()
    after = attr.ib()
    t_cycle = attr.ib(default=35.0)

    @property
    def shift(self):
        if self.before is None or self.after is None:
            return None
        return circular_distance(self.before, self.after, self.t_cycle)

    def stable(self, tolerance):
        return self.shift is not None and self.shift <= tolerance


def run_interference(cfg, seed, n_extra=9, n_repeats=30, target_phase=18.0,
                     recall_cycles=4, measured_cycle=3, weight_scale=None):
    """Recall phase of one association before and after ``n_extra`` more."""
    if weight_scale is None:
        weight_scale = resolve_weight_scale(cfg, seed)
    b = int(round(cfg.T_cyc / cfg.T_bin))
    patterns = [generate_pattern(cfg.M, cfg.N, cfg.T_cyc, cfg.T_bin,
                                 make_rng(seed, 'pattern', j))
                for j in range(n_extra + 1)]
    phase_rng = make_rng(seed, 'experiment')
    phases = [target_phase] + [float(x) * cfg.T_bin
                               for x in phase_rng.integers(0, b, n_extra)]
    lifetimes = make_rng(seed, 'synapse-lifetimes')
    net = Network.build(cfg, weight_scale)

    def measure():
        m = _recall(net, patterns[0], recall_cycles, target_phase, ())
        return m.recalled[measured_cycle - 1]

    train_association(net, patterns[0], phases[0], n_repeats, lifetimes)
    before = measure()
    for pattern, phase in zip(patterns[1:], phases[1:]):
        train_association(net, pattern, phase, n_repeats, lifetimes)
    after = measure()
    return InterferenceResult(target_phase=target_phase, before=before,
                              after=after, t_cycle=cfg.T_cyc)


def noise_trigger_fraction(params, rng, n_synapses=10000, pre_rate=2.1,
                           post_period=35.0, duration=1050.0):
    """Fraction of synapses that trigger a change from noise alone.

    Pre spikes are Poisson at ``pre_rate`` Hz per synapse; the post
    spike is periodic and reaches every synapse after T_D.
    """
    arr = SynapseArray(n_synapses, params)
    counts = rng.poisson(pre_rate * duration / 1000.0, size=n_synapses)
    channels = np.repeat(np.arange(n_synapses), counts)
    times = rng.uniform(0.0, duration, size=channels.size)
    order = np.argsort(times, kind='stable')
    channels, times = channels[order], times[order]
    offset = rng.uniform(0.0, post_period)
    posts = np.arange(offset, duration, post_period) + params.T_D
    posts = posts[posts < duration]

    triggered = np.zeros(n_synapses, dtype=bool)
    last = 0.0
    j = 0
    for t_post in list(posts) + [np.inf]:
        while j < times.size and times[j] < t_post:
            arr.leak((times[j] - last) / 1000.0)
            last = times[j]
            arr.on_pre(channels[j:j + 1], times[j], rng)
            j += 1
        if t_post == np.inf:
            break
        arr.leak((t_post - last) / 1000.0)
        last = t_post
        pot, dep = arr.on_post(t_post, rng)
        triggered[pot] = True
        triggered[dep] = True
    return float(triggered.mean()) if n_synapses else 0.0


def extrapolate_capacity(single_neuron_patterns, m, n):
    """Associations a full M-neuron memory holds, at M/N times one neuron."""
    if n <= 0:
        raise ConfigError('must be > 0', key='N')
    return single_neuron_patterns * m // n


def extrapolate_capacity_rounded(single_neuron_patterns, m, n):
    """As above but with M/N first rounded down to a whole multiplier."""
    if n <= 0:
        raise ConfigError('must be > 0', key='N')
    return single_neuron_patterns * (m // n)


def acquisition_time_s(associations, t_cycle, n_repeats):
    return associations * t_cycle * n_repeats / 1000.0
