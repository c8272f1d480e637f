"""Clock-driven simulation of memory neurons fed by M input channels."""
from collections import deque
from concurrent.futures import ThreadPoolExecutor
import csv
import enum
from io import StringIO

import attr
import numpy as np

from .codec import SpikeKind, apply_noise, generate_pattern, render_cycles
from .exceptions import GeometryError, ScheduleError
from .logger import logger
from .neuron import NeuronState, force_fire, probe_potential, step
from .plasticity import (
    Direction, LockClass, PendingChange, SynapseArray, read_snapshot_rows,
    write_snapshot_rows,
)
from .utils import format_float, make_rng, open_text

TRACE_HEADER = ('event', 'time_ms', 'detail')
MEMBRANE_HEADER = ('time_ms', 'v_mV')
SCALE_PREFIX = '# weight_scale='


class Mode(enum.Enum):
    TRAINING = 'training'
    RECALL = 'recall'


@attr.s(frozen=True)
class Schedule(object):
    """Input events and teacher phases, in ms relative to the run start."""
    events = attr.ib(converter=tuple, repr=False)
    t_end = attr.ib()
    t_cycle = attr.ib()
    # Tuple of (cycle index, phase ms).
    teacher = attr.ib(default=(), converter=tuple)

    def __attrs_post_init__(self):
        last = 0.0
        for e in self.events:
            if e.time < last:
                raise ScheduleError(
                    'schedule out of order: %r ms after %r ms' % (
                        e.time, last))
            last = e.time
        if self.events and last >= self.t_end:
            raise ScheduleError('event at %r ms is not before t_end=%r ms' % (
                last, self.t_end))
        for cycle, phase in self.teacher:
            if not 0 <= phase < self.t_cycle:
                raise ScheduleError(
                    'teacher phase %r ms outside [0, %r)' % (
                        phase, self.t_cycle))
            if cycle * self.t_cycle + phase >= self.t_end:
                raise ScheduleError(
                    'teacher event in cycle %d is not before t_end' % cycle)

    @classmethod
    def for_pattern(cls, pattern, n_cycles, teacher_phase=None, noise=None,
                    rng=None):
        """``n_cycles`` repeats of ``pattern``, taught at ``teacher_phase``."""
        t_end = n_cycles * pattern.t_cycle
        events = render_cycles(pattern, n_cycles)
        if noise is not None and not noise.is_clean:
            events = apply_noise(events, noise, t_end, pattern.m, rng)
        teacher = ()
        if teacher_phase is not None:
            teacher = [(k, teacher_phase) for k in range(n_cycles)]
        return cls(events=events, t_end=t_end, t_cycle=pattern.t_cycle,
                   teacher=teacher)

    @property
    def n_cycles(self):
        return int(round(self.t_end / self.t_cycle))


@attr.s(frozen=True)
class CommitRecord(object):
    cycle = attr.ib()
    time = attr.ib()
    synapse = attr.ib()
    direction = attr.ib()
    lock_class = attr.ib()


@attr.s
class RunTrace(object):
    t_end = attr.ib()
    t_cycle = attr.ib()
    output_spikes = attr.ib(default=attr.Factory(list))
    teacher_spikes = attr.ib(default=attr.Factory(list))
    absorbed_teacher = attr.ib(default=attr.Factory(list))
    # (time, v) at each teacher phase.
    probes = attr.ib(default=attr.Factory(list))
    commits = attr.ib(default=attr.Factory(list), repr=False)
    post_deliveries = attr.ib(default=attr.Factory(list), repr=False)
    n_delivered = attr.ib(default=0)
    membrane = attr.ib(default=None, repr=False)

    @property
    def n_cycles(self):
        return int(round(self.t_end / self.t_cycle))

    def spikes_in_cycle(self, k):
        """Phases of output spikes falling in cycle ``k``."""
        lo = k * self.t_cycle
        hi = lo + self.t_cycle
        return [t - lo for t in self.output_spikes if lo <= t < hi]

    def feedforward_spikes(self):
        teacher = set(self.teacher_spikes)
        return [t for t in self.output_spikes if t not in teacher]

    def commit_counts(self):
        counts = {cls: 0 for cls in LockClass
                  if cls is not LockClass.UNLOCKED}
        for c in self.commits:
            counts[c.lock_class] += 1
        return counts

    def to_csv(self, fname_or_fobj, header=None):
        rows = [(t, 0, 'spike', 'teacher' if t in self.teacher_spikes
                 else 'feedforward') for t in self.output_spikes]
        rows += [(t, 1, 'absorbed', 'refractory')
                 for t in self.absorbed_teacher]
        rows += [(t, 2, 'probe', 'v=%s' % format_float(v))
                 for t, v in self.probes]
        rows += [(c.time, 3, 'commit', 'synapse=%d direction=%s class=%s' % (
            c.synapse, c.direction.value, c.lock_class.label))
            for c in self.commits]
        rows.sort(key=lambda r: r[:2])
        with open_text(fname_or_fobj, 'w') as f:
            if header:
                f.write(header)
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(TRACE_HEADER)
            for t, _, event, detail in rows:
                writer.writerow((event, format_float(t), detail))

    def write_membrane(self, fname_or_fobj, header=None):
        with open_text(fname_or_fobj, 'w') as f:
            if header:
                f.write(header)
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(MEMBRANE_HEADER)
            for t, v in self.membrane or ():
                writer.writerow((format_float(t), format_float(v)))


@attr.s
class Network(object):
    """One memory neuron fully connected to ``m`` input channels.

    The clock ``t`` carries over between runs, so training can be
    paused after any cycle and resumed.
    """
    m = attr.ib()
    neuron_params = attr.ib(repr=False)
    learning = attr.ib(repr=False)
    weight_scale = attr.ib()
    mode = attr.ib(default=Mode.TRAINING)
    synapses = attr.ib(default=None, repr=False)
    neuron = attr.ib(default=None, repr=False)
    t = attr.ib(default=0.0)
    last_leak = attr.ib(default=0.0, repr=False)
    pending = attr.ib(default=attr.Factory(dict), repr=False)
    post_queue = attr.ib(default=attr.Factory(deque), repr=False)

    def __attrs_post_init__(self):
        if self.synapses is None:
            self.synapses = SynapseArray(self.m, self.learning)
        elif len(self.synapses) != self.m:
            raise GeometryError('%d synapses for M=%d' % (
                len(self.synapses), self.m))
        if self.neuron is None:
            self.neuron = NeuronState.at_rest(self.neuron_params)

    @classmethod
    def build(cls, cfg, weight_scale, mode=Mode.TRAINING):
        return cls(m=cfg.M, neuron_params=cfg.neuron_params(),
                   learning=cfg.learning_params(), weight_scale=weight_scale,
                   mode=mode)

    @property
    def dt(self):
        return self.neuron_params.dt

    def begin_association(self):
        """Forget staged changes and the last probe before a new pattern."""
        if self.pending:
            logger.debug('Discarding %d staged changes.', len(self.pending))
        self.pending.clear()
        self.neuron.last_probe_v = None

    def _leak(self, t):
        self.synapses.leak((t - self.last_leak) / 1000.0)
        self.last_leak = t

    def _stage(self, ids, direction, cycle):
        for i in ids.tolist():
            if i not in self.pending:
                self.pending[i] = PendingChange(direction, i, cycle)

    def _commit(self, lock_zone, fired_ff, trace, now, cycle):
        if not self.pending:
            return
        changes = sorted(self.pending.values(),
                         key=lambda c: (c.direction is Direction.DEPRESS,
                                        c.synapse))
        self.pending.clear()
        for direction in Direction:
            ids = [c.synapse for c in changes if c.direction is direction]
            if not ids:
                continue
            done, cls = self.synapses.commit(ids, direction, lock_zone,
                                             fired_ff)
            trace.commits.extend(CommitRecord(cycle, now, i, direction, cls)
                                 for i in done.tolist())


def run(net, sched, rng, record_membrane=False):
    """Advance ``net`` through ``sched``; returns the :class:`RunTrace`."""
    p = net.neuron_params
    lp = net.learning
    dt = p.dt
    training = net.mode is Mode.TRAINING
    events = [e for e in sched.events if e.kind is not SpikeKind.TEACHER]
    chans = np.fromiter((e.channel for e in events), dtype=np.intp,
                        count=len(events))
    if chans.size and chans.max() >= net.m:
        raise GeometryError('event channel %d outside M=%d' % (
            chans.max(), net.m))
    times = np.fromiter((e.time for e in events), dtype=float,
                        count=len(events))
    steps = np.floor(times / dt + 1e-6).astype(np.intp)

    teacher_at = {}
    if training:
        for cycle, phase in sched.teacher:
            teacher_at[int(round((cycle * sched.t_cycle + phase) / dt))] = (
                cycle)

    t0 = net.t
    n_steps = int(round(sched.t_end / dt))
    eps = dt * 1e-6
    trace = RunTrace(t_end=sched.t_end, t_cycle=sched.t_cycle)
    if record_membrane:
        trace.membrane = []
    weights = net.synapses.weight
    scale = net.weight_scale
    state = net.neuron
    queue = net.post_queue
    last_ff = None
    ptr = 0
    n_events = steps.size

    for i in range(n_steps):
        now = i * dt
        abs_now = t0 + now

        while queue and queue[0] <= abs_now + eps:
            t_post = queue.popleft()
            if training:
                net._leak(t_post)
                pot, dep = net.synapses.on_post(t_post, rng)
                cycle = int((t_post - t0) // sched.t_cycle)
                net._stage(pot, Direction.POTENTIATE, cycle)
                net._stage(dep, Direction.DEPRESS, cycle)
                trace.post_deliveries.append(t_post - t0)

        drive = 0.0
        if ptr < n_events and steps[ptr] == i:
            j = ptr + 1
            while j < n_events and steps[j] == i:
                j += 1
            idx = chans[ptr:j]
            trace.n_delivered += j - ptr
            ptr = j
            drive = float(weights[idx].sum()) * scale
            if training:
                net._leak(abs_now)
                net.synapses.on_pre(np.unique(idx), abs_now, rng)

        cycle = teacher_at.get(i)
        if cycle is not None:
            prev = state.last_probe_v
            lock_zone = prev is not None and p.V_thresh - prev <= lp.V_diff
            trace.probes.append((now, probe_potential(state, abs_now)))
            cycle_start = cycle * sched.t_cycle
            fired_ff = last_ff is not None and cycle_start <= last_ff < now
            state.fired_feedforward_this_cycle = fired_ff
            net._commit(lock_zone, fired_ff, trace, now, cycle)
            state, fired = force_fire(state, p, abs_now)
            if fired:
                trace.output_spikes.append(now)
                trace.teacher_spikes.append(now)
                queue.append(abs_now + lp.T_D)
            else:
                trace.absorbed_teacher.append(now)

        state, fired = step(state, p, drive, dt, abs_now)
        if fired:
            last_ff = now + dt
            trace.output_spikes.append(last_ff)
            queue.append(t0 + last_ff + lp.T_D)
        if record_membrane:
            trace.membrane.append((now + dt, state.v))

    net.neuron = state
    net.t = t0 + sched.t_end
    if training:
        net._leak(net.t)
    return trace


@attr.s(frozen=True)
class WeightSnapshot(object):
    weight = attr.ib(repr=False)
    lock_class = attr.ib(repr=False)
    accum_plus = attr.ib(repr=False)
    accum_minus = attr.ib(repr=False)
    # Scale the weights were trained under; None if unknown.
    weight_scale = attr.ib(default=None)

    @property
    def m(self):
        return self.weight.size

    def to_csv(self, fname_or_fobj, header=None):
        with open_text(fname_or_fobj, 'w') as f:
            if header:
                f.write(header)
            if self.weight_scale is not None:
                f.write('%s%s\n' % (SCALE_PREFIX,
                                    format_float(self.weight_scale)))
            write_snapshot_rows(f, self.weight, self.lock_class,
                                self.accum_plus, self.accum_minus)

    @classmethod
    def from_csv(cls, fname_or_fobj):
        with open_text(fname_or_fobj) as f:
            text = f.read()
        weight_scale = None
        for line in text.splitlines():
            if not line.startswith(SCALE_PREFIX):
                continue
            value = line[len(SCALE_PREFIX):].strip()
            try:
                weight_scale = float(value)
            except ValueError:
                raise GeometryError('malformed weight scale %r' % (value,))
            if weight_scale < 0:
                raise GeometryError('negative weight scale %r' % (value,))
        return cls(*read_snapshot_rows(StringIO(text)),
                   weight_scale=weight_scale)


def snapshot_weights(net):
    s = net.synapses
    return WeightSnapshot(weight=s.weight.copy(),
                          lock_class=s.lock_class.copy(),
                          accum_plus=s.accum_plus.copy(),
                          accum_minus=s.accum_minus.copy(),
                          weight_scale=net.weight_scale)


def restore_weights(net, snapshot, keep_accumulators=False, mode=None):
    """A copy of ``net`` carrying the snapshot's synapses, neuron at rest."""
    if snapshot.m != net.m:
        raise GeometryError('snapshot has %d synapses, network M=%d' % (
            snapshot.m, net.m))
    synapses = SynapseArray(net.m, net.learning)
    synapses.weight[:] = snapshot.weight
    synapses.lock_class[:] = snapshot.lock_class
    if keep_accumulators:
        synapses.accum_plus[:] = snapshot.accum_plus
        synapses.accum_minus[:] = snapshot.accum_minus
    return Network(m=net.m, neuron_params=net.neuron_params,
                   learning=net.learning, weight_scale=net.weight_scale,
                   mode=net.mode if mode is None else mode,
                   synapses=synapses)


def recall_weight_scale(cfg, snapshot):
    """The configured scale if given, else the one stored with the weights."""
    if cfg.weight_scale is not None:
        if (snapshot.weight_scale is not None and
                not np.isclose(cfg.weight_scale, snapshot.weight_scale)):
            logger.warning('Recalling with weight_scale=%s; the snapshot '
                           'was trained with %s.',
                           format_float(cfg.weight_scale),
                           format_float(snapshot.weight_scale))
        return cfg.weight_scale
    if snapshot.weight_scale is None:
        raise GeometryError('snapshot records no weight_scale; '
                            'set it explicitly')
    return snapshot.weight_scale


def free_membrane_params(params):
    """``params`` with the threshold moved out of reach."""
    # v approaches E_rev only asymptotically, so it never fires.
    return attr.evolve(params, V_thresh=float(np.nextafter(params.E_rev,
                                                           params.V_0)))


def steady_state_potential(cfg, weight_scale, patterns, n_cycles=4,
                           neuron_params=None):
    """Mean membrane potential of an untrained neuron after cycle one.

    This is the probe potential averaged over all teacher phases.  By
    default the neuron is kept subthreshold, so the result rises
    monotonically with ``weight_scale``.
    """
    if neuron_params is None:
        neuron_params = free_membrane_params(cfg.neuron_params())
    learning = cfg.learning_params()
    total = 0.0
    count = 0
    for pattern in patterns:
        net = Network(m=cfg.M, neuron_params=neuron_params,
                      learning=learning, weight_scale=weight_scale,
                      mode=Mode.RECALL)
        trace = run(net, Schedule.for_pattern(pattern, n_cycles), None,
                    record_membrane=True)
        vs = [v for t, v in trace.membrane if t > pattern.t_cycle]
        total += sum(vs)
        count += len(vs)
    return total / count if count else cfg.V_0


def spontaneous_spikes(cfg, weight_scale, patterns, n_cycles=4):
    """Output spikes of an untrained neuron, summed over ``patterns``."""
    n = 0
    for pattern in patterns:
        net = Network.build(cfg, weight_scale, mode=Mode.RECALL)
        n += len(run(net, Schedule.for_pattern(pattern, n_cycles),
                     None).output_spikes)
    return n


def calibrate_weight_scale(cfg, rng, n_patterns=3, n_cycles=4,
                           tolerance=1e-4):
    """Bisect the weight scale until an untrained, subthreshold neuron
    idles at ``calibration_fraction`` of the way from V_0 to V_thresh."""
    target = cfg.V_0 + cfg.calibration_fraction * (cfg.V_thresh - cfg.V_0)
    patterns = [generate_pattern(cfg.M, cfg.N, cfg.T_cyc, cfg.T_bin, rng)
                for _ in range(n_patterns)]

    def potential(scale):
        return steady_state_potential(cfg, scale, patterns, n_cycles)

    lo, hi = 0.0, 1.0
    while potential(hi) < target:
        lo, hi = hi, hi * 2
        if hi > 1e6:
            raise GeometryError(
                'cannot reach %.2f mV: no input drives the neuron '
                '(N=%d, W_init=%s)' % (target, cfg.N, format_float(
                    cfg.W_init)))
    while hi - lo > tolerance * hi:
        mid = 0.5 * (lo + hi)
        v = potential(mid)
        logger.debug('Calibration: scale=%.6f -> %.3f mV (target %.3f).',
                     mid, v, target)
        if v < target:
            lo = mid
        else:
            hi = mid
    scale = 0.5 * (lo + hi)
    n_spikes = spontaneous_spikes(cfg, scale, patterns, n_cycles)
    if n_spikes:
        logger.warning('%.2f mV is not reachable without firing: the '
                       'untrained neuron spikes %d times at weight scale '
                       '%.6f.', target, n_spikes, scale)
    logger.info('Calibrated weight scale: %.6f.', scale)
    return scale


def resolve_weight_scale(cfg, seed):
    if cfg.weight_scale is not None:
        return cfg.weight_scale
    return calibrate_weight_scale(cfg, make_rng(seed, 'calibration'))


@attr.s
class Population(object):
    """Independent memory neurons that share one input stream."""
    networks = attr.ib(default=attr.Factory(list))

    @classmethod
    def build(cls, cfg, size, weight_scale, mode=Mode.TRAINING):
        return cls([Network.build(cfg, weight_scale, mode)
                    for _ in range(size)])

    def run(self, events, t_end, t_cycle, teacher_phases, seed, threads=1):
        """Teach neuron i at ``teacher_phases[i]`` (None: no teacher)."""
        if len(teacher_phases) != len(self.networks):
            raise GeometryError('%d teacher phases for %d neurons' % (
                len(teacher_phases), len(self.networks)))
        n_cycles = int(round(t_end / t_cycle))

        def job(i):
            phase = teacher_phases[i]
            teacher = () if phase is None else [
                (k, phase) for k in range(n_cycles)]
            sched = Schedule(events=events, t_end=t_end, t_cycle=t_cycle,
                             teacher=teacher)
            return run(self.networks[i], sched,
                       make_rng(seed, 'synapse-lifetimes', i))

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            return list(pool.map(job, range(len(self.networks))))
