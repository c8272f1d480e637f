"""Cyclic STDP synapse: pair detectors, accumulators and the lock bit.

Each synapse runs two independent one-bit machines. Pre-waiting-post
counts pre->post pairs into ``accum_plus``; post-waiting-pre counts
post->pre pairs into ``accum_minus``. A waiting state lives for an
exponentially distributed time (mean tau_pot / tau_dep) drawn when the
spike arrives. Reaching a threshold stages a change that the engine
commits once per cycle; every commit sets the lock bit, after which the
synapse is frozen.

The functions on :class:`SynapseState` are the reference rules;
:class:`SynapseArray` applies the same rules to all synapses of a neuron
at once and is what the engine uses.
"""
import csv
import enum

import attr
import numpy as np

from .exceptions import ConfigError, GeometryError
from .utils import format_float, iter_data_lines, open_text

SNAPSHOT_HEADER = ('synapse_id', 'weight', 'locked', 'lock_class',
                   'accum_plus', 'accum_minus')


class LockClass(enum.IntEnum):
    UNLOCKED = 0
    POTENTIATED = 1
    DEPRESSED = 2
    LOCKED_DEP = 3
    LOCKED_POT = 4
    LOCKED_FFWD = 5

    @property
    def label(self):
        return self.name.lower()

    @classmethod
    def from_label(cls, label):
        try:
            return cls[label.upper()]
        except KeyError:
            raise ValueError('unknown lock class: %r' % (label,))


class Direction(enum.Enum):
    POTENTIATE = 'potentiate'
    DEPRESS = 'depress'


@attr.s(frozen=True)
class LearningParams(object):
    tau_pot = attr.ib(default=9.6)
    tau_dep = attr.ib(default=11.0)
    T_pot = attr.ib(default=5)
    T_dep = attr.ib(default=5)
    # Per second.
    dec_acc = attr.ib(default=1.0)
    A_plus = attr.ib(default=0.99)
    A_minus = attr.ib(default=0.5)
    W_init = attr.ib(default=0.07)
    W_max = attr.ib(default=0.14)
    W_min = attr.ib(default=0.0)
    V_diff = attr.ib(default=1.0)
    T_D = attr.ib(default=1.0)
    stochastic_decay = attr.ib(default=True)

    def __attrs_post_init__(self):
        if self.tau_pot <= 0 or self.tau_dep <= 0:
            raise ConfigError('waiting time constants must be > 0',
                              key='tau_pot')
        if self.T_pot < 1:
            raise ConfigError('must be >= 1', key='T_pot')
        if self.T_dep < 1:
            raise ConfigError('magnitude must be >= 1', key='T_dep')
        if not self.W_min <= self.W_init <= self.W_max:
            raise ConfigError('need W_min <= W_init <= W_max', key='W_init')
        if not 0 < self.A_minus < 1:
            raise ConfigError('must be in (0, 1)', key='A_minus')
        if self.dec_acc < 0:
            raise ConfigError('must be >= 0', key='Dec_acc')
        if self.T_D < 0:
            raise ConfigError('must be >= 0', key='T_D')

    @property
    def potentiated_weight(self):
        return min(self.W_max, self.W_init * (1.0 + self.A_plus))

    @property
    def depressed_weight(self):
        return max(self.W_min, self.W_init * self.A_minus)


def sample_lifetime(tau, p, rng, size=None):
    if not p.stochastic_decay:
        return tau if size is None else np.full(size, tau)
    return rng.exponential(tau, size=size)


@attr.s(frozen=True)
class SynapseState(object):
    weight = attr.ib(default=0.07)
    lock_class = attr.ib(default=LockClass.UNLOCKED, converter=LockClass)
    pre_waiting_until = attr.ib(default=None)
    post_waiting_until = attr.ib(default=None)
    accum_plus = attr.ib(default=0.0)
    accum_minus = attr.ib(default=0.0)

    @property
    def locked(self):
        return self.lock_class is not LockClass.UNLOCKED

    @classmethod
    def initial(cls, p):
        return cls(weight=p.W_init)


@attr.s(frozen=True)
class PendingChange(object):
    direction = attr.ib()
    synapse = attr.ib()
    cycle = attr.ib()


def _active(until, now):
    return until is not None and now <= until


def on_pre_spike(s, p, now, rng):
    if s.locked:
        return s
    accum_minus = s.accum_minus
    post_waiting_until = s.post_waiting_until
    if _active(post_waiting_until, now):
        accum_minus += 1
        post_waiting_until = None
    return attr.evolve(
        s, accum_minus=accum_minus, post_waiting_until=post_waiting_until,
        pre_waiting_until=now + sample_lifetime(p.tau_pot, p, rng))


def on_post_spike(s, p, now, rng):
    """``now`` is the back-propagated time (somatic spike + T_D)."""
    if s.locked:
        return s, None
    accum_plus = s.accum_plus
    accum_minus = s.accum_minus
    pre_waiting_until = s.pre_waiting_until
    if _active(pre_waiting_until, now):
        accum_plus += 1
        pre_waiting_until = None
    triggered = None
    # One change per synapse; potentiation wins a tie.
    if accum_plus >= p.T_pot:
        triggered = Direction.POTENTIATE
        accum_plus = 0.0
    if accum_minus >= p.T_dep:
        triggered = triggered or Direction.DEPRESS
        accum_minus = 0.0
    s = attr.evolve(
        s, accum_plus=accum_plus, accum_minus=accum_minus,
        pre_waiting_until=pre_waiting_until,
        post_waiting_until=now + sample_lifetime(p.tau_dep, p, rng))
    return s, triggered


def decay_accumulators(s, p, elapsed):
    """Linear leak towards zero; ``elapsed`` in seconds."""
    if s.locked or elapsed <= 0:
        return s
    drop = p.dec_acc * elapsed
    return attr.evolve(s, accum_plus=max(0.0, s.accum_plus - drop),
                       accum_minus=max(0.0, s.accum_minus - drop))


def resolve_class(direction, lock_zone_active, fired_feedforward):
    if fired_feedforward:
        return LockClass.LOCKED_FFWD
    if lock_zone_active:
        if direction is Direction.POTENTIATE:
            return LockClass.LOCKED_POT
        return LockClass.LOCKED_DEP
    if direction is Direction.POTENTIATE:
        return LockClass.POTENTIATED
    return LockClass.DEPRESSED


def commit_change(s, p, direction, lock_zone_active, fired_feedforward):
    if s.locked:
        return s
    cls = resolve_class(direction, lock_zone_active, fired_feedforward)
    if cls is LockClass.POTENTIATED:
        return attr.evolve(s, weight=p.potentiated_weight, lock_class=cls)
    if cls is LockClass.DEPRESSED:
        return attr.evolve(s, weight=p.depressed_weight, lock_class=cls)
    return attr.evolve(s, lock_class=cls)


class SynapseArray(object):
    """All synapses of one neuron, one numpy array per state field.

    Waiting-state expiry times use -inf for "not waiting".
    """

    def __init__(self, size, params):
        self.params = params
        self.weight = np.full(size, params.W_init, dtype=float)
        self.lock_class = np.zeros(size, dtype=np.int8)
        self.pre_until = np.full(size, -np.inf)
        self.post_until = np.full(size, -np.inf)
        self.accum_plus = np.zeros(size)
        self.accum_minus = np.zeros(size)

    def __len__(self):
        return self.weight.size

    def __repr__(self):
        return '<SynapseArray size=%d locked=%d>' % (
            len(self), int(np.count_nonzero(self.locked)))

    @property
    def locked(self):
        return self.lock_class != LockClass.UNLOCKED

    def copy(self):
        new = SynapseArray.__new__(SynapseArray)
        new.params = self.params
        for name in ('weight', 'lock_class', 'pre_until', 'post_until',
                     'accum_plus', 'accum_minus'):
            setattr(new, name, getattr(self, name).copy())
        return new

    def clear_machines(self, accumulators=True):
        self.pre_until[:] = -np.inf
        self.post_until[:] = -np.inf
        if accumulators:
            self.accum_plus[:] = 0.0
            self.accum_minus[:] = 0.0

    def state(self, i):
        def until(x):
            return None if x == -np.inf else float(x)
        return SynapseState(
            weight=float(self.weight[i]),
            lock_class=LockClass(int(self.lock_class[i])),
            pre_waiting_until=until(self.pre_until[i]),
            post_waiting_until=until(self.post_until[i]),
            accum_plus=float(self.accum_plus[i]),
            accum_minus=float(self.accum_minus[i]))

    @classmethod
    def from_states(cls, states, params):
        arr = cls(len(states), params)
        for i, s in enumerate(states):
            arr.weight[i] = s.weight
            arr.lock_class[i] = int(s.lock_class)
            if s.pre_waiting_until is not None:
                arr.pre_until[i] = s.pre_waiting_until
            if s.post_waiting_until is not None:
                arr.post_until[i] = s.post_waiting_until
            arr.accum_plus[i] = s.accum_plus
            arr.accum_minus[i] = s.accum_minus
        return arr

    def leak(self, elapsed):
        """Linear accumulator leak over ``elapsed`` seconds."""
        if elapsed <= 0 or self.params.dec_acc == 0:
            return
        free = ~self.locked
        drop = self.params.dec_acc * elapsed
        for acc in (self.accum_plus, self.accum_minus):
            acc[free] = np.maximum(0.0, acc[free] - drop)

    def on_pre(self, channels, now, rng):
        """Pre spikes at ``now`` on the (distinct) ``channels``."""
        idx = np.asarray(channels, dtype=np.intp)
        idx = idx[self.lock_class[idx] == LockClass.UNLOCKED]
        if not idx.size:
            return
        hit = idx[self.post_until[idx] >= now]
        self.accum_minus[hit] += 1
        self.post_until[hit] = -np.inf
        self.pre_until[idx] = now + sample_lifetime(
            self.params.tau_pot, self.params, rng, size=idx.size)

    def on_post(self, now, rng):
        """Back-propagated post spike; returns (potentiate, depress) ids."""
        p = self.params
        free = np.flatnonzero(self.lock_class == LockClass.UNLOCKED)
        hit = free[self.pre_until[free] >= now]
        self.accum_plus[hit] += 1
        self.pre_until[hit] = -np.inf
        self.post_until[free] = now + sample_lifetime(
            p.tau_dep, p, rng, size=free.size)
        pot = free[self.accum_plus[free] >= p.T_pot]
        dep = free[self.accum_minus[free] >= p.T_dep]
        self.accum_plus[pot] = 0.0
        self.accum_minus[dep] = 0.0
        if pot.size and dep.size:
            dep = np.setdiff1d(dep, pot, assume_unique=True)
        return pot, dep

    def commit(self, synapses, direction, lock_zone_active,
               fired_feedforward):
        """Apply one direction to ``synapses``; returns the new class."""
        idx = np.asarray(synapses, dtype=np.intp)
        idx = idx[self.lock_class[idx] == LockClass.UNLOCKED]
        cls = resolve_class(direction, lock_zone_active, fired_feedforward)
        if cls is LockClass.POTENTIATED:
            self.weight[idx] = self.params.potentiated_weight
        elif cls is LockClass.DEPRESSED:
            self.weight[idx] = self.params.depressed_weight
        self.lock_class[idx] = int(cls)
        return idx, cls


def class_histogram(lock_classes):
    """Counts per LockClass (unrecruited included), in enum order."""
    counts = np.bincount(np.asarray(lock_classes, dtype=np.intp),
                         minlength=len(LockClass))
    return {cls: int(counts[cls]) for cls in LockClass}


def write_snapshot_rows(f, weight, lock_class, accum_plus, accum_minus):
    writer = csv.writer(f, lineterminator='\n')
    writer.writerow(SNAPSHOT_HEADER)
    for i in range(weight.size):
        cls = LockClass(int(lock_class[i]))
        writer.writerow((
            i, format_float(weight[i]), int(cls is not LockClass.UNLOCKED),
            cls.label, format_float(accum_plus[i]),
            format_float(accum_minus[i])))


def read_snapshot_rows(fname_or_fobj):
    """Parse the snapshot CSV into (weight, lock_class, plus, minus)."""
    with open_text(fname_or_fobj) as f:
        lines = iter_data_lines(f)
        header = next(lines, None)
        if header is None or tuple(header.split(',')) != SNAPSHOT_HEADER:
            raise GeometryError('not a weight snapshot (header %r)' % (
                header,))
        rows = []
        for expected, row in enumerate(csv.reader(lines)):
            try:
                sid, weight, locked, label, plus, minus = row
                cls = LockClass.from_label(label)
                if int(sid) != expected:
                    raise ValueError('synapse_id %s out of order' % sid)
                if bool(int(locked)) != (cls is not LockClass.UNLOCKED):
                    raise ValueError('lock bit disagrees with class')
                rows.append((float(weight), int(cls), float(plus),
                             float(minus)))
            except ValueError as exc:
                raise GeometryError('malformed snapshot row %d: %s' % (
                    expected, exc))
    if not rows:
        return (np.zeros(0), np.zeros(0, dtype=np.int8), np.zeros(0),
                np.zeros(0))
    weight, lock_class, plus, minus = zip(*rows)
    return (np.array(weight), np.array(lock_class, dtype=np.int8),
            np.array(plus), np.array(minus))
