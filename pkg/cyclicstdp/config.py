"""Run configuration: network parameters as flat ``key=value`` text.

Key names follow the usual symbols of the model (``V_thresh``, ``T_cyc``,
``tau_pot``) rather than Python style.
"""
import hashlib

import attr

from .codec import NoiseSpec, check_geometry
from .exceptions import ConfigError, CyclicStdpException
from .neuron import NeuronParams
from .plasticity import LearningParams
from .utils import format_float, iter_data_lines, open_text

# Not part of the config hash: they do not change simulation results.
UNHASHED = ('seed', 'out_dir')


def _to_bool(value):
    lowered = value.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError('not a boolean: %r' % (value,))


def _to_optional_float(value):
    if value.strip().lower() in ('', 'none', 'auto'):
        return None
    return float(value)


def _to_count(value):
    return int(value.strip())


def _magnitude(value):
    return abs(int(value.strip()))


def _field(default, parse, **kwargs):
    return attr.ib(default=default, metadata={'parse': parse}, **kwargs)


@attr.s(frozen=True)
class RunConfig(object):
    timestep = _field(0.1, float)
    M = _field(3200, _to_count)
    N = _field(75, _to_count)
    T_cyc = _field(35.0, float)
    T_bin = _field(0.1, float)
    tau_m = _field(15.0, float)
    C_m = _field(30.0, float)
    tau_ref = _field(5.0, float)
    V_thresh = _field(60.0, float)
    V_0 = _field(0.0, float)
    V_reset = _field(0.0, float)
    E_rev = _field(240.0, float)
    tau_rise = _field(0.2, float)
    tau_fall = _field(3.0, float)
    T_D = _field(1.0, float)
    Dec_acc = _field(1.0, float)
    tau_pot = _field(9.6, float)
    tau_dep = _field(11.0, float)
    T_pot = _field(5, _to_count)
    # Often written as -5; only the magnitude is kept.
    T_dep = _field(5, _magnitude)
    V_diff = _field(1.0, float)
    W_max = _field(0.14, float)
    W_init = _field(0.07, float)
    W_min = _field(0.0, float)
    A_minus = _field(0.5, float)
    A_plus = _field(0.99, float)
    weight_scale = _field(None, _to_optional_float)
    calibration_fraction = _field(0.85, float)
    integrator = _field('exponential', str)
    stochastic_decay = _field(True, _to_bool)
    seed = _field(0, _to_count)
    out_dir = _field('.', str)

    def __attrs_post_init__(self):
        try:
            check_geometry(self.M, self.N, self.T_cyc, self.T_bin)
        except CyclicStdpException as exc:
            key = 'N' if self.N > self.M or self.N < 0 else 'T_bin'
            raise ConfigError(exc.message, key=key)
        if self.M < 1:
            raise ConfigError('must be >= 1', key='M')
        if self.weight_scale is not None and self.weight_scale < 0:
            raise ConfigError('must be >= 0', key='weight_scale')
        if not 0 < self.calibration_fraction < 1:
            raise ConfigError('must be in (0, 1)', key='calibration_fraction')
        # The parameter types validate the rest.
        self.neuron_params()
        self.learning_params()

    def neuron_params(self):
        return NeuronParams(
            tau_m=self.tau_m, C_m=self.C_m, tau_ref=self.tau_ref,
            V_thresh=self.V_thresh, V_0=self.V_0, V_reset=self.V_reset,
            E_rev=self.E_rev, tau_rise=self.tau_rise,
            tau_fall=self.tau_fall, dt=self.timestep,
            integrator=self.integrator)

    def learning_params(self):
        return LearningParams(
            tau_pot=self.tau_pot, tau_dep=self.tau_dep, T_pot=self.T_pot,
            T_dep=self.T_dep, dec_acc=self.Dec_acc, A_plus=self.A_plus,
            A_minus=self.A_minus, W_init=self.W_init, W_max=self.W_max,
            W_min=self.W_min, V_diff=self.V_diff, T_D=self.T_D,
            stochastic_decay=self.stochastic_decay)

    @staticmethod
    def noise_spec(poisson_rate=0.0, jitter_sigma=0.0):
        return NoiseSpec(poisson_rate=poisson_rate, jitter_sigma=jitter_sigma)

    def dumps(self, hashed_only=False):
        lines = []
        for a in attr.fields(RunConfig):
            if hashed_only and a.name in UNHASHED:
                continue
            value = getattr(self, a.name)
            if value is None:
                text = 'none'
            elif isinstance(value, bool):
                text = 'true' if value else 'false'
            elif isinstance(value, float):
                text = format_float(value)
            else:
                text = str(value)
            lines.append('%s=%s\n' % (a.name, text))
        return ''.join(lines)

    def config_hash(self):
        digest = hashlib.sha256(self.dumps(hashed_only=True).encode('utf-8'))
        return digest.hexdigest()[:12]


FIELDS = {a.name: a for a in attr.fields(RunConfig)}


def parse_assignment(text):
    key, sep, value = text.partition('=')
    key = key.strip()
    if not sep or not key:
        raise ConfigError('expected key=value, got %r' % (text,))
    if key not in FIELDS:
        raise ConfigError('unknown key', key=key)
    try:
        return key, FIELDS[key].metadata['parse'](value.strip())
    except ValueError as exc:
        raise ConfigError('invalid value %r' % (value.strip(),), key=key,
                          orig_exc=exc)


def parse_config(path=None, overrides=()):
    """Defaults, then ``path`` (if any), then ``KEY=VALUE`` flags."""
    values = {}
    if path is not None:
        with open_text(path) as f:
            for line in iter_data_lines(f):
                key, value = parse_assignment(line)
                values[key] = value
    for text in overrides:
        key, value = parse_assignment(text)
        values[key] = value
    return RunConfig(**values)
