"""Conductance-based leaky integrate-and-fire neuron.

Synaptic input is a difference of exponentials, ``g_fall - g_rise``,
scaled so that an arrival of weight ``w`` peaks at conductance ``w``.
Conductances are in uS, capacitance in nF and time in ms, which makes
``g * (E_rev - v) / C_m`` come out in mV/ms.
"""
import math

import attr

from .exceptions import ConfigError

INTEGRATORS = ('exponential', 'euler')


def kernel_peak_factor(tau_rise, tau_fall):
    """Scale making the peak of exp(-t/tau_fall) - exp(-t/tau_rise) one."""
    t_peak = (tau_rise * tau_fall / (tau_fall - tau_rise) *
              math.log(tau_fall / tau_rise))
    return 1.0 / (math.exp(-t_peak / tau_fall) - math.exp(-t_peak / tau_rise))


@attr.s(frozen=True)
class NeuronParams(object):
    tau_m = attr.ib(default=15.0)
    C_m = attr.ib(default=30.0)
    tau_ref = attr.ib(default=5.0)
    V_thresh = attr.ib(default=60.0)
    V_0 = attr.ib(default=0.0)
    V_reset = attr.ib(default=0.0)
    E_rev = attr.ib(default=240.0)
    tau_rise = attr.ib(default=0.2)
    tau_fall = attr.ib(default=3.0)
    dt = attr.ib(default=0.1)
    integrator = attr.ib(default='exponential')

    def __attrs_post_init__(self):
        for name in ('tau_m', 'C_m', 'tau_ref', 'tau_rise', 'tau_fall',
                     'dt'):
            if not getattr(self, name) > 0:
                raise ConfigError('must be > 0', key=name)
        if not self.tau_rise < self.tau_fall:
            raise ConfigError('tau_rise must be < tau_fall', key='tau_rise')
        if not (self.V_reset <= self.V_0 < self.V_thresh < self.E_rev):
            raise ConfigError(
                'need V_reset <= V_0 < V_thresh < E_rev', key='V_thresh')
        if self.integrator not in INTEGRATORS:
            raise ConfigError('must be one of %s' % ', '.join(INTEGRATORS),
                              key='integrator')
        # Per-step constants for the hot loop.
        object.__setattr__(self, 'decay_m', math.exp(-self.dt / self.tau_m))
        object.__setattr__(self, 'decay_rise',
                           math.exp(-self.dt / self.tau_rise))
        object.__setattr__(self, 'decay_fall',
                           math.exp(-self.dt / self.tau_fall))
        object.__setattr__(self, 'peak_factor',
                           kernel_peak_factor(self.tau_rise, self.tau_fall))


@attr.s
class NeuronState(object):
    v = attr.ib(default=0.0)
    refractory_until = attr.ib(default=0.0)
    g_rise = attr.ib(default=0.0)
    g_fall = attr.ib(default=0.0)
    last_probe_v = attr.ib(default=None)
    fired_feedforward_this_cycle = attr.ib(default=False)

    @classmethod
    def at_rest(cls, params):
        return cls(v=params.V_0)


def effective_conductance(state):
    return state.g_fall - state.g_rise


def step(state, params, input_weight_sum, dt, now):
    """Advance ``state`` in place from ``now`` to ``now + dt``.

    ``input_weight_sum`` is the summed peak conductance of arrivals at
    ``now``. Returns ``(state, fired)``; a spike belongs to ``now + dt``.
    """
    if input_weight_sum:
        q = input_weight_sum * params.peak_factor
        state.g_rise += q
        state.g_fall += q
    if dt == params.dt:
        state.g_rise *= params.decay_rise
        state.g_fall *= params.decay_fall
        decay_m = params.decay_m
    else:
        state.g_rise *= math.exp(-dt / params.tau_rise)
        state.g_fall *= math.exp(-dt / params.tau_fall)
        decay_m = math.exp(-dt / params.tau_m)

    t_next = now + dt
    if t_next <= state.refractory_until:
        state.v = params.V_reset
        return state, False

    g = state.g_fall - state.g_rise
    v = state.v
    if params.integrator == 'euler':
        v += dt * (-(v - params.V_0) / params.tau_m +
                   g * (params.E_rev - v) / params.C_m)
    elif g > 0:
        rate = 1.0 / params.tau_m + g / params.C_m
        v_inf = (params.V_0 / params.tau_m +
                 g * params.E_rev / params.C_m) / rate
        v = v_inf + (v - v_inf) * math.exp(-rate * dt)
    else:
        v = params.V_0 + (v - params.V_0) * decay_m

    if v >= params.V_thresh:
        state.v = params.V_reset
        state.refractory_until = t_next + params.tau_ref
        return state, True
    state.v = v
    return state, False


def force_fire(state, params, now):
    """Teacher-driven spike at ``now``, absorbed while refractory."""
    if now < state.refractory_until:
        return state, False
    state.v = params.V_reset
    state.refractory_until = now + params.tau_ref
    return state, True


def probe_potential(state, now):
    state.last_probe_v = state.v
    return state.v
