from io import StringIO
import math

import attr
import numpy as np
import pytest

from cyclicstdp.exceptions import ConfigError
from cyclicstdp.plasticity import LockClass


def test_circular_distance():
    from cyclicstdp.experiments import circular_distance

    assert circular_distance(18.0, 20.0, 35.0) == 2.0
    assert circular_distance(34.5, 0.5, 35.0) == pytest.approx(1.0)
    assert circular_distance(0.0, 17.5, 35.0) == 17.5


def test_compute_metrics():
    from cyclicstdp.engine import RunTrace
    from cyclicstdp.experiments import compute_metrics

    trace = RunTrace(t_end=140.0, t_cycle=35.0,
                     output_spikes=[5.0, 17.5, 65.0, 70.2])
    metrics = compute_metrics(trace, [18.0, 18.0, 1.0, 18.0], (0.5, 1.0))
    assert metrics.recalled == [17.5, 30.0, pytest.approx(0.2), None]
    assert metrics.errors == [0.5, 12.0, pytest.approx(0.8), None]
    assert metrics.total == 4
    assert metrics.hits == {0.5: 1, 1.0: 2}
    assert metrics.hit_flags(1.0) == [True, False, True, False]
    assert metrics.histogram is None


def test_compute_metrics_histogram():
    from cyclicstdp.engine import RunTrace, WeightSnapshot
    from cyclicstdp.experiments import compute_metrics

    snap = WeightSnapshot(weight=np.zeros(3),
                          lock_class=np.array([0, 1, 1], dtype=np.int8),
                          accum_plus=np.zeros(3), accum_minus=np.zeros(3))
    metrics = compute_metrics(RunTrace(t_end=35.0, t_cycle=35.0), [18.0],
                              (3.0,), snapshot=snap)
    assert metrics.hits == {3.0: 0}
    assert metrics.histogram[LockClass.POTENTIATED] == 2
    assert metrics.histogram[LockClass.UNLOCKED] == 1


def test_extrapolation():
    from cyclicstdp.experiments import (
        acquisition_time_s, extrapolate_capacity,
        extrapolate_capacity_rounded,
    )

    assert extrapolate_capacity(30, 3200, 75) == 1280
    assert extrapolate_capacity_rounded(30, 3200, 75) == 1260
    assert acquisition_time_s(1260, 35.0, 30) == pytest.approx(1323.0)

    with pytest.raises(ConfigError):
        extrapolate_capacity(30, 3200, 0)


def test_experiment_configs():
    from cyclicstdp.experiments import Exp1Config, Exp2Config

    assert Exp1Config().target_phase == 18.0
    assert Exp2Config().set_sizes == (5, 10, 15, 20, 25, 30)
    assert Exp2Config().tolerances == (0.5, 1.0, 2.0, 3.0, 5.0, 7.0)

    with pytest.raises(ConfigError) as excinfo:
        Exp1Config(recall_cycles=2)
    assert str(excinfo.value) == 'measured_cycle: must be in [1, 2]'
    with pytest.raises(ConfigError) as excinfo:
        Exp2Config(tolerances=[3.0, 1.0])
    assert str(excinfo.value) == (
        'tolerances: must be positive and ascending: (3.0, 1.0)')


def test_experiment1_small(small_cfg):
    from cyclicstdp.experiments import Exp1Config, run_experiment1

    ecfg = Exp1Config(n_trials=2, n_repeats=3)
    result = run_experiment1(small_cfg, ecfg, seed=1)
    assert result.phases.shape == (2, 3)
    assert result.histograms.shape == (2, 3, len(LockClass))
    assert result.commits.shape == (2, 3, len(LockClass))
    # Every synapse is in exactly one class.
    np.testing.assert_array_equal(result.histograms.sum(axis=2),
                                  np.full((2, 3), small_cfg.M))
    assert not result.commits[:, :, LockClass.UNLOCKED].any()

    rows = result.convergence_rows()
    assert [r[0] for r in rows] == [1, 2, 3]
    assert all(0.0 <= r[3] <= 1.0 for r in rows)
    assert len(result.recruitment_rows()) == 3
    assert len(result.recruitment_rows()[0]) == 1 + len(LockClass)

    threaded = run_experiment1(small_cfg, ecfg, seed=1, threads=2)
    np.testing.assert_array_equal(threaded.phases, result.phases)
    np.testing.assert_array_equal(threaded.histograms, result.histograms)


def test_experiment1_csv(small_cfg):
    from cyclicstdp.experiments import Exp1Config, run_experiment1

    result = run_experiment1(small_cfg, Exp1Config(n_trials=1, n_repeats=2),
                             seed=0)
    f = StringIO()
    result.write_convergence(f, header='# h\n')
    lines = f.getvalue().splitlines()
    assert lines[:2] == [
        '# h', 'iteration,mean_phase_ms,mean_abs_error_ms,miss_fraction']
    assert len(lines) == 4
    assert lines[2].startswith('1,')

    f = StringIO()
    result.write_recruitment(f)
    assert f.getvalue().splitlines()[0] == (
        'iteration,unlocked,potentiated,depressed,locked_dep,locked_pot,'
        'locked_ffwd')


def test_first_spike_iteration():
    from cyclicstdp.experiments import Exp1Config, Exp1Result

    phases = np.array([[np.nan, np.nan, 18.5], [np.nan] * 3])
    result = Exp1Result(config=Exp1Config(n_trials=2, n_repeats=3),
                        phases=phases, histograms=np.zeros((2, 3, 6)),
                        commits=np.zeros((2, 3, 6)))
    assert result.first_spike_iteration(0) == 3
    assert result.first_spike_iteration(1) is None
    rows = result.convergence_rows()
    assert rows[0] == (1, None, None, 1.0)
    assert rows[2] == (3, 18.5, pytest.approx(0.5), 0.5)


def test_experiment2_small(small_cfg):
    from cyclicstdp.experiments import Exp2Config, run_experiment2

    ecfg = Exp2Config(set_sizes=(1, 2), n_repeats=2, n_presentations=2)
    result = run_experiment2(small_cfg, ecfg, seed=3)
    rows = result.capacity_rows()
    assert len(rows) == 2 * 6
    assert rows[0][:2] == (1, 0.5)
    assert [r[3] for r in rows] == [2] * 6 + [4] * 6
    for size_rows in (rows[:6], rows[6:]):
        hits = [r[2] for r in size_rows]
        assert hits == sorted(hits)

    s = result.sets[1]
    assert len(s.taught_phases) == 2
    assert all(0 <= ph < 35.0 for ph in s.taught_phases)
    assert len(s.misses_by_presentation(7.0)) == 2

    f = StringIO()
    result.write_capacity(f, header='# h\n')
    assert f.getvalue().splitlines()[1] == 'set_size,tolerance_ms,hits,total'
    assert f.getvalue().splitlines()[2].startswith('1,0.5,')

    again = run_experiment2(small_cfg, ecfg, seed=3, threads=2)
    assert again.capacity_rows() == rows


def test_interference_small(small_cfg):
    from cyclicstdp.experiments import InterferenceResult, run_interference

    result = run_interference(small_cfg, 0, n_extra=1, n_repeats=2)
    assert result.target_phase == 18.0
    assert result == run_interference(small_cfg, 0, n_extra=1, n_repeats=2)

    assert InterferenceResult(18.0, 18.2, 17.9).shift == pytest.approx(0.3)
    assert InterferenceResult(18.0, 18.2, 17.9).stable(0.5)
    assert InterferenceResult(18.0, None, 17.9).shift is None
    assert not InterferenceResult(18.0, 18.0, None).stable(2.0)


def noise_fraction_oracle(params, rng, n_synapses, pre_rate=2.1,
                          post_period=35.0, duration=1050.0):
    """One synapse at a time, with the scalar reference rules."""
    from cyclicstdp.plasticity import (
        SynapseState, decay_accumulators, on_post_spike, on_pre_spike,
    )

    offset = rng.uniform(0.0, post_period)
    posts = [t + params.T_D for t in np.arange(offset, duration, post_period)
             if t + params.T_D < duration]
    triggered = 0
    for _ in range(n_synapses):
        n_pre = rng.poisson(pre_rate * duration / 1000.0)
        events = sorted([(float(t), 'pre')
                         for t in rng.uniform(0.0, duration, size=n_pre)] +
                        [(float(t), 'post') for t in posts])
        s = SynapseState.initial(params)
        last = 0.0
        fired = False
        for t, kind in events:
            s = decay_accumulators(s, params, (t - last) / 1000.0)
            last = t
            if kind == 'pre':
                s = on_pre_spike(s, params, t, rng)
            else:
                s, change = on_post_spike(s, params, t, rng)
                fired = fired or change is not None
        triggered += fired
    return triggered


def test_noise_floor_within_oracle_bound():
    from cyclicstdp.experiments import noise_trigger_fraction
    from cyclicstdp.plasticity import LearningParams
    from cyclicstdp.utils import make_rng

    params = LearningParams()
    n_oracle, n = 2000, 10000
    k = noise_fraction_oracle(params, make_rng(1, 'experiment'), n_oracle)
    p_hat = (k + 1.0) / (n_oracle + 2.0)
    sigma = math.sqrt(p_hat * (1.0 - p_hat) * (1.0 / n_oracle + 1.0 / n))

    fraction = noise_trigger_fraction(params, make_rng(0, 'experiment'),
                                      n_synapses=n)
    assert 0.0 <= fraction <= p_hat + 3 * sigma


def test_noise_floor_rises_with_rate():
    from cyclicstdp.experiments import noise_trigger_fraction
    from cyclicstdp.plasticity import LearningParams
    from cyclicstdp.utils import make_rng

    params = LearningParams(T_pot=2, T_dep=2)
    low = noise_trigger_fraction(params, make_rng(0, 'experiment'),
                                 n_synapses=2000, pre_rate=2.1)
    high = noise_trigger_fraction(params, make_rng(0, 'experiment'),
                                  n_synapses=2000, pre_rate=20.0)
    assert high > low
    assert noise_trigger_fraction(params, make_rng(0, 'experiment'),
                                  n_synapses=0) == 0.0


@pytest.fixture(scope='module')
def default_cfg():
    from cyclicstdp.config import RunConfig
    from cyclicstdp.engine import resolve_weight_scale

    cfg = RunConfig()
    return attr.evolve(cfg, weight_scale=resolve_weight_scale(cfg, 0))


@pytest.mark.slow
def test_experiment2_headline(default_cfg):
    from cyclicstdp.experiments import Exp2Config, run_experiment2

    ecfg = Exp2Config(set_sizes=(30,))
    hits = [run_experiment2(default_cfg, ecfg, seed=seed,
                            threads=4).sets[0].hits(3.0)
            for seed in range(5)]
    assert np.mean(hits) >= 110


@pytest.fixture(scope='module')
def exp1_result(default_cfg):
    from cyclicstdp.experiments import Exp1Config, run_experiment1

    return run_experiment1(default_cfg, Exp1Config(), seed=0, threads=4)


@pytest.mark.slow
def test_experiment1_convergence(exp1_result):
    result = exp1_result
    n_trials = result.phases.shape[0]
    first = [result.first_spike_iteration(i) for i in range(n_trials)]
    spiking = [(i, f) for i, f in enumerate(first) if f is not None]
    assert len(spiking) >= 0.9 * n_trials
    # A trial that never spikes is silent for all its iterations.
    prefix = [(f or result.phases.shape[1] + 1) - 1 for f in first]
    assert np.mean(prefix) >= 5

    first_phase = np.mean([result.phases[i, f - 1] for i, f in spiking])
    assert first_phase > 18.0

    errors = result.errors()
    assert np.nanmean(errors[:, 24:30]) <= 2.0
    first_error = np.mean([errors[i, f - 1] for i, f in spiking])
    assert np.nanmean(errors[:, 29]) <= first_error


@pytest.mark.slow
def test_experiment1_recruitment(exp1_result):
    result = exp1_result
    locked = (LockClass.LOCKED_POT, LockClass.LOCKED_DEP,
              LockClass.LOCKED_FFWD)
    early_plain = late_locked = 0
    for i in range(result.phases.shape[0]):
        first = result.first_spike_iteration(i) or result.phases.shape[1]
        early = result.commits[i, :min(5, first - 1)]
        if not early[:, list(locked)].any():
            early_plain += 1
        if result.commits[i, first:, list(locked)].any():
            late_locked += 1
    assert early_plain >= 95
    assert late_locked >= 95


@pytest.mark.slow
def test_interference_stability(default_cfg):
    from cyclicstdp.experiments import run_interference

    stable = sum(run_interference(default_cfg, seed).stable(2.0)
                 for seed in range(20))
    assert stable >= 18
