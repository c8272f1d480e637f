import os

import attr
import click

from . import (
    DEFAULT_CAPACITY_FILE, DEFAULT_CONVERGENCE_FILE, DEFAULT_PATTERN_FILE,
    DEFAULT_RASTER_FILE, DEFAULT_RECRUITMENT_FILE, DEFAULT_SNAPSHOT_FILE,
)
from .codec import (
    generate_pattern, info_content, info_content_approx, read_pattern,
    render_raster, write_pattern, write_raster,
)
from .config import parse_config
from .engine import (
    Mode, Network, Schedule, WeightSnapshot, calibrate_weight_scale,
    recall_weight_scale, resolve_weight_scale, restore_weights, run,
    snapshot_weights,
)
from .exceptions import GeometryError
from .experiments import (
    Exp1Config, Exp2Config, acquisition_time_s, extrapolate_capacity,
    extrapolate_capacity_rounded, run_experiment1, run_experiment2,
    run_interference, train_association,
)
from .logger import LEVEL_NAMES, level_name, logger, set_level
from .plasticity import class_histogram
from .utils import comment_header, format_float, make_rng


def get_version_message():
    from . import get_version

    try:
        from numpy import __version__ as numpy_version
    except ImportError as exc:
        numpy_version = 'unknown (%s)' % (exc,)

    return 'cyclicstdp, version %s (using numpy %s)' % (
        get_version(),
        numpy_version,
    )


@attr.s
class Context(object):
    cfg = attr.ib()
    threads = attr.ib(default=1)

    @property
    def seed(self):
        return self.cfg.seed

    @property
    def header(self):
        return comment_header(self.cfg.config_hash(), self.cfg.seed)

    def out_path(self, fname):
        if not os.path.isdir(self.cfg.out_dir):
            os.makedirs(self.cfg.out_dir)
        return os.path.join(self.cfg.out_dir, fname)

    def written(self, path):
        logger.info('Wrote %s.', path)


@click.group(context_settings={'help_option_names': ['-h', '--help']})
@click.version_option('...', '-V', '--version',
                      message=get_version_message())
@click.option('-v', '--verbose', count=True, help='Increase verbosity.')
@click.option('-q', '--quiet', count=True, help='Decrease verbosity.')
@click.option('-l', '--loglevel', show_default=True,
              help=('Set logging level explicitly (overrides -v/-q).  '
                    u'[default:\xa0%s]' % level_name()),
              type=click.Choice(LEVEL_NAMES))
@click.option('--config', 'config_file',
              type=click.Path(exists=True, dir_okay=False),
              help='Flat key=value file with network parameters.')
@click.option('--set', 'overrides', multiple=True, metavar='KEY=VALUE',
              help='Override one parameter (repeatable).')
@click.option('--seed', type=int, default=None,
              help='Master seed for all random streams.')
@click.option('--out-dir', type=click.Path(file_okay=False), default=None,
              help='Directory for output files.')
@click.option('--threads', type=click.IntRange(min=1), default=1,
              show_default=True, help='Worker threads for experiments.')
@click.pass_context
def main(ctx, verbose, quiet, loglevel, config_file, overrides, seed,
         out_dir, threads):
    set_level(loglevel, verbose, quiet)
    overrides = list(overrides)
    if seed is not None:
        overrides.append('seed=%d' % seed)
    if out_dir is not None:
        overrides.append('out_dir=%s' % out_dir)
    ctx.obj = Context(cfg=parse_config(config_file, overrides),
                      threads=threads)


@main.command()
@click.option('--trials', type=click.IntRange(min=1), default=100,
              show_default=True)
@click.option('--repeats', type=click.IntRange(min=1), default=30,
              show_default=True)
@click.option('--target-phase', type=float, default=18.0, show_default=True,
              help='Taught spike phase in ms.')
@click.pass_obj
def exp1(obj, trials, repeats, target_phase):
    """Convergence of one taught spike time, recall tested every cycle."""
    ecfg = Exp1Config(n_trials=trials, n_repeats=repeats,
                      target_phase=target_phase)
    result = run_experiment1(obj.cfg, ecfg, obj.seed, threads=obj.threads)
    for fname, write in ((DEFAULT_CONVERGENCE_FILE, result.write_convergence),
                         (DEFAULT_RECRUITMENT_FILE,
                          result.write_recruitment)):
        path = obj.out_path(fname)
        write(path, header=obj.header)
        obj.written(path)


@main.command()
@click.option('--set-sizes', default='5,10,15,20,25,30', show_default=True,
              help='Comma separated numbers of stored patterns.')
@click.option('--repeats', type=click.IntRange(min=1), default=30,
              show_default=True)
@click.option('--presentations', type=click.IntRange(min=1), default=5,
              show_default=True)
@click.pass_obj
def exp2(obj, set_sizes, repeats, presentations):
    """Recall of growing pattern sets stored on one neuron."""
    try:
        sizes = tuple(int(x) for x in set_sizes.split(','))
    except ValueError:
        raise click.BadParameter('expected integers, got %r' % set_sizes,
                                 param_hint='--set-sizes')
    ecfg = Exp2Config(set_sizes=sizes, n_repeats=repeats,
                      n_presentations=presentations)
    result = run_experiment2(obj.cfg, ecfg, obj.seed, threads=obj.threads)
    path = obj.out_path(DEFAULT_CAPACITY_FILE)
    result.write_capacity(path, header=obj.header)
    obj.written(path)

    largest = max(sizes)
    cfg = obj.cfg
    click.echo('Extrapolated capacity: %d associations (%d with M/N '
               'rounded down).' % (
                   extrapolate_capacity(largest, cfg.M, cfg.N),
                   extrapolate_capacity_rounded(largest, cfg.M, cfg.N)))
    click.echo('Acquisition time: %.2f s.' % acquisition_time_s(
        extrapolate_capacity_rounded(largest, cfg.M, cfg.N), cfg.T_cyc,
        repeats))


@main.command()
@click.option('--pattern', 'pattern_file',
              type=click.Path(exists=True, dir_okay=False),
              help='Pattern to teach.  Generated from the seed if omitted.')
@click.option('--phase', type=float, default=18.0, show_default=True,
              help='Taught spike phase in ms.')
@click.option('--repeats', type=click.IntRange(min=1), default=30,
              show_default=True)
@click.option('--snapshot', 'snapshot_file', type=click.Path(dir_okay=False),
              help=u'Output file.  [default:\xa0OUT_DIR/%s]' % (
                  DEFAULT_SNAPSHOT_FILE,))
@click.pass_obj
def train(obj, pattern_file, phase, repeats, snapshot_file):
    """Teach one pattern/spike-time pair and write the weight snapshot."""
    cfg = obj.cfg
    if pattern_file:
        pattern = read_pattern(pattern_file)
    else:
        pattern = generate_pattern(cfg.M, cfg.N, cfg.T_cyc, cfg.T_bin,
                                   make_rng(obj.seed, 'pattern'))
        pattern_file = obj.out_path(DEFAULT_PATTERN_FILE)
        with open(pattern_file, 'w', newline='') as f:
            f.write(obj.header)
            write_pattern(pattern, f)
        obj.written(pattern_file)
    if pattern.m != cfg.M:
        raise GeometryError('pattern has M=%d, configuration M=%d' % (
            pattern.m, cfg.M))

    net = Network.build(cfg, resolve_weight_scale(cfg, obj.seed))
    trace = train_association(net, pattern, phase, repeats,
                              make_rng(obj.seed, 'synapse-lifetimes'))
    logger.info('Trained %d cycles: %d commits.', repeats,
                len(trace.commits))
    snapshot = snapshot_weights(net)
    logger.debug('Synapse classes: %s.', ' '.join(
        '%s=%d' % (cls.label, count)
        for cls, count in class_histogram(snapshot.lock_class).items()))
    snapshot_file = snapshot_file or obj.out_path(DEFAULT_SNAPSHOT_FILE)
    snapshot.to_csv(snapshot_file, header=obj.header)
    obj.written(snapshot_file)


@main.command()
@click.argument('snapshot_file', type=click.Path(exists=True, dir_okay=False))
@click.argument('pattern_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--cycles', type=click.IntRange(min=1), default=4,
              show_default=True)
@click.option('--trace', 'trace_file', type=click.Path(dir_okay=False),
              help='Write the event trace CSV.')
@click.option('--membrane', 'membrane_file', type=click.Path(dir_okay=False),
              help='Write the membrane potential CSV.')
@click.pass_obj
def recall(obj, snapshot_file, pattern_file, cycles, trace_file,
           membrane_file):
    """Present PATTERN_FILE to the weights in SNAPSHOT_FILE.

    Prints the output spike times in ms, one per line.
    """
    cfg = obj.cfg
    snapshot = WeightSnapshot.from_csv(snapshot_file)
    pattern = read_pattern(pattern_file)
    if pattern.m != snapshot.m:
        raise GeometryError('pattern has M=%d, snapshot M=%d' % (
            pattern.m, snapshot.m))
    net = Network.build(cfg, recall_weight_scale(cfg, snapshot))
    net = restore_weights(net, snapshot, mode=Mode.RECALL)
    trace = run(net, Schedule.for_pattern(pattern, cycles), None,
                record_membrane=bool(membrane_file))
    for t in trace.output_spikes:
        click.echo(format_float(t))
    if trace_file:
        trace.to_csv(trace_file, header=obj.header)
        obj.written(trace_file)
    if membrane_file:
        trace.write_membrane(membrane_file, header=obj.header)
        obj.written(membrane_file)


@main.command()
@click.pass_obj
def calibrate(obj):
    """Find the weight scale that idles an untrained neuron below threshold."""
    cfg = obj.cfg
    scale = calibrate_weight_scale(cfg, make_rng(obj.seed, 'calibration'))
    click.echo('weight_scale=%s' % format_float(scale))


@main.command()
@click.pass_obj
def info(obj):
    """Information content of one cyclic pattern for the configured geometry.
    """
    cfg = obj.cfg
    args = (cfg.M, cfg.N, cfg.T_cyc, cfg.T_bin)
    click.echo('I_cyclic=%.6f bits' % info_content(*args))
    click.echo('I_cyclic_approx=%.6f bits' % info_content_approx(*args))
    click.echo('bins=%d activity=%s spike_density=%s/ms' % (
        int(round(cfg.T_cyc / cfg.T_bin)), format_float(cfg.N / cfg.M),
        format_float(cfg.N / cfg.T_cyc)))


@main.command()
@click.option('--rate', type=float, default=0.0, show_default=True,
              help='Poisson background rate per channel in Hz.')
@click.option('--jitter', type=float, default=0.0, show_default=True,
              help='Standard deviation of signal spike jitter in ms.')
@click.option('--clean', type=click.IntRange(min=0), default=1,
              show_default=True, help='Noise-free cycles.')
@click.option('--noisy', type=click.IntRange(min=0), default=2,
              show_default=True, help='Cycles with noise added.')
@click.pass_obj
def raster(obj, rate, jitter, clean, noisy):
    """Write a spike raster of one pattern, clean then noisy."""
    cfg = obj.cfg
    pattern = generate_pattern(cfg.M, cfg.N, cfg.T_cyc, cfg.T_bin,
                               make_rng(obj.seed, 'pattern'))
    events = render_raster(pattern, clean, noisy,
                           cfg.noise_spec(poisson_rate=rate,
                                          jitter_sigma=jitter),
                           make_rng(obj.seed, 'noise'))
    path = obj.out_path(DEFAULT_RASTER_FILE)
    with open(path, 'w', newline='') as f:
        f.write(obj.header)
        write_raster(events, f)
    obj.written(path)


@main.command()
@click.option('--extra', type=click.IntRange(min=0), default=9,
              show_default=True, help='Associations trained after the first.')
@click.option('--repeats', type=click.IntRange(min=1), default=30,
              show_default=True)
@click.option('--target-phase', type=float, default=18.0, show_default=True)
@click.pass_obj
def interference(obj, extra, repeats, target_phase):
    """Recall phase of the first association before and after more."""
    result = run_interference(obj.cfg, obj.seed, n_extra=extra,
                              n_repeats=repeats, target_phase=target_phase)

    def fmt(value):
        return 'none' if value is None else format_float(value)

    click.echo('before=%s after=%s shift=%s' % (
        fmt(result.before), fmt(result.after), fmt(result.shift)))
