import os
import re

import pytest

from cyclicstdp import cli, get_version
from cyclicstdp.cli import get_version_message


def header_for(args):
    from cyclicstdp.config import parse_config
    from cyclicstdp.utils import comment_header

    overrides = [v for k, v in zip(args, args[1:]) if k == '--set']
    cfg = parse_config(overrides=overrides)
    return comment_header(cfg.config_hash(), cfg.seed)


@pytest.mark.parametrize('arg', ('-V', '--version'))
def test_cli_version(arg, runner):
    result = runner.invoke(cli.main, [arg])
    assert result.output == get_version_message() + '\n'
    assert result.output.startswith('cyclicstdp, version %s' % get_version())
    assert result.exit_code == 0


@pytest.mark.parametrize('arg', ('-h', '--help'))
def test_cli_help(arg, runner):
    result = runner.invoke(cli.main, [arg])
    assert result.output.startswith('Usage:')
    for name in ('exp1', 'exp2', 'train', 'recall', 'calibrate', 'info',
                 'raster', 'interference'):
        assert name in result.output
    assert result.exit_code == 0

    result = runner.invoke(cli.main, ['recall', arg])
    assert result.output.startswith('Usage:')
    assert result.exit_code == 0


def test_cli_info(runner):
    from cyclicstdp.codec import info_content

    result = runner.invoke(cli.main, ['info'])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == 'I_cyclic=%.6f bits' % info_content(
        3200, 75, 35.0, 0.1)
    assert lines[1].startswith('I_cyclic_approx=')
    assert lines[2] == 'bins=350 activity=0.0234375 spike_density=%s/ms' % (
        75 / 35.0,)


def test_cli_config_errors(runner, tmpdir):
    result = runner.invoke(cli.main, ['--set', 'bogus=1', 'info'])
    assert result.output.splitlines()[-1] == 'Error: bogus: unknown key'
    assert result.exit_code == 1

    result = runner.invoke(cli.main, ['--set', 'N=4000', 'info'])
    assert result.output.splitlines()[-1] == (
        'Error: N: N (4000) must not exceed M (3200)')
    assert result.exit_code == 1

    cfg = tmpdir.join('run.cfg')
    cfg.write('N=80\n')
    result = runner.invoke(cli.main, ['--config', str(cfg), 'info'])
    assert result.exit_code == 0
    assert 'activity=0.025 ' in result.output

    result = runner.invoke(cli.main, ['--config', '/does/not/exist', 'info'])
    assert result.exit_code == 2


def test_cli_calibrate(runner):
    result = runner.invoke(cli.main, [
        '-q', '--set', 'M=400', '--set', 'N=40', 'calibrate'])
    assert result.exit_code == 0, result.output
    key, value = result.output.strip().split('=')
    assert key == 'weight_scale'
    assert float(value) > 0


def test_cli_train_and_recall(runner, tmpdir, small_args):
    out = str(tmpdir)
    result = runner.invoke(cli.main, small_args + [
        '--out-dir', out, '--seed', '2', 'train', '--repeats', '3'])
    assert result.exit_code == 0, result.output
    snapshot = os.path.join(out, 'snapshot.csv')
    pattern = os.path.join(out, 'pattern.csv')
    lines = result.output.splitlines()
    assert lines[0] == 'Wrote %s.' % pattern
    assert lines[1].startswith('Trained 3 cycles: ')
    assert lines[2:] == ['Wrote %s.' % snapshot]

    header = header_for(small_args + ['--set', 'seed=2'])
    with open(snapshot) as f:
        assert f.readline() == header
        assert f.readline() == '# weight_scale=1.5\n'
        assert f.readline() == (
            'synapse_id,weight,locked,lock_class,accum_plus,accum_minus\n')
    with open(pattern) as f:
        assert f.readline() == header
        assert f.readline() == '400,40,35.0,0.1\n'

    trace = os.path.join(out, 'trace.csv')
    membrane = os.path.join(out, 'membrane.csv')
    result = runner.invoke(cli.main, small_args + [
        '-q', 'recall', snapshot, pattern, '--trace', trace,
        '--membrane', membrane])
    assert result.exit_code == 0, result.output
    spikes = [float(x) for x in result.output.split()]
    assert all(0 <= t < 4 * 35.0 for t in spikes)
    assert spikes == sorted(spikes)
    recall_header = header_for(small_args)
    with open(trace) as f:
        assert f.readline() == recall_header
        assert f.readline() == 'event,time_ms,detail\n'
    with open(membrane) as f:
        lines = f.readlines()
    assert lines[:2] == [recall_header, 'time_ms,v_mV\n']
    assert len(lines) == 2 + 4 * 350


def test_cli_recall_geometry_mismatch(runner, tmpdir, small_args):
    from cyclicstdp.codec import generate_pattern, write_pattern
    from cyclicstdp.utils import make_rng

    out = str(tmpdir)
    result = runner.invoke(cli.main, small_args + [
        '--out-dir', out, 'train', '--repeats', '1'])
    assert result.exit_code == 0, result.output
    snapshot = os.path.join(out, 'snapshot.csv')
    pattern = os.path.join(out, 'pattern.csv')

    result = runner.invoke(cli.main, small_args + [
        '--set', 'M=200', '--set', 'N=20', 'recall', snapshot, pattern])
    assert result.output.splitlines()[-1] == (
        'Error: snapshot has 400 synapses, network M=200')
    assert result.exit_code == 1

    other = str(tmpdir.join('other.csv'))
    write_pattern(generate_pattern(200, 20, 35.0, 0.1, make_rng(0, 'pattern')),
                  other)
    result = runner.invoke(cli.main, small_args + ['recall', snapshot, other])
    assert result.output.splitlines()[-1] == (
        'Error: pattern has M=200, snapshot M=400')
    assert result.exit_code == 1


def test_cli_recall_malformed_snapshot(runner, tmpdir, small_args):
    out = str(tmpdir)
    result = runner.invoke(cli.main, small_args + [
        '--out-dir', out, 'train', '--repeats', '1'])
    assert result.exit_code == 0, result.output
    snapshot = os.path.join(out, 'snapshot.csv')
    pattern = os.path.join(out, 'pattern.csv')
    with open(snapshot) as f:
        lines = f.readlines()
    row = [i for i, line in enumerate(lines) if line.startswith('0,')][0]
    lines[row] = '0,0.07,0,unlocked,x,0.0\n'
    with open(snapshot, 'w') as f:
        f.writelines(lines)

    result = runner.invoke(cli.main, small_args + ['recall', snapshot,
                                                   pattern])
    assert result.output.splitlines()[-1] == (
        "Error: malformed snapshot row 0: could not convert string to "
        "float: 'x'")
    assert result.exit_code == 1


def test_cli_recall_uses_trained_weight_scale(runner, tmpdir, small_args,
                                              mocker):
    from cyclicstdp import engine

    out = str(tmpdir)
    result = runner.invoke(cli.main, small_args + [
        '--out-dir', out, 'train', '--repeats', '2'])
    assert result.exit_code == 0, result.output
    snapshot = os.path.join(out, 'snapshot.csv')
    pattern = os.path.join(out, 'pattern.csv')

    restore = mocker.spy(cli, 'restore_weights')
    calibrate = mocker.patch.object(engine, 'calibrate_weight_scale')
    # No weight_scale in the configuration: the snapshot's is used.
    args = ['--set', 'M=400', '--set', 'N=40', '--seed', '7']
    result = runner.invoke(cli.main, args + ['recall', snapshot, pattern])
    assert result.exit_code == 0, result.output
    assert not calibrate.called
    assert restore.call_args[0][0].weight_scale == 1.5

    result = runner.invoke(cli.main, args + [
        '--set', 'weight_scale=1.2', 'recall', snapshot, pattern])
    assert result.exit_code == 0, result.output
    assert restore.call_args[0][0].weight_scale == 1.2
    assert ('Recalling with weight_scale=1.2; the snapshot was trained '
            'with 1.5.') in result.output.splitlines()

    with open(snapshot) as f:
        lines = [line for line in f if not line.startswith('# weight_scale')]
    with open(snapshot, 'w') as f:
        f.writelines(lines)
    result = runner.invoke(cli.main, args + ['recall', snapshot, pattern])
    assert result.output.splitlines()[-1] == (
        'Error: snapshot records no weight_scale; set it explicitly')
    assert result.exit_code == 1


def test_cli_train_pattern_geometry_mismatch(runner, tmpdir, small_args):
    from cyclicstdp.codec import generate_pattern, write_pattern
    from cyclicstdp.utils import make_rng

    other = str(tmpdir.join('other.csv'))
    write_pattern(generate_pattern(200, 20, 35.0, 0.1, make_rng(0, 'pattern')),
                  other)
    result = runner.invoke(cli.main, small_args + [
        '--out-dir', str(tmpdir), 'train', '--pattern', other])
    assert result.output.splitlines()[-1] == (
        'Error: pattern has M=200, configuration M=400')
    assert result.exit_code == 1


def test_cli_exp1_is_deterministic(runner, tmpdir, small_args):
    outputs = []
    for name in ('a', 'b'):
        out = str(tmpdir.join(name))
        result = runner.invoke(cli.main, small_args + [
            '--out-dir', out, '--seed', '4', '--threads', '2', 'exp1',
            '--trials', '2', '--repeats', '2'])
        assert result.exit_code == 0, result.output
        files = {}
        for fname in ('exp1_convergence.csv', 'exp1_recruitment.csv'):
            with open(os.path.join(out, fname), 'rb') as f:
                files[fname] = f.read()
        outputs.append(files)
    assert outputs[0] == outputs[1]

    header = header_for(small_args + ['--set', 'seed=4']).encode()
    for content in outputs[0].values():
        assert content.startswith(header)
    lines = outputs[0]['exp1_convergence.csv'].decode().splitlines()
    assert len(lines) == 2 + 2


def test_cli_exp2_writes_capacity_table(runner, tmpdir, small_args):
    out = str(tmpdir)
    result = runner.invoke(cli.main, small_args + [
        '--out-dir', out, 'exp2', '--repeats', '1', '--presentations', '1'])
    assert result.exit_code == 0, result.output
    assert 'Extrapolated capacity: 300 associations (300 with M/N rounded ' \
        'down).' in result.output
    assert 'Acquisition time: 10.50 s.' in result.output

    with open(os.path.join(out, 'exp2_capacity.csv')) as f:
        lines = f.read().splitlines()
    assert lines[0].startswith('# cyclicstdp config_hash=')
    assert lines[1] == 'set_size,tolerance_ms,hits,total'
    rows = [line.split(',') for line in lines[2:]]
    assert len(rows) == 6 * 6
    assert sorted({int(r[0]) for r in rows}) == [5, 10, 15, 20, 25, 30]
    assert [r[1] for r in rows[:6]] == ['0.5', '1.0', '2.0', '3.0', '5.0',
                                        '7.0']


def test_cli_exp2_bad_set_sizes(runner, small_args):
    result = runner.invoke(cli.main, small_args + [
        'exp2', '--set-sizes', '5,ten'])
    assert result.exit_code == 2
    assert "expected integers, got '5,ten'" in result.output


def test_cli_raster(runner, tmpdir, small_args):
    out = str(tmpdir)
    result = runner.invoke(cli.main, small_args + [
        '--out-dir', out, 'raster', '--rate', '5', '--jitter', '0.5'])
    assert result.exit_code == 0, result.output
    with open(os.path.join(out, 'raster.csv')) as f:
        lines = f.read().splitlines()
    assert lines[1] == 'channel,time_ms,kind'
    kinds = {line.split(',')[2] for line in lines[2:]}
    assert kinds == {'signal', 'noise'}


def test_cli_interference(runner, small_args):
    result = runner.invoke(cli.main, small_args + [
        'interference', '--extra', '1', '--repeats', '2'])
    assert result.exit_code == 0, result.output
    assert re.match(r'^before=\S+ after=\S+ shift=\S+$',
                    result.output.splitlines()[-1])
