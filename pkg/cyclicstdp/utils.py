from contextlib import contextmanager
import hashlib

import numpy as np

#: Named random sub-streams derived from the master seed.
STREAMS = ('pattern', 'noise', 'synapse-lifetimes', 'experiment',
           'calibration')


def get_fname_and_fobj_and_str(fname_or_fobj):
    if isinstance(fname_or_fobj, str):
        return fname_or_fobj, None, fname_or_fobj
    try:
        fname = fname_or_fobj.name
    except AttributeError:
        return None, fname_or_fobj, str(fname_or_fobj)
    return fname, fname_or_fobj, fname


@contextmanager
def open_text(fname_or_fobj, mode='r'):
    """Yield a text file object for a path or an already open file."""
    fname, fobj, _ = get_fname_and_fobj_and_str(fname_or_fobj)
    if fobj is not None:
        yield fobj
        return
    with open(fname, mode, newline='') as f:
        yield f


def iter_data_lines(fobj):
    """Yield stripped lines, skipping blanks and ``#`` comments."""
    for line in fobj:
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        yield line


def stream_key(name):
    if name not in STREAMS:
        raise KeyError('unknown random stream: %r' % (name,))
    digest = hashlib.sha256(name.encode('ascii')).digest()
    return int.from_bytes(digest[:4], 'big')


def make_rng(seed, stream, *keys):
    """Generator for ``stream`` under the master ``seed``.

    Streams never share state, so drawing from one (e.g. noise) leaves
    the others (e.g. pattern) untouched.
    """
    seq = np.random.SeedSequence(
        entropy=int(seed), spawn_key=(stream_key(stream),) + tuple(
            int(k) for k in keys))
    return np.random.default_rng(seq)


def format_float(value):
    """Shortest text that parses back to the same float."""
    return repr(float(value))


def comment_header(config_hash, seed):
    return '# cyclicstdp config_hash=%s seed=%d\n' % (config_hash, seed)
