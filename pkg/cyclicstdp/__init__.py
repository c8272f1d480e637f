"""Spiking associative memory trained with cyclic STDP."""

DEFAULT_CONVERGENCE_FILE = 'exp1_convergence.csv'
DEFAULT_RECRUITMENT_FILE = 'exp1_recruitment.csv'
DEFAULT_CAPACITY_FILE = 'exp2_capacity.csv'
DEFAULT_SNAPSHOT_FILE = 'snapshot.csv'
DEFAULT_PATTERN_FILE = 'pattern.csv'
DEFAULT_RASTER_FILE = 'raster.csv'


def get_version():
    from cyclicstdp.__version__ import version
    return version
