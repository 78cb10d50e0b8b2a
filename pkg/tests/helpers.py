import numpy as np

from maxleak.channels import random_channel, random_pmf
from maxleak.dist import JointPmf, compose

REMARK_W = [[0.2, 0.5, 0.3], [0.3, 0.4, 0.3], [0.2, 0.4, 0.4]]


def random_instances(count, seed, max_x=6, max_y=6, zero_prob=0.0, min_size=1):
    """Seeded ``(px, channel, joint)`` triples of random shape."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        nx = int(rng.integers(min_size, max_x + 1))
        ny = int(rng.integers(min_size, max_y + 1))
        px = random_pmf(rng, nx)
        ch = random_channel(rng, nx, ny, zero_prob=zero_prob)
        yield px, ch, compose(px, ch)


def independent_joint(px, py):
    return JointPmf(range(len(px)), range(len(py)), np.outer(px, py))
