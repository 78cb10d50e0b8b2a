"""Named channels and seeded random instances."""

from __future__ import annotations

from typing import Callable, Hashable, Sequence

import numpy as np
import scipy.sparse as sp

from .dist import Channel, JointPmf, Pmf, compose

BINARY = (0, 1)


def bsc(p: float) -> Channel:
    """Binary symmetric channel with crossover ``p``."""
    return Channel(BINARY, BINARY, [[1 - p, p], [p, 1 - p]])


def bec(eps: float) -> Channel:
    """Binary erasure channel; outputs ordered ``(0, "e", 1)``."""
    return Channel(BINARY, (0, "e", 1), [[1 - eps, eps, 0.0], [0.0, eps, 1 - eps]])


def identity_channel(labels: Sequence[Hashable] | int) -> Channel:
    labels = tuple(range(labels)) if isinstance(labels, int) else tuple(labels)
    return Channel(labels, labels, np.eye(len(labels)))


def constant_channel(x_labels, y_labels, row) -> Channel:
    """Every input sees the same output distribution ``row``."""
    x_labels = tuple(x_labels)
    return Channel(x_labels, y_labels, np.tile(np.asarray(row, float), (len(x_labels), 1)))


def deterministic_channel(x_labels: Sequence[Hashable], f: Callable) -> Channel:
    """Sparse channel of ``y = f(x)``.

    Output labels are the distinct images, in order of first appearance.
    """
    x_labels = tuple(x_labels)
    images = [f(x) for x in x_labels]
    index: dict = {}
    cols = np.empty(len(images), dtype=np.int64)
    for i, y in enumerate(images):
        cols[i] = index.setdefault(y, len(index))
    w = sp.csr_array((np.ones(len(images)), (np.arange(len(images)), cols)),
                     shape=(len(x_labels), len(index)))
    return Channel(x_labels, tuple(index), w)


def binary_joint(q: float, ch: Channel) -> JointPmf:
    """Compose ``Ber(q)`` on ``{0, 1}`` with a binary-input channel."""
    return compose(Pmf(BINARY, [1 - q, q]), ch)


# -- random instances ---------------------------------------------------------

def random_pmf(rng: np.random.Generator, k: int, alpha: float = 1.0, labels=None) -> Pmf:
    """Dirichlet(alpha, ..., alpha) draw."""
    labels = tuple(range(k)) if labels is None else tuple(labels)
    return Pmf(labels, rng.dirichlet(np.full(k, alpha)))


def random_stochastic(rng: np.random.Generator, rows: int, cols: int,
                      alpha: float = 1.0, zero_prob: float = 0.0) -> np.ndarray:
    """Row-stochastic matrix with Dirichlet rows.

    With ``zero_prob > 0`` each entry is zeroed independently (one entry per
    row always survives) to exercise support effects.
    """
    w = rng.dirichlet(np.full(cols, alpha), size=rows)
    if zero_prob > 0:
        keep = rng.random((rows, cols)) >= zero_prob
        keep[np.arange(rows), rng.integers(0, cols, rows)] = True
        w = w * keep
        w /= w.sum(axis=1, keepdims=True)
    return w


def random_channel(rng: np.random.Generator, nx: int, ny: int, alpha: float = 1.0,
                   zero_prob: float = 0.0, x_labels=None, y_labels=None) -> Channel:
    x_labels = tuple(range(nx)) if x_labels is None else tuple(x_labels)
    y_labels = tuple(range(ny)) if y_labels is None else tuple(y_labels)
    return Channel(x_labels, y_labels, random_stochastic(rng, nx, ny, alpha, zero_prob))


def random_joint(rng: np.random.Generator, nx: int, ny: int, alpha: float = 1.0,
                 zero_prob: float = 0.0) -> JointPmf:
    return compose(random_pmf(rng, nx, alpha), random_channel(rng, nx, ny, alpha, zero_prob))
