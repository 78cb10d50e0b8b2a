"""Brute-force guessing oracle.

An auxiliary channel ``P_{U|X}`` defines a secret ``U``.  The functions here
compute guessing probabilities for ``U`` directly from their definitions, so
they serve as an operational cross-check of the closed forms in
:mod:`maxleak.metrics`.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .dist import NORM_TOL, TAU_SUPP, JointPmf, Pmf, _check_entries, _frozen, _labels
from .errors import KTooLarge, LabelMismatch, NotNormalized, ZeroGain
from .units import LeakageValue, nats


class AuxChannel:
    """Column-stochastic ``P_{U|X}`` stored as a ``|U| x |X|`` matrix."""

    __slots__ = ("u_labels", "x_labels", "m")

    def __init__(self, u_labels, x_labels, m, tol: float = NORM_TOL):
        u_labels = _labels(u_labels, "u")
        x_labels = _labels(x_labels, "x")
        m = np.asarray(m, dtype=float)
        if m.shape != (len(u_labels), len(x_labels)):
            raise LabelMismatch(f"aux matrix shape {m.shape} does not match labels")
        _check_entries(m.ravel(), "aux channel")
        cols = m.sum(axis=0)
        if np.any(np.abs(cols - 1.0) > tol):
            raise NotNormalized("aux channel columns must each sum to 1")
        object.__setattr__(self, "u_labels", u_labels)
        object.__setattr__(self, "x_labels", x_labels)
        object.__setattr__(self, "m", _frozen(m / cols))

    def __setattr__(self, *_):
        raise AttributeError("AuxChannel is immutable")

    @classmethod
    def identity(cls, x_labels) -> "AuxChannel":
        """``U = X``."""
        x_labels = tuple(x_labels)
        return cls(x_labels, x_labels, np.eye(len(x_labels)))

    @classmethod
    def independent(cls, x_labels, pu: Pmf) -> "AuxChannel":
        x_labels = tuple(x_labels)
        return cls(pu.labels, x_labels, np.tile(pu.probs[:, None], (1, len(x_labels))))

    def __repr__(self):
        return f"AuxChannel(|U|={len(self.u_labels)}, |X|={len(self.x_labels)})"


class GainFunction:
    """Nonnegative gain ``g(u, uhat)``."""

    __slots__ = ("u_labels", "uhat_labels", "g")

    def __init__(self, u_labels, uhat_labels, g):
        u_labels = _labels(u_labels, "u")
        uhat_labels = _labels(uhat_labels, "uhat")
        g = np.asarray(g, dtype=float)
        if g.shape != (len(u_labels), len(uhat_labels)):
            raise LabelMismatch("gain matrix shape does not match labels")
        _check_entries(g.ravel(), "gain")
        object.__setattr__(self, "u_labels", u_labels)
        object.__setattr__(self, "uhat_labels", uhat_labels)
        object.__setattr__(self, "g", _frozen(g))

    def __setattr__(self, *_):
        raise AttributeError("GainFunction is immutable")

    @classmethod
    def indicator(cls, u_labels) -> "GainFunction":
        u_labels = tuple(u_labels)
        return cls(u_labels, u_labels, np.eye(len(u_labels)))

    def scaled(self, c: float) -> "GainFunction":
        return GainFunction(self.u_labels, self.uhat_labels, c * self.g)


def _check(aux: AuxChannel, x_labels) -> None:
    if tuple(aux.x_labels) != tuple(x_labels):
        raise LabelMismatch("aux channel inputs differ from the distribution's x labels")


def _pu(aux: AuxChannel, px: np.ndarray) -> np.ndarray:
    return aux.m @ px


def _puy(aux: AuxChannel, j: JointPmf) -> np.ndarray:
    _check(aux, j.x_labels)
    return aux.m @ j.dense()


# -- guessing probabilities ---------------------------------------------------

def prior_guess_prob(aux: AuxChannel, px: Pmf) -> float:
    """``max_u P_U(u)``."""
    _check(aux, px.labels)
    return float(_pu(aux, px.probs).max())


def posterior_guess_prob(aux: AuxChannel, j: JointPmf) -> float:
    """``sum_y max_u P_UY(u, y)``: MAP success probability for ``U`` given ``Y``."""
    return float(_puy(aux, j).max(axis=0).sum())


def leakage_of_U(aux: AuxChannel, j: JointPmf) -> LeakageValue:
    prior = prior_guess_prob(aux, Pmf(j.x_labels, j.px))
    return nats(math.log(posterior_guess_prob(aux, j) / prior))


def shattering_channel(px: Pmf, tau: float = TAU_SUPP) -> AuxChannel:
    """Split every ``x`` into shards of mass ``p* = min_x P_X(x)``.

    Input ``x`` gets ``ceil(k)`` atoms with ``k = P_X(x)/p*``; all but the
    last carry ``P_U = p*`` and the last carries the remainder.  Supports of
    the columns are disjoint, so ``max_u P_U(u) = p*``.  Inputs outside the
    support get one private atom of zero prior mass.

    Ratios ``k`` within ``1e-9`` (relative) of an integer are snapped to it,
    so that float noise does not create a spurious sliver atom.
    """
    probs = px.probs
    inside = probs >= tau
    pstar = float(probs[inside].min())
    u_labels, cols, vals = [], [], []
    for i, (x, p) in enumerate(zip(px.labels, probs)):
        if not inside[i]:
            u_labels.append((x, 1))
            cols.append(i)
            vals.append(1.0)
            continue
        k = p / pstar
        r = round(k)
        natoms = int(r) if abs(k - r) <= 1e-9 * k else math.ceil(k)
        share = pstar / p
        for a in range(1, natoms + 1):
            u_labels.append((x, a))
            cols.append(i)
            vals.append(share if a < natoms else 1.0 - (natoms - 1) * share)
    m = np.zeros((len(u_labels), len(px)))
    m[np.arange(len(u_labels)), cols] = vals
    return AuxChannel(u_labels, px.labels, m)


def _top_k_sum(a: np.ndarray, k: int, axis: int = 0) -> np.ndarray:
    if k >= a.shape[axis]:
        return a.sum(axis=axis)
    part = -np.partition(-a, k - 1, axis=axis)
    return np.take(part, np.arange(k), axis=axis).sum(axis=axis)


def k_guess_leakage_of_U(aux: AuxChannel, j: JointPmf, k: int) -> LeakageValue:
    """Leakage when the guesser may submit ``k`` distinct guesses."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    if k > len(aux.u_labels):
        raise KTooLarge(f"k={k} exceeds |U|={len(aux.u_labels)}")
    num = float(_top_k_sum(_puy(aux, j), k, axis=0).sum())
    den = float(_top_k_sum(_pu(aux, j.px), k, axis=0))
    return nats(math.log(num / den))


def expand_for_k(aux: AuxChannel, k: int) -> AuxChannel:
    """Replace each atom ``u`` by ``k`` copies ``(u, i)`` with a ``1/k`` share."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    labels = [(u, i) for u in aux.u_labels for i in range(1, k + 1)]
    return AuxChannel(labels, aux.x_labels, np.repeat(aux.m, k, axis=0) / k)


def opportunistic_leakage(aux_family: Sequence[AuxChannel], j: JointPmf) -> LeakageValue:
    """Leakage when the secret ``U_y`` may depend on the realized output.

    ``aux_family[i]`` is the aux channel used when ``Y`` equals the ``i``-th
    output label.  Outputs of zero probability are skipped.  A family whose
    per-output secrets are harder to guess than their priors can give a
    ratio below 1; the log is clamped at 0, the value any independent family
    attains.
    """
    if len(aux_family) != len(j.y_labels):
        raise LabelMismatch("need one aux channel per output label")
    p = j.dense()
    total = 0.0
    for i, aux in enumerate(aux_family):
        py = j.py[i]
        if py <= 0:
            continue
        _check(aux, j.x_labels)
        post = (aux.m @ p[:, i]).max() / py
        total += py * post / _pu(aux, j.px).max()
    return nats(math.log(max(total, 1.0)))


def gain_leakage_of(aux: AuxChannel, g: GainFunction, j: JointPmf) -> LeakageValue:
    """Multiplicative increase of the best expected gain after seeing ``Y``."""
    if tuple(g.u_labels) != tuple(aux.u_labels):
        raise LabelMismatch("gain function and aux channel use different U labels")
    den = float((g.g.T @ _pu(aux, j.px)).max())
    if den <= 0:
        raise ZeroGain("every guess has zero expected gain under the prior")
    num = float((g.g.T @ _puy(aux, j)).max(axis=0).sum())
    return nats(math.log(num / den))


def map_estimate(j: JointPmf) -> tuple[dict, float]:
    """MAP guess of ``X`` for each output and its overall success probability."""
    p = j.dense()
    best = np.argmax(p, axis=0)
    guess = {y: j.x_labels[int(b)] for y, b in zip(j.y_labels, best)}
    return guess, float(p.max(axis=0).sum())


def guess_success(j: JointPmf, guess: dict) -> float:
    """Success probability of an arbitrary guessing map ``y -> x``."""
    p = j.dense()
    xi = {x: i for i, x in enumerate(j.x_labels)}
    return float(sum(p[xi[guess[y]], k] for k, y in enumerate(j.y_labels)))


# -- per-output ratio ---------------------------------------------------------

def per_output_ratios(aux: AuxChannel, j: JointPmf) -> np.ndarray:
    """``max_u P_{U|Y}(u|y) / max_u P_U(u)`` for each output (NaN off-support)."""
    puy = _puy(aux, j)
    prior = _pu(aux, j.px).max()
    out = np.full(len(j.y_labels), np.nan)
    pos = j.py > 0
    out[pos] = puy[:, pos].max(axis=0) / j.py[pos] / prior
    return out


def per_output_bound(j: JointPmf) -> np.ndarray:
    """``max_{x: P(x|y) > 0} W(y|x) / P_Y(y)`` for each output (NaN off-support)."""
    p = j.dense()
    out = np.full(len(j.y_labels), np.nan)
    rows = j.px > 0
    w = np.zeros_like(p)
    w[rows] = p[rows] / j.px[rows, None]
    for k in np.flatnonzero(j.py > 0):
        reach = p[:, k] > 0
        out[k] = w[reach, k].max() / j.py[k]
    return out


def random_aux(rng: np.random.Generator, nu: int, x_labels, alpha: float = 1.0) -> AuxChannel:
    """Random ``P_{U|X}`` with Dirichlet columns."""
    x_labels = tuple(x_labels)
    m = rng.dirichlet(np.full(nu, alpha), size=len(x_labels)).T
    return AuxChannel(range(nu), x_labels, m)
