"""Rate-distortion function by Blahut-Arimoto iterations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import xlogy

from .dist import Pmf, entropy
from .errors import DomainError, MaxIterExceeded


@dataclass(frozen=True)
class SlopePoint:
    """One point of the curve, reached at Lagrange slope ``lam``."""

    lam: float
    distortion: float
    rate: float        # nats, mutual information of the test channel
    rate_lower: float  # Blahut lower bound on R(distortion)
    output: np.ndarray


def _slope_point(q: np.ndarray, d: np.ndarray, lam: float, r0=None,
                 tol: float = 1e-13, max_iter: int = 200_000) -> SlopePoint:
    ny = d.shape[1]
    shift = d.min(axis=1, keepdims=True)
    a = np.exp(-lam * (d - shift))
    r = np.full(ny, 1.0 / ny) if r0 is None else np.maximum(r0, 1e-300)
    for _ in range(max_iter):
        den = a @ r
        c = (q / den) @ a
        logc = np.log(np.maximum(c, 1e-300))
        gap = float(logc.max() - np.sum(xlogy(r * c, c)))
        r = r * c
        r /= r.sum()
        if gap <= tol:
            break
    else:
        raise MaxIterExceeded("rate-distortion iterations did not settle", gap=gap)
    den = a @ r
    w = r[None, :] * a / den[:, None]
    out = q @ w
    dist = float(np.sum(q[:, None] * w * d))
    pos = w > 0
    ratio = np.where(pos, w / np.where(out[None, :] > 0, out[None, :], 1.0), 1.0)
    rate = float(np.sum(q[:, None] * w * np.log(ratio)))
    c = (q / den) @ a
    lower = float(-lam * dist - np.sum(xlogy(q, den)) + lam * float(q @ shift.ravel())
                  - np.log(c.max()))
    return SlopePoint(lam, dist, max(rate, 0.0), max(lower, 0.0), r)


def distortion_range(q: np.ndarray, d: np.ndarray) -> tuple[float, float]:
    """``(D_lo, D_hi)``: least achievable distortion and the zero-rate threshold."""
    return float(q @ d.min(axis=1)), float((q @ d).min())


def rate_distortion(q: Pmf, d, D: float, tol: float = 1e-9) -> float:
    """``R(q, D)`` in nats for per-letter distortion ``d``.

    The slope ``lam`` is searched with Brent's method so that the test
    channel's distortion equals ``D``; the rate is then read off the
    tangent at that point.

    Raises
    ------
    DomainError
        If ``D`` is below the least achievable distortion.
    """
    qv = q.probs if isinstance(q, Pmf) else np.asarray(q, dtype=float)
    d = np.asarray(d, dtype=float)
    keep = qv > 0
    qv, d = qv[keep], d[keep]
    lo, hi = distortion_range(qv, d)
    if D >= hi - 1e-15:
        return 0.0
    if D < lo - 1e-12:
        raise DomainError(f"distortion {D} is below the achievable minimum {lo}")
    if D <= lo + 1e-12:
        return _rate_at_floor(qv, d, tol)

    state = {"r": None}

    def gap(lam):
        pt = _slope_point(qv, d, lam, state["r"])
        state["r"] = pt.output
        return pt.distortion - D

    lam_lo, lam_hi = 0.0, 1.0
    while gap(lam_hi) > 0:
        lam_lo, lam_hi = lam_hi, 2 * lam_hi
        if lam_hi > 1e7:
            raise MaxIterExceeded("slope search diverged near the distortion floor")
    lam = brentq(gap, lam_lo, lam_hi, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                 maxiter=500)
    pt = _slope_point(qv, d, lam, state["r"])
    return max(pt.rate - lam * (D - pt.distortion), 0.0)


def _rate_at_floor(q: np.ndarray, d: np.ndarray, tol: float) -> float:
    """``R(D_lo)``: exact when each letter has a unique best reproduction."""
    mins = d.min(axis=1, keepdims=True)
    best = np.isclose(d, mins, rtol=0, atol=1e-15)
    if np.all(best.sum(axis=1) == 1):
        f = best.argmax(axis=1)
        return entropy(np.bincount(f, weights=q, minlength=d.shape[1]))
    # ties: restrict to minimizing pairs and approach with a steep slope
    pt = _slope_point(q, np.where(best, 0.0, 1.0), 60.0)
    return pt.rate


def binary_hamming_rd(q: float, D: float) -> float:
    """Closed form ``H(q) - H(D)`` nats for ``D < min(q, 1 - q)``, else 0."""
    if D >= min(q, 1 - q):
        return 0.0
    return entropy([q, 1 - q]) - entropy([D, 1 - D])


@dataclass(frozen=True)
class RdCurve:
    """``D -> R(q, D)`` for a fixed source and distortion measure."""

    q: Pmf
    d: np.ndarray
    tol: float = 1e-9

    def __call__(self, D: float) -> float:
        return rate_distortion(self.q, self.d, D, self.tol)

    @property
    def d_range(self) -> tuple[float, float]:
        keep = self.q.probs > 0
        return distortion_range(self.q.probs[keep], np.asarray(self.d, float)[keep])
