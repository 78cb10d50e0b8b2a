"""Leakage-minimizing release mechanisms under an expected-distortion budget.

The general problem ::

    minimize    sum_y max_{x in supp} W(y|x)
    subject to  W row-stochastic,  sum_{x,y} P_X(x) W(y|x) d(x,y) <= D

becomes a linear program once each column maximum is replaced by an
epigraph variable ``t_y >= W(y|x)``.  Its optimum is ``exp`` of the minimal
maximal leakage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dist import TAU_SUPP, Channel, Pmf, SupportMask, entropy
from .errors import Infeasible, LabelMismatch, ParameterOutOfRange, ValidationError
from .lp import LPResult, simplex
from .metrics import maximal_leakage_channel
from .units import LeakageValue, nats


@dataclass(frozen=True)
class DistortionSpec:
    """Per-letter distortion ``d(x, y)`` and the budget ``level``."""

    d: np.ndarray
    level: float
    x_labels: tuple | None = None
    y_labels: tuple | None = None

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        if d.ndim != 2 or not np.all(np.isfinite(d)) or d.min() < 0:
            raise ValidationError("distortion must be a finite nonnegative matrix")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)
        for name, size in (("x_labels", d.shape[0]), ("y_labels", d.shape[1])):
            labels = getattr(self, name)
            labels = tuple(range(size)) if labels is None else tuple(labels)
            if len(labels) != size:
                raise LabelMismatch(f"{name} length does not match the distortion matrix")
            object.__setattr__(self, name, labels)
        if not self.level >= 0:
            raise ValidationError("distortion level must be nonnegative")

    @classmethod
    def hamming(cls, k: int, level: float, labels=None) -> "DistortionSpec":
        labels = tuple(range(k)) if labels is None else tuple(labels)
        return cls(1.0 - np.eye(k), level, labels, labels)

    @property
    def d_min(self) -> float:
        return float(self.d.min(axis=1).max())

    @property
    def d_max(self) -> float:
        return float(self.d.max())

    def with_level(self, level: float) -> "DistortionSpec":
        return DistortionSpec(self.d, level, self.x_labels, self.y_labels)


@dataclass(frozen=True)
class MechanismSolution:
    channel: Channel
    leakage: LeakageValue
    distortion: float
    certificate: dict = field(default_factory=dict)

    def to_dict(self, unit: str = "nats") -> dict:
        return {
            "x_labels": list(self.channel.x_labels),
            "y_labels": list(self.channel.y_labels),
            "channel": self.channel.dense().tolist(),
            "leakage": self.leakage.to(unit).value,
            "unit": unit,
            "distortion": self.distortion,
            "certificate": dict(self.certificate),
        }


def expected_distortion(px: Pmf, ch: Channel, d) -> float:
    return float(np.sum(px.probs[:, None] * ch.dense() * np.asarray(d, float)))


# -- binary Hamming closed form -----------------------------------------------

def _check_pd(p: float, D: float) -> None:
    if not 0 < p <= 0.5:
        raise ParameterOutOfRange("p must lie in (0, 1/2]")
    if not 0 <= D <= p:
        raise ParameterOutOfRange("D must lie in [0, p]")


def min_leakage_hamming_binary(p: float, D: float) -> MechanismSolution:
    """Optimal channel for ``X ~ Ber(p)`` under Hamming distortion.

    The minority symbol 1 is flipped to 0 with probability ``D/p`` and the
    majority symbol is kept; the leakage is ``log(2 - D/p)``.
    """
    _check_pd(p, D)
    a = D / p
    w = np.array([[1.0, 0.0], [a, 1.0 - a]])
    ch = Channel((0, 1), (0, 1), w)
    return MechanismSolution(ch, nats(math.log(2.0 - a)), p * a, {"kind": "closed_form"})


def memoryless_lower_bound_hamming(p: float, D: float) -> LeakageValue:
    """Per-letter lower bound ``1 - D/p`` bits on any memoryless scheme."""
    _check_pd(p, D)
    return LeakageValue(1.0 - D / p, "bits")


def per_letter_memoryless_optimum(p: float, D: float) -> LeakageValue:
    """``log2(2 - D/p)`` bits: the best single-letter mechanism."""
    _check_pd(p, D)
    return LeakageValue(math.log2(2.0 - D / p), "bits")


def hamming_rate_distortion_bits(p: float, D: float) -> float:
    """``H(p) - H(D)`` bits for a binary source, ``0 <= D <= p <= 1/2``."""
    _check_pd(p, D)
    return (entropy([p, 1 - p]) - entropy([D, 1 - D])) / math.log(2.0)


def memoryless_gap_report(p: float, D: float) -> dict:
    return {
        "p": p,
        "D": D,
        "memoryless_lower_bound_bits": memoryless_lower_bound_hamming(p, D).bits,
        "per_letter_optimum_bits": per_letter_memoryless_optimum(p, D).bits,
        "optimal_scheme_bits": hamming_rate_distortion_bits(p, D),
    }


# -- general LP ---------------------------------------------------------------

def _build_lp(px: np.ndarray, d: np.ndarray, level: float, rows: np.ndarray):
    s, ny = rows.size, d.shape[1]
    nw = s * ny
    c = np.concatenate([np.zeros(nw), np.ones(ny)])
    a_ub = []
    b_ub = []
    for i in range(s):
        for k in range(ny):
            r = np.zeros(nw + ny)
            r[i * ny + k] = 1.0
            r[nw + k] = -1.0
            a_ub.append(r)
            b_ub.append(0.0)
    r = np.zeros(nw + ny)
    r[:nw] = (px[rows, None] * d[rows]).ravel()
    a_ub.append(r)
    b_ub.append(level)
    a_eq = np.zeros((s, nw + ny))
    for i in range(s):
        a_eq[i, i * ny:(i + 1) * ny] = 1.0
    return c, np.array(a_ub), np.array(b_ub), a_eq, np.ones(s)


def _lex_refine(c, a_ub, b_ub, a_eq, b_eq, opt: float, nw: int, ny: int, tol: float):
    """Among optimal points, pick the lexicographically largest ``W`` (row-major).

    Each stage maximizes one entry with the objective and the earlier
    entries pinned to their optimal values (up to ``tol``).
    """
    a_ub = np.vstack([a_ub, c])
    b_ub = np.append(b_ub, opt + tol)
    x = None
    for idx in range(nw):
        if (idx + 1) % ny == 0:
            continue  # last entry of a row is fixed by the others
        obj = np.zeros_like(c)
        obj[idx] = -1.0
        x = simplex(obj, a_ub, b_ub, a_eq, b_eq).x
        pin = np.zeros_like(c)
        pin[idx] = -1.0
        a_ub = np.vstack([a_ub, pin])
        b_ub = np.append(b_ub, -(x[idx] - tol))
    return x


def min_leakage_general(px: Pmf, spec: DistortionSpec, tol: float = 1e-7,
                        tau: float = TAU_SUPP) -> MechanismSolution:
    """Minimal maximal leakage under ``E d(X, Y) <= spec.level``.

    Only inputs with ``P_X(x) >= tau`` enter the objective; each remaining
    row is copied from the nearest in-support row (lower index on ties).

    Raises
    ------
    Infeasible
        If even the per-input distortion minimizer exceeds the budget.
    SolverStalled
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if tuple(px.labels) != tuple(spec.x_labels):
        raise LabelMismatch("distortion rows do not match the pmf labels")
    d = spec.d
    p = px.probs
    floor = float(np.sum(p * d.min(axis=1)))
    if spec.level < floor - 1e-12:
        raise Infeasible(f"budget {spec.level} below the least achievable distortion {floor}")
    mask = SupportMask.from_probs(px.labels, p, tau)
    rows = np.flatnonzero(mask.mask)
    s, ny = rows.size, d.shape[1]
    c, a_ub, b_ub, a_eq, b_eq = _build_lp(p, d, spec.level, rows)
    res: LPResult = simplex(c, a_ub, b_ub, a_eq, b_eq)
    x = _lex_refine(c, a_ub, b_ub, a_eq, b_eq, res.fun, s * ny, ny, 1e-11)
    if x is None:  # single-output alphabet
        x = res.x
    w_in = np.clip(x[:s * ny].reshape(s, ny), 0.0, None)
    w_in /= w_in.sum(axis=1, keepdims=True)
    w = np.empty((len(px), ny))
    for i in range(len(px)):
        w[i] = w_in[int(np.argmin(np.abs(rows - i)))]
    ch = Channel(px.labels, spec.y_labels, w)
    leak = maximal_leakage_channel(ch, mask)
    cert = {
        "kind": "lp_dual",
        "primal": res.fun,
        "dual_bound": res.dual_bound,
        "gap": res.gap,
        "dual_residual": res.dual_residual,
        "leakage_lower_bound": math.log(max(res.dual_bound, 1.0)),
        "within_tol": bool(abs(res.gap) <= tol and res.dual_residual <= tol),
    }
    return MechanismSolution(ch, leak, expected_distortion(px, ch, d), cert)
