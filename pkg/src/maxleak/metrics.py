"""Closed-form leakage metrics on finite distributions.

All functions return values in nats.  Infinite leakage is returned as
``math.inf``; no function lets a NaN escape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.special import xlogy

from .dist import (
    TAU_SUPP,
    Channel,
    CondJointPmf,
    JointPmf,
    Pmf,
    SupportMask,
    conditional_mutual_information,
    densify,
    factor,
    is_sparse,
    mutual_information,
    support_of,
)
from .errors import DegenerateMinSum, MaxIterExceeded
from .units import LeakageValue, nats, to_unit


# -- internal helpers ---------------------------------------------------------

def _support_rows(w, mask: SupportMask):
    idx = np.flatnonzero(mask.mask)
    return w[idx] if is_sparse(w) else w[idx, :]


def _col_max(w) -> np.ndarray:
    if is_sparse(w):
        return np.asarray(w.max(axis=0).todense(), dtype=float).ravel()
    return w.max(axis=0)


def _cells(j: JointPmf, tau: float):
    """Row, column and value of every positive cell in an in-support row."""
    if j.is_sparse:
        c = j.p.tocoo()
        r, k, v = c.row, c.col, c.data
    else:
        r, k = np.nonzero(j.p > 0)
        v = j.p[r, k]
    keep = (v > 0) & (j.px[r] >= tau)
    return r[keep], k[keep], v[keep]


def renyi_inf_divergence(p, q) -> float:
    """``D_inf(p || q) = log max_{p > 0} p / q`` for arrays of equal shape."""
    p = densify(p) if is_sparse(p) else np.asarray(p, dtype=float)
    q = densify(q) if is_sparse(q) else np.asarray(q, dtype=float)
    pos = p > 0
    if np.any(q[pos] <= 0):
        return math.inf
    return float(np.log(np.max(p[pos] / q[pos])))


# -- maximal leakage and its witnesses ---------------------------------------

def maximal_leakage_channel(ch: Channel, mask: SupportMask) -> LeakageValue:
    """``log sum_y max_{x in supp} W(y|x)``."""
    return nats(math.log(_col_max(_support_rows(ch.w, mask)).sum()))


def maximal_leakage(j: JointPmf, tau: float = TAU_SUPP) -> LeakageValue:
    """Maximal leakage from ``X`` to ``Y``.

    Examples
    --------
    >>> from maxleak.channels import bsc, binary_joint
    >>> round(maximal_leakage(binary_joint(0.5, bsc(0.25))).nats, 12)
    0.405465108108
    """
    _, ch, mask = factor(j, tau)
    return maximal_leakage_channel(ch, mask)


def sibson_witness(ch: Channel, mask: SupportMask) -> Pmf:
    """Output distribution attaining the infimum in the Sibson form.

    ``Q*(y)`` is proportional to the column maximum of the in-support rows.
    """
    m = _col_max(_support_rows(ch.w, mask))
    return Pmf(ch.y_labels, m / m.sum())


def conditional_maximal_leakage(cj: CondJointPmf, tau: float = TAU_SUPP) -> LeakageValue:
    """Worst per-``z`` maximal leakage over the support of ``Z``."""
    return nats(max(maximal_leakage(jz, tau).nats for _, _, jz in cj.support_items(tau)))


def realizable_leakage(j: JointPmf, tau: float = TAU_SUPP) -> LeakageValue:
    return realizable_leakage_detail(j, tau)[0]


def realizable_leakage_detail(j: JointPmf, tau: float = TAU_SUPP):
    """Value and the ``(x, y)`` label pair attaining it (lowest index on ties)."""
    r, k, v = _cells(j, tau)
    ratio = v / (j.px[r] * j.py[k])
    i = int(np.argmax(ratio))
    return nats(math.log(ratio[i])), (j.x_labels[r[i]], j.y_labels[k[i]])


def local_dp(ch: Channel) -> LeakageValue:
    return local_dp_detail(ch)[0]


def local_dp_detail(ch: Channel):
    """Value and witness ``(y, x, x')`` maximizing ``W(y|x) / W(y|x')``."""
    w = ch.dense()
    best, wit = 0.0, None
    for k in range(w.shape[1]):
        col = w[:, k]
        hi = int(np.argmax(col))
        if col[hi] <= 0:
            continue
        lo = int(np.argmin(col))
        val = math.inf if col[lo] <= 0 else math.log(col[hi] / col[lo])
        if wit is None or val > best:
            best, wit = val, (ch.y_labels[k], ch.x_labels[hi], ch.x_labels[lo])
            if math.isinf(val):
                break
    return nats(best), wit


def _col_min_sum(ch: Channel, mask: SupportMask):
    rows = densify(_support_rows(ch.w, mask))
    m = rows.min(axis=0)
    return m, float(m.sum())


def cost_leakage(j: JointPmf, tau: float = TAU_SUPP) -> LeakageValue:
    """``-log sum_y min_{x in supp} W(y|x)``; infinite when the sum is zero."""
    _, ch, mask = factor(j, tau)
    _, s = _col_min_sum(ch, mask)
    return nats(math.inf if s <= 0 else -math.log(min(s, 1.0)))


def cost_leakage_witness(ch: Channel, mask: SupportMask) -> Pmf:
    m, s = _col_min_sum(ch, mask)
    if s <= 0:
        raise DegenerateMinSum("column minima sum to zero; cost leakage is infinite")
    return Pmf(ch.y_labels, m / s)


def realizable_cost(j: JointPmf, tau: float = TAU_SUPP) -> LeakageValue:
    return realizable_cost_detail(j, tau)[0]


def realizable_cost_detail(j: JointPmf, tau: float = TAU_SUPP):
    """``max log P_Y(y) / W(y|x)`` over in-support ``x`` and ``P_Y(y) > 0``."""
    _, ch, mask = factor(j, tau)
    w = densify(ch.w)
    rows = np.flatnonzero(mask.mask)
    cols = np.flatnonzero(j.py > 0)
    sub = w[np.ix_(rows, cols)]
    py = j.py[cols]
    zero = sub <= 0
    if zero.any():
        a, b = np.argwhere(zero)[0]
        return nats(math.inf), (j.x_labels[rows[a]], j.y_labels[cols[b]])
    ratio = py[None, :] / sub
    a, b = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    return nats(math.log(ratio[a, b])), (j.x_labels[rows[a]], j.y_labels[cols[b]])


# -- correlation based --------------------------------------------------------

def maximal_correlation(j: JointPmf, tau: float = TAU_SUPP) -> float:
    """Hirschfeld-Gebelein-Renyi maximal correlation.

    Computed as the largest singular value of
    ``B - sqrt(P_X) sqrt(P_Y)^T`` with ``B = P_XY / sqrt(P_X P_Y)`` on the
    support; the removed rank-one term carries the trivial singular value 1.
    """
    rx = np.flatnonzero(j.px >= tau)
    ry = np.flatnonzero(j.py >= tau)
    if rx.size < 2 or ry.size < 2:
        return 0.0
    p = j.dense()[np.ix_(rx, ry)]
    sx, sy = np.sqrt(j.px[rx]), np.sqrt(j.py[ry])
    b = p / np.outer(sx, sy) - np.outer(sx, sy)
    rho = float(np.linalg.norm(b, 2))
    return min(max(rho, 0.0), 1.0)


# rho_m this close to one is treated as perfect dependence
_RHO_ONE = 1e-12


def variance_leakage(j: JointPmf, tau: float = TAU_SUPP) -> LeakageValue:
    rho = maximal_correlation(j, tau)
    gap = 1.0 - rho * rho
    return nats(math.inf if gap <= _RHO_ONE else -math.log(gap))


# -- capacity -----------------------------------------------------------------

@dataclass(frozen=True)
class CapacityResult:
    """Blahut-Arimoto output; the capacity lies in ``[lower, upper]``."""

    lower: float
    upper: float
    input_pmf: Pmf
    iterations: int

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def _row_divergences(w: np.ndarray, q: np.ndarray) -> np.ndarray:
    logq = np.log(np.where(q > 0, q, 1.0))
    return (xlogy(w, w) - w * logq[None, :]).sum(axis=1)


def blahut_arimoto(ch: Channel, tol: float = 1e-10, max_iter: int = 100_000) -> CapacityResult:
    """Capacity of ``ch`` with the standard two-sided Blahut bracket.

    At input ``p`` with output ``q = pW`` and row divergences
    ``D_x = D(W(.|x) || q)``, the capacity lies between
    ``log sum_x p(x) exp(D_x)`` and ``max_x D_x``.

    Raises
    ------
    MaxIterExceeded
        Carries the lower bound and the bracket width reached.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    w = ch.dense()
    p = np.full(w.shape[0], 1.0 / w.shape[0])
    lo = hi = 0.0
    for it in range(1, max_iter + 1):
        d = _row_divergences(w, p @ w)
        # shift by max for a stable log-sum-exp
        dmax = float(d.max())
        e = p * np.exp(d - dmax)
        z = float(e.sum())
        lo, hi = max(dmax + math.log(z), 0.0), dmax
        if hi - lo <= tol:
            return CapacityResult(lo, hi, Pmf(ch.x_labels, p), it)
        p = e / z
    raise MaxIterExceeded(f"Blahut-Arimoto gap {hi - lo:.3g} after {max_iter} iterations",
                          value=lo, gap=hi - lo)


def capacity(ch: Channel, tol: float = 1e-10, max_iter: int = 100_000) -> LeakageValue:
    return nats(blahut_arimoto(ch, tol, max_iter).lower)


# -- comparisons with mutual information -------------------------------------

def additive_increase_bound(j: JointPmf, tau: float = TAU_SUPP) -> float:
    """``1 - exp(-L)``: cap on the additive gain in guessing probability."""
    return float(-math.expm1(-maximal_leakage(j, tau).nats))


def mi_equality_conditions(j: JointPmf, tol: float = 1e-9, tau: float = TAU_SUPP) -> bool:
    """Whether maximal leakage coincides with mutual information.

    Two conditions must hold: within each column all positive cells carry
    the same ``W(y|x)``, and the ``P_X`` mass of the inputs reaching each
    output is the same for every output in the support.
    """
    r, k, v = _cells(j, tau)
    wv = v / j.px[r]
    ny = len(j.y_labels)
    wmax = np.full(ny, -np.inf)
    wmin = np.full(ny, np.inf)
    np.maximum.at(wmax, k, wv)
    np.minimum.at(wmin, k, wv)
    used = np.isfinite(wmax)
    if np.any(wmax[used] - wmin[used] > tol):
        return False
    reach = np.bincount(k, weights=j.px[r], minlength=ny)[used]
    return bool(reach.max() - reach.min() <= tol)


# -- report -------------------------------------------------------------------

LEAKAGE_METRICS = (
    "maximal_leakage",
    "mutual_information",
    "realizable_leakage",
    "local_dp",
    "cost_leakage",
    "realizable_cost",
    "variance_leakage",
    "capacity",
)
SCALAR_METRICS = ("maximal_correlation", "additive_increase_bound", "mi_equality_conditions")
CONDITIONAL_METRICS = ("conditional_maximal_leakage", "conditional_mutual_information")
ALL_METRICS = LEAKAGE_METRICS + SCALAR_METRICS


def _pmf_json(q: Pmf) -> dict:
    return {"labels": list(q.labels), "probs": q.probs.tolist()}


@dataclass
class MetricReport:
    """Metric values in nats plus the witnesses that certify them."""

    values: dict[str, LeakageValue] = field(default_factory=dict)
    scalars: dict[str, Any] = field(default_factory=dict)
    witnesses: dict[str, Any] = field(default_factory=dict)

    def to_dict(self, unit: str = "nats") -> dict:
        return {
            "unit": unit,
            "values": {k: to_unit(v.nats, "nats", unit) for k, v in self.values.items()},
            "scalars": dict(self.scalars),
            "witnesses": dict(self.witnesses),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        unit = d.get("unit", "nats")
        values = {k: LeakageValue(float(v), unit).to("nats") for k, v in d["values"].items()}
        return cls(values, dict(d.get("scalars", {})), dict(d.get("witnesses", {})))


def metric_report(j: JointPmf, metrics=ALL_METRICS, tau: float = TAU_SUPP,
                  capacity_tol: float = 1e-10) -> MetricReport:
    """Evaluate a selection of metrics on one joint."""
    metrics = ALL_METRICS if metrics in ("all", None) else tuple(metrics)
    unknown = set(metrics) - set(ALL_METRICS)
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(map(str, unknown))}")
    rep = MetricReport()
    _, ch, mask = factor(j, tau)
    for name in metrics:
        if name == "maximal_leakage":
            rep.values[name] = maximal_leakage_channel(ch, mask)
            rep.witnesses["sibson_output"] = _pmf_json(sibson_witness(ch, mask))
        elif name == "mutual_information":
            rep.values[name] = nats(mutual_information(j))
        elif name == "realizable_leakage":
            rep.values[name], pair = realizable_leakage_detail(j, tau)
            rep.witnesses[name] = list(pair)
        elif name == "local_dp":
            rep.values[name], wit = local_dp_detail(ch)
            rep.witnesses[name] = None if wit is None else list(wit)
        elif name == "cost_leakage":
            rep.values[name] = cost_leakage(j, tau)
            if not rep.values[name].is_infinite:
                rep.witnesses["cost_output"] = _pmf_json(cost_leakage_witness(ch, mask))
        elif name == "realizable_cost":
            rep.values[name], pair = realizable_cost_detail(j, tau)
            rep.witnesses[name] = list(pair)
        elif name == "variance_leakage":
            rep.values[name] = variance_leakage(j, tau)
        elif name == "capacity":
            res = blahut_arimoto(ch, capacity_tol)
            rep.values[name] = nats(res.lower)
            rep.witnesses["capacity_input"] = _pmf_json(res.input_pmf)
            rep.scalars["capacity_gap"] = res.gap
        elif name == "maximal_correlation":
            rep.scalars[name] = maximal_correlation(j, tau)
        elif name == "additive_increase_bound":
            rep.scalars[name] = additive_increase_bound(j, tau)
        elif name == "mi_equality_conditions":
            rep.scalars[name] = mi_equality_conditions(j, tau=tau)
    return rep


def conditional_report(cj: CondJointPmf, tau: float = TAU_SUPP) -> MetricReport:
    rep = MetricReport()
    rep.values["conditional_maximal_leakage"] = conditional_maximal_leakage(cj, tau)
    rep.values["conditional_mutual_information"] = nats(conditional_mutual_information(cj))
    per_z = {str(z): maximal_leakage(jz, tau).nats for z, _, jz in cj.support_items(tau)}
    rep.witnesses["per_z_maximal_leakage"] = per_z
    return rep
