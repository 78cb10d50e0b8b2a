"""Finite distributions: validation, marginals, factorization and products.

Matrices are indexed by label order, rows by ``x`` and columns by ``y``.
Joint and channel matrices may be dense ``numpy`` arrays or ``scipy.sparse``
CSR arrays; the sparse form exists for large deterministic maps and is
understood by marginals, factorization, composition, entropy, mutual
information and maximal leakage.  Everything else densifies under
:data:`SIZE_CAP`.

All objects are immutable once built.
"""

from __future__ import annotations

import itertools
import math
from typing import Hashable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import xlogy

from .errors import (
    AllMassOutOfSupport,
    DuplicateLabel,
    EmptyAlphabet,
    LabelMismatch,
    NegativeProbability,
    NotNormalized,
    SizeCapExceeded,
    ValidationError,
)

TAU_SUPP = 1e-12   # probabilities below this count as zero when taking supports
NORM_TOL = 1e-9    # residual mass that validation silently renormalizes
SIZE_CAP = 1 << 24  # max number of matrix entries materialized densely


# -- helpers ------------------------------------------------------------------

def _labels(labels: Iterable[Hashable], what: str) -> tuple:
    labels = tuple(labels)
    if not labels:
        raise EmptyAlphabet(f"{what} alphabet is empty")
    if len(set(labels)) != len(labels):
        seen, dup = set(), None
        for lab in labels:
            if lab in seen:
                dup = lab
                break
            seen.add(lab)
        raise DuplicateLabel(f"duplicate {what} label {dup!r}")
    return labels


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def is_sparse(a) -> bool:
    return sp.issparse(a)


def _row_sums(a) -> np.ndarray:
    return np.asarray(a.sum(axis=1), dtype=float).ravel()


def _col_sums(a) -> np.ndarray:
    return np.asarray(a.sum(axis=0), dtype=float).ravel()


def _entries(a) -> np.ndarray:
    """Stored entries: all of a dense array, the explicit data of a sparse one."""
    return a.data if is_sparse(a) else np.asarray(a).ravel()


def _check_entries(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"{what} contains non-finite values")
    if values.size and values.min() < 0.0:
        raise NegativeProbability(f"{what} has a negative entry ({values.min()!r})")


def _normalize_mass(mass: float, tol: float, what: str) -> float:
    if abs(mass - 1.0) > tol:
        raise NotNormalized(f"{what} sums to {mass!r}, not 1 within {tol:g}")
    return mass


def _as_matrix(p, shape: tuple[int, int], what: str):
    if is_sparse(p):
        m = sp.csr_array(p, dtype=float)
    else:
        m = np.asarray(p, dtype=float)
        if m.ndim != 2:
            raise ValidationError(f"{what} must be a 2-D matrix")
    if m.shape != shape:
        raise LabelMismatch(f"{what} has shape {m.shape}, labels imply {shape}")
    return m


def densify(a, cap: int = SIZE_CAP) -> np.ndarray:
    """Dense copy of a (possibly sparse) matrix, refusing sizes over ``cap``."""
    if not is_sparse(a):
        return np.asarray(a, dtype=float)
    if a.shape[0] * a.shape[1] > cap:
        raise SizeCapExceeded(f"dense {a.shape} matrix exceeds cap of {cap} entries")
    return a.toarray()


# -- data types ---------------------------------------------------------------

class SupportMask:
    """Boolean membership of each x label in the support of ``P_X``."""

    __slots__ = ("labels", "mask")

    def __init__(self, labels: Sequence[Hashable], mask):
        labels = _labels(labels, "x")
        mask = np.asarray(mask, dtype=bool).copy()
        if mask.shape != (len(labels),):
            raise LabelMismatch("support mask length differs from label count")
        if not mask.any():
            raise AllMassOutOfSupport("support mask has no true entry")
        mask.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "mask", mask)

    def __setattr__(self, *_):
        raise AttributeError("SupportMask is immutable")

    @classmethod
    def from_probs(cls, labels, probs, tau: float = TAU_SUPP) -> "SupportMask":
        return cls(labels, np.asarray(probs, dtype=float) >= tau)

    @classmethod
    def full(cls, labels) -> "SupportMask":
        labels = tuple(labels)
        return cls(labels, np.ones(len(labels), dtype=bool))

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def __repr__(self):
        inside = [lab for lab, m in zip(self.labels, self.mask) if m]
        return f"SupportMask({inside!r})"


class Pmf:
    """Probability mass function over an ordered label list.

    Parameters
    ----------
    labels : sequence of hashable
    probs : array_like
        Nonnegative weights; renormalized when the total is within ``tol`` of 1.
    tol : float
    """

    __slots__ = ("labels", "probs", "_index")

    def __init__(self, labels, probs, tol: float = NORM_TOL):
        labels = _labels(labels, "pmf")
        probs = np.asarray(probs, dtype=float).ravel()
        if probs.shape != (len(labels),):
            raise LabelMismatch(f"{len(labels)} labels but {probs.size} probabilities")
        _check_entries(probs, "pmf")
        mass = _normalize_mass(float(probs.sum()), tol, "pmf")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", _frozen(probs / mass))
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    def __setattr__(self, *_):
        raise AttributeError("Pmf is immutable")

    @classmethod
    def uniform(cls, labels) -> "Pmf":
        labels = tuple(labels)
        return cls(labels, np.full(len(labels), 1.0 / max(len(labels), 1)))

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, label) -> float:
        return float(self.probs[self._index[label]])

    def index(self, label) -> int:
        return self._index[label]

    def support(self, tau: float = TAU_SUPP) -> SupportMask:
        return SupportMask.from_probs(self.labels, self.probs, tau)

    def items(self):
        return zip(self.labels, self.probs.tolist())

    def __repr__(self):
        body = ", ".join(f"{lab!r}: {p:.6g}" for lab, p in self.items())
        return f"Pmf({{{body}}})"


class JointPmf:
    """Joint distribution ``P_XY`` stored as an ``|X| x |Y|`` matrix."""

    __slots__ = ("x_labels", "y_labels", "p", "_px", "_py")

    def __init__(self, x_labels, y_labels, p, tol: float = NORM_TOL):
        x_labels = _labels(x_labels, "x")
        y_labels = _labels(y_labels, "y")
        m = _as_matrix(p, (len(x_labels), len(y_labels)), "joint")
        _check_entries(_entries(m), "joint")
        mass = _normalize_mass(float(_entries(m).sum()), tol, "joint")
        if is_sparse(m):
            m = m / mass
            m.eliminate_zeros()
        else:
            m = _frozen(m / mass)
        object.__setattr__(self, "x_labels", x_labels)
        object.__setattr__(self, "y_labels", y_labels)
        object.__setattr__(self, "p", m)
        object.__setattr__(self, "_px", _frozen(_row_sums(m)))
        object.__setattr__(self, "_py", _frozen(_col_sums(m)))

    def __setattr__(self, *_):
        raise AttributeError("JointPmf is immutable")

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.x_labels), len(self.y_labels))

    @property
    def is_sparse(self) -> bool:
        return is_sparse(self.p)

    @property
    def px(self) -> np.ndarray:
        return self._px

    @property
    def py(self) -> np.ndarray:
        return self._py

    def dense(self, cap: int = SIZE_CAP) -> np.ndarray:
        return densify(self.p, cap)

    def __repr__(self):
        return f"JointPmf({len(self.x_labels)}x{len(self.y_labels)}{', sparse' if self.is_sparse else ''})"


class Channel:
    """Row-stochastic conditional ``P_{Y|X}``."""

    __slots__ = ("x_labels", "y_labels", "w")

    def __init__(self, x_labels, y_labels, w, tol: float = NORM_TOL):
        x_labels = _labels(x_labels, "x")
        y_labels = _labels(y_labels, "y")
        m = _as_matrix(w, (len(x_labels), len(y_labels)), "channel")
        _check_entries(_entries(m), "channel")
        rows = _row_sums(m)
        bad = np.flatnonzero(np.abs(rows - 1.0) > tol)
        if bad.size:
            i = bad[0]
            raise NotNormalized(f"channel row {x_labels[i]!r} sums to {rows[i]!r}")
        if is_sparse(m):
            m = sp.csr_array(sp.diags_array(1.0 / rows) @ m)
            m.eliminate_zeros()
        else:
            m = _frozen(m / rows[:, None])
        object.__setattr__(self, "x_labels", x_labels)
        object.__setattr__(self, "y_labels", y_labels)
        object.__setattr__(self, "w", m)

    def __setattr__(self, *_):
        raise AttributeError("Channel is immutable")

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.x_labels), len(self.y_labels))

    @property
    def is_sparse(self) -> bool:
        return is_sparse(self.w)

    def dense(self, cap: int = SIZE_CAP) -> np.ndarray:
        return densify(self.w, cap)

    def row(self, x) -> np.ndarray:
        i = self.x_labels.index(x)
        return densify(self.w[[i], :]).ravel() if self.is_sparse else self.w[i]

    def __repr__(self):
        return f"Channel({len(self.x_labels)}x{len(self.y_labels)}{', sparse' if self.is_sparse else ''})"


class CondJointPmf:
    """Family ``P_{XY|Z=z}`` weighted by ``P_Z``.

    Conditionals attached to zero-weight ``z`` are kept for bookkeeping but
    skipped by :meth:`support_items`.
    """

    __slots__ = ("z_labels", "pz", "joints")

    def __init__(self, pz: Pmf, joints: Sequence[JointPmf]):
        joints = tuple(joints)
        if len(joints) != len(pz):
            raise LabelMismatch(f"{len(pz)} z labels but {len(joints)} conditionals")
        first = joints[0]
        for jz in joints[1:]:
            if jz.x_labels != first.x_labels or jz.y_labels != first.y_labels:
                raise LabelMismatch("conditional joints use different alphabets")
        object.__setattr__(self, "z_labels", pz.labels)
        object.__setattr__(self, "pz", pz)
        object.__setattr__(self, "joints", joints)

    def __setattr__(self, *_):
        raise AttributeError("CondJointPmf is immutable")

    @property
    def x_labels(self):
        return self.joints[0].x_labels

    @property
    def y_labels(self):
        return self.joints[0].y_labels

    def support_items(self, tau: float = TAU_SUPP):
        for z, w, jz in zip(self.z_labels, self.pz.probs, self.joints):
            if w >= tau:
                yield z, float(w), jz

    @classmethod
    def from_array(cls, p_xyz, x_labels=None, y_labels=None, z_labels=None,
                   tol: float = NORM_TOL) -> "CondJointPmf":
        """Build from a 3-D array indexed ``[x, y, z]``."""
        p = np.asarray(p_xyz, dtype=float)
        if p.ndim != 3:
            raise ValidationError("expected a 3-D array indexed [x, y, z]")
        nx, ny, nz = p.shape
        x_labels = tuple(range(nx)) if x_labels is None else tuple(x_labels)
        y_labels = tuple(range(ny)) if y_labels is None else tuple(y_labels)
        z_labels = tuple(range(nz)) if z_labels is None else tuple(z_labels)
        _check_entries(p.ravel(), "joint")
        pz = Pmf(z_labels, p.sum(axis=(0, 1)), tol)
        joints = []
        for k in range(nz):
            mass = p[:, :, k].sum()
            block = p[:, :, k] / mass if mass > 0 else np.full((nx, ny), 1.0 / (nx * ny))
            joints.append(JointPmf(x_labels, y_labels, block))
        return cls(pz, joints)

    def to_array(self) -> np.ndarray:
        return np.stack([w * jz.dense() for w, jz in zip(self.pz.probs, self.joints)], axis=2)


# -- operations ---------------------------------------------------------------

def validate_pmf(raw, tol: float = NORM_TOL) -> Pmf:
    """Validate ``(label, prob)`` pairs (or a mapping) into a :class:`Pmf`."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    pairs = list(raw.items()) if isinstance(raw, dict) else [tuple(r) for r in raw]
    if not pairs:
        raise EmptyAlphabet("pmf alphabet is empty")
    labels = [lab for lab, _ in pairs]
    probs = [float(v) for _, v in pairs]
    return Pmf(labels, probs, tol)


def marginals(j: JointPmf) -> tuple[Pmf, Pmf]:
    return Pmf(j.x_labels, j.px), Pmf(j.y_labels, j.py)


def support_of(j: JointPmf, tau: float = TAU_SUPP) -> SupportMask:
    return SupportMask.from_probs(j.x_labels, j.px, tau)


def factor(j: JointPmf, tol: float = TAU_SUPP) -> tuple[Pmf, Channel, SupportMask]:
    """Split ``P_XY`` into ``P_X``, ``P_{Y|X}`` and the support of ``X``.

    Rows outside the support (``P_X(x) < tol``) are filled with the uniform
    distribution.
    """
    mask = support_of(j, tol)
    px = j.px
    ny = len(j.y_labels)
    if j.is_sparse:
        scale = np.where(mask.mask, 1.0 / np.where(mask.mask, px, 1.0), 0.0)
        w = sp.csr_array(sp.diags_array(scale) @ j.p)
        out = np.flatnonzero(~mask.mask)
        if out.size:
            fill = sp.csr_array(
                (np.full(out.size * ny, 1.0 / ny),
                 (np.repeat(out, ny), np.tile(np.arange(ny), out.size))),
                shape=j.shape)
            w = sp.csr_array(w + fill)
    else:
        w = np.empty(j.shape)
        w[mask.mask] = j.p[mask.mask] / px[mask.mask, None]
        w[~mask.mask] = 1.0 / ny
    return Pmf(j.x_labels, px), Channel(j.x_labels, j.y_labels, w), mask


def compose(px: Pmf, ch: Channel) -> JointPmf:
    """Joint ``P_X(x) W(y|x)``."""
    if tuple(px.labels) != tuple(ch.x_labels):
        raise LabelMismatch("input pmf labels differ from channel input labels")
    if ch.is_sparse:
        p = sp.csr_array(sp.diags_array(px.probs) @ ch.w)
    else:
        p = px.probs[:, None] * ch.w
    return JointPmf(ch.x_labels, ch.y_labels, p)


def channel_product(*chs: Channel) -> Channel:
    """Parallel use of independent channels, inputs and outputs as tuples."""
    w = chs[0].dense()
    for ch in chs[1:]:
        w = np.kron(w, ch.dense())
    xs = list(itertools.product(*(c.x_labels for c in chs)))
    ys = list(itertools.product(*(c.y_labels for c in chs)))
    return Channel(xs, ys, w)


def joint_product(*js: JointPmf, cap: int = SIZE_CAP) -> JointPmf:
    """Joint of independent pairs ``(X_i, Y_i)``, alphabets as tuples."""
    size = 1
    for j in js:
        size *= j.shape[0] * j.shape[1]
    if size > cap:
        raise SizeCapExceeded(f"product joint needs {size} entries, cap is {cap}")
    p = js[0].dense()
    for j in js[1:]:
        p = np.kron(p, j.dense())
    xs = list(itertools.product(*(j.x_labels for j in js)))
    ys = list(itertools.product(*(j.y_labels for j in js)))
    return JointPmf(xs, ys, p)


def product_iid(j: JointPmf, n: int, cap: int = SIZE_CAP) -> JointPmf:
    """Joint of ``n`` i.i.d. copies of ``(X, Y)``."""
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    if n == 1:
        return j
    return joint_product(*([j] * int(n)), cap=cap)


def transpose(j: JointPmf) -> JointPmf:
    """The same joint viewed as ``P_YX``."""
    return JointPmf(j.y_labels, j.x_labels, j.p.T)


def entropy(p) -> float:
    """Shannon entropy in nats of a :class:`Pmf` or probability vector."""
    v = p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=float).ravel()
    return float(-xlogy(v, v).sum())


def kl_divergence(p: Pmf, q: Pmf) -> float:
    """``D(p || q)`` in nats; ``inf`` unless ``supp(p)`` lies inside ``supp(q)``."""
    if tuple(p.labels) != tuple(q.labels):
        raise LabelMismatch("pmfs use different label lists")
    return kl_array(p.probs, q.probs)


def kl_array(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pos = p > 0
    if np.any(q[pos] <= 0):
        return math.inf
    return float(max(np.sum(p[pos] * np.log(p[pos] / q[pos])), 0.0))


def mutual_information(j: JointPmf) -> float:
    """``I(X;Y)`` in nats."""
    if j.is_sparse:
        c = j.p.tocoo()
        v, r, k = c.data, c.row, c.col
    else:
        r, k = np.nonzero(j.p > 0)
        v = j.p[r, k]
    mi = float(np.sum(v * (np.log(v) - np.log(j.px[r]) - np.log(j.py[k]))))
    return max(mi, 0.0)


def conditional_mutual_information(cj: CondJointPmf) -> float:
    """``I(X;Y|Z)`` in nats."""
    return float(sum(w * mutual_information(jz) for _, w, jz in cj.support_items(0.0)))


def is_independent(j: JointPmf, tol: float = 1e-9) -> bool:
    p = j.dense()
    return bool(np.max(np.abs(p - np.outer(j.px, j.py))) <= tol)


def cascade(first: Channel, second: Channel) -> Channel:
    """Channel ``X -> Z`` of the chain ``X -> Y -> Z``."""
    if tuple(first.y_labels) != tuple(second.x_labels):
        raise LabelMismatch("first channel outputs differ from second channel inputs")
    return Channel(first.x_labels, second.y_labels, first.dense() @ second.dense())


def joint_outputs(ch_y: Channel, ch_z: Channel) -> Channel:
    """Channel ``X -> (Y, Z)`` with ``Y`` and ``Z`` independent given ``X``."""
    if tuple(ch_y.x_labels) != tuple(ch_z.x_labels):
        raise LabelMismatch("channels have different inputs")
    wy, wz = ch_y.dense(), ch_z.dense()
    w = (wy[:, :, None] * wz[:, None, :]).reshape(wy.shape[0], -1)
    ys = list(itertools.product(ch_y.y_labels, ch_z.y_labels))
    return Channel(ch_y.x_labels, ys, w)
