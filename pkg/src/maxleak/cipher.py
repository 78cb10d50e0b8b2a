"""Shannon cipher system with a rate-limited key.

A memoryless source ``X^n ~ P^n`` is described to a legitimate receiver
within per-letter distortion ``D`` while an eavesdropper sees the public
message.  The scheme built here follows the type-covering recipe:

* types whose divergence from ``P`` is at most ``alpha + delta`` bits are
  *feasible*; each gets a codebook covering its type class at distortion
  ``D`` (built greedily);
* each codebook is cut into bins of ``2**ceil(n r)`` codewords;
* a sequence is sent as ``(type, bin, j XOR key)`` where ``j`` is its
  position in the bin and only the first ``s = ceil(log2 |bin|)`` key bits
  are used;
* sequences of infeasible types all map to one dummy message ``m0``.

Sequences are integers: base-``|X|`` (source) or base-``|Y|``
(reproduction) digits, first letter most significant.  Divergences, key
rate ``r`` and ``alpha`` are in bits; returned leakages carry their unit.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar
from scipy.special import gammaln

from .dist import Pmf, kl_array
from .errors import CoverageFailure, DomainError, InfeasibleRate, InvalidParameter, SizeCapExceeded
from .mechanism import DistortionSpec
from .ratedist import distortion_range, rate_distortion
from .units import LN2, LeakageValue, nats

SEQ_CAP = 1 << 22   # max number of source sequences enumerated
PAIR_CAP = 1 << 25  # max (sequence, codeword) pairs in the generic cover matrix


# -- method of types ----------------------------------------------------------

def compositions(n: int, k: int):
    """All count vectors of length ``k`` summing to ``n`` (lexicographic)."""
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in compositions(n - first, k - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class TypeClass:
    counts: tuple
    p: tuple  # source probabilities the class is measured against

    @property
    def n(self) -> int:
        return int(sum(self.counts))

    @property
    def q(self) -> np.ndarray:
        return np.asarray(self.counts, float) / self.n

    @property
    def size(self) -> int:
        out = math.factorial(self.n)
        for c in self.counts:
            out //= math.factorial(c)
        return out

    @property
    def log_prob(self) -> float:
        """Natural log of ``P^n(T_Q)`` (``-inf`` if impossible)."""
        p = np.asarray(self.p, float)
        c = np.asarray(self.counts)
        if np.any((p == 0) & (c > 0)):
            return -math.inf
        lp = gammaln(self.n + 1) - gammaln(c + 1).sum()
        return float(lp + np.sum(c[c > 0] * np.log(p[c > 0])))

    @property
    def prob(self) -> float:
        return math.exp(self.log_prob)

    @property
    def kl_bits(self) -> float:
        return kl_array(self.q, self.p) / LN2


def type_classes(n: int, p: Pmf) -> list[TypeClass]:
    return [TypeClass(c, tuple(p.probs.tolist())) for c in compositions(n, len(p))]


# -- single-letter limit ------------------------------------------------------

def _binary_ball(p1: float, alpha: float) -> tuple[float, float]:
    """Interval of ``q`` with ``D(Ber(q) || Ber(p1)) <= alpha`` bits."""
    if math.isinf(alpha):
        return 0.0, 1.0

    def kl(q):
        return kl_array([1 - q, q], [1 - p1, p1]) / LN2 - alpha

    lo = 0.0 if kl(0.0) <= 0 else brentq(kl, 0.0, p1, xtol=1e-15) if p1 > 0 else 0.0
    hi = 1.0 if kl(1.0) <= 0 else brentq(kl, p1, 1.0, xtol=1e-15) if p1 < 1 else 1.0
    return lo, hi


def _simplex_grid(k: int, m: int) -> np.ndarray:
    return np.array(list(compositions(m, k)), float) / m


@dataclass(frozen=True)
class LimitResult:
    value: LeakageValue
    maximizer: Pmf
    max_rate: float  # nats, R at the maximizer


def single_letter_limit_detail(p: Pmf, spec: DistortionSpec, D: float, r: float,
                               alpha: float, tol: float = 1e-9,
                               channel_rate: float | None = None) -> LimitResult:
    d = spec.d
    if D < spec.d_min - 1e-12:
        raise DomainError(f"D={D} is below D_min={spec.d_min}")
    if alpha < 0 or r < 0:
        raise InvalidParameter("alpha and r must be nonnegative")

    def R(qv):
        qv = np.clip(qv, 0.0, None)
        qv = qv / qv.sum()
        return rate_distortion(qv, d, D, tol)

    k = len(p)
    if k == 2:
        lo, hi = _binary_ball(float(p.probs[1]), alpha)
        grid = np.unique(np.concatenate([np.linspace(lo, hi, 41), [p.probs[1]]]))
        vals = [R(np.array([1 - g, g])) for g in grid]
        i = int(np.argmax(vals))
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        best_q, best = grid[i], vals[i]
        if b > a:
            res = minimize_scalar(lambda g: -R(np.array([1 - g, g])), bounds=(a, b),
                                  method="bounded", options={"xatol": 1e-10})
            if -res.fun > best:
                best_q, best = float(res.x), -float(res.fun)
        qstar = np.array([1 - best_q, best_q])
    elif k <= 4:
        def inside(qv):
            return math.isinf(alpha) or kl_array(qv, p.probs) / LN2 <= alpha + 1e-12
        pts = [g for g in _simplex_grid(k, 12 if k == 3 else 8) if inside(g)]
        pts.append(p.probs.copy())
        vals = [R(g) for g in pts]
        order = np.argsort(vals)[::-1][:3]
        qstar, best = pts[order[0]], vals[order[0]]

        def neg(z):
            qv = np.exp(z - z.max())
            qv /= qv.sum()
            if not inside(qv):
                return 1e3
            return -R(qv)

        for o in order:
            start = np.log(np.maximum(pts[o], 1e-12))
            res = minimize(neg, start, method="Nelder-Mead",
                           options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 400})
            if -res.fun > best:
                z = res.x
                qstar = np.exp(z - z.max()) / np.exp(z - z.max()).sum()
                best = -float(res.fun)
    else:
        raise InvalidParameter("single-letter search supports alphabets of size <= 4")

    if channel_rate is not None and channel_rate * LN2 < best:
        warnings.warn(InfeasibleRate(
            f"channel rate {channel_rate} bits is below the worst admissible "
            f"rate-distortion value {best / LN2:.6g} bits"), stacklevel=2)
    value = max(best - r * LN2, 0.0)
    return LimitResult(nats(value), Pmf(p.labels, qstar), best)


def single_letter_limit(p: Pmf, spec: DistortionSpec, D: float, r: float, alpha: float,
                        tol: float = 1e-9, channel_rate: float | None = None) -> LeakageValue:
    """``max_{Q: D(Q||P) <= alpha} [R(Q, D) - r]^+``, in nats.

    ``r`` and ``alpha`` are in bits; ``alpha = inf`` lifts the constraint.
    """
    return single_letter_limit_detail(p, spec, D, r, alpha, tol, channel_rate).value


# -- sequence helpers ---------------------------------------------------------

def _digits(seqs: np.ndarray, n: int, base: int) -> np.ndarray:
    """``(len(seqs), n)`` digit matrix, first letter most significant."""
    powers = base ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (seqs[:, None] // powers[None, :]) % base


def _popcount_table(n: int) -> np.ndarray:
    t = np.zeros(1 << n, dtype=np.uint8)
    for b in range(n):
        t[1 << b:1 << (b + 1)] = t[:1 << b] + 1
    return t


def _is_binary_hamming(d: np.ndarray) -> bool:
    return d.shape == (2, 2) and np.array_equal(d, 1.0 - np.eye(2))


def _combos(m: int, k: int) -> np.ndarray:
    rows = list(itertools.combinations(range(m), k))
    return np.array(rows, dtype=np.int64).reshape(len(rows), k)


class _HammingBall:
    """Hamming-ball bookkeeping for binary sequences of length ``n``.

    ``offsets(wc, w)`` lists the ways to turn a weight-``wc`` word into a
    weight-``w`` word within the radius: flip ``i`` of its ones and ``j``
    of its zeros.
    """

    def __init__(self, n: int, radius: int):
        self.n, self.radius = n, radius
        self._cache: dict = {}

    def offsets(self, wc: int, w: int):
        key = (wc, w)
        if key not in self._cache:
            out = []
            for i in range(wc + 1):
                j = w - wc + i
                if 0 <= j <= self.n - wc and i + j <= self.radius:
                    out.append((_combos(wc, i), _combos(self.n - wc, j)))
            self._cache[key] = out
        return self._cache[key]

    def size(self, wc: int, w: int) -> int:
        return sum(a.shape[0] * b.shape[0] for a, b in self.offsets(wc, w))

    def members(self, words: np.ndarray, wc: int, w: int) -> np.ndarray:
        """Weight-``w`` words within the radius of each weight-``wc`` word.

        Returns a ``(len(words), size)`` array.
        """
        n = self.n
        words = np.asarray(words, dtype=np.int64)
        bits = (words[:, None] >> np.arange(n)) & 1
        order = np.argsort(-bits, axis=1, kind="stable")
        ones = np.left_shift(1, order[:, :wc])
        zeros = np.left_shift(1, order[:, wc:])
        parts = []
        for ci, cj in self.offsets(wc, w):
            a = ones[:, ci].sum(axis=-1)
            b = zeros[:, cj].sum(axis=-1)
            flips = (a[:, :, None] | b[:, None, :]).reshape(len(words), -1)
            parts.append(words[:, None] ^ flips)
        if not parts:
            return np.zeros((len(words), 0), dtype=np.int64)
        return np.concatenate(parts, axis=1)


def _greedy_hamming(n, w, radius, budget, sample, rng, ball: _HammingBall, n_weights=3):
    """Greedy cover of the weight-``w`` class; ``None`` once ``budget`` is exceeded.

    Each step takes the first uncovered word ``e`` and scores up to
    ``sample`` random codeword candidates within the radius of ``e``, drawn
    from the ``n_weights`` codeword weights with the largest balls.
    """
    pc = _popcount_table(n)
    covered = pc != w  # everything outside the class counts as covered
    left = int((~covered).sum())
    weights = [wc for wc in range(max(0, w - radius), min(n, w + radius) + 1)]
    weights.sort(key=lambda wc: -ball.size(wc, w))
    weights = weights[:n_weights]
    book = []
    start = 0
    while left:
        e = start + int(np.argmin(covered[start:]))
        start = e
        best_gain, best_c = 0, None
        for wc in weights:
            if ball.size(wc, w) <= best_gain:
                break
            cand = ball.members(np.array([e]), w, wc)[0]
            if cand.size > sample:
                cand = np.sort(rng.choice(cand, size=sample, replace=False))
            gains = (~covered[ball.members(cand, wc, w)]).sum(axis=1)
            i = int(np.argmax(gains))
            if gains[i] > best_gain:
                best_gain, best_c = int(gains[i]), (int(cand[i]), wc)
        c, wc = best_c
        hit = ball.members(np.array([c]), wc, w)[0]
        left -= int((~covered[hit]).sum())
        covered[hit] = True
        book.append(c)
        if len(book) > budget and left:
            return None
    return np.array(book, dtype=np.int64)


def _seq_distortion(xs: np.ndarray, ys: np.ndarray, n: int, d: np.ndarray) -> np.ndarray:
    """Per-letter distortion between every ``x`` in ``xs`` and ``y`` in ``ys``."""
    if _is_binary_hamming(d):
        pc = _popcount_table(n)
        return pc[xs[:, None] ^ ys[None, :]] / n
    nx, ny = d.shape
    xd, yd = _digits(xs, n, nx), _digits(ys, n, ny)
    tot = np.zeros((xs.size, ys.size))
    for i in range(n):
        tot += d[xd[:, i][:, None], yd[:, i][None, :]]
    return tot / n


def _greedy_generic(elems, n, d, D, budget):
    ny = d.shape[1]
    cands = np.arange(ny ** n, dtype=np.int64)
    if elems.size * cands.size > PAIR_CAP:
        raise SizeCapExceeded("generic covering matrix too large; use binary Hamming or smaller n")
    cover = _seq_distortion(elems, cands, n, d) <= D + 1e-12
    if not cover.any(axis=1).all():
        raise CoverageFailure("some sequence has no reproduction within the distortion level")
    left = np.ones(elems.size, dtype=bool)
    book = []
    while left.any():
        gains = cover[left].sum(axis=0)
        c = int(np.argmax(gains))
        book.append(c)
        left &= ~cover[:, c]
        if len(book) > budget and left.any():
            return None
    return np.array(book, dtype=np.int64)


def _assign(elems, book, n, d, D) -> np.ndarray:
    """Index of the first codeword within distortion ``D`` of each element."""
    out = np.full(elems.size, -1, dtype=np.int64)
    step = max(1, (1 << 22) // max(book.size, 1))
    for s in range(0, elems.size, step):
        ok = _seq_distortion(elems[s:s + step], book, n, d) <= D + 1e-12
        first = np.argmax(ok, axis=1)
        out[s:s + step] = np.where(ok.any(axis=1), first, -1)
    if np.any(out < 0):
        raise CoverageFailure("codebook leaves a feasible sequence uncovered")
    return out


# -- the scheme ---------------------------------------------------------------

M0 = "m0"


@dataclass
class TypeCode:
    """Codebook data for one type class."""

    tc: TypeClass
    feasible: bool
    codebook: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def n_bins(self, bin_size: int) -> int:
        return -(-len(self.codebook) // bin_size)


@dataclass
class CipherScheme:
    n: int
    p: Pmf
    spec: DistortionSpec
    D: float
    r: float
    alpha: float
    delta: float
    codes: list
    seed: int | None = None
    # per source sequence: index into ``codes`` and position in its codebook
    type_of: np.ndarray = field(default=None, repr=False)
    index_of: np.ndarray = field(default=None, repr=False)

    @property
    def key_bits(self) -> int:
        """Key length: ``n r`` rounded up to whole bits."""
        return math.ceil(self.n * self.r - 1e-12)

    @property
    def bin_size(self) -> int:
        return 1 << self.key_bits

    @property
    def n_sequences(self) -> int:
        return len(self.p) ** self.n

    def _bin(self, t: int, idx: int):
        code = self.codes[t]
        i, j = divmod(int(idx), self.bin_size)
        size = min(self.bin_size, len(code.codebook) - i * self.bin_size)
        s = max(size - 1, 0).bit_length()  # ceil(log2 size)
        return i, j, s

    def _key_prefix(self, key: int, s: int) -> int:
        return (int(key) >> (self.key_bits - s)) if s else 0

    def encode(self, x: int, key: int):
        """Public message for source sequence ``x`` under ``key``."""
        t = int(self.type_of[x])
        if not self.codes[t].feasible:
            return M0
        i, j, s = self._bin(t, self.index_of[x])
        return (t, i, j ^ self._key_prefix(key, s))

    def decode(self, message, key: int) -> int | None:
        """Reproduction sequence (an integer) or ``None`` for ``m0``."""
        if message == M0:
            return None
        t, i, jm = message
        code = self.codes[t]
        size = min(self.bin_size, len(code.codebook) - i * self.bin_size)
        s = max(size - 1, 0).bit_length()
        j = jm ^ self._key_prefix(key, s)
        if j >= size:
            raise ValueError("message does not decode under this key")
        return int(code.codebook[i * self.bin_size + j])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": {"labels": list(self.p.labels), "probs": self.p.probs.tolist()},
            "distortion": self.spec.d.tolist(),
            "D": self.D,
            "r_bits": self.r,
            "alpha_bits": self.alpha,
            "delta_bits": self.delta,
            "seed": self.seed,
            "key_bits": self.key_bits,
            "types": [{"counts": list(c.tc.counts), "feasible": c.feasible,
                       "codebook": c.codebook.tolist()} for c in self.codes],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "CipherScheme":
        p = Pmf(obj["p"]["labels"], obj["p"]["probs"])
        spec = DistortionSpec(np.asarray(obj["distortion"], float), obj["D"])
        codes = [TypeCode(TypeClass(tuple(t["counts"]), tuple(p.probs.tolist())), t["feasible"],
                          np.asarray(t["codebook"], dtype=np.int64)) for t in obj["types"]]
        s = cls(obj["n"], p, spec, obj["D"], obj["r_bits"], obj["alpha_bits"],
                obj["delta_bits"], codes, obj.get("seed"))
        _index_sequences(s)
        return s


def _type_members(n: int, k: int, counts_list) -> tuple[np.ndarray, dict]:
    """Type index of every sequence and the lookup from counts to index."""
    seqs = np.arange(k ** n, dtype=np.int64)
    if k == 2:
        pc = _popcount_table(n)
        key = pc[seqs].astype(np.int64)
        lookup = {c[1]: t for t, c in enumerate(counts_list)}
        return np.array([lookup[v] for v in range(n + 1)])[key], lookup
    dig = _digits(seqs, n, k)
    cnt = np.stack([(dig == a).sum(axis=1) for a in range(k)], axis=1)
    lookup = {tuple(c): t for t, c in enumerate(counts_list)}
    return np.array([lookup[tuple(c)] for c in cnt]), lookup


def _index_sequences(s: CipherScheme) -> None:
    k = len(s.p)
    counts_list = [c.tc.counts for c in s.codes]
    type_of, _ = _type_members(s.n, k, counts_list)
    index_of = np.full(type_of.size, -1, dtype=np.int64)
    seqs = np.arange(type_of.size, dtype=np.int64)
    for t, code in enumerate(s.codes):
        if code.feasible:
            elems = seqs[type_of == t]
            index_of[elems] = _assign(elems, code.codebook, s.n, s.spec.d, s.D)
    s.type_of, s.index_of = type_of, index_of


def build_scheme(n: int, p: Pmf, spec: DistortionSpec, D: float, r: float, alpha: float,
                 delta: float = 0.05, seed=None, eps: float = 0.1,
                 retries: int = 4, sample: int = 32) -> CipherScheme:
    """Construct the type-covering scheme for blocklength ``n``.

    Parameters
    ----------
    r, alpha, delta, eps : float
        Key rate, divergence radius, radius slack and codebook-budget slack,
        all in bits.  A type's codebook may hold ``2**(n (R(Q,D) + eps))``
        words; the budget doubles on each of ``retries`` failed attempts.
    sample : int
        Candidates scored per greedy step (binary Hamming path), doubled
        with the budget.
    """
    k = len(p)
    if n < 1:
        raise InvalidParameter("n must be positive")
    if k ** n > SEQ_CAP:
        raise SizeCapExceeded(f"{k}^{n} source sequences exceed the cap of {SEQ_CAP}")
    if tuple(spec.x_labels) != tuple(p.labels) and spec.d.shape[0] != k:
        raise InvalidParameter("distortion rows do not match the source alphabet")
    d = spec.d
    hamming = _is_binary_hamming(d)
    radius = int(math.floor(n * D + 1e-9))
    ball = _HammingBall(n, radius) if hamming else None
    codes = []
    types = type_classes(n, p)
    type_of, _ = _type_members(n, k, [tc.counts for tc in types])
    seqs = np.arange(k ** n, dtype=np.int64)
    for t, tc in enumerate(types):
        feasible = tc.kl_bits <= alpha + delta + 1e-12
        if not feasible:
            codes.append(TypeCode(tc, False))
            continue
        rate_bits = rate_distortion(tc.q, d, D) / LN2 if D >= distortion_range(
            tc.q[tc.q > 0], d[tc.q > 0])[0] - 1e-12 else math.inf
        if math.isinf(rate_bits):
            raise CoverageFailure(f"type {tc.counts} cannot be reproduced within D={D}")
        budget = max(1, math.ceil(2.0 ** (n * (rate_bits + eps))))
        rng = np.random.default_rng([0 if seed is None else int(seed), t])
        book = None
        for attempt in range(retries + 1):
            cap = budget << attempt
            if hamming:
                book = _greedy_hamming(n, tc.counts[1], radius, cap, sample << attempt, rng, ball)
            else:
                book = _greedy_generic(seqs[type_of == t], n, d, D, cap)
            if book is not None:
                break
        if book is None:
            raise CoverageFailure(f"type {tc.counts}: no cover within {budget << retries} words")
        codes.append(TypeCode(tc, True, book))
    s = CipherScheme(n, p, spec, D, r, alpha, delta, codes, seed)
    _index_sequences(s)
    return s


# -- evaluation ---------------------------------------------------------------

def _uses_m0(s: CipherScheme) -> bool:
    return any(not c.feasible and c.tc.log_prob > -math.inf for c in s.codes)


def exact_scheme_leakage(s: CipherScheme) -> LeakageValue:
    """Maximal leakage of the public message about ``X^n``.

    Every bin contributes exactly 1 to ``sum_m max_x P(m|x)``: it has
    ``2**s`` messages, each reached by every member with probability
    ``2**-s``.  The dummy message adds 1 when some possible sequence is
    infeasible.
    """
    total = sum(c.n_bins(s.bin_size) for c in s.codes if c.feasible) + int(_uses_m0(s))
    return nats(math.log(total))


def brute_force_leakage(s: CipherScheme) -> LeakageValue:
    """``log sum_m max_x P(m|x)`` by running the encoder on every (sequence, key)."""
    if s.key_bits > 16 or s.n_sequences > 1 << 16:
        raise SizeCapExceeded("brute force limited to 2^16 sequences and 16 key bits")
    nkeys = 1 << s.key_bits
    best: dict = {}
    for x in range(s.n_sequences):
        if s.codes[int(s.type_of[x])].tc.log_prob == -math.inf:
            continue
        hist: dict = {}
        for key in range(nkeys):
            m = s.encode(x, key)
            hist[m] = hist.get(m, 0) + 1
        for m, c in hist.items():
            if c > best.get(m, 0):
                best[m] = c
    return nats(math.log(sum(best.values()) / nkeys))


def excess_distortion_prob(s: CipherScheme) -> float:
    """``P(d(X^n, Y^n) > D)``: the total probability of infeasible types."""
    return float(sum(c.tc.prob for c in s.codes if not c.feasible))


def reconstruction_check(s: CipherScheme, keys=None) -> float:
    """Largest per-letter distortion of ``decode(encode(x, k), k)`` over feasible ``x``.

    Runs the scalar encoder and decoder end to end, so it is meant for
    small ``n``.  Raises ``AssertionError`` if a decode differs from the
    codeword assigned to ``x``.
    """
    keys = list(range(1 << s.key_bits) if keys is None else keys)
    if s.n_sequences * len(keys) > 1 << 20:
        raise SizeCapExceeded("reconstruction check limited to 2^20 (sequence, key) pairs")
    xs, ys = [], []
    for x in range(s.n_sequences):
        t = int(s.type_of[x])
        if not s.codes[t].feasible:
            continue
        target = int(s.codes[t].codebook[s.index_of[x]])
        for key in keys:
            y = s.decode(s.encode(x, key), key)
            if y != target:
                raise AssertionError(f"sequence {x} key {key}: decoded {y}, expected {target}")
        xs.append(x)
        ys.append(target)
    if not xs:
        return 0.0
    xs, ys = np.array(xs), np.array(ys)
    per = _seq_distortion(xs, np.unique(ys), s.n, s.spec.d)
    col = np.searchsorted(np.unique(ys), ys)
    return float(per[np.arange(xs.size), col].max())


def convergence_slack_bits(n: int, card_x: int = 2) -> float:
    """Polynomial slack ``(|X| log2(n+1) + 2) / n`` bits between L/n and the limit."""
    return (card_x * math.log2(n + 1) + 2.0) / n
