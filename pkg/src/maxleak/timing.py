"""Leakage rates and simulation for packet-timing mitigations.

Packets arrive as a Poisson process of rate ``lam``.  Three release rules
are covered:

``queue``
    an exponential server of rate ``mu``; leakage ``mu`` nats per unit
    time, mean wait ``1/(mu - lam)``.
``dump``
    accumulate for ``tau`` and release at most ``m`` packets at each
    boundary; leakage ``log(m+1)/tau``, mean wait ``tau/2``.
``dummy``
    as ``dump`` but always release at least ``m_b`` packets, padding with
    dummies; leakage ``log(m - m_b + 1)/tau``.

Leakage rates are closed forms.  Simulation checks waiting times and
overflow only.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import poisson

from .errors import InvalidParameter, UnstableQueue

VARIANTS = ("queue", "dump", "dummy")


@dataclass(frozen=True)
class TimingScheme:
    variant: str
    lam: float
    mu: float | None = None
    tau: float | None = None
    m: float | None = None
    m_b: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidParameter(f"unknown variant {self.variant!r}")
        if not self.lam > 0:
            raise InvalidParameter("arrival rate must be positive")
        if self.variant == "queue":
            if self.mu is None:
                raise InvalidParameter("queue needs mu")
            if self.mu <= self.lam:
                raise UnstableQueue(f"mu={self.mu} must exceed lambda={self.lam}")
        else:
            if self.tau is None or not self.tau > 0:
                raise InvalidParameter("tau must be positive")
            if self.m is None or self.m < 0:
                raise InvalidParameter("m must be nonnegative")
            if not 0 <= self.m_b <= self.m:
                raise InvalidParameter("need 0 <= m_b <= m")

    def report(self) -> "SchemeReport":
        if self.variant == "queue":
            return queue_leakage_rate(self.lam, self.mu)
        if self.variant == "dump":
            return accumulate_dump_report(self.lam, self.tau, self.m)
        return dummy_report(self.lam, self.tau, self.m, self.m_b)


@dataclass(frozen=True)
class SchemeReport:
    """Analytic figures for one scheme (rates in nats per unit time)."""

    variant: str
    leakage_rate: float
    mean_wait: float
    overflow_bound: float = 0.0
    overflow_exact: float = 0.0
    overhead: float = 0.0
    nu: float | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SimulationReport:
    """Empirical figures from one seeded run."""

    variant: str
    mean_wait: float
    wait_se: float
    drop_rate: float
    n_packets: int
    n_intervals: int
    horizon: float
    seed: int | None

    def to_dict(self) -> dict:
        return asdict(self)


def queue_leakage_rate(lam: float, mu: float) -> SchemeReport:
    if not lam > 0:
        raise InvalidParameter("arrival rate must be positive")
    if mu <= lam:
        raise UnstableQueue(f"mu={mu} must exceed lambda={lam}")
    return SchemeReport("queue", float(mu), 1.0 / (mu - lam))


def chernoff_overflow(lam: float, tau: float, m: float) -> tuple[float, float]:
    """``(bound, nu)`` for ``P(N > m)``, ``N ~ Poisson(lam tau)``.

    With ``nu = (m+1)/(lam tau) - 1`` the bound is
    ``exp(lam tau (nu - (1+nu) log(1+nu)))``; it is trivial (1) when
    ``nu <= 0``.
    """
    a = lam * tau
    nu = (m + 1) / a - 1.0
    if nu <= 0:
        return 1.0, nu
    return math.exp(a * (nu - (1 + nu) * math.log1p(nu))), nu


def accumulate_dump_report(lam: float, tau: float, m: float) -> SchemeReport:
    """Closed forms for accumulate-and-dump.  ``m`` may be non-integer."""
    if not lam > 0 or not tau > 0 or m < 0:
        raise InvalidParameter("need lam > 0, tau > 0, m >= 0")
    bound, nu = chernoff_overflow(lam, tau, m)
    exact = float(poisson.sf(math.floor(m), lam * tau))
    return SchemeReport("dump", math.log(m + 1) / tau, tau / 2.0, bound, exact, 0.0, nu)


def dummy_overhead(lam: float, tau: float, m_b: int, tail: float = 1e-15) -> float:
    """``E[max(m_b - N, 0)]``: mean dummy packets per interval."""
    a = lam * tau
    total = 0.0
    for k in range(int(m_b)):
        pk = poisson.pmf(k, a)
        total += (m_b - k) * pk
        if k > a and pk < tail:
            break
    return float(total)


def dummy_report(lam: float, tau: float, m: int, m_b: int) -> SchemeReport:
    if not 0 <= m_b <= m:
        raise InvalidParameter("need 0 <= m_b <= m")
    base = accumulate_dump_report(lam, tau, m)
    return SchemeReport("dummy", math.log(m - m_b + 1) / tau, base.mean_wait,
                        base.overflow_bound, base.overflow_exact,
                        dummy_overhead(lam, tau, m_b), base.nu,
                        "leakage formula is exact for batch counts bounded by m; Poisson "
                        "batches exceed m with probability overflow_exact")


# -- simulation ---------------------------------------------------------------

def _batch_se(x: np.ndarray, batches: int = 50) -> float:
    """Standard error of the mean of a correlated series by batch means."""
    if x.size < 2 * batches:
        return float(x.std(ddof=1) / math.sqrt(max(x.size, 1))) if x.size > 1 else math.inf
    k = x.size // batches
    means = x[:k * batches].reshape(batches, k).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))


def _simulate_queue(lam, mu, horizon, rng):
    n = rng.poisson(lam * horizon)
    arrivals = np.sort(rng.uniform(0.0, horizon, n))
    service = rng.exponential(1.0 / mu, n)
    gaps = np.diff(arrivals, prepend=0.0)
    # Lindley recursion for the time spent in queue before service
    q = np.empty(n)
    acc = 0.0
    for i in range(n):
        acc = max(acc - gaps[i], 0.0) if i else 0.0
        q[i] = acc
        acc += service[i]
    sojourn = q + service
    return sojourn, _batch_se(sojourn), 0.0, 0


def _simulate_dump(lam, tau, m, horizon, rng):
    intervals = int(horizon // tau)
    counts = rng.poisson(lam * tau, intervals)
    keep = np.minimum(counts, math.floor(m)).astype(int)
    # arrivals in an interval are i.i.d. uniform; the first ``m`` are kept
    waits = []
    for c, k in zip(counts, keep):
        if k:
            t = np.sort(rng.uniform(0.0, tau, c))[:k]
            waits.append(tau - t)
    waits = np.concatenate(waits) if waits else np.zeros(0)
    se = float(waits.std(ddof=1) / math.sqrt(waits.size)) if waits.size > 1 else math.inf
    return waits, se, float(np.mean(counts > m)) if intervals else 0.0, intervals


def simulate_scheme(s: TimingScheme, seed=None, horizon: float | None = None) -> SimulationReport:
    """Discrete-event run of ``s`` up to time ``horizon``.

    The default horizon is ``2000`` intervals (batching variants) or
    ``2000 / (mu - lam)`` (queue).  Queue waits are sojourn times; batch
    waits are the time from arrival to release, dropped packets excluded.
    """
    rng = np.random.default_rng(seed)
    if s.variant == "queue":
        floor = 10.0 / (s.mu - s.lam)
        horizon = 2000.0 / (s.mu - s.lam) if horizon is None else horizon
        if horizon < floor:
            raise InvalidParameter(f"horizon must be at least {floor}")
        waits, se, drop, k = _simulate_queue(s.lam, s.mu, horizon, rng)
    else:
        horizon = 2000.0 * s.tau if horizon is None else horizon
        if horizon < 10 * s.tau:
            raise InvalidParameter(f"horizon must be at least {10 * s.tau}")
        waits, se, drop, k = _simulate_dump(s.lam, s.tau, s.m, horizon, rng)
    mean = float(waits.mean()) if waits.size else 0.0
    return SimulationReport(s.variant, mean, se, drop, int(waits.size), k, float(horizon),
                            None if seed is None else int(seed))


def pooled_wait(reports) -> tuple[float, float]:
    """Mean wait and its standard error pooled over independent runs."""
    means = np.array([r.mean_wait for r in reports])
    ses = np.array([r.wait_se for r in reports])
    return float(means.mean()), float(math.sqrt(np.sum(ses ** 2)) / means.size)
