"""Estimating maximal leakage from samples.

The main estimator works under Poisson sampling.  Given a sample of
``N ~ Poi(n)`` pairs it keeps, for every observed ``x``, only the first
``Ntilde_x ~ Poi(n theta')`` occurrences (``theta' = theta / 4``).  If some
``Ntilde_x`` exceeds the number of available occurrences it gives up and
reports 0.  Otherwise it returns ``log max(M, 1)`` with
``M = sum_y max_x Ntilde_{x,y} / (n theta')``.

``theta`` is a lower bound on the smallest nonzero input probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dist import JointPmf, Pmf, compose, Channel
from .errors import DeltaOutOfRange, EmptySample, InvalidParameter, LabelMismatch, ValidationError
from .metrics import maximal_leakage
from .units import LeakageValue, nats


# -- samples ------------------------------------------------------------------

class SampleSet:
    """Ordered multiset of ``(x, y)`` pairs, stored as label indices.

    Parameters
    ----------
    x_labels, y_labels : sequence
        Alphabets the indices refer to.
    x_idx, y_idx : array_like of int
        One entry per draw, in draw order.
    n : float
        Nominal sampling rate (expected sample size under Poisson sampling).
    """

    __slots__ = ("x_labels", "y_labels", "x_idx", "y_idx", "n")

    def __init__(self, x_labels, y_labels, x_idx, y_idx, n: float):
        x_idx = np.asarray(x_idx, dtype=np.int64).ravel()
        y_idx = np.asarray(y_idx, dtype=np.int64).ravel()
        if x_idx.shape != y_idx.shape:
            raise ValidationError("x and y index arrays differ in length")
        self.x_labels = tuple(x_labels)
        self.y_labels = tuple(y_labels)
        if x_idx.size and (x_idx.min() < 0 or x_idx.max() >= len(self.x_labels)
                           or y_idx.min() < 0 or y_idx.max() >= len(self.y_labels)):
            raise ValidationError("sample index outside the alphabet")
        x_idx.setflags(write=False)
        y_idx.setflags(write=False)
        self.x_idx, self.y_idx, self.n = x_idx, y_idx, float(n)

    @classmethod
    def from_pairs(cls, pairs, x_labels, y_labels, n: float | None = None) -> "SampleSet":
        xi = {x: i for i, x in enumerate(x_labels)}
        yi = {y: i for i, y in enumerate(y_labels)}
        try:
            xs = [xi[x] for x, _ in pairs]
            ys = [yi[y] for _, y in pairs]
        except KeyError as e:
            raise LabelMismatch(f"unknown label {e.args[0]!r}") from None
        return cls(x_labels, y_labels, xs, ys, len(xs) if n is None else n)

    def __len__(self):
        return int(self.x_idx.size)

    @property
    def pairs(self) -> list:
        return [(self.x_labels[a], self.y_labels[b]) for a, b in zip(self.x_idx, self.y_idx)]

    @property
    def n_x(self) -> np.ndarray:
        return np.bincount(self.x_idx, minlength=len(self.x_labels))

    @property
    def n_y(self) -> np.ndarray:
        return np.bincount(self.y_idx, minlength=len(self.y_labels))

    @property
    def n_xy(self) -> np.ndarray:
        nx, ny = len(self.x_labels), len(self.y_labels)
        return np.bincount(self.x_idx * ny + self.y_idx, minlength=nx * ny).reshape(nx, ny)


def _draw(j: JointPmf, size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    p = j.dense().ravel()
    cells = rng.choice(p.size, size=size, p=p / p.sum())
    ny = len(j.y_labels)
    return cells // ny, cells % ny


def sample_fixed(j: JointPmf, n: int, seed=None, nominal: float | None = None) -> SampleSet:
    """``n`` i.i.d. draws from ``j``.

    ``nominal`` sets the rate recorded on the sample (defaults to ``n``).
    """
    if n < 0:
        raise InvalidParameter("sample size must be nonnegative")
    rng = np.random.default_rng(seed)
    xs, ys = _draw(j, int(n), rng)
    return SampleSet(j.x_labels, j.y_labels, xs, ys, n if nominal is None else nominal)


def sample_poisson(j: JointPmf, n: float, seed=None) -> SampleSet:
    """Draw ``N ~ Poi(n)``, then ``N`` i.i.d. pairs."""
    if not n > 0:
        raise InvalidParameter("Poisson rate must be positive")
    rng = np.random.default_rng(seed)
    size = int(rng.poisson(n))
    xs, ys = _draw(j, size, rng)
    return SampleSet(j.x_labels, j.y_labels, xs, ys, n)


# -- estimators ---------------------------------------------------------------

@dataclass(frozen=True)
class EstimatorConfig:
    theta: float
    delta: float
    epsilon: float
    seed: int | None = None

    def __post_init__(self):
        if not 0 < self.theta <= 1:
            raise InvalidParameter("theta must lie in (0, 1]")
        if not self.delta > 0:
            raise InvalidParameter("delta must be positive")
        if not 0 < self.epsilon < 1:
            raise InvalidParameter("epsilon must lie in (0, 1)")

    @property
    def theta_prime(self) -> float:
        return self.theta / 4.0


@dataclass(frozen=True)
class PoissonEstimate:
    value: LeakageValue
    m_hat: float
    fallback: bool


def estimate_ml_poisson_detail(s: SampleSet, cfg: EstimatorConfig, seed=None) -> PoissonEstimate:
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    rate = s.n * cfg.theta_prime
    ny = len(s.y_labels)
    counts = s.n_x
    observed = np.flatnonzero(counts > 0)
    keep = rng.poisson(rate, size=observed.size)
    if np.any(keep > counts[observed]):
        return PoissonEstimate(nats(0.0), 1.0, True)
    best = np.zeros(ny)
    for x, k in zip(observed, keep):
        ys = s.y_idx[s.x_idx == x][:k]
        np.maximum(best, np.bincount(ys, minlength=ny), out=best)
    m_hat = float(best.sum() / rate) if rate > 0 else 1.0
    return PoissonEstimate(nats(math.log(max(m_hat, 1.0))), m_hat, False)


def estimate_ml_poisson(s: SampleSet, cfg: EstimatorConfig, seed=None) -> LeakageValue:
    """Poisson-sampling estimate of maximal leakage (always finite and >= 0)."""
    return estimate_ml_poisson_detail(s, cfg, seed).value


def estimate_ml_plugin(s: SampleSet, theta: float | None = None) -> LeakageValue:
    """Plug-in estimate ``log sum_y max_{x: N_x > 0} N_{x,y} / N_x``.

    ``theta`` is accepted for interface symmetry and not used.
    """
    if len(s) == 0:
        raise EmptySample("plug-in estimate needs at least one sample")
    nxy = s.n_xy.astype(float)
    nx = nxy.sum(axis=1)
    rows = nxy[nx > 0] / nx[nx > 0, None]
    return nats(math.log(max(float(rows.max(axis=0).sum()), 1.0)))


# -- sample complexity --------------------------------------------------------

def _chernoff_rate(delta: float) -> float:
    a = 2.0 - math.exp(-delta)
    return a * math.log(a) + math.exp(-delta) - 1.0


def sample_complexity_upper(card_x: int, card_y: int, theta: float, delta: float,
                            epsilon: float) -> float:
    """Fixed-length sample size that suffices for accuracy ``delta`` w.p. ``1 - epsilon``."""
    if card_x < 1 or card_y < 1:
        raise InvalidParameter("alphabet sizes must be positive")
    if not 0 < theta <= 1 or not delta > 0 or not 0 < epsilon < 1:
        raise InvalidParameter("need 0 < theta <= 1, delta > 0, 0 < epsilon < 1")
    num = 8.0 * (math.log(5.0 / epsilon) + card_y * math.log(card_x))
    return num / (theta * _chernoff_rate(delta))


def sample_complexity_lower_scaling(card_y: float, theta: float, delta: float) -> float:
    """``theta |Y| log^2(1/delta) / log |Y|``, i.e. the lower bound without its constant."""
    if not 1.0 / card_y < delta < 0.5:
        raise DeltaOutOfRange("need 1/|Y| < delta < 1/2")
    if not 0 < theta <= 1:
        raise InvalidParameter("theta must lie in (0, 1]")
    return theta * card_y * math.log(1.0 / delta) ** 2 / math.log(card_y)


# -- hard instances -----------------------------------------------------------

def hard_instance(card_y: int, p_y: Pmf, theta: float, card_x: int = 2) -> JointPmf:
    """Lower-bound family: ``x_1`` (mass ``theta``) emits ``p_y``, others emit uniform.

    The remaining ``card_x - 1`` inputs share ``1 - theta`` equally.
    """
    if len(p_y) != card_y:
        raise LabelMismatch(f"p_y has {len(p_y)} outcomes, expected {card_y}")
    if not 0 < theta < 1:
        raise InvalidParameter("theta must lie in (0, 1)")
    if card_x < 2:
        raise InvalidParameter("hard instances need at least two inputs")
    w = np.full((card_x, card_y), 1.0 / card_y)
    w[0] = p_y.probs
    px = np.full(card_x, (1.0 - theta) / (card_x - 1))
    px[0] = theta
    xs = tuple(f"x{i + 1}" for i in range(card_x))
    return compose(Pmf(xs, px), Channel(xs, p_y.labels, w))


def hard_instance_value(p_y: Pmf) -> float:
    """``log sum_y max(1/k, p_y)`` in nats."""
    k = len(p_y)
    return float(math.log(np.maximum(p_y.probs, 1.0 / k).sum()))


# -- experiments --------------------------------------------------------------

def _trial_rngs(seed, trial: int):
    ss = np.random.SeedSequence([0 if seed is None else int(seed), int(trial)])
    a, b = ss.spawn(2)
    return np.random.default_rng(a), np.random.default_rng(b)


@dataclass
class ExperimentReport:
    true_value: float
    n: float
    trials: int
    mode: str
    estimates: np.ndarray = field(repr=False)
    fallbacks: np.ndarray = field(repr=False)
    delta: float

    @property
    def failure_rate(self) -> float:
        return float(np.mean(np.abs(self.estimates - self.true_value) > self.delta))

    @property
    def fallback_rate(self) -> float:
        return float(np.mean(self.fallbacks))

    @property
    def mean_estimate(self) -> float:
        return float(np.mean(self.estimates))

    def to_dict(self) -> dict:
        return {
            "true_leakage": self.true_value,
            "n": self.n,
            "trials": self.trials,
            "mode": self.mode,
            "delta": self.delta,
            "mean_estimate": self.mean_estimate,
            "failure_rate": self.failure_rate,
            "fallback_rate": self.fallback_rate,
        }


def error_rate_report(j: JointPmf, cfg: EstimatorConfig, n: float, trials: int,
                      seed=None, mode: str = "poisson",
                      estimator: str = "poisson") -> ExperimentReport:
    """Run independent trials and collect estimates.

    Parameters
    ----------
    mode : {"poisson", "fixed"}
        ``"poisson"`` draws ``Poi(n)`` pairs.  ``"fixed"`` draws exactly
        ``ceil(2 n)`` pairs and hands them to the estimator as a sample of
        nominal rate ``n``.
    estimator : {"poisson", "plugin"}
    seed : int
        Trial ``t`` uses generators derived from ``(seed, t)`` only.
    """
    if trials < 1:
        raise InvalidParameter("trials must be at least 1")
    if mode not in ("poisson", "fixed") or estimator not in ("poisson", "plugin"):
        raise InvalidParameter(f"unknown mode/estimator {mode!r}/{estimator!r}")
    truth = maximal_leakage(j).nats
    est = np.empty(trials)
    fb = np.zeros(trials, dtype=bool)
    for t in range(trials):
        r_sample, r_est = _trial_rngs(seed, t)
        if mode == "poisson":
            s = sample_poisson(j, n, r_sample)
        else:
            s = sample_fixed(j, math.ceil(2 * n), r_sample, nominal=n)
        if estimator == "plugin":
            est[t] = estimate_ml_plugin(s).nats if len(s) else 0.0
        else:
            d = estimate_ml_poisson_detail(s, cfg, r_est)
            est[t], fb[t] = d.value.nats, d.fallback
    return ExperimentReport(truth, float(n), trials, mode, est, fb, cfg.delta)


def run_error_rate_experiment(j: JointPmf, cfg: EstimatorConfig, n: float, trials: int,
                              seed=None, mode: str = "poisson") -> float:
    """Fraction of trials whose estimate misses the true leakage by more than ``delta``."""
    return error_rate_report(j, cfg, n, trials, seed, mode).failure_rate
