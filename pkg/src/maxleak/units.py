"""Leakage values with an explicit unit."""

from __future__ import annotations

import math
from dataclasses import dataclass

LN2 = math.log(2.0)
UNITS = ("nats", "bits")


def to_unit(value: float, src: str, dst: str) -> float:
    if src not in UNITS or dst not in UNITS:
        raise ValueError(f"unknown unit: {src!r} -> {dst!r}")
    if src == dst:
        return float(value)
    return float(value) / LN2 if dst == "bits" else float(value) * LN2


@dataclass(frozen=True)
class LeakageValue:
    """Nonnegative extended real tagged with a unit.

    Parameters
    ----------
    value : float
        Leakage amount; ``math.inf`` is allowed, NaN and negatives are not.
    unit : {"nats", "bits"}
    """

    value: float
    unit: str = "nats"

    def __post_init__(self):
        if self.unit not in UNITS:
            raise ValueError(f"unknown unit {self.unit!r}")
        v = float(self.value)
        if math.isnan(v) or v < 0.0:
            raise ValueError(f"leakage must be a nonnegative extended real, got {v!r}")
        object.__setattr__(self, "value", v)

    @property
    def nats(self) -> float:
        return to_unit(self.value, self.unit, "nats")

    @property
    def bits(self) -> float:
        return to_unit(self.value, self.unit, "bits")

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def to(self, unit: str) -> "LeakageValue":
        return LeakageValue(to_unit(self.value, self.unit, unit), unit)

    def __float__(self) -> float:
        return self.value

    def to_dict(self, unit: str | None = None) -> dict:
        v = self if unit is None else self.to(unit)
        return {"value": v.value, "unit": v.unit}


def nats(x: float) -> LeakageValue:
    """Wrap a nats value, absorbing round-off that lands just below zero."""
    x = float(x)
    if -1e-9 < x < 0.0:
        x = 0.0
    return LeakageValue(x, "nats")
