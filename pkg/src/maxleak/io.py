"""JSON files: distributions, reports and run manifests.

Distribution files look like ::

    {"kind": "joint" | "channel" | "cond_joint",
     "x_labels": [...], "y_labels": [...], "p": [[...]],
     "p_x": [...],                                   # channel only
     "z": [{"label": .., "weight": .., "p": [[...]]}]}  # cond_joint only

A ``channel`` file holds ``P(y|x)`` rows; its input defaults to uniform
when ``p_x`` is absent.  Each ``z`` entry of a ``cond_joint`` file holds the
conditional joint ``P(x, y | z)``.  Label lists keep their order, and list
labels come back as tuples.
"""

from __future__ import annotations

import hashlib
import json
import math
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .dist import Channel, CondJointPmf, JointPmf, Pmf, compose
from .errors import ParseError, ValidationError


def _label(v):
    return tuple(_label(x) for x in v) if isinstance(v, list) else v


def _labels(obj: dict, key: str) -> tuple:
    if key not in obj or not isinstance(obj[key], list):
        raise ParseError(f"missing list field {key!r}")
    return tuple(_label(v) for v in obj[key])


def _matrix(v, what: str) -> np.ndarray:
    try:
        a = np.array(v, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what} is not a numeric matrix") from exc
    if a.ndim != 2:
        raise ParseError(f"{what} must be a 2-D list")
    return a


def load_json(path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc


def dist_from_obj(obj: dict):
    """Build a :class:`JointPmf` or :class:`CondJointPmf` from a parsed file."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ParseError("distribution object needs a 'kind' field")
    kind = obj["kind"]
    xl, yl = _labels(obj, "x_labels"), _labels(obj, "y_labels")
    if kind == "joint":
        return JointPmf(xl, yl, _matrix(obj.get("p"), "p"))
    if kind == "channel":
        ch = Channel(xl, yl, _matrix(obj.get("p"), "p"))
        px = Pmf.uniform(xl) if obj.get("p_x") is None else Pmf(xl, obj["p_x"])
        return compose(px, ch)
    if kind == "cond_joint":
        zs = obj.get("z")
        if not isinstance(zs, list) or not zs:
            raise ParseError("cond_joint needs a nonempty 'z' list")
        try:
            pz = Pmf([_label(z["label"]) for z in zs], [z["weight"] for z in zs])
            joints = [JointPmf(xl, yl, _matrix(z["p"], "z.p")) for z in zs]
        except (KeyError, TypeError) as exc:
            raise ParseError("each z entry needs label, weight and p") from exc
        return CondJointPmf(pz, joints)
    raise ParseError(f"unknown kind {kind!r}")


def dist_to_obj(d) -> dict:
    if isinstance(d, CondJointPmf):
        return {"kind": "cond_joint", "x_labels": list(d.x_labels), "y_labels": list(d.y_labels),
                "z": [{"label": z, "weight": float(w), "p": jz.dense().tolist()}
                      for z, w, jz in zip(d.z_labels, d.pz.probs, d.joints)]}
    if isinstance(d, JointPmf):
        return {"kind": "joint", "x_labels": list(d.x_labels), "y_labels": list(d.y_labels),
                "p": d.dense().tolist()}
    raise ValidationError(f"cannot serialize {type(d).__name__}")


def load_dist(path):
    return dist_from_obj(load_json(path))


def save_dist(d, path) -> None:
    Path(path).write_text(dumps(dist_to_obj(d)), encoding="utf-8")


# -- serialization ------------------------------------------------------------

def _plain(v):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(v, dict):
        return {str(k) if not isinstance(k, (str, int)) else k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def dumps(obj) -> str:
    """JSON text; floats use the shortest repr that round-trips exactly."""
    return json.dumps(_plain(obj), indent=2, allow_nan=False)


def read_float(v) -> float:
    """Inverse of the float encoding used by :func:`dumps`."""
    if isinstance(v, str) and v in ("inf", "-inf", "nan"):
        return float(v)
    return float(v)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    subcommand: str
    parameters: dict
    seed: int | None = None
    inputs: dict = field(default_factory=dict)  # path -> sha256
    outputs: dict = field(default_factory=dict)
    version: str = __version__
    python: str = field(default_factory=platform.python_version)
    numpy: str = np.__version__

    def add_input(self, path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def to_dict(self) -> dict:
        return _plain(asdict(self))
