"""Command-line entry point: ``maxleak <command> ...``.

Every command prints a JSON document ``{"result": ..., "manifest": ...}``
and optionally writes it to ``--json-out``.  Exit codes: 0 ok, 2 unreadable
input, 3 invalid data, 4 out-of-domain parameters, 5 solver failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .cipher import (CipherScheme, brute_force_leakage, build_scheme, convergence_slack_bits,
                     exact_scheme_leakage, excess_distortion_prob, single_letter_limit_detail)
from .dist import CondJointPmf, Pmf, factor
from .errors import DomainError, InfeasibleRate, LeakageError, ParseError, SolverError, ValidationError
from .estimation import (EstimatorConfig, error_rate_report, sample_complexity_upper)
from .io import RunManifest, dist_from_obj, dumps, load_dist, load_json
from .mechanism import DistortionSpec, memoryless_gap_report, min_leakage_general
from .metrics import ALL_METRICS, conditional_report, maximal_leakage, metric_report
from .oracle import leakage_of_U, random_aux, shattering_channel
from .timing import TimingScheme, pooled_wait, simulate_scheme
from .units import LeakageValue

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_DOMAIN, EXIT_SOLVER = 0, 2, 3, 4, 5


def _leak(v: LeakageValue, unit: str) -> float:
    return v.to(unit).value


# -- commands -----------------------------------------------------------------

def cmd_metrics(args, man: RunManifest) -> dict:
    man.add_input(args.file)
    d = load_dist(args.file)
    if isinstance(d, CondJointPmf):
        return conditional_report(d).to_dict(args.unit)
    names = "all" if args.metric in (None, ["all"]) else args.metric
    return metric_report(d, names).to_dict(args.unit)


def cmd_oracle_check(args, man: RunManifest) -> dict:
    man.add_input(args.file)
    j = load_dist(args.file)
    if isinstance(j, CondJointPmf):
        raise ValidationError("oracle-check needs a joint or channel file")
    closed = maximal_leakage(j)
    px, _, _ = factor(j)
    shat = leakage_of_U(shattering_channel(px), j)
    rng = np.random.default_rng(args.seed)
    worst = -math.inf
    for _ in range(args.draws):
        nu = int(rng.integers(1, 2 * len(px) + 2))
        worst = max(worst, leakage_of_U(random_aux(rng, nu, px.labels), j).nats)
    return {
        "unit": args.unit,
        "closed_form": _leak(closed, args.unit),
        "shattering": _leak(shat, args.unit),
        "shattering_gap": abs(shat.nats - closed.nats),
        "random_draws": args.draws,
        "random_max": LeakageValue(max(worst, 0.0)).to(args.unit).value if args.draws else None,
        "ok": bool(abs(shat.nats - closed.nats) <= 1e-9 and worst <= closed.nats + 1e-12),
    }


def _require(obj: dict, key: str):
    if key not in obj:
        raise ParseError(f"missing field {key!r}")
    return obj[key]


def cmd_estimate(args, man: RunManifest) -> dict:
    man.add_input(args.spec)
    spec = load_json(args.spec)
    if not isinstance(spec, dict):
        raise ParseError("estimation spec must be a JSON object")
    dist = _require(spec, "distribution")
    if isinstance(dist, str):
        path = Path(args.spec).parent / dist
        man.add_input(path)
        j = load_dist(path)
    else:
        j = dist_from_obj(dist)
    trials = _require(spec, "trials")
    if not isinstance(trials, int) or trials < 1:
        raise ValidationError("trials must be a positive integer")
    cfg = EstimatorConfig(float(_require(spec, "theta")), float(_require(spec, "delta")),
                          float(_require(spec, "epsilon")))
    n = _require(spec, "n")
    if n == "auto":
        nx, ny = j.shape
        n = sample_complexity_upper(nx, ny, cfg.theta, cfg.delta, cfg.epsilon)
    seed = spec.get("seed", args.seed)
    man.seed = seed
    rep = error_rate_report(j, cfg, float(n), trials, seed, spec.get("mode", "poisson"),
                            spec.get("estimator", "poisson"))
    out = rep.to_dict()
    for key in ("true_leakage", "mean_estimate", "delta"):
        out[key] = LeakageValue(max(out[key], 0.0)).to(args.unit).value
    out["unit"] = args.unit
    return out


def _distortion(arg: str, k: int) -> np.ndarray:
    if arg == "hamming":
        return 1.0 - np.eye(k)
    obj = load_json(arg)
    d = obj["d"] if isinstance(obj, dict) and "d" in obj else obj
    try:
        return np.array(d, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError("distortion must be a numeric matrix") from exc


def cmd_mechanism(args, man: RunManifest) -> dict:
    if args.action == "gap":
        return memoryless_gap_report(args.p, args.D)
    if args.dist is None:
        if args.p is None:
            raise ParseError("mechanism solve needs --dist or --p")
        px = Pmf((0, 1), [1 - args.p, args.p])
    else:
        man.add_input(args.dist)
        px, _, _ = factor(load_dist(args.dist))
    if args.distortion != "hamming":
        man.add_input(args.distortion)
    d = _distortion(args.distortion, len(px))
    level = args.level if args.level is not None else args.D
    if level is None:
        raise ParseError("mechanism solve needs --level")
    spec = DistortionSpec(d, level, px.labels, px.labels if d.shape[1] == len(px) else None)
    return min_leakage_general(px, spec).to_dict(args.unit)


def _cipher_params(args, man: RunManifest) -> dict:
    params = {}
    if args.params:
        man.add_input(args.params)
        params = load_json(args.params)
        if not isinstance(params, dict):
            raise ParseError("cipher params must be a JSON object")
    for key in ("n", "D", "r", "alpha", "delta"):
        v = getattr(args, key, None)
        if v is not None:
            params[key] = v
    if args.p is not None:
        params["p"] = [1 - args.p, args.p]
    params.setdefault("p", [0.5, 0.5])
    params.setdefault("delta", 0.05)
    params.setdefault("distortion", "hamming")
    for key in ("D", "r", "alpha"):
        _require(params, key)
    params["alpha"] = float(params["alpha"])  # accepts "inf"
    return params


def _cipher_setup(params):
    probs = params["p"]
    labels = params.get("labels", list(range(len(probs))))
    p = Pmf(labels, probs)
    dist = params["distortion"]
    d = 1.0 - np.eye(len(p)) if dist == "hamming" else np.array(dist, dtype=float)
    return p, DistortionSpec(d, params["D"], p.labels)


def cmd_cipher(args, man: RunManifest) -> dict:
    if args.action == "eval":
        man.add_input(args.scheme)
        s = CipherScheme.from_dict(load_json(args.scheme))
        params = {"n": s.n, "D": s.D, "r": s.r, "alpha": s.alpha}
        p, spec = s.p, s.spec
    else:
        params = _cipher_params(args, man)
        p, spec = _cipher_setup(params)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", InfeasibleRate)
        lim = single_letter_limit_detail(p, spec, params["D"], params["r"], params["alpha"],
                                         channel_rate=params.get("channel_rate"))
    out = {
        "unit": args.unit,
        "single_letter_limit": _leak(lim.value, args.unit),
        "maximizer": lim.maximizer.probs.tolist(),
        "warnings": [str(w.message) for w in caught],
    }
    if args.action == "limit":
        return out
    if args.action == "build":
        n = int(_require(params, "n"))
        man.seed = args.seed
        s = build_scheme(n, p, spec, params["D"], params["r"], params["alpha"],
                         params["delta"], seed=args.seed)
        out["scheme"] = s.to_dict()
    L = exact_scheme_leakage(s)
    out.update({
        "n": s.n,
        "key_bits": s.key_bits,
        "leakage": _leak(L, args.unit),
        "leakage_per_letter": _leak(L, args.unit) / s.n,
        "slack_bits": convergence_slack_bits(s.n, len(p)),
        "excess_distortion_prob": excess_distortion_prob(s),
        "codebook_sizes": [len(c.codebook) for c in s.codes if c.feasible],
    })
    if getattr(args, "brute", False):
        out["brute_force_leakage"] = _leak(brute_force_leakage(s), args.unit)
    return out


def _timing_scheme(args) -> TimingScheme:
    return TimingScheme(args.scheme, args.lam, mu=args.mu, tau=args.tau, m=args.m, m_b=args.mb)


def cmd_timing(args, man: RunManifest) -> dict:
    s = _timing_scheme(args)
    rep = s.report().to_dict()
    scale = 1.0 if args.unit == "nats" else 1.0 / math.log(2.0)
    rep["leakage_rate"] *= scale
    rep["unit"] = f"{args.unit}/time"
    if args.action == "report":
        return rep
    base = 0 if args.seed is None else args.seed
    man.seed = base
    runs = [simulate_scheme(s, base + i, args.horizon) for i in range(args.runs)]
    mean, se = pooled_wait(runs)
    return {
        "analytic": rep,
        "runs": [r.to_dict() for r in runs],
        "pooled_mean_wait": mean,
        "pooled_wait_se": se,
        "z_score": (mean - rep["mean_wait"]) / se if se > 0 else 0.0,
        "max_drop_rate": max(r.drop_rate for r in runs),
    }


# -- parser -------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--unit", choices=("nats", "bits"), default=argparse.SUPPRESS)
    common.add_argument("--json-out", default=argparse.SUPPRESS, metavar="PATH")

    ap = argparse.ArgumentParser(prog="maxleak", parents=[common],
                                 description="Maximal leakage toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", parents=[common], help="leakage metrics of a distribution file")
    p.add_argument("file")
    p.add_argument("--metric", nargs="+", choices=("all",) + ALL_METRICS, default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("oracle-check", parents=[common],
                       help="compare guessing-oracle leakage with the closed form")
    p.add_argument("file")
    p.add_argument("--draws", type=int, default=200)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("estimate", parents=[common], help="estimator error-rate experiment")
    p.add_argument("spec")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("mechanism", parents=[common], help="leakage-minimizing mechanism")
    p.add_argument("action", choices=("solve", "gap"))
    p.add_argument("--dist")
    p.add_argument("--distortion", default="hamming",
                   help="'hamming' or a JSON file holding a matrix (or {'d': matrix})")
    p.add_argument("--level", type=float)
    p.add_argument("--p", type=float, help="Bernoulli source parameter")
    p.add_argument("--D", type=float, help="distortion level (gap report)")
    p.set_defaults(func=cmd_mechanism)

    p = sub.add_parser("cipher", parents=[common], help="Shannon cipher system")
    p.add_argument("action", choices=("limit", "build", "eval"))
    p.add_argument("--params", help="JSON object with p, distortion, D, r, alpha, delta, n")
    p.add_argument("--scheme", help="scheme JSON written by 'cipher build' (eval only)")
    p.add_argument("--p", type=float, help="Bernoulli source parameter")
    p.add_argument("--n", type=int)
    p.add_argument("--D", type=float)
    p.add_argument("--r", type=float, help="key rate, bits per letter")
    p.add_argument("--alpha", type=float, help="divergence radius, bits")
    p.add_argument("--delta", type=float)
    p.add_argument("--brute", action="store_true", help="also run the brute-force leakage")
    p.set_defaults(func=cmd_cipher)

    p = sub.add_parser("timing", parents=[common], help="packet-timing schemes")
    p.add_argument("action", choices=("report", "simulate"))
    p.add_argument("--scheme", choices=("queue", "dump", "dummy"), required=True)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--mu", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--m", type=float)
    p.add_argument("--mb", type=int, default=0)
    p.add_argument("--horizon", type=float)
    p.add_argument("--runs", type=int, default=20)
    p.set_defaults(func=cmd_timing)
    return ap


def _params(args) -> dict:
    skip = {"func", "command", "json_out"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    for key, default in (("seed", None), ("unit", "nats"), ("json_out", None)):
        if not hasattr(args, key):
            setattr(args, key, default)
    if args.command == "cipher" and args.action == "eval" and not args.scheme:
        print("error: cipher eval needs --scheme", file=sys.stderr)
        return EXIT_PARSE
    man = RunManifest(args.command, _params(args), args.seed)
    try:
        result = args.func(args, man)
    except ParseError as exc:
        code, err = EXIT_PARSE, exc
    except ValidationError as exc:
        code, err = EXIT_VALIDATION, exc
    except DomainError as exc:
        code, err = EXIT_DOMAIN, exc
    except SolverError as exc:
        code, err = EXIT_SOLVER, exc
    except LeakageError as exc:  # pragma: no cover - every family is mapped above
        code, err = EXIT_SOLVER, exc
    else:
        man.outputs = {"json_out": args.json_out}
        text = dumps({"result": result, "manifest": man.to_dict()})
        if args.json_out:
            Path(args.json_out).write_text(text + "\n", encoding="utf-8")
        print(text)
        return EXIT_OK
    print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
