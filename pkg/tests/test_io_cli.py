import hashlib
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from maxleak.channels import binary_joint, bsc
from maxleak.cli import main
from maxleak.dist import CondJointPmf, JointPmf, Pmf
from maxleak.errors import ParseError, ValidationError
from maxleak.io import dist_from_obj, dumps, load_dist, load_json, read_float, save_dist
from maxleak.metrics import MetricReport

LN2 = math.log(2)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    doc = json.loads(out) if code == 0 else None
    return code, doc, err


@pytest.fixture
def bsc_file(tmp_path):
    path = tmp_path / "bsc.json"
    path.write_text(json.dumps({"kind": "channel", "x_labels": [0, 1], "y_labels": [0, 1],
                                "p": [[0.75, 0.25], [0.25, 0.75]], "p_x": [0.5, 0.5]}))
    return path


# -- io -----------------------------------------------------------------------

def test_dist_round_trip(tmp_path):
    j = JointPmf([("a", 1), ("b", 2)], ["u", "v", "w"], [[0.1, 0.2, 0.0], [0.3, 0.0, 0.4]])
    save_dist(j, tmp_path / "j.json")
    back = load_dist(tmp_path / "j.json")
    assert back.x_labels == j.x_labels and back.y_labels == j.y_labels
    assert np.array_equal(back.dense(), j.dense())
    cj = CondJointPmf(Pmf("zw", [0.25, 0.75]), [binary_joint(0.5, bsc(0.1)), binary_joint(0.3, bsc(0.2))])
    save_dist(cj, tmp_path / "c.json")
    back = load_dist(tmp_path / "c.json")
    assert np.array_equal(back.to_array(), cj.to_array())


def test_parse_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        load_json(bad)
    with pytest.raises(ParseError):
        load_json(tmp_path / "missing.json")
    with pytest.raises(ParseError):
        dist_from_obj({"kind": "tensor", "x_labels": [0], "y_labels": [0]})
    with pytest.raises(ParseError):
        dist_from_obj({"kind": "joint", "y_labels": [0], "p": [[1.0]]})
    with pytest.raises(ValidationError):
        dist_from_obj({"kind": "joint", "x_labels": [0, 1], "y_labels": [0], "p": [[0.5], [0.6]]})


def test_float_encoding_round_trips():
    vals = [0.1, 1 / 3, math.pi * 1e-300, 2.0 ** -1074, math.inf, -math.inf]
    back = [read_float(v) for v in json.loads(dumps(vals))]
    assert back == vals
    assert json.loads(dumps([math.nan])) == ["nan"]


# -- metrics / oracle-check ---------------------------------------------------

def test_metrics_bsc_bits(capsys, bsc_file):
    code, doc, _ = run(capsys, "metrics", str(bsc_file), "--metric", "maximal_leakage", "--unit", "bits")
    assert code == 0
    assert doc["result"]["values"]["maximal_leakage"] == pytest.approx(0.5849625007211562, abs=1e-12)
    sha = hashlib.sha256(bsc_file.read_bytes()).hexdigest()
    assert doc["manifest"]["inputs"][str(bsc_file)] == sha


def test_metrics_independent_all(capsys, tmp_path):
    path = tmp_path / "ind.json"
    path.write_text(json.dumps({"kind": "joint", "x_labels": ["a", "b"], "y_labels": [0, 1],
                                "p": [[0.12, 0.28], [0.18, 0.42]]}))
    code, doc, _ = run(capsys, "metrics", str(path))
    assert code == 0
    for k, v in doc["result"]["values"].items():
        if k != "capacity":
            assert read_float(v) == pytest.approx(0, abs=1e-9)
    assert read_float(doc["result"]["values"]["capacity"]) > 0


def test_metrics_report_reparses_and_units_only_change_presentation(capsys, bsc_file):
    _, nats_doc, _ = run(capsys, "metrics", str(bsc_file))
    _, bits_doc, _ = run(capsys, "metrics", str(bsc_file), "--unit", "bits")
    a = MetricReport.from_dict(nats_doc["result"])
    b = MetricReport.from_dict(bits_doc["result"])
    for k in a.values:
        if a.values[k].is_infinite:
            assert b.values[k].is_infinite
        else:
            assert b.values[k].nats == pytest.approx(a.values[k].nats, abs=1e-15)


def test_metrics_exit_codes(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2,")
    assert run(capsys, "metrics", str(bad))[0] == 2
    neg = tmp_path / "neg.json"
    neg.write_text(json.dumps({"kind": "joint", "x_labels": [0, 1], "y_labels": [0],
                               "p": [[-0.5], [1.5]]}))
    code, _, err = run(capsys, "metrics", str(neg))
    assert code == 3 and "NegativeProbability" in err


def test_oracle_check(capsys, bsc_file):
    code, doc, _ = run(capsys, "oracle-check", str(bsc_file), "--draws", "50", "--seed", "1")
    assert code == 0 and doc["result"]["ok"]
    assert doc["result"]["shattering"] == pytest.approx(math.log(1.5), abs=1e-12)


# -- estimate -----------------------------------------------------------------

def _estimate_spec(tmp_path, bsc_file, **kw):
    spec = {"distribution": bsc_file.name, "theta": 0.5, "delta": 0.1, "epsilon": 0.1,
            "n": 500, "trials": 5, "seed": 3, **kw}
    path = tmp_path / "est.json"
    path.write_text(json.dumps(spec))
    return path


def test_estimate_auto_and_determinism(capsys, tmp_path, bsc_file):
    spec = _estimate_spec(tmp_path, bsc_file, n="auto", trials=3)
    code, doc, _ = run(capsys, "estimate", str(spec))
    assert code == 0
    assert doc["result"]["n"] == pytest.approx(19307.000306, abs=1e-3)
    spec = _estimate_spec(tmp_path, bsc_file)
    a = run(capsys, "estimate", str(spec))[1]["result"]
    b = run(capsys, "estimate", str(spec))[1]["result"]
    assert a == b


def test_estimate_rejects_zero_trials(capsys, tmp_path, bsc_file):
    assert run(capsys, "estimate", str(_estimate_spec(tmp_path, bsc_file, trials=0)))[0] == 3


# -- mechanism / cipher / timing ----------------------------------------------

def test_mechanism_solve_matches_closed_form(capsys):
    code, doc, _ = run(capsys, "mechanism", "solve", "--p", "0.3", "--level", "0.1", "--unit", "bits")
    assert code == 0
    assert doc["result"]["leakage"] == pytest.approx(math.log2(2 - 0.1 / 0.3), abs=1e-6)
    code, doc, _ = run(capsys, "mechanism", "gap", "--p", "0.5", "--D", "0.25")
    assert doc["result"]["memoryless_lower_bound_bits"] == pytest.approx(0.5)
    assert run(capsys, "mechanism", "solve", "--p", "0.3", "--level", "-0.1")[0] == 3


def test_mechanism_infeasible_is_domain_error(capsys, tmp_path, bsc_file):
    d = tmp_path / "d.json"
    d.write_text(json.dumps({"d": [[0.5, 1.0], [1.0, 0.5]]}))
    code, _, err = run(capsys, "mechanism", "solve", "--dist", str(bsc_file), "--distortion", str(d),
                       "--level", "0.1")
    assert code == 4 and "Infeasible" in err


def test_cipher_limit(capsys):
    code, doc, _ = run(capsys, "cipher", "limit", "--D", "0.1", "--r", "0.2", "--alpha", "0", "--unit", "bits")
    assert code == 0
    assert doc["result"]["single_letter_limit"] == pytest.approx(0.33101, abs=1e-5)


def test_cipher_build_then_eval(capsys, tmp_path):
    out = tmp_path / "scheme.json"
    code, doc, _ = run(capsys, "cipher", "build", "--n", "6", "--D", "0.25", "--r", "0.25",
                       "--alpha", "0.05", "--seed", "1", "--json-out", str(out))
    assert code == 0
    scheme = tmp_path / "only_scheme.json"
    scheme.write_text(json.dumps(json.loads(out.read_text())["result"]["scheme"]))
    code, doc, _ = run(capsys, "cipher", "eval", "--scheme", str(scheme), "--brute")
    assert code == 0
    r = doc["result"]
    assert r["leakage"] == pytest.approx(r["brute_force_leakage"], abs=1e-12)
    assert run(capsys, "cipher", "eval")[0] == 2


def test_timing_commands(capsys):
    code, _, err = run(capsys, "timing", "report", "--scheme", "queue", "--lam", "2", "--mu", "1")
    assert code == 4 and "UnstableQueue" in err
    code, doc, _ = run(capsys, "timing", "report", "--scheme", "dump", "--tau", "2", "--m", "3")
    assert doc["result"]["leakage_rate"] == pytest.approx(math.log(4) / 2)
    code, doc, _ = run(capsys, "timing", "simulate", "--scheme", "dump", "--tau", "2", "--m", "19",
                       "--runs", "3", "--seed", "5")
    assert code == 0 and len(doc["result"]["runs"]) == 3


def test_global_flags_before_or_after_subcommand(capsys, bsc_file):
    a = run(capsys, "--unit", "bits", "metrics", str(bsc_file))[1]["result"]
    b = run(capsys, "metrics", str(bsc_file), "--unit", "bits")[1]["result"]
    assert a == b


def test_module_entry_point(bsc_file):
    proc = subprocess.run([sys.executable, "-m", "maxleak", "metrics", str(bsc_file),
                           "--metric", "maximal_leakage"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["values"]["maximal_leakage"] == pytest.approx(math.log(1.5))
