import csv
import io
import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import random_space
from mmtk.cli import run
from mmtk.core import one_point
from mmtk.errors import MalformedDocument
from mmtk.serialization import dumps_space, loads, parse_space, space_to_doc


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def _run(argv):
    out = io.StringIO()
    code = run(argv, stdout=out)
    return code, json.loads(out.getvalue())


@pytest.fixture
def files(tmp_path):
    two = {"labels": ["a", "b"], "dist": [[0, 2], [2, 0]], "weight": [0.5, 0.5]}
    return {"two": _write(tmp_path, "two.json", two),
            "pt": _write(tmp_path, "pt.json", space_to_doc(one_point())),
            "tmp": tmp_path}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 30), st.integers(1, 6))
def test_roundtrip_bit_exact(seed, n):
    X = random_space(np.random.default_rng(seed), n)
    Y = parse_space(dumps_space(X))
    assert X.same_as(Y)


def test_malformed_json_position():
    with pytest.raises(MalformedDocument) as exc:
        loads('{"dist": [[0, 1],\n [1 0]]}')
    assert exc.value.line == 2


def test_box_identical_inputs(files):
    code, rep = _run(["dist", "box", "--in", files["two"], "--in", files["two"]])
    assert code == 0 and rep["value"] == 0.0 and rep["certified"]
    assert rep["inputs_digest"].startswith("sha256:") and "wall_time" in rep


def test_exit_codes(files, monkeypatch):
    bad = _write(files["tmp"], "bad.json", '{"dist": [[0, 1], [1')
    code, rep = _run(["dist", "box", "--in", bad, "--in", files["two"]])
    assert code == 2 and rep["line"] == 1 and "column" in rep
    tri = _write(files["tmp"], "tri.json",
                 {"dist": [[0, 1, 3], [1, 0, 1], [3, 1, 0]], "weight": [0.2, 0.3, 0.5]})
    code, rep = _run(["dist", "box", "--in", tri, "--in", files["two"]])
    assert code == 2 and rep["error_type"] == "TriangleViolation"
    code, rep = _run(["dist", "box", "--in", files["two"], "--in", files["pt"], "--budget", "1"])
    assert code == 3 and rep["certified"] is False
    monkeypatch.setenv("MMTK_BUDGET", "1")
    code, rep = _run(["dist", "box", "--in", files["two"], "--in", files["pt"]])
    assert code == 3


def test_verify_roundtrip(files):
    tmp = files["tmp"]
    prok = _write(tmp, "p.json", {"ambient": {"dist": [[0, 1], [1, 0]]},
                                  "mu": [0.7, 0.3], "nu": [0.5, 0.5]})
    ky = _write(tmp, "k.json", {"ambient": {"dist": [[0, 1], [1, 0]]},
                                "base_weight": [0.3, 0.3, 0.4], "f": [0, 0, 0], "g": [1, 0, 0]})
    commands = [
        ["dist", "box", "--in", files["two"], "--in", files["pt"]],
        ["dist", "gp", "--in", files["two"], "--in", files["pt"]],
        ["dist", "prokhorov", "--in", prok],
        ["dist", "kyfan", "--in", ky],
        ["inv", "pdiam", "--in", files["two"], "--alpha", "0.8"],
        ["inv", "obsdiam", "--in", files["two"], "--kappa", "0.2"],
        ["inv", "odtotal", "--in", files["two"]],
        ["check", "order", "--in", files["two"], "--in", files["pt"]],
        ["check", "isom", "--in", files["two"], "--in", files["pt"]],
        ["make", "midpoint", "--in", files["pt"], "--in", files["two"]],
        ["make", "scale", "--in", files["two"], "--t", "0.5"],
        ["make", "transform", "--in", files["two"], "--t", "0.25"],
        ["make", "product", "--in", files["two"], "--in", files["two"], "--p", "2"],
        ["make", "interp", "--in", files["two"], "--in", files["pt"], "--t", "0.5"],
        ["make", "geodesic", "--in", files["pt"], "--in", files["two"], "--depth", "1"],
        ["make", "branch", "--in", files["pt"], "--in", files["two"], "--depth", "1", "--s", "1"],
        ["make", "net", "--in", files["two"], "--eps", "0.1"],
        ["demo", "gauss", "--kappa", "0.5"],
        ["demo", "sphere", "--max-n", "4"],
    ]
    expected = {"dist prokhorov": 0.2, "dist kyfan": 0.3, "dist box": 0.5,
                "inv pdiam": 2.0, "check isom": False, "check order": True}
    for argv in commands:
        code, rep = _run(argv)
        assert code == 0, (argv, rep)
        key = " ".join(argv[:2])
        if key in expected:
            assert rep["value"] == pytest.approx(expected[key])
        path = _write(tmp, "r.json", rep)
        code, ver = _run(["verify", "--report", path])
        assert code == 0 and ver["ok"], (argv, ver)


def test_verify_detects_tampering(files):
    code, rep = _run(["dist", "box", "--in", files["two"], "--in", files["pt"]])
    rep["value"] = 0.25
    code, ver = _run(["verify", "--report", _write(files["tmp"], "r.json", rep)])
    assert code == 2 and not ver["ok"]


def test_demo_csv(files):
    out = str(files["tmp"] / "s.csv")
    code, rep = _run(["demo", "sphere", "--max-n", "3", "--csv", out])
    rows = list(csv.DictReader(open(out)))
    assert [r["n"] for r in rows] == ["1", "2", "3"]
    assert float(rows[2]["ratio"]) == pytest.approx(0.17361, abs=1e-4)
    code, rep = _run(["demo", "gauss", "--lambda", "1", "--kappa", "0.5", "--csv", out])
    assert rep["value"] == pytest.approx(1.3490, abs=1e-4)
    assert next(csv.reader(open(out))) == ["kappa", "obsdiam"]


def test_console_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "mmtk", "dist", "box", "--in", files["two"],
                           "--in", files["two"]], capture_output=True, text=True,
                          env={**os.environ})
    assert proc.returncode == 0 and json.loads(proc.stdout)["value"] == 0.0


def test_bad_subcommand(files):
    code, rep = _run(["dist", "wasserstein", "--in", files["two"]])
    assert code == 2
