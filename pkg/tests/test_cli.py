import json
import re

import pytest

from distinguo.cli import main
from distinguo.docs import load_structure, parse_structure, serialize_structure
from distinguo.errors import DocumentError
from distinguo.structures import Signature, all_finite_structures, make_finite, make_periodic


def write(path, text):
    path.write_text(text)
    return str(path)


@pytest.fixture
def files(tmp_path):
    f = {
        "r02": write(tmp_path / "r02.txt", "sig R:1\nfinite 3\nR = {0,2}\n"),
        "r0": write(tmp_path / "r0.txt", "sig R:1\nfinite 3\nR = {0}\n"),
        "r01": write(tmp_path / "r01.txt", "sig R:1\nfinite 3\nR = {0,1}\n"),
        "evens": write(tmp_path / "evens.txt", "sig R:1\nperiodic\nR = prefix: cycle:10\n"),
        "odds": write(tmp_path / "odds.txt", "sig R:1\nperiodic\nR = prefix: cycle:01\n"),
        "A_R": write(tmp_path / "a_r.txt", "# just R\nR(v0)\n"),
        "A_RN": write(tmp_path / "a_rn.txt", "R(v0)\n~R(v0)\n"),
    }
    return f


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    return code, json.loads(out)


# -------------------------------------------------------------------- count


def test_count_finite(files, capsys):
    code, out, _ = run(capsys, "count", files["r02"], "R(v0)")
    assert code == 0
    assert "count: fin:2" in out and "realizations: {(0),(2)}" in out


def test_count_periodic(files, capsys):
    code, out, _ = run(capsys, "count", files["evens"], "R(v0)")
    assert code == 0 and "count: inf" in out


def test_count_sentence(files, capsys):
    code, rep = run_json(capsys, "count", files["r02"], "E v0. R(v0)")
    assert code == 0 and rep["count"] == {"fin": 1}
    code, rep = run_json(capsys, "count", files["evens"], "R(v0)")
    assert rep["count"] == "inf"


def test_count_parse_error_position(files, capsys):
    code, _, err = run(capsys, "count", files["r02"], "R(v0")
    assert code == 2 and "4" in err and err.startswith("error:")


def test_count_missing_file(tmp_path, capsys):
    code, _, err = run(capsys, "count", str(tmp_path / "nope.txt"), "R(v0)")
    assert code == 2 and "error" in err


# -------------------------------------------------------------- distinguish


def test_distinguish_found(tmp_path, files, capsys):
    a = write(tmp_path / "a.txt", "sig R:1\nfinite 4\nR = {0,1}\n")
    b = write(tmp_path / "b.txt", "sig R:1\nfinite 4\nR = {0,1,2}\n")
    code, rep = run_json(capsys, "distinguish", a, b, files["A_R"])
    assert code == 1 and rep["verdict"] == "distinguishable"
    assert rep["witness"] == {"formula": "R(v0)", "left": {"fin": 2}, "right": {"fin": 3}}


def test_distinguish_identical(files, capsys):
    code, out, _ = run(capsys, "distinguish", files["r02"], files["r02"], files["A_R"])
    assert code == 0 and "verdict: equivalent" in out


def test_distinguish_evens_odds(files, capsys):
    code, rep = run_json(capsys, "distinguish", files["evens"], files["odds"], files["A_RN"], "--iso")
    assert code == 0 and rep["isomorphic"] is True and len(rep["isomorphism"]) == 12


def test_distinguish_ef_and_fragment(tmp_path, capsys):
    a = write(tmp_path / "a.txt", "sig R:1 eq\nfinite 3\nR = {0}\n")
    b = write(tmp_path / "b.txt", "sig R:1 eq\nfinite 3\nR = {0,1}\n")
    code, rep = run_json(capsys, "distinguish", a, b, "--fragment", "2:2", "--ef-rank", "2")
    assert code == 1 and rep["ef_rank_2"] is False and rep["spoiler"]


def test_distinguish_errors(files, capsys, tmp_path):
    assert run(capsys, "distinguish", files["r02"], files["r0"])[0] == 2
    assert run(capsys, "distinguish", files["r02"], files["evens"], files["A_R"])[0] == 2
    bad = write(tmp_path / "bad.txt", "R(v0)\nR(v0,v1)\n")
    code, _, err = run(capsys, "distinguish", files["r02"], files["r0"], bad)
    assert code == 2 and "line 2" in err
    assert run(capsys, "distinguish", files["r02"], files["r0"], "--fragment", "x")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


# ----------------------------------------------------------------- classify


@pytest.fixture
def eight(tmp_path):
    d = tmp_path / "eight"
    d.mkdir()
    for i, M in enumerate(all_finite_structures(Signature.of(R=1), 3)):
        (d / f"m{i}.txt").write_text(serialize_structure(M))
    return str(d)


def test_classify_ea(eight, files, capsys):
    code, rep = run_json(capsys, "classify", eight, "--ea", files["A_R"])
    assert code == 0 and rep["class_count"] == 4
    assert sorted(c["size"] for c in rep["classes"]) == [1, 1, 3, 3]


def test_classify_iso_and_ef(eight, capsys):
    assert run_json(capsys, "classify", eight, "--iso")[1]["class_count"] == 4
    assert run_json(capsys, "classify", eight, "--ef-rank", "1")[1]["class_count"] == 3


def test_classify_parallel_matches_serial(eight, capsys):
    serial = run_json(capsys, "classify", eight, "--iso")[1]
    parallel = run_json(capsys, "classify", eight, "--iso", "--parallel")[1]
    assert serial["classes"] == parallel["classes"]


def test_classify_rejects_mixed(tmp_path, files, capsys):
    d = tmp_path / "mixed"
    d.mkdir()
    (d / "a.txt").write_text(open(files["r02"]).read())
    (d / "b.txt").write_text(open(files["evens"]).read())
    code, _, err = run(capsys, "classify", str(d), "--iso")
    assert code == 2 and "differs" in err
    assert run(capsys, "classify", str(tmp_path / "none"), "--iso")[0] == 2


# -------------------------------------------------------------- borel-check


def test_borel_check_reflexive(tmp_path, capsys):
    a = write(tmp_path / "a.txt", "sig R:1 S:2\nfinite 3\nR = {0}\nS = {(0,1),(1,1)}\n")
    code, rep = run_json(capsys, "borel-check", a, a, "--fragment", "1:2")
    assert code == 0 and rep["agreement"] == "AGREE"
    assert rep["borel"] is rep["e_equiv"] is rep["remark"] is True
    assert rep["nmax"] == 10


def test_borel_check_evens_odds(files, capsys):
    code, rep = run_json(capsys, "borel-check", files["evens"], files["odds"], files["A_R"])
    assert code == 0 and rep["branches"] == {"finite": 0, "infinite": 1}
    assert rep["agreement"] == "AGREE"


def test_borel_check_negative(files, capsys):
    code, out, _ = run(capsys, "borel-check", files["r0"], files["r01"], files["A_R"])
    assert code == 1 and "AGREE" in out and "borel: no" in out


def test_borel_check_small_nmax(files, capsys):
    code, _, err = run(capsys, "borel-check", files["r0"], files["r01"], files["A_R"], "--nmax", "2")
    assert code == 2 and "lossless" in err


# ------------------------------------------------------------- vaught-demo


def test_vaught_demo_small(capsys):
    code, rep = run_json(capsys, "vaught-demo", "--prefix", "3", "--cycle", "2")
    assert code == 0 and rep["violations"] == 0
    keys = {(json.dumps(c["R"]), json.dumps(c["notR"])) for c in rep["classes"]}
    assert (json.dumps({"fin": 3}), json.dumps("inf")) in keys
    # the universe is infinite, so one of the two counts is always infinite
    assert all(any("inf" in x for x in k) for k in keys)


def test_vaught_demo_theta(capsys):
    _, rep = run_json(capsys, "vaught-demo", "--prefix", "4", "--cycle", "1")
    cls = next(c for c in rep["classes"] if c["R"] == {"fin": 3})
    assert len(cls["theta"]) == 12 and len(set(cls["theta"].values())) == 12


def test_vaught_demo_bounds(capsys):
    assert run(capsys, "vaught-demo", "--prefix", "40")[0] == 2


# ------------------------------------------------------------- determinism


def _strip(out):
    return re.sub(r'"?elapsed"?: [0-9.e-]+', "elapsed", out)


@pytest.mark.parametrize("argv", [
    ("count", "r02", "R(v0)"),
    ("distinguish", "evens", "odds", "A_RN", "--iso"),
    ("borel-check", "r0", "r01", "A_R"),
])
@pytest.mark.parametrize("as_json", [False, True])
def test_reports_are_deterministic(files, capsys, argv, as_json):
    args = [files.get(a, a) for a in argv] + (["--json"] if as_json else [])
    first = run(capsys, *args)[1]
    second = run(capsys, *args)[1]
    assert _strip(first) == _strip(second) and "elapsed" in first


# ---------------------------------------------------------------- documents


def test_document_round_trip_finite():
    sig = Signature.of(eq=True, R=1, S=2)
    M = make_finite(sig, 3, {"R": {0, 2}, "S": [(0, 1), (2, 0)]})
    text = serialize_structure(M)
    assert text.splitlines()[:2] == ["sig R:1 S:2 eq", "finite 3"]
    assert parse_structure(text) == M


def test_document_round_trip_periodic():
    M = make_periodic(Signature.of(R=1, P=1), {"R": ((1, 1, 0), (0, 1)), "P": ((), (1,))})
    assert parse_structure(serialize_structure(M)) == M


def test_document_exhaustive_round_trip():
    for M in all_finite_structures(Signature.of(R=1, S=2), 2):
        assert parse_structure(serialize_structure(M)) == M


@pytest.mark.parametrize("text,line", [
    ("sig R:x\nfinite 3\n", 1),
    ("sig R:1\nfinite\n", 2),
    ("sig R:1\nfinite 3\nR = {5}\n", 3),
    ("sig R:1\nfinite 3\nT = {0}\n", 3),
    ("sig R:1\nperiodic\nR = prefix:12 cycle:0\n", 3),
])
def test_document_errors(text, line):
    with pytest.raises(DocumentError, match=f"line {line}"):
        parse_structure(text)


def test_load_structure(files):
    assert load_structure(files["r02"]) == make_finite(Signature.of(R=1), 3, {"R": {0, 2}})
