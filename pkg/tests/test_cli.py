import json
import subprocess
import sys

import pytest

from trokit.cli import main
from trokit.io import dumps


def E(i, j, n=2, m=2):
    entries = [[0.0, 0.0] for _ in range(n * m)]
    entries[(i - 1) * m + (j - 1)] = [1.0, 0.0]
    return {"rows": n, "cols": m, "entries": entries}


def matrix(*units):
    doc = E(*units[0])
    for u in units[1:]:
        for k, v in enumerate(E(*u)["entries"]):
            doc["entries"][k][0] += v[0]
    doc["kind"] = "matrix"
    return doc


UT2 = {"kind": "csl_pair", "A": {"dim": 2, "members": [[], [1], [1, 2]]},
       "B": {"dim": 2, "members": [[], [1], [1, 2]]}}
D2 = {"kind": "csl_pair", "A": {"dim": 2, "members": [[], [1], [2], [1, 2]]},
      "B": {"dim": 2, "members": [[], [1], [2], [1, 2]]}}


@pytest.fixture
def write(tmp_path):
    def _write(name, doc):
        path = tmp_path / name
        path.write_text(doc if isinstance(doc, str) else dumps(doc))
        return str(path)
    return _write


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip() else None), out.err


def subspace(*units):
    return {"kind": "subspace", "m": 2, "n": 2, "generators": [E(*u) for u in units]}


class TestClosure:
    def test_adds_missing_unit(self, capsys, write):
        code, doc, _ = run(capsys, "closure", write("g.json", subspace((1, 1), (2, 1), (1, 2))))
        assert code == 0 and doc["dim"] == 4 and doc["is_normalizing"]

    def test_already_closed(self, capsys, write):
        code, doc, _ = run(capsys, "closure", write("g.json", subspace((1, 2), (2, 1))))
        assert doc["dim"] == 2

    def test_empty(self, capsys, write):
        code, doc, _ = run(capsys, "closure", write("g.json", subspace()))
        assert code == 0 and doc["dim"] == 0 and doc["generators"] == []

    def test_schema_error(self, capsys, write):
        code, doc, err = run(capsys, "closure", write("g.json", {"kind": "subspace", "m": 2}))
        assert code == 2 and doc is None and "error" in err

    def test_bad_json(self, capsys, write):
        code, _, err = run(capsys, "closure", write("g.json", "{oops"))
        assert code == 2 and "invalid JSON" in err

    def test_size_cap(self, capsys, write, monkeypatch):
        monkeypatch.setenv("TROKIT_MAX_DIM", "1")
        code, _, err = run(capsys, "closure", write("g.json", subspace((1, 1))))
        assert code == 2 and "cap" in err


class TestPatternCheck:
    def test_parity(self, capsys, write):
        pairs = [[x, y] for x in range(1, 5) for y in range(1, 5) if (x - y) % 2 == 0]
        code, doc, _ = run(capsys, "pattern-check", write("p.json", {"kind": "pattern", "m": 4, "n": 4, "pairs": pairs}))
        assert doc["normalizing"] and doc["f"] == doc["g"] == [0, 1, 0, 1]

    def test_l_shape(self, capsys, write):
        code, doc, _ = run(capsys, "pattern-check", write("p.json", {"m": 2, "n": 2, "pairs": [[1, 1], [1, 2], [2, 1]]}))
        assert code == 0 and not doc["normalizing"] and doc["witness"] == [2, 2]

    def test_empty(self, capsys, write):
        code, doc, _ = run(capsys, "pattern-check", write("p.json", {"m": 2, "n": 3, "pairs": []}))
        assert doc["normalizing"] and doc["f"] == [None, None]

    def test_out_of_range(self, capsys, write):
        code, _, _ = run(capsys, "pattern-check", write("p.json", {"m": 2, "n": 2, "pairs": [[3, 1]]}))
        assert code == 2


class TestNormalizerCommands:
    def test_lower_unit_cover(self, capsys, write):
        code, doc, _ = run(capsys, "sn", "--cover", write("p.json", UT2), write("t.json", matrix((2, 1))))
        assert code == 0 and doc["verdict"] and doc["cover_dim"] == 2

    def test_cover_command(self, capsys, write):
        code, doc, _ = run(capsys, "cover", write("p.json", UT2), write("t.json", matrix((2, 1))))
        assert doc["verdict"] and doc["cover_dim"] == 2 and doc["failing_basis"] == []

    def test_failure_with_witness(self, capsys, write):
        code, doc, _ = run(capsys, "sn", write("p.json", D2), write("t.json", matrix((1, 1), (1, 2))))
        assert code == 0 and not doc["verdict"] and doc["witnesses"][0]["side"] == "B"

    def test_zero(self, capsys, write):
        zero = {"kind": "matrix", "rows": 2, "cols": 2, "entries": [[0, 0]] * 4}
        code, doc, _ = run(capsys, "cover", write("p.json", UT2), write("t.json", zero))
        assert doc["verdict"] and doc["cover_dim"] == 0

    def test_normalizer_mode(self, capsys, write):
        code, doc, _ = run(capsys, "sn", "--mode", "n", write("p.json", UT2), write("t.json", matrix((2, 1))))
        assert doc["verdict"] and doc["mode"] == "n"

    def test_dimension_mismatch(self, capsys, write):
        t = {"kind": "matrix", "rows": 1, "cols": 1, "entries": [[1, 0]]}
        code, _, _ = run(capsys, "sn", write("p.json", UT2), write("t.json", t))
        assert code == 2

    def test_sum(self, capsys, write):
        pair = write("p.json", D2)
        code, doc, _ = run(capsys, "sum", "--mode", "n", pair, write("t.json", matrix((1, 1))), write("s.json", matrix((1, 2))))
        assert not doc["verdict"] and doc["witnesses"]
        code, doc, _ = run(capsys, "sum", pair, write("t.json", matrix((1, 1))), write("s.json", matrix((2, 2))))
        assert doc["verdict"] and doc["cover_dim"] == 2 and doc["corollary_failures"] == 0


class TestMapAndDecompose:
    def test_map_indices(self, capsys, write):
        code, doc, _ = run(capsys, "map", write("u.json", subspace((2, 1))), "--indices", "1")
        assert doc["rank"] == 1 and doc["entries"][3] == [1.0, 0.0]

    def test_map_projection(self, capsys, write):
        code, doc, _ = run(capsys, "map", write("u.json", subspace((2, 1))), "--projection", write("p.json", matrix((2, 2))))
        assert doc["rank"] == 0

    def test_decompose(self, capsys, write):
        code, doc, _ = run(capsys, "decompose", write("u.json", subspace((1, 2), (2, 1))))
        assert sorted(map(tuple, ((tuple(b["columns"]), tuple(b["rows"])) for b in doc["blocks"]))) == [((1,), (2,)), ((2,), (1,))]

    def test_decompose_failure(self, capsys, write):
        code, _, err = run(capsys, "decompose", write("u.json", subspace((1, 1), (2, 1), (1, 2))))
        assert code == 2 and "x=2, y=2" in err


class TestGen:
    def test_pattern_is_deterministic(self, capsys):
        _, a, _ = run(capsys, "gen", "pattern", "--m", 4, "--n", 4, "--seed", 7)
        _, b, _ = run(capsys, "gen", "pattern", "--m", 4, "--n", 4, "--seed", 7)
        assert a == b and a["kind"] == "pattern" and a["seed"] == 7

    def test_tro(self, capsys):
        code, doc, _ = run(capsys, "gen", "tro", "--m", 3, "--n", 3, "--k", 2)
        assert doc["is_normalizing"] and doc["dim"] == len(doc["generators"])

    def test_nest(self, capsys):
        _, doc, _ = run(capsys, "gen", "lattice", "--dim", 3)
        assert doc["members"] == [[], [1], [1, 2], [1, 2, 3]]

    def test_csl_pair_and_matrix(self, capsys):
        _, doc, _ = run(capsys, "gen", "csl_pair", "--dim", 4, "--seed", 3)
        assert set(doc) >= {"A", "B"}
        _, doc, _ = run(capsys, "gen", "matrix", "--m", 2, "--n", 3)
        assert doc["rows"] == 3 and doc["cols"] == 2

    def test_cap(self, capsys):
        code, _, _ = run(capsys, "gen", "pattern", "--m", 17, "--n", 2)
        assert code == 2


class TestVerify:
    def test_pattern_oracle(self, capsys):
        code, doc, err = run(capsys, "verify", "pattern-oracle")
        assert code == 0 and doc["ok"] and doc["instances"] == 512
        assert "PASS" in err

    def test_deterministic_without_timing(self, capsys):
        args = ("verify", "--suite", "tro-reflexive", "--instances", 5, "--seed", 3, "--no-timing")
        _, a, _ = run(capsys, *args)
        _, b, _ = run(capsys, *args)
        assert a == b and "wall_time" not in a

    def test_unknown_suite(self, capsys):
        code, _, err = run(capsys, "verify", "nope")
        assert code == 2 and "unknown suite" in err

    def test_out_file(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        code, doc, _ = run(capsys, "verify", "fixture", "--out", out)
        assert code == 0 and doc is None
        assert json.loads(out.read_text())["ok"]


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "trokit.cli", "gen", "lattice", "--dim", "2"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["members"] == [[], [1], [1, 2]]
