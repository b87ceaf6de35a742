import json

import pytest

from nearperm.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def build(capsys, tmp_path, name, *params):
    path = tmp_path / f"{name}.json"
    code, _ = run(capsys, "catalog", "build", name, *params, "--out", str(path))
    assert code == 0
    return str(path)


def test_catalog_list(capsys):
    code, out = run(capsys, "catalog", "list")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == "nearperm/1"
    assert {"X_ms", "K", "houghton", "scott_tower"} <= {e["name"] for e in doc["entries"]}


def test_build_then_classify(capsys, tmp_path):
    path = build(capsys, tmp_path, "X_ms", "--m", "2", "--s", "0", "0")
    code, out = run(capsys, "classify-z2", "--in", path)
    doc = json.loads(out)
    assert code == 0
    assert {k: doc[k] for k in ("ends", "components")} == \
        {"ends": 1, "components": [{"winding": 2, "holonomy": [0, 0]}]}


def test_classify_writes_dot(capsys, tmp_path):
    path = build(capsys, tmp_path, "X_ms", "--m", "3", "--s", "1", "-2")
    dot = tmp_path / "g.dot"
    code, out = run(capsys, "classify-z2", "--in", path, "--dot", str(dot))
    assert code == 0 and json.loads(out)["components"][0]["holonomy"] == [1, -2]
    assert dot.read_text().startswith("digraph")


def test_classify_from_stdin(capsys, tmp_path, monkeypatch):
    import io
    path = build(capsys, tmp_path, "K", "--l", "2")
    monkeypatch.setattr("sys.stdin", io.StringIO(open(path).read()))
    code, out = run(capsys, "classify-z2")
    assert code == 0 and json.loads(out)["components"] == [{"winding": 1, "holonomy": [2, 0]}]


def test_invariants_of_K1(capsys, tmp_path):
    path = build(capsys, tmp_path, "K", "--l", "1")
    code, out = run(capsys, "invariants", "--in", path)
    doc = json.loads(out)
    assert code == 0
    assert doc["index_character"] == [0, -1]
    assert doc["index_number"] == 1 and doc["ends"] == 1


def test_verify_broken_file(capsys, tmp_path):
    path = build(capsys, tmp_path, "simply_transitive")
    doc = json.load(open(path))
    # replace v by a map that flips x: the commutator with u is infinite
    piece = doc["lifts"]["v"]["pieces"][0]
    piece["P"] = [[-1, 0], [0, 1]]
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(doc))
    code, out = run(capsys, "verify", "--in", str(broken))
    assert code == 1 and json.loads(out)["ok"] is False
    code, out = run(capsys, "verify", "--in", path, "--genuine")
    assert code == 0 and json.loads(out)["genuine"] is True


@pytest.mark.parametrize("content", ["{not json", "[1, 2]", '{"schema": "nearperm/1"}'])
def test_malformed_input(capsys, tmp_path, content):
    bad = tmp_path / "bad.json"
    bad.write_text(content)
    code, out = run(capsys, "invariants", "--in", str(bad))
    doc = json.loads(out)
    assert code == 1 and doc["schema"] == "nearperm/1" and "error" in doc


def test_bad_flags(capsys):
    assert main(["catalog", "build", "nope"]) == 1
    assert main(["amalgam", "--p", "4", "--n", "4"]) == 1
    assert main(["no-such-verb"]) == 1
    capsys.readouterr()


def test_schreier(capsys, tmp_path):
    path = build(capsys, tmp_path, "free_orbits", "--d", "1", "--k", "2")
    code, out = run(capsys, "schreier", "--in", path, "--radius", "3")
    assert code == 0 and json.loads(out)["components"] == 2
    code, out = run(capsys, "schreier", "--in", path, "--radius", "2", "--format", "dot")
    assert code == 0 and out.startswith("digraph")


def test_amalgam(capsys):
    code, out = run(capsys, "amalgam", "--p", "2", "--n", "2", "--L", "6", "--enlargements", "5")
    doc = json.loads(out)
    assert code == 0
    assert doc["invariant"] == 1 and doc["doubled_invariant"] == 0
    assert doc["realizable_window_invariant"] == 0 and doc["enlargements"] == [1] * 5


def test_qcyclic(capsys):
    code, out = run(capsys, "qcyclic", "--m", "2", "--q", "1", "1", "2", "--n", "3")
    doc = json.loads(out)
    assert code == 0 and doc["residues"] == [0, 0, 0] and doc["oracle"][-1] == 8
    code, out = run(capsys, "qcyclic", "--m", "2", "--digits", "0", "1", "1", "5")
    doc = json.loads(out)
    assert doc["blocks"] == [1, 0, 1] and doc["residues"] == [1, 1, 5]
    assert main(["qcyclic", "--m", "2", "--digits", "0", "1", "0"]) == 1
    capsys.readouterr()


def test_rigidity(capsys, tmp_path):
    path = build(capsys, tmp_path, "simply_transitive")
    code, out = run(capsys, "rigidity", "--beta", path)
    assert code == 0 and json.loads(out)["support_size"] == 0
    far = build(capsys, tmp_path, "plane_split_pair")
    code, out = run(capsys, "rigidity", "--beta", far)
    doc = json.loads(out)
    assert code == 2 and doc["error"]["report"]["reason"] == "not_near_equal"


def test_growth(capsys, tmp_path):
    path = build(capsys, tmp_path, "X_ms", "--m", "2")
    code, out = run(capsys, "growth", "--in", path, "--basepoint", "0", "0", "0", "--r", "6", "20")
    doc = json.loads(out)
    assert code == 0 and doc["ok"] and doc["rank"] == 2


def test_output_is_deterministic(capsys, tmp_path):
    outs = []
    for _ in range(2):
        code, out = run(capsys, "amalgam", "--p", "3", "--n", "3", "--L", "4",
                        "--enlargements", "4", "--seed", "11")
        outs.append(out)
    assert outs[0] == outs[1]
    a = build(capsys, tmp_path, "X_ms", "--m", "2", "--s", "1", "1")
    assert open(a).read() == open(build(capsys, tmp_path, "X_ms", "--m", "2", "--s", "1", "1")).read()
