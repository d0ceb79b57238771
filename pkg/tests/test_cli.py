import json

import pytest

from qrea.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def write(tmp_path, obj, name="in.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


@pytest.mark.parametrize("suite", ["braid", "rea", "reps"])
def test_verify_suites_pass_at_n2(suite, capsys):
    code, rep = run(["verify", "--suite", suite, "--n", "2"], capsys)
    assert code == EXIT_OK
    assert rep["passed"] and rep["checks"]
    assert all(c["passed"] for c in rep["checks"])


def test_verify_braid_n3(capsys):
    code, rep = run(["verify", "--suite", "braid", "--n", "3"], capsys)
    assert code == EXIT_OK and rep["n"] == 3


def test_verify_input_errors(capsys):
    assert run(["verify", "--suite", "nope"], capsys)[0] == EXIT_INPUT
    assert run(["verify", "--suite", "rea", "--n", "9"], capsys)[0] == EXIT_INPUT
    assert run(["verify", "--q", "1.5"], capsys)[0] == EXIT_INPUT
    assert run(["frobnicate"], capsys)[0] == EXIT_INPUT


def test_build_antidiagonal_alpha(tmp_path, capsys):
    spec = {"q": 0.5, "base": {"character": {"N": 2, "k": 0, "l": 1, "a": 1.0, "c": 1.0, "y": [0.0]}},
            "chain": [{"alpha": 1, "d": 16}]}
    code, rep = run(["build", "--in", write(tmp_path, spec)], capsys)
    assert code == EXIT_OK
    assert rep["shapes_match"]
    assert rep["reflection_residual"] <= 1e-8
    assert rep["central_values"] == pytest.approx([0.0, -1.0], abs=1e-8)
    assert len(rep["pieces"]) == len(rep["predicted_shapes"])


def test_build_verma(tmp_path, capsys):
    spec = {"base": {"verma": {"eps": [1, 1], "r": [0.0, 1.0], "cutoff": 6}}}
    code, rep = run(["build", "--in", write(tmp_path, spec)], capsys)
    assert code == EXIT_OK
    assert rep["shape"]["tau"] == [1, 2]
    assert rep["central_values"] == pytest.approx([1 + 0.5 ** 4, 0.5 ** 4])


def test_build_rejects_non_adapted_weight(tmp_path, capsys):
    spec = {"base": {"verma": {"eps": [1, 1], "r": [0.0, -0.5], "cutoff": 6}}}
    code, rep = run(["build", "--in", write(tmp_path, spec)], capsys)
    assert code == EXIT_INPUT and "error" in rep


def test_build_input_errors(tmp_path, capsys):
    assert run(["build"], capsys)[0] == EXIT_INPUT
    assert run(["build", "--in", str(tmp_path / "missing.json")], capsys)[0] == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["build", "--in", str(bad)], capsys)[0] == EXIT_INPUT
    assert run(["build", "--in", write(tmp_path, [1, 2])], capsys)[0] == EXIT_INPUT


def test_classify_valid_and_invalid(tmp_path, capsys):
    shape = {"n": 2, "tau": [1, 2], "u": [{"sign": 1}, {"sign": 1}]}
    code, rep = run(["classify", "--in", write(tmp_path, {"shape": shape, "central": [1.25, 0.25]})], capsys)
    assert code == EXIT_OK and rep["valid"] and rep["signature"] == [2, 0, 0]
    assert rep["weight"]["r"] == pytest.approx([0.0, 0.0])
    code, rep = run(["classify", "--in", write(tmp_path, {"shape": shape, "central": [0.0, 1.0]})], capsys)
    assert code == EXIT_FAIL and not rep["valid"]


def test_classify_central_from_flag(tmp_path, capsys):
    shape = {"n": 2, "tau": [1, 2], "u": [{"sign": 1}, {"sign": 1}]}
    path = write(tmp_path, {"shape": shape})
    code, rep = run(["classify", "--in", path, "--central", "1.25", "0.25"], capsys)
    assert code == EXIT_OK
    assert run(["classify", "--in", path], capsys)[0] == EXIT_INPUT


def test_classify_rejects_non_self_adjoint(tmp_path, capsys):
    shape = {"n": 2, "tau": [2, 1], "u": [{"sign": 1}, {"phase": 0.25}]}
    code, rep = run(["classify", "--in", write(tmp_path, {"shape": shape, "central": [0.0, -1.0]})], capsys)
    assert code == EXIT_INPUT and "self-adjoint" in rep["error"]
    code, rep = run(["classify", "--in", write(tmp_path, {"shape": {"n": 2}, "central": [1, 1]})], capsys)
    assert code == EXIT_INPUT


def test_classify_enumerate(capsys):
    code, rep = run(["classify", "--enumerate", "--n", "4", "--rank", "4", "--finite", "--limit", "1"], capsys)
    assert code == EXIT_OK
    assert len(rep["families"]) == 3
    assert all(len(l["signature"]) == 3 for l in rep["labels"])


def test_output_is_deterministic(tmp_path, capsys):
    argv = ["verify", "--suite", "rea", "--n", "2", "--seed", "3"]
    first = run(argv, capsys)
    second = run(argv, capsys)
    assert first == second
    out = tmp_path / "o.json"
    assert main(argv + ["--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text()) == first[1]
