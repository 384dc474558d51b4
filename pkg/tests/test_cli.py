import json

import numpy as np
import pytest

from hyperprop import io
from hyperprop.cli import main, planted_partition
from hyperprop.energy import RealArray, gse_energy, gse_graph


def _run(argv, tmp_path, capsys=None):
    code = main(argv + ["--out-dir", str(tmp_path / "out"), "--no-figures"])
    return code


def _report(tmp_path, name):
    rep = json.loads((tmp_path / "out" / f"{name}.json").read_text())
    rep.pop("timing")
    return rep


def _cfg(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_version(capsys):
    assert main(["--version"]) == 0
    assert "hyperprop" in capsys.readouterr().out


def test_empty_run_is_an_empty_report(tmp_path):
    cfg = _cfg(tmp_path, "[run]\nsuites =\n")
    assert _run(["run", "--config", cfg], tmp_path) == 0
    rep = _report(tmp_path, "run")
    assert rep["passed"] and rep["checks"] == [] and rep["suites"] == []


def test_sandwich_suite_passes(tmp_path):
    assert _run(["sandwich", "--count", "30"], tmp_path) == 0
    rep = _report(tmp_path, "sandwich")
    assert rep["passed"] and rep["checks"]


def test_malformed_file_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 3 1 2\n1 x 1\n")
    J = tmp_path / "J.txt"
    J.write_text("2 2\n0 1 1 0\n")
    assert _run(["gse", str(bad), str(J)], tmp_path) == 2
    err = capsys.readouterr().err
    assert f"{bad}:2:" in err and err.startswith("error:")


def test_bad_config_exit_2(tmp_path, capsys):
    cfg = _cfg(tmp_path, "[limits]\nnot_a_limit = 3\n")
    assert _run(["bounds", "--config", cfg], tmp_path) == 2
    cfg2 = _cfg(tmp_path, "[run\n", "broken.ini")
    assert _run(["run", "--config", cfg2], tmp_path) == 2
    assert "broken.ini" in capsys.readouterr().err


def test_unknown_suite_exit_2(tmp_path):
    cfg = _cfg(tmp_path, "[run]\nsuites = nope\n")
    assert _run(["run", "--config", cfg], tmp_path) == 2


def test_gen_is_deterministic(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for p in (a, b):
        assert _run(["gen", "random-hypergraph", "--r", "3", "--n", "8", "--seed", "5", "-o", str(p)], tmp_path) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.txt"
    _run(["gen", "random-kernel", "--r", "2", "--t", "3", "--k", "2", "--seed", "5", "-o", str(c)], tmp_path)
    d = tmp_path / "d.txt"
    _run(["gen", "random-kernel", "--r", "2", "--t", "3", "--k", "2", "--seed", "5", "-o", str(d)], tmp_path)
    assert c.read_bytes() == d.read_bytes()


def test_gen_n_equals_r(tmp_path):
    out = tmp_path / "g.txt"
    assert _run(["gen", "random-hypergraph", "--r", "3", "--n", "3", "--p", "1", "-o", str(out)], tmp_path) == 0
    G = io.read("hypergraph", out)
    assert G.m == 1 and set(G.edges) == {(0, 1, 2)}
    assert _run(["gen", "random-hypergraph", "--r", "3", "--n", "2", "-o", str(out)], tmp_path) == 2


def test_planted_partition_local_search():
    G = planted_partition(60, 0.1, 0.9, np.random.default_rng(0))
    J = RealArray(np.array([[0, 1], [1, 0]], dtype=object))
    planted = [0 if v < 30 else 1 for v in range(60)]
    target = gse_energy(G, J, planted)
    value, _ = gse_graph(G, J, mode="local", seed=0)
    assert abs(float(value) - float(target)) <= 0.02


def test_reports_reproducible(tmp_path):
    cfg = _cfg(tmp_path, "[run]\nsuites = bounds, tv\nseed = 3\n[suite:tv]\ncount = 10\n")
    outs = []
    for jobs in ("1", "2"):
        d = tmp_path / f"o{jobs}"
        assert main(["run", "--config", cfg, "--jobs", jobs, "--out-dir", str(d), "--format", "csv"]) == 0
        rep = json.loads((d / "run.json").read_text())
        rep.pop("timing")
        csvs = {p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))}
        outs.append((rep, csvs))
    assert outs[0] == outs[1]
    assert outs[0][1] and outs[0][0]["seed"] == 3
    assert (tmp_path / "o1" / "bounds.png").exists()


def test_failing_check_exit_1(tmp_path, capsys):
    G = tmp_path / "g.txt"
    main(["gen", "random-hypergraph", "--n", "20", "--seed", "1", "-o", str(G), "--out-dir", str(tmp_path)])
    code = _run(["transfer", str(G), "--q", "8", "--delta", "0.0001"], tmp_path)
    assert code == 1
    assert "failing check: stage" in capsys.readouterr().err
    assert not _report(tmp_path, "transfer")["passed"]


def test_single_file_commands(tmp_path):
    K = tmp_path / "k.txt"
    K.write_text("2 2 0\n1/2 1/2\n1 -1 -1 1\n")
    assert _run(["norm", str(K)], tmp_path) == 0
    rep = _report(tmp_path, "norm")
    assert rep["data"]["value"] == "1/4" and rep["data"]["channels"][0]["boxplus"] == "1"
    G = tmp_path / "g.txt"
    G.write_text("2 4 6 2\n1 2 1\n1 3 1\n1 4 1\n2 3 1\n2 4 1\n3 4 1\n")
    assert _run(["dist", str(G), "--property", "triangle-free"], tmp_path) == 0
    assert _report(tmp_path, "dist")["data"]["value"] == "1/8"
    assert _run(["fo", str(G), "--exists", "u", "--forall", "v", "--matrix", "(or (= u v) (adj u v))"],
                tmp_path) == 0
    assert _report(tmp_path, "fo")["data"]["value"] is True


@pytest.mark.parametrize("argv", [["norm"], ["nosuch"], ["gse", "--mode", "weird", "a", "b"]])
def test_argument_errors(argv, tmp_path):
    assert _run(argv, tmp_path) == 2
