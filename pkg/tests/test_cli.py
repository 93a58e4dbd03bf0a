import csv
import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from densitybayes.cli import build_parser, main
from densitybayes.conditional import cond_full
from densitybayes.io import write_json, write_matrix
from densitybayes.symmat import random_spd
from densitybayes.tensor import random_entangled_joint

MIX = [[0.35, 0.15], [0.15, 0.65]]


def matrix_file(path, data, kind="symmetric"):
    data = np.asarray(data, dtype=float)
    write_json(path, {"n": data.shape[0], "kind": kind, "data": data.ravel().tolist()})
    return str(path)


def load(path):
    return json.loads(path.read_text())


class TestFigure:
    @pytest.mark.parametrize("name", ["fig1", "fig2", "fig3", "fig4", "fig5"])
    def test_writes_files(self, tmp_path, name, capsys):
        assert main(["figure", name, "--out", str(tmp_path)]) == 0
        ET.parse(tmp_path / f"{name}.svg")
        assert (tmp_path / f"{name}.csv").exists()

    def test_commuting_flag(self, tmp_path):
        assert main(["--out", str(tmp_path), "figure", "fig3", "--commuting"]) == 0


class TestCheck:
    def test_pass(self, tmp_path, capsys):
        assert main(["check", "--seed", "0", "--trials", "20", "--out", str(tmp_path)]) == 0
        report = load(tmp_path / "check_report.json")
        assert report["failures"] == [] and report["passed"]
        out = capsys.readouterr().out
        assert out.count("PASS") == len(report["properties"])

    def test_inject_bad(self, tmp_path, capsys):
        assert main(["check", "--trials", "5", "--inject-bad", "--out", str(tmp_path)]) == 1
        assert load(tmp_path / "check_report.json")["failures"] == ["gleason.density_trace"]
        assert "FAIL gleason.density_trace" in capsys.readouterr().out

    def test_deterministic(self, tmp_path):
        for sub in ("a", "b"):
            main(["check", "--seed", "9", "--trials", "5", "--out", str(tmp_path / sub)])
        assert (tmp_path / "a" / "check_report.json").read_bytes() == \
            (tmp_path / "b" / "check_report.json").read_bytes()

    def test_unknown_suite(self, tmp_path, capsys):
        assert main(["check", "--suite", "bogus", "--out", str(tmp_path)]) == 2
        assert capsys.readouterr().err.startswith("IoError")


class TestBayes:
    def test_diagonal(self, tmp_path):
        prior = matrix_file(tmp_path / "p.json", np.diag([0.5, 0.3, 0.2]), "density")
        like = matrix_file(tmp_path / "l.json", np.diag([0.1, 0.6, 0.3]))
        assert main(["bayes", "--prior", prior, "--likelihood", like, "--out", str(tmp_path)]) == 0
        out = load(tmp_path / "bayes.json")
        raw = np.array([0.05, 0.18, 0.06])
        assert out["evidence"] == pytest.approx(raw.sum(), abs=1e-15)
        np.testing.assert_allclose(np.array(out["posterior"]["data"]).reshape(3, 3), np.diag(raw / raw.sum()),
                                   atol=1e-15)

    def test_zero_evidence(self, tmp_path, capsys):
        prior = matrix_file(tmp_path / "p.json", np.diag([1.0, 0.0]), "density")
        like = matrix_file(tmp_path / "l.json", np.diag([0.0, 1.0]))
        assert main(["bayes", "--prior", prior, "--likelihood", like, "--out", str(tmp_path)]) == 2
        assert capsys.readouterr().err.startswith("ZeroEvidence:")

    def test_missing_file(self, tmp_path, capsys):
        like = matrix_file(tmp_path / "l.json", np.eye(2))
        code = main(["bayes", "--prior", str(tmp_path / "nope.json"), "--likelihood", like,
                     "--out", str(tmp_path / "o")])
        assert code == 2 and "IoError" in capsys.readouterr().err
        assert not (tmp_path / "o").exists()

    def test_bad_density(self, tmp_path, capsys):
        prior = matrix_file(tmp_path / "p.json", np.eye(2), "density")
        like = matrix_file(tmp_path / "l.json", np.eye(2))
        assert main(["bayes", "--prior", prior, "--likelihood", like, "--out", str(tmp_path)]) == 2
        assert capsys.readouterr().err.startswith("NotDensity:")


class TestOdot:
    def test_identity_echo(self, tmp_path):
        left = matrix_file(tmp_path / "a.json", MIX)
        right = matrix_file(tmp_path / "b.json", np.eye(2))
        assert main(["odot", "--left", left, "--right", right, "--out", str(tmp_path)]) == 0
        out = load(tmp_path / "odot.json")
        np.testing.assert_allclose(np.array(out["data"]).reshape(2, 2), MIX, atol=1e-14)
        assert out["common_range_dim"] == 2


class TestEm:
    def test_round_trip(self, tmp_path):
        j = random_entangled_joint(2, 2, seed=1)
        path = write_matrix(tmp_path / "c.json", cond_full(j))
        assert main(["em", "--conditional", str(path), "--out", str(tmp_path)]) == 0
        out = load(tmp_path / "em.json")
        assert out["converged"]
        got = np.array(out["reconstructed_joint"]["data"]).reshape(4, 4)
        assert np.linalg.norm(got - j.data) <= 1e-6
        with open(tmp_path / "em_iterations.csv") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == out["iterations"] + 1

    def test_needs_dims(self, tmp_path, capsys):
        path = matrix_file(tmp_path / "c.json", np.eye(4))
        assert main(["em", "--conditional", path, "--out", str(tmp_path)]) == 2


class TestFlow:
    @pytest.fixture
    def inputs(self, tmp_path):
        p = random_spd(3, seed=1)
        prior = matrix_file(tmp_path / "p.json", p.data / p.trace(), "density")
        like = matrix_file(tmp_path / "l.json", random_spd(3, seed=2).data)
        return prior, like

    def test_ode_vs_closed(self, tmp_path, inputs):
        prior, like = inputs
        args = ["flow", "--prior", prior, "--likelihood", like, "--t", "1", "--steps", "1000"]
        assert main(args + ["--mode", "closed", "--out", str(tmp_path / "c")]) == 0
        assert main(args + ["--mode", "ode", "--out", str(tmp_path / "o")]) == 0
        report = load(tmp_path / "o" / "flow.json")
        assert report["closed_form_gap"] <= 1e-6
        closed = np.array(load(tmp_path / "c" / "flow.json")["final_state"])
        ode = np.array(report["final_state"])
        assert np.linalg.norm(closed - ode) <= 1e-6

    def test_csv_shape(self, tmp_path, inputs):
        prior, like = inputs
        assert main(["flow", "--prior", prior, "--likelihood", like, "--steps", "10", "--out", str(tmp_path)]) == 0
        with open(tmp_path / "flow.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][0] == "t" and rows[0][-1] == "overlap"
        assert len(rows) == 12 and len({len(r) for r in rows}) == 1

    def test_conjugate(self, tmp_path):
        prior = matrix_file(tmp_path / "p.json", np.diag([1.0, 0.0]), "density")
        write_json(tmp_path / "k.json", {"n": 2, "data": [0.0, -1.0, 1.0, 0.0]})
        code = main(["flow", "--mode", "conjugate", "--prior", prior, "--likelihood", str(tmp_path / "k.json"),
                     "--t", str(np.pi / 2), "--steps", "4", "--out", str(tmp_path)])
        assert code == 0
        np.testing.assert_allclose(load(tmp_path / "flow.json")["final_state"], np.diag([0.0, 1.0]), atol=1e-10)

    def test_not_skew(self, tmp_path, capsys):
        prior = matrix_file(tmp_path / "p.json", np.diag([1.0, 0.0]), "density")
        like = matrix_file(tmp_path / "l.json", np.eye(2))
        code = main(["flow", "--mode", "conjugate", "--prior", prior, "--likelihood", like, "--out", str(tmp_path)])
        assert code == 2 and capsys.readouterr().err.startswith("NotSkew")


def test_global_flags_either_side():
    p = build_parser()
    a = p.parse_args(["--seed", "7", "check"])
    b = p.parse_args(["check", "--seed", "7"])
    assert a.seed == b.seed == 7


def test_seed_range():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["check", "--seed", "-1"])


def test_module_entry(tmp_path):
    r = subprocess.run([sys.executable, "-m", "densitybayes", "figure", "fig1", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and (tmp_path / "fig1.json").exists()
