import json
import shutil
import subprocess

import numpy as np
import pytest

from nsdressing.cli import main
from nsdressing.configio import SCHEMA_VERSION

ONE = {"lambdas": [[0, 1]], "coupling": [[1]]}
TWO = {"lambdas": [[0.5, 1.2], [-0.7, -0.8]], "coupling": [[1, [0.3, 0.2]], [[0.3, -0.2], -1.5]]}


@pytest.fixture
def write(tmp_path):
    def _w(doc, name="cfg.json"):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return str(p)

    return _w


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    lines = text.splitlines()
    meta = [line for line in lines if line.startswith("#")]
    body = [line for line in lines if not line.startswith("#")]
    return meta, body[0].split(","), np.array([[float(v) for v in r.split(",")] for r in body[1:]])


class TestValidate:
    def test_ok(self, capsys, write):
        code, out, _ = run(capsys, "validate", "--config", write(ONE))
        assert code == 0 and json.loads(out)["ok"]

    def test_non_hermitian(self, capsys, write):
        doc = {"lambdas": [[0, 1], [0, 0.5]], "coupling": [[1, 0.2], [0.3, 1]]}
        code, out, _ = run(capsys, "validate", "--config", write(doc))
        assert code == 2 and "hermiticity" in out

    def test_definiteness_names_indices(self, capsys, write):
        doc = {"lambdas": [[0, 1], [0, 0.5], [0, -0.7]], "coupling": [[1, 2, 0], [2, 1, 0], [0, 0, -1]]}
        code, out, _ = run(capsys, "validate", "--config", write(doc))
        assert code == 2
        bad = [v for v in json.loads(out)["violations"] if v["kind"] == "definiteness"]
        assert bad and bad[0]["indices"] == [0, 1]

    def test_malformed_json(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert run(capsys, "validate", "--config", str(p))[0] == 2

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "validate", "--config", str(tmp_path / "none.json"))[0] == 2


class TestPotential:
    def test_one_soliton(self, capsys, write):
        doc = dict(ONE, grid={"x1_min": -3, "x1_max": 3, "x1_steps": 61, "x2_min": -1, "x2_max": 1, "x2_steps": 3})
        code, out, _ = run(capsys, "potential", "--config", write(doc))
        assert code == 0
        meta, cols, rows = read_csv(out)
        assert meta[0] == f"# schema_version={SCHEMA_VERSION}"
        assert cols == ["x1", "x2", "u"]
        assert rows.shape == (183, 3)
        assert np.max(np.abs(rows[:, 2] + 2 / np.cosh(rows[:, 0] - np.log(2) / 2) ** 2)) <= 1e-12
        i = np.argmin(rows[:, 2])
        assert rows[i, 2] == pytest.approx(-2, abs=1e-2)
        assert abs(rows[i, 0] - np.log(2) / 2) <= 0.05

    def test_no_solitons(self, capsys, write):
        code, out, _ = run(capsys, "potential", "--config", write({"lambdas": [], "coupling": []}))
        assert code == 0
        assert np.all(read_csv(out)[2][:, 2] == 0)

    def test_byte_stable(self, capsys, write, tmp_path):
        cfg = write(dict(TWO, grid={"x1_steps": 21, "x2_min": -1, "x2_max": 1, "x2_steps": 5}))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(capsys, "potential", "--config", cfg, "--out", str(a))[0] == 0
        assert run(capsys, "potential", "--config", cfg, "--out", str(b), "--threads", "4")[0] == 0
        assert a.read_bytes() == b.read_bytes()
        assert b"\r" not in a.read_bytes()

    def test_full_precision(self, capsys, write):
        code, out, _ = run(capsys, "potential", "--config", write(dict(ONE, grid={"x1_steps": 3})))
        token = out.splitlines()[-1].split(",")[2]
        assert token == "%.17g" % float(token)
        assert float(token) == pytest.approx(-2 / np.cosh(10 - np.log(2) / 2) ** 2, rel=1e-12)

    def test_json(self, capsys, write):
        code, out, _ = run(capsys, "potential", "--config", write(dict(ONE, grid={"x1_steps": 5})), "--format", "json")
        doc = json.loads(out)
        assert code == 0 and doc["columns"] == ["x1", "x2", "u"] and len(doc["rows"]) == 5

    def test_invalid_config_exit(self, capsys, write):
        doc = {"lambdas": [[0, 1]], "coupling": [[-1]]}
        assert run(capsys, "potential", "--config", write(doc))[0] == 2

    def test_bad_threads(self, capsys, write):
        assert run(capsys, "potential", "--config", write(ONE), "--threads", "0")[0] == 2


class TestJost:
    def test_files_per_k(self, capsys, write, tmp_path):
        doc = dict(TWO, grid={"x1_steps": 11}, k_samples=[[0.3, 0.4], [-0.2, -0.5]])
        out = tmp_path / "phi.csv"
        assert run(capsys, "jost", "--config", write(doc), "--out", str(out))[0] == 0
        for i in (0, 1):
            text = (tmp_path / f"phi_k{i}.csv").read_text()
            meta, cols, rows = read_csv(text)
            assert cols == ["x1", "x2", "re", "im"] and rows.shape == (11, 4)
            assert any(m.startswith("# k=") for m in meta)

    def test_single_k_uses_out(self, capsys, write, tmp_path):
        doc = dict(ONE, grid={"x1_steps": 3}, k_samples=[[0, 2]])
        out = tmp_path / "phi.csv"
        assert run(capsys, "jost", "--config", write(doc), "--out", str(out))[0] == 0
        _, _, rows = read_csv(out.read_text())
        assert rows.shape == (3, 4)

    def test_requires_k(self, capsys, write):
        assert run(capsys, "jost", "--config", write(ONE))[0] == 2

    def test_excluded_line(self, capsys, write):
        doc = dict(ONE, k_samples=[[0.3, -1]])
        assert run(capsys, "jost", "--config", write(doc))[0] == 2


class TestRays:
    def test_one_soliton(self, capsys, write):
        code, out, _ = run(capsys, "rays", "--config", write(ONE))
        rays = json.loads(out)["rays"]
        assert code == 0
        assert rays[0]["shift"] == pytest.approx(1) and rays[0]["depth"] == -2

    def test_fits(self, capsys, write):
        doc = dict(TWO, output={"fit_x2": [100, -100]})
        code, out, _ = run(capsys, "rays", "--config", write(doc))
        assert code == 0
        fits = [f for r in json.loads(out)["rays"] for f in r.get("fitted", [])]
        assert len(fits) == 4 and max(f["eps_error"] for f in fits) <= 1e-3

    def test_coincident_real_parts(self, capsys, write):
        doc = {"lambdas": [[0, 1], [0, 0.5]], "coupling": [[1, 0], [0, 1]]}
        assert run(capsys, "rays", "--config", write(doc))[0] == 2


class TestSpectral:
    def test_one_soliton(self, capsys, write):
        doc = dict(ONE, k_samples=[[0, 2]], output={"jump_k": [0.7]})
        code, out, _ = run(capsys, "spectral", "--config", write(doc))
        doc = json.loads(out)
        assert code == 0
        assert doc["d"] == [[[2.0, 0.0]]]
        assert doc["samples"][0]["a_N"] == pytest.approx([1 / 3, 0])
        assert doc["jump"][0]["residual"] <= 1e-5


class TestVerify:
    @pytest.mark.parametrize("suite", ["pde", "wronskian", "sign", "relation"])
    def test_suites_pass(self, capsys, write, suite):
        doc = dict(TWO, grid={"x1_min": -2, "x1_max": 2, "x2_min": -2, "x2_max": 2})
        code, out, _ = run(capsys, "verify", "--config", write(doc), "--suite", suite)
        assert code == 0 and json.loads(out)["ok"]

    def test_oracle(self, capsys, write):
        doc = dict(ONE, grid={"x1_min": -2, "x1_max": 2, "x2_min": -1, "x2_max": 1}, output={"n_points": 3})
        assert run(capsys, "verify", "--config", write(doc), "--suite", "oracle")[0] == 0

    def test_flipped_sign_is_config_error(self, capsys, write):
        doc = {"lambdas": [[0, 1]], "coupling": [[-1]]}
        code, _, err = run(capsys, "verify", "--config", write(doc), "--suite", "pde")
        assert code == 2 and "definiteness" in err

    def test_unknown_suite_rejected_by_parser(self, write):
        with pytest.raises(SystemExit):
            main(["verify", "--config", write(ONE), "--suite", "nope"])


class TestOracleCompare:
    def test_two_soliton(self, capsys, write):
        doc = dict(TWO, grid={"x1_min": -2, "x1_max": 2, "x2_min": -1, "x2_max": 1},
                   k_samples=[[0.3, 0.45]], output={"n_points": 4})
        code, out, _ = run(capsys, "oracle-compare", "--config", write(doc))
        res = json.loads(out)
        assert code == 0 and res["ok"] and max(res["max_rel"].values()) <= 1e-6


def test_console_script(write):
    exe = shutil.which("nsdressing")
    if exe is None:
        pytest.skip("console script not installed")
    proc = subprocess.run([exe, "validate", "--config", write(ONE)], capture_output=True, text=True)
    assert proc.returncode == 0


def test_born_truncated_background_reports_numeric_failure(capsys, write):
    doc = {"lambdas": [[0.2, 1.1]], "coupling": [[1]],
           "background": {"type": "gaussian", "amplitude": 0.1, "widths": [1, 1]},
           "grid": {"x1_min": -1, "x1_max": 1, "x2_min": 0.5, "x2_max": 0.5}, "output": {"n_points": 2}}
    code, out, _ = run(capsys, "verify", "--config", write(doc), "--suite", "pde")
    res = json.loads(out)["results"]["pde:Phi_N"]
    assert code == 3 and 1e-6 < res["max_rel"] < 5e-2
