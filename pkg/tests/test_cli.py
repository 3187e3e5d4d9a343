import json
import math

import numpy as np
import pytest

from isoyamabe import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def csv_rows(out):
    lines = [l for l in out.splitlines() if l and not l.startswith("#")]
    header = lines[0].split(",")
    return header, [l.split(",") for l in lines[1:]]


def csv_preamble(out):
    fields = {}
    for line in out.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(" = ")
            fields[key] = value
    return fields


class TestCatalog:
    def test_csv_listing(self, capsys):
        code, out, _ = run(capsys, "catalog")
        assert code == 0
        header, rows = csv_rows(out)
        assert header == ["name", "dim", "kf", "proper", "t_min", "t_max"]
        byname = {r[0]: r for r in rows}
        assert byname["sphere-x1-3"][1:3] == ["3", "0"]
        assert byname["sphere-quad-2-2"][2] == "1"

    def test_json_round_trip(self, capsys):
        code, out, _ = run(capsys, "catalog", "--format", "json")
        assert code == 0
        entries = json.loads(out)
        assert {e["name"] for e in entries} >= {"sphere-x1-3", "s2xs2"}
        assert all(set(e) == {"name", "dim", "kf", "proper", "interval"}
                   for e in entries)

    def test_unknown_subcommand(self, capsys):
        assert cli.main(["frobnicate"]) == 2


class TestSpectrum:
    def test_sphere_values(self, capsys):
        code, out, _ = run(capsys, "spectrum", "--system", "sphere-x1-3",
                           "--k", "3", "--grid", "2000")
        assert code == 0
        header, rows = csv_rows(out)
        assert header == ["index", "eigenvalue", "yamabe_k_value"]
        lam = [float(r[1]) for r in rows]
        np.testing.assert_allclose(lam, [6.0, 30.0, 70.0], rtol=5e-4)
        assert [int(r[0]) for r in rows] == [1, 2, 3]

    def test_grid_minimum(self, capsys):
        code, _, err = run(capsys, "spectrum", "--system", "sphere-x1-3",
                           "--k", "2", "--grid", "15")
        assert code == 2
        assert "grid below minimum 16" in err

    def test_json_round_trip(self, capsys):
        code, out, _ = run(capsys, "spectrum", "--system", "sphere-x1-3",
                           "--k", "2", "--grid", "500", "--format", "json")
        assert code == 0
        payload = json.loads(out)
        assert payload["system"] == "sphere-x1-3"
        assert len(payload["eigenvalues"]) == 2

    def test_unknown_system(self, capsys):
        code, _, err = run(capsys, "spectrum", "--system", "nope", "--k", "1")
        assert code == 2
        assert "unknown system" in err

    def test_env_default_grid(self, capsys, monkeypatch):
        monkeypatch.setenv("ISOYAMABE_DEFAULT_GRID", "600")
        code, out, _ = run(capsys, "spectrum", "--system", "sphere-x1-3",
                           "--k", "1", "--format", "json")
        assert code == 0
        assert json.loads(out)["grid"] == 600
        monkeypatch.setenv("ISOYAMABE_DEFAULT_GRID", "bogus")
        code, _, err = run(capsys, "spectrum", "--system", "sphere-x1-3",
                           "--k", "1")
        assert code == 2

    def test_file_input(self, capsys, tmp_path):
        import isoyamabe.system as sy
        path = tmp_path / "sys.system"
        path.write_text(sy.system_file_text(sy.get_system("sphere-x1-4")))
        code, out, _ = run(capsys, "spectrum", "--system", str(path),
                           "--k", "2", "--grid", "1000")
        assert code == 0
        lam = [float(r[1]) for r in csv_rows(out)[1]]
        np.testing.assert_allclose(lam, [12.0, 36.0], rtol=5e-4)

    def test_malformed_file(self, capsys, tmp_path):
        path = tmp_path / "bad.system"
        path.write_text("name = x\nwhat = 1\n")
        code, _, err = run(capsys, "spectrum", "--system", str(path), "--k", "1")
        assert code == 2
        assert "unknown key" in err and ":2" in err


class TestNodal:
    def test_product_run(self, capsys):
        code, out, _ = run(capsys, "nodal", "--system",
                           "product:sphere-x1-2+s2,v12.566,d2",
                           "--grid", "1000")
        assert code == 0
        fields = csv_preamble(out)
        assert int(fields["sign_changes"]) == 1
        assert float(fields["residual"]) < 1e-6
        header, rows = csv_rows(out)
        assert header == ["r", "t", "u"]
        assert len(rows) == 1000
        r = np.array([float(row[0]) for row in rows])
        assert np.all(np.diff(r) > 0)

    def test_quadratic_sphere_allowed(self, capsys):
        code, out, _ = run(capsys, "nodal", "--system", "sphere-quad-2-2",
                           "--grid", "600", "--format", "json")
        assert code == 0
        payload = json.loads(out)
        assert payload["sign_changes"] == 1
        assert len(payload["profile"]["u"]) == 600

    def test_kf_gate(self, capsys):
        code, _, err = run(capsys, "nodal", "--system", "sphere-x1-3",
                           "--grid", "600")
        assert code == 2
        assert "kf" in err

    def test_bad_product_syntax(self, capsys):
        code, _, err = run(capsys, "nodal", "--system",
                           "product:sphere-x1-2+s2,v12.566")
        assert code == 2
        assert "product" in err


class TestCsc:
    def test_unit_product(self, capsys):
        code, out, _ = run(capsys, "csc", "--system",
                           "product:sphere-x1-2+s2,v12.566370614359172,d2",
                           "--grid", "1000", "--tol", "1e-8")
        assert code == 0
        fields = csv_preamble(out)
        assert float(fields["residual"]) < 1e-8
        assert float(fields["c"]) == pytest.approx(16 * math.pi, rel=1e-5)

    def test_requires_yamabe_dimension(self, capsys):
        code, _, err = run(capsys, "csc", "--system", "sphere-x1-2")
        assert code == 2


class TestCount:
    def test_single_point(self, capsys):
        code, out, _ = run(capsys, "count", "--n", "4", "--m", "2",
                           "--t", "0.05")
        assert code == 0
        header, rows = csv_rows(out)
        assert header == ["t", "l", "i", "count"]
        assert float(rows[0][1]) == pytest.approx(10.4)
        assert rows[0][2] == "2" and rows[0][3] == "3"
        thresholds = [float(x) for x in csv_preamble(out)["thresholds"].split()]
        assert all(a > b for a, b in zip(thresholds, thresholds[1:]))
        assert all(x > 0 for x in thresholds)

    def test_sweep(self, capsys):
        code, out, _ = run(capsys, "count", "--n", "4", "--m", "2",
                           "--sweep", "0.01:1:100")
        assert code == 0
        _, rows = csv_rows(out)
        assert len(rows) == 100
        counts = [int(r[3]) for r in rows]
        assert all(counts[i + 1] <= counts[i] for i in range(len(counts) - 1))

    def test_odd_dimension_rejected(self, capsys):
        code, _, err = run(capsys, "count", "--n", "5", "--m", "2", "--t", "1")
        assert code == 2

    def test_dimension_two_unsupported(self, capsys):
        code, _, err = run(capsys, "count", "--n", "2", "--m", "2", "--t", "1")
        assert code == 2

    def test_bad_sweep(self, capsys):
        code, _, err = run(capsys, "count", "--n", "4", "--m", "2",
                           "--sweep", "1:2")
        assert code == 2


def test_console_script_installed():
    import shutil
    import subprocess
    exe = shutil.which("isoyamabe")
    if exe is None:
        pytest.skip("console script not on PATH")
    proc = subprocess.run([exe, "count", "--n", "4", "--m", "2", "--t", "0.2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "0.2,4.4" in proc.stdout.replace("4.400000000000001", "4.4")


def test_nodal_no_convergence_dumps_last_iterate(capsys, monkeypatch):
    import numpy as np
    from isoyamabe import solver
    from isoyamabe.errors import NoConvergence

    def fail(sys_obj, op, tol):
        raise NoConvergence("stalled", np.ones(op.n))

    monkeypatch.setattr(solver, "minimize_second_yamabe", fail)
    monkeypatch.setattr(cli.solver, "minimize_second_yamabe", fail)
    code = cli.main(["nodal", "--system", "sphere-quad-2-2", "--grid", "64"])
    captured = capsys.readouterr()
    assert code == 3
    assert "last iterate" in captured.err
    assert "stalled" in captured.err
