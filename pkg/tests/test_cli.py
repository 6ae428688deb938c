import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from tensorpot import __version__
from tensorpot.cli import main, read_config
from tensorpot.grid import GridDensity


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_read_config(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\nn = 3\neps=1e-3  # trailing\n\n")
    assert read_config(str(p), ["n=4"]) == {"n": "4", "eps": "1e-3"}


def test_quadtable_header_and_rows(capsys):
    code, out, _ = _run(capsys, "quadtable", "n=3,4", "eps=1e-1,1e-3")
    assert code == 0
    first = out.splitlines()[0]
    assert first.startswith(f"# tensorpot {__version__} config=")
    assert '"eps": "1e-1,1e-3"' in first
    rows = _rows(out)
    assert len(rows) == 4
    assert rows[0]["family"] == "I1" and rows[0]["seconds"] == ""
    assert float(rows[0]["achieved_eps"]) <= 0.1


def test_quadtable_is_deterministic(capsys):
    a = _run(capsys, "quadtable", "family=IM", "M=2", "eps=1e-5")[1]
    b = _run(capsys, "quadtable", "family=IM", "M=2", "eps=1e-5")[1]
    assert a == b


def test_quadtable_preset_row_counts(capsys):
    code, out, _ = _run(capsys, "quadtable", "--preset", "table1")
    rows = _rows(out)
    assert code == 0 and len(rows) == 24
    assert {"published_h0", "published_nodes", "within_band"} <= set(rows[0])
    code, out, _ = _run(capsys, "quadtable", "--preset", "table6", "--format", "json")
    data = json.loads(out)
    assert len(data) == 16
    # the finest targets cannot be met in double precision, so the run reports a numeric failure
    assert code == 3
    assert any(r["node_count"] == -1 for r in data)


def test_quadtable_assert_paper(capsys):
    code, _, err = _run(capsys, "quadtable", "--preset", "table1", "--assert-paper")
    assert code == 4 and "band" in err


def test_quadtable_usage_errors(capsys):
    assert _run(capsys, "quadtable", "eps=")[0] == 2
    assert _run(capsys, "quadtable", "subst=tanh")[0] == 2
    assert _run(capsys, "quadtable", "family=K1")[0] == 2
    assert _run(capsys, "quadtable", "novalue")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["quadtable", "--format", "xml"])
    assert exc.value.code == 2


def test_potential_check_direct(capsys, tmp_path):
    out_path = tmp_path / "pot.csv"
    binary = tmp_path / "pot.bin"
    code, _, err = _run(capsys, "potential", "n=3", "h=0.5", "half=8", "eps=1e-5", "--check-direct",
                        "--out", str(out_path), "--binary", str(binary))
    assert code == 0
    dev = float(err.strip().split("=")[-1])
    assert dev <= 2e-5
    rows = _rows(out_path.read_text())
    assert len(rows) == 17**3 and list(rows[0]) == ["k1", "k2", "k3", "value"]
    grid = GridDensity.load(binary)
    assert grid.shape == (17, 17, 17)
    centre = [r for r in rows if r["k1"] == r["k2"] == r["k3"] == "0"][0]
    assert float(centre["value"]) == pytest.approx(grid.values[8, 8, 8], rel=1e-16)


def test_potential_delta_dump(capsys):
    code, out, _ = _run(capsys, "potential", "density=delta", "half=2", "eps=1e-3")
    rows = _rows(out)
    assert code == 0 and len(rows) == 125
    vals = {(r["k1"], r["k2"], r["k3"]): float(r["value"]) for r in rows}
    assert vals[("1", "0", "0")] == pytest.approx(vals[("0", "0", "-1")], rel=1e-14)


def test_potential_usage_errors(capsys, tmp_path):
    g = GridDensity(0.5, (0, 0), np.ones((3, 3)))
    path = tmp_path / "d.bin"
    g.save(path)
    assert _run(capsys, "potential", "n=3", f"density={path}")[0] == 2
    assert _run(capsys, "potential", "n=2")[0] == 2
    assert _run(capsys, "potential", "density=/nonexistent.bin")[0] == 2


def test_heat_table_and_assert(capsys):
    code, out, _ = _run(capsys, "heat", "--assert-paper")
    assert code == 0
    assert out.splitlines()[1].startswith("# diagonal_ratios=")
    rows = _rows(out)
    assert len(rows) == 36 and list(rows[0]) == ["tau_inv", "h_inv", "error"]


def test_heat_custom_without_exact(capsys):
    code, out, _ = _run(capsys, "heat", "problem=custom", "source=x**2 + t**2", "inv_steps=4,8")
    rows = _rows(out)
    assert code == 0 and list(rows[0]) == ["tau_inv", "h_inv", "f_approx"] and len(rows) == 4


def test_heat_probes(capsys):
    code, out, _ = _run(capsys, "heat", "problem=sinx", "probes=0.3:0.5", "h=0.125", "tau=0.015625", "M=2")
    row = _rows(out)[0]
    assert code == 0 and list(row) == ["x", "t", "f_approx", "f_exact", "error"]
    assert abs(float(row["error"])) < 1e-4


def test_heat_usage_errors(capsys):
    assert _run(capsys, "heat", "T=0")[0] == 2
    assert _run(capsys, "heat", "problem=custom", "source=__import__('os')")[0] == 2
    assert _run(capsys, "heat", "problem=unknown")[0] == 2
    assert _run(capsys, "heat", "x=0.5", "--assert-paper")[0] == 2


def test_kernel_eval_values(capsys):
    code, out, _ = _run(capsys, "kernel-eval", "family=K1", "a2=1", "x=0,1,5", "--format", "json")
    data = json.loads(out)
    assert code == 0 and len(data) == 3
    for row in data:
        assert row["quadrature"] == pytest.approx(row["closed_form"], rel=1e-10)
        assert row["reference"] == pytest.approx(row["closed_form"], rel=1e-12)


def test_kernel_eval_sweep(capsys):
    code, out, _ = _run(capsys, "kernel-eval", "family=IM", "M=2", "n=3", "x=0.5", "u=-3,3,7")
    rows = _rows(out)
    assert code == 0 and len(rows) == 7 and list(rows[0]) == ["x", "u", "f"]


def test_threads_flag(capsys):
    assert _run(capsys, "kernel-eval", "x=1", "--threads", "-1")[0] == 2
    assert _run(capsys, "kernel-eval", "x=1", "--threads", "1")[0] == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tensorpot", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
