import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from sobolev_bvp.cli import EXIT_BLOWUP, EXIT_CONFIG, EXIT_FAILED, EXIT_OK, EXIT_SINGULAR, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
FAST = ["--schedule", "0.125,0.0625,0.03125,0.015625"]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, text, name="p.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


SCALAR = """
interval: {a: 0.0, b: 1.0}
dims: {m: 1, n: 2}
grid: {N: 100}
A: [["%s"]]
f: ["0"]
c: ["1"]
boundary:
  - {kind: point, node: 0.0, order: 0, coefficient: [["1"]]}
"""


# ------------------------------------------------------------ fixtures


@pytest.mark.parametrize(
    "name, check_code, kernel",
    [
        ("o1.yaml", EXIT_OK, "0"),
        ("o2_rotation.yaml", EXIT_OK, "0"),
        ("multipoint_integral.yaml", EXIT_OK, "0"),
        ("periodic_singular.yaml", EXIT_SINGULAR, "2"),
        ("rank_deficient.yaml", EXIT_SINGULAR, "1"),
        ("violate_zero.yaml", EXIT_SINGULAR, "1"),
        ("violate_I.yaml", EXIT_FAILED, "0"),
        ("violate_II.yaml", EXIT_FAILED, "0"),
    ],
)
def test_fixtures_check_and_kernel(capsys, name, check_code, kernel):
    code, out, _ = run(capsys, "check", CONFIGS / name, *FAST)
    assert code == check_code
    assert out.splitlines()[-1].startswith("summary: c0=")
    code, out, _ = run(capsys, "kernel", CONFIGS / name)
    assert code == EXIT_OK and out.strip() == kernel


def test_check_summaries_for_violators(capsys):
    summaries = {}
    for name in ("violate_zero.yaml", "violate_I.yaml", "violate_II.yaml"):
        _, out, _ = run(capsys, "check", CONFIGS / name)
        summaries[name] = out.splitlines()[-1]
    assert summaries["violate_zero.yaml"].startswith("summary: c0=fail")
    assert summaries["violate_I.yaml"] == "summary: c0=pass cI=fail cII=pass"
    assert summaries["violate_II.yaml"] == "summary: c0=pass cI=pass cII=fail"


# ---------------------------------------------------------------- solve


def test_solve_o1_prints_norm_and_writes_table(capsys, tmp_path):
    out_csv = tmp_path / "y.csv"
    code, out, _ = run(capsys, "solve", CONFIGS / "o1.yaml", "--out", out_csv)
    assert code == EXIT_OK
    # y = e^-t: sup|y| + sup|y'| + sup|y''| = 3
    line = next(l for l in out.splitlines() if l.startswith("||y||"))
    assert float(line.split("=")[1]) == pytest.approx(3.0, abs=1e-10)
    table = np.genfromtxt(out_csv, delimiter=",", names=True)
    assert table.dtype.names == ("t", "y1_d0_re", "y1_d0_im", "y1_d1_re", "y1_d1_im", "y1_d2_re", "y1_d2_im")
    assert len(table) == 2001
    np.testing.assert_allclose(table["y1_d0_re"], np.exp(-table["t"]), atol=1e-10)
    np.testing.assert_allclose(table["y1_d1_re"], -np.exp(-table["t"]), atol=1e-10)
    assert np.all(table["y1_d0_im"] == 0)


def test_solve_at_eps(capsys):
    code, out, _ = run(capsys, "solve", CONFIGS / "o1.yaml", "--eps", "0.5", "--grid-N", "200")
    assert code == EXIT_OK
    assert "eps = 0.5" in out and "c_tilde = [1]" in out


def test_solve_singular_exits_2(capsys):
    code, _, err = run(capsys, "solve", CONFIGS / "periodic_singular.yaml")
    assert code == EXIT_SINGULAR and "singular" in err


def test_blow_up_exits_4(capsys, tmp_path):
    path = write(tmp_path, SCALAR % "-800")
    code, _, err = run(capsys, "solve", path, "--grid-N", "1000")
    assert code == EXIT_BLOWUP and "blow-up" in err


# ---------------------------------------------------------------- sweep


def test_sweep_csv_to_stdout(capsys):
    code, out, _ = run(capsys, "sweep", CONFIGS / "o1.yaml", "--grid-N", "400", *FAST)
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "eps,error,discrepancy,ratio"
    assert len(lines) == 6
    assert lines[-1].startswith("# verdict: pass ")
    for line in lines[1:-1]:
        eps, error, disc, ratio = map(float, line.split(","))
        assert error > 0 and disc > 0 and ratio == pytest.approx(error / disc, rel=1e-10)


def test_sweep_to_file_is_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, out, _ = run(capsys, "sweep", CONFIGS / "multipoint_integral.yaml", *FAST, "--out", path)
        assert code == EXIT_OK and "# verdict: pass" in out
    assert a.read_bytes() == b.read_bytes()


def test_sweep_bracket_failure_exits_5(capsys):
    code, out, _ = run(capsys, "sweep", CONFIGS / "o1.yaml", "--grid-N", "400", *FAST, "--rmax", "1.0000001")
    assert code == EXIT_FAILED
    assert "two_sided=fail" in out.splitlines()[-1]


def test_sweep_violator_exits_5(capsys):
    code, out, _ = run(capsys, "sweep", CONFIGS / "violate_II.yaml", *FAST)
    assert code == EXIT_FAILED and "cII=fail" in out


def test_sweep_singular_limit_exits_2(capsys):
    code, _, _ = run(capsys, "sweep", CONFIGS / "violate_zero.yaml", *FAST)
    assert code == EXIT_SINGULAR


def test_degenerate_sweep(capsys):
    code, out, _ = run(capsys, "sweep", CONFIGS / "o2_rotation.yaml", "--grid-N", "500", *FAST)
    assert code == EXIT_OK and "degenerate=true" in out


# ------------------------------------------------------- input errors


def test_malformed_expression_exits_3_with_offset(capsys, tmp_path):
    code, _, err = run(capsys, "solve", write(tmp_path, SCALAR % "t +"))
    assert code == EXIT_CONFIG
    assert "offset 3" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "missing.yaml"],
        ["sweep", str(CONFIGS / "o1.yaml"), "--schedule", ""],
        ["sweep", str(CONFIGS / "o1.yaml"), "--schedule", "0.1,abc"],
        ["sweep", str(CONFIGS / "o1.yaml"), "--schedule", "0.1,0.2"],
        ["solve", str(CONFIGS / "o1.yaml"), "--grid-N", "301"],
        ["solve", str(CONFIGS / "o1.yaml"), "--eps", "2"],
        ["frobnicate", str(CONFIGS / "o1.yaml")],
        [],
    ],
)
def test_bad_input_exits_3(capsys, argv):
    assert main(argv) == EXIT_CONFIG


@pytest.mark.parametrize(
    "text",
    [
        "[1, 2",
        "interval: {a: 0, b: 1}\n",
        (SCALAR % "1").replace("m: 1", "m: 2"),
        (SCALAR % "1").replace('c: ["1"]', 'c: ["t"]'),
        (SCALAR % "1").replace("node: 0.0", "node: 3.0"),
        (SCALAR % "1").replace("order: 0", "order: 2"),
        (SCALAR % "1").replace("kind: point", "kind: wave"),
        (SCALAR % "1") + "colour: blue\n",
        (SCALAR % "log(t - 2)"),
    ],
)
def test_bad_configs_exit_3(capsys, tmp_path, text):
    assert main(["solve", str(write(tmp_path, text))]) == EXIT_CONFIG


def test_snapped_node_warns(capsys, caplog, tmp_path):
    path = write(tmp_path, (SCALAR % "1").replace("node: 0.0", "node: 0.333"))
    code, _, _ = run(capsys, "solve", path)
    assert code == EXIT_OK
    assert any("snapped to grid node 0.33" in r.getMessage() for r in caplog.records)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "sobolev_bvp", "kernel", str(CONFIGS / "rank_deficient.yaml")],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and proc.stdout.strip() == "1"


def test_full_o1_sweep_has_ten_rows(capsys):
    code, out, _ = run(capsys, "sweep", CONFIGS / "o1.yaml")
    lines = out.splitlines()
    assert code == EXIT_OK
    assert len(lines) == 1 + 10 + 1 and lines[-1].startswith("# verdict: pass")


def test_violate_I_sweep_exits_5_with_flag(capsys):
    code, out, _ = run(capsys, "sweep", CONFIGS / "violate_I.yaml")
    assert code == EXIT_FAILED and "cI=fail" in out.splitlines()[-1]
