import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from rimlab.cli import main

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

SMALL_CONFIG = """
[spectrum]
kind = dirichlet
n_total = 8
alpha = 0.0

[nonlinearity]
kind = per_mode_sin
lipschitz = 0.1

[forcing]
form = trig_sum
terms =
    2 1.0 1.0 0.0
period = 6.283185307179586

[noise]
kind = power_law
scale = 0.05
exponent = 2.0
seed = 7

[certificate]
n = 1
k = 0.2

[numerics]
h = 0.005
tol = 1e-5

[chart]
x_count = 5
svg = true

[track]
count = 2
radius = 0.5

[attractor]
pullback_times = 2.0 4.0
ensemble_size = 4
radius = 0.5

[periodicity]
taus = 0.0
slack = 1e-4

[verify]
checks = invariance lipschitz tracking periodicity
invariance_t = 0.5
"""


@pytest.fixture(scope="module")
def small_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "small.ini"
    path.write_text(SMALL_CONFIG, encoding="utf-8")
    return path


def test_gap_scan_first_passing_index(tmp_path, capsys):
    cfg = tmp_path / "gap.ini"
    cfg.write_text(
        SMALL_CONFIG.replace("lipschitz = 0.1", "lipschitz = 1.0").replace(
            "k = 0.2", "k = 0.45"
        ),
        encoding="utf-8",
    )
    code = main(["gap-scan", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "gap_scan.json").read_text())
    passing = [row["n"] for row in doc["rows"] if row["passed"]]
    assert passing[0] == 4
    text = (tmp_path / "gap_scan.txt").read_text()
    assert "yes" in text and "no" in text


def test_gap_scan_zero_lipschitz_all_pass(tmp_path):
    cfg = tmp_path / "gap0.ini"
    cfg.write_text(SMALL_CONFIG.replace("kind = per_mode_sin", "kind = zero"), "utf-8")
    code = main(["gap-scan", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "gap_scan.json").read_text())
    assert all(row["passed"] for row in doc["rows"])


def test_invalid_k_exits_2(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(SMALL_CONFIG.replace("k = 0.2", "k = 1.5"), encoding="utf-8")
    assert main(["gap-scan", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_failed_gap_exits_3(tmp_path):
    cfg = tmp_path / "tight.ini"
    cfg.write_text(SMALL_CONFIG.replace("lipschitz = 0.1", "lipschitz = 5.0"), "utf-8")
    assert main(["build-manifold", "--config", str(cfg), "--out", str(tmp_path)]) == 3


def test_build_manifold_outputs(small_config, tmp_path):
    code = main(["build-manifold", "--config", str(small_config), "--out", str(tmp_path)])
    assert code == 0
    csv_lines = (tmp_path / "chart.csv").read_text().splitlines()
    assert csv_lines[0].startswith("x_1,m_2")
    assert len(csv_lines) == 6
    meta = json.loads((tmp_path / "chart_meta.json").read_text())
    assert meta["seed"] == 7
    assert meta["certificate"]["mu"] == pytest.approx(2.0)
    assert (tmp_path / "chart.svg").exists()


def test_build_flat_zero_chart(tmp_path):
    cfg = tmp_path / "flat.ini"
    flat = SMALL_CONFIG.replace("kind = per_mode_sin", "kind = zero")
    flat = flat.replace("form = trig_sum", "form = zero").replace(
        "terms =\n    2 1.0 1.0 0.0\nperiod = 6.283185307179586", ""
    )
    flat = flat.replace("kind = power_law", "kind = zero")
    cfg.write_text(flat, encoding="utf-8")
    out = tmp_path / "run"
    assert main(["build-manifold", "--config", str(cfg), "--out", str(out)]) == 0
    rows = (out / "chart.csv").read_text().splitlines()[1:]
    values = np.array([[float(v) for v in line.split(",")] for line in rows])
    assert np.max(np.abs(values[:, 1:])) == 0.0  # graph columns all zero


def test_byte_identical_reruns(small_config, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["build-manifold", "--config", str(small_config), "--out", str(out1)]) == 0
    assert main(["build-manifold", "--config", str(small_config), "--out", str(out2)]) == 0
    for name in ("chart.csv", "chart_meta.json", "chart.svg"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_seed_override_changes_outputs(small_config, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["build-manifold", "--config", str(small_config), "--out", str(out1)])
    main(
        ["build-manifold", "--config", str(small_config), "--seed", "8", "--out", str(out2)]
    )
    assert (out1 / "chart.csv").read_bytes() != (out2 / "chart.csv").read_bytes()
    meta = json.loads((out2 / "chart_meta.json").read_text())
    assert meta["seed"] == 8


def test_verify_passes_and_reports(small_config, tmp_path):
    code = main(["verify", "--config", str(small_config), "--out", str(tmp_path)])
    doc = json.loads((tmp_path / "verification.json").read_text())
    assert code == 0
    assert doc["all_pass"] is True
    kinds = {r["kind"] for r in doc["reports"]}
    assert {"invariance", "lipschitz", "tracking", "periodicity"} <= kinds
    assert all(r["passed"] for r in doc["reports"])


def test_verify_failure_exits_1(small_config, tmp_path):
    cfg = tmp_path / "strict.ini"
    cfg.write_text(
        SMALL_CONFIG.replace("invariance_t = 0.5", "invariance_t = 0.5\nc_inv = 0.0"),
        encoding="utf-8",
    )
    code = main(["verify", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 1
    doc = json.loads((tmp_path / "verification.json").read_text())
    assert doc["all_pass"] is False


def test_verify_trivial_config_all_pass(tmp_path):
    cfg = tmp_path / "trivial.ini"
    trivial = SMALL_CONFIG.replace("kind = per_mode_sin", "kind = zero")
    trivial = trivial.replace("form = trig_sum", "form = zero").replace(
        "terms =\n    2 1.0 1.0 0.0\nperiod = 6.283185307179586", ""
    )
    trivial = trivial.replace("kind = power_law", "kind = zero")
    trivial = trivial.replace(
        "checks = invariance lipschitz tracking periodicity",
        "checks = invariance lipschitz tracking containment",
    )
    cfg.write_text(trivial, encoding="utf-8")
    code = main(["verify", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0


def test_track_outputs(small_config, tmp_path):
    code = main(["track", "--config", str(small_config), "--out", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "tracking.json").read_text())
    assert len(doc["orbits"]) == 2
    entry = doc["orbits"][0]
    for key in ("v0", "v0_star", "prefactor", "rate", "fitted_slope", "graph_residual"):
        assert key in entry
    curve = (tmp_path / "decay_curve_00.csv").read_text().splitlines()
    assert curve[0] == "t,norm,envelope"


def test_periodicity_command(small_config, tmp_path):
    code = main(["periodicity", "--config", str(small_config), "--out", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "periodicity.json").read_text())
    assert doc["all_pass"] is True


def test_attractor_command(small_config, tmp_path):
    code = main(["attractor", "--config", str(small_config), "--out", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "attractor.json").read_text())
    assert len(doc["reports"]) == 2
    assert (tmp_path / "cloud_00.csv").exists()
    assert (tmp_path / "cloud_01.csv").exists()


def test_report_command(small_config, tmp_path):
    main(["verify", "--config", str(small_config), "--out", str(tmp_path)])
    code = main(["report", "--out", str(tmp_path)])
    assert code == 0
    text = (tmp_path / "report.txt").read_text()
    assert "all_pass: yes" in text
    assert (tmp_path / "report.svg").exists()


def test_almost_period_check(tmp_path):
    code = main(
        [
            "verify",
            "--config",
            str(CONFIG_DIR / "quasi_periodic.ini"),
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    doc = json.loads((tmp_path / "verification.json").read_text())
    (report,) = doc["reports"]
    assert report["kind"] == "almost_periodicity"
    assert report["context"]["eps_g"] <= 1e-3


def test_module_entry_point(small_config, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "rimlab", "gap-scan", "--config", str(small_config),
         "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "yes" in proc.stdout


def test_truncation_margin_validated(tmp_path):
    cfg = tmp_path / "margin.ini"
    cfg.write_text(SMALL_CONFIG.replace("n = 1", "n = 5"), encoding="utf-8")
    assert main(["gap-scan", "--config", str(cfg), "--out", str(tmp_path)]) == 2


EXPLICIT_CONFIG = """
[spectrum]
kind = explicit
lambdas = 1.0 4.0 9.0 16.0 25.0 36.0
alpha = 0.25

[nonlinearity]
kind = custom_table
lipschitz = 0.1
table_x = -6.0 -3.0 0.0 3.0 6.0
table_y = -0.3 -0.29 0.0 0.29 0.3

[forcing]
form = tabulated
table =
    -40.0 0.0 0.5 0.0 0.0 0.0 0.0
    0.0 0.0 0.5 0.0 0.0 0.0 0.0
    8.0 0.0 0.5 0.0 0.0 0.0 0.0

[noise]
kind = explicit
values = 0.1 0.05 0.02 0.01 0.005 0.002
seed = 3

[certificate]
n = 1
k = 0.45

[numerics]
h = 0.005
tol = 1e-5
t_back = 6.0
t_fwd = 6.0

[chart]
x_count = 3

[verify]
checks = lipschitz
invariance_t = 0.5

[attractor]
pullback_times = 2.0
ensemble_size = 2
"""


def test_explicit_config_surface(tmp_path):
    cfg = tmp_path / "explicit.ini"
    cfg.write_text(EXPLICIT_CONFIG, encoding="utf-8")
    out = tmp_path / "run"
    assert main(["build-manifold", "--config", str(cfg), "--out", str(out)]) == 0
    meta = json.loads((out / "chart_meta.json").read_text())
    assert meta["alpha"] == 0.25
    assert meta["n_total"] == 6
    assert main(["verify", "--config", str(cfg), "--out", str(out)]) == 0


def test_explicit_config_field_errors(tmp_path):
    bad = EXPLICIT_CONFIG.replace("values = 0.1 0.05 0.02 0.01 0.005 0.002",
                                  "values = 0.1 0.05")
    cfg = tmp_path / "bad.ini"
    cfg.write_text(bad, encoding="utf-8")
    assert main(["gap-scan", "--config", str(cfg), "--out", str(tmp_path)]) == 2
