import json
import math

import pytest

import magheat

STEP_HALF = {"kind": "radial-step", "params": {"B0": 1.0, "R": 1.0}}
DIPOLE = {"kind": "dipole-pair", "params": {"B0": 1.0, "R": 0.5, "c": 1.5}}


def test_flux_values():
    assert magheat.total_flux(STEP_HALF) == pytest.approx(0.5, abs=1e-12)
    assert abs(magheat.total_flux(DIPOLE)) < 1e-10
    assert magheat.beta(1.3) == pytest.approx(0.3, abs=1e-12)


def test_ab_spectrum_lowest_level():
    value, n, m, mult = magheat.ab_spectrum(0.5, 6)[0]
    assert value == 0.75
    assert mult == 2


def test_radial_matches_closed_form():
    exact = [lvl[0] for lvl in magheat.ab_spectrum(0.3, 5) if lvl[2] == 0]
    numeric = magheat.radial_levels(0, 0.3, 2)
    assert numeric[0] == pytest.approx(exact[0], rel=1e-4)


def test_run_spectrum_exact(tmp_path):
    rec = magheat.run({"kind": "spectrum-exact", "flux": 0.5, "count": 6}, tmp_path)
    assert rec["pass"]
    first = (tmp_path / "spectrum.csv").read_text().splitlines()[1]
    assert float(first.split(",")[0]) == 0.75
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["lowest"] == 0.75


def test_unknown_key_rejected(tmp_path):
    with pytest.raises(ValueError):
        magheat.run({"kind": "flux", "bogus": 1}, tmp_path)


def test_compare_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cfg = {"kind": "flux", "field": DIPOLE}
    magheat.run(cfg, a)
    magheat.run(cfg, b)
    assert magheat.compare(a, b) == []


def test_small_lambda_curve():
    lam = magheat.lambda_curve({"kind": "radial-step", "params": {"B0": 0.0, "R": 1.0}}, [0.0], 8.0, 48)
    assert abs(lam[0] - 0.5) < 0.01


def test_suites():
    names = {c["name"] for c in magheat.preset_suite("quick")}
    assert "gauge-check" in names
    assert all(c["kind"] in ("spectrum-exact", "flux") for c in magheat.preset_suite("oracle-only"))
    assert math.isfinite(magheat.free_gaussian_norm(1.0, 1.0))
