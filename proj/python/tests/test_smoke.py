import json
import math
from pathlib import Path

import numpy as np
import pytest

import nsalpha


def test_torus_basis_eigenvalues_and_validation():
    basis = nsalpha.torus_basis(8)
    assert len(basis) == 8
    assert basis.domain == "torus"
    np.testing.assert_array_equal(basis.eigenvalues, [1, 1, 1, 1, 2, 2, 2, 2])
    assert nsalpha.validate_basis(basis)["passed"]


def test_zero_modes_is_a_config_error():
    with pytest.raises(nsalpha.ConfigError):
        nsalpha.torus_basis(0)


def test_basis_file_round_trip(tmp_path):
    basis = nsalpha.torus_basis(16)
    path = tmp_path / "b.nsab"
    nsalpha.write_basis(str(path), basis)
    again = nsalpha.read_basis(str(path))
    np.testing.assert_array_equal(again.eigenvalues, basis.eigenvalues)


def test_rotational_form_is_skew():
    basis = nsalpha.torus_basis(32)
    rng = np.random.default_rng(3)
    u = rng.standard_normal(32)
    v = rng.standard_normal(32)
    bt = nsalpha.convection(basis, u, v, "B_tilde")
    assert abs(bt @ u) <= 1e-11 * np.linalg.norm(bt) * np.linalg.norm(u)
    b = nsalpha.convection(basis, u, v, "B")
    assert abs(b @ v) <= 1e-11 * np.linalg.norm(b) * np.linalg.norm(v)


def test_taylor_green_decay():
    basis = nsalpha.torus_basis(8)
    out = nsalpha.integrate(
        basis, {"init": "taylor_green", "forcing": "none", "dt": 1e-3, "t_end": 1, "cadence": 100}
    )
    e0 = np.asarray(out["E0"])
    assert out["t"][-1] == pytest.approx(1.0)
    assert abs(e0[-1] / (e0[0] * math.exp(-4.0)) - 1.0) <= 1e-6
    assert out["u"].shape == (11, 8)


def test_fit_rate_recovers_slope():
    x = [1.0, 2.0, 4.0, 8.0]
    fit = nsalpha.fit_rate(x, [3.0 * xi**2 for xi in x])
    assert fit["slope"] == pytest.approx(2.0)
    assert fit["K_hat_ratio"] == pytest.approx(8.0)


def test_config_hash_ignores_key_order():
    assert nsalpha.config_hash({"a": 1, "b": 2}) == nsalpha.config_hash({"b": 2, "a": 1})


def test_cli_exit_codes_and_report(tmp_path):
    code, _, err = nsalpha.run_cli(["eigen", "--domain", "torus", "--modes", "0"])
    assert code == 2 and "modes" in err
    code, out, _ = nsalpha.run_cli(
        ["perturb", "--forcing", "none", "--n", "8", "--dt", "1e-2", "--t-end", "1", "--out", str(tmp_path)]
    )
    assert code == 0
    summary = json.loads((next(tmp_path.glob("perturb-*")) / "summary.json").read_text())
    for key in ("slope", "intercept", "residual", "K_hat", "secular_growth_flag", "fitted_M", "fitted_B"):
        assert key in summary
    assert summary["fitted_M"] > 0
    code, again, _ = nsalpha.run_cli(["report", str(next(tmp_path.glob("perturb-*")))])
    assert code == 0
    assert json.loads(again) == summary
