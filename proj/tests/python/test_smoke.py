import json
import math

import pytest

import stucoco as sc


def test_base_case_drifts_match():
    p = sc.base_case_parameters()
    mu_s, mu_u = sc.drifts(sc.Measure.P_STAR, p)
    assert mu_u == pytest.approx(mu_s, abs=1e-15)
    assert sc.drifts(sc.Measure.P_T, p) == sc.drifts(sc.Measure.P_STAR, p)


def test_closed_form_and_cdf_are_complementary():
    s = sc.survival_closed_form(0.5, 0.0, -0.09005, 0.49, 1.0)
    assert s == pytest.approx(0.63234550518390506, rel=1e-12)
    assert s + sc.first_passage_cdf(0.5, 0.0, -0.09005, 0.49, 1.0) == pytest.approx(1.0, abs=1e-14)


def test_invalid_input_raises():
    with pytest.raises(ValueError):
        sc.survival_closed_form(0.5, 0.0, 0.0, 0.49, -1.0)


def test_filter_and_price_at_start():
    p = sc.base_case_parameters()
    fwd = sc.Filter(p, sc.Measure.P_T, grid_points=512)
    share = sc.Filter(p, sc.Measure.P_S, grid_points=512)
    for f in (fwd, share):
        f.reset(p.U0, 0.0, p.S0, p.T)
    path = sc.simulate_stock_scenarios(p, [0.0, 0.005, 0.01], 1, 7)[0]
    for t, s in path[1:]:
        fwd.observe(t, s)
        share.observe(t, s)
    post = fwd.posterior
    assert post.integral() == pytest.approx(1.0, abs=1e-8)
    assert 0.0 < post.survival_mass <= 1.0
    q = sc.price(fwd.posterior, share.posterior, p, path[-1][0])
    assert q["pi"] == pytest.approx(q["bond_leg"] + q["equity_leg"], rel=1e-12)
    assert 0.0 < q["pi"] < p.N + p.Cr * path[-1][1]


def test_oracle_agrees_with_closed_form():
    hit, se = sc.first_passage_oracle(0.2, 0.0, -0.05, 0.4, 0.1, n_paths=50000, dt_fine=0.005, seed=3)
    ref = sc.first_passage_cdf(0.2, 0.0, -0.05, 0.4, 0.1)
    assert abs(hit - ref) <= 4.0 * se


def test_run_command_writes_outputs(tmp_path):
    cfg = {"scenarios": 1, "rho_sweep": [0.5], "filter": {"grid_points": 256}}
    code, files, _ = sc.run_command("survive", json.dumps(cfg), tmp_path)
    assert code == 0
    assert any(f.endswith(".csv") for f in files)
    assert (tmp_path / "manifest.json").exists()


def test_bad_config_rejected(tmp_path):
    with pytest.raises(ValueError):
        sc.run_command("survive", json.dumps({"no_such_key": 1}), tmp_path)
