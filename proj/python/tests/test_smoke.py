import json
import os
import subprocess

import numpy as np
import pytest

import wchj

APPENDIX_B = np.array([[1.0, -1.0], [-1.0, 1.0]])


def test_exp_neg_closed_form():
    for t in (0.1, 0.5, 1.0, 2.0):
        e = wchj.exp_neg(APPENDIX_B, t)
        a, c = 0.5 * (1 + np.exp(-2 * t)), 0.5 * (1 - np.exp(-2 * t))
        assert np.max(np.abs(e - np.array([[a, c], [c, a]]))) <= 1e-10


def test_validate_coupling_reports_coordinates():
    assert wchj.validate_coupling(APPENDIX_B)[0]
    ok, code, row, col = wchj.validate_coupling(np.array([[1.0, 0.5], [-1.0, 1.0]]))
    assert not ok and code == "SignViolation" and (row, col) == (1, 2)
    with pytest.raises(wchj.WchjError):
        wchj.exp_neg(np.array([[1.0, 0.5], [-1.0, 1.0]]), 1.0)


def test_appendix_one_step_matches_closed_form():
    cfg = wchj.Config(json.dumps({"scenario": "appendix-affine"}))
    x = cfg.points()[:, 0]
    w = cfg.step(0.5)
    core = np.abs(x) <= 1.0
    exact = np.array([wchj.appendix_exact_W(0.5, [xi, 0.0], [1.0, 0.0]) for xi in x[core]])
    assert np.max(np.abs(w[core] - exact)) <= 1e-4


def test_iterate_n0_is_one_step_and_shapes():
    cfg = wchj.Config(json.dumps({"scenario": "appendix-torus", "grid": {"m": 64}}))
    u = cfg.u0()
    assert u.shape == (64, 2)
    np.testing.assert_array_equal(cfg.iterate(0), cfg.step(cfg.T))
    w2 = cfg.iterate(2)
    assert w2.shape == u.shape and np.all(np.isfinite(w2))


def test_monotone_on_ordered_data():
    cfg = wchj.Config(json.dumps({"scenario": "appendix-torus", "grid": {"m": 64}}))
    u = cfg.u0()
    v = u + 0.1 * (1 + np.sin(2 * np.pi * cfg.points()))
    assert np.all(cfg.step(0.25, u) <= cfg.step(0.25, v) + 1e-12)


def test_uncoupled_converge_is_flat():
    rep = wchj.converge({"scenario": "uncoupled-torus", "grid": {"m": 64}, "run": {"n_max": 2}})
    assert rep["verdict"] == "pass"
    assert rep["label"] == "semigroup (flat) convergence"


def test_properties_deterministic():
    cfg = {"scenario": "zero", "run": {"random_fields": 2}}
    a = wchj.Config(json.dumps(cfg)).properties(seed=42)
    b = wchj.Config(json.dumps(cfg)).properties(seed=42)
    assert a == b
    assert json.loads(a)["seed"] == 42


def test_unknown_key_rejected():
    with pytest.raises(wchj.WchjError, match="unknown key"):
        wchj.Config(json.dumps({"grid": {"m": 64, "bogus": 1}}))


def test_run_command_exit_codes():
    code, out, _ = wchj.run_command("check-coupling")
    assert code == 0 and "verdict: pass" in out
    code, _, err = wchj.run_command("nope")
    assert code == 2


@pytest.mark.skipif("WCHJ_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_bad_coupling_exit_code():
    cfg = os.path.join(os.environ["WCHJ_CONFIGS"], "bad_coupling.json")
    r = subprocess.run([os.environ["WCHJ_CLI"], "check-coupling", cfg], capture_output=True, text=True)
    assert r.returncode == 1
    assert "SignViolation at (1,2)" in r.stdout
