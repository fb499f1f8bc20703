import math

import numpy as np
import pytest

import gradix


def tiny_config(**overrides):
    config = {
        "case": "1d-gaussian",
        "physics": {"ke": 1.0},
        "counts": {"N_int": 64, "N_sb": 4},
        "architecture": {"hidden_layers": 2, "width": 6},
        "loss": {"lambda": 1.0},
        "optimizer": {"adam": {"max_iters": 20}, "lbfgs": {"max_iters": 30}},
        "seed": 3,
    }
    config.update(overrides)
    return config


def test_catalog():
    names = gradix.case_names()
    assert "slab-discontinuous" in names
    assert len(names) == 8
    with pytest.raises(ValueError):
        gradix.Case("no-such-case")


def test_exact_matches_oracle():
    case = gradix.Case("2d-gaussian", ke=1.0)
    assert case.coords == ["x", "y"]
    pts = gradix.sobol(2, 20)
    assert np.max(np.abs(case.exact(pts) - case.oracle(pts))) < 1e-5
    with pytest.raises(ValueError):
        case.exact(np.zeros((3, 3)))


def test_slab_values():
    case = gradix.Case("slab-discontinuous", ke=1.0)
    values = case.exact(np.array([0.0, 7.0]))
    assert values[0] == 1.0
    assert values[1] == pytest.approx(math.exp(-2.0), rel=1e-12)
    assert case.test_points().shape == (512, 1)


def test_quadrature():
    nodes, weights = gradix.gauss_legendre(5, -1.0, 2.0)
    assert sum(weights) == pytest.approx(3.0, rel=1e-14)
    assert sum(w * x**9 for x, w in zip(nodes, weights)) == pytest.approx((2.0**10 - 1.0) / 10, rel=1e-12)
    pts = gradix.sobol(3, 8)
    assert pts.shape == (8, 3)
    assert np.all(pts[0] == 0.5)


def test_bounds():
    assert gradix.forward_bound([5e-4, 2e-4, 1e-4, 0.0], V2=0.0) == pytest.approx(3e-7, rel=1e-12)
    assert gradix.steady_forward_bound([0.0] * 4, l=1e12, N_int=10**9, N_sb=10**9, N_S=1000) < 1e-15
    with pytest.raises(ValueError):
        gradix.steady_forward_bound([0.0] * 4, l=0.0)
    with pytest.raises(ValueError):
        gradix.forward_bound([0.0] * 4, bogus=1.0)


def test_verify_suite_passes():
    checks = gradix.verify()
    assert checks
    assert all(c["passed"] for c in checks), [c["name"] for c in checks if not c["passed"]]


def test_train_is_deterministic():
    a = gradix.train(tiny_config())
    b = gradix.train(tiny_config())
    assert a.params == b.params
    assert a.final_loss == b.final_loss
    assert a.final_loss < a.loss_history[0]
    report = a.report
    assert report["case"] == "1d-gaussian"
    assert report["seed"] == 3
    assert report["E_G"]["abs"] >= 0.0
    x = a.case.test_points()
    assert a.predict(x).shape == (512,)
    c = gradix.train(tiny_config(), seed=4)
    assert c.report["seed"] == 4
    assert c.params != a.params


def test_train_rejects_bad_config():
    with pytest.raises(ValueError):
        gradix.train(tiny_config(typo=1))
    with pytest.raises(ValueError):
        gradix.train(tiny_config(counts={"N_int": 64, "N_sb": 4, "N_d": 8}))
