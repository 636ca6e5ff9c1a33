import math

import numpy as np
import pytest

import motjvie as mj


def small_kernel(eps=3.0, n=3):
    h = 0.01
    g = mj.build_grid(n, n, n, (n * h,) * 3, shape="cube", eps=eps, size=1.0)
    return g, mj.assemble_kernel(g, h / mj.c0)


def test_grid_indexing():
    g = mj.build_grid(4, 3, 2, (0.04, 0.03, 0.02), eps=2.0, size=1.0)
    assert g.M == 24
    assert g.linear_index(1, 2, 1) == 5
    assert g.inverse_index(13) == [1, 1, 2]
    assert np.all(g.eps_r == 2.0)
    with pytest.raises(IndexError):
        g.linear_index(0, 1, 1)


def test_kernel_symmetry_and_lags():
    g, K = small_kernel()
    assert K.ell == math.floor(math.sqrt(27.0)) + 2
    assert K.S(0, 1, 1, -1, 0, 2) == K.S(1, 0, 1, -1, 0, 2)
    assert abs(K.S(0, 0, 2, 1, 0, 3) - K.S(0, 0, -2, -1, 0, 3)) < 1e-15
    assert list(K.ident[:2]) == [0.5, 0.5]


def test_march_zero_and_engine_agreement():
    g, K = small_kernel()
    zero = np.zeros(3 * g.M)
    m = mj.Marcher(K, "hierarchical")
    for _ in range(10):
        assert not np.any(m.step(zero))
    runs = {}
    for engine in ("direct", "spatial", "hierarchical"):
        mr = mj.Marcher(K, engine)
        runs[engine] = np.array([mr.step(mj.excitation(g, n, K.dt, t0=0.1, sigma=0.05)) for n in range(1, 31)])
    ref = runs["direct"]
    for engine in ("spatial", "hierarchical"):
        assert np.linalg.norm(runs[engine] - ref) <= 1e-12 * np.linalg.norm(ref)


def test_fir_and_regularization_shift():
    delta = 1e-3
    for order in (2, 3, 4):
        c = mj.fir(order, delta)
        assert abs(sum(x * (-1) ** i for i, x in enumerate(c)) - delta) < 1e-15
        theta = 2.0
        mag = abs(sum(x * np.exp(-1j * i * theta) for i, x in enumerate(c)))
        assert abs(mag - mj.fir_closed_form(order, delta, theta)) < 1e-12
    g, K = small_kernel()
    base = mj.pdsa(K, method="dense")[0]
    reg = mj.pdsa(mj.regularize(K, 3, delta), method="dense")[0]
    assert base["verdict"] == "positive_definite"
    assert abs(reg["lambda_min"] - base["lambda_min"] - delta) < 1e-12


def test_config_run_and_errors():
    text = """
[grid]
n = 3
box = 0.03
eps = 2
[time]
dt = 0.01 lm
steps = 20
[excitation]
t0 = 0.2
sigma = 0.1
[probes]
points = 0.015 0.015 0.015
"""
    out = mj.run(text)
    assert out["summary"]["grid"] == [3, 3, 3]
    assert out["probes"].shape == (1, 20, 3)
    assert out["max_abs"].shape == (20,)
    with pytest.raises(mj.ConfigError):
        mj.run(text.replace("0.015 0.015 0.015", "0.016 0.015 0.015"))
    with pytest.raises(mj.ConfigError):
        mj.run("[grid]\nn = 3\n")
