import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from demixkit.atoms import (
    GaugeKind,
    GaugeSpec,
    dual_gauge_eval,
    gauge_eval,
    project_l1_ball,
    prox,
    soft_threshold,
    subgradient_violation,
)
from demixkit.exceptions import NumericalError

from oracles import l1_ball_projection, prox_oracle

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def vec(n):
    return arrays(np.float64, n, elements=finite)


# --- GaugeSpec -----------------------------------------------------------------


def test_kind_parsing_is_lenient():
    assert GaugeKind.parse("schatten_1") is GaugeKind.SCHATTEN1
    assert GaugeKind.parse("psdtrace") is GaugeKind.PSD_TRACE
    with pytest.raises(ValueError):
        GaugeKind.parse("L2")


@pytest.mark.parametrize(
    "kind, shape",
    [("Schatten1", (4,)), ("PsdTrace", (2, 3)), ("DiagIndicator", (3, 2)), ("L1", (0,))],
)
def test_bad_shapes_rejected(kind, shape):
    with pytest.raises(ValueError):
        GaugeSpec(kind, shape)


def test_shape_mismatch_is_invalid_argument():
    with pytest.raises(ValueError):
        gauge_eval(GaugeSpec("L1", (3,)), np.ones(4))
    with pytest.raises(ValueError):
        prox(GaugeSpec("L1", (3,)), np.ones(4), 1.0)
    with pytest.raises(ValueError):
        prox(GaugeSpec("L1", (3,)), np.ones(3), 0.0)


# --- gauge values ----------------------------------------------------------------


def test_l1_value():
    assert gauge_eval(GaugeSpec("L1", (3,)), [1, -2, 0]) == 3


def test_psd_trace_values():
    g = GaugeSpec("PsdTrace", (2, 2))
    assert gauge_eval(g, np.diag([1.0, 2.0])) == pytest.approx(3.0)
    assert gauge_eval(g, np.diag([-1.0, 1.0])) == math.inf
    assert gauge_eval(g, np.array([[1.0, 1.0], [0.0, 1.0]])) == math.inf


def test_diag_indicator_values():
    g = GaugeSpec("DiagIndicator", (2, 2))
    assert gauge_eval(g, np.diag([2.0, 5.0])) == 0.0
    assert gauge_eval(g, np.array([[0.0, 1.0], [0.0, 0.0]])) == math.inf


def test_matrix_norm_values():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((4, 3))
    s = np.linalg.svd(a, compute_uv=False)
    assert gauge_eval(GaugeSpec("Schatten1", a.shape), a) == pytest.approx(s.sum())
    assert gauge_eval(GaugeSpec("SchattenInf", a.shape), a) == pytest.approx(s[0])
    rows = np.linalg.norm(a, axis=1)
    assert gauge_eval(GaugeSpec("RowL12", a.shape), a) == pytest.approx(rows.sum())
    assert dual_gauge_eval(GaugeSpec("RowL12", a.shape), a) == pytest.approx(rows.max())
    assert dual_gauge_eval(GaugeSpec("Schatten1", a.shape), a) == pytest.approx(s[0])


def test_unit_atoms():
    rng = np.random.default_rng(2)
    d = 6
    for i in range(d):
        for sign in (-1, 1):
            e = np.zeros(d)
            e[i] = sign
            assert gauge_eval(GaugeSpec("L1", (d,)), e) == pytest.approx(1.0)
    for _ in range(20):
        s = rng.choice([-1.0, 1.0], d)
        assert gauge_eval(GaugeSpec("Linf", (d,)), s) == pytest.approx(1.0)
        u, v = rng.standard_normal(4), rng.standard_normal(3)
        atom = np.outer(u / np.linalg.norm(u), v / np.linalg.norm(v))
        assert gauge_eval(GaugeSpec("Schatten1", (4, 3)), atom) == pytest.approx(1.0)
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        assert gauge_eval(GaugeSpec("SchattenInf", (4, 4)), q) == pytest.approx(1.0)
        row = np.zeros((3, 5))
        row[rng.integers(3)] = v[0] * rng.standard_normal(5)
        row /= np.linalg.norm(row)
        assert gauge_eval(GaugeSpec("RowL12", (3, 5)), row) == pytest.approx(1.0)


def test_positive_homogeneity():
    rng = np.random.default_rng(3)
    specs = [
        GaugeSpec("L1", (5,)),
        GaugeSpec("Linf", (5,)),
        GaugeSpec("Schatten1", (3, 4)),
        GaugeSpec("SchattenInf", (3, 4)),
        GaugeSpec("RowL12", (3, 4)),
    ]
    for trial in range(1000):
        g = specs[trial % len(specs)]
        x = rng.standard_normal(g.shape)
        alpha = rng.exponential(2.0)
        assert gauge_eval(g, alpha * x) == pytest.approx(alpha * gauge_eval(g, x), rel=1e-10, abs=1e-12)


# --- proxes: worked examples ---------------------------------------------------------


def test_prox_examples():
    np.testing.assert_array_equal(prox(GaugeSpec("L1", (3,)), [3, -0.5, 1], 1), [2, 0, 0])
    np.testing.assert_allclose(
        prox(GaugeSpec("Schatten1", (2, 2)), np.diag([3.0, 1.0]), 2), np.diag([1.0, 0.0]), atol=1e-12
    )
    np.testing.assert_allclose(prox(GaugeSpec("Linf", (2,)), [2, 0], 1), [1, 0], atol=1e-12)
    np.testing.assert_allclose(prox(GaugeSpec("Linf", (2,)), [0.5, -0.5], 2), [0, 0], atol=1e-12)
    np.testing.assert_allclose(
        prox(GaugeSpec("PsdTrace", (2, 2)), np.diag([3.0, -1.0]), 1), np.diag([2.0, 0.0]), atol=1e-12
    )
    np.testing.assert_allclose(
        prox(GaugeSpec("RowL12", (1, 2)), np.array([[3.0, 4.0]]), 2.5), [[1.5, 2.0]], atol=1e-12
    )
    for step in (0.1, 1.0, 7.0):
        np.testing.assert_array_equal(
            prox(GaugeSpec("DiagIndicator", (2, 2)), np.array([[1.0, 2.0], [3.0, 4.0]]), step),
            np.diag([1.0, 4.0]),
        )


def test_schatten_inf_prox_matches_singular_value_linf_prox():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((3, 3))
    u, s, vt = np.linalg.svd(a)
    shrunk = prox(GaugeSpec("Linf", (3,)), s, 0.7)
    np.testing.assert_allclose(prox(GaugeSpec("SchattenInf", (3, 3)), a, 0.7), u @ np.diag(shrunk) @ vt, atol=1e-12)


def test_soft_threshold_tie_goes_to_zero():
    np.testing.assert_array_equal(soft_threshold(np.array([1.0, -1.0, 1.5]), 1.0), [0.0, 0.0, 0.5])


@pytest.mark.parametrize("kind, shape", [
    ("L1", (6,)), ("Linf", (6,)), ("Schatten1", (4, 3)), ("SchattenInf", (3, 4)),
    ("RowL12", (4, 3)), ("PsdTrace", (4, 4)),
])
def test_prox_matches_conic_oracle(kind, shape):
    rng = np.random.default_rng(abs(hash(kind)) % 2**32)
    for _ in range(5):
        u = 2 * rng.standard_normal(shape)
        if kind == "PsdTrace":
            u = 0.5 * (u + u.T)
        step = rng.uniform(0.2, 2.0)
        np.testing.assert_allclose(prox(GaugeSpec(kind, shape), u, step), prox_oracle(kind, u, step), atol=1e-5)


def test_prox_l1_optimality_certificate():
    rng = np.random.default_rng(5)
    for _ in range(200):
        u = rng.standard_normal(10) * 3
        rho = rng.uniform(0.1, 3)
        x = prox(GaugeSpec("L1", (10,)), u, rho)
        g = (u - x) / rho
        on = x != 0
        assert np.all(np.abs(g[~on]) <= 1 + 1e-9)
        np.testing.assert_allclose(g[on], np.sign(x[on]), atol=1e-9)


def test_firm_nonexpansive_all_gauges():
    rng = np.random.default_rng(6)
    specs = [GaugeSpec(k, s) for k, s in [
        ("L1", (8,)), ("Linf", (8,)), ("Schatten1", (4, 3)), ("SchattenInf", (4, 3)),
        ("RowL12", (4, 3)), ("PsdTrace", (4, 4)), ("DiagIndicator", (4, 4)),
    ]]
    for trial in range(1000):
        g = specs[trial % len(specs)]
        u, v = rng.standard_normal(g.shape), rng.standard_normal(g.shape)
        rho = rng.uniform(0.05, 3)
        pu, pv = prox(g, u, rho), prox(g, v, rho)
        # firm: ||pu - pv||^2 <= <pu - pv, u - v>
        assert np.sum((pu - pv) ** 2) <= np.sum((pu - pv) * (u - v)) + 1e-10


def test_moreau_identity_l1_linf():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        u = rng.standard_normal(7) * rng.uniform(0.1, 5)
        rho = rng.uniform(0.05, 4)
        np.testing.assert_allclose(
            u - prox(GaugeSpec("Linf", (7,)), u, rho), project_l1_ball(u, rho), atol=1e-10
        )
        # the other half of the pair: u - prox_l1 is the clip onto the linf ball
        np.testing.assert_allclose(
            u - prox(GaugeSpec("L1", (7,)), u, rho), np.clip(u, -rho, rho), atol=1e-10
        )


@settings(max_examples=200, deadline=None)
@given(vec(5), st.floats(0.05, 10), st.floats(0.1, 10))
def test_prox_scaling(u, rho, alpha):
    for kind in ("L1", "Linf"):
        g = GaugeSpec(kind, (5,))
        np.testing.assert_allclose(prox(g, alpha * u, alpha * rho), alpha * prox(g, u, rho), atol=1e-8 * (1 + alpha * np.abs(u).max()))


# --- l1 ball projection ----------------------------------------------------------


def test_project_l1_ball_examples():
    np.testing.assert_allclose(project_l1_ball(np.array([3.0, 1.0]), 1), [1.0, 0.0])
    np.testing.assert_array_equal(project_l1_ball(np.array([0.2, -0.3]), 1), [0.2, -0.3])
    np.testing.assert_allclose(project_l1_ball(np.array([1.0, 1.0]), 1), [0.5, 0.5])
    with pytest.raises(ValueError):
        project_l1_ball(np.ones(2), 0.0)


def test_project_l1_ball_grid_oracle():
    # brute force over a 1e-4 grid of the ball boundary for the [3, 1] example
    t = np.linspace(0, 1, 10001)
    cands = np.column_stack([t, 1 - t])
    best = cands[np.argmin(np.sum((cands - [3.0, 1.0]) ** 2, axis=1))]
    np.testing.assert_allclose(project_l1_ball(np.array([3.0, 1.0]), 1), best, atol=1e-4)


def test_project_l1_ball_matches_qp():
    rng = np.random.default_rng(8)
    for _ in range(20):
        u = rng.standard_normal(9) * 2
        r = rng.uniform(0.1, 4)
        np.testing.assert_allclose(project_l1_ball(u, r), l1_ball_projection(u, r), atol=1e-6)


@settings(max_examples=300, deadline=None)
@given(vec(6), st.floats(0.01, 100))
def test_project_l1_ball_properties(u, r):
    p = project_l1_ball(u, r)
    assert np.abs(p).sum() <= r * (1 + 1e-9) + 1e-12
    if np.abs(u).sum() <= r:
        np.testing.assert_array_equal(p, u)
    assert np.all(p * u >= -1e-12)


# --- subgradient tests -------------------------------------------------------------


def test_subgradient_violation_l1():
    g = GaugeSpec("L1", (3,))
    x = np.array([2.0, 0.0, -1.0])
    assert subgradient_violation(g, x, np.array([1.0, 0.3, -1.0])) == pytest.approx(0.0)
    assert subgradient_violation(g, x, np.array([1.0, 1.5, -1.0])) == pytest.approx(0.5)
    assert subgradient_violation(g, x, np.array([0.5, 0.0, -1.0])) == pytest.approx(0.5)


def test_subgradient_violation_nuclear_at_optimum():
    rng = np.random.default_rng(9)
    u = 3 * rng.standard_normal((4, 4))
    x = prox(GaugeSpec("Schatten1", (4, 4)), u, 1.0)
    assert subgradient_violation(GaugeSpec("Schatten1", (4, 4)), x, u - x) < 1e-9


def test_subgradient_violation_psd_and_diag():
    psd = GaugeSpec("PsdTrace", (3, 3))
    u = np.diag([3.0, 0.5, -2.0])
    x = prox(psd, u, 1.0)
    assert subgradient_violation(psd, x, u - x) < 1e-12
    dg = GaugeSpec("DiagIndicator", (2, 2))
    assert subgradient_violation(dg, np.eye(2), np.array([[0.0, 4.0], [-1.0, 0.0]])) == 0.0
    assert subgradient_violation(dg, np.eye(2), np.array([[0.2, 0.0], [0.0, 0.0]])) == pytest.approx(0.2)


def test_numerical_error_carries_diagnostics():
    err = NumericalError("svd failed", iterations=12, shape=(3, 3))
    assert err.diagnostics["iterations"] == 12
    assert isinstance(err, ArithmeticError)


def test_nonfinite_svd_input_raises_numerical_error():
    bad = np.full((3, 3), np.nan)
    with pytest.raises((NumericalError, ValueError)):
        prox(GaugeSpec("Schatten1", (3, 3)), bad, 1.0)
