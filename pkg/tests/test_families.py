import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from oubl.families import (AlphaWienerParams, FWienerParams, GeneralAlphaWienerParams, OUBridgeParams,
                           WeightParams, alpha_wiener_spec, boundedness_epsilon, build_family, choose_deltas,
                           counterexample_kernel, f_wiener_spec, general_alpha_epsilon, general_alpha_spec,
                           ou_bridge_kernel, ou_bridge_mean, weighted_spec)
from oubl.process import covariance, solve_mean, stationary_ou_cov

GRID = np.linspace(0.05, 0.95, 9)


def alpha_kernel_oracle(alpha, T, s, t):
    # cov of int_0^t ((T - t)/(T - u))^alpha dB_u, integrated numerically
    m = min(s, t)
    val, _ = quad(lambda u: (T - u) ** (-2 * alpha), 0, m, epsabs=1e-14, epsrel=1e-13)
    return (T - s) ** alpha * (T - t) ** alpha * val


@pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0, 2.0, 3.5])
def test_alpha_wiener_kernel_matches_integral(alpha):
    m = alpha_wiener_spec(AlphaWienerParams(alpha, 1.3))
    for s in (0.2, 0.7):
        for t in (0.4, 1.1):
            assert m.kernel(s, t) == pytest.approx(alpha_kernel_oracle(alpha, 1.3, s, t), rel=1e-10)
            assert covariance(m.spec, s, t, m.maps) == pytest.approx(m.kernel(s, t), rel=1e-12)


def test_alpha_one_is_wiener_bridge():
    m = alpha_wiener_spec(AlphaWienerParams(1.0, 1.0))
    S, U = np.meshgrid(GRID, GRID, indexing="ij")
    assert np.allclose(m.kernel.gram(GRID), np.minimum(S, U) - S * U, atol=1e-15)
    assert m.kernel(0.25, 0.5) == pytest.approx(0.125, abs=1e-15)
    assert m.maps.beta(0.5) == pytest.approx(0.0, abs=1e-15)


def test_alpha_half_variance_and_q():
    m = alpha_wiener_spec(AlphaWienerParams(0.5, 1.0))
    t = 0.6
    assert m.kernel(t, t) == pytest.approx((1 - t) * math.log(1 / (1 - t)), rel=1e-13)
    t = 1 - math.exp(-1)
    assert m.maps.Q(t) == pytest.approx(1.0, rel=1e-14)
    assert m.maps.beta(t) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("alpha,eps,limit", [(0.25, 0.5, 0.0), (0.5, 0.5, 0.0), (1.0, 0.5, 1.0),
                                             (2.0, 1 / 6, 3 ** (-2 / 3))])
def test_boundedness_epsilon(alpha, eps, limit):
    e, lim = boundedness_epsilon(AlphaWienerParams(alpha, 1.0))
    assert e == pytest.approx(eps)
    assert lim == pytest.approx(limit, rel=1e-14)


def test_boundedness_epsilon_rejects_nonpositive():
    with pytest.raises(ValueError):
        boundedness_epsilon(type("P", (), {"alpha": 0.0, "T": 1.0})())


def test_general_alpha_constant_reproduces_alpha_wiener():
    g = general_alpha_spec(GeneralAlphaWienerParams(lambda t: 1.5 + 0 * np.asarray(t), 1.0))
    a = alpha_wiener_spec(AlphaWienerParams(1.5, 1.0))
    t = np.array([0.1, 0.5, 0.9])
    assert np.allclose(g.spec.phi(t), a.spec.phi(t), rtol=1e-12)
    assert np.allclose(g.maps.Q(t), a.maps.Q(t), rtol=1e-10)


def test_general_alpha_one_plus_t():
    # alpha = 1 + t, T = 1: int_0^t (1+u)/(1-u) du = -t - 2 ln(1-t) so phi = (1-t)^2 e^t
    m = general_alpha_spec(GeneralAlphaWienerParams(lambda t: 1 + np.asarray(t), 1.0, alpha_at_T=2.0))
    t = np.array([0.2, 0.6, 0.9])
    assert np.allclose(m.spec.phi(t), (1 - t) ** 2 * np.exp(t), rtol=1e-10)
    q_ref = [quad(lambda u: (1 - u) ** -4 * math.exp(-2 * u), 0, x, epsrel=1e-13)[0] for x in t]
    assert np.allclose(m.maps.Q(t), q_ref, rtol=1e-9)
    assert m.kernel(0.3, 0.7) == pytest.approx(covariance(m.spec, 0.3, 0.7, m.maps), rel=1e-9)
    ex = m.extras
    assert ex["delta1"] < 2.0 < ex["delta2"] < ex["delta1"] + 0.5
    assert abs(ex["tail_exponent"]) < 1e-12


def test_general_alpha_epsilon_example():
    assert general_alpha_epsilon(2.0, 1.9, 2.2) == pytest.approx(0.4 / 6.8, rel=1e-14)
    d1, d2 = choose_deltas(2.0)
    assert d1 == pytest.approx(1.98) and d2 == pytest.approx(2.02)
    with pytest.raises(ValueError):
        choose_deltas(2.0, 1.0, 2.1)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.51, 5.0), st.floats(0.001, 0.049))
def test_epsilon_makes_tail_exponent_vanish(aT, frac):
    d1, d2 = aT * (1 - frac), aT * (1 + frac)
    if not d2 < d1 + 0.5:
        return
    eps = general_alpha_epsilon(aT, d1, d2)
    assert eps > 0
    assert 1 - 2 * d2 + 2 * d1 / (2 * eps + 1) == pytest.approx(0.0, abs=1e-12)


def test_general_alpha_bound_dominates():
    m = general_alpha_spec(GeneralAlphaWienerParams(lambda t: 1 + np.asarray(t), 1.0, alpha_at_T=2.0))
    ex = m.extras
    t = np.linspace(max(ex["t0"], 0.01), 0.999, 40)
    lhs = m.spec.phi(t) * np.asarray(m.maps.Q(t)) ** (0.5 + ex["epsilon"])
    assert np.all(lhs <= ex["bound"](t) * (1 + 1e-9))


def test_ou_bridge_closed_forms():
    m = ou_bridge_kernel(OUBridgeParams(1.0, 1.0, 0.0, 0.0, 2.0))
    P = m.extras["parts"]
    assert P.gamma(0.0, math.log(2)) == pytest.approx(1.5, rel=1e-14)
    assert m.kernel(1.0, 1.0) == pytest.approx(math.sinh(1) ** 2 / math.sinh(2), rel=1e-13)
    assert m.kernel(0.0, 0.0) == 0.0
    s, t = 0.5, 1.2
    ref = math.sinh(s) * math.sinh(2 - t) / math.sinh(2)
    assert m.kernel(s, t) == pytest.approx(ref, rel=1e-13)
    assert covariance(m.spec, s, t, m.maps) == pytest.approx(ref, rel=1e-12)


def test_ou_bridge_mean():
    p = OUBridgeParams(1.0, 1.0, 0.0, 1.0, 1.0)
    assert ou_bridge_mean(p, 0.0, 0.5, 0.0) == pytest.approx(math.sinh(0.5) / math.sinh(1), rel=1e-14)
    assert ou_bridge_mean(p, 0.3, 0.3, 0.7) == pytest.approx(0.7, rel=1e-14)
    m = ou_bridge_kernel(p)
    assert solve_mean(m.spec, 0.5) == pytest.approx(math.sinh(0.5) / math.sinh(1), rel=1e-9)


def test_ou_bridge_small_q_is_linear():
    p = OUBridgeParams(1e-9, 1.0, 0.4, 0.4, 1.0)
    for t in (0.1, 0.5, 0.9):
        assert ou_bridge_mean(p, 0.0, t, 0.4) == pytest.approx(0.4, rel=1e-7)


def test_ou_bridge_variable_coefficients_match_constant():
    const = ou_bridge_kernel(OUBridgeParams(0.7, 1.3, 0.0, 0.0, 1.5))
    var = ou_bridge_kernel(OUBridgeParams(lambda t: 0.7 + 0 * np.asarray(t), lambda t: 1.3 + 0 * np.asarray(t),
                                          0.0, 0.0, 1.5))
    for s, t in [(0.2, 0.9), (0.5, 1.4)]:
        assert var.kernel(s, t) == pytest.approx(const.kernel(s, t), rel=1e-10)
        assert var.maps.Q(s) == pytest.approx(const.maps.Q(s), rel=1e-10)


def test_f_wiener_uniform_is_wiener_bridge():
    m = f_wiener_spec(FWienerParams(lambda t: 1 + 0 * np.asarray(t), lambda t: np.asarray(t, dtype=float)))
    t = np.array([0.1, 0.5, 0.8])
    assert np.allclose(m.maps.beta(t), np.log(t / (1 - t)), atol=1e-14)
    assert m.maps.v(0.5) ** 2 == pytest.approx(0.25)
    assert m.extras["beta_invertible"]


def test_f_wiener_power_drift_matches_alpha_wiener():
    a = 1.7
    m = f_wiener_spec(FWienerParams(lambda t: a * (1 - np.asarray(t)) ** (a - 1),
                                    lambda t: 1 - (1 - np.asarray(t)) ** a))
    t = np.array([0.2, 0.5, 0.9])
    assert np.allclose(m.spec.dlogphi(t), -a / (1 - t), rtol=1e-12)


def test_f_wiener_flat_density_flagged():
    f = lambda t: np.where((np.asarray(t) > 0.4) & (np.asarray(t) < 0.6), 0.0, 1 / 0.8)  # noqa: E731
    F = lambda t: np.clip(np.minimum(t, 0.4) / 0.8 + np.maximum(np.asarray(t) - 0.6, 0) / 0.8, 0, 1)  # noqa: E731
    m = f_wiener_spec(FWienerParams(f, F))
    assert not m.extras["beta_invertible"]


def test_f_wiener_validation():
    with pytest.raises(ValueError):
        FWienerParams(lambda t: 1 + 0 * np.asarray(t), lambda t: np.asarray(t) + 0.1)
    with pytest.raises(ValueError):
        FWienerParams(lambda t: 2 + 0 * np.asarray(t), lambda t: np.asarray(t))


def test_weighted_examples():
    proc = weighted_spec(WeightParams(lambda t: 1 + np.asarray(t)))
    assert proc.kernel(1.0, 2.0) == pytest.approx(6.0)
    assert covariance(proc.spec, 1.0, 2.0, proc.maps) == pytest.approx(6.0, rel=1e-14)
    unit = weighted_spec(WeightParams(lambda t: 1 + 0 * np.asarray(t)))
    assert unit.maps.Q(2.5) == pytest.approx(2.5)
    assert unit.maps.v(2.5) == pytest.approx(math.sqrt(2.5))
    br = weighted_spec(WeightParams(lambda t: (1 + np.asarray(t)) ** 2, bridge=True))
    assert br.maps.v(0.5) == pytest.approx(1.125, rel=1e-14)


def test_counterexample_values():
    za = counterexample_kernel("zero_area").kernel
    e = 0.1
    assert za(e, 1 - e) == pytest.approx(e ** 2 * (-3 * e ** 2 + 6 * e - 2), abs=1e-15)
    assert za(e, 1 - e) == pytest.approx(-0.0143, abs=1e-12)
    assert za(0.5, 0.5) == pytest.approx(1 / 16)
    gl = counterexample_kernel("glued").kernel
    assert gl(0.5, 1.5) == 0.0
    assert gl(0.5, 0.5) == pytest.approx(0.25) and gl(1.5, 1.5) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        counterexample_kernel("other")


@pytest.mark.parametrize("kind", ["zero_area", "glued"])
def test_counterexamples_are_psd(kind):
    k = counterexample_kernel(kind).kernel
    lo, hi = k.domain
    assert k.is_psd(np.linspace(lo, hi, 41)[1:-1])


def test_registry_roundtrip():
    m = build_family("alpha-wiener", {"alpha": 2, "T": 1})
    assert m.kernel(0.3, 0.6) == pytest.approx(alpha_kernel_oracle(2.0, 1.0, 0.3, 0.6), rel=1e-10)
    m = build_family("ou-bridge", {"q": "1", "sigma": 1, "T": 2})
    assert m.kernel(1.0, 1.0) == pytest.approx(math.sinh(1) ** 2 / math.sinh(2), rel=1e-9)
    m = build_family("f-wiener", {"f": "1", "F": "t"})
    assert m.maps.beta(0.5) == pytest.approx(0.0, abs=1e-15)
    m = build_family("weighted", {"w": "(1+t)**2", "bridge": True})
    assert m.maps.v(0.5) == pytest.approx(1.125)
    with pytest.raises(ValueError, match="unknown"):
        build_family("alpha-wiener", {"alpha": 1, "beta": 2})
    with pytest.raises(ValueError, match="unknown family"):
        build_family("nope")


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0.02, 0.98), st.floats(0.02, 0.98))
def test_alpha_wiener_identity_property(alpha, s, t):
    m = alpha_wiener_spec(AlphaWienerParams(alpha, 1.0))
    rhs = m.maps.v(s) * m.maps.v(t) * stationary_ou_cov(m.maps.beta(s), m.maps.beta(t))
    assert m.kernel(s, t) == pytest.approx(rhs, rel=1e-11, abs=1e-15)
