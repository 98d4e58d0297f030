import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oubl.hermite import (HermiteToleranceError, hermite_complex, hermite_imag, hermite_integral, hermite_real,
                          log_eigenfunction, passage_laplace)


def trapezoid_oracle(alpha, v, n=1_000_000):
    # s = e^x turns the log-oscillation near s = 0 into a smooth, decaying integrand
    x = np.linspace(-40.0, 3.0, n)
    s = np.exp(x)
    ph = 0.5 * alpha * np.log1p((v / s) ** 2)
    g = np.exp(-s * s) * s * np.exp(1j * ph)
    h = x[1] - x[0]
    return 2 / math.sqrt(math.pi) * h * (g.sum() - 0.5 * (g[0] + g[-1]))


def pcfd_oracle(alpha, v):
    mpmath = pytest.importorskip("mpmath")
    nu = 1j * alpha
    val = mpmath.exp(v * v / 2) * mpmath.pcfd(nu, math.sqrt(2) * v) / mpmath.pcfd(nu, 0)
    return complex(val)


def test_special_values():
    for a in (-3.0, 0.5, 7.0):
        assert hermite_real(a, 0.0) == 1.0 and hermite_imag(a, 0.0) == 0.0
    for v in (-2.0, 0.3, 4.0):
        assert hermite_real(0.0, v) == 1.0 and hermite_imag(0.0, v) == 0.0


def test_matches_trapezoid_oracle():
    ref = trapezoid_oracle(2.0, 1.0)
    assert hermite_real(2.0, 1.0) == pytest.approx(ref.real, abs=1e-10)
    assert hermite_imag(2.0, 1.0) == pytest.approx(ref.imag, abs=1e-10)


@pytest.mark.parametrize("alpha,v", [(2.0, 1.0), (0.7, 0.25), (5.0, 2.0), (-1.5, 1.3), (12.0, 0.8)])
def test_integral_matches_parabolic_cylinder(alpha, v):
    assert hermite_integral(alpha, v) == pytest.approx(pcfd_oracle(alpha, v), abs=1e-10)


def test_literal_integral_is_even():
    assert hermite_integral(2.0, -1.0) == hermite_integral(2.0, 1.0)


@pytest.mark.parametrize("alpha,v", [(2.0, 1.0), (2.0, -1.0), (3.0, -0.6), (0.5, -2.0)])
def test_continuation_matches_parabolic_cylinder(alpha, v):
    assert hermite_complex(alpha, v) == pytest.approx(pcfd_oracle(alpha, v), rel=1e-9)


def test_continuation_agrees_with_integral_for_nonnegative_v():
    v = np.array([0.0, 0.4, 1.0, 2.5])
    cont = hermite_complex(1.7, v)
    lit = np.array([hermite_integral(1.7, x) for x in v])
    assert np.allclose(cont, lit, atol=1e-9)


def test_vectorised_real_imag():
    v = np.array([[0.1, 0.5], [1.0, 2.0]])
    out = hermite_real(1.0, v)
    assert out.shape == v.shape
    assert out[1, 0] == pytest.approx(hermite_real(1.0, 1.0))


def test_tolerance_error_reports_estimate():
    with pytest.raises(HermiteToleranceError) as exc:
        hermite_integral(2000.0, 3.0, tol=1e-14, nodes=2)
    assert exc.value.achieved > 1e-14


@settings(max_examples=30, deadline=None)
@given(st.floats(-6, 6), st.floats(-3, 3))
def test_bounded_by_one(alpha, v):
    z = hermite_integral(alpha, v)
    assert abs(z.real) <= 1 + 1e-10 and abs(z.imag) <= 1 + 1e-10


def test_log_eigenfunction_normalized():
    lf = log_eigenfunction(np.array([0.5, 1 + 2j]), np.array([1.0, 0.0, -2.0]))
    assert lf.shape == (2, 3)
    assert np.all(lf[:, 1] == 0)


def test_laplace_transform_limits():
    # L(s) is a Laplace transform of a probability law: L(0) = 1, 0 < L(s) < 1, decreasing
    s = np.array([1e-12, 0.1, 1.0, 5.0])
    L = passage_laplace(s, -0.5, 1.0).real
    assert L[0] == pytest.approx(1.0, abs=1e-9)
    assert np.all(np.diff(L) < 0)
    with pytest.raises(ValueError):
        passage_laplace(1.0, 1.0, 0.5)


def test_laplace_closed_form_at_mean_level():
    # from x to 0: E exp(-s tau) for tau = log(1 + T_a), T_a the Brownian hitting time of |x|
    mpmath = pytest.importorskip("mpmath")
    x, s = -1.0, 0.8
    a = abs(x)
    f = lambda t: math.exp(-s * math.log1p(t)) * a / math.sqrt(2 * math.pi * t ** 3) * math.exp(-a * a / (2 * t))
    ref = float(mpmath.quad(f, [0, 1, 10, mpmath.inf]))
    assert passage_laplace(s, x, 0.0).real == pytest.approx(ref, rel=1e-9)
