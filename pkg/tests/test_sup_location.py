import math

import numpy as np
import pytest

from oubl.families import build_family
from oubl.passage import first_passage_density
from oubl.process import DomainError
from oubl.sup_location import (ScaleSpeed, StandardizedArgmax, StandardizedProcessMap, SupLocConfig,
                               SupLocationEngine, argmax_density_of_standardized, reduce_argmax,
                               sup_location_density, trivariate_density)


@pytest.fixture(scope="module")
def engine():
    return SupLocationEngine(1.0)


def test_frozen_values(engine):
    # frozen from agreement of the two independent A-factor routes
    s = np.array([0.001, 0.01, 0.1, 0.3, 0.5])
    ref = np.array([9.04426495, 2.94892579, 1.05354545, 0.72951461, 0.67834306])
    assert np.allclose(engine.density(s), ref, atol=2e-7)
    assert np.allclose(engine.density(s, "laplace"), ref, atol=2e-7)


def test_symmetry_and_bound(engine):
    s = np.array([0.05, 0.2, 0.35, 0.65, 0.8, 0.95])
    tab = engine.tabulate(s)
    assert np.allclose(tab.f, tab.f[::-1], atol=1e-6)
    assert np.all(tab.f <= tab.bound() + 1e-6)
    assert np.all(tab.f >= 0)
    assert np.all(tab.residual <= 1e-7) and not tab.flagged.any()
    assert tab.diagnostics["n_flagged"] == 0


def test_total_mass(engine):
    assert engine.mass(0.0, 1.0) == pytest.approx(1.0, abs=1e-6)
    inner = engine.mass(0.02, 0.98)
    wider = engine.mass(0.005, 0.995)
    assert inner < wider < 1.0


def test_endpoint_growth(engine):
    s = np.geomspace(1e-4, 1e-3, 6)
    f = engine.density(s)
    assert np.all(np.diff(f) < 0)


def test_other_horizon_has_unit_mass():
    e = SupLocationEngine(2.0)
    assert e.mass(0.0, 2.0) == pytest.approx(1.0, abs=1e-6)


def test_bin_masses_and_cdf(engine):
    edges = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    m = engine.bin_masses(edges)
    assert m.sum() == pytest.approx(1.0, abs=1e-6)
    assert m[0] == pytest.approx(m[3], abs=1e-9)
    p, P = engine.cdf_interpolant(0.1, 0.9)
    assert P(0.9) - P(0.1) == pytest.approx(engine.mass(0.1, 0.9), rel=1e-4)


def test_argument_checks():
    with pytest.raises(ValueError):
        SupLocationEngine(0.0)
    with pytest.raises(ValueError):
        SupLocationEngine(1.0, SupLocConfig(route="other"))
    with pytest.raises(ValueError):
        SupLocationEngine(1.0).density([1.0])


def test_sup_location_density_wrapper():
    out = sup_location_density(1.0, [0.5], SupLocConfig(check=False))
    assert out.f[0] == pytest.approx(0.67834306, abs=2e-7)
    assert np.isnan(out.residual[0])
    assert out.window == (0.02, 0.98)


def test_trivariate_density():
    n = first_passage_density(0.0, 1.0, 1.0)
    assert trivariate_density(0.0, 1.0, 1.0, 0.0, 2.0) == pytest.approx(n * n * 2 * math.exp(0.5), rel=1e-12)
    assert trivariate_density(2.0, 1.0, 1.0, 0.0, 2.0) == 0.0
    assert trivariate_density(0.0, 1.0, 1.0, 1.5, 2.0) == 0.0
    with pytest.raises(ValueError):
        trivariate_density(0.0, 2.0, 1.0, 0.0, 2.0)


def test_scale_speed():
    ss = ScaleSpeed()
    assert ss.scale(0.0) == 0.0
    h = 1e-6
    assert (ss.scale(0.7 + h) - ss.scale(0.7 - h)) / (2 * h) == pytest.approx(float(ss.scale_density(0.7)), rel=1e-8)
    assert float(ss.speed_density(0.0)) == 2.0


def test_wiener_bridge_reduction():
    m = build_family("alpha-wiener", {"alpha": 1, "T": 1})
    red = reduce_argmax(StandardizedProcessMap(m.maps, 0.25, 0.75))
    assert red.ou_interval[0] == pytest.approx(math.log(1 / 3), abs=1e-15)
    assert red.ou_interval[1] == pytest.approx(math.log(3), abs=1e-15)
    assert red.length == pytest.approx(2 * math.log(3), abs=1e-15)
    r = np.array([0.0, 0.5, red.length])
    t = red.pullback(r)
    assert t[0] == 0.25 and t[-1] == 0.75
    # beta(t) = logit(t) so the pullback is the logistic function
    assert t[1] == pytest.approx(1 / (1 + math.exp(-(math.log(1 / 3) + 0.5))), abs=1e-13)


def test_degenerate_interval():
    m = build_family("alpha-wiener", {"alpha": 1, "T": 1})
    red = reduce_argmax(StandardizedProcessMap(m.maps, 0.4, 0.4))
    assert red.length == 0.0
    assert red.pullback(0.3) == 0.4
    with pytest.raises(ValueError):
        StandardizedArgmax(StandardizedProcessMap(m.maps, 0.4, 0.4))


def test_f_wiener_symmetric_interval():
    m = build_family("f-wiener", {"f": "1", "F": "t"})
    lo, hi = StandardizedProcessMap(m.maps, 0.3, 0.7).ou_interval
    assert lo == pytest.approx(-hi, abs=1e-14)


def test_noninvertible_beta_rejected():
    spec_family = build_family("weighted", {"w": "1+t", "bridge": True})
    with pytest.raises(ValueError):
        StandardizedProcessMap(spec_family.maps, 0.0, 0.5)
    from oubl.families import FWienerParams, f_wiener_spec
    f = lambda t: np.where((np.asarray(t) > 0.4) & (np.asarray(t) < 0.6), 0.0, 1.25)  # noqa: E731
    F = lambda t: np.minimum(t, 0.4) / 0.8 + np.maximum(np.asarray(t) - 0.6, 0) / 0.8  # noqa: E731
    flat = f_wiener_spec(FWienerParams(f, F))
    with pytest.raises(DomainError):
        StandardizedProcessMap(flat.maps, 0.3, 0.7)


def test_pullback_mass_and_symmetry():
    m = build_family("alpha-wiener", {"alpha": 1, "T": 1})
    sa = StandardizedArgmax(StandardizedProcessMap(m.maps, 0.25, 0.75), SupLocConfig(route="laplace", check=False))
    assert sa.mass() == pytest.approx(sa.engine.mass(0.0, sa.red.length), abs=1e-6)
    out = argmax_density_of_standardized(sa.smap, [0.3, 0.7], SupLocConfig(route="laplace", check=False))
    assert out.f[0] == pytest.approx(out.f[1], rel=1e-9)
