import math

import numpy as np
import pytest
from scipy import stats

from oubl.families import build_family, counterexample_kernel
from oubl.process import CovarianceKernel, spec_from_json
from oubl.simulation import (PathEnsemble, argmax_histogram, export_ensemble_csv, histogram_from_locations,
                             jittered_cholesky, ou_argmax_locations, ou_argmax_with_subgrid, ou_first_passage_cdf,
                             path_normals, sample_covariance, sample_euler, sample_exact, sample_mean,
                             sample_stationary_ou, sample_transformed, standardized_kernel, transform_paths)

SEED = 20261018


def test_path_normals_independent_of_batch():
    a = path_normals(SEED, np.arange(10), 5)
    b = path_normals(SEED, np.array([7, 3]), 5)
    assert np.array_equal(a[7], b[0]) and np.array_equal(a[3], b[1])
    assert not np.array_equal(path_normals(SEED + 1, [0], 5), a[:1])


def test_sampling_independent_of_chunks_and_threads():
    k = build_family("alpha-wiener", {"alpha": 1, "T": 1}).kernel
    t = np.linspace(0.1, 0.9, 5)
    a = sample_exact(k, t, 300, SEED, chunk=64, threads=1).paths
    b = sample_exact(k, t, 300, SEED, chunk=100, threads=4).paths
    assert np.array_equal(a, b)


def test_jitter_ladder():
    G = np.ones((3, 3))  # rank one
    L, jit = jittered_cholesky(G)
    assert jit > 0
    assert np.allclose(L @ L.T, G, atol=1e-6)
    with pytest.raises(np.linalg.LinAlgError, match="smallest eigenvalue"):
        jittered_cholesky(np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_zero_area_sample_covariance():
    k = counterexample_kernel("zero_area").kernel
    t = np.linspace(0.1, 0.9, 9)
    ens = sample_exact(k, t, 40000, SEED)
    C, se = sample_covariance(ens)
    assert np.all(np.abs(C - k.gram(t)) <= 4 * se + 1e-12)


def test_zero_variance_pinned_to_mean():
    k = CovarianceKernel(lambda s, t: 0 * np.asarray(s) * np.asarray(t), mean=lambda t: 2 + 0 * np.asarray(t))
    ens = sample_exact(k, [0.5], 20, SEED)
    assert np.all(ens.paths == 2.0)


def test_wiener_bridge_variance():
    k = build_family("alpha-wiener", {"alpha": 1, "T": 1}).kernel
    ens = sample_exact(k, [0.5], 40000, SEED)
    C, se = sample_covariance(ens)
    assert abs(C[0, 0] - 0.25) <= 4 * se[0, 0]


def test_euler_deterministic_limit():
    spec = spec_from_json({"phi": "exp(-t)", "sigma": "0*t + 1e-300", "T": 2, "xi": 1.5})
    ens = sample_euler(spec, 1e-3, horizon_cut=1.0, n_paths=3, seed=SEED, record_every=100)
    ref = 1.5 * np.exp(-ens.times)
    assert np.allclose(ens.paths, ref, rtol=2e-3)


def test_euler_ou_bridge_mean():
    m = build_family("ou-bridge", {"q": 1, "sigma": 1, "a": 0, "b": 1, "T": 1})
    ens = sample_euler(m.spec, 1e-3, horizon_cut=0.5, n_paths=20000, seed=SEED, record_every=500,
                       with_coarse=True)
    mean, se = sample_mean(ens)
    cmean, _ = sample_mean(ens.info["coarse"])
    ref = math.sinh(0.5) / math.sinh(1)
    assert ens.times[-1] == pytest.approx(0.5)
    budget = abs(mean[-1] - cmean[-1])
    assert abs(mean[-1] - ref) <= 4 * se[-1] + budget


def test_euler_argument_checks():
    m = build_family("alpha-wiener", {"alpha": 1, "T": 1})
    with pytest.raises(ValueError):
        sample_euler(m.spec, 0.0)
    with pytest.raises(ValueError):
        sample_euler(m.spec, 1e-2, horizon_cut=1.0)
    with pytest.raises(ValueError):
        sample_euler(m.spec, 1e-2, horizon_cut=0.5, record_every=3, with_coarse=True)


def test_euler_overflow_truncates():
    spec = spec_from_json({"phi": "exp(t)", "psi": "1e307", "sigma": "1", "T": "inf", "t_max": 10})
    ens = sample_euler(spec, 1.0, horizon_cut=10.0, n_paths=4, seed=SEED)
    assert ens.truncated
    assert np.all(np.isfinite(ens.paths))


def test_stationary_ou_moments():
    t = np.array([-1.0, 0.0, 0.5, 2.0])
    ens = sample_stationary_ou(t, 40000, SEED)
    C, se = sample_covariance(ens)
    ref = np.exp(-0.5 * np.abs(t[:, None] - t[None, :]))
    assert np.all(np.abs(C - ref) <= 4 * se)
    assert stats.kstest(ens.paths[:, 1], "norm").pvalue > 0.01


def test_transform_route_weighted_bridge():
    m = build_family("weighted", {"w": "1+t", "bridge": True})
    ens = sample_transformed(m.maps, [0.0, 0.5, 1.0], 40000, SEED)
    assert np.all(ens.paths[:, 0] == 0) and np.all(ens.paths[:, 2] == 0)
    C, se = sample_covariance(ens)
    assert abs(C[1, 1] - 0.5625) <= 4 * se[1, 1]


def test_transform_requires_grid_match():
    m = build_family("alpha-wiener", {"alpha": 1, "T": 1})
    ou = sample_stationary_ou(np.array([0.0, 1.0]), 5, SEED)
    with pytest.raises(Exception, match="not on the OU grid"):
        transform_paths(ou, m.maps, [0.3])


def test_two_routes_agree():
    m = build_family("alpha-wiener", {"alpha": 1, "T": 1})
    t = np.linspace(0.1, 0.9, 6)
    C1, s1 = sample_covariance(sample_exact(m.kernel, t, 30000, SEED))
    C2, s2 = sample_covariance(sample_transformed(m.maps, t, 30000, SEED + 1))
    assert np.all(np.abs(C1 - C2) <= 4 * np.sqrt(s1 ** 2 + s2 ** 2))


def test_standardized_kernel():
    k = standardized_kernel(build_family("alpha-wiener", {"alpha": 1, "T": 1}).kernel)
    assert k(0.3, 0.3) == pytest.approx(1.0)
    s, t = 0.25, 0.75
    assert k(s, t) == pytest.approx(math.sqrt(s * (1 - t) / (t * (1 - s))))


def test_argmax_leftmost_on_ties():
    ens = PathEnsemble(np.linspace(0, 1, 5), np.ones((4, 5)), 0, "const")
    h = argmax_histogram(ens)
    assert h.mass[0] == 1.0 and h.mass[1:].sum() == 0.0


def test_ou_argmax_streaming_matches_paths():
    t = np.linspace(0, 2, 65)
    loc = ou_argmax_locations(t, 500, SEED)
    ens = sample_stationary_ou(t, 500, SEED)
    assert np.array_equal(loc, t[np.argmax(ens.paths, axis=1)])
    a, b = ou_argmax_with_subgrid(t, 500, SEED)
    assert np.array_equal(a, loc)
    assert np.all(np.isin(b, t[::2]))


def test_argmax_histogram_symmetric():
    t = np.linspace(0, 1, 257)
    loc = ou_argmax_locations(t, 40000, SEED)
    h = histogram_from_locations(loc, np.linspace(0, 1 + 1e-12, 9))
    d = np.abs(h.mass - h.mass[::-1])
    assert np.all(d <= 4 * np.sqrt(2) * h.stderr)


def test_first_passage_mc_sanity():
    r = ou_first_passage_cdf(0.0, 1.0, [0.5, 1.0], 4000, 1e-2, SEED)
    assert np.all(np.diff(r.cdf) >= 0)
    assert np.all(r.cdf >= r.cdf_discrete - 1e-12)
    assert np.all(r.stderr > 0)
    with pytest.raises(ValueError):
        ou_first_passage_cdf(1.0, 0.0, [1.0], 10, 1e-2, SEED)


def test_export_roundtrip(tmp_path):
    ens = sample_stationary_ou(np.array([0.0, 0.1, 0.2]), 4, SEED)
    p = tmp_path / "paths.csv"
    export_ensemble_csv(ens, p)
    data = np.loadtxt(p, delimiter=",")
    assert np.array_equal(data[0], ens.times)
    assert np.array_equal(data[1:], ens.paths)
    h = histogram_from_locations(np.array([0.1, 0.6]), np.array([0.0, 0.5, 1.0]))
    h.to_csv(tmp_path / "h.csv")
    assert (tmp_path / "h.csv").read_text().splitlines()[0] == "bin_left,bin_right,mass,stderr"
