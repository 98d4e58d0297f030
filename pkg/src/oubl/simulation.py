"""Monte Carlo oracles: exact Gaussian sampling, Euler-Maruyama, stationary OU paths.

Randomness is counter-based: path ``i`` of a run with seed ``seed`` draws
its normals from a Philox stream keyed by ``seed`` whose counter starts at
``i`` in the top word.  A path therefore never depends on how many other
paths are drawn, in what order, or on how many threads share the work.
"""
import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from ._accel import n_threads
from .process import CovarianceKernel, DomainError

DEFAULT_CHUNK = 4096


@dataclass
class PathEnsemble:
    """Sampled paths on a time grid (one path per row)."""

    times: np.ndarray
    paths: np.ndarray
    seed: int
    method: str
    truncated: bool = False
    info: dict = field(default_factory=dict)

    @property
    def n_paths(self):
        return self.paths.shape[0]


@dataclass
class MCEstimate:
    value: float
    stderr: float
    n: int


def path_normals(seed, paths, n):
    """Standard normals for the given path indices, ``n`` per path."""
    paths = np.asarray(paths, dtype=np.int64)
    out = np.empty((paths.size, n))
    for row, p in enumerate(paths):
        bg = np.random.Philox(key=int(seed), counter=[0, 0, 0, int(p)])
        out[row] = np.random.Generator(bg).standard_normal(n)
    return out


def _chunks(n_paths, chunk):
    return [np.arange(a, min(a + chunk, n_paths)) for a in range(0, n_paths, chunk)]


def _map_chunks(fn, n_paths, chunk=DEFAULT_CHUNK, threads=None):
    parts = _chunks(n_paths, chunk)
    threads = n_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(parts) == 1:
        return [fn(p) for p in parts]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, parts))


def mc_mean(samples):
    """Mean with standard error of a 1-d sample."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    sd = float(np.std(x, ddof=1)) if n > 1 else 0.0
    return MCEstimate(float(np.mean(x)), sd / math.sqrt(n) if n else float("nan"), int(n))


# --------------------------------------------------------------------------
# exact Gaussian sampling
# --------------------------------------------------------------------------


def jittered_cholesky(G):
    """Lower Cholesky factor of ``G`` with diagonal jitter escalation.

    The jitter starts at ``1e-14 trace/n`` and grows tenfold up to
    ``1e-8 trace/n``; beyond that a :class:`numpy.linalg.LinAlgError`
    reports the smallest eigenvalue.
    """
    n = G.shape[0]
    scale = float(np.trace(G)) / n if n else 0.0
    try:
        return np.linalg.cholesky(G), 0.0
    except np.linalg.LinAlgError:
        pass
    jit = 1e-14
    while jit <= 1e-8 * (1 + 1e-9):
        try:
            return np.linalg.cholesky(G + jit * scale * np.eye(n)), jit * scale
        except np.linalg.LinAlgError:
            jit *= 10.0
    lam = float(np.linalg.eigvalsh(G)[0])
    raise np.linalg.LinAlgError(f"covariance not factorizable; smallest eigenvalue {lam:.3e}")


def sample_exact(kernel, times, n_paths, seed, chunk=DEFAULT_CHUNK, threads=None):
    """Joint Gaussian draws with the kernel's mean and covariance on ``times``.

    Times with zero variance are pinned to the mean.

    Examples
    --------
    >>> from oubl.families import counterexample_kernel
    >>> k = counterexample_kernel("zero_area").kernel
    >>> ens = sample_exact(k, [0.25, 0.5], 10, seed=1)
    >>> ens.paths.shape
    (10, 2)
    """
    times = np.asarray(times, dtype=float)
    G = kernel.gram(times)
    mu = kernel.mean_vector(times)
    var = np.diag(G)
    scale = max(float(np.max(var)), 0.0) if var.size else 0.0
    live = var > 1e-15 * max(scale, 1e-300)
    idx = np.nonzero(live)[0]
    L = jittered_cholesky(G[np.ix_(idx, idx)])[0] if idx.size else None

    def run(rows):
        out = np.broadcast_to(mu, (rows.size, times.size)).copy()
        if idx.size:
            z = path_normals(seed, rows, idx.size)
            out[:, idx] += z @ L.T
        return out

    paths = np.vstack(_map_chunks(run, n_paths, chunk, threads))
    return PathEnsemble(times, paths, int(seed), "exact_gaussian")


# --------------------------------------------------------------------------
# Euler-Maruyama
# --------------------------------------------------------------------------


def dlogphi_fd(spec, t, dt):
    """Centred finite difference of ``ln phi`` with step ``max(1e-6, dt/100)``."""
    t = np.asarray(t, dtype=float)
    h = max(1e-6, dt / 100.0)
    lp = lambda x: np.log(spec.phi(x))
    centred = (lp(t + h) - lp(np.maximum(t - h, 0.0))) / (t + h - np.maximum(t - h, 0.0))
    # one-sided second-order rule where the centred stencil would leave [0, T)
    near0 = t < h
    if np.any(near0):
        t0 = t[near0]
        centred[near0] = (-3 * lp(t0) + 4 * lp(t0 + h) - lp(t0 + 2 * h)) / (2 * h)
    return centred


def sample_euler(spec, dt, horizon_cut=None, n_paths=1000, seed=0, record_every=1,
                 with_coarse=False, chunk=2048, threads=None):
    """Euler-Maruyama paths of ``dZ = (phi'/phi Z + psi) dt + sigma dB``.

    Parameters
    ----------
    dt : float
        Step size.
    horizon_cut : float, optional
        Last simulated time; default ``0.95 T`` (finite horizons) and must
        be below ``T``.
    record_every : int
        Keep every ``record_every``-th step.
    with_coarse : bool
        Also run the same Brownian path on the step ``2 dt`` (pairs of
        normals summed and divided by ``sqrt 2``), stored in
        ``ens.info["coarse"]``; ``record_every`` must then be even.

    Returns
    -------
    PathEnsemble
        ``truncated`` is set (and the grid cut) when any path overflowed.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if horizon_cut is None:
        if not spec.has_finite_horizon:
            raise ValueError("horizon_cut is required for infinite horizons")
        horizon_cut = 0.95 * spec.T
    if spec.has_finite_horizon and not horizon_cut < spec.T:
        raise ValueError("horizon_cut must be below T")
    m = int(round(horizon_cut / dt))
    stride = int(record_every)
    if with_coarse and (stride % 2 or m % 2):
        raise ValueError("coarse companion needs even record_every and an even step count")
    tk = dt * np.arange(m)
    a = dlogphi_fd(spec, tk, dt)
    p = np.zeros(m) if spec.psi_zero else np.asarray(spec.psi(tk), dtype=float)
    s = np.asarray(spec.sigma(tk), dtype=float)
    if with_coarse:
        tc = tk[::2]
        ac = dlogphi_fd(spec, tc, 2 * dt)
        pc = np.zeros(tc.size) if spec.psi_zero else np.asarray(spec.psi(tc), dtype=float)
        sc = np.asarray(spec.sigma(tc), dtype=float)

    def run(rows):
        z = path_normals(seed, rows, m)
        fine, bad = kernels.euler_linear(spec.xi, a, p, s, dt, z, stride)
        res = [fine, bad]
        if with_coarse:
            zc = (z[:, 0::2] + z[:, 1::2]) / math.sqrt(2.0)
            coarse, badc = kernels.euler_linear(spec.xi, ac, pc, sc, 2 * dt, zc, stride // 2)
            res += [coarse, badc]
        return res

    parts = _map_chunks(run, n_paths, chunk, threads)
    paths = np.vstack([r[0] for r in parts])
    bad = min(r[1] for r in parts)
    times = dt * np.arange(0, m + 1, stride)
    truncated = bad < m
    if truncated:
        keep = (bad // stride) + 1
        paths, times = paths[:, :keep], times[:keep]
    ens = PathEnsemble(times, paths, int(seed), "euler_maruyama", truncated=truncated,
                       info={"dt": dt, "first_bad_step": int(bad) if truncated else None})
    if with_coarse:
        cpaths = np.vstack([r[2] for r in parts])[:, :times.size]
        ens.info["coarse"] = PathEnsemble(times, cpaths, int(seed), "euler_maruyama",
                                          truncated=truncated, info={"dt": 2 * dt})
    return ens


# --------------------------------------------------------------------------
# stationary OU and the representation transform
# --------------------------------------------------------------------------


def _ou_coeffs(times):
    d = np.diff(times)
    if np.any(d <= 0):
        raise ValueError("times must be strictly increasing")
    return np.exp(-0.5 * d), np.sqrt(-np.expm1(-d))


def sample_stationary_ou(times, n_paths, seed, chunk=DEFAULT_CHUNK, threads=None):
    """Stationary OU paths (covariance ``exp(-|a - b|/2)``) by the exact AR(1) recursion."""
    times = np.asarray(times, dtype=float)
    dec, sc = _ou_coeffs(times)

    def run(rows):
        z = path_normals(seed, rows, times.size)
        return kernels.ar1_paths(z[:, 0], dec, sc, z[:, 1:])

    paths = np.vstack(_map_chunks(run, n_paths, chunk, threads))
    return PathEnsemble(times, paths, int(seed), "ou_recursion")


def transform_paths(ou, maps, target_times, rtol=1e-9):
    """``v(t) R(beta(t))`` for each target time, reading ``R`` off the OU grid.

    Targets where ``v`` vanishes (``t = 0``, and ``t = T`` for bridges)
    map to 0 without needing an OU grid point.
    """
    target = np.asarray(target_times, dtype=float)
    pinned = (target <= 0) | (target >= maps.T)
    out = np.zeros((ou.n_paths, target.size))
    live = np.nonzero(~pinned)[0]
    if live.size:
        b = np.atleast_1d(maps.beta(target[live]))
        pos = np.searchsorted(ou.times, b)
        pos = np.clip(pos, 0, ou.times.size - 1)
        for k in range(b.size):
            j = pos[k]
            cand = [c for c in (j - 1, j) if 0 <= c < ou.times.size]
            best = min(cand, key=lambda c: abs(ou.times[c] - b[k]))
            if abs(ou.times[best] - b[k]) > rtol * max(1.0, abs(b[k])):
                raise DomainError(f"beta({target[live][k]:.6g}) = {b[k]:.6g} is not on the OU grid")
            pos[k] = best
        v = np.atleast_1d(maps.v(target[live]))
        out[:, live] = ou.paths[:, pos] * v[None, :]
    return PathEnsemble(target, out, ou.seed, "transform_of_ou")


def sample_transformed(maps, target_times, n_paths, seed, **kw):
    """Sample ``v(t) R(beta(t))`` directly on ``target_times``."""
    target = np.asarray(target_times, dtype=float)
    live = target[(target > 0) & (target < maps.T)]
    grid = np.atleast_1d(maps.beta(live)) if live.size else np.array([0.0])
    ou = sample_stationary_ou(grid, n_paths, seed, **kw)
    return transform_paths(ou, maps, target)


# --------------------------------------------------------------------------
# estimators
# --------------------------------------------------------------------------


def sample_covariance(ens):
    """Sample covariance matrix and entrywise standard errors."""
    X = np.asarray(ens.paths, dtype=float)
    n = X.shape[0]
    D = X - X.mean(axis=0)
    C = D.T @ D / (n - 1)
    m = X.shape[1]
    se = np.empty((m, m))
    for i in range(m):
        prod = D[:, i:i + 1] * D[:, i:]
        se[i, i:] = prod.std(axis=0, ddof=1) / math.sqrt(n)
        se[i:, i] = se[i, i:]
    return C, se


def sample_mean(ens):
    X = np.asarray(ens.paths, dtype=float)
    return X.mean(axis=0), X.std(axis=0, ddof=1) / math.sqrt(X.shape[0])


@dataclass
class ArgmaxHistogram:
    bin_left: np.ndarray
    bin_right: np.ndarray
    mass: np.ndarray
    stderr: np.ndarray
    n: int

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_left", "bin_right", "mass", "stderr"])
            for row in zip(self.bin_left, self.bin_right, self.mass, self.stderr):
                w.writerow([f"{x:.17g}" for x in row])


def histogram_from_locations(loc, edges):
    """Normalized histogram (with binomial standard errors) of argmax locations."""
    loc = np.asarray(loc, dtype=float)
    edges = np.asarray(edges, dtype=float)
    idx = np.clip(np.searchsorted(edges, loc, side="right") - 1, 0, edges.size - 2)
    counts = np.bincount(idx, minlength=edges.size - 1).astype(float)
    n = loc.size
    p = counts / n
    return ArgmaxHistogram(edges[:-1], edges[1:], p, np.sqrt(p * (1 - p) / n), n)


def argmax_histogram(ens, edges=None):
    """Leftmost-maximum location of each path, histogrammed.

    With ``edges=None`` every grid time is its own bin (mass per grid point).
    """
    idx = np.argmax(ens.paths, axis=1)
    loc = ens.times[idx]
    if edges is None:
        t = ens.times
        mid = 0.5 * (t[1:] + t[:-1])
        edges = np.concatenate([[t[0]], mid, [t[-1]]])
        edges[-1] = np.nextafter(edges[-1], np.inf)
    return histogram_from_locations(loc, edges)


def ou_argmax_locations(times, n_paths, seed, chunk=DEFAULT_CHUNK, threads=None):
    """Leftmost argmax times of stationary OU paths on ``times``, without storing paths."""
    times = np.asarray(times, dtype=float)
    dec, sc = _ou_coeffs(times)

    def run(rows):
        z = path_normals(seed, rows, times.size)
        return kernels.ar1_argmax(z[:, 0], dec, sc, z[:, 1:])

    idx = np.concatenate(_map_chunks(run, n_paths, chunk, threads))
    return times[idx]


def ou_argmax_with_subgrid(times, n_paths, seed, chunk=DEFAULT_CHUNK, threads=None):
    """Argmax times of stationary OU paths on ``times`` and on its every-other-point subgrid.

    Both use the same paths; their difference measures the grid resolution
    error of the argmax.  ``times`` needs an odd number of points so the
    subgrid keeps both ends.
    """
    times = np.asarray(times, dtype=float)
    if times.size % 2 == 0:
        raise ValueError("need an odd number of grid points")
    dec, sc = _ou_coeffs(times)

    def run(rows):
        z = path_normals(seed, rows, times.size)
        x = kernels.ar1_paths(z[:, 0], dec, sc, z[:, 1:])
        return np.stack([np.argmax(x, axis=1), 2 * np.argmax(x[:, ::2], axis=1)])

    idx = np.concatenate(_map_chunks(run, n_paths, chunk, threads), axis=1)
    return times[idx[0]], times[idx[1]]


def standardized_kernel(kernel):
    """Correlation kernel ``cov(s, t)/sqrt(var(s) var(t))`` with zero mean."""
    def cov(s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        return kernel.cov(s, t) / np.sqrt(kernel.cov(s, s) * kernel.cov(t, t))

    return CovarianceKernel(cov, domain=kernel.domain, closed=False, label=f"standardized {kernel.label}")


@dataclass
class FirstPassageMC:
    """First-passage CDF estimates at the requested horizons."""

    horizons: np.ndarray
    cdf: np.ndarray
    stderr: np.ndarray
    dt_budget: np.ndarray
    cdf_discrete: np.ndarray
    n: int
    dt: float


def ou_first_passage_cdf(x, y, horizons, n_paths, dt, seed, chunk=2048, threads=None):
    """Monte Carlo ``P(first hit of y before U | R_0 = x)`` for the stationary OU process.

    Paths follow the exact OU transition on step ``dt``; between grid
    points a crossing is accounted for by the Brownian-bridge probability
    ``exp(-2 (y - a)(y - b)/dt)``, and each path contributes its conditional
    crossing probability.  ``dt_budget`` is the difference against the same
    estimator on the every-other-point subsample (step ``2 dt``).
    """
    if not x < y:
        raise ValueError("need x < y")
    H = np.asarray(horizons, dtype=float)
    rec = 2 * np.round(H / (2 * dt)).astype(np.int64)
    m = int(rec.max())

    def run(rows):
        z = path_normals(seed, rows, m)
        fine, coarse, plain = kernels.ou_passage_survival(x, y, dt, z, rec)
        return np.stack([fine.sum(0), (fine ** 2).sum(0), coarse.sum(0), plain.sum(0)])

    tot = np.sum(_map_chunks(run, n_paths, chunk, threads), axis=0)
    n = n_paths
    surv = tot[0] / n
    var = np.maximum(tot[1] / n - surv ** 2, 0.0) * n / (n - 1)
    return FirstPassageMC(H, 1 - surv, np.sqrt(var / n), np.abs(tot[2] / n - surv),
                          1 - tot[3] / n, n, dt)


# --------------------------------------------------------------------------
# export
# --------------------------------------------------------------------------


def export_ensemble_csv(ens, path):
    """Times as the header row, then one path per row (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"{t:.17g}" for t in ens.times])
        for row in ens.paths:
            w.writerow([f"{x:.17g}" for x in row])
