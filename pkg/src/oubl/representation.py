"""Deciding whether a Gaussian kernel is a space/time scaled stationary OU kernel.

Two entry points:

* :func:`verify_representation` takes a process with SDE coefficients and
  checks ``cov(s, t) = v(s) v(t) exp(-|beta(t) - beta(s)|/2)`` on a grid.
* :func:`kernel_representability` takes a bare kernel.  The standardized
  correlation ``r`` must be positive and multiplicative along ordered
  triples, ``r(s, t) = r(s, u) r(u, t)``; when it is, ``beta`` is
  reconstructed up to an additive constant from ``-2 ln r``.
"""
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .families import FamilyModel, boundedness_epsilon
from .numerics import chebyshev_interior, wynn_epsilon
from .process import DomainError, ProcessSpec, build_time_change, spec_kernel

PASS = "pass"
FAIL_NEGATIVE = "fail_negative_correlation"
FAIL_NONMULT = "fail_nonmultiplicative"
MULT_RTOL = 1e-6
MULT_FLOOR = 1e-12
NOT_REPRESENTABLE = "not representable with monotone time change"


@dataclass
class BoundednessResult:
    epsilon: float
    sup_value: float
    limit_estimate: float
    bounded: bool


@dataclass
class RepresentationReport:
    representable: bool
    max_identity_error: float
    separability_verdict: str
    witness: Optional[tuple] = None
    witness_value: Optional[float] = None
    boundedness: Optional[BoundednessResult] = None
    endpoint_extension: str = "none"
    message: str = ""
    grid: Optional[np.ndarray] = field(default=None, repr=False)
    beta_reconstructed: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self):
        d = asdict(self)
        for key in ("grid", "beta_reconstructed"):
            if d[key] is not None:
                d[key] = [float(x) for x in np.asarray(d[key])]
        if d["witness"] is not None:
            d["witness"] = [float(x) for x in d["witness"]]
        for key in ("max_identity_error", "witness_value"):
            if d[key] is not None and not math.isfinite(d[key]):
                d[key] = None
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def default_grid(lo, hi, n_cheb=64, n_end=16, end_depth=1e-6):
    """Chebyshev points in ``(lo, hi)`` plus geometric clusters at both ends."""
    L = hi - lo
    geo = L * np.geomspace(end_depth, 1e-2, n_end)
    pts = np.concatenate([chebyshev_interior(lo, hi, n_cheb), lo + geo, hi - geo])
    return np.unique(pts)


def _as_spec_maps(obj, quad_tol):
    if isinstance(obj, FamilyModel):
        if obj.spec is None:
            raise TypeError(f"{obj.name} has no SDE representation; use kernel_representability")
        return obj.spec, obj.maps or build_time_change(obj.spec, quad_tol), obj.kernel
    if isinstance(obj, ProcessSpec):
        maps = build_time_change(obj, quad_tol)
        return obj, maps, spec_kernel(obj, maps)
    if isinstance(obj, tuple) and len(obj) == 2:
        spec, maps = obj
        return spec, maps, spec_kernel(spec, maps)
    raise TypeError("expected a FamilyModel, a ProcessSpec or a (spec, maps) pair")


def default_epsilon(model):
    """A boundedness exponent known to work for the family, else ``None``."""
    if not isinstance(model, FamilyModel) or model.spec is None or not model.spec.has_finite_horizon:
        return None
    if model.name == "alpha-wiener":
        return boundedness_epsilon(model.params)[0] if model.params.alpha > 0 else None
    if model.name == "general-alpha-wiener":
        return model.extras.get("epsilon")
    if model.name in ("ou-bridge", "f-wiener", "weighted"):
        return 0.5
    return None


def verify_representation(model, grid=None, tol=1e-8, quad_tol=1e-10, epsilon=None,
                          check_bounds=True):
    """Check the scaled-OU covariance identity for a process on a grid.

    Parameters
    ----------
    model : FamilyModel or ProcessSpec or (spec, maps)
        The process.  A family model supplies its own covariance formula;
        otherwise ``phi(s) phi(t) Q(s ^ t)`` is used.
    grid : array_like, optional
        At least 8 strictly increasing points in ``(0, T)``; default
        :func:`default_grid`.
    tol : float
        Largest accepted identity residual.

    Returns
    -------
    RepresentationReport
    """
    spec, maps, kernel = _as_spec_maps(model, quad_tol)
    if grid is None:
        grid = default_grid(0.0, spec.probe_end())
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 8:
        raise ValueError("grid needs at least 8 points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if grid[0] <= 0 or (spec.has_finite_horizon and grid[-1] >= spec.T):
        raise ValueError("grid must lie inside (0, T)")
    beta = np.empty_like(grid)
    for i, t in enumerate(grid):
        try:
            beta[i] = maps.beta(t)
        except DomainError as exc:
            raise DomainError(f"beta undefined at grid point t={t:.6g}: {exc}") from None
    v = np.asarray(maps.v(grid), dtype=float)
    K = kernel.gram(grid)
    R = np.outer(v, v) * np.exp(-0.5 * np.abs(beta[:, None] - beta[None, :]))
    err = np.abs(K - R)
    i, j = np.unravel_index(int(np.argmax(err)), err.shape)
    max_err = float(err[i, j])

    sep = kernel_representability(kernel, grid)
    ok = max_err <= tol and sep.separability_verdict == PASS
    report = RepresentationReport(
        representable=bool(ok),
        max_identity_error=max_err,
        separability_verdict=sep.separability_verdict,
        grid=grid,
        beta_reconstructed=sep.beta_reconstructed,
    )
    if sep.separability_verdict != PASS:
        report.witness, report.witness_value = sep.witness, sep.witness_value
        report.message = NOT_REPRESENTABLE
    elif not ok:
        report.witness = (float(grid[min(i, j)]), float(grid[max(i, j)]))
        report.witness_value = max_err
        report.message = "covariance identity residual above tolerance"
    else:
        report.message = "representable"
    if check_bounds:
        eps = epsilon if epsilon is not None else default_epsilon(model)
        if eps is not None:
            b = check_boundedness((spec, maps), eps)
            report.boundedness = b
            report.endpoint_extension = "to_T" if b.bounded else "none"
    return report


def _standardize(kernel, grid):
    grid = np.asarray(grid, dtype=float)
    K = kernel.gram(grid)
    var = np.diag(K).copy()
    if np.any(var <= 0):
        bad = grid[np.argmax(var <= 0)]
        raise ValueError(f"variance vanishes at t={bad:.6g}; correlation undefined")
    sd = np.sqrt(var)
    return K, K / np.outer(sd, sd), sd


def kernel_representability(kernel, grid=None, rtol=MULT_RTOL, floor=MULT_FLOOR):
    """Separability test of a covariance kernel on a grid.

    Returns a report with verdict ``pass``, ``fail_negative_correlation``
    (witness pair with the most negative correlation, ``witness_value`` its
    covariance) or ``fail_nonmultiplicative`` (witness triple).  On ``pass``
    ``beta_reconstructed`` holds ``beta(t) - beta(t_mid)`` on the grid.
    """
    if grid is None:
        lo, hi = kernel.domain
        if not math.isfinite(hi):
            hi = 10.0
        grid = default_grid(lo, hi)
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    K, r, sd = _standardize(kernel, grid)
    n = grid.size
    iu = np.triu_indices(n, 1)
    if iu[0].size and np.min(r[iu]) <= 0:
        flat = r[iu]
        k = int(np.argmin(flat))
        i, j = iu[0][k], iu[1][k]
        return RepresentationReport(
            representable=False, max_identity_error=float("nan"),
            separability_verdict=FAIL_NEGATIVE,
            witness=(float(grid[i]), float(grid[j])), witness_value=float(K[i, j]),
            message=NOT_REPRESENTABLE, grid=grid)
    worst, wit = 0.0, None
    for j in range(1, n - 1):
        a = r[:j, j][:, None]
        b = r[j, j + 1:][None, :]
        direct = r[:j, j + 1:]
        viol = np.abs(direct - a * b) / (rtol * np.abs(direct) + floor)
        m = float(viol.max())
        if m > worst:
            worst = m
            ii, kk = np.unravel_index(int(np.argmax(viol)), viol.shape)
            wit = (float(grid[ii]), float(grid[j]), float(grid[j + 1 + kk]))
    if worst > 1.0:
        return RepresentationReport(
            representable=False, max_identity_error=float("nan"),
            separability_verdict=FAIL_NONMULT, witness=wit,
            witness_value=float(worst * rtol), message=NOT_REPRESENTABLE, grid=grid)
    mid = n // 2
    beta = np.where(np.arange(n) >= mid, -2.0 * np.log(r[mid, :]), 2.0 * np.log(r[:, mid]))
    recon = np.outer(sd, sd) * np.exp(-0.5 * np.abs(beta[:, None] - beta[None, :]))
    return RepresentationReport(
        representable=True, max_identity_error=float(np.max(np.abs(K - recon))),
        separability_verdict=PASS, message="representable", grid=grid,
        beta_reconstructed=beta)


def boundedness_grid(T, closed_form=True, per_decade=12):
    """Times accumulating at ``T``: ``T - T 10^-k`` down to 1e-13 (closed forms) or 1.5e-8."""
    deepest = 13.0 if closed_form else -math.log10(1.5e-8)
    k = np.linspace(math.log10(2.0), deepest, int(round((deepest - math.log10(2.0)) * per_decade)) + 1)
    return T - T * 10.0 ** -k


def _defined_points(maps, t):
    # drop times where Q is undefined in floating point (e.g. F(t) rounds to 1)
    try:
        q = np.asarray(maps.Q(t), dtype=float)
        return t[np.isfinite(q)]
    except DomainError:
        keep = []
        for x in t:
            try:
                if np.isfinite(maps.Q(x)):
                    keep.append(x)
            except DomainError:
                pass
        return np.asarray(keep)


def _phi_q_power(spec, maps, t, epsilon):
    with np.errstate(divide="ignore", over="ignore"):
        logh = np.log(spec.phi(t)) + (0.5 + epsilon) * np.log(np.asarray(maps.Q(t), dtype=float))
        return np.exp(logh)


def check_boundedness(model, epsilon, grid=None):
    """Decide numerically whether ``phi(t) Q(t)^(1/2 + eps)`` stays bounded as ``t -> T``.

    ``bounded`` holds when the supremum over the last decade of ``T - t``
    exceeds the supremum over earlier points by at most 1%.  The limit is
    estimated by Wynn's epsilon algorithm on the tail values (falling back
    to the last value when the acceleration is not self-consistent).
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if isinstance(model, FamilyModel):
        spec, maps = model.spec, model.maps
    else:
        spec, maps = model
    T = spec.T
    if grid is None:
        grid = boundedness_grid(T, maps.closed_form)
    t = _defined_points(maps, np.sort(np.asarray(grid, dtype=float)))
    h = _phi_q_power(spec, maps, t, epsilon)
    d = T - t
    last = d <= 10.0 * d.min()
    sup_all = float(np.max(h))
    sup_last = float(np.max(h[last]))
    sup_early = float(np.max(h[~last])) if np.any(~last) else sup_all
    bounded = bool(np.isfinite(sup_last) and sup_last <= 1.01 * sup_early + 1e-300)

    # limit on the decade-spaced subsequence nearest T
    dec = _defined_points(maps, T - T * 10.0 ** -np.arange(1, int(-math.log10(d.min() / T)) + 1))
    hv = _phi_q_power(spec, maps, dec, epsilon)
    tail = hv[-8:]
    est = wynn_epsilon(tail) if tail.size >= 3 else float(tail[-1])
    spread = abs(tail[-1] - tail[-2]) if tail.size >= 2 else 0.0
    if not np.isfinite(est) or abs(est - tail[-1]) > 10 * spread + 1e-14:
        est = float(tail[-1])
    est = max(est, 0.0)
    if not bounded:
        est = math.inf
    return BoundednessResult(epsilon=float(epsilon), sup_value=sup_all,
                             limit_estimate=float(est), bounded=bounded)
