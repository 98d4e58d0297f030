"""Linear Gauss-Markov SDEs and their space/time scaling onto a stationary OU process.

The family handled here is

    dZ_t = (phi'(t)/phi(t) Z_t + psi(t)) dt + sigma(t) dB_t,   Z_0 = xi,

on ``[0, T)``, whose solution has mean ``phi(t) (xi + int_0^t psi/phi)`` and
covariance ``phi(s) phi(t) Q(s ^ t)`` with ``Q(t) = int_0^t sigma^2/phi^2``.
With ``beta = ln Q`` and ``v = phi sqrt(Q)`` the centred process has the law
of ``v(t) R(beta(t))`` for a stationary OU process ``R`` with covariance
``exp(-|a - b|/2)``.
"""
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .expr import Expression

INF = math.inf
DEFAULT_QUAD_TOL = 1e-10
NEAR_T_FRACTION = 1e-8


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class DomainError(ValueError):
    """A quantity was requested where it is undefined."""


def as_vectorized(fn):
    """Wrap a scalar-or-array callable so it maps arrays elementwise."""
    if getattr(fn, "_oubl_vectorized", False):
        return fn

    def wrapped(t):
        arr = np.asarray(t, dtype=float)
        try:
            out = np.asarray(fn(arr), dtype=float)
            if out.shape != arr.shape:
                out = np.broadcast_to(out, arr.shape).copy()
        except (TypeError, ValueError):
            out = np.vectorize(lambda x: float(fn(float(x))), otypes=[float])(arr)
        return float(out) if out.ndim == 0 else out

    wrapped._oubl_vectorized = True
    wrapped.__wrapped__ = fn
    return wrapped


def adaptive_quad(f, a, b, tol=DEFAULT_QUAD_TOL, limit=200):
    """Integrate a scalar function with QUADPACK's adaptive Gauss-Kronrod rule.

    Raises :class:`QuadratureError` when the error estimate stays above
    ``10 * max(tol, 1e-12 |I|)``.
    """
    if a == b:
        return 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        res = quad(f, a, b, epsabs=tol, epsrel=1e-12, limit=limit, full_output=1)
    val, err = res[0], res[1]
    if not np.isfinite(val) or (len(res) > 3 and err > 10 * max(tol, 1e-12 * abs(val))):
        raise QuadratureError(
            f"quadrature on [{a:.6g}, {b:.6g}] reached error {err:.3g} (requested {tol:.3g})",
            achieved=err,
        )
    return val, err


def cumulative_quad(f, ts, tol=DEFAULT_QUAD_TOL):
    """``int_0^t f`` at every entry of ``ts`` (any order), integrating piecewise."""
    ts = np.asarray(ts, dtype=float)
    flat = ts.ravel()
    order = np.argsort(flat, kind="stable")
    out = np.empty_like(flat)
    acc, left = 0.0, 0.0
    for i in order:
        t = flat[i]
        if t > left:
            val, _ = adaptive_quad(f, left, t, tol)
            acc += val
            left = t
        out[i] = acc
    return out.reshape(ts.shape)


def _probe_window(T, t_max):
    if math.isfinite(T):
        return T
    return 10.0 if t_max is None else float(t_max)


@dataclass(frozen=True)
class ProcessSpec:
    """Coefficients ``(phi, psi, sigma)`` on ``[0, T)`` and initial value ``xi``.

    Parameters
    ----------
    phi, psi, sigma : callable
        Vectorised coefficient functions.  ``phi(0)`` must equal 1 and ``phi``
        must be positive; ``sigma`` must not vanish identically near 0.
    T : float
        Horizon, ``math.inf`` allowed.
    xi : float
        Deterministic initial value.
    t_max : float, optional
        Right end of probe grids when ``T`` is infinite (default 10).
    Q_closed : callable, optional
        Closed form of ``int_0^t sigma^2/phi^2``; families set this.
    Q_limit_closed : float, optional
        Known value of ``lim_{t -> T} Q(t)``.
    dlogphi : callable, optional
        Analytic ``phi'/phi``.
    psi_zero : bool
        Shortcut flag for ``psi == 0``.
    """

    phi: Callable
    psi: Callable
    sigma: Callable
    T: float = 1.0
    xi: float = 0.0
    label: str = "custom"
    t_max: Optional[float] = None
    Q_closed: Optional[Callable] = None
    Q_limit_closed: Optional[float] = None
    dlogphi: Optional[Callable] = None
    psi_zero: bool = False
    delta: float = field(init=False, default=float("nan"))

    def __post_init__(self):
        for name in ("phi", "psi", "sigma"):
            object.__setattr__(self, name, as_vectorized(getattr(self, name)))
        if self.Q_closed is not None:
            object.__setattr__(self, "Q_closed", as_vectorized(self.Q_closed))
        if self.dlogphi is not None:
            object.__setattr__(self, "dlogphi", as_vectorized(self.dlogphi))
        T = float(self.T)
        if not T > 0:
            raise ValueError("horizon T must be positive")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "xi", float(self.xi))
        phi0 = self.phi(0.0)
        if abs(phi0 - 1.0) > 1e-12:
            raise ValueError(f"phi(0) must be 1, got {phi0!r}")
        H = _probe_window(T, self.t_max)
        grid = np.linspace(0.0, H, 65)
        if math.isfinite(T):
            grid = grid[:-1]
        ph = self.phi(grid)
        if not np.all(np.isfinite(ph)) or np.any(ph <= 0):
            bad = grid[np.argmax(~(np.isfinite(ph) & (ph > 0)))]
            raise ValueError(f"phi must be positive on [0, T); fails at t={bad:.6g}")
        probe = np.geomspace(1e-8 * H, 0.5 * H, 64)
        nz = self.sigma(probe) != 0
        if not nz[0]:
            raise ValueError("sigma vanishes near 0; the time change would be undefined")
        k = len(nz) if nz.all() else int(np.argmin(nz))
        object.__setattr__(self, "delta", float(probe[k - 1]))

    @property
    def has_finite_horizon(self):
        return math.isfinite(self.T)

    def probe_end(self):
        """Right end of probe grids: ``T`` or ``t_max`` for infinite horizons."""
        return _probe_window(self.T, self.t_max)


@dataclass(frozen=True)
class TimeChangeMap:
    """``Q``, ``beta = ln Q`` and ``v = phi sqrt(Q)`` for a spec."""

    Q: Callable
    beta: Callable
    v: Callable
    Q_limit: float
    closed_form: bool
    T: float
    quad_tol: float
    dbeta: Optional[Callable] = None
    spec: Optional[ProcessSpec] = None


class CovarianceKernel:
    """Mean and covariance functions of a Gaussian process on a time domain.

    ``cov(s, t)`` and ``mean(t)`` must broadcast over numpy arrays.
    """

    def __init__(self, cov, mean=None, domain=(0.0, 1.0), closed=True, label=""):
        self.cov = cov
        self.mean = mean if mean is not None else (lambda t: np.zeros_like(np.asarray(t, dtype=float)))
        self.domain = (float(domain[0]), float(domain[1]))
        self.closed = bool(closed)
        self.label = label

    def __call__(self, s, t):
        return self.cov(s, t)

    def variance(self, t):
        return self.cov(t, t)

    def gram(self, times):
        times = np.asarray(times, dtype=float)
        S, U = np.meshgrid(times, times, indexing="ij")
        G = np.asarray(self.cov(S, U), dtype=float)
        return 0.5 * (G + G.T)

    def mean_vector(self, times):
        times = np.asarray(times, dtype=float)
        return np.broadcast_to(np.asarray(self.mean(times), dtype=float), times.shape).copy()

    def min_eigenvalue(self, times):
        return float(np.linalg.eigvalsh(self.gram(times))[0])

    def is_psd(self, times, tol=1e-12):
        G = self.gram(times)
        scale = max(1.0, float(np.max(np.abs(np.diag(G)))))
        return float(np.linalg.eigvalsh(G)[0]) >= -tol * scale

    def __repr__(self):
        return f"CovarianceKernel({self.label!r}, domain={self.domain})"


def stationary_ou_cov(a, b):
    """Covariance ``exp(-|a - b|/2)`` of the stationary OU process."""
    return np.exp(-0.5 * np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


STATIONARY_OU = CovarianceKernel(stationary_ou_cov, domain=(-INF, INF), label="stationary-ou")


def _check_time(spec, t, allow_T=False):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("times must be non-negative")
    if spec.has_finite_horizon and not allow_T and np.any(t >= spec.T):
        raise DomainError(f"times must lie in [0, {spec.T})")
    return t


def _extrapolate_limit(values):
    # geometric-tail Aitken on the last three values, +inf when not settling
    d = np.diff(values)
    if d[-1] <= 0:
        return float(values[-1])
    if d[-2] <= 0:
        return float(values[-1])
    r = d[-1] / d[-2]
    if r >= 0.9:
        return INF
    return float(values[-1] + d[-1] * r / (1.0 - r))


def _probe_limit(Q, pts):
    # Q along points approaching the horizon; overflow on the way means divergence
    vals = []
    for t in pts:
        try:
            with np.errstate(over="raise", divide="raise"):
                q = float(Q(t))
        except (ZeroDivisionError, FloatingPointError, OverflowError, QuadratureError):
            return INF
        if not math.isfinite(q):
            return INF
        vals.append(q)
    return _extrapolate_limit(np.asarray(vals))


def build_time_change(spec, quad_tol=DEFAULT_QUAD_TOL):
    """Space/time scalings ``Q``, ``beta``, ``v`` for ``spec``.

    Uses ``spec.Q_closed`` when present, otherwise cumulative adaptive
    quadrature of ``sigma^2/phi^2``.  Quadrature-backed ``Q`` refuses
    times within ``1e-8 T`` of ``T``.

    Returns
    -------
    TimeChangeMap
    """
    if not quad_tol > 0:
        raise ValueError("quad_tol must be positive")
    closed = spec.Q_closed is not None
    T = spec.T

    if closed:
        def Q(t):
            t = _check_time(spec, t)
            return spec.Q_closed(t)
    else:
        def integrand(u):
            return float(spec.sigma(u)) ** 2 / float(spec.phi(u)) ** 2

        def Q(t):
            t = _check_time(spec, t)
            if spec.has_finite_horizon and np.any(t > T * (1.0 - NEAR_T_FRACTION)):
                raise DomainError(f"Q is not evaluated within {NEAR_T_FRACTION:g}*T of T without a closed form")
            out = cumulative_quad(integrand, t, quad_tol)
            return float(out) if out.ndim == 0 else out

    def beta(t):
        q = np.asarray(Q(t), dtype=float)
        if np.any(q <= 0):
            tt = np.broadcast_to(np.asarray(t, dtype=float), q.shape)
            bad = float(np.ravel(tt)[np.argmax(np.ravel(q) <= 0)])
            raise DomainError(f"beta undefined at t={bad:.6g}: Q(t) = 0")
        out = np.log(q)
        return float(out) if out.ndim == 0 else out

    def v(t):
        q = np.asarray(Q(t), dtype=float)
        out = spec.phi(np.asarray(t, dtype=float)) * np.sqrt(np.maximum(q, 0.0))
        return float(out) if np.ndim(out) == 0 else out

    def dbeta(t):
        t = np.asarray(t, dtype=float)
        out = spec.sigma(t) ** 2 / (spec.phi(t) ** 2 * np.asarray(Q(t), dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    if spec.Q_limit_closed is not None:
        q_lim = float(spec.Q_limit_closed)
    elif spec.has_finite_horizon:
        q_lim = _probe_limit(Q, T * (1.0 - 10.0 ** -np.arange(1, 8)))
    else:
        q_lim = _probe_limit(Q, _probe_window(T, spec.t_max) * 2.0 ** np.arange(0, 12))
    return TimeChangeMap(Q=Q, beta=beta, v=v, Q_limit=q_lim, closed_form=closed, T=T,
                         quad_tol=quad_tol, dbeta=dbeta, spec=spec)


def solve_mean(spec, t, quad_tol=DEFAULT_QUAD_TOL):
    """``E Z_t = phi(t) (xi + int_0^t psi/phi)``."""
    t = _check_time(spec, t)
    if spec.psi_zero:
        out = spec.phi(t) * spec.xi
    else:
        def integrand(u):
            return float(spec.psi(u)) / float(spec.phi(u))

        out = spec.phi(t) * (spec.xi + cumulative_quad(integrand, t, quad_tol))
    return float(out) if np.ndim(out) == 0 else out


def covariance(spec, s, t, maps=None, quad_tol=DEFAULT_QUAD_TOL):
    """``cov(Z_s, Z_t) = phi(s) phi(t) Q(min(s, t))``."""
    if maps is None:
        maps = build_time_change(spec, quad_tol)
    s = _check_time(spec, s)
    t = _check_time(spec, t)
    out = spec.phi(s) * spec.phi(t) * np.asarray(maps.Q(np.minimum(s, t)))
    return float(out) if np.ndim(out) == 0 else out


def spec_kernel(spec, maps=None, quad_tol=DEFAULT_QUAD_TOL, label=None):
    """:class:`CovarianceKernel` of the solution of the SDE given by ``spec``."""
    if maps is None:
        maps = build_time_change(spec, quad_tol)

    def cov(s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        return spec.phi(s) * spec.phi(t) * np.asarray(maps.Q(np.minimum(s, t)))

    def mean(t):
        return solve_mean(spec, t, quad_tol)

    return CovarianceKernel(cov, mean, domain=(0.0, spec.T), closed=False,
                            label=label or spec.label)


_JSON_KEYS = {"phi", "psi", "sigma", "T", "xi", "t_max", "label"}


def spec_from_json(desc):
    """Build a :class:`ProcessSpec` from a JSON-style mapping.

    ``{"phi": "exp(-t)", "psi": "0", "sigma": "1", "T": "inf", "xi": 0}``;
    expressions follow :mod:`oubl.expr`.  Unknown keys are rejected.
    """
    unknown = set(desc) - _JSON_KEYS
    if unknown:
        raise ValueError(f"unknown keys in process descriptor: {sorted(unknown)}")
    missing = {"phi", "sigma"} - set(desc)
    if missing:
        raise ValueError(f"process descriptor needs {sorted(missing)}")
    T = desc.get("T", 1.0)
    T = INF if isinstance(T, str) and T.strip().lower() in ("inf", "infinity") else float(T)
    psi = Expression(desc.get("psi", "0"))
    return ProcessSpec(
        phi=Expression(desc["phi"]),
        psi=psi,
        sigma=Expression(desc["sigma"]),
        T=T,
        xi=float(desc.get("xi", 0.0)),
        label=desc.get("label", "json"),
        t_max=desc.get("t_max"),
        psi_zero=psi.is_constant_zero(),
    )
