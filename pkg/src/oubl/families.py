"""Closed-form process families and two covariance counterexamples.

Every constructor returns a :class:`FamilyModel` bundling the SDE
coefficients (when the family has them), a covariance kernel written from
the family's own covariance formula, and the time-change map.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .expr import Expression
from .process import (
    INF,
    CovarianceKernel,
    DomainError,
    ProcessSpec,
    adaptive_quad,
    as_vectorized,
    build_time_change,
    cumulative_quad,
)

Number = Union[int, float]


@dataclass(frozen=True)
class FamilyModel:
    """A family instance: kernel always, spec and maps when they exist."""

    name: str
    params: object
    kernel: CovarianceKernel
    spec: Optional[ProcessSpec] = None
    maps: object = None
    quadrature_backed: bool = False
    extras: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# alpha-Wiener bridges
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AlphaWienerParams:
    alpha: float
    T: float = 1.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")


def _alpha_Q(alpha, T):
    if alpha == 0.5:
        return lambda t: -T * np.log1p(-np.asarray(t, dtype=float) / T)
    c = 1.0 - 2.0 * alpha
    return lambda t: T * -np.expm1(c * np.log1p(-np.asarray(t, dtype=float) / T)) / c


def alpha_wiener_spec(p, quad_tol=1e-10):
    """Scaled Wiener bridge ``dZ = -alpha Z/(T - t) dt + dB`` on ``[0, T)``.

    Examples
    --------
    >>> m = alpha_wiener_spec(AlphaWienerParams(1.0, 1.0))
    >>> round(m.kernel(0.25, 0.5), 12)
    0.125
    """
    a, T = float(p.alpha), float(p.T)
    spec = ProcessSpec(
        phi=lambda t: np.exp(a * np.log1p(-np.asarray(t, dtype=float) / T)),
        psi=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        sigma=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        T=T,
        label=f"alpha-wiener(alpha={a:g}, T={T:g})",
        Q_closed=_alpha_Q(a, T),
        Q_limit_closed=T / (1.0 - 2.0 * a) if a < 0.5 else INF,
        dlogphi=lambda t: -a / (T - np.asarray(t, dtype=float)),
        psi_zero=True,
    )

    def cov(s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        m = np.minimum(s, t)
        lead = (T - s) ** a * (T - t) ** a
        if a == 0.5:
            return lead * (math.log(T) - np.log(T - m))
        return lead * (T ** (1 - 2 * a) - (T - m) ** (1 - 2 * a)) / (1 - 2 * a)

    dom_closed = a > 0
    kernel = CovarianceKernel(cov, domain=(0.0, T), closed=dom_closed, label=spec.label)
    return FamilyModel("alpha-wiener", p, kernel, spec, build_time_change(spec, quad_tol))


def boundedness_epsilon(p):
    """Exponent ``eps`` making ``phi Q^(1/2 + eps)`` bounded, and its limit at ``T``.

    Returns
    -------
    (eps, limit) : tuple of float
    """
    a, T = float(p.alpha), float(p.T)
    if a <= 0:
        raise ValueError("alpha <= 0: the process has no continuous extension to T")
    if a <= 0.5:
        return 0.5, 0.0
    k = 2.0 * a - 1.0
    return 1.0 / (2.0 * k), k ** (-a / k) * T ** (a / k)


# --------------------------------------------------------------------------
# general alpha-Wiener bridges
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneralAlphaWienerParams:
    alpha_fn: Callable
    T: float = 1.0
    alpha_at_T: Optional[float] = None
    delta1: Optional[float] = None
    delta2: Optional[float] = None

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        object.__setattr__(self, "alpha_fn", as_vectorized(self.alpha_fn))
        probe = np.linspace(0.0, self.T, 257)[:-1]
        if not np.all(np.isfinite(self.alpha_fn(probe))):
            raise ValueError("alpha_fn must be finite on [0, T)")


def choose_deltas(alpha_T, delta1=None, delta2=None):
    """Bracket ``0 < d1 < alpha(T) < d2 < d1 + 1/2`` (and ``d2 < 1/2`` if ``alpha(T) < 1/2``)."""
    if not alpha_T > 0:
        raise ValueError("alpha(T) must be positive")
    d1 = alpha_T * (1 - 1e-2) if delta1 is None else float(delta1)
    if delta2 is None:
        d2 = alpha_T * (1 + 1e-2)
        d2 = min(d2, 0.5 * (alpha_T + d1 + 0.5))
        if alpha_T < 0.5:
            d2 = min(d2, 0.5 * (alpha_T + 0.5))
    else:
        d2 = float(delta2)
    if not (0 < d1 < alpha_T < d2 < d1 + 0.5):
        raise ValueError(f"need 0 < delta1 < alpha(T) < delta2 < delta1 + 1/2, got {d1}, {alpha_T}, {d2}")
    if alpha_T < 0.5 and not d2 < 0.5:
        raise ValueError("delta2 must stay below 1/2 when alpha(T) < 1/2")
    return d1, d2


def general_alpha_epsilon(alpha_T, d1, d2):
    """``eps`` for the general alpha-Wiener bound given the bracket ``(d1, d2)``."""
    if alpha_T >= 0.5:
        return (1.0 + 2.0 * (d1 - d2)) / (2.0 * (2.0 * d2 - 1.0))
    return 0.5


def general_alpha_spec(p, quad_tol=1e-10, n_t0_grid=1000):
    """``dZ = -alpha(t) Z/(T - t) dt + dB`` with ``phi = exp(-int_0^t alpha(u)/(T - u) du)``.

    ``ln phi`` is split as ``a_ref ln(1 - t/T) - int_0^t (alpha(u) - a_ref)/(T - u) du``
    with ``a_ref = alpha(T)`` when given (else ``alpha(0)``), so a constant
    ``alpha`` is reproduced without quadrature error.  ``extras`` carries the
    bound record (deltas, eps, ``t0``, ``C1``-``C3``, the bounding function)
    whenever ``alpha(T) > 0``.
    """
    T = float(p.T)
    alpha = p.alpha_fn
    a_ref = float(p.alpha_at_T) if p.alpha_at_T is not None else float(alpha(0.0))

    def resid(u):
        return (float(alpha(u)) - a_ref) / (T - u)

    constant = np.allclose(alpha(np.linspace(0, T, 257)[:-1]), a_ref, rtol=0, atol=0)

    def logphi(t):
        t = np.asarray(t, dtype=float)
        base = a_ref * np.log1p(-t / T)
        if constant:
            return base
        return base - cumulative_quad(resid, t, quad_tol * 1e-2)

    def phi(t):
        out = np.exp(logphi(t))
        return float(out) if np.ndim(out) == 0 else out

    Q_closed = _alpha_Q(a_ref, T) if constant else None
    spec = ProcessSpec(
        phi=phi,
        psi=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        sigma=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        T=T,
        label="general-alpha-wiener",
        Q_closed=Q_closed,
        Q_limit_closed=(T / (1 - 2 * a_ref) if a_ref < 0.5 else INF) if constant else None,
        dlogphi=lambda t: -alpha(t) / (T - np.asarray(t, dtype=float)),
        psi_zero=True,
    )
    maps = build_time_change(spec, quad_tol)

    # kernel straight from the stochastic-integral form, one quadrature per s ^ t
    memo = {}

    def inner(m):
        key = float(m)
        if key not in memo:
            val, _ = adaptive_quad(lambda u: math.exp(-2.0 * float(logphi(u))), 0.0, key, quad_tol)
            memo[key] = val
        return memo[key]

    def cov(s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        s, t = np.broadcast_arrays(s, t)
        m = np.minimum(s, t)
        I = np.vectorize(inner, otypes=[float])(m)
        out = np.exp(logphi(s) + logphi(t)) * I
        return float(out) if out.ndim == 0 else out

    kernel = CovarianceKernel(cov, domain=(0.0, T), closed=False, label=spec.label)

    extras = {"alpha_ref": a_ref}
    if p.alpha_at_T is not None and p.alpha_at_T > 0:
        aT = float(p.alpha_at_T)
        d1, d2 = choose_deltas(aT, p.delta1, p.delta2)
        eps = general_alpha_epsilon(aT, d1, d2)
        grid = np.linspace(0.0, T, n_t0_grid + 1)
        vals = np.append(alpha(grid[:-1]), aT)
        inside = (vals >= d1) & (vals <= d2)
        bad = np.nonzero(~inside)[0]
        i0 = 0 if bad.size == 0 else bad[-1] + 1
        t0 = float(grid[min(i0, n_t0_grid - 1)])
        C1 = float(maps.Q(t0)) if t0 > 0 else 0.0
        C3 = float(phi(t0))
        C2 = C3 ** -2
        expo = 1.0 - 2.0 * d2 + 2.0 * d1 / (2.0 * eps + 1.0)

        def bound(t, t0=t0, C1=C1, C2=C2, C3=C3, d1=d1, d2=d2, eps=eps):
            t = np.asarray(t, dtype=float)
            r = (T - t) / (T - t0)
            inner_ = C1 + C2 * (T - t0) ** (2 * d2) / (2 * d2 - 1) * ((T - t) ** (1 - 2 * d2) - (T - t0) ** (1 - 2 * d2))
            return C3 * r ** d1 * inner_ ** (0.5 + eps)

        extras.update(delta1=d1, delta2=d2, epsilon=eps, t0=t0, C1=C1, C2=C2, C3=C3,
                      tail_exponent=expo, bound=bound)
    return FamilyModel("general-alpha-wiener", p, kernel, spec, maps,
                       quadrature_backed=not constant, extras=extras)


# --------------------------------------------------------------------------
# Ornstein-Uhlenbeck type bridges
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OUBridgeParams:
    """``q`` and ``sigma`` are numbers (constant coefficients) or callables."""

    q_fn: Union[Number, Callable] = 1.0
    sigma_fn: Union[Number, Callable] = 1.0
    a: float = 0.0
    b: float = 0.0
    T: float = 1.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if isinstance(self.sigma_fn, (int, float)):
            if self.sigma_fn == 0:
                raise ValueError("sigma must be nowhere zero")
        else:
            probe = np.linspace(0.0, self.T, 257)
            if np.any(as_vectorized(self.sigma_fn)(probe) == 0):
                raise ValueError("sigma must be nowhere zero")

    @property
    def constant(self):
        return isinstance(self.q_fn, (int, float)) and isinstance(self.sigma_fn, (int, float))


class _OUBridgeParts:
    """``qbar``, ``G`` and ``gamma`` for an OU-type bridge."""

    def __init__(self, p, quad_tol=1e-12):
        self.p = p
        self.T = float(p.T)
        if p.constant:
            q, sg = float(p.q_fn), float(p.sigma_fn)
            self.q = lambda t: np.full_like(np.asarray(t, dtype=float), q)
            self.sig = lambda t: np.full_like(np.asarray(t, dtype=float), sg)
            self.qbar = lambda t: q * np.asarray(t, dtype=float)
            self._qc, self._sc = q, sg
        else:
            self.q = as_vectorized(p.q_fn) if callable(p.q_fn) else (lambda t, c=float(p.q_fn): np.full_like(np.asarray(t, dtype=float), c))
            self.sig = as_vectorized(p.sigma_fn) if callable(p.sigma_fn) else (lambda t, c=float(p.sigma_fn): np.full_like(np.asarray(t, dtype=float), c))
            qf = self.q
            self.qbar = lambda t: cumulative_quad(lambda u: float(qf(u)), t, quad_tol)
            self._qc = None
        self.tol = quad_tol

    def gamma(self, s, t):
        """``int_s^t exp(2 (qbar(t) - qbar(u))) sigma(u)^2 du``."""
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        if self._qc is not None:
            q, sg = self._qc, self._sc
            d = t - s
            if q == 0:
                return sg * sg * d
            return sg * sg * np.expm1(2 * q * d) / (2 * q)
        s, t = np.broadcast_arrays(s, t)
        qf, sf, tol = self.qbar, self.sig, self.tol

        def one(a, b):
            if a == b:
                return 0.0
            qb = float(qf(b))
            return adaptive_quad(lambda u: math.exp(2 * (qb - float(qf(u)))) * float(sf(u)) ** 2, a, b, tol)[0]

        out = np.vectorize(one, otypes=[float])(s, t)
        return float(out) if out.ndim == 0 else out


def ou_bridge_mean(p, s, t, x, parts=None):
    """``n_{x,b}(s, t)``: mean at ``t`` of the bridge started from ``x`` at ``s``."""
    P = parts or _OUBridgeParts(p)
    T = P.T
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    gsT = P.gamma(s, T)
    out = (P.gamma(s, t) / gsT * np.exp(P.qbar(T) - P.qbar(t)) * p.b
           + P.gamma(t, T) / gsT * np.exp(P.qbar(t) - P.qbar(s)) * x)
    return float(out) if np.ndim(out) == 0 else out


def ou_bridge_kernel(p, quad_tol=1e-10):
    """OU-type bridge from ``a`` to ``b`` over ``[0, T]``.

    Examples
    --------
    >>> m = ou_bridge_kernel(OUBridgeParams(1.0, 1.0, 0.0, 0.0, 2.0))
    >>> round(m.kernel(1.0, 1.0), 6)
    0.380797
    """
    P = _OUBridgeParts(p)
    T = P.T
    g0T = float(P.gamma(0.0, T))
    qT = float(P.qbar(T))

    def phi(t):
        t = np.asarray(t, dtype=float)
        return P.gamma(t, T) * np.exp(P.qbar(t)) / g0T

    def psi(t):
        t = np.asarray(t, dtype=float)
        return np.exp(qT - P.qbar(t)) * P.sig(t) ** 2 * p.b / P.gamma(t, T)

    def Q(t):
        t = np.asarray(t, dtype=float)
        return np.exp(-2 * P.qbar(t)) * P.gamma(0.0, t) * g0T / P.gamma(t, T)

    def dlogphi(t):
        t = np.asarray(t, dtype=float)
        return P.q(t) - P.sig(t) ** 2 * np.exp(2 * (qT - P.qbar(t))) / P.gamma(t, T)

    spec = ProcessSpec(phi=phi, psi=psi, sigma=P.sig, T=T, xi=p.a,
                       label=f"ou-bridge(a={p.a:g}, b={p.b:g}, T={T:g})",
                       Q_closed=Q, Q_limit_closed=INF, dlogphi=dlogphi,
                       psi_zero=(p.b == 0))

    def cov(s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        lo, hi = np.minimum(s, t), np.maximum(s, t)
        return np.exp(P.qbar(hi) - P.qbar(lo)) * P.gamma(0.0, lo) * P.gamma(hi, T) / g0T

    def mean(t):
        return ou_bridge_mean(p, 0.0, t, p.a, P)

    kernel = CovarianceKernel(cov, mean, domain=(0.0, T), closed=True, label=spec.label)
    model = FamilyModel("ou-bridge", p, kernel, spec, build_time_change(spec, quad_tol),
                        quadrature_backed=not p.constant, extras={"parts": P})
    return model


# --------------------------------------------------------------------------
# F-Wiener bridges
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FWienerParams:
    density_f: Callable
    cdf_F: Callable
    T: float = 1.0
    t_max: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "density_f", as_vectorized(self.density_f))
        object.__setattr__(self, "cdf_F", as_vectorized(self.cdf_F))
        if not self.T > 0:
            raise ValueError("T must be positive")
        if abs(self.cdf_F(0.0)) > 1e-14:
            raise ValueError("F(0) must be 0")
        end = self.T if math.isfinite(self.T) else (self.t_max or 10.0)
        probe = np.linspace(0.0, end, 129)
        if math.isfinite(self.T):
            probe = probe[:-1]
        F = self.cdf_F(probe)
        if np.any(np.diff(F) < -1e-14):
            raise ValueError("F must be nondecreasing")
        if np.any(F[1:] >= 1.0):
            raise ValueError("F reaches 1 before T")
        integ = cumulative_quad(lambda u: float(self.density_f(u)), probe, 1e-12)
        if np.max(np.abs(integ - F)) > 1e-6:
            raise ValueError("F is not the integral of f on the probe grid")


def f_wiener_spec(p, quad_tol=1e-10):
    """``dZ = -f/(1 - F) Z dt + sqrt(f) dB``: a Wiener bridge run on the clock ``F``.

    ``extras["beta_invertible"]`` is False when ``f`` vanishes at interior
    probe points, in which case ``beta`` is flat there.
    """
    F, f = p.cdf_F, p.density_f
    T = float(p.T)

    def Q(t):
        Ft = np.asarray(F(np.asarray(t, dtype=float)), dtype=float)
        if np.any(Ft >= 1.0):
            raise DomainError("F(t) = 1: beta is infinite")
        return Ft / (1.0 - Ft)

    spec = ProcessSpec(
        phi=lambda t: 1.0 - F(t),
        psi=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        sigma=lambda t: np.sqrt(np.maximum(f(t), 0.0)),
        T=T,
        t_max=p.t_max,
        label="f-wiener",
        Q_closed=Q,
        Q_limit_closed=INF,
        dlogphi=lambda t: -f(t) / (1.0 - F(t)),
        psi_zero=True,
    )

    def cov(s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        return F(np.minimum(s, t)) - F(s) * F(t)

    kernel = CovarianceKernel(cov, domain=(0.0, T), closed=math.isfinite(T), label="f-wiener")
    end = spec.probe_end()
    interior = np.linspace(0.0, end, 1025)[1:-1]
    invertible = bool(np.all(f(interior) > 0))
    return FamilyModel("f-wiener", p, kernel, spec, build_time_change(spec, quad_tol),
                       extras={"beta_invertible": invertible})


# --------------------------------------------------------------------------
# weighted Wiener processes and bridges
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightParams:
    w: Callable
    bridge: bool = False
    t_max: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "w", as_vectorized(self.w))
        if abs(self.w(0.0) - 1.0) > 1e-12:
            raise ValueError("w(0) must be 1")
        end = 1.0 if self.bridge else self.t_max
        if np.any(self.w(np.linspace(0.0, end, 257)) <= 0):
            raise ValueError("w must be positive")


def weighted_spec(p, quad_tol=1e-10):
    """``w(t) W(t)`` (process) or ``w(t) W°(t)`` over ``[0, 1]`` (bridge)."""
    w = p.w
    if p.bridge:
        spec = ProcessSpec(
            phi=lambda t: w(t) * (1.0 - np.asarray(t, dtype=float)),
            psi=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
            sigma=w,
            T=1.0,
            label="weighted-bridge",
            Q_closed=lambda t: np.asarray(t, dtype=float) / (1.0 - np.asarray(t, dtype=float)),
            Q_limit_closed=INF,
            psi_zero=True,
        )

        def cov(s, t):
            s = np.asarray(s, dtype=float)
            t = np.asarray(t, dtype=float)
            return w(s) * w(t) * (np.minimum(s, t) - s * t)

        dom = (0.0, 1.0)
    else:
        spec = ProcessSpec(
            phi=w,
            psi=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
            sigma=w,
            T=INF,
            t_max=p.t_max,
            label="weighted-process",
            Q_closed=lambda t: np.asarray(t, dtype=float) * 1.0,
            Q_limit_closed=INF,
            psi_zero=True,
        )

        def cov(s, t):
            s = np.asarray(s, dtype=float)
            t = np.asarray(t, dtype=float)
            return w(s) * w(t) * np.minimum(s, t)

        dom = (0.0, INF)
    kernel = CovarianceKernel(cov, domain=dom, closed=p.bridge, label=spec.label)
    return FamilyModel("weighted", p, kernel, spec, build_time_change(spec, quad_tol))


# --------------------------------------------------------------------------
# counterexamples
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CounterexampleKernel:
    kind: str
    kernel: CovarianceKernel


def _zero_area_cov(s, t):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return np.minimum(s, t) - s * t - 3.0 * s * t * (1.0 - s) * (1.0 - t)


def _glued_cov(s, t):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    left = (s <= 1.0) & (t <= 1.0)
    right = (s >= 1.0) & (t >= 1.0)
    a = np.minimum(s, t) - s * t
    su, tu = s - 1.0, t - 1.0
    b = np.minimum(su, tu) - su * tu
    return np.where(left, a, 0.0) + np.where(right & ~left, b, 0.0)


def counterexample_kernel(kind):
    """Kernels that are valid Gaussian covariances but not OU time changes.

    ``zero_area``: Wiener bridge conditioned on zero area, on ``[0, 1]``.
    ``glued``: two independent Wiener bridges on ``[0, 1]`` and ``[1, 2]``.
    """
    k = kind.replace("-", "_")
    if k == "zero_area":
        return CounterexampleKernel("zero_area", CovarianceKernel(_zero_area_cov, domain=(0.0, 1.0), label="zero-area"))
    if k == "glued":
        return CounterexampleKernel("glued", CovarianceKernel(_glued_cov, domain=(0.0, 2.0), label="glued"))
    raise ValueError(f"unknown counterexample {kind!r}")


# --------------------------------------------------------------------------
# registry for JSON-driven construction
# --------------------------------------------------------------------------


def _fn(value):
    if callable(value):
        return value
    if isinstance(value, (int, float)):
        return float(value)
    return Expression(value)


def _take(params, allowed):
    unknown = set(params) - set(allowed)
    if unknown:
        raise ValueError(f"unknown parameters: {sorted(unknown)}")
    return params


def _build_alpha(params):
    _take(params, {"alpha", "T"})
    return alpha_wiener_spec(AlphaWienerParams(float(params.get("alpha", 1.0)), float(params.get("T", 1.0))))


def _build_general_alpha(params):
    _take(params, {"alpha", "T", "alpha_at_T", "delta1", "delta2"})
    a = params.get("alpha", "1+t")
    fn = Expression(a) if isinstance(a, str) else (lambda t, c=float(a): np.full_like(np.asarray(t, dtype=float), c))
    return general_alpha_spec(GeneralAlphaWienerParams(
        fn, float(params.get("T", 1.0)), params.get("alpha_at_T"), params.get("delta1"), params.get("delta2")))


def _build_ou(params):
    _take(params, {"q", "sigma", "a", "b", "T"})
    q, s = _fn(params.get("q", 1.0)), _fn(params.get("sigma", 1.0))
    return ou_bridge_kernel(OUBridgeParams(q, s, float(params.get("a", 0.0)), float(params.get("b", 0.0)),
                                           float(params.get("T", 1.0))))


def _build_f(params):
    _take(params, {"f", "F", "T", "t_max"})
    T = params.get("T", 1.0)
    T = INF if isinstance(T, str) and T.lower() in ("inf", "infinity") else float(T)
    return f_wiener_spec(FWienerParams(Expression(str(params.get("f", "1"))),
                                       Expression(str(params.get("F", "t"))), T, params.get("t_max")))


def _build_weighted(params):
    _take(params, {"w", "bridge", "t_max"})
    return weighted_spec(WeightParams(Expression(str(params.get("w", "1+t"))), bool(params.get("bridge", False)),
                                      float(params.get("t_max", 10.0))))


def _build_counter(kind):
    def build(params):
        _take(params, set())
        ce = counterexample_kernel(kind)
        return FamilyModel(kind.replace("_", "-"), None, ce.kernel)
    return build


FAMILIES = {
    "alpha-wiener": _build_alpha,
    "general-alpha-wiener": _build_general_alpha,
    "ou-bridge": _build_ou,
    "f-wiener": _build_f,
    "weighted": _build_weighted,
    "zero-area": _build_counter("zero_area"),
    "glued": _build_counter("glued"),
}


def build_family(name, params=None):
    """Construct a registered family from JSON-style parameters."""
    if name not in FAMILIES:
        raise ValueError(f"unknown family {name!r}; choose from {sorted(FAMILIES)}")
    return FAMILIES[name](dict(params or {}))
