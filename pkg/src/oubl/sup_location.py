"""Location of the supremum of a stationary OU process on ``[0, T]``.

With ``n_x(u, y)`` the first-passage density from ``x`` to ``y`` the
density of the (leftmost) argmax is

    f(s) = sqrt(2/pi) int dx int_{y >= x} dy int_{z <= y} dz
           n_x(s, y) n_z(T - s, y) exp(-(x^2 + z^2 - y^2)/2).

For fixed ``y`` the ``x`` and ``z`` integrals separate, so

    f(s) = sqrt(2/pi) int exp(y^2/2) A(s, y) A(T - s, y) dy,
    A(u, y) = int_{x <= y} n_x(u, y) exp(-x^2/2) dx,

which is symmetric in ``s <-> T - s`` by construction.  ``A`` is computed
two ways: by quadrature over ``x`` of Talbot-inverted ``n_x`` ("tensor"),
and by inverting its Laplace transform ``exp(-y^2/2) g_s(y)/(2 s)``,
``g_s = f_s'/f_s`` ("laplace").  Their difference is reported per point.

For a standardized Gauss-Markov process ``Z*_t = R(beta(t))`` on
``[t1, t2]`` the argmax is ``beta^-1(beta(t1) + tau_R)`` with ``tau_R`` the
argmax of ``R`` on ``[0, beta(t2) - beta(t1)]``.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.special import erfi

from ._accel import n_threads
from .kernels import riccati_sweep
from .numerics import gl_panel
from .passage import first_passage_density, talbot_nodes
from .process import DomainError

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class ScaleSpeed:
    """Scale function and speed measure of ``dV = -V/2 dt + dB`` (base point ``c``)."""

    c: float = 0.0

    def scale(self, x):
        k = math.sqrt(2.0)
        return math.exp(-self.c ** 2 / 2) * math.sqrt(math.pi / 2) * (erfi(np.asarray(x) / k) - erfi(self.c / k))

    def scale_density(self, y):
        return np.exp((np.asarray(y, dtype=float) ** 2 - self.c ** 2) / 2)

    def speed_density(self, x):
        return 2.0 * np.exp(-(np.asarray(x, dtype=float) ** 2 - self.c ** 2) / 2)


def trivariate_density(x, s, y, z, T):
    """Joint density of (max, end value, argmax) at ``(y, z, s)`` given ``R_0 = x``."""
    if not 0 < s < T:
        raise ValueError("need 0 < s < T")
    if x >= y or z >= y:
        return 0.0
    ss = ScaleSpeed(0.0)
    return (first_passage_density(x, y, s) * first_passage_density(z, y, T - s)
            * float(ss.scale_density(y)) * float(ss.speed_density(z)))


@dataclass(frozen=True)
class SupLocConfig:
    """Quadrature settings.

    ``x_max`` bounds ``|x|, |z|`` (Gaussian tail), ``y_max`` bounds ``y``;
    ``y_panels`` x ``y_nodes`` Gauss-Legendre points cover ``[-x_max, y_max]``;
    ``d_nodes`` points per panel of the ``x`` grid, graded by ``sqrt(u)``
    below ``y``; ``talbot_M`` Talbot nodes; ``route`` picks the reported
    value and ``check`` also runs the other route; points whose two routes
    differ by more than ``flag_tol`` are flagged.
    """

    x_max: float = 6.0
    y_max: float = 6.0
    y_panels: int = 8
    y_nodes: int = 12
    d_nodes: int = 12
    talbot_M: int = 32
    route: str = "tensor"
    check: bool = True
    flag_tol: float = 1e-7
    threads: Optional[int] = None

    def y_rule(self):
        edges = np.linspace(-self.x_max, self.y_max, self.y_panels + 1)
        ys, ws = zip(*(gl_panel(a, b, self.y_nodes) for a, b in zip(edges[:-1], edges[1:])))
        return np.concatenate(ys), np.concatenate(ws)


def _d_rule(u, span, nodes):
    # panels in d = y - x with edges sqrt(u) * (0, 1/4, 1/2, 1, 2, 4, ...)
    r = math.sqrt(u)
    edges = [0.0]
    e = 0.25 * r
    while e < span:
        edges.append(e)
        e *= 2.0
    edges.append(span)
    d, w = zip(*(gl_panel(a, b, nodes) for a, b in zip(edges[:-1], edges[1:])))
    return np.concatenate(d), np.concatenate(w)


def _A_tensor(u, cfg):
    ys, _ = cfg.y_rule()
    xs_all, wx_all, owner = [], [], []
    for j, y in enumerate(ys):
        d, w = _d_rule(u, y + cfg.x_max, cfg.d_nodes)
        xs_all.append(y - d)
        wx_all.append(w)
        owner.append(np.full(d.size, j))
    xs = np.concatenate(xs_all)
    wx = np.concatenate(wx_all)
    own = np.concatenate(owner)
    pts, inv = np.unique(np.concatenate([xs, ys]), return_inverse=True)
    ix, iy = inv[:xs.size], inv[xs.size:]
    s, c = talbot_nodes(u, cfg.talbot_M)
    logf, _ = riccati_sweep(s, pts)
    # n_x(u, y) = sum_k Re(c_k f_k(x)/f_k(y))
    ratio = np.exp(logf[:, ix] - logf[:, iy[own]])
    n = np.real(c @ ratio)
    return np.bincount(own, weights=wx * n * np.exp(-0.5 * xs ** 2), minlength=ys.size)


def _A_laplace(u, cfg):
    ys, _ = cfg.y_rule()
    s, c = talbot_nodes(u, cfg.talbot_M)
    _, g = riccati_sweep(s, ys)
    a = np.real(c @ (g / (2.0 * s[:, None])))
    return np.exp(-0.5 * ys ** 2) * a


class _AFactorCache:
    """``A(u, .)`` on the y-rule, memoized on ``u`` (pure, so sharing is safe)."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.store = {}

    def _key(self, u, route):
        return (route, float(f"{u:.14g}"))

    def get(self, u, route):
        key = self._key(u, route)
        if key not in self.store:
            fn = _A_tensor if route == "tensor" else _A_laplace
            self.store[key] = fn(u, self.cfg)
        return self.store[key]

    def prefetch(self, us, routes):
        jobs = [(u, r) for r in routes for u in us if self._key(u, r) not in self.store]
        threads = n_threads() if self.cfg.threads is None else self.cfg.threads
        if threads > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                vals = list(ex.map(lambda j: (_A_tensor if j[1] == "tensor" else _A_laplace)(j[0], self.cfg), jobs))
            for (u, r), v in zip(jobs, vals):
                self.store[self._key(u, r)] = v
        else:
            for u, r in jobs:
                self.get(u, r)


def _f_from_cache(cache, T, s, route):
    ys, wy = cache.cfg.y_rule()
    a1 = cache.get(s, route)
    a2 = cache.get(T - s, route)
    return SQRT_2_OVER_PI * float(np.sum(wy * np.exp(0.5 * ys ** 2) * a1 * a2))


@dataclass
class SupLocationDensity:
    T: float
    s: np.ndarray
    f: np.ndarray
    residual: np.ndarray
    flagged: np.ndarray
    mass_interior: float
    window: tuple
    scale_speed: ScaleSpeed = field(default_factory=ScaleSpeed)
    diagnostics: dict = field(default_factory=dict)

    def bound(self):
        """The universal bound ``max(1/s, 1/(T - s))`` on the grid."""
        return np.maximum(1.0 / self.s, 1.0 / (self.T - self.s))


class SupLocationEngine:
    """Evaluator of the argmax density of ``R`` on ``[0, T]`` with a shared factor cache."""

    def __init__(self, T, cfg=SupLocConfig()):
        if not T > 0:
            raise ValueError("T must be positive")
        if cfg.route not in ("tensor", "laplace"):
            raise ValueError("route must be 'tensor' or 'laplace'")
        self.T = float(T)
        self.cfg = cfg
        self.cache = _AFactorCache(cfg)

    def _routes(self):
        other = "laplace" if self.cfg.route == "tensor" else "tensor"
        return [self.cfg.route, other] if self.cfg.check else [self.cfg.route]

    def density(self, s, route=None):
        """``f`` at the points ``s`` (route defaults to ``cfg.route``)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any((s <= 0) | (s >= self.T)):
            raise ValueError("s must lie in (0, T)")
        route = route or self.cfg.route
        self.cache.prefetch(np.concatenate([s, self.T - s]), [route])
        return np.array([_f_from_cache(self.cache, self.T, x, route) for x in s])

    def _cos_rule(self, a, b, n):
        # s = a + (b - a)(1 - cos th)/2 smooths 1/sqrt singularities at both ends
        th, w = gl_panel(0.0, math.pi, n)
        return a + 0.5 * (b - a) * (1 - np.cos(th)), 0.5 * (b - a) * np.sin(th) * w

    def mass(self, a, b, n=48, route=None):
        """``int_a^b f``."""
        s, w = self._cos_rule(a, b, n)
        return float(np.sum(w * self.density(s, route)))

    def bin_masses(self, edges, n=16, route=None):
        edges = np.asarray(edges, dtype=float)
        return np.array([self.mass(a, b, n, route) for a, b in zip(edges[:-1], edges[1:])])

    def cdf_interpolant(self, a, b, n=96, route=None):
        """Monotone-cubic interpolant of ``f`` on ``[a, b]`` and its running integral."""
        s, _ = self._cos_rule(a, b, n)
        f = self.density(s, route)
        p = PchipInterpolator(s, f)
        return p, p.antiderivative()

    def tabulate(self, s_grid, window=None):
        """:class:`SupLocationDensity` on ``s_grid`` with cross-route residuals."""
        s = np.asarray(s_grid, dtype=float)
        T = self.T
        window = window or (T / 50.0, T - T / 50.0)
        routes = self._routes()
        self.cache.prefetch(np.concatenate([s, T - s]), routes)
        f = self.density(s)
        if len(routes) == 2:
            g = self.density(s, routes[1])
            res = np.abs(f - g)
        else:
            res = np.full(s.size, np.nan)
        flagged = np.where(np.isfinite(res), res > self.cfg.flag_tol, False)
        mass = self.mass(*window)
        diag = {
            "route": self.cfg.route,
            "x_max": self.cfg.x_max,
            "y_max": self.cfg.y_max,
            "y_nodes": self.cfg.y_panels * self.cfg.y_nodes,
            "d_nodes_per_panel": self.cfg.d_nodes,
            "talbot_M": self.cfg.talbot_M,
            "max_residual": float(np.nanmax(res)) if np.any(np.isfinite(res)) else None,
            "n_flagged": int(flagged.sum()),
        }
        return SupLocationDensity(T, s, f, res, flagged, mass, window, ScaleSpeed(0.0), diag)


def sup_location_density(T, s_grid, cfg=SupLocConfig()):
    """Argmax density of the stationary OU process on ``[0, T]`` at ``s_grid``."""
    return SupLocationEngine(T, cfg).tabulate(s_grid)


# --------------------------------------------------------------------------
# standardized Gauss-Markov processes
# --------------------------------------------------------------------------


@dataclass
class StandardizedProcessMap:
    """A time-change map restricted to ``[t1, t2]`` inside ``(0, T)``."""

    maps: object
    t1: float
    t2: float
    probe: int = 257

    def __post_init__(self):
        T = self.maps.T
        if not 0 < self.t1 <= self.t2 < T:
            raise ValueError("need 0 < t1 <= t2 < T")
        if self.t2 > self.t1:
            grid = np.linspace(self.t1, self.t2, self.probe)
            spec = self.maps.spec
            if spec is not None and np.any(spec.sigma(grid) == 0):
                raise DomainError("sigma vanishes inside [t1, t2]: beta is not invertible")
            if np.any(np.diff(np.atleast_1d(self.maps.beta(grid))) <= 0):
                raise DomainError("beta is not strictly increasing on [t1, t2]")

    @property
    def ou_interval(self):
        return float(self.maps.beta(self.t1)), float(self.maps.beta(self.t2))


@dataclass
class ReducedArgmax:
    ou_interval: tuple
    length: float
    pullback: object


def reduce_argmax(smap):
    """OU interval ``[beta(t1), beta(t2)]`` and the pullback ``r -> beta^-1(beta(t1) + r)``."""
    b1, b2 = smap.ou_interval
    L = b2 - b1

    def pullback(r):
        r = np.asarray(r, dtype=float)
        if L == 0:
            return np.full(r.shape, smap.t1) if r.ndim else smap.t1

        def one(x):
            if x <= 0:
                return smap.t1
            if x >= L:
                return smap.t2
            return brentq(lambda t: smap.maps.beta(t) - b1 - x, smap.t1, smap.t2, xtol=1e-14, rtol=1e-14)

        out = np.vectorize(one, otypes=[float])(r)
        return float(out) if out.ndim == 0 else out

    return ReducedArgmax((b1, b2), L, pullback)


@dataclass
class StandardizedArgmaxDensity:
    t: np.ndarray
    f: np.ndarray
    ou_interval: tuple
    length: float


class StandardizedArgmax:
    """Argmax density of ``Z*`` on ``[t1, t2]`` from the OU density on ``[0, L]``."""

    def __init__(self, smap, cfg=SupLocConfig()):
        self.smap = smap
        self.red = reduce_argmax(smap)
        if self.red.length <= 0:
            raise ValueError("degenerate interval: the argmax is t1 almost surely")
        self.engine = SupLocationEngine(self.red.length, cfg)
        self.b1 = self.red.ou_interval[0]

    def density(self, t, route=None):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        r = np.atleast_1d(self.smap.maps.beta(t)) - self.b1
        db = np.atleast_1d(self.smap.maps.dbeta(t))
        return self.engine.density(r, route) * db

    def mass(self, a=None, b=None, n=48, route=None):
        a = self.smap.t1 if a is None else a
        b = self.smap.t2 if b is None else b
        s, w = self.engine._cos_rule(a, b, n)
        return float(np.sum(w * self.density(s, route)))

    def bin_masses(self, edges, n=16, route=None):
        edges = np.asarray(edges, dtype=float)
        return np.array([self.mass(a, b, n, route) for a, b in zip(edges[:-1], edges[1:])])


def argmax_density_of_standardized(smap, t_grid, cfg=SupLocConfig()):
    """``f_Z(t) = f_R(beta(t) - beta(t1)) beta'(t)`` on ``t_grid``."""
    sa = StandardizedArgmax(smap, cfg)
    t = np.asarray(t_grid, dtype=float)
    return StandardizedArgmaxDensity(t, sa.density(t), sa.red.ou_interval, sa.red.length)
