"""First-passage time of the stationary OU process to a level above its start.

Two inversions of ``L(s) = E_x exp(-s tau_y)``:

* the cosine route, ``n(u) = (2/pi) int_0^inf cos(w u) Re L(i w) dw``,
  summed over half-period panels with Wynn acceleration;
* fixed-Talbot inversion (contour deformed into the left half plane),
  which converges geometrically and is used where many ``(x, y)`` pairs
  are needed at once.
"""
import math
from dataclasses import dataclass

import numpy as np

from .kernels import riccati_sweep
from .numerics import gl_panel, wynn_epsilon

NEG_CLIP_LIMIT = 1e-6


class PassageQuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class PassageConfig:
    """Controls for the cosine route.

    ``nodes`` Gauss-Legendre points per sub-panel, ``omega_min`` left end of
    the geometric grading at 0, ``agree`` the agreement of three successive
    accelerated sums that stops the panel loop, ``max_panels`` the hard cap
    on half-period panels (the truncation ``A_max = 2 pi max_panels / u``).
    """

    nodes: int = 16
    omega_min: float = 1e-8
    agree: float = 1e-9
    max_panels: int = 20000
    batch: int = 32
    wynn_terms: int = 12


def _laplace_on(omega, x, y):
    pts = sorted({x, y, 0.0})
    logf, _ = riccati_sweep(1j * omega, pts)
    ix, iy, i0 = pts.index(x), pts.index(y), pts.index(0.0)
    # |H(-y/sqrt2)|^2 is |f(y)/f(0)|^2: guard the denominator of the ratio form
    log_den = 2.0 * (logf[:, iy] - logf[:, i0]).real
    if np.any(log_den < math.log(1e-30)):
        raise PassageQuadratureError("Hermite denominator below 1e-30; parameter regime needs review")
    return np.exp(logf[:, ix] - logf[:, iy])


def _panels(u, offset):
    """Panels between successive zeros ``(k + offset) pi/u`` of the oscillating weight."""
    half = math.pi / u
    first = offset * half if offset > 0 else half
    yield 0.0, first
    k = 1
    while True:
        yield first + (k - 1) * half, first + k * half
        k += 1


def _graded_nodes(a, b, cfg):
    if a == 0.0:
        edges = np.concatenate([[0.0], np.geomspace(cfg.omega_min, b, max(2, int(math.log2(b / cfg.omega_min)) + 1))])
    else:
        n = max(1, int(math.ceil((b - a) / (0.5 * a))))
        edges = np.linspace(a, b, n + 1)
    ws, wts = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        w, wt = gl_panel(lo, hi, cfg.nodes)
        ws.append(w)
        wts.append(wt)
    return np.concatenate(ws), np.concatenate(wts)


def _oscillatory_sum(weight, u, x, y, cfg, offset):
    """``(2/pi) int_0^inf weight(w) Re L(i w) dw`` over half-period panels of ``u``."""
    gen = _panels(u, offset)
    partial = []
    acc = 0.0
    history = []
    n_panels = 0
    while n_panels < cfg.max_panels:
        batch = [next(gen) for _ in range(cfg.batch)]
        nodes, wts, owner = [], [], []
        for j, (a, b) in enumerate(batch):
            w, wt = _graded_nodes(a, b, cfg)
            nodes.append(w)
            wts.append(wt)
            owner.append(np.full(w.size, j))
        om = np.concatenate(nodes)
        wt = np.concatenate(wts)
        own = np.concatenate(owner)
        L = _laplace_on(om, x, y).real
        terms = np.bincount(own, weights=weight(om) * L * wt, minlength=len(batch)) * (2.0 / math.pi)
        for term in terms:
            acc += term
            partial.append(acc)
            n_panels += 1
            if len(partial) >= cfg.wynn_terms:
                history.append(wynn_epsilon(partial[-cfg.wynn_terms:]))
                if len(history) >= 3:
                    h3 = history[-3:]
                    if max(h3) - min(h3) <= cfg.agree and abs(term) <= 1e-3:
                        return history[-1], n_panels, max(h3) - min(h3)
    raise PassageQuadratureError(f"oscillatory integral not converged after {n_panels} panels")


def first_passage_density(x, y, u, cfg=PassageConfig(), return_info=False):
    """Density at ``u`` of the first time the stationary OU process from ``x`` hits ``y > x``.

    Clips small negative quadrature noise to 0; noise beyond ``1e-6`` is an
    error.
    """
    if not x < y:
        raise ValueError("need x < y")
    if not u > 0:
        raise ValueError("u must be positive")
    val, panels, spread = _oscillatory_sum(lambda w: np.cos(w * u), u, x, y, cfg, 0.5)
    if val < -NEG_CLIP_LIMIT:
        raise PassageQuadratureError(f"density {val:.3e} below -{NEG_CLIP_LIMIT:g}; quadrature config rejected")
    out = max(val, 0.0)
    if return_info:
        return out, {"panels": panels, "spread": spread, "omega_max": (panels - 0.5) * math.pi / u}
    return out


def first_passage_cdf(x, y, U, cfg=PassageConfig()):
    """``P(tau_y <= U | R_0 = x)`` through the sine transform ``(2/pi) int sin(w U)/w Re L(i w) dw``."""
    if not x < y:
        raise ValueError("need x < y")

    def weight(w):
        return U * np.sinc(w * U / math.pi)

    val, _, _ = _oscillatory_sum(weight, U, x, y, cfg, 0.0)
    return float(min(max(val, 0.0), 1.0))


# --------------------------------------------------------------------------
# fixed Talbot
# --------------------------------------------------------------------------

TALBOT_M = 32
TALBOT_CUTOFF = -40.0


def talbot_nodes(u, M=TALBOT_M):
    """Fixed-Talbot nodes ``s_k`` and weights ``c_k``: ``f(u) ~ sum Re(c_k F(s_k))``.

    Nodes with ``Re(s u) < -40`` carry weight below ``e^-40`` relative to the
    leading term and are dropped.
    """
    k = np.arange(1, M)
    th = k * math.pi / M
    r = 2.0 * M / (5.0 * u)
    cot = 1.0 / np.tan(th)
    s = r * th * (cot + 1j)
    sig = th + (th * cot - 1.0) * cot
    c = (r / M) * np.exp(u * s) * (1.0 + 1j * sig)
    keep = (s.real * u) > TALBOT_CUTOFF
    nodes = np.concatenate([[r + 0j], s[keep]])
    weights = np.concatenate([[0.5 * (r / M) * math.exp(r * u) + 0j], c[keep]])
    return nodes, weights


def talbot_invert(F, u, M=TALBOT_M):
    """Inverse Laplace transform of ``F`` (vectorised over nodes) at ``u > 0``."""
    s, c = talbot_nodes(u, M)
    vals = F(s)
    return np.real(np.tensordot(c, vals, axes=(0, 0)))


def first_passage_density_talbot(x, y, u, M=TALBOT_M):
    """Talbot-inverted first-passage density, for several ``x`` at once when ``x`` is an array."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs >= y):
        raise ValueError("need x < y")
    pts = np.unique(np.append(xs, y))
    iy = int(np.searchsorted(pts, y))
    ix = np.searchsorted(pts, xs)

    def F(s):
        logf, _ = riccati_sweep(s, pts)
        return np.exp(logf[:, ix] - logf[:, [iy]])

    out = talbot_invert(F, u, M)
    return out if np.ndim(x) else float(out[0])


def first_passage_cdf_talbot(x, y, U, M=TALBOT_M):
    """``P(tau_y <= U | R_0 = x)`` by Talbot inversion of ``L(s)/s``."""
    if not x < y:
        raise ValueError("need x < y")

    def F(s):
        logf, _ = riccati_sweep(s, [x, y])
        return np.exp(logf[:, 0] - logf[:, 1]) / s

    return float(talbot_invert(F, U, M))
