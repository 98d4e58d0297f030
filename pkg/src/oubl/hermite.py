"""Normalized Hermite functions and the OU first-passage Laplace transform.

``hermite_real`` / ``hermite_imag`` evaluate the defining integrals

    Hr_a(v) = (2/sqrt(pi)) int_0^inf exp(-s^2) cos((a/2) log(1 + (v/s)^2)) ds
    Hi_a(v) = (2/sqrt(pi)) int_0^inf exp(-s^2) sin((a/2) log(1 + (v/s)^2)) ds

directly.  Both integrals are even in ``v``.  The analytic function they
represent for ``v >= 0`` is

    Hr_a(v) + i Hi_a(v) = f_s(-sqrt(2) v) / f_s(0),   s = -i a/2,

where ``f_s`` is the increasing solution of ``f''/2 - x f'/2 = s f``;
:func:`hermite_complex` evaluates this form for every real ``v``.  The
same ``f_s`` gives ``E_x exp(-s tau_y) = f_s(x)/f_s(y)`` for ``x < y``.
"""
import math

import numpy as np
from scipy.special import erfc

from .kernels import riccati_sweep
from .numerics import gl_panel

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


class HermiteToleranceError(RuntimeError):
    def __init__(self, message, achieved):
        super().__init__(message)
        self.achieved = achieved


def _hermite_parts(alpha, v, nodes):
    # s in (0, |v|): s = |v| e^{-w};  s in (|v|, S): direct
    av = abs(v)
    a2 = 0.5 * alpha
    total = 0.0 + 0.0j
    wmax = max(1.0, math.log(max(av, 1e-300) / 1e-17))
    width = min(1.0, 4.0 / max(abs(alpha), 1e-300))
    edges = np.arange(0.0, wmax + width, width)
    for a, b in zip(edges[:-1], edges[1:]):
        w, ww = gl_panel(a, b, nodes)
        s = av * np.exp(-w)
        phase = a2 * (np.log1p(np.exp(2 * w)))
        total += np.sum(ww * s * np.exp(-s * s) * np.exp(1j * phase))
    S = max(6.0, av + 6.0)
    width = min(0.5, 4.0 * max(av, 1e-3) / max(abs(alpha), 1e-300))
    edges = np.linspace(av, S, max(2, int(math.ceil((S - av) / width)) + 1))
    for a, b in zip(edges[:-1], edges[1:]):
        s, ww = gl_panel(a, b, nodes)
        phase = a2 * np.log1p((av / s) ** 2)
        total += np.sum(ww * np.exp(-s * s) * np.exp(1j * phase))
    return _TWO_OVER_SQRT_PI * total, erfc(S) + _TWO_OVER_SQRT_PI * av * math.exp(-wmax)


def hermite_integral(alpha, v, tol=1e-10, nodes=20):
    """``Hr_alpha(v) + i Hi_alpha(v)`` by Gauss-Legendre on substituted panels.

    Raises :class:`HermiteToleranceError` when two node counts disagree by
    more than ``tol``.
    """
    if v == 0 or alpha == 0:
        return 1.0 + 0.0j
    val, tail = _hermite_parts(alpha, v, nodes)
    ref, _ = _hermite_parts(alpha, v, nodes + 10)
    err = abs(val - ref) + tail
    if err > tol:
        raise HermiteToleranceError(f"Hermite integral error {err:.2e} above {tol:.2e}", err)
    return ref


def hermite_real(alpha, v, tol=1e-10):
    """Real normalized Hermite function ``Hr_alpha(v)``."""
    if np.ndim(v):
        return np.array([hermite_integral(alpha, float(x), tol).real for x in np.ravel(v)]).reshape(np.shape(v))
    return hermite_integral(alpha, float(v), tol).real


def hermite_imag(alpha, v, tol=1e-10):
    """Imaginary normalized Hermite function ``Hi_alpha(v)``."""
    if np.ndim(v):
        return np.array([hermite_integral(alpha, float(x), tol).imag for x in np.ravel(v)]).reshape(np.shape(v))
    return hermite_integral(alpha, float(v), tol).imag


def log_eigenfunction(s, xs):
    """``ln f_s`` at the points ``xs`` (any order), each row normalized to ``ln f_s(0) = 0``."""
    xs = np.asarray(xs, dtype=float)
    pts = np.unique(np.append(xs.ravel(), 0.0))
    logf, _ = riccati_sweep(np.atleast_1d(s), pts)
    logf = logf - logf[:, [int(np.searchsorted(pts, 0.0))]]
    idx = np.searchsorted(pts, xs.ravel())
    return logf[:, idx].reshape((logf.shape[0],) + xs.shape)


def hermite_complex(alpha, v):
    """Analytic continuation of ``Hr_alpha + i Hi_alpha`` to all real ``v``."""
    v = np.asarray(v, dtype=float)
    out = np.exp(log_eigenfunction(-0.5j * alpha, -math.sqrt(2.0) * v))[0]
    return complex(out) if out.ndim == 0 else out


def passage_laplace(s, x, y):
    """``E_x exp(-s tau_y)`` for the stationary OU process, ``x < y``, complex ``s``."""
    if not x < y:
        raise ValueError("need x < y")
    logf, _ = riccati_sweep(np.atleast_1d(s), [x, y])
    out = np.exp(logf[:, 0] - logf[:, 1])
    return out if np.ndim(s) else complex(out[0])
