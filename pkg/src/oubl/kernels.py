"""Hot numeric loops, each in a numba and a pure-numpy flavour.

The public functions at the bottom dispatch on :func:`oubl._accel.use_numba`;
the ``*_nb`` / ``*_np`` pairs are importable for parity tests and the
benchmark script.
"""
import numpy as np

from ._accel import njit, use_numba

# --------------------------------------------------------------------------
# Riccati sweep for the increasing eigenfunction of the OU generator
#
#   (1/2) f'' - (x/2) f' = s f      <=>   g' = x g + 2 s - g^2,  g = f'/f
#
# integrated left to right together with I = int g dx (so f = exp(I) up to a
# constant).  The start value is the attracting WKB root (x + sqrt(x^2+8s))/2.
# --------------------------------------------------------------------------

RICCATI_STEP = 0.25
RICCATI_HMAX = 0.01


@njit
def _riccati_sweep_nb(s, xs, x_start, step, hmax):
    ns = s.shape[0]
    nx = xs.shape[0]
    logf = np.empty((ns, nx), dtype=np.complex128)
    gout = np.empty((ns, nx), dtype=np.complex128)
    for k in range(ns):
        sk = s[k]
        x = x_start
        g = 0.5 * (x + np.sqrt(x * x + 8.0 * sk))
        acc = 0.0 + 0.0j
        for j in range(nx):
            xt = xs[j]
            while x < xt:
                rr = abs(np.sqrt(x * x + 8.0 * sk))
                h = step / max(rr, 1.0)
                if h > hmax:
                    h = hmax
                if h > xt - x:
                    h = xt - x
                k1 = x * g + 2.0 * sk - g * g
                g2 = g + 0.5 * h * k1
                xm = x + 0.5 * h
                k2 = xm * g2 + 2.0 * sk - g2 * g2
                g3 = g + 0.5 * h * k2
                k3 = xm * g3 + 2.0 * sk - g3 * g3
                g4 = g + h * k3
                k4 = (x + h) * g4 + 2.0 * sk - g4 * g4
                acc += h / 6.0 * (g + 2.0 * g2 + 2.0 * g3 + g4)
                g = g + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                x += h
            logf[k, j] = acc
            gout[k, j] = g
    return logf, gout


def _riccati_sweep_np(s, xs, x_start, step, hmax):
    # vectorised over s; nodes of similar magnitude share a step sequence
    ns = s.shape[0]
    logf = np.empty((ns, xs.size), dtype=np.complex128)
    gout = np.empty_like(logf)
    order = np.argsort(np.abs(s))
    for block in np.array_split(order, max(1, ns // 8)):
        if block.size == 0:
            continue
        sb = s[block]
        smax = np.abs(sb).max()
        x = x_start
        g = 0.5 * (x + np.sqrt(x * x + 8.0 * sb))
        acc = np.zeros_like(g)
        for j, xt in enumerate(xs):
            while x < xt:
                rr = np.sqrt(x * x + 8.0 * smax)
                h = min(hmax, step / max(rr, 1.0), xt - x)
                k1 = x * g + 2.0 * sb - g * g
                g2 = g + 0.5 * h * k1
                xm = x + 0.5 * h
                k2 = xm * g2 + 2.0 * sb - g2 * g2
                g3 = g + 0.5 * h * k2
                k3 = xm * g3 + 2.0 * sb - g3 * g3
                g4 = g + h * k3
                k4 = (x + h) * g4 + 2.0 * sb - g4 * g4
                acc = acc + h / 6.0 * (g + 2.0 * g2 + 2.0 * g3 + g4)
                g = g + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                x += h
            logf[block, j] = acc
            gout[block, j] = g
    return logf, gout


def riccati_sweep(s, xs, x_start=None, step=RICCATI_STEP, hmax=RICCATI_HMAX):
    """Log of the increasing OU eigenfunction and its log-derivative.

    Parameters
    ----------
    s : array_like of complex
        Laplace variables; must avoid the real half-line ``s <= -x**2/8``.
    xs : array_like of float
        Evaluation points, strictly increasing.
    x_start : float, optional
        Left end of the sweep (default ``min(-10, xs[0] - 4)``).

    Returns
    -------
    logf, g : ndarray, shape (len(s), len(xs))
        ``logf[k, j] - logf[k, i] = log(f_s(xs[j]) / f_s(xs[i]))`` and
        ``g = f_s'/f_s``.
    """
    s = np.ascontiguousarray(np.atleast_1d(s), dtype=np.complex128)
    xs = np.ascontiguousarray(np.atleast_1d(xs), dtype=np.float64)
    if xs.size > 1 and np.any(np.diff(xs) <= 0):
        raise ValueError("xs must be strictly increasing")
    if x_start is None:
        x_start = min(-10.0, float(xs[0]) - 4.0)
    if use_numba():
        return _riccati_sweep_nb(s, xs, float(x_start), float(step), float(hmax))
    return _riccati_sweep_np(s, xs, float(x_start), float(step), float(hmax))


# --------------------------------------------------------------------------
# Linear Gaussian recursions  X_{k+1} = a_k X_k + b_k xi_k
# --------------------------------------------------------------------------


@njit
def _ar1_paths_nb(x0, decay, scale, normals):
    n, m = normals.shape
    out = np.empty((n, m + 1))
    for p in range(n):
        x = x0[p]
        out[p, 0] = x
        for k in range(m):
            x = decay[k] * x + scale[k] * normals[p, k]
            out[p, k + 1] = x
    return out


def _ar1_paths_np(x0, decay, scale, normals):
    n, m = normals.shape
    out = np.empty((n, m + 1))
    out[:, 0] = x0
    for k in range(m):
        out[:, k + 1] = decay[k] * out[:, k] + scale[k] * normals[:, k]
    return out


def ar1_paths(x0, decay, scale, normals):
    """Time-varying AR(1) paths; column 0 holds ``x0``."""
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    decay = np.ascontiguousarray(decay, dtype=np.float64)
    scale = np.ascontiguousarray(scale, dtype=np.float64)
    normals = np.ascontiguousarray(normals, dtype=np.float64)
    if use_numba():
        return _ar1_paths_nb(x0, decay, scale, normals)
    return _ar1_paths_np(x0, decay, scale, normals)


@njit
def _ar1_argmax_nb(x0, decay, scale, normals):
    n, m = normals.shape
    idx = np.zeros(n, dtype=np.int64)
    for p in range(n):
        x = x0[p]
        best = x
        ib = 0
        for k in range(m):
            x = decay[k] * x + scale[k] * normals[p, k]
            if x > best:
                best = x
                ib = k + 1
        idx[p] = ib
    return idx


def _ar1_argmax_np(x0, decay, scale, normals):
    return np.argmax(_ar1_paths_np(x0, decay, scale, normals), axis=1).astype(np.int64)


def ar1_argmax(x0, decay, scale, normals):
    """Index of the leftmost maximum of each AR(1) path (paths never stored)."""
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    decay = np.ascontiguousarray(decay, dtype=np.float64)
    scale = np.ascontiguousarray(scale, dtype=np.float64)
    normals = np.ascontiguousarray(normals, dtype=np.float64)
    if use_numba():
        return _ar1_argmax_nb(x0, decay, scale, normals)
    return _ar1_argmax_np(x0, decay, scale, normals)


# --------------------------------------------------------------------------
# Euler-Maruyama for dZ = (a(t) Z + p(t)) dt + sig(t) dB
# --------------------------------------------------------------------------


@njit
def _euler_linear_nb(z0, a, p, sig, dt, normals, stride):
    n, m = normals.shape
    nrec = m // stride + 1
    out = np.empty((n, nrec))
    bad = m
    sq = np.sqrt(dt)
    for i in range(n):
        z = z0
        out[i, 0] = z
        r = 1
        for k in range(m):
            z = z + (a[k] * z + p[k]) * dt + sig[k] * sq * normals[i, k]
            if not np.isfinite(z):
                if k < bad:
                    bad = k
                z = np.nan
            if (k + 1) % stride == 0:
                out[i, r] = z
                r += 1
    return out, bad


def _euler_linear_np(z0, a, p, sig, dt, normals, stride):
    n, m = normals.shape
    out = np.empty((n, m // stride + 1))
    out[:, 0] = z0
    z = np.full(n, float(z0))
    bad = m
    sq = np.sqrt(dt)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(m):
            z = z + (a[k] * z + p[k]) * dt + sig[k] * sq * normals[:, k]
            if bad == m and not np.all(np.isfinite(z)):
                bad = k
            if (k + 1) % stride == 0:
                out[:, (k + 1) // stride] = z
    return out, bad


def euler_linear(z0, a, p, sig, dt, normals, stride=1):
    """Euler-Maruyama paths for a linear SDE on a uniform grid.

    Returns the recorded states (every ``stride`` steps, first column the
    initial value) and the first step index at which any path overflowed
    (``normals.shape[1]`` when none did).
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    p = np.ascontiguousarray(p, dtype=np.float64)
    sig = np.ascontiguousarray(sig, dtype=np.float64)
    normals = np.ascontiguousarray(normals, dtype=np.float64)
    if use_numba():
        return _euler_linear_nb(float(z0), a, p, sig, float(dt), normals, int(stride))
    return _euler_linear_np(float(z0), a, p, sig, float(dt), normals, int(stride))


# --------------------------------------------------------------------------
# First passage of the stationary OU recursion above a level
# --------------------------------------------------------------------------


@njit
def _ou_passage_nb(x0, level, dt, normals, rec):
    n, m = normals.shape
    nr = rec.shape[0]
    fine = np.ones((n, nr))
    coarse = np.ones((n, nr))
    plain = np.ones((n, nr))
    dec = np.exp(-0.5 * dt)
    sc = np.sqrt(1.0 - np.exp(-dt))
    for i in range(n):
        x = x0
        xc = x0
        sf = 1.0
        scs = 1.0
        hit = False
        j = 0
        for k in range(m):
            xn = dec * x + sc * normals[i, k]
            if sf > 0.0:
                if xn >= level:
                    sf = 0.0
                else:
                    sf *= 1.0 - np.exp(-2.0 * (level - x) * (level - xn) / dt)
            if xn >= level:
                hit = True
            if (k + 1) % 2 == 0 and scs > 0.0:
                if xn >= level:
                    scs = 0.0
                else:
                    scs *= 1.0 - np.exp(-2.0 * (level - xc) * (level - xn) / (2.0 * dt))
                xc = xn
            x = xn
            while j < nr and rec[j] == k + 1:
                fine[i, j] = sf
                coarse[i, j] = scs
                plain[i, j] = 0.0 if hit else 1.0
                j += 1
    return fine, coarse, plain


def _ou_passage_np(x0, level, dt, normals, rec):
    n, m = normals.shape
    nr = rec.size
    fine = np.ones((n, nr))
    coarse = np.ones((n, nr))
    plain = np.ones((n, nr))
    dec = np.exp(-0.5 * dt)
    sc = np.sqrt(1.0 - np.exp(-dt))
    x = np.full(n, float(x0))
    xc = x.copy()
    sf = np.ones(n)
    scs = np.ones(n)
    hit = np.zeros(n, dtype=bool)
    want = {int(r): j for j, r in enumerate(rec)}
    for k in range(m):
        xn = dec * x + sc * normals[:, k]
        up = xn >= level
        sf = np.where(up, 0.0, sf * (1.0 - np.exp(-2.0 * (level - x) * (level - xn) / dt)))
        hit |= up
        if (k + 1) % 2 == 0:
            scs = np.where(up, 0.0, scs * (1.0 - np.exp(-2.0 * (level - xc) * (level - xn) / (2.0 * dt))))
            xc = xn
        x = xn
        if k + 1 in want:
            j = want[k + 1]
            fine[:, j] = sf
            coarse[:, j] = scs
            plain[:, j] = np.where(hit, 0.0, 1.0)
    return fine, coarse, plain


def ou_passage_survival(x0, level, dt, normals, record_steps):
    """Per-path survival below ``level`` for the exact OU recursion.

    Three estimators are recorded at the given step counts: bridge-corrected
    at step ``dt``, bridge-corrected on the every-other-point subsample
    (step ``2 dt``), and plain discrete monitoring.  ``record_steps`` must be
    even and increasing.
    """
    rec = np.ascontiguousarray(record_steps, dtype=np.int64)
    if np.any(rec % 2) or np.any(np.diff(rec) < 0):
        raise ValueError("record_steps must be even and non-decreasing")
    normals = np.ascontiguousarray(normals, dtype=np.float64)
    if use_numba():
        return _ou_passage_nb(float(x0), float(level), float(dt), normals, rec)
    return _ou_passage_np(float(x0), float(level), float(dt), normals, rec)
