"""Time the numba kernels against their pure-numpy twins.

Each pair is first checked for agreement, then timed with ``timeit``
(best of ``--repeat``).  Numba compilation happens in the warm-up call
and is excluded from the timings.

    python3 benchmarks/bench_kernels.py --paths 20000 --steps 1000
"""
import argparse
import timeit

import numpy as np

from oubl import kernels as K


def cases(n_paths, n_steps, seed):
    rng = np.random.default_rng(seed)
    normals = rng.standard_normal((n_paths, n_steps))
    dt = 1.0 / n_steps
    decay = np.full(n_steps, np.exp(-dt / 2))
    scale = np.sqrt(1 - decay ** 2)
    x0 = rng.standard_normal(n_paths)
    a = -np.ones(n_steps)
    p = np.zeros(n_steps)
    sig = np.ones(n_steps)
    rec = np.arange(2, n_steps + 1, max(2, (n_steps // 10) // 2 * 2))
    s = np.linspace(0.5, 8.0, 64) + 0.5j
    xs = np.linspace(-3.0, 3.0, 200)
    return {
        "ar1_paths": (K._ar1_paths_nb, K._ar1_paths_np, (x0, decay, scale, normals)),
        "ar1_argmax": (K._ar1_argmax_nb, K._ar1_argmax_np, (x0, decay, scale, normals)),
        "euler_linear": (K._euler_linear_nb, K._euler_linear_np, (0.0, a, p, sig, dt, normals, 10)),
        "ou_passage": (K._ou_passage_nb, K._ou_passage_np, (0.0, 1.0, dt, normals, rec)),
        "riccati_sweep": (K._riccati_sweep_nb, K._riccati_sweep_np,
                          (s, xs, -10.0, K.RICCATI_STEP, K.RICCATI_HMAX)),
    }


def _close(x, y):
    if isinstance(x, tuple):
        return all(_close(u, v) for u, v in zip(x, y))
    return np.allclose(x, y, rtol=1e-9, atol=1e-9, equal_nan=True)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=20000)
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=20261018)
    args = ap.parse_args(argv)

    print(f"{'kernel':<15}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, (nb, npf, call) in cases(args.paths, args.steps, args.seed).items():
        if not _close(nb(*call), npf(*call)):
            raise SystemExit(f"{name}: numba and numpy results differ")
        t_nb = min(timeit.repeat(lambda: nb(*call), number=1, repeat=args.repeat))
        t_np = min(timeit.repeat(lambda: npf(*call), number=1, repeat=args.repeat))
        print(f"{name:<15}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
