"""Command-line interface.

Exit codes: 0 pass, 2 verified failure (witness or MC disagreement),
3 numerical error, 64 usage error.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

EXIT_OK = 0
EXIT_FAIL = 2
EXIT_NUMERIC = 3
EXIT_USAGE = 64

COMMANDS = ("families", "kernel", "verify", "boundedness", "simulate", "compare", "suploc", "reduce")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything a command needs; round-trips through :meth:`to_dict`."""

    command: str
    family: Optional[str] = None
    params: dict = field(default_factory=dict)
    T: Optional[float] = None
    grid: Optional[int] = None
    interval: Optional[list] = None
    seed: int = 20261018
    n_paths: Optional[int] = None
    dt: Optional[float] = None
    method: str = "exact"
    epsilon: Optional[float] = None
    tol: float = 1e-8
    quad_tol: float = 1e-10
    n_sigma: float = 4.0
    route: str = "tensor"
    flag_tol: float = 1e-7
    x_max: float = 6.0
    y_max: float = 6.0
    talbot_m: int = 32
    mc_check: Optional[int] = None
    mc_grid: int = 1025
    strict: bool = False
    dump: bool = False
    threads: Optional[int] = None
    out: Optional[str] = None

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        if d.get("command") not in COMMANDS:
            raise UsageError(f"command must be one of {COMMANDS}")
        return cls(**d)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _json_arg(text):
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"invalid JSON: {exc}") from None
    if not isinstance(value, dict):
        raise argparse.ArgumentTypeError("params must be a JSON object")
    return value


def _common(p, family=True):
    g = p.add_argument_group("run")
    g.add_argument("--config", metavar="PATH", help="JSON config; explicit flags take precedence")
    g.add_argument("--out", metavar="DIR", default=None, help="directory for output files")
    g.add_argument("--threads", type=int, default=None, help="worker threads (sets OUBL_THREADS)")
    g.add_argument("--seed", type=int, default=None, help="RNG seed")
    if family:
        g.add_argument("--family", default=None, help="family name (see the 'families' command)")
        g.add_argument("--params", type=_json_arg, default=None, help="family parameters as a JSON object")


def build_parser():
    p = _Parser(prog="oubl", description="Gauss-Markov processes as scaled stationary OU processes.")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    s = sub.add_parser("families", help="list registered families and their parameters")
    _common(s, family=False)

    s = sub.add_parser("kernel", help="tabulate a family's covariance next to its OU form")
    _common(s)
    s.add_argument("--grid", type=int, default=None, help="number of interior grid points (default 8)")

    s = sub.add_parser("verify", help="check the scaled-OU representation")
    _common(s)
    s.add_argument("--grid", type=int, default=None, help="number of interior grid points (default: built-in grid)")
    s.add_argument("--tol", type=float, default=None, help="identity residual tolerance")
    s.add_argument("--quad-tol", type=float, default=None, help="quadrature tolerance")
    s.add_argument("--epsilon", type=float, default=None, help="boundedness exponent")

    s = sub.add_parser("boundedness", help="sup and limit of phi Q^(1/2+eps) near T")
    _common(s)
    s.add_argument("--epsilon", type=float, default=None, help="boundedness exponent (default: family value)")

    s = sub.add_parser("simulate", help="sample paths and summarize mean and covariance")
    _common(s)
    s.add_argument("--method", choices=("exact", "transform", "euler"), default=None,
                   help="sampling route (default exact)")
    s.add_argument("--grid", type=int, default=None, help="number of interior grid points (default 8)")
    s.add_argument("--n-paths", type=int, default=None, help="number of paths (default 10000)")
    s.add_argument("--dt", type=float, default=None, help="Euler step")
    s.add_argument("--dump", action="store_true", default=None, help="write the path ensemble CSV")

    s = sub.add_parser("compare", help="exact sampling vs transformed OU sampling")
    _common(s)
    s.add_argument("--grid", type=int, default=None, help="number of interior grid points (default 8)")
    s.add_argument("--n-paths", type=int, default=None, help="paths per route (default 100000)")
    s.add_argument("--n-sigma", type=float, default=None, help="allowed standardized discrepancy")
    s.add_argument("--dump", action="store_true", default=None, help="write both path ensembles")

    s = sub.add_parser("suploc", help="density of the argmax location")
    _common(s)
    s.add_argument("--T", type=float, default=None, help="OU horizon")
    s.add_argument("--grid", type=int, default=None, help="number of interior grid points (default 101)")
    s.add_argument("--interval", type=float, nargs=2, metavar=("T1", "T2"), default=None,
                   help="subinterval of the family's horizon")
    s.add_argument("--route", choices=("tensor", "laplace"), default=None,
                   help="reported quadrature route; the other one gives the residual")
    s.add_argument("--flag-tol", type=float, default=None, help="cross-route residual that flags a point")
    s.add_argument("--x-max", type=float, default=None, help="truncation of the start and end values")
    s.add_argument("--y-max", type=float, default=None, help="truncation of the maximum")
    s.add_argument("--talbot-m", type=int, default=None, help="Talbot contour nodes")
    s.add_argument("--mc-check", type=int, default=None, metavar="N", help="append an N-path MC comparison")
    s.add_argument("--mc-grid", type=int, default=None, help="MC path grid size (odd)")
    s.add_argument("--strict", action="store_true", default=None, help="exit 3 when points are flagged")

    s = sub.add_parser("reduce", help="OU interval of a standardized process on [t1, t2]")
    _common(s)
    s.add_argument("--interval", type=float, nargs=2, metavar=("T1", "T2"), default=None,
                   help="subinterval of the family's horizon")
    s.add_argument("--grid", type=int, default=None, help="pullback table size (default 9)")
    return p


def resolve_config(ns):
    """Defaults, then the ``--config`` file, then explicit flags."""
    merged = {"command": ns.command}
    if ns.config:
        try:
            with open(ns.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        cfg.pop("command", None)
        merged.update(cfg)
    for key, value in vars(ns).items():
        if key in ("command", "config") or value is None:
            continue
        merged[key] = value
    cfg = RunConfig.from_dict(merged)
    if cfg.params is None:
        cfg.params = {}
    if not isinstance(cfg.params, dict):
        raise UsageError("params must be a JSON object")
    if cfg.grid is not None and cfg.grid < 1:
        raise UsageError("--grid must be positive")
    if cfg.n_paths is not None and cfg.n_paths < 2:
        raise UsageError("--n-paths must be at least 2")
    return cfg


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


class Output:
    def __init__(self, cfg):
        self.dir = cfg.out
        if self.dir:
            os.makedirs(self.dir, exist_ok=True)

    def table(self, name, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
        if self.dir:
            with open(os.path.join(self.dir, name), "w", newline="") as fh:
                fh.write(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())

    def report(self, name, payload):
        payload = dict(_clean(payload))
        payload["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
        text = json.dumps(payload, indent=2, sort_keys=True)
        if self.dir:
            with open(os.path.join(self.dir, name), "w") as fh:
                fh.write(text + "\n")
        print(text)

    def path(self, name):
        if not self.dir:
            raise UsageError("--dump needs --out")
        return os.path.join(self.dir, name)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _model(cfg):
    from .families import build_family

    if not cfg.family:
        raise UsageError("--family is required")
    try:
        return build_family(cfg.family, cfg.params)
    except (ValueError, TypeError) as exc:
        if "unknown" in str(exc):
            raise UsageError(str(exc)) from None
        raise


def _domain(model):
    if model.spec is not None:
        hi = model.spec.T if model.spec.has_finite_horizon else model.spec.probe_end()
        return 0.0, hi
    return model.kernel.domain


def interior_grid(lo, hi, n):
    """``n`` equally spaced points strictly inside ``(lo, hi)``, mirror-symmetric."""
    return lo + (hi - lo) * np.arange(1, n + 1) / (n + 1)


def cmd_families(cfg, out):
    from .families import FAMILIES

    keys = {
        "alpha-wiener": {"alpha": 1.0, "T": 1.0},
        "general-alpha-wiener": {"alpha": "1+t", "T": 1.0, "alpha_at_T": None, "delta1": None, "delta2": None},
        "ou-bridge": {"q": 1.0, "sigma": 1.0, "a": 0.0, "b": 0.0, "T": 1.0},
        "f-wiener": {"f": "1", "F": "t", "T": 1.0, "t_max": None},
        "weighted": {"w": "1+t", "bridge": False, "t_max": 10.0},
        "zero-area": {},
        "glued": {},
    }
    out.report("families.json", {"families": {name: keys.get(name, {}) for name in FAMILIES}})
    return EXIT_OK


def cmd_kernel(cfg, out):
    model = _model(cfg)
    grid = interior_grid(*_domain(model), cfg.grid or 8)
    K = model.kernel.gram(grid)
    rows = []
    if model.maps is not None:
        beta = np.atleast_1d(model.maps.beta(grid))
        v = np.atleast_1d(model.maps.v(grid))
        R = np.outer(v, v) * np.exp(-0.5 * np.abs(beta[:, None] - beta[None, :]))
    else:
        R = np.full_like(K, np.nan)
    for i in range(grid.size):
        for j in range(grid.size):
            rows.append((grid[i], grid[j], K[i, j], R[i, j]))
    out.table("kernel.csv", ["s", "t", "cov", "ou_form"], rows)
    return EXIT_OK


def cmd_verify(cfg, out):
    from .representation import kernel_representability, verify_representation

    model = _model(cfg)
    grid = interior_grid(*_domain(model), cfg.grid) if cfg.grid else None
    if model.spec is None:
        rep = kernel_representability(model.kernel, grid)
    else:
        rep = verify_representation(model, grid=grid, tol=cfg.tol, quad_tol=cfg.quad_tol, epsilon=cfg.epsilon)
    payload = rep.to_dict()
    payload.pop("beta_reconstructed")
    payload.pop("grid")
    payload["family"] = cfg.family
    out.report("report.json", payload)
    if not rep.representable:
        if rep.witness is not None:
            print("witness: " + " ".join(_fmt(x) for x in rep.witness) + f" value {_fmt(rep.witness_value)}",
                  file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_boundedness(cfg, out):
    from .representation import check_boundedness, default_epsilon

    model = _model(cfg)
    if model.spec is None or not model.spec.has_finite_horizon:
        raise UsageError("boundedness needs a family with a finite horizon")
    eps = cfg.epsilon if cfg.epsilon is not None else default_epsilon(model)
    if eps is None:
        raise UsageError("no default epsilon for this family; pass --epsilon")
    b = check_boundedness(model, eps)
    out.report("boundedness.json", {"family": cfg.family, **asdict(b)})
    return EXIT_OK


def cmd_simulate(cfg, out):
    from .simulation import export_ensemble_csv, sample_covariance, sample_euler, sample_exact, sample_mean, \
        sample_transformed

    model = _model(cfg)
    n = cfg.n_paths or 10000
    if cfg.method == "exact":
        ens = sample_exact(model.kernel, interior_grid(*_domain(model), cfg.grid or 8), n, cfg.seed)
    elif cfg.method == "transform":
        if model.maps is None:
            raise UsageError("transform sampling needs a family with a time change")
        ens = sample_transformed(model.maps, interior_grid(*_domain(model), cfg.grid or 8), n, cfg.seed)
    else:
        if model.spec is None:
            raise UsageError("Euler sampling needs SDE coefficients")
        dt = cfg.dt or 1e-3
        hi = _domain(model)[1]
        cut = 0.95 * hi if model.spec.has_finite_horizon else hi
        m = int(round(cut / dt))
        every = max(1, m // (cfg.grid or 8))
        ens = sample_euler(model.spec, dt, horizon_cut=cut, n_paths=n, seed=cfg.seed, record_every=every)
    mean, mean_se = sample_mean(ens)
    C, se = sample_covariance(ens)
    rows = [(t, mean[i], mean_se[i], C[i, i], se[i, i], model.kernel.mean_vector([t])[0],
             model.kernel.variance(np.array(t)))
            for i, t in enumerate(ens.times)]
    out.table("moments.csv", ["t", "mean", "mean_stderr", "var", "var_stderr", "mean_exact", "var_exact"], rows)
    if cfg.dump:
        export_ensemble_csv(ens, out.path("paths.csv"))
    return EXIT_OK


def cmd_compare(cfg, out):
    from .simulation import export_ensemble_csv, sample_covariance, sample_exact, sample_transformed

    model = _model(cfg)
    if model.maps is None:
        raise UsageError("compare needs a family with a time change")
    grid = interior_grid(*_domain(model), cfg.grid or 8)
    n = cfg.n_paths or 100000
    ex = sample_exact(model.kernel, grid, n, cfg.seed)
    tr = sample_transformed(model.maps, grid, n, cfg.seed + 1)
    C1, s1 = sample_covariance(ex)
    C2, s2 = sample_covariance(tr)
    z = np.abs(C1 - C2) / np.sqrt(s1 ** 2 + s2 ** 2)
    i, j = np.unravel_index(int(np.argmax(z)), z.shape)
    ok = bool(z[i, j] <= cfg.n_sigma)
    out.report("compare.json", {
        "family": cfg.family, "n_paths": n, "grid": grid, "max_standardized_difference": z[i, j],
        "at": [grid[i], grid[j]], "allowed": cfg.n_sigma, "pass": ok,
    })
    if cfg.dump:
        export_ensemble_csv(ex, out.path("paths_exact.csv"))
        export_ensemble_csv(tr, out.path("paths_transform.csv"))
    return EXIT_OK if ok else EXIT_FAIL


def _suploc_cfg(cfg):
    from .sup_location import SupLocConfig

    return SupLocConfig(x_max=cfg.x_max, y_max=cfg.y_max, talbot_M=cfg.talbot_m, route=cfg.route,
                        flag_tol=cfg.flag_tol, threads=cfg.threads)


def _bins_around(grid, lo, hi):
    # cells around each grid point that partition [lo, hi]
    return np.concatenate([[lo], 0.5 * (grid[1:] + grid[:-1]), [hi]])


def cmd_suploc(cfg, out):
    from .simulation import histogram_from_locations, ou_argmax_with_subgrid, sample_exact, standardized_kernel
    from .sup_location import StandardizedArgmax, StandardizedProcessMap, SupLocationEngine

    scfg = _suploc_cfg(cfg)
    n_grid = cfg.grid or 101
    if cfg.family:
        if cfg.interval is None:
            raise UsageError("--family needs --interval T1 T2")
        model = _model(cfg)
        if model.maps is None:
            raise UsageError("the family has no time change")
        t1, t2 = cfg.interval
        try:
            smap = StandardizedProcessMap(model.maps, t1, t2)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        sa = StandardizedArgmax(smap, scfg)
        lo, hi = t1, t2
        grid = interior_grid(lo, hi, n_grid)
        f = sa.density(grid)
        g = sa.density(grid, "laplace" if scfg.route == "tensor" else "tensor")
        res = np.abs(f - g)
        mass = sa.mass()
        diag = {"mode": "pullback", "interval": [t1, t2], "ou_interval": list(sa.red.ou_interval),
                "ou_length": sa.red.length, "mass": mass, "mass_ou": sa.engine.mass(0.0, sa.red.length)}
        mass_fn = lambda a, b: sa.mass(a, b)  # noqa: E731
    else:
        if cfg.T is None:
            raise UsageError("suploc needs --T or --family with --interval")
        if not cfg.T > 0:
            raise UsageError("--T must be positive")
        lo, hi = 0.0, cfg.T
        eng = SupLocationEngine(cfg.T, scfg)
        grid = interior_grid(lo, hi, n_grid)
        tab = eng.tabulate(grid)
        f, res = tab.f, tab.residual
        bound_excess = float(np.max(f - tab.bound()))
        diag = {"mode": "ou", "T": cfg.T, "window": list(tab.window), "interior_mass": tab.mass_interior,
                "symmetry_max": float(np.max(np.abs(f - f[::-1]))), "bound_excess": bound_excess,
                **tab.diagnostics}
        mass_fn = eng.mass
    flagged = res > cfg.flag_tol
    diag.update({"n_points": int(grid.size), "max_residual": float(np.max(res)), "n_flagged": int(flagged.sum()),
                 "flagged_s": grid[flagged]})
    header = ["s", "f", "residual_estimate"]
    cols = [grid, f, res]
    code = EXIT_OK
    if cfg.mc_check:
        if cfg.mc_grid % 2 == 0 or cfg.mc_grid < 3:
            raise UsageError("--mc-grid must be odd and at least 3")
        edges = _bins_around(grid, lo, hi)
        times = np.linspace(lo, hi, cfg.mc_grid)
        if cfg.family:
            ens = sample_exact(standardized_kernel(model.kernel), times, cfg.mc_check, cfg.seed)
            loc = times[np.argmax(ens.paths, axis=1)]
            loc2 = times[2 * np.argmax(ens.paths[:, ::2], axis=1)]
        else:
            loc, loc2 = ou_argmax_with_subgrid(times, cfg.mc_check, cfg.seed)
        h = histogram_from_locations(loc, edges)
        h2 = histogram_from_locations(loc2, edges)
        quad = np.array([mass_fn(a, b) for a, b in zip(edges[:-1], edges[1:])])
        budget = np.abs(h.mass - h2.mass)
        within = np.abs(quad - h.mass) <= 3 * h.stderr + budget
        header += ["bin_left", "bin_right", "quad_mass", "mc_mass", "mc_stderr", "mc_grid_budget", "within"]
        cols += [edges[:-1], edges[1:], quad, h.mass, h.stderr, budget, within]
        diag["mc"] = {"n_paths": cfg.mc_check, "path_grid": cfg.mc_grid, "n_outside": int((~within).sum()),
                      "max_standardized": float(np.max(np.abs(quad - h.mass) / np.maximum(h.stderr, 1e-300)))}
        if not np.all(within):
            code = EXIT_FAIL
    out.table("suploc.csv", header, zip(*cols))
    if cfg.out:
        out.report("suploc.json", diag)
    else:
        print(json.dumps(_clean(diag), sort_keys=True), file=sys.stderr)
    if cfg.strict and flagged.any():
        return EXIT_NUMERIC
    return code


def cmd_reduce(cfg, out):
    from .sup_location import StandardizedProcessMap, reduce_argmax

    model = _model(cfg)
    if cfg.interval is None:
        raise UsageError("reduce needs --interval T1 T2")
    if model.maps is None:
        raise UsageError("the family has no time change")
    try:
        smap = StandardizedProcessMap(model.maps, *cfg.interval)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    red = reduce_argmax(smap)
    r = np.linspace(0.0, red.length, cfg.grid or 9)
    table = [[x, red.pullback(x)] for x in r]
    out.report("reduce.json", {"family": cfg.family, "interval": list(cfg.interval),
                               "ou_interval": list(red.ou_interval), "length": red.length, "pullback": table})
    return EXIT_OK


HANDLERS = {
    "families": cmd_families,
    "kernel": cmd_kernel,
    "verify": cmd_verify,
    "boundedness": cmd_boundedness,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "suploc": cmd_suploc,
    "reduce": cmd_reduce,
}


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        cfg = resolve_config(ns)
        if cfg.threads is not None:
            os.environ["OUBL_THREADS"] = str(cfg.threads)
        out = Output(cfg)
        return HANDLERS[cfg.command](cfg, out)
    except UsageError as exc:
        print(f"oubl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TypeError as exc:
        print(f"oubl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"oubl: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
