"""Command-line front end: every computation as a plot-ready CSV table.

Exit codes: 0 success, 1 a verification failed, 2 usage or domain error.
Relative --out paths are placed under $RAIRY_OUTPUT_DIR when it is set.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys

import numpy as np

OUTPUT_ENV = "RAIRY_OUTPUT_DIR"


def _version():
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        return "0.1.0"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return str(v)


class CsvTable:
    def __init__(self, columns, meta=None):
        self.columns = list(columns)
        self.rows = []
        self.meta = list(meta or [])

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError("row length does not match the header")
        self.rows.append(row)

    def render(self):
        buf = io.StringIO()
        for m in self.meta:
            buf.write(f"# {m}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _emit(table, args):
    text = table.render()
    if not args.out:
        sys.stdout.write(text)
        return
    path = args.out
    base = os.environ.get(OUTPUT_ENV)
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _meta(args):
    skip = {"func", "out", "config", "command"}
    items = sorted((k, v) for k, v in vars(args).items() if k not in skip)
    return [f"rairy {_version()}", f"command: {args.command}"] + \
        [f"{k}={_fmt(v) if not isinstance(v, (list, tuple)) else ' '.join(_fmt(x) for x in v)}"
         for k, v in items]


def _arange(lo, hi, h):
    n = int(round((hi - lo) / h))
    return lo + h * np.arange(n + 1)


# ---------------------------------------------------------------------------
# subcommands

def cmd_tw(args):
    from .fredholm import build_rule, fredholm_logdet, tracy_widom_q0
    from .kernels import KernelSpec

    t = CsvTable(["x", "Q0", "F", "Q0_fredholm", "abs_diff"], _meta(args))
    for x in _arange(args.x_min, args.x_max, args.step):
        q = tracy_widom_q0(x)
        k = KernelSpec.airy()
        qf = fredholm_logdet(k, x, build_rule(x, args.accuracy, k))
        t.add(x, q, math.exp(q), qf, abs(q - qf))
    _emit(t, args)
    return 0


def cmd_rairy(args):
    from .fredholm import build_rule, fredholm_logdet
    from .kernels import KernelSpec

    t = CsvTable(["x", "tau", "r", "Q", "F"], _meta(args))
    k = KernelSpec.rairy(args.r, args.tau) if args.r else KernelSpec.airy()
    for x in _arange(args.x_min, args.x_max, args.step):
        q = fredholm_logdet(k, x, build_rule(x, args.accuracy, k))
        t.add(x, args.tau, args.r, q, math.exp(q))
    _emit(t, args)
    return 0


def cmd_surface(args):
    from .pde import q_surface

    S = q_surface(args.r, (args.tau_min, args.tau_max), (args.x_min, args.x_max),
                  (args.h_tau, args.h_x), args.accuracy, workers=args.workers)
    t = CsvTable(["tau", "x", "Q", "accuracy"], _meta(args))
    for i, tau in enumerate(S.tau):
        for j, x in enumerate(S.x):
            t.add(tau, x, S.Q[i, j], S.accuracy[i, j])
    _emit(t, args)
    return 0


def cmd_pde_check(args):
    from .finiten import SourceEnsemble
    from .pde import finite_n_pde_residual, q_surface, r_airy_pde_residual

    t = CsvTable(["form", "h", "residual", "normalization", "relative"], _meta(args))
    rel = []
    if args.which == "rairy":
        h = args.h / 2
        S = q_surface(args.r, (args.tau - 8 * h, args.tau + 8 * h),
                      (args.x - 8 * h, args.x + 8 * h), (h, h), args.accuracy,
                      workers=args.workers)
        for stride in (2, 1):
            rep = r_airy_pde_residual(S, (args.tau, args.x), stride=stride)
            t.add("one-time", rep.steps[0], rep.residual, rep.normalization, rep.relative)
            rel.append(rep.relative)
        ok = rel[0] <= args.tol and rel[1] <= 2 * rel[0]
    else:
        ens = SourceEnsemble(args.n, args.k1, args.alpha)
        for h in (args.h, args.h / 2):
            q, d, _ = finite_n_pde_residual(ens, args.b, h)
            t.add("quartic", h, q.residual, q.normalization, q.relative)
            t.add("determinant", h, d.residual, d.normalization, d.relative)
            rel.append(max(q.relative, d.relative))
        ok = rel[0] <= args.tol and rel[1] <= 2 * rel[0]
    _emit(t, args)
    return 0 if ok else 1


def _identity_table(args, rep):
    t = CsvTable(["identity", "relative_residual", "degenerate"], _meta(args))
    for k, v in rep.residuals.items():
        t.add(k, v, k in rep.degenerate)
    _emit(t, args)
    return 0 if rep.worst <= args.tol else 1


def cmd_kp(args):
    from .finiten import SourceEnsemble, kp_identity_check

    rep = kp_identity_check(SourceEnsemble(args.n, args.k1, args.alpha), args.b, args.step)
    return _identity_table(args, rep)


def cmd_virasoro(args):
    from .finiten import SourceEnsemble, virasoro_check

    rep = virasoro_check(SourceEnsemble(args.n, args.k1, args.alpha), args.b, args.step)
    return _identity_table(args, rep)


def cmd_mc(args):
    from .finiten import SourceEnsemble, edge_ks, limit_cdf, sample_edge

    alpha = args.rho * math.sqrt(args.n) if args.alpha is None else args.alpha
    ens = SourceEnsemble(args.n, args.k1, alpha)
    lmax = sample_edge(ens, args.samples, args.seed, method=args.method)
    y = (lmax - 2 * math.sqrt(args.n)) * args.n ** (1.0 / 6.0)
    r = 0 if args.limit == "tw" else args.k1
    stat, p = edge_ks(y, limit_cdf(r, args.tau))
    meta = _meta(args) + [f"ks_statistic={_fmt(stat)}", f"ks_pvalue={_fmt(p)}"]
    t = CsvTable(["sample", "lambda_max", "rescaled"], meta)
    for i, (a, b) in enumerate(zip(lmax, y)):
        t.add(i, a, b)
    _emit(t, args)
    return 0 if p >= args.level else 1


def cmd_asym(args):
    from .asymptotics import asymptotic_compare

    t = CsvTable(["order", "tau", "exact", "expansion", "error", "fitted_exponent"], _meta(args))
    for order in args.orders:
        tab = asymptotic_compare(args.r, args.x, args.taus, order)
        for tau, e, a, err in zip(tab.taus, tab.exact, tab.approx, tab.errors):
            t.add(order, tau, e, a, err, tab.exponent)
    _emit(t, args)
    return 0


def cmd_moments(args):
    from .asymptotics import edge_moments_direct, edge_moments_expansion

    base = edge_moments_direct(0, 0.0)
    ex = edge_moments_expansion(args.r, args.tau, base)
    m1, m2, v = edge_moments_direct(args.r, args.tau)
    t = CsvTable(["quantity", "expansion", "direct", "difference"], _meta(args))
    for name, a, b in (("mean", ex.mean, m1), ("second_moment", ex.mu2, m2), ("variance", ex.var, v)):
        t.add(name, a, b, a - b)
    _emit(t, args)
    return 0


def cmd_geometry(args):
    from .finiten import cusp_geometry, tangency_point

    t = CsvTable(["quantity", "value"], _meta(args))
    y0, t0 = tangency_point(args.rho0, args.n)
    t.add("tangency_y0", y0)
    t.add("tangency_t0", t0)
    if args.a is not None and args.p is not None:
        cg = cusp_geometry(args.a, args.p)
        for k in ("q", "x0", "t0", "mu", "c0", "A_const"):
            t.add(f"cusp_{k}", getattr(cg, k))
    _emit(t, args)
    return 0


def cmd_verify_all(args):
    from .acceptance import run_all

    only = set(args.only) if args.only else None
    res = run_all(fast=args.fast, only=only, echo=lambda s: print(s, file=sys.stderr))
    t = CsvTable(["criterion", "title", "passed", "summary"], _meta(args))
    for r in res:
        t.add(r.number, r.title, r.passed and r.within_budget, r.summary)
    _emit(t, args)
    return 0 if all(r.passed and r.within_budget for r in res) else 1


# ---------------------------------------------------------------------------
# parser

def _floats(s):
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s):
    return [int(v) for v in s.split(",") if v.strip()]


def build_parser():
    p = argparse.ArgumentParser(prog="rairy", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rairy {_version()}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--out", help="output CSV (default: stdout)")
        sp.add_argument("--config", help="key=value file; flags override it")
        sp.set_defaults(func=func)
        return sp

    s = add("tw", cmd_tw, "Tracy-Widom table, Painleve and Fredholm routes")
    s.add_argument("--x-min", type=float, default=-6.0)
    s.add_argument("--x-max", type=float, default=4.0)
    s.add_argument("--step", type=float, default=0.1)
    s.add_argument("--accuracy", type=float, default=1e-12)

    s = add("rairy", cmd_rairy, "r-Airy log-probability along x")
    s.add_argument("--r", type=int, default=1)
    s.add_argument("--tau", type=float, default=0.0)
    s.add_argument("--x-min", type=float, default=-6.0)
    s.add_argument("--x-max", type=float, default=6.0)
    s.add_argument("--step", type=float, default=0.25)
    s.add_argument("--accuracy", type=float, default=1e-12)

    s = add("surface", cmd_surface, "Q(tau, x) grid dump")
    s.add_argument("--r", type=int, default=1)
    s.add_argument("--tau-min", type=float, default=-4.0)
    s.add_argument("--tau-max", type=float, default=-2.0)
    s.add_argument("--x-min", type=float, default=-1.0)
    s.add_argument("--x-max", type=float, default=1.0)
    s.add_argument("--h-tau", type=float, default=0.1)
    s.add_argument("--h-x", type=float, default=0.1)
    s.add_argument("--accuracy", type=float, default=1e-13)
    s.add_argument("--workers", type=int, default=4)

    s = add("pde-check", cmd_pde_check, "finite-difference PDE residuals")
    s.add_argument("--which", choices=("rairy", "finite-n"), default="rairy")
    s.add_argument("--r", type=int, default=1)
    s.add_argument("--tau", type=float, default=-3.0)
    s.add_argument("--x", type=float, default=0.0)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--k1", type=int, default=1)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--b", type=float, default=2.0)
    s.add_argument("--h", type=float, default=0.1)
    s.add_argument("--tol", type=float, default=5e-3)
    s.add_argument("--accuracy", type=float, default=1e-13)
    s.add_argument("--workers", type=int, default=4)

    for name, func in (("kp-check", cmd_kp), ("virasoro-check", cmd_virasoro)):
        s = add(name, func, "finite-difference identity residuals")
        s.add_argument("--n", type=int, default=3)
        s.add_argument("--k1", type=int, default=1)
        s.add_argument("--alpha", type=float, default=0.5 if name == "kp-check" else 1.0)
        s.add_argument("--b", type=float, default=1.0 if name == "kp-check" else 2.0,
                       help="right end of E; omit with --whole-line")
        s.add_argument("--step", type=float, default=5e-3)
        s.add_argument("--tol", type=float, default=1e-4)
        if name == "kp-check":
            s.add_argument("--whole-line", dest="b", action="store_const", const=None)

    s = add("mc", cmd_mc, "Monte Carlo edge samples and KS test")
    s.add_argument("--n", type=int, default=400)
    s.add_argument("--k1", type=int, default=1)
    s.add_argument("--rho", type=float, default=0.5)
    s.add_argument("--alpha", type=float, default=None, help="overrides --rho")
    s.add_argument("--samples", type=int, default=20000)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--limit", choices=("tw", "rairy"), default="tw")
    s.add_argument("--tau", type=float, default=0.0)
    s.add_argument("--method", choices=("auto", "dense", "tridiagonal"), default="auto")
    s.add_argument("--level", type=float, default=0.01)

    s = add("asym-check", cmd_asym, "expansion error table")
    s.add_argument("--r", type=int, default=1)
    s.add_argument("--x", type=float, default=0.0)
    s.add_argument("--taus", type=_floats, default=[-6.0, -8.0, -12.0, -16.0])
    s.add_argument("--orders", type=_ints, default=[1, 2, 3, 4, 5])

    s = add("moments", cmd_moments, "edge moments, expansion vs direct")
    s.add_argument("--r", type=int, default=1)
    s.add_argument("--tau", type=float, default=-8.0)

    s = add("geometry", cmd_geometry, "tangency point and cusp data")
    s.add_argument("--rho0", type=float, default=1.0)
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--a", type=float, default=None)
    s.add_argument("--p", type=float, default=None)

    s = add("verify-all", cmd_verify_all, "run the acceptance checks")
    s.add_argument("--fast", action="store_true")
    s.add_argument("--only", type=_ints, default=None)
    return p


def _read_config(path):
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            cfg[k.replace("-", "_")] = v
    return cfg


def parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sp = parser._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sp._actions}
        defaults = {}
        for k, v in _read_config(args.config).items():
            if k not in actions:
                parser.error(f"unknown config key {k!r}")
            conv = actions[k].type or (lambda s: s)
            defaults[k] = conv(v)
        sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def main(argv=None):
    from .specfun import UnsupportedDomainError

    try:
        args = parse(sys.argv[1:] if argv is None else argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else 2
    try:
        return args.func(args)
    except (UnsupportedDomainError, ValueError, OSError) as e:
        print(f"rairy: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
