"""Command-line interface.

Every subcommand reads one model JSON (or a shipped model name: ex31, ex32,
eq31) and writes CSV or JSON. CSV outputs get a ``<out>.json`` sidecar with
the metadata needed to rerun them. Exit codes: 0 success, 2 invalid input,
3 verification failure, 4 numeric refusal.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__, analytics, estimate, figures
from .io import atomic_write_text, csv_text, json_text, path_csv_text, read_path_csv, report_csv_text, report_summary
from .model import ModelError, contraction_delta, load_model
from .stationary import NumericRefusal, simulate_closed_form, simulate_recursive
from .verify import run_verification

EXIT_OK, EXIT_INPUT, EXIT_VERIFY, EXIT_REFUSAL = 0, 2, 3, 4


class InputError(Exception):
    pass


def _emit(args, text, meta=None):
    if args.out is None:
        sys.stdout.write(text)
        return
    atomic_write_text(args.out, text)
    if meta is not None:
        atomic_write_text(f"{args.out}.json", json_text(meta))


def _meta(args, model=None, **extra):
    out = {"command": args.command, "version": __version__, "seed": args.seed}
    if model is not None:
        out["model"] = model.to_dict()
        out["model_hash"] = model.hash
    out.update(extra)
    return out


def _model(args):
    if args.model is None:
        raise InputError("--model is required")
    return load_model(args.model)


def _simulate(args, model):
    delta = contraction_delta(model, seed=args.seed)
    if args.method == "closed-form":
        path = simulate_closed_form(model, args.n, seed=args.seed, delta=delta,
                                    burn_in=args.burn_in if args.burn_in is not None else 0)
    else:
        path = simulate_recursive(model, args.n, burn_in=args.burn_in, seed=args.seed, delta=delta)
    return path, delta


def cmd_simulate(args):
    model = _model(args)
    path, delta = _simulate(args, model)
    meta = _meta(args, model, method=path.method, n=len(path), burn_in=path.burn_in,
                 delta_estimate=delta.value, delta_se=delta.se,
                 K=None if path.alpha is None else path.alpha.K,
                 tail_bound=None if path.alpha is None else path.alpha.tail_bound)
    if args.format == "json":
        body = dict(meta, index=path.index, e=path.aligned_innovations, y=path.values)
        if path.alpha is not None:
            body["alpha"] = path.alpha.alpha.astype(int)
        _emit(args, json_text(body))
    else:
        _emit(args, path_csv_text(path), meta)


def cmd_theory(args):
    model = _model(args)
    if args.grid:
        if not model.is_ex31_shape:
            raise InputError("--grid needs a drift-switching model (q=0, d=1)")
        rows = figures.fig1_rows(figures.parse_grid(args.grid), (model.mu1, model.mu2), model.innovation)
        header = ["r", "skewness", "kurtosis"]
        extra = {"grid": args.grid}
    else:
        lags = np.arange(1, args.max_lag + 1)
        if model.is_ex31_shape:
            c = analytics.ex31_constants(model.mu1, model.mu2, model.r, model.innovation)
            rho = analytics.ex31_acf(lags, c, model.mu1, model.mu2)
            extra = {"shape": "ex31", "beta": c.beta, "delta0": c.delta0, "lambda1": c.lambda1, "sigma2": c.sigma2}
        elif model.is_ex32_shape:
            varrho, se = analytics.ex32_varrho(model.phi[0], model.psi[0], model.r, model.innovation, seed=args.seed)
            rho = analytics.ex32_acf(lags, model.phi[0], model.psi[0], varrho)
            extra = {"shape": "ex32", "varrho": varrho, "varrho_se": se}
        else:
            raise InputError("no closed-form ACF for this model shape (needs q=0,d=1 or q=1,d=2,mu1=mu2=0)")
        rows = np.column_stack([lags, rho])
        header = ["lag", "rho_analytic"]
    meta = _meta(args, model, **extra)
    if args.format == "json":
        _emit(args, json_text(dict(meta, columns=header, rows=rows)))
    else:
        _emit(args, csv_text(header, _int_first(rows)), meta)


def _int_first(rows):
    return [[int(r[0]) if float(r[0]).is_integer() and abs(r[0]) < 2**53 else r[0], *r[1:]] for r in rows]


def _report_out(args, report, meta):
    summary = dict(meta, **report_summary(report))
    if args.format == "json":
        body = dict(summary, lags=report.lags, value=report.values, se=report.se,
                    band=getattr(report, "band", None))
        _emit(args, json_text(body))
    else:
        _emit(args, report_csv_text(report), summary)


def _try_fit(report):
    try:
        return estimate.fit_decay(report)
    except ValueError:
        return None


def cmd_acf(args):
    model = _model(args)
    path, delta = _simulate(args, model)
    rep = estimate.sample_acf(path, args.max_lag)
    rep.decay_fit = _try_fit(rep)
    _report_out(args, rep, _meta(args, model, method=path.method, burn_in=path.burn_in, n=len(path)))


def cmd_moments(args):
    model = _model(args)
    path, _ = _simulate(args, model)
    mom = estimate.sample_moments(path)
    rows = [[k, getattr(mom, k), mom.se[k]] for k in ("mean", "variance", "skewness", "kurtosis")]
    analytic = {}
    if model.is_ex31_shape and model.innovation.has_finite_variance:
        c = analytics.ex31_constants(model.mu1, model.mu2, model.r, model.innovation)
        analytic["variance"] = analytics.ex31_variance(c, model.mu1, model.mu2)
        analytic["mean"] = model.mu2 + (model.mu1 - model.mu2) * c.delta0
        if not (model.innovation.kind == "student_t" and model.innovation.param <= 4):
            analytic["skewness"], analytic["kurtosis"] = analytics.ex31_skewness_kurtosis(
                model.mu1, model.mu2, model.r, model.innovation)
    meta = _meta(args, model, method=path.method, burn_in=path.burn_in, n=len(path))
    if args.format == "json":
        _emit(args, json_text(dict(meta, **mom.to_dict(), analytic=analytic)))
    else:
        text = csv_text(["statistic", "value", "se", "analytic"], [[*row, analytic.get(row[0])] for row in rows])
        _emit(args, text, meta)


def cmd_decay(args):
    model = _model(args)
    u = model.r if args.u is None else args.u
    v = model.r if args.v is None else args.v
    rep = estimate.dependence_decay(model, u, v, range(1, args.max_lag + 1), args.replicates, seed=args.seed)
    rep.decay_fit = _try_fit(rep)
    _report_out(args, rep, _meta(args, model, u=u, v=v, replicates=args.replicates))


def cmd_figure(args):
    if args.which == "fig1":
        grid = figures.parse_grid(args.grid) if args.grid else figures.FIG1_GRID
        rows = figures.fig1_rows(grid)
        meta = _meta(args, None, figure="fig1", mu1=figures.FIG1_MU[0], mu2=figures.FIG1_MU[1],
                     innovation="normal", grid=list(grid))
        if args.format == "json":
            _emit(args, json_text(dict(meta, columns=["r", "skewness", "kurtosis"], rows=rows)))
        else:
            _emit(args, csv_text(["r", "skewness", "kurtosis"], rows), meta)
        return
    n = args.n if args.n is not None else 10**4
    rep = figures.fig2_report(seed=args.seed, n=n, max_lag=args.max_lag, burn_in=args.burn_in)
    rep.decay_fit = _try_fit(rep)
    model = figures.fig2_model()
    _report_out(args, rep, _meta(args, model, figure="fig2", n=n))


def cmd_verify(args):
    model = _model(args)
    path = None
    if args.path:
        path = read_path_csv(args.path, model.q, model.d)
    report = run_verification(model, seed=args.seed, n=args.n or 10**5, horizon=args.horizon,
                              replicates=args.replicates, path=path)
    for line in report.lines():
        print(line, file=sys.stderr)
    body = dict(_meta(args, model), **report.to_dict())
    if args.out is not None or args.format == "json":
        _emit(args, json_text(body))
    return EXIT_OK if report.passed else EXIT_VERIFY


def build_parser():
    p = argparse.ArgumentParser(prog="tmasim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, n_default=None):
        sp.add_argument("--model", help="model JSON file or shipped name (ex31, ex32, eq31)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--n", type=int, default=n_default)
        sp.add_argument("--burn-in", type=int, default=None)
        sp.add_argument("--method", choices=["recursive", "closed-form"], default="recursive")
        sp.add_argument("--max-lag", type=int, default=20)
        sp.add_argument("--out", default=None, help="output file (stdout if omitted)")
        sp.add_argument("--format", choices=["csv", "json"], default="csv")
        return sp

    sp = common(sub.add_parser("simulate", help="simulate a path"), 1000)
    sp.set_defaults(func=cmd_simulate)
    sp = common(sub.add_parser("theory", help="closed-form ACF or skewness/kurtosis grid"))
    sp.add_argument("--grid", default=None, help="threshold grid lo:hi:step")
    sp.set_defaults(func=cmd_theory)
    sp = common(sub.add_parser("acf", help="sample ACF of a simulated path"), 10**5)
    sp.set_defaults(func=cmd_acf)
    sp = common(sub.add_parser("moments", help="sample moments of a simulated path"), 10**5)
    sp.set_defaults(func=cmd_moments)
    sp = common(sub.add_parser("decay", help="joint-distribution dependence by lag"))
    sp.add_argument("--u", type=float, default=None)
    sp.add_argument("--v", type=float, default=None)
    sp.add_argument("--replicates", type=int, default=10**5)
    sp.set_defaults(func=cmd_decay)
    sp = common(sub.add_parser("figure", help="data for fig1 or fig2"))
    sp.add_argument("which", choices=["fig1", "fig2"])
    sp.add_argument("--grid", default=None, help="threshold grid lo:hi:step (fig1)")
    sp.set_defaults(func=cmd_figure)
    sp = common(sub.add_parser("verify", help="run all verification checks"))
    sp.add_argument("--replicates", type=int, default=10**5)
    sp.add_argument("--horizon", type=int, default=10**4)
    sp.add_argument("--path", default=None, help="path CSV to include in the exactness check")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.n is not None and args.n < 1:
            raise InputError("--n must be >= 1")
        rc = args.func(args)
    except NumericRefusal as exc:
        print(f"tmasim: refused: {exc}", file=sys.stderr)
        return EXIT_REFUSAL
    except (InputError, ModelError, ValueError, OSError) as exc:
        print(f"tmasim: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK if rc is None else rc


if __name__ == "__main__":
    sys.exit(main())
