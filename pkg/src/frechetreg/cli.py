"""Command-line interface.

Subcommands cover the pipeline end to end: `quantiles` turns raw readings
into quantile rows, `fit-path` runs the sparse fit over a budget grid,
`stability` and `cv` pick variables, `simulate` writes synthetic datasets,
`benchmark` times the two solvers against each other, and `predict` scores
new covariate rows from a stored path.  Options may come from a JSON file
via --config; explicit flags win over config values.  Exit codes: 0 on
success, 2 on bad input data, 3 when a solver fails to converge, 1 for
anything unexpected.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import io as fio
from . import plots
from .data import ConstraintSystem, QuantileMatrix, empirical_quantiles, make_grid
from .errors import ConvergenceError, DataError
from .options import SolverOptions
from .regression import Design, predict_quantiles
from .selection import cross_validate_tau, select_any_vote, stability_paths
from .simulate import SimConfigA, SimConfigB, gen_experiment_a, gen_experiment_b
from .solvers import solution_path


def _parse_taus(spec: str) -> np.ndarray:
    """Budget grids: 'lin:a:b:n', 'log:a:b:n', or a comma list like '1,2,5'."""
    if spec.startswith("lin:") or spec.startswith("log:"):
        kind, a, b, n = spec.split(":")
        a, b, n = float(a), float(b), int(n)
        if n < 1:
            raise DataError(f"tau grid needs at least one point, got {n}")
        if kind == "lin":
            taus = np.linspace(a, b, n)
        else:
            if a <= 0 or b <= 0:
                raise DataError("log tau grid needs positive endpoints")
            taus = np.geomspace(a, b, n)
    else:
        try:
            taus = np.asarray([float(v) for v in spec.split(",")], dtype=float)
        except ValueError as exc:
            raise DataError(f"cannot parse tau grid {spec!r}") from exc
    if np.any(taus <= 0):
        raise DataError("budgets must be positive")
    return taus


def _box(args) -> tuple[float, float] | None:
    if args.box is None:
        return None
    lo, hi = float(args.box[0]), float(args.box[1])
    return (lo, hi)


def _opts(args) -> SolverOptions:
    kw = {}
    if getattr(args, "eps", None) is not None:
        kw["eps"] = args.eps
    if getattr(args, "max_iter", None) is not None:
        kw["max_iter"] = args.max_iter
    return SolverOptions(**kw)


def _load_dataset(args) -> tuple[Design, QuantileMatrix, ConstraintSystem]:
    qm = fio.read_quantile_csv(args.quantiles, box=_box(args))
    ids, X, names = fio.read_covariate_csv(args.covariates)
    if len(ids) != qm.n:
        raise DataError(
            f"{args.covariates}: {len(ids)} rows but {qm.n} quantile rows"
        )
    if qm.subject_ids and list(qm.subject_ids) != ids:
        raise DataError("subject_id order differs between quantile and covariate files")
    design = Design.from_raw(X, names=names)
    return design, qm, qm.constraint_system()


_NON_CONFIG_KEYS = frozenset(
    # output destinations do not affect content, so they stay out of the hash
    ("func", "config", "output", "plot", "out_quantiles", "out_covariates")
)


def _config_sha(args) -> str:
    cfg = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG_KEYS}
    return fio.config_hash(cfg)


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_quantiles(args) -> int:
    readings = fio.read_long_csv(args.input)
    grid = make_grid(args.m)
    subjects = args.subjects.split(",") if args.subjects else None
    qm = empirical_quantiles(readings, grid, box=_box(args), subjects=subjects)
    fio.write_quantile_csv(args.output, qm, config_sha=_config_sha(args))
    print(f"wrote {qm.n} subjects x {args.m} quantiles to {args.output}")
    return 0


def _cmd_fit_path(args) -> int:
    design, qm, cs = _load_dataset(args)
    taus = _parse_taus(args.taus)
    path = solution_path(
        design, qm.values, cs, taus, method=args.method, opts=_opts(args),
        warm_start=args.warm_start,
    )
    fio.write_path_csv(
        args.output, path.taus, path.lambdas, path.f_values,
        config_sha=_config_sha(args),
    )
    stem, _ = os.path.splitext(args.output)
    fio.write_centering_json(stem + ".centering.json", design.names,
                             design.column_means)
    if args.plot:
        with open(args.plot, "w") as fh:
            fh.write(plots.path_plot_svg(path.taus, path.lambdas, path.names))
    for t, tau in enumerate(path.taus):
        size = int(np.count_nonzero(path.lambdas[t]))
        print(f"tau={tau:g} f={path.f_values[t]:.6g} support={size}")
    return 0


def _cmd_stability(args) -> int:
    design, qm, cs = _load_dataset(args)
    taus = _parse_taus(args.taus)
    result = stability_paths(
        design, qm.values, cs, taus, B=args.B, seed=args.seed,
        opts=_opts(args), n_jobs=args.threads,
    )
    report = select_any_vote(result, K=args.K, mode=args.mode)
    fio.write_stability_csv(
        args.output, result.taus, result.names, result.pi_hat, result.q_hat,
        report.pi_thr, report.selected_by_tau,
        seed=args.seed, config_sha=_config_sha(args),
    )
    if args.plot:
        with open(args.plot, "w") as fh:
            fh.write(
                plots.stability_plot_svg(
                    result.taus, result.pi_hat, result.names,
                    pi_thr=report.pi_thr, q_hat=result.q_hat,
                )
            )
    chosen = [result.names[k] for k in report.selected]
    print(f"selected ({len(chosen)}): {', '.join(chosen) if chosen else '(none)'}")
    return 0


def _cmd_cv(args) -> int:
    design, qm, cs = _load_dataset(args)
    taus = _parse_taus(args.taus)
    result = cross_validate_tau(
        design, qm.values, cs, taus, n_folds=args.folds, seed=args.seed,
        opts=_opts(args), method=args.method, n_jobs=args.threads,
    )
    payload = {
        "best_tau": result.best_tau,
        "taus": result.taus,
        "cv_curve": result.cv_curve,
        "support": [design.names[k] for k in result.support],
        "lam_best": result.lam_best,
        "n_folds": result.n_folds,
        "seed": result.seed,
        "config": "sha256:" + _config_sha(args),
    }
    fio.write_json_report(args.output, payload)
    print(f"best tau={result.best_tau:g} support={payload['support']}")
    return 0


def _cmd_simulate(args) -> int:
    if args.experiment == "A":
        cfg = SimConfigA(n=args.n, p=args.p, m=args.m)
        design, qm = gen_experiment_a(cfg, seed=args.seed)
    else:
        cfg = SimConfigB(n=args.n, p=args.p, m=args.m)
        design, qm = gen_experiment_b(cfg, seed=args.seed)
    sha = _config_sha(args)
    X_raw = design.X + design.column_means
    ids = [str(i + 1) for i in range(design.n)]
    fio.write_covariate_csv(
        args.out_covariates, ids, X_raw, design.names, seed=args.seed, config_sha=sha
    )
    fio.write_quantile_csv(args.out_quantiles, qm, seed=args.seed, config_sha=sha)
    print(
        f"experiment {args.experiment}: wrote {design.n} subjects "
        f"({design.p} covariates, {qm.grid.m} quantiles)"
    )
    return 0


def _cmd_benchmark(args) -> int:
    if args.experiment == "A":
        design, qm = gen_experiment_a(SimConfigA(n=args.n, p=args.p, m=args.m), args.seed)
    else:
        design, qm = gen_experiment_b(SimConfigB(n=args.n, p=args.p, m=args.m), args.seed)
    cs = qm.constraint_system()
    taus = _parse_taus(args.taus)
    opts = _opts(args)
    report: dict = {"n": args.n, "p": args.p, "m": args.m, "taus": taus}
    for method in ("gsd", "mcd"):
        t0 = time.perf_counter()
        path = solution_path(design, qm.values, cs, taus, method=method, opts=opts)
        report[method] = {
            "seconds": time.perf_counter() - t0,
            "f_values": path.f_values,
            "evaluations": [d.n_evaluations for d in path.diagnostics],
        }
    gsd_f = np.asarray(report["gsd"]["f_values"])
    mcd_f = np.asarray(report["mcd"]["f_values"])
    with np.errstate(divide="ignore", invalid="ignore"):
        report["log10_f_ratio"] = np.log10(mcd_f / gsd_f)
    report["config"] = "sha256:" + _config_sha(args)
    fio.write_json_report(args.output, report)
    print(
        f"gsd {report['gsd']['seconds']:.2f}s vs mcd {report['mcd']['seconds']:.2f}s; "
        f"median log10 f ratio {np.nanmedian(report['log10_f_ratio']):.4f}"
    )
    return 0


def _cmd_predict(args) -> int:
    design, qm, cs = _load_dataset(args)
    taus, lambdas, _ = fio.read_path_csv(args.path)
    t_match = np.flatnonzero(np.abs(taus - args.tau) <= 1e-9 * max(1.0, abs(args.tau)))
    if t_match.size == 0:
        raise DataError(
            f"tau={args.tau:g} not in path file (available: "
            f"{', '.join(f'{t:g}' for t in taus)})"
        )
    lam = lambdas[int(t_match[0])]
    if lam.size != design.p:
        raise DataError(
            f"path file has {lam.size} coordinates but covariates have {design.p}"
        )
    new_ids, X_new, new_names = fio.read_covariate_csv(args.new)
    if new_names != design.names:
        raise DataError("covariate names in --new differ from training columns")
    if args.centering is not None:
        c_names, c_means = fio.read_centering_json(args.centering)
        if c_names != design.names:
            raise DataError("centering sidecar names differ from training columns")
        if not np.allclose(c_means, design.column_means, rtol=1e-9, atol=1e-12):
            raise DataError(
                "centering sidecar means differ from the training covariates; "
                "the path file was fit on different data"
            )
    pred = predict_quantiles(design, qm, X_new, lam=lam, opts=_opts(args))
    pred = QuantileMatrix(
        grid=pred.grid, values=pred.values, subject_ids=tuple(new_ids), box=pred.box
    )
    fio.write_quantile_csv(args.output, pred, config_sha=_config_sha(args))
    print(f"wrote {len(new_ids)} predicted quantile rows to {args.output}")
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def _add_data_opts(sp) -> None:
    sp.add_argument("--quantiles", default=None, help="quantile CSV (subject_id,q1..qm)")
    sp.add_argument("--covariates", default=None, help="covariate CSV (subject_id,...)")
    sp.add_argument("--box", nargs=2, metavar=("LO", "HI"), default=None,
                    help="support bounds, e.g. --box 0 inf")


def _add_solver_opts(sp) -> None:
    sp.add_argument("--eps", type=float, default=None, help="solver tolerance")
    sp.add_argument("--max-iter", dest="max_iter", type=int, default=None)


def _default_threads() -> int:
    return int(os.environ.get("FRECHETREG_THREADS", "1"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frechetreg",
        description="sparse distributional regression for quantile responses",
    )
    parser.add_argument("--version", action="version", version="frechetreg 0.1.0")
    sub = parser.add_subparsers(dest="command")

    sp = sub.add_parser("quantiles", help="empirical quantiles from long-format readings")
    sp.add_argument("--config", help="JSON file of option defaults")
    sp.add_argument("--input", help="long CSV (subject_id,value)")
    sp.add_argument("--m", type=int, help="grid size")
    sp.add_argument("--box", nargs=2, metavar=("LO", "HI"), default=None)
    sp.add_argument("--subjects", default=None,
                    help="comma list restricting (and ordering) the subjects")
    sp.add_argument("--output")
    sp.set_defaults(func=_cmd_quantiles, _required=('input', 'm', 'output'))

    sp = sub.add_parser("fit-path", help="fit the allowance path over a budget grid")
    sp.add_argument("--config", help="JSON file of option defaults")
    _add_data_opts(sp)
    sp.add_argument("--taus", help="e.g. lin:1:20:20 or 0.5,1,2")
    sp.add_argument("--method", choices=("gsd", "mcd"), default="gsd")
    sp.add_argument("--warm-start", dest="warm_start", action="store_true")
    _add_solver_opts(sp)
    sp.add_argument("--output", help="path CSV out")
    sp.add_argument("--plot", default=None, help="optional SVG out")
    sp.set_defaults(func=_cmd_fit_path, _required=('quantiles', 'covariates', 'taus', 'output'))

    sp = sub.add_parser("stability", help="complementary-pairs stability selection")
    sp.add_argument("--config", help="JSON file of option defaults")
    _add_data_opts(sp)
    sp.add_argument("--taus")
    sp.add_argument("--B", type=int, default=50, help="number of subsample pairs")
    sp.add_argument("--K", type=float, default=1.0, help="false selection budget")
    sp.add_argument("--mode", choices=("r-concave", "mb"), default="r-concave")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=_default_threads())
    _add_solver_opts(sp)
    sp.add_argument("--output", help="stability CSV out")
    sp.add_argument("--plot", default=None, help="optional SVG out")
    sp.set_defaults(func=_cmd_stability, _required=('quantiles', 'covariates', 'taus', 'output'))

    sp = sub.add_parser("cv", help="pick the budget by cross-validated error")
    sp.add_argument("--config", help="JSON file of option defaults")
    _add_data_opts(sp)
    sp.add_argument("--taus")
    sp.add_argument("--folds", type=int, default=10)
    sp.add_argument("--method", choices=("gsd", "mcd"), default="gsd")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=_default_threads())
    _add_solver_opts(sp)
    sp.add_argument("--output", help="JSON report out")
    sp.set_defaults(func=_cmd_cv, _required=('quantiles', 'covariates', 'taus', 'output'))

    sp = sub.add_parser("simulate", help="write a synthetic dataset")
    sp.add_argument("--config", help="JSON file of option defaults")
    sp.add_argument("--experiment", choices=("A", "B"))
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=int)
    sp.add_argument("--m", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-quantiles", dest="out_quantiles")
    sp.add_argument("--out-covariates", dest="out_covariates")
    sp.set_defaults(func=_cmd_simulate, _required=('experiment', 'n', 'p', 'm', 'out_quantiles', 'out_covariates'))

    sp = sub.add_parser("benchmark", help="time the two solvers on one synthetic dataset")
    sp.add_argument("--config", help="JSON file of option defaults")
    sp.add_argument("--experiment", choices=("A", "B"), default="A")
    sp.add_argument("--n", type=int, default=200)
    sp.add_argument("--p", type=int, default=20)
    sp.add_argument("--m", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--taus", default="lin:1:20:20")
    _add_solver_opts(sp)
    sp.add_argument("--output", help="JSON report out")
    sp.set_defaults(func=_cmd_benchmark, _required=('output',))

    sp = sub.add_parser("predict", help="predict quantile rows for new covariates")
    sp.add_argument("--config", help="JSON file of option defaults")
    _add_data_opts(sp)
    sp.add_argument("--path", help="path CSV from fit-path")
    sp.add_argument("--tau", type=float, help="budget to pick from the path")
    sp.add_argument("--new", help="covariate CSV of rows to score")
    sp.add_argument("--centering", default=None,
                    help="centering sidecar JSON to cross-check against training data")
    sp.add_argument("--output")
    _add_solver_opts(sp)
    sp.set_defaults(func=_cmd_predict, _required=('quantiles', 'covariates', 'path', 'tau', 'new', 'output'))

    return parser


def _iter_subparsers(parser: argparse.ArgumentParser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            seen: set[int] = set()
            for sp in action.choices.values():
                if id(sp) not in seen:
                    seen.add(id(sp))
                    yield sp


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Install config-file values as defaults; explicit flags still win.

    Values are JSON-typed (numbers stay numbers), so they skip the argparse
    type converters.  Defaults go onto the subparsers because each subcommand
    parses into a fresh namespace.
    """
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        with open(known.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read config {known.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise DataError(f"{known.config}: config must be a JSON object")
    subparsers = list(_iter_subparsers(parser))
    all_dests = {a.dest for sp in subparsers for a in sp._actions}
    unknown = set(cfg) - all_dests
    if unknown:
        raise DataError(f"{known.config}: unknown config keys {sorted(unknown)}")
    for sp in subparsers:
        dests = {a.dest for a in sp._actions}
        sp.set_defaults(**{k: v for k, v in cfg.items() if k in dests})


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        for dest in getattr(args, "_required", ()):
            if getattr(args, dest, None) is None:
                flag = "--" + dest.replace("_", "-")
                raise DataError(f"missing required option {flag}")
        return args.func(args)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: solver did not converge: {exc}", file=sys.stderr)
        return 3
    except SystemExit:
        raise
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
