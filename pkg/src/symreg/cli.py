# Command-line surface: simulate / fit / cv / replicate. Every command writes
# its outputs plus one manifest.json into --out. Exit codes: 0 success,
# 2 usage or validation, 3 I/O, 4 hit max iterations without reaching the
# tolerance (results are still written).

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import evaluate, io, simulate, solvers
from .glm import GlmConvergenceError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NO_CONVERGENCE = 4


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _build_config(args, rank=None, rho=None):
    try:
        return solvers.FitConfig(
            rank=rank if rank is not None else args.rank,
            rho=rho if rho is not None else args.rho,
            max_outer_iters=args.max_outer_iters,
            tol=args.tol,
            prox_steps=args.prox_steps,
            delta0=args.delta0,
            seed=args.seed,
            renormalize_columns=args.renormalize_columns,
        )
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"invalid solver configuration: {exc}")


def _add_solver_flags(p):
    p.add_argument("--max-outer-iters", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--prox-steps", type=int, default=5)
    p.add_argument("--delta0", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--renormalize-columns", action="store_true")


def _outdir(args):
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.touch()
        probe.unlink()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write to --out {out}: {exc}")
    return out


def _load_dataset(args):
    try:
        return io.read_dataset(args.data, log_response=args.log_response)
    except io.DataFormatError as exc:
        raise CliError(EXIT_USAGE, str(exc))
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read dataset: {exc}")


def cmd_simulate(args, argv):
    try:
        shape = simulate.SignalShape(args.shape, args.p)
    except ValueError as exc:
        flag = "--shape" if args.shape not in simulate.SHAPE_NAMES else "--p"
        raise CliError(EXIT_USAGE, f"invalid {flag}: {exc}")
    try:
        spec = simulate.SimSpec(
            shape=shape, n=args.n, p0=args.p0, sigma=args.sigma, seed=args.seed
        )
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"invalid simulation flags: {exc}")
    out = _outdir(args)
    with io.Stopwatch() as sw:
        data = simulate.gen_dataset(spec)
        io.write_dataset(data, out)
    io.write_manifest(
        out,
        "simulate",
        {
            "shape": args.shape,
            "p": args.p,
            "n": args.n,
            "p0": args.p0,
            "sigma": args.sigma,
        },
        inputs=[],
        seed=args.seed,
        duration=sw.seconds,
        extra={"argv": argv},
    )
    return EXIT_OK


def _fit_estimator(data, config, estimator):
    if estimator == "cp":
        return solvers.fit_cp(data, config)
    if estimator == "sym_cp":
        return solvers.fit_sym_cp(data, config)
    if estimator == "pipeline":
        return solvers.default_pipeline(data, config)
    # bare sym_tensor: seeded random B, lam from one unpenalized GLM update
    rng = np.random.default_rng(config.seed)
    init = solvers.SymCPFactors(None, rng.standard_normal((data.p, config.rank)))
    return solvers.fit_sym_tensor(data, config, init)


def _write_factors(path, factors):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if isinstance(factors, solvers.SymCPFactors):
            fh.write(",".join(io.fmt(v) for v in factors.lam) + "\n")
            mats = [factors.B]
        else:
            fh.write(",".join(io.fmt(1.0) for _ in range(factors.rank)) + "\n")
            mats = [factors.B1, factors.B2]
        for m in mats:
            for row in m:
                fh.write(",".join(io.fmt(v) for v in row) + "\n")


def cmd_fit(args, argv):
    data, _ = _load_dataset(args)
    config = _build_config(args)
    out = _outdir(args)
    with io.Stopwatch() as sw:
        try:
            result = _fit_estimator(data, config, args.estimator)
        except (GlmConvergenceError, solvers.NumericalError) as exc:
            raise CliError(EXIT_USAGE, f"solver failed: {exc}")
        yhat = evaluate.predict_mean(result, data)

        with open(out / "gamma.csv", "w", encoding="utf-8", newline="\n") as fh:
            for v in result.gamma:
                fh.write(io.fmt(v) + "\n")
        _write_factors(out / "factors.csv", result.factors)
        io.write_matrix_csv(out / "coef_full.csv", result.coef_full)
        with open(out / "trace.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("iteration,objective\n")
            for i, v in enumerate(result.objective_trace):
                fh.write(f"{i},{io.fmt(v)}\n")
        metrics = {
            "mse_pred_in": evaluate.mse_pred(yhat, data.y),
            "nnz_B": int(np.count_nonzero(_factor_entries(result.factors))),
            "converged": bool(result.converged),
            "iterations": int(result.iterations),
            "objective": float(result.objective_trace[-1]),
        }
        with open(out / "metrics.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(metrics, fh, indent=2, sort_keys=True)
            fh.write("\n")
    io.write_manifest(
        out,
        "fit",
        {"estimator": args.estimator, **_config_snapshot(config)},
        inputs=[args.data],
        seed=args.seed,
        duration=sw.seconds,
        extra={"argv": argv},
    )
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def _factor_entries(factors):
    if isinstance(factors, solvers.SymCPFactors):
        return factors.B
    return np.concatenate([factors.B1.ravel(), factors.B2.ravel()])


def _config_snapshot(config):
    return {
        "rank": config.rank,
        "rho": config.rho,
        "max_outer_iters": config.max_outer_iters,
        "tol": config.tol,
        "prox_steps": config.prox_steps,
        "delta0": config.delta0,
        "seed": config.seed,
        "renormalize_columns": config.renormalize_columns,
    }


def _parse_grid(text, flag, cast):
    try:
        vals = [cast(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"invalid {flag}: {exc}")
    if not vals:
        raise CliError(EXIT_USAGE, f"invalid {flag}: empty grid")
    return vals


def cmd_cv(args, argv):
    data, extras = _load_dataset(args)
    rho_grid = _parse_grid(args.rho_grid, "--rho-grid", float)
    rank_grid = _parse_grid(args.rank_grid, "--rank-grid", int)
    strata = None
    if args.strata_column:
        if args.strata_column not in extras:
            raise CliError(
                EXIT_USAGE,
                f"--strata-column {args.strata_column!r} not found in subjects.csv",
            )
        strata = np.asarray([float(v) for v in extras[args.strata_column]])
    try:
        plan = evaluate.CvPlan(
            rho_grid=rho_grid, rank_grid=rank_grid, k=args.k, strata=strata,
            seed=args.seed,
        )
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"invalid CV plan: {exc}")
    config = _build_config(args, rank=rank_grid[0], rho=rho_grid[0])
    out = _outdir(args)
    with io.Stopwatch() as sw:
        try:
            sel = evaluate.cv_select(data, plan, config, estimator=args.estimator)
        except (GlmConvergenceError, solvers.NumericalError) as exc:
            raise CliError(EXIT_USAGE, f"cross-validation failed: {exc}")
        header = ["fold"] + [f"rho={rho};rank={rank}" for rho, rank in sel.grid]
        with open(out / "cv_table.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            rows = sel.table_rows()
            for f in range(plan.k):
                fh.write(",".join([str(f + 1)] + [io.fmt(v) for v in rows[f]]) + "\n")
            fh.write(",".join(["overall"] + [io.fmt(v) for v in rows[-1]]) + "\n")
        with open(out / "selected.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump({"rho": sel.rho, "rank": sel.rank}, fh, indent=2, sort_keys=True)
            fh.write("\n")
    io.write_manifest(
        out,
        "cv",
        {
            "k": args.k,
            "rho_grid": rho_grid,
            "rank_grid": rank_grid,
            "estimator": args.estimator,
            "strata_column": args.strata_column,
            **_config_snapshot(config),
        },
        inputs=[args.data],
        seed=args.seed,
        duration=sw.seconds,
        extra={"argv": argv},
    )
    return EXIT_OK


def cmd_replicate(args, argv):
    shapes = [s.strip() for s in args.shape.split(",") if s.strip()]
    for s in shapes:
        if s not in simulate.SHAPE_NAMES:
            raise CliError(EXIT_USAGE, f"invalid --shape: unknown shape {s!r}")
    n_list = _parse_grid(args.n_list, "--n-list", int)
    estimators = [e.strip() for e in args.estimators.split(",") if e.strip()]
    for e in estimators:
        if e not in evaluate.ESTIMATORS:
            raise CliError(EXIT_USAGE, f"invalid --estimators: unknown {e!r}")
    if args.replications < 1:
        raise CliError(EXIT_USAGE, "invalid --replications: must be >= 1")
    config = _build_config(args)
    out = _outdir(args)

    fields = []
    for m in evaluate.METRIC_NAMES:
        fields += [f"{m}_mean", f"{m}_sd"]
    with io.Stopwatch() as sw:
        lines = ["shape,n,estimator," + ",".join(fields) + ",replications,failures"]
        for shape_name in shapes:
            for n in n_list:
                try:
                    spec = evaluate.ExperimentSpec(
                        sim=simulate.SimSpec(
                            shape=simulate.SignalShape(shape_name, args.p),
                            n=n,
                            sigma=args.sigma,
                            seed=args.seed,
                        ),
                        config=config,
                        estimators=tuple(estimators),
                        replications=args.replications,
                    )
                except ValueError as exc:
                    raise CliError(EXIT_USAGE, f"invalid replication spec: {exc}")
                rows = evaluate.replicate_experiment(spec)["summary"]
                for est in estimators:
                    row = rows[est]
                    cells = [shape_name, str(n), est]
                    cells += [io.fmt(row[f]) for f in fields]
                    cells += [str(row["replications"]), str(row["failures"])]
                    lines.append(",".join(cells))
        with open(out / "summary.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    io.write_manifest(
        out,
        "replicate",
        {
            "shape": shapes,
            "p": args.p,
            "n_list": n_list,
            "estimators": estimators,
            "replications": args.replications,
            "sigma": args.sigma,
            **_config_snapshot(config),
        },
        inputs=[],
        seed=args.seed,
        duration=sw.seconds,
        extra={"argv": argv},
    )
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="symreg",
        description="Sparse symmetric low-rank matrix regression toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="write a synthetic dataset directory")
    p_sim.add_argument("--shape", required=True)
    p_sim.add_argument("--p", type=int, required=True)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--p0", type=int, default=5)
    p_sim.add_argument("--sigma", type=float, default=1.0)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="fit one estimator on a dataset directory")
    p_fit.add_argument("data")
    p_fit.add_argument(
        "--estimator",
        choices=["cp", "sym_cp", "sym_tensor", "pipeline"],
        default="pipeline",
    )
    p_fit.add_argument("--rank", type=int, default=3)
    p_fit.add_argument("--rho", type=float, default=0.0)
    p_fit.add_argument("--log-response", action="store_true")
    _add_solver_flags(p_fit)
    p_fit.add_argument("--out", required=True)
    p_fit.set_defaults(func=cmd_fit)

    p_cv = sub.add_parser("cv", help="k-fold cross-validation over a rho/rank grid")
    p_cv.add_argument("data")
    p_cv.add_argument("--k", type=int, default=3)
    p_cv.add_argument("--rho-grid", required=True)
    p_cv.add_argument("--rank-grid", required=True)
    p_cv.add_argument(
        "--estimator", choices=list(evaluate.ESTIMATORS), default="sym_tensor"
    )
    p_cv.add_argument("--strata-column", default=None)
    p_cv.add_argument("--log-response", action="store_true")
    _add_solver_flags(p_cv)
    p_cv.add_argument("--out", required=True)
    p_cv.set_defaults(func=cmd_cv)

    p_rep = sub.add_parser("replicate", help="seeded multi-replication summary")
    p_rep.add_argument("--shape", required=True, help="comma-separated shape names")
    p_rep.add_argument("--p", type=int, default=32)
    p_rep.add_argument("--n-list", required=True)
    p_rep.add_argument("--replications", type=int, required=True)
    p_rep.add_argument("--estimators", default="cp,sym_cp,sym_tensor")
    p_rep.add_argument("--rank", type=int, default=3)
    p_rep.add_argument("--rho", type=float, default=0.0)
    p_rep.add_argument("--sigma", type=float, default=1.0)
    _add_solver_flags(p_rep)
    p_rep.add_argument("--out", required=True)
    p_rep.set_defaults(func=cmd_replicate)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except CliError as exc:
        print(f"symreg: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"symreg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
