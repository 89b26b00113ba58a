"""Command-line interface.

Coefficients follow the plus-sign convention phi(z) = 1 + phi_1 z + ... and
theta(z) = 1 + theta_1 z + ...; an MA(1) with theta = [-0.7] is
y_t = e_t - 0.7 e_{t-1}. Series are taken as zero-mean and never demeaned.

JSON arguments accept either inline JSON or a path to a JSON file.
"""
import argparse
import json
import logging
import os
import sys
from typing import List, Optional

import numpy as np

from arfima_misspec.config import settings
from arfima_misspec.exceptions import ArfimaError, ExperimentFailure
from arfima_misspec.models.arfima import ArfimaSpec, EstimatorKind, FamilySpec, MisSpecPair, SimulationPlan
from arfima_misspec.models.results import ExperimentConfig
from arfima_misspec.services.arfima_model import validate_spec
from arfima_misspec.services.asymptotics import build_limit_law, limit_law_draws
from arfima_misspec.services.estimators import estimate
from arfima_misspec.services.experiment import emit_report, run_monte_carlo
from arfima_misspec.services.pseudo_true import example_pair, q_contour_grid, solve_pseudo_true
from arfima_misspec.services.simulate import simulate_all
from arfima_misspec.services.storage_service import load_csv, save_csv, save_json

logger = logging.getLogger(__name__)

EXIT_ERROR = 1
EXIT_FAILURE_THRESHOLD = 3


def _read_json(value: str) -> dict:
    if os.path.isfile(value):
        with open(value, encoding="utf-8") as handle:
            return json.load(handle)
    return json.loads(value)


def _add_pair_arguments(parser: argparse.ArgumentParser, tdgp_flag: str = "--tdgp") -> None:
    parser.add_argument(tdgp_flag, help="True process as ArfimaSpec JSON")
    parser.add_argument("--pair", help="MisSpecPair JSON {tdgp, family}")
    parser.add_argument("--family", help="Fitted orders as p,q")
    parser.add_argument("--preset", choices=["example1", "example2"],
                        help="MA(1) true process fitted by ARFIMA(0,d,0) or ARFIMA(1,d,0)")
    parser.add_argument("--theta0", type=float, default=-0.7)
    parser.add_argument("--d0", type=float, default=0.2)


def _resolve_pair(args: argparse.Namespace) -> MisSpecPair:
    if args.preset:
        return example_pair(args.theta0, d0=args.d0, ar_order=1 if args.preset == "example2" else 0)
    if args.pair:
        return MisSpecPair.model_validate(_read_json(args.pair))
    if args.tdgp and args.family:
        return MisSpecPair(tdgp=ArfimaSpec.model_validate(_read_json(args.tdgp)), family=FamilySpec.parse(args.family))
    raise ValueError("Give --preset, --pair, or --tdgp together with --family")


def cmd_simulate(args: argparse.Namespace) -> None:
    spec = validate_spec(ArfimaSpec.model_validate(_read_json(args.spec)))
    plan = SimulationPlan(spec=spec, n=args.n, seed=args.seed, replications=args.reps)
    draws = simulate_all(plan)
    save_csv([f"r{r}" for r in range(args.reps)], draws.tolist(), args.out)


def cmd_estimate(args: argparse.Namespace) -> None:
    rows = load_csv(args.input)
    column = rows[0].index(args.column) if args.column else 0
    y = np.array([float(row[column]) for row in rows[1:]])
    result = estimate(EstimatorKind(args.method), FamilySpec.parse(args.family), y, n_starts=args.starts)
    save_json(result, args.out)


def cmd_pseudo_true(args: argparse.Namespace) -> None:
    solution = solve_pseudo_true(_resolve_pair(args), tol=args.tol)
    if args.out:
        save_json(solution, args.out)
    else:
        print(solution.model_dump_json(indent=2))


def cmd_contour(args: argparse.Namespace) -> None:
    pair = _resolve_pair(args)
    d_grid = np.linspace(args.d_min, args.d_max, args.d_points)
    beta_grid = np.linspace(args.beta_min, args.beta_max, args.beta_points) if pair.family.l else np.zeros(1)
    values = q_contour_grid(pair, d_grid, beta_grid)
    rows = [[float(d)] + row.tolist() for d, row in zip(d_grid, values)]
    save_csv(["d\\beta"] + [repr(float(b)) for b in beta_grid], rows, args.out)


def cmd_asymptotic_dist(args: argparse.Namespace) -> None:
    pair = _resolve_pair(args)
    solution = solve_pseudo_true(pair)
    law = build_limit_law(
        pair, solution.eta1, args.n, EstimatorKind(args.method),
        S_n=args.s_n, w_const_variant=args.w_const,
    )
    draws = limit_law_draws(law, args.samples, args.seed)
    os.makedirs(args.out, exist_ok=True)
    save_csv(["draw"], [[float(x)] for x in draws], os.path.join(args.out, "limit_draws.csv"))
    save_json(law, os.path.join(args.out, "limit_law.json"))
    logger.info(f"Case {law.case} law at n={args.n}, rate {law.rate(args.n):.6g}")


def cmd_monte_carlo(args: argparse.Namespace) -> None:
    if args.config:
        cfg = ExperimentConfig.model_validate(_read_json(args.config))
    else:
        cfg = ExperimentConfig(
            pair=_resolve_pair(args),
            n_list=args.n_list,
            replications=args.reps,
            seed=args.seed,
            w_const_variant=args.w_const,
        )
    out_dir = args.out or cfg.outputs
    report = run_monte_carlo(cfg)
    emit_report(report, out_dir)


def cmd_serve(args: argparse.Namespace) -> None:
    import uvicorn
    uvicorn.run("arfima_misspec.main:app", host=args.host, port=args.port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arfima-misspec", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Exact Gaussian draws, one CSV column per replication")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser(
        "estimate",
        help="Fit a family to a series",
        description="Fit a family to a series. sigma2_hat is the innovation variance estimate: "
        "the mean squared residual Q_n for CSS and 2 Q_n for FML, so both tend to the one-step "
        "prediction error variance of the pseudo-true model.",
    )
    p.add_argument("--method", choices=[k.value for k in EstimatorKind], required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--column", help="CSV column to read (default: first)")
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_estimate)

    p = sub.add_parser("pseudo-true", help="Solve for the pseudo-true parameter")
    _add_pair_arguments(p)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_pseudo_true)

    p = sub.add_parser("contour", help="Limiting objective over a (d, beta_1) grid")
    _add_pair_arguments(p)
    p.add_argument("--d-min", type=float, default=-0.45)
    p.add_argument("--d-max", type=float, default=0.45)
    p.add_argument("--d-points", type=int, default=91)
    p.add_argument("--beta-min", type=float, default=-0.9)
    p.add_argument("--beta-max", type=float, default=0.9)
    p.add_argument("--beta-points", type=int, default=91)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_contour)

    p = sub.add_parser("asymptotic-dist", help="Limit-law draws and metadata")
    _add_pair_arguments(p)
    p.add_argument("--method", choices=[k.value for k in EstimatorKind], default="fml")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--s-n", type=float, default=None, help="Monte Carlo variance used to choose s")
    p.add_argument("--w-const", choices=["sum_of_squares", "zero_frequency"], default="zero_frequency")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_asymptotic_dist)

    p = sub.add_parser("monte-carlo", help="Run the Monte Carlo design and write tables")
    p.add_argument("--config", help="ExperimentConfig JSON")
    _add_pair_arguments(p)
    p.add_argument("--n-list", type=int, nargs="+", default=[100, 500])
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--w-const", choices=["sum_of_squares", "zero_frequency"], default="sum_of_squares")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_monte_carlo)

    p = sub.add_parser("serve", help="Run the HTTP API")
    p.add_argument("--host", default="0.0.0.0")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        args.handler(args)
    except ExperimentFailure as e:
        logger.error(f"Experiment aborted: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE_THRESHOLD
    except (ArfimaError, ValueError, OSError) as e:
        logger.error(f"Error running {args.command}: {str(e)}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    return 0
