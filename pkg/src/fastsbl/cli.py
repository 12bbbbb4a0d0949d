"""Command line entry point: ``fastsbl {generate,solve,verify,figure1,figure2,bench}``.

Exit status is 0 on success, 1 when an invariant is violated and 2 on bad
input or a numerical breakdown.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .datagen import SyntheticSpec, generate, load_problem, save_problem, write_table
from .errors import ConvergenceError, FastSBLError, IllConditionedError, InputError
from .harness import (
    FIGURE1_CASES,
    MONOTONE_TOL,
    bench,
    default_figure2_gammas,
    figure1_table,
    figure2_table,
    run_solver,
    verify_sections,
)
from .priors import ScaleFamilyPrior
from .quadrature import QuadratureSpec
from .solver import SolverConfig

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2

log = logging.getLogger("fastsbl")


def _global_options() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags appear before or after the subcommand
    parent = argparse.ArgumentParser(add_help=False)
    g = parent.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    g.add_argument("--kappa", type=float, default=argparse.SUPPRESS, help="admission threshold (default 1)")
    g.add_argument("--quad-rel-tol", type=float, default=argparse.SUPPRESS, help="quadrature relative tolerance")
    g.add_argument("--quad-max-subdiv", type=int, default=argparse.SUPPRESS, help="quadrature panel budget")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output file or directory")
    g.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return parent


def _prior_arg(text: str) -> ScaleFamilyPrior:
    try:
        config = json.loads(text)
    except json.JSONDecodeError:
        config = text
    try:
        return ScaleFamilyPrior.from_config(config)
    except (FastSBLError, KeyError, TypeError) as exc:
        raise argparse.ArgumentTypeError(f"bad prior {text!r}: {exc}") from None


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=100, help="rows of the dictionary")
    p.add_argument("--m", type=int, default=256, help="columns of the dictionary")
    p.add_argument("--k", type=int, default=10, help="planted sparsity")
    p.add_argument("--snr-db", type=float, default=30.0)
    p.add_argument("--noiseless", action="store_true", help="v = 0 (infinite SNR)")
    p.add_argument("--dictionary", choices=("gaussian_iid", "dct_overcomplete"), default="gaussian_iid")
    p.add_argument("--weight-prior", type=_prior_arg, default=ScaleFamilyPrior("gaussian"),
                   help='family name or JSON, e.g. \'{"family": "student_t", "dof": 5}\'')


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-sweeps", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-8, help="relative evidence change per sweep")
    p.add_argument("--sweep-order", choices=("cyclic", "largest_gain"), default="cyclic")


def build_parser() -> argparse.ArgumentParser:
    common = _global_options()
    parser = argparse.ArgumentParser(prog="fastsbl", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a planted synthetic problem")
    _add_spec_flags(p)

    p = sub.add_parser("solve", parents=[common], help="run fast SBL and write a run record")
    p.add_argument("--problem", type=Path, help="problem directory (otherwise one is generated)")
    _add_spec_flags(p)
    _add_solver_flags(p)

    p = sub.add_parser("verify", parents=[common], help="cross-check the pruning criteria")
    p.add_argument("--n-sections", type=int, default=1000)
    p.add_argument("--inject-boundary", type=int, default=0, help="extra sections with |mu| = sigma")
    p.add_argument("--oracle", choices=("numeric", "quadrature"), default="numeric",
                   help="section likelihood used by the argmax oracle (quadrature honours --quad-*)")

    p = sub.add_parser("figure1", parents=[common], help="f, tangent and remainders as CSV")
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma2", type=float, default=1.0)

    p = sub.add_parser("figure2", parents=[common], help="f, tangent and two priors as CSV")
    p.add_argument("--mu", type=float, default=1.5)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--gammas", type=float, nargs=2, metavar=("G1", "G2"))
    p.add_argument("--prior", type=_prior_arg, default=ScaleFamilyPrior("gaussian"))

    p = sub.add_parser("bench", parents=[common], help="planted-support recovery over many seeds")
    p.add_argument("--trials", type=int, default=100)
    _add_spec_flags(p)
    _add_solver_flags(p)
    return parser


def _opt(args, name, default):
    return getattr(args, name, default)


def _spec_from(args) -> SyntheticSpec:
    return SyntheticSpec(
        n=args.n, m=args.m, k=args.k,
        snr_db=math.inf if args.noiseless else args.snr_db,
        dictionary_kind=args.dictionary, weight_prior=args.weight_prior,
        seed=_opt(args, "seed", 0),
    )


def _config_from(args) -> SolverConfig:
    return SolverConfig(kappa=_opt(args, "kappa", 1.0), max_sweeps=args.max_sweeps,
                        evidence_rel_tol=args.tol, sweep_order=args.sweep_order,
                        seed=_opt(args, "seed", 0))


def _quad_spec(args) -> QuadratureSpec:
    spec = QuadratureSpec()
    if hasattr(args, "quad_rel_tol"):
        spec = replace(spec, rel_tol=args.quad_rel_tol)
    if hasattr(args, "quad_max_subdiv"):
        spec = replace(spec, max_subdivisions=args.quad_max_subdiv)
    return spec


def _write_json(path, payload) -> None:
    text = json.dumps(payload, indent=2, default=float) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="ascii")


def cmd_generate(args) -> int:
    problem, planted = generate(_spec_from(args))
    out = Path(_opt(args, "out", "problem"))
    save_problem(out, problem, planted)
    print(f"wrote {out}: N={problem.n_samples} M={problem.n_columns} support={planted.support}")
    return EXIT_OK


def cmd_solve(args) -> int:
    config = _config_from(args)
    if args.problem is not None:
        problem, meta = load_problem(args.problem)
        support = meta.get("planted_support")
        weights = meta.get("planted_weights")
        source = {"problem": str(args.problem)}
    else:
        spec = _spec_from(args)
        problem, planted = generate(spec)
        support, weights = planted.support, planted.weights
        source = {"spec": spec.to_config()}
    record = run_solver(problem, config, support, weights, meta=source)
    _write_json(_opt(args, "out", "run.json"), record.to_json())
    print(f"support: {record.recovered_support}")
    print(f"nmse: {record.nmse if record.nmse is not None else 'n/a'}")
    print(f"sweeps: {record.n_sweeps} ({'converged' if record.converged else 'not converged'})")
    if record.min_update_delta is not None and record.min_update_delta < -MONOTONE_TOL:
        log.error("log evidence decreased by %.3g during an update", -record.min_update_delta)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.n_sections < 0 or args.inject_boundary < 0:
        raise InputError("section counts must be non-negative")
    report = verify_sections(args.n_sections, seed=_opt(args, "seed", 0), inject_boundary=args.inject_boundary,
                             kappa=_opt(args, "kappa", 1.0), oracle=args.oracle, spec=_quad_spec(args))
    _write_json(_opt(args, "out", "verify.json"), report)
    n_bad = len(report["violations"])
    print(f"checked {report['checked']} sections, {len(report['boundary'])} in the boundary band, "
          f"{n_bad} violations")
    return EXIT_VIOLATION if n_bad else EXIT_OK


def cmd_figure1(args) -> int:
    out = Path(_opt(args, "out", "."))
    if args.mu is None:
        out.mkdir(parents=True, exist_ok=True)
        for name, (mu, s2) in FIGURE1_CASES.items():
            write_table(out / f"figure1_{name}.csv", figure1_table(mu, s2))
            print(f"wrote {out / f'figure1_{name}.csv'} (mu={mu}, sigma2={s2})")
    else:
        if out.is_dir():
            out = out / "figure1.csv"
        write_table(out, figure1_table(args.mu, args.sigma2))
        print(f"wrote {out}")
    return EXIT_OK


def cmd_figure2(args) -> int:
    gammas = tuple(args.gammas) if args.gammas else default_figure2_gammas(prior=args.prior)
    out = Path(_opt(args, "out", "figure2.csv"))
    if out.is_dir():
        out = out / "figure2.csv"
    write_table(out, figure2_table(args.mu, args.sigma2, gammas, prior=args.prior))
    print(f"wrote {out} (gamma1={gammas[0]:.6g}, gamma2={gammas[1]:.6g})")
    return EXIT_OK


def cmd_bench(args) -> int:
    result = bench(args.trials, _spec_from(args), _config_from(args))
    _write_json(_opt(args, "out", "bench.json"), result)
    print(f"exact recoveries: {result['exact_recoveries']}/{result['trials']}")
    print(f"min update delta: {result['min_update_delta']}")
    print(f"median nmse: {result['median_nmse']}")
    print(f"wall time: {result['wall_time']:.1f}s")
    return EXIT_OK if result["monotone"] else EXIT_VIOLATION


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "figure1": cmd_figure1,
    "figure2": cmd_figure2,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if _opt(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _quad_spec(args)
        return COMMANDS[args.command](args)
    except (IllConditionedError, ConvergenceError) as exc:
        print(f"fastsbl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, FastSBLError, ValueError, OSError) as exc:
        print(f"fastsbl: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
