"""Command line interface.

    apetrack run --config scenario.json --filter ape --out results.csv
    apetrack sweep-beta --config scenario.json --out sweep.csv
    apetrack scenario emit-paper --out scenario.json

`run` benchmarks one filter over Monte Carlo repetitions, writing the
per-run CSV, the aggregate series next to it and the standard figures
(disable with --no-figures).  `sweep-beta` repeats an adaptive-filter run
across changepoint priors.  `scenario emit-paper` writes the built-in
maneuvering-target benchmark as a config file to edit or rerun.

Exit codes: 0 on success, 2 for configuration problems, 3 when every
single run of a benchmark collapsed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .bench import IMM_KINDS, SMC_KINDS, UNKNOWN_SETS, RunSpec, beta_sweep, run_monte_carlo
from .core import ConfigError
from .report import beta_sweep_figure, render_run_report
from .scenario import benchmark_scenario, load_scenario, save_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COLLAPSED = 3

log = logging.getLogger(__name__)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--particles", type=int, default=1000, help="particles per filter")
    p.add_argument("--runs", type=int, default=25, help="Monte Carlo repetitions")
    p.add_argument("--seed", type=int, default=0, help="base seed for all streams")
    p.add_argument("--h2", type=float, default=0.01, help="squared kernel bandwidth")
    p.add_argument("--out", required=True, type=Path, help="output CSV path")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apetrack", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="benchmark one filter on a scenario")
    _add_common(run_p)
    run_p.add_argument("--filter", required=True, choices=SMC_KINDS + IMM_KINDS,
                       help="filter kind to benchmark")
    run_p.add_argument("--beta", type=float, default=0.05,
                       help="per-step changepoint prior probability")
    run_p.add_argument("--unknowns", choices=UNKNOWN_SETS, default="omega",
                       help="parameters the adaptive filter treats as unknown")
    run_p.add_argument("--reference", choices=SMC_KINDS + IMM_KINDS, default=None,
                       help="also run this filter and report relative RMS error")
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep-beta", help="rerun the adaptive filter across priors")
    _add_common(sweep_p)
    sweep_p.add_argument("--betas", default="0.001,0.01,0.025,0.05,0.1",
                         help="comma-separated changepoint priors")
    sweep_p.add_argument("--unknowns", choices=UNKNOWN_SETS, default="omega",
                         help="parameters the adaptive filter treats as unknown")
    sweep_p.set_defaults(func=_cmd_sweep)

    scen_p = sub.add_parser("scenario", help="scenario file helpers")
    scen_sub = scen_p.add_subparsers(dest="scenario_command", required=True)
    emit_p = scen_sub.add_parser("emit-paper", help="write the built-in benchmark scenario")
    emit_p.add_argument("--out", required=True, type=Path, help="output JSON path")
    emit_p.set_defaults(func=_cmd_emit)

    return parser


def _cmd_run(args) -> int:
    scenario = load_scenario(args.config)
    spec = RunSpec(
        scenario=scenario,
        kind=args.filter,
        n_particles=args.particles,
        n_runs=args.runs,
        seed=args.seed,
        beta=args.beta,
        h2=args.h2,
        unknowns=args.unknowns,
    )
    reference = None
    if args.reference is not None:
        reference = run_monte_carlo(replace(spec, kind=args.reference))
    result = run_monte_carlo(spec, out=args.out, reference=reference)
    print(f"{spec.kind}: average position RMS error "
          f"{result.metrics.avg_rmse_pos:.2f} m over {spec.n_runs} runs "
          f"({result.collapse_rate:.0%} collapsed)")
    if not args.no_figures:
        for path in render_run_report(result, args.out.parent, stem=args.out.stem):
            log.info("wrote %s", path)
    return EXIT_COLLAPSED if result.all_collapsed() else EXIT_OK


def _cmd_sweep(args) -> int:
    scenario = load_scenario(args.config)
    try:
        betas = [float(b) for b in str(args.betas).split(",") if b.strip()]
    except ValueError:
        raise ConfigError(f"could not parse --betas {args.betas!r}") from None
    base = RunSpec(
        scenario=scenario,
        kind="ape",
        n_particles=args.particles,
        n_runs=args.runs,
        seed=args.seed,
        h2=args.h2,
        unknowns=args.unknowns,
    )
    results = beta_sweep(base, betas, out=args.out)
    for beta in sorted(results):
        m = results[beta].metrics
        print(f"beta={beta:g}: turn-rate RMS {m.avg_rmse_omega:.5f} rad/s, "
              f"position RMS {m.avg_rmse_pos:.2f} m")
    if not args.no_figures:
        path = args.out.with_name(args.out.stem + "-beta-sweep.png")
        beta_sweep_figure(results, path, scenario.changepoints())
        log.info("wrote %s", path)
    if all(r.all_collapsed() for r in results.values()):
        return EXIT_COLLAPSED
    return EXIT_OK


def _cmd_emit(args) -> int:
    save_scenario(benchmark_scenario(), args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
