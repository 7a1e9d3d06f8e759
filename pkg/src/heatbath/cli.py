"""``heatbath`` command-line front end.

Exit codes: 0 success, 1 validation failure, 2 numerical failure, 64 usage.
"""
import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .experiments import (
    DEFAULT_G,
    SolverOptions,
    convergence_study,
    oracle_check,
    run_equilibration,
    run_scenario,
    sign_changes,
    variant_key,
)
from .integrator import IntegrationError, Method
from .model import Coupling, Dissipator
from .presets import FIGURES, Output, figure
from .runconfig import ConfigError, RunConfig, ScenarioSpec, load_config, output_name, write_trajectory_csv

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2, 64
ORACLE_TOLERANCE = 1e-8

log = logging.getLogger("heatbath")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common(p, n_max_default=None):
    p.add_argument("--out", type=Path, default=Path("."), help="output directory (default: cwd)")
    p.add_argument("--n-max", type=int, default=n_max_default, help="oscillator truncation")
    p.add_argument("--dh-full-rate", action="store_true", help="run DH at the full rate kappa")
    p.add_argument("--method", choices=[m.value for m in Method], default=None)
    p.add_argument("--rtol", type=float, default=None)
    p.add_argument("--atol", type=float, default=None)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heatbath", description="Qubit + damped oscillator master-equation runs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("evolve", help="run one scenario from a JSON config")
    p.add_argument("--config", type=Path, required=True)
    _common(p)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("equilibrate", help="relaxation of the uncoupled mode, with the exponential law")
    _common(p)
    p.add_argument("--kappa", type=float, default=0.1)
    p.add_argument("--nbar0", type=float, default=3.0)
    p.add_argument("--nbar-eq", type=float, default=1.0)
    p.add_argument("--kt-max", type=float, default=6.0)
    p.add_argument("--n-samples", type=int, default=241)

    p = sub.add_parser("figure", help="run a hard-coded reproduction preset")
    p.add_argument("number", type=int, choices=FIGURES)
    _common(p)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("sweep", help="QO/CL vs DH divergence along kappa/g")
    _common(p)
    p.add_argument("--coupling", choices=[c.value for c in Coupling], default=Coupling.JC.value)
    p.add_argument("--observable", choices=("pop_excited", "coherence"), default="pop_excited")
    p.add_argument("--reference", choices=(Dissipator.QO.value, Dissipator.CL.value), default=Dissipator.QO.value)
    p.add_argument("--kappa-over-g", type=_floats, default=(1.0, 2.0, 10.0, 40.0))
    p.add_argument("--g", type=float, default=DEFAULT_G)
    p.add_argument("--delta-over-g", type=float, default=0.1)
    p.add_argument("--nbar", type=float, default=1.0)
    p.add_argument("--gt-max", type=float, default=30.0)
    p.add_argument("--n-samples", type=int, default=301)
    p.add_argument("--fit-rate", action="store_true", help="also fit the best DH rate ratio at the largest kappa/g")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("oracle-check", help="adaptive solver vs exact propagation at small n_max")
    _common(p, n_max_default=3)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _solver(args, base: SolverOptions = SolverOptions()) -> SolverOptions:
    changes = {}
    if args.method is not None:
        changes["method"] = Method(args.method)
    for key in ("rtol", "atol"):
        value = getattr(args, key)
        if value is not None:
            if value <= 0:
                raise ConfigError(f"--{key}: must be > 0, got {value!r}")
            changes[key] = value
    return dataclasses.replace(base, **changes)


def _check_n_max(args):
    if args.n_max is not None and args.n_max < 1:
        raise ConfigError(f"--n-max: must be >= 1, got {args.n_max}")


def _write(outputs: List[Output], out: Path):
    out.mkdir(parents=True, exist_ok=True)
    for o in outputs:
        path = write_trajectory_csv(o.run, out / f"{o.name}.csv", o.config, o.extra, o.meta)
        print(f"wrote {path}")


def _cmd_evolve(args):
    config = load_config(args.config)
    model = config.model
    if args.n_max is not None:
        model = model.with_(n_max=args.n_max)
    if args.dh_full_rate:
        model = model.with_(dh_half_rate=False)
    config = RunConfig(model, config.scenario, _solver(args, config.integrator))
    runs = run_scenario(config.to_scenario(), config.integrator, workers=args.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    pairs = config.scenario.comparison or ((model.dissipator.value, None),)
    for d, scale in pairs:
        key = variant_key(d, scale)
        run = runs[key]
        variant = RunConfig(run.cfg, dataclasses.replace(config.scenario, comparison=()), config.integrator)
        path = write_trajectory_csv(run, args.out / output_name(config, d, scale), variant, meta={"variant": key})
        print(f"wrote {path}  steps={run.n_steps} trace_drift={run.trace_drift:.2e}")
    return EXIT_OK


def _cmd_equilibrate(args):
    solver = _solver(args)
    kw = {} if args.n_max is None else {"n_max": args.n_max}
    # energy relaxation is compared at equal rates, so DH always runs at the full rate here
    res = run_equilibration(args.kappa, args.nbar0, args.nbar_eq, kt_max=args.kt_max, n_samples=args.n_samples,
                            solver=solver, **kw)
    outputs = []
    for key, run in res.runs.items():
        t = run.table.t
        scenario = ScenarioSpec(name=f"equilibrate_{key}", initial_qubit="ground", t_max=float(t[-1]),
                                n_samples=len(t), initial_nbar=args.nbar0)
        meta = {"fitted_rate": res.fitted_rate[key], "max_residual": res.max_residual(key),
                "residual_sign_changes": sign_changes(res.residual(key))}
        outputs.append(Output(scenario.name, run, RunConfig(run.cfg, scenario, solver),
                              {"n_theo": res.theory, "residual": res.residual(key)}, meta))
        print(f"{key}: max |n - n_theo| = {meta['max_residual']:.3e}, fitted rate = {meta['fitted_rate']:.5f}")
    _write(outputs, args.out)
    return EXIT_OK


def _cmd_figure(args):
    outputs = figure(args.number, n_max=args.n_max, dh_full_rate=args.dh_full_rate, solver=_solver(args),
                     workers=args.workers)
    _write(outputs, args.out)
    return EXIT_OK


def _cmd_sweep(args):
    dh_rate = 1.0 if args.dh_full_rate else 0.5
    if any(k <= 0 for k in args.kappa_over_g):
        raise ConfigError("--kappa-over-g: values must be > 0")
    study = convergence_study(Coupling(args.coupling), args.observable, args.kappa_over_g, g=args.g,
                              delta_over_g=args.delta_over_g, nbar=args.nbar, reference=Dissipator(args.reference),
                              dh_rate=dh_rate, gt_max=args.gt_max, n_samples=args.n_samples, n_max=args.n_max,
                              fit_rate=args.fit_rate, solver=_solver(args), workers=args.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"sweep_{args.coupling}_{args.observable}.csv"
    lines = [f"# {k}={v}" for k, v in (
        ("coupling", args.coupling), ("observable", args.observable), ("reference", args.reference),
        ("g", repr(args.g)), ("delta_over_g", repr(args.delta_over_g)), ("nbar", repr(args.nbar)),
        ("dh_rate", repr(dh_rate)), ("gt_max", repr(args.gt_max)), ("n_samples", args.n_samples),
        ("r_star", repr(study.r_star)),
    )]
    lines.append("kappa_over_g,sup_norm")
    lines += [f"{kg:.17g},{s:.17g}" for kg, s in study.table()]
    path.write_text("\n".join(lines) + "\n")
    for kg, s in study.table():
        print(f"kappa/g={kg:g}  sup_norm={s:.6e}")
    print(f"monotone decreasing: {study.monotone_decreasing}")
    if study.r_star is not None:
        print(f"best-fit DH rate ratio r* = {study.r_star:.4f}")
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_oracle(args):
    n_max = 3 if args.n_max is None else args.n_max
    cases = oracle_check(n_max=n_max, seed=args.seed, solver=_solver(args))
    worst = 0.0
    for c in cases:
        print(f"{c.coupling.value:9s} {c.dissipator.value:3s} {c.initial:10s} max deviation {c.max_deviation:.3e}")
        worst = max(worst, c.max_deviation)
    ok = worst <= ORACLE_TOLERANCE
    print(f"max deviation {worst:.3e} ({'ok' if ok else 'FAILED'}, tolerance {ORACLE_TOLERANCE:g})")
    return EXIT_OK if ok else EXIT_NUMERICAL


COMMANDS = {
    "evolve": _cmd_evolve,
    "equilibrate": _cmd_equilibrate,
    "figure": _cmd_figure,
    "sweep": _cmd_sweep,
    "oracle-check": _cmd_oracle,
}


def cli_main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        _check_n_max(args)
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        # ConfigError and ModelConfigError are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (IntegrationError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main():
    sys.exit(cli_main())
