"""Command-line interface: ``python -m kmeq {generate,solve,bench,bounds,surfaces}``.

Exit status is 0 on success, 2 on usage and configuration errors, 1 on I/O and
library errors; errors are reported as one ``kmeq: error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

from . import harness, report
from .basesolvers import SolveConfig
from .bspline import surface_samples
from .enums import Method, Surface
from .exceptions import ConfigError, KmeqError, ParameterError
from .problems import ProblemInstance, load_instance, save_instance
from .solvers import make_solver
from .utils.csvio import rows_to_csv, write_trace
from .utils.junkdrawer import PURPOSE_SAMPLING, derive_seed, env_flag

logger = logging.getLogger(__name__)

_handler: Optional[logging.Handler] = None


def configure_logging() -> None:
    """One stderr handler on the ``kmeq`` logger, at DEBUG when
    ``KMEQ_DEBUG_LOGS`` is set and INFO otherwise."""
    global _handler
    package_logger = logging.getLogger("kmeq")
    if _handler is not None:
        package_logger.removeHandler(_handler)
    _handler = logging.StreamHandler(sys.stderr)
    _handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    package_logger.addHandler(_handler)
    package_logger.setLevel(
        logging.DEBUG if env_flag("KMEQ_DEBUG_LOGS") else logging.INFO
    )


def _add_instance_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("problem instance")
    group.add_argument("--family", help="gaussian, smatrix or bspline")
    for dim in ("m", "n", "p", "q"):
        group.add_argument(f"--{dim}", type=int)
    group.add_argument("--case", help="Smatrix case, I to IV")
    group.add_argument("--surface", help="test surface of the bspline family, 1 or 2")
    group.add_argument("--rhs", choices=["data", "projected"])
    group.add_argument("--parameterization", choices=["axis", "mean_chord"])


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("stopping rule")
    group.add_argument("--rse-tol", type=float)
    group.add_argument("--max-iters", type=int)
    group.add_argument("--trace-stride", type=int)


def _add_method_args(parser: argparse.ArgumentParser, repeated: bool) -> None:
    group = parser.add_argument_group("methods")
    if repeated:
        group.add_argument(
            "--method",
            action="append",
            help="method, e.g. 'ARBK(50,50)', 'cme-rk'; may be repeated",
        )
    else:
        group.add_argument("--method", help="arbk, grbk, cme-rk or gradient")
    group.add_argument("--tau-a", type=int, help="row block size of bare block methods")
    group.add_argument("--tau-b", type=int, help="column block size")
    group.add_argument("--update", choices=["global", "alternating"], help="GRBK form")
    group.add_argument("--step-size", type=float, help="gradient step (default 1/L)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmeq", description="Kaczmarz-type solvers for AXB = F"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    generate = subparsers.add_parser("generate", help="write a problem instance")
    _add_instance_args(generate)
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--out", type=Path, required=True, help="output directory")
    generate.set_defaults(func=cmd_generate)

    solve = subparsers.add_parser("solve", help="run one method once")
    _add_instance_args(solve)
    solve.add_argument("--instance", type=Path, help="directory written by generate")
    _add_method_args(solve, repeated=False)
    _add_run_args(solve)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--trace", type=Path, help="write iteration,rse to this file")
    solve.set_defaults(func=cmd_solve)

    for (name, func, help_text) in (
        ("bench", cmd_bench, "repeated-trial comparison of methods"),
        ("bounds", cmd_bounds, "empirical ARBK error against its bound"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", type=Path, help="YAML or JSON configuration")
        _add_instance_args(sub)
        _add_method_args(sub, repeated=True)
        _add_run_args(sub)
        sub.add_argument("--trials", type=int)
        sub.add_argument("--seed", dest="base_seed", type=int, help="base seed")
        sub.add_argument("--out", dest="output_dir", type=Path)
        sub.add_argument("--workers", type=int)
        sub.add_argument("--fix-instance", action="store_true", default=None)
        if name == "bounds":
            sub.add_argument(
                "--checkpoints", help="comma-separated iteration indices k"
            )
        sub.set_defaults(func=func)

    surfaces = subparsers.add_parser("surfaces", help="export a sampled test surface")
    surfaces.add_argument("--surface", default="1")
    surfaces.add_argument("--m", type=int, required=True, help="samples along s")
    surfaces.add_argument("--q", type=int, required=True, help="samples along t")
    surfaces.add_argument("--out", type=Path, help="CSV file (default: stdout)")
    surfaces.set_defaults(func=cmd_surfaces)

    return parser


def _family_params(args: argparse.Namespace) -> Dict[str, Any]:
    names = ("m", "n", "p", "q", "case", "surface", "rhs", "parameterization")
    return {
        name: getattr(args, name)
        for name in names
        if getattr(args, name, None) is not None
    }


def _method_value(value: str, args: argparse.Namespace) -> Any:
    """``ARBK(50,50)`` as is; bare block method names take --tau-a and --tau-b."""
    if "(" in value:
        return value
    try:
        method = Method.from_name(value)
    except ValueError:
        raise ConfigError(f"unknown method {value!r}") from None
    if method.is_block:
        return {"name": value, "tau_a": args.tau_a, "tau_b": args.tau_b}
    return {"name": value}


def _method_entries(args: argparse.Namespace) -> List[Any]:
    methods = args.method if isinstance(args.method, list) else [args.method]
    entries: List[Any] = []
    for value in methods:
        if value is None:
            continue
        spec = harness.MethodSpec.parse(_method_value(value, args))
        options = dict(spec.options)
        if args.update is not None and spec.method is Method.GRBK:
            options["update"] = args.update
        if args.step_size is not None and spec.method is Method.GRADIENT:
            options["step_size"] = args.step_size
        entries.append(
            {
                "name": spec.method.value,
                "tau_a": spec.tau_a,
                "tau_b": spec.tau_b,
                **options,
            }
        )
    return entries


def _experiment_config(args: argparse.Namespace) -> harness.ExperimentConfig:
    overrides: Dict[str, Any] = {
        key: getattr(args, key, None)
        for key in (
            "trials",
            "rse_tol",
            "max_iters",
            "base_seed",
            "output_dir",
            "fix_instance",
            "workers",
            "trace_stride",
        )
    }
    if getattr(args, "checkpoints", None):
        try:
            overrides["checkpoints"] = [
                int(k) for k in args.checkpoints.split(",") if k.strip()
            ]
        except ValueError:
            raise ConfigError(f"invalid checkpoints {args.checkpoints!r}") from None
    methods = _method_entries(args)
    if methods:
        overrides["methods"] = methods
    if args.family is not None:
        overrides["family"] = args.family
        overrides["family_params"] = _family_params(args)
    if args.config is not None:
        return harness.load_experiment_config(args.config, **overrides)
    return harness.ExperimentConfig.from_mapping({}, **overrides)


def _generated_instance(args: argparse.Namespace) -> ProblemInstance:
    if args.family is None:
        raise ConfigError("either --family or --instance is required")
    config = harness.ExperimentConfig.from_mapping(
        {
            "family": args.family,
            "family_params": _family_params(args),
            "methods": [{"name": "cme_rk"}],
        }
    )
    return harness.generate_instance(config, args.seed)


def cmd_generate(args: argparse.Namespace) -> int:
    instance = _generated_instance(args)
    save_instance(instance, args.out)
    logger.info("wrote %s instance %s to %s", args.family, instance.shape, args.out)
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    if args.method is None:
        raise ConfigError("--method is required")
    if args.instance is not None:
        instance = load_instance(args.instance)
    else:
        instance = _generated_instance(args)
    (entry,) = _method_entries(args)
    spec = harness.MethodSpec.parse(entry)
    stopping = {
        key: getattr(args, key)
        for key in ("max_iters", "rse_tol", "trace_stride")
        if getattr(args, key) is not None
    }
    try:
        solve_config = SolveConfig(
            seed=derive_seed(args.seed, PURPOSE_SAMPLING, 0), **stopping
        )
    except ParameterError as e:
        raise ConfigError(str(e)) from None
    if spec.method.is_block:
        assert spec.tau_a is not None and spec.tau_b is not None
        (m, _, _, q) = instance.shape
        if not (1 <= spec.tau_a <= m and 1 <= spec.tau_b <= q):
            raise ConfigError(
                f"block sizes ({spec.tau_a}, {spec.tau_b}) must lie in "
                f"[1, {m}] x [1, {q}]"
            )
        (row_partition, col_partition) = harness.make_partitions(
            instance, spec.tau_a, spec.tau_b, args.seed
        )
        solver = make_solver(
            spec.method,
            instance,
            solve_config,
            row_partition,
            col_partition,
            **spec.options,
        )
    else:
        solver = make_solver(spec.method, instance, solve_config, **spec.options)
    solve_report = solver.solve()
    if args.trace is not None:
        write_trace(args.trace, solve_report.trace)
    print(solve_report.to_json(instance, spec.tau_a, spec.tau_b, args.seed))
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    summary = harness.run_experiment(config)
    print(report.render_text(summary.methods))
    return 0


def cmd_bounds(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    overlay = harness.compare_with_bounds(config)
    print(rows_to_csv(("k", "empirical", "bound"), overlay.rows()), end="")
    return 0


def cmd_surfaces(args: argparse.Namespace) -> int:
    try:
        surface = Surface.from_name(args.surface)
    except ValueError:
        raise ConfigError(f"unknown surface {args.surface!r}") from None
    sample = surface_samples(surface, args.m, args.q)
    text = rows_to_csv(("s", "t", "x", "y", "z"), sample.rows())
    if args.out is None:
        print(text, end="")
    else:
        args.out.write_text(text, encoding="utf-8")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    configure_logging()
    func: Callable[[argparse.Namespace], int] = args.func
    try:
        return func(args)
    except ConfigError as e:
        print(f"kmeq: error: {e}", file=sys.stderr)
        return 2
    except (OSError, KmeqError) as e:
        print(f"kmeq: error: {e}", file=sys.stderr)
        return 1
