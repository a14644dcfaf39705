"""Repeated-trial experiments: configuration, orchestration, aggregation and the
files written into the output directory.

Layout of an output directory::

    summary.csv          one row per method
    table.txt            summary rendered like a results table
    runs/NNN-label.json  one record per (trial, method)
    traces/NNN-label.csv iteration,rse per (trial, method)
    partitions/NNN-tauA-tauB-rows.txt, partitions/NNN-tauA-tauB-cols.txt
                         one block per line, 1-based indices, per (trial, block sizes)
    bounds.csv           k,empirical,bound (compare_with_bounds only)
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import json
import logging
from pathlib import Path
import re
import statistics
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import yaml

from . import report
from .basesolvers import SolveConfig, SolveReport, TracePoint
from .bounds import bound_curve, convergence_factors, write_bound_csv
from .enums import Family, Method, Termination
from .exceptions import (
    ConfigError,
    DomainError,
    KmeqError,
    NumericalFailure,
    PavingInconsistency,
    SvdSizeGuardError,
)
from .partition import (
    Partition,
    blocks_for_size,
    column_random_partition,
    row_random_partition,
)
from .problems import (
    SMATRIX_CASES,
    ProblemInstance,
    SmatrixParams,
    build_fitting_problem,
    gen_gaussian,
    gen_smatrix_instance,
)
from .solvers import make_solver
from .utils.csvio import rows_to_csv, write_trace
from .utils.filelock import output_lock
from .utils.junkdrawer import (
    PURPOSE_INSTANCE,
    PURPOSE_PARTITION,
    PURPOSE_SAMPLING,
    atomic_write_text,
    default_output_dir,
    derive_seed,
    method_label,
)

logger = logging.getLogger(__name__)

SUMMARY_HEADER = (
    "method",
    "tau_a",
    "tau_b",
    "trials",
    "mean_rse",
    "median_it",
    "mean_it",
    "mean_cpu_s",
    "failures",
)

SVD_SIZE_GUARD = 2000

DEFAULT_CHECKPOINTS = tuple(range(0, 51, 5))

_METHOD_RE = re.compile(
    r"^\s*(?P<name>[A-Za-z_-]+)\s*(\(\s*(?P<tau_a>\d+)\s*,\s*(?P<tau_b>\d+)\s*\))?\s*$"
)


@dataclasses.dataclass(frozen=True)
class MethodSpec:
    method: Method
    tau_a: Optional[int] = None
    """row block size, block methods only"""
    tau_b: Optional[int] = None
    """column block size, block methods only"""
    options: Mapping[str, Any] = dataclasses.field(default_factory=dict)
    """extra solver keyword arguments (``update`` for GRBK, ``step_size`` for the
    gradient method)"""

    @property
    def label(self) -> str:
        return method_label(self.method.display_name, self.tau_a, self.tau_b)

    @property
    def slug(self) -> str:
        return re.sub(r"[^a-z0-9]+", "-", self.label.lower()).strip("-")

    @classmethod
    def parse(cls, value: Any) -> MethodSpec:
        """From ``"ARBK(50, 50)"``, ``"cme-rk"`` or a mapping
        ``{name, tau_a, tau_b, ...options}``."""
        if isinstance(value, MethodSpec):
            return value
        if isinstance(value, str):
            m = _METHOD_RE.match(value)
            if not m:
                raise ConfigError(f"cannot parse method {value!r}")
            value = {
                "name": m.group("name"),
                "tau_a": m.group("tau_a") and int(m.group("tau_a")),
                "tau_b": m.group("tau_b") and int(m.group("tau_b")),
            }
        if not isinstance(value, Mapping) or "name" not in value:
            raise ConfigError(f"invalid method entry {value!r}")
        options = dict(value)
        name = options.pop("name")
        tau_a = options.pop("tau_a", None)
        tau_b = options.pop("tau_b", None)
        try:
            method = Method.from_name(str(name))
        except ValueError:
            raise ConfigError(f"unknown method {name!r}") from None
        if method.is_block:
            if tau_a is None or tau_b is None:
                raise ConfigError(f"{method.display_name} needs tau_a and tau_b")
            (tau_a, tau_b) = (int(tau_a), int(tau_b))
        elif tau_a is not None or tau_b is not None:
            raise ConfigError(f"{method.display_name} does not take block sizes")
        return cls(method=method, tau_a=tau_a, tau_b=tau_b, options=options)


@dataclasses.dataclass
class ExperimentConfig:
    """A repeated-trial comparison of methods on one problem family."""

    family: Family
    family_params: Dict[str, Any]
    """gaussian: m, n, p, q; smatrix: case (I-IV) or a/b mappings of
    rows, cols, rank, sigma1, sigma2; bspline: surface, m, n, and optionally p, q,
    parameterization, rhs"""

    methods: List[MethodSpec]

    trials: int = 20
    rse_tol: float = 5e-2
    max_iters: int = 100000
    base_seed: int = 0

    output_dir: Path = dataclasses.field(default_factory=default_output_dir)

    fix_instance: bool = False
    """Use the instance of trial 0 in every trial of a random family."""

    workers: int = 1
    """Parallel trial workers (processes)."""

    trace_stride: int = 1

    checkpoints: Tuple[int, ...] = DEFAULT_CHECKPOINTS
    """Iteration indices k of the bound overlay."""

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if not self.rse_tol > 0 or self.max_iters < 1 or self.trace_stride < 1:
            raise ConfigError(
                f"invalid stopping rule: rse_tol={self.rse_tol}, "
                f"max_iters={self.max_iters}, trace_stride={self.trace_stride}"
            )
        if any(k < 0 for k in self.checkpoints):
            raise ConfigError(f"negative checkpoint in {self.checkpoints}")
        self.output_dir = Path(self.output_dir)
        (m, _, _, q) = self.dimensions()
        for spec in self.methods:
            if not spec.method.is_block:
                continue
            assert spec.tau_a is not None and spec.tau_b is not None
            for (tau, dimension, what) in ((spec.tau_a, m, "m"), (spec.tau_b, q, "q")):
                if not 1 <= tau <= dimension:
                    raise ConfigError(
                        f"{spec.label}: block size {tau} is not in "
                        f"[1, {what}={dimension}]"
                    )

    def dimensions(self) -> Tuple[int, int, int, int]:
        """(m, n, p, q) of the instances this configuration generates."""
        params = self.family_params
        try:
            if self.family is Family.GAUSSIAN:
                return (
                    int(params["m"]),
                    int(params["n"]),
                    int(params["p"]),
                    int(params["q"]),
                )
            elif self.family is Family.SMATRIX:
                (a, b) = smatrix_params(params)
                return (a.rows, a.cols, b.rows, b.cols)
            elif self.family is Family.BSPLINE:
                m = int(params["m"])
                n = int(params["n"])
                return (m, n, int(params.get("p", n)), int(params.get("q", m)))
            else:
                assert False, self.family
        except KeyError as e:
            raise ConfigError(f"{self.family.value} needs parameter {e}") from None

    def solve_config(self, seed: Any) -> SolveConfig:
        return SolveConfig(
            max_iters=self.max_iters,
            rse_tol=self.rse_tol,
            seed=seed,
            trace_stride=self.trace_stride,
        )

    @classmethod
    def from_mapping(
        cls, document: Mapping[str, Any], **overrides: Any
    ) -> ExperimentConfig:
        """Validates a parsed configuration document; ``overrides`` that are not
        ``None`` replace document fields."""
        fields = {field.name for field in dataclasses.fields(cls)}
        values = dict(document)
        values.update({k: v for (k, v) in overrides.items() if v is not None})
        unknown = set(values) - fields
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        try:
            values["family"] = Family.from_name(str(values["family"]))
        except KeyError:
            raise ConfigError("configuration needs a family") from None
        except ValueError:
            raise ConfigError(f"unknown family {values['family']!r}") from None
        values["family_params"] = dict(values.get("family_params") or {})
        values["methods"] = [MethodSpec.parse(m) for m in values.get("methods") or []]
        if "checkpoints" in values:
            values["checkpoints"] = tuple(int(k) for k in values["checkpoints"])
        for key in ("trials", "max_iters", "base_seed", "workers", "trace_stride"):
            if key in values:
                values[key] = _as_int(key, values[key])
        if "rse_tol" in values:
            values["rse_tol"] = float(values["rse_tol"])
        return cls(**values)


def _as_int(key: str, value: Any) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    return int(value)


def load_experiment_config(path: Path, **overrides: Any) -> ExperimentConfig:
    """Reads a YAML (or JSON) configuration document."""
    try:
        document = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: {e}") from None
    if not isinstance(document, Mapping):
        raise ConfigError(f"{path}: expected a key-value document")
    return ExperimentConfig.from_mapping(document, **overrides)


def smatrix_params(params: Mapping[str, Any]) -> Tuple[SmatrixParams, SmatrixParams]:
    if "case" in params:
        case = str(params["case"]).upper()
        if case not in SMATRIX_CASES:
            raise ConfigError(f"unknown Smatrix case {params['case']!r}")
        return SMATRIX_CASES[case]
    return (SmatrixParams(**params["a"]), SmatrixParams(**params["b"]))


def generate_instance(config: ExperimentConfig, trial_seed: int) -> ProblemInstance:
    params = config.family_params
    seed = derive_seed(trial_seed, PURPOSE_INSTANCE)
    (m, n, p, q) = config.dimensions()
    if config.family is Family.GAUSSIAN:
        instance = gen_gaussian(m, n, p, q, seed)
    elif config.family is Family.SMATRIX:
        instance = gen_smatrix_instance(smatrix_params(params), seed)
    elif config.family is Family.BSPLINE:
        return build_fitting_problem(
            params.get("surface", "surface1"),
            m,
            q,
            n,
            p,
            parameterization=params.get("parameterization", "axis"),
            rhs=params.get("rhs", "data"),
        )
    else:
        assert False, config.family
    return dataclasses.replace(
        instance,
        provenance=dataclasses.replace(instance.provenance, seed=trial_seed),
    )


def make_partitions(
    instance: ProblemInstance, tau_a: int, tau_b: int, trial_seed: int
) -> Tuple[Partition, Partition]:
    """Random row/column partitions with blocks of about tau_a rows and tau_b columns,
    shared by every method using the same block sizes in a trial."""
    (m, _, _, q) = instance.shape
    return (
        row_random_partition(
            m,
            blocks_for_size(m, tau_a),
            derive_seed(trial_seed, PURPOSE_PARTITION, tau_a, tau_b, 0),
        ),
        column_random_partition(
            q,
            blocks_for_size(q, tau_b),
            derive_seed(trial_seed, PURPOSE_PARTITION, tau_a, tau_b, 1),
        ),
    )


@dataclasses.dataclass
class RunRecord:
    method: str
    """display name, e.g. ``ARBK``"""
    label: str
    """method with block sizes, e.g. ``ARBK(50, 50)``"""
    tau_a: Optional[int]
    tau_b: Optional[int]
    trial: int
    seed: int
    m: int
    n: int
    p: int
    q: int
    iterations: int
    rse: float
    elapsed_seconds: float
    termination: str
    setup_seconds: float = 0.0
    error_kind: str = "relative"
    failure_reason: Optional[str] = None
    """Set when the solver raised; the run then counts as a failure."""

    @property
    def converged(self) -> bool:
        return self.termination == Termination.TOLERANCE_REACHED.value

    @property
    def completed(self) -> bool:
        return self.failure_reason is None

    @classmethod
    def from_report(
        cls,
        spec: MethodSpec,
        instance: ProblemInstance,
        trial: int,
        seed: int,
        solve_report: SolveReport,
    ) -> RunRecord:
        record = solve_report.to_record(instance, spec.tau_a, spec.tau_b, seed)
        return cls(
            label=spec.label,
            trial=trial,
            setup_seconds=solve_report.setup_seconds,
            error_kind=solve_report.error_kind,
            **record,
        )

    def to_json(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


@dataclasses.dataclass
class MethodSummary:
    spec: MethodSpec
    trials: int
    mean_rse: float
    median_rse: float
    mean_it: float
    median_it: float
    mean_cpu_s: float
    failures: int
    """runs that hit max_iters or raised"""
    max_iters: int

    @property
    def label(self) -> str:
        return self.spec.label

    @property
    def converged(self) -> int:
        return self.trials - self.failures

    def csv_row(self) -> Tuple[Any, ...]:
        return (
            self.spec.method.display_name,
            "" if self.spec.tau_a is None else self.spec.tau_a,
            "" if self.spec.tau_b is None else self.spec.tau_b,
            self.trials,
            self.mean_rse,
            self.median_it,
            self.mean_it,
            self.mean_cpu_s,
            self.failures,
        )

    @classmethod
    def from_records(
        cls, spec: MethodSpec, records: Sequence[RunRecord], max_iters: int
    ) -> MethodSummary:
        """Means and medians are over completed runs (runs that did not raise)."""
        completed = [record for record in records if record.completed]

        def stat(f: Any, values: List[float]) -> float:
            return float(f(values)) if values else float("nan")

        rse = [record.rse for record in completed]
        iterations = [float(record.iterations) for record in completed]
        return cls(
            spec=spec,
            trials=len(records),
            mean_rse=stat(statistics.fmean, rse),
            median_rse=stat(statistics.median, rse),
            mean_it=stat(statistics.fmean, iterations),
            median_it=stat(statistics.median, iterations),
            mean_cpu_s=stat(
                statistics.fmean, [record.elapsed_seconds for record in completed]
            ),
            failures=sum(1 for record in records if not record.converged),
            max_iters=max_iters,
        )


@dataclasses.dataclass
class ExperimentSummary:
    config: ExperimentConfig
    methods: List[MethodSummary]
    records: List[RunRecord]

    def __getitem__(self, label: str) -> MethodSummary:
        for summary in self.methods:
            if summary.label == label:
                return summary
        raise KeyError(label)

    def to_csv(self) -> str:
        return rows_to_csv(
            SUMMARY_HEADER, (summary.csv_row() for summary in self.methods)
        )


PartitionPair = Tuple[Partition, Partition]


@dataclasses.dataclass
class TrialResult:
    trial: int
    records: List[RunRecord]
    traces: Dict[str, List[TracePoint]]
    """per method label, of the runs that did not raise"""
    partitions: Dict[Tuple[int, int], PartitionPair]
    """(row, column) partitions per (tau_a, tau_b)"""


def run_trial(config: ExperimentConfig, trial: int) -> TrialResult:
    """Runs every method of ``config`` once, on the instance and partitions of
    ``trial``; solver errors are recorded, not raised."""
    trial_seed = config.base_seed + trial
    if config.family.is_random and not config.fix_instance:
        instance_seed = trial_seed
    else:
        instance_seed = config.base_seed
    instance = generate_instance(config, instance_seed)
    (m, n, p, q) = instance.shape
    partitions: Dict[Tuple[int, int], PartitionPair] = {}
    records = []
    traces = {}
    for (index, spec) in enumerate(config.methods):
        solve_config = config.solve_config(
            derive_seed(trial_seed, PURPOSE_SAMPLING, index)
        )
        try:
            if spec.method.is_block:
                assert spec.tau_a is not None and spec.tau_b is not None
                key = (spec.tau_a, spec.tau_b)
                if key not in partitions:
                    partitions[key] = make_partitions(
                        instance, spec.tau_a, spec.tau_b, trial_seed
                    )
                (row_partition, col_partition) = partitions[key]
                solver = make_solver(
                    spec.method,
                    instance,
                    solve_config,
                    row_partition,
                    col_partition,
                    **spec.options,
                )
            else:
                solver = make_solver(
                    spec.method, instance, solve_config, **spec.options
                )
            solve_report = solver.solve()
        except (KmeqError, ArithmeticError, np.linalg.LinAlgError) as e:
            logger.error("trial %d, %s failed: %s", trial, spec.label, e)
            records.append(
                RunRecord(
                    method=spec.method.display_name,
                    label=spec.label,
                    tau_a=spec.tau_a,
                    tau_b=spec.tau_b,
                    trial=trial,
                    seed=trial_seed,
                    m=m,
                    n=n,
                    p=p,
                    q=q,
                    iterations=0,
                    rse=float("nan"),
                    elapsed_seconds=0.0,
                    termination="Error",
                    failure_reason=f"{type(e).__name__}: {e}",
                )
            )
            continue
        logger.info(
            "trial %d, %s: %s after %d iterations (RSE %.3e, %.3fs)",
            trial,
            spec.label,
            solve_report.termination.value,
            solve_report.iterations,
            solve_report.rse,
            solve_report.elapsed_seconds,
        )
        records.append(
            RunRecord.from_report(spec, instance, trial, trial_seed, solve_report)
        )
        traces[spec.label] = solve_report.trace
    return TrialResult(
        trial=trial, records=records, traces=traces, partitions=partitions
    )


def _iter_trials(config: ExperimentConfig) -> List[TrialResult]:
    if config.workers == 1:
        return [run_trial(config, trial) for trial in range(config.trials)]
    with concurrent.futures.ProcessPoolExecutor(max_workers=config.workers) as pool:
        futures = [
            pool.submit(run_trial, config, trial) for trial in range(config.trials)
        ]
        results = [future.result() for future in futures]
    return sorted(results, key=lambda result: result.trial)


def summarize(
    config: ExperimentConfig, records: Sequence[RunRecord]
) -> ExperimentSummary:
    return ExperimentSummary(
        config=config,
        methods=[
            MethodSummary.from_records(
                spec,
                [record for record in records if record.label == spec.label],
                config.max_iters,
            )
            for spec in config.methods
        ],
        records=list(records),
    )


def run_experiment(config: ExperimentConfig) -> ExperimentSummary:
    """Runs ``config.trials`` trials and writes the output directory."""
    labels = [spec.label for spec in config.methods]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"duplicate methods in {labels}")
    logger.info(
        "%s experiment, %d trials of %s",
        config.family.value,
        config.trials,
        ", ".join(labels),
    )
    results = _iter_trials(config)
    records = [record for result in results for record in result.records]
    summary = summarize(config, records)

    output_dir = config.output_dir
    output_dir.mkdir(parents=True, exist_ok=True)
    slugs = {spec.label: spec.slug for spec in config.methods}
    with output_lock(output_dir, parallel=config.workers > 1):
        for result in results:
            trial = result.trial
            for record in result.records:
                atomic_write_text(
                    output_dir / "runs" / f"{trial:03d}-{slugs[record.label]}.json",
                    json.dumps(record.to_json(), sort_keys=True, indent=2) + "\n",
                )
            for (label, trace) in result.traces.items():
                write_trace(
                    output_dir / "traces" / f"{trial:03d}-{slugs[label]}.csv", trace
                )
            for ((tau_a, tau_b), pair) in result.partitions.items():
                for (kind, partition) in zip(("rows", "cols"), pair):
                    atomic_write_text(
                        output_dir
                        / "partitions"
                        / f"{trial:03d}-{tau_a}-{tau_b}-{kind}.txt",
                        "\n".join(partition.to_lines()) + "\n",
                    )
        atomic_write_text(output_dir / "summary.csv", summary.to_csv())
        atomic_write_text(
            output_dir / "table.txt", report.render_text(summary.methods) + "\n"
        )
    return summary


@dataclasses.dataclass
class BoundOverlay:
    checkpoints: Tuple[int, ...]
    empirical: List[float]
    """mean of ||X_{k+1} - X*||_F^2 over trials, per checkpoint k"""
    bound: Optional[List[float]]
    """None when the bound could not be evaluated"""

    def rows(self) -> List[Tuple[int, float, Any]]:
        bound = self.bound or [""] * len(self.checkpoints)
        return list(zip(self.checkpoints, self.empirical, bound))


def compare_with_bounds(config: ExperimentConfig) -> BoundOverlay:
    """Mean squared X-error of the single ARBK method of ``config`` at each checkpoint
    k, against the expected-error bound for the instance and partitions of trial 0.

    Only the sampling stream varies between trials, which is what the bound is an
    expectation over."""
    if len(config.methods) != 1 or config.methods[0].method is not Method.ARBK:
        raise ConfigError("compare_with_bounds needs exactly one ARBK method")
    (spec,) = config.methods
    (m, _, _, q) = config.dimensions()
    if max(m, q) > SVD_SIZE_GUARD:
        raise SvdSizeGuardError(
            f"m={m}, q={q}: bound overlays need full SVDs, limited to dimensions "
            f"<= {SVD_SIZE_GUARD}"
        )
    if config.trials == 1:
        logger.warning("a single run is not an expectation estimate")
    assert spec.tau_a is not None and spec.tau_b is not None

    instance = generate_instance(config, config.base_seed)
    (row_partition, col_partition) = make_partitions(
        instance, spec.tau_a, spec.tau_b, config.base_seed
    )
    x_star = instance.reference_solution
    checkpoints = tuple(sorted(set(config.checkpoints)))
    index = {k + 1: i for (i, k) in enumerate(checkpoints)}
    errors = np.full((config.trials, len(checkpoints)), np.nan)

    for trial in range(config.trials):
        solve_config = dataclasses.replace(
            config.solve_config(
                derive_seed(config.base_seed + trial, PURPOSE_SAMPLING, 0)
            ),
            max_iters=max(checkpoints) + 1,
            # run to the last checkpoint unless the error is exactly zero
            rse_tol=float(np.finfo(np.float64).tiny),
        )

        def observe(state: Any, trial: int = trial) -> None:
            if state.iteration in index:
                errors[trial, index[state.iteration]] = (
                    np.linalg.norm(state.x - x_star) ** 2
                )

        solver = make_solver(
            spec.method, instance, solve_config, row_partition, col_partition
        )
        solve_report = solver.solve(observer=observe)
        # a solve stopping early sits at its final iterate from then on
        final = float(np.linalg.norm(solve_report.final_x - x_star) ** 2)
        row = errors[trial]
        row[np.isnan(row)] = final

    empirical = [float(value) for value in errors.mean(axis=0)]
    x0_err_sq = float(np.linalg.norm(x_star) ** 2)
    try:
        factors = convergence_factors(
            instance.a, instance.b, row_partition, col_partition
        )
        bound: Optional[List[float]] = [
            value for (_, value) in bound_curve(checkpoints, factors, x0_err_sq)
        ]
    except (NumericalFailure, DomainError, PavingInconsistency) as e:
        logger.warning("bound unavailable, writing empirical values only: %s", e)
        bound = None

    overlay = BoundOverlay(checkpoints=checkpoints, empirical=empirical, bound=bound)
    path = config.output_dir / "bounds.csv"
    config.output_dir.mkdir(parents=True, exist_ok=True)
    with output_lock(config.output_dir):
        if bound is None:
            text = rows_to_csv(("k", "empirical", "bound"), overlay.rows())
            atomic_write_text(path, text)
        else:
            write_bound_csv(path, list(zip(checkpoints, bound)), empirical)
    return overlay
