"""Study runners: power, FWER, and runtime scaling, with plot-ready CSV.

Replications are independent jobs: replication i of a cell uses the seed
(seed_base XOR i) fed to the pinned generator, so studies parallelize
without seed collisions and give identical estimates for any worker count.
The environment variable MULTIFIT_THREADS caps the worker pool.
"""

from __future__ import annotations

import io
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

from . import __version__
from .engine import EngineConfig, run_multifit
from .preprocess import rank_transform
from .scenarios import RNG_NAME, ScenarioSpec, generate

STUDY_KINDS = ("power", "fwer", "scaling")

# The four test/correction pairings whose FWER the null study estimates.
FWER_VARIANTS: tuple[tuple[str, str], ...] = (
    ("fisher", "holm"),
    ("midp", "holm"),
    ("fisher", "modified_holm"),
    ("normal", "holm"),
)


def derive_seed(seed_base: int, index: int) -> int:
    return (seed_base ^ index) & 0x7FFFFFFFFFFFFFFF


def effective_workers(requested: int) -> int:
    cap = os.environ.get("MULTIFIT_THREADS")
    workers = max(1, requested)
    if cap:
        workers = min(workers, max(1, int(cap)))
    return workers


@dataclass(slots=True)
class StudySpec:
    """Grid and execution parameters for one study."""

    kind: str
    scenarios: tuple[str, ...] = ("null_gaussian",)
    noise_levels: tuple[int | None, ...] = (None,)
    n_values: tuple[int, ...] = (100,)
    replications: int = 100
    alpha: float = 0.05
    seed_base: int = 0
    workers: int = 1
    d_x: int | None = None
    d_y: int | None = None
    noise_sd: float | None = None
    engine: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in STUDY_KINDS:
            raise ValueError(f"kind must be one of {STUDY_KINDS}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.scenarios or not self.n_values or not self.noise_levels:
            raise ValueError("study grids must be non-empty")


@dataclass(slots=True)
class CellResult:
    scenario: str
    n: int
    noise_level: int | None
    method: str
    correction: str
    replications: int
    rejects: int
    failures: int
    estimate: float
    se: float
    median_time: float
    mean_time: float


@dataclass
class StudyResult:
    kind: str
    cells: list[CellResult]
    metadata: dict[str, str]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, val in self.metadata.items():
            buf.write(f"# {key}={val}\n")
        cols = [f.name for f in fields(CellResult)]
        buf.write(",".join(cols) + "\n")
        for cell in self.cells:
            row = []
            for name in cols:
                val = getattr(cell, name)
                if val is None:
                    row.append("")
                elif isinstance(val, float):
                    row.append(repr(val))
                else:
                    row.append(str(val))
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())


def read_study_csv(path) -> StudyResult:
    """Parse a study CSV back into an identical StudyResult."""
    metadata: dict[str, str] = {}
    cells: list[CellResult] = []
    header: list[str] | None = None
    int_fields = {"n", "noise_level", "replications", "rejects", "failures"}
    float_fields = {"estimate", "se", "median_time", "mean_time"}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                metadata[key] = val
                continue
            parts = line.split(",")
            if header is None:
                header = parts
                continue
            kwargs = {}
            for name, raw in zip(header, parts):
                if raw == "":
                    kwargs[name] = None
                elif name in int_fields:
                    kwargs[name] = int(raw)
                elif name in float_fields:
                    kwargs[name] = float(raw)
                else:
                    kwargs[name] = raw
            cells.append(CellResult(**kwargs))
    return StudyResult(metadata.get("kind", ""), cells, metadata)


def _run_block(job) -> tuple[int, int, int, list[float]]:
    """Run a block of replications of one cell; returns aggregate counts."""
    (block_id, scenario_kwargs, seeds, engine_kwargs, alpha) = job
    rejects = failures = 0
    durations: list[float] = []
    for seed in seeds:
        try:
            spec = ScenarioSpec(seed=seed, **scenario_kwargs)
            data = generate(spec)
            t0 = time.perf_counter()
            sample = rank_transform(data)
            report = run_multifit(sample, EngineConfig(alpha=alpha, **engine_kwargs))
            durations.append(time.perf_counter() - t0)
            rejects += int(report.global_reject)
        except Exception:
            failures += 1
            break
    return block_id, rejects, failures, durations


def _run_cell(scenario_kwargs, engine_kwargs, alpha, replications, seed_base,
              workers) -> tuple[int, int, list[float]]:
    seeds = [derive_seed(seed_base, i) for i in range(replications)]
    if workers <= 1:
        _, rejects, failures, durations = _run_block(
            (0, scenario_kwargs, seeds, engine_kwargs, alpha)
        )
        return rejects, failures, durations
    block = max(1, replications // (workers * 8))
    jobs = [
        (b, scenario_kwargs, seeds[i:i + block], engine_kwargs, alpha)
        for b, i in enumerate(range(0, replications, block))
    ]
    rejects = failures = 0
    durations: list[float] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for _, rej, fail, durs in sorted(pool.map(_run_block, jobs)):
            rejects += rej
            failures += fail
            durations.extend(durs)
    return rejects, failures, durations


def _cell_result(scenario, n, noise, method, correction, reps, rejects,
                 failures, durations) -> CellResult:
    done = reps - failures
    if failures or done == 0:
        estimate = float("nan")
        se = float("nan")
    else:
        estimate = rejects / done
        se = (estimate * (1.0 - estimate) / done) ** 0.5
    med = statistics.median(durations) if durations else float("nan")
    mean = statistics.fmean(durations) if durations else float("nan")
    return CellResult(scenario, n, noise, method, correction, reps, rejects,
                      failures, estimate, se, med, mean)


def _metadata(spec: StudySpec) -> dict[str, str]:
    return {
        "kind": spec.kind,
        "alpha": repr(spec.alpha),
        "seed_base": str(spec.seed_base),
        "replications": str(spec.replications),
        "package": f"multifit {__version__}",
        "rng": RNG_NAME,
    }


def power_study(spec: StudySpec) -> StudyResult:
    """Rejection rate per (scenario, noise, n) cell under the configured
    test method and correction."""
    workers = effective_workers(spec.workers)
    engine_kwargs = dict(spec.engine)
    method = engine_kwargs.get("test_method", EngineConfig().test_method)
    correction = engine_kwargs.get("correction", EngineConfig().correction)
    cells = []
    for scenario in spec.scenarios:
        for noise in spec.noise_levels:
            for n in spec.n_values:
                scen_kwargs = {
                    "name": scenario, "n": n, "noise_level": noise,
                    "d_x": spec.d_x, "d_y": spec.d_y, "noise_sd": spec.noise_sd,
                }
                rejects, failures, durations = _run_cell(
                    scen_kwargs, engine_kwargs, spec.alpha,
                    spec.replications, spec.seed_base, workers,
                )
                cells.append(_cell_result(
                    scenario, n, noise, method, correction,
                    spec.replications, rejects, failures, durations,
                ))
    return StudyResult("power", cells, _metadata(spec))


def fwer_study(spec: StudySpec) -> StudyResult:
    """Null rejection rate across n for the four test/correction variants."""
    workers = effective_workers(spec.workers)
    cells = []
    for n in spec.n_values:
        for method, correction in FWER_VARIANTS:
            engine_kwargs = dict(spec.engine)
            engine_kwargs["test_method"] = method
            engine_kwargs["correction"] = correction
            scen_kwargs = {
                "name": "null_gaussian", "n": n, "noise_level": None,
                "d_x": spec.d_x or 2, "d_y": spec.d_y or 2,
                "noise_sd": None,
            }
            rejects, failures, durations = _run_cell(
                scen_kwargs, engine_kwargs, spec.alpha,
                spec.replications, spec.seed_base, workers,
            )
            cells.append(_cell_result(
                "null_gaussian", n, None, method, correction,
                spec.replications, rejects, failures, durations,
            ))
    return StudyResult("fwer", cells, _metadata(spec))


def scaling_study(spec: StudySpec) -> StudyResult:
    """Median wall time of the full procedure (rank transform through
    adjustment) per n, on null data and on strong-signal linear data.

    Runs serially regardless of the worker setting so timings are clean.
    """
    cells = []
    grid = [("null_gaussian", None), ("linear", 3)]
    engine_kwargs = dict(spec.engine)
    method = engine_kwargs.get("test_method", EngineConfig().test_method)
    correction = engine_kwargs.get("correction", EngineConfig().correction)
    for scenario, noise in grid:
        if scenario not in spec.scenarios:
            continue
        for n in spec.n_values:
            scen_kwargs = {
                "name": scenario, "n": n, "noise_level": noise,
                "d_x": spec.d_x if scenario == "null_gaussian" else None,
                "d_y": spec.d_y if scenario == "null_gaussian" else None,
                "noise_sd": None,
            }
            rejects, failures, durations = _run_cell(
                scen_kwargs, engine_kwargs, spec.alpha,
                spec.replications, spec.seed_base, workers=1,
            )
            cells.append(_cell_result(
                scenario, n, noise, method, correction,
                spec.replications, rejects, failures, durations,
            ))
    return StudyResult("scaling", cells, _metadata(spec))
