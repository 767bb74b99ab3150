"""Coarse-to-fine testing engine.

One run tests every face of every cuboid up to the exhaustive resolution
r_star, then keeps descending only through faces whose raw p-value beats
the selection threshold p_star, and finally applies a family-wise error
rate correction over every p-value recorded along the way.  Face tables
whose totals or margins are too small to ever reach significance are
screened: they are recorded for audit but get no p-value and do not count
toward the correction.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .corrections import AdjustedResults, holm, modified_holm
from .errors import BudgetExceededError, DegenerateConfigError, EmptySampleError
from .exact_tests import METHODS, PValue, TwoByTwoTester
from .lattice import (
    CuboidKey,
    CuboidNode,
    FaceTable,
    children,
    exhaustive_test_count,
    face_counts,
    iter_levels,
)
from .preprocess import RankedSample

CORRECTIONS = ("holm", "modified_holm")
MODES = ("adaptive", "exhaustive")

DEFAULT_TEST_BUDGET = 10_000_000


def default_p_star(d_x: int, d_y: int, n: int) -> float:
    """Selection threshold 1 / (d_x * d_y * log2(n)): on average one
    selected face per resolution under the null, damped for large n."""
    return 1.0 / (d_x * d_y * math.log2(n))


def default_r_max(n: int) -> int:
    """Termination resolution floor(log2(n / 10))."""
    return math.floor(math.log2(n / 10)) if n >= 10 else 0


@dataclass(slots=True)
class EngineConfig:
    """Tuning parameters for one engine run.

    ``r_max`` and ``p_star`` default to None and are resolved from the
    sample (floor(log2(n/10)) and 1/(d_x*d_y*log2(n))).
    """

    r_star: int = 1
    r_max: int | None = None
    p_star: float | None = None
    alpha: float = 0.05
    test_method: str = "fisher"
    correction: str = "modified_holm"
    screen_total_min: int = 25
    screen_margin_min: int = 10
    mode: str = "adaptive"
    test_budget: int = DEFAULT_TEST_BUDGET

    def resolved(self, sample: RankedSample) -> "EngineConfig":
        """Fill data-dependent defaults and validate every field."""
        n = sample.n
        r_max = self.r_max
        if r_max is None:
            # The formula can undercut r_star for tiny n; exhaustive levels
            # up to r_star are always covered, so clamp rather than error.
            r_max = max(self.r_star, default_r_max(n))
        p_star = self.p_star
        if p_star is None:
            p_star = default_p_star(sample.d_x, sample.d_y, n)
        cfg = replace(self, r_max=r_max, p_star=p_star)
        if cfg.r_star < 0:
            raise DegenerateConfigError("r_star must be >= 0")
        if cfg.r_max < cfg.r_star:
            raise DegenerateConfigError(
                f"r_max ({cfg.r_max}) must be >= r_star ({cfg.r_star})"
            )
        if not 0 < cfg.p_star <= 1:
            raise DegenerateConfigError("p_star must be in (0, 1]")
        if not 0 < cfg.alpha < 1:
            raise DegenerateConfigError("alpha must be in (0, 1)")
        if cfg.test_method not in METHODS:
            raise DegenerateConfigError(f"test_method must be one of {METHODS}")
        if cfg.correction not in CORRECTIONS:
            raise DegenerateConfigError(f"correction must be one of {CORRECTIONS}")
        if cfg.mode not in MODES:
            raise DegenerateConfigError(f"mode must be one of {MODES}")
        if cfg.screen_total_min < 0 or cfg.screen_margin_min < 0:
            raise DegenerateConfigError("screening thresholds must be >= 0")
        return cfg

    def to_dict(self) -> dict:
        return {
            "r_star": self.r_star,
            "r_max": self.r_max,
            "p_star": self.p_star,
            "alpha": self.alpha,
            "test_method": self.test_method,
            "correction": self.correction,
            "screen_total_min": self.screen_total_min,
            "screen_margin_min": self.screen_margin_min,
            "mode": self.mode,
        }


@dataclass(slots=True)
class TestRecord:
    """One visited face: its table, p-value (absent when screened), the
    resolution it was tested at, and the parent cuboid that selected it."""

    table: FaceTable
    raw_p: PValue | None
    resolution: int
    parent_key: CuboidKey | None
    screened: bool


@dataclass
class Report:
    """Everything one run produced, with the global decision."""

    records: list[TestRecord]
    adjusted: AdjustedResults | None
    adjusted_p: np.ndarray
    global_reject: bool
    ranked: list[int]
    config: dict
    timings: dict = field(default_factory=dict)

    @property
    def n_tested(self) -> int:
        return 0 if self.adjusted is None else self.adjusted.m

    @property
    def n_screened(self) -> int:
        return len(self.records) - self.n_tested

    def ranked_findings(self, top: int | None = None) -> list[tuple[TestRecord, float]]:
        """Records with their adjusted p-values, most significant first."""
        idx = self.ranked if top is None else self.ranked[:top]
        return [(self.records[t], float(self.adjusted_p[t])) for t in idx]

    def record_dict(self, t: int) -> dict:
        rec = self.records[t]
        tbl = rec.table
        out = {
            "k": list(tbl.cuboid.k),
            "l": list(tbl.cuboid.l),
            "i": tbl.i,
            "j": tbl.j,
            "counts": list(tbl.counts),
            "resolution": rec.resolution,
            "screened": rec.screened,
            "raw_p": None if rec.raw_p is None else rec.raw_p.value,
            "log10_raw_p": None
            if rec.raw_p is None
            else rec.raw_p.log_value / math.log(10),
            "adjusted_p": None if rec.screened else float(self.adjusted_p[t]),
            "parent": None
            if rec.parent_key is None
            else {"k": list(rec.parent_key.k), "l": list(rec.parent_key.l)},
        }
        return out

    def to_dict(self, include_timings: bool = True) -> dict:
        payload = {
            "package": f"multifit {__version__}",
            "config": self.config,
            "n_records": len(self.records),
            "n_tested": self.n_tested,
            "n_screened": self.n_screened,
            "global_reject": self.global_reject,
            "ranked_findings": list(self.ranked),
            "records": [self.record_dict(t) for t in range(len(self.records))],
        }
        if include_timings:
            payload["timings"] = self.timings
        return payload

    def to_json(self, include_timings: bool = True, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(include_timings), indent=indent)

    def to_csv(self) -> str:
        """One row per record: k, l, i, j, counts, raw p, adjusted p, screened."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "l", "i", "j", "n00", "n01", "n10", "n11",
                    "raw_p", "adjusted_p", "screened"])
        for t, rec in enumerate(self.records):
            tbl = rec.table
            raw = "" if rec.raw_p is None else repr(rec.raw_p.value)
            adj = "" if rec.screened else repr(float(self.adjusted_p[t]))
            w.writerow([
                " ".join(map(str, tbl.cuboid.k)),
                " ".join(map(str, tbl.cuboid.l)),
                tbl.i, tbl.j, tbl.n00, tbl.n01, tbl.n10, tbl.n11,
                raw, adj, int(rec.screened),
            ])
        return buf.getvalue()


def _run_core(sample: RankedSample, cfg: EngineConfig) -> Report:
    t_start = time.perf_counter()
    n = sample.n
    x_dims, y_dims = sample.x_dims, sample.y_dims
    tester = TwoByTwoTester(n, method=cfg.test_method)

    # Exhaustive initialization up to r_star; deeper levels fill by selection.
    levels: list[dict[CuboidKey, tuple[CuboidNode, CuboidKey | None]]] = [
        {} for _ in range(cfg.r_max + 2)
    ]
    for r, nodes in enumerate(iter_levels(sample, cfg.r_star, budget=None)):
        levels[r] = {node.key: (node, None) for node in nodes}

    records: list[TestRecord] = []
    t_setup = time.perf_counter()

    for r in range(cfg.r_max + 1):
        entries = sorted(levels[r].items(), key=lambda kv: kv[0].sort_key())
        selecting = cfg.r_star <= r < cfg.r_max
        nxt = levels[r + 1]
        for key, (node, parent) in entries:
            total = node.n
            n00, xrow0, ycol0 = face_counts(node, sample)
            for a, i in enumerate(x_dims):
                for b, j in enumerate(y_dims):
                    c00 = int(n00[a, b])
                    c01 = int(xrow0[a]) - c00
                    c10 = int(ycol0[b]) - c00
                    c11 = total - c00 - c01 - c10
                    tbl = FaceTable(key, i, j, c00, c01, c10, c11)
                    if total < cfg.screen_total_min or min(tbl.margins) < cfg.screen_margin_min:
                        records.append(TestRecord(tbl, None, r, parent, True))
                        continue
                    pv = tester.pvalue(tbl)
                    records.append(TestRecord(tbl, pv, r, parent, False))
                    if selecting and pv.value < cfg.p_star:
                        for child in children(node, i, j, sample):
                            if child.key not in nxt:
                                nxt[child.key] = (child, key)
        levels[r] = {}
    t_tested = time.perf_counter()

    tested_idx = [t for t, rec in enumerate(records) if not rec.screened]
    adjusted_p = np.full(len(records), np.nan)
    if tested_idx:
        raw = [records[t].raw_p for t in tested_idx]
        if cfg.correction == "holm":
            adj = holm(raw, cfg.alpha)
        else:
            adj = modified_holm(raw, cfg.alpha)
        adjusted_p[tested_idx] = adj.adjusted
        global_reject = bool(adj.reject.any())
    else:
        adj = None
        global_reject = False
    ranked = sorted(
        tested_idx,
        key=lambda t: (adjusted_p[t], records[t].raw_p.log_value, t),
    )
    t_done = time.perf_counter()

    config_echo = cfg.to_dict()
    config_echo.update({
        "n": n,
        "d_x": sample.d_x,
        "d_y": sample.d_y,
        "x_dims": list(x_dims),
        "y_dims": list(y_dims),
        "tie_policy": sample.tie_policy,
        "tie_seed": sample.tie_seed,
    })
    timings = {
        "setup_s": t_setup - t_start,
        "testing_s": t_tested - t_setup,
        "adjust_s": t_done - t_tested,
        "total_s": t_done - t_start,
    }
    return Report(records, adj, adjusted_p, global_reject, ranked,
                  config_echo, timings)


def _validated(sample: RankedSample, config: EngineConfig | None) -> EngineConfig:
    if sample.n < 2:
        raise EmptySampleError("need at least 2 observations")
    return (config or EngineConfig()).resolved(sample)


def run_multifit(sample: RankedSample, config: EngineConfig | None = None) -> Report:
    """Run the adaptive procedure (or the exhaustive one if configured)."""
    cfg = _validated(sample, config)
    if cfg.mode == "exhaustive":
        return _run_exhaustive_resolved(sample, cfg)
    init_count = exhaustive_test_count(sample.d_x, sample.d_y, cfg.r_star)
    if init_count > cfg.test_budget:
        raise BudgetExceededError(init_count, cfg.test_budget)
    return _run_core(sample, cfg)


def _run_exhaustive_resolved(sample: RankedSample, cfg: EngineConfig) -> Report:
    count = exhaustive_test_count(sample.d_x, sample.d_y, cfg.r_max)
    if count > cfg.test_budget:
        raise BudgetExceededError(count, cfg.test_budget)
    full = replace(cfg, r_star=cfg.r_max, p_star=1.0, mode="exhaustive")
    return _run_core(sample, full)


def run_exhaustive(sample: RankedSample, config: EngineConfig | None = None) -> Report:
    """Test every face of every cuboid up to r_max (the adaptive oracle)."""
    cfg = _validated(sample, config)
    return _run_exhaustive_resolved(sample, cfg)


def decide(report: Report, alpha: float) -> bool:
    """True iff any adjusted p-value is <= alpha."""
    vals = report.adjusted_p[~np.isnan(report.adjusted_p)]
    return bool(vals.size and (vals <= alpha).any())
