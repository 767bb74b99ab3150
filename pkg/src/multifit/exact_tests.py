"""P-values for 2x2 tables under the central hypergeometric null.

Three variants: the classical two-sided exact test (sum of outcomes no more
probable than the observed one), its mid-p version (half weight on
probability ties), and a normal approximation with the finite-population
variance.

All exact work happens in log space against one shared log-factorial table.
For fixed margins, the p-value of every attainable table is computed in a
single vectorized pass and cached, so testing many tables with common
margins (the usual pattern on rank-balanced data) costs one lookup each.
The log of each p-value is kept alongside the linear value so that results
far below the smallest positive float still rank correctly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import norm

from .errors import InconsistentMarginsError
from .lattice import FaceTable

# Relative pmf window treated as a probability tie between outcomes.  Exact
# rational ties land within a few ulp of each other after log-space
# evaluation; genuinely different pmfs for realistic table sizes are far
# more than 1e-7 apart.
TIE_REL_TOL = 1e-7
SUPPORT_DEDUP_TOL = 1e-12

METHODS = ("fisher", "midp", "normal")

_METHOD_LABEL = {
    "fisher": "fisher_exact",
    "midp": "fisher_mid_p",
    "normal": "normal_approx",
}


@dataclass(slots=True)
class PValue:
    """A p-value, its natural log, the producing method, and (for the exact
    variants) the sorted attainable p-values for the table's margins."""

    value: float
    log_value: float
    method: str
    support: np.ndarray | None = None


class _MarginCard:
    """Per-margin lookup: p-values for every attainable free cell a."""

    __slots__ = ("a_lo", "p_fisher", "log_fisher", "p_midp", "log_midp", "support")

    def __init__(self, a_lo, p_fisher, log_fisher, p_midp, log_midp, support):
        self.a_lo = a_lo
        self.p_fisher = p_fisher
        self.log_fisher = log_fisher
        self.p_midp = p_midp
        self.log_midp = log_midp
        self.support = support


class TwoByTwoTester:
    """Shared machinery for testing many 2x2 tables of total <= max_total."""

    def __init__(self, max_total: int, method: str = "fisher",
                 continuity_correction: bool = False):
        if method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        self.method = method
        self.continuity_correction = continuity_correction
        self._logfact = gammaln(np.arange(max(max_total, 1) + 2, dtype=np.float64))
        self._cards: dict[tuple[int, int, int], _MarginCard] = {}

    @property
    def max_total(self) -> int:
        return len(self._logfact) - 2

    def _grow(self, total: int) -> None:
        if total > self.max_total:
            self._logfact = gammaln(np.arange(total + 2, dtype=np.float64))

    def _card(self, row0: int, row1: int, col0: int) -> _MarginCard:
        key = (row0, row1, col0)
        card = self._cards.get(key)
        if card is None:
            card = self._build_card(row0, row1, col0)
            self._cards[key] = card
        return card

    def _build_card(self, row0: int, row1: int, col0: int) -> _MarginCard:
        total = row0 + row1
        self._grow(total)
        lf = self._logfact
        a_lo = max(0, col0 - row1)
        a_hi = min(row0, col0)
        a = np.arange(a_lo, a_hi + 1)
        col1 = total - col0
        log_denom = lf[total] - lf[col0] - lf[col1]
        logpmf = (
            lf[row0] - lf[a] - lf[row0 - a]
            + lf[row1] - lf[col0 - a] - lf[row1 - col0 + a]
            - log_denom
        )
        order = np.argsort(logpmf, kind="stable")
        slp = logpmf[order]
        lcs = np.logaddexp.accumulate(slp)
        tot = lcs[-1]
        d_hi = math.log1p(TIE_REL_TOL)
        d_lo = math.log1p(-TIE_REL_TOL)
        hi_idx = np.searchsorted(slp, logpmf + d_hi, side="right")
        lo_idx = np.searchsorted(slp, logpmf + d_lo, side="left")
        log_le = lcs[hi_idx - 1]  # hi_idx >= 1: each logpmf is in its own window
        log_lt = np.where(lo_idx > 0, lcs[np.maximum(lo_idx, 1) - 1], -np.inf)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.exp(np.minimum(log_lt - log_le, 0.0))
            log_tied = log_le + np.log1p(-np.minimum(ratio, 1.0))
            log_midp = np.logaddexp(log_lt, math.log(0.5) + log_tied)
        log_fisher = np.minimum(log_le - tot, 0.0)
        log_midp = np.minimum(log_midp - tot, 0.0)
        p_fisher = np.exp(log_fisher)
        p_midp = np.exp(log_midp)
        s = np.sort(p_fisher)
        keep = np.empty(len(s), dtype=bool)
        keep[0] = True
        keep[1:] = np.diff(s) > s[:-1] * SUPPORT_DEDUP_TOL
        support = np.ascontiguousarray(s[keep])
        return _MarginCard(a_lo, p_fisher, log_fisher, p_midp, log_midp, support)

    def _locate(self, table: FaceTable) -> tuple[_MarginCard, int]:
        card = self._card(table.row0, table.row1, table.col0)
        idx = table.n00 - card.a_lo
        if not 0 <= idx < len(card.p_fisher):
            raise InconsistentMarginsError(
                f"cell {table.n00} unattainable for margins {table.margins}"
            )
        return card, idx

    def fisher(self, table: FaceTable) -> PValue:
        card, idx = self._locate(table)
        return PValue(float(card.p_fisher[idx]), float(card.log_fisher[idx]),
                      "fisher_exact", card.support)

    def mid_p(self, table: FaceTable) -> PValue:
        card, idx = self._locate(table)
        return PValue(float(card.p_midp[idx]), float(card.log_midp[idx]),
                      "fisher_mid_p", card.support)

    def normal(self, table: FaceTable) -> PValue:
        """Two-sided tail of the normal fit to the hypergeometric null."""
        if table.total == 0 or min(table.margins) == 0:
            return PValue(1.0, 0.0, "normal_approx", None)
        row0, row1, col0, col1 = table.margins
        total = table.total
        mu = row0 * col0 / total
        var = row0 * row1 * col0 * col1 / (total * total * (total - 1))
        dev = abs(table.n00 - mu)
        if self.continuity_correction:
            dev = max(0.0, dev - 0.5)
        z = dev / math.sqrt(var)
        log_p = min(0.0, math.log(2.0) + norm.logsf(z))
        return PValue(math.exp(log_p), log_p, "normal_approx", None)

    def pvalue(self, table: FaceTable) -> PValue:
        if self.method == "fisher":
            return self.fisher(table)
        if self.method == "midp":
            return self.mid_p(table)
        return self.normal(table)

    def support(self, row0: int, row1: int, col0: int, col1: int) -> np.ndarray:
        """Sorted, deduplicated attainable two-sided p-values for the margins."""
        if min(row0, row1, col0, col1) < 0 or row0 + row1 != col0 + col1:
            raise InconsistentMarginsError(
                f"margins ({row0}, {row1}, {col0}, {col1}) are not a 2x2 table"
            )
        return self._card(row0, row1, col0).support


_shared: TwoByTwoTester | None = None


def _tester_for(total: int) -> TwoByTwoTester:
    global _shared
    if _shared is None or _shared.max_total < total:
        size = 256
        while size < total:
            size *= 2
        _shared = TwoByTwoTester(size)
    return _shared


def fisher_two_sided(table: FaceTable) -> PValue:
    """Two-sided exact p-value: total probability of outcomes whose pmf does
    not exceed the observed pmf (within a tiny relative tie window)."""
    return _tester_for(table.total).fisher(table)


def fisher_mid_p(table: FaceTable) -> PValue:
    """Mid-p variant: tied outcomes (including the observed one) count half."""
    return _tester_for(table.total).mid_p(table)


def normal_approx(table: FaceTable, continuity_correction: bool = False) -> PValue:
    """Normal approximation to the exact test, finite-population variance."""
    t = _tester_for(table.total)
    if continuity_correction:
        t = TwoByTwoTester(table.total, method="normal", continuity_correction=True)
    return t.normal(table)


def attainable_support(row0: int, row1: int, col0: int, col1: int) -> np.ndarray:
    return _tester_for(row0 + row1).support(row0, row1, col0, col1)
