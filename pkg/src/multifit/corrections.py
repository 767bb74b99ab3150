"""Step-down multiple testing corrections with strong FWER control.

Two procedures over the raw p-values of every executed test:

* ``holm``: classical step-down, adjusted p at sorted position i is the
  running maximum of min(1, (m - i) * p_(i)).
* ``modified_holm``: the discrete sharpening for tests with known attainable
  p-value supports.  At step i, with R_i the tests not yet rejected and
  F_j(u) the largest attainable p-value of test j that is <= u, H_(i) is
  rejected when sum(F_j(p_(i)) for j in R_i) <= alpha.  Since F_j(u) <= u,
  this always rejects at least everything Holm rejects, and the same union
  bound that proves Holm keeps FWER <= alpha for valid discrete p-values.

Adjusted p-values are the running maxima of the per-step critical sums, so
"adjusted <= alpha" reproduces the step-down decision at any alpha.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyInputError, MissingSupportError
from .exact_tests import PValue


@dataclass(slots=True)
class AdjustedResults:
    """Adjusted p-values and rejection flags, aligned with the input order."""

    method: str
    alpha: float
    m: int
    adjusted: np.ndarray
    reject: np.ndarray


def _check(raw, alpha) -> np.ndarray:
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    if len(raw) == 0:
        raise EmptyInputError("no p-values to adjust")
    vals = np.array(
        [p.value if isinstance(p, PValue) else float(p) for p in raw],
        dtype=np.float64,
    )
    if vals.min() < 0 or vals.max() > 1:
        raise ValueError("p-values must lie in [0, 1]")
    return vals


def holm(raw: Sequence[PValue | float], alpha: float) -> AdjustedResults:
    """Holm's step-down procedure."""
    p = _check(raw, alpha)
    m = len(p)
    order = np.argsort(p, kind="stable")
    factors = np.arange(m, 0, -1, dtype=np.float64)
    adj_sorted = np.maximum.accumulate(np.minimum(1.0, factors * p[order]))
    adjusted = np.empty(m)
    adjusted[order] = adj_sorted
    reject = adjusted <= alpha
    return AdjustedResults("holm", alpha, m, adjusted, reject)


def modified_holm(raw: Sequence[PValue], alpha: float) -> AdjustedResults:
    """Discrete step-down using each test's attainable p-value support.

    Every element of ``raw`` must carry its support (sorted attainable
    p-values for the test's margins).  Exact computation of the critical
    sum stops once the running adjusted value hits 1, after which every
    remaining adjusted p-value is 1 by monotonicity.
    """
    p = _check(raw, alpha)
    m = len(p)

    # Group tests by identical support so the critical sum is a loop over
    # distinct supports, not over tests.  Arrays are usually shared objects
    # (one per distinct margin set), so hash by identity first.
    supports: list[np.ndarray] = []
    gid_of_key: dict[bytes, int] = {}
    key_of_id: dict[int, int] = {}
    gids = np.empty(m, dtype=np.int64)
    for t, pv in enumerate(raw):
        sup = getattr(pv, "support", None)
        if sup is None:
            raise MissingSupportError(f"p-value at index {t} has no support")
        gid = key_of_id.get(id(sup))
        if gid is None:
            key = sup.tobytes()
            gid = gid_of_key.setdefault(key, len(supports))
            if gid == len(supports):
                supports.append(sup)
            key_of_id[id(sup)] = gid
        gids[t] = gid

    order = np.argsort(p, kind="stable")
    remaining = np.bincount(gids, minlength=len(supports)).astype(np.int64)
    adj_sorted = np.empty(m)
    running = 0.0
    for t in range(m):
        idx = order[t]
        u = p[idx]
        if running < 1.0:
            lam = 0.0
            for gid, sup in enumerate(supports):
                cnt = remaining[gid]
                if cnt == 0:
                    continue
                pos = int(np.searchsorted(sup, u, side="right"))
                if pos:
                    lam += cnt * float(sup[pos - 1])
            running = max(running, min(1.0, lam))
        adj_sorted[t] = running
        if running >= 1.0:
            adj_sorted[t:] = 1.0
            break
        remaining[gids[idx]] -= 1

    adjusted = np.empty(m)
    adjusted[order] = adj_sorted
    reject = adjusted <= alpha
    return AdjustedResults("modified_holm", alpha, m, adjusted, reject)
