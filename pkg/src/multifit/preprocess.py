"""Data ingestion and the marginal rank transform.

Everything downstream consumes rank-transformed data: column c is mapped
onto the grid {(r - 0.5)/n : r = 1..n}, which balances every margin exactly
on dyadic intervals and keeps observations off interval endpoints, so
half-open membership tests never need an edge rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import (
    ColumnSelectorError,
    EmptyAfterDropError,
    MissingValueError,
    NonFiniteValueError,
    NonNumericColumnError,
    OverlappingSelectorsError,
)

TIE_POLICIES = ("stable_index", "random")


@dataclass(slots=True)
class DataMatrix:
    """Numeric data with columns split into an X block and a Y block.

    ``values`` is an (n, D) float array; ``x_dims`` and ``y_dims`` are
    disjoint column-index tuples whose union covers all D columns.
    """

    values: np.ndarray
    x_dims: tuple[int, ...]
    y_dims: tuple[int, ...]

    def __post_init__(self) -> None:
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] < 1:
            raise ValueError("values must be a non-empty 2-d array")
        self.x_dims = tuple(int(d) for d in self.x_dims)
        self.y_dims = tuple(int(d) for d in self.y_dims)
        if not self.x_dims or not self.y_dims:
            raise ColumnSelectorError("x_dims and y_dims must both be non-empty")
        overlap = set(self.x_dims) & set(self.y_dims)
        if overlap:
            raise OverlappingSelectorsError(
                f"columns claimed by both blocks: {sorted(overlap)}"
            )
        if set(self.x_dims) | set(self.y_dims) != set(range(self.values.shape[1])):
            raise ValueError("x_dims and y_dims together must cover every column")
        finite = np.isfinite(self.values)
        if not finite.all():
            r, c = np.argwhere(~finite)[0]
            raise NonFiniteValueError(int(r), int(c))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def d_x(self) -> int:
        return len(self.x_dims)

    @property
    def d_y(self) -> int:
        return len(self.y_dims)


@dataclass(slots=True)
class RankedSample:
    """Rank-transformed data: every column is a permutation of (r - 0.5)/n."""

    values: np.ndarray
    x_dims: tuple[int, ...]
    y_dims: tuple[int, ...]
    tie_policy: str = "stable_index"
    tie_seed: int | None = None

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def d_x(self) -> int:
        return len(self.x_dims)

    @property
    def d_y(self) -> int:
        return len(self.y_dims)


def rank_transform(
    data: DataMatrix,
    tie_policy: str = "stable_index",
    seed: int | None = None,
) -> RankedSample:
    """Replace every column by its normalized ranks (r - 0.5)/n.

    Ties are broken so all ranks are distinct: ``stable_index`` orders tied
    values by original row index (deterministic), ``random`` shuffles tied
    values with the given seed.  Untied values keep their sort order under
    either policy.
    """
    if tie_policy not in TIE_POLICIES:
        raise ValueError(f"tie_policy must be one of {TIE_POLICIES}")
    vals = data.values
    n, d = vals.shape
    rng = np.random.default_rng(0 if seed is None else seed)
    out = np.empty_like(vals)
    ranks = np.empty(n, dtype=np.int64)
    grid = np.arange(1, n + 1, dtype=np.int64)
    for c in range(d):
        col = vals[:, c]
        if tie_policy == "stable_index":
            order = np.argsort(col, kind="stable")
        else:
            perm = rng.permutation(n)
            order = perm[np.argsort(col[perm], kind="stable")]
        ranks[order] = grid
        out[:, c] = (ranks - 0.5) / n
    return RankedSample(
        out,
        data.x_dims,
        data.y_dims,
        tie_policy=tie_policy,
        tie_seed=(seed if tie_policy == "random" else None),
    )


def resolve_selector(selector, columns: Sequence[str]) -> list[int]:
    """Resolve a column selector to a list of 0-based column positions.

    A selector is either a sequence of names/indices or a comma-separated
    string whose tokens are column names, 0-based indices, or inclusive
    index ranges like ``"0-3"``.  Tokens matching a header name take
    precedence over numeric interpretation.
    """
    names = list(columns)
    if isinstance(selector, str):
        tokens = [t.strip() for t in selector.split(",") if t.strip()]
    else:
        tokens = list(selector)

    def one(token) -> list[int]:
        if not isinstance(token, str):
            idx = int(token)
            if not 0 <= idx < len(names):
                raise ColumnSelectorError(f"column index {idx} out of range")
            return [idx]
        if token in names:
            return [names.index(token)]
        body = token
        if "-" in body[1:]:  # allow a leading minus to fail as non-numeric below
            lo_s, hi_s = body.split("-", 1) if not body.startswith("-") else (body, "")
            if lo_s.lstrip("-").isdigit() and hi_s.isdigit():
                lo, hi = int(lo_s), int(hi_s)
                if lo < 0 or hi >= len(names) or lo > hi:
                    raise ColumnSelectorError(f"range {token!r} out of bounds")
                return list(range(lo, hi + 1))
        if body.isdigit():
            idx = int(body)
            if idx >= len(names):
                raise ColumnSelectorError(f"column index {idx} out of range")
            return [idx]
        raise ColumnSelectorError(f"cannot resolve column selector token {token!r}")

    out: list[int] = []
    for tok in tokens:
        out.extend(one(tok))
    if not out:
        raise ColumnSelectorError("selector resolves to no columns")
    if len(set(out)) != len(out):
        raise ColumnSelectorError(f"selector {selector!r} names a column twice")
    return out


def ingest_csv(path, x_cols, y_cols, drop_na: bool = False) -> DataMatrix:
    """Read an RFC-4180 CSV (header row, UTF-8) into a DataMatrix.

    ``x_cols`` and ``y_cols`` follow :func:`resolve_selector` and must be
    disjoint and non-empty.  Missing values are an error unless ``drop_na``
    is set, in which case their rows are removed; non-numeric or infinite
    entries are always an error.
    """
    df = pd.read_csv(path)
    x_idx = resolve_selector(x_cols, df.columns)
    y_idx = resolve_selector(y_cols, df.columns)
    overlap = set(x_idx) & set(y_idx)
    if overlap:
        raise OverlappingSelectorsError(
            f"x and y selectors share columns: {[df.columns[i] for i in sorted(overlap)]}"
        )
    cols = x_idx + y_idx
    arrays = []
    for pos in cols:
        name = str(df.columns[pos])
        raw = df.iloc[:, pos]
        conv = pd.to_numeric(raw, errors="coerce")
        bad = conv.isna() & raw.notna()
        if bad.any():
            raise NonNumericColumnError(name)
        arr = conv.to_numpy(dtype=np.float64)
        inf = np.isinf(arr)
        if inf.any():
            raise NonFiniteValueError(int(np.argmax(inf)), name)
        arrays.append(arr)
    mat = np.column_stack(arrays) if arrays else np.empty((len(df), 0))
    miss = np.isnan(mat)
    if miss.any():
        if drop_na:
            mat = mat[~miss.any(axis=1)]
            if mat.shape[0] == 0:
                raise EmptyAfterDropError("no rows left after dropping missing values")
        else:
            r, c = np.argwhere(miss)[0]
            raise MissingValueError(int(r), str(df.columns[cols[int(c)]]))
    return DataMatrix(
        mat,
        x_dims=tuple(range(len(x_idx))),
        y_dims=tuple(range(len(x_idx), len(cols))),
    )
