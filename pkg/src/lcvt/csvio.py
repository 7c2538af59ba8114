"""CSV ingestion for the command-line tools.

Comma separated, '.' decimal, UTF-8, header optional. Missing values (empty
fields and NA/NaN spellings) raise by default; ``na_policy="drop_row"``
removes the whole row instead.
"""

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, InputFileNotFound, NonFiniteInput, ParseError
from .numerics import DataMatrix

NA_TOKENS = frozenset({"", "na", "nan", "null", "none", "?"})
NA_POLICIES = ("error", "drop_row")


@dataclass(frozen=True)
class CsvSchema:
    """Which columns make up the response and the features.

    ``response`` and entries of ``features`` are column names (header
    required) or 0-based indices. ``features=None`` means every column except
    the response.
    """

    response: Union[str, int] = 0
    features: Optional[Sequence[Union[str, int]]] = None
    header: bool = True
    na_policy: str = "error"

    def __post_init__(self):
        if self.na_policy not in NA_POLICIES:
            raise ConfigError(f"na_policy must be one of {NA_POLICIES}", "na")


def _resolve(ref, names, ncol, what):
    if isinstance(ref, int) or (isinstance(ref, str) and ref.isdigit() and ref not in names):
        idx = int(ref)
        if not 0 <= idx < ncol:
            raise ConfigError(f"{what} index {idx} out of range (0..{ncol - 1})", what)
        return idx
    if ref not in names:
        raise ConfigError(f"{what} column {ref!r} not in header", what)
    return names.index(ref)


def _cell(text, row, col, names):
    s = text.strip()
    if s.lower() in NA_TOKENS:
        return math.nan
    try:
        return float(s)
    except ValueError:
        label = names[col] if names else str(col)
        raise ParseError(f"cannot parse {s!r} as a number", row, label) from None


def read_csv(path, schema=CsvSchema()):
    """Load ``path`` into a :class:`DataMatrix` according to ``schema``.

    Rows are numbered from 1 as they appear in the file, header included, so
    error locations match a text editor.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise InputFileNotFound(f"input file not found: {path}") from None
    with fh:
        rows = list(csv.reader(fh))
    first = 1
    names = []
    if schema.header:
        if not rows:
            raise ParseError("empty file", 1, None)
        names = [h.strip() for h in rows[0]]
        rows = rows[1:]
        first = 2
    numbered = [(i + first, r) for i, r in enumerate(rows) if any(c.strip() for c in r)]
    if not numbered:
        raise ParseError("no data rows", first, None)
    ncol = len(names) if names else len(numbered[0][1])

    resp = _resolve(schema.response, names, ncol, "response")
    if schema.features is None:
        feats = [j for j in range(ncol) if j != resp]
    else:
        feats = [_resolve(f, names, ncol, "features") for f in schema.features]
        if resp in feats:
            raise ConfigError("response column listed among features", "features")
    if not feats:
        raise ConfigError("at least one feature column is required", "features")

    values = np.empty((len(numbered), ncol))
    for i, (lineno, r) in enumerate(numbered):
        if len(r) != ncol:
            raise ParseError(f"expected {ncol} fields, found {len(r)}", lineno, None)
        values[i] = [_cell(c, lineno, j, names) for j, c in enumerate(r)]

    used = values[:, [resp] + feats]
    bad = ~np.isfinite(used)
    if bad.any():
        if schema.na_policy == "error":
            i, j = np.argwhere(bad)[0]
            col = ([resp] + feats)[j]
            label = names[col] if names else str(col)
            raise NonFiniteInput(f"missing or non-finite value at row {numbered[i][0]}, "
                                 f"column {label}; use --na drop_row to skip such rows")
        used = used[~bad.any(axis=1)]
    feature_names = tuple(names[j] for j in feats) if names else tuple(f"x{j}" for j in feats)
    return DataMatrix(np.ascontiguousarray(used[:, 1:]), used[:, 0].copy(), feature_names)
