"""Inter-country input-output table cleaning and industry-pair labeling.

The raw table is a square matrix over (country, industry) pairs: rows sell,
columns buy. Cleaning merges split country codes, drops configured countries
and industries, and zeroes same-country blocks so re-exports cannot masquerade
as cross-border input use. From the cleaned tensor we derive a country-level
specialization table (for threshold tuning) and a binary industry-pair label
matrix via a trade-intensity index.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .specialization import SpecializationTable, double_normalize

# Dataset-specific cleaning config; override per edition.
DEFAULT_MERGE_COUNTRIES = {"CN1": "CHN", "CN2": "CHN", "MX1": "MEX", "MX2": "MEX"}
DEFAULT_DROP_COUNTRIES = ("ROW",)
DEFAULT_DROP_INDUSTRIES = ("97T98",)


@dataclass(frozen=True)
class IcioTensor:
    """Square flow matrix over (country, industry) pairs, USD.

    Pair order is country-major with countries and industries each sorted,
    so pair index = country_index * n_industries + industry_index.
    """

    countries: tuple[str, ...]
    industries: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        n = len(self.countries) * len(self.industries)
        if self.matrix.shape != (n, n):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match "
                f"{len(self.countries)} countries x {len(self.industries)} industries"
            )
        if np.any(self.matrix < 0):
            raise ValueError("flow matrix contains negative values")
        self.matrix.setflags(write=False)

    @property
    def n_pairs(self) -> int:
        return len(self.countries) * len(self.industries)

    def pair_labels(self) -> list[str]:
        return [f"{c}_{i}" for c in self.countries for i in self.industries]

    def check_dimensions(self, n_countries: int, n_industries: int) -> None:
        if (len(self.countries), len(self.industries)) != (n_countries, n_industries):
            raise ValueError(
                f"expected {n_countries} countries x {n_industries} industries, "
                f"got {len(self.countries)} x {len(self.industries)}"
            )

    def total(self) -> float:
        return float(self.matrix.sum())


def _split_pair(label: str) -> tuple[str, str]:
    country, sep, industry = label.partition("_")
    if not sep or not country or not industry:
        raise ValueError(f"pair label {label!r} is not of the form COUNTRY_INDUSTRY")
    return country, industry


def load_icio_csv(paths) -> IcioTensor:
    """Load one or more square matrix CSVs and sum them cell by cell.

    Rows and columns are labeled COUNTRY_INDUSTRY; all files must share the
    same label set. Multiple files (one per year) merge by summation.
    """
    if isinstance(paths, (str, bytes)) or hasattr(paths, "__fspath__"):
        paths = [paths]
    total = None
    labels = None
    for path in paths:
        df = pd.read_csv(path, index_col=0)
        if list(df.index) != list(df.columns):
            raise ValueError(f"{path}: row labels do not match column labels")
        if labels is None:
            labels = list(df.index)
            total = df.to_numpy(dtype=np.float64)
        else:
            if list(df.index) != labels:
                raise ValueError(f"{path}: label set differs from the first file")
            total = total + df.to_numpy(dtype=np.float64)
    if total is None:
        raise ValueError("no input files given")
    pairs = [_split_pair(l) for l in labels]
    if len(set(pairs)) != len(pairs):
        raise ValueError("duplicate row labels in matrix CSV")
    countries = sorted({c for c, _ in pairs})
    industries = sorted({i for _, i in pairs})
    if len(pairs) != len(countries) * len(industries):
        raise ValueError(
            f"{len(pairs)} pairs do not factor into {len(countries)} countries x "
            f"{len(industries)} industries (incomplete grid)"
        )
    # Reorder into canonical country-major layout.
    want = {(c, i): n for n, (c, i) in enumerate((c, i) for c in countries for i in industries)}
    perm = np.empty(len(pairs), dtype=np.intp)
    for old, pair in enumerate(pairs):
        perm[want[pair]] = old
    matrix = total[np.ix_(perm, perm)].copy()
    return IcioTensor(tuple(countries), tuple(industries), matrix)


def clean_icio(
    raw: IcioTensor,
    merge_countries: dict[str, str] | None = None,
    drop_countries=DEFAULT_DROP_COUNTRIES,
    drop_industries=DEFAULT_DROP_INDUSTRIES,
    zero_domestic: bool = True,
) -> IcioTensor:
    """Merge split country codes, drop configured codes, zero domestic blocks.

    Codes named in the config but absent from the data are ignored with a
    warning. Merging sums the flows of the merged codes.
    """
    if merge_countries is None:
        merge_countries = DEFAULT_MERGE_COUNTRIES
    present_c = set(raw.countries)
    present_i = set(raw.industries)
    for code in sorted(set(merge_countries) | set(drop_countries)):
        if code not in present_c:
            warnings.warn(f"country code {code!r} not in data; ignored", stacklevel=2)
    for code in drop_industries:
        if code not in present_i:
            warnings.warn(f"industry code {code!r} not in data; ignored", stacklevel=2)

    drop_c = set(drop_countries)
    drop_i = set(drop_industries)
    mapped = {c: merge_countries.get(c, c) for c in raw.countries}
    new_countries = sorted({mapped[c] for c in raw.countries if c not in drop_c})
    new_industries = sorted(i for i in raw.industries if i not in drop_i)
    ci = {c: k for k, c in enumerate(new_countries)}
    ii = {i: k for k, i in enumerate(new_industries)}
    n_ind = len(new_industries)

    # Old pair index -> new pair index (or -1 when dropped).
    pair_map = np.full(raw.n_pairs, -1, dtype=np.intp)
    old = 0
    for c in raw.countries:
        for i in raw.industries:
            if c not in drop_c and i not in drop_i:
                pair_map[old] = ci[mapped[c]] * n_ind + ii[i]
            old += 1

    keep = np.flatnonzero(pair_map >= 0)
    new_n = len(new_countries) * n_ind
    matrix = np.zeros((new_n, new_n))
    np.add.at(matrix, (pair_map[keep][:, None], pair_map[keep][None, :]), raw.matrix[np.ix_(keep, keep)])

    if zero_domestic:
        pair_country = np.repeat(np.arange(len(new_countries)), n_ind)
        matrix[pair_country[:, None] == pair_country[None, :]] = 0.0

    return IcioTensor(tuple(new_countries), tuple(new_industries), matrix)


def icio_specialization(tensor: IcioTensor) -> SpecializationTable:
    """Country x industry specialization table from a cleaned tensor.

    A pair's exports are its row sum (sales to every buying pair); its
    imports are its column sum.
    """
    n_c, n_i = len(tensor.countries), len(tensor.industries)
    exp = tensor.matrix.sum(axis=1).reshape(n_c, n_i)
    imp = tensor.matrix.sum(axis=0).reshape(n_c, n_i)
    return SpecializationTable.from_matrices(tensor.countries, tensor.industries, exp, imp)


def industry_flows(tensor: IcioTensor) -> np.ndarray:
    """Industry x industry flows, aggregated over countries on both axes."""
    n_c, n_i = len(tensor.countries), len(tensor.industries)
    blocks = tensor.matrix.reshape(n_c, n_i, n_c, n_i)
    return blocks.sum(axis=(0, 2))


def trade_intensity(matrix: np.ndarray) -> np.ndarray:
    """Flow-share over destination-share ratio per industry pair.

    Entry (p, q) compares p's share of sales going to q against q's share of
    everyone's sales; above 1 marks a stronger-than-expected link. Rows with
    zero sales yield 0 across the row.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return double_normalize(m)


def binarize_ti(ti: np.ndarray) -> np.ndarray:
    """1 where the intensity index reaches 1, else 0."""
    return (np.asarray(ti) >= 1.0).astype(np.int8)


@dataclass(frozen=True)
class LabelMatrix:
    """Binary industry x industry matrix; 1 means the row feeds the column."""

    industries: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        n = len(self.industries)
        if self.values.shape != (n, n):
            raise ValueError(f"values shape {self.values.shape} != ({n}, {n})")
        if not np.isin(self.values, (0, 1)).all():
            raise ValueError("label entries must be 0 or 1")
        self.values.setflags(write=False)

    @property
    def index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.industries)}

    def label(self, input_industry: str, output_industry: str) -> int:
        idx = self.index
        return int(self.values[idx[input_industry], idx[output_industry]])

    def to_csv(self, path) -> None:
        pd.DataFrame(self.values, index=list(self.industries), columns=list(self.industries)).to_csv(path)

    @classmethod
    def from_csv(cls, path) -> "LabelMatrix":
        df = pd.read_csv(path, index_col=0)
        if list(df.index) != list(df.columns):
            raise ValueError("label CSV row labels do not match column labels")
        return cls(tuple(str(i) for i in df.index), df.to_numpy(dtype=np.int8))


def labels_from_icio(tensor: IcioTensor) -> LabelMatrix:
    """Cleaned tensor -> industry flows -> intensity index -> binary labels."""
    return LabelMatrix(tensor.industries, binarize_ti(trade_intensity(industry_flows(tensor))))
