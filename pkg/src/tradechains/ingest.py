"""Parse, clean and aggregate regional trade CSVs into one canonical table.

Input files are long-form: one row per (geography, product, year) with import
and export values in USD. Rows are summed across years into a single record
per (geography, product); per-location and per-product totals are always
recomputed from the records so they can never drift.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import pandas as pd

REQUIRED_COLUMNS = ("geography", "product", "value_imp", "value_exp", "year")

# Column mapping used when the file already follows the canonical header.
IDENTITY_SCHEMA = {name: name for name in REQUIRED_COLUMNS}

RECORD_COLUMNS = ["geography", "product", "value_imp", "value_exp"]


class TradeDataError(ValueError):
    """Raised for malformed or contract-violating trade input."""


@dataclass(frozen=True)
class CleaningPolicy:
    """Region filter settings.

    `combine="or"` removes a region when either tail cut triggers (imports
    below the import floor, or exports below the export floor); "and"
    requires both.
    """

    excluded_geographies: tuple[str, ...] = ()
    import_floor: float = 0.0
    export_floor: float = 0.0
    combine: str = "or"

    def __post_init__(self):
        if self.import_floor < 0 or self.export_floor < 0:
            raise ValueError("floors must be >= 0")
        if self.combine not in ("or", "and"):
            raise ValueError(f"combine must be 'or' or 'and', got {self.combine!r}")
        object.__setattr__(self, "excluded_geographies", tuple(self.excluded_geographies))


@dataclass(frozen=True)
class TradeTable:
    """Aggregated (geography, product) flow records plus derived totals."""

    records: pd.DataFrame = field(repr=False)
    geography_exp: pd.Series = field(repr=False)
    geography_imp: pd.Series = field(repr=False)
    product_exp: pd.Series = field(repr=False)
    product_imp: pd.Series = field(repr=False)

    @classmethod
    def from_records(cls, records: pd.DataFrame) -> "TradeTable":
        """Aggregate duplicate (geography, product) rows and recompute totals."""
        df = records.loc[:, RECORD_COLUMNS].copy()
        if len(df):
            df = (
                df.groupby(["geography", "product"], as_index=False)[["value_imp", "value_exp"]]
                .sum()
                .loc[:, RECORD_COLUMNS]
            )
            df = df.sort_values(["geography", "product"], kind="stable", ignore_index=True)
        geo = df.groupby("geography")[["value_exp", "value_imp"]].sum()
        prod = df.groupby("product")[["value_exp", "value_imp"]].sum()
        return cls(
            records=df,
            geography_exp=geo["value_exp"],
            geography_imp=geo["value_imp"],
            product_exp=prod["value_exp"],
            product_imp=prod["value_imp"],
        )

    @classmethod
    def empty(cls) -> "TradeTable":
        return cls.from_records(
            pd.DataFrame({c: pd.Series(dtype=(object if c in ("geography", "product") else float))
                          for c in RECORD_COLUMNS})
        )

    def __len__(self) -> int:
        return len(self.records)

    @property
    def geographies(self) -> list[str]:
        return list(self.geography_exp.index)

    @property
    def products(self) -> list[str]:
        return list(self.product_exp.index)

    def to_csv(self, path) -> None:
        self.records.to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path) -> "TradeTable":
        df = pd.read_csv(path, dtype={"geography": str, "product": str})
        missing = set(RECORD_COLUMNS) - set(df.columns)
        if missing:
            raise TradeDataError(f"trade CSV missing columns: {sorted(missing)}")
        return cls.from_records(df)


def parse_regional_trade(stream, schema: dict[str, str] | None = None) -> TradeTable:
    """Read a regional trade CSV into a TradeTable.

    `stream` is a binary or text file object with a header row. `schema` maps
    canonical column names (geography, product, value_imp, value_exp, year) to
    the file's actual column names; omitted entries default to the canonical
    name. Extra columns in the file are ignored. Values are summed across
    years per (geography, product).
    """
    schema = {**IDENTITY_SCHEMA, **(schema or {})}
    unknown = set(schema) - set(REQUIRED_COLUMNS)
    if unknown:
        raise TradeDataError(
            f"unknown schema keys {sorted(unknown)}; expected a mapping over {list(REQUIRED_COLUMNS)}"
        )
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    if isinstance(stream.read(0), bytes):
        # utf-8-sig: exported spreadsheets often lead with a BOM
        stream = io.TextIOWrapper(stream, encoding="utf-8-sig", newline="")

    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise TradeDataError("empty input: no header row") from None

    positions = {}
    for canonical in REQUIRED_COLUMNS:
        actual = schema[canonical]
        if actual not in header:
            raise TradeDataError(
                f"column {actual!r} (for {canonical!r}) not in header {header}; "
                f"expected columns for {list(REQUIRED_COLUMNS)}"
            )
        positions[canonical] = header.index(actual)

    width = max(positions.values()) + 1
    flows: dict[tuple[str, str], list[float]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) < width:
            raise TradeDataError(f"line {lineno}: expected at least {width} fields, got {len(row)}")
        geography = row[positions["geography"]].strip()
        product = row[positions["product"]].strip()
        if not geography or not product:
            raise TradeDataError(f"line {lineno}: empty geography or product")
        values = {}
        for name in ("value_imp", "value_exp"):
            raw = row[positions[name]].strip()
            try:
                values[name] = float(raw) if raw else 0.0
            except ValueError:
                raise TradeDataError(f"line {lineno}: non-numeric {name}: {raw!r}") from None
            if values[name] < 0:
                raise TradeDataError(f"line {lineno}: negative {name}: {values[name]}")
        raw_year = row[positions["year"]].strip()
        try:
            int(float(raw_year))
        except ValueError:
            raise TradeDataError(f"line {lineno}: non-integer year: {raw_year!r}") from None
        key = (geography, product)
        cell = flows.setdefault(key, [0.0, 0.0])
        cell[0] += values["value_imp"]
        cell[1] += values["value_exp"]

    keys = sorted(flows)
    df = pd.DataFrame(
        {
            "geography": [k[0] for k in keys],
            "product": [k[1] for k in keys],
            "value_imp": [flows[k][0] for k in keys],
            "value_exp": [flows[k][1] for k in keys],
        }
    )
    if df.empty:
        return TradeTable.empty()
    return TradeTable.from_records(df)


def filter_regions(trade: TradeTable, policy: CleaningPolicy) -> TradeTable:
    """Drop excluded geographies and regions in the low-trade tails."""
    excluded = set(policy.excluded_geographies)
    imp = trade.geography_imp
    exp = trade.geography_exp
    below_imp = imp < policy.import_floor
    below_exp = exp < policy.export_floor
    tail = (below_imp | below_exp) if policy.combine == "or" else (below_imp & below_exp)
    drop = set(imp.index[tail]) | excluded
    if not drop:
        return trade
    kept = trade.records[~trade.records["geography"].isin(drop)]
    return TradeTable.from_records(kept)


def reconcile_products(trade: TradeTable) -> TradeTable:
    """Keep only products with positive global exports and positive global imports."""
    if not len(trade):
        return trade
    ok = (trade.product_exp > 0) & (trade.product_imp > 0)
    keep = set(ok.index[ok])
    kept = trade.records[trade.records["product"].isin(keep)]
    return TradeTable.from_records(kept)
