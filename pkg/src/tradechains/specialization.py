"""Revealed-comparative-advantage style specialization measures.

A location counts as specialized in a product when its share of the product
exceeds what its overall size would predict. Both export and import flows get
the same double normalization; the result is a dense location x product table
that every downstream stage queries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .ingest import TradeTable

DIRECTIONS = ("export", "import")

# Column order of the canonical CSV dump.
TABLE_COLUMNS = [
    "geography",
    "value_imp",
    "product",
    "geography_imp",
    "product_imp",
    "rca_imp",
    "value_exp",
    "geography_exp",
    "product_exp",
    "rca_exp",
]


def double_normalize(flows: np.ndarray) -> np.ndarray:
    """Specialization ratios for one location x product flow matrix.

    ratio = (X_lp / row_total_l) / (col_total_p / grand_total). Rows or
    columns with zero totals yield 0 instead of dividing by zero, so sparse
    products never poison the table.
    """
    x = np.asarray(flows, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"flow matrix must be 2-D, got shape {x.shape}")
    if np.any(x < 0):
        raise ValueError("flow matrix contains negative values")
    row = x.sum(axis=1)
    col = x.sum(axis=0)
    total = row.sum()
    if total == 0:
        raise ValueError("all-zero flow matrix: no specialization defined")
    with np.errstate(divide="ignore", invalid="ignore"):
        local_share = np.where(row[:, None] > 0, x / row[:, None], 0.0)
        global_share = np.where(col > 0, col / total, 0.0)
        out = np.where(global_share > 0, local_share / global_share, 0.0)
    return out


@dataclass(frozen=True)
class SpecializationTable:
    """Dense per-(location, product) flows, totals and specialization ratios.

    Immutable after construction; all queries are read-only. Locations and
    products are kept sorted so that positional indices give deterministic,
    name-ascending tie-breaks everywhere downstream.
    """

    locations: tuple[str, ...]
    products: tuple[str, ...]
    value_exp: np.ndarray  # locations x products, USD
    value_imp: np.ndarray
    rca_exp: np.ndarray
    rca_imp: np.ndarray
    loc_index: dict[str, int] = field(repr=False, default_factory=dict)
    prod_index: dict[str, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        shape = (len(self.locations), len(self.products))
        for name in ("value_exp", "value_imp", "rca_exp", "rca_imp"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
        object.__setattr__(self, "loc_index", {l: i for i, l in enumerate(self.locations)})
        object.__setattr__(self, "prod_index", {p: j for j, p in enumerate(self.products)})
        for arr in (self.value_exp, self.value_imp, self.rca_exp, self.rca_imp):
            arr.setflags(write=False)

    # -- totals -------------------------------------------------------------

    @property
    def geography_exp(self) -> np.ndarray:
        return self.value_exp.sum(axis=1)

    @property
    def geography_imp(self) -> np.ndarray:
        return self.value_imp.sum(axis=1)

    @property
    def product_exp(self) -> np.ndarray:
        return self.value_exp.sum(axis=0)

    @property
    def product_imp(self) -> np.ndarray:
        return self.value_imp.sum(axis=0)

    def rca(self, direction: str) -> np.ndarray:
        if direction == "export":
            return self.rca_exp
        if direction == "import":
            return self.rca_imp
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_matrices(
        cls,
        locations,
        products,
        value_exp: np.ndarray,
        value_imp: np.ndarray,
    ) -> "SpecializationTable":
        """Build from aligned export/import matrices (rows follow `locations`)."""
        locations = list(locations)
        products = list(products)
        if len(set(locations)) != len(locations):
            raise ValueError("duplicate location names")
        if len(set(products)) != len(products):
            raise ValueError("duplicate product names")
        exp = np.asarray(value_exp, dtype=np.float64)
        imp = np.asarray(value_imp, dtype=np.float64)
        loc_order = np.argsort(np.asarray(locations, dtype=object))
        prod_order = np.argsort(np.asarray(products, dtype=object))
        exp = exp[np.ix_(loc_order, prod_order)].copy()
        imp = imp[np.ix_(loc_order, prod_order)].copy()
        locs = tuple(locations[i] for i in loc_order)
        prods = tuple(products[j] for j in prod_order)
        rca_exp = double_normalize(exp) if exp.sum() > 0 else np.zeros_like(exp)
        rca_imp = double_normalize(imp) if imp.sum() > 0 else np.zeros_like(imp)
        return cls(locs, prods, exp, imp, rca_exp, rca_imp)

    @classmethod
    def from_trade(cls, trade: TradeTable) -> "SpecializationTable":
        locs = sorted(set(trade.records["geography"]))
        prods = sorted(set(trade.records["product"]))
        li = {l: i for i, l in enumerate(locs)}
        pj = {p: j for j, p in enumerate(prods)}
        exp = np.zeros((len(locs), len(prods)))
        imp = np.zeros((len(locs), len(prods)))
        rows = trade.records
        i = rows["geography"].map(li).to_numpy()
        j = rows["product"].map(pj).to_numpy()
        exp[i, j] = rows["value_exp"].to_numpy()
        imp[i, j] = rows["value_imp"].to_numpy()
        return cls.from_matrices(locs, prods, exp, imp)

    # -- queries --------------------------------------------------------------

    def specialized_locations(
        self, product: str, threshold: float, direction: str = "export"
    ) -> list[str]:
        """Locations with specialization >= threshold, strongest first.

        Ties broken by location name ascending so output order is stable.
        """
        if product not in self.prod_index:
            raise KeyError(f"unknown product: {product!r}")
        col = self.rca(direction)[:, self.prod_index[product]]
        hits = [(float(col[i]), self.locations[i]) for i in np.flatnonzero(col >= threshold)]
        hits.sort(key=lambda t: (-t[0], t[1]))
        return [name for _, name in hits]

    # -- CSV round trip ---------------------------------------------------------

    def to_frame(self) -> pd.DataFrame:
        """Long-form dump with one row per (geography, product)."""
        nl, np_ = len(self.locations), len(self.products)
        geo = np.repeat(np.asarray(self.locations, dtype=object), np_)
        prod = np.tile(np.asarray(self.products, dtype=object), nl)
        return pd.DataFrame(
            {
                "geography": geo,
                "value_imp": self.value_imp.ravel(),
                "product": prod,
                "geography_imp": np.repeat(self.geography_imp, np_),
                "product_imp": np.tile(self.product_imp, nl),
                "rca_imp": self.rca_imp.ravel(),
                "value_exp": self.value_exp.ravel(),
                "geography_exp": np.repeat(self.geography_exp, np_),
                "product_exp": np.tile(self.product_exp, nl),
                "rca_exp": self.rca_exp.ravel(),
            }
        )[TABLE_COLUMNS]

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path) -> "SpecializationTable":
        df = pd.read_csv(path, dtype={"geography": str, "product": str})
        missing = {"geography", "product", "value_imp", "value_exp"} - set(df.columns)
        if missing:
            raise ValueError(f"specialization CSV missing columns: {sorted(missing)}")
        locs = sorted(set(df["geography"]))
        prods = sorted(set(df["product"]))
        li = {l: i for i, l in enumerate(locs)}
        pj = {p: j for j, p in enumerate(prods)}
        exp = np.zeros((len(locs), len(prods)))
        imp = np.zeros((len(locs), len(prods)))
        i = df["geography"].map(li).to_numpy()
        j = df["product"].map(pj).to_numpy()
        exp[i, j] = df["value_exp"].to_numpy(dtype=np.float64)
        imp[i, j] = df["value_imp"].to_numpy(dtype=np.float64)
        return cls.from_matrices(locs, prods, exp, imp)


def rca_matrix(trade: TradeTable, direction: str = "export") -> SpecializationTable:
    """Specialization table for a trade table.

    `direction` names the flow side that must carry signal: an all-zero matrix
    on that side is an error. The other side is still computed when present
    (zero-denominator rows simply score 0).
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    table = SpecializationTable.from_trade(trade)
    flows = table.value_exp if direction == "export" else table.value_imp
    if flows.size == 0 or flows.sum() == 0:
        raise ValueError(f"all-zero {direction} flow matrix: no specialization defined")
    return table


def specialized_locations(
    table: SpecializationTable, product: str, threshold: float, direction: str = "export"
) -> list[str]:
    return table.specialized_locations(product, threshold, direction)
