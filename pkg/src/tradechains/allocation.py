"""Split country-level import flows into region-to-region, product-to-product
estimates by proportional allocation.

For an observed import of input product p1 by region r2 from country c1, the
flow is split across c1's exporting regions in proportion to their share of
p1 exports to r2's country, and across r2's output products (those linked to
p1) in proportion to r2's export mix. The dense four-way tensor is never
materialized; entries stream out sparsely.
"""

from __future__ import annotations

import csv
import gzip
import json
from dataclasses import dataclass, field

import pandas as pd

from .icio import LabelMatrix
from .inference import LinkSet
from .specialization import SpecializationTable

EXPORT_COLUMNS = ["region", "product", "country", "value"]
IMPORT_COLUMNS = ["country", "product", "region", "value"]
ENTRY_COLUMNS = ["origin_region", "input_product", "dest_region", "output_product", "usd"]


@dataclass(frozen=True)
class AllocationEntry:
    origin_region: str
    input_product: str
    dest_region: str
    output_product: str
    usd: float


@dataclass
class AllocationReport:
    """Reconciliation counters filled while the entry stream is consumed."""

    emitted: int = 0
    emitted_usd: float = 0.0
    imports_seen: int = 0
    imports_usd: float = 0.0
    skipped_no_exporter: int = 0
    skipped_no_exporter_usd: float = 0.0


@dataclass(frozen=True)
class BilateralFlowTable:
    """Region->country export records and country->region import records.

    `region_country` maps every region to its parent country; records where
    the partner country equals the region's own country are rejected (the
    model only allocates cross-border flows).
    """

    exports_to_country: pd.DataFrame = field(repr=False)
    imports_from_country: pd.DataFrame = field(repr=False)
    region_country: dict[str, str] = field(repr=False)

    def __post_init__(self):
        exp = self.exports_to_country.loc[:, EXPORT_COLUMNS].reset_index(drop=True)
        imp = self.imports_from_country.loc[:, IMPORT_COLUMNS].reset_index(drop=True)
        for name, df in (("exports", exp), ("imports", imp)):
            if (df["value"] < 0).any():
                bad = df.loc[df["value"] < 0].iloc[0]
                raise ValueError(f"negative {name} value: {bad.to_dict()}")
        unknown = sorted(
            (set(exp["region"]) | set(imp["region"])) - set(self.region_country)
        )
        if unknown:
            raise KeyError(f"regions with unknown parent country: {unknown}")
        own_exp = exp["country"] == exp["region"].map(self.region_country)
        if own_exp.any():
            raise ValueError(
                f"domestic export records present (region to own country): "
                f"{exp.loc[own_exp, 'region'].tolist()[:5]}"
            )
        own_imp = imp["country"] == imp["region"].map(self.region_country)
        if own_imp.any():
            raise ValueError(
                f"domestic import records present (region from own country): "
                f"{imp.loc[own_imp, 'region'].tolist()[:5]}"
            )
        object.__setattr__(self, "exports_to_country", exp)
        object.__setattr__(self, "imports_from_country", imp)

    @classmethod
    def from_csv(cls, exports_path, imports_path, region_country_path) -> "BilateralFlowTable":
        exp = pd.read_csv(exports_path, dtype={"region": str, "product": str, "country": str})
        imp = pd.read_csv(imports_path, dtype={"country": str, "product": str, "region": str})
        rc = pd.read_csv(region_country_path, dtype=str)
        return cls(exp, imp, dict(zip(rc["region"], rc["country"])))


def _outputs_of(links: LinkSet | LabelMatrix) -> dict[str, list[str]]:
    """input product -> linked output products, sorted."""
    out: dict[str, list[str]] = {}
    if isinstance(links, LabelMatrix):
        for i, input_product in enumerate(links.industries):
            hits = [links.industries[j] for j in range(len(links.industries)) if links.values[i, j]]
            if hits:
                out[input_product] = hits
    else:
        for link in links:
            out.setdefault(link.input, []).append(link.output)
        for key in out:
            out[key] = sorted(out[key])
    return out


def allocate(
    links: LinkSet | LabelMatrix,
    flows: BilateralFlowTable,
    table: SpecializationTable,
    renormalize: bool = False,
    report: AllocationReport | None = None,
):
    """Yield sparse region/product flow estimates, deterministically ordered.

    For each import record (c1, p1 -> r2) and each linked output p2:
        estimate(r1, p2) = exporter_share(r1) * output_share(p2) * import_value
    exporter_share is r1's share of c1's p1 exports to r2's country;
    output_share is p2's share of r2's exports (over all products, or over
    just the linked set when `renormalize` is set). Import records whose
    exporter-side total is zero are skipped and counted in `report`.
    """
    link_outputs = _outputs_of(links)

    exp = flows.exports_to_country
    origin_country = exp["region"].map(flows.region_country)
    groups: dict[tuple[str, str, str], list[tuple[str, float]]] = {}
    for (c1, p1, c2), sub in exp.groupby([origin_country, "product", "country"], sort=True):
        pairs = sorted(zip(sub["region"], sub["value"]))
        groups[(c1, p1, c2)] = pairs

    imports = flows.imports_from_country.sort_values(
        ["country", "product", "region"], kind="stable"
    )

    for row in imports.itertuples(index=False):
        c1, p1, r2, value = row.country, row.product, row.region, float(row.value)
        if report is not None:
            report.imports_seen += 1
            report.imports_usd += value
        if value == 0:
            continue
        outputs = link_outputs.get(p1, ())
        if not outputs:
            continue
        c2 = flows.region_country[r2]
        exporters = groups.get((c1, p1, c2), ())
        denom = 0.0
        for _, v in exporters:
            denom += v
        if denom == 0:
            if report is not None:
                report.skipped_no_exporter += 1
                report.skipped_no_exporter_usd += value
            continue

        if r2 not in table.loc_index:
            continue
        r2_idx = table.loc_index[r2]
        out_values = []
        for p2 in outputs:
            j = table.prod_index.get(p2)
            if j is None:
                continue
            v2 = float(table.value_exp[r2_idx, j])
            if v2 > 0:
                out_values.append((p2, v2))
        if not out_values:
            continue
        share_base = sum(v for _, v in out_values) if renormalize else float(table.geography_exp[r2_idx])
        if share_base == 0:
            continue

        for r1, v1 in exporters:
            if v1 == 0:
                continue
            exporter_share = v1 / denom
            for p2, v2 in out_values:
                usd = exporter_share * (v2 / share_base) * value
                if report is not None:
                    report.emitted += 1
                    report.emitted_usd += usd
                yield AllocationEntry(
                    origin_region=r1,
                    input_product=p1,
                    dest_region=r2,
                    output_product=p2,
                    usd=usd,
                )


def write_allocations(entries, path, fmt: str = "csv") -> None:
    """Write the entry stream as CSV or JSON lines; .gz paths are compressed."""
    path = str(path)
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "wt", encoding="utf-8", newline="") as fh:
        if fmt == "csv":
            writer = csv.writer(fh)
            writer.writerow(ENTRY_COLUMNS)
            for e in entries:
                writer.writerow(
                    [e.origin_region, e.input_product, e.dest_region, e.output_product, repr(e.usd)]
                )
        elif fmt == "jsonl":
            for e in entries:
                fh.write(
                    json.dumps(
                        {
                            "origin_region": e.origin_region,
                            "input_product": e.input_product,
                            "dest_region": e.dest_region,
                            "output_product": e.output_product,
                            "usd": e.usd,
                        }
                    )
                    + "\n"
                )
        else:
            raise ValueError(f"unknown format {fmt!r}; use 'csv' or 'jsonl'")
