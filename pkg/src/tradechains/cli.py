"""Command-line pipeline with file-based stages.

Every stage reads and writes plain files, so any step can be re-run or
swapped. Typical flow:

  tradechains ingest --input trade_2017.csv trade_2018.csv \
      --exclude-file excluded_regions.txt --import-floor 1e8 --export-floor 1e9 \
      --out trade.csv
  tradechains rca --input trade.csv --out specialization.csv
  tradechains infer --input specialization.csv --params 2,1.5,3.5,2 --k 3 --out links.jsonl
  tradechains labels --icio icio_2016.csv icio_2017.csv icio_2018.csv --out oecd/
  tradechains tune --input oecd/icio_specialization.csv --labels oecd/labels.csv \
      --grid 1:6:0.5 --jobs 8 --out leaderboard.csv
  tradechains allocate --links links.jsonl --exports exports.csv --imports imports.csv \
      --region-country regions.csv --input specialization.csv --out flows.csv
  tradechains bench --noise 0.3 --seeds 20 --out metrics.csv
  tradechains export-graph --links links.jsonl --dot links.dot --edges edges.csv

Flags override values from --config (a JSON file keyed by flag name);
TRADECHAINS_JOBS sets the parallelism degree when --jobs is absent.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import pandas as pd

from . import linkio
from .allocation import AllocationReport, BilateralFlowTable, allocate, write_allocations
from .evalbench import (
    HitRates,
    SynthWorldConfig,
    hit_rates,
    random_baseline,
    read_truth_csv,
    synth_world,
    write_hit_rates_csv,
)
from .icio import LabelMatrix, clean_icio, icio_specialization, labels_from_icio, load_icio_csv
from .inference import ParamSet, infer_all
from .ingest import CleaningPolicy, TradeTable, filter_regions, parse_regional_trade, reconcile_products
from .specialization import SpecializationTable, rca_matrix
from .tuning import GridSpec, grid_search, write_leaderboard

JOBS_ENV = "TRADECHAINS_JOBS"
BASELINE_SEED_OFFSET = 987654321  # decorrelates baseline sampling from world generation


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    return cfg


def _setting(args, cfg: dict, name: str, default=None):
    """Flag value if given, else config value, else default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in cfg:
        return cfg[name]
    return default


def _resolve_jobs(args, cfg: dict) -> int:
    if getattr(args, "jobs", None) is not None:
        return args.jobs
    env = os.environ.get(JOBS_ENV)
    if env:
        return int(env)
    if "jobs" in cfg:
        return int(cfg["jobs"])
    return os.cpu_count() or 1


def _parse_params(text: str, n: int, k: int) -> ParamSet:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 4:
        raise ValueError(f"--params needs 4 comma-separated thresholds, got {text!r}")
    return ParamSet(*parts, n=n, k=k)


def _parse_grid(text: str) -> GridSpec:
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ValueError(f"--grid must be lo:hi:step, got {text!r}") from None
    return GridSpec.from_range(lo, hi, step)


def _params_from(args, cfg) -> ParamSet:
    n = int(_setting(args, cfg, "n", 10))
    k = int(_setting(args, cfg, "k", 3))
    text = _setting(args, cfg, "params")
    if text is None:
        return ParamSet(n=n, k=k)
    return _parse_params(str(text), n, k)


# -- subcommands -------------------------------------------------------------


def cmd_ingest(args, cfg) -> int:
    tables = []
    for path in args.input:
        with open(path, "rb") as fh:
            tables.append(parse_regional_trade(fh))
    records = pd.concat([t.records for t in tables], ignore_index=True)
    table = TradeTable.from_records(records)
    n_before = len(table.geographies)

    excluded: tuple[str, ...] = ()
    exclude_file = _setting(args, cfg, "exclude_file")
    if exclude_file:
        excluded = tuple(
            line.strip() for line in Path(exclude_file).read_text(encoding="utf-8").splitlines() if line.strip()
        )
    policy = CleaningPolicy(
        excluded_geographies=excluded,
        import_floor=float(_setting(args, cfg, "import_floor", 0.0)),
        export_floor=float(_setting(args, cfg, "export_floor", 0.0)),
        combine=str(_setting(args, cfg, "combine", "or")),
    )
    table = filter_regions(table, policy)
    if not args.no_reconcile:
        table = reconcile_products(table)
    table.to_csv(args.out)
    print(
        f"ingested {len(table)} records: {n_before} -> {len(table.geographies)} regions, "
        f"{len(table.products)} products -> {args.out}"
    )
    return 0


def cmd_rca(args, cfg) -> int:
    trade = TradeTable.from_csv(args.input)
    table = rca_matrix(trade, direction=args.direction)
    table.to_csv(args.out)
    print(f"specialization table {len(table.locations)} x {len(table.products)} -> {args.out}")
    return 0


def cmd_infer(args, cfg) -> int:
    table = SpecializationTable.from_csv(args.input)
    params = _params_from(args, cfg)
    links = infer_all(table, params, worst_rank_mode=args.worst_rank)
    linkio.write_jsonl(links, args.out)
    print(f"{len(links)} links for {len(links.outputs())} outputs -> {args.out}")
    return 0


def cmd_labels(args, cfg) -> int:
    raw = load_icio_csv(args.icio)
    merge_text = _setting(args, cfg, "merge_countries")
    # None -> library default; explicit empty string -> no merging at all
    merge = None if merge_text is None else dict(
        item.split(":", 1) for item in str(merge_text).split(",") if item
    )
    drop_countries = tuple(x for x in str(_setting(args, cfg, "drop_countries", "ROW")).split(",") if x)
    drop_industries = tuple(x for x in str(_setting(args, cfg, "drop_industries", "97T98")).split(",") if x)
    tensor = clean_icio(
        raw,
        merge_countries=merge,
        drop_countries=drop_countries,
        drop_industries=drop_industries,
        zero_domestic=not args.keep_domestic,
    )
    if args.expect_countries or args.expect_industries:
        tensor.check_dimensions(
            args.expect_countries or len(tensor.countries),
            args.expect_industries or len(tensor.industries),
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    labels_from_icio(tensor).to_csv(out / "labels.csv")
    icio_specialization(tensor).to_csv(out / "icio_specialization.csv")
    print(
        f"cleaned tensor {tensor.n_pairs} x {tensor.n_pairs} "
        f"({len(tensor.countries)} countries x {len(tensor.industries)} industries) -> {out}/"
    )
    return 0


def cmd_tune(args, cfg) -> int:
    table = SpecializationTable.from_csv(args.input)
    labels = LabelMatrix.from_csv(args.labels)
    grid_text = _setting(args, cfg, "grid")
    grid = _parse_grid(str(grid_text)) if grid_text else GridSpec()
    results = grid_search(
        table,
        labels,
        grid,
        n=int(_setting(args, cfg, "n", 10)),
        k=int(_setting(args, cfg, "k", 3)),
        jobs=_resolve_jobs(args, cfg),
        worst_rank_mode=args.worst_rank,
        checkpoint_path=args.checkpoint,
        checkpoint_every=args.checkpoint_every,
    )
    write_leaderboard(results, args.out)
    best = results[0]
    print(
        f"best params {best.params.thresholds} precision {best.precision:.4f} "
        f"(tp {best.tp}, fp {best.fp}) over {len(results)} combinations -> {args.out}"
    )
    return 0


def cmd_allocate(args, cfg) -> int:
    if bool(args.links) == bool(args.label_matrix):
        raise ValueError("give exactly one of --links or --label-matrix")
    links = linkio.read_jsonl(args.links) if args.links else LabelMatrix.from_csv(args.label_matrix)
    flows = BilateralFlowTable.from_csv(args.exports, args.imports, args.region_country)
    table = SpecializationTable.from_csv(args.input)
    report = AllocationReport()
    entries = allocate(links, flows, table, renormalize=args.renormalize, report=report)
    write_allocations(entries, args.out, fmt=args.format)
    print(
        f"{report.emitted} entries ({report.emitted_usd:.2f} USD) from "
        f"{report.imports_seen} import records; skipped {report.skipped_no_exporter} "
        f"with no matching exporter ({report.skipped_no_exporter_usd:.2f} USD) -> {args.out}"
    )
    return 0


def _read_lines(path) -> list[str]:
    return [l.strip() for l in Path(path).read_text(encoding="utf-8").splitlines() if l.strip()]


def cmd_bench(args, cfg) -> int:
    params = _params_from(args, cfg)
    seed0 = int(_setting(args, cfg, "seed", 0))
    if args.truth:
        # file mode: score an existing prediction against a supplied truth file
        if not args.pred:
            raise ValueError("--truth needs --pred (links JSONL to score)")
        truth = read_truth_csv(args.truth)
        if args.product_filter:
            keep = set(_read_lines(args.product_filter))
            truth = truth.restricted_to(keep)
        outputs = truth.outputs()
        pred = linkio.read_jsonl(args.pred).restricted_to(outputs)
        rows = {"backward_forward": hit_rates(pred, truth)}
        if args.products_file:
            universe = _read_lines(args.products_file)
            base = random_baseline(universe, params.k, seed=seed0 + BASELINE_SEED_OFFSET)
            rows["baseline"] = hit_rates(base.restricted_to(outputs), truth)
        if args.out:
            write_hit_rates_csv(rows, args.out)
        for model, hr in rows.items():
            print(
                f"{model}: >=1 {hr.at_least_1:.3f}  >=2 {hr.at_least_2:.3f}  "
                f">=3 {hr.at_least_3:.3f}  ({hr.n_outputs} outputs)"
            )
        return 0

    n_seeds = int(_setting(args, cfg, "seeds", 1))
    bf_rates: list[HitRates] = []
    base_rates: list[HitRates] = []
    for i in range(n_seeds):
        world_cfg = SynthWorldConfig(
            regions=args.regions,
            products=args.products,
            links=args.links,
            strength=args.strength,
            noise=args.noise,
            seed=seed0 + i,
        )
        trade, truth = synth_world(world_cfg)
        table = rca_matrix(trade)
        outputs = truth.outputs()
        pred = infer_all(table, params, worst_rank_mode=args.worst_rank).restricted_to(outputs)
        base = random_baseline(table.products, params.k, seed=seed0 + i + BASELINE_SEED_OFFSET)
        bf_rates.append(hit_rates(pred, truth))
        base_rates.append(hit_rates(base.restricted_to(outputs), truth))

    def mean(rates: list[HitRates]) -> HitRates:
        m = len(rates)
        return HitRates(
            at_least_1=sum(r.at_least_1 for r in rates) / m,
            at_least_2=sum(r.at_least_2 for r in rates) / m,
            at_least_3=sum(r.at_least_3 for r in rates) / m,
            n_outputs=sum(r.n_outputs for r in rates),
        )

    rows = {"backward_forward": mean(bf_rates), "baseline": mean(base_rates)}
    if args.out:
        write_hit_rates_csv(rows, args.out)
    for model, hr in rows.items():
        print(
            f"{model}: >=1 {hr.at_least_1:.3f}  >=2 {hr.at_least_2:.3f}  "
            f">=3 {hr.at_least_3:.3f}  ({n_seeds} worlds)"
        )
    return 0


def cmd_export_graph(args, cfg) -> int:
    links = linkio.read_jsonl(args.links)
    if not args.dot and not args.edges:
        raise ValueError("give at least one of --dot or --edges")
    if args.dot:
        linkio.write_dot(links, args.dot)
        print(f"{len(links)} edges -> {args.dot}")
    if args.edges:
        linkio.write_edge_csv(links, args.edges)
        print(f"{len(links)} edges -> {args.edges}")
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tradechains",
        description="Infer product-level value-chain links from regional trade specialization.",
    )
    parser.add_argument("--config", help="JSON file with default flag values")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("ingest", help="parse and clean regional trade CSVs into one canonical table")
    p.add_argument("--input", nargs="+", required=True, help="trade CSV files (summed)")
    p.add_argument("--exclude-file", help="file with one region name to drop per line")
    p.add_argument("--import-floor", type=float, help="drop regions importing less in total (USD)")
    p.add_argument("--export-floor", type=float, help="drop regions exporting less in total (USD)")
    p.add_argument("--combine", choices=("or", "and"), help="how the two floor cuts combine (default or)")
    p.add_argument("--no-reconcile", action="store_true", help="keep products missing on one flow side")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("rca", help="compute the specialization table from a canonical trade CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--direction", choices=("export", "import"), default="export")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rca)

    p = sub.add_parser("infer", help="infer top-k input products for every product")
    p.add_argument("--input", required=True, help="specialization table CSV")
    p.add_argument("--params", help="rca_locations_1,rca_industries_1,rca_locations_2,rca_industries_2")
    p.add_argument("--n", type=int, help="candidate-list length (default 10)")
    p.add_argument("--k", type=int, help="inputs to emit per output (default 3)")
    p.add_argument("--worst-rank", choices=("observed", "fixed"), default="observed")
    p.add_argument("--out", required=True, help="links JSONL path")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("labels", help="clean inter-country IO tables into labels + specialization")
    p.add_argument("--icio", nargs="+", required=True, help="matrix CSVs, one per year (summed)")
    p.add_argument("--merge-countries", help="e.g. CN1:CHN,CN2:CHN,MX1:MEX,MX2:MEX (default)")
    p.add_argument("--drop-countries", help="comma-separated country codes (default ROW)")
    p.add_argument("--drop-industries", help="comma-separated industry codes (default 97T98)")
    p.add_argument("--keep-domestic", action="store_true", help="do not zero same-country blocks")
    p.add_argument("--expect-countries", type=int, help="fail unless this many countries remain")
    p.add_argument("--expect-industries", type=int, help="fail unless this many industries remain")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_labels)

    p = sub.add_parser("tune", help="grid-search thresholds against a label matrix")
    p.add_argument("--input", required=True, help="specialization table CSV")
    p.add_argument("--labels", required=True, help="label matrix CSV")
    p.add_argument("--grid", help="lo:hi:step applied to all four thresholds (default 1:6:0.5)")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--jobs", type=int, help=f"parallel workers (or ${JOBS_ENV}; default all cores)")
    p.add_argument("--worst-rank", choices=("observed", "fixed"), default="observed")
    p.add_argument("--checkpoint", help="partial leaderboard CSV path")
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("--out", required=True, help="leaderboard CSV path")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("allocate", help="estimate region-to-region product flows")
    p.add_argument("--links", help="links JSONL from `infer`")
    p.add_argument("--label-matrix", help="binary label matrix CSV (alternative to --links)")
    p.add_argument("--exports", required=True, help="CSV region,product,country,value")
    p.add_argument("--imports", required=True, help="CSV country,product,region,value")
    p.add_argument("--region-country", required=True, help="CSV region,country")
    p.add_argument("--input", required=True, help="specialization table CSV (export shares)")
    p.add_argument("--renormalize", action="store_true", help="renormalize output shares over linked products")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("bench", help="score inference and a random baseline on synthetic worlds")
    p.add_argument("--truth", help="truth CSV (output,input); switches to scoring an existing prediction")
    p.add_argument("--pred", help="links JSONL to score against --truth")
    p.add_argument("--product-filter", help="file of output products to restrict the truth universe to")
    p.add_argument("--products-file", help="product universe for the baseline in --truth mode")
    p.add_argument("--regions", type=int, default=30)
    p.add_argument("--products", type=int, default=15)
    p.add_argument("--links", type=int, default=8)
    p.add_argument("--strength", type=float, default=5.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seeds", type=int, help="number of worlds (default 1)")
    p.add_argument("--seed", type=int, help="first world seed (default 0)")
    p.add_argument("--params", help="thresholds a,b,c,d (default 2,1.5,3.5,2)")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--worst-rank", choices=("observed", "fixed"), default="observed")
    p.add_argument("--out", help="metrics CSV path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-graph", help="write a link set as DOT and/or edge-list CSV")
    p.add_argument("--links", required=True, help="links JSONL")
    p.add_argument("--dot", help="DOT output path")
    p.add_argument("--edges", help="edge-list CSV output path")
    p.set_defaults(func=cmd_export_graph)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        return args.func(args, cfg)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
