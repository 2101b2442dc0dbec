"""Validation harness: random baseline, hit-rate metrics, synthetic worlds.

The synthetic generator plants known input->output relationships into an
otherwise uniform trade table: for each planted link a dedicated region group
over-exports the output and over-imports the input. With no noise the planted
signal is unambiguous, which gives the inference a ground truth to be scored
against at desk scale.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .inference import Link, LinkSet
from .ingest import TradeTable

BASE_FLOW_USD = 100.0


@dataclass(frozen=True)
class HitRates:
    """Share of output products with at least 1 / 2 / 3 correct inputs."""

    at_least_1: float
    at_least_2: float
    at_least_3: float
    n_outputs: int

    def __post_init__(self):
        rates = (self.at_least_1, self.at_least_2, self.at_least_3)
        if not all(0.0 <= r <= 1.0 for r in rates):
            raise ValueError(f"hit rates must lie in [0, 1]: {rates}")
        if not (self.at_least_1 >= self.at_least_2 >= self.at_least_3):
            raise ValueError(f"hit rates must be non-increasing: {rates}")


@dataclass(frozen=True)
class SynthWorldConfig:
    regions: int = 30
    products: int = 15
    links: int = 8
    strength: float = 5.0
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if min(self.regions, self.products, self.links) < 1:
            raise ValueError("regions, products and links must be positive")
        if self.links + 1 > self.products:
            raise ValueError(f"{self.links} chained links need at least {self.links + 1} products")
        if self.regions < self.links:
            raise ValueError("need at least one region per planted link")
        if self.strength <= 1:
            raise ValueError("strength must exceed 1 (it multiplies baseline flows)")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise must lie in [0, 1]")


def random_baseline(products, k: int, seed: int = 0) -> LinkSet:
    """k distinct non-self inputs per product, sampled uniformly."""
    products = list(products)
    if k >= len(products):
        raise ValueError(f"k={k} must be smaller than the product count {len(products)}")
    rng = np.random.default_rng(seed)
    links = []
    for output in products:
        pool = [p for p in products if p != output]
        picks = rng.choice(len(pool), size=k, replace=False)
        for pos, idx in enumerate(picks, start=1):
            links.append(Link(output=output, input=pool[idx], merged_rank=0, backward_score=0))
    return LinkSet(tuple(links))


def read_truth_csv(path) -> LinkSet:
    """Load a ground-truth link file: CSV with columns output, input."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"output", "input"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"truth CSV missing columns: {sorted(missing)}")
        links = [
            Link(output=row["output"], input=row["input"], merged_rank=0, backward_score=0)
            for row in reader
        ]
    return LinkSet(tuple(links))


def write_truth_csv(links: LinkSet, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["output", "input"])
        for link in links:
            writer.writerow([link.output, link.input])


def hit_rates(pred: LinkSet, truth) -> HitRates:
    """Per-output overlap between predicted and true inputs, bucketed.

    `truth` is a LinkSet or a path to a truth CSV. Its outputs define the
    universe: predictions for outputs outside it are an error, outputs it
    names that the prediction missed count as zero hits.
    """
    if not isinstance(truth, LinkSet):
        truth = read_truth_csv(truth)
    true_outputs = set(l.output for l in truth)
    extra = sorted({l.output for l in pred} - true_outputs)
    if extra:
        raise ValueError(f"predicted outputs outside the truth universe: {extra}")
    if not true_outputs:
        raise ValueError("truth set names no output products")

    true_inputs: dict[str, set[str]] = {}
    for link in truth:
        true_inputs.setdefault(link.output, set()).add(link.input)
    pred_inputs: dict[str, set[str]] = {}
    for link in pred:
        pred_inputs.setdefault(link.output, set()).add(link.input)

    overlaps = [
        len(true_inputs[output] & pred_inputs.get(output, set())) for output in sorted(true_outputs)
    ]
    n = len(overlaps)
    return HitRates(
        at_least_1=sum(o >= 1 for o in overlaps) / n,
        at_least_2=sum(o >= 2 for o in overlaps) / n,
        at_least_3=sum(o >= 3 for o in overlaps) / n,
        n_outputs=n,
    )


def synth_world(cfg: SynthWorldConfig) -> tuple[TradeTable, LinkSet]:
    """Uniform trade table with planted specialization signals.

    Planted links form a chain over distinct products, so no product has two
    planted inputs and no region group serves two links. Each group's export
    of the link's output and import of its input are multiplied by
    `strength`; with `noise` > 0 every flow then gets an independent
    log-normal factor of that sigma.
    """
    rng = np.random.default_rng(cfg.seed)
    width = len(str(max(cfg.regions, cfg.products) - 1))
    regions = [f"R{i:0{width}d}" for i in range(cfg.regions)]
    products = [f"P{j:0{width}d}" for j in range(cfg.products)]

    exp = np.full((cfg.regions, cfg.products), BASE_FLOW_USD)
    imp = np.full((cfg.regions, cfg.products), BASE_FLOW_USD)

    chain = rng.permutation(cfg.products)[: cfg.links + 1]
    groups = np.array_split(rng.permutation(cfg.regions), cfg.links)
    planted = []
    for pos in range(cfg.links):
        input_j, output_j = int(chain[pos]), int(chain[pos + 1])
        group = groups[pos]
        exp[group, output_j] *= cfg.strength
        imp[group, input_j] *= cfg.strength
        planted.append(
            Link(output=products[output_j], input=products[input_j], merged_rank=0, backward_score=0)
        )

    if cfg.noise > 0:
        exp *= rng.lognormal(0.0, cfg.noise, size=exp.shape)
        imp *= rng.lognormal(0.0, cfg.noise, size=imp.shape)

    records = pd.DataFrame(
        {
            "geography": np.repeat(regions, cfg.products),
            "product": np.tile(products, cfg.regions),
            "value_imp": imp.ravel(),
            "value_exp": exp.ravel(),
        }
    )
    return TradeTable.from_records(records), LinkSet(tuple(planted))


def write_hit_rates_csv(rows: dict[str, HitRates], path) -> None:
    """One row per model: model, at_least_1, at_least_2, at_least_3, n_outputs."""
    frame = pd.DataFrame(
        [
            {
                "model": model,
                "at_least_1": hr.at_least_1,
                "at_least_2": hr.at_least_2,
                "at_least_3": hr.at_least_3,
                "n_outputs": hr.n_outputs,
            }
            for model, hr in rows.items()
        ]
    )
    frame.to_csv(path, index=False)
