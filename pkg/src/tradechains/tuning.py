"""Exhaustive threshold search scored by link-prediction precision.

Each grid point fixes the four specialization thresholds, runs the full
inference over a sector-level specialization table, and scores the predicted
input->output links against a binary label matrix. Precision counts each of
the k predicted inputs per output as one prediction.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import pandas as pd

from .icio import LabelMatrix
from .inference import LinkEngine, LinkSet, ParamSet
from .specialization import SpecializationTable

DEFAULT_GRID_VALUES = tuple(1.0 + 0.5 * i for i in range(10))  # [1, 6) step 0.5

LEADERBOARD_COLUMNS = [
    "rca_locations_1",
    "rca_industries_1",
    "rca_locations_2",
    "rca_industries_2",
    "tp",
    "fp",
    "precision",
]


@dataclass(frozen=True)
class GridSpec:
    """Candidate values per threshold; the search is their full product."""

    rca_locations_1: tuple[float, ...] = DEFAULT_GRID_VALUES
    rca_industries_1: tuple[float, ...] = DEFAULT_GRID_VALUES
    rca_locations_2: tuple[float, ...] = DEFAULT_GRID_VALUES
    rca_industries_2: tuple[float, ...] = DEFAULT_GRID_VALUES

    def __post_init__(self):
        for name in ("rca_locations_1", "rca_industries_1", "rca_locations_2", "rca_industries_2"):
            values = tuple(getattr(self, name))
            object.__setattr__(self, name, values)
            if not values:
                raise ValueError(f"{name} has no values")
            if any(v < 0 for v in values):
                raise ValueError(f"{name} has negative values")

    @classmethod
    def from_range(cls, lo: float, hi: float, step: float) -> "GridSpec":
        """Same half-open range [lo, hi) with the given step for all four axes."""
        if step <= 0 or hi <= lo:
            raise ValueError(f"need hi > lo and step > 0, got [{lo}, {hi}) step {step}")
        count = math.ceil((hi - lo) / step - 1e-12)
        values = tuple(lo + step * i for i in range(count))
        return cls(values, values, values, values)

    def __len__(self) -> int:
        return (
            len(self.rca_locations_1)
            * len(self.rca_industries_1)
            * len(self.rca_locations_2)
            * len(self.rca_industries_2)
        )

    def combos(self, n: int = 10, k: int = 3):
        """ParamSets in lexicographic grid order."""
        for a, b, c, d in itertools.product(
            self.rca_locations_1, self.rca_industries_1, self.rca_locations_2, self.rca_industries_2
        ):
            yield ParamSet(a, b, c, d, n=n, k=k)


@dataclass(frozen=True)
class PrecisionResult:
    tp: int
    fp: int
    value: float
    empty: bool  # no predictions at all; value pinned to 0


@dataclass(frozen=True)
class TuneResult:
    params: ParamSet
    tp: int
    fp: int
    precision: float

    @property
    def empty(self) -> bool:
        return self.tp + self.fp == 0


def precision(pred: LinkSet, labels: LabelMatrix) -> PrecisionResult:
    """Share of predicted links confirmed by the label matrix."""
    known = set(labels.industries)
    unmatched = sorted({p for link in pred for p in (link.input, link.output)} - known)
    if unmatched:
        raise KeyError(f"predicted products missing from label matrix: {unmatched}")
    if len(pred) == 0:
        return PrecisionResult(tp=0, fp=0, value=0.0, empty=True)
    idx = labels.index
    tp = sum(int(labels.values[idx[l.input], idx[l.output]]) for l in pred)
    fp = len(pred) - tp
    return PrecisionResult(tp=tp, fp=fp, value=tp / (tp + fp), empty=False)


def evaluate_params(
    table: SpecializationTable,
    labels: LabelMatrix,
    params: ParamSet,
    worst_rank_mode: str = "observed",
) -> TuneResult:
    """Run inference at one parameter point and score it."""
    engine = LinkEngine(table, params.n, worst_rank_mode)
    links = engine.links(params)
    score = precision(links, labels)
    return TuneResult(params=params, tp=score.tp, fp=score.fp, precision=score.value)


def _evaluate_chunk(args) -> list[TuneResult]:
    table, labels, combos, worst_rank_mode = args
    if not combos:
        return []
    engine = LinkEngine(table, combos[0].n, worst_rank_mode)
    out = []
    for params in combos:
        score = precision(engine.links(params), labels)
        out.append(TuneResult(params=params, tp=score.tp, fp=score.fp, precision=score.value))
    return out


def _leaderboard_key(result: TuneResult):
    return (-result.precision, result.params.thresholds)


def grid_search(
    table: SpecializationTable,
    labels: LabelMatrix,
    grid: GridSpec | None = None,
    n: int = 10,
    k: int = 3,
    jobs: int = 1,
    worst_rank_mode: str = "observed",
    checkpoint_path=None,
    checkpoint_every: int = 0,
) -> list[TuneResult]:
    """Evaluate every grid point; return results ranked best first.

    Ranking is precision descending, ties broken by the smaller threshold
    tuple, so the leaderboard is a deterministic total order regardless of
    `jobs`. With `checkpoint_every > 0`, partial results are rewritten to
    `checkpoint_path` as evaluation proceeds.
    """
    grid = grid or GridSpec()
    combos = list(grid.combos(n=n, k=k))
    results: list[TuneResult] = []

    def maybe_checkpoint(done: list[TuneResult]) -> None:
        if checkpoint_path and checkpoint_every > 0 and len(done) % checkpoint_every == 0:
            write_leaderboard(sorted(done, key=_leaderboard_key), checkpoint_path)

    if jobs <= 1:
        engine = LinkEngine(table, n, worst_rank_mode)
        for params in combos:
            score = precision(engine.links(params), labels)
            results.append(TuneResult(params=params, tp=score.tp, fp=score.fp, precision=score.value))
            maybe_checkpoint(results)
    else:
        chunk_size = math.ceil(len(combos) / jobs) if combos else 1
        chunks = [combos[i : i + chunk_size] for i in range(0, len(combos), chunk_size)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for part in pool.map(
                _evaluate_chunk, [(table, labels, chunk, worst_rank_mode) for chunk in chunks]
            ):
                results.extend(part)
                maybe_checkpoint(results)

    results.sort(key=_leaderboard_key)
    if checkpoint_path and checkpoint_every > 0:
        write_leaderboard(results, checkpoint_path)
    return results


def write_leaderboard(results, path) -> None:
    rows = [
        {
            "rca_locations_1": r.params.rca_locations_1,
            "rca_industries_1": r.params.rca_industries_1,
            "rca_locations_2": r.params.rca_locations_2,
            "rca_industries_2": r.params.rca_industries_2,
            "tp": r.tp,
            "fp": r.fp,
            "precision": r.precision,
        }
        for r in results
    ]
    pd.DataFrame(rows, columns=LEADERBOARD_COLUMNS).to_csv(path, index=False)
