"""Infer input->output product links from two-sided specialization patterns.

The upstream pass proposes inputs for a product: look at the locations that
over-export the product, and rank every other product by how many of those
locations over-import it. The downstream pass runs the mirror image (locations
that over-import a product, ranked by what they over-export) and is used to
validate each proposed input. A candidate's final rank is its upstream
position plus the position of the original product in the candidate's
downstream list; lower is better, 2 the best possible.

All ordering is deterministic. Counts are integers; the count tie-break is
the sum of partner-side specialization over the selected locations,
accumulated in ascending location order so independent reimplementations
reproduce it bit for bit; remaining ties fall back to product id ascending.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .specialization import SpecializationTable

WORST_RANK_MODES = ("observed", "fixed")


@dataclass(frozen=True)
class ParamSet:
    """Thresholds and list sizes for the two-sided inference.

    rca_locations_1 / rca_industries_1 drive the upstream (input-proposing)
    pass; rca_locations_2 / rca_industries_2 the downstream (validating) one.
    `n` is the candidate-list length, `k` how many inputs to emit per output.
    """

    rca_locations_1: float = 2.0
    rca_industries_1: float = 1.5
    rca_locations_2: float = 3.5
    rca_industries_2: float = 2.0
    n: int = 10
    k: int = 3

    def __post_init__(self):
        for name in ("rca_locations_1", "rca_industries_1", "rca_locations_2", "rca_industries_2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not (isinstance(self.n, int) and isinstance(self.k, int)):
            raise ValueError("n and k must be integers")
        if self.k < 1 or self.n < self.k:
            raise ValueError(f"need n >= k >= 1, got n={self.n} k={self.k}")

    @property
    def thresholds(self) -> tuple[float, float, float, float]:
        return (
            self.rca_locations_1,
            self.rca_industries_1,
            self.rca_locations_2,
            self.rca_industries_2,
        )


@dataclass(frozen=True)
class RankedCandidates:
    """Ordered candidate products for one target product.

    `score_kind` is "count" (higher is better, order descending) or
    "merged_rank" (lower is better, order ascending).
    """

    target: str
    entries: tuple[tuple[str, int], ...]
    score_kind: str = "count"

    def __post_init__(self):
        if any(prod == self.target for prod, _ in self.entries):
            raise ValueError(f"target {self.target!r} appears among its own candidates")
        scores = [s for _, s in self.entries]
        if self.score_kind == "count":
            if any(a < b for a, b in zip(scores, scores[1:])):
                raise ValueError("count scores must be non-increasing")
        elif self.score_kind == "merged_rank":
            if any(a > b for a, b in zip(scores, scores[1:])):
                raise ValueError("merged ranks must be non-decreasing")
        else:
            raise ValueError(f"unknown score_kind: {self.score_kind!r}")

    def products(self) -> list[str]:
        return [prod for prod, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Link:
    output: str
    input: str
    merged_rank: int
    backward_score: int


@dataclass(frozen=True)
class LinkSet:
    """Directed input->output product pairs with their ranking scores."""

    links: tuple[Link, ...]

    def __post_init__(self):
        seen = set()
        for link in self.links:
            if link.input == link.output:
                raise ValueError(f"self-loop link on {link.output!r}")
            pair = (link.input, link.output)
            if pair in seen:
                raise ValueError(f"duplicate link {pair}")
            seen.add(pair)

    def __len__(self) -> int:
        return len(self.links)

    def __iter__(self):
        return iter(self.links)

    def pairs(self) -> frozenset[tuple[str, str]]:
        """Set view of (input, output) pairs."""
        return frozenset((l.input, l.output) for l in self.links)

    def inputs_of(self, output: str) -> list[str]:
        """Inputs of one output, best rank first."""
        mine = [l for l in self.links if l.output == output]
        mine.sort(key=lambda l: (l.merged_rank, l.input))
        return [l.input for l in mine]

    def outputs(self) -> list[str]:
        return sorted({l.output for l in self.links})

    def restricted_to(self, outputs) -> "LinkSet":
        """Links whose output is in `outputs`, original order kept."""
        wanted = set(outputs)
        return LinkSet(tuple(l for l in self.links if l.output in wanted))

    def to_matrix(self, products) -> np.ndarray:
        """Binary matrix with rows = inputs, columns = outputs."""
        idx = {p: i for i, p in enumerate(products)}
        out = np.zeros((len(idx), len(idx)), dtype=np.int8)
        for link in self.links:
            if link.input not in idx or link.output not in idx:
                raise KeyError(f"link product not in index: {link}")
            out[idx[link.input], idx[link.output]] = 1
        return out


# -- directional ranking -------------------------------------------------------


def _rank_one(
    loc_col: np.ndarray,
    cand_mask: np.ndarray,
    cand_rca: np.ndarray,
    t_loc: float,
    source_idx: int,
    n: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Ranked candidate indices and counts for one source product.

    loc_col: the source product's location specialization column.
    cand_mask / cand_rca: partner-side threshold mask and raw ratios.
    Candidates with zero count are not proposed at all.
    """
    locs = np.flatnonzero(loc_col >= t_loc)
    if locs.size == 0:
        return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.int64)
    counts = cand_mask[locs].sum(axis=0)
    counts[source_idx] = 0
    eligible = np.flatnonzero(counts > 0)
    if eligible.size == 0:
        return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.int64)
    # Ascending-location accumulation: reproducible float tie-break.
    tie = np.zeros(cand_rca.shape[1])
    for l in locs:
        tie = tie + cand_rca[l]
    order = np.lexsort((eligible, -tie[eligible], -counts[eligible]))
    chosen = eligible[order][:n]
    return chosen, counts[chosen]


class _DirectionalTable:
    """Candidate lists for every source product at one threshold pair."""

    __slots__ = ("lists", "scores", "lengths", "rank_pos")

    def __init__(self, loc_rca: np.ndarray, cand_rca: np.ndarray, t_loc: float, t_ind: float, n: int):
        n_products = loc_rca.shape[1]
        cand_mask = cand_rca >= t_ind
        self.lists: list[np.ndarray] = []
        self.scores: list[np.ndarray] = []
        self.lengths = np.zeros(n_products, dtype=np.int64)
        self.rank_pos = np.zeros((n_products, n_products), dtype=np.int32)
        for src in range(n_products):
            chosen, counts = _rank_one(loc_rca[:, src], cand_mask, cand_rca, t_loc, src, n)
            self.lists.append(chosen)
            self.scores.append(counts)
            self.lengths[src] = len(chosen)
            self.rank_pos[src, chosen] = np.arange(1, len(chosen) + 1)


class LinkEngine:
    """Caches per-threshold candidate tables; reused across parameter sweeps."""

    def __init__(self, table: SpecializationTable, n: int, worst_rank_mode: str = "observed"):
        if worst_rank_mode not in WORST_RANK_MODES:
            raise ValueError(f"worst_rank_mode must be one of {WORST_RANK_MODES}")
        self.table = table
        self.n = n
        self.worst_rank_mode = worst_rank_mode
        self._backward: dict[tuple[float, float], _DirectionalTable] = {}
        self._forward: dict[tuple[float, float], _DirectionalTable] = {}

    def backward_table(self, t_loc: float, t_ind: float) -> _DirectionalTable:
        key = (t_loc, t_ind)
        if key not in self._backward:
            self._backward[key] = _DirectionalTable(
                self.table.rca_exp, self.table.rca_imp, t_loc, t_ind, self.n
            )
        return self._backward[key]

    def forward_table(self, t_loc: float, t_ind: float) -> _DirectionalTable:
        key = (t_loc, t_ind)
        if key not in self._forward:
            self._forward[key] = _DirectionalTable(
                self.table.rca_imp, self.table.rca_exp, t_loc, t_ind, self.n
            )
        return self._forward[key]

    def merged_ranks(self, params: ParamSet, output_idx: int) -> list[tuple[int, int, int]]:
        """(candidate index, merged rank, backward count) for one output, final order."""
        if params.n != self.n:
            raise ValueError(f"engine built for n={self.n}, got params.n={params.n}")
        bwd = self.backward_table(params.rca_locations_1, params.rca_industries_1)
        fwd = self.forward_table(params.rca_locations_2, params.rca_industries_2)
        cands = bwd.lists[output_idx]
        counts = bwd.scores[output_idx]
        merged = []
        for j, (c, score) in enumerate(zip(cands, counts), start=1):
            fr = int(fwd.rank_pos[c, output_idx])
            if fr == 0:
                fr = int(fwd.lengths[c]) + 1 if self.worst_rank_mode == "observed" else self.n + 1
            merged.append((int(c), j + fr, int(score)))
        merged.sort(key=lambda t: t[1])  # stable: ties keep upstream order
        return merged

    def links(self, params: ParamSet) -> LinkSet:
        products = self.table.products
        out = []
        for p_idx, output in enumerate(products):
            for c_idx, rank, score in self.merged_ranks(params, p_idx)[: params.k]:
                out.append(Link(output=output, input=products[c_idx], merged_rank=rank, backward_score=score))
        return LinkSet(tuple(out))


# -- public operations -----------------------------------------------------------


def _single_ranking(
    table: SpecializationTable,
    product: str,
    t_loc: float,
    t_ind: float,
    n: int,
    direction: str,
) -> RankedCandidates:
    if product not in table.prod_index:
        raise KeyError(f"unknown product: {product!r}")
    src = table.prod_index[product]
    if direction == "backward":
        loc_rca, cand_rca = table.rca_exp, table.rca_imp
    else:
        loc_rca, cand_rca = table.rca_imp, table.rca_exp
    chosen, counts = _rank_one(loc_rca[:, src], cand_rca >= t_ind, cand_rca, t_loc, src, n)
    entries = tuple((table.products[c], int(s)) for c, s in zip(chosen, counts))
    return RankedCandidates(target=product, entries=entries, score_kind="count")


def backward_candidates(table: SpecializationTable, output_product: str, params: ParamSet) -> RankedCandidates:
    """Propose input candidates for an output product (upstream pass)."""
    return _single_ranking(
        table, output_product, params.rca_locations_1, params.rca_industries_1, params.n, "backward"
    )


def forward_candidates(table: SpecializationTable, input_product: str, params: ParamSet) -> RankedCandidates:
    """Propose output candidates for an input product (downstream pass)."""
    return _single_ranking(
        table, input_product, params.rca_locations_2, params.rca_industries_2, params.n, "forward"
    )


def backward_forward(
    table: SpecializationTable,
    output_product: str,
    params: ParamSet,
    worst_rank_mode: str = "observed",
) -> RankedCandidates:
    """Propose inputs upstream, validate each downstream, merge the ranks.

    A candidate found at downstream position v gets merged rank (upstream
    position + v); one absent from the downstream list gets the worst
    observed downstream rank plus one ("observed" mode) or n+1 ("fixed").
    """
    if output_product not in table.prod_index:
        raise KeyError(f"unknown product: {output_product!r}")
    engine = LinkEngine(table, params.n, worst_rank_mode)
    merged = engine.merged_ranks(params, table.prod_index[output_product])
    entries = tuple((table.products[c], rank) for c, rank, _ in merged)
    return RankedCandidates(target=output_product, entries=entries, score_kind="merged_rank")


def infer_all(
    table: SpecializationTable, params: ParamSet, worst_rank_mode: str = "observed"
) -> LinkSet:
    """Top-k inferred inputs for every product in the table."""
    return LinkEngine(table, params.n, worst_rank_mode).links(params)
