import numpy as np
import pandas as pd
import pytest

from oracles import ref_input_candidates
from tradechains.evalbench import (
    HitRates,
    SynthWorldConfig,
    hit_rates,
    random_baseline,
    read_truth_csv,
    synth_world,
    write_hit_rates_csv,
    write_truth_csv,
)
from tradechains.inference import Link, LinkSet, ParamSet, backward_candidates, infer_all
from tradechains.specialization import rca_matrix


def link_set(*pairs) -> LinkSet:
    return LinkSet(tuple(Link(output=o, input=i, merged_rank=0, backward_score=0) for o, i in pairs))


class TestRandomBaseline:
    def test_k_distinct_non_self_inputs_per_product(self):
        products = [f"p{i}" for i in range(10)]
        links = random_baseline(products, k=3, seed=1)
        for output in products:
            inputs = links.inputs_of(output)
            assert len(inputs) == 3
            assert len(set(inputs)) == 3
            assert output not in inputs

    def test_same_seed_reproduces_exactly(self):
        products = [f"p{i}" for i in range(8)]
        assert random_baseline(products, 3, seed=7) == random_baseline(products, 3, seed=7)

    def test_different_seed_differs(self):
        products = [f"p{i}" for i in range(12)]
        assert random_baseline(products, 3, seed=1) != random_baseline(products, 3, seed=2)

    def test_k_too_large_rejected(self):
        with pytest.raises(ValueError, match="smaller"):
            random_baseline(["a", "b", "c"], k=3)

    def test_per_link_hit_probability_matches_truth_density(self):
        # truth covers 27 of the 90 ordered non-self pairs -> density 0.3
        products = [f"p{i}" for i in range(10)]
        rng = np.random.default_rng(0)
        pool = [(a, b) for a in products for b in products if a != b]
        chosen = [pool[i] for i in rng.choice(len(pool), size=27, replace=False)]
        truth_pairs = {(i, o) for o, i in chosen}
        hits = trials = 0
        for seed in range(200):
            for link in random_baseline(products, 3, seed=seed):
                trials += 1
                hits += (link.input, link.output) in truth_pairs
        assert hits / trials == pytest.approx(0.3, abs=0.02)


class TestHitRates:
    def test_identical_sets_score_perfectly(self):
        truth = link_set(("c", "a"), ("c", "b"), ("c", "d"))
        rates = hit_rates(truth, truth)
        assert (rates.at_least_1, rates.at_least_2, rates.at_least_3) == (1.0, 1.0, 1.0)

    def test_disjoint_sets_score_zero(self):
        truth = link_set(("c", "a"), ("c", "b"), ("c", "d"))
        pred = link_set(("c", "x"), ("c", "y"), ("c", "z"))
        rates = hit_rates(pred, truth)
        assert (rates.at_least_1, rates.at_least_2, rates.at_least_3) == (0.0, 0.0, 0.0)

    def test_known_overlaps_bucket_correctly(self):
        # overlaps of 2, 1, 0 over three outputs -> (2/3, 1/3, 0)
        truth = link_set(
            ("o1", "a"), ("o1", "b"), ("o1", "c"),
            ("o2", "d"), ("o2", "e"), ("o2", "f"),
            ("o3", "g"), ("o3", "h"), ("o3", "i"),
        )
        pred = link_set(
            ("o1", "a"), ("o1", "b"), ("o1", "x"),
            ("o2", "d"), ("o2", "y"), ("o2", "z"),
            ("o3", "u"), ("o3", "v"), ("o3", "w"),
        )
        rates = hit_rates(pred, truth)
        assert rates.at_least_1 == pytest.approx(2 / 3)
        assert rates.at_least_2 == pytest.approx(1 / 3)
        assert rates.at_least_3 == 0.0
        assert rates.n_outputs == 3

    def test_missing_outputs_count_as_zero_hits(self):
        truth = link_set(("o1", "a"), ("o2", "b"))
        pred = link_set(("o1", "a"))
        assert hit_rates(pred, truth).at_least_1 == 0.5

    def test_extra_outputs_rejected(self):
        truth = link_set(("o1", "a"))
        pred = link_set(("o1", "a"), ("o9", "b"))
        with pytest.raises(ValueError, match="o9"):
            hit_rates(pred, truth)

    def test_monotonicity_enforced_by_type(self):
        with pytest.raises(ValueError, match="non-increasing"):
            HitRates(at_least_1=0.1, at_least_2=0.5, at_least_3=0.0, n_outputs=3)

    def test_truth_file_round_trip(self, tmp_path):
        truth = link_set(("o1", "a"), ("o2", "b"))
        path = tmp_path / "truth.csv"
        write_truth_csv(truth, path)
        assert read_truth_csv(path) == truth
        assert hit_rates(truth, path).at_least_1 == 1.0


class TestSynthWorld:
    def test_same_seed_reproduces_world(self):
        cfg = SynthWorldConfig(regions=12, products=8, links=4, strength=5.0, noise=0.2, seed=5)
        trade_a, truth_a = synth_world(cfg)
        trade_b, truth_b = synth_world(cfg)
        pd.testing.assert_frame_equal(trade_a.records, trade_b.records)
        assert truth_a == truth_b

    def test_planted_links_form_a_chain_without_self_loops(self):
        _, truth = synth_world(SynthWorldConfig(regions=20, products=10, links=6, seed=2))
        assert len(truth) == 6
        outputs = [l.output for l in truth]
        assert len(set(outputs)) == 6  # each output has exactly one planted input

    def test_too_many_links_rejected(self):
        with pytest.raises(ValueError, match="chained links"):
            SynthWorldConfig(products=5, links=5)

    def test_noise_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="noise"):
            SynthWorldConfig(noise=1.5)

    def test_noiseless_world_recovers_all_links_at_rank_two(self):
        cfg = SynthWorldConfig(regions=30, products=15, links=8, strength=5.0, noise=0.0, seed=11)
        trade, truth = synth_world(cfg)
        table = rca_matrix(trade)
        params = ParamSet(2.0, 2.0, 2.0, 2.0, n=10, k=3)
        links = infer_all(table, params)
        by_output = {l.output: l for l in links if l.merged_rank == 2}
        for planted in truth:
            assert by_output[planted.output].input == planted.input

    def test_strong_signal_makes_planted_input_the_top_backward_candidate(self):
        cfg = SynthWorldConfig(regions=18, products=9, links=4, strength=50.0, noise=0.0, seed=13)
        trade, truth = synth_world(cfg)
        table = rca_matrix(trade)
        params = ParamSet(2.0, 2.0, 2.0, 2.0, n=5, k=3)
        for planted in truth:
            mine = backward_candidates(table, planted.output, params)
            ref = ref_input_candidates(table, planted.output, 2.0, 2.0, 5)
            assert mine.entries[0][0] == planted.input
            assert ref[0][0] == planted.input

    def test_unit_strength_rejected_but_near_unit_gives_chance_level(self):
        # strength must exceed 1; a barely-above-1 world carries no usable signal
        with pytest.raises(ValueError, match="strength"):
            SynthWorldConfig(strength=1.0)
        cfg = SynthWorldConfig(regions=20, products=10, links=5, strength=1.0001, noise=0.0, seed=3)
        trade, truth = synth_world(cfg)
        table = rca_matrix(trade)
        links = infer_all(table, ParamSet(2.0, 2.0, 2.0, 2.0, n=5, k=3))
        hits = sum(1 for l in truth if (l.input, l.output) in links.pairs())
        assert hits == 0  # nothing clears the thresholds


class TestMetricsCsv:
    def test_figure_style_grid(self, tmp_path):
        rows = {
            "backward_forward": HitRates(0.9, 0.5, 0.2, 16),
            "baseline": HitRates(0.3, 0.1, 0.0, 16),
        }
        path = tmp_path / "metrics.csv"
        write_hit_rates_csv(rows, path)
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["model", "at_least_1", "at_least_2", "at_least_3", "n_outputs"]
        assert frame["model"].tolist() == ["backward_forward", "baseline"]
