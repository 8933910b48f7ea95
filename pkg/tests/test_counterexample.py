import json
import time
from fractions import Fraction as F
from pathlib import Path

import pytest

from mixlab.counterexample import (
    EmptyEventError,
    conditional_hit_distribution,
    enumerate_paths,
    hit_value_distribution,
    refute_sst_claim,
    two_step_distribution,
)

GOLDEN = json.loads((Path(__file__).parent / "data" / "counterexample_001_2.json").read_text())


def test_hit_value_law():
    assert list(hit_value_distribution().weights) == [F(1, 5), F(4, 15), F(4, 15), F(4, 15)]


def test_path_probabilities_sum_to_one():
    for steps in (1, 2):
        paths = enumerate_paths((0, 0, 1), steps)
        assert sum(p.probability for p in paths) == 1
    assert sum(two_step_distribution((0, 1, 2)).weights) == 1


def test_ratio_is_three_to_two():
    t0 = time.perf_counter()
    r = refute_sst_claim()
    assert time.perf_counter() - t0 < 1.0
    a, b = r["witnesses"]
    assert (a["state"], b["state"]) == ("100", "001")
    assert F(a["probability"]["numerator"], a["probability"]["denominator"]) == F(1, 80)
    assert F(b["probability"]["numerator"], b["probability"]["denominator"]) == F(1, 120)
    assert r["ratio"] == {"numerator": 3, "denominator": 2}
    assert not r["uniform"]


def test_matches_golden_report():
    r = refute_sst_claim((0, 0, 1), 2)
    for key, value in GOLDEN.items():
        assert r[key] == value, key


def test_first_steps_touch_the_occupied_site():
    r = refute_sst_claim()
    assert r["first_step_pairs"] == ["1,3", "2,3"]
    assert r["contributing_paths"] == 720
    assert r["conditioning_probability"] == {"numerator": 16, "denominator": 45}


def test_conditional_law_is_not_uniform_within_weight_one():
    dist, total, _ = conditional_hit_distribution((0, 0, 1), 2)
    assert total == F(16, 45)
    assert sum(dist.weights) == 1
    # weight-one strings with the symbol at site 1 vs site 3
    assert dist.weights[1] != dist.weights[16]


def test_empty_event():
    with pytest.raises(EmptyEventError):
        conditional_hit_distribution((0, 0, 1), 0)
    with pytest.raises(EmptyEventError):
        # one step touches only two of three sites
        conditional_hit_distribution((0, 0, 1), 1)


def test_all_zero_start_never_hits():
    with pytest.raises(EmptyEventError):
        conditional_hit_distribution((0, 0, 0), 2)
