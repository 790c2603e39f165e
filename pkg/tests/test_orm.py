import itertools
import math
from collections import Counter

import numpy as np
import pytest

from helpers import random_corpus
from relkit.corpus import Triplet, TripletCorpus
from relkit.errors import ConfigError, FormatError
from relkit.orm import (OrmTable, build_orm, load_orm, lookup, merge,
                        sample_candidates, save_orm)


def corpus_of(*entries):
    corpus = TripletCorpus()
    for s, r, o, w in entries:
        corpus.add(Triplet(s, r, o, weight=w))
    return corpus


def man_helmet_corpus():
    """54 'wearing' among 100 (man, helmet) observations."""
    entries = [("man", "wearing", "helmet", 54),
               ("man", "has", "helmet", 30),
               ("man", "holding", "helmet", 15),
               ("man", "stands with", "helmet", 1)]
    return corpus_of(*entries)


class TestBuildOrm:
    def test_single_observation(self):
        table = build_orm(corpus_of(("a", "r", "b", 1)))
        result = lookup(table, "a", "b")
        assert result.entries == (("r", 1.0),)
        assert not result.backoff

    def test_dominant_predicate_head(self):
        table = build_orm(man_helmet_corpus())
        result = lookup(table, "man", "helmet")
        assert result.entries[0][0] == "wearing"
        assert abs(result.entries[0][1] - 0.54) <= 1e-12

    def test_empty_corpus(self):
        table = build_orm(TripletCorpus())
        assert len(table) == 0
        assert lookup(table, "a", "b").entries == ()

    def test_matches_brute_force_recount(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            corpus = random_corpus(rng, 1000, 20)
            table = build_orm(corpus)
            naive: Counter = Counter()
            for (s, r, o), w in corpus.counts.items():
                naive[(s, o, r)] += w
            for (s, o) in {(s, o) for (s, o, _r) in naive}:
                total = sum(w for (s2, o2, _), w in naive.items()
                            if (s2, o2) == (s, o))
                got = dict(lookup(table, s, o).entries)
                for (s2, o2, r), w in naive.items():
                    if (s2, o2) == (s, o):
                        assert math.isclose(got[r], w / total, abs_tol=1e-12)


class TestLookup:
    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(1)
        corpus = random_corpus(rng, 500, 10)
        table = build_orm(corpus)
        for pair in table.pair_counts:
            probs = [p for _, p in lookup(table, *pair).entries]
            assert abs(sum(probs) - 1.0) <= 1e-9

    def test_ordering_descending_then_lexicographic(self):
        table = build_orm(corpus_of(("a", "zz", "b", 2), ("a", "aa", "b", 2),
                                    ("a", "mm", "b", 4)))
        assert [r for r, _ in lookup(table, "a", "b").entries] == \
            ["mm", "aa", "zz"]

    def test_backoff_marginal_by_hand(self):
        # marginal over a 3-triplet corpus: r2 twice, r1 once
        table = build_orm(corpus_of(("a", "r1", "b", 1), ("c", "r2", "d", 1),
                                    ("e", "r2", "f", 1)))
        result = lookup(table, "x", "y")
        assert result.backoff
        assert result.entries == (("r2", 2 / 3), ("r1", 1 / 3))

    def test_strict_mode_returns_empty(self):
        table = build_orm(corpus_of(("a", "r1", "b", 1)))
        result = lookup(table, "x", "y", backoff=False)
        assert result.entries == ()
        assert result.backoff


class TestSampleCandidates:
    def test_k_exceeds_m_rejected(self):
        table = build_orm(corpus_of(("a", "r", "b", 1)))
        with pytest.raises(ConfigError):
            sample_candidates(table, "a", "b", m=2, k=3, seed=0)

    def test_forced_subset(self):
        table = build_orm(corpus_of(("a", "r1", "b", 3), ("a", "r2", "b", 2),
                                    ("a", "r3", "b", 1)))
        got = sample_candidates(table, "a", "b", m=3, k=3, seed=5)
        assert sorted(got) == ["r1", "r2", "r3"]

    def test_single_top_candidate(self):
        table = build_orm(corpus_of(("a", "r1", "b", 3), ("a", "r2", "b", 1)))
        assert sample_candidates(table, "a", "b", m=1, k=1, seed=9) == ["r1"]

    def test_deterministic_given_seed(self):
        table = build_orm(corpus_of(*[("a", f"r{i}", "b", i + 1)
                                      for i in range(8)]))
        a = sample_candidates(table, "a", "b", m=6, k=3, seed=123)
        b = sample_candidates(table, "a", "b", m=6, k=3, seed=123)
        assert a == b

    def test_subset_of_top_m(self):
        table = build_orm(corpus_of(*[("a", f"r{i}", "b", i + 1)
                                      for i in range(10)]))
        top4 = {r for r, _ in lookup(table, "a", "b").entries[:4]}
        for seed in range(300):
            got = sample_candidates(table, "a", "b", m=4, k=2, seed=seed)
            assert set(got) <= top4
            assert len(set(got)) == 2

    def test_uniform_over_subsets(self):
        table = build_orm(corpus_of(*[("a", f"r{i}", "b", 10 - i)
                                      for i in range(6)]))
        counts: Counter = Counter()
        n = 10_000
        for seed in range(n):
            got = sample_candidates(table, "a", "b", m=4, k=2, seed=seed)
            counts[frozenset(got)] += 1
        subsets = list(itertools.combinations([f"r{i}" for i in range(4)], 2))
        assert len(counts) == len(subsets) == 6
        p = 1 / 6
        sigma = math.sqrt(n * p * (1 - p))
        for subset in subsets:
            assert abs(counts[frozenset(subset)] - n * p) <= 5 * sigma


class TestMerge:
    def test_identity(self):
        rng = np.random.default_rng(2)
        table = build_orm(random_corpus(rng, 300, 10))
        merged = merge(table, OrmTable())
        assert merged.pair_counts == table.pair_counts

    def test_commutative(self):
        rng = np.random.default_rng(3)
        a = build_orm(random_corpus(rng, 200, 8))
        b = build_orm(random_corpus(rng, 200, 8))
        assert merge(a, b).pair_counts == merge(b, a).pair_counts

    def test_build_distributes_over_merge(self):
        rng = np.random.default_rng(4)
        shard1 = random_corpus(rng, 300, 8)
        shard2 = random_corpus(rng, 300, 8)
        combined = build_orm(shard1.merge(shard2))
        merged = merge(build_orm(shard1), build_orm(shard2))
        assert combined.pair_counts == merged.pair_counts


class TestPersistence:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        table = build_orm(random_corpus(rng, 500, 12))
        path = tmp_path / "orm.tsv"
        save_orm(table, path)
        assert load_orm(path).pair_counts == table.pair_counts

    def test_empty_table_round_trip(self, tmp_path):
        path = tmp_path / "orm.tsv"
        save_orm(OrmTable(), path)
        assert load_orm(path).pair_counts == {}

    def test_truncated_file_reports_offset(self, tmp_path):
        rng = np.random.default_rng(6)
        table = build_orm(random_corpus(rng, 200, 8))
        path = tmp_path / "orm.tsv"
        save_orm(table, path)
        data = path.read_bytes()
        path.write_bytes(data[:len(data) // 2 + data[len(data) // 2:].index(b"\n") + 1])
        with pytest.raises(FormatError, match="byte"):
            load_orm(path)

    def test_corrupt_count(self, tmp_path):
        path = tmp_path / "orm.tsv"
        path.write_text("#total\t1\na\tb\tr\tnotanumber\n")
        with pytest.raises(FormatError, match="byte"):
            load_orm(path)
