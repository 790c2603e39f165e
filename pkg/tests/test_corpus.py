from collections import Counter

import numpy as np
import pytest

from helpers import random_corpus
from relkit.corpus import (DEFAULT_STOPLIST, Triplet, TripletCorpus,
                           extract_from_text, extract_triplets,
                           filter_vocabulary, ingest_triplet_file,
                           normalize_token, save_triplet_file)
from relkit.errors import FormatError


class TestNormalizeToken:
    def test_lowercase_strip_punctuation(self):
        assert normalize_token("Riding.") == "riding"

    def test_stop_word_absent(self):
        assert normalize_token("the") is None

    def test_replacement_and_collapse(self):
        assert normalize_token("stands-with2") == "stands with"

    def test_empty_after_cleaning(self):
        assert normalize_token("123!?") is None

    def test_all_words_stoplisted(self):
        assert normalize_token("The-IT") is None

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        alphabet = list("abc -XY.2_")
        for _ in range(300):
            raw = "".join(rng.choice(alphabet, size=int(rng.integers(0, 15))))
            once = normalize_token(raw)
            if once is not None:
                assert normalize_token(once) == once


class TestExtractTriplets:
    def test_caption_example(self):
        assert extract_triplets("player dribbling ball") == [
            Triplet("player", "dribbling", "ball")]

    def test_empty_sentence(self):
        assert extract_triplets("") == []

    def test_articles_dropped(self):
        assert extract_triplets("a man wearing a helmet") == [
            Triplet("man", "wearing", "helmet")]

    def test_multi_word_predicate(self):
        assert extract_triplets("a woman standing next to a bench") == [
            Triplet("woman", "standing next to", "bench")]

    def test_one_triplet_per_clause(self):
        got = extract_triplets("a man wearing a helmet, a dog near a tree")
        assert got == [Triplet("man", "wearing", "helmet"),
                       Triplet("dog", "near", "tree")]

    def test_unparseable_yields_nothing(self):
        assert extract_triplets("green blue red") == []
        assert extract_triplets("wearing helmet") == []

    def test_output_alphabet(self):
        rng = np.random.default_rng(1)
        words = ["Man", "dog2", "rid-ing", "the", "ball!", "NEAR", "on"]
        for _ in range(200):
            sentence = " ".join(rng.choice(words,
                                           size=int(rng.integers(0, 8))))
            for t in extract_triplets(sentence):
                for fieldval in (t.subject, t.predicate, t.object):
                    assert all(c.islower() or c == " " for c in fieldval)
                    assert "  " not in fieldval


class TestIngest:
    def test_weights_accumulate(self, tmp_path):
        path = tmp_path / "c.jsonl"
        line = '{"subject":"a","predicate":"r","object":"b"}\n'
        path.write_text(line + line)
        corpus = ingest_triplet_file(path)
        assert corpus.counts == {("a", "r", "b"): 2}

    def test_empty_file(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("")
        assert len(ingest_triplet_file(path)) == 0

    def test_missing_field_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"subject":"a","predicate":"r","object":"b"}\n'
                        '{"subject":"a","predicate":"r"}\n')
        with pytest.raises(FormatError, match=":2:"):
            ingest_triplet_file(path)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        corpus = random_corpus(rng, max_triplets=200, max_labels=10)
        path = tmp_path / "c.jsonl"
        save_triplet_file(corpus, path)
        assert ingest_triplet_file(path).counts == corpus.counts

    def test_merge_is_associative_on_counts(self):
        rng = np.random.default_rng(3)
        a = random_corpus(rng, 50, 6)
        b = random_corpus(rng, 50, 6)
        c = random_corpus(rng, 50, 6)
        assert a.merge(b).counts == b.merge(a).counts
        assert a.merge(b).merge(c).counts == a.merge(b.merge(c)).counts


class TestFilterVocabulary:
    def test_min_count_one_is_identity(self):
        rng = np.random.default_rng(4)
        corpus = random_corpus(rng, 200, 10)
        filtered, _, _ = filter_vocabulary(corpus, 1)
        assert filtered.counts == corpus.counts

    def test_threshold_boundary(self):
        corpus = TripletCorpus()
        corpus.add(Triplet("a", "rare", "b", weight=99))
        corpus.add(Triplet("a", "common", "b", weight=100))
        filtered, _, preds = filter_vocabulary(corpus, 100)
        assert ("a", "rare", "b") not in filtered.counts
        assert ("a", "common", "b") in filtered.counts
        assert preds.labels == ("common",)

    def test_matches_brute_force_recount(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            corpus = random_corpus(rng, 300, 8)
            min_count = int(rng.integers(1, 30))
            filtered, obj_v, pred_v = filter_vocabulary(corpus, min_count)
            # independent recount
            oc, pc = Counter(), Counter()
            for (s, r, o), w in corpus.counts.items():
                oc[s] += w
                oc[o] += w
                pc[r] += w
            expected = {k: w for k, w in corpus.counts.items()
                        if oc[k[0]] >= min_count and pc[k[1]] >= min_count
                        and oc[k[2]] >= min_count}
            assert filtered.counts == expected
            for label, count in zip(obj_v.labels, obj_v.counts):
                assert count == oc[label]
            for label, count in zip(pred_v.labels, pred_v.counts):
                assert count == pc[label]

    def test_monotone_in_min_count(self):
        rng = np.random.default_rng(6)
        corpus = random_corpus(rng, 300, 8)
        previous = None
        for min_count in (1, 2, 4, 8, 16):
            filtered, _, _ = filter_vocabulary(corpus, min_count)
            keys = set(filtered.counts)
            if previous is not None:
                assert keys <= previous
            previous = keys

    def test_rejects_zero_min_count(self):
        with pytest.raises(FormatError):
            filter_vocabulary(TripletCorpus(), 0)


def test_extract_from_text_counts_clauses():
    text = "A man wearing a helmet.\nThe player dribbling the ball.\n"
    corpus = extract_from_text(text)
    assert corpus.counts == {("man", "wearing", "helmet"): 1,
                             ("player", "dribbling", "ball"): 1}


def test_default_stoplist_contains_articles():
    assert {"a", "an", "the", "is"} <= DEFAULT_STOPLIST
