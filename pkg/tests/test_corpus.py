import random

import pytest

from lowmt.corpus import (
    CorpusError,
    LengthFilterSpec,
    ParallelRecord,
    corpus_stats,
    filter_by_length,
    load_corpus,
    save_corpus,
    split_corpus,
)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCorpus:
    def test_empty_file(self, tmp_path):
        assert load_corpus(write(tmp_path, "c.jsonl", "")) == []

    def test_three_jsonl_lines_in_order(self, tmp_path):
        path = write(
            tmp_path,
            "c.jsonl",
            '{"lb": "eent"}\n{"de": "zwei"}\n{"en": "three"}\n',
        )
        records = load_corpus(path)
        assert [r.id for r in records] == ["0", "1", "2"]
        assert records[0].lrl == "eent"
        assert records[1].hrl == "zwei"
        assert records[2].en == "three"

    def test_line_missing_all_sides(self, tmp_path):
        path = write(tmp_path, "c.jsonl", '{"lb": "x"}\n{"id": "a"}\n')
        with pytest.raises(CorpusError, match="line 2: no sides present"):
            load_corpus(path)

    def test_malformed_line_carries_line_number(self, tmp_path):
        path = write(tmp_path, "c.jsonl", '{"lb": "x"}\nnot json\n')
        with pytest.raises(CorpusError, match="line 2"):
            load_corpus(path)

    def test_duplicate_id_named(self, tmp_path):
        path = write(tmp_path, "c.jsonl", '{"id": "r1", "lb": "x"}\n{"id": "r1", "lb": "y"}\n')
        with pytest.raises(CorpusError, match="duplicate id 'r1'"):
            load_corpus(path)

    def test_tsv_columns_and_absent_sides(self, tmp_path):
        path = write(tmp_path, "c.tsv", "a\tmoien\thallo\thello\nb\t\tnur de\t\n")
        records = load_corpus(path, format="tsv")
        assert records[0] == ParallelRecord(id="a", lrl="moien", hrl="hallo", en="hello")
        assert records[1] == ParallelRecord(id="b", hrl="nur de")

    def test_tsv_wrong_column_count(self, tmp_path):
        path = write(tmp_path, "c.tsv", "a\tx\ty\n")
        with pytest.raises(CorpusError, match="line 1"):
            load_corpus(path, format="tsv")


class TestRecordInvariants:
    def test_at_least_one_side(self):
        with pytest.raises(CorpusError, match="no sides"):
            ParallelRecord(id="x")

    def test_no_line_breaks(self):
        with pytest.raises(CorpusError, match="line break"):
            ParallelRecord(id="x", en="a\nb")


class TestRoundTrip:
    @pytest.mark.parametrize("format", ["jsonl", "tsv"])
    def test_save_load_identity(self, tmp_path, format):
        rng = random.Random(13)
        records = []
        words = ["moien", "ëmmer", "schéin", "d'Haus", "über", "a b c"]
        for i in range(40):
            sides = {
                side: " ".join(rng.choices(words, k=rng.randint(1, 5)))
                for side in ("lrl", "hrl", "en")
                if rng.random() < 0.8
            }
            if not sides:
                sides = {"en": "fallback"}
            records.append(ParallelRecord(id=f"r{i}", **sides))
        path = tmp_path / f"c.{format}"
        save_corpus(records, path, format=format)
        assert load_corpus(path, format=format) == records

    def test_tab_in_text_rejected_for_tsv(self, tmp_path):
        record = ParallelRecord(id="x", en="has\ttab")
        with pytest.raises(CorpusError, match="tab"):
            save_corpus([record], tmp_path / "c.tsv", format="tsv")


class TestFilterByLength:
    def test_boundary_49_dropped(self):
        record = ParallelRecord(id="x", en="a" * 49)
        kept, dropped = filter_by_length([record], LengthFilterSpec())
        assert kept == [] and dropped == 1

    def test_inclusive_boundaries_kept(self):
        records = [
            ParallelRecord(id="lo", lrl="a" * 50, hrl="b" * 50, en="c" * 50),
            ParallelRecord(id="hi", lrl="a" * 500, hrl="b" * 500, en="c" * 500),
        ]
        kept, dropped = filter_by_length(records, LengthFilterSpec())
        assert [r.id for r in kept] == ["lo", "hi"] and dropped == 0

    def test_known_length_enumeration(self):
        lengths = [10, 49, 50, 100, 250, 499, 500, 501, 600, 1000]
        expected = [n for n in lengths if 50 <= n <= 500]
        records = [ParallelRecord(id=str(n), en="x" * n) for n in lengths]
        kept, dropped = filter_by_length(records, LengthFilterSpec(sides=("en",)))
        assert [len(r.en) for r in kept] == expected
        assert len(kept) == 5 and dropped == 5

    def test_missing_named_side_dropped_with_tally(self):
        records = [
            ParallelRecord(id="a", en="x" * 60),
            ParallelRecord(id="b", lrl="y" * 60),
        ]
        kept, dropped = filter_by_length(records, LengthFilterSpec(sides=("en",)))
        assert [r.id for r in kept] == ["a"] and dropped == 1

    def test_invalid_bounds(self):
        with pytest.raises(ValueError):
            LengthFilterSpec(min_chars=0)
        with pytest.raises(ValueError):
            LengthFilterSpec(min_chars=10, max_chars=9)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_properties_on_random_corpora(self, seed):
        rng = random.Random(seed)
        records = []
        for i in range(300):
            sides = {}
            for side in ("lrl", "hrl", "en"):
                if rng.random() < 0.7:
                    sides[side] = "x" * rng.randint(0, 700)
            if not sides:
                sides["en"] = "x" * rng.randint(0, 700)
            records.append(ParallelRecord(id=str(i), **sides) if all(sides.values()) else None)
        records = [r for r in records if r is not None]
        spec = LengthFilterSpec()
        kept, dropped = filter_by_length(records, spec)
        assert len(kept) + dropped == len(records)
        # order-preserving subset
        it = iter(records)
        assert all(any(r is k for r in it) for k in kept)
        # bounds hold on every present side
        for record in kept:
            for side in record.present_sides():
                assert 50 <= len(getattr(record, side)) <= 500
        # idempotence
        again, dropped_again = filter_by_length(kept, spec)
        assert again == kept and dropped_again == 0


class TestSplitCorpus:
    @staticmethod
    def records(n):
        return [ParallelRecord(id=str(i), en=f"sentence {i}") for i in range(n)]

    def test_rounding_free_sizes(self):
        train, dev, test = split_corpus(self.records(10), (0.8, 0.1, 0.1), seed=7)
        assert (len(train), len(dev), len(test)) == (8, 1, 1)

    def test_deterministic_for_fixed_seed(self):
        a = split_corpus(self.records(10), (0.8, 0.1, 0.1), seed=7)
        b = split_corpus(self.records(10), (0.8, 0.1, 0.1), seed=7)
        assert a == b

    def test_partition_invariants_across_seeds(self):
        records = self.records(37)
        baseline = None
        for seed in range(5):
            train, dev, test = split_corpus(records, (0.6, 0.2, 0.2), seed=seed)
            ids = [r.id for r in train + dev + test]
            assert sorted(ids) == sorted(r.id for r in records)
            assert len(set(ids)) == len(ids)
            if baseline is None:
                baseline = (train, dev, test)
        assert any(split_corpus(records, (0.6, 0.2, 0.2), seed=s) != baseline for s in range(1, 5))

    def test_too_few_records(self):
        with pytest.raises(ValueError, match="at least 3"):
            split_corpus(self.records(2))

    def test_fraction_validation(self):
        with pytest.raises(ValueError):
            split_corpus(self.records(5), (0.5, 0.5, 0.5))
        with pytest.raises(ValueError):
            split_corpus(self.records(5), (1.0, -0.5, 0.5))


class TestCorpusStats:
    def test_empty(self):
        stats = corpus_stats([])
        assert stats.record_count == 0
        assert stats.length_histogram == {} and stats.vocab_size == {}

    def test_vocab_size(self):
        stats = corpus_stats([ParallelRecord(id="0", en="ab cd")])
        assert stats.vocab_size["en"] == 2
        assert stats.length_histogram["en"] == {5: 1}

    def test_large_synthetic_count_round_trips(self, tmp_path):
        n = 110_720
        path = tmp_path / "big.tsv"
        with open(path, "w", encoding="utf-8") as fh:
            for i in range(n):
                fh.write(f"{i}\tlb {i}\tde {i}\ten {i}\n")
        records = load_corpus(path, format="tsv")
        assert corpus_stats(records).record_count == n
