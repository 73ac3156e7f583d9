import importlib.util
import json
from pathlib import Path

import pytest

from oracle_harness import (
    GoldenVector,
    ScorerUnavailableError,
    load_scorer,
    read_pairs,
    regenerate_goldens,
    score_pairs,
)
from oracle_harness.cli import main

REPO_ROOT = Path(__file__).resolve().parents[2]
COMMITTED_PAIRS = REPO_ROOT / "tests" / "data" / "golden_pairs.jsonl"
COMMITTED_GOLDENS = REPO_ROOT / "tests" / "data" / "golden_vectors.jsonl"

SACREBLEU_INSTALLED = importlib.util.find_spec("sacrebleu") is not None


class TestGoldenVector:
    def test_score_range_enforced(self):
        with pytest.raises(ValueError, match="out of"):
            GoldenVector(hyp="a", ref="a", bleu=101.0, chrfpp=50.0, scorer="s")

    def test_version_string_required(self):
        with pytest.raises(ValueError, match="non-empty"):
            GoldenVector(hyp="a", ref="a", bleu=1.0, chrfpp=1.0, scorer="")


class TestScorerBackends:
    def test_vendored_always_loads(self):
        scorer = load_scorer("vendored")
        assert scorer.version == "vendored-2.4-compat"

    @pytest.mark.skipif(SACREBLEU_INSTALLED, reason="sacrebleu present in this environment")
    def test_installed_backend_aborts_with_install_instruction(self):
        with pytest.raises(ScorerUnavailableError, match="pip install sacrebleu"):
            load_scorer("installed")

    @pytest.mark.skipif(not SACREBLEU_INSTALLED, reason="sacrebleu not installed")
    def test_installed_backend_matches_vendored_on_committed_pairs(self):
        installed = load_scorer("installed")
        vendored = load_scorer("vendored")
        for hyp, ref in read_pairs(COMMITTED_PAIRS):
            assert installed.bleu([hyp], [ref]) == pytest.approx(
                vendored.bleu([hyp], [ref]), abs=1e-6
            )
            assert installed.chrfpp([hyp], [ref]) == pytest.approx(
                vendored.chrfpp([hyp], [ref]), abs=1e-6
            )

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            load_scorer("nope")


class TestScores:
    def test_identity_pair_is_100(self):
        # needs >= 4 tokens: corpus BLEU of a 4-gram-free pair is 0 by convention
        text = "the very same sentence is here"
        vectors = score_pairs([(text, text)], load_scorer("vendored"))
        assert vectors[0].bleu == 100.0
        assert vectors[0].chrfpp == 100.0

    def test_hand_derived_brevity_case(self):
        vectors = score_pairs([("the cat sat on", "the cat sat on the mat")],
                              load_scorer("vendored"))
        assert vectors[0].bleu == pytest.approx(60.65, abs=0.01)


class TestRegeneration:
    def test_diff_empty_against_committed_goldens(self, tmp_path):
        out = tmp_path / "regen.jsonl"
        scorer = regenerate_goldens(COMMITTED_PAIRS, out, backend="vendored")
        assert scorer.version == "vendored-2.4-compat"
        assert out.read_bytes() == COMMITTED_GOLDENS.read_bytes()

    def test_rerun_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        regenerate_goldens(COMMITTED_PAIRS, a, backend="vendored")
        regenerate_goldens(COMMITTED_PAIRS, b, backend="vendored")
        assert a.read_bytes() == b.read_bytes()

    def test_every_record_parses_with_expected_keys(self, tmp_path):
        out = tmp_path / "regen.jsonl"
        regenerate_goldens(COMMITTED_PAIRS, out, backend="vendored")
        rows = [json.loads(line) for line in out.read_text(encoding="utf-8").splitlines()]
        assert len(rows) == 50
        for row in rows:
            assert set(row) == {"hyp", "ref", "bleu", "chrfpp", "scorer"}
            assert 0.0 <= row["bleu"] <= 100.0
            assert 0.0 <= row["chrfpp"] <= 100.0


class TestPairsFile:
    def test_missing_keys_rejected(self, tmp_path):
        path = tmp_path / "pairs.jsonl"
        path.write_text('{"hyp": "only hyp"}\n', encoding="utf-8")
        with pytest.raises(ValueError, match="line 1"):
            read_pairs(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "pairs.jsonl"
        path.write_text("not json\n", encoding="utf-8")
        with pytest.raises(ValueError, match="line 1"):
            read_pairs(path)


class TestCli:
    def test_regenerates_and_reports_scorer(self, tmp_path, capsys):
        out = tmp_path / "golden.jsonl"
        code = main(["--pairs", str(COMMITTED_PAIRS), "--out", str(out), "--scorer", "vendored"])
        assert code == 0
        assert "vendored-2.4-compat" in capsys.readouterr().out
        assert out.exists()

    @pytest.mark.skipif(SACREBLEU_INSTALLED, reason="sacrebleu present in this environment")
    def test_installed_scorer_missing_aborts_with_instruction(self, tmp_path, capsys):
        code = main([
            "--pairs", str(COMMITTED_PAIRS),
            "--out", str(tmp_path / "g.jsonl"),
            "--scorer", "installed",
        ])
        assert code == 1
        assert "pip install sacrebleu" in capsys.readouterr().err
