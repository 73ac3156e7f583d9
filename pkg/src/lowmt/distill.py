"""Knowledge distillation: soft-target generation and student training.

A pluggable teacher translates a monolingual source corpus; the resulting
records train a student either sequence-level (ordinary cross-entropy on the
teacher's translations, the default) or token-level (cross-entropy against
the teacher's per-position distributions). A rule-based ToyTeacher over a
synthetic language pair serves as a perfect, desk-scale oracle, and
``kd_experiment`` runs the full pseudo / distilled / ground-truth comparison
grid on it.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol, Sequence, runtime_checkable

import numpy as np

from .corpus import ParallelRecord
from .metrics import BleuConfig, ChrfConfig, bleu, chrf_pp
from .model import (
    EOS,
    ModelConfig,
    StudentModel,
    TrainConfig,
    TrainingPair,
    TrainResult,
    Vocabulary,
    greedy_decode,
    train,
)
from .pseudo import BilingualDictionary, EifelerRuleConfig, pseudo_translate

logger = logging.getLogger(__name__)

ROW_STOCHASTIC_TOL = 1e-4
FAILURE_RATE_LIMIT = 0.10


class TeacherError(RuntimeError):
    """Raised by a teacher that cannot translate a sentence."""


class DistillError(ValueError):
    """Raised for invalid distillation inputs."""


@runtime_checkable
class Teacher(Protocol):
    """A deterministic translator; distributions are optional capability."""

    teacher_id: str
    produces_distributions: bool

    def translate(self, sentence: str) -> list[str]:
        """Target token sequence for one source sentence."""

    def distributions(self, sentence: str) -> Optional[list[dict[str, float]]]:
        """Per-position target distributions as token->probability rows."""


@dataclass(frozen=True)
class SoftTargetRecord:
    """One teacher output: source sentence, hypothesis tokens, optional rows."""

    id: str
    source: str
    hypothesis: tuple[str, ...]
    distributions: Optional[tuple[dict[str, float], ...]] = None
    teacher_id: str = ""

    def __post_init__(self):
        if not self.hypothesis:
            raise DistillError(f"record {self.id!r}: empty hypothesis")
        if self.distributions is not None:
            if len(self.distributions) != len(self.hypothesis):
                raise DistillError(
                    f"record {self.id!r}: {len(self.distributions)} distribution rows "
                    f"for {len(self.hypothesis)} hypothesis tokens"
                )
            for pos, row in enumerate(self.distributions):
                total = sum(row.values())
                if abs(total - 1.0) > ROW_STOCHASTIC_TOL or min(row.values(), default=0.0) < 0:
                    raise DistillError(
                        f"record {self.id!r}: row {pos} is not a distribution (sum {total!r})"
                    )


def swap_adjacent(tokens: Sequence[str]) -> list[str]:
    """Deterministic local reordering: swap each adjacent pair, odd tail stays."""
    out = list(tokens)
    for i in range(0, len(out) - 1, 2):
        out[i], out[i + 1] = out[i + 1], out[i]
    return out


class ToyTeacher:
    """Rule-based exact translator: word-wise mapping plus adjacent-pair swaps.

    Emits one-hot rows, or smoothed rows that keep mass ``1 - alpha`` on the
    correct token and spread ``alpha`` uniformly over the rest of the target
    vocabulary.
    """

    def __init__(self, mapping: dict[str, str], alpha: float = 0.0, teacher_id: str = "toy-oracle"):
        if not 0.0 <= alpha < 0.5:
            raise DistillError(f"alpha must be in [0, 0.5), got {alpha}")
        self.mapping = dict(mapping)
        self.alpha = alpha
        self.teacher_id = teacher_id
        self.target_words = sorted(set(self.mapping.values()))
        self.produces_distributions = True

    def translate(self, sentence: str) -> list[str]:
        tokens = sentence.split()
        if not tokens:
            raise TeacherError("empty source sentence")
        try:
            mapped = [self.mapping[tok] for tok in tokens]
        except KeyError as exc:
            raise TeacherError(f"word {exc.args[0]!r} not in the teacher lexicon") from exc
        return swap_adjacent(mapped)

    def distributions(self, sentence: str) -> list[dict[str, float]]:
        rows = []
        for token in self.translate(sentence):
            if self.alpha == 0.0:
                rows.append({token: 1.0})
            else:
                rest = self.alpha / (len(self.target_words) - 1)
                row = {w: rest for w in self.target_words if w != token}
                row[token] = 1.0 - self.alpha
                rows.append(row)
        return rows


# ---------------------------------------------------------------------------
# Soft-target generation and serialization
# ---------------------------------------------------------------------------


def generate_soft_targets(
    teacher: Teacher,
    sources: Sequence[str],
    ids: Optional[Sequence[str]] = None,
) -> tuple[list[SoftTargetRecord], list[str]]:
    """One record per source, in order; failures are skipped and tallied.

    Returns (records, skipped_ids); more than 10% failures aborts the run.
    """
    if not sources:
        raise DistillError("no source sentences given")
    if ids is None:
        ids = [str(i) for i in range(len(sources))]
    if len(ids) != len(sources):
        raise DistillError("need one id per source sentence")

    records = []
    skipped = []
    started = time.perf_counter()
    for rec_id, source in zip(ids, sources):
        try:
            hypothesis = tuple(teacher.translate(source))
            dists = teacher.distributions(source) if teacher.produces_distributions else None
            record = SoftTargetRecord(
                id=rec_id,
                source=source,
                hypothesis=hypothesis,
                distributions=tuple(dists) if dists is not None else None,
                teacher_id=teacher.teacher_id,
            )
        except (TeacherError, DistillError) as exc:
            logger.warning("skipping record %s: %s", rec_id, exc)
            skipped.append(rec_id)
            continue
        records.append(record)
    elapsed = time.perf_counter() - started
    rate = len(sources) / elapsed if elapsed > 0 else float("inf")
    logger.info(
        "soft targets: %d/%d sentences in %.2fs (%.0f sentences/s)",
        len(records), len(sources), elapsed, rate,
    )
    if len(skipped) > FAILURE_RATE_LIMIT * len(sources):
        raise RuntimeError(
            f"teacher failed on {len(skipped)}/{len(sources)} sentences "
            f"(limit {FAILURE_RATE_LIMIT:.0%})"
        )
    return records, skipped


def save_soft_targets(records: Iterable[SoftTargetRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            obj = {"id": record.id, "src": record.source, "hyp": list(record.hypothesis)}
            if record.distributions is not None:
                obj["dist"] = [dict(sorted(row.items())) for row in record.distributions]
            obj["teacher"] = record.teacher_id
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_soft_targets(path) -> list[SoftTargetRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DistillError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
            dist = obj.get("dist")
            records.append(
                SoftTargetRecord(
                    id=str(obj["id"]),
                    source=obj["src"],
                    hypothesis=tuple(obj["hyp"]),
                    distributions=tuple(dist) if dist is not None else None,
                    teacher_id=obj.get("teacher", ""),
                )
            )
    return records


# ---------------------------------------------------------------------------
# Student training on soft targets
# ---------------------------------------------------------------------------


def build_student(
    records: Sequence[SoftTargetRecord],
    model_config: ModelConfig,
    seed: int,
) -> StudentModel:
    """Fresh student with vocabularies drawn from the records (deterministic)."""
    src_vocab = Vocabulary.from_tokens(t for r in records for t in r.source.split())
    tgt_vocab = Vocabulary.from_tokens(t for r in records for t in r.hypothesis)
    return StudentModel(src_vocab, tgt_vocab, model_config, seed=seed)


def _sequence_pairs(records, model: StudentModel) -> list[TrainingPair]:
    return [
        TrainingPair(
            src=model.src_vocab.encode(r.source.split()),
            tgt=model.tgt_vocab.encode(r.hypothesis),
        )
        for r in records
    ]


def distill_sequence_level(
    records: Sequence[SoftTargetRecord],
    model_config: ModelConfig,
    train_config: TrainConfig,
    model: Optional[StudentModel] = None,
) -> TrainResult:
    """The operative KD mode: hard cross-entropy on (source, teacher hypothesis)."""
    if not records:
        raise DistillError("no soft-target records")
    if model is None:
        model = build_student(records, model_config, seed=train_config.seed)
    return train(model, _sequence_pairs(records, model), train_config, loss="hard")


def _dense_rows(record: SoftTargetRecord, vocab: Vocabulary) -> np.ndarray:
    """Teacher rows over the student vocabulary, plus a one-hot EOS row."""
    rows = np.zeros((len(record.hypothesis) + 1, len(vocab)))
    for pos, row in enumerate(record.distributions):
        for token, prob in row.items():
            rows[pos, vocab.encode([token])[0]] += prob
    rows[len(record.hypothesis), EOS] = 1.0
    return rows


def distill_token_level(
    records: Sequence[SoftTargetRecord],
    model_config: ModelConfig,
    train_config: TrainConfig,
    model: Optional[StudentModel] = None,
) -> TrainResult:
    """Token-level KD against the teacher's per-position distributions."""
    if not records:
        raise DistillError("no soft-target records")
    for record in records:
        if record.distributions is None:
            raise DistillError(f"record {record.id!r} carries no distributions")
    if model is None:
        model = build_student(records, model_config, seed=train_config.seed)
    pairs = _sequence_pairs(records, model)
    for pair, record in zip(pairs, records):
        pair.teacher_dists = _dense_rows(record, model.tgt_vocab)
    return train(model, pairs, train_config, loss="soft")


# ---------------------------------------------------------------------------
# Synthetic language pair for the desk-scale experiment
# ---------------------------------------------------------------------------

_ONSETS = "bdfgklmprstvz"
_VOWELS = "aeiou"


def _word_list(prefix: str, count: int) -> list[str]:
    words = []
    for onset in _ONSETS:
        for vowel in _VOWELS:
            words.append(f"{prefix}{onset}{vowel}")
            if len(words) == count:
                return words
    raise ValueError(f"cannot build {count} words")


@dataclass(frozen=True)
class ToyLanguage:
    """Three parallel word inventories: LRL source, HRL relative, EN-like target.

    The true translation of an LRL sentence is its word-wise target image with
    adjacent pairs swapped. The HRL differs from the LRL only in surface forms
    (a word-wise bijection), which makes dictionary-based pseudo-translation
    meaningful: a partial HRL->LRL dictionary recovers only part of a sentence.
    """

    vocab_size: int = 30

    @property
    def lrl_words(self) -> list[str]:
        return _word_list("", self.vocab_size)

    @property
    def hrl_words(self) -> list[str]:
        return [w + "ch" for w in self.lrl_words]

    @property
    def tgt_words(self) -> list[str]:
        return [w + "t" for w in self.lrl_words]

    def lrl_to_tgt(self) -> dict[str, str]:
        return dict(zip(self.lrl_words, self.tgt_words))

    def lrl_to_hrl(self) -> dict[str, str]:
        return dict(zip(self.lrl_words, self.hrl_words))

    def sample_sentence(self, rng: np.random.Generator, lo: int = 3, hi: int = 9) -> str:
        n = int(rng.integers(lo, hi + 1))
        words = self.lrl_words
        return " ".join(words[int(i)] for i in rng.integers(0, len(words), size=n))

    def translate(self, sentence: str) -> str:
        mapping = self.lrl_to_tgt()
        return " ".join(swap_adjacent([mapping[w] for w in sentence.split()]))


# ---------------------------------------------------------------------------
# The experiment grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    train_sentences: int = 2000
    heldout_a: int = 200
    heldout_b: int = 100
    second_round_sentences: int = 100
    dictionary_coverage: float = 0.7
    steps: int = 4000
    second_round_steps: int = 500
    lr: float = 5e-3
    batch_size: int = 16
    embed_dim: int = 24
    hidden_dim: int = 32

    def model_config(self) -> ModelConfig:
        return ModelConfig(embed_dim=self.embed_dim, hidden_dim=self.hidden_dim, max_len=16)


@dataclass
class ExperimentRow:
    training: str  # pseudo | distilled | ground-truth
    second_round: bool
    scores: dict[str, dict[str, float]] = field(default_factory=dict)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list[ExperimentRow]
    teacher_agreement_bleu: float  # distilled student vs teacher outputs, held-out A

    def to_dict(self) -> dict:
        return {
            "config": vars(self.config),
            "teacher_agreement_bleu": self.teacher_agreement_bleu,
            "rows": [
                {"training": r.training, "second_round": r.second_round, "scores": r.scores}
                for r in self.rows
            ],
        }

    def to_markdown(self) -> str:
        lines = [
            "| training | 2nd fine-tune | heldout_a BLEU | heldout_a chrF++ | heldout_b BLEU | heldout_b chrF++ |",
            "|---|---|---|---|---|---|",
        ]
        for r in self.rows:
            a, b = r.scores["heldout_a"], r.scores["heldout_b"]
            lines.append(
                f"| {r.training} | {'yes' if r.second_round else 'no'} "
                f"| {a['bleu']:.3f} | {a['chrfpp']:.3f} | {b['bleu']:.3f} | {b['chrfpp']:.3f} |"
            )
        return "\n".join(lines) + "\n"


def _decode_corpus(model: StudentModel, sources: Sequence[str], max_len: int = 16) -> list[str]:
    out = []
    for sentence in sources:
        ids = model.src_vocab.encode(sentence.split())
        out.append(" ".join(model.tgt_vocab.decode(greedy_decode(model, ids, max_len))))
    return out


def _score(hyps: Sequence[str], refs: Sequence[str]) -> dict[str, float]:
    return {
        "bleu": bleu(hyps, refs, BleuConfig()).score,
        "chrfpp": chrf_pp(hyps, refs, ChrfConfig()).score,
    }


def kd_experiment(config: ExperimentConfig = ExperimentConfig()) -> ExperimentReport:
    """Train {pseudo, distilled, ground-truth} x {with, without second round}.

    Every corpus, model, and score is a pure function of the config (one seed
    drives sampling, initialization, and batching).
    """
    lang = ToyLanguage()
    rng = np.random.default_rng(config.seed)
    model_config = config.model_config()

    # parallel ground truth, two held-out sets, and a small clean second-round set
    gt_sources = [lang.sample_sentence(rng) for _ in range(config.train_sentences)]
    heldout = {
        "heldout_a": [lang.sample_sentence(rng) for _ in range(config.heldout_a)],
        "heldout_b": [lang.sample_sentence(rng) for _ in range(config.heldout_b)],
    }
    second_round_sources = [lang.sample_sentence(rng) for _ in range(config.second_round_sentences)]
    # fresh monolingual corpus for distillation (not parallel with anything)
    mono_sources = [lang.sample_sentence(rng) for _ in range(config.train_sentences)]

    teacher = ToyTeacher(lang.lrl_to_tgt())
    refs = {name: [lang.translate(s) for s in sources] for name, sources in heldout.items()}

    # pseudo route: HRL-EN parallel data plus a partial HRL->LRL dictionary
    hrl_map = lang.lrl_to_hrl()
    hrl_records = []
    for i, source in enumerate(gt_sources):
        hrl = " ".join(hrl_map[w] for w in source.split())
        hrl_records.append(ParallelRecord(id=str(i), hrl=hrl, en=lang.translate(source)))
    covered = int(round(config.dictionary_coverage * len(lang.lrl_words)))
    cover_idx = rng.permutation(len(lang.lrl_words))[:covered]
    dictionary = BilingualDictionary(
        entries={lang.hrl_words[i]: lang.lrl_words[i] for i in sorted(cover_idx)}
    )
    pseudo_records, _ = pseudo_translate(hrl_records, dictionary, EifelerRuleConfig())

    def to_soft_records(pairs: Sequence[tuple[str, str]]) -> list[SoftTargetRecord]:
        return [
            SoftTargetRecord(id=str(i), source=src, hypothesis=tuple(tgt.split()))
            for i, (src, tgt) in enumerate(pairs)
        ]

    corpora = {
        "pseudo": to_soft_records([(r.lrl, r.en) for r in pseudo_records]),
        "distilled": [
            SoftTargetRecord(
                id=r.id, source=r.source, hypothesis=r.hypothesis, teacher_id=r.teacher_id
            )
            for r in generate_soft_targets(teacher, mono_sources)[0]
        ],
        "ground-truth": to_soft_records([(s, lang.translate(s)) for s in gt_sources]),
    }

    second_round_records = to_soft_records(
        [(s, lang.translate(s)) for s in second_round_sources]
    )

    train_config = TrainConfig(
        lr=config.lr,
        batch_size=config.batch_size,
        max_steps=config.steps,
        seed=config.seed,
    )
    if config.second_round_steps > train_config.second_round_max_steps:
        raise ValueError("second_round_steps exceeds the configured cap")

    rows = []
    teacher_agreement = None
    for name, records in corpora.items():
        result = distill_sequence_level(records, model_config, train_config)
        base = result.model

        for second_round in (False, True):
            if second_round:
                # continue from round-one parameters on the small clean set
                ft_config = TrainConfig(
                    lr=config.lr,
                    batch_size=config.batch_size,
                    max_steps=config.second_round_steps,
                    seed=config.seed + 1,
                )
                model = _clone_model(base)
                train(model, _sequence_pairs(second_round_records, model), ft_config, loss="hard")
            else:
                model = base
            row = ExperimentRow(training=name, second_round=second_round)
            for set_name, sources in heldout.items():
                hyps = _decode_corpus(model, sources)
                row.scores[set_name] = _score(hyps, refs[set_name])
            rows.append(row)

        if name == "distilled":
            teacher_hyps = [" ".join(teacher.translate(s)) for s in heldout["heldout_a"]]
            student_hyps = _decode_corpus(base, heldout["heldout_a"])
            teacher_agreement = bleu(student_hyps, teacher_hyps, BleuConfig()).score

    return ExperimentReport(config=config, rows=rows, teacher_agreement_bleu=teacher_agreement)


def _clone_model(model: StudentModel) -> StudentModel:
    clone = StudentModel.__new__(StudentModel)
    clone.src_vocab = model.src_vocab
    clone.tgt_vocab = model.tgt_vocab
    clone.config = model.config
    clone.params = {name: arr.copy() for name, arr in model.params.items()}
    return clone


def write_experiment_report(report: ExperimentReport, json_path, markdown_path) -> None:
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_dict(), fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    with open(markdown_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_markdown())
