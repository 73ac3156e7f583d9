"""Golden-vector regeneration: score a fixed pairs file with the reference scorer.

Reads line-delimited JSON ``{"hyp": ..., "ref": ...}`` pairs and writes one
GoldenVector per line: ``{"hyp", "ref", "bleu", "chrfpp", "scorer"}`` with
scores rounded to 4 decimals and stable key order, so reruns are
byte-identical for a fixed scorer version.

Each pair is scored as a single-segment corpus under the scorer defaults
(BLEU: 13a + exponential smoothing; chrF++: char order 6, word order 2,
beta 2, whitespace excluded). Scoring is delegated to the installed
``sacrebleu`` package when available, otherwise to the vendored pinned copy
of the same code paths; ``scorer="installed"`` insists on the real package
and aborts with an install instruction when it is missing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

from . import _vendored_scorer

INSTALL_INSTRUCTION = (
    "the canonical reference scorer is not installed; run `pip install sacrebleu`"
    " (>=2.0) and rerun"
)


class ScorerUnavailableError(RuntimeError):
    """Raised when the requested scorer backend cannot be loaded."""


class PairsFileError(ValueError):
    """Raised for malformed pairs files."""


@dataclass(frozen=True)
class GoldenVector:
    hyp: str
    ref: str
    bleu: float
    chrfpp: float
    scorer: str

    def __post_init__(self):
        if not (0.0 <= self.bleu <= 100.0 and 0.0 <= self.chrfpp <= 100.0):
            raise ValueError(f"scores out of [0, 100]: bleu={self.bleu}, chrfpp={self.chrfpp}")
        if not self.scorer:
            raise ValueError("scorer version string must be non-empty")

    def to_json(self) -> str:
        return json.dumps(
            {
                "hyp": self.hyp,
                "ref": self.ref,
                "bleu": self.bleu,
                "chrfpp": self.chrfpp,
                "scorer": self.scorer,
            },
            ensure_ascii=False,
        )


@dataclass(frozen=True)
class Scorer:
    version: str
    bleu: Callable[[Sequence[str], Sequence[str]], float]
    chrfpp: Callable[[Sequence[str], Sequence[str]], float]


def _load_installed() -> Scorer:
    try:
        import sacrebleu
    except ImportError as exc:
        raise ScorerUnavailableError(INSTALL_INSTRUCTION) from exc

    bleu_metric = sacrebleu.BLEU()
    chrf_metric = sacrebleu.CHRF(word_order=2)

    def score_bleu(hyps, refs):
        return bleu_metric.corpus_score(list(hyps), [list(refs)]).score

    def score_chrf(hyps, refs):
        return chrf_metric.corpus_score(list(hyps), [list(refs)]).score

    return Scorer(f"sacrebleu-{sacrebleu.__version__}", score_bleu, score_chrf)


def _load_vendored() -> Scorer:
    return Scorer(
        _vendored_scorer.VENDORED_VERSION,
        _vendored_scorer.corpus_bleu,
        _vendored_scorer.corpus_chrf_pp,
    )


def load_scorer(backend: str = "auto") -> Scorer:
    """Load a scorer backend: installed | vendored | auto (installed, then vendored)."""
    if backend == "installed":
        return _load_installed()
    if backend == "vendored":
        return _load_vendored()
    if backend == "auto":
        try:
            return _load_installed()
        except ScorerUnavailableError:
            return _load_vendored()
    raise ValueError(f"unknown scorer backend {backend!r}")


def read_pairs(path) -> list[tuple[str, str]]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PairsFileError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict) or "hyp" not in obj or "ref" not in obj:
                raise PairsFileError(f"line {line_no}: need keys 'hyp' and 'ref'")
            pairs.append((str(obj["hyp"]), str(obj["ref"])))
    return pairs


def score_pairs(pairs: Sequence[tuple[str, str]], scorer: Scorer) -> list[GoldenVector]:
    vectors = []
    for hyp, ref in pairs:
        vectors.append(
            GoldenVector(
                hyp=hyp,
                ref=ref,
                bleu=round(scorer.bleu([hyp], [ref]), 4),
                chrfpp=round(scorer.chrfpp([hyp], [ref]), 4),
                scorer=scorer.version,
            )
        )
    return vectors


def regenerate_goldens(pairs_path, out_path, backend: str = "auto") -> Scorer:
    """Score the pairs file and write the golden vector file; returns the scorer used."""
    scorer = load_scorer(backend)
    vectors = score_pairs(read_pairs(pairs_path), scorer)
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        for vec in vectors:
            fh.write(vec.to_json() + "\n")
    return scorer
