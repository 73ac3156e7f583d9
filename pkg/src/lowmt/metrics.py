"""Self-contained corpus-level BLEU and chrF++ scorers.

Both metrics reproduce the default behaviour of the standard scorer used for
shareable MT results: BLEU with mteval-13a word tokenization, exponential
smoothing of zero-match orders and the brevity penalty; chrF++ with character
orders 1-6 plus word orders 1-2, beta=2, whitespace excluded from character
n-grams, and the effective-order convention for orders without n-grams.
Scores are on the 0-100 scale.
"""

from __future__ import annotations

import math
import re
import string
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

# log(0) stand-in so an all-zero precision drives exp() to 0 instead of raising
LOG_ZERO = -9999999999

_PUNCTUATION = set(string.punctuation)


class MetricError(ValueError):
    """Raised for invalid metric inputs (for example length mismatches)."""


@dataclass(frozen=True)
class BleuConfig:
    """BLEU parameters; the defaults match the standard scorer's defaults."""

    max_order: int = 4
    weights: Optional[tuple[float, ...]] = None  # None = uniform 1/max_order
    smoothing: str = "exp"  # exp | floor | add-k | none
    tokenizer: str = "13a"  # 13a | none
    smoothing_value: Optional[float] = None
    effective_order: bool = False

    def __post_init__(self):
        if self.max_order < 1:
            raise ValueError(f"max_order must be >= 1, got {self.max_order}")
        if self.weights is not None:
            if len(self.weights) != self.max_order:
                raise ValueError("need one weight per n-gram order")
            if any(w <= 0 for w in self.weights):
                raise ValueError("weights must be positive")
            if abs(sum(self.weights) - 1.0) > 1e-9:
                raise ValueError(f"weights must sum to 1, got {sum(self.weights)!r}")
        if self.smoothing not in ("exp", "floor", "add-k", "none"):
            raise ValueError(f"unknown smoothing {self.smoothing!r}")
        if self.tokenizer not in ("13a", "none"):
            raise ValueError(f"unknown tokenizer {self.tokenizer!r}")

    def resolved_weights(self) -> tuple[float, ...]:
        if self.weights is not None:
            return self.weights
        return tuple(1.0 / self.max_order for _ in range(self.max_order))


@dataclass(frozen=True)
class ChrfConfig:
    """chrF++ parameters; char_order=6, word_order=2, beta=2 is the ++ variant."""

    char_order: int = 6
    word_order: int = 2
    beta: float = 2.0
    remove_whitespace: bool = True
    lowercase: bool = False

    def __post_init__(self):
        if self.char_order < 1:
            raise ValueError(f"char_order must be >= 1, got {self.char_order}")
        if self.word_order < 0:
            raise ValueError(f"word_order must be >= 0, got {self.word_order}")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")


@dataclass
class ScoreReport:
    """A metric score plus the statistics it was computed from."""

    metric: str
    score: float
    hyp_len: int = 0
    ref_len: int = 0
    brevity_penalty: float = 1.0
    precisions: list[float] = field(default_factory=list)  # percent, per order
    recalls: list[float] = field(default_factory=list)  # chrF++ only
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"metric": self.metric, "score": self.score, "config": dict(self.config)}
        if self.metric == "bleu":
            out.update(
                precisions=self.precisions,
                brevity_penalty=self.brevity_penalty,
                hyp_len=self.hyp_len,
                ref_len=self.ref_len,
            )
        else:
            out.update(precisions=self.precisions, recalls=self.recalls)
        return out


# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------

_13A_STEPS = [
    (re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])"), r" \1 "),
    (re.compile(r"([^0-9])([\.,])"), r"\1 \2 "),
    (re.compile(r"([\.,])([^0-9])"), r" \1 \2"),
    (re.compile(r"([0-9])(-)"), r"\1 \2 "),
    (re.compile(r"\s+"), r" "),
]


def tokenize_13a(line: str) -> str:
    """mteval-13a word tokenization (the WMT standard for western languages)."""
    norm = line
    norm = norm.replace("<skipped>", "")
    norm = norm.replace("-\n", "")
    norm = norm.replace("\n", " ")
    norm = norm.replace("&quot;", '"')
    norm = norm.replace("&amp;", "&")
    norm = norm.replace("&lt;", "<")
    norm = norm.replace("&gt;", ">")
    norm = f" {norm} "
    for pattern, repl in _13A_STEPS:
        norm = pattern.sub(repl, norm)
    return norm.strip()


def _tokenize(line: str, tokenizer: str) -> list[str]:
    if tokenizer == "13a":
        return tokenize_13a(line.rstrip()).split()
    return line.rstrip().split()


# ---------------------------------------------------------------------------
# n-gram counting (shared kernel)
# ---------------------------------------------------------------------------


def ngram_counts(tokens: Sequence, order: int) -> Counter:
    """Counts of contiguous n-grams of exactly ``order`` items, as tuples."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    return Counter(tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1))


def _clipped_matches(hyp_counts: Counter, ref_counts: Counter) -> int:
    return sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items() if gram in ref_counts)


# ---------------------------------------------------------------------------
# BLEU
# ---------------------------------------------------------------------------


def _log_floor(value: float) -> float:
    return math.log(value) if value > 0.0 else LOG_ZERO


def bleu(
    hypotheses: Sequence[str],
    references: Sequence[str],
    config: BleuConfig = BleuConfig(),
) -> ScoreReport:
    """Corpus-level BLEU: counts are aggregated over all pairs, then combined.

    score = 100 * BP * exp(sum_n w_n * log p~_n) with clipped modified
    precisions p_n, smoothed per ``config.smoothing``, and
    BP = 1 if c >= r else exp(1 - r/c) (0 for an empty hypothesis corpus).
    """
    if len(hypotheses) != len(references):
        raise MetricError(
            f"hypothesis/reference count mismatch: {len(hypotheses)} vs {len(references)}"
        )
    if not hypotheses:
        raise MetricError("need at least one hypothesis/reference pair")

    order = config.max_order
    correct = [0] * order
    total = [0] * order
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_tokens = _tokenize(hyp, config.tokenizer)
        ref_tokens = _tokenize(ref, config.tokenizer)
        hyp_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        for n in range(1, order + 1):
            hyp_grams = ngram_counts(hyp_tokens, n) if len(hyp_tokens) >= n else Counter()
            ref_grams = ngram_counts(ref_tokens, n) if len(ref_tokens) >= n else Counter()
            correct[n - 1] += _clipped_matches(hyp_grams, ref_grams)
            total[n - 1] += sum(hyp_grams.values())

    if hyp_len < ref_len:
        bp = math.exp(1 - ref_len / hyp_len) if hyp_len > 0 else 0.0
    else:
        bp = 1.0

    report = ScoreReport(
        metric="bleu",
        score=0.0,
        hyp_len=hyp_len,
        ref_len=ref_len,
        brevity_penalty=bp,
        precisions=[0.0] * order,
        config={
            "max_order": order,
            "smoothing": config.smoothing,
            "tokenizer": config.tokenizer,
            "effective_order": config.effective_order,
        },
    )

    # No match at any order: score is 0 by convention (smoothing is not applied).
    if not any(correct):
        return report

    smooth_value = config.smoothing_value
    if smooth_value is None:
        smooth_value = {"floor": 0.0, "add-k": 1.0}.get(config.smoothing, 0.0)

    precisions = [0.0] * order
    smooth_exp = 1.0
    seen_orders = order
    for n in range(1, order + 1):
        c, t = correct[n - 1], total[n - 1]
        if config.smoothing == "add-k" and n > 1:
            c += smooth_value
            t += smooth_value
        if t == 0:
            break
        if config.effective_order:
            seen_orders = n
        if c == 0:
            if config.smoothing == "exp":
                smooth_exp *= 2.0
                precisions[n - 1] = 100.0 / (smooth_exp * t)
            elif config.smoothing == "floor":
                precisions[n - 1] = 100.0 * smooth_value / t
        else:
            precisions[n - 1] = 100.0 * c / t

    weights = config.resolved_weights()
    if config.effective_order and seen_orders < order:
        # Renormalize the active prefix so the weights still sum to 1.
        active = weights[:seen_orders]
        weights = tuple(w / sum(active) for w in active)
    log_sum = sum(w * _log_floor(p) for w, p in zip(weights, precisions[: len(weights)]))
    # exp(log(100)) overshoots 100 by a few ulps; keep the score in [0, 100]
    report.score = min(100.0, bp * math.exp(log_sum))
    report.precisions = precisions
    return report


# ---------------------------------------------------------------------------
# chrF++
# ---------------------------------------------------------------------------


def _chrf_words(segment: str) -> list[str]:
    """Whitespace tokens with one leading or trailing punctuation mark split off."""
    words = []
    for token in segment.split():
        if len(token) == 1:
            words.append(token)
        elif token[-1] in _PUNCTUATION:
            words.extend([token[:-1], token[-1]])
        elif token[0] in _PUNCTUATION:
            words.extend([token[0], token[1:]])
        else:
            words.append(token)
    return words


def _chrf_segment_stats(hyp: str, ref: str, config: ChrfConfig) -> list[int]:
    """Per order: [hyp n-gram total, ref n-gram total, clipped match count]."""
    if config.lowercase:
        hyp, ref = hyp.lower(), ref.lower()
    hyp_chars = "".join(hyp.split()) if config.remove_whitespace else hyp
    ref_chars = "".join(ref.split()) if config.remove_whitespace else ref

    stats = []
    for n in range(1, config.char_order + 1):
        hyp_grams = ngram_counts(hyp_chars, n)
        ref_grams = ngram_counts(ref_chars, n)
        stats += [sum(hyp_grams.values()), sum(ref_grams.values()), _clipped_matches(hyp_grams, ref_grams)]
    if config.word_order > 0:
        hyp_words = _chrf_words(hyp)
        ref_words = _chrf_words(ref)
        for n in range(1, config.word_order + 1):
            hyp_grams = ngram_counts(hyp_words, n)
            ref_grams = ngram_counts(ref_words, n)
            stats += [sum(hyp_grams.values()), sum(ref_grams.values()), _clipped_matches(hyp_grams, ref_grams)]
    return stats


def chrf_pp(
    hypotheses: Sequence[str],
    references: Sequence[str],
    config: ChrfConfig = ChrfConfig(),
) -> ScoreReport:
    """Corpus-level chrF++: statistics are summed over pairs, then one F-score.

    For every active order, F_beta = (1+b^2) P R / (b^2 P + R) from clipped
    matches; the score is 100 times the mean F over orders that have n-grams
    on both sides (the effective-order convention). Orders with an empty side
    contribute via an epsilon placeholder exactly as the standard scorer does.
    """
    if len(hypotheses) != len(references):
        raise MetricError(
            f"hypothesis/reference count mismatch: {len(hypotheses)} vs {len(references)}"
        )
    if not hypotheses:
        raise MetricError("need at least one hypothesis/reference pair")

    n_orders = config.char_order + config.word_order
    totals = [0] * (3 * n_orders)
    for hyp, ref in zip(hypotheses, references):
        for i, value in enumerate(_chrf_segment_stats(hyp, ref, config)):
            totals[i] += value

    eps = 1e-16
    factor = config.beta**2
    f_sum = 0.0
    effective = 0
    precisions = []
    recalls = []
    for i in range(n_orders):
        n_hyp, n_ref, n_match = totals[3 * i : 3 * i + 3]
        prec = n_match / n_hyp if n_hyp > 0 else eps
        rec = n_match / n_ref if n_ref > 0 else eps
        denom = factor * prec + rec
        f_sum += ((1 + factor) * prec * rec / denom) if denom > 0 else eps
        if n_hyp > 0 and n_ref > 0:
            effective += 1
        precisions.append(100.0 * prec if n_hyp > 0 else 0.0)
        recalls.append(100.0 * rec if n_ref > 0 else 0.0)

    # epsilon placeholders can push a perfect score a few ulps past 100
    score = min(100.0, 100.0 * f_sum / effective) if effective > 0 else 0.0
    return ScoreReport(
        metric="chrfpp",
        score=score,
        precisions=precisions,
        recalls=recalls,
        config={
            "char_order": config.char_order,
            "word_order": config.word_order,
            "beta": config.beta,
            "remove_whitespace": config.remove_whitespace,
        },
    )
