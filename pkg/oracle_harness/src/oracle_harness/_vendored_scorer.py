"""Vendored copy of the reference scorer's default BLEU and chrF++ paths.

Projects routinely vendor the reference scorer to pin scoring semantics
(sockeye and NeMo ship the same file); this module does that for the two
default configurations the golden vectors are produced with:

- BLEU: 13a tokenizer, exponential smoothing, no effective-order scaling,
  single reference, mixed case.
- chrF++: character order 6, word order 2, beta 2, whitespace removed from
  character n-grams, effective-order convention, mixed case.

The code mirrors the reference implementation's statistics-list structure on
purpose; it is maintained against that structure, not against any other
scorer in this repository.
"""

import math
import re
from collections import Counter
from string import punctuation

VENDORED_VERSION = "vendored-2.4-compat"

# --- 13a tokenizer ---------------------------------------------------------

_13A_RULES = (
    (re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])"), r" \1 "),
    (re.compile(r"([^0-9])([\.,])"), r"\1 \2 "),
    (re.compile(r"([\.,])([^0-9])"), r" \1 \2"),
    (re.compile(r"([0-9])(\-)"), r"\1 \2 "),
)


def tok_13a(line):
    line = line.replace("<skipped>", "")
    line = line.replace("-\n", "")
    line = line.replace("\n", " ")
    if "&" in line:
        line = line.replace("&quot;", '"')
        line = line.replace("&amp;", "&")
        line = line.replace("&lt;", "<")
        line = line.replace("&gt;", ">")
    line = f" {line} "
    for regex, repl in _13A_RULES:
        line = regex.sub(repl, line)
    return " ".join(line.split())


# --- BLEU ------------------------------------------------------------------

MAX_NGRAM_ORDER = 4


def _extract_all_word_ngrams(tokens, max_order):
    ngrams = Counter()
    for n in range(1, max_order + 1):
        for i in range(len(tokens) - n + 1):
            ngrams[tuple(tokens[i : i + n])] += 1
    return ngrams


def _my_log(num):
    if num == 0.0:
        return -9999999999
    return math.log(num)


def bleu_segment_statistics(hypothesis, reference):
    """[sys_len, ref_len, correct_1..4, total_1..4] for one tokenized pair."""
    hyp_tokens = tok_13a(hypothesis.rstrip()).split()
    ref_tokens = tok_13a(reference.rstrip()).split()
    correct = [0] * MAX_NGRAM_ORDER
    total = [0] * MAX_NGRAM_ORDER
    hyp_ngrams = _extract_all_word_ngrams(hyp_tokens, MAX_NGRAM_ORDER)
    ref_ngrams = _extract_all_word_ngrams(ref_tokens, MAX_NGRAM_ORDER)
    for ngram, count in hyp_ngrams.items():
        n = len(ngram) - 1
        total[n] += count
        if ngram in ref_ngrams:
            correct[n] += min(count, ref_ngrams[ngram])
    return [len(hyp_tokens), len(ref_tokens)] + correct + total


def compute_bleu_from_statistics(stats):
    """Exp-smoothed BLEU on aggregated statistics, on the 0-100 scale."""
    sys_len, ref_len = stats[0], stats[1]
    correct = stats[2 : 2 + MAX_NGRAM_ORDER]
    total = stats[2 + MAX_NGRAM_ORDER :]

    if sys_len < ref_len:
        bp = math.exp(1 - ref_len / sys_len) if sys_len > 0 else 0.0
    else:
        bp = 1.0

    precisions = [0.0] * MAX_NGRAM_ORDER
    # No n-gram matched at any order: 0 by convention, no smoothing applied.
    if not any(correct):
        return 0.0

    smooth_mteval = 1.0
    for n in range(1, MAX_NGRAM_ORDER + 1):
        if total[n - 1] == 0:
            break
        if correct[n - 1] == 0:
            smooth_mteval *= 2.0
            precisions[n - 1] = 100.0 / (smooth_mteval * total[n - 1])
        else:
            precisions[n - 1] = 100.0 * correct[n - 1] / total[n - 1]

    return bp * math.exp(sum(_my_log(p) for p in precisions) / MAX_NGRAM_ORDER)


def corpus_bleu(hypotheses, references):
    agg = None
    for hyp, ref in zip(hypotheses, references):
        stats = bleu_segment_statistics(hyp, ref)
        agg = stats if agg is None else [a + b for a, b in zip(agg, stats)]
    if agg is None:
        raise ValueError("empty corpus")
    return compute_bleu_from_statistics(agg)


# --- chrF++ ----------------------------------------------------------------

CHRF_CHAR_ORDER = 6
CHRF_WORD_ORDER = 2
CHRF_BETA = 2

_PUNCTS = set(punctuation)


def _extract_all_char_ngrams(line, max_order):
    counters = []
    line = "".join(line.split())
    for n in range(1, max_order + 1):
        counters.append(Counter([line[i : i + n] for i in range(len(line) - n + 1)]))
    return counters


def _remove_punctuation(sent):
    tokenized = []
    for w in sent.split():
        if len(w) == 1:
            tokenized.append(w)
        else:
            if w[-1] in _PUNCTS:
                tokenized += [w[:-1], w[-1]]
            elif w[0] in _PUNCTS:
                tokenized += [w[0], w[1:]]
            else:
                tokenized.append(w)
    return tokenized


def _extract_all_word_ngrams_chrf(words, max_order):
    counters = []
    for n in range(1, max_order + 1):
        counters.append(Counter([" ".join(words[i : i + n]) for i in range(len(words) - n + 1)]))
    return counters


def _match_statistics(hyp_ngrams, ref_ngrams):
    match_count, hyp_count = 0, 0
    for ng, count in hyp_ngrams.items():
        hyp_count += count
        if ng in ref_ngrams:
            match_count += min(count, ref_ngrams[ng])
    return [hyp_count, sum(ref_ngrams.values()), match_count]


def chrf_segment_statistics(hypothesis, reference):
    """Flat [hyp, ref, match] triples: char orders 1..6 then word orders 1..2."""
    stats = []
    hyp_char = _extract_all_char_ngrams(hypothesis, CHRF_CHAR_ORDER)
    ref_char = _extract_all_char_ngrams(reference, CHRF_CHAR_ORDER)
    for h, r in zip(hyp_char, ref_char):
        stats += _match_statistics(h, r)
    hyp_words = _extract_all_word_ngrams_chrf(_remove_punctuation(hypothesis), CHRF_WORD_ORDER)
    ref_words = _extract_all_word_ngrams_chrf(_remove_punctuation(reference), CHRF_WORD_ORDER)
    for h, r in zip(hyp_words, ref_words):
        stats += _match_statistics(h, r)
    return stats


def compute_chrf_from_statistics(stats):
    """F-beta per order, averaged over effective orders, on the 0-100 scale."""
    eps = 1e-16
    score = 0.0
    effective_order = 0
    factor = CHRF_BETA**2
    for i in range(0, len(stats), 3):
        n_hyp, n_ref, n_match = stats[i : i + 3]
        prec = n_match / n_hyp if n_hyp > 0 else eps
        rec = n_match / n_ref if n_ref > 0 else eps
        denom = factor * prec + rec
        score += ((1 + factor) * prec * rec / denom) if denom > 0 else eps
        if n_hyp > 0 and n_ref > 0:
            effective_order += 1
    if effective_order == 0:
        return 0.0
    return 100.0 * score / effective_order


def corpus_chrf_pp(hypotheses, references):
    agg = None
    for hyp, ref in zip(hypotheses, references):
        stats = chrf_segment_statistics(hyp, ref)
        agg = stats if agg is None else [a + b for a, b in zip(agg, stats)]
    if agg is None:
        raise ValueError("empty corpus")
    return compute_chrf_from_statistics(agg)
