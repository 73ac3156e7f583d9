"""Parallel corpus ingestion, validation, filtering, splitting, and serialization.

A corpus is a sequence of sentence triples (lb / de / en) in which any side may
be absent. Two on-disk formats are supported:

- JSONL: one object per line with keys ``id``, ``lb``, ``de``, ``en``;
  absent keys mean absent sides.
- TSV: four tab-separated columns ``id, lb, de, en`` with the empty string
  meaning absent; no quoting, newline-delimited.

All operations are pure over immutable inputs.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

# in-memory field name -> JSONL key
SIDES = ("lrl", "hrl", "en")
JSONL_KEYS = {"lrl": "lb", "hrl": "de", "en": "en"}


class CorpusError(ValueError):
    """Raised for malformed corpus files or invalid records."""


@dataclass(frozen=True)
class ParallelRecord:
    """One sentence triple; ``None`` marks an absent side."""

    id: str
    lrl: Optional[str] = None
    hrl: Optional[str] = None
    en: Optional[str] = None

    def __post_init__(self):
        if self.lrl is None and self.hrl is None and self.en is None:
            raise CorpusError(f"record {self.id!r}: no sides present")
        for side in SIDES:
            text = getattr(self, side)
            if text is not None and ("\n" in text or "\r" in text):
                raise CorpusError(f"record {self.id!r}: line break in side {side!r}")

    def present_sides(self) -> tuple[str, ...]:
        return tuple(s for s in SIDES if getattr(self, s) is not None)


@dataclass(frozen=True)
class LengthFilterSpec:
    """Inclusive character-count bounds applied to record sides.

    ``sides=None`` applies the bounds to every side present in each record;
    otherwise only the named sides are checked, and records missing one of
    them are dropped.
    """

    min_chars: int = 50
    max_chars: int = 500
    sides: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if not (0 < self.min_chars <= self.max_chars):
            raise ValueError(
                f"need 0 < min_chars <= max_chars, got [{self.min_chars}, {self.max_chars}]"
            )
        if self.sides is not None:
            unknown = set(self.sides) - set(SIDES)
            if unknown:
                raise ValueError(f"unknown sides: {sorted(unknown)}")


@dataclass
class CorpusStats:
    record_count: int
    length_histogram: dict[str, Counter] = field(default_factory=dict)
    vocab_size: dict[str, int] = field(default_factory=dict)


def _record_from_json(obj: dict, line_no: int) -> ParallelRecord:
    rec_id = obj.get("id")
    rec_id = str(rec_id) if rec_id is not None else str(line_no - 1)
    kwargs = {}
    for side, key in JSONL_KEYS.items():
        value = obj.get(key)
        if value is not None and not isinstance(value, str):
            raise CorpusError(f"line {line_no}: key {key!r} is not a string")
        kwargs[side] = value
    if all(v is None for v in kwargs.values()):
        raise CorpusError(f"line {line_no}: no sides present")
    return ParallelRecord(id=rec_id, **kwargs)


def _record_from_tsv(line: str, line_no: int) -> ParallelRecord:
    cols = line.split("\t")
    if len(cols) != 4:
        raise CorpusError(f"line {line_no}: expected 4 tab-separated columns, got {len(cols)}")
    rec_id = cols[0] if cols[0] else str(line_no - 1)
    sides = {side: (col if col else None) for side, col in zip(SIDES, cols[1:])}
    if all(v is None for v in sides.values()):
        raise CorpusError(f"line {line_no}: no sides present")
    return ParallelRecord(id=rec_id, **sides)


def load_corpus(path, format: str = "jsonl") -> list[ParallelRecord]:
    """Load records in file order; ids default to the 0-based line number."""
    if format not in ("jsonl", "tsv"):
        raise ValueError(f"unknown corpus format {format!r}")
    records = []
    seen_ids = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if format == "jsonl":
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
                if not isinstance(obj, dict):
                    raise CorpusError(f"line {line_no}: expected a JSON object")
                record = _record_from_json(obj, line_no)
            else:
                record = _record_from_tsv(line, line_no)
            if record.id in seen_ids:
                raise CorpusError(f"line {line_no}: duplicate id {record.id!r}")
            seen_ids.add(record.id)
            records.append(record)
    return records


def save_corpus(records: Sequence[ParallelRecord], path, format: str = "jsonl") -> None:
    """Write records in the canonical line-delimited form (UTF-8)."""
    if format not in ("jsonl", "tsv"):
        raise ValueError(f"unknown corpus format {format!r}")
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            if format == "jsonl":
                obj = {"id": record.id}
                for side, key in JSONL_KEYS.items():
                    value = getattr(record, side)
                    if value is not None:
                        obj[key] = value
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
            else:
                cols = [record.id]
                for side in SIDES:
                    value = getattr(record, side) or ""
                    if "\t" in value:
                        raise CorpusError(
                            f"record {record.id!r}: tab character cannot be saved as TSV"
                        )
                    cols.append(value)
                fh.write("\t".join(cols) + "\n")


def filter_by_length(
    records: Iterable[ParallelRecord], spec: LengthFilterSpec
) -> tuple[list[ParallelRecord], int]:
    """Keep records whose checked sides all have min_chars <= len <= max_chars.

    Character count is the Unicode code-point length of the full sentence,
    spaces and punctuation included. Returns (kept, dropped_count); records
    missing a side named in ``spec.sides`` count as dropped, not as errors.
    """
    kept = []
    dropped = 0
    for record in records:
        sides = spec.sides if spec.sides is not None else record.present_sides()
        ok = True
        for side in sides:
            text = getattr(record, side)
            if text is None or not (spec.min_chars <= len(text) <= spec.max_chars):
                ok = False
                break
        if ok:
            kept.append(record)
        else:
            dropped += 1
    return kept, dropped


def split_corpus(
    records: Sequence[ParallelRecord],
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> tuple[list[ParallelRecord], list[ParallelRecord], list[ParallelRecord]]:
    """Deterministically shuffle and partition into train/dev/test.

    Partition sizes follow the largest-remainder rule, so they are exact when
    ``n * fraction`` is integral.
    """
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValueError(f"fractions must be 3 positive numbers, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got sum {sum(fractions)!r}")
    n = len(records)
    if n < 3:
        raise ValueError(f"need at least 3 records to split, got {n}")

    exact = [n * f for f in fractions]
    counts = [math.floor(x) for x in exact]
    remainders = [x - c for x, c in zip(exact, counts)]
    for _ in range(n - sum(counts)):
        i = max(range(3), key=lambda j: (remainders[j], -j))
        counts[i] += 1
        remainders[i] = -1.0

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    shuffled = [records[i] for i in order]
    train = shuffled[: counts[0]]
    dev = shuffled[counts[0] : counts[0] + counts[1]]
    test = shuffled[counts[0] + counts[1] :]
    return train, dev, test


def corpus_stats(records: Iterable[ParallelRecord]) -> CorpusStats:
    """Record count, per-side character-length histogram, per-side vocabulary size."""
    count = 0
    histogram: dict[str, Counter] = {side: Counter() for side in SIDES}
    vocab: dict[str, set] = {side: set() for side in SIDES}
    for record in records:
        count += 1
        for side in SIDES:
            text = getattr(record, side)
            if text is None:
                continue
            histogram[side][len(text)] += 1
            vocab[side].update(text.split())
    return CorpusStats(
        record_count=count,
        length_histogram={s: h for s, h in histogram.items() if h},
        vocab_size={s: len(v) for s, v in vocab.items() if v},
    )
