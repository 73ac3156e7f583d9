"""Per-sentence inference latency benchmark.

Times each sentence individually with a monotonic clock after untimed warmup
calls, reporting mean/median/p95 seconds per sentence over all samples. The
measurement loop is strictly single-threaded; asking for workers is refused.
Raw samples are always kept so every statistic can be recomputed from the
report.
"""

from __future__ import annotations

import json
import platform
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence


class BenchError(ValueError):
    """Raised for invalid benchmark configuration or incomplete reports."""


def summarize(samples: Sequence[float]) -> dict[str, float]:
    """Mean, median, and p95 (nearest-rank) of a sample list."""
    if not samples:
        raise BenchError("no samples to summarize")
    ordered = sorted(samples)
    n = len(ordered)
    if n % 2:
        median = ordered[n // 2]
    else:
        median = 0.5 * (ordered[n // 2 - 1] + ordered[n // 2])
    p95_rank = max(0, -(-95 * n // 100) - 1)  # ceil(0.95 n) as an index
    return {
        "mean": sum(ordered) / n,
        "median": median,
        "p95": ordered[p95_rank],
    }


@dataclass
class BenchReport:
    translator_id: str
    sentence_count: int
    warmup: int
    repetitions: int
    samples: list[float] = field(default_factory=list)  # seconds, one per timed call
    total_elapsed: float = 0.0
    hardware: str = ""
    complete: bool = True
    error: Optional[str] = None

    @property
    def mean(self) -> float:
        return summarize(self.samples)["mean"]

    @property
    def median(self) -> float:
        return summarize(self.samples)["median"]

    @property
    def p95(self) -> float:
        return summarize(self.samples)["p95"]

    def to_dict(self) -> dict:
        stats = summarize(self.samples) if self.samples else {"mean": 0.0, "median": 0.0, "p95": 0.0}
        return {
            "translator_id": self.translator_id,
            "sentence_count": self.sentence_count,
            "warmup": self.warmup,
            "repetitions": self.repetitions,
            "seconds_per_sentence": stats,
            "total_elapsed": self.total_elapsed,
            "hardware": self.hardware,
            "complete": self.complete,
            "error": self.error,
            "samples": self.samples,
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, indent=2)
            fh.write("\n")


def _hardware_descriptor() -> str:
    return f"{platform.system()} {platform.machine()} / {platform.processor() or 'unknown cpu'}"


def bench_translate(
    translator: Callable[[str], object],
    sentences: Sequence[str],
    warmup: int = 3,
    repetitions: int = 1,
    translator_id: str = "translator",
    workers: int = 1,
) -> BenchReport:
    """Time ``translator`` on every sentence, one call at a time.

    ``warmup`` initial calls (cycling through the sentences) run untimed,
    then every sentence is timed ``repetitions`` times. A translator failure
    mid-run yields a partial report flagged incomplete rather than an
    exception.
    """
    if not sentences:
        raise BenchError("no sentences to benchmark")
    if warmup < 0:
        raise BenchError(f"warmup must be >= 0, got {warmup}")
    if repetitions < 1:
        raise BenchError(f"repetitions must be >= 1, got {repetitions}")
    if workers != 1:
        raise BenchError("timing is strictly single-threaded; workers must be 1")

    report = BenchReport(
        translator_id=translator_id,
        sentence_count=len(sentences),
        warmup=warmup,
        repetitions=repetitions,
        hardware=_hardware_descriptor(),
    )

    run_start = time.perf_counter()
    try:
        for i in range(warmup):
            translator(sentences[i % len(sentences)])
        for _ in range(repetitions):
            for sentence in sentences:
                t0 = time.perf_counter()
                translator(sentence)
                report.samples.append(time.perf_counter() - t0)
    except Exception as exc:  # noqa: BLE001 - partial report carries the cause
        report.complete = False
        report.error = f"{type(exc).__name__}: {exc}"
    report.total_elapsed = time.perf_counter() - run_start
    return report


def speed_ratio(report_a: BenchReport, report_b: BenchReport) -> float:
    """How many times faster a is than b: mean_b / mean_a."""
    if not report_a.complete or not report_b.complete:
        raise BenchError("speed_ratio needs two complete reports")
    return report_b.mean / report_a.mean
