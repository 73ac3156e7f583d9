"""Command-line entry point: regenerate the golden metric vectors."""

from __future__ import annotations

import argparse
import sys

from .harness import ScorerUnavailableError, regenerate_goldens


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="regen-goldens",
        description="Score a {hyp, ref} JSONL pairs file with the reference scorer "
        "and write golden {hyp, ref, bleu, chrfpp, scorer} vectors.",
    )
    parser.add_argument("--pairs", required=True, help="input pairs file (JSONL)")
    parser.add_argument("--out", required=True, help="output golden vector file (JSONL)")
    parser.add_argument(
        "--scorer",
        choices=("auto", "installed", "vendored"),
        default="auto",
        help="scorer backend: the installed sacrebleu package, the vendored pinned "
        "copy, or auto (installed when importable, vendored otherwise)",
    )
    args = parser.parse_args(argv)

    try:
        scorer = regenerate_goldens(args.pairs, args.out, backend=args.scorer)
    except ScorerUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out} using scorer {scorer.version}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
