"""CLI: score a dataset file with a masked or causal language model."""
from __future__ import annotations

import argparse
import sys

from .dataset import DatasetError, read_dataset
from .scorer import ScorerError, ScorerSpec, report_skips, score_dataset, write_records


class _UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="lmscore",
        description="Score minimal-set datasets with pretrained language models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("score", help="score one dataset file")
    p.add_argument("--model", required=True, help="model path or hub id")
    p.add_argument("--kind", required=True, choices=("masked", "causal"))
    p.add_argument("--dataset", required=True, help="dataset .jsonl file")
    p.add_argument("--out", required=True, help="output score .jsonl file")
    p.add_argument("--scorer-id", default="", help="scorer id in the output (default: model name)")
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--device", default="cpu")
    p.add_argument("--include-leading-space", action="store_true",
                   help="count a directly preceding space as part of the target span")
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    try:
        tests = read_dataset(args.dataset)
    except (OSError, DatasetError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    spec = ScorerSpec(
        model_id=args.model,
        kind=args.kind,
        scorer_id=args.scorer_id,
        batch_size=args.batch_size,
        device=args.device,
        include_leading_space=args.include_leading_space,
    )
    try:
        records, skipped = score_dataset(spec, tests)
    except ScorerError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    report_skips(skipped)
    write_records(records, args.out)
    print(f"scored {len(records)}/{len(tests)} tests with {spec.scorer_id} -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
