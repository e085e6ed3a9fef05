"""`lora-scorer` command line.

Subcommands: ``train`` (fit adapters on a pairs.jsonl file and write a
checkpoint directory), ``score`` (one-off scoring from a checkpoint),
``serve`` (expose the checkpoint over the HTTP scoring protocol).

Exit codes: 0 success; 1 for anything wrong with inputs (arguments,
spec, pairs file, checkpoint contents); 2 for runtime failures
(training divergence).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .data import read_pairs_jsonl, render_scorer_input
from .errors import CheckpointError, DataError, LoraError, SpecError, TrainingFailure
from .model import load_checkpoint, save_checkpoint, score_texts
from .spec import LoraTrainSpec
from .train import pairwise_accuracy, train_pairs


class _UsageError(LoraError):
    """Bad command-line usage; reported like any other validation problem."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise _UsageError(message)


def _apply_overrides(spec: LoraTrainSpec, pairs: list[str]) -> LoraTrainSpec:
    defaults = LoraTrainSpec()
    changes = {}
    problems = []
    for item in pairs:
        key, sep, raw = item.partition("=")
        if not sep:
            problems.append(f"override {item!r} is not of the form KEY=VALUE")
            continue
        if key not in LoraTrainSpec.__dataclass_fields__:
            problems.append(f"unknown spec field {key!r}")
            continue
        template = getattr(defaults, key)
        try:
            if isinstance(template, bool):
                value = raw.lower() in ("1", "true", "yes")
            elif isinstance(template, int):
                value = int(raw)
            elif isinstance(template, float):
                value = float(raw)
            else:
                value = raw
        except ValueError:
            problems.append(f"cannot parse {raw!r} as {type(template).__name__} for {key!r}")
            continue
        changes[key] = value
    if problems:
        raise SpecError(problems)
    spec = dataclasses.replace(spec, **changes)
    spec.validate()
    return spec


def _load_spec(args) -> LoraTrainSpec:
    if args.spec:
        spec_path = Path(args.spec)
        if not spec_path.is_file():
            raise SpecError([f"spec file not found: {spec_path}"])
        try:
            spec = LoraTrainSpec.from_json(json.loads(spec_path.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, TypeError) as exc:
            raise SpecError([f"spec file is not a JSON object of spec fields: {exc}"]) from exc
    else:
        spec = LoraTrainSpec()
    return _apply_overrides(spec, args.set or [])


def _cmd_train(args) -> int:
    spec = _load_spec(args)
    examples = read_pairs_jsonl(args.pairs, spec.max_length)
    model, tokenizer, result = train_pairs(spec, examples)
    out = Path(args.out)
    save_checkpoint(out, model, tokenizer, spec, history=result.to_json())
    summary = result.to_json()
    summary["train_pairwise_accuracy"] = pairwise_accuracy(
        model, tokenizer, examples, spec.max_length
    )
    summary["checkpoint"] = str(out)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_score(args) -> int:
    model, tokenizer, spec, _ = load_checkpoint(args.checkpoint)
    text = render_scorer_input(
        args.question, args.answer, args.fact or [], args.reasoning, spec.max_length
    )
    value = score_texts(model, tokenizer, [text], spec.max_length)[0]
    print(json.dumps({"score": value}))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .serve import create_app

    app = create_app(args.checkpoint)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lora-scorer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="fit adapters on a pairs.jsonl file")
    train.add_argument("--pairs", required=True, help="preference pairs (JSONL)")
    train.add_argument("--out", required=True, help="checkpoint directory to write")
    train.add_argument("--spec", help="JSON file of training-spec fields")
    train.add_argument(
        "--set", action="append", metavar="KEY=VALUE", help="override a spec field"
    )
    train.set_defaults(func=_cmd_train)

    score = sub.add_parser("score", help="score one answer from a checkpoint")
    score.add_argument("--checkpoint", required=True)
    score.add_argument("--question", required=True)
    score.add_argument("--answer", required=True)
    score.add_argument("--fact", action="append", help="evidence fact (repeatable)")
    score.add_argument("--reasoning", default="")
    score.set_defaults(func=_cmd_score)

    serve = sub.add_parser("serve", help="serve a checkpoint over HTTP")
    serve.add_argument("--checkpoint", required=True)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8750)
    serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except TrainingFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SpecError, DataError, CheckpointError, _UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
