"""Command-line harness.

Subcommands mirror the pipeline stages: gen-corpus, train-model,
calibrate, run, compare, report. Every subcommand accepts --config (JSON
experiment file), --seed and --out overrides.

Exit codes, one distinct status per failure class:

    0  success
    2  configuration or usage error
    3  calibration failure
    4  malformed bins file
    5  arm outputs diverged (verification bug)
    6  filesystem error

Failures print exactly one line to stderr of the form
``heterospec: <kind>: <message>``.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import ExperimentConfig, load_config
from .errors import (BinsFileError, CalibrationError, ConfigError,
                     HeteroSpecError, OutputMismatchError)
from .pipeline import (render_report, step_calibrate, step_compare,
                       step_gen_corpus, step_report, step_run,
                       step_train_model)

_EXIT_KINDS: list[tuple[type, int, str]] = [
    (ConfigError, 2, "config"),
    (CalibrationError, 3, "calibration"),
    (BinsFileError, 4, "bins-format"),
    (OutputMismatchError, 5, "verify-mismatch"),
]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="experiment config JSON")
    parser.add_argument("--seed", type=int, help="override config seed")
    parser.add_argument("--out", help="override config out_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heterospec",
        description="entropy-adaptive draft-tree speculative decoding lab")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
            ("gen-corpus", "materialize the corpus into out_dir"),
            ("train-model", "train the target model on the training split"),
            ("calibrate", "fit entropy bins from a baseline calibration run"),
            ("run", "decode the eval prompts with one arm"),
            ("compare", "run baseline and adaptive arms on the same prompts"),
            ("report", "write plot-ready tables and print a digest")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "run":
            p.add_argument("--mode", choices=("baseline", "adaptive"),
                           default="adaptive")
        if name == "compare":
            p.add_argument("--alpha-sweep",
                           help="comma-separated alpha values, e.g. 2,3,4")
        if name == "report":
            p.add_argument("--arm", choices=("baseline", "adaptive"),
                           default="baseline",
                           help="which iteration trace feeds the tables")
            p.add_argument("--digest-only", action="store_true",
                           help="skip the CSVs, print the digest alone")
    return parser


def _resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.out is not None:
        config = replace(config, out_dir=args.out)
    return config


def _parse_alphas(raw: str | None) -> list[int] | None:
    if raw is None:
        return None
    try:
        alphas = [int(part) for part in raw.split(",") if part.strip() != ""]
    except ValueError:
        raise ConfigError(f"--alpha-sweep expects comma-separated integers, "
                          f"got {raw!r}") from None
    if not alphas:
        raise ConfigError("--alpha-sweep given but no alpha values parsed")
    return alphas


def _dispatch(args: argparse.Namespace) -> None:
    config = _resolve_config(args)
    if args.command == "gen-corpus":
        print(step_gen_corpus(config))
    elif args.command == "train-model":
        print(step_train_model(config))
    elif args.command == "calibrate":
        print(step_calibrate(config))
    elif args.command == "run":
        iter_path, summary_path = step_run(config, args.mode)
        print(iter_path)
        print(summary_path)
    elif args.command == "compare":
        out, result = step_compare(config, _parse_alphas(args.alpha_sweep))
        print(out)
        for name, alpha, summary in result.rows():
            alpha_str = "-" if alpha is None else str(alpha)
            print(f"{name} alpha={alpha_str} calls={summary.calls} "
                  f"tokens={summary.tokens} tau={summary.tau:.4f} "
                  f"speedup={summary.speedup:.4f}")
    elif args.command == "report":
        if not args.digest_only:
            for path in step_report(config, args.arm):
                print(path)
        sys.stdout.write(render_report(config))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _dispatch(args)
    except HeteroSpecError as exc:
        for cls, code, kind in _EXIT_KINDS:
            if isinstance(exc, cls):
                print(f"heterospec: {kind}: {exc}", file=sys.stderr)
                return code
        print(f"heterospec: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"heterospec: io: {exc}", file=sys.stderr)
        return 6
    return 0


if __name__ == "__main__":
    sys.exit(main())
