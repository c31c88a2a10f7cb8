"""Sweep the adaptive extension budget on the planted corpus.

Builds the default lab once, then decodes the eval prompts with the
baseline controller and one adaptive arm per alpha. Prints a table of
target calls, verified draft tokens, acceptance rate tau, and modeled
speedup, with the relative change against baseline.
"""
from __future__ import annotations

import argparse
import dataclasses

from heterospec.config import ExperimentConfig
from heterospec.pipeline import (
    step_calibrate,
    step_compare,
    step_gen_corpus,
    step_train_model,
)


def parse_alphas(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/alpha-sweep",
                        help="artifact directory (default runs/alpha-sweep)")
    parser.add_argument("--alphas", default="1,2,3,4,5",
                        help="comma-separated extension budgets")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    config = dataclasses.replace(ExperimentConfig(), out_dir=args.out)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)

    step_gen_corpus(config)
    step_train_model(config)
    step_calibrate(config)
    _, result = step_compare(config, alphas=parse_alphas(args.alphas))

    base = result.baseline.summary
    header = f"{'arm':<10} {'alpha':>5} {'calls':>7} {'tokens':>8} " \
             f"{'tau':>8} {'speedup':>8} {'d_tau':>8}"
    print(header)
    print("-" * len(header))
    print(f"{'baseline':<10} {'-':>5} {base.calls:>7} {base.tokens:>8} "
          f"{base.tau:>8.4f} {base.speedup:>8.4f} {'-':>8}")
    for arm in result.adaptive:
        s = arm.summary
        d_tau = (s.tau - base.tau) / base.tau
        print(f"{'adaptive':<10} {arm.alpha:>5} {s.calls:>7} {s.tokens:>8} "
              f"{s.tau:>8.4f} {s.speedup:>8.4f} {d_tau:>+8.2%}")


if __name__ == "__main__":
    main()
