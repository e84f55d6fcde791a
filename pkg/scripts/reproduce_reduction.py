"""Measure how much the early-stop layout shortens sequences across pad-to-text ratios.

    python3 scripts/reproduce_reduction.py --ratio 1:2 --n 5000
"""

import argparse
import json

from speechmux import DEFAULT_VOCAB, InterleaveConfig, expected_reduction
from speechmux.analytics import corpus_report, synthetic_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ratio", default="1:2")
    ap.add_argument("--n", type=int, default=5000, help="pairs per corpus")
    ap.add_argument("--pad-ratios", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0, 2.95, 4.0, 8.0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    cfg = InterleaveConfig.parse(args.ratio)
    rows = []
    for r in args.pad_ratios:
        rep = corpus_report(synthetic_corpus(args.n, r, cfg, DEFAULT_VOCAB, seed=args.seed), cfg, DEFAULT_VOCAB)
        rows.append(
            {
                "target_pad_ratio": r,
                "measured_pad_ratio": rep.pad_to_text_ratio,
                "mean_reduction": rep.mean_reduction,
                "aggregate_reduction": rep.aggregate_reduction,
                "closed_form": expected_reduction(r, cfg),
                "mean_len_interleaved": rep.mean_len_interleaved,
                "mean_len_esi": rep.mean_len_esi,
            }
        )
    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"ratio {cfg.ratio}, {args.n} pairs per row")
    print(f"{'pads/text':>9} {'measured':>9} {'mean red.':>10} {'aggr. red.':>11} {'closed':>8} {'len int':>8} {'len esi':>8}")
    for row in rows:
        print(
            f"{row['target_pad_ratio']:9.2f} {row['measured_pad_ratio']:9.3f} {row['mean_reduction']:10.4f}"
            f" {row['aggregate_reduction']:11.4f} {row['closed_form']:8.4f}"
            f" {row['mean_len_interleaved']:8.1f} {row['mean_len_esi']:8.1f}"
        )


if __name__ == "__main__":
    main()
