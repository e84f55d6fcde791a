"""Streaming demux throughput and token counts for each layout on one synthetic corpus.

Token counts are deterministic; timings depend on the machine.
"""

import argparse
import json

from speechmux import DEFAULT_VOCAB, InterleaveConfig, parallel_config
from speechmux.analytics import synthetic_corpus
from speechmux.simulator import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--pad-ratio", type=float, default=2.95)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    cfg = InterleaveConfig(1, 2)
    corpus = synthetic_corpus(args.n, args.pad_ratio, cfg, DEFAULT_VOCAB, seed=args.seed)
    runs = [
        bench(corpus, "interleaved", cfg, DEFAULT_VOCAB, args.reps, args.workers),
        bench(corpus, "esi", cfg, DEFAULT_VOCAB, args.reps, args.workers),
        bench(corpus, "parallel", parallel_config(2), DEFAULT_VOCAB, args.reps, args.workers),
    ]
    if args.json:
        print(json.dumps([r.to_dict() for r in runs], indent=2))
        return
    base = runs[0].total_tokens
    print(f"{args.n} pairs, pads/text {args.pad_ratio}, {args.reps} reps")
    print(f"{'pattern':<12} {'tokens':>9} {'vs inter':>9} {'tok/s p50':>11} {'aggregate':>11}")
    for r in runs:
        print(f"{r.pattern:<12} {r.total_tokens:9d} {r.total_tokens / base:9.4f} {r.stream_tps_p50:11.0f} {r.aggregate_tps:11.0f}")


if __name__ == "__main__":
    main()
