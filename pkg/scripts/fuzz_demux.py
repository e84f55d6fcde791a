"""Corrupt one token per valid stream and tally how the demuxer reacts.

Flip mode should always fail at the corrupted index. Uniform mode also draws
same-class ids, which no channel-level check can see.
"""

import argparse
import random
from collections import Counter

from speechmux import DEFAULT_VOCAB, DemuxError, InterleaveConfig, mux, parallel_config
from speechmux.demux import demux_tokens
from speechmux.simulator import CorruptMode, corrupt_at, random_pair

LAYOUTS = [
    ("interleaved", InterleaveConfig(1, 2)),
    ("interleaved", InterleaveConfig(5, 10)),
    ("esi", InterleaveConfig(5, 10)),
    ("parallel", parallel_config(2)),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10000)
    ap.add_argument("--mode", choices=[m.value for m in CorruptMode], default="flip")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    mode = CorruptMode(args.mode)
    outcome, kinds = Counter(), Counter()
    for n in range(args.n):
        pattern, cfg = LAYOUTS[n % len(LAYOUTS)]
        pair = random_pair(rng, DEFAULT_VOCAB, cfg, text_len=(1, 40), extra_speech=100)
        tokens = mux(pair, pattern, cfg, DEFAULT_VOCAB).tokens
        i = rng.randrange(len(tokens))
        bad = corrupt_at(tokens, i, DEFAULT_VOCAB, rng, mode)
        try:
            got = demux_tokens(bad, pattern, cfg, DEFAULT_VOCAB)
        except DemuxError as e:
            kinds[e.kind.value] += 1
            outcome["error at corrupted index" if e.index == i else "error elsewhere"] += 1
            continue
        if bad == list(tokens):
            outcome["unchanged token"] += 1
        elif got == pair:
            outcome["accepted, pair intact"] += 1
        else:
            outcome["accepted, pair altered"] += 1

    print(f"{args.n} single-token corruptions, mode {mode.value}")
    for k, v in outcome.most_common():
        print(f"  {k:<26} {v}")
    print("error kinds:")
    for k, v in kinds.most_common():
        print(f"  {k:<26} {v}")


if __name__ == "__main__":
    main()
