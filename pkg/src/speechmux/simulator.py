"""Drive demuxers with scripted, replayed and corrupted token streams.

Stands in for an LM's decode loop so the state machines can be fuzzed and
benchmarked. Errors are data here: :func:`run` never raises on a bad stream.
"""

from __future__ import annotations

import enum
import random
import statistics
import time
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from ._pool import ordered_map
from .demux import Demuxer, DemuxEvent, Phase
from .errors import DemuxError, DemuxErrorKind
from .patterns import ChannelPair, InterleaveConfig, Pattern, mux
from .vocab import VocabSpec


class CorruptMode(str, enum.Enum):
    FLIP = "flip"  # random id from the opposite channel
    UNIFORM = "uniform"  # random id from either channel or the marker


def corrupt_token(token: int, vocab: VocabSpec, rng: random.Random, mode: CorruptMode = CorruptMode.FLIP) -> int:
    """Replacement id for one corrupted position.

    FLIP sends text-range ids into the speech range and vice versa; the marker
    goes to either range. UNIFORM may return the same id or another id of the
    same class, which a demuxer cannot detect.
    """
    t0, t1 = vocab.text_range
    s0, s1 = vocab.speech_range
    if mode is CorruptMode.UNIFORM:
        n = (t1 - t0) + (s1 - s0) + 1
        u = rng.randrange(n)
        if u < t1 - t0:
            return t0 + u
        u -= t1 - t0
        return s0 + u if u < s1 - s0 else vocab.marker_id
    if t0 <= token < t1:
        return rng.randrange(s0, s1)
    if s0 <= token < s1:
        return rng.randrange(t0, t1)
    if token == vocab.marker_id:
        lo, hi = (t0, t1) if rng.random() < 0.5 else (s0, s1)
        return rng.randrange(lo, hi)
    return token


def corrupt_at(tokens: Sequence[int], index: int, vocab: VocabSpec, rng: random.Random,
               mode: CorruptMode = CorruptMode.FLIP) -> list[int]:
    out = list(tokens)
    out[index] = corrupt_token(out[index], vocab, rng, mode)
    return out


class Scripted:
    def __init__(self, tokens: Iterable[int]):
        self.tokens = list(tokens)

    def __iter__(self) -> Iterator[int]:
        return iter(self.tokens)


class Replay:
    """Re-mux a pair and stream the result."""

    def __init__(self, pair: ChannelPair, pattern: Pattern | str, config: InterleaveConfig, vocab: VocabSpec):
        self.tokens = list(mux(pair, Pattern(pattern), config, vocab).tokens)

    def __iter__(self) -> Iterator[int]:
        return iter(self.tokens)


class Corrupting:
    """Corrupts each token of ``inner`` with probability ``rate``; deterministic per seed.

    With rate 0 no RNG draw alters anything and the stream equals ``inner``.
    """

    def __init__(self, inner: Iterable[int], rate: float, seed: int, vocab: VocabSpec,
                 mode: CorruptMode = CorruptMode.FLIP):
        if not 0.0 <= rate <= 1.0:
            raise ValueError("corruption rate must be in [0, 1]")
        self.inner, self.rate, self.seed, self.vocab, self.mode = inner, rate, seed, vocab, CorruptMode(mode)

    def __iter__(self) -> Iterator[int]:
        rng = random.Random(self.seed)
        for tok in self.inner:
            if rng.random() < self.rate:
                tok = corrupt_token(tok, self.vocab, rng, self.mode)
            yield tok


@dataclass
class RunTranscript:
    events: list[DemuxEvent]
    error: tuple[DemuxErrorKind, int] | None
    tokens_consumed: int
    elapsed: float
    pair: ChannelPair | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def throughput(self) -> float:
        return self.tokens_consumed / self.elapsed if self.elapsed > 0 else float("inf")

    def to_dict(self, with_events: bool = False) -> dict:
        d = {
            "ok": self.ok,
            "error": None if self.error is None else {"kind": self.error[0].value, "index": self.error[1]},
            "tokens_consumed": self.tokens_consumed,
            "events": len(self.events),
        }
        if with_events:
            d["event_log"] = [e.to_record() for e in self.events]
        return d


def run(gen: Iterable[int], pattern: Pattern | str, config: InterleaveConfig, vocab: VocabSpec) -> RunTranscript:
    """Feed ``gen`` through a fresh demuxer until it ends, finishes, or fails."""
    d = Demuxer(vocab, pattern, config)
    error = pair = None
    pulled = 0
    start = time.perf_counter()
    try:
        for tok in gen:
            pulled += 1
            d.feed(tok)
            if d.phase is Phase.FINISHED:
                break
        pair = d.finish()
    except DemuxError as e:
        error = (e.kind, e.index)
    elapsed = time.perf_counter() - start
    return RunTranscript(d.events, error, pulled, elapsed, pair)


@dataclass
class BenchSummary:
    pattern: str
    ratio: str
    records: int
    repetitions: int
    tokens_per_record: list[int]
    total_tokens: int
    rep_seconds: list[float]
    stream_tps_p50: float
    stream_tps_p99: float
    aggregate_tps: float

    @property
    def mean_tokens_per_record(self) -> float:
        return self.total_tokens / self.records

    def to_dict(self) -> dict:
        return {
            "pattern": self.pattern,
            "ratio": self.ratio,
            "records": self.records,
            "repetitions": self.repetitions,
            "total_tokens": self.total_tokens,
            "mean_tokens_per_record": self.mean_tokens_per_record,
            "rep_seconds": self.rep_seconds,
            "stream_tps_p50": self.stream_tps_p50,
            "stream_tps_p99": self.stream_tps_p99,
            "aggregate_tps": self.aggregate_tps,
        }


def _quantile(xs: list[float], q: float) -> float:
    xs = sorted(xs)
    if len(xs) == 1:
        return xs[0]
    return statistics.quantiles(xs, n=100, method="inclusive")[int(q * 100) - 1]


def bench(
    corpus: Iterable[ChannelPair],
    pattern: Pattern | str,
    config: InterleaveConfig,
    vocab: VocabSpec,
    repetitions: int = 1,
    workers: int = 1,
) -> BenchSummary:
    """Time streaming demux over a corpus. Token counts are exact; timings are wall-clock."""
    if repetitions < 1:
        raise ValueError("repetitions must be positive")
    pattern = Pattern(pattern)
    streams = [list(mux(p, pattern, config, vocab).tokens) for p in corpus]
    if not streams:
        raise ValueError("corpus is empty")

    def one(tokens):
        t = time.perf_counter()
        tr = run(tokens, pattern, config, vocab)
        dt = time.perf_counter() - t
        if not tr.ok:
            raise DemuxError(*tr.error)
        return len(tokens), dt

    rep_seconds, per_stream = [], []
    for _ in range(repetitions):
        t = time.perf_counter()
        for n, dt in ordered_map(one, streams, workers):
            per_stream.append(n / dt if dt > 0 else float("inf"))
        rep_seconds.append(time.perf_counter() - t)
    counts = [len(s) for s in streams]
    total = sum(counts)
    return BenchSummary(
        pattern=pattern.value,
        ratio=config.ratio,
        records=len(streams),
        repetitions=repetitions,
        tokens_per_record=counts,
        total_tokens=total,
        rep_seconds=rep_seconds,
        stream_tps_p50=_quantile(per_stream, 0.50),
        stream_tps_p99=_quantile(per_stream, 0.99),
        aggregate_tps=total * repetitions / sum(rep_seconds),
    )


def random_pair(
    rng: random.Random,
    vocab: VocabSpec,
    config: InterleaveConfig,
    text_len: tuple[int, int] = (1, 64),
    extra_speech: int = 256,
    max_speech: int | None = None,
) -> ChannelPair:
    """A random valid pair with just enough speech to carry its text, plus up to ``extra_speech``.

    ``text_len`` counts EOS. The minimum speech length is the smallest that
    avoids underrun for ``config`` (parallel uses ``1:k``).
    """
    t = rng.randint(*text_len)
    chunks = -(-t // config.r_text)
    lo = (chunks - 1) * config.r_speech + 1
    hi = lo + extra_speech if max_speech is None else max(lo, max_speech)
    s = rng.randint(lo, hi)
    text = vocab.sample_text(rng, t - 1) + [vocab.eos_text_id]
    if config.append_speech_eos:
        speech = vocab.sample_speech(rng, s - 1) + [vocab.eos_speech_id]
    else:
        speech = vocab.sample_speech(rng, s)
    return ChannelPair(tuple(text), tuple(speech))
