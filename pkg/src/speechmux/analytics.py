"""Sequence-length and padding statistics for the interleaved and early-stop layouts.

Lengths are always measured by running the real muxers, never by formula;
:func:`expected_reduction` is the closed-form companion used to cross-check.
"""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from .errors import SpeechmuxError
from .patterns import ChannelPair, InterleaveConfig, mux_esi, mux_interleaved
from .vocab import VocabSpec

TOKENS_PER_SECOND = 25.0


class EmptyCorpus(SpeechmuxError, ValueError):
    pass


@dataclass(frozen=True)
class LengthReport:
    """Length accounting for one pair.

    ``reduction`` can exceed 1 for pad-free pairs: the marker costs one token
    and there are no pads to save.
    """

    len_interleaved: int
    len_esi: int
    pad_count: int
    reduction: float
    first_speech_index_interleaved: int
    first_speech_index_esi: int
    text_content: int
    speech_content: int
    est_audio_seconds: float


def _first_speech(tokens: tuple[int, ...], vocab: VocabSpec) -> int:
    s0, s1 = vocab.speech_range
    for i, tok in enumerate(tokens):
        if s0 <= tok < s1:
            return i
    return -1


def length_report(
    pair: ChannelPair, cfg: InterleaveConfig, vocab: VocabSpec, tokens_per_second: float = TOKENS_PER_SECOND
) -> LengthReport:
    if tokens_per_second <= 0:
        raise ValueError("tokens_per_second must be positive")
    inter = mux_interleaved(pair, cfg, vocab).tokens
    esi = mux_esi(pair, cfg, vocab).tokens
    speech_content = len(pair.speech_tokens) - (1 if cfg.append_speech_eos else 0)
    return LengthReport(
        len_interleaved=len(inter),
        len_esi=len(esi),
        pad_count=inter.count(vocab.pad_text_id),
        reduction=len(esi) / len(inter),
        first_speech_index_interleaved=_first_speech(inter, vocab),
        first_speech_index_esi=_first_speech(esi, vocab),
        text_content=len(pair.text_tokens) - 1,
        speech_content=speech_content,
        est_audio_seconds=speech_content / tokens_per_second,
    )


@dataclass(frozen=True)
class CorpusReport:
    records: int
    errors: int
    mean_len_interleaved: float
    mean_len_esi: float
    median_len_interleaved: float
    median_len_esi: float
    mean_reduction: float
    aggregate_reduction: float
    total_pads: int
    total_text: int
    total_text_content: int
    pad_to_text_ratio: float
    pad_to_text_ratio_excl_eos: float
    len_interleaved_pct: dict
    len_esi_pct: dict
    est_audio_seconds: float
    error_details: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class _Acc:
    inter: list[int] = field(default_factory=list)
    esi: list[int] = field(default_factory=list)
    reductions: list[float] = field(default_factory=list)
    pads: int = 0
    text: int = 0
    audio: list[float] = field(default_factory=list)
    errors: list[tuple[str, str]] = field(default_factory=list)

    def add(self, r: LengthReport) -> None:
        self.inter.append(r.len_interleaved)
        self.esi.append(r.len_esi)
        self.reductions.append(r.reduction)
        self.pads += r.pad_count
        self.text += r.text_content + 1
        self.audio.append(r.est_audio_seconds)

    def report(self) -> CorpusReport:
        n = len(self.inter)
        if n == 0:
            raise EmptyCorpus("no record could be measured")
        inter = np.array(sorted(self.inter), dtype=float)
        esi = np.array(sorted(self.esi), dtype=float)

        def pct(a):
            return {f"p{q}": float(np.percentile(a, q)) for q in (50, 90, 99)}

        text_content = self.text - n
        return CorpusReport(
            records=n,
            errors=len(self.errors),
            mean_len_interleaved=math.fsum(self.inter) / n,
            mean_len_esi=math.fsum(self.esi) / n,
            median_len_interleaved=float(np.median(inter)),
            median_len_esi=float(np.median(esi)),
            # fsum is exactly rounded, so the mean does not depend on record order
            mean_reduction=math.fsum(self.reductions) / n,
            aggregate_reduction=sum(self.esi) / sum(self.inter),
            total_pads=self.pads,
            total_text=self.text,
            total_text_content=text_content,
            pad_to_text_ratio=self.pads / self.text,
            pad_to_text_ratio_excl_eos=self.pads / text_content if text_content else math.inf if self.pads else 0.0,
            len_interleaved_pct=pct(inter),
            len_esi_pct=pct(esi),
            est_audio_seconds=math.fsum(self.audio),
            error_details=sorted(self.errors),
        )


def corpus_report(
    pairs: Iterable[ChannelPair | tuple[str, ChannelPair]],
    cfg: InterleaveConfig,
    vocab: VocabSpec,
    tokens_per_second: float = TOKENS_PER_SECOND,
) -> CorpusReport:
    """One pass over a corpus; per-record mux errors are tallied, not raised.

    Items may be bare pairs or ``(id, pair)`` tuples; ids label error details.
    ``pad_to_text_ratio`` counts text EOS as text, ``pad_to_text_ratio_excl_eos``
    does not.
    """
    acc = _Acc()
    seen = 0
    for i, item in enumerate(pairs):
        seen += 1
        rid, pair = item if isinstance(item, tuple) else (str(i), item)
        try:
            acc.add(length_report(pair, cfg, vocab, tokens_per_second))
        except SpeechmuxError as e:
            acc.errors.append((rid, f"{type(e).__name__}: {e}"))
    if not seen:
        raise EmptyCorpus("corpus is empty")
    return acc.report()


def expected_reduction(pad_to_text_ratio: float, cfg: InterleaveConfig, text_len: float | None = None) -> float:
    """Closed-form ESI/interleaved length ratio for a given pad-to-text ratio.

    With ``P = ratio * T`` pads and ``S = (T + P) * r_speech / r_text`` speech
    tokens the ratio is ``(T + S) / (T + P + S)`` as ``T`` grows. Pass
    ``text_len`` to include the marker's one-token cost for text of that length.
    """
    if pad_to_text_ratio < 0:
        raise ValueError("pad_to_text_ratio must be non-negative")
    t = 1.0 if text_len is None else float(text_len)
    p = pad_to_text_ratio * t
    s = (t + p) * cfg.r_speech / cfg.r_text
    marker = 0.0 if text_len is None else 1.0
    return (t + marker + s) / (t + p + s)


def padded_pair(
    text_len: int, pads: int, cfg: InterleaveConfig, vocab: VocabSpec, rng: random.Random
) -> ChannelPair:
    """A pair whose interleaved layout has exactly ``pads`` pad tokens.

    ``text_len`` counts EOS. Requires ``text_len + pads`` to be a multiple of
    ``r_text``; speech fills every chunk exactly.
    """
    slots = text_len + pads
    if text_len < 1 or pads < 0 or slots % cfg.r_text:
        raise ValueError("text_len + pads must be a positive multiple of r_text")
    n_speech = slots // cfg.r_text * cfg.r_speech
    text = vocab.sample_text(rng, text_len - 1) + [vocab.eos_text_id]
    if cfg.append_speech_eos:
        speech = vocab.sample_speech(rng, n_speech - 1) + [vocab.eos_speech_id]
    else:
        speech = vocab.sample_speech(rng, n_speech)
    return ChannelPair(tuple(text), tuple(speech))


def synthetic_corpus(
    n: int,
    pad_to_text_ratio: float,
    cfg: InterleaveConfig,
    vocab: VocabSpec,
    text_len_range: tuple[int, int] = (20, 60),
    seed: int = 0,
) -> list[ChannelPair]:
    """Pairs whose pooled pad-to-text ratio tracks ``pad_to_text_ratio``.

    Pads per record are chosen by error diffusion so the running total stays
    within one chunk of the target, then rounded up to a whole chunk.
    """
    rng = random.Random(seed)
    out = []
    text_total = pad_total = 0
    for _ in range(n):
        t = rng.randint(*text_len_range)
        text_total += t
        want = round(pad_to_text_ratio * text_total) - pad_total
        pads = max(0, want)
        pads += -(t + pads) % cfg.r_text
        pad_total += pads
        out.append(padded_pair(t, pads, cfg, vocab, rng))
    return out
