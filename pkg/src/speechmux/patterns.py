"""Multiplexers for the single-stream layouts: interleaved, early-stop interleaved, parallel.

Chunk order is text-first. In the interleaved layout exhausted text slots are
filled with the PAD id; the early-stop layout instead writes the ``<S>`` marker
right after text EOS and then every remaining speech token back to back.
"""

from __future__ import annotations

import enum
import re
from functools import cached_property
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig, InvalidPair, SpeechUnderrun
from .vocab import TokenClass, VocabSpec


class Pattern(str, enum.Enum):
    INTERLEAVED = "interleaved"
    ESI = "esi"
    PARALLEL = "parallel"


@dataclass(frozen=True)
class InterleaveConfig:
    r_text: int
    r_speech: int
    append_speech_eos: bool = True

    def __post_init__(self):
        if int(self.r_text) < 1 or int(self.r_speech) < 1:
            raise InvalidConfig(f"ratio must be two positive integers, got {self.r_text}:{self.r_speech}")

    @classmethod
    def parse(cls, ratio: str, append_speech_eos: bool = True) -> "InterleaveConfig":
        m = re.fullmatch(r"\s*(\d+)\s*:\s*(\d+)\s*", ratio)
        if not m:
            raise InvalidConfig(f"ratio must look like R_TEXT:R_SPEECH, got {ratio!r}")
        return cls(int(m.group(1)), int(m.group(2)), append_speech_eos)

    @property
    def ratio(self) -> str:
        return f"{self.r_text}:{self.r_speech}"


def parallel_config(k: int, append_speech_eos: bool = True) -> InterleaveConfig:
    """A parallel frame is one text slot followed by k speech slots."""
    return InterleaveConfig(1, k, append_speech_eos)


@dataclass(frozen=True)
class ChannelPair:
    text_tokens: tuple[int, ...]
    speech_tokens: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "text_tokens", tuple(self.text_tokens))
        object.__setattr__(self, "speech_tokens", tuple(self.speech_tokens))

    def validate(self, vocab: VocabSpec, speech_eos: bool = True) -> "ChannelPair":
        text, speech = self.text_tokens, self.speech_tokens
        if not text:
            raise InvalidPair("text_tokens is empty")
        if text[-1] != vocab.eos_text_id:
            raise InvalidPair("text_tokens must end with eos_text_id")
        _check_body(text[:-1], vocab, TokenClass.TEXT_CONTENT, "text_tokens")
        if not speech:
            raise InvalidPair("speech_tokens is empty")
        body = speech
        if speech_eos:
            if speech[-1] != vocab.eos_speech_id:
                raise InvalidPair("speech_tokens must end with eos_speech_id")
            body = speech[:-1]
        _check_body(body, vocab, TokenClass.SPEECH_CONTENT, "speech_tokens")
        return self

    def to_record(self, id: str) -> dict:
        return {"id": id, "text_tokens": list(self.text_tokens), "speech_tokens": list(self.speech_tokens)}

    @classmethod
    def from_record(cls, rec: dict) -> "ChannelPair":
        try:
            return cls(tuple(rec["text_tokens"]), tuple(rec["speech_tokens"]))
        except KeyError as e:
            raise InvalidPair(f"record is missing field {e.args[0]!r}") from None


@dataclass(frozen=True)
class MixedSequence:
    tokens: tuple[int, ...]
    pattern: Pattern
    config: InterleaveConfig

    def to_record(self, id: str) -> dict:
        rec = {
            "id": id,
            "pattern": self.pattern.value,
            "r_text": self.config.r_text,
            "r_speech": self.config.r_speech,
            "tokens": list(self.tokens),
        }
        if not self.config.append_speech_eos:
            rec["append_speech_eos"] = False
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "MixedSequence":
        pattern = Pattern(rec["pattern"])
        if pattern is Pattern.PARALLEL:
            raise InvalidConfig("parallel sequences are stored as frames")
        cfg = InterleaveConfig(rec["r_text"], rec["r_speech"], rec.get("append_speech_eos", True))
        return cls(tuple(rec["tokens"]), pattern, cfg)


@dataclass(frozen=True)
class FrameSequence:
    frames: tuple[tuple[int, tuple[int, ...]], ...]
    k: int
    append_speech_eos: bool = True
    pattern: Pattern = field(default=Pattern.PARALLEL, init=False)

    @property
    def config(self) -> InterleaveConfig:
        return parallel_config(self.k, self.append_speech_eos)

    @cached_property
    def tokens(self) -> tuple[int, ...]:
        """Frames flattened text-slot-first."""
        out: list[int] = []
        append, extend = out.append, out.extend
        for text_slot, speech_slots in self.frames:
            append(text_slot)
            extend(speech_slots)
        return tuple(out)

    def to_record(self, id: str) -> dict:
        rec = {"id": id, "k": self.k, "frames": [[t, list(s)] for t, s in self.frames]}
        if not self.append_speech_eos:
            rec["append_speech_eos"] = False
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "FrameSequence":
        frames = tuple((int(t), tuple(s)) for t, s in rec["frames"])
        return cls(frames, int(rec["k"]), rec.get("append_speech_eos", True))


def _check_body(body: tuple[int, ...], vocab: VocabSpec, expected: TokenClass, name: str) -> None:
    lo, hi = vocab.text_range if expected is TokenClass.TEXT_CONTENT else vocab.speech_range
    specials = (vocab.eos_text_id, vocab.pad_text_id, vocab.eos_speech_id)
    # min/max and membership run in C; only walk the body to name the culprit
    if body and (min(body) < lo or max(body) >= hi or any(s in body for s in specials)):
        for i, tok in enumerate(body):
            if vocab.classify(tok) is not expected:
                raise InvalidPair(f"{name}[{i}]={tok} is not a {expected.name.lower()} token")


def _check_fit(n_text: int, n_speech: int, r_text: int, r_speech: int) -> None:
    chunks = -(-n_speech // r_speech)
    if chunks * r_text < n_text:
        raise SpeechUnderrun(
            f"{n_speech} speech tokens give {chunks} chunks, too few for {n_text} text tokens at {r_text}:{r_speech}"
        )


def mux_interleaved(pair: ChannelPair, cfg: InterleaveConfig, vocab: VocabSpec) -> MixedSequence:
    pair.validate(vocab, cfg.append_speech_eos)
    text, speech = pair.text_tokens, pair.speech_tokens
    rt, rs = cfg.r_text, cfg.r_speech
    _check_fit(len(text), len(speech), rt, rs)
    n_chunks = -(-len(speech) // rs)
    grid = np.full((n_chunks, rt + rs), -1, dtype=np.int64)
    text_slots = np.full(n_chunks * rt, vocab.pad_text_id, dtype=np.int64)
    text_slots[: len(text)] = text
    grid[:, :rt] = text_slots.reshape(n_chunks, rt)
    speech_slots = grid[:, rt:].reshape(-1)
    speech_slots[: len(speech)] = speech
    grid[:, rt:] = speech_slots.reshape(n_chunks, rs)
    # the final chunk may be short on speech; no id is negative, so -1 marks the gap
    flat = grid.reshape(-1)[: n_chunks * (rt + rs) - (n_chunks * rs - len(speech))]
    return MixedSequence(tuple(flat.tolist()), Pattern.INTERLEAVED, cfg)


def mux_esi(pair: ChannelPair, cfg: InterleaveConfig, vocab: VocabSpec) -> MixedSequence:
    pair.validate(vocab, cfg.append_speech_eos)
    text, speech = pair.text_tokens, pair.speech_tokens
    rt, rs = cfg.r_text, cfg.r_speech
    _check_fit(len(text), len(speech), rt, rs)
    out: list[int] = []
    ti = si = 0
    while True:
        chunk = text[ti : ti + rt]
        ti += len(chunk)
        out.extend(chunk)
        if ti == len(text):
            out.append(vocab.marker_id)
            out.extend(speech[si:])
            break
        out.extend(speech[si : si + rs])
        si += rs
    return MixedSequence(tuple(out), Pattern.ESI, cfg)


def mux_parallel(pair: ChannelPair, k: int, vocab: VocabSpec, append_speech_eos: bool = True) -> FrameSequence:
    if k < 1:
        raise InvalidConfig(f"k must be positive, got {k}")
    pair.validate(vocab, append_speech_eos)
    text, speech = pair.text_tokens, pair.speech_tokens
    n_frames = -(-len(speech) // k)
    if n_frames < len(text):
        raise SpeechUnderrun(f"{n_frames} frames cannot carry {len(text)} text tokens")
    fill = vocab.eos_speech_id
    text_col = np.full(n_frames, vocab.pad_text_id, dtype=np.int64)
    text_col[: len(text)] = text
    slots = np.full(n_frames * k, fill, dtype=np.int64)
    slots[: len(speech)] = speech
    rows = slots.reshape(n_frames, k).tolist()
    if not append_speech_eos:
        rows[-1] = rows[-1][: len(speech) - (n_frames - 1) * k]
    frames = tuple(zip(text_col.tolist(), map(tuple, rows)))
    return FrameSequence(frames, k, append_speech_eos)


def mux(pair: ChannelPair, pattern: Pattern, cfg: InterleaveConfig, vocab: VocabSpec) -> MixedSequence | FrameSequence:
    """Dispatch on pattern; for PARALLEL, ``cfg.r_speech`` is k and ``cfg.r_text`` must be 1."""
    pattern = Pattern(pattern)
    if pattern is Pattern.INTERLEAVED:
        return mux_interleaved(pair, cfg, vocab)
    if pattern is Pattern.ESI:
        return mux_esi(pair, cfg, vocab)
    if cfg.r_text != 1:
        raise InvalidConfig("parallel frames carry exactly one text slot")
    return mux_parallel(pair, cfg.r_speech, vocab, cfg.append_speech_eos)
