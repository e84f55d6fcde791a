"""Streaming demultiplexers: route a generated token stream back to text and speech.

One :class:`Demuxer` handles all three layouts. Each mirrors the slot schedule
of its muxer: a cycle of ``r_text`` text slots and ``r_speech`` speech slots
(parallel frames are the ``1:k`` case). The early-stop layout leaves that
cycle on the ``<S>`` marker and reads speech only from then on.

Errors are fail-fast: the first offending token raises :class:`DemuxError`
carrying its index, and the demuxer refuses further input.
"""

from __future__ import annotations

import enum
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DemuxError, DemuxErrorKind
from .patterns import ChannelPair, FrameSequence, InterleaveConfig, MixedSequence, Pattern
from .vocab import VocabSpec

K = DemuxErrorKind


class EventKind(str, enum.Enum):
    TEXT = "text"
    TEXT_DONE = "text_done"
    SPEECH = "speech"
    SPEECH_DONE = "speech_done"
    STREAM_DONE = "done"


class DemuxEvent(NamedTuple):
    kind: EventKind
    index: int
    token: int | None = None

    def to_record(self) -> dict:
        rec = {"i": self.index, "ev": self.kind.value}
        if self.token is not None:
            rec["id"] = self.token
        return rec


class Phase(str, enum.Enum):
    CHUNKED = "chunked"
    SPEECH_ONLY = "speech_only"
    # parallel only: speech EOS seen, rest of the frame must be EOS fill
    EOS_FILL = "eos_fill"
    FINISHED = "finished"
    FAILED = "failed"


_TEXT_EV, _TEXT_DONE, _SPEECH_EV, _SPEECH_DONE, _DONE = (
    EventKind.TEXT,
    EventKind.TEXT_DONE,
    EventKind.SPEECH,
    EventKind.SPEECH_DONE,
    EventKind.STREAM_DONE,
)


class Demuxer:
    """Incremental parser for one stream.

    ``feed`` returns the events produced by that token; all events so far are
    kept on ``events`` unless ``record_events=False``. ``on_marker`` is called
    with the token index when the early-stop marker switches modes.
    """

    def __init__(
        self,
        vocab: VocabSpec,
        pattern: Pattern | str,
        config: InterleaveConfig,
        record_events: bool = True,
        on_marker: Callable[[int], None] | None = None,
    ):
        self.vocab = vocab
        self.pattern = Pattern(pattern)
        self.config = config
        if self.pattern is Pattern.PARALLEL and config.r_text != 1:
            raise ValueError("parallel frames carry exactly one text slot")
        self.record_events = record_events
        self.on_marker = on_marker

        self.phase = Phase.CHUNKED
        self.cursor = 0
        self.index = 0
        self.text: list[int] = []
        self.speech: list[int] = []
        self.text_done = False
        self.speech_done = False
        self.awaiting_marker = False
        self.marker_seen = False
        self.pads = 0
        self.events: list[DemuxEvent] = []
        self.error: DemuxError | None = None

        self._r_text = config.r_text
        self._cycle = config.r_text + config.r_speech
        self._eos_mode = config.append_speech_eos
        self._esi = self.pattern is Pattern.ESI
        self._parallel = self.pattern is Pattern.PARALLEL
        self._t0, self._t1 = vocab.text_range
        self._s0, self._s1 = vocab.speech_range
        self._eos_t = vocab.eos_text_id
        self._pad = vocab.pad_text_id
        self._marker = vocab.marker_id
        self._eos_s = vocab.eos_speech_id

    def _fail(self, kind: DemuxErrorKind, token: int | None) -> DemuxError:
        self.phase = Phase.FAILED
        self.error = DemuxError(kind, self.index, token)
        return self.error

    def feed(self, token: int) -> list[DemuxEvent]:
        phase = self.phase
        if phase is Phase.FAILED:
            raise RuntimeError("demuxer already failed") from self.error
        if phase is Phase.FINISHED:
            raise self._fail(K.TOKEN_AFTER_FINISH, token)

        i = self.index
        is_text = self._t0 <= token < self._t1
        is_speech = not is_text and self._s0 <= token < self._s1
        if not (is_text or is_speech or token == self._marker):
            raise self._fail(K.UNKNOWN_TOKEN, token)

        out: list[DemuxEvent] = []
        if phase is Phase.SPEECH_ONLY:
            if not is_speech:
                raise self._fail(K.UNEXPECTED_MARKER if token == self._marker else K.WRONG_CHANNEL, token)
            self._speech_token(token, i, out)
        elif phase is Phase.EOS_FILL:
            if token != self._eos_s:
                raise self._fail(K.SPEECH_AFTER_EOS if is_speech else K.WRONG_CHANNEL, token)
            if self.cursor == self._cycle - 1:
                self.phase = Phase.FINISHED
                out.append(DemuxEvent(_DONE, i))
            self.cursor = (self.cursor + 1) % self._cycle
        elif self.awaiting_marker:
            if token == self._marker:
                self.awaiting_marker = False
                self.marker_seen = True
                self.phase = Phase.SPEECH_ONLY
                if self.on_marker is not None:
                    self.on_marker(i)
            else:
                raise self._fail(K.WRONG_CHANNEL if is_speech else K.MISSING_MARKER, token)
        elif token == self._marker:
            raise self._fail(K.UNEXPECTED_MARKER, token)
        elif self.cursor < self._r_text:
            if not is_text:
                raise self._fail(K.WRONG_CHANNEL, token)
            if token == self._pad:
                if not self.text_done:
                    raise self._fail(K.PAD_BEFORE_EOS, token)
                self.pads += 1
            elif self.text_done:
                raise self._fail(K.TEXT_AFTER_EOS, token)
            elif token == self._eos_t:
                self.text.append(token)
                self.text_done = True
                out.append(DemuxEvent(_TEXT_DONE, i))
                if self._esi:
                    self.awaiting_marker = True
            else:
                self.text.append(token)
                out.append(DemuxEvent(_TEXT_EV, i, token))
            self.cursor = (self.cursor + 1) % self._cycle
        else:
            if not is_speech:
                raise self._fail(K.WRONG_CHANNEL, token)
            self._speech_token(token, i, out)
            if self.phase is Phase.CHUNKED or self.phase is Phase.EOS_FILL:
                self.cursor = (self.cursor + 1) % self._cycle

        self.index = i + 1
        if out and self.record_events:
            self.events.extend(out)
        return out

    def _speech_token(self, token: int, i: int, out: list[DemuxEvent]) -> None:
        if token != self._eos_s:
            self.speech.append(token)
            out.append(DemuxEvent(_SPEECH_EV, i, token))
            return
        if not self._eos_mode:
            raise self._fail(K.UNEXPECTED_SPEECH_EOS, token)
        if not self.text_done:
            raise self._fail(K.PREMATURE_SPEECH_EOS, token)
        self.speech.append(token)
        self.speech_done = True
        out.append(DemuxEvent(_SPEECH_DONE, i))
        if self._parallel and self.cursor != self._cycle - 1:
            self.phase = Phase.EOS_FILL
        else:
            self.phase = Phase.FINISHED
            out.append(DemuxEvent(_DONE, i))

    def finish(self) -> ChannelPair:
        """Close the stream and return the recovered channels.

        Without speech EOS the stream may also end after the marker, or at a
        point in the slot cycle where the last chunk's speech has begun.
        """
        if self.phase is Phase.FAILED:
            raise RuntimeError("demuxer already failed") from self.error
        if self.phase is Phase.FINISHED:
            return ChannelPair(tuple(self.text), tuple(self.speech))
        complete = False
        if not self._eos_mode and self.text_done and self.speech and not self.awaiting_marker:
            if self.phase is Phase.SPEECH_ONLY:
                complete = True
            elif self.phase is Phase.CHUNKED:
                complete = self.cursor == 0 or self.cursor > self._r_text
        if not complete:
            raise self._fail(K.TRUNCATED_STREAM, None)
        self.speech_done = True
        self.phase = Phase.FINISHED
        if self.record_events:
            self.events.append(DemuxEvent(_SPEECH_DONE, self.index))
            self.events.append(DemuxEvent(_DONE, self.index))
        return ChannelPair(tuple(self.text), tuple(self.speech))


def _in(arr: np.ndarray, lo: int, hi: int) -> bool:
    return arr.size == 0 or (int(arr.min()) >= lo and int(arr.max()) < hi)


def _fast_chunked(arr: np.ndarray, pattern: Pattern, cfg: InterleaveConfig, vocab: VocabSpec):
    n, rt = arr.size, cfg.r_text
    cycle = rt + cfg.r_speech
    tail = n % cycle
    if n == 0 or 0 < tail <= rt:
        return None
    mask = (np.arange(n) % cycle) < rt
    tp, sp = arr[mask], arr[~mask]
    if not (_in(tp, *vocab.text_range) and _in(sp, *vocab.speech_range)):
        return None
    eos = np.flatnonzero(tp == vocab.eos_text_id)
    if eos.size != 1:
        return None
    e = int(eos[0])
    if (tp[:e] == vocab.pad_text_id).any() or not (tp[e + 1 :] == vocab.pad_text_id).all():
        return None
    q = np.flatnonzero(sp == vocab.eos_speech_id)
    if not cfg.append_speech_eos:
        if q.size:
            return None
    elif pattern is Pattern.PARALLEL:
        if tail or q.size == 0:
            return None
        q0 = int(q[0])
        if q0 < sp.size - cfg.r_speech or q.size != sp.size - q0:
            return None
        sp = sp[: q0 + 1]
    elif q.size != 1 or int(q[0]) != sp.size - 1:
        return None
    return tp[: e + 1], sp


def _fast_esi(arr: np.ndarray, cfg: InterleaveConfig, vocab: VocabSpec):
    marks = np.flatnonzero(arr == vocab.marker_id)
    if marks.size != 1 or marks[0] == 0:
        return None
    m = int(marks[0])
    prefix, suffix = arr[:m], arr[m + 1 :]
    cycle = cfg.r_text + cfg.r_speech
    if (m - 1) % cycle >= cfg.r_text or prefix[-1] != vocab.eos_text_id:
        return None
    mask = (np.arange(m) % cycle) < cfg.r_text
    tp, sp = prefix[mask], prefix[~mask]
    if not (_in(tp, *vocab.text_range) and _in(sp, *vocab.speech_range) and _in(suffix, *vocab.speech_range)):
        return None
    if (tp[:-1] == vocab.eos_text_id).any() or (tp == vocab.pad_text_id).any():
        return None
    if (sp == vocab.eos_speech_id).any():
        return None
    q = np.flatnonzero(suffix == vocab.eos_speech_id)
    if cfg.append_speech_eos:
        if q.size != 1 or int(q[0]) != suffix.size - 1:
            return None
    elif q.size or sp.size + suffix.size == 0:
        return None
    return tp, np.concatenate([sp, suffix])


def _fast_demux(tokens: Sequence[int], pattern: Pattern, cfg: InterleaveConfig, vocab: VocabSpec):
    """Whole-sequence check that only ever accepts streams the state machine accepts.

    Returns None on anything unusual; the caller then replays the stream
    through :class:`Demuxer` to get the exact error and index.
    """
    try:
        arr = np.asarray(tokens, dtype=np.int64)
    except (OverflowError, TypeError, ValueError):
        return None
    if arr.ndim != 1:
        return None
    got = _fast_esi(arr, cfg, vocab) if pattern is Pattern.ESI else _fast_chunked(arr, pattern, cfg, vocab)
    if got is None:
        return None
    return ChannelPair(tuple(got[0].tolist()), tuple(got[1].tolist()))


def demux_tokens(
    tokens: Sequence[int], pattern: Pattern | str, config: InterleaveConfig, vocab: VocabSpec
) -> ChannelPair:
    pattern = Pattern(pattern)
    pair = _fast_demux(tokens, pattern, config, vocab)
    if pair is not None:
        return pair
    d = Demuxer(vocab, pattern, config, record_events=False)
    feed = d.feed
    for tok in tokens:
        feed(tok)
    return d.finish()


def demux_all(seq: MixedSequence | FrameSequence, vocab: VocabSpec) -> ChannelPair:
    """Same result as feeding every token to a :class:`Demuxer` and finishing.

    Frames are flattened text-slot-first. Errors carry the offending token index.
    """
    return demux_tokens(seq.tokens, seq.pattern, seq.config, vocab)
