"""Spoken QA data curation: rewrite answers, synthesize speech, keep what ASR reads back well.

The rewriter, TTS and ASR services sit behind :class:`ClientSuite`. Only a
deterministic mock suite ships here; real services are plugged in by
constructing a ``ClientSuite`` from callables.

Question audio is synthesized but not filtered; only the answer's ASR WER is
checked, and a record is dropped when that WER is strictly greater than the
threshold.
"""

from __future__ import annotations

import enum
import hashlib
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from ._pool import ordered_map
from .errors import EmptyReference
from .metrics import normalize, wer

DEFAULT_WER_THRESHOLD = 0.20


@dataclass(frozen=True)
class QaSourceRecord:
    id: str
    question: str
    answer: str

    def __post_init__(self):
        if not self.question.strip() or not self.answer.strip():
            raise ValueError(f"record {self.id}: question and answer must be non-empty")

    @classmethod
    def from_record(cls, rec: dict) -> "QaSourceRecord":
        return cls(str(rec["id"]), rec["question"], rec["answer"])


class Status(str, enum.Enum):
    KEPT = "kept"
    DROPPED = "dropped"


WER_TOO_HIGH = "wer_too_high"
EMPTY_ANSWER = "empty_answer"


@dataclass(frozen=True)
class CuratedRecord:
    id: str
    question_text: str
    answer_phrase: str
    answer_sentence: str | None
    question_speaker: int
    answer_speaker: int
    question_audio_ref: str | None
    answer_audio_ref: str | None
    answer_transcript: str | None
    answer_wer: float | None
    status: Status
    reason: str | None = None
    detail: str | None = None

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "question_text": self.question_text,
            "answer_phrase": self.answer_phrase,
            "answer_sentence": self.answer_sentence,
            "question_speaker": self.question_speaker,
            "answer_speaker": self.answer_speaker,
            "question_audio_ref": self.question_audio_ref,
            "answer_audio_ref": self.answer_audio_ref,
            "answer_transcript": self.answer_transcript,
            "answer_wer": self.answer_wer,
            "status": self.status.value,
            "reason": self.reason,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ClientSuite:
    rewriter: Callable[[str, str], str]
    tts: Callable[[str, int], str]
    asr: Callable[[str], str]


@dataclass(frozen=True)
class NoiseSpec:
    """Per-word ASR corruption: each word is deleted, else substituted, else kept."""

    deletion_rate: float = 0.0
    substitution_rate: float = 0.0

    def __post_init__(self):
        for name in ("deletion_rate", "substitution_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.deletion_rate + self.substitution_rate > 1.0:
            raise ValueError("deletion_rate + substitution_rate must not exceed 1")


class MockClients:
    """Deterministic stand-ins for the rewriting LLM, zero-shot TTS and ASR.

    TTS handles are content hashes; ASR looks the text back up and applies
    :class:`NoiseSpec` with an RNG seeded from ``(seed, handle)``, so results do
    not depend on call order or thread scheduling.
    """

    def __init__(self, seed: int = 0, noise: NoiseSpec | None = None):
        self.seed = seed
        self.noise = noise or NoiseSpec()
        self._audio: dict[str, str] = {}

    def rewrite(self, question: str, answer_phrase: str) -> str:
        return f"The answer is {answer_phrase.strip()}."

    def synthesize(self, text: str, speaker: int) -> str:
        digest = hashlib.sha256(f"{speaker}\x00{text}".encode()).hexdigest()[:24]
        handle = f"mock-audio:{digest}"
        self._audio[handle] = text
        return handle

    def transcribe(self, handle: str) -> str:
        words = normalize(self._audio[handle]).split()
        rng = random.Random(f"{self.seed}:{handle}")
        d, s = self.noise.deletion_rate, self.noise.substitution_rate
        out = []
        for w in words:
            u = rng.random()
            if u < d:
                continue
            if u < d + s:
                sub = w
                while sub == w:
                    sub = f"w{rng.randrange(1_000_000)}"
                out.append(sub)
            else:
                out.append(w)
        return " ".join(out)

    def suite(self) -> ClientSuite:
        return ClientSuite(self.rewrite, self.synthesize, self.transcribe)


def mock_clients(seed: int = 0, noise: NoiseSpec | None = None) -> ClientSuite:
    return MockClients(seed, noise).suite()


class SpeakerSampler:
    """Seeded draws from ``range(pool_size)``.

    Walks a fresh shuffle of the pool each pass, so every draw is uniform over
    the pool and every id is used once per ``pool_size`` draws.
    """

    def __init__(self, pool_size: int, seed: int):
        if pool_size < 1:
            raise ValueError("speaker pool must hold at least one speaker")
        self.pool_size = pool_size
        self._rng = random.Random(seed)
        self._order: list[int] = []

    def draw(self) -> int:
        if not self._order:
            self._order = list(range(self.pool_size))
            self._rng.shuffle(self._order)
        return self._order.pop()


@dataclass
class CurationSummary:
    total: int = 0
    kept: int = 0
    dropped: int = 0
    reasons: Counter = field(default_factory=Counter)

    def add(self, rec: CuratedRecord) -> None:
        self.total += 1
        if rec.status is Status.KEPT:
            self.kept += 1
        else:
            self.dropped += 1
            self.reasons[rec.reason] += 1

    def to_dict(self) -> dict:
        return {"total": self.total, "kept": self.kept, "dropped": self.dropped, "reasons": dict(sorted(self.reasons.items()))}


def _process(job, clients: ClientSuite, threshold: float) -> CuratedRecord:
    rec, q_spk, a_spk = job
    got = {"answer_sentence": None, "question_audio_ref": None, "answer_audio_ref": None, "answer_transcript": None}

    def done(status, reason=None, detail=None, answer_wer=None):
        return CuratedRecord(
            rec.id, rec.question, rec.answer, question_speaker=q_spk, answer_speaker=a_spk,
            answer_wer=answer_wer, status=status, reason=reason, detail=detail, **got,
        )

    stage = "rewrite"
    try:
        got["answer_sentence"] = clients.rewriter(rec.question, rec.answer)
        stage = "tts"
        got["question_audio_ref"] = clients.tts(rec.question, q_spk)
        got["answer_audio_ref"] = clients.tts(got["answer_sentence"], a_spk)
        stage = "asr"
        got["answer_transcript"] = clients.asr(got["answer_audio_ref"])
    except Exception as e:  # any client failure drops just this record
        return done(Status.DROPPED, f"client_error:{stage}", f"{type(e).__name__}: {e}")

    if not normalize(got["answer_sentence"]):
        return done(Status.DROPPED, EMPTY_ANSWER)
    try:
        w = wer(got["answer_sentence"], got["answer_transcript"]).wer
    except EmptyReference:
        return done(Status.DROPPED, EMPTY_ANSWER)
    if w > threshold:
        return done(Status.DROPPED, WER_TOO_HIGH, answer_wer=w)
    return done(Status.KEPT, answer_wer=w)


def curate(
    records: Iterable[QaSourceRecord],
    clients: ClientSuite,
    wer_threshold: float = DEFAULT_WER_THRESHOLD,
    speaker_pool_size: int = 1000,
    seed: int = 0,
    workers: int = 1,
) -> Iterator[CuratedRecord]:
    """Run rewrite, TTS and ASR filtering over ``records``, yielding in input order.

    Speakers are assigned in input order before any client call, so output is
    identical for any ``workers`` count.
    """
    if not 0.0 < wer_threshold <= 1.0:
        raise ValueError("wer_threshold must be in (0, 1]")
    sampler = SpeakerSampler(speaker_pool_size, seed)

    def jobs():
        for rec in records:
            yield rec, sampler.draw(), sampler.draw()

    yield from ordered_map(lambda job: _process(job, clients, wer_threshold), jobs(), workers)
