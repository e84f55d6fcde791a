"""SpokenQA scoring: answer containment for S2T/S2S accuracy, their ratio, and WER."""

from __future__ import annotations

import math
import unicodedata
from dataclasses import asdict, dataclass, field
from typing import Iterable

from .errors import EmptyReference, SpeechmuxError


class NoRecords(SpeechmuxError, ValueError):
    pass


def normalize(s: str) -> str:
    """Lowercase, punctuation to spaces, collapse whitespace."""
    chars = [" " if unicodedata.category(c).startswith("P") else c for c in s.lower()]
    return " ".join("".join(chars).split())


def answer_hit(output: str, references: list[str], raw_substring: bool = False) -> bool:
    """True if any reference appears in the output on word boundaries.

    ``raw_substring`` falls back to plain substring containment after
    normalization. A reference that normalizes to nothing never hits.
    """
    if not references:
        raise ValueError("references must be non-empty")
    out = normalize(output)
    padded = f" {out} "
    for ref in references:
        r = normalize(ref)
        if not r:
            continue
        if (r in out) if raw_substring else (f" {r} " in padded):
            return True
    return False


@dataclass(frozen=True)
class WerBreakdown:
    wer: float
    substitutions: int
    deletions: int
    insertions: int
    ref_len: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def align_words(ref: list[str], hyp: list[str]) -> tuple[int, int, int]:
    """Minimum-edit alignment; returns (substitutions, deletions, insertions).

    Among optimal alignments the backtrace prefers match/substitution, then
    deletion, then insertion, so the breakdown is deterministic.
    """
    n, m = len(ref), len(hyp)
    prev = list(range(m + 1))
    rows = [prev]
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        r = ref[i - 1]
        for j in range(1, m + 1):
            cur[j] = min(prev[j - 1] + (r != hyp[j - 1]), prev[j] + 1, cur[j - 1] + 1)
        rows.append(cur)
        prev = cur

    s = d = ins = 0
    i, j = n, m
    while i or j:
        here = rows[i][j]
        if i and j and here == rows[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            s += ref[i - 1] != hyp[j - 1]
            i, j = i - 1, j - 1
        elif i and here == rows[i - 1][j] + 1:
            d += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return s, d, ins


def wer(reference: str, hypothesis: str) -> WerBreakdown:
    """Word error rate of ``hypothesis`` against ``reference`` after normalization.

    Uncapped: insertions can push it above 1. Raises :class:`EmptyReference`
    when the reference has no words but the hypothesis does.
    """
    ref = normalize(reference).split()
    hyp = normalize(hypothesis).split()
    if not ref:
        if hyp:
            raise EmptyReference("reference has no words")
        return WerBreakdown(0.0, 0, 0, 0, 0)
    s, d, i = align_words(ref, hyp)
    return WerBreakdown((s + d + i) / len(ref), s, d, i, len(ref))


@dataclass(frozen=True)
class QaEvalRecord:
    id: str
    reference_answers: list[str]
    text_output: str
    speech_transcript: str | None = None

    def __post_init__(self):
        if not self.reference_answers:
            raise ValueError(f"record {self.id}: reference_answers is empty")

    @classmethod
    def from_record(cls, rec: dict) -> "QaEvalRecord":
        refs = rec.get("references", rec.get("reference_answers"))
        if isinstance(refs, str):
            refs = [refs]
        return cls(str(rec["id"]), list(refs or []), rec["text_output"], rec.get("speech_transcript"))


@dataclass(frozen=True)
class Verdict:
    id: str
    s2t_hit: bool
    s2s_hit: bool | None
    wer: float | None


@dataclass(frozen=True)
class EvalReport:
    n: int
    s2t_accuracy: float
    s2s_accuracy: float | None
    rel_ratio: float | None
    mean_wer: float | None
    n_with_transcript: int
    n_without_transcript: int
    n_wer_undefined: int
    verdicts: list[Verdict] = field(default_factory=list, repr=False)

    def to_dict(self, with_verdicts: bool = False) -> dict:
        d = {
            "n": self.n,
            "s2t": self.s2t_accuracy,
            "s2s": self.s2s_accuracy,
            "rel": self.rel_ratio,
            "mean_wer": self.mean_wer,
            "n_with_transcript": self.n_with_transcript,
            "n_without_transcript": self.n_without_transcript,
            "n_wer_undefined": self.n_wer_undefined,
        }
        if with_verdicts:
            d["verdicts"] = [asdict(v) for v in self.verdicts]
        return d


def evaluate(records: Iterable[QaEvalRecord], raw_substring: bool = False) -> EvalReport:
    """Score a prediction set.

    S2S accuracy and mean WER only cover records that carry a transcript. WER
    takes the model's text output as reference and the transcript as
    hypothesis. ``rel_ratio`` is None when S2T accuracy is 0.
    """
    verdicts = []
    s2t = s2s = with_tr = undefined = 0
    wers = []
    for rec in records:
        t_hit = answer_hit(rec.text_output, rec.reference_answers, raw_substring)
        s2t += t_hit
        s_hit = w = None
        if rec.speech_transcript is not None:
            with_tr += 1
            s_hit = answer_hit(rec.speech_transcript, rec.reference_answers, raw_substring)
            s2s += s_hit
            try:
                w = wer(rec.text_output, rec.speech_transcript).wer
                wers.append(w)
            except EmptyReference:
                undefined += 1
        verdicts.append(Verdict(rec.id, t_hit, s_hit, w))
    n = len(verdicts)
    if n == 0:
        raise NoRecords("no records to evaluate")
    s2t_acc = s2t / n
    s2s_acc = s2s / with_tr if with_tr else None
    rel = s2s_acc / s2t_acc if s2s_acc is not None and s2t_acc > 0 else None
    return EvalReport(
        n=n,
        s2t_accuracy=s2t_acc,
        s2s_accuracy=s2s_acc,
        rel_ratio=rel,
        mean_wer=math.fsum(wers) / len(wers) if wers else None,
        n_with_transcript=with_tr,
        n_without_transcript=n - with_tr,
        n_wer_undefined=undefined,
        verdicts=verdicts,
    )
