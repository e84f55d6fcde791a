"""Token-id universe: which ids are text, which are speech, and the special tokens."""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass
from pathlib import Path

from .errors import InvalidVocab


class TokenClass(enum.IntEnum):
    TEXT_CONTENT = 0
    TEXT_EOS = 1
    TEXT_PAD = 2
    MARKER = 3
    SPEECH_CONTENT = 4
    SPEECH_EOS = 5
    UNKNOWN = 6

    @property
    def is_text(self) -> bool:
        return self <= TokenClass.TEXT_PAD

    @property
    def is_speech(self) -> bool:
        return self in (TokenClass.SPEECH_CONTENT, TokenClass.SPEECH_EOS)


@dataclass(frozen=True)
class VocabSpec:
    """Half-open id ranges for both channels plus the four special ids.

    Text EOS and PAD live inside the text range, speech EOS inside the speech
    range; the ``<S>`` marker lives in neither.
    """

    text_range: tuple[int, int] = (0, 4096)
    speech_range: tuple[int, int] = (4096, 10646)
    eos_text_id: int = 4094
    pad_text_id: int = 4095
    marker_id: int = 10646
    eos_speech_id: int = 10645

    def __post_init__(self):
        object.__setattr__(self, "text_range", tuple(int(x) for x in self.text_range))
        object.__setattr__(self, "speech_range", tuple(int(x) for x in self.speech_range))
        t0, t1 = self.text_range
        s0, s1 = self.speech_range
        if not (t0 < t1 and s0 < s1):
            raise InvalidVocab("text_range and speech_range must be non-empty")
        if t0 < s1 and s0 < t1:
            raise InvalidVocab("text_range and speech_range overlap")
        if not (t0 <= self.eos_text_id < t1 and t0 <= self.pad_text_id < t1):
            raise InvalidVocab("eos_text_id and pad_text_id must lie in text_range")
        if not s0 <= self.eos_speech_id < s1:
            raise InvalidVocab("eos_speech_id must lie in speech_range")
        if t0 <= self.marker_id < t1 or s0 <= self.marker_id < s1:
            raise InvalidVocab("marker_id must lie outside both ranges")
        specials = {self.eos_text_id, self.pad_text_id, self.marker_id, self.eos_speech_id}
        if len(specials) != 4:
            raise InvalidVocab("special ids must be pairwise distinct")

    def classify(self, token: int) -> TokenClass:
        if token == self.eos_text_id:
            return TokenClass.TEXT_EOS
        if token == self.pad_text_id:
            return TokenClass.TEXT_PAD
        if token == self.marker_id:
            return TokenClass.MARKER
        if token == self.eos_speech_id:
            return TokenClass.SPEECH_EOS
        if self.text_range[0] <= token < self.text_range[1]:
            return TokenClass.TEXT_CONTENT
        if self.speech_range[0] <= token < self.speech_range[1]:
            return TokenClass.SPEECH_CONTENT
        return TokenClass.UNKNOWN

    def sample_text(self, rng: random.Random, n: int) -> list[int]:
        """n uniform text content ids (specials excluded)."""
        return self._sample(rng, n, self.text_range)

    def sample_speech(self, rng: random.Random, n: int) -> list[int]:
        return self._sample(rng, n, self.speech_range)

    def _sample(self, rng: random.Random, n: int, span: tuple[int, int]) -> list[int]:
        lo, hi = span
        specials = {self.eos_text_id, self.pad_text_id, self.eos_speech_id}
        if hi - lo <= sum(lo <= s < hi for s in specials):
            raise ValueError("range holds only special ids")
        out = rng.choices(range(lo, hi), k=n)
        for i, tok in enumerate(out):
            while tok in specials:
                tok = rng.randrange(lo, hi)
            out[i] = tok
        return out

    def to_dict(self) -> dict:
        return {
            "text_range": list(self.text_range),
            "speech_range": list(self.speech_range),
            "eos_text_id": self.eos_text_id,
            "pad_text_id": self.pad_text_id,
            "marker_id": self.marker_id,
            "eos_speech_id": self.eos_speech_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VocabSpec":
        fields = ("text_range", "speech_range", "eos_text_id", "pad_text_id", "marker_id", "eos_speech_id")
        missing = [f for f in fields if f not in d]
        if missing:
            raise InvalidVocab(f"vocab is missing fields: {', '.join(missing)}")
        return cls(**{f: d[f] for f in fields})

    @classmethod
    def load(cls, path: str | Path) -> "VocabSpec":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def classify(vocab: VocabSpec, token: int) -> TokenClass:
    return vocab.classify(token)


DEFAULT_VOCAB = VocabSpec()
