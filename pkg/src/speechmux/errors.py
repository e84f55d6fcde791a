"""Exception types shared across the codec, analytics and pipeline modules."""

from __future__ import annotations

import enum


class SpeechmuxError(Exception):
    """Base class for every error raised by this package."""


class InvalidVocab(SpeechmuxError, ValueError):
    pass


class InvalidPair(SpeechmuxError, ValueError):
    pass


class InvalidConfig(SpeechmuxError, ValueError):
    pass


class SpeechUnderrun(SpeechmuxError):
    """The speech channel ran out while text tokens were still waiting for a slot."""


class EmptyReference(SpeechmuxError, ValueError):
    """WER is undefined: the reference has no words but the hypothesis does."""


class DemuxErrorKind(str, enum.Enum):
    WRONG_CHANNEL = "WrongChannel"
    PAD_BEFORE_EOS = "PadBeforeEos"
    UNEXPECTED_MARKER = "UnexpectedMarker"
    MISSING_MARKER = "MissingMarker"
    TEXT_AFTER_EOS = "TextAfterEos"
    PREMATURE_SPEECH_EOS = "PrematureSpeechEos"
    UNEXPECTED_SPEECH_EOS = "UnexpectedSpeechEos"
    SPEECH_AFTER_EOS = "SpeechAfterEos"
    TOKEN_AFTER_FINISH = "TokenAfterFinish"
    UNKNOWN_TOKEN = "UnknownToken"
    TRUNCATED_STREAM = "TruncatedStream"


class DemuxError(SpeechmuxError):
    """A malformed token stream, located at the first offending token index."""

    def __init__(self, kind: DemuxErrorKind, index: int, token: int | None = None):
        self.kind = kind
        self.index = index
        self.token = token
        super().__init__(f"{kind.value} at index {index}")
