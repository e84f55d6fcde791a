"""Codecs, demultiplexers and evaluation tools for joint speech-text token streams."""

__version__ = "0.1.0"

from .analytics import CorpusReport, LengthReport, corpus_report, expected_reduction, length_report
from .demux import DemuxEvent, Demuxer, EventKind, demux_all, demux_tokens
from .errors import DemuxError, DemuxErrorKind, SpeechUnderrun
from .metrics import EvalReport, QaEvalRecord, WerBreakdown, answer_hit, evaluate, normalize, wer
from .patterns import (
    ChannelPair,
    FrameSequence,
    InterleaveConfig,
    MixedSequence,
    Pattern,
    mux,
    mux_esi,
    mux_interleaved,
    mux_parallel,
    parallel_config,
)
from .vocab import DEFAULT_VOCAB, TokenClass, VocabSpec, classify
