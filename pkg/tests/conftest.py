import os
import sys

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from speechmux import ChannelPair, InterleaveConfig, VocabSpec  # noqa: E402

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# The small vocab used in the worked examples: T_i = i, S_i = 1000 + i.
SMALL = VocabSpec(
    text_range=(0, 100),
    speech_range=(1000, 2000),
    eos_text_id=98,
    pad_text_id=99,
    marker_id=500,
    eos_speech_id=1999,
)
E, P, M, Q = 98, 99, 500, 1999


def T(*ids):
    return list(ids)


def S(lo, hi):
    return [1000 + i for i in range(lo, hi + 1)]


@pytest.fixture
def vocab():
    return SMALL


@st.composite
def pairs(draw, r_text=1, r_speech=2, max_text=64, max_speech=2048, speech_eos=True, vocab=SMALL):
    """Valid pairs that never underrun for r_text:r_speech chunks."""
    t = draw(st.integers(1, max_text))
    chunks = -(-t // r_text)
    lo = (chunks - 1) * r_speech + 1
    s = draw(st.integers(lo, max(lo, max_speech)))
    text_ids = st.integers(vocab.text_range[0], vocab.text_range[1] - 1).filter(
        lambda x: x not in (vocab.eos_text_id, vocab.pad_text_id)
    )
    speech_ids = st.integers(vocab.speech_range[0], vocab.speech_range[1] - 1).filter(lambda x: x != vocab.eos_speech_id)
    text = draw(st.lists(text_ids, min_size=t - 1, max_size=t - 1)) + [vocab.eos_text_id]
    n_body = s - 1 if speech_eos else s
    speech = draw(st.lists(speech_ids, min_size=n_body, max_size=n_body))
    if speech_eos:
        speech.append(vocab.eos_speech_id)
    return ChannelPair(tuple(text), tuple(speech))


@st.composite
def layouts(draw):
    """(pattern, config) covering all three layouts, both speech-EOS modes."""
    pattern = draw(st.sampled_from(["interleaved", "esi", "parallel"]))
    eos = draw(st.booleans())
    if pattern == "parallel":
        return pattern, InterleaveConfig(1, draw(st.integers(1, 16)), eos)
    return pattern, InterleaveConfig(draw(st.integers(1, 13)), draw(st.integers(1, 26)), eos)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
