import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from speechmux import DEFAULT_VOCAB, TokenClass, VocabSpec, classify
from speechmux.errors import InvalidVocab

from conftest import SMALL


@pytest.mark.parametrize(
    "token,expected",
    [
        (42, TokenClass.TEXT_CONTENT),
        (500, TokenClass.MARKER),
        (250, TokenClass.UNKNOWN),
        (98, TokenClass.TEXT_EOS),
        (99, TokenClass.TEXT_PAD),
        (1999, TokenClass.SPEECH_EOS),
        (1000, TokenClass.SPEECH_CONTENT),
        (2000, TokenClass.UNKNOWN),
        (-1, TokenClass.UNKNOWN),
    ],
)
def test_classify_examples(token, expected):
    assert classify(SMALL, token) is expected


@given(st.integers(-(10**6), 10**6))
def test_classify_total_and_consistent(token):
    c = SMALL.classify(token)
    in_text = 0 <= token < 100
    in_speech = 1000 <= token < 2000
    if token == 500:
        assert c is TokenClass.MARKER
    elif in_text:
        assert c.is_text
    elif in_speech:
        assert c.is_speech
    else:
        assert c is TokenClass.UNKNOWN
    assert SMALL.classify(token) is c


def test_specials_always_classify_as_themselves():
    for v in (SMALL, DEFAULT_VOCAB):
        assert v.classify(v.eos_text_id) is TokenClass.TEXT_EOS
        assert v.classify(v.pad_text_id) is TokenClass.TEXT_PAD
        assert v.classify(v.marker_id) is TokenClass.MARKER
        assert v.classify(v.eos_speech_id) is TokenClass.SPEECH_EOS


def test_default_layout():
    v = DEFAULT_VOCAB
    assert v.text_range == (0, 4096)
    assert v.speech_range == (4096, 10646)
    assert v.speech_range[1] - v.speech_range[0] == 6550


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(speech_range=(50, 2000)),  # overlaps text
        dict(text_range=(5, 5)),  # empty
        dict(eos_text_id=1500),  # EOS outside text range
        dict(pad_text_id=98),  # duplicates EOS
        dict(marker_id=50),  # marker inside text
        dict(marker_id=1500),  # marker inside speech
        dict(eos_speech_id=42),
    ],
)
def test_invalid_vocab_rejected(kwargs):
    base = SMALL.to_dict()
    base.update(kwargs)
    with pytest.raises(InvalidVocab):
        VocabSpec.from_dict(base)


def test_json_roundtrip(tmp_path):
    d = SMALL.to_dict()
    assert set(d) == {"text_range", "speech_range", "eos_text_id", "pad_text_id", "marker_id", "eos_speech_id"}
    path = tmp_path / "v.json"
    path.write_text(json.dumps(d))
    assert VocabSpec.load(path) == SMALL


def test_missing_field_rejected():
    d = SMALL.to_dict()
    del d["marker_id"]
    with pytest.raises(InvalidVocab, match="marker_id"):
        VocabSpec.from_dict(d)


def test_sampling_never_returns_specials():
    import random

    tiny = VocabSpec((0, 4), (4, 8), eos_text_id=0, pad_text_id=1, marker_id=8, eos_speech_id=4)
    rng = random.Random(3)
    assert set(tiny.sample_text(rng, 200)) <= {2, 3}
    assert set(tiny.sample_speech(rng, 200)) <= {5, 6, 7}
