import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speechmux import (
    ChannelPair,
    DemuxError,
    DemuxErrorKind,
    Demuxer,
    EventKind,
    FrameSequence,
    InterleaveConfig,
    MixedSequence,
    Pattern,
    demux_all,
    mux,
    parallel_config,
)
from speechmux.demux import demux_tokens
from speechmux.simulator import corrupt_at

import oracles
from conftest import E, M, P, Q, S, SMALL, T, layouts, pairs

K = DemuxErrorKind
R12 = InterleaveConfig(1, 2)
R510 = InterleaveConfig(5, 10)


def feed_all(tokens, pattern, cfg, vocab=SMALL):
    d = Demuxer(vocab, pattern, cfg)
    for tok in tokens:
        d.feed(tok)
    return d


def kinds(events):
    return [e.kind for e in events]


def test_esi_trace_events():
    stream = T(1, 2, 3, 4, 5) + S(1, 10) + [6, E, M, 1011, Q]
    marks = []
    d = Demuxer(SMALL, "esi", R510, on_marker=marks.append)
    per_token = [d.feed(t) for t in stream]
    assert kinds(d.events) == (
        [EventKind.TEXT] * 5
        + [EventKind.SPEECH] * 10
        + [EventKind.TEXT, EventKind.TEXT_DONE, EventKind.SPEECH, EventKind.SPEECH_DONE, EventKind.STREAM_DONE]
    )
    assert per_token[17] == []  # the marker produces no content event
    assert marks == [17]
    pair = d.finish()
    assert pair == ChannelPair(tuple(T(1, 2, 3, 4, 5, 6, E)), tuple(S(1, 11) + [Q]))
    assert pair == ChannelPair(tuple(T(1, 2, 3, 4, 5, 6, E)), tuple(S(1, 11) + [Q]))
    assert list(mux(pair, "esi", R510, SMALL).tokens) == stream


def test_interleaved_text_in_speech_slot():
    d = Demuxer(SMALL, "interleaved", R12)
    d.feed(1)
    with pytest.raises(DemuxError) as ei:
        d.feed(2)
    assert (ei.value.kind, ei.value.index) == (K.WRONG_CHANNEL, 1)


def test_esi_speech_right_after_eos():
    d = Demuxer(SMALL, "esi", R510)
    d.feed(E)
    with pytest.raises(DemuxError) as ei:
        d.feed(1001)
    assert ei.value.kind is K.WRONG_CHANNEL


def test_finish_examples():
    with pytest.raises(DemuxError) as ei:
        Demuxer(SMALL, "interleaved", R12).finish()
    assert ei.value.kind is K.TRUNCATED_STREAM

    # interleaved stream missing its final speech EOS
    d = feed_all([1, 1001, 1002, E, 1003], "interleaved", R12)
    with pytest.raises(DemuxError) as ei:
        d.finish()
    assert ei.value.kind is K.TRUNCATED_STREAM

    # EOS never seen
    with pytest.raises(DemuxError) as ei:
        demux_tokens([1, 1001, Q], "interleaved", R12, SMALL)
    assert ei.value.kind is K.PREMATURE_SPEECH_EOS
    with pytest.raises(DemuxError) as ei:
        demux_tokens([1, 1001, 1002], "interleaved", R12, SMALL)
    assert ei.value.kind is K.TRUNCATED_STREAM


def test_parallel_frames_example():
    fs = FrameSequence(((1, (1001,)), (E, (1002,)), (P, (Q,))), k=1)
    assert demux_all(fs, SMALL) == ChannelPair((1, E), (1001, 1002, Q))
    frames = [(t, list(s)) for t, s in fs.frames]
    assert oracles.frame_flatten_demux(frames, P, Q) == ([1, E], [1001, 1002, Q])


def test_demux_all_first_mux_example():
    p = ChannelPair(tuple(T(1, 2, E)), tuple(S(1, 5) + [Q]))
    assert demux_all(mux(p, "interleaved", R12, SMALL), SMALL) == p


@pytest.mark.parametrize(
    "pattern,cfg,stream,kind,index",
    [
        ("interleaved", R12, [1, 1001, 1002, P], K.PAD_BEFORE_EOS, 3),
        ("interleaved", R12, [P], K.PAD_BEFORE_EOS, 0),
        ("interleaved", R12, [1, 1001, M], K.UNEXPECTED_MARKER, 2),
        ("interleaved", R12, [E, M], K.UNEXPECTED_MARKER, 1),
        ("interleaved", R12, [1, 250], K.UNKNOWN_TOKEN, 1),
        ("interleaved", R12, [E, 1001, Q, 1002], K.TOKEN_AFTER_FINISH, 3),
        ("interleaved", R12, [E, 1001, 1002, 1], K.TEXT_AFTER_EOS, 3),
        ("interleaved", R12, [E, 1001, 1002, E], K.TEXT_AFTER_EOS, 3),
        ("interleaved", R12, [1, 1001, Q], K.PREMATURE_SPEECH_EOS, 2),
        ("esi", R12, [M], K.UNEXPECTED_MARKER, 0),
        ("esi", R12, [1, M], K.UNEXPECTED_MARKER, 1),
        ("esi", R12, [E, M, 1001, M], K.UNEXPECTED_MARKER, 3),
        ("esi", R12, [E, P], K.MISSING_MARKER, 1),
        ("esi", R12, [E, 2], K.MISSING_MARKER, 1),
        ("esi", R12, [E, M, 1001, 3], K.WRONG_CHANNEL, 3),
        ("esi", R12, [1, P], K.WRONG_CHANNEL, 1),
        ("esi", R510, [1, P], K.PAD_BEFORE_EOS, 1),
        ("parallel", parallel_config(3), [E, 1001, Q, 1002], K.SPEECH_AFTER_EOS, 3),
        ("parallel", parallel_config(3), [E, 1001, Q, 7], K.WRONG_CHANNEL, 3),
        ("parallel", parallel_config(3), [E, 1001, Q, Q, 1002], K.TOKEN_AFTER_FINISH, 4),
        ("interleaved", InterleaveConfig(1, 2, False), [E, 1001, Q], K.UNEXPECTED_SPEECH_EOS, 2),
    ],
)
def test_error_kinds(pattern, cfg, stream, kind, index):
    with pytest.raises(DemuxError) as ei:
        demux_tokens(stream, pattern, cfg, SMALL)
    assert ei.value.kind is kind
    if index is not None:
        assert ei.value.index == index
    # the fast path defers to the state machine, so both agree
    d = Demuxer(SMALL, pattern, cfg)
    with pytest.raises(DemuxError) as ej:
        for t in stream:
            d.feed(t)
        d.finish()
    assert (ej.value.kind, ej.value.index) == (ei.value.kind, ei.value.index)


def test_feed_after_failure_refused():
    d = Demuxer(SMALL, "interleaved", R12)
    with pytest.raises(DemuxError):
        d.feed(1001)
    with pytest.raises(RuntimeError):
        d.feed(1)


def test_no_speech_eos_mode_finishes_implicitly():
    cfg = InterleaveConfig(1, 2, append_speech_eos=False)
    d = feed_all([1, 1001, 1002, E, 1003], "interleaved", cfg)
    assert d.finish() == ChannelPair((1, E), (1001, 1002, 1003))
    assert kinds(d.events)[-2:] == [EventKind.SPEECH_DONE, EventKind.STREAM_DONE]

    # a stream ending on text slots is not a complete chunk
    d = feed_all([1, 1001, 1002, E], "interleaved", cfg)
    with pytest.raises(DemuxError):
        d.finish()

    d = feed_all([E, M, 1001], "esi", cfg)
    assert d.finish() == ChannelPair((E,), (1001,))
    d = feed_all([E], "esi", cfg)
    with pytest.raises(DemuxError) as ei:
        d.finish()
    assert ei.value.kind is K.TRUNCATED_STREAM


def test_interleaved_never_enters_speech_only():
    d = Demuxer(SMALL, "interleaved", R12)
    seen = set()
    for t in [1, 1001, 1002, E, 1003, 1004, P, 1005, Q]:
        d.feed(t)
        seen.add(d.phase.value)
    assert "speech_only" not in seen


def test_event_records():
    d = feed_all([E, 1001, Q], "interleaved", R12)
    assert [e.to_record() for e in d.events] == [
        {"i": 0, "ev": "text_done"},
        {"i": 1, "ev": "speech", "id": 1001},
        {"i": 2, "ev": "speech_done"},
        {"i": 2, "ev": "done"},
    ]


# --- properties ---------------------------------------------------------------------


@settings(max_examples=300)
@given(st.data(), layouts())
def test_roundtrip_and_streaming_equivalence(data, layout):
    pattern, cfg = layout
    p = data.draw(pairs(cfg.r_text, cfg.r_speech, max_speech=600, speech_eos=cfg.append_speech_eos))
    seq = mux(p, pattern, cfg, SMALL)
    assert demux_all(seq, SMALL) == p

    d = Demuxer(SMALL, pattern, cfg)
    snapshots = []
    for tok in seq.tokens:
        d.feed(tok)
        snapshots.append(list(d.events))
    assert d.finish() == p
    for a, b in zip(snapshots, snapshots[1:]):
        assert b[: len(a)] == a
    text_ev = [e.token for e in d.events if e.kind is EventKind.TEXT]
    speech_ev = [e.token for e in d.events if e.kind is EventKind.SPEECH]
    assert text_ev == list(p.text_tokens[:-1])
    body = p.speech_tokens[:-1] if cfg.append_speech_eos else p.speech_tokens
    assert speech_ev == list(body)
    assert kinds(d.events).count(EventKind.STREAM_DONE) == 1
    assert kinds(d.events).count(EventKind.TEXT_DONE) == 1


@settings(max_examples=300)
@given(st.data(), layouts(), st.randoms(use_true_random=False))
def test_flip_corruption_fails_at_the_flipped_index(data, layout, rng):
    pattern, cfg = layout
    p = data.draw(pairs(cfg.r_text, cfg.r_speech, max_speech=300, speech_eos=cfg.append_speech_eos))
    toks = mux(p, pattern, cfg, SMALL).tokens
    i = data.draw(st.integers(0, len(toks) - 1))
    bad = corrupt_at(toks, i, SMALL, rng)
    with pytest.raises(DemuxError) as ei:
        demux_tokens(bad, pattern, cfg, SMALL)
    assert ei.value.index == i


@settings(max_examples=300)
@given(st.data(), layouts(), st.lists(st.integers(-5, 2100), max_size=40))
def test_fast_path_agrees_with_state_machine_on_arbitrary_streams(data, layout, stream):
    pattern, cfg = layout
    # splice special ids in so arbitrary streams sometimes get far
    stream = [{-5: E, -4: P, -3: M, -2: Q}.get(t, t) for t in stream]
    d = Demuxer(SMALL, pattern, cfg, record_events=False)
    try:
        for t in stream:
            d.feed(t)
        expected = d.finish()
    except DemuxError as e:
        expected = (e.kind, e.index)
    try:
        got = demux_tokens(stream, pattern, cfg, SMALL)
    except DemuxError as e:
        got = (e.kind, e.index)
    assert got == expected


def test_fast_path_agrees_on_near_valid_streams():
    rng = random.Random(11)
    from speechmux.simulator import random_pair

    for _ in range(400):
        pattern = rng.choice(["interleaved", "esi", "parallel"])
        eos = rng.random() < 0.7
        cfg = parallel_config(rng.randint(1, 5), eos) if pattern == "parallel" else InterleaveConfig(rng.randint(1, 5), rng.randint(1, 8), eos)
        p = random_pair(rng, SMALL, cfg, text_len=(1, 10), extra_speech=20)
        toks = list(mux(p, pattern, cfg, SMALL).tokens)
        # truncate, duplicate, drop or swap a position
        op = rng.randrange(4)
        i = rng.randrange(len(toks))
        if op == 0:
            toks = toks[:i]
        elif op == 1:
            toks.insert(i, toks[i])
        elif op == 2:
            del toks[i]
        else:
            j = rng.randrange(len(toks))
            toks[i], toks[j] = toks[j], toks[i]
        d = Demuxer(SMALL, pattern, cfg, record_events=False)
        try:
            for t in toks:
                d.feed(t)
            expected = d.finish()
        except DemuxError as e:
            expected = (e.kind, e.index)
        try:
            got = demux_tokens(toks, pattern, cfg, SMALL)
        except DemuxError as e:
            got = (e.kind, e.index)
        assert got == expected, (pattern, cfg, op, toks)


def test_mixed_sequence_demux_uses_its_own_config():
    seq = MixedSequence((E, M, 1001, Q), Pattern.ESI, R510)
    assert demux_all(seq, SMALL) == ChannelPair((E,), (1001, Q))
