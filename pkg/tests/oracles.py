"""Brute-force reference implementations, deliberately naive and independent of the package.

They walk the slot schedule one position at a time (muxers), enumerate
alignments exhaustively (WER), or scan every window (containment).
"""

from __future__ import annotations

import itertools
from functools import lru_cache

UNDERRUN = "underrun"


def slot_interleave(text, speech, r_text, r_speech, pad):
    out = []
    ti = si = pos = 0
    while si < len(speech):
        if pos % (r_text + r_speech) < r_text:
            if ti < len(text):
                out.append(text[ti])
                ti += 1
            else:
                out.append(pad)
        else:
            out.append(speech[si])
            si += 1
        pos += 1
    return UNDERRUN if ti < len(text) else out


def slot_esi(text, speech, r_text, r_speech, marker):
    out = []
    ti = si = pos = 0
    while ti < len(text):
        if pos % (r_text + r_speech) < r_text:
            out.append(text[ti])
            ti += 1
        else:
            if si == len(speech):
                return UNDERRUN
            out.append(speech[si])
            si += 1
        pos += 1
    return out + [marker] + list(speech[si:])


def frame_build(text, speech, k, pad, fill):
    frames = []
    i = 0
    while i * k < len(speech):
        t = text[i] if i < len(text) else pad
        s = list(speech[i * k : i * k + k])
        while fill is not None and len(s) < k:
            s.append(fill)
        frames.append((t, s))
        i += 1
    return UNDERRUN if len(frames) < len(text) else frames


def frame_flatten_demux(frames, pad, fill_eos):
    """Text column up to and including EOS is the text channel; speech rows up to the first EOS."""
    text = [t for t, _ in frames if t != pad]
    speech = [s for _, row in frames for s in row]
    if fill_eos is not None and fill_eos in speech:
        speech = speech[: speech.index(fill_eos) + 1]
    return text, speech


@lru_cache(maxsize=None)
def edit_distance(a: tuple, b: tuple) -> int:
    """Top-down recursion on the first words of each sequence."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(
        edit_distance(a[1:], b[1:]) + (a[0] != b[0]),
        edit_distance(a[1:], b) + 1,
        edit_distance(a, b[1:]) + 1,
    )


def all_alignment_costs(a, b):
    """Cost of every alignment path (sequence of match/sub, delete, insert moves)."""
    if not a and not b:
        return {0}
    costs = set()
    if a and b:
        costs |= {c + (a[0] != b[0]) for c in all_alignment_costs(a[1:], b[1:])}
    if a:
        costs |= {c + 1 for c in all_alignment_costs(a[1:], b)}
    if b:
        costs |= {c + 1 for c in all_alignment_costs(a, b[1:])}
    return costs


def window_hit(out_words, ref_words):
    n = len(ref_words)
    if n == 0:
        return False
    return any(list(out_words[i : i + n]) == list(ref_words) for i in range(len(out_words) - n + 1))


def sequences(alphabet, max_len):
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)
