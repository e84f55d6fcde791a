"""``speechmux`` command line: encode/decode/analyze/eval/curate/simulate/bench over JSONL.

Exit status: 0 ok, 1 when any record fails validation (one diagnostic line per
failure on stderr), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import random
import sys
from typing import IO, Iterator

from . import __version__
from ._pool import ordered_map
from .analytics import EmptyCorpus, corpus_report
from .curation import CurationSummary, NoiseSpec, QaSourceRecord, curate, mock_clients
from .demux import Demuxer, demux_all
from .errors import DemuxError, SpeechmuxError
from .metrics import NoRecords, QaEvalRecord, evaluate
from .patterns import ChannelPair, FrameSequence, InterleaveConfig, MixedSequence, Pattern, mux, parallel_config
from .simulator import Corrupting, CorruptMode, bench, run
from .vocab import DEFAULT_VOCAB, VocabSpec


class RecordError(Exception):
    def __init__(self, rid: str, msg: str):
        super().__init__(f"record {rid}: {msg}")


def dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


@contextlib.contextmanager
def _open(path: str | None, mode: str):
    if path in (None, "-"):
        yield sys.stdin if "r" in mode else sys.stdout
    else:
        with open(path, mode, encoding="utf-8", newline="" if "w" in mode else None) as f:
            yield f


def _read_jsonl(fp: IO[str]) -> Iterator[tuple[str, dict | RecordError]]:
    """Yield (id, record) per non-blank line; unparseable lines yield a RecordError."""
    for lineno, line in enumerate(fp, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            yield f"line{lineno}", RecordError(f"line{lineno}", f"invalid JSON ({e.msg})")
            continue
        if not isinstance(rec, dict):
            yield f"line{lineno}", RecordError(f"line{lineno}", "not a JSON object")
            continue
        yield str(rec.get("id", f"line{lineno}")), rec


def _ints(rec: dict, key: str, rid: str) -> None:
    vals = rec.get(key)
    if not isinstance(vals, list) or not all(type(v) is int for v in vals):
        raise RecordError(rid, f"{key} must be a list of integers")


def _layout(args) -> tuple[Pattern | None, InterleaveConfig | None]:
    if args.pattern is None:
        return None, None
    pattern = Pattern(args.pattern)
    eos = not args.no_speech_eos
    if pattern is Pattern.PARALLEL:
        if args.ratio is not None:
            raise argparse.ArgumentTypeError("--pattern parallel takes --k, not --ratio")
        return pattern, parallel_config(args.k or 1, eos)
    if args.k is not None:
        raise argparse.ArgumentTypeError("--k only applies to --pattern parallel")
    return pattern, InterleaveConfig.parse(args.ratio or "1:2", eos)


def _vocab(args) -> VocabSpec:
    return VocabSpec.load(args.vocab) if args.vocab else DEFAULT_VOCAB


def _report_errors(errors: list[str]) -> int:
    for e in errors:
        print(e, file=sys.stderr)
    return 1 if errors else 0


def cmd_encode(args, pattern, cfg, vocab) -> int:
    if pattern is None:
        raise argparse.ArgumentTypeError("encode needs --pattern")

    def work(item):
        rid, rec = item
        if isinstance(rec, RecordError):
            return rec
        try:
            _ints(rec, "text_tokens", rid)
            _ints(rec, "speech_tokens", rid)
            seq = mux(ChannelPair.from_record(rec), pattern, cfg, vocab)
        except RecordError as e:
            return e
        except SpeechmuxError as e:
            return RecordError(rid, f"{type(e).__name__}: {e}")
        return dumps(seq.to_record(rid))

    errors = []
    with _open(args.input, "r") as fin, _open(args.out, "w") as fout:
        for res in ordered_map(work, _read_jsonl(fin), args.workers):
            if isinstance(res, RecordError):
                errors.append(str(res))
            else:
                fout.write(res + "\n")
    return _report_errors(errors)


def _sequence(rec: dict, rid: str, pattern, cfg) -> MixedSequence | FrameSequence:
    if "frames" in rec:
        seq = FrameSequence.from_record(rec)
        if pattern not in (None, Pattern.PARALLEL) or (cfg is not None and cfg.r_speech != seq.k):
            raise RecordError(rid, "record layout conflicts with --pattern/--k")
        return seq
    _ints(rec, "tokens", rid)
    if "pattern" in rec:
        seq = MixedSequence.from_record(rec)
        if pattern is not None and (pattern is not seq.pattern or cfg.ratio != seq.config.ratio):
            raise RecordError(rid, "record layout conflicts with --pattern/--ratio")
        return seq
    if pattern is None:
        raise RecordError(rid, "record has no layout fields and no --pattern was given")
    if pattern is Pattern.PARALLEL:
        raise RecordError(rid, "parallel records must carry frames")
    return MixedSequence(tuple(rec["tokens"]), pattern, cfg)


def cmd_decode(args, pattern, cfg, vocab) -> int:
    def work(item):
        rid, rec = item
        if isinstance(rec, RecordError):
            return rec, None
        events = None
        try:
            seq = _sequence(rec, rid, pattern, cfg)
            if args.trace:
                d = Demuxer(vocab, seq.pattern, seq.config)
                try:
                    for tok in seq.tokens:
                        d.feed(tok)
                    pair = d.finish()
                finally:
                    events = [dict(e.to_record(), rec=rid) for e in d.events]
            else:
                pair = demux_all(seq, vocab)
        except DemuxError as e:
            return RecordError(rid, str(e)), events
        except RecordError as e:
            return e, events
        except (SpeechmuxError, KeyError, TypeError, ValueError) as e:
            return RecordError(rid, f"{type(e).__name__}: {e}"), events
        return dumps(pair.to_record(rid)), events

    errors = []
    with contextlib.ExitStack() as stack:
        fin = stack.enter_context(_open(args.input, "r"))
        fout = stack.enter_context(_open(args.out, "w"))
        ftrace = stack.enter_context(open(args.trace, "w", encoding="utf-8")) if args.trace else None
        for res, events in ordered_map(work, _read_jsonl(fin), args.workers):
            if ftrace is not None and events:
                ftrace.writelines(dumps(e) + "\n" for e in events)
            if isinstance(res, RecordError):
                errors.append(str(res))
            else:
                fout.write(res + "\n")
    return _report_errors(errors)


def _pairs(fin, errors: list[str]) -> Iterator[tuple[str, ChannelPair]]:
    for rid, rec in _read_jsonl(fin):
        if isinstance(rec, RecordError):
            errors.append(str(rec))
            continue
        try:
            _ints(rec, "text_tokens", rid)
            _ints(rec, "speech_tokens", rid)
            yield rid, ChannelPair.from_record(rec)
        except (RecordError, SpeechmuxError) as e:
            errors.append(str(e) if isinstance(e, RecordError) else f"record {rid}: {e}")


def cmd_analyze(args, pattern, cfg, vocab) -> int:
    cfg = cfg or InterleaveConfig.parse(args.ratio or "1:2", not args.no_speech_eos)
    errors: list[str] = []
    with _open(args.input, "r") as fin:
        try:
            report = corpus_report(_pairs(fin, errors), cfg, vocab, args.tps)
        except EmptyCorpus as e:
            errors.append(f"corpus: {e}")
            return _report_errors(errors)
    out = report.to_dict()
    out["ratio"] = cfg.ratio
    with _open(args.out, "w") as fout:
        fout.write(json.dumps(out, indent=2) + "\n")
    errors += [f"record {rid}: {msg}" for rid, msg in report.error_details]
    return _report_errors(errors)


def cmd_eval(args, pattern, cfg, vocab) -> int:
    errors: list[str] = []
    records = []
    with _open(args.pred, "r") as fin:
        for rid, rec in _read_jsonl(fin):
            if isinstance(rec, RecordError):
                errors.append(str(rec))
                continue
            try:
                records.append(QaEvalRecord.from_record(rec))
            except (KeyError, TypeError, ValueError) as e:
                errors.append(f"record {rid}: invalid eval record ({e})")
    if errors:
        return _report_errors(errors)
    try:
        report = evaluate(records, raw_substring=args.raw_substring)
    except NoRecords as e:
        return _report_errors([f"eval: {e}"])
    with _open(args.out, "w") as fout:
        fout.write(json.dumps(report.to_dict(with_verdicts=args.verdicts), indent=2) + "\n")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f)
            w.writerow(["id", "s2t_hit", "s2s_hit", "wer"])
            for v in report.verdicts:
                w.writerow([v.id, int(v.s2t_hit), "" if v.s2s_hit is None else int(v.s2s_hit), "" if v.wer is None else v.wer])
    return 0


def cmd_curate(args, pattern, cfg, vocab) -> int:
    noise = NoiseSpec(args.asr_del_rate, args.asr_sub_rate)
    clients = mock_clients(args.seed, noise)
    errors: list[str] = []

    def sources(fin):
        for rid, rec in _read_jsonl(fin):
            if isinstance(rec, RecordError):
                errors.append(str(rec))
                continue
            try:
                yield QaSourceRecord.from_record(rec)
            except (KeyError, TypeError, ValueError) as e:
                errors.append(f"record {rid}: invalid source record ({e})")

    summary = CurationSummary()
    with _open(args.input, "r") as fin, _open(args.out, "w") as fout:
        for rec in curate(sources(fin), clients, args.wer_threshold, args.speakers, args.seed, args.workers):
            summary.add(rec)
            fout.write(dumps(rec.to_record()) + "\n")
    print(dumps(summary.to_dict()), file=sys.stderr)
    return _report_errors(errors)


def cmd_simulate(args, pattern, cfg, vocab) -> int:
    if pattern is None:
        raise argparse.ArgumentTypeError("simulate needs --pattern")
    errors: list[str] = []
    rng = random.Random(args.seed)
    runs, kinds = [], {}
    with _open(args.corpus, "r") as fin:
        for rid, pair in _pairs(fin, errors):
            try:
                tokens = list(mux(pair, pattern, cfg, vocab).tokens)
            except SpeechmuxError as e:
                errors.append(f"record {rid}: {type(e).__name__}: {e}")
                continue
            gen = Corrupting(tokens, args.corrupt_rate, rng.randrange(2**32), vocab, CorruptMode(args.corrupt_mode))
            tr = run(gen, pattern, cfg, vocab)
            d = tr.to_dict(with_events=args.events)
            d["id"] = rid
            d["roundtrip"] = tr.pair == pair if tr.ok else False
            if tr.error:
                kinds[tr.error[0].value] = kinds.get(tr.error[0].value, 0) + 1
            runs.append(d)
    report = {
        "pattern": pattern.value,
        "ratio": cfg.ratio,
        "corrupt_rate": args.corrupt_rate,
        "seed": args.seed,
        "records": len(runs),
        "ok": sum(r["ok"] for r in runs),
        "roundtrip": sum(r["roundtrip"] for r in runs),
        "error_kinds": dict(sorted(kinds.items())),
        "runs": runs,
    }
    with _open(args.report, "w") as fout:
        fout.write(json.dumps(report, indent=2) + "\n")
    return _report_errors(errors)


def cmd_bench(args, pattern, cfg, vocab) -> int:
    if pattern is None:
        raise argparse.ArgumentTypeError("bench needs --pattern")
    errors: list[str] = []
    with _open(args.corpus, "r") as fin:
        pairs = [p for _, p in _pairs(fin, errors)]
    if errors:
        return _report_errors(errors)
    try:
        summary = bench(pairs, pattern, cfg, vocab, args.reps, args.workers)
    except (SpeechmuxError, ValueError) as e:
        return _report_errors([f"bench: {e}"])
    with _open(args.out, "w") as fout:
        fout.write(json.dumps(summary.to_dict(), indent=2) + "\n")
    return 0


def _add_layout(p: argparse.ArgumentParser, required: bool = False) -> None:
    p.add_argument("--pattern", choices=[x.value for x in Pattern], required=required)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--ratio", help="R_TEXT:R_SPEECH, e.g. 5:10")
    g.add_argument("--k", type=int, help="speech tokens per parallel frame")
    p.add_argument("--no-speech-eos", action="store_true", help="speech channel carries no EOS token")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="speechmux", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, io=True):
        p.add_argument("--vocab", help="VocabSpec JSON file (default layout if omitted)")
        if io:
            p.add_argument("--in", dest="input", default="-")
        p.add_argument("--out", default="-")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("encode", help="ChannelPair JSONL -> mixed/frame sequence JSONL")
    common(p)
    _add_layout(p, required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="mixed/frame sequence JSONL -> ChannelPair JSONL")
    common(p)
    _add_layout(p)
    p.add_argument("--trace", help="write the demux event log (JSONL) here")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("analyze", help="length and padding statistics for a ChannelPair corpus")
    common(p)
    p.add_argument("--ratio", default="1:2")
    p.add_argument("--no-speech-eos", action="store_true")
    p.add_argument("--tps", type=float, default=25.0, help="speech tokens per second of audio")
    p.set_defaults(func=cmd_analyze, pattern=None, k=None)

    p = sub.add_parser("eval", help="SpokenQA S2T/S2S accuracy, ratio, and WER")
    common(p, io=False)
    p.add_argument("--pred", "--in", dest="pred", required=True)
    p.add_argument("--raw-substring", action="store_true", help="plain substring containment instead of word-aligned")
    p.add_argument("--csv", help="write per-record verdicts as CSV")
    p.add_argument("--verdicts", action="store_true", help="include per-record verdicts in the JSON")
    p.set_defaults(func=cmd_eval, pattern=None, ratio=None, k=None, no_speech_eos=False)

    p = sub.add_parser("curate", help="QA curation with ASR-WER filtering")
    common(p)
    p.add_argument("--wer-threshold", type=float, default=0.2)
    p.add_argument("--speakers", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mock", action="store_true", help="use the bundled deterministic clients")
    p.add_argument("--asr-del-rate", type=float, default=0.0)
    p.add_argument("--asr-sub-rate", type=float, default=0.0)
    p.set_defaults(func=cmd_curate, pattern=None, ratio=None, k=None, no_speech_eos=False)

    p = sub.add_parser("simulate", help="replay (optionally corrupted) streams through the demuxer")
    common(p, io=False)
    _add_layout(p, required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--corrupt-rate", type=float, default=0.0)
    p.add_argument("--corrupt-mode", choices=[m.value for m in CorruptMode], default="flip")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default="-")
    p.add_argument("--events", action="store_true", help="include full event logs in the report")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="streaming demux throughput")
    common(p, io=False)
    _add_layout(p, required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--reps", type=int, default=3)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "curate":
        if not args.mock:
            parser.error("curate: only the mock clients are bundled; pass --mock")
        if not 0.0 < args.wer_threshold <= 1.0:
            parser.error("--wer-threshold must be in (0, 1]")
        if args.speakers < 1:
            parser.error("--speakers must be positive")
        try:
            NoiseSpec(args.asr_del_rate, args.asr_sub_rate)
        except ValueError as e:
            parser.error(str(e))
    if args.command == "simulate" and not 0.0 <= args.corrupt_rate <= 1.0:
        parser.error("--corrupt-rate must be in [0, 1]")
    if getattr(args, "reps", 1) < 1 or args.workers < 1:
        parser.error("--reps and --workers must be positive")
    try:
        pattern, cfg = _layout(args)
        vocab = _vocab(args)
    except (argparse.ArgumentTypeError, SpeechmuxError) as e:
        parser.error(str(e))
    except OSError as e:
        parser.error(f"cannot read vocab: {e}")
    try:
        return args.func(args, pattern, cfg, vocab)
    except argparse.ArgumentTypeError as e:
        parser.error(str(e))
    except OSError as e:
        print(f"speechmux: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
