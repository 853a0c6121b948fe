import random
from collections import Counter, defaultdict

import pytest

from itermine.errors import EmptyMainStream, EmptyTrace, NoMainStream
from itermine.model import NormalizedTrace, OpKind
from itermine.streams import (
    StreamClass,
    StreamSummary,
    build_token_sequence,
    check_main_stream_order,
    classify_stream,
    classify_streams,
    filter_majority_device,
    main_stream_tokens,
    select_main_stream,
    summarize_streams,
)

from conftest import rec, trace_of

K = OpKind


def summary(stream, **counts):
    kinds = {k.name: k for k in OpKind}
    return StreamSummary(stream, {kinds[name]: n for name, n in counts.items()}, 0, 1)


def test_singleton_census():
    (s,) = summarize_streams(trace_of(rec(0, 5, 13, "void k()")))
    assert s.stream == 13 and dict(s.counts) == {K.KERNEL: 1}
    assert (s.first_start, s.last_end) == (0, 5)


def test_assist_stream_shape():
    trace = trace_of(rec(0, 3, 7, "[CUDA memset]", 64), rec(3, 4, 7, "[CUDA memcpy HtoD]", 64))
    (s,) = summarize_streams(trace)
    assert dict(s.counts) == {K.MEMSET: 1, K.MEMCPY_HTOD: 1}
    assert classify_stream(s.counts) is StreamClass.ASSIST


def test_empty_trace():
    with pytest.raises(EmptyTrace):
        summarize_streams(NormalizedTrace([]))


def test_census_matches_brute_force():
    rng = random.Random(3)
    names = ["void a()", "void b()", "[CUDA memcpy HtoD]", "[CUDA memcpy DtoH]", "[CUDA memset]"]
    records = [rec(rng.randrange(10_000), rng.randrange(50), rng.choice([1, 7, 13, 14]), rng.choice(names))
               for _ in range(2_000)]
    trace = trace_of(*records)
    tally = defaultdict(Counter)
    for r in trace.records:
        tally[r.stream][r.kind] += 1
    got = {s.stream: dict(s.counts) for s in summarize_streams(trace)}
    assert got == {k: dict(v) for k, v in tally.items()}


@pytest.mark.parametrize(
    "counts, cls",
    [
        ({"KERNEL": 120, "MEMCPY_DTOD": 3}, StreamClass.MAIN),
        ({"MEMCPY_HTOD": 500}, StreamClass.COPY_HTOD),
        ({"MEMCPY_DTOH": 2}, StreamClass.COPY_DTOH),
        ({"MEMCPY_HTOD": 1, "MEMCPY_DTOH": 1}, StreamClass.COPY_MIXED),
        ({"MEMCPY_DTOD": 4}, StreamClass.COPY_MIXED),
        ({"MEMSET": 1, "MEMCPY_HTOD": 1}, StreamClass.ASSIST),
        ({"MEMSET": 3}, StreamClass.ASSIST),
        ({"OTHER": 3}, StreamClass.ASSIST),
    ],
)
def test_classify(counts, cls):
    assert classify_stream(summary(0, **counts).counts) is cls


def test_select_main_paper_layout():
    sums = [summary(13, KERNEL=100), summary(14, MEMCPY_HTOD=9), summary(15, MEMCPY_DTOH=9),
            summary(7, MEMSET=1, MEMCPY_HTOD=1)]
    classes = classify_streams(sums)
    assert classes == {13: StreamClass.MAIN, 14: StreamClass.COPY_HTOD, 15: StreamClass.COPY_DTOH,
                       7: StreamClass.ASSIST}
    assert select_main_stream(classes, sums) == (13, [])


def test_select_main_most_kernels_with_warning():
    sums = [summary(5, KERNEL=10), summary(9, KERNEL=40)]
    main, warnings = select_main_stream(classify_streams(sums), sums)
    assert main == 9
    assert len(warnings) == 1 and warnings[0].startswith("MultipleMainStreams") and "5" in warnings[0]


def test_select_main_tie_goes_to_lowest_id():
    sums = [summary(9, KERNEL=10), summary(5, KERNEL=10)]
    assert select_main_stream(classify_streams(sums), sums)[0] == 5


def test_no_main_stream():
    sums = [summary(2, MEMCPY_HTOD=3)]
    with pytest.raises(NoMainStream):
        select_main_stream(classify_streams(sums), sums)


def test_tokens_first_appearance():
    trace = trace_of(rec(0, 1, 13, "A"), rec(1, 1, 14, "[CUDA memcpy HtoD]"), rec(2, 1, 13, "B"), rec(3, 1, 13, "A"))
    seq = build_token_sequence(trace, 13)
    assert seq.tokens == [0, 1, 0]
    assert seq.vocab == ["A", "B"]
    assert seq.record_index == [0, 2, 3]
    assert seq.terminator == 2


def test_single_token_and_empty_main():
    trace = trace_of(rec(0, 1, 13, "X"))
    assert build_token_sequence(trace, 13).tokens == [0]
    with pytest.raises(EmptyMainStream):
        build_token_sequence(trace, 99)


def test_token_replay_at_scale():
    rng = random.Random(11)
    records = [rec(k * 10, 5, 13 if rng.random() < 0.9 else 14, f"op{rng.randrange(300)}")
               for k in range(100_000)]
    trace = trace_of(*records)
    seq = build_token_sequence(trace, 13)
    # independent replay: first-seen order from a plain scan
    main_names = [r.name for r in trace.records if r.stream == 13]
    order = list(dict.fromkeys(main_names))
    assert seq.vocab == order
    lookup = {n: i for i, n in enumerate(order)}
    assert seq.tokens == [lookup[n] for n in main_names]
    # alignment of tokens with the records they came from
    assert all(trace.records[i].name == seq.vocab[t] for t, i in zip(seq.tokens, seq.record_index))
    starts = [trace.records[i].start for i in seq.record_index]
    assert starts == sorted(starts)


def test_overlap_warning_and_device_filter():
    trace = trace_of(rec(0, 10, 13, "A"), rec(5, 10, 13, "B"), rec(20, 1, 13, "C", device="dev1"))
    assert check_main_stream_order(trace, 13)[0].startswith("OverlappingMainStreamOps")
    kept, warnings = filter_majority_device(trace)
    assert [r.name for r in kept.records] == ["A", "B"]
    assert warnings[0].startswith("MultipleDevices")


def test_main_stream_override():
    trace = trace_of(rec(0, 1, 13, "A"), rec(1, 1, 14, "[CUDA memcpy HtoD]"))
    seq, _, _, _ = main_stream_tokens(trace, 14)
    assert seq.stream == 14
    with pytest.raises(NoMainStream):
        main_stream_tokens(trace, 99)
