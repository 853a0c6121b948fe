from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from itermine.errors import MissingColumn, TooManyBadRows, TraceFormatError, UnreadableFile
from itermine.ingest import SIZE_UNITS, TIME_UNITS, convert_scaled, parse_trace
from itermine.model import OpKind

NVPROF_LIKE = """\
==12345== NVPROF is profiling process 12345, command: python train.py
==12345== Profiling result:
"Start","Duration","Size","Throughput","Device","Context","Stream","Name"
ms,us,KB,GB/s,,,,
312.4800ms,2.0160,4.0960KB,2.031,"GeForce GTX 1080 Ti (0)","1","7","[CUDA memcpy HtoD]"
312.5000,1.5,,,"GeForce GTX 1080 Ti (0)","1","13","void gemm_kernel<float, 128>(float const*, float*)"
312.4900,0.800,,,"GeForce GTX 1080 Ti (0)","1","7","[CUDA memset]"
"""


def test_units_and_quoted_names(write_csv):
    trace, report = parse_trace(write_csv(NVPROF_LIKE))
    assert report.rows_total == 3 and report.rows_parsed == 3 and report.rows_skipped == 0
    assert report.units == {"Start": "ms", "Duration": "us", "Size": "KB", "Throughput": "GB/s"}
    first, memset, kernel = trace.records
    assert first.start == 312_480_000
    assert first.duration == 2_016
    # KB is binary: 4.096 * 1024 = 4194.304
    assert first.size == 4_194
    assert first.throughput == Fraction(2_031_000_000)
    assert memset.start == 312_490_000 and memset.kind is OpKind.MEMSET
    # template arguments keep their embedded comma
    assert kernel.name == "void gemm_kernel<float, 128>(float const*, float*)"
    assert kernel.size is None and kernel.throughput is None
    assert kernel.kind is OpKind.KERNEL
    assert trace.warnings == []


def test_binary_kilobytes(write_csv):
    path = write_csv("Start,Duration,Size,Stream,Name\nus,us,KB,,\n0,1,4.0000,7,[CUDA memcpy HtoD]\n")
    (r,) = parse_trace(path)[0].records
    assert r.size == 4_096


def test_default_units_without_units_row(write_csv):
    path = write_csv(
        """
        Start,Duration,Stream,Name
        1.5,0.25,13,k
        """
    )
    trace, report = parse_trace(path)
    (r,) = trace.records
    assert (r.start, r.duration) == (1_500, 250)
    assert r.device == "unknown"
    assert report.units["Start"] == "us"


def test_half_up_rounding_of_sub_ns(write_csv):
    path = write_csv(
        """
        Start,Duration,Stream,Name
        0.0005,0.0004,13,k
        """
    )
    (r,) = parse_trace(path)[0].records
    assert (r.start, r.duration) == (1, 0)


def test_bad_cell_skipped_with_reason(write_csv):
    rows = "\n".join(f"{k}.0,1.0,13,k{k}" for k in range(9))
    path = write_csv("Start,Duration,Stream,Name\n" + rows + "\nabc,1.0,13,bad\n")
    trace, report = parse_trace(path)
    assert report.rows_skipped == 1
    assert report.rows_parsed + report.rows_skipped == report.rows_total == 10
    line, reason = report.skip_reasons[0]
    assert line == 11 and "Start" in reason
    assert len(trace) == 9
    assert trace.warnings[0].startswith("SkippedRows")


def test_too_many_bad_rows(write_csv):
    path = write_csv(
        """
        Start,Duration,Stream,Name
        1,1,13,a
        x,1,13,b
        """
    )
    with pytest.raises(TooManyBadRows):
        parse_trace(path)


@pytest.mark.parametrize("missing", ["Start", "Duration", "Stream", "Name"])
def test_missing_required_column(write_csv, missing):
    cols = [c for c in ("Start", "Duration", "Stream", "Name") if c != missing]
    path = write_csv(",".join(cols) + "\n" + ",".join("1" for _ in cols) + "\n")
    with pytest.raises(MissingColumn) as info:
        parse_trace(path)
    assert info.value.stage == "ingest"
    assert missing in str(info.value)


def test_headers_are_case_sensitive(write_csv):
    with pytest.raises(MissingColumn):
        parse_trace(write_csv("start,Duration,Stream,Name\n1,1,1,k\n"))


def test_empty_and_missing_files(write_csv, tmp_path):
    with pytest.raises(TraceFormatError):
        parse_trace(write_csv(""))
    with pytest.raises(UnreadableFile):
        parse_trace(tmp_path / "nope.csv")


def test_crlf_matches_lf(write_csv):
    a = parse_trace(write_csv(NVPROF_LIKE, "lf.csv"))
    b = parse_trace(write_csv(NVPROF_LIKE, "crlf.csv", newline="\r\n"))
    assert a[0].records == b[0].records


def test_sorted_by_start_then_row(write_csv):
    path = write_csv(
        """
        Start,Duration,Stream,Name
        5,1,13,c
        2,1,13,a
        5,1,13,d
        2,1,14,b
        """
    )
    trace, _ = parse_trace(path)
    assert [r.name for r in trace.records] == ["a", "b", "c", "d"]


def test_negative_start_moves_origin(write_csv):
    path = write_csv("Start,Duration,Stream,Name\n-2,1,13,a\n3,1,13,b\n")
    trace, _ = parse_trace(path)
    assert trace.origin == -2_000
    assert [r.start for r in trace.records] == [0, 5_000]
    assert any(w.startswith("NegativeStart") for w in trace.warnings)


def test_inline_suffix_overrides_column_unit(write_csv):
    path = write_csv("Start,Duration,Size,Stream,Name\nms,us,B,,\n1.5us,2ns,1.0MB,13,k\n")
    (r,) = parse_trace(path)[0].records
    assert (r.start, r.duration, r.size) == (1_500, 2, 1_048_576)


def test_parse_is_deterministic(write_csv):
    path = write_csv(NVPROF_LIKE)
    assert parse_trace(path) == parse_trace(path)


_decimals = st.decimals(min_value=0, max_value=10**6, places=4, allow_nan=False, allow_infinity=False)


@settings(max_examples=300, deadline=None)
@given(value=_decimals, unit=st.sampled_from(sorted(TIME_UNITS)))
def test_time_conversion_is_exact(value, unit):
    # ns factors are integers, so v * factor is exact once v has <= 4 decimals and factor >= 10^4
    expected = (Decimal(value) * TIME_UNITS[unit]).to_integral_value(rounding="ROUND_HALF_UP")
    assert convert_scaled(str(value), TIME_UNITS[unit]) == int(expected)
    if TIME_UNITS[unit] >= 10**4:
        assert Decimal(value) * TIME_UNITS[unit] == expected


@settings(max_examples=300, deadline=None)
@given(value=_decimals, unit=st.sampled_from(sorted(SIZE_UNITS)))
def test_size_conversion(value, unit):
    got = convert_scaled(f"{value}{unit}", 1, "Size", SIZE_UNITS)
    exact = Fraction(value) * SIZE_UNITS[unit]
    assert abs(got - exact) <= Fraction(1, 2)
