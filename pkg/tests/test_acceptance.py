"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line (collected into the pytest
terminal summary and printed directly when this file is run as a script)
and then asserts on the same condition.
"""

from __future__ import annotations

import dataclasses
import random
import re
import subprocess
import sys
from pathlib import Path

import pytest

from itermine.analysis import analyze_file
from itermine.matching import MatchConfig, approx_match
from itermine.mining import MiningConfig
from itermine.suffixtree import ROOT, SuffixTree
from itermine.synth import SynthConfig, generate_trace, verify_against_truth

import oracles

RESULTS: list[str] = []


def record(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    RESULTS.append(line)
    print(line)


def conserved(details) -> bool:
    span = details[-1].t_end - details[0].t_start
    busy = sum(m.t_end - m.t_start for m in details)
    idle = sum(m.interval_ns for m in details[1:])
    return span == busy + idle


def test_banana_tree():
    alphabet = sorted(set("banana"))
    tree = SuffixTree([alphabet.index(c) for c in "banana"])
    ana = tree.count([alphabet.index(c) for c in "ana"])
    ok = tree.n_leaves == 7 and tree.n_internal == 4 and ana == 2
    record("suffix tree of 'banana'", ok, f"{tree.n_leaves} leaves, {tree.n_internal} internal nodes, count('ana')={ana}")
    assert ok


def test_count_oracle():
    rng = random.Random(20240501)
    mismatches = checked = 0
    for _ in range(500):
        sigma = rng.randint(1, 8)
        s = [rng.randrange(sigma) for _ in range(rng.randint(1, 200))]
        tree = SuffixTree(s)
        for v in tree.internal_nodes():
            if v == ROOT:
                continue
            checked += 1
            if tree.leaf_count[v] != oracles.occurrences(s, tree.path_label(v)):
                mismatches += 1
    record("leaf counts vs brute force", mismatches == 0, f"500 strings, {checked} internal nodes, {mismatches} mismatches")
    assert mismatches == 0


def test_matcher_oracle():
    rng = random.Random(77)
    mismatches = 0
    for _ in range(1000):
        sigma = rng.randint(1, 6)
        p = [rng.randrange(sigma) for _ in range(rng.randint(1, 10))]
        s: list[int] = []
        target = rng.randint(1, 200)
        while len(s) < target:
            if rng.random() < 0.5:
                for t in p:
                    s.append(t)
                    if rng.random() < 0.15:
                        s.append(rng.randrange(sigma))
            else:
                s.append(rng.randrange(sigma))
        s = s[:target]
        k0 = rng.randint(0, 3)
        got = [tuple(x) for x in approx_match(s, p, MatchConfig(k0))]
        if got != oracles.greedy_spans(s, p, k0):
            mismatches += 1
    record("matcher vs brute-force greedy scanner", mismatches == 0, f"1000 instances, {mismatches} mismatches")
    assert mismatches == 0


def _recovery_configs(n: int):
    rng = random.Random(4242)
    for k in range(n):
        L = rng.randint(5, 50)
        m = rng.randint(1, 3)
        yield SynthConfig(
            seed=k,
            init_ops=rng.randint(1, 20),
            pattern_len=L,
            iterations=rng.randint(50, 1000),
            vocab_size=L + rng.randint(1, 30),
            insert_prob=round(rng.uniform(0.0, 0.3), 3),
            max_inserts=m,
        )


def test_end_to_end_recovery(tmp_path):
    failures = []
    not_conserved = 0
    for cfg in _recovery_configs(100):
        trace, truth_path = tmp_path / "t.csv", tmp_path / "t.json"
        truth = generate_trace(cfg, trace, truth_path)
        result = analyze_file(trace, [MiningConfig(cfg.iterations)], k0=cfg.max_inserts)
        details = result.loops[0].details
        problems = [v for v in verify_against_truth(result.report, details, truth) if v.kind != "DiagnosisMismatch"]
        if problems:
            failures.append((cfg.seed, problems[0]))
        if not conserved(details):
            not_conserved += 1
    ok = not failures
    detail = f"{100 - len(failures)}/100 configs recovered pattern, spans and intervals (+-1 ns)"
    if failures:
        detail += f"; first failure seed {failures[0][0]}: {failures[0][1]}"
    record("end-to-end recovery", ok, detail)
    assert ok
    assert not_conserved == 0


def test_conservation(tmp_path):
    configs = [cfg for cfg in _recovery_configs(20)] + [
        SynthConfig(seed=1, pathology="graph_growth", pathology_factor=50),
        SynthConfig(seed=2, pathology="oversize_copy", pathology_factor=12),
        SynthConfig(seed=3, insert_prob=0.3, max_inserts=2, insert_mode="mixed"),
    ]
    broken = []
    for cfg in configs:
        generate_trace(cfg, tmp_path / "t.csv", tmp_path / "t.json")
        result = analyze_file(tmp_path / "t.csv", [MiningConfig(cfg.iterations, max(1, cfg.iterations // 2))],
                              k0=cfg.max_inserts)
        if not conserved(result.loops[0].details):
            broken.append(cfg.seed)
    ok = not broken
    record("conservation identity", ok, f"{len(configs) - len(broken)}/{len(configs)} traces: span = durations + intervals exactly")
    assert ok


def test_diagnosis_reproduction(tmp_path):
    cases = {
        "graph growth": (SynthConfig(seed=11, pathology="graph_growth", pathology_factor=50), "CPU_BOUND"),
        "oversize copy": (SynthConfig(seed=12, pathology="oversize_copy", pathology_factor=12, interval_jitter_ns=0),
                          "COPY_BOUND"),
        "clean": (SynthConfig(seed=13), "NONE"),
    }
    got = {}
    overlap = None
    for label, (cfg, _) in cases.items():
        generate_trace(cfg, tmp_path / "t.csv", tmp_path / "t.json")
        loop = analyze_file(tmp_path / "t.csv", [MiningConfig(cfg.iterations)]).loops[0]
        got[label] = loop.diagnosis.code
        if label == "oversize copy":
            overlap = loop.summary.avg_overlap
    hits = sum(got[label] == want for label, (_, want) in cases.items())
    ok = hits == 3 and overlap == pytest.approx(0.12, abs=1e-6)
    record("diagnosis reproduction", ok,
           f"{hits}/3 ({', '.join(f'{k}={v}' for k, v in got.items())}; copy overlap {overlap})")
    assert ok


RSS_PROBE = (
    "import resource, sys\n"
    "from itermine.cli import main\n"
    "rc = main(sys.argv[1:])\n"
    "print('maxrss_kb', resource.getrusage(resource.RUSAGE_SELF).ru_maxrss, file=sys.stderr)\n"
    "sys.exit(rc)\n"
)


def _run_analyze(trace: Path, out: Path, iterations: int, *extra: str):
    import time

    cmd = [sys.executable, "-c", RSS_PROBE, "-v", "analyze", "--trace", str(trace), "--iterations", str(iterations),
           "--out-summary", str(out / "summary.json"), "--out-details", str(out / "details.csv"), *extra]
    t0 = time.perf_counter()
    proc = subprocess.run(cmd, capture_output=True, text=True)
    return proc, time.perf_counter() - t0


@pytest.mark.slow
def test_scale(tmp_path):
    cfg = SynthConfig(seed=5, init_ops=8, pattern_len=50, iterations=20_000, vocab_size=64,
                      insert_prob=0.1, max_inserts=2)
    truth = generate_trace(cfg, tmp_path / "big.csv", tmp_path / "big.json")
    proc, elapsed = _run_analyze(tmp_path / "big.csv", tmp_path, cfg.iterations, "--k0", "2")
    assert proc.returncode == 0, proc.stderr
    rss_mb = int(re.search(r"maxrss_kb (\d+)", proc.stderr).group(1)) / 1024
    nodes, tokens = map(int, re.search(r"suffix tree: (\d+) nodes \(\d+ leaves\) over (\d+) tokens", proc.stderr).groups())
    ok = truth.main_ops >= 10**6 and elapsed < 60 and rss_mb < 2048 and nodes <= 2 * (tokens + 1)
    record("scale", ok, f"{tokens} main-stream ops analyzed in {elapsed:.1f} s, peak RSS {rss_mb:.0f} MB, "
           f"{nodes} tree nodes (bound {2 * (tokens + 1)})")
    assert ok


def test_determinism(tmp_path):
    cfg = SynthConfig(seed=21, iterations=300, insert_prob=0.3, max_inserts=2)
    generate_trace(cfg, tmp_path / "t.csv", tmp_path / "t.json")
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        out.mkdir()
        proc, _ = _run_analyze(tmp_path / "t.csv", out, cfg.iterations, "--k0", "2")
        assert proc.returncode == 0, proc.stderr
        outputs.append(((out / "summary.json").read_bytes(), (out / "details.csv").read_bytes()))
    ok = outputs[0] == outputs[1]
    record("determinism", ok, "two analyze runs produced byte-identical summary and details files" if ok
           else "outputs differ between runs")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
