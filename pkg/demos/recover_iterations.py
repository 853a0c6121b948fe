"""
Recovering training iterations from a GPU trace
===============================================

A synthetic trace stands in for a profiler export: one main stream runs a
few setup kernels and then 200 repeats of a 12-kernel training step, with
occasional extra statistics kernels. We mine the step pattern, match every
iteration and compare the result with what the generator planted.
"""

import tempfile
from pathlib import Path

import numpy as np

from itermine import MiningConfig, SynthConfig, analyze_file, generate_trace, verify_against_truth

workdir = Path(tempfile.mkdtemp())
cfg = SynthConfig(seed=3, iterations=200, insert_prob=0.25, max_inserts=2)
truth = generate_trace(cfg, workdir / "trace.csv", workdir / "truth.json")
print(f"trace with {truth.main_ops} main-stream operations written to {workdir}")

###############################################################################
# Mine and match
# --------------
#
# The iteration count is the only required input. ``k0`` is how many extra
# operations one iteration may contain and still be matched.

result = analyze_file(workdir / "trace.csv", [MiningConfig(cfg.iterations)], k0=cfg.max_inserts)
loop = result.loops[0]
print(f"pattern of {loop.pattern.length} ops seen {loop.pattern.count} times (eps={loop.pattern.epsilon_used})")
print(f"{len(loop.spans)} iterations matched")

intervals = np.array([m.interval_ns for m in loop.details[1:]])
print(f"interval: mean {intervals.mean():.0f} ns, p95 {np.percentile(intervals, 95):.0f} ns, max {intervals.max()} ns")
print(f"diagnosis: {loop.diagnosis.code}")

###############################################################################
# Check against the generator's sidecar

problems = verify_against_truth(result.report, loop.details, truth)
print("matches ground truth" if not problems else problems)
