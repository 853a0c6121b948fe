"""
Telling copy stalls from host stalls
====================================

Three synthetic runs of the same model: a healthy one, one whose training
loop keeps growing the graph (long host-side gaps between iterations), and
one that copies twelve times more input data per step.
"""

import tempfile
from pathlib import Path

from itermine import MiningConfig, SynthConfig, analyze_file, generate_trace

workdir = Path(tempfile.mkdtemp())

runs = {
    "healthy": SynthConfig(seed=1),
    "graph growth": SynthConfig(seed=1, pathology="graph_growth", pathology_factor=50),
    "oversize copy": SynthConfig(seed=1, pathology="oversize_copy", pathology_factor=12, interval_jitter_ns=0),
}

for label, cfg in runs.items():
    trace = workdir / f"{label.replace(' ', '_')}.csv"
    generate_trace(cfg, trace, trace.with_suffix(".json"))
    loop = analyze_file(trace, [MiningConfig(cfg.iterations)]).loops[0]
    s = loop.summary
    print(f"{label:14s} interval {s.avg_interval_ns:>7d} ns  op gap {s.avg_operation_ns:>5d} ns  "
          f"overlap {s.avg_overlap:.3f}  ->  {loop.diagnosis.code}")

###############################################################################
# The copy-bound case wins over the host-bound one when both hold: a large
# share of the gap spent copying input explains the gap itself.
