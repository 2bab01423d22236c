"""
How many exemplars should Replay keep?
======================================

Runs the desk config once per replay ratio through the harness and reads
back ``sweep.csv``. AP_normalized divides each AP by the best one, so 1.0
marks the ratio with the best plasticity.
"""

import sys
import tempfile
from pathlib import Path

import pandas as pd
import yaml

from fedcontinual import bundled_config
from fedcontinual.harness import SweepSpec, run_sweep

raw = yaml.safe_load(bundled_config("desk").read_text())
raw["methods"] = ["Replay"]
raw["seeds"] = [1]  # one trial keeps this under a minute

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="sweep-"))
status = run_sweep(SweepSpec("replay_ratio", [0.05, 0.15, 0.5, 1.0], raw), out)
print(f"exit status {status}, results in {out}")

sweep = pd.read_csv(out / "sweep.csv")
print(sweep[["value", "AF", "AP", "AP_normalized", "AvgPerf"]].to_string(index=False))

# each value also has a full results tree with its own summary
print((out / "replay_ratio=0.15" / "summary.txt").read_text())
