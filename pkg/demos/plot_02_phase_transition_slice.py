"""
Success ratio along one slice of the (alpha, beta) plane
========================================================

Hold beta fixed and sweep alpha across the threshold curve
sqrt(alpha) - sqrt(beta) = sqrt(2).  Output is written as CSV for any
plotting tool.
"""

import math
import tempfile
from pathlib import Path

from sbm_recover.harness import ExperimentGrid, run_phase_transition

out = Path(tempfile.mkdtemp()) / "phase"
grid = ExperimentGrid(n=300, alpha_range=(3, 15, 1), beta_range=(2, 2, 1), trials=20,
                      methods=("two_stage", "sc"), output_path=str(out))
report = run_phase_transition(grid)

crossing = (math.sqrt(2) + math.sqrt(2)) ** 2
print(f"threshold at beta=2: alpha = {crossing:.2f}")
print("alpha  two_stage  sc")
for a in grid.alphas:
    print(f"{a:5.1f}  {report.success_ratio(a, 2, 'two_stage'):9.2f}  "
          f"{report.success_ratio(a, 2, 'sc'):4.2f}")

# records.csv has one row per trial, aggregate.csv one per cell
print("files:", sorted(p.name for p in out.iterdir()))
