"""
Wall time against graph size
============================

The recovery cost is dominated by sparse products, so time should grow
close to nnz, i.e. like n log n at fixed (alpha, beta).
"""

import math

from sbm_recover.harness import run_scaling

sizes = [2500, 5000, 10000, 20000, 40000]
report = run_scaling(sizes, alpha=10, beta=2, trials=5)

print("     n   median ms      nnz   ns per nnz")
for n, ns, nnz in report.rows:
    print(f"{n:6d}  {ns / 1e6:10.2f}  {nnz:7d}  {ns / nnz:10.1f}")

(n0, t0, _), (n1, t1, _) = report.rows[0], report.rows[-1]
print(f"time ratio {t1 / t0:.1f} for n ratio {n1 / n0:.0f} "
      f"(n log n ratio {n1 * math.log(n1) / (n0 * math.log(n0)):.1f})")
