"""
Harper operator and the magnetic heat semigroup
================================================

Iterate the Harper operator with flux b/n and compare with the magnetic
semigroup evaluated through its Mehler kernel. The kernel is first checked
against a finite-difference reference.
"""

from trotterlab.continuum import validate_mehler_kernel
from trotterlab.ratelab import ExperimentConfig, run_harper

for b in (0.5, 1.0):
    print(f"Mehler kernel vs finite differences, b = {b}: {validate_mehler_kernel(b):.2e}")

report = run_harper(ExperimentConfig("harper", d=2, b=1.0, t=0.5))
print(f"\n{'n':>5} {'error':>12} {'sqrt(n) error':>14}")
for row in report.rows:
    print(f"{row.n:5d} {row.err.mid:12.4e} {row.scaled:14.4f}")
print(f"slope {report.slope:.3f}, max/min of sqrt(n) error {report.max_ratio:.2f}")

# zero flux gives back the plain walk
flat = run_harper(ExperimentConfig("harper", d=2, b=0.0, t=0.5, n_list=(16, 32, 64)))
print("b = 0 errors:", [f"{row.err.mid:.3e}" for row in flat.rows])
