"""
The explicit error bound over a (t, n) grid
===========================================

Tabulate the four-term bound and its simplified form for the Gaussian test
function on Z, with lambda = 1.
"""

from trotterlab.ratelab import ExperimentConfig, format_csv, run_bound_table

table = run_bound_table(ExperimentConfig("bound-table", d=1, n_list=(16, 64, 256, 1024),
                                         t_list=(0.25, 1.0, 4.0)))
print(f"{'t':>5} {'n':>5} {'general':>10} {'simplified':>11}")
for row in table.rows:
    print(f"{row['t']:5.2f} {row['n']:5d} {row['general'].total:10.5f} {row['simplified']:11.5f}")
print("general <= simplified everywhere:", table.passed)

# the same table as CSV, as written by `ratelab bound-table`
print(format_csv(table).splitlines()[0])
