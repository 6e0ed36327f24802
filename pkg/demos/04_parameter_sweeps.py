# Sweeps over one parameter at a time, written as CSV for plotting
# elsewhere.  The same runs are available from the command line:
#
#    svdgp sweep --spec spec.json --out sweep.csv --residuals-out res.csv

import sys

from svdgp.analysis import SweepSpec, run_sweep, sweep_csv, sweep_residuals_csv

spec = SweepSpec(axis="probability", values=[0.0, 0.2, 0.5, 0.8, 1.0], n=8, m=3,
                 scenario_count=20, scenario_seed=5)
rows = run_sweep(spec)
sys.stdout.write(sweep_csv(rows))

# Endpoints collapse to one scenario and converge at once.
print([r.iterations for r in rows])

spec = SweepSpec(axis="scenario_count", values=[1, 5, 10, 20], n=8, m=3)
rows = run_sweep(spec)
sys.stdout.write(sweep_csv(rows, timing=False))

# residual traces, one line per (value, iteration)
print(sweep_residuals_csv(rows).splitlines()[:6])
