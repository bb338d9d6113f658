"""Error decay of the running average: the SLLN rate at work.

Replicated runs of the 4-state setup, measuring E|S_n(f) - pi_2(f)| on a
doubling round grid. The log-log slope should sit near -1/2, the Monte
Carlo rate the theory promises for bounded test functions.

Reduced scale here (40 replicates, 4096 rounds) so the demo runs in a few
seconds; the acceptance suite runs the full 100 x 16384 version.
"""

from eesampler import four_state_config, slln_rate_study

cfg = four_state_config(replicates=40, schedule={"offsets": [50], "total_rounds": 4096})
report = slln_rate_study(cfg, min_replicates=40)

print(f"replicates: {report.replicates}, burn-in N_1 = {report.burn_in}")
for f in report.functions:
    print(f"\ntest function {f.name!r} (target {f.target:.4f})")
    print("      n    E|err|      E[err^2]^1/2   stderr")
    for i, n in enumerate(report.n_grid):
        print(f"  {n:5d}    {f.moment1[i]:.5f}    {f.moment2[i]:.5f}       "
              f"{f.stderr[i]:.5f}")
    print(f"  fitted log-log slope: {f.slope:+.3f} +- {f.slope_stderr:.3f} "
          f"(pass band -0.65 .. -0.35)")
print(f"\nreport passes: {report.passed}")
