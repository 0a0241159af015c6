"""How well do clusters and matches balance the covariates?

Max2SB is the largest standardized difference in a covariate's means over
all pairs of treatment groups; values under 0.2 are usually deemed adequate.
"""

from gpsabb import RunConfig, run_analysis
from gpsabb.simlab import SimDesign, generate

design = SimDesign.preset("desk", b=1.0)
data, _ = generate(design, seed=4, rep=0)

for method in ("abb", "matching", "ipw"):
    res = run_analysis(data, RunConfig(seed=4, method=method, reference=1, Q=3))
    for bal in res.balance:
        print(f"{method:>8} {bal.context:<24} MaxMax2SB={bal.maxmax2sb:.3f} "
              f"covariates above 0.2: {bal.n_above_threshold}/{data.P}")
