# One mission end to end: random instance, sampled failure scenarios,
# Progressive Hedging, then a look at what the vehicle flies in a couple
# of scenarios.

from svdgp import FidelityModel, GenConfig, PhConfig, generate, sample, solve
from svdgp.detour import DetourTable, beta, second_stage_route

inst = generate(GenConfig(n=10, m=4, radius=5.0, seed=3))
print(inst, "tour vertices:", inst.tour_size, "all vertices:", inst.num_vertices)

# Each target fails independently with probability 0.5.
scenarios = sample(FidelityModel.uniform(inst.n, 0.5), 30, seed=1)
table = DetourTable.build(inst)

rep = solve(inst, scenarios, PhConfig(), table)
print(rep.status, "after", rep.iterations, "iterations, rho =", round(rep.rho, 4))
print("tour:", rep.tour)
print(f"objective {rep.objective:.3f} = tour {rep.first_stage_cost:.3f} "
      f"+ expected recourse {rep.expected_recourse:.3f}")

# the residual falls to zero once every scenario agrees on the tour
print("residuals:", [round(r, 3) for r in rep.residual_trace])

for s, _ in list(scenarios)[:2]:
    rec = beta(inst, table, rep.tour, s)
    print("\nfailed targets", s.failed, "extra travel", round(rec.beta, 3))
    for leg in rec.legs:
        print(f"  {leg.target} -> {leg.order} -> {leg.successor}  +{leg.delta:.3f}")
    print("  route", second_stage_route(inst, table, rep.tour, s))
