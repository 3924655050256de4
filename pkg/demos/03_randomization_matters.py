"""
Why the program must be random
==============================

An 11-period cycle of four hard sessions and seven rest days has the same
intensity frequencies as the stochastic program, but a patient agent who
can see it coming detrains during the rest block and rebuilds in time.
"""

from sluggish import (
    ModelParams,
    TwoStateSpec,
    build_extended_chain,
    cyclic_best_reply,
    mass_stats,
    solve_agent_mdp,
)

c = 4 / 11 - 0.001
params = ModelParams(mu=4, c=c, delta=0.999)
cycle = [11, 11, 11, 11, 0, 0, 0, 0, 0, 0, 0]

plan = cyclic_best_reply(cycle, params)
print("intensity:", cycle)
print("mass     :", list(plan.orbit))
hold = c * (4 * 11 + 7 * 10)
print(f"cost per cycle: {plan.cycle_cost:.4f}  vs holding 11/10: {hold:.4f}  (saving {hold - plan.cycle_cost:.4f})")

# The random program with P(d = 11) = 4/11 keeps the agent at 10 or above.
spec = TwoStateSpec(d_low=0, d_high=11, alpha=4 / 7, beta=1.0)
policy = spec.to_policy()
stats = mass_stats(build_extended_chain(policy, solve_agent_mdp(policy, params)))
print("random program:", stats.marginal_dict())
