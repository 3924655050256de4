"""
A patient agent and the calibrated rest streaks
===============================================

A forward-looking agent can be kept at mu/c - 1 even through long rest
streaks, provided high intensity arrives just often enough (stationary
probability slightly above c) that dropping mass is not worth it.
"""

from sluggish import (
    ModelParams,
    agent_longrun_cost,
    bellman_residual,
    build_extended_chain,
    mass_stats,
    prop2_policy,
    solve_agent_mdp,
)

params = ModelParams(mu=2, c=0.25, delta=0.999, epsilon=0.01)
policy = prop2_policy(params.mu, params.c, margin=0.001, epsilon=params.epsilon)
print("transitions (L, H):\n", policy.transitions.round(6))

agent = solve_agent_mdp(policy, params)
print("Bellman residual:", bellman_residual(policy, agent, params))
H, L = policy.state("H"), policy.state("L")
for m_prev in (6, 7, 8):
    print(f"m_prev={m_prev}:  move on H {agent.move[H, m_prev]:+d}, move on L {agent.move[L, m_prev]:+d}")

stats = mass_stats(build_extended_chain(policy, agent))
print("long-run masses:", stats.marginal_dict(), "average", stats.average_mass)
print("agent's long-run cost:", agent_longrun_cost(policy, agent, params))

# Shrinking the margin pushes the average towards mu/c - 1 + c = 7.25.
# A thinner margin needs a more patient agent to stay incentive-compatible.
for margin in (1e-3, 1e-4, 1e-5):
    p = ModelParams(2, 0.25, delta=1 - margin)
    pol = prop2_policy(2, 0.25, margin)
    s = mass_stats(build_extended_chain(pol, solve_agent_mdp(pol, p)))
    print(f"margin {margin:g}: min mass {s.min_mass}, average {s.average_mass:.6f}")

# Too thin a margin for delta = 0.999: the agent lets mass slide in rest streaks.
pol = prop2_policy(2, 0.25, 1e-5)
s = mass_stats(build_extended_chain(pol, solve_agent_mdp(pol, params)))
print("margin 1e-5 at delta 0.999:", s.marginal_dict())

# With c >= 1/2 the roles flip: rest is always followed by high intensity.
p = ModelParams(2, 0.5)
pol = prop2_policy(2, 0.5, 0.001)
print("c = 0.5:", pol.transitions.round(6).tolist(), mass_stats(build_extended_chain(pol, solve_agent_mdp(pol, p))).marginal_dict())
