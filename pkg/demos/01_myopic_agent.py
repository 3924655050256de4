"""
A myopic agent and the near-alternating program
===============================================

A ``delta = 0`` agent moves one unit towards today's intensity. Against a
program that always follows rest (d = 0) with double intensity (d = 2*mu),
and repeats double intensity only rarely, the agent ends up oscillating
between 2*mu - 1 and 2*mu: about twice what a constant program sustains.
"""

import numpy as np

from sluggish import (
    build_extended_chain,
    constant_policy,
    flow_identity_residual,
    mass_stats,
    myopic_agent,
    prop1_policy,
    simulate,
    total_variation,
)

mu, eps = 3, 0.0005

# Benchmark: constant intensity mu pins the mass at mu.
flat = constant_policy(mu)
print("constant program:", mass_stats(build_extended_chain(flat, myopic_agent(flat))).marginal_dict())

# The alternating program. beta is the chance H falls back to L.
policy = prop1_policy(mu, eps)
print("transitions (L, H):\n", policy.transitions)
print("intensities:", policy.intensity)

agent = myopic_agent(policy)
chain = build_extended_chain(policy, agent)
stats = mass_stats(chain)
print("long-run mass distribution:", stats.marginal_dict())
print("minimal long-run mass:", stats.min_mass, " average:", round(stats.average_mass, 4))

# Upward and downward crossings balance at stationarity.
print("flow balance residual:", flow_identity_residual(chain))

# A seeded run from m0 = 0 lands on the same distribution.
path = simulate(policy, agent, m0=0, T=200_000, seed=0)
print("first 12 masses:", path.mass[:12].tolist())
freq = path.pair_frequencies(policy.n_states, chain.n_masses)
print("TV distance to the exact distribution:", total_variation(freq, chain.stationary))
