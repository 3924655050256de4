"""The agent's best reply.

The agent observes the trainer's state ``s_t``, then picks a mass
``m_t`` within one unit of ``m_{t-1}`` and pays ``c*m_t + max(0, d - m_t)``.
Against a Markov trainer this is a discounted MDP on ``(s_t, m_{t-1})``;
:func:`solve_agent_mdp` solves it exactly by policy iteration, with value
iteration available as an independent route.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import InvalidCap, ModelParams, MultipleRecurrentClasses, TrainerPolicy

__all__ = [
    "AgentPolicy",
    "PeriodicPlan",
    "myopic_best_reply",
    "myopic_agent",
    "stage_costs",
    "solve_agent_mdp",
    "bellman_residual",
    "cyclic_best_reply",
    "agent_longrun_cost",
]

# Preference order among exactly optimal increments.
TIE_ORDER = (0, -1, 1)


@dataclass(frozen=True, eq=False)
class AgentPolicy:
    """Stationary policy on extended states ``(s, m_prev)``.

    ``move[s, m_prev]`` is the increment in {-1, 0, +1} chosen when the
    trainer is in state ``s`` and last period's mass was ``m_prev``.
    ``values`` holds the discounted cost-to-go when the policy came out of
    the MDP solver.
    """

    move: np.ndarray
    values: np.ndarray | None = None
    delta: float | None = None

    def __post_init__(self):
        move = np.asarray(self.move, dtype=np.int8)
        if move.ndim != 2:
            raise ValueError("move table must be 2-d (states x masses)")
        if np.any(np.abs(move) > 1):
            raise ValueError("increments must lie in {-1, 0, +1}")
        nxt = np.arange(move.shape[1])[None, :] + move
        if np.any(nxt < 0) or np.any(nxt >= move.shape[1]):
            raise ValueError("move table leaves the mass range [0, M_max]")
        move.setflags(write=False)
        object.__setattr__(self, "move", move)

    @property
    def M_max(self) -> int:
        return self.move.shape[1] - 1

    def next_mass(self, s: int, m_prev: int) -> int:
        # above the cap the agent is walked down until it re-enters the table
        if m_prev > self.M_max:
            return m_prev - 1
        return m_prev + int(self.move[s, m_prev])

    def __eq__(self, other):
        if not isinstance(other, AgentPolicy):
            return NotImplemented
        return np.array_equal(self.move, other.move)


@dataclass(frozen=True, eq=False)
class PeriodicPlan:
    """Best reply against a deterministic intensity cycle.

    ``orbit`` lists the recurrent masses ``m_t`` phase by phase, starting at
    phase 0; its length is a multiple of ``cycle_length``.
    """

    cycle: tuple[int, ...]
    move: np.ndarray
    orbit: tuple[int, ...]
    average_cost: float
    values: np.ndarray | None = None

    @property
    def cycle_length(self) -> int:
        return len(self.cycle)

    @property
    def cycle_cost(self) -> float:
        """Long-run cost per pass through the cycle."""
        return self.average_cost * self.cycle_length

    @property
    def min_mass(self) -> int:
        return min(self.orbit)

    @property
    def max_mass(self) -> int:
        return max(self.orbit)


def myopic_best_reply(d: int, m_prev: int) -> int:
    """Mass chosen by a ``delta = 0`` agent: one step towards ``d``."""
    if d > m_prev:
        return m_prev + 1
    if d < m_prev and m_prev > 0:
        return m_prev - 1
    return m_prev


def _check_cap(policy: TrainerPolicy, M_max: int | None) -> int:
    if M_max is None:
        return policy.max_intensity
    if M_max < policy.max_intensity:
        raise InvalidCap(f"mass cap {M_max} is below the largest intensity {policy.max_intensity}")
    return int(M_max)


def myopic_agent(policy: TrainerPolicy, M_max: int | None = None) -> AgentPolicy:
    M_max = _check_cap(policy, M_max)
    masses = np.arange(M_max + 1)
    move = np.sign(policy.intensity[:, None] - masses[None, :])
    return AgentPolicy(move=move, delta=0.0)


def stage_costs(intensity, c: float, M_max: int) -> np.ndarray:
    """``g[s, m] = c*m + max(0, d(s) - m)`` for ``m`` in ``0..M_max``."""
    masses = np.arange(M_max + 1)
    d = np.asarray(intensity)[:, None]
    return c * masses[None, :] + np.maximum(0, d - masses[None, :])


def _lookahead(P, g, V, delta):
    # W[s, m]: cost of landing on mass m in state s, then continuing optimally
    return g + delta * (P @ V)


def _greedy(W, tol):
    """Tie-broken argmin over feasible increments for every ``(s, m_prev)``."""
    n, size = W.shape
    inf = np.inf
    q = {}
    q[0] = W
    q[-1] = np.concatenate([np.full((n, 1), inf), W[:, :-1]], axis=1)
    q[1] = np.concatenate([W[:, 1:], np.full((n, 1), inf)], axis=1)
    best = np.minimum(np.minimum(q[0], q[-1]), q[1])
    move = np.zeros((n, size), dtype=np.int8)
    chosen = np.zeros((n, size), dtype=bool)
    for a in TIE_ORDER:
        pick = ~chosen & (q[a] <= best + tol)
        move[pick] = a
        chosen |= pick
    return move, best


def _tie_tol(W) -> float:
    return 1e-9 * (1.0 + float(np.max(np.abs(W))))


def _evaluate(P, g, move, delta):
    """Discounted cost-to-go of a fixed move table, by one linear solve."""
    n, size = g.shape
    N = n * size
    nxt = np.arange(size)[None, :] + move
    rows = np.arange(N)
    s_of_row = rows // size
    cost = g[np.arange(n)[:, None], nxt].ravel()
    A = np.eye(N)
    cols = np.arange(n)[None, :] * size + nxt.ravel()[:, None]
    A[rows[:, None], cols] -= delta * P[s_of_row, :]
    return np.linalg.solve(A, cost).reshape(n, size)


def _q_current(W, move):
    n, size = W.shape
    return W[np.arange(n)[:, None], np.arange(size)[None, :] + move]


def _policy_iteration(P, g, delta, max_iter=500):
    move, _ = _greedy(g, 0.0)  # myopic start
    for _ in range(max_iter):
        V = _evaluate(P, g, move, delta)
        W = _lookahead(P, g, V, delta)
        tol = _tie_tol(W)
        new, best = _greedy(W, tol)
        # switch only on strict improvement so ties cannot make PI cycle
        keep = _q_current(W, move) <= best + tol
        if keep.all():
            # any greedy policy for the optimal values is optimal; apply the tie rule
            if not np.array_equal(new, move):
                V = _evaluate(P, g, new, delta)
            return new, V
        move = np.where(keep, move, new).astype(np.int8)
    raise RuntimeError("policy iteration did not converge")


def _value_iteration(P, g, delta, tol=1e-10, max_iter=1_000_000):
    """Relative value iteration, stopped on the span of successive updates."""
    V = np.zeros_like(g)
    for _ in range(max_iter):
        _, TV = _greedy(_lookahead(P, g, V, delta), 0.0)
        diff = TV - V
        V = TV - TV[0, 0]
        if diff.max() - diff.min() < tol:
            break
    else:
        raise RuntimeError("value iteration did not converge")
    W = _lookahead(P, g, V, delta)
    move, _ = _greedy(W, _tie_tol(W))
    return move, V


def solve_agent_mdp(
    policy: TrainerPolicy,
    params: ModelParams,
    M_max: int | None = None,
    method: str = "policy",
) -> AgentPolicy:
    """Bellman-optimal stationary reply to ``policy``.

    Parameters
    ----------
    policy : TrainerPolicy
    params : ModelParams
        Only ``c`` and ``delta`` matter here.
    M_max : int, optional
        Mass cap; defaults to the largest intensity. Optimal play never
        raises mass above that level, so the default loses nothing.
    method : {"policy", "value"}
        Exact policy iteration (default) or relative value iteration with a
        1e-10 span stopping rule. With ``"value"`` the returned ``values``
        are only defined up to an additive constant.

    Notes
    -----
    When several increments are optimal the agent prefers 0, then -1,
    then +1.
    """
    M_max = _check_cap(policy, M_max)
    P = policy.transitions
    g = stage_costs(policy.intensity, params.c, M_max)
    if method == "policy":
        move, V = _policy_iteration(P, g, params.delta)
    elif method == "value":
        move, V = _value_iteration(P, g, params.delta)
    else:
        raise ValueError(f"unknown method {method!r}")
    return AgentPolicy(move=move, values=V, delta=params.delta)


def bellman_residual(policy: TrainerPolicy, agent: AgentPolicy, params: ModelParams) -> float:
    """Largest violation of the Bellman optimality equation by ``agent.values``."""
    if agent.values is None:
        raise ValueError("agent policy carries no value function")
    g = stage_costs(policy.intensity, params.c, agent.M_max)
    W = _lookahead(policy.transitions, g, agent.values, params.delta)
    _, best = _greedy(W, 0.0)
    return float(np.max(np.abs(best - agent.values)))


def _cycle_trainer(cycle) -> TrainerPolicy:
    n = len(cycle)
    return TrainerPolicy(
        transitions=np.roll(np.eye(n), 1, axis=1),
        intensity=np.asarray(cycle),
        labels=tuple(f"phase{k}" for k in range(n)),
    )


def cyclic_best_reply(cycle, params: ModelParams, M_max: int | None = None) -> PeriodicPlan:
    """Best reply to a deterministic cycle of intensities.

    The cycle is treated as a trainer whose state is the phase; the
    discounted problem is solved at ``params.delta`` and the plan's
    recurrent orbit is read off the resulting deterministic dynamics.

    Raises
    ------
    MultipleRecurrentClasses
        If different initial masses settle on different orbits.
    """
    cycle = tuple(int(x) for x in cycle)
    if not cycle:
        raise ValueError("cycle must be nonempty")
    trainer = _cycle_trainer(cycle)
    reply = solve_agent_mdp(trainer, params, M_max)
    n, size = reply.move.shape
    g = stage_costs(trainer.intensity, params.c, reply.M_max)

    # follow (phase, m_prev) -> (phase + 1, m) until a state repeats
    orbits = {}
    for m0 in range(size):
        seen = {}
        path = []
        k, m_prev = 0, m0
        while (k, m_prev) not in seen:
            seen[(k, m_prev)] = len(path)
            m = m_prev + int(reply.move[k, m_prev])
            path.append((k, m))
            k, m_prev = (k + 1) % n, m
        loop = path[seen[(k, m_prev)]:]
        # rotate so the orbit starts at phase 0
        start = min(i for i, (ph, _) in enumerate(loop) if ph == 0)
        loop = tuple(loop[start:] + loop[:start])
        orbits[loop] = None
    if len(orbits) > 1:
        classes = [[ph * size + m for ph, m in orb] for orb in orbits]
        raise MultipleRecurrentClasses(classes, "cyclic best reply has several recurrent orbits")
    (loop,) = orbits
    cost = sum(g[ph, m] for ph, m in loop) / len(loop)
    return PeriodicPlan(
        cycle=cycle,
        move=reply.move,
        orbit=tuple(m for _, m in loop),
        average_cost=float(cost),
        values=reply.values,
    )


def agent_longrun_cost(policy: TrainerPolicy, agent: AgentPolicy, params: ModelParams) -> float:
    """Stationary expected per-period cost of ``agent`` against ``policy``."""
    from .evaluate import build_extended_chain

    chain = build_extended_chain(policy, agent)
    g = stage_costs(policy.intensity, params.c, agent.M_max)
    return float(np.sum(chain.stationary_grid * g))
