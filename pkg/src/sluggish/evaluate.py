"""Extended chain over (trainer state, mass), long-run mass statistics,
seeded simulation and the myopic flow-balance check."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .markov import recurrent_classes, stationary_distribution
from .model import InvalidCap, MultipleRecurrentClasses, TrainerPolicy

if TYPE_CHECKING:
    from .agent import AgentPolicy

__all__ = [
    "ExtendedChain",
    "MassStats",
    "SimulationPath",
    "SUPPORT_TOL",
    "build_extended_chain",
    "mass_stats",
    "simulate",
    "flow_identity_residual",
    "total_variation",
]

SUPPORT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ExtendedChain:
    """Markov chain on pairs ``(s_t, m_t)``.

    Pair ``(s, m)`` has flat index ``s * (M_max + 1) + m``.
    """

    policy: TrainerPolicy
    agent: "AgentPolicy"
    transitions: np.ndarray
    stationary: np.ndarray

    @property
    def M_max(self) -> int:
        return self.agent.M_max

    @property
    def n_masses(self) -> int:
        return self.M_max + 1

    @property
    def states(self) -> list[tuple[int, int]]:
        return [(s, m) for s in range(self.policy.n_states) for m in range(self.n_masses)]

    @property
    def stationary_grid(self) -> np.ndarray:
        """Stationary weights reshaped to ``(trainer state, mass)``."""
        return self.stationary.reshape(self.policy.n_states, self.n_masses)

    def recurrent_pairs(self, tol: float = SUPPORT_TOL) -> set[tuple[int, int]]:
        grid = self.stationary_grid
        return {(int(s), int(m)) for s, m in zip(*np.nonzero(grid > tol))}


@dataclass(frozen=True)
class MassStats:
    min_mass: int
    max_mass: int
    mass_marginal: np.ndarray
    average_mass: float
    average_intensity: float

    def marginal_dict(self, tol: float = SUPPORT_TOL) -> dict[int, float]:
        return {int(m): float(p) for m, p in enumerate(self.mass_marginal) if p > tol}


@dataclass(frozen=True, eq=False)
class SimulationPath:
    """Per-period records ``t, s_t, d_t, m_t`` and period cost, for ``t = 1..T``."""

    seed: int
    m0: int
    t: np.ndarray
    state: np.ndarray
    intensity: np.ndarray
    mass: np.ndarray
    cost: np.ndarray

    @property
    def T(self) -> int:
        return len(self.t)

    def pair_frequencies(self, n_states: int, n_masses: int, start: int | None = None) -> np.ndarray:
        """Empirical frequency of ``(s_t, m_t)`` over periods ``start..T``.

        Defaults to the last half of the run. Masses above ``n_masses - 1``
        are not counted.
        """
        if start is None:
            start = self.T // 2
        s = self.state[start:]
        m = self.mass[start:]
        ok = m < n_masses
        counts = np.bincount(s[ok] * n_masses + m[ok], minlength=n_states * n_masses)
        return counts / len(s)

    def __eq__(self, other):
        if not isinstance(other, SimulationPath):
            return NotImplemented
        return self.seed == other.seed and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("t", "state", "intensity", "mass", "cost")
        )


def build_extended_chain(policy: TrainerPolicy, agent: "AgentPolicy") -> ExtendedChain:
    """Joint chain of the trainer's state and the agent's mass.

    From ``(s, m)`` the trainer moves to ``s'`` with probability
    ``P[s, s']``; the agent then sees ``s'`` and moves to
    ``m + agent.move[s', m]``.

    Raises
    ------
    MultipleRecurrentClasses
        If the joint chain is not unichain.
    """
    n = policy.n_states
    size = agent.M_max + 1
    if agent.move.shape[0] != n:
        raise ValueError("agent policy and trainer policy disagree on the number of states")
    if agent.M_max < policy.max_intensity:
        raise InvalidCap(f"agent mass cap {agent.M_max} is below the largest intensity")
    P = policy.transitions
    N = n * size
    T = np.zeros((N, N))
    masses = np.arange(size)
    for s in range(n):
        for s2 in np.flatnonzero(P[s] > 0.0):
            nxt = masses + agent.move[s2]
            T[s * size + masses, s2 * size + nxt] += P[s, s2]
    classes = recurrent_classes(T)
    if len(classes) != 1:
        raise MultipleRecurrentClasses(classes, f"extended chain has {len(classes)} recurrent classes")
    pi = stationary_distribution(T)
    return ExtendedChain(policy=policy, agent=agent, transitions=T, stationary=pi)


def mass_stats(chain: ExtendedChain, tol: float = SUPPORT_TOL) -> MassStats:
    grid = chain.stationary_grid
    marginal = grid.sum(axis=0)
    support = np.flatnonzero(marginal > tol)
    masses = np.arange(chain.n_masses)
    return MassStats(
        min_mass=int(support.min()),
        max_mass=int(support.max()),
        mass_marginal=marginal,
        average_mass=float(marginal @ masses),
        average_intensity=float(grid.sum(axis=1) @ chain.policy.intensity),
    )


def simulate(
    policy: TrainerPolicy,
    agent: "AgentPolicy",
    m0: int = 0,
    T: int = 1_000_000,
    seed: int = 0,
    c: float | None = None,
) -> SimulationPath:
    """Simulate ``T`` periods of the trainer process and the agent's reply.

    The first trainer state is drawn from the trainer's stationary
    distribution; the agent starts from mass ``m0``. If ``c`` is given,
    period costs ``c*m_t + max(0, d_t - m_t)`` are recorded, else NaN.
    Output depends only on the arguments (numpy PCG64 seeded by ``seed``).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if m0 < 0:
        raise ValueError("m0 must be nonnegative")
    rng = np.random.default_rng(seed)
    P = policy.transitions
    n = policy.n_states
    lam = stationary_distribution(P)
    u = rng.random(T)
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    # successor of every state for every period's uniform draw
    succ = np.stack([np.minimum(np.searchsorted(cum[k], u, side="right"), n - 1) for k in range(n)])
    succ_list = succ.tolist()
    s = min(int(np.searchsorted(np.cumsum(lam), u[0], side="right")), n - 1)
    seq = [s]
    for t in range(1, T):
        s = succ_list[s][t]
        seq.append(s)
    states = np.array(seq, dtype=np.int64)

    move = agent.move
    cap = agent.M_max
    masses = np.empty(T, dtype=np.int64)
    m = int(m0)
    states_list = states.tolist()
    move_list = move.tolist()
    for t in range(T):
        if m > cap:
            m -= 1
        else:
            m += move_list[states_list[t]][m]
        masses[t] = m

    d = policy.intensity[states]
    if c is None:
        cost = np.full(T, np.nan)
    else:
        cost = c * masses + np.maximum(0, d - masses)
    return SimulationPath(
        seed=int(seed),
        m0=int(m0),
        t=np.arange(1, T + 1),
        state=states,
        intensity=d,
        mass=masses,
        cost=cost,
    )


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def pair_distribution_prev_mass(chain: ExtendedChain) -> np.ndarray:
    """Stationary weight of ``(m_{t-1}, d_t)`` pairs, as ``lam[m, d]``."""
    grid = chain.stationary_grid
    P = chain.policy.transitions
    d = chain.policy.intensity
    # weight of (m_{t-1} = m, s_t = s'): sum over s of pi(s, m) * P[s, s']
    joint = P.T @ grid
    lam = np.zeros((chain.n_masses, int(d.max()) + 1))
    for s2 in range(chain.policy.n_states):
        lam[:, d[s2]] += joint[s2]
    return lam


def flow_identity_residual(chain: ExtendedChain) -> float:
    """``|sum_{d>m} lam(m,d)(m+1) - sum_{d<m} lam(m,d) m|`` under the
    ``(m_{t-1}, d_t)`` stationary pairing."""
    lam = pair_distribution_prev_mass(chain)
    m = np.arange(lam.shape[0])[:, None]
    d = np.arange(lam.shape[1])[None, :]
    up = np.sum(np.where(d > m, lam * (m + 1), 0.0))
    down = np.sum(np.where(d < m, lam * m, 0.0))
    return float(abs(up - down))
