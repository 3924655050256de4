"""Reference computations that share no code with the package.

Each one is slow or only works on tiny inputs, which is the point: they
check the fast paths by a different route.
"""

import itertools

import numpy as np


def two_state_stationary(alpha, beta):
    """Closed form for [[1-a, a], [b, 1-b]]: (b, a) / (a + b)."""
    return np.array([beta, alpha]) / (alpha + beta)


def power_stationary(P, squarings=60):
    """Limit of the lazy chain (I + P) / 2 by repeated squaring, started
    from the uniform distribution. Lazy steps remove periodicity."""
    P = np.asarray(P, dtype=float)
    Q = 0.5 * (np.eye(P.shape[0]) + P)
    for _ in range(squarings):
        Q = Q @ Q
        Q /= Q.sum(axis=1, keepdims=True)
    return np.full(P.shape[0], 1.0 / P.shape[0]) @ Q


def stage_cost(c, d, m):
    return c * m + max(0, d - m)


def brute_force_discounted(P, d, c, delta, M):
    """Optimal discounted cost-to-go by enumerating every deterministic
    stationary policy on (s, m_prev). Only for a handful of states."""
    P = np.asarray(P, float)
    n = P.shape[0]
    states = [(s, m) for s in range(n) for m in range(M + 1)]
    index = {st: i for i, st in enumerate(states)}
    choices = [[a for a in (-1, 0, 1) if 0 <= m + a <= M] for (s, m) in states]
    best = np.full(len(states), np.inf)
    for combo in itertools.product(*choices):
        A = np.eye(len(states))
        b = np.zeros(len(states))
        for i, ((s, m_prev), a) in enumerate(zip(states, combo)):
            m = m_prev + a
            b[i] = stage_cost(c, d[s], m)
            for s2 in range(n):
                A[i, index[(s2, m)]] -= delta * P[s, s2]
        V = np.linalg.solve(A, b)
        best = np.minimum(best, V)
    return best.reshape(n, M + 1)


def min_mean_cycle(cycle, c, M):
    """Smallest long-run average cost over every mass path against a
    deterministic intensity cycle (Karp's algorithm on the phase/mass graph)."""
    n = len(cycle)
    nodes = [(k, m) for k in range(n) for m in range(M + 1)]
    idx = {v: i for i, v in enumerate(nodes)}
    edges = []
    for k, m_prev in nodes:
        k2 = (k + 1) % n
        for m in (m_prev - 1, m_prev, m_prev + 1):
            if 0 <= m <= M:
                # entering phase k2 with mass m costs that phase's stage cost
                edges.append((idx[(k, m_prev)], idx[(k2, m)], stage_cost(c, cycle[k2], m)))
    V = len(nodes)
    D = np.full((V + 1, V), np.inf)
    D[0, :] = 0.0  # virtual source linked to every node
    for step in range(1, V + 1):
        for u, v, w in edges:
            if D[step - 1, u] + w < D[step, v]:
                D[step, v] = D[step - 1, u] + w
    best = np.inf
    for v in range(V):
        if not np.isfinite(D[V, v]):
            continue
        worst = max(
            (D[V, v] - D[k, v]) / (V - k) for k in range(V) if np.isfinite(D[k, v])
        )
        best = min(best, worst)
    return best


def closed_classes_bruteforce(P):
    """Closed classes via transitive closure (reachability matrix)."""
    A = (np.asarray(P) > 0).astype(int)
    n = A.shape[0]
    R = np.eye(n, dtype=int) | A
    for k in range(n):
        R = R | (R[:, [k]] & R[[k], :])
    classes = set()
    for i in range(n):
        # i is recurrent iff everything it reaches reaches back
        if all(R[j, i] for j in range(n) if R[i, j]):
            classes.add(frozenset(j for j in range(n) if R[i, j]))
    return sorted(classes, key=min)
