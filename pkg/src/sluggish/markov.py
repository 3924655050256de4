"""Finite Markov chain algebra: recurrent classes and stationary
distributions."""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .model import MultipleRecurrentClasses, validate_transition_matrix

__all__ = ["recurrent_classes", "is_unichain", "stationary_distribution"]


def recurrent_classes(P) -> list[frozenset[int]]:
    """Return the closed communicating classes of ``P``.

    Classes are the strongly connected components of the graph with an edge
    ``i -> j`` whenever ``P[i, j] > 0`` that have no edge leaving them.
    States outside every returned class are transient. Classes are ordered
    by their smallest state.

    Examples
    --------
    >>> recurrent_classes([[0.5, 0.5], [0.0, 1.0]])
    [frozenset({1})]
    """
    P = validate_transition_matrix(P)
    n_comp, labels = connected_components(csr_matrix(P > 0.0), directed=True, connection="strong")
    rows, cols = np.nonzero(P > 0.0)
    leaks = np.zeros(n_comp, dtype=bool)
    leaks[labels[rows][labels[rows] != labels[cols]]] = True
    classes = [frozenset(np.flatnonzero(labels == k).tolist()) for k in range(n_comp) if not leaks[k]]
    return sorted(classes, key=min)


def is_unichain(P) -> bool:
    return len(recurrent_classes(P)) == 1


def stationary_distribution(P) -> np.ndarray:
    """Unique invariant distribution of a unichain transition matrix.

    The balance equations are solved directly on the recurrent class, with
    one equation replaced by the normalization constraint; transient states
    get exactly zero weight.

    Raises
    ------
    MultipleRecurrentClasses
        If ``P`` has more than one closed class.
    """
    P = validate_transition_matrix(P)
    classes = recurrent_classes(P)
    if len(classes) != 1:
        raise MultipleRecurrentClasses(classes)
    idx = np.array(sorted(classes[0]))
    Q = P[np.ix_(idx, idx)]
    k = len(idx)
    A = Q.T - np.eye(k)
    A[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    sol = np.linalg.solve(A, b)
    sol = np.clip(sol, 0.0, None)
    pi = np.zeros(P.shape[0])
    pi[idx] = sol / sol.sum()
    return pi
