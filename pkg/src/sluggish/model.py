"""Core data types shared by every module: model parameters, trainer
policies and the exception hierarchy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

PROB_TOL = 1e-12


class ModelError(Exception):
    """Base class for violations of the model's structural constraints."""


class MultipleRecurrentClasses(ModelError):
    """A chain that must be unichain has more than one closed class."""

    def __init__(self, classes, message=None):
        self.classes = [sorted(int(i) for i in cls) for cls in classes]
        if message is None:
            message = f"chain has {len(self.classes)} recurrent classes"
        super().__init__(message)


class InvalidCap(ModelError, ValueError):
    """The mass cap is below the largest intensity of the trainer policy."""


class NonIntegerRatio(ValueError):
    """mu / c is not an integer."""


class InfeasibleMargin(ValueError):
    """The requested margin overshoots the intensity budget slack."""


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the trainer/agent game.

    Parameters
    ----------
    mu : int
        Intensity budget; stationary average intensity may not exceed
        ``mu + epsilon``.
    c : float
        Maintenance cost per unit of mass, in (0, 1).
    delta : float
        Agent's discount factor, in [0, 1).
    epsilon : float
        Slack on the intensity budget.
    """

    mu: int
    c: float
    delta: float = 0.999
    epsilon: float = 0.01

    def __post_init__(self):
        if isinstance(self.mu, bool) or not float(self.mu).is_integer():
            raise ValueError(f"mu must be an integer, got {self.mu!r}")
        object.__setattr__(self, "mu", int(self.mu))
        if self.mu < 1:
            raise ValueError(f"mu must be >= 1, got {self.mu}")
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"c must lie in (0, 1), got {self.c}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def budget(self) -> float:
        return self.mu + self.epsilon

    def mass_ratio(self) -> int:
        """Return ``mu / c`` as an integer, or raise :class:`NonIntegerRatio`."""
        ratio = self.mu / self.c
        if abs(ratio - round(ratio)) > 1e-9:
            raise NonIntegerRatio(f"mu/c = {ratio:.6g} is not an integer")
        return int(round(ratio))


def validate_transition_matrix(P, tol: float = PROB_TOL) -> np.ndarray:
    """Return ``P`` as a float array after checking it is row-stochastic."""
    P = np.array(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise ValueError(f"transition matrix must be square and nonempty, got shape {P.shape}")
    if np.any(P < 0.0) or np.any(P > 1.0):
        raise ValueError("transition probabilities must lie in [0, 1]")
    sums = P.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > tol):
        bad = int(np.argmax(np.abs(sums - 1.0)))
        raise ValueError(f"row {bad} sums to {sums[bad]!r}, not 1")
    return P


@dataclass(frozen=True, eq=False)
class TrainerPolicy:
    """A finite-state Markov process with an integer intensity per state.

    ``transitions[i, j]`` is the probability of moving from state ``i`` to
    state ``j``; ``intensity[i]`` is the challenge level in state ``i``.
    Unichain-ness is not checked here (it costs a graph search); functions
    that need a unique stationary distribution raise
    :class:`MultipleRecurrentClasses` themselves.
    """

    transitions: np.ndarray
    intensity: np.ndarray
    labels: tuple = field(default=())

    def __post_init__(self):
        P = validate_transition_matrix(self.transitions)
        d = np.asarray(self.intensity)
        if d.shape != (P.shape[0],):
            raise ValueError(f"need one intensity per state, got {d.shape} for {P.shape[0]} states")
        if not np.all(np.equal(np.mod(d, 1), 0)) or np.any(d < 0):
            raise ValueError("intensities must be nonnegative integers")
        d = d.astype(np.int64)
        labels = tuple(self.labels) or tuple(str(i) for i in range(P.shape[0]))
        if len(labels) != P.shape[0]:
            raise ValueError("need one label per state")
        P.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "transitions", P)
        object.__setattr__(self, "intensity", d)
        object.__setattr__(self, "labels", labels)

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def max_intensity(self) -> int:
        return int(self.intensity.max())

    def state(self, label) -> int:
        return self.labels.index(label)

    def __eq__(self, other):
        if not isinstance(other, TrainerPolicy):
            return NotImplemented
        return (
            self.labels == other.labels
            and np.array_equal(self.transitions, other.transitions)
            and np.array_equal(self.intensity, other.intensity)
        )

    def __repr__(self):
        return (
            f"TrainerPolicy(labels={self.labels}, intensity={self.intensity.tolist()}, "
            f"transitions={self.transitions.tolist()})"
        )


@dataclass(frozen=True)
class TwoStateSpec:
    """Two-state process with intensities ``d_low < d_high``.

    ``alpha`` is the probability of L -> H and ``beta`` of H -> L.
    """

    d_low: int
    d_high: int
    alpha: float
    beta: float

    def __post_init__(self):
        if not (0 <= self.d_low < self.d_high):
            raise ValueError(f"need 0 <= d_low < d_high, got {self.d_low}, {self.d_high}")
        for name in ("alpha", "beta"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.alpha == 0.0 and self.beta == 0.0:
            raise ValueError("alpha and beta cannot both be 0")

    @property
    def high_probability(self) -> float:
        """Stationary probability of the high state."""
        return self.alpha / (self.alpha + self.beta)

    @property
    def mean_intensity(self) -> float:
        q = self.high_probability
        return q * self.d_high + (1.0 - q) * self.d_low

    def to_policy(self) -> TrainerPolicy:
        a, b = self.alpha, self.beta
        return TrainerPolicy(
            transitions=np.array([[1.0 - a, a], [b, 1.0 - b]]),
            intensity=np.array([self.d_low, self.d_high]),
            labels=("L", "H"),
        )


def as_int_list(values: Sequence) -> list[int]:
    out = []
    for v in values:
        if isinstance(v, bool) or not math.isfinite(float(v)) or not float(v).is_integer():
            raise ValueError(f"expected an integer, got {v!r}")
        out.append(int(v))
    return out
