"""Trainer policies and the exhaustive two-state search.

The constructors build the benchmark and optimal processes; the search
enumerates two-state processes on a grid, solves the agent's reply for
each feasible one and records the long-run mass statistics, which gives an
independent check of the upper bounds on the minimal long-run mass.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .agent import myopic_agent, solve_agent_mdp
from .evaluate import build_extended_chain, mass_stats
from .markov import stationary_distribution
from .model import (
    InfeasibleMargin,
    ModelError,
    ModelParams,
    NonIntegerRatio,
    TrainerPolicy,
    TwoStateSpec,
)

__all__ = [
    "constant_policy",
    "prop1_policy",
    "prop2_policy",
    "cycle_policy",
    "two_state_policy",
    "matrix_policy",
    "feasibility_check",
    "Feasibility",
    "default_prob_grid",
    "default_d_grid",
    "CandidateRecord",
    "SearchReport",
    "search_two_state",
]


def constant_policy(mu: int) -> TrainerPolicy:
    """One state, intensity ``mu`` every period."""
    if mu < 1:
        raise ValueError("mu must be >= 1")
    return TrainerPolicy(transitions=np.ones((1, 1)), intensity=np.array([mu]), labels=("C",))


def two_state_policy(spec: TwoStateSpec) -> TrainerPolicy:
    return spec.to_policy()


def prop1_policy(mu: int, epsilon: float) -> TrainerPolicy:
    """Near-alternation between rest and double intensity.

    L (intensity 0) always moves to H (intensity ``2*mu``); H returns to L
    with probability ``beta = (mu - epsilon) / (mu + epsilon)``, the
    smallest value that keeps average intensity at ``mu + epsilon``.
    """
    if mu < 1:
        raise ValueError("mu must be >= 1")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    beta = max((mu - epsilon) / (mu + epsilon), 0.0)
    return TwoStateSpec(0, 2 * mu, alpha=1.0, beta=beta).to_policy()


def prop2_spec(mu: int, c: float, margin: float = 0.001, epsilon: float | None = None) -> TwoStateSpec:
    ratio = mu / c
    if abs(ratio - round(ratio)) > 1e-9:
        raise NonIntegerRatio(f"mu/c = {ratio:.6g} is not an integer")
    ratio = int(round(ratio))
    if not 0.0 < margin < 1.0 - c:
        raise ValueError(f"margin must lie in (0, 1 - c), got {margin}")
    if epsilon is not None and margin * ratio > epsilon + 1e-12:
        raise InfeasibleMargin(
            f"margin*mu/c = {margin * ratio:.6g} exceeds epsilon = {epsilon:.6g}"
        )
    q = c + margin
    if c < 0.5:
        alpha, beta = q / (1.0 - q), 1.0
    else:
        alpha, beta = 1.0, (1.0 - q) / q
    return TwoStateSpec(0, ratio, alpha=alpha, beta=beta)


def prop2_policy(mu: int, c: float, margin: float = 0.001, epsilon: float | None = None) -> TrainerPolicy:
    """Two-state process with intensities 0 and ``mu/c``.

    The high state has stationary probability ``c + margin``. For
    ``c < 1/2`` the high state always falls back to rest; otherwise rest
    is always followed by high intensity. Average intensity is
    ``mu + margin * mu / c``.

    Raises
    ------
    NonIntegerRatio
        If ``mu / c`` is not an integer (within 1e-9).
    InfeasibleMargin
        If ``epsilon`` is given and ``margin * mu / c > epsilon``.
    """
    return prop2_spec(mu, c, margin, epsilon).to_policy()


def cycle_policy(sequence: Sequence[int]) -> TrainerPolicy:
    """Deterministic cycle, one state per phase."""
    seq = [int(x) for x in sequence]
    if not seq:
        raise ValueError("sequence must be nonempty")
    n = len(seq)
    return TrainerPolicy(
        transitions=np.roll(np.eye(n), 1, axis=1),
        intensity=np.array(seq),
        labels=tuple(f"phase{k}" for k in range(n)),
    )


def matrix_policy(transitions, intensity, labels=()) -> TrainerPolicy:
    return TrainerPolicy(transitions=np.asarray(transitions, dtype=float), intensity=np.asarray(intensity), labels=tuple(labels))


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    average_intensity: float


def feasibility_check(policy: TrainerPolicy, params: ModelParams) -> Feasibility:
    """Compare the stationary average intensity with ``mu + epsilon``."""
    lam = stationary_distribution(policy.transitions)
    avg = float(lam @ policy.intensity)
    return Feasibility(feasible=avg <= params.budget + 1e-12, average_intensity=avg)


# ----------------------------------------------------------------------
# search


def default_prob_grid() -> np.ndarray:
    """{0.02, 0.04, ..., 0.98, 0.99, 0.999, 1}."""
    return np.concatenate([np.round(np.arange(1, 50) * 0.02, 10), [0.99, 0.999, 1.0]])


def default_d_grid(params: ModelParams, agent_kind: str) -> range:
    if agent_kind == "myopic":
        return range(0, 3 * params.mu + 1)
    return range(0, int(np.floor(params.mu / params.c + 1e-9)) + 3)


@dataclass(frozen=True)
class CandidateRecord:
    spec: TwoStateSpec
    feasible: bool
    average_intensity: float
    valid: bool = False
    min_mass: int | None = None
    max_mass: int | None = None
    average_mass: float | None = None
    high_probability: float | None = None
    flags: dict = field(default_factory=dict)
    note: str = ""

    def as_row(self) -> dict:
        row = {
            "d_low": self.spec.d_low,
            "d_high": self.spec.d_high,
            "alpha": self.spec.alpha,
            "beta": self.spec.beta,
            "feasible": self.feasible,
            "average_intensity": self.average_intensity,
            "valid": self.valid,
            "min_mass": self.min_mass,
            "max_mass": self.max_mass,
            "average_mass": self.average_mass,
            "p_positive_intensity": self.high_probability,
        }
        row.update({f"flag_{k}": v for k, v in self.flags.items()})
        row["note"] = self.note
        return row


@dataclass(frozen=True)
class SearchReport:
    agent_kind: str
    params: ModelParams
    best_min_mass: int | None
    best_policy: TwoStateSpec | None
    table: list[CandidateRecord]

    @property
    def evaluated(self) -> list[CandidateRecord]:
        """Feasible candidates with a unichain extended chain."""
        return [r for r in self.table if r.valid]

    def flag_failures(self) -> dict[str, list[CandidateRecord]]:
        out: dict[str, list[CandidateRecord]] = {}
        for r in self.evaluated:
            for k, ok in r.flags.items():
                if ok is False:
                    out.setdefault(k, []).append(r)
        return out

    def counts(self) -> dict[str, int]:
        return {
            "candidates": len(self.table),
            "feasible": sum(r.feasible for r in self.table),
            "valid": len(self.evaluated),
        }


def _two_state_stationary_mean(d_low, d_high, alpha, beta):
    q = alpha / (alpha + beta)
    return q, q * d_high + (1.0 - q) * d_low


def _flags(stats, q, params: ModelParams, agent_kind: str, tol: float) -> dict:
    if agent_kind == "myopic":
        return {"mean_mass_le_2mu": stats.average_mass <= 2 * params.mu + tol}
    ratio = params.mu / params.c
    flags = {"mean_mass_le_mu_over_c": stats.average_mass <= ratio + tol}
    if stats.min_mass >= 1:
        flags["mean_mass_le_mu_over_c_minus_1_plus_c"] = stats.average_mass <= ratio - 1 + params.c + tol
        flags["p_positive_ge_c"] = q >= params.c - tol
    return flags


def _evaluate_candidate(spec: TwoStateSpec, params: ModelParams, agent_kind: str, tol: float) -> CandidateRecord:
    q, avg = _two_state_stationary_mean(spec.d_low, spec.d_high, spec.alpha, spec.beta)
    if avg > params.budget + 1e-12:
        return CandidateRecord(spec, feasible=False, average_intensity=avg)
    policy = spec.to_policy()
    if agent_kind == "myopic":
        agent = myopic_agent(policy)
    else:
        agent = solve_agent_mdp(policy, params)
    try:
        chain = build_extended_chain(policy, agent)
    except ModelError as exc:
        return CandidateRecord(spec, feasible=True, average_intensity=avg, note=str(exc))
    stats = mass_stats(chain)
    # P(d > 0): the high state when d_low == 0, everything otherwise
    p_pos = q if spec.d_low == 0 else 1.0
    return CandidateRecord(
        spec,
        feasible=True,
        average_intensity=avg,
        valid=True,
        min_mass=stats.min_mass,
        max_mass=stats.max_mass,
        average_mass=stats.average_mass,
        high_probability=p_pos,
        flags=_flags(stats, p_pos, params, agent_kind, tol),
    )


def candidate_specs(d_grid: Iterable[int], prob_grid: Iterable[float]) -> list[TwoStateSpec]:
    """All ``(d_low < d_high, alpha, beta)`` combinations in grid order."""
    ds = sorted(set(int(d) for d in d_grid))
    probs = [float(p) for p in prob_grid]
    return [
        TwoStateSpec(lo, hi, a, b)
        for lo, hi in itertools.combinations(ds, 2)
        for a in probs
        for b in probs
    ]


def search_two_state(
    params: ModelParams,
    agent_kind: str = "myopic",
    d_grid: Iterable[int] | None = None,
    prob_grid: Iterable[float] | None = None,
    tol: float = 1e-6,
    n_jobs: int = 1,
) -> SearchReport:
    """Enumerate two-state processes and report the best minimal mass.

    Parameters
    ----------
    params : ModelParams
    agent_kind : {"myopic", "patient"}
        ``"patient"`` solves the discounted MDP at ``params.delta``.
    d_grid, prob_grid
        Intensity levels (pairs with ``d_low < d_high`` are formed) and the
        values tried for each transition probability.
    tol : float
        Slack used by the recorded bound flags.
    n_jobs : int
        Worker processes (joblib); the table is in grid order either way.

    Candidates whose extended chain is not unichain are kept in the table
    with ``valid=False`` and never count as best.
    """
    if agent_kind not in ("myopic", "patient"):
        raise ValueError(f"agent_kind must be 'myopic' or 'patient', got {agent_kind!r}")
    if d_grid is None:
        d_grid = default_d_grid(params, agent_kind)
    if prob_grid is None:
        prob_grid = default_prob_grid()
    prob_grid = np.asarray(list(prob_grid), dtype=float)
    d_grid = list(d_grid)
    if len(d_grid) < 2 or prob_grid.size == 0:
        raise ValueError("grids must be nonempty (and hold at least two intensities)")
    if np.any(prob_grid <= 0.0) or np.any(prob_grid > 1.0):
        raise ValueError("probabilities must lie in (0, 1]")

    specs = candidate_specs(d_grid, prob_grid)
    if n_jobs == 1:
        table = [_evaluate_candidate(s, params, agent_kind, tol) for s in specs]
    else:
        from joblib import Parallel, delayed

        table = Parallel(n_jobs=n_jobs, batch_size=512)(
            delayed(_evaluate_candidate)(s, params, agent_kind, tol) for s in specs
        )

    best = None
    for rec in table:
        if rec.valid and (best is None or rec.min_mass > best.min_mass):
            best = rec
    return SearchReport(
        agent_kind=agent_kind,
        params=params,
        best_min_mass=None if best is None else best.min_mass,
        best_policy=None if best is None else best.spec,
        table=table,
    )
