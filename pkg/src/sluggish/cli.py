"""Config files, named reproduction scenarios and report files.

Usage::

    sluggish analyze  --config cfg.yaml --out results/
    sluggish simulate --config cfg.yaml --seed 3
    sluggish search   --config cfg.yaml --override search.n_jobs=4
    sluggish repro prop2 --out results/prop2

Exit codes: 0 success, 2 config error, 3 model-constraint violation.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .agent import agent_longrun_cost, cyclic_best_reply, myopic_agent, solve_agent_mdp
from .evaluate import build_extended_chain, flow_identity_residual, mass_stats, simulate, total_variation
from .model import ModelError, ModelParams, TrainerPolicy, TwoStateSpec
from .trainer import (
    constant_policy,
    cycle_policy,
    default_d_grid,
    default_prob_grid,
    feasibility_check,
    matrix_policy,
    prop1_policy,
    prop2_spec,
    search_two_state,
)

__all__ = [
    "SchemaError",
    "ExperimentConfig",
    "Report",
    "parse_config",
    "config_from_dict",
    "apply_overrides",
    "run",
    "run_scenario",
    "SCENARIOS",
    "main",
]

TRAINER_KEYS = {
    "constant": {"mu"},
    "prop1": set(),
    "prop2": {"margin"},
    "cycle": {"sequence"},
    "two_state": {"d_low", "d_high", "alpha", "beta"},
    "matrix": {"transitions", "intensity", "labels"},
}
TOP_KEYS = {"mu", "c", "delta", "epsilon", "trainer", "agent", "sim", "search", "output"}


class SchemaError(ValueError):
    """Malformed config; ``path`` names the offending key."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class SimConfig:
    T: int = 1_000_000
    seed: int = 0
    m0: int = 0


@dataclass(frozen=True)
class SearchConfig:
    d_grid: tuple[int, ...] | None = None
    prob_grid: tuple[float, ...] | None = None
    n_jobs: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams
    trainer: dict
    agent: str = "myopic"
    sim: SimConfig | None = None
    search: SearchConfig | None = None
    output: str | None = None

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "mu": self.params.mu,
            "c": self.params.c,
            "delta": self.params.delta,
            "epsilon": self.params.epsilon,
            "trainer": copy.deepcopy(self.trainer),
            "agent": self.agent,
        }
        if self.sim is not None:
            out["sim"] = {"T": self.sim.T, "seed": self.sim.seed, "m0": self.sim.m0}
        if self.search is not None:
            out["search"] = {
                "d_grid": None if self.search.d_grid is None else list(self.search.d_grid),
                "prob_grid": None if self.search.prob_grid is None else list(self.search.prob_grid),
                "n_jobs": self.search.n_jobs,
            }
        if self.output is not None:
            out["output"] = self.output
        return out

    def build_policy(self) -> TrainerPolicy:
        t = self.trainer
        kind = t["type"]
        if kind == "constant":
            return constant_policy(t["mu"])
        if kind == "prop1":
            return prop1_policy(self.params.mu, self.params.epsilon)
        if kind == "prop2":
            return prop2_spec(self.params.mu, self.params.c, t["margin"], self.params.epsilon).to_policy()
        if kind == "cycle":
            return cycle_policy(t["sequence"])
        if kind == "two_state":
            return TwoStateSpec(t["d_low"], t["d_high"], t["alpha"], t["beta"]).to_policy()
        return matrix_policy(t["transitions"], t["intensity"], t.get("labels") or ())

    def build_agent(self, policy: TrainerPolicy):
        if self.agent == "myopic":
            return myopic_agent(policy)
        return solve_agent_mdp(policy, self.params)


# ----------------------------------------------------------------------
# parsing


def _num(value, path, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {value!r}")
    if kind is int:
        if not float(value).is_integer():
            raise SchemaError(path, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _mapping(value, path) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(path, f"expected a mapping, got {type(value).__name__}")
    return value


def _no_extra(d: dict, allowed: set, path: str):
    for k in d:
        if k not in allowed:
            raise SchemaError(f"{path}.{k}" if path else str(k), "unknown key")


def _parse_trainer(raw, params: ModelParams) -> dict:
    if isinstance(raw, str):
        raw = {"type": raw}
    raw = _mapping(raw, "trainer")
    kind = raw.get("type")
    if kind not in TRAINER_KEYS:
        raise SchemaError("trainer.type", f"expected one of {sorted(TRAINER_KEYS)}, got {kind!r}")
    _no_extra(raw, TRAINER_KEYS[kind] | {"type"}, "trainer")
    out: dict[str, Any] = {"type": kind}
    if kind == "constant":
        out["mu"] = _num(raw.get("mu", params.mu), "trainer.mu", int)
    elif kind == "prop2":
        out["margin"] = _num(raw.get("margin", 0.001), "trainer.margin")
        # raises NonIntegerRatio / InfeasibleMargin
        prop2_spec(params.mu, params.c, out["margin"], params.epsilon)
    elif kind == "cycle":
        seq = raw.get("sequence")
        if not isinstance(seq, list) or not seq:
            raise SchemaError("trainer.sequence", "expected a nonempty list of intensities")
        out["sequence"] = [_num(x, f"trainer.sequence[{i}]", int) for i, x in enumerate(seq)]
    elif kind == "two_state":
        for k in ("d_low", "d_high"):
            if k not in raw:
                raise SchemaError(f"trainer.{k}", "missing")
            out[k] = _num(raw[k], f"trainer.{k}", int)
        for k in ("alpha", "beta"):
            if k not in raw:
                raise SchemaError(f"trainer.{k}", "missing")
            out[k] = _num(raw[k], f"trainer.{k}")
    elif kind == "matrix":
        P = raw.get("transitions")
        if not isinstance(P, list) or not all(isinstance(r, list) for r in P):
            raise SchemaError("trainer.transitions", "expected a list of rows")
        out["transitions"] = [
            [_num(x, f"trainer.transitions[{i}][{j}]") for j, x in enumerate(row)] for i, row in enumerate(P)
        ]
        d = raw.get("intensity")
        if not isinstance(d, list):
            raise SchemaError("trainer.intensity", "expected a list")
        out["intensity"] = [_num(x, f"trainer.intensity[{i}]", int) for i, x in enumerate(d)]
        if raw.get("labels") is not None:
            out["labels"] = [str(x) for x in raw["labels"]]
    return out


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate a config mapping and fill in defaults.

    Raises
    ------
    SchemaError
        Unknown or mistyped keys (``.path`` names the key).
    ValueError
        A value breaks a model invariant (for instance ``mu / c`` not an
        integer for a ``prop2`` trainer).
    """
    raw = _mapping(raw, "<root>")
    _no_extra(raw, TOP_KEYS, "")
    for k in ("mu", "c"):
        if k not in raw:
            raise SchemaError(k, "missing")
    agent = raw.get("agent", "myopic")
    delta = raw.get("delta", 0.999)
    if isinstance(agent, dict):
        _no_extra(agent, {"type", "delta"}, "agent")
        if "delta" in agent:
            delta = agent["delta"]
        agent = agent.get("type")
    if agent not in ("myopic", "patient"):
        raise SchemaError("agent", f"expected 'myopic' or 'patient', got {agent!r}")
    params = ModelParams(
        mu=_num(raw["mu"], "mu", int),
        c=_num(raw["c"], "c"),
        delta=_num(delta, "delta"),
        epsilon=_num(raw.get("epsilon", 0.01), "epsilon"),
    )
    if "trainer" not in raw:
        raise SchemaError("trainer", "missing")
    trainer = _parse_trainer(raw["trainer"], params)

    sim = None
    if raw.get("sim") is not None:
        s = _mapping(raw["sim"], "sim")
        _no_extra(s, {"T", "seed", "m0"}, "sim")
        sim = SimConfig(
            T=_num(s.get("T", 1_000_000), "sim.T", int),
            seed=_num(s.get("seed", 0), "sim.seed", int),
            m0=_num(s.get("m0", 0), "sim.m0", int),
        )
        if sim.T < 1:
            raise ValueError("sim.T must be >= 1")
        if sim.m0 < 0:
            raise ValueError("sim.m0 must be nonnegative")

    search = None
    if raw.get("search") is not None:
        s = _mapping(raw["search"], "search")
        _no_extra(s, {"d_grid", "prob_grid", "n_jobs"}, "search")
        d_grid = s.get("d_grid")
        if d_grid is not None:
            if not isinstance(d_grid, list):
                raise SchemaError("search.d_grid", "expected a list")
            d_grid = tuple(_num(x, f"search.d_grid[{i}]", int) for i, x in enumerate(d_grid))
        prob_grid = s.get("prob_grid")
        if prob_grid is not None:
            if not isinstance(prob_grid, list):
                raise SchemaError("search.prob_grid", "expected a list")
            prob_grid = tuple(_num(x, f"search.prob_grid[{i}]") for i, x in enumerate(prob_grid))
            if any(not 0.0 < p <= 1.0 for p in prob_grid):
                raise ValueError("search.prob_grid entries must lie in (0, 1]")
        search = SearchConfig(d_grid=d_grid, prob_grid=prob_grid, n_jobs=_num(s.get("n_jobs", 1), "search.n_jobs", int))

    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        raise SchemaError("output", "expected a path string")
    return ExperimentConfig(params=params, trainer=trainer, agent=agent, sim=sim, search=search, output=output)


def parse_config(text: str) -> ExperimentConfig:
    """Parse a YAML (or JSON) config document."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError("<document>", f"not valid YAML: {exc}") from exc
    if raw is None:
        raise SchemaError("<document>", "empty config")
    return config_from_dict(raw)


def _deep_merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply ``dotted.key=value`` strings; values are parsed as YAML scalars."""
    out = copy.deepcopy(raw)
    for item in overrides:
        if "=" not in item:
            raise SchemaError(item, "override must look like key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = out
        for p in parts[:-1]:
            nxt = node.get(p)
            if isinstance(nxt, str) and p == "trainer":
                nxt = {"type": nxt}
            if not isinstance(nxt, dict):
                nxt = {}
            node[p] = nxt
            node = nxt
        node[parts[-1]] = yaml.safe_load(value)
    return out


# ----------------------------------------------------------------------
# reports


@dataclass
class Report:
    config: ExperimentConfig
    sections: dict = field(default_factory=dict)
    marginal: np.ndarray | None = None
    search_rows: list[dict] | None = None
    wall_clock: float = 0.0

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            **self.sections,
            "tool_version": __version__,
            "wall_clock_seconds": self.wall_clock,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def marginal_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["mass", "probability"])
        if self.marginal is not None:
            for m, p in enumerate(self.marginal):
                w.writerow([m, repr(float(p))])
        return buf.getvalue()

    def search_csv(self) -> str:
        buf = io.StringIO()
        if self.search_rows:
            w = csv.DictWriter(buf, fieldnames=list(self.search_rows[0]) + _extra_fields(self.search_rows), lineterminator="\n")
            w.writeheader()
            w.writerows(self.search_rows)
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"sluggish {__version__} report"]
        cfg = self.config
        p = cfg.params
        lines.append(f"params: mu={p.mu} c={p.c!r} delta={p.delta!r} epsilon={p.epsilon!r}")
        lines.append(f"trainer: {cfg.trainer}  agent: {cfg.agent}")
        for name, body in self.sections.items():
            lines.append(f"[{name}]")
            lines.extend(_flatten(body, "  "))
        lines.append(f"wall clock: {self.wall_clock:.3f} s")
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(self.summary(), encoding="utf-8")
        (out / "report.json").write_text(self.to_json(), encoding="utf-8")
        (out / "mass_marginal.csv").write_text(self.marginal_csv(), encoding="utf-8")
        if self.search_rows is not None:
            (out / "search_table.csv").write_text(self.search_csv(), encoding="utf-8")
        return out


def _extra_fields(rows):
    seen = list(rows[0])
    extra = []
    for r in rows:
        for k in r:
            if k not in seen and k not in extra:
                extra.append(k)
    return extra


def _flatten(body, indent):
    if not isinstance(body, dict):
        return [f"{indent}{body}"]
    lines = []
    for k, v in body.items():
        if isinstance(v, dict) and len(v) > 6:
            lines.append(f"{indent}{k}:")
            lines.extend(_flatten(v, indent + "  "))
        else:
            lines.append(f"{indent}{k}: {v}")
    return lines


def _stats_dict(stats) -> dict:
    return {
        "min_mass": stats.min_mass,
        "max_mass": stats.max_mass,
        "average_mass": stats.average_mass,
        "average_intensity": stats.average_intensity,
        "mass_marginal": {str(m): p for m, p in stats.marginal_dict().items()},
    }


def _analyze(cfg: ExperimentConfig, policy, agent, report: Report):
    feas = feasibility_check(policy, cfg.params)
    report.sections["feasibility"] = {
        "feasible": feas.feasible,
        "average_intensity": feas.average_intensity,
        "budget": cfg.params.budget,
    }
    chain = build_extended_chain(policy, agent)
    stats = mass_stats(chain)
    report.marginal = stats.mass_marginal
    report.sections["mass_stats"] = _stats_dict(stats)
    report.sections["agent"] = {
        "kind": cfg.agent,
        "longrun_cost": agent_longrun_cost(policy, agent, cfg.params),
    }
    if cfg.agent == "myopic":
        report.sections["flow_identity_residual"] = flow_identity_residual(chain)
    return chain


def _simulate(cfg: ExperimentConfig, policy, agent, chain, report: Report):
    sim = cfg.sim or SimConfig()
    path = simulate(policy, agent, m0=sim.m0, T=sim.T, seed=sim.seed, c=cfg.params.c)
    freq = path.pair_frequencies(policy.n_states, chain.n_masses)
    tail = path.mass[path.T // 2:]
    masses, counts = np.unique(tail, return_counts=True)
    report.sections["simulation"] = {
        "T": sim.T,
        "seed": sim.seed,
        "m0": sim.m0,
        "tv_distance_last_half": total_variation(freq, chain.stationary),
        "empirical_mass_marginal": {str(int(m)): int(k) / len(tail) for m, k in zip(masses, counts)},
        "empirical_average_mass": float(tail.mean()),
        "empirical_min_mass_last_half": int(tail.min()),
        "average_cost_last_half": float(path.cost[path.T // 2:].mean()),
    }


def _search(cfg: ExperimentConfig, report: Report):
    s = cfg.search or SearchConfig()
    res = search_two_state(
        cfg.params,
        agent_kind=cfg.agent,
        d_grid=s.d_grid if s.d_grid is not None else default_d_grid(cfg.params, cfg.agent),
        prob_grid=s.prob_grid if s.prob_grid is not None else default_prob_grid(),
        n_jobs=s.n_jobs,
    )
    best = res.best_policy
    report.sections["search"] = {
        **res.counts(),
        "best_min_mass": res.best_min_mass,
        "best_policy": None if best is None else {"d_low": best.d_low, "d_high": best.d_high, "alpha": best.alpha, "beta": best.beta},
        "flag_failures": {k: len(v) for k, v in sorted(res.flag_failures().items())},
    }
    report.search_rows = [r.as_row() for r in res.table]
    return res


def run(cfg: ExperimentConfig, mode: str = "analyze") -> Report:
    """Run ``analyze``, ``simulate`` or ``search`` on a parsed config."""
    start = time.perf_counter()
    report = Report(config=cfg)
    if mode == "search":
        _search(cfg, report)
    else:
        policy = cfg.build_policy()
        agent = cfg.build_agent(policy)
        chain = _analyze(cfg, policy, agent, report)
        if mode == "simulate":
            _simulate(cfg, policy, agent, chain, report)
        elif mode != "analyze":
            raise ValueError(f"unknown mode {mode!r}")
    report.wall_clock = time.perf_counter() - start
    return report


# ----------------------------------------------------------------------
# scenarios

CYCLE_11 = [11, 11, 11, 11, 0, 0, 0, 0, 0, 0, 0]

SCENARIOS: dict[str, dict] = {
    "prop1": {
        "mu": 3,
        "c": 0.25,
        "epsilon": 0.0005,
        "trainer": {"type": "prop1"},
        "agent": "myopic",
        "sim": {"T": 1_000_000, "seed": 0, "m0": 0},
    },
    "prop2": {
        "mu": 2,
        "c": 0.25,
        "delta": 0.999,
        "epsilon": 0.01,
        "trainer": {"type": "prop2", "margin": 0.001},
        "agent": "patient",
        "sim": {"T": 1_000_000, "seed": 0, "m0": 0},
    },
    "cycle-counterexample": {
        "mu": 4,
        "c": 4 / 11 - 0.001,
        "delta": 0.999,
        "epsilon": 0.01,
        "trainer": {"type": "cycle", "sequence": CYCLE_11},
        "agent": "patient",
    },
    "flexible-benchmark": {
        "mu": 3,
        "c": 0.25,
        "trainer": {"type": "constant"},
        "agent": "patient",
    },
}


def _cycle_extras(cfg: ExperimentConfig, report: Report):
    seq = cfg.trainer["sequence"]
    plan = cyclic_best_reply(seq, cfg.params)
    hi, lo = max(seq), min(seq)
    # hold max(d) in high phases and max(d) - 1 in low phases
    baseline = sum(cfg.params.c * (hi if d == hi else hi - 1) for d in seq)
    report.sections["periodic_plan"] = {
        "orbit": list(plan.orbit),
        "min_mass": plan.min_mass,
        "cycle_cost": plan.cycle_cost,
        "oscillation_plan_cycle_cost": baseline,
        "saving_per_cycle": baseline - plan.cycle_cost,
    }
    # stochastic process with the same long-run intensity frequencies
    q = sum(d == hi for d in seq) / len(seq)
    if lo == 0 and 0 < q < 1:
        if q <= 0.5:
            spec = TwoStateSpec(0, hi, q / (1 - q), 1.0)
        else:
            spec = TwoStateSpec(0, hi, 1.0, (1 - q) / q)
        pol = spec.to_policy()
        agent = solve_agent_mdp(pol, cfg.params)
        stats = mass_stats(build_extended_chain(pol, agent))
        report.sections["stochastic_contrast"] = {
            "alpha": spec.alpha,
            "beta": spec.beta,
            **_stats_dict(stats),
        }


def _flexible_extras(cfg: ExperimentConfig, report: Report):
    policy = cfg.build_policy()
    out = {}
    for kind, agent in (("myopic", myopic_agent(policy)), ("patient", solve_agent_mdp(policy, cfg.params))):
        stats = mass_stats(build_extended_chain(policy, agent))
        out[kind] = {"min_mass": stats.min_mass, "max_mass": stats.max_mass}
    report.sections["both_agents"] = out


def scenario_config(name: str, overrides: dict | None = None) -> ExperimentConfig:
    if name not in SCENARIOS:
        raise SchemaError("scenario", f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    return config_from_dict(_deep_merge(SCENARIOS[name], overrides or {}))


def run_scenario(name: str, overrides: dict | None = None) -> Report:
    """Run one of :data:`SCENARIOS` with a partial config merged on top."""
    start = time.perf_counter()
    cfg = scenario_config(name, overrides)
    report = Report(config=cfg)
    policy = cfg.build_policy()
    agent = cfg.build_agent(policy)
    chain = _analyze(cfg, policy, agent, report)
    if cfg.sim is not None:
        _simulate(cfg, policy, agent, chain, report)
    if name == "cycle-counterexample":
        _cycle_extras(cfg, report)
    elif name == "flexible-benchmark":
        _flexible_extras(cfg, report)
    report.sections = {"scenario": name, **report.sections}
    report.wall_clock = time.perf_counter() - start
    return report


# ----------------------------------------------------------------------
# command line


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sluggish", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("analyze", "exact long-run statistics"),
        ("simulate", "exact statistics plus a seeded simulation"),
        ("search", "exhaustive two-state policy search"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="YAML/JSON config file")
    p = sub.add_parser("repro", help="run a named reproduction scenario")
    p.add_argument("name", choices=sorted(SCENARIOS))
    p.add_argument("--config", help="optional partial config merged over the scenario")
    for p in sub.choices.values():
        p.add_argument("--out", help="output directory (overrides the config's output)")
        p.add_argument("--seed", type=int, help="simulation seed")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        raw = {}
        if args.config:
            raw = yaml.safe_load(Path(args.config).read_text(encoding="utf-8")) or {}
            if not isinstance(raw, dict):
                raise SchemaError("<document>", "expected a mapping")
        raw = apply_overrides(raw, args.override)
        if args.seed is not None:
            raw.setdefault("sim", {})
            raw["sim"] = {**(raw["sim"] or {}), "seed": args.seed}
        if args.command == "repro":
            report = run_scenario(args.name, raw)
        else:
            report = run(config_from_dict(raw), args.command)
    except (SchemaError, ValueError, OSError, yaml.YAMLError) as exc:
        if isinstance(exc, ModelError):
            print(f"model constraint violated: {exc}", file=sys.stderr)
            return 3
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ModelError as exc:
        print(f"model constraint violated: {exc}", file=sys.stderr)
        return 3

    out = args.out or report.config.output
    if out:
        report.write(out)
    sys.stdout.write(report.summary())
    return 0


if __name__ == "__main__":
    sys.exit(main())
