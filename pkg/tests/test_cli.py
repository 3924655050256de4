import csv
import io
import json

import pytest

from sluggish import NonIntegerRatio
from sluggish.cli import (
    SCENARIOS,
    ExperimentConfig,
    SchemaError,
    apply_overrides,
    config_from_dict,
    main,
    parse_config,
    run,
    run_scenario,
)


def test_minimal_config_defaults():
    cfg = parse_config("{mu: 3, c: 0.4, trainer: {type: prop1}, agent: myopic}")
    assert cfg.params.epsilon == 0.01 and cfg.params.delta == 0.999
    assert cfg.trainer == {"type": "prop1"}
    assert cfg.agent == "myopic" and cfg.sim is None


def test_prop2_defaults_and_errors():
    cfg = parse_config("mu: 2\nc: 0.25\ntrainer: prop2\nagent: patient\nsim: {}\n")
    assert cfg.trainer["margin"] == 0.001
    assert (cfg.sim.T, cfg.sim.seed, cfg.sim.m0) == (1_000_000, 0, 0)
    with pytest.raises(NonIntegerRatio):
        parse_config("{mu: 2, c: 0.3, trainer: {type: prop2}}")
    with pytest.raises(ValueError, match="exceeds epsilon"):
        parse_config("{mu: 2, c: 0.25, trainer: {type: prop2, margin: 0.01}, epsilon: 0.01}")


@pytest.mark.parametrize(
    "text, path",
    [
        ("{mu: 3, c: 0.4, trainer: {type: prop1}, colour: red}", "colour"),
        ("{mu: 3, c: 0.4, trainer: {type: prop1, beta: 0.5}}", "trainer.beta"),
        ("{mu: 3, c: 0.4, trainer: {type: spiral}}", "trainer.type"),
        ("{mu: three, c: 0.4, trainer: {type: prop1}}", "mu"),
        ("{mu: 3, c: 0.4, trainer: {type: cycle, sequence: [1, x]}}", "trainer.sequence[1]"),
        ("{mu: 3, c: 0.4, trainer: {type: prop1}, sim: {T: 10, speed: 2}}", "sim.speed"),
        ("{mu: 3, c: 0.4}", "trainer"),
        ("{mu: 3, c: 0.4, trainer: prop1, agent: lazy}", "agent"),
    ],
)
def test_schema_errors_name_the_key(text, path):
    with pytest.raises(SchemaError) as exc:
        parse_config(text)
    assert exc.value.path == path


def test_invariant_errors_are_value_errors():
    with pytest.raises(ValueError):
        parse_config("{mu: 3, c: 1.5, trainer: prop1}")
    with pytest.raises(ValueError):
        parse_config("{mu: 3, c: 0.5, trainer: prop1, sim: {T: 0}}")


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_round_trip(name):
    cfg = config_from_dict(SCENARIOS[name])
    again = config_from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    report = run_scenario(name, {"sim": {"T": 2000}} if cfg.sim else None)
    echoed = json.loads(report.to_json())["config"]
    assert config_from_dict(echoed) == report.config


def test_all_trainer_kinds_round_trip():
    docs = [
        "{mu: 2, c: 0.5, trainer: {type: constant}}",
        "{mu: 2, c: 0.5, trainer: {type: cycle, sequence: [4, 0]}}",
        "{mu: 2, c: 0.5, trainer: {type: two_state, d_low: 0, d_high: 4, alpha: 1, beta: 0.99}}",
        "{mu: 2, c: 0.5, trainer: {type: matrix, transitions: [[0, 1], [0.9, 0.1]], intensity: [0, 4]}}",
        "{mu: 2, c: 0.5, trainer: prop1, agent: {type: patient, delta: 0.9}, search: {d_grid: [0, 4], prob_grid: [1.0]}}",
    ]
    for doc in docs:
        cfg = parse_config(doc)
        assert config_from_dict(cfg.to_dict()) == cfg
        cfg.build_policy()


def test_overrides():
    raw = apply_overrides({"mu": 2, "trainer": "prop1"}, ["mu=5", "trainer.margin=0.002", "sim.seed=4"])
    assert raw == {"mu": 5, "trainer": {"type": "prop1", "margin": 0.002}, "sim": {"seed": 4}}
    with pytest.raises(SchemaError):
        apply_overrides({}, ["nonsense"])


def test_scenario_reports():
    r1 = run_scenario("prop1", {"mu": 3, "sim": {"T": 20000}}).to_dict()
    assert r1["mass_stats"]["min_mass"] == 5
    assert r1["flow_identity_residual"] < 1e-9
    r2 = run_scenario("prop2", {"sim": None}).to_dict()
    assert r2["mass_stats"]["min_mass"] == 7
    r3 = run_scenario("flexible-benchmark", {"mu": 3}).to_dict()
    assert r3["mass_stats"]["min_mass"] == r3["mass_stats"]["max_mass"] == 3
    assert r3["both_agents"]["myopic"] == {"min_mass": 3, "max_mass": 3}
    r4 = run_scenario("cycle-counterexample").to_dict()
    assert r4["periodic_plan"]["min_mass"] <= 9
    assert r4["stochastic_contrast"]["min_mass"] == 10
    with pytest.raises(SchemaError):
        run_scenario("prop3")


def _strip_clock(text):
    d = json.loads(text)
    d.pop("wall_clock_seconds")
    return d


def test_reports_are_reproducible(tmp_path):
    cfg = parse_config("{mu: 3, c: 0.4, trainer: prop1, sim: {T: 5000, seed: 9}}")
    a = run(cfg, "simulate")
    b = run(cfg, "simulate")
    assert _strip_clock(a.to_json()) == _strip_clock(b.to_json())
    a.write(tmp_path / "a")
    b.write(tmp_path / "b")
    for name in ("mass_marginal.csv",):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ja = (tmp_path / "a" / "report.json").read_text().splitlines()
    jb = (tmp_path / "b" / "report.json").read_text().splitlines()
    assert [l for l in ja if "wall_clock" not in l] == [l for l in jb if "wall_clock" not in l]


def test_marginal_csv_format():
    rep = run(parse_config("{mu: 3, c: 0.4, trainer: prop1}"))
    rows = list(csv.reader(io.StringIO(rep.marginal_csv())))
    assert rows[0] == ["mass", "probability"]
    masses = [int(r[0]) for r in rows[1:]]
    assert masses == sorted(masses) == list(range(7))
    assert sum(float(r[1]) for r in rows[1:]) == pytest.approx(1.0)


def test_main_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.yaml"
    good.write_text("mu: 2\nc: 0.25\ntrainer: {type: prop2}\nagent: patient\n")
    out = tmp_path / "out"
    assert main(["analyze", "--config", str(good), "--out", str(out)]) == 0
    assert {p.name for p in out.iterdir()} == {"report.txt", "report.json", "mass_marginal.csv"}
    assert json.loads((out / "report.json").read_text())["mass_stats"]["min_mass"] == 7

    bad = tmp_path / "bad.yaml"
    bad.write_text("mu: 2\nc: 0.3\ntrainer: {type: prop2}\n")
    assert main(["analyze", "--config", str(bad)]) == 2
    assert main(["analyze", "--config", str(tmp_path / "missing.yaml")]) == 2

    multi = tmp_path / "multi.yaml"
    multi.write_text("mu: 2\nc: 0.25\ntrainer: {type: two_state, d_low: 0, d_high: 4, alpha: 1, beta: 1}\n")
    assert main(["analyze", "--config", str(multi)]) == 3
    capsys.readouterr()


def test_main_simulate_search_and_repro(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("mu: 2\nc: 0.25\ntrainer: prop1\nsim: {T: 3000}\nsearch: {d_grid: [0, 2, 4], prob_grid: [0.5, 0.999, 1.0]}\n")
    assert main(["simulate", "--config", str(cfg), "--seed", "5", "--out", str(tmp_path / "s")]) == 0
    rep = json.loads((tmp_path / "s" / "report.json").read_text())
    assert rep["simulation"]["seed"] == 5 and rep["config"]["sim"]["seed"] == 5
    assert main(["search", "--config", str(cfg), "--out", str(tmp_path / "q")]) == 0
    table = list(csv.DictReader((tmp_path / "q" / "search_table.csv").open()))
    assert len(table) == 3 * 9
    assert json.loads((tmp_path / "q" / "report.json").read_text())["search"]["best_min_mass"] == 3
    assert main(["repro", "flexible-benchmark", "--override", "mu=5", "--out", str(tmp_path / "r")]) == 0
    assert json.loads((tmp_path / "r" / "report.json").read_text())["mass_stats"]["min_mass"] == 5
    assert "min_mass: 5" in capsys.readouterr().out
