import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from majorana_rp import __version__, clifford
from majorana_rp.cli import bound_pairs, cli, parse_list, run_per_beta
from majorana_rp.config import ConfigError, parse_config
from majorana_rp.gibbs_rp import counterexample_spec
from majorana_rp.matrix_rep import manager

COUNTEREXAMPLE = """
[geometry]
chain = {sites_per_side = 1, flavors = 1}

[hamiltonian]
cross = [{subset = [1], J = -1.0}]

[run]
beta = [0.5, 1.0, 2.0]
"""

FIXED_POINT = """
[geometry]
pairs = [[1, 1]]
side = {"1" = "minus"}

[hamiltonian]
cross = []
"""

COMMUTING_HALVES = """
[geometry]
chain = {sites_per_side = 1, flavors = 2}

[hamiltonian]
h_minus = [{indices = [1, 2], im = 0.7}]
cross = []

[run]
k = [2, 4, 8]
"""

ASYMMETRIC = """
[geometry]
chain = {sites_per_side = 1, flavors = 4}

[hamiltonian]
random = {cross_terms = 3, asymmetric = true}

[run]
seed = 5
samples = 4
beta = [0.5, 1.0]
"""

UNSEEDED_BOUNDS = """
[geometry]
chain = {sites_per_side = 1, flavors = 2}

[hamiltonian]
h_minus = [{indices = [1, 2], im = 0.3}]
h_plus = [{indices = [3, 4], im = -0.6}]
cross = [{subset = [1, 2], J = -0.5}]
"""

IDENTITY_PAIR = UNSEEDED_BOUNDS + """
[run]
samples = 0
pairs = [{a = [{indices = [], re = 1.0}], b = [{indices = [], re = 1.0}]}]
"""


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def _config(folder: Path, text: str) -> str:
    path = folder / "model.toml"
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_version(runner):
    result = runner.invoke(cli, ["--version"])

    assert result.exit_code == 0
    assert __version__ in result.output


def test_counterexample(runner):
    first = runner.invoke(cli, ["counterexample"])
    second = runner.invoke(cli, ["counterexample"])

    assert first.exit_code == 0
    assert first.output == second.output
    assert first.output.startswith("value:")
    assert "deviation:" in first.output


def test_counterexample_at_other_beta(runner):
    assert runner.invoke(cli, ["counterexample", "--beta", "2"]).exit_code == 0


def test_certify_writes_json(runner, tmp_path):
    config = _config(tmp_path, COUNTEREXAMPLE)
    out = tmp_path / "out"
    result = runner.invoke(cli, ["certify", "--config", config, "--out", str(out)])

    assert result.exit_code == 0, result.output
    assert result.output.count("verdict=positive") == 3
    payload = json.loads((out / "certify.json").read_text())
    assert payload["config"] == config
    assert [run["beta"] for run in payload["runs"]] == [0.5, 1.0, 2.0]
    assert all(run["verdict"] == "positive" for run in payload["runs"])


def test_certify_csv_with_beta_override(runner, tmp_path):
    config = _config(tmp_path, COUNTEREXAMPLE)
    result = runner.invoke(
        cli,
        ["certify", "--config", config, "--beta", "3", "--format", "csv", "--out", str(tmp_path)],
    )

    assert result.exit_code == 0, result.output
    lines = (tmp_path / "certify.csv").read_text().splitlines()
    assert lines[0] == "beta,index,eigenvalue"
    assert lines[1].startswith("3.0,0,")


def test_certify_output_is_deterministic(runner, tmp_path):
    config = _config(tmp_path, COUNTEREXAMPLE)
    texts = []
    for name in ("a", "b"):
        runner.invoke(cli, ["certify", "--config", config, "--out", str(tmp_path / name)])
        texts.append((tmp_path / name / "certify.json").read_text())

    assert texts[0] == texts[1]


def test_certify_rejects_fixed_points(runner, tmp_path):
    result = runner.invoke(
        cli, ["certify", "--config", _config(tmp_path, FIXED_POINT), "--out", str(tmp_path)]
    )

    assert result.exit_code == 1
    assert "fixed-point" in result.output
    assert not (tmp_path / "certify.json").exists()


def test_certify_needs_a_config(runner, tmp_path):
    assert runner.invoke(cli, ["certify"]).exit_code == 1
    missing = str(tmp_path / "missing.toml")
    assert runner.invoke(cli, ["certify", "--config", missing]).exit_code == 1


def test_trotter_on_counterexample(runner, tmp_path):
    config = _config(tmp_path, COUNTEREXAMPLE)
    result = runner.invoke(
        cli, ["trotter", "--config", config, "--k", "64,128,256", "--out", str(tmp_path)]
    )

    assert result.exit_code == 0, result.output
    assert result.output.splitlines()[0] == "k,error,ratio"
    assert (tmp_path / "trotter.csv").read_text() == result.output


def test_trotter_with_exact_split(runner, tmp_path):
    config = _config(tmp_path, COMMUTING_HALVES)
    result = runner.invoke(cli, ["trotter", "--config", config, "--out", str(tmp_path)])

    assert result.exit_code == 0, result.output
    assert len(result.output.splitlines()) == 4


def test_trotter_rejects_bad_step_list(runner, tmp_path):
    config = _config(tmp_path, COUNTEREXAMPLE)
    result = runner.invoke(cli, ["trotter", "--config", config, "--k", "2,x"])

    assert result.exit_code == 1
    assert "--k" in result.output


def test_bounds_on_asymmetric_model(runner, tmp_path):
    config = _config(tmp_path, ASYMMETRIC)
    result = runner.invoke(cli, ["bounds", "--config", config, "--out", str(tmp_path)])

    assert result.exit_code == 0, result.output
    assert result.output.count("passed") == 2
    payload = json.loads((tmp_path / "bounds.json").read_text())
    assert [len(run["pair_slacks"]) for run in payload["runs"]] == [4, 4]


def test_bounds_csv(runner, tmp_path):
    config = _config(tmp_path, ASYMMETRIC)
    result = runner.invoke(
        cli, ["bounds", "--config", config, "--format", "csv", "--out", str(tmp_path)]
    )

    assert result.exit_code == 0, result.output
    lines = (tmp_path / "bounds.csv").read_text().splitlines()
    assert lines[0] == "beta,bound,index,slack"
    # per beta: one partition row and four pairs on each side
    assert len(lines) == 1 + 2 * 9


def test_bounds_without_seed_is_rejected(runner, tmp_path):
    config = _config(tmp_path, UNSEEDED_BOUNDS)
    result = runner.invoke(cli, ["bounds", "--config", config, "--out", str(tmp_path)])

    assert result.exit_code == 1
    assert "run.seed" in result.output
    assert not (tmp_path / "bounds.json").exists()


def test_bounds_with_identity_pair(runner, tmp_path):
    config = _config(tmp_path, IDENTITY_PAIR)
    result = runner.invoke(cli, ["bounds", "--config", config, "--out", str(tmp_path)])

    assert result.exit_code == 0, result.output
    run = json.loads((tmp_path / "bounds.json").read_text())["runs"][0]
    assert len(run["pair_slacks"]) == 1
    # A = B = I reproduces the partition-function bound
    assert run["pair_slacks"][0] == pytest.approx(run["partition_slack"], abs=1e-9)


def test_bound_pairs_put_explicit_pairs_first(tmp_path):
    identity = [{"indices": [], "re": 1.0}]
    config = parse_config(
        {
            "geometry": {"chain": {"sites_per_side": 1, "flavors": 2}},
            "hamiltonian": {"cross": []},
            "run": {"seed": 3, "samples": 2, "pairs": [{"a": identity, "b": identity}]},
        }
    )
    pairs = bound_pairs(config)

    assert len(pairs) == 3
    assert pairs[0] == (clifford.identity(4), clifford.identity(4))
    assert bound_pairs(config) == pairs


def test_bound_pairs_need_a_seed_to_sample():
    config = parse_config(
        {"geometry": {"chain": {"sites_per_side": 1, "flavors": 2}}, "hamiltonian": {"cross": []}}
    )

    with pytest.raises(ConfigError):
        bound_pairs(config)
    assert bound_pairs(config.with_overrides(samples=0)) == []


def test_spin(runner, tmp_path):
    result = runner.invoke(cli, ["spin", "--out", str(tmp_path)])

    assert result.exit_code == 0, result.output
    lines = result.output.splitlines()
    assert len(lines) == 9
    assert all("verdict=positive" in line for line in lines if line.startswith("ising"))
    runs = json.loads((tmp_path / "spin.json").read_text())["runs"]
    assert {run["kind"] for run in runs} == {"ising", "rotator", "heisenberg"}


def test_spin_single_kind(runner):
    result = runner.invoke(cli, ["spin", "--kind", "rotator", "--beta", "1"])

    assert result.exit_code == 0, result.output
    assert result.output.startswith("rotator beta=1 verdict=positive")


def test_action_budget_from_environment(runner, monkeypatch):
    monkeypatch.setattr(manager, "max_action_bytes", manager.max_action_bytes)
    result = runner.invoke(
        cli, ["counterexample"], env={"MAJORANA_RP_MAX_ACTION_BYTES": "4096"}
    )

    assert result.exit_code == 0, result.output
    assert manager.max_action_bytes == 4096


def test_settings_must_be_integers(runner):
    result = runner.invoke(cli, ["counterexample"], env={"MAJORANA_RP_MAX_MODES": "many"})

    assert result.exit_code == 1
    assert "MAJORANA_RP_MAX_MODES" in result.output


def test_parse_list():
    assert parse_list(None, float, "beta") is None
    assert parse_list("0.5, 1,", float, "beta") == (0.5, 1.0)
    with pytest.raises(ConfigError):
        parse_list("a", int, "k")


def test_run_per_beta_keeps_order():
    specs = [counterexample_spec(beta) for beta in (2.0, 0.5, 1.0)]

    assert run_per_beta(lambda spec: spec.beta, specs) == [2.0, 0.5, 1.0]


def test_run_per_beta_reraises():
    def fail(spec):
        raise ValueError(spec.beta)

    with pytest.raises(ValueError):
        run_per_beta(fail, [counterexample_spec()])
