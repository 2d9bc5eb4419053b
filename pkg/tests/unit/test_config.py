from pathlib import Path

import numpy as np
import pytest

from majorana_rp import clifford, hamiltonian
from majorana_rp.config import (
    ConfigError,
    RunOptions,
    apply_variable_substitution,
    load_config,
    parse_config,
    read_dotenv_vars,
)
from majorana_rp.geometry import build_chain, from_pairs
from majorana_rp.hamiltonian import MIRROR, CrossTerm
from majorana_rp.matrix_rep import manager
from majorana_rp.spin_bridge import ModelKind, build_spin_model

COUNTEREXAMPLE = """
[geometry]
chain = {sites_per_side = 1, flavors = 1}

[hamiltonian]
h_minus = []
cross = [{subset = [1], J = -1.0}]
h_plus = "mirror"

[run]
beta = [0.5, 1.0, 2.0]
"""

PAIRS = """
[geometry]
pairs = [[1, 3], [2, 4]]
side = {"1" = "minus", "2" = "minus", "3" = "plus", "4" = "plus"}
flavors = 2

[hamiltonian]
cross = [{subset = [1, 2], J = -0.5}, {subset = [3], J = 1.0}]
beta = 2.0
"""

RANDOM = """
[geometry]
chain = {sites_per_side = 1, flavors = 2}

[hamiltonian]
random = {cross_terms = 2}

[run]
seed = {{$dotenv RP_SEED}}
"""

CHAIN = {"chain": {"sites_per_side": 1, "flavors": 1}}


def _write(folder: Path, text: str, name: str = "model.toml") -> Path:
    path = folder / name
    path.write_text(text, encoding="utf-8")
    return path


def _violations(document) -> list:
    with pytest.raises(ConfigError) as info:
        parse_config(document)
    return info.value.violations


def test_load_counterexample(tmp_path):
    path = _write(tmp_path, COUNTEREXAMPLE)
    config = load_config(path)

    assert config.source == path
    assert config.geometry == build_chain(1, 1)
    assert config.spec.cross == (CrossTerm.of([1], -1.0),)
    assert config.spec.h_minus.is_zero()
    assert config.spec.h_plus == MIRROR
    assert [spec.beta for spec in config.specs()] == [0.5, 1.0, 2.0]
    assert config.run.format == "json"
    assert config.run.pairs == ()
    assert config.spin_kind is None


def test_load_pairs_geometry_with_hamiltonian_beta(tmp_path):
    config = load_config(_write(tmp_path, PAIRS))

    assert config.geometry == from_pairs(
        [(1, 3), (2, 4)], {1: "minus", 2: "minus", 3: "plus", 4: "plus"}, 2
    )
    assert config.spec.cross == (CrossTerm.of([1, 2], -0.5), CrossTerm.of([3], 1.0))
    assert config.run.betas == (2.0,)
    assert config.spec.beta == 2.0


def test_hamiltonian_beta_is_not_ignored():
    config = parse_config(
        {"geometry": CHAIN, "hamiltonian": {"cross": [{"subset": [1], "J": -1.0}], "beta": 2}}
    )

    assert [spec.beta for spec in config.specs()] == [2.0]


def test_run_beta_sweep_overrides_hamiltonian_beta():
    config = parse_config(
        {
            "geometry": CHAIN,
            "hamiltonian": {"cross": [], "beta": 2.0},
            "run": {"beta": [0.5, 1.0]},
        }
    )

    assert config.run.betas == (0.5, 1.0)


def test_hamiltonian_beta_must_be_positive():
    violations = _violations(
        {"geometry": CHAIN, "hamiltonian": {"cross": [], "beta": -1.0}}
    )

    assert any(v.startswith("hamiltonian.beta:") for v in violations)


def test_cross_accepts_coupling_alias():
    config = parse_config(
        {"geometry": CHAIN, "hamiltonian": {"cross": [{"subset": [1], "coupling": -1.0}]}}
    )

    assert config.spec.cross == (CrossTerm.of([1], -1.0),)


def test_cross_term_needs_exactly_one_coupling():
    violations = _violations(
        {
            "geometry": CHAIN,
            "hamiltonian": {
                "cross": [{"subset": [1]}, {"subset": [1], "J": -1.0, "coupling": -1.0}]
            },
        }
    )

    assert "hamiltonian.cross[0]: give exactly one of J or coupling" in violations
    assert "hamiltonian.cross[1]: give exactly one of J or coupling" in violations


def test_unknown_keys_are_reported_in_every_section():
    violations = _violations(
        {
            "geometry": {"chain": {"sites_per_side": 1, "flavors": 1, "width": 3}, "kind": "chain"},
            "hamiltonian": {
                "cross": [{"subset": [1], "J": -1.0, "sigma": 1}],
                "h_minus": [{"indices": [], "re": 1.0, "phase": 0}],
                "temperature": 1.0,
            },
            "run": {"color": True},
        }
    )

    assert "geometry.kind: unknown key" in violations
    assert "geometry.chain.width: unknown key" in violations
    assert "hamiltonian.temperature: unknown key" in violations
    assert "hamiltonian.cross[0].sigma: unknown key" in violations
    assert "hamiltonian.h_minus[0].phase: unknown key" in violations
    assert "run.color: unknown key" in violations


def test_flat_chain_keys_are_rejected():
    violations = _violations(
        {"geometry": {"sites_per_side": 1, "flavors": 1}, "hamiltonian": {"cross": []}}
    )

    assert "geometry.sites_per_side: unknown key" in violations
    assert "geometry: give exactly one of chain or pairs, got []" in violations


def test_chain_and_pairs_are_exclusive():
    violations = _violations(
        {
            "geometry": {**CHAIN, "pairs": [[1, 2]], "side": {"1": "minus", "2": "plus"}},
            "hamiltonian": {"cross": []},
        }
    )

    assert any(v.startswith("geometry: give exactly one of chain or pairs") for v in violations)


def test_chain_sites_are_required():
    violations = _violations({"geometry": {"chain": {"flavors": 2}}, "hamiltonian": {"cross": []}})

    assert "geometry.chain.sites_per_side: is required" in violations


def test_geometry_follows_representation_cap(monkeypatch):
    monkeypatch.setattr(manager, "max_modes", 2)
    violations = _violations(
        {"geometry": {"chain": {"sites_per_side": 3, "flavors": 1}}, "hamiltonian": {"cross": []}}
    )

    assert any("representation cap of 2 modes" in v for v in violations)


def test_dotenv_substitution(tmp_path):
    _write(tmp_path, "RP_SEED=7\n", ".env")
    config = load_config(_write(tmp_path, RANDOM))

    assert config.run.seed == 7
    assert config.spec == hamiltonian.random_spec(
        build_chain(1, 2), np.random.default_rng(7), cross_terms=2
    )


def test_later_env_files_win(tmp_path):
    _write(tmp_path, "RP_SEED=1\nOTHER=x\n", ".env")
    _write(tmp_path, "RP_SEED=2\n", "local.env")

    assert read_dotenv_vars(tmp_path) == {"RP_SEED": "2", "OTHER": "x"}


def test_substitution_of_empty_values():
    text = apply_variable_substitution("a = '{{$dotenv A}}'", {"A": None})

    assert text == "a = ''"


def test_seed_argument_overrides_config(tmp_path):
    _write(tmp_path, "RP_SEED=7\n", ".env")
    config = load_config(_write(tmp_path, RANDOM), seed=3)

    assert config.run.seed == 3
    assert config.spec == hamiltonian.random_spec(
        build_chain(1, 2), np.random.default_rng(3), cross_terms=2
    )


def test_random_hamiltonian_needs_a_seed():
    document = {
        "geometry": {"chain": {"sites_per_side": 1, "flavors": 2}},
        "hamiltonian": {"random": {}},
    }

    assert "run.seed: required for a random hamiltonian" in _violations(document)
    assert parse_config(document, seed=5).run.seed == 5


def test_random_options_are_checked():
    violations = _violations(
        {
            "geometry": {"chain": {"sites_per_side": 1, "flavors": 2}},
            "hamiltonian": {"random": {"cross_terms": "many", "shape": 1}},
            "run": {"seed": 1},
        }
    )

    assert "hamiltonian.random.shape: unknown key" in violations
    assert any(v.startswith("hamiltonian.random.cross_terms:") for v in violations)


def test_every_violation_is_reported():
    violations = _violations(
        {
            "geometry": CHAIN,
            "hamiltonian": {"cross": []},
            "run": {"beta": [-1.0], "format": "xml", "color": True},
            "extra": {},
        }
    )

    assert "extra: unknown section" in violations
    assert "run.color: unknown key" in violations
    assert any(v.startswith("run.beta:") for v in violations)
    assert any(v.startswith("run.format:") for v in violations)


def test_fixed_point_geometry():
    violations = _violations(
        {
            "geometry": {"pairs": [[1, 1]], "side": {"1": "minus"}},
            "hamiltonian": {"cross": []},
        }
    )

    assert any("fixed-point" in v for v in violations)


def test_pairs_need_sides():
    violations = _violations({"geometry": {"pairs": [[1, 2]]}, "hamiltonian": {"cross": []}})

    assert "geometry.side: is required" in violations


def test_geometry_is_required():
    assert "geometry: section is required" in _violations({"hamiltonian": {"cross": []}})


def test_exactly_one_hamiltonian_source():
    geometry = {"chain": {"sites_per_side": 1, "flavors": 4}}

    assert "hamiltonian.cross: required unless spin_model is given" in _violations(
        {"geometry": geometry}
    )
    violations = _violations(
        {
            "geometry": geometry,
            "hamiltonian": {"cross": []},
            "spin_model": {"kind": "ising", "bonds": [[1, 2]]},
        }
    )
    assert any("exactly one" in v for v in violations)


def test_spin_model_config():
    config = parse_config(
        {
            "geometry": {"chain": {"sites_per_side": 1, "flavors": 4}},
            "spin_model": {"kind": "rotator", "bonds": [[1, 2]]},
        }
    )

    assert config.spin_kind is ModelKind.ROTATOR
    assert list(config.spec.cross) == build_spin_model(
        ModelKind.ROTATOR, (1, 2), config.geometry
    )


def test_unknown_spin_kind():
    violations = _violations(
        {
            "geometry": {"chain": {"sites_per_side": 1, "flavors": 4}},
            "spin_model": {"kind": "xy", "bonds": [[1, 2]], "axis": "z"},
        }
    )

    assert any(v.startswith("spin_model.kind:") for v in violations)
    assert "spin_model.axis: unknown key" in violations


def test_structural_violations_are_config_errors():
    violations = _violations(
        {
            "geometry": {"chain": {"sites_per_side": 1, "flavors": 2}},
            "hamiltonian": {"h_minus": [{"indices": [1], "re": 1.0}], "cross": []},
        }
    )

    assert "hamiltonian: h_minus is not even" in violations


def test_explicit_h_plus():
    config = parse_config(
        {
            "geometry": {"chain": {"sites_per_side": 1, "flavors": 2}},
            "hamiltonian": {
                "h_minus": [{"indices": [1, 2], "im": 0.5}],
                "h_plus": [{"indices": [3, 4], "im": 0.25}],
                "cross": [{"subset": [1, 2], "J": -1}],
            },
        }
    )

    assert config.spec.h_minus == clifford.monomial([1, 2], 4, 0.5j)
    assert config.spec.h_plus == clifford.monomial([3, 4], 4, 0.25j)
    assert not config.spec.is_mirror


def test_explicit_bound_pairs():
    identity = [{"indices": [], "re": 1.0}]
    config = parse_config(
        {
            "geometry": {"chain": {"sites_per_side": 1, "flavors": 2}},
            "hamiltonian": {"cross": []},
            "run": {
                "pairs": [
                    {"a": identity, "b": identity},
                    {"a": [{"indices": [1, 2], "im": 1.0}], "b": identity},
                ]
            },
        }
    )

    assert config.run.pairs == (
        (clifford.identity(4), clifford.identity(4)),
        (clifford.monomial([1, 2], 4, 1j), clifford.identity(4)),
    )


def test_bound_pairs_must_be_even_on_the_minus_side():
    identity = [{"indices": [], "re": 1.0}]
    violations = _violations(
        {
            "geometry": {"chain": {"sites_per_side": 1, "flavors": 2}},
            "hamiltonian": {"cross": []},
            "run": {
                "pairs": [
                    {"a": [{"indices": [1], "re": 1.0}], "b": identity},
                    {"a": identity, "b": [{"indices": [3, 4], "re": 1.0}]},
                    {"a": identity},
                ]
            },
        }
    )

    assert "run.pairs[0].a: is not even" in violations
    assert "run.pairs[1].b: is not on the minus side" in violations
    assert "run.pairs[2]: expected {a, b}" in violations


def test_with_overrides_ignores_none():
    config = parse_config({"geometry": CHAIN, "hamiltonian": {"cross": []}})
    changed = config.with_overrides(betas=(2.0,), tol=None, out=Path("results"))

    assert changed.run.betas == (2.0,)
    assert changed.run.tol == RunOptions().tol
    assert changed.run.out == Path("results")


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[geometry\n"))
