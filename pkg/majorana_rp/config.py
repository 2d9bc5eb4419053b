"""
Model configs: a TOML document with `geometry`, `hamiltonian`, `spin_model`
and `run` sections.

Example:

    [geometry]
    chain = {sites_per_side = 1, flavors = 1}

    [hamiltonian]
    h_minus = []
    cross = [{subset = [1], J = -1.0}]
    h_plus = "mirror"
    beta = 1.0

    [run]
    beta = [0.5, 1.0, 2.0]
    seed = {{$dotenv RP_SEED}}

An explicit reflection table replaces `chain` with `pairs` and `side`:

    [geometry]
    pairs = [[1, 3], [2, 4]]
    side = {"1" = "minus", "2" = "minus", "3" = "plus", "4" = "plus"}
    flavors = 2

`run.beta` sweeps override `hamiltonian.beta`. `{{$dotenv NAME}}`
placeholders are filled from the `.env` and `*.env` files next to the config
before the TOML is decoded.
"""
import logging
import math
import os.path
import sys
from dataclasses import dataclass, field, replace
from glob import glob
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from dotenv import dotenv_values

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import clifford, hamiltonian
from .clifford import CliffordElement, CliffordError, Parity, Support
from .geometry import GeometryError, ReflectionGeometry, build_chain, from_pairs
from .hamiltonian import MIRROR, CrossTerm, HamiltonianError, HamiltonianSpec
from .matrix_rep import manager
from .spin_bridge import ModelKind, SpinModelError, build_spin_cross_terms

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv")
DEFAULT_TROTTER_STEPS = (2, 4, 8, 16, 32, 64, 128, 256, 512, 1024)

GEOMETRY_KEYS = ("chain", "pairs", "side", "flavors")
CHAIN_KEYS = ("sites_per_side", "flavors")
HAMILTONIAN_KEYS = ("h_minus", "cross", "h_plus", "beta", "random")
RANDOM_KEYS = ("cross_terms", "h_minus_terms", "admissible", "asymmetric")
SPIN_MODEL_KEYS = ("kind", "bonds")
RUN_KEYS = ("beta", "tol", "seed", "out", "format", "k", "samples", "pairs")
MONOMIAL_KEYS = ("indices", "re", "im")
CROSS_KEYS = ("subset", "J", "coupling")
PAIR_KEYS = ("a", "b")

Pair = Tuple[CliffordElement, CliffordElement]


class ConfigError(Exception):
    def __init__(self, violations: Sequence[str]) -> None:
        super().__init__("Invalid model config:\n  " + "\n  ".join(violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class RunOptions:
    betas: Tuple[float, ...] = (1.0,)
    tol: float = 1e-10
    seed: Optional[int] = None
    out: Path = Path(".")
    format: str = "json"
    ks: Tuple[int, ...] = DEFAULT_TROTTER_STEPS
    samples: int = 8
    # explicit (A, B) pairs for the bounds, checked before the sampled ones
    pairs: Tuple[Pair, ...] = ()


@dataclass(frozen=True)
class ModelConfig:
    geometry: ReflectionGeometry
    spec: HamiltonianSpec
    run: RunOptions = field(default_factory=RunOptions)
    spin_kind: Optional[ModelKind] = None
    source: Optional[Path] = None

    def specs(self) -> List[HamiltonianSpec]:
        return [self.spec.with_beta(beta) for beta in self.run.betas]

    def with_overrides(self, **overrides: Any) -> "ModelConfig":
        """Replace run options; None values leave the config's value alone."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, run=replace(self.run, **changes))


def read_dotenv_vars(folder: Path) -> Dict[str, Optional[str]]:
    dotenv_file_paths = []
    path = os.path.join(folder, ".env")
    if os.path.exists(path):
        dotenv_file_paths.append(path)
    for env_file_path in sorted(glob(os.path.join(folder, "*.env"))):
        dotenv_file_paths.append(env_file_path)

    dotenv_vars: Dict[str, Optional[str]] = {}
    for dotenv_file_path in dotenv_file_paths:
        dotenv_vars.update(dotenv_values(dotenv_file_path))
    return dotenv_vars


def apply_variable_substitution(text: str, dotenv_vars: Mapping[str, Optional[str]]) -> str:
    for name, value in dotenv_vars.items():
        text = text.replace("{{$dotenv %s}}" % name, value if value is not None else "")
    return text


def load_config(path: Path, seed: Optional[int] = None) -> ModelConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror or exc}"]) from exc
    text = apply_variable_substitution(text, read_dotenv_vars(path.parent))
    try:
        document = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    config = parse_config(document, seed)
    logger.debug("Loaded %s: %d Majoranas", path, config.geometry.num_majoranas)
    return replace(config, source=path)


class _Reader:
    """Typed lookups that record every problem instead of stopping at the first."""

    def __init__(self) -> None:
        self.violations: List[str] = []

    def section(self, document: Mapping[str, Any], name: str, required: bool) -> Dict[str, Any]:
        value = document.get(name)
        if value is None:
            if required:
                self.violations.append(f"{name}: section is required")
            return {}
        if not isinstance(value, dict):
            self.violations.append(f"{name}: must be a table")
            return {}
        return value

    def unknown_keys(
        self, table: Mapping[str, Any], dotted: str, allowed: Sequence[str]
    ) -> None:
        for key in sorted(set(table) - set(allowed)):
            self.violations.append(f"{dotted}.{key}: unknown key")

    def get(
        self,
        table: Mapping[str, Any],
        dotted: str,
        kind: Any,
        default: Any = None,
        required: bool = False,
    ) -> Any:
        key = dotted.rsplit(".", 1)[-1]
        if key not in table:
            if required:
                self.violations.append(f"{dotted}: is required")
            return default
        value = table[key]
        # bool is an int subclass
        if isinstance(value, bool) and kind is not bool:
            self.violations.append(f"{dotted}: expected {_kind_name(kind)}, got {value!r}")
            return default
        if kind is float and isinstance(value, int):
            return float(value)
        if not isinstance(value, kind):
            self.violations.append(f"{dotted}: expected {_kind_name(kind)}, got {value!r}")
            return default
        return value

    def number_list(
        self, table: Mapping[str, Any], dotted: str, kind: Any
    ) -> Optional[List[Any]]:
        key = dotted.rsplit(".", 1)[-1]
        if key not in table:
            return None
        value = table[key]
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [value]
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            self.violations.append(f"{dotted}: expected a list of numbers, got {value!r}")
            return None
        if kind is int and not all(isinstance(v, int) for v in value):
            self.violations.append(f"{dotted}: expected a list of integers, got {value!r}")
            return None
        return [kind(v) for v in value]


def _kind_name(kind: Any) -> str:
    names = {
        str: "a string",
        int: "an integer",
        float: "a number",
        bool: "a boolean",
        list: "a list",
        dict: "a table",
    }
    return names.get(kind, str(kind))


def parse_config(document: Mapping[str, Any], seed: Optional[int] = None) -> ModelConfig:
    """Build a model from a decoded document; `seed` overrides `run.seed`."""
    reader = _Reader()
    unknown = sorted(set(document) - {"geometry", "hamiltonian", "spin_model", "run"})
    for name in unknown:
        reader.violations.append(f"{name}: unknown section")

    run_table = reader.section(document, "run", required=False)
    run = _parse_run(reader, run_table)
    if seed is not None:
        run = replace(run, seed=seed)
    geometry = _parse_geometry(reader, reader.section(document, "geometry", required=True))
    ham = reader.section(document, "hamiltonian", required=False)
    spin = reader.section(document, "spin_model", required=False)
    reader.unknown_keys(ham, "hamiltonian", HAMILTONIAN_KEYS)
    reader.unknown_keys(spin, "spin_model", SPIN_MODEL_KEYS)

    ham_beta = reader.get(ham, "hamiltonian.beta", float)
    if ham_beta is not None:
        if not (math.isfinite(ham_beta) and ham_beta > 0):
            reader.violations.append(f"hamiltonian.beta: must be positive, got {ham_beta}")
        elif "beta" not in run_table:
            run = replace(run, betas=(ham_beta,))

    sources = [name for name in ("cross", "random") if name in ham]
    if spin:
        sources.append("spin_model")
    if len(sources) > 1:
        reader.violations.append(
            f"hamiltonian: give exactly one of cross, random or spin_model, got {sources}"
        )
    elif not sources:
        reader.violations.append("hamiltonian.cross: required unless spin_model is given")
    if "random" in ham and run.seed is None:
        reader.violations.append("run.seed: required for a random hamiltonian")

    spin_kind = None
    if spin:
        spin_kind = _parse_spin_kind(reader, spin)

    # everything below needs index ranges from the geometry
    if geometry is None:
        raise ConfigError(reader.violations or ["geometry: could not be built"])

    pairs = _parse_pairs(reader, run_table.get("pairs", []), geometry)
    run = replace(run, pairs=tuple(pairs))
    spec = _build_spec(reader, geometry, ham, spin, spin_kind, run)
    if reader.violations or spec is None:
        raise ConfigError(reader.violations)
    return ModelConfig(geometry, spec, run, spin_kind)


def _parse_run(reader: _Reader, table: Mapping[str, Any]) -> RunOptions:
    reader.unknown_keys(table, "run", RUN_KEYS)
    options: Dict[str, Any] = {}
    betas = reader.number_list(table, "run.beta", float)
    if betas is not None:
        bad = [b for b in betas if not (math.isfinite(b) and b > 0)]
        if not betas or bad:
            reader.violations.append(f"run.beta: values must be positive, got {betas}")
        options["betas"] = tuple(betas)
    tol = reader.get(table, "run.tol", float)
    if tol is not None:
        if tol <= 0:
            reader.violations.append(f"run.tol: must be positive, got {tol}")
        options["tol"] = tol
    seed = reader.get(table, "run.seed", int)
    if seed is not None:
        options["seed"] = seed
    out = reader.get(table, "run.out", str)
    if out is not None:
        options["out"] = Path(out)
    fmt = reader.get(table, "run.format", str)
    if fmt is not None:
        if fmt not in FORMATS:
            reader.violations.append(f"run.format: expected one of {FORMATS}, got {fmt!r}")
        options["format"] = fmt
    ks = reader.number_list(table, "run.k", int)
    if ks is not None:
        if not ks or any(k < 1 for k in ks):
            reader.violations.append(f"run.k: step counts must be at least 1, got {ks}")
        options["ks"] = tuple(ks)
    samples = reader.get(table, "run.samples", int)
    if samples is not None:
        if samples < 0:
            reader.violations.append(f"run.samples: must not be negative, got {samples}")
        options["samples"] = samples
    return RunOptions(**options)


def _parse_geometry(reader: _Reader, table: Mapping[str, Any]) -> Optional[ReflectionGeometry]:
    if not table:
        return None
    reader.unknown_keys(table, "geometry", GEOMETRY_KEYS)
    forms = [name for name in ("chain", "pairs") if name in table]
    if len(forms) != 1:
        reader.violations.append(f"geometry: give exactly one of chain or pairs, got {forms}")
        return None
    cap = manager.max_modes
    try:
        if "chain" in table:
            for key in ("side", "flavors"):
                if key in table:
                    reader.violations.append(f"geometry.{key}: only used with pairs")
            chain = reader.get(table, "geometry.chain", dict)
            if chain is None:
                return None
            reader.unknown_keys(chain, "geometry.chain", CHAIN_KEYS)
            sites_per_side = reader.get(
                chain, "geometry.chain.sites_per_side", int, required=True
            )
            flavors = reader.get(chain, "geometry.chain.flavors", int, default=1)
            if sites_per_side is None:
                return None
            return build_chain(sites_per_side, flavors, cap=cap)

        pairs = reader.get(table, "geometry.pairs", list)
        side = reader.get(table, "geometry.side", dict, required=True)
        flavors = reader.get(table, "geometry.flavors", int, default=1)
        if pairs is None or side is None:
            return None
        return from_pairs([(int(a), int(b)) for a, b in pairs], side, flavors, cap=cap)
    except GeometryError as exc:
        reader.violations.append(f"geometry: {exc}")
    except (TypeError, ValueError) as exc:
        reader.violations.append(f"geometry.pairs: expected [site, site] pairs ({exc})")
    return None


def _parse_spin_kind(reader: _Reader, table: Mapping[str, Any]) -> Optional[ModelKind]:
    kind = reader.get(table, "spin_model.kind", str, required=True)
    if kind is None:
        return None
    try:
        return ModelKind(kind)
    except ValueError:
        choices = [k.value for k in ModelKind]
        reader.violations.append(f"spin_model.kind: expected one of {choices}, got {kind!r}")
        return None


def _parse_element(
    reader: _Reader, dotted: str, entries: Any, num_generators: int
) -> Optional[CliffordElement]:
    if not isinstance(entries, list):
        reader.violations.append(f"{dotted}: expected a list of monomials")
        return None
    triples = []
    for position, entry in enumerate(entries):
        where = f"{dotted}[{position}]"
        if not isinstance(entry, dict) or "indices" not in entry:
            reader.violations.append(f"{where}: expected {{indices, re, im}}")
            continue
        reader.unknown_keys(entry, where, MONOMIAL_KEYS)
        triples.append((entry["indices"], entry.get("re", 0.0), entry.get("im", 0.0)))
    try:
        return hamiltonian.element_from_config(triples, num_generators)
    except (CliffordError, TypeError, ValueError) as exc:
        reader.violations.append(f"{dotted}: {exc}")
        return None


def _parse_cross(reader: _Reader, entries: Any) -> List[CrossTerm]:
    if not isinstance(entries, list):
        reader.violations.append("hamiltonian.cross: expected a list of {subset, J}")
        return []
    cross = []
    for position, entry in enumerate(entries):
        where = f"hamiltonian.cross[{position}]"
        if not isinstance(entry, dict):
            reader.violations.append(f"{where}: expected {{subset, J}}, got {entry!r}")
            continue
        reader.unknown_keys(entry, where, CROSS_KEYS)
        names = [name for name in ("J", "coupling") if name in entry]
        if len(names) != 1:
            reader.violations.append(f"{where}: give exactly one of J or coupling")
            continue
        try:
            cross.append(CrossTerm.of(entry["subset"], float(entry[names[0]])))
        except (KeyError, TypeError, ValueError) as exc:
            reader.violations.append(f"{where}: expected {{subset, J}} ({exc})")
    return cross


def _parse_pairs(
    reader: _Reader, entries: Any, geometry: ReflectionGeometry
) -> List[Pair]:
    if not isinstance(entries, list):
        reader.violations.append("run.pairs: expected a list of {a, b}")
        return []
    pairs = []
    n = geometry.num_majoranas
    for position, entry in enumerate(entries):
        where = f"run.pairs[{position}]"
        if not isinstance(entry, dict) or not {"a", "b"} <= set(entry):
            reader.violations.append(f"{where}: expected {{a, b}}")
            continue
        reader.unknown_keys(entry, where, PAIR_KEYS)
        elements = []
        for name in ("a", "b"):
            element = _parse_element(reader, f"{where}.{name}", entry[name], n)
            if element is None:
                continue
            if clifford.parity(element) is not Parity.EVEN:
                reader.violations.append(f"{where}.{name}: is not even")
            elif clifford.support_side(element, geometry) not in (Support.SCALAR, Support.MINUS):
                reader.violations.append(f"{where}.{name}: is not on the minus side")
            else:
                elements.append(element)
        if len(elements) == 2:
            pairs.append((elements[0], elements[1]))
    return pairs


def _parse_random(reader: _Reader, table: Mapping[str, Any]) -> Dict[str, Any]:
    reader.unknown_keys(table, "hamiltonian.random", RANDOM_KEYS)
    return {
        "cross_terms": reader.get(table, "hamiltonian.random.cross_terms", int, default=2),
        "h_minus_terms": reader.get(
            table, "hamiltonian.random.h_minus_terms", int, default=3
        ),
        "admissible": reader.get(table, "hamiltonian.random.admissible", bool, default=True),
        "asymmetric": reader.get(table, "hamiltonian.random.asymmetric", bool, default=False),
    }


def _build_spec(
    reader: _Reader,
    geometry: ReflectionGeometry,
    ham: Mapping[str, Any],
    spin: Mapping[str, Any],
    spin_kind: Optional[ModelKind],
    run: RunOptions,
) -> Optional[HamiltonianSpec]:
    n = geometry.num_majoranas
    beta = run.betas[0] if run.betas else 1.0
    if "random" in ham:
        table = reader.get(ham, "hamiltonian.random", dict)
        if table is None:
            return None
        before = len(reader.violations)
        options = _parse_random(reader, table)
        if len(reader.violations) > before or run.seed is None:
            return None
        try:
            return hamiltonian.random_spec(
                geometry, np.random.default_rng(run.seed), beta=beta, **options
            )
        except (HamiltonianError, TypeError, ValueError) as exc:
            reader.violations.append(f"hamiltonian.random: {exc}")
            return None

    h_minus = _parse_element(reader, "hamiltonian.h_minus", ham.get("h_minus", []), n)
    h_plus: Any = ham.get("h_plus", MIRROR)
    if h_plus != MIRROR:
        h_plus = _parse_element(reader, "hamiltonian.h_plus", h_plus, n)

    if spin_kind is not None:
        bonds = reader.get(spin, "spin_model.bonds", list, required=True) or []
        try:
            cross = list(
                build_spin_cross_terms(spin_kind, [(int(a), int(b)) for a, b in bonds], geometry)
            )
        except SpinModelError as exc:
            reader.violations.append(f"spin_model: {exc}")
            return None
        except (TypeError, ValueError) as exc:
            reader.violations.append(f"spin_model.bonds: expected [site, site] pairs ({exc})")
            return None
    else:
        cross = _parse_cross(reader, ham.get("cross", []))

    if h_minus is None or h_plus is None:
        return None
    spec = HamiltonianSpec(geometry, h_minus, tuple(cross), h_plus, beta)
    reader.violations.extend(
        f"hamiltonian: {v}" for v in hamiltonian.structural_violations(spec)
    )
    return spec
