import functools
import logging
import os
import sys
import threading
import traceback
from pathlib import Path
from time import perf_counter
from typing import Any, Callable, Generic, List, Optional, Sequence, Tuple, TypeVar

import click
import numpy as np

from . import __version__, clifford, report
from .clifford import CliffordElement, CliffordError
from .config import ConfigError, ModelConfig, load_config
from .geometry import GeometryError, Side, build_chain
from .gibbs_rp import (
    BoundsReport,
    GibbsError,
    RPReport,
    Verdict,
    certify_rp,
    check_bounds,
    counterexample_value,
)
from .hamiltonian import (
    MIRROR,
    HamiltonianError,
    HamiltonianSpec,
    random_even_element,
)
from .matrix_rep import RepresentationError, manager
from .spin_bridge import ModelKind, SpinModelError, build_spin_model
from .trotter import TrotterError, convergence_table

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s"
# manager settings read from the environment
SETTINGS_ENV = {
    "max_modes": "MAJORANA_RP_MAX_MODES",
    "max_action_bytes": "MAJORANA_RP_MAX_ACTION_BYTES",
}

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAILED = 2

COUNTEREXAMPLE_TOL = 1e-12
RATIO_RANGE = (1.7, 2.3)
EXACT_SPLIT_TOL = 1e-12
SPIN_BETAS = "0.5,1,2"

DOMAIN_ERRORS = (
    ConfigError,
    CliffordError,
    RepresentationError,
    GeometryError,
    HamiltonianError,
    GibbsError,
    TrotterError,
    SpinModelError,
)

T = TypeVar("T")


class CliError(Exception):
    pass


class BetaThread(threading.Thread, Generic[T]):
    """Runs one computation for one spec, recording its result or error."""

    def __init__(self, target: Callable[[HamiltonianSpec], T], spec: HamiltonianSpec) -> None:
        super().__init__()
        self.target = target
        self.spec = spec
        self.success: Optional[bool] = None
        self.result: Optional[T] = None
        self.error: Optional[Tuple[Exception, str]] = None
        self.elapsed = 0.0

    def run(self) -> None:
        self._start = perf_counter()
        try:
            self.result = self.target(self.spec)
            self.success = True
        except Exception as exc:
            self.error = (exc, traceback.format_exc())
            self.success = False
        finally:
            self._end = perf_counter()
            self.elapsed = self._end - self._start

    def get_result(self) -> T:
        if self.success is None or self.result is None:
            raise CliError("Attempted to retrieve result before completion")
        return self.result

    def get_error(self) -> Tuple[Exception, str]:
        if self.success is None or self.error is None:
            raise CliError("Attempted to retrieve error before completion")
        return self.error


def run_per_beta(
    target: Callable[[HamiltonianSpec], T], specs: Sequence[HamiltonianSpec]
) -> List[T]:
    """Evaluate every spec on its own thread; results come back in input order."""
    threads = [BetaThread(target, spec) for spec in specs]
    for thread in threads:
        thread.start()
    results = []
    for thread in threads:
        thread.join()
        if not thread.success:
            exc, trace = thread.get_error()
            logger.debug("beta=%g failed:\n%s", thread.spec.beta, trace)
            raise exc
        logger.debug("beta=%g finished in %.3f seconds", thread.spec.beta, thread.elapsed)
        results.append(thread.get_result())
    return results


def parse_list(value: Optional[str], kind: Callable[[str], T], name: str) -> Optional[Tuple[T, ...]]:
    if value is None:
        return None
    try:
        return tuple(kind(item) for item in value.split(",") if item.strip())
    except ValueError as exc:
        raise ConfigError([f"--{name}: {exc}"]) from exc


def exits_on_error(command: Callable[..., int]) -> Callable[..., None]:
    """Map domain errors to exit code 1 and returned codes to the process exit."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> None:
        try:
            code = command(*args, **kwargs)
        except DOMAIN_ERRORS as exc:
            click.echo(f"Error: {exc}", err=True)
            sys.exit(EXIT_ERROR)
        sys.exit(code)

    return wrapper


def model_options(command: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option(
            "--config",
            "config_path",
            type=click.Path(dir_okay=False, path_type=Path),
            help="Model config (TOML).",
        ),
        click.option("--beta", help="Comma-separated inverse temperatures."),
        click.option("--tol", type=float, help="Relative PSD / slack tolerance."),
        click.option("--seed", type=int, help="Seed for randomized models and samples."),
        click.option("--out", type=click.Path(file_okay=False, path_type=Path)),
        click.option("--format", "fmt", type=click.Choice(["json", "csv"])),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def load_model(
    config_path: Optional[Path],
    beta: Optional[str],
    tol: Optional[float],
    seed: Optional[int],
    out: Optional[Path],
    fmt: Optional[str],
) -> ModelConfig:
    if config_path is None:
        raise ConfigError(["--config: a model config is required"])
    config = load_config(config_path, seed=seed)
    return config.with_overrides(
        betas=parse_list(beta, float, "beta"), tol=tol, seed=seed, out=out, format=fmt
    )


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger(__package__).setLevel(logging.DEBUG if verbose else logging.WARNING)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log debug output to stderr.")
@click.version_option(version=__version__)
def cli(verbose: bool) -> None:
    """Exact reflection-positivity checks for Majorana lattice models."""
    _configure_logging(verbose)
    for key, name in SETTINGS_ENV.items():
        value = os.environ.get(name)
        if not value:
            continue
        try:
            manager.configure({key: int(value)})
        except ValueError:
            click.echo(f"Error: {name}={value!r} is not an integer", err=True)
            sys.exit(EXIT_ERROR)


def _verdict_code(reports: Sequence[RPReport]) -> int:
    if any(r.verdict is Verdict.INVALID for r in reports):
        return EXIT_ERROR
    if any(r.verdict is Verdict.INDEFINITE for r in reports):
        return EXIT_FAILED
    return EXIT_OK


def _describe(report_: RPReport) -> str:
    return (
        f"beta={report_.beta:g} verdict={report_.verdict.value} "
        f"min_eigenvalue={report_.min_eigenvalue:.6e} couplings={report_.classification}"
    )


@cli.command()
@model_options
@exits_on_error
def certify(**options: Any) -> int:
    """Certify the Gibbs functional positive on the minus-side even algebra."""
    config = load_model(**options)
    tol = config.run.tol
    reports = run_per_beta(lambda spec: certify_rp(spec, tol), config.specs())
    for item in reports:
        click.echo(_describe(item))

    source = str(config.source)
    if config.run.format == "csv":
        report.write(config.run.out, "certify.csv", report.spectrum_csv(reports))
    else:
        payload = report.certify_payload(source, reports)
        report.write(config.run.out, "certify.json", report.format_json(payload))
    return _verdict_code(reports)


@cli.command()
@click.option("--beta", type=float, default=1.0, show_default=True)
@exits_on_error
def counterexample(beta: float) -> int:
    """Evaluate Tr(c1 ϑ(c1) e^{-βH}) for H = -i c1 ϑ(c1) against -2i sinh(β)."""
    value, target = counterexample_value(beta)
    deviation = abs(value - target)
    click.echo(f"value:     {value.real!r} {value.imag!r}i")
    click.echo(f"target:    {target.real!r} {target.imag!r}i")
    click.echo(f"deviation: {deviation:.3e}")
    return EXIT_OK if deviation <= COUNTEREXAMPLE_TOL else EXIT_FAILED


@cli.command()
@model_options
@click.option("--k", "ks", help="Comma-separated Trotter step counts.")
@exits_on_error
def trotter(ks: Optional[str], **options: Any) -> int:
    """Operator-norm error of the Lie product approximant per step count."""
    config = load_model(**options).with_overrides(ks=parse_list(ks, int, "k"))
    rows = convergence_table(config.spec.with_beta(config.run.betas[0]), config.run.ks)
    text = report.trotter_csv(rows)
    click.echo(text, nl=False)
    report.write(config.run.out, "trotter.csv", text)

    final = rows[-1]
    low, high = RATIO_RANGE
    if final.error <= EXACT_SPLIT_TOL or low <= final.ratio <= high:
        return EXIT_OK
    return EXIT_FAILED


def bound_pairs(config: ModelConfig) -> List[Tuple[CliffordElement, CliffordElement]]:
    """The config's explicit pairs followed by `run.samples` seeded random ones."""
    pairs = list(config.run.pairs)
    if not config.run.samples:
        return pairs
    if config.run.seed is None:
        raise ConfigError(
            [f"run.seed: required to sample {config.run.samples} pairs (or set run.samples = 0)"]
        )
    rng = np.random.default_rng(config.run.seed)
    g = config.geometry
    pairs.extend(
        (
            random_even_element(g, Side.MINUS, rng),
            random_even_element(g, Side.MINUS, rng),
        )
        for _ in range(config.run.samples)
    )
    return pairs


@cli.command()
@model_options
@exits_on_error
def bounds(**options: Any) -> int:
    """Reflection bounds for Hamiltonians with independent halves."""
    config = load_model(**options)
    pairs = bound_pairs(config)
    results: List[BoundsReport] = run_per_beta(
        lambda spec: check_bounds(spec, pairs), config.specs()
    )
    for beta, item in zip(config.run.betas, results):
        status = "passed" if item.passed(config.run.tol) else "failed"
        click.echo(
            f"beta={beta:g} partition_slack={item.partition_slack:.6e} "
            f"min_slack={item.min_slack:.6e} {status}"
        )

    source = str(config.source)
    if config.run.format == "csv":
        report.write(config.run.out, "bounds.csv", report.bounds_csv(config.run.betas, results))
    else:
        payload = report.bounds_payload(source, config.run.betas, results)
        report.write(config.run.out, "bounds.json", report.format_json(payload))
    return EXIT_OK if all(item.passed(config.run.tol) for item in results) else EXIT_FAILED


@cli.command()
@click.option(
    "--kind",
    "kinds",
    multiple=True,
    type=click.Choice([kind.value for kind in ModelKind]),
    help="Interaction to certify; repeatable. Defaults to all three.",
)
@click.option("--beta", default=SPIN_BETAS, show_default=True)
@click.option("--tol", type=float, default=1e-10, show_default=True)
@click.option("--out", type=click.Path(file_okay=False, path_type=Path))
@exits_on_error
def spin(kinds: Sequence[str], beta: str, tol: float, out: Optional[Path]) -> int:
    """Certify one reflected spin bond for each interaction and beta."""
    betas = parse_list(beta, float, "beta") or ()
    geometry = build_chain(1, 4)
    n = geometry.num_majoranas
    code = EXIT_OK
    runs = []
    for kind in kinds or [k.value for k in ModelKind]:
        cross = tuple(build_spin_model(ModelKind(kind), (1, 2), geometry))
        spec = HamiltonianSpec(geometry, clifford.zero(n), cross, MIRROR)
        reports = run_per_beta(
            lambda s: certify_rp(s, tol), [spec.with_beta(b) for b in betas]
        )
        for item in reports:
            click.echo(f"{kind} {_describe(item)}")
            runs.append({"kind": kind, **item.to_dict()})
            if item.classification and item.classification.certified:
                code = max(code, _verdict_code([item]))
    if out is not None:
        report.write(out, "spin.json", report.format_json({"runs": runs}))
    return code