"""
Gibbs trace functionals Tr(A ϑ(B) e^{-H}) and reflection-positivity checks.

All functionals are evaluated as weighted traces against a precomputed
e^{-H}, with the operator A ϑ(B) kept in symbolic form.
"""
import enum
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from . import clifford, hamiltonian
from .clifford import CliffordElement, MonomialIndex
from .geometry import ReflectionGeometry, Side, build_chain
from .hamiltonian import CouplingVerdict, HamiltonianSpec
from .matrix_rep import DenseOperator, to_matrix, weighted_trace

logger = logging.getLogger(__name__)

SELF_ADJOINT_TOL = 1e-10
PSD_TOL = 1e-10
BOUND_TOL = 1e-10
MAX_SIDE_MAJORANAS = 8


class GibbsError(Exception):
    pass


class Verdict(str, enum.Enum):
    POSITIVE = "positive"
    INDEFINITE = "indefinite"
    INVALID = "invalid"


def gibbs_weight(h: CliffordElement) -> DenseOperator:
    """e^{-H} from the eigendecomposition of the Hermitian matrix of H."""
    if not clifford.is_self_adjoint(h, SELF_ADJOINT_TOL * max(1.0, h.max_abs())):
        raise GibbsError("Gibbs weight needs a self-adjoint Hamiltonian")
    matrix = to_matrix(h)
    matrix = (matrix + matrix.conj().T) / 2
    energies, vectors = scipy.linalg.eigh(matrix)
    weight = (vectors * np.exp(-energies)) @ vectors.conj().T
    residual = np.linalg.norm((vectors * energies) @ vectors.conj().T - matrix, 2)
    logger.debug("Gibbs weight: eigendecomposition residual %.3e", residual)
    return (weight + weight.conj().T) / 2


def operator_exp(h: CliffordElement, scale: float) -> DenseOperator:
    """e^{-scale·H} for self-adjoint H."""
    return gibbs_weight(h.scale(scale))


class RPForm:
    """The sesquilinear form ⟨A, B⟩ = Tr(A ϑ(B) e^{-H}) for one Hamiltonian."""

    def __init__(self, h: CliffordElement, geometry: ReflectionGeometry) -> None:
        if h.num_generators != geometry.num_majoranas:
            raise GibbsError(
                f"Hamiltonian has {h.num_generators} generators, geometry has "
                f"{geometry.num_majoranas}"
            )
        self.h = h
        self.geometry = geometry
        self.weight = gibbs_weight(h)

    def _check(self, *elements: CliffordElement) -> None:
        for element in elements:
            if element.num_generators != self.h.num_generators:
                raise GibbsError(
                    f"Element over {element.num_generators} generators, "
                    f"Hamiltonian over {self.h.num_generators}"
                )

    def inner(self, a: CliffordElement, b: CliffordElement) -> complex:
        self._check(a, b)
        return weighted_trace(clifford.mul(a, clifford.reflect(b, self.geometry)), self.weight)

    def inner_prime(self, a: CliffordElement, b: CliffordElement) -> complex:
        """Tr(ϑ(A) B e^{-H})."""
        self._check(a, b)
        return weighted_trace(clifford.mul(clifford.reflect(a, self.geometry), b), self.weight)

    def norm(self, a: CliffordElement) -> float:
        return math.sqrt(max(self.inner(a, a).real, 0.0))

    def partition_function(self) -> float:
        return float(np.trace(self.weight).real)


def rp_functional(
    a: CliffordElement, b: CliffordElement, h: CliffordElement, geometry: ReflectionGeometry
) -> complex:
    return RPForm(h, geometry).inner(a, b)


def rp_functional_prime(
    a: CliffordElement, b: CliffordElement, h: CliffordElement, geometry: ReflectionGeometry
) -> complex:
    return RPForm(h, geometry).inner_prime(a, b)


def free_functional(
    a: CliffordElement, b: CliffordElement, geometry: ReflectionGeometry
) -> complex:
    """Tr(A ϑ(B)), the form at H = 0, evaluated symbolically."""
    return clifford.trace(clifford.mul(a, clifford.reflect(b, geometry)))


def even_basis(geometry: ReflectionGeometry, side: Side) -> List[MonomialIndex]:
    return [
        MonomialIndex(bits, geometry.num_majoranas)
        for bits in hamiltonian.even_monomials(geometry, side)
    ]


def gram_matrix(
    h: CliffordElement,
    geometry: ReflectionGeometry,
    side: Side = Side.MINUS,
    form: Optional[RPForm] = None,
    basis: Optional[Sequence[MonomialIndex]] = None,
) -> np.ndarray:
    """G[p, q] = Tr(M_p ϑ(M_q) e^{-H}) over the even monomials of one side."""
    if len(geometry.indices(side)) > MAX_SIDE_MAJORANAS:
        raise GibbsError(
            f"Gram matrix over {len(geometry.indices(side))} Majoranas exceeds "
            f"the cap of {MAX_SIDE_MAJORANAS}"
        )
    form = form if form is not None else RPForm(h, geometry)
    basis = list(basis) if basis is not None else even_basis(geometry, side)
    num_generators = geometry.num_majoranas
    reflected = [
        clifford.reflect(CliffordElement({m.bits: 1}, num_generators), geometry)
        for m in basis
    ]
    gram = np.zeros((len(basis), len(basis)), dtype=complex)
    for p, left in enumerate(basis):
        row = CliffordElement({left.bits: 1}, num_generators)
        for q, right in enumerate(reflected):
            gram[p, q] = weighted_trace(clifford.mul(row, right), form.weight)
    return gram


@dataclass
class RPReport:
    gram_dim: int
    min_eigenvalue: float
    max_eigenvalue: float
    hermiticity_residual: float
    verdict: Verdict
    witness: Optional[CliffordElement] = None
    witness_value: Optional[complex] = None
    classification: Optional[CouplingVerdict] = None
    structural_violations: List[str] = field(default_factory=list)
    beta: float = 1.0
    spectrum: List[float] = field(default_factory=list)
    plus_min_eigenvalue: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        witness = None
        if self.witness is not None:
            witness = [
                {"indices": list(m.indices), "re": complex(c).real, "im": complex(c).imag}
                for m, c in self.witness.monomials()
            ]
        value = None
        if self.witness_value is not None:
            value = {"re": self.witness_value.real, "im": self.witness_value.imag}
        return {
            "beta": self.beta,
            "verdict": self.verdict.value,
            "classification": (
                None if self.classification is None else str(self.classification)
            ),
            "structural_violations": list(self.structural_violations),
            "gram_dim": self.gram_dim,
            "min_eigenvalue": self.min_eigenvalue,
            "max_eigenvalue": self.max_eigenvalue,
            "plus_min_eigenvalue": self.plus_min_eigenvalue,
            "hermiticity_residual": self.hermiticity_residual,
            "witness": witness,
            "witness_value": value,
            "spectrum": list(self.spectrum),
        }


def is_psd(min_eigenvalue: float, max_eigenvalue: float, tol: float = PSD_TOL) -> bool:
    return min_eigenvalue >= -tol * max(1.0, max_eigenvalue)


def certify_rp(spec: HamiltonianSpec, tol: float = PSD_TOL) -> RPReport:
    """
    Build the minus-side Gram matrix of the Gibbs functional and
    decide positivity. On failure the report carries a witness A with
    Tr(A ϑ(A) e^{-H}) < 0.
    """
    classification = hamiltonian.classify_couplings(spec.cross)
    violations = hamiltonian.structural_violations(spec)
    if violations:
        logger.warning("Hamiltonian failed structural checks: %s", "; ".join(violations))
        return RPReport(
            gram_dim=0,
            min_eigenvalue=math.nan,
            max_eigenvalue=math.nan,
            hermiticity_residual=math.nan,
            verdict=Verdict.INVALID,
            classification=classification,
            structural_violations=violations,
            beta=spec.beta,
        )

    g = spec.geometry
    form = RPForm(hamiltonian.assemble(spec), g)
    basis = even_basis(g, Side.MINUS)
    gram = gram_matrix(form.h, g, Side.MINUS, form, basis)
    residual = float(np.max(np.abs(gram - gram.conj().T)))
    logger.debug("Gram matrix of dimension %d, hermiticity residual %.3e", len(basis), residual)
    eigenvalues, vectors = scipy.linalg.eigh((gram + gram.conj().T) / 2)
    low, high = float(eigenvalues[0]), float(eigenvalues[-1])

    plus_gram = gram_matrix(form.h, g, Side.PLUS, form)
    plus_low = float(scipy.linalg.eigvalsh((plus_gram + plus_gram.conj().T) / 2)[0])

    report = RPReport(
        gram_dim=len(basis),
        min_eigenvalue=low,
        max_eigenvalue=high,
        hermiticity_residual=residual,
        verdict=Verdict.POSITIVE if is_psd(low, high, tol) else Verdict.INDEFINITE,
        classification=classification,
        beta=spec.beta,
        spectrum=[float(x) for x in eigenvalues],
        plus_min_eigenvalue=plus_low,
    )
    if report.verdict is Verdict.INDEFINITE:
        report.witness = _witness(vectors[:, 0], basis, g.num_majoranas)
        report.witness_value = form.inner(report.witness, report.witness)
    logger.info(
        "beta=%g: %s (min eigenvalue %.3e, couplings %s)",
        spec.beta,
        report.verdict.value,
        low,
        classification,
    )
    return report


def _witness(
    vector: np.ndarray, basis: Sequence[MonomialIndex], num_generators: int
) -> CliffordElement:
    # ⟨A, A⟩ = aᵀ G ā, so the coefficients are the conjugated eigenvector
    coeffs = np.conj(vector)
    coeffs = coeffs / coeffs[int(np.argmax(np.abs(coeffs)))]
    return CliffordElement(
        {m.bits: complex(c) for m, c in zip(basis, coeffs)}, num_generators
    ).pruned(1e-14)


@dataclass
class BoundsReport:
    partition_function: float
    partition_bound: float
    partition_slack: float
    pair_slacks: List[float] = field(default_factory=list)
    plus_pair_slacks: List[float] = field(default_factory=list)
    norm_minus: List[float] = field(default_factory=list)
    norm_plus: List[float] = field(default_factory=list)

    @property
    def min_slack(self) -> float:
        return min([self.partition_slack, *self.pair_slacks, *self.plus_pair_slacks])

    def passed(self, tol: float = BOUND_TOL) -> bool:
        return self.min_slack >= -tol

    def to_dict(self) -> Dict[str, Any]:
        return {
            "partition_function": self.partition_function,
            "partition_bound": self.partition_bound,
            "partition_slack": self.partition_slack,
            "pair_slacks": list(self.pair_slacks),
            "plus_pair_slacks": list(self.plus_pair_slacks),
            "min_slack": self.min_slack,
        }


def check_bounds(
    spec: HamiltonianSpec,
    pairs: Sequence[Tuple[CliffordElement, CliffordElement]] = (),
) -> BoundsReport:
    """
    Reflection bounds for H = H₋ + H₀ + H₊ with independent halves.

    Minus-side pairs are checked against ‖A‖_{RP-}‖B‖_{RP+}; each pair is
    also reflected to the plus side and checked against ‖ϑA‖_{RP+}‖ϑB‖_{RP-}.
    The A = B = I case is the partition-function bound.
    """
    g = spec.geometry
    full = RPForm(hamiltonian.assemble(spec), g)
    left_h, right_h = hamiltonian.bound_hamiltonians(spec)
    left, right = RPForm(left_h, g), RPForm(right_h, g)

    z = full.partition_function()
    bound = math.sqrt(left.partition_function() * right.partition_function())
    report = BoundsReport(z, bound, bound - z)
    for a, b in pairs:
        value = abs(full.inner(a, b))
        norm_a, norm_b = left.norm(a), right.norm(b)
        report.norm_minus.append(norm_a)
        report.norm_plus.append(norm_b)
        report.pair_slacks.append(norm_a * norm_b - value)

        ra, rb = clifford.reflect(a, g), clifford.reflect(b, g)
        value = abs(full.inner(ra, rb))
        report.plus_pair_slacks.append(right.norm(ra) * left.norm(rb) - value)
    logger.info("Reflection bounds: minimum slack %.3e", report.min_slack)
    return report


@dataclass
class ResidualReport:
    schwarz_slacks: List[float] = field(default_factory=list)
    antiunitarity_residuals: List[float] = field(default_factory=list)
    norm_residuals: List[float] = field(default_factory=list)

    def passed(self, tol: float = BOUND_TOL) -> bool:
        return (
            all(s >= -tol for s in self.schwarz_slacks)
            and all(r <= tol for r in self.antiunitarity_residuals)
            and all(r <= tol for r in self.norm_residuals)
        )


def schwarz_and_antiunitarity_check(
    spec: HamiltonianSpec, samples: Sequence[Tuple[CliffordElement, CliffordElement]]
) -> ResidualReport:
    """
    |⟨A,B⟩| ≤ ‖A‖‖B‖, ⟨A,B⟩ = ⟨ϑB, ϑA⟩ and ‖ϑA‖ = ‖A‖ for the Gibbs form.
    Residuals are relative to max(1, ‖A‖‖B‖).
    """
    g = spec.geometry
    form = RPForm(hamiltonian.assemble(spec), g)
    report = ResidualReport()
    for a, b in samples:
        value = form.inner(a, b)
        norm_a, norm_b = form.norm(a), form.norm(b)
        scale = max(1.0, norm_a * norm_b)
        report.schwarz_slacks.append((norm_a * norm_b - abs(value)) / scale)
        swapped = form.inner(clifford.reflect(b, g), clifford.reflect(a, g))
        report.antiunitarity_residuals.append(abs(value - swapped) / scale)
        report.norm_residuals.append(
            abs(form.norm(clifford.reflect(a, g)) - norm_a) / max(1.0, norm_a)
        )
    return report


@dataclass
class OddSectorReport:
    all_sigma_zero: bool
    max_mixed_value: float
    full_min_eigenvalue: float
    full_max_eigenvalue: float

    @property
    def positive(self) -> bool:
        return is_psd(self.full_min_eigenvalue, self.full_max_eigenvalue)


def odd_sector_check(spec: HamiltonianSpec) -> OddSectorReport:
    """
    Probe the functional beyond the even algebra: the largest |⟨M_p, M_q⟩|
    over one-sided monomials of opposite parity, and the spectrum of the
    Gram matrix over all minus-side monomials. Both are data; nothing is
    assumed about their sign.
    """
    g = spec.geometry
    form = RPForm(hamiltonian.assemble(spec), g)
    minus = g.indices(Side.MINUS)
    if len(minus) > MAX_SIDE_MAJORANAS:
        raise GibbsError(f"Full Gram matrix over {len(minus)} Majoranas is too large")
    basis = [
        MonomialIndex(clifford.bits_of(combo, g.num_majoranas), g.num_majoranas)
        for degree in range(len(minus) + 1)
        for combo in itertools.combinations(minus, degree)
    ]
    gram = gram_matrix(form.h, g, Side.MINUS, form, basis)
    mixed = [
        abs(gram[p, q])
        for p, left in enumerate(basis)
        for q, right in enumerate(basis)
        if (left.degree - right.degree) % 2
    ]
    eigenvalues = scipy.linalg.eigvalsh((gram + gram.conj().T) / 2)
    return OddSectorReport(
        all_sigma_zero=all(term.sigma == 0 for term in spec.cross),
        max_mixed_value=max(mixed, default=0.0),
        full_min_eigenvalue=float(eigenvalues[0]),
        full_max_eigenvalue=float(eigenvalues[-1]),
    )


def counterexample_geometry() -> ReflectionGeometry:
    return build_chain(1, 1)


def counterexample_spec(beta: float = 1.0) -> HamiltonianSpec:
    """N = 1, H₋ = H₊ = 0 and H₀ = -i c₁ ϑ(c₁)."""
    g = counterexample_geometry()
    return HamiltonianSpec(
        g,
        clifford.zero(g.num_majoranas),
        (hamiltonian.CrossTerm.of([1], -1.0),),
        hamiltonian.MIRROR,
        beta,
    )


def counterexample_value(beta: float = 1.0) -> Tuple[complex, complex]:
    """Tr(c₁ ϑ(c₁) e^{-βH}) and its closed form -2i sinh(β)."""
    spec = counterexample_spec(beta)
    c1 = clifford.generator(1, spec.geometry.num_majoranas)
    value = rp_functional(c1, c1, hamiltonian.assemble(spec), spec.geometry)
    return value, -2j * math.sinh(beta)
