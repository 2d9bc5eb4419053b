"""
First-order Lie product approximants of e^{-H} and the expansion used to
prove positivity:

    (e^{-H})_k = ((I - H₀/k) e^{-H₋/k} e^{-H₊/k})^k
               = Σ_{ℓ₁..ℓ_k} i^{Σσ} 𝔠_{ℓ₁..ℓ_k} Y_{ℓ₁..ℓ_k}

Label 0 is the empty subset with -J = k; labels 1..L-1 are the cross
terms in input order. Couplings and H± carry the Hamiltonian's beta.
"""
import enum
import itertools
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import scipy.linalg

from . import clifford, hamiltonian
from .clifford import CliffordElement
from .geometry import Side
from .gibbs_rp import operator_exp
from .hamiltonian import HamiltonianSpec
from .matrix_rep import DenseOperator, from_matrix, to_matrix

logger = logging.getLogger(__name__)

MAX_EXPANSION_TERMS = 10**6
MIRROR_TOL = 1e-12


class TrotterError(Exception):
    pass


class Filter(str, enum.Enum):
    KEPT = "kept"
    DROPPED = "dropped"


@dataclass(frozen=True)
class ExpansionTerm:
    indices: Tuple[int, ...]
    counts: Tuple[int, ...]
    coefficient: float
    phase_power: int

    @property
    def total_count(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class MinusSignCount:
    count: int
    parity: int
    phase_matches: bool


@dataclass(frozen=True)
class ConvergenceRow:
    k: int
    error: float
    ratio: float


def operator_norm(m: DenseOperator) -> float:
    """Largest singular value, read off the Hermitian embedding [[0, M], [M*, 0]]."""
    dim = m.shape[0]
    embedding = np.zeros((2 * dim, 2 * dim), dtype=complex)
    embedding[:dim, dim:] = m
    embedding[dim:, :dim] = m.conj().T
    return float(np.max(np.abs(scipy.linalg.eigvalsh(embedding))))


class _Pieces:
    """Matrices shared by every product-formula computation for one (spec, k)."""

    def __init__(self, spec: HamiltonianSpec, k: int) -> None:
        if k < 1:
            raise TrotterError(f"Step count must be at least 1, got {k}")
        violations = hamiltonian.structural_violations(spec)
        if violations:
            raise TrotterError("; ".join(violations))
        self.spec = spec
        self.k = k
        g = spec.geometry
        self.h_plus = spec.effective_h_plus()
        self.step_minus = operator_exp(spec.h_minus, spec.beta / k)
        self.step_plus = operator_exp(self.h_plus, spec.beta / k)
        self.cross = [
            to_matrix(hamiltonian.cross_product(term.subset, g)) for term in spec.cross
        ]
        self.h0 = to_matrix(hamiltonian.build_h0(spec))

    def factor(self) -> DenseOperator:
        dim = self.h0.shape[0]
        return (np.eye(dim) - self.spec.beta * self.h0 / self.k) @ self.step_minus @ self.step_plus

    def y_matrix(self, term: ExpansionTerm) -> DenseOperator:
        out = np.eye(self.h0.shape[0], dtype=complex)
        for label in term.indices:
            if label:
                out = out @ self.cross[label - 1]
            out = out @ self.step_minus @ self.step_plus
        return out


def lie_product_approx(spec: HamiltonianSpec, k: int) -> DenseOperator:
    pieces = _Pieces(spec, k)
    return np.linalg.matrix_power(pieces.factor(), k)


def exact_weight(spec: HamiltonianSpec) -> DenseOperator:
    return operator_exp(hamiltonian.assemble(spec), 1.0)


def convergence_table(spec: HamiltonianSpec, ks: Sequence[int]) -> List[ConvergenceRow]:
    if not ks:
        raise TrotterError("Step schedule is empty")
    exact = exact_weight(spec)
    rows: List[ConvergenceRow] = []
    for k in ks:
        error = operator_norm(lie_product_approx(spec, k) - exact)
        ratio = rows[-1].error / error if rows and error > 0 else math.nan
        rows.append(ConvergenceRow(k, error, ratio))
        logger.debug("k=%d error=%.3e ratio=%.3f", k, error, ratio)
    return rows


def enumerate_expansion(spec: HamiltonianSpec, k: int) -> List[ExpansionTerm]:
    if k < 1:
        raise TrotterError(f"Step count must be at least 1, got {k}")
    num_labels = len(spec.cross) + 1
    if num_labels**k > MAX_EXPANSION_TERMS:
        raise TrotterError(
            f"Expansion has {num_labels}^{k} terms, more than {MAX_EXPANSION_TERMS}"
        )
    minus_j = [float(k)] + [-spec.beta * term.coupling for term in spec.cross]
    counts = [0] + [term.size for term in spec.cross]
    sigmas = [0] + [term.sigma for term in spec.cross]
    terms = []
    for labels in itertools.product(range(num_labels), repeat=k):
        coefficient = math.prod(minus_j[label] for label in labels) / k**k
        terms.append(
            ExpansionTerm(
                indices=labels,
                counts=tuple(counts[label] for label in labels),
                coefficient=coefficient,
                phase_power=sum(sigmas[label] for label in labels) % 4,
            )
        )
    return terms


def reconstruct(spec: HamiltonianSpec, k: int) -> DenseOperator:
    """Σ i^{Σσ} 𝔠 Y over every expansion term."""
    pieces = _Pieces(spec, k)
    total = np.zeros_like(pieces.h0)
    for term in enumerate_expansion(spec, k):
        total += (1j**term.phase_power) * term.coefficient * pieces.y_matrix(term)
    return total


def parity_filter(term: ExpansionTerm) -> Filter:
    return Filter.KEPT if term.total_count % 2 == 0 else Filter.DROPPED


def _require_mirror(spec: HamiltonianSpec) -> None:
    mirrored = clifford.reflect(spec.h_minus, spec.geometry)
    if not spec.effective_h_plus().isclose(mirrored, MIRROR_TOL):
        raise TrotterError("The factorization needs H₊ = ϑ(H₋)")


def _step_element(spec: HamiltonianSpec, k: int) -> CliffordElement:
    """e^{-βH₋/k} as an element of the minus-side even algebra."""
    support = hamiltonian.even_monomials(spec.geometry, Side.MINUS)
    return from_matrix(operator_exp(spec.h_minus, spec.beta / k), support=support)


def factorize_y(
    term: ExpansionTerm, spec: HamiltonianSpec, k: int
) -> Tuple[CliffordElement, complex]:
    """D = C_{ℓ₁} e^{-H₋/k} ··· C_{ℓ_k} e^{-H₋/k} and the phase i^{-Σσ}."""
    if parity_filter(term) is Filter.DROPPED:
        raise TrotterError(
            f"Sequence {term.indices} has odd Majorana count {term.total_count}"
        )
    _require_mirror(spec)
    g = spec.geometry
    step = _step_element(spec, k)
    d = clifford.identity(g.num_majoranas)
    for label in term.indices:
        if label:
            d = clifford.mul(d, hamiltonian.cross_factor(spec.cross[label - 1].subset, g))
        d = clifford.mul(d, step)
    sigma_total = sum(count % 2 for count in term.counts)
    return d.pruned(1e-14), 1j ** (-sigma_total % 4)


def factorization_residual(term: ExpansionTerm, spec: HamiltonianSpec, k: int) -> float:
    """‖Y - i^{-Σσ} D ϑ(D)‖ in the operator norm."""
    d, phase = factorize_y(term, spec, k)
    y = _Pieces(spec, k).y_matrix(term)
    rebuilt = phase * to_matrix(d) @ to_matrix(clifford.reflect(d, spec.geometry))
    return operator_norm(y - rebuilt)


def commutation_sign(term: ExpansionTerm, spec: HamiltonianSpec) -> int:
    """
    Sign s with Π C ϑ(C) = s · (Π C) ϑ(Π C), computed by the symbolic engine
    rather than by counting.
    """
    g = spec.geometry
    y = clifford.identity(g.num_majoranas)
    d = clifford.identity(g.num_majoranas)
    for label in term.indices:
        if label:
            subset = spec.cross[label - 1].subset
            y = clifford.mul(y, hamiltonian.cross_product(subset, g))
            d = clifford.mul(d, hamiltonian.cross_factor(subset, g))
    rebuilt = clifford.mul(d, clifford.reflect(d, g))
    (bits, value), = y.terms.items()
    ratio = value / rebuilt.coefficient(bits)
    return 1 if ratio.real > 0 else -1


def count_minus_signs(n_list: Sequence[int]) -> MinusSignCount:
    """
    Minus signs from moving minus-side Majoranas left past reflected ones:
    ½(Σn)² - ½Σn², checked against i^{-Σ(n mod 2)}.
    """
    total = sum(n_list)
    if total % 2:
        raise TrotterError(f"Counts {list(n_list)} have odd total {total}")
    squares = sum(n * n for n in n_list)
    count = (total * total - squares) // 2
    odd = sum(n % 2 for n in n_list)
    # (-1)^count against i^{-odd}, both as powers of i
    phase_matches = (2 * count) % 4 == (-odd) % 4
    return MinusSignCount(count, count % 2, phase_matches)


def square_mod_identity(limit: int) -> List[int]:
    """Every n in 0..limit with n² mod 4 ≠ n mod 2."""
    return [n for n in range(limit + 1) if (n * n) % 4 != n % 2]


def expanded_functional(
    spec: HamiltonianSpec, k: int, a: CliffordElement
) -> Tuple[complex, complex, float]:
    """
    Tr(A ϑ(A) (e^{-H})_k) evaluated directly and as Σ 𝔠 Tr(A D ϑ(A D)) over
    kept sequences; also returns the smallest real summand.
    """
    g = spec.geometry
    if clifford.parity(a) is not clifford.Parity.EVEN or clifford.support_side(a, g) not in (
        clifford.Support.MINUS,
        clifford.Support.SCALAR,
    ):
        raise TrotterError("Probe element must be even and supported on the minus side")
    pieces = _Pieces(spec, k)
    direct_weight = np.linalg.matrix_power(pieces.factor(), k)
    direct = complex(
        np.trace(to_matrix(clifford.mul(a, clifford.reflect(a, g))) @ direct_weight)
    )
    expanded = 0j
    smallest = math.inf
    for term in enumerate_expansion(spec, k):
        if parity_filter(term) is Filter.DROPPED or term.coefficient == 0:
            continue
        d, _ = factorize_y(term, spec, k)
        ad = clifford.mul(a, d)
        value = term.coefficient * clifford.trace(clifford.mul(ad, clifford.reflect(ad, g)))
        expanded += value
        smallest = min(smallest, complex(value).real)
    return direct, expanded, smallest


__all__ = [
    "ConvergenceRow",
    "ExpansionTerm",
    "Filter",
    "MinusSignCount",
    "TrotterError",
    "commutation_sign",
    "convergence_table",
    "count_minus_signs",
    "enumerate_expansion",
    "expanded_functional",
    "factorize_y",
    "factorization_residual",
    "lie_product_approx",
    "operator_norm",
    "parity_filter",
    "reconstruct",
    "square_mod_identity",
]
