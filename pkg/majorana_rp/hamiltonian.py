import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import clifford
from .clifford import CliffordElement, Parity, Support
from .geometry import ReflectionGeometry, Side

logger = logging.getLogger(__name__)

MIRROR = "mirror"
SYMMETRY_TOL = 1e-12


class HamiltonianError(Exception):
    pass


@dataclass(frozen=True)
class CrossTerm:
    """J · i^σ(𝔍) · C_𝔍 ϑ(C_𝔍) for a nonempty set 𝔍 of minus-side Majoranas."""

    subset: FrozenSet[int]
    coupling: float

    @classmethod
    def of(cls, subset: Iterable[int], coupling: float) -> "CrossTerm":
        return cls(frozenset(subset), coupling)

    @property
    def size(self) -> int:
        return len(self.subset)

    @property
    def sigma(self) -> int:
        return sigma(self.subset)


@dataclass(frozen=True)
class HamiltonianSpec:
    geometry: ReflectionGeometry
    h_minus: CliffordElement
    cross: Tuple[CrossTerm, ...] = ()
    h_plus: Union[CliffordElement, str] = MIRROR
    beta: float = 1.0

    @property
    def is_mirror(self) -> bool:
        return isinstance(self.h_plus, str)

    def effective_h_plus(self) -> CliffordElement:
        if isinstance(self.h_plus, str):
            return clifford.reflect(self.h_minus, self.geometry)
        return self.h_plus

    def with_beta(self, beta: float) -> "HamiltonianSpec":
        return HamiltonianSpec(self.geometry, self.h_minus, self.cross, self.h_plus, beta)


@dataclass(frozen=True)
class CouplingVerdict:
    certified: bool
    reasons: Tuple[str, ...] = field(default_factory=tuple)

    def __str__(self) -> str:
        if self.certified:
            return "certified"
        return "violated: " + "; ".join(self.reasons)


def sigma(subset: Iterable[int]) -> int:
    return len(set(subset)) % 2


def cross_factor(subset: Iterable[int], geometry: ReflectionGeometry) -> CliffordElement:
    """C_𝔍, the canonically ordered product over the subset."""
    return clifford.monomial(sorted(subset), geometry.num_majoranas)


def cross_product(subset: Iterable[int], geometry: ReflectionGeometry) -> CliffordElement:
    """C_𝔍 ϑ(C_𝔍)."""
    c = cross_factor(subset, geometry)
    return clifford.mul(c, clifford.reflect(c, geometry))


def cross_term_violations(
    cross: Sequence[CrossTerm], geometry: ReflectionGeometry
) -> List[str]:
    violations = []
    minus = set(geometry.indices(Side.MINUS))
    seen = set()
    for term in cross:
        label = sorted(term.subset)
        if not term.subset:
            violations.append("cross term with empty subset")
        outside = sorted(set(term.subset) - minus)
        if outside:
            violations.append(f"cross subset {label} uses non-minus indices {outside}")
        if isinstance(term.coupling, complex) or not math.isfinite(term.coupling):
            violations.append(f"cross subset {label} has non-real coupling {term.coupling}")
        if term.subset in seen:
            violations.append(f"duplicate cross subset {label}")
        seen.add(term.subset)
    return violations


def build_h0(spec: HamiltonianSpec) -> CliffordElement:
    """H₀ = Σ J i^σ(𝔍) C_𝔍 ϑ(C_𝔍), checked self-adjoint and reflection-symmetric."""
    violations = cross_term_violations(spec.cross, spec.geometry)
    if violations:
        raise HamiltonianError("; ".join(violations))

    h0 = clifford.zero(spec.geometry.num_majoranas)
    for term in spec.cross:
        phase = 1j if term.sigma else 1
        h0 = h0 + cross_product(term.subset, spec.geometry).scale(term.coupling * phase)

    adjoint_residual = (clifford.adjoint(h0) - h0).max_abs()
    reflect_residual = (clifford.reflect(h0, spec.geometry) - h0).max_abs()
    if adjoint_residual > SYMMETRY_TOL or reflect_residual > SYMMETRY_TOL:
        raise HamiltonianError(
            f"H0 failed symmetry checks: |H0* - H0| = {adjoint_residual:.3e}, "
            f"|ϑ(H0) - H0| = {reflect_residual:.3e}"
        )
    return h0


def _half_violations(
    name: str, element: CliffordElement, geometry: ReflectionGeometry, side: Side
) -> List[str]:
    violations = []
    if element.num_generators != geometry.num_majoranas:
        return [
            f"{name} has {element.num_generators} generators, geometry has "
            f"{geometry.num_majoranas}"
        ]
    if clifford.parity(element) is not Parity.EVEN:
        violations.append(f"{name} is not even")
    if not clifford.is_self_adjoint(element, SYMMETRY_TOL):
        violations.append(f"{name} is not self-adjoint")
    support = clifford.support_side(element, geometry)
    if support not in (Support.SCALAR, Support(side.value)):
        violations.append(f"{name} is supported on {support.value}, not {side.value}")
    return violations


def structural_violations(spec: HamiltonianSpec) -> List[str]:
    violations = _half_violations("h_minus", spec.h_minus, spec.geometry, Side.MINUS)
    if isinstance(spec.h_plus, str):
        if spec.h_plus != MIRROR:
            violations.append(f"h_plus must be an element or {MIRROR!r}")
    else:
        violations += _half_violations("h_plus", spec.h_plus, spec.geometry, Side.PLUS)
    violations += cross_term_violations(spec.cross, spec.geometry)
    if not spec.beta > 0:
        violations.append(f"beta must be positive, got {spec.beta}")
    return violations


def assemble(spec: HamiltonianSpec) -> CliffordElement:
    """beta · (H₋ + H₀ + H₊), with H₊ = ϑ(H₋) for mirror specs."""
    violations = structural_violations(spec)
    if violations:
        raise HamiltonianError("; ".join(violations))
    h = spec.h_minus + build_h0(spec) + spec.effective_h_plus()
    h = h.scale(spec.beta)
    if not clifford.is_self_adjoint(h, SYMMETRY_TOL * max(1.0, h.max_abs())):
        raise HamiltonianError("Assembled Hamiltonian is not self-adjoint")
    return h


def bound_hamiltonians(
    spec: HamiltonianSpec,
) -> Tuple[CliffordElement, CliffordElement]:
    """
    The two reflection-symmetric Hamiltonians built from each half,
    H₋ + H₀ + ϑ(H₋) and ϑ(H₊) + H₀ + H₊, both scaled by beta.
    """
    g = spec.geometry
    h0 = build_h0(spec)
    h_plus = spec.effective_h_plus()
    left = spec.h_minus + h0 + clifford.reflect(spec.h_minus, g)
    right = clifford.reflect(h_plus, g) + h0 + h_plus
    return left.scale(spec.beta), right.scale(spec.beta)


def classify_couplings(cross: Sequence[CrossTerm]) -> CouplingVerdict:
    """
    σ = 1 couplings must share one sign, set by the first nonzero one;
    σ = 0 couplings must be ≤ 0. Zero couplings fit either family.
    """
    reasons = []
    family_sign = 0
    for term in cross:
        if term.sigma and term.coupling != 0:
            family_sign = 1 if term.coupling > 0 else -1
            break

    mixed = [
        term
        for term in cross
        if term.sigma and term.coupling != 0 and (term.coupling > 0) != (family_sign > 0)
    ]
    if mixed:
        for term in mixed:
            reasons.append(
                f"mixed signs at σ=1: subset {sorted(term.subset)} has J={term.coupling}"
            )
    for term in cross:
        if not term.sigma and term.coupling > 0:
            reasons.append(
                f"positive σ=0 coupling: subset {sorted(term.subset)} has J={term.coupling}"
            )
    return CouplingVerdict(not reasons, tuple(reasons))


def element_from_config(
    entries: Sequence[Tuple[Sequence[int], float, float]], num_generators: int
) -> CliffordElement:
    """Element from `(indices, re, im)` triples, the config's monomial list."""
    return clifford.from_terms(
        ((indices, complex(re, im)) for indices, re, im in entries), num_generators
    )


def random_even_element(
    geometry: ReflectionGeometry,
    side: Side,
    rng: np.random.Generator,
    terms: Optional[int] = None,
    self_adjoint: bool = False,
) -> CliffordElement:
    """
    Random element of the even algebra on one side. Coefficients are real
    Gaussians; with `self_adjoint` each gets the phase that makes its
    monomial term self-adjoint, otherwise an independent imaginary part.
    """
    basis = even_monomials(geometry, side)
    if terms is not None and terms < len(basis):
        chosen = sorted(rng.choice(len(basis), size=terms, replace=False))
        basis = [basis[i] for i in chosen]
    coeffs = {}
    for bits in basis:
        if self_adjoint:
            coeffs[bits] = float(rng.normal()) * clifford.hermitian_phase(bits)
        else:
            coeffs[bits] = complex(rng.normal(), rng.normal())
    return CliffordElement(coeffs, geometry.num_majoranas)


def even_monomials(geometry: ReflectionGeometry, side: Side) -> List[int]:
    """Even-degree subsets of one side's indices in graded-lexicographic order."""
    indices = geometry.indices(side)
    out = []
    for degree in range(0, len(indices) + 1, 2):
        for combo in itertools.combinations(indices, degree):
            out.append(clifford.bits_of(combo, geometry.num_majoranas))
    return out


def random_spec(
    geometry: ReflectionGeometry,
    rng: np.random.Generator,
    cross_terms: int = 2,
    h_minus_terms: Optional[int] = 3,
    admissible: bool = True,
    asymmetric: bool = False,
    beta: float = 1.0,
) -> HamiltonianSpec:
    """
    Seeded random spec. Admissible specs draw couplings obeying the sign
    rule; otherwise one coupling is flipped against it. Asymmetric specs get
    an independent random H₊ instead of the mirror image.
    """
    minus = geometry.indices(Side.MINUS)
    subsets = [
        frozenset(combo)
        for size in range(1, len(minus) + 1)
        for combo in itertools.combinations(minus, size)
    ]
    count = min(cross_terms, len(subsets))
    picked = [subsets[i] for i in sorted(rng.choice(len(subsets), size=count, replace=False))]
    odd_sign = 1.0 if rng.random() < 0.5 else -1.0
    cross = []
    for subset in picked:
        magnitude = float(rng.uniform(0.2, 1.5))
        coupling = odd_sign * magnitude if sigma(subset) else -magnitude
        cross.append(CrossTerm(subset, coupling))
    if not admissible:
        cross = _break_sign_rule(cross, minus)

    h_minus = random_even_element(geometry, Side.MINUS, rng, h_minus_terms, True)
    h_minus = h_minus - clifford.scalar(h_minus.coefficient(0), geometry.num_majoranas)
    h_plus: Union[CliffordElement, str] = MIRROR
    if asymmetric:
        h_plus = random_even_element(geometry, Side.PLUS, rng, h_minus_terms, True)
        h_plus = h_plus - clifford.scalar(h_plus.coefficient(0), geometry.num_majoranas)
    return HamiltonianSpec(geometry, h_minus, tuple(cross), h_plus, beta)


def _break_sign_rule(cross: List[CrossTerm], minus: Sequence[int]) -> List[CrossTerm]:
    """Return a copy of `cross` with exactly one deliberate sign-rule violation."""
    cross = list(cross)
    for position, term in enumerate(cross):
        if not term.sigma:
            cross[position] = CrossTerm(term.subset, abs(term.coupling))
            return cross
    if len(cross) >= 2:
        last = cross[-1]
        cross[-1] = CrossTerm(last.subset, -last.coupling)
        return cross
    used = {term.subset for term in cross}
    for combo in itertools.combinations(minus, 2):
        if frozenset(combo) not in used:
            return cross + [CrossTerm(frozenset(combo), 0.7)]
    raise HamiltonianError("No free subset left to build a violating cross term")
