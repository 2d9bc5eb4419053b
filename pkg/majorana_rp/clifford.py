"""
Symbolic Clifford algebra on 2N self-adjoint generators c_1..c_2N.

A monomial c_{i1}···c_{ik} with i1 < ... < ik is stored as a bitmask with
bit i-1 set for each c_i; products are re-canonicalized by counting
inversions, so every sign is exact integer arithmetic.
"""
import enum
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Mapping, Tuple

from .geometry import ReflectionGeometry, Side

Bits = int


class CliffordError(Exception):
    pass


class Parity(str, enum.Enum):
    EVEN = "even"
    ODD = "odd"
    MIXED = "mixed"


class Support(str, enum.Enum):
    MINUS = "minus"
    PLUS = "plus"
    BOTH = "both"
    SCALAR = "scalar"


@dataclass(frozen=True)
class MonomialIndex:
    bits: Bits
    num_generators: int

    @classmethod
    def of(cls, indices: Iterable[int], num_generators: int) -> "MonomialIndex":
        return cls(bits_of(indices, num_generators), num_generators)

    @property
    def indices(self) -> Tuple[int, ...]:
        return indices_of(self.bits)

    @property
    def degree(self) -> int:
        return self.bits.bit_count()

    def __str__(self) -> str:
        if not self.bits:
            return "I"
        return "c" + ".c".join(str(i) for i in self.indices)


def bits_of(indices: Iterable[int], num_generators: int) -> Bits:
    bits = 0
    for i in indices:
        if not 1 <= i <= num_generators:
            raise CliffordError(
                f"Majorana index {i} outside 1..{num_generators}"
            )
        bits ^= 1 << (i - 1)
    return bits


def indices_of(bits: Bits) -> Tuple[int, ...]:
    out = []
    position = 1
    while bits:
        if bits & 1:
            out.append(position)
        bits >>= 1
        position += 1
    return tuple(out)


def product_sign(left: Bits, right: Bits) -> int:
    """Sign of M_left · M_right relative to the canonical M_{left ^ right}."""
    swaps = 0
    rest = right
    while rest:
        low = rest & -rest
        swaps += (left & ~((low << 1) - 1)).bit_count()
        rest ^= low
    return -1 if swaps & 1 else 1


def sequence_sign(indices: Iterable[int]) -> Tuple[Bits, int]:
    """Canonical bitmask and sign of the ordered product c_{j1} c_{j2} ···."""
    bits = 0
    sign = 1
    for j in indices:
        single = 1 << (j - 1)
        sign *= product_sign(bits, single)
        bits ^= single
    return bits, sign


def canonical_product(
    m1: MonomialIndex, m2: MonomialIndex
) -> Tuple[MonomialIndex, int]:
    if m1.num_generators != m2.num_generators:
        raise CliffordError(
            f"Cannot multiply monomials over {m1.num_generators} and "
            f"{m2.num_generators} generators"
        )
    return (
        MonomialIndex(m1.bits ^ m2.bits, m1.num_generators),
        product_sign(m1.bits, m2.bits),
    )


def _reverse_sign(bits: Bits) -> int:
    k = bits.bit_count()
    return -1 if (k * (k - 1) // 2) & 1 else 1


class CliffordElement:
    """A = Σ_β a_β M_β over a fixed number of generators. Immutable."""

    __slots__ = ("_terms", "_num_generators")

    def __init__(self, terms: Mapping[Bits, complex], num_generators: int) -> None:
        if num_generators < 2 or num_generators % 2:
            raise CliffordError(
                f"Generator count must be a positive even number, got {num_generators}"
            )
        limit = 1 << num_generators
        clean: Dict[Bits, complex] = {}
        for bits, coeff in terms.items():
            if not 0 <= bits < limit:
                raise CliffordError(
                    f"Monomial {indices_of(bits)} outside 1..{num_generators}"
                )
            if coeff != 0:
                clean[bits] = coeff
        self._terms = clean
        self._num_generators = num_generators

    @property
    def num_generators(self) -> int:
        return self._num_generators

    @property
    def num_modes(self) -> int:
        return self._num_generators // 2

    @property
    def terms(self) -> Mapping[Bits, complex]:
        return dict(self._terms)

    def coefficient(self, bits: Bits) -> complex:
        return self._terms.get(bits, 0)

    def monomials(self) -> Iterator[Tuple[MonomialIndex, complex]]:
        for bits in sorted(self._terms, key=_graded_key):
            yield MonomialIndex(bits, self._num_generators), self._terms[bits]

    def is_zero(self) -> bool:
        return not self._terms

    def max_abs(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def pruned(self, rel_tol: float = 1e-14) -> "CliffordElement":
        """Drop coefficients below rel_tol times the largest one."""
        cutoff = rel_tol * self.max_abs()
        return CliffordElement(
            {b: c for b, c in self._terms.items() if abs(c) > cutoff},
            self._num_generators,
        )

    def isclose(self, other: "CliffordElement", tol: float = 1e-12) -> bool:
        return (self - other).max_abs() <= tol

    def _check(self, other: "CliffordElement") -> None:
        if self._num_generators != other._num_generators:
            raise CliffordError(
                f"Cannot combine elements over {self._num_generators} and "
                f"{other._num_generators} generators"
            )

    def __add__(self, other: "CliffordElement") -> "CliffordElement":
        self._check(other)
        terms = dict(self._terms)
        for bits, coeff in other._terms.items():
            terms[bits] = terms.get(bits, 0) + coeff
        return CliffordElement(terms, self._num_generators)

    def __sub__(self, other: "CliffordElement") -> "CliffordElement":
        return self + (-other)

    def __neg__(self) -> "CliffordElement":
        return self.scale(-1)

    def scale(self, factor: complex) -> "CliffordElement":
        return CliffordElement(
            {b: factor * c for b, c in self._terms.items()}, self._num_generators
        )

    def __mul__(self, other: object) -> "CliffordElement":
        if isinstance(other, CliffordElement):
            return mul(self, other)
        if isinstance(other, (int, float, complex)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other: object) -> "CliffordElement":
        if isinstance(other, (int, float, complex)):
            return self.scale(other)
        return NotImplemented

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CliffordElement):
            return NotImplemented
        return (
            self._num_generators == other._num_generators
            and self._terms == other._terms
        )

    def __hash__(self) -> int:
        return hash((self._num_generators, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return f"CliffordElement(0, 2N={self._num_generators})"
        body = " + ".join(f"({c})*{m}" for m, c in self.monomials())
        return f"CliffordElement({body}, 2N={self._num_generators})"


def _graded_key(bits: Bits) -> Tuple[int, Tuple[int, ...]]:
    return bits.bit_count(), indices_of(bits)


def identity(num_generators: int) -> CliffordElement:
    return CliffordElement({0: 1}, num_generators)


def scalar(value: complex, num_generators: int) -> CliffordElement:
    return CliffordElement({0: value}, num_generators)


def zero(num_generators: int) -> CliffordElement:
    return CliffordElement({}, num_generators)


def generator(i: int, num_generators: int) -> CliffordElement:
    return CliffordElement({bits_of([i], num_generators): 1}, num_generators)


def monomial(
    indices: Iterable[int], num_generators: int, coefficient: complex = 1
) -> CliffordElement:
    """The ordered product coefficient·c_{j1} c_{j2} ··· in canonical form."""
    indices = list(indices)
    bits_of(indices, num_generators)
    bits, sign = sequence_sign(indices)
    return CliffordElement({bits: sign * coefficient}, num_generators)


def mul(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    a._check(b)
    terms: Dict[Bits, complex] = {}
    for left, ca in a._terms.items():
        for right, cb in b._terms.items():
            bits = left ^ right
            terms[bits] = terms.get(bits, 0) + product_sign(left, right) * ca * cb
    return CliffordElement(terms, a.num_generators)


def commutator(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    return mul(a, b) - mul(b, a)


def adjoint(a: CliffordElement) -> CliffordElement:
    return CliffordElement(
        {bits: _reverse_sign(bits) * coeff.conjugate() for bits, coeff in a._terms.items()},
        a.num_generators,
    )


def trace(a: CliffordElement) -> complex:
    """Matrix trace in the 2^N-dimensional representation: 2^N · a₀."""
    return (1 << a.num_modes) * a.coefficient(0)


def reflect(a: CliffordElement, geometry: ReflectionGeometry) -> CliffordElement:
    """Anti-linear ϑ: c_j → c_{ϑj}, coefficients complex-conjugated."""
    if geometry.num_majoranas != a.num_generators:
        raise CliffordError(
            f"Geometry has {geometry.num_majoranas} Majoranas, element has "
            f"{a.num_generators} generators"
        )
    terms: Dict[Bits, complex] = {}
    for bits, coeff in a._terms.items():
        image, sign = sequence_sign(geometry.reflect_index(i) for i in indices_of(bits))
        terms[image] = terms.get(image, 0) + sign * coeff.conjugate()
    return CliffordElement(terms, a.num_generators)


def parity(a: CliffordElement) -> Parity:
    degrees = {bits.bit_count() & 1 for bits in a._terms}
    if degrees <= {0}:
        return Parity.EVEN
    if degrees == {1}:
        return Parity.ODD
    return Parity.MIXED


def support_side(a: CliffordElement, geometry: ReflectionGeometry) -> Support:
    minus = plus = 0
    for bits in a._terms:
        for i in indices_of(bits):
            if geometry.side_of(i) is Side.MINUS:
                minus += 1
            else:
                plus += 1
    if minus and plus:
        return Support.BOTH
    if minus:
        return Support.MINUS
    if plus:
        return Support.PLUS
    return Support.SCALAR


def is_self_adjoint(a: CliffordElement, tol: float = 0.0) -> bool:
    return (adjoint(a) - a).max_abs() <= tol


def hermitian_phase(bits: Bits) -> complex:
    """Phase p with (p·M_β)* = p·M_β: 1 when M_β is self-adjoint, i otherwise."""
    return 1 if _reverse_sign(bits) == 1 else 1j


def from_terms(
    entries: Iterable[Tuple[Iterable[int], complex]],
    num_generators: int,
) -> CliffordElement:
    """Sum of coefficient·(ordered product of the given indices)."""
    total = zero(num_generators)
    for indices, coeff in entries:
        total = total + monomial(indices, num_generators, coeff)
    return total
