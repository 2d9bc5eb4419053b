"""
Dense 2^N-dimensional representation of the 2N Majoranas.

Basis states are subsets of {1..N} encoded as integers, mode j occupied when
bit j-1 is set. Every monomial acts as a signed (or phased) permutation of
basis states, so to_matrix and from_matrix work from that action instead of
multiplying dense matrices.
"""
import logging
import threading
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .clifford import Bits, CliffordElement, indices_of, reflect
from .geometry import ReflectionGeometry

logger = logging.getLogger(__name__)

DenseOperator = np.ndarray

DEFAULT_MAX_MODES = 13
DEFAULT_MAX_ACTION_BYTES = 64 << 20
FULL_EXPANSION_MAX_GENERATORS = 16


class RepresentationError(Exception):
    pass


Action = Tuple[np.ndarray, np.ndarray]


def _generator_action(i: int, states: np.ndarray) -> Action:
    """c_i applied to each basis state: (image states, phases)."""
    mode = (i + 1) // 2
    mask = 1 << (mode - 1)
    below = states & (mask - 1)
    string = np.zeros(states.shape, dtype=np.int64)
    for bit in range(mode - 1):
        string ^= (below >> bit) & 1
    sign = 1 - 2 * string
    if i % 2:
        phase = sign.astype(complex)
    else:
        occupied = (states & mask) != 0
        phase = 1j * sign * np.where(occupied, 1, -1)
    return states ^ mask, phase


def _monomial_action(bits: Bits, num_modes: int) -> Action:
    states = np.arange(1 << num_modes)
    image = states.copy()
    phase = np.ones(states.shape, dtype=complex)
    for i in reversed(indices_of(bits)):
        image, step = _generator_action(i, image)
        phase = phase * step
    image.setflags(write=False)
    phase.setflags(write=False)
    return image, phase


class Manager:
    """
    Caches generator matrices per mode count and monomial actions, and
    enforces the size cap. The action cache is dropped whenever it would grow
    past `max_action_bytes`.
    """

    def __init__(self) -> None:
        self.max_modes = DEFAULT_MAX_MODES
        self.max_action_bytes = DEFAULT_MAX_ACTION_BYTES
        self._majoranas: Dict[int, Tuple[DenseOperator, ...]] = {}
        self._actions: Dict[Tuple[Bits, int], Action] = {}
        self._action_bytes = 0
        self._lock = threading.Lock()

    def configure(self, settings: Mapping[str, Any]) -> None:
        max_modes = settings.get("max_modes")
        if max_modes is not None:
            self.max_modes = int(max_modes)
            logger.debug("Representation cap set to %d modes", self.max_modes)
        max_action_bytes = settings.get("max_action_bytes")
        if max_action_bytes is not None:
            self.max_action_bytes = int(max_action_bytes)
            self.clear_actions()

    @property
    def action_bytes(self) -> int:
        return self._action_bytes

    def clear_actions(self) -> None:
        with self._lock:
            self._actions.clear()
            self._action_bytes = 0

    def action(self, bits: Bits, num_modes: int) -> Action:
        key = (bits, num_modes)
        cached = self._actions.get(key)
        if cached is not None:
            return cached

        action = _monomial_action(bits, num_modes)
        size = action[0].nbytes + action[1].nbytes
        with self._lock:
            if self._action_bytes + size > self.max_action_bytes:
                logger.debug(
                    "Dropping %d cached monomial actions (%d bytes)",
                    len(self._actions),
                    self._action_bytes,
                )
                self._actions.clear()
                self._action_bytes = 0
            if size <= self.max_action_bytes:
                self._actions[key] = action
                self._action_bytes += size
        return action

    def check(self, num_modes: int) -> None:
        if not 1 <= num_modes <= self.max_modes:
            raise RepresentationError(
                f"{num_modes} modes is outside the supported range "
                f"1..{self.max_modes} (dimension 2^{num_modes})"
            )

    def majoranas(self, num_modes: int) -> Tuple[DenseOperator, ...]:
        self.check(num_modes)
        cached = self._majoranas.get(num_modes)
        if cached is not None:
            return cached

        dim = 1 << num_modes
        estimate = 2 * num_modes * dim * dim * 16
        logger.info(
            "Allocating %d Majorana matrices of dimension %d (~%.1f MiB)",
            2 * num_modes,
            dim,
            estimate / 2**20,
        )
        states = np.arange(dim)
        matrices = []
        for i in range(1, 2 * num_modes + 1):
            image, phase = _generator_action(i, states)
            matrix = np.zeros((dim, dim), dtype=complex)
            matrix[image, states] = phase
            matrix.setflags(write=False)
            matrices.append(matrix)
        self._majoranas[num_modes] = tuple(matrices)
        return self._majoranas[num_modes]


def monomial_action(bits: Bits, num_modes: int) -> Action:
    """M_β|s> = phase[s] |image[s]>, applying the rightmost generator first."""
    return manager.action(bits, num_modes)


def build_majoranas(num_modes: int) -> List[DenseOperator]:
    return list(manager.majoranas(num_modes))


def to_matrix(a: CliffordElement) -> DenseOperator:
    num_modes = a.num_modes
    manager.check(num_modes)
    dim = 1 << num_modes
    states = np.arange(dim)
    out = np.zeros((dim, dim), dtype=complex)
    for bits, coeff in a.terms.items():
        image, phase = monomial_action(bits, num_modes)
        out[image, states] += complex(coeff) * phase
    return out


def _num_modes_of(m: DenseOperator) -> int:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise RepresentationError(f"Expected a square matrix, got shape {m.shape}")
    dim = m.shape[0]
    if dim < 2 or dim & (dim - 1):
        raise RepresentationError(f"Dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def from_matrix(
    m: DenseOperator,
    support: Optional[Sequence[Bits]] = None,
    rel_tol: float = 1e-14,
) -> CliffordElement:
    """
    Expand a dense operator in monomials, a_β = 2^{-N} Tr(M_β* A).

    Without `support` every one of the 4^N coefficients is computed, which is
    only allowed up to 16 generators.
    """
    num_modes = _num_modes_of(m)
    manager.check(num_modes)
    num_generators = 2 * num_modes
    if support is None:
        if num_generators > FULL_EXPANSION_MAX_GENERATORS:
            raise RepresentationError(
                f"Full expansion over {num_generators} generators needs an "
                "explicit monomial support list"
            )
        support = range(1 << num_generators)

    states = np.arange(1 << num_modes)
    norm = 1.0 / (1 << num_modes)
    terms: Dict[Bits, complex] = {}
    for bits in support:
        image, phase = monomial_action(bits, num_modes)
        coeff = norm * np.sum(np.conj(phase) * m[image, states])
        terms[bits] = complex(coeff)
    return CliffordElement(terms, num_generators).pruned(rel_tol)


def weighted_trace(a: CliffordElement, weight: DenseOperator) -> complex:
    """Tr(to_matrix(a) · weight) without forming to_matrix(a)."""
    num_modes = _num_modes_of(weight)
    if 2 * num_modes != a.num_generators:
        raise RepresentationError(
            f"Weight of dimension {weight.shape[0]} does not match "
            f"{a.num_generators} generators"
        )
    states = np.arange(1 << num_modes)
    total = 0j
    for bits in sorted(a.terms):
        image, phase = monomial_action(bits, num_modes)
        total += complex(a.coefficient(bits)) * complex(
            np.sum(phase * weight[states, image])
        )
    return total


def reflect_matrix(m: DenseOperator, geometry: ReflectionGeometry) -> DenseOperator:
    num_modes = _num_modes_of(m)
    if 2 * num_modes != geometry.num_majoranas:
        raise RepresentationError(
            f"Matrix of dimension {m.shape[0]} does not match a geometry with "
            f"{geometry.num_majoranas} Majoranas"
        )
    return to_matrix(reflect(from_matrix(m), geometry))


def dump_csv(m: DenseOperator, path: Path) -> None:
    """Row-major dump, each entry written as a `re,im` pair."""
    pairs = np.empty((m.shape[0], 2 * m.shape[1]))
    pairs[:, 0::2] = m.real
    pairs[:, 1::2] = m.imag
    np.savetxt(path, pairs, delimiter=",", fmt="%.17g")


def load_csv(path: Path) -> DenseOperator:
    pairs = np.loadtxt(path, delimiter=",", ndmin=2)
    return pairs[:, 0::2] + 1j * pairs[:, 1::2]


manager = Manager()
