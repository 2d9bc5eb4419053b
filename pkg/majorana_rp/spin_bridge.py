"""
Spin-1/2 operators from four Majoranas per site.

Flavors are ordered (b^x, b^y, b^z, c) at every site. Pauli operators are
σ^α = i b^α c; they obey the Pauli algebra on the sector where every
γ5 = b^x b^y b^z c equals +1.
"""
import enum
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import scipy.linalg

from . import clifford
from .clifford import CliffordElement
from .geometry import ReflectionGeometry, Side, Site
from .hamiltonian import CrossTerm
from .matrix_rep import DenseOperator, to_matrix

logger = logging.getLogger(__name__)

SPIN_FLAVORS = 4
CHIRALITY_TOL = 1e-12


class SpinModelError(Exception):
    pass


class Axis(str, enum.Enum):
    X = "x"
    Y = "y"
    Z = "z"


class ModelKind(str, enum.Enum):
    ISING = "ising"
    ROTATOR = "rotator"
    HEISENBERG = "heisenberg"


# coupling per axis for each interaction
_COUPLINGS = {
    ModelKind.ISING: ((Axis.Z, -1.0),),
    ModelKind.ROTATOR: ((Axis.X, -1.0), (Axis.Z, -1.0)),
    ModelKind.HEISENBERG: ((Axis.X, -1.0), (Axis.Y, 1.0), (Axis.Z, -1.0)),
}


@dataclass(frozen=True)
class SpinSite:
    label: Site
    bx: int
    by: int
    bz: int
    c: int
    num_generators: int

    def b(self, axis: Axis) -> int:
        return {Axis.X: self.bx, Axis.Y: self.by, Axis.Z: self.bz}[Axis(axis)]


def _require_spin_geometry(geometry: ReflectionGeometry) -> None:
    if geometry.flavors != SPIN_FLAVORS:
        raise SpinModelError(
            f"Spin sites need {SPIN_FLAVORS} Majorana flavors, geometry has "
            f"{geometry.flavors}"
        )


def spin_site(geometry: ReflectionGeometry, site: Site) -> SpinSite:
    _require_spin_geometry(geometry)
    if site not in geometry.side:
        raise SpinModelError(f"Site {site} is not part of the geometry")
    bx, by, bz, c = geometry.site_indices(site)
    return SpinSite(site, bx, by, bz, c, geometry.num_majoranas)


def spin_sites(geometry: ReflectionGeometry) -> List[SpinSite]:
    _require_spin_geometry(geometry)
    return [spin_site(geometry, site) for site in geometry.sites]


def pauli(site: SpinSite, axis: Axis) -> CliffordElement:
    """σ^α = i b^α c."""
    return clifford.monomial([site.b(axis), site.c], site.num_generators, 1j)


def alternative_pauli(site: SpinSite, axis: Axis) -> CliffordElement:
    """
    σ^x = -i b^y b^z and cyclic. These satisfy the Pauli algebra on the
    whole space, without projecting to a chiral sector.
    """
    first, second = {
        Axis.X: (site.by, site.bz),
        Axis.Y: (site.bz, site.bx),
        Axis.Z: (site.bx, site.by),
    }[Axis(axis)]
    return clifford.monomial([first, second], site.num_generators, -1j)


def gamma5(site: SpinSite) -> CliffordElement:
    return clifford.monomial([site.bx, site.by, site.bz, site.c], site.num_generators)


def chiral_projector(sites: Sequence[SpinSite]) -> DenseOperator:
    """P = Π (I + γ5_j)/2 over the given sites."""
    if not sites:
        raise SpinModelError("Chiral projector needs at least one site")
    n = sites[0].num_generators
    projector = clifford.identity(n)
    half = clifford.scalar(0.5, n)
    for site in sites:
        projector = clifford.mul(projector, half + gamma5(site).scale(0.5))
    return to_matrix(projector)


def preserves_chirality(a: CliffordElement, sites: Sequence[SpinSite]) -> bool:
    return all(
        clifford.commutator(a, gamma5(site)).max_abs() <= CHIRALITY_TOL for site in sites
    )


def chiral_basis(sites: Sequence[SpinSite]) -> np.ndarray:
    """Orthonormal columns spanning the range of the chiral projector."""
    values, vectors = scipy.linalg.eigh(chiral_projector(sites))
    return vectors[:, values > 0.5]


def projected_matrix(a: CliffordElement, sites: Sequence[SpinSite]) -> DenseOperator:
    """to_matrix(a) compressed to the sector where every γ5 is +1."""
    if not preserves_chirality(a, sites):
        raise SpinModelError("Operator does not commute with every γ5")
    basis = chiral_basis(sites)
    return basis.conj().T @ to_matrix(a) @ basis


def _crossing_minus_site(bond: Tuple[Site, Site], geometry: ReflectionGeometry) -> Site:
    first, second = bond
    if first not in geometry.side or second not in geometry.side:
        raise SpinModelError(f"Bond {bond} uses sites outside the geometry")
    if geometry.theta.get(first) != second or geometry.side[first] is geometry.side[second]:
        raise SpinModelError(f"Bond {bond} is not a reflected pair across the plane")
    return first if geometry.side[first] is Side.MINUS else second


def build_spin_model(
    kind: ModelKind, bond: Tuple[Site, Site], geometry: ReflectionGeometry
) -> List[CrossTerm]:
    """
    Cross terms J · (b^α c) ϑ(b^α c) for one reflected bond, all with
    two-element subsets on the bond's minus-side site.
    """
    kind = ModelKind(kind)
    site = spin_site(geometry, _crossing_minus_site(bond, geometry))
    terms = [
        CrossTerm.of([site.b(axis), site.c], coupling)
        for axis, coupling in _COUPLINGS[kind]
    ]
    logger.debug("%s bond %s: %d cross terms", kind.value, bond, len(terms))
    return terms


def build_spin_cross_terms(
    kind: ModelKind, bonds: Sequence[Tuple[Site, Site]], geometry: ReflectionGeometry
) -> Tuple[CrossTerm, ...]:
    terms: List[CrossTerm] = []
    for bond in bonds:
        terms.extend(build_spin_model(kind, bond, geometry))
    return tuple(terms)
