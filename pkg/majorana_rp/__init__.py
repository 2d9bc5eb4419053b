__version__ = "0.1.0"

from .clifford import CliffordElement, MonomialIndex
from .geometry import ReflectionGeometry, Side, build_chain, from_pairs
from .gibbs_rp import RPForm, RPReport, Verdict, certify_rp
from .hamiltonian import MIRROR, CrossTerm, HamiltonianSpec

__all__ = [
    "MIRROR",
    "CliffordElement",
    "CrossTerm",
    "HamiltonianSpec",
    "MonomialIndex",
    "RPForm",
    "RPReport",
    "ReflectionGeometry",
    "Side",
    "Verdict",
    "build_chain",
    "certify_rp",
    "from_pairs",
]
