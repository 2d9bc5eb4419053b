import enum
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

Site = int


class GeometryError(Exception):
    pass


class Side(str, enum.Enum):
    MINUS = "minus"
    PLUS = "plus"

    @property
    def opposite(self) -> "Side":
        return Side.PLUS if self is Side.MINUS else Side.MINUS


@dataclass(frozen=True)
class Violation:
    invariant: str
    site: Site
    message: str

    def __str__(self) -> str:
        return f"{self.invariant} at site {self.site}: {self.message}"


@dataclass(frozen=True)
class ReflectionGeometry:
    """Sites on both sides of a reflection plane, each carrying `flavors` Majoranas.

    `index` maps (site, flavor) to a global Majorana index in 1..2N. Instances
    are not checked on construction so that `validate` can report on broken
    tables; use `build_chain` or `from_pairs` to get a validated geometry.
    """

    sites: Tuple[Site, ...]
    side: Mapping[Site, Side]
    theta: Mapping[Site, Site]
    flavors: int
    index: Mapping[Tuple[Site, int], int]
    _majorana_theta: Dict[int, int] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        # never mutated after construction
        majorana_theta = {}
        for (site, flavor), idx in self.index.items():
            image = self.index.get((self.theta.get(site), flavor))
            if image is not None:
                majorana_theta[idx] = image
        object.__setattr__(self, "_majorana_theta", majorana_theta)

    @property
    def num_majoranas(self) -> int:
        return len(self.sites) * self.flavors

    @property
    def num_modes(self) -> int:
        return self.num_majoranas // 2

    def site_of(self, majorana: int) -> Site:
        for (site, _), idx in self.index.items():
            if idx == majorana:
                return site
        raise GeometryError(f"Majorana index {majorana} is not assigned to a site")

    def side_of(self, majorana: int) -> Side:
        return self.side[self.site_of(majorana)]

    def indices(self, side: Side) -> Tuple[int, ...]:
        return tuple(
            sorted(idx for (site, _), idx in self.index.items() if self.side[site] is side)
        )

    def site_indices(self, site: Site) -> Tuple[int, ...]:
        return tuple(self.index[(site, flavor)] for flavor in range(self.flavors))

    def reflect_index(self, majorana: int) -> int:
        """Global index of c_{ϑj} for c_j."""
        try:
            return self._majorana_theta[majorana]
        except KeyError:
            raise GeometryError(
                f"Majorana index {majorana} is not assigned to a site"
            ) from None


def _mode_cap(cap: Optional[int]) -> int:
    if cap is not None:
        return cap
    # matrix_rep imports this module through clifford
    from .matrix_rep import manager

    return manager.max_modes


def build_chain(
    sites_per_side: int, flavors: int, cap: Optional[int] = None
) -> ReflectionGeometry:
    """
    Open chain of 2M sites reflected through its midpoint, ϑ(i) = 2M + 1 - i.

    Indices are assigned site-major, flavor-minor: the minus-side sites 1..M
    take 1..M·n, and each plus-side site takes the block of its mirror image,
    so that ϑ shifts every index by M·n. `cap` defaults to the representation
    cap of `matrix_rep.manager`.
    """
    cap = _mode_cap(cap)
    if sites_per_side < 1 or flavors < 1:
        raise GeometryError(
            f"Chain needs at least one site per side and one flavor, got "
            f"sites_per_side={sites_per_side}, flavors={flavors}"
        )
    if sites_per_side * flavors > cap:
        raise GeometryError(
            f"Chain with {2 * sites_per_side * flavors} Majoranas exceeds the "
            f"representation cap of {cap} modes"
        )

    total = 2 * sites_per_side
    sites = tuple(range(1, total + 1))
    side = {s: Side.MINUS if s <= sites_per_side else Side.PLUS for s in sites}
    theta = {s: total + 1 - s for s in sites}
    index: Dict[Tuple[Site, int], int] = {}
    for position, site in enumerate(range(1, sites_per_side + 1)):
        for flavor in range(flavors):
            index[(site, flavor)] = position * flavors + flavor + 1
            index[(theta[site], flavor)] = (
                (sites_per_side + position) * flavors + flavor + 1
            )
    return _checked(ReflectionGeometry(sites, side, theta, flavors, index))


def from_pairs(
    pairs: Sequence[Tuple[Site, Site]],
    side: Mapping[Site, str],
    flavors: int,
    cap: Optional[int] = None,
) -> ReflectionGeometry:
    """
    Geometry from an explicit reflection table, e.g. a 2D lattice reflected
    across a bond plane. Each pair is written (minus site, plus site) or the
    other way round; `side` decides. Minus sites are numbered in pair order,
    their partners take the mirrored blocks.
    """
    try:
        sides = {int(s): Side(v) for s, v in side.items()}
    except ValueError as exc:
        raise GeometryError(f"Invalid side assignment: {exc}") from exc

    cap = _mode_cap(cap)
    theta: Dict[Site, Site] = {}
    ordered: List[Site] = []
    for a, b in pairs:
        theta[a] = b
        theta[b] = a
        ordered.append(a if sides.get(a) is Side.MINUS else b)

    sites = tuple(sorted(theta))
    if len(sites) * flavors > 2 * cap:
        raise GeometryError(
            f"Geometry with {len(sites) * flavors} Majoranas exceeds the "
            f"representation cap of {cap} modes"
        )

    index: Dict[Tuple[Site, int], int] = {}
    half = len(ordered)
    for position, site in enumerate(ordered):
        for flavor in range(flavors):
            index[(site, flavor)] = position * flavors + flavor + 1
            index[(theta[site], flavor)] = (half + position) * flavors + flavor + 1
    return _checked(ReflectionGeometry(sites, sides, theta, flavors, index))


def validate(geometry: ReflectionGeometry) -> List[Violation]:
    """Return every broken invariant; an empty list means the geometry is usable."""
    violations: List[Violation] = []
    sites = set(geometry.sites)
    for site in geometry.sites:
        image = geometry.theta.get(site)
        if image is None or image not in sites:
            violations.append(Violation("theta-domain", site, "ϑ is not defined here"))
            continue
        if image == site:
            violations.append(Violation("fixed-point", site, "ϑ fixes this site"))
        if geometry.theta.get(image) != site:
            violations.append(
                Violation("involution", site, f"ϑ(ϑ({site})) = {geometry.theta.get(image)}")
            )
        if site not in geometry.side or image not in geometry.side:
            violations.append(Violation("side", site, "site has no side assignment"))
        elif geometry.side[site] is geometry.side[image] and image != site:
            violations.append(
                Violation(
                    "side-swap",
                    site,
                    f"ϑ maps it to {image} on the same {geometry.side[site].value} side",
                )
            )

    if geometry.flavors < 1:
        violations.append(Violation("flavors", 0, "need at least one flavor per site"))

    expected = set(range(1, geometry.num_majoranas + 1))
    assigned = list(geometry.index.values())
    if geometry.num_majoranas % 2:
        violations.append(
            Violation("index", 0, f"odd Majorana count {geometry.num_majoranas}")
        )
    for site in geometry.sites:
        for flavor in range(geometry.flavors):
            if (site, flavor) not in geometry.index:
                violations.append(
                    Violation("index", site, f"flavor {flavor} has no global index")
                )
    if len(set(assigned)) != len(assigned) or set(assigned) != expected:
        violations.append(
            Violation("index", 0, "index is not a bijection onto 1..2N")
        )
    return violations


def _checked(geometry: ReflectionGeometry) -> ReflectionGeometry:
    violations = validate(geometry)
    if violations:
        raise GeometryError("; ".join(str(v) for v in violations))
    logger.debug(
        "Built geometry with %d sites, %d Majoranas",
        len(geometry.sites),
        geometry.num_majoranas,
    )
    return geometry
