"""
Region graphs and the flat (region, assignment) layout of potential vectors.
"""
from itertools import combinations
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from ..exceptions import StructuralException

Region = Tuple[int, ...]
DomainSpec = Union[int, Sequence[int]]


class RegionGraph:
    """
    Discrete output structure: variables with finite domains and scoring regions.

    Regions are ordered with the K unary regions first (by variable index) and
    the higher-order regions afterwards in declared order. Every potential-like
    vector (f, H(x), y, lambda) is a flat array of length D with one slot per
    (region, local assignment); inside a region the local assignment is indexed
    row-major, the lowest-numbered variable being most significant.
    """

    def __init__(self, domains: Sequence[int], higher_order: Iterable[Sequence[int]] = ()):
        """
        Initialize the region graph.

        Args:
            domains: Cardinality of every variable
            higher_order: Regions of two or more variables, each in ascending order

        Raises:
            StructuralException: If a region is malformed or duplicated
        """
        self.domains: Tuple[int, ...] = tuple(int(d) for d in domains)
        if not self.domains:
            raise StructuralException("A region graph needs at least one variable")
        if any(d < 1 for d in self.domains):
            raise StructuralException(f"Domain sizes must be positive: {self.domains}")
        regions: List[Region] = [(k,) for k in range(len(self.domains))]
        seen = set()
        for raw in higher_order:
            region = tuple(int(v) for v in raw)
            if len(region) < 2:
                raise StructuralException(f"Higher-order region needs >= 2 variables: {region}")
            if any(b <= a for a, b in zip(region, region[1:])):
                raise StructuralException(f"Region variables must be distinct and ascending: {region}")
            if region[0] < 0 or region[-1] >= len(self.domains):
                raise StructuralException(f"Region {region} references an unknown variable")
            if region in seen:
                raise StructuralException(f"Duplicate region: {region}")
            seen.add(region)
            regions.append(region)
        self.regions: Tuple[Region, ...] = tuple(regions)

        self.region_shapes = tuple(tuple(self.domains[v] for v in r) for r in self.regions)
        self.sizes = np.array([int(np.prod(shape)) for shape in self.region_shapes], dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)[:-1]]).astype(np.int64)
        self.D = int(self.sizes.sum())
        self._strides = tuple(
            np.array([int(np.prod(shape[i + 1:])) for i in range(len(shape))], dtype=np.int64)
            for shape in self.region_shapes)

        # (region id, position inside region) for every higher-order region touching a variable
        self.variable_regions: Tuple[Tuple[Tuple[int, int], ...], ...] = tuple(
            tuple((r, region.index(k)) for r, region in enumerate(self.regions)
                  if len(region) > 1 and k in region)
            for k in range(len(self.domains)))

    def __repr__(self):
        return f"<RegionGraph(K={self.K}, regions={self.num_regions}, D={self.D})>"

    def __eq__(self, other):
        return (isinstance(other, RegionGraph) and self.domains == other.domains
                and self.regions == other.regions)

    def __hash__(self):
        return hash((self.domains, self.regions))

    @property
    def K(self) -> int:
        return len(self.domains)

    @property
    def num_regions(self) -> int:
        return len(self.regions)

    @property
    def higher_order_ids(self) -> range:
        return range(self.K, self.num_regions)

    @property
    def pair_regions(self) -> Tuple[Region, ...]:
        return self.regions[self.K:]

    def zeros(self) -> np.ndarray:
        return np.zeros(self.D)

    def region_slice(self, region_id: int) -> slice:
        start = int(self.offsets[region_id])
        return slice(start, start + int(self.sizes[region_id]))

    def region_table(self, vector: np.ndarray, region_id: int) -> np.ndarray:
        """View of a region's slots reshaped to its variables' domains."""
        return vector[self.region_slice(region_id)].reshape(self.region_shapes[region_id])

    def check_vector(self, vector: np.ndarray, what: str = "vector") -> np.ndarray:
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.D,):
            raise StructuralException(f"{what} has shape {vector.shape}, expected ({self.D},)")
        return vector

    def validate_assignment(self, x: Sequence[int]) -> np.ndarray:
        """
        Check an assignment and return it as an integer array.

        Raises:
            StructuralException: If the length or a label is out of range
        """
        labels = np.asarray(x, dtype=np.int64).reshape(-1)
        if labels.size != self.K:
            raise StructuralException(f"Assignment has {labels.size} labels, expected {self.K}")
        if np.any(labels < 0) or np.any(labels >= np.asarray(self.domains)):
            raise StructuralException(f"Assignment {labels.tolist()} out of range for domains {self.domains}")
        return labels

    def flat_index(self, region_id: int, local_assignment: Sequence[int]) -> int:
        """
        Slot of a (region, local assignment) pair.

        Raises:
            StructuralException: If the region or the assignment is out of range
        """
        if not 0 <= region_id < self.num_regions:
            raise StructuralException(f"Unknown region id {region_id}")
        local = np.asarray(local_assignment, dtype=np.int64).reshape(-1)
        shape = self.region_shapes[region_id]
        if local.size != len(shape) or np.any(local < 0) or np.any(local >= np.asarray(shape)):
            raise StructuralException(
                f"Local assignment {local.tolist()} invalid for region {self.regions[region_id]}")
        return int(self.offsets[region_id] + local @ self._strides[region_id])

    def slot_assignment(self, slot: int) -> Tuple[int, Tuple[int, ...]]:
        """Inverse of flat_index."""
        if not 0 <= slot < self.D:
            raise StructuralException(f"Slot {slot} out of range for D={self.D}")
        region_id = int(np.searchsorted(self.offsets, slot, side="right") - 1)
        local = np.unravel_index(slot - int(self.offsets[region_id]), self.region_shapes[region_id])
        return region_id, tuple(int(v) for v in local)

    def selected_slots(self, x: Sequence[int]) -> np.ndarray:
        """The one slot per region that agrees with the full assignment x."""
        labels = self.validate_assignment(x)
        return np.array([
            self.offsets[r] + labels[list(region)] @ self._strides[r]
            for r, region in enumerate(self.regions)], dtype=np.int64)

    def mask(self, f: np.ndarray, x: Sequence[int]) -> np.ndarray:
        """
        Keep f at the slots selected by x and zero elsewhere.

        Args:
            f: Potential vector
            x: Full assignment

        Returns:
            The masked potential vector H(x)
        """
        f = self.check_vector(f, "potential vector")
        slots = self.selected_slots(x)
        masked = np.zeros(self.D)
        masked[slots] = f[slots]
        return masked

    def score_decomposed(self, f: np.ndarray, x: Sequence[int]) -> float:
        """Sum over regions of f_r(x_r)."""
        f = self.check_vector(f, "potential vector")
        return float(np.sum(f[self.selected_slots(x)]))

    def is_chain(self) -> bool:
        """True when the higher-order regions are exactly the edges (k, k+1)."""
        expected = {(k, k + 1) for k in range(self.K - 1)}
        return set(self.pair_regions) == expected and len(self.pair_regions) == len(expected)

    def to_text(self) -> str:
        """Plain-text description: variable count, domain sizes, one line per higher-order region."""
        lines = [f"variables {self.K}", "domains " + " ".join(str(d) for d in self.domains)]
        lines.extend("region " + " ".join(str(v) for v in region) for region in self.pair_regions)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RegionGraph":
        """
        Parse the plain-text description produced by to_text.

        Raises:
            StructuralException: If the description is malformed
        """
        count = None
        domains = None
        regions = []
        for number, line in enumerate(text.splitlines(), start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                values = [int(p) for p in parts[1:]]
            except ValueError:
                raise StructuralException(f"Line {number}: non-integer value in '{line}'")
            if parts[0] == "variables" and len(values) == 1:
                count = values[0]
            elif parts[0] == "domains":
                domains = values
            elif parts[0] == "region":
                regions.append(values)
            else:
                raise StructuralException(f"Line {number}: unrecognized entry '{line}'")
        if count is None or domains is None:
            raise StructuralException("Graph description needs 'variables' and 'domains' lines")
        if len(domains) == 1 and count > 1:
            domains = domains * count
        if len(domains) != count:
            raise StructuralException(f"Expected {count} domain sizes, got {len(domains)}")
        return cls(domains, regions)


def _domains(K: int, d: DomainSpec) -> List[int]:
    if K < 1:
        raise StructuralException(f"K must be >= 1, got {K}")
    if isinstance(d, (int, np.integer)):
        return [int(d)] * K
    domains = [int(v) for v in d]
    if len(domains) != K:
        raise StructuralException(f"Expected {K} domain sizes, got {len(domains)}")
    return domains


def build_chain(K: int, d: DomainSpec) -> RegionGraph:
    """Unary regions plus the edges (k, k+1)."""
    return RegionGraph(_domains(K, d), [(k, k + 1) for k in range(K - 1)])


def build_second_order(K: int, d: DomainSpec) -> RegionGraph:
    """Chain edges followed by the skip edges (k, k+2)."""
    edges = [(k, k + 1) for k in range(K - 1)] + [(k, k + 2) for k in range(K - 2)]
    return RegionGraph(_domains(K, d), edges)


def build_fully_connected(K: int, d: DomainSpec) -> RegionGraph:
    """Unary regions plus every pair i < j."""
    return RegionGraph(_domains(K, d), list(combinations(range(K), 2)))


def build_from_pairs(K: int, d: DomainSpec, pairs: Iterable[Sequence[int]]) -> RegionGraph:
    """Unary regions plus the given pairs, each sorted ascending."""
    return RegionGraph(_domains(K, d), [tuple(sorted(p)) for p in pairs])
