"""Statistical density models: occupancy of tiles under four sparsity patterns.

Every model is bound to a tensor shape and answers occupancy queries for
axis-aligned blocks (tiles) of that tensor:

  - ``uniform``: a fixed global count of nonzeros, r = round(density * size),
    placed uniformly at random without replacement. Tile occupancy is exactly
    hypergeometric. An opt-in ``bernoulli`` approximation treats elements as
    independent coin flips instead (cheaper for very large populations, but
    tile occupancies are then only approximately right and the whole-tensor
    count is no longer fixed).
  - ``fixed_structured``: n-of-m structured sparsity along one dim; every
    aligned m-block holds exactly n nonzeros (pruning convention), placed
    uniformly within the block. Tiles that split blocks are mixtures
    computed by block-overlap arithmetic.
  - ``banded``: deterministic band |i - j| < ceil(band_width / 2) over a
    2-D tensor.
  - ``actual_data``: an explicit coordinate set; all queries are exact.

Coordinate-independent queries (no origin) average over the aligned grid of
tiles of that shape. Coordinate-dependent models (banded, actual_data) give
exact per-origin answers when an origin is supplied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

from .errors import SpecInvariantError, SpecSyntaxError

PROB_TOL = 1e-9


# -- specs ------------------------------------------------------------------


@dataclass(frozen=True)
class DensityModelSpec:
    """Declarative density model binding, attached to a tensor in the workload.

    kind: uniform | fixed_structured | banded | actual_data
    """

    kind: str
    density: float | None = None  # uniform
    bernoulli: bool = False  # uniform: opt-in independent-element approximation
    n: int | None = None  # fixed_structured: nonzeros per block
    m: int | None = None  # fixed_structured: block length
    dim: str | None = None  # fixed_structured: structured dim name
    band_width: int | None = None  # banded
    path: str | None = None  # actual_data

    def __post_init__(self):
        if self.kind == "uniform":
            if self.density is None or not (0 < self.density <= 1):
                raise SpecInvariantError(f"uniform density must be in (0, 1], got {self.density}")
        elif self.kind == "fixed_structured":
            if self.n is None or self.m is None or not (1 <= self.n <= self.m):
                raise SpecInvariantError(f"fixed_structured needs 1 <= n <= m, got n={self.n} m={self.m}")
            if not self.dim:
                raise SpecInvariantError("fixed_structured needs a structured dim name")
        elif self.kind == "banded":
            if self.band_width is None or self.band_width < 1:
                raise SpecInvariantError(f"band_width must be >= 1, got {self.band_width}")
        elif self.kind == "actual_data":
            if not self.path:
                raise SpecInvariantError("actual_data model needs a coordinate file path")
        else:
            raise SpecInvariantError(f"unknown density model kind {self.kind!r}")


def uniform(density: float, bernoulli: bool = False) -> DensityModelSpec:
    return DensityModelSpec("uniform", density=density, bernoulli=bernoulli)


def fixed_structured(n: int, m: int, dim: str) -> DensityModelSpec:
    return DensityModelSpec("fixed_structured", n=n, m=m, dim=dim)


def banded(band_width: int) -> DensityModelSpec:
    return DensityModelSpec("banded", band_width=band_width)


def actual_data(path: str) -> DensityModelSpec:
    return DensityModelSpec("actual_data", path=path)


# -- occupancy distribution ---------------------------------------------------


@dataclass(frozen=True)
class OccupancyDistribution:
    """Probability mass over the nonzero count of a tile."""

    support: tuple[tuple[int, float], ...]  # (occupancy, probability), ascending
    tile_size: int

    def __post_init__(self):
        total = math.fsum(p for _, p in self.support)
        if abs(total - 1.0) > PROB_TOL:
            raise SpecInvariantError(f"occupancy probabilities sum to {total}, not 1")
        for k, p in self.support:
            if k < 0 or k > self.tile_size or p < -PROB_TOL:
                raise SpecInvariantError(f"bad support entry ({k}, {p}) for tile size {self.tile_size}")

    def prob(self, k: int) -> float:
        for kk, p in self.support:
            if kk == k:
                return p
        return 0.0

    @property
    def prob_empty(self) -> float:
        return self.prob(0)

    @property
    def expected(self) -> float:
        return math.fsum(k * p for k, p in self.support)

    @property
    def max_occupancy(self) -> int:
        return max((k for k, p in self.support if p > PROB_TOL), default=0)

    def expect(self, fn) -> float:
        """E[fn(occupancy)] under this distribution."""
        return math.fsum(p * fn(k) for k, p in self.support)


def _point_mass(k: int, size: int) -> OccupancyDistribution:
    return OccupancyDistribution(((k, 1.0),), size)


def _mixture(parts: list[tuple[float, OccupancyDistribution]], size: int) -> OccupancyDistribution:
    acc: dict[int, float] = {}
    for w, dist in parts:
        for k, p in dist.support:
            acc[k] = acc.get(k, 0.0) + w * p
    support = tuple(sorted((k, p) for k, p in acc.items() if p > 0 or k == 0))
    return OccupancyDistribution(support, size)


def _convolve(a: OccupancyDistribution, b: OccupancyDistribution) -> OccupancyDistribution:
    acc: dict[int, float] = {}
    for ka, pa in a.support:
        for kb, pb in b.support:
            acc[ka + kb] = acc.get(ka + kb, 0.0) + pa * pb
    return OccupancyDistribution(tuple(sorted(acc.items())), a.tile_size + b.tile_size)


# -- hypergeometric helpers ---------------------------------------------------


@lru_cache(maxsize=65536)
def hyper_pmf(N: int, r: int, s: int, k: int) -> float:
    """P[k nonzeros in an s-sample] drawing without replacement: r of N nonzero."""
    if k < 0 or k > s or k > r or s - k > N - r:
        return 0.0
    return float(Fraction(math.comb(r, k) * math.comb(N - r, s - k), math.comb(N, s)))


@lru_cache(maxsize=65536)
def hyper_prob_empty(N: int, r: int, s: int) -> float:
    if s > N - r:
        return 0.0
    return float(Fraction(math.comb(N - r, s), math.comb(N, s)))


def hyper_distribution(N: int, r: int, s: int) -> OccupancyDistribution:
    lo = max(0, s - (N - r))
    hi = min(s, r)
    support = tuple((k, hyper_pmf(N, r, s, k)) for k in range(lo, hi + 1))
    return OccupancyDistribution(support, s)


@lru_cache(maxsize=16384)
def _hyper_blocks_empty(N: int, r: int, b: int, t: int) -> Fraction:
    """P[t specific disjoint blocks of size b are all empty]."""
    if t * b > N - r:
        return Fraction(0)
    return Fraction(math.comb(N - t * b, r), math.comb(N, r))


@lru_cache(maxsize=4096)
def hyper_nonempty_blocks(N: int, r: int, b: int, L: int) -> tuple[tuple[int, float], ...]:
    """Distribution of the number of nonempty blocks among L disjoint
    size-b blocks, by inclusion-exclusion over empty-block sets."""
    out = []
    for e in range(L + 1):  # e = number of empty blocks
        total = Fraction(0)
        for i in range(L - e + 1):
            term = math.comb(L - e, i) * _hyper_blocks_empty(N, r, b, e + i)
            total += term if i % 2 == 0 else -term
        p = float(math.comb(L, e) * total)
        if p > 0 or L - e == 0:
            out.append((L - e, max(p, 0.0)))
    return tuple(sorted(out))


def expected_rle_splits(n: int, o: int, max_run: int) -> float:
    """Expected overflow placeholders for an RLE fiber of length n with o
    nonzeros placed uniformly, where a run-length field encodes at most
    ``max_run`` zeros. A placeholder consumes max_run zeros plus one
    zero-payload entry. Trailing zeros need no encoding.
    """
    if o == 0 or max_run >= n:
        return 0.0
    total = Fraction(0)
    denom = math.comb(n, o)
    # o encoded gaps (leading + between); each has the composition marginal
    # P(gap = g) = C(n - g - 1, o - 1) / C(n, o).
    for g in range(max_run + 1, n - o + 1):
        # each placeholder consumes max_run zeros plus its own zero position
        splits = max(0, math.ceil((g - max_run) / (max_run + 1)))
        if splits:
            total += splits * Fraction(math.comb(n - g - 1, o - 1), denom)
    return float(o * total)


def exact_rle_splits(gaps: list[int], max_run: int) -> int:
    """Placeholders for concrete gaps (leading + between nonzeros)."""
    return sum(max(0, math.ceil((g - max_run) / (max_run + 1))) for g in gaps)


# -- model base ---------------------------------------------------------------


class DensityModel:
    """Occupancy oracle for axis-aligned blocks of one tensor."""

    coordinate_dependent = False

    def __init__(self, shape: tuple[int, ...]):
        self.shape = shape
        self.size = math.prod(shape) if shape else 1

    # subclasses implement the origin-specific core
    def _distribution_at(self, extents: tuple[int, ...], origin: tuple[int, ...]) -> OccupancyDistribution:
        raise NotImplementedError

    def _check(self, extents: tuple[int, ...], origin: tuple[int, ...] | None):
        if len(extents) != len(self.shape):
            raise SpecInvariantError(f"tile rank {len(extents)} != tensor rank {len(self.shape)}")
        for e, b in zip(extents, self.shape):
            if e < 1 or e > b:
                raise SpecInvariantError(f"tile extent {e} outside tensor bound {b}")
        if origin is not None:
            for o, e, b in zip(origin, extents, self.shape):
                if o % e != 0 or o + e > b:
                    raise SpecInvariantError(f"tile origin {origin} not aligned for extents {extents}")

    def _grid(self, extents: tuple[int, ...]):
        """All aligned origins for tiles of the given extents."""
        ranges = [range(0, b, e) for b, e in zip(self.shape, extents)]
        out = [()]
        for rng in ranges:
            out = [o + (v,) for o in out for v in rng]
        return out

    def occupancy_distribution(
        self, extents: tuple[int, ...], origin: tuple[int, ...] | None = None
    ) -> OccupancyDistribution:
        self._check(extents, origin)
        if origin is not None:
            return self._distribution_at(extents, origin)
        if not self.coordinate_dependent:
            return self._distribution_at(extents, tuple(0 for _ in self.shape))
        grid = self._grid(extents)
        w = 1.0 / len(grid)
        return _mixture([(w, self._distribution_at(extents, o)) for o in grid], math.prod(extents))

    def prob_empty(self, extents: tuple[int, ...], origin: tuple[int, ...] | None = None) -> float:
        return self.occupancy_distribution(extents, origin).prob_empty

    def expected_occupancy(self, extents: tuple[int, ...], origin: tuple[int, ...] | None = None) -> float:
        return self.occupancy_distribution(extents, origin).expected

    def max_occupancy(self, extents: tuple[int, ...]) -> int:
        return self.occupancy_distribution(extents).max_occupancy

    def element_density(self) -> float:
        return self.expected_occupancy(tuple(1 for _ in self.shape))

    def nonempty_children(
        self,
        parent_extents: tuple[int, ...],
        child_extents: tuple[int, ...],
        origin: tuple[int, ...] | None = None,
    ) -> OccupancyDistribution:
        """Distribution of the number of nonempty child blocks within one
        parent block (children tile the parent)."""
        self._check(parent_extents, origin)
        L = 1
        for p, c in zip(parent_extents, child_extents):
            if p % c != 0:
                raise SpecInvariantError(f"child extents {child_extents} do not tile parent {parent_extents}")
            L *= p // c
        if origin is None and self.coordinate_dependent:
            grid = self._grid(parent_extents)
            w = 1.0 / len(grid)
            return _mixture(
                [(w, self.nonempty_children(parent_extents, child_extents, o)) for o in grid], L
            )
        base = origin if origin is not None else tuple(0 for _ in self.shape)
        return self._nonempty_children_at(parent_extents, child_extents, base, L)

    def _nonempty_children_at(self, parent, child, origin, L) -> OccupancyDistribution:
        # generic exact fallback: enumerate child blocks; only valid for
        # deterministic models (overridden by the statistical ones).
        raise NotImplementedError


# -- uniform ------------------------------------------------------------------


class UniformModel(DensityModel):
    def __init__(self, shape: tuple[int, ...], density: float, bernoulli: bool = False):
        super().__init__(shape)
        self.density = density
        self.bernoulli = bernoulli
        self.r = min(self.size, round(density * self.size))

    def _distribution_at(self, extents, origin):
        s = math.prod(extents)
        if self.bernoulli:
            d = self.density
            support = tuple((k, math.comb(s, k) * d**k * (1 - d) ** (s - k)) for k in range(s + 1))
            return OccupancyDistribution(tuple((k, p) for k, p in support if p > 0), s)
        return hyper_distribution(self.size, self.r, s)

    def prob_empty(self, extents, origin=None):
        s = math.prod(extents)
        if self.bernoulli:
            return (1 - self.density) ** s
        return hyper_prob_empty(self.size, self.r, s)

    def expected_occupancy(self, extents, origin=None):
        s = math.prod(extents)
        if self.bernoulli:
            return s * self.density
        return s * self.r / self.size

    def max_occupancy(self, extents):
        s = math.prod(extents)
        return s if self.bernoulli and self.density > 0 else min(s, self.r)

    def _nonempty_children_at(self, parent, child, origin, L):
        b = math.prod(child)
        if self.bernoulli:
            q = 1 - (1 - self.density) ** b
            support = tuple((j, math.comb(L, j) * q**j * (1 - q) ** (L - j)) for j in range(L + 1))
            return OccupancyDistribution(tuple((j, p) for j, p in support if p > 0), L)
        return OccupancyDistribution(hyper_nonempty_blocks(self.size, self.r, b, L), L)

    def rle_split_expectation(self, fiber_len: int, occupancy: int, max_run: int) -> float:
        # given the occupancy, the arrangement is uniform either way
        return expected_rle_splits(fiber_len, occupancy, max_run)


# -- fixed structured ---------------------------------------------------------


class FixedStructuredModel(DensityModel):
    """Exactly n nonzeros per aligned m-block along one axis."""

    def __init__(self, shape: tuple[int, ...], n: int, m: int, axis: int):
        super().__init__(shape)
        self.n = n
        self.m = m
        self.axis = axis
        if shape[axis] % m != 0:
            raise SpecInvariantError(
                f"structured dim bound {shape[axis]} not divisible by block length {m}"
            )

    def _segments(self, extent: int, offset: int) -> list[int]:
        """Overlap lengths of [offset, offset+extent) with aligned m-blocks."""
        segs = []
        pos = offset
        end = offset + extent
        while pos < end:
            blk_end = (pos // self.m + 1) * self.m
            seg = min(end, blk_end) - pos
            segs.append(seg)
            pos += seg
        return segs

    def _distribution_at(self, extents, origin):
        rows = math.prod(e for i, e in enumerate(extents) if i != self.axis)
        segs = self._segments(extents[self.axis], origin[self.axis])
        dist = _point_mass(0, 0)
        for seg in segs:
            part = hyper_distribution(self.m, self.n, seg)
            for _ in range(rows):
                dist = _convolve(dist, part)
        return dist

    def expected_occupancy(self, extents, origin=None):
        return math.prod(extents) * self.n / self.m

    def _nonempty_children_at(self, parent, child, origin, L):
        ca, pa = child[self.axis], parent[self.axis]
        rows_parent = math.prod(e for i, e in enumerate(parent) if i != self.axis)
        rows_child = math.prod(e for i, e in enumerate(child) if i != self.axis)
        if ca % self.m == 0:
            # every child spans whole blocks -> deterministically nonempty
            return _point_mass(L, L)
        if self.m % ca == 0 and rows_child == 1:
            # children subdivide blocks; per block use ball-in-box I-E,
            # independent across blocks and rows
            per_block = OccupancyDistribution(
                hyper_nonempty_blocks(self.m, self.n, ca, self.m // ca), self.m // ca
            )
            blocks = (pa // self.m) * rows_parent
            dist = _point_mass(0, 0)
            for _ in range(blocks):
                dist = _convolve(dist, per_block)
            return dist
        raise SpecInvariantError(
            f"unsupported structured tiling: child extent {ca} vs block {self.m} "
            f"(need child spanning whole blocks, or subdividing one block with unit rows)"
        )

    def rle_split_expectation(self, fiber_len: int, occupancy: int, max_run: int) -> float:
        worst_gap = 2 * (self.m - self.n)
        if worst_gap <= max_run:
            return 0.0
        raise SpecInvariantError(
            f"run-length field too narrow for {self.n}:{self.m} structure (worst gap {worst_gap} > {max_run})"
        )


# -- banded -------------------------------------------------------------------


class BandedModel(DensityModel):
    """Deterministic band over a 2-D tensor: nonzero iff |i - j| < half width."""

    coordinate_dependent = True

    def __init__(self, shape: tuple[int, ...], band_width: int):
        if len(shape) != 2:
            raise SpecInvariantError("banded model requires a 2-D tensor")
        super().__init__(shape)
        self.band_width = band_width
        self.half = math.ceil(band_width / 2)
        if band_width > max(shape):
            raise SpecInvariantError(f"band_width {band_width} exceeds dim bound {max(shape)}")

    def _count(self, extents, origin) -> int:
        (r0, c0), (h, w) = origin, extents
        total = 0
        for i in range(r0, r0 + h):
            lo = max(c0, i - self.half + 1)
            hi = min(c0 + w - 1, i + self.half - 1)
            if hi >= lo:
                total += hi - lo + 1
        return total

    def _distribution_at(self, extents, origin):
        return _point_mass(self._count(extents, origin), math.prod(extents))

    def _nonempty_children_at(self, parent, child, origin, L):
        cnt = 0
        for i in range(0, parent[0], child[0]):
            for j in range(0, parent[1], child[1]):
                if self._count(child, (origin[0] + i, origin[1] + j)) > 0:
                    cnt += 1
        return _point_mass(cnt, L)

    def nonzeros(self) -> set[tuple[int, ...]]:
        return {
            (i, j)
            for i in range(self.shape[0])
            for j in range(self.shape[1])
            if abs(i - j) < self.half
        }

    def rle_split_expectation(self, fiber_len, occupancy, max_run):
        # handled via the exact per-fiber path in formats (coordinate dependent)
        raise NotImplementedError


# -- actual data --------------------------------------------------------------


class ActualDataModel(DensityModel):
    coordinate_dependent = True

    def __init__(self, shape: tuple[int, ...], coords: set[tuple[int, ...]]):
        super().__init__(shape)
        for c in coords:
            if len(c) != len(shape) or any(x < 0 or x >= b for x, b in zip(c, shape)):
                raise SpecInvariantError(f"coordinate {c} out of bounds for shape {shape}")
        self.coords = frozenset(coords)

    def _count(self, extents, origin) -> int:
        return sum(
            1
            for c in self.coords
            if all(o <= x < o + e for x, o, e in zip(c, origin, extents))
        )

    def _distribution_at(self, extents, origin):
        return _point_mass(self._count(extents, origin), math.prod(extents))

    def _nonempty_children_at(self, parent, child, origin, L):
        seen = set()
        for c in self.coords:
            if all(o <= x < o + e for x, o, e in zip(c, origin, parent)):
                seen.add(tuple((x - o) // ce for x, o, ce in zip(c, origin, child)))
        return _point_mass(len(seen), L)


# -- binding ------------------------------------------------------------------


def load_actual_data(path: str | Path) -> ActualDataModel:
    """Parse a coordinate file: ``dims: d0 d1 ...`` then one coordinate per line."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or not lines[0].strip().startswith("dims:"):
        raise SpecSyntaxError("first line must be 'dims: <size> ...'", where=f"{path}:1")
    try:
        shape = tuple(int(x) for x in lines[0].split(":", 1)[1].split())
    except ValueError:
        raise SpecSyntaxError("malformed dims line", where=f"{path}:1")
    if not shape or any(b < 1 for b in shape):
        raise SpecSyntaxError("dims must be positive integers", where=f"{path}:1")
    coords: set[tuple[int, ...]] = set()
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            c = tuple(int(x) for x in line.split())
        except ValueError:
            raise SpecSyntaxError(f"malformed coordinate line {line!r}", where=f"{path}:{ln}")
        if len(c) != len(shape):
            raise SpecSyntaxError(f"coordinate has {len(c)} values, tensor has {len(shape)} dims", where=f"{path}:{ln}")
        if any(x < 0 or x >= b for x, b in zip(c, shape)):
            raise SpecSyntaxError(f"coordinate {c} out of bounds", where=f"{path}:{ln}")
        if c in coords:
            raise SpecSyntaxError(f"duplicate coordinate {c}", where=f"{path}:{ln}")
        coords.add(c)
    return ActualDataModel(shape, coords)


def occupancy_distribution(
    model: DensityModel, extents: tuple[int, ...], origin: tuple[int, ...] | None = None
) -> OccupancyDistribution:
    """Functional form of DensityModel.occupancy_distribution."""
    return model.occupancy_distribution(extents, origin)


def prob_empty(
    model: DensityModel, extents: tuple[int, ...], origin: tuple[int, ...] | None = None
) -> float:
    """P(the tile holds no nonzeros)."""
    return model.prob_empty(extents, origin)


def expected_occupancy(model: DensityModel, extents: tuple[int, ...]) -> float:
    """E(nonzeros in a tile of the given extents)."""
    return model.expected_occupancy(extents)


def build_model(spec: DensityModelSpec, shape: tuple[int, ...], projection: tuple[str, ...] = ()) -> DensityModel:
    """Instantiate the occupancy model for a tensor of the given shape."""
    if spec.kind == "uniform":
        return UniformModel(shape, spec.density, spec.bernoulli)
    if spec.kind == "fixed_structured":
        if projection:
            if spec.dim not in projection:
                raise SpecInvariantError(
                    f"structured dim {spec.dim!r} not in tensor projection {projection}"
                )
            axis = projection.index(spec.dim)
        else:
            axis = 0
        return FixedStructuredModel(shape, spec.n, spec.m, axis)
    if spec.kind == "banded":
        return BandedModel(shape, spec.band_width)
    if spec.kind == "actual_data":
        model = load_actual_data(spec.path)
        if model.shape != shape:
            raise SpecInvariantError(
                f"actual data shape {model.shape} does not match tensor shape {shape}"
            )
        return model
    raise SpecInvariantError(f"unknown density model kind {spec.kind!r}")
