"""Per-rank representation formats and their footprint/traffic models.

A tensor tile stored at a level is described as an ordered list of per-rank
formats, outermost rank first (a fibertree view: each rank holds fibers of
coordinate/payload pairs, empty coordinates elided by compressed ranks).

Per-rank kinds:
  U    uncompressed values, no metadata.
  UB   uncompressed values plus a one-bit-per-position mask.
  B    bitmask: one bit per position, payloads packed (nonzeros only).
  CP   coordinate/payload: one multi-bit coordinate per nonzero.
  RLE  run lengths (zeros before each nonzero); an r-bit field encodes runs
       up to 2^r - 1, longer runs insert zero-payload placeholder entries.
  UOP  offset pair per fiber: start (inclusive) and end (noninclusive)
       positions of the fiber's payloads in the pooled rank below.

Compressed parents (B, CP, RLE) elide empty subtrees; uncompressed parents
(U, UB, UOP) instantiate every child. Stored data words are the nonzero
count (plus RLE placeholders) when any rank compresses payloads, else the
full tile.

Packing convention: each fiber's per-rank metadata is word-aligned
independently, so a transfer moves ceil(fiber_bits / metadata_word_width)
words per fiber. This granularity keeps expected word counts linear over
fibers, which is what lets the statistical path agree exactly with per-tile
accounting. RLE placeholders are charged on tile transfers and footprints;
per-element streaming at the consuming level charges logical nonzeros only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .density import (
    DensityModel,
    OccupancyDistribution,
    exact_rle_splits,
    expected_rle_splits,
)
from .errors import SpecInvariantError, SpecReferenceError

UNCOMPRESSED_KINDS = ("U", "UB", "UOP")
COMPRESSED_KINDS = ("B", "CP", "RLE")
RANK_KINDS = UNCOMPRESSED_KINDS + COMPRESSED_KINDS


@dataclass(frozen=True)
class RankFormat:
    kind: str
    coord_width: int | None = None  # CP
    run_length_width: int | None = None  # RLE
    offset_width: int | None = None  # UOP
    dims: tuple[str, ...] | None = None  # explicit (possibly flattened) dim binding

    def __post_init__(self):
        if self.kind not in RANK_KINDS:
            raise SpecInvariantError(f"unknown rank format kind {self.kind!r}")
        for w in (self.coord_width, self.run_length_width, self.offset_width):
            if w is not None and w < 1:
                raise SpecInvariantError(f"format bit widths must be >= 1, got {w}")

    @property
    def compresses_payloads(self) -> bool:
        return self.kind in COMPRESSED_KINDS

    @property
    def has_metadata(self) -> bool:
        return self.kind != "U"


@dataclass(frozen=True)
class RepresentationFormat:
    """Ordered rank formats, outermost first."""

    ranks: tuple[RankFormat, ...]

    def __post_init__(self):
        if not self.ranks:
            raise SpecInvariantError("representation format needs at least one rank")

    @property
    def has_metadata(self) -> bool:
        return any(r.has_metadata for r in self.ranks)

    @property
    def compressed(self) -> bool:
        """True if stored data words shrink with sparsity."""
        return any(r.compresses_payloads for r in self.ranks)

    @property
    def innermost_per_position(self) -> bool:
        """Innermost metadata streams one entry per position (masks) rather
        than one per stored nonzero (coordinate lists)."""
        return self.ranks[-1].kind in ("B", "UB")


CLASSIC_FORMATS = {
    "CSR": ("UOP", "CP"),
    "COO2": ("CP*",),  # one CP rank flattening both dims
    "CSB": ("UOP", "CP", "CP"),
    "CSF3": ("CP", "CP", "CP"),
}


def describe_classic_format(name: str) -> RepresentationFormat:
    """Classic format names as per-rank compositions (CSR = UOP-CP, etc.)."""
    key = name.upper()
    if key not in CLASSIC_FORMATS:
        raise SpecReferenceError(
            f"unknown classic format (know {sorted(CLASSIC_FORMATS)})", entity=name
        )
    ranks = tuple(RankFormat(spec.rstrip("*")) for spec in CLASSIC_FORMATS[key])
    return RepresentationFormat(ranks)


# -- resolution against a concrete tile shape ---------------------------------


@dataclass(frozen=True)
class ResolvedRank:
    kind: str
    dims: tuple[str, ...]
    fiber_length: int  # coordinates per fiber (product over flattened dims)
    under: int  # elements below one coordinate
    slots: int  # potential fiber count (product of outer fiber lengths)
    width: int  # metadata bits per unit (coord / run / offset / mask bit)
    max_run: int | None = None  # RLE only


@dataclass(frozen=True)
class ResolvedFormat:
    ranks: tuple[ResolvedRank, ...]
    projection: tuple[str, ...]
    extents: tuple[int, ...]  # tile extents in projection order
    compressed: bool

    @property
    def tile_size(self) -> int:
        return math.prod(self.extents) if self.extents else 1

    def element_metadata_bits(self) -> int:
        """Innermost-rank metadata bits streamed per element at consume time."""
        inner = self.ranks[-1]
        if inner.kind in ("B", "UB"):
            return 1
        if inner.kind in ("CP", "RLE"):
            return inner.width
        return 0

    @property
    def innermost_per_position(self) -> bool:
        return self.ranks[-1].kind in ("B", "UB")


def _bits_for(n: int) -> int:
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


def resolve_format(
    fmt: RepresentationFormat, projection: tuple[str, ...], extents_by_dim: dict[str, int]
) -> ResolvedFormat:
    """Bind ranks to tile dims and fix bit widths for a concrete tile shape.

    With no explicit bindings and matching counts, ranks bind one dim each in
    projection order; a single unbound rank flattens the whole tile.
    """
    ext = tuple(extents_by_dim[d] for d in projection)
    explicit = [r.dims for r in fmt.ranks]
    if all(d is None for d in explicit):
        if len(fmt.ranks) == len(projection):
            bindings = [(d,) for d in projection]
        elif len(fmt.ranks) == 1:
            bindings = [tuple(projection)]
        else:
            raise SpecInvariantError(
                f"format has {len(fmt.ranks)} ranks but tile has {len(projection)} dims; "
                "bind dims explicitly"
            )
    else:
        if any(d is None for d in explicit):
            raise SpecInvariantError("either all or no ranks may bind dims explicitly")
        flat = [d for grp in explicit for d in grp]
        if sorted(flat) != sorted(projection):
            raise SpecInvariantError(
                f"rank dim bindings {explicit} must cover tile dims {projection} exactly"
            )
        bindings = [tuple(grp) for grp in explicit]

    lengths = [math.prod(extents_by_dim[d] for d in grp) for grp in bindings]
    resolved = []
    under = 1
    for i in range(len(fmt.ranks) - 1, -1, -1):
        rf = fmt.ranks[i]
        L = lengths[i]
        if rf.kind == "CP":
            width = rf.coord_width or _bits_for(L)
        elif rf.kind == "RLE":
            width = rf.run_length_width or _bits_for(L)
        elif rf.kind == "UOP":
            width = rf.offset_width or _bits_for(L * under + 1)
        elif rf.kind in ("B", "UB"):
            width = 1
        else:
            width = 0
        max_run = (1 << width) - 1 if rf.kind == "RLE" else None
        if rf.kind == "RLE" and i < len(fmt.ranks) - 1 and max_run < L - 1:
            raise SpecInvariantError(
                "run-length overflow placeholders are only supported at the innermost rank; "
                f"widen the rank-{i} run length field"
            )
        slots = math.prod(lengths[:i]) if i else 1
        resolved.append(ResolvedRank(rf.kind, bindings[i], L, under, slots, width, max_run))
        under *= L
    resolved.reverse()
    return ResolvedFormat(tuple(resolved), projection, ext, fmt.compressed)


# -- exact encoder (concrete tiles) --------------------------------------------


def _rank_coordinate(rel: tuple[int, ...], dims: tuple[str, ...], projection, extents_by_dim) -> int:
    """Flattened (row-major in group order) coordinate of an element for one rank."""
    c = 0
    for d in dims:
        c = c * extents_by_dim[d] + rel[projection.index(d)]
    return c


def _tile_paths(rfmt: ResolvedFormat, origin: tuple[int, ...], coords) -> list[tuple[int, ...]]:
    ext_by_dim = dict(zip(rfmt.projection, rfmt.extents))
    rel = [
        tuple(x - o for x, o in zip(c, origin))
        for c in coords
        if all(o <= x < o + e for x, o, e in zip(c, origin, rfmt.extents))
    ]
    return sorted(
        tuple(_rank_coordinate(r, rank.dims, rfmt.projection, ext_by_dim) for rank in rfmt.ranks)
        for r in rel
    )


def _fiber_children(paths: list[tuple[int, ...]], depth: int) -> dict[tuple[int, ...], list[int]]:
    fibers: dict[tuple[int, ...], set[int]] = {}
    for p in paths:
        for r in range(depth):
            fibers.setdefault(p[:r], set()).add(p[r])
    return {k: sorted(v) for k, v in fibers.items()}


def _instantiated_prefixes(rfmt: ResolvedFormat, fibers, depth: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = [()]
    for pr in range(depth):
        rank = rfmt.ranks[pr]
        nxt = []
        for pref in out:
            if rank.kind in COMPRESSED_KINDS:
                children = fibers.get(pref, [])
            else:
                children = range(rank.fiber_length)
            nxt.extend(pref + (c,) for c in children)
        out = nxt
    return out


def _rle_placeholders(present: list[int], max_run: int) -> int:
    gaps, prev = [], -1
    for c in present:
        gaps.append(c - prev - 1)
        prev = c
    return exact_rle_splits(gaps, max_run)


def encode_tile_words(
    fmt: RepresentationFormat | ResolvedFormat,
    extents: tuple[int, ...],
    origin: tuple[int, ...],
    coords,
    md_word_width: int,
    projection: tuple[str, ...] | None = None,
) -> tuple[float, int]:
    """Exact (metadata_words, metadata_bits) of a concrete tile, packing each
    fiber's per-rank metadata into ``md_word_width``-bit words."""
    if isinstance(fmt, RepresentationFormat):
        if projection is None:
            projection = tuple(f"d{i}" for i in range(len(extents)))
        rfmt = resolve_format(fmt, projection, dict(zip(projection, extents)))
    else:
        rfmt = fmt
    paths = _tile_paths(rfmt, origin, coords)
    fibers = _fiber_children(paths, len(rfmt.ranks))
    words = 0.0
    bits_total = 0
    for r, rank in enumerate(rfmt.ranks):
        if rank.kind == "U":
            continue
        for pref in _instantiated_prefixes(rfmt, fibers, r):
            present = fibers.get(pref, [])
            if rank.kind in ("B", "UB"):
                bits = rank.fiber_length
            elif rank.kind == "CP":
                bits = len(present) * rank.width
            elif rank.kind == "RLE":
                bits = (len(present) + _rle_placeholders(present, rank.max_run)) * rank.width
            elif rank.kind == "UOP":
                bits = 2 * rank.width
            else:
                bits = 0
            bits_total += bits
            words += math.ceil(bits / md_word_width)
    return words, bits_total


def stored_data_words(rfmt: ResolvedFormat, origin: tuple[int, ...], coords) -> int:
    """Stored payload words of a concrete tile (nonzeros plus innermost RLE
    placeholders when compressed; the full tile otherwise)."""
    if not rfmt.compressed:
        return rfmt.tile_size
    paths = _tile_paths(rfmt, origin, coords)
    inner = rfmt.ranks[-1]
    ph = 0
    if inner.kind == "RLE":
        fibers = _fiber_children(paths, len(rfmt.ranks))
        for pref in {p[:-1] for p in paths}:
            ph += _rle_placeholders(fibers.get(pref, []), inner.max_run)
    return len(paths) + ph


# -- statistical footprints -----------------------------------------------------


@dataclass(frozen=True)
class RankFootprint:
    kind: str
    expected_bits: float
    worst_bits: float
    expected_words: float  # per tile transfer, per-fiber packed


@dataclass(frozen=True)
class FormatFootprint:
    per_rank: tuple[RankFootprint, ...]
    expected_metadata_bits: float
    worst_metadata_bits: float
    expected_metadata_words: float
    expected_data_words: float
    worst_data_words: float


def rank_metadata_bits(
    rank: RankFormat, fiber_length: int, occupancy: OccupancyDistribution
) -> tuple[float, float]:
    """(expected, worst-case) metadata bits of one fiber whose coordinate
    occupancy follows the given distribution."""
    if rank.kind == "U":
        return 0.0, 0.0
    if rank.kind in ("B", "UB"):
        return float(fiber_length), float(fiber_length)
    if rank.kind == "CP":
        w = rank.coord_width or _bits_for(fiber_length)
        return occupancy.expected * w, min(fiber_length, occupancy.max_occupancy) * w
    if rank.kind == "RLE":
        w = rank.run_length_width or _bits_for(fiber_length)
        max_run = (1 << w) - 1
        exp = occupancy.expect(lambda o: (o + expected_rle_splits(fiber_length, o, max_run)) * w)
        worst = _worst_rle_entries(fiber_length, occupancy.max_occupancy, max_run) * w
        return exp, worst
    if rank.kind == "UOP":
        w = rank.offset_width or _bits_for(fiber_length + 1)
        return 2.0 * w, 2.0 * w
    raise SpecInvariantError(f"unknown rank kind {rank.kind!r}")


def _worst_rle_entries(fiber_length: int, max_occ: int, max_run: int) -> int:
    """Worst stored entries (nonzeros + placeholders) over arrangements."""
    best = 0
    for o in range(max_occ + 1):
        zeros = fiber_length - o
        if o == 0:
            best = max(best, 0)  # empty fiber stores nothing (trailing free)
            continue
        ph = max(0, math.ceil((zeros - max_run) / (max_run + 1)))
        best = max(best, o + ph)
    return best


def _block_extents(rfmt: ResolvedFormat, rank_index: int, child: bool) -> tuple[int, ...]:
    """Extents of one fiber's block (or one coordinate's child block), in
    projection order."""
    tile = dict(zip(rfmt.projection, rfmt.extents))
    out = {}
    for i, rank in enumerate(rfmt.ranks):
        for d in rank.dims:
            inside = i > rank_index or (not child and i == rank_index)
            out[d] = tile[d] if inside else 1
    return tuple(out[d] for d in rfmt.projection)


def _nearest_compressed_ancestor(rfmt: ResolvedFormat, rank_index: int) -> int | None:
    for i in range(rank_index - 1, -1, -1):
        if rfmt.ranks[i].kind in COMPRESSED_KINDS:
            return i
    return None


def _expect_instantiated(xdist: OccupancyDistribution, pe_anc: float | None, g) -> float:
    """E[instantiated * g(X)]: a fiber exists unless its nearest compressed
    ancestor's block is empty (which forces X = 0)."""
    total = math.fsum(p * g(k) for k, p in xdist.support if k > 0)
    p0 = xdist.prob(0)
    if pe_anc is None:
        return total + p0 * g(0)
    return total + max(0.0, p0 - pe_anc) * g(0)


def tensor_representation_size(
    fmt: RepresentationFormat,
    projection: tuple[str, ...],
    extents_by_dim: dict[str, int],
    model: DensityModel,
    md_word_width: int = 8,
    origin: tuple[int, ...] | None = None,
) -> FormatFootprint:
    """Statistical footprint of one tile: per-rank expected/worst metadata
    bits, expected transfer words (per-fiber packing), and stored data words.

    Coordinate-dependent models (banded, actual data) are evaluated exactly
    through the encoder, averaged over aligned tile positions when no origin
    is given.
    """
    rfmt = resolve_format(fmt, projection, extents_by_dim)
    if model.coordinate_dependent:
        return _footprint_exact(rfmt, model, md_word_width, origin)

    per_rank = []
    exp_bits_total = exp_words_total = worst_bits_total = 0.0
    for i, rank in enumerate(rfmt.ranks):
        if rank.kind == "U":
            per_rank.append(RankFootprint("U", 0.0, 0.0, 0.0))
            continue
        fiber_block = _block_extents(rfmt, i, child=False)
        child_block = _block_extents(rfmt, i, child=True)
        xdist = model.nonempty_children(fiber_block, child_block)
        anc = _nearest_compressed_ancestor(rfmt, i)
        # a fiber exists iff every compressed ancestor coordinate above it is
        # nonempty; coordinate blocks nest, so the nearest one decides
        pe_anc = model.prob_empty(_block_extents(rfmt, anc, child=True)) if anc is not None else None

        if rank.kind in ("B", "UB"):
            bits_fn = lambda x, L=rank.fiber_length: float(L)
        elif rank.kind == "CP":
            bits_fn = lambda x, w=rank.width: float(x * w)
        elif rank.kind == "RLE":
            bits_fn = lambda x, rk=rank: (
                (x + (model.rle_split_expectation(rk.fiber_length, x, rk.max_run) if x else 0.0))
                * rk.width
            )
        elif rank.kind == "UOP":
            bits_fn = lambda x, w=rank.width: 2.0 * w
        else:
            bits_fn = lambda x: 0.0
        words_fn = lambda x, f=bits_fn: float(math.ceil(f(x) / md_word_width))

        exp_bits = rank.slots * _expect_instantiated(xdist, pe_anc, bits_fn)
        exp_words = rank.slots * _expect_instantiated(xdist, pe_anc, words_fn)
        if rank.kind == "RLE":
            worst_bits = rank.slots * _worst_rle_entries(
                rank.fiber_length, xdist.max_occupancy, rank.max_run
            ) * rank.width
        else:
            worst_bits = rank.slots * bits_fn(xdist.max_occupancy)
        per_rank.append(RankFootprint(rank.kind, exp_bits, worst_bits, exp_words))
        exp_bits_total += exp_bits
        exp_words_total += exp_words
        worst_bits_total += worst_bits

    tensor_ext = tuple(extents_by_dim[d] for d in projection)
    if rfmt.compressed:
        occ = model.occupancy_distribution(tensor_ext)
        exp_data = occ.expected
        worst_data = float(occ.max_occupancy)
        inner = rfmt.ranks[-1]
        if inner.kind == "RLE":
            inner_block = _block_extents(rfmt, len(rfmt.ranks) - 1, child=False)
            inner_occ = model.occupancy_distribution(inner_block)
            ph = inner_occ.expect(
                lambda o: model.rle_split_expectation(inner.fiber_length, o, inner.max_run)
                if o
                else 0.0
            )
            exp_data += inner.slots * ph
            worst_data = min(
                float(rfmt.tile_size),
                float(inner.slots * _worst_rle_entries(inner.fiber_length, inner.fiber_length, inner.max_run)),
            ) if ph else worst_data
    else:
        exp_data = worst_data = float(rfmt.tile_size)

    return FormatFootprint(
        tuple(per_rank), exp_bits_total, worst_bits_total, exp_words_total, exp_data, worst_data
    )


def _footprint_exact(
    rfmt: ResolvedFormat, model, md_word_width: int, origin: tuple[int, ...] | None
) -> FormatFootprint:
    """Exact footprint for coordinate-dependent models via the encoder."""
    if origin is not None:
        origins = [origin]
    else:
        origins = [()]
        for b, e in zip(model.shape, rfmt.extents):
            origins = [o + (v,) for o in origins for v in range(0, b, e)]
    coords = materialize_nonzeros(model)
    words = bits = data = 0.0
    worst_bits = worst_data = 0.0
    for o in origins:
        w, b = encode_tile_words(rfmt, rfmt.extents, o, coords, md_word_width)
        d = stored_data_words(rfmt, o, coords)
        words += w
        bits += b
        data += d
        worst_bits = max(worst_bits, float(b))
        worst_data = max(worst_data, float(d))
    n = len(origins)
    return FormatFootprint((), bits / n, worst_bits, words / n, data / n, worst_data)


def materialize_nonzeros(model) -> frozenset:
    """Concrete nonzero set of a deterministic (coordinate-dependent) model."""
    if hasattr(model, "coords"):
        return frozenset(model.coords)
    if hasattr(model, "nonzeros"):
        return frozenset(model.nonzeros())
    raise SpecInvariantError("model cannot be materialized for exact encoding")
