"""Finite interval lattices.

A lattice here is a finite tower of partitions ("generations") of a bounded
half-open base domain.  Generation 0 is the coarsest partition (its intervals
are the *roots*), and each generation k+1 refines generation k: every interval
of generation k is a disjoint union of intervals of generation k+1.  An
interval may persist unchanged across consecutive generations; such copies are
deduplicated into one logical interval whose *rank* records the deepest
generation containing it.  Intervals of the deepest generation are the
*leaves*; every step function of this package is constant on them.

All interval endpoints are exact rationals (`fractions.Fraction`), so
partition and telescoping identities (child lengths summing to the parent
length, generations tiling the base domain) hold exactly.  Intervals are
half-open [left, right), which makes partitions exact with no boundary
double counting.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "LatticeError",
    "EmptyInputError",
    "GapOrOverlapError",
    "NotARefinementError",
    "Interval",
    "Lattice",
    "HomogeneityStats",
    "build_lattice",
    "dyadic_lattice",
    "random_lattice",
    "homogeneity_stats",
    "as_fraction",
]


class LatticeError(ValueError):
    """Base class for lattice construction/validation failures."""


class EmptyInputError(LatticeError):
    """No generations, or a generation with no intervals."""


class GapOrOverlapError(LatticeError):
    """A generation fails to partition the base domain."""


class NotARefinementError(LatticeError):
    """A generation-(k+1) interval crosses a generation-k boundary."""


def as_fraction(x) -> Fraction:
    """Convert an endpoint to an exact rational.

    Accepts integers, `Fraction`s, other exact rationals, and strings like
    "3" or "1/2".  Floats are rejected: their implicit binary expansion is
    almost never the rational the caller meant, and exactness of the lattice
    geometry is a package-wide invariant.
    """
    if isinstance(x, float):
        raise TypeError(
            f"refusing float endpoint {x!r}; pass an int, Fraction, or 'p/q' string"
        )
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str, Rational)):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as a rational endpoint")


@dataclass(frozen=True, slots=True)
class Interval:
    """One logical lattice interval [left, right).

    `birth` is the first generation containing the interval, `rank` the last
    one (the interval appears in every generation in between).  `index` is
    its position in the owning lattice's preorder interval list and serves as
    the opaque identifier.  Roots have ``parent_index is None``; leaves have
    an empty ``child_indices``.
    """

    left: Fraction
    right: Fraction
    birth: int
    rank: int
    index: int
    parent_index: int | None
    child_indices: tuple[int, ...]

    @property
    def length(self) -> Fraction:
        return self.right - self.left

    @property
    def is_leaf(self) -> bool:
        return not self.child_indices

    @property
    def is_root(self) -> bool:
        return self.parent_index is None

    def contains(self, other: "Interval") -> bool:
        """Set inclusion of half-open intervals by coordinates."""
        return self.left <= other.left and other.right <= self.right

    def __str__(self) -> str:
        return f"[{self.left}, {self.right})"

    def __repr__(self) -> str:
        return (
            f"Interval({self}, birth={self.birth}, rank={self.rank}, "
            f"index={self.index})"
        )


@dataclass(frozen=True, slots=True)
class HomogeneityStats:
    """Branching and length-ratio extremes of a lattice.

    `r` is the largest child count over splitting intervals; `K` the largest
    parent/child length ratio, as an exact rational.  A lattice with no
    splits (depth 0, or all intervals persisting) has r = K = 1 by the
    empty-max convention.
    """

    r: int
    K: Fraction


class Lattice:
    """Validated tower of interval partitions; immutable after construction.

    Construct through :func:`build_lattice`, :func:`dyadic_lattice`, or
    :func:`random_lattice`.  Intervals are stored in preorder (roots left to
    right, each followed by its descendants), so the subtree of interval i
    occupies the contiguous index range [i, subtree_end(i)) and the leaves
    appear in left-to-right order.  That layout is what the operator modules
    lean on for vectorized tree recurrences.
    """

    __slots__ = (
        "intervals",
        "depth",
        "_breakpoints",
        "_parent",
        "_birth",
        "_rank",
        "_subtree_end",
        "_leaf_start",
        "_leaf_stop",
        "_len_f",
        "_gen_indices",
        "_leaf_indices",
        "_leaf_len_f",
        "_by_birth",
        "_span_index",
    )

    def __init__(self, generation_breakpoints: Sequence[Iterable]) -> None:
        gens = [tuple(as_fraction(x) for x in g) for g in generation_breakpoints]
        if not gens:
            raise EmptyInputError("a lattice needs at least one generation")
        for k, bps in enumerate(gens):
            if len(bps) < 2:
                raise EmptyInputError(
                    f"generation {k} has {len(bps)} breakpoints; need at least 2"
                )
            for a, b in zip(bps, bps[1:]):
                if a >= b:
                    raise GapOrOverlapError(
                        f"generation {k} breakpoints not strictly increasing "
                        f"at {a} >= {b}"
                    )

        base_left, base_right = gens[0][0], gens[0][-1]
        depth = len(gens) - 1

        # Dedup records: one entry per logical interval.
        lefts: list[Fraction] = []
        rights: list[Fraction] = []
        births: list[int] = []
        ranks: list[int] = []
        parents: list[int | None] = []
        children: list[list[int]] = []

        def new_record(l: Fraction, r: Fraction, k: int, parent: int | None) -> int:
            rid = len(lefts)
            lefts.append(l)
            rights.append(r)
            births.append(k)
            ranks.append(k)
            parents.append(parent)
            children.append([])
            if parent is not None:
                children[parent].append(rid)
            return rid

        prev_ids = [new_record(a, b, 0, None) for a, b in zip(gens[0], gens[0][1:])]
        prev_spans = list(zip(gens[0], gens[0][1:]))

        for k in range(1, depth + 1):
            bps = gens[k]
            cur_ids: list[int] = []
            cur_spans = list(zip(bps, bps[1:]))
            j = 0
            for l, r in cur_spans:
                while j < len(prev_spans) and prev_spans[j][1] <= l:
                    j += 1
                if (
                    j >= len(prev_spans)
                    or l < prev_spans[j][0]
                    or r > prev_spans[j][1]
                ):
                    raise NotARefinementError(
                        f"generation {k} interval [{l}, {r}) crosses a "
                        f"generation {k - 1} boundary"
                    )
                if (l, r) == prev_spans[j]:
                    rid = prev_ids[j]
                    ranks[rid] = k
                else:
                    rid = new_record(l, r, k, prev_ids[j])
                cur_ids.append(rid)
            if bps[0] != base_left or bps[-1] != base_right:
                raise GapOrOverlapError(
                    f"generation {k} covers [{bps[0]}, {bps[-1]}) but the base "
                    f"domain is [{base_left}, {base_right})"
                )
            prev_ids, prev_spans = cur_ids, cur_spans

        # Preorder relabeling: roots left to right, depth-first.  Root records
        # were created first, so their ids are 0 .. len(generation 0) - 1.
        n = len(lefts)
        order: list[int] = []
        stack = list(range(len(gens[0]) - 1))[::-1]
        while stack:
            rid = stack.pop()
            order.append(rid)
            stack.extend(reversed(children[rid]))
        assert len(order) == n
        newidx = {rid: i for i, rid in enumerate(order)}

        parent_arr = np.full(n, -1, dtype=np.int64)
        birth_arr = np.empty(n, dtype=np.int64)
        rank_arr = np.empty(n, dtype=np.int64)
        for rid, i in newidx.items():
            birth_arr[i] = births[rid]
            rank_arr[i] = ranks[rid]
            if parents[rid] is not None:
                parent_arr[i] = newidx[parents[rid]]

        child_tuples = [
            tuple(sorted(newidx[c] for c in children[rid])) for rid in order
        ]

        # Leaf slots (preorder = left-to-right), subtree extents, leaf spans.
        subtree_end = np.empty(n, dtype=np.int64)
        leaf_start = np.empty(n, dtype=np.int64)
        leaf_stop = np.empty(n, dtype=np.int64)
        leaf_indices: list[int] = []
        pos = 0
        for i in range(n):
            if not child_tuples[i]:
                leaf_start[i] = pos
                pos += 1
                leaf_stop[i] = pos
                leaf_indices.append(i)
        for i in range(n - 1, -1, -1):
            kids = child_tuples[i]
            if kids:
                subtree_end[i] = subtree_end[kids[-1]]
                leaf_start[i] = leaf_start[kids[0]]
                leaf_stop[i] = leaf_stop[kids[-1]]
            else:
                subtree_end[i] = i + 1

        self.intervals: tuple[Interval, ...] = tuple(
            Interval(
                left=lefts[rid],
                right=rights[rid],
                birth=births[rid],
                rank=ranks[rid],
                index=i,
                parent_index=(None if parent_arr[i] < 0 else int(parent_arr[i])),
                child_indices=child_tuples[i],
            )
            for i, rid in enumerate(order)
        )
        self.depth = depth
        self._breakpoints = tuple(gens)
        self._parent = parent_arr
        self._birth = birth_arr
        self._rank = rank_arr
        self._subtree_end = subtree_end
        self._leaf_start = leaf_start
        self._leaf_stop = leaf_stop
        self._len_f = np.array(
            [float(iv.length) for iv in self.intervals], dtype=np.float64
        )
        self._leaf_indices = np.array(leaf_indices, dtype=np.int64)
        self._leaf_len_f = self._len_f[self._leaf_indices]
        self._by_birth = tuple(
            np.nonzero(birth_arr == b)[0] for b in range(depth + 1)
        )
        self._gen_indices = tuple(
            tuple(
                int(i)
                for i in np.nonzero((birth_arr <= k) & (rank_arr >= k))[0]
            )
            for k in range(depth + 1)
        )
        self._span_index = {
            (iv.left, iv.right): iv.index for iv in self.intervals
        }

        for arr in (parent_arr, birth_arr, rank_arr, subtree_end, leaf_start,
                    leaf_stop, self._len_f, self._leaf_indices,
                    self._leaf_len_f):
            arr.setflags(write=False)

    # -- size / membership -------------------------------------------------

    @property
    def n_intervals(self) -> int:
        return len(self.intervals)

    @property
    def n_leaves(self) -> int:
        return len(self._leaf_indices)

    @property
    def base_left(self) -> Fraction:
        return self._breakpoints[0][0]

    @property
    def base_right(self) -> Fraction:
        return self._breakpoints[0][-1]

    @property
    def total_length(self) -> Fraction:
        return self.base_right - self.base_left

    def generation(self, k: int) -> tuple[Interval, ...]:
        """The k-th partition of the base domain, left to right."""
        return tuple(self.intervals[i] for i in self._gen_indices[k])

    def generation_breakpoints(self, k: int) -> tuple[Fraction, ...]:
        return self._breakpoints[k]

    @property
    def roots(self) -> tuple[Interval, ...]:
        return self.generation(0)

    @property
    def leaves(self) -> tuple[Interval, ...]:
        return tuple(self.intervals[int(i)] for i in self._leaf_indices)

    def parent(self, interval: Interval) -> Interval | None:
        i = interval.parent_index
        return None if i is None else self.intervals[i]

    def children(self, interval: Interval) -> tuple[Interval, ...]:
        return tuple(self.intervals[i] for i in interval.child_indices)

    def find(self, left, right) -> Interval | None:
        """The lattice interval with the given span, if any."""
        key = (as_fraction(left), as_fraction(right))
        i = self._span_index.get(key)
        return None if i is None else self.intervals[i]

    def owns(self, interval: Interval) -> bool:
        """Whether `interval` is (structurally) an interval of this lattice."""
        return (
            0 <= interval.index < self.n_intervals
            and self.intervals[interval.index] == interval
        )

    # -- equality / serialization -------------------------------------------

    def __eq__(self, other) -> bool:
        return isinstance(other, Lattice) and self._breakpoints == other._breakpoints

    def __hash__(self) -> int:
        return hash(self._breakpoints)

    def __repr__(self) -> str:
        return (
            f"Lattice(depth={self.depth}, intervals={self.n_intervals}, "
            f"leaves={self.n_leaves}, base=[{self.base_left}, {self.base_right}))"
        )


def build_lattice(generation_breakpoints: Sequence[Iterable]) -> Lattice:
    """Build and validate a lattice from per-generation breakpoint lists.

    ``generation_breakpoints[k]`` lists the strictly increasing endpoints of
    the k-th partition; generation k's intervals are the consecutive pairs.
    Raises :class:`EmptyInputError`, :class:`GapOrOverlapError`, or
    :class:`NotARefinementError` when the tower is malformed.
    """
    return Lattice(generation_breakpoints)


def dyadic_lattice(depth: int, base=(0, 1)) -> Lattice:
    """The dyadic tower over ``base``: every interval halves, ``depth`` times."""
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    left, right = (as_fraction(x) for x in base)
    gens = [[left, right]]
    for _ in range(depth):
        prev = gens[-1]
        nxt: list[Fraction] = [prev[0]]
        for a, b in zip(prev, prev[1:]):
            nxt.append((a + b) / 2)
            nxt.append(b)
        gens.append(nxt)
    return build_lattice(gens)


def random_lattice(
    seed: int, max_depth: int, max_children: int, max_roots: int
) -> Lattice:
    """Deterministic random lattice for fuzzing.

    Depth and root count are drawn uniformly within the caps; each interval
    either persists (child count 1) or splits into children whose breakpoints
    come from the parent subdivided into ``2 * max_children`` equal rational
    parts, so all coordinates stay on a fixed rational grid.  The same seed
    always yields the same lattice, and every output passes
    :func:`build_lattice` validation by construction.
    """
    if max_depth < 0:
        raise ValueError(f"max_depth must be >= 0, got {max_depth}")
    if max_children < 1:
        raise ValueError(f"max_children must be >= 1, got {max_children}")
    if max_roots < 1:
        raise ValueError(f"max_roots must be >= 1, got {max_roots}")
    rng = random.Random(f"lattice:{seed}")
    depth = rng.randint(0, max_depth)
    n_roots = rng.randint(1, max_roots)
    bps: list[Fraction] = [Fraction(0)]
    for _ in range(n_roots):
        bps.append(bps[-1] + rng.randint(1, 3))
    gens: list[list[Fraction]] = [bps]
    grid = 2 * max_children
    for _ in range(depth):
        prev = gens[-1]
        nxt: list[Fraction] = [prev[0]]
        for a, b in zip(prev, prev[1:]):
            c = rng.randint(1, max_children)
            if c > 1:
                cuts = sorted(rng.sample(range(1, grid), c - 1))
                step = (b - a) / grid
                nxt.extend(a + j * step for j in cuts)
            nxt.append(b)
        gens.append(nxt)
    return build_lattice(gens)


def homogeneity_stats(lattice: Lattice) -> HomogeneityStats:
    """Extremal branching count r and parent/child length ratio K.

    Both default to 1 on lattices with no split pairs (e.g. depth 0).
    """
    r = 1
    K = Fraction(1)
    for iv in lattice.intervals:
        if iv.child_indices:
            r = max(r, len(iv.child_indices))
            for j in iv.child_indices:
                K = max(K, iv.length / lattice.intervals[j].length)
    return HomogeneityStats(r=r, K=K)
