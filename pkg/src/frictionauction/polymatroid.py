"""Integral polymatroids via fully materialized rank tables.

A :class:`RankOracle` stores the rank of every subset of its ground set as
a bitmask-indexed table.  Construction validates normalization,
monotonicity and submodularity exhaustively, so every oracle in the system
is a genuine polymatroid rank function; the ground set is capped at 16
elements, which keeps exhaustive validation and the enumeration helpers
used by the brute-force referees cheap.

The module provides the restriction / contraction / direct-sum operations,
greedy linear optimization over the polymatroid or its base polyhedron
(returning the optimal *face*, not just one optimum), and exchange and
saturation capacities.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .errors import InternalCheckError, InvalidInputError

__all__ = ["RankOracle", "GreedyFace", "greedy_max"]

MAX_GROUND = 16


class RankOracle:
    """Rank function of an integral polymatroid on an ordered ground set.

    The table is fully populated and validated at construction; instances
    are immutable afterwards and safe to share.
    """

    __slots__ = ("ground", "_bit", "_rank")

    def __init__(self, ground: Sequence[Hashable], table: Sequence[int]):
        ground = tuple(ground)
        if len(set(ground)) != len(ground):
            raise InvalidInputError(f"duplicate ground elements: {ground}")
        if len(ground) > MAX_GROUND:
            raise InvalidInputError(
                f"ground set of size {len(ground)} exceeds the cap of {MAX_GROUND}"
            )
        size = 1 << len(ground)
        ranks = list(table)
        if len(ranks) != size:
            raise InvalidInputError(
                f"rank table must have {size} entries, got {len(ranks)}"
            )
        self.ground = ground
        self._bit = {e: 1 << i for i, e in enumerate(ground)}
        self._rank = ranks
        self._validate()

    # -- construction ----------------------------------------------------------

    @classmethod
    def from_function(
        cls, ground: Sequence[Hashable], fn: Callable[[frozenset], int]
    ) -> "RankOracle":
        """Materialize the table by evaluating ``fn`` on every subset."""
        ground = tuple(ground)
        table = []
        for mask in range(1 << len(ground)):
            subset = frozenset(e for i, e in enumerate(ground) if mask >> i & 1)
            table.append(int(fn(subset)))
        return cls(ground, table)

    @classmethod
    def from_points(
        cls, ground: Sequence[Hashable], points: Iterable[Sequence[int]]
    ) -> "RankOracle":
        """Rank function ``S -> max x(S)`` of a nonempty family of vectors.

        Each point is a vector aligned with ``ground``.  When the family is
        an M-convex set this is the rank function of its base polyhedron.
        """
        ground = tuple(ground)
        pts = [tuple(p) for p in points]
        if not pts:
            raise InvalidInputError("rank of an empty family is undefined")
        table = []
        for mask in range(1 << len(ground)):
            idx = [i for i in range(len(ground)) if mask >> i & 1]
            table.append(max(sum(p[i] for i in idx) for p in pts))
        return cls(ground, table)

    def _validate(self) -> None:
        ranks = self._rank
        if ranks[0] != 0:
            raise InvalidInputError(f"rank of the empty set must be 0, got {ranks[0]}")
        n = len(self.ground)
        full = (1 << n) - 1
        for mask in range(full + 1):
            r = ranks[mask]
            if r < 0:
                raise InvalidInputError(f"negative rank {r} at mask {mask}")
            for i in range(n):
                if mask >> i & 1:
                    continue
                gain = ranks[mask | 1 << i] - r
                if gain < 0:
                    raise InvalidInputError(
                        f"rank not monotone at mask {mask} element {self.ground[i]}"
                    )
                # diminishing marginal gains <=> submodularity
                for j in range(n):
                    if j == i or mask >> j & 1:
                        continue
                    wider = mask | 1 << j
                    if ranks[wider | 1 << i] - ranks[wider] > gain:
                        raise InvalidInputError(
                            f"rank not submodular at mask {mask} "
                            f"elements {self.ground[i]}, {self.ground[j]}"
                        )

    # -- queries ---------------------------------------------------------------

    def mask_of(self, subset: Iterable[Hashable]) -> int:
        mask = 0
        for e in subset:
            try:
                mask |= self._bit[e]
            except KeyError:
                raise InvalidInputError(f"{e!r} is not a ground element") from None
        return mask

    def rank(self, subset: Iterable[Hashable]) -> int:
        return self._rank[self.mask_of(subset)]

    def rank_mask(self, mask: int) -> int:
        return self._rank[mask]

    @property
    def full_rank(self) -> int:
        return self._rank[-1]

    def contains(self, point: Mapping[Hashable, int], base: bool = False) -> bool:
        """Membership of an integer point in P (or, with ``base=True``, in B)."""
        vec = [point.get(e, 0) for e in self.ground]
        if any(v < 0 for v in vec):
            return False
        for mask in range(1, 1 << len(self.ground)):
            total = sum(vec[i] for i in range(len(vec)) if mask >> i & 1)
            if total > self._rank[mask]:
                return False
        if base and sum(vec) != self.full_rank:
            return False
        return True

    # -- operations ------------------------------------------------------------

    def restrict(self, subset: Iterable[Hashable]) -> "RankOracle":
        """Restriction to ``subset``: same ranks, smaller ground set."""
        sub = tuple(e for e in self.ground if e in set(subset))
        if len(sub) != len(set(subset)):
            raise InvalidInputError("restriction set is not contained in the ground")
        bits = [self._bit[e] for e in sub]
        table = []
        for mask in range(1 << len(sub)):
            big = 0
            for i, b in enumerate(bits):
                if mask >> i & 1:
                    big |= b
            table.append(self._rank[big])
        return RankOracle(sub, table)

    def contract(self, subset: Iterable[Hashable]) -> "RankOracle":
        """Contraction by ``subset``: ``rank'(S) = rank(S | subset) - rank(subset)``."""
        drop = set(subset)
        dropped_mask = self.mask_of(drop)
        keep = tuple(e for e in self.ground if e not in drop)
        bits = [self._bit[e] for e in keep]
        offset = self._rank[dropped_mask]
        table = []
        for mask in range(1 << len(keep)):
            big = dropped_mask
            for i, b in enumerate(bits):
                if mask >> i & 1:
                    big |= b
            table.append(self._rank[big] - offset)
        return RankOracle(keep, table)

    def direct_sum(self, other: "RankOracle") -> "RankOracle":
        """Direct sum on disjoint grounds: ranks add across the partition."""
        if set(self.ground) & set(other.ground):
            raise InvalidInputError("direct sum requires disjoint ground sets")
        ground = self.ground + other.ground
        n1 = len(self.ground)
        table = []
        for mask in range(1 << len(ground)):
            lo = mask & ((1 << n1) - 1)
            hi = mask >> n1
            table.append(self._rank[lo] + other._rank[hi])
        return RankOracle(ground, table)

    # -- enumeration (desk scale) ------------------------------------------------

    def points(self) -> list[tuple[int, ...]]:
        """All integer points of P, as vectors aligned with the ground."""
        caps = [self._rank[1 << i] for i in range(len(self.ground))]
        out = []
        for vec in product(*(range(c + 1) for c in caps)):
            ok = True
            for mask in range(1, 1 << len(vec)):
                if (
                    sum(vec[i] for i in range(len(vec)) if mask >> i & 1)
                    > self._rank[mask]
                ):
                    ok = False
                    break
            if ok:
                out.append(vec)
        return out

    def base_points(self) -> list[tuple[int, ...]]:
        """All integer points of the base polyhedron B."""
        return [p for p in self.points() if sum(p) == self.full_rank]

    # -- capacities ----------------------------------------------------------------

    def exchange_capacity(
        self,
        point: Mapping[Hashable, int],
        add: Hashable,
        remove: Hashable | None = None,
    ) -> int:
        """Largest ``a`` with ``point + a*(unit(add) - unit(remove))`` in P.

        ``remove=None`` gives the saturation capacity: min over subsets
        containing ``add`` (and avoiding ``remove``) of ``rank(S) - point(S)``.
        """
        if add == remove:
            raise InvalidInputError("exchange elements must differ")
        if not self.contains(point):
            raise InvalidInputError("point lies outside the polymatroid")
        vec = [point.get(e, 0) for e in self.ground]
        add_bit = self._bit[add]
        rem_bit = self._bit[remove] if remove is not None else 0
        best = None
        for mask in range(1 << len(self.ground)):
            if not mask & add_bit or mask & rem_bit:
                continue
            slack = self._rank[mask] - sum(
                vec[i] for i in range(len(vec)) if mask >> i & 1
            )
            if best is None or slack < best:
                best = slack
        if best is None:  # pragma: no cover - add is always a ground element
            raise InternalCheckError("no subset contains the added element")
        if remove is not None:
            # points stay nonnegative, so the removed coordinate caps the step
            best = min(best, point.get(remove, 0))
        return best

    def dump_table(self) -> dict[str, int]:
        """Debug dump ``{subset-bitmask: rank}`` for golden tests."""
        return {str(mask): r for mask, r in enumerate(self._rank)}

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, RankOracle)
            and self.ground == other.ground
            and self._rank == other._rank
        )

    def __hash__(self) -> int:
        return hash((self.ground, tuple(self._rank)))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"RankOracle(ground={self.ground}, full_rank={self.full_rank})"


@dataclass(frozen=True)
class GreedyFace:
    """Optimal face of a linear program over a polymatroid.

    The optimal set is ``{x in P(oracle) : x saturates every element class
    inside `saturated`}``; for optimization over the base polyhedron the
    whole ground is saturated and the face is exactly ``B(oracle)``.
    """

    oracle: RankOracle
    saturated: frozenset

    def optimal_points(self) -> list[tuple[int, ...]]:
        """Enumerate the optimal integer points (desk scale).

        Vectors are aligned with the face oracle's own ground order, which
        follows the weight levels; use :meth:`optimal_vectors` to realign.
        """
        if not self.saturated:
            return self.oracle.points()
        sat_rank = self.oracle.rank(self.saturated)
        idx = [i for i, e in enumerate(self.oracle.ground) if e in self.saturated]
        return [
            p for p in self.oracle.points() if sum(p[i] for i in idx) == sat_rank
        ]

    def optimal_vectors(self, ground) -> list[tuple[int, ...]]:
        """Optimal points re-aligned with the caller's ground order."""
        pos = {e: i for i, e in enumerate(self.oracle.ground)}
        return sorted(
            tuple(p[pos[e]] if e in pos else 0 for e in ground)
            for p in self.optimal_points()
        )


def greedy_max(
    oracle: RankOracle,
    weights: Mapping[Hashable, object],
    over_base: bool,
    *,
    zero,
) -> tuple[object, GreedyFace]:
    """Exact maximum of ``sum w_e x_e`` over B (``over_base``) or P.

    Weights may be any totally ordered additive values (rationals or
    LexScalars); ``zero`` supplies the additive identity used both for the
    value accumulator and, in the polymatroid case, for sign tests.  The
    returned face is the direct sum over the distinct weight levels: base
    polyhedra of the successive contractions for every level (restricted to
    positive levels for P, where the zero-weight class contributes the
    plain polymatroid and negative-weight elements are pinned to 0).
    """
    levels: dict = {}
    for e in oracle.ground:
        levels.setdefault(weights[e], []).append(e)
    ordered = sorted(levels.items(), key=lambda kv: kv[0], reverse=True)

    value = zero
    face: RankOracle | None = None
    saturated: set = set()
    eaten: set = set()
    for level_weight, members in ordered:
        if not over_base and level_weight < zero:
            part = RankOracle(tuple(members), [0] * (1 << len(members)))
            face = part if face is None else face.direct_sum(part)
            continue
        part = oracle.contract(eaten).restrict(members)
        if over_base or level_weight > zero:
            gained = part.full_rank
            if hasattr(level_weight, "scaled"):
                value = value + level_weight.scaled(gained)
            else:
                value = value + level_weight * gained
            saturated.update(members)
        face = part if face is None else face.direct_sum(part)
        eaten.update(members)
    if face is None:
        face = RankOracle((), [0])
    return value, GreedyFace(face, frozenset(saturated))
