"""Eps-indexed model of internal points, sets, functions and idempotents.

Internal objects are represented by one concrete datum per ladder entry:
points carry a coordinate vector per eps, sets a region (finite union of
closed boxes and balls) per eps, hyperfinite sets a finite point list per
eps.  All operations act entry-wise on representatives; "for small eps"
truths are reported as eventual verdicts over the stabilization window
rather than materializing any equivalence classes.

Idempotents are {0,1}-valued families; interleaving two objects along an
idempotent is the entry-wise select.  The executable face of overspill is
a witness search: scan the largest prefix of integers on which a per-eps
predicate holds and look at how the witness moves along the ladder.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .ladder import DEFAULT_STABILIZATION_WINDOW, EpsFamily, EpsLadder

INSIDE_EVENTUALLY = "inside-eventually"
EXTERIOR_EVENTUALLY = "exterior-eventually"
MIXED = "mixed"

BOUNDED = "bounded"
UNBOUNDED_WITNESS = "unbounded-witness"


# ---------------------------------------------------------------------------
# idempotents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Idempotent:
    """A {0,1}-valued internal number: one bit per ladder entry.

    Threshold idempotents (``eps <= cut``) keep their defining predicate so
    they can also be evaluated off-ladder (piecewise scale expressions need
    that); generic bit vectors evaluate only at ladder entries.
    """

    ladder: EpsLadder
    bits: tuple[bool, ...]
    threshold: float | None = None

    def __post_init__(self):
        bits = tuple(bool(b) for b in self.bits)
        if len(bits) != len(self.ladder):
            raise ValueError("one bit per ladder entry required")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def ones(cls, ladder: EpsLadder) -> "Idempotent":
        return cls(ladder, (True,) * len(ladder), threshold=1.0)

    @classmethod
    def zeros(cls, ladder: EpsLadder) -> "Idempotent":
        return cls(ladder, (False,) * len(ladder), threshold=0.0)

    @classmethod
    def eps_below(cls, ladder: EpsLadder, cut: float) -> "Idempotent":
        """Symbolic idempotent of the predicate ``eps <= cut``."""
        return cls(ladder, tuple(e <= cut for e in ladder), threshold=float(cut))

    @classmethod
    def from_bits(cls, ladder: EpsLadder, bits) -> "Idempotent":
        return cls(ladder, tuple(bits))

    def complement(self) -> "Idempotent":
        # the complement of a threshold predicate is not itself one: drop it
        return Idempotent(self.ladder, tuple(not b for b in self.bits))

    def value_at(self, eps: float) -> float:
        """0/1 value at eps; off-ladder values need a threshold predicate."""
        for i, e in enumerate(self.ladder):
            if e == eps:
                return 1.0 if self.bits[i] else 0.0
        if self.threshold is not None:
            return 1.0 if eps <= self.threshold else 0.0
        raise ValueError("bit-vector idempotent cannot be evaluated off-ladder")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=float)

    def __mul__(self, other: "Idempotent") -> "Idempotent":
        if self.ladder.epsilons != other.ladder.epsilons:
            raise ValueError("idempotents live on different ladders")
        return Idempotent(self.ladder,
                          tuple(a and b for a, b in zip(self.bits, other.bits)))


# ---------------------------------------------------------------------------
# points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InternalPoint:
    """A point of R^d per ladder entry, all coordinates on one ladder."""

    ladder: EpsLadder
    coords: np.ndarray  # shape (len(ladder), d)

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.coords, dtype=float))
        if arr.shape[0] != len(self.ladder):
            if arr.shape == (1, len(self.ladder)):
                arr = arr.T
            else:
                raise ValueError("coords must have one row per ladder entry")
        if not np.isfinite(arr).all():
            raise ValueError("coordinates must be finite at every ladder entry")
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @classmethod
    def constant(cls, ladder: EpsLadder, point) -> "InternalPoint":
        pt = np.atleast_1d(np.asarray(point, dtype=float))
        return cls(ladder, np.tile(pt, (len(ladder), 1)))

    @classmethod
    def from_function(cls, ladder: EpsLadder, fn) -> "InternalPoint":
        rows = [np.atleast_1d(np.asarray(fn(e), dtype=float)) for e in ladder]
        return cls(ladder, np.vstack(rows))

    @classmethod
    def scalar(cls, family: EpsFamily) -> "InternalPoint":
        return cls(family.ladder, np.asarray(family.values, dtype=float)[:, None])

    @property
    def dimension(self) -> int:
        return self.coords.shape[1]

    def as_family(self) -> EpsFamily:
        if self.dimension != 1:
            raise ValueError("only scalar points convert to an EpsFamily")
        return EpsFamily(self.ladder, tuple(self.coords[:, 0]))

    def _check(self, other: "InternalPoint"):
        if self.ladder.epsilons != other.ladder.epsilons:
            raise ValueError("points live on different ladders")
        if self.dimension != other.dimension:
            raise ValueError("points have different dimensions")

    def __add__(self, other: "InternalPoint") -> "InternalPoint":
        self._check(other)
        return InternalPoint(self.ladder, self.coords + other.coords)

    def __sub__(self, other: "InternalPoint") -> "InternalPoint":
        self._check(other)
        return InternalPoint(self.ladder, self.coords - other.coords)

    def __mul__(self, e: Idempotent) -> "InternalPoint":
        """Entry-wise product with an idempotent (coordinates zeroed out)."""
        if self.ladder.epsilons != e.ladder.epsilons:
            raise ValueError("point and idempotent live on different ladders")
        return InternalPoint(self.ladder, self.coords * e.as_array()[:, None])


def interleave(x: InternalPoint, y: InternalPoint, e: Idempotent) -> InternalPoint:
    """Entry-wise select: x where the idempotent bit is set, else y."""
    x._check(y)
    if x.ladder.epsilons != e.ladder.epsilons:
        raise ValueError("idempotent lives on a different ladder")
    mask = np.asarray(e.bits, dtype=bool)[:, None]
    return InternalPoint(x.ladder, np.where(mask, x.coords, y.coords))


def sign_split(x: InternalPoint) -> Idempotent:
    """Idempotent with bit set exactly where the scalar value is <= 0.

    The interleaved products then satisfy ``x*e <= 0`` and ``x*e_c > 0``
    entry-wise, which is the executable face of the sign case-split.
    """
    if x.dimension != 1:
        raise ValueError("sign split is defined for scalar families")
    return Idempotent(x.ladder, tuple(v <= 0.0 for v in x.coords[:, 0]))


# ---------------------------------------------------------------------------
# regions (finite unions of boxes and balls) and internal sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or any(a > b for a, b in zip(lo, hi)):
            raise ValueError("box needs lo <= hi in every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dimension(self) -> int:
        return len(self.lo)

    def distance(self, point: np.ndarray) -> float:
        gap = np.maximum(np.asarray(self.lo) - point, 0.0)
        gap = np.maximum(gap, point - np.asarray(self.hi))
        return float(np.linalg.norm(gap))


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        center = tuple(float(v) for v in self.center)
        if self.radius < 0:
            raise ValueError("ball radius must be nonnegative")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dimension(self) -> int:
        return len(self.center)

    def distance(self, point: np.ndarray) -> float:
        return max(0.0, float(np.linalg.norm(point - np.asarray(self.center))) - self.radius)


Primitive = Box | Ball


@dataclass(frozen=True)
class Region:
    """Finite union of closed boxes and balls in R^d."""

    primitives: tuple[Primitive, ...]

    def __post_init__(self):
        prims = tuple(self.primitives)
        if not prims:
            raise ValueError("region must be nonempty")
        dims = {p.dimension for p in prims}
        if len(dims) != 1:
            raise ValueError("all primitives must share one dimension")
        object.__setattr__(self, "primitives", prims)

    @property
    def dimension(self) -> int:
        return self.primitives[0].dimension

    def distance(self, point) -> float:
        pt = np.atleast_1d(np.asarray(point, dtype=float))
        return min(p.distance(pt) for p in self.primitives)

    def contains(self, point) -> bool:
        return self.distance(point) == 0.0

    def union(self, other: "Region") -> "Region":
        if self.dimension != other.dimension:
            raise ValueError("regions have different dimensions")
        return Region(self.primitives + other.primitives)


@dataclass(frozen=True)
class InternalSet:
    """A nonempty region per ladder entry (internal sets are never empty)."""

    ladder: EpsLadder
    regions: tuple[Region, ...]

    def __post_init__(self):
        regions = tuple(self.regions)
        if len(regions) != len(self.ladder):
            raise ValueError("one region per ladder entry required")
        dims = {r.dimension for r in regions}
        if len(dims) != 1:
            raise ValueError("regions must share one dimension")
        object.__setattr__(self, "regions", regions)

    @classmethod
    def constant(cls, ladder: EpsLadder, region: Region) -> "InternalSet":
        return cls(ladder, (region,) * len(ladder))

    @classmethod
    def from_function(cls, ladder: EpsLadder, fn) -> "InternalSet":
        return cls(ladder, tuple(fn(e) for e in ladder))

    @classmethod
    def ball(cls, ladder: EpsLadder, center, radius_fn) -> "InternalSet":
        """Ball with a per-eps radius, e.g. ``lambda e: e ** 0.5``."""
        center = tuple(np.atleast_1d(np.asarray(center, dtype=float)))
        return cls.from_function(
            ladder, lambda e: Region((Ball(center, float(radius_fn(e))),)))

    @property
    def dimension(self) -> int:
        return self.regions[0].dimension

    def membership_bits(self, x: InternalPoint) -> tuple[bool, ...]:
        if x.ladder.epsilons != self.ladder.epsilons:
            raise ValueError("point and set live on different ladders")
        return tuple(r.contains(pt) for r, pt in zip(self.regions, x.coords))


@dataclass(frozen=True)
class MembershipVerdict:
    verdict: str  # inside-eventually / exterior-eventually / mixed
    bits: tuple[bool, ...]
    stabilization_index: int | None


def exterior(A: InternalSet, window: int = DEFAULT_STABILIZATION_WINDOW):
    """Membership predicate of the exterior of an internal set.

    A point is exterior when, at every sufficiently fine ladder entry, it
    sits at strictly positive distance from the region; the returned
    callable reports inside/exterior-eventually or mixed, along with the
    raw per-entry bits and the stabilization index.
    """

    def test(x: InternalPoint) -> MembershipVerdict:
        if x.ladder.epsilons != A.ladder.epsilons:
            raise ValueError("point and set live on different ladders")
        inside = A.membership_bits(x)
        tail = inside[-window:]
        if all(tail):
            verdict = INSIDE_EVENTUALLY
        elif not any(tail):
            # strict positive distance is exactly non-membership for closed
            # primitives, but assert it explicitly
            dists = [r.distance(pt) for r, pt in zip(A.regions, x.coords)]
            verdict = (EXTERIOR_EVENTUALLY
                       if all(d > 0.0 for d in dists[-window:]) else MIXED)
        else:
            return MembershipVerdict(MIXED, inside, None)
        idx = len(inside)
        while idx > 0 and inside[idx - 1] == tail[0]:
            idx -= 1
        return MembershipVerdict(verdict, inside, idx)

    return test


def star_union(A: InternalSet, B: InternalSet) -> InternalSet:
    """Entry-wise union of the regions."""
    if A.ladder.epsilons != B.ladder.epsilons:
        raise ValueError("sets live on different ladders")
    return InternalSet(A.ladder,
                       tuple(ra.union(rb) for ra, rb in zip(A.regions, B.regions)))


# ---------------------------------------------------------------------------
# hyperfinite sets and internal functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HyperfiniteSet:
    """A finite, nonempty point list per ladder entry."""

    ladder: EpsLadder
    points: tuple[np.ndarray, ...]  # each of shape (n_eps, d)

    def __post_init__(self):
        pts = []
        dim = None
        if len(self.points) != len(self.ladder):
            raise ValueError("one point list per ladder entry required")
        for arr in self.points:
            arr = np.atleast_2d(np.asarray(arr, dtype=float))
            if arr.shape[0] == 0:
                raise ValueError("hyperfinite sets are nonempty at every entry")
            if dim is None:
                dim = arr.shape[1]
            elif arr.shape[1] != dim:
                raise ValueError("point lists must share one dimension")
            arr.setflags(write=False)
            pts.append(arr)
        object.__setattr__(self, "points", tuple(pts))

    @classmethod
    def from_function(cls, ladder: EpsLadder, fn) -> "HyperfiniteSet":
        return cls(ladder, tuple(np.atleast_2d(np.asarray(fn(e), dtype=float))
                                 for e in ladder))

    @classmethod
    def constant(cls, ladder: EpsLadder, pts) -> "HyperfiniteSet":
        arr = np.atleast_2d(np.asarray(pts, dtype=float))
        return cls(ladder, (arr,) * len(ladder))

    @property
    def dimension(self) -> int:
        return self.points[0].shape[1]


@dataclass(frozen=True)
class InternalFunctionSampled:
    """Function per ladder entry: a closed-form rule or a value table.

    The rule signature is ``fn(eps, points) -> values`` with ``points`` of
    shape (n, d); tables map exact point tuples to values.  Applying the
    function to an :class:`InternalPoint` evaluates entry-wise, which makes
    the interleaving identity ``u(x e + y e_c) = u(x) e + u(y) e_c`` hold
    by construction.
    """

    ladder: EpsLadder
    rule: object = None            # callable (eps, points) -> values
    tables: tuple | None = None    # one dict per ladder entry

    def __post_init__(self):
        if (self.rule is None) == (self.tables is None):
            raise ValueError("provide exactly one of rule or tables")
        if self.tables is not None and len(self.tables) != len(self.ladder):
            raise ValueError("one table per ladder entry required")

    @classmethod
    def from_rule(cls, ladder: EpsLadder, fn) -> "InternalFunctionSampled":
        return cls(ladder, rule=fn)

    @classmethod
    def from_tables(cls, ladder: EpsLadder, tables) -> "InternalFunctionSampled":
        return cls(ladder, tables=tuple(dict(t) for t in tables))

    def eval_at_entry(self, i: int, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.rule is not None:
            return np.asarray(self.rule(self.ladder[i], points), dtype=float)
        table = self.tables[i]
        out = []
        for row in points:
            key = tuple(row) if len(row) > 1 else row[0]
            if key not in table:
                raise ValueError(f"function undefined at point {key!r} (entry {i})")
            out.append(table[key])
        return np.asarray(out, dtype=float)

    def __call__(self, x: InternalPoint) -> InternalPoint:
        if x.ladder.epsilons != self.ladder.epsilons:
            raise ValueError("point and function live on different ladders")
        rows = [np.atleast_1d(self.eval_at_entry(i, x.coords[i][None, :])).ravel()
                for i in range(len(self.ladder))]
        return InternalPoint(self.ladder, np.vstack(rows))


def hf_count(H: HyperfiniteSet) -> EpsFamily:
    """Number of points per ladder entry."""
    return EpsFamily(H.ladder, tuple(float(p.shape[0]) for p in H.points))


def hf_sum(H: HyperfiniteSet, f: InternalFunctionSampled) -> EpsFamily:
    """Entry-wise finite sum of f over the point list."""
    if H.ladder.epsilons != f.ladder.epsilons:
        raise ValueError("set and function live on different ladders")
    vals = []
    for i, pts in enumerate(H.points):
        vals.append(float(np.sum(f.eval_at_entry(i, pts))))
    return EpsFamily(H.ladder, tuple(vals))


# ---------------------------------------------------------------------------
# overspill witness search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OverspillWitness:
    witness: EpsFamily  # integer-valued: largest good prefix per entry
    verdict: str        # bounded / unbounded-witness


def overspill_witness(predicate, ladder: EpsLadder, cap: int) -> OverspillWitness:
    """Largest m <= cap with ``predicate(eps, 1..m)`` all true, per entry.

    ``predicate(eps, m)`` must be decidable for ``m <= cap``.  The verdict is
    ``unbounded-witness`` when the witness reaches the cap at the finest
    entry or grows monotonically along the ladder; otherwise ``bounded``.
    A vanishing prefix (predicate already false at m=1) yields witness 0.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    witnesses = []
    for eps in ladder:
        m = 0
        while m < cap and predicate(eps, m + 1):
            m += 1
        witnesses.append(float(m))
    w = np.asarray(witnesses)
    nondecreasing = bool(np.all(np.diff(w) >= 0))
    growing = nondecreasing and w[-1] > w[0]
    verdict = UNBOUNDED_WITNESS if (w[-1] >= cap or growing) else BOUNDED
    return OverspillWitness(EpsFamily(ladder, tuple(witnesses)), verdict)


# ---------------------------------------------------------------------------
# JSON fixtures
# ---------------------------------------------------------------------------

def _ladder_to_json(ladder: EpsLadder) -> dict:
    return {"epsilons": list(ladder.epsilons)}

def _ladder_from_json(doc: dict) -> EpsLadder:
    if "epsilons" in doc:
        return EpsLadder(tuple(doc["epsilons"]))
    return EpsLadder.default(doc.get("base", 2.0), doc["j_min"], doc["j_max"])


def _primitive_to_json(p: Primitive) -> dict:
    if isinstance(p, Box):
        return {"type": "box", "lo": list(p.lo), "hi": list(p.hi)}
    return {"type": "ball", "center": list(p.center), "radius": p.radius}

def _primitive_from_json(doc: dict) -> Primitive:
    if doc["type"] == "box":
        return Box(tuple(doc["lo"]), tuple(doc["hi"]))
    if doc["type"] == "ball":
        return Ball(tuple(doc["center"]), doc["radius"])
    raise ValueError(f"unknown primitive type {doc['type']!r}")


def internal_set_to_json(A: InternalSet) -> dict:
    return {
        "kind": "internal_set",
        "ladder": _ladder_to_json(A.ladder),
        "regions": [[_primitive_to_json(p) for p in r.primitives]
                    for r in A.regions],
    }


def internal_set_from_json(doc: dict) -> InternalSet:
    ladder = _ladder_from_json(doc["ladder"])
    regions = doc["regions"]
    if regions and isinstance(regions[0], dict):
        # single region broadcast over the ladder
        region = Region(tuple(_primitive_from_json(p) for p in [regions[0]] + regions[1:]))
        return InternalSet.constant(ladder, region)
    return InternalSet(ladder, tuple(
        Region(tuple(_primitive_from_json(p) for p in prims)) for prims in regions))


def hyperfinite_set_to_json(H: HyperfiniteSet) -> dict:
    return {
        "kind": "hyperfinite_set",
        "ladder": _ladder_to_json(H.ladder),
        "points": [p.tolist() for p in H.points],
    }


def hyperfinite_set_from_json(doc: dict) -> HyperfiniteSet:
    ladder = _ladder_from_json(doc["ladder"])
    pts = doc["points"]
    if pts and not isinstance(pts[0][0], list):
        # single list broadcast over the ladder
        return HyperfiniteSet.constant(ladder, pts)
    return HyperfiniteSet(ladder, tuple(np.asarray(p, dtype=float) for p in pts))


def load_fixture(path) -> InternalSet | HyperfiniteSet:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("kind") == "internal_set":
        return internal_set_from_json(doc)
    if doc.get("kind") == "hyperfinite_set":
        return hyperfinite_set_from_json(doc)
    raise ValueError("fixture must declare kind internal_set or hyperfinite_set")
