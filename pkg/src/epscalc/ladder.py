"""Finite eps-ladders and families sampled on them.

Everything in this package is indexed by a small parameter ``eps`` ranging
over ``(0, 1]``.  Since we compute, the continuum of indices is replaced by
a finite, strictly decreasing ladder of sample values; an "internal" scalar
is then modelled concretely by one value per ladder entry (:class:`EpsFamily`).
Eventual ("for small eps") statements are decided on the finest entries of
the ladder, controlled by a stabilization window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_BASE = 2.0
DEFAULT_J_MIN = 4
DEFAULT_J_MAX = 14

#: Number of finest ladder entries a property must hold on to count as
#: holding "eventually".  A heuristic surrogate for "for sufficiently
#: small eps" on a finite ladder; every verdict reports it.
DEFAULT_STABILIZATION_WINDOW = 3


@dataclass(frozen=True)
class EpsLadder:
    """Strictly decreasing sample values of eps in ``(0, 1]``.

    The default ladder is ``base**-j`` for ``j = j_min .. j_max``; arbitrary
    ladders may be passed explicitly, e.g. to refine a scan.
    """

    epsilons: tuple[float, ...]
    base: float = DEFAULT_BASE
    j_min: int = DEFAULT_J_MIN
    j_max: int = DEFAULT_J_MAX

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if len(eps) < 4:
            raise ValueError("ladder needs at least 4 entries")
        if any(not (0.0 < e <= 1.0) for e in eps):
            raise ValueError("ladder values must lie in (0, 1]")
        if any(a <= b for a, b in zip(eps, eps[1:])):
            raise ValueError("ladder must be strictly decreasing")
        object.__setattr__(self, "epsilons", eps)

    @classmethod
    def default(cls, base: float = DEFAULT_BASE, j_min: int = DEFAULT_J_MIN,
                j_max: int = DEFAULT_J_MAX) -> "EpsLadder":
        if j_min >= j_max:
            raise ValueError("j_min must be < j_max")
        eps = tuple(base ** -j for j in range(j_min, j_max + 1))
        return cls(eps, base=base, j_min=j_min, j_max=j_max)

    def __len__(self) -> int:
        return len(self.epsilons)

    def __iter__(self):
        return iter(self.epsilons)

    def __getitem__(self, i: int) -> float:
        return self.epsilons[i]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.epsilons, dtype=float)

    def index_of(self, eps: float) -> int:
        """Index of an exact ladder entry; raises for off-ladder values."""
        for i, e in enumerate(self.epsilons):
            if e == eps:
                return i
        raise ValueError(f"eps={eps!r} is not a ladder entry")


@dataclass(frozen=True)
class EpsFamily:
    """A scalar (or complex) quantity sampled once per ladder entry.

    This is the concrete model of an internal number: the representative
    family ``(x_eps)`` restricted to the ladder.
    """

    ladder: EpsLadder
    values: tuple = field(default=())

    def __post_init__(self):
        vals = tuple(complex(v) if isinstance(v, complex) else float(v)
                     for v in self.values)
        if len(vals) != len(self.ladder):
            raise ValueError("values must have one entry per ladder point")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, ladder: EpsLadder, fn) -> "EpsFamily":
        return cls(ladder, tuple(fn(e) for e in ladder))

    @classmethod
    def constant(cls, ladder: EpsLadder, value) -> "EpsFamily":
        return cls(ladder, (value,) * len(ladder))

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values)

    def abs(self) -> "EpsFamily":
        return EpsFamily(self.ladder, tuple(abs(v) for v in self.values))

    def _check_same_ladder(self, other: "EpsFamily"):
        if self.ladder.epsilons != other.ladder.epsilons:
            raise ValueError("eps-families live on different ladders")

    def __add__(self, other):
        if isinstance(other, EpsFamily):
            self._check_same_ladder(other)
            return EpsFamily(self.ladder,
                             tuple(a + b for a, b in zip(self.values, other.values)))
        return EpsFamily(self.ladder, tuple(v + other for v in self.values))

    def __sub__(self, other):
        if isinstance(other, EpsFamily):
            self._check_same_ladder(other)
            return EpsFamily(self.ladder,
                             tuple(a - b for a, b in zip(self.values, other.values)))
        return EpsFamily(self.ladder, tuple(v - other for v in self.values))

    def __mul__(self, other):
        if isinstance(other, EpsFamily):
            self._check_same_ladder(other)
            return EpsFamily(self.ladder,
                             tuple(a * b for a, b in zip(self.values, other.values)))
        return EpsFamily(self.ladder, tuple(v * other for v in self.values))

    __rmul__ = __mul__


def eventually_constant(flags, window: int = DEFAULT_STABILIZATION_WINDOW):
    """Decide a per-entry boolean family "for small eps".

    Returns ``(verdict, stabilization_index)`` where verdict is ``True`` /
    ``False`` when the finest ``window`` entries are constantly true / false,
    and ``None`` (undecided) otherwise.  The stabilization index is the first
    position from which the value stays constant, or ``None``.
    """
    flags = list(flags)
    if len(flags) < window:
        raise ValueError("stabilization window exceeds ladder length")
    tail = flags[-window:]
    if not all(f == tail[0] for f in tail):
        return None, None
    idx = len(flags)
    while idx > 0 and flags[idx - 1] == tail[0]:
        idx -= 1
    return bool(tail[0]), idx
