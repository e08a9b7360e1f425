"""Asymptotic scale calculus for eps-indexed scalars.

Two decision procedures live here:

* exact classification of symbolic power-log expressions
  ``sum_i c_i * rho**p_i * log(1/rho)**q_i`` (``rho`` is the canonical
  infinitesimal, identified with eps itself), and
* statistical classification of sampled :class:`~epscalc.ladder.EpsFamily`
  data via log-log regression of the values against eps.

The exact fragment covers every scale manipulated in practice (``rho**a``,
``rho**(1/m)``, reciprocal logs, ...).  Sampled classification returns
ternary verdicts: finite data cannot certify a "for all n" bound, so
oscillating or badly-fitting families come back ``undecidable`` rather
than guessed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .ladder import EpsFamily, EpsLadder

YES = "yes"
NO = "no"
UNDECIDABLE = "undecidable"

#: Fitted exponents with absolute value below this are treated as zero.
DEFAULT_TAU_FAST = 0.05
#: Minimum coefficient of determination for a fit to count as decided.
DEFAULT_FIT_QUALITY_MIN = 0.9
#: Alternative reliability gate: near-constant data has a degenerate R^2,
#: but a small RMS log-residual still certifies the fitted slope.
DEFAULT_RESIDUAL_MAX = 0.5

INF_SLOPE = math.inf


@dataclass(frozen=True)
class ScaleTerm:
    """One monomial ``coeff * rho**p * L**q`` with ``L = log(1/rho)``."""

    coeff: float
    p: Fraction
    q: Fraction = Fraction(0)

    def __post_init__(self):
        if self.coeff == 0:
            raise ValueError("zero coefficients are not stored")
        object.__setattr__(self, "p", Fraction(self.p))
        object.__setattr__(self, "q", Fraction(self.q))


def _dominance_key(term: ScaleTerm):
    # Dominant first as eps -> 0: smaller p wins; on ties the larger log
    # power grows faster, so it comes first.
    return (term.p, -term.q)


@dataclass(frozen=True)
class ScaleExpr:
    """Finite sum of power-log monomials, optionally glued by idempotents.

    Terms are kept sorted with the asymptotically dominant monomial first
    and at most one term per ``(p, q)`` pair; the zero expression has an
    empty term list.  A glued expression carries ``(idempotent, branch)``
    pairs instead of terms and is evaluable but not comparable (split on
    the idempotents first).
    """

    terms: tuple[ScaleTerm, ...] = ()
    glue: tuple | None = None

    def __post_init__(self):
        if self.glue is not None:
            if self.terms:
                raise ValueError("glued expressions carry no top-level terms")
            object.__setattr__(self, "glue", tuple(self.glue))
            return
        merged: dict[tuple, float] = {}
        for t in self.terms:
            key = (t.p, t.q)
            merged[key] = merged.get(key, 0.0) + t.coeff
        terms = tuple(
            sorted(
                (ScaleTerm(c, p, q) for (p, q), c in merged.items() if c != 0.0),
                key=_dominance_key,
            )
        )
        object.__setattr__(self, "terms", terms)

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls) -> "ScaleExpr":
        return cls(())

    @classmethod
    def monomial(cls, coeff: float, p, q=0) -> "ScaleExpr":
        if coeff == 0:
            return cls.zero()
        return cls((ScaleTerm(coeff, Fraction(p), Fraction(q)),))

    @classmethod
    def rho(cls, p=1) -> "ScaleExpr":
        return cls.monomial(1.0, p)

    @classmethod
    def log_recip(cls, q=1) -> "ScaleExpr":
        """``log(1/rho)**q``."""
        return cls.monomial(1.0, 0, q)

    @classmethod
    def piecewise(cls, branches) -> "ScaleExpr":
        return cls((), glue=tuple(branches))

    # -- structure ----------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return self.glue is None and not self.terms

    @property
    def is_piecewise(self) -> bool:
        return self.glue is not None

    def dominant(self) -> ScaleTerm:
        if self.is_piecewise:
            raise ValueError("piecewise expression has no dominant term")
        if not self.terms:
            raise ValueError("zero expression has no dominant term")
        return self.terms[0]

    def __add__(self, other: "ScaleExpr") -> "ScaleExpr":
        if self.is_piecewise or other.is_piecewise:
            raise ValueError("cannot add piecewise expressions; split first")
        return ScaleExpr(self.terms + other.terms)

    def __neg__(self) -> "ScaleExpr":
        if self.is_piecewise:
            raise ValueError("cannot negate piecewise expressions; split first")
        return ScaleExpr(tuple(ScaleTerm(-t.coeff, t.p, t.q) for t in self.terms))

    def __sub__(self, other: "ScaleExpr") -> "ScaleExpr":
        return self + (-other)

    def __str__(self) -> str:
        if self.is_piecewise:
            return " | ".join(f"[{e}] {expr}" for e, expr in self.glue)
        if not self.terms:
            return "0"
        parts = []
        for t in self.terms:
            factors = [repr(t.coeff)] if t.coeff != 1 or (t.p == 0 == t.q) else []
            if t.p != 0:
                factors.append(f"rho^({t.p})")
            if t.q != 0:
                factors.append(f"L^({t.q})")
            parts.append("*".join(factors))
        return " + ".join(parts)


@dataclass(frozen=True)
class ScaleFlags:
    """Ternary scale classification of an eps-indexed scalar."""

    infinitesimal: str
    moderate: str
    negligible: str
    fast_scale: str
    slow_scale: str
    fast_infinitesimal: str
    slow_infinitesimal: str

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if value not in (YES, NO, UNDECIDABLE):
                raise ValueError(f"{name} must be yes/no/undecidable")
        # Consistency required by the definitions.
        if self.negligible == YES and (self.moderate != YES or self.infinitesimal != YES):
            raise ValueError("negligible implies moderate and infinitesimal")
        if self.fast_infinitesimal == YES and self.infinitesimal != YES:
            raise ValueError("fast_infinitesimal implies infinitesimal")
        if self.slow_infinitesimal == YES and self.infinitesimal != YES:
            raise ValueError("slow_infinitesimal implies infinitesimal")

    def as_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def all_undecidable(cls) -> "ScaleFlags":
        return cls(*(UNDECIDABLE,) * 7)


ZERO_FLAGS = ScaleFlags(
    infinitesimal=YES, moderate=YES, negligible=YES, fast_scale=NO,
    slow_scale=YES, fast_infinitesimal=YES, slow_infinitesimal=NO,
)


# ---------------------------------------------------------------------------
# evaluation and exact classification
# ---------------------------------------------------------------------------

def scale_eval(expr: ScaleExpr, eps: float) -> float:
    """Evaluate an expression at one eps in ``(0, 1]``.

    Piecewise glue is resolved by evaluating each idempotent at eps and
    summing the selected branches.
    """
    if not (0.0 < eps <= 1.0):
        raise ValueError("eps must lie in (0, 1]")
    if expr.is_piecewise:
        total = 0.0
        for idem, branch in expr.glue:
            total += idem.value_at(eps) * scale_eval(branch, eps)
        return total
    L = math.log(1.0 / eps) if eps < 1.0 else 0.0
    total = 0.0
    for t in expr.terms:
        value = t.coeff * eps ** float(t.p)
        if t.q != 0:
            if L == 0.0:
                # eps == 1: log(1/eps) == 0; negative powers blow up.
                if t.q < 0:
                    raise ValueError("log(1/eps)**q undefined at eps=1 for q<0")
                value = 0.0
            else:
                value *= L ** float(t.q)
        total += value
    return total


def sample(expr: ScaleExpr, ladder: EpsLadder) -> EpsFamily:
    """Sample an expression on a ladder."""
    return EpsFamily.from_function(ladder, lambda e: scale_eval(expr, e))


def _reject_piecewise(*exprs: ScaleExpr):
    if any(e.is_piecewise for e in exprs):
        raise ValueError("piecewise input: split on the idempotents first")


def scale_compare(a: ScaleExpr, b: ScaleExpr) -> str:
    """Eventual order of two monomial-sum expressions: 'lt', 'gt' or 'eq'.

    The order is decided by the sign of the dominant term of ``a - b``;
    equality holds exactly when the difference cancels to zero.
    """
    _reject_piecewise(a, b)
    diff = a - b
    if diff.is_zero:
        return "eq"
    return "gt" if diff.dominant().coeff > 0 else "lt"


def classify(expr: ScaleExpr) -> ScaleFlags:
    """Exact scale flags of a monomial-sum expression.

    With ``(p, q)`` the dominant exponents: the expression tends to zero
    iff ``p > 0`` or ``p == 0 and q < 0``; it exceeds some ``rho**-a``
    eventually iff ``p < 0``; it is bounded by ``rho**a`` for some positive
    ``a`` iff ``p > 0``.  Finite power-log sums are always moderate, and
    negligible only when identically zero.
    """
    _reject_piecewise(expr)
    if expr.is_zero:
        return ZERO_FLAGS
    dom = expr.dominant()
    p, q = dom.p, dom.q
    tends_to_zero = p > 0 or (p == 0 and q < 0)
    fast_scale = p < 0
    fast_inf = p > 0
    slow_inf = p == 0 and q < 0
    return ScaleFlags(
        infinitesimal=YES if tends_to_zero else NO,
        moderate=YES,
        negligible=NO,
        fast_scale=YES if fast_scale else NO,
        slow_scale=NO if fast_scale else YES,
        fast_infinitesimal=YES if fast_inf else NO,
        slow_infinitesimal=YES if slow_inf else NO,
    )


# ---------------------------------------------------------------------------
# sampled (statistical) classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrderFit:
    """Least-squares slope of log|value| against log eps.

    ``slope == s`` means the family behaves like ``rho**s``; ``fit_quality``
    is the coefficient of determination and ``residual`` the RMS residual of
    the fit in log units (the useful reliability measure when the data is
    nearly constant and R^2 degenerates).
    """

    slope: float
    intercept: float
    fit_quality: float
    residual: float = 0.0
    n_used: int = 0

    @property
    def reliable(self) -> bool:
        return (self.fit_quality >= DEFAULT_FIT_QUALITY_MIN
                or self.residual <= DEFAULT_RESIDUAL_MAX)


def _line_fit(x: np.ndarray, y: np.ndarray) -> OrderFit:
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    scale = max(1.0, float(np.abs(y).max()))
    if ss_tot <= 1e-24 * len(y) * scale * scale:
        r2 = 1.0  # constant data: the line fits it exactly
    else:
        r2 = 1.0 - ss_res / ss_tot
    rms = math.sqrt(ss_res / len(y))
    return OrderFit(float(slope), float(intercept), r2, rms, len(y))


def estimate_order(family: EpsFamily) -> OrderFit:
    """Fit the asymptotic order of a sampled family.

    Identically zero families return the ``+inf`` slope sentinel.  Entries
    with zero magnitude are dropped; at least 4 usable points are required.
    """
    vals = np.abs(family.as_array()).astype(float)
    usable = vals > 0.0
    if not usable.any():
        return OrderFit(INF_SLOPE, 0.0, 1.0, 0.0, 0)
    if usable.sum() < 4:
        raise ValueError("fewer than 4 usable (non-zero) ladder points")
    x = np.log(family.ladder.as_array()[usable])
    y = np.log(vals[usable])
    return _line_fit(x, y)


@dataclass(frozen=True)
class PowerLogFit:
    """Joint fit of log|value| against log(eps) and log log(1/eps).

    Power-log monomial data is exactly linear in this basis, so ``p_hat``
    and ``q_hat`` recover the exponents without the log-drift bias that a
    single-slope fit suffers (a pure ``log(1/rho)**q`` family biases the
    plain slope by about ``0.17 q`` on the default ladder).
    """

    p_hat: float
    q_hat: float
    intercept: float
    fit_quality: float
    residual: float

    @property
    def reliable(self) -> bool:
        return (self.fit_quality >= DEFAULT_FIT_QUALITY_MIN
                or self.residual <= DEFAULT_RESIDUAL_MAX)


def power_log_fit(family: EpsFamily) -> PowerLogFit | None:
    """Two-regressor order fit; ``None`` for identically zero families."""
    vals = np.abs(family.as_array()).astype(float)
    usable = vals > 0.0
    if not usable.any():
        return None
    if usable.sum() < 4:
        raise ValueError("fewer than 4 usable (non-zero) ladder points")
    eps = family.ladder.as_array()[usable]
    y = np.log(vals[usable])
    x1 = np.log(eps)
    x2 = np.log(np.log(1.0 / eps))
    A = np.vstack([x1, x2, np.ones_like(x1)]).T
    (p_hat, q_hat, c), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([p_hat, q_hat, c])
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    scale = max(1.0, float(np.abs(y).max()))
    r2 = 1.0 if ss_tot <= 1e-24 * len(y) * scale * scale else 1.0 - ss_res / ss_tot
    rms = math.sqrt(ss_res / len(y))
    return PowerLogFit(float(p_hat), float(q_hat), float(c), r2, rms)


@dataclass(frozen=True)
class SampledClassification:
    flags: ScaleFlags
    order: OrderFit
    power_log: PowerLogFit | None


def classify_sampled(family: EpsFamily,
                     tau_fast: float = DEFAULT_TAU_FAST,
                     fit_quality_min: float = DEFAULT_FIT_QUALITY_MIN,
                     residual_max: float = DEFAULT_RESIDUAL_MAX) -> SampledClassification:
    """Ternary scale flags for sampled data, with the fit report attached.

    The decision uses the two-regressor power-log fit: ``p_hat`` plays the
    role of the fitted slope (``fast_infinitesimal`` iff ``p_hat >= tau_fast``,
    ``fast_scale`` iff ``p_hat <= -tau_fast``), and on the ``|p_hat| < tau_fast``
    boundary the log exponent ``q_hat`` separates slow-scale infinitesimals
    from bounded-away-from-zero families.  Anything with an unreliable fit is
    undecidable.
    """
    vals = np.abs(family.as_array()).astype(float)
    if not (vals > 0.0).any():
        return SampledClassification(ZERO_FLAGS, OrderFit(INF_SLOPE, 0.0, 1.0, 0.0, 0), None)

    order = estimate_order(family)
    pl = power_log_fit(family)
    reliable = (pl.fit_quality >= fit_quality_min or pl.residual <= residual_max)
    if not reliable:
        return SampledClassification(ScaleFlags.all_undecidable(), order, pl)

    p_hat, q_hat = pl.p_hat, pl.q_hat
    if p_hat >= tau_fast:
        flags = ScaleFlags(
            infinitesimal=YES, moderate=YES, negligible=NO, fast_scale=NO,
            slow_scale=YES, fast_infinitesimal=YES, slow_infinitesimal=NO,
        )
    elif p_hat <= -tau_fast:
        flags = ScaleFlags(
            infinitesimal=NO, moderate=YES, negligible=NO, fast_scale=YES,
            slow_scale=NO, fast_infinitesimal=NO, slow_infinitesimal=NO,
        )
    else:
        # Bounded between rho**a and rho**-a for every a: slow scale.  The
        # log exponent decides whether the family still tends to zero.
        tends_to_zero = q_hat <= -tau_fast
        # Boundedness cross-check: |value| * eps**tau_fast must not grow
        # toward fine entries if the family is genuinely slow-scale.
        eps = family.ladder.as_array()
        damped = vals * eps ** tau_fast
        if damped[-1] > max(1.0, damped[0]) * 10.0:
            return SampledClassification(ScaleFlags.all_undecidable(), order, pl)
        flags = ScaleFlags(
            infinitesimal=YES if tends_to_zero else NO,
            moderate=YES, negligible=NO, fast_scale=NO, slow_scale=YES,
            fast_infinitesimal=NO,
            slow_infinitesimal=YES if tends_to_zero else NO,
        )
    return SampledClassification(flags, order, pl)


# ---------------------------------------------------------------------------
# textual syntax
# ---------------------------------------------------------------------------

_NUMBER = r"[+-]?(?:\d+/\d+|\d+(?:\.\d*)?|\.\d+)"
_FACTOR_RE = re.compile(
    rf"^(?:(?P<coeff>{_NUMBER})|(?P<sym>rho|L)(?:\^\((?P<exp>{_NUMBER})\))?)$"
)


def _parse_number(text: str) -> Fraction:
    return Fraction(text)


def parse_scale_expr(text: str) -> ScaleExpr:
    """Parse ``c*rho^(p)*L^(q)`` terms joined by ``+``.

    ``L`` denotes ``log(1/rho)``.  Exponents accept decimals and fractions,
    e.g. ``rho^(1/2)`` or ``2.5*rho^(-2)*L^(3)``; the bare term ``0`` is the
    zero expression.
    """
    text = text.strip()
    if not text:
        raise ValueError("empty scale expression")
    terms = []
    for raw_term in text.split("+"):
        raw_term = raw_term.strip()
        if not raw_term:
            raise ValueError("empty term in scale expression")
        if raw_term == "0":
            continue
        coeff = 1.0
        p = Fraction(0)
        q = Fraction(0)
        seen = set()
        for raw_factor in raw_term.split("*"):
            raw_factor = raw_factor.strip()
            m = _FACTOR_RE.match(raw_factor)
            if not m:
                raise ValueError(f"cannot parse factor {raw_factor!r}")
            if m.group("coeff") is not None:
                if "coeff" in seen:
                    raise ValueError(f"two coefficients in term {raw_term!r}")
                seen.add("coeff")
                coeff = float(Fraction(m.group("coeff")))
            else:
                sym = m.group("sym")
                if sym in seen:
                    raise ValueError(f"repeated factor {sym!r} in term {raw_term!r}")
                seen.add(sym)
                exp = _parse_number(m.group("exp")) if m.group("exp") else Fraction(1)
                if sym == "rho":
                    p = exp
                else:
                    q = exp
        if coeff != 0.0:
            terms.append(ScaleTerm(coeff, p, q))
    return ScaleExpr(tuple(terms))
