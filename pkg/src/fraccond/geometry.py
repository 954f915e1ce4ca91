"""One-dimensional set arithmetic for domains and measurement windows.

All sets are finite unions of intervals.  Open/closed distinctions are not
stored; an :class:`IntervalSet` with component ``(a, b)`` stands for either
``(a, b)`` or ``[a, b]`` depending on context, and every construction keeps
strictly positive gaps so the distinction never matters for the predicates
checked here.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import ConstructionInfeasible, InvalidArgument

Interval = Tuple[float, float]

# Largest admissible epsilon is scaled by this factor (strict inclusions).
EPSILON_SAFETY = 0.9


def _normalize(intervals: Iterable[Sequence[float]]) -> Tuple[Interval, ...]:
    items = []
    for iv in intervals:
        lo, hi = float(iv[0]), float(iv[1])
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise InvalidArgument(f"non-finite interval endpoint in {iv!r}", module="geometry")
        if not lo < hi:
            raise InvalidArgument(f"interval {iv!r} must satisfy lo < hi", module="geometry")
        items.append((lo, hi))
    items.sort()
    merged: list = []
    for lo, hi in items:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return tuple(merged)


@dataclass(frozen=True)
class IntervalSet:
    """Canonical finite union of intervals (sorted, disjoint, positive gaps)."""

    intervals: Tuple[Interval, ...] = ()

    def __init__(self, intervals: Iterable[Sequence[float]] = ()):
        object.__setattr__(self, "intervals", _normalize(intervals))

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __bool__(self):
        return bool(self.intervals)

    def __repr__(self):
        body = ", ".join(f"[{lo:g}, {hi:g}]" for lo, hi in self.intervals)
        return f"IntervalSet({{{body}}})"

    @property
    def lo(self) -> float:
        return self.intervals[0][0]

    @property
    def hi(self) -> float:
        return self.intervals[-1][1]

    @property
    def measure(self) -> float:
        return float(sum(hi - lo for lo, hi in self.intervals))

    @property
    def diameter(self) -> float:
        return self.hi - self.lo if self.intervals else 0.0

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    __or__ = union

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        for a0, a1 in self.intervals:
            for b0, b1 in other.intervals:
                lo, hi = max(a0, b0), min(a1, b1)
                if lo < hi:
                    out.append((lo, hi))
        return IntervalSet(out)

    __and__ = intersection

    def scaled(self, factor: float) -> "IntervalSet":
        return IntervalSet([(factor * lo, factor * hi) if factor > 0 else (factor * hi, factor * lo)
                            for lo, hi in self.intervals])

    def contains(self, x, *, strict: bool = True) -> np.ndarray:
        """Vectorized membership test; ``strict`` treats components as open."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            if strict:
                out |= (x > lo) & (x < hi)
            else:
                out |= (x >= lo) & (x <= hi)
        return out

    def contains_interval(self, lo: float, hi: float, *, strict: bool = True) -> bool:
        for a, b in self.intervals:
            if strict and a < lo and hi < b:
                return True
            if not strict and a <= lo and hi <= b:
                return True
        return False

    def overlaps(self, other: "IntervalSet") -> bool:
        """True if the interiors intersect."""
        return bool(self.intersection(other))


def dilate(S: IntervalSet, delta: float) -> IntervalSet:
    """Open ``delta``-neighbourhood ``{x : dist(x, S) < delta}``."""
    if not delta > 0:
        raise InvalidArgument(f"dilation radius must be positive, got {delta}", module="geometry")
    return IntervalSet([(lo - delta, hi + delta) for lo, hi in S.intervals])


def distance(S: IntervalSet, T: IntervalSet) -> float:
    if not S or not T:
        raise InvalidArgument("distance of an empty set is undefined", module="geometry")
    best = np.inf
    for a0, a1 in S.intervals:
        for b0, b1 in T.intervals:
            best = min(best, max(0.0, b0 - a1, a0 - b1))
    return float(best)


def gaps(S: IntervalSet, box: Interval) -> IntervalSet:
    """Components of ``box`` minus the closure of ``S``."""
    lo, hi = box
    out = []
    cursor = lo
    for a, b in S.intervals:
        if a > cursor:
            out.append((cursor, min(a, hi)))
        cursor = max(cursor, b)
    if cursor < hi:
        out.append((cursor, hi))
    return IntervalSet([g for g in out if g[0] < g[1]])


@dataclass(frozen=True)
class WindowConfig:
    """Domain, two measurement windows and the computational box.

    ``allow_overlap`` switches to the detectability mode where ``w1`` and
    ``w2`` may intersect.
    """

    omega_dom: IntervalSet
    w1: IntervalSet
    w2: IntervalSet
    box: Interval
    allow_overlap: bool = False

    def __post_init__(self):
        lo, hi = float(self.box[0]), float(self.box[1])
        if not lo < hi:
            raise InvalidArgument(f"box {self.box!r} must satisfy lo < hi", module="geometry")
        object.__setattr__(self, "box", (lo, hi))
        if not self.w1 or not self.w2:
            raise InvalidArgument("measurement windows must be nonempty", module="geometry")
        for name, w in (("w1", self.w1), ("w2", self.w2), ("omega_dom", self.omega_dom)):
            if w and not (w.lo > lo and w.hi < hi):
                raise InvalidArgument(f"{name} must lie in the interior of the box {self.box}",
                                      module="geometry")
        for name, w in (("w1", self.w1), ("w2", self.w2)):
            if self.omega_dom and w.overlaps(self.omega_dom):
                raise InvalidArgument(f"{name} intersects the domain; windows must lie in its exterior",
                                      module="geometry")
        if not self.allow_overlap and self.w1.overlaps(self.w2):
            raise InvalidArgument("w1 and w2 must be disjoint (set allow_overlap for the control mode)",
                                  module="geometry")

    @property
    def windows(self) -> IntervalSet:
        return self.w1 | self.w2

    def with_w2(self, w2: IntervalSet) -> "WindowConfig":
        return WindowConfig(self.omega_dom, self.w1, w2, self.box, allow_overlap=True)


def choose_omega(cfg: WindowConfig, min_gap: float = 0.0) -> IntervalSet:
    """Middle third of the largest gap left by the domain and the windows.

    Ties go to the leftmost gap.
    """
    obstacles = cfg.omega_dom | cfg.windows
    best = None
    for lo, hi in gaps(obstacles, cfg.box):
        if best is None or hi - lo > best[1] - best[0]:
            best = (lo, hi)
    if best is None or best[1] - best[0] <= max(min_gap, 0.0):
        raise ConstructionInfeasible(
            f"no gap of length > {min_gap} outside the domain and windows inside box {cfg.box}")
    third = (best[1] - best[0]) / 3.0
    return IntervalSet([(best[0] + third, best[1] - third)])


def select_epsilon(cfg: WindowConfig, omega: IntervalSet) -> float:
    """Mollification radius ``eps`` with five-fold neighbourhoods kept apart.

    ``eps = 0.9/5 * min(d(dom, omega)/2, d(dom, W), d(omega, W), d(dom u omega, box edge))``
    where ``W`` is the union of the two windows.  An empty ``omega`` drops
    the terms that involve it.
    """
    W = cfg.windows
    edges = IntervalSet([(cfg.box[0] - 1.0, cfg.box[0]), (cfg.box[1], cfg.box[1] + 1.0)])
    terms = {}
    dom = cfg.omega_dom
    if dom and omega:
        terms["dist(domain, omega)/2"] = distance(dom, omega) / 2.0
    if dom:
        terms["dist(domain, windows)"] = distance(dom, W)
    if omega:
        terms["dist(omega, windows)"] = distance(omega, W)
    placed = dom | omega
    if not placed:
        raise ConstructionInfeasible("both the domain and omega are empty")
    terms["dist(domain u omega, box edge)"] = distance(placed, edges)
    bad = [k for k, v in terms.items() if not v > 0]
    if bad:
        raise ConstructionInfeasible(f"required separation is zero: {', '.join(bad)}")
    eps = EPSILON_SAFETY / 5.0 * min(terms.values())
    ok, why = separation_predicate(cfg, omega, eps)
    if not ok:  # pragma: no cover - guaranteed by the formula
        raise ConstructionInfeasible(why)
    return eps


def separation_predicate(cfg: WindowConfig, omega: IntervalSet, eps: float):
    """Check that the 5*eps neighbourhoods of domain and omega are disjoint
    and avoid both windows.  Returns ``(ok, reason)``."""
    W = cfg.windows
    big_dom = dilate(cfg.omega_dom, 5 * eps) if cfg.omega_dom else IntervalSet.empty()
    big_om = dilate(omega, 5 * eps) if omega else IntervalSet.empty()
    if big_dom.overlaps(big_om):
        return False, "5-eps neighbourhoods of domain and omega intersect"
    if (big_dom | big_om).overlaps(W):
        return False, "5-eps neighbourhoods reach a measurement window"
    return True, ""
