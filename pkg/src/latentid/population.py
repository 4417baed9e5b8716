"""Finite populations of (observed tuple, latent value) pairs.

A population is a finite list of records ``(x, x_star, p)``.  It satisfies the
property of leaves when no two records share the same observed tuple ``x``;
then the population itself is a function from observables to latent values
and the marginal distribution of ``x`` carries the record probabilities
unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Iterable, Sequence

from .errors import BadDistribution, LeavesViolation

PROB_TOL = 1e-12
SIG_DIGITS = 12


def canonical(value) -> float:
    """Round ``value`` to 12 significant digits for equality tests."""
    v = float(value)
    if v == 0.0:
        return 0.0
    return float(f"{v:.{SIG_DIGITS}g}")


def canonical_key(x: Sequence) -> tuple[float, ...]:
    return tuple(canonical(v) for v in x)


def _check_tuple(x) -> tuple:
    x = tuple(x)
    if not x:
        raise BadDistribution("observed tuple must have at least one entry")
    for v in x:
        if not isinstance(v, Real) or not math.isfinite(float(v)):
            raise BadDistribution(f"observed tuple {x!r} has a non-finite entry")
    return x


def _check_probs(probs: Sequence) -> None:
    if len(probs) == 0:
        raise BadDistribution("a population needs at least one record")
    for p in probs:
        if not p > 0:
            raise BadDistribution(f"probability {p} is not strictly positive")
    total = sum(probs)
    if abs(float(total) - 1.0) > PROB_TOL and total != 1:
        raise BadDistribution(f"probabilities sum to {float(total)!r}, not 1")


@dataclass(frozen=True)
class Record:
    x: tuple
    x_star: object
    p: Real


@dataclass(frozen=True)
class LatentPopulation:
    """Records of a finite population, kept in the order given.

    The property of leaves is not enforced here so that populations which
    violate it can still be represented and diagnosed.
    """

    records: tuple[Record, ...]

    def __post_init__(self):
        recs = tuple(
            r if isinstance(r, Record) else Record(*r) for r in self.records
        )
        recs = tuple(Record(_check_tuple(r.x), r.x_star, r.p) for r in recs)
        _check_probs([r.p for r in recs])
        widths = {len(r.x) for r in recs}
        if len(widths) != 1:
            raise BadDistribution(f"observed tuples have mixed lengths {sorted(widths)}")
        object.__setattr__(self, "records", recs)

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def width(self) -> int:
        return len(self.records[0].x)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def observed(self) -> list[tuple]:
        return [r.x for r in self.records]


@dataclass(frozen=True)
class ObservedPMF:
    support: tuple[tuple, ...]
    probs: tuple

    def __post_init__(self):
        support = tuple(_check_tuple(x) for x in self.support)
        probs = tuple(self.probs)
        if len(support) != len(probs):
            raise BadDistribution("support and probabilities differ in length")
        _check_probs(probs)
        keys = [canonical_key(x) for x in support]
        if len(set(keys)) != len(keys):
            raise BadDistribution("support points are not pairwise distinct")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    def as_dict(self) -> dict:
        return {canonical_key(x): p for x, p in zip(self.support, self.probs)}

    def prob(self, x) -> Real:
        return self.as_dict().get(canonical_key(x), 0)


@dataclass(frozen=True)
class LeavesReport:
    holds: bool
    collisions: list[tuple[int, int]]


def check_leaves(pop: LatentPopulation) -> LeavesReport:
    """Report every pair of records (0-based, i < j) sharing an observed tuple."""
    groups: dict[tuple, list[int]] = {}
    for i, r in enumerate(pop.records):
        groups.setdefault(canonical_key(r.x), []).append(i)
    collisions = []
    for idx in groups.values():
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                collisions.append((idx[a], idx[b]))
    collisions.sort()
    return LeavesReport(holds=not collisions, collisions=collisions)


def marginal_pmf(pop: LatentPopulation) -> ObservedPMF:
    """Distribution of the observables; requires the property of leaves."""
    report = check_leaves(pop)
    if not report.holds:
        i, j = report.collisions[0]
        raise LeavesViolation(
            f"records {i} and {j} share observed tuple {pop.records[i].x!r}; "
            f"{len(report.collisions)} colliding pair(s) in total"
        )
    return ObservedPMF(
        support=tuple(r.x for r in pop.records),
        probs=tuple(r.p for r in pop.records),
    )


def aggregate_observed(pop: LatentPopulation) -> ObservedPMF:
    """Distribution of the observables, summing mass over repeated tuples.

    Unlike :func:`marginal_pmf` this never fails; it is what a researcher who
    only sees ``x`` would measure even when the property of leaves is violated.
    """
    mass: dict[tuple, Real] = {}
    first: dict[tuple, tuple] = {}
    for r in pop.records:
        key = canonical_key(r.x)
        first.setdefault(key, r.x)
        mass[key] = mass.get(key, 0) + r.p
    return ObservedPMF(support=tuple(first.values()), probs=tuple(mass.values()))


def _sort_key(rec: Record):
    xs = rec.x_star
    latent = canonical(xs) if isinstance(xs, Real) else xs
    return (canonical_key(rec.x), latent)


def population_from_joint(pmf_joint: Iterable) -> LatentPopulation:
    """Build a population from ``(x, x_star, p)`` triples in canonical order."""
    recs = [Record(_check_tuple(x), xs, p) for x, xs, p in pmf_joint]
    if not recs:
        raise BadDistribution("empty joint distribution")
    seen = set()
    for r in recs:
        key = _sort_key(r)
        if key in seen:
            raise BadDistribution(f"duplicate record {r.x!r} -> {r.x_star!r}")
        seen.add(key)
    recs.sort(key=_sort_key)
    return LatentPopulation(tuple(recs))


def uniform_population(xs: Sequence, x_stars: Sequence | None = None) -> LatentPopulation:
    """Population with ``p_i = 1/N`` exactly."""
    n = len(xs)
    if n == 0:
        raise BadDistribution("empty population")
    if x_stars is None:
        x_stars = [None] * n
    p = Fraction(1, n)
    return LatentPopulation(tuple(Record(tuple(x), s, p) for x, s in zip(xs, x_stars)))
