"""Observation-level assignment of latent values.

Once the joint distribution of observables and the latent variable is known
and no two observations share an observed tuple, each tuple carries exactly
one latent value.  Three routes are provided: the posterior argmax for the
discrete three-measurement model, the group-mean rule for the discrete
additive two-measurement model, and regression residuals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    AmbiguousAssignment,
    BadDistribution,
    LeavesViolation,
    ModelMisfit,
    NoFactorization,
    SingularDesign,
)
from .population import LatentPopulation, canonical, canonical_key, check_leaves
from .spectral3 import FIT_TOL, ComponentModel3, JointPMF3, verify_fit

POSTERIOR_TOL = 1e-9


@dataclass(frozen=True)
class Assignment:
    x: tuple
    x_star: object
    posterior: float = 1.0
    group: int | None = None


@dataclass(frozen=True)
class AssignmentMap:
    """Function from distinct observed tuples to latent values, sorted by tuple."""

    entries: tuple[Assignment, ...]

    def __post_init__(self):
        entries = sorted(self.entries, key=lambda a: canonical_key(a.x))
        keys = [canonical_key(a.x) for a in entries]
        if len(set(keys)) != len(keys):
            raise LeavesViolation("assignment map has duplicate observed tuples")
        object.__setattr__(self, "entries", tuple(entries))
        object.__setattr__(self, "_index", dict(zip(keys, entries)))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, x) -> Assignment:
        return self._index[canonical_key(x)]

    def latent(self, x):
        return self[x].x_star


def _distinct_tuples(pop: LatentPopulation) -> list[tuple]:
    seen = {}
    for r in pop.records:
        seen.setdefault(canonical_key(r.x), r.x)
    return list(seen.values())


def posterior(model: ComponentModel3, x) -> np.ndarray:
    """f(X* = v_k | X1, X2, X3 = x) for every k."""
    x1, x2, x3 = x
    try:
        i = _index(model.support, x1)
        j = _index(model.support, x2)
        l = _index(model.support3, x3)
    except KeyError as exc:
        raise NoFactorization(f"tuple {tuple(x)!r} lies outside the model support") from exc
    joint = model.m1[i] * model.m2[j] * model.m3[l] * model.latent_probs
    total = joint.sum()
    if total <= 0:
        raise NoFactorization(f"tuple {tuple(x)!r} has zero probability under the model")
    return joint / total


def _index(values: Sequence, v) -> int:
    cv = canonical(v)
    for n, u in enumerate(values):
        if canonical(u) == cv:
            return n
    raise KeyError(v)


def assign_discrete3(pmf: JointPMF3, model: ComponentModel3, pop: LatentPopulation,
                     fit_tol=FIT_TOL, tol=POSTERIOR_TOL) -> AssignmentMap:
    """Posterior argmax for every distinct (x1, x2, x3) in ``pop``.

    An observed tuple is ambiguous when its posterior is not degenerate: more
    than one latent value then carries positive mass, which means that the
    population holds two records with this tuple and the property of leaves
    fails in distribution.  All ambiguous tuples are reported together.
    """
    fit = verify_fit(pmf, model, fit_tol)
    if not fit.ok:
        raise ModelMisfit(f"model does not reproduce the pmf (max error {fit.max_abs_err:.3g})")
    if pop.width != 3:
        raise BadDistribution("need (x1, x2, x3) observations")
    entries, ambiguous = [], []
    for x in _distinct_tuples(pop):
        post = posterior(model, x)
        order = np.argsort(post)[::-1]
        top = post[order[0]]
        if top < 1.0 - tol or top - post[order[1]] < tol:
            ambiguous.append(x)
            continue
        entries.append(Assignment(x, model.support[order[0]], float(top)))
    if ambiguous:
        raise AmbiguousAssignment(
            f"{len(ambiguous)} observed tuple(s) do not determine a unique latent value: "
            + ", ".join(str(tuple(x)) for x in ambiguous),
            ambiguous,
        )
    amap = AssignmentMap(tuple(entries))
    if not check_leaves(pop).holds:
        # degenerate posteriors yet repeated tuples: records disagree with the model
        raise LeavesViolation("population repeats observed tuples")
    return amap


def _close(a, b) -> bool:
    if a == b:
        return True
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return False
    return abs(float(a) - float(b)) <= 1e-12 + 1e-9 * abs(float(b))


def assign_group_mean(pop2: LatentPopulation, eps1: dict, latent_eps2: dict) -> AssignmentMap:
    """Group observations by (X*, e1) and assign the within-group mean of X2.

    Parameters
    ----------
    pop2 : LatentPopulation
        Observations ``(x1, x2)`` with their probabilities; latent values in
        the records are ignored.
    eps1 : dict
        f(e1) keyed by error value.
    latent_eps2 : dict
        f(X*, e2) keyed by ``(x_star, e2)``.

    Each observation is matched to the combinations ``(e, x*, v)`` with
    ``x1 = x* + e``, ``x2 = x* + v`` and ``f(e) f(x*, v) = p``.  X1 alone
    cannot separate groups when two (x*, e) pairs share the same sum, so the
    probability product is part of the match.
    """
    if pop2.width != 2:
        raise BadDistribution("need (x1, x2) observations")
    report = check_leaves(pop2)
    if not report.holds:
        i, j = report.collisions[0]
        raise LeavesViolation(f"records {i} and {j} share observed tuple {pop2.records[i].x!r}")

    joint = {(canonical(xs), canonical(v)): (xs, v, q) for (xs, v), q in latent_eps2.items()}
    matched = []
    for r in pop2.records:
        x1, x2 = r.x
        hits = []
        for e, pe in eps1.items():
            xs = x1 - e
            v = x2 - xs
            cell = joint.get((canonical(xs), canonical(v)))
            if cell is not None and _close(pe * cell[2], r.p):
                hits.append((e, cell[0]))
        if not hits:
            raise NoFactorization(f"observation {r.x!r} has no consistent (e1, X*, e2)")
        if len(hits) > 1:
            raise AmbiguousAssignment(
                f"observation {r.x!r} matches {len(hits)} (e1, X*, e2) combinations", [r.x]
            )
        matched.append((r, hits[0]))

    groups: dict[tuple, list] = {}
    for r, (e, xs) in matched:
        groups.setdefault((canonical(xs), canonical(e)), []).append(r)
    group_ids = {key: n for n, key in enumerate(sorted(groups))}
    means = {}
    for key, members in groups.items():
        mass = sum(m.p for m in members)
        means[key] = sum(m.p * m.x[1] for m in members) / mass

    entries = []
    for r, (e, xs) in matched:
        key = (canonical(xs), canonical(e))
        entries.append(Assignment(r.x, means[key], 1.0, group_ids[key]))
    return AssignmentMap(tuple(entries))


@dataclass(frozen=True)
class RegressionProblem:
    """Rows ``(y, w)`` of a linear model y = w . beta + eta with population weights."""

    y: np.ndarray
    w: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        w = np.asarray(self.w, dtype=float)
        if w.ndim == 1:
            w = w[:, None]
        wt = np.asarray(self.weights, dtype=float).ravel()
        if not (y.shape[0] == w.shape[0] == wt.shape[0]) or y.shape[0] == 0:
            raise BadDistribution("y, w and weights must have the same positive length")
        if np.any(wt <= 0):
            raise BadDistribution("weights must be positive")
        for name, a in (("y", y), ("w", w), ("weights", wt)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @classmethod
    def uniform(cls, y, w):
        n = len(y)
        return cls(y, w, np.full(n, 1.0 / n))


def ols_residual_assign(prob: RegressionProblem, rank_tol=1e-10):
    """Solve E[W (Y - W beta)] = 0 and attach eta = y - w . beta to each row.

    Weights are normalised first, so rescaling them changes nothing.  Repeated
    ``(y, w)`` rows share one residual and appear once in the map.
    """
    wt = prob.weights / prob.weights.sum()
    W = prob.w
    gram = (W * wt[:, None]).T @ W
    if np.linalg.svd(gram, compute_uv=False)[-1] < rank_tol:
        raise SingularDesign("second-moment matrix of the regressors is singular")
    beta = np.linalg.solve(gram, (W * wt[:, None]).T @ prob.y)
    eta = prob.y - W @ beta
    entries = {}
    for y, w, e in zip(prob.y, W, eta):
        x = (float(y),) + tuple(float(v) for v in w)
        entries.setdefault(canonical_key(x), Assignment(x, float(e)))
    return beta, AssignmentMap(tuple(entries.values()))
