"""Forward generators for worked examples and randomized property tests."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BadDistribution, GenerationExhausted, LeavesViolationWarning
from .kotlarski import Sample2
from .population import LatentPopulation, check_leaves, population_from_joint
from .spectral3 import ComponentModel3, JointPMF3

MAX_TRIES = 10_000


def _normalized(name, pmf: dict) -> dict:
    if not pmf:
        raise BadDistribution(f"{name} is empty")
    if any(not p > 0 for p in pmf.values()):
        raise BadDistribution(f"{name} has a non-positive probability")
    total = sum(pmf.values())
    if abs(float(total) - 1.0) > 1e-12:
        raise BadDistribution(f"{name} sums to {float(total)!r}")
    return dict(pmf)


@dataclass(frozen=True)
class TwoMeasSpec:
    """Components of X1 = X* + e1, X2 = X* + e2 with finite supports.

    ``eps2`` maps each latent value to the conditional pmf of e2, which must
    have zero mean.  Entries may be ``Fraction`` for exact arithmetic.
    """

    latent: dict
    eps1: dict
    eps2: dict

    def __post_init__(self):
        object.__setattr__(self, "latent", _normalized("f(X*)", self.latent))
        object.__setattr__(self, "eps1", _normalized("f(e1)", self.eps1))
        eps2 = {}
        for xs in self.latent:
            if xs not in self.eps2:
                raise BadDistribution(f"no conditional pmf of e2 given X* = {xs}")
            cond = _normalized(f"f(e2 | X*={xs})", self.eps2[xs])
            mean = sum(v * p for v, p in cond.items())
            if abs(float(mean)) > 1e-12:
                raise BadDistribution(f"E[e2 | X*={xs}] = {float(mean)!r}, must be 0")
            eps2[xs] = cond
        object.__setattr__(self, "eps2", eps2)

    def joint_latent_eps2(self) -> dict:
        """f(X*, e2) keyed by ``(x_star, e2)``."""
        return {
            (xs, v): self.latent[xs] * q
            for xs in self.latent
            for v, q in self.eps2[xs].items()
        }


@dataclass(frozen=True)
class ThreeMeasSpec:
    """Exact-entry description of a three-measurement model.

    ``m1``, ``m2`` (K x K) and ``m3`` (L x K) are nested lists indexed
    ``[row][latent]``; entries may be ``Fraction``.
    """

    support: tuple
    support3: tuple
    latent: tuple
    m1: tuple
    m2: tuple
    m3: tuple

    def to_model(self) -> ComponentModel3:
        return ComponentModel3(
            support=self.support,
            support3=self.support3,
            latent_probs=np.array([float(p) for p in self.latent]),
            m1=np.array([[float(p) for p in row] for row in self.m1]),
            m2=np.array([[float(p) for p in row] for row in self.m2]),
            m3=np.array([[float(p) for p in row] for row in self.m3]),
        )

    @classmethod
    def from_model(cls, model: ComponentModel3) -> "ThreeMeasSpec":
        return cls(
            support=model.support,
            support3=model.support3,
            latent=tuple(float(p) for p in model.latent_probs),
            m1=tuple(tuple(float(p) for p in row) for row in model.m1),
            m2=tuple(tuple(float(p) for p in row) for row in model.m2),
            m3=tuple(tuple(float(p) for p in row) for row in model.m3),
        )


def _warn_collisions(pop: LatentPopulation) -> None:
    report = check_leaves(pop)
    if not report.holds:
        tuples = sorted({pop.records[i].x for i, _ in report.collisions})
        warnings.warn(
            f"property of leaves fails: {len(report.collisions)} colliding pair(s), "
            f"observed tuples {tuples}",
            LeavesViolationWarning,
            stacklevel=3,
        )


def gen_two_meas(spec: TwoMeasSpec) -> LatentPopulation:
    """One record ((x1, x2), x*) per positive-probability (e1, x*, e2) combination."""
    triples = []
    for e, pe in spec.eps1.items():
        for xs, px in spec.latent.items():
            for v, pv in spec.eps2[xs].items():
                triples.append(((xs + e, xs + v), xs, pe * px * pv))
    pop = population_from_joint(triples)
    _warn_collisions(pop)
    return pop


def gen_three_meas(spec: ThreeMeasSpec | ComponentModel3) -> tuple[JointPMF3, LatentPopulation]:
    """Forward pmf of (X1, X2, X3) and the population of (x1, x2, x3) -> x* records."""
    if isinstance(spec, ComponentModel3):
        spec = ThreeMeasSpec.from_model(spec)
    model = spec.to_model()
    triples = []
    for k, xs in enumerate(spec.support):
        pk = spec.latent[k]
        for i, x1 in enumerate(spec.support):
            for j, x2 in enumerate(spec.support):
                for l, x3 in enumerate(spec.support3):
                    p = spec.m1[i][k] * spec.m2[j][k] * spec.m3[l][k] * pk
                    if p > 0:
                        triples.append(((x1, x2, x3), xs, p))
    pop = population_from_joint(triples)
    _warn_collisions(pop)
    pmf = JointPMF3(spec.support, spec.support3, model.forward())
    return pmf, pop


def _simplex(rng, n):
    return rng.dirichlet(np.ones(n))


def random_spec(seed, K=2, L=4, kind="three", min_singular=1e-3, min_separation=1e-3,
                max_tries=MAX_TRIES):
    """Random valid specification, deterministic in ``seed``.

    For ``kind="three"`` the columns are rejection-sampled until f(X1|X*) has
    its mode on the diagonal, the (X1, X2) matrix has smallest singular value
    at least ``min_singular`` and the identity g on ``1..L`` separates the
    eigenvalues by at least ``min_separation``.  ``kind="two"`` returns a
    :class:`TwoMeasSpec` on integer supports with zero-mean e2.
    """
    rng = np.random.default_rng(seed)
    if kind == "two":
        return _random_two(rng, K, L)
    if kind != "three":
        raise ValueError(f"unknown kind {kind!r}")
    if K < 2 or L < K:
        raise ValueError("need K >= 2 and L >= K")
    support = tuple(range(K))
    support3 = tuple(range(1, L + 1))
    g = np.arange(1, L + 1, dtype=float)
    for _ in range(max_tries):
        m1 = np.empty((K, K))
        for j in range(K):
            for _ in range(max_tries):
                col = _simplex(rng, K)
                if np.argmax(col) == j and col[j] - np.delete(col, j).max() > 1e-3:
                    break
            else:
                raise GenerationExhausted(f"no column with mode {j} after {max_tries} draws")
            m1[:, j] = col
        m2 = np.column_stack([_simplex(rng, K) for _ in range(K)])
        m3 = np.column_stack([_simplex(rng, L) for _ in range(K)])
        latent = _simplex(rng, K)
        M = m1 @ np.diag(latent) @ m2.T
        if np.linalg.svd(M, compute_uv=False)[-1] < min_singular:
            continue
        if np.diff(np.sort(g @ m3)).min() < min_separation:
            continue
        model = ComponentModel3(support, support3, latent, m1, m2, m3)
        return ThreeMeasSpec.from_model(model)
    raise GenerationExhausted(f"no valid specification after {max_tries} attempts")


def _random_two(rng, K, L) -> TwoMeasSpec:
    latent_vals = sorted(rng.choice(np.arange(-3, 4), size=K, replace=False).tolist())
    latent = dict(zip(latent_vals, _simplex(rng, K).tolist()))
    eps1_vals = sorted(rng.choice(np.arange(-3, 4), size=2, replace=False).tolist())
    eps1 = dict(zip(eps1_vals, _simplex(rng, 2).tolist()))
    eps2 = {}
    for xs in latent_vals:
        # two-point zero-mean error: a < 0 < b with P(b) = -a / (b - a)
        a = -int(rng.integers(1, L + 1))
        b = int(rng.integers(1, L + 1))
        pb = -a / (b - a)
        eps2[xs] = {a: 1.0 - pb, b: pb}
    return TwoMeasSpec(_renorm(latent), _renorm(eps1), eps2)


def _renorm(pmf: dict) -> dict:
    total = sum(pmf.values())
    return {k: v / total for k, v in pmf.items()}


def gaussian_sample(latent_sd=1.0, eps1_sd=0.5, eps2_sd=0.5, nodes=20) -> Sample2:
    """(X1, X2) for Gaussian X*, e1, e2 discretized by Gauss-Hermite quadrature.

    Each variable is replaced by the ``nodes``-point probabilists' Hermite
    rule, which matches its moments up to order ``2 * nodes - 1``.
    """
    z, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    xs, e1, e2 = np.meshgrid(latent_sd * z, eps1_sd * z, eps2_sd * z, indexing="ij")
    ws = w[:, None, None] * w[None, :, None] * w[None, None, :]
    points = np.column_stack([(xs + e1).ravel(), (xs + e2).ravel()])
    weights = ws.ravel()
    return Sample2(points, weights / weights.sum())


def population_sample(pop: LatentPopulation) -> Sample2:
    """Distribution of the observed (x1, x2) pairs of a two-measurement population."""
    if pop.width != 2:
        raise BadDistribution("need (x1, x2) observations")
    return Sample2([[float(v) for v in r.x] for r in pop], [float(r.p) for r in pop])
