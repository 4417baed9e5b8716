"""Discrete three-measurement identification by eigendecomposition.

X1, X2 and the latent X* share the support {v_1, ..., v_K}; X3 takes L
values; the three measurements are independent given X*.  Writing
``M = [f(X1=v_i, X2=v_j)]`` and ``Mg = [E(g(X3); X1=v_i, X2=v_j)]``,

    M  = m1 diag(f*) m2^T
    Mg = m1 diag(f*) diag(lambda) m2^T,   lambda_k = E[g(X3) | X* = v_k]

so ``Mg M^-1 = m1 diag(lambda) m1^-1``.  Its eigenvectors, normalised to sum
to one, are the columns of ``m1``; the mode condition on ``m1`` fixes which
eigenvector belongs to which latent value.  The remaining components follow
from linear solves against ``m1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadDistribution,
    ComplexEigenvalues,
    EigenvalueCollision,
    ModeAmbiguity,
    NotAProbability,
    RankDeficient,
)

RANK_TOL = 1e-8
SEP_TOL = 1e-8
IMAG_TOL = 1e-8
MODE_TOL = 1e-10
NEG_TOL = 1e-6
FIT_TOL = 1e-6


@dataclass(frozen=True)
class JointPMF3:
    """Joint pmf of (X1, X2, X3): ``probs[i, j, l] = f(v_i, v_j, support3[l])``."""

    support: tuple
    support3: tuple
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        k, l = len(self.support), len(self.support3)
        if k < 2 or l < 2:
            raise BadDistribution(f"need K >= 2 and L >= 2, got K={k}, L={l}")
        if probs.shape != (k, k, l):
            raise BadDistribution(f"probs has shape {probs.shape}, expected {(k, k, l)}")
        if np.any(probs < 0):
            raise BadDistribution("negative probability in joint pmf")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise BadDistribution(f"joint pmf sums to {probs.sum()!r}")
        probs.setflags(write=False)
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "support3", tuple(self.support3))
        object.__setattr__(self, "probs", probs)

    @property
    def K(self) -> int:
        return len(self.support)

    @property
    def L(self) -> int:
        return len(self.support3)


@dataclass(frozen=True)
class ComponentModel3:
    """Identified components; column ``k`` of each matrix conditions on X* = v_k.

    ``m1`` and ``m2`` are K x K, ``m3`` is L x K.  ``max_clamp`` records the
    largest negative entry that was clamped to zero during recovery.
    """

    support: tuple
    support3: tuple
    latent_probs: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    eigenvalues: np.ndarray | None = None
    max_clamp: float = 0.0

    def __post_init__(self):
        k, l = len(self.support), len(self.support3)
        arrays = {}
        for name, shape in (("latent_probs", (k,)), ("m1", (k, k)), ("m2", (k, k)), ("m3", (l, k))):
            a = np.array(getattr(self, name), dtype=float)
            if a.shape != shape:
                raise BadDistribution(f"{name} has shape {a.shape}, expected {shape}")
            if np.any(a < -1e-12):
                raise NotAProbability(f"{name} has a negative entry {a.min()!r}")
            a = np.clip(a, 0.0, None)
            a.setflags(write=False)
            arrays[name] = a
        if np.any(arrays["latent_probs"] <= 0):
            raise NotAProbability("latent probabilities must be strictly positive")
        if abs(arrays["latent_probs"].sum() - 1.0) > 1e-10:
            raise NotAProbability("latent probabilities do not sum to 1")
        for name in ("m1", "m2", "m3"):
            sums = arrays[name].sum(axis=0)
            if np.any(np.abs(sums - 1.0) > 1e-10):
                raise NotAProbability(f"columns of {name} do not sum to 1: {sums}")
        m1 = arrays["m1"]
        for j in range(k):
            others = np.delete(m1[:, j], j)
            if not m1[j, j] - others.max() > MODE_TOL:
                raise ModeAmbiguity(f"column {j} of m1 has no strict mode at row {j}")
        for name, a in arrays.items():
            object.__setattr__(self, name, a)
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "support3", tuple(self.support3))
        if self.eigenvalues is not None:
            ev = np.array(self.eigenvalues, dtype=float)
            ev.setflags(write=False)
            object.__setattr__(self, "eigenvalues", ev)

    @property
    def K(self) -> int:
        return len(self.support)

    @property
    def L(self) -> int:
        return len(self.support3)

    def forward(self) -> np.ndarray:
        return np.einsum("ik,jk,lk,k->ijl", self.m1, self.m2, self.m3, self.latent_probs)

    def max_abs_diff(self, other: "ComponentModel3") -> float:
        if self.K != other.K or self.L != other.L:
            return float("inf")
        return float(max(
            np.max(np.abs(getattr(self, name) - getattr(other, name)))
            for name in ("latent_probs", "m1", "m2", "m3")
        ))


@dataclass(frozen=True)
class Decomposition:
    m1: np.ndarray
    eigenvalues: np.ndarray
    min_singular_value: float
    condition_number: float
    eigvec_condition: float


@dataclass(frozen=True)
class FitReport:
    max_abs_err: float
    ok: bool


def identity_g(pmf: JointPMF3) -> np.ndarray:
    return np.array([float(v) for v in pmf.support3])


def build_matrices(pmf: JointPMF3, g) -> tuple[np.ndarray, np.ndarray]:
    g = np.asarray(g, dtype=float)
    if g.shape != (pmf.L,) or not np.all(np.isfinite(g)):
        raise BadDistribution(f"g must hold {pmf.L} finite values")
    return pmf.probs.sum(axis=2), pmf.probs @ g


def eigendecompose(M, Mg, rank_tol=RANK_TOL, sep_tol=SEP_TOL, imag_tol=IMAG_TOL) -> Decomposition:
    """Columns of f(X1 | X*) and E[g(X3) | X*] from the two K x K matrices."""
    M = np.asarray(M, dtype=float)
    Mg = np.asarray(Mg, dtype=float)
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] < rank_tol:
        raise RankDeficient(f"smallest singular value of M is {sv[-1]:.3g} (< {rank_tol:g})")
    A = np.linalg.solve(M.T, Mg.T).T
    lam, vec = np.linalg.eig(A)
    if np.max(np.abs(lam.imag)) > imag_tol:
        raise ComplexEigenvalues(f"eigenvalues {lam} are not real")
    lam = lam.real
    vec = vec.real
    order = np.argsort(lam, kind="stable")
    lam, vec = lam[order], vec[:, order]
    gaps = np.diff(lam)
    if gaps.size and gaps.min() < sep_tol:
        raise EigenvalueCollision(
            f"eigenvalues {lam} are separated by only {gaps.min():.3g} (< {sep_tol:g}); "
            "g does not distinguish the latent values"
        )
    sums = vec.sum(axis=0)
    if np.any(np.abs(sums) < 1e-12):
        raise NotAProbability("an eigenvector sums to zero and cannot be a distribution")
    cols = vec / sums

    k = M.shape[0]
    modes = np.argmax(cols, axis=0)
    for j in range(k):
        top = cols[modes[j], j]
        rest = np.delete(cols[:, j], modes[j])
        if not top - rest.max() > MODE_TOL:
            raise ModeAmbiguity(f"eigenvector {j} has no strict mode")
    if len(set(modes.tolist())) != k:
        raise ModeAmbiguity(f"eigenvectors share mode rows {modes.tolist()}")
    m1 = np.empty_like(cols)
    ev = np.empty_like(lam)
    m1[:, modes] = cols
    ev[modes] = lam
    return Decomposition(
        m1=m1,
        eigenvalues=ev,
        min_singular_value=float(sv[-1]),
        condition_number=float(sv[0] / sv[-1]),
        eigvec_condition=float(np.linalg.cond(m1)),
    )


def _clamp_columns(a: np.ndarray, name: str, neg_tol: float) -> tuple[np.ndarray, float]:
    worst = float(min(0.0, a.min()))
    if worst < -neg_tol:
        raise NotAProbability(f"recovered {name} has entry {worst:.3g} (< -{neg_tol:g})")
    a = np.clip(a, 0.0, None)
    sums = a.sum(axis=0)
    if np.any(sums <= 0):
        raise NotAProbability(f"recovered {name} has an all-zero column")
    return a / sums, -worst


def complete_components(pmf: JointPMF3, m1, eigenvalues=None, rank_tol=RANK_TOL,
                        neg_tol=NEG_TOL) -> ComponentModel3:
    """Solve for f*, f(X2 | X*) and f(X3 | X*) given f(X1 | X*)."""
    m1 = np.asarray(m1, dtype=float)
    sv = np.linalg.svd(m1, compute_uv=False)
    if sv[-1] < rank_tol:
        raise RankDeficient(f"f(X1|X*) is singular (smallest singular value {sv[-1]:.3g})")
    M = pmf.probs.sum(axis=2)
    f13 = pmf.probs.sum(axis=1)  # K x L
    dm2t = np.linalg.solve(m1, M)  # diag(f*) m2^T
    dm3t = np.linalg.solve(m1, f13)  # diag(f*) m3^T

    latent = dm2t.sum(axis=1)
    if np.any(latent < -neg_tol):
        raise NotAProbability(f"recovered latent probabilities {latent} are negative")
    if np.any(latent <= 0):
        raise NotAProbability(f"recovered latent probabilities {latent} are not positive")
    latent = latent / latent.sum()

    m1c, c1 = _clamp_columns(m1, "f(X1|X*)", neg_tol)
    m2, c2 = _clamp_columns((dm2t / dm2t.sum(axis=1)[:, None]).T, "f(X2|X*)", neg_tol)
    m3, c3 = _clamp_columns((dm3t / dm3t.sum(axis=1)[:, None]).T, "f(X3|X*)", neg_tol)
    return ComponentModel3(
        support=pmf.support,
        support3=pmf.support3,
        latent_probs=latent,
        m1=m1c,
        m2=m2,
        m3=m3,
        eigenvalues=eigenvalues,
        max_clamp=max(c1, c2, c3),
    )


def verify_fit(pmf: JointPMF3, model: ComponentModel3, fit_tol=FIT_TOL) -> FitReport:
    if pmf.probs.shape != (model.K, model.K, model.L):
        raise BadDistribution("model and pmf shapes disagree")
    err = float(np.max(np.abs(pmf.probs - model.forward())))
    return FitReport(max_abs_err=err, ok=err <= fit_tol)


@dataclass(frozen=True)
class Identification:
    model: ComponentModel3
    decomposition: Decomposition
    fit: FitReport
    g: np.ndarray


def identify(pmf: JointPMF3, g=None, rank_tol=RANK_TOL, sep_tol=SEP_TOL,
             fit_tol=FIT_TOL, neg_tol=NEG_TOL) -> Identification:
    """Full pipeline: matrices, eigendecomposition, remaining components, fit check."""
    g = identity_g(pmf) if g is None else np.asarray(g, dtype=float)
    M, Mg = build_matrices(pmf, g)
    dec = eigendecompose(M, Mg, rank_tol=rank_tol, sep_tol=sep_tol)
    model = complete_components(pmf, dec.m1, dec.eigenvalues, rank_tol=rank_tol, neg_tol=neg_tol)
    return Identification(model, dec, verify_fit(pmf, model, fit_tol), g)


def search_g(pmf: JointPMF3, seed=0, tries=64) -> np.ndarray:
    """Experimental: pick a random g that best separates the eigenvalues.

    Draws ``tries`` standard-normal vectors and keeps the one maximising the
    smallest eigenvalue gap relative to the eigenvalue spread.
    """
    rng = np.random.default_rng(seed)
    M = pmf.probs.sum(axis=2)
    if np.linalg.svd(M, compute_uv=False)[-1] < RANK_TOL:
        raise RankDeficient("M is rank deficient; no g can help")
    best, best_gap = None, -1.0
    for _ in range(tries):
        g = rng.standard_normal(pmf.L)
        lam = np.linalg.eigvals(np.linalg.solve(M.T, (pmf.probs @ g).T).T)
        if np.max(np.abs(lam.imag)) > IMAG_TOL:
            continue
        lam = np.sort(lam.real)
        gap = np.diff(lam).min() / max(np.ptp(g), 1e-300)
        if gap > best_gap:
            best, best_gap = g, gap
    if best is None:
        raise ComplexEigenvalues("no random g produced real eigenvalues")
    return best


def joint_pmf_from_cells(cells) -> JointPMF3:
    """Build a pmf from ``(x1, x2, x3, p)`` cells; repeated cells are summed.

    The shared support is the sorted union of the X1 and X2 values.
    """
    cells = list(cells)
    if not cells:
        raise BadDistribution("no pmf cells")
    support = sorted({c[0] for c in cells} | {c[1] for c in cells})
    support3 = sorted({c[2] for c in cells})
    idx = {v: i for i, v in enumerate(support)}
    idx3 = {v: i for i, v in enumerate(support3)}
    probs = np.zeros((len(support), len(support), len(support3)))
    for x1, x2, x3, p in cells:
        probs[idx[x1], idx[x2], idx3[x3]] += float(p)
    return JointPMF3(tuple(support), tuple(support3), probs)
