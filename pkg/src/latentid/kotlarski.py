"""Two-measurement additive model: X1 = X* + e1, X2 = X* + e2.

With e1 independent of (X*, e2) and E[e2 | X*] = 0, the latent
characteristic function is

    phi_X*(t) = exp( int_0^t  i E[X2 exp(i s X1)] / E[exp(i s X1)]  ds )

and the joint characteristic function of (X1, X2, X*) follows from that of
(X1, X2) as

    phi_{X1,X2,X*}(s, t, v) = phi_{X*,X2}(s + v, t) * phi_X1(s) / phi_X*(s),
    phi_{X*,X2}(s, t)       = phi_{X1,X2}(s, t) * phi_X*(s) / phi_X1(s).

All transforms live on symmetric uniform grids with an odd number of nodes
so that the origin is a node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadDistribution, EmptySample, GridTooCoarse, VanishingCF

DEFAULT_T_MAX = 16.0
DEFAULT_N_POINTS = 2049
DEFAULT_VANISH_TOL = 1e-6

_CHUNK = 1 << 22


@dataclass(frozen=True)
class GridSpec:
    t_max: float = DEFAULT_T_MAX
    n_points: int = DEFAULT_N_POINTS

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise ValueError("n_points must be odd and at least 3")

    @property
    def step(self) -> float:
        return 2.0 * self.t_max / (self.n_points - 1)

    @property
    def nodes(self) -> np.ndarray:
        m = self.n_points // 2
        return self.step * np.arange(-m, m + 1, dtype=float)

    @property
    def center(self) -> int:
        return self.n_points // 2


def _validate_cf(values: np.ndarray, origin) -> None:
    if abs(values[origin] - 1.0) > 1e-10:
        raise BadDistribution(f"characteristic function at the origin is {values[origin]!r}, not 1")
    peak = np.max(np.abs(values))
    if peak > 1.0 + 1e-8:
        raise BadDistribution(f"characteristic function modulus reaches {peak!r} > 1")


@dataclass(frozen=True)
class CharFnGrid:
    """Characteristic function sampled on a symmetric uniform grid."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} values, got shape {values.shape}")
        _validate_cf(values, self.grid.center)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def __call__(self, t) -> np.ndarray:
        return _interp1(self.grid, self.values, np.asarray(t, dtype=float))


@dataclass(frozen=True)
class CharFnGrid2:
    """Bivariate characteristic function; ``values[a, b] = phi(s_a, t_b)``."""

    s_grid: GridSpec
    t_grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.s_grid.n_points, self.t_grid.n_points):
            raise ValueError(f"values have shape {values.shape}, grids disagree")
        _validate_cf(values, (self.s_grid.center, self.t_grid.center))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def marginal_s(self) -> CharFnGrid:
        return CharFnGrid(self.s_grid, self.values[:, self.t_grid.center])

    def marginal_t(self) -> CharFnGrid:
        return CharFnGrid(self.t_grid, self.values[self.s_grid.center, :])


@dataclass(frozen=True)
class CharFnGrid3:
    """Trivariate characteristic function ``values[a, b, c] = phi(s_a, t_b, v_c)``."""

    s_grid: GridSpec
    t_grid: GridSpec
    v_grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        shape = (self.s_grid.n_points, self.t_grid.n_points, self.v_grid.n_points)
        if values.shape != shape:
            raise ValueError(f"values have shape {values.shape}, expected {shape}")
        origin = (self.s_grid.center, self.t_grid.center, self.v_grid.center)
        if abs(values[origin] - 1.0) > 1e-10:
            raise BadDistribution("joint characteristic function is not 1 at the origin")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class Sample2:
    """Discrete distribution of (X1, X2): support points and their weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] == 0:
            raise EmptySample("sample has no points")
        if w.shape[0] != pts.shape[0]:
            raise BadDistribution("points and weights differ in length")
        if not np.all(np.isfinite(pts)):
            raise BadDistribution("sample points must be finite")
        if np.any(w <= 0):
            raise BadDistribution("weights must be strictly positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise BadDistribution(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def x1(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def x2(self) -> np.ndarray:
        return self.points[:, 1]


def _weighted_exp_sum(t: np.ndarray, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """sum_j w_j exp(i t_k x_j) for every k, in fixed summation order."""
    out = np.empty(t.shape[0], dtype=complex)
    rows = max(1, _CHUNK // max(1, x.shape[0]))
    for start in range(0, t.shape[0], rows):
        block = t[start:start + rows]
        out[start:start + rows] = np.exp(1j * np.outer(block, x)) @ w
    return out


def empirical_cf(sample: Sample2, axis="x1", grid: GridSpec | None = None,
                 t_grid: GridSpec | None = None):
    """Characteristic function of a discrete sample.

    ``axis`` is ``"x1"``, ``"x2"`` or ``"joint"``; the joint transform uses
    ``grid`` for the X1 frequency and ``t_grid`` (default: ``grid``) for X2.
    """
    grid = grid or GridSpec()
    if axis in ("x1", "x2"):
        x = sample.x1 if axis == "x1" else sample.x2
        values = _weighted_exp_sum(grid.nodes, x, sample.weights)
        values[grid.center] = sample.weights.sum()
        return CharFnGrid(grid, values)
    if axis != "joint":
        raise ValueError(f"unknown axis {axis!r}")
    t_grid = t_grid or grid
    e1 = np.exp(1j * np.outer(grid.nodes, sample.x1)) * sample.weights
    e2 = np.exp(1j * np.outer(t_grid.nodes, sample.x2))
    values = e1 @ e2.T
    values[grid.center, t_grid.center] = sample.weights.sum()
    return CharFnGrid2(grid, t_grid, values)


def cross_moment(sample: Sample2, grid: GridSpec | None = None) -> np.ndarray:
    """E[X2 exp(i s X1)] on the grid."""
    grid = grid or GridSpec()
    return _weighted_exp_sum(grid.nodes, sample.x1, sample.weights * sample.x2)


def _min_segment_modulus(values: np.ndarray) -> float:
    """Smallest |z| along the piecewise-linear path through ``values``.

    Catches sign changes that fall between grid nodes, where the node values
    alone can stay well away from zero.
    """
    a, b = values[:-1], values[1:]
    d = b - a
    dd = np.abs(d) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        tau = np.where(dd > 0, -np.real(np.conj(a) * d) / dd, 0.0)
    tau = np.clip(tau, 0.0, 1.0)
    return float(np.min(np.abs(a + tau * d)))


def kotlarski_cf(cf_x1, cross: np.ndarray, vanish_tol: float = DEFAULT_VANISH_TOL) -> CharFnGrid:
    """Recover the latent characteristic function.

    Parameters
    ----------
    cf_x1 : CharFnGrid or CharFnGrid2
        Characteristic function of X1, or the joint transform of (X1, X2),
        whose ``t = 0`` slice is used.
    cross : array of complex
        E[X2 exp(i s X1)] on the same grid.
    vanish_tol : float
        Smallest admissible modulus of phi_X1 anywhere on the grid,
        including between nodes.

    The log-derivative is integrated by the composite trapezoid rule from
    ``s = 0`` outward in both directions, so no complex logarithm (and no
    branch cut) is ever taken.
    """
    if isinstance(cf_x1, CharFnGrid2):
        cf_x1 = cf_x1.marginal_s()
    grid = cf_x1.grid
    phi = cf_x1.values
    cross = np.asarray(cross, dtype=complex)
    if cross.shape != phi.shape:
        raise ValueError("cross moment and characteristic function grids differ")

    floor = _min_segment_modulus(phi)
    if floor < vanish_tol:
        k = int(np.argmin(np.abs(phi)))
        raise VanishingCF(
            f"|phi_X1| falls to {floor:.3g} (< {vanish_tol:g}) near t = {grid.nodes[k]:.6g}"
        )

    integrand = 1j * cross / phi
    h = grid.step
    c = grid.center
    steps = 0.5 * h * (integrand[1:] + integrand[:-1])
    # exponent increments: node k -> k+1 on the right, k -> k-1 on the left
    if np.any(np.abs(steps.imag) > np.pi):
        k = int(np.argmax(np.abs(steps.imag)))
        raise GridTooCoarse(
            f"latent phase advances by {abs(steps.imag[k]):.3g} rad between nodes "
            f"near t = {grid.nodes[k]:.6g}; refine the grid"
        )
    exponent = np.zeros(grid.n_points, dtype=complex)
    exponent[c + 1:] = np.cumsum(steps[c:])
    exponent[:c] = -np.cumsum(steps[:c][::-1])[::-1]
    values = np.exp(exponent)
    values[c] = 1.0
    return CharFnGrid(grid, values)


@dataclass(frozen=True)
class KotlarskiResult:
    phi_x1: CharFnGrid
    cross: np.ndarray
    phi_latent: CharFnGrid

    @property
    def min_abs_phi_x1(self) -> float:
        return float(np.min(np.abs(self.phi_x1.values)))


def latent_cf(sample: Sample2, grid: GridSpec | None = None,
              vanish_tol: float = DEFAULT_VANISH_TOL) -> KotlarskiResult:
    grid = grid or GridSpec()
    phi_x1 = empirical_cf(sample, "x1", grid)
    cross = cross_moment(sample, grid)
    return KotlarskiResult(phi_x1, cross, kotlarski_cf(phi_x1, cross, vanish_tol))


@dataclass(frozen=True)
class InversionResult:
    """Density on an x grid from a characteristic function truncated to |t| <= t_max.

    The truncation is the only source of bias; it is not corrected.
    """

    x: np.ndarray
    density: np.ndarray
    t_max: float = field(default=0.0)


def invert_cf(cf: CharFnGrid, x) -> InversionResult:
    """f(x) = (1/2pi) int exp(-i x t) phi(t) dt by the trapezoid rule on the grid."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = cf.t
    w = np.full(t.shape[0], cf.grid.step)
    w[0] = w[-1] = 0.5 * cf.grid.step
    weighted = cf.values * w
    density = np.empty(x.shape[0])
    rows = max(1, _CHUNK // t.shape[0])
    for start in range(0, x.shape[0], rows):
        block = x[start:start + rows]
        density[start:start + rows] = (np.exp(-1j * np.outer(block, t)) @ weighted).real
    return InversionResult(x, density / (2.0 * np.pi), cf.grid.t_max)


def _grid_position(grid: GridSpec, t: np.ndarray) -> np.ndarray:
    pos = (t + grid.t_max) / grid.step
    snapped = np.round(pos)
    pos = np.where(np.abs(pos - snapped) < 1e-9, snapped, pos)
    if np.any(pos < 0) or np.any(pos > grid.n_points - 1):
        raise GridTooCoarse(
            f"frequency {float(np.max(np.abs(t))):.6g} lies outside the grid |t| <= {grid.t_max:g}"
        )
    return pos


def _interp1(grid: GridSpec, values: np.ndarray, t: np.ndarray) -> np.ndarray:
    pos = _grid_position(grid, t)
    lo = np.minimum(np.floor(pos).astype(int), grid.n_points - 2)
    frac = pos - lo
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac


def _interp_rows(grid: GridSpec, values: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Linear interpolation of ``values`` (rows indexed by ``grid``) at rows ``s``."""
    pos = _grid_position(grid, s)
    lo = np.minimum(np.floor(pos).astype(int), grid.n_points - 2)
    frac = (pos - lo)[..., None]
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac


def latent_joint_cf(cf_joint: CharFnGrid2, cf_latent: CharFnGrid,
                    vanish_tol: float = DEFAULT_VANISH_TOL) -> CharFnGrid2:
    """phi_{X*,X2}(s, t) = phi_{X1,X2}(s, t) * phi_X*(s) / phi_X1(s)."""
    phi_x1 = cf_joint.marginal_s()
    _check_nonvanishing(phi_x1.values, vanish_tol, "phi_X1")
    ratio = cf_latent(cf_joint.s_grid.nodes) / phi_x1.values
    return CharFnGrid2(cf_joint.s_grid, cf_joint.t_grid, cf_joint.values * ratio[:, None])


def _check_nonvanishing(values, tol, name):
    low = float(np.min(np.abs(values)))
    if low < tol:
        raise VanishingCF(f"|{name}| falls to {low:.3g} (< {tol:g}) on the grid")


def joint_cf_with_latent(cf_joint: CharFnGrid2, cf_latent: CharFnGrid,
                         s_grid: GridSpec | None = None,
                         t_grid: GridSpec | None = None,
                         v_grid: GridSpec | None = None,
                         vanish_tol: float = DEFAULT_VANISH_TOL) -> CharFnGrid3:
    """Characteristic function of (X1, X2, X*) from that of (X1, X2).

    The output grids default to the half-range sub-grids of ``cf_joint`` so
    that every ``s + v`` is a node of the joint grid.  Off-node frequencies
    are linearly interpolated; frequencies outside the joint grid raise
    :class:`GridTooCoarse`.
    """
    sj = cf_joint.s_grid
    if s_grid is None or v_grid is None:
        m = sj.center // 2
        half = GridSpec(m * sj.step, 2 * m + 1)
        s_grid = s_grid or half
        v_grid = v_grid or half
    t_grid = t_grid or cf_joint.t_grid

    phi_x1 = cf_joint.marginal_s()
    s = s_grid.nodes
    v = v_grid.nodes
    t = t_grid.nodes
    star_s = cf_latent(s)
    x1_s = _interp1(sj, phi_x1.values, s)
    _check_nonvanishing(star_s, vanish_tol, "phi_X*")
    _check_nonvanishing(x1_s, vanish_tol, "phi_X1")

    # phi_{X*,X2}(u, t) on the needed u = s + v and requested t
    u = (s[:, None] + v[None, :]).ravel()
    cols = _interp_rows(cf_joint.t_grid, cf_joint.values.T, t).T  # (n_s_joint, n_t)
    joint_u = _interp_rows(sj, cols, u)  # (n_u, n_t)
    x1_u = _interp1(sj, phi_x1.values, u)
    _check_nonvanishing(x1_u, vanish_tol, "phi_X1")
    star_x2 = joint_u * (cf_latent(u) / x1_u)[:, None]
    star_x2 = star_x2.reshape(s.shape[0], v.shape[0], t.shape[0])
    values = star_x2 * (x1_s / star_s)[:, None, None]
    return CharFnGrid3(s_grid, t_grid, v_grid, np.transpose(values, (0, 2, 1)))
