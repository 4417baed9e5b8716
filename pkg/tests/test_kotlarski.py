import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import TABLE1
from latentid.errors import BadDistribution, EmptySample, GridTooCoarse, VanishingCF
from latentid.kotlarski import (
    CharFnGrid,
    GridSpec,
    Sample2,
    cross_moment,
    empirical_cf,
    invert_cf,
    joint_cf_with_latent,
    kotlarski_cf,
    latent_cf,
)
from latentid.synth import gaussian_sample

TABLE1_SAMPLE = Sample2([[r[0], r[1]] for r in TABLE1], np.full(12, 1 / 12))


def table1_direct(s, t=0.0, v=0.0):
    """Brute-force sum over the 12 printed rows."""
    return sum(np.exp(1j * (s * r[0] + t * r[1] + v * r[3])) for r in TABLE1) / 12


def test_grid_contains_origin():
    g = GridSpec(3.0, 7)
    assert g.nodes[g.center] == 0.0
    np.testing.assert_array_equal(g.nodes, -g.nodes[::-1])
    with pytest.raises(ValueError):
        GridSpec(3.0, 8)


def test_point_mass_at_zero():
    cf = empirical_cf(Sample2([[0.0, 5.0]], [1.0]), "x1", GridSpec(4.0, 9))
    np.testing.assert_array_equal(cf.values, np.ones(9))


def test_two_point_mass_gives_cosine():
    grid = GridSpec(np.pi, 5)
    cf = empirical_cf(Sample2([[1.0, 0.0], [-1.0, 0.0]], [0.5, 0.5]), "x1", grid)
    np.testing.assert_allclose(cf.values.real, np.cos(grid.nodes), atol=1e-15)
    assert abs(cf.values[-1] - (-1.0)) < 1e-12


def test_table1_cf_at_one_matches_direct_sum():
    grid = GridSpec(16.0, 2049)
    cf = empirical_cf(TABLE1_SAMPLE, "x1", grid)
    k = int(np.argmin(np.abs(grid.nodes - 1.0)))
    assert grid.nodes[k] == 1.0
    assert abs(cf.values[k] - table1_direct(1.0)) < 1e-14


def test_empty_sample():
    with pytest.raises(EmptySample):
        Sample2(np.empty((0, 2)), [])


def test_invalid_cf_rejected():
    with pytest.raises(BadDistribution):
        CharFnGrid(GridSpec(1.0, 3), [1.0, 2.0, 1.0])


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 1)),
                min_size=1, max_size=8))
def test_empirical_cf_hermitian_and_bounded(rows):
    w = np.array([r[2] for r in rows])
    sample = Sample2([[r[0], r[1]] for r in rows], w / w.sum())
    cf = empirical_cf(sample, "x1", GridSpec(8.0, 65))
    np.testing.assert_allclose(cf.values, np.conj(cf.values[::-1]), atol=1e-12)
    assert np.all(np.abs(cf.values) <= 1 + 1e-12)


def test_degenerate_e1_recovers_phi_x1():
    # X1 = X* exactly; e2 zero-mean given X*
    pts = [[0, -1], [0, 1], [1, 0.5], [1, 1.5], [2, 1], [2, 3]]
    w = np.array([0.2, 0.2, 0.15, 0.15, 0.15, 0.15])
    sample = Sample2(pts, w)
    # trapezoid error is O(h^2); h = 1/4096 keeps it below 1e-8
    grid = GridSpec(1.0, 8193)
    res = latent_cf(sample, grid)
    np.testing.assert_allclose(res.phi_latent.values, res.phi_x1.values, atol=1e-8)


def test_gaussian_latent_cf():
    res = latent_cf(gaussian_sample(), GridSpec(4.0, 2049))
    t = res.phi_latent.t
    assert np.max(np.abs(res.phi_latent.values - np.exp(-t ** 2 / 2))) < 2e-3


def test_gaussian_default_grid_vanishes():
    # phi_X1(t) = exp(-0.625 t^2) drops below 1e-6 near |t| = 4.7
    with pytest.raises(VanishingCF):
        latent_cf(gaussian_sample())


def test_table1_latent_cf():
    # e1 uniform on {-1, 2} has |phi| = |cos(3t/2)|, zero at pi/3
    res = latent_cf(TABLE1_SAMPLE, GridSpec(1.0, 2049))
    t = res.phi_latent.t
    assert np.max(np.abs(res.phi_latent.values - (1 + np.exp(1j * t)) / 2)) < 1e-6


def test_table1_zero_between_nodes_is_caught():
    with pytest.raises(VanishingCF):
        latent_cf(TABLE1_SAMPLE, GridSpec(2.0, 2049))


def test_cos_zero_on_grid_vanishes():
    sample = Sample2([[1.0, 1.0], [-1.0, -1.0]], [0.5, 0.5])
    with pytest.raises(VanishingCF):
        latent_cf(sample, GridSpec(np.pi, 2049))
    with pytest.raises(VanishingCF):
        latent_cf(sample)


def test_fast_rotation_is_too_coarse():
    # X1 = X2 = 400: latent phase turns 400 * h > pi per step
    sample = Sample2([[400.0, 400.0]], [1.0])
    with pytest.raises(GridTooCoarse):
        latent_cf(sample, GridSpec(16.0, 2049))


def test_kotlarski_accepts_joint_grid():
    grid = GridSpec(1.0, 129)
    joint = empirical_cf(TABLE1_SAMPLE, "joint", grid)
    a = kotlarski_cf(joint, cross_moment(TABLE1_SAMPLE, grid))
    b = latent_cf(TABLE1_SAMPLE, grid).phi_latent
    np.testing.assert_allclose(a.values, b.values, atol=1e-14)


def test_invert_standard_normal():
    grid = GridSpec(8.0, 1025)
    cf = CharFnGrid(grid, np.exp(-grid.nodes ** 2 / 2))
    inv = invert_cf(cf, [0.0])
    assert abs(inv.density[0] - 1 / np.sqrt(2 * np.pi)) < 1e-4
    assert inv.t_max == 8.0


def test_invert_point_mass_concentrates():
    # window mass is (2/pi) Si(t_max / 2), within 4 / (pi t_max) of 1
    x = np.linspace(-0.5, 0.5, 4001)
    for t_max in (4.0, 16.0, 64.0, 256.0):
        grid = GridSpec(t_max, 2049)
        f = invert_cf(CharFnGrid(grid, np.ones(grid.n_points)), x).density
        assert abs(np.trapezoid(f, x) - 1) < 4 / (np.pi * t_max)


def test_inversion_is_linear():
    grid = GridSpec(6.0, 257)
    a = 0.3
    phi1 = np.exp(-grid.nodes ** 2 / 2)
    phi2 = np.exp(1j * grid.nodes) * np.exp(-np.abs(grid.nodes))
    x = np.linspace(-3, 3, 31)
    mix = invert_cf(CharFnGrid(grid, a * phi1 + (1 - a) * phi2), x).density
    parts = a * invert_cf(CharFnGrid(grid, phi1), x).density + \
        (1 - a) * invert_cf(CharFnGrid(grid, phi2), x).density
    np.testing.assert_allclose(mix, parts, atol=1e-12)


def test_discrete_inversion_integrates_to_one():
    grid = GridSpec(1.0, 1025)
    cf = latent_cf(TABLE1_SAMPLE, grid).phi_latent
    half = np.pi / grid.step  # one period of the trapezoid sum
    x = np.linspace(-half, half, 20001)
    f = invert_cf(cf, x).density
    assert abs(np.trapezoid(f, x) - 1) < 1e-3


def test_joint_with_latent_table1_point():
    grid = GridSpec(4.0, 257)
    joint = empirical_cf(TABLE1_SAMPLE, "joint", grid)
    latent = empirical_cf(Sample2([[0, 0], [1, 1]], [0.5, 0.5]), "x1", grid)
    unit = GridSpec(1.0, 3)
    out = joint_cf_with_latent(joint, latent, unit, unit, unit)
    assert abs(out.values[2, 2, 2] - table1_direct(1.0, 1.0, 1.0)) < 1e-6


def test_joint_with_recovered_latent_matches_brute_force():
    grid = GridSpec(1.0, 129)
    joint = empirical_cf(TABLE1_SAMPLE, "joint", grid)
    latent = latent_cf(TABLE1_SAMPLE, grid).phi_latent
    out = joint_cf_with_latent(joint, latent)
    S, T, V = np.meshgrid(out.s_grid.nodes, out.t_grid.nodes, out.v_grid.nodes, indexing="ij")
    direct = table1_direct(S, T, V)
    assert np.max(np.abs(out.values - direct)) < 1e-6

    # v = 0 slice is the (X1, X2) transform; s = t = 0 line is the latent transform
    sub = joint.values[32:97, :]
    np.testing.assert_allclose(out.values[:, :, out.v_grid.center], sub, atol=1e-6)
    np.testing.assert_allclose(out.values[out.s_grid.center, out.t_grid.center, :],
                               latent.values[32:97], atol=1e-6)


def test_joint_with_latent_off_range():
    grid = GridSpec(1.0, 129)
    joint = empirical_cf(TABLE1_SAMPLE, "joint", grid)
    latent = latent_cf(TABLE1_SAMPLE, grid).phi_latent
    with pytest.raises(GridTooCoarse):
        joint_cf_with_latent(joint, latent, GridSpec(1.0, 5), GridSpec(1.0, 5), GridSpec(1.0, 5))


@st.composite
def additive_models(draw):
    """Discrete X*, e1, e2 with a dominant atom each so phi_X1 stays away from 0."""
    def dominated_pmf(values):
        k = len(values)
        rest = draw(st.lists(st.floats(0.01, 1.0), min_size=k - 1, max_size=k - 1))
        tail = 0.25 * np.array(rest) / sum(rest) if rest else np.array([])
        return np.concatenate([[0.75], tail]) if rest else np.array([1.0])

    latent_vals = draw(st.lists(st.integers(-2, 2), min_size=1, max_size=3, unique=True))
    eps1_vals = draw(st.lists(st.integers(-2, 2), min_size=1, max_size=3, unique=True))
    f_latent = dominated_pmf(latent_vals)
    f_eps1 = dominated_pmf(eps1_vals)
    pts, w = [], []
    for xs, px in zip(latent_vals, f_latent):
        a = -draw(st.integers(1, 3))
        b = draw(st.integers(1, 3))
        pb = -a / (b - a)
        for e, pe in zip(eps1_vals, f_eps1):
            for v, pv in ((a, 1 - pb), (b, pb)):
                pts.append([xs + e, xs + v])
                w.append(px * pe * pv)
    return Sample2(pts, np.array(w) / sum(w)), np.array(latent_vals, float), f_latent


@settings(max_examples=40, deadline=None)
@given(additive_models())
def test_round_trip_discrete_models(model):
    sample, latent_vals, f_latent = model
    grid = GridSpec(1.0, 2049)
    res = latent_cf(sample, grid)
    t = grid.nodes
    direct = np.exp(1j * np.outer(t, latent_vals)) @ f_latent
    interior = slice(1, -1)
    assert np.max(np.abs(res.phi_latent.values[interior] - direct[interior])) < 1e-5
