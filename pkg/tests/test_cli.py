import csv

import numpy as np
import pytest

from conftest import TABLE1, TABLE2, TABLE3
from latentid.cli import main
from latentid.fileio import DATA_DIR, population_csv
from latentid.kotlarski import GridSpec, Sample2, empirical_cf, invert_cf
from latentid.synth import gaussian_sample


def write(path, columns, rows):
    path.write_text(population_csv(columns, rows), encoding="utf-8")
    return str(path)


def write_pmf(path, probs, support=(0, 1), support3=None):
    support3 = support3 or tuple(range(1, probs.shape[2] + 1))
    rows = [[a, b, c, probs[i, j, l]]
            for i, a in enumerate(support) for j, b in enumerate(support)
            for l, c in enumerate(support3) if probs[i, j, l] > 0]
    return write(path, ["x1", "x2", "x3", "p"], rows)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_check_leaves_codes(tmp_path, capsys):
    ok = write(tmp_path / "t1.csv", ["x1", "x2", "x_star"], [r[:2] + (r[3],) for r in TABLE1])
    assert main(["check-leaves", ok]) == 0
    bad = write(tmp_path / "t3.csv", ["x1", "x2", "x3", "x_star"], TABLE3)
    capsys.readouterr()
    assert main(["check-leaves", bad]) == 1
    out = capsys.readouterr().out
    assert "collisions: 4" in out
    assert "rows 13 and 17" in out and "rows 16 and 20" in out


def test_malformed_row(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("x1,x2\n1,2\n3\n", encoding="utf-8")
    assert main(["check-leaves", str(path)]) == 2
    assert "line 3" in capsys.readouterr().err
    assert main(["check-leaves", str(tmp_path / "absent.csv")]) == 2


def test_identify_and_compare_round_trip(tmp_path):
    assert main(["synth", "table2", "--output", str(tmp_path)]) == 0
    pmf = str(tmp_path / "table2_pmf.csv")
    truth = str(tmp_path / "table2_model.txt")
    est = str(tmp_path / "est.txt")
    assert main(["identify3", pmf, "--g", "0,1,1,0", "--output", est]) == 0
    assert main(["compare", truth, est, "--tol", "1e-8"]) == 0
    # identity g collides on this model
    assert main(["identify3", pmf]) == 4


def test_identify_error_codes(tmp_path):
    a = np.array([0.6, 0.4])
    c = np.array([0.1, 0.2, 0.3, 0.4])
    rank1 = write_pmf(tmp_path / "r.csv", np.einsum("i,j,l->ijl", a, a, c))
    assert main(["identify3", rank1]) == 3

    m1 = np.array([[0.7, 0.6], [0.3, 0.4]])
    m2 = np.array([[0.8, 0.3], [0.2, 0.7]])
    m3 = np.array([[0.6, 0.1], [0.4, 0.9]])
    no_mode = write_pmf(tmp_path / "m.csv", np.einsum("ik,jk,lk,k->ijl", m1, m2, m3, [0.5, 0.5]))
    assert main(["identify3", no_mode]) == 5

    assert main(["identify3", rank1, "--g", "1,2"]) == 2


def test_identify_misfit(tmp_path):
    spec = tmp_path / "small.json"
    spec.write_text('{"kind": "random3", "K": 2, "L": 4}', encoding="utf-8")
    assert main(["synth", str(spec), "--seed", "5", "--output", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "small_pmf.csv")
    probs = np.array([float(r["p"]) for r in rows])
    cell = [k for k, r in enumerate(rows) if (r["x1"], r["x2"], r["x3"]) == ("0", "1", "3")]
    probs[cell] += 0.05
    probs /= probs.sum()
    path = write(tmp_path / "bent.csv", ["x1", "x2", "x3", "p"],
                 [[r["x1"], r["x2"], r["x3"], p] for r, p in zip(rows, probs)])
    assert main(["identify3", path]) == 13


def test_assign_table2(tmp_path):
    assert main(["synth", "table2", "--output", str(tmp_path)]) == 0
    src = str(tmp_path / "table2_population.csv")
    out = tmp_path / "assigned.csv"
    assert main(["assign", src, "--g", "0,1,1,0", "--output", str(out)]) == 0
    rows = read_csv(out)
    printed = {r[:3]: r[3] for r in TABLE2}
    assert len(rows) == 16
    assert all(int(r["x_star"]) == printed[(int(r["x1"]), int(r["x2"]), int(r["x3"]))] for r in rows)
    assert min(float(r["posterior"]) for r in rows) >= 1 - 1e-9


def test_assign_table3_is_ambiguous(tmp_path, capsys):
    assert main(["synth", "table3", "--output", str(tmp_path)]) == 0
    capsys.readouterr()
    assert main(["assign", str(tmp_path / "table3_population.csv")]) == 7
    err = capsys.readouterr().err
    for x1, x2 in ((0, 0), (1, 0), (0, 1), (1, 1)):
        assert f"({x1},{x2},4)" in err


def test_assign_group_mean_table1(tmp_path):
    src = write(tmp_path / "t1.csv", ["x1", "x2"], [r[:2] for r in TABLE1])
    out = tmp_path / "assigned.csv"
    assert main(["assign", src, "--mode", "group-mean", "--model", str(DATA_DIR / "table1.json"),
                 "--output", str(out)]) == 0
    rows = read_csv(out)
    np.testing.assert_allclose([float(r["x_star"]) for r in rows], [r[3] for r in TABLE1], atol=1e-12)
    assert main(["assign", src, "--mode", "group-mean"]) == 2


def test_kotlarski_gaussian(tmp_path):
    s = gaussian_sample()
    src = write(tmp_path / "g.csv", ["x1", "x2", "p"],
                [[a, b, p] for (a, b), p in zip(s.points, s.weights)])
    out = tmp_path / "density.csv"
    assert main(["kotlarski", src, "--t-max", "4", "--x-min", "-1", "--x-max", "1",
                 "--x-points", "3", "--output", str(out)]) == 0
    rows = read_csv(out)
    assert float(rows[1]["x"]) == 0.0
    assert abs(float(rows[1]["density"]) - 1 / np.sqrt(2 * np.pi)) < 2e-3
    assert main(["kotlarski", src]) == 8


def test_kotlarski_degenerate_e1_matches_direct(tmp_path):
    pts = [[0, -1], [0, 1], [1, 0.5], [1, 1.5], [2, 1], [2, 3]]
    w = [0.2, 0.2, 0.15, 0.15, 0.15, 0.15]
    src = write(tmp_path / "d.csv", ["x1", "x2", "p"], [p + [q] for p, q in zip(pts, w)])
    out = tmp_path / "density.csv"
    assert main(["kotlarski", src, "--t-max", "1", "--n-points", "8193", "--output", str(out)]) == 0
    rows = read_csv(out)
    x = np.array([float(r["x"]) for r in rows])
    grid = GridSpec(1.0, 8193)
    direct = invert_cf(empirical_cf(Sample2(pts, w), "x1", grid), x).density
    np.testing.assert_allclose([float(r["density"]) for r in rows], direct, atol=1e-8)


def test_kotlarski_vanishing(tmp_path, capsys):
    src = write(tmp_path / "c.csv", ["x1", "x2"], [[-1, -1], [1, 1]])
    assert main(["kotlarski", src]) == 8
    assert "VanishingCF" in capsys.readouterr().err


def test_kotlarski_even_grid(tmp_path):
    src = write(tmp_path / "c.csv", ["x1", "x2"], [[-1, -1], [1, 1]])
    with pytest.raises(SystemExit) as info:
        main(["kotlarski", src, "--n-points", "2048"])
    assert info.value.code == 2


def test_synth_is_deterministic(tmp_path, monkeypatch):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["synth", "random3", "--seed", "7", "--output", str(a)]) == 0
    monkeypatch.setenv("LATENTID_SEED", "7")
    assert main(["synth", "random3", "--output", str(b)]) == 0
    monkeypatch.setenv("LATENTID_SEED", "8")
    assert main(["synth", "random3", "--output", str(c)]) == 0
    for name in ("random3_population.csv", "random3_pmf.csv", "random3_model.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert (a / "random3_pmf.csv").read_bytes() != (c / "random3_pmf.csv").read_bytes()
    monkeypatch.setenv("LATENTID_SEED", "seven")
    assert main(["synth", "random3", "--output", str(c)]) == 2


def test_synth_table3_warns(tmp_path, capsys):
    assert main(["synth", "table3", "--output", str(tmp_path)]) == 0
    assert "property of leaves fails" in capsys.readouterr().err


def test_synth_bad_spec(tmp_path):
    assert main(["synth", "no-such-spec", "--output", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "two_meas", "latent": {"0": 1}}', encoding="utf-8")
    assert main(["synth", str(bad), "--output", str(tmp_path)]) == 2


def test_synth_gaussian_sample(tmp_path):
    assert main(["synth", "gaussian", "--output", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "gaussian_sample.csv")
    assert len(rows) == 8000
    assert abs(sum(float(r["p"]) for r in rows) - 1) < 1e-12

