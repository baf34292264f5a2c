import math
import warnings
from statistics import NormalDist

import numpy as np
import pytest

from conftest import parse_all, random_instance
from nlsat.phasemap import (
    Axis, Cell, Estimate, KsatPoint, PhaseGrid, cell_triples, crossing, estimate_point, estimate_psat,
    extract_region, instance_stats, ksat_psat, load_grid, load_region, map_region, meta_path,
    parse_ratios, random_kcnf, SampleOptions, save_grid, save_region, wilson,
)


def _wilson_by_roots(k, n, z=1.959963984540054):
    # the interval ends solve (p_hat - p)^2 = z^2 p (1 - p) / n
    ph = k / n
    c = z * z / n
    roots = np.sort(np.roots([1 + c, -(2 * ph + c), ph * ph]).real)
    return tuple(float(r) for r in roots)


@pytest.mark.parametrize("k,n", [(0, 10), (3, 10), (10, 10), (137, 400), (1, 1), (250, 500)])
def test_wilson_against_quadratic(k, n):
    assert wilson(k, n) == pytest.approx(_wilson_by_roots(k, n), abs=1e-12)
    lo, hi = wilson(k, n)
    assert lo <= k / n <= hi


def test_wilson_width_shrinks_with_samples():
    w100 = np.subtract(*wilson(50, 100)[::-1])
    w400 = np.subtract(*wilson(200, 400)[::-1])
    assert w100 / w400 == pytest.approx(2, rel=0.02)


def test_axis():
    assert Axis.parse("0.25:1:0.25").points() == [0.25, 0.5, 0.75, 1.0]
    assert Axis.parse("0.5:1", 0.5).points() == [0.5, 1.0]
    assert Axis.parse("2", 0.5).points() == [2.0]
    with pytest.raises(ValueError):
        Axis.parse("1:0:0.5")
    with pytest.raises(ValueError):
        Axis(0, 1, 0)
    with pytest.raises(ValueError):
        Axis.parse("0:1")


def _brute_triples(alpha, beta, sa, sb, n1r, n2r):
    out = []
    for n1 in range(n1r[0], n1r[1] + 1):
        for m in range(1, 200):
            if not alpha - sa / 2 - 1e-9 <= m / n1 < alpha + sa / 2 - 1e-9:
                continue
            if beta is None:
                out.append((m, n1, 0))
                continue
            for n2 in range(n2r[0], n2r[1] + 1):
                if beta - sb / 2 - 1e-9 <= m / n2 < beta + sb / 2 - 1e-9:
                    out.append((m, n1, n2))
    return out


@pytest.mark.parametrize("alpha,beta,step", [(0.5, None, 0.25), (3.0, None, 0.25), (8.0, None, 0.25),
                                             (1.5, 1.5, 0.5), (2.0, 3.5, 0.5), (0.5, 0.5, 0.5)])
def test_cell_triples_against_brute_force(alpha, beta, step):
    n1r, n2r = ((6, 16), (0, 0)) if beta is None else ((3, 8), (3, 8))
    assert sorted(cell_triples(alpha, beta, step, step, n1r, n2r)) == \
        sorted(_brute_triples(alpha, beta, step, step, n1r, n2r))


def test_cells_tile_the_ratio_axis():
    # each (m, n1) with ratio inside the axis span lies in exactly one alpha cell
    points = Axis(0.25, 8, 0.25).points()
    for n1 in range(6, 17):
        for m in range(math.ceil(0.125 * n1), int(7.875 * n1)):
            hits = [a for a in points if (m, n1, 0) in cell_triples(a, None, 0.25, None, (n1, n1), (0, 0))]
            assert len(hits) == 1, (m, n1, hits)


def test_estimate_examples():
    high = estimate_psat("S", 2, 12, samples=400, seed=0)
    low = estimate_psat("S", 80, 8, samples=400, seed=0)
    assert high.phat >= 0.9 and low.phat <= 0.1
    again = estimate_psat("S", 2, 12, samples=400, seed=0)
    assert again == high and again.ci == high.ci


def test_estimate_errors():
    with pytest.raises(ValueError):
        estimate_psat("S", 2, 12, samples=0)
    with pytest.raises(ValueError):
        estimate_psat("V", 2, 3, 0, samples=5)
    with pytest.raises(ValueError):
        estimate_point("S", 0.02, samples=5, step=0.01)
    with pytest.raises(ValueError):
        map_region("S", Axis(0.5, 1, 0.5), samples=0)


def test_timeouts_are_resampled_and_capped():
    est = estimate_psat("A", 40, 4, 3, samples=3, seed=1, options=SampleOptions(max_nodes=1))
    assert est.timeouts > 0
    assert est.samples + est.timeouts <= 15
    if est.samples < 3:
        assert est.unreliable


def test_monotone_in_m():
    # non-increasing up to overlap of Bonferroni-adjusted intervals
    ms = [4, 8, 12, 16, 24]
    ests = [estimate_psat("W", m, 8, samples=150, seed=m) for m in ms]
    z = NormalDist().inv_cdf(1 - 0.05 / (2 * (len(ms) - 1)))
    for a, b in zip(ests, ests[1:]):
        assert wilson(b.sat, b.samples, z)[0] <= wilson(a.sat, a.samples, z)[1]
    assert ests[0].phat > ests[-1].phat


def test_map_region_deterministic_across_jobs():
    a = map_region("S", Axis(0.5, 2, 0.5), samples=15, seed=3)
    b = map_region("S", Axis(0.5, 2, 0.5), samples=15, seed=3, jobs=2)
    assert a == b
    assert [c.alpha for c in a.cells] == [0.5, 1.0, 1.5, 2.0]
    v = map_region("V", Axis(1, 2, 1), Axis(1, 2, 1), samples=5, seed=3, n1_range=(3, 4), n2_range=(3, 4))
    assert [(c.alpha, c.beta) for c in v.cells] == [(1, 1), (1, 2), (2, 1), (2, 2)]
    with pytest.raises(ValueError):
        map_region("V", Axis(1, 2, 1), samples=5)


def _grid(phats, samples=100):
    cells = tuple(Cell(0.5 * (i + 1), None, Estimate(samples, round(p * samples))) for i, p in enumerate(phats))
    return PhaseGrid("S", Axis(0.5, 0.5 * len(phats), 0.5), None, (6, 16), (0, 0), samples, 0, cells)


def test_extract_region_examples():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        r = extract_region(_grid([0.9, 0.5, 0.2]))
    assert r.cells == ((1.0, None),)
    with pytest.raises(ValueError):
        extract_region(_grid([0.5]), 0.65, 0.35)
    with pytest.warns(UserWarning, match="empty"):
        assert extract_region(_grid([0.9, 0.1])).cells == ()
    with pytest.warns(UserWarning, match="disconnected"):
        extract_region(_grid([0.5, 0.9, 0.5]))


def test_region_containment():
    r = extract_region(_grid([0.9, 0.5, 0.2]))
    assert r.contains(10, 10) and r.contains(12, 10)
    assert not r.contains(13, 10) and not r.contains(7, 10)
    triples = r.triples()
    assert triples and all(r.contains(*t) for t in triples)


def test_grid_and_region_files_roundtrip(tmp_path):
    grid = map_region("S", Axis(0.5, 1.5, 0.5), samples=10, seed=2)
    path = tmp_path / "grid.csv"
    save_grid(grid, path, tmp_path / "long.csv")
    assert meta_path(path).exists()
    back = load_grid(path)
    assert back.config() == grid.config()
    assert [c.estimate.sat for c in back.cells] == [c.estimate.sat for c in grid.cells]
    long_rows = (tmp_path / "long.csv").read_text().splitlines()
    assert long_rows[0] == "fragment,alpha,beta,quantity,value"
    region = extract_region(_grid([0.9, 0.5, 0.2]))
    save_region(region, tmp_path / "region.csv", source=str(path))
    assert load_region(tmp_path / "region.csv") == region
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        load_region(tmp_path / "bad.csv")


def test_random_kcnf_shape():
    f = random_kcnf(3, 10, 40, np.random.default_rng(0))
    assert len(f.clauses) == 40
    assert all(len({abs(l) for l in c}) == 3 for c in f.clauses)


def test_ksat_extremes():
    lo, hi = ksat_psat(3, 50, [1.0, 8.0], samples=100, seed=0)
    assert lo.phat >= 0.99 and hi.phat <= 0.01
    assert lo.m == 50 and hi.m == 400
    with pytest.raises(ValueError):
        ksat_psat(1, 10, [1.0], 10)


def test_crossing_interpolates():
    pts = [KsatPoint(4.0, 0, 10, 8), KsatPoint(4.1, 0, 10, 6), KsatPoint(4.2, 0, 10, 2)]
    assert crossing(pts) == pytest.approx(4.125)
    assert crossing(pts[:1]) is None
    assert parse_ratios("3.5:3.7:0.1") == [3.5, 3.6, 3.7]
    assert parse_ratios("1,2.5") == [1.0, 2.5]


def test_instance_stats_examples(vocab):
    st = instance_stats(parse_all(["Every artist loves some baker"], "V", vocab), vocab)
    assert (st.subject_forall, st.subject_exists, st.object_exists, st.object_forall) == (1, 0, 1, 0)
    assert st.tokens == 5 and st.n1 == 2 and st.n2 == 1
    rng = np.random.default_rng(0)
    s = instance_stats(random_instance("S", rng, 9, 6, vocab=vocab), vocab)
    assert s.subject_exists + s.subject_forall == 9
    assert s.object_ratio is None and s.beta is None
    a = instance_stats(parse_all(["Some artist hates no beekeeper who admires him"], "A", vocab), vocab)
    assert a.subject_exists == 1 and a.object_forall >= 1
