import numpy as np
import pytest
from numpy.testing import assert_allclose

from entlab.ensembles import RngStream, conjugate_diagonal, sample_cue, sample_spectrum
from entlab.linalg import dagger
from entlab.measures import concurrence, negativity
from entlab.mems import ALL_VARIANTS, c_star, neg_star
from entlab.orbit import (
    SCAN_COLUMNS,
    MeasureKind,
    ScanConfig,
    _cayley,
    format_scan_csv,
    max_over_orbit,
    mems_unitary,
    orbit_values,
    rank_bound,
    scan,
    scan_manifest,
    verify_rank_bounds,
)

P = np.array([0.5, 0.25, 0.2, 0.05])


@pytest.mark.parametrize("kind", list(MeasureKind))
def test_orbit_values_match_direct_measures(kind):
    u = sample_cue(RngStream(1), size=200)
    rho = conjugate_diagonal(u, P)
    direct = concurrence(rho) if kind is MeasureKind.CONCURRENCE else negativity(rho)
    assert_allclose(orbit_values(P, u, kind), direct, atol=1e-12)


@pytest.mark.parametrize("kind", list(MeasureKind))
def test_mems_point_attains_star_value(kind):
    g = RngStream(2).generator
    for p in sample_spectrum(g, size=50):
        extra = np.stack([mems_unitary(v) for v in ALL_VARIANTS])
        res = max_over_orbit(p, 16, 0, kind, g, extra_unitaries=extra)
        assert res.best_value == pytest.approx(res.star_clipped, abs=1e-10)


@pytest.mark.parametrize("kind", list(MeasureKind))
def test_random_search_stays_under_envelope(kind):
    g = RngStream(3).generator
    for p in sample_spectrum(g, size=30):
        res = max_over_orbit(p, 2000, 0, kind, g)
        assert not res.violates_envelope
        if res.participation_ratio >= 3:
            assert res.best_value <= 1e-12


def test_budget_monotone_on_nested_prefixes():
    values = [max_over_orbit(P, n, 0, MeasureKind.CONCURRENCE, RngStream(4)).best_value for n in (1, 10, 100, 5000, 9000)]
    assert values == sorted(values)


def test_chunking_does_not_change_result():
    a = max_over_orbit(P, 1000, 0, MeasureKind.NEGATIVITY, RngStream(5))
    b = max_over_orbit(P, 1000, 0, MeasureKind.NEGATIVITY, RngStream(5), chunk=97)
    assert a.best_value == b.best_value
    assert np.array_equal(a.best_unitary, b.best_unitary)


def test_ties_keep_first_candidate():
    # Every orbit point of I/4 has concurrence 0, so the first sample wins.
    res = max_over_orbit(np.full(4, 0.25), 50, 0, MeasureKind.CONCURRENCE, RngStream(6))
    first = sample_cue(RngStream(6).generator, size=50)[0]
    assert res.best_value == 0
    assert np.array_equal(res.best_unitary, first)


def test_refinement_never_decreases():
    g_plain, g_ref = RngStream(7), RngStream(7)
    plain = max_over_orbit(P, 500, 0, MeasureKind.CONCURRENCE, g_plain)
    refined = max_over_orbit(P, 500, 300, MeasureKind.CONCURRENCE, g_ref, n_starts=4)
    assert refined.refined and not plain.refined
    assert refined.best_value >= plain.best_value
    assert refined.samples_used > plain.samples_used
    assert refined.best_value <= c_star(P).clipped + 1e-9


def test_refinement_approaches_rank_two_bound():
    p = np.array([0.9, 0.1, 0, 0])
    res = max_over_orbit(p, 4096, 2000, MeasureKind.CONCURRENCE, RngStream(8))
    assert 0.9 - 5e-3 <= res.best_value <= 0.9 + 1e-9


def test_rank_three_bound_never_exceeded():
    p = np.array([0.6, 0.3, 0.1, 0])
    assert rank_bound(p) == pytest.approx(0.5)
    assert c_star(p).clipped == pytest.approx(0.5)
    res = max_over_orbit(p, 4096, 1000, MeasureKind.CONCURRENCE, RngStream(9), n_starts=8)
    assert res.best_value <= 0.5 + 1e-9


def test_best_unitary_reproduces_best_value():
    res = max_over_orbit(P, 300, 200, MeasureKind.NEGATIVITY, RngStream(10), n_starts=4)
    u = res.best_unitary
    assert_allclose(dagger(u) @ u, np.eye(4), atol=1e-12)
    assert negativity(conjugate_diagonal(u, P)) == pytest.approx(res.best_value, abs=1e-12)


def test_max_over_orbit_validation():
    with pytest.raises(ValueError):
        max_over_orbit(P, 0, 0, MeasureKind.CONCURRENCE, RngStream(0))
    with pytest.raises(ValueError):
        max_over_orbit(P, 10, -1, MeasureKind.CONCURRENCE, RngStream(0))
    with pytest.raises(ValueError):
        max_over_orbit(P, 10, 0, MeasureKind.CONCURRENCE, None)


def test_cayley_is_unitary_and_small_for_small_steps():
    g = np.random.default_rng(0)
    a = g.standard_normal((4, 4)) + 1j * g.standard_normal((4, 4))
    h = a + dagger(a)
    w = _cayley(h, 0.3)
    assert_allclose(dagger(w) @ w, np.eye(4), atol=1e-13)
    assert np.abs(_cayley(h, 1e-8) - np.eye(4)).max() < 1e-6


def test_scan_config_validation():
    for args in ((0, 10), (10, 0)):
        with pytest.raises(ValueError):
            ScanConfig(*args)
    with pytest.raises(ValueError):
        ScanConfig(1, 1, refine_steps=-1)
    with pytest.raises(ValueError):
        ScanConfig(1, 1, measure_kind="entropy")


def test_scan_rows_and_determinism():
    cfg = ScanConfig(12, 300, 0, "negativity", seed=11)
    rows = scan(cfg)
    assert len(rows) == 12
    for r in rows:
        assert r.participation_ratio == pytest.approx(1 / np.sum(np.square(r.spectrum)))
        assert r.neg_star_raw == pytest.approx(neg_star(r.spectrum).raw)
        assert not r.violates_envelope
    a = format_scan_csv(rows, scan_manifest(cfg))
    b = format_scan_csv(scan(cfg), scan_manifest(cfg))
    assert a == b


def test_scan_independent_of_worker_count():
    cfg = ScanConfig(6, 200, 0, "concurrence", seed=12)
    one = format_scan_csv(scan(cfg, workers=1), scan_manifest(cfg))
    two = format_scan_csv(scan(cfg, workers=2), scan_manifest(cfg))
    assert one == two


def test_scan_csv_layout():
    cfg = ScanConfig(3, 50, 0, "concurrence", seed=13)
    text = format_scan_csv(scan(cfg), scan_manifest(cfg))
    lines = text.splitlines()
    assert lines[0].startswith("# entlab")
    assert '"seed": 13' in lines[1]
    assert lines[2].split(",") == list(SCAN_COLUMNS)
    assert len(lines) == 6
    fields = lines[3].split(",")
    assert fields[0] == "0" and fields[8] == "concurrence"
    assert all(len(f.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 12 for f in fields[1:8])


def test_verify_rank_bounds_small():
    rows = verify_rank_bounds(3, RngStream(14))
    assert [r.rank for r in rows] == [2, 3]
    for r in rows:
        assert r.passed, r
    with pytest.raises(ValueError):
        verify_rank_bounds(0, RngStream(14))
