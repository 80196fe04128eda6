import numpy as np
import pytest

from miniqmc.containers import padded_size
from miniqmc.distance_tables import (SENTINEL, ABTable, PackedAATable, PaddedAATable,
                                     accept_move, evaluate_all, get_dist, get_row,
                                     stage_candidate_row, storage_scalars)
from miniqmc.errors import StagingError
from miniqmc.lattice import Cell, min_image_disp
from miniqmc.particles import ParticleSet

CELL = Cell.cubic(8.0)


def _electrons(n, seed=0, dtype=np.float64):
    rng = np.random.default_rng(seed)
    return ParticleSet("e", rng.uniform(0, 8, (n, 3)), CELL, dtype=dtype)


def _tables(e):
    return [PackedAATable(e), PaddedAATable(e, "forward_update"), PaddedAATable(e, "on_the_fly")]


def test_two_particles_packed():
    e = ParticleSet("e", [(0, 0, 0), (2, 0, 0)], CELL)
    t = PackedAATable(e)
    evaluate_all(t)
    np.testing.assert_array_equal(t.upper, [2.0])


def test_equilateral():
    s = 1.5
    pos = [(1, 1, 1), (1 + s, 1, 1), (1 + s / 2, 1 + s * np.sqrt(3) / 2, 1)]
    e = ParticleSet("e", pos, CELL)
    for t in _tables(e):
        evaluate_all(t)
        np.testing.assert_allclose(t.pair_distances(), [s] * 3, rtol=1e-14)


@pytest.mark.parametrize("make", [PackedAATable, lambda e: PaddedAATable(e, "forward_update"),
                                  lambda e: PaddedAATable(e, "on_the_fly")])
def test_evaluate_all_vs_pairwise_oracle(make):
    e = _electrons(64)
    t = make(e)
    evaluate_all(t)
    for i in range(64):
        d, disp = get_row(t, i)
        for j in range(64):
            if i == j:
                assert d[j] >= SENTINEL
                continue
            ref_d, ref_disp = min_image_disp(CELL, e.R[i], e.R[j])
            assert abs(d[j] - ref_d) < 1e-12
            np.testing.assert_allclose(disp[:, j], ref_disp, atol=1e-12)


def test_stage_candidate_row():
    e = ParticleSet("e", [(0, 0, 0), (1, 0, 0)], Cell.cubic(20.0))
    for t in _tables(e):
        evaluate_all(t)
        stage_candidate_row(t, 0, (6, 0, 0))
        d, _ = t.temp_row()
        assert d[1] == pytest.approx(5.0)
        assert d[0] >= SENTINEL


def test_stage_same_position_reproduces_row():
    e = _electrons(20)
    for t in _tables(e):
        evaluate_all(t)
        stage_candidate_row(t, 7, e.R[7])
        d, disp = t.temp_row()
        row_d, row_disp = get_row(t, 7)
        np.testing.assert_allclose(d, row_d, rtol=1e-14)
        np.testing.assert_allclose(disp, row_disp, atol=1e-14)


def test_stage_random_vs_oracle():
    e = _electrons(30)
    rng = np.random.default_rng(2)
    for t in _tables(e):
        evaluate_all(t)
        r = rng.uniform(0, 8, 3)
        stage_candidate_row(t, 4, r)
        d, _ = t.temp_row()
        for j in range(30):
            if j != 4:
                assert abs(d[j] - min_image_disp(CELL, r, e.R[j])[0]) < 1e-12


def test_stage_out_of_range():
    e = _electrons(5)
    for t in _tables(e):
        with pytest.raises(IndexError):
            stage_candidate_row(t, 5, (0, 0, 0))


def test_accept_without_stage():
    e = _electrons(5)
    for t in _tables(e):
        evaluate_all(t)
        with pytest.raises(StagingError):
            accept_move(t, 2)
        stage_candidate_row(t, 2, (1, 1, 1))
        t.reject_move(2)
        with pytest.raises(StagingError):
            accept_move(t, 2)


def _commit(e, k, r):
    for t in e.tables:
        stage_candidate_row(t, k, r)
    e.make_move(k, r)
    e.accept_move(k)


def test_accept_updates_forward_entries():
    e = _electrons(10)
    tables = _tables(e)
    for t in tables:
        e.add_table(t)
        evaluate_all(t)
    r = np.array([4.0, 4.0, 4.0])
    e.make_move(3, r)
    staged = {id(t): t.temp_row()[0].copy() for t in tables}
    e.accept_move(3)
    for t in tables:
        for j in range(4, 10):
            assert get_dist(t, 3, j) == pytest.approx(staged[id(t)][j], rel=1e-14)
            assert get_dist(t, j, 3) == pytest.approx(staged[id(t)][j], rel=1e-14)


def test_forward_update_staleness_is_documented():
    e = _electrons(6)
    t = PaddedAATable(e, "forward_update")
    e.add_table(t)
    evaluate_all(t)
    e.make_move(4, np.array([1.0, 2.0, 3.0]))
    e.accept_move(4)
    fresh = min_image_disp(CELL, e.R[1], e.R[4])[0]
    # entry (1, 4) lies behind the sweep front and was not patched
    assert t.dist[1, 4] != pytest.approx(fresh)
    evaluate_all(t)
    assert t.dist[1, 4] == pytest.approx(fresh, abs=1e-12)


def test_sweeps_match_mirror_for_future_rows():
    rng = np.random.default_rng(11)
    n = 24
    e = _electrons(n, seed=4)
    fwd = PaddedAATable(e, "forward_update")
    otf = PaddedAATable(e, "on_the_fly")
    ref = PackedAATable(e)
    for t in (fwd, otf, ref):
        e.add_table(t)
    e.update()
    moves = 0
    while moves < 500:
        for k in range(n):
            mirror = PackedAATable(e)
            mirror.evaluate_all()
            # rows of particles not yet moved in this sweep must be current
            for i in range(k, n):
                for j in range(n):
                    if i == j:
                        continue
                    exp = mirror.get_dist(i, j)
                    assert abs(fwd.dist[i, j] - exp) < 1e-12
                    assert abs(otf.get_dist(i, j) - exp) < 1e-12
                    assert abs(ref.get_dist(i, j) - exp) < 1e-12
            r = e.R[k] + rng.normal(scale=0.5, size=3)
            e.make_move(k, r)
            if rng.uniform() < 0.5:
                e.accept_move(k)
            else:
                e.reject_move(k)
            moves += 1
            if moves >= 500:
                break
        e.update()


def test_policy_equivalence_after_refresh():
    rng = np.random.default_rng(5)
    e = _electrons(40, seed=5)
    tables = _tables(e)
    for t in tables:
        e.add_table(t)
    e.update()
    for _ in range(2):
        for k in range(40):
            e.make_move(k, e.R[k] + rng.normal(scale=0.4, size=3))
            rows = [t.temp_row()[0].copy() for t in tables]
            for r in rows[1:]:
                np.testing.assert_allclose(r, rows[0], rtol=1e-14)
            if rng.uniform() < 0.5:
                e.accept_move(k)
            else:
                e.reject_move(k)
    e.update()
    sums = [np.sort(t.pair_distances()) for t in tables]
    for s in sums[1:]:
        np.testing.assert_allclose(s, sums[0], rtol=1e-14)


def test_symmetry_and_sentinel():
    e = _electrons(12)
    for t in _tables(e):
        evaluate_all(t)
        for i in range(12):
            assert get_dist(t, i, i) >= SENTINEL
            for j in range(12):
                assert get_dist(t, i, j) == get_dist(t, j, i)


def test_get_dist_out_of_range():
    e = _electrons(4)
    for t in _tables(e):
        evaluate_all(t)
        with pytest.raises(IndexError):
            get_dist(t, 0, 4)
        with pytest.raises(IndexError):
            get_row(t, 4)


def test_random_queries_vs_oracle():
    e = _electrons(50, seed=9)
    rng = np.random.default_rng(9)
    for t in _tables(e):
        evaluate_all(t)
        for _ in range(100):
            i, j = rng.choice(50, 2, replace=False)
            assert abs(get_dist(t, i, j) - min_image_disp(CELL, e.R[i], e.R[j])[0]) < 1e-12


@pytest.mark.parametrize("n,packed,padded", [(256, 32640, 65536), (768, 294528, 589824),
                                             (20, 190, 20 * 32)])
def test_storage_scalars(n, packed, padded):
    e = ParticleSet("e", np.zeros((n, 3)), CELL)
    assert storage_scalars(PackedAATable(e)) == packed
    assert storage_scalars(PaddedAATable(e)) == padded == n * padded_size(n)


def test_distances_nonnegative_and_consistent():
    for dtype, tol in ((np.float64, 1e-12), (np.float32, 1e-5)):
        e = _electrons(30, dtype=dtype)
        for t in _tables(e):
            evaluate_all(t)
            for i in range(30):
                d, disp = get_row(t, i)
                mask = d < SENTINEL
                assert np.all(d >= 0)
                norm = np.sqrt(np.sum(disp.astype(np.float64) ** 2, axis=0))
                np.testing.assert_allclose(norm[mask], d[mask], rtol=tol)


def test_padded_rows_aligned():
    e = _electrons(37, dtype=np.float32)
    t = PaddedAATable(e)
    assert t.dist.ctypes.data % (16 * 4) == 0
    assert t.dist.strides[0] == padded_size(37) * 4


def test_ab_table():
    e = ParticleSet("e", [(0, 0, 0), (3, 0, 0)], CELL)
    ions = ParticleSet("ion", [(1, 0, 0), (7, 0, 0), (0, 4, 0)], CELL).freeze()
    t = ABTable(e, ions)
    e.add_table(t)
    e.update()
    np.testing.assert_allclose(get_row(t, 0)[0], [1, 1, 4])
    np.testing.assert_allclose(get_row(t, 1)[0], [2, 4, 5])
    e.make_move(1, np.array([7.0, 0.0, 0.0]))
    np.testing.assert_allclose(t.temp_row()[0], [2, 0, np.hypot(1, 4)], atol=1e-12)
    e.accept_move(1)
    np.testing.assert_allclose(get_row(t, 1)[0], [2, 0, np.hypot(1, 4)], atol=1e-12)
    with pytest.raises(IndexError):
        get_dist(t, 0, 3)
