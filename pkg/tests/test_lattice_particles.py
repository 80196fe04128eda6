import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from miniqmc.lattice import Cell, min_image_disp
from miniqmc.oracle import brute_logpsi
from miniqmc.particles import ParticleSet, Walker, load_walker, store_walker

from conftest import make_engine


def test_min_image_periodic():
    d, disp = min_image_disp(Cell.cubic(10.0), (1, 0, 0), (9, 0, 0))
    assert d == pytest.approx(2.0)
    np.testing.assert_allclose(disp, [-2, 0, 0])


def test_min_image_open():
    d, disp = min_image_disp(Cell.open((10, 10, 10)), (1, 0, 0), (9, 0, 0))
    assert d == pytest.approx(8.0)
    np.testing.assert_allclose(disp, [8, 0, 0])


def test_min_image_mixed_periodicity():
    cell = Cell((10, 10, 10), (True, False, True))
    _, disp = min_image_disp(cell, (1, 1, 1), (9, 9, 9))
    np.testing.assert_allclose(disp, [-2, 8, -2])


def test_min_image_against_27_images():
    rng = np.random.default_rng(3)
    cell = Cell((7.0, 9.0, 11.0))
    L = np.array(cell.lengths)
    shifts = np.array(list(itertools.product((-1, 0, 1), repeat=3))) * L
    for _ in range(1000):
        a = rng.uniform(-5, 15, 3)
        b = rng.uniform(-5, 15, 3)
        d, _ = min_image_disp(cell, a, b)
        base = b - a
        base -= L * np.round(base / L)
        best = np.min(np.linalg.norm(base + shifts, axis=1))
        assert abs(d - best) < 1e-12


@given(st.lists(st.floats(-50, 50), min_size=6, max_size=6))
def test_min_image_symmetric_and_bounded(xs):
    cell = Cell((4.0, 5.0, 6.0))
    a, b = np.array(xs[:3]), np.array(xs[3:])
    d1, disp1 = min_image_disp(cell, a, b)
    d2, _ = min_image_disp(cell, b, a)
    assert d1 == pytest.approx(d2, abs=1e-12)
    L = np.array(cell.lengths)
    assert np.all(disp1 > -L / 2 - 1e-12) and np.all(disp1 <= L / 2 + 1e-12)


def test_cell_rejects_bad_lengths():
    with pytest.raises(ValueError):
        Cell((1.0, 0.0, 1.0))


def test_particle_set_dual_storage():
    rng = np.random.default_rng(0)
    R = rng.uniform(0, 5, (9, 3))
    ps = ParticleSet("e", R, Cell.cubic(5.0))
    np.testing.assert_array_equal(ps.Rsoa.to_aos(), R)
    assert ps.G.shape == (9, 3) and ps.L.shape == (9,)


def test_ions_are_frozen(tiny):
    with pytest.raises(RuntimeError):
        tiny.ions.set_positions(tiny.ions.R + 1)


def test_rsoa_coherent_after_accepts(tiny):
    eng = make_engine(tiny)
    e, psi = eng.electrons, eng.psi
    rng = np.random.default_rng(8)
    for k in range(e.n):
        e.make_move(k, e.R[k] + rng.normal(scale=0.2, size=3))
        psi.ratio_grad(e, k)
        if rng.uniform() < 0.7:
            psi.accept_move(e, k)
        else:
            psi.reject_move(e, k)
        np.testing.assert_array_equal(e.Rsoa.to_aos(), e.R)


def test_walker_serialization_round_trip():
    rng = np.random.default_rng(1)
    w = Walker(rng.normal(size=(6, 3)), weight=0.7, e_local=-3.2, buffer=rng.normal(size=11))
    data = w.to_bytes()
    assert len(data) == 16 + 8 * (18 + 2 + 11)
    back, used = Walker.from_bytes(data)
    assert used == len(data)
    np.testing.assert_array_equal(back.R, w.R)
    np.testing.assert_array_equal(back.buffer, w.buffer)
    assert back.weight == w.weight and back.e_local == w.e_local


def test_walker_invariants():
    with pytest.raises(ValueError):
        Walker(np.zeros((2, 3)), weight=-1.0)
    with pytest.raises(ValueError):
        Walker(np.zeros((2, 3)), multiplicity=-1)


def _walker_from(eng):
    w = Walker(eng.electrons.R.copy())
    store_walker(eng.electrons, w, eng.psi)
    return w


def test_load_reads_rsoa(tiny):
    eng = make_engine(tiny)
    w = _walker_from(eng)
    other = make_engine(tiny, seed=9)
    load_walker(other.electrons, w, other.psi)
    np.testing.assert_array_equal(other.electrons.Rsoa[0], w.R[0])


def test_load_store_round_trip_is_bitwise(tiny):
    eng = make_engine(tiny)
    w = _walker_from(eng)
    before = w.buffer.copy()
    load_walker(eng.electrons, w, eng.psi)
    store_walker(eng.electrons, w, eng.psi)
    assert before.tobytes() == w.buffer.tobytes()


def test_load_store_after_moves_matches_oracle(tiny_nopp):
    eng = make_engine(tiny_nopp)
    e, psi = eng.electrons, eng.psi
    w = _walker_from(eng)
    rng = np.random.default_rng(2)
    accepted = 0
    k = 0
    while accepted < 10:
        e.make_move(k, e.R[k] + rng.normal(scale=0.3, size=3))
        psi.ratio_grad(e, k)
        psi.accept_move(e, k)
        accepted += 1
        k = (k + 1) % e.n
    store_walker(e, w, psi)
    fresh = make_engine(tiny_nopp, seed=77)
    load_walker(fresh.electrons, w, fresh.psi)
    ref, _ = brute_logpsi(w.R, tiny_nopp.ions, tiny_nopp.wf_config)
    assert abs(fresh.psi.log_psi - ref) < 1e-10 * max(1.0, abs(ref))


def test_load_size_mismatch(tiny):
    eng = make_engine(tiny)
    with pytest.raises(ValueError):
        load_walker(eng.electrons, Walker(np.zeros((3, 3))))
    w = Walker(eng.electrons.R.copy(), buffer=np.zeros(5))
    with pytest.raises(ValueError):
        load_walker(eng.electrons, w, eng.psi)
    with pytest.raises(ValueError):
        store_walker(eng.electrons, w, eng.psi)
