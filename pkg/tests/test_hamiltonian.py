import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from miniqmc.errors import DivergenceError
from miniqmc.hamiltonian import (Hamiltonian, NonlocalPP, PPChannel, coulomb_ee, coulomb_ei,
                                 icosahedral_rule, kinetic, nonlocal_pp)
from miniqmc.lattice import Cell, min_image_disp
from miniqmc.oracle import brute_local_kinetic, brute_nonlocal_pp
from miniqmc.particles import ParticleSet
from miniqmc.presets import plane_wave_system
from miniqmc.splines import functor_fit
from miniqmc.spo import PlaneWaveSPOSet
from miniqmc.wavefunction import WaveFunctionConfig

from conftest import build_psi, make_engine

CELL = Cell.cubic(10.0)


def _fresh(e, psi):
    e.update()
    return psi.evaluate_derivatives(e)


def test_icosahedral_rule():
    pts, w = icosahedral_rule()
    assert pts.shape == (12, 3)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, rtol=1e-15)
    np.testing.assert_allclose(w @ pts, 0.0, atol=1e-15)


def test_kinetic_two_plane_waves(rng):
    system = plane_wave_system(2)
    e, psi = build_psi(system.wf_config, rng.uniform(0, 10, (2, 3)), system.cell)
    G, L = _fresh(e, psi)
    assert kinetic(G, L) == pytest.approx((2 * np.pi / 10) ** 2, rel=1e-12)
    assert (2 * np.pi / 10) ** 2 == pytest.approx(0.394784, abs=1e-6)


def test_kinetic_constant_wavefunction(rng):
    spo = PlaneWaveSPOSet.commensurate(CELL, [(0, 0, 0)])
    e, psi = build_psi(WaveFunctionConfig(spo, 2), rng.uniform(0, 10, (2, 3)), CELL)
    assert kinetic(*_fresh(e, psi)) == 0.0


def test_kinetic_vs_finite_differences(tiny):
    eng = make_engine(tiny, seed=31)
    G, L = _fresh(eng.electrons, eng.psi)
    fd = brute_local_kinetic(eng.electrons.R, tiny.ions, tiny.wf_config)
    assert kinetic(G, L) == pytest.approx(fd, rel=1e-5)


def _electrons(pos, cell=CELL):
    from miniqmc.distance_tables import ABTable, PaddedAATable
    e = ParticleSet("e", pos, cell)
    e.add_table(PaddedAATable(e))
    return e


def test_coulomb_pair():
    e = _electrons([(1, 1, 1), (3, 1, 1)])
    e.update()
    assert coulomb_ee(e) == pytest.approx(0.5, rel=1e-15)


def test_coulomb_electron_ion():
    from miniqmc.distance_tables import ABTable
    ions = ParticleSet("ion", [(1, 1, 1)], CELL, charges=[4.0]).freeze()
    e = _electrons([(1, 3, 1)])
    e.add_table(ABTable(e, ions))
    e.update()
    assert coulomb_ei(e, ions) == pytest.approx(-2.0, rel=1e-15)


def test_coulomb_n20_vs_double_loop(rng):
    from miniqmc.distance_tables import ABTable
    pos = rng.uniform(0, 10, (20, 3))
    ion_pos = rng.uniform(0, 10, (3, 3))
    ions = ParticleSet("ion", ion_pos, CELL, species=[0, 1, 1], charges=[2.0, 5.0]).freeze()
    e = _electrons(pos)
    e.add_table(ABTable(e, ions))
    e.update()
    ee = sum(1.0 / min_image_disp(CELL, pos[i], pos[j])[0]
             for i in range(20) for j in range(i + 1, 20))
    ei = -sum(z / min_image_disp(CELL, pos[i], ion_pos[I])[0]
              for i in range(20) for I, z in enumerate((2.0, 5.0, 5.0)))
    assert coulomb_ee(e) == pytest.approx(ee, rel=1e-12)
    assert coulomb_ei(e, ions) == pytest.approx(ei, rel=1e-12)
    perm = rng.permutation(20)
    e2 = _electrons(pos[perm])
    e2.update()
    assert coulomb_ee(e2) == pytest.approx(coulomb_ee(e), rel=1e-13)


def test_coincident_electrons_diverge():
    e = _electrons([(1, 1, 1), (1, 1, 1)])
    e.update()
    with pytest.raises(DivergenceError):
        coulomb_ee(e)


def _constant_psi_with_ion(v, r_cut=2.0):
    ions = ParticleSet("ion", [(5.0, 5.0, 5.0)], CELL, charges=[1.0]).freeze()
    spo = PlaneWaveSPOSet.commensurate(CELL, [(0, 0, 0)])
    pos = [(5.5, 5.2, 4.9), (5.0, 4.0, 5.3)]
    e, psi = build_psi(WaveFunctionConfig(spo, 2), pos, CELL, ions)
    pp = NonlocalPP({0: PPChannel(r_cut, v)})
    return e, psi, ions, pp


class _Const:
    def __init__(self, c):
        self.c = c

    def evaluate(self, r):
        return self.c


def test_nlpp_constant_s_channel():
    e, psi, ions, pp = _constant_psi_with_ion([_Const(0.7), _Const(0.0)])
    e.update()
    # both electrons lie inside r_cut = 2
    got = nonlocal_pp(psi, e, ions, pp, np.random.default_rng(0))
    assert got == pytest.approx(2 * 0.7, rel=1e-12)


def test_nlpp_p_channel_cancels():
    e, psi, ions, pp = _constant_psi_with_ion([_Const(0.0), _Const(1.3)])
    e.update()
    assert nonlocal_pp(psi, e, ions, pp, np.random.default_rng(1)) == pytest.approx(0.0, abs=1e-12)


def _rotations(seed, count):
    rng = np.random.default_rng(seed)
    return [Rotation.random(random_state=rng).as_matrix() for _ in range(count)]


def test_nlpp_vs_brute_oracle(tiny):
    eng = make_engine(tiny, seed=32)
    e, psi = eng.electrons, eng.psi
    e.update()
    pp = tiny.hamiltonian.pp
    got = nonlocal_pp(psi, e, tiny.ions, pp, np.random.default_rng(33))
    expected = brute_nonlocal_pp(e.R, tiny.ions, tiny.wf_config, pp, _rotations(33, 14 * 2))
    assert expected != 0.0
    assert got == pytest.approx(expected, rel=1e-8)


def _snapshot(eng):
    buf = np.zeros(eng.psi.buffer_size)
    eng.psi.copy_to_buffer(buf)
    tables = [np.array(t.dist, copy=True) for t in eng.electrons.tables if hasattr(t, "dist")]
    return buf, eng.electrons.R.copy(), tables


def test_local_energy_leaves_state_untouched(tiny):
    eng = make_engine(tiny, seed=34)
    e, psi = eng.electrons, eng.psi
    _fresh(e, psi)
    before = _snapshot(eng)
    b1 = eng.hamiltonian.local_energy(psi, e, tiny.ions, np.random.default_rng(5))
    after = _snapshot(eng)
    np.testing.assert_array_equal(before[0], after[0])
    np.testing.assert_array_equal(before[1], after[1])
    for x, y in zip(before[2], after[2]):
        np.testing.assert_array_equal(x, y)
    b2 = eng.hamiltonian.local_energy(psi, e, tiny.ions, np.random.default_rng(5))
    assert b1.total == b2.total
    assert b1.total == b1.kinetic + b1.coulomb_ee + b1.coulomb_ei + b1.nonlocal_
    assert b1.nonlocal_ != 0.0


def test_exact_eigenstate_energy_is_constant(planewave):
    rng = np.random.default_rng(35)
    exact = planewave.meta["exact_energy"]
    values = []
    for _ in range(100):
        e, psi = build_psi(planewave.wf_config, rng.uniform(0, 10, (4, 3)), planewave.cell)
        _fresh(e, psi)
        values.append(planewave.hamiltonian.local_energy(psi, e).total)
    assert np.std(values) < 1e-10 * exact
    assert np.mean(values) == pytest.approx(exact, rel=1e-10)
