import numpy as np
import pytest

from miniqmc.engine import Engine
from miniqmc.presets import build_system, plane_wave_system


@pytest.fixture(scope="session")
def tiny():
    return build_system("tiny")


@pytest.fixture(scope="session")
def tiny_nopp():
    return build_system("tiny", pp=False)


@pytest.fixture(scope="session")
def planewave():
    return plane_wave_system(4)


def make_engine(system, variant="opt", precision="double", policy="on_the_fly", seed=0):
    eng = Engine(system, variant, precision, policy)
    rng = np.random.default_rng(seed)
    eng.set_positions(system.initial_electrons(rng))
    return eng


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def build_psi(config, R, cell, ions=None, variant="opt", precision="double"):
    """Electrons with tables plus a trial wavefunction, outside any preset."""
    from miniqmc.distance_tables import ABTable, PackedAATable, PaddedAATable
    from miniqmc.particles import ParticleSet
    from miniqmc.wavefunction import PRECISIONS, TrialWaveFunction

    e = ParticleSet("e", R, cell, dtype=PRECISIONS[precision])
    e.add_table(PackedAATable(e) if variant == "ref" else PaddedAATable(e))
    if ions is not None and ions.n:
        e.add_table(ABTable(e, ions))
    psi = TrialWaveFunction(config, e, ions, variant, precision)
    psi.recompute_from_scratch(e)
    return e, psi


def random_move(e, rng, k=None, sigma=0.3):
    k = int(rng.integers(e.n)) if k is None else k
    return k, e.R[k] + rng.normal(scale=sigma, size=3)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
