from __future__ import annotations

import numpy as np
import pytest

from j1j2.lattice import BondCounting, CouplingConfig, LatticeSpec, SpinConvention, build_hamiltonian, chain_2site
from j1j2.oracle import ground_state, is_su2_symmetric
from j1j2.pauli import PauliSum

HALF = CouplingConfig(spin_convention=SpinConvention.HALF, bond_counting=BondCounting.UNORDERED_ONCE)


def test_two_site_singlet():
    sol = ground_state(build_hamiltonian(chain_2site(), HALF))
    assert sol.energy == pytest.approx(-0.75)
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    assert abs(np.vdot(singlet, sol.state)) == pytest.approx(1.0)
    assert sol.gap == pytest.approx(1.0)


def test_dense_and_iterative_agree_on_3x3():
    h = build_hamiltonian(LatticeSpec(3, 3), CouplingConfig(j2=0.5))
    d = ground_state(h, mode="dense")
    it = ground_state(h, mode="iterative", tol=1e-10)
    assert d.energy == pytest.approx(it.energy, abs=1e-8)
    assert d.energy == pytest.approx(-27.8760, abs=1e-3)


def test_matches_full_diagonalization(rng):
    h = build_hamiltonian(LatticeSpec(2, 3), CouplingConfig(j2=0.3))
    ref = np.linalg.eigvalsh(h.to_dense())[0]
    sol = ground_state(h)
    assert sol.energy == pytest.approx(ref, abs=1e-10)
    resid = h.to_dense() @ sol.state - sol.energy * sol.state
    assert np.linalg.norm(resid) < 1e-8


def test_non_su2_hamiltonian_uses_full_space():
    h = PauliSum.from_labels({"ZI": 1.0, "IZ": 0.5, "XX": 0.2})
    assert not is_su2_symmetric(h)
    assert ground_state(h).energy == pytest.approx(np.linalg.eigvalsh(h.to_dense())[0])


def test_rejects_non_hermitian():
    with pytest.raises(ValueError):
        ground_state(PauliSum.from_labels({"X": 1j}))


@pytest.mark.slow
def test_4x4_half_convention(exact44):
    h = build_hamiltonian(LatticeSpec(4, 4), HALF)
    assert ground_state(h).energy / 16 == pytest.approx(-0.7017802, abs=1e-6)


@pytest.mark.slow
@pytest.mark.parametrize("ratio,energy", [(1.0, -99.0), (0.56, -67.0)])
def test_4x4_default_scale(exact44, ratio, energy):
    assert exact44.energy(ratio) == pytest.approx(energy, abs=1.0)
