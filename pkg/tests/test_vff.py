from __future__ import annotations

import math

import numpy as np
import pytest

from j1j2.krylov import NormalizedHamiltonian
from j1j2.pauli import PauliSum
from j1j2.simulator import Circuit, basis_state
from j1j2.vff import (
    VffModel, chebyshev_targets, fast_forward, fast_forward_matrix, hadamard_test, train_vff, vff_cost,
)
from conftest import random_state


def test_cost_zero_for_exact_model():
    hn = NormalizedHamiltonian.from_pauli(PauliSum.from_labels({"IZ": 1.0}))
    psi0 = np.ones(4, dtype=complex) / 2
    targets, _ = chebyshev_targets(hn, psi0, 3)
    model = VffModel(2, 1)
    # T_k(Z) = diag(1, cos k pi): A = diag(1, -1) up to phase via RZ(pi)
    model.params[model.num_w:] = [math.pi, 0, 0]
    assert vff_cost(model, targets, psi0) < 1e-12


def test_cost_bounds(rng):
    hn = NormalizedHamiltonian.from_pauli(PauliSum.from_labels({"XX": 1.0, "ZI": 0.3}))
    psi0 = random_state(2, rng)
    targets, _ = chebyshev_targets(hn, psi0, 4)
    model = VffModel(2, 2, rng.normal(size=VffModel(2, 2).params.size))
    assert 0.0 <= vff_cost(model, targets, psi0) <= 1.0


def test_diagonal_hamiltonian_trains_exactly():
    hn = NormalizedHamiltonian.from_pauli(PauliSum.from_labels({"IZ": 1.0}))
    psi0 = np.ones(4, dtype=complex) / 2
    _, rep = train_vff(hn, psi0, layers=1, n_powers=3, max_iters=60, seed=0)
    assert rep.cost < 1e-6


def test_single_x_trains():
    hn = NormalizedHamiltonian.from_pauli(PauliSum.from_labels({"X": 1.0}))
    psi0 = np.array([1, 0], dtype=complex)
    _, rep = train_vff(hn, psi0, layers=1, n_powers=3, max_iters=60, seed=0)
    assert rep.cost < 1e-4


def test_fast_forward_structure(rng):
    m = VffModel(3, 2, rng.normal(size=VffModel(3, 2).params.size))
    u1 = fast_forward_matrix(m, 1)
    assert np.allclose(u1.conj().T @ u1, np.eye(8), atol=1e-10)
    assert np.allclose(fast_forward_matrix(m, 0), np.eye(8), atol=1e-10)
    assert np.allclose(fast_forward_matrix(m, 2), u1 @ u1, atol=1e-10)
    assert len(fast_forward(m, 1)) == len(fast_forward(m, 50))


def test_powers_match_circuit(rng):
    m = VffModel(3, 1, rng.normal(size=VffModel(3, 1).params.size))
    psi = random_state(3, rng)
    for k, v in zip((1, 3), m.powers(psi, (1, 3))):
        assert np.allclose(v, fast_forward_matrix(m, k) @ psi, atol=1e-10)


def test_json_roundtrip(rng):
    m = VffModel(2, 2, rng.normal(size=VffModel(2, 2).params.size), {"cost": 0.1})
    back = VffModel.from_json(m.to_json())
    assert np.allclose(back.params, m.params) and back.meta == m.meta


def _prep(n, angles):
    c = Circuit(n)
    for q, (a, b) in enumerate(angles):
        c.add("RY", q, a).add("RZ", q, b)
    if n > 1:
        c.add("CX", (0, 1))
    return c


def test_hadamard_test_identities():
    a = _prep(2, [(0.3, 0.1), (1.2, -0.4)])
    est, err = hadamard_test(a, a, 4000, seed=1)
    assert abs(est.real - 1) <= 4 * err.real + 1e-12 and abs(est.imag) <= 4 * err.imag
    zero = Circuit(1)
    one = Circuit(1).add("X", 0)
    est, err = hadamard_test(zero, one, 4000, seed=2)
    assert abs(est.real) <= 4 * err.real and abs(est.imag) <= 4 * err.imag


def test_hadamard_test_random_pair(rng):
    a = _prep(2, rng.uniform(0, math.pi, (2, 2)))
    b = _prep(2, rng.uniform(0, math.pi, (2, 2)))
    from j1j2.simulator import run
    exact = np.vdot(run(a), run(b))
    est, err = hadamard_test(a, b, 10**6, seed=3)
    assert abs(est.real - exact.real) <= 4 * err.real
    assert abs(est.imag - exact.imag) <= 4 * err.imag


def test_invalid_param_count():
    with pytest.raises(ValueError):
        VffModel(2, 1, np.zeros(3))
