from __future__ import annotations

import math

import numpy as np
import pytest

from j1j2.lattice import CouplingConfig, LatticeSpec, build_hamiltonian
from j1j2.moments import (
    CumulantSet, MomentSet, cumulants, exact_moments, ground_estimate, hamiltonian_moments, inclusion_probabilities,
    infimum_estimate, observable_via_lambda,
)
from j1j2.oracle import ground_state
from j1j2.pauli import PauliSum
from j1j2.simulator import Circuit
from conftest import random_state

H33 = build_hamiltonian(LatticeSpec(3, 3), CouplingConfig(j2=0.5))
H6 = build_hamiltonian(LatticeSpec(2, 3), CouplingConfig(j2=0.5))


def test_eigenstate_moments_and_cumulants():
    sol = ground_state(H6)
    ms = hamiltonian_moments(H6, sol.state)
    for k in range(1, 5):
        assert ms[k] == pytest.approx(sol.energy**k, rel=1e-9)
    c = cumulants(ms)
    assert c[1] == pytest.approx(sol.energy)
    assert max(abs(c[k]) for k in (2, 3, 4)) < 1e-6 * abs(sol.energy) ** 4
    est = infimum_estimate(c, tol=1e-9)
    assert est.valid and est.energy == pytest.approx(sol.energy)


def test_full_fraction_equals_unsampled(rng):
    psi = random_state(6, rng)
    a = hamiltonian_moments(H6, psi, fraction=1.0)
    b = exact_moments(H6, psi)
    assert np.allclose(a.values, b.values, rtol=1e-10)


def test_first_cumulants():
    ms = MomentSet([2.0, 7.0, 1.0, 3.0])
    c = cumulants(ms)
    assert c[1] == 2.0
    assert c[2] == pytest.approx(7.0 - 4.0)
    assert c[3] == pytest.approx(1.0 - 3 * 2 * 7 + 2 * 8)


def test_zero_variance_returns_c1():
    est = infimum_estimate(CumulantSet([-3.0, 0.0, 0.0, 0.0]))
    assert est.valid and est.energy == -3.0


def test_two_level_mixture():
    e0, e1 = -2.0, 1.0
    for p in (0.05, 0.1, 0.2, 0.29):
        ms = MomentSet([(1 - p) * e0**k + p * e1**k for k in range(1, 5)])
        c = cumulants(ms)
        est = infimum_estimate(c)
        assert abs(est.energy - e0) < abs(c[1] - e0)


def test_inclusion_probabilities():
    pi = inclusion_probabilities([10, 1, 1, 1, 1], 2)
    assert pi[0] == 1.0
    assert pi.sum() == pytest.approx(2.0)


def test_horvitz_thompson_unbiased(rng):
    psi = random_state(6, rng)
    exact = exact_moments(H6, psi, 2)
    draws = np.array([hamiltonian_moments(H6, psi, 2, 0.3, seed=s).values for s in range(100)])
    sigma = hamiltonian_moments(H6, psi, 2, 0.3, seed=0).sigma
    for k in range(2):
        assert abs(draws[:, k].mean() - exact.values[k]) <= 3 * sigma[k] / math.sqrt(100)


def test_truncation_variant_is_deterministic(rng):
    psi = random_state(6, rng)
    a = hamiltonian_moments(H6, psi, 2, 0.5, seed=1, reweight=False)
    b = hamiltonian_moments(H6, psi, 2, 0.5, seed=2, reweight=False)
    assert a.values == b.values


def test_errors():
    psi = np.eye(64)[0]
    with pytest.raises(ValueError):
        hamiltonian_moments(H6, psi, order=5)
    with pytest.raises(ValueError):
        hamiltonian_moments(H6, psi, fraction=0.0)


def test_shots_mode_close_to_exact():
    c = Circuit(2).add("X", 0).add("H", 0).add("CX", (0, 1))
    h = PauliSum.from_labels({"XX": 1.0, "ZI": 0.5})
    from j1j2.simulator import run
    exact = exact_moments(h, run(c), 2)
    ms = hamiltonian_moments(h, circuit=c, order=2, mode="shots", shots=20000, seed=1)
    for k in range(2):
        assert abs(ms.values[k] - exact.values[k]) <= 5 * ms.sigma[k] + 1e-9


def test_lambda_shift_identity_and_eigenstate():
    sol = ground_state(H6)
    ident = PauliSum.identity(H6.n)
    r = observable_via_lambda(H6, ident, sol.state)
    assert r.valid and r.value == pytest.approx(1.0, abs=1e-6)
    o = build_hamiltonian(LatticeSpec(2, 3), CouplingConfig(j2=0.0))
    r = observable_via_lambda(H6, o, sol.state)
    assert r.value == pytest.approx(r.direct, abs=1e-4)


def test_lambda_shift_of_h_itself():
    sol = ground_state(H6)
    r = observable_via_lambda(H6, H6, sol.state)
    assert r.value == pytest.approx(sol.energy, rel=1e-4)
