"""Exact ground states: dense eigendecomposition or Lanczos with full reorthogonalization."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pauli import PauliSum, apply

DENSE_MAX = 10
ITERATIVE_MAX = 16
DEGENERACY_TOL = 1e-8


@dataclass
class GroundSolution:
    energy: float
    state: np.ndarray
    gap: float
    degenerate: bool
    residual: float = 0.0
    iterations: int = 0
    mode: str = "dense"


class NotConverged(RuntimeError):
    pass


def _spin_ops(n: int):
    out = []
    for letter in "XYZ":
        out.append(PauliSum.from_labels({"I" * (n - k - 1) + letter + "I" * k: 1.0 for k in range(n)}, n))
    return out


def is_su2_symmetric(h: PauliSum) -> bool:
    return all(h.commutator(s).is_zero() for s in _spin_ops(h.n))


def min_magnetization_mask(n: int) -> np.ndarray:
    """Basis states with the fewest-|M| magnetization (floor(n/2) up spins)."""
    idx = np.arange(1 << n, dtype=np.uint64)
    return np.bitwise_count(idx) == n // 2


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v) > np.abs(v).max() * (1 - 1e-9)))
    return v * (abs(v[k]) / v[k])


def _dense(h: PauliSum, mask) -> GroundSolution:
    w, v = np.linalg.eigh(h.to_dense())
    e0 = w[0]
    deg = np.flatnonzero(w < e0 + DEGENERACY_TOL)
    gap = float(w[deg[-1] + 1] - e0) if deg[-1] + 1 < w.size else math.inf
    if len(deg) > 1:
        gap = 0.0
    sub = v[:, deg]
    if len(deg) > 1 and mask is not None:
        # representative with the largest weight in the minimal-|M| sector
        _, _, vh = np.linalg.svd(sub[mask], full_matrices=False)
        psi = sub @ vh[0].conj()
    else:
        psi = sub[:, 0]
    psi = _canonical_phase(psi / np.linalg.norm(psi))
    res = float(np.linalg.norm(apply(h, psi) - e0 * psi))
    return GroundSolution(float(e0), psi, gap, gap < DEGENERACY_TOL, res, 0, "dense")


def lanczos(matvec, v0: np.ndarray, tol: float = 1e-8, maxiter: int = 400, deflate=None, check_every: int = 5):
    """Lowest Ritz pair via Lanczos with full reorthogonalization.

    ``deflate`` holds orthonormal vectors projected out of every Krylov vector.
    Returns (value, vector, residual norm, iterations).
    """
    defl = [] if deflate is None else list(deflate)

    def project(w):
        for d in defl:
            w = w - np.vdot(d, w) * d
        return w

    v = project(v0.astype(complex))
    v /= np.linalg.norm(v)
    basis = [v]
    alphas, betas = [], []
    best = None
    for it in range(1, maxiter + 1):
        w = project(matvec(basis[-1]))
        a = np.vdot(basis[-1], w).real
        alphas.append(a)
        V = np.array(basis)
        for _ in range(2):
            w = w - V.T @ (V.conj() @ w)
        b = float(np.linalg.norm(w))
        if it % check_every == 0 or b < 1e-13 or it == maxiter:
            T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
            vals, vecs = np.linalg.eigh(T)
            y = vecs[:, 0]
            res = abs(b * y[-1])
            best = (vals[0], y, res, it)
            if res < tol or b < 1e-13:
                break
        if b < 1e-13:
            break
        betas.append(b)
        basis.append(w / b)
    val, y, res, it = best
    vec = np.array(basis[: y.size]).T @ y
    vec /= np.linalg.norm(vec)
    return float(val), vec, float(res), it


def _iterative(h: PauliSum, mask, tol, maxiter, seed) -> GroundSolution:
    n = h.n
    rng = np.random.default_rng(seed)
    dim = 1 << n
    if mask is None:
        mask = np.ones(dim, dtype=bool)

    def mv(v):
        out = apply(h, v)
        out[~mask] = 0.0
        return out

    v0 = np.zeros(dim, dtype=complex)
    v0[mask] = rng.normal(size=int(mask.sum()))
    scale = max(1.0, h.one_norm())
    e0, psi, res, its = lanczos(mv, v0, tol * scale, maxiter)
    if res > tol * scale:
        raise NotConverged(f"Lanczos residual {res:.3e} after {its} iterations")
    v1 = np.zeros(dim, dtype=complex)
    v1[mask] = rng.normal(size=int(mask.sum()))
    e1, _, res1, _ = lanczos(mv, v1, tol * scale, maxiter, deflate=[psi])
    gap = max(e1 - e0, 0.0)
    psi = _canonical_phase(psi)
    res = float(np.linalg.norm(apply(h, psi) - e0 * psi))
    return GroundSolution(e0, psi, gap, gap < DEGENERACY_TOL, res, its, "iterative")


def ground_state(h: PauliSum, mode: str = "auto", tol: float = 1e-8, maxiter: int = 400, seed: int = 0) -> GroundSolution:
    """Lowest eigenpair of h with the gap to the next level.

    SU(2)-symmetric Hamiltonians are solved inside the minimal-|M| sector,
    which holds every multiplet; an odd site count then forces a Kramers-like
    pair (M = +-1/2) and the gap is reported as zero.
    """
    if not h.is_hermitian():
        raise ValueError("ground_state needs a Hermitian Pauli sum")
    if mode == "auto":
        mode = "dense" if h.n <= DENSE_MAX else "iterative"
    if mode == "dense" and h.n > 12:
        raise ValueError("dense mode limited to 12 qubits")
    if mode == "iterative" and h.n > ITERATIVE_MAX:
        raise ValueError(f"iterative mode limited to {ITERATIVE_MAX} qubits")
    su2 = h.n > 1 and is_su2_symmetric(h)
    mask = min_magnetization_mask(h.n) if su2 else None
    if mode == "dense":
        sol = _dense(h, mask)
    else:
        sol = _iterative(h, mask, tol, maxiter, seed)
    if su2 and h.n % 2 == 1:
        sol.gap, sol.degenerate = 0.0, True
    return sol


def exact_observables(sol: GroundSolution, spec, coupling, h: PauliSum | None = None, calibration=None):
    from .observables import evaluate_all
    from .lattice import build_hamiltonian

    if h is None:
        h = build_hamiltonian(spec, coupling)
    return evaluate_all(sol.state, spec, h, calibration)
