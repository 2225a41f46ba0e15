"""Krylov ground-state estimation from Chebyshev moments or real-time evolution.

Two routes produce the Chebyshev moments <T_k(H_n)>: a three-term recurrence on
statevectors, and a qubitized walk on a system + ancilla register built from a
linear combination of Pauli strings. Both feed the same generalized eigensolver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import jv

from .pauli import PauliSum, apply

EPS_LADDER = tuple(10.0**k for k in range(-12, -2))


@dataclass
class NormalizedHamiltonian:
    alpha: PauliSum
    scale: float

    @classmethod
    def from_pauli(cls, h: PauliSum) -> "NormalizedHamiltonian":
        if not h.is_hermitian():
            raise ValueError("Hamiltonian must have real coefficients")
        scale = h.one_norm()
        if scale == 0:
            raise ValueError("zero Hamiltonian")
        return cls(h * (1.0 / scale), scale)

    @property
    def n(self) -> int:
        return self.alpha.n


@dataclass
class KrylovMatrices:
    Hk: np.ndarray
    Sk: np.ndarray
    basis_kind: str = "chebyshev"
    scale: float = 1.0

    @property
    def d(self) -> int:
        return self.Sk.shape[0]


@dataclass
class GevpResult:
    energy: float
    coeffs: np.ndarray
    eps_used: float
    cond: float
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))


class GevpFailure(np.linalg.LinAlgError):
    pass


def chebyshev_vectors(hn: NormalizedHamiltonian, psi0: np.ndarray, kmax: int) -> list[np.ndarray]:
    """|t_k> = T_k(H_n)|psi0> for k = 0..kmax by the three-term recurrence."""
    vecs = [np.asarray(psi0, dtype=complex)]
    if kmax >= 1:
        vecs.append(apply(hn.alpha, vecs[0]))
    for _ in range(2, kmax + 1):
        vecs.append(2 * apply(hn.alpha, vecs[-1]) - vecs[-2])
    return vecs


def chebyshev_moments_matfree(hn: NormalizedHamiltonian, psi0: np.ndarray, kmax: int) -> np.ndarray:
    psi0 = np.asarray(psi0, dtype=complex)
    vals = np.array([np.vdot(psi0, v) for v in chebyshev_vectors(hn, psi0, kmax)])
    if np.max(np.abs(vals.imag), initial=0) > 1e-9:
        raise ValueError("complex Chebyshev moment; Hamiltonian not Hermitian?")
    return vals.real


def _apply_string(x: int, z: int, psi: np.ndarray) -> np.ndarray:
    """i^|x&z| X^x Z^z applied to psi."""
    idx = np.arange(psi.size, dtype=np.int64)
    src = idx ^ x
    sign = 1 - 2 * (np.bitwise_count((src & z).astype(np.uint64)) & 1).astype(float)
    phase = 1j ** (bin(x & z).count("1") % 4)
    return phase * sign * psi[src]


@dataclass
class WalkRegister:
    """Block encoding of H_n = sum_i alpha_i s_i P_i on a ancilla + n system qubits.

    Register states are (2^a, 2^n) arrays: row = ancilla index, column = system
    index, i.e. the ancilla occupies the high bits of the flat index.
    """

    n: int
    a: int
    G: np.ndarray
    terms: list  # (x, z, sign) per ancilla row

    @property
    def g(self) -> np.ndarray:
        return self.G[:, 0]

    def prepare(self, psi0: np.ndarray) -> np.ndarray:
        return np.outer(self.g, psi0)

    def select(self, phi: np.ndarray) -> np.ndarray:
        out = phi.copy()
        for i, (x, z, s) in enumerate(self.terms):
            out[i] = s * _apply_string(x, z, phi[i])
        return out

    def reflect(self, phi: np.ndarray) -> np.ndarray:
        return 2 * np.outer(self.g, self.g.conj() @ phi) - phi

    def block_encoding(self, phi: np.ndarray) -> np.ndarray:
        """U = (G^dag x I) SELECT (G x I); its ancilla-|0> block is H_n."""
        return self.G.conj().T @ self.select(self.G @ phi)

    def block_matrix(self) -> np.ndarray:
        """Dense ancilla-0 block of U (small systems only)."""
        dim = 1 << self.n
        out = np.zeros((dim, dim), dtype=complex)
        for b in range(dim):
            phi = np.zeros((1 << self.a, dim), dtype=complex)
            phi[0, b] = 1
            out[:, b] = self.block_encoding(phi)[0]
        return out


def build_walk(hn: NormalizedHamiltonian, max_ancillas: int = 12) -> WalkRegister:
    t = hn.alpha.num_terms
    a = max(1, math.ceil(math.log2(t))) if t > 1 else 1
    if a > max_ancillas:
        raise ValueError(f"{t} terms need {a} ancillas, more than {max_ancillas}")
    coeffs = hn.alpha.coeffs.real
    weights = np.zeros(1 << a)
    weights[:t] = np.sqrt(np.abs(coeffs))
    weights /= np.linalg.norm(weights)
    # complete the prepare column to a unitary with a QR factorisation
    m = np.eye(1 << a)
    m[:, 0] = weights
    q, r = np.linalg.qr(m)
    q[:, 0] *= np.sign(r[0, 0])
    terms = [(int(x), int(z), float(np.sign(c))) for x, z, c in zip(hn.alpha.x, hn.alpha.z, coeffs)]
    return WalkRegister(hn.n, a, q.astype(complex), terms)


def _hadamard_sample(value: float, shots: int, rng) -> tuple[float, float]:
    p0 = min(max((1 + value) / 2, 0.0), 1.0)
    k = rng.binomial(shots, p0)
    est = 2 * k / shots - 1
    return est, math.sqrt(max(1 - est * est, 1e-12) / shots)


def chebyshev_moments_walk(w: WalkRegister, psi0: np.ndarray, kmax: int, shots: int | None = None,
                           seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Moments from the walk (R U)^m (|G> x psi0); returns (moments, standard errors).

    Even k = 2m reads <R> and odd k = 2m + 1 reads <U> in the m-th iterate, with
    U = SELECT and R the reflection about |G>. Shot mode replaces each exact
    expectation by a sampled Hadamard test.
    """
    rng = np.random.default_rng(seed)
    phi = w.prepare(np.asarray(psi0, dtype=complex))
    mom = np.zeros(kmax + 1)
    err = np.zeros(kmax + 1)
    for k in range(kmax + 1):
        if k % 2 == 0:
            val = np.vdot(phi, w.reflect(phi)).real
        else:
            val = np.vdot(phi, w.select(phi)).real
            phi = w.reflect(w.select(phi))
        if shots:
            mom[k], err[k] = _hadamard_sample(val, shots, rng)
        else:
            mom[k] = val
    return mom, err


def assemble(moments, d: int) -> KrylovMatrices:
    t = np.asarray(moments, dtype=float)
    if t.size < 2 * d:
        raise ValueError(f"need {2 * d} moments for d = {d}, got {t.size}")
    S = np.zeros((d, d))
    H = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            S[i, j] = 0.5 * (t[i + j] + t[abs(i - j)])
            H[i, j] = 0.25 * (t[i + j + 1] + t[abs(i + j - 1)] + t[abs(i - j + 1)] + t[abs(i - j - 1)])
    return KrylovMatrices(H, S, "chebyshev")


def solve_gevp(km: KrylovMatrices, eps: float | None = None, eps_cap: float = 1e-3, scale: float | None = None,
               ladder=EPS_LADDER) -> GevpResult:
    """Smallest eigenpair of H c = lambda (S + eps I) c through a Cholesky whitening.

    Without an explicit eps no shift is used when S is well conditioned
    (smallest eigenvalue above ladder[0] times the largest); otherwise the shift
    climbs the ladder 1e-12, 1e-11, ... until S + eps I factorises, stopping at
    eps_cap.
    """
    H = np.asarray(km.Hk)
    S = np.asarray(km.Sk)
    scale = km.scale if scale is None else scale
    d = S.shape[0]
    sv = np.linalg.eigvalsh(0.5 * (S + S.conj().T))
    if eps is not None:
        steps = [eps]
    else:
        steps = [e for e in ladder if e < eps_cap] + [eps_cap]
        if sv[0] > ladder[0] * abs(sv[-1]):
            steps = [0.0] + steps
    for e in steps:
        try:
            L = np.linalg.cholesky(S + e * np.eye(d))
        except np.linalg.LinAlgError:
            continue
        Li = np.linalg.inv(L)
        A = Li @ H @ Li.conj().T
        A = 0.5 * (A + A.conj().T)
        vals, vecs = np.linalg.eigh(A)
        c = Li.conj().T @ vecs[:, 0]
        cond = float(abs(sv[-1]) / max(abs(sv[0]), 1e-300))
        return GevpResult(float(vals[0] * scale), c, float(e), cond, vals * scale)
    raise GevpFailure(f"S + eps I not positive definite for eps up to {steps[-1]}")


def krylov_ground_vector(c, basis_states) -> np.ndarray:
    c = np.asarray(c)
    v = np.tensordot(c, np.asarray(basis_states), axes=1)
    nrm = np.linalg.norm(v)
    if nrm < 1e-8 * max(np.linalg.norm(c), 1e-300):
        raise ValueError(f"Krylov combination has norm {nrm:.2e} for |c| = {np.linalg.norm(c):.2e}")
    return v / nrm


def krylov_observable(state: np.ndarray, obs) -> float:
    """obs is a PauliSum or a callable on statevectors."""
    if isinstance(obs, PauliSum):
        return float(np.vdot(state, apply(obs, state)).real)
    return float(obs(state))


def evolve(h: PauliSum, psi: np.ndarray, t: float, tol: float = 1e-14) -> np.ndarray:
    """exp(-i t H) psi through a Chebyshev-Bessel expansion."""
    hn = NormalizedHamiltonian.from_pauli(h)
    x = t * hn.scale
    if x == 0:
        return np.array(psi, dtype=complex)
    kmax = int(abs(x) + 10 * math.log10(1 / tol) + 10)
    coef = jv(np.arange(kmax + 1), x)
    while kmax > 1 and abs(coef[kmax]) < tol * 1e-3:
        kmax -= 1
    out = coef[0] * psi
    prev, cur = np.asarray(psi, dtype=complex), apply(hn.alpha, psi)
    out = out + 2 * (-1j) * coef[1] * cur
    for k in range(2, kmax + 1):
        prev, cur = cur, 2 * apply(hn.alpha, cur) - prev
        out = out + 2 * (-1j) ** k * coef[k] * cur
    return out


def realtime_krylov(h: PauliSum, psi0: np.ndarray, dt: float, d: int) -> tuple[KrylovMatrices, list]:
    if dt <= 0:
        raise ValueError("dt must be positive")
    basis = [np.asarray(psi0, dtype=complex)]
    for _ in range(1, d):
        basis.append(evolve(h, basis[-1], dt))
    B = np.array(basis)
    HB = np.array([apply(h, v) for v in basis])
    S = B.conj() @ B.T
    H = B.conj() @ HB.T
    return KrylovMatrices(0.5 * (H + H.conj().T), 0.5 * (S + S.conj().T), "realtime", 1.0), basis


@dataclass
class KrylovRun:
    energy: float
    state: np.ndarray
    eps_used: float
    cond: float
    d: int
    basis_kind: str
    moments: np.ndarray | None = None


def qlanczos(h: PauliSum, psi0: np.ndarray, d: int, basis: str = "chebyshev", eps: float | None = None,
             eps_cap: float = 1e-3, dt: float | None = None, path: str = "matfree") -> KrylovRun:
    """Krylov estimate with the ground vector rebuilt from the stored basis."""
    psi0 = np.asarray(psi0, dtype=complex)
    hn = NormalizedHamiltonian.from_pauli(h)
    if basis == "chebyshev":
        vecs = chebyshev_vectors(hn, psi0, max(2 * d - 1, 1))
        if path == "walk":
            mom, _ = chebyshev_moments_walk(build_walk(hn), psi0, 2 * d - 1)
        else:
            mom = np.array([np.vdot(psi0, v).real for v in vecs])
        km = assemble(mom, d)
        km.scale = hn.scale
        res = solve_gevp(km, eps, eps_cap)
        state = krylov_ground_vector(res.coeffs, vecs[:d])
        return KrylovRun(res.energy, state, res.eps_used, res.cond, d, basis, mom)
    if basis == "realtime":
        dt = dt if dt is not None else math.pi / (2 * hn.scale)
        km, states = realtime_krylov(h, psi0, dt, d)
        res = solve_gevp(km, eps, eps_cap)
        return KrylovRun(res.energy, krylov_ground_vector(res.coeffs, states), res.eps_used, res.cond, d, basis)
    raise ValueError(f"unknown basis {basis}")
