"""Hamiltonian moments, Lanczos cumulants and the quartic infimum ground-state estimate."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .pauli import PauliSum, apply, power, term_expectations
from .simulator import Circuit, estimate_expectation, run

MAX_ORDER = 4


@dataclass
class MomentSet:
    values: list  # <H^1> .. <H^order>
    fraction: float = 1.0
    sigma: list = field(default_factory=list)
    sampled_terms: list = field(default_factory=list)

    def __post_init__(self):
        if not self.sigma:
            self.sigma = [0.0] * len(self.values)
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("non-finite moment")

    def __getitem__(self, k: int) -> float:
        """<H^k>, with <H^0> = 1."""
        return 1.0 if k == 0 else self.values[k - 1]

    @property
    def order(self) -> int:
        return len(self.values)

    def to_dict(self) -> dict:
        return {"moments": list(self.values), "sigma": list(self.sigma), "fraction": self.fraction}


@dataclass
class CumulantSet:
    c: list  # c1 .. c_order

    def __getitem__(self, n: int) -> float:
        return self.c[n - 1]

    @property
    def discriminant(self) -> float:
        return 3 * self[3] ** 2 - 2 * self[2] * self[4]

    def to_dict(self) -> dict:
        return {f"c{i + 1}": v for i, v in enumerate(self.c)}


@dataclass
class InfimumResult:
    energy: float
    valid: bool
    c1: float
    reason: str = ""


def inclusion_probabilities(weights, m: float) -> np.ndarray:
    """pi_i proportional to weights with expected sample size m, capped at 1."""
    w = np.abs(np.asarray(weights, dtype=float))
    pi = np.zeros_like(w)
    if m >= np.count_nonzero(w):
        pi[w > 0] = 1.0
        return pi
    fixed = np.zeros(w.size, dtype=bool)
    while True:
        rest = ~fixed & (w > 0)
        share = (m - fixed.sum()) * w[rest] / w[rest].sum()
        pi[rest] = share
        pi[fixed] = 1.0
        over = rest & (pi >= 1.0)
        if not over.any():
            return pi
        fixed |= over


def sample_terms(h: PauliSum, fraction: float, rng, reweight: bool = True):
    """Subset of term indices and their weights.

    ``reweight`` draws a Poisson sample with inclusion probability proportional
    to |coeff| (expected size fraction * terms) and returns Horvitz-Thompson
    weights 1/pi. Otherwise keeps the heaviest terms, weight 1.
    """
    t = h.num_terms
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    if fraction == 1:
        return np.arange(t), np.ones(t), np.ones(t)
    m = max(1.0, fraction * t)
    mag = np.abs(h.coeffs)
    if not reweight:
        keep = np.argsort(-mag, kind="stable")[: int(round(m))]
        return np.sort(keep), np.ones(keep.size), np.ones(keep.size)
    pi = inclusion_probabilities(mag, m)
    pick = np.flatnonzero(rng.random(t) < pi)
    return pick, 1.0 / pi[pick], pi[pick]


def _subsum(h: PauliSum, idx, weights) -> PauliSum:
    return PauliSum(h.x[idx], h.z[idx], h.coeffs[idx] * weights, h.n, simplify=False)


def _matvec_moments(h: PauliSum, psi, order: int) -> list:
    vecs = [psi]
    for _ in range((order + 1) // 2):
        vecs.append(apply(h, vecs[-1]))
    out = []
    for k in range(1, order + 1):
        a, b = k // 2, k - k // 2
        out.append(float(np.vdot(vecs[a], vecs[b]).real))
    return out


def hamiltonian_moments(h: PauliSum, state=None, order: int = 4, fraction: float = 1.0, mode: str = "exact",
                        seed: int = 0, circuit: Circuit | None = None, shots: int = 10_000, reweight: bool = True,
                        budget: int = 500_000, noise=None) -> MomentSet:
    """<H^k> for k = 1..order.

    Exact mode sums term expectations of H^k on the statevector (restricted to a
    sampled subset when fraction < 1). Shots mode measures each power on the
    circuit with qubit-wise commuting groups.
    """
    if order > MAX_ORDER or order < 1:
        raise ValueError(f"order must be in 1..{MAX_ORDER}")
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    rng = np.random.default_rng(seed)
    if mode == "exact":
        psi = np.asarray(state if state is not None else run(circuit), dtype=complex)
        vals, sig, used = [], [], []
        hk = None
        for k in range(1, order + 1):
            hk = h if k == 1 else (hk @ h if hk.num_terms * h.num_terms <= 4 * budget else power(h, k, budget))
            idx, w, pi = sample_terms(hk, fraction, rng, reweight)
            y = (hk.coeffs[idx] * term_expectations(PauliSum(hk.x[idx], hk.z[idx], np.ones(idx.size), h.n, simplify=False), psi)).real
            vals.append(float(np.sum(y * w)))
            sig.append(float(math.sqrt(np.sum((1 - pi) / pi**2 * y**2))))
            used.append(int(idx.size))
        return MomentSet(vals, fraction, sig, used)
    if mode == "shots":
        if circuit is None:
            raise ValueError("shots mode needs a circuit")
        vals, sig, used = [], [], []
        for k in range(1, order + 1):
            hk = power(h, k, budget)
            idx, w, _ = sample_terms(hk, fraction, rng, reweight)
            mean, err = estimate_expectation(circuit, _subsum(hk, idx, w), shots, noise, seed=seed + k)
            vals.append(float(mean))
            sig.append(float(err))
            used.append(int(idx.size))
        return MomentSet(vals, fraction, sig, used)
    raise ValueError(f"unknown mode {mode}")


def exact_moments(h: PauliSum, psi, order: int = 4) -> MomentSet:
    """Matrix-free <H^k> from repeated application of H."""
    return MomentSet(_matvec_moments(h, np.asarray(psi, dtype=complex), order))


def cumulants(m: MomentSet) -> CumulantSet:
    c = []
    for n in range(1, m.order + 1):
        val = m[n] - sum(math.comb(n - 1, p) * c[p] * m[n - 1 - p] for p in range(n - 1))
        c.append(float(val))
    return CumulantSet(c)


def infimum_estimate(c: CumulantSet, tol: float = 1e-12) -> InfimumResult:
    c1, c2, c3, c4 = c[1], c[2], c[3], c[4]
    if abs(c2) <= tol * max(1.0, c1 * c1):
        return InfimumResult(c1, True, c1, "zero variance")
    disc = c.discriminant
    denom = c3 * c3 - c2 * c4
    if disc < 0:
        return InfimumResult(c1, False, c1, "negative discriminant")
    if denom == 0:
        return InfimumResult(c1, False, c1, "zero denominator")
    e0 = c1 - (c2 * c2 / denom) * (math.sqrt(disc) - c3)
    if not math.isfinite(e0) or e0 > c1:
        return InfimumResult(c1, False, c1, "estimate above c1")
    return InfimumResult(float(e0), True, c1)


def ground_estimate(h: PauliSum, psi, fraction: float = 1.0, seed: int = 0, reweight: bool = True) -> InfimumResult:
    if fraction == 1.0:
        ms = exact_moments(h, psi)
    else:
        ms = hamiltonian_moments(h, psi, 4, fraction, seed=seed, reweight=reweight)
    return infimum_estimate(cumulants(ms))


@dataclass
class LambdaResult:
    value: float
    valid: bool
    direct: float
    lam: float
    richardson_change: float


def observable_via_lambda(h: PauliSum, o: PauliSum, psi, lam: float | None = None, fraction: float = 1.0,
                          seed: int = 0, rel_eps: float = 1e-3) -> LambdaResult:
    """d E0(H + lambda O) / d lambda by a central difference of infimum estimates."""
    psi = np.asarray(psi, dtype=complex)
    direct = float(np.vdot(psi, apply(o, psi)).real)
    if lam is None:
        lam = rel_eps * h.one_norm() / max(o.one_norm(), 1e-300)
    lam = abs(lam)

    def diff(step):
        ep = ground_estimate(h + o * step, psi, fraction, seed)
        em = ground_estimate(h - o * step, psi, fraction, seed)
        return (ep.energy - em.energy) / (2 * step), ep.valid and em.valid

    val, ok = diff(lam)
    half, ok_half = diff(lam / 2)
    change = abs(half - val) / max(abs(val), 1e-12)
    if not (ok and ok_half):
        return LambdaResult(direct, False, direct, lam, change)
    if change > 0.05:
        warnings.warn(f"lambda-shift estimate moved {change:.1%} when halving the step", stacklevel=2)
    return LambdaResult(float(val), True, direct, lam, float(change))
