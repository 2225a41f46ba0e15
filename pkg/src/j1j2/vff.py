"""Variational fast-forwarding of Chebyshev powers: A(k) = W D(k gamma) W^dag."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .krylov import NormalizedHamiltonian, chebyshev_vectors
from .simulator import Circuit, run, unitary
from .vqe import VqeResult, optimize


def _w_circuit(n: int, layers: int) -> Circuit:
    c = Circuit(n)
    for layer in range(layers):
        for q in range(n):
            c.add("U", q, c.new_param(f"theta{layer}_{q}"), c.new_param(f"phi{layer}_{q}"))
        for q in range(n - 1):
            a = c.new_param(f"xy{layer}_{q}")
            c.add("RXX", (q, q + 1), a)
            c.add("RYY", (q, q + 1), a)
    return c


def _z_table(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return 1.0 - 2.0 * ((idx[:, None] >> np.arange(n)) & 1)


@dataclass
class VffModel:
    n: int
    layers: int
    params: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.circuit = _w_circuit(self.n, self.layers)
        self.pairs = list(combinations(range(self.n), 2))
        size = self.circuit.num_params + self.n + len(self.pairs)
        if self.params is None:
            self.params = np.zeros(size)
        self.params = np.asarray(self.params, dtype=float)
        if self.params.size != size:
            raise ValueError(f"expected {size} parameters, got {self.params.size}")
        zt = _z_table(self.n)
        zz = np.stack([zt[:, i] * zt[:, j] for i, j in self.pairs], axis=1) if self.pairs else np.zeros((zt.shape[0], 0))
        self._generators = np.hstack([zt, zz]) / 2  # RZ(g) = exp(-i g Z / 2), same for ZZ

    @property
    def num_w(self) -> int:
        return self.circuit.num_params

    @property
    def gamma(self) -> np.ndarray:
        return self.params[self.num_w:]

    @property
    def theta(self) -> np.ndarray:
        return self.params[: self.num_w].reshape(self.layers, -1)[:, 0 : 2 * self.n : 2]

    @property
    def phi(self) -> np.ndarray:
        return self.params[: self.num_w].reshape(self.layers, -1)[:, 1 : 2 * self.n : 2]

    def phases(self, params=None) -> np.ndarray:
        p = self.params if params is None else params
        return self._generators @ p[self.num_w:]

    def powers(self, psi0, ks, params=None) -> list[np.ndarray]:
        """A(k)|psi0> for each k in ks."""
        p = self.params if params is None else np.asarray(params)
        w = p[: self.num_w]
        v = run(self.circuit.inverse(), initial=psi0, params=w)
        ph = self.phases(p)
        return [run(self.circuit, initial=np.exp(-1j * k * ph) * v, params=w) for k in ks]

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "layers": self.layers, "params": self.params.tolist(), "meta": self.meta})

    @classmethod
    def from_json(cls, text: str) -> "VffModel":
        d = json.loads(text)
        return cls(d["n"], d["layers"], np.array(d["params"]), d.get("meta", {}))


@dataclass
class VffReport:
    cost: float
    fidelities: list
    iterations: int
    norms: list = field(default_factory=list)
    phases: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    @property
    def mean_fidelity(self) -> float:
        return float(np.mean(self.fidelities))


def chebyshev_targets(hn: NormalizedHamiltonian, psi0, n_powers: int) -> tuple[list, np.ndarray]:
    """Normalized T_k(H_n)|psi0> for k = 1..n_powers, and their norms."""
    vecs = chebyshev_vectors(hn, psi0, n_powers)[1:]
    norms = np.array([np.linalg.norm(v) for v in vecs])
    return [v / nv if nv > 0 else v for v, nv in zip(vecs, norms)], norms


def _overlaps(model, targets, psi0, params=None) -> np.ndarray:
    states = model.powers(psi0, range(1, len(targets) + 1), params)
    return np.array([np.vdot(t, s) for t, s in zip(targets, states)])


def vff_cost(model: VffModel, targets, psi0, n_powers: int | None = None, params=None) -> float:
    n_powers = n_powers or len(targets)
    ov = _overlaps(model, targets[:n_powers], psi0, params)
    return float(1 - np.mean(np.abs(ov) ** 2))


def train_vff(hn: NormalizedHamiltonian, psi0, layers: int = 2, n_powers: int = 6, optimizer: str = "NFT",
              max_iters: int = 600, seed: int = 0, init_scale: float = 0.1,
              degree: int | None = None, restarts: int = 1) -> tuple[VffModel, VffReport]:
    """Fit A(k) to the normalized Chebyshev targets, k = 1..n_powers.

    With NFT each coordinate enters the cost as a trigonometric polynomial of
    degree max(4, n_powers) (W and W^dag both carry theta and phi, D carries k
    gamma), so ``degree`` defaults to that and every coordinate step is exact.
    ``restarts`` > 1 trains from seeds seed, seed + 1, ... and keeps the
    lowest-cost model.
    """
    if n_powers < 2:
        raise ValueError("n_powers must be >= 2")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    psi0 = np.asarray(psi0, dtype=complex)
    targets, norms = chebyshev_targets(hn, psi0, n_powers)
    model = VffModel(hn.n, layers)

    def objective(p):
        return vff_cost(model, targets, psi0, n_powers, p)

    kw = {"monotone": True, "degree": degree or max(4, n_powers)} if optimizer.lower() == "nft" else {}
    res = None
    for s in range(seed, seed + restarts):
        x0 = np.random.default_rng(s).normal(0, init_scale, model.params.size)
        r: VqeResult = optimize(objective, optimizer, x0, max_iters, s, **kw)
        if res is None or r.best_energy < res.best_energy:
            res = r
    model.params = np.asarray(res.best_params, dtype=float)
    ov = _overlaps(model, targets, psi0)
    fids = [float(abs(o) ** 2) for o in ov]
    phases = [complex(o / abs(o)) if abs(o) > 0 else 1.0 for o in ov]
    report = VffReport(float(1 - np.mean(fids)), fids, res.iterations, norms.tolist(), phases, list(res.trace))
    model.meta = {"cost": report.cost, "fidelities": fids, "seed": res.seed, "optimizer": optimizer}
    return model, report


def fast_forward(model: VffModel, k: float) -> Circuit:
    """Bound circuit W D(k gamma) W^dag; its gate count does not depend on k."""
    w = model.circuit.bind(model.params[: model.num_w])
    g = model.gamma * k
    d = Circuit(model.n)
    for q in range(model.n):
        d.add("RZ", q, float(g[q]))
    for (i, j), v in zip(model.pairs, g[model.n:]):
        d.add("RZZ", (i, j), float(v))
    return w.inverse().compose(d).compose(w)


def fast_forward_matrix(model: VffModel, k: float) -> np.ndarray:
    return unitary(fast_forward(model, k))


def vff_moments(model: VffModel, report: VffReport, psi0, kmax: int) -> np.ndarray:
    """<T_k> reconstructed as |t_k| <psi0| A(k) |psi0> with the training-time overlap phase removed."""
    if kmax > len(report.norms):
        raise ValueError(f"model trained for {len(report.norms)} powers, asked for {kmax}")
    psi0 = np.asarray(psi0, dtype=complex)
    states = model.powers(psi0, range(1, kmax + 1))
    mom = [1.0]
    for k, s in enumerate(states):
        mom.append(float((report.norms[k] * np.vdot(psi0, s) / report.phases[k]).real))
    return np.array(mom)


def hadamard_test(prep_a: Circuit, prep_b: Circuit, shots: int, seed: int = 0) -> tuple[complex, complex]:
    """Sampled <a|b> from two Hadamard tests on U = A^dag B (real part, then the S^dag variant).

    Each test is a single ancilla measurement with P(0) = (1 + Re<0|U|0>)/2 or
    (1 + Im<0|U|0>)/2, so it is sampled as a binomial draw on the exact
    ancilla probability. Returns (estimate, standard error per component).
    """
    a = run(prep_a)
    b = run(prep_b)
    exact = np.vdot(a, b)
    rng = np.random.default_rng(seed)
    out = []
    for val in (exact.real, exact.imag):
        p0 = min(max((1 + val) / 2, 0.0), 1.0)
        est = 2 * rng.binomial(shots, p0) / shots - 1
        out.append((est, math.sqrt(max(1 - est * est, 1e-12) / shots)))
    return complex(out[0][0], out[1][0]), complex(out[0][1], out[1][1])
