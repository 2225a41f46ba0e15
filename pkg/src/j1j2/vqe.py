"""Warm-started VQE: product-state annealing, ansatz circuits and the NFT / Nelder-Mead loop."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .lattice import BondList, CouplingConfig, LatticeSpec, build_bonds
from .pauli import PauliSum
from .simulator import Circuit, NoiseModel, estimate_expectation, run

TWO_PI = 2 * math.pi
ANSATZ_KINDS = (
    "twolocal-rx-cx-linear",
    "twolocal-rx-cz-circular",
    "realamplitudes",
    "efficientsu2",
    "hmfa",
    "feulner",
)


@dataclass
class ProductAngles:
    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        if self.theta.shape != self.phi.shape:
            raise ValueError("theta and phi must have equal length")

    def __len__(self):
        return self.theta.size

    def bloch(self) -> np.ndarray:
        return bloch_vectors(self.theta, self.phi)

    @classmethod
    def from_bloch(cls, vecs: np.ndarray) -> "ProductAngles":
        vecs = np.asarray(vecs, dtype=float)
        vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
        pol = np.arccos(np.clip(vecs[:, 2], -1, 1))  # polar angle on the sphere = 2 theta
        az = np.arctan2(vecs[:, 1], vecs[:, 0])
        theta = pol / 2
        # keep phi in [0, pi]: a negative azimuth is the same point with theta -> pi - theta
        neg = az < 0
        theta = np.where(neg, math.pi - theta, theta)
        phi = np.where(neg, az + math.pi, az)
        return cls(theta, phi)

    @classmethod
    def neel(cls, spec: LatticeSpec) -> "ProductAngles":
        th = np.array([0.0 if spec.parity(k) > 0 else math.pi / 2 for k in range(spec.n_sites)])
        return cls(th, np.zeros(spec.n_sites))


def bloch_vectors(theta, phi) -> np.ndarray:
    """Bloch vectors of cos(t)|0> + e^{i p} sin(t)|1>."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    s = np.sin(2 * theta)
    return np.stack([s * np.cos(phi), s * np.sin(phi), np.cos(2 * theta)], axis=-1)


def product_state(angles: ProductAngles) -> np.ndarray:
    psi = np.ones(1, dtype=complex)
    for t, p in zip(angles.theta, angles.phi):
        psi = np.kron(np.array([math.cos(t), np.exp(1j * p) * math.sin(t)]), psi)
    return psi


def _couplings(spec: LatticeSpec, coupling: CouplingConfig, bonds: BondList | None = None):
    bonds = bonds or build_bonds(spec)
    w = coupling.weight
    pairs = [(i, j, coupling.j1 * w) for i, j in bonds.nn]
    if coupling.j2 != 0:
        pairs += [(i, j, coupling.j2 * w) for i, j in bonds.nnn]
    return pairs


def product_energy(angles: ProductAngles, spec: LatticeSpec, coupling: CouplingConfig) -> float:
    """Mean-field energy sum_bonds J w (n_i . n_j) of a product state."""
    th = np.asarray(angles.theta)
    ph = np.asarray(angles.phi)
    if np.any(th < 0) or np.any(th > TWO_PI) or np.any(ph < 0) or np.any(ph > math.pi):
        warnings.warn("product angles outside [0, 2pi] x [0, pi]; clamping", stacklevel=2)
        th = np.clip(th, 0, TWO_PI)
        ph = np.clip(ph, 0, math.pi)
    n = bloch_vectors(th, ph)
    return float(sum(j * n[a] @ n[b] for a, b, j in _couplings(spec, coupling)))


def _anneal(spec, coupling, rng, sweeps_per_temp=500, cooling=0.95, sigma=0.3, t_min_ratio=1e-4):
    pairs = _couplings(spec, coupling)
    nsite = spec.n_sites
    nbrs = [[] for _ in range(nsite)]
    for a, b, j in pairs:
        nbrs[a].append((b, j))
        nbrs[b].append((a, j))
    theta = rng.uniform(0, TWO_PI, nsite)
    phi = rng.uniform(0, math.pi, nsite)
    vec = bloch_vectors(theta, phi)
    t0 = 2.0 * (abs(coupling.j1) + abs(coupling.j2)) * coupling.weight
    temp = t0
    while temp > t0 * t_min_ratio:
        for _ in range(sweeps_per_temp):
            k = int(rng.integers(nsite))
            nt = min(max(theta[k] + sigma * rng.normal(), 0.0), TWO_PI)
            np_ = min(max(phi[k] + sigma * rng.normal(), 0.0), math.pi)
            new = bloch_vectors(nt, np_)
            field_ = sum(j * vec[m] for m, j in nbrs[k])
            delta = float(field_ @ (new - vec[k]))
            if delta <= 0 or rng.random() < math.exp(-delta / temp):
                theta[k], phi[k], vec[k] = nt, np_, new
        temp *= cooling
    return vec


def _rotation_to(v, target):
    v = v / np.linalg.norm(v)
    target = target / np.linalg.norm(target)
    c = float(v @ target)
    axis = np.cross(v, target)
    s = np.linalg.norm(axis)
    if s < 1e-12:
        if c > 0:
            return np.eye(3)
        perp = np.array([1.0, 0, 0]) if abs(v[0]) < 0.9 else np.array([0, 1.0, 0])
        axis = np.cross(v, perp)
        axis /= np.linalg.norm(axis)
        return 2 * np.outer(axis, axis) - np.eye(3)
    axis /= s
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + s * k + (1 - c) * (k @ k)


def gauge_fix(vecs: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Rotate a spin configuration so site 0 points to +z and the first
    spin with a transverse component lies in the xz half-plane with x > 0."""
    out = vecs @ _rotation_to(vecs[0], np.array([0, 0, 1.0])).T
    for v in out[1:]:
        r = math.hypot(v[0], v[1])
        if r > tol:
            a = -math.atan2(v[1], v[0])
            rz = np.array([[math.cos(a), -math.sin(a), 0], [math.sin(a), math.cos(a), 0], [0, 0, 1]])
            return out @ rz.T
    return out


def warm_start(spec: LatticeSpec, coupling: CouplingConfig, runs: int = 4, seed: int = 0,
               sweeps_per_temp: int = 500) -> ProductAngles:
    """Average of ``runs`` annealed product states after gauge fixing."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    rng = np.random.default_rng(seed)
    acc = np.zeros((spec.n_sites, 3))
    for _ in range(runs):
        acc += gauge_fix(_anneal(spec, coupling, rng, sweeps_per_temp))
    zero = np.linalg.norm(acc, axis=1) < 1e-9
    acc[zero] = [0, 0, 1.0]
    return ProductAngles.from_bloch(acc)


@dataclass(frozen=True)
class AnsatzSpec:
    kind: str
    reps: int = 1

    def __post_init__(self):
        k = self.kind.lower()
        if k not in ANSATZ_KINDS:
            raise ValueError(f"unknown ansatz kind {self.kind}")
        object.__setattr__(self, "kind", k)
        if not 1 <= self.reps <= 5:
            raise ValueError("reps must be in 1..5")


def _rot_layer(c: Circuit, kinds):
    for kind in kinds:
        for q in range(c.n):
            c.add(kind, q, c.new_param(f"{kind.lower()}{q}"))


def _ent_layer(c: Circuit, gate: str, circular: bool):
    n = c.n
    for q in range(n - 1):
        c.add(gate, (q, q + 1))
    if circular and n > 2:
        c.add(gate, (n - 1, 0))


def warm_layer(n: int, warm: ProductAngles | None) -> Circuit:
    c = Circuit(n)
    if warm is not None:
        if len(warm) != n:
            raise ValueError("warm-start angles do not match the qubit count")
        for q in range(n):
            c.add("U", q, float(warm.theta[q]), float(warm.phi[q]))
    return c


def build_ansatz(spec: AnsatzSpec, n: int, warm: ProductAngles | None = None,
                 lattice: LatticeSpec | None = None) -> Circuit:
    kind, reps = spec.kind, spec.reps
    body = Circuit(n)
    if kind == "feulner":
        kind, reps = "twolocal-rx-cz-circular", 3
    if kind in ("twolocal-rx-cx-linear", "twolocal-rx-cz-circular", "realamplitudes", "efficientsu2"):
        rot = {"twolocal-rx-cx-linear": ["RX"], "twolocal-rx-cz-circular": ["RX"],
               "realamplitudes": ["RY"], "efficientsu2": ["RY", "RZ"]}[kind]
        ent = "CZ" if kind == "twolocal-rx-cz-circular" else "CX"
        circular = kind == "twolocal-rx-cz-circular"
        for _ in range(reps):
            _rot_layer(body, rot)
            _ent_layer(body, ent, circular)
        _rot_layer(body, rot)
    elif kind == "hmfa":
        if lattice is not None:
            bonds = build_bonds(lattice).nn
            parity = [lattice.parity(k) for k in range(n)]
        else:
            bonds = [(q, q + 1) for q in range(n - 1)]
            parity = [1 if q % 2 == 0 else -1 for q in range(n)]
        for q in range(n):
            if parity[q] < 0:
                body.add("X", q)
        for _ in range(reps):
            for a, b in bonds:
                body.add("RZZ", (a, b), body.new_param(f"zz{a}_{b}"))
            for a, b in bonds:
                body.add("RXX", (a, b), body.new_param(f"xx{a}_{b}"))
                body.add("RYY", (a, b), body.new_param(f"yy{a}_{b}"))
            for q in range(n):
                body.add("RZ", q, body.new_param(f"z{q}"))
    return warm_layer(n, warm).compose(body)


@dataclass
class VqeResult:
    best_energy: float
    best_params: np.ndarray
    trace: list
    iterations: int
    seed: int
    capped: bool = False
    nfev: int = 0

    @property
    def best_trace(self) -> np.ndarray:
        return np.minimum.accumulate(np.asarray(self.trace))


class EnergyObjective:
    """Energy of a parameterised circuit: exact statevector or shot estimate."""

    def __init__(self, circuit: Circuit, h: PauliSum, shots: int | None = None,
                 noise: NoiseModel | None = None, seed: int = 0, initial=None):
        self.circuit = circuit
        self.h = h
        self.shots = shots
        self.noise = noise
        self.seed = seed
        self.initial = initial
        self.calls = 0
        self._hm = h.to_sparse() if shots is None else None

    def state(self, params) -> np.ndarray:
        return run(self.circuit, self.initial, params=params)

    def __call__(self, params) -> float:
        self.calls += 1
        if self.shots is None:
            psi = self.state(params)
            return float(np.vdot(psi, self._hm @ psi).real)
        mean, _ = estimate_expectation(self.circuit, self.h, self.shots, self.noise,
                                       seed=self.seed + self.calls, params=params, initial=self.initial)
        return mean


def _fourier_step(objective, x, fx, k, degree, grid=2048):
    """Fit a degree-R trigonometric polynomial in coordinate k from 2R + 1
    equispaced samples and return its minimiser (grid search, then a bounded
    polish) and the predicted value."""
    npts = 2 * degree + 1
    ts = TWO_PI * np.arange(npts) / npts
    vals = np.empty(npts)
    vals[0] = fx
    for j in range(1, npts):
        y = x.copy()
        y[k] += ts[j]
        vals[j] = objective(y)
    coef = np.fft.rfft(vals) / npts
    tt = TWO_PI * np.arange(grid) / grid
    freq = np.arange(degree + 1)
    curve = coef[0].real + 2 * (np.exp(1j * np.outer(tt, freq[1:])) @ coef[1:]).real
    j = int(np.argmin(curve))

    def poly(t):
        return coef[0].real + 2 * (np.exp(1j * t * freq[1:]) @ coef[1:]).real

    step = TWO_PI / grid
    r = minimize_scalar(poly, bounds=(tt[j] - step, tt[j] + step), method="bounded", options={"xatol": 1e-12})
    if r.fun < curve[j]:
        return float(r.x), float(r.fun), npts - 1
    return tt[j], float(curve[j]), npts - 1


def nft(objective, x0, max_iters: int = 100, shift: float = 2 * math.pi / 3, monotone: bool = False,
        reevaluate_every: int | None = None, seed: int = 0, callback=None, degree: int = 1) -> VqeResult:
    """Nakanishi-Fujii-Todo sequential minimal optimisation.

    Each iteration updates one coordinate: the objective is sampled at the current
    value and at +-shift, the sinusoid a cos(t - b) + c is fitted exactly, and the
    coordinate jumps to its minimiser. ``monotone`` re-evaluates the jump and
    rejects it when the objective is not a pure sinusoid in that coordinate.
    ``degree`` > 1 fits a trigonometric polynomial of that degree instead, for
    parameters that enter the objective with higher frequencies.
    """
    x = np.array(x0, dtype=float)
    m = x.size
    fx = float(objective(x))
    nfev = 1
    trace = [fx]
    best_x, best_f = x.copy(), fx
    s = shift
    every = reevaluate_every or m
    for it in range(max_iters):
        k = it % m
        if degree > 1:
            t, pred, used = _fourier_step(objective, x, fx, k, degree)
            nfev += used
            cand = x.copy()
            cand[k] = (cand[k] + t) % TWO_PI
            fc = float(objective(cand)) if monotone else pred
            nfev += int(monotone)
            if not monotone or fc <= fx:
                x, fx = cand, fc
            trace.append(fx)
            if fx < best_f:
                best_f, best_x = fx, x.copy()
            if callback is not None:
                callback(it, x, fx)
            continue
        e = np.zeros(m)
        e[k] = s
        fp = float(objective(x + e))
        fm = float(objective(x - e))
        nfev += 2
        b_ = (fp - fm) / (2 * math.sin(s))
        a_ = (fx - 0.5 * (fp + fm)) / (1 - math.cos(s))
        c_ = fx - a_
        t = math.atan2(-b_, -a_)
        pred = c_ - math.hypot(a_, b_)
        cand = x.copy()
        cand[k] = (cand[k] + t) % TWO_PI
        if monotone:
            fc = float(objective(cand))
            nfev += 1
            if fc <= fx:
                x, fx = cand, fc
        else:
            x, fx = cand, pred
            if (it + 1) % every == 0:
                fx = float(objective(x))
                nfev += 1
        trace.append(fx)
        if fx < best_f:
            best_f, best_x = fx, x.copy()
        if callback is not None:
            callback(it, x, fx)
    return VqeResult(best_f, best_x, trace, max_iters, seed, True, nfev)


def nelder_mead(objective, x0, max_iters: int = 1000, tol: float = 1e-8, seed: int = 0) -> VqeResult:
    trace = []

    def f(x):
        v = float(objective(x))
        trace.append(v)
        return v

    r = minimize(f, np.asarray(x0, dtype=float), method="Nelder-Mead",
                 options={"xatol": tol, "fatol": tol, "maxiter": max_iters, "adaptive": False})
    return VqeResult(float(r.fun), np.asarray(r.x), trace, int(r.nit), seed, not r.success, int(r.nfev))


def optimize(objective, method: str = "NFT", initial=None, max_iters: int = 100, seed: int = 0, **kw) -> VqeResult:
    if initial is None:
        raise ValueError("initial parameters required")
    method = method.lower().replace("-", "").replace("_", "")
    if method == "nft":
        return nft(objective, initial, max_iters, seed=seed, **kw)
    if method == "neldermead":
        return nelder_mead(objective, initial, max_iters, seed=seed, **kw)
    raise ValueError(f"unknown optimizer {method}")


def compensating_init(circuit: Circuit, warm: ProductAngles, ansatz: AnsatzSpec) -> np.ndarray:
    """Zero parameters, except pi rotations in the final layer that undo the entanglers.

    For a warm state close to a basis state b, CX layers at zero angle map b to
    another basis state o; flipping the bits of o ^ b in the last rotation layer
    makes the untrained circuit output the warm state itself.
    """
    x0 = np.zeros(circuit.num_params)
    n = circuit.n
    kind = "twolocal-rx-cz-circular" if ansatz.kind == "feulner" else ansatz.kind
    if kind in ("hmfa", "twolocal-rx-cz-circular"):
        return x0
    bits = int(sum(1 << q for q, v in enumerate(warm.bloch()[:, 2]) if v < 0))
    out = int(np.argmax(np.abs(run(circuit, params=x0)) ** 2))
    flip = out ^ bits
    width = 2 if kind == "efficientsu2" else 1
    last = circuit.num_params - width * n  # first slot of the final rotation layer (RX or RY)
    for q in range(n):
        if (flip >> q) & 1:
            x0[last + q] = math.pi
    return x0


def run_vqe(lattice: LatticeSpec, coupling: CouplingConfig, h: PauliSum, ansatz: AnsatzSpec,
            warm: bool = True, method: str = "NFT", max_iters: int = 100, seed: int = 0,
            shots: int | None = None, noise: NoiseModel | None = None, warm_runs: int = 4,
            init: str | None = None) -> tuple[VqeResult, Circuit]:
    """Full loop: optional warm start, ansatz, initial parameters and optimisation.

    ``init`` is "compensate" (default with a warm start), "zeros" or "random"
    (uniform in [0, 2pi), the default without one).
    """
    n = lattice.n_sites
    angles = warm_start(lattice, coupling, runs=warm_runs, seed=seed) if warm else None
    circ = build_ansatz(ansatz, n, angles, lattice)
    rng = np.random.default_rng(seed)
    init = init or ("compensate" if warm else "random")
    if init == "compensate" and angles is not None:
        x0 = compensating_init(circ, angles, ansatz)
    elif init in ("zeros", "compensate"):
        x0 = np.zeros(circ.num_params)
    elif init == "random":
        x0 = rng.uniform(0, TWO_PI, circ.num_params)
    else:
        raise ValueError(f"unknown init {init}")
    obj = EnergyObjective(circ, h, shots, noise, seed)
    res = optimize(obj, method, x0, max_iters, seed)
    return res, circ
