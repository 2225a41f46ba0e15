"""Dense statevector simulation, shot sampling, Pauli-twirl noise and gate folding.

A statevector is a complex numpy array of length 2**n; qubit k is bit k of the
basis index. Printed bitstrings put qubit 0 rightmost.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .pauli import PauliSum

SQ2 = 1 / math.sqrt(2)

ONE_QUBIT = {"RX", "RY", "RZ", "U", "H", "X", "Y", "Z", "S", "SDG"}
TWO_QUBIT = {"CX", "CZ", "RZZ", "RXX", "RYY"}
N_PARAMS = {"RX": 1, "RY": 1, "RZ": 1, "U": 2, "RZZ": 1, "RXX": 1, "RYY": 1}
SELF_INVERSE = {"H", "X", "Y", "Z", "CX", "CZ"}


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    return psi


def basis_state(n: int, bits: Sequence[int] | int) -> np.ndarray:
    if not isinstance(bits, (int, np.integer)):
        bits = sum(int(b) << k for k, b in enumerate(bits))
    psi = np.zeros(1 << n, dtype=complex)
    psi[int(bits)] = 1.0
    return psi


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2)


@dataclass(frozen=True)
class Param:
    """Reference to a parameter slot, optionally scaled (folding uses scale = -1)."""

    index: int
    scale: float = 1.0

    def __neg__(self):
        return Param(self.index, -self.scale)


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    params: tuple = ()

    def __post_init__(self):
        kind = self.kind.upper()
        if kind == "ZZ":
            kind = "RZZ"
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(self.params))
        want = 2 if kind in TWO_QUBIT else 1
        if kind not in ONE_QUBIT | TWO_QUBIT:
            raise ValueError(f"unknown gate kind {self.kind}")
        if len(self.qubits) != want or len(set(self.qubits)) != want:
            raise ValueError(f"{kind} needs {want} distinct qubits, got {self.qubits}")
        if len(self.params) != N_PARAMS.get(kind, 0):
            raise ValueError(f"{kind} takes {N_PARAMS.get(kind, 0)} parameters")

    @property
    def is_bound(self) -> bool:
        return not any(isinstance(p, Param) for p in self.params)

    def bind(self, values) -> "Gate":
        if self.is_bound:
            return self
        ps = tuple(p.scale * float(values[p.index]) if isinstance(p, Param) else p for p in self.params)
        return Gate(self.kind, self.qubits, ps)

    def inverse(self) -> "Gate":
        k = self.kind
        if k in SELF_INVERSE:
            return self
        if k == "S":
            return Gate("SDG", self.qubits)
        if k == "SDG":
            return Gate("S", self.qubits)
        if k == "U":
            th, ph = self.params
            return Gate("U", self.qubits, (-th, ph))
        return Gate(k, self.qubits, (-self.params[0],))

    def to_dict(self) -> dict:
        ps = [{"slot": p.index, "scale": p.scale} if isinstance(p, Param) else float(p) for p in self.params]
        return {"kind": self.kind, "qubits": list(self.qubits), "params": ps}


def gate_matrix(g: Gate) -> np.ndarray:
    """Unitary of a bound gate; two-qubit matrices index as b(q0) + 2 b(q1)."""
    k = g.kind
    if k == "RX":
        c, s = math.cos(g.params[0] / 2), math.sin(g.params[0] / 2)
        return np.array([[c, -1j * s], [-1j * s, c]])
    if k == "RY":
        c, s = math.cos(g.params[0] / 2), math.sin(g.params[0] / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if k == "RZ":
        t = g.params[0] / 2
        return np.diag([np.exp(-1j * t), np.exp(1j * t)])
    if k == "U":
        # columns: |0> -> cos t|0> + e^{i phi} sin t|1>
        th, ph = g.params
        c, s = math.cos(th), math.sin(th)
        return np.array([[c, -np.exp(-1j * ph) * s], [np.exp(1j * ph) * s, c]])
    if k == "H":
        return np.array([[SQ2, SQ2], [SQ2, -SQ2]], dtype=complex)
    if k == "X":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if k == "Y":
        return np.array([[0, -1j], [1j, 0]])
    if k == "Z":
        return np.diag([1.0 + 0j, -1.0])
    if k == "S":
        return np.diag([1.0, 1j])
    if k == "SDG":
        return np.diag([1.0, -1j])
    if k == "CX":
        m = np.zeros((4, 4), dtype=complex)
        for b in range(4):
            c, t = b & 1, b >> 1
            m[c | ((t ^ c) << 1), b] = 1
        return m
    if k == "CZ":
        return np.diag([1, 1, 1, -1]).astype(complex)
    if k == "RZZ":
        t = g.params[0] / 2
        return np.diag(np.exp(-1j * t * np.array([1, -1, -1, 1])))
    if k in ("RXX", "RYY"):
        t = g.params[0] / 2
        p = np.array([[0, 1], [1, 0]]) if k == "RXX" else np.array([[0, -1j], [1j, 0]])
        pp = np.kron(p, p)
        return math.cos(t) * np.eye(4) - 1j * math.sin(t) * pp
    raise ValueError(k)


def _apply_1q(psi, m, q, n):
    v = psi.reshape(1 << (n - q - 1), 2, 1 << q)
    a, b = v[:, 0, :], v[:, 1, :]
    out = np.empty_like(v)
    if m[0, 1] == 0 and m[1, 0] == 0:
        out[:, 0, :] = m[0, 0] * a
        out[:, 1, :] = m[1, 1] * b
    else:
        out[:, 0, :] = m[0, 0] * a + m[0, 1] * b
        out[:, 1, :] = m[1, 0] * a + m[1, 1] * b
    return out.reshape(-1)


def _view2(psi, q0, q1, n):
    lo, hi = min(q0, q1), max(q0, q1)
    v = psi.reshape(1 << (n - hi - 1), 2, 1 << (hi - lo - 1), 2, 1 << lo)

    def sl(b0, b1):
        bl, bh = (b0, b1) if q0 == lo else (b1, b0)
        return (slice(None), bh, slice(None), bl, slice(None))

    return v, sl


def _apply_2q(psi, m, q0, q1, n):
    v, sl = _view2(psi, q0, q1, n)
    if np.count_nonzero(m - np.diag(np.diag(m))) == 0:
        out = v.copy()
        for b in range(4):
            if m[b, b] != 1:
                out[sl(b & 1, b >> 1)] *= m[b, b]
        return out.reshape(-1)
    parts = [v[sl(b & 1, b >> 1)] for b in range(4)]
    out = np.empty_like(v)
    for r in range(4):
        acc = 0
        for c in range(4):
            if m[r, c] != 0:
                acc = acc + m[r, c] * parts[c]
        out[sl(r & 1, r >> 1)] = acc
    return out.reshape(-1)


def apply_gate(psi: np.ndarray, g: Gate, n: int) -> np.ndarray:
    if not g.is_bound:
        raise ValueError(f"unbound parameter in {g.kind} on {g.qubits}")
    if any(q >= n or q < 0 for q in g.qubits):
        raise ValueError(f"gate {g.kind} targets {g.qubits} outside {n} qubits")
    if g.kind == "CX":
        c, t = g.qubits
        v, sl = _view2(psi, c, t, n)
        out = v.copy()
        out[sl(1, 0)], out[sl(1, 1)] = v[sl(1, 1)], v[sl(1, 0)]
        return out.reshape(-1)
    m = gate_matrix(g)
    if len(g.qubits) == 1:
        return _apply_1q(psi, m, g.qubits[0], n)
    return _apply_2q(psi, m, g.qubits[0], g.qubits[1], n)


@dataclass
class Circuit:
    n: int
    gates: list = field(default_factory=list)
    num_params: int = 0
    names: list = field(default_factory=list)

    def add(self, kind: str, qubits, *params) -> "Circuit":
        self.gates.append(Gate(kind, tuple(qubits) if not isinstance(qubits, int) else (qubits,), params))
        return self

    def new_param(self, name: str | None = None) -> Param:
        p = Param(self.num_params)
        self.names.append(name or f"p{self.num_params}")
        self.num_params += 1
        return p

    def __len__(self):
        return len(self.gates)

    def bind(self, values) -> "Circuit":
        values = np.asarray(values, dtype=float) if values is not None else np.zeros(0)
        if values.size < self.num_params:
            raise ValueError(f"circuit has {self.num_params} parameters, {values.size} given")
        return Circuit(self.n, [g.bind(values) for g in self.gates], 0, [])

    @property
    def is_bound(self) -> bool:
        return all(g.is_bound for g in self.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.n, [g.inverse() for g in reversed(self.gates)], self.num_params, list(self.names))

    def compose(self, other: "Circuit") -> "Circuit":
        """self followed by other; other's parameter slots are shifted after ours."""
        if other.n != self.n:
            raise ValueError("qubit count mismatch")
        shift = self.num_params
        moved = []
        for g in other.gates:
            ps = tuple(Param(p.index + shift, p.scale) if isinstance(p, Param) else p for p in g.params)
            moved.append(Gate(g.kind, g.qubits, ps))
        return Circuit(self.n, self.gates + moved, self.num_params + other.num_params, self.names + other.names)

    def two_qubit_count(self) -> int:
        return sum(len(g.qubits) == 2 for g in self.gates)

    def depth(self) -> int:
        level = [0] * self.n
        for g in self.gates:
            d = max(level[q] for q in g.qubits) + 1
            for q in g.qubits:
                level[q] = d
        return max(level, default=0)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "num_params": self.num_params, "gates": [g.to_dict() for g in self.gates]})


@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.0
    p2: float = 0.0
    readout_flip: float = 0.0
    idle_suppression: bool = False
    p_idle: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "readout_flip", "p_idle"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name}={v} outside [0, 1)")

    @property
    def idle(self) -> float:
        return 0.0 if self.idle_suppression else self.p_idle

    @property
    def is_trivial(self) -> bool:
        return self.p1 == 0 and self.p2 == 0 and self.idle == 0


_PAULI_1Q = ("X", "Y", "Z")


def _random_pauli(rng, qubits) -> list[Gate]:
    """Uniform non-identity Pauli on the given qubits."""
    k = len(qubits)
    code = int(rng.integers(1, 4**k))
    out = []
    for j, q in enumerate(qubits):
        c = (code >> (2 * j)) & 3
        if c:
            out.append(Gate(_PAULI_1Q[c - 1], (q,)))
    return out


def run(circuit: Circuit, initial: np.ndarray | None = None, noise: NoiseModel | None = None,
        seed: int = 0, params=None) -> np.ndarray:
    """Exact action in the noiseless case, else one Pauli-twirl trajectory."""
    c = circuit.bind(params) if params is not None or circuit.num_params else circuit
    n = c.n
    psi = zero_state(n) if initial is None else np.array(initial, dtype=complex)
    if psi.shape != (1 << n,):
        raise ValueError(f"initial state has shape {psi.shape}, expected {(1 << n,)}")
    noisy = noise is not None and not noise.is_trivial
    rng = np.random.default_rng(seed) if noisy else None
    for g in c.gates:
        psi = apply_gate(psi, g, n)
        if noisy:
            p = noise.p2 if len(g.qubits) == 2 else noise.p1
            if p > 0 and rng.random() < p:
                for e in _random_pauli(rng, g.qubits):
                    psi = apply_gate(psi, e, n)
            if noise.idle > 0:
                for q in range(n):
                    if q not in g.qubits and rng.random() < noise.idle:
                        psi = apply_gate(psi, _random_pauli(rng, (q,))[0], n)
    return psi


def unitary(circuit: Circuit, params=None) -> np.ndarray:
    c = circuit.bind(params) if params is not None or circuit.num_params else circuit
    dim = 1 << c.n
    cols = [run(c, basis_state(c.n, b)) for b in range(dim)]
    return np.array(cols).T


def _pauli_dense(n, q_letters):
    return PauliSum.single(n, q_letters).to_dense()


def run_density(circuit: Circuit, noise: NoiseModel | None = None, initial=None, params=None) -> np.ndarray:
    """Exact density-matrix evolution with depolarizing channels (reference for <= 4 qubits)."""
    c = circuit.bind(params) if params is not None or circuit.num_params else circuit
    n = c.n
    if n > 6:
        raise ValueError("density-matrix reference limited to 6 qubits")
    if initial is None:
        initial = zero_state(n)
    initial = np.asarray(initial)
    rho = np.outer(initial, initial.conj()) if initial.ndim == 1 else initial.astype(complex)
    for g in c.gates:
        u = unitary(Circuit(n, [g]))
        rho = u @ rho @ u.conj().T
        if noise is None:
            continue
        p = noise.p2 if len(g.qubits) == 2 else noise.p1
        if p > 0:
            rho = _depolarize(rho, n, g.qubits, p)
        if noise.idle > 0:
            for q in range(n):
                if q not in g.qubits:
                    rho = _depolarize(rho, n, (q,), noise.idle)
    return rho


def _depolarize(rho, n, qubits, p):
    k = len(qubits)
    acc = np.zeros_like(rho)
    for code in range(1, 4**k):
        letters = {}
        for j, q in enumerate(qubits):
            c = (code >> (2 * j)) & 3
            if c:
                letters[q] = _PAULI_1Q[c - 1]
        m = _pauli_dense(n, letters)
        acc += m @ rho @ m.conj().T
    return (1 - p) * rho + p / (4**k - 1) * acc


def _flip_masks(rng, shots, n, p):
    if p <= 0:
        return np.zeros(shots, dtype=np.int64)
    bits = rng.random((shots, n)) < p
    return (bits * (1 << np.arange(n, dtype=np.int64))).sum(axis=1)


def sample_outcomes(psi: np.ndarray, shots: int, readout_flip: float, rng) -> np.ndarray:
    """Counts per basis index after multinomial sampling and readout flips."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = np.abs(psi) ** 2
    probs = probs / probs.sum()
    counts = rng.multinomial(shots, probs)
    if readout_flip <= 0:
        return counts
    n = int(np.log2(psi.size))
    outcomes = np.repeat(np.arange(psi.size), counts)
    outcomes ^= _flip_masks(rng, shots, n, readout_flip)
    return np.bincount(outcomes, minlength=psi.size)


def counts_to_histogram(counts: np.ndarray, n: int) -> dict:
    return {format(int(b), f"0{n}b"): int(c) for b, c in enumerate(counts) if c}


def sample_counts(psi: np.ndarray, shots: int, noise: NoiseModel | None = None, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    n = int(np.log2(psi.size))
    flip = noise.readout_flip if noise is not None else 0.0
    return counts_to_histogram(sample_outcomes(psi, shots, flip, rng), n)


def qubitwise_groups(h: PauliSum) -> list[list[int]]:
    """Greedy qubit-wise commuting groups, heaviest terms placed first."""
    order = np.argsort(-np.abs(h.coeffs), kind="stable")
    groups, bases = [], []
    for t in order:
        x, z = int(h.x[t]), int(h.z[t])
        if x == 0 and z == 0:
            continue
        sup = x | z
        for gi, (bx, bz) in enumerate(bases):
            common = sup & (bx | bz)
            if ((x ^ bx) & common) == 0 and ((z ^ bz) & common) == 0:
                groups[gi].append(int(t))
                bases[gi] = (bx | x, bz | z)
                break
        else:
            groups.append([int(t)])
            bases.append((x, z))
    return groups


def basis_rotation(n: int, x: int, z: int) -> Circuit:
    """Gates mapping the measured Pauli letters onto Z."""
    c = Circuit(n)
    for q in range(n):
        bx, bz = (x >> q) & 1, (z >> q) & 1
        if bx and bz:
            c.add("SDG", q).add("H", q)
        elif bx:
            c.add("H", q)
    return c


def _group_values(h: PauliSum, terms, dim):
    idx = np.arange(dim, dtype=np.uint64)
    v = np.zeros(dim)
    for t in terms:
        sup = h.x[t] | h.z[t]
        v += h.coeffs[t].real * (1 - 2 * (np.bitwise_count(idx & sup) & 1).astype(float))
    return v


def estimate_expectation(circuit: Circuit, observable: PauliSum, shots: int, noise: NoiseModel | None = None,
                         seed: int = 0, params=None, initial=None, trajectories: int = 256) -> tuple[float, float]:
    """Shot estimate of <O> with its standard error.

    Terms are measured in qubit-wise commuting groups; every group gets the full
    shot budget. Noisy runs split each group's shots over Pauli-twirl
    trajectories seeded ``seed + trajectory index``.
    """
    if not observable.is_hermitian():
        raise ValueError("observable must be Hermitian")
    c = circuit.bind(params) if params is not None or circuit.num_params else circuit
    n, dim = c.n, 1 << c.n
    noisy = noise is not None and not noise.is_trivial
    flip = noise.readout_flip if noise is not None else 0.0
    mean = observable.identity_coeff().real
    var = 0.0
    base = None if noisy else run(c, initial)
    traj_counter = 0
    rng = np.random.default_rng(seed)
    for terms in qubitwise_groups(observable):
        bx = bz = 0
        for t in terms:
            bx |= int(observable.x[t])
            bz |= int(observable.z[t])
        rot = basis_rotation(n, bx, bz)
        vals = _group_values(observable, terms, dim)
        if noisy:
            ntraj = max(1, min(trajectories, shots))
            per = np.full(ntraj, shots // ntraj)
            per[: shots % ntraj] += 1
            tmeans = np.empty(ntraj)
            for j, s in enumerate(per):
                tseed = seed + traj_counter
                traj_counter += 1
                psi = run(c.compose(rot), initial, noise, seed=tseed)
                cnt = sample_outcomes(psi, int(s), flip, np.random.default_rng(tseed))
                tmeans[j] = float(cnt @ vals) / s
            m = float(per @ tmeans) / shots
            if ntraj > 1:
                # cluster estimator: spread of trajectory means carries both noise sources
                v = float(per @ (tmeans - m) ** 2) / (shots * (ntraj - 1) / ntraj) / ntraj
            else:
                v = 0.0
            mean += m
            var += v
            continue
        psi = run(rot, base)
        counts = sample_outcomes(psi, shots, flip, rng)
        m = float(counts @ vals) / shots
        v = float(counts @ (vals - m) ** 2) / max(shots - 1, 1)
        mean += m
        var += v / shots
    return mean, math.sqrt(var)


def fold(circuit: Circuit, lam: float) -> Circuit:
    """Unitary folding G -> G (G^dag G)^m plus a folded tail for fractional lam.

    The tail covers round(r * |G|) gates with r = (lam - 1 - 2m) / 2, which keeps
    the gate count within one gate of lam * |G|.
    """
    if lam < 1:
        raise ValueError(f"noise scale factor {lam} < 1")
    gates = list(circuit.gates)
    ng = len(gates)
    m = int(math.floor((lam - 1) / 2 + 1e-12))
    r = (lam - 1 - 2 * m) / 2
    k = int(math.floor(r * ng + 0.5))
    inv = [g.inverse() for g in reversed(gates)]
    out = list(gates)
    for _ in range(m):
        out += inv + gates
    if k:
        tail = gates[ng - k :]
        out += [g.inverse() for g in reversed(tail)] + tail
    return replace(circuit, gates=out, names=list(circuit.names))
