"""Phase diagnostics: Neel order, horizontal dimer order, local and global Z correlations.

Each quantity has two routes. The fast route works from correlation matrices of
the statevector; ``observable_operator`` builds the same quantity as a Pauli sum,
which is what shot-based estimation measures.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .lattice import LatticeSpec, build_bonds
from .pauli import PauliSum, apply, expectation, term_expectations

NAMES = ("neel", "dimer", "local_z", "global_z")


@dataclass(frozen=True)
class Calibration:
    """Per-observable multiplicative constants, frozen at the J2 = 0 anchors.

    ``global_z_metric`` picks the distance weight in the global correlation:
    ``minimal_image`` uses 1/d on the torus, ``raw_squared`` uses 1/d^2 with
    unwrapped coordinate differences.
    """

    neel: float = 4.0 / 3.0
    dimer: float = 7.318059579348807
    local_z: float = 1.5
    global_z: float = 6.89466471242934
    global_z_metric: str = "minimal_image"
    dimer_include_diagonal: bool = True

    @classmethod
    def raw_squared(cls) -> "Calibration":
        return cls(global_z=7.5, global_z_metric="raw_squared")

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_CALIBRATION = Calibration()


@dataclass
class ObservableSet:
    energy: float
    neel: float
    dimer: float
    local_z: float
    global_z: float
    errors: dict = field(default_factory=lambda: {k: 0.0 for k in ("energy",) + NAMES})

    def as_dict(self) -> dict:
        return {"energy": self.energy, "neel": self.neel, "dimer": self.dimer,
                "local_z": self.local_z, "global_z": self.global_z}


def _pair_sum(n, pairs, letters, coeff_fn):
    terms = {}
    for i, j in pairs:
        for p in letters:
            lab = ["I"] * n
            lab[n - 1 - i] = p
            lab[n - 1 - j] = p
            key = "".join(lab)
            terms[key] = terms.get(key, 0.0) + coeff_fn(i, j)
    return terms


def correlation_matrices(psi: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (<Z_i Z_j>, <sigma_i . sigma_j>) as n x n real matrices."""
    prob = np.abs(psi) ** 2
    idx = np.arange(psi.size, dtype=np.int64)
    zcol = 1.0 - 2.0 * ((idx[:, None] >> np.arange(n)) & 1)
    zz = zcol.T @ (prob[:, None] * zcol)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if pairs:
        op = PauliSum.from_labels(_pair_sum(n, pairs, "XY", lambda i, j: 1.0), n)
        vals = term_expectations(op, psi).real
        lookup = {lab: v for lab, v in zip(op.to_dict(), vals)}
    ss = zz.copy()
    for i, j in pairs:
        extra = 0.0
        for p in "XY":
            lab = ["I"] * n
            lab[n - 1 - i] = lab[n - 1 - j] = p
            extra += lookup["".join(lab)]
        ss[i, j] += extra
        ss[j, i] += extra
    np.fill_diagonal(ss, 3.0)
    return zz, ss


def neel_order(psi, spec: LatticeSpec, calibration: Calibration = DEFAULT_CALIBRATION, corr=None) -> float:
    n = spec.n_sites
    ss = (corr if corr is not None else correlation_matrices(psi, n))[1] / 4.0
    s = np.array([spec.parity(k) for k in range(n)], dtype=float)
    return float(calibration.neel * (s @ ss @ s) / n**2)


def _bond_operators(spec: LatticeSpec):
    n = spec.n_sites
    out = []
    for i in range(n):
        r = spec.right(i)
        if r < 0 or r == i:
            continue
        out.append((i, PauliSum.from_labels(_pair_sum(n, [(i, r)], "XYZ", lambda a, b: 0.25), n)))
    return out


def dimer_order(psi, spec: LatticeSpec, calibration: Calibration = DEFAULT_CALIBRATION) -> float:
    n = spec.n_sites
    ops = _bond_operators(spec)
    vecs = np.array([apply(b, psi) for _, b in ops])
    gram = (vecs.conj() @ vecs.T).real
    sx = np.array([(-1) ** spec.coords(i)[0] for i, _ in ops], dtype=float)
    w = np.outer(sx, sx)
    if not calibration.dimer_include_diagonal:
        np.fill_diagonal(w, 0.0)
    return float(calibration.dimer * np.sum(w * gram) / (n * (n - 1)))


def _local_weights(spec: LatticeSpec) -> np.ndarray:
    n = spec.n_sites
    bonds = build_bonds(spec)
    w = np.zeros((n, n))
    for i in range(n):
        for j in bonds.neighbors(i):
            w[i, j] += 1.0
    return w / (4 * n)


def _global_weights(spec: LatticeSpec, calibration: Calibration) -> np.ndarray:
    n = spec.n_sites
    w = np.zeros((n, n))
    wrap = calibration.global_z_metric == "minimal_image"
    if calibration.global_z_metric not in ("minimal_image", "raw_squared"):
        raise ValueError(f"unknown global_z_metric {calibration.global_z_metric}")
    power = 1 if wrap else 2
    for i in range(n):
        for j in range(n):
            if i != j:
                w[i, j] = 1.0 / spec.distance(i, j, minimal_image=wrap) ** power
    return w / (n * (n - 1))


def local_z(psi, spec, calibration: Calibration = DEFAULT_CALIBRATION, corr=None) -> float:
    zz = (corr if corr is not None else correlation_matrices(psi, spec.n_sites))[0]
    return float(calibration.local_z * np.sum(_local_weights(spec) * zz))


def global_z(psi, spec, calibration: Calibration = DEFAULT_CALIBRATION, corr=None) -> float:
    zz = (corr if corr is not None else correlation_matrices(psi, spec.n_sites))[0]
    return float(calibration.global_z * np.sum(_global_weights(spec, calibration) * zz))


def energy(psi, h: PauliSum) -> float:
    return expectation(h, psi)


def evaluate_all(psi, spec: LatticeSpec, h: PauliSum, calibration: Calibration | None = None) -> ObservableSet:
    cal = calibration or DEFAULT_CALIBRATION
    corr = correlation_matrices(psi, spec.n_sites)
    return ObservableSet(
        energy=energy(psi, h),
        neel=neel_order(psi, spec, cal, corr),
        dimer=dimer_order(psi, spec, cal),
        local_z=local_z(psi, spec, cal, corr),
        global_z=global_z(psi, spec, cal, corr),
    )


def observable_operator(name: str, spec: LatticeSpec, calibration: Calibration = DEFAULT_CALIBRATION) -> PauliSum:
    """Pauli-sum form of a diagnostic, so that <O> equals the fast-route value."""
    n = spec.n_sites
    if name in ("local_z", "global_z"):
        w = _local_weights(spec) if name == "local_z" else _global_weights(spec, calibration)
        k = calibration.local_z if name == "local_z" else calibration.global_z
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if w[i, j] + w[j, i] != 0]
        return PauliSum.from_labels(_pair_sum(n, pairs, "Z", lambda i, j: k * (w[i, j] + w[j, i])), n)
    if name == "neel":
        k = calibration.neel / n**2
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        terms = _pair_sum(n, pairs, "XYZ", lambda i, j: k * 2 * spec.parity(i) * spec.parity(j) / 4.0)
        op = PauliSum.from_labels(terms, n) if terms else PauliSum([], [], [], n)
        return op + PauliSum.identity(n, k * n * 0.75)
    if name == "dimer":
        ops = _bond_operators(spec)
        total = PauliSum([], [], [], n)
        for a, (i, bi) in enumerate(ops):
            for b, (j, bj) in enumerate(ops):
                if a == b and not calibration.dimer_include_diagonal:
                    continue
                sgn = (-1) ** (spec.coords(i)[0] + spec.coords(j)[0])
                total = total + (bi @ bj) * sgn
        total = total * (calibration.dimer / (n * (n - 1)))
        if not total.is_hermitian(1e-12):
            raise AssertionError("dimer operator lost Hermiticity")
        return PauliSum(total.x, total.z, total.coeffs.real, n)
    raise ValueError(f"unknown observable {name}")
