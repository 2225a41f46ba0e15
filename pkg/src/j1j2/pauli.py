"""Pauli strings and sums in symplectic (x, z) bitmask form.

A string with masks (x, z) stands for i^|x&z| X^x Z^z, so a qubit with both
bits set carries Y = iXZ. Qubit k is bit k of the masks (little-endian). Text
labels put qubit 0 rightmost, the same order used for printed bitstrings.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

TOL = 1e-12
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}
_IPOW = np.array([1, 1j, -1, -1j])


def _popcount(a):
    return np.bitwise_count(np.asarray(a, dtype=np.uint64)).astype(np.int64)


def label_to_masks(label: str) -> tuple[int, int]:
    x = z = 0
    for k, ch in enumerate(reversed(label.upper())):
        bx, bz = _LETTER_BITS[ch]
        x |= bx << k
        z |= bz << k
    return x, z


def masks_to_label(x: int, z: int, n: int) -> str:
    return "".join(_BITS_LETTER[((x >> k) & 1, (z >> k) & 1)] for k in reversed(range(n)))


@dataclass(frozen=True)
class PauliString:
    x: int
    z: int
    n: int
    coeff: complex = 1.0

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0) -> "PauliString":
        x, z = label_to_masks(label)
        return cls(x, z, len(label), coeff)

    @property
    def label(self) -> str:
        return masks_to_label(self.x, self.z, self.n)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __repr__(self):
        return f"PauliString({self.coeff!r}, {self.label!r})"


def _product_phase(x1, z1, x2, z2):
    """Exponent of i picked up by P(x1,z1) P(x2,z2) = i^e P(x1^x2, z1^z2)."""
    x3 = np.bitwise_xor(x1, x2)
    z3 = np.bitwise_xor(z1, z2)
    e = (
        _popcount(np.bitwise_and(x1, z1))
        + _popcount(np.bitwise_and(x2, z2))
        + 2 * _popcount(np.bitwise_and(z1, x2))
        - _popcount(np.bitwise_and(x3, z3))
    )
    return x3, z3, np.mod(e, 4)


def multiply(a: PauliString, b: PauliString) -> PauliString:
    if a.n != b.n:
        raise ValueError(f"length mismatch: {a.n} vs {b.n}")
    x3, z3, e = _product_phase(np.uint64(a.x), np.uint64(a.z), np.uint64(b.x), np.uint64(b.z))
    return PauliString(int(x3), int(z3), a.n, complex(a.coeff * b.coeff * _IPOW[int(e)]))


class PauliSum:
    """Weighted sum of Pauli strings stored as parallel arrays.

    Terms are kept sorted by (x, z) with duplicates merged and coefficients
    below ``TOL`` dropped, so two equal operators compare equal term-for-term.
    """

    def __init__(self, x, z, coeffs, n: int, simplify: bool = True):
        self.n = int(n)
        self.x = np.asarray(x, dtype=np.uint64).reshape(-1)
        self.z = np.asarray(z, dtype=np.uint64).reshape(-1)
        self.coeffs = np.asarray(coeffs, dtype=complex).reshape(-1)
        if simplify:
            self._simplify()
        self._groups = None
        self._sparse = None

    # construction -------------------------------------------------------
    @classmethod
    def from_labels(cls, terms: dict, n: int | None = None) -> "PauliSum":
        if not terms:
            if n is None:
                raise ValueError("empty sum needs an explicit qubit count")
            return cls([], [], [], n)
        labels = list(terms)
        n = len(labels[0]) if n is None else n
        masks = [label_to_masks(lab) for lab in labels]
        if any(len(lab) != n for lab in labels):
            raise ValueError("labels of unequal length")
        return cls([m[0] for m in masks], [m[1] for m in masks], [terms[k] for k in labels], n)

    @classmethod
    def from_strings(cls, strings, n: int) -> "PauliSum":
        strings = list(strings)
        return cls([s.x for s in strings], [s.z for s in strings], [s.coeff for s in strings], n)

    @classmethod
    def identity(cls, n: int, coeff: complex = 1.0) -> "PauliSum":
        return cls([0], [0], [coeff], n)

    @classmethod
    def single(cls, n: int, ops: dict, coeff: complex = 1.0) -> "PauliSum":
        """Product of single-qubit letters, e.g. ``single(4, {0: 'Z', 2: 'X'})``."""
        x = z = 0
        for q, ch in ops.items():
            bx, bz = _LETTER_BITS[ch.upper()]
            x |= bx << q
            z |= bz << q
        return cls([x], [z], [coeff], n)

    def _simplify(self):
        if self.x.size == 0:
            return
        keys = (self.x << np.uint64(32)) | self.z if self.n <= 32 else None
        if keys is None:
            raise ValueError("more than 32 qubits not supported")
        uniq, inv = np.unique(keys, return_inverse=True)
        c = np.zeros(uniq.size, dtype=complex)
        np.add.at(c, inv, self.coeffs)
        keep = np.abs(c) > TOL
        uniq = uniq[keep]
        self.coeffs = c[keep]
        self.x = uniq >> np.uint64(32)
        self.z = uniq & np.uint64(0xFFFFFFFF)

    # basic protocol -----------------------------------------------------
    def __len__(self):
        return self.coeffs.size

    @property
    def num_terms(self) -> int:
        return self.coeffs.size

    def strings(self):
        for x, z, c in zip(self.x, self.z, self.coeffs):
            yield PauliString(int(x), int(z), self.n, complex(c))

    def to_dict(self) -> dict:
        return {masks_to_label(int(x), int(z), self.n): complex(c) for x, z, c in zip(self.x, self.z, self.coeffs)}

    def __repr__(self):
        return f"PauliSum(n={self.n}, terms={self.num_terms})"

    def _check(self, other: "PauliSum"):
        if self.n != other.n:
            raise ValueError(f"qubit count mismatch: {self.n} vs {other.n}")

    def __add__(self, other):
        if not isinstance(other, PauliSum):
            other = PauliSum.identity(self.n, other)
        self._check(other)
        return PauliSum(
            np.concatenate([self.x, other.x]),
            np.concatenate([self.z, other.z]),
            np.concatenate([self.coeffs, other.coeffs]),
            self.n,
        )

    __radd__ = __add__

    def __neg__(self):
        return PauliSum(self.x, self.z, -self.coeffs, self.n, simplify=False)

    def __sub__(self, other):
        return self + (-other if isinstance(other, PauliSum) else -other)

    def __mul__(self, scalar):
        if isinstance(scalar, PauliSum):
            return self @ scalar
        return PauliSum(self.x, self.z, self.coeffs * scalar, self.n)

    __rmul__ = __mul__

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        return multiply_sums(self, other)

    def __eq__(self, other):
        if not isinstance(other, PauliSum) or other.n != self.n or len(other) != len(self):
            return False
        return bool(
            np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
            and np.allclose(self.coeffs, other.coeffs, atol=1e-10)
        )

    def is_zero(self) -> bool:
        return self.num_terms == 0

    def adjoint(self) -> "PauliSum":
        return PauliSum(self.x, self.z, np.conj(self.coeffs), self.n, simplify=False)

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return bool(np.all(np.abs(self.coeffs.imag) <= tol))

    def one_norm(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def commutator(self, other: "PauliSum") -> "PauliSum":
        return (self @ other) - (other @ self)

    def identity_coeff(self) -> complex:
        hit = (self.x == 0) & (self.z == 0)
        return complex(self.coeffs[hit].sum()) if hit.any() else 0.0

    # text dump ------------------------------------------------------------
    def to_text(self) -> str:
        lines = []
        for lab, c in self.to_dict().items():
            val = c.real if abs(c.imag) < TOL else c
            lines.append(f"{val!r}\t{lab}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "PauliSum":
        terms = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            coeff, lab = line.split("\t")
            terms[lab.strip()] = terms.get(lab.strip(), 0) + complex(coeff.strip())
        return cls.from_labels(terms)

    # linear algebra -----------------------------------------------------
    def _compiled(self):
        """Terms grouped by x mask, each with its diagonal weight on source indices."""
        if self._groups is None:
            dim = 1 << self.n
            idx = np.arange(dim, dtype=np.uint64)
            groups = []
            for xv in np.unique(self.x):
                sel = self.x == xv
                diag = np.zeros(dim, dtype=complex)
                for zv, c in zip(self.z[sel], self.coeffs[sel]):
                    ph = c * _IPOW[int(_popcount(xv & zv)) % 4]
                    sign = 1 - 2 * (_popcount(idx & zv) & 1)
                    diag += ph * sign
                groups.append((int(xv), diag))
            self._groups = groups
        return self._groups

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return apply(self, psi)

    def to_sparse(self) -> sp.csr_matrix:
        if self._sparse is None:
            dim = 1 << self.n
            idx = np.arange(dim, dtype=np.int64)
            rows, cols, vals = [], [], []
            for xv, diag in self._compiled():
                nz = np.abs(diag) > TOL
                cols.append(idx[nz])
                rows.append(idx[nz] ^ xv)
                vals.append(diag[nz])
            if rows:
                m = sp.csr_matrix(
                    (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
                )
            else:
                m = sp.csr_matrix((dim, dim), dtype=complex)
            m.sum_duplicates()
            self._sparse = m
        return self._sparse

    def to_dense(self) -> np.ndarray:
        if self.n > 14:
            raise ValueError("dense export limited to 14 qubits")
        return self.to_sparse().toarray()


def multiply_sums(a: PauliSum, b: PauliSum, chunk: int = 1 << 21) -> PauliSum:
    """Fully expanded product a*b, vectorised over term pairs."""
    a._check(b)
    if len(a) == 0 or len(b) == 0:
        return PauliSum([], [], [], a.n)
    rows = max(1, chunk // len(b))
    xs, zs, cs = [], [], []
    for s in range(0, len(a), rows):
        x1 = a.x[s : s + rows, None]
        z1 = a.z[s : s + rows, None]
        x3, z3, e = _product_phase(x1, z1, b.x[None, :], b.z[None, :])
        c = a.coeffs[s : s + rows, None] * b.coeffs[None, :] * _IPOW[e]
        part = PauliSum(x3, z3, c, a.n)
        xs.append(part.x)
        zs.append(part.z)
        cs.append(part.coeffs)
    return PauliSum(np.concatenate(xs), np.concatenate(zs), np.concatenate(cs), a.n)


class TermBudgetExceeded(RuntimeError):
    pass


def power(h: PauliSum, k: int, budget: int = 500_000) -> PauliSum:
    if not 1 <= k <= 4:
        raise ValueError("power supports k in [1, 4]")
    out = h
    for step in range(2, k + 1):
        est = len(out) * len(h)
        out = out @ h
        if len(out) > budget:
            raise TermBudgetExceeded(f"H^{step} has {len(out)} terms, budget is {budget} (raw products {est})")
    return out


def power_term_counts(h: PauliSum, kmax: int = 4) -> list[int]:
    counts, cur = [len(h)], h
    for _ in range(2, kmax + 1):
        cur = cur @ h
        counts.append(len(cur))
    return counts


def _as_state(h: PauliSum, psi):
    psi = np.asarray(psi)
    if psi.shape[0] != 1 << h.n:
        raise ValueError(f"state dimension {psi.shape[0]} does not match {h.n} qubits")
    return psi


def apply(h: PauliSum, psi: np.ndarray) -> np.ndarray:
    """Matrix-free h @ psi (psi may carry extra trailing batch columns)."""
    psi = _as_state(h, psi)
    dim = psi.shape[0]
    out = np.zeros(psi.shape, dtype=complex)
    idx = np.arange(dim, dtype=np.int64)
    for xv, diag in h._compiled():
        w = diag if psi.ndim == 1 else diag[:, None]
        if xv == 0:
            out += w * psi
        else:
            out += (w * psi)[idx ^ xv]
    return out


def expectation(h: PauliSum, psi: np.ndarray, tol: float = 1e-10) -> float:
    if not h.is_hermitian():
        raise ValueError("expectation needs a Hermitian Pauli sum")
    psi = _as_state(h, psi)
    val = np.vdot(psi, apply(h, psi))
    if abs(val.imag) > tol * max(1.0, abs(val.real)):
        raise ValueError(f"imaginary residue {val.imag:.3e} in Hermitian expectation")
    return float(val.real)


def term_expectations(h: PauliSum, psi: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
    """<P_t> for every string in h (coefficients not included)."""
    psi = _as_state(h, psi)
    dim = psi.shape[0]
    idx = np.arange(dim, dtype=np.uint64)
    out = np.zeros(len(h), dtype=complex)
    order = np.argsort(h.x, kind="stable")
    xs = h.x[order]
    bounds = np.flatnonzero(np.diff(xs)) + 1
    for grp in np.split(order, bounds):
        if grp.size == 0:
            continue
        xv = h.x[grp[0]]
        # <psi| P |psi> = i^|xz| sum_b conj(psi[b^x]) (-1)^|z&b| psi[b]
        w = np.conj(psi[(idx ^ xv).astype(np.int64)]) * psi
        step = max(1, chunk // dim)
        for s in range(0, grp.size, step):
            g = grp[s : s + step]
            signs = 1 - 2 * (np.bitwise_count(idx[None, :] & h.z[g][:, None]) & 1).astype(np.int8)
            vals = signs @ w
            out[g] = vals * _IPOW[_popcount(xv & h.z[g]) % 4]
    return out
