"""Square-lattice geometry and the J1-J2 Heisenberg Hamiltonian."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

from .pauli import PauliSum

MAX_SITES = 24


class SpinConvention(str, Enum):
    HALF = "half"  # S = sigma / 2
    PAULI = "pauli"  # S = sigma


class BondCounting(str, Enum):
    UNORDERED_ONCE = "unordered-once"
    ORDERED_DOUBLE = "ordered-double"


class DegenerateBondWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LatticeSpec:
    rows: int
    cols: int
    periodic: bool = True

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be positive")
        if self.rows * self.cols > MAX_SITES:
            raise ValueError(
                f"{self.rows}x{self.cols} lattice exceeds the {MAX_SITES}-site simulability guard"
            )
        if self.periodic and (self.rows < 2 or self.cols < 2):
            raise ValueError("periodic lattices need rows >= 2 and cols >= 2")

    @property
    def n_sites(self) -> int:
        return self.rows * self.cols

    def coords(self, k: int) -> tuple[int, int]:
        return k % self.cols, k // self.cols

    def index(self, x: int, y: int) -> int:
        if self.periodic:
            x %= self.cols
            y %= self.rows
        elif not (0 <= x < self.cols and 0 <= y < self.rows):
            return -1
        return y * self.cols + x

    def parity(self, k: int) -> int:
        """Staggered sign (-1)^(x+y)."""
        x, y = self.coords(k)
        return -1 if (x + y) % 2 else 1

    def right(self, k: int) -> int:
        """Horizontal +x partner of site k (-1 when it falls off an open edge)."""
        x, y = self.coords(k)
        return self.index(x + 1, y)

    def distance(self, i: int, j: int, minimal_image: bool = True) -> int:
        """Manhattan distance; wraps around the torus when minimal_image is set."""
        xi, yi = self.coords(i)
        xj, yj = self.coords(j)
        dx, dy = abs(xi - xj), abs(yi - yj)
        if minimal_image and self.periodic:
            dx = min(dx, self.cols - dx)
            dy = min(dy, self.rows - dy)
        return dx + dy


@dataclass(frozen=True)
class BondList:
    nn: tuple[tuple[int, int], ...]
    nnn: tuple[tuple[int, int], ...]
    degenerate: bool = False

    def neighbors(self, i: int) -> list[int]:
        return sorted({b if a == i else a for a, b in self.nn if i in (a, b)})


@dataclass(frozen=True)
class CouplingConfig:
    j1: float = 1.0
    j2: float = 0.0
    spin_convention: SpinConvention = SpinConvention.PAULI
    bond_counting: BondCounting = BondCounting.ORDERED_DOUBLE

    def __post_init__(self):
        object.__setattr__(self, "spin_convention", SpinConvention(self.spin_convention))
        object.__setattr__(self, "bond_counting", BondCounting(self.bond_counting))

    @property
    def weight(self) -> float:
        w = 0.25 if self.spin_convention is SpinConvention.HALF else 1.0
        if self.bond_counting is BondCounting.ORDERED_DOUBLE:
            w *= 2.0
        return w

    def with_ratio(self, ratio: float) -> "CouplingConfig":
        return CouplingConfig(self.j1, ratio * self.j1, self.spin_convention, self.bond_counting)


def _collect(spec: LatticeSpec, steps) -> tuple[list[tuple[int, int]], bool]:
    pairs = set()
    raw = 0
    for k in range(spec.n_sites):
        x, y = spec.coords(k)
        for dx, dy in steps:
            m = spec.index(x + dx, y + dy)
            if m < 0:
                continue
            if m == k:
                raise ValueError("bond folds onto its own site; lattice too small")
            raw += 1
            pairs.add((min(k, m), max(k, m)))
    return sorted(pairs), raw != len(pairs)


def build_bonds(spec: LatticeSpec) -> BondList:
    """Nearest and next-nearest neighbour bonds, each unordered pair once.

    Small tori (a side of length 2) wrap a bond onto itself; duplicates are
    collapsed and the ``degenerate`` flag is raised with a warning.
    """
    nn, dup1 = _collect(spec, [(1, 0), (0, 1)])
    nnn, dup2 = _collect(spec, [(1, 1), (1, -1)])
    degenerate = dup1 or dup2
    if degenerate:
        warnings.warn(
            f"{spec.rows}x{spec.cols} torus has coinciding bonds; duplicates collapsed",
            DegenerateBondWarning,
            stacklevel=2,
        )
    return BondList(tuple(nn), tuple(nnn), degenerate)


def heisenberg_terms(n: int, bonds, coupling_value: float) -> PauliSum:
    terms = {}
    for i, j in bonds:
        for p in "XYZ":
            letters = ["I"] * n
            letters[n - 1 - i] = letters[n - 1 - j] = p
            key = "".join(letters)
            terms[key] = terms.get(key, 0.0) + coupling_value
    return PauliSum.from_labels(terms, n)


def build_hamiltonian(spec: LatticeSpec, coupling: CouplingConfig, bonds: BondList | None = None) -> PauliSum:
    """J1-J2 Heisenberg model as a Pauli sum."""
    if bonds is None:
        bonds = build_bonds(spec)
    n = spec.n_sites
    w = coupling.weight
    h = heisenberg_terms(n, bonds.nn, coupling.j1 * w)
    if coupling.j2 != 0.0:
        h = h + heisenberg_terms(n, bonds.nnn, coupling.j2 * w)
    return h


def total_z(n: int) -> PauliSum:
    return PauliSum.from_labels({"I" * (n - k - 1) + "Z" + "I" * k: 1.0 for k in range(n)}, n)


def chain_2site() -> LatticeSpec:
    return LatticeSpec(1, 2, periodic=False)
