"""Zero-noise extrapolation and the classically reinforced quadratic corrector."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .lattice import CouplingConfig, LatticeSpec, build_hamiltonian
from .observables import NAMES, Calibration, evaluate_all
from .simulator import basis_state

DEFAULT_FACTORS = (1.0, 1.25, 1.5, 1.75, 2.0)


@dataclass
class ZneSeries:
    factors: list
    values: list
    sigma: list | None = None

    def __post_init__(self):
        f = np.asarray(self.factors, dtype=float)
        if f.size != len(self.values):
            raise ValueError("factors and values differ in length")
        if f.size and (f[0] != 1.0 or np.any(np.diff(f) <= 0)):
            raise ValueError("factors must start at 1 and increase strictly")


class ZneExtrapolator(BaseEstimator, RegressorMixin):
    """Weighted polynomial fit in the noise scale factor, read off at zero."""

    def __init__(self, model: str = "linear"):
        self.model = model

    def fit(self, factors, values, sigma=None):
        deg = {"linear": 1, "quadratic": 2}.get(self.model)
        if deg is None:
            raise ValueError(f"unknown ZNE model {self.model}")
        x = np.asarray(factors, dtype=float).reshape(-1)
        y = np.asarray(values, dtype=float).reshape(-1)
        if x.size < deg + 1:
            raise ValueError(f"{self.model} extrapolation needs at least {deg + 1} points")
        w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)
        a = np.vander(x, deg + 1, increasing=True) * w[:, None]
        if np.linalg.matrix_rank(a) < deg + 1:
            raise np.linalg.LinAlgError("degenerate ZNE design matrix")
        self.coef_, *_ = np.linalg.lstsq(a, y * w, rcond=None)
        return self

    def predict(self, factors):
        check_is_fitted(self, "coef_")
        x = np.asarray(factors, dtype=float).reshape(-1)
        return np.vander(x, self.coef_.size, increasing=True) @ self.coef_


def zne_extrapolate(series: ZneSeries, model: str = "linear") -> float:
    sig = None
    if series.sigma is not None and np.all(np.asarray(series.sigma) > 0):
        sig = series.sigma
    est = ZneExtrapolator(model).fit(series.factors, series.values, sig)
    return float(est.predict([0.0])[0])


def fd_weights(x0: float, nodes, order: int) -> np.ndarray:
    """Finite-difference weights for the order-th derivative at x0 from the given nodes."""
    nodes = np.asarray(nodes, dtype=float) - x0
    k = nodes.size
    v = np.vander(nodes, k, increasing=True).T
    rhs = np.zeros(k)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(v, rhs)


def derivative_operators(x) -> tuple[np.ndarray, np.ndarray]:
    """Matrices D1, D2 on a (possibly nonuniform) grid.

    Interior rows use three-point central stencils; boundary rows use one-sided
    stencils of second-order accuracy (three nodes for D1, four for D2).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4:
        raise ValueError("need at least 4 grid points")
    d1 = np.zeros((n, n))
    d2 = np.zeros((n, n))
    for i in range(n):
        if 0 < i < n - 1:
            s1 = s2 = [i - 1, i, i + 1]
        elif i == 0:
            s1, s2 = [0, 1, 2], [0, 1, 2, 3]
        else:
            s1, s2 = [n - 3, n - 2, n - 1], [n - 4, n - 3, n - 2, n - 1]
        d1[i, s1] = fd_weights(x[i], x[s1], 1)
        d2[i, s2] = fd_weights(x[i], x[s2], 2)
    return d1, d2


@dataclass
class Anchor:
    x: float
    observable: str
    value: float


@dataclass
class CrZneParams:
    a: float = 0.0
    b: float = 1.0
    c: float = 1.0
    d: float = 0.0
    beta: float = 0.01
    residual: float = 0.0
    converged: bool = True

    def g(self, values):
        u = np.asarray(values, dtype=float) / self.c
        return self.a * u * u + self.b * u + self.d

    def as_tuple(self):
        return self.a, self.b, self.c, self.d


class CrZneCorrector(BaseEstimator, TransformerMixin):
    """Quadratic inverse g(f) = a (f/c)^2 + b (f/c) + d fitted to one observable curve.

    ``fit`` takes the grid x, the mitigated values f(x) and anchors (x_a, v_a).
    The loss keeps the first and second derivatives of g(f(x)) close to those
    of f(x) and pulls g(f(x_a)) onto v_a with weight ``anchor_weight``.
    ``anchor_weight=None`` means 1/beta.
    """

    def __init__(self, beta: float = 0.01, anchor_weight: float | None = None, restarts: int = 4,
                 jitter: float = 0.3, seed: int = 0, max_iter: int = 20000):
        self.beta = beta
        self.anchor_weight = anchor_weight
        self.restarts = restarts
        self.jitter = jitter
        self.seed = seed
        self.max_iter = max_iter

    def _loss_fn(self, x, f, anchors):
        d1, d2 = derivative_operators(x)
        t1, t2 = d1 @ f, d2 @ f
        fa = np.array([np.interp(a[0], x, f) for a in anchors])
        va = np.array([a[1] for a in anchors])
        w = (1.0 / self.beta) if self.anchor_weight is None else self.anchor_weight

        def loss(p):
            a, b, c, d = p
            if abs(c) < 1e-9:
                return 1e12
            u = f / c
            y = a * u * u + b * u + d
            ua = fa / c
            ya = a * ua * ua + b * ua + d
            return float(np.sum((d1 @ y - t1) ** 2) + np.sum((d2 @ y - t2) ** 2) + w * np.sum((ya - va) ** 2))

        return loss

    def fit(self, x, f, anchors):
        x = np.asarray(x, dtype=float)
        f = np.asarray(f, dtype=float)
        if x.size < 4:
            raise ValueError("curve needs at least 4 points")
        if np.any(np.diff(x) <= 0):
            raise ValueError("curve must be sorted in x")
        anchors = [(a.x, a.value) if isinstance(a, Anchor) else tuple(a) for a in anchors]
        if not anchors:
            raise ValueError("at least one anchor is required")
        loss = self._loss_fn(x, f, anchors)
        rng = np.random.default_rng(self.seed)
        start = np.array([0.0, 1.0, 1.0, 0.0])
        best = None
        for k in range(self.restarts + 1):
            p0 = start if k == 0 else start + rng.normal(0, self.jitter, 4)
            r = minimize(loss, p0, method="Nelder-Mead",
                         options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": self.max_iter, "maxfev": 2 * self.max_iter})
            if best is None or r.fun < best.fun:
                best = r
        a, b, c, d = best.x
        self.params_ = CrZneParams(a, b, c, d, self.beta, float(best.fun), bool(best.success))
        return self

    def transform(self, values):
        check_is_fitted(self, "params_")
        return self.params_.g(values)


def crzne_fit(curve, anchors, beta: float = 0.01, anchor_weight: float | None = None, seed: int = 0) -> CrZneParams:
    """curve: sequence of (x, f_zne) pairs sorted in x."""
    curve = np.asarray(curve, dtype=float)
    est = CrZneCorrector(beta=beta, anchor_weight=anchor_weight, seed=seed).fit(curve[:, 0], curve[:, 1], anchors)
    return est.params_


def crzne_apply(params: CrZneParams, values):
    return params.g(values)


def product_endpoint_state(spec: LatticeSpec, ratio: float) -> np.ndarray:
    """Neel product state at J2/J1 = 0, horizontal-stripe product state at J2/J1 = 1."""
    n = spec.n_sites
    if ratio == 0:
        bits = [0 if spec.parity(k) > 0 else 1 for k in range(n)]
    elif ratio == 1:
        bits = [spec.coords(k)[1] % 2 for k in range(n)]
    else:
        raise ValueError("classical anchors exist only at J2/J1 = 0 and 1")
    return basis_state(n, bits)


def classical_anchor(spec: LatticeSpec, ratio: float, coupling: CouplingConfig | None = None,
                     calibration: Calibration | None = None) -> list[Anchor]:
    psi = product_endpoint_state(spec, ratio)
    coupling = (coupling or CouplingConfig()).with_ratio(ratio)
    obs = evaluate_all(psi, spec, build_hamiltonian(spec, coupling), calibration).as_dict()
    return [Anchor(float(ratio), name, float(obs[name])) for name in ("energy",) + NAMES]
