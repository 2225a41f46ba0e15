"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line in the summary."""
from __future__ import annotations

import math

import numpy as np
import pytest

from j1j2.cli import emit_plotdata, load_reference
from j1j2.krylov import (
    NormalizedHamiltonian, assemble, build_walk, chebyshev_moments_matfree, chebyshev_moments_walk, qlanczos,
    solve_gevp,
)
from j1j2.lattice import CouplingConfig, LatticeSpec, build_hamiltonian
from j1j2.mitigation import crzne_apply, crzne_fit
from j1j2.moments import cumulants, exact_moments, ground_estimate, infimum_estimate
from j1j2.observables import evaluate_all, neel_order
from j1j2.oracle import ground_state
from j1j2.simulator import run
from j1j2.vff import fast_forward, fast_forward_matrix, train_vff, vff_moments
from j1j2.vqe import AnsatzSpec, product_state, run_vqe, warm_start
from conftest import GRID, random_state

pytestmark = pytest.mark.slow

FIG6_GRID = (0.2, 0.4, 0.56, 0.8, 1.0)
MOMENTS_GRID = (0.2, 0.4, 0.5, 0.56, 0.8, 1.0)


def rel(a, b):
    return abs(a - b) / abs(b)


def warm_psi0(spec, ratio, seed=0):
    return product_state(warm_start(spec, CouplingConfig(j2=ratio), seed=seed))


def test_criterion_1_convention_calibration(exact44, verdict):
    targets = [
        (0.0, "local_z", -0.7017802), (0.56, "local_z", -0.5283802), (1.0, "local_z", -0.0463969),
        (0.0, "global_z", -0.6048370),
        (0.0, "neel", 0.3687028), (1.0, "neel", 0.0035493),
        (0.0, "dimer", 0.2403428), (0.5, "dimer", 0.3954105),
    ]
    errs = {f"{name}@{r}": rel(exact44.observables(r)[name], v) for r, name, v in targets}
    bad = {k: round(v, 5) for k, v in errs.items() if v > 1e-3}
    ok = verdict("1 convention calibration", not bad, f"max rel err {max(errs.values()):.2e}; over 1e-3: {bad or 'none'}")
    assert ok, bad


def test_criterion_2_exact_curve_shapes(exact44, verdict):
    obs = [exact44.observables(r) for r in GRID]
    diff = np.array([o["local_z"] - o["global_z"] for o in obs])
    crossings = []
    for i in range(len(GRID) - 1):
        if diff[i] == 0:
            crossings.append(GRID[i])
        elif diff[i] * diff[i + 1] < 0:
            t = diff[i] / (diff[i] - diff[i + 1])
            crossings.append(GRID[i] + t * (GRID[i + 1] - GRID[i]))
    cross_ok = any(0.5 <= c <= 0.6 for c in crossings)
    neel = np.array([o["neel"] for o in obs])
    neel_ok = bool(np.all(np.diff(neel) < 0))
    dimer = np.array([o["dimer"] for o in obs])
    k = int(np.argmax(dimer))
    unimodal = bool(np.all(np.diff(dimer[: k + 1]) > 0) and np.all(np.diff(dimer[k:]) < 0))
    dimer_ok = GRID[k] == 0.5 and unimodal
    ok = verdict("2 exact curve shapes", cross_ok and neel_ok and dimer_ok,
                 f"crossings {[round(c, 3) for c in crossings]}, Neel decreasing {neel_ok}, "
                 f"dimer max at {GRID[k]} unimodal {unimodal}")
    assert ok


def test_criterion_3_warm_start_benefit(verdict):
    spec = LatticeSpec(4, 4)
    coupling = CouplingConfig(j2=0.56)
    h = build_hamiltonian(spec, coupling)
    iters = 120
    traces = {True: [], False: []}
    for warm in (True, False):
        for seed in range(5):
            res, _ = run_vqe(spec, coupling, h, AnsatzSpec("efficientsu2", 1), warm=warm, max_iters=iters, seed=seed)
            traces[warm].append(res.best_trace)
    med = {w: np.median(np.array(t), axis=0) for w, t in traces.items()}
    below = float(np.mean(med[True][21:] < med[False][21:]))
    ok = verdict("3 warm-start benefit", below >= 0.9,
                 f"warm median below naive on {below:.0%} of iterations 21..{iters} "
                 f"(final {med[True][-1]:.2f} vs {med[False][-1]:.2f})")
    assert ok


def test_criterion_4_vqe_quality(exact44, verdict):
    spec = LatticeSpec(4, 4)
    coupling = CouplingConfig(j2=0.5)
    h, sol, _ = exact44.point(0.5)
    ratios = {}
    for kind in ("twolocal-rx-cx-linear", "feulner"):
        ratios[kind] = []
        for seed in range(3):
            res, _ = run_vqe(spec, coupling, h, AnsatzSpec(kind, 1), max_iters=500, seed=seed)
            ratios[kind].append(res.best_energy / sol.energy)
    tl, fe = ratios["twolocal-rx-cx-linear"], ratios["feulner"]
    quality = sum(r >= 0.70 for r in tl) >= 2
    ordering = float(np.median(fe)) < float(np.median(tl))
    ok = verdict("4 VQE quality", quality and ordering,
                 f"TwoLocal ratios {np.round(tl, 3).tolist()}, stand-in ratios {np.round(fe, 3).tolist()}")
    assert ok


def test_criterion_5_qlanczos_chebyshev(exact44, verdict):
    small = LatticeSpec(2, 2)
    h4 = build_hamiltonian(small, CouplingConfig(j2=0.5))
    e4 = ground_state(h4).energy
    r4 = qlanczos(h4, warm_psi0(small, 0.5), 3)
    ratio_a = r4.energy / e4
    errs = {}
    for r in FIG6_GRID:
        h, sol, _ = exact44.point(r)
        run_b = qlanczos(h, warm_psi0(exact44.spec, r), 15)
        errs[r] = rel(run_b.energy, sol.energy)
    ok_a = ratio_a >= 0.90
    ok_b = all(e <= 0.02 for e in errs.values())
    ok = verdict("5 QLanczos Chebyshev", ok_a and ok_b,
                 f"(a) 4-site d=3 ratio {ratio_a:.4f}; (b) d=15 rel errors "
                 f"{ {k: round(v, 4) for k, v in errs.items()} }")
    assert ok


def test_criterion_6_basis_comparison(exact44, verdict):
    h, sol, obs = exact44.point(0.0)
    psi0 = warm_psi0(exact44.spec, 0.0)
    lan = qlanczos(h, psi0, 15)
    rt = qlanczos(h, psi0, 15, basis="realtime")
    n_lan = neel_order(lan.state, exact44.spec)
    n_rt = neel_order(rt.state, exact44.spec)
    ok_lan = abs(n_lan - obs["neel"]) <= 0.01
    ok_rt = abs(n_rt - obs["neel"]) >= 0.05
    ok_e = rel(rt.energy, lan.energy) <= 0.05
    ok = verdict("6 basis comparison", ok_lan and ok_rt and ok_e,
                 f"Neel exact {obs['neel']:.5f}, Lanczos {n_lan:.5f}, real-time {n_rt:.5f}; "
                 f"energies {lan.energy:.3f} vs {rt.energy:.3f}")
    assert ok


def test_criterion_7_walk_equivalence(verdict, rng):
    worst = 0.0
    for rows, cols, ratio in ((2, 2, 0.5), (2, 3, 0.3), (2, 3, 1.0)):
        h = build_hamiltonian(LatticeSpec(rows, cols), CouplingConfig(j2=ratio))
        hn = NormalizedHamiltonian.from_pauli(h)
        psi = random_state(h.n, rng)
        walk, _ = chebyshev_moments_walk(build_walk(hn), psi, 12)
        worst = max(worst, float(np.max(np.abs(walk - chebyshev_moments_matfree(hn, psi, 12)))))
    ok = verdict("7 walk-operator equivalence", worst <= 1e-8, f"max |walk - recurrence| = {worst:.2e} for k <= 12")
    assert ok


@pytest.fixture(scope="module")
def trial_states_3x3():
    spec = LatticeSpec(3, 3)
    out = {}
    for r in MOMENTS_GRID:
        coupling = CouplingConfig(j2=r)
        h = build_hamiltonian(spec, coupling)
        res, circ = run_vqe(spec, coupling, h, AnsatzSpec("twolocal-rx-cx-linear", 1), max_iters=600, seed=0)
        out[r] = (h, ground_state(h).energy, run(circ.bind(res.best_params)), res.best_energy)
    return out


def test_criterion_8_moments_corrector(trial_states_3x3, verdict):
    before, after = {}, {}
    for r, (h, e0, psi, e_vqe) in trial_states_3x3.items():
        est = infimum_estimate(cumulants(exact_moments(h, psi)))
        before[r] = rel(e_vqe, e0)
        after[r] = rel(est.energy, e0)
    reduces = all(after[r] < before[r] for r in before)
    max_after = max(after.values())

    h, e0, psi, _ = trial_states_3x3[0.5]
    unsampled = rel(ground_estimate(h, psi).energy, e0)

    def sampled(frac):
        return float(np.mean([rel(ground_estimate(h, psi, frac, seed=s).energy, e0) for s in range(10)]))

    err_half, err_low = sampled(0.5), sampled(0.05)
    ok_curve = err_half <= 2 * unsampled and err_low > unsampled
    ok = verdict("8 moments corrector", reduces and max_after < 0.10 and ok_curve,
                 f"max error {max(before.values()):.3f} -> {max_after:.3f}, reduced everywhere {reduces}; "
                 f"sampling error 100% {unsampled:.3f}, 50% {err_half:.3f}, 5% {err_low:.3f}")
    assert ok


def test_criterion_9_crzne_recovery(exact44, verdict):
    x = np.array(GRID)
    worst, ident = 0.0, 0.0
    for name in ("neel", "dimer"):
        t = np.array([exact44.observables(r)[name] for r in GRID])
        anchors = [(x[0], t[0]), (x[-1], t[-1])]
        p = crzne_fit(np.c_[x, t], anchors)
        ident = max(ident, float(np.max(np.abs(crzne_apply(p, t) - t))))
        # invertible quadratic distortions on the curve's range
        for a2, a1, a0 in ((0.5, 0.7, 0.02), (-0.8, 0.9, -0.01)):
            f = a2 * t**2 + a1 * t + a0
            p = crzne_fit(np.c_[x, f], anchors)
            worst = max(worst, float(np.max(np.abs(crzne_apply(p, f) - t))))
    ok = verdict("9 CR-ZNE recovery", worst <= 1e-2 and ident <= 1e-6,
                 f"max recovery error {worst:.3e}, identity error {ident:.1e}")
    assert ok


def test_criterion_10_vff(verdict, rng):
    spec = LatticeSpec(2, 2)
    h = build_hamiltonian(spec, CouplingConfig(j2=0.5))
    e0 = ground_state(h).energy
    hn = NormalizedHamiltonian.from_pauli(h)
    psi0 = warm_psi0(spec, 0.5)
    model, rep = train_vff(hn, psi0, layers=2, n_powers=6, max_iters=600, seed=0, restarts=3)

    u1 = fast_forward_matrix(model, 1)
    unit = float(np.max(np.abs(u1.conj().T @ u1 - np.eye(16))))
    additive = float(np.max(np.abs(fast_forward_matrix(model, 5) - fast_forward_matrix(model, 2)
                                   @ fast_forward_matrix(model, 3))))
    fixed_depth = len(fast_forward(model, 1)) == len(fast_forward(model, 50))
    struct_ok = unit <= 1e-10 and additive <= 1e-10 and fixed_depth

    km = assemble(vff_moments(model, rep, psi0, 5), 3)
    km.scale = hn.scale
    energy = solve_gevp(km, eps_cap=1.1).energy
    ok = verdict("10 VFF", rep.mean_fidelity >= 0.6 and struct_ok and rel(energy, e0) <= 0.10,
                 f"mean fidelity {rep.mean_fidelity:.3f}; unitarity {unit:.1e}, additivity {additive:.1e}, "
                 f"fixed depth {fixed_depth}; d=3 energy {energy:.3f} vs {e0:.3f}")
    assert ok


def test_criterion_11_reference_series_are_schema_only(verdict):
    ref = load_reference()
    problems = []
    if ref.get("schema_version") != 1:
        problems.append("schema_version")
    for fid, series in ref["figures"].items():
        for name, s in series.items():
            if len(s["x"]) != len(s["y"]) or not all(math.isfinite(v) for v in s["x"] + s["y"]):
                problems.append(f"{fid}/{name}")
            if s.get("yerr") is not None and len(s["yerr"]) != len(s["x"]):
                problems.append(f"{fid}/{name} yerr")
    hardware = [f"{fid}/{n}" for fid, s in ref["figures"].items() for n in s if "hardware" in n]
    cols, table = emit_plotdata(None, "reference")
    ok = verdict("11 hardware series kept as reference data", not problems and bool(hardware) and len(table) > 0,
                 f"{len(ref['figures'])} figures, {len(hardware)} hardware series exposed for comparison only; "
                 f"schema problems: {problems or 'none'}")
    assert ok
