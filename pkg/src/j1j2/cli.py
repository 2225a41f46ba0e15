"""Batch harness: JSON run configs, J2/J1 sweeps, CR-ZNE correction and plot-data CSVs.

Exit codes: 0 success, 1 configuration or input error, 2 sweep finished with
failed rows.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

log = logging.getLogger("j1j2")

SCHEMA_VERSION = 1
THREADS_ENV = "J1J2_THREADS"
METHODS = ("exact", "vqe", "qlanczos-chebyshev", "qlanczos-realtime", "vqe+moments")
PAPER_GRID = (0.0, 0.1, 0.2, 0.3, 0.5, 0.56, 0.58, 0.7, 0.8, 0.9, 1.0)
OBS = ("energy", "neel", "dimer", "local_z", "global_z")

COLUMNS = (
    "config_hash", "j2j1", "method", "seed",
    "energy", "neel", "dimer", "local_z", "global_z",
    "energy_raw", "energy_zne", "energy_crzne", "energy_moments",
    "oracle_energy", "oracle_neel", "oracle_dimer", "oracle_local_z", "oracle_global_z",
    "iterations", "eps_used", "krylov_d", "krylov_cond", "fidelity", "wall_time", "error", "note",
)
COLUMN_TYPES = {c: float for c in COLUMNS}
COLUMN_TYPES.update(config_hash=str, method=str, error=str, note=str, seed=int, iterations=int, krylov_d=int)


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "lattice": "4x4",
    "periodic": True,
    "coupling": {"j1": 1.0, "spin_convention": "pauli", "bond_counting": "ordered-double"},
    "calibration": "default",
    "method": "exact",
    "grid": list(PAPER_GRID),
    "seeds": [0],
    "vqe": {"ansatz": "twolocal-rx-cx-linear", "reps": 1, "optimizer": "NFT", "iters": 100, "warm": True,
            "warm_runs": 4, "shots": None, "noise": None, "zne_factors": None, "zne_model": "linear"},
    "krylov": {"d": 15, "psi0": "warm", "eps": None, "eps_cap": 1e-3, "dt": None, "path": "matfree",
               "vff": False, "vff_layers": 2, "vff_iters": 600},
    "moments": {"fraction": 1.0, "order": 4, "reweight": True},
    "output": {"csv": None, "traces": None},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def parse_lattice(text: str) -> tuple[int, int]:
    try:
        r, c = text.lower().split("x")
        return int(r), int(c)
    except ValueError as exc:
        raise ConfigError(f"lattice must look like RxC, got {text!r}") from exc


@dataclass
class RunConfig:
    data: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(_merge(DEFAULTS, d))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def validate(self):
        d = self.data
        if not isinstance(d["schema_version"], int) or d["schema_version"] != SCHEMA_VERSION:
            raise ConfigError(f"schema_version must be the integer {SCHEMA_VERSION}")
        rows, cols = parse_lattice(d["lattice"])
        from .lattice import LatticeSpec
        try:
            LatticeSpec(rows, cols, bool(d["periodic"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if d["method"] not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        grid = d["grid"]
        if not grid or not all(isinstance(x, (int, float)) and math.isfinite(x) for x in grid):
            raise ConfigError("grid must be a non-empty list of numbers")
        if not d["seeds"] or not all(isinstance(s, int) for s in d["seeds"]):
            raise ConfigError("seeds must be a non-empty list of integers")
        if d["calibration"] not in ("default", "raw_squared"):
            raise ConfigError("calibration must be 'default' or 'raw_squared'")
        if d["coupling"]["spin_convention"] not in ("half", "pauli"):
            raise ConfigError("spin_convention must be 'half' or 'pauli'")
        if d["coupling"]["bond_counting"] not in ("unordered-once", "ordered-double"):
            raise ConfigError("bond_counting must be 'unordered-once' or 'ordered-double'")
        from .vqe import ANSATZ_KINDS
        if d["vqe"]["ansatz"] not in ANSATZ_KINDS:
            raise ConfigError(f"ansatz must be one of {ANSATZ_KINDS}")
        if d["method"].startswith("qlanczos") and (not isinstance(d["krylov"]["d"], int) or d["krylov"]["d"] < 1):
            raise ConfigError("krylov.d must be a positive integer")
        if d["krylov"]["psi0"] not in ("warm", "neel"):
            raise ConfigError("krylov.psi0 must be 'warm' or 'neel'")
        frac = d["moments"]["fraction"]
        if not (isinstance(frac, (int, float)) and 0 < frac <= 1):
            raise ConfigError("moments.fraction must be in (0, 1]")

    def hash(self) -> str:
        """Hash of every field except output paths."""
        body = {k: v for k, v in self.data.items() if k != "output"}
        text = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    # convenience accessors
    def lattice(self):
        from .lattice import LatticeSpec
        r, c = parse_lattice(self.data["lattice"])
        return LatticeSpec(r, c, bool(self.data["periodic"]))

    def coupling(self, ratio: float):
        from .lattice import BondCounting, CouplingConfig, SpinConvention
        c = self.data["coupling"]
        return CouplingConfig(
            j1=float(c["j1"]), j2=float(ratio) * float(c["j1"]),
            spin_convention=SpinConvention(c["spin_convention"]),
            bond_counting=BondCounting(c["bond_counting"]),
        )

    def calibration(self):
        from .observables import Calibration
        return Calibration.raw_squared() if self.data["calibration"] == "raw_squared" else Calibration()


def _empty_record(cfg_hash, ratio, method, seed) -> dict:
    row = {c: None for c in COLUMNS}
    row.update(config_hash=cfg_hash, j2j1=float(ratio), method=method, seed=int(seed), error="", note="")
    return row


def _fill_obs(row, obs: dict, prefix=""):
    for k in OBS:
        row[prefix + k] = float(obs[k])


def _neel_state(spec):
    from .simulator import basis_state
    return basis_state(spec.n_sites, [0 if spec.parity(k) > 0 else 1 for k in range(spec.n_sites)])


def _noise(cfg_vqe):
    from .simulator import NoiseModel
    n = cfg_vqe.get("noise")
    return NoiseModel(**n) if n else None


def run_point(cfg: RunConfig, index: int, ratio: float, seed: int, traces: list | None = None) -> dict:
    """One SweepRecord row; method errors land in the ``error`` field."""
    from .lattice import build_hamiltonian
    from .observables import evaluate_all
    from .oracle import ground_state

    d = cfg.data
    method = d["method"]
    point_seed = seed + index
    row = _empty_record(cfg.hash(), ratio, method, seed)
    t0 = time.perf_counter()
    spec = cfg.lattice()
    coupling = cfg.coupling(ratio)
    cal = cfg.calibration()
    try:
        h = build_hamiltonian(spec, coupling)
        if spec.n_sites <= 16:
            sol = ground_state(h, seed=0)
            _fill_obs(row, evaluate_all(sol.state, spec, h, cal).as_dict(), "oracle_")
        if method == "exact":
            for k in OBS:
                row[k] = row["oracle_" + k]
        elif method in ("vqe", "vqe+moments"):
            _run_vqe_point(cfg, row, spec, coupling, h, cal, point_seed, traces, ratio)
        else:
            _run_krylov_point(cfg, row, spec, coupling, h, cal, point_seed)
    except Exception as exc:  # recorded in-row, the sweep goes on
        log.warning("point j2j1=%s seed=%s failed: %s", ratio, seed, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
    row["wall_time"] = time.perf_counter() - t0
    return row


def _run_vqe_point(cfg, row, spec, coupling, h, cal, seed, traces, ratio):
    from .mitigation import ZneSeries, zne_extrapolate
    from .moments import exact_moments, cumulants, infimum_estimate
    from .observables import evaluate_all
    from .simulator import estimate_expectation, fold, run
    from .vqe import AnsatzSpec, run_vqe

    v = cfg.data["vqe"]
    noise = _noise(v)
    res, circ = run_vqe(spec, coupling, h, AnsatzSpec(v["ansatz"], int(v["reps"])), warm=bool(v["warm"]),
                        method=v["optimizer"], max_iters=int(v["iters"]), seed=seed, shots=v["shots"],
                        noise=noise, warm_runs=int(v["warm_runs"]))
    bound = circ.bind(res.best_params)
    psi = run(bound)
    obs = evaluate_all(psi, spec, h, cal).as_dict()
    _fill_obs(row, obs)
    row["energy_raw"] = res.best_energy
    row["iterations"] = res.iterations
    if traces is not None:
        traces.append({"j2j1": ratio, "seed": row["seed"], "warm": bool(v["warm"]), "trace": list(map(float, res.trace))})
    if v.get("zne_factors") and noise is not None:
        factors = [float(f) for f in v["zne_factors"]]
        vals, sig = [], []
        for lam in factors:
            m, s = estimate_expectation(fold(bound, lam), h, int(v["shots"] or 10_000), noise, seed=seed)
            vals.append(m)
            sig.append(s)
        row["energy_zne"] = zne_extrapolate(ZneSeries(factors, vals, sig), v.get("zne_model", "linear"))
    if cfg.data["method"] == "vqe+moments":
        mcfg = cfg.data["moments"]
        if mcfg["fraction"] < 1:
            from .moments import hamiltonian_moments
            ms = hamiltonian_moments(h, psi, int(mcfg["order"]), float(mcfg["fraction"]), seed=seed,
                                     reweight=bool(mcfg["reweight"]))
        else:
            ms = exact_moments(h, psi, int(mcfg["order"]))
        est = infimum_estimate(cumulants(ms))
        row["energy_moments"] = est.energy if est.valid else None
        if not est.valid:
            row["note"] = f"moments estimate rejected: {est.reason}"


def _run_krylov_point(cfg, row, spec, coupling, h, cal, seed):
    from .krylov import NormalizedHamiltonian, assemble, krylov_ground_vector, chebyshev_vectors, qlanczos, solve_gevp
    from .observables import evaluate_all
    from .vqe import product_state, warm_start

    k = cfg.data["krylov"]
    psi0 = product_state(warm_start(spec, coupling, seed=seed)) if k["psi0"] == "warm" else _neel_state(spec)
    basis = "chebyshev" if cfg.data["method"] == "qlanczos-chebyshev" else "realtime"
    d = int(k["d"])
    if k.get("vff") and basis == "chebyshev":
        from .vff import train_vff, vff_moments
        hn = NormalizedHamiltonian.from_pauli(h)
        model, rep = train_vff(hn, psi0, int(k["vff_layers"]), 2 * d - 1, max_iters=int(k["vff_iters"]), seed=seed)
        km = assemble(vff_moments(model, rep, psi0, 2 * d - 1), d)
        km.scale = hn.scale
        res = solve_gevp(km, k["eps"], float(k["eps_cap"]))
        state = krylov_ground_vector(res.coeffs, chebyshev_vectors(hn, psi0, d - 1))
        energy, eps_used, cond = res.energy, res.eps_used, res.cond
        row["fidelity"] = rep.mean_fidelity
    else:
        r = qlanczos(h, psi0, d, basis, k["eps"], float(k["eps_cap"]), k["dt"], k["path"])
        energy, eps_used, cond, state = r.energy, r.eps_used, r.cond, r.state
    obs = evaluate_all(state, spec, h, cal).as_dict()
    _fill_obs(row, obs)
    row["energy_raw"] = float(energy)
    row["eps_used"] = eps_used
    row["krylov_d"] = d
    row["krylov_cond"] = cond


def run_sweep(cfg: RunConfig, traces: list | None = None) -> list[dict]:
    """Rows ordered by (grid index, seed); per-point seed = master seed + grid index."""
    d = cfg.data
    jobs = [(i, r, s) for i, r in enumerate(d["grid"]) for s in d["seeds"]]
    threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    if threads > 1 and traces is None:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(threads) as ex:
            futs = [ex.submit(run_point, cfg, i, r, s) for i, r, s in jobs]
            return [f.result() for f in futs]
    return [run_point(cfg, i, r, s, traces) for i, r, s in jobs]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def write_csv(rows, path_or_buf, columns=COLUMNS):
    own = isinstance(path_or_buf, str)
    fh = open(path_or_buf, "w", encoding="utf-8", newline="") if own else path_or_buf
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([format_value(r.get(c)) for c in columns])
    finally:
        if own:
            fh.close()


def read_csv(path: str) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        row = {}
        for k, v in r.items():
            typ = COLUMN_TYPES.get(k, str)
            if v == "" and typ is not str:
                row[k] = None
            elif typ is str:
                row[k] = v
            else:
                row[k] = typ(float(v)) if typ is int else float(v)
        out.append(row)
    return out


def validate_row(row: dict) -> list[str]:
    """Schema problems of one record (empty list when valid)."""
    errs = [f"missing column {c}" for c in COLUMNS if c not in row]
    for c in COLUMNS:
        v = row.get(c)
        if v is None:
            continue
        typ = COLUMN_TYPES[c]
        if typ is float and not isinstance(v, (int, float)):
            errs.append(f"{c} is not numeric")
        if typ is int and not isinstance(v, int):
            errs.append(f"{c} is not an integer")
    if row.get("method") not in METHODS:
        errs.append(f"unknown method {row.get('method')}")
    return errs


# correction pass

def load_anchors(path: str) -> dict:
    """JSON object {observable: [[x, value], ...]} or a list of {x, observable, value}."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    out: dict = {}
    if isinstance(raw, list):
        for a in raw:
            out.setdefault(a["observable"], []).append((float(a["x"]), float(a["value"])))
    elif isinstance(raw, dict):
        for k, v in raw.items():
            out[k] = [(float(x), float(y)) for x, y in v]
    else:
        raise ConfigError("anchors must be a JSON list or object")
    return out


def correct_records(rows: list[dict], anchors: dict, beta: float = 0.01, anchor_weight: float | None = None):
    """CR-ZNE fit per (method, seed, observable); returns (rows, fitted parameters)."""
    from .mitigation import crzne_fit

    if not anchors:
        raise ConfigError("no anchors given; refusing to correct")
    bad = [k for k in anchors if k not in OBS]
    if bad:
        raise ConfigError(f"anchors for unknown observables {bad}")
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["method"], r["seed"]), []).append(r)
    params = []
    out = [dict(r) for r in rows]
    by_id = {id(r): o for r, o in zip(rows, out)}
    for (method, seed), grp in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        grp = sorted(grp, key=lambda r: r["j2j1"])
        for name, anc in sorted(anchors.items()):
            src = "energy_zne" if name == "energy" and all(r.get("energy_zne") is not None for r in grp) else name
            pts = [(r["j2j1"], r[src]) for r in grp if r.get(src) is not None]
            if len(pts) < 4:
                continue
            p = crzne_fit(pts, anc, beta=beta, anchor_weight=anchor_weight)
            col = "energy_crzne" if name == "energy" else f"{name}_crzne"
            for r in grp:
                if r.get(src) is not None:
                    by_id[id(r)][col] = float(p.g([r[src]])[0])
            params.append({"method": method, "seed": seed, "observable": name, "a": p.a, "b": p.b, "c": p.c, "d": p.d,
                           "residual": p.residual, "converged": p.converged})
    return out, params


CORRECTED_COLUMNS = COLUMNS + tuple(f"{k}_crzne" for k in OBS if k != "energy")


# plot data

def _mean_by(rows, method, col):
    acc: dict = {}
    for r in rows:
        if (method is None or r["method"] == method) and r.get(col) is not None and not r.get("error"):
            acc.setdefault(r["j2j1"], []).append(r[col])
    return {k: float(np.mean(v)) for k, v in acc.items()}


def _pivot(rows, series):
    """series: list of (column name, method or None, source column)."""
    maps = [(_mean_by(rows, m, c)) for _, m, c in series]
    xs = sorted(set().union(*[set(m) for m in maps])) if maps else []
    return [dict({"j2j1": x}, **{name: m.get(x) for (name, _, _), m in zip(series, maps)}) for x in xs]


FIGURES = {
    "energy-bars": [("vqe", "vqe", "energy"), ("qlanczos", "qlanczos-chebyshev", "energy"), ("exact", None, "oracle_energy")],
    "moments-bars": [("vqe", "vqe+moments", "energy"), ("moments", "vqe+moments", "energy_moments"),
                     ("exact", None, "oracle_energy")],
    "correlations": [("exact_local_z", None, "oracle_local_z"), ("exact_global_z", None, "oracle_global_z"),
                     ("vqe_local_z", "vqe", "local_z"), ("vqe_global_z", "vqe", "global_z")],
    "neel": [("exact", None, "oracle_neel"), ("vqe", "vqe", "neel"), ("adjusted", "vqe", "neel_crzne")],
    "dimer": [("exact", None, "oracle_dimer"), ("vqe", "vqe", "dimer"), ("adjusted", "vqe", "dimer_crzne")],
    "krylov-neel": [("lanczos", "qlanczos-chebyshev", "neel"), ("realtime", "qlanczos-realtime", "neel"),
                    ("exact", None, "oracle_neel")],
    "krylov-dimer": [("lanczos", "qlanczos-chebyshev", "dimer"), ("realtime", "qlanczos-realtime", "dimer"),
                     ("exact", None, "oracle_dimer")],
    "krylov-correlations": [("lanczos_local_z", "qlanczos-chebyshev", "local_z"),
                            ("realtime_local_z", "qlanczos-realtime", "local_z"),
                            ("exact_local_z", None, "oracle_local_z"),
                            ("lanczos_global_z", "qlanczos-chebyshev", "global_z"),
                            ("realtime_global_z", "qlanczos-realtime", "global_z"),
                            ("exact_global_z", None, "oracle_global_z")],
}
FIGURE_IDS = tuple(FIGURES) + ("warmstart-trace", "reference")


def figure_columns(fig: str) -> tuple:
    if fig == "warmstart-trace":
        return ("iteration", "naive", "warm")
    if fig == "reference":
        return ("figure", "series", "x", "y", "yerr")
    if fig not in FIGURES:
        raise ConfigError(f"unknown figure id {fig!r}; known: {FIGURE_IDS}")
    return ("j2j1",) + tuple(s[0] for s in FIGURES[fig])


def warmstart_table(traces: list[dict]) -> list[dict]:
    """Median best-so-far energy per iteration for naive and warm runs."""
    out = {}
    for flag, name in ((False, "naive"), (True, "warm")):
        runs = [np.minimum.accumulate(np.asarray(t["trace"])) for t in traces if bool(t["warm"]) == flag]
        if runs:
            m = min(len(r) for r in runs)
            out[name] = np.median(np.array([r[:m] for r in runs]), axis=0)
    n = max((len(v) for v in out.values()), default=0)
    return [{"iteration": i, "naive": _at(out.get("naive"), i), "warm": _at(out.get("warm"), i)} for i in range(n)]


def _at(arr, i):
    return float(arr[i]) if arr is not None and i < len(arr) else None


def load_reference() -> dict:
    """Digitised coordinates of the published plots, keyed by figure id and series."""
    text = resources.files("j1j2").joinpath("data/reference_series.json").read_text(encoding="utf-8")
    return json.loads(text)


def reference_table(fig: str | None = None) -> list[dict]:
    ref = load_reference()["figures"]
    rows = []
    for fid in sorted(ref):
        if fig and fid != fig:
            continue
        for name in sorted(ref[fid]):
            s = ref[fid][name]
            errs = s.get("yerr") or [None] * len(s["x"])
            for x, y, e in zip(s["x"], s["y"], errs):
                rows.append({"figure": fid, "series": name, "x": x, "y": y, "yerr": e})
    return rows


def emit_plotdata(rows_or_traces, figure: str, reference: str | None = None) -> tuple[tuple, list[dict]]:
    cols = figure_columns(figure)
    if figure == "warmstart-trace":
        return cols, warmstart_table(rows_or_traces)
    if figure == "reference":
        return cols, reference_table(reference)
    return cols, _pivot(rows_or_traces, FIGURES[figure])


# command line

def _cmd_sweep(args) -> int:
    cfg = RunConfig.load(args.config)
    out = args.out or cfg.data["output"]["csv"]
    traces_path = cfg.data["output"].get("traces")
    traces = [] if traces_path else None
    rows = run_sweep(cfg, traces)
    if out:
        write_csv(rows, out)
    else:
        write_csv(rows, sys.stdout)
    if traces_path:
        with open(traces_path, "w", encoding="utf-8") as fh:
            json.dump({"config_hash": cfg.hash(), "runs": traces}, fh)
    return 2 if any(r["error"] for r in rows) else 0


def _cmd_correct(args) -> int:
    rows = read_csv(args.input)
    anchors = load_anchors(args.anchors)
    out, params = correct_records(rows, anchors, args.beta, args.anchor_weight)
    write_csv(out, args.out, CORRECTED_COLUMNS)
    with open(args.out + ".params.json", "w", encoding="utf-8") as fh:
        json.dump(params, fh, indent=1)
    return 0


def _cmd_emit(args) -> int:
    figure_columns(args.figure)
    if args.figure == "warmstart-trace":
        data = []
        for p in args.input or []:
            with open(p, encoding="utf-8") as fh:
                data.extend(json.load(fh)["runs"])
    elif args.figure == "reference":
        data = None
    else:
        data = []
        for p in args.input or []:
            data.extend(read_csv(p))
    cols, table = emit_plotdata(data, args.figure, args.reference)
    if args.out:
        write_csv(table, args.out, cols)
    else:
        write_csv(table, sys.stdout, cols)
    return 0


def _cmd_oracle(args) -> int:
    from .lattice import CouplingConfig, LatticeSpec, SpinConvention, BondCounting, build_hamiltonian
    from .observables import Calibration, evaluate_all
    from .oracle import ground_state

    r, c = parse_lattice(args.lattice)
    spec = LatticeSpec(r, c)
    coupling = CouplingConfig(j1=args.j1, j2=args.j2j1 * args.j1, spin_convention=SpinConvention(args.spin),
                              bond_counting=BondCounting(args.bonds))
    h = build_hamiltonian(spec, coupling)
    sol = ground_state(h)
    obs = evaluate_all(sol.state, spec, h, Calibration()).as_dict()
    obs.update(gap=sol.gap, degenerate=sol.degenerate, mode=sol.mode, lattice=args.lattice, j2j1=args.j2j1)
    print(json.dumps(obs, indent=1))
    return 0


def _cmd_moments(args) -> int:
    from .lattice import CouplingConfig, LatticeSpec, build_hamiltonian
    from .moments import cumulants, hamiltonian_moments, infimum_estimate
    from .oracle import ground_state
    from .vqe import product_state, warm_start

    r, c = parse_lattice(args.lattice)
    spec = LatticeSpec(r, c)
    coupling = CouplingConfig(j2=args.j2j1)
    h = build_hamiltonian(spec, coupling)
    psi = product_state(warm_start(spec, coupling, seed=args.seed)) if args.state == "warm" else _neel_state(spec)
    circuit = None
    if args.mode == "shots":
        from .simulator import Circuit
        from .vqe import ProductAngles, warm_layer
        angles = warm_start(spec, coupling, seed=args.seed) if args.state == "warm" else ProductAngles.neel(spec)
        circuit = warm_layer(spec.n_sites, angles)
        psi = None
    ms = hamiltonian_moments(h, psi, args.order, args.fraction, args.mode, args.seed, circuit, args.shots)
    out = {"moments": ms.to_dict()}
    if args.order == 4:
        cs = cumulants(ms)
        est = infimum_estimate(cs)
        out.update(cumulants=cs.to_dict(), e0=est.energy, valid=est.valid, reason=est.reason)
    if spec.n_sites <= 16:
        out["oracle_energy"] = ground_state(h).energy
    print(json.dumps(out, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="j1j2", description="J1-J2 Heisenberg sweeps on a simulated quantum computer")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("sweep", help="run a J2/J1 sweep from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="CSV path (overrides output.csv)")
    s.set_defaults(func=_cmd_sweep)

    s = sub.add_parser("correct", help="CR-ZNE correction of a sweep CSV")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--anchors", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--beta", type=float, default=0.01)
    s.add_argument("--anchor-weight", type=float, default=None)
    s.set_defaults(func=_cmd_correct)

    s = sub.add_parser("emit", help="plot-data CSV for one figure")
    s.add_argument("--figure", required=True, help=", ".join(FIGURE_IDS))
    s.add_argument("--in", dest="input", nargs="*", help="sweep CSVs, or trace JSONs for warmstart-trace")
    s.add_argument("--out")
    s.add_argument("--reference", help="restrict the reference table to one figure id")
    s.set_defaults(func=_cmd_emit)

    s = sub.add_parser("oracle", help="exact ground state and diagnostics")
    s.add_argument("--lattice", required=True)
    s.add_argument("--j2j1", type=float, required=True)
    s.add_argument("--j1", type=float, default=1.0)
    s.add_argument("--spin", default="pauli", choices=("half", "pauli"))
    s.add_argument("--bonds", default="ordered-double", choices=("unordered-once", "ordered-double"))
    s.set_defaults(func=_cmd_oracle)

    s = sub.add_parser("moments", help="Hamiltonian moments, cumulants and the infimum estimate")
    s.add_argument("--lattice", default="3x3")
    s.add_argument("--j2j1", type=float, default=0.5)
    s.add_argument("--order", type=int, default=4)
    s.add_argument("--fraction", type=float, default=1.0)
    s.add_argument("--mode", default="exact", choices=("exact", "shots"))
    s.add_argument("--shots", type=int, default=10_000)
    s.add_argument("--state", default="warm", choices=("warm", "neel"))
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_moments)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return int(args.func(args))
    except (ConfigError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
