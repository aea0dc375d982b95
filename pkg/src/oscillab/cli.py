"""Configuration-driven experiment runner.

A run is described by a closed key set (CONFIG_KEYS) given as a JSON object or as
``key = value`` lines (``#`` starts a comment).  Every run writes two files into
the output directory:

* ``results.csv`` — long-format table with a fixed column set per experiment;
  floats are written with shortest round-trip formatting, so the file is
  byte-identical across reruns with the same config and seed;
* ``manifest.json`` — canonical-form JSON (sorted keys) echoing the raw config
  text byte-identically, plus the fully resolved configuration (every applied
  default), derived parameters (quadrature sizes, windows, delta, ...), package
  version, wall time, summary statistics and taint flags.

Determinism: all randomness derives from per-cell ``SeedSequence((seed, tags...))``
streams and parallel cells are merged by index, so ``--threads`` (or the
OSCILLAB_THREADS environment variable) never changes the output bytes.

Exit codes: 0 success, 1 error (bad config / runtime failure), 2 completed but
tainted (e.g. solver spillage above tolerance).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .hermite import HermiteBasis, MultiIndex, SpectralField
from .operators import IOperatorSpec, PWord, apply_I, bernstein_ratio, sobolev_norm
from .solver import SolverConfig, evolve
from .lab import (
    QuadTuple,
    almost_orthogonality_scan,
    bilinear_min_K,
    derivative_bilinear_ratio,
    energy_increment_scan,
    fit_power_law,
    identity_residual_scan_1d,
    norm_growth_experiment,
    quad_L0,
    quad_L1_plus_weight,
)

__all__ = [
    "CONFIG_KEYS",
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "run",
    "main",
]

CONFIG_KEYS = (
    "experiment", "d", "K", "s", "N_list", "M_list", "dt", "T", "trials",
    "seed", "output_dir",
)


class ConfigError(ValueError):
    """Configuration problem; .key names the offending key (or key path)."""

    def __init__(self, key: str, message: str):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    d: int | None = None
    K: int | None = None
    s: float | None = None
    N_list: list | None = None
    M_list: list | None = None
    dt: float | None = None
    T: float | None = None
    trials: int | None = None
    output_dir: str | None = None
    raw_text: str = ""  # original config text, carried for the manifest echo


# --------------------------------------------------------------------------
# Parsing and validation
# --------------------------------------------------------------------------

def _as_int(key, v, lo=None, hi=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(key, f"{key} must be an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(key, f"{key} must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(key, f"{key} must be <= {hi}, got {v}")
    return v


def _as_float(key, v, positive=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(key, f"{key} must be a number, got {v!r}")
    v = float(v)
    if positive and not v > 0:
        raise ConfigError(key, f"{key} must be > 0, got {v}")
    return v


def _as_int_list(key, v):
    if not isinstance(v, (list, tuple)) or len(v) == 0:
        raise ConfigError(key, f"{key} must be a non-empty list of integers, got {v!r}")
    out = []
    for i, item in enumerate(v):
        out.append(_as_int(f"{key}[{i}]", item, lo=1))
    return out


def parse_config(text: str) -> ExperimentConfig:
    """Parse UTF-8 config text (JSON object or key=value lines) and validate it."""
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<json>", f"invalid JSON config: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("<json>", "top-level JSON value must be an object")
    else:
        data = {}
        for line_no, line in enumerate(text.splitlines(), start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ConfigError(
                    f"<line {line_no}>", f"expected 'key = value', got {body!r}"
                )
            key, _, value = body.partition("=")
            key = key.strip()
            value = value.strip()
            try:
                data[key] = json.loads(value)
            except json.JSONDecodeError:
                data[key] = value
    return _config_from_dict(data, text)


def _config_from_dict(data: dict, raw_text: str) -> ExperimentConfig:
    for key in data:
        if key not in CONFIG_KEYS:
            raise ConfigError(key, f"unknown key {key!r}; known keys: {', '.join(CONFIG_KEYS)}")
    if "experiment" not in data:
        raise ConfigError("experiment", "missing required key 'experiment'")
    experiment = data["experiment"]
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            "experiment",
            f"unknown experiment {experiment!r}; choices: {', '.join(EXPERIMENTS)}",
        )
    if "seed" not in data:
        raise ConfigError("seed", "missing required key 'seed' (runs must be reproducible)")
    kwargs = {
        "experiment": experiment,
        "seed": _as_int("seed", data["seed"], lo=0),
        "raw_text": raw_text,
    }
    if "d" in data:
        kwargs["d"] = _as_int("d", data["d"], lo=1, hi=3)
    if "K" in data:
        kwargs["K"] = _as_int("K", data["K"], lo=1)
    if "s" in data:
        kwargs["s"] = _as_float("s", data["s"], positive=True)
    if "dt" in data:
        kwargs["dt"] = _as_float("dt", data["dt"], positive=True)
    if "T" in data:
        kwargs["T"] = _as_float("T", data["T"], positive=True)
    if "trials" in data:
        kwargs["trials"] = _as_int("trials", data["trials"], lo=1)
    if "N_list" in data:
        kwargs["N_list"] = _as_int_list("N_list", data["N_list"])
    if "M_list" in data:
        kwargs["M_list"] = _as_int_list("M_list", data["M_list"])
    if "output_dir" in data:
        if not isinstance(data["output_dir"], str) or not data["output_dir"]:
            raise ConfigError("output_dir", "output_dir must be a non-empty string")
        kwargs["output_dir"] = data["output_dir"]
    return ExperimentConfig(**kwargs)


# --------------------------------------------------------------------------
# Presets (resolved defaults; every applied default is reported in the manifest)
# --------------------------------------------------------------------------

_PRESETS: dict[str, dict] = {
    "identity_k1": dict(d=1, K=16, trials=64),
    "orthogonality": dict(d=1, K=64, trials=4),
    "bilinear": dict(d=2, N_list=[4, 8, 16, 32, 64], M_list=[2], T=math.pi, trials=32),
    "bilinear_derivative": dict(d=2, N_list=[4, 8, 16, 32, 64], M_list=[2], T=math.pi, trials=32),
    "bernstein": dict(d=1, N_list=[4, 8, 16, 32, 64], trials=8),
    "energy_increment": dict(d=2, K=64, s=1.5, N_list=[4, 8, 16, 32], dt=1e-5, T=0.4),
    "norm_growth": dict(d=2, K=32, s=2.0, dt=0.01, T=200.0),
    "conservation": dict(d=2, K=32, s=1.0, dt=0.005, T=10.0),
}

# Experiment-internal knobs (not part of the config key set; echoed in manifests).
_ORTHO_C0 = 2.0
_IDENTITY_EXHAUSTIVE_K_CAP = 24
_INC_RECORD_EVERY = 200
_INC_BODY_DECAY = 6.0
_INC_BODY_DEG_CUT = 40
_INC_RING_AMP = 0.15
_GROWTH_RECORD_EVERY = 20
_GROWTH_BODY_DECAY = 4.0
_GROWTH_DEG_CUT = 20
_GROWTH_HS_NORM = 3.0
_CONS_RECORD_EVERY = 10
_CONS_BODY_DECAY = 2.0
_CONS_DEG_CUT = 9
_CONS_MASS = 0.25


def _resolve(cfg: ExperimentConfig) -> tuple[dict, dict]:
    """Merge user config over experiment presets -> (resolved dict, defaults applied)."""
    presets = _PRESETS[cfg.experiment]
    resolved: dict = {"experiment": cfg.experiment, "seed": cfg.seed}
    defaults: dict = {}
    for key in CONFIG_KEYS:
        if key in ("experiment", "seed"):
            continue
        user_value = getattr(cfg, key)
        if user_value is not None:
            resolved[key] = user_value
        elif key in presets:
            resolved[key] = presets[key]
            defaults[key] = presets[key]
        else:
            resolved[key] = None
    if resolved["output_dir"] is None:
        resolved["output_dir"] = os.path.join("runs", cfg.experiment)
        defaults["output_dir"] = resolved["output_dir"]
    return resolved, defaults


# --------------------------------------------------------------------------
# Output helpers
# --------------------------------------------------------------------------

@dataclass
class DriverResult:
    columns: list
    rows: list
    summary: dict
    derived: dict
    taints: list
    resolved_extra: dict


def _map_cells(fn, cells, threads: int):
    if threads <= 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, cells))


def _fmt_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: str, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt_cell(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def _fit_summary(fit):
    if fit is None:
        return None
    return {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "residual": fit.residual,
        "dropped": fit.dropped,
        "n_points": int(fit.xs.size),
    }


def _word_label(word: PWord) -> str:
    if not word.letters:
        return "ID"
    return ".".join(f"{letter}{axis}" for letter, axis in word.letters)


# --------------------------------------------------------------------------
# Experiment drivers
# --------------------------------------------------------------------------

def _run_identity_k1(resolved: dict, threads: int) -> DriverResult:
    d, K, seed, trials = resolved["d"], resolved["K"], resolved["seed"], resolved["trials"]
    columns = ["mu_sq_1", "mu_sq_2", "mu_sq_3", "mu_sq_4", "L0", "rhs", "residual", "resonant"]
    if d == 1:
        if K > _IDENTITY_EXHAUSTIVE_K_CAP:
            raise ConfigError(
                "K",
                f"the exhaustive 1-D identity scan caps at K = {_IDENTITY_EXHAUSTIVE_K_CAP} "
                f"((K+1)^4 rows); use d >= 2 for sampled tuples at larger K",
            )
        scan = identity_residual_scan_1d(K)
        n = K + 1
        mu = 2 * np.arange(n) + 1
        L0f = scan["L0"].ravel()
        rhsf = scan["rhs"].ravel()
        resf = scan["residual"].ravel()
        resof = scan["resonant"].ravel()
        rows = []
        idx = 0
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    for e in range(n):
                        rows.append([
                            int(mu[a]), int(mu[b]), int(mu[c]), int(mu[e]),
                            float(L0f[idx]), float(rhsf[idx]), float(resf[idx]),
                            bool(resof[idx]),
                        ])
                        idx += 1
        nonres = ~scan["resonant"]
        summary = {
            "max_residual": float(np.nanmax(scan["residual"][nonres])),
            "n_tuples": int(scan["residual"].size),
            "n_resonant": int(scan["resonant"].sum()),
            "exhaustive": True,
        }
        derived = {"Q": 2 * K + 2, "mu_sq_max": int(2 * K + 1)}
        return DriverResult(columns, rows, summary, derived, [], {})
    basis = HermiteBasis(d, K)
    basis.rule, basis.values  # build tables before any parallel work

    def cell(i):
        rng = np.random.default_rng(np.random.SeedSequence((seed, 5, i)))
        modes = [tuple(int(x) for x in rng.integers(0, K + 1, size=d)) for _ in range(4)]
        qt = QuadTuple.from_modes(basis, *modes)
        denom = qt.mu_sq_1 - qt.mu_sq_2 - qt.mu_sq_3 - qt.mu_sq_4
        L0 = quad_L0(qt)
        if denom == 0:
            return [*qt.mu_sqs, L0, float("nan"), float("nan"), True]
        L1, Lx = quad_L1_plus_weight(qt)
        rhs = -2.0 * (L1 + Lx) / denom
        residual = abs(L0 - rhs) / (abs(L0) + 1e-30)
        return [*qt.mu_sqs, L0, rhs, residual, False]

    rows = _map_cells(cell, list(range(trials)), threads)
    residuals = [row[6] for row in rows if not row[7]]
    summary = {
        "max_residual": max(residuals) if residuals else float("nan"),
        "n_tuples": trials,
        "n_resonant": sum(1 for row in rows if row[7]),
        "exhaustive": False,
    }
    derived = {"Q": 2 * K + 2, "mu_sq_max": int(2 * d * K + d)}
    return DriverResult(columns, rows, summary, derived, [], {})


def _run_orthogonality(resolved: dict, threads: int) -> DriverResult:
    d, K, seed, trials = resolved["d"], resolved["K"], resolved["seed"], resolved["trials"]
    basis = HermiteBasis(d, K)
    ground = MultiIndex((0,) * d)
    trio = [SpectralField.from_mode(basis, ground) for _ in range(3)]
    lambda1_list = [math.sqrt(2 * m + d) for m in range(K + 1)]
    res = almost_orthogonality_scan(
        basis, lambda1_list, *trio, trials=trials, seed=seed, C0=_ORTHO_C0
    )
    rows = [
        [int(round(lam * lam)), float(val)]
        for lam, val in zip(res["lambda1"], res["max_abs_L0"])
    ]
    columns = ["lambda1_sq", "max_abs_L0"]
    summary = {
        "fit": _fit_summary(res["fit"]),
        "slope": res["fit"].slope if res["fit"] is not None else float("nan"),
        "n_admissible": len(rows),
        "empty_window": bool(res["empty"]),
    }
    derived = {"C0": _ORTHO_C0, "trio_mu_sq": [d, d, d], "Q": 2 * K + 2}
    return DriverResult(columns, rows, summary, derived, [], {})


def _run_bilinear_common(resolved: dict, threads: int, word_a: PWord) -> DriverResult:
    word_b = PWord.identity()
    d, seed = resolved["d"], resolved["seed"]
    N_list, M_list = resolved["N_list"], resolved["M_list"]
    T, trials = resolved["T"], resolved["trials"]
    max_ord = max(word_a.order, word_b.order)
    K_needed = bilinear_min_K(max(max(N_list), max(M_list))) + max_ord
    resolved_extra = {}
    if resolved["K"] is None:
        K = K_needed
        resolved_extra["K"] = K
    else:
        K = resolved["K"]
    axis_basis = HermiteBasis(1, K)
    axis_basis.rule, axis_basis.values  # build the shared tables up front

    cells = [(int(N), int(M)) for M in M_list for N in N_list]

    def cell(nm):
        N, M = nm
        return derivative_bilinear_ratio(
            axis_basis, d, word_a, word_b, N, M, T, trials, seed
        )

    results = _map_cells(cell, cells, threads)
    columns = ["N", "M", "trial", "raw_norm", "ratio"]
    rows = []
    for (N, M), res in zip(cells, results):
        for i, (raw, ratio) in enumerate(zip(res["raws"], res["ratios"])):
            rows.append([N, M, i, float(raw), float(ratio)])
    by_cell = {nm: res for nm, res in zip(cells, results)}
    per_M = {}
    for M in M_list:
        Ns = sorted({int(N) for N in N_list})
        raw_max = {N: by_cell[(N, M)]["raw_max"] for N in Ns}
        ratio_max = {N: by_cell[(N, M)]["ratio_max"] for N in Ns}
        entry = {
            "raw_max_by_N": {str(N): raw_max[N] for N in Ns},
            "ratio_max_by_N": {str(N): ratio_max[N] for N in Ns},
        }
        if len(Ns) >= 2:
            fit = fit_power_law(Ns, [raw_max[N] for N in Ns])
            entry["raw_exponent"] = fit.slope
            entry["raw_fit"] = _fit_summary(fit)
            entry["ratio_top_over_prev"] = ratio_max[Ns[-1]] / ratio_max[Ns[-2]]
        per_M[str(M)] = entry
    summary = {"per_M": per_M, "word_a": _word_label(word_a), "word_b": _word_label(word_b)}
    derived = {
        "K": K,
        "K_needed": K_needed,
        "Q": 2 * K + 2,
        "time_nodes_max": 8 * max(8, 2 * max(N_list)) * max(1, int(math.ceil(T / math.pi - 1e-12))),
        "normalization_by_cell": {f"N={N},M={M}": by_cell[(N, M)]["normalization"] for (N, M) in cells},
    }
    return DriverResult(columns, rows, summary, derived, [], resolved_extra)


def _run_bilinear(resolved: dict, threads: int) -> DriverResult:
    return _run_bilinear_common(resolved, threads, PWord.identity())


def _run_bilinear_derivative(resolved: dict, threads: int) -> DriverResult:
    return _run_bilinear_common(resolved, threads, PWord.grad(axis=1))


def _all_words_up_to_order2(d: int) -> list[tuple[str, PWord]]:
    singles = [PWord.grad(ax) for ax in range(1, d + 1)]
    singles += [PWord.x(ax) for ax in range(1, d + 1)]
    words = [PWord.identity()] + singles
    words += [w1.then(w2) for w1 in singles for w2 in singles]
    return [(_word_label(w), w) for w in words]


def _run_bernstein(resolved: dict, threads: int) -> DriverResult:
    d, seed, trials = resolved["d"], resolved["seed"], resolved["trials"]
    N_list = resolved["N_list"]
    N_max = max(N_list)
    K_needed = (2 * N_max * N_max - d - 1) // 2  # largest degree inside the top window
    resolved_extra = {}
    if resolved["K"] is None:
        K = K_needed
        resolved_extra["K"] = K
    else:
        K = resolved["K"]
    basis = HermiteBasis(d, K)  # ladder algebra only; quadrature tables stay unbuilt
    words = _all_words_up_to_order2(d)
    cells = [(label, word, int(N)) for (label, word) in words for N in N_list]

    def cell(args):
        _, word, N = args
        return bernstein_ratio(basis, word, N, trials, seed)

    ratios = _map_cells(cell, cells, threads)
    columns = ["N", "word", "ratio"]
    rows = [[N, label, float(r)] for (label, _, N), r in zip(cells, ratios)]
    per_word = {}
    Ns = sorted({int(N) for N in N_list})
    for label, _ in words:
        by_N = {N: r for (lab, _, N), r in zip(cells, ratios) if lab == label}
        entry = {"ratio_by_N": {str(N): by_N[N] for N in Ns}}
        if len(Ns) >= 2:
            entry["top_over_prev"] = by_N[Ns[-1]] / by_N[Ns[-2]]
        per_word[label] = entry
    window_sizes = {}
    lsq = basis.lambda_sq
    for N in Ns:
        window_sizes[str(N)] = int(((4 * lsq > N * N) & (lsq < 2 * N * N)).sum())
    summary = {
        "per_word": per_word,
        "max_top_over_prev": max(
            (e["top_over_prev"] for e in per_word.values() if "top_over_prev" in e),
            default=float("nan"),
        ),
        "n_words": len(words),
    }
    derived = {"K": K, "K_needed": K_needed, "window_sizes": window_sizes}
    return DriverResult(columns, rows, summary, derived, [], resolved_extra)


def _increment_datum(basis: HermiteBasis, seed: int) -> SpectralField:
    """Unit-mass random body below degree _INC_BODY_DEG_CUT plus a band on the top
    three degree shells.

    The band shells are mutually connected by degree-conserving (resonant) cubic
    interactions, so mass flows across the top eigenvalue cut at an O(t) rate; the
    narrowest I-cutoffs see that flux through their multiplier and stay strictly
    above the splitting-drift floor."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 101)))
    deg = (basis.lambda_sq - basis.d) // 2
    shape = deg.shape
    body = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    body *= np.exp(-deg / _INC_BODY_DECAY)
    body[deg > _INC_BODY_DEG_CUT] = 0.0
    body /= np.linalg.norm(body)
    band = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    band[deg < deg.max() - 2] = 0.0
    band *= _INC_RING_AMP / np.linalg.norm(band)
    return SpectralField(basis, body + band)


def _run_energy_increment(resolved: dict, threads: int) -> DriverResult:
    d, K, s, seed = resolved["d"], resolved["K"], resolved["s"], resolved["seed"]
    N_list, dt, T = resolved["N_list"], resolved["dt"], resolved["T"]
    basis = HermiteBasis(d, K)
    u0 = _increment_datum(basis, seed)
    cfg = SolverConfig(dt=dt, T=T, record_every=_INC_RECORD_EVERY)
    res = energy_increment_scan(u0, s, N_list, cfg)
    Ns = [int(N) for N in N_list]
    rows = [[N, float(res["increments"][N])] for N in Ns]
    columns = ["N", "sup_increment"]
    incs = [res["increments"][N] for N in sorted(Ns)]
    strictly_decreasing = all(a > b for a, b in zip(incs, incs[1:]))
    fit = res["fit"]
    summary = {
        "increments": {str(N): float(res["increments"][N]) for N in Ns},
        "strictly_decreasing": strictly_decreasing,
        "alpha": -fit.slope if fit is not None else float("nan"),
        "fit": _fit_summary(fit),
        "diagnostics": res["diagnostics"],
        "n_records": res["n_records"],
    }
    delta_by_N = {}
    for N in Ns:
        iu = apply_I(u0, IOperatorSpec(N=N, s=s))
        h1 = sobolev_norm(iu, 1.0)
        delta_by_N[str(N)] = min(1.0, 1.0 / (h1 * h1))
    derived = {
        "delta_by_N": delta_by_N,
        "record_every": _INC_RECORD_EVERY,
        "datum": {
            "body_decay": _INC_BODY_DECAY,
            "body_degree_cut": _INC_BODY_DEG_CUT,
            "ring_amplitude": _INC_RING_AMP,
            "ring_degree": int(2 * K),
        },
        "Q": 2 * K + 2,
    }
    taints = ["solver_spillage"] if res["diagnostics"]["tainted"] else []
    return DriverResult(columns, rows, summary, derived, taints, {})


def _growth_datum(basis: HermiteBasis, seed: int, s: float) -> SpectralField:
    rng = np.random.default_rng(np.random.SeedSequence((seed, 202)))
    deg = (basis.lambda_sq - basis.d) // 2
    coeffs = rng.standard_normal(deg.shape) + 1j * rng.standard_normal(deg.shape)
    coeffs *= np.exp(-deg / _GROWTH_BODY_DECAY)
    coeffs[deg > _GROWTH_DEG_CUT] = 0.0
    u = SpectralField(basis, coeffs)
    u.coeffs *= _GROWTH_HS_NORM / sobolev_norm(u, s)
    return u


def _run_norm_growth(resolved: dict, threads: int) -> DriverResult:
    d, K, s, seed = resolved["d"], resolved["K"], resolved["s"], resolved["seed"]
    dt, T = resolved["dt"], resolved["T"]
    basis = HermiteBasis(d, K)
    u0 = _growth_datum(basis, seed, s)
    cfg = SolverConfig(dt=dt, T=T, record_every=_GROWTH_RECORD_EVERY)
    res = norm_growth_experiment(u0, s, cfg)
    columns = ["branch", "t", "hs_norm", "running_max"]
    rows = []
    for branch in ("nonlinear", "linear"):
        br = res[branch]
        for t, hs, rm in zip(br["times"], br["hs_norms"], br["running_max"]):
            rows.append([branch, float(t), float(hs), float(rm)])
    summary = {
        "exponent_nonlinear": res["nonlinear"]["exponent"],
        "exponent_linear": res["linear"]["exponent"],
        "fit_nonlinear": _fit_summary(res["nonlinear"]["fit"]),
        "fit_linear": _fit_summary(res["linear"]["fit"]),
        "diagnostics_nonlinear": res["nonlinear"]["diagnostics"],
        "diagnostics_linear": res["linear"]["diagnostics"],
    }
    taints = []
    if res["nonlinear"]["diagnostics"]["tainted"]:
        taints.append("solver_spillage_nonlinear")
    if res["linear"]["diagnostics"]["tainted"]:
        taints.append("solver_spillage_linear")
    derived = {
        "record_every": _GROWTH_RECORD_EVERY,
        "datum": {
            "body_decay": _GROWTH_BODY_DECAY,
            "degree_cut": _GROWTH_DEG_CUT,
            "hs_norm": _GROWTH_HS_NORM,
        },
        "Q": 2 * K + 2,
    }
    return DriverResult(columns, rows, summary, derived, taints, {})


def _conservation_datum(basis: HermiteBasis, seed: int) -> SpectralField:
    rng = np.random.default_rng(np.random.SeedSequence((seed, 303)))
    deg = (basis.lambda_sq - basis.d) // 2
    coeffs = rng.standard_normal(deg.shape) + 1j * rng.standard_normal(deg.shape)
    coeffs *= np.exp(-deg / _CONS_BODY_DECAY)
    coeffs[deg > _CONS_DEG_CUT] = 0.0
    coeffs *= math.sqrt(_CONS_MASS) / np.linalg.norm(coeffs)
    return SpectralField(basis, coeffs)


def _run_conservation(resolved: dict, threads: int) -> DriverResult:
    d, K, s, seed = resolved["d"], resolved["K"], resolved["s"], resolved["seed"]
    dt, T = resolved["dt"], resolved["T"]
    basis = HermiteBasis(d, K)
    u0 = _conservation_datum(basis, seed)
    cfg = SolverConfig(dt=dt, T=T, record_every=_CONS_RECORD_EVERY)
    reports, diagnostics = evolve(u0, cfg, ispec=None, s_values=(float(s),))
    columns = ["t", "mass", "energy", "modified_energy", "hs_norm_s"]
    rows = [
        [float(r.t), float(r.mass), float(r.energy), float(r.modified_energy),
         float(r.hs_norms[float(s)])]
        for r in reports
    ]
    mass0, e0 = reports[0].mass, reports[0].energy
    mass_drift_rel = max(abs(r.mass - mass0) for r in reports) / mass0
    energy_drift = max(abs(r.energy - e0) for r in reports)
    summary = {
        "mass_drift_rel": mass_drift_rel,
        "energy_drift": energy_drift,
        "diagnostics": diagnostics,
        "n_records": len(reports),
    }
    derived = {
        "record_every": _CONS_RECORD_EVERY,
        "datum": {
            "body_decay": _CONS_BODY_DECAY,
            "degree_cut": _CONS_DEG_CUT,
            "mass": _CONS_MASS,
        },
        "Q": 2 * K + 2,
    }
    taints = ["solver_spillage"] if diagnostics["tainted"] else []
    return DriverResult(columns, rows, summary, derived, taints, {})


EXPERIMENTS: dict[str, tuple] = {
    "identity_k1": (_run_identity_k1, "quadrilinear identity residuals over eigenspace tuples"),
    "orthogonality": (_run_orthogonality, "decay of the quadrilinear form in the separated eigenvalue"),
    "bilinear": (_run_bilinear, "bilinear space-time norms of wave-packet pairs across dyadic windows"),
    "bilinear_derivative": (_run_bilinear_derivative, "bilinear norms with a gradient word on the high-frequency factor"),
    "bernstein": (_run_bernstein, "ladder-word operator norms on dyadic windows vs N^order"),
    "energy_increment": (_run_energy_increment, "modified-energy increments across I-operator cutoffs"),
    "norm_growth": (_run_norm_growth, "long-time Sobolev growth with linear control run"),
    "conservation": (_run_conservation, "mass/energy drift of the splitting scheme"),
}


# --------------------------------------------------------------------------
# Run + CLI entry points
# --------------------------------------------------------------------------

def run(cfg: ExperimentConfig, output_dir: str | None = None,
        threads: int = 1, seed_override: bool = False) -> int:
    """Execute one experiment; write results.csv + manifest.json; return exit code."""
    t_start = time.perf_counter()
    resolved, defaults_applied = _resolve(cfg)
    if output_dir is not None:
        resolved["output_dir"] = output_dir
        defaults_applied.pop("output_dir", None)
    driver = EXPERIMENTS[cfg.experiment][0]
    result = driver(resolved, threads)
    for key, value in result.resolved_extra.items():
        resolved[key] = value
        defaults_applied[key] = value
    out_dir = resolved["output_dir"]
    os.makedirs(out_dir, exist_ok=True)
    _write_csv(os.path.join(out_dir, "results.csv"), result.columns, result.rows)
    manifest = {
        "config_echo": cfg.raw_text,
        "csv_columns": result.columns,
        "defaults_applied": defaults_applied,
        "derived": result.derived,
        "experiment": cfg.experiment,
        "resolved_config": resolved,
        "seed_override": bool(seed_override),
        "summary": result.summary,
        "taint": {"tainted": bool(result.taints), "flags": result.taints},
        "version": __version__,
        "wall_time_s": time.perf_counter() - t_start,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(_jsonable(manifest), f, sort_keys=True, indent=2)
        f.write("\n")
    print(
        f"{cfg.experiment}: wrote {len(result.rows)} rows to {out_dir}/results.csv"
        + (f" [tainted: {', '.join(result.taints)}]" if result.taints else "")
    )
    return 2 if result.taints else 0


def _threads_arg(value: int | None) -> int:
    if value is None:
        env = os.environ.get("OSCILLAB_THREADS", "")
        if not env:
            return 1
        try:
            value = int(env)
        except ValueError:
            raise ConfigError("OSCILLAB_THREADS", f"OSCILLAB_THREADS must be an integer, got {env!r}")
    if value < 1:
        raise ConfigError("threads", f"threads must be >= 1, got {value}")
    return value


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="oscillab",
        description="Hermite-spectral experiments for the cubic NLS with harmonic potential",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to a JSON or key=value config file")
    p_run.add_argument("--output-dir", default=None, help="override output_dir")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--threads", type=int, default=None,
                       help="parallel scan cells (default: OSCILLAB_THREADS or 1)")
    p_val = sub.add_parser("validate", help="parse a config and print the resolved settings")
    p_val.add_argument("config")
    sub.add_parser("list-experiments", help="list experiment names")
    args = parser.parse_args(argv)

    if args.command == "list-experiments":
        for name, (_, description) in EXPERIMENTS.items():
            print(f"{name}: {description}")
        return 0

    try:
        with open(args.config, encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        print(f"error: cannot read config file: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(f"config error [{exc.key}]: {exc}", file=sys.stderr)
        return 1

    if args.command == "validate":
        resolved, defaults_applied = _resolve(cfg)
        print(json.dumps(
            _jsonable({"resolved_config": resolved, "defaults_applied": defaults_applied}),
            sort_keys=True, indent=2,
        ))
        return 0

    seed_override = args.seed is not None
    if seed_override:
        if args.seed < 0:
            print("config error [seed]: seed must be >= 0", file=sys.stderr)
            return 1
        cfg = replace(cfg, seed=args.seed)
    try:
        threads = _threads_arg(args.threads)
        return run(cfg, output_dir=args.output_dir, threads=threads,
                   seed_override=seed_override)
    except ConfigError as exc:
        print(f"config error [{exc.key}]: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
