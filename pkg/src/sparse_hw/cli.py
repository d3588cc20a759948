"""Command line interface.

Every experiment subcommand reads a JSON config (schema-validated, seed
mandatory), runs deterministically given (config, seed, threads), and
emits a JSON report plus CSV sidecars.  Numeric results are
bit-identical for any --threads value; only wall_clock_s varies.

Exit codes: 0 success, 1 a verification verdict failed, 2 usage or
config error, 3 a compute budget guard tripped.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import bounds as bd
from . import covest as cv
from . import matrix_norms as mn
from . import quadform_mc as qf
from . import sketchlr as sk
from .errors import BudgetExceededError, ConfigError
from .rv_models import (
    AlphaParam,
    DistributionSpec,
    SparseModel,
    model_psi_alpha,
    sample_base,
    sample_sparse_matrix,
)
from .streams import stream

THREADS_ENV_VAR = "SPARSE_HW_THREADS"

# ---------------------------------------------------------------- schemas

_BASE_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["weibull", "gaussian", "rademacher"]},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 2},
        "scale": {"type": "number", "exclusiveMinimum": 0},
        "unit_variance": {"type": "boolean"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_MATRIX_SCHEMA = {
    "type": "object",
    "properties": {
        "csv": {"type": "string"},
        "bin": {"type": "string"},
        "values": {"type": "array"},
        "kind": {"enum": ["exchange", "identity", "random_dense", "random_rect", "random_lowrank"]},
        "n": {"type": "integer", "minimum": 1},
        "rows": {"type": "integer", "minimum": 1},
        "cols": {"type": "integer", "minimum": 1},
        "rank": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "diagonal_free": {"type": "boolean"},
        "scale": {"type": "number"},
    },
    "additionalProperties": False,
}

_VECTOR_SCHEMA = {
    "type": "object",
    "properties": {
        "values": {"type": "array", "items": {"type": "number"}},
        "kind": {"enum": ["ones", "e1", "random_unit"]},
        "n": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
    },
    "additionalProperties": False,
}

_PROBS_SCHEMA = {
    "anyOf": [
        {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}, "minItems": 1},
    ]
}

_MODEL_SCHEMA = {
    "type": "object",
    "properties": {
        "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 2},
        "p": _PROBS_SCHEMA,
        "base": _BASE_SCHEMA,
    },
    "required": ["alpha", "p"],
    "additionalProperties": False,
}

_TGRID_SCHEMA = {
    "type": "object",
    "properties": {
        "values": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "kind": {"enum": ["linear", "log"]},
        "start": {"type": "number", "exclusiveMinimum": 0},
        "stop": {"type": "number", "exclusiveMinimum": 0},
        "num": {"type": "integer", "minimum": 2},
    },
    "additionalProperties": False,
}

_CONSTANTS_SCHEMA = {
    "type": "object",
    "properties": {
        "c_alpha": {"type": "number", "exclusiveMinimum": 0},
        "prefactor": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

_L_SCHEMA = {"anyOf": [{"enum": ["auto"]}, {"type": "number", "exclusiveMinimum": 0}]}

_SCHEMAS = {
    "hw-verify": {
        "type": "object",
        "properties": {
            "matrix": _MATRIX_SCHEMA,
            "model": _MODEL_SCHEMA,
            "t_grid": _TGRID_SCHEMA,
            "n_samples": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer"},
            "threads": {"type": "integer", "minimum": 1},
            "constants": _CONSTANTS_SCHEMA,
            "L": _L_SCHEMA,
            "rel_slack": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        },
        "required": ["matrix", "model", "t_grid", "n_samples", "seed"],
        "additionalProperties": False,
    },
    "bernstein-verify": {
        "type": "object",
        "properties": {
            "vector": _VECTOR_SCHEMA,
            "model": _MODEL_SCHEMA,
            "t_grid": _TGRID_SCHEMA,
            "n_samples": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer"},
            "threads": {"type": "integer", "minimum": 1},
            "constants": _CONSTANTS_SCHEMA,
            "L": _L_SCHEMA,
            "rel_slack": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        },
        "required": ["vector", "model", "t_grid", "n_samples", "seed"],
        "additionalProperties": False,
    },
    "covest": {
        "type": "object",
        "properties": {
            "b": _MATRIX_SCHEMA,
            "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 2},
            "p": _PROBS_SCHEMA,
            "n": {"type": "integer", "minimum": 1},
            "replicates": {"type": "integer", "minimum": 2},
            "seed": {"type": "integer"},
            "tol_se": {"type": "number", "exclusiveMinimum": 0},
            "save_first_draw": {"type": "boolean"},
        },
        "required": ["b", "alpha", "p", "n", "replicates", "seed"],
        "additionalProperties": False,
    },
    "rip": {
        "type": "object",
        "properties": {
            "b": _MATRIX_SCHEMA,
            "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 2},
            "p": _PROBS_SCHEMA,
            "n": {"type": "integer", "minimum": 1},
            "k": {"type": "integer", "minimum": 1},
            "t_values": {
                "type": "array",
                "items": {"type": "number", "exclusiveMinimum": 0},
                "minItems": 1,
            },
            "replicates": {"type": "integer", "minimum": 10},
            "theta_budget": {"type": "integer", "minimum": 0},
            "seed": {"type": "integer"},
            "rel_slack": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        },
        "required": ["b", "alpha", "p", "n", "k", "t_values", "replicates", "seed"],
        "additionalProperties": False,
    },
    "sketch": {
        "type": "object",
        "properties": {
            "x": _MATRIX_SCHEMA,
            "p": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "r_values": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            "n_seeds": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer"},
            "xi": {"enum": ["gaussian", "rademacher"]},
            "eta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "c1": {"type": "number", "exclusiveMinimum": 0},
            "allow_wide": {"type": "boolean"},
        },
        "required": ["x", "p", "r_values", "seed"],
        "additionalProperties": False,
    },
    "sample": {
        "type": "object",
        "properties": {
            "base": _BASE_SCHEMA,
            "p": _PROBS_SCHEMA,
            "dim": {"type": "integer", "minimum": 1},
            "n": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer"},
        },
        "required": ["base", "n", "seed"],
        "additionalProperties": False,
    },
    "bound-table": {
        "type": "object",
        "properties": {
            "matrix": _MATRIX_SCHEMA,
            "model": _MODEL_SCHEMA,
            "t_grid": _TGRID_SCHEMA,
            "constants": _CONSTANTS_SCHEMA,
            "L": _L_SCHEMA,
            "seed": {"type": "integer"},
        },
        "required": ["matrix", "model", "t_grid", "seed"],
        "additionalProperties": False,
    },
}

# ---------------------------------------------------------------- builders


def _load_config(path: str, command: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(cfg, _SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config rejected: {exc.message}") from exc
    return cfg


def _config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _build_matrix(cfg: dict) -> np.ndarray:
    if "csv" in cfg:
        return mn.load_matrix_csv(cfg["csv"])
    if "bin" in cfg:
        return mn.load_matrix_bin(cfg["bin"])
    if "values" in cfg:
        return np.asarray(cfg["values"], dtype=float)
    kind = cfg.get("kind")
    if kind is None:
        raise ConfigError("matrix spec needs csv, bin, values, or kind")
    if kind == "exchange":
        n = cfg["n"]
        if n < 2:
            raise ConfigError("exchange matrix needs n >= 2")
        a = np.zeros((n, n))
        a[0, 1] = a[1, 0] = 1.0
        return a
    if kind == "identity":
        return np.eye(cfg["n"])
    if kind == "random_dense":
        n = cfg["n"]
        rng = stream(cfg.get("seed", 0), 1001)
        g = rng.standard_normal((n, n))
        a = 0.5 * (g + g.T) * cfg.get("scale", 1.0)
        if cfg.get("diagonal_free", False):
            np.fill_diagonal(a, 0.0)
        return a
    if kind == "random_rect":
        rng = stream(cfg.get("seed", 0), 1002)
        return rng.standard_normal((cfg["rows"], cfg["cols"])) * cfg.get("scale", 1.0)
    if kind == "random_lowrank":
        rng = stream(cfg.get("seed", 0), 1003)
        rank = cfg["rank"]
        left = rng.standard_normal((cfg["rows"], rank))
        right = rng.standard_normal((cfg["cols"], rank))
        return left @ right.T * cfg.get("scale", 1.0)
    raise ConfigError(f"unknown matrix kind {kind!r}")


def _build_vector(cfg: dict) -> np.ndarray:
    if "values" in cfg:
        return np.asarray(cfg["values"], dtype=float)
    kind = cfg.get("kind")
    if kind == "ones":
        return np.ones(cfg["n"])
    if kind == "e1":
        v = np.zeros(cfg["n"])
        v[0] = 1.0
        return v
    if kind == "random_unit":
        rng = stream(cfg.get("seed", 0), 1004)
        v = rng.standard_normal(cfg["n"])
        return v / np.linalg.norm(v)
    raise ConfigError("vector spec needs values or kind")


def _build_base(cfg: dict | None, alpha: float) -> DistributionSpec:
    if cfg is None:
        return DistributionSpec(kind="weibull", alpha=alpha)
    return DistributionSpec(
        kind=cfg["kind"],
        alpha=cfg.get("alpha"),
        scale=cfg.get("scale", 1.0),
        unit_variance=cfg.get("unit_variance", False),
    )


def _build_model(cfg: dict, dim: int) -> tuple[SparseModel, float]:
    alpha = AlphaParam(cfg["alpha"]).value
    p = cfg["p"]
    pvec = tuple([float(p)] * dim) if np.isscalar(p) else tuple(float(v) for v in p)
    if len(pvec) != dim:
        raise ConfigError(f"p has {len(pvec)} entries, instance needs {dim}")
    base = _build_base(cfg.get("base"), alpha)
    return SparseModel(p=pvec, base=base), alpha


def _build_t_grid(cfg: dict) -> np.ndarray:
    if "values" in cfg:
        return np.asarray(cfg["values"], dtype=float)
    for key in ("kind", "start", "stop", "num"):
        if key not in cfg:
            raise ConfigError("t_grid needs values or kind/start/stop/num")
    if cfg["kind"] == "linear":
        return np.linspace(cfg["start"], cfg["stop"], cfg["num"])
    return np.geomspace(cfg["start"], cfg["stop"], cfg["num"])


def _build_constants(cfg: dict | None) -> bd.BoundConstants:
    if cfg is None:
        return bd.DEFAULT_CONSTANTS
    return bd.BoundConstants(
        c_alpha=cfg.get("c_alpha", 1.0), prefactor=cfg.get("prefactor", 2.0)
    )


def _resolve_l(cfg_l, model: SparseModel, alpha: float) -> float:
    if cfg_l is None or cfg_l == "auto":
        return model_psi_alpha(model, alpha)
    return float(cfg_l)


def _resolve_threads(args, cfg: dict) -> int:
    if args.threads is not None:
        n = args.threads
    elif "threads" in cfg:
        n = cfg["threads"]
    else:
        env = os.environ.get(THREADS_ENV_VAR)
        if env is not None:
            try:
                n = int(env)
            except ValueError as exc:
                raise ConfigError(f"{THREADS_ENV_VAR} must be an integer") from exc
        else:
            n = os.cpu_count() or 1
    if n < 1:
        raise ConfigError("threads must be at least 1")
    return n


# ---------------------------------------------------------------- reports


def _write_table(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _emit(outdir: str | None, report: dict, tables: dict[str, tuple[list[str], list]]) -> None:
    if outdir is None:
        print(json.dumps(report, indent=2))
        return
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2)
    for name, (header, rows) in tables.items():
        _write_table(out / f"{name}.csv", header, rows)


def _verdict(name: str, passed: bool, detail: str) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def _finish(outdir, report, tables, verdicts, started) -> int:
    report["verdicts"] = verdicts
    report["wall_clock_s"] = time.time() - started
    _emit(outdir, report, tables)
    failed = [v["name"] for v in verdicts if not v["passed"]]
    if failed:
        print(f"verification failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def _base_report(command: str, cfg: dict, seed: int, threads: int) -> dict:
    return {
        "command": command,
        "config": cfg,
        "config_hash": _config_hash(cfg),
        "seed": seed,
        "threads": threads,
        "version": __version__,
        "results": {},
    }


# ---------------------------------------------------------------- commands


def _cmd_hw_verify(args) -> int:
    started = time.time()
    cfg = _load_config(args.config, "hw-verify")
    seed = args.seed if args.seed is not None else cfg["seed"]
    threads = _resolve_threads(args, cfg)
    a = bd.symmetrize(_build_matrix(cfg["matrix"]))
    model, alpha = _build_model(cfg["model"], a.shape[0])
    t_grid = _build_t_grid(cfg["t_grid"])
    constants = _build_constants(cfg.get("constants"))
    report = _base_report("hw-verify", cfg, seed, threads)

    if not np.any(a):
        report["results"]["degenerate"] = True
        return _finish(
            args.out,
            report,
            {},
            [_verdict("degenerate_instance", True, "zero matrix; nothing to verify")],
            started,
        )

    L = _resolve_l(cfg.get("L"), model, alpha)
    inst = qf.QuadFormInstance(a, model)
    tail = qf.simulate_tail(inst, t_grid, cfg["n_samples"], seed, threads=threads)
    tn = tail.t_grid / L**2
    two_regime = bd.TailBound(bd.hw_sparse_regimes(a, model.p_array(), alpha), constants)
    exps = {"sparse_alpha": two_regime.exponent(tn)}
    probs = {"sparse_alpha": two_regime.prob(tn)}
    if alpha <= 1.0:
        refined = bd.TailBound(bd.f_sparse_regimes(a, model.p_array(), alpha), constants)
        exps["sparse_alpha_refined"] = refined.exponent(tn)
        probs["sparse_alpha_refined"] = refined.prob(tn)
    shape_name = "sparse_alpha_refined" if alpha <= 1.0 else "sparse_alpha"

    verdicts = []
    results = report["results"]
    results["L"] = L
    results["center"] = inst.mean()
    results["survival"] = tail.survival.tolist()
    results["t_grid"] = tail.t_grid.tolist()
    results["bounds"] = {k: np.asarray(v).tolist() for k, v in probs.items()}
    try:
        dom = qf.dominance_check(tail, exps[shape_name], rel_slack=cfg.get("rel_slack", 0.1))
        results["dominance"] = {
            "shape": shape_name,
            "c_hat": dom.c_hat,
            "ok": dom.ok,
            "n_points": dom.n_points,
            "min_margin": dom.min_margin,
            "t_calibration": dom.t_calibration,
        }
        verdicts.append(
            _verdict(
                "tail_dominates_calibrated_exponent",
                dom.ok,
                f"c_hat={dom.c_hat:.4g} over {dom.n_points} grid points",
            )
        )
    except ValueError as exc:
        verdicts.append(_verdict("tail_dominates_calibrated_exponent", False, str(exc)))
    try:
        fit = qf.tail_slope_fit(tail)
        results["slope_fit"] = {
            "slope": fit.slope,
            "r_squared": fit.r_squared,
            "n_points": fit.n_points,
            "t_window": list(fit.t_window),
        }
    except ValueError as exc:
        results["slope_fit"] = {"error": str(exc)}

    tables = {
        "tail": (
            ["t", "survival", "ci_low", "ci_high"],
            np.column_stack([tail.t_grid, tail.survival, tail.ci_low, tail.ci_high]),
        ),
        "bounds": (
            ["t"] + list(probs),
            np.column_stack([tail.t_grid] + [np.asarray(probs[k]) for k in probs]),
        ),
    }
    return _finish(args.out, report, tables, verdicts, started)


def _cmd_bernstein_verify(args) -> int:
    started = time.time()
    cfg = _load_config(args.config, "bernstein-verify")
    seed = args.seed if args.seed is not None else cfg["seed"]
    threads = _resolve_threads(args, cfg)
    a = _build_vector(cfg["vector"])
    model, alpha = _build_model(cfg["model"], a.size)
    if alpha > 1.0:
        raise ConfigError("linear-form verification needs alpha in (0, 1]")
    t_grid = _build_t_grid(cfg["t_grid"])
    constants = _build_constants(cfg.get("constants"))
    report = _base_report("bernstein-verify", cfg, seed, threads)

    if not np.any(a):
        report["results"]["degenerate"] = True
        return _finish(
            args.out,
            report,
            {},
            [_verdict("degenerate_instance", True, "zero vector; nothing to verify")],
            started,
        )

    L = _resolve_l(cfg.get("L"), model, alpha)
    tail = qf.simulate_linear_tail(a, model, t_grid, cfg["n_samples"], seed, threads=threads)
    q = model.p_array()
    regimes = (
        (L * math.sqrt(float(a * a @ q)), 2.0),
        (L * float(np.max(np.abs(a))), alpha),
    )
    tb = bd.TailBound(regimes, constants)
    exps = tb.exponent(tail.t_grid)
    probs = tb.prob(tail.t_grid)

    verdicts = []
    results = report["results"]
    results["L"] = L
    results["survival"] = tail.survival.tolist()
    results["t_grid"] = tail.t_grid.tolist()
    results["bound"] = np.asarray(probs).tolist()
    try:
        dom = qf.dominance_check(tail, exps, rel_slack=cfg.get("rel_slack", 0.1))
        results["dominance"] = {"c_hat": dom.c_hat, "ok": dom.ok, "n_points": dom.n_points}
        verdicts.append(
            _verdict(
                "tail_dominates_calibrated_exponent",
                dom.ok,
                f"c_hat={dom.c_hat:.4g} over {dom.n_points} grid points",
            )
        )
    except ValueError as exc:
        verdicts.append(_verdict("tail_dominates_calibrated_exponent", False, str(exc)))
    try:
        fit = qf.tail_slope_fit(tail)
        results["slope_fit"] = {"slope": fit.slope, "r_squared": fit.r_squared}
    except ValueError as exc:
        results["slope_fit"] = {"error": str(exc)}

    tables = {
        "tail": (
            ["t", "survival", "ci_low", "ci_high"],
            np.column_stack([tail.t_grid, tail.survival, tail.ci_low, tail.ci_high]),
        ),
        "bounds": (["t", "bound"], np.column_stack([tail.t_grid, np.asarray(probs)])),
    }
    return _finish(args.out, report, tables, verdicts, started)


def _cmd_covest(args) -> int:
    started = time.time()
    cfg = _load_config(args.config, "covest")
    seed = args.seed if args.seed is not None else cfg["seed"]
    threads = _resolve_threads(args, cfg)
    b = _build_matrix(cfg["b"])
    p = cfg["p"]
    pvec = tuple([float(p)] * b.shape[0]) if np.isscalar(p) else tuple(float(v) for v in p)
    model = cv.MultivariateModel(b=b, alpha=cfg["alpha"], p=pvec)
    tol_se = cfg.get("tol_se", 4.0)
    report = _base_report("covest", cfg, seed, threads)

    mean, se = cv.ipw_replicate_stats(model, cfg["n"], cfg["replicates"], seed)
    sigma = model.sigma()
    dev = np.abs(mean - sigma)
    floor = 1e-12 * max(1.0, float(np.abs(sigma).max()))
    z = dev / np.maximum(se, floor)
    max_z = float(z.max())
    ok = max_z <= tol_se

    results = report["results"]
    results["sigma"] = sigma.tolist()
    results["estimator_mean"] = mean.tolist()
    results["estimator_se"] = se.tolist()
    results["max_abs_deviation"] = float(dev.max())
    results["max_z_score"] = max_z
    results["tol_se"] = tol_se
    verdicts = [
        _verdict(
            "ipw_estimator_unbiased",
            ok,
            f"max |mean - sigma| = {max_z:.3f} standard errors (allowed {tol_se})",
        )
    ]
    d = b.shape[0]
    idx = [(i, j) for i in range(d) for j in range(d)]
    tables = {
        "estimates": (
            ["row", "col", "sigma", "mean", "se"],
            [[i, j, sigma[i, j], mean[i, j], se[i, j]] for i, j in idx],
        )
    }
    if cfg.get("save_first_draw", False) and args.out is not None:
        values, masks = cv.generate_samples(model, cfg["n"], seed, stream_id=0)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        cv.save_samples(out / "draw", model, values, masks, seed)
    return _finish(args.out, report, tables, verdicts, started)


def _cmd_rip(args) -> int:
    started = time.time()
    cfg = _load_config(args.config, "rip")
    seed = args.seed if args.seed is not None else cfg["seed"]
    threads = _resolve_threads(args, cfg)
    b = _build_matrix(cfg["b"])
    p = cfg["p"]
    pvec = tuple([float(p)] * b.shape[0]) if np.isscalar(p) else tuple(float(v) for v in p)
    model = cv.MultivariateModel(b=b, alpha=cfg["alpha"], p=pvec)
    n = cfg["n"]
    k = cfg["k"]
    t_values = sorted(float(t) for t in cfg["t_values"])
    replicates = cfg["replicates"]
    sigma = model.sigma()
    report = _base_report("rip", cfg, seed, threads)

    rips = np.empty(replicates)
    for i in range(replicates):
        values, _ = cv.generate_samples(model, n, seed, stream_id=i)
        rips[i] = cv.rip_k(cv.ipw_estimator(values, model.p_array()) - sigma, k)

    rhs = {
        t: cv.rip_bound_rhs(
            t, k, model, n, theta_budget=cfg.get("theta_budget", 128), seed=seed
        ).value
        for t in t_values
    }
    quantiles = {
        t: float(np.quantile(rips, max(0.0, 1.0 - 2.0 * math.exp(-t)))) for t in t_values
    }
    # tail bounds bind in the deep tail: anchor the constant at the
    # largest t, then the shallower quantile levels must stay dominated
    t0 = t_values[-1]
    c_hat = quantiles[t0] / rhs[t0]
    slack = cfg.get("rel_slack", 0.0)
    ok = all(quantiles[t] <= c_hat * rhs[t] * (1 + slack) + 1e-12 for t in t_values)
    results = report["results"]
    results["rip_quantiles"] = {str(t): quantiles[t] for t in t_values}
    results["bound_rhs"] = {str(t): rhs[t] for t in t_values}
    results["c_hat"] = c_hat
    results["rip_mean"] = float(rips.mean())
    verdicts = [
        _verdict(
            "rip_quantile_dominated_by_calibrated_bound",
            ok,
            f"c_hat={c_hat:.4g} fitted at t={t0}",
        )
    ]
    tables = {
        "rip": (
            ["t", "quantile", "bound_rhs"],
            [[t, quantiles[t], rhs[t]] for t in t_values],
        )
    }
    return _finish(args.out, report, tables, verdicts, started)


def _cmd_sketch(args) -> int:
    started = time.time()
    cfg = _load_config(args.config, "sketch")
    seed = args.seed if args.seed is not None else cfg["seed"]
    threads = _resolve_threads(args, cfg)
    x = _build_matrix(cfg["x"])
    p = cfg["p"]
    r_values = sorted(set(int(r) for r in cfg["r_values"]))
    n_seeds = cfg.get("n_seeds", 1)
    xi = cfg.get("xi", "gaussian")
    eta = cfg.get("eta", 0.1)
    c1 = cfg.get("c1", 1.0)
    allow_wide = cfg.get("allow_wide", False)
    report = _base_report("sketch", cfg, seed, threads)

    rows = []
    medians = []
    last_result = None
    for r in r_values:
        errs = []
        for s in range(n_seeds):
            res = sk.low_rank_approx(
                x, r, p, seed + s, xi=xi, eta=eta, c1=c1, allow_wide=allow_wide
            )
            errs.append(res.error_max)
            last_result = res
        med = float(np.median(errs))
        medians.append(med)
        rows.append([r, med, last_result.bound, float(last_result.admissible)])

    results = report["results"]
    results["r_values"] = r_values
    results["median_error"] = medians
    results["detected_rank"] = last_result.detected_rank
    results["truncated"] = last_result.truncated
    verdicts = []
    if len(r_values) >= 2:
        slope = float(
            np.polyfit(np.log(np.asarray(r_values, dtype=float)), np.log(medians), 1)[0]
        )
        results["error_decay_slope"] = slope
        monotone = all(b <= a for a, b in zip(medians, medians[1:]))
        verdicts.append(
            _verdict(
                "median_error_nonincreasing_in_r",
                monotone,
                f"medians {['%.3g' % m for m in medians]}",
            )
        )
    verdicts.append(
        _verdict(
            "sketch_ran",
            last_result.detected_rank >= 1,
            f"detected rank {last_result.detected_rank}",
        )
    )

    tables = {"errors": (["r", "median_error", "bound", "admissible"], rows)}
    if args.out is not None and last_result is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        np.savetxt(out / "factor_left.csv", last_result.fu, delimiter=",")
        np.savetxt(out / "factor_right.csv", last_result.fv, delimiter=",")
        with open(out / "sketch_meta.json", "w") as fh:
            json.dump(
                {
                    "r": last_result.r,
                    "p": last_result.p,
                    "seed": last_result.seed,
                    "scale": last_result.scale,
                    "xi": last_result.xi,
                    "eps": last_result.eps,
                    "error_max": last_result.error_max,
                    "bound": last_result.bound,
                    "admissible": last_result.admissible,
                    "detected_rank": last_result.detected_rank,
                    "truncated": last_result.truncated,
                },
                fh,
                indent=2,
            )
    return _finish(args.out, report, tables, verdicts, started)


def _cmd_norms(args) -> int:
    path = Path(args.matrix)
    if not path.exists():
        raise ConfigError(f"no such matrix file: {path}")
    if args.format == "bin" or (args.format == "auto" and path.suffix == ".bin"):
        a = mn.load_matrix_bin(path)
    else:
        a = mn.load_matrix_csv(path)
    square = a.shape[0] == a.shape[1]
    p = None
    if args.p is not None:
        parts = [float(v) for v in args.p.split(",")]
        p = np.full(a.shape[0], parts[0]) if len(parts) == 1 else np.asarray(parts)
    alpha = args.alpha

    entries: dict[str, float] = {
        "frobenius": mn.frobenius(a),
        "max_abs": mn.max_abs(a),
        "spectral": mn.opnorm(a, 2, 2),
        "op_2_to_inf": mn.opnorm(a, 2, math.inf),
        "op_1_to_2": mn.opnorm(a, 1, 2),
        "op_1_to_inf": mn.opnorm(a, 1, math.inf),
        "mixed_l4_l2": mn.mixed_norm(a, 4.0),
        "mixed_linf_l2": mn.mixed_norm(a, math.inf),
    }
    if alpha is not None:
        al = AlphaParam(alpha)
        if al.value > 1.0:
            astar = al.conjugate
            detail = mn.opnorm_detail(a, al.value, astar)
            entries[f"op_alpha_to_conj(alpha={al.value})"] = detail.value
            entries[f"mixed_conj_l2(alpha={al.value})"] = mn.mixed_norm(a, astar)
        else:
            entries[f"op_alpha_to_conj(alpha={al.value})"] = mn.opnorm(a, 1, math.inf)
    if p is not None and square:
        entries["gamma1"] = mn.gamma1(a, p)
        entries["gamma2"] = mn.gamma2(a, p)
        entries["weighted_spectral"] = mn.weighted_spectral(a, p)
        entries["row_weighted_max"] = mn.row_weighted_max(a, p)
    elif p is not None:
        entries["row_weighted_max"] = mn.row_weighted_max(a, p)

    width = max(len(k) for k in entries)
    for name, value in entries.items():
        print(f"{name:<{width}}  {value:.12g}")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "norms.json", "w") as fh:
            json.dump({"matrix": str(path), "norms": entries}, fh, indent=2)
    return 0


def _cmd_sample(args) -> int:
    started = time.time()
    cfg = _load_config(args.config, "sample")
    seed = args.seed if args.seed is not None else cfg["seed"]
    threads = _resolve_threads(args, cfg)
    base = _build_base(cfg["base"], cfg["base"].get("alpha"))
    n = cfg["n"]
    report = _base_report("sample", cfg, seed, threads)
    diagnostics: dict = {}
    rng = stream(seed, 0)
    if "p" in cfg:
        dim = cfg.get("dim")
        p = cfg["p"]
        pvec = tuple([float(p)] * (dim or 1)) if np.isscalar(p) else tuple(float(v) for v in p)
        model = SparseModel(p=pvec, base=base)
        samples = sample_sparse_matrix(model, n, rng, diagnostics)
        zero_frac = float(np.mean(samples == 0.0))
        report["results"]["zero_fraction"] = zero_frac
    else:
        samples = sample_base(base, n, rng, diagnostics)
    flat = samples.reshape(n, -1)
    report["results"].update(
        {
            "n": n,
            "mean": float(flat.mean()),
            "second_moment": float((flat**2).mean()),
            "max_abs": float(np.abs(flat).max()),
            "clamped": diagnostics.get("clamped", 0),
        }
    )
    tables = {"samples": ([f"x{i}" for i in range(flat.shape[1])], flat)}
    return _finish(args.out, report, tables, [], started)


def _cmd_bound_table(args) -> int:
    started = time.time()
    cfg = _load_config(args.config, "bound-table")
    seed = args.seed if args.seed is not None else cfg["seed"]
    threads = _resolve_threads(args, cfg)
    a = bd.symmetrize(_build_matrix(cfg["matrix"]))
    model, alpha = _build_model(cfg["model"], a.shape[0])
    t_grid = _build_t_grid(cfg["t_grid"])
    constants = _build_constants(cfg.get("constants"))
    L = _resolve_l(cfg.get("L"), model, alpha)
    report = _base_report("bound-table", cfg, seed, threads)
    table = bd.bound_report(a, model.p_array(), alpha, t_grid, L=L, constants=constants)
    report["results"] = table
    names = list(table["bounds"])
    rows = np.column_stack(
        [np.asarray(table["t_grid"])] + [np.asarray(table["bounds"][k]) for k in names]
    )
    tables = {"bounds": (["t"] + names, rows)}
    return _finish(args.out, report, tables, [], started)


# ---------------------------------------------------------------- driver


def _add_common(sub: argparse.ArgumentParser, config_required: bool = True) -> None:
    sub.add_argument("--config", required=config_required, help="JSON config path")
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument("--threads", type=int, default=None, help="worker thread count")
    sub.add_argument("--out", default=None, help="output directory for report and tables")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparse-hw",
        description="Sparse quadratic-form tail bounds: evaluation and Monte Carlo verification",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    handlers = {
        "hw-verify": _cmd_hw_verify,
        "bernstein-verify": _cmd_bernstein_verify,
        "covest": _cmd_covest,
        "rip": _cmd_rip,
        "sketch": _cmd_sketch,
        "sample": _cmd_sample,
        "bound-table": _cmd_bound_table,
    }
    helps = {
        "hw-verify": "simulate a quadratic-form tail and verify the sparse bounds",
        "bernstein-verify": "simulate a linear-form tail and verify its bound",
        "covest": "IPW covariance estimator unbiasedness experiment",
        "rip": "k-sparse deviation concentration experiment",
        "sketch": "sparsified-sketch low-rank approximation",
        "sample": "draw samples from a base law or sparse model",
        "bound-table": "tabulate comparison bounds over a threshold grid",
    }
    for name, handler in handlers.items():
        sub = subs.add_parser(name, help=helps[name])
        _add_common(sub)
        sub.set_defaults(handler=handler)

    norms = subs.add_parser("norms", help="print matrix functionals")
    norms.add_argument("matrix", help="matrix file (CSV, or binary with --format bin)")
    norms.add_argument("--format", choices=["auto", "csv", "bin"], default="auto")
    norms.add_argument("--p", default=None, help="retention probabilities (scalar or comma list)")
    norms.add_argument("--alpha", type=float, default=None)
    norms.add_argument("--out", default=None)
    norms.set_defaults(handler=_cmd_norms)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
