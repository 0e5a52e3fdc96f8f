"""Command-line entry point: config-driven experiments with CSV reports.

Configs are flat key-value text files with sectioned keys::

    geometry.k = 2
    geometry.n_interior = 100
    damping.variant = x1_indicator
    model.kind = wave

Parsing is strict: unknown or misplaced keys abort before any computation.
Outputs are deterministic for a fixed config; every run writes a manifest
listing the produced artifacts with their sha256 checksums.  Floats are
formatted with the shortest representation that round-trips, so reruns are
byte-identical.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 gap-check
violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import generators, operators, pipeline, resolvent, timestepping

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_GAPCHECK = 4

TASKS = ("spectrum", "sweep", "quasimode", "evolve", "pipeline", "gapcheck", "observability")


class ConfigError(ValueError):
    pass


def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "yes", "1", "on"):
        return True
    if s.lower() in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


# key -> (caster, validator description, validator)
_COMMON_SCHEMA = {
    "task.name": (str, "one of " + "|".join(TASKS), lambda v: v in TASKS),
    "geometry.operator": (str, "grushin|torus", lambda v: v in ("grushin", "torus")),
    "geometry.k": (float, ">= 1", lambda v: v >= 1),
    "geometry.n_interior": (int, ">= 2", lambda v: v >= 2),
    "geometry.max_frequency": (int, ">= 0", lambda v: v >= 0),
    "damping.variant": (
        str,
        "none|constant|x1_indicator|x2_indicator",
        lambda v: v in ("none", "constant", "x1_indicator", "x2_indicator"),
    ),
    "damping.beta": (float, ">= 0", lambda v: v >= 0),
    "damping.threshold": (float, "in (0, 1)", lambda v: 0 < v < 1),
    "damping.a": (float, "in [0, 1)", lambda v: 0 <= v < 1),
    "damping.b": (float, "in (0, 1]", lambda v: 0 < v <= 1),
    "model.kind": (str, "wave|schrodinger|plate", lambda v: v in ("wave", "schrodinger", "plate")),
}

_TASK_SCHEMA = {
    "spectrum": {
        "spectrum.exact_residuals": (_parse_bool, "bool", lambda v: True),
    },
    "sweep": {
        "sweep.s_min": (float, "> 0", lambda v: v > 0),
        "sweep.s_max": (float, "> 0", lambda v: v > 0),
        "sweep.s_count": (int, ">= 2", lambda v: v >= 2),
        "sweep.fit_k": (float, ">= 0.5", lambda v: v >= 0.5),
        "sweep.metric": (str, "norm|seminorm", lambda v: v in ("norm", "seminorm")),
    },
    "quasimode": {
        "quasimode.n_min": (int, ">= 1", lambda v: v >= 1),
        "quasimode.n_max": (int, ">= 1", lambda v: v >= 1),
    },
    "evolve": {
        "evolve.t_min": (float, ">= 0", lambda v: v >= 0),
        "evolve.t_final": (float, "> 0", lambda v: v > 0),
        "evolve.samples": (int, ">= 2", lambda v: v >= 2),
        "evolve.dt": (float, "> 0", lambda v: v > 0),
        "evolve.method": (str, "auto|midpoint|spectral", lambda v: v in ("auto", "midpoint", "spectral")),
        "evolve.schedule": (str, "linear|geometric", lambda v: v in ("linear", "geometric")),
        "evolve.j": (int, ">= 1", lambda v: v >= 1),
    },
    "pipeline": {
        "pipeline.C": (float, "> 0", lambda v: v > 0),
        "pipeline.kappa": (float, ">= 0", lambda v: v >= 0),
        "pipeline.k": (float, ">= 1", lambda v: v >= 1),
        "pipeline.T": (float, "> 0", lambda v: v > 0),
        "pipeline.c0": (float, "> 0", lambda v: v > 0),
        "pipeline.alpha": (float, "> 0", lambda v: v > 0),
        "pipeline.lambda0": (float, ">= 1", lambda v: v >= 1),
        "pipeline.norm_b": (float, "> 0", lambda v: v > 0),
        "pipeline.C_rhs": (float, ">= 0", lambda v: v >= 0),
        "pipeline.model": (str, "wave|schrodinger|plate", lambda v: v in ("wave", "schrodinger", "plate")),
        "pipeline.j": (int, ">= 1", lambda v: v >= 1),
        "pipeline.c": (float, "> 0", lambda v: v > 0),
        "pipeline.C_j": (float, "> 0", lambda v: v > 0),
        "pipeline.lambda_min": (float, ">= 1", lambda v: v >= 1),
        "pipeline.lambda_max": (float, ">= 1", lambda v: v >= 1),
        "pipeline.lambda_count": (int, ">= 1", lambda v: v >= 1),
        "pipeline.t_min": (float, "> 0", lambda v: v > 0),
        "pipeline.t_max": (float, "> 0", lambda v: v > 0),
        "pipeline.t_count": (int, ">= 1", lambda v: v >= 1),
    },
    "gapcheck": {
        "gapcheck.fit_k": (float, ">= 0.5", lambda v: v >= 0.5),
        "gapcheck.zero_tol": (float, "> 0", lambda v: v > 0),
        "gapcheck.epsilon": (float, "> 0", lambda v: v > 0),
        "gapcheck.kappa": (float, "> 0", lambda v: v > 0),
    },
    "observability": {
        "observability.T": (float, "> 0", lambda v: v > 0),
        "observability.mode": (int, ">= 0", lambda v: v >= 0),
        "observability.mu_min": (float, "> 0", lambda v: v > 0),
        "observability.mu_max": (float, "> 0", lambda v: v > 0),
        "observability.mu_count": (int, ">= 2", lambda v: v >= 2),
        "observability.ensemble": (int, ">= 1", lambda v: v >= 1),
        "observability.seed": (int, ">= 0", lambda v: v >= 0),
        "observability.n_time": (int, ">= 16", lambda v: v >= 16),
    },
}


class ExperimentConfig:
    """Validated key-value configuration for one task."""

    def __init__(self, task: str, values: dict):
        self.task = task
        self.values = values

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise ConfigError(f"missing required key {key!r} for task {self.task!r}")
        return self.values[key]

    @classmethod
    def parse(cls, path, task: str) -> "ExperimentConfig":
        if task not in TASKS:
            raise ConfigError(f"unknown task {task!r}")
        schema = dict(_COMMON_SCHEMA)
        schema.update(_TASK_SCHEMA[task])
        values = {}
        try:
            with open(path) as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for lineno, raw in enumerate(lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'section.key = value', got {raw.strip()!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in schema:
                hint = ""
                for other, keys in _TASK_SCHEMA.items():
                    if key in keys:
                        hint = f" (key belongs to task {other!r})"
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}{hint}")
            caster, desc, check = schema[key]
            try:
                typed = caster(val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
            if not check(typed):
                raise ConfigError(f"{path}:{lineno}: {key} = {val} violates constraint ({desc})")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key}")
            values[key] = typed
        declared = values.get("task.name")
        if declared is not None and declared != task:
            raise ConfigError(f"config declares task.name = {declared!r} but subcommand is {task!r}")
        return cls(task=task, values=values)


def _fmt(x) -> str:
    """Shortest representation that round-trips; deterministic across runs."""
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def _write_lines(path, lines):
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_manifest(out_dir, names):
    entries = []
    for name in sorted(names):
        with open(os.path.join(out_dir, name), "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        entries.append(f"{digest}  {name}")
    _write_lines(os.path.join(out_dir, "manifest.txt"), entries)


def _build_geometry(cfg: ExperimentConfig):
    kind = cfg.get("geometry.operator", "grushin")
    k = cfg.get("geometry.k", 2.0)
    modes = operators.FourierModeSet(cfg.get("geometry.max_frequency", 3))
    if kind == "torus":
        return operators.assemble_flat_laplacian(modes), None, modes
    grid = operators.Grid1D.make(cfg.get("geometry.n_interior", 100))
    return operators.assemble_grushin_full(k, grid, modes), grid, modes


def _build_profile(cfg: ExperimentConfig, grid):
    variant = cfg.get("damping.variant", "none")
    if variant == "none":
        return None
    if variant == "constant":
        return operators.DampingProfile.constant(cfg.require("damping.beta"))
    if variant == "x1_indicator":
        if grid is None:
            raise ConfigError("x1_indicator damping requires the grushin geometry")
        return operators.DampingProfile.x1_indicator(grid, cfg.get("damping.threshold", 0.5))
    a = cfg.require("damping.a")
    b = cfg.require("damping.b")
    if not a < b:
        raise ConfigError("damping.a must be smaller than damping.b")
    return operators.DampingProfile.x2_indicator(a, b)


def _build_generator(cfg: ExperimentConfig):
    A, grid, modes = _build_geometry(cfg)
    profile = _build_profile(cfg, grid)
    if profile is None:
        B = operators.HermitianOperator(
            matrix=np.zeros((A.dimension, A.dimension)), quad_weight=A.quad_weight
        )
    else:
        B = operators.assemble_damping(profile, grid=grid, modes=modes)
    kind = cfg.get("model.kind", "wave")
    build = {
        "wave": generators.damped_wave_generator,
        "schrodinger": generators.schrodinger_generator,
        "plate": generators.plate_generator,
    }[kind]
    return build(A, B), A, grid, modes, profile


def _task_spectrum(cfg, out_dir, threads, tol):
    gen, *_ = _build_generator(cfg)
    report = generators.spectrum(
        gen,
        exact_residuals=cfg.get("spectrum.exact_residuals", False),
        localization_tol=tol if tol is not None else 1e-8,
    )
    report.to_csv(os.path.join(out_dir, "spectrum.csv"))
    return ["spectrum.csv"], EXIT_OK


def _task_sweep(cfg, out_dir, threads, tol):
    gen, *_ = _build_generator(cfg)
    s = np.linspace(cfg.require("sweep.s_min"), cfg.require("sweep.s_max"), cfg.require("sweep.s_count"))
    sweep = resolvent.resolvent_sweep(gen, s, metric=cfg.get("sweep.metric", "norm"), threads=threads)
    sweep.to_csv(os.path.join(out_dir, "sweep.csv"))
    artifacts = ["sweep.csv"]
    fit_k = cfg.get("sweep.fit_k")
    if fit_k is not None:
        fit = resolvent.fit_exponent(sweep, fit_k)
        payload = {"kappa_hat": fit.kappa_hat, "c_hat": fit.c_hat, "r2": fit.r2, "k": fit.k}
        _write_lines(os.path.join(out_dir, "fit.json"), [json.dumps(payload, sort_keys=True)])
        artifacts.append("fit.json")
    return artifacts, EXIT_OK


def _task_quasimode(cfg, out_dir, threads, tol):
    if cfg.get("geometry.operator", "grushin") != "grushin":
        raise ConfigError("quasimodes are defined for the grushin geometry")
    grid = operators.Grid1D.make(cfg.get("geometry.n_interior", 100))
    profile = _build_profile(cfg, grid)
    k = cfg.get("geometry.k", 2.0)
    n_min = cfg.get("quasimode.n_min", 1)
    n_max = cfg.require("quasimode.n_max")
    if n_max < n_min:
        raise ConfigError("quasimode.n_max must be >= quasimode.n_min")
    lines = ["n,lambda,bnorm,pencil_defect,tunneling_mass"]
    for n in range(n_min, n_max + 1):
        q = resolvent.quasimode(n, k, grid, profile=profile)
        bn = q.bnorm if q.bnorm is not None else float("nan")
        pd = q.pencil_defect if q.pencil_defect is not None else float("nan")
        tm = q.tunneling_mass if q.tunneling_mass is not None else float("nan")
        lines.append(f"{n},{_fmt(q.eigenvalue)},{_fmt(bn)},{_fmt(pd)},{_fmt(tm)}")
    _write_lines(os.path.join(out_dir, "quasimode.csv"), lines)
    return ["quasimode.csv"], EXIT_OK


def _task_evolve(cfg, out_dir, threads, tol):
    gen, A, grid, modes, profile = _build_generator(cfg)
    t_final = cfg.require("evolve.t_final")
    samples = cfg.get("evolve.samples", 50)
    if cfg.get("evolve.schedule", "linear") == "geometric":
        t_min = cfg.get("evolve.t_min", 1.0)
        if t_min <= 0:
            raise ConfigError("geometric schedules need evolve.t_min > 0")
        schedule = np.exp(np.linspace(math.log(t_min), math.log(t_final), samples))
    else:
        schedule = np.linspace(cfg.get("evolve.t_min", 0.0), t_final, samples)
    if grid is not None:
        U0 = timestepping.superposition_initial_data(cfg.get("geometry.k", 2.0), grid, modes, gen=gen)
    else:
        u = np.ones(gen.state_dim) / math.sqrt(gen.state_dim)
        if gen.kind == "schrodinger":
            U0 = timestepping.State(u=u)
        else:
            U0 = timestepping.State(u=u, v=np.zeros(gen.state_dim))
    traj = timestepping.evolve(
        gen, U0, schedule, method=cfg.get("evolve.method", "auto"), dt=cfg.get("evolve.dt", 1e-2)
    )
    traj.to_csv(os.path.join(out_dir, "trajectory.csv"))
    artifacts = ["trajectory.csv"]
    j = cfg.get("evolve.j")
    if j is not None:
        # schrodinger/plate decay products carry the exponent 2j/k
        geom_k = cfg.get("geometry.k", 2.0)
        exponent_base = geom_k if gen.kind == "wave" else geom_k / 2.0
        meas = timestepping.measure_decay(
            gen, U0, j, exponent_base, schedule, method=cfg.get("evolve.method", "spectral")
        )
        lines = ["t,normalized_product"]
        for t, prod in zip(meas.times, meas.products):
            lines.append(f"{_fmt(float(t))},{_fmt(float(prod))}")
        _write_lines(os.path.join(out_dir, "decay.csv"), lines)
        artifacts.append("decay.csv")
    return artifacts, EXIT_OK


def _task_pipeline(cfg, out_dir, threads, tol):
    G = pipeline.CostFunction(
        C=cfg.get("pipeline.C", 1.0), kappa=cfg.get("pipeline.kappa", 1.0), k=cfg.get("pipeline.k", 2.0)
    )
    params = pipeline.PipelineParams(
        T=cfg.get("pipeline.T", 4.0),
        c0=cfg.get("pipeline.c0", 1.0),
        alpha=cfg.get("pipeline.alpha", pipeline.DEFAULT_ALPHA),
        lambda0=cfg.get("pipeline.lambda0", 1.0),
        norm_b=cfg.get("pipeline.norm_b", 1.0),
        C_rhs=cfg.get("pipeline.C_rhs", 0.0),
    )
    gfrak = pipeline.free_resolvent_bound(G, params)
    model = cfg.get("pipeline.model", "wave")
    M = {"wave": pipeline.wave_M, "schrodinger": pipeline.schrodinger_M, "plate": pipeline.plate_M}[
        model
    ](gfrak)
    mlog = pipeline.m_log(M)

    lam_lo = cfg.get("pipeline.lambda_min", max(1.0, params.lambda0))
    lam_hi = cfg.get("pipeline.lambda_max", lam_lo + 9.0)
    lam_n = cfg.get("pipeline.lambda_count", 10)
    lam_grid = np.linspace(max(lam_lo, M.domain[0]), max(lam_hi, M.domain[0]), lam_n)
    lines = ["lambda, G, Gfrak, M, Mlog"]
    for lam in lam_grid:
        row = [
            _fmt(float(lam)),
            _fmt(G(lam)),
            _fmt(gfrak.value(lam)) if lam >= gfrak.domain[0] else "nan",
            _fmt(M.value(lam)),
            _fmt(mlog.value(lam)),
        ]
        lines.append(", ".join(row))
    _write_lines(os.path.join(out_dir, "pipeline.txt"), lines)

    env = pipeline.decay_envelope(
        M, cfg.get("pipeline.j", 1), cfg.get("pipeline.c", 1.0), cfg.get("pipeline.C_j", 1.0)
    )
    t_lo = cfg.get("pipeline.t_min", 10.0)
    t_hi = cfg.get("pipeline.t_max", 1e8)
    t_n = cfg.get("pipeline.t_count", 40)
    ts = np.exp(np.linspace(math.log(t_lo), math.log(t_hi), t_n))
    env_lines = ["t,envelope"]
    for t in ts:
        env_lines.append(f"{_fmt(float(t))},{_fmt(env(float(t)))}")
    _write_lines(os.path.join(out_dir, "envelope.csv"), env_lines)
    return ["pipeline.txt", "envelope.csv"], EXIT_OK


def _task_gapcheck(cfg, out_dir, threads, tol):
    gen, *_ = _build_generator(cfg)
    report = generators.spectrum(gen)
    fit_k = cfg.get("gapcheck.fit_k", cfg.get("geometry.k", 2.0))
    zero_tol = cfg.get("gapcheck.zero_tol", tol if tol is not None else 1e-8)
    eps, kappa = cfg.get("gapcheck.epsilon"), cfg.get("gapcheck.kappa")
    if (eps is None) != (kappa is None):
        raise ConfigError("gapcheck.epsilon and gapcheck.kappa must be given together")
    if eps is not None:
        region = resolvent.GapRegion(epsilon=eps, kappa=kappa, k=fit_k)
    else:
        region = resolvent.fit_gap_region(report, fit_k, zero_tol=zero_tol)
    result = resolvent.spectral_gap_check(report, region, zero_tol=zero_tol)
    payload = {
        "pass": result.passed,
        "epsilon": region.epsilon,
        "kappa": region.kappa,
        "k": region.k,
        "violations": [[z.real, z.imag] for z in result.violations],
    }
    _write_lines(os.path.join(out_dir, "gapcheck.json"), [json.dumps(payload, sort_keys=True)])
    return ["gapcheck.json"], EXIT_OK if result.passed else EXIT_GAPCHECK


def _task_observability(cfg, out_dir, threads, tol):
    damping_matrix = None
    if cfg.get("geometry.operator", "grushin") == "torus":
        A = operators.assemble_flat_laplacian(
            operators.FourierModeSet(cfg.get("geometry.max_frequency", 3))
        )
        grid = None
    else:
        grid = operators.Grid1D.make(cfg.get("geometry.n_interior", 100))
        mode = cfg.get("observability.mode")
        if mode is not None:
            A = operators.assemble_grushin_mode(mode, cfg.get("geometry.k", 2.0), grid)
        else:
            modes = operators.FourierModeSet(cfg.get("geometry.max_frequency", 3))
            A = operators.assemble_grushin_full(cfg.get("geometry.k", 2.0), grid, modes)
            profile_full = _build_profile(cfg, grid)
            if profile_full is not None:
                damping_matrix = operators.assemble_damping(
                    profile_full, grid=grid, modes=modes
                ).matrix
    profile = _build_profile(cfg, grid)
    if profile is None:
        raise ConfigError("observability requires a damping (observation) region")
    probe = timestepping.observability_cost_probe(
        A,
        profile,
        cfg.require("observability.T"),
        cfg.get("observability.ensemble", 8),
        mu_grid=np.linspace(
            cfg.get("observability.mu_min", 1.0),
            cfg.get("observability.mu_max", 10.0),
            cfg.get("observability.mu_count", 10),
        ),
        n_time=cfg.get("observability.n_time", 513),
        seed=cfg.get("observability.seed", 0),
        damping_matrix=damping_matrix,
    )
    probe.to_csv(os.path.join(out_dir, "observability.csv"))
    payload = {
        "C_hat": probe.C_hat,
        "kappa_hat": probe.kappa_hat,
        "r2": probe.r2,
        "k": probe.k,
        "excluded": probe.excluded,
    }
    _write_lines(os.path.join(out_dir, "obs_fit.json"), [json.dumps(payload, sort_keys=True)])
    return ["observability.csv", "obs_fit.json"], EXIT_OK


_RUNNERS = {
    "spectrum": _task_spectrum,
    "sweep": _task_sweep,
    "quasimode": _task_quasimode,
    "evolve": _task_evolve,
    "pipeline": _task_pipeline,
    "gapcheck": _task_gapcheck,
    "observability": _task_observability,
}


def run(config: ExperimentConfig, out_dir: str = ".", threads: int | None = None, tol: float | None = None) -> int:
    """Execute one configured task, writing artifacts and a checksum manifest."""
    os.makedirs(out_dir, exist_ok=True)
    artifacts, code = _RUNNERS[config.task](config, out_dir, threads, tol)
    _write_manifest(out_dir, artifacts)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hypowave",
        description="Spectral, resolvent and decay experiments for damped hypoelliptic models",
    )
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task, help=f"run the {task} task")
        p.add_argument("--config", required=True, help="path to the key-value config file")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--threads", type=int, default=None, help="worker cap (default: all cores)")
        p.add_argument("--tol", type=float, default=None, help="tolerance override")
    args = parser.parse_args(argv)
    threads = args.threads if args.threads is not None else os.cpu_count()

    try:
        config = ExperimentConfig.parse(args.config, args.task)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(config, out_dir=args.out, threads=threads, tol=args.tol)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, np.linalg.LinAlgError, generators.EigensolverError) as exc:
        print(f"numerical failure in task {args.task}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
