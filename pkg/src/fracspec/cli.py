"""Command-line runner: reads a run config, writes CSV/JSON artifacts.

Exit codes: 0 on success, 2 when a condition check inside the task fails
(the artifacts are still written), 1 on hard errors with a one-line
diagnostic on stderr.  Byte-identical outputs for identical inputs: all
floats are written as ``f"{x:.16e}"``, JSON keys are sorted, newlines are
Unix, and random draws come from a seeded generator.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .bvp import BVPCoefficients, check_ellipticity, solve_anisotropic
from .config import (
    DEFAULT_SEED,
    ConfigError,
    RunConfig,
    build_forcing,
    build_problem,
    parse_float_list,
    parse_matrix,
)
from .core import GridFunction, Sector, SpaceTimeFunction, lp_norm, random_band_limited
from .elliptic import (
    coercive_report,
    embedding_probe,
    resolvent_sweep,
    separability_check,
)
from .parabolic import (
    ParabolicProblem,
    SystemMatrix,
    parabolic_coercive_report,
    solve_parabolic,
    solve_parabolic_stepped,
    solve_system,
)
from .symbols import (
    check_mikhlin_bounds,
    check_sector_growth,
    scalar_inequality_suite,
    symbol_resolvent_bound,
)

__all__ = ["main"]

# Errors below this are treated as rounding noise in convergence tables.
FLOOR = 1e-11


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.16e}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", newline="\n")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", newline="\n")


def _solution_header(dim: int, lead: list[str]) -> list[str]:
    if dim == 1:
        return lead + ["re_u", "im_u"]
    cols: list[str] = []
    for c in range(dim):
        cols += [f"re_u_{c + 1}", f"im_u_{c + 1}"]
    return lead + cols


def _value_cols(row: np.ndarray) -> list[float]:
    cols: list[float] = []
    for v in row:
        cols += [v.real, v.imag]
    return cols


def _s_set(cfg: RunConfig, gamma: float) -> list[float]:
    raw = cfg.sections.get("parameters", {}).get("s_set")
    if raw is None:
        return [0.0, gamma / 2.0, gamma]
    return [float(c) for c in raw.split(",") if c.strip()]


class _Run:
    """Resolved invocation: config plus seed, thread count, output dir."""

    def __init__(self, cfg: RunConfig, out_dir: Path, seed: int, threads: int):
        self.cfg = cfg
        self.out = out_dir
        self.seed = seed
        self.threads = threads

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def report(self, results: dict, failed_checks: list[str]) -> None:
        _write_json(
            self.out / "report.json",
            {
                "task": self.cfg.task,
                "seed": self.seed,
                "threads": self.threads,
                "config": self.cfg.to_jsonable(),
                "failed_checks": sorted(failed_checks),
                "results": results,
            },
        )


def _task_solve_elliptic(run: _Run) -> bool:
    cfg = run.cfg
    prob = build_problem(cfg)
    lam = cfg.get_complex("parameters", "lambda", 1.0 + 0.0j)
    f = build_forcing(cfg, prob.grid, prob.dim, run.rng())
    rep = coercive_report(
        prob,
        f,
        lam,
        s_set=_s_set(cfg, prob.order.gamma),
        p=cfg.get_float("parameters", "p", 2.0),
    )
    u = rep.solution
    rows = ([x] + _value_cols(u.values[j]) for j, x in enumerate(prob.grid.points))
    _write_csv(run.out / "solution.csv", _solution_header(prob.dim, ["x"]), rows)
    run.report(rep.to_jsonable(), [])
    return False


def _space_time_forcing(cfg: RunConfig, pprob: ParabolicProblem, rng) -> SpaceTimeFunction:
    spatial = build_forcing(cfg, pprob.core.grid, pprob.core.dim, rng)
    profile = cfg.get_str("parameters", "time_profile", "constant")
    times = pprob.times
    if profile == "constant":
        weights = np.ones(times.size)
    elif profile == "sine":
        weights = np.sin(times)
    elif profile == "ramp":
        weights = times.copy()
    else:
        raise ConfigError(
            f"[parameters] time_profile must be 'constant', 'sine' or 'ramp', got {profile!r}"
        )
    vals = weights[:, None, None] * spatial.values[None, :, :]
    return SpaceTimeFunction(pprob.core.grid, times, vals)


def _task_solve_parabolic(run: _Run) -> bool:
    cfg = run.cfg
    prob = build_problem(cfg)
    pprob = ParabolicProblem(
        core=prob,
        horizon=cfg.get_float("parameters", "t", 1.0),
        steps=cfg.get_int("parameters", "nt", 64),
    )
    f = _space_time_forcing(cfg, pprob, run.rng())
    scheme = cfg.get_str("parameters", "scheme", "exact")
    if scheme == "exact":
        u = solve_parabolic(pprob, f)
    else:
        u = solve_parabolic_stepped(pprob, f, scheme=scheme)
    rep = parabolic_coercive_report(
        pprob,
        f,
        u=u,
        p=cfg.get_float("parameters", "p", 2.0),
        p1=cfg.get_float("parameters", "p1", 2.0),
    )
    rows = (
        [t, x] + _value_cols(u.values[m, j])
        for m, t in enumerate(u.times)
        for j, x in enumerate(prob.grid.points)
    )
    _write_csv(run.out / "solution.csv", _solution_header(prob.dim, ["t", "x"]), rows)
    run.report(rep.to_jsonable(), [])
    return False


def _task_resolvent_sweep(run: _Run) -> bool:
    cfg = run.cfg
    prob = build_problem(cfg)
    try:
        sweep_sector = Sector(cfg.get_float("parameters", "sweep_angle", prob.sector.angle))
    except ValueError as exc:
        raise ConfigError(f"[parameters] sweep_angle: {exc}") from exc
    radii = parse_float_list(cfg.get_str("parameters", "radii", "1e-3:1e3:25"))
    rep = resolvent_sweep(
        prob,
        sweep_sector,
        radii=radii,
        angles=cfg.get_int("parameters", "angles", 17),
        probes=cfg.get_int("parameters", "probes", 0),
        p=cfg.get_float("parameters", "p", 2.0),
        seed=run.seed,
        refine=cfg.get_bool("parameters", "refine", True),
        threads=run.threads,
    )
    if rep.probe_values is None:
        header = ["re_lambda", "im_lambda", "value"]
        rows = [[lam.real, lam.imag, val] for lam, val in zip(rep.lambdas, rep.values)]
    else:
        header = ["re_lambda", "im_lambda", "value", "probe_lower"]
        rows = [
            [lam.real, lam.imag, val, probe]
            for lam, val, probe in zip(rep.lambdas, rep.values, rep.probe_values)
        ]
    _write_csv(run.out / "sweep.csv", header, rows)
    failed = []
    if rep.stable is False:
        failed.append("refinement-stability")
    if rep.witnesses:
        failed.append("singular-symbol")
    run.report(rep.to_jsonable(), failed)
    return bool(failed)


def _task_verify_conditions(run: _Run) -> bool:
    cfg = run.cfg
    prob = build_problem(cfg)
    try:
        phi1 = Sector(cfg.get_float("parameters", "phi1", prob.sector.angle))
    except ValueError as exc:
        raise ConfigError(f"[parameters] phi1: {exc}") from exc
    lam_raw = cfg.get_str("parameters", "lambda_set", "0,1,10")
    lams = [complex(c.strip()) for c in lam_raw.split(",") if c.strip()]
    reports = [
        check_sector_growth(prob, phi1),
        check_mikhlin_bounds(prob),
        symbol_resolvent_bound(prob, lams),
        scalar_inequality_suite(
            phi1,
            prob.sector,
            samples=cfg.get_int("parameters", "samples", 2000),
            seed=run.seed,
        ),
    ]
    failed = [r.name for r in reports if not r.passed]
    run.report({r.name: r.to_jsonable() for r in reports}, failed)
    return bool(failed)


def _task_separability(run: _Run) -> bool:
    cfg = run.cfg
    prob = build_problem(cfg)
    rep = separability_check(
        prob,
        trials=cfg.get_int("parameters", "trials", 50),
        p=cfg.get_float("parameters", "p", 2.0),
        s_set=_s_set(cfg, prob.order.gamma),
        seed=run.seed,
    )
    rows = ([i + 1, r] for i, r in enumerate(rep.meta["ratios"]))
    _write_csv(run.out / "ratios.csv", ["trial", "ratio"], rows)
    run.report(rep.to_jsonable(), [] if rep.passed else [rep.name])
    return not rep.passed


def _task_embedding_probe(run: _Run) -> bool:
    cfg = run.cfg
    prob = build_problem(cfg)
    h_set = [float(c) for c in cfg.get_str("parameters", "h_set", "0.1,0.3,1.0").split(",") if c.strip()]
    draws = cfg.get_int("parameters", "draws", 8)
    rng = run.rng()
    kwargs = dict(
        alpha=cfg.get_float("parameters", "alpha", 1.0),
        s=cfg.get_float("parameters", "s", 2.0),
        p=cfg.get_float("parameters", "p", 2.0),
        q=cfg.get_float("parameters", "q_exp", 2.0),
        mu=cfg.get_float("parameters", "mu", 0.0),
        h_set=h_set,
    )
    rows = []
    reports = []
    max_ratio = 0.0
    for i in range(draws):
        u = random_band_limited(prob.grid, prob.dim, rng)
        rep = embedding_probe(prob, u, **kwargs)
        reports.append(rep.to_jsonable())
        for h in h_set:
            rows.append([i + 1, h, rep.meta["ratios_by_h"][f"{h:g}"]])
        max_ratio = max(max_ratio, rep.constants["max_ratio"])
    _write_csv(run.out / "ratios.csv", ["draw", "h", "ratio"], rows)
    run.report({"draws": reports, "max_ratio": max_ratio}, [])
    return False


def _poly(text: str):
    """Polynomial in y from ascending coefficients "c0,c1,c2"."""
    coeffs = [float(c) for c in text.split(",") if c.strip()]

    def func(y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for c in reversed(coeffs):
            out = out * y + c
        return out

    return func


def _task_bvp(run: _Run) -> bool:
    cfg = run.cfg
    prob = build_problem(cfg)
    coeffs = BVPCoefficients(
        b2=_poly(cfg.get_str("parameters", "b2", "1")),
        b1=_poly(cfg.get_str("parameters", "b1", "0")),
        b0=_poly(cfg.get_str("parameters", "b0", "0")),
        mesh_size=cfg.get_int("parameters", "mesh_size", 31),
    )
    try:
        phi0 = Sector(cfg.get_float("parameters", "phi0", math.pi / 4.0))
    except ValueError as exc:
        raise ConfigError(f"[parameters] phi0: {exc}") from exc
    ell = check_ellipticity(coeffs, phi0)
    lam = cfg.get_complex("parameters", "lambda", 1.0 + 0.0j)
    grid = prob.grid
    wave = cfg.get_int("parameters", "transverse_mode", 1)
    profile = np.sin(wave * math.pi * coeffs.mesh)
    f = GridFunction(grid, np.exp(-grid.points**2)[:, None] * profile[None, :])
    rep = solve_anisotropic(
        coeffs, prob.order, prob.a, lam, f, grid, p=cfg.get_float("parameters", "p", 2.0)
    )
    u = rep.solution
    rows = (
        [x, y, u.values[j, i].real, u.values[j, i].imag]
        for j, x in enumerate(grid.points)
        for i, y in enumerate(coeffs.mesh)
    )
    _write_csv(run.out / "solution.csv", ["x", "y", "re_u", "im_u"], rows)
    failed = [] if ell.passed else [ell.name]
    run.report({"ellipticity": ell.to_jsonable(), "solve": rep.to_jsonable()}, failed)
    return bool(failed)


def _task_system(run: _Run) -> bool:
    cfg = run.cfg
    mat = SystemMatrix(parse_matrix(cfg.get_str("parameters", "matrix", "1")))
    prob = build_problem(cfg)
    lam = cfg.get_complex("parameters", "lambda", 1.0 + 0.0j)
    mode = cfg.get_str("parameters", "mode", "elliptic")
    literal = cfg.get_bool("parameters", "literal_shift", False)
    p = cfg.get_float("parameters", "p", 2.0)
    if mode == "elliptic":
        f = build_forcing(cfg, prob.grid, mat.size, run.rng())
        rep = solve_system(
            mat, prob.order, prob.a, lam, f, mode=mode, grid=prob.grid,
            literal_shift=literal, p=p,
        )
        u = rep.solution
        rows = ([x] + _value_cols(u.values[j]) for j, x in enumerate(prob.grid.points))
        _write_csv(run.out / "solution.csv", _solution_header(mat.size, ["x"]), rows)
    elif mode == "parabolic":
        horizon = cfg.get_float("parameters", "t", 1.0)
        steps = cfg.get_int("parameters", "nt", 64)
        spatial = build_forcing(cfg, prob.grid, mat.size, run.rng())
        profile = cfg.get_str("parameters", "time_profile", "constant")
        times = np.linspace(0.0, horizon, steps + 1)
        if profile == "constant":
            weights = np.ones(times.size)
        elif profile == "sine":
            weights = np.sin(times)
        elif profile == "ramp":
            weights = times.copy()
        else:
            raise ConfigError(
                f"[parameters] time_profile must be 'constant', 'sine' or 'ramp', got {profile!r}"
            )
        f = SpaceTimeFunction(prob.grid, times, weights[:, None, None] * spatial.values[None, :, :])
        rep = solve_system(
            mat, prob.order, prob.a, lam, f, mode=mode, grid=prob.grid,
            horizon=horizon, steps=steps, literal_shift=literal, p=p,
            p1=cfg.get_float("parameters", "p1", 2.0),
        )
        u = rep.solution
        rows = (
            [t, x] + _value_cols(u.values[m, j])
            for m, t in enumerate(u.times)
            for j, x in enumerate(prob.grid.points)
        )
        _write_csv(run.out / "solution.csv", _solution_header(mat.size, ["t", "x"]), rows)
    else:
        raise ConfigError(f"[parameters] mode must be 'elliptic' or 'parabolic', got {mode!r}")
    run.report(rep.to_jsonable(), [])
    return False


def _task_convergence(run: _Run) -> bool:
    cfg = run.cfg
    levels = [int(c) for c in cfg.get_str("parameters", "levels", "64,128,256").split(",") if c.strip()]
    if len(levels) < 3:
        raise ConfigError(f"[parameters] levels needs at least 3 entries, got {levels}")
    if sorted(levels) != levels or len(set(levels)) != len(levels):
        raise ConfigError(f"[parameters] levels must be strictly increasing, got {levels}")
    scheme = cfg.get_str("parameters", "scheme", "crank-nicolson")
    prob = build_problem(cfg)
    horizon = cfg.get_float("parameters", "t", 1.0)

    def final_state(steps: int, integrator: str) -> GridFunction:
        pprob = ParabolicProblem(core=prob, horizon=horizon, steps=steps)
        f = _space_time_forcing(cfg, pprob, np.random.default_rng(run.seed))
        if integrator == "exact":
            u = solve_parabolic(pprob, f)
        else:
            u = solve_parabolic_stepped(pprob, f, scheme=integrator)
        return u.slice_at(pprob.steps)

    reference = final_state(levels[-1], "exact")
    errors = []
    for steps in levels:
        diff = final_state(steps, scheme).values - reference.values
        errors.append(lp_norm(GridFunction(prob.grid, diff), 2.0))

    rows = []
    orders: list[str] = []
    for i, (steps, err) in enumerate(zip(levels, errors)):
        if err < FLOOR:
            order = "floor"
        elif i == 0 or errors[i - 1] < FLOOR:
            order = "-"
        else:
            order = _fmt(math.log2(errors[i - 1] / err) / math.log2(levels[i] / levels[i - 1]))
        orders.append(order)
        rows.append([steps, err, order])
    _write_csv(run.out / "convergence.csv", ["steps", "error", "order"], rows)
    run.report(
        {"scheme": scheme, "levels": levels, "errors": errors, "orders": orders}, []
    )
    return False


_TASKS = {
    "solve-elliptic": _task_solve_elliptic,
    "solve-parabolic": _task_solve_parabolic,
    "resolvent-sweep": _task_resolvent_sweep,
    "verify-conditions": _task_verify_conditions,
    "separability": _task_separability,
    "embedding-probe": _task_embedding_probe,
    "bvp": _task_bvp,
    "system": _task_system,
    "convergence": _task_convergence,
}


def _resolve(flag, env_name: str, cast, default):
    if flag is not None:
        return flag
    env = os.environ.get(env_name)
    if env is not None:
        try:
            return cast(env)
        except ValueError as exc:
            raise ConfigError(f"environment variable {env_name}={env!r}: {exc}") from exc
    return default


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="fracspec",
        description="Spectral runner for sectorial convolution problems on the line.",
    )
    parser.add_argument("--config", help="path to an INI run config")
    parser.add_argument("--out", help="output directory (created if missing)")
    parser.add_argument("--seed", type=int, help="seed for random probes")
    parser.add_argument("--threads", type=int, help="worker threads for sweeps (0 = auto)")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = _parse_args(argv)
    try:
        config_path = _resolve(args.config, "FRACSPEC_CONFIG", str, None)
        if config_path is None:
            raise ConfigError("no config given: pass --config or set FRACSPEC_CONFIG")
        cfg = RunConfig.load(config_path)
        seed = _resolve(args.seed, "FRACSPEC_SEED", int, None)
        if seed is None:
            seed = cfg.get_int("parameters", "seed", DEFAULT_SEED)
        out_name = _resolve(args.out, "FRACSPEC_OUT", str, None)
        if out_name is None:
            out_name = cfg.get_str("output", "directory", "out")
        threads = _resolve(args.threads, "FRACSPEC_THREADS", int, None)
        if threads is None:
            threads = cfg.get_int("output", "threads", 1)
        if threads == 0:
            threads = os.cpu_count() or 1
        out_dir = Path(out_name)
        out_dir.mkdir(parents=True, exist_ok=True)
        run = _Run(cfg, out_dir, seed, threads)
        failed = _TASKS[cfg.task](run)
    except Exception as exc:  # noqa: BLE001 - single funnel to exit code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
