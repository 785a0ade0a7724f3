"""Experiment configuration, initial data and output files."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .flow import FlowParams, Trajectory, evolve
from .solver import AUTO, SolverParams, stability_max_lambda
from .spectral import Grid, SpectralCache

__all__ = [
    "ExperimentConfig",
    "initial_f",
    "initial_g",
    "load_config",
    "load_initial",
    "build_problem",
    "emit_outputs",
    "run",
]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3


def initial_f(x):
    """20 on ``|x| <= 2``, ``50/|x| - 5`` elsewhere (continuous at ``|x| = 2``)."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    with np.errstate(divide="ignore"):
        out = np.where(ax <= 2.0, 20.0, 50.0 / ax - 5.0)
    return out if out.ndim else float(out)


def initial_g(x):
    """20 on ``|x| <= 2``, 0 elsewhere."""
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) <= 2.0, 20.0, 0.0)
    return out if out.ndim else float(out)


INITIAL_DATA = {"f": initial_f, "g": initial_g}


@dataclass
class ExperimentConfig:
    """Fully resolved run configuration.

    Every field is also a config-file key and a CLI flag (underscores become
    dashes on the command line).
    """

    s: float = 0.0
    tau: float = 0.1
    h: float = 0.1
    domain: tuple = (-10.0, 10.0)
    lam: float | str = AUTO
    steps: int = 20
    snapshot_every: int = 1
    initial: str = "g"
    out: str = "out"
    strict: bool = False
    ergodic: bool = False
    tol_z: float = 1e-8
    tol_gap: float = 1e-7
    max_iter: int = 200_000
    safety: float = 0.9
    warm_start: bool = True
    stop_at_extinction: bool = True
    extinction_eps: float | None = None
    seed: int | None = None
    noise: float = 0.0

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["domain"] = list(self.domain)
        d["lambda"] = d.pop("lam")
        return d


# config-file / flag spelling -> field name
_KEY_ALIASES = {"lambda": "lam", "output_dir": "out", "snapshot-every": "snapshot_every"}
_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"not a boolean: {text!r}")


def _parse_optional(conv):
    def parse(text):
        if text is None or (isinstance(text, str) and text.strip().lower() in ("", "none", "null")):
            return None
        return conv(text)
    return parse


def parse_domain(text) -> tuple:
    if isinstance(text, (list, tuple)):
        lo, hi = text
    else:
        parts = str(text).split(":")
        if len(parts) != 2:
            raise ConfigurationError(f"domain must look like x_min:x_max, got {text!r}")
        lo, hi = parts
    lo, hi = float(lo), float(hi)
    if not hi > lo:
        raise ConfigurationError(f"empty domain {lo}:{hi}")
    return (lo, hi)


def parse_lambda(text):
    if isinstance(text, str) and text.strip().lower() == AUTO:
        return AUTO
    return float(text)


_PARSERS = {
    "s": float,
    "tau": float,
    "h": float,
    "domain": parse_domain,
    "lam": parse_lambda,
    "steps": int,
    "snapshot_every": int,
    "initial": str,
    "out": str,
    "strict": _parse_bool,
    "ergodic": _parse_bool,
    "tol_z": float,
    "tol_gap": float,
    "max_iter": int,
    "safety": float,
    "warm_start": _parse_bool,
    "stop_at_extinction": _parse_bool,
    "extinction_eps": _parse_optional(float),
    "seed": _parse_optional(int),
    "noise": float,
}
assert set(_PARSERS) == set(_FIELD_TYPES)


def canonical_key(key: str) -> str:
    key = key.strip()
    key = _KEY_ALIASES.get(key, key).replace("-", "_")
    key = _KEY_ALIASES.get(key, key)
    if key not in _PARSERS:
        raise ConfigurationError(f"unknown configuration key {key!r}")
    return key


def parse_values(raw: dict) -> dict:
    """Convert a mapping of (possibly textual) values to typed config fields."""
    out = {}
    for key, value in raw.items():
        name = canonical_key(key)
        try:
            out[name] = _PARSERS[name](value)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"bad value for {key!r}: {value!r}") from exc
    return out


def load_config(path) -> dict:
    """Read a config file into a raw ``{key: value}`` mapping.

    Two formats are accepted: flat ``key = value`` text (``#`` starts a
    comment), or JSON.  For JSON, a top-level ``"config"`` object is used
    when present, so a ``diagnostics.json`` from an earlier run can be fed
    back verbatim.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"invalid JSON in {path}: {exc}") from exc
        if isinstance(data.get("config"), dict):
            data = data["config"]
        return dict(data)
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        raw[key.strip()] = value.strip()
    return raw


def make_config(file_values: dict | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Build a config from file values with `overrides` (e.g. CLI flags) on top."""
    values = {}
    values.update(parse_values(file_values or {}))
    values.update(parse_values(overrides or {}))
    return ExperimentConfig(**values)


def load_initial(path, grid: Grid) -> np.ndarray:
    """Read initial data: one value per line, or CSV rows ``x,u`` (header optional)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read initial data {path}: {exc}") from exc
    values = []
    for row in csv.reader(io.StringIO(text)):
        cells = [c.strip() for c in row if c.strip()]
        if not cells:
            continue
        try:
            values.append(float(cells[-1]))
        except ValueError:
            if not values:  # header line
                continue
            raise ConfigurationError(f"non-numeric value {cells[-1]!r} in {path}") from None
    u = np.array(values, dtype=float)
    if u.shape != (grid.N,):
        raise ConfigurationError(
            f"initial data in {path} has {u.size} values, grid has N={grid.N}"
        )
    if not np.all(np.isfinite(u)):
        raise ConfigurationError(f"initial data in {path} has non-finite values")
    return u


def build_problem(cfg: ExperimentConfig):
    """Grid, spectral cache, initial data and flow parameters for `cfg`."""
    grid = Grid.cell_centred(cfg.domain[0], cfg.domain[1], cfg.h)
    cache = SpectralCache(grid, cfg.s)
    if cfg.initial in INITIAL_DATA:
        u0 = INITIAL_DATA[cfg.initial](grid.x)
    else:
        u0 = load_initial(cfg.initial, grid)
    if cfg.noise:
        rng = np.random.default_rng(cfg.seed)
        u0 = u0 + cfg.noise * rng.standard_normal(grid.N)
    solver = SolverParams(
        s=cfg.s,
        tau=cfg.tau,
        lam=cfg.lam,
        tol_z=cfg.tol_z,
        tol_gap=cfg.tol_gap,
        max_iter=cfg.max_iter,
        ergodic=cfg.ergodic,
        safety=cfg.safety,
    )
    params = FlowParams(
        tau=cfg.tau,
        steps=cfg.steps,
        solver=solver,
        snapshot_every=cfg.snapshot_every,
        warm_start=cfg.warm_start,
        abort_on_nonconverged=cfg.strict,
        stop_at_extinction=cfg.stop_at_extinction,
        extinction_eps=cfg.extinction_eps,
    )
    return grid, cache, u0, params


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def write_snapshots_csv(traj: Trajectory, path) -> int:
    """Write long-form ``t,x,u`` rows; returns the number of data rows."""
    x = traj.cache.grid.x
    rows = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("t,x,u\n")
        for t, u in zip(traj.times, traj.snapshots):
            ts = repr(float(t))
            fh.write("".join(f"{ts},{float(xj)!r},{float(uj)!r}\n" for xj, uj in zip(x, u)))
            rows += len(u)
    return rows


def diagnostics_dict(traj: Trajectory, cfg: ExperimentConfig) -> dict:
    cache = traj.cache
    grid = cache.grid
    return {
        "config": cfg.to_dict(),
        "grid": {"N": grid.N, "h": grid.h, "x0": grid.x0},
        "stability": {
            "mu_max": cache.mu_max,
            "lambda_max": stability_max_lambda(cfg.s, cfg.tau, cache),
            "lambda": traj.lam,
        },
        "steps": {
            "t": [r.t for r in traj.records],
            "tv": [r.tv for r in traj.records],
            "speed": [r.speed for r in traj.records],
            "iterations": [r.iterations for r in traj.records],
            "converged": [r.converged for r in traj.records],
            "gap": [_num(r.gap) for r in traj.records],
            "max_jump": [r.max_jump for r in traj.records],
        },
        "snapshot_times": list(traj.times),
        "extinction_time": traj.extinction_time,
        "all_converged": traj.all_converged,
        "aborted": traj.aborted,
        "mean_initial": float(np.mean(traj.snapshots[0])),
        "mean_final": float(np.mean(traj.final)),
    }


def emit_outputs(traj: Trajectory, cfg: ExperimentConfig, out_dir=None, stream=None) -> dict:
    """Write ``snapshots.csv`` and ``diagnostics.json``; print a summary line.

    Raises
    ------
    ConfigurationError
        If the output directory cannot be created or written.
    """
    if not traj.snapshots:
        raise ValueError("empty trajectory")
    out = Path(cfg.out if out_dir is None else out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        rows = write_snapshots_csv(traj, out / "snapshots.csv")
        diag = diagnostics_dict(traj, cfg)
        with open(out / "diagnostics.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(diag, fh, indent=1, allow_nan=False)
            fh.write("\n")
    except OSError as exc:
        raise ConfigurationError(f"cannot write outputs to {out}: {exc}") from exc
    if stream is not None:
        ext = traj.extinction_time
        print(
            f"s={cfg.s:g} tau={cfg.tau:g} lambda={traj.lam:.6g} steps={len(traj.records)} "
            f"t_final={traj.times[-1]:g} snapshots={len(traj.times)} rows={rows} "
            f"inner_iterations={sum(r.iterations for r in traj.records)} "
            f"converged={traj.all_converged} "
            f"extinction={'none' if ext is None else f'{ext:g}'} out={out}",
            file=stream,
        )
    return diag


def run(cfg: ExperimentConfig, stream=None, err_stream=None, backend=None) -> int:
    """Execute one experiment; returns a process exit code (0, 2 or 3)."""
    import sys

    stream = sys.stdout if stream is None else stream
    err_stream = sys.stderr if err_stream is None else err_stream
    try:
        grid, cache, u0, params = build_problem(cfg)
        bound = stability_max_lambda(cfg.s, cfg.tau, cache)
        print(
            f"grid N={grid.N} h={grid.h:g}; mu_max={cache.mu_max:.10g}; "
            f"stability bound lambda < {bound:.6g}",
            file=stream,
        )
        lam = params.solver.resolve_lambda(cache)
        print(f"lambda = {lam:.6g} ({'auto' if cfg.lam == AUTO else 'explicit'})", file=stream)
        traj = evolve(u0, params, cache, backend=backend)
        emit_outputs(traj, cfg, stream=stream)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=err_stream)
        return EXIT_CONFIG
    if cfg.strict and not traj.all_converged:
        print("error: inner solver did not converge (strict mode)", file=err_stream)
        return EXIT_NONCONVERGED
    return EXIT_OK

