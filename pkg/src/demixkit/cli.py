"""Command-line entry point.

Usage::

    demixkit <command> --config <file> [--out <dir>] [--seed <n>] [--threads <n>]

``command`` is one of ``demix``, ``phase-diagram``, ``sdim`` or ``demo`` and
must agree with the ``"command"`` key of the JSON config. Exit codes: 0 on
success, 2 for a bad config, 3 for a numerical failure, 4 for an I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .atoms import GaugeSpec
from .exceptions import NumericalError
from .io import DOA_HEADER, SdimRecord, write_csv, write_rows, write_svg_heatmap
from .operators import ConvLift, Dct, Dense, Identity, RandomRotation, SubsampleRows
from .solvers import Component, DemixProblem, SolverOptions, Status, demix, kkt_check

__all__ = ["ConfigError", "RunConfig", "parse_config", "run", "main", "COMMANDS", "DEMOS"]

log = logging.getLogger("demixkit")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

COMMANDS = ("demix", "phase-diagram", "sdim", "demo")
DEMOS = ("spikes-sines", "texture", "doa", "blind-deconv")

COMMON_KEYS = {"command", "seed", "output_dir", "threads", "solver"}
COMMAND_KEYS = {
    "demix": {"observation", "components", "measurement", "quadratic_slack"},
    "phase-diagram": {
        "d", "levels", "sparsities", "trials", "lambdas", "success_tol", "delta_samples", "svg",
    },
    "sdim": {"cone", "samples"},
    "demo": {"name", "params"},
}
SOLVER_KEYS = {"rho", "max_iter", "primal_tol", "dual_tol", "adaptive_rho"}
CONE_KEYS = {"kind", "d", "k", "s", "signs"}
DEMO_KEYS = {
    "spikes-sines": {"d", "s_spike", "s_dct", "lam"},
    "texture": {"image", "size", "block", "corruption", "magnitude", "lam"},
    "doa": {"n", "r", "bearings", "snapshots", "snr_db", "noise_spread_db", "lam", "runs"},
    "blind-deconv": {"m", "d"},
}
OPERATOR_KEYS = {
    "identity": {"kind", "shape"},
    "dense": {"kind", "matrix", "orthogonal"},
    "dct": {"kind", "d"},
    "random_rotation": {"kind", "d", "seed"},
    "subsample": {"kind", "mask"},
    "conv_lift": {"kind", "m", "d"},
}
COMPONENT_KEYS = {"gauge", "weight", "transform", "shape"}


class ConfigError(ValueError):
    """The config file is malformed or inconsistent."""


@dataclass
class RunConfig:
    """Validated run description.

    ``params`` holds the command-specific keys as given in the file.
    ``solver`` is ``None`` when the config has no ``"solver"`` block, in
    which case each command uses its own preset.
    """

    command: str
    params: dict = field(default_factory=dict)
    solver: SolverOptions | None = None
    output_dir: str = "."
    seed: int = 0
    threads: int = 1
    demo: str | None = None


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")


def _require(obj, key, where):
    if key not in obj:
        raise ConfigError(f"missing required key {key!r} in {where}")
    return obj[key]


def _integer(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name!r} must be an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name!r} must be at least {minimum}")
    return value


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name!r} must be a number")
    return float(value)


def _parse_solver(block):
    _check_keys(block, SOLVER_KEYS, "solver")
    kwargs = {}
    for key in ("rho", "primal_tol", "dual_tol"):
        if key in block:
            kwargs[key] = _number(block[key], key)
    if "max_iter" in block:
        kwargs["max_iter"] = _integer(block["max_iter"], "max_iter")
    if "adaptive_rho" in block:
        if not isinstance(block["adaptive_rho"], bool):
            raise ConfigError("'adaptive_rho' must be true or false")
        kwargs["adaptive_rho"] = block["adaptive_rho"]
    try:
        return SolverOptions(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from None


def parse_config(text):
    """Parse and validate a JSON config.

    Unknown keys are rejected at every level. Omitted solver fields take the
    defaults ``rho=1``, ``max_iter=5000``, ``primal_tol=dual_tol=1e-8``.

    Raises
    ------
    ConfigError
        With line and column for malformed JSON, or naming the offending key.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError(f"config is not valid UTF-8 ({exc.reason} at byte {exc.start})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    command = _require(data, "command", "config")
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    _check_keys(data, COMMON_KEYS | COMMAND_KEYS[command], f"{command} config")

    cfg = RunConfig(command=command)
    if "seed" in data:
        cfg.seed = _integer(data["seed"], "seed", 0)
    if "threads" in data:
        cfg.threads = _integer(data["threads"], "threads", 1)
    if "output_dir" in data:
        if not isinstance(data["output_dir"], str):
            raise ConfigError("'output_dir' must be a string")
        cfg.output_dir = data["output_dir"]
    if "solver" in data:
        cfg.solver = _parse_solver(data["solver"])
    params = {k: v for k, v in data.items() if k not in COMMON_KEYS}

    if command == "sdim":
        cone = _require(params, "cone", "sdim config")
        _check_keys(cone, CONE_KEYS, "cone")
        _require(cone, "kind", "cone")
        _integer(params.get("samples", 20000), "samples", 100)
    elif command == "demix":
        _require(params, "observation", "demix config")
        comps = _require(params, "components", "demix config")
        if not isinstance(comps, list) or not comps:
            raise ConfigError("'components' must be a non-empty list")
        for i, comp in enumerate(comps):
            _check_keys(comp, COMPONENT_KEYS, f"components[{i}]")
            _require(comp, "gauge", f"components[{i}]")
    elif command == "phase-diagram":
        if "levels" in params and "sparsities" in params:
            raise ConfigError("give either 'levels' or 'sparsities', not both")
    elif command == "demo":
        name = _require(params, "name", "demo config")
        if name not in DEMOS:
            raise ConfigError(f"unknown demo {name!r}; expected one of {', '.join(DEMOS)}")
        cfg.demo = name
        _check_keys(params.get("params", {}), DEMO_KEYS[name], f"{name} params")
    cfg.params = params
    return cfg


# --- building domain objects -------------------------------------------------


def _operator(spec, where):
    if not isinstance(spec, dict):
        raise ConfigError(f"{where} must be a JSON object")
    kind = _require(spec, "kind", where)
    if kind not in OPERATOR_KEYS:
        raise ConfigError(f"unknown operator kind {kind!r} in {where}")
    _check_keys(spec, OPERATOR_KEYS[kind], where)
    if kind == "identity":
        return Identity(tuple(_require(spec, "shape", where)))
    if kind == "dense":
        return Dense(np.asarray(_require(spec, "matrix", where), dtype=float),
                     orthogonal=bool(spec.get("orthogonal", False)))
    if kind == "dct":
        return Dct(_integer(_require(spec, "d", where), "d", 1))
    if kind == "random_rotation":
        return RandomRotation(_integer(_require(spec, "d", where), "d", 1), spec.get("seed", 0))
    if kind == "subsample":
        return SubsampleRows(np.asarray(_require(spec, "mask", where), dtype=bool))
    return ConvLift(_integer(_require(spec, "m", where), "m", 1), _integer(_require(spec, "d", where), "d", 1))


def _build_demix_problem(params):
    observation = np.asarray(params["observation"], dtype=float)
    measurement = None
    if "measurement" in params:
        measurement = _operator(params["measurement"], "measurement")
    signal_shape = measurement.in_shape if measurement is not None else observation.shape
    components = []
    for i, comp in enumerate(params["components"]):
        where = f"components[{i}]"
        transform = _operator(comp["transform"], f"{where}.transform") if "transform" in comp else None
        shape = comp.get("shape")
        if shape is None:
            shape = transform.out_shape if transform is not None else signal_shape
        gauge = GaugeSpec(comp["gauge"], tuple(shape))
        components.append(Component(gauge, _number(comp.get("weight", 1.0), "weight"), transform))
    slack = params.get("quadratic_slack")
    if slack is not None:
        slack = _number(slack, "quadratic_slack")
    return DemixProblem(observation, components, measurement, slack)


def _build_cone(spec):
    from .geometry import ConeModel, sign_pattern

    kind = spec["kind"]
    if kind == "descent_l1" and "signs" in spec:
        return ConeModel.descent_l1(spec["signs"])
    d = _integer(_require(spec, "d", "cone"), "d", 1)
    if kind == "subspace":
        return ConeModel.subspace(_integer(_require(spec, "k", "cone"), "k", 0), d)
    if kind == "orthant":
        return ConeModel.orthant(d)
    if kind == "descent_l1":
        return ConeModel.descent_l1(sign_pattern(d, _integer(_require(spec, "s", "cone"), "s", 0)))
    raise ConfigError(f"unknown cone kind {kind!r}; expected subspace, orthant or descent_l1")


def _cone_label(cone):
    if cone.kind.value == "subspace":
        return f"subspace(k={cone.k})"
    if cone.kind.value == "descent_l1":
        return f"descent_l1(s={cone.sparsity})"
    return cone.kind.value


# --- commands ----------------------------------------------------------------


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_sdim(cfg, out):
    from .geometry import sdim_monte_carlo

    cone = _build_cone(cfg.params["cone"])
    samples = cfg.params.get("samples", 20000)
    est = sdim_monte_carlo(cone, samples, seed=cfg.seed, threads=cfg.threads)
    record = SdimRecord(_cone_label(cone), cone.d, est.samples, est.mean, est.stderr)
    write_csv(record, os.path.join(out, "sdim.csv"))
    log.info("statistical dimension %.6g +/- %.2g", est.mean, est.stderr)
    return EXIT_OK


def _run_demix(cfg, out):
    problem = _build_demix_problem(cfg.params)
    result = demix(problem, cfg.solver or SolverOptions())
    rows = []
    for k, part in enumerate(result.components):
        rows.extend((k, i, float(v)) for i, v in enumerate(np.ravel(part)))
    write_rows(os.path.join(out, "components.csv"), ("component", "index", "value"), rows)
    report = kkt_check(problem, result)
    _write_json(
        os.path.join(out, "summary.json"),
        {
            "status": result.status.value,
            "iterations": result.iterations,
            "objective": result.objective,
            "primal_residual": float(result.primal_residual[-1]) if len(result.primal_residual) else None,
            "kkt_max_violation": report.max_violation,
            "feasibility_gap": report.feasibility_gap,
        },
    )
    if result.status is Status.DIVERGED:
        raise NumericalError("solver diverged", iterations=result.iterations)
    return EXIT_OK


def _run_phase(cfg, out):
    from .experiments.phase import PHASE_SOLVER, PhaseGridSpec, sparsity_levels

    p = cfg.params
    d = _integer(p.get("d", 64), "d", 1)
    if "sparsities" in p:
        levels = tuple(_integer(s, "sparsities", 1) for s in p["sparsities"])
    else:
        levels = sparsity_levels(d, _integer(p.get("levels", 17), "levels", 1))
    kwargs = {}
    if "lambdas" in p:
        kwargs["lambda_grid"] = tuple(_number(v, "lambdas") for v in p["lambdas"])
    if "success_tol" in p:
        kwargs["success_tol"] = _number(p["success_tol"], "success_tol")
    if "delta_samples" in p:
        kwargs["delta_samples"] = _integer(p["delta_samples"], "delta_samples", 100)
    spec = PhaseGridSpec(
        d=d,
        sparsity_grid=tuple((a, b) for a in levels for b in levels),
        trials_per_cell=_integer(p.get("trials", 25), "trials", 1),
        seed=cfg.seed,
        solver=cfg.solver or PHASE_SOLVER,
        **kwargs,
    )
    from .experiments.phase import run_phase_diagram

    result = run_phase_diagram(spec, threads=cfg.threads)
    write_csv(result, os.path.join(out, "phase.csv"))
    if p.get("svg", True):
        write_svg_heatmap(result, os.path.join(out, "phase.svg"))
    return EXIT_OK


def _run_demo(cfg, out):
    params = dict(cfg.params.get("params", {}))
    name = cfg.demo
    opts = cfg.solver
    if name == "spikes-sines":
        from .experiments.spikes_sines import demo_spikes_sines, write_waveform_csv

        rep = demo_spikes_sines(seed=cfg.seed, opts=opts, **params)
        write_waveform_csv(rep, os.path.join(out, "waveform.csv"))
        summary = {"x_error": rep.x_error, "y_error": rep.y_error, "status": rep.result.status.value}
        status = rep.result.status
    elif name == "texture":
        from .experiments.texture import SyntheticTexture, demo_texture

        lam = params.pop("lam", None)
        if "image" in params:
            image = params.pop("image")
            if params:
                raise ConfigError("'image' cannot be combined with synthetic texture parameters")
        else:
            image = SyntheticTexture(seed=cfg.seed, **params)
        rep = demo_texture(image, lam=lam, opts=opts, out_dir=out)
        summary = {
            "lam": rep.lam,
            "rank": rep.rank,
            "status": rep.result.status.value,
            "low_rank_error": None if math.isnan(rep.low_rank_error) else rep.low_rank_error,
            "sparse_error": None if math.isnan(rep.sparse_error) else rep.sparse_error,
        }
        status = rep.result.status
    elif name == "doa":
        from .experiments.doa import DoaScenario, demo_doa

        lam = params.pop("lam", 1.0)
        runs = _integer(params.pop("runs", 1), "runs", 1)
        if "bearings" in params:
            params["bearings"] = tuple(params["bearings"])
        if "snr_db" in params and params["snr_db"] is None:
            params["snr_db"] = math.inf
        reports = [
            demo_doa(DoaScenario(seed=cfg.seed + k, **params), lam=lam, opts=opts) for k in range(runs)
        ]
        write_rows(os.path.join(out, "doa.csv"), DOA_HEADER, [row for rep in reports for row in rep.rows()])
        raw = np.concatenate([rep.errors_raw for rep in reports])
        dem = np.concatenate([rep.errors_demixed for rep in reports])
        summary = {
            "runs": runs,
            "median_error_raw": float(np.median(raw)),
            "median_error_demixed": float(np.median(dem)),
            "fraction_over_3deg_raw": float(np.mean(raw > 3.0)),
            "fraction_over_3deg_demixed": float(np.mean(dem > 3.0)),
        }
        status = Status.DIVERGED if any(r.result.status is Status.DIVERGED for r in reports) else Status.CONVERGED
    else:
        from .experiments.blind_deconv import demo_blind_deconv

        rep = demo_blind_deconv(seed=cfg.seed, opts=opts, **params)
        rows = [(i, v) for i, v in enumerate(rep.x_hat)]
        write_rows(os.path.join(out, "factor_x.csv"), ("index", "value"), rows)
        write_rows(os.path.join(out, "factor_y.csv"), ("index", "value"), list(enumerate(rep.y_hat)))
        summary = {
            "status": rep.result.status.value,
            "relative_feasibility": rep.relative_feasibility,
            "objective": rep.objective,
            "truth_objective": rep.truth_objective,
        }
        status = rep.result.status
    _write_json(os.path.join(out, "summary.json"), summary)
    if status is Status.DIVERGED:
        raise NumericalError(f"{name} demo diverged")
    return EXIT_OK


RUNNERS = {"sdim": _run_sdim, "demix": _run_demix, "phase-diagram": _run_phase, "demo": _run_demo}


def run(cfg):
    """Execute a parsed config; returns the exit code. Exceptions propagate."""
    os.makedirs(cfg.output_dir, exist_ok=True)
    return RUNNERS[cfg.command](cfg, cfg.output_dir)


def _threads_from_env():
    raw = os.environ.get("DEMIXKIT_THREADS")
    if raw is None or raw == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"DEMIXKIT_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError("DEMIXKIT_THREADS must be at least 1")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="demixkit", description="Convex demixing experiments.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, help="seed (overrides the config)")
    parser.add_argument("--threads", type=int, help="worker count (default: $DEMIXKIT_THREADS, then 1)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, which is our config-error code
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config, "rb") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"demixkit: cannot read config {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    try:
        cfg = parse_config(text)
        if cfg.command != args.command:
            raise ConfigError(f"config is for {cfg.command!r} but {args.command!r} was requested")
        if args.out is not None:
            cfg.output_dir = args.out
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            cfg.seed = args.seed
        threads = args.threads if args.threads is not None else _threads_from_env()
        if threads is not None:
            if threads < 1:
                raise ConfigError("--threads must be at least 1")
            cfg.threads = threads
        return run(cfg)
    except ConfigError as exc:
        print(f"demixkit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"demixkit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"demixkit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError) as exc:
        # domain validation of config values (shapes, ranges, gauge names)
        print(f"demixkit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
