"""Configuration ingestion, experiment orchestration, and artifact emission.

Tasks: validate, norm, grad, optimize, landscape, certify, reproduce.
Configs are JSON with a strict schema (unknown keys rejected); every flag is
mirrored in the config with flag-over-file precedence.  Artifacts are CSV
logs, JSON summaries, and self-contained SVG figures under the output
directory.  Re-running a config reproduces identical numerical results.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np

from . import __version__
from . import _kernels as kernels
from .certify import riccati_fixed_point
from .errors import HinfoptError, SchemaError
from .hinf import hinf_norm
from .landscape import estimate_weak_convexity, grid_scan_2d, scan_to_csv
from .optimizer import ConstantStep, SqrtHorizonStep, subgradient_method, summarize_run, write_run_csv
from .plant import Plant, builtin_example, plant_from_dict, validate
from .subgrad import clarke_subgradient
from .svgplot import emit_svg

__all__ = ["ExperimentConfig", "ExperimentReport", "parse_config", "run_experiment", "emit_svg", "main"]

TASKS = ("validate", "norm", "grad", "optimize", "landscape", "certify", "reproduce")

_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["plant", "task"],
    "properties": {
        "plant": {
            "oneOf": [
                {"type": "string", "enum": ["example1", "example2", "example3"]},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["A", "B", "Bw", "C", "Q", "R"],
                    "properties": {k: _MATRIX for k in ("A", "B", "Bw", "C", "Q", "R")},
                },
            ]
        },
        "alpha": {"type": "number"},
        "task": {"type": "string", "enum": list(TASKS)},
        "K0": _MATRIX,
        "schedule": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"type": "string", "enum": ["constant", "sqrt_horizon"]},
                "alpha": {"type": "number"},
                "beta": {"type": "number"},
            },
        },
        "T": {"type": "integer", "minimum": 1},
        "rho": {"type": "number"},
        "m_hat": {"type": "number"},
        "nu": {"type": "number"},
        "gamma": {"type": "number"},
        "box": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "number"},
                "minItems": 2,
                "maxItems": 2,
            },
        },
        "resolution": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer"},
        "n_segments": {"type": "integer", "minimum": 1},
        "n_samples": {"type": "integer", "minimum": 1},
        "compute_j": {"type": "boolean"},
        "log_moreau_every": {"type": "integer", "minimum": 0},
        "divergence_cap": {"type": "number"},
        "output_dir": {"type": "string"},
        "hinf": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "grid_size": {"type": "integer", "minimum": 8},
                "refine_tol": {"type": "number"},
                "delta_active": {"type": "number"},
            },
        },
    },
}

# Canned experiment settings for the reproduce task: step sizes 1e-3 / 1e-4
# from two starting gains per system, plus (for the state-feedback system) a
# slow square-root-horizon run that logs the Moreau stationarity series.
REPRODUCE_SETTINGS = {
    "example2": {
        "k0": ([[0.0, -1.9]], [[0.2, -2.0]]),
        "alphas": (1e-3, 1e-4),
        "probe_beta": 1.5e-4,
        "j_star": 8.327,
    },
    "example3": {
        "k0": ([[0.0, 0.0]], [[-5.0, -2.0]]),
        "alphas": (1e-3, 1e-4),
        "default_alpha_param": 0.14,
    },
}
_REPRODUCE_HINF = {"grid_size": 1024}


@dataclass
class ExperimentConfig:
    """Validated, default-filled experiment description."""

    task: str
    plant_spec: Any
    alpha: Optional[float]
    output_dir: str
    seed: int
    options: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        out = {"plant": self.plant_spec, "task": self.task, "output_dir": self.output_dir,
               "seed": self.seed}
        if self.alpha is not None:
            out["alpha"] = self.alpha
        out.update(self.options)
        return out


@dataclass
class ExperimentReport:
    config: dict
    results: dict
    wall_time: float
    versions: dict

    def to_dict(self) -> dict:
        return asdict(self)


def _pointer(parts) -> str:
    return "/" + "/".join(str(p) for p in parts) if parts else ""


def parse_config(source) -> ExperimentConfig:
    """Load and validate a config from a path, JSON text, or dict.

    Raises :class:`SchemaError` carrying a JSON pointer to the offending
    field; unknown keys are rejected.
    """
    if isinstance(source, dict):
        data = source
    else:
        text = None
        candidate = str(source)
        if os.path.exists(candidate):
            with open(candidate, "r", encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = candidate
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError("", f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("", "config must be a JSON object")

    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = list(err.absolute_path)
        if err.validator == "required":
            missing = err.message.split("'")[1]
            raise SchemaError(_pointer(path + [missing]), "required field is missing")
        raise SchemaError(_pointer(path) or "/", err.message)

    plant_spec = data["plant"]
    alpha = data.get("alpha")
    if plant_spec == "example3" and alpha is None and data["task"] != "reproduce":
        raise SchemaError("/alpha", "alpha is required for example3")

    task = data["task"]
    needs_k0 = {"norm": True, "grad": True, "optimize": True, "certify": True}
    if needs_k0.get(task) and "K0" not in data:
        raise SchemaError("/K0", f"K0 is required for task {task!r}")
    if task == "certify" and "gamma" not in data:
        raise SchemaError("/gamma", "gamma is required for task 'certify'")
    if task == "optimize":
        if "T" not in data:
            raise SchemaError("/T", "T is required for task 'optimize'")
        if "schedule" not in data:
            raise SchemaError("/schedule", "schedule is required for task 'optimize'")
        sched = data["schedule"]
        if sched["kind"] == "constant" and "alpha" not in sched:
            raise SchemaError("/schedule/alpha", "constant schedule needs alpha")
        if sched["kind"] == "sqrt_horizon" and "beta" not in sched:
            raise SchemaError("/schedule/beta", "sqrt_horizon schedule needs beta")
    if task == "reproduce" and plant_spec not in ("example2", "example3"):
        raise SchemaError("/plant", "reproduce supports example2 and example3")

    options = {
        k: v
        for k, v in data.items()
        if k not in ("plant", "task", "alpha", "output_dir", "seed")
    }
    return ExperimentConfig(
        task=task,
        plant_spec=plant_spec,
        alpha=alpha,
        output_dir=data.get("output_dir", "out"),
        seed=int(data.get("seed", 0)),
        options=options,
    )


def _build_plant(cfg: ExperimentConfig):
    if isinstance(cfg.plant_spec, str):
        alpha = cfg.alpha
        if cfg.plant_spec == "example3" and alpha is None:
            alpha = REPRODUCE_SETTINGS["example3"]["default_alpha_param"]
        return builtin_example(cfg.plant_spec, alpha)
    return plant_from_dict(cfg.plant_spec), None


def _schedule_from_config(sched: dict, horizon: int):
    if sched["kind"] == "constant":
        return ConstantStep(float(sched["alpha"]))
    return SqrtHorizonStep(beta=float(sched["beta"]), horizon=horizon)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _task_validate(cfg, plant, meta, out):
    violations = validate(plant)
    return {"violations": violations, "valid": not violations}


def _task_norm(cfg, plant, meta, out):
    res = hinf_norm(plant, np.asarray(cfg.options["K0"], float), **cfg.options.get("hinf", {}))
    return {
        "value": res.value,
        "flat": res.flat,
        "grid_size": res.grid_size,
        "active": [{"omega": om, "sigma": tr.sigma} for om, tr in res.active],
    }


def _task_grad(cfg, plant, meta, out):
    info = clarke_subgradient(
        plant, np.asarray(cfg.options["K0"], float), **cfg.options.get("hinf", {})
    )
    return {
        "J": info.J_at_K,
        "omega": info.omega,
        "sigma": info.triple.sigma,
        "G": info.G.tolist(),
        "grad_norm": float(np.linalg.norm(info.G)),
    }


def _task_certify(cfg, plant, meta, out):
    res = riccati_fixed_point(
        plant, np.asarray(cfg.options["K0"], float), float(cfg.options["gamma"])
    )
    return {
        "gamma": res.gamma,
        "feasible": res.feasible,
        "P": res.P.tolist() if res.P is not None else None,
        "lambda_max_of_Lambda": res.lambda_max,
        "iterations": res.iterations,
    }


def _task_optimize(cfg, plant, meta, out):
    opts = cfg.options
    horizon = int(opts["T"])
    schedule = _schedule_from_config(opts["schedule"], horizon)
    log = subgradient_method(
        plant,
        np.asarray(opts["K0"], float),
        schedule,
        horizon,
        log_moreau_every=int(opts.get("log_moreau_every", 0)),
        rho=opts.get("rho"),
        m_hat=opts.get("m_hat"),
        divergence_cap=float(opts.get("divergence_cap", 1e8)),
        hinf_opts=opts.get("hinf"),
    )
    write_run_csv(log, out / "run.csv")
    summary = summarize_run(log)
    ts = np.arange(len(log))
    finite = log.stabilizing
    emit_svg(
        "line",
        {
            "series": [{"x": ts[finite].tolist(), "y": log.J[finite].tolist(), "label": "J"}],
            "log_y": True,
            "title": "cost along the subgradient run",
            "x_label": "iteration",
        },
        out / "cost.svg",
    )
    return {
        "status": log.status,
        "status_t": log.status_t,
        "best_index": log.best_index,
        "min_J": summary.min_J,
        "min_grad_norm": summary.min_grad_norm,
        "min_moreau_grad": summary.min_moreau_grad,
        "steps_to_tolerance": summary.steps_to_tolerance,
        "final_K": log.final_K.tolist(),
        "csv": "run.csv",
    }


def _task_landscape(cfg, plant, meta, out):
    opts = cfg.options
    d = plant.dims
    box = opts.get("box") or (meta.scan_box if meta else None)
    if box is None:
        raise SchemaError("/box", "box is required for landscape on a custom plant")
    hinf_opts = opts.get("hinf", {})
    if d.n_u * d.n_y == 1:
        res = int(opts.get("resolution", 400))
        lo, hi = box[0]
        ks = np.linspace(float(lo), float(hi), res)
        js = np.full(res, np.inf)
        from .subgrad import _clarke_fast

        for i, k in enumerate(ks):
            j, _, _, _, _, _, _ = _clarke_fast(plant, np.array([[k]]), **hinf_opts)
            js[i] = j
        import csv as _csv

        with open(out / "curve.csv", "w", newline="", encoding="utf-8") as fh:
            w = _csv.writer(fh)
            w.writerow(["k", "J"])
            for k, j in zip(ks, js):
                w.writerow([repr(float(k)), repr(float(j)) if np.isfinite(j) else ""])
        mask = np.isfinite(js)
        emit_svg(
            "line",
            {
                "series": [{"x": ks[mask].tolist(), "y": js[mask].tolist(), "label": "J(k)"}],
                "log_y": True,
                "title": "cost over the gain interval",
                "x_label": "k",
            },
            out / "curve.svg",
        )
        jmin = float(js[mask].min()) if mask.any() else None
        return {"kind": "curve", "j_min_grid": jmin, "csv": "curve.csv", "svg": "curve.svg"}

    res = int(opts.get("resolution", 400))
    scan = grid_scan_2d(
        plant, box, res, compute_j=bool(opts.get("compute_j", True)), hinf_opts=hinf_opts
    )
    scan_to_csv(scan, out / "scan.csv")
    components = {
        "n_components": scan.n_components,
        "resolution": scan.resolution,
        "box": scan.box,
        "j_star_grid": scan.j_star_grid,
        "argmin_cell": scan.argmin_cell,
        "argmin_gains": None
        if scan.argmin_cell is None
        else [float(scan.k1[scan.argmin_cell[0]]), float(scan.k2[scan.argmin_cell[1]])],
    }
    _write_json(out / "components.json", components)
    if scan.j_values is not None:
        emit_svg(
            "heatmap",
            {"values": scan.j_values, "title": "cost over the gain box (grey = not stabilizing)"},
            out / "heatmap.svg",
        )
    return {"kind": "scan", **components, "csv": "scan.csv", "svg": "heatmap.svg"}


def _run_one(args):
    plant_arrays, spec = args
    plant = Plant(**plant_arrays)
    horizon = spec["T"]
    schedule = _schedule_from_config(spec["schedule"], horizon)
    log = subgradient_method(
        plant,
        np.asarray(spec["K0"], float),
        schedule,
        horizon,
        log_moreau_every=spec.get("log_moreau_every", 0),
        rho=spec.get("rho"),
        m_hat=spec.get("m_hat"),
        hinf_opts=spec.get("hinf"),
    )
    return log


def _task_reproduce(cfg, plant, meta, out):
    opts = cfg.options
    name = cfg.plant_spec
    settings = REPRODUCE_SETTINGS[name]
    horizon = int(opts.get("T", 200000))
    hinf_opts = {**_REPRODUCE_HINF, **opts.get("hinf", {})}
    plant_arrays = {
        "A": plant.A, "B": plant.B, "Bw": plant.Bw, "C": plant.C, "Q": plant.Q, "R": plant.R
    }

    specs = []
    for k0 in settings["k0"]:
        for alpha in settings["alphas"]:
            specs.append({
                "name": f"k0_{settings['k0'].index(k0)}_alpha_{alpha:g}",
                "K0": k0,
                "schedule": {"kind": "constant", "alpha": alpha},
                "T": horizon,
                "hinf": hinf_opts,
            })

    m_hat = None
    rho = None
    if name == "example2":
        est = estimate_weak_convexity(
            plant,
            nu=float(opts.get("nu", 12.0)),
            n_segments=int(opts.get("n_segments", 200)),
            seed=cfg.seed,
            box=meta.scan_box,
            hinf_opts=hinf_opts,
        )
        m_hat = est.m_hat
        rho = 2.0 * m_hat if m_hat > 0.0 else 1.0
        specs.append({
            "name": "stationarity_probe",
            "K0": settings["k0"][0],
            "schedule": {"kind": "sqrt_horizon", "beta": float(opts.get("probe_beta", settings["probe_beta"]))},
            "T": horizon,
            "log_moreau_every": max(1, horizon // 100),
            "rho": rho,
            "m_hat": m_hat,
            "hinf": hinf_opts,
        })

    threads = max(1, int(os.environ.get("HINFOPT_THREADS", "1")))
    jobs = [(plant_arrays, spec) for spec in specs]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            logs = list(pool.map(_run_one, jobs))
    else:
        logs = [_run_one(job) for job in jobs]

    j_star = settings.get("j_star")
    runs = []
    series_residual = []
    series_cost = []
    series_gradsq = []
    for spec, log in zip(specs, logs):
        csv_name = f"run_{spec['name']}.csv"
        write_run_csv(log, out / csv_name)
        finite = log.stabilizing
        ts = np.arange(len(log))
        entry = {
            "name": spec["name"],
            "K0": spec["K0"],
            "schedule": spec["schedule"],
            "T": spec["T"],
            "status": log.status,
            "all_stabilizing": bool(log.stabilizing.all()),
            "min_J": float(np.min(log.J[finite])) if finite.any() else None,
            "argmin_t": int(log.best_index),
            "csv": csv_name,
        }
        if j_star is not None and finite.any():
            run_min = np.minimum.accumulate(np.abs(log.J[finite] - j_star) / j_star)
            entry["min_relative_residual"] = float(run_min[-1])
            series_residual.append({
                "x": ts[finite][:: max(1, len(ts) // 2000)].tolist(),
                "y": run_min[:: max(1, len(ts) // 2000)].tolist(),
                "label": spec["name"],
            })
        if finite.any():
            run_cost = np.minimum.accumulate(log.J[finite])
            gradsq = np.minimum.accumulate(log.grad_norm[finite] ** 2)
            stride = max(1, len(ts) // 2000)
            series_cost.append({
                "x": ts[finite][::stride].tolist(), "y": run_cost[::stride].tolist(),
                "label": spec["name"],
            })
            series_gradsq.append({
                "x": ts[finite][::stride].tolist(), "y": gradsq[::stride].tolist(),
                "label": spec["name"],
            })
        if log.moreau:
            entry["moreau"] = [[int(t), float(v)] for t, v in log.moreau]
        runs.append(entry)

    if series_residual:
        emit_svg(
            "line",
            {"series": series_residual, "log_y": True,
             "title": "best relative cost residual", "x_label": "iteration"},
            out / "residuals.svg",
        )
    emit_svg(
        "line",
        {"series": series_cost, "log_y": True, "title": "running minimum cost",
         "x_label": "iteration"},
        out / "cost.svg",
    )
    emit_svg(
        "line",
        {"series": series_gradsq, "log_y": True,
         "title": "running minimum squared subgradient norm", "x_label": "iteration"},
        out / "gradnorm.svg",
    )

    results = {
        "runs": runs,
        "j_star_reference": j_star,
        "m_hat": m_hat,
        "rho": rho,
        "T": horizon,
        "hinf": hinf_opts,
    }
    if j_star is not None:
        residuals = [r["min_relative_residual"] for r in runs if "min_relative_residual" in r]
        results["best_relative_residual"] = min(residuals) if residuals else None
    _write_json(out / "summary.json", results)
    return results


_TASK_HANDLERS = {
    "validate": _task_validate,
    "norm": _task_norm,
    "grad": _task_grad,
    "optimize": _task_optimize,
    "landscape": _task_landscape,
    "certify": _task_certify,
    "reproduce": _task_reproduce,
}


def run_experiment(config: ExperimentConfig, out_dir=None) -> ExperimentReport:
    """Dispatch a validated config to its task and write artifacts."""
    started = time.perf_counter()
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    plant, meta = _build_plant(config)
    results = _TASK_HANDLERS[config.task](config, plant, meta, out)
    wall = time.perf_counter() - started
    report = ExperimentReport(
        config=_jsonable(config.resolved()),
        results=_jsonable(results),
        wall_time=wall,
        versions={
            "hinfopt": __version__,
            "backend": kernels.BACKEND,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
    )
    _write_json(out / "report.json", report.to_dict())
    return report


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hinfopt",
        description="Static output-feedback H-infinity policy optimization toolkit",
    )
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", help="JSON config file (or inline JSON)")
    parser.add_argument("--out", help="output directory (overrides config output_dir)")
    parser.add_argument("--plant", help="builtin plant name or inline plant JSON")
    parser.add_argument("--alpha", type=float, help="alpha parameter for example3")
    parser.add_argument("--k0", help="initial gain as JSON, e.g. [[-0.5]]")
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--t", type=int, help="iteration count")
    parser.add_argument("--resolution", type=int)
    parser.add_argument("--nu", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--box", help="scan box as JSON, e.g. [[-6,2],[-4,2]]")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        data: dict = {}
        if args.config:
            if os.path.exists(args.config):
                with open(args.config, "r", encoding="utf-8") as fh:
                    data = json.load(fh)
            else:
                data = json.loads(args.config)
            if not isinstance(data, dict):
                raise SchemaError("", "config must be a JSON object")
        data["task"] = args.task
        if args.plant is not None:
            if args.plant.lstrip().startswith("{"):
                data["plant"] = json.loads(args.plant)
            else:
                data["plant"] = args.plant
        if args.alpha is not None:
            data["alpha"] = args.alpha
        if args.k0 is not None:
            data["K0"] = json.loads(args.k0)
        if args.gamma is not None:
            data["gamma"] = args.gamma
        if args.t is not None:
            data["T"] = args.t
        if args.resolution is not None:
            data["resolution"] = args.resolution
        if args.nu is not None:
            data["nu"] = args.nu
        if args.seed is not None:
            data["seed"] = args.seed
        if args.box is not None:
            data["box"] = json.loads(args.box)
        if args.out is not None:
            data["output_dir"] = args.out
        cfg = parse_config(data)
        report = run_experiment(cfg)
    except HinfoptError as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, SchemaError):
            payload["json_pointer"] = exc.json_pointer
        print(json.dumps(payload), file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(json.dumps({"error": "SchemaError", "message": f"invalid JSON: {exc}"}),
              file=sys.stderr)
        return 1
    print(json.dumps({"task": cfg.task, "output_dir": str(cfg.output_dir if args.out is None else args.out),
                      "wall_time": report.wall_time}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
