"""Execute one experiment config and write its artifact files."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import platform
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import analysis as an
from . import dynamics as dy
from . import laplacian as lp
from . import network as nw
from . import rng as _rng
from .config import WINDOW_CENTRE, ExperimentConfig

log = logging.getLogger(__name__)


class NoTuringWindow(ArithmeticError):
    pass


@dataclass
class RunResult:
    output_dir: Path
    files: list[str]
    summary: dict


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def build_network(cfg: ExperimentConfig) -> nw.Network:
    if cfg.network.generator == "edge-list":
        return nw.load_edge_list(cfg.base_dir / cfg.network.path)
    return cfg.network.generator_config().build()


def species_rates(cfg: ExperimentConfig, network: nw.Network) -> np.ndarray:
    rates = np.asarray(cfg.kinetics.rates, dtype=float)
    if cfg.laplacian.rescale:
        rates = rates * lp.case_b_rescaled_rates(network, 1.0)
    return rates


def s_grid(cfg: ExperimentConfig) -> np.ndarray:
    a = cfg.analysis
    return np.logspace(math.log10(a.s_min), math.log10(a.s_max), a.s_points)


def initial_state(cfg: ExperimentConfig, model, network: nw.Network) -> dy.SystemState:
    init = cfg.initial
    if init.kind == "homogeneous":
        return dy.homogeneous_state(model, network)
    if init.kind == "perturbed":
        return dy.perturbed_initial_state(model, network, init.amplitude, init.seed)
    gen = _rng.stream(init.seed, _rng.INITIAL_CONDITION)
    X = gen.uniform(init.low, init.high, size=model.species_count * network.vertex_count)
    return dy.SystemState(0.0, X, model.species_count)


def write_pattern_csv(path: Path, state: dy.SystemState, degrees: np.ndarray, names) -> None:
    """Rows ordered by species, then degree, then value (the figure layout)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vertex", "degree", "species", "value"])
        for m, values in enumerate(state.as_matrix()):
            for j in sorted(range(values.size), key=lambda j: (degrees[j], values[j], j)):
                w.writerow([j, int(degrees[j]), names[m], _fmt(values[j])])


def write_predictor_csv(path: Path, predicted: np.ndarray, simulated: np.ndarray, degrees, names) -> None:
    m = len(names)
    P = predicted.reshape(m, -1)
    S = simulated.reshape(m, -1)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["vertex", "degree", "species", "predicted", "simulated", "difference"])
        for a in range(m):
            for j in sorted(range(P.shape[1]), key=lambda j: (degrees[j], S[a, j], j)):
                w.writerow([j, int(degrees[j]), names[a], _fmt(P[a, j]), _fmt(S[a, j]), _fmt(P[a, j] - S[a, j])])


def _dump_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def versions() -> dict:
    return {"ctrw_patterns": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": ".".join(map(str, sys.version_info[:3])), "machine": platform.machine()}


def run_experiment(cfg: ExperimentConfig, output_dir: Path | None = None) -> RunResult:
    out = Path(output_dir) if output_dir is not None else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    files: list[str] = []
    summary: dict = {"kind": cfg.kind}

    network = build_network(cfg)
    nw.save_edge_list(network, out / "network.txt")
    files.append("network.txt")
    degrees = network.degrees
    L = lp.build(network, cfg.laplacian.variant, cfg.laplacian.alpha)
    model = cfg.kinetics.build()
    rates = species_rates(cfg, network)
    names = list(getattr(model, "species_names", None) or [f"x{i}" for i in range(model.species_count)])
    summary["rates"] = rates.tolist()

    curve = None
    if cfg.kind == "dispersion" or cfg.kind == "classify" or cfg.s_spec == WINDOW_CENTRE:
        curve = an.dispersion_relation(L, model, rates, s_grid=s_grid(cfg), method=cfg.analysis.method,
                                       workers=cfg.analysis.workers)
        curve.to_csv(out / "dispersion.csv")
        files.append("dispersion.csv")
        window = curve.window
        summary["window"] = list(window) if window else None
        summary["crossings"] = [{"s": c, "direction": d, "residual": r}
                                for c, d, r in zip(curve.crossings, curve.directions, curve.residuals)]
    if cfg.s_spec == WINDOW_CENTRE:
        if curve.window is None:
            raise NoTuringWindow("no Turing window on the analysis grid; cannot place s at its centre")
        s = math.sqrt(curve.window[0] * curve.window[1])
    else:
        s = float(cfg.s_spec)
    summary["s"] = s

    if cfg.kind != "dispersion":
        icfg = dy.IntegratorConfig(**{**cfg.integrator.__dict__, "s": s})
        x0 = initial_state(cfg, model, network)
        res = dy.integrate(x0, icfg, L, rates, model)
        summary.update(reason=res.reason, t=res.state.t, steps=res.steps, rejected=res.rejected,
                       residual=res.residual, newton_polished=res.polished)
        write_pattern_csv(out / "pattern.csv", res.state, degrees, names)
        files.append("pattern.csv")
        if res.snapshots:
            dy.write_trajectory_csv(res.snapshots, out / "trajectory.csv", names)
            files.append("trajectory.csv")
        means = res.state.as_matrix().mean(axis=1)
        summary["mean"] = means.tolist()
        try:
            ss = np.asarray(model.steady_state(), dtype=float)
            summary["mean_relative_to_steady_state"] = (means / ss).tolist()
        except ValueError:
            pass

        if cfg.kind == "predict":
            pred = an.linear_pattern_predictor(L, model, s=s, rates=rates)
            write_predictor_csv(out / "predictor.csv", pred.pattern, res.state.X, degrees, names)
            files.append("predictor.csv")
            summary["predictor"] = {"condition": pred.condition, "residual": pred.residual,
                                    "max_abs_difference": float(np.max(np.abs(pred.pattern - res.state.X)))}

        if cfg.kind == "classify":
            pattern = an.classify_pattern(res.state, model, L, s, rates=rates, curve=curve,
                                          steady_tol=icfg.steady_threshold(res.state.X),
                                          deviation_threshold=cfg.analysis.deviation_threshold)
            split = {}
            for name, values in zip(names, res.state.as_matrix()):
                tm = an.degree_class_bimodality(values, degrees)
                split[name] = {"degree": int(degrees.min()), "low_mean": tm.low_mean, "high_mean": tm.high_mean,
                               "low_count": tm.low_count, "high_count": tm.high_count,
                               "separation_over_spread": tm.ratio if math.isfinite(tm.ratio) else "inf",
                               "bimodal": tm.bimodal}
            classification = {"pattern": pattern.value, "s": s, "window": summary.get("window"),
                              "inside_window": curve.contains(s), "min_degree_split": split}
            _dump_json(out / "classification.json", classification)
            files.append("classification.json")
            summary["pattern"] = pattern.value

    _dump_json(out / "summary.json", summary)
    files.append("summary.json")
    manifest = {
        "config": cfg.to_ini(),
        "seeds": {"network": cfg.network.seed, "initial": cfg.initial.seed},
        "versions": versions(),
        "files": {f: hashlib.sha256((out / f).read_bytes()).hexdigest() for f in files},
    }
    _dump_json(out / "manifest.json", manifest)
    files.append("manifest.json")
    log.info("wrote %d files to %s", len(files), out)
    return RunResult(out, files, summary)
