"""Canned experiments producing one data table per figure panel.

Figures 1-5 use a Barabasi-Albert network (k = 3), figures 6-10 the same
experiments on a Watts-Strogatz network (k = 3, p = 0.1):

==========  ==============================================================
fig1, fig6  Case A pure diffusion: vertex, degree, concentration
fig2, fig7  Case A logistic kinetics: concentration and predictor difference
fig3, fig8  Case A Gierer-Meinhardt: u and v panels
fig4, fig9  Case B Gierer-Meinhardt: u and v panels
fig5, fig10 dispersion relations: CaseA and CaseB panels
==========  ==============================================================

The Gierer-Meinhardt runs transport the inhibitor faster than the activator
(``rates = 1/256, 1``); with the opposite assignment the homogeneous state is
stable for every ``s`` and there is nothing to show.
"""

from __future__ import annotations

import csv
import os
import shutil
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import parse_config
from .runner import run_experiment

NETWORKS = {
    "BA": "generator = BA\nJ = {J}\nk = 3\nseed = 1\n",
    "WS": "generator = WS\nJ = {J}\nk = 3\np = 0.1\nseed = 1\n",
}

DIFFUSE = """[experiment]
kind = diffuse
[network]
{net}
[laplacian]
variant = CaseA
[kinetics]
model = none
[initial]
kind = uniform
low = 0.5
high = 1.5
seed = 0
[integrator]
rtol = 1e-11
atol = 1e-13
newton_polish = false
"""

LOGISTIC = """[experiment]
kind = predict
[network]
{net}
[laplacian]
variant = CaseA
[kinetics]
model = logistic
r = 1
[initial]
kind = homogeneous
[integrator]
s = 1
"""

GM = """[experiment]
kind = classify
[network]
{net}
[laplacian]
variant = {variant}
rescale = {rescale}
[kinetics]
model = gierer-meinhardt
rates = 1/256, 1
[initial]
kind = perturbed
amplitude = 0.01
seed = 0
[integrator]
s = window-centre
t_max = 1e6
{grid}"""

DISPERSION = """[experiment]
kind = dispersion
[network]
{net}
[laplacian]
variant = {variant}
rescale = {rescale}
[kinetics]
model = gierer-meinhardt
rates = 1/256, 1
{grid}"""

# small-world windows reach s ~ 400, past the default grid's upper end
GRID = """[analysis]
s_min = 1e-4
s_max = 1e4
s_points = 267
"""


def figure_runs(size: int) -> dict[str, str]:
    """Sub-run name -> INI text."""
    runs = {}
    for offset, family in ((0, "BA"), (5, "WS")):
        net = NETWORKS[family].format(J=size).strip()
        n = lambda i: f"fig{i + offset}"  # noqa: E731
        runs[n(1)] = DIFFUSE.format(net=net)
        runs[n(2)] = LOGISTIC.format(net=net)
        runs[n(3)] = GM.format(net=net, variant="CaseA", rescale="false", grid=GRID)
        runs[n(4)] = GM.format(net=net, variant="CaseB", rescale="true", grid=GRID)
        runs[f"{n(5)}_CaseA"] = DISPERSION.format(net=net, variant="CaseA", rescale="false", grid=GRID)
        runs[f"{n(5)}_CaseB"] = DISPERSION.format(net=net, variant="CaseB", rescale="true", grid=GRID)
    return runs


def _run_one(job):
    name, text, run_dir = job
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.ini").write_text(text, encoding="utf-8")
    try:
        cfg = parse_config(text, base_dir=run_dir)
        run_experiment(cfg, run_dir)
    except Exception as exc:  # reported in the batch summary
        return name, f"{type(exc).__name__}: {exc}"
    return name, None


def _read(path: Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _write(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _panels(name: str, run_dir: Path, out: Path) -> list[str]:
    """Turn one sub-run's outputs into the figure panel tables."""
    index = int(name[3:].split("_")[0])
    kind = (index - 1) % 5 + 1
    written = []
    if kind == 1:
        rows = _read(run_dir / "pattern.csv")
        _write(out / f"{name}.csv", ["vertex", "degree", "concentration"],
               [[r["vertex"], r["degree"], r["value"]] for r in rows])
        written.append(f"{name}.csv")
    elif kind == 2:
        rows = _read(run_dir / "predictor.csv")
        _write(out / f"{name}_concentration.csv", ["vertex", "degree", "concentration"],
               [[r["vertex"], r["degree"], r["simulated"]] for r in rows])
        _write(out / f"{name}_predictor_difference.csv", ["vertex", "degree", "predicted", "simulated", "difference"],
               [[r["vertex"], r["degree"], r["predicted"], r["simulated"], r["difference"]] for r in rows])
        written += [f"{name}_concentration.csv", f"{name}_predictor_difference.csv"]
    elif kind in (3, 4):
        rows = _read(run_dir / "pattern.csv")
        for species in ("u", "v"):
            _write(out / f"{name}_{species}.csv", ["vertex", "degree", "concentration"],
                   [[r["vertex"], r["degree"], r["value"]] for r in rows if r["species"] == species])
            written.append(f"{name}_{species}.csv")
    else:
        shutil.copyfile(run_dir / "dispersion.csv", out / f"{name}.csv")
        written.append(f"{name}.csv")
    return written


def reproduce_figures(size: int = 50, out: str | os.PathLike = "figures", workers: int | None = None):
    """Run every canned experiment; returns ``(tables, failures)``.

    Sub-runs execute as a parallel map, each writing only to its own
    directory under ``out/runs``; results are merged in name order.
    """
    if size not in (50, 500):
        raise ValueError(f"size must be 50 or 500, got {size}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    runs = figure_runs(size)
    jobs = [(name, text, str(out / "runs" / name)) for name, text in sorted(runs.items())]
    workers = workers or os.cpu_count() or 1
    if workers > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]
    failures = {name: err for name, err in results if err is not None}
    tables = []
    if not failures:
        for name, _, run_dir in jobs:
            tables += _panels(name, Path(run_dir), out)
    return sorted(tables), failures
