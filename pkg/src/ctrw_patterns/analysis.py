"""Linear stability, dispersion relations and pattern diagnostics.

Two routes compute the spectrum of ``s * Lambda + DF(X*)``:

* ``"full"`` assembles the dense ``mJ x mJ`` matrix and runs the in-repo QR
  eigensolver (:mod:`ctrw_patterns.eigen`).  Works for any Laplacian.
* ``"modal"`` uses that both species share one transport operator ``E``.  If
  ``E = P diag(lam) P^-1`` then the system matrix is similar to a block
  diagonal of ``m x m`` blocks ``DF0 + s * diag(rates) * lam_k``, one per
  Laplacian mode.  Case A and Case B operators are diagonally similar to
  symmetric matrices, so ``lam`` is real and obtained from a symmetric
  eigenproblem.  Cost per ``s`` is O(J) instead of O(J^3).

``"auto"`` picks modal when the Laplacian variant allows it.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dynamics import ReactionDiffusionSystem, SystemState
from .eigen import eigen_spectrum, leading
from .kinetics import ReactionModel
from .laplacian import LaplacianMatrix

DEFAULT_S_GRID = np.logspace(-4, 2, 200)
CROSSING_TOL = 1e-8
CONDITION_LIMIT = 1e12
HOMOGENEOUS_TOL = 1e-6
TURING_DEVIATION = 0.1
BIMODAL_SEPARATION = 4.0

__all__ = [
    "eigen_spectrum", "assemble_system_jacobian", "laplacian_modes", "stability_report", "max_real_part",
    "dispersion_relation", "linear_pattern_predictor", "zero_mode", "classify_pattern", "two_means",
    "degree_class_bimodality", "StabilityReport", "DispersionCurve", "PatternPrediction", "Pattern",
]


class SingularSystemError(ArithmeticError):
    pass


class DisconnectedError(ValueError):
    pass


class NotSteadyError(ValueError):
    pass


def _homogeneous(model: ReactionModel, steady_state) -> np.ndarray:
    x = model.steady_state() if steady_state is None else steady_state
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.species_count:
        raise ValueError(f"expected a per-species steady state of length {model.species_count}, got {x.size}")
    return x


def assemble_system_jacobian(laplacian: LaplacianMatrix, model: ReactionModel, steady_state, rates,
                             s: float) -> np.ndarray:
    """Dense ``s * Lambda + DF(X*)`` in species-major ordering.

    ``steady_state`` is either one value per species (homogeneous) or a full
    species-major state vector.
    """
    J = laplacian.size
    m = model.species_count
    x = np.asarray(steady_state, dtype=float).ravel()
    if x.size == m:
        x = np.repeat(x, J)
    if x.size != m * J:
        raise ValueError(f"steady state of length {x.size} does not match {m} species on {J} vertices")
    return ReactionDiffusionSystem(laplacian, model, rates, s).jacobian(x)


# -- modal reduction ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LaplacianModes:
    """Real spectrum of the evolution operator ``E = P diag(values) P^-1``."""

    values: np.ndarray
    vectors: np.ndarray  # right eigenvectors of E, columns


def _balance_weights(laplacian: LaplacianMatrix) -> np.ndarray | None:
    """Positive ``w`` with ``diag(w) @ L`` symmetric (detailed balance), or None."""
    L = laplacian.entries
    if laplacian.variant == "CaseB":
        return np.ones(L.shape[0])
    if laplacian.variant == "CaseA":
        # L[i, j] = alpha / k_i on edges, so k_i * L[i, j] = alpha * A[i, j]
        off = np.where(np.eye(L.shape[0], dtype=bool), 0.0, L)
        return 1.0 / off.max(axis=1)
    try:
        w = zero_mode(laplacian)
    except DisconnectedError:
        return None
    if np.any(w <= 0):
        return None
    S = w[:, None] * L
    if np.max(np.abs(S - S.T)) > 1e-12 * max(1.0, float(np.max(np.abs(S)))):
        return None
    return w


def laplacian_modes(laplacian: LaplacianMatrix) -> LaplacianModes | None:
    """Eigen-decomposition of ``E = L.T`` via a diagonal symmetrisation, or None if unavailable.

    With ``W = diag(w)`` and ``S = W L`` symmetric, ``E = S W^-1`` is similar to
    the symmetric ``W^-1/2 S W^-1/2``.
    """
    w = _balance_weights(laplacian)
    if w is None:
        return None
    S = w[:, None] * laplacian.entries
    S = 0.5 * (S + S.T)
    root = np.sqrt(w)
    vals, q = np.linalg.eigh(S / root[:, None] / root[None, :])
    vecs = root[:, None] * q
    return LaplacianModes(vals, vecs / np.linalg.norm(vecs, axis=0))


def _block_eigs(jac0: np.ndarray, rates: np.ndarray, lam: np.ndarray, s: float) -> np.ndarray:
    """Eigenvalues of ``jac0 + s diag(rates) lam_k`` for every mode; shape ``(K, m)``."""
    m = jac0.shape[0]
    if m == 1:
        return (jac0[0, 0] + s * rates[0] * lam).astype(complex)[:, None]
    if m == 2:
        a = jac0[0, 0] + s * rates[0] * lam
        d = jac0[1, 1] + s * rates[1] * lam
        half_tr = 0.5 * (a + d)
        disc = (0.5 * (a - d)) ** 2 + jac0[0, 1] * jac0[1, 0]
        root = np.sqrt(disc.astype(complex))
        return np.stack([half_tr + root, half_tr - root], axis=1)
    blocks = jac0[None, :, :] + s * lam[:, None, None] * np.diag(rates)[None, :, :]
    return np.linalg.eigvals(blocks)


def _modal_leading_vector(modes: LaplacianModes, jac0, rates, s, k: int, lam_star: complex) -> np.ndarray:
    m = jac0.shape[0]
    block = jac0 + s * modes.values[k] * np.diag(rates)
    if m == 1:
        w = np.ones(1, dtype=complex)
    else:
        # null vector of (block - lam I) via its smallest singular vector
        _, _, vh = np.linalg.svd(block - lam_star * np.eye(m))
        w = vh[-1].conj()
    v = np.kron(w, modes.vectors[:, k]).astype(complex)
    v /= np.linalg.norm(v)
    i = int(np.argmax(np.abs(v)))
    return v * (np.conj(v[i]) / abs(v[i]))


def _reaction_jacobian(model: ReactionModel, x0: np.ndarray) -> np.ndarray:
    return model.jacobian(x0.reshape(-1, 1))[:, :, 0]


def _resolve_method(method: str, laplacian: LaplacianMatrix) -> tuple[str, LaplacianModes | None]:
    if method not in ("auto", "modal", "full"):
        raise ValueError(f"unknown spectrum method {method!r}")
    if method == "full":
        return "full", None
    modes = laplacian_modes(laplacian)
    if modes is None:
        if method == "modal":
            raise ValueError(f"modal reduction unavailable for {laplacian.variant} Laplacian")
        return "full", None
    return "modal", modes


# -- stability ----------------------------------------------------------------

@dataclass
class StabilityReport:
    s: float
    eigenvalues: np.ndarray
    mu_star: complex
    nu_star: np.ndarray | None
    reaction_stable: bool
    turing_unstable: bool
    leading_multiplicity: int = 1

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "mu_star": [self.mu_star.real, self.mu_star.imag],
            "reaction_stable": self.reaction_stable,
            "turing_unstable": self.turing_unstable,
            "leading_multiplicity": self.leading_multiplicity,
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
        }

    def save_json(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1)


def _multiplicity(values: np.ndarray, target: complex) -> int:
    scale = max(1.0, float(np.max(np.abs(values))))
    return int(np.sum(np.abs(values - target) <= 1e-8 * scale))


def stability_report(laplacian: LaplacianMatrix, model: ReactionModel, rates, s: float, steady_state=None,
                     method: str = "auto", vectors: bool = True) -> StabilityReport:
    """Spectrum of the linearisation about the homogeneous reaction steady state."""
    x0 = _homogeneous(model, steady_state)
    rates = np.atleast_1d(np.asarray(rates, dtype=float))
    jac0 = _reaction_jacobian(model, x0)
    reaction_stable = bool(np.max(np.linalg.eigvals(jac0).real) < 0)
    method, modes = _resolve_method(method, laplacian)
    if method == "modal":
        blocks = _block_eigs(jac0, rates, modes.values, s)
        flat = blocks.ravel()
        i = leading(flat)
        mu = complex(flat[i])
        nu = _modal_leading_vector(modes, jac0, rates, s, i // blocks.shape[1], mu) if vectors else None
        # species-major ordering of the modal spectrum does not matter; keep block order
        values = flat
    else:
        M = assemble_system_jacobian(laplacian, model, x0, rates, s)
        if vectors:
            values, V = eigen_spectrum(M, vectors=True)
        else:
            values, V = eigen_spectrum(M), None
        i = leading(values)
        mu = complex(values[i])
        nu = V[:, i] if V is not None else None
    return StabilityReport(
        s=float(s), eigenvalues=values, mu_star=mu, nu_star=nu, reaction_stable=reaction_stable,
        turing_unstable=bool(reaction_stable and mu.real > 0), leading_multiplicity=_multiplicity(values, mu))


def max_real_part(laplacian: LaplacianMatrix, model: ReactionModel, rates, s: float, steady_state=None,
                  method: str = "auto") -> float:
    return _MaxRe(laplacian, model, rates, steady_state, method)(s)


class _MaxRe:
    """Picklable ``s -> Re mu*(s)`` with the Laplacian decomposition cached."""

    def __init__(self, laplacian, model, rates, steady_state, method):
        self.x0 = _homogeneous(model, steady_state)
        self.rates = np.atleast_1d(np.asarray(rates, dtype=float))
        self.jac0 = _reaction_jacobian(model, self.x0)
        self.method, self.modes = _resolve_method(method, laplacian)
        self.laplacian = laplacian
        self.model = model

    def __call__(self, s: float) -> float:
        if self.method == "modal":
            return float(np.max(_block_eigs(self.jac0, self.rates, self.modes.values, s).real))
        M = assemble_system_jacobian(self.laplacian, self.model, self.x0, self.rates, s)
        try:
            return float(np.max(eigen_spectrum(M).real))
        except ArithmeticError as exc:
            raise ArithmeticError(f"eigensolver failed at s={s!r}: {exc}") from exc


# -- dispersion ---------------------------------------------------------------

@dataclass
class DispersionCurve:
    s: np.ndarray
    re_mu_star: np.ndarray
    crossings: list[float] = field(default_factory=list)
    directions: list[int] = field(default_factory=list)  # +1 stable->unstable, -1 back
    residuals: list[float] = field(default_factory=list)

    @property
    def window(self) -> tuple[float, float] | None:
        """``(s_c1, s_c2)``: first onset to last recovery of instability, if both exist."""
        ups = [c for c, d in zip(self.crossings, self.directions) if d > 0]
        downs = [c for c, d in zip(self.crossings, self.directions) if d < 0]
        if not ups or not downs or downs[-1] <= ups[0]:
            return None
        return ups[0], downs[-1]

    def contains(self, s: float) -> bool:
        w = self.window
        return w is not None and w[0] < s < w[1]

    def log_width(self) -> float:
        w = self.window
        return 0.0 if w is None else math.log(w[1] / w[0])

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "re_mu_star"])
            for s, r in zip(self.s, self.re_mu_star):
                w.writerow([f"{s:.17g}", f"{r:.17g}"])


def _bisect(fn, lo: float, hi: float, f_lo: float, tol: float = CROSSING_TOL, max_iter: int = 200):
    mid, f_mid = lo, f_lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi) if lo == 0.0 else math.sqrt(lo * hi)
        f_mid = fn(mid)
        if abs(f_mid) < 0.01 * tol or mid in (lo, hi):
            break
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return mid, f_mid


def _midpoint(a: float, b: float) -> float:
    return 0.5 * (a + b) if a <= 0.0 else math.sqrt(a * b)


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def dispersion_relation(laplacian: LaplacianMatrix, model: ReactionModel, rates, s_grid=None,
                        steady_state=None, method: str = "auto", refine: bool = True,
                        max_refinements: int = 30, workers: int = 1) -> DispersionCurve:
    """Sample ``Re mu*(s)`` and locate its zero crossings.

    Near every sign change the grid is refined until neighbouring samples differ
    by less than 10% of the curve's range; each bracketed crossing is then
    bisected until ``|Re mu*(s_c)| < 1e-8``.
    """
    grid = np.asarray(DEFAULT_S_GRID if s_grid is None else s_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("s_grid needs at least two points")
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("s_grid must be nonnegative and strictly increasing")
    fn = _MaxRe(laplacian, model, rates, steady_state, method)
    s_vals = list(grid)
    r_vals = _map(fn, s_vals, workers)

    if refine:
        for _ in range(max_refinements):
            r = np.asarray(r_vals)
            span = float(r.max() - r.min())
            if span == 0.0:
                break
            sign_change = np.flatnonzero(np.sign(r[:-1]) * np.sign(r[1:]) < 0)
            todo = set()
            for i in sign_change:
                for j in range(max(0, i - 2), min(len(r) - 1, i + 3)):
                    if abs(r[j + 1] - r[j]) > 0.1 * span:
                        todo.add(j)
            if not todo:
                break
            new_s = [_midpoint(s_vals[j], s_vals[j + 1]) for j in sorted(todo)]
            new_r = _map(fn, new_s, workers)
            merged = sorted(zip(s_vals + new_s, r_vals + new_r))
            s_vals = [a for a, _ in merged]
            r_vals = [b for _, b in merged]

    s_arr = np.asarray(s_vals)
    r_arr = np.asarray(r_vals)
    crossings, directions, residuals = [], [], []
    for i in np.flatnonzero(np.sign(r_arr[:-1]) * np.sign(r_arr[1:]) < 0):
        sc, res = _bisect(fn, s_arr[i], s_arr[i + 1], r_arr[i])
        crossings.append(sc)
        directions.append(1 if r_arr[i + 1] > 0 else -1)
        residuals.append(abs(res))
    return DispersionCurve(s_arr, r_arr, crossings, directions, residuals)


# -- Laplacian patterns -------------------------------------------------------

@dataclass
class PatternPrediction:
    delta: np.ndarray      # species-major deviation from the homogeneous state
    pattern: np.ndarray    # homogeneous state + delta
    condition: float
    residual: float        # ||M delta + s Lambda X*||_inf


def linear_pattern_predictor(laplacian: LaplacianMatrix, model: ReactionModel, steady_state=None,
                             s: float = 1.0, rates=None) -> PatternPrediction:
    """Linearised steady pattern ``delta = -(s Lambda + DF)^-1 s Lambda X*``."""
    m = model.species_count
    rates = np.ones(m) if rates is None else np.atleast_1d(np.asarray(rates, dtype=float))
    x0 = _homogeneous(model, steady_state)
    J = laplacian.size
    X = np.repeat(x0, J)
    M = assemble_system_jacobian(laplacian, model, x0, rates, s)
    system = ReactionDiffusionSystem(laplacian, _Transport(m), rates, s)
    forcing = system.rhs(X)
    try:
        cond = float(np.linalg.cond(M, 1))
    except np.linalg.LinAlgError:
        cond = math.inf
    if not math.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularSystemError(f"s Lambda + DF is singular or ill-conditioned (cond_1 = {cond:.3e})")
    delta = -scipy.linalg.solve(M, forcing)
    residual = float(np.max(np.abs(M @ delta + forcing))) if delta.size else 0.0
    return PatternPrediction(delta, X + delta, cond, residual)


class _Transport(ReactionModel):
    """Zero reactions with ``m`` species, for isolating the transport term."""

    def __init__(self, m: int):
        self.species_count = m

    def rates(self, x):
        return np.zeros_like(x)


def zero_mode(laplacian: LaplacianMatrix) -> np.ndarray:
    """Unit-sum null vector of the evolution operator (the no-reaction steady state)."""
    E = laplacian.evolution_operator()
    null = scipy.linalg.null_space(E)
    if null.shape[1] != 1:
        raise DisconnectedError(f"zero eigenspace has dimension {null.shape[1]}; the network is not connected")
    v = null[:, 0]
    return v / v.sum()


# -- classification -----------------------------------------------------------

class Pattern(str, enum.Enum):
    HOMOGENEOUS = "Homogeneous"
    LAPLACIAN = "LaplacianPattern"
    TURING = "TuringPattern"


def _relative_spread(x: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(x))), np.finfo(float).tiny)
    return float(np.max(x) - np.min(x)) / scale


def classify_pattern(steady_pattern, model: ReactionModel, laplacian: LaplacianMatrix, s: float, rates=None,
                     curve: DispersionCurve | None = None, steady_tol: float | None = None,
                     deviation_threshold: float = TURING_DEVIATION) -> Pattern:
    """Homogeneous, Laplacian-driven, or Turing pattern.

    Turing requires ``s`` inside the instability window *and* a relative L-inf
    departure from the linear predictor above ``deviation_threshold``.
    """
    m = model.species_count
    rates = np.ones(m) if rates is None else np.atleast_1d(np.asarray(rates, dtype=float))
    X = steady_pattern.X if isinstance(steady_pattern, SystemState) else np.asarray(steady_pattern, float).ravel()
    system = ReactionDiffusionSystem(laplacian, model, rates, s)
    res = float(np.max(np.abs(system.rhs(X))))
    tol = steady_tol if steady_tol is not None else 1e-9 * (1.0 + float(np.max(np.abs(X))))
    if res >= tol:
        raise NotSteadyError(f"pattern is not steady: ||rhs||_inf = {res:.3e} >= {tol:.3e}")
    per_species = X.reshape(m, -1)
    if all(_relative_spread(row) < HOMOGENEOUS_TOL for row in per_species):
        return Pattern.HOMOGENEOUS
    if curve is None:
        curve = dispersion_relation(laplacian, model, rates)
    if curve.contains(s):
        try:
            pred = linear_pattern_predictor(laplacian, model, s=s, rates=rates).pattern.reshape(m, -1)
            dev = max(float(np.max(np.abs(row - p))) / max(float(np.max(np.abs(p))), np.finfo(float).tiny)
                      for row, p in zip(per_species, pred))
        except SingularSystemError:
            dev = math.inf
        if dev > deviation_threshold:
            return Pattern.TURING
    return Pattern.LAPLACIAN


@dataclass
class TwoMeans:
    low_mean: float
    high_mean: float
    low_count: int
    high_count: int
    spread: float  # pooled within-cluster standard deviation

    @property
    def separation(self) -> float:
        return self.high_mean - self.low_mean

    @property
    def ratio(self) -> float:
        if self.low_count == 0 or self.high_count == 0:
            return 0.0
        if self.spread == 0.0:
            return math.inf if self.separation > 0 else 0.0
        return self.separation / self.spread

    @property
    def bimodal(self) -> bool:
        return self.ratio > BIMODAL_SEPARATION


def two_means(values) -> TwoMeans:
    """Optimal 1-D two-cluster split (minimum within-cluster sum of squares)."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n < 2:
        mean = float(x.mean()) if n else math.nan
        return TwoMeans(mean, mean, n, 0, 0.0)
    c1 = np.cumsum(x)
    c2 = np.cumsum(x * x)
    i = np.arange(1, n)  # size of the low cluster
    ssl = c2[i - 1] - c1[i - 1] ** 2 / i
    ssh = (c2[-1] - c2[i - 1]) - (c1[-1] - c1[i - 1]) ** 2 / (n - i)
    best = int(np.argmin(ssl + ssh))
    nl = best + 1
    within = max(float(ssl[best] + ssh[best]), 0.0)
    return TwoMeans(float(c1[nl - 1] / nl), float((c1[-1] - c1[nl - 1]) / (n - nl)), nl, n - nl,
                    math.sqrt(within / n))


def degree_class_bimodality(values, degrees, degree: int | None = None) -> TwoMeans:
    """Two-means split of the concentrations on one degree class (default: minimum degree)."""
    degrees = np.asarray(degrees)
    d = int(degrees.min()) if degree is None else degree
    return two_means(np.asarray(values)[degrees == d])
