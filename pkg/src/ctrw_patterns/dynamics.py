"""Reaction-diffusion master equations on a network and their time integration.

State vectors are species-major: ``X = (u_0..u_{J-1}, v_0..v_{J-1})``.
The right-hand side is ``s * Lambda X + F(X)`` where ``Lambda`` applies
``alpha_m * L`` (in the source-row convention) to species ``m``.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from . import rng as _rng
from .kinetics import DomainError, ReactionModel
from .laplacian import LaplacianMatrix
from .network import Network

log = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SystemState:
    t: float
    X: np.ndarray
    species_count: int = 1

    def __post_init__(self):
        x = np.array(self.X, dtype=float, copy=True).ravel()
        if x.size % self.species_count:
            raise ValueError(f"state of length {x.size} does not split into {self.species_count} species")
        if not np.all(np.isfinite(x)):
            raise ValueError("state contains non-finite values")
        x.setflags(write=False)
        object.__setattr__(self, "X", x)

    @property
    def vertex_count(self) -> int:
        return self.X.size // self.species_count

    def species(self, m: int) -> np.ndarray:
        J = self.vertex_count
        return self.X[m * J:(m + 1) * J]

    def as_matrix(self) -> np.ndarray:
        """``(species_count, J)`` view."""
        return self.X.reshape(self.species_count, -1)


def _check_rates(rates, model: ReactionModel) -> np.ndarray:
    r = np.atleast_1d(np.asarray(rates, dtype=float))
    if r.shape != (model.species_count,):
        raise ValueError(f"need one transport rate per species ({model.species_count}), got {r.shape[0]}")
    if np.any(r < 0):
        raise ValueError("transport rates must be nonnegative")
    return r


@dataclass(frozen=True, eq=False)
class ReactionDiffusionSystem:
    """``dX/dt = s * Lambda X + F(X)`` on one network."""

    laplacian: LaplacianMatrix
    model: ReactionModel
    rates: np.ndarray
    s: float = 1.0
    _coupling: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rates = _check_rates(self.rates, self.model)
        if self.s < 0:
            raise ValueError(f"scale parameter s must be nonnegative, got {self.s}")
        object.__setattr__(self, "rates", rates)
        L = self.laplacian.entries
        # network Laplacians are sparse; a CSR copy of E = L.T keeps rhs O(edges)
        E = scipy.sparse.csr_matrix(L.T) if L.shape[0] > 64 else L.T
        object.__setattr__(self, "_coupling", E)

    @property
    def vertex_count(self) -> int:
        return self.laplacian.size

    @property
    def dimension(self) -> int:
        return self.vertex_count * self.model.species_count

    def rhs(self, X: np.ndarray) -> np.ndarray:
        m = self.model.species_count
        x = np.asarray(X, dtype=float).reshape(m, self.vertex_count)
        # column m of E @ x.T is sum_i L[i, j] x[m, i]: the source-row convention
        transport = (self.s * self.rates)[:, None] * (self._coupling @ x.T).T
        return (transport + self.model.rates(x)).ravel()

    def jacobian(self, X: np.ndarray) -> np.ndarray:
        """Dense Jacobian of :meth:`rhs` at ``X`` (species-major)."""
        m = self.model.species_count
        J = self.vertex_count
        x = np.asarray(X, dtype=float).reshape(m, J)
        jac = self.model.jacobian(x)
        E = self.laplacian.evolution_operator()
        out = np.zeros((m * J, m * J))
        idx = np.arange(J)
        for a in range(m):
            out[a * J:(a + 1) * J, a * J:(a + 1) * J] = (self.s * self.rates[a]) * E
            for b in range(m):
                out[a * J + idx, b * J + idx] += jac[a, b]
        return out

    def newton(self, X0: np.ndarray, tol: float, max_iter: int = 20) -> np.ndarray | None:
        """Newton iteration for ``rhs(X) = 0`` from ``X0``; None if it fails to reach ``tol``."""
        X = np.array(X0, dtype=float)
        positive = self.model.positive_domain
        for _ in range(max_iter):
            try:
                r = self.rhs(X)
                if float(np.max(np.abs(r))) < tol:
                    return X
                step = np.linalg.solve(self.jacobian(X), r)
            except (DomainError, np.linalg.LinAlgError):
                return None
            X = X - step
            if not _valid(X, positive):
                return None
        return None


def rhs(state, laplacian: LaplacianMatrix, rates, model: ReactionModel, s: float = 1.0) -> np.ndarray:
    X = state.X if isinstance(state, SystemState) else state
    return ReactionDiffusionSystem(laplacian, model, rates, s).rhs(X)


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "RK45"
    dt: float = 1e-2
    rtol: float = 1e-8
    atol: float = 1e-10
    dt_min: float = 1e-12
    dt_max: float = math.inf
    t_max: float = 1e5
    steady_rtol: float = 1e-9
    steady_tol: float | None = None
    s: float = 1.0
    snapshot_dt: float | None = None
    max_steps: int = 5_000_000
    newton_polish: bool = True
    polish_rtol: float = 1e-6
    polish_max_shift: float = 1e-3

    def __post_init__(self):
        if self.method not in ("RK45", "RK4"):
            raise ValueError(f"unknown integrator {self.method!r}; expected 'RK45' or 'RK4'")
        for name in ("dt", "rtol", "atol", "dt_min", "dt_max", "t_max", "steady_rtol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"integrator {name} must be positive, got {getattr(self, name)}")
        if self.steady_tol is not None and not self.steady_tol > 0:
            raise ValueError(f"integrator steady_tol must be positive, got {self.steady_tol}")
        if self.dt_min > self.dt:
            raise ValueError("integrator dt_min exceeds dt")
        if self.s < 0:
            raise ValueError(f"scale parameter s must be nonnegative, got {self.s}")

    def steady_threshold(self, X: np.ndarray) -> float:
        if self.steady_tol is not None:
            return self.steady_tol
        return self.steady_rtol * (1.0 + float(np.max(np.abs(X))))


@dataclass
class IntegrationResult:
    state: SystemState
    reason: str  # "steady-state" | "t_max" | "max_steps"
    steps: int
    rejected: int
    residual: float
    snapshots: list[SystemState] = field(default_factory=list)
    polished: bool = False

    @property
    def converged(self) -> bool:
        return self.reason == "steady-state"


# Dormand-Prince 5(4), FSAL
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array(_A[6] + [0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _valid(y, positive: bool) -> bool:
    if not np.all(np.isfinite(y)):
        return False
    return not positive or bool(np.all(y > 0))


def _dopri_step(f, y, k1, h, positive):
    """One DP5(4) step. Returns ``(y_new, k7, error_vector)`` or None if a stage left the domain."""
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks) if a != 0.0)
        if not _valid(yi, positive):
            return None
        try:
            ks.append(f(yi))
        except DomainError:
            return None
    y_new = y + h * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
    err = h * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
    return y_new, ks[6], err


def _rk4_step(f, y, k1, h, positive):
    try:
        y2 = y + 0.5 * h * k1
        if not _valid(y2, positive):
            return None
        k2 = f(y2)
        y3 = y + 0.5 * h * k2
        if not _valid(y3, positive):
            return None
        k3 = f(y3)
        y4 = y + h * k3
        if not _valid(y4, positive):
            return None
        k4 = f(y4)
    except DomainError:
        return None
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(initial_state: SystemState, config: IntegratorConfig, laplacian: LaplacianMatrix,
              rates, model: ReactionModel, steady_stop: bool = True) -> IntegrationResult:
    """Advance until ``t_max`` or until ``||rhs||_inf`` drops below the steady-state tolerance.

    Steps that would leave the model's positive domain are rejected and retried
    with half the step; shrinking below ``dt_min`` raises :class:`IntegrationError`.
    """
    system = ReactionDiffusionSystem(laplacian, model, rates, config.s)
    if initial_state.X.size != system.dimension:
        raise ValueError(f"initial state has {initial_state.X.size} entries, system needs {system.dimension}")
    positive = model.positive_domain
    f = system.rhs
    t = float(initial_state.t)
    y = initial_state.X.copy()
    if not _valid(y, positive):
        raise IntegrationError("initial state outside the model domain")
    k1 = f(y)
    h = min(config.dt, config.dt_max)
    steps = rejected = 0
    m = model.species_count
    snapshots = [SystemState(t, y, m)] if config.snapshot_dt else []
    next_snap = t + config.snapshot_dt if config.snapshot_dt else math.inf
    residual = float(np.max(np.abs(k1)))
    reason = "t_max"
    t_end = t + config.t_max
    polished = False
    next_polish = 0

    while True:
        if steady_stop and residual < config.steady_threshold(y):
            reason = "steady-state"
            break
        if (steady_stop and config.newton_polish and steps >= next_polish
                and residual < config.polish_rtol * (1.0 + float(np.max(np.abs(y))))):
            y_polished = _polish(system, y, config)
            if y_polished is not None:
                y = y_polished
                k1 = f(y)
                residual = float(np.max(np.abs(k1)))
                polished = True
                reason = "steady-state"
                break
            next_polish = steps + 200
        if t >= t_end:
            break
        if steps >= config.max_steps:
            reason = "max_steps"
            break
        h = min(h, t_end - t)
        if config.method == "RK4":
            y_new = _rk4_step(f, y, k1, h, positive)
            if y_new is None or not _valid(y_new, positive):
                rejected += 1
                h *= 0.5
                if h < config.dt_min:
                    raise IntegrationError(f"step size underflow at t={t:.6g} (positivity)")
                continue
            k_new = f(y_new)
            next_h = config.dt
        else:
            out = _dopri_step(f, y, k1, h, positive)
            if out is None or not _valid(out[0], positive):
                rejected += 1
                h *= 0.5
                if h < config.dt_min:
                    raise IntegrationError(f"step size underflow at t={t:.6g} (positivity)")
                continue
            y_new, k_new, err_vec = out
            scale = config.atol + config.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
            if not math.isfinite(err):
                raise IntegrationError(f"non-finite error estimate at t={t:.6g}")
            if err > 1.0:
                rejected += 1
                h *= max(0.2, 0.9 * err ** -0.2)
                if h < config.dt_min:
                    raise IntegrationError(f"step size underflow at t={t:.6g} (error control)")
                continue
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            next_h = min(h * factor, config.dt_max)
        t += h
        y = y_new
        k1 = k_new
        steps += 1
        residual = float(np.max(np.abs(k1)))
        if not np.all(np.isfinite(k1)):
            raise IntegrationError(f"non-finite derivative at t={t:.6g}")
        if t >= next_snap:
            snapshots.append(SystemState(t, y, m))
            while next_snap <= t:
                next_snap += config.snapshot_dt
        h = next_h

    final = SystemState(t, y, m)
    if config.snapshot_dt and (not snapshots or snapshots[-1].t != t):
        snapshots.append(final)
    log.debug("integration stopped (%s) at t=%.6g after %d steps, %d rejected", reason, t, steps, rejected)
    return IntegrationResult(final, reason, steps, rejected, residual, snapshots, polished)


def _polish(system: ReactionDiffusionSystem, y: np.ndarray, config: IntegratorConfig) -> np.ndarray | None:
    # Only accept a Newton root that stays next to the trajectory: far jumps
    # may land on a different (possibly unstable) equilibrium.
    target = 0.01 * config.steady_threshold(y)
    root = system.newton(y, target)
    if root is None:
        return None
    shift = float(np.max(np.abs(root - y)))
    if shift > config.polish_max_shift * float(np.max(np.abs(y))):
        return None
    return root


def homogeneous_state(model: ReactionModel, network_or_size) -> SystemState:
    J = network_or_size if isinstance(network_or_size, int) else network_or_size.vertex_count
    ss = np.asarray(model.steady_state(), dtype=float)
    return SystemState(0.0, np.repeat(ss, J), model.species_count)


def perturbed_initial_state(model: ReactionModel, network: Network | int, relative_amplitude: float,
                            rng_seed: int) -> SystemState:
    """Homogeneous steady state times ``1 + delta``, ``delta ~ U[-a, a]`` per vertex and species."""
    if not 0 < relative_amplitude <= 0.1:
        raise ValueError(f"relative amplitude must lie in (0, 0.1], got {relative_amplitude}")
    base = homogeneous_state(model, network)
    gen = _rng.stream(rng_seed, _rng.INITIAL_CONDITION)
    delta = gen.uniform(-relative_amplitude, relative_amplitude, size=base.X.size)
    return SystemState(0.0, base.X * (1.0 + delta), model.species_count)


def write_trajectory_csv(snapshots, path: str | os.PathLike, species_names=None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "species", "vertex", "value"])
        for snap in snapshots:
            names = species_names or [str(i) for i in range(snap.species_count)]
            for m, row in enumerate(snap.as_matrix()):
                for j, value in enumerate(row):
                    w.writerow([f"{snap.t:.17g}", names[m], j, f"{value:.17g}"])
