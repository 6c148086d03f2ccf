"""Vertex-local reaction kinetics.

A model maps a stack of species concentrations ``x`` with shape ``(m, ...)``
to rates of the same shape, so one call evaluates every vertex at once.
Jacobians come back with shape ``(m, m, ...)`` where ``jac[a, b]`` is the
derivative of species ``a``'s rate with respect to species ``b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class DomainError(ValueError):
    """Rates evaluated outside the model's domain (e.g. non-positive inhibitor)."""


class ReactionModel:
    name: str = "model"
    species_count: int = 1
    species_names: tuple[str, ...] = ("u",)
    positive_domain: bool = False

    def rates(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def steady_state(self) -> np.ndarray:
        """Homogeneous steady state, one value per species."""
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.species_count:
            raise ValueError(f"{self.name} expects {self.species_count} species, got leading dimension {x.shape[0]}")
        if not np.all(np.isfinite(x)):
            raise DomainError(f"{self.name}: non-finite concentration")
        return x


@dataclass(frozen=True)
class ZeroKinetics(ReactionModel):
    """No reactions; pure transport."""

    species_count: int = 1
    name = "none"

    @property
    def species_names(self):
        return ("u", "v", "w")[: self.species_count] if self.species_count <= 3 else tuple(
            f"x{i}" for i in range(self.species_count))

    def rates(self, x):
        return np.zeros_like(self._check(x))

    def jacobian(self, x):
        x = self._check(x)
        return np.zeros((self.species_count,) + x.shape)

    def steady_state(self):
        raise ValueError("pure transport has no isolated homogeneous steady state")


@dataclass(frozen=True)
class Logistic(ReactionModel):
    r: float = 1.0
    name = "logistic"

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"logistic growth rate r must be positive, got {self.r}")

    def rates(self, x):
        u = self._check(x)
        return self.r * u * (1.0 - u)

    def jacobian(self, x):
        u = self._check(x)[0]
        return (self.r * (1.0 - 2.0 * u))[None, None, ...]

    def steady_state(self):
        # carrying capacity, not the trivial u = 0
        return np.array([1.0])

    def params(self):
        return {"r": self.r}


@dataclass(frozen=True)
class LinearKinetics(ReactionModel):
    """``f(u) = a - b u``; the linearised steady pattern is exact for this model."""

    a: float = 1.0
    b: float = 1.0
    name = "linear"

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"linear decay rate b must be positive, got {self.b}")

    def rates(self, x):
        u = self._check(x)
        return self.a - self.b * u

    def jacobian(self, x):
        u = self._check(x)[0]
        return np.full((1, 1) + u.shape, -self.b)

    def steady_state(self):
        return np.array([self.a / self.b])

    def params(self):
        return {"a": self.a, "b": self.b}


@dataclass(frozen=True)
class GMParams:
    c: float = 1.0
    rho: float = 1.0
    rho0: float = 1.0
    mu: float = 5 / 256
    nu: float = 7 / 32
    c_d: float = 5 / 128

    def __post_init__(self):
        for name in ("c", "rho", "rho0", "mu", "nu", "c_d"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"Gierer-Meinhardt parameter {name} must be positive, got {value}")


PAPER_GM_PARAMS = GMParams()


@dataclass(frozen=True)
class GiererMeinhardt(ReactionModel):
    """Activator ``u`` / inhibitor ``v``.

    f(u, v) = c rho u^2 / v - mu u + rho0 rho
    g(u, v) = c_d rho u^2 - nu v

    Only defined for ``v > 0``; the positivity flag makes the integrator reject
    steps that leave the positive orthant.
    """

    p: GMParams = PAPER_GM_PARAMS
    name = "gierer-meinhardt"
    species_count = 2
    species_names = ("u", "v")
    positive_domain = True

    def _check(self, x):
        x = super()._check(x)
        if np.any(x[1] <= 0):
            raise DomainError("gierer-meinhardt: inhibitor concentration must be positive")
        return x

    def rates(self, x):
        x = self._check(x)
        u, v = x[0], x[1]
        p = self.p
        f = p.c * p.rho * u * u / v - p.mu * u + p.rho0 * p.rho
        g = p.c_d * p.rho * u * u - p.nu * v
        return np.stack([f, g])

    def jacobian(self, x):
        x = self._check(x)
        u, v = x[0], x[1]
        p = self.p
        f_u = 2 * p.c * p.rho * u / v - p.mu
        f_v = -p.c * p.rho * u * u / (v * v)
        g_u = 2 * p.c_d * p.rho * u
        g_v = np.full_like(u, -p.nu)
        return np.array([[f_u, f_v], [g_u, g_v]])

    def steady_state(self):
        p = self.p
        u = (p.rho0 * p.rho + p.c * p.nu / p.c_d) / p.mu
        v = p.c_d * p.rho / p.nu * u * u
        return np.array([u, v])

    def steady_state_exact(self) -> tuple[Fraction, Fraction]:
        """Steady state in rational arithmetic (parameters converted exactly from floats)."""
        p = {k: Fraction(getattr(self.p, k)) for k in ("c", "rho", "rho0", "mu", "nu", "c_d")}
        u = (p["rho0"] * p["rho"] + p["c"] * p["nu"] / p["c_d"]) / p["mu"]
        v = p["c_d"] * p["rho"] / p["nu"] * u * u
        return u, v

    def params(self):
        return {k: getattr(self.p, k) for k in ("c", "rho", "rho0", "mu", "nu", "c_d")}


def logistic(r: float = 1.0) -> Logistic:
    return Logistic(r)


def gierer_meinhardt(params: GMParams = PAPER_GM_PARAMS) -> GiererMeinhardt:
    return GiererMeinhardt(params)


def steady_state(model: ReactionModel) -> np.ndarray:
    x = np.asarray(model.steady_state(), dtype=float)
    residual = np.max(np.abs(model.rates(x.reshape(-1, 1))))
    if residual >= 1e-12 * max(1.0, float(np.max(np.abs(x)))):
        raise ArithmeticError(f"{model.name}: steady-state residual {residual:.3e} too large")
    return x


def finite_difference_jacobian(model: ReactionModel, x: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    """Central differences with step ``rel_step * max(1, |x_b|)`` for a single state vector."""
    x = np.asarray(x, dtype=float)
    m = model.species_count
    jac = np.empty((m, m))
    for b in range(m):
        h = rel_step * max(1.0, abs(x[b]))
        xp = x.copy()
        xm = x.copy()
        xp[b] += h
        xm[b] -= h
        jac[:, b] = (model.rates(xp) - model.rates(xm)) / (2 * h)
    return jac


MODELS = {
    "none": ZeroKinetics,
    "logistic": Logistic,
    "linear": LinearKinetics,
    "gierer-meinhardt": GiererMeinhardt,
}


def make_model(name: str, **params) -> ReactionModel:
    """Build a model by name; used by the config loader."""
    if name not in MODELS:
        raise KeyError(name)
    if name == "gierer-meinhardt":
        return GiererMeinhardt(GMParams(**params))
    return MODELS[name](**params)
