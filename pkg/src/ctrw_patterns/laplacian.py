"""CTRW network Laplacians for exponential waiting times.

Index convention: ``L[i, j]`` couples source vertex ``i`` to destination vertex
``j`` and the transport term of vertex ``j`` is ``sum_i L[i, j] * u[i]``.  In
matrix form the evolution operator is therefore ``L.T``, not ``L``.  Always go
through :meth:`LaplacianMatrix.evolution_operator` or
:meth:`LaplacianMatrix.apply` rather than multiplying ``entries`` directly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .network import Network

SOURCE_ROW = "source-row"
ROW_SUM_TOL = 1e-12


class LaplacianError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LaplacianMatrix:
    entries: np.ndarray
    variant: str  # "CaseA" | "CaseB" | "General"
    rate_params: dict[str, Any] = field(default_factory=dict)
    convention: str = SOURCE_ROW

    def __post_init__(self):
        e = np.array(self.entries, dtype=float, copy=True)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def evolution_operator(self) -> np.ndarray:
        """Matrix ``E`` with ``du/dt = E @ u`` for pure transport."""
        assert self.convention == SOURCE_ROW
        return self.entries.T.copy()

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Transport term ``sum_i L[i, j] u[i]`` for every destination ``j``."""
        return self.entries.T @ u

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.entries, self.entries.T))

    def scaled(self, factor: float) -> "LaplacianMatrix":
        return LaplacianMatrix(self.entries * factor, self.variant, dict(self.rate_params, scale=factor), self.convention)


def _require_positive_degrees(network: Network) -> np.ndarray:
    k = network.degrees
    if np.any(k == 0):
        isolated = np.flatnonzero(k == 0).tolist()
        raise LaplacianError(f"zero-degree vertices {isolated[:10]} cannot diffuse")
    return k.astype(float)


def uniform_jump_matrix(network: Network) -> np.ndarray:
    """``jump[i, j]`` = probability of jumping from ``i`` to ``j`` = ``A[i, j] / k_i``."""
    k = _require_positive_degrees(network)
    return network.adjacency / k[:, None]


def build_general(network: Network, alpha_per_vertex, jump_matrix) -> LaplacianMatrix:
    """General CTRW Laplacian ``L[i, j] = alpha_i * jump[i, j] - alpha_j * delta_ij``.

    ``jump[i, j]`` is the probability that a walker leaving ``i`` lands on ``j``;
    each row must sum to one and be supported on the edges of ``network``.
    """
    J = network.vertex_count
    alpha = np.asarray(alpha_per_vertex, dtype=float)
    jump = np.asarray(jump_matrix, dtype=float)
    if alpha.shape != (J,):
        raise LaplacianError(f"alpha_per_vertex must have shape ({J},), got {alpha.shape}")
    if jump.shape != (J, J):
        raise LaplacianError(f"jump_matrix must have shape ({J}, {J}), got {jump.shape}")
    if np.any(alpha <= 0) or not np.all(np.isfinite(alpha)):
        raise LaplacianError("waiting-time rates must be positive and finite")
    if np.any(jump < 0):
        raise LaplacianError("jump probabilities must be nonnegative")
    off_edge = (jump != 0) & (network.adjacency == 0)
    if np.any(off_edge):
        i, j = np.argwhere(off_edge)[0]
        raise LaplacianError(f"jump probability on non-edge ({i}, {j})")
    rows = jump.sum(axis=1)
    if np.max(np.abs(rows - 1.0)) > 1e-12:
        bad = int(np.argmax(np.abs(rows - 1.0)))
        raise LaplacianError(f"jump matrix row {bad} sums to {rows[bad]!r}, not 1")
    entries = alpha[:, None] * jump - np.diag(alpha)
    return LaplacianMatrix(entries, "General", {"alpha": alpha, "jump": jump})


def build_case_a(network: Network, alpha_A: float) -> LaplacianMatrix:
    """Identical waiting-time rate on every vertex: ``alpha_A * (A[i, j] / k_i - delta_ij)``."""
    if not alpha_A > 0:
        raise LaplacianError(f"alpha_A must be positive, got {alpha_A}")
    k = _require_positive_degrees(network)
    # w_i (A_ij - k_i delta_ij) with w_i = alpha_A / k_i: the same floating-point
    # operations as Case B with alpha_B = alpha_A / d, so regular graphs agree bit for bit
    w = alpha_A / k
    entries = w[:, None] * (network.adjacency - np.diag(k))
    return LaplacianMatrix(entries, "CaseA", {"alpha_A": float(alpha_A)})


def build_case_b(network: Network, alpha_B: float) -> LaplacianMatrix:
    """Rate proportional to degree: ``alpha_B * (A[i, j] - k_j * delta_ij)``, the graph Laplacian."""
    if not alpha_B > 0:
        raise LaplacianError(f"alpha_B must be positive, got {alpha_B}")
    k = network.degrees.astype(float)
    entries = alpha_B * (network.adjacency - np.diag(k))
    return LaplacianMatrix(entries, "CaseB", {"alpha_B": float(alpha_B)})


def build(network: Network, variant: str, alpha: float = 1.0) -> LaplacianMatrix:
    if variant == "CaseA":
        return build_case_a(network, alpha)
    if variant == "CaseB":
        return build_case_b(network, alpha)
    raise LaplacianError(f"unknown Laplacian variant {variant!r}; expected 'CaseA' or 'CaseB'")


def case_b_rescaled_rates(network: Network, base_alpha_u: float, base_alpha_v: float | None = None):
    """Scale species rates by ``J / sum(k)`` so the network-mean waiting time matches Case A.

    Returns ``(alpha_u, alpha_v)``, or just ``alpha_u`` when ``base_alpha_v`` is None.
    """
    J = network.vertex_count
    total = int(network.degrees.sum())
    if total == 0:
        raise LaplacianError(f"network with {J} vertex(es) has no edges; rates cannot be rescaled")
    factor = J / total
    if base_alpha_v is None:
        return base_alpha_u * factor
    return base_alpha_u * factor, base_alpha_v * factor


def save_csv(laplacian: LaplacianMatrix, path: str | os.PathLike) -> None:
    """Row-major dense dump, 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in laplacian.entries:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def load_csv(path: str | os.PathLike) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)
