"""Undirected simple graphs: construction, random generators and edge-list IO."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import rng as _rng

WS_MAX_RETRIES = 100


class InvalidParameters(ValueError):
    pass


class GenerationFailed(RuntimeError):
    pass


class EdgeListError(ValueError):
    """Malformed edge-list file. ``lineno`` is 1-based, or None for whole-file errors."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        prefix = f"line {lineno}: " if lineno is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True, eq=False)
class Network:
    """Undirected simple graph on vertices ``0..J-1``.

    The adjacency matrix is stored densely as a read-only ``uint8`` array; the
    target scale (a few thousand vertices) keeps this cheap and the Laplacian
    builders need the dense form anyway.
    """

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=np.uint8, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise InvalidParameters(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
        if np.any(a > 1):
            raise InvalidParameters("adjacency entries must be 0 or 1")
        if np.any(np.diag(a)):
            raise InvalidParameters("self-loops are not allowed")
        if not np.array_equal(a, a.T):
            raise InvalidParameters("adjacency must be symmetric")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @classmethod
    def from_edges(cls, vertex_count: int, edges: Iterable[tuple[int, int]]) -> "Network":
        if vertex_count < 1:
            raise InvalidParameters(f"vertex_count must be positive, got {vertex_count}")
        a = np.zeros((vertex_count, vertex_count), dtype=np.uint8)
        for i, j in edges:
            if not (0 <= i < vertex_count and 0 <= j < vertex_count):
                raise InvalidParameters(f"edge ({i}, {j}) out of range for {vertex_count} vertices")
            if i == j:
                raise InvalidParameters(f"self-loop at vertex {i}")
            if a[i, j]:
                raise InvalidParameters(f"duplicate edge ({i}, {j})")
            a[i, j] = a[j, i] = 1
        return cls(a)

    @property
    def vertex_count(self) -> int:
        return self.adjacency.shape[0]

    def __len__(self) -> int:
        return self.vertex_count

    @cached_property
    def degrees(self) -> np.ndarray:
        d = self.adjacency.sum(axis=1, dtype=np.int64)
        d.setflags(write=False)
        return d

    @property
    def edge_count(self) -> int:
        return int(self.degrees.sum()) // 2

    @cached_property
    def _neighbors(self) -> tuple[np.ndarray, ...]:
        return tuple(np.flatnonzero(row) for row in self.adjacency)

    def neighbors(self, i: int) -> np.ndarray:
        return self._neighbors[i]

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i, j])

    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(i, j)`` with ``i < j``, sorted lexicographically."""
        i, j = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(i.tolist(), j.tolist()))

    def component_count(self) -> int:
        n, _ = connected_components(csr_matrix(self.adjacency), directed=False)
        return int(n)

    def is_connected(self) -> bool:
        return self.component_count() == 1

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash(self.adjacency.tobytes())

    def __repr__(self):
        return f"Network(J={self.vertex_count}, edges={self.edge_count})"


# -- deterministic families ---------------------------------------------------

def complete_graph(J: int) -> Network:
    a = np.ones((J, J), dtype=np.uint8)
    np.fill_diagonal(a, 0)
    return Network(a)


def path_graph(J: int) -> Network:
    return Network.from_edges(J, [(i, i + 1) for i in range(J - 1)])


def cycle_graph(J: int) -> Network:
    if J < 3:
        raise InvalidParameters(f"a simple cycle needs at least 3 vertices, got {J}")
    return Network.from_edges(J, [(i, (i + 1) % J) for i in range(J)])


def star_graph(J: int) -> Network:
    """Hub is vertex 0, leaves are ``1..J-1``."""
    return Network.from_edges(J, [(0, i) for i in range(1, J)])


def _ring_lattice_edges(J: int, k: int) -> list[tuple[int, int]]:
    # Offsets 1..k//2 on both sides; for odd k every even-indexed vertex gets one
    # extra chord to an odd offset so the chord lands on an odd vertex and the
    # lattice is k-regular whenever J is even.
    half = k // 2
    seen: set[tuple[int, int]] = set()
    out = []

    def add(i, j):
        e = (min(i, j), max(i, j))
        if i != j and e not in seen:
            seen.add(e)
            out.append(e)

    for d in range(1, half + 1):
        for i in range(J):
            add(i, (i + d) % J)
    if k % 2:
        chord = half + 1 if (half + 1) % 2 else half + 2
        for i in range(0, J - J % 2, 2):
            add(i, (i + chord) % J)
    return out


def ring_lattice(J: int, k: int) -> Network:
    """Ring lattice with ``floor(J*k/2)`` edges (fewer only when offsets wrap onto each other)."""
    if not 1 <= k < J:
        raise InvalidParameters(f"ring lattice requires 1 <= k < J, got k={k}, J={J}")
    return Network.from_edges(J, _ring_lattice_edges(J, k))


# -- random generators --------------------------------------------------------

def generate_ba(J: int, k: int, rng_seed: int) -> Network:
    """Barabasi-Albert preferential attachment.

    Starts from the complete graph on ``k + 1`` vertices. Each new vertex picks
    ``k`` distinct existing vertices with probability proportional to their
    current degree, re-drawing duplicates.
    """
    if not 1 <= k < J:
        raise InvalidParameters(f"BA requires 1 <= k < J, got k={k}, J={J}")
    gen = _rng.stream(rng_seed, _rng.NETWORK)
    a = np.zeros((J, J), dtype=np.uint8)
    seed_size = k + 1
    a[:seed_size, :seed_size] = 1
    np.fill_diagonal(a, 0)
    # vertex v appears deg(v) times, so a uniform draw is degree-proportional
    pool = [v for v in range(seed_size) for _ in range(k)]
    for v in range(seed_size, J):
        chosen: list[int] = []
        while len(chosen) < k:
            t = pool[int(gen.integers(len(pool)))]
            if t not in chosen:
                chosen.append(t)
        for t in chosen:
            a[v, t] = a[t, v] = 1
        pool.extend(chosen)
        pool.extend([v] * k)
    return Network(a)


def _rewire(J: int, lattice: list[tuple[int, int]], p: float, gen: np.random.Generator) -> list[set[int]]:
    adj = [set() for _ in range(J)]
    for i, j in lattice:
        adj[i].add(j)
        adj[j].add(i)
    for i, j in lattice:
        if gen.random() >= p:
            continue
        if len(adj[i]) >= J - 1:
            continue
        while True:
            w = int(gen.integers(J))
            if w != i and w not in adj[i]:
                break
        adj[i].discard(j)
        adj[j].discard(i)
        adj[i].add(w)
        adj[w].add(i)
    return adj


def generate_ws(J: int, k: int, p: float, rng_seed: int, max_retries: int = WS_MAX_RETRIES) -> Network:
    """Watts-Strogatz small world.

    Each lattice edge ``(i, j)`` is, with probability ``p``, detached from ``j``
    and reattached to a uniformly drawn vertex that is neither ``i`` nor already
    adjacent to ``i``.  Disconnected results are discarded and the draw repeated
    on the next seed stream.
    """
    if not 1 <= k < J:
        raise InvalidParameters(f"WS requires 1 <= k < J, got k={k}, J={J}")
    if not 0.0 <= p <= 1.0:
        raise InvalidParameters(f"WS rewiring probability must lie in [0, 1], got {p}")
    lattice = _ring_lattice_edges(J, k)
    for attempt in range(max_retries):
        gen = _rng.stream(rng_seed, _rng.NETWORK, attempt)
        adj = _rewire(J, lattice, p, gen)
        a = np.zeros((J, J), dtype=np.uint8)
        for i, nbrs in enumerate(adj):
            a[i, list(nbrs)] = 1
        net = Network(a)
        if net.is_connected():
            return net
    raise GenerationFailed(f"no connected WS graph (J={J}, k={k}, p={p}) after {max_retries} attempts")


@dataclass(frozen=True)
class GeneratorConfig:
    variant: str
    J: int
    k: int = 0
    p: float = 0.0
    rng_seed: int = 0

    VARIANTS = ("BA", "WS", "ring", "complete", "star", "path")

    def __post_init__(self):
        if self.variant not in self.VARIANTS:
            raise InvalidParameters(f"unknown network variant {self.variant!r}; expected one of {self.VARIANTS}")
        if self.J < 1:
            raise InvalidParameters(f"J must be positive, got {self.J}")
        if self.variant in ("BA", "WS", "ring") and not 1 <= self.k < self.J:
            raise InvalidParameters(f"{self.variant} requires 1 <= k < J, got k={self.k}, J={self.J}")
        if self.variant == "WS" and not 0.0 <= self.p <= 1.0:
            raise InvalidParameters(f"WS rewiring probability must lie in [0, 1], got {self.p}")

    def build(self) -> Network:
        if self.variant == "BA":
            return generate_ba(self.J, self.k, self.rng_seed)
        if self.variant == "WS":
            return generate_ws(self.J, self.k, self.p, self.rng_seed)
        if self.variant == "ring":
            return ring_lattice(self.J, self.k)
        if self.variant == "complete":
            return complete_graph(self.J)
        if self.variant == "star":
            return star_graph(self.J)
        return path_graph(self.J)


# -- edge-list files ----------------------------------------------------------

def format_edge_list(network: Network) -> str:
    lines = [f"# vertices {network.vertex_count}"]
    lines += [f"{i} {j}" for i, j in network.edges()]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Network:
    vertex_count = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if vertex_count is None:
            parts = line.split()
            if len(parts) != 3 or parts[0] != "#" or parts[1] != "vertices":
                raise EdgeListError("expected header '# vertices J'", lineno)
            try:
                vertex_count = int(parts[2])
            except ValueError:
                raise EdgeListError(f"vertex count {parts[2]!r} is not an integer", lineno) from None
            if vertex_count < 1:
                raise EdgeListError(f"vertex count must be positive, got {vertex_count}", lineno)
            continue
        if line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise EdgeListError(f"expected 'i j', got {line!r}", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListError(f"non-integer vertex index in {line!r}", lineno) from None
        if not (0 <= i < vertex_count and 0 <= j < vertex_count):
            raise EdgeListError(f"vertex index out of range [0, {vertex_count}) in {line!r}", lineno)
        if i == j:
            raise EdgeListError(f"self-loop at vertex {i}", lineno)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise EdgeListError(f"duplicate edge {key}", lineno)
        seen.add(key)
        edges.append(key)
    if vertex_count is None:
        raise EdgeListError("missing header '# vertices J'")
    return Network.from_edges(vertex_count, edges)


def load_edge_list(path: str | os.PathLike) -> Network:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh.read())


def save_edge_list(network: Network, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_edge_list(network))


def save_adjacency_json(network: Network, path: str | os.PathLike) -> None:
    """Debug dump: adjacency as a JSON array of arrays."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network.adjacency.tolist(), fh)
