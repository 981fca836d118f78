"""Ising models on sparse graphs, regions around a query node, and localisation.

A model is a pairwise binary MRF over spins x_i in {-1, +1}:

    p(x) proportional to exp( sum_{(i,j) in E} J_ij x_i x_j + sum_i h_i x_i )

`Region` splits the nodes into a small set alpha around a query node and the
rest (beta). `localize` replaces the global model with a model on alpha only,
either by deleting the alpha-beta edges outright (DROP_OUT) or by additionally
folding a mean-field estimate of the boundary spins into the fields of alpha's
boundary nodes (MEAN_FIELD).
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np


class LocalMRFError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(LocalMRFError, ValueError):
    """Invalid model construction input."""


class RegionError(LocalMRFError, ValueError):
    """Invalid region arguments (bad alpha set or query node)."""


class MeanFieldDivergence(LocalMRFError, RuntimeError):
    """Mean-field solve did not reach the requested tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class BoundaryMethod(Enum):
    """How alpha-beta cross edges are handled when localising."""

    DROP_OUT = "dropout"
    MEAN_FIELD = "meanfield"


def _canonical_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, eq=False)
class IsingModel:
    """Immutable pairwise model. Do not mutate `J`, `h` or `adjacency`.

    Attributes:
        n: number of nodes, ids 0..n-1.
        adjacency: per-node tuple of neighbour ids, ascending.
        J: coupling per undirected edge, keyed by (min(u,v), max(u,v)).
        h: per-node field, float64 array of shape (n,).
        max_degree: cached maximum node degree.
    """

    n: int
    adjacency: tuple[tuple[int, ...], ...]
    J: Mapping[tuple[int, int], float]
    h: np.ndarray
    max_degree: int

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.adjacency[i]

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def coupling(self, u: int, v: int) -> float:
        return self.J.get(_canonical_edge(u, v), 0.0)

    def edges(self) -> Iterable[tuple[int, int, float]]:
        """Edges in construction order, canonical (u < v) endpoints."""
        for (u, v), j in self.J.items():
            yield u, v, j

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "edges": [[u, v, j] for u, v, j in self.edges()],
            "h": [float(x) for x in self.h],
        }

    @staticmethod
    def from_dict(payload: Mapping) -> "IsingModel":
        try:
            n = int(payload["n"])
            raw_edges = payload["edges"]
            h = payload["h"]
        except (KeyError, TypeError) as exc:
            raise ModelError(f"model payload missing field: {exc}") from exc
        if len(h) != n:
            raise ModelError(f"field vector has {len(h)} entries for n={n}")
        edges = [(int(u), int(v), float(j)) for u, v, j in raw_edges]
        return build_model(edges, h)


def build_model(edges: Iterable[tuple[int, int, float]], fields: Sequence[float]) -> IsingModel:
    """Validate and build an immutable model.

    Args:
        edges: iterable of (u, v, J) with u != v; one entry per undirected edge.
        fields: per-node field h, its length fixes n.

    Raises:
        ModelError: self loop, duplicate edge, out-of-range id or non-finite value,
            naming the offending entry.
    """
    h = np.asarray(list(fields), dtype=np.float64)
    n = h.shape[0]
    if not np.all(np.isfinite(h)):
        bad = int(np.flatnonzero(~np.isfinite(h))[0])
        raise ModelError(f"non-finite field h[{bad}]={h[bad]}")
    coupling: dict[tuple[int, int], float] = {}
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for entry in edges:
        u, v, j = entry
        if not (0 <= u < n and 0 <= v < n):
            raise ModelError(f"edge ({u}, {v}) out of range for n={n}")
        if u == v:
            raise ModelError(f"self loop on node {u}")
        if not math.isfinite(j):
            raise ModelError(f"non-finite coupling on edge ({u}, {v}): {j}")
        key = _canonical_edge(u, v)
        if key in coupling:
            raise ModelError(f"duplicate edge ({u}, {v})")
        coupling[key] = float(j)
        nbrs[u].append(v)
        nbrs[v].append(u)
    adjacency = tuple(tuple(sorted(lst)) for lst in nbrs)
    max_degree = max((len(a) for a in adjacency), default=0)
    return IsingModel(n=n, adjacency=adjacency, J=coupling, h=h, max_degree=max_degree)


def save_model(model: IsingModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_json(model))


def model_json(model: IsingModel) -> str:
    """Canonical JSON for a model (stable bytes for a given model)."""
    return json.dumps(model.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"


def load_model(path) -> IsingModel:
    with open(path, "r", encoding="utf-8") as fh:
        return IsingModel.from_dict(json.load(fh))


def read_edge_list(path) -> list[tuple[int, int, float | None]]:
    """Read tab-separated `u<TAB>v[<TAB>J]` lines; J is optional per line."""
    out: list[tuple[int, int, float | None]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise ModelError(f"{path}:{line_no}: expected 2 or 3 tab-separated fields")
            try:
                u, v = int(parts[0]), int(parts[1])
                j = float(parts[2]) if len(parts) == 3 else None
            except ValueError as exc:
                raise ModelError(f"{path}:{line_no}: {exc}") from None
            out.append((u, v, j))
    return out


def read_labels(path) -> dict[int, str]:
    """Read tab-separated `node<TAB>label` lines."""
    out: dict[int, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ModelError(f"{path}:{line_no}: expected 2 tab-separated fields")
            try:
                node = int(parts[0])
            except ValueError as exc:
                raise ModelError(f"{path}:{line_no}: {exc}") from None
            out[node] = parts[1]
    return out


def _bfs_distances(model: IsingModel, source: int) -> np.ndarray:
    dist = np.full(model.n, np.inf)
    dist[source] = 0.0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u]
        for v in model.adjacency[u]:
            if not np.isfinite(dist[v]):
                dist[v] = du + 1.0
                queue.append(v)
    return dist


def graph_distance(model: IsingModel, source: int, targets: Iterable[int] | None = None) -> dict[int, float]:
    """Hop distance from source to each target (math.inf when unreachable).

    With targets=None, returns distances to every node.
    """
    if not (0 <= source < model.n):
        raise ModelError(f"source {source} out of range")
    dist = _bfs_distances(model, source)
    if targets is None:
        return {i: float(dist[i]) for i in range(model.n)}
    return {int(t): float(dist[int(t)]) for t in targets}


def distance_to_set(model: IsingModel, source: int, targets: Iterable[int]) -> float:
    """Minimum hop distance from source to any node of the set (inf if none)."""
    dist = _bfs_distances(model, source)
    best = math.inf
    for t in targets:
        best = min(best, float(dist[int(t)]))
    return best


def connected_component(model: IsingModel, node: int) -> tuple[int, ...]:
    """Sorted node ids of the component containing node."""
    dist = _bfs_distances(model, node)
    return tuple(int(i) for i in np.flatnonzero(np.isfinite(dist)))


def connected_components(model: IsingModel) -> list[tuple[int, ...]]:
    """All components as sorted tuples, ordered by their smallest node id."""
    seen = np.zeros(model.n, dtype=bool)
    comps: list[tuple[int, ...]] = []
    for start in range(model.n):
        if seen[start]:
            continue
        comp = connected_component(model, start)
        for i in comp:
            seen[i] = True
        comps.append(comp)
    return comps


@dataclass(frozen=True)
class Region:
    """A query-centred node split.

    alpha is an ordered node tuple containing the query. boundary_alpha are the
    alpha nodes with at least one neighbour outside alpha; boundary_beta are the
    outside nodes adjacent to alpha; cross_edges are the (alpha-node, outside-node,
    J) edges in deterministic order (alpha order, then ascending neighbour id).
    """

    query: int
    alpha: tuple[int, ...]
    boundary_alpha: tuple[int, ...]
    boundary_beta: tuple[int, ...]
    cross_edges: tuple[tuple[int, int, float], ...]


def make_region(model: IsingModel, alpha: Sequence[int], query: int) -> Region:
    alpha_t = tuple(int(a) for a in alpha)
    alpha_set = set(alpha_t)
    if len(alpha_set) != len(alpha_t):
        raise RegionError("alpha contains duplicate nodes")
    if query not in alpha_set:
        raise RegionError(f"query {query} not in alpha")
    for a in alpha_t:
        if not (0 <= a < model.n):
            raise RegionError(f"alpha node {a} out of range")
    b_alpha: list[int] = []
    b_beta: set[int] = set()
    cross: list[tuple[int, int, float]] = []
    for j in alpha_t:
        outside = [k for k in model.adjacency[j] if k not in alpha_set]
        if outside:
            b_alpha.append(j)
            for k in outside:
                b_beta.add(k)
                cross.append((j, k, model.coupling(j, k)))
    return Region(
        query=int(query),
        alpha=alpha_t,
        boundary_alpha=tuple(sorted(b_alpha)),
        boundary_beta=tuple(sorted(b_beta)),
        cross_edges=tuple(cross),
    )


@dataclass(frozen=True, eq=False)
class LocalizedModel:
    """A model on alpha only, indices following the alpha order.

    submodel node i corresponds to global node alpha[i]. Cross edges are gone;
    submodel.h holds the (possibly compensated) fields.
    """

    alpha: tuple[int, ...]
    submodel: IsingModel
    method: BoundaryMethod

    def index_of(self, node: int) -> int:
        return self.alpha.index(node)

    @property
    def h_tilde(self) -> dict[int, float]:
        return {g: float(self.submodel.h[i]) for i, g in enumerate(self.alpha)}

    @property
    def J_local(self) -> dict[tuple[int, int], float]:
        out = {}
        for u, v, j in self.submodel.edges():
            out[_canonical_edge(self.alpha[u], self.alpha[v])] = j
        return out


def localize(
    model: IsingModel,
    region: Region,
    method: BoundaryMethod = BoundaryMethod.DROP_OUT,
    mf_config=None,
) -> LocalizedModel:
    """Build the alpha-only model for a region.

    DROP_OUT deletes cross edges and keeps fields. MEAN_FIELD additionally adds
    sum_k J_jk m_k to each boundary node j, with m the boundary mean-field
    estimate of the adjacent outside spins.

    Raises:
        MeanFieldDivergence: the boundary solve missed its tolerance.
    """
    index = {g: i for i, g in enumerate(region.alpha)}
    edges: list[tuple[int, int, float]] = []
    for gi in region.alpha:
        for gj in model.adjacency[gi]:
            if gj in index and gi < gj:
                edges.append((index[gi], index[gj], model.coupling(gi, gj)))
    h_tilde = np.array([model.h[g] for g in region.alpha], dtype=np.float64)
    if method is BoundaryMethod.MEAN_FIELD:
        from .meanfield import boundary_mean_field

        means, state = boundary_mean_field(model, region, config=mf_config)
        if not state.converged:
            raise MeanFieldDivergence(
                f"boundary mean field stalled at residual {state.residual:.3e}",
                residual=state.residual,
            )
        for j, k, jv in region.cross_edges:
            h_tilde[index[j]] += jv * means[k]
    sub = build_model(edges, h_tilde)
    return LocalizedModel(alpha=region.alpha, submodel=sub, method=method)
