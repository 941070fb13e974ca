"""Static network model: topology, paths, routing matrices, demands, utilities.

Everything here is the immutable problem description shared by the per-pair
solvers, the price engine, and the balance simulator. Types validate their
invariants on construction and are safe to share read-only across workers.

Conventions follow the channel ordering used throughout the package: a
channel (u, v) always lists the lower-indexed node first, a path entry of
+1 means the channel is traversed u -> v, and -1 means v -> u.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

# Node names end up embedded in CSV column names ("lambda.A-B"), so keep
# the separator characters out of them.
NODE_NAME = re.compile(r"^[A-Za-z0-9_]+$")


def readonly(array: np.ndarray) -> np.ndarray:
    """Return a C-contiguous, write-protected copy-on-demand view."""
    out = np.ascontiguousarray(array)
    if out is array:
        out = array.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class UtilityFn:
    """Concave transaction utility from one of the supported families.

    linear(alpha):           U(q) = alpha * q
    scaled_log(alpha, beta): U(q) = alpha * log(1 + beta * q)

    Both satisfy U(0) = 0, U nondecreasing and concave, and a finite
    derivative at zero.
    """

    family: str
    params: tuple[float, ...]

    @classmethod
    def linear(cls, alpha: float) -> "UtilityFn":
        return cls("linear", (float(alpha),))

    @classmethod
    def scaled_log(cls, alpha: float, beta: float) -> "UtilityFn":
        return cls("scaled_log", (float(alpha), float(beta)))

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.family == "linear":
            if len(self.params) != 1:
                raise ValueError("linear utility takes exactly one parameter")
            if not self.params[0] > 0:
                raise ValueError("linear utility slope must be positive")
        elif self.family == "scaled_log":
            if len(self.params) != 2:
                raise ValueError("scaled_log utility takes exactly two parameters")
            if not min(self.params) > 0:
                raise ValueError("scaled_log parameters must be positive")
        else:
            raise ValueError(f"unknown utility family {self.family!r}")

    def value(self, q):
        """U(q); accepts scalars or arrays of nonnegative amounts."""
        q = np.asarray(q, dtype=float)
        if np.any(q < 0):
            raise ValueError("utility evaluated at a negative amount")
        if self.family == "linear":
            out = self.params[0] * q
        else:
            alpha, beta = self.params
            out = alpha * np.log1p(beta * q)
        return float(out) if out.ndim == 0 else out

    def derivative(self, q):
        """U'(q); accepts scalars or arrays of nonnegative amounts."""
        q = np.asarray(q, dtype=float)
        if np.any(q < 0):
            raise ValueError("utility derivative at a negative amount")
        if self.family == "linear":
            out = np.full(q.shape, self.params[0])
        else:
            alpha, beta = self.params
            out = alpha * beta / (1.0 + beta * q)
        return float(out) if out.ndim == 0 else out

    def curvature_bound(self) -> float:
        """Upper bound on |U''| over [0, inf); zero for the linear family."""
        if self.family == "linear":
            return 0.0
        alpha, beta = self.params
        return alpha * beta * beta


def utility_value(utility: UtilityFn, q):
    return utility.value(q)


def utility_derivative(utility: UtilityFn, q):
    return utility.derivative(q)


@dataclass(frozen=True)
class NetworkTopology:
    """Undirected capacitated channel graph.

    ``nodes`` fixes the node ordering; every channel (u, v, capacity) must
    list the lower-indexed endpoint first and have strictly positive
    capacity (the total money escrowed in the channel).
    """

    nodes: tuple[str, ...]
    channels: tuple[tuple[str, str, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if not self.nodes:
            raise ValueError("topology needs at least one node")
        seen: set[str] = set()
        for name in self.nodes:
            if not isinstance(name, str) or not NODE_NAME.match(name):
                raise ValueError(
                    f"invalid node name {name!r}: use letters, digits and _ only"
                )
            if name in seen:
                raise ValueError(f"duplicate node {name!r}")
            seen.add(name)
        index = {name: k for k, name in enumerate(self.nodes)}
        normalized = []
        keys: set[tuple[str, str]] = set()
        for u, v, capacity in self.channels:
            if u not in index or v not in index:
                raise ValueError(f"channel ({u}, {v}) references an unknown node")
            if u == v:
                raise ValueError(f"channel ({u}, {v}) connects a node to itself")
            if index[u] > index[v]:
                raise ValueError(
                    f"channel ({u}, {v}) must list the lower-indexed node first"
                )
            if (u, v) in keys:
                raise ValueError(f"duplicate channel ({u}, {v})")
            capacity = float(capacity)
            if not capacity > 0:
                raise ValueError(f"channel ({u}, {v}) needs positive capacity")
            keys.add((u, v))
            normalized.append((u, v, capacity))
        object.__setattr__(self, "channels", tuple(normalized))

    @cached_property
    def node_index(self) -> dict[str, int]:
        return {name: k for k, name in enumerate(self.nodes)}

    @cached_property
    def channel_index(self) -> dict[tuple[str, str], int]:
        return {(u, v): e for e, (u, v, _) in enumerate(self.channels)}

    @cached_property
    def channel_keys(self) -> tuple[tuple[str, str], ...]:
        return tuple((u, v) for u, v, _ in self.channels)

    @cached_property
    def channel_names(self) -> tuple[str, ...]:
        return tuple(f"{u}-{v}" for u, v, _ in self.channels)

    @cached_property
    def capacities(self) -> np.ndarray:
        return readonly(np.array([c for _, _, c in self.channels], dtype=float))

    @property
    def num_channels(self) -> int:
        return len(self.channels)

    @cached_property
    def graph(self) -> "nx.Graph":
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from((u, v) for u, v, _ in self.channels)
        return g

    def oriented(self, a: str, b: str) -> tuple[tuple[str, str], int]:
        """Resolve a traversal a -> b to (channel key, sign)."""
        if (a, b) in self.channel_index:
            return (a, b), 1
        if (b, a) in self.channel_index:
            return (b, a), -1
        raise ValueError(f"no channel between {a} and {b}")


@dataclass(frozen=True)
class Path:
    """Directed walk between a transacting pair, using each channel at most once.

    ``hops`` lists (channel key, sign) in traversal order; sign +1 means the
    channel is crossed from its lower-indexed to its higher-indexed node.
    """

    source: str
    destination: str
    nodes: tuple[str, ...]
    hops: tuple[tuple[tuple[str, str], int], ...]

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise ValueError("a path needs at least two nodes")
        if self.nodes[0] != self.source or self.nodes[-1] != self.destination:
            raise ValueError("path endpoints do not match its owning pair")
        if self.source == self.destination:
            raise ValueError("path source and destination must differ")
        if len(self.hops) != len(self.nodes) - 1:
            raise ValueError("hop count does not match the node walk")
        used: set[tuple[str, str]] = set()
        for (key, sign), a, b in zip(self.hops, self.nodes, self.nodes[1:]):
            expected = (a, b) if sign == 1 else (b, a)
            if sign not in (-1, 1) or key != expected:
                raise ValueError(f"hop {key} with sign {sign} breaks the walk")
            if key in used:
                raise ValueError(f"channel {key} traversed more than once")
            used.add(key)

    @property
    def num_hops(self) -> int:
        return len(self.hops)

    @cached_property
    def sign_map(self) -> dict[tuple[str, str], int]:
        return {key: sign for key, sign in self.hops}

    def edge_vector(self, topology: NetworkTopology) -> np.ndarray:
        """Dense signed incidence column over the topology's channels."""
        column = np.zeros(topology.num_channels, dtype=float)
        for key, sign in self.hops:
            column[topology.channel_index[key]] = sign
        return column

    def sort_key(self, topology: NetworkTopology):
        idx = topology.node_index
        return (self.num_hops, tuple(idx[n] for n in self.nodes))


def path_from_nodes(topology: NetworkTopology, walk: Sequence[str]) -> Path:
    """Build a validated Path from a node walk over existing channels."""
    hops = tuple(topology.oriented(a, b) for a, b in zip(walk, walk[1:]))
    return Path(source=walk[0], destination=walk[-1], nodes=tuple(walk), hops=hops)


def enumerate_paths(
    topology: NetworkTopology, pair: tuple[str, str], max_hops: int
) -> list[Path]:
    """All simple paths for a pair, at most ``max_hops`` channels long.

    The result is deterministic: sorted by (hop count, node-index sequence),
    which also means the shortest route comes first.
    """
    source, destination = pair
    if source not in topology.node_index:
        raise ValueError(f"unknown node {source!r}")
    if destination not in topology.node_index:
        raise ValueError(f"unknown node {destination!r}")
    if source == destination:
        raise ValueError("a transacting pair needs two distinct nodes")
    if max_hops < 1:
        raise ValueError("max_hops must be at least 1")
    paths = [
        path_from_nodes(topology, walk)
        for walk in nx.all_simple_paths(topology.graph, source, destination, cutoff=max_hops)
    ]
    paths.sort(key=lambda p: p.sort_key(topology))
    return paths


@dataclass(frozen=True)
class PathSet:
    """Candidate paths per transacting pair plus the global path ordering.

    The global index concatenates the per-pair lists in ``pairs`` order;
    everything downstream (routing matrix columns, flow vectors, CSV
    columns) uses this ordering.
    """

    topology: NetworkTopology
    pairs: tuple[tuple[str, str], ...]
    by_pair: tuple[tuple[Path, ...], ...]

    def __post_init__(self):
        if len(self.pairs) != len(self.by_pair):
            raise ValueError("pairs and path lists are misaligned")
        if len(set(self.pairs)) != len(self.pairs):
            raise ValueError("duplicate transacting pair")
        for (i, j), paths in zip(self.pairs, self.by_pair):
            for p in paths:
                if (p.source, p.destination) != (i, j):
                    raise ValueError(
                        f"path {p.nodes} does not belong to pair ({i}, {j})"
                    )

    @cached_property
    def paths(self) -> tuple[Path, ...]:
        return tuple(p for group in self.by_pair for p in group)

    @cached_property
    def pair_slices(self) -> tuple[tuple[int, int], ...]:
        slices = []
        start = 0
        for group in self.by_pair:
            slices.append((start, start + len(group)))
            start += len(group)
        return tuple(slices)

    @property
    def size(self) -> int:
        return len(self.paths)


@dataclass(frozen=True)
class RoutingMatrix:
    """Signed channel-by-path incidence matrix R with its split R = R+ - R-."""

    matrix: np.ndarray
    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        m, p, n = self.matrix, self.plus, self.minus
        if m.ndim != 2 or p.shape != m.shape or n.shape != m.shape:
            raise ValueError("routing matrix parts have mismatched shapes")
        if not np.isin(m, (-1.0, 0.0, 1.0)).all():
            raise ValueError("routing matrix entries must be in {-1, 0, 1}")
        if not np.isin(p, (0.0, 1.0)).all() or not np.isin(n, (0.0, 1.0)).all():
            raise ValueError("positive/negative parts must be 0/1 matrices")
        if np.any(p * n != 0):
            raise ValueError("positive and negative parts overlap")
        if np.any(p - n != m):
            raise ValueError("parts do not reassemble the routing matrix")
        object.__setattr__(self, "matrix", readonly(m))
        object.__setattr__(self, "plus", readonly(p))
        object.__setattr__(self, "minus", readonly(n))

    @property
    def num_channels(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_paths(self) -> int:
        return self.matrix.shape[1]


def build_routing_matrix(paths: PathSet) -> RoutingMatrix:
    """Assemble the routing matrix whose columns follow the global path index."""
    topology = paths.topology
    matrix = np.zeros((topology.num_channels, paths.size), dtype=float)
    for k, path in enumerate(paths.paths):
        matrix[:, k] = path.edge_vector(topology)
    return RoutingMatrix(
        matrix=matrix,
        plus=np.maximum(matrix, 0.0),
        minus=np.maximum(-matrix, 0.0),
    )


@dataclass(frozen=True)
class DemandSpec:
    """Transacting pairs with their demands, utilities, and quadratic weights.

    The active set N consists of the pairs with strictly positive demand;
    pairs may be declared with zero demand so that time-varying demand
    processes can switch them on later.
    """

    pairs: tuple[tuple[str, str], ...]
    amounts: tuple[float, ...]
    utilities: tuple[UtilityFn, ...]
    etas: tuple[float, ...]

    def __post_init__(self):
        n = len(self.pairs)
        if not (len(self.amounts) == len(self.utilities) == len(self.etas) == n):
            raise ValueError("demand fields have mismatched lengths")
        if len(set(self.pairs)) != n:
            raise ValueError("duplicate transacting pair")
        object.__setattr__(self, "amounts", tuple(float(a) for a in self.amounts))
        object.__setattr__(self, "etas", tuple(float(e) for e in self.etas))
        for (i, j), a, eta in zip(self.pairs, self.amounts, self.etas):
            if i == j:
                raise ValueError(f"self-pair ({i}, {j}) is not allowed")
            if a < 0 or not np.isfinite(a):
                raise ValueError(f"demand for ({i}, {j}) must be finite and >= 0")
            if eta < 0 or not np.isfinite(eta):
                raise ValueError(f"regularizer weight for ({i}, {j}) must be >= 0")

    @classmethod
    def from_entries(
        cls,
        topology: NetworkTopology,
        entries: Iterable[tuple[str, str, float, UtilityFn, float]],
    ) -> "DemandSpec":
        """Canonicalize (i, j, amount, utility, eta) rows into node-index order."""
        idx = topology.node_index
        rows = []
        for i, j, amount, utility, eta in entries:
            if i not in idx or j not in idx:
                raise ValueError(f"demand pair ({i}, {j}) references an unknown node")
            rows.append((i, j, amount, utility, eta))
        rows.sort(key=lambda r: (idx[r[0]], idx[r[1]]))
        return cls(
            pairs=tuple((r[0], r[1]) for r in rows),
            amounts=tuple(r[2] for r in rows),
            utilities=tuple(r[3] for r in rows),
            etas=tuple(r[4] for r in rows),
        )

    @cached_property
    def amounts_array(self) -> np.ndarray:
        return readonly(np.array(self.amounts, dtype=float))

    @cached_property
    def etas_array(self) -> np.ndarray:
        return readonly(np.array(self.etas, dtype=float))

    @property
    def num_pairs(self) -> int:
        return len(self.pairs)

    def min_eta(self) -> float:
        """Smallest eta over the active pairs (inf when nothing is active)."""
        active = [e for e, a in zip(self.etas, self.amounts) if a > 0]
        return min(active) if active else float("inf")


@dataclass(frozen=True)
class FlowModel:
    """Topology, demand, candidate paths, and routing matrix bundled together."""

    topology: NetworkTopology
    demand: DemandSpec
    paths: PathSet
    routing: RoutingMatrix

    @classmethod
    def build(
        cls, topology: NetworkTopology, demand: DemandSpec, max_hops: int = 4
    ) -> "FlowModel":
        by_pair = []
        for pair in demand.pairs:
            candidates = enumerate_paths(topology, pair, max_hops)
            if not candidates:
                raise ValueError(
                    f"pair {pair[0]} -> {pair[1]} has no route within {max_hops} hops"
                )
            by_pair.append(tuple(candidates))
        path_set = PathSet(topology=topology, pairs=demand.pairs, by_pair=tuple(by_pair))
        return cls(
            topology=topology,
            demand=demand,
            paths=path_set,
            routing=build_routing_matrix(path_set),
        )

    @property
    def pair_slices(self) -> tuple[tuple[int, int], ...]:
        return self.paths.pair_slices

    @property
    def num_paths(self) -> int:
        return self.paths.size

    @property
    def num_channels(self) -> int:
        return self.topology.num_channels

    @cached_property
    def slice_starts(self) -> np.ndarray:
        return readonly(np.array([s for s, _ in self.pair_slices], dtype=np.intp))

    @cached_property
    def pair_names(self) -> tuple[str, ...]:
        return tuple(f"{i}-{j}" for i, j in self.demand.pairs)

    @cached_property
    def flow_names(self) -> tuple[str, ...]:
        names = []
        for (i, j), group in zip(self.demand.pairs, self.paths.by_pair):
            names.extend(f"{i}-{j}.{k}" for k in range(len(group)))
        return tuple(names)

    def pair_totals(self, flows: np.ndarray) -> np.ndarray:
        """Per-pair totals q of a global flow vector."""
        if self.demand.num_pairs == 0:
            return np.zeros(0)
        return np.add.reduceat(flows, self.slice_starts)


@dataclass(frozen=True)
class CapacityReport:
    """Worst-case directional load per channel against the c/2 headroom rule."""

    channels: tuple[tuple[str, str], ...]
    forward_load: np.ndarray
    backward_load: np.ndarray
    limits: np.ndarray
    satisfied: bool

    def offenders(self) -> list[tuple[str, str]]:
        bad = (self.forward_load > self.limits) | (self.backward_load > self.limits)
        return [key for key, flag in zip(self.channels, bad) if flag]


def check_capacity_assumption(model: FlowModel) -> CapacityReport:
    """Check that worst-case one-directional loads fit in half of each capacity.

    The worst case over the demand box puts each pair's full demand on a
    single path, so the per-channel supremum sums the demands of every pair
    owning at least one path that crosses the channel in that direction.
    """
    routing, demand = model.routing, model.demand
    forward = np.zeros(model.num_channels)
    backward = np.zeros(model.num_channels)
    for (start, end), amount in zip(model.pair_slices, demand.amounts):
        if amount <= 0:
            continue
        forward += amount * routing.plus[:, start:end].any(axis=1)
        backward += amount * routing.minus[:, start:end].any(axis=1)
    limits = model.topology.capacities / 2.0
    satisfied = bool(np.all(forward <= limits) and np.all(backward <= limits))
    return CapacityReport(
        channels=model.topology.channel_keys,
        forward_load=readonly(forward),
        backward_load=readonly(backward),
        limits=readonly(limits.copy()),
        satisfied=satisfied,
    )
