"""Coupling graphs: heavy-hex patches, edge coloring into RZZ layers, distances.

Qubits are integer indices assigned row-major over the planar layout. Edges are
stored as sorted (i, j) pairs with i < j, in lexicographic order.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path

Edge = tuple[int, int]


@dataclass(frozen=True)
class CouplingGraph:
    """Qubit connectivity, optionally with edges partitioned into matchings.

    edge_layers, when present, is a partition of `edges` into layers whose
    members are pairwise qubit-disjoint, so each layer can be applied as one
    parallel two-qubit gate layer.
    """

    num_qubits: int
    edges: tuple[Edge, ...]
    edge_layers: tuple[tuple[Edge, ...], ...] | None = None
    coords: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("graph needs at least one qubit")
        seen: set[Edge] = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop on qubit {i}")
            if not (0 <= i < self.num_qubits and 0 <= j < self.num_qubits):
                raise ValueError(f"edge ({i}, {j}) out of range for {self.num_qubits} qubits")
            if i > j:
                raise ValueError(f"edge ({i}, {j}) not normalized (want i < j)")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
        if self.edge_layers is not None:
            flat = [e for layer in self.edge_layers for e in layer]
            if sorted(flat) != sorted(self.edges):
                raise ValueError("edge_layers is not a partition of edges")
            for layer in self.edge_layers:
                used: set[int] = set()
                for i, j in layer:
                    if i in used or j in used:
                        raise ValueError("edge layer is not a matching")
                    used.update((i, j))
        if self.coords is not None and len(self.coords) != self.num_qubits:
            raise ValueError("coords length must equal num_qubits")

    @property
    def num_edges(self) -> int:
        return len(self.edges)


def _norm_edges(edges) -> tuple[Edge, ...]:
    return tuple(sorted((min(i, j), max(i, j)) for i, j in edges))


def adjacency(graph: CouplingGraph) -> list[list[int]]:
    """Neighbor lists, each sorted ascending."""
    adj: list[list[int]] = [[] for _ in range(graph.num_qubits)]
    for i, j in graph.edges:
        adj[i].append(j)
        adj[j].append(i)
    for lst in adj:
        lst.sort()
    return adj


def build_heavy_hex(rows: int, cols: int) -> CouplingGraph:
    """Heavy-hex patch: horizontal qubit rows joined by bridge qubits.

    Every plaquette is a 12-cycle of alternating degree-3-capable vertices and
    degree-2 edge qubits. rows=1 gives the single bare hexagon (12 qubits, 12
    edges); larger patches are slabs of rows+1 full-width qubit rows with
    brick-alternating bridge columns, e.g. (2, 3) has exactly 60 qubits.
    Indices are row-major over the layout; coordinates are (x, y) with y
    increasing downward.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if rows == 1:
        width = 4 * cols + 1
        gap_cols = [list(range(0, width, 4))]
    else:
        width = 4 * cols + 5
        even = list(range(0, width, 4))
        odd = list(range(2, width - 1, 4))
        gap_cols = [even if g % 2 == 0 else odd for g in range(rows)]

    positions: list[tuple[float, float]] = []  # (x, y), row-major assignment
    for g in range(rows + 1):
        y = 2 * g
        positions.extend((float(x), float(y)) for x in range(width))
        if g < rows:
            positions.extend((float(x), float(y + 1)) for x in gap_cols[g])

    index = {pos: q for q, pos in enumerate(positions)}
    edges: list[Edge] = []
    for g in range(rows + 1):
        y = float(2 * g)
        for x in range(width - 1):
            edges.append((index[(float(x), y)], index[(float(x + 1), y)]))
        if g < rows:
            for x in gap_cols[g]:
                mid = index[(float(x), y + 1)]
                edges.append((index[(float(x), y)], mid))
                edges.append((mid, index[(float(x), y + 2)]))

    return CouplingGraph(
        num_qubits=len(positions),
        edges=_norm_edges(edges),
        coords=tuple(positions),
    )


def load_graph(path: str | Path) -> CouplingGraph:
    """Read an edge list: one 'i j' pair per line, '#' comments allowed."""
    text = Path(path).read_text()
    edges: list[Edge] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected two indices, got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: non-integer index in {raw!r}") from exc
        if i < 0 or j < 0:
            raise ValueError(f"{path}:{lineno}: negative qubit index")
        edges.append((min(i, j), max(i, j)))
    if not edges:
        raise ValueError(f"{path}: empty edge list")
    n = 1 + max(max(e) for e in edges)
    return CouplingGraph(num_qubits=n, edges=_norm_edges(edges))


def save_edge_list(graph: CouplingGraph, path: str | Path) -> None:
    lines = [f"{i} {j}" for i, j in graph.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def bipartition(graph: CouplingGraph) -> list[int] | None:
    """2-coloring by BFS, or None if the graph has an odd cycle."""
    side = [-1] * graph.num_qubits
    adj = adjacency(graph)
    for start in range(graph.num_qubits):
        if side[start] >= 0:
            continue
        side[start] = 0
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if side[v] < 0:
                    side[v] = 1 - side[u]
                    queue.append(v)
                elif side[v] == side[u]:
                    return None
    return side


def color_edges(graph: CouplingGraph) -> CouplingGraph:
    """Partition edges into <= max-degree matchings (Konig construction).

    Requires a bipartite graph with degree <= 3. Edges are processed by lowest
    index; color conflicts are resolved by flipping the two-color alternating
    path, which in a bipartite graph never reaches the opposite endpoint.
    Returns a new graph with edge_layers populated.
    """
    side = bipartition(graph)
    if side is None:
        raise ValueError("edge coloring requires a bipartite graph")
    adj = adjacency(graph)
    degree = [len(a) for a in adj]
    max_deg = max(degree) if degree else 0
    if max_deg > 3:
        offender = degree.index(max(degree))
        raise ValueError(f"degree {max(degree)} at qubit {offender} exceeds 3")
    n_colors = max(max_deg, 1)

    # at[v][c] -> neighbor joined to v by the edge colored c
    at: list[dict[int, int]] = [{} for _ in range(graph.num_qubits)]
    color: dict[Edge, int] = {}

    def free_colors(v: int) -> list[int]:
        return [c for c in range(n_colors) if c not in at[v]]

    def set_color(u: int, v: int, c: int) -> None:
        at[u][c] = v
        at[v][c] = u
        color[(min(u, v), max(u, v))] = c

    def unset_color(u: int, v: int, c: int) -> None:
        del at[u][c]
        del at[v][c]

    for u, v in graph.edges:
        fu, fv = free_colors(u), free_colors(v)
        common = sorted(set(fu) & set(fv))
        if common:
            set_color(u, v, common[0])
            continue
        a, b = fu[0], fv[0]  # a used at v, b used at u
        # Flip the a/b alternating path that starts at u with its b edge;
        # bipartiteness keeps v off that path, freeing b at u.
        cur, want = u, b
        path: list[tuple[int, int, int]] = []
        while want in at[cur]:
            nxt = at[cur][want]
            path.append((cur, nxt, want))
            cur = nxt
            want = a if want == b else b
        for x, y, c in path:
            unset_color(x, y, c)
        for x, y, c in path:
            set_color(x, y, a if c == b else b)
        set_color(u, v, b)

    layers = tuple(
        tuple(e for e in graph.edges if color[e] == c)
        for c in range(n_colors)
        if any(color[e] == c for e in graph.edges)
    )
    return CouplingGraph(
        num_qubits=graph.num_qubits,
        edges=graph.edges,
        edge_layers=layers,
        coords=graph.coords,
    )


def bfs_distances(graph: CouplingGraph, source: int) -> list[int]:
    """Hop distances from source; -1 marks unreachable vertices."""
    if not (0 <= source < graph.num_qubits):
        raise ValueError(f"source {source} out of range")
    dist = [-1] * graph.num_qubits
    dist[source] = 0
    adj = adjacency(graph)
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def distance(graph: CouplingGraph, a: int, b: int) -> int:
    d = bfs_distances(graph, a)[b]
    if d < 0:
        raise ValueError(f"qubits {a} and {b} are disconnected")
    return d


def induced_subgraph(graph: CouplingGraph, vertices: list[int]) -> CouplingGraph:
    """Subgraph on `vertices`, relabeled 0..k-1 in the given order."""
    if len(set(vertices)) != len(vertices):
        raise ValueError("duplicate vertices")
    relabel = {v: i for i, v in enumerate(vertices)}
    keep = set(vertices)
    edges = [
        (relabel[i], relabel[j])
        for i, j in graph.edges
        if i in keep and j in keep
    ]
    coords = None
    if graph.coords is not None:
        coords = tuple(graph.coords[v] for v in vertices)
    return CouplingGraph(num_qubits=len(vertices), edges=_norm_edges(edges), coords=coords)


def graph_to_json(graph: CouplingGraph) -> str:
    payload = {
        "schema_version": 1,
        "num_qubits": graph.num_qubits,
        "edges": [list(e) for e in graph.edges],
        "layers": None
        if graph.edge_layers is None
        else [[list(e) for e in layer] for layer in graph.edge_layers],
        "coords": None if graph.coords is None else [list(c) for c in graph.coords],
    }
    return json.dumps(payload, indent=2, sort_keys=True)
