"""Locally finite metric trees: points, ends, geodesics, projections.

The tree is described as a graph ``(V, E)`` where every edge carries one or
two endpoints and a positive length; edges with a single endpoint are the
infinite ones and each of them carries exactly one boundary end.  All
operations are pure functions over an immutable, validated tree:

- path metric and explicit path loci (LCA over a rooted copy of the tree),
- geodesic segments, rays to an end, bi-infinite geodesics between ends,
- the base-to-geodesic distance of two ends (Gromov product),
- nearest-point projection onto a geodesic,
- perpendicular vertex sets of a flag (vertex with two incident edges).

Numeric conventions: 64-bit floats, comparison tolerance 1e-9, snapping of
arc arithmetic dust at 1e-12.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import (
    ConstantGeodesic,
    EqualEnds,
    FlagInvalid,
    LeafyTree,
    MalformedTree,
    OutOfInterval,
)

TOL = 1e-9
_SNAP = 1e-12


@dataclass(frozen=True)
class TreePoint:
    """A location on the tree: a vertex, or an interior point of an edge.

    Interior points store the offset from the edge's first stored endpoint.
    Canonical form is enforced by the tree constructors: offsets 0 / length
    are represented as the endpoint vertex, never as an interior point.
    """

    vertex: str | None = None
    edge: str | None = None
    offset: float = 0.0

    def is_vertex(self) -> bool:
        return self.vertex is not None

    def __repr__(self) -> str:
        if self.vertex is not None:
            return f"TreePoint({self.vertex!r})"
        return f"TreePoint({self.edge!r}@{self.offset:g})"


@dataclass(frozen=True)
class TreeEnd:
    """A boundary point at infinity, identified with its infinite edge."""

    edge: str

    def __repr__(self) -> str:
        return f"TreeEnd({self.edge!r})"


@dataclass(frozen=True)
class Edge:
    id: str
    ends: tuple[str, ...]
    length: float

    @property
    def infinite(self) -> bool:
        return math.isinf(self.length)


@dataclass(frozen=True)
class ValidationReport:
    connected: bool
    acyclic: bool
    leaves: tuple[str, ...]
    valency2: tuple[str, ...]
    infinite_edges: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.connected and self.acyclic


class MetricTree:
    """Validated immutable metric tree with a distinguished base point.

    Raises :class:`MalformedTree` on construction if the graph has a cycle,
    is disconnected, has a nonpositive edge length, or has an infinite edge
    with two endpoints.  Leaves and valency-2 vertices are merely reported
    (see :attr:`report`); the Radon module re-checks and forbids them.
    """

    def __init__(
        self,
        vertices: Iterable[str],
        edges: Iterable[tuple[str, Sequence[str], float]],
        basepoint: "TreePoint | str",
    ):
        names = list(vertices)
        if not names:
            raise MalformedTree("tree needs at least one vertex")
        if len(set(names)) != len(names):
            raise MalformedTree("duplicate vertex names")
        self._vertices = tuple(sorted(names))
        self._vset = vset = set(self._vertices)

        self._edges: dict[str, Edge] = {}
        incident: dict[str, list[str]] = {v: [] for v in self._vertices}
        n_finite = 0
        for eid, ends, length in edges:
            if eid in self._edges:
                raise MalformedTree(f"duplicate edge id {eid!r}")
            ends = tuple(ends)
            if any(v not in vset for v in ends):
                raise MalformedTree(f"edge {eid!r} references unknown vertex")
            length = float(length)
            if math.isinf(length):
                if len(ends) != 1:
                    raise MalformedTree(
                        f"infinite edge {eid!r} must have exactly one endpoint"
                    )
            else:
                if len(ends) != 2:
                    raise MalformedTree(
                        f"finite edge {eid!r} must have two endpoints"
                    )
                if ends[0] == ends[1]:
                    raise MalformedTree(f"edge {eid!r} is a self loop (cycle)")
                if not length > 0.0:
                    raise MalformedTree(f"edge {eid!r} has nonpositive length")
                n_finite += 1
            self._edges[eid] = Edge(eid, ends, length)
            for v in ends:
                incident[v].append(eid)
        self._incident = {v: tuple(sorted(es)) for v, es in incident.items()}

        # Finite edges must form a spanning tree of the vertices.
        acyclic = n_finite == len(self._vertices) - 1
        seen = {self._vertices[0]}
        queue = deque(seen)
        while queue:
            v = queue.popleft()
            for eid in self._incident[v]:
                e = self._edges[eid]
                if e.infinite:
                    continue
                w = e.ends[1] if e.ends[0] == v else e.ends[0]
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        connected = len(seen) == len(self._vertices)
        if not connected or not acyclic:
            raise MalformedTree(
                "graph is not a tree "
                f"(connected={connected}, acyclic={acyclic})"
            )

        leaves = tuple(v for v in self._vertices if len(self._incident[v]) == 1)
        val2 = tuple(v for v in self._vertices if len(self._incident[v]) == 2)
        infs = tuple(sorted(e.id for e in self._edges.values() if e.infinite))
        self.report = ValidationReport(True, True, leaves, val2, infs)

        self.basepoint = self.canonical_point(basepoint)
        self._root = (
            self.basepoint.vertex
            if self.basepoint.is_vertex()
            else self._edges[self.basepoint.edge].ends[0]
        )
        self._build_rooted()
        self._subtree_cache: dict[tuple[str, str], frozenset[str]] = {}
        self._bp_dist: dict[str, float] | None = None
        self.generated_by = None  # set by generators (see ends.comb_generator)

    # -- structure ----------------------------------------------------------

    @property
    def vertices(self) -> tuple[str, ...]:
        return self._vertices

    @property
    def edges(self) -> Mapping[str, Edge]:
        return self._edges

    def edge(self, eid: str) -> Edge:
        try:
            return self._edges[eid]
        except KeyError:
            raise MalformedTree(f"unknown edge {eid!r}") from None

    def incident_edges(self, v: str) -> tuple[str, ...]:
        try:
            return self._incident[v]
        except KeyError:
            raise MalformedTree(f"unknown vertex {v!r}") from None

    def valency(self, v: str) -> int:
        return len(self.incident_edges(v))

    def is_leaf_free(self) -> bool:
        return not self.report.leaves

    def ends(self) -> tuple[TreeEnd, ...]:
        return tuple(TreeEnd(eid) for eid in self.report.infinite_edges)

    def end(self, eid: str) -> TreeEnd:
        e = self.edge(eid)
        if not e.infinite:
            raise MalformedTree(f"edge {eid!r} is not infinite, carries no end")
        return TreeEnd(eid)

    def end_attachment(self, end: TreeEnd) -> str:
        return self.edge(end.edge).ends[0]

    def _build_rooted(self) -> None:
        parent: dict[str, tuple[str, str] | None] = {self._root: None}
        depth = {self._root: 0}
        dist = {self._root: 0.0}
        queue = deque([self._root])
        while queue:
            v = queue.popleft()
            for eid in self._incident[v]:
                e = self._edges[eid]
                if e.infinite:
                    continue
                w = e.ends[1] if e.ends[0] == v else e.ends[0]
                if w not in parent:
                    parent[w] = (v, eid)
                    depth[w] = depth[v] + 1
                    dist[w] = dist[v] + e.length
                    queue.append(w)
        self._parent = parent
        self._depth = depth
        self._dist_root = dist

    # -- points -------------------------------------------------------------

    def vertex_point(self, v: str) -> TreePoint:
        if v not in self._vset:
            raise MalformedTree(f"unknown vertex {v!r}")
        return TreePoint(vertex=v)

    def edge_point(self, eid: str, offset: float) -> TreePoint:
        e = self.edge(eid)
        offset = float(offset)
        if offset < -_SNAP or (not e.infinite and offset > e.length + _SNAP):
            raise MalformedTree(
                f"offset {offset} outside edge {eid!r} of length {e.length}"
            )
        if offset <= _SNAP:
            return TreePoint(vertex=e.ends[0])
        if not e.infinite and offset >= e.length - _SNAP:
            return TreePoint(vertex=e.ends[1])
        return TreePoint(edge=eid, offset=offset)

    def canonical_point(self, p: "TreePoint | str") -> TreePoint:
        if isinstance(p, str):
            return self.vertex_point(p)
        if p.vertex is not None:
            return self.vertex_point(p.vertex)
        return self.edge_point(p.edge, p.offset)

    def _exits(self, p: TreePoint) -> list[tuple[str, float]]:
        """Vertices through which a path may leave p, with the cost to reach
        them along p's own edge."""
        if p.is_vertex():
            return [(p.vertex, 0.0)]
        e = self._edges[p.edge]
        if e.infinite:
            return [(e.ends[0], p.offset)]
        return [(e.ends[0], p.offset), (e.ends[1], e.length - p.offset)]

    # -- path metric ---------------------------------------------------------

    def lca(self, u: str, v: str) -> str:
        du, dv = self._depth[u], self._depth[v]
        while du > dv:
            u = self._parent[u][0]
            du -= 1
        while dv > du:
            v = self._parent[v][0]
            dv -= 1
        while u != v:
            u = self._parent[u][0]
            v = self._parent[v][0]
        return u

    def vertex_distance(self, u: str, v: str) -> float:
        a = self.lca(u, v)
        return self._dist_root[u] + self._dist_root[v] - 2.0 * self._dist_root[a]

    def vertex_path(self, u: str, v: str) -> list[str]:
        """Ordered vertex sequence of the path u .. v (inclusive)."""
        a = self.lca(u, v)
        up = []
        w = u
        while w != a:
            up.append(w)
            w = self._parent[w][0]
        down = []
        w = v
        while w != a:
            down.append(w)
            w = self._parent[w][0]
        return up + [a] + down[::-1]

    def basepoint_distances(self) -> dict[str, float]:
        """Distance from every vertex to the base point, computed by one
        breadth-first sweep and cached (the realizability sum is linear in
        the vertex count thanks to this)."""
        if self._bp_dist is None:
            dist = {v: c for v, c in self._exits(self.basepoint)}
            queue = deque(dist)
            while queue:
                v = queue.popleft()
                for eid in self._incident[v]:
                    e = self._edges[eid]
                    if e.infinite:
                        continue
                    w = e.ends[1] if e.ends[0] == v else e.ends[0]
                    if w not in dist:
                        dist[w] = dist[v] + e.length
                        queue.append(w)
            self._bp_dist = dist
        return self._bp_dist

    def parent_edge(self, v: str) -> str | None:
        """Edge from v toward the root (None at the root)."""
        p = self._parent[v]
        return None if p is None else p[1]

    def toward_basepoint(self, v: str) -> str | None:
        """First edge on the path from vertex v to the base point (None when
        v is the base point itself)."""
        if self.basepoint.is_vertex():
            return None if v == self.basepoint.vertex else self.parent_edge(v)
        if v == self._root:
            return self.basepoint.edge
        return self.parent_edge(v)

    def distance(self, p: TreePoint, q: TreePoint) -> float:
        p = self.canonical_point(p)
        q = self.canonical_point(q)
        if p.edge is not None and p.edge == q.edge:
            return abs(p.offset - q.offset)
        best = math.inf
        for a, ca in self._exits(p):
            for b, cb in self._exits(q):
                d = ca + self.vertex_distance(a, b) + cb
                if d < best:
                    best = d
        return best

    def path_nodes(self, p: TreePoint, q: TreePoint) -> list[tuple[float, TreePoint]]:
        """Nodes of the locus from p to q: every vertex on the path plus the
        two endpoints, with arc-length coordinates (0 at p)."""
        p = self.canonical_point(p)
        q = self.canonical_point(q)
        if p == q:
            return [(0.0, p)]
        if p.edge is not None and p.edge == q.edge:
            return [(0.0, p), (abs(p.offset - q.offset), q)]
        best = None
        for a, ca in self._exits(p):
            for b, cb in self._exits(q):
                d = ca + self.vertex_distance(a, b) + cb
                if best is None or d < best[0]:
                    best = (d, a, ca, b, cb)
        total, a, ca, b, cb = best
        nodes: list[tuple[float, TreePoint]] = []
        if not p.is_vertex():
            nodes.append((0.0, p))
        s = ca
        prev = None
        for w in self.vertex_path(a, b):
            if prev is not None:
                s += self.vertex_distance(prev, w)
            nodes.append((s, self.vertex_point(w)))
            prev = w
        if not q.is_vertex():
            nodes.append((total, q))
        return nodes

    def direction_from(self, v: str, target: TreePoint) -> str | None:
        """First edge on the path from vertex v toward target (None if the
        target is v itself)."""
        target = self.canonical_point(target)
        if target.is_vertex():
            if target.vertex == v:
                return None
            path = self.vertex_path(v, target.vertex)
            return self._edge_between_vertices(path[0], path[1])
        e = self._edges[target.edge]
        if v in e.ends:
            return e.id
        best = None
        for b, cb in self._exits(target):
            d = cb + self.vertex_distance(b, v)
            if best is None or d < best[0]:
                best = (d, b)
        return self.direction_from(v, self.vertex_point(best[1]))

    def _edge_between_vertices(self, u: str, v: str) -> str:
        pu = self._parent[u]
        if pu is not None and pu[0] == v:
            return pu[1]
        pv = self._parent[v]
        if pv is not None and pv[0] == u:
            return pv[1]
        raise MalformedTree(f"vertices {u!r}, {v!r} are not adjacent")

    # -- component bookkeeping (perpendiculars, Radon) ------------------------

    def subtree_vertices(self, x: str, via_edge: str) -> frozenset[str]:
        """Vertices of the component of X minus x entered through via_edge."""
        key = (x, via_edge)
        cached = self._subtree_cache.get(key)
        if cached is not None:
            return cached
        e = self.edge(via_edge)
        if e.infinite:
            result = frozenset()
        else:
            start = e.ends[1] if e.ends[0] == x else e.ends[0]
            seen = {start}
            queue = deque([start])
            while queue:
                v = queue.popleft()
                for eid in self._incident[v]:
                    g = self._edges[eid]
                    if g.infinite:
                        continue
                    w = g.ends[1] if g.ends[0] == v else g.ends[0]
                    if w != x and w not in seen:
                        seen.add(w)
                        queue.append(w)
            result = frozenset(seen)
        self._subtree_cache[key] = result
        return result

    def subtree_ends(self, x: str, via_edge: str) -> frozenset[TreeEnd]:
        """Boundary ends lying in the component of X minus x through via_edge."""
        e = self.edge(via_edge)
        if e.infinite:
            return frozenset({TreeEnd(via_edge)})
        out = set()
        for v in self.subtree_vertices(x, via_edge):
            for eid in self._incident[v]:
                if self._edges[eid].infinite:
                    out.add(TreeEnd(eid))
        return frozenset(out)

    def extension_walk(
        self, start: str, via_edge: str
    ) -> tuple[list[tuple[str, str]], TreeEnd]:
        """Follow the path leaving `start` through `via_edge`, continuing at
        each vertex along the lowest-id edge other than the one just used,
        until an infinite edge is reached.

        Returns the finite steps crossed as (edge id, vertex reached) pairs
        and the end of the final infinite edge.  Dead ends raise LeafyTree;
        they cannot occur on leaf-free trees.
        """
        eid = via_edge
        v = start
        steps: list[tuple[str, str]] = []
        while True:
            e = self.edge(eid)
            if e.infinite:
                return steps, TreeEnd(eid)
            v = e.ends[1] if e.ends[0] == v else e.ends[0]
            steps.append((eid, v))
            onward = [g for g in self.incident_edges(v) if g != eid]
            if not onward:
                raise LeafyTree(f"extension stuck at leaf {v!r}")
            eid = onward[0]

    # -- geodesic constructors ------------------------------------------------

    def constant_geodesic(
        self, p: TreePoint, t0: float = 0.0, t1: float = 1.0
    ) -> "TreeGeodesic":
        p = self.canonical_point(p)
        return TreeGeodesic(
            self, 0.0, t0, t1, t0 if math.isfinite(t0) else 0.0,
            ((0.0, p),), None, None,
        )

    def geodesic_segment(
        self, p: TreePoint, q: TreePoint, t0: float, t1: float
    ) -> "TreeGeodesic":
        if not t0 < t1:
            raise OutOfInterval(f"need t0 < t1, got [{t0}, {t1}]")
        p = self.canonical_point(p)
        q = self.canonical_point(q)
        if p == q:
            return self.constant_geodesic(p, t0, t1)
        nodes = self.path_nodes(p, q)
        speed = nodes[-1][0] / (t1 - t0)
        return TreeGeodesic(self, speed, t0, t1, t0, tuple(nodes), None, None)

    def ray_to_end(self, p: TreePoint, end: TreeEnd, speed: float) -> "TreeGeodesic":
        p = self.canonical_point(p)
        e = self.edge(end.edge)
        if not e.infinite:
            raise MalformedTree(f"edge {end.edge!r} carries no end")
        if speed == 0.0:
            return self.constant_geodesic(p, 0.0, math.inf)
        if p.edge == end.edge:
            nodes = [(0.0, p)]
        else:
            nodes = self.path_nodes(p, self.vertex_point(e.ends[0]))
        return TreeGeodesic(
            self, float(speed), 0.0, math.inf, 0.0, tuple(nodes), None, end
        )

    def geodesic_between_ends(
        self,
        xi: TreeEnd,
        zeta: TreeEnd,
        speed: float = 1.0,
        anchor: TreePoint | None = None,
        anchor_time: float = 0.0,
    ) -> "TreeGeodesic":
        """Bi-infinite geodesic from xi (at -inf) to zeta (at +inf).

        By default it is parametrized so that its time 0 is the point of the
        locus nearest to the base point; an explicit anchor overrides this.
        """
        if xi == zeta:
            raise EqualEnds(f"both ends are {xi!r}")
        u = self.end_attachment(xi)
        v = self.end_attachment(zeta)
        nodes = self.path_nodes(self.vertex_point(u), self.vertex_point(v))
        prov = TreeGeodesic(
            self, float(speed), -math.inf, math.inf, 0.0, tuple(nodes), xi, zeta
        )
        if anchor is None:
            anchor_pt = project_to_geodesic(self, self.basepoint, prov)
            t_a = 0.0
        else:
            anchor_pt = self.canonical_point(anchor)
            t_a = float(anchor_time)
        s_a = prov.arc_of_point(anchor_pt)
        if s_a is None:
            raise MalformedTree("anchor does not lie on the geodesic locus")
        shifted = tuple((s - s_a, pt) for s, pt in nodes)
        return TreeGeodesic(
            self, float(speed), -math.inf, math.inf, t_a, shifted, xi, zeta
        )


class TreeGeodesic:
    """Constant-speed globally minimizing curve in the tree.

    The locus is stored as arc-parametrized nodes (every vertex on the path
    plus finite endpoints) together with an optional boundary end on each
    open side; ``s(t) = speed * (t - t_origin)``.
    """

    __slots__ = (
        "tree", "speed", "t0", "t1", "t_origin",
        "nodes", "neg_end", "pos_end", "_spans",
    )

    def __init__(self, tree, speed, t0, t1, t_origin, nodes, neg_end, pos_end):
        self.tree = tree
        self.speed = float(speed)
        self.t0 = float(t0)
        self.t1 = float(t1)
        self.t_origin = float(t_origin)
        self.nodes = tuple(nodes)
        self.neg_end = neg_end
        self.pos_end = pos_end
        spans = []
        for (sa, pa), (sb, pb) in zip(self.nodes, self.nodes[1:]):
            spans.append(self._common_edge(pa, pb))
        self._spans = tuple(spans)

    # -- identity -------------------------------------------------------------

    def key(self):
        return (
            self.speed, self.t0, self.t1, self.t_origin,
            self.nodes, self.neg_end, self.pos_end,
        )

    def __eq__(self, other):
        return isinstance(other, TreeGeodesic) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        src = self.neg_end or self.nodes[0][1]
        dst = self.pos_end or self.nodes[-1][1]
        return f"TreeGeodesic({src!r} -> {dst!r}, speed={self.speed:g})"

    @property
    def is_constant(self) -> bool:
        return self.speed == 0.0

    @property
    def interval_kind(self) -> str:
        if math.isinf(self.t0) and math.isinf(self.t1):
            return "complete"
        if math.isinf(self.t1):
            return "ray"
        return "segment"

    def source(self):
        return self.neg_end if self.neg_end is not None else self.nodes[0][1]

    def target(self):
        return self.pos_end if self.pos_end is not None else self.nodes[-1][1]

    # -- geometry ---------------------------------------------------------------

    def _common_edge(self, pa: TreePoint, pb: TreePoint) -> str:
        tree = self.tree
        ea = (
            set(tree.incident_edges(pa.vertex)) if pa.is_vertex() else {pa.edge}
        )
        eb = (
            set(tree.incident_edges(pb.vertex)) if pb.is_vertex() else {pb.edge}
        )
        common = ea & eb
        if len(common) != 1:
            raise MalformedTree(f"no unique edge between {pa!r} and {pb!r}")
        return next(iter(common))

    def _offset_on(self, p: TreePoint, eid: str) -> float:
        e = self.tree.edge(eid)
        if p.is_vertex():
            if p.vertex == e.ends[0]:
                return 0.0
            return e.length
        assert p.edge == eid
        return p.offset

    def arc_bounds(self) -> tuple[float, float]:
        lo = -math.inf if self.neg_end is not None else self.nodes[0][0]
        hi = math.inf if self.pos_end is not None else self.nodes[-1][0]
        return lo, hi

    def point_at_arc(self, s: float) -> TreePoint:
        if self.is_constant:
            return self.nodes[0][1]
        nodes = self.nodes
        if self.neg_end is not None and s <= nodes[0][0]:
            base = self._offset_on(nodes[0][1], self.neg_end.edge)
            return self.tree.edge_point(self.neg_end.edge, base + (nodes[0][0] - s))
        if self.pos_end is not None and s >= nodes[-1][0]:
            base = self._offset_on(nodes[-1][1], self.pos_end.edge)
            return self.tree.edge_point(self.pos_end.edge, base + (s - nodes[-1][0]))
        s = min(max(s, nodes[0][0]), nodes[-1][0])
        lo, hi = 0, len(nodes) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if nodes[mid][0] <= s:
                lo = mid
            else:
                hi = mid
        sa, pa = nodes[lo]
        sb, pb = nodes[hi]
        if s - sa <= _SNAP:
            return pa
        if sb - s <= _SNAP:
            return pb
        eid = self._spans[lo]
        oa = self._offset_on(pa, eid)
        ob = self._offset_on(pb, eid)
        off = oa + (s - sa) * (1.0 if ob > oa else -1.0)
        return self.tree.edge_point(eid, off)

    def evaluate(self, t: float) -> TreePoint:
        if t < self.t0 - TOL or t > self.t1 + TOL:
            raise OutOfInterval(f"t={t} outside [{self.t0}, {self.t1}]")
        if self.is_constant:
            return self.nodes[0][1]
        s = self.speed * (t - self.t_origin)
        lo, hi = self.arc_bounds()
        return self.point_at_arc(min(max(s, lo), hi))

    def arc_of_point(self, p: TreePoint) -> float | None:
        """Arc coordinate of a point of the locus, None if p is off it."""
        p = self.tree.canonical_point(p)
        if self.is_constant:
            return 0.0 if p == self.nodes[0][1] else None
        for s, q in self.nodes:
            if q == p:
                return s
        if p.edge is None:
            return None
        for i, eid in enumerate(self._spans):
            if eid != p.edge:
                continue
            sa, pa = self.nodes[i]
            sb, pb = self.nodes[i + 1]
            oa = self._offset_on(pa, eid)
            ob = self._offset_on(pb, eid)
            if min(oa, ob) - TOL <= p.offset <= max(oa, ob) + TOL:
                return sa + abs(p.offset - oa)
        if self.neg_end is not None and p.edge == self.neg_end.edge:
            base = self._offset_on(self.nodes[0][1], p.edge)
            if p.offset >= base - TOL:
                return self.nodes[0][0] - (p.offset - base)
        if self.pos_end is not None and p.edge == self.pos_end.edge:
            base = self._offset_on(self.nodes[-1][1], p.edge)
            if p.offset >= base - TOL:
                return self.nodes[-1][0] + (p.offset - base)
        return None

    def traversals(self) -> list[tuple[str, float, float, int]]:
        """Edge sub-intervals covered by the locus.

        Returns tuples (edge id, low offset, high offset, direction) where
        direction is +1 if the offset increases along the parametrization.
        Infinite tails use math.inf as the high offset.
        """
        if self.is_constant:
            return []
        out = []
        if self.neg_end is not None:
            base = self._offset_on(self.nodes[0][1], self.neg_end.edge)
            out.append((self.neg_end.edge, base, math.inf, -1))
        for i, eid in enumerate(self._spans):
            oa = self._offset_on(self.nodes[i][1], eid)
            ob = self._offset_on(self.nodes[i + 1][1], eid)
            out.append((eid, min(oa, ob), max(oa, ob), 1 if ob > oa else -1))
        if self.pos_end is not None:
            base = self._offset_on(self.nodes[-1][1], self.pos_end.edge)
            out.append((self.pos_end.edge, base, math.inf, 1))
        return out

    def restrict(self, t0: float, t1: float) -> "TreeGeodesic":
        if not (self.t0 - TOL <= t0 < t1 <= self.t1 + TOL):
            raise OutOfInterval(f"[{t0}, {t1}] not inside [{self.t0}, {self.t1}]")
        if self.is_constant:
            return self.tree.constant_geodesic(self.nodes[0][1], t0, t1)
        return self.tree.geodesic_segment(self.evaluate(t0), self.evaluate(t1), t0, t1)


# -- module-level operations -------------------------------------------------


def validate(tree: MetricTree) -> ValidationReport:
    """Structural report of an already-built tree.

    Construction itself rejects cycles, disconnection, nonpositive lengths
    and two-endpoint infinite edges, so a report is always ``ok``; it still
    carries the leaf and valency-2 lists that later modules care about.
    """
    return tree.report


def distance(tree: MetricTree, p: TreePoint, q: TreePoint) -> float:
    return tree.distance(p, q)


def geodesic_segment(tree, p, q, t0: float, t1: float) -> TreeGeodesic:
    return tree.geodesic_segment(p, q, t0, t1)


def ray_to_end(tree, p, xi: TreeEnd, speed: float) -> TreeGeodesic:
    return tree.ray_to_end(p, xi, speed)


def evaluate(gamma: TreeGeodesic, t: float) -> TreePoint:
    return gamma.evaluate(t)


def gromov_product(tree: MetricTree, xi: TreeEnd, zeta: TreeEnd) -> float:
    """Distance from the base point to the geodesic joining two ends;
    +infinity on the diagonal."""
    if xi == zeta:
        return math.inf
    gamma = tree.geodesic_between_ends(xi, zeta)
    return tree.distance(tree.basepoint, gamma.point_at_arc(0.0))


def geodesic_between_ends(tree, xi: TreeEnd, zeta: TreeEnd) -> TreeGeodesic:
    return tree.geodesic_between_ends(xi, zeta)


def project_to_geodesic(tree: MetricTree, y: TreePoint, gamma: TreeGeodesic) -> TreePoint:
    """Nearest point of the locus of gamma; unique since the locus is convex."""
    if gamma.is_constant:
        raise ConstantGeodesic("projection on a constant geodesic is undefined")
    y = tree.canonical_point(y)
    if gamma.arc_of_point(y) is not None:
        return y
    ref_s, ref_pt = gamma.nodes[0]
    r = 2.0 * tree.distance(y, ref_pt) + 1.0
    lo, hi = gamma.arc_bounds()
    sa = max(lo, ref_s - r)
    sb = min(hi, ref_s + r)
    a = gamma.point_at_arc(sa)
    b = gamma.point_at_arc(sb)
    length = sb - sa
    sy = 0.5 * (tree.distance(y, a) - tree.distance(y, b) + length)
    sy = min(max(sy, 0.0), length)
    return gamma.point_at_arc(sa + sy)


def perpendicular(tree: MetricTree, x: str, e: str, f: str) -> frozenset[str]:
    """Vertex set of the perpendicular of the flag (x, ef): x together with
    the components off x that meet neither e nor f."""
    if e == f:
        raise FlagInvalid(f"flag needs two distinct edges, got {e!r} twice")
    inc = tree.incident_edges(x)
    if e not in inc or f not in inc:
        raise FlagInvalid(f"edges {e!r}, {f!r} not both incident to {x!r}")
    out = {x}
    for g in inc:
        if g not in (e, f):
            out |= tree.subtree_vertices(x, g)
    return frozenset(out)
