"""Exact discrete quadratic optimal transport on a metric tree.

The solver is a transportation simplex (network simplex on the bipartite
transportation polytope) written here rather than delegated to a library:
it must handle negative costs (the boundary problem of the ends module uses
cost -D0^2), keep dual variables for an optimality certificate, and pivot
deterministically (Bland's rule, lexicographic preference) so that outputs
are byte-stable.  Instances are desk scale, so clarity beats asymptotics.

Cyclical monotonicity is certified by searching the support pairs for a
negative improvement cycle: a plan is optimal for a cost iff no finite
family of its pairs can lower the total cost by shifting targets along a
cycle.  The search is a min-plus power iteration over the improvement
matrix, which detects a violating cycle of length <= max_cycle exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import MarginalMismatch
from .metric_tree import MetricTree, TreePoint

MASS_TOL = 1e-9
_ZERO_MASS = 1e-12


def _merge_point_atoms(
    tree: MetricTree, atoms: Sequence[tuple[TreePoint, float]]
) -> list[tuple[TreePoint, float]]:
    """Canonicalize points, merge coincident atoms, drop zero masses."""
    merged: dict = {}
    order: list = []
    for p, m in atoms:
        p = tree.canonical_point(p)
        m = float(m)
        if p not in merged:
            merged[p] = 0.0
            order.append(p)
        merged[p] += m
    out = []
    for p in order:
        if merged[p] > _ZERO_MASS:
            out.append((p, merged[p]))
    return out


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure on tree points."""

    atoms: tuple[tuple[TreePoint, float], ...]

    @staticmethod
    def from_atoms(tree: MetricTree, atoms) -> "DiscreteMeasure":
        merged = _merge_point_atoms(tree, atoms)
        total = sum(m for _, m in merged)
        if abs(total - 1.0) > MASS_TOL:
            raise MarginalMismatch(f"masses sum to {total}, expected 1")
        return DiscreteMeasure(tuple(merged))

    @staticmethod
    def dirac(tree: MetricTree, p: TreePoint) -> "DiscreteMeasure":
        return DiscreteMeasure(((tree.canonical_point(p), 1.0),))

    def points(self) -> list[TreePoint]:
        return [p for p, _ in self.atoms]

    def masses(self) -> list[float]:
        return [m for _, m in self.atoms]

    def mass_at(self, p: TreePoint) -> float:
        for q, m in self.atoms:
            if q == p:
                return m
        return 0.0

    def second_moment(self, tree: MetricTree, x0: TreePoint | None = None) -> float:
        x0 = tree.basepoint if x0 is None else x0
        return sum(m * tree.distance(x0, p) ** 2 for p, m in self.atoms)


@dataclass(frozen=True)
class TransportPlan:
    """Coupling given by its support entries (source, target, mass).

    Row sums are the source masses and column sums the target masses; the
    optional potentials are the dual variables of the solver run that
    produced the plan (kept for the optimality certificate).
    """

    entries: tuple[tuple[TreePoint, TreePoint, float], ...]
    potentials: tuple[tuple[float, ...], tuple[float, ...]] | None = None

    def cost(self, cost_fn: Callable[[TreePoint, TreePoint], float]) -> float:
        return sum(m * cost_fn(x, y) for x, y, m in self.entries)

    def support(self) -> list[tuple[TreePoint, TreePoint]]:
        return [(x, y) for x, y, _ in self.entries]

    def check_marginals(
        self, mu: DiscreteMeasure, nu: DiscreteMeasure, tol: float = MASS_TOL
    ) -> None:
        row: dict = {}
        col: dict = {}
        for x, y, m in self.entries:
            row[x] = row.get(x, 0.0) + m
            col[y] = col.get(y, 0.0) + m
        for p, m in mu.atoms:
            if abs(row.pop(p, 0.0) - m) > tol:
                raise MarginalMismatch(f"row sum at {p!r} differs from source mass")
        for p, m in nu.atoms:
            if abs(col.pop(p, 0.0) - m) > tol:
                raise MarginalMismatch(f"column sum at {p!r} differs from target mass")
        if any(m > tol for m in row.values()) or any(m > tol for m in col.values()):
            raise MarginalMismatch("plan carries mass outside the marginals")


class SimplexSolution(NamedTuple):
    value: float
    cells: dict  # (i, j) -> mass, basic cells only
    u: list[float]
    v: list[float]


def transportation_simplex(
    supply: Sequence[float], demand: Sequence[float], cost: Sequence[Sequence[float]]
) -> SimplexSolution:
    """Minimize sum x_ij c_ij over the transportation polytope.

    Costs may be negative.  Entering variable: first cell in lexicographic
    (i, j) order with reduced cost below -1e-12; leaving variable: first
    minimizer of the ratio test (Bland's rule, no cycling).  The returned
    duals satisfy u_i + v_j = c_ij on the basis.
    """
    m, n = len(supply), len(demand)
    a = [float(s) for s in supply]
    total_a = sum(a)
    total_b = sum(demand)
    scale = total_a / total_b
    b = [float(d) * scale for d in demand]

    # Northwest-corner initial basis: exactly m + n - 1 cells.
    x: dict = {}
    basis: list[tuple[int, int]] = []
    i = j = 0
    while True:
        q = max(0.0, min(a[i], b[j]))
        x[(i, j)] = q
        basis.append((i, j))
        a[i] -= q
        b[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif a[i] <= b[j]:
            i += 1
        else:
            j += 1

    cscale = max((abs(c) for row in cost for c in row), default=0.0)
    eps_pivot = 1e-12 * (1.0 + cscale)
    max_iter = 2000 * (m + n) + 1000
    for _ in range(max_iter):
        u, v = _duals(m, n, cost, basis)
        entering = None
        for ii in range(m):
            ui = u[ii]
            for jj in range(n):
                if (ii, jj) not in x and cost[ii][jj] - ui - v[jj] < -eps_pivot:
                    entering = (ii, jj)
                    break
            if entering is not None:
                break
        if entering is None:
            break
        cycle = _basis_cycle(m, n, basis, entering)
        minus = cycle[1::2]
        theta = min(x[c] for c in minus)
        leaving = min(c for c in minus if x[c] <= theta + 0.0)
        for k, c in enumerate(cycle):
            if k % 2 == 0:
                x[c] = x.get(c, 0.0) + theta
            else:
                x[c] = max(0.0, x[c] - theta)
        del x[leaving]
        basis.remove(leaving)
        basis.append(entering)
        basis.sort()
    else:
        raise RuntimeError("transportation simplex did not converge")

    u, v = _duals(m, n, cost, basis)
    value = sum(q * cost[i][j] for (i, j), q in x.items())
    return SimplexSolution(value, x, u, v)


def _duals(m, n, cost, basis):
    u = [None] * m
    v = [None] * n
    u[0] = 0.0
    rows = {i: [] for i in range(m)}
    cols = {j: [] for j in range(n)}
    for (i, j) in basis:
        rows[i].append(j)
        cols[j].append(i)
    stack = [("r", 0)]
    while stack:
        kind, k = stack.pop()
        if kind == "r":
            for j in rows[k]:
                if v[j] is None:
                    v[j] = cost[k][j] - u[k]
                    stack.append(("c", j))
        else:
            for i in cols[k]:
                if u[i] is None:
                    u[i] = cost[i][k] - v[k]
                    stack.append(("r", i))
    if any(w is None for w in u) or any(w is None for w in v):
        raise RuntimeError("degenerate basis is not a spanning tree")
    return u, v


def _basis_cycle(m, n, basis, entering):
    """Unique alternating cycle created by adding `entering` to the basis
    spanning tree, returned as cells starting with `entering`."""
    adj: dict = {}
    for (i, j) in basis:
        adj.setdefault(("r", i), []).append(("c", j))
        adj.setdefault(("c", j), []).append(("r", i))
    start = ("r", entering[0])
    goal = ("c", entering[1])
    prev = {start: None}
    queue = [start]
    while queue:
        node = queue.pop(0)
        if node == goal:
            break
        for nxt in adj.get(node, []):
            if nxt not in prev:
                prev[nxt] = node
                queue.append(nxt)
    path = [goal]
    while path[-1] != start:
        path.append(prev[path[-1]])
    path.reverse()  # r i0, c j1, r i1, ..., c entering[1]
    cells = [entering]
    for a, bnode in zip(path, path[1:]):
        if a[0] == "r":
            cells.append((a[1], bnode[1]))
        else:
            cells.append((bnode[1], a[1]))
    return cells


class W2Result(NamedTuple):
    distance: float
    plan: TransportPlan


def solve_transport(
    sources: Sequence, source_masses: Sequence[float],
    targets: Sequence, target_masses: Sequence[float],
    cost_fn: Callable,
) -> tuple[float, list[tuple[int, int, float]], SimplexSolution]:
    """Generic exact transport between two atom lists; returns the optimal
    value, index-level entries and the raw simplex solution."""
    cost = [[cost_fn(p, q) for q in targets] for p in sources]
    sol = transportation_simplex(source_masses, target_masses, cost)
    entries = [
        (i, j, q) for (i, j), q in sorted(sol.cells.items()) if q > _ZERO_MASS
    ]
    return sol.value, entries, sol


def wasserstein2(tree: MetricTree, mu: DiscreteMeasure, nu: DiscreteMeasure) -> W2Result:
    """Quadratic Wasserstein distance and an optimal plan.

    Optimality is certified by dual feasibility before returning: the duals
    of the final basis must satisfy u_i + v_j <= c_ij + 1e-7 everywhere and
    complementary slackness on the support.  Ties between optimal plans are
    broken by the solver's lexicographic pivoting; the returned plan is
    deterministic but not mathematically canonical.
    """
    xs, ms = mu.points(), mu.masses()
    ys, ns = nu.points(), nu.masses()
    cost_fn = lambda p, q: tree.distance(p, q) ** 2
    value, entries, sol = solve_transport(xs, ms, ys, ns, cost_fn)
    certify_duals([[cost_fn(p, q) for q in ys] for p in xs], sol)
    plan = TransportPlan(
        tuple((xs[i], ys[j], q) for i, j, q in entries),
        potentials=(tuple(sol.u), tuple(sol.v)),
    )
    return W2Result(math.sqrt(max(0.0, value)), plan)


def certify_duals(cost, sol: SimplexSolution, tol: float = 1e-7) -> None:
    """Dual feasibility and complementary slackness, within tol relative to
    the cost scale (the certificate must survive squared distances at the
    asymptotic sampling times)."""
    scale = 1.0 + max((abs(c) for row in cost for c in row), default=0.0)
    for i, ui in enumerate(sol.u):
        for j, vj in enumerate(sol.v):
            if ui + vj > cost[i][j] + tol * scale:
                raise RuntimeError("dual feasibility violated: plan not optimal")
    for (i, j), q in sol.cells.items():
        if q > _ZERO_MASS and abs(cost[i][j] - sol.u[i] - sol.v[j]) > tol * scale:
            raise RuntimeError("complementary slackness violated")


# -- cyclical monotonicity ----------------------------------------------------


@dataclass(frozen=True)
class MonotonicityCertificate:
    passed: bool
    max_cycle: int
    witness: tuple[int, ...] | None  # indices into the plan's entries
    improvement: float  # most negative cycle value found (0 when passed)

    def __bool__(self) -> bool:
        return self.passed


def min_improvement_cycle(
    weights: np.ndarray, max_cycle: int
) -> tuple[float, tuple[int, ...] | None]:
    """Most negative closed walk of length <= max_cycle in the complete
    digraph with arc weights w[e, f], plus a witness cycle.

    w[e, f] is the cost change of redirecting entry e's mass to entry f's
    target; a negative cycle is exactly a violation of cyclical monotonicity.
    At the smallest violating length the walk is automatically simple (a
    shorter negative sub-cycle would have been detected first).
    """
    k = weights.shape[0]
    if k == 0 or max_cycle < 2:
        return 0.0, None
    dist = weights.copy()  # walks of length 1; their diagonal is 0 by design
    args: dict[int, np.ndarray] = {}
    for step in range(2, max_cycle + 1):
        stacked = dist[:, :, None] + weights[None, :, :]
        args[step] = np.argmin(stacked, axis=1)
        dist = np.min(stacked, axis=1)
        diag = np.diagonal(dist)
        best = float(np.min(diag))
        if best < -MASS_TOL:
            e = int(np.argmin(diag))
            return best, tuple(_unwind_cycle(args, e, step))
    return 0.0, None


def _unwind_cycle(args: dict, e: int, length: int) -> list[int]:
    """Recover the node sequence of the closed walk found at `length`."""
    tail = []
    f = e
    while length >= 2:
        mid = int(args[length][e, f])
        tail.append(mid)
        f = mid
        length -= 1
    return [e] + tail[::-1]


def is_cyclically_monotone(
    tree: MetricTree,
    plan: TransportPlan,
    max_cycle: int | None = None,
    full: bool = False,
    cost_fn: Callable | None = None,
) -> MonotonicityCertificate:
    """Certify that no cycle of support pairs of length <= max_cycle can
    lower the total cost by shifting targets (cost d^2 by default).

    max_cycle defaults to min(support size, 8); pass full=True for the
    complete check up to the support size.  A failing certificate carries a
    witness cycle of entry indices: shifting each listed entry's target to
    the next one strictly improves the cost.
    """
    k = len(plan.entries)
    if k == 0:
        return MonotonicityCertificate(True, 0, None, 0.0)
    if full or max_cycle is None:
        max_cycle = k if full else min(k, 8)
    max_cycle = min(max_cycle, k)
    if cost_fn is None:
        cost_fn = lambda p, q: tree.distance(p, q) ** 2
    w = np.empty((k, k))
    for e, (xe, ye, _) in enumerate(plan.entries):
        base = cost_fn(xe, ye)
        for f, (_, yf, _) in enumerate(plan.entries):
            w[e, f] = cost_fn(xe, yf) - base
    best, witness = min_improvement_cycle(w, max_cycle)
    if witness is None:
        return MonotonicityCertificate(True, max_cycle, None, 0.0)
    return MonotonicityCertificate(False, max_cycle, witness, best)
