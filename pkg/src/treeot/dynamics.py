"""Dynamical transport plans: measures on parametrized geodesics.

A plan is a finitely supported probability measure on geodesics sharing one
parameter interval (a segment, a ray, or the whole line).  Its time-t
pushforward is a discrete measure on the tree, and pushing a whole family
of times gives the curve in Wasserstein space the plan represents.

Optimality bookkeeping is tree flavored: two geodesics are antagonist when
they run through a common edge portion in opposite directions.  For plans
supported on unit-speed complete geodesics this is exactly the negation of
cyclical monotonicity; on bounded segments the antagonist certificate is the
structural check, cross-validated against cyclical monotonicity of sampled
two-time projections (the equivalence can fail on segment plans whose
antagonist overlap is paid for outside the interval, so the random suites
stay in the generic regime).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import (
    LeafyTree,
    MarginalMismatch,
    NotDiracBased,
    OutOfInterval,
    PlanNotOptimal,
)
from .metric_tree import MetricTree, TreeGeodesic, TreePoint, project_to_geodesic, TOL
from .transport import (
    DiscreteMeasure,
    TransportPlan,
    is_cyclically_monotone,
    wasserstein2,
)

_ZERO_MASS = 1e-12


@dataclass(frozen=True)
class DynamicalPlan:
    """Finitely supported measure on geodesics over a common interval."""

    atoms: tuple[tuple[TreeGeodesic, float], ...]
    kind: str  # "segment" | "ray" | "complete"
    t0: float
    t1: float

    @staticmethod
    def from_atoms(tree: MetricTree, atoms) -> "DynamicalPlan":
        merged: dict = {}
        order = []
        for g, m in atoms:
            if g not in merged:
                merged[g] = 0.0
                order.append(g)
            merged[g] += float(m)
        kept = [(g, merged[g]) for g in order if merged[g] > _ZERO_MASS]
        if not kept:
            raise MarginalMismatch("plan has no mass")
        total = sum(m for _, m in kept)
        if abs(total - 1.0) > 1e-9:
            raise MarginalMismatch(f"plan masses sum to {total}, expected 1")
        g0 = kept[0][0]
        t0, t1, kind = g0.t0, g0.t1, g0.interval_kind
        for g, _ in kept:
            if g.t0 != t0 or g.t1 != t1:
                raise MarginalMismatch("atoms do not share a parameter interval")
        return DynamicalPlan(tuple(kept), kind, t0, t1)

    @property
    def speed(self) -> float:
        return math.sqrt(sum(m * g.speed**2 for g, m in self.atoms))

    def is_unit(self, tol: float = 1e-9) -> bool:
        return abs(self.speed - 1.0) <= tol

    def restrict(self, t0: float, t1: float) -> "DynamicalPlan":
        tree = self.atoms[0][0].tree
        return DynamicalPlan.from_atoms(
            tree, [(g.restrict(t0, t1), m) for g, m in self.atoms]
        )


def pushforward_at(plan: DynamicalPlan, t: float) -> DiscreteMeasure:
    """Law of the time-t position of a random geodesic of the plan."""
    if t < plan.t0 - TOL or t > plan.t1 + TOL:
        raise OutOfInterval(f"t={t} outside [{plan.t0}, {plan.t1}]")
    tree = plan.atoms[0][0].tree
    return DiscreteMeasure.from_atoms(
        tree, [(g.evaluate(t), m) for g, m in plan.atoms]
    )


def interpolate(
    tree: MetricTree,
    mu0: DiscreteMeasure,
    mu1: DiscreteMeasure,
    plan: TransportPlan | None = None,
) -> DynamicalPlan:
    """Displacement interpolation on [0, 1] of an optimal plan between mu0
    and mu1 (solved internally when not supplied).

    A supplied plan must be optimal; this is certified by the full cyclical
    monotonicity check and PlanNotOptimal is raised on failure.
    """
    if plan is None:
        plan = wasserstein2(tree, mu0, mu1).plan
    else:
        plan.check_marginals(mu0, mu1)
        cert = is_cyclically_monotone(tree, plan, full=True)
        if not cert.passed:
            raise PlanNotOptimal(
                f"improvement {cert.improvement:.3e} on cycle {cert.witness}"
            )
    return DynamicalPlan.from_atoms(
        tree,
        [(tree.geodesic_segment(x, y, 0.0, 1.0), m) for x, y, m in plan.entries],
    )


# -- lifting -------------------------------------------------------------------


@dataclass(frozen=True)
class LiftedCoupling:
    """Most independent lift of a time-t plan to a coupling of two
    dynamical plans, as (mu index, sigma index, mass) triples."""

    pairs: tuple[tuple[int, int, float], ...]
    mu: DynamicalPlan
    sigma: DynamicalPlan

    def project(self, t: float) -> TransportPlan:
        tree = self.mu.atoms[0][0].tree
        cells: dict = {}
        for i, j, q in self.pairs:
            key = (self.mu.atoms[i][0].evaluate(t), self.sigma.atoms[j][0].evaluate(t))
            cells[key] = cells.get(key, 0.0) + q
        return TransportPlan(tuple((x, y, q) for (x, y), q in cells.items()))


def lift(
    tree: MetricTree,
    mu: DynamicalPlan,
    sigma: DynamicalPlan,
    plan_t: TransportPlan,
    t: float,
) -> LiftedCoupling:
    """Lift a coupling of the time-t laws to a coupling of the plans by the
    product disintegration: conditionally on positions, geodesics are drawn
    independently."""
    mu_t = pushforward_at(mu, t)
    sigma_t = pushforward_at(sigma, t)
    plan_t.check_marginals(mu_t, sigma_t)

    at_mu: dict[TreePoint, list[int]] = {}
    for i, (g, _) in enumerate(mu.atoms):
        at_mu.setdefault(g.evaluate(t), []).append(i)
    at_sigma: dict[TreePoint, list[int]] = {}
    for j, (g, _) in enumerate(sigma.atoms):
        at_sigma.setdefault(g.evaluate(t), []).append(j)

    pairs = []
    for x, y, q in plan_t.entries:
        mx = mu_t.mass_at(x)
        ny = sigma_t.mass_at(y)
        if mx <= 0.0 or ny <= 0.0:
            raise MarginalMismatch("plan entry outside the pushforward supports")
        for i in at_mu[x]:
            for j in at_sigma[y]:
                w = q * (mu.atoms[i][1] / mx) * (sigma.atoms[j][1] / ny)
                if w > _ZERO_MASS:
                    pairs.append((i, j, w))
    return LiftedCoupling(tuple(pairs), mu, sigma)


# -- antagonism -----------------------------------------------------------------


def antagonist_pairs(plan: DynamicalPlan) -> list[tuple[int, int, str]]:
    """All pairs of support geodesics running through a common edge portion
    in opposite directions, each with a shared edge as witness."""
    traversals = [g.traversals() for g, _ in plan.atoms]
    by_edge: list[dict] = []
    for trav in traversals:
        d: dict = {}
        for eid, lo, hi, direction in trav:
            d[eid] = (lo, hi, direction)
        by_edge.append(d)
    out = []
    n = len(by_edge)
    for i in range(n):
        for j in range(i + 1, n):
            small, large = (i, j) if len(by_edge[i]) <= len(by_edge[j]) else (j, i)
            for eid, (lo, hi, direction) in by_edge[small].items():
                other = by_edge[large].get(eid)
                if other is None or other[2] == direction:
                    continue
                if min(hi, other[1]) - max(lo, other[0]) > 1e-12:
                    out.append((i, j, eid))
                    break
    return out


@dataclass(frozen=True)
class OptimalityCertificate:
    passed: bool
    witnesses: tuple[tuple[int, int, str], ...]

    def __bool__(self) -> bool:
        return self.passed


def is_optimal_dynamical(tree: MetricTree, plan: DynamicalPlan) -> OptimalityCertificate:
    """PASS iff the plan's support carries no antagonist pair.

    For unit-speed complete plans this is equivalent to optimality (cyclical
    monotonicity of every two-time projection); segment suites cross-check
    it against is_cyclically_monotone of sampled projections.
    """
    witnesses = tuple(antagonist_pairs(plan))
    return OptimalityCertificate(not witnesses, witnesses)


def projection_monotone(
    tree: MetricTree,
    plan: DynamicalPlan,
    time_pairs: Sequence[tuple[float, float]],
) -> bool:
    """Cyclical monotonicity of the (e_s, e_t) projections at given times."""
    for s, t in time_pairs:
        proj = TransportPlan(
            tuple((g.evaluate(s), g.evaluate(t), m) for g, m in plan.atoms)
        )
        if not is_cyclically_monotone(tree, proj, full=True).passed:
            return False
    return True


# -- extension and Dirac interpolation -------------------------------------------


def extend_from_dirac(tree: MetricTree, segment_plan: DynamicalPlan) -> DynamicalPlan:
    """Extend a segment plan issued from a Dirac mass to a ray plan on
    [0, inf), continuing each geodesic along its path; at branch vertices the
    lowest edge id is taken (the existence proof selects measurably, any
    deterministic selection is faithful).  Speed-0 atoms stay constant."""
    if not tree.is_leaf_free():
        raise LeafyTree(f"tree has leaves {tree.report.leaves}")
    if segment_plan.kind != "segment" or abs(segment_plan.t0) > TOL:
        raise NotDiracBased("expected a segment plan parametrized from t0 = 0")
    start = pushforward_at(segment_plan, segment_plan.t0)
    if len(start.atoms) != 1:
        raise NotDiracBased("plan does not start at a Dirac mass")

    out = []
    for g, m in segment_plan.atoms:
        out.append((_extend_geodesic(tree, g), m))
    return DynamicalPlan.from_atoms(tree, out)


def _extend_geodesic(tree: MetricTree, g: TreeGeodesic) -> TreeGeodesic:
    if g.is_constant:
        return tree.constant_geodesic(g.nodes[0][1], 0.0, math.inf)
    nodes = list(g.nodes)
    s_far, far = nodes[-1]
    last_edge = g._spans[-1]
    if not far.is_vertex():
        # finish crossing the current edge first
        e = tree.edge(last_edge)
        prev_off = g._offset_on(nodes[-2][1], last_edge)
        if far.offset > prev_off:
            if e.infinite:
                return TreeGeodesic(
                    tree, g.speed, g.t0, math.inf, g.t_origin,
                    tuple(nodes[:-1]), g.neg_end, tree.end(last_edge),
                )
            step = e.length - far.offset
            v = e.ends[1]
        else:
            step = far.offset
            v = e.ends[0]
        nodes.append((s_far + step, tree.vertex_point(v)))
        s_far += step
        far = tree.vertex_point(v)
    else:
        v = far.vertex
    onward = [eid for eid in tree.incident_edges(v) if eid != last_edge]
    if not onward:
        raise LeafyTree(f"extension stuck at leaf {v!r}")
    steps, end = tree.extension_walk(v, onward[0])
    s = s_far
    for eid, nxt in steps:
        s += tree.edge(eid).length
        nodes.append((s, tree.vertex_point(nxt)))
    # drop duplicate node when the segment already stopped at a vertex
    dedup = [nodes[0]]
    for sn, pn in nodes[1:]:
        if pn != dedup[-1][1]:
            dedup.append((sn, pn))
    return TreeGeodesic(
        tree, g.speed, g.t0, math.inf, g.t_origin, tuple(dedup), g.neg_end, end
    )


def dirac_interpolation(
    tree: MetricTree, x: TreePoint, mu: DiscreteMeasure, t: float
) -> DiscreteMeasure:
    """Time-t law of the unique interpolation from the Dirac at x to mu;
    at t = 1/2 every atom sits at the metric midpoint."""
    if t < -TOL or t > 1.0 + TOL:
        raise OutOfInterval(f"t={t} outside [0, 1]")
    x = tree.canonical_point(x)
    atoms = []
    for y, m in mu.atoms:
        if y == x:
            atoms.append((x, m))
        else:
            atoms.append((tree.geodesic_segment(x, y, 0.0, 1.0).evaluate(t), m))
    return DiscreteMeasure.from_atoms(tree, atoms)


@dataclass(frozen=True)
class SupportTestResult:
    supported: bool
    witness: tuple[TreePoint, TreePoint] | None
    lhs: float | None  # W(x^1/2 mu, x^1/2 delta_g) at the witness
    rhs: float | None  # W(mu, delta_g) / 2 at the witness

    def __bool__(self) -> bool:
        return self.supported


def supported_on_geodesic_test(
    tree: MetricTree, mu: DiscreteMeasure, gamma: TreeGeodesic
) -> SupportTestResult:
    """Decide whether mu is supported on a maximal geodesic through the
    midpoint characterization; when it is not, return base points (x, g) on
    the locus for which the halfway contraction is strictly better than the
    straight-line factor 1/2."""
    _require_maximal(tree, gamma)
    off = []
    for p, m in mu.atoms:
        proj = project_to_geodesic(tree, p, gamma)
        gap = tree.distance(p, proj)
        if gap > 1e-9:
            off.append((m, gap, p, proj))
    if not off:
        return SupportTestResult(True, None, None, None)
    off.sort(key=lambda r: -r[0])
    _, _, y, z = off[0]
    s_z = gamma.arc_of_point(z)
    lo, hi = gamma.arc_bounds()
    room = tree.distance(y, z) + 1.0
    d_minus = room if math.isinf(lo) else min(room, 0.5 * (s_z - lo))
    d_plus = room if math.isinf(hi) else min(room, 0.5 * (hi - s_z))
    x = gamma.point_at_arc(s_z - d_minus)
    g = gamma.point_at_arc(s_z + d_plus)
    mid = tree.geodesic_segment(x, g, 0.0, 1.0).evaluate(0.5)
    lhs = wasserstein2(
        tree, dirac_interpolation(tree, x, mu, 0.5), DiscreteMeasure.dirac(tree, mid)
    ).distance
    rhs = 0.5 * wasserstein2(tree, mu, DiscreteMeasure.dirac(tree, g)).distance
    return SupportTestResult(False, (x, g), lhs, rhs)


def _require_maximal(tree: MetricTree, gamma: TreeGeodesic) -> None:
    if gamma.is_constant:
        raise ValueError("constant geodesic is not maximal")
    for side_end, node in (
        (gamma.neg_end, gamma.nodes[0][1]),
        (gamma.pos_end, gamma.nodes[-1][1]),
    ):
        if side_end is not None:
            continue
        if not (node.is_vertex() and tree.valency(node.vertex) == 1):
            raise ValueError("geodesic is not maximal (endpoint is extendable)")


# -- complete plans ---------------------------------------------------------------


@dataclass(frozen=True)
class SpeedCertificate:
    passed: bool
    speeds: tuple[float, ...]
    witness: tuple[int, int] | None  # a pair of atoms with different speeds

    def __bool__(self) -> bool:
        return self.passed


def validate_complete_plan(plan: DynamicalPlan, tol: float = 1e-9) -> SpeedCertificate:
    """Necessary condition for a complete Wasserstein geodesic: every atom of
    a unit complete plan must itself have unit speed.  A mixed-speed witness
    pair violates cyclical monotonicity of the (e_t, e_{-t}) projection for
    large t."""
    if plan.kind != "complete":
        raise OutOfInterval("plan is not parametrized on the whole line")
    speeds = tuple(g.speed for g, _ in plan.atoms)
    passed = all(abs(s - 1.0) <= tol for s in speeds)
    witness = None
    if not passed and len(speeds) >= 2:
        i = min(range(len(speeds)), key=lambda k: speeds[k])
        j = max(range(len(speeds)), key=lambda k: speeds[k])
        if speeds[j] - speeds[i] > tol:
            witness = (i, j)
    return SpeedCertificate(passed, speeds, witness)
