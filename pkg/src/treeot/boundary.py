"""The boundary cone: angular metric at infinity and asymptotic measures.

A ray plan determines a measure on the cone over the boundary by recording
each support ray's end and speed (constant rays land on the cone apex).
Trees are visibility spaces, so the cone metric degenerates to two cases:
rays to the same end differ by |s - t|, rays to distinct ends by s + t.

The asymptotic distance between two ray curves in Wasserstein space is
W(mu_t, sigma_t) / t as t grows.  In a tree every pairwise distance between
support rays becomes an exactly affine function of t once all finite branch
structure has been exited, so instead of only sampling the ratio we certify
its exact limit: measure the affine slopes of the pairwise distances beyond
the branch-exit time and solve one more transport problem with those slopes
as the cost.  The asymptotic formula says this limit equals the cone
Wasserstein distance of the two asymptotic measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import MarginalMismatch, NonUnitMeasure, OutOfInterval
from .metric_tree import MetricTree, TreeEnd, TreePoint
from .dynamics import DynamicalPlan, pushforward_at
from .transport import solve_transport, wasserstein2

_ZERO = 1e-12

ConeAtomKey = tuple[TreeEnd | None, float]  # (end, speed); apex is (None, 0)


@dataclass(frozen=True)
class ConeMeasure:
    """Finitely supported measure on the cone over the boundary.

    Atoms are (end, speed, mass); speed-0 atoms collapse to the apex, whose
    end label is dropped (the choice does not matter there).
    """

    atoms: tuple[tuple[TreeEnd | None, float, float], ...]

    @staticmethod
    def from_atoms(tree: MetricTree, atoms) -> "ConeMeasure":
        merged: dict[ConeAtomKey, float] = {}
        order: list[ConeAtomKey] = []
        for end, speed, mass in atoms:
            speed = float(speed)
            if speed <= _ZERO:
                key: ConeAtomKey = (None, 0.0)
            else:
                if end is None:
                    raise MarginalMismatch("moving cone atom needs an end")
                tree.end(end.edge)  # validates
                key = (end, speed)
            if key not in merged:
                merged[key] = 0.0
                order.append(key)
            merged[key] += float(mass)
        kept = [(e, s, merged[(e, s)]) for e, s in order if merged[(e, s)] > _ZERO]
        total = sum(m for _, _, m in kept)
        if abs(total - 1.0) > 1e-9:
            raise MarginalMismatch(f"cone masses sum to {total}, expected 1")
        return ConeMeasure(tuple(kept))

    def quadratic_mean(self) -> float:
        return sum(m * s * s for _, s, m in self.atoms)

    def is_unit(self, tol: float = 1e-9) -> bool:
        return abs(self.quadratic_mean() - 1.0) <= tol

    def keys(self) -> list[ConeAtomKey]:
        return [(e, s) for e, s, _ in self.atoms]

    def masses(self) -> list[float]:
        return [m for _, _, m in self.atoms]


def d_infinity(tree: MetricTree, a: ConeAtomKey, b: ConeAtomKey) -> float:
    """Cone metric: |s - t| at angle zero (same end, or through the apex),
    s + t at angle pi (distinct ends; trees are visibility spaces)."""
    (xi, s), (zeta, t) = a, b
    s, t = float(s), float(t)
    if s <= _ZERO or t <= _ZERO:
        return abs(s - t)
    return abs(s - t) if xi == zeta else s + t


class WInfinityResult(NamedTuple):
    distance: float
    entries: tuple[tuple[ConeAtomKey, ConeAtomKey, float], ...]


def w_infinity(tree: MetricTree, nu1: ConeMeasure, nu2: ConeMeasure) -> WInfinityResult:
    """Exact transport between cone measures for the squared cone metric."""
    ka, kb = nu1.keys(), nu2.keys()
    value, entries, _ = solve_transport(
        ka, nu1.masses(), kb, nu2.masses(),
        lambda p, q: d_infinity(tree, p, q) ** 2,
    )
    return WInfinityResult(
        math.sqrt(max(0.0, value)),
        tuple((ka[i], kb[j], q) for i, j, q in entries),
    )


def total_variation(nu1: ConeMeasure, nu2: ConeMeasure) -> float:
    """Total variation distance (half the mass of |nu1 - nu2|)."""
    keys = {k: 0.0 for k in nu1.keys()}
    for k, m in zip(nu1.keys(), nu1.masses()):
        keys[k] = keys.get(k, 0.0) + m
    for k, m in zip(nu2.keys(), nu2.masses()):
        keys[k] = keys.get(k, 0.0) - m
    return 0.5 * sum(abs(v) for v in keys.values())


def asymptotic_measure(plan: DynamicalPlan, direction: int = +1) -> ConeMeasure:
    """Pushforward of a ray plan under (end class, speed); pass direction
    -1 to read the t -> -inf end of a complete plan."""
    if direction not in (+1, -1):
        raise ValueError("direction must be +1 or -1")
    if plan.kind == "segment":
        raise OutOfInterval("segment plans have no asymptotic measure")
    if plan.kind == "ray" and direction == -1:
        raise OutOfInterval("ray plans are only asymptotic for t -> +inf")
    tree = plan.atoms[0][0].tree
    atoms = []
    for g, m in plan.atoms:
        end = g.pos_end if direction == +1 else g.neg_end
        if g.is_constant or g.speed <= _ZERO:
            atoms.append((None, 0.0, m))
        else:
            atoms.append((end, g.speed, m))
    return ConeMeasure.from_atoms(tree, atoms)


def ray_from_asymptotic_measure(
    tree: MetricTree, x: TreePoint, nu: ConeMeasure, unit: bool = False
) -> DynamicalPlan:
    """The ray plan from the Dirac at x realizing a given asymptotic measure:
    one ray per cone atom, toward its end at its speed."""
    if unit and not nu.is_unit():
        raise NonUnitMeasure(
            f"quadratic speed mean is {nu.quadratic_mean()}, expected 1"
        )
    x = tree.canonical_point(x)
    atoms = []
    for end, speed, mass in nu.atoms:
        if end is None or speed <= _ZERO:
            atoms.append((tree.constant_geodesic(x, 0.0, math.inf), mass))
        else:
            atoms.append((tree.ray_to_end(x, end, speed), mass))
    return DynamicalPlan.from_atoms(tree, atoms)


# -- asymptotic formula ------------------------------------------------------------

DEFAULT_T_GRID = (1.0, 10.0, 100.0, 1e3, 1e4, 1e6)


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple[tuple[float, float], ...]  # (t, W(mu_t, sigma_t) / t)
    target: float                          # W_infinity of the asymptotic measures
    branch_exit: float                     # all pairwise distances affine beyond
    certified_limit: float                 # exact limit of the ratio
    monotone: bool                         # ratio nondecreasing along the grid
    classification: str                    # "asymptotic" (bounded) or "linear"
    max_error_at_largest_t: float

    def csv(self) -> str:
        lines = ["t,ratio,target,abs_error"]
        for t, r in self.rows:
            lines.append(f"{t:.12g},{r:.12f},{self.target:.12f},{abs(r - self.target):.12f}")
        lines.append(
            f"inf,{self.certified_limit:.12f},{self.target:.12f},"
            f"{abs(self.certified_limit - self.target):.12f}"
        )
        return "\n".join(lines) + "\n"


def asymptotic_formula_check(
    tree: MetricTree,
    mu: DynamicalPlan,
    sigma: DynamicalPlan,
    t_grid: Sequence[float] | None = None,
) -> ConvergenceReport:
    """Compare W(mu_t, sigma_t) / t against the cone Wasserstein distance of
    the asymptotic measures.

    Beyond the certified branch-exit time every pairwise distance between
    support rays grows exactly affinely, so the limit of the ratio is the
    value of one transport problem whose costs are the squared affine
    slopes; that certified limit is reported next to the sampled ratios.
    """
    if mu.kind != "ray" or sigma.kind != "ray":
        raise OutOfInterval("asymptotic comparison needs two ray plans")
    target = w_infinity(
        tree, asymptotic_measure(mu), asymptotic_measure(sigma)
    ).distance
    grid = tuple(sorted(t_grid if t_grid is not None else DEFAULT_T_GRID))
    rows = []
    for t in grid:
        d = wasserstein2(
            tree, pushforward_at(mu, t), pushforward_at(sigma, t)
        ).distance
        rows.append((t, d / t))

    t_exit = _certified_branch_exit(tree, mu, sigma)
    slopes = [
        [
            tree.distance(g.evaluate(t_exit + 1.0), h.evaluate(t_exit + 1.0))
            - tree.distance(g.evaluate(t_exit), h.evaluate(t_exit))
            for h, _ in sigma.atoms
        ]
        for g, _ in mu.atoms
    ]
    value, _, _ = solve_transport(
        range(len(mu.atoms)), [m for _, m in mu.atoms],
        range(len(sigma.atoms)), [m for _, m in sigma.atoms],
        lambda i, j: slopes[i][j] ** 2,
    )
    certified = math.sqrt(max(0.0, value))

    w_a = wasserstein2(
        tree, pushforward_at(mu, t_exit + 1.0), pushforward_at(sigma, t_exit + 1.0)
    ).distance
    w_b = wasserstein2(
        tree, pushforward_at(mu, t_exit + 2.0), pushforward_at(sigma, t_exit + 2.0)
    ).distance
    classification = "asymptotic" if abs(w_b - w_a) <= 1e-9 * (1.0 + w_a) else "linear"

    monotone = all(rows[k + 1][1] >= rows[k][1] - 1e-12 for k in range(len(rows) - 1))
    return ConvergenceReport(
        rows=tuple(rows),
        target=target,
        branch_exit=t_exit,
        certified_limit=certified,
        monotone=monotone,
        classification=classification,
        max_error_at_largest_t=abs(rows[-1][1] - target) if rows else math.nan,
    )


def _certified_branch_exit(tree, mu: DynamicalPlan, sigma: DynamicalPlan) -> float:
    """Smallest verified time beyond which every pairwise distance between
    support geodesics of the two plans is affine in t."""
    t = 1.0
    for plan in (mu, sigma):
        for g, _ in plan.atoms:
            if g.speed > _ZERO:
                t = max(t, (g.nodes[-1][0] - g.nodes[0][0]) / g.speed)
    for _ in range(80):
        if _affine_beyond(tree, mu, sigma, t):
            return t
        t = 2.0 * t + 1.0
    raise RuntimeError("could not certify a branch-exit time")


def _affine_beyond(tree, mu, sigma, t: float) -> bool:
    for g, _ in mu.atoms:
        for h, _ in sigma.atoms:
            d0 = tree.distance(g.evaluate(t), h.evaluate(t))
            d1 = tree.distance(g.evaluate(t + 1.0), h.evaluate(t + 1.0))
            d2 = tree.distance(g.evaluate(t + 2.0), h.evaluate(t + 2.0))
            if abs(d0 + d2 - 2.0 * d1) > 1e-9 * (1.0 + abs(d1)):
                return False
    return True
