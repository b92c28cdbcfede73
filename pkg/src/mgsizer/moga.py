"""Multi-objective genetic sizing search.

Chromosomes are fixed-width bitstrings over the four device counts. The
self-adaptive variant reshapes its crossover and mutation probabilities
from a stall counter; three reference algorithms (NSGA-II, NSGA-II with
hierarchical selection, and a linear-schedule adaptive GA) share the
same variation operators so comparisons isolate the search strategy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .dispatch import SizingBounds, SizingConfig
from .objectives import ObjectiveVector

_IMPROVE_RTOL = 1e-12
_FEAS_TOL = 1e-12

VARIANTS = ("samoga", "nsga2", "nsga_hs", "aga")


@dataclass(frozen=True)
class GaSettings:
    pop_size: int = 30
    max_iter: int = 50
    p_c0: float = 0.65
    p_m0: float = 0.01
    alpha: float = 10.0
    beta: float = 10.0
    n_groups: int = 5
    seed: int | None = None
    group_stat: str = "mean"  # how a group's roulette weight is pooled

    def __post_init__(self):
        if self.pop_size < 2 or self.pop_size % 2 != 0:
            raise ValueError("pop_size must be even and at least 2")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0.0 < self.p_c0 < 1.0:
            raise ValueError("p_c0 must lie in (0, 1)")
        if not 0.0 < self.p_m0 < 1.0:
            raise ValueError("p_m0 must lie in (0, 1)")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be positive")
        if self.n_groups < 1 or self.pop_size % self.n_groups != 0:
            raise ValueError("n_groups must divide pop_size")
        if self.group_stat not in ("mean", "sum", "max"):
            raise ValueError("group_stat must be mean, sum, or max")


@dataclass(frozen=True)
class HistoryRecord:
    iteration: int
    best_fitness: float
    p_c: float
    p_m: float


@dataclass(frozen=True)
class FrontierPoint:
    config: SizingConfig
    objectives: ObjectiveVector


@dataclass(frozen=True)
class ParetoFrontier:
    """Mutually non-dominated points, sorted by cost ascending."""

    points: tuple

    def __post_init__(self):
        pts = tuple(sorted(
            self.points,
            key=lambda p: (p.objectives.cost, p.objectives.pec,
                           p.config.as_tuple())))
        object.__setattr__(self, "points", pts)
        for i, a in enumerate(pts):
            for j, b in enumerate(pts):
                if i != j and _dominates_pair(a.objectives, b.objectives):
                    raise ValueError(
                        f"frontier member {i} dominates member {j}")

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def objective_array(self) -> np.ndarray:
        return np.array([[p.objectives.cost, p.objectives.pec]
                         for p in self.points])


@dataclass(frozen=True)
class GaResult:
    frontier: ParetoFrontier
    history: tuple
    population: tuple  # final generation as FrontierPoints


class Individual:
    __slots__ = ("bits", "config", "objectives", "violation", "rank",
                 "crowding", "fitness")

    def __init__(self, bits: np.ndarray, config: SizingConfig,
                 objectives: ObjectiveVector, violation: float):
        self.bits = bits
        self.config = config
        self.objectives = objectives
        self.violation = violation
        self.rank = 0
        self.crowding = 0.0
        self.fitness = 0.0


# ---------------------------------------------------------------- encoding

def field_widths(bounds: SizingBounds) -> tuple:
    return tuple(v.bit_length() for v in bounds.as_tuple())


def chromosome_length(bounds: SizingBounds) -> int:
    return sum(field_widths(bounds))


def encode(config: SizingConfig, bounds: SizingBounds) -> np.ndarray:
    """Big-endian bit fields in order n_wt | n_pv | n_dg | n_es."""
    if not config.within(bounds):
        raise ValueError("config exceeds encoding bounds")
    bits = []
    for value, width in zip(config.as_tuple(), field_widths(bounds)):
        for shift in range(width - 1, -1, -1):
            bits.append((value >> shift) & 1)
    return np.array(bits, dtype=np.uint8)


def decode(bits: np.ndarray, bounds: SizingBounds) -> SizingConfig:
    widths = field_widths(bounds)
    if len(bits) != sum(widths):
        raise ValueError(f"expected {sum(widths)} bits, got {len(bits)}")
    values = []
    pos = 0
    for width in widths:
        v = 0
        for b in bits[pos:pos + width]:
            v = (v << 1) | int(b)
        values.append(v)
        pos += width
    return SizingConfig(*values)


# ----------------------------------------------------------------- sorting

def _dominates_pair(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    """Plain two-objective dominance, no constraint handling."""
    return (a.cost <= b.cost and a.pec <= b.pec
            and (a.cost < b.cost or a.pec < b.pec))


def dominance_matrix(points: np.ndarray,
                     violations: np.ndarray | None = None) -> np.ndarray:
    """D[i, j] True when i dominates j under constraint-domination:
    feasible beats infeasible, lesser violation beats greater, and
    feasible pairs compare by Pareto dominance."""
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if violations is None:
        violations = np.zeros(n)
    v = np.asarray(violations, dtype=float)
    feas = v <= _FEAS_TOL

    le = np.all(pts[:, None, :] <= pts[None, :, :], axis=2)
    lt = np.any(pts[:, None, :] < pts[None, :, :], axis=2)
    pareto = le & lt

    both_feas = feas[:, None] & feas[None, :]
    feas_vs_infeas = feas[:, None] & ~feas[None, :]
    both_infeas = ~feas[:, None] & ~feas[None, :]
    less_violating = v[:, None] < v[None, :]

    return (both_feas & pareto) | feas_vs_infeas | (both_infeas
                                                    & less_violating)


def nondominated_sort(points: np.ndarray,
                      violations: np.ndarray | None = None):
    """Peel fronts from the dominance matrix.

    Returns (ranks, fronts): ranks is 1-based per point; fronts is a list
    of index arrays, fronts[0] being the non-dominated set.
    """
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if n == 0:
        return np.zeros(0, dtype=int), []
    dom = dominance_matrix(pts, violations)
    n_dominators = dom.sum(axis=0).astype(int)
    ranks = np.zeros(n, dtype=int)
    fronts = []
    remaining = np.ones(n, dtype=bool)
    rank = 1
    while remaining.any():
        front = np.flatnonzero(remaining & (n_dominators == 0))
        if front.size == 0:
            raise RuntimeError("dominance relation admitted a cycle")
        ranks[front] = rank
        fronts.append(front)
        remaining[front] = False
        n_dominators -= dom[front].sum(axis=0).astype(int)
        rank += 1
    return ranks, fronts


def crowding_distance(points: np.ndarray, front: np.ndarray) -> np.ndarray:
    """Crowding of each front member; boundaries get infinity."""
    pts = np.asarray(points, dtype=float)[front]
    m = pts.shape[0]
    dist = np.zeros(m)
    if m <= 2:
        return np.full(m, np.inf)
    for k in range(pts.shape[1]):
        order = np.argsort(pts[:, k], kind="stable")
        lo, hi = pts[order[0], k], pts[order[-1], k]
        dist[order[0]] = dist[order[-1]] = np.inf
        if hi - lo <= 0:
            continue
        gaps = (pts[order[2:], k] - pts[order[:-2], k]) / (hi - lo)
        dist[order[1:-1]] += gaps
    return dist


def scalar_fitness(rank: int, crowding: float, violation: float = 0.0,
                   penalty_weight: float = 10.0) -> float:
    """Roulette weight: reciprocal rank with a crowding tiebreak.

    The tiebreak lives in (0, 0.5], so any rank-1 weight strictly exceeds
    any rank-2 weight. Constraint violation discounts multiplicatively.
    """
    if rank < 1:
        raise ValueError("rank must be at least 1")
    fit = 1.0 / (rank + 1.0 / (2.0 + crowding))
    if violation > 0.0:
        fit /= 1.0 + penalty_weight * violation
    return fit


# --------------------------------------------------------------- selection

def _roulette(weights: np.ndarray, rng: np.random.Generator) -> int:
    total = float(weights.sum())
    if total <= 0.0:
        return int(rng.integers(0, len(weights)))
    cum = np.cumsum(weights)
    return int(np.searchsorted(cum, rng.random() * total, side="right"))


def hierarchical_select(fitnesses: np.ndarray, n_groups: int,
                        rng: np.random.Generator,
                        group_stat: str = "mean") -> tuple:
    """Two parent indices via grouped roulette.

    Members are ordered by fitness descending and split into n_groups
    contiguous equal groups; a group is drawn by roulette over its pooled
    fitness, then a member uniformly within it. Draws are independent.
    """
    fit = np.asarray(fitnesses, dtype=float)
    n = fit.shape[0]
    if n % n_groups != 0:
        raise ValueError("population size must be divisible by n_groups")
    order = np.argsort(-fit, kind="stable")
    groups = order.reshape(n_groups, n // n_groups)
    pool = {"mean": np.mean, "sum": np.sum, "max": np.max}[group_stat]
    weights = np.array([pool(fit[g]) for g in groups])

    def draw() -> int:
        gi = _roulette(weights, rng)
        member = int(rng.integers(0, groups.shape[1]))
        return int(groups[gi, member])

    return draw(), draw()


def binary_tournament(ranks: np.ndarray, crowdings: np.ndarray,
                      rng: np.random.Generator) -> tuple:
    """Two parent indices, each from an independent size-2 tournament
    decided by rank then crowding."""

    def one() -> int:
        i, j = rng.integers(0, len(ranks), size=2)
        if ranks[i] != ranks[j]:
            return int(i if ranks[i] < ranks[j] else j)
        return int(i if crowdings[i] >= crowdings[j] else j)

    return one(), one()


# --------------------------------------------------------------- variation

def adaptive_probabilities(g: int, g_c: int, settings: GaSettings) -> tuple:
    """Stall-accelerated schedule: crossover decays and mutation grows
    with log10(g + g_c)."""
    x = g + g_c
    if g < 1 or g_c < 0 or x < 1:
        raise ValueError("need iteration >= 1 and stall count >= 0")
    s = math.log10(x)
    p_c = settings.p_c0 / (1.0 + settings.alpha * s / settings.max_iter)
    p_m = settings.p_m0 * (1.0 + settings.beta * s / settings.max_iter)
    return min(p_c, 1.0), min(p_m, 1.0)


def linear_probabilities(g: int, settings: GaSettings) -> tuple:
    """Reference schedule: linear from the initial pair at g=1 to the
    pair the adaptive schedule reaches at lg = 1 (a decade of stall)."""
    if settings.max_iter == 1:
        f = 0.0
    else:
        f = (g - 1) / (settings.max_iter - 1)
    p_c = settings.p_c0 * (1.0 - f) + (settings.p_c0 / 1.2) * f
    p_m = settings.p_m0 * (1.0 - f) + (1.2 * settings.p_m0) * f
    return p_c, p_m


def crossover(parent_a: np.ndarray, parent_b: np.ndarray, p_c: float,
              rng: np.random.Generator) -> tuple:
    """Single-point tail swap with probability p_c; copies otherwise."""
    a = parent_a.copy()
    b = parent_b.copy()
    if rng.random() < p_c:
        cut = int(rng.integers(1, len(a)))
        a[cut:], b[cut:] = parent_b[cut:].copy(), parent_a[cut:].copy()
    return a, b


def mutation(bits: np.ndarray, p_m: float,
             rng: np.random.Generator) -> np.ndarray:
    flips = rng.random(len(bits)) < p_m
    return np.bitwise_xor(bits, flips.astype(np.uint8))


# ------------------------------------------------------------------ engine

def _make_individual(bits, bounds, evaluator, lpsp_max) -> Individual:
    config = decode(bits, bounds)
    obj = evaluator(config)
    violation = max(0.0, obj.lpsp - lpsp_max)
    return Individual(bits, config, obj, violation)


def _rank_population(pop) -> list:
    pts = np.array([[ind.objectives.cost, ind.objectives.pec]
                    for ind in pop])
    violations = np.array([ind.violation for ind in pop])
    ranks, fronts = nondominated_sort(pts, violations)
    for ind, r in zip(pop, ranks):
        ind.rank = int(r)
    for front in fronts:
        dist = crowding_distance(pts, front)
        for idx, d in zip(front, dist):
            pop[idx].crowding = float(d)
    for ind in pop:
        ind.fitness = scalar_fitness(ind.rank, ind.crowding, ind.violation)
    return fronts


def _stall_scalar(pop, cost_scale: float, pec_scale: float) -> float:
    """Best normalized ideal-point sum over the population, feasible
    members preferred. Used for stall detection and the history column;
    the raw roulette fitness saturates at 1.0 for every boundary point
    of the first front, so it cannot express progress."""
    cands = [ind for ind in pop if ind.violation <= _FEAS_TOL] or list(pop)
    return min(0.5 * (ind.objectives.cost / cost_scale
                      + ind.objectives.pec / pec_scale)
               for ind in cands)


def _frontier_from(pop) -> ParetoFrontier:
    fronts = _rank_population(pop)
    first = [pop[i] for i in fronts[0]]
    seen = set()
    unique = []
    for ind in first:
        key = ind.config.as_tuple()
        if key not in seen:
            seen.add(key)
            unique.append(ind)
    # constraint-domination can leave equally-violating members that
    # still dominate each other on raw objectives; strip those
    keep = [a for a in unique
            if not any(_dominates_pair(b.objectives, a.objectives)
                       for b in unique)]
    return ParetoFrontier(points=tuple(
        FrontierPoint(ind.config, ind.objectives) for ind in keep))


def _run(variant: str, settings: GaSettings, evaluator,
         bounds: SizingBounds, lpsp_max: float) -> GaResult:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    n = settings.pop_size
    nbits = chromosome_length(bounds)
    streams = np.random.SeedSequence(settings.seed).spawn(4)
    init_rng, sel_rng, cx_rng, mu_rng = map(np.random.default_rng, streams)

    pop = [_make_individual(init_rng.integers(0, 2, nbits, dtype=np.uint8),
                            bounds, evaluator, lpsp_max)
           for _ in range(n)]

    cost_scale = max(max(abs(i.objectives.cost) for i in pop), 1.0)
    pec_scale = max(max(abs(i.objectives.pec) for i in pop), 1.0)

    best = math.inf
    g_c = 0
    history = []
    hierarchical = variant in ("samoga", "nsga_hs")

    for g in range(1, settings.max_iter + 1):
        parent_fronts = _rank_population(pop)
        s_best = _stall_scalar(pop, cost_scale, pec_scale)
        if g == 1 or s_best < best * (1.0 - _IMPROVE_RTOL):
            best = min(best, s_best)
            g_c = 0
        else:
            g_c += 1

        if variant == "samoga":
            p_c, p_m = adaptive_probabilities(g, g_c, settings)
        elif variant == "aga":
            p_c, p_m = linear_probabilities(g, settings)
        else:
            p_c, p_m = settings.p_c0, settings.p_m0
        history.append(HistoryRecord(g, s_best, p_c, p_m))

        fits = np.array([ind.fitness for ind in pop])
        ranks = np.array([ind.rank for ind in pop])
        crowds = np.array([ind.crowding for ind in pop])
        child_bits = []
        while len(child_bits) < n:
            if hierarchical:
                i, j = hierarchical_select(fits, settings.n_groups, sel_rng,
                                           settings.group_stat)
            else:
                i, j = binary_tournament(ranks, crowds, sel_rng)
            a, b = crossover(pop[i].bits, pop[j].bits, p_c, cx_rng)
            child_bits.append(mutation(a, p_m, mu_rng))
            if len(child_bits) < n:
                child_bits.append(mutation(b, p_m, mu_rng))
        children = [_make_individual(bits, bounds, evaluator, lpsp_max)
                    for bits in child_bits]

        # generational replacement with a small elite carried over. Every
        # variant shares this engine so the four runs differ only in the
        # selection rule and the probability schedule; anything else would
        # confound those comparisons with replacement policy. Elites are
        # distinct configs so duplicates of one strong point cannot crowd
        # the others out.
        elites = []
        taken = set()
        for ind in sorted((pop[i] for i in parent_fronts[0]),
                          key=lambda ind: -ind.fitness):
            key = ind.config.as_tuple()
            if key not in taken:
                taken.add(key)
                elites.append(ind)
            if len(elites) == n // 5:
                break
        if elites:
            _rank_population(children)
            order = sorted(range(n), key=lambda k: children[k].fitness)
            for slot, elite in zip(order, elites):
                children[slot] = elite
        pop = children

    frontier = _frontier_from(pop)
    population = tuple(FrontierPoint(ind.config, ind.objectives)
                       for ind in pop)
    return GaResult(frontier=frontier, history=tuple(history),
                    population=population)


def run_samoga(settings: GaSettings, evaluator, bounds: SizingBounds,
               lpsp_max: float = 0.40) -> GaResult:
    """Self-adaptive search: stall-driven probability schedule plus
    hierarchical grouped selection."""
    return _run("samoga", settings, evaluator, bounds, lpsp_max)


def run_baseline(variant: str, settings: GaSettings, evaluator,
                 bounds: SizingBounds, lpsp_max: float = 0.40) -> GaResult:
    """Reference algorithms: nsga2, nsga_hs, or aga."""
    if variant == "samoga":
        raise ValueError("use run_samoga for the adaptive variant")
    return _run(variant, settings, evaluator, bounds, lpsp_max)


# ------------------------------------------------------------------ export

def write_frontier_csv(frontier: ParetoFrontier, path) -> None:
    """Table layout: one row per solution, cheapest first."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["solution", "cost", "pec", "wt", "dg", "bess",
                         "pv"])
        for k, point in enumerate(frontier.points, start=1):
            cfg = point.config
            writer.writerow([k, repr(float(point.objectives.cost)),
                             repr(float(point.objectives.pec)),
                             cfg.n_wt, cfg.n_dg, cfg.n_es, cfg.n_pv])


def write_history_csv(history, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "best_fitness", "P_c", "P_m"])
        for rec in history:
            writer.writerow([rec.iteration, repr(float(rec.best_fitness)),
                             repr(float(rec.p_c)), repr(float(rec.p_m))])
