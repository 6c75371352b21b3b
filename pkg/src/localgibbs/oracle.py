"""Brute-force ground truth on small instances.

Everything here trades exponential cost for exactness: the full Gibbs
distribution by enumerating all q^n configurations, exact one-round
transition matrices for each chain by integrating out their randomness,
detailed-balance and stationarity residuals, and exact conditional
marginals (with an independent transfer-matrix recursion on paths as a
cross-check). The simulator is validated against these outputs; nothing
here is used on large instances.

Configurations are ranked little-endian mixed radix: rank(sigma) =
sum_v sigma_v * q**v, so vertex 0 is the fastest-moving digit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .chains import ChainSpec, SchedulerSpec
from .mrf import MrfInstance, ZeroMarginal, marginal, weight_batch

ENUM_CAP = 1 << 22
MATRIX_CAP = 1 << 12
LUBY_PERMUTATION_CAP = 8


class StateSpaceTooLarge(ValueError):
    pass


class ZeroPartitionFunction(ValueError):
    """No configuration has positive weight; the model is empty."""


class ZeroProbabilityCondition(ValueError):
    """Conditioning event has zero probability mass."""


class UnsupportedScheduler(ValueError):
    """The requested scheduler has no single round-independent transition matrix."""


@dataclass(frozen=True)
class Distribution:
    """Explicit probability vector over a finite outcome space."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1:
            raise ValueError("probability vector must be one-dimensional")
        if p.size and p.min() < 0:
            raise ValueError("negative probability entry")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.probs))

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix indexed by configuration rank."""

    rows: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.rows, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ValueError("transition matrix must be square")
        if P.size and P.min() < 0:
            raise ValueError("negative transition probability")
        if np.abs(P.sum(axis=1) - 1.0).max(initial=0.0) > 1e-9:
            raise ValueError("rows must sum to 1")
        P = P.copy()
        P.setflags(write=False)
        object.__setattr__(self, "rows", P)

    @property
    def dim(self) -> int:
        return self.rows.shape[0]


def rank_of_config(sigma, q: int) -> int:
    sigma = np.asarray(sigma, dtype=np.int64)
    return int((sigma * q ** np.arange(len(sigma), dtype=np.int64)).sum())


def config_of_rank(rank: int, n: int, q: int) -> np.ndarray:
    return (rank // q ** np.arange(n, dtype=np.int64)) % q


def all_configs(n: int, q: int) -> np.ndarray:
    """All q**n configurations in rank order, shape (q**n, n), row r = config of rank r."""
    ranks = np.arange(q ** n, dtype=np.int64)
    return (ranks[:, None] // q ** np.arange(n, dtype=np.int64)[None, :]) % q


def _check_cap(n: int, q: int, cap: int) -> int:
    states = q ** n
    if states > cap:
        raise StateSpaceTooLarge(f"{q}**{n} = {states} configurations exceeds cap {cap}")
    return states


def enumerate_gibbs(inst: MrfInstance, cap: int = ENUM_CAP) -> tuple[Distribution, float]:
    """Full Gibbs distribution and normalizing constant by exhaustive enumeration.

    Raises:
        StateSpaceTooLarge: q**n exceeds cap.
        ZeroPartitionFunction: every configuration has zero weight.
    """
    _check_cap(inst.n, inst.q, cap)
    w = weight_batch(inst, all_configs(inst.n, inst.q))
    Z = float(w.sum())
    if Z <= 0:
        raise ZeroPartitionFunction("no feasible configuration")
    return Distribution(w / Z), Z


def tv_distance(p, r) -> float:
    """Total variation distance, half the L1 difference."""
    pv = p.probs if isinstance(p, Distribution) else np.asarray(p, dtype=np.float64)
    rv = r.probs if isinstance(r, Distribution) else np.asarray(r, dtype=np.float64)
    if pv.shape != rv.shape:
        raise ValueError(f"dimension mismatch: {pv.shape} vs {rv.shape}")
    return 0.5 * float(np.abs(pv - rv).sum())


def luby_set_distribution(graph) -> dict[frozenset, float]:
    """Exact selection-set law of the local-maximum rule.

    With i.i.d. continuous scores, every relative ordering of the n scores is
    equally likely and determines the selected set (ties have probability
    zero), so the law is the average over all n! orderings. Capped at n = 8.
    """
    n = graph.n
    if n > LUBY_PERMUTATION_CAP:
        raise StateSpaceTooLarge(f"permutation enumeration capped at n = {LUBY_PERMUTATION_CAP}")
    counts: dict[frozenset, int] = {}
    for perm in itertools.permutations(range(n)):
        pos = [0] * n
        for p, v in enumerate(perm):
            pos[v] = p  # perm lists vertices by descending score
        sel = frozenset(v for v in range(n)
                        if all(pos[v] < pos[u] for u in graph.adjacency[v]))
        counts[sel] = counts.get(sel, 0) + 1
    total = math.factorial(n)
    return {s: c / total for s, c in counts.items()}


def _scheduler_set_distribution(graph, scheduler: SchedulerSpec) -> dict[frozenset, float]:
    if scheduler.variant == "luby":
        return luby_set_distribution(graph)
    if scheduler.variant == "single-site":
        return {frozenset([v]): 1.0 / graph.n for v in range(graph.n)}
    raise UnsupportedScheduler(
        f"{scheduler.variant!r} scheduler is round-dependent; no single transition matrix exists")


def _glauber_matrix(inst: MrfInstance, scheduler: SchedulerSpec) -> np.ndarray:
    n, q = inst.n, inst.q
    K = q ** n
    pows = q ** np.arange(n, dtype=np.int64)
    sets = _scheduler_set_distribution(inst.graph, scheduler)
    P = np.zeros((K, K))
    for x_rank in range(K):
        x = config_of_rank(x_rank, n, q)
        for sel, pr_sel in sets.items():
            vs = sorted(sel)
            if not vs:
                P[x_rank, x_rank] += pr_sel
                continue
            # selected vertices resample independently from their conditionals
            margs = [marginal(inst, v, x) for v in vs]
            vals = all_configs(len(vs), q)
            pr = np.ones(len(vals))
            for k, v in enumerate(vs):
                pr *= margs[k][vals[:, k]]
            y_ranks = x_rank + ((vals - x[vs]) * pows[vs]).sum(axis=1)
            np.add.at(P[x_rank], y_ranks, pr_sel * pr)
    return P


def _metropolis_matrix(inst: MrfInstance) -> np.ndarray:
    n, q, g = inst.n, inst.q, inst.graph
    m = g.m
    K = q ** n
    pows = q ** np.arange(n, dtype=np.int64)
    props = all_configs(n, q)
    prop_prob = np.prod(inst.b_prop[np.arange(n), props], axis=1)
    P = np.zeros((K, K))
    for x_rank in range(K):
        x = config_of_rank(x_rank, n, q)
        if m == 0:
            np.add.at(P[x_rank], props @ pows, prop_prob)
            continue
        # per-edge pass probability for every proposal vector at once
        e_idx = np.arange(m)
        pe = (inst.A_norm[e_idx, props[:, g.eu], props[:, g.ev]]
              * inst.A_norm[e_idx, x[g.eu][None, :], props[:, g.ev]]
              * inst.A_norm[e_idx, props[:, g.eu], x[g.ev][None, :]])
        for coin_bits in range(1 << m):
            bits = (coin_bits >> np.arange(m)) & 1
            pr_coins = np.prod(np.where(bits, pe, 1.0 - pe), axis=1)
            accepted = np.ones(n, dtype=bool)
            for e in range(m):
                if not bits[e]:
                    accepted[g.eu[e]] = accepted[g.ev[e]] = False
            y = np.where(accepted[None, :], props, x[None, :])
            np.add.at(P[x_rank], y @ pows, prop_prob * pr_coins)
    return P


def exact_transition_matrix(chain: ChainSpec, inst: MrfInstance,
                            cap: int = MATRIX_CAP) -> TransitionMatrix:
    """One-round transition matrix with all chain randomness integrated out.

    The parallel-Metropolis matrix sums over every proposal vector and every
    edge-coin pattern; the independent-set resampling matrix sums over the
    exact scheduler set law times products of conditional marginals.

    Raises:
        StateSpaceTooLarge, UnsupportedScheduler, ZeroMarginal (the chain is
        ill-defined at some state of the enumeration).
    """
    _check_cap(inst.n, inst.q, cap)
    if chain.kind == "local_metropolis":
        return TransitionMatrix(_metropolis_matrix(inst))
    if chain.kind == "luby_glauber":
        return TransitionMatrix(_glauber_matrix(inst, chain.scheduler))
    if chain.kind == "sequential_glauber":
        return TransitionMatrix(_glauber_matrix(inst, SchedulerSpec("single-site")))
    raise ValueError(f"unknown chain kind {chain.kind!r}")


@dataclass(frozen=True)
class BalanceReport:
    max_residual: float
    argmax_pair: tuple[int, int]
    stationarity_gap: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.max_residual <= self.tol and self.stationarity_gap <= self.tol


def check_detailed_balance(P: TransitionMatrix, mu: Distribution,
                           tol: float = 1e-10) -> BalanceReport:
    """Largest flow asymmetry mu(X)P(X,Y) - mu(Y)P(Y,X) and stationarity gap."""
    F = mu.probs[:, None] * P.rows
    R = np.abs(F - F.T)
    pair = np.unravel_index(np.argmax(R), R.shape)
    gap = float(np.abs(mu.probs @ P.rows - mu.probs).max())
    return BalanceReport(float(R[pair]), (int(pair[0]), int(pair[1])), gap, tol)


def exact_conditional_marginal(inst: MrfInstance, v: int, pinned: dict[int, int],
                               cap: int = ENUM_CAP) -> Distribution:
    """Exact single-vertex marginal given pinned spins, by full enumeration.

    Raises:
        ZeroProbabilityCondition: the pinning has zero total weight.
    """
    _check_cap(inst.n, inst.q, cap)
    configs = all_configs(inst.n, inst.q)
    w = weight_batch(inst, configs)
    mask = np.ones(len(w), dtype=bool)
    for p, s in pinned.items():
        mask &= configs[:, p] == s
    out = np.zeros(inst.q)
    for c in range(inst.q):
        out[c] = w[mask & (configs[:, v] == c)].sum()
    total = out.sum()
    if total <= 0:
        raise ZeroProbabilityCondition(f"pinning {pinned} carries no weight")
    return Distribution(out / total)


def _path_order(graph) -> list[int]:
    """Vertex order along a path graph; raises if the graph is not a path."""
    if graph.n == 1:
        return [0]
    nbr_sets = [sorted(set(a)) for a in graph.adjacency]
    ends = [v for v, s in enumerate(nbr_sets) if len(s) == 1]
    if len(ends) != 2 or any(len(s) > 2 for s in nbr_sets):
        raise ValueError("graph is not a path")
    order = [min(ends)]
    prev = -1
    while len(order) < graph.n:
        nxt = [u for u in nbr_sets[order[-1]] if u != prev]
        if len(nxt) != 1:
            raise ValueError("graph is not a path")
        prev = order[-1]
        order.append(nxt[0])
    if len(set(order)) != graph.n:
        raise ValueError("graph is not a path")
    return order


def path_conditional_marginal(inst: MrfInstance, v: int,
                              pinned: dict[int, int]) -> Distribution:
    """Same quantity as exact_conditional_marginal, by message passing.

    Forward and backward products of per-link matrices along the path; an
    independent O(n q^2) algorithm used to cross-check the enumeration and
    to reach instances beyond the enumeration cap. Parallel edges between
    consecutive vertices multiply entrywise into one effective matrix.
    """
    order = _path_order(inst.graph)
    n, q = inst.n, inst.q
    link = [np.ones((q, q)) for _ in range(n - 1)]
    pos = {v_: i for i, v_ in enumerate(order)}
    for e, (a, b_) in enumerate(inst.graph.edges):
        i, j = pos[a], pos[b_]
        link[min(i, j)] = link[min(i, j)] * inst.A[e]
    local = np.empty((n, q))
    for i, v_ in enumerate(order):
        d = np.zeros(q)
        if v_ in pinned:
            d[pinned[v_]] = 1.0
        else:
            d[:] = 1.0
        local[i] = inst.b[v_] * d
    fwd = np.empty((n, q))
    fwd[0] = local[0]
    for i in range(1, n):
        fwd[i] = (link[i - 1] @ fwd[i - 1]) * local[i]
    bwd = np.empty((n, q))
    bwd[n - 1] = 1.0
    for i in range(n - 2, -1, -1):
        bwd[i] = link[i] @ (local[i + 1] * bwd[i + 1])
    p = fwd[pos[v]] * bwd[pos[v]]
    total = p.sum()
    if total <= 0:
        raise ZeroProbabilityCondition(f"pinning {pinned} carries no weight")
    return Distribution(p / total)
