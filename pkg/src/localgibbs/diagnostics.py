"""Quantitative instruments over the chains and the oracle.

Influence/contraction diagnostics (the Dobrushin-style matrix and its
closed coloring form), empirical mixing curves against exact ground truth,
identical-tape coupling decay with the degree-weighted disagreement
distance, conditional-correlation decay along paths, and selection-rate
scans for the local-maximum scheduler.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .chains import ChainSpec, local_max_select, round_function
from .engine import CHUNK_RUNS, initial_config, run_batch
from .graphs import Graph
from .mrf import MrfInstance
from .oracle import (ENUM_CAP, Distribution, all_configs, enumerate_gibbs,
                     exact_conditional_marginal, path_conditional_marginal,
                     tv_distance)
from .randomness import KIND_NODE_BETA, RandomTape


@dataclass(frozen=True)
class InfluenceMatrix:
    """Worst-case conditional-marginal shifts: rho[i, j] is the largest total
    variation move of i's single-site conditional caused by changing j alone
    (over feasible pairs); alpha is the largest row sum."""

    rho: np.ndarray
    alpha: float


@dataclass(frozen=True)
class MixingCurve:
    rounds: list[int]
    tv: list[float]
    n_runs: int
    seed: int
    epsilon: float
    tau_hat: int | None
    per_initial: dict[str, list[float]] = field(default_factory=dict)


@dataclass(frozen=True)
class DecayCurve:
    """Mean degree-weighted disagreement per round of a paired run."""

    rounds: np.ndarray
    phi: np.ndarray
    stderr: np.ndarray
    n_runs: int
    seed: int
    rate: float
    fit_rounds: tuple[int, int] | None


@dataclass(frozen=True)
class GammaReport:
    per_vertex: np.ndarray
    rounds: int

    @property
    def min(self) -> float:
        return float(self.per_vertex.min())


def dobrushin_alpha_coloring(graph: Graph, q_lists) -> float:
    """Closed-form total influence for (list-)colorings: max_v d_v/(q_v - d_v).

    q_lists is one list size for every vertex or a per-vertex array. When
    some vertex has q_v <= d_v the bound degenerates; returns math.inf.
    """
    d = graph.degrees.astype(np.float64)
    q = np.broadcast_to(np.asarray(q_lists, dtype=np.float64), (graph.n,))
    if np.any(q <= d):
        return math.inf
    if graph.n == 0:
        return 0.0
    return float((d / (q - d)).max())


def influence_matrix_numeric(inst: MrfInstance, cap: int = ENUM_CAP) -> InfluenceMatrix:
    """Influence matrix by enumeration of feasible single-vertex-differing pairs.

    For each vertex j, every pair of feasible configurations differing only
    at j is examined and the conditionals of the neighbors of j are compared.
    Vertices outside the neighborhood keep conditionals that read identical
    inputs, so their influence entries are exactly zero. A frozen j (no
    feasible pair differs only there) leaves column j zero with a warning.
    """
    n, q, g = inst.n, inst.q, inst.graph
    mu, _ = enumerate_gibbs(inst, cap)  # raises on oversize/empty models
    feas = np.flatnonzero(mu.probs > 0)
    configs = all_configs(n, q)[feas]
    pows = q ** np.arange(n, dtype=np.int64)
    rho = np.zeros((n, n))

    marg_cache: dict[tuple[int, bytes], np.ndarray] = {}

    def cond(i: int, x: np.ndarray) -> np.ndarray:
        lo, hi = g.nbr_ptr[i], g.nbr_ptr[i + 1]
        key = (i, x[g.nbr_flat[lo:hi]].tobytes())
        out = marg_cache.get(key)
        if out is None:
            numer = inst.b[i].copy()
            for slot in range(lo, hi):
                numer = numer * inst.slot_A[slot][:, x[g.nbr_flat[slot]]]
            out = numer / numer.sum()
            marg_cache[key] = out
        return out

    for j in range(n):
        base = configs @ pows - configs[:, j] * pows[j]
        order = np.argsort(base, kind="stable")
        grouped = configs[order]
        bounds = np.flatnonzero(np.diff(base[order])) + 1
        groups = np.split(grouped, bounds)
        nbrs = sorted(set(g.adjacency[j]))
        any_pair = False
        for grp in groups:
            if len(grp) < 2:
                continue
            any_pair = True
            conds = [[cond(i, x) for x in grp] for i in nbrs]
            for a in range(len(grp)):
                for b in range(a + 1, len(grp)):
                    for k, i in enumerate(nbrs):
                        t = 0.5 * np.abs(conds[k][a] - conds[k][b]).sum()
                        if t > rho[i, j]:
                            rho[i, j] = t
        if not any_pair:
            warnings.warn(f"vertex {j} is frozen (no feasible pair differs only "
                          f"there); influence column left zero")
    return InfluenceMatrix(rho, float(rho.sum(axis=1).max()) if n else 0.0)


def _chunked_snapshots(inst, chain, initial, grid, n_runs, tape):
    grid = sorted(set(int(t) for t in grid))
    finals = {t: np.empty((n_runs, inst.n), dtype=np.int64) for t in grid}
    for lo in range(0, n_runs, CHUNK_RUNS):
        hi = min(lo + CHUNK_RUNS, n_runs)
        runs = np.arange(lo, hi, dtype=np.int64)
        x0 = initial_config(inst, initial, tape, runs)
        _, snaps = run_batch(inst, chain, x0, max(grid), tape, runs,
                             snapshot_rounds=grid)
        for t in grid:
            finals[t][lo:hi] = snaps[t]
    return finals


DEFAULT_INITIALS = ("zeros", "max", "greedy", "random")


def mixing_scan(inst: MrfInstance, chain: ChainSpec, rounds_grid, n_runs: int,
                tape: RandomTape, initials=DEFAULT_INITIALS,
                epsilon: float = 0.05, cap: int = ENUM_CAP) -> MixingCurve:
    """Empirical distance to the exact Gibbs distribution along a round grid.

    For each initial configuration in the panel, n_runs trajectories are
    snapshotted at every grid round and the histogram's total variation
    distance to the enumerated distribution recorded. The curve keeps the
    worst panel member per round; tau_hat is the first grid round at which
    that worst distance is <= epsilon (None if never).
    """
    mu, _ = enumerate_gibbs(inst, cap)
    grid = sorted(set(int(t) for t in rounds_grid))
    if not grid:
        raise ValueError("rounds grid is empty")
    per_initial: dict[str, list[float]] = {}
    for init in initials:
        name = init if isinstance(init, str) else "explicit"
        finals = _chunked_snapshots(inst, chain, init, grid, n_runs, tape)
        tvs = []
        for t in grid:
            counts = np.bincount(finals[t] @ (inst.q ** np.arange(inst.n, dtype=np.int64)),
                                 minlength=len(mu.probs))
            tvs.append(tv_distance(Distribution(counts / counts.sum()), mu))
        per_initial[name] = tvs
    worst = [max(per_initial[k][i] for k in per_initial) for i in range(len(grid))]
    tau = next((t for t, tv in zip(grid, worst) if tv <= epsilon), None)
    return MixingCurve(grid, worst, n_runs, tape.master_seed, epsilon, tau,
                       per_initial)


def coupling_decay(inst: MrfInstance, chain: ChainSpec, initial_pair,
                   rounds: int, n_runs: int, tape: RandomTape,
                   coupling: str = "identical-tape") -> DecayCurve:
    """Paired evolution under shared randomness; tracks expected disagreement.

    Both runs read the same tape, so proposals, scores, and edge coins are
    identical; only the states differ. Disagreement is weighted by degree:
    phi(X, Y) = sum of deg(v) over vertices where the two states differ.
    The decay rate is a least-squares slope of log phi over the rounds where
    the mean stays above the counting-noise floor 10/n_runs.
    """
    if coupling != "identical-tape":
        raise ValueError("only the identical-tape coupling is implemented")
    xa, xb = initial_pair
    runs = np.arange(n_runs, dtype=np.int64)
    X = initial_config(inst, xa, tape, runs)
    Y = initial_config(inst, xb, tape, runs)
    if X.ndim == 1:
        X = np.broadcast_to(X, (n_runs, inst.n)).copy()
    if Y.ndim == 1:
        Y = np.broadcast_to(Y, (n_runs, inst.n)).copy()
    deg = inst.graph.degrees.astype(np.float64)
    fn = round_function(chain)
    phi = np.empty((rounds + 1, n_runs))
    phi[0] = (X != Y) @ deg
    for t in range(1, rounds + 1):
        X, _ = fn(inst, X, t, tape, runs)
        Y, _ = fn(inst, Y, t, tape, runs)
        phi[t] = (X != Y) @ deg
    mean = phi.mean(axis=1)
    stderr = phi.std(axis=1, ddof=1) / math.sqrt(n_runs) if n_runs > 1 \
        else np.zeros(rounds + 1)
    floor = 10.0 / n_runs
    window = np.flatnonzero(mean >= floor)
    # fit only the contiguous prefix above the floor; stray late counts are noise
    if len(window):
        gaps = np.flatnonzero(np.diff(window) > 1)
        if len(gaps):
            window = window[:gaps[0] + 1]
    if len(window) >= 2 and np.all(mean[window] > 0):
        slope = np.polyfit(window.astype(float), np.log(mean[window]), 1)[0]
        rate = float(-slope)
        fit_rounds = (int(window[0]), int(window[-1]))
    else:
        rate = math.nan
        fit_rounds = None
    return DecayCurve(np.arange(rounds + 1), mean, stderr, n_runs,
                      tape.master_seed, rate, fit_rounds)


def crossing_round(curve: DecayCurve, level: float) -> float:
    """First (log-linearly interpolated) round where the mean disagreement
    drops to the given level; inf if it never does."""
    phi = curve.phi
    if phi[0] <= level:
        return 0.0
    below = np.flatnonzero(phi <= level)
    if len(below) == 0:
        return math.inf
    t = int(below[0])
    a, b = phi[t - 1], phi[t]
    if b <= 0 or a <= b:
        return float(t)
    return (t - 1) + (math.log(a) - math.log(level)) / (math.log(a) - math.log(b))


def correlation_length(inst: MrfInstance, u: int, v: int, pinnings=None,
                       delta: float = 0.1, method: str = "auto",
                       cap: int = ENUM_CAP) -> float:
    """Worst conditional shift at v between two pinned spins at u.

    Candidate pins are the spins of u whose exact marginal mass reaches
    delta (or an explicit iterable of spins); the result is the maximum
    total variation distance between the conditionals at v over pin pairs.
    method "enumerate" forces full enumeration, "transfer" the path
    message-passing recursion, "auto" enumeration when the state space is
    within cap and the recursion otherwise.
    """
    if method not in ("auto", "enumerate", "transfer"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "enumerate" if inst.q ** inst.n <= cap else "transfer"

    def cond(pin: dict[int, int]) -> np.ndarray:
        if method == "enumerate":
            return exact_conditional_marginal(inst, v, pin, cap)
        return path_conditional_marginal(inst, v, pin)

    if pinnings is None:
        if method == "enumerate":
            mass = exact_conditional_marginal(inst, u, {}, cap)
        else:
            mass = path_conditional_marginal(inst, u, {})
        pinnings = [s for s in range(inst.q) if mass.probs[s] >= delta]
    pins = list(pinnings)
    best = 0.0
    conds = {s: cond({u: s}) for s in pins}
    for a in range(len(pins)):
        for b in range(a + 1, len(pins)):
            t = tv_distance(conds[pins[a]], conds[pins[b]])
            if t > best:
                best = t
    return best


def luby_gamma_estimate(graph: Graph, rounds: int, tape: RandomTape) -> GammaReport:
    """Per-vertex selection frequency of the local-maximum rule.

    Evaluates the exact selection sets run 0 would see in rounds 1..rounds
    and reports the frequency vector (min over vertices is the empirical
    scheduler floor).
    """
    freq = np.zeros(graph.n)
    block = 4096
    for lo in range(1, rounds + 1, block):
        rs = np.arange(lo, min(lo + block, rounds + 1), dtype=np.int64)
        keys = tape.node_words_over_rounds(KIND_NODE_BETA, np.arange(graph.n), rs)
        freq += local_max_select(graph, keys).sum(axis=0)
    return GammaReport(freq / rounds, rounds)
