"""Round functions for the parallel samplers and the sequential baseline.

Three chain kinds share one state representation (a batch of configurations,
shape (n_runs, n)) and one randomness contract (every variate addressed by
(kind, entity, round, run) through the tape):

* independent-set resampling: a scheduler picks a non-adjacent vertex set
  each round and the selected vertices redraw their spins from their
  single-site conditionals, simultaneously;
* parallel Metropolis: every vertex proposes from its activity vector, every
  edge tosses one shared coin against a three-factor acceptance probability
  on normalized activities, and a vertex commits its proposal only when all
  incident edges passed;
* the sequential baseline: one uniformly random vertex resampled per round.

All round functions are pure maps from the previous round's snapshot to the
next; a vertex's update reads its own streams, its neighbors' previous
spins, and the shared coins of its incident edges, nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import Graph
from .mrf import MrfInstance, ZeroMarginal, validate_configuration
from .randomness import KIND_NODE_BETA, KIND_NODE_PROPOSAL, RandomTape

_SCHEDULER_VARIANTS = ("luby", "chromatic", "single-site")
_CHAIN_KINDS = ("luby_glauber", "local_metropolis", "sequential_glauber")


@dataclass(frozen=True)
class SchedulerSpec:
    """Which independent set gets resampled each round.

    luby: local-maximum rule on per-round i.i.d. scores, expected set size
        about n/(max degree + 1).
    chromatic: fixed color classes taken round-robin; round t updates class
        t mod k, so one sweep of k rounds touches every vertex exactly once.
    single-site: one uniformly random vertex per round.
    """

    variant: str
    color_classes: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.variant not in _SCHEDULER_VARIANTS:
            raise ValueError(f"unknown scheduler variant {self.variant!r}")
        if (self.variant == "chromatic") != (self.color_classes is not None):
            raise ValueError("color_classes required for chromatic, forbidden otherwise")


@dataclass(frozen=True)
class ChainSpec:
    kind: str
    scheduler: SchedulerSpec | None = None

    def __post_init__(self):
        if self.kind not in _CHAIN_KINDS:
            raise ValueError(f"unknown chain kind {self.kind!r}")
        if self.kind == "luby_glauber":
            if self.scheduler is None:
                object.__setattr__(self, "scheduler", SchedulerSpec("luby"))
        elif self.scheduler is not None:
            raise ValueError(f"{self.kind} takes no scheduler")


def luby_glauber(scheduler: SchedulerSpec | None = None) -> ChainSpec:
    return ChainSpec("luby_glauber", scheduler)


def local_metropolis() -> ChainSpec:
    return ChainSpec("local_metropolis")


def sequential_glauber() -> ChainSpec:
    return ChainSpec("sequential_glauber")


def chromatic_classes(graph: Graph) -> tuple[tuple[int, ...], ...]:
    """Greedy proper-coloring classes in vertex order, for the chromatic scheduler."""
    color = np.full(graph.n, -1, dtype=np.int64)
    for v in range(graph.n):
        used = {color[u] for u in graph.adjacency[v] if color[u] >= 0}
        c = 0
        while c in used:
            c += 1
        color[v] = c
    return tuple(tuple(np.flatnonzero(color == c).tolist())
                 for c in range(int(color.max()) + 1))


def _segment_reduce(op, values: np.ndarray, ptr: np.ndarray,
                    empty_value) -> np.ndarray:
    """Per-segment ufunc reduction along axis 1; empty segments get empty_value.

    reduceat misreads zero-length segments (it returns the element at the
    segment start, or walks off the end), so those positions are patched.
    """
    starts = ptr[:-1]
    lengths = np.diff(ptr)
    if values.shape[1] == 0:
        shape = (values.shape[0], len(starts)) + values.shape[2:]
        return np.full(shape, empty_value, dtype=values.dtype)
    safe = np.minimum(starts, values.shape[1] - 1)
    out = op.reduceat(values, safe, axis=1)
    if np.any(lengths == 0):
        out[:, lengths == 0] = empty_value
    return out


def _sample_from_cdf(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw: smallest spin whose cumulative strictly exceeds u.

    Counting boundary entries with <= means a zero-probability spin (a flat
    cdf step) can never be hit, even when u lands exactly on the boundary.
    """
    return (cdf <= u[..., None]).sum(axis=-1)


def local_max_select(graph: Graph, keys: np.ndarray) -> np.ndarray:
    """Rows of score words -> rows of local-maximum indicators.

    v is selected when its 64-bit score word beats every neighbor's,
    comparing (score, vertex id) lexicographically so exact ties resolve
    against the smaller id. Each row is an independent set by construction.
    """
    n = graph.n
    if graph.m == 0:
        return np.ones((len(keys), n), dtype=bool)
    nk = keys[:, graph.nbr_flat]
    nbr_max = _segment_reduce(np.maximum, nk, graph.nbr_ptr, np.uint64(0))
    sel = keys > nbr_max
    ties = (keys == nbr_max) & (graph.degrees[None, :] > 0)
    if ties.any():
        ids = np.where(nk == np.repeat(nbr_max, np.diff(graph.nbr_ptr), axis=1),
                       graph.nbr_flat[None, :], -1)
        top_id = _segment_reduce(np.maximum, ids, graph.nbr_ptr, -1)
        sel |= ties & (np.arange(n)[None, :] > top_id)
    sel[:, graph.degrees == 0] = True
    return sel


def luby_select_batch(graph: Graph, round_: int, tape: RandomTape,
                      runs: np.ndarray) -> np.ndarray:
    """Local-maximum selection for one round, shape (len(runs), n) boolean."""
    keys = tape.node_words(KIND_NODE_BETA, np.arange(graph.n), round_, runs)
    return local_max_select(graph, keys)


def single_site_select_batch(graph: Graph, round_: int, tape: RandomTape,
                             runs: np.ndarray) -> np.ndarray:
    """One uniformly random vertex per run, as a one-hot boolean matrix.

    Uses the global maximum of the same score words the local rule compares:
    with i.i.d. scores the argmax is uniform, and reusing the stream keeps
    the scheduler family on one randomness footprint.
    """
    keys = tape.node_words(KIND_NODE_BETA, np.arange(graph.n), round_, runs)
    top = keys.max(axis=1, keepdims=True)
    is_top = keys == top
    # highest vertex id among maxima, consistent with the local tie rule
    pick = graph.n - 1 - np.argmax(is_top[:, ::-1], axis=1)
    sel = np.zeros(keys.shape, dtype=bool)
    sel[np.arange(len(sel)), pick] = True
    return sel


def scheduled_set_batch(graph: Graph, scheduler: SchedulerSpec, round_: int,
                        tape: RandomTape, runs: np.ndarray) -> np.ndarray:
    if scheduler.variant == "luby":
        return luby_select_batch(graph, round_, tape, runs)
    if scheduler.variant == "single-site":
        return single_site_select_batch(graph, round_, tape, runs)
    classes = scheduler.color_classes
    members = np.zeros(graph.n, dtype=bool)
    members[list(classes[round_ % len(classes)])] = True
    return np.broadcast_to(members, (len(np.atleast_1d(runs)), graph.n)).copy()


def _conditional_cdfs(inst: MrfInstance, x: np.ndarray,
                      need: np.ndarray) -> np.ndarray:
    """Single-site conditional CDFs for every (run, vertex), shape (R, n, q).

    Rows where the conditional has zero mass are only an error if that
    vertex is actually scheduled (the `need` mask); elsewhere they are
    left as all-ones CDFs and never sampled.
    """
    g = inst.graph
    R, n = x.shape
    if g.nbr_flat.size:
        gathered = inst.slot_A[np.arange(len(g.nbr_flat))[None, :],
                               x[:, g.nbr_flat], :]
        prod = _segment_reduce(np.multiply, gathered, g.nbr_ptr, 1.0)
    else:
        prod = np.ones((R, n, inst.q))
    numer = inst.b[None, :, :] * prod
    denom = numer.sum(axis=-1)
    dead = denom <= 0
    if np.any(dead & need):
        v = int(np.argmax(np.any(dead & need, axis=0)))
        raise ZeroMarginal(v)
    denom[dead] = 1.0
    cdf = np.cumsum(numer / denom[..., None], axis=-1)
    cdf[..., -1] = 1.0
    return cdf


def _resample_round(inst: MrfInstance, x: np.ndarray, scheduler: SchedulerSpec,
                    round_: int, tape: RandomTape, runs: np.ndarray,
                    collect: bool):
    sel = scheduled_set_batch(inst.graph, scheduler, round_, tape, runs)
    cdf = _conditional_cdfs(inst, x, sel)
    u = tape.node_uniforms(KIND_NODE_PROPOSAL, np.arange(inst.n), round_, runs)
    drawn = _sample_from_cdf(cdf, u)
    new_x = np.where(sel, drawn, x)
    if not collect:
        return new_x, None
    trace = {"proposals": new_x.copy(), "luby_selected": sel,
             "edge_pass": None, "accepted": sel}
    return new_x, trace


def luby_glauber_round_batch(inst: MrfInstance, x: np.ndarray,
                             scheduler: SchedulerSpec, round_: int,
                             tape: RandomTape, runs: np.ndarray,
                             collect: bool = False):
    return _resample_round(inst, x, scheduler, round_, tape, runs, collect)


def sequential_glauber_round_batch(inst: MrfInstance, x: np.ndarray,
                                   round_: int, tape: RandomTape,
                                   runs: np.ndarray, collect: bool = False):
    return _resample_round(inst, x, SchedulerSpec("single-site"), round_, tape,
                           runs, collect)


def local_metropolis_round_batch(inst: MrfInstance, x: np.ndarray,
                                 round_: int, tape: RandomTape,
                                 runs: np.ndarray, collect: bool = False):
    g = inst.graph
    n, m = inst.n, g.m
    u = tape.node_uniforms(KIND_NODE_PROPOSAL, np.arange(n), round_, runs)
    sigma = _sample_from_cdf(inst.b_cdf[None, :, :], u)
    if m:
        e_idx = np.arange(m)
        # three-factor acceptance on normalized activities: both proposals,
        # then each proposal against the other endpoint's current spin
        pe = (inst.A_norm[e_idx, sigma[:, g.eu], sigma[:, g.ev]]
              * inst.A_norm[e_idx, x[:, g.eu], sigma[:, g.ev]]
              * inst.A_norm[e_idx, sigma[:, g.eu], x[:, g.ev]])
        coins = tape.edge_uniforms(g.eu, g.ev, g.emult, round_, runs)
        passed = coins < pe
        acc = _segment_reduce(np.logical_and, passed[:, g.inc_flat],
                              g.inc_ptr, True)
    else:
        passed = np.zeros((len(sigma), 0), dtype=bool)
        acc = np.ones(sigma.shape, dtype=bool)
    new_x = np.where(acc, sigma, x)
    if not collect:
        return new_x, None
    trace = {"proposals": sigma, "luby_selected": None,
             "edge_pass": passed, "accepted": acc}
    return new_x, trace


def round_function(chain: ChainSpec):
    """Bind a chain spec to its batched round function (x, round, tape, runs, collect)."""
    if chain.kind == "luby_glauber":
        sched = chain.scheduler

        def fn(inst, x, round_, tape, runs, collect=False):
            return luby_glauber_round_batch(inst, x, sched, round_, tape, runs, collect)
    elif chain.kind == "sequential_glauber":
        fn = sequential_glauber_round_batch
    else:
        fn = local_metropolis_round_batch
    return fn


# single-run conveniences


def _one_run(x, run):
    return np.asarray(x)[None, :], np.array([run], dtype=np.int64)


def luby_select(graph: Graph, round_: int, tape: RandomTape,
                run: int = 0) -> np.ndarray:
    """Vertices selected by the local-maximum rule in one round, ascending."""
    runs = np.array([run], dtype=np.int64)
    return np.flatnonzero(luby_select_batch(graph, round_, tape, runs)[0])


def luby_glauber_round(inst: MrfInstance, x, scheduler: SchedulerSpec,
                       round_: int, tape: RandomTape, run: int = 0) -> np.ndarray:
    xb, runs = _one_run(validate_configuration(inst, x), run)
    return luby_glauber_round_batch(inst, xb, scheduler, round_, tape, runs)[0][0]


def local_metropolis_round(inst: MrfInstance, x, round_: int, tape: RandomTape,
                           run: int = 0) -> np.ndarray:
    xb, runs = _one_run(validate_configuration(inst, x), run)
    return local_metropolis_round_batch(inst, xb, round_, tape, runs)[0][0]


def sequential_glauber_round(inst: MrfInstance, x, round_: int, tape: RandomTape,
                             run: int = 0) -> np.ndarray:
    xb, runs = _one_run(validate_configuration(inst, x), run)
    return sequential_glauber_round_batch(inst, xb, round_, tape, runs)[0][0]


@dataclass(frozen=True)
class SupportReport:
    ok: bool
    mode: str
    checked: int
    witness: tuple[np.ndarray, int] | None


def check_filter_positivity(inst: MrfInstance, state_cap: int = 1 << 12,
                            samples: int = 500, seed: int = 0) -> SupportReport:
    """Certify the parallel filter cannot strand a vertex.

    For every configuration x and vertex v the quantity

        sum_i b_v(i) * prod_{u in N(v)} [ A(i, x_u) * sum_j b_u(j) A(x_v, j) A(i, j) ]

    must be positive: some proposal at v passes its own checks jointly with
    some neighbor proposals, whatever the current state. Exhaustive below
    state_cap configurations, spot-sampled above it.
    """
    from .oracle import all_configs  # deferred: oracle imports this module

    n, q, g = inst.n, inst.q, inst.graph
    exhaustive = q ** n <= state_cap
    if exhaustive:
        X = all_configs(n, q)
        mode = "exhaustive"
    else:
        words = RandomTape(seed).node_uniforms(
            KIND_NODE_BETA, np.arange(n), 0, np.arange(samples, dtype=np.int64))
        X = np.minimum((words * q).astype(np.int64), q - 1)
        mode = "sampled"
    # S[i, xv] = sum_j b_u(j) A(i, j) A(xv, j), one matrix per adjacency slot
    for v in range(n):
        vals = np.broadcast_to(inst.b[v][:, None], (q, len(X))).copy()
        for slot in range(g.nbr_ptr[v], g.nbr_ptr[v + 1]):
            u = g.nbr_flat[slot]
            A = inst.slot_A[slot]
            S = A @ (inst.b[u][:, None] * A)
            vals *= A[:, X[:, u]] * S[:, X[:, v]]
        total = vals.sum(axis=0)
        if np.any(total <= 0):
            bad = int(np.argmax(total <= 0))
            return SupportReport(False, mode, len(X), (X[bad].copy(), v))
    return SupportReport(True, mode, len(X), None)
