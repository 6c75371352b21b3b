"""Markov random fields: instances, weights, feasibility, conditional marginals.

An instance assigns a symmetric non-negative q x q interaction matrix to
every edge and a non-negative activity vector to every vertex. The weight
of a configuration is the product of one matrix entry per edge and one
vector entry per vertex; the Gibbs distribution is the weight normalized
over all q^n configurations. A configuration is feasible when its weight
is positive.

Configurations are plain integer numpy arrays (single: shape (n,); batched:
shape (n_runs, n)) with values in [0, q). Everything here is pure and
instances are immutable after construction.
"""

from __future__ import annotations

import math

import numpy as np

from .graphs import Graph


class ZeroMarginal(ValueError):
    """Conditional update distribution has zero total mass at a vertex.

    Raised when every spin at the vertex is excluded by the neighboring
    assignment, i.e. the single-site update is ill-defined there.
    """

    def __init__(self, vertex: int):
        super().__init__(f"conditional marginal at vertex {vertex} has zero mass")
        self.vertex = vertex


class DegenerateActivity(ValueError):
    """All-zero activity matrix or vector; carries no distribution."""


def _check_edge_activity(a: np.ndarray, q: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.shape != (q, q):
        raise ValueError(f"edge activity must be {q}x{q}, got {a.shape}")
    if np.any(a < 0):
        raise ValueError("edge activity entries must be non-negative")
    # instances are authored, not computed, so symmetry is checked exactly
    if not np.array_equal(a, a.T):
        raise ValueError("edge activity must be symmetric")
    if not np.any(a > 0):
        raise DegenerateActivity("edge activity is all zero")
    return a


def _check_vertex_activity(b: np.ndarray, q: int) -> np.ndarray:
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (q,):
        raise ValueError(f"vertex activity must have length {q}, got {b.shape}")
    if np.any(b < 0):
        raise ValueError("vertex activity entries must be non-negative")
    if not np.any(b > 0):
        raise DegenerateActivity("vertex activity is all zero")
    return b


def normalized_edge_activity(a: np.ndarray) -> np.ndarray:
    """Scale a symmetric activity matrix so its maximum entry is exactly 1.

    Raises:
        DegenerateActivity: if the matrix is all zero.
    """
    a = np.asarray(a, dtype=np.float64)
    top = a.max(initial=0.0)
    if top <= 0:
        raise DegenerateActivity("cannot normalize an all-zero activity matrix")
    return a / top


class MrfInstance:
    """A graph with one interaction matrix per edge and one activity per vertex.

    Args:
        graph: the underlying multigraph. Parallel edges carry independent
            interaction factors.
        q: spin-state count, >= 2. Spins are 0-based.
        edge_activities: a single (q, q) matrix shared by every edge, or a
            sequence with one matrix per edge in graph.edges order.
        vertex_activities: a single length-q vector shared by every vertex,
            or a sequence with one vector per vertex.

    Attributes:
        A: (m, q, q) stacked edge matrices.
        b: (n, q) stacked vertex activities.
        A_norm: per-edge matrices scaled to maximum entry 1 (the acceptance
            probabilities of the parallel Metropolis filter).
        b_prop: per-vertex proposal distributions, b normalized to sum 1.
        slot_A: (F, q, q) view of A expanded to adjacency slots, aligned with
            graph.nbr_flat; marginal computations index it directly.
    """

    def __init__(self, graph: Graph, q: int, edge_activities, vertex_activities):
        if q < 2:
            raise ValueError("need q >= 2 spin states")
        self.graph = graph
        self.q = int(q)
        n, m = graph.n, graph.m

        if m == 0:
            self.A = np.zeros((0, q, q))
        else:
            ea = np.asarray(edge_activities, dtype=np.float64)
            if ea.ndim == 2:
                ea = np.broadcast_to(ea, (m, q, q))
            if ea.shape != (m, q, q):
                raise ValueError(f"expected {m} edge activities of shape ({q}, {q})")
            self.A = np.stack([_check_edge_activity(ea[e], q) for e in range(m)])

        vb = np.asarray(vertex_activities, dtype=np.float64)
        if vb.ndim == 1:
            vb = np.broadcast_to(vb, (n, q))
        if vb.shape != (n, q):
            raise ValueError(f"expected {n} vertex activities of length {q}")
        self.b = np.stack([_check_vertex_activity(vb[v], q) for v in range(n)])

        self.A_norm = self.A / self.A.max(axis=(1, 2), keepdims=True) \
            if m else self.A
        self.b_prop = self.b / self.b.sum(axis=1, keepdims=True)
        self.b_cdf = np.cumsum(self.b_prop, axis=1)
        self.b_cdf[:, -1] = 1.0
        self.slot_A = self.A[graph.nbr_edge]
        for arr in (self.A, self.b, self.A_norm, self.b_prop, self.b_cdf):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.graph.n

    def __repr__(self):
        return f"MrfInstance(n={self.n}, m={self.graph.m}, q={self.q})"


def validate_configuration(inst: MrfInstance, sigma) -> np.ndarray:
    sigma = np.asarray(sigma)
    if sigma.shape[-1] != inst.n:
        raise ValueError(f"configuration length {sigma.shape[-1]} != {inst.n} vertices")
    if sigma.size and (sigma.min() < 0 or sigma.max() >= inst.q):
        raise ValueError(f"spins must lie in [0, {inst.q})")
    return sigma.astype(np.int64, copy=False)


def weight_batch(inst: MrfInstance, sigmas: np.ndarray) -> np.ndarray:
    """Weights of a (n_runs, n) batch of configurations, shape (n_runs,)."""
    x = validate_configuration(inst, sigmas)
    g = inst.graph
    w = np.prod(inst.b[np.arange(inst.n), x], axis=-1)
    if g.m:
        ef = inst.A[np.arange(g.m), x[..., g.eu], x[..., g.ev]]
        w = w * np.prod(ef, axis=-1)
    return w


def weight(inst: MrfInstance, sigma) -> float:
    """Product of one interaction entry per edge and one activity per vertex."""
    return float(weight_batch(inst, np.asarray(sigma)[None, :])[0])


def weight_log(inst: MrfInstance, sigma) -> tuple[bool, float]:
    """Log-domain weight as (is_zero, log_weight); safe against underflow.

    log_weight is -inf when is_zero; otherwise the sum of factor logs, which
    stays finite on instances far too large for the linear-domain product.
    """
    x = validate_configuration(inst, np.asarray(sigma))
    g = inst.graph
    factors = inst.b[np.arange(inst.n), x]
    if g.m:
        factors = np.concatenate(
            [factors, inst.A[np.arange(g.m), x[g.eu], x[g.ev]]])
    if np.any(factors == 0):
        return True, -math.inf
    return False, float(np.log(factors).sum())


def feasible_batch(inst: MrfInstance, sigmas: np.ndarray) -> np.ndarray:
    """Boolean feasibility of each row; zero-factor test, no underflow risk."""
    x = validate_configuration(inst, sigmas)
    g = inst.graph
    ok = np.all(inst.b[np.arange(inst.n), x] > 0, axis=-1)
    if g.m:
        ok &= np.all(inst.A[np.arange(g.m), x[..., g.eu], x[..., g.ev]] > 0, axis=-1)
    return ok


def is_feasible(inst: MrfInstance, sigma) -> bool:
    return bool(feasible_batch(inst, np.asarray(sigma)[None, :])[0])


def marginal(inst: MrfInstance, v: int, x) -> np.ndarray:
    """Single-site conditional distribution at v given the rest of x.

    Returns the length-q vector proportional to
    b_v(c) * prod over neighbors u of A_{uv}(c, x_u); only the entries of x
    on the neighborhood of v are read.

    Raises:
        ZeroMarginal: the normalizer is zero (every spin conflicts).
    """
    x = validate_configuration(inst, x)
    g = inst.graph
    lo, hi = g.nbr_ptr[v], g.nbr_ptr[v + 1]
    numer = inst.b[v].copy()
    for slot in range(lo, hi):
        numer *= inst.slot_A[slot][:, x[g.nbr_flat[slot]]]
    total = numer.sum()
    if total <= 0:
        raise ZeroMarginal(v)
    return numer / total
