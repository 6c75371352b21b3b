"""Round-synchronous execution: barriers, batched runs, empirical sampling.

The engine advances a batch of independent runs through T rounds of a
chain's round function. Rounds are hard barriers: the round function maps
the complete round-(t-1) snapshot to the round-t state, so no update can
observe a neighbor's same-round value. Because every variate is addressed
by (kind, entity, round, run), a run's trajectory is a pure function of
the master seed and its run index; batch composition, chunking, and thread
count cannot change any result.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .chains import ChainSpec, round_function
from .mrf import MrfInstance, validate_configuration
from .randomness import KIND_INIT_CONFIG, RandomTape

INITIAL_PRESETS = ("zeros", "max", "greedy", "random")


@dataclass(frozen=True)
class RoundTrace:
    """What one round did: candidate spins, scheduling/coin outcomes, commits."""

    round: int
    proposals: np.ndarray
    luby_selected: np.ndarray | None
    edge_pass: np.ndarray | None
    accepted: np.ndarray


@dataclass(frozen=True)
class RoundState:
    round: int
    config: np.ndarray
    trace: RoundTrace | None = None


def greedy_feasible(inst: MrfInstance) -> np.ndarray:
    """Deterministic feasible configuration: scan vertices, take the smallest
    non-conflicting spin given the already-assigned neighbors.

    Raises:
        ValueError: the greedy scan dead-ends (no spin has positive weight
        against the assigned neighborhood).
    """
    g = inst.graph
    x = np.full(inst.n, -1, dtype=np.int64)
    for v in range(inst.n):
        ok = inst.b[v] > 0
        for slot in range(g.nbr_ptr[v], g.nbr_ptr[v + 1]):
            u = g.nbr_flat[slot]
            if x[u] >= 0:
                ok &= inst.slot_A[slot][:, x[u]] > 0
        if not ok.any():
            raise ValueError(f"greedy feasible start dead-ends at vertex {v}")
        x[v] = int(np.argmax(ok))
    return x


def initial_config(inst: MrfInstance, initial, tape: RandomTape | None = None,
                   runs: np.ndarray | None = None) -> np.ndarray:
    """Resolve an initial-configuration preset or explicit array.

    "zeros" and "max" are the two monochromatic extremes, "greedy" the
    deterministic feasible scan, "random" per-run uniform spins drawn from
    the tape's init stream (requires tape and runs). An explicit array
    passes through validation unchanged.
    """
    if isinstance(initial, str):
        if initial == "zeros":
            return np.zeros(inst.n, dtype=np.int64)
        if initial == "max":
            return np.full(inst.n, inst.q - 1, dtype=np.int64)
        if initial == "greedy":
            return greedy_feasible(inst)
        if initial == "random":
            if tape is None or runs is None:
                raise ValueError("random initial needs a tape and run indices")
            u = tape.node_uniforms(KIND_INIT_CONFIG, np.arange(inst.n), 0, runs)
            return np.minimum((u * inst.q).astype(np.int64), inst.q - 1)
        raise ValueError(f"unknown initial preset {initial!r}")
    return validate_configuration(inst, np.asarray(initial))


def run_batch(inst: MrfInstance, chain: ChainSpec, x0: np.ndarray, rounds: int,
              tape: RandomTape, runs: np.ndarray,
              snapshot_rounds=None) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """Advance a (n_runs, n) batch T rounds; optionally snapshot named rounds.

    Returns the final batch and {t: copy of the batch after round t} for each
    requested t (0 means the initial batch).
    """
    if rounds < 0:
        raise ValueError("round count must be >= 0")
    runs = np.asarray(runs, dtype=np.int64)
    x = validate_configuration(inst, x0)
    if x.ndim == 1:
        x = np.broadcast_to(x, (len(runs), inst.n)).copy()
    fn = round_function(chain)
    wanted = set() if snapshot_rounds is None else set(int(t) for t in snapshot_rounds)
    snaps: dict[int, np.ndarray] = {}
    if 0 in wanted:
        snaps[0] = x.copy()
    for t in range(1, rounds + 1):
        x, _ = fn(inst, x, t, tape, runs)
        if t in wanted:
            snaps[t] = x.copy()
    return x, snaps


def run(inst: MrfInstance, chain: ChainSpec, initial, rounds: int,
        tape: RandomTape, run_index: int = 0, trace: bool = False) -> RoundState:
    """Execute one run; with trace=True the returned state carries the final
    round's trace (use run_traced for the full history)."""
    if trace:
        final, traces = run_traced(inst, chain, initial, rounds, tape, run_index)
        return final
    x0 = initial_config(inst, initial, tape, np.array([run_index]))
    x, _ = run_batch(inst, chain, x0, rounds, tape,
                     np.array([run_index], dtype=np.int64))
    return RoundState(rounds, x[0])


def run_traced(inst: MrfInstance, chain: ChainSpec, initial, rounds: int,
               tape: RandomTape, run_index: int = 0
               ) -> tuple[RoundState, list[RoundTrace]]:
    """Execute one run keeping every round's trace."""
    runs = np.array([run_index], dtype=np.int64)
    x0 = initial_config(inst, initial, tape, runs)
    x = validate_configuration(inst, x0)
    if x.ndim == 1:
        x = x[None, :].copy()
    fn = round_function(chain)
    traces: list[RoundTrace] = []
    for t in range(1, rounds + 1):
        x, raw = fn(inst, x, t, tape, runs, True)
        traces.append(RoundTrace(
            round=t,
            proposals=raw["proposals"][0],
            luby_selected=None if raw["luby_selected"] is None else raw["luby_selected"][0],
            edge_pass=None if raw["edge_pass"] is None else raw["edge_pass"][0],
            accepted=raw["accepted"][0]))
    last = traces[-1] if traces else None
    return RoundState(rounds, x[0], last), traces


def write_trace_jsonl(traces, path: str) -> None:
    """One JSON record per round with the trace fields, LF-terminated."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for tr in traces:
            rec = {
                "round": tr.round,
                "proposals": np.asarray(tr.proposals).tolist(),
                "luby_selected": None if tr.luby_selected is None
                else np.asarray(tr.luby_selected).astype(bool).tolist(),
                "edge_pass": None if tr.edge_pass is None
                else np.asarray(tr.edge_pass).astype(bool).tolist(),
                "accepted": np.asarray(tr.accepted).astype(bool).tolist(),
            }
            f.write(json.dumps(rec, sort_keys=True) + "\n")


@dataclass(frozen=True)
class SampleResult:
    """Final configurations of independent runs, (n_runs, n)."""

    final: np.ndarray
    rounds: int
    seed: int

    @property
    def n_runs(self) -> int:
        return len(self.final)

    def ranks(self, q: int) -> np.ndarray:
        n = self.final.shape[1]
        return self.final @ (q ** np.arange(n, dtype=np.int64))

    def distribution(self, q: int, cap: int = 1 << 22):
        """Empirical distribution over configuration ranks."""
        from .oracle import Distribution, StateSpaceTooLarge
        n = self.final.shape[1]
        if q ** n > cap:
            raise StateSpaceTooLarge(
                f"{q}**{n} outcomes exceed the histogram cap; use marginals()")
        counts = np.bincount(self.ranks(q), minlength=q ** n)
        return Distribution(counts / counts.sum())

    def marginals(self, q: int) -> np.ndarray:
        """Per-vertex empirical spin frequencies, (n, q)."""
        n = self.final.shape[1]
        out = np.empty((n, q))
        for v in range(n):
            out[v] = np.bincount(self.final[:, v], minlength=q) / self.n_runs
        return out


# chunk size is fixed so that chunking (and hence threading) can never
# change which runs execute together; counter-based streams make results
# independent of the split anyway, this just keeps the layout canonical
CHUNK_RUNS = 4096


def sample_many(inst: MrfInstance, chain: ChainSpec, rounds: int, n_runs: int,
                tape: RandomTape, initial="random", threads: int = 1) -> SampleResult:
    """n_runs independent executions of T rounds; returns final configurations.

    Runs are numbered 0..n_runs-1 and processed in fixed chunks; with
    threads > 1 chunks execute concurrently. Output is bitwise identical for
    any thread count.
    """
    if n_runs < 1:
        raise ValueError("need n_runs >= 1")
    final = np.empty((n_runs, inst.n), dtype=np.int64)
    spans = [(lo, min(lo + CHUNK_RUNS, n_runs))
             for lo in range(0, n_runs, CHUNK_RUNS)]

    def work(span):
        lo, hi = span
        runs = np.arange(lo, hi, dtype=np.int64)
        x0 = initial_config(inst, initial, tape, runs)
        out, _ = run_batch(inst, chain, x0, rounds, tape, runs)
        final[lo:hi] = out

    if threads <= 1:
        for span in spans:
            work(span)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, spans))
    return SampleResult(final, rounds, tape.master_seed)
