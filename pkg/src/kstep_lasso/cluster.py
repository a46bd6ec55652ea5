"""Deterministic virtual SPMD cluster with flop/message/word/memory metering.

A run alternates local compute phases (one callable applied to every rank)
with collective phases (tree all-reduce).  Costs follow the linear machine
model

    time = gamma * F + alpha * L + beta * W

where F counts flops, L message rounds, and W words moved, all along the
critical path: per local phase the maximum over ranks, per collective the
symmetric round/word count.  An all-reduce over P ranks costs ceil(log2 P)
rounds carrying the full payload each round, and its result is the fixed
rank-ordered pairwise tree sum, so outcomes never depend on how many real
worker threads execute the virtual ranks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Callable, Sequence

import numpy as np

from .data import ColumnPartition
from .linalg import FlopMeter


class ClusterProtocolError(RuntimeError):
    """A program broke the phase contract (e.g. collective inside local work)."""


@dataclass(frozen=True)
class MachineParams:
    """Seconds per flop (gamma), per message (alpha), per word (beta)."""

    gamma: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if min(self.gamma, self.alpha, self.beta) < 0.0:
            raise ValueError("machine parameters must be >= 0")


@dataclass
class CostCounters:
    """Cumulative flops (F), message rounds (L), words moved (W), peak memory words."""

    flops: int = 0
    messages: int = 0
    words: int = 0
    mem_peak: int = 0

    def snapshot(self) -> "CostCounters":
        return replace(self)


def modeled_time(counters: CostCounters, machine: MachineParams) -> float:
    """gamma*F + alpha*L + beta*W."""
    return (
        machine.gamma * counters.flops
        + machine.alpha * counters.messages
        + machine.beta * counters.words
    )


class MemoryLedger:
    """Words of live numeric payload on one rank, with running peak."""

    __slots__ = ("current", "peak")

    def __init__(self) -> None:
        self.current = 0
        self.peak = 0

    def acquire(self, words: int) -> None:
        self.current += int(words)
        if self.current > self.peak:
            self.peak = self.current

    def release(self, words: int) -> None:
        self.current -= int(words)


@dataclass
class ProcContext:
    """Per-rank view handed to local phase bodies."""

    rank: int
    block: tuple[int, int]
    meter: FlopMeter
    ledger: MemoryLedger

    def all_reduce_sum(self, payload):
        raise ClusterProtocolError(
            "collective communication attempted inside a local compute phase"
        )


def _ceil_log2(p: int) -> int:
    return (p - 1).bit_length()


class VirtualCluster:
    """P virtual processors over a column partition, executed in lockstep.

    ``workers`` sets how many real threads run each local phase; results and
    counters are functions of the program and P only, never of the thread
    count.
    """

    def __init__(self, partition: ColumnPartition, workers: int = 1):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.partition = partition
        self.P = partition.P
        self.rounds_per_collective = _ceil_log2(self.P)
        self.meters = [FlopMeter() for _ in range(self.P)]
        self.ledgers = [MemoryLedger() for _ in range(self.P)]
        self.rank_counters = [CostCounters() for _ in range(self.P)]
        self.critical = CostCounters()
        self._contexts = [
            ProcContext(
                rank=p,
                block=partition.block(p),
                meter=self.meters[p],
                ledger=self.ledgers[p],
            )
            for p in range(self.P)
        ]
        self._in_local_phase = False
        self._pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def __enter__(self) -> "VirtualCluster":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def local_phase(self, fn: Callable[[ProcContext], Any]) -> list:
        """Run fn on every rank; returns results in rank order.

        Per-rank flop deltas go to that rank's counters; the critical path
        takes the maximum delta of the phase.
        """
        if self._in_local_phase:
            raise ClusterProtocolError("local phases cannot nest")
        before = [m.flops for m in self.meters]
        self._in_local_phase = True
        try:
            if self._pool is None:
                results = [fn(ctx) for ctx in self._contexts]
            else:
                results = list(self._pool.map(fn, self._contexts))
        finally:
            self._in_local_phase = False
        deltas = [m.flops - b for m, b in zip(self.meters, before)]
        for p, delta in enumerate(deltas):
            self.rank_counters[p].flops += delta
            if self.ledgers[p].peak > self.rank_counters[p].mem_peak:
                self.rank_counters[p].mem_peak = self.ledgers[p].peak
        self.critical.flops += max(deltas)
        peak = max(l.peak for l in self.ledgers)
        if peak > self.critical.mem_peak:
            self.critical.mem_peak = peak
        return results

    def all_reduce_sum(self, payloads: Sequence[np.ndarray]) -> np.ndarray:
        """Sum equal-length per-rank payloads elementwise and replicate.

        The association order is a fixed left-to-right pairwise tree over
        ranks.  Counters per rank and on the critical path: ceil(log2 P)
        rounds, full payload words per round, one addition flop per summed
        word per round.
        """
        if self._in_local_phase:
            raise ClusterProtocolError(
                "collective communication attempted inside a local compute phase"
            )
        if len(payloads) != self.P:
            raise ValueError(f"expected {self.P} payloads, got {len(payloads)}")
        size = payloads[0].shape[0]
        for p, payload in enumerate(payloads):
            if payload.shape != (size,):
                raise ValueError(
                    f"rank {p} payload has shape {payload.shape}, expected ({size},)"
                )
        level = [np.array(p, dtype=float) for p in payloads]
        while len(level) > 1:
            level = [
                level[i] + level[i + 1] if i + 1 < len(level) else level[i]
                for i in range(0, len(level), 2)
            ]
        rounds = self.rounds_per_collective
        for counters in self.rank_counters:
            counters.messages += rounds
            counters.words += size * rounds
            counters.flops += size * rounds
        self.critical.messages += rounds
        self.critical.words += size * rounds
        self.critical.flops += size * rounds
        return level[0]


def spmd_execute(
    cluster: VirtualCluster, program: Callable[[VirtualCluster], Any]
) -> tuple[Any, CostCounters]:
    """Run a phase-structured program and return (result, critical counters).

    The counters are the cluster's cumulative critical-path totals after the
    program finishes; pass a fresh cluster to cost a single program.
    """
    result = program(cluster)
    return result, cluster.critical.snapshot()
