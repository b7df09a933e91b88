"""Ion-chain circuit-level noise: fault locations, rates and sampling.

Scheduling assumptions: unitary gates execute sequentially, one time step
each; maximal runs of adjacent preparations (and, separately, measurements)
form a single simultaneous layer. Depolarizing noise follows every
preparation and unitary on its support, measurement outcomes flip with
their own rate, and every qubit outside the support of a step accrues idle
noise (scaled by tau_m during measurement layers). BARRIER closes any open
layer and contributes neither noise nor a time step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .circuits import BARRIER, MEASUREMENTS, PREPZ, Circuit
from .pauli import PauliOp

GATE = "gate"
IDLE = "idle"
FLIP = "flip"


@dataclass(frozen=True)
class NoiseParams:
    """Base rate p and measurement-time factor tau_m.

    Derived rates: two-qubit gates p, single-qubit ops (incl. preparations)
    p/10, measurement flips p/10, idling p/100 per step, idling through a
    measurement layer tau_m * p/100.
    """

    p: float = 1e-4
    tau_m: float = 30.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {self.p}")
        if self.tau_m < 0.0:
            raise ValueError(f"tau_m must be nonnegative, got {self.tau_m}")
        if self.idle_meas > 1.0:
            raise ValueError("tau_m * p / 100 exceeds 1; not a probability")

    @property
    def two_qubit(self) -> float:
        return self.p

    @property
    def single_qubit(self) -> float:
        return self.p / 10.0

    @property
    def meas_flip(self) -> float:
        return self.p / 10.0

    @property
    def idle(self) -> float:
        return self.p / 100.0

    @property
    def idle_meas(self) -> float:
        return self.tau_m * self.p / 100.0


@dataclass(frozen=True)
class FaultLocation:
    """One enumerable noise site.

    `op_index` is the circuit op right after which the error is inserted
    (for layer idles, the last op of the layer). For depolarizing kinds
    the location carries 4**weight - 1 equiprobable nontrivial Paulis on
    `support`; for FLIP kind `record` is the flipped measurement slot.
    """

    index: int
    kind: str
    width: int
    support: tuple[int, ...]
    rate: float
    op_index: int
    record: int | None = None

    @property
    def weight(self) -> int:
        return len(self.support)

    @property
    def num_errors(self) -> int:
        return 1 if self.kind == FLIP else 4 ** self.weight - 1

    @property
    def p_tilde(self) -> float:
        return self.rate / self.num_errors

    def error(self, code: int) -> PauliOp:
        """Nontrivial Pauli number `code` in 1..4**w-1 on the full register.

        Per support qubit, two code bits select I/X/Z/Y as 0/1/2/3.
        """
        if self.kind == FLIP:
            raise ValueError("flip locations carry no Pauli errors")
        if not 1 <= code < 4 ** self.weight:
            raise ValueError(f"error code {code} out of range")
        x = 0
        z = 0
        for k, q in enumerate(self.support):
            part = (code >> (2 * k)) & 3
            x |= (part & 1) << q
            z |= (part >> 1) << q
        return PauliOp(self.width, x, z)


@dataclass(frozen=True)
class FaultEvent:
    """A concrete fired fault: a Pauli on the register or a record flip."""

    location: int
    pauli: PauliOp | None = None
    record: int | None = None


def schedule_faults(c: Circuit, params: NoiseParams) -> list[FaultLocation]:
    """Enumerate the fault locations of a circuit, in deterministic order."""
    locs: list[FaultLocation] = []
    width = c.width
    all_qubits = set(range(width))

    def add(kind: str, support: tuple[int, ...], rate: float, op_index: int,
            record: int | None = None) -> None:
        locs.append(FaultLocation(len(locs), kind, width, support, rate,
                                  op_index, record))

    ops = c.ops
    t = 0
    while t < len(ops):
        op = ops[t]
        if op.name == BARRIER:
            t += 1
            continue
        if op.name == PREPZ:
            run_end = t
            while run_end + 1 < len(ops) and ops[run_end + 1].name == PREPZ:
                run_end += 1
            busy: set[int] = set()
            for k in range(t, run_end + 1):
                add(GATE, ops[k].qubits, params.single_qubit, k)
                busy.update(ops[k].qubits)
            for q in sorted(all_qubits - busy):
                add(IDLE, (q,), params.idle, run_end)
            t = run_end + 1
        elif op.name in MEASUREMENTS:
            run_end = t
            while run_end + 1 < len(ops) and ops[run_end + 1].name in MEASUREMENTS:
                run_end += 1
            busy = set()
            for k in range(t, run_end + 1):
                add(FLIP, (), params.meas_flip, k, record=ops[k].record)
                busy.update(ops[k].qubits)
            for q in sorted(all_qubits - busy):
                add(IDLE, (q,), params.idle_meas, run_end)
            t = run_end + 1
        else:
            rate = params.two_qubit if len(op.qubits) == 2 else params.single_qubit
            add(GATE, op.qubits, rate, t)
            for q in sorted(all_qubits - set(op.qubits)):
                add(IDLE, (q,), params.idle, t)
            t += 1
    return locs


def sample_faults(
    locs: list[FaultLocation], rng: np.random.Generator
) -> list[FaultEvent]:
    """Fire each location independently with probability rate."""
    events = []
    for loc in locs:
        if loc.rate <= 0.0 or rng.random() >= loc.rate:
            continue
        if loc.kind == FLIP:
            events.append(FaultEvent(loc.index, record=loc.record))
        else:
            code = int(rng.integers(1, loc.num_errors + 1))
            events.append(FaultEvent(loc.index, pauli=loc.error(code)))
    return events


def enumerate_single_faults(
    locs: list[FaultLocation],
) -> Iterator[tuple[FaultEvent, float]]:
    """Yield every (location, error) pair once with its probability p_tilde.

    Summing the yielded probabilities reproduces the total location mass
    sum_i p_i exactly.
    """
    for loc in locs:
        if loc.kind == FLIP:
            yield FaultEvent(loc.index, record=loc.record), loc.rate
        else:
            p_tilde = loc.p_tilde
            for code in range(1, loc.num_errors + 1):
                yield FaultEvent(loc.index, pauli=loc.error(code)), p_tilde
