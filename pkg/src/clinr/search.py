"""Tabu-search optimization of verification sequences.

global_optimize explores the graph of ordered stabilizer r-tuples by
replacing one row at a time and scoring candidates with a (Monte-Carlo)
cost function. proxy_optimize explores the quotient of that graph by
GL_r(Z2) -- the Grassmann graph of rank-r subgroups -- scoring with the
precomputed proxy cost, and two_step_optimize chains the two. Only
logical-error-rate evaluations are counted in traces; proxy evaluations
are free.
"""

from __future__ import annotations

import dataclasses
from collections import deque
from dataclasses import dataclass, field
from math import prod
from typing import Callable, Iterable

import numpy as np

from .builder import ClinrProgram, VerificationSequence
from .pauli import (
    GeneratorSet,
    PauliOp,
    canonical_form,
    in_span,
    multiply,
    rank,
    sample_uniform_element,
    subgroup_key,
)
from .proxy import OmegaTable, proxy

CostFunction = Callable[[ClinrProgram, int], tuple[float, float]]


@dataclass(frozen=True)
class SearchParams:
    """Knobs shared by all optimizers.

    `candidates` is the number of neighbors scored per iteration and
    `tabu_capacity` the FIFO tabu-list length. `max_evaluations`, when set,
    stops a run as soon as that many cost evaluations have been consumed.
    """

    r: int
    tabu_capacity: int = 10
    candidates: int = 5
    iterations: int = 100
    shots: int = 50_000
    seed: int = 0
    max_evaluations: int | None = None

    def __post_init__(self) -> None:
        if min(self.r, self.tabu_capacity, self.candidates, self.shots) < 1:
            raise ValueError("r, tabu_capacity, candidates and shots must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")

    def reseeded(self, label: int) -> SearchParams:
        return dataclasses.replace(self, seed=derive_seed(self.seed, label))


def derive_seed(seed: int, label: int) -> int:
    """Stable derived seed for a sub-stream."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(label,))
    return int(ss.generate_state(1, np.uint64)[0])


class TabuList:
    """Fixed-capacity FIFO membership list."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._order: deque = deque()
        self._members: set = set()

    def __contains__(self, key) -> bool:
        return key in self._members

    def __len__(self) -> int:
        return len(self._order)

    def add(self, key) -> None:
        self._order.append(key)
        self._members.add(key)
        if len(self._order) > self.capacity:
            evicted = self._order.popleft()
            if evicted not in self._order:
                self._members.discard(evicted)


@dataclass(frozen=True)
class TraceRecord:
    eval_index: int
    candidate_key: str
    cost: float
    stderr: float
    accepted: bool
    best_so_far: float


@dataclass
class OptimizationTrace:
    """Per-evaluation log; the index counts cost evaluations only."""

    records: list[TraceRecord] = field(default_factory=list)

    @property
    def evaluations(self) -> int:
        return len(self.records)

    def best_curve(self) -> list[float]:
        return [rec.best_so_far for rec in self.records]

    def rows(self) -> list[tuple]:
        return [
            (r.eval_index, r.cost, r.stderr, r.best_so_far, r.candidate_key,
             int(r.accepted))
            for r in self.records
        ]


def sequence_fingerprint(v: GeneratorSet) -> tuple[int, ...]:
    """Order-sensitive key of a sequence (concatenated row vectors)."""
    return tuple(v.row_vecs())


def sequence_label(v: GeneratorSet) -> str:
    return "|".join(str(row) for row in v.rows)


def random_rank_r_sequence(
    s_gens: GeneratorSet, r: int, rng: np.random.Generator, max_tries: int = 10_000
) -> VerificationSequence:
    """r independent uniform elements of <s_gens>; resampled until rank r."""
    for _ in range(max_tries):
        rows = tuple(sample_uniform_element(s_gens, rng) for _ in range(r))
        seq = VerificationSequence(s_gens.width, rows)
        if rank(seq) == r:
            return seq
    raise RuntimeError(f"could not draw a rank-{r} sequence from the given group")


def alpha(m_matrix, v: GeneratorSet) -> GeneratorSet:
    """Row-mixing action: output row i is the product of v's rows selected
    by row i of the GF(2) matrix. A group action when the matrix is
    invertible."""
    rows_m = [list(row) for row in np.asarray(m_matrix, dtype=np.uint8)]
    r = len(v.rows)
    if len(rows_m) != r or any(len(row) != r for row in rows_m):
        raise ValueError(f"matrix must be {r}x{r}")
    out = []
    for row in rows_m:
        acc = PauliOp.identity(v.width)
        for j, m_ij in enumerate(row):
            if m_ij & 1:
                acc = multiply(acc, v.rows[j])
        out.append(acc)
    return type(v)(v.width, tuple(out))


def random_invertible_matrix(r: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform element of GL_r(Z2) by rejection."""
    while True:
        m = rng.integers(0, 2, size=(r, r), dtype=np.uint8)
        if _gf2_rank([_row_to_int(m[i]) for i in range(r)]) == r:
            return m


def _row_to_int(bits) -> int:
    out = 0
    for k, b in enumerate(bits):
        if b:
            out |= 1 << k
    return out


def _gf2_rank(vecs: list[int]) -> int:
    basis: list[int] = []
    for v in vecs:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
            basis.sort(reverse=True)
    return len(basis)


def count_sequences(n: int, r: int) -> int:
    """Ordered independent r-tuples over a rank-2n stabilizer group."""
    if not 0 <= r <= 2 * n:
        raise ValueError(f"r must be in 0..{2 * n}")
    return prod((1 << (2 * n)) - (1 << i) for i in range(r))


def count_subgroups(n: int, r: int) -> int:
    """Rank-r subgroups: sequences divided by |GL_r(Z2)| orderings."""
    orderings = prod((1 << r) - (1 << i) for i in range(r))
    total = count_sequences(n, r)
    if r and total % orderings:
        raise AssertionError("subgroup count was not an integer")
    return total // orderings if r else 1


def _replace_row(
    v: VerificationSequence, j: int, s_gens: GeneratorSet,
    rng: np.random.Generator, max_tries: int = 100
) -> VerificationSequence | None:
    """Candidate with row j resampled; None if no valid draw in max_tries."""
    for _ in range(max_tries):
        row = sample_uniform_element(s_gens, rng)
        rows = v.rows[:j] + (row,) + v.rows[j + 1 :]
        cand = VerificationSequence(v.width, rows)
        if rank(cand) == len(rows):
            return cand
    return None


def global_optimize(
    prog_builder: Callable[[VerificationSequence], ClinrProgram],
    s_gens: GeneratorSet,
    params: SearchParams,
    cost: CostFunction,
) -> tuple[VerificationSequence, OptimizationTrace]:
    """Tabu search over ordered verification sequences.

    Per iteration one row position is drawn, `candidates` replacements are
    scored (skipping tabu sequences), a strictly better candidate becomes
    the incumbent, and the incumbent's fingerprint is appended to the FIFO
    tabu list. Candidates that cannot reach rank r in bounded retries are
    dropped.
    """
    rng = np.random.default_rng(derive_seed(params.seed, 0))
    trace = OptimizationTrace()
    tabu: TabuList = TabuList(params.tabu_capacity)

    state = {"best": float("inf"), "evals": 0}

    def budget_left() -> bool:
        return (
            params.max_evaluations is None
            or state["evals"] < params.max_evaluations
        )

    def evaluate(v: VerificationSequence) -> float:
        state["evals"] += 1
        eval_seed = derive_seed(params.seed, state["evals"])
        value, err = cost(prog_builder(v), eval_seed)
        accepted = value < state["best"]
        if accepted:
            state["best"] = value
        trace.records.append(
            TraceRecord(state["evals"], sequence_label(v), value, err,
                        accepted, state["best"])
        )
        return value

    v_opt = random_rank_r_sequence(s_gens, params.r, rng)
    p_opt = evaluate(v_opt)

    for _ in range(params.iterations):
        if not budget_left():
            break
        j = int(rng.integers(params.r))
        candidates = []
        for _ in range(params.candidates):
            cand = _replace_row(v_opt, j, s_gens, rng)
            if cand is not None:
                candidates.append(cand)
        for cand in candidates:
            if sequence_fingerprint(cand) in tabu:
                continue
            if not budget_left():
                break
            p_cand = evaluate(cand)
            if p_cand < p_opt:
                v_opt, p_opt = cand, p_cand
        if sequence_fingerprint(v_opt) not in tabu:
            tabu.add(sequence_fingerprint(v_opt))
    return v_opt, trace


def proxy_optimize(
    s_gens: GeneratorSet, omega: OmegaTable, params: SearchParams
) -> GeneratorSet:
    """Tabu search on the Grassmann quotient, scored by the proxy cost.

    Neighbors share r-1 uniform elements of the incumbent subgroup and try
    `candidates` choices of the final row from outside it; tabu keys are
    canonical subgroup forms, so GL-equivalent sequences are one vertex.
    Consumes no logical-error-rate evaluations. Returns the canonical form
    of the best subgroup found.
    """
    rng = np.random.default_rng(derive_seed(params.seed, 0))
    tabu: TabuList = TabuList(params.tabu_capacity)

    v_opt = random_rank_r_sequence(s_gens, params.r, rng)
    p_opt = proxy(v_opt, omega)

    for _ in range(params.iterations):
        shared = None
        for _ in range(100):
            attempt = tuple(
                sample_uniform_element(v_opt, rng) for _ in range(params.r - 1)
            )
            if rank(GeneratorSet(v_opt.width, attempt)) == params.r - 1:
                shared = attempt
                break
        if shared is None:
            continue
        candidates = []
        for _ in range(params.candidates):
            for _ in range(100):
                last = sample_uniform_element(s_gens, rng)
                if not in_span(last, v_opt):
                    candidates.append(
                        VerificationSequence(v_opt.width, shared + (last,))
                    )
                    break
        for cand in candidates:
            if subgroup_key(cand) in tabu:
                continue
            p_cand = proxy(cand, omega)
            if p_cand < p_opt:
                v_opt, p_opt = cand, p_cand
        if subgroup_key(v_opt) not in tabu:
            tabu.add(subgroup_key(v_opt))
    return canonical_form(v_opt)


def two_step_optimize(
    prog_builder: Callable[[VerificationSequence], ClinrProgram],
    s_gens: GeneratorSet,
    omega: OmegaTable,
    params: SearchParams,
    cost: CostFunction,
) -> tuple[VerificationSequence, OptimizationTrace]:
    """Proxy-first optimization: find a good rank-r verification subgroup
    on the quotient, then run the global search inside it. Both stages use
    the same parameters; the returned trace covers only the second stage."""
    subgroup = proxy_optimize(s_gens, omega, params.reseeded(101))
    return global_optimize(prog_builder, subgroup, params.reseeded(102), cost)
