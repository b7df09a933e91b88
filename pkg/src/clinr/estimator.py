"""Monte-Carlo and exact estimation of logical error rates.

estimate_plog samples shots against a precomputed fault table: each shot
draws the set of fired locations, XORs their signatures, restarts the
prepare/verify attempt while any verification record is nonzero, and
counts a logical error iff the corrected output-register error is
nontrivial. exact_output_distribution is an independent small-instance
oracle that convolves every location's propagated error distribution, and
exhaustive_single_fault_check classifies every single preparation fault
by forward simulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .builder import ClinrProgram
from .circuits import Circuit, propagate
from .fault_table import FaultTable, build_fault_table, forward_propagate_events
from .noise import FLIP, NoiseParams, schedule_faults
from .pauli import PauliOp

_U64_ONE = np.uint64(1)


@dataclass(frozen=True)
class EstimateResult:
    p_log: float
    stderr: float
    restart_rate: float
    shots_used: int
    plog_evaluations_consumed: int = 1


@dataclass(frozen=True)
class ShotOutcomes:
    """Per-shot record masks and corrected output errors."""

    rec: np.ndarray
    out_x: np.ndarray
    out_z: np.ndarray


def _rate_groups(table: FaultTable, stage: int) -> list[tuple[float, np.ndarray]]:
    sel = np.nonzero((table.stage == stage) & (table.rate > 0.0))[0]
    groups = []
    for rate in np.unique(table.rate[sel]):
        groups.append((float(rate), sel[table.rate[sel] == rate]))
    return groups


def _distinct_cells(total: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """A uniform k-subset of range(total), as the first k distinct draws."""
    if k >= total:
        return np.arange(total, dtype=np.int64)
    chosen = np.unique(rng.integers(0, total, size=k, dtype=np.int64))
    while chosen.size < k:
        extra = rng.integers(0, total, size=k - chosen.size, dtype=np.int64)
        chosen = np.unique(np.concatenate([chosen, extra]))
    return chosen


def _sample_stage(
    table: FaultTable,
    groups: list[tuple[float, np.ndarray]],
    n_active: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Fired (shot position, event index) pairs for one stage of one round."""
    shot_parts = []
    ev_parts = []
    for rate, locs in groups:
        total = locs.size * n_active
        fired = int(rng.binomial(total, rate))
        if fired == 0:
            continue
        cells = _distinct_cells(total, fired, rng)
        loc_ids = locs[cells // n_active]
        shot_parts.append(cells % n_active)
        counts = table.ev_count[loc_ids]
        ev_parts.append(table.ev_offset[loc_ids] + rng.integers(0, counts))
    if not shot_parts:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(shot_parts), np.concatenate(ev_parts)


def _xor_accumulate(acc: np.ndarray, pos: np.ndarray, vals: np.ndarray) -> None:
    np.bitwise_xor.at(acc, pos, vals)


def _error_mask(table: FaultTable, out_x: np.ndarray, out_z: np.ndarray) -> np.ndarray:
    if table.measured_output:
        return out_x != 0
    return (out_x | out_z) != 0


def estimate_plog(
    prog: ClinrProgram | Circuit,
    params: NoiseParams,
    shots: int,
    seed: int | np.random.Generator | None = None,
    *,
    r_max: int = 100,
    idle_input_during_prep: bool = False,
) -> EstimateResult:
    """Monte-Carlo logical error rate of a program or plain circuit.

    A shot of a restartable program resamples the prepare/verify faults
    until every verification record is zero, then samples the injection
    faults and checks the corrected output. After r_max rejected attempts
    the shot counts as a logical error. With idle_input_during_prep the
    input register accrues idle noise through every attempt (off by
    default: the ion-chain comparison holds the input out of the trap
    until injection). Deferred programs post-select instead: failed shots
    are discarded and reported through restart_rate.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    table = build_fault_table(
        prog, params, idle_input_during_prep=idle_input_during_prep
    )
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    out_x = np.zeros(shots, dtype=np.uint64)
    out_z = np.zeros(shots, dtype=np.uint64)
    vmask = np.uint64(table.vmask)

    if table.has_restart:
        groups0 = _rate_groups(table, 0)
        groups1 = _rate_groups(table, 1)
        active = np.arange(shots, dtype=np.int64)
        restarts = 0
        for _ in range(r_max):
            if active.size == 0:
                break
            n_active = active.size
            att_x = np.zeros(n_active, dtype=np.uint64)
            att_z = np.zeros(n_active, dtype=np.uint64)
            att_r = np.zeros(n_active, dtype=np.uint64)
            sp, ev = _sample_stage(table, groups0, n_active, rng)
            if sp.size:
                from_input = table.is_input[table.ev_loc[ev]]
                if from_input.any():
                    gpos = active[sp[from_input]]
                    _xor_accumulate(out_x, gpos, table.ev_out_x[ev[from_input]])
                    _xor_accumulate(out_z, gpos, table.ev_out_z[ev[from_input]])
                res = ~from_input
                _xor_accumulate(att_x, sp[res], table.ev_out_x[ev[res]])
                _xor_accumulate(att_z, sp[res], table.ev_out_z[ev[res]])
                _xor_accumulate(att_r, sp[res], table.ev_rec[ev[res]])
            rejected = (att_r & vmask) != 0
            accepted = ~rejected
            good = active[accepted]
            out_x[good] ^= att_x[accepted]
            out_z[good] ^= att_z[accepted]
            restarts += int(rejected.sum())
            active = active[rejected]
        exhausted = np.zeros(shots, dtype=bool)
        exhausted[active] = True
        accepted_count = shots - active.size

        survivors = np.nonzero(~exhausted)[0]
        sp, ev = _sample_stage(table, groups1, survivors.size, rng)
        if sp.size:
            gpos = survivors[sp]
            _xor_accumulate(out_x, gpos, table.ev_out_x[ev])
            _xor_accumulate(out_z, gpos, table.ev_out_z[ev])
        errors = _error_mask(table, out_x, out_z) | exhausted
        p_log = float(errors.sum()) / shots
        attempts = restarts + accepted_count
        restart_rate = restarts / attempts if attempts else 0.0
        stderr = sqrt(p_log * (1.0 - p_log) / shots)
        return EstimateResult(p_log, stderr, restart_rate, shots)

    # No restart boundary: one pass; nonzero verification records are
    # discarded in post-selection (deferred CZNR) or absent entirely.
    rec = np.zeros(shots, dtype=np.uint64)
    sp, ev = _sample_stage(table, _rate_groups(table, 1), shots, rng)
    if sp.size:
        _xor_accumulate(out_x, sp, table.ev_out_x[ev])
        _xor_accumulate(out_z, sp, table.ev_out_z[ev])
        _xor_accumulate(rec, sp, table.ev_rec[ev])
    failed = (rec & vmask) != 0
    n_fail = int(failed.sum())
    n_ok = shots - n_fail
    errors = _error_mask(table, out_x, out_z) & ~failed
    if n_ok == 0:
        p_log = float("nan")
        stderr = float("nan")
    else:
        p_log = float(errors.sum()) / n_ok
        stderr = sqrt(p_log * (1.0 - p_log) / n_ok)
    restart_rate = n_fail / shots if table.vmask else 0.0
    return EstimateResult(p_log, stderr, restart_rate, shots)


def sample_outcomes(
    prog: ClinrProgram | Circuit,
    params: NoiseParams,
    shots: int,
    seed: int | np.random.Generator | None = None,
) -> ShotOutcomes:
    """Raw per-shot record masks and corrected outputs, without restarts.

    Only valid for programs that are executed to completion (no restart
    boundary); the caller applies its own acceptance and post-processing.
    """
    table = build_fault_table(prog, params)
    if table.has_restart:
        raise ValueError("sample_outcomes requires a program without restarts")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    out_x = np.zeros(shots, dtype=np.uint64)
    out_z = np.zeros(shots, dtype=np.uint64)
    rec = np.zeros(shots, dtype=np.uint64)
    sp, ev = _sample_stage(table, _rate_groups(table, 1), shots, rng)
    if sp.size:
        _xor_accumulate(out_x, sp, table.ev_out_x[ev])
        _xor_accumulate(out_z, sp, table.ev_out_z[ev])
        _xor_accumulate(rec, sp, table.ev_rec[ev])
    return ShotOutcomes(rec=rec, out_x=out_x, out_z=out_z)


def exact_output_distribution(
    c: Circuit, params: NoiseParams
) -> dict[PauliOp, float]:
    """Exact output-error distribution of a measurement-free circuit.

    Convolves the propagated error distribution of every fault location;
    exponential in width, so restricted to at most 8 qubits.
    """
    if c.has_measurements:
        raise ValueError("exact distribution requires a measurement-free circuit")
    if c.width > 8:
        raise ValueError("exact distribution is limited to 8 qubits")
    n = c.width
    size = 1 << (2 * n)
    dist = np.zeros(size, dtype=np.float64)
    dist[0] = 1.0
    idx = np.arange(size)
    for loc in schedule_faults(c, params):
        if loc.rate <= 0.0:
            continue
        new = (1.0 - loc.rate) * dist
        p_tilde = loc.p_tilde
        for code in range(1, loc.num_errors + 1):
            err = propagate(c, loc.error(code), loc.op_index + 1)
            new += p_tilde * dist[idx ^ err.to_vec()]
        dist = new
    return {PauliOp.from_vec(n, int(v)): float(dist[v]) for v in np.nonzero(dist)[0]}


@dataclass(frozen=True)
class SingleFaultReport:
    """Masses and counts of single preparation faults by outcome class."""

    detected_mass: float
    harmless_mass: float
    logical_mass: float
    detected_count: int
    harmless_count: int
    logical_count: int

    @property
    def total_mass(self) -> float:
        return self.detected_mass + self.harmless_mass + self.logical_mass


def exhaustive_single_fault_check(
    prog: ClinrProgram, params: NoiseParams
) -> SingleFaultReport:
    """Classify every single resource-preparation fault of a program.

    Each fault of the standalone resource-preparation schedule is injected
    into the program and run noiselessly forward: `detected` if any
    verification record fires, otherwise `logical` iff the corrected output
    error is nontrivial. The logical mass equals the proxy cost of the
    program's verification sequence by construction.
    """
    offset = prog.resource_qubits[0]
    if prog.resource_qubits != tuple(range(offset, offset + len(prog.resource_qubits))):
        raise ValueError("resource register must be contiguous")
    prep_start = prog.phase_bounds("PREP")[0]

    init_x: list[int] = []
    init_z: list[int] = []
    op_idx: list[int] = []
    masses: list[float] = []
    for loc in schedule_faults(prog.prep_resource_circuit, params):
        if loc.kind == FLIP:
            raise ValueError("preparation circuits cannot carry flip faults")
        for code in range(1, loc.num_errors + 1):
            err = loc.error(code)
            init_x.append(err.x << offset)
            init_z.append(err.z << offset)
            op_idx.append(prep_start + loc.op_index)
            masses.append(loc.p_tilde)

    corrections = {slot: (p.x, p.z) for slot, p in prog.correction_rule}
    xs, zs, rec, corr_x, corr_z = forward_propagate_events(
        prog.circuit,
        np.asarray(op_idx, dtype=np.int64),
        np.asarray(init_x, dtype=np.uint64),
        np.asarray(init_z, dtype=np.uint64),
        corrections,
    )
    vmask = np.uint64(sum(1 << s for s in prog.verification_records))
    detected = (rec & vmask) != 0

    n_events = len(init_x)
    out_x = corr_x.copy()
    out_z = corr_z.copy()
    measured = {op.qubits[0] for op in prog.circuit.ops if op.is_measurement}
    for k, q in enumerate(prog.output_qubits):
        if q in measured:
            continue
        out_x ^= ((xs >> np.uint64(q)) & _U64_ONE) << np.uint64(k)
        out_z ^= ((zs >> np.uint64(q)) & _U64_ONE) << np.uint64(k)
    nontrivial = (out_x != 0) if all(
        q in measured for q in prog.output_qubits
    ) else ((out_x | out_z) != 0)

    logical = ~detected & nontrivial
    harmless = ~detected & ~nontrivial
    mass = np.asarray(masses, dtype=np.float64)
    return SingleFaultReport(
        detected_mass=float(mass[detected].sum()),
        harmless_mass=float(mass[harmless].sum()),
        logical_mass=float(mass[logical].sum()),
        detected_count=int(detected.sum()),
        harmless_count=int(harmless.sum()),
        logical_count=int(logical.sum()),
    )
