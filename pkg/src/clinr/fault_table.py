"""Precomputed linear fault signatures for fast Monte-Carlo sampling.

Everything a single fault does to a program is GF(2)-linear: the final
output-register error (including the protocol's automatic Pauli
corrections) and the measurement-record flips are XORs of per-fault
signatures. A backward sweep over the circuit computes, for every basis
frame X_q / Z_q at every insertion point, its (output, records)
contribution; fault events are then small XOR combinations of those
columns. A Monte-Carlo shot reduces to XOR-accumulating the signatures of
the locations that fired.

Register widths and record counts must fit in 64 bits for the packed
numpy representation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .builder import ClinrProgram
from .circuits import BARRIER, CX, CZ, H, MX, MZ, PREPZ, S, SDG, Circuit, Op
from .noise import FLIP, GATE, IDLE, FaultLocation, NoiseParams, schedule_faults

_U64_ONE = np.uint64(1)


@dataclass
class FaultTable:
    """Sampling-ready fault data for one program or circuit.

    Locations carry rates and a stage: stage 0 faults happen during the
    restartable prepare/verify attempt, stage 1 faults after acceptance.
    Events are indexed ev_offset[loc] .. ev_offset[loc]+ev_count[loc]-1 and
    carry packed signatures on the output register and the record slots.
    """

    width: int
    n_out: int
    n_records: int
    vmask: int
    measured_output: bool
    has_restart: bool
    locations: list[FaultLocation]
    rate: np.ndarray
    stage: np.ndarray
    is_input: np.ndarray
    ev_offset: np.ndarray
    ev_count: np.ndarray
    ev_loc: np.ndarray
    ev_out_x: np.ndarray
    ev_out_z: np.ndarray
    ev_rec: np.ndarray
    ev_p: np.ndarray


def _backward_columns(
    ops: tuple[Op, ...],
    width: int,
    out_map: dict[int, int],
    corrections: dict[int, tuple[int, int]],
    skip_end_init: set[int],
) -> list[tuple[list[int], list[int], list[int]]]:
    """Column triples (out_x, out_z, rec) per op insertion point.

    Entry t maps a frame present right after op t to its final
    contribution. Position q holds the column of a basis X_q frame and
    position width+q that of Z_q.
    """
    n_pos = 2 * width
    col_x = [0] * n_pos
    col_z = [0] * n_pos
    col_r = [0] * n_pos
    for q, out_bit in out_map.items():
        if q not in skip_end_init:
            col_x[q] = 1 << out_bit
            col_z[width + q] = 1 << out_bit

    snapshots: list[tuple[list[int], list[int], list[int]]] = [None] * len(ops)  # type: ignore[list-item]

    def xor_into(dst: int, src: int) -> None:
        col_x[dst] ^= col_x[src]
        col_z[dst] ^= col_z[src]
        col_r[dst] ^= col_r[src]

    for t in range(len(ops) - 1, -1, -1):
        snapshots[t] = (col_x.copy(), col_z.copy(), col_r.copy())
        op = ops[t]
        name = op.name
        if name == CX:
            c, tg = op.qubits
            xor_into(c, tg)
            xor_into(width + tg, width + c)
        elif name == CZ:
            a, b = op.qubits
            xor_into(a, width + b)
            xor_into(b, width + a)
        elif name == H:
            q = op.qubits[0]
            col_x[q], col_x[width + q] = col_x[width + q], col_x[q]
            col_z[q], col_z[width + q] = col_z[width + q], col_z[q]
            col_r[q], col_r[width + q] = col_r[width + q], col_r[q]
        elif name in (S, SDG):
            q = op.qubits[0]
            xor_into(q, width + q)
        elif name == PREPZ:
            q = op.qubits[0]
            col_x[q] = col_z[q] = col_r[q] = 0
            col_x[width + q] = col_z[width + q] = col_r[width + q] = 0
        elif name in (MX, MZ):
            q = op.qubits[0]
            pos = (width + q) if name == MX else q
            cx, cz = corrections.get(op.record, (0, 0))
            col_x[pos] ^= cx
            col_z[pos] ^= cz
            col_r[pos] ^= 1 << op.record
        # X, Z and BARRIER leave frames alone.
    return snapshots


def build_fault_table(
    prog: ClinrProgram | Circuit,
    params: NoiseParams,
    *,
    idle_input_during_prep: bool = False,
) -> FaultTable:
    """Schedule faults and precompute every event's linear signature."""
    if isinstance(prog, ClinrProgram):
        circuit = prog.circuit
        output_qubits = prog.output_qubits
        corrections = {slot: (p.x, p.z) for slot, p in prog.correction_rule}
        verification = prog.verification_records
        has_restart = prog.restart_boundary is not None
        inject_start = prog.phase_bounds("INJECT")[0]
        input_set = set(prog.input_qubits)
    else:
        circuit = prog
        output_qubits = tuple(range(prog.width))
        corrections = {}
        verification = ()
        has_restart = False
        inject_start = 0
        input_set = set()

    width = circuit.width
    n_records = circuit.record_count
    if width > 64 or n_records > 64 or len(output_qubits) > 64:
        raise ValueError("fault tables are limited to 64 qubits/records")

    measured = {op.qubits[0] for op in circuit.ops if op.is_measurement}
    out_map = {q: k for k, q in enumerate(output_qubits)}
    skip = {q for q in output_qubits if q in measured}
    measured_output = bool(output_qubits) and len(skip) == len(output_qubits)

    snapshots = _backward_columns(circuit.ops, width, out_map, corrections, skip)

    locs = schedule_faults(circuit, params)
    if not idle_input_during_prep and has_restart:
        locs = [
            loc
            for loc in locs
            if not (
                loc.kind == IDLE
                and loc.op_index < inject_start
                and set(loc.support) <= input_set
            )
        ]

    n_locs = len(locs)
    rate = np.empty(n_locs, dtype=np.float64)
    stage = np.empty(n_locs, dtype=np.int8)
    is_input = np.zeros(n_locs, dtype=bool)
    ev_offset = np.empty(n_locs, dtype=np.int64)
    ev_count = np.empty(n_locs, dtype=np.int64)

    flat_x: list[int] = []
    flat_z: list[int] = []
    flat_r: list[int] = []
    flat_loc: list[int] = []
    flat_p: list[float] = []

    for li, loc in enumerate(locs):
        rate[li] = loc.rate
        stage[li] = 0 if (has_restart and loc.op_index < inject_start) else 1
        is_input[li] = bool(loc.support) and set(loc.support) <= input_set
        ev_offset[li] = len(flat_x)
        if loc.kind == FLIP:
            cx, cz = corrections.get(loc.record, (0, 0))
            flat_x.append(cx)
            flat_z.append(cz)
            flat_r.append(1 << loc.record)
            flat_loc.append(li)
            flat_p.append(loc.rate)
        else:
            col_x, col_z, col_r = snapshots[loc.op_index]
            parts = []
            for q in loc.support:
                base_x = (col_x[q], col_z[q], col_r[q])
                base_z = (col_x[width + q], col_z[width + q], col_r[width + q])
                parts.append((base_x, base_z))
            p_tilde = loc.p_tilde
            for code in range(1, loc.num_errors + 1):
                acc_x, acc_z, acc_r = 0, 0, 0
                for k in range(loc.weight):
                    sel = (code >> (2 * k)) & 3
                    if sel & 1:
                        acc_x ^= parts[k][0][0]
                        acc_z ^= parts[k][0][1]
                        acc_r ^= parts[k][0][2]
                    if sel & 2:
                        acc_x ^= parts[k][1][0]
                        acc_z ^= parts[k][1][1]
                        acc_r ^= parts[k][1][2]
                flat_x.append(acc_x)
                flat_z.append(acc_z)
                flat_r.append(acc_r)
                flat_loc.append(li)
                flat_p.append(p_tilde)
        ev_count[li] = len(flat_x) - ev_offset[li]

    return FaultTable(
        width=width,
        n_out=len(output_qubits),
        n_records=n_records,
        vmask=sum(1 << s for s in verification),
        measured_output=measured_output,
        has_restart=has_restart,
        locations=locs,
        rate=rate,
        stage=stage,
        is_input=is_input,
        ev_offset=ev_offset,
        ev_count=ev_count,
        ev_loc=np.asarray(flat_loc, dtype=np.int64),
        ev_out_x=np.asarray(flat_x, dtype=np.uint64),
        ev_out_z=np.asarray(flat_z, dtype=np.uint64),
        ev_rec=np.asarray(flat_r, dtype=np.uint64),
        ev_p=np.asarray(flat_p, dtype=np.float64),
    )


# ---------------------------------------------------------------------------
# Vectorized forward frame propagation (independent of the backward sweep)
# ---------------------------------------------------------------------------

def apply_op_to_frames(op: Op, xs: np.ndarray, zs: np.ndarray) -> None:
    """Apply one op's frame action in place to packed uint64 frames."""
    name = op.name
    if name == CX:
        c, t = op.qubits
        xs ^= ((xs >> np.uint64(c)) & _U64_ONE) << np.uint64(t)
        zs ^= ((zs >> np.uint64(t)) & _U64_ONE) << np.uint64(c)
    elif name == CZ:
        a, b = op.qubits
        za = ((xs >> np.uint64(b)) & _U64_ONE) << np.uint64(a)
        zb = ((xs >> np.uint64(a)) & _U64_ONE) << np.uint64(b)
        zs ^= za
        zs ^= zb
    elif name == H:
        q = np.uint64(op.qubits[0])
        diff = ((xs >> q) ^ (zs >> q)) & _U64_ONE
        xs ^= diff << q
        zs ^= diff << q
    elif name in (S, SDG):
        q = op.qubits[0]
        zs ^= ((xs >> np.uint64(q)) & _U64_ONE) << np.uint64(q)
    elif name == PREPZ:
        mask = np.uint64(~(1 << op.qubits[0]) & ((1 << 64) - 1))
        xs &= mask
        zs &= mask
    # X, Z, BARRIER and measurements leave frames alone.


def forward_propagate_events(
    circuit: Circuit,
    op_indices: np.ndarray,
    init_x: np.ndarray,
    init_z: np.ndarray,
    corrections: dict[int, tuple[int, int]] | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Propagate many single faults through a circuit in one pass.

    `op_indices` (nondecreasing) gives the op after which each fault is
    inserted; a fault becomes active once its op has executed. Returns the
    final frames, the record-flip masks, and the correction Paulis
    accumulated from those flips.
    """
    op_indices = np.asarray(op_indices, dtype=np.int64)
    if np.any(np.diff(op_indices) < 0):
        raise ValueError("op_indices must be nondecreasing")
    xs = np.asarray(init_x, dtype=np.uint64).copy()
    zs = np.asarray(init_z, dtype=np.uint64).copy()
    rec = np.zeros(len(xs), dtype=np.uint64)
    corr_x = np.zeros(len(xs), dtype=np.uint64)
    corr_z = np.zeros(len(xs), dtype=np.uint64)
    corrections = corrections or {}

    count = 0
    for t, op in enumerate(circuit.ops):
        if count:
            if op.is_measurement:
                q = np.uint64(op.qubits[0])
                basis = zs if op.name == MX else xs
                flip = (basis[:count] >> q) & _U64_ONE
                rec[:count] ^= flip << np.uint64(op.record)
                cx, cz = corrections.get(op.record, (0, 0))
                if cx or cz:
                    corr_x[:count] ^= flip * np.uint64(cx)
                    corr_z[:count] ^= flip * np.uint64(cz)
            else:
                apply_op_to_frames(op, xs[:count], zs[:count])
        count = int(np.searchsorted(op_indices, t, side="right"))
    return xs, zs, rec, corr_x, corr_z
