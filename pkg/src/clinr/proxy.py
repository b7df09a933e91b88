"""Single-pass proxy cost over precomputed propagated fault sets.

The table stores, for every single depolarizing fault of the resource
preparation circuit (gate and idle locations alike), the fault's
propagated end-of-preparation Pauli and its probability. Whether an entry
lies outside the perp of the full stabilizer group is independent of the
verification sequence and is precomputed; evaluating a sequence then costs
r symplectic products per entry: the proxy is the total probability of
entries that commute with every verification row yet act nontrivially on
the resource state.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, circuit_stabilizers
from .fault_table import forward_propagate_events
from .noise import FLIP, NoiseParams, schedule_faults
from .pauli import GeneratorSet, PauliOp, format_pauli

_U64_ONE = np.uint64(1)


@dataclass(frozen=True)
class OmegaTable:
    """Propagated single-fault errors of a preparation circuit."""

    width: int
    ent_x: np.ndarray
    ent_z: np.ndarray
    p_tilde: np.ndarray
    in_s_perp: np.ndarray
    s_generators: GeneratorSet
    total_mass: float

    def __len__(self) -> int:
        return len(self.p_tilde)


def _parity_with(ent_x: np.ndarray, ent_z: np.ndarray, row) -> np.ndarray:
    """Symplectic product of every entry with one Pauli row, vectorized."""
    row_x = np.uint64(row.x)
    row_z = np.uint64(row.z)
    counts = np.bitwise_count(ent_x & row_z) + np.bitwise_count(ent_z & row_x)
    return (counts & 1).astype(bool)


def precompute_omega(prep: Circuit, params: NoiseParams) -> OmegaTable:
    """Propagate every single fault of the preparation circuit to its end.

    `prep` must be measurement-free (idle locations are included; they are
    scheduled operations with noise like any other).
    """
    if prep.has_measurements:
        raise ValueError("omega tables are defined for measurement-free circuits")
    if prep.width > 64:
        raise ValueError("omega tables are limited to 64 qubits")

    init_x: list[int] = []
    init_z: list[int] = []
    op_idx: list[int] = []
    masses: list[float] = []
    for loc in schedule_faults(prep, params):
        if loc.kind == FLIP:  # unreachable on measurement-free circuits
            raise AssertionError("flip location in a measurement-free circuit")
        for code in range(1, loc.num_errors + 1):
            err = loc.error(code)
            init_x.append(err.x)
            init_z.append(err.z)
            op_idx.append(loc.op_index)
            masses.append(loc.p_tilde)

    xs, zs, _, _, _ = forward_propagate_events(
        prep,
        np.asarray(op_idx, dtype=np.int64),
        np.asarray(init_x, dtype=np.uint64),
        np.asarray(init_z, dtype=np.uint64),
    )
    s_gens = circuit_stabilizers(prep)
    anti = np.zeros(len(xs), dtype=bool)
    for row in s_gens.rows:
        anti |= _parity_with(xs, zs, row)
    p_tilde = np.asarray(masses, dtype=np.float64)
    return OmegaTable(
        width=prep.width,
        ent_x=xs,
        ent_z=zs,
        p_tilde=p_tilde,
        in_s_perp=~anti,
        s_generators=s_gens,
        total_mass=float(p_tilde.sum()),
    )


def proxy(v: GeneratorSet, table: OmegaTable) -> float:
    """Total probability of single faults that evade v but corrupt the state.

    An entry P contributes its probability iff P commutes with every row of
    v (undetected) and P is outside the stabilizer group's perp (damaging).
    """
    if v.width != table.width:
        raise ValueError(f"width mismatch: {v.width} vs {table.width}")
    keep = ~table.in_s_perp
    for row in v.rows:
        keep &= ~_parity_with(table.ent_x, table.ent_z, row)
    return float(table.p_tilde[keep].sum())


def dump_omega_csv(table: OmegaTable, path: str) -> None:
    """Diagnostic dump: one row per entry."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pauli_string", "p_tilde", "in_S_perp"])
        for i in range(len(table)):
            p = PauliOp(table.width, int(table.ent_x[i]), int(table.ent_z[i]))
            writer.writerow([format_pauli(p), repr(float(table.p_tilde[i])),
                             int(table.in_s_perp[i])])
