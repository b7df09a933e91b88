"""Construction of CliNR and CZNR programs.

A program is a plain circuit plus structure: phase boundaries (PREP,
VERIFY, INJECT, FINAL), the restart re-entry point, which record slots
gate acceptance, and a correction rule mapping measurement records to
output-register Paulis. The correction attached to a record is the
teleportation byproduct conjugated through the remaining circuit, so the
total correction for a shot is the product of the entries whose records
fired.

Register layout for CliNR on an n-qubit circuit: input 0..n-1, resource
n..3n-1 (Bell halves n..2n-1 are consumed by the injection, 2n..3n-1
carries the output), verification ancilla 3n. CZNR uses an n-qubit
resource: input 0..n-1, resource n..2n-1, ancilla 2n.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .circuits import (
    BARRIER,
    CX,
    CZ,
    H,
    MX,
    MZ,
    PREPZ,
    S,
    SDG,
    X,
    Circuit,
    Op,
    UNITARY_GATES,
    circuit_stabilizers,
    propagate,
)
from .pauli import GeneratorSet, PauliOp, in_span, rank

PHASES = ("PREP", "VERIFY", "INJECT", "FINAL")


class VerificationSequence(GeneratorSet):
    """An ordered tuple of resource-state stabilizers to measure."""

    @property
    def r(self) -> int:
        return len(self.rows)

    def validate_against(self, s_gens: GeneratorSet) -> None:
        """Check the builder invariants: nontrivial, independent, in <S>."""
        for row in self.rows:
            if row.is_identity:
                raise ValueError("verification sequences cannot contain the identity")
            if not in_span(row, s_gens):
                raise ValueError(
                    f"{row} is not a stabilizer of the resource state"
                )
        if rank(self) != len(self.rows):
            raise ValueError("verification sequence rows must be independent")


@dataclass(frozen=True)
class ClinrProgram:
    """A structured prepare/verify/inject circuit with its metadata."""

    scheme: str
    n: int
    r: int
    circuit: Circuit
    phase_starts: tuple[tuple[str, int], ...]
    restart_boundary: int | None
    verification_records: tuple[int, ...]
    correction_rule: tuple[tuple[int, PauliOp], ...]
    input_qubits: tuple[int, ...]
    output_qubits: tuple[int, ...]
    resource_qubits: tuple[int, ...]
    prep_resource_circuit: Circuit
    extra_records: tuple[tuple[str, tuple[int, ...]], ...] = ()

    def __post_init__(self) -> None:
        names = [name for name, _ in self.phase_starts]
        if names != list(PHASES):
            raise ValueError(f"phases must be {PHASES}, got {names}")
        for slot, pauli in self.correction_rule:
            if pauli.width != len(self.output_qubits):
                raise ValueError("correction Paulis must live on the output register")
            if not 0 <= slot < self.circuit.record_count:
                raise ValueError(f"correction references unknown record {slot}")

    def phase_bounds(self, name: str) -> tuple[int, int]:
        """Op index range [start, end) of a phase."""
        starts = dict(self.phase_starts)
        order = [s for _, s in self.phase_starts] + [len(self.circuit.ops)]
        idx = PHASES.index(name)
        return starts[name], order[idx + 1]

    @property
    def width(self) -> int:
        return self.circuit.width

    def record_group(self, name: str) -> tuple[int, ...]:
        for group, slots in self.extra_records:
            if group == name:
                return slots
        raise KeyError(name)


def _embed_pauli(p: PauliOp, width: int, offset: int) -> PauliOp:
    return PauliOp(width, p.x << offset, p.z << offset)


def _shift_ops(ops: Iterable[Op], offset: int) -> list[Op]:
    return [
        Op(op.name, tuple(q + offset for q in op.qubits), op.record) for op in ops
    ]


def _require_unitary(c: Circuit, what: str) -> None:
    for op in c.ops:
        if op.name not in UNITARY_GATES:
            raise ValueError(f"{what} must contain only unitary gates, found {op.name}")


def build_resource_prep(c: Circuit) -> Circuit:
    """The 2n-qubit resource preparation: n Bell pairs, then c on the top half.

    All preparations are emitted first so they schedule as one layer.
    """
    _require_unitary(c, "the target circuit")
    n = c.width
    ops: list[Op] = [Op(PREPZ, (q,)) for q in range(2 * n)]
    for i in range(n):
        ops.append(Op(H, (i,)))
        ops.append(Op(CX, (i, n + i)))
    ops.extend(_shift_ops(c.ops, n))
    return Circuit(2 * n, tuple(ops))


def _stabilizer_measurement_ops(
    p: PauliOp,
    ancilla: int,
    record: int | None,
    *,
    reset: bool,
) -> list[Op]:
    """Controlled-Pauli ladder measuring p via one ancilla.

    Controlled-Y is realized as SDG/CX/S on the data qubit so only CX and CZ
    two-qubit primitives appear; weight-w stabilizers cost exactly w
    two-qubit gates. With record=None the ancilla is entangled but left
    unmeasured (deferred mode).
    """
    if p.is_identity:
        raise ValueError("cannot measure the identity")
    ops: list[Op] = []
    if reset:
        ops.append(Op(PREPZ, (ancilla,)))
    ops.append(Op(H, (ancilla,)))
    for q in p.support():
        x_bit = (p.x >> q) & 1
        z_bit = (p.z >> q) & 1
        if x_bit and z_bit:
            ops.append(Op(SDG, (q,)))
            ops.append(Op(CX, (ancilla, q)))
            ops.append(Op(S, (q,)))
        elif x_bit:
            ops.append(Op(CX, (ancilla, q)))
        else:
            ops.append(Op(CZ, (ancilla, q)))
    if record is not None:
        ops.append(Op(MX, (ancilla,), record))
    return ops


def build_stabilizer_measurement(p: PauliOp, ancilla: int, record: int) -> Circuit:
    """Standalone circuit measuring the stabilizer p with a fresh ancilla."""
    width = max(p.width, ancilla + 1)
    embedded = PauliOp(width, p.x, p.z)
    return Circuit(
        width, tuple(_stabilizer_measurement_ops(embedded, ancilla, record, reset=True))
    )


def build_clinr(c: Circuit, v: VerificationSequence) -> ClinrProgram:
    """CliNR implementation of c with verification sequence v.

    The injection per qubit is the Bell measurement CX(input -> resource),
    H(input), MZ both; the record of MZ(input_i) carries a Z_i byproduct and
    the record of MZ(resource_i) an X_i byproduct, both conjugated through c
    onto the output register.
    """
    _require_unitary(c, "the target circuit")
    n = c.width
    prep_resource = build_resource_prep(c)
    s_gens = circuit_stabilizers(prep_resource)
    if v.width != 2 * n:
        raise ValueError(f"verification rows must have width {2 * n}")
    v.validate_against(s_gens)
    r = len(v.rows)

    width = 3 * n + 1
    ancilla = 3 * n
    ops: list[Op] = []
    ops.extend(_shift_ops(prep_resource.ops, n))
    prep_end = len(ops)
    ops.append(Op(BARRIER))

    verify_start = len(ops)
    for k, row in enumerate(v.rows):
        embedded = _embed_pauli(row, width, n)
        ops.extend(_stabilizer_measurement_ops(embedded, ancilla, k, reset=True))
    ops.append(Op(BARRIER))

    inject_start = len(ops)
    for i in range(n):
        ops.append(Op(CX, (i, n + i)))
        ops.append(Op(H, (i,)))
    for i in range(n):
        ops.append(Op(MZ, (i,), r + i))
    for i in range(n):
        ops.append(Op(MZ, (n + i,), r + n + i))

    rule = []
    for i in range(n):
        rule.append((r + i, propagate(c, PauliOp.single(n, i, "Z"))))
        rule.append((r + n + i, propagate(c, PauliOp.single(n, i, "X"))))

    return ClinrProgram(
        scheme="clinr",
        n=n,
        r=r,
        circuit=Circuit(width, tuple(ops)),
        phase_starts=(
            ("PREP", 0),
            ("VERIFY", verify_start),
            ("INJECT", inject_start),
            ("FINAL", len(ops)),
        ),
        restart_boundary=0,
        verification_records=tuple(range(r)),
        correction_rule=tuple(rule),
        input_qubits=tuple(range(n)),
        output_qubits=tuple(range(2 * n, 3 * n)),
        resource_qubits=tuple(range(n, 3 * n)),
        prep_resource_circuit=prep_resource,
    )


def graph_state_prep(c: Circuit) -> Circuit:
    """The n-qubit resource preparation for CZNR: |+>^n followed by c."""
    n = c.width
    ops = [Op(PREPZ, (q,)) for q in range(n)]
    ops.extend(Op(H, (q,)) for q in range(n))
    ops.extend(c.ops)
    return Circuit(n, tuple(ops))


def _require_cz_only(c: Circuit) -> None:
    for op in c.ops:
        if op.name != CZ:
            raise ValueError(f"CZNR requires a CZ-only circuit, found {op.name}")


def build_cznr(c: Circuit, v: VerificationSequence) -> ClinrProgram:
    """CZNR implementation of a CZ-only circuit c.

    The resource is c applied to |+>^n. Injection teleports through it with
    CX(resource -> input) and a Z measurement of the input register, which
    leaves c applied to the input state on the resource register up to an
    X^m byproduct that enters before c; the noiseless program therefore
    implements c exactly once the conjugated corrections are applied.
    """
    _require_cz_only(c)
    n = c.width
    prep_resource = graph_state_prep(c)
    s_gens = circuit_stabilizers(prep_resource)
    if v.width != n:
        raise ValueError(f"verification rows must have width {n}")
    v.validate_against(s_gens)
    r = len(v.rows)

    width = 2 * n + 1
    ancilla = 2 * n
    ops: list[Op] = []
    ops.extend(_shift_ops(prep_resource.ops, n))
    ops.append(Op(BARRIER))

    verify_start = len(ops)
    for k, row in enumerate(v.rows):
        embedded = _embed_pauli(row, width, n)
        ops.extend(_stabilizer_measurement_ops(embedded, ancilla, k, reset=True))
    ops.append(Op(BARRIER))

    inject_start = len(ops)
    for i in range(n):
        ops.append(Op(CX, (n + i, i)))
    for i in range(n):
        ops.append(Op(MZ, (i,), r + i))

    rule = [(r + i, propagate(c, PauliOp.single(n, i, "X"))) for i in range(n)]

    return ClinrProgram(
        scheme="cznr",
        n=n,
        r=r,
        circuit=Circuit(width, tuple(ops)),
        phase_starts=(
            ("PREP", 0),
            ("VERIFY", verify_start),
            ("INJECT", inject_start),
            ("FINAL", len(ops)),
        ),
        restart_boundary=0,
        verification_records=tuple(range(r)),
        correction_rule=tuple(rule),
        input_qubits=tuple(range(n)),
        output_qubits=tuple(range(n, 2 * n)),
        resource_qubits=tuple(range(n, 2 * n)),
        prep_resource_circuit=prep_resource,
    )


# ---------------------------------------------------------------------------
# Deferred-measurement CZNR experiment
# ---------------------------------------------------------------------------

IDENTITY_KIND = "identity"
GPI_KIND = "g_pi"
GPI2_KIND = "g_pi2"


@dataclass(frozen=True)
class CprepLayer:
    """A random single-qubit measurement-basis layer.

    `kinds[q]` names the native pulse drawn for qubit q (identity, one full
    rotation or one half rotation); `circuit` is its Clifford realization
    for simulation, which may spend several gateset ops per pulse.
    """

    circuit: Circuit
    kinds: tuple[str, ...]

    def inverse_ops(self) -> list[Op]:
        inv = {S: SDG, SDG: S}
        return [
            Op(inv.get(op.name, op.name), op.qubits)
            for op in reversed(self.circuit.ops)
        ]


def build_cprep(
    n: int = 10, seed: int | np.random.Generator | None = None
) -> CprepLayer:
    """Draw the random input-basis layer, one native pulse per qubit at most.

    Per qubit, with a, b, c uniform bits: a full X rotation if c and a are
    both set, else the half rotation with phase (a + b/2)*pi if c is set,
    else nothing. The half rotations map to the sqrt-X-like and
    Hadamard-like phase-free Cliffords.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    ops: list[Op] = []
    kinds: list[str] = []
    for q in range(n):
        a, b, c = (int(bit) for bit in rng.integers(0, 2, size=3))
        if c and a:
            ops.append(Op(X, (q,)))
            kinds.append(GPI_KIND)
        elif c:
            if b:
                ops.append(Op(H, (q,)))
            else:
                ops.extend([Op(H, (q,)), Op(S, (q,)), Op(H, (q,))])
            kinds.append(GPI2_KIND)
        else:
            kinds.append(IDENTITY_KIND)
    return CprepLayer(Circuit(n, tuple(ops)), tuple(kinds))


def fully_connected_cz(n: int) -> Circuit:
    """CZ on every qubit pair: n(n-1)/2 gates."""
    ops = [Op(CZ, (i, j)) for i in range(n) for j in range(i + 1, n)]
    return Circuit(n, tuple(ops))


def sample_verification_rows(
    n: int, r: int, weight_class: str, rng: np.random.Generator
) -> VerificationSequence:
    """Random low- or high-weight stabilizers of the fully connected graph state.

    Low weight: Y_i Y_j on disjoint random pairs. High weight: the canonical
    generators X_i prod_{j != i} Z_j for distinct random i.
    """
    if weight_class == "low":
        if 2 * r > n:
            raise ValueError(f"cannot place {r} disjoint pairs on {n} qubits")
        picks = rng.choice(n, size=2 * r, replace=False)
        rows = []
        for k in range(r):
            a, b = int(picks[2 * k]), int(picks[2 * k + 1])
            bits = (1 << a) | (1 << b)
            rows.append(PauliOp(n, bits, bits))
    elif weight_class == "high":
        picks = rng.choice(n, size=r, replace=False)
        full = (1 << n) - 1
        rows = [PauliOp(n, 1 << int(i), full ^ (1 << int(i))) for i in picks]
    else:
        raise ValueError(f"weight_class must be 'low' or 'high', got {weight_class!r}")
    return VerificationSequence(n, tuple(rows))


def build_deferred_cznr_experiment(
    n: int = 10,
    r: int = 3,
    weight_class: str = "low",
    seed: int | np.random.Generator | None = None,
) -> ClinrProgram:
    """The no-mid-circuit-measurement CZNR emulation circuit.

    One monolithic circuit on input, two resource registers and 2r
    verification ancillas: random input layer, two copies of the fully
    connected graph state each with r verification checks (ancillas held
    until the end), two teleportation blocks, the inverse input layer, and
    a final Z measurement of everything. Acceptance and corrections are
    post-processing; the correction rule encodes the corrected output
    bitstring (output bits flow through the rule, including an identity
    alias for the output register's own measurements).
    """
    if r < 1 or 2 * r > 6:
        raise ValueError(f"verification register holds 2r <= 6 ancillas, got r={r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    c_cz = fully_connected_cz(n)
    cprep = build_cprep(n, rng)
    rows_1 = sample_verification_rows(n, r, weight_class, rng)
    rows_2 = sample_verification_rows(n, r, weight_class, rng)
    resource_prep = graph_state_prep(c_cz)
    s_gens = circuit_stabilizers(resource_prep)
    rows_1.validate_against(s_gens)
    rows_2.validate_against(s_gens)

    width = 3 * n + 2 * r
    r_in = list(range(n))
    r_1 = list(range(n, 2 * n))
    r_2 = list(range(2 * n, 3 * n))
    ancillas = list(range(3 * n, 3 * n + 2 * r))

    ops: list[Op] = [Op(PREPZ, (q,)) for q in range(width)]
    ops.extend(cprep.circuit.ops)
    for base in (n, 2 * n):
        ops.extend(Op(H, (base + q,)) for q in range(n))
        ops.extend(_shift_ops(c_cz.ops, base))
    ops.append(Op(BARRIER))

    verify_start = len(ops)
    for k, row in enumerate(rows_1.rows):
        embedded = _embed_pauli(row, width, n)
        ops.extend(_stabilizer_measurement_ops(embedded, ancillas[k], None, reset=False))
    for k, row in enumerate(rows_2.rows):
        embedded = _embed_pauli(row, width, 2 * n)
        ops.extend(_stabilizer_measurement_ops(embedded, ancillas[r + k], None, reset=False))
    ops.append(Op(BARRIER))

    inject_start = len(ops)
    for i in range(n):
        ops.append(Op(CX, (r_1[i], r_in[i])))
    for i in range(n):
        ops.append(Op(CX, (r_2[i], r_1[i])))
    ops.append(Op(BARRIER))

    final_start = len(ops)
    ops.extend(_shift_ops(cprep.inverse_ops(), 2 * n))
    ops.extend(Op(H, (a,)) for a in ancillas)
    slot = 0
    groups: dict[str, list[int]] = {"b0": [], "b1": [], "b2": []}
    for name, reg in (("b0", r_in), ("b1", r_1), ("b2", r_2)):
        for q in reg:
            ops.append(Op(MZ, (q,), slot))
            groups[name].append(slot)
            slot += 1
    verification_slots = []
    for a in ancillas:
        ops.append(Op(MZ, (a,), slot))
        verification_slots.append(slot)
        slot += 1

    cprep_inv = Circuit(n, tuple(cprep.inverse_ops()))
    rule = []
    for i in range(n):
        x_i = PauliOp.single(n, i, "X")
        through_prep_dagger = propagate(cprep_inv, x_i)
        rule.append((groups["b0"][i], through_prep_dagger))
        rule.append((groups["b1"][i], propagate(cprep_inv, propagate(c_cz, x_i))))
        rule.append((groups["b2"][i], x_i))

    return ClinrProgram(
        scheme="cznr-deferred",
        n=n,
        r=r,
        circuit=Circuit(width, tuple(ops)),
        phase_starts=(
            ("PREP", 0),
            ("VERIFY", verify_start),
            ("INJECT", inject_start),
            ("FINAL", final_start),
        ),
        restart_boundary=None,
        verification_records=tuple(verification_slots),
        correction_rule=tuple(rule),
        input_qubits=tuple(r_in),
        output_qubits=tuple(r_2),
        resource_qubits=tuple(r_1),
        prep_resource_circuit=resource_prep,
        extra_records=tuple((name, tuple(slots)) for name, slots in groups.items()),
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def serialize_program(prog: ClinrProgram) -> str:
    """Circuit text with `# PHASE <name>` markers at phase boundaries."""
    starts = {idx: name for name, idx in prog.phase_starts}
    lines = [f"WIDTH {prog.width}"]
    for t, op in enumerate(prog.circuit.ops):
        if t in starts:
            lines.append(f"# PHASE {starts[t]}")
        if op.name == BARRIER:
            lines.append("BARRIER")
        elif op.is_measurement:
            lines.append(f"{op.name} {op.qubits[0] + 1} -> {op.record + 1}")
        else:
            lines.append(f"{op.name} {' '.join(str(q + 1) for q in op.qubits)}")
    if len(prog.circuit.ops) in starts:
        lines.append(f"# PHASE {starts[len(prog.circuit.ops)]}")
    return "\n".join(lines) + "\n"


def program_descriptor(prog: ClinrProgram) -> dict:
    """Sidecar JSON-compatible descriptor. Record slots are 1-based to match
    the text format; restart_boundary is a 0-based op index."""
    from .pauli import format_pauli

    return {
        "scheme": prog.scheme,
        "n": prog.n,
        "r": prog.r,
        "verification_records": [s + 1 for s in prog.verification_records],
        "restart_boundary": prog.restart_boundary,
        "correction_rule": [
            [slot + 1, format_pauli(pauli)] for slot, pauli in prog.correction_rule
        ],
    }
