"""Clifford circuit representation, Pauli conjugation and the text format.

Circuits are ordered lists of typed ops on a fixed-width qubit register.
Pauli frames are pushed through gates with the usual phase-free conjugation
rules; measurements leave the frame untouched (record flips are handled by
the simulation layers) and a Z-basis preparation clears the frame on the
prepared qubit.

Qubits and record slots are 0-based internally and 1-based in the text
format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .pauli import GeneratorSet, PauliOp

PREPZ = "PREPZ"
H = "H"
S = "S"
SDG = "SDG"
X = "X"
Z = "Z"
CX = "CX"
CZ = "CZ"
MX = "MX"
MZ = "MZ"
BARRIER = "BARRIER"

SINGLE_QUBIT_GATES = frozenset({H, S, SDG, X, Z})
TWO_QUBIT_GATES = frozenset({CX, CZ})
UNITARY_GATES = SINGLE_QUBIT_GATES | TWO_QUBIT_GATES
MEASUREMENTS = frozenset({MX, MZ})


@dataclass(frozen=True)
class Op:
    """One circuit operation: a gate, preparation, measurement or barrier."""

    name: str
    qubits: tuple[int, ...] = ()
    record: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if self.name in TWO_QUBIT_GATES:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"{self.name} needs two distinct qubits")
        elif self.name in SINGLE_QUBIT_GATES or self.name == PREPZ:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.name} needs exactly one qubit")
        elif self.name in MEASUREMENTS:
            if len(self.qubits) != 1 or self.record is None:
                raise ValueError(f"{self.name} needs one qubit and a record slot")
        elif self.name == BARRIER:
            if self.qubits or self.record is not None:
                raise ValueError("BARRIER takes no operands")
        else:
            raise ValueError(f"unknown op {self.name!r}")

    @property
    def is_unitary(self) -> bool:
        return self.name in UNITARY_GATES

    @property
    def is_measurement(self) -> bool:
        return self.name in MEASUREMENTS


@dataclass(frozen=True)
class Circuit:
    """An ordered op list on `width` qubits with contiguous record slots."""

    width: int
    ops: tuple[Op, ...] = ()

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError("width must be positive")
        object.__setattr__(self, "ops", tuple(self.ops))
        slots = []
        for op in self.ops:
            for q in op.qubits:
                if not 0 <= q < self.width:
                    raise ValueError(f"qubit {q} out of range in {op}")
            if op.is_measurement:
                slots.append(op.record)
        if sorted(slots) != list(range(len(slots))):
            raise ValueError("record slots must be 0..record_count-1, each once")

    @property
    def record_count(self) -> int:
        return sum(1 for op in self.ops if op.is_measurement)

    @property
    def has_measurements(self) -> bool:
        return any(op.is_measurement for op in self.ops)

    def __len__(self) -> int:
        return len(self.ops)


def _apply_op(op: Op, x: int, z: int, prep_clears: bool) -> tuple[int, int]:
    """Forward phase-free conjugation of the frame (x, z) through one op."""
    name = op.name
    if name == CX:
        c, t = op.qubits
        if (x >> c) & 1:
            x ^= 1 << t
        if (z >> t) & 1:
            z ^= 1 << c
    elif name == CZ:
        a, b = op.qubits
        if (x >> a) & 1:
            z ^= 1 << b
        if (x >> b) & 1:
            z ^= 1 << a
    elif name == H:
        q = op.qubits[0]
        xq = (x >> q) & 1
        zq = (z >> q) & 1
        if xq != zq:
            x ^= 1 << q
            z ^= 1 << q
    elif name in (S, SDG):
        q = op.qubits[0]
        if (x >> q) & 1:
            z ^= 1 << q
    elif name == PREPZ:
        if prep_clears:
            q = op.qubits[0]
            x &= ~(1 << q)
            z &= ~(1 << q)
    # X, Z, MX, MZ and BARRIER leave the frame unchanged.
    return x, z


def propagate(c: Circuit, p: PauliOp, from_index: int = 0) -> PauliOp:
    """Conjugate p through ops[from_index:] under fault-frame semantics.

    Measurements are skipped (the frame survives them) and PREPZ clears the
    frame on the prepared qubit. `from_index` is the op index right after
    which the error is inserted into the circuit.
    """
    if p.width != c.width:
        raise ValueError(f"width mismatch: {p.width} vs {c.width}")
    if not 0 <= from_index <= len(c.ops):
        raise ValueError(f"from_index {from_index} out of range")
    x, z = p.x, p.z
    for op in c.ops[from_index:]:
        x, z = _apply_op(op, x, z, prep_clears=True)
    return PauliOp(c.width, x, z)


@dataclass(frozen=True)
class SymplecticMap:
    """The GF(2)-linear action P -> U P U^-1 of a unitary Clifford circuit.

    Stored column-wise: cols[q] is the image of X_q and cols[width+q] the
    image of Z_q, each flattened with PauliOp.to_vec().
    """

    width: int
    cols: tuple[int, ...]

    def apply(self, p: PauliOp) -> PauliOp:
        if p.width != self.width:
            raise ValueError(f"width mismatch: {p.width} vs {self.width}")
        vec = p.to_vec()
        out = 0
        while vec:
            low = vec & -vec
            out ^= self.cols[low.bit_length() - 1]
            vec ^= low
        return PauliOp.from_vec(self.width, out)

    def as_matrix(self) -> np.ndarray:
        """Dense 2N x 2N uint8 matrix with M[i, j] = bit i of column j."""
        dim = 2 * self.width
        m = np.zeros((dim, dim), dtype=np.uint8)
        for j, col in enumerate(self.cols):
            for i in range(dim):
                m[i, j] = (col >> i) & 1
        return m


def as_symplectic(c: Circuit) -> SymplecticMap:
    """Cache the whole-circuit conjugation as one matrix.

    The circuit must be measurement-free. PREPZ is rejected too: clearing a
    frame is linear but not symplectic, so the cached map would silently
    stop preserving commutation.
    """
    for op in c.ops:
        if op.is_measurement or op.name == PREPZ:
            raise ValueError(f"as_symplectic requires a unitary circuit, found {op.name}")
    cols = []
    for j in range(2 * c.width):
        basis = PauliOp.from_vec(c.width, 1 << j)
        cols.append(propagate(c, basis).to_vec())
    return SymplecticMap(c.width, tuple(cols))


def circuit_stabilizers(c: Circuit) -> GeneratorSet:
    """Stabilizer generators of the state c|0...0>.

    Conjugates each initial Z_q through the circuit, treating PREPZ as the
    identity. Valid for state-preparation circuits where every PREPZ occurs
    before any entangling use of its qubit.
    """
    if c.has_measurements:
        raise ValueError("circuit_stabilizers requires a measurement-free circuit")
    rows = []
    for q in range(c.width):
        x, z = 0, 1 << q
        for op in c.ops:
            x, z = _apply_op(op, x, z, prep_clears=False)
        rows.append(PauliOp(c.width, x, z))
    return GeneratorSet(c.width, tuple(rows))


def resource_stabilizers(c_r: Circuit, n: int) -> GeneratorSet:
    """Generators of the stabilizer group of c_r applied to n Bell pairs.

    `c_r` is the unitary applied after the Bell pairs are formed (the
    I-tensor-C layer), with pair i supported on qubits i and n+i. The 2n
    generators are the conjugations of X_i X_{n+i} and Z_i Z_{n+i}.
    """
    if c_r.width != 2 * n:
        raise ValueError(f"circuit width {c_r.width} != 2n = {2 * n}")
    for op in c_r.ops:
        if op.is_measurement or op.name == PREPZ:
            raise ValueError("resource_stabilizers requires a unitary circuit")
    rows = []
    for kind in ("X", "Z"):
        for i in range(n):
            bits = (1 << i) | (1 << (n + i))
            p = PauliOp(2 * n, bits if kind == "X" else 0, bits if kind == "Z" else 0)
            rows.append(propagate(c_r, p))
    return GeneratorSet(2 * n, tuple(rows))


def truncate(c: Circuit, s: int) -> Circuit:
    """Keep the first s operations."""
    if not 0 <= s <= len(c.ops):
        raise ValueError(f"truncation size {s} out of range 0..{len(c.ops)}")
    return Circuit(c.width, c.ops[:s])


# ---------------------------------------------------------------------------
# Uniform random Clifford circuits
# ---------------------------------------------------------------------------

def _vec_symplectic(u: int, v: int, n: int) -> int:
    mask = (1 << n) - 1
    ux, uz = u & mask, u >> n
    vx, vz = v & mask, v >> n
    return ((ux & vz).bit_count() + (vx & uz).bit_count()) & 1


def _xor_select(vecs: list[int], picks: np.ndarray) -> int:
    out = 0
    for vec, take in zip(vecs, picks):
        if take:
            out ^= vec
    return out


def _extract_symplectic_pairs(vecs: list[int], n: int) -> list[tuple[int, int]]:
    """Symplectic Gram-Schmidt: turn a spanning set into hyperbolic pairs."""
    pairs = []
    work = [v for v in vecs if v]
    while work:
        u = work[0]
        partner = next(j for j in range(1, len(work)) if _vec_symplectic(u, work[j], n))
        v = work[partner]
        pairs.append((u, v))
        rest = []
        for k, w in enumerate(work):
            if k in (0, partner):
                continue
            if _vec_symplectic(w, v, n):
                w ^= u
            if _vec_symplectic(w, u, n):
                w ^= v
            if w:
                rest.append(w)
        work = rest
    return pairs


def _random_symplectic_cols(n: int, rng: np.random.Generator) -> list[int]:
    """Sample a uniform element of Sp(2n, GF(2)) in column form.

    Standard orbit construction: the image of X_k is uniform over the
    nonzero vectors of the symplectic complement of the previously chosen
    images, and the image of Z_k is uniform over the complement vectors
    with symplectic product 1 against it.
    """
    pairs = [(1 << q, 1 << (n + q)) for q in range(n)]
    img_x = [0] * n
    img_z = [0] * n
    for step in range(n):
        flat = [w for pair in pairs for w in pair]
        dim = len(flat)
        while True:
            alpha = rng.integers(0, 2, size=dim)
            if alpha.any():
                break
        u = _xor_select(flat, alpha)
        gamma = [_vec_symplectic(u, w, n) for w in flat]
        j_star = gamma.index(1)
        beta = rng.integers(0, 2, size=dim)
        parity = sum(int(beta[j]) & gamma[j] for j in range(dim) if j != j_star) & 1
        beta[j_star] = 1 ^ parity
        v = _xor_select(flat, beta)
        img_x[step], img_z[step] = u, v
        corrected = []
        for w in flat:
            if _vec_symplectic(w, v, n):
                w ^= u
            if _vec_symplectic(w, u, n):
                w ^= v
            corrected.append(w)
        pairs = _extract_symplectic_pairs(corrected, n)
    return img_x + img_z


_GATE_INVERSE = {S: SDG, SDG: S}


def _apply_gate_to_cols(cols: list[int], op: Op, n: int) -> None:
    for j, vec in enumerate(cols):
        p = PauliOp.from_vec(n, vec)
        x, z = _apply_op(op, p.x, p.z, prep_clears=False)
        cols[j] = x | (z << n)


def _synthesize(cols: list[int], n: int) -> list[Op]:
    """Decompose a symplectic map into {H, S, SDG, CX} gates.

    Reduces the column form to the identity with a qubit-by-qubit sweep and
    returns the inverted gate sequence. Not gate-count optimal.
    """
    work = list(cols)
    reducers: list[Op] = []

    def emit(name: str, *qubits: int) -> None:
        op = Op(name, qubits)
        _apply_gate_to_cols(work, op, n)
        reducers.append(op)

    def bit(vec: int, pos: int) -> int:
        return (vec >> pos) & 1

    for i in range(n):
        a = work[i]
        if all(bit(a, j) == 0 for j in range(i, n)):
            j = next(j for j in range(i, n) if bit(a, n + j))
            emit(H, j)
        a = work[i]
        if not bit(a, i):
            j = next(j for j in range(i + 1, n) if bit(a, j))
            emit(CX, j, i)
        a = work[i]
        for j in range(i + 1, n):
            if bit(a, j):
                emit(CX, i, j)
        if bit(work[i], n + i):
            emit(S, i)
        a = work[i]
        for j in range(i + 1, n):
            if bit(a, n + j):
                emit(H, j)
                emit(CX, i, j)
                emit(H, j)
        b = work[n + i]
        for j in range(i, n):
            if not bit(b, j):
                continue
            if j == i:
                emit(H, i)
                emit(S, i)
                emit(H, i)
            else:
                if bit(b, n + j):
                    emit(S, j)
                emit(H, j)
        b = work[n + i]
        for j in range(i + 1, n):
            if bit(b, n + j):
                emit(CX, j, i)

    identity = [1 << j for j in range(2 * n)]
    if work != identity:
        raise AssertionError("symplectic synthesis failed to reach the identity")
    return [
        Op(_GATE_INVERSE.get(op.name, op.name), op.qubits) for op in reversed(reducers)
    ]


def random_clifford_circuit(
    n: int, seed: int | np.random.Generator | None = None
) -> Circuit:
    """A random circuit over {H, S, SDG, CX} with uniform symplectic action.

    The phase-free conjugation map is exactly uniform over Sp(2n, GF(2));
    the gate realization is one fixed synthesis of it.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cols = _random_symplectic_cols(n, rng)
    return Circuit(n, tuple(_synthesize(cols, n)))


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

def serialize_circuit(c: Circuit) -> str:
    """Line-oriented text form; qubits and record slots are 1-based."""
    lines = [f"WIDTH {c.width}"]
    for op in c.ops:
        if op.name == BARRIER:
            lines.append("BARRIER")
        elif op.is_measurement:
            lines.append(f"{op.name} {op.qubits[0] + 1} -> {op.record + 1}")
        else:
            operands = " ".join(str(q + 1) for q in op.qubits)
            lines.append(f"{op.name} {operands}")
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> Circuit:
    """Parse the text format produced by serialize_circuit.

    `#` starts a comment; blank lines are ignored. The first significant
    line must be `WIDTH <N>`.
    """
    width = None
    ops: list[Op] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        name = tokens[0].upper()
        try:
            if width is None:
                if name != "WIDTH":
                    raise ValueError("first line must declare WIDTH")
                width = int(tokens[1])
                continue
            if name == "WIDTH":
                raise ValueError("duplicate WIDTH line")
            if name == BARRIER:
                ops.append(Op(BARRIER))
            elif name in MEASUREMENTS:
                if len(tokens) != 4 or tokens[2] != "->":
                    raise ValueError(f"malformed measurement: {line!r}")
                ops.append(Op(name, (int(tokens[1]) - 1,), int(tokens[3]) - 1))
            elif name in UNITARY_GATES or name == PREPZ:
                ops.append(Op(name, tuple(int(t) - 1 for t in tokens[1:])))
            else:
                raise ValueError(f"unknown mnemonic {name!r}")
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    if width is None:
        raise ValueError("missing WIDTH line")
    return Circuit(width, tuple(ops))


def concat(width: int, *parts: Iterable[Op]) -> Circuit:
    """Build a circuit from op iterables laid out back to back."""
    ops: list[Op] = []
    for part in parts:
        ops.extend(part)
    return Circuit(width, tuple(ops))
