"""Sign-tracking stabilizer tableau simulator used as a test oracle.

Independent of the package's phase-free frame machinery: full
Aaronson-Gottesman destabilizer/stabilizer tableau with measurement
randomness, so noiseless program correctness (including measurement
byproducts and classical corrections) can be checked exactly.

Row phases are stored as exponents of i modulo 4; stabilizer rows are
always real (0 or 2) while destabilizer rows may hold meaningless odd
phases, which are never read.
"""

from __future__ import annotations

import numpy as np

from clinr.builder import ClinrProgram
from clinr.circuits import BARRIER, CX, CZ, H, MX, MZ, PREPZ, S, SDG, X, Z, Circuit
from clinr.pauli import PauliOp


class Tableau:
    """A stabilizer state on n qubits, initially |0...0>."""

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.int64)  # exponent of i, mod 4
        for i in range(n):
            self.x[i, i] = 1          # destabilizer X_i
            self.z[n + i, i] = 1      # stabilizer Z_i

    # -- gates ---------------------------------------------------------------

    def h(self, q: int) -> None:
        self.r = (self.r + 2 * (self.x[:, q] & self.z[:, q])) % 4
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def s(self, q: int) -> None:
        self.r = (self.r + 2 * (self.x[:, q] & self.z[:, q])) % 4
        self.z[:, q] ^= self.x[:, q]

    def sdg(self, q: int) -> None:
        self.s(q)
        self.s(q)
        self.s(q)

    def x_gate(self, q: int) -> None:
        self.r = (self.r + 2 * self.z[:, q]) % 4

    def z_gate(self, q: int) -> None:
        self.r = (self.r + 2 * self.x[:, q]) % 4

    def cx(self, c: int, t: int) -> None:
        flip = self.x[:, c] & self.z[:, t] & (self.x[:, t] ^ self.z[:, c] ^ 1)
        self.r = (self.r + 2 * flip) % 4
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]

    def cz(self, a: int, b: int) -> None:
        self.h(b)
        self.cx(a, b)
        self.h(b)

    # -- phase arithmetic ----------------------------------------------------

    @staticmethod
    def _g(x1, z1, x2, z2):
        """Exponent of i from multiplying single-qubit Paulis (P1 * P2)."""
        x1 = x1.astype(np.int64)
        z1 = z1.astype(np.int64)
        x2 = x2.astype(np.int64)
        z2 = z2.astype(np.int64)
        y1 = x1 & z1
        only_x = x1 & (1 - z1)
        only_z = (1 - x1) & z1
        return (
            y1 * (z2 - x2)
            + only_x * z2 * (2 * x2 - 1)
            + only_z * x2 * (1 - 2 * z2)
        )

    def _rowsum_into(
        self, xh: np.ndarray, zh: np.ndarray, rh: int, i: int
    ) -> tuple[np.ndarray, np.ndarray, int]:
        """(xh, zh, rh) <- row_i * (xh, zh, rh)."""
        rh = (rh + int(self.r[i]) + int(self._g(self.x[i], self.z[i], xh, zh).sum())) % 4
        xh ^= self.x[i]
        zh ^= self.z[i]
        return xh, zh, rh

    def _rowsum(self, h: int, i: int) -> None:
        xh, zh, rh = self._rowsum_into(
            self.x[h].copy(), self.z[h].copy(), int(self.r[h]), i
        )
        self.x[h] = xh
        self.z[h] = zh
        self.r[h] = rh

    # -- measurement ---------------------------------------------------------

    def measure_z(self, q: int, rng: np.random.Generator) -> int:
        n = self.n
        pivot = next((p for p in range(n, 2 * n) if self.x[p, q]), None)
        if pivot is not None:
            for i in range(2 * n):
                if i != pivot and self.x[i, q]:
                    self._rowsum(i, pivot)
            self.x[pivot - n] = self.x[pivot].copy()
            self.z[pivot - n] = self.z[pivot].copy()
            self.r[pivot - n] = self.r[pivot]
            self.x[pivot] = 0
            self.z[pivot] = 0
            self.z[pivot, q] = 1
            outcome = int(rng.integers(2))
            self.r[pivot] = 2 * outcome
            return outcome
        xh = np.zeros(n, dtype=np.uint8)
        zh = np.zeros(n, dtype=np.uint8)
        rh = 0
        for i in range(n):
            if self.x[i, q]:
                xh, zh, rh = self._rowsum_into(xh, zh, rh, i + n)
        assert rh % 2 == 0, "deterministic outcome came out imaginary"
        return rh // 2

    def measure_x(self, q: int, rng: np.random.Generator) -> int:
        self.h(q)
        outcome = self.measure_z(q, rng)
        self.h(q)
        return outcome

    def reset_z(self, q: int, rng: np.random.Generator) -> None:
        if self.measure_z(q, rng):
            self.x_gate(q)

    # -- observables ---------------------------------------------------------

    def peek(self, p: PauliOp) -> int | None:
        """Expectation of the Hermitian Pauli p: +-1 if definite, None if random."""
        n = self.n
        px = np.array([(p.x >> k) & 1 for k in range(n)], dtype=np.uint8)
        pz = np.array([(p.z >> k) & 1 for k in range(n)], dtype=np.uint8)
        for i in range(n, 2 * n):
            if int((self.x[i] & pz).sum() + (px & self.z[i]).sum()) & 1:
                return None
        xh = np.zeros(n, dtype=np.uint8)
        zh = np.zeros(n, dtype=np.uint8)
        rh = 0
        for i in range(n):
            if int((self.x[i] & pz).sum() + (px & self.z[i]).sum()) & 1:
                xh, zh, rh = self._rowsum_into(xh, zh, rh, i + n)
        assert np.array_equal(xh, px) and np.array_equal(zh, pz), (
            "observable not in the stabilizer group despite commuting"
        )
        assert rh % 2 == 0
        return 1 if rh == 0 else -1

    def apply_pauli(self, p: PauliOp) -> None:
        for q in range(p.width):
            if (p.x >> q) & 1:
                self.x_gate(q)
            if (p.z >> q) & 1:
                self.z_gate(q)

    def run_circuit(self, c: Circuit, rng: np.random.Generator,
                    qubit_offset: int = 0) -> dict[int, int]:
        """Apply a circuit's ops (optionally shifted); returns record -> bit."""
        records: dict[int, int] = {}
        for op in c.ops:
            qs = [q + qubit_offset for q in op.qubits]
            if op.name == H:
                self.h(qs[0])
            elif op.name == S:
                self.s(qs[0])
            elif op.name == SDG:
                self.sdg(qs[0])
            elif op.name == X:
                self.x_gate(qs[0])
            elif op.name == Z:
                self.z_gate(qs[0])
            elif op.name == CX:
                self.cx(qs[0], qs[1])
            elif op.name == CZ:
                self.cz(qs[0], qs[1])
            elif op.name == PREPZ:
                self.reset_z(qs[0], rng)
            elif op.name == MZ:
                records[op.record] = self.measure_z(qs[0], rng)
            elif op.name == MX:
                records[op.record] = self.measure_x(qs[0], rng)
            elif op.name == BARRIER:
                pass
            else:
                raise ValueError(f"unknown op {op.name}")
        return records


def run_program_noiseless(
    prog: ClinrProgram, input_prep: Circuit, rng: np.random.Generator
) -> tuple[Tableau, dict[int, int]]:
    """Run a program on the input state input_prep|0>, applying corrections.

    Measurement outcomes are sampled from their true distribution; the
    correction rule is applied to the output register afterwards.
    """
    sim = Tableau(prog.width)
    sim.run_circuit(input_prep, rng, qubit_offset=prog.input_qubits[0])
    records = sim.run_circuit(prog.circuit, rng)
    corr_x = 0
    corr_z = 0
    for slot, pauli in prog.correction_rule:
        if records.get(slot):
            corr_x ^= pauli.x
            corr_z ^= pauli.z
    for k, q in enumerate(prog.output_qubits):
        if (corr_x >> k) & 1:
            sim.x_gate(q)
        if (corr_z >> k) & 1:
            sim.z_gate(q)
    return sim, records


def reference_output_stabilizers(
    input_prep: Circuit, c: Circuit, rng: np.random.Generator
) -> Tableau:
    """Tableau of c(input_prep|0>), the state a correct program must emit."""
    sim = Tableau(c.width)
    sim.run_circuit(input_prep, rng)
    sim.run_circuit(c, rng)
    return sim


def output_matches_reference(
    prog: ClinrProgram, sim: Tableau, reference: Tableau
) -> bool:
    """Check the program's output register carries exactly the reference state."""
    n = reference.n
    offset = prog.output_qubits[0]
    assert prog.output_qubits == tuple(range(offset, offset + n))
    for i in range(n, 2 * n):
        x_bits = 0
        z_bits = 0
        for k in range(n):
            x_bits |= int(reference.x[i, k]) << (offset + k)
            z_bits |= int(reference.z[i, k]) << (offset + k)
        embedded = PauliOp(prog.width, x_bits, z_bits)
        assert reference.r[i] % 2 == 0
        expected = -1 if reference.r[i] == 2 else 1
        if sim.peek(embedded) != expected:
            return False
    return True
