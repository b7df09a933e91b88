"""Phase-free Pauli operators and GF(2) symplectic linear algebra.

An n-qubit Pauli operator is stored as a pair of n-bit integers (x, z):
bit q of x (resp. z) is set iff the operator acts as X (resp. Z) on qubit q,
and a Y is encoded by setting both. Global phases are quotiented out, so the
group law is componentwise XOR and every operator is its own inverse.

For matrix-level work a Pauli is flattened to a single 2n-bit row vector
with the X block in the low n bits and the Z block in the high n bits
(qubit-major within each block). All row operations are word-parallel XOR
on Python ints.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

_PAULI_CHARS = "IXZY"  # index = x_bit + 2*z_bit


@dataclass(frozen=True)
class PauliOp:
    """A phase-free Pauli operator on `width` qubits."""

    width: int
    x: int
    z: int

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError(f"width must be positive, got {self.width}")
        mask = (1 << self.width) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValueError("x/z bits exceed operator width")

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def weight(self) -> int:
        """Number of qubits on which the operator is not the identity."""
        return (self.x | self.z).bit_count()

    def support(self) -> tuple[int, ...]:
        """0-based qubit indices where the operator acts nontrivially."""
        bits = self.x | self.z
        return tuple(q for q in range(self.width) if (bits >> q) & 1)

    def to_vec(self) -> int:
        """Flatten to a 2*width-bit row vector (X block low, Z block high)."""
        return self.x | (self.z << self.width)

    @classmethod
    def from_vec(cls, width: int, vec: int) -> PauliOp:
        mask = (1 << width) - 1
        return cls(width, vec & mask, vec >> width)

    @classmethod
    def identity(cls, width: int) -> PauliOp:
        return cls(width, 0, 0)

    @classmethod
    def single(cls, width: int, qubit: int, kind: str) -> PauliOp:
        """Single-qubit X, Y or Z embedded at `qubit` (0-based)."""
        if not 0 <= qubit < width:
            raise ValueError(f"qubit {qubit} out of range for width {width}")
        bit = 1 << qubit
        if kind == "X":
            return cls(width, bit, 0)
        if kind == "Z":
            return cls(width, 0, bit)
        if kind == "Y":
            return cls(width, bit, bit)
        raise ValueError(f"kind must be X, Y or Z, got {kind!r}")

    def __str__(self) -> str:
        return format_pauli(self)


@dataclass(frozen=True)
class GeneratorSet:
    """An ordered list of equal-width PauliOps, viewed as an r x 2N GF(2) matrix."""

    width: int
    rows: tuple[PauliOp, ...]

    def __post_init__(self) -> None:
        for row in self.rows:
            if row.width != self.width:
                raise ValueError(
                    f"row width {row.width} does not match set width {self.width}"
                )
        object.__setattr__(self, "rows", tuple(self.rows))

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[PauliOp]:
        return iter(self.rows)

    def row_vecs(self) -> list[int]:
        return [p.to_vec() for p in self.rows]

    @classmethod
    def from_strings(cls, labels: Iterable[str]) -> GeneratorSet:
        rows = tuple(parse_pauli(s) for s in labels)
        if not rows:
            raise ValueError("cannot infer width from an empty label list")
        return cls(rows[0].width, rows)

    @classmethod
    def from_vecs(cls, width: int, vecs: Iterable[int]) -> GeneratorSet:
        return cls(width, tuple(PauliOp.from_vec(width, v) for v in vecs))

    def serialize(self) -> str:
        """Newline-separated Pauli strings."""
        return "\n".join(format_pauli(p) for p in self.rows)

    def __str__(self) -> str:
        return self.serialize()


def _check_widths(p: PauliOp, q: PauliOp | GeneratorSet) -> None:
    if p.width != q.width:
        raise ValueError(f"width mismatch: {p.width} vs {q.width}")


def symplectic_product(p: PauliOp, q: PauliOp) -> int:
    """Return [p, q] in GF(2); 0 iff p and q commute."""
    _check_widths(p, q)
    return ((p.x & q.z).bit_count() + (q.x & p.z).bit_count()) & 1


def multiply(p: PauliOp, q: PauliOp) -> PauliOp:
    """Product in the phase-free Pauli group (componentwise XOR)."""
    _check_widths(p, q)
    return PauliOp(p.width, p.x ^ q.x, p.z ^ q.z)


def _rref(vecs: list[int], n_cols: int) -> list[int]:
    """Reduced row-echelon form over GF(2); zero rows dropped.

    Column 0 is the lowest bit, and is eliminated first, so the pivot order
    is X block before Z block, qubit-major.
    """
    work = [v for v in vecs if v]
    pivot_rows: list[int] = []
    row_idx = 0
    for col in range(n_cols):
        pivot = None
        for r in range(row_idx, len(work)):
            if (work[r] >> col) & 1:
                pivot = r
                break
        if pivot is None:
            continue
        work[row_idx], work[pivot] = work[pivot], work[row_idx]
        for r in range(len(work)):
            if r != row_idx and ((work[r] >> col) & 1):
                work[r] ^= work[row_idx]
        row_idx += 1
        if row_idx == len(work):
            break
    return [v for v in work[:row_idx] if v]


def rank(g: GeneratorSet) -> int:
    """GF(2) rank of the row matrix."""
    return len(_rref(g.row_vecs(), 2 * g.width))


def in_span(p: PauliOp, g: GeneratorSet) -> bool:
    """True iff p is a GF(2) combination of the rows of g."""
    _check_widths(p, g)
    basis = _rref(g.row_vecs(), 2 * g.width)
    vec = p.to_vec()
    for b in basis:
        low = b & -b
        if vec & low:
            vec ^= b
    return vec == 0


def commutes_with_all(p: PauliOp, g: GeneratorSet) -> bool:
    """True iff p commutes with every row of g (p is in the rows' perp)."""
    _check_widths(p, g)
    for row in g.rows:
        if symplectic_product(p, row):
            return False
    return True


def canonical_form(g: GeneratorSet) -> GeneratorSet:
    """RREF of the row matrix with zero rows removed.

    Two GeneratorSets have identical canonical_form iff they generate the
    same subgroup, which makes the result usable as a subgroup key for tabu
    lists and for quotienting the search space.
    """
    return GeneratorSet.from_vecs(g.width, _rref(g.row_vecs(), 2 * g.width))


def subgroup_key(g: GeneratorSet) -> tuple[int, ...]:
    """Hashable canonical key of the subgroup generated by g."""
    return tuple(_rref(g.row_vecs(), 2 * g.width))


def sample_uniform_element(g: GeneratorSet, rng: np.random.Generator) -> PauliOp:
    """Product of a uniformly random subset of rows.

    Uniform over the generated subgroup when the rows are independent.
    """
    x = 0
    z = 0
    for row in g.rows:
        if rng.integers(2):
            x ^= row.x
            z ^= row.z
    return PauliOp(g.width, x, z)


def parse_pauli(s: str) -> PauliOp:
    """Parse a `[IXYZ]+` string; character k refers to qubit k (1-indexed)."""
    if not s:
        raise ValueError("empty Pauli string")
    x = 0
    z = 0
    for pos, ch in enumerate(s):
        if ch == "I":
            continue
        if ch == "X":
            x |= 1 << pos
        elif ch == "Z":
            z |= 1 << pos
        elif ch == "Y":
            x |= 1 << pos
            z |= 1 << pos
        else:
            raise ValueError(f"invalid Pauli character {ch!r} at position {pos}")
    return PauliOp(len(s), x, z)


def format_pauli(p: PauliOp) -> str:
    """Inverse of parse_pauli."""
    return "".join(
        _PAULI_CHARS[((p.x >> q) & 1) + 2 * ((p.z >> q) & 1)] for q in range(p.width)
    )
