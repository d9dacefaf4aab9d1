"""Pauli group arithmetic in binary symplectic form.

A :class:`PauliString` on ``n`` qubits is stored as two Python integers used as
bit sets (bit ``j`` belongs to qubit ``j``) plus a phase exponent ``k`` so that
the operator is ``i**k * P_0 ⊗ P_1 ⊗ ... ⊗ P_{n-1}`` with each ``P_j`` one of the
Hermitian single-qubit matrices I, X, Y, Z.  Python integers are word-packed
and arbitrary precision, so XOR and popcount stay linear in ``n`` / 64.

Qubit 0 is the leftmost character of the text form: ``"XZ"`` is ``X ⊗ Z``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass


class PauliError(ValueError):
    """Raised for malformed Pauli strings or mismatched widths."""


class PauliAxis(enum.Enum):
    I = (0, 0)
    X = (1, 0)
    Y = (1, 1)
    Z = (0, 1)

    @property
    def bits(self) -> tuple[int, int]:
        return self.value

    @classmethod
    def from_bits(cls, x: int, z: int) -> PauliAxis:
        return _AXIS_FROM_BITS[(x & 1, z & 1)]

    @classmethod
    def parse(cls, token: str | PauliAxis) -> PauliAxis:
        if isinstance(token, PauliAxis):
            return token
        try:
            return cls[token.strip().upper()]
        except KeyError:
            raise PauliError(f"unknown Pauli axis {token!r}") from None

    def __str__(self) -> str:
        return self.name


_AXIS_FROM_BITS = {axis.bits: axis for axis in PauliAxis}
_PHASE_PREFIX = {0: "", 1: "+i", 2: "-", 3: "-i"}
_TEXT_RE = re.compile(r"^\s*([+-]?i?)([IXYZ_]*)\s*$")


def _popcount(v: int) -> int:
    return v.bit_count()


@dataclass(frozen=True)
class PauliString:
    """``i**phase`` times a tensor product of Hermitian single-qubit Paulis."""

    n: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self) -> None:
        if self.n < 0:
            raise PauliError(f"qubit count must be non-negative, got {self.n}")
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask or self.x < 0 or self.z < 0:
            raise PauliError(f"bit vectors exceed width {self.n}")
        object.__setattr__(self, "phase", self.phase % 4)

    # -- construction ----------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(n)

    @classmethod
    def from_axes(cls, axes, phase: int = 0) -> PauliString:
        """Build from a sequence of axes (or axis letters), qubit 0 first."""
        x = z = 0
        axes = [PauliAxis.parse(a) for a in axes]
        for j, axis in enumerate(axes):
            ax, az = axis.bits
            x |= ax << j
            z |= az << j
        return cls(len(axes), x, z, phase)

    @classmethod
    def parse(cls, text: str) -> PauliString:
        """Parse ``[sign]AXES`` where sign is one of ``+ - +i -i i``.

        ``_`` is accepted as a synonym for ``I``.
        """
        m = _TEXT_RE.match(text)
        if m is None or not m.group(2):
            raise PauliError(f"cannot parse Pauli string {text!r}")
        sign, body = m.group(1).lower(), m.group(2).upper().replace("_", "I")
        phase = {"": 0, "+": 0, "-": 2, "i": 1, "+i": 1, "-i": 3}[sign]
        return cls.from_axes(body, phase)

    # -- accessors -------------------------------------------------------

    def axis(self, j: int) -> PauliAxis:
        if not 0 <= j < self.n:
            raise PauliError(f"qubit {j} out of range for width {self.n}")
        return PauliAxis.from_bits(self.x >> j, self.z >> j)

    @property
    def axes(self) -> tuple[PauliAxis, ...]:
        return tuple(self.axis(j) for j in range(self.n))

    @property
    def support(self) -> int:
        """Bit set of qubits acted on non-trivially."""
        return self.x | self.z

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    @property
    def sign(self) -> int:
        """+1 or -1 for Hermitian strings."""
        if not self.is_hermitian:
            raise PauliError(f"{self} is not Hermitian")
        return 1 if self.phase == 0 else -1

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def unsigned(self) -> PauliString:
        return PauliString(self.n, self.x, self.z, 0)

    # -- algebra ---------------------------------------------------------

    def _check_width(self, other: PauliString) -> None:
        if self.n != other.n:
            raise PauliError(f"width mismatch: {self.n} vs {other.n}")

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def __neg__(self) -> PauliString:
        return PauliString(self.n, self.x, self.z, self.phase + 2)

    def with_phase(self, phase: int) -> PauliString:
        return PauliString(self.n, self.x, self.z, phase)

    def commutes(self, other: PauliString) -> bool:
        return commutes(self, other)

    def tensor(self, other: PauliString) -> PauliString:
        """``self ⊗ other`` with ``other`` on the higher qubit indices."""
        return PauliString(
            self.n + other.n,
            self.x | (other.x << self.n),
            self.z | (other.z << self.n),
            self.phase + other.phase,
        )

    def __str__(self) -> str:
        body = "".join(a.name for a in self.axes)
        return _PHASE_PREFIX[self.phase] + body

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """Operator product ``p·q`` with exact phase.

    Each qubit factor is written as ``i**(x z) X**x Z**z``; moving ``Z**z1``
    past ``X**x2`` costs ``(-1)**(z1 x2)``.
    """
    p._check_width(q)
    x, z = p.x ^ q.x, p.z ^ q.z
    phase = (
        p.phase
        + q.phase
        + _popcount(p.x & p.z)
        + _popcount(q.x & q.z)
        + 2 * _popcount(p.z & q.x)
        - _popcount(x & z)
    )
    return PauliString(p.n, x, z, phase)


def commutes(p: PauliString, q: PauliString) -> bool:
    """True iff the symplectic inner product of ``p`` and ``q`` is even."""
    p._check_width(q)
    return (_popcount(p.x & q.z) + _popcount(p.z & q.x)) % 2 == 0


def embed_single(axis: PauliAxis | str, i: int, n: int) -> PauliString:
    """``axis`` on qubit ``i`` and identity elsewhere, phase +1."""
    if not 0 <= i < n:
        raise PauliError(f"qubit {i} out of range for width {n}")
    ax, az = PauliAxis.parse(axis).bits
    return PauliString(n, ax << i, az << i)


def parse_observable(text: str) -> PauliString:
    """Parse a measurement observable; imaginary phases are rejected."""
    p = PauliString.parse(text)
    if not p.is_hermitian:
        raise PauliError(f"observable {text!r} carries an imaginary phase")
    return p
