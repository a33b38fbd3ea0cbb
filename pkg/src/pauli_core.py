# pauli_core.py
"""
Pauli-string algebra, the Hamiltonian container, the text format, the
Jordan-Wigner mapping and the particle-number symmetry operators.

Conventions used everywhere in the package:
  * the leftmost character of a Pauli string is qubit 1 (index 0 in code);
  * in a basis-state index qubit 0 is the most significant bit;
  * a bit value of 1 means <Z> = -1, i.e. an occupied spin orbital.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from errors import (
    DimensionTooLarge,
    DuplicateString,
    HamiltonianParseError,
    ImaginaryCoefficient,
    InvalidAxisChar,
    LengthMismatch,
    MalformedNumber,
    MismatchedQubitCount,
)

logger = logging.getLogger(__name__)

AXES = "IXYZ"
ZERO_TOLERANCE = 1e-12
COMMUTATOR_TOLERANCE = 1e-10
DENSE_COMMUTATOR_MAX_QUBITS = 8
DENSE_MATRIX_MAX_QUBITS = 12

_PRODUCT_TABLE: dict[tuple[str, str], tuple[complex, str]] = {}
for _a in AXES:
    _PRODUCT_TABLE[("I", _a)] = (1, _a)
    _PRODUCT_TABLE[(_a, "I")] = (1, _a)
    _PRODUCT_TABLE[(_a, _a)] = (1, "I")
for _a, _b, _c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _PRODUCT_TABLE[(_a, _b)] = (1j, _c)
    _PRODUCT_TABLE[(_b, _a)] = (-1j, _c)


# ---------------------------------------------------------------------------
# Low-level string kernels
# ---------------------------------------------------------------------------

@lru_cache(maxsize=65536)
def _multiply_axes(p: str, q: str) -> tuple[complex, str]:
    phase = 1
    out = []
    for a, b in zip(p, q):
        factor, c = _PRODUCT_TABLE[(a, b)]
        phase *= factor
        out.append(c)
    return complex(phase), "".join(out)


def _axes_commute(p: str, q: str) -> bool:
    clashes = sum(1 for a, b in zip(p, q) if a != "I" and b != "I" and a != b)
    return clashes % 2 == 0


@lru_cache(maxsize=4096)
def pauli_action(axes: str) -> tuple[np.ndarray, np.ndarray]:
    """Index map and phases of a Pauli string on the computational basis.

    P|i> = phases[i] |target[i]>, with target[i] = i XOR x_mask and
    phases[i] = i^(#Y) * (-1)^popcount(i & z_mask).
    """
    n = len(axes)
    x_mask = z_mask = 0
    n_y = 0
    for q, c in enumerate(axes):
        bit = 1 << (n - 1 - q)
        if c in "XY":
            x_mask |= bit
        if c in "YZ":
            z_mask |= bit
        if c == "Y":
            n_y += 1
    index = np.arange(2 ** n, dtype=np.int64)
    parity = (np.bitwise_count(index & z_mask) & 1).astype(np.int64)
    phases = (1j ** n_y) * (1 - 2 * parity).astype(np.complex128)
    target = index ^ x_mask
    target.flags.writeable = False
    phases.flags.writeable = False
    return target, phases


def apply_pauli(axes: str, amplitudes: np.ndarray) -> np.ndarray:
    """Apply a Pauli string along axis 0 of an array of shape (2**n, ...)."""
    target, phases = pauli_action(axes)
    out = np.empty(amplitudes.shape, dtype=np.complex128)
    out[target] = phases.reshape((-1,) + (1,) * (amplitudes.ndim - 1)) * amplitudes
    return out


@lru_cache(maxsize=64)
def z_signs(n_qubits: int) -> np.ndarray:
    """(2**n, n) table of Z eigenvalues, +1 for bit 0 and -1 for bit 1."""
    index = np.arange(2 ** n_qubits, dtype=np.int64)
    shifts = np.arange(n_qubits - 1, -1, -1, dtype=np.int64)
    bits = (index[:, None] >> shifts[None, :]) & 1
    table = (1 - 2 * bits).astype(np.float64)
    table.flags.writeable = False
    return table


def basis_index(bits: Sequence[int]) -> int:
    index = 0
    for b in bits:
        index = (index << 1) | int(b)
    return index


def index_bits(index: int, n_qubits: int) -> tuple[int, ...]:
    return tuple((index >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits))


def basis_state(bits: Sequence[int]) -> np.ndarray:
    state = np.zeros(2 ** len(bits), dtype=np.complex128)
    state[basis_index(bits)] = 1.0
    return state


# ---------------------------------------------------------------------------
# Pauli strings and terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class PauliString:
    axes: str

    def __post_init__(self):
        bad = next((c for c in self.axes if c not in AXES), None)
        if bad is not None:
            raise InvalidAxisChar(f"invalid Pauli axis {bad!r} in {self.axes!r}")

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls("I" * n_qubits)

    @classmethod
    def from_ops(cls, n_qubits: int, ops: Mapping[int, str]) -> "PauliString":
        axes = ["I"] * n_qubits
        for q, c in ops.items():
            axes[q] = c
        return cls("".join(axes))

    def __len__(self) -> int:
        return len(self.axes)

    def __str__(self) -> str:
        return self.axes

    @property
    def n_qubits(self) -> int:
        return len(self.axes)

    @property
    def weight(self) -> int:
        return sum(1 for c in self.axes if c != "I")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, c in enumerate(self.axes) if c != "I")

    @property
    def is_diagonal(self) -> bool:
        return all(c in "IZ" for c in self.axes)

    def count(self, axis: str) -> int:
        return self.axes.count(axis)

    def commutes(self, other: "PauliString") -> bool:
        if len(other) != len(self):
            raise LengthMismatch(f"cannot compare {self.axes!r} with {other.axes!r}")
        return _axes_commute(self.axes, other.axes)

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        return apply_pauli(self.axes, amplitudes)

    def matrix(self) -> np.ndarray:
        target, phases = pauli_action(self.axes)
        dim = 2 ** self.n_qubits
        out = np.zeros((dim, dim), dtype=np.complex128)
        out[target, np.arange(dim)] = phases
        return out


def _as_string(value: "PauliString | str") -> PauliString:
    return value if isinstance(value, PauliString) else PauliString(value)


def pauli_product(p: "PauliString | str", q: "PauliString | str") -> tuple[complex, PauliString]:
    """Return (phase, R) with phase * R equal to the matrix product P Q."""
    p, q = _as_string(p), _as_string(q)
    if len(p) != len(q):
        raise LengthMismatch(f"cannot multiply {p.axes!r} ({len(p)} qubits) by {q.axes!r} ({len(q)} qubits)")
    phase, axes = _multiply_axes(p.axes, q.axes)
    return phase, PauliString(axes)


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    string: PauliString

    def __post_init__(self):
        if isinstance(self.string, str):
            object.__setattr__(self, "string", PauliString(self.string))
        value = self.coefficient
        if isinstance(value, complex):
            if abs(value.imag) > COMMUTATOR_TOLERANCE:
                raise ImaginaryCoefficient(f"coefficient {value} of {self.string.axes} is not real")
            value = value.real
        value = float(value)
        if not math.isfinite(value):
            raise MalformedNumber(f"coefficient of {self.string.axes} is not finite: {value}")
        object.__setattr__(self, "coefficient", value)


# ---------------------------------------------------------------------------
# Hamiltonian container
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PauliHamiltonian:
    """Identity offset plus real-weighted Pauli strings (Hartree)."""

    n_qubits: int
    identity_offset: float = 0.0
    terms: tuple[PauliTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "identity_offset", float(self.identity_offset))
        seen = set()
        for term in self.terms:
            if term.string.n_qubits != self.n_qubits:
                raise LengthMismatch(
                    f"term {term.string.axes!r} has {term.string.n_qubits} qubits, expected {self.n_qubits}"
                )
            if term.string.weight == 0:
                raise HamiltonianParseError("the all-I string belongs in identity_offset")
            if term.string in seen:
                raise DuplicateString(f"string {term.string.axes!r} appears twice")
            seen.add(term.string)

    @classmethod
    def from_dict(cls, n_qubits: int, coefficients: Mapping[str, float],
                  identity_offset: float = 0.0, drop_tolerance: float | None = None) -> "PauliHamiltonian":
        offset = float(identity_offset)
        terms = []
        for axes, value in coefficients.items():
            if set(axes) <= {"I"}:
                offset += float(value)
                continue
            if drop_tolerance is not None and abs(value) < drop_tolerance:
                continue
            terms.append(PauliTerm(value, PauliString(axes)))
        return cls(n_qubits, offset, tuple(terms))

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @cached_property
    def coefficients(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms], dtype=np.float64)

    @property
    def strings(self) -> list[PauliString]:
        return [t.string for t in self.terms]

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([t.string.weight for t in self.terms], dtype=np.int64)

    @property
    def mean_weight(self) -> float:
        return float(self.weights.mean()) if self.terms else 0.0

    @property
    def weight_std(self) -> float:
        return float(self.weights.std()) if self.terms else 0.0

    def as_dict(self) -> dict[str, float]:
        return {t.string.axes: t.coefficient for t in self.terms}

    def canonical(self) -> "PauliHamiltonian":
        return PauliHamiltonian(self.n_qubits, self.identity_offset,
                                tuple(sorted(self.terms, key=lambda t: t.string.axes)))

    def __add__(self, other: "PauliHamiltonian") -> "PauliHamiltonian":
        if other.n_qubits != self.n_qubits:
            raise MismatchedQubitCount(f"{self.n_qubits} vs {other.n_qubits} qubits")
        merged = self.as_dict()
        for term in other.terms:
            merged[term.string.axes] = merged.get(term.string.axes, 0.0) + term.coefficient
        return PauliHamiltonian.from_dict(self.n_qubits, merged,
                                          self.identity_offset + other.identity_offset)

    def diagonal(self) -> np.ndarray:
        """Diagonal of the matrix in the computational basis (real)."""
        diag = np.full(2 ** self.n_qubits, self.identity_offset, dtype=np.float64)
        for term in self.terms:
            if term.string.is_diagonal:
                _, phases = pauli_action(term.string.axes)
                diag += term.coefficient * phases.real
        return diag

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        out = self.identity_offset * np.asarray(amplitudes, dtype=np.complex128)
        for term in self.terms:
            out = out + term.coefficient * apply_pauli(term.string.axes, amplitudes)
        return out

    def expectation(self, state: np.ndarray) -> float:
        return float(np.vdot(state, self.apply(state)).real)

    def to_sparse(self) -> sparse.csr_matrix:
        if self.n_qubits > DENSE_MATRIX_MAX_QUBITS:
            raise DimensionTooLarge(f"{self.n_qubits} qubits exceed the matrix bound of {DENSE_MATRIX_MAX_QUBITS}")
        dim = 2 ** self.n_qubits
        columns = np.arange(dim)
        rows, cols, data = [columns], [columns], [np.full(dim, self.identity_offset, dtype=np.complex128)]
        for term in self.terms:
            target, phases = pauli_action(term.string.axes)
            rows.append(target)
            cols.append(columns)
            data.append(term.coefficient * phases)
        return sparse.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
        ).tocsr()

    def to_matrix(self) -> np.ndarray:
        return self.to_sparse().toarray()


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

def _parse_real(token: str, line_number: int) -> float:
    try:
        value = float(token)
    except ValueError:
        try:
            value = complex(token.replace("i", "j"))
        except ValueError:
            raise MalformedNumber(f"cannot read {token!r} as a number", line_number) from None
        if value.imag != 0.0:
            raise ImaginaryCoefficient(f"coefficient {token!r} is not real", line_number)
        value = value.real
    if not math.isfinite(value):
        raise MalformedNumber(f"coefficient {token!r} is not finite", line_number)
    return value


def parse_hamiltonian(text: str) -> PauliHamiltonian:
    """Parse the `<real> <IXYZ-string>` document format."""
    offset: float | None = None
    coefficients: dict[str, float] = {}
    n_qubits: int | None = None

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) > 2:
            raise HamiltonianParseError(f"expected '<real> <pauli-string>', got {line!r}", line_number)
        value = _parse_real(tokens[0], line_number)
        if len(tokens) == 1:
            if offset is not None:
                raise DuplicateString("identity offset given twice", line_number)
            offset = value
            continue

        axes = tokens[1]
        bad = next((c for c in axes if c not in AXES), None)
        if bad is not None:
            raise InvalidAxisChar(f"invalid Pauli axis {bad!r} in {axes!r}", line_number)
        if n_qubits is None:
            n_qubits = len(axes)
        elif len(axes) != n_qubits:
            raise LengthMismatch(f"string {axes!r} has {len(axes)} qubits, expected {n_qubits}", line_number)
        if axes in coefficients:
            raise DuplicateString(f"string {axes!r} appears twice", line_number)
        coefficients[axes] = value

    if n_qubits is None:
        raise HamiltonianParseError("document contains no Pauli terms")
    return PauliHamiltonian.from_dict(n_qubits, coefficients, offset or 0.0)


def serialize_hamiltonian(hamiltonian: PauliHamiltonian, header: str | None = None) -> str:
    lines = []
    if header:
        lines.extend(f"# {row}".rstrip() for row in header.splitlines())
    lines.append(repr(hamiltonian.identity_offset))
    lines.extend(f"{t.coefficient!r} {t.string.axes}" for t in hamiltonian.terms)
    return "\n".join(lines) + "\n"


def load_hamiltonian(path: str) -> PauliHamiltonian:
    with open(path, encoding="utf-8") as handle:
        hamiltonian = parse_hamiltonian(handle.read())
    logger.info("Loaded %d Pauli terms on %d qubits from %s",
                hamiltonian.n_terms, hamiltonian.n_qubits, path)
    return hamiltonian


# ---------------------------------------------------------------------------
# Complex Pauli sums (operator algebra)
# ---------------------------------------------------------------------------

class PauliSum:
    """Complex linear combination of Pauli strings, used for operator algebra.

    Hamiltonians are real combinations; PauliSum is the scratch space in which
    ladder operators and squared number operators are multiplied out before
    being converted back with to_hamiltonian().
    """

    __array_ufunc__ = None

    def __init__(self, n_qubits: int, terms: Mapping[str, complex] | None = None):
        self.n_qubits = n_qubits
        self.terms: dict[str, complex] = dict(terms or {})

    @classmethod
    def identity(cls, n_qubits: int, coefficient: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {"I" * n_qubits: complex(coefficient)})

    @classmethod
    def single(cls, n_qubits: int, ops: Mapping[int, str], coefficient: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {PauliString.from_ops(n_qubits, ops).axes: complex(coefficient)})

    @classmethod
    def from_hamiltonian(cls, hamiltonian: PauliHamiltonian) -> "PauliSum":
        out = cls.identity(hamiltonian.n_qubits, hamiltonian.identity_offset)
        for term in hamiltonian.terms:
            out.terms[term.string.axes] = complex(term.coefficient)
        return out

    def copy(self) -> "PauliSum":
        return PauliSum(self.n_qubits, self.terms)

    def _check(self, other: "PauliSum"):
        if other.n_qubits != self.n_qubits:
            raise MismatchedQubitCount(f"{self.n_qubits} vs {other.n_qubits} qubits")

    def __iadd__(self, other):
        if not isinstance(other, PauliSum):
            other = PauliSum.identity(self.n_qubits, other)
        self._check(other)
        for axes, value in other.terms.items():
            self.terms[axes] = self.terms.get(axes, 0.0) + value
        return self

    def __add__(self, other):
        out = self.copy()
        out += other
        return out

    __radd__ = __add__

    def __neg__(self):
        return -1.0 * self

    def __sub__(self, other):
        return self + (-1.0 * other if isinstance(other, PauliSum) else -other)

    def __mul__(self, other):
        if not isinstance(other, PauliSum):
            return PauliSum(self.n_qubits, {k: v * other for k, v in self.terms.items()})
        self._check(other)
        out: dict[str, complex] = {}
        for p, a in self.terms.items():
            for q, b in other.terms.items():
                phase, r = _multiply_axes(p, q)
                out[r] = out.get(r, 0.0) + phase * a * b
        return PauliSum(self.n_qubits, out)

    def __rmul__(self, other):
        return self * other

    def adjoint(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {k: v.conjugate() for k, v in self.terms.items()})

    def simplify(self, tolerance: float = ZERO_TOLERANCE) -> "PauliSum":
        return PauliSum(self.n_qubits, {k: v for k, v in self.terms.items() if abs(v) >= tolerance})

    def to_matrix(self) -> np.ndarray:
        dim = 2 ** self.n_qubits
        out = np.zeros((dim, dim), dtype=np.complex128)
        columns = np.arange(dim)
        for axes, value in self.terms.items():
            target, phases = pauli_action(axes)
            out[target, columns] += value * phases
        return out

    def to_hamiltonian(self, tolerance: float = ZERO_TOLERANCE) -> PauliHamiltonian:
        real = {}
        for axes, value in self.terms.items():
            if abs(value.imag) > COMMUTATOR_TOLERANCE:
                raise ImaginaryCoefficient(f"operator is not Hermitian: {axes} has coefficient {value}")
            real[axes] = value.real
        return PauliHamiltonian.from_dict(self.n_qubits, real, drop_tolerance=tolerance)


# ---------------------------------------------------------------------------
# Fermion-to-qubit mapping
# ---------------------------------------------------------------------------

class SpinOrdering(str, Enum):
    BLOCKED = "blocked"
    INTERLEAVED = "interleaved"


def mode_index(orbital: int, spin: int, n_orbitals: int, ordering: SpinOrdering) -> int:
    """Qubit index of spatial orbital `orbital` with spin 0 (up) or 1 (down)."""
    if SpinOrdering(ordering) is SpinOrdering.BLOCKED:
        return spin * n_orbitals + orbital
    return 2 * orbital + spin


def spin_qubits(n_qubits: int, ordering: SpinOrdering) -> tuple[tuple[int, ...], tuple[int, ...]]:
    if n_qubits % 2:
        raise ValueError(f"spin-orbital registers need an even qubit count, got {n_qubits}")
    half = n_qubits // 2
    up = tuple(mode_index(i, 0, half, ordering) for i in range(half))
    down = tuple(mode_index(i, 1, half, ordering) for i in range(half))
    return up, down


def ladder_operator(mode: int, n_modes: int, dagger: bool = False) -> PauliSum:
    """Jordan-Wigner image c_m = (X_m + iY_m)/2 Z_{m-1} ... Z_1 (or its adjoint)."""
    chain = {k: "Z" for k in range(mode)}
    x_part = PauliSum.single(n_modes, {**chain, mode: "X"}, 0.5)
    y_part = PauliSum.single(n_modes, {**chain, mode: "Y"}, -0.5j if dagger else 0.5j)
    return x_part + y_part


def fermion_to_qubit(one_body: np.ndarray, two_body: np.ndarray | None = None,
                     constant: float = 0.0) -> PauliHamiltonian:
    """Map sum h1[p,q] c+_p c_q + sum h2[p,q,r,s] c+_p c+_q c_r c_s + constant."""
    one_body = np.asarray(one_body)
    n_modes = one_body.shape[0]
    create = [ladder_operator(m, n_modes, dagger=True) for m in range(n_modes)]
    annihilate = [ladder_operator(m, n_modes) for m in range(n_modes)]

    acc = PauliSum.identity(n_modes, constant)
    for p, q in zip(*np.nonzero(one_body)):
        acc += complex(one_body[p, q]) * (create[p] * annihilate[q])
    if two_body is not None:
        pairs = {}
        for p, q, r, s in zip(*np.nonzero(two_body)):
            if (p, q) not in pairs:
                pairs[(p, q)] = create[p] * create[q]
            acc += complex(two_body[p, q, r, s]) * (pairs[(p, q)] * (annihilate[r] * annihilate[s]))
    return acc.to_hamiltonian()


@dataclass(frozen=True, eq=False)
class IntegralTable:
    """Spin-resolved one- and two-body integrals in a spatial-orbital basis.

    one_body[sigma, i, j] multiplies c+_{i sigma} c_{j sigma}; two_body[sigma,
    sigma', i, j, k, l] multiplies (1/2) c+_{i sigma} c+_{j sigma'} c_{k sigma}
    c_{l sigma'}.
    """

    one_body: np.ndarray
    two_body: np.ndarray | None = None
    constant: float = 0.0
    ordering: SpinOrdering = SpinOrdering.BLOCKED

    def __post_init__(self):
        one = np.asarray(self.one_body, dtype=np.float64)
        if one.ndim != 3 or one.shape[0] != 2 or one.shape[1] != one.shape[2]:
            raise ValueError(f"one_body must have shape (2, n, n), got {one.shape}")
        if not np.all(np.isfinite(one)):
            raise ValueError("one_body contains non-finite entries")
        if not np.allclose(one, one.transpose(0, 2, 1), atol=ZERO_TOLERANCE):
            raise ValueError("one_body must be symmetric in (i, j) for each spin")
        object.__setattr__(self, "one_body", one)
        if self.two_body is not None:
            two = np.asarray(self.two_body, dtype=np.float64)
            n = one.shape[1]
            if two.shape != (2, 2, n, n, n, n):
                raise ValueError(f"two_body must have shape (2, 2, {n}, {n}, {n}, {n}), got {two.shape}")
            if not np.all(np.isfinite(two)):
                raise ValueError("two_body contains non-finite entries")
            object.__setattr__(self, "two_body", two)
        object.__setattr__(self, "ordering", SpinOrdering(self.ordering))

    @property
    def n_orbitals(self) -> int:
        return self.one_body.shape[1]

    def spin_orbital_arrays(self) -> tuple[np.ndarray, np.ndarray | None]:
        n = self.n_orbitals
        n_modes = 2 * n
        h1 = np.zeros((n_modes, n_modes))
        for sigma in range(2):
            for i in range(n):
                for j in range(n):
                    h1[mode_index(i, sigma, n, self.ordering), mode_index(j, sigma, n, self.ordering)] = \
                        self.one_body[sigma, i, j]
        if self.two_body is None:
            return h1, None
        h2 = np.zeros((n_modes,) * 4)
        for sigma, tau, i, j, k, l in zip(*np.nonzero(self.two_body)):
            h2[mode_index(i, sigma, n, self.ordering), mode_index(j, tau, n, self.ordering),
               mode_index(k, sigma, n, self.ordering), mode_index(l, tau, n, self.ordering)] += \
                0.5 * self.two_body[sigma, tau, i, j, k, l]
        return h1, h2


def jordan_wigner(table: IntegralTable) -> PauliHamiltonian:
    h1, h2 = table.spin_orbital_arrays()
    hamiltonian = fermion_to_qubit(h1, h2, table.constant)
    logger.debug("Jordan-Wigner mapped %d orbitals (%s) to %d Pauli terms",
                 table.n_orbitals, table.ordering.value, hamiltonian.n_terms)
    return hamiltonian


# ---------------------------------------------------------------------------
# Symmetries
# ---------------------------------------------------------------------------

class SymmetryKind(str, Enum):
    PARITY = "parity"
    N_UP = "n_up"
    N_DOWN = "n_down"
    N_TOTAL = "n_total"


@dataclass(frozen=True)
class SymmetryOperator:
    kind: SymmetryKind
    operator: PauliHamiltonian
    sector_value: float


def parity_operator(n_qubits: int) -> PauliHamiltonian:
    return PauliHamiltonian(n_qubits, 0.0, (PauliTerm(1.0, PauliString("Z" * n_qubits)),))


def number_operator(qubits: Iterable[int], n_qubits: int) -> PauliHamiltonian:
    """Sum of (I - Z_q)/2 over the given qubits."""
    qubits = tuple(qubits)
    terms = tuple(PauliTerm(-0.5, PauliString.from_ops(n_qubits, {q: "Z"})) for q in qubits)
    return PauliHamiltonian(n_qubits, 0.5 * len(qubits), terms)


def symmetry_operators(n_qubits: int, bits: Sequence[int] | None = None,
                       ordering: SpinOrdering = SpinOrdering.BLOCKED) -> dict[SymmetryKind, SymmetryOperator]:
    """Parity and particle-number operators with sector values read off `bits`."""
    bits = tuple(bits) if bits is not None else (0,) * n_qubits
    if len(bits) != n_qubits:
        raise LengthMismatch(f"reference state has {len(bits)} bits, expected {n_qubits}")
    up, down = spin_qubits(n_qubits, ordering)
    n_up = sum(bits[q] for q in up)
    n_down = sum(bits[q] for q in down)
    return {
        SymmetryKind.PARITY: SymmetryOperator(SymmetryKind.PARITY, parity_operator(n_qubits),
                                              float((-1) ** sum(bits))),
        SymmetryKind.N_UP: SymmetryOperator(SymmetryKind.N_UP, number_operator(up, n_qubits), float(n_up)),
        SymmetryKind.N_DOWN: SymmetryOperator(SymmetryKind.N_DOWN, number_operator(down, n_qubits),
                                              float(n_down)),
        SymmetryKind.N_TOTAL: SymmetryOperator(SymmetryKind.N_TOTAL, number_operator(range(n_qubits), n_qubits),
                                               float(n_up + n_down)),
    }


def commutes_with(hamiltonian: PauliHamiltonian, symmetry: "SymmetryOperator | PauliHamiltonian") -> bool:
    """True iff [H, S] vanishes (max-abs entry at most 1e-10)."""
    other = symmetry.operator if isinstance(symmetry, SymmetryOperator) else symmetry
    if other.n_qubits != hamiltonian.n_qubits:
        raise MismatchedQubitCount(
            f"Hamiltonian has {hamiltonian.n_qubits} qubits, symmetry has {other.n_qubits}"
        )

    if hamiltonian.n_qubits <= DENSE_COMMUTATOR_MAX_QUBITS:
        a = hamiltonian.to_matrix()
        b = other.to_matrix()
        return float(np.max(np.abs(a @ b - b @ a), initial=0.0)) <= COMMUTATOR_TOLERANCE

    # [P, Q] = 2PQ for anticommuting strings, 0 otherwise
    residual: dict[str, complex] = {}
    for t in hamiltonian.terms:
        for u in other.terms:
            if not _axes_commute(t.string.axes, u.string.axes):
                phase, r = _multiply_axes(t.string.axes, u.string.axes)
                residual[r] = residual.get(r, 0.0) + 2.0 * phase * t.coefficient * u.coefficient
    worst = max((abs(v) for v in residual.values()), default=0.0)
    if worst <= COMMUTATOR_TOLERANCE:
        return True
    if worst >= 100 * COMMUTATOR_TOLERANCE:
        return False
    raise DimensionTooLarge(
        f"symbolic commutator residual {worst:.3e} is inconclusive on {hamiltonian.n_qubits} qubits"
    )


def detect_spin_ordering(hamiltonian: PauliHamiltonian) -> SpinOrdering | None:
    """Spin layout under which H conserves n_up and n_down, if any."""
    if hamiltonian.n_qubits % 2:
        return None
    for ordering in SpinOrdering:
        ops = symmetry_operators(hamiltonian.n_qubits, None, ordering)
        if commutes_with(hamiltonian, ops[SymmetryKind.N_UP]) and commutes_with(hamiltonian, ops[SymmetryKind.N_DOWN]):
            return ordering
    return None


def expectation_in_basis_state(hamiltonian: PauliHamiltonian, bits: Sequence[int]) -> float:
    if len(bits) != hamiltonian.n_qubits:
        raise LengthMismatch(f"basis state has {len(bits)} bits, Hamiltonian has {hamiltonian.n_qubits} qubits")
    energy = hamiltonian.identity_offset
    for term in hamiltonian.terms:
        if term.string.is_diagonal:
            energy += term.coefficient * (-1) ** sum(int(bits[q]) for q in term.string.support)
    return float(energy)


def hartree_fock_bits(hamiltonian: PauliHamiltonian, n_up: int, n_down: int,
                      ordering: SpinOrdering = SpinOrdering.BLOCKED) -> tuple[int, ...]:
    """Lowest-energy basis state of the single-Z part within a particle sector.

    Occupying qubit q changes <c_q Z_q> from +c_q to -c_q, so each spin fills
    the qubits with the largest single-Z coefficients first.
    """
    single_z = np.zeros(hamiltonian.n_qubits)
    for term in hamiltonian.terms:
        if term.string.weight == 1 and term.string.is_diagonal:
            single_z[term.string.support[0]] = term.coefficient
    up, down = spin_qubits(hamiltonian.n_qubits, ordering)
    bits = [0] * hamiltonian.n_qubits
    for qubits, count in ((up, n_up), (down, n_down)):
        if count > len(qubits):
            raise ValueError(f"cannot place {count} electrons in {len(qubits)} spin orbitals")
        ranked = sorted(qubits, key=lambda q: (-single_z[q], q))
        for q in ranked[:count]:
            bits[q] = 1
    return tuple(bits)
