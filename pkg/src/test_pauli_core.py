# test_pauli_core.py
"""
Pauli algebra, the Hamiltonian text format, Jordan-Wigner and the symmetry
operators, checked against dense matrices.
"""
import itertools

import numpy as np
import pytest

from errors import (
    DuplicateString,
    HamiltonianParseError,
    ImaginaryCoefficient,
    InvalidAxisChar,
    LengthMismatch,
    MalformedNumber,
    MismatchedQubitCount,
)
from paths import H3PLUS_HAMILTONIAN
from pauli_core import (
    IntegralTable,
    PauliHamiltonian,
    PauliSum,
    PauliString,
    PauliTerm,
    SpinOrdering,
    SymmetryKind,
    commutes_with,
    detect_spin_ordering,
    expectation_in_basis_state,
    fermion_to_qubit,
    hartree_fock_bits,
    jordan_wigner,
    ladder_operator,
    number_operator,
    parity_operator,
    parse_hamiltonian,
    pauli_product,
    serialize_hamiltonian,
    symmetry_operators,
)

SINGLE = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def kron_string(axes: str) -> np.ndarray:
    out = np.eye(1)
    for c in axes:
        out = np.kron(out, SINGLE[c])
    return out


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def test_parse_single_line():
    hamiltonian = parse_hamiltonian("0.5 ZZ")
    assert hamiltonian.n_qubits == 2
    assert hamiltonian.identity_offset == 0.0
    assert hamiltonian.as_dict() == {"ZZ": 0.5}


def test_bundled_hamiltonian_shape(h3plus):
    assert h3plus.n_qubits == 6
    assert h3plus.n_terms == 41
    assert h3plus.identity_offset == pytest.approx(-2.77111111)
    assert h3plus.mean_weight == pytest.approx(128 / 41)
    assert h3plus.weight_std == pytest.approx(1.19, abs=0.01)


def test_bundled_header_documents_the_repairs(h3plus):
    with open(H3PLUS_HAMILTONIAN, encoding="utf-8") as handle:
        header = [line[1:].strip() for line in handle if line.startswith("#")]
    repairs = [line.split()[:3] for line in header if "->" in line]
    assert len(repairs) == 9
    added = 0
    for before, _, after in repairs:
        assert len(before) == 5 and len(after) == 6
        assert after in h3plus.as_dict()
        added += sum(c != "I" for c in after) - sum(c != "I" for c in before)
    assert added == 3
    assert 41 * h3plus.mean_weight - added == pytest.approx(125)
    text = " ".join(header)
    assert f"128/41 = {h3plus.mean_weight:.2f}" in text
    assert "125/41 = 3.05" in text


def test_parse_comments_offset_and_scientific_notation():
    text = "# header\n\n-1.5\n7.96e-4 ZZ\n  2E-1   XY  \n"
    hamiltonian = parse_hamiltonian(text)
    assert hamiltonian.identity_offset == -1.5
    assert hamiltonian.as_dict() == {"ZZ": 7.96e-4, "XY": 0.2}


@pytest.mark.parametrize("text, error, line", [
    ("0.1 IXQ", InvalidAxisChar, 1),
    ("0.1 XX\n0.2 XXX", LengthMismatch, 2),
    ("0.1 XX\n# c\n0.3 XX", DuplicateString, 3),
    ("abc XX", MalformedNumber, 1),
    ("nan XX", MalformedNumber, 1),
    ("0.5i XX", ImaginaryCoefficient, 1),
    ("1.0\n2.0\n0.1 Z", DuplicateString, 2),
    ("0.1 X Y", HamiltonianParseError, 1),
])
def test_parse_errors_name_the_line(text, error, line):
    with pytest.raises(error) as info:
        parse_hamiltonian(text)
    assert info.value.line_number == line
    assert f"line {line}" in str(info.value)


def test_parse_accepts_real_complex_literal():
    assert parse_hamiltonian("1+0i Z").as_dict() == {"Z": 1.0}


def test_parse_rejects_empty_document():
    with pytest.raises(HamiltonianParseError):
        parse_hamiltonian("# nothing here\n-1.0\n")


def test_serialize_parse_round_trip(h3plus):
    canonical = h3plus.canonical()
    assert parse_hamiltonian(serialize_hamiltonian(canonical, header="round trip")) == canonical


def test_hamiltonian_rejects_identity_and_duplicates():
    with pytest.raises(HamiltonianParseError):
        PauliHamiltonian(2, 0.0, (PauliTerm(1.0, PauliString("II")),))
    with pytest.raises(DuplicateString):
        PauliHamiltonian(1, 0.0, (PauliTerm(1.0, "Z"), PauliTerm(2.0, "Z")))
    with pytest.raises(ImaginaryCoefficient):
        PauliTerm(1j, "Z")


def test_sum_of_hamiltonians_merges_terms():
    a = PauliHamiltonian.from_dict(2, {"ZZ": 0.5, "XI": 1.0}, 0.25)
    b = PauliHamiltonian.from_dict(2, {"ZZ": 0.25}, 0.5)
    total = a + b
    assert total.identity_offset == 0.75
    assert total.as_dict() == {"ZZ": 0.75, "XI": 1.0}
    with pytest.raises(MismatchedQubitCount):
        a + PauliHamiltonian.from_dict(3, {"ZZZ": 1.0})


# ---------------------------------------------------------------------------
# Pauli algebra
# ---------------------------------------------------------------------------

def test_single_qubit_matrices():
    for axis, matrix in SINGLE.items():
        assert np.allclose(PauliString(axis).matrix(), matrix)


def test_product_examples():
    assert pauli_product("X", "Y") == (1j, PauliString("Z"))
    assert pauli_product("XX", "ZZ") == (-1, PauliString("YY"))
    for axes in ("XYZ", "IIZ", "YYYY"):
        assert pauli_product(axes, axes) == (1, PauliString("I" * len(axes)))


def test_product_matches_matrices_exhaustively_on_two_qubits():
    strings = ["".join(p) for p in itertools.product("IXYZ", repeat=2)]
    for p, q in itertools.product(strings, strings):
        phase, r = pauli_product(p, q)
        assert phase in (1, -1, 1j, -1j)
        assert np.allclose(phase * kron_string(r.axes), kron_string(p) @ kron_string(q))


@pytest.mark.parametrize("n_qubits", [3, 4])
def test_product_matches_matrices_on_random_strings(n_qubits):
    rng = np.random.default_rng(n_qubits)
    for _ in range(40):
        p, q = ("".join(rng.choice(list("IXYZ"), size=n_qubits)) for _ in range(2))
        phase, r = pauli_product(p, q)
        assert np.allclose(phase * r.matrix(), kron_string(p) @ kron_string(q))


def test_product_is_associative_with_phases():
    rng = np.random.default_rng(7)
    for _ in range(20):
        p, q, r = ("".join(rng.choice(list("IXYZ"), size=3)) for _ in range(3))
        a1, pq = pauli_product(p, q)
        a2, left = pauli_product(pq, r)
        b1, qr = pauli_product(q, r)
        b2, right = pauli_product(p, qr)
        assert left == right
        assert a1 * a2 == pytest.approx(b1 * b2)


def test_product_length_mismatch():
    with pytest.raises(LengthMismatch):
        pauli_product("XX", "XXX")


def test_invalid_axis_in_string():
    with pytest.raises(InvalidAxisChar):
        PauliString("XQ")


def test_commutation_matches_matrices():
    rng = np.random.default_rng(3)
    for _ in range(30):
        p, q = (PauliString("".join(rng.choice(list("IXYZ"), size=3))) for _ in range(2))
        a, b = p.matrix(), q.matrix()
        assert p.commutes(q) == np.allclose(a @ b, b @ a)


def test_to_matrix_agrees_with_kron(random_hamiltonian):
    hamiltonian = random_hamiltonian(3, 10, seed=1)
    dense = hamiltonian.identity_offset * np.eye(8, dtype=complex)
    for term in hamiltonian.terms:
        dense += term.coefficient * kron_string(term.string.axes)
    assert np.allclose(hamiltonian.to_matrix(), dense)
    state = np.random.default_rng(2).normal(size=8) + 0j
    assert np.allclose(hamiltonian.apply(state), dense @ state)
    assert np.allclose(np.diag(dense).real, hamiltonian.diagonal())


def test_pauli_sum_algebra():
    x = PauliSum.single(1, {0: "X"})
    y = PauliSum.single(1, {0: "Y"})
    assert (x * y).terms == {"Z": 1j}
    commutator = (x * y - y * x).simplify()
    assert commutator.terms == {"Z": 2j}
    assert np.allclose(commutator.to_matrix(), 2j * kron_string("Z"))
    assert np.allclose((commutator * commutator.adjoint()).to_matrix(), 4.0 * np.eye(2))
    with pytest.raises(ImaginaryCoefficient):
        commutator.to_hamiltonian()
    with pytest.raises(MismatchedQubitCount):
        x * PauliSum.single(2, {0: "X"})


def test_pauli_sum_round_trips_a_hamiltonian(toy_hamiltonian):
    as_sum = PauliSum.from_hamiltonian(toy_hamiltonian) + 0.0
    assert np.allclose(as_sum.to_matrix(), toy_hamiltonian.to_matrix())
    back = as_sum.to_hamiltonian()
    assert back.identity_offset == pytest.approx(toy_hamiltonian.identity_offset)
    assert np.allclose(back.to_matrix(), toy_hamiltonian.to_matrix())


# ---------------------------------------------------------------------------
# Symmetries
# ---------------------------------------------------------------------------

def test_bundled_hamiltonian_conserves_parity_and_numbers(h3plus, hf_bits):
    ops = symmetry_operators(6, hf_bits, SpinOrdering.INTERLEAVED)
    for kind in SymmetryKind:
        assert commutes_with(h3plus, ops[kind]), kind


def test_spin_ordering_is_pinned_by_the_commutator(h3plus):
    blocked = symmetry_operators(6, None, SpinOrdering.BLOCKED)
    assert not (commutes_with(h3plus, blocked[SymmetryKind.N_UP])
                and commutes_with(h3plus, blocked[SymmetryKind.N_DOWN]))
    assert detect_spin_ordering(h3plus) is SpinOrdering.INTERLEAVED


def test_anticommuting_single_qubit_pair():
    x = PauliHamiltonian.from_dict(1, {"X": 1.0})
    assert not commutes_with(x, parity_operator(1))
    with pytest.raises(MismatchedQubitCount):
        commutes_with(x, parity_operator(2))


def test_symbolic_commutator_above_dense_bound():
    n = 10
    hopping = PauliHamiltonian.from_dict(n, {"XX" + "I" * (n - 2): 0.5, "YY" + "I" * (n - 2): 0.5,
                                             "Z" + "I" * (n - 1): 0.3})
    assert commutes_with(hopping, number_operator(range(n), n))
    assert not commutes_with(hopping, number_operator([0], n))


def test_symmetry_operator_sector_values(hf_bits):
    ops = symmetry_operators(6, hf_bits, SpinOrdering.INTERLEAVED)
    assert ops[SymmetryKind.PARITY].sector_value == 1.0
    assert ops[SymmetryKind.N_UP].sector_value == 1.0
    assert ops[SymmetryKind.N_DOWN].sector_value == 1.0
    assert ops[SymmetryKind.N_TOTAL].sector_value == 2.0
    assert ops[SymmetryKind.PARITY].operator.as_dict() == {"ZZZZZZ": 1.0}


def test_hartree_fock_bits(h3plus, hf_bits):
    assert hartree_fock_bits(h3plus, 1, 1, SpinOrdering.INTERLEAVED) == hf_bits


# ---------------------------------------------------------------------------
# Basis-state expectation
# ---------------------------------------------------------------------------

def test_basis_expectation_examples():
    assert expectation_in_basis_state(PauliHamiltonian.from_dict(2, {"ZZ": 0.5}), (1, 1)) == 0.5
    only_x = PauliHamiltonian.from_dict(2, {"XX": 0.3, "XI": 0.2}, -0.7)
    assert expectation_in_basis_state(only_x, (0, 1)) == -0.7
    with pytest.raises(LengthMismatch):
        expectation_in_basis_state(only_x, (0, 1, 1))


def test_hartree_fock_energy(h3plus, hf_bits, e_hf):
    assert e_hf == pytest.approx(-1.93453511, abs=1e-7)
    state = np.zeros(64)
    state[0b110000] = 1.0
    assert h3plus.expectation(state) == pytest.approx(e_hf, abs=1e-12)


# ---------------------------------------------------------------------------
# Jordan-Wigner
# ---------------------------------------------------------------------------

def _fermion_matrices(n_modes: int) -> list[np.ndarray]:
    """Annihilators in the occupation basis, mode 0 the most significant bit."""
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    out = []
    for m in range(n_modes):
        factors = [SINGLE["Z"]] * m + [lower] + [SINGLE["I"]] * (n_modes - m - 1)
        matrix = np.eye(1)
        for f in factors:
            matrix = np.kron(matrix, f)
        out.append(matrix)
    return out


def test_number_operator_image():
    hamiltonian = fermion_to_qubit(np.array([[1.0]]))
    assert hamiltonian.identity_offset == pytest.approx(0.5)
    assert hamiltonian.as_dict() == pytest.approx({"Z": -0.5})


def test_hopping_image():
    t = 0.7
    hamiltonian = fermion_to_qubit(np.array([[0.0, t], [t, 0.0]]))
    assert hamiltonian.identity_offset == pytest.approx(0.0)
    assert hamiltonian.as_dict() == pytest.approx({"XX": t / 2, "YY": t / 2})


def test_ladder_operators_anticommute():
    n = 4
    c = [ladder_operator(m, n).to_matrix() for m in range(n)]
    for i, j in itertools.product(range(n), repeat=2):
        dagger = c[j].conj().T
        assert np.allclose(c[i] @ dagger + dagger @ c[i], np.eye(2 ** n) * (i == j))
        assert np.allclose(c[i] @ c[j] + c[j] @ c[i], 0.0)


def test_mapping_matches_occupation_basis_oracle():
    rng = np.random.default_rng(11)
    n = 3
    h1 = rng.normal(size=(n, n))
    h1 = h1 + h1.T
    a = rng.normal(size=(n, n, n, n))
    h2 = a + a.transpose(3, 2, 1, 0)
    constant = 0.4

    c = _fermion_matrices(n)
    cd = [m.conj().T for m in c]
    dense = constant * np.eye(2 ** n, dtype=complex)
    for p, q in itertools.product(range(n), repeat=2):
        dense += h1[p, q] * cd[p] @ c[q]
    for p, q, r, s in itertools.product(range(n), repeat=4):
        dense += h2[p, q, r, s] * cd[p] @ cd[q] @ c[r] @ c[s]

    mapped = fermion_to_qubit(h1, h2, constant)
    assert np.max(np.abs(mapped.to_matrix() - dense)) <= 1e-12


def test_jordan_wigner_spin_orbital_layouts():
    one_body = np.full((2, 1, 1), 0.8)
    for ordering in SpinOrdering:
        hamiltonian = jordan_wigner(IntegralTable(one_body, ordering=ordering))
        assert hamiltonian.identity_offset == pytest.approx(0.8)
        assert hamiltonian.as_dict() == pytest.approx({"ZI": -0.4, "IZ": -0.4})

    one_body = np.zeros((2, 2, 2))
    one_body[0, 0, 1] = one_body[0, 1, 0] = 1.0
    blocked = jordan_wigner(IntegralTable(one_body, ordering=SpinOrdering.BLOCKED))
    interleaved = jordan_wigner(IntegralTable(one_body, ordering=SpinOrdering.INTERLEAVED))
    assert set(blocked.as_dict()) == {"XXII", "YYII"}
    assert set(interleaved.as_dict()) == {"XZXI", "YZYI"}


def test_integral_table_validation():
    with pytest.raises(ValueError):
        IntegralTable(np.zeros((2, 2, 3)))
    with pytest.raises(ValueError):
        IntegralTable(np.array([[[0.0, 1.0], [0.0, 0.0]]] * 2))
    with pytest.raises(ValueError):
        IntegralTable(np.full((2, 1, 1), np.inf))
