# test_symmetry_shift.py
"""
H = H_Z + H_I splitting and the particle-number shift that lowers mu_I.
"""
import numpy as np
import pytest

from errors import SymmetryViolation
from pauli_core import PauliHamiltonian, SpinOrdering, spin_qubits
from symmetry_shift import ShiftParams, apply_shift, interaction_norm, optimize_shift, shift_objective, split

MU_I = 0.933816


def test_split_bundled_hamiltonian(h3plus, h3plus_split):
    assert h3plus_split.mu_i == pytest.approx(MU_I, abs=1e-9)
    assert h3plus_split.h_z.n_terms == 6
    assert h3plus_split.h_i.n_terms == 35
    assert h3plus_split.identity_offset == h3plus.identity_offset
    assert h3plus_split.full.canonical() == h3plus.canonical()
    for term in h3plus_split.h_z.terms:
        assert term.string.weight == 1 and term.string.is_diagonal
    for term in h3plus_split.h_i.terms:
        assert term.string.weight >= 2 or not term.string.is_diagonal


def test_split_definitions():
    only_z = PauliHamiltonian.from_dict(2, {"ZI": 0.3, "IZ": -0.1}, 1.0)
    parts = split(only_z)
    assert parts.h_i.n_terms == 0
    assert parts.mu_i == 0.0

    mixed = PauliHamiltonian.from_dict(2, {"XX": 0.3, "IZ": 0.2})
    parts = split(mixed)
    assert parts.h_z.as_dict() == {"IZ": 0.2}
    assert parts.mu_i == pytest.approx(0.3)
    assert np.allclose(parts.z_coefficients, [0.0, 0.2])
    assert interaction_norm(mixed) == pytest.approx(0.3)


def test_zero_shift_is_identity(h3plus):
    params = ShiftParams.zero(1, 1)
    assert apply_shift(h3plus, params, SpinOrdering.INTERLEAVED).canonical() == h3plus.canonical()


def _sector_indices(n_qubits: int, ordering: SpinOrdering, n_up: int, n_down: int) -> np.ndarray:
    up, down = spin_qubits(n_qubits, ordering)
    index = np.arange(2 ** n_qubits)
    bits = (index[:, None] >> (n_qubits - 1 - np.arange(n_qubits))[None, :]) & 1
    keep = (bits[:, list(up)].sum(axis=1) == n_up) & (bits[:, list(down)].sum(axis=1) == n_down)
    return index[keep]


def test_shift_preserves_sector_spectrum(h3plus):
    params = ShiftParams((0.1, -0.2, 0.05), (1, 1, 2))
    shifted = apply_shift(h3plus, params, SpinOrdering.INTERLEAVED)
    sector = _sector_indices(6, SpinOrdering.INTERLEAVED, 1, 1)
    assert len(sector) == 9
    before = np.linalg.eigvalsh(h3plus.to_matrix()[np.ix_(sector, sector)])
    after = np.linalg.eigvalsh(shifted.to_matrix()[np.ix_(sector, sector)])
    assert np.max(np.abs(before - after)) <= 1e-10


def test_total_number_shift_cancels_zz():
    c = 0.35
    hamiltonian = PauliHamiltonian.from_dict(2, {"ZZ": c})
    shifted = apply_shift(hamiltonian, ShiftParams((0.0, 0.0, -2 * c), (1, 0, 1)), SpinOrdering.BLOCKED)
    assert "ZZ" not in shifted.as_dict()
    assert split(shifted).mu_i == pytest.approx(0.0, abs=1e-12)


def test_optimizer_zeroes_the_zz_toy():
    hamiltonian = PauliHamiltonian.from_dict(2, {"ZZ": 0.35, "ZI": 0.1})
    params, shifted = optimize_shift(hamiltonian, (1, 0), SpinOrdering.BLOCKED)
    assert shifted.mu_i == pytest.approx(0.0, abs=1e-6)
    assert params.alpha[2] == pytest.approx(-0.7, abs=1e-6)


def test_optimizer_leaves_diagonal_free_hamiltonian_alone():
    hamiltonian = PauliHamiltonian.from_dict(2, {"ZI": 0.5, "IZ": 0.2})
    params, shifted = optimize_shift(hamiltonian, (1, 0), SpinOrdering.BLOCKED)
    assert params.alpha == (0.0, 0.0, 0.0)
    assert shifted.mu_i == 0.0


def test_optimizer_on_bundled_hamiltonian(h3plus):
    params, shifted = optimize_shift(h3plus, (1, 1), SpinOrdering.INTERLEAVED)
    assert shifted.mu_i <= MU_I + 1e-9
    assert shifted.mu_i == pytest.approx(MU_I, abs=1e-3)
    assert params.sector == (1, 1, 2)


def test_optimizer_never_exceeds_unshifted_norm():
    # diagonal Hamiltonians conserve every number operator
    rng = np.random.default_rng(4)
    strings = {"ZIII": 0.2, "IZII": -0.4, "ZZII": 0.3, "IZZI": -0.25, "ZIIZ": 0.15, "IIZZ": 0.05}
    hamiltonian = PauliHamiltonian.from_dict(4, {k: v * rng.uniform(0.5, 1.5) for k, v in strings.items()})
    _, shifted = optimize_shift(hamiltonian, (1, 1), SpinOrdering.BLOCKED)
    assert shifted.mu_i <= split(hamiltonian).mu_i + 1e-9


def test_optimizer_rejects_non_conserving_hamiltonian():
    hamiltonian = PauliHamiltonian.from_dict(2, {"XI": 0.5, "ZZ": 0.1})
    with pytest.raises(SymmetryViolation):
        optimize_shift(hamiltonian, (1, 0), SpinOrdering.BLOCKED)


def test_objective_is_convex_along_lines(h3plus):
    rng = np.random.default_rng(9)
    for _ in range(5):
        a, b = rng.uniform(-0.2, 0.2, size=(2, 3))
        mid = shift_objective(h3plus, (a + b) / 2, (1, 1), SpinOrdering.INTERLEAVED)
        ends = shift_objective(h3plus, a, (1, 1), SpinOrdering.INTERLEAVED) \
            + shift_objective(h3plus, b, (1, 1), SpinOrdering.INTERLEAVED)
        assert mid <= ends / 2 + 1e-9


def test_shift_params_validation():
    with pytest.raises(ValueError):
        ShiftParams((0.0, 0.0, 0.0), (1, 1, 3))
    with pytest.raises(ValueError):
        ShiftParams((0.0, 0.0), (1, 1, 2))
    with pytest.raises(ValueError):
        ShiftParams((0.0, 0.0, 0.0), (-1, 1, 0))
