# symmetry_shift.py
"""
Split a Hamiltonian into its single-Z part H_Z and interaction part H_I, and
lower the interaction norm by adding alpha * (n^2 - nbar^2) for the conserved
particle numbers.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from errors import SymmetryViolation
from pauli_core import (
    ZERO_TOLERANCE,
    PauliHamiltonian,
    PauliSum,
    SpinOrdering,
    SymmetryKind,
    commutes_with,
    detect_spin_ordering,
    number_operator,
    spin_qubits,
    symmetry_operators,
)

logger = logging.getLogger(__name__)

SHIFT_EXPONENT = 2


@dataclass(frozen=True)
class SplitHamiltonian:
    h_z: PauliHamiltonian
    h_i: PauliHamiltonian
    mu_i: float

    @property
    def n_qubits(self) -> int:
        return self.h_z.n_qubits

    @property
    def identity_offset(self) -> float:
        return self.h_z.identity_offset

    @cached_property
    def z_coefficients(self) -> np.ndarray:
        """c_q in H_Z = offset + sum_q c_q Z_q."""
        coeffs = np.zeros(self.n_qubits)
        for term in self.h_z.terms:
            coeffs[term.string.support[0]] = term.coefficient
        return coeffs

    @property
    def full(self) -> PauliHamiltonian:
        return self.h_z + self.h_i


def _is_single_z(term) -> bool:
    return term.string.weight == 1 and term.string.is_diagonal


def split(hamiltonian: PauliHamiltonian) -> SplitHamiltonian:
    z_terms = tuple(t for t in hamiltonian.terms if _is_single_z(t))
    i_terms = tuple(t for t in hamiltonian.terms if not _is_single_z(t))
    h_z = PauliHamiltonian(hamiltonian.n_qubits, hamiltonian.identity_offset, z_terms)
    h_i = PauliHamiltonian(hamiltonian.n_qubits, 0.0, i_terms)
    mu_i = float(sum(abs(t.coefficient) for t in i_terms))
    return SplitHamiltonian(h_z, h_i, mu_i)


def interaction_norm(hamiltonian: PauliHamiltonian) -> float:
    return split(hamiltonian).mu_i


@dataclass(frozen=True)
class ShiftParams:
    """alpha multiplies (n_up^2 - nbar_up^2), (n_down^2 - ...), (n_tot^2 - ...)."""

    alpha: tuple[float, float, float]
    sector: tuple[int, int, int]

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        sector = tuple(int(n) for n in self.sector)
        if len(alpha) != 3 or len(sector) != 3:
            raise ValueError("alpha and sector must both have three entries")
        if min(sector) < 0:
            raise ValueError(f"sector occupations must be non-negative, got {sector}")
        if sector[2] != sector[0] + sector[1]:
            raise ValueError(f"n_tot must equal n_up + n_down, got {sector}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "sector", sector)

    @classmethod
    def zero(cls, n_up: int, n_down: int) -> "ShiftParams":
        return cls((0.0, 0.0, 0.0), (n_up, n_down, n_up + n_down))


def _resolve_ordering(hamiltonian: PauliHamiltonian, ordering: SpinOrdering | None) -> SpinOrdering:
    if ordering is not None:
        return SpinOrdering(ordering)
    return detect_spin_ordering(hamiltonian) or SpinOrdering.BLOCKED


def _shift_groups(n_qubits: int, ordering: SpinOrdering) -> list[tuple[int, ...]]:
    up, down = spin_qubits(n_qubits, ordering)
    return [up, down, tuple(range(n_qubits))]


def apply_shift(hamiltonian: PauliHamiltonian, params: ShiftParams,
                ordering: SpinOrdering | None = None) -> PauliHamiltonian:
    ordering = _resolve_ordering(hamiltonian, ordering)
    n = hamiltonian.n_qubits
    total = PauliSum.from_hamiltonian(hamiltonian)
    for alpha, target, qubits in zip(params.alpha, params.sector, _shift_groups(n, ordering)):
        if alpha == 0.0:
            continue
        number = PauliSum.from_hamiltonian(number_operator(qubits, n))
        total += alpha * (number * number - PauliSum.identity(n, float(target) ** SHIFT_EXPONENT))
    return total.to_hamiltonian(tolerance=ZERO_TOLERANCE)


def shift_objective(hamiltonian: PauliHamiltonian, alpha: Sequence[float], sector: Sequence[int],
                    ordering: SpinOrdering | None = None) -> float:
    n_up, n_down = int(sector[0]), int(sector[1])
    params = ShiftParams(tuple(alpha), (n_up, n_down, n_up + n_down))
    return split(apply_shift(hamiltonian, params, ordering)).mu_i


def optimize_shift(hamiltonian: PauliHamiltonian, sector: Sequence[int],
                   ordering: SpinOrdering | None = None) -> tuple[ShiftParams, SplitHamiltonian]:
    """Minimize the interaction norm over the three shift parameters.

    Only ZZ coefficients depend on alpha, each affinely (n^2 carries Z_q Z_r / 2
    for every pair inside the group), so the objective is a sum of absolute
    values of affine functions plus a constant; it is solved exactly as a
    linear program.
    """
    ordering = _resolve_ordering(hamiltonian, ordering)
    n_up, n_down = int(sector[0]), int(sector[1])
    n = hamiltonian.n_qubits

    ops = symmetry_operators(n, None, ordering)
    for kind in (SymmetryKind.N_UP, SymmetryKind.N_DOWN):
        if not commutes_with(hamiltonian, ops[kind]):
            raise SymmetryViolation(f"Hamiltonian does not conserve {kind.value} under {ordering.value} ordering")

    groups = [set(g) for g in _shift_groups(n, ordering)]
    zz = {}
    for term in hamiltonian.terms:
        if term.string.is_diagonal and term.string.weight == 2:
            zz[term.string.support] = term.coefficient
    pairs = [(q, r) for q in range(n) for r in range(q + 1, n)]
    offsets = np.array([zz.get(pair, 0.0) for pair in pairs])
    slopes = np.array([[0.5 if (q in g and r in g) else 0.0 for g in groups] for q, r in pairs])
    fixed = split(hamiltonian).mu_i - float(np.abs(offsets).sum())

    # variables: alpha_plus (3), alpha_minus (3), t (one per pair)
    k = len(pairs)
    cost = np.concatenate([np.full(6, 1e-9), np.ones(k)])
    a_ub = np.zeros((2 * k, 6 + k))
    a_ub[:k, :3] = slopes
    a_ub[:k, 3:6] = -slopes
    a_ub[k:, :3] = -slopes
    a_ub[k:, 3:6] = slopes
    a_ub[:k, 6:] = -np.eye(k)
    a_ub[k:, 6:] = -np.eye(k)
    b_ub = np.concatenate([-offsets, offsets])
    result = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=[(0, None)] * (6 + k), method="highs")
    if not result.success:
        raise RuntimeError(f"shift optimization failed: {result.message}")

    alpha = result.x[:3] - result.x[3:6]
    alpha[np.abs(alpha) < 1e-12] = 0.0
    params = ShiftParams(tuple(alpha), (n_up, n_down, n_up + n_down))
    shifted = split(apply_shift(hamiltonian, params, ordering))
    logger.info("Shift alpha=%s: mu_I %.6f -> %.6f (linear bound %.6f)",
                np.round(alpha, 6).tolist(), split(hamiltonian).mu_i, shifted.mu_i, fixed + result.fun)
    return params, shifted
