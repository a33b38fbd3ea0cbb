# simulator.py
"""
Execution backends for Hadamard-test circuits and the dense reference oracles.

State layout: amplitudes of shape (2**L, 2), physical index first (qubit 0 is
the most significant bit), ancilla last. Density matrices use the flattened
(2**(L+1), 2**(L+1)) form of the same ordering.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import eigsh
from threadpoolctl import threadpool_limits

from circuit_builder import (
    AncillaMeasureY,
    AncillaPhase,
    AncillaPrepare,
    Circuit,
    ControlledDiagonalSegment,
    ControlledPauliRotation,
    DepthTracker,
    DiagonalSegment,
    GateCostModel,
    PauliRotation,
    PhysicalMeasureZ,
    StitchedPair,
    tqg_pairs,
)
from errors import DimensionTooLarge, LeakageUnsupported, MismatchedQubitCount
from pauli_core import (
    PauliHamiltonian,
    SpinOrdering,
    apply_pauli,
    basis_index,
    basis_state,
    commutes_with,
    detect_spin_ordering,
    index_bits,
    number_operator,
    parity_operator,
    spin_qubits,
    z_signs,
)
from symmetry_shift import SplitHamiltonian
from tetris_sampler import SampledEvolution, SweepSchedule, make_rng

logger = logging.getLogger(__name__)

MAX_STATEVECTOR_QUBITS = 14
MAX_DENSITY_QUBITS = 10
MAX_EIGEN_QUBITS = 12
DENSE_EIGEN_QUBITS = 10

# M = H S^dagger maps the Y eigenbasis onto Z: outcome 0 <=> y = +1
Y_BASIS_CHANGE = np.array([[1.0, -1.0j], [1.0, 1.0j]]) / math.sqrt(2.0)
TWO_QUBIT_PAULIS = [a + b for a in "IXYZ" for b in "IXYZ"]


@dataclass(frozen=True)
class NoiseModel:
    lambda_incoh: float = 9.7e-4
    lambda_coh: float = 2.2e-4
    lambda_leak: float = 0.0

    def __post_init__(self):
        for name in ("lambda_incoh", "lambda_coh", "lambda_leak"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ShotRecord:
    ancilla_y: int
    physical_bits: tuple[int, ...]
    circuit_index: int
    trial_branch: str
    direction_sign: int
    leaked_mask: tuple[bool, ...] = ()
    repetition: int = 0

    def to_dict(self) -> dict:
        return {
            "ancilla_y": self.ancilla_y,
            "physical_bits": "".join(map(str, self.physical_bits)),
            "circuit_index": self.circuit_index,
            "trial_branch": self.trial_branch,
            "direction_sign": self.direction_sign,
            "leaked_mask": "".join("1" if x else "0" for x in self.leaked_mask),
            "repetition": self.repetition,
        }

    @classmethod
    def from_dict(cls, row: dict) -> "ShotRecord":
        return cls(
            ancilla_y=int(row["ancilla_y"]),
            physical_bits=tuple(int(c) for c in str(row["physical_bits"])),
            circuit_index=int(row["circuit_index"]),
            trial_branch=str(row["trial_branch"]),
            direction_sign=int(row["direction_sign"]),
            leaked_mask=tuple(c == "1" for c in _mask_text(row.get("leaked_mask"))),
            repetition=int(row.get("repetition", 0)),
        )


@dataclass(frozen=True)
class ExpectationSet:
    """Infinite-shot readout: y_joint[b] = <Y_anc (x) |b><b|>, p_phys[b] = P(b)."""

    y_joint: np.ndarray
    p_phys: np.ndarray
    metadata: object = field(default=None, repr=False)

    @property
    def ancilla_y(self) -> float:
        return float(self.y_joint.sum())

    @property
    def outcome_probabilities(self) -> np.ndarray:
        """P(b, ancilla bit), column 0 is y = +1."""
        probabilities = 0.5 * np.stack([self.p_phys + self.y_joint, self.p_phys - self.y_joint], axis=1)
        return np.clip(probabilities, 0.0, None)

    def sample(self, shots: int, rng: np.random.Generator, repetition: int = 0) -> list[ShotRecord]:
        """Draw shots from the Born distribution over (physical bits, ancilla-Y)."""
        if self.metadata is None:
            raise ValueError("sampling needs the circuit metadata")
        flat = self.outcome_probabilities.ravel()
        picks = rng.choice(flat.size, size=shots, p=flat / flat.sum())
        return [_record(int(i) >> 1, int(i) & 1, self.metadata, (), repetition) for i in picks]

    def to_dict(self) -> dict:
        return {"y_joint": self.y_joint.tolist(), "p_phys": self.p_phys.tolist()}


@dataclass(frozen=True)
class ExactResult(ExpectationSet):
    overlap: complex = 0j


def _mask_text(value) -> str:
    return value if isinstance(value, str) else ""


def _record(physical: int, ancilla_bit: int, metadata, leaked: tuple, repetition: int) -> ShotRecord:
    n = len(metadata.hf_bits)
    return ShotRecord(
        ancilla_y=1 - 2 * ancilla_bit,
        physical_bits=index_bits(physical, n),
        circuit_index=metadata.circuit_index,
        trial_branch=metadata.trial_branch,
        direction_sign=metadata.direction_sign,
        leaked_mask=leaked,
        repetition=repetition,
    )


# ---------------------------------------------------------------------------
# Kernels (arrays of shape (2**L, 2, ...))
# ---------------------------------------------------------------------------

def _rotate(string: str, angle: float, amplitudes: np.ndarray) -> np.ndarray:
    return math.cos(angle) * amplitudes + 1j * math.sin(angle) * apply_pauli(string, amplitudes)


def _segment_phases(angles: Sequence[float], n_physical: int) -> np.ndarray:
    return np.exp(1j * (z_signs(n_physical) @ np.asarray(angles, dtype=np.float64)))


def _apply_gate(gate, amplitudes: np.ndarray, n_physical: int) -> np.ndarray:
    tail = (1,) * (amplitudes.ndim - 2)
    if isinstance(gate, ControlledPauliRotation):
        amplitudes[:, 1] = _rotate(gate.string, gate.angle, amplitudes[:, 1])
    elif isinstance(gate, PauliRotation):
        amplitudes = _rotate(gate.string, gate.angle, amplitudes)
    elif isinstance(gate, ControlledDiagonalSegment):
        amplitudes[:, 1] *= _segment_phases(gate.z_angles, n_physical).reshape((-1,) + tail)
    elif isinstance(gate, DiagonalSegment):
        amplitudes *= _segment_phases(gate.z_angles, n_physical).reshape((-1, 1) + tail)
    elif isinstance(gate, AncillaPhase):
        amplitudes[:, 1] *= np.exp(1j * gate.angle)
    elif isinstance(gate, (AncillaPrepare, AncillaMeasureY, PhysicalMeasureZ)):
        pass
    else:
        raise TypeError(f"unknown gate {gate!r}")
    return amplitudes


def _initial_state(circuit: Circuit) -> np.ndarray:
    state = np.zeros((2 ** circuit.n_physical, 2), dtype=np.complex128)
    state[basis_index(circuit.metadata.hf_bits), :] = 1.0 / math.sqrt(2.0)
    return state


def _check_dense(n_qubits: int, bound: int, what: str):
    if n_qubits > bound:
        raise DimensionTooLarge(f"{what} on {n_qubits} qubits exceeds the dense bound of {bound}")


def final_state(circuit: Circuit) -> np.ndarray:
    _check_dense(circuit.n_physical + 1, MAX_STATEVECTOR_QUBITS, "statevector simulation")
    state = _initial_state(circuit)
    for gate in circuit.body:
        state = _apply_gate(gate, state, circuit.n_physical)
    return state


def run_exact(circuit: Circuit) -> ExactResult:
    state = final_state(circuit)
    y_joint = 2.0 * np.imag(np.conj(state[:, 0]) * state[:, 1])
    p_phys = np.sum(np.abs(state) ** 2, axis=1)
    overlap = 2.0 * np.vdot(state[:, 0], state[:, 1])
    return ExactResult(y_joint, p_phys, circuit.metadata, complex(overlap))


# ---------------------------------------------------------------------------
# Density-matrix backend
# ---------------------------------------------------------------------------

def _conjugate(rho: np.ndarray, gate, n_physical: int) -> np.ndarray:
    dim = rho.shape[0]
    half = dim // 2
    ket = _apply_gate(gate, rho.reshape(half, 2, dim).copy(), n_physical).reshape(dim, dim)
    bra = ket.conj().T.reshape(half, 2, dim).copy()
    return _apply_gate(gate, bra, n_physical).reshape(dim, dim)


def _depolarize_pair(rho: np.ndarray, a: int, b: int, strength: float, n_qubits: int) -> np.ndarray:
    """(1 - lambda) rho + lambda Tr_ab(rho) (x) I/4."""
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    ket = list(letters[:n_qubits])
    bra = list(letters[n_qubits:2 * n_qubits])
    traced_bra = bra.copy()
    traced_bra[a], traced_bra[b] = ket[a], ket[b]
    kept = [i for i in range(n_qubits) if i not in (a, b)]
    reduced_sub = "".join(ket[i] for i in kept) + "".join(bra[i] for i in kept)
    tensor = rho.reshape((2,) * (2 * n_qubits))
    reduced = np.einsum("".join(ket) + "".join(traced_bra) + "->" + reduced_sub, tensor)
    identity = np.eye(2)
    mixed = np.einsum(
        f"{reduced_sub},{ket[a]}{bra[a]},{ket[b]}{bra[b]}->{''.join(ket)}{''.join(bra)}",
        reduced, identity, identity,
    ) / 4.0
    return ((1.0 - strength) * tensor + strength * mixed).reshape(rho.shape)


def coherent_mask(n_qubits: int, strength: float) -> np.ndarray:
    """Elementwise action of (1 - lambda) rho + lambda R_Z rho R_Z^dagger on every qubit, R_Z = exp(-i pi Z / 8)."""
    signs = z_signs(n_qubits)
    mask = np.ones((2 ** n_qubits, 2 ** n_qubits), dtype=np.complex128)
    for q in range(n_qubits):
        diff = signs[:, q][:, None] - signs[:, q][None, :]
        mask *= (1.0 - strength) + strength * np.exp(-1j * math.pi / 8.0 * diff)
    return mask


def run_density(circuit: Circuit, noise: NoiseModel, costs: GateCostModel | None = None) -> ExpectationSet:
    """Exact noisy expectations: depolarizing after each two-qubit gate, Z-rotation mixture per layer."""
    if noise.lambda_leak > 0.0:
        raise LeakageUnsupported("leakage needs the trajectory backend (run_leakage)")
    n_total = circuit.n_physical + 1
    _check_dense(n_total, MAX_DENSITY_QUBITS, "density-matrix simulation")
    costs = costs or GateCostModel()

    state = _initial_state(circuit).ravel()
    rho = np.outer(state, state.conj())
    mask = coherent_mask(n_total, noise.lambda_coh) if noise.lambda_coh > 0.0 else None
    tracker = DepthTracker(n_total)
    for gate in circuit.body:
        rho = _conjugate(rho, gate, circuit.n_physical)
        pairs = tqg_pairs(gate, circuit.n_physical, costs)
        if noise.lambda_incoh > 0.0:
            for a, b in pairs:
                rho = _depolarize_pair(rho, a, b, noise.lambda_incoh, n_total)
        layers = tracker.add(pairs)
        if mask is not None and layers:
            rho = rho * mask ** layers

    half = 2 ** circuit.n_physical
    blocks = rho.reshape(half, 2, half, 2)
    diag = np.arange(half)
    y_joint = -2.0 * np.imag(blocks[diag, 0, diag, 1])
    p_phys = np.real(blocks[diag, 0, diag, 0] + blocks[diag, 1, diag, 1])
    return ExpectationSet(y_joint, p_phys, circuit.metadata)


# ---------------------------------------------------------------------------
# Leakage trajectories
# ---------------------------------------------------------------------------

def _touches(gate, leaked: set[int], n_physical: int) -> bool:
    ancilla = n_physical
    if isinstance(gate, (PauliRotation, ControlledPauliRotation)):
        qubits = {q for q, c in enumerate(gate.string) if c != "I"}
    elif isinstance(gate, (DiagonalSegment, ControlledDiagonalSegment)):
        qubits = set()
    else:
        qubits = set()
    if gate.controlled:
        qubits.add(ancilla)
    return bool(qubits & leaked)


def _strip_leaked(gate, leaked: set[int]):
    """Segments lose only the Z factors on leaked qubits."""
    if isinstance(gate, (DiagonalSegment, ControlledDiagonalSegment)):
        angles = tuple(0.0 if q in leaked else a for q, a in enumerate(gate.z_angles))
        return type(gate)(angles, gate.duration)
    return gate


def _measure_and_reset(state: np.ndarray, qubit: int, n_physical: int, rng: np.random.Generator) -> np.ndarray:
    """Projective Z measurement of `qubit`, then reset to |1>."""
    if qubit == n_physical:
        p1 = float(np.sum(np.abs(state[:, 1]) ** 2))
        keep = 1 if rng.random() < p1 else 0
        out = np.zeros_like(state)
        out[:, 1] = state[:, keep]
    else:
        shift = n_physical - 1 - qubit
        index = np.arange(state.shape[0])
        bit = (index >> shift) & 1
        p1 = float(np.sum(np.abs(state[bit == 1]) ** 2))
        keep = 1 if rng.random() < p1 else 0
        out = np.zeros_like(state)
        source = index[bit == keep]
        out[source | (1 << shift)] = state[source]
    norm = np.linalg.norm(out)
    return out / norm if norm > 0 else out


class _GateSchedule:
    """Per-gate two-qubit pairs, slot offsets and opened layers of a circuit."""

    def __init__(self, circuit: Circuit, costs: GateCostModel):
        self.gates = list(circuit.body)
        self.pairs = [tqg_pairs(g, circuit.n_physical, costs) for g in self.gates]
        self.slot_start = np.concatenate([[0], np.cumsum([len(p) for p in self.pairs])]).astype(np.int64)
        tracker = DepthTracker(circuit.n_physical + 1)
        self.layers = [tracker.add(p) for p in self.pairs]

    @property
    def n_slots(self) -> int:
        return int(self.slot_start[-1])

    def gate_of_slot(self, slot: int) -> int:
        return int(np.searchsorted(self.slot_start, slot, side="right") - 1)


def _event_slots(rng: np.random.Generator, rate: float, start: int, stop: int) -> list[int]:
    """Bernoulli(rate) events over slots [start, stop), drawn by geometric gaps."""
    if rate <= 0.0 or start >= stop:
        return []
    slots = []
    position = start - 1
    while True:
        position += int(rng.geometric(rate))
        if position >= stop:
            return slots
        slots.append(position)


def _run_trajectory(circuit: Circuit, schedule: _GateSchedule, noise: NoiseModel, rng: np.random.Generator,
                    start_gate: int, state: np.ndarray, leak_slots: list[int]) -> tuple[np.ndarray, set[int]]:
    n = circuit.n_physical
    n_total = n + 1
    leak_slots = set(leak_slots)
    incoherent_slots = set(_event_slots(rng, noise.lambda_incoh, int(schedule.slot_start[start_gate]),
                                        schedule.n_slots))
    leaked: set[int] = set()
    for g in range(start_gate, len(schedule.gates)):
        gate = schedule.gates[g]
        if leaked and _touches(gate, leaked, n):
            continue
        first = int(schedule.slot_start[g])
        pairs = schedule.pairs[g]
        new_leak = None
        for k, pair in enumerate(pairs):
            if first + k in leak_slots:
                new_leak = pair[int(rng.integers(2))]
                break
        if new_leak is not None:
            state = _measure_and_reset(state, new_leak, n, rng)
            leaked.add(new_leak)
            continue
        if leaked:
            gate = _strip_leaked(gate, leaked)
        state = _apply_gate(gate, state, n)
        for k, (a, b) in enumerate(pairs):
            if first + k in incoherent_slots:
                axes = ["I"] * n_total
                twirl = TWO_QUBIT_PAULIS[int(rng.integers(16))]
                axes[a], axes[b] = twirl[0], twirl[1]
                state = apply_pauli("".join(axes), state.reshape(-1)).reshape(state.shape)
        if noise.lambda_coh > 0.0 and schedule.layers[g]:
            for _ in range(schedule.layers[g]):
                hits = rng.random(n_total) < noise.lambda_coh
                if hits.any():
                    angles = np.where(hits, -math.pi / 8.0, 0.0)
                    phases = np.exp(1j * (z_signs(n_total) @ angles))
                    state = (state.reshape(-1) * phases).reshape(state.shape)
    return state, leaked


def _measure(state: np.ndarray, leaked: set[int], circuit: Circuit, rng: np.random.Generator,
             repetition: int) -> ShotRecord:
    n = circuit.n_physical
    probabilities = (np.abs(state @ Y_BASIS_CHANGE.T) ** 2).ravel()
    pick = int(rng.choice(probabilities.size, p=probabilities / probabilities.sum()))
    physical, ancilla_bit = pick >> 1, pick & 1
    for q in leaked:
        if q == n:
            ancilla_bit = 1
        else:
            physical |= 1 << (n - 1 - q)
    mask = tuple(q in leaked for q in range(n + 1))
    return _record(physical, ancilla_bit, circuit.metadata, mask, repetition)


def run_leakage(circuit: Circuit, noise: NoiseModel, shots: int, rng: np.random.Generator,
                costs: GateCostModel | None = None, shots_per_repetition: int | None = None) -> list[ShotRecord]:
    """Pure-state trajectories with leakage, twirled depolarizing and random Z-rotation errors.

    Shot k is tagged with repetition k // shots_per_repetition.
    """
    if shots < 1:
        raise ValueError(f"shots must be at least 1, got {shots}")
    _check_dense(circuit.n_physical + 1, MAX_STATEVECTOR_QUBITS, "trajectory simulation")
    costs = costs or GateCostModel()
    per_rep = shots_per_repetition or shots
    schedule = _GateSchedule(circuit, costs)
    leak_only = noise.lambda_incoh == 0.0 and noise.lambda_coh == 0.0

    prefix: list[np.ndarray] | None = None
    if leak_only:
        # the trajectory is deterministic up to the first leak
        prefix = [_initial_state(circuit)]
        for gate in schedule.gates:
            prefix.append(_apply_gate(gate, prefix[-1].copy(), circuit.n_physical))

    records = []
    for k in range(shots):
        leak_slots = _event_slots(rng, noise.lambda_leak, 0, schedule.n_slots)
        if leak_only:
            if not leak_slots:
                state, leaked = prefix[-1], set()
            else:
                start = schedule.gate_of_slot(leak_slots[0])
                state, leaked = _run_trajectory(circuit, schedule, noise, rng, start,
                                                prefix[start].copy(), leak_slots)
        else:
            state, leaked = _run_trajectory(circuit, schedule, noise, rng, 0, _initial_state(circuit), leak_slots)
        records.append(_measure(state, leaked, circuit, rng, k // per_rep))
    return records


# ---------------------------------------------------------------------------
# Reference oracles
# ---------------------------------------------------------------------------

def sector_mask(hamiltonian: PauliHamiltonian, bits: Sequence[int],
                ordering: SpinOrdering | None = None) -> np.ndarray:
    """Basis states sharing every quantum number of `bits` that H conserves.

    Spin-resolved counts when H conserves both spin numbers under `ordering`
    (detected when not given), else the total count, else parity alone.
    """
    n = hamiltonian.n_qubits
    bits = tuple(int(b) for b in bits)
    if len(bits) != n:
        raise MismatchedQubitCount(f"reference state has {len(bits)} bits, Hamiltonian has {n} qubits")
    occupations = (np.arange(2 ** n)[:, None] >> (n - 1 - np.arange(n))) & 1

    groups: list[tuple[int, ...]] = []
    if n % 2 == 0:
        ordering = ordering or detect_spin_ordering(hamiltonian)
        if ordering is not None:
            up, down = spin_qubits(n, ordering)
            if commutes_with(hamiltonian, number_operator(up, n)) and commutes_with(hamiltonian, number_operator(down, n)):
                groups = [up, down]
    if not groups and commutes_with(hamiltonian, number_operator(range(n), n)):
        groups = [tuple(range(n))]

    if groups:
        mask = np.ones(2 ** n, dtype=bool)
        for group in groups:
            cols = list(group)
            mask &= occupations[:, cols].sum(axis=1) == sum(bits[q] for q in group)
        return mask
    if commutes_with(hamiltonian, parity_operator(n)):
        return occupations.sum(axis=1) % 2 == sum(bits) % 2
    logger.warning("Hamiltonian conserves neither particle number nor parity; using the full space")
    return np.ones(2 ** n, dtype=bool)


def exact_ground_state(hamiltonian: PauliHamiltonian, hf_bits: Sequence[int] | None = None,
                       ordering: SpinOrdering | None = None) -> tuple[float, np.ndarray]:
    """Lowest eigenpair, restricted to the sector of `hf_bits` when given."""
    _check_dense(hamiltonian.n_qubits, MAX_EIGEN_QUBITS, "exact diagonalization")
    dim = 2 ** hamiltonian.n_qubits
    if hf_bits is None:
        index = np.arange(dim)
    else:
        index = np.flatnonzero(sector_mask(hamiltonian, hf_bits, ordering))
    if hamiltonian.n_qubits <= DENSE_EIGEN_QUBITS or len(index) < 3:
        block = hamiltonian.to_matrix()[np.ix_(index, index)]
        values, vectors = np.linalg.eigh(block)
    else:
        block = hamiltonian.to_sparse()[index][:, index]
        values, vectors = eigsh(block, k=1, which="SA", tol=1e-12)
    energy = float(values[0])
    state = np.zeros(dim, dtype=np.complex128)
    state[index] = vectors[:, 0]
    # fix the global phase so the largest amplitude is real and positive
    pivot = int(np.argmax(np.abs(state)))
    state = state * (abs(state[pivot]) / state[pivot])
    return energy, state


def _split_matrices(split: SplitHamiltonian) -> tuple[np.ndarray, np.ndarray]:
    _check_dense(split.n_qubits, MAX_EIGEN_QUBITS, "time-ordered integration")
    return split.h_z.diagonal(), split.h_i.to_matrix()


def _integrate(split: SplitHamiltonian, schedule: SweepSchedule, total_time: float, initial: np.ndarray,
               rtol: float = 1e-11, atol: float = 1e-13) -> np.ndarray:
    """Solve d psi / dt = i H(t/T) psi, H(u) = H_Z + w(u) H_I, columnwise."""
    hz, hi = _split_matrices(split)
    shape = initial.shape
    width = 1 if initial.ndim == 1 else shape[1]

    def rhs(t, y):
        psi = y.reshape(-1, width)
        return (1j * (hz[:, None] * psi + float(schedule.w(t / total_time)) * (hi @ psi))).ravel()

    solution = solve_ivp(rhs, (0.0, total_time), initial.astype(np.complex128).ravel(),
                         method="DOP853", rtol=rtol, atol=atol)
    if not solution.success:
        raise RuntimeError(f"time-ordered integration failed: {solution.message}")
    return solution.y[:, -1].reshape(shape)


def exact_adiabatic(split: SplitHamiltonian, schedule: SweepSchedule, total_time: float,
                    hf_bits: Sequence[int]) -> np.ndarray:
    initial = basis_state(hf_bits)
    if total_time == 0.0:
        return initial
    state = _integrate(split, schedule, total_time, initial)
    return state / np.linalg.norm(state)


def time_ordered_unitary(split: SplitHamiltonian, schedule: SweepSchedule, total_time: float) -> np.ndarray:
    identity = np.eye(2 ** split.n_qubits, dtype=np.complex128)
    if total_time == 0.0:
        return identity
    return _integrate(split, schedule, total_time, identity)


def apply_evolution(split: SplitHamiltonian, evolution: SampledEvolution, state: np.ndarray) -> np.ndarray:
    return evolution.apply(split, state)


def ensemble_fidelity(split: SplitHamiltonian, draws: Iterable[SampledEvolution], hf_bits: Sequence[int],
                      ground_state: np.ndarray, adjoint: bool = False) -> float:
    """Fidelity of the normalized ensemble-average state to the ground state.

    For adjoint draws (U1') the state is U1'^dagger |HF>, the ket the circuit
    actually pairs with <HF|.
    """
    initial = basis_state(hf_bits)
    total = np.zeros_like(initial)
    count = 0
    for draw in draws:
        evolution = draw.adjoint() if adjoint else draw
        total += evolution.apply(split, initial)
        count += 1
    if count == 0:
        raise ValueError("no draws supplied")
    average = total / np.linalg.norm(total)
    return float(abs(np.vdot(ground_state, average)) ** 2)


def energy_error(hamiltonian: PauliHamiltonian, state: np.ndarray, e_gs: float) -> float:
    """<psi|H|psi> - E_GS in mHa."""
    state = state / np.linalg.norm(state)
    return 1000.0 * (hamiltonian.expectation(state) - e_gs)


def fidelity(state: np.ndarray, reference: np.ndarray) -> float:
    return float(abs(np.vdot(reference, state)) ** 2 / (np.vdot(state, state).real * np.vdot(reference, reference).real))


# ---------------------------------------------------------------------------
# Ensemble execution
# ---------------------------------------------------------------------------

class Backend(str, Enum):
    EXACT = "exact"
    DENSITY = "density"
    LEAKAGE = "leakage"


SHOT_STREAM = 0x5307


def _branch_id(branch: str) -> int:
    return 0 if branch == "plus" else 1


def _simulate_circuit(circuit: Circuit, backend: Backend, noise: NoiseModel, shots: int | None,
                      repetitions: int, master_seed: int, costs: GateCostModel):
    with threadpool_limits(1):
        meta = circuit.metadata
        rng = make_rng(master_seed, SHOT_STREAM, meta.circuit_index, _branch_id(meta.trial_branch))
        if backend is Backend.LEAKAGE:
            return run_leakage(circuit, noise, shots * repetitions, rng, costs, shots_per_repetition=shots)
        if backend is Backend.DENSITY:
            result = run_density(circuit, noise, costs)
        else:
            result = run_exact(circuit)
        if shots is None:
            return result
        return [record for rep in range(repetitions) for record in result.sample(shots, rng, rep)]


def simulate_pairs(pairs: Sequence[StitchedPair], backend: Backend | str = Backend.EXACT,
                   noise: NoiseModel | None = None, shots: int | None = None, repetitions: int = 1,
                   master_seed: int = 0, costs: GateCostModel | None = None, jobs: int = 1):
    """Run both branches of every pair.

    shots=None asks for infinite-shot expectation sets (exact or density
    backends); otherwise a flat list of ShotRecords, `shots` per circuit per
    repetition. Each circuit draws from its own (seed, circuit, branch) stream.
    """
    backend = Backend(backend)
    noise = noise or NoiseModel.noiseless()
    costs = costs or GateCostModel()
    if shots is None and backend is Backend.LEAKAGE:
        raise LeakageUnsupported("the leakage backend only produces shots")
    if shots is not None and shots < 1:
        raise ValueError(f"shots must be at least 1, got {shots}")
    if repetitions < 1:
        raise ValueError(f"repetitions must be at least 1, got {repetitions}")
    if backend is Backend.EXACT and (noise.lambda_incoh or noise.lambda_coh or noise.lambda_leak):
        logger.warning("Exact backend ignores the noise model %s", noise)

    circuits = [c for pair in pairs for c in pair.branches()]
    outputs = Parallel(n_jobs=jobs)(
        delayed(_simulate_circuit)(c, backend, noise, shots, repetitions, master_seed, costs) for c in circuits
    )
    logger.info("Simulated %d circuits on the %s backend", len(circuits), backend.value)
    if shots is None:
        return [(c.metadata, result) for c, result in zip(circuits, outputs)]
    return [record for batch in outputs for record in batch]


# ---------------------------------------------------------------------------
# Shot files
# ---------------------------------------------------------------------------

SHOT_COLUMNS = ["circuit_index", "trial_branch", "direction_sign", "repetition",
                "ancilla_y", "physical_bits", "leaked_mask"]


def records_frame(records: Sequence[ShotRecord]) -> pd.DataFrame:
    """One row per shot; bit vectors as '0'/'1' strings."""
    return pd.DataFrame([r.to_dict() for r in records], columns=SHOT_COLUMNS)


def write_shots_jsonl(records: Sequence[ShotRecord], path: str) -> None:
    frame = records_frame(records)
    with open(path, "w", encoding="utf-8") as handle:
        if len(frame):
            handle.write(frame.to_json(orient="records", lines=True).rstrip("\n") + "\n")


def read_shots_jsonl(path: str) -> list[ShotRecord]:
    with open(path, encoding="utf-8") as handle:
        if not handle.read().strip():
            return []
    frame = pd.read_json(path, lines=True, dtype={"physical_bits": str, "leaked_mask": str})
    frame["leaked_mask"] = frame["leaked_mask"].fillna("")
    return [ShotRecord.from_dict(row) for row in frame.to_dict(orient="records")]


def write_expectations_json(results: Sequence[tuple[object, ExpectationSet]], path: str) -> None:
    payload = [
        {"circuit_index": meta.circuit_index, "trial_branch": meta.trial_branch, **result.to_dict()}
        for meta, result in results
    ]
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True)
        handle.write("\n")
