# circuit_builder.py
"""
Lower sampled evolutions into ancilla-controlled Hadamard-test circuits,
rewrite them with the occupation / parity / diagonal-merging passes, and count
two-qubit gates.

Qubit numbering: physical qubits 0..L-1 (leftmost string character first),
the ancilla is qubit L.
"""
import json
import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import TYPE_CHECKING, ClassVar, Iterable, Sequence, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from errors import MismatchedQubitCount, ParityViolation
from pauli_core import PauliString, pauli_product
from symmetry_shift import SplitHamiltonian
from tetris_sampler import (
    Direction,
    RotationOp,
    SampledEvolution,
    SamplerConfig,
    SegmentOp,
    SweepSchedule,
    sample_evolution,
)

if TYPE_CHECKING:
    from estimator import TrialEnergies

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
BRANCHES = ("plus", "minus")


# ---------------------------------------------------------------------------
# Gate set
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PauliRotation:
    """exp(i * angle * P) on the physical register."""
    string: str
    angle: float
    controlled: ClassVar[bool] = False


@dataclass(frozen=True)
class ControlledPauliRotation:
    string: str
    angle: float
    controlled: ClassVar[bool] = True


@dataclass(frozen=True)
class DiagonalSegment:
    """exp(i * sum_q z_angles[q] Z_q); duration is the evolution time it came from."""
    z_angles: tuple[float, ...]
    duration: float = 0.0
    controlled: ClassVar[bool] = False


@dataclass(frozen=True)
class ControlledDiagonalSegment:
    z_angles: tuple[float, ...]
    duration: float = 0.0
    controlled: ClassVar[bool] = True


@dataclass(frozen=True)
class AncillaPhase:
    """diag(1, exp(i * angle)) on the ancilla."""
    angle: float
    controlled: ClassVar[bool] = True


@dataclass(frozen=True)
class AncillaPrepare:
    controlled: ClassVar[bool] = False


@dataclass(frozen=True)
class AncillaMeasureY:
    controlled: ClassVar[bool] = False


@dataclass(frozen=True)
class PhysicalMeasureZ:
    controlled: ClassVar[bool] = False


Gate = Union[PauliRotation, ControlledPauliRotation, DiagonalSegment, ControlledDiagonalSegment,
             AncillaPhase, AncillaPrepare, AncillaMeasureY, PhysicalMeasureZ]
ROTATIONS = (PauliRotation, ControlledPauliRotation)
SEGMENTS = (DiagonalSegment, ControlledDiagonalSegment)
_GATE_TYPES = {cls.__name__: cls for cls in (PauliRotation, ControlledPauliRotation, DiagonalSegment,
                                              ControlledDiagonalSegment, AncillaPhase, AncillaPrepare,
                                              AncillaMeasureY, PhysicalMeasureZ)}


@dataclass(frozen=True)
class CircuitMetadata:
    circuit_index: int
    trial_branch: str
    direction_sign: int
    lambda_a: float
    lambda_a_prime: float
    lambda_s: float
    hf_bits: tuple[int, ...]

    @property
    def attenuation(self) -> float:
        return self.lambda_a * self.lambda_a_prime * self.lambda_s

    @property
    def parity_eta(self) -> int:
        return (-1) ** sum(self.hf_bits)


@dataclass(frozen=True)
class Circuit:
    n_physical: int
    gates: tuple
    metadata: CircuitMetadata

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        self.validate()

    @property
    def body(self) -> tuple:
        return self.gates[1:-2]

    def with_body(self, body: Iterable) -> "Circuit":
        return replace(self, gates=(AncillaPrepare(), *body, AncillaMeasureY(), PhysicalMeasureZ()))

    def validate(self):
        gates = self.gates
        if len(gates) < 3 or not isinstance(gates[0], AncillaPrepare) \
                or not isinstance(gates[-2], AncillaMeasureY) or not isinstance(gates[-1], PhysicalMeasureZ):
            raise ValueError("circuit must start with AncillaPrepare and end with AncillaMeasureY, PhysicalMeasureZ")
        for gate in gates[1:-2]:
            if isinstance(gate, (AncillaPrepare, AncillaMeasureY, PhysicalMeasureZ)):
                raise ValueError(f"{type(gate).__name__} may only appear at the circuit boundary")
            if isinstance(gate, ROTATIONS) and len(gate.string) != self.n_physical:
                raise MismatchedQubitCount(f"rotation {gate.string} on a {self.n_physical}-qubit register")
            if isinstance(gate, SEGMENTS) and len(gate.z_angles) != self.n_physical:
                raise MismatchedQubitCount(f"segment with {len(gate.z_angles)} angles on {self.n_physical} qubits")
        if len(self.metadata.hf_bits) != self.n_physical:
            raise MismatchedQubitCount("hf_bits length differs from the physical qubit count")


@dataclass(frozen=True)
class StitchedPair:
    plus: Circuit
    minus: Circuit
    u1: SampledEvolution
    u2: SampledEvolution
    u1_prime: SampledEvolution

    @property
    def circuit_index(self) -> int:
        return self.plus.metadata.circuit_index

    def branches(self) -> tuple[Circuit, Circuit]:
        return self.plus, self.minus


@dataclass(frozen=True)
class OccupationProfile:
    occupations: tuple[int, ...]

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "OccupationProfile":
        return cls(tuple(int(b) for b in bits))

    @property
    def parity_eta(self) -> int:
        return (-1) ** sum(self.occupations)

    @property
    def z_values(self) -> np.ndarray:
        return 1.0 - 2.0 * np.array(self.occupations, dtype=np.float64)


# ---------------------------------------------------------------------------
# Cost model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GateCostModel:
    """Two-qubit-gate accounting for CNOT-ladder Pauli gadgets.

    Uncontrolled weight-w rotation: 2(w-1). Controlled: 2(w-1) + control_overhead.
    Controlled single-Z phase inside a diagonal segment: controlled_z.
    native_zz charges an uncontrolled ZZ rotation a single gate.
    """

    control_overhead: int = 1
    controlled_z: int = 1
    native_zz: bool = False

    def __post_init__(self):
        if self.control_overhead < 0 or self.controlled_z < 0:
            raise ValueError("gate costs must be non-negative")

    def rotation_cost(self, string: "PauliString | str", controlled: bool = False) -> int:
        string = string if isinstance(string, PauliString) else PauliString(string)
        weight = string.weight
        if weight == 0:
            return 0
        if not controlled and self.native_zz and weight == 2 and string.is_diagonal:
            return 1
        return 2 * (weight - 1) + (self.control_overhead if controlled else 0)


def tqg_pairs(gate, n_physical: int, costs: GateCostModel) -> list[tuple[int, int]]:
    """Operand pairs of the two-qubit gates a logical gate decomposes into."""
    ancilla = n_physical
    if isinstance(gate, ROTATIONS):
        support = [q for q, c in enumerate(gate.string) if c != "I"]
        if not support:
            return []
        if not gate.controlled and costs.native_zz and len(support) == 2 and set(gate.string) <= {"I", "Z"}:
            return [(support[0], support[1])]
        ladder = list(zip(support[:-1], support[1:]))
        core = [(support[-1], ancilla)] * costs.control_overhead if gate.controlled else []
        return ladder + core + ladder[::-1]
    if isinstance(gate, ControlledDiagonalSegment):
        return [(q, ancilla) for q, angle in enumerate(gate.z_angles) if angle != 0.0 for _ in range(costs.controlled_z)]
    return []


def _merge_adjacent_rotations(gates: Iterable) -> list:
    merged: list = []
    for gate in gates:
        if merged and isinstance(gate, ROTATIONS) and type(merged[-1]) is type(gate) \
                and merged[-1].string == gate.string:
            merged[-1] = replace(gate, angle=merged[-1].angle + gate.angle)
        else:
            merged.append(gate)
    return merged


def count_tqg(circuit: Circuit, costs: GateCostModel | None = None) -> int:
    costs = costs or GateCostModel()
    return sum(len(tqg_pairs(g, circuit.n_physical, costs)) for g in _merge_adjacent_rotations(circuit.body))


class DepthTracker:
    """As-soon-as-possible layering of two-qubit gates."""

    def __init__(self, n_qubits: int):
        self.levels = [0] * n_qubits
        self.depth = 0

    def add(self, pairs: Iterable[tuple[int, int]]) -> int:
        """Place pairs in order; return how many new layers they opened."""
        before = self.depth
        for a, b in pairs:
            level = max(self.levels[a], self.levels[b]) + 1
            self.levels[a] = self.levels[b] = level
            self.depth = max(self.depth, level)
        return self.depth - before


def depth_tqg(circuit: Circuit, costs: GateCostModel | None = None) -> int:
    costs = costs or GateCostModel()
    tracker = DepthTracker(circuit.n_physical + 1)
    for gate in _merge_adjacent_rotations(circuit.body):
        tracker.add(tqg_pairs(gate, circuit.n_physical, costs))
    return tracker.depth


# ---------------------------------------------------------------------------
# Lowering
# ---------------------------------------------------------------------------

def lower_evolution(split: SplitHamiltonian, evolution: SampledEvolution) -> list:
    """Controlled gates of one draw, identity-offset phase last."""
    strings = [t.string.axes for t in split.h_i.terms]
    coefficients = split.z_coefficients
    gates: list = []
    for op in evolution.operations():
        if isinstance(op, SegmentOp):
            if op.duration != 0.0:
                angles = tuple(float(op.duration * c) for c in coefficients)
                gates.append(ControlledDiagonalSegment(angles, float(op.duration)))
        elif isinstance(op, RotationOp):
            gates.append(ControlledPauliRotation(strings[op.term_index], float(op.angle)))
    gates.append(AncillaPhase(float(evolution.offset_duration * split.identity_offset)))
    return gates


def build_hadamard_test(split: SplitHamiltonian, u1: SampledEvolution, u2: SampledEvolution,
                        u1_prime: SampledEvolution, trial: "TrialEnergies", branch: str,
                        hf_bits: Sequence[int], circuit_index: int = 0) -> Circuit:
    """Circuit whose ancilla <Y> equals Im <HF| U1' U2 U1 |HF> (times the time sign)."""
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")
    hf_bits = tuple(int(b) for b in hf_bits)
    if len(hf_bits) != split.n_qubits:
        raise MismatchedQubitCount(f"hf_bits has {len(hf_bits)} entries, Hamiltonian has {split.n_qubits} qubits")
    for draw in (u1, u2, u1_prime):
        if draw.events and max(e.term_index for e in draw.events) >= split.h_i.n_terms:
            raise MismatchedQubitCount("evolution refers to terms the Hamiltonian does not have")
    if not math.isclose(u2.config.duration, trial.s):
        raise ValueError(f"U2 duration {u2.config.duration} differs from s = {trial.s}")

    time_sign = u1.config.time_sign
    gates = [AncillaPrepare()]
    gates += lower_evolution(split, u1)
    gates += lower_evolution(split, u2)
    gates.append(AncillaPhase(float(time_sign * trial.s * trial.energy(branch))))
    gates += lower_evolution(split, u1_prime)
    gates += [AncillaMeasureY(), PhysicalMeasureZ()]

    metadata = CircuitMetadata(
        circuit_index=circuit_index,
        trial_branch=branch,
        direction_sign=time_sign,
        lambda_a=u1.attenuation,
        lambda_a_prime=u1_prime.attenuation,
        lambda_s=u2.attenuation,
        hf_bits=hf_bits,
    )
    return Circuit(split.n_qubits, tuple(gates), metadata)


def draw_pair(split: SplitHamiltonian, trial: "TrialEnergies", index: int, master_seed: int,
              total_time: float, tau: float, hf_bits: Sequence[int],
              schedule: SweepSchedule | None = None) -> StitchedPair:
    schedule = schedule or SweepSchedule.linear()
    time_sign = 1 if index % 2 == 0 else -1
    base = 3 * index
    u1 = sample_evolution(split, schedule, SamplerConfig(
        total_time, tau, Direction.FORWARD, time_sign, master_seed, base))
    u1_prime = sample_evolution(split, schedule, SamplerConfig(
        total_time, tau, Direction.REVERSE, time_sign, master_seed, base + 1))
    u2 = sample_evolution(split, SweepSchedule.constant(), SamplerConfig(
        trial.s, tau, Direction.REVERSE, time_sign, master_seed, base + 2))
    return _pair_from_draws(split, trial, index, u1, u2, u1_prime, hf_bits)


def _pair_from_draws(split, trial, index, u1, u2, u1_prime, hf_bits) -> StitchedPair:
    plus = build_hadamard_test(split, u1, u2, u1_prime, trial, "plus", hf_bits, index)
    minus = build_hadamard_test(split, u1, u2, u1_prime, trial, "minus", hf_bits, index)
    return StitchedPair(plus, minus, u1, u2, u1_prime)


def build_ensemble(split: SplitHamiltonian, trial: "TrialEnergies", n_circuits: int, master_seed: int,
                   total_time: float, tau: float, hf_bits: Sequence[int],
                   schedule: SweepSchedule | None = None, jobs: int = 1) -> list[StitchedPair]:
    """Stitched pairs with alternating time direction (even indices forward)."""
    if n_circuits < 1:
        raise ValueError(f"n_circuits must be at least 1, got {n_circuits}")
    pairs = Parallel(n_jobs=jobs)(
        delayed(draw_pair)(split, trial, i, master_seed, total_time, tau, hf_bits, schedule)
        for i in range(n_circuits)
    )
    logger.info("Built %d stitched pairs (T=%s, s=%s, tau=%s, seed=%d)",
                n_circuits, total_time, trial.s, tau, master_seed)
    return list(pairs)


# ---------------------------------------------------------------------------
# Reduction passes
# ---------------------------------------------------------------------------

def _rotation_or_phase(gate, string: str, angle: float):
    """Rotation with a new string/angle; an all-I string becomes an ancilla phase."""
    if set(string) <= {"I"}:
        return AncillaPhase(angle) if gate.controlled else None
    return replace(gate, string=string, angle=angle)


def parity_reduce(circuit: Circuit, profile: OccupationProfile) -> Circuit:
    """Replace P by the lighter P*Pi (times eta) wherever #Z > #I."""
    parity = "Z" * circuit.n_physical
    eta = profile.parity_eta
    body = []
    for gate in circuit.body:
        if isinstance(gate, ROTATIONS):
            flips = gate.string.count("X") + gate.string.count("Y")
            if flips % 2:
                raise ParityViolation(f"rotation {gate.string} anticommutes with the parity operator")
            if gate.string.count("Z") > gate.string.count("I"):
                phase, reduced = pauli_product(gate.string, parity)
                gate = _rotation_or_phase(gate, reduced.axes, gate.angle * phase.real * eta)
                if gate is None:
                    continue
        body.append(gate)
    return circuit.with_body(body)


def occupation_reduce(circuit: Circuit, profile: OccupationProfile) -> Circuit:
    """Replace Z on qubits still in their initial basis state by (-1)^n."""
    occupations = profile.occupations
    live = set(range(circuit.n_physical))
    gates = list(circuit.body)
    body = []
    for position, gate in enumerate(gates):
        if not live:
            body.extend(gates[position:])
            break
        if isinstance(gate, ROTATIONS):
            axes = list(gate.string)
            sign = 1
            for q in live:
                if axes[q] == "Z":
                    axes[q] = "I"
                    sign *= (-1) ** occupations[q]
            flipped = {q for q, a in enumerate(axes) if a in "XY"}
            reduced = _rotation_or_phase(gate, "".join(axes), gate.angle * sign)
            if reduced is not None:
                body.append(reduced)
            live -= flipped
        elif isinstance(gate, SEGMENTS):
            angles = list(gate.z_angles)
            phase = 0.0
            for q in live:
                if angles[q] != 0.0:
                    phase += (-1) ** occupations[q] * angles[q]
                    angles[q] = 0.0
            if any(a != 0.0 for a in angles):
                body.append(replace(gate, z_angles=tuple(angles)))
            if gate.controlled and phase != 0.0:
                body.append(AncillaPhase(phase))
        else:
            body.append(gate)
    return circuit.with_body(body)


def merge_diagonals(circuit: Circuit) -> Circuit:
    """Delay diagonal Z phases until a rotation flips their qubit; fold all ancilla phases into one."""
    n = circuit.n_physical
    pending = {True: np.zeros(n), False: np.zeros(n)}
    durations = {True: 0.0, False: 0.0}
    ancilla_phase = 0.0
    saw_phase = False
    body = []

    def flush(qubits):
        for controlled, segment_type in ((True, ControlledDiagonalSegment), (False, DiagonalSegment)):
            angles = np.zeros(n)
            for q in qubits:
                angles[q] = pending[controlled][q]
                pending[controlled][q] = 0.0
            if np.any(angles != 0.0):
                body.append(segment_type(tuple(float(a) for a in angles), durations[controlled]))
                durations[controlled] = 0.0

    for gate in circuit.body:
        if isinstance(gate, SEGMENTS):
            pending[gate.controlled] += np.array(gate.z_angles)
            durations[gate.controlled] += gate.duration
        elif isinstance(gate, AncillaPhase):
            ancilla_phase += gate.angle
            saw_phase = True
        elif isinstance(gate, ROTATIONS):
            flush([q for q, c in enumerate(gate.string) if c in "XY"])
            body.append(gate)
        else:
            body.append(gate)
    flush(range(n))
    if saw_phase:
        body.append(AncillaPhase(ancilla_phase))
    return circuit.with_body(body)


def release_diagonal_control(circuit: Circuit, profile: OccupationProfile) -> Circuit:
    """Drop the control from diagonal segments and compensate on the ancilla.

    The control-off branch holds |HF>, an eigenstate of every diagonal segment,
    so the uncontrolled segment differs from the controlled one only by a
    relative phase chi = sum_q angle_q (-1)^n_q between the branches.
    """
    z_values = profile.z_values
    body = []
    for gate in circuit.body:
        if isinstance(gate, PauliRotation):
            raise ValueError("release_diagonal_control expects only controlled rotations")
        if isinstance(gate, ControlledDiagonalSegment):
            chi = float(np.dot(gate.z_angles, z_values))
            body.append(DiagonalSegment(gate.z_angles, gate.duration))
            body.append(AncillaPhase(chi))
        else:
            body.append(gate)
    return circuit.with_body(body)


def reduce_circuit(circuit: Circuit, profile: OccupationProfile, release_diagonals: bool = True) -> Circuit:
    circuit = occupation_reduce(circuit, profile)
    circuit = parity_reduce(circuit, profile)
    circuit = merge_diagonals(circuit)
    if release_diagonals:
        circuit = merge_diagonals(release_diagonal_control(circuit, profile))
    return circuit


def reduce_pair(pair: StitchedPair, profile: OccupationProfile, release_diagonals: bool = True) -> StitchedPair:
    return replace(pair,
                   plus=reduce_circuit(pair.plus, profile, release_diagonals),
                   minus=reduce_circuit(pair.minus, profile, release_diagonals))


# ---------------------------------------------------------------------------
# Statistics and persistence
# ---------------------------------------------------------------------------

def ensemble_statistics(pairs: Sequence[StitchedPair], costs: GateCostModel | None = None) -> pd.DataFrame:
    costs = costs or GateCostModel()
    rows = []
    for pair in pairs:
        for circuit in pair.branches():
            rows.append({
                "circuit_index": circuit.metadata.circuit_index,
                "branch": circuit.metadata.trial_branch,
                "direction_sign": circuit.metadata.direction_sign,
                "tqg_count": count_tqg(circuit, costs),
                "tqg_depth": depth_tqg(circuit, costs),
            })
    return pd.DataFrame(rows, columns=["circuit_index", "branch", "direction_sign", "tqg_count", "tqg_depth"])


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "n_physical": circuit.n_physical,
        "metadata": {**asdict(circuit.metadata), "hf_bits": list(circuit.metadata.hf_bits)},
        "gates": [{"gate": type(g).__name__, **{k: (list(v) if isinstance(v, tuple) else v)
                                                  for k, v in asdict(g).items()}} for g in circuit.gates],
    }


def circuit_from_dict(payload: dict) -> Circuit:
    if payload.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported circuit schema {payload.get('schema')!r}")
    gates = []
    for entry in payload["gates"]:
        fields = {k: (tuple(v) if isinstance(v, list) else v) for k, v in entry.items() if k != "gate"}
        gates.append(_GATE_TYPES[entry["gate"]](**fields))
    metadata = CircuitMetadata(**{**payload["metadata"], "hf_bits": tuple(payload["metadata"]["hf_bits"])})
    return Circuit(payload["n_physical"], tuple(gates), metadata)


def save_ensemble(pairs: Sequence[StitchedPair], path: str, trial: "TrialEnergies") -> None:
    payload = {
        "schema": SCHEMA_VERSION,
        "trial": {"e_guess": trial.e_guess, "epsilon": trial.epsilon, "s": trial.s},
        "hf_bits": list(pairs[0].plus.metadata.hf_bits) if pairs else [],
        "pairs": [
            {"index": p.circuit_index, "u1": p.u1.to_dict(), "u2": p.u2.to_dict(), "u1_prime": p.u1_prime.to_dict()}
            for p in pairs
        ],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True, indent=1)
        handle.write("\n")


def load_ensemble(path: str, split: SplitHamiltonian) -> tuple[list[StitchedPair], "TrialEnergies"]:
    from estimator import TrialEnergies

    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported ensemble schema {payload.get('schema')!r}")
    trial = TrialEnergies(**payload["trial"])
    hf_bits = tuple(payload["hf_bits"])
    pairs = [
        _pair_from_draws(split, trial, entry["index"],
                         SampledEvolution.from_dict(entry["u1"]),
                         SampledEvolution.from_dict(entry["u2"]),
                         SampledEvolution.from_dict(entry["u1_prime"]), hf_bits)
        for entry in payload["pairs"]
    ]
    return pairs, trial
