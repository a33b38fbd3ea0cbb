# tetris_sampler.py
"""
Random realizations of the adiabatic sweep A(T) and of constant-Hamiltonian
evolution, drawn with the Poisson-rotation scheme: every H_I term fires a
Poisson number of fixed-angle rotations, interleaved with exact H_Z evolution.
The sample mean equals attenuation * exact evolution.
"""
import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from pauli_core import apply_pauli, z_signs
from symmetry_shift import SplitHamiltonian

if TYPE_CHECKING:
    from circuit_builder import GateCostModel

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, *stream); order-independent."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


# ---------------------------------------------------------------------------
# Schedules and configuration
# ---------------------------------------------------------------------------

class ScheduleKind(str, Enum):
    LINEAR = "linear"
    CONSTANT = "constant"


@dataclass(frozen=True)
class SweepSchedule:
    """Sweep function w(u) on [0, 1] with z(u) = integral of w from 0 to u."""

    kind: ScheduleKind = ScheduleKind.LINEAR

    def __post_init__(self):
        object.__setattr__(self, "kind", ScheduleKind(self.kind))

    @classmethod
    def linear(cls) -> "SweepSchedule":
        return cls(ScheduleKind.LINEAR)

    @classmethod
    def constant(cls) -> "SweepSchedule":
        return cls(ScheduleKind.CONSTANT)

    def w(self, u):
        u = np.asarray(u, dtype=np.float64)
        return u if self.kind is ScheduleKind.LINEAR else np.ones_like(u)

    def z(self, u):
        u = np.asarray(u, dtype=np.float64)
        return 0.5 * u * u if self.kind is ScheduleKind.LINEAR else u

    def z_inverse(self, y):
        y = np.asarray(y, dtype=np.float64)
        return np.sqrt(2.0 * y) if self.kind is ScheduleKind.LINEAR else y

    @property
    def zeta(self) -> float:
        return 0.5 if self.kind is ScheduleKind.LINEAR else 1.0


class Direction(str, Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


@dataclass(frozen=True)
class SamplerConfig:
    """duration is T for the sweep or s for constant evolution (Hartree^-1).

    direction=REVERSE yields the adjoint; time_sign=-1 runs the whole draw
    with negated time (the complex conjugate for a real Hamiltonian).
    """

    duration: float
    tau: float
    direction: Direction = Direction.FORWARD
    time_sign: int = 1
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        if not 0.0 < self.tau < math.pi / 2:
            raise ValueError(f"gate angle tau must lie in (0, pi/2), got {self.tau}")
        if not self.duration > 0.0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.time_sign not in (1, -1):
            raise ValueError(f"time_sign must be +1 or -1, got {self.time_sign}")
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        object.__setattr__(self, "direction", Direction(self.direction))

    @property
    def direction_sign(self) -> int:
        return self.time_sign * (-1 if self.direction is Direction.REVERSE else 1)


def attenuation_factor(mu_i: float, zeta: float, duration: float, tau: float) -> float:
    if min(mu_i, zeta, duration) < 0:
        raise ValueError("mu_i, zeta and duration must be non-negative")
    if not 0.0 < tau < math.pi / 2:
        raise ValueError(f"gate angle tau must lie in (0, pi/2), got {tau}")
    return math.exp(-math.tan(tau / 2) * zeta * duration * mu_i)


# ---------------------------------------------------------------------------
# Sampled evolutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RotationEvent:
    time: float
    term_index: int
    rotation_sign: int


@dataclass(frozen=True)
class SegmentOp:
    duration: float


@dataclass(frozen=True)
class RotationOp:
    term_index: int
    angle: float


@dataclass(frozen=True)
class SampledEvolution:
    events: tuple[RotationEvent, ...]
    schedule: SweepSchedule
    config: SamplerConfig
    attenuation: float
    mu_i: float = field(default=0.0)

    @property
    def event_count(self) -> int:
        return len(self.events)

    @property
    def direction_sign(self) -> int:
        return self.config.direction_sign

    @property
    def offset_duration(self) -> float:
        """Signed total time of the diagonal segments (multiplies the identity offset)."""
        return self.direction_sign * self.config.duration

    def operations(self) -> list[SegmentOp | RotationOp]:
        """Segments and rotations in application order."""
        sign = self.direction_sign
        ops: list[SegmentOp | RotationOp] = []
        previous = 0.0
        for event in self.events:
            ops.append(SegmentOp(sign * (event.time - previous)))
            ops.append(RotationOp(event.term_index, event.rotation_sign * self.config.tau))
            previous = event.time
        ops.append(SegmentOp(sign * (self.config.duration - previous)))
        if self.config.direction is Direction.REVERSE:
            ops.reverse()
        return ops

    def adjoint(self) -> "SampledEvolution":
        flipped = Direction.FORWARD if self.config.direction is Direction.REVERSE else Direction.REVERSE
        events = tuple(replace(e, rotation_sign=-e.rotation_sign) for e in self.events)
        return replace(self, events=events, config=replace(self.config, direction=flipped))

    def apply(self, split: SplitHamiltonian, amplitudes: np.ndarray, include_offset: bool = True) -> np.ndarray:
        """Apply the realized unitary along axis 0 of `amplitudes`."""
        state = np.array(amplitudes, dtype=np.complex128)
        tail = (1,) * (state.ndim - 1)
        hz = z_signs(split.n_qubits) @ split.z_coefficients
        strings = [t.string.axes for t in split.h_i.terms]
        for op in self.operations():
            if isinstance(op, SegmentOp):
                state *= np.exp(1j * op.duration * hz).reshape((-1,) + tail)
            else:
                state = math.cos(op.angle) * state + 1j * math.sin(op.angle) * apply_pauli(strings[op.term_index], state)
        if include_offset:
            state *= np.exp(1j * self.offset_duration * split.identity_offset)
        return state

    def unitary(self, split: SplitHamiltonian, include_offset: bool = True) -> np.ndarray:
        return self.apply(split, np.eye(2 ** split.n_qubits, dtype=np.complex128), include_offset)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "schedule": self.schedule.kind.value,
            "config": {
                "duration": self.config.duration,
                "tau": self.config.tau,
                "direction": self.config.direction.value,
                "time_sign": self.config.time_sign,
                "seed": self.config.seed,
                "stream_id": self.config.stream_id,
            },
            "attenuation": self.attenuation,
            "mu_i": self.mu_i,
            "events": [[e.time, e.term_index, e.rotation_sign] for e in self.events],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SampledEvolution":
        if payload.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported evolution schema {payload.get('schema')!r}")
        return cls(
            events=tuple(RotationEvent(float(t), int(n), int(s)) for t, n, s in payload["events"]),
            schedule=SweepSchedule(payload["schedule"]),
            config=SamplerConfig(**payload["config"]),
            attenuation=float(payload["attenuation"]),
            mu_i=float(payload["mu_i"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SampledEvolution":
        return cls.from_dict(json.loads(text))


def _draw_times(rng: np.random.Generator, counts: np.ndarray, schedule: SweepSchedule,
                duration: float) -> tuple[np.ndarray, np.ndarray]:
    total = int(counts.sum())
    terms = np.repeat(np.arange(len(counts)), counts)
    scaled = rng.uniform(0.0, schedule.zeta, size=total)
    times = duration * schedule.z_inverse(scaled)
    order = np.argsort(times, kind="stable")
    return times[order], terms[order]


def sample_evolution(split: SplitHamiltonian, schedule: SweepSchedule, config: SamplerConfig) -> SampledEvolution:
    rng = make_rng(config.seed, config.stream_id)
    coefficients = split.h_i.coefficients
    rates = np.abs(coefficients) * schedule.zeta * config.duration / math.sin(config.tau)
    counts = rng.poisson(rates) if len(rates) else np.zeros(0, dtype=np.int64)

    times, terms = _draw_times(rng, counts, schedule, config.duration)
    # exact ties have probability zero; redraw the times if one shows up
    while times.size > 1 and np.any(np.diff(times) <= 0.0):
        times, terms = _draw_times(rng, counts, schedule, config.duration)

    signs = np.sign(coefficients[terms]).astype(np.int64) * config.direction_sign
    events = tuple(RotationEvent(float(t), int(n), int(s)) for t, n, s in zip(times, terms, signs))
    return SampledEvolution(
        events=events,
        schedule=schedule,
        config=config,
        attenuation=attenuation_factor(split.mu_i, schedule.zeta, config.duration, config.tau),
        mu_i=split.mu_i,
    )


def expected_tqg(split: SplitHamiltonian, schedule: SweepSchedule, config: SamplerConfig,
                 costs: "GateCostModel", controlled: bool = False) -> float:
    """Mean two-qubit-gate count of one draw: zeta T mu_I g / sin(tau)."""
    if split.mu_i == 0.0:
        return 0.0
    weighted = sum(abs(t.coefficient) * costs.rotation_cost(t.string, controlled) for t in split.h_i.terms)
    g = weighted / split.mu_i
    return schedule.zeta * config.duration * split.mu_i * g / math.sin(config.tau)
