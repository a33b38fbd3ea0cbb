# baselines.py
"""
Conventional comparators for the randomized pipeline: Trotterized adiabatic
state preparation, direct (l1-importance) sampling of <H>, and iterative
phase estimation costed on the same gate model.
"""
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from circuit_builder import GateCostModel
from pauli_core import PauliHamiltonian, apply_pauli, basis_state
from simulator import energy_error, exact_adiabatic, exact_ground_state
from symmetry_shift import split
from tetris_sampler import SweepSchedule, make_rng

logger = logging.getLogger(__name__)

LOW_OVERLAP = 0.9


@dataclass(frozen=True)
class TrotterPlan:
    k: int
    m: int = 1
    term_order: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.k < 1 or self.m < 1:
            raise ValueError(f"k and m must be positive, got k={self.k}, m={self.m}")

    def order(self, n_terms: int) -> tuple[int, ...]:
        if self.term_order is None:
            return tuple(range(n_terms))
        if sorted(self.term_order) != list(range(n_terms)):
            raise ValueError(f"term_order must be a permutation of 0..{n_terms - 1}")
        return tuple(self.term_order)


@dataclass(frozen=True)
class IqpeConfig:
    tau_step: float = 0.4
    l_max: int = 10
    term_order: tuple[int, ...] | None = None

    def __post_init__(self):
        if not self.tau_step > 0.0:
            raise ValueError(f"tau_step must be positive, got {self.tau_step}")
        if self.l_max < 0:
            raise ValueError(f"l_max must be non-negative, got {self.l_max}")

    def precision(self, level: int) -> float:
        """Phase-estimation resolution at round `level`, in Hartree."""
        return 2.0 ** -(level + 1) / self.tau_step


@dataclass(frozen=True)
class IqpeReport:
    energy: float
    error_mha: float
    overlap: float
    precision_mha: tuple[float, ...]
    step_tqg: int
    total_tqg: int
    max_tqg: int
    phase_wrap: bool
    low_overlap: bool

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "error_mha": self.error_mha,
            "overlap": self.overlap,
            "precision_mha": list(self.precision_mha),
            "step_tqg": self.step_tqg,
            "total_tqg": self.total_tqg,
            "max_tqg": self.max_tqg,
            "phase_wrap": self.phase_wrap,
            "low_overlap": self.low_overlap,
        }


def _reference(hamiltonian: PauliHamiltonian, e_gs: float | None, hf_bits: Sequence[int]) -> float:
    return exact_ground_state(hamiltonian, hf_bits)[0] if e_gs is None else e_gs


# ---------------------------------------------------------------------------
# Trotterized adiabatic state preparation
# ---------------------------------------------------------------------------

def trotter_path_error(hamiltonian: PauliHamiltonian, schedule: SweepSchedule, total_time: float, k: int,
                       hf_bits: Sequence[int], e_gs: float | None = None) -> float:
    """Piecewise-constant path, exp(i H(a/k) T/k) for a = 1..k, exact exponentials. Returns mHa."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    parts = split(hamiltonian)
    hz = np.diag(parts.h_z.diagonal())
    hi = parts.h_i.to_matrix()
    dt = total_time / k
    state = basis_state(hf_bits)
    for a in range(1, k + 1):
        state = expm(1j * dt * (hz + float(schedule.w(a / k)) * hi)) @ state
    return energy_error(hamiltonian, state, _reference(hamiltonian, e_gs, hf_bits))


def _term_weights(hamiltonian: PauliHamiltonian) -> np.ndarray:
    """1 for single-Z terms, 0 for interaction terms (which follow w(u))."""
    return np.array([1.0 if t.string.weight == 1 and t.string.is_diagonal else 0.0 for t in hamiltonian.terms])


def trotter_tqg(hamiltonian: PauliHamiltonian, plan: TrotterPlan, costs: GateCostModel | None = None) -> int:
    costs = costs or GateCostModel(native_zz=True)
    return plan.k * plan.m * sum(costs.rotation_cost(t.string) for t in hamiltonian.terms)


def trotter_full_error(hamiltonian: PauliHamiltonian, schedule: SweepSchedule, total_time: float,
                       plan: TrotterPlan, hf_bits: Sequence[int], e_gs: float | None = None,
                       costs: GateCostModel | None = None) -> tuple[float, int]:
    """Each path step split into m first-order layers of single-term rotations."""
    order = plan.order(hamiltonian.n_terms)
    strings = [t.string.axes for t in hamiltonian.terms]
    coefficients = hamiltonian.coefficients
    fixed = _term_weights(hamiltonian)
    dt = total_time / (plan.k * plan.m)

    state = basis_state(hf_bits)
    for a in range(1, plan.k + 1):
        w = float(schedule.w(a / plan.k))
        scale = np.where(fixed > 0.0, 1.0, w) * coefficients
        for _ in range(plan.m):
            for n in order:
                angle = dt * scale[n]
                state = math.cos(angle) * state + 1j * math.sin(angle) * apply_pauli(strings[n], state)
    error = energy_error(hamiltonian, state, _reference(hamiltonian, e_gs, hf_bits))
    return error, trotter_tqg(hamiltonian, plan, costs)


# ---------------------------------------------------------------------------
# Direct sampling
# ---------------------------------------------------------------------------

def direct_sampling_variance(hamiltonian: PauliHamiltonian, ground_state: np.ndarray) -> float:
    """Single-shot variance of the l1 sampler: mu^2 - (E - offset)^2."""
    mu = float(np.abs(hamiltonian.coefficients).sum())
    shifted = hamiltonian.expectation(ground_state) - hamiltonian.identity_offset
    return max(mu * mu - shifted * shifted, 0.0)


def direct_sampling_shots(hamiltonian: PauliHamiltonian, ground_state: np.ndarray, target_se: float) -> int:
    if not target_se > 0.0:
        raise ValueError(f"target_se must be positive, got {target_se}")
    variance = direct_sampling_variance(hamiltonian, ground_state)
    return max(1, math.ceil(variance / target_se ** 2))


def direct_sampling_monte_carlo(hamiltonian: PauliHamiltonian, ground_state: np.ndarray, shots: int,
                                rng: np.random.Generator) -> dict:
    """Simulate the sampler shot by shot; the variance comes with its own standard error."""
    if shots < 2:
        raise ValueError(f"shots must be at least 2, got {shots}")
    coefficients = hamiltonian.coefficients
    mu = float(np.abs(coefficients).sum())
    expectations = np.array([
        np.real(np.vdot(ground_state, term.string.apply(ground_state))) for term in hamiltonian.terms
    ])
    terms = rng.choice(len(coefficients), size=shots, p=np.abs(coefficients) / mu)
    outcomes = np.where(rng.random(shots) < 0.5 * (1.0 + expectations[terms]), 1.0, -1.0)
    samples = mu * np.sign(coefficients[terms]) * outcomes
    mean = float(samples.mean())
    variance = float(samples.var(ddof=1))
    fourth = float(np.mean((samples - mean) ** 4))
    return {
        "shots": shots,
        "energy": mean + hamiltonian.identity_offset,
        "energy_se": math.sqrt(variance / shots),
        "variance": variance,
        "variance_se": math.sqrt(max(fourth - variance ** 2, 0.0) / shots),
    }


# ---------------------------------------------------------------------------
# Iterative phase estimation
# ---------------------------------------------------------------------------

def iqpe_step_tqg(hamiltonian: PauliHamiltonian, costs: GateCostModel | None = None) -> int:
    """Controlled first-order step: one controlled rotation per term."""
    costs = costs or GateCostModel()
    return sum(costs.rotation_cost(t.string, controlled=True) for t in hamiltonian.terms)


def iqpe_analysis(hamiltonian: PauliHamiltonian, cfg: IqpeConfig | None = None,
                  costs: GateCostModel | None = None, hf_bits: Sequence[int] | None = None) -> IqpeReport:
    """Single-step unitary spectrum against the ground state of the `hf_bits` sector."""
    cfg = cfg or IqpeConfig()
    e_gs, ground_state = exact_ground_state(hamiltonian, hf_bits)
    dim = 2 ** hamiltonian.n_qubits
    strings = [t.string.axes for t in hamiltonian.terms]
    coefficients = hamiltonian.coefficients

    unitary = np.eye(dim, dtype=np.complex128) * np.exp(1j * cfg.tau_step * hamiltonian.identity_offset)
    for n in TrotterPlan(1, 1, cfg.term_order).order(hamiltonian.n_terms):
        angle = cfg.tau_step * coefficients[n]
        unitary = math.cos(angle) * unitary + 1j * math.sin(angle) * apply_pauli(strings[n], unitary)

    eigenvalues, eigenvectors = np.linalg.eig(unitary)
    overlaps = np.abs(ground_state.conj() @ eigenvectors) ** 2
    best = int(np.argmax(overlaps))
    energy = float(np.angle(eigenvalues[best]) / cfg.tau_step)

    radius = float(np.max(np.abs(np.linalg.eigvalsh(hamiltonian.to_matrix()))))
    phase_wrap = cfg.tau_step * radius >= math.pi
    if phase_wrap:
        logger.warning("tau = %s wraps eigenphases (spectral radius %.4f)", cfg.tau_step, radius)
    low_overlap = bool(overlaps[best] < LOW_OVERLAP)
    if low_overlap:
        logger.warning("Selected eigenvector overlaps the ground state only %.3f", overlaps[best])

    step = iqpe_step_tqg(hamiltonian, costs)
    return IqpeReport(
        energy=energy,
        error_mha=1000.0 * (energy - e_gs),
        overlap=float(overlaps[best]),
        precision_mha=tuple(1000.0 * cfg.precision(level) for level in range(cfg.l_max + 1)),
        step_tqg=step,
        total_tqg=step * (2 ** (cfg.l_max + 1) - 1),
        max_tqg=step * 2 ** cfg.l_max,
        phase_wrap=phase_wrap,
        low_overlap=low_overlap,
    )


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

def baseline_report(hamiltonian: PauliHamiltonian, hf_bits: Sequence[int], total_time: float = 8.0,
                    path_steps: int = 4, trotter_layers: int = 2, target_se: float = 1.6e-3,
                    iqpe: IqpeConfig | None = None, monte_carlo_shots: int = 0, seed: int = 0) -> dict:
    """Every comparator figure in one JSON-ready dictionary."""
    schedule = SweepSchedule.linear()
    e_gs, ground_state = exact_ground_state(hamiltonian, hf_bits)
    parts = split(hamiltonian)
    adiabatic = exact_adiabatic(parts, schedule, total_time, hf_bits)
    plan = TrotterPlan(path_steps, trotter_layers)
    full_error, full_tqg = trotter_full_error(hamiltonian, schedule, total_time, plan, hf_bits, e_gs)
    report = {
        "e_gs": e_gs,
        "total_time": total_time,
        "exact_adiabatic_error_mha": energy_error(hamiltonian, adiabatic, e_gs),
        "trotter_path": {
            "k": path_steps,
            "error_mha": trotter_path_error(hamiltonian, schedule, total_time, path_steps, hf_bits, e_gs),
        },
        "trotter_full": {"k": path_steps, "m": trotter_layers, "error_mha": full_error, "tqg": full_tqg,
                         "term_order": "file"},
        "direct_sampling": {
            "target_se_mha": 1000.0 * target_se,
            "mu": float(np.abs(hamiltonian.coefficients).sum()),
            "variance": direct_sampling_variance(hamiltonian, ground_state),
            "shots": direct_sampling_shots(hamiltonian, ground_state, target_se),
        },
        "iqpe": iqpe_analysis(hamiltonian, iqpe, hf_bits=hf_bits).to_dict(),
        "tolerances": {
            "trotter_path_error_mha": 0.05,
            "trotter_full_error_mha": 0.3,
            "trotter_tqg_relative": 0.2,
            "direct_sampling_shots_relative": 0.15,
            "iqpe_error_mha": 0.3,
            "iqpe_tqg_relative": 0.25,
        },
    }
    if monte_carlo_shots:
        report["direct_sampling"]["monte_carlo"] = direct_sampling_monte_carlo(
            hamiltonian, ground_state, monte_carlo_shots, make_rng(seed, 0xD5))
    logger.info("Baselines: path %.3f mHa, full %.3f mHa (%d TQG), direct sampling %d shots, iQPE %.3f mHa",
                report["trotter_path"]["error_mha"], full_error, full_tqg,
                report["direct_sampling"]["shots"], report["iqpe"]["error_mha"])
    return report
