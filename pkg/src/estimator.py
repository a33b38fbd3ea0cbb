# estimator.py
"""
Shot records and expectation sets -> rho_plus / rho_minus -> ground-state
energy estimates, with post-selection, uncertainty, accumulated curves,
damping factors, the (s, tau) sweep and per-qubit measurement statistics.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from threadpoolctl import threadpool_limits

from circuit_builder import BRANCHES, CircuitMetadata, GateCostModel, build_ensemble
from errors import DegenerateRatio, DivisionByNearZero, EmptyAfterSelection
from pauli_core import basis_index
from simulator import Backend, ExpectationSet, ShotRecord, records_frame, simulate_pairs
from symmetry_shift import SplitHamiltonian
from tetris_sampler import SamplerConfig, SweepSchedule, expected_tqg, make_rng

logger = logging.getLogger(__name__)

DEGENERATE_TOLERANCE = 1e-15
NEAR_ZERO = 1e-6
SATURATION_FRACTION = 0.95
BOOTSTRAP_STREAM = 0xB007
PER_CIRCUIT_COLUMNS = ["circuit_index", "branch", "value_sum", "value_sumsq", "kept", "units", "discarded"]


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialEnergies:
    """E_trial = e_guess +/- epsilon, evaluated at phase time s."""

    e_guess: float
    epsilon: float
    s: float

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.s > 0.0:
            raise ValueError(f"s must be positive, got {self.s}")

    @classmethod
    def from_hartree_fock(cls, e_hf: float, s: float, epsilon: float = 0.04) -> "TrialEnergies":
        """(E_+, E_-) = (E_HF, E_HF - 2 epsilon)."""
        return cls(e_hf - epsilon, epsilon, s)

    @property
    def e_plus(self) -> float:
        return self.e_guess + self.epsilon

    @property
    def e_minus(self) -> float:
        return self.e_guess - self.epsilon

    def energy(self, branch: str) -> float:
        if branch == "plus":
            return self.e_plus
        if branch == "minus":
            return self.e_minus
        raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")

    def check_window(self, e_gs: float) -> list[str]:
        """Branches with s >= pi / |E_trial - E_GS| (outside the unambiguous window)."""
        violated = []
        for branch in BRANCHES:
            delta = abs(self.energy(branch) - e_gs)
            if delta > 0.0 and self.s >= math.pi / delta:
                violated.append(branch)
        if violated:
            logger.warning("s = %s leaves the validity window for branch(es) %s", self.s, violated)
        return violated


class PostSelectMode(str, Enum):
    RAW = "raw"
    PARITY = "parity"
    HF_PROJECTION = "hf"


@dataclass(frozen=True)
class RhoEstimate:
    rho_plus: float
    rho_minus: float
    se_plus: float
    se_minus: float
    kept_plus: float = 0.0
    kept_minus: float = 0.0
    discarded_plus: float = 0.0
    discarded_minus: float = 0.0
    mode: PostSelectMode = PostSelectMode.RAW
    per_circuit: pd.DataFrame | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_values(cls, rho_plus: float, rho_minus: float, se_plus: float = 0.0, se_minus: float = 0.0,
                    mode: PostSelectMode = PostSelectMode.RAW) -> "RhoEstimate":
        return cls(float(rho_plus), float(rho_minus), float(se_plus), float(se_minus), mode=PostSelectMode(mode))

    def scaled(self, factor: float) -> "RhoEstimate":
        return replace(self, rho_plus=factor * self.rho_plus, rho_minus=factor * self.rho_minus,
                       se_plus=abs(factor) * self.se_plus, se_minus=abs(factor) * self.se_minus)

    @property
    def discard_fraction(self) -> float:
        total = self.kept_plus + self.kept_minus + self.discarded_plus + self.discarded_minus
        return (self.discarded_plus + self.discarded_minus) / total if total else 0.0

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "rho_plus": self.rho_plus,
            "rho_minus": self.rho_minus,
            "se_plus": self.se_plus,
            "se_minus": self.se_minus,
            "kept_plus": self.kept_plus,
            "kept_minus": self.kept_minus,
            "discarded_plus": self.discarded_plus,
            "discarded_minus": self.discarded_minus,
        }


@dataclass(frozen=True)
class DampingFactors:
    f_plus: float
    f_minus: float
    se_plus: float
    se_minus: float


@dataclass(frozen=True)
class EnergyEstimate:
    value: float
    std_error: float
    mode: PostSelectMode
    n_estimates: int
    delta_se: float = 0.0
    bootstrap_se: float = 0.0
    f_plus: float | None = None
    f_minus: float | None = None
    window_saturated: bool = False

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "mode": self.mode.value,
            "n_estimates": self.n_estimates,
            "delta_se": self.delta_se,
            "bootstrap_se": self.bootstrap_se,
            "f_plus": self.f_plus,
            "f_minus": self.f_minus,
            "window_saturated": self.window_saturated,
        }


# ---------------------------------------------------------------------------
# Post-selection
# ---------------------------------------------------------------------------

def _bits_text(bits: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in bits)


def _metadata_frame(metadata: Mapping[tuple[int, str], CircuitMetadata]) -> pd.DataFrame:
    return pd.DataFrame([
        {
            "circuit_index": index,
            "trial_branch": branch,
            "attenuation": meta.attenuation,
            "eta": meta.parity_eta,
            "hf_text": _bits_text(meta.hf_bits),
        }
        for (index, branch), meta in metadata.items()
    ], columns=["circuit_index", "trial_branch", "attenuation", "eta", "hf_text"])


def metadata_index(circuits) -> dict[tuple[int, str], CircuitMetadata]:
    """(circuit_index, branch) -> metadata, from circuits or stitched pairs."""
    index = {}
    for item in circuits:
        for circuit in (item.branches() if hasattr(item, "branches") else (item,)):
            index[(circuit.metadata.circuit_index, circuit.metadata.trial_branch)] = circuit.metadata
    return index


def _branch_summary(per_circuit: pd.DataFrame, branch: str) -> tuple[float, float, float, float]:
    rows = per_circuit[per_circuit["branch"] == branch]
    kept = float(rows["kept"].sum())
    if kept <= 0.0:
        raise EmptyAfterSelection(f"no records left in the {branch} branch after post-selection")
    units = float(rows["units"].sum())
    mean = float(rows["value_sum"].sum()) / kept
    variance = max(float(rows["value_sumsq"].sum()) / kept - mean * mean, 0.0)
    se = math.sqrt(variance / (units - 1.0)) if units > 1 else 0.0
    return mean, se, kept, float(rows["discarded"].sum())


def _rho_from_per_circuit(per_circuit: pd.DataFrame, mode: PostSelectMode) -> RhoEstimate:
    rho_p, se_p, kept_p, disc_p = _branch_summary(per_circuit, "plus")
    rho_m, se_m, kept_m, disc_m = _branch_summary(per_circuit, "minus")
    return RhoEstimate(rho_p, rho_m, se_p, se_m, kept_p, kept_m, disc_p, disc_m, mode, per_circuit)


def reduce_shots(records: Sequence[ShotRecord] | pd.DataFrame, mode: PostSelectMode | str,
                 metadata: Mapping[tuple[int, str], CircuitMetadata]) -> RhoEstimate:
    """Post-select, sign-correct and attenuation-correct shots into rho_plus / rho_minus."""
    mode = PostSelectMode(mode)
    frame = records if isinstance(records, pd.DataFrame) else records_frame(records)
    frame = frame.merge(_metadata_frame(metadata), on=["circuit_index", "trial_branch"], how="left")
    if frame["attenuation"].isna().any():
        missing = frame.loc[frame["attenuation"].isna(), "circuit_index"].unique()[:5]
        raise KeyError(f"no circuit metadata for circuit(s) {list(missing)}")

    value = frame["ancilla_y"] * frame["direction_sign"] / frame["attenuation"]
    keep = pd.Series(True, index=frame.index)
    if mode is not PostSelectMode.RAW:
        parity = frame["physical_bits"].str.count("1") % 2
        keep = pd.Series(np.where(parity == 0, 1, -1) == frame["eta"].to_numpy(), index=frame.index)
    if mode is PostSelectMode.HF_PROJECTION:
        value = value.where(frame["physical_bits"] == frame["hf_text"], 0.0)

    frame = frame.assign(value=value.where(keep, 0.0), kept=keep.astype(int), discarded=(~keep).astype(int))
    frame["value_sq"] = frame["value"] ** 2
    per_circuit = (
        frame.groupby(["circuit_index", "trial_branch"], sort=True)
        .agg(value_sum=("value", "sum"), value_sumsq=("value_sq", "sum"),
             kept=("kept", "sum"), discarded=("discarded", "sum"))
        .reset_index()
        .rename(columns={"trial_branch": "branch"})
    )
    per_circuit["units"] = per_circuit["kept"]
    per_circuit = per_circuit[PER_CIRCUIT_COLUMNS]
    rho = _rho_from_per_circuit(per_circuit, mode)
    logger.info("Reduced %d shots (%s): rho+ = %.4f +/- %.4f, rho- = %.4f +/- %.4f, discarded %.1f%%",
                len(frame), mode.value, rho.rho_plus, rho.se_plus, rho.rho_minus, rho.se_minus,
                100.0 * rho.discard_fraction)
    return rho


def rho_from_expectations(results: Sequence[tuple[CircuitMetadata, ExpectationSet]],
                          mode: PostSelectMode | str) -> RhoEstimate:
    """Infinite-shot rho from per-circuit expectation sets.

    Each circuit contributes a numerator (selected Y weight) and a denominator
    (selected probability), pooled as a ratio of sums like shot counts are.
    """
    mode = PostSelectMode(mode)
    rows = []
    for meta, result in results:
        y_joint = np.asarray(result.y_joint, dtype=np.float64)
        p_phys = np.asarray(result.p_phys, dtype=np.float64)
        sign = meta.direction_sign / meta.attenuation
        if mode is PostSelectMode.RAW:
            numerator, weight = float(y_joint.sum()), 1.0
        else:
            n = len(meta.hf_bits)
            parity = np.bitwise_count(np.arange(2 ** n, dtype=np.uint64)).astype(np.int64) % 2
            selected = np.where(parity == 0, 1, -1) == meta.parity_eta
            weight = float(p_phys[selected].sum())
            if mode is PostSelectMode.PARITY:
                numerator = float(y_joint[selected].sum())
            else:
                numerator = float(y_joint[basis_index(meta.hf_bits)])
        value_sum = sign * numerator
        rows.append({
            "circuit_index": meta.circuit_index,
            "branch": meta.trial_branch,
            "value_sum": value_sum,
            "value_sumsq": (value_sum / weight) ** 2 * weight if weight > 0.0 else 0.0,
            "kept": weight,
            "units": 1,
            "discarded": 1.0 - weight,
        })
    per_circuit = pd.DataFrame(rows, columns=PER_CIRCUIT_COLUMNS).sort_values(
        ["circuit_index", "branch"], kind="stable").reset_index(drop=True)
    return _rho_from_per_circuit(per_circuit, mode)


# ---------------------------------------------------------------------------
# Energy estimate
# ---------------------------------------------------------------------------

def _arctan_energy(rho_plus, rho_minus, trial: TrialEnergies):
    k = math.tan(trial.s * trial.epsilon)
    ratio = (rho_plus + rho_minus) / (rho_minus - rho_plus)
    return trial.e_guess + np.arctan(k * ratio) / trial.s


def _delta_se(rho: RhoEstimate, trial: TrialEnergies) -> float:
    k = math.tan(trial.s * trial.epsilon)
    gap = rho.rho_minus - rho.rho_plus
    ratio = (rho.rho_plus + rho.rho_minus) / gap
    d_ratio = k / (trial.s * (1.0 + (k * ratio) ** 2))
    d_plus = d_ratio * 2.0 * rho.rho_minus / gap ** 2
    d_minus = -d_ratio * 2.0 * rho.rho_plus / gap ** 2
    return math.hypot(d_plus * rho.se_plus, d_minus * rho.se_minus)


def _branch_columns(per_circuit: pd.DataFrame) -> pd.DataFrame:
    wide = per_circuit.pivot_table(index="circuit_index", columns="branch",
                                   values=["value_sum", "kept"], aggfunc="sum", fill_value=0.0)
    return wide.sort_index()


def _bootstrap_se(rho: RhoEstimate, trial: TrialEnergies, n_bootstrap: int, seed: int) -> float:
    if n_bootstrap <= 0 or rho.per_circuit is None:
        return 0.0
    wide = _branch_columns(rho.per_circuit)
    n = len(wide)
    if n < 2:
        return 0.0
    rng = make_rng(seed, BOOTSTRAP_STREAM)
    weights = rng.multinomial(n, np.full(n, 1.0 / n), size=n_bootstrap).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        plus = (weights @ wide[("value_sum", "plus")].to_numpy()) / (weights @ wide[("kept", "plus")].to_numpy())
        minus = (weights @ wide[("value_sum", "minus")].to_numpy()) / (weights @ wide[("kept", "minus")].to_numpy())
        energies = _arctan_energy(plus, minus, trial)
    energies = energies[np.isfinite(energies)]
    return float(np.std(energies, ddof=1)) if energies.size > 1 else 0.0


def damping_diagnostics(noisy: RhoEstimate, noiseless: RhoEstimate) -> DampingFactors:
    """f = rho / rho_noiseless per branch, with first-order propagated errors."""
    for name, reference in (("plus", noiseless.rho_plus), ("minus", noiseless.rho_minus)):
        if abs(reference) < NEAR_ZERO:
            raise DivisionByNearZero(f"noiseless rho_{name} = {reference:.3g} is too close to zero")

    def ratio(value, se, reference, reference_se):
        return value / reference, math.hypot(se / reference, value * reference_se / reference ** 2)

    f_plus, se_plus = ratio(noisy.rho_plus, noisy.se_plus, noiseless.rho_plus, noiseless.se_plus)
    f_minus, se_minus = ratio(noisy.rho_minus, noisy.se_minus, noiseless.rho_minus, noiseless.se_minus)
    return DampingFactors(f_plus, f_minus, se_plus, se_minus)


def estimate_energy(rho: RhoEstimate, trial: TrialEnergies, seed: int = 0, n_bootstrap: int = 10_000,
                    reference: RhoEstimate | None = None) -> EnergyEstimate:
    """Arctan estimator; std_error is the larger of the delta-method and circuit-bootstrap errors."""
    if abs(rho.rho_minus - rho.rho_plus) <= DEGENERATE_TOLERANCE:
        raise DegenerateRatio(f"rho_plus = rho_minus = {rho.rho_plus:.6g}; the estimator ratio is undefined")
    value = float(_arctan_energy(rho.rho_plus, rho.rho_minus, trial))
    delta = _delta_se(rho, trial)
    bootstrap = _bootstrap_se(rho, trial, n_bootstrap, seed)

    saturated = abs(value - trial.e_guess) > SATURATION_FRACTION * math.pi / (2.0 * trial.s)
    if saturated:
        logger.warning("Estimate %.6f is close to the edge of the arctan window around %.6f",
                       value, trial.e_guess)
    f_plus = f_minus = None
    if reference is not None:
        damping = damping_diagnostics(rho, reference)
        f_plus, f_minus = damping.f_plus, damping.f_minus

    n_estimates = rho.per_circuit["circuit_index"].nunique() if rho.per_circuit is not None else 1
    return EnergyEstimate(
        value=value,
        std_error=max(delta, bootstrap),
        mode=rho.mode,
        n_estimates=int(n_estimates),
        delta_se=delta,
        bootstrap_se=bootstrap,
        f_plus=f_plus,
        f_minus=f_minus,
        window_saturated=saturated,
    )


def accumulate_curve(rho: RhoEstimate, trial: TrialEnergies, e_gs: float | None = None,
                     order: Sequence[int] | None = None) -> pd.DataFrame:
    """E_i from the pooled rho of the first i circuits (not a running mean of energies)."""
    if rho.per_circuit is None or rho.per_circuit.empty:
        raise ValueError("accumulated curves need per-circuit sums")
    per_circuit = rho.per_circuit
    wide = per_circuit.pivot_table(index="circuit_index", columns="branch",
                                   values=["value_sum", "value_sumsq", "kept", "units"],
                                   aggfunc="sum", fill_value=0.0)
    if order is not None:
        wide = wide.loc[list(order)]
    running = wide.cumsum()

    def branch(name):
        kept = running[("kept", name)].to_numpy()
        units = running[("units", name)].to_numpy()
        with np.errstate(divide="ignore", invalid="ignore"):
            mean = running[("value_sum", name)].to_numpy() / kept
            variance = np.clip(running[("value_sumsq", name)].to_numpy() / kept - mean ** 2, 0.0, None)
            se = np.where(units > 1, np.sqrt(variance / np.maximum(units - 1, 1)), 0.0)
        return mean, se

    plus, se_plus = branch("plus")
    minus, se_minus = branch("minus")
    with np.errstate(divide="ignore", invalid="ignore"):
        energy = _arctan_energy(plus, minus, trial)
    se = np.array([
        _delta_se(RhoEstimate.from_values(p, m, sp, sm), trial) if np.isfinite(e) else np.nan
        for p, m, sp, sm, e in zip(plus, minus, se_plus, se_minus, energy)
    ])
    curve = pd.DataFrame({
        "i": np.arange(1, len(wide) + 1),
        "circuit_index": wide.index.to_numpy(),
        "energy": energy,
        "error_mha": 1000.0 * (energy - e_gs) if e_gs is not None else np.nan,
        "se_mha": 1000.0 * se,
    })
    return curve


# ---------------------------------------------------------------------------
# Repetition studies and measurement statistics
# ---------------------------------------------------------------------------

def estimate_repetitions(records: Sequence[ShotRecord] | pd.DataFrame,
                         metadata: Mapping[tuple[int, str], CircuitMetadata], trial: TrialEnergies,
                         mode: PostSelectMode | str, e_gs: float) -> tuple[pd.DataFrame, dict]:
    """One estimate per repetition tag; summary of the bias (mHa) across repetitions."""
    mode = PostSelectMode(mode)
    frame = records if isinstance(records, pd.DataFrame) else records_frame(records)
    rows = []
    for repetition, group in frame.groupby("repetition", sort=True):
        try:
            estimate = estimate_energy(reduce_shots(group, mode, metadata), trial, n_bootstrap=0)
        except (EmptyAfterSelection, DegenerateRatio) as error:
            logger.warning("Repetition %d skipped: %s", repetition, error)
            continue
        rows.append({
            "repetition": int(repetition),
            "energy": estimate.value,
            "bias_mha": 1000.0 * (estimate.value - e_gs),
            "se_mha": 1000.0 * estimate.std_error,
        })
    table = pd.DataFrame(rows, columns=["repetition", "energy", "bias_mha", "se_mha"])
    bias = table["bias_mha"]
    summary = {
        "mode": mode.value,
        "repetitions": int(len(table)),
        "mean_bias_mha": float(bias.mean()) if len(bias) else float("nan"),
        "median_bias_mha": float(bias.median()) if len(bias) else float("nan"),
        "std_bias_mha": float(bias.std(ddof=1)) if len(bias) > 1 else 0.0,
    }
    return table, summary


def measurement_stats(records: Sequence[ShotRecord] | pd.DataFrame, n_qubits: int,
                      mode: PostSelectMode | str = PostSelectMode.RAW,
                      metadata: Mapping[tuple[int, str], CircuitMetadata] | None = None) -> pd.DataFrame:
    """Per-qubit 0/1 counts, totals and means over repetitions. The ancilla (qubit n_qubits) reads 0 for y = +1."""
    mode = PostSelectMode(mode)
    frame = records if isinstance(records, pd.DataFrame) else records_frame(records)
    columns = ["qubit", "role", "mean_zeros", "mean_ones", "total_zeros", "total_ones"]
    if frame.empty:
        return pd.DataFrame([
            {"qubit": q, "role": "ancilla" if q == n_qubits else "physical",
             "mean_zeros": 0.0, "mean_ones": 0.0, "total_zeros": 0, "total_ones": 0}
            for q in range(n_qubits + 1)
        ], columns=columns)
    if mode is not PostSelectMode.RAW:
        if metadata is None:
            raise ValueError("post-selected statistics need circuit metadata")
        frame = frame.merge(_metadata_frame(metadata), on=["circuit_index", "trial_branch"], how="left")
        parity = np.where(frame["physical_bits"].str.count("1") % 2 == 0, 1, -1)
        frame = frame[parity == frame["eta"].to_numpy()]

    bits = np.array([[int(c) for c in text] for text in frame["physical_bits"]], dtype=np.int64)
    bits = bits.reshape(len(frame), n_qubits)
    ancilla = (frame["ancilla_y"].to_numpy() < 0).astype(np.int64)
    ones = pd.DataFrame(np.column_stack([bits, ancilla]), columns=range(n_qubits + 1))
    ones["repetition"] = frame["repetition"].to_numpy()
    per_rep_ones = ones.groupby("repetition").sum()
    per_rep_shots = ones.groupby("repetition").size()

    rows = []
    for q in range(n_qubits + 1):
        total_ones = int(per_rep_ones[q].sum())
        total_zeros = int(per_rep_shots.sum()) - total_ones
        rows.append({
            "qubit": q,
            "role": "ancilla" if q == n_qubits else "physical",
            "mean_zeros": float((per_rep_shots - per_rep_ones[q]).mean()) if len(per_rep_shots) else 0.0,
            "mean_ones": float(per_rep_ones[q].mean()) if len(per_rep_shots) else 0.0,
            "total_zeros": total_zeros,
            "total_ones": total_ones,
        })
    return pd.DataFrame(rows, columns=columns)


# ---------------------------------------------------------------------------
# (s, tau) selection
# ---------------------------------------------------------------------------

def expected_circuit_tqg(split: SplitHamiltonian, total_time: float, s: float, tau: float,
                         costs: GateCostModel | None = None) -> float:
    """Mean controlled two-qubit-gate count of U1' U2 U1."""
    costs = costs or GateCostModel()
    sweep = expected_tqg(split, SweepSchedule.linear(), SamplerConfig(total_time, tau), costs, controlled=True)
    phase = expected_tqg(split, SweepSchedule.constant(), SamplerConfig(s, tau), costs, controlled=True)
    return 2.0 * sweep + phase


def _sweep_trial(split, trial, n_circuits, master_seed, total_time, tau, hf_bits, shots, mode) -> float:
    with threadpool_limits(1):
        pairs = build_ensemble(split, trial, n_circuits, master_seed, total_time, tau, hf_bits)
        records = simulate_pairs(pairs, Backend.EXACT, shots=shots, master_seed=master_seed)
        rho = reduce_shots(records, mode, metadata_index(pairs))
        return estimate_energy(rho, trial, n_bootstrap=0).value


def sweep_s_tau(split: SplitHamiltonian, trial: TrialEnergies, grid: Sequence[tuple[float, float]],
                hf_bits: Sequence[int], total_time: float = 8.0, max_mean_tqg: float = 1100.0,
                n_circuits: int = 50, n_seeds: int = 20, shots: int = 5, master_seed: int = 0,
                mode: PostSelectMode | str = PostSelectMode.HF_PROJECTION, costs: GateCostModel | None = None,
                jobs: int = 1) -> tuple[pd.DataFrame, pd.Series | None]:
    """Estimator variance over seeds for every admissible (s, tau); returns the table and its argmin row."""
    mode = PostSelectMode(mode)
    rows = []
    for s, tau in grid:
        mean_tqg = expected_circuit_tqg(split, total_time, s, tau, costs)
        row = {"s": float(s), "tau": float(tau), "mean_tqg": mean_tqg,
               "admissible": mean_tqg < max_mean_tqg, "variance": np.nan, "mean_energy": np.nan}
        if row["admissible"]:
            point = replace(trial, s=float(s))
            values = Parallel(n_jobs=jobs)(
                delayed(_sweep_trial)(split, point, n_circuits, master_seed + k, total_time, tau, hf_bits,
                                      shots, mode)
                for k in range(n_seeds)
            )
            values = np.asarray(values)
            row["variance"] = float(np.var(values, ddof=1)) if len(values) > 1 else 0.0
            row["mean_energy"] = float(values.mean())
        logger.info("Sweep point s=%s tau=%s: mean TQG %.1f, variance %s", s, tau, mean_tqg, row["variance"])
        rows.append(row)
    table = pd.DataFrame(rows, columns=["s", "tau", "mean_tqg", "admissible", "variance", "mean_energy"])
    scored = table[table["admissible"] & table["variance"].notna()]
    best = scored.loc[scored["variance"].idxmin()] if len(scored) else None
    return table, best
