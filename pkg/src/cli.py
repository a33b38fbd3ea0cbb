# cli.py
"""
Command-line driver for the ground-state-energy pipeline.

    python3 src/cli.py validate [hamiltonian.txt]
    python3 src/cli.py run --preset h3plus-paper --backend exact
    python3 src/cli.py sweep --preset h3plus-quick --jobs 4
    python3 src/cli.py shift-optimize [hamiltonian.txt]
    python3 src/cli.py baselines
    python3 src/cli.py stats runs/run_<id>/shots.jsonl

Exit codes: 0 success, 2 validation failure, 3 simulation failure,
4 post-processing failure.
"""
import argparse
import hashlib
import itertools
import json
import logging
import os
import sys
import time
from dataclasses import replace
from datetime import datetime

import pandas as pd

from baselines import baseline_report
from circuit_builder import (
    GateCostModel,
    OccupationProfile,
    build_ensemble,
    ensemble_statistics,
    load_ensemble,
    reduce_pair,
    save_ensemble,
)
from errors import (
    ConfigError,
    EstimationError,
    HamiltonianParseError,
    MismatchedQubitCount,
    ParityViolation,
    PipelineError,
    SimulationError,
    SymmetryViolation,
)
from estimator import (
    PostSelectMode,
    TrialEnergies,
    accumulate_curve,
    estimate_energy,
    estimate_repetitions,
    measurement_stats,
    metadata_index,
    reduce_shots,
    rho_from_expectations,
    sweep_s_tau,
)
from paths import require_dirs
from pauli_core import (
    SpinOrdering,
    commutes_with,
    detect_spin_ordering,
    expectation_in_basis_state,
    hartree_fock_bits,
    load_hamiltonian,
    serialize_hamiltonian,
    symmetry_operators,
)
from run_config import BACKENDS, MODES, PRESETS, RunConfig, resolve_config
from simulator import (
    Backend,
    NoiseModel,
    exact_ground_state,
    read_shots_jsonl,
    simulate_pairs,
    write_expectations_json,
    write_shots_jsonl,
)
from symmetry_shift import optimize_shift, split

logger = logging.getLogger(__name__)

VERSION = "0.1.0"
EXIT_OK, EXIT_FAILURE, EXIT_VALIDATION, EXIT_SIMULATION, EXIT_ESTIMATION = 0, 1, 2, 3, 4
UPPER_BOUND_TOLERANCE = 1e-9

CSV_COLUMNS = {
    "ensemble_stats.csv": ["circuit_index", "branch", "direction_sign", "tqg_count", "tqg_depth"],
    "rho.csv": ["mode", "rho_plus", "rho_minus", "se_plus", "se_minus", "kept_plus", "kept_minus",
                "discarded_plus", "discarded_minus"],
    "estimates.csv": ["mode", "value", "std_error", "error_mha", "delta_se", "bootstrap_se", "n_estimates",
                      "window_saturated"],
    "measurement_stats.csv": ["qubit", "role", "mean_zeros", "mean_ones", "total_zeros", "total_ones"],
    "sweep.csv": ["s", "tau", "mean_tqg", "admissible", "variance", "mean_energy"],
}
CURVE_COLUMNS = ["i", "circuit_index", "energy", "error_mha", "se_mha"]
REPETITION_COLUMNS = ["repetition", "energy", "bias_mha", "se_mha"]


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, (HamiltonianParseError, ConfigError, SymmetryViolation, ParityViolation,
                          MismatchedQubitCount)):
        return EXIT_VALIDATION
    if isinstance(error, SimulationError):
        return EXIT_SIMULATION
    if isinstance(error, EstimationError):
        return EXIT_ESTIMATION
    return EXIT_FAILURE


def banner(title: str):
    print("\n" + "=" * 70)
    print(title)
    print("=" * 70)


# ---------------------------------------------------------------------------
# Run bookkeeping
# ---------------------------------------------------------------------------

def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


class RunContext:
    """Owns one run directory: artifacts, stage bookkeeping and the manifest."""

    def __init__(self, command: str, config: RunConfig):
        self.command = command
        self.config = config
        self.directory = os.path.join(config.output_dir, f"{command}_{config.run_id}")
        os.makedirs(self.directory, exist_ok=True)
        self.artifacts: dict[str, str] = {}
        self.stage = "setup"
        self.started = time.time()

    def path(self, name: str) -> str:
        return os.path.join(self.directory, name)

    def record(self, name: str):
        self.artifacts[name] = _sha256(self.path(name))
        print(f"✓ Wrote {self.path(name)}")

    def write_csv(self, frame: pd.DataFrame, name: str):
        frame.to_csv(self.path(name), index=False)
        self.record(name)

    def write_json(self, payload, name: str):
        with open(self.path(name), "w", encoding="utf-8") as handle:
            json.dump(payload, handle, sort_keys=True, indent=2, default=float)
            handle.write("\n")
        self.record(name)

    def check_artifacts(self):
        """Re-read every artifact and check its schema."""
        for name in self.artifacts:
            expected = CSV_COLUMNS.get(name)
            if expected is None and name.startswith("curve_"):
                expected = CURVE_COLUMNS
            if expected is None and name.startswith("repetitions_"):
                expected = REPETITION_COLUMNS
            if expected is not None:
                header = list(pd.read_csv(self.path(name), nrows=0).columns)
                if header != expected:
                    raise EstimationError(f"{name} has columns {header}, expected {expected}")
            elif name.endswith(".json"):
                with open(self.path(name), encoding="utf-8") as handle:
                    json.load(handle)

    def write_manifest(self, status: str, extra: dict | None = None):
        manifest = {
            "command": self.command,
            "run_id": self.config.run_id,
            "code_version": VERSION,
            "config": self.config.to_dict(),
            "artifacts": self.artifacts,
            "status": status,
            "failed_stage": None if status == "ok" else self.stage,
            "started": datetime.fromtimestamp(self.started).isoformat(timespec="seconds"),
            "wall_clock_seconds": round(time.time() - self.started, 3),
        }
        if extra:
            manifest.update(extra)
        with open(self.path("manifest.json"), "w", encoding="utf-8") as handle:
            json.dump(manifest, handle, sort_keys=True, indent=2, default=str)
            handle.write("\n")


def _run_stages(context: RunContext, body) -> int:
    extra: dict = {}
    try:
        body(context, extra)
        context.stage = "check"
        context.check_artifacts()
    except Exception as error:
        code = exit_code_for(error)
        logger.error("Stage '%s' failed: %s", context.stage, error)
        print(f"\n❌ FAILED at stage '{context.stage}': {error}")
        context.write_manifest("failed", {**extra, "error": f"{type(error).__name__}: {error}"})
        if code == EXIT_FAILURE:
            raise
        return code
    context.write_manifest("ok", extra)
    print(f"\n✓ Manifest: {context.path('manifest.json')}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Shared setup
# ---------------------------------------------------------------------------

def _ordering(config: RunConfig, hamiltonian) -> SpinOrdering:
    if config.spin_ordering is not None:
        return SpinOrdering(config.spin_ordering)
    return detect_spin_ordering(hamiltonian) or SpinOrdering.BLOCKED


def _problem(config: RunConfig):
    hamiltonian = load_hamiltonian(config.hamiltonian_path)
    ordering = _ordering(config, hamiltonian)
    hf_bits = config.hf_bits or hartree_fock_bits(hamiltonian, config.n_up, config.n_down, ordering)
    if len(hf_bits) != hamiltonian.n_qubits:
        raise MismatchedQubitCount(f"hf_bits has {len(hf_bits)} entries, Hamiltonian has {hamiltonian.n_qubits} qubits")
    e_hf = expectation_in_basis_state(hamiltonian, hf_bits)
    trial = TrialEnergies.from_hartree_fock(e_hf, config.s, config.epsilon)
    return hamiltonian, split(hamiltonian), tuple(hf_bits), e_hf, trial


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_validate(config: RunConfig, args) -> int:
    if args.hamiltonian:
        config = replace(config, hamiltonian_path=args.hamiltonian, hf_bits=None, spin_ordering=None)
    banner(f"VALIDATING {config.hamiltonian_path}")
    hamiltonian = load_hamiltonian(config.hamiltonian_path)
    parts = split(hamiltonian)

    print(f"\nQubits:        {hamiltonian.n_qubits}")
    print(f"Terms:         {hamiltonian.n_terms}")
    print(f"Mean weight:   {hamiltonian.mean_weight:.3f} ± {hamiltonian.weight_std:.3f}")
    print(f"mu_I:          {parts.mu_i:.6f}")

    failures = []
    if hamiltonian.n_qubits % 2:
        print("Odd qubit count: spin sectors and Hartree-Fock reference skipped")
        hf_bits, ordering = None, None
    else:
        ordering = _ordering(config, hamiltonian)
        hf_bits = config.hf_bits or hartree_fock_bits(hamiltonian, config.n_up, config.n_down, ordering)
        if len(hf_bits) != hamiltonian.n_qubits:
            raise MismatchedQubitCount(f"hf_bits has {len(hf_bits)} entries, "
                                       f"Hamiltonian has {hamiltonian.n_qubits} qubits")
        print(f"Spin ordering: {ordering.value}")
        for kind, symmetry in symmetry_operators(hamiltonian.n_qubits, hf_bits, ordering).items():
            ok = commutes_with(hamiltonian, symmetry)
            print(f"  [{'✓' if ok else '✗'}] commutes with {kind.value}")
            if not ok:
                failures.append(kind.value)

    try:
        e_gs, _ = exact_ground_state(hamiltonian, hf_bits, ordering)
        print(f"\nE_GS:          {e_gs:.6f} Ha")
    except SimulationError as error:
        e_gs = None
        print(f"\nE_GS skipped:  {error}")
    if hf_bits is not None:
        e_hf = expectation_in_basis_state(hamiltonian, hf_bits)
        print(f"HF bits:       {''.join(map(str, hf_bits))}")
        print(f"E_HF:          {e_hf:.6f} Ha")
        if e_gs is not None:
            print(f"E_HF - E_GS:   {1000.0 * (e_hf - e_gs):.2f} mHa")
            if e_hf < e_gs - UPPER_BOUND_TOLERANCE:
                print("  [✗] E_HF is not an upper bound to E_GS")
                failures.append("hartree-fock upper bound")

    if failures:
        print(f"\n❌ Validation failed: {', '.join(failures)}")
        return EXIT_VALIDATION
    print("\n✓ All checks passed")
    return EXIT_OK


def _run_body(context: RunContext, extra: dict):
    config = context.config
    context.stage = "load"
    hamiltonian, parts, hf_bits, e_hf, trial = _problem(config)
    e_gs, _ = exact_ground_state(hamiltonian, hf_bits, _ordering(config, hamiltonian))
    trial.check_window(e_gs)
    extra.update({"e_hf": e_hf, "e_gs": e_gs, "trial": {"e_guess": trial.e_guess, "epsilon": trial.epsilon,
                                                        "s": trial.s}})

    context.stage = "generate"
    banner(f"GENERATING {config.n_circuits} STITCHED PAIRS")
    pairs = build_ensemble(parts, trial, config.n_circuits, config.master_seed, config.total_time, config.tau,
                           hf_bits, jobs=config.jobs)
    save_ensemble(pairs, context.path("ensemble.json"), trial)
    context.record("ensemble.json")
    profile = OccupationProfile.from_bits(hf_bits)
    pairs = [reduce_pair(p, profile, config.release_diagonals) for p in pairs]
    costs = GateCostModel()
    stats = ensemble_statistics(pairs, costs)
    context.write_csv(stats, "ensemble_stats.csv")
    extra["mean_tqg"] = float(stats["tqg_count"].mean())
    extra["mean_depth"] = float(stats["tqg_depth"].mean())
    print(f"Mean TQG count {extra['mean_tqg']:.1f}, mean depth {extra['mean_depth']:.1f}")

    context.stage = "simulate"
    banner(f"SIMULATING ({config.backend})")
    noise = NoiseModel(config.lambda_incoh, config.lambda_coh, config.lambda_leak)
    shots = None if config.infinite_shots else config.shots_per_circuit
    output = simulate_pairs(pairs, Backend(config.backend), noise, shots, config.repetitions,
                            config.master_seed, costs, config.jobs)
    if shots is None:
        write_expectations_json(output, context.path("expectations.json"))
        context.record("expectations.json")
    else:
        write_shots_jsonl(output, context.path("shots.jsonl"))
        context.record("shots.jsonl")

    context.stage = "estimate"
    banner("ESTIMATING")
    metadata = metadata_index(pairs)
    rho_rows, estimate_rows = [], []
    for mode in PostSelectMode:
        rho = rho_from_expectations(output, mode) if shots is None else reduce_shots(output, mode, metadata)
        estimate = estimate_energy(rho, trial, seed=config.master_seed)
        rho_rows.append(rho.to_dict())
        estimate_rows.append({
            "mode": mode.value,
            "value": estimate.value,
            "std_error": estimate.std_error,
            "error_mha": 1000.0 * (estimate.value - e_gs),
            "delta_se": estimate.delta_se,
            "bootstrap_se": estimate.bootstrap_se,
            "n_estimates": estimate.n_estimates,
            "window_saturated": estimate.window_saturated,
        })
        context.write_csv(accumulate_curve(rho, trial, e_gs), f"curve_{mode.value}.csv")
        if shots is not None and config.repetitions > 1:
            table, summary = estimate_repetitions(output, metadata, trial, mode, e_gs)
            context.write_csv(table, f"repetitions_{mode.value}.csv")
            extra.setdefault("repetitions", {})[mode.value] = summary
        print(f"  {mode.value:>6}: E - E_GS = {estimate_rows[-1]['error_mha']:+.2f} ± "
              f"{1000.0 * estimate.std_error:.2f} mHa")
    context.write_csv(pd.DataFrame(rho_rows, columns=CSV_COLUMNS["rho.csv"]), "rho.csv")
    context.write_csv(pd.DataFrame(estimate_rows, columns=CSV_COLUMNS["estimates.csv"]), "estimates.csv")
    if shots is not None:
        context.write_csv(measurement_stats(output, hamiltonian.n_qubits), "measurement_stats.csv")
    headline = next(row for row in estimate_rows if row["mode"] == config.post_select)
    extra["headline"] = headline


def cmd_run(config: RunConfig, args) -> int:
    return _run_stages(RunContext("run", config), _run_body)


def cmd_sweep(config: RunConfig, args) -> int:
    def body(context: RunContext, extra: dict):
        context.stage = "load"
        _, parts, hf_bits, _, trial = _problem(config)
        context.stage = "sweep"
        banner("SWEEPING (s, tau)")
        grid = list(itertools.product(config.sweep_s, config.sweep_tau))
        table, best = sweep_s_tau(parts, trial, grid, hf_bits, config.total_time, config.max_mean_tqg,
                                  config.sweep_circuits, config.sweep_seeds, config.sweep_shots,
                                  config.master_seed, config.post_select, jobs=config.jobs)
        context.write_csv(table, "sweep.csv")
        extra["best"] = None if best is None else {"s": float(best["s"]), "tau": float(best["tau"]),
                                                   "variance": float(best["variance"])}
    return _run_stages(RunContext("sweep", config), body)


def cmd_shift_optimize(config: RunConfig, args) -> int:
    def body(context: RunContext, extra: dict):
        context.stage = "load"
        hamiltonian = load_hamiltonian(args.hamiltonian or config.hamiltonian_path)
        context.stage = "optimize"
        banner("OPTIMIZING SYMMETRY SHIFT")
        params, shifted = optimize_shift(hamiltonian, (config.n_up, config.n_down),
                                         SpinOrdering(config.spin_ordering) if config.spin_ordering else None)
        with open(context.path("shifted_hamiltonian.txt"), "w", encoding="utf-8") as handle:
            handle.write(serialize_hamiltonian(shifted.full, header=f"alpha = {list(params.alpha)}"))
        context.record("shifted_hamiltonian.txt")
        context.write_json({
            "alpha": list(params.alpha),
            "sector": list(params.sector),
            "mu_i_before": split(hamiltonian).mu_i,
            "mu_i_after": shifted.mu_i,
        }, "shift.json")
    return _run_stages(RunContext("shift", config), body)


def cmd_baselines(config: RunConfig, args) -> int:
    def body(context: RunContext, extra: dict):
        context.stage = "load"
        hamiltonian, _, hf_bits, _, _ = _problem(config)
        context.stage = "baselines"
        banner("BASELINES")
        report = baseline_report(hamiltonian, hf_bits, config.total_time,
                                 monte_carlo_shots=args.monte_carlo_shots, seed=config.master_seed)
        context.write_json(report, "baselines.json")
    return _run_stages(RunContext("baselines", config), body)


def cmd_stats(config: RunConfig, args) -> int:
    def body(context: RunContext, extra: dict):
        context.stage = "load"
        records = read_shots_jsonl(args.shots)
        mode = PostSelectMode(args.mode or "raw")
        metadata = None
        if mode is not PostSelectMode.RAW:
            ensemble = args.ensemble or os.path.join(os.path.dirname(args.shots), "ensemble.json")
            _, parts, _, _, _ = _problem(config)
            pairs, _ = load_ensemble(ensemble, parts)
            metadata = metadata_index(pairs)
        n_qubits = len(records[0].physical_bits) if records else load_hamiltonian(config.hamiltonian_path).n_qubits
        context.stage = "stats"
        banner("MEASUREMENT STATISTICS")
        table = measurement_stats(records, n_qubits, mode, metadata)
        print(table.to_string(index=False))
        context.write_csv(table, "measurement_stats.csv")
        extra["source"] = os.path.abspath(args.shots)
    return _run_stages(RunContext("stats", config), body)


COMMANDS = {
    "validate": cmd_validate,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "shift-optimize": cmd_shift_optimize,
    "baselines": cmd_baselines,
    "stats": cmd_stats,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value run configuration file")
    common.add_argument("--preset", choices=sorted(PRESETS), default="h3plus-paper")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--backend", choices=BACKENDS)
    common.add_argument("--mode", choices=MODES, help="post-selection mode of the headline estimate")
    common.add_argument("--jobs", type=int, help="worker processes (-1 for all cores)")
    common.add_argument("--out", help="directory that receives the run directories")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(description="Randomized adiabatic ground-state-energy pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("validate", "shift-optimize"):
        command = sub.add_parser(name, parents=[common])
        command.add_argument("hamiltonian", nargs="?", help="Hamiltonian file (default: bundled H3+)")
    run = sub.add_parser("run", parents=[common])
    run.add_argument("--repetitions", type=int)
    run.add_argument("--infinite-shots", action="store_true", default=None)
    sub.add_parser("sweep", parents=[common])
    baselines = sub.add_parser("baselines", parents=[common])
    baselines.add_argument("--monte-carlo-shots", type=int, default=0)
    stats = sub.add_parser("stats", parents=[common])
    stats.add_argument("shots", help="shots.jsonl written by `run`")
    stats.add_argument("--ensemble", help="ensemble.json (default: next to the shots file)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s",
    )
    overrides = {
        "master_seed": args.seed,
        "backend": args.backend,
        "post_select": args.mode if args.command != "stats" else None,
        "jobs": args.jobs,
        "output_dir": args.out,
        "repetitions": getattr(args, "repetitions", None),
        "infinite_shots": getattr(args, "infinite_shots", None),
    }
    try:
        config = resolve_config(args.preset, args.config, overrides)
        if args.command != "validate":
            if args.out is None:
                require_dirs(assert_only=False)
            else:
                os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](config, args)
    except PipelineError as error:
        print(f"\n❌ {type(error).__name__}: {error}", file=sys.stderr)
        return exit_code_for(error)
    except FileNotFoundError as error:
        print(f"\n❌ {error}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
