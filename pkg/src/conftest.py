# conftest.py
"""
Shared fixtures: the bundled H3+ problem and a few small ensembles.
"""
import numpy as np
import pytest

from circuit_builder import OccupationProfile, build_ensemble, reduce_pair
from estimator import TrialEnergies
from paths import H3PLUS_HAMILTONIAN
from pauli_core import PauliHamiltonian, PauliString, PauliTerm, expectation_in_basis_state, load_hamiltonian
from simulator import exact_ground_state
from symmetry_shift import split

HF_BITS = (1, 1, 0, 0, 0, 0)


@pytest.fixture(scope="session")
def h3plus():
    return load_hamiltonian(H3PLUS_HAMILTONIAN)


@pytest.fixture(scope="session")
def h3plus_split(h3plus):
    return split(h3plus)


@pytest.fixture(scope="session")
def hf_bits():
    return HF_BITS


@pytest.fixture(scope="session")
def e_hf(h3plus):
    return expectation_in_basis_state(h3plus, HF_BITS)


@pytest.fixture(scope="session")
def ground(h3plus):
    """(E_GS, ground state) in the Hartree-Fock sector by exact diagonalization."""
    return exact_ground_state(h3plus, HF_BITS)


@pytest.fixture(scope="session")
def trial(e_hf):
    return TrialEnergies.from_hartree_fock(e_hf, s=10.0)


@pytest.fixture(scope="session")
def small_ensemble(h3plus_split, trial):
    """Six stitched pairs at the production settings (T = 8, s = 10, tau = 0.1)."""
    return build_ensemble(h3plus_split, trial, 6, master_seed=11, total_time=8.0, tau=0.1, hf_bits=HF_BITS)


@pytest.fixture(scope="session")
def short_trial(e_hf):
    return TrialEnergies.from_hartree_fock(e_hf, s=2.0)


@pytest.fixture(scope="session")
def short_ensemble(h3plus_split, short_trial):
    """Four pairs with T = 2, s = 2; cheap enough for the density backend."""
    return build_ensemble(h3plus_split, short_trial, 4, master_seed=5, total_time=2.0, tau=0.1, hf_bits=HF_BITS)


@pytest.fixture(scope="session")
def toy_hamiltonian():
    """Two qubits, every kind of term the sampler distinguishes."""
    return PauliHamiltonian(2, 0.1, (
        PauliTerm(0.4, PauliString("ZI")),
        PauliTerm(-0.3, PauliString("IZ")),
        PauliTerm(0.5, PauliString("XX")),
        PauliTerm(-0.2, PauliString("YY")),
        PauliTerm(0.15, PauliString("ZZ")),
    ))


@pytest.fixture
def random_hamiltonian():
    """Factory for random Hamiltonians with distinct, non-identity strings."""

    def make(n_qubits: int, n_terms: int, seed: int = 0) -> PauliHamiltonian:
        rng = np.random.default_rng(seed)
        strings = set()
        while len(strings) < n_terms:
            axes = "".join(rng.choice(list("IXYZ"), size=n_qubits))
            if set(axes) != {"I"}:
                strings.add(axes)
        terms = tuple(PauliTerm(float(rng.normal()), PauliString(a)) for a in sorted(strings))
        return PauliHamiltonian(n_qubits, float(rng.normal()), terms)

    return make


@pytest.fixture(scope="session")
def production_pairs(h3plus_split):
    """Factory for reduced stitched pairs at T = 8, tau = 0.1, cached per (trial, size, seed, T)."""
    cache = {}
    profile = OccupationProfile.from_bits(HF_BITS)

    def make(trial: TrialEnergies, n_circuits: int = 346, master_seed: int = 0, total_time: float = 8.0):
        key = (trial, n_circuits, master_seed, total_time)
        if key not in cache:
            pairs = build_ensemble(h3plus_split, trial, n_circuits, master_seed, total_time, 0.1, HF_BITS, jobs=-1)
            cache[key] = [reduce_pair(p, profile) for p in pairs]
        return cache[key]

    return make
