"""Frustrated J1-J2 Heisenberg model on a simulated gate-based quantum computer."""
from .lattice import BondCounting, CouplingConfig, LatticeSpec, SpinConvention, build_bonds, build_hamiltonian
from .pauli import PauliString, PauliSum, apply, expectation, power
from .oracle import GroundSolution, ground_state
from .observables import Calibration, ObservableSet, evaluate_all, observable_operator
from .simulator import Circuit, NoiseModel, estimate_expectation, fold, run
from .vqe import AnsatzSpec, ProductAngles, build_ansatz, run_vqe, warm_start
from .mitigation import CrZneCorrector, ZneExtrapolator, crzne_fit, zne_extrapolate
from .krylov import NormalizedHamiltonian, assemble, build_walk, qlanczos, solve_gevp
from .vff import VffModel, fast_forward, train_vff
from .moments import cumulants, hamiltonian_moments, infimum_estimate, observable_via_lambda

__version__ = "0.1.0"
