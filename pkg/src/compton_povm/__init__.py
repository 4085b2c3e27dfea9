"""POVM description of Compton polarimetry for annihilation-photon Bell tests."""
import json
from importlib import resources

from ._accel import BACKEND
from .bell import (
    BellSettings,
    BipartiteState,
    bell_test_angles,
    chsh,
    chsh_closed_form,
    chsh_scan,
    expectation,
    joint_probability,
    r_ratio,
    standard_states,
    violation_threshold,
)
from .chain import (
    ChainBlockSummary,
    ScatterChainSpec,
    chain_mueller,
    coplanar_beta,
    coplanar_summary,
    nfold_cross_section,
    povm_normalizer,
    total_cross_section,
)
from .kinematics import (
    alpha_beta,
    klein_nishina_density,
    rotation_matrix,
    scattered_energy,
    transition_matrix,
)
from .optimize import ConvergenceError, OptimizationConfig, OptimumRecord, optimize_beta, optimum_table
from .polarization import BlochAngles, bloch_state, density_to_stokes, stokes_to_density
from .povm import (
    FilteredPair,
    PovmElement,
    fidelity_to_projector,
    filtered_pair,
    helstrom_distinguishability,
    mub_witness_I2,
    povm_from_probes,
    qsd_success,
    trace_distance_to_projector,
    unfiltered_povm,
)

__version__ = "0.1.0"


def load_expectations():
    """Reference tables and tolerances shipped with the package."""
    text = resources.files(__name__).joinpath("data/expectations.json").read_text()
    return json.loads(text)
