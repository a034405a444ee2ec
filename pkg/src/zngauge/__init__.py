"""Z_n lattice gauge theory: cell complexes, forms, sampling, vortices and oracles."""

from .lattice_complex import Box, Chain, DomainError, OrientedCell
from .chains_forms import Form, PreconditionError
from .loops_surfaces import GeneralizedLoop, build_surface, rectangle_loop, validate_loop
from .zn_model import Representation, constants_bundle, lambda_, theta
from .gibbs_sampler import BoxLattice, SamplerConfig, SpinConfiguration, heat_bath_sweep, run_chain
from .vortex_analysis import Vortex, decompose, enumerate_irreducible
from .harness_oracle import OracleSpec, VerificationReport, exact_expectation, run_suite

__version__ = "0.1.0"

__all__ = [
    "Box", "Chain", "DomainError", "OrientedCell", "Form", "PreconditionError",
    "GeneralizedLoop", "build_surface", "rectangle_loop", "validate_loop",
    "Representation", "constants_bundle", "lambda_", "theta",
    "BoxLattice", "SamplerConfig", "SpinConfiguration", "heat_bath_sweep", "run_chain",
    "Vortex", "decompose", "enumerate_irreducible",
    "OracleSpec", "VerificationReport", "exact_expectation", "run_suite",
]
