"""Copula-based stationary Markov chains on [0, 1]: construction, mixing
coefficients, closed-form bounds, simulation and ergodicity certificates."""

from .archimedean import (Generator, boundary_mass, example2_generator, example3_generator,
                          h_max, make_archimedean, standardize, theorem4_critical_parameter,
                          theorem4_integral)
from .bounds import (BoundReport, dmr_sandwich, envelope_bound, envelope_extract, table2_bound,
                     theorem3_bound)
from .core import (AtomicMap, CopulaModel, ValidationReport, comonotone, conditional_cdf,
                   copula_cdf, fold, n_step, reconstruct_cdf, validate_copula)
from .ergodicity import (DriftSpec, MinorizationCertificate, drift_check, frechet_drift_spec,
                         minorization_check)
from .errors import (BracketError, CopulaError, InfeasibleEnvelopeError, InputError,
                     NotApplicableError, NumericError, ParameterError, SingularCopulaError,
                     UnsupportedFeatureError)
from .families import (FAMILIES, FrechetParams, MardiaParams, MHKernelParams, TableDensitySpec,
                       build, frechet_n_step_params, independence, make_fgm, make_frechet,
                       make_mardia, make_mh_copula, make_table_density)
from .grid import Grid, make_grid
from .simulate import (DecaySeries, Trajectory, empirical_corr_decay, sample_chain,
                       sample_mh_kernel)
from .spectral import (MixingReport, SpectralDecomposition, TransferOperator, assemble_operator,
                       beta_n, claim1_basis_bound, mixing_report, no_mixing_witness, phi_n,
                       rho1_estimate, spectral_decomposition)

__version__ = "0.1.0"
