"""Growth rates of 1-D time-dependent parabolic problems versus their time averages."""

from .grid import Grid1D, build_grid, inner_product, norm, normalize
from .coefficients import (AveragedCoefficients, Coefficients, Harmonic, Signal,
                           TorusFlow, constant_signal, ensemble_average,
                           profile, reaction_at, robin_at, sample_phase,
                           window_average)
from .operators import (MMatrixReport, TridiagonalOperator, apply, assemble,
                        check_m_matrix, rayleigh_rate, rayleigh_rate_by_parts)
from .evolution import (CRANK_NICOLSON, IMPLICIT_EULER, EvolutionState,
                        StepperConfig, adjoint_step, evolve, step,
                        step_rate_from_stretch)
from .spectrum import (LyapunovEstimate, PrincipalTrace, SeparationEstimate,
                       SpectrumEstimate, estimate_lyapunov_random,
                       estimate_separation, estimate_spectrum_interval,
                       floquet_oracle, track_principal)
from .averaging import (AveragedProblem, ComparisonReport, build_averaged,
                        compare, geometric_mean_profile, principal_eigenpair,
                        supersolution_residual, weighted_cs_gap)

__version__ = "0.1.0"
