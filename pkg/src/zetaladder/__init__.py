"""Numerical laboratory for critical-line second-moment ladders and the
alpha-sequence factorization identity."""

from .errors import (CalibrationError, DegenerateConfigurationError,
                     DomainError, PrecisionError, RangeError,
                     TableIntegrityError, ZetaLadderError)
from .factorization import (AlphaSequence, FactorConfig, FactorizationReport,
                            SpectrumEntry, build_alpha_sequence, factorize,
                            find_beta, find_eta, iterated_integrand,
                            lambda_factor, local_spectrum, multiform_G)
from .kernels import backend_name
from .ladder import (IterateDirection, LadderConfig, LadderPoint,
                     OmegaMode, PrimePiTable, calibrate_c0, euler_constant,
                     omega, phi1, phi1_inverse, phi1_iterates, pi_count,
                     ztilde_sq)
from .quadrature import (Interval, MomentReport, PanelChain, QuadConfig,
                         SecondMomentTable, adaptive_integrate,
                         admissible_h_range, cumulative_I, hl_moment,
                         integrate_z, integrate_z2, load_table, save_table,
                         z2_chain, z_chain)
from .special import (CriticalPoint, RSConfig, ThetaMode, em_zeta_half, hl_x,
                      riemann_siegel_z, tau, theta, theta_derivative, z_phase)

__version__ = "0.1.0"
