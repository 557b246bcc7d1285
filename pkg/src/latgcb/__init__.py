"""Transport and concentration quantities for finite lattice random fields."""

from .errors import CapacityError, DomainError, SolverError
from .exponents import INF, as_exponent, conjugate, lp_norm
from .lattice import (ConfigSpace, LocalFunction, OscillationVector, Volume, block_average,
                      block_sum, osc_norm, oscillation, oscillations, translate, young_bound)
from .measures import (EntropyValue, Measure, ProcessSpec, entropy_variational_gap,
                       legendre_gap, log_mgf, marginal, realize, relative_entropy, tilt)
from .transport import (Coupling, DisagreementMarginals, OTResult, TransportCertificate,
                        coupling_cost, extend_coupling, hamming_w1, marton_bound, q_p, solve_ot,
                        wasserstein_p_hamming)
from .ipm import (AlphaWeights, DualityReport, IpmCertificate, WitnessFunction, d_p,
                  d_p_fixed_alpha, dep_bound_check, duality_gap)

__version__ = "0.1.0"
