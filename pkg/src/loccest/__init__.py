"""Remote estimation of non-linear functionals of shared bipartite states.

Dense density-operator simulation of the two-lab interferometric network
that measures ``tr rho^k``, spectrum reconstruction from those moments,
structural physical approximations with their LOCC decomposition, and the
entanglement and channel tests built on them.
"""

from .errors import (InconsistentMomentsError, NotBellDiagonalError, NotMaximallyCorrelatedError,
                     NotPositiveError, ProtocolError, ValidationError)
from .linalg import eigvalsh, hermitian_eigs, tensor_product, trace_norm
from .states import (DensityOperator, max_entangled_state, maximally_mixed, moment_direct,
                     partial_trace, partial_transpose, pure, random_density, singlet, tensor,
                     werner)
from .permutations import ShiftOperator, controlled_u, shift_operator, swap
from .interferometer import (ProbTable, ShotRecord, VisibilityReading, estimate_from_counts,
                             joint_probs, local_visibilities, moment_from_probs, sample_shots,
                             visibility)
from .spectrum import (Interferometric, MomentVector, SpectrumEstimate, elementary_to_spectrum,
                       entropy, moments_to_elementary, purity, spectrum_from_moments,
                       spectrum_from_state)
from .maps import (LoccDecomposition, QuantumMap, SpaResult, apply_map, choi_of, depolarizing,
                   from_kraus, identity_map, is_cp, kraus_of, locc_spa, min_choi_eig, negation,
                   spa, transposition)
from .applications import (ChannelReport, EntanglementVerdict, bell_diagonal_spectrum_measures,
                           capacity_indicator, detect_entanglement, jamiolkowski_state,
                           maxcorr_distillable, negativity)
from .transport import PartyMessage, in_memory, line_protocol
from .protocol import ProtocolTranscript, run_protocol, run_spectrum_protocol

__version__ = "0.1.0"
