"""Frequency-domain stability certification for reset control systems.

Certifies global uniform asymptotic stability and the bounded-input
bounded-state property of closed loops containing a resetting element
(Clegg integrator, first- or second-order generalized reset elements)
directly from frequency-response data, and cross-validates the verdicts
with an SPR oracle and a hybrid time-domain simulator.
"""

from . import elements, errors, frf, gsore, hbeta, lti, nsv, sim
from .elements import ResetElement, base_tf, clegg, gfore, gsore as gsore_element, pci, realization, reset_matrix_condition, sosre
from .frf import FrfTable, LoopSamples, compose_loop, interpolate, load_frf, save_frf
from .gsore import CertificateResult, GsoreProblem, certify, f1, f2, gamma_factor
from .hbeta import HbetaCandidate, search_candidate_scalar, spr_check_matrix, spr_check_scalar
from .lti import ClosedLoop, RationalTF, StateSpace, assemble_closed_loop, base_linear_stability, evaluate, minimality_check, relative_degree, series, tf, to_state_space
from .nsv import NsvSample, TypeVerdict, certify_first_order, classify, compute_nsv
from .sim import SimConfig, SimTrace, realization_equivalence, simulate, step_response

__version__ = "0.1.0"
