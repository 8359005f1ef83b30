"""Occupancy-measure analytics for finite absorbing Markov decision processes.

The package computes occupancy measures from the characteristic
equations, certifies (uniform) absorption, analyzes faces of the
occupancy polytope and their parallel invariant subspaces, builds finite
mixtures of deterministic policies of minimal order for any achievable
performance vector, and cross-checks everything against a seeded Monte
Carlo simulator. See the README for the file formats and the CLI.
"""

from .errors import (CapExceededError, InfeasibleError, NotAbsorbingError,
                     NumericError, OcclabError, StructuralError)
from .model import (DeterministicPolicy, FiniteMdp, Numerics, PairIndex,
                    ValidationReport, Violation, convert_mode,
                    default_selector, load_model, model_from_dict,
                    model_to_dict, save_model, validate)
from .absorption import (AbsorptionCertificate, EndComponent, TailBound,
                         absorption_certificate, expected_hitting_time_bound,
                         max_end_components, max_expected_hitting_time,
                         uniform_tail_bound)
from .occupancy import (OccupancyMeasure, StationaryPolicy,
                        characteristic_residual, flatten_chattering,
                        invariance_residual, occupancy_of_chattering,
                        occupancy_of_mixture, occupancy_of_stationary,
                        performance, policy_from_measure)
from .geometry import (FaceDescriptor, SignedInvariantVector,
                       affine_hull_membership, constrained_face_dims,
                       describe_face, enumerate_vertices, face_membership,
                       face_vertices, parallel_subspace_basis, rai_membership)
from .mixtures import (ChatteringKernel, MinimalOrderResult, MixturePolicy,
                       all_deterministic_policies, brute_force_min_order,
                       caratheodory_reduce, decompose_measure,
                       decompose_performance, lissage, minimal_order,
                       occupancy_of_policy)
from .simulate import (EpisodeRecord, SimEstimate, TailCurve, estimate,
                       kernel_name, rollout, tail_curve)

__version__ = "0.1.0"
