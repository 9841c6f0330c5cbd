"""Graph-Laplacian manifold learning with arbitrary norms.

Library layout:

- ``norms``     : norm abstraction (Euclidean, weighted l1, WEMD-composite)
- ``wavelets``  : periodized 3-D DWT, EMD weighting, sparsification
- ``laplacian`` : pairwise distances, Gaussian affinities, graph Laplacians
- ``spectral``  : symmetric eigensolver and eigenmaps embedding
- ``limit_op``  : limiting differential operator (tilt, slice moments)
- ``fd_eigen``  : periodic finite-difference eigensolver for the circle
- ``dataset``   : synthetic circle samples and rotor-volume family
- ``cli``       : experiment frontend (``normlap`` console script)
"""

__version__ = "0.1.0"

from .norms import NormSpec, euclidean, norm_eval, norm_grad, unit_ball_contains, weighted_l1, wemd_composite
from .wavelets import Volume, WaveletCoeffs, dwt3, idwt3, wemd_weight, hard_threshold, select_threshold, sparse_l1_distance, wemd_distance, wemd_vector
from .laplacian import DistanceMatrix, GraphLaplacian, ScalingSchedule, apply_pointcloud_laplacian, gaussian_affinity, graph_laplacian, pairwise_distances, scaling_schedule
from .spectral import Embedding, circular_score, eig_symmetric, embed
from .limit_op import (
    LimitOperatorCoeffs,
    TangentData,
    apply_limit_operator,
    circle_limit_operator,
    circle_tangent_data,
    compute_limit_coeffs,
    first_order_coeff,
    nonuniform_correction,
    second_moment,
    tilt_c1,
    tilt_circle_weighted_l1,
    tilt_slice,
)
from .fd_eigen import FDOperator, assemble_fd_operator, circle_weighted_l1_operator, smallest_magnitude_eigs
from .dataset import RotorConfig, make_dataset, render_rotor_volume, sample_angles, sample_circle
