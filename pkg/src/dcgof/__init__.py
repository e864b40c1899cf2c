"""Adjusted chi-square goodness-of-fit tests for degree-corrected block models.

Library layout: ``graphs`` (sparse symmetric adjacency, ingestion, degree
tools), ``models`` (block-model and latent-variable samplers), ``clustering``
(regularized spectral clustering), ``chisq`` (the grouped adjusted chi-square
core), ``network_tests`` (the full and subsampled network tests plus
bootstrap debiasing), ``baselines`` (likelihood, BIC, adjusted spectral),
``selection`` (sequential choice of K and community profiles), ``report``
(CSV/SVG artifacts), ``cli`` (the ``dcgof`` command).
"""

__version__ = "0.1.0"

from .baselines import (BlockEstimates, as_statistic, bic_score,
                        dcsbm_loglik, fit_block_estimates, lr_statistic)
from .chisq import (AcResult, CompressedCounts, ac_adjust, ac_test,
                    chi_square_groups, chi_square_null_reference,
                    group_omega, harmonic_mean)
from .clustering import (LabelVector, SpectralClusterer, SpectralEmbedding,
                         cluster, kmeans, label_agreement, spectral_embed)
from .exceptions import DataError, DcgofError, NumericalError
from .graphs import (DegreeSummary, NodeSplit, SparseGraph, degree_summary,
                     load_graph, nearest_rank_quantile,
                     reduce_by_degree_quantile, random_split)
from .models import (DclvmParams, DcsbmParams, expected_average_degree,
                     make_connectivity, sample_dclvm, sample_dcsbm,
                     sample_labels, sample_pareto_theta,
                     scale_to_expected_degree, simulate_from_config)
from .network_tests import (RhoHat, TestOutcome, bootstrap_debias,
                            column_compress, confusion_matrix, nac_full,
                            population_rho, rho_hat, snac,
                            snac_statistic_from_labels)
from .seeds import derive_seed, rng_from
from .selection import (ProfileCurve, ProfilePoint, SelectionResult,
                        build_profile, find_elbow_dip, profile_points,
                        select_k, select_k_bic)
from .smoothing import SmoothingSpline, fit_smoothing_spline
