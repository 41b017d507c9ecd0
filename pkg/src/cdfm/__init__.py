"""Community dynamic factor models: simulation, PCA estimation, k-means
community detection, SigClust selection of K and restricted-normal fits."""

from .errors import CdfmError, NumericalError, ValidationError
from .mixtures import (GeneralizedChiSq, MixingKind, MixingSpec, disc_probability,
                       gchisq_cdf, restricted_normal_logpdf, sample_mixing)
from .model import (CdfmConfig, CdfmDraw, IidGaussian, Membership, Var1, draw_loadings,
                    draw_membership, expected_block_matrix, population_covariance,
                    simulate_factors, simulate_series)
from .estimation import (AlignedTruth, PcaEstimate, align_truth, loading_errors, pca_estimate,
                         pca_from_series, sample_correlation, sample_covariance)
from .clustering import (ClusteringResult, InitQualityReport, SeparationStats, init_quality,
                         kmeans, kmeans_pp_init, lloyd, misclustering_rate, separation_stats,
                         theorem_bound)
from .sigclust import choose_k, cluster_index, sigclust_test
from .fitting import FitResult, fit_communities, fit_mle, fit_nce
from .netvar import SbmVarAveraged, WsbmVarConfig, cdfm_rewrite, sample_wsbm, simulate_wsbm_var

__version__ = "0.1.0"
