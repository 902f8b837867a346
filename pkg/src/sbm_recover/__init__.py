"""Two-stage power method / generalized power method community recovery for
the binary symmetric stochastic block model."""

from .baselines import mgd_recover, spectral_clustering
from .gpm import RecoveryResult, gpm_run, gpm_step, sign_map, two_stage_recover
from .metrics import TrialRecord, is_exact, misclassification, rank_one_distance
from .sbm import (GroundTruth, SbmGraph, SbmParameterError, SbmParams, generate, generate_raw,
                  load_graph, nnz, save_graph)
from .spectral import (PmReport, PowerMethodBreakdown, RegularizedOperator, compute_rho,
                       default_pm_iters, matvec, power_method, sample_unit_sphere)

__version__ = "0.1.0"
