"""Average treatment effects on the treated among several nominal treatments.

Generalized propensity scores from a multinomial logit, rectangular common
support, and three estimators: approximate Bayesian bootstrap imputation
within k-means clusters of the logit GPS, nearest-neighbour matching, and
inverse probability weighting.
"""

__version__ = "0.1.0"

from .io import Dataset, RunConfig, EstimateReport, load_dataset, save_dataset, write_report
from .gps import GpsModel, GpsMatrix, fit_gps, predict_gps
from .support import SupportRegion, common_support
from .cluster import ClusterAssignment, cluster_logit_gps, within_cluster_counts
from .abb import ImputedPotentialOutcomes, PooledEstimate, abb_impute, pool
from .estimands import (
    ContrastEstimate,
    att_log_odds_ratio,
    att_log_risk_ratio,
    att_ordinal_mean_difference,
    att_risk_difference,
)
from .matching import MatchSet, distance, match_estimate, nn_match
from .ipw import ipw_att
from .balance import BalanceReport, max2sb, standardized_bias, weighted_cluster_balance
from .pipeline import run_analysis

__all__ = [
    "Dataset", "RunConfig", "EstimateReport", "load_dataset", "save_dataset", "write_report",
    "GpsModel", "GpsMatrix", "fit_gps", "predict_gps",
    "SupportRegion", "common_support",
    "ClusterAssignment", "cluster_logit_gps", "within_cluster_counts",
    "ImputedPotentialOutcomes", "PooledEstimate", "abb_impute", "pool",
    "ContrastEstimate", "att_risk_difference", "att_log_odds_ratio", "att_log_risk_ratio",
    "att_ordinal_mean_difference",
    "MatchSet", "distance", "nn_match", "match_estimate",
    "ipw_att",
    "BalanceReport", "max2sb", "standardized_bias", "weighted_cluster_balance",
    "run_analysis",
]
