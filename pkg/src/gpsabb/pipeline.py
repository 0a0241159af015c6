"""End-to-end analysis: GPS, common support, then ABB, matching or IPW."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from ._rng import seed_sequence
from .abb import abb_impute, pool
from .balance import BalanceReport, max2sb, pooled_sd, weighted_cluster_balance
from .cluster import cluster_logit_gps
from .estimands import BINARY_ONLY, estimate_contrast
from .gps import GpsMatrix, GpsModel, fit_gps, predict_gps
from .io import ContrastRecord, Dataset, EstimateReport, RunConfig
from .ipw import att_weights, ipw_att
from .matching import match_estimate, matched_weights, nn_match
from .support import SupportError, SupportRegion, common_support

log = logging.getLogger(__name__)


@dataclass
class AnalysisResult:
    report: EstimateReport
    model: GpsModel
    gps: GpsMatrix  # on the analysed (eligible) units
    support: SupportRegion
    data: Dataset  # eligible units only
    reference: int
    balance: list = field(default_factory=list)
    design: object = None  # ClusterAssignment or MatchSet
    imputations: object = None  # ImputedPotentialOutcomes for ABB


def default_reference(data: Dataset) -> int:
    """Largest treatment group (lowest label on ties)."""
    return int(np.argmax(data.group_sizes())) + 1


def check_estimands(data: Dataset, estimands) -> None:
    for e in estimands:
        if data.outcome_kind == "ordinal" and e in BINARY_ONLY:
            raise ValueError(f"estimand {e!r} needs a binary outcome")


def contrasts(Z: int):
    return list(itertools.combinations(range(1, Z + 1), 2))


def fit_and_trim(data: Dataset, ridge: float = 0.0, refit_after_trim: bool = False):
    """Fit the GPS, restrict to common support; returns (model, gps, support, trimmed data)."""
    model = fit_gps(data, ridge=ridge)
    gps = predict_gps(model, data)
    region = common_support(gps, data.W, data.Z)
    kept = np.bincount(data.W[region.eligible], minlength=data.Z + 1)[1:]
    missing = [w for w, c in enumerate(kept, start=1) if c == 0]
    if missing:
        raise SupportError(f"no eligible unit in treatment group(s) {missing}")
    trimmed = data.subset(region.eligible)
    if refit_after_trim:
        model = fit_gps(trimmed, ridge=ridge)
        gps = predict_gps(model, trimmed)
    else:
        gps = gps.subset(region.eligible)
    return model, gps, region, trimmed


def abb_contrasts(data: Dataset, gps: GpsMatrix, t: int, Q: int, M: int, seed, estimands,
                  rubin_correction: bool = False):
    """ABB estimates for every contrast.

    Returns ``({(j, k, estimand): PooledEstimate}, clusters, imputations)``.
    """
    clusters = cluster_logit_gps(gps, data.W, Q, seed=seed_sequence(seed, 0), Z=data.Z)
    imp = abb_impute(data.Y, data.W, clusters.assign, t, M, seed=seed_sequence(seed, 1), Z=data.Z)
    out = {}
    for j, k in contrasts(data.Z):
        for e in estimands:
            per = [estimate_contrast(imp.Y[m], j, k, e) for m in range(M)]
            pe = pool([(c.tau_hat, c.v_hat) for c in per], rubin_correction)
            pe.n_corrected = sum(c.corrected for c in per)
            out[(j, k, e)] = pe
    return out, clusters, imp


def run_analysis(data: Dataset, config: RunConfig) -> AnalysisResult:
    """Run the configured method and collect a report with balance diagnostics."""
    check_estimands(data, config.estimands)
    t = config.reference or default_reference(data)
    if not 1 <= t <= data.Z:
        raise ValueError(f"reference treatment {t} outside 1..{data.Z}")
    model, gps, region, trimmed = fit_and_trim(data, config.ridge, config.refit_after_trim)
    log.info("seed=%s n=%d n_excluded=%d reference=%s", config.seed, data.n,
             region.n_excluded, data.treatment_labels[t - 1])
    if trimmed.group_sizes()[t - 1] < 2:
        raise ValueError("fewer than two eligible reference units")

    scale = pooled_sd(trimmed.X)
    names = trimmed.covariate_names
    balance = [max2sb(trimmed.X, trimmed.W, scale, context="raw", covariate_names=names)]
    labels = [str(l) for l in data.treatment_labels]
    records = []
    meta_extra = {}
    design = None
    imputations = None
    corrections = {}

    def record(j, k, e, point, se, Q=None, M=None):
        records.append(ContrastRecord(j, k, e, point, se, config.method, Q, M, config.seed,
                                      labels[j - 1], labels[k - 1]))

    if config.method == "abb":
        est, clusters, imp = abb_contrasts(trimmed, gps, t, config.Q, config.M, config.seed,
                                           config.estimands, config.rubin_correction)
        for (j, k, e), pe in est.items():
            record(j, k, e, pe.point, pe.se, clusters.Q_eff, config.M)
            if pe.n_corrected:
                corrections[f"{j}-{k}-{e}"] = pe.n_corrected
        balance.append(weighted_cluster_balance(trimmed.X, trimmed.W, clusters.assign, scale,
                                                covariate_names=names))
        meta_extra["Q_requested"] = config.Q
        meta_extra["Q_eff"] = clusters.Q_eff
        design = clusters
        imputations = imp
    elif config.method == "matching":
        ms = nn_match(trimmed.W, gps, t, config.L, config.distance, config.with_replacement,
                      Z=trimmed.Z)
        for j, k in contrasts(data.Z):
            for e in config.estimands:
                c = match_estimate(ms, trimmed.Y, j, k, e, Z=trimmed.Z)
                record(j, k, e, c.tau_hat, float(np.sqrt(c.v_hat)))
                if c.corrected:
                    corrections[f"{j}-{k}-{e}"] = 1
        balance.append(max2sb(trimmed.X, trimmed.W, scale, matched_weights(ms, trimmed.n),
                              context="matched", covariate_names=names))
        design = ms
    else:
        for j, k in contrasts(data.Z):
            for e in config.estimands:
                c = ipw_att(trimmed.Y, trimmed.W, gps, t, j, k, e, config.ipw_truncation)
                record(j, k, e, c.tau_hat, float(np.sqrt(c.v_hat)))
        wts = att_weights(gps, trimmed.W, t, config.ipw_truncation)
        balance.append(max2sb(trimmed.X, trimmed.W, scale, wts, context="weighted",
                              covariate_names=names))

    metadata = {
        "version": __version__,
        "config": config.to_dict(),
        "reference": t,
        "reference_label": labels[t - 1],
        "treatment_labels": {str(i + 1): l for i, l in enumerate(labels)},
        "n": data.n,
        "n_excluded": region.n_excluded,
        "group_sizes_eligible": trimmed.group_sizes().tolist(),
        "gps_converged": model.converged,
        "gps_iterations": model.iterations,
        "balance_definition": "difference in group means / pooled all-group SD of the eligible sample",
        "maxmax2sb": {b.context: b.maxmax2sb for b in balance},
        "ci_multiplier": 1.96,
        "continuity_corrections": corrections,
        **meta_extra,
    }
    return AnalysisResult(
        report=EstimateReport(records, metadata), model=model, gps=gps, support=region,
        data=trimmed, reference=t, balance=balance, design=design,
        imputations=imputations,
    )
