"""Monte Carlo study of the estimators on skew-t covariates.

Three treatment groups of sizes ``n`` receive 18 skew-t covariates whose
location is shifted by ``b`` on the coordinates belonging to the group.
Potential outcomes come from a binary (logistic or probit) or a
proportional-odds ordinal response surface. Each replication fits the GPS,
trims to common support and runs every requested method; per-replication
truths are the realized-outcome ATTs of the eligible reference units.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from ._rng import generator, seed_sequence
from .balance import max2sb, pooled_sd, weighted_cluster_balance
from .estimands import ESTIMAND_FUNCTIONS
from .io import CI_MULTIPLIER, Dataset
from .ipw import ipw_att
from .matching import match_estimate, matched_weights, nn_match
from .pipeline import abb_contrasts, fit_and_trim

log = logging.getLogger(__name__)

B_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)
ETA_LEVELS = (-3.5, 0.0, 3.5)
GAMMA_LEVELS = (-1, 1)
LINKS = ("logistic", "probit")
DEFAULT_BETA = (2.0, 4.0, 6.0) + (1.0,) * 15
DEFAULT_ALPHAS = (1.0, 0.05, -0.05, -1.0)
MAX_SKIP_FRACTION = 0.02

PRESETS = {
    "desk": {"n": (300, 600, 1200), "R": 100},
    "full": {"n": (1200, 2400, 4800), "R": 200},
}


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimDesign:
    b: float = 0.0
    eta: float = 0.0
    gamma: int = 1
    link: str = "logistic"
    outcome_kind: str = "binary"
    n: tuple = PRESETS["full"]["n"]
    P: int = 18
    df: float = 7.0
    beta: tuple = DEFAULT_BETA
    alphas: tuple = DEFAULT_ALPHAS

    def __post_init__(self):
        if self.link not in LINKS:
            raise ValueError(f"link must be one of {LINKS}")
        if self.gamma not in GAMMA_LEVELS:
            raise ValueError("gamma must be -1 or 1")
        if self.outcome_kind not in ("binary", "ordinal"):
            raise ValueError("outcome_kind must be 'binary' or 'ordinal'")
        if len(self.beta) != self.P:
            raise ValueError(f"beta has length {len(self.beta)}, expected P={self.P}")
        if self.P % len(self.n):
            raise ValueError("P must be a multiple of the number of groups")

    @property
    def Z(self) -> int:
        return len(self.n)

    @classmethod
    def preset(cls, scale: str = "desk", **kw) -> "SimDesign":
        return cls(n=PRESETS[scale]["n"], **kw)


def location(design: SimDesign, w: int) -> np.ndarray:
    """Location vector of group ``w``: ``b`` on coordinates ``c`` with ``c % Z == w - 1``."""
    bw = np.zeros(design.Z)
    bw[w - 1] = design.b
    return np.tile(bw, design.P // design.Z)


def skew_t(n: int, P: int, eta: float, df: float, rng: np.random.Generator) -> np.ndarray:
    """Skew-t draws with identity scale and slant ``eta`` on every coordinate.

    Each coordinate is a skew-normal ``delta |U0| + sqrt(1 - delta^2) U1``
    with ``delta = eta / sqrt(1 + eta^2)``; each row is divided by one shared
    ``sqrt(chi2_df / df)``.
    """
    delta = eta / np.sqrt(1.0 + eta * eta)
    u0 = np.abs(rng.standard_normal((n, P)))
    u1 = rng.standard_normal((n, P))
    sn = delta * u0 + np.sqrt(1.0 - delta * delta) * u1
    v = rng.chisquare(df, size=(n, 1)) / df
    return sn / np.sqrt(v)


def gen_covariates(design: SimDesign, w: int, rng, n: int | None = None) -> np.ndarray:
    rng = rng if isinstance(rng, np.random.Generator) else generator(rng)
    n = design.n[w - 1] if n is None else n
    return location(design, w) + skew_t(n, design.P, design.eta, design.df, rng)


def _cdf(link: str, z):
    return expit(z) if link == "logistic" else norm.cdf(z)


def linear_predictor(X, design: SimDesign) -> np.ndarray:
    return np.asarray(X, dtype=float) @ np.asarray(design.beta, dtype=float)


def success_probabilities(X, design: SimDesign) -> np.ndarray:
    """``(n, Z)`` success probabilities; group 1 on ``X beta``, others on ``gamma X beta``."""
    lp = linear_predictor(X, design)
    p = np.empty((lp.size, design.Z))
    p[:, 0] = _cdf(design.link, lp)
    p[:, 1:] = _cdf(design.link, design.gamma * lp)[:, None]
    return p


def gen_binary_outcomes(X, design: SimDesign, rng) -> np.ndarray:
    rng = rng if isinstance(rng, np.random.Generator) else generator(rng)
    p = success_probabilities(X, design)
    return (rng.random(p.shape) < p).astype(int)


def ordinal_probabilities(lp, alphas=DEFAULT_ALPHAS) -> np.ndarray:
    """Category probabilities of the proportional-odds model.

    ``P(Y <= j) = expit(alpha_j + lp)``; cutpoints are sorted ascending so the
    cumulative probabilities increase in ``j``.
    """
    a = np.sort(np.asarray(alphas, dtype=float))
    lp = np.asarray(lp, dtype=float)
    cum = expit(a[None, :] + lp[:, None])
    if np.any(np.diff(cum, axis=1) < 0):
        raise ValueError("cumulative probabilities are not monotone")
    cum = np.column_stack([np.zeros(lp.size), cum, np.ones(lp.size)])
    return np.diff(cum, axis=1)


def gen_ordinal_outcomes(X, design: SimDesign, rng) -> np.ndarray:
    """Levels ``1..len(alphas) + 1``; the same surface for every treatment."""
    rng = rng if isinstance(rng, np.random.Generator) else generator(rng)
    lp = linear_predictor(X, design)
    cum = np.cumsum(ordinal_probabilities(lp, design.alphas), axis=1)[:, :-1]
    u = rng.random((lp.size, design.Z))
    return 1 + (u[:, :, None] > cum[:, None, :]).sum(axis=2)


def expected_outcomes(X, design: SimDesign):
    """Conditional mean and variance of every potential outcome, each ``(n, Z)``."""
    if design.outcome_kind == "binary":
        p = success_probabilities(X, design)
        return p, p * (1 - p)
    probs = ordinal_probabilities(linear_predictor(X, design), design.alphas)
    levels = np.arange(1, probs.shape[1] + 1)
    mean = probs @ levels
    var = probs @ levels**2 - mean**2
    return np.repeat(mean[:, None], design.Z, 1), np.repeat(var[:, None], design.Z, 1)


def generate(design: SimDesign, seed, rep: int = 0):
    """One simulated dataset and its full table of potential outcomes."""
    X = np.vstack([
        gen_covariates(design, w, generator(seed, rep, 0, w)) for w in range(1, design.Z + 1)
    ])
    W = np.repeat(np.arange(1, design.Z + 1), design.n)
    rng = generator(seed, rep, 1)
    if design.outcome_kind == "binary":
        Ypot, levels = gen_binary_outcomes(X, design, rng), 2
    else:
        Ypot, levels = gen_ordinal_outcomes(X, design, rng), len(design.alphas) + 1
    Y = Ypot[np.arange(W.size), W - 1]
    return Dataset(X=X, W=W, Y=Y, outcome_kind=design.outcome_kind, levels=levels), Ypot


def true_att(Ypot, W, eligible, t: int, j: int, k: int, estimand: str = "risk_difference") -> float:
    """Realized ATT of the eligible reference units (same formula as the estimator)."""
    W = np.asarray(W, dtype=int)
    ref = np.asarray(eligible, dtype=bool) & (W == t)
    if j == k:
        return 0.0
    return ESTIMAND_FUNCTIONS[estimand](Ypot[ref, j - 1], Ypot[ref, k - 1]).tau_hat


def parse_method(method: str):
    """``"abb:5"`` -> ``("abb", 5)``; ``"matching"`` -> ``("matching", None)``."""
    name, _, arg = method.partition(":")
    if name == "abb":
        return name, int(arg or 1)
    if name in ("matching", "ipw", "oracle"):
        return name, None
    raise ValueError(f"unknown method {method!r}")


@dataclass
class CellSettings:
    methods: tuple
    contrasts: tuple
    estimand: str
    t: int
    M: int
    L: int


def _replication(design: SimDesign, settings: CellSettings, seed, rep: int) -> dict:
    data, Ypot = generate(design, seed, rep)
    _, gps, region, trimmed = fit_and_trim(data)
    Y_el = Ypot[region.eligible]
    X_el = data.X[region.eligible]
    t = settings.t
    truth = {c: true_att(Y_el, trimmed.W, np.ones(trimmed.n, bool), t, *c, settings.estimand)
             for c in settings.contrasts}
    scale = pooled_sd(trimmed.X)
    out = {"truth": truth, "est": {}, "maxmax2sb": {}, "n_excluded": region.n_excluded}
    out["maxmax2sb"]["raw"] = max2sb(trimmed.X, trimmed.W, scale).maxmax2sb
    for method in settings.methods:
        name, Q = parse_method(method)
        res = {}
        if name == "abb":
            est, clusters, _ = abb_contrasts(trimmed, gps, t, Q, settings.M,
                                          seed_sequence(seed, rep, 2, Q), [settings.estimand])
            for c in settings.contrasts:
                j, k = c
                pe = est[(min(j, k), max(j, k), settings.estimand)]
                sign = 1.0 if j < k else -1.0
                res[c] = (sign * pe.point, pe.se)
            out["maxmax2sb"][method] = weighted_cluster_balance(
                trimmed.X, trimmed.W, clusters.assign, scale).maxmax2sb
        elif name == "matching":
            ms = nn_match(trimmed.W, gps, t, settings.L, Z=trimmed.Z)
            for c in settings.contrasts:
                ce = match_estimate(ms, trimmed.Y, *c, settings.estimand, Z=trimmed.Z)
                res[c] = (ce.tau_hat, float(np.sqrt(ce.v_hat)))
            out["maxmax2sb"][method] = max2sb(
                trimmed.X, trimmed.W, scale, matched_weights(ms, trimmed.n)).maxmax2sb
        elif name == "ipw":
            for c in settings.contrasts:
                ce = ipw_att(trimmed.Y, trimmed.W, gps, t, *c, settings.estimand)
                res[c] = (ce.tau_hat, float(np.sqrt(ce.v_hat)))
        else:
            # conditional-mean plug-in with its exact conditional SE
            mean, var = expected_outcomes(X_el, design)
            ref = trimmed.W == t
            n_t = ref.sum()
            for j, k in settings.contrasts:
                point = float((mean[ref, j - 1] - mean[ref, k - 1]).mean())
                se = float(np.sqrt((var[ref, j - 1] + var[ref, k - 1]).sum()) / n_t)
                res[(j, k)] = (point, se)
        out["est"][method] = res
    return out


@dataclass
class SimResult:
    design: SimDesign
    R: int
    rows: list  # dicts: method, contrast, coverage, mean_abs_bias, sd_abs_bias, median_se, n
    balance: dict  # method -> mean MaxMax2SB over replications
    truths: dict  # contrast -> array of per-replication truths
    skipped: list = field(default_factory=list)

    def row(self, method: str, contrast) -> dict:
        for r in self.rows:
            if r["method"] == method and r["contrast"] == tuple(contrast):
                return r
        raise KeyError((method, contrast))

    def coverage(self, method: str, contrast) -> float:
        return self.row(method, contrast)["coverage"]


def summarize(truth: np.ndarray, est: np.ndarray, se: np.ndarray) -> dict:
    bias = est - truth
    covered = np.abs(bias) <= CI_MULTIPLIER * se
    ab = np.abs(bias)
    return {
        "coverage": float(covered.mean()),
        "mean_abs_bias": float(ab.mean()),
        "sd_abs_bias": float(ab.std(ddof=1)) if ab.size > 1 else 0.0,
        "median_se": float(np.median(se)),
        "mean_bias": float(bias.mean()),
        "n": int(ab.size),
    }


def _run_one(args):
    design, settings, seed, rep = args
    try:
        return rep, _replication(design, settings, seed, rep), None
    except Exception as exc:  # counted and reported as a skipped replication
        return rep, None, f"{type(exc).__name__}: {exc}"


def run_cell(
    design: SimDesign,
    methods=("abb:1", "abb:3", "abb:5", "abb:7", "matching", "ipw"),
    R: int = 100,
    seed: int = 0,
    contrasts=((1, 2), (1, 3)),
    estimand: str | None = None,
    t: int = 1,
    M: int = 25,
    L: int = 1,
    n_jobs: int = 1,
) -> SimResult:
    """Replicate ``design`` ``R`` times and summarize every method and contrast.

    Replication ``r`` draws from substreams of ``(seed, r)``, so results are
    identical for any ``n_jobs``. Raises :class:`SimulationError` when 2% or
    more of the replications fail.
    """
    if estimand is None:
        estimand = "risk_difference" if design.outcome_kind == "binary" else "mean_difference"
    contrasts = tuple(tuple(c) for c in contrasts)
    settings = CellSettings(tuple(methods), contrasts, estimand, t, M, L)
    for m in settings.methods:
        parse_method(m)
    jobs = [(design, settings, seed, r) for r in range(R)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            results = list(ex.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    ok = [r[1] for r in results if r[1] is not None]
    skipped = [(r[0], r[2]) for r in results if r[1] is None]
    if skipped:
        log.warning("%d of %d replications failed; first: %s", len(skipped), R, skipped[0][1])
    if len(skipped) >= MAX_SKIP_FRACTION * R and skipped:
        raise SimulationError(f"{len(skipped)} of {R} replications failed: {skipped[0][1]}")

    truths = {c: np.array([o["truth"][c] for o in ok]) for c in contrasts}
    rows = []
    for m in settings.methods:
        for c in contrasts:
            est = np.array([o["est"][m][c][0] for o in ok])
            se = np.array([o["est"][m][c][1] for o in ok])
            rows.append({"method": m, "contrast": c, **summarize(truths[c], est, se)})
    keys = ok[0]["maxmax2sb"].keys() if ok else ()
    balance = {k: float(np.mean([o["maxmax2sb"][k] for o in ok])) for k in keys}
    return SimResult(design, R, rows, balance, truths, skipped)


def format_table(result: SimResult) -> str:
    """Coverage, mean absolute bias (SD) and median SE per method and contrast."""
    contrasts = []
    for r in result.rows:
        if r["contrast"] not in contrasts:
            contrasts.append(r["contrast"])
    head = f"{'b':>5} {'Method':<9}"
    for j, k in contrasts:
        head += f" | {j} vs. {k}: {'Coverage':>8} {'Mean absolute bias (SD)':>24} {'Std. Error':>10}"
    lines = [head]
    methods = list(dict.fromkeys(r["method"] for r in result.rows))
    for m in methods:
        line = f"{result.design.b:5.2f} {m:<9}"
        for c in contrasts:
            r = result.row(m, c)
            bias = f"{r['mean_abs_bias']:.4f} ({r['sd_abs_bias']:.4f})"
            line += f" | {'':>9} {r['coverage']:8.2f} {bias:>24} {r['median_se']:10.4f}"
        lines.append(line)
    return "\n".join(lines)


def scaled(design: SimDesign, scale: str) -> SimDesign:
    return replace(design, n=PRESETS[scale]["n"])
