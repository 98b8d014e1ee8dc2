"""Statistical validation of the channel abstraction.

Four falsifiable properties back the entropy estimator: the hidden levels
form a stationary memoryless Markov chain, the eavesdropper's observation
law is stationary, observations are conditionally independent, and the
per-experiment conditional min-entropy is stably distributed.  This module
implements the corresponding checks: lagged Pearson correlation with
t-test significance, two-sample Kolmogorov-Smirnov tests on randomized
partitions, downsampling to remove short-range dependence, and the
per-slice entropy spread.

RSSI data is heavily tied; the K-S statistic is taken over the merged
discrete support, which makes the asymptotic p-values conservative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import stdtr

from . import hmm
from .traces import MeasurementTrace, assert_aligned


@dataclass(frozen=True)
class CorrelationReport:
    """Pearson r of a series against its lagged copies, with significance."""

    lags: list
    r: list
    significant: list
    alpha: float

    def to_rows(self):
        return list(zip(self.lags, self.r, self.significant))

    def to_csv(self) -> str:
        lines = ["lag,r,significant"]
        for lag, r, sig in self.to_rows():
            lines.append(f"{lag},{r:.6f},{int(sig)}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class KsReport:
    statistic: float
    p_value: float
    reject: bool
    alpha: float

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value,
                "reject": self.reject, "alpha": self.alpha}


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the full assumption suite on one aligned trace pair."""

    markov_lag_profile: CorrelationReport
    identical_distribution_rejection_rate: float
    stationary_transition_rejection_rate: float
    stationary_observation_rejection_rate: float
    stable_entropy: hmm.EntropyEstimate
    alpha: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "markov_lag_profile": {
                "lags": self.markov_lag_profile.lags,
                "r": self.markov_lag_profile.r,
                "significant": self.markov_lag_profile.significant,
            },
            "identical_distribution_rejection_rate":
                self.identical_distribution_rejection_rate,
            "stationary_transition_rejection_rate":
                self.stationary_transition_rejection_rate,
            "stationary_observation_rejection_rate":
                self.stationary_observation_rejection_rate,
            "stable_entropy": self.stable_entropy.to_dict(),
            "details": self.details,
        }


def pearson_significance(x, y, alpha: float = 0.05):
    """Sample Pearson r with two-sided t-test significance at level alpha."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be equal-length 1-d sequences")
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 points")
    xc = x - x.mean()
    yc = y - y.mean()
    vx = float(xc @ xc)
    vy = float(yc @ yc)
    if vx == 0.0 or vy == 0.0:
        raise ValueError("zero-variance input")
    r = float(xc @ yc) / math.sqrt(vx * vy)
    r = max(-1.0, min(1.0, r))
    if abs(r) >= 1.0:
        p = 0.0
    else:
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
        p = 2.0 * float(stdtr(n - 2, -abs(t)))
    return r, p < alpha


def lag_correlation_profile(trace: MeasurementTrace, max_lag: int = 500,
                            rows: int = 10_000, alpha: float = 0.05,
                            seed: int = 0) -> CorrelationReport:
    """Correlate X_i against X_{i-k} for k = 0..max_lag over random anchors.

    Builds a rows x (max_lag + 1) matrix whose row vectors are
    (X_i, X_{i-1}, ..., X_{i-max_lag}) at uniformly random anchors i, then
    correlates column 0 against every other column.
    """
    levels = trace.levels.astype(float)
    n = levels.size
    if n <= max_lag + 1:
        raise ValueError(f"trace too short: {n} samples for max_lag={max_lag}")
    rng = np.random.default_rng(seed)
    anchors = rng.integers(max_lag, n, size=rows)
    lag_idx = anchors[:, None] - np.arange(max_lag + 1)[None, :]
    matrix = levels[lag_idx]
    rs, sig = [], []
    for k in range(max_lag + 1):
        r, s = pearson_significance(matrix[:, 0], matrix[:, k], alpha)
        rs.append(r)
        sig.append(bool(s))
    return CorrelationReport(list(range(max_lag + 1)), rs, sig, alpha)


def _kolmogorov_sf(lam: float) -> float:
    # Q(lambda) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2)
    if lam <= 0:
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = 2.0 * (-1.0) ** (j - 1) * math.exp(-2.0 * j * j * lam * lam)
        total += term
        if abs(term) < 1e-12:
            break
    return min(1.0, max(0.0, total))


def ks_two_sample(x, y, alpha: float = 0.05) -> KsReport:
    """Two-sample K-S test with asymptotic p-value (ne = nm / (n + m))."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    if x.size < 8 or y.size < 8:
        raise ValueError("each sample needs at least 8 points")
    support = np.concatenate([x, y])
    support.sort()
    fx = np.searchsorted(x, support, side="right") / x.size
    fy = np.searchsorted(y, support, side="right") / y.size
    d = float(np.abs(fx - fy).max())
    ne = x.size * y.size / (x.size + y.size)
    p = _kolmogorov_sf(math.sqrt(ne) * d)
    return KsReport(statistic=d, p_value=p, reject=p < alpha, alpha=alpha)


def downsample(trace: MeasurementTrace, factor: int) -> MeasurementTrace:
    """Keep every factor-th sample starting at index 0."""
    if factor < 1:
        raise ValueError("factor must be >= 1")
    return MeasurementTrace(trace.seqs[::factor], trace.levels[::factor],
                            trace.node_id, dict(trace.meta))


def _random_half_indices(rng: np.random.Generator, n: int):
    perm = rng.permutation(n)
    half = n // 2
    return perm[:half], perm[half:2 * half]


def validate_assumptions(alice: MeasurementTrace, eve: MeasurementTrace,
                         config: dict | None = None, seed: int = 0) -> AssumptionReport:
    """Run the assumption suite on an aligned (alice, eve) trace pair.

    config keys (all optional): alpha (0.05), trials (200), slice_len (100),
    max_lag (6), rows (2000), levels (inferred), min_cond_samples (8).
    Sub-tests that lack data are skipped and recorded in details rather
    than failing the suite.
    """
    assert_aligned(alice, eve)
    cfg = {"alpha": 0.05, "trials": 200, "slice_len": 100, "max_lag": 6,
           "rows": 2000, "levels": None, "min_cond_samples": 8}
    cfg.update(config or {})
    alpha = cfg["alpha"]
    trials = cfg["trials"]
    slice_len = cfg["slice_len"]
    n = len(alice)
    if n < 20 * slice_len:
        raise ValueError(f"need at least {20 * slice_len} samples, got {n}")
    rng = np.random.default_rng(seed)
    details: dict = {}

    x = alice.levels.astype(float)
    y = eve.levels.astype(float)

    # (a) memorylessness probe: lag profile of Alice's own samples
    profile = lag_correlation_profile(alice, max_lag=cfg["max_lag"],
                                      rows=cfg["rows"], alpha=alpha,
                                      seed=int(rng.integers(2 ** 32)))

    # (b) identical distribution: K-S on random half partitions
    rejects = 0
    for _ in range(trials):
        i1, i2 = _random_half_indices(rng, n)
        rejects += ks_two_sample(x[i1], x[i2], alpha).reject
    identical_rate = rejects / trials

    # (c) stationary transitions: successor samples from two disjoint time
    # windows drawn fresh each trial (fresh windows keep the trials
    # decorrelated, so the rejection rate concentrates near its level)
    rejects = 0
    w = max(cfg["min_cond_samples"], min(cfg["rows"], n // 8))
    for _ in range(trials):
        s1 = int(rng.integers(0, n - 2 * w - 1))
        s2 = int(rng.integers(s1 + w, n - w - 1))
        rejects += ks_two_sample(x[s1 + 1:s1 + w + 1], x[s2 + 1:s2 + w + 1],
                                 alpha).reject
    transition_rate = rejects / trials

    # (d) stationary observation: per conditioning level, Y|X=x across a
    # random index partition
    rejects = 0
    tests = 0
    skipped_levels = 0
    for _ in range(max(1, trials // 10)):
        i1, i2 = _random_half_indices(rng, n)
        for level in np.unique(alice.levels):
            y1 = y[i1][alice.levels[i1] == level]
            y2 = y[i2][alice.levels[i2] == level]
            if y1.size < cfg["min_cond_samples"] or y2.size < cfg["min_cond_samples"]:
                skipped_levels += 1
                continue
            tests += 1
            rejects += ks_two_sample(y1, y2, alpha).reject
    observation_rate = rejects / tests if tests else 0.0
    details["stationary_observation_tests"] = tests
    details["stationary_observation_skipped"] = skipped_levels

    # independent-observation probe (indirect): the eavesdropper's reading
    # must correlate with the source only at lag 0
    cross = {}
    for lag in range(1, cfg["max_lag"] + 1):
        r_fwd, sig_fwd = pearson_significance(y[:-lag], x[lag:], alpha)
        r_bwd, sig_bwd = pearson_significance(y[lag:], x[:-lag], alpha)
        cross[lag] = {"r_forward": r_fwd, "significant_forward": bool(sig_fwd),
                      "r_backward": r_bwd, "significant_backward": bool(sig_bwd)}
    r0, sig0 = pearson_significance(y, x, alpha)
    details["cross_lag"] = {"lag0_r": r0, "lag0_significant": bool(sig0),
                            "nonzero_lags": cross}

    # (e) stable entropy: per-slice conditional min-entropy spread under a
    # counting-fitted model
    levels = cfg["levels"]
    if levels is None:
        levels = int(1 - min(alice.levels.min(), eve.levels.min()))
    model = hmm.fit_hmm_from_traces(alice, eve, levels=levels, smoothing=1e-3)
    n_slices = n // slice_len
    experiments = [
        hmm.obs_from_values(model, eve.levels[s * slice_len:(s + 1) * slice_len])
        for s in range(n_slices)
    ]
    stable = hmm.estimate_avg_conditional_min_entropy(model, experiments)
    details["levels"] = levels
    details["n_slices"] = n_slices
    details["stable_entropy_cv"] = (stable.std_bits / stable.mean_bits
                                    if stable.mean_bits > 0 else float("inf"))

    return AssumptionReport(
        markov_lag_profile=profile,
        identical_distribution_rejection_rate=identical_rate,
        stationary_transition_rejection_rate=transition_rate,
        stationary_observation_rejection_rate=observation_rate,
        stable_entropy=stable,
        alpha=alpha,
        details=details,
    )
