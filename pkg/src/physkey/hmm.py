"""Hidden Markov channel model and conditional min-entropy estimation.

The hidden chain holds one party's signal levels; the visible symbols are an
eavesdropper's readings.  Two dynamic programs drive everything:

* max-joint path probability P* = max_x Pr[X = x, Y = y]  (log-domain),
* total observation probability P = Pr[Y = y]             (scaled).

The conditional min-entropy of the hidden sequence given one observation
sequence is -log2(P*/P); averaging it over independent experiments
approximates the average-case conditional min-entropy, and an exact
enumeration over all observation sequences (-log2 sum_y P*(y)) is kept as a
desk-scale reference for small models.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ImpossibleObservationError
from .traces import MeasurementTrace, assert_aligned

_ROW_TOL = 1e-9
ENUMERATION_GUARD = 10 ** 6


@dataclass(frozen=True)
class HmmModel:
    """k hidden states over m symbols: initial pi, transitions, emissions.

    ``states`` and ``symbols`` carry the actual signal-level values so that
    traces map to indices unambiguously; ``trans`` and ``emit`` are
    row-stochastic.
    """

    states: tuple
    symbols: tuple
    pi: np.ndarray
    trans: np.ndarray
    emit: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "symbols", tuple(self.symbols))
        for name in ("pi", "trans", "emit"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def k(self) -> int:
        return len(self.states)

    @property
    def m(self) -> int:
        return len(self.symbols)

    def state_index(self, value: int) -> int:
        try:
            return self.states.index(value)
        except ValueError:
            raise ValueError(f"level {value} is not a model state") from None

    def symbol_index(self, value: int) -> int:
        try:
            return self.symbols.index(value)
        except ValueError:
            raise ValueError(f"symbol {value} is not in the model alphabet") from None

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "m": self.m,
            "states": list(self.states),
            "symbols": list(self.symbols),
            "pi": self.pi.tolist(),
            "trans": self.trans.tolist(),
            "emit": self.emit.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HmmModel":
        model = cls(states=tuple(d["states"]), symbols=tuple(d["symbols"]),
                    pi=np.array(d["pi"], float), trans=np.array(d["trans"], float),
                    emit=np.array(d["emit"], float))
        if d.get("k") is not None and int(d["k"]) != model.k:
            raise ValueError(f"k={d['k']} does not match {model.k} states")
        if d.get("m") is not None and int(d["m"]) != model.m:
            raise ValueError(f"m={d['m']} does not match {model.m} symbols")
        violations = validate_model(model)
        if violations:
            raise ValueError("invalid model: " + "; ".join(violations))
        return model


def validate_model(model: HmmModel) -> list:
    """Return all invariant violations (empty list means the model is valid)."""
    out = []
    k, m = model.k, model.m
    if model.pi.shape != (k,):
        out.append(f"pi has shape {model.pi.shape}, expected ({k},)")
    if model.trans.shape != (k, k):
        out.append(f"trans has shape {model.trans.shape}, expected ({k}, {k})")
    if model.emit.shape != (k, m):
        out.append(f"emit has shape {model.emit.shape}, expected ({k}, {m})")
    if out:
        return out

    def check_rows(name, mat):
        if np.any(mat < 0):
            out.append(f"{name} has a negative probability")
        if np.any(mat > 1):
            out.append(f"{name} has an entry > 1")
        sums = mat.sum(axis=1) if mat.ndim == 2 else np.array([mat.sum()])
        for i, s in enumerate(sums):
            if abs(s - 1.0) > _ROW_TOL:
                where = f"row {i} of {name}" if mat.ndim == 2 else name
                out.append(f"{where} sums to {s:.12g}")

    check_rows("pi", model.pi)
    check_rows("trans", model.trans)
    check_rows("emit", model.emit)
    if len(set(model.states)) != k:
        out.append("duplicate state values")
    if len(set(model.symbols)) != m:
        out.append("duplicate symbol values")
    return out


@dataclass(frozen=True)
class ObservationSequence:
    """Indices into the model's symbol alphabet."""

    symbols: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.symbols, dtype=np.int64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("observation sequence must be a non-empty 1-d array")
        object.__setattr__(self, "symbols", arr)

    def __len__(self) -> int:
        return int(self.symbols.size)


def obs_from_values(model: HmmModel, values: Iterable[int]) -> ObservationSequence:
    """Map raw symbol values (e.g. an eavesdropper trace) to alphabet indices."""
    lut = {v: i for i, v in enumerate(model.symbols)}
    try:
        idx = [lut[int(v)] for v in values]
    except KeyError as exc:
        raise ValueError(f"symbol {exc.args[0]} is not in the model alphabet") from None
    return ObservationSequence(np.array(idx, dtype=np.int64))


@dataclass(frozen=True)
class StatePath:
    """Indices into the model's state set."""

    states: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", np.asarray(self.states, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.states.size)


@dataclass(frozen=True)
class EntropyEstimate:
    """Sampled average-case conditional min-entropy with per-experiment spread."""

    mean_bits: float
    std_bits: float
    per_experiment_bits: list
    n_samples_per_experiment: int
    n_experiments: int

    def to_dict(self) -> dict:
        return {
            "mean_bits": self.mean_bits,
            "std_bits": self.std_bits,
            "per_experiment_bits": list(self.per_experiment_bits),
            "n_samples_per_experiment": self.n_samples_per_experiment,
            "n_experiments": self.n_experiments,
        }


@dataclass(frozen=True)
class LinearFit:
    """Ordinary least-squares line y = slope * x + intercept."""

    slope: float
    intercept: float
    residual_sum_squares: float = 0.0

    def __call__(self, x: float) -> float:
        return self.slope * x + self.intercept

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "residual_sum_squares": self.residual_sum_squares}


def _check_obs(model: HmmModel, obs: ObservationSequence) -> np.ndarray:
    sym = obs.symbols
    if sym.min() < 0 or sym.max() >= model.m:
        raise ValueError(f"observation index out of range [0, {model.m})")
    return sym


def _log2_safe(mat: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log2(mat)


def viterbi_max_joint(model: HmmModel, obs: ObservationSequence):
    """Max joint probability over hidden paths, in log2, plus one argmax path.

    delta_1(i) = pi_i b_i(y_1);  delta_{t+1}(j) = max_i[delta_t(i) a_ij] b_j(y_{t+1});
    P* = max_j delta_n(j).  Runs entirely in the log domain; ties break toward
    the lowest state index.
    """
    sym = _check_obs(model, obs)
    n, k = sym.size, model.k
    log_pi = _log2_safe(model.pi)
    log_a = _log2_safe(model.trans)
    log_b = _log2_safe(model.emit)

    delta = log_pi + log_b[:, sym[0]]
    back = np.zeros((n, k), dtype=np.int64)
    for t in range(1, n):
        cand = delta[:, None] + log_a          # cand[i, j]
        best = np.argmax(cand, axis=0)         # first max -> lowest index
        delta = cand[best, np.arange(k)] + log_b[:, sym[t]]
        back[t] = best
    final = int(np.argmax(delta))
    log_p = float(delta[final])
    if log_p == -np.inf:
        raise ImpossibleObservationError(
            "impossible observation sequence: all path probabilities vanish")
    path = np.zeros(n, dtype=np.int64)
    path[-1] = final
    for t in range(n - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return log_p, StatePath(path)


def forward_likelihood(model: HmmModel, obs: ObservationSequence) -> float:
    """Total observation probability Pr[Y = obs] in log2.

    alpha_1(i) = pi_i b_i(y_1); alpha_{t+1}(j) = [sum_i alpha_t(i) a_ij] b_j(y_{t+1});
    P = sum_i alpha_n(i).  Per-step scaling keeps long sequences (n >= 1e4)
    from underflowing.
    """
    sym = _check_obs(model, obs)
    alpha = model.pi * model.emit[:, sym[0]]
    log_p = 0.0
    scale = alpha.sum()
    if scale <= 0.0:
        raise ImpossibleObservationError(
            "impossible observation sequence: zero probability at step 0")
    alpha = alpha / scale
    log_p += math.log2(scale)
    for t in range(1, sym.size):
        alpha = (alpha @ model.trans) * model.emit[:, sym[t]]
        scale = alpha.sum()
        if scale <= 0.0:
            raise ImpossibleObservationError(
                f"impossible observation sequence: zero probability at step {t}")
        alpha = alpha / scale
        log_p += math.log2(scale)
    return float(log_p)


def conditional_min_entropy_given_obs(model: HmmModel, obs: ObservationSequence) -> float:
    """-log2(P*/P) for one observation sequence; non-negative since P* <= P."""
    log_pstar, _ = viterbi_max_joint(model, obs)
    log_p = forward_likelihood(model, obs)
    return max(0.0, log_p - log_pstar)


def _viterbi_log2_batch(model: HmmModel, obs_matrix: np.ndarray) -> np.ndarray:
    """log2 P* for each row of an (r, n) matrix of symbol indices."""
    log_pi = _log2_safe(model.pi)
    log_a = _log2_safe(model.trans)
    log_b = _log2_safe(model.emit)
    r, n = obs_matrix.shape
    delta = log_pi[None, :] + log_b[:, obs_matrix[:, 0]].T    # (r, k)
    for t in range(1, n):
        cand = delta[:, :, None] + log_a[None, :, :]
        delta = cand.max(axis=1) + log_b[:, obs_matrix[:, t]].T
    return delta.max(axis=1)


def _forward_log2_batch(model: HmmModel, obs_matrix: np.ndarray) -> np.ndarray:
    """log2 P for each row of an (r, n) matrix of symbol indices (scaled)."""
    r, n = obs_matrix.shape
    alpha = model.pi[None, :] * model.emit[:, obs_matrix[:, 0]].T
    log_p = np.zeros(r)
    scale = alpha.sum(axis=1)
    if np.any(scale <= 0):
        raise ImpossibleObservationError("impossible observation sequence in batch")
    alpha /= scale[:, None]
    log_p += np.log2(scale)
    for t in range(1, n):
        alpha = (alpha @ model.trans) * model.emit[:, obs_matrix[:, t]].T
        scale = alpha.sum(axis=1)
        if np.any(scale <= 0):
            raise ImpossibleObservationError("impossible observation sequence in batch")
        alpha /= scale[:, None]
        log_p += np.log2(scale)
    return log_p


def entropy_profile_batch(model: HmmModel, obs_matrix: np.ndarray,
                           checkpoints: Sequence[int]) -> np.ndarray:
    """Per-row -log2(P*/P) at several prefix lengths, in one sweep.

    Returns an array of shape (rows, len(checkpoints)).  Both dynamic programs
    expose their prefix quantities at every step, so growth curves come from a
    single pass per sequence.
    """
    checkpoints = sorted(checkpoints)
    r, n = obs_matrix.shape
    if checkpoints[-1] > n:
        raise ValueError("checkpoint beyond sequence length")
    log_pi = _log2_safe(model.pi)
    log_a = _log2_safe(model.trans)
    log_b = _log2_safe(model.emit)

    delta = log_pi[None, :] + log_b[:, obs_matrix[:, 0]].T
    alpha = model.pi[None, :] * model.emit[:, obs_matrix[:, 0]].T
    scale = alpha.sum(axis=1)
    if np.any(scale <= 0):
        raise ImpossibleObservationError("impossible observation sequence in batch")
    alpha /= scale[:, None]
    log_fwd = np.log2(scale)

    out = np.zeros((r, len(checkpoints)))
    pos = 0
    if checkpoints[pos] == 1:
        out[:, pos] = np.maximum(0.0, log_fwd - delta.max(axis=1))
        pos += 1
    for t in range(1, n):
        cand = delta[:, :, None] + log_a[None, :, :]
        delta = cand.max(axis=1) + log_b[:, obs_matrix[:, t]].T
        alpha = (alpha @ model.trans) * model.emit[:, obs_matrix[:, t]].T
        scale = alpha.sum(axis=1)
        if np.any(scale <= 0):
            raise ImpossibleObservationError("impossible observation sequence in batch")
        alpha /= scale[:, None]
        log_fwd += np.log2(scale)
        if pos < len(checkpoints) and checkpoints[pos] == t + 1:
            out[:, pos] = np.maximum(0.0, log_fwd - delta.max(axis=1))
            pos += 1
    if pos != len(checkpoints):
        raise ValueError("duplicate or unreachable checkpoints")
    return out


def exact_avg_conditional_min_entropy(model: HmmModel, n: int) -> float:
    """-log2 sum over all m^n observation sequences of their max joint P*.

    Enumeration is guarded at m^n <= 1e6; intended as a desk-scale reference
    for validating the sampled estimator.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    total = model.m ** n
    if total > ENUMERATION_GUARD:
        raise ValueError(
            f"enumeration too large: {model.m}^{n} = {total} > {ENUMERATION_GUARD}")
    # all sequences as base-m digit rows, chunked to bound memory
    chunk = 65536
    powers = model.m ** np.arange(n - 1, -1, -1, dtype=np.int64)
    log_terms = []
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        block = (idx[:, None] // powers[None, :]) % model.m
        log_terms.append(_viterbi_log2_batch(model, block))
    logs = np.concatenate(log_terms)
    top = logs.max()
    if top == -np.inf:
        raise ImpossibleObservationError("model assigns zero probability to every sequence")
    s = np.exp2(logs - top).sum()
    return float(max(0.0, -(top + math.log2(s))))


def estimate_avg_conditional_min_entropy(
        model: HmmModel, experiments: Sequence[ObservationSequence]) -> EntropyEstimate:
    """Average of per-experiment -log2(P*_j / P_j) with sample spread.

    Valid as an approximation of the average-case value when the
    per-observation conditional min-entropies are stably distributed.
    """
    if len(experiments) < 1:
        raise ValueError("need at least one experiment")
    lengths = {len(e) for e in experiments}
    if len(lengths) != 1:
        raise ValueError(f"experiments have mixed lengths {sorted(lengths)}")
    per = []
    for j, exp in enumerate(experiments):
        try:
            per.append(conditional_min_entropy_given_obs(model, exp))
        except ImpossibleObservationError as exc:
            raise ImpossibleObservationError(f"experiment {j}: {exc}") from None
    arr = np.array(per)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return EntropyEstimate(
        mean_bits=float(arr.mean()),
        std_bits=std,
        per_experiment_bits=[float(v) for v in per],
        n_samples_per_experiment=int(lengths.pop()),
        n_experiments=len(per),
    )


def level_states(levels: int) -> tuple:
    """Signal-level state set for a given level count: -(levels-1) .. 0."""
    if levels < 2:
        raise ValueError("need at least 2 levels")
    return tuple(range(-(levels - 1), 1))


def fit_hmm_from_traces(hidden: MeasurementTrace, observed: MeasurementTrace,
                        levels: int, smoothing: float = 0.0) -> HmmModel:
    """Counting estimators for pi, transitions and emissions from paired traces.

    a_ij = (#(i -> j) + smoothing) / (#i as predecessor + k * smoothing) and
    likewise for emissions; pi is the empirical marginal of the hidden levels.
    With zero smoothing, rows of unvisited states fall back to uniform and a
    warning is issued.
    """
    assert_aligned(hidden, observed)
    if len(hidden) < 2:
        raise ValueError("need at least 2 aligned samples to count transitions")
    if smoothing < 0:
        raise ValueError("smoothing must be >= 0")
    states = level_states(levels)
    k = m = levels
    lo = states[0]

    for name, tr in (("hidden", hidden), ("observed", observed)):
        n_distinct = np.unique(tr.levels).size
        if n_distinct > levels:
            raise ValueError(
                f"levels={levels} is smaller than the {name} alphabet ({n_distinct})")
        if tr.levels.min() < lo or tr.levels.max() > 0:
            raise ValueError(
                f"{name} trace has levels outside [{lo}, 0]; clamp during ingestion")

    h = hidden.levels - lo
    o = observed.levels - lo

    pi = np.bincount(h, minlength=k).astype(float)
    pi /= pi.sum()

    trans_counts = np.bincount(h[:-1] * k + h[1:], minlength=k * k).reshape(k, k).astype(float)
    emit_counts = np.bincount(h * m + o, minlength=k * m).reshape(k, m).astype(float)

    def normalize(counts, width, what):
        sm = counts + smoothing
        denom = sm.sum(axis=1)
        rows = np.empty_like(sm)
        empty = []
        for i in range(counts.shape[0]):
            if denom[i] > 0:
                rows[i] = sm[i] / denom[i]
            else:
                rows[i] = 1.0 / width
                empty.append(states[i])
        if empty:
            warnings.warn(
                f"no {what} counts for state(s) {empty}; rows default to uniform",
                stacklevel=3)
        return rows

    trans = normalize(trans_counts, k, "transition")
    emit = normalize(emit_counts, m, "emission")
    return HmmModel(states=states, symbols=states, pi=pi, trans=trans, emit=emit)


def fit_linear_growth(points: Sequence[tuple]) -> LinearFit:
    """Ordinary least squares through (x, y) points; needs >= 2 distinct x."""
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    if np.unique(xs).size < 2:
        raise ValueError("need at least 2 distinct x values")
    xm, ym = xs.mean(), ys.mean()
    slope = float(((xs - xm) * (ys - ym)).sum() / ((xs - xm) ** 2).sum())
    intercept = float(ym - slope * xm)
    resid = ys - (slope * xs + intercept)
    return LinearFit(slope, intercept, float((resid ** 2).sum()))
