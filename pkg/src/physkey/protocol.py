"""End-to-end key agreement, entropy-loss accounting and parameter planning.

Exchange shape: both parties quantize their aligned level traces into
bitstrings; Alice publishes the RS-syndrome sketch of hers plus a Toeplitz
extractor seed; Bob reconciles his copy against the sketch and both extract
the key.  The public transcript is exactly (sketch, seed).

Accounting chain: starting from the fitted conditional min-entropy g(n),
the sketch leaks its own bit-length |u| and the extractor costs
2*lambda - 2, leaving floor(g(n) - |u| - 2*lambda + 2) extractable key
bits.

The planner inverts the two fitted growth lines:

* entropy condition     g(n) - 16*(6/5)*e(n) >= l + 2*lambda - 2,
* correctness condition e(n) >= 100*c   (Chernoff exponent for staying
  within a 6/5 error-budget margin),

and sizes a (255, 255 - 2t) code with t = ceil((6/5) e(n) * 255 / words).
The closed-form reference bound max(12.54*lambda + 6.27*l - 3.24,
2326*c - 1) is reported alongside for cross-checking, as is the published
margin constant 549.4 whose recomputation from the same fitted lines gives
545.4; the planner surfaces both rather than guessing which was intended.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coding import RsCode, Sketch, ss_recover, ss_sketch
from .errors import InfeasiblePlanError, UncorrectableBlockError
from .extract import ExtractorSeed, extract, max_extractable_length, random_seed
from .hmm import LinearFit
from .quantize import BitString, QuantizerConfig, embed_trace
from .traces import MeasurementTrace, assert_aligned

# bits of sketch spent per corrected word: two syndrome symbols of 8 bits
SKETCH_BITS_PER_ERROR = 16
ERROR_SAFETY_FACTOR = 6.0 / 5.0
CHERNOFF_DENOMINATOR = 100.0

# fitted growth lines from the reference deployment:
# conditional min-entropy bits and word errors per n samples
REFERENCE_ENTROPY_FIT = LinearFit(slope=0.985, intercept=1.467)
REFERENCE_ERROR_FIT = LinearFit(slope=0.043, intercept=0.048)

# margin constant as originally published vs. recomputed from the lines above
PUBLISHED_MARGIN_CONSTANT = 549.4


@dataclass(frozen=True)
class ProtocolParams:
    """Everything one exchange needs: sample count, code, key-length targets."""

    n: int
    code: RsCode
    l: int
    lambda_: float
    c: float
    entropy_fit: LinearFit
    error_fit: LinearFit
    m: int = 8
    report: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.l < 1:
            raise ValueError("n and l must be >= 1")
        if self.lambda_ < 0:
            raise ValueError("lambda must be >= 0")
        if self.c < 0:
            raise ValueError("c must be >= 0")


@dataclass(frozen=True)
class EntropyLedger:
    """Accounting record: initial entropy minus sketch and extractor losses."""

    initial_bits: float
    sketch_loss_bits: int
    extractor_loss_bits: float
    residual_bits: float
    key_bits: int

    def to_dict(self) -> dict:
        return {
            "initial_bits": self.initial_bits,
            "sketch_loss_bits": self.sketch_loss_bits,
            "extractor_loss_bits": self.extractor_loss_bits,
            "residual_bits": self.residual_bits,
            "key_bits": self.key_bits,
        }


@dataclass(frozen=True)
class Transcript:
    """Public messages of one exchange: the sketch and the extractor seed."""

    sketch: Sketch
    seed: ExtractorSeed

    def to_bytes(self) -> bytes:
        return self.sketch.to_bytes() + self.seed.to_hex().encode("ascii")

    @classmethod
    def from_bytes(cls, raw: bytes, l: int) -> "Transcript":
        cut = Sketch.byte_length(raw)
        sketch = Sketch.from_bytes(raw[:cut])
        bits = BitString.from_hex(raw[cut:].decode("ascii"))
        return cls(sketch, ExtractorSeed(bits, t=len(bits) + 1 - l, l=l))


@dataclass(frozen=True)
class KeyResult:
    """Outcome of one exchange; success implies both keys exist and match."""

    alice_key: BitString
    bob_key: Optional[BitString]
    success: bool
    ledger: EntropyLedger
    transcript: Transcript
    failure_reason: Optional[str] = None
    n_corrected_words: int = 0

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "alice_key": self.alice_key.to_hex(),
            "bob_key": self.bob_key.to_hex() if self.bob_key is not None else None,
            "failure_reason": self.failure_reason,
            "n_corrected_words": self.n_corrected_words,
            "ledger": self.ledger.to_dict(),
            "transcript_bytes": len(self.transcript.to_bytes()),
        }


def entropy_ledger(initial_bits: float, sketch: Sketch, lambda_: float) -> EntropyLedger:
    """Charge the sketch leakage and extractor loss against initial entropy."""
    if initial_bits < 0:
        raise ValueError("initial entropy must be >= 0")
    residual = initial_bits - sketch.bit_length
    return EntropyLedger(
        initial_bits=float(initial_bits),
        sketch_loss_bits=int(sketch.bit_length),
        extractor_loss_bits=2.0 * lambda_ - 2.0,
        residual_bits=float(residual),
        key_bits=max_extractable_length(max(0.0, residual), lambda_),
    )


def correctness_bound(n: int, error_fit: LinearFit) -> float:
    """Chernoff-style failure bound exp(-e(n)/100) for the planned margin."""
    if n < 1:
        raise ValueError("n must be >= 1")
    e = error_fit(n)
    if e <= 0:
        warnings.warn("error fit is non-positive at n; correctness bound is vacuous",
                      stacklevel=2)
        return 1.0
    return math.exp(-e / CHERNOFF_DENOMINATOR)


def _smallest_n_at_least(slope: float, intercept: float, target: float) -> int:
    # smallest integer n with slope * n + intercept >= target
    n = math.ceil((target - intercept) / slope - 1e-12)
    return max(1, n)


def plan_parameters(l: int, lambda_: float, c: float,
                    entropy_fit: LinearFit = REFERENCE_ENTROPY_FIT,
                    error_fit: LinearFit = REFERENCE_ERROR_FIT,
                    m: int = 8) -> ProtocolParams:
    """Choose the sample count and code for an (l, e^-c, 2^-lambda) exchange.

    c = 0 disables the correctness condition (useful when probing the
    entropy bound alone).  Raises InfeasiblePlanError when the fitted lines
    cannot satisfy the conditions at any n.
    """
    if entropy_fit.slope <= 0:
        raise InfeasiblePlanError("entropy fit must have positive slope")
    loss_rate = SKETCH_BITS_PER_ERROR * ERROR_SAFETY_FACTOR  # 19.2 bits per e(n)
    margin_slope = entropy_fit.slope - loss_rate * error_fit.slope
    margin_intercept = entropy_fit.intercept - loss_rate * error_fit.intercept
    need = l + 2.0 * lambda_ - 2.0
    if margin_slope <= 0:
        raise InfeasiblePlanError(
            f"net entropy slope {margin_slope:.6f} bits/sample is not positive; "
            "the sketch consumes entropy faster than the channel provides it")
    n_entropy = _smallest_n_at_least(margin_slope, margin_intercept, need)

    if c > 0:
        if error_fit.slope <= 0:
            raise InfeasiblePlanError(
                "correctness condition needs a positive error-fit slope")
        n_correct = _smallest_n_at_least(error_fit.slope, error_fit.intercept,
                                         CHERNOFF_DENOMINATOR * c)
    else:
        n_correct = 1
    n = max(n_entropy, n_correct)

    if (n * m) % 8:
        n += (8 - (n * m) % 8) // math.gcd(m, 8)
    words = n * m // 8
    budget = ERROR_SAFETY_FACTOR * error_fit(n)
    t_block = max(1, math.ceil(budget * 255 / words - 1e-12))
    if t_block > 127:
        raise InfeasiblePlanError(f"per-block error budget {t_block} exceeds code capacity")
    code = RsCode(255, 255 - 2 * t_block)
    block_count = -(-words // 255)
    sketch_bits = block_count * code.n_syndromes * 8

    published_formula_n = max(12.54 * lambda_ + 6.27 * l - 3.24, 2326.0 * c - 1.0)
    published_entropy_n = (1000.0 * (l + 2.0 * lambda_) - PUBLISHED_MARGIN_CONSTANT) / 159.4
    recomputed_constant = 1000.0 * margin_intercept
    initial = entropy_fit(n)
    residual = initial - sketch_bits

    report = {
        "n": n,
        "entropy_bound_n": n_entropy,
        "correctness_bound_n": n_correct,
        "published_formula_n": published_formula_n,
        "published_entropy_bound_n": published_entropy_n,
        "words": words,
        "block_count": block_count,
        "t_block": t_block,
        "code": code.to_dict(),
        "sketch_bits": sketch_bits,
        "idealized_sketch_bits": loss_rate * error_fit(n),
        "predicted_initial_bits": initial,
        "predicted_residual_bits": residual,
        "required_residual_bits": need,
        "residual_certified": residual >= need,
        "predicted_correctness_bound": correctness_bound(n, error_fit)
        if error_fit(n) > 0 else 1.0,
        "margin_constant_published": PUBLISHED_MARGIN_CONSTANT,
        "margin_constant_recomputed": recomputed_constant,
        "margin_constant_discrepancy": PUBLISHED_MARGIN_CONSTANT - recomputed_constant,
    }
    return ProtocolParams(n=n, code=code, l=l, lambda_=lambda_, c=c,
                          entropy_fit=entropy_fit, error_fit=error_fit,
                          m=m, report=report)


def alice_messages(alice: MeasurementTrace, params: ProtocolParams,
                   rng: np.random.Generator):
    """Alice's side: quantize, sketch, draw the extractor seed, extract."""
    qconf = QuantizerConfig(m=params.m, include_sign=False)
    rho_a = embed_trace(alice.levels[:params.n], qconf)
    sketch = ss_sketch(rho_a, params.code)
    seed = random_seed(rng, t=len(rho_a), l=params.l)
    key = extract(rho_a, seed)
    return rho_a, Transcript(sketch, seed), key


def bob_respond(bob: MeasurementTrace, transcript: Transcript,
                params: ProtocolParams):
    """Bob's side, a function of (rho_B, sketch, seed) only.

    Returns (key or None, corrected word count, failure reason or None).
    """
    qconf = QuantizerConfig(m=params.m, include_sign=False)
    rho_b = embed_trace(bob.levels[:params.n], qconf)
    try:
        recovered = ss_recover(rho_b, transcript.sketch)
    except UncorrectableBlockError as exc:
        return None, 0, str(exc)
    corrected = int(np.count_nonzero(
        recovered.to_words() != rho_b.to_words()))
    return extract(recovered, transcript.seed), corrected, None


def run_exchange(alice: MeasurementTrace, bob: MeasurementTrace,
                 params: ProtocolParams, seed: int) -> KeyResult:
    """One full exchange over aligned traces; reproducible for a fixed seed."""
    assert_aligned(alice, bob)
    if len(alice) < params.n:
        raise ValueError(f"traces hold {len(alice)} samples, plan needs {params.n}")
    rng = np.random.default_rng(seed)
    _, transcript, alice_key = alice_messages(alice, params, rng)
    bob_key, corrected, reason = bob_respond(bob, transcript, params)
    success = bob_key is not None and bob_key == alice_key
    if bob_key is not None and reason is None and not success:
        reason = "key mismatch after reconciliation"
    ledger = entropy_ledger(params.entropy_fit(params.n), transcript.sketch,
                            params.lambda_)
    return KeyResult(alice_key=alice_key, bob_key=bob_key, success=success,
                     ledger=ledger, transcript=transcript,
                     failure_reason=reason, n_corrected_words=corrected)
