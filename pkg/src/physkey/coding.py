"""GF(2^8) arithmetic, Reed-Solomon syndrome decoding and the secure sketch.

Reconciliation works on 8-bit words over a shortened (255, k) RS code with
primitive polynomial x^8+x^4+x^3+x^2+1 (0x11D) and generator alpha = 0x02;
the code roots are alpha^1 .. alpha^2t.  Word j of a 255-word block sits at
polynomial degree 254 - j; blocks shorter than 255 words are zero-padded at
the tail and the pad length travels inside the sketch.

The sketch of a bitstring is the per-block syndrome vector.  Because
syndromes are linear, syn(w) xor syn(w') is the syndrome of the error
pattern alone, which a Berlekamp-Massey / Chien / Forney pipeline recovers
whenever its word weight is within the code's capacity.  Decoding is
fail-closed: any inconsistency reports an uncorrectable block rather than a
silently wrong correction.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import UncorrectableBlockError
from .quantize import BitString

PRIMITIVE_POLY = 0x11D
GENERATOR = 0x02
FIELD_CHARAC = 255


def _mul_no_table(a: int, b: int) -> int:
    # Russian-peasant multiplication with modular reduction; also the
    # independent oracle the table construction is tested against.
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & 0x100:
            a ^= PRIMITIVE_POLY
    return r


@dataclass(frozen=True)
class GfTables:
    """Log/antilog tables for GF(2^8) under the fixed primitive polynomial."""

    exp: np.ndarray  # length 510, doubled to skip a modulo on multiply
    log: np.ndarray  # length 256; log[0] is unused


def _build_tables() -> GfTables:
    exp = np.zeros(510, dtype=np.int64)
    log = np.zeros(256, dtype=np.int64)
    x = 1
    for i in range(FIELD_CHARAC):
        exp[i] = x
        log[x] = i
        x = _mul_no_table(x, GENERATOR)
    exp[FIELD_CHARAC:2 * FIELD_CHARAC] = exp[:FIELD_CHARAC]
    exp.setflags(write=False)
    log.setflags(write=False)
    return GfTables(exp, log)


TABLES = _build_tables()
_EXP = TABLES.exp
_LOG = TABLES.log


def gf_add(a: int, b: int) -> int:
    return a ^ b


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return int(_EXP[_LOG[a] + _LOG[b]])


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by zero in GF(2^8)")
    if a == 0:
        return 0
    return int(_EXP[(_LOG[a] - _LOG[b]) % FIELD_CHARAC])


def gf_pow(a: int, power: int) -> int:
    if a == 0:
        if power == 0:
            return 1
        if power < 0:
            raise ZeroDivisionError("zero has no negative power in GF(2^8)")
        return 0
    return int(_EXP[(_LOG[a] * power) % FIELD_CHARAC])


def gf_inv(a: int) -> int:
    return gf_div(1, a)


def gf_ops(a: int, b: int, op: str) -> int:
    """Dispatch field arithmetic: add (xor), mul, div, pow."""
    if op == "add":
        return gf_add(a, b)
    if op == "mul":
        return gf_mul(a, b)
    if op == "div":
        return gf_div(a, b)
    if op == "pow":
        return gf_pow(a, b)
    raise ValueError(f"unknown GF op {op!r}")


def _poly_eval(poly, x: int) -> int:
    # Horner scheme; poly[0] is the highest-degree coefficient.
    y = poly[0]
    for c in poly[1:]:
        y = gf_mul(y, x) ^ c
    return y


def _poly_mul(p, q):
    r = [0] * (len(p) + len(q) - 1)
    for i, pi in enumerate(p):
        if pi == 0:
            continue
        for j, qj in enumerate(q):
            r[i + j] ^= gf_mul(pi, qj)
    return r


@dataclass(frozen=True)
class RsCode:
    """Shortened Reed-Solomon code parameters over GF(2^8)."""

    n_sym: int = 255
    k_sym: int = 229

    def __post_init__(self):
        if not (1 <= self.k_sym < self.n_sym <= 255):
            raise ValueError(f"invalid RS parameters ({self.n_sym}, {self.k_sym})")

    @property
    def t(self) -> int:
        return (self.n_sym - self.k_sym) // 2

    @property
    def n_syndromes(self) -> int:
        return self.n_sym - self.k_sym

    def to_dict(self) -> dict:
        return {"n_sym": self.n_sym, "k_sym": self.k_sym, "t": self.t}


def rs_syndrome(words, code: RsCode) -> np.ndarray:
    """Evaluate the (zero-padded) word block at the 2t code roots.

    Returns S_1 .. S_2t; all zeros iff the padded block is a codeword of
    the shortened code.
    """
    w = np.asarray(words, dtype=np.int64)
    if w.size > code.n_sym:
        raise ValueError(f"block of {w.size} words exceeds n_sym={code.n_sym}")
    if w.size and (w.min() < 0 or w.max() > 255):
        raise ValueError("words must be in [0, 255]")
    if w.size < code.n_sym:
        w = np.concatenate([w, np.zeros(code.n_sym - w.size, dtype=np.int64)])
    out = np.zeros(code.n_syndromes, dtype=np.int64)
    nz = np.nonzero(w)[0]
    if nz.size == 0:
        return out
    logs = _LOG[w[nz]]
    degrees = (code.n_sym - 1 - nz) % FIELD_CHARAC
    for i in range(1, code.n_syndromes + 1):
        terms = _EXP[(logs + i * degrees) % FIELD_CHARAC]
        out[i - 1] = int(np.bitwise_xor.reduce(terms))
    return out


def _bm_locator(synd):
    """Berlekamp-Massey over GF(2^8); synd[i] = S_{i+1}.

    Returns the locator Lambda as a low-degree-first coefficient list
    [1, l1, l2, ...] with Lambda(x) = prod_p (1 - X_p x).
    """
    n = len(synd)
    c = [1] + [0] * n   # current connection polynomial
    b = [1] + [0] * n   # previous best
    L = 0
    mshift = 1
    bb = 1              # discrepancy at last length change
    for i in range(n):
        d = synd[i]
        for j in range(1, L + 1):
            d ^= gf_mul(c[j], synd[i - j])
        if d == 0:
            mshift += 1
        elif 2 * L <= i:
            tmp = c[:]
            coef = gf_div(d, bb)
            for j in range(len(c) - mshift):
                c[j + mshift] ^= gf_mul(coef, b[j])
            L = i + 1 - L
            b = tmp
            bb = d
            mshift = 1
        else:
            coef = gf_div(d, bb)
            for j in range(len(c) - mshift):
                c[j + mshift] ^= gf_mul(coef, b[j])
            mshift += 1
    return c[:L + 1], L


def decode_error_from_syndrome(syndrome_diff, code: RsCode) -> list:
    """Unique error pattern of word weight <= t matching the given syndromes.

    Returns a list of (position, magnitude) pairs, position 0 being the
    first word of the 255-word padded block.  Raises UncorrectableBlockError
    (block index 0; callers re-wrap with the real index) when the syndromes
    are inconsistent with any weight-<= t error.
    """
    synd = [int(s) for s in np.asarray(syndrome_diff, dtype=np.int64)]
    if len(synd) != code.n_syndromes:
        raise ValueError(f"expected {code.n_syndromes} syndromes, got {len(synd)}")
    if not any(synd):
        return []

    lam, degree = _bm_locator(synd)
    if degree > code.t or len(lam) != degree + 1 or lam[0] != 1:
        raise UncorrectableBlockError(0, f"locator degree {degree} exceeds t={code.t}")

    # Chien search: position p corresponds to X_p = alpha^(n_sym - 1 - p),
    # so the locator root is X_p^-1 = alpha^(p - (n_sym - 1) mod 255).
    positions = []
    for p in range(code.n_sym):
        x = gf_pow(GENERATOR, (p - (code.n_sym - 1)) % FIELD_CHARAC)
        if _poly_eval(list(reversed(lam)), x) == 0:
            positions.append(p)
    if len(positions) != degree:
        raise UncorrectableBlockError(
            0, f"locator has {len(positions)} roots, expected {degree}")

    # Forney with fcr = 1: Omega(x) = S(x) Lambda(x) mod x^2t,
    # Y_p = Omega(X_p^-1) / Lambda'(X_p^-1).
    omega_full = _poly_mul(synd, lam)  # both low-degree-first
    omega = omega_full[:code.n_syndromes]
    lam_deriv = [lam[j] for j in range(1, len(lam), 2)]  # d/dx in char 2
    errors = []
    for p in positions:
        x_inv = gf_pow(GENERATOR, (p - (code.n_sym - 1)) % FIELD_CHARAC)  # X_p^-1
        num = _poly_eval(list(reversed(omega)), x_inv)
        # Lambda'(x) = sum over odd j of lam[j] x^(j-1): powers of x^2
        den = 0
        xp = 1
        x_sq = gf_mul(x_inv, x_inv)
        for coeff in lam_deriv:
            den ^= gf_mul(coeff, xp)
            xp = gf_mul(xp, x_sq)
        if den == 0:
            raise UncorrectableBlockError(0, "zero locator derivative at a root")
        errors.append((p, gf_div(num, den)))

    # fail-closed: the reconstructed pattern must reproduce the syndromes
    check = np.zeros(code.n_sym, dtype=np.int64)
    for p, mag in errors:
        if mag == 0:
            raise UncorrectableBlockError(0, "zero error magnitude")
        check[p] = mag
    if not np.array_equal(rs_syndrome(check, code), np.asarray(synd)):
        raise UncorrectableBlockError(0, "syndrome re-check failed")
    return errors


@dataclass(frozen=True)
class Sketch:
    """Public reconciliation message: per-block RS syndromes plus geometry."""

    syndromes: np.ndarray
    block_count: int
    code: RsCode
    padded_words: int

    MAGIC = b"PKS1"

    def __post_init__(self):
        arr = np.asarray(self.syndromes, dtype=np.int64)
        if arr.size != self.block_count * self.code.n_syndromes:
            raise ValueError("syndrome vector length does not match block count")
        object.__setattr__(self, "syndromes", arr)

    @property
    def bit_length(self) -> int:
        """Public leakage |u| in bits: block_count * 2t * 8."""
        return int(self.syndromes.size * 8)

    @property
    def total_words(self) -> int:
        return self.block_count * self.code.n_sym - self.padded_words

    def block(self, b: int) -> np.ndarray:
        w = self.code.n_syndromes
        return self.syndromes[b * w:(b + 1) * w]

    def to_bytes(self) -> bytes:
        head = self.MAGIC + struct.pack(">BBIH", self.code.n_sym, self.code.k_sym,
                                        self.block_count, self.padded_words)
        return head + bytes(int(s) for s in self.syndromes)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Sketch":
        if raw[:4] != cls.MAGIC:
            raise ValueError("bad sketch magic")
        n_sym, k_sym, block_count, padded = struct.unpack(">BBIH", raw[4:12])
        code = RsCode(n_sym, k_sym)
        need = block_count * code.n_syndromes
        body = raw[12:12 + need]
        if len(body) != need:
            raise ValueError(f"sketch body holds {len(body)} symbols, need {need}")
        return cls(np.frombuffer(body, dtype=np.uint8).astype(np.int64),
                   block_count, code, padded)

    @classmethod
    def byte_length(cls, raw: bytes) -> int:
        """Total serialized length implied by the header (for framed parsing)."""
        if raw[:4] != cls.MAGIC:
            raise ValueError("bad sketch magic")
        n_sym, k_sym, block_count, _ = struct.unpack(">BBIH", raw[4:12])
        return 12 + block_count * (n_sym - k_sym)


def _to_blocks(words: np.ndarray, code: RsCode):
    n = words.size
    block_count = max(1, -(-n // code.n_sym))
    padded = block_count * code.n_sym - n
    full = np.concatenate([words, np.zeros(padded, dtype=np.int64)])
    return full.reshape(block_count, code.n_sym), block_count, padded


def ss_sketch(rho: BitString, code: RsCode) -> Sketch:
    """Deterministic syndrome sketch of a byte-aligned bitstring."""
    words = rho.to_words()
    blocks, block_count, padded = _to_blocks(words, code)
    synd = np.concatenate([rs_syndrome(blk, code) for blk in blocks])
    return Sketch(synd, block_count, code, padded)


def ss_recover(rho_prime: BitString, sketch: Sketch) -> BitString:
    """Recover the sketched string from a noisy copy within per-block capacity.

    Computes syn(rho') xor u per block, decodes the word-error pattern and
    subtracts it (xor).  Raises UncorrectableBlockError naming the first
    block whose errors exceed capacity.
    """
    words = rho_prime.to_words()
    if words.size != sketch.total_words:
        raise ValueError(
            f"noisy copy has {words.size} words; sketch covers {sketch.total_words}")
    code = sketch.code
    blocks, block_count, padded = _to_blocks(words, code)
    if block_count != sketch.block_count or padded != sketch.padded_words:
        raise ValueError("block geometry mismatch against sketch")
    recovered = []
    for b in range(block_count):
        blk = blocks[b].copy()
        valid = code.n_sym if b < block_count - 1 else code.n_sym - padded
        diff = rs_syndrome(blk, code) ^ sketch.block(b)
        try:
            errors = decode_error_from_syndrome(diff, code)
        except UncorrectableBlockError as exc:
            raise UncorrectableBlockError(b, str(exc)) from None
        for p, mag in errors:
            if p >= valid:
                raise UncorrectableBlockError(
                    b, f"decoded error in zero padding (position {p})")
            blk[p] ^= mag
        recovered.append(blk[:valid])
    return BitString.from_words(np.concatenate(recovered))
