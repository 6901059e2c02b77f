"""Systematic (255, 239) Reed-Solomon code over GF(2^8).

Field generated by x^8 + x^4 + x^3 + x^2 + 1 (0x11D) with primitive element
alpha = 2; the generator polynomial has roots alpha^0 .. alpha^15.  Codewords
are stored highest-degree coefficient first, message symbols leading.
Decoding is syndromes -> Berlekamp-Massey -> Chien search -> Forney.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PRIMITIVE_POLY = 0x11D


class ReedSolomonError(Exception):
    """The received word is not within the correction radius."""


def _build_tables(prim: int):
    exp = np.zeros(512, dtype=np.int64)
    log = np.zeros(256, dtype=np.int64)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= prim
    exp[255:510] = exp[:255]
    return exp, log


GF_EXP, GF_LOG = _build_tables(PRIMITIVE_POLY)


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return int(GF_EXP[GF_LOG[a] + GF_LOG[b]])


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by zero in GF(256)")
    if a == 0:
        return 0
    return int(GF_EXP[(GF_LOG[a] - GF_LOG[b]) % 255])


def gf_pow(a: int, n: int) -> int:
    if a == 0:
        return 0 if n else 1
    return int(GF_EXP[(GF_LOG[a] * n) % 255])


def _poly_eval_many(coeffs_low_first, xs):
    """Evaluate one polynomial (ascending coefficients) at many field points."""
    xs = np.asarray(xs, dtype=np.int64)
    acc = np.zeros(xs.shape, dtype=np.int64)
    nz = xs != 0
    logx = GF_LOG[xs[nz]]
    for c in reversed(coeffs_low_first):
        # acc = acc * x + c
        prod = np.zeros(xs.shape, dtype=np.int64)
        a = acc[nz]
        m = a != 0
        tmp = np.zeros(a.shape, dtype=np.int64)
        tmp[m] = GF_EXP[GF_LOG[a[m]] + logx[m]]
        prod[nz] = tmp
        acc = prod ^ c
    return acc


@dataclass(frozen=True)
class RsCodeSpec:
    n_symbols: int = 255
    k_symbols: int = 239

    def __post_init__(self):
        if not 0 < self.k_symbols < self.n_symbols <= 255:
            raise ValueError("need 0 < k < n <= 255")
        if (self.n_symbols - self.k_symbols) % 2:
            raise ValueError("n - k must be even")

    @property
    def n_parity(self) -> int:
        return self.n_symbols - self.k_symbols

    @property
    def t_correct(self) -> int:
        return self.n_parity // 2

    def generator(self) -> np.ndarray:
        """Generator polynomial, highest degree first."""
        g = [1]
        for i in range(self.n_parity):
            root = int(GF_EXP[i])
            nxt = [0] * (len(g) + 1)
            for j, c in enumerate(g):
                nxt[j] ^= c
                nxt[j + 1] ^= gf_mul(c, root)
            g = nxt
        return np.array(g, dtype=np.int64)


RS_255_239 = RsCodeSpec()


def _check_symbols(x, size, what):
    x = np.asarray(x).reshape(-1)
    if x.size != size:
        raise ValueError(f"{what} must have {size} symbols, got {x.size}")
    if x.size and (x.min() < 0 or x.max() > 255):
        raise ValueError(f"{what} symbols must lie in 0..255")
    return x.astype(np.int64)


def rs_encode(message, spec: RsCodeSpec = RS_255_239) -> np.ndarray:
    msg = _check_symbols(message, spec.k_symbols, "message")
    g = spec.generator()
    log_g = GF_LOG[g[1:]]
    rem = np.zeros(spec.n_parity, dtype=np.int64)
    for m in msg:
        fb = int(m ^ rem[0])
        rem[:-1] = rem[1:]
        rem[-1] = 0
        if fb:
            rem ^= GF_EXP[GF_LOG[fb] + log_g]
    return np.concatenate([msg, rem]).astype(np.uint8)


def syndromes(word, spec: RsCodeSpec = RS_255_239) -> np.ndarray:
    r = _check_symbols(word, spec.n_symbols, "codeword")
    idx = np.nonzero(r)[0]
    if idx.size == 0:
        return np.zeros(spec.n_parity, dtype=np.int64)
    degree = spec.n_symbols - 1 - idx
    i = np.arange(spec.n_parity)[:, None]
    terms = GF_EXP[(GF_LOG[r[idx]][None, :] + i * degree[None, :]) % 255]
    return np.bitwise_xor.reduce(terms, axis=1)


def _berlekamp_massey(S):
    lam = [1]
    prev = [1]
    L, m, b = 0, 1, 1
    for n in range(len(S)):
        d = int(S[n])
        for i in range(1, L + 1):
            if i < len(lam):
                d ^= gf_mul(lam[i], int(S[n - i]))
        if d == 0:
            m += 1
            continue
        coef = gf_div(d, b)
        shifted = [0] * m + [gf_mul(coef, c) for c in prev]
        new = lam + [0] * max(0, len(shifted) - len(lam))
        for i, c in enumerate(shifted):
            new[i] ^= c
        if 2 * L <= n:
            prev, L, b, m = lam, n + 1 - L, d, 1
        else:
            m += 1
        lam = new
    while len(lam) > 1 and lam[-1] == 0:
        lam.pop()
    return lam, L


def rs_decode(word, spec: RsCodeSpec = RS_255_239) -> tuple[np.ndarray, int]:
    """Return ``(message, corrected_count)``; raise ReedSolomonError on failure."""
    r = _check_symbols(word, spec.n_symbols, "codeword")
    S = syndromes(r, spec)
    if not S.any():
        return r[: spec.k_symbols].astype(np.uint8), 0

    lam, L = _berlekamp_massey(S)
    if L > spec.t_correct or len(lam) - 1 != L:
        raise ReedSolomonError("too many errors to locate")

    # Chien search: position p (degree) is in error iff lam(alpha^-p) == 0
    degrees = np.arange(spec.n_symbols)
    inv_x = GF_EXP[(255 - degrees) % 255]
    vals = _poly_eval_many(lam, inv_x)
    err_deg = degrees[vals == 0]
    if err_deg.size != L:
        raise ReedSolomonError("error locator does not split over the code positions")

    # Forney with first consecutive root alpha^0: e = X * omega(X^-1) / lam'(X^-1)
    omega = [0] * spec.n_parity
    for i, s in enumerate(S):
        if s:
            for j, c in enumerate(lam):
                if i + j < spec.n_parity:
                    omega[i + j] ^= gf_mul(int(s), c)
    dlam = [lam[i] if i % 2 else 0 for i in range(1, len(lam))]
    corrected = r.copy()
    for p in err_deg:
        X = int(GF_EXP[p])
        Xinv = int(GF_EXP[(255 - p) % 255])
        num = int(_poly_eval_many(omega, [Xinv])[0])
        den = int(_poly_eval_many(dlam, [Xinv])[0])
        if den == 0:
            raise ReedSolomonError("degenerate error locator derivative")
        mag = gf_mul(X, gf_div(num, den))
        corrected[spec.n_symbols - 1 - p] ^= mag

    if syndromes(corrected, spec).any():
        raise ReedSolomonError("correction did not produce a codeword")
    return corrected[: spec.k_symbols].astype(np.uint8), int(L)
