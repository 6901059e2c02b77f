"""Soft-decision Viterbi decoding of the terminated mother code.

Soft inputs are log-likelihood ratios ``log P(b=0)/P(b=1)``; a punctured
(never received) position carries exactly 0.  The path metric credits each
position with ``|L|`` when the path bit agrees with the sign of ``L`` and 0
otherwise.  That differs from plain correlation only by the path-independent
constant ``sum(|L|)/2``, so decisions are ML, and the metric of any fixed
path can only grow as more positions are combined in.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numba import njit

from .convolutional import MOTHER_CODE, ConvCodeSpec


@lru_cache(maxsize=None)
def _trellis(spec: ConvCodeSpec):
    M, n_out = spec.memory, spec.n_outputs
    n_states = spec.n_states
    prev_state = np.empty((n_states, 2), dtype=np.int64)
    prev_out = np.empty((n_states, 2), dtype=np.int64)
    for ns in range(n_states):
        b = ns >> (M - 1)
        for x in range(2):
            s = ((ns << 1) & (n_states - 1)) | x
            reg = (b << M) | s
            o = 0
            for k, g in enumerate(spec.generators):
                o |= (bin(reg & g).count("1") & 1) << k
            prev_state[ns, x] = s
            prev_out[ns, x] = o
    # signs[o, k] = +1 when output symbol o has bit k == 0
    signs = np.array(
        [[1.0 - 2.0 * ((o >> k) & 1) for k in range(n_out)] for o in range(1 << n_out)]
    )
    return prev_state, prev_out, signs


@njit(cache=True)
def _viterbi_kernel(bm, prev_out, memory):
    # states j and j + n/2 share the predecessors 2j and 2j + 1 (butterfly)
    T = bm.shape[0]
    n = 1 << memory
    half = n >> 1
    pm = np.full(n, -1e300)
    pm[0] = 0.0
    nxt = np.empty(n)
    dec = np.empty((T, n), dtype=np.uint8)
    for t in range(T):
        row = bm[t]
        for j in range(half):
            a = pm[2 * j]
            b = pm[2 * j + 1]
            for ns in (j, j + half):
                m0 = a + row[prev_out[ns, 0]]
                m1 = b + row[prev_out[ns, 1]]
                if m1 > m0:
                    nxt[ns] = m1
                    dec[t, ns] = 1
                else:
                    nxt[ns] = m0
                    dec[t, ns] = 0
        tmp = pm
        pm = nxt
        nxt = tmp
    bits = np.empty(T, dtype=np.uint8)
    s = 0
    for t in range(T - 1, -1, -1):
        bits[t] = s >> (memory - 1)
        s = ((s << 1) & (n - 1)) | dec[t, s]
    return bits, pm[0]


def _branch_metrics(soft, spec):
    llr = np.asarray(soft, dtype=float).reshape(-1)
    if llr.size % spec.n_outputs:
        raise ValueError("soft word length must be a multiple of the generator count")
    llr = llr.reshape(-1, spec.n_outputs)
    if llr.shape[0] <= spec.memory:
        raise ValueError("soft word is shorter than the termination tail")
    _, _, signs = _trellis(spec)
    return 0.5 * (np.abs(llr).sum(axis=1)[:, None] + llr @ signs.T)


def viterbi_decode(soft, spec: ConvCodeSpec = MOTHER_CODE, *, return_metric: bool = False):
    """ML decode a depunctured soft word; the tail is stripped from the result.

    The survivor is forced to end in the all-zero state.
    """
    bm = _branch_metrics(soft, spec)
    _, prev_out, _ = _trellis(spec)
    bits, metric = _viterbi_kernel(bm, prev_out, spec.memory)
    bits = bits[: bm.shape[0] - spec.memory]
    if return_metric:
        return bits, float(metric)
    return bits


def path_metric(soft, codeword_bits) -> float:
    """Metric the decoder assigns to a given mother codeword."""
    llr = np.asarray(soft, dtype=float).reshape(-1)
    c = np.asarray(codeword_bits).reshape(-1)
    if c.size != llr.size:
        raise ValueError("codeword and soft word lengths differ")
    s = 1.0 - 2.0 * c
    return float(0.5 * np.sum(np.abs(llr) + s * llr))
