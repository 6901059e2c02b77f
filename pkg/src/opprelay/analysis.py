"""Closed-form error and throughput expressions.

The BER bound is the union bound over the bit weight enumerator of a
punctured code, evaluated with the hard-decision Bhattacharyya parameter of
a BSC whose crossover probability is the coherent BPSK error rate.  Only the
listed spectrum terms are summed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.special import erfc

BLOCK_BITS = 2040  # 255 RS symbols x 8 bits entering the inner encoder
MEMORY = 6
PERIOD = 8


def q_function(x):
    """Gaussian tail probability Pr(N(0,1) > x)."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def bpsk_error_prob(snr):
    return q_function(np.sqrt(2.0 * np.asarray(snr, dtype=float)))


def bhattacharyya_factor(snr):
    """``2 sqrt(p (1-p))`` with ``p = Q(sqrt(2 snr))``."""
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0):
        raise ValueError("snr must be non-negative")
    p = bpsk_error_prob(snr)
    out = 2.0 * np.sqrt(p * (1.0 - p))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class WefTable:
    rate: Fraction
    weights: dict[int, int]
    period: int = PERIOD
    d_free: int = field(init=False)

    def __post_init__(self):
        if not self.weights:
            raise ValueError("WEF table has no terms")
        if any(c < 0 or int(c) != c for c in self.weights.values()):
            raise ValueError("c_d must be non-negative integers")
        w = {int(d): int(c) for d, c in sorted(self.weights.items()) if c}
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "d_free", min(w))


def ber_union_bound(snr, wef: WefTable):
    """``(1/P) sum_d c_d z^d`` with the hard-decision Bhattacharyya parameter ``z``.

    Values above 1 are returned unchanged; see ``is_vacuous``.
    """
    z = np.asarray(bhattacharyya_factor(snr), dtype=float)
    total = np.zeros_like(z)
    for d, c in wef.weights.items():
        total = total + c * z**d
    out = total / wef.period
    return float(out) if out.ndim == 0 else out


def is_vacuous(bound) -> bool:
    return bool(np.asarray(bound) >= 1.0)


class PacketBound(NamedTuple):
    value: float
    vacuous: bool


def packet_success_lower_bound(snr, wef: WefTable, n: int = BLOCK_BITS,
                               memory: int = MEMORY) -> PacketBound:
    """``(1 - Pb)^(n+M)`` with ``Pb`` the union bound, clamped to [0, 1]."""
    pb = ber_union_bound(snr, wef)
    if pb >= 1.0:
        return PacketBound(0.0, True)
    return PacketBound(float((1.0 - pb) ** (n + memory)), False)


def rayleigh_snr_cdf(threshold, mean):
    """Pr(snr < threshold) for exponentially distributed snr of the given mean."""
    mean = np.asarray(mean, dtype=float)
    if np.any(mean <= 0):
        raise ValueError("mean must be positive")
    out = -np.expm1(-np.asarray(threshold, dtype=float) / mean)
    return float(out) if np.ndim(out) == 0 else out


def contention_success_prob(n_eligible: int, p: float) -> float:
    """Probability that exactly one of ``n_eligible`` relays speaks in a minislot."""
    if n_eligible < 0:
        raise ValueError("n_eligible must be non-negative")
    if n_eligible == 0:
        return 0.0
    return n_eligible * p * (1.0 - p) ** (n_eligible - 1)


@dataclass
class ThroughputCounts:
    coded_bits: np.ndarray
    info_bits: int = 239 * 8
    n: int = BLOCK_BITS
    memory: int = MEMORY
    period: int = PERIOD
    successes: int | None = None

    def __post_init__(self):
        self.coded_bits = np.asarray(self.coded_bits, dtype=float).reshape(-1)
        if np.any(self.coded_bits < 0):
            raise ValueError("coded bit counts must be non-negative")


def average_extra_bits(counts: ThroughputCounts) -> float:
    """l_AV: additional coded bits per ``period`` information bits beyond rate 1."""
    if counts.coded_bits.size == 0:
        raise ValueError("no episodes to average")
    mean_bits = counts.coded_bits.mean()
    return counts.period * mean_bits / (counts.n + counts.memory) - counts.period


def effective_throughput(counts: ThroughputCounts) -> float:
    """R_avg = k/(n+M) * P/(P + l_AV)."""
    l_av = average_extra_bits(counts)
    return counts.info_bits / (counts.n + counts.memory) * counts.period / (counts.period + l_av)


def parse_wef_table(text: str) -> dict[Fraction, WefTable]:
    rows: dict[Fraction, dict[int, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'rate d c_d'")
        try:
            rate, d, c = Fraction(parts[0]), int(parts[1]), int(parts[2])
        except ValueError:
            raise ValueError(f"line {lineno}: cannot parse {line!r}") from None
        rows.setdefault(rate, {})[d] = c
    return {r: WefTable(r, w) for r, w in rows.items()}


def load_wef_tables(path=None) -> dict[Fraction, WefTable]:
    if path is None:
        text = resources.files("opprelay").joinpath("data", "wef.txt").read_text()
    else:
        text = Path(path).read_text()
    return parse_wef_table(text)


def wef_table(rate, path=None) -> WefTable:
    tables = load_wef_tables(path)
    try:
        return tables[Fraction(rate)]
    except KeyError:
        known = ", ".join(str(r) for r in sorted(tables))
        raise ValueError(f"no WEF table for rate {rate} (have {known})") from None
