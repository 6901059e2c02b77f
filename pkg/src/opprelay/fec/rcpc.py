"""Rate-compatible puncturing of the mother code.

A puncturing pattern is a (n_outputs x period) keep-mask applied cyclically
along the trellis.  A terminated codeword generally does not span a whole
number of periods (2040 info bits + 6 tail bits = 2046 steps), so the
codeword-level helpers accept a trailing partial period; the bare
``puncture``/``depuncture`` calls insist on whole periods unless told
otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .convolutional import MOTHER_CODE, ConvCodeSpec


class FramingError(ValueError):
    """Bit or metric sequence does not line up with a puncturing pattern."""


@dataclass(frozen=True, eq=False)
class PuncturingPattern:
    keep_mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.keep_mask, dtype=bool)
        if mask.ndim != 2:
            raise ValueError("keep_mask must be 2-D (n_outputs x period)")
        mask.setflags(write=False)
        object.__setattr__(self, "keep_mask", mask)

    @property
    def n_outputs(self) -> int:
        return self.keep_mask.shape[0]

    @property
    def period(self) -> int:
        return self.keep_mask.shape[1]

    @property
    def kept_per_period(self) -> int:
        return int(self.keep_mask.sum())

    @property
    def rate(self) -> Fraction:
        return Fraction(self.period, self.kept_per_period)

    def positions(self, n_steps: int) -> np.ndarray:
        """Flat boolean keep-mask over ``n_steps`` trellis steps (step-major)."""
        reps = -(-n_steps // self.period)
        return np.tile(self.keep_mask, reps)[:, :n_steps].T.reshape(-1)

    def kept_count(self, n_steps: int) -> int:
        return int(self.positions(n_steps).sum())

    def __eq__(self, other):
        return isinstance(other, PuncturingPattern) and np.array_equal(
            self.keep_mask, other.keep_mask
        )

    def __hash__(self):
        return hash(self.keep_mask.tobytes())


def _n_steps(length: int, pattern: PuncturingPattern, partial: bool) -> int:
    if length % pattern.n_outputs:
        raise FramingError(f"{length} bits is not a whole number of trellis steps")
    steps = length // pattern.n_outputs
    if not partial and steps % pattern.period:
        raise FramingError(
            f"{length} bits is not a multiple of {pattern.n_outputs * pattern.period}"
        )
    return steps


def puncture(mother_bits, pattern: PuncturingPattern, *, partial: bool = False) -> np.ndarray:
    x = np.asarray(mother_bits).reshape(-1)
    steps = _n_steps(x.size, pattern, partial)
    return x[pattern.positions(steps)]


def depuncture(received, pattern: PuncturingPattern, accumulated=None, *,
               n_steps: int | None = None) -> np.ndarray:
    """Place soft metrics back on the mother-code grid.

    Untransmitted positions get the neutral metric 0.  When ``accumulated``
    is given (a previous depunctured word), the new metrics are added to it,
    which is code combining.  ``n_steps`` is needed only when there is no
    accumulator and the word does not cover whole periods.
    """
    r = np.asarray(received, dtype=float).reshape(-1)
    if accumulated is not None:
        acc = np.asarray(accumulated, dtype=float).reshape(-1)
        steps = _n_steps(acc.size, pattern, partial=True)
        if n_steps is not None and n_steps != steps:
            raise FramingError("n_steps disagrees with the accumulated word")
        out = acc.copy()
    else:
        if n_steps is None:
            if r.size % pattern.kept_per_period:
                raise FramingError("cannot infer codeword length; pass n_steps")
            n_steps = r.size // pattern.kept_per_period * pattern.period
        steps = n_steps
        out = np.zeros(steps * pattern.n_outputs)
    where = pattern.positions(steps)
    if where.sum() != r.size:
        raise FramingError(
            f"expected {int(where.sum())} metrics for this pattern, got {r.size}"
        )
    out[where] += r
    return out


@dataclass(frozen=True)
class RcpcFamily:
    """Mother code plus its punctured members, highest rate first."""

    spec: ConvCodeSpec
    members: tuple[tuple[Fraction, PuncturingPattern], ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rates = [r for r, _ in self.members]
        if any(a <= b for a, b in zip(rates, rates[1:])):
            raise ValueError("family rates must be strictly decreasing")
        periods = {p.period for _, p in self.members}
        if len(periods) != 1:
            raise ValueError("all members must share one puncturing period")
        for rate, pat in self.members:
            if pat.n_outputs != self.spec.n_outputs:
                raise ValueError("pattern rows must match the generator count")
            if pat.rate != rate:
                raise ValueError(f"pattern for {rate} actually has rate {pat.rate}")
        for (r0, p0), (r1, p1) in zip(self.members, self.members[1:]):
            if np.any(p0.keep_mask & ~p1.keep_mask):
                raise ValueError(f"rate {r1} does not contain every bit of rate {r0}")
        object.__setattr__(self, "_index", {r: i for i, r in enumerate(rates)})

    @property
    def rates(self) -> list[Fraction]:
        return [r for r, _ in self.members]

    @property
    def period(self) -> int:
        return self.members[0][1].period

    def __len__(self):
        return len(self.members)

    def index(self, rate) -> int:
        rate = Fraction(rate)
        try:
            return self._index[rate]
        except KeyError:
            raise ValueError(f"rate {rate} is not in the family {self.rates}") from None

    def pattern(self, rate) -> PuncturingPattern:
        return self.members[self.index(rate)][1]

    def increment(self, from_rate, to_rate) -> PuncturingPattern:
        """Mask of the bits that ``to_rate`` adds on top of ``from_rate``."""
        i, j = self.index(from_rate), self.index(to_rate)
        if i > j:
            raise ValueError(f"cannot step from rate {from_rate} up to {to_rate}")
        new = self.members[j][1].keep_mask & ~self.members[i][1].keep_mask
        return PuncturingPattern(new)

    def round_pattern(self, round_index: int) -> PuncturingPattern:
        """Bits sent in HARQ round ``round_index`` (0-based)."""
        if round_index == 0:
            return self.members[0][1]
        return self.increment(self.members[round_index - 1][0], self.members[round_index][0])


def incremental_bits(mother_bits, from_rate, to_rate, family: RcpcFamily, *,
                     partial: bool = False) -> np.ndarray:
    return puncture(mother_bits, family.increment(from_rate, to_rate), partial=partial)


def parse_puncturing_table(text: str, spec: ConvCodeSpec = MOTHER_CODE) -> RcpcFamily:
    members = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        rate_tok, *mask_toks = line.split()
        try:
            rate = Fraction(rate_tok)
        except ValueError:
            raise ValueError(f"line {lineno}: bad rate {rate_tok!r}") from None
        bits = "".join(mask_toks)
        if not bits or set(bits) - {"0", "1"} or len(bits) % spec.n_outputs:
            raise ValueError(f"line {lineno}: mask must be {spec.n_outputs} rows of 0/1")
        mask = np.array([int(b) for b in bits], dtype=bool).reshape(spec.n_outputs, -1)
        members.append((rate, PuncturingPattern(mask)))
    if not members:
        raise ValueError("puncturing table is empty")
    return RcpcFamily(spec, tuple(members))


def load_puncturing_table(path=None, spec: ConvCodeSpec = MOTHER_CODE) -> RcpcFamily:
    """Read a puncturing table; ``None`` loads the bundled memory-6, period-8 family."""
    if path is None:
        text = resources.files("opprelay").joinpath("data", "puncturing.txt").read_text()
    else:
        text = Path(path).read_text()
    return parse_puncturing_table(text, spec)


_DEFAULT_FAMILY = None


def default_family() -> RcpcFamily:
    global _DEFAULT_FAMILY
    if _DEFAULT_FAMILY is None:
        _DEFAULT_FAMILY = load_puncturing_table()
    return _DEFAULT_FAMILY
