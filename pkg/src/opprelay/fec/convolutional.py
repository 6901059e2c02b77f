"""Feed-forward convolutional mother code.

Generator taps are written in octal with the most significant tap applied to
the current input bit, so ``0o133 = 1 011 011`` reads "current input, then
delays 2, 3, 5, 6".  Encoder output is serialized step-major: for every input
bit the outputs of all generators are emitted in generator order.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class ConvCodeSpec:
    constraint_length: int = 7
    generators: tuple[int, ...] = (0o133, 0o171, 0o145)

    def __post_init__(self):
        if self.constraint_length < 2:
            raise ValueError("constraint_length must be at least 2")
        if len(self.generators) != 3:
            raise ValueError("the mother code uses exactly three generators")
        for g in self.generators:
            if g <= 0 or g >> self.constraint_length:
                raise ValueError(
                    f"generator {g:o} does not fit in {self.constraint_length} taps"
                )

    @property
    def memory(self) -> int:
        return self.constraint_length - 1

    @property
    def n_outputs(self) -> int:
        return len(self.generators)

    @property
    def n_states(self) -> int:
        return 1 << self.memory

    @property
    def mother_rate(self) -> Fraction:
        return Fraction(1, self.n_outputs)

    def taps(self) -> np.ndarray:
        """Tap matrix of shape (n_outputs, K); column j multiplies the input delayed by j."""
        K = self.constraint_length
        return np.array(
            [[(g >> (K - 1 - j)) & 1 for j in range(K)] for g in self.generators],
            dtype=np.uint8,
        )

    def impulse_response(self) -> np.ndarray:
        """Serialized encoder output for a single 1 followed by the zero tail."""
        return self.taps().T.reshape(-1).copy()


MOTHER_CODE = ConvCodeSpec()


def conv_encode(info_bits, spec: ConvCodeSpec = MOTHER_CODE) -> np.ndarray:
    """Encode and terminate with ``spec.memory`` zero tail bits.

    Returns ``n_outputs * (len(info_bits) + memory)`` bits, step-major.
    """
    u = np.asarray(info_bits, dtype=np.uint8).reshape(-1)
    if u.size == 0:
        raise ValueError("cannot encode an empty message")
    if np.any(u > 1):
        raise ValueError("info_bits must be 0/1")
    u = np.concatenate([u, np.zeros(spec.memory, dtype=np.uint8)])
    taps = spec.taps().astype(np.int64)
    out = np.empty((u.size, spec.n_outputs), dtype=np.uint8)
    for k in range(spec.n_outputs):
        out[:, k] = np.convolve(u, taps[k])[: u.size] & 1
    return out.reshape(-1)
