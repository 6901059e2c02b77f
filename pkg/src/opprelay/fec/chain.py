"""Outer RS + inner convolutional code, as one message <-> mother-codeword map."""
from __future__ import annotations

import numpy as np

from .convolutional import MOTHER_CODE, ConvCodeSpec, conv_encode
from .reed_solomon import RS_255_239, ReedSolomonError, RsCodeSpec, rs_decode, rs_encode
from .viterbi import viterbi_decode


def encode_message(message, rs: RsCodeSpec = RS_255_239, spec: ConvCodeSpec = MOTHER_CODE):
    """239 message bytes -> (2040 inner info bits, terminated mother codeword)."""
    inner = np.unpackbits(rs_encode(message, rs))
    return inner, conv_encode(inner, spec)


def decode_message(soft, rs: RsCodeSpec = RS_255_239, spec: ConvCodeSpec = MOTHER_CODE):
    """Return ``(message or None, inner decoded bits)``.

    ``None`` means the outer decoder flagged a failure, i.e. the receiver NACKs.
    """
    inner = viterbi_decode(soft, spec)
    try:
        message, _ = rs_decode(np.packbits(inner), rs)
    except ReedSolomonError:
        return None, inner
    return message, inner
