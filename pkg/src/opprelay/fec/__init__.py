"""Concatenated coding chain: RS(255,239) outer code, RCPC inner code."""
from .convolutional import MOTHER_CODE, ConvCodeSpec, conv_encode
from .rcpc import (
    FramingError,
    PuncturingPattern,
    RcpcFamily,
    default_family,
    depuncture,
    incremental_bits,
    load_puncturing_table,
    parse_puncturing_table,
    puncture,
)
from .reed_solomon import RS_255_239, ReedSolomonError, RsCodeSpec, rs_decode, rs_encode
from .viterbi import path_metric, viterbi_decode

__all__ = [
    "MOTHER_CODE",
    "ConvCodeSpec",
    "conv_encode",
    "FramingError",
    "PuncturingPattern",
    "RcpcFamily",
    "default_family",
    "depuncture",
    "incremental_bits",
    "load_puncturing_table",
    "parse_puncturing_table",
    "puncture",
    "RS_255_239",
    "ReedSolomonError",
    "RsCodeSpec",
    "rs_decode",
    "rs_encode",
    "path_metric",
    "viterbi_decode",
    "encode_message",
    "decode_message",
]

from .chain import decode_message, encode_message  # noqa: E402
