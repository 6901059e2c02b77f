from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opprelay.analysis import load_wef_tables
from opprelay.fec import (
    MOTHER_CODE,
    RS_255_239,
    ConvCodeSpec,
    FramingError,
    PuncturingPattern,
    ReedSolomonError,
    conv_encode,
    decode_message,
    default_family,
    depuncture,
    encode_message,
    incremental_bits,
    parse_puncturing_table,
    path_metric,
    puncture,
    rs_decode,
    rs_encode,
    viterbi_decode,
)
from opprelay.fec.reed_solomon import syndromes

import oracles

FAMILY = default_family()
RATES = [Fraction(4, 5), Fraction(2, 3), Fraction(4, 7), Fraction(1, 2), Fraction(1, 3)]


def noiseless_llr(bits, scale=4.0):
    return scale * (1.0 - 2.0 * np.asarray(bits, dtype=float))


# --- mother code ---------------------------------------------------------------

def test_spec_invariants():
    assert MOTHER_CODE.memory == 6
    assert MOTHER_CODE.n_outputs == 3
    assert MOTHER_CODE.mother_rate == Fraction(1, 3)
    assert sorted(MOTHER_CODE.generators) == [0o133, 0o145, 0o171]
    with pytest.raises(ValueError):
        ConvCodeSpec(7, (0o133, 0o1171, 0o145))


def test_zero_input_gives_zero_output():
    out = conv_encode(np.zeros(16, dtype=int))
    assert out.size == 66
    assert not out.any()


def test_impulse_response_matches_hand_computation():
    # single 1 through the shift register, taps read MSB first
    g133 = [1, 0, 1, 1, 0, 1, 1]
    g171 = [1, 1, 1, 1, 0, 0, 1]
    g145 = [1, 1, 0, 0, 1, 0, 1]
    expected = np.array([g133, g171, g145]).T.reshape(-1)
    np.testing.assert_array_equal(conv_encode([1]), expected)
    np.testing.assert_array_equal(MOTHER_CODE.impulse_response(), expected)


def test_encoder_matches_shift_register_oracle():
    rng = np.random.default_rng(3)
    for n in (1, 5, 33, 200):
        u = rng.integers(0, 2, n)
        np.testing.assert_array_equal(conv_encode(u), oracles.shift_register_encode(u))


def test_encode_rejects_empty_and_non_binary():
    with pytest.raises(ValueError):
        conv_encode([])
    with pytest.raises(ValueError):
        conv_encode([0, 2, 1])


def test_single_flip_changes_at_least_dfree_positions():
    # free distance of the unpunctured code, from trellis path enumeration
    # (oracles.distance_spectrum with an all-ones mask starts at d = 14)
    d_free = 14
    L = 8
    for x in product((0, 1), repeat=L):
        x = np.array(x)
        cx = conv_encode(x)
        for i in range(L):
            y = x.copy()
            y[i] ^= 1
            assert np.count_nonzero(conv_encode(y) != cx) >= d_free


# --- puncturing ----------------------------------------------------------------

def test_family_rates_and_kept_counts():
    assert FAMILY.rates == RATES
    assert [p.kept_per_period for _, p in FAMILY.members] == [10, 12, 14, 16, 24]
    assert FAMILY.period == 8


def test_rate_compatibility_superset():
    for (_, hi), (_, lo) in zip(FAMILY.members, FAMILY.members[1:]):
        assert np.all(lo.keep_mask[hi.keep_mask])


def test_mother_code_free_distance():
    spec = oracles.distance_spectrum(np.ones((3, 8), dtype=int), 16)
    assert min(spec) == 14
    assert np.count_nonzero(MOTHER_CODE.impulse_response()) == 14


def test_masks_reproduce_weight_spectra():
    tables = load_wef_tables()
    for rate in (Fraction(2, 3), Fraction(4, 5)):
        wef = tables[rate]
        spec = oracles.distance_spectrum(FAMILY.pattern(rate).keep_mask, max(wef.weights))
        assert spec == wef.weights


@pytest.mark.parametrize("rate, n_out", [("2/3", 12), ("1/3", 24), ("4/5", 10)])
def test_puncture_one_period(rate, n_out):
    x = np.arange(24) % 2
    assert puncture(x, FAMILY.pattern(rate)).size == n_out


def test_puncture_identity_at_mother_rate():
    x = np.random.default_rng(0).integers(0, 2, 48)
    np.testing.assert_array_equal(puncture(x, FAMILY.pattern("1/3")), x)


def test_puncture_framing_error():
    with pytest.raises(FramingError):
        puncture(np.zeros(30), FAMILY.pattern("2/3"))
    with pytest.raises(FramingError):
        puncture(np.zeros(25), FAMILY.pattern("2/3"), partial=True)


def test_incremental_bit_counts():
    x = np.ones(24)
    assert incremental_bits(x, "4/5", "2/3", FAMILY).size == 2
    assert incremental_bits(x, "1/2", "1/3", FAMILY).size == 8
    assert incremental_bits(x, "4/7", "4/7", FAMILY).size == 0
    with pytest.raises(ValueError):
        incremental_bits(x, "1/2", "2/3", FAMILY)
    with pytest.raises(ValueError):
        incremental_bits(x, "3/4", "1/2", FAMILY)


def test_increments_union_to_lower_rate():
    for a, b in zip(RATES, RATES[1:]):
        hi = FAMILY.pattern(a).keep_mask
        inc = FAMILY.increment(a, b).keep_mask
        assert not np.any(hi & inc)
        np.testing.assert_array_equal(hi | inc, FAMILY.pattern(b).keep_mask)


def test_depuncture_identity_and_neutral():
    r = np.random.default_rng(1).normal(size=48)
    np.testing.assert_array_equal(depuncture(r, FAMILY.pattern("1/3")), r)
    zero = depuncture(np.zeros(20), FAMILY.pattern("4/5"))
    assert zero.size == 48 and not zero.any()


def test_depuncture_accumulates_increment():
    x = np.random.default_rng(2).normal(size=24)
    first = depuncture(puncture(x, FAMILY.pattern("4/5")), FAMILY.pattern("4/5"))
    inc = FAMILY.increment("4/5", "2/3")
    both = depuncture(puncture(x, inc), inc, first)
    assert np.count_nonzero(both) == 12
    np.testing.assert_array_equal(both, np.where(FAMILY.pattern("2/3").positions(8), x, 0.0))


def test_depuncture_length_mismatch():
    with pytest.raises(FramingError):
        depuncture(np.zeros(11), FAMILY.pattern("4/5"), np.zeros(48))
    with pytest.raises(FramingError):
        depuncture(np.zeros(7), FAMILY.pattern("4/5"))


def test_partial_period_positions():
    pat = FAMILY.pattern("4/5")
    n_steps = 2046
    pos = pat.positions(n_steps)
    assert pos.size == 3 * n_steps
    x = np.arange(3 * n_steps)
    back = depuncture(puncture(x, pat, partial=True), pat, n_steps=n_steps)
    np.testing.assert_array_equal(back[pos], x[pos])


def test_parse_table_rejects_bad_rows():
    good = "4/5 11111111 10001000 00000000\n1/3 " + "1" * 24 + "\n"
    assert parse_puncturing_table(good).rates == [Fraction(4, 5), Fraction(1, 3)]
    with pytest.raises(ValueError):
        parse_puncturing_table("4/5 1111111x 10001000 00000000\n")
    with pytest.raises(ValueError):
        # rate 1/2 mask that drops a bit kept by 4/5
        parse_puncturing_table("4/5 11111111 10001000 00000000\n"
                               "1/2 11111111 01110111 00000000\n")
    with pytest.raises(ValueError):
        PuncturingPattern(np.ones(8))


# --- Viterbi -----------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=9, max_size=120), st.sampled_from(RATES))
def test_noiseless_round_trip(bits, rate):
    u = np.array(bits)
    c = conv_encode(u)
    pat = FAMILY.pattern(rate)
    n_steps = u.size + MOTHER_CODE.memory
    soft = depuncture(noiseless_llr(puncture(c, pat, partial=True)), pat, n_steps=n_steps)
    np.testing.assert_array_equal(viterbi_decode(soft), u)


def test_viterbi_corrects_a_few_hard_flips():
    rng = np.random.default_rng(11)
    u = rng.integers(0, 2, 300)
    llr = noiseless_llr(conv_encode(u))
    flips = rng.choice(llr.size, 12, replace=False)
    llr[flips] *= -1
    np.testing.assert_array_equal(viterbi_decode(llr), u)


def test_viterbi_metric_is_ml():
    rng = np.random.default_rng(5)
    u = rng.integers(0, 2, 60)
    c = conv_encode(u)
    soft = noiseless_llr(c, 1.0) + rng.normal(0, 1.2, c.size)
    bits, metric = viterbi_decode(soft, return_metric=True)
    assert metric == pytest.approx(path_metric(soft, conv_encode(bits)))
    # no other codeword nearby beats it
    for _ in range(50):
        v = bits.copy()
        v[rng.integers(v.size)] ^= 1
        assert path_metric(soft, conv_encode(v)) <= metric + 1e-9


def test_viterbi_rejects_bad_lengths():
    with pytest.raises(ValueError):
        viterbi_decode(np.zeros(10))
    with pytest.raises(ValueError):
        viterbi_decode(np.zeros(18))


def test_code_combining_monotone():
    rng = np.random.default_rng(8)
    u = rng.integers(0, 2, 2040)
    c = conv_encode(u)
    noise = rng.normal(0, 1, c.size)
    llr = 2.0 * (1.0 - 2.0 * c + noise)
    acc = np.zeros(c.size)
    prev = -np.inf
    for j in range(len(FAMILY)):
        where = FAMILY.round_pattern(j).positions(c.size // 3)
        acc[where] += llr[where]
        m = path_metric(acc, c)
        assert m >= prev
        prev = m


# --- Reed-Solomon ---------------------------------------------------------------

def test_rs_codewords_vanish_at_generator_roots():
    msg = np.random.default_rng(0).integers(0, 256, 239)
    cw = rs_encode(msg)
    np.testing.assert_array_equal(cw[:239], msg)
    for i in range(16):
        assert oracles.gf256_poly_eval(cw, oracles.gf256_pow(2, i)) == 0
    assert not syndromes(cw).any()


def test_rs_spec():
    assert RS_255_239.t_correct == 8
    assert RS_255_239.n_parity == 16


def test_rs_zero_errors_identity():
    msg = np.random.default_rng(1).integers(0, 256, 239)
    out, count = rs_decode(rs_encode(msg))
    np.testing.assert_array_equal(out, msg)
    assert count == 0


def test_rs_eight_errors_corrected():
    rng = np.random.default_rng(2)
    for _ in range(50):
        msg = rng.integers(0, 256, 239)
        cw = rs_encode(msg).astype(int)
        pos = rng.choice(255, 8, replace=False)
        cw[pos] ^= rng.integers(1, 256, 8)
        out, count = rs_decode(cw)
        np.testing.assert_array_equal(out, msg)
        assert count == 8


def test_rs_nine_errors_mostly_flagged():
    rng = np.random.default_rng(3)
    flagged = 0
    for _ in range(200):
        cw = rs_encode(rng.integers(0, 256, 239)).astype(int)
        pos = rng.choice(255, 9, replace=False)
        cw[pos] ^= rng.integers(1, 256, 9)
        try:
            rs_decode(cw)
        except ReedSolomonError:
            flagged += 1
    assert flagged >= 195


def test_rs_input_validation():
    with pytest.raises(ValueError):
        rs_encode(np.zeros(238))
    with pytest.raises(ValueError):
        rs_decode(np.full(255, 300))


# --- concatenated chain -----------------------------------------------------------

def test_chain_block_sizes():
    msg = np.random.default_rng(4).integers(0, 256, 239)
    inner, cw = encode_message(msg)
    assert inner.size == 255 * 8 == 2040
    assert cw.size == 3 * (2040 + 6)


def test_chain_recovers_through_few_symbol_errors():
    rng = np.random.default_rng(6)
    msg = rng.integers(0, 256, 239)
    inner, cw = encode_message(msg)
    llr = noiseless_llr(cw)
    # wipe out a burst the inner code cannot fix; RS absorbs the damage
    llr[300:330] = -llr[300:330]
    got, bits = decode_message(llr)
    assert np.count_nonzero(bits != inner) > 0
    np.testing.assert_array_equal(got, msg)


def test_chain_flags_failure():
    rng = np.random.default_rng(7)
    _, cw = encode_message(rng.integers(0, 256, 239))
    got, _ = decode_message(rng.normal(size=cw.size))
    assert got is None
