# Coding chain walk-through
#
# A 239-byte message is protected twice: an outer RS(255,239) code over
# GF(256), then an inner K=7 rate-1/3 convolutional code that the
# rate-compatible family punctures down to rate 4/5 for the first
# transmission. Each retransmission sends only the bits that the next lower
# rate adds.

import numpy as np

from opprelay.fec import (
    decode_message,
    default_family,
    depuncture,
    encode_message,
    puncture,
)

rng = np.random.default_rng(1)
family = default_family()

# The family, highest rate first, with the number of coded bits each round adds
n_steps = 2040 + 6
for j, rate in enumerate(family.rates):
    added = family.round_pattern(j).kept_count(n_steps)
    print(f"round {j + 1}: rate {rate}, sends {added} coded bits")

# Encode one message
message = rng.integers(0, 256, 239)
inner, codeword = encode_message(message)
print(f"\n{message.size} bytes -> {inner.size} RS bits -> {codeword.size} mother-code bits")

# Send it over a noisy channel at rate 4/5 and try to decode.
# Soft values are LLRs: positive means bit 0.
snr = 1.5
sigma = np.sqrt(1 / (2 * snr))
y = (1.0 - 2.0 * codeword) + sigma * rng.standard_normal(codeword.size)
llr = 4 * snr * y

pattern = family.pattern(family.rates[0])
soft = depuncture(puncture(llr, pattern, partial=True), pattern, n_steps=n_steps)
got, _ = decode_message(soft)
print("decoded at rate 4/5:", got is not None and np.array_equal(got, message))

# Decode again with the rate-2/3 bits: the first-round bits plus the increment.
# Positions never sent stay at zero, which means "no information".
pattern = family.pattern(family.rates[1])
soft = depuncture(puncture(llr, pattern, partial=True), pattern, n_steps=n_steps)
got, _ = decode_message(soft)
print("decoded at rate 2/3:", got is not None and np.array_equal(got, message))
