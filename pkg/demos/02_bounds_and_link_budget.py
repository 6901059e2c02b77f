# Link budget and analytic bounds
#
# Nodes share one transmit energy. Path loss follows a log-distance law with
# exponent 3 from a 1 m free-space reference at 2.4 GHz, so the mean SNR
# falls by about 9 dB each time the distance doubles. Fading is Rayleigh,
# which makes the instantaneous SNR exponential around that mean.

import numpy as np

from opprelay.analysis import (
    ber_union_bound,
    packet_success_lower_bound,
    rayleigh_snr_cdf,
    wef_table,
)
from opprelay.channel import LinkBudget, db_to_linear, linear_to_db

budget = LinkBudget.from_energy_db(101.0)
for d in (25.0, 50.0, 75.0, 100.0):
    print(f"{d:5.0f} m: mean SNR {float(linear_to_db(budget.mean_snr(d))):6.2f} dB")

# Union bound on the bit error rate of the rate-2/3 code under hard decisions.
# Below roughly 1 dB the bound exceeds 1 and says nothing.
w23 = wef_table("2/3")
print()
for snr_db in (0.0, 2.0, 3.0, 4.7, 6.0):
    pb = float(ber_union_bound(float(db_to_linear(snr_db)), w23))
    note = "  (vacuous)" if pb >= 1 else ""
    print(f"Pb bound at {snr_db:4.1f} dB: {pb:.3e}{note}")

# Lower bound on decoding a whole 2046-step block at rate 4/5
w45 = wef_table("4/5")
for snr in (5.0, float(db_to_linear(19.0))):
    p = packet_success_lower_bound(snr, w45)
    print(f"P(block ok) >= {p.value:.6f} at SNR {snr:.1f}")

# How often a link at 4.7 dB mean SNR drops below SNR 2
print(f"\nPr(SNR < 2 | mean 4.7 dB) = {float(rayleigh_snr_cdf(2.0, db_to_linear(4.7))):.3f}")
print(f"Pr(SNR < mean) = {float(rayleigh_snr_cdf(1.0, 1.0)):.3f}")
