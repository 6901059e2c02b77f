# Minislot contention
#
# After a NACK, every relay that decoded the message and sees a strong enough
# channel to the destination may answer. In each minislot each eligible relay
# says "Hello" with probability p. A minislot with exactly one speaker yields a
# winner. The chance of that is n p (1 - p)^(n - 1).

import numpy as np

from opprelay.analysis import contention_success_prob
from opprelay.protocol import ContentionConfig, run_contention

rng = np.random.default_rng(3)
cfg = ContentionConfig(minislots=1, feedback_prob=0.3)

print(" n   simulated  formula")
for n in (1, 2, 3, 5, 8):
    ids = set(range(1, n + 1))
    gains = dict.fromkeys(ids, 0.0)
    hits = sum(bool(run_contention(ids, cfg, gains, rng).winners) for _ in range(20_000))
    print(f"{n:2d}   {hits / 20_000:.4f}     {contention_success_prob(n, 0.3):.4f}")

# More minislots raise the odds that someone wins at all
print()
for k in (1, 3, 10):
    cfg = ContentionConfig(minislots=k, feedback_prob=0.3)
    ids = set(range(1, 6))
    gains = dict.fromkeys(ids, 0.0)
    hits = sum(bool(run_contention(ids, cfg, gains, rng).winners) for _ in range(5_000))
    print(f"{k:2d} minislots, 5 relays: some winner in {hits / 5_000:.3f} of attempts")
