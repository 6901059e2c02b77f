# One hybrid-ARQ episode, round by round
#
# The source sends at rate 4/5. On a NACK a relay that overheard and decoded
# the message may win contention and send the next increment instead of the
# source. The destination combines everything it has received.

import numpy as np

from opprelay.channel import LinkBudget, linear_to_db
from opprelay.protocol import ContentionConfig, EpisodeStreams, SelectionPolicy, run_episode
from opprelay.topology import SOURCE, generate_topology

budget = LinkBudget.for_mean_snr(-3.0, 100.0)

# Look for an episode where the first transmission fails, so relays get a say
episode = 0
while True:
    streams = EpisodeStreams(seed=7, episode=episode)
    topology = generate_topology(8, streams.rng(EpisodeStreams.TOPOLOGY))
    first = run_episode(topology, SelectionPolicy.SOURCE_ONLY, ContentionConfig(), budget, streams)
    if first.rounds_used >= 3:
        break
    episode += 1
print(f"episode {episode}")

print("relay distances to the destination [m]:",
      np.round(topology.distance_to_destination()[1:-1], 1))

for policy in SelectionPolicy:
    rec = run_episode(topology, policy, ContentionConfig(), budget, EpisodeStreams(7, episode))
    senders = ["source" if s == SOURCE else f"relay {s}" for s in rec.selected_per_round]
    snrs = ", ".join(f"{float(linear_to_db(g)):.1f}" for g in rec.dest_mean_snr)
    print(f"\n{policy.name}: {'delivered' if rec.success else 'lost'} after {rec.rounds_used} rounds")
    print(f"  senders: {senders}")
    print(f"  mean SNR at the destination per round [dB]: {snrs}")
    print(f"  coded bits sent: {rec.coded_bits_sent}")
