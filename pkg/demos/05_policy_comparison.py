# Comparing relay selection policies
#
# Every policy runs on the same topologies, fading and noise, so the
# differences between them can be read from paired confidence intervals
# rather than from overlapping marginal ones. This run is small; the
# acceptance suite uses 1000 episodes per point.

from opprelay.protocol import SelectionPolicy
from opprelay.sim import ExperimentConfig, paired_difference, run_policies

cfg = ExperimentConfig(n_relays=20, snr_db=-3.0, episodes=200, early_stop=False)
results = run_policies(cfg, list(SelectionPolicy))

for policy, res in results.items():
    lo, hi = res.r_avg_ci
    print(f"{policy.name:12s} R_avg = {res.r_avg:.4f}  [{lo:.4f}, {hi:.4f}]  "
          f"delivered {res.success_rate:.3f}")

base = results[SelectionPolicy.SOURCE_ONLY]
print()
for policy, res in results.items():
    if policy is SelectionPolicy.SOURCE_ONLY:
        continue
    d, hw = paired_difference(res, base)
    print(f"{policy.name:12s} - SOURCE_ONLY = {d:+.4f} +- {hw:.4f}")
