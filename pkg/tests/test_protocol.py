import numpy as np
import pytest
from scipy import stats

from opprelay.analysis import contention_success_prob
from opprelay.channel import LinkBudget, db_to_linear, linear_to_db
from opprelay.fec import default_family
from opprelay.protocol import (
    ContentionConfig,
    ContentionOutcome,
    EpisodeContext,
    EpisodeStreams,
    RelayState,
    SelectionPolicy,
    _pick_two_bit,
    eligible_set,
    run_contention,
    run_episode,
    select_winner,
)
from opprelay.topology import SOURCE, Topology, generate_topology

FAMILY = default_family()
ROUND_BITS = [FAMILY.round_pattern(j).kept_count(2046) for j in range(len(FAMILY))]


def relays(decoded, gains, dists=None):
    dists = dists if dists is not None else [50.0] * len(gains)
    return [RelayState(i + 1, d, g, x) for i, (d, g, x) in enumerate(zip(decoded, gains, dists))]


# --- configuration ------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        ContentionConfig(minislots=0)
    with pytest.raises(ValueError):
        ContentionConfig(feedback_prob=0.0)
    with pytest.raises(ValueError):
        ContentionConfig(eta_db=-80, beta_db=-86)
    with pytest.raises(ValueError):
        ContentionConfig(bias=0.5)
    cfg = ContentionConfig(feedback_prob=[0.2, 0.4])
    assert cfg.prob(1) == 0.2 and cfg.prob(2) == 0.4
    assert ContentionConfig().prob(7) == 0.3


def test_policy_parse():
    assert SelectionPolicy.parse("2-bit") is SelectionPolicy.TWO_BIT
    assert SelectionPolicy.parse("Centralized") is SelectionPolicy.CENTRALIZED
    with pytest.raises(ValueError):
        SelectionPolicy.parse("random")


# --- eligibility and contention ---------------------------------------------------

def test_eligible_set():
    eta = -91.0
    hi, lo = float(db_to_linear(-80)), float(db_to_linear(-100))
    assert eligible_set(relays([False, False], [hi, hi]), eta) == set()
    assert eligible_set(relays([True, True, True], [hi, hi, hi]), eta) == {1, 2, 3}
    assert eligible_set(relays([True, False, True], [hi, hi, lo]), eta) == {1}


def test_no_eligible_means_source():
    cfg = ContentionConfig()
    out = run_contention(set(), cfg, {}, np.random.default_rng(0))
    assert out.winners == [] and out.selected == SOURCE
    assert select_winner(out, SelectionPolicy.ONE_BIT, cfg, [], np.random.default_rng(0)) == SOURCE


def test_single_relay_always_wins():
    cfg = ContentionConfig(minislots=1, feedback_prob=1.0)
    rng = np.random.default_rng(1)
    for _ in range(100):
        out = run_contention({4}, cfg, {4: 1.0}, rng)
        assert [i for i, _ in out.winners] == [4]


@pytest.mark.parametrize("n, p", [(2, 0.3), (5, 0.3), (10, 0.1)])
def test_single_minislot_success_rate(n, p):
    cfg = ContentionConfig(minislots=1, feedback_prob=p)
    rng = np.random.default_rng(n)
    trials = 20000
    ids = set(range(1, n + 1))
    gains = {i: 0.0 for i in ids}
    hits = sum(bool(run_contention(ids, cfg, gains, rng).winners) for _ in range(trials))
    p_true = contention_success_prob(n, p)
    assert abs(hits - trials * p_true) < 3 * np.sqrt(trials * p_true * (1 - p_true))


def test_check_bits_and_subset():
    cfg = ContentionConfig(minislots=10, feedback_prob=0.3)
    rng = np.random.default_rng(2)
    beta = cfg.beta
    for _ in range(300):
        elig = set(rng.choice(np.arange(1, 21), rng.integers(0, 8), replace=False).tolist())
        gains = {i: float(rng.exponential(beta)) for i in range(1, 21)}
        out = run_contention(elig, cfg, gains, rng)
        ids = [i for i, _ in out.winners]
        assert set(ids) <= elig
        assert len(ids) == len(set(ids))
        for i, bit in out.winners:
            assert bit == int(gains[i] > beta)


# --- winner selection --------------------------------------------------------

def test_two_bit_prefers_class_one():
    cfg = ContentionConfig(bias=0.75)
    out = ContentionOutcome([(3, 1), (5, 0)])
    rng = np.random.default_rng(3)
    picks = np.array([select_winner(out, SelectionPolicy.TWO_BIT, cfg, [], rng)
                      for _ in range(20000)])
    frac = np.mean(picks == 3)
    assert abs(frac - 0.75) < 3 * np.sqrt(0.75 * 0.25 / 20000)


@pytest.mark.parametrize("policy", [SelectionPolicy.ONE_BIT, SelectionPolicy.TWO_BIT])
def test_same_class_is_uniform(policy):
    cfg = ContentionConfig()
    out = ContentionOutcome([(2, 0), (4, 0), (9, 0)])
    rng = np.random.default_rng(4)
    picks = [select_winner(out, policy, cfg, [], rng) for _ in range(9000)]
    counts = [picks.count(i) for i in (2, 4, 9)]
    assert stats.chisquare(counts).pvalue > 0.001


def test_single_winner_selected():
    out = ContentionOutcome([(6, 1)])
    for policy in (SelectionPolicy.ONE_BIT, SelectionPolicy.TWO_BIT):
        assert select_winner(out, policy, ContentionConfig(), [], np.random.default_rng(0)) == 6


def test_half_bias_matches_one_bit():
    # relays are exchangeable: random check bits, fixed ids
    cfg = ContentionConfig()
    rng = np.random.default_rng(5)
    ids = [1, 2, 3, 4]
    two, one = np.zeros(4), np.zeros(4)
    for _ in range(20000):
        winners = [(i, int(rng.random() < 0.4)) for i in ids]
        two[_pick_two_bit(winners, 0.5, rng) - 1] += 1
        one[select_winner(ContentionOutcome(winners), SelectionPolicy.ONE_BIT, cfg, [], rng) - 1] += 1
    assert stats.chi2_contingency(np.vstack([two, one]))[1] > 0.001
    # with equal class sizes the match is exact per winner set
    winners = [(1, 1), (2, 0)]
    picks = [_pick_two_bit(winners, 0.5, rng) for _ in range(20000)]
    assert abs(np.mean(np.array(picks) == 1) - 0.5) < 3 * np.sqrt(0.25 / 20000)


def test_centralized_and_closest():
    rs = relays([True, False, True, True], [0.2, 9.0, 0.7, 0.5], [30.0, 5.0, 60.0, 10.0])
    rng = np.random.default_rng(0)
    cfg = ContentionConfig()
    none = ContentionOutcome()
    assert select_winner(none, SelectionPolicy.CENTRALIZED, cfg, rs, rng) == 3
    assert select_winner(none, SelectionPolicy.HARBINGER, cfg, rs, rng) == 4
    assert select_winner(none, SelectionPolicy.SOURCE_ONLY, cfg, rs, rng) == SOURCE
    nobody = relays([False, False], [1.0, 2.0])
    assert select_winner(none, SelectionPolicy.CENTRALIZED, cfg, nobody, rng) == SOURCE


def test_centralized_scale_invariant_and_ties():
    rng = np.random.default_rng(6)
    cfg = ContentionConfig()
    for _ in range(200):
        g = rng.exponential(1.0, 6)
        dec = rng.random(6) < 0.6
        a = select_winner(ContentionOutcome(), SelectionPolicy.CENTRALIZED, cfg,
                          relays(dec, g), rng)
        b = select_winner(ContentionOutcome(), SelectionPolicy.CENTRALIZED, cfg,
                          relays(dec, g * rng.uniform(1e-6, 1e6)), rng)
        assert a == b
    tied = relays([True, True, True], [1.0, 2.0, 2.0], [9.0, 4.0, 4.0])
    assert select_winner(ContentionOutcome(), SelectionPolicy.CENTRALIZED, cfg, tied, rng) == 2
    assert select_winner(ContentionOutcome(), SelectionPolicy.HARBINGER, cfg, tied, rng) == 2


# --- episodes ----------------------------------------------------------------

def test_round_one_success_at_high_snr():
    topo = Topology.on_line([50.0])
    budget = LinkBudget.for_mean_snr(30.0, 100.0)
    rec = run_episode(topo, SelectionPolicy.ONE_BIT, ContentionConfig(), budget,
                      EpisodeStreams(0, 0))
    assert rec.success and rec.rounds_used == 1
    assert rec.n_candidates == [] and rec.coded_bits_sent == ROUND_BITS[0]


def test_all_rounds_fail_at_low_snr():
    topo = Topology.on_line([50.0])
    budget = LinkBudget.for_mean_snr(-30.0, 100.0)
    rec = run_episode(topo, SelectionPolicy.ONE_BIT, ContentionConfig(), budget,
                      EpisodeStreams(0, 1))
    assert not rec.success and rec.rounds_used == 5
    assert rec.coded_bits_sent == sum(ROUND_BITS) == 3 * 2046
    assert rec.selected_per_round == [SOURCE] * 5


def test_single_relay_round_two_snr():
    topo = Topology.on_line([25.0])
    budget = LinkBudget.from_energy_db(101.0)
    cfg = ContentionConfig(minislots=1, feedback_prob=1.0, eta_db=-91.0)
    found = 0
    for e in range(400):
        rec = run_episode(topo, SelectionPolicy.ONE_BIT, cfg, budget, EpisodeStreams(9, e))
        if rec.rounds_used < 2:
            continue
        mean_db = float(linear_to_db(rec.dest_mean_snr[1]))
        if rec.selected_per_round[1] == 1:
            assert mean_db == pytest.approx(4.7, abs=0.05)
            found += 1
        else:
            assert mean_db == pytest.approx(0.952, abs=0.05)
    assert found > 0


def test_source_only_never_uses_relays():
    topo = generate_topology(5, np.random.default_rng(0))
    budget = LinkBudget.for_mean_snr(-3.0, 100.0)
    for e in range(10):
        rec = run_episode(topo, SelectionPolicy.SOURCE_ONLY, ContentionConfig(), budget,
                          EpisodeStreams(1, e))
        assert set(rec.selected_per_round) == {SOURCE}


def test_selected_relays_decoded_and_heard_hello():
    budget = LinkBudget.for_mean_snr(-3.0, 100.0)
    cfg = ContentionConfig()
    for e in range(15):
        streams = EpisodeStreams(2, e)
        topo = generate_topology(10, streams.rng(EpisodeStreams.TOPOLOGY))
        ctx = EpisodeContext(topo, budget, FAMILY, streams)
        for policy in SelectionPolicy:
            rec = run_episode(topo, policy, cfg, budget, streams, context=ctx)
            assert sum(ROUND_BITS[: rec.rounds_used]) == rec.coded_bits_sent
            for j, tx in enumerate(rec.selected_per_round):
                if tx == SOURCE:
                    continue
                # some history up to round j let the relay decode
                decoded = [h for (node, h), (msg, _) in ctx._decoded.items()
                           if node == tx and msg is not None and len(h) <= j]
                assert decoded
                if policy in (SelectionPolicy.ONE_BIT, SelectionPolicy.TWO_BIT):
                    assert rec.n_winners[j - 1] >= 1
                    assert rec.n_winners[j - 1] <= rec.n_candidates[j - 1]


def test_shared_context_matches_fresh_run():
    budget = LinkBudget.for_mean_snr(-3.0, 100.0)
    cfg = ContentionConfig()
    streams = EpisodeStreams(4, 3)
    topo = generate_topology(8, streams.rng(EpisodeStreams.TOPOLOGY))
    ctx = EpisodeContext(topo, budget, FAMILY, streams)
    shared = [run_episode(topo, p, cfg, budget, streams, context=ctx) for p in SelectionPolicy]
    fresh = [run_episode(topo, p, cfg, budget, EpisodeStreams(4, 3)) for p in SelectionPolicy]
    assert shared == fresh


def test_channels_nested_across_relay_counts():
    budget = LinkBudget.for_mean_snr(0.0, 100.0)
    streams = EpisodeStreams(3, 0)
    small = generate_topology(3, np.random.default_rng(1))
    big = generate_topology(7, np.random.default_rng(1))
    a = EpisodeContext(small, budget, FAMILY, streams)
    b = EpisodeContext(big, budget, FAMILY, streams)
    for slot in range(2):
        ga, gb = a.gains(slot), b.gains(slot)
        np.testing.assert_allclose(gb[:4, :4], ga[:4, :4])
        np.testing.assert_allclose(gb[:4, -1], ga[:4, -1])
        np.testing.assert_allclose(gb, gb.T)
        assert np.all(np.diag(gb) == 0)
    # the destination hears the same noise whatever its node index
    np.testing.assert_array_equal(a.accumulated(small.destination, (SOURCE,)),
                                  b.accumulated(big.destination, (SOURCE,)))
