"""HARQ episodes with decentralized relay selection.

After every NACK the relays that hold the message and hear the destination
above ``eta`` contend over ``K`` minislots; a minislot produces a winner when
exactly one relay says "Hello".  The 2-bit variant tags each Hello with
whether the relay's gain also clears ``beta`` and lets the source favour
those winners.  Centralized (best instantaneous gain), closest-relay and
source-only baselines share the same episode loop.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import LinkBudget, db_to_linear, received_snr
from .fec import default_family, encode_message
from .fec.chain import decode_message
from .fec.rcpc import RcpcFamily
from .topology import SOURCE, Topology

MESSAGE_SYMBOLS = 239
DEST_KEY = 1 << 20  # noise stream label of the destination, whatever its node index


class SelectionPolicy(enum.Enum):
    ONE_BIT = "one_bit"
    TWO_BIT = "two_bit"
    CENTRALIZED = "centralized"
    HARBINGER = "harbinger"
    SOURCE_ONLY = "source_only"

    @classmethod
    def parse(cls, name: str) -> "SelectionPolicy":
        key = name.strip().lower().replace("-", "_")
        aliases = {"1bit": "one_bit", "1_bit": "one_bit", "2bit": "two_bit",
                   "2_bit": "two_bit", "best": "centralized", "closest": "harbinger",
                   "source": "source_only"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            names = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown policy {name!r} (choose from {names})") from None


@dataclass(frozen=True)
class ContentionConfig:
    minislots: int = 10
    feedback_prob: float | tuple[float, ...] = 0.3
    eta_db: float = -91.0
    beta_db: float = -86.0
    bias: float = 0.75

    def __post_init__(self):
        if self.minislots < 1:
            raise ValueError("need at least one minislot")
        p = np.atleast_1d(np.asarray(self.feedback_prob, dtype=float))
        if np.any((p <= 0) | (p > 1)):
            raise ValueError("feedback probabilities must lie in (0, 1]")
        if not self.beta_db > self.eta_db:
            raise ValueError("beta threshold must exceed eta threshold")
        if not 0.5 < self.bias <= 1:
            raise ValueError("bias q must lie in (0.5, 1]")
        if isinstance(self.feedback_prob, (list, np.ndarray)):
            object.__setattr__(self, "feedback_prob", tuple(float(x) for x in p))

    @property
    def eta(self) -> float:
        return float(db_to_linear(self.eta_db))

    @property
    def beta(self) -> float:
        return float(db_to_linear(self.beta_db))

    def prob(self, relay_id: int) -> float:
        """Feedback probability of one relay; a tuple is indexed by ``relay_id - 1``."""
        if isinstance(self.feedback_prob, tuple):
            return self.feedback_prob[relay_id - 1]
        return float(self.feedback_prob)


@dataclass
class RelayState:
    id: int
    decoded: bool
    gain_to_dest: float
    distance_to_dest: float


@dataclass
class ContentionOutcome:
    winners: list[tuple[int, int]] = field(default_factory=list)
    selected: int = SOURCE


def eligible_set(relays: Sequence[RelayState], eta_db: float) -> set[int]:
    eta = float(db_to_linear(eta_db))
    return {r.id for r in relays if r.decoded and r.gain_to_dest > eta}


def run_contention(eligible, cfg: ContentionConfig, gains, rng: np.random.Generator
                   ) -> ContentionOutcome:
    """Play ``cfg.minislots`` minislots.  ``gains`` maps relay id -> |h_{i,r}|^2."""
    ids = np.array(sorted(eligible), dtype=np.int64)
    draws = rng.random((cfg.minislots, ids.size))
    if ids.size == 0:
        return ContentionOutcome()
    p = np.array([cfg.prob(i) for i in ids])
    talk = draws < p
    single = talk.sum(axis=1) == 1
    won = np.unique(ids[talk[single].argmax(axis=1)])
    beta = cfg.beta
    return ContentionOutcome([(int(i), int(gains[i] > beta)) for i in won])


def _pick_uniform(candidates, rng):
    return candidates[int(rng.integers(len(candidates)))]


def _pick_two_bit(winners, q: float, rng: np.random.Generator) -> int:
    """Class '1' with probability q, then uniform within the class.  Any q is
    accepted here; the config enforces q > 0.5."""
    ones = [i for i, bit in winners if bit]
    zeros = [i for i, bit in winners if not bit]
    u = rng.random()
    if ones and zeros:
        return _pick_uniform(ones if u < q else zeros, rng)
    return _pick_uniform([i for i, _ in winners], rng)


def select_winner(outcome: ContentionOutcome, policy: SelectionPolicy, cfg: ContentionConfig,
                  relays: Sequence[RelayState], rng: np.random.Generator) -> int:
    if policy is SelectionPolicy.SOURCE_ONLY:
        return SOURCE
    if policy in (SelectionPolicy.CENTRALIZED, SelectionPolicy.HARBINGER):
        cands = sorted((r for r in relays if r.decoded), key=lambda r: r.id)
        if not cands:
            return SOURCE
        if policy is SelectionPolicy.CENTRALIZED:
            return max(cands, key=lambda r: r.gain_to_dest).id
        return min(cands, key=lambda r: r.distance_to_dest).id
    if not outcome.winners:
        return SOURCE
    if policy is SelectionPolicy.TWO_BIT:
        return _pick_two_bit(outcome.winners, cfg.bias, rng)
    return _pick_uniform([i for i, _ in outcome.winners], rng)


@dataclass
class EpisodeRecord:
    rounds_used: int
    success: bool
    coded_bits_sent: int
    selected_per_round: list[int]
    dest_snr: list[float]
    dest_mean_snr: list[float]
    bit_errors: list[int]
    inner_bits: int
    undetected_error: bool = False
    n_candidates: list[int] = field(default_factory=list)
    n_winners: list[int] = field(default_factory=list)


class EpisodeStreams:
    """Independent random streams for one episode, addressed by purpose.

    Every draw is keyed by what it is for (which slot, which receiver), so
    two policies run on the same episode see the same message, fading and
    noise no matter which nodes end up transmitting.
    """

    TOPOLOGY, MESSAGE, FADING, NOISE, CONTENTION, SELECTION = range(6)

    def __init__(self, seed: int, episode: int):
        self.seed = int(seed)
        self.episode = int(episode)

    def rng(self, *key: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.episode, *key))
        return np.random.default_rng(ss)


class EpisodeContext:
    """Channel state and decode results for one episode, shareable across policies."""

    def __init__(self, topology: Topology, budget: LinkBudget, family: RcpcFamily,
                 streams: EpisodeStreams):
        self.topology = topology
        self.budget = budget
        self.family = family
        self.streams = streams
        self.message = streams.rng(EpisodeStreams.MESSAGE).integers(
            0, 256, MESSAGE_SYMBOLS, dtype=np.uint8)
        self.inner, self.codeword = encode_message(self.message)
        self.n_steps = self.codeword.size // family.spec.n_outputs
        self.round_masks = [family.round_pattern(j).positions(self.n_steps)
                            for j in range(len(family))]
        self.mean_gain = topology.mean_gains(budget.pathloss)
        self._fading = {}
        self._acc = {}
        self._decoded = {}
        self._relay_words = {}

    def gains(self, slot: int) -> np.ndarray:
        """Instantaneous |h|^2 for every node pair in ``slot`` (reciprocal links).

        Links are drawn from three streams in an order that only grows at
        the end when relays are added (destination links, source links,
        relay pairs by larger id), so networks that share a prefix of
        relays also share their channels.
        """
        g = self._fading.get(slot)
        if g is None:
            n = self.topology.n_nodes
            k = n - 2
            D = n - 1
            e = np.zeros((n, n))
            to_dest = self.streams.rng(EpisodeStreams.FADING, slot, 0).exponential(1.0, k + 1)
            e[np.arange(k + 1), D] = to_dest
            if k:
                from_src = self.streams.rng(EpisodeStreams.FADING, slot, 1).exponential(1.0, k)
                e[SOURCE, 1:D] = from_src
                hi, lo = np.tril_indices(k, -1)
                pairs = self.streams.rng(EpisodeStreams.FADING, slot, 2).exponential(1.0, hi.size)
                e[lo + 1, hi + 1] = pairs
            g = (e + e.T) * self.mean_gain
            self._fading[slot] = g
        return g

    def transmitted_word(self, node: int) -> np.ndarray:
        if node == SOURCE:
            return self.codeword
        return self._relay_words[node]

    def accumulated(self, node: int, history: tuple[int, ...]) -> np.ndarray:
        """Combined LLRs at ``node`` after hearing transmitters ``history`` (one per slot)."""
        key = (node, history)
        acc = self._acc.get(key)
        if acc is not None:
            return acc
        if history:
            prev = self.accumulated(node, history[:-1])
        else:
            prev = np.zeros(self.codeword.size)
        slot = len(history) - 1
        if slot < 0:
            return prev
        tx = history[-1]
        where = self.round_masks[slot]
        bits = self.transmitted_word(tx)[where]
        amp = np.sqrt(self.gains(slot)[tx, node] * self.budget.tx_energy)
        n0 = self.budget.noise.linear
        who = DEST_KEY if node == self.topology.destination else node
        noise = self.streams.rng(EpisodeStreams.NOISE, slot, who).standard_normal(bits.size)
        y = amp * (1.0 - 2.0 * bits) + noise * np.sqrt(n0 / 2)
        acc = prev.copy()
        acc[where] += 4.0 * amp * y / n0
        self._acc[key] = acc
        return acc

    def decode(self, node: int, history: tuple[int, ...]):
        """(message or None, inner bit errors) for ``node`` after ``history``."""
        key = (node, history)
        res = self._decoded.get(key)
        if res is None:
            msg, inner = decode_message(self.accumulated(node, history))
            res = (msg, int(np.count_nonzero(inner != self.inner)))
            self._decoded[key] = res
            if msg is not None and node != self.topology.destination:
                if node not in self._relay_words:
                    self._relay_words[node] = (
                        self.codeword if np.array_equal(msg, self.message)
                        else encode_message(msg)[1]
                    )
        return res


def run_episode(topology: Topology, policy: SelectionPolicy, cfg: ContentionConfig,
                budget: LinkBudget, streams: EpisodeStreams, family: RcpcFamily | None = None,
                relay_recombining: bool = True, context: EpisodeContext | None = None
                ) -> EpisodeRecord:
    """One message through up to ``len(family)`` HARQ rounds.

    Pass a shared ``context`` to reuse channel draws and decoder results
    between policies on the same episode.
    """
    family = family or default_family()
    ctx = context or EpisodeContext(topology, budget, family, streams)
    D = topology.destination
    relays = list(topology.relay_ids)
    dist_to_dest = topology.distance_to_destination()
    uses_relays = policy is not SelectionPolicy.SOURCE_ONLY and relays
    m = len(family)

    history: tuple[int, ...] = ()
    tx = SOURCE
    decoded_at: dict[int, int] = {}  # relay -> slot it decoded in
    rec = EpisodeRecord(0, False, 0, [], [], [], [], ctx.inner.size)
    for slot in range(m):
        history = history + (tx,)
        rec.selected_per_round.append(tx)
        rec.coded_bits_sent += int(ctx.round_masks[slot].sum())
        g_tx = ctx.gains(slot)[tx, D]
        rec.dest_snr.append(float(received_snr(budget.tx_energy, g_tx, budget.noise)))
        rec.dest_mean_snr.append(
            float(received_snr(budget.tx_energy, ctx.mean_gain[tx, D], budget.noise)))
        msg, errors = ctx.decode(D, history)
        rec.bit_errors.append(errors)
        rec.rounds_used = slot + 1
        if msg is not None:
            rec.success = bool(np.array_equal(msg, ctx.message))
            rec.undetected_error = not rec.success
            break
        if slot == m - 1 or not uses_relays:
            tx = SOURCE
            continue

        # NACK: relays that have not yet decoded try with what they heard
        for r in relays:
            if r in decoded_at:
                continue
            heard = history if relay_recombining else history[:1]
            if ctx.decode(r, heard)[0] is not None:
                decoded_at[r] = slot

        nxt = ctx.gains(slot + 1)[:, D]
        states = [RelayState(r, r in decoded_at, float(nxt[r]), float(dist_to_dest[r]))
                  for r in relays]
        outcome = ContentionOutcome()
        if policy in (SelectionPolicy.ONE_BIT, SelectionPolicy.TWO_BIT):
            elig = eligible_set(states, cfg.eta_db)
            rec.n_candidates.append(len(elig))
            outcome = run_contention(
                elig, cfg, nxt, ctx.streams.rng(EpisodeStreams.CONTENTION, slot))
            rec.n_winners.append(len(outcome.winners))
        else:
            rec.n_candidates.append(sum(s.decoded for s in states))
        tx = select_winner(outcome, policy, cfg, states,
                           ctx.streams.rng(EpisodeStreams.SELECTION, slot))
    return rec
