"""Monte Carlo experiments over random or fixed relay layouts.

Each episode draws all of its randomness from streams keyed by
``(seed, episode index, purpose, ...)``.  Results therefore do not depend on
how episodes are split across worker processes, and several selection
policies evaluated together see identical channels (common random numbers),
which is what makes paired policy comparisons tight.
"""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .analysis import BLOCK_BITS, MEMORY, ThroughputCounts, effective_throughput
from .channel import LinkBudget, NoiseParams, PathLossParams
from .fec import default_family, load_puncturing_table
from .protocol import (
    MESSAGE_SYMBOLS,
    ContentionConfig,
    EpisodeContext,
    EpisodeRecord,
    EpisodeStreams,
    SelectionPolicy,
    run_episode,
)
from .topology import SOURCE, Topology, generate_topology

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "Topology",
    "generate_topology",
    "normal_ci",
    "paired_difference",
    "run_experiment",
    "run_policies",
    "run_sweep",
    "SWEEP_AXES",
]

Z95 = 1.959963984540054
INFO_BITS = MESSAGE_SYMBOLS * 8


@dataclass(frozen=True)
class ExperimentConfig:
    policy: SelectionPolicy = SelectionPolicy.ONE_BIT
    contention: ContentionConfig = ContentionConfig()
    n_relays: int = 20
    sd_distance: float = 100.0
    relay_offsets: tuple[float, ...] | None = None
    redraw_topology: bool = True
    snr_db: float | None = 5.0
    tx_energy_db: float | None = None
    pathloss: PathLossParams = PathLossParams()
    noise: NoiseParams = NoiseParams()
    puncturing_table: str | None = None
    episodes: int = 10_000
    seed: int = 0
    relay_recombining: bool = True
    workers: int = 1
    early_stop: bool = True
    rel_precision: float = 0.02
    min_episodes: int = 1_000
    batch_size: int = 250
    keep_records: bool = False

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.n_relays < 0:
            raise ValueError("n_relays must be non-negative")
        if (self.snr_db is None) == (self.tx_energy_db is None):
            raise ValueError("give exactly one of snr_db and tx_energy_db")
        if self.relay_offsets is not None:
            offsets = tuple(float(x) for x in self.relay_offsets)
            object.__setattr__(self, "relay_offsets", offsets)
            object.__setattr__(self, "n_relays", len(offsets))

    def replace(self, **changes) -> "ExperimentConfig":
        if "snr_db" in changes and "tx_energy_db" not in changes:
            changes["tx_energy_db"] = None
        if "tx_energy_db" in changes and changes["tx_energy_db"] is not None:
            changes.setdefault("snr_db", None)
        return dataclasses.replace(self, **changes)

    def budget(self) -> LinkBudget:
        if self.tx_energy_db is not None:
            return LinkBudget.from_energy_db(self.tx_energy_db, self.pathloss, self.noise)
        return LinkBudget.for_mean_snr(self.snr_db, self.sd_distance, self.pathloss, self.noise)

    def family(self):
        if self.puncturing_table is None:
            return default_family()
        return load_puncturing_table(self.puncturing_table)

    def topology(self, episode: int) -> Topology:
        if self.relay_offsets is not None:
            return Topology.on_line(self.relay_offsets, self.sd_distance)
        if self.redraw_topology:
            rng = EpisodeStreams(self.seed, episode).rng(EpisodeStreams.TOPOLOGY)
        else:
            rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(2**31,)))
        return generate_topology(self.n_relays, rng, self.sd_distance,
                                 self.pathloss.reference_distance)


def normal_ci(mean: float, se: float) -> tuple[float, float]:
    return mean - Z95 * se, mean + Z95 * se


@dataclass
class ExperimentResult:
    policy: SelectionPolicy
    config: ExperimentConfig
    coded_bits: np.ndarray
    successes: np.ndarray
    rounds_used: np.ndarray
    relay_rounds: np.ndarray
    round_errors: np.ndarray
    round_bits: np.ndarray
    undetected: int
    records: list[EpisodeRecord] | None = field(default=None, repr=False)

    @property
    def episodes(self) -> int:
        return int(self.coded_bits.size)

    @property
    def counts(self) -> ThroughputCounts:
        return ThroughputCounts(self.coded_bits, INFO_BITS, BLOCK_BITS, MEMORY,
                                self.config.family().period, int(self.successes.sum()))

    @property
    def r_avg(self) -> float:
        return effective_throughput(self.counts)

    @property
    def r_avg_se(self) -> float:
        n = self.episodes
        if n < 2:
            return math.nan
        b = self.coded_bits
        return self.r_avg * b.std(ddof=1) / math.sqrt(n) / b.mean()

    @property
    def r_avg_ci(self) -> tuple[float, float]:
        return normal_ci(self.r_avg, self.r_avg_se)

    @property
    def success_rate(self) -> float:
        return float(self.successes.mean())

    @property
    def goodput(self) -> float:
        """Delivered information bits per coded bit sent."""
        return INFO_BITS * float(self.successes.sum()) / float(self.coded_bits.sum())

    @property
    def rounds_histogram(self) -> np.ndarray:
        """Episodes ending after 1..m rounds (index 0 unused)."""
        m = self.round_bits.size
        return np.bincount(self.rounds_used, minlength=m + 1)

    def ber(self, round_index: int) -> float:
        bits = self.round_bits[round_index]
        return float(self.round_errors[round_index] / bits) if bits else math.nan

    def ber_ci(self, round_index: int) -> tuple[float, float]:
        p = self.ber(round_index)
        bits = self.round_bits[round_index]
        if not bits:
            return math.nan, math.nan
        return normal_ci(p, math.sqrt(p * (1 - p) / bits))

    @property
    def selections(self) -> dict[str, int]:
        """Who transmitted in rounds 2..m, summed over episodes."""
        relay = int(self.relay_rounds.sum())
        total = int(np.maximum(self.rounds_used - 1, 0).sum())
        return {"relay": relay, "source": total - relay}


def _chunk_worker(args):
    cfg, policies, episodes = args
    budget = cfg.budget()
    family = cfg.family()
    out = {p: [] for p in policies}
    for e in episodes:
        streams = EpisodeStreams(cfg.seed, e)
        topo = cfg.topology(e)
        ctx = EpisodeContext(topo, budget, family, streams)
        for p in policies:
            out[p].append(run_episode(topo, p, cfg.contention, budget, streams, family,
                                      cfg.relay_recombining, context=ctx))
    return out


def _summarize(policy, cfg, records: Sequence[EpisodeRecord], m: int) -> ExperimentResult:
    errs = np.zeros(m, dtype=np.int64)
    bits = np.zeros(m, dtype=np.int64)
    for r in records:
        k = len(r.bit_errors)
        errs[:k] += r.bit_errors
        bits[:k] += r.inner_bits
    return ExperimentResult(
        policy=policy,
        config=cfg.replace(policy=policy),
        coded_bits=np.array([r.coded_bits_sent for r in records], dtype=np.int64),
        successes=np.array([r.success for r in records], dtype=bool),
        rounds_used=np.array([r.rounds_used for r in records], dtype=np.int64),
        relay_rounds=np.array([sum(s != SOURCE for s in r.selected_per_round)
                               for r in records], dtype=np.int64),
        round_errors=errs,
        round_bits=bits,
        undetected=sum(r.undetected_error for r in records),
        records=list(records) if cfg.keep_records else None,
    )


def _precise_enough(records, cfg) -> bool:
    b = np.array([r.coded_bits_sent for r in records], dtype=float)
    if b.size < max(cfg.min_episodes, 2):
        return False
    rel_halfwidth = Z95 * b.std(ddof=1) / math.sqrt(b.size) / b.mean()
    return rel_halfwidth < cfg.rel_precision


def run_policies(cfg: ExperimentConfig, policies: Iterable[SelectionPolicy] | None = None
                 ) -> dict[SelectionPolicy, ExperimentResult]:
    """Run several policies on the same episodes (same seeds, channels, messages)."""
    policies = list(policies) if policies is not None else [cfg.policy]
    m = len(cfg.family())
    records = {p: [] for p in policies}
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        start = 0
        while start < cfg.episodes:
            stop = min(start + cfg.batch_size, cfg.episodes)
            idx = list(range(start, stop))
            chunks = [idx[i::cfg.workers] for i in range(cfg.workers)]
            chunks = [c for c in chunks if c]
            jobs = [(cfg, policies, c) for c in chunks]
            parts = list(pool.map(_chunk_worker, jobs)) if pool else [_chunk_worker(j) for j in jobs]
            # undo the strided split so records stay in episode order
            for p in policies:
                merged = [None] * len(idx)
                for w, part in enumerate(parts):
                    merged[w::len(parts)] = part[p]
                records[p].extend(merged)
            start = stop
            if cfg.early_stop and all(_precise_enough(records[p], cfg) for p in policies):
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return {p: _summarize(p, cfg, records[p], m) for p in policies}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    return run_policies(cfg, [cfg.policy])[cfg.policy]


def paired_difference(a: ExperimentResult, b: ExperimentResult) -> tuple[float, float]:
    """R_avg(a) - R_avg(b) and its 95% half-width, for results on the same episodes."""
    if a.episodes != b.episodes:
        raise ValueError("paired comparison needs the same episodes")
    ba = a.coded_bits.astype(float)
    bb = b.coded_bits.astype(float)
    # delta-method linearisation of k / mean(bits)
    la = -a.r_avg / ba.mean() * (ba - ba.mean())
    lb = -b.r_avg / bb.mean() * (bb - bb.mean())
    n = a.episodes
    se = (la - lb).std(ddof=1) / math.sqrt(n) if n > 1 else math.nan
    return a.r_avg - b.r_avg, Z95 * se


SWEEP_AXES = {
    "beta_db": ("contention", "beta_db"),
    "eta_db": ("contention", "eta_db"),
    "bias": ("contention", "bias"),
    "feedback_prob": ("contention", "feedback_prob"),
    "minislots": ("contention", "minislots"),
    "n_relays": ("config", "n_relays"),
    "snr_db": ("config", "snr_db"),
}
_AXIS_ALIASES = {
    "beta": "beta_db", "beta_opp": "beta_db", "eta": "eta_db", "eta_opp": "eta_db",
    "q": "bias", "p": "feedback_prob", "k": "minislots", "kr": "n_relays",
    "k_r": "n_relays", "relays": "n_relays", "gamma": "snr_db", "snr": "snr_db",
}


def resolve_axis(name: str) -> str:
    key = name.strip().lower()
    key = _AXIS_ALIASES.get(key, key)
    if key not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {name!r} (choose from {', '.join(SWEEP_AXES)})")
    return key


def config_at(base: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    where, attr = SWEEP_AXES[resolve_axis(axis)]
    if attr in ("minislots", "n_relays"):
        value = int(value)
    if where == "contention":
        return base.replace(contention=dataclasses.replace(base.contention, **{attr: value}))
    return base.replace(**{attr: value})


def run_sweep(base: ExperimentConfig, axis: str, values: Sequence,
              policies: Iterable[SelectionPolicy] | None = None
              ) -> list[dict[SelectionPolicy, ExperimentResult]]:
    """One result set per axis value; every point reuses the base seed."""
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    if len(set(values)) != len(values):
        raise ValueError("sweep values must be distinct")
    policies = list(policies) if policies is not None else [base.policy]
    return [run_policies(config_at(base, axis, v), policies) for v in values]
