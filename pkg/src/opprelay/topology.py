"""Node placement.  Node 0 is the source, nodes 1..K_r are relays, the last
node is the destination."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import PathLossParams, path_loss_gain

SOURCE = 0


@dataclass(frozen=True, eq=False)
class Topology:
    positions: np.ndarray  # (K_r + 2, 2) metres

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 2:
            raise ValueError("positions must be (n_nodes, 2) with source and destination")
        p.setflags(write=False)
        object.__setattr__(self, "positions", p)

    @property
    def n_relays(self) -> int:
        return self.positions.shape[0] - 2

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    @property
    def destination(self) -> int:
        return self.n_nodes - 1

    @property
    def relay_ids(self) -> range:
        return range(1, self.n_nodes - 1)

    def distances(self) -> np.ndarray:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])

    def distance_to_destination(self) -> np.ndarray:
        return self.distances()[:, self.destination]

    def mean_gains(self, params: PathLossParams) -> np.ndarray:
        """Pairwise mean power gains; links shorter than d0 are held at d0."""
        d = np.maximum(self.distances(), params.reference_distance)
        return path_loss_gain(params, d)

    @classmethod
    def on_line(cls, relay_offsets, sd_distance: float = 100.0) -> "Topology":
        """Relays on the source-destination segment, ``relay_offsets`` metres from the source."""
        offsets = np.asarray(list(relay_offsets), dtype=float).reshape(-1)
        if np.any((offsets <= 0) | (offsets >= sd_distance)):
            raise ValueError("relay offsets must lie strictly between source and destination")
        xs = np.concatenate([[0.0], offsets, [sd_distance]])
        return cls(np.column_stack([xs, np.zeros_like(xs)]))


def generate_topology(n_relays: int, rng: np.random.Generator,
                      sd_distance: float = 100.0, min_distance: float = 1.0) -> Topology:
    """Relays uniform over the lens of points closer than ``sd_distance`` to both
    source and destination; in particular every relay is nearer the
    destination than the source is.

    Candidates are drawn in fixed-size chunks and accepted in order, so the
    first ``k`` relays do not depend on ``n_relays``: with a common stream a
    larger network contains the smaller one.
    """
    if n_relays < 0:
        raise ValueError("n_relays must be non-negative")
    src = np.array([0.0, 0.0])
    dst = np.array([sd_distance, 0.0])
    half_h = sd_distance * np.sqrt(3) / 2
    chunks = []
    have = 0
    while have < n_relays:
        cand = rng.uniform([0.0, -half_h], [sd_distance, half_h], size=(64, 2))
        ds = np.hypot(*(cand - src).T)
        dd = np.hypot(*(cand - dst).T)
        ok = (ds < sd_distance) & (dd < sd_distance) & (ds >= min_distance) & (dd >= min_distance)
        chunks.append(cand[ok])
        have += int(ok.sum())
    pts = np.vstack(chunks)[:n_relays] if chunks else np.empty((0, 2))
    return Topology(np.vstack([src, pts, dst]))
