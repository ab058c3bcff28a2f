"""Radar sensing phase: builds every node's per-beam Radar List (RL).

The radar is modelled as a ground-truth oracle limited by range. Nodes
beyond ``rc_ratio * comm_range`` are invisible; nothing is ever
over-counted. Low resolution reduces each entry to a presence flag.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, ScenarioConfig
from .geometry import BeamSpec, NodeLayout, beam_matrix, in_range_matrix


@dataclass(frozen=True)
class SensingConfig:
    comm_range: float
    rc_ratio: float = 1.0
    resolution: str = "high"
    sensing_slot_cost: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.rc_ratio <= 1.0:
            raise ConfigError(f"rc_ratio must lie in (0, 1], got {self.rc_ratio}")
        if self.resolution not in ("low", "high"):
            raise ConfigError(f"unknown resolution {self.resolution!r}")
        if self.sensing_slot_cost < 1:
            raise ConfigError("sensing_slot_cost must be >= 1")

    @property
    def radar_range(self) -> float:
        return self.rc_ratio * self.comm_range

    @classmethod
    def from_scenario(cls, config: ScenarioConfig) -> "SensingConfig":
        return cls(config.comm_range, config.rc_ratio, config.resolution, config.sensing_slot_cost)


@dataclass(frozen=True)
class RadarList:
    """Per-beam sensing result for one node.

    ``entries`` holds exact counts when ``exact`` is true, else 0/1 presence flags.
    """

    entries: np.ndarray
    exact: bool

    def nonempty(self) -> np.ndarray:
        return self.entries > 0

    def count(self, beam: int) -> int:
        if not self.exact:
            raise ConfigError("low-resolution radar only reports presence, not counts")
        return int(self.entries[beam])


@dataclass(frozen=True)
class SensingResult:
    entries: np.ndarray  # (N, B0): counts or flags
    exact: bool
    duration: int  # slots spent sensing, excluded from convergence time
    scan_order: np.ndarray  # (N, B0): beam visited at each sensing step

    def radar_list(self, node: int) -> RadarList:
        return RadarList(self.entries[node].copy(), self.exact)

    @property
    def n_nodes(self) -> int:
        return self.entries.shape[0]


def run_sensing_phase(
    layout: NodeLayout,
    spec: BeamSpec,
    cfg: SensingConfig,
    rng: np.random.Generator | int | None = None,
) -> SensingResult:
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    n = layout.n_nodes
    b0 = spec.beam_count
    beams = beam_matrix(layout, spec)
    visible = in_range_matrix(layout, cfg.radar_range)
    counts = np.zeros((n, b0), dtype=np.int64)
    rows, cols = np.nonzero(visible)
    np.add.at(counts, (rows, beams[rows, cols]), 1)
    # each node sweeps its beams once, in its own random order; the order
    # does not change the outcome because nodes are static
    order = np.argsort(rng.random((n, b0)), axis=1)
    exact = cfg.resolution == "high"
    entries = counts if exact else (counts > 0).astype(np.int64)
    return SensingResult(entries, exact, b0 * cfg.sensing_slot_cost, order)


def ground_truth_counts(layout: NodeLayout, spec: BeamSpec, range_km: float) -> np.ndarray:
    """Per-beam neighbour counts within ``range_km``; used as a reference."""
    beams = beam_matrix(layout, spec)
    mask = in_range_matrix(layout, range_km)
    out = np.zeros((layout.n_nodes, spec.beam_count), dtype=np.int64)
    for i in range(layout.n_nodes):
        out[i] = np.bincount(beams[i][mask[i]], minlength=spec.beam_count)
    return out
