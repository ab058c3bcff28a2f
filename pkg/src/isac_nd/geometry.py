"""Node placement and sector geometry for directional antennas.

Beams are indexed 0..B0-1 counter-clockwise from each node's reference
orientation. Sector ``k`` is the half-open bearing interval
``[k*theta, (k+1)*theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, ScenarioConfig, beam_count_for

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class NodeLayout:
    positions: np.ndarray  # (N, 2), km
    area_side: float

    @property
    def n_nodes(self) -> int:
        return len(self.positions)

    def distance(self, i: int, j: int) -> float:
        dx, dy = self.positions[j] - self.positions[i]
        return math.hypot(dx, dy)

    def distance_matrix(self) -> np.ndarray:
        diff = self.positions[None, :, :] - self.positions[:, None, :]
        return np.hypot(diff[..., 0], diff[..., 1])


@dataclass(frozen=True)
class BeamSpec:
    beamwidth: float
    orientations: np.ndarray | None = field(default=None)  # per-node offsets, radians

    def __post_init__(self) -> None:
        beam_count_for(self.beamwidth)

    @property
    def beam_count(self) -> int:
        return beam_count_for(self.beamwidth)

    def orientation(self, node: int) -> float:
        if self.orientations is None:
            return 0.0
        return float(self.orientations[node])

    @classmethod
    def from_degrees(cls, degrees: float, orientations: np.ndarray | None = None) -> "BeamSpec":
        return cls(math.radians(degrees), orientations)


def _rng(seed: int | np.random.Generator | np.random.SeedSequence) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def place_nodes(config: ScenarioConfig, seed: int | np.random.Generator) -> NodeLayout:
    """Draw ``config.n_nodes`` positions uniformly over the deployment square."""
    if config.n_nodes < 1:
        raise ConfigError("cannot place zero nodes")
    if config.area_side <= 0:
        raise ConfigError("area_side must be positive")
    diagonal = config.area_side * math.sqrt(2.0)
    if diagonal > config.comm_range * (1.0 + 1e-12):
        raise ConfigError(
            f"area diagonal {diagonal:.4g} km exceeds comm range {config.comm_range:.4g} km; "
            "the single-hop model needs every pair in range"
        )
    rng = _rng(seed)
    positions = rng.uniform(0.0, config.area_side, size=(config.n_nodes, 2))
    return NodeLayout(positions=positions, area_side=config.area_side)


def beam_spec_for(config: ScenarioConfig, layout: NodeLayout, seed: int | np.random.Generator) -> BeamSpec:
    """Shared global frame by default; per-node uniform orientations on request."""
    orientations = None
    if config.random_orientation:
        orientations = _rng(seed).uniform(0.0, TWO_PI, size=layout.n_nodes)
    return BeamSpec(config.beamwidth, orientations)


def sector_of(angle: np.ndarray | float, beamwidth: float, beam_count: int) -> np.ndarray:
    wrapped = np.mod(angle, TWO_PI)
    # mod can round up to exactly 2*pi for tiny negative angles
    return np.floor(wrapped / beamwidth).astype(np.int64) % beam_count


def beam_index(observer: int, target: int, layout: NodeLayout, spec: BeamSpec) -> int:
    if observer == target:
        raise ValueError("beam_index needs two distinct nodes")
    dx, dy = layout.positions[target] - layout.positions[observer]
    bearing = math.atan2(dy, dx) - spec.orientation(observer)
    return int(sector_of(bearing, spec.beamwidth, spec.beam_count))


def covers(
    observer: int,
    chosen_beam: int,
    target: int,
    layout: NodeLayout,
    spec: BeamSpec,
    range_km: float,
) -> bool:
    if layout.distance(observer, target) > range_km:
        return False
    return beam_index(observer, target, layout, spec) == chosen_beam


def beam_matrix(layout: NodeLayout, spec: BeamSpec) -> np.ndarray:
    """``M[i, j]`` is the beam of ``i`` containing ``j``; the diagonal is -1."""
    pos = layout.positions
    diff = pos[None, :, :] - pos[:, None, :]
    bearing = np.arctan2(diff[..., 1], diff[..., 0])
    if spec.orientations is not None:
        bearing = bearing - np.asarray(spec.orientations)[:, None]
    mat = sector_of(bearing, spec.beamwidth, spec.beam_count)
    np.fill_diagonal(mat, -1)
    return mat


def in_range_matrix(layout: NodeLayout, range_km: float) -> np.ndarray:
    mask = layout.distance_matrix() <= range_km
    np.fill_diagonal(mask, False)
    return mask
