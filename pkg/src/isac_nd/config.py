"""Scenario configuration: one flat record of every simulation knob."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml


NON_REPLY_RULES = ("direct", "known", "mutual")


class ConfigError(ValueError):
    """Raised for invalid or contradictory scenario parameters."""


@dataclass(frozen=True)
class ScenarioConfig:
    n_nodes: int = 50
    area_side: float = 2.0  # km
    beamwidth_deg: float = 14.4
    comm_range: float = 2.0 * math.sqrt(2.0)  # km
    rc_ratio: float = 1.0
    resolution: str = "high"
    p_transmit: float = 0.5
    algorithms: tuple[str, ...] = ("G-nRS",)
    epsilon0: float = 0.5
    epsilon_decay: float = 1.0
    alpha: float = 0.5
    gamma: float = 0.3
    non_reply_rule: str = "direct"  # "direct", "known" or "mutual"
    ep_denominator: str = "all"  # "all" beams or "nonempty" beams for the EP lambda
    replications: int = 200
    base_seed: int = 0
    warmup: int | None = None  # None -> 2 * beam_count
    slot_cap: int = 100_000
    horizon: int = 400
    sensing_slot_cost: int = 1
    random_orientation: bool = False

    def __post_init__(self) -> None:
        if isinstance(self.algorithms, str):
            object.__setattr__(self, "algorithms", (self.algorithms,))
        else:
            object.__setattr__(self, "algorithms", tuple(self.algorithms))
        self.validate()

    @property
    def beamwidth(self) -> float:
        return math.radians(self.beamwidth_deg)

    @property
    def beam_count(self) -> int:
        return beam_count_for(self.beamwidth)

    @property
    def radar_range(self) -> float:
        return self.rc_ratio * self.comm_range

    @property
    def warmup_slots(self) -> int:
        return 2 * self.beam_count if self.warmup is None else self.warmup

    @property
    def algorithm(self) -> str:
        return self.algorithms[0]

    def validate(self) -> None:
        if self.n_nodes < 1:
            raise ConfigError("n_nodes must be >= 1")
        if self.area_side <= 0:
            raise ConfigError("area_side must be positive")
        if self.comm_range <= 0:
            raise ConfigError("comm_range must be positive")
        if not 0.0 < self.rc_ratio <= 1.0:
            raise ConfigError(f"rc_ratio must lie in (0, 1], got {self.rc_ratio}")
        if self.resolution not in ("low", "high"):
            raise ConfigError(f"resolution must be 'low' or 'high', got {self.resolution!r}")
        if not 0.0 < self.p_transmit < 1.0:
            raise ConfigError(
                f"p_transmit must lie strictly inside (0, 1), got {self.p_transmit}; "
                "at 0 or 1 no handshake can ever complete"
            )
        if not 0.0 <= self.epsilon0 <= 1.0:
            raise ConfigError("epsilon0 must lie in [0, 1]")
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ConfigError("epsilon_decay must lie in (0, 1]")
        if not 0.0 <= self.alpha <= 1.0 or not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("alpha and gamma must lie in [0, 1]")
        if self.non_reply_rule not in NON_REPLY_RULES:
            raise ConfigError(f"non_reply_rule must be one of {', '.join(NON_REPLY_RULES)}")
        if self.ep_denominator not in ("all", "nonempty"):
            raise ConfigError("ep_denominator must be 'all' or 'nonempty'")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.slot_cap < 1:
            raise ConfigError("slot_cap must be >= 1")
        if self.warmup is not None and self.warmup < 0:
            raise ConfigError("warmup must be >= 0")
        if self.horizon < 0:
            raise ConfigError("horizon must be >= 0")
        if self.sensing_slot_cost < 1:
            raise ConfigError("sensing_slot_cost must be >= 1")
        if not self.algorithms:
            raise ConfigError("at least one algorithm id is required")
        beam_count_for(self.beamwidth)
        # imported here to avoid a cycle: policies -> config
        from .policies import ALGORITHMS

        for name in self.algorithms:
            if name not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {name!r}; known: {', '.join(ALGORITHMS)}")

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["algorithms"] = list(self.algorithms)
        return d


def beam_count_for(beamwidth: float) -> int:
    """Number of beams tiling the circle; rejects widths that do not divide 2*pi."""
    if not 0.0 < beamwidth <= 2.0 * math.pi + 1e-12:
        raise ConfigError(f"beamwidth must lie in (0, 2*pi], got {beamwidth}")
    count = round(2.0 * math.pi / beamwidth)
    if count < 1 or abs(count * beamwidth - 2.0 * math.pi) > 1e-9:
        raise ConfigError(f"beamwidth {math.degrees(beamwidth):g} deg does not divide 360 deg")
    return count


CONFIG_KEYS = tuple(f.name for f in dataclasses.fields(ScenarioConfig))


def config_from_mapping(data: dict[str, Any], base: ScenarioConfig | None = None) -> ScenarioConfig:
    unknown = sorted(set(data) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    base = base or ScenarioConfig()
    return base.replace(**data)


def load_config(path: str | Path) -> ScenarioConfig:
    """Load a flat YAML or JSON key/value file. Unknown keys are errors."""
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        data = json.loads(text)
    else:
        data = yaml.safe_load(text)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a flat mapping")
    for key, value in data.items():
        if isinstance(value, dict):
            raise ConfigError(f"config key {key!r} must not be nested")
    return config_from_mapping(data)
