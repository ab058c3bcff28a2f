"""Decision policies and the registry of the fourteen ND algorithm variants.

Every variant is a triple (gossip, non-reply, beam policy). Beam policies:

``all``        uniform over every beam, radar ignored (CRA family)
``nonempty``   uniform over beams the radar saw something in
``stop``       uniform over beams whose sensed count exceeds the discovered count
``qlearning``  epsilon-greedy over a per-node Q-table
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import qlearning
from .config import ConfigError

if TYPE_CHECKING:
    from .engine import NodeState

IDLE = -1
RECEIVE = qlearning.RECEIVE
TRANSMIT = qlearning.TRANSMIT
BEAM_POLICIES = ("all", "nonempty", "stop", "qlearning")


@dataclass(frozen=True)
class Algorithm:
    name: str
    gossip: bool
    non_reply: bool
    beam_policy: str

    @property
    def learning(self) -> bool:
        return self.beam_policy == "qlearning"

    @property
    def needs_counts(self) -> bool:
        return self.beam_policy in ("stop", "qlearning")


def _registry(*rows: tuple[str, bool, bool, str]) -> dict[str, Algorithm]:
    return {name: Algorithm(name, g, nr, bp) for name, g, nr, bp in rows}


ALGORITHMS: dict[str, Algorithm] = _registry(
    ("CRA", False, False, "all"),
    ("G-CRA", True, False, "all"),
    ("nRS", False, True, "stop"),
    ("RnS", False, False, "nonempty"),
    ("nRnS", False, True, "nonempty"),
    ("RS", False, False, "stop"),
    ("G-nRS", True, True, "stop"),
    ("G-RnS", True, False, "nonempty"),
    ("G-nRnS", True, True, "nonempty"),
    ("G-RS", True, False, "stop"),
    ("Q-ND", False, False, "qlearning"),
    ("Q-nR", False, True, "qlearning"),
    ("GQ-ND", True, False, "qlearning"),
    ("GQ-nRnS", True, True, "qlearning"),
)


def get_algorithm(name: str | Algorithm) -> Algorithm:
    if isinstance(name, Algorithm):
        return name
    try:
        return ALGORITHMS[name]
    except KeyError:
        raise ConfigError(f"unknown algorithm {name!r}") from None


def check_resolution(algorithm: Algorithm, exact: bool) -> None:
    """Stop and learning policies compare counts, which low-resolution radar cannot give."""
    if algorithm.needs_counts and not exact:
        raise ConfigError(
            f"{algorithm.name} needs per-beam node counts; low-resolution radar only gives presence"
        )


@dataclass(frozen=True)
class PolicyConfig:
    p_transmit: float = 0.5
    epsilon0: float = 0.5
    epsilon_decay: float = 1.0
    alpha: float = 0.5
    gamma: float = 0.3

    def __post_init__(self) -> None:
        check_transmit_probability(self.p_transmit)

    @property
    def schedule(self) -> qlearning.ExplorationSchedule:
        return qlearning.ExplorationSchedule(self.epsilon0, self.epsilon_decay)


def check_transmit_probability(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ConfigError(f"transmit probability must lie strictly in (0, 1), got {p}")


@dataclass(frozen=True)
class SlotDecision:
    node: int
    mode: int  # TRANSMIT, RECEIVE or IDLE
    beam: int | None

    @property
    def idle(self) -> bool:
        return self.mode == IDLE


def choose_transceiver_state(p_transmit: float, rng: np.random.Generator) -> int:
    check_transmit_probability(p_transmit)
    return TRANSMIT if rng.random() < p_transmit else RECEIVE


def eligible_beams(state: NodeState, policy: str) -> set[int]:
    beam_count = len(state.cl)
    if policy in ("all", "qlearning"):
        return set(range(beam_count))
    if policy == "nonempty":
        return {int(m) for m in np.flatnonzero(state.radar.nonempty())}
    if policy == "stop":
        if not state.radar.exact:
            raise ConfigError("stop mechanism needs per-beam counts from high-resolution radar")
        return {int(m) for m in np.flatnonzero(state.radar.entries > state.cl)}
    raise ConfigError(f"unknown beam policy {policy!r}")


def choose_beam(eligible: set[int], rng: np.random.Generator) -> int | None:
    """Uniform pick; ``None`` means the node idles this slot."""
    if not eligible:
        return None
    beams = sorted(eligible)
    return beams[int(rng.integers(len(beams)))]


def make_decision(
    algorithm: str | Algorithm,
    state: NodeState,
    slot: int,
    rng: np.random.Generator,
    policy: PolicyConfig | None = None,
) -> SlotDecision:
    algo = get_algorithm(algorithm)
    policy = policy or PolicyConfig()
    if algo.needs_counts:
        check_resolution(algo, state.radar.exact)
    mode = choose_transceiver_state(policy.p_transmit, rng)
    if algo.learning:
        eps = policy.schedule.epsilon(slot)
        beam = qlearning.select_action(state.q, mode, eps, rng)
        return SlotDecision(state.node, mode, beam)
    beam = choose_beam(eligible_beams(state, algo.beam_policy), rng)
    if beam is None:
        return SlotDecision(state.node, IDLE, None)
    return SlotDecision(state.node, mode, beam)


def draw_modes(p_transmit: float, n: int, rng: np.random.Generator) -> np.ndarray:
    return np.where(rng.random(n) < p_transmit, TRANSMIT, RECEIVE)


def eligibility_mask(policy: str, radar: np.ndarray, cl: np.ndarray) -> np.ndarray:
    if policy in ("all", "qlearning"):
        return np.ones(radar.shape, dtype=bool)
    if policy == "nonempty":
        return radar > 0
    if policy == "stop":
        return radar > cl
    raise ConfigError(f"unknown beam policy {policy!r}")


def decide_all(
    algorithm: Algorithm,
    modes: np.ndarray,
    radar: np.ndarray,
    cl: np.ndarray,
    q: np.ndarray | None,
    epsilon: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Decisions for every node at once.

    ``modes`` are this slot's pre-drawn transceiver states. Returns
    ``(modes, beams)`` with idle nodes marked ``IDLE`` in both arrays.
    """
    if algorithm.learning:
        beams = qlearning.select_actions(q, modes, epsilon, rng)
        return modes.copy(), beams
    mask = eligibility_mask(algorithm.beam_policy, radar, cl)
    keys = rng.random(mask.shape)
    beams = np.argmax(np.where(mask, keys, -1.0), axis=1)
    idle = ~mask.any(axis=1)
    return np.where(idle, IDLE, modes), np.where(idle, IDLE, beams)
