"""Slotted two-sub-slot handshake engine.

Sub-slot 1: transmitters send hello packets in their chosen beam. A
receiver decodes a hello when exactly one transmitter and it point at each
other. Sub-slot 2: each decoding receiver answers with a feedback packet in
the same beam, unless non-reply suppresses it; the transmitter decodes it
when exactly one feedback reaches its beam. NL updates are applied after
both sub-slots, so gossip payloads are start-of-slot snapshots.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import IO, Any, Iterable

import numpy as np

from . import policies, qlearning
from .config import ScenarioConfig
from .geometry import BeamSpec, NodeLayout, beam_index, beam_matrix, beam_spec_for, in_range_matrix, place_nodes
from .policies import IDLE, RECEIVE, TRANSMIT, Algorithm, SlotDecision
from .sensing import RadarList, SensingConfig, SensingResult, run_sensing_phase

RUNNING = "running"
CONVERGED = "converged"
CAPPED = "capped"


@dataclass
class NodeState:
    node: int
    radar: RadarList
    neighbors: dict[int, tuple[float, float]]  # NL: id -> position
    cl: np.ndarray
    q: np.ndarray

    @property
    def completed_beams(self) -> set[int]:
        if not self.radar.exact:
            return set()
        return {int(m) for m in np.flatnonzero(self.cl >= self.radar.entries)}


@dataclass(frozen=True)
class Packet:
    kind: str  # "hello" or "feedback"
    sender: int
    position: tuple[float, float]
    payload: dict[int, tuple[float, float]] | None = None

    def __post_init__(self) -> None:
        if self.kind == "hello" and self.payload is not None:
            raise ValueError("hello packets carry no neighbour list")
        if self.kind == "feedback" and self.payload is None:
            raise ValueError("feedback packets carry the sender's neighbour list")


@dataclass
class SlotOutcome:
    slot: int
    modes: np.ndarray
    beams: np.ndarray
    hellos: np.ndarray  # (k, 2) rows of (receiver, sender)
    collisions: np.ndarray  # receivers that heard two or more hellos
    suppressed: np.ndarray  # (k, 2) rows of (receiver, sender) with feedback withheld
    feedback: np.ndarray  # (k, 2) rows of (transmitter, replier)
    feedback_collisions: np.ndarray  # transmitters that heard two or more feedbacks
    direct: np.ndarray  # (k, 2) rows of (discoverer, discovered)
    gossip: np.ndarray  # (k, 3) rows of (discoverer, discovered, relay)

    @property
    def new_discoveries(self) -> int:
        return len(self.direct) + len(self.gossip)

    def events(self) -> Iterable[dict[str, Any]]:
        t = self.slot
        for rx, tx in self.hellos.tolist():
            yield {"slot": t, "event": "hello", "tx": tx, "rx": rx, "beam": int(self.beams[tx])}
        for rx in self.collisions.tolist():
            yield {"slot": t, "event": "collision", "rx": rx, "beam": int(self.beams[rx])}
        for rx, tx in self.suppressed.tolist():
            yield {"slot": t, "event": "no_reply", "tx": tx, "rx": rx}
        for tx, rx in self.feedback.tolist():
            yield {"slot": t, "event": "feedback", "tx": tx, "rx": rx, "beam": int(self.beams[tx])}
        for tx in self.feedback_collisions.tolist():
            yield {"slot": t, "event": "feedback_collision", "tx": tx, "beam": int(self.beams[tx])}
        for i, j in self.direct.tolist():
            yield {"slot": t, "event": "discover", "node": i, "found": j, "via": None}
        for i, j, via in self.gossip.tolist():
            yield {"slot": t, "event": "discover", "node": i, "found": j, "via": via}


@dataclass
class RunRecord:
    algorithm: str
    seed: int
    n_nodes: int
    discoveries: list[int]  # new ordered pairs per slot, slot 1 first
    completion_slots: list[int | None]  # slot each node's NL became full
    last_discovery_slot: int
    detection_slot: int
    status: str
    complete: bool
    sensing_duration: int

    @property
    def convergence_time(self) -> int:
        return self.detection_slot

    @property
    def capped(self) -> bool:
        return self.status == CAPPED

    def nd_ratio(self, horizon: int | None = None) -> np.ndarray:
        """Mean fraction of neighbours discovered by the end of each slot."""
        pairs = self.n_nodes * (self.n_nodes - 1)
        cum = np.cumsum(np.asarray(self.discoveries, dtype=np.float64))
        ratio = cum / pairs if pairs else np.ones_like(cum)
        if horizon is None:
            return ratio
        if len(ratio) >= horizon:
            return ratio[:horizon]
        last = ratio[-1] if len(ratio) else (0.0 if pairs else 1.0)
        return np.concatenate([ratio, np.full(horizon - len(ratio), last)])

    def discovered_count(self, horizon: int | None = None) -> np.ndarray:
        """Mean number of neighbours each node knows by the end of each slot."""
        return self.nd_ratio(horizon) * max(self.n_nodes - 1, 0)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunRecord":
        return cls(**data)


def merge_gossip(
    own: dict[int, tuple[float, float]],
    payload: dict[int, tuple[float, float]],
    self_id: int,
) -> tuple[dict[int, tuple[float, float]], set[int]]:
    """Union of two neighbour lists without ``self_id``; also returns the new ids."""
    merged = dict(own)
    added = set()
    for node, pos in payload.items():
        if node == self_id or node in merged:
            continue
        merged[node] = pos
        added.add(node)
    merged.pop(self_id, None)
    return merged, added


def update_cl(owner: int, nl: dict[int, tuple[float, float]] | Iterable[int], layout: NodeLayout, spec: BeamSpec) -> np.ndarray:
    """Per-beam count of discovered neighbours, from the positions stored in NL."""
    cl = np.zeros(spec.beam_count, dtype=np.int64)
    if not isinstance(nl, dict):
        nl = {j: tuple(layout.positions[j]) for j in nl}
    for j, pos in nl.items():
        if j == owner:
            continue
        probe = NodeLayout(np.array([layout.positions[owner], pos]), layout.area_side)
        orient = BeamSpec(spec.beamwidth, None if spec.orientations is None else np.array([spec.orientation(owner), 0.0]))
        cl[beam_index(0, 1, probe, orient)] += 1
    return cl


def check_convergence(last_discovery: int, t: int, warmup: int, cap: int) -> str:
    """Converged once no NL has grown for at least half of the elapsed slots."""
    if t >= warmup and (t - last_discovery) >= t / 2:
        return CONVERGED
    if t >= cap:
        return CAPPED
    return RUNNING


class Network:
    """Mutable per-run state for all nodes, stored as dense arrays."""

    def __init__(
        self,
        layout: NodeLayout,
        spec: BeamSpec,
        sensing: SensingResult,
        algorithm: Algorithm,
        comm_range: float,
        non_reply_rule: str = "direct",
    ) -> None:
        self.layout = layout
        self.spec = spec
        self.sensing = sensing
        self.algorithm = algorithm
        self.non_reply_rule = non_reply_rule
        self.n = layout.n_nodes
        self.beam_count = spec.beam_count
        self.beams = beam_matrix(layout, spec)
        self.link = in_range_matrix(layout, comm_range)
        self.radar = sensing.entries
        self.nl = np.zeros((self.n, self.n), dtype=bool)
        self.cl = np.zeros((self.n, self.beam_count), dtype=np.int64)
        self.q = np.zeros((self.n, 2, self.beam_count), dtype=np.float64)
        self.first_slot = np.zeros((self.n, self.n), dtype=np.int64)  # 0 = undiscovered
        self.relay = np.full((self.n, self.n), -1, dtype=np.int64)  # -1 = direct

    def node_state(self, i: int) -> NodeState:
        nbrs = {int(j): tuple(self.layout.positions[j]) for j in np.flatnonzero(self.nl[i])}
        return NodeState(i, self.sensing.radar_list(i), nbrs, self.cl[i].copy(), self.q[i].copy())

    def hello(self, i: int) -> Packet:
        return Packet("hello", i, tuple(self.layout.positions[i]))

    def feedback(self, j: int) -> Packet:
        return Packet("feedback", j, tuple(self.layout.positions[j]), self.node_state(j).neighbors)

    def complete(self) -> bool:
        return bool(np.array_equal(self.nl, self.link))

    def run_slot(self, modes: np.ndarray, beams: np.ndarray, slot: int) -> SlotOutcome:
        modes = np.asarray(modes)
        beams = np.asarray(beams)
        active = modes != IDLE
        if np.any(active & ((beams < 0) | (beams >= self.beam_count))):
            raise ValueError("decision references a beam outside 0..B0-1")
        tx = active & (modes == TRANSMIT)
        rx = active & (modes == RECEIVE)
        aim = np.where(active, beams, IDLE)
        point = (self.beams == aim[:, None]) & self.link
        mutual = point & point.T

        # sub-slot 1: hello[i, j] means i's hello reaches receiver j
        hello = mutual & tx[:, None] & rx[None, :]
        hits = hello.sum(axis=0)
        receivers = np.flatnonzero(hits == 1)
        senders = np.argmax(hello[:, receivers], axis=0)
        collided = np.flatnonzero(hits >= 2)

        if self.algorithm.non_reply:
            quiet = self.nl[receivers, senders]
            if self.non_reply_rule == "direct":
                quiet &= self.relay[receivers, senders] < 0
            elif self.non_reply_rule == "mutual":
                quiet &= self.nl[senders, receivers]
        else:
            quiet = np.zeros(len(receivers), dtype=bool)
        replying = np.zeros(self.n, dtype=bool)
        replying[receivers[~quiet]] = True

        # sub-slot 2: fb[j, i] means j's feedback reaches transmitter i
        fb = mutual & replying[:, None] & tx[None, :]
        fhits = fb.sum(axis=0)
        fb_rx = np.flatnonzero(fhits == 1)
        fb_src = np.argmax(fb[:, fb_rx], axis=0)
        fb_collided = np.flatnonzero(fhits >= 2)

        old = self.nl
        new = old.copy()
        direct_mask = np.zeros_like(old)
        direct_mask[receivers, senders] = True
        direct_mask[fb_rx, fb_src] = True
        new |= direct_mask
        if self.algorithm.gossip and len(fb_rx):
            new[fb_rx] |= old[fb_src]
            new[fb_rx, fb_rx] = False
        added = new & ~old
        direct = np.argwhere(added & direct_mask)
        via_gossip = added & ~direct_mask
        g_rows, g_cols = np.nonzero(via_gossip)
        relay_of = np.full(self.n, -1, dtype=np.int64)
        relay_of[fb_rx] = fb_src
        g_relays = relay_of[g_rows]

        if added.any():
            a_rows, a_cols = np.nonzero(added)
            np.add.at(self.cl, (a_rows, self.beams[a_rows, a_cols]), 1)
            self.first_slot[a_rows, a_cols] = slot
            self.relay[g_rows, g_cols] = g_relays
        self.nl = new

        return SlotOutcome(
            slot=slot,
            modes=modes.copy(),
            beams=beams.copy(),
            hellos=np.column_stack([receivers, senders]).astype(np.int64),
            collisions=collided,
            suppressed=np.column_stack([receivers[quiet], senders[quiet]]).astype(np.int64),
            feedback=np.column_stack([fb_rx, fb_src]).astype(np.int64),
            feedback_collisions=fb_collided,
            direct=direct.astype(np.int64),
            gossip=np.column_stack([g_rows, g_cols, g_relays]).astype(np.int64),
        )


def run_slot(network: Network, decisions: list[SlotDecision], slot: int = 1) -> SlotOutcome:
    """Resolve one slot from per-node decisions (ordered by node id)."""
    modes = np.full(network.n, IDLE, dtype=np.int64)
    beams = np.full(network.n, IDLE, dtype=np.int64)
    for d in decisions:
        if d.idle:
            continue
        modes[d.node] = d.mode
        beams[d.node] = d.beam
    return network.run_slot(modes, beams, slot)


@dataclass
class Trace:
    """Everything needed to replay or audit one simulated run."""

    record: RunRecord
    network: Network
    outcomes: list[SlotOutcome] = field(default_factory=list)


def seed_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent placement, sensing and decision streams for one replication."""
    place, sense, decide = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(place), np.random.default_rng(sense), np.random.default_rng(decide))


def build_network(config: ScenarioConfig, algorithm: Algorithm, seed: int) -> tuple[Network, np.random.Generator]:
    rng_place, rng_sense, rng_decide = seed_streams(seed)
    layout = place_nodes(config, rng_place)
    spec = beam_spec_for(config, layout, rng_place)
    sensing = run_sensing_phase(layout, spec, SensingConfig.from_scenario(config), rng_sense)
    policies.check_resolution(algorithm, sensing.exact)
    net = Network(layout, spec, sensing, algorithm, config.comm_range, config.non_reply_rule)
    return net, rng_decide


def simulate(
    config: ScenarioConfig,
    algorithm: str | Algorithm | None = None,
    seed: int | None = None,
    *,
    event_log: IO[str] | None = None,
    keep_outcomes: bool = False,
) -> Trace:
    """Run one replication until the convergence rule fires or the slot cap is hit."""
    algo = policies.get_algorithm(algorithm or config.algorithm)
    seed = config.base_seed if seed is None else seed
    policies.check_transmit_probability(config.p_transmit)
    net, rng = build_network(config, algo, seed)
    n = net.n
    schedule = qlearning.ExplorationSchedule(config.epsilon0, config.epsilon_decay)
    ep_beams = net.beam_count
    if config.ep_denominator == "nonempty":
        ep_beams = max(1, round(float(np.mean(np.count_nonzero(net.radar, axis=1)))))
    ep = qlearning.extreme_point(config.n_nodes, ep_beams)
    warmup = config.warmup_slots
    idx = np.arange(n)

    trace = Trace(record=None, network=net)  # type: ignore[arg-type]
    discoveries: list[int] = []
    completion: list[int | None] = [None] * n
    full = n - 1
    if full == 0:
        completion = [0] * n
    known = np.zeros(n, dtype=np.int64)
    last = 0
    status = RUNNING
    modes = policies.draw_modes(config.p_transmit, n, rng)
    t = 0
    while status == RUNNING:
        t += 1
        eps = schedule.epsilon(t - 1)
        act_modes, act_beams = policies.decide_all(algo, modes, net.radar, net.cl, net.q, eps, rng)
        outcome = net.run_slot(act_modes, act_beams, t)
        next_modes = policies.draw_modes(config.p_transmit, n, rng)
        if algo.learning:
            r = qlearning.rewards(net.radar[idx, act_beams], net.cl[idx, act_beams], ep)
            qlearning.q_update_many(net.q, act_modes, act_beams, r, next_modes, config.alpha, config.gamma)
        modes = next_modes

        found = outcome.new_discoveries
        discoveries.append(found)
        if found:
            last = t
            counts = net.nl.sum(axis=1)
            for i in np.flatnonzero((counts == full) & (known < full)):
                completion[i] = t
            known = counts
        if event_log is not None:
            for ev in outcome.events():
                event_log.write(json.dumps(ev) + "\n")
        if keep_outcomes:
            trace.outcomes.append(outcome)
        status = check_convergence(last, t, warmup, config.slot_cap)

    trace.record = RunRecord(
        algorithm=algo.name,
        seed=int(seed),
        n_nodes=n,
        discoveries=discoveries,
        completion_slots=completion,
        last_discovery_slot=last,
        detection_slot=t,
        status=status,
        complete=net.complete(),
        sensing_duration=net.sensing.duration,
    )
    return trace


def run_replication(config: ScenarioConfig, algorithm: str | Algorithm, seed: int) -> RunRecord:
    return simulate(config, algorithm, seed).record
