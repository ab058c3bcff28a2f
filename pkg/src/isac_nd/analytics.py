"""Analytic model of the expected number of discovered neighbours N(t).

All four gossip algorithms share one pipeline:

1. a per-slot probability p(t) that a given pair completes a handshake,
2. the direct-discovery curve D(t) = 1 - prod_g (1 - p(g)),
3. the gossip recursion I(t) = I(t-1) + (1 - I(t-1)) * A(t), with
   A(t) = relays * p(t) * P(t-1) under homogenisation,
4. P(t) = D(t) + (1 - D(t)) * I(t) and N(t) = (N - 1) * P(t).

They differ only in step 1. Per-beam occupancy is binomial in the number
of neighbours; ``M`` is the mean occupancy of a non-empty beam and ``B``
the expected number of non-empty beams.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

ANALYTIC_ALGORITHMS = ("G-nRS", "G-RnS", "G-nRnS", "G-RS")


class BoundsError(ArithmeticError):
    """A probability left [0, 1] while evaluating in strict mode."""


@dataclass(frozen=True)
class AnalyticParams:
    n_nodes: int
    beam_count: int
    p_transmit: float
    horizon: int

    def __post_init__(self) -> None:
        if self.n_nodes < 2:
            raise ValueError("the analytic model needs at least two nodes")
        if self.beam_count < 1:
            raise ValueError("beam_count must be >= 1")
        if not 0.0 < self.p_transmit < 1.0:
            raise ValueError("p_transmit must lie strictly in (0, 1)")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")

    @property
    def relays(self) -> int:
        # every other node is a common one-hop neighbour
        return self.n_nodes - 2


@dataclass(frozen=True)
class OccupancyModel:
    neighbors: int
    beam_count: int
    pmf: np.ndarray  # P(u neighbours in one beam), u = 0..neighbors

    @property
    def truncated(self) -> np.ndarray:
        """Occupancy pmf conditioned on a non-empty beam; entry 0 is zero."""
        out = self.pmf.copy()
        out[0] = 0.0
        return out / (1.0 - self.pmf[0])

    @property
    def effective_beams(self) -> float:
        return self.beam_count * (1.0 - self.pmf[0])

    @property
    def mean_occupancy(self) -> float:
        u = np.arange(len(self.pmf))
        return float(np.dot(u, self.truncated))


def occupancy_pmf(neighbors: int, beam_count: int) -> OccupancyModel:
    """Binomial count of ``neighbors`` uniform bearings falling into one of ``beam_count`` sectors."""
    if neighbors < 1 or beam_count < 1:
        raise ValueError("need at least one neighbour and one beam")
    q = 1.0 / beam_count
    pmf = np.array(
        [math.comb(neighbors, u) * q**u * (1.0 - q) ** (neighbors - u) for u in range(neighbors + 1)]
    )
    return OccupancyModel(neighbors, beam_count, pmf)


@dataclass
class AnalyticSeries:
    algorithm: str
    params: AnalyticParams
    direct: np.ndarray
    indirect: np.ndarray
    prob: np.ndarray
    expected: np.ndarray
    pair_prob: np.ndarray
    clamp_events: int = 0

    @property
    def t(self) -> np.ndarray:
        return np.arange(1, len(self.prob) + 1)

    def rows(self) -> list[tuple[int, float, float, float, float]]:
        return [
            (int(t), float(d), float(i), float(p), float(n))
            for t, d, i, p, n in zip(self.t, self.direct, self.indirect, self.prob, self.expected)
        ]


@dataclass
class _Bounds:
    strict: bool = False
    events: int = 0
    where: list[str] = field(default_factory=list)

    def __call__(self, value: float, what: str) -> float:
        if 0.0 <= value <= 1.0:
            return value
        self.events += 1
        msg = f"{what} = {float(value)!r} outside [0, 1]"
        if self.strict:
            raise BoundsError(msg)
        if len(self.where) < 3:
            self.where.append(msg)
        return min(max(value, 0.0), 1.0)

    def report(self, label: str) -> None:
        if self.events:
            log.warning(
                "%s: clamped %d out-of-range value(s), first: %s", label, self.events, "; ".join(self.where)
            )


def _gossip_step(
    prev_i: float, prev_p: float, d_t: float, p_t: float, relays: float, t: int, bound: _Bounds
) -> tuple[float, float]:
    if t == 1:
        i_t = 0.0
    else:
        a_t = bound(relays * p_t * prev_p, f"A({t})")
        i_t = prev_i + (1.0 - prev_i) * a_t
    return i_t, d_t + (1.0 - d_t) * i_t


def gossip_recursion(
    direct: np.ndarray, pair_prob: np.ndarray, relays: int, *, strict: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Indirect-discovery curve I(t) and combined curve P(t) for t = 1..len(direct)."""
    direct = np.asarray(direct, dtype=np.float64)
    pair_prob = np.asarray(pair_prob, dtype=np.float64)
    if direct.shape != pair_prob.shape:
        raise ValueError("direct and pair_prob series must have equal length")
    bound = _Bounds(strict)
    indirect = np.zeros_like(direct)
    prob = np.zeros_like(direct)
    prev_i = prev_p = 0.0
    for k in range(len(direct)):
        prev_i, prev_p = _gossip_step(prev_i, prev_p, direct[k], pair_prob[k], relays, k + 1, bound)
        indirect[k], prob[k] = prev_i, prev_p
    bound.report("gossip_recursion")
    return indirect, prob


def expected_discovered(prob: np.ndarray, n_nodes: int) -> np.ndarray:
    return np.asarray(prob, dtype=np.float64) * (n_nodes - 1)


def direct_curve(pair_prob: np.ndarray) -> np.ndarray:
    return 1.0 - np.cumprod(1.0 - np.asarray(pair_prob, dtype=np.float64))


# --- per-slot pair probabilities -------------------------------------------------


def align_probability(p0: float, free_i: float, free_j: float) -> float:
    """i transmits, j receives, and each picks the other's beam among its open beams."""
    return p0 * (1.0 - p0) / free_i / free_j


def empty_probability(beams: float, done: float) -> float:
    """Chance an in-beam node still has work in the beam covering the target."""
    return (beams - done) / beams


def interferer_count(occupancy: float, heard: float, p_emp: float) -> float:
    return (occupancy - 1.0 - heard) * p_emp


def static_pair_probability(p0: float, beams: float, occupancy: float) -> float:
    """Homogenised handshake probability with every non-empty beam eligible."""
    return (
        2.0 * (1.0 - p0) * p0 / beams**2
        * (1.0 - (1.0 - p0) / beams) ** (occupancy - 1.0)
        * (1.0 - p0 / beams) ** (occupancy - 1.0)
    )


def directed_nonreply_probability(p0: float, beams: float, m_tx: float, m_rx: float, heard: float) -> float:
    """One direction of the handshake when ``heard`` in-beam nodes already stay silent."""
    return (
        (1.0 - p0) * p0 / beams**2
        * (1.0 - (1.0 - p0) / beams) ** (m_tx - 1.0 - heard)
        * (1.0 - p0 / beams) ** (m_rx - 1.0)
    )


def homogenised_align_probability(p0: float, beams: float, done: float) -> float:
    return 2.0 * p0 * (1.0 - p0) / (beams - done) ** 2


def harmonic_time_average(probs: list[float]) -> float:
    """Time average of a piecewise-constant rate whose pieces last 1/p slots each."""
    if any(p <= 0 for p in probs):
        return 0.0
    return len(probs) / sum(1.0 / p for p in probs)


# --- curves ----------------------------------------------------------------------


def _relays(params: AnalyticParams, prev_p: float, non_reply: bool) -> float:
    # a silent partner carries no gossip: under non-reply only relays that
    # have not yet heard us still answer
    return params.relays * (1.0 - prev_p) if non_reply else float(params.relays)


def _finish(
    algorithm: str, params: AnalyticParams, pair: np.ndarray, bound: _Bounds, non_reply: bool
) -> AnalyticSeries:
    direct = direct_curve(pair)
    indirect = np.zeros_like(direct)
    prob = np.zeros_like(direct)
    prev_i = prev_p = 0.0
    for k in range(len(direct)):
        relays = _relays(params, prev_p, non_reply)
        prev_i, prev_p = _gossip_step(prev_i, prev_p, direct[k], pair[k], relays, k + 1, bound)
        indirect[k], prob[k] = prev_i, prev_p
    bound.report(algorithm)
    return AnalyticSeries(
        algorithm, params, direct, indirect, prob, expected_discovered(prob, params.n_nodes), pair, bound.events
    )


def grns_curve(params: AnalyticParams, *, strict: bool = False) -> AnalyticSeries:
    occ = occupancy_pmf(params.n_nodes - 1, params.beam_count)
    p = static_pair_probability(params.p_transmit, occ.effective_beams, occ.mean_occupancy)
    bound = _Bounds(strict)
    pair = np.full(params.horizon, bound(p, "P"))
    return _finish("G-RnS", params, pair, bound, non_reply=False)


def gnrns_curve(params: AnalyticParams, *, strict: bool = False) -> AnalyticSeries:
    occ = occupancy_pmf(params.n_nodes - 1, params.beam_count)
    beams, mean_m = occ.effective_beams, occ.mean_occupancy
    weights = occ.truncated
    p0 = params.p_transmit
    avg = 0.0
    for m_tx in range(1, occ.neighbors + 1):
        if weights[m_tx] == 0.0:
            continue
        pieces = [directed_nonreply_probability(p0, beams, m_tx, mean_m, u) for u in range(m_tx)]
        avg += harmonic_time_average(pieces) * weights[m_tx]
    bound = _Bounds(strict)
    pair = np.full(params.horizon, bound(2.0 * avg, "P_bar"))
    return _finish("G-nRnS", params, pair, bound, non_reply=True)


def _stop_curve(algorithm: str, params: AnalyticParams, non_reply: bool, strict: bool) -> AnalyticSeries:
    """Slot-by-slot evaluation with beam completion tracked in expectation."""
    occ = occupancy_pmf(params.n_nodes - 1, params.beam_count)
    beams, mean_m = occ.effective_beams, occ.mean_occupancy
    weights = occ.truncated
    u = np.arange(len(weights))
    p0 = params.p_transmit
    bound = _Bounds(strict)

    h = params.horizon
    pair = np.zeros(h)
    direct = np.zeros(h)
    indirect = np.zeros(h)
    prob = np.zeros(h)
    prev_d = prev_i = prev_p = 0.0
    for k in range(h):
        t = k + 1
        if prev_p >= 1.0:
            # every beam closed: the curve has saturated
            pair[k:] = pair[k - 1]
            direct[k:] = direct[k - 1]
            indirect[k:] = indirect[k - 1]
            prob[k:] = 1.0
            break
        heard = (mean_m - 1.0) * prev_p if non_reply else 0.0
        # the beam holding an undiscovered partner is never complete, so only
        # the other B - 1 beams can have closed
        done = (beams - 1.0) * float(np.dot(weights, prev_p**u))
        free = beams - done
        p_emp = empty_probability(beams, done)
        a = interferer_count(mean_m, heard, p_emp)
        b = interferer_count(mean_m, 0.0, p_emp)
        p_t = (
            homogenised_align_probability(p0, beams, done)
            * (1.0 - (1.0 - p0) / free) ** a
            * (1.0 - p0 / free) ** b
        )
        p_t = bound(p_t, f"P_ij({t})")
        pair[k] = p_t
        prev_d = 1.0 - (1.0 - prev_d) * (1.0 - p_t)
        direct[k] = prev_d
        relays = _relays(params, prev_p, non_reply)
        prev_i, prev_p = _gossip_step(prev_i, prev_p, prev_d, p_t, relays, t, bound)
        indirect[k], prob[k] = prev_i, prev_p
    bound.report(algorithm)
    return AnalyticSeries(
        algorithm, params, direct, indirect, prob, expected_discovered(prob, params.n_nodes), pair, bound.events
    )


def gnrs_curve(params: AnalyticParams, *, strict: bool = False) -> AnalyticSeries:
    return _stop_curve("G-nRS", params, True, strict)


def grs_curve(params: AnalyticParams, *, strict: bool = False) -> AnalyticSeries:
    return _stop_curve("G-RS", params, False, strict)


CURVES = {
    "G-nRS": gnrs_curve,
    "G-RnS": grns_curve,
    "G-nRnS": gnrns_curve,
    "G-RS": grs_curve,
}


def curve(algorithm: str, params: AnalyticParams, *, strict: bool = False) -> AnalyticSeries:
    try:
        fn = CURVES[algorithm]
    except KeyError:
        raise ValueError(
            f"no analytic model for {algorithm!r}; available: {', '.join(ANALYTIC_ALGORITHMS)}"
        ) from None
    return fn(params, strict=strict)
