import itertools
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isac_nd import analytics as an
from isac_nd.analytics import AnalyticParams


def test_occupancy_examples():
    occ = an.occupancy_pmf(2, 2)
    assert occ.pmf.tolist() == [0.25, 0.5, 0.25]
    assert occ.effective_beams == 1.5
    one = an.occupancy_pmf(7, 1)
    assert one.pmf[-1] == 1.0 and not one.pmf[:-1].any()
    assert one.mean_occupancy == 7
    for n, b0 in [(5, 3), (19, 10), (49, 25)]:
        occ = an.occupancy_pmf(n, b0)
        u = np.arange(n + 1)
        assert occ.pmf.sum() == pytest.approx(1.0, abs=1e-12)
        assert occ.truncated.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.dot(u, occ.pmf) == pytest.approx(n / b0, abs=1e-12)
        assert 1 <= occ.mean_occupancy <= n


def enumerate_three_nodes(p: float, horizon: int) -> list[float]:
    """Exact P(t) for the homogenised 3-node model by listing every outcome path.

    Per slot s there are three independent binary events: i and j hand-shake
    directly (prob p), i hears the relay m (prob p), and m already knows j
    (prob P(s-1), itself obtained by enumeration at horizon s-1; zero at s=1).
    j is discovered by t if any direct event happened, or a relay event
    coincided with m knowing j in some slot s >= 2.
    """
    out: list[float] = []
    for t in range(1, horizon + 1):
        knows = [0.0] + out  # P(s-1) for s = 1..t
        total = 0.0
        for path in itertools.product((0, 1), repeat=3 * t):
            prob = 1.0
            found = False
            for s in range(t):
                d, link, kn = path[3 * s : 3 * s + 3]
                prob *= (p if d else 1 - p) * (p if link else 1 - p) * (knows[s] if kn else 1 - knows[s])
                if d or (link and kn and s >= 1):
                    found = True
            if found:
                total += prob
        out.append(total)
    return out


def test_gossip_recursion_matches_three_node_enumeration():
    p, h = 0.2, 3
    pair = np.full(h, p)
    direct = an.direct_curve(pair)
    indirect, prob = an.gossip_recursion(direct, pair, relays=1)
    assert indirect[0] == 0.0
    assert np.max(np.abs(prob - enumerate_three_nodes(p, h))) < 1e-12


def test_gossip_recursion_examples():
    d = an.direct_curve(np.full(5, 0.1))
    i, p = an.gossip_recursion(d, np.zeros(5), relays=10)
    assert not i.any() and np.array_equal(p, d)
    i, p = an.gossip_recursion(an.direct_curve(np.ones(3)), np.ones(3), relays=1)
    assert p[0] == 1.0
    with pytest.raises(ValueError):
        an.gossip_recursion(np.zeros(3), np.zeros(4), 1)


def test_gossip_recursion_matches_quadratic_form():
    # with constant pair probability p, D(t-1) = 1 - q, q = (1 - p)^(t-1), and
    # K = relays * p the step is a quadratic in I(t-1)
    p, relays, h = 0.01, 18, 80
    pair = np.full(h, p)
    i, _ = an.gossip_recursion(an.direct_curve(pair), pair, relays)
    k = relays * p
    for t in range(2, h + 1):
        q = (1 - p) ** (t - 1)
        prev = i[t - 2]
        quad = -k * q * prev**2 + (1 + k * (2 * q - 1)) * prev + k * (1 - q)
        assert i[t - 1] == pytest.approx(quad, abs=1e-14)


def test_substitution_examples():
    assert an.align_probability(0.5, 4, 4) == 0.015625
    assert an.empty_probability(5, 2) == 0.6
    assert an.interferer_count(4, 1, 0.5) == 1.0
    assert an.static_pair_probability(0.5, 2, 1) == 0.125
    assert an.direct_curve(np.full(2, 0.125))[1] == 0.234375
    assert an.homogenised_align_probability(0.5, 4, 0) == 0.03125
    assert an.interferer_count(3, 0, 0.5) == 1.0
    assert an.homogenised_align_probability(0.3, 7.5, 6.5) == pytest.approx(2 * 0.3 * 0.7)


def test_nonreply_reduces_to_static_form():
    for b, m in [(8.6, 2.2), (13.0, 1.5), (1.0, 1.0)]:
        assert 2 * an.directed_nonreply_probability(0.5, b, m, m, 0.0) == pytest.approx(
            an.static_pair_probability(0.5, b, m), rel=1e-12
        )
    assert an.harmonic_time_average([0.3]) == 0.3
    assert an.harmonic_time_average([0.5, 0.25]) == pytest.approx(2 / 6)


def test_expected_discovered():
    assert an.expected_discovered(np.array([1.0, 0.0, 0.5]), 11).tolist() == [10.0, 0.0, 5.0]
    rng = np.random.default_rng(0)
    draws = rng.random((20000, 19)) < 0.37
    assert draws.sum(axis=1).mean() == pytest.approx(an.expected_discovered(np.array([0.37]), 20)[0], rel=0.01)


@pytest.mark.parametrize("algo", an.ANALYTIC_ALGORITHMS)
def test_two_node_degenerate_agreement(algo):
    c = an.curve(algo, AnalyticParams(2, 1, 0.5, 10))
    assert np.allclose(c.prob, 1 - 0.5 ** np.arange(1, 11), atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(an.ANALYTIC_ALGORITHMS),
    st.integers(2, 40),
    st.sampled_from([1, 2, 4, 10, 25]),
    st.floats(0.1, 0.9),
)
def test_curve_invariants(algo, n, b0, p0):
    c = an.curve(algo, AnalyticParams(n, b0, p0, 300))
    for series in (c.direct, c.indirect, c.prob, c.pair_prob):
        assert np.all((series >= 0) & (series <= 1))
    assert np.all(np.diff(c.expected) >= -1e-12)
    assert np.all(c.expected <= n - 1 + 1e-9)
    assert np.all(c.prob >= c.direct - 1e-15)


def test_grns_tends_to_all_neighbours():
    c = an.grns_curve(AnalyticParams(20, 10, 0.5, 2000))
    assert c.expected[-1] == pytest.approx(19.0, abs=1e-6)
    assert np.all(np.diff(c.pair_prob) == 0)


def test_more_beams_converge_slower():
    fast = an.gnrs_curve(AnalyticParams(20, 10, 0.5, 400)).expected
    slow = an.gnrs_curve(AnalyticParams(20, 25, 0.5, 400)).expected
    assert np.all(slow <= fast + 1e-12) and slow[50] < fast[50]


def test_horizon_zero_is_empty():
    for algo in an.ANALYTIC_ALGORITHMS:
        c = an.curve(algo, AnalyticParams(10, 4, 0.5, 0))
        assert len(c.prob) == 0 and c.rows() == []


def test_strict_mode_and_clamp_logging(caplog):
    params = AnalyticParams(20, 10, 0.5, 200)
    for algo in ("G-nRS", "G-RnS", "G-nRnS"):
        assert an.curve(algo, params, strict=True).clamp_events == 0
    with caplog.at_level(logging.WARNING, logger="isac_nd.analytics"):
        c = an.grs_curve(params)
    assert c.clamp_events == 1 and "clamped 1" in caplog.text
    with pytest.raises(an.BoundsError):
        an.grs_curve(params, strict=True)


def test_params_and_dispatch_validation():
    with pytest.raises(ValueError):
        AnalyticParams(1, 4, 0.5, 10)
    with pytest.raises(ValueError):
        AnalyticParams(5, 0, 0.5, 10)
    with pytest.raises(ValueError):
        AnalyticParams(5, 4, 1.0, 10)
    with pytest.raises(ValueError):
        an.curve("GQ-nRnS", AnalyticParams(5, 4, 0.5, 10))
