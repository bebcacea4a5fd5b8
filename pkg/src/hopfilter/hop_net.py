"""Hop-by-hop transport over a lossy multi-hop path.

A packet crosses N links in order; each link retries until the first
acknowledged delivery or until L transmissions have been spent, and a
packet that exhausts a link's allowance is dropped (no source restart).
Closed forms for the delivery probability and the expected event counts
live next to a Monte Carlo simulator that counts the same events, so
each can audit the other.

Event conventions (mirrors the radio accounting in `energy`):
  * tx counts data transmissions, capped at L per hop;
  * rx counts successful receptions only — a failed attempt costs the
    receiver nothing;
  * every transmission makes the radio leave and re-enter reception
    mode, so sw = 2 * tx identically;
  * link-layer acknowledgments are free unless count_ack is set, in
    which case each successful hop adds one ack transmission and one
    ack reception to the totals (per_hop_tx stays data-only).
"""

import os
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvalidProbability


@dataclass(frozen=True)
class HopNetworkConfig:
    """Path parameters: link count N, link delivery p, per-hop cap L.

    L=None lifts the retransmission cap (unbounded allowance).
    """

    p: float
    L: object = None
    N: int = 10
    count_ack: bool = False

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise InvalidProbability(f"link probability {self.p} not in (0, 1]")
        if self.L is not None and (int(self.L) != self.L or self.L < 1):
            raise ValueError(f"retransmission cap {self.L} must be >= 1 or None")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"hop count {self.N} must be a positive integer")

    @property
    def l_cap(self):
        # kernel sentinel: -1 encodes "no cap"
        return -1 if self.L is None else int(self.L)


@dataclass(frozen=True)
class PacketOutcome:
    """Event counts of a single packet's journey."""

    delivered: bool
    tx_count: int
    rx_count: int
    sw_count: int
    per_hop_tx: tuple

    def __post_init__(self):
        if self.sw_count != 2 * self.tx_count:
            raise ValueError("switch count must be twice the transmission count")


@dataclass(frozen=True)
class TransportStats:
    """Aggregates over Monte Carlo trials (population variances)."""

    trials: int
    delivery_rate: float
    mean_tx: float
    mean_rx: float
    mean_sw: float
    var_tx: float
    var_rx: float
    var_sw: float
    seed: int

    def to_dict(self):
        return {
            "trials": self.trials,
            "delivery_rate": self.delivery_rate,
            "mean_tx": self.mean_tx,
            "mean_rx": self.mean_rx,
            "mean_sw": self.mean_sw,
            "var_tx": self.var_tx,
            "var_rx": self.var_rx,
            "var_sw": self.var_sw,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ExpectedCounts:
    """Closed-form per-packet expectations."""

    e_tx: float
    e_rx: float
    e_sw: float


def success_probability(config):
    """End-to-end delivery probability [1 - (1-p)^L]^N."""
    if config.L is None:
        return 1.0
    q = 1.0 - (1.0 - config.p) ** config.L
    return q ** config.N


def hop_success_probability(config):
    """Per-hop delivery probability q = 1 - (1-p)^L."""
    if config.L is None:
        return 1.0
    return 1.0 - (1.0 - config.p) ** config.L


def expected_hop_deliveries(config):
    """E[number of hops crossed] = sum_{h=1..N} q^h, summed directly."""
    q = hop_success_probability(config)
    total = 0.0
    term = 1.0
    for _ in range(config.N):
        term *= q
        total += term
    return total


def expected_counts(config):
    """Expected tx/rx/switch counts per packet.

    Each attempted hop consumes E[min(Geom(p), L)] = q/p transmissions
    and hop h is attempted with probability q^(h-1), which telescopes to
    e_tx = S/p with S = sum q^h.  Receptions are successful hops, and
    e_rx is evaluated as p * e_tx so the proportionality is exact in
    floating point, not just in expectation.
    """
    s = float(config.N) if config.L is None else expected_hop_deliveries(config)
    e_tx = s / config.p
    e_rx = config.p * e_tx
    if config.count_ack:
        e_tx = e_tx + s
        e_rx = e_rx + s
    return ExpectedCounts(e_tx=e_tx, e_rx=e_rx, e_sw=2.0 * e_tx)


def simulate_packet(config, rng):
    """One packet, one Bernoulli draw per transmission attempt.

    This is the straight-line reference path: it spends an attempt at a
    time instead of sampling the per-hop geometric in one shot like the
    batch kernels, so the two implementations check each other.
    """
    per_hop = [0] * config.N
    tx = 0
    rx = 0
    delivered = True
    for h in range(config.N):
        got_through = False
        while True:
            per_hop[h] += 1
            tx += 1
            if rng.random() < config.p:
                got_through = True
                break
            if config.L is not None and per_hop[h] >= config.L:
                break
        if not got_through:
            delivered = False
            break
        rx += 1
    if config.count_ack:
        tx += rx
        rx += rx
    return PacketOutcome(delivered=delivered, tx_count=tx, rx_count=rx,
                         sw_count=2 * tx, per_hop_tx=tuple(per_hop))


def use_numba():
    """True when the compiled kernel is active (env flag + importability)."""
    if os.environ.get("HOPFILTER_DISABLE_NUMBA", "") not in ("", "0"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def _run_kernel(seed, trials, p, l_cap, n_hops):
    if use_numba():
        return _kernels.transport_counts_numba(seed, trials, p, l_cap, n_hops)
    return _kernels.transport_counts_numpy(seed, trials, p, l_cap, n_hops)


def monte_carlo(config, trials, seed):
    """Counter-based Monte Carlo over independent per-trial substreams.

    Aggregation uses exact integer sums, so the result depends only on
    (config, trials, seed) — not on chunking or execution order.
    """
    if trials < 1:
        raise ValueError("at least one trial is required")
    tx, rx = _run_kernel(int(seed), int(trials), config.p, config.l_cap,
                         config.N)
    n_delivered = int(np.count_nonzero(rx == config.N))
    if config.count_ack:
        tx = tx + rx
        rx = rx + rx
    s_tx, s_tx2 = int(tx.sum()), int((tx * tx).sum())
    s_rx, s_rx2 = int(rx.sum()), int((rx * rx).sum())
    t = int(trials)

    def _var(s1, s2):
        return float(t * s2 - s1 * s1) / (float(t) * float(t))

    mean_tx = s_tx / t
    return TransportStats(
        trials=t,
        delivery_rate=n_delivered / t,
        mean_tx=mean_tx,
        mean_rx=s_rx / t,
        mean_sw=2.0 * mean_tx,
        var_tx=_var(s_tx, s_tx2),
        var_rx=_var(s_rx, s_rx2),
        var_sw=4.0 * _var(s_tx, s_tx2),
        seed=int(seed),
    )


def per_trial_counts(config, trials, seed):
    """Raw per-trial (tx, rx, delivered) arrays for CSV export."""
    tx, rx = _run_kernel(int(seed), int(trials), config.p, config.l_cap,
                         config.N)
    delivered = rx == config.N
    if config.count_ack:
        tx = tx + rx
        rx = rx + rx
    return tx, rx, delivered
