"""Deterministic discrete-event simulator of a single-hop shared channel.

Stations contend for the channel after each transmission ends.  Timing is
normalized to the carrier-sense quantum: a transmission started at time t
becomes sensible to the others no later than t + quantum, so two starts closer
than one quantum collide.  Collisions are not detected by the senders; outcome
feedback is modeled as instantaneous and cost-free, and a collided packet is
retained and recontended.

Reproducibility: one seed per run; per-station substreams are spawned from it
with numpy's SeedSequence, so adding stations does not perturb existing
streams and identical configs give bit-identical metrics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .laws import (
    BackoffLaw,
    ContinuousLaw,
    DiscretePoints,
    law_from_json,
    law_to_json,
)

__all__ = [
    "NetworkParams",
    "KPointDiscrete",
    "ImprovedPPersistent",
    "ClassicPPersistent",
    "ContinuousBackoff",
    "FullBuffer",
    "PoissonTraffic",
    "SimConfig",
    "SimMetrics",
    "generate_arrivals",
    "run_simulation",
    "config_to_json",
    "config_from_json",
]


@dataclass(frozen=True)
class NetworkParams:
    """Channel and population parameters; times are in sensing-quantum units."""

    n_stations: int
    delta: int  # packet duration, in quantum units
    quantum: float = 1.0

    def __post_init__(self):
        if self.n_stations < 1:
            raise ValueError("n_stations must be >= 1")
        if int(self.delta) != self.delta or self.delta < 1:
            raise ValueError("delta must be an integer >= 1")
        if self.quantum <= 0.0:
            raise ValueError("quantum must be > 0")


@dataclass(frozen=True)
class KPointDiscrete:
    """Stations transmit at one of the slot points 1..k quanta after the
    contention start, or stay silent, per the discrete law."""

    law: DiscretePoints


@dataclass(frozen=True)
class ImprovedPPersistent:
    """Each holder draws a participation coin (threshold p) and a uniform
    sensing moment in [0, window]; it transmits if the channel is idle then."""

    p: float
    window: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("p must lie in [0, 1]")
        if self.window < 0.0:
            raise ValueError("window must be >= 0")


@dataclass(frozen=True)
class ClassicPPersistent:
    """On an idle channel transmit immediately with probability p, else retry
    one quantum later; on a busy channel wait for the transmission end."""

    p: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("p must lie in [0, 1]")


@dataclass(frozen=True)
class ContinuousBackoff:
    """Each holder senses at window * X after the contention start, with X
    drawn from a continuous backoff law, and transmits if the channel is idle."""

    law: ContinuousLaw
    window: float

    def __post_init__(self):
        if self.window < 0.0:
            raise ValueError("window must be >= 0")


@dataclass(frozen=True)
class FullBuffer:
    """Every station always has a packet; a new one appears on delivery."""


@dataclass(frozen=True)
class PoissonTraffic:
    """Per-station Poisson arrivals with i.i.d. exponential interarrivals."""

    mean_interarrival: float

    def __post_init__(self):
        if self.mean_interarrival <= 0.0:
            raise ValueError("mean_interarrival must be > 0")


@dataclass(frozen=True)
class SimConfig:
    network: NetworkParams
    protocol: object
    traffic: object
    duration: float
    seed: int

    def __post_init__(self):
        if self.duration <= self.network.delta:
            raise ValueError("duration must exceed the packet length")

    def with_seed(self, seed: int) -> "SimConfig":
        return replace(self, seed=seed)


@dataclass
class SimMetrics:
    """Aggregated outcome of one simulation run."""

    n_tx: int
    n_rx: int
    busy_time: float
    total_time: float
    delays: np.ndarray
    rounds_contended: int
    rounds_success: int
    events: list | None = field(default=None, repr=False, compare=False)

    @property
    def empirical_p(self) -> float:
        if self.rounds_contended == 0:
            return 0.0
        return self.rounds_success / self.rounds_contended

    @property
    def occupancy(self) -> float:
        return self.busy_time / self.total_time

    @property
    def mean_delay(self) -> float:
        return float(np.mean(self.delays)) if len(self.delays) else float("nan")

    def to_json(self) -> dict:
        return {
            "n_tx": self.n_tx,
            "n_rx": self.n_rx,
            "busy_time": self.busy_time,
            "total_time": self.total_time,
            "rounds_contended": self.rounds_contended,
            "rounds_success": self.rounds_success,
            "empirical_p": self.empirical_p,
            "delays": [float(d) for d in self.delays],
        }


def _station_streams(seed: int, n_stations: int):
    """Spawn per-station substreams: n backoff bit generators plus n arrival
    generators, all children of the run seed."""
    children = np.random.SeedSequence(seed).spawn(2 * n_stations)
    backoff = [np.random.PCG64(c) for c in children[:n_stations]]
    arrival = [np.random.Generator(np.random.PCG64(c)) for c in children[n_stations:]]
    return backoff, arrival


def generate_arrivals(traffic, n_stations: int, duration: float, rngs):
    """Per-station sorted packet arrival times.

    Full-buffer traffic returns None (conceptually infinite backlog).  Poisson
    traffic returns one array per station, consuming draws only from that
    station's generator in ``rngs``.
    """
    if duration <= 0.0:
        raise ValueError("duration must be > 0")
    if isinstance(traffic, FullBuffer):
        return None
    mean = traffic.mean_interarrival
    out = []
    for s in range(n_stations):
        rng = rngs[s]
        chunk = max(64, int(duration / mean * 1.2) + 16)
        times = np.cumsum(rng.exponential(mean, size=chunk))
        while times[-1] <= duration:
            more = np.cumsum(rng.exponential(mean, size=chunk)) + times[-1]
            times = np.concatenate([times, more])
        out.append(times[times <= duration])
    return out


def run_simulation(config: SimConfig, record_events: bool = False) -> SimMetrics:
    """Simulate the channel from time 0 to the configured duration.

    Identical config (seed included) gives bit-identical metrics.  With
    ``record_events`` the metrics carry a (time, station, kind) event list.
    """
    net = config.network
    backoff_bgs, arrival_rngs = _station_streams(config.seed, net.n_stations)
    arrivals = generate_arrivals(
        config.traffic, net.n_stations, config.duration, arrival_rngs
    )

    if isinstance(config.protocol, KPointDiscrete):
        raw = _kernels.kpoint_run(
            config.protocol.law.cumulative(),
            net.n_stations,
            float(net.delta) * net.quantum,
            float(config.duration),
            net.quantum,
            backoff_bgs,
            arrivals,
            record_events=record_events,
        )
    else:
        raw = _continuous_run(
            config.protocol,
            net,
            float(config.duration),
            backoff_bgs,
            arrivals,
            record_events,
        )

    return SimMetrics(
        n_tx=int(raw["n_tx"]),
        n_rx=int(raw["n_rx"]),
        busy_time=float(raw["busy_time"]),
        total_time=float(raw["total_time"]),
        delays=np.asarray(raw["delays"], dtype=np.float64),
        rounds_contended=int(raw["rounds_contended"]),
        rounds_success=int(raw["rounds_success"]),
        events=raw["events"],
    )


def _continuous_run(protocol, net, duration, backoff_bgs, arrivals, record_events):
    """Event loop for the real-valued-timing protocols."""
    n = net.n_stations
    lam = net.quantum
    packet = float(net.delta) * lam
    gens = [np.random.Generator(bg) for bg in backoff_bgs]
    full_buffer = arrivals is None

    holding = [full_buffer] * n
    creation = [0.0] * n
    ptr = [0] * n

    t = 0.0
    n_tx = n_rx = 0
    rounds_contended = rounds_success = 0
    busy_time = 0.0
    delays = []
    events = [] if record_events else None

    while True:
        if not full_buffer:
            for s in range(n):
                if not holding[s]:
                    arr = arrivals[s]
                    if ptr[s] < len(arr) and arr[ptr[s]] <= t:
                        holding[s] = True
                        creation[s] = arr[ptr[s]]
                        ptr[s] += 1
                        if events is not None:
                            events.append((creation[s], s, "pickup"))
            if not any(holding):
                t_next = duration
                for s in range(n):
                    arr = arrivals[s]
                    if ptr[s] < len(arr) and arr[ptr[s]] < t_next:
                        t_next = arr[ptr[s]]
                if t_next >= duration:
                    break
                t = t_next
                continue

        holders = [s for s in range(n) if holding[s]]

        if isinstance(protocol, ClassicPPersistent):
            senders = [s for s in holders if gens[s].random() < protocol.p]
            if not senders:
                if t + lam > duration:
                    break
                rounds_contended += 1
                t += lam
                continue
            starts = {s: t for s in senders}
        else:
            if isinstance(protocol, ImprovedPPersistent):
                participants = []
                for s in holders:
                    xi = gens[s].random()
                    eta = gens[s].random() * protocol.window
                    if xi < protocol.p:
                        participants.append((eta, s))
                if not participants:
                    adv = protocol.window + lam
                    if t + adv > duration:
                        break
                    rounds_contended += 1
                    t += adv
                    continue
            else:  # ContinuousBackoff
                participants = [
                    (protocol.window * float(protocol.law.inverse_cdf(gens[s].random())), s)
                    for s in holders
                ]
            eta_min = min(eta for eta, _ in participants)
            # anyone sensing before the first start becomes sensible transmits too
            starts = {s: t + eta for eta, s in participants if eta < eta_min + lam}

        senders = sorted(starts)
        first = min(starts.values())
        last = max(starts.values())
        end = last + packet
        if end > duration:
            break
        rounds_contended += 1
        n_tx += len(senders)
        busy_time += (last - first) + packet
        if events is not None:
            for s in senders:
                events.append((starts[s], s, "tx_start"))
                events.append((starts[s] + packet, s, "tx_end"))
        if len(senders) == 1:
            winner = senders[0]
            rounds_success += 1
            n_rx += 1
            delays.append(end - creation[winner])
            if events is not None:
                events.append((end, winner, "rx"))
            if full_buffer:
                creation[winner] = end
            else:
                holding[winner] = False
                arr = arrivals[winner]
                while ptr[winner] < len(arr) and arr[ptr[winner]] <= end:
                    ptr[winner] += 1  # dropped while holding
        t = end

    return {
        "n_tx": n_tx,
        "n_rx": n_rx,
        "busy_time": busy_time,
        "total_time": duration,
        "rounds_contended": rounds_contended,
        "rounds_success": rounds_success,
        "delays": np.asarray(delays, dtype=np.float64),
        "events": events,
    }


# ---------------------------------------------------------------------------
# JSON config schema (flat, tagged unions)
# ---------------------------------------------------------------------------

def protocol_to_json(protocol) -> dict:
    if isinstance(protocol, KPointDiscrete):
        return {"type": "k_point", "probs": list(protocol.law.probs)}
    if isinstance(protocol, ImprovedPPersistent):
        return {"type": "improved_p_persistent", "p": protocol.p,
                "window": protocol.window}
    if isinstance(protocol, ClassicPPersistent):
        return {"type": "classic_p_persistent", "p": protocol.p}
    if isinstance(protocol, ContinuousBackoff):
        return {"type": "continuous_backoff", "law": law_to_json(protocol.law),
                "window": protocol.window}
    raise TypeError(f"not a protocol: {protocol!r}")


def protocol_from_json(obj: dict):
    tag = obj.get("type")
    if tag == "k_point":
        return KPointDiscrete(law=DiscretePoints(obj["probs"]))
    if tag == "improved_p_persistent":
        return ImprovedPPersistent(p=obj["p"], window=obj["window"])
    if tag == "classic_p_persistent":
        return ClassicPPersistent(p=obj["p"])
    if tag == "continuous_backoff":
        law = law_from_json(obj["law"])
        if not isinstance(law, ContinuousLaw):
            raise ValueError("continuous_backoff requires a continuous law")
        return ContinuousBackoff(law=law, window=obj["window"])
    raise ValueError(f"unknown protocol type: {tag!r}")


def traffic_to_json(traffic) -> dict:
    if isinstance(traffic, FullBuffer):
        return {"type": "full_buffer"}
    if isinstance(traffic, PoissonTraffic):
        return {"type": "poisson", "mean_interarrival": traffic.mean_interarrival}
    raise TypeError(f"not a traffic model: {traffic!r}")


def traffic_from_json(obj: dict):
    tag = obj.get("type")
    if tag == "full_buffer":
        return FullBuffer()
    if tag == "poisson":
        return PoissonTraffic(mean_interarrival=obj["mean_interarrival"])
    raise ValueError(f"unknown traffic type: {tag!r}")


def config_to_json(config: SimConfig) -> dict:
    return {
        "network": {
            "n_stations": config.network.n_stations,
            "delta": config.network.delta,
            "quantum": config.network.quantum,
        },
        "protocol": protocol_to_json(config.protocol),
        "traffic": traffic_to_json(config.traffic),
        "duration": config.duration,
        "seed": config.seed,
    }


def config_from_json(obj: dict) -> SimConfig:
    for key in ("network", "protocol", "traffic", "duration"):
        if key not in obj:
            raise ValueError(f"config is missing required field '{key}'")
    net = obj["network"]
    for key in ("n_stations", "delta"):
        if key not in net:
            raise ValueError(f"config field 'network.{key}' is missing")
    return SimConfig(
        network=NetworkParams(
            n_stations=net["n_stations"],
            delta=net["delta"],
            quantum=net.get("quantum", 1.0),
        ),
        protocol=protocol_from_json(obj["protocol"]),
        traffic=traffic_from_json(obj["traffic"]),
        duration=obj["duration"],
        seed=obj.get("seed", 0),
    )


def dumps_canonical(obj) -> str:
    """Canonical JSON text: sorted keys, no whitespace drift."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
