"""Pure-Python kernel for the k-slot-point contention loop.

This is the fallback used when the compiled extension is unavailable, and the
only backend that can record an event log.  Both backends consume the same
per-station PCG64 streams in the same order, so their outputs are identical.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "pure"


def kpoint_run(
    cum,
    n_stations: int,
    packet: float,
    duration: float,
    quantum: float,
    bit_generators,
    arrivals=None,
    record_events: bool = False,
):
    """Run the k-slot-point protocol from time 0 to ``duration``.

    ``cum`` holds the cumulative point probabilities c_1..c_k.  ``arrivals`` is
    None for full-buffer traffic, else one sorted arrival-time array per
    station (single-packet buffers: arrivals that find the station already
    holding a packet are dropped).  Returns a metrics dict; ``events`` is a
    list of (time, station, kind) tuples when requested.
    """
    cum = np.asarray(cum, dtype=np.float64)
    k = cum.shape[0]
    n = n_stations
    lam = quantum
    gens = [np.random.Generator(bg) for bg in bit_generators]
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

        # one uniform draw per holding station, in station order
        min_pt = k + 1
        count = 0
        winner = -1
        transmitters = []
        for s in range(n):
            if not holding[s]:
                continue
            u = gens[s].random()
            pt = 0
            for i in range(k):
                if u < cum[i]:
                    pt = i + 1
                    break
            if pt == 0:
                continue
            if pt < min_pt:
                min_pt = pt
                count = 1
                winner = s
                transmitters = [s]
            elif pt == min_pt:
                count += 1
                transmitters.append(s)

        if count == 0:
            # all holders stayed silent: the whole contention window elapses
            if t + k * lam > duration:
                break
            rounds_contended += 1
            t += k * lam
            continue

        start = t + min_pt * lam
        end = start + packet
        if end > duration:
            break
        rounds_contended += 1
        n_tx += count
        busy_time += packet
        if events is not None:
            for s in transmitters:
                events.append((start, s, "tx_start"))
                events.append((end, s, "tx_end"))
        if count == 1:
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
