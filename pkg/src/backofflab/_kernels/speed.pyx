# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel for the k-slot-point contention loop.

Semantically identical to the pure backend: both consume the same per-station
PCG64 streams in the same order, so metrics match bit for bit.  Event logging
is not supported here; the dispatcher falls back to the pure backend for it.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.stdlib cimport free, malloc

import numpy as np

from numpy.random cimport bitgen_t

BACKEND_NAME = "compiled"

cdef const char *CAPSULE_NAME = b"BitGenerator"


def kpoint_run(cum, int n_stations, double packet, double duration,
               double quantum, bit_generators, arrivals=None,
               record_events=False):
    if record_events:
        raise ValueError("the compiled kernel does not record events")

    cdef double[::1] c = np.ascontiguousarray(cum, dtype=np.float64)
    cdef int k = c.shape[0]
    cdef int n = n_stations
    cdef double lam = quantum
    cdef bint full_buffer = arrivals is None

    cdef bitgen_t **gens = <bitgen_t **> malloc(n * sizeof(bitgen_t *))
    if gens == NULL:
        raise MemoryError
    cdef list capsules = [bg.capsule for bg in bit_generators]
    cdef int s
    for s in range(n):
        gens[s] = <bitgen_t *> PyCapsule_GetPointer(capsules[s], CAPSULE_NAME)

    cdef char *holding = <char *> malloc(n * sizeof(char))
    cdef double *creation = <double *> malloc(n * sizeof(double))
    cdef long *ptr = <long *> malloc(n * sizeof(long))
    cdef long *arr_len = <long *> malloc(n * sizeof(long))
    cdef double **arr = <double **> malloc(n * sizeof(double *))
    if holding == NULL or creation == NULL or ptr == NULL or arr_len == NULL or arr == NULL:
        free(gens); free(holding); free(creation); free(ptr); free(arr_len); free(arr)
        raise MemoryError

    cdef list arr_keepalive = []
    cdef double[::1] mv
    for s in range(n):
        holding[s] = 1 if full_buffer else 0
        creation[s] = 0.0
        ptr[s] = 0
        if full_buffer:
            arr[s] = NULL
            arr_len[s] = 0
        else:
            a = np.ascontiguousarray(arrivals[s], dtype=np.float64)
            arr_keepalive.append(a)
            mv = a
            if mv.shape[0] > 0:
                arr[s] = &mv[0]
            else:
                arr[s] = NULL
            arr_len[s] = mv.shape[0]

    cdef double t = 0.0
    cdef long n_tx = 0, n_rx = 0
    cdef long rounds_contended = 0, rounds_success = 0
    cdef double busy_time = 0.0
    delays = []

    cdef int any_holding, count, winner, pt, i
    cdef int min_pt
    cdef double u, t_next, start, end

    while True:
        if not full_buffer:
            for s in range(n):
                if not holding[s] and ptr[s] < arr_len[s] and arr[s][ptr[s]] <= t:
                    holding[s] = 1
                    creation[s] = arr[s][ptr[s]]
                    ptr[s] += 1
            any_holding = 0
            for s in range(n):
                if holding[s]:
                    any_holding = 1
                    break
            if not any_holding:
                t_next = duration
                for s in range(n):
                    if ptr[s] < arr_len[s] and arr[s][ptr[s]] < t_next:
                        t_next = arr[s][ptr[s]]
                if t_next >= duration:
                    break
                t = t_next
                continue

        min_pt = k + 1
        count = 0
        winner = -1
        for s in range(n):
            if not holding[s]:
                continue
            u = gens[s].next_double(gens[s].state)
            pt = 0
            for i in range(k):
                if u < c[i]:
                    pt = i + 1
                    break
            if pt == 0:
                continue
            if pt < min_pt:
                min_pt = pt
                count = 1
                winner = s
            elif pt == min_pt:
                count += 1

        if count == 0:
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
        if count == 1:
            rounds_success += 1
            n_rx += 1
            delays.append(end - creation[winner])
            if full_buffer:
                creation[winner] = end
            else:
                holding[winner] = 0
                while ptr[winner] < arr_len[winner] and arr[winner][ptr[winner]] <= end:
                    ptr[winner] += 1
        t = end

    free(gens); free(holding); free(creation); free(ptr); free(arr_len); free(arr)

    return {
        "n_tx": n_tx,
        "n_rx": n_rx,
        "busy_time": busy_time,
        "total_time": duration,
        "rounds_contended": rounds_contended,
        "rounds_success": rounds_success,
        "delays": np.asarray(delays, dtype=np.float64),
        "events": None,
    }
