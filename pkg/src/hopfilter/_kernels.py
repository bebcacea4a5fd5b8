"""Counter-based Monte Carlo kernels for the transport simulator.

Every (trial, hop) pair is mapped to one uniform draw through a
splitmix64-style bit finalizer, so the stream depends only on (seed,
trial, hop) and never on execution order: serial loops, chunked array
sweeps and parallel workers all see identical randomness.

Retransmissions inside a hop are not drawn one Bernoulli at a time; the
number of attempts until the first success is a geometric variate
obtained by inversion from the single uniform, and the hop fails when
that variate exceeds the cap.  This keeps the per-trial cost flat in L.

Two implementations of the same arithmetic live here: a scalar loop
compiled with numba when it is available, and a chunked numpy fallback.
Selection happens in hop_net (HOPFILTER_DISABLE_NUMBA=1 forces numpy).
"""

import math

import numpy as np

U64 = np.uint64
_MASK = (1 << 64) - 1
# Weyl increments: golden-ratio constant for the trial stream, a second
# odd constant decorrelating the hop index within a trial.
TRIAL_STRIDE = 0x9E3779B97F4A7C15
HOP_STRIDE = 0xD1B54A32D192ED03
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 2.0 ** -53


def mix64(value):
    """splitmix64 finalizer on a plain int, for seeds and reference use."""
    v = value & _MASK
    v = ((v ^ (v >> 30)) * _M1) & _MASK
    v = ((v ^ (v >> 27)) * _M2) & _MASK
    return v ^ (v >> 31)


def trial_key(seed, trial):
    """64-bit key of one trial; equals the splitmix64 output stream."""
    return mix64(mix64(seed) + (trial + 1) * TRIAL_STRIDE)


def hop_uniform(seed, trial, hop):
    """The uniform in [0, 1) consumed by (trial, hop)."""
    x = mix64(trial_key(seed, trial) + (hop + 1) * HOP_STRIDE)
    return (x >> 11) * _INV53


def attempts_from_uniform(u, p):
    """Inverse-CDF geometric: attempts until first success, >= 1."""
    if p >= 1.0:
        return 1
    g = math.ceil(math.log1p(-u) / math.log1p(-p))
    return g if g >= 1 else 1


def _mix64_arr(v):
    v = (v ^ (v >> U64(30))) * U64(_M1)
    v = (v ^ (v >> U64(27))) * U64(_M2)
    return v ^ (v >> U64(31))


def transport_counts_numpy(seed, trials, p, l_cap, n_hops, chunk=1 << 15):
    """Vectorized path: per-trial (tx, rx) int64 arrays.

    l_cap < 0 means an unbounded retransmission allowance.
    """
    tx = np.zeros(trials, dtype=np.int64)
    rx = np.zeros(trials, dtype=np.int64)
    key0 = U64(mix64(seed))
    log_fail = math.log1p(-p) if p < 1.0 else -1.0
    for lo in range(0, trials, chunk):
        hi = min(lo + chunk, trials)
        idx = np.arange(lo + 1, hi + 1, dtype=np.uint64)
        kt = _mix64_arr(key0 + idx * U64(TRIAL_STRIDE))
        alive = np.ones(hi - lo, dtype=bool)
        txc = np.zeros(hi - lo, dtype=np.int64)
        rxc = np.zeros(hi - lo, dtype=np.int64)
        for h in range(n_hops):
            x = _mix64_arr(kt + U64((h + 1) * HOP_STRIDE & _MASK))
            u = (x >> U64(11)).astype(np.float64) * _INV53
            if p >= 1.0:
                g = np.ones(hi - lo, dtype=np.int64)
            else:
                g = np.ceil(np.log1p(-u) / log_fail).astype(np.int64)
                np.maximum(g, 1, out=g)
            if l_cap < 0:
                ok = alive
                txc += np.where(alive, g, 0)
            else:
                ok = alive & (g <= l_cap)
                txc += np.where(alive, np.minimum(g, l_cap), 0)
            rxc += ok
            alive = ok
        tx[lo:hi] = txc
        rx[lo:hi] = rxc
    return tx, rx


def _transport_counts_loop(seed, trials, p, l_cap, n_hops, tx, rx):
    # scalar twin of transport_counts_numpy; numba-compiled when possible
    s = np.uint64(seed)
    s = (s ^ (s >> np.uint64(30))) * np.uint64(_M1)
    s = (s ^ (s >> np.uint64(27))) * np.uint64(_M2)
    key0 = s ^ (s >> np.uint64(31))
    log_fail = math.log1p(-p) if p < 1.0 else -1.0
    for t in range(trials):
        kt = key0 + np.uint64(t + 1) * np.uint64(TRIAL_STRIDE)
        kt = (kt ^ (kt >> np.uint64(30))) * np.uint64(_M1)
        kt = (kt ^ (kt >> np.uint64(27))) * np.uint64(_M2)
        kt = kt ^ (kt >> np.uint64(31))
        txc = 0
        rxc = 0
        for h in range(n_hops):
            x = kt + np.uint64(h + 1) * np.uint64(HOP_STRIDE)
            x = (x ^ (x >> np.uint64(30))) * np.uint64(_M1)
            x = (x ^ (x >> np.uint64(27))) * np.uint64(_M2)
            x = x ^ (x >> np.uint64(31))
            u = np.float64(x >> np.uint64(11)) * _INV53
            if p >= 1.0:
                g = 1
            else:
                g = int(math.ceil(math.log1p(-u) / log_fail))
                if g < 1:
                    g = 1
            if l_cap < 0:
                txc += g
                rxc += 1
            elif g <= l_cap:
                txc += g
                rxc += 1
            else:
                txc += l_cap
                break
        tx[t] = txc
        rx[t] = rxc


_loop_jit = None


def transport_counts_numba(seed, trials, p, l_cap, n_hops):
    """numba-compiled scalar path; same contract as the numpy twin."""
    global _loop_jit
    if _loop_jit is None:
        import numba

        _loop_jit = numba.njit(cache=True)(_transport_counts_loop)
    tx = np.zeros(trials, dtype=np.int64)
    rx = np.zeros(trials, dtype=np.int64)
    _loop_jit(np.uint64(seed & _MASK), trials, p, l_cap, n_hops, tx, rx)
    return tx, rx


def transport_counts_python(seed, trials, p, l_cap, n_hops):
    """Scalar reference built from the public per-draw helpers.

    Slow; exists so tests can pin the array paths to straight-line code
    with no chunking or masking tricks.
    """
    tx = np.zeros(trials, dtype=np.int64)
    rx = np.zeros(trials, dtype=np.int64)
    for t in range(trials):
        txc = 0
        rxc = 0
        for h in range(n_hops):
            g = attempts_from_uniform(hop_uniform(seed, t, h), p)
            if l_cap >= 0 and g > l_cap:
                txc += l_cap
                break
            txc += g
            rxc += 1
        tx[t] = txc
        rx[t] = rxc
    return tx, rx
