"""numba kernels for long runs.

The loop here must consume the generator in the same order as the reference
steps in :mod:`nichelab.mechanisms`; ``tests/test_kernels.py`` checks the two
paths produce identical populations from identical seeds.

Genotypic RTS keeps a ``(mu, mu)`` matrix of pairwise Hamming distances. The
offspring's distance to member z follows from its parent's row:
``d(y, z) = d(x, z) + sum over flipped p of (+1 if x_p == z_p else -1)``,
so a step costs O(#flips * min(w, mu)) instead of O(w * n).
"""
import math

import numpy as np
from numba import njit

PC, RTS, DC, PLAIN = 0, 1, 2, 3
ONEMAX, TWOMAX = 0, 1
GENO, PHENO = 0, 1


@njit(cache=True)
def fitness_of(ones, n, fit_code):
    if fit_code == ONEMAX:
        return ones
    return max(ones, n - ones)


@njit(cache=True)
def mutate_positions(n, rng, flips):
    """Write flipped positions into ``flips``; return how many there are."""
    if n == 1:
        flips[0] = 0
        return 1
    log_q = math.log(1.0 - 1.0 / n)
    cnt = 0
    pos = -1
    while True:
        u = rng.random()
        skip = math.floor(math.log(1.0 - u) / log_q)
        if pos + 1 + skip >= n:
            return cnt
        pos += 1 + int(skip)
        flips[cnt] = pos
        cnt += 1


@njit(cache=True)
def pc_accept(fx, fy, rng):
    r = rng.random()
    total = fx + fy
    if total == 0:
        return r < 0.5
    return r < fy / total


@njit(cache=True)
def pairwise_hamming(bits):
    mu, n = bits.shape
    d = np.zeros((mu, mu), dtype=np.int64)
    for a in range(mu):
        for b in range(a + 1, mu):
            s = 0
            for p in range(n):
                if bits[a, p] != bits[b, p]:
                    s += 1
            d[a, b] = s
            d[b, a] = s
    return d


@njit(cache=True)
def _offspring_distance(bits, dmat, i, z, flips, nf):
    d = dmat[i, z]
    for q in range(nf):
        p = flips[q]
        if bits[i, p] == bits[z, p]:
            d += 1
        else:
            d -= 1
    return d


@njit(cache=True)
def _record(t, bits_ones, fit, n, tg, tb, t0, t1, k):
    mu = fit.shape[0]
    best = -1
    b0 = -1
    b1 = -1
    for j in range(mu):
        if fit[j] > best:
            best = fit[j]
        o = bits_ones[j]
        if 2 * o < n:
            if n - o > b0:
                b0 = n - o
        elif 2 * o > n:
            if o > b1:
                b1 = o
    tg[k] = t
    tb[k] = best
    t0[k] = b0
    t1[k] = b1


@njit(cache=True)
def run_loop(bits, ones, rng, kind, fit_code, w, dist_code, budget, trace_every,
             tg, tb, t0, t1):
    """Iterate one mechanism until both optima are present or ``budget`` runs out.

    ``bits`` and ``ones`` are modified in place. Returns
    ``(generations, accepted, trace_len)``; ``trace_every <= 0`` disables the trace.
    """
    mu, n = bits.shape
    fit = np.empty(mu, dtype=np.int64)
    n0 = 0
    n1 = 0
    for j in range(mu):
        fit[j] = fitness_of(ones[j], n, fit_code)
        if ones[j] == 0:
            n0 += 1
        if ones[j] == n:
            n1 += 1
    geno = kind == RTS and dist_code == GENO
    if geno:
        dmat = pairwise_hamming(bits)
    else:
        dmat = np.zeros((1, 1), dtype=np.int64)
    flips = np.empty(n, dtype=np.int64)
    wp = w if kind == RTS else 1
    pool = np.empty(wp, dtype=np.int64)
    pdist = np.empty(wp, dtype=np.int64)
    cand = np.empty(max(wp, mu), dtype=np.int64)
    dy = np.empty(mu, dtype=np.int64)

    k = 0
    last = -1
    if trace_every > 0:
        _record(0, ones, fit, n, tg, tb, t0, t1, k)
        k += 1
        last = 0
    t = 0
    accepted = 0
    while t < budget and not (n0 > 0 and n1 > 0):
        i = rng.integers(0, mu)
        nf = mutate_positions(n, rng, flips)
        oy = ones[i]
        for q in range(nf):
            oy += 1 - 2 * np.int64(bits[i, flips[q]])
        fy = fitness_of(oy, n, fit_code)

        target = -1
        dy_full = False
        if kind == PC:
            if pc_accept(fit[i], fy, rng):
                target = i
        elif kind == DC:
            if fy >= fit[i]:
                target = i
        elif kind == PLAIN:
            worst = fit[0]
            for j in range(1, mu):
                if fit[j] < worst:
                    worst = fit[j]
            if fy >= worst:
                c = 0
                for j in range(mu):
                    if fit[j] == worst:
                        cand[c] = j
                        c += 1
                if c == 1:
                    target = cand[0]
                else:
                    target = cand[rng.integers(0, c)]
        else:
            for q in range(w):
                pool[q] = rng.integers(0, mu)
            if not geno:
                for q in range(w):
                    pdist[q] = abs(oy - ones[pool[q]])
            elif w >= mu:
                for z in range(mu):
                    dy[z] = _offspring_distance(bits, dmat, i, z, flips, nf)
                dy_full = True
                for q in range(w):
                    pdist[q] = dy[pool[q]]
            else:
                for q in range(w):
                    pdist[q] = _offspring_distance(bits, dmat, i, pool[q], flips, nf)
            dmin = pdist[0]
            for q in range(1, w):
                if pdist[q] < dmin:
                    dmin = pdist[q]
            c = 0
            for q in range(w):
                if pdist[q] == dmin:
                    cand[c] = q
                    c += 1
            if c == 1:
                z = pool[cand[0]]
            else:
                z = pool[cand[rng.integers(0, c)]]
            if fy >= fit[z]:
                target = z

        if target >= 0:
            accepted += 1
            if geno:
                if not dy_full:
                    for z in range(mu):
                        dy[z] = _offspring_distance(bits, dmat, i, z, flips, nf)
                for z in range(mu):
                    dmat[target, z] = dy[z]
                    dmat[z, target] = dy[z]
                dmat[target, target] = 0
            if target != i:
                for p in range(n):
                    bits[target, p] = bits[i, p]
            for q in range(nf):
                bits[target, flips[q]] ^= 1
            if ones[target] == 0:
                n0 -= 1
            if ones[target] == n:
                n1 -= 1
            if oy == 0:
                n0 += 1
            if oy == n:
                n1 += 1
            ones[target] = oy
            fit[target] = fy
        t += 1
        if trace_every > 0 and t % trace_every == 0:
            _record(t, ones, fit, n, tg, tb, t0, t1, k)
            k += 1
            last = t
    if trace_every > 0 and last != t:
        _record(t, ones, fit, n, tg, tb, t0, t1, k)
        k += 1
    return t, accepted, k


@njit(cache=True)
def pc_drift_mc(n, k, trials, rng):
    """Sum and sum of squares of f(z) - f(x) over single probabilistic-crowding
    steps on OneMax from a fixed parent with ``k`` ones (ones first)."""
    flips = np.empty(n, dtype=np.int64)
    s = 0.0
    s2 = 0.0
    for _ in range(trials):
        nf = mutate_positions(n, rng, flips)
        oy = k
        for q in range(nf):
            if flips[q] < k:
                oy -= 1
            else:
                oy += 1
        if pc_accept(k, oy, rng):
            d = oy - k
            s += d
            s2 += d * d
    return s, s2


@njit(cache=True)
def flip_count_samples(n, samples, rng):
    flips = np.empty(n, dtype=np.int64)
    out = np.empty(samples, dtype=np.int64)
    for s in range(samples):
        out[s] = mutate_positions(n, rng, flips)
    return out
