"""Reference implementations written from the definitions with plain loops.

Nothing here imports the package under test; values flow in as nested
lists so the two routes share no code.
"""

import itertools
import math


def rows(p):
    return [list(map(float, r)) for r in p]


def marg_x(p):
    return [sum(r) for r in p]


def marg_y(p):
    return [sum(r[k] for r in p) for k in range(len(p[0]))]


def cond(p, tau=1e-12):
    """Channel rows W(y|x) for in-support x only."""
    return [[v / sum(r) for v in r] for r in p if sum(r) >= tau]


def ml(p):
    w = cond(p)
    return math.log(sum(max(r[k] for r in w) for k in range(len(w[0]))))


def mi(p):
    px, py = marg_x(p), marg_y(p)
    tot = 0.0
    for i, r in enumerate(p):
        for k, v in enumerate(r):
            if v > 0:
                tot += v * math.log(v / (px[i] * py[k]))
    return tot


def realizable(p):
    px, py = marg_x(p), marg_y(p)
    best = -math.inf
    for i, r in enumerate(p):
        for k, v in enumerate(r):
            if v > 0:
                best = max(best, math.log(v / (px[i] * py[k])))
    return best


def ldp(w):
    best = 0.0
    for k in range(len(w[0])):
        for a in range(len(w)):
            for b in range(len(w)):
                if w[a][k] > 0:
                    if w[b][k] == 0:
                        return math.inf
                    best = max(best, math.log(w[a][k] / w[b][k]))
    return best


def cost(p):
    w = cond(p)
    s = sum(min(r[k] for r in w) for k in range(len(w[0])))
    return math.inf if s <= 0 else -math.log(s)


def realizable_cost(p):
    py = marg_y(p)
    best = 0.0
    for r in p:
        px = sum(r)
        if px <= 1e-12:
            continue
        for k, v in enumerate(r):
            if py[k] > 0:
                if v == 0:
                    return math.inf
                best = max(best, math.log(py[k] * px / v))
    return best


def guess_prob_posterior(pu_x, p):
    """sum_y max_u sum_x P(u|x) P(x,y); ``pu_x[u][x]``."""
    ny = len(p[0])
    return sum(max(sum(pu_x[u][x] * p[x][k] for x in range(len(p))) for u in range(len(pu_x)))
               for k in range(ny))


def guess_prob_prior(pu_x, px):
    return max(sum(pu_x[u][x] * px[x] for x in range(len(px))) for u in range(len(pu_x)))


def hgr_binary_x(p):
    """Maximal correlation when X is binary.

    Every zero-mean unit-variance f(X) is +-(the standardized indicator), so
    rho_m = sqrt(Var(E[f|Y]) / Var(f)).
    """
    px, py = marg_x(p), marg_y(p)
    q = px[1]
    f = [(0 - q), (1 - q)]  # centred indicator of x = 1
    var_f = q * (1 - q)
    v = 0.0
    for k in range(len(py)):
        if py[k] > 0:
            e = sum(f[x] * p[x][k] for x in range(2)) / py[k]
            v += py[k] * e * e
    return math.sqrt(v / var_f)


def entropy(v):
    return -sum(x * math.log(x) for x in v if x > 0)


def binary_rd(q, D):
    if D >= min(q, 1 - q):
        return 0.0
    return entropy([q, 1 - q]) - entropy([D, 1 - D])


def cipher_bruteforce(n, key_bits, encode):
    """``log sum_m max_x P(m|x)`` by full enumeration of ``encode(x, key)``."""
    best = {}
    for x in range(1 << n):
        hist = {}
        for key in range(1 << key_bits):
            m = encode(x, key)
            hist[m] = hist.get(m, 0) + 1
        for m, c in hist.items():
            best[m] = max(best.get(m, 0), c)
    return math.log(sum(best.values()) / (1 << key_bits))


def min_deterministic_image(px, d):
    """Smallest log |image| over maps sending each x to one of its distortion minimizers."""
    choices = []
    for r in d:
        lo = min(r)
        choices.append([k for k, v in enumerate(r) if v <= lo + 1e-15])
    return math.log(min(len(set(f)) for f in itertools.product(*choices)))


def cipher_bruteforce_base(n, base, key_bits, encode):
    """Same as :func:`cipher_bruteforce` for ``base``-ary sequences indexed ``0..base**n-1``."""
    best = {}
    for x in range(base ** n):
        hist = {}
        for key in range(1 << key_bits):
            m = encode(x, key)
            hist[m] = hist.get(m, 0) + 1
        for m, c in hist.items():
            best[m] = max(best.get(m, 0), c)
    return math.log(sum(best.values()) / (1 << key_bits))
