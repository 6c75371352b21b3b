"""Slow reference implementations used as independent oracles in tests.

Everything here recomputes quantities from first principles with plain
Python loops, deliberately sharing no code path with the package.
"""

import itertools


def naive_weight(edges, A_per_edge, b_per_vertex, sigma):
    """Product of edge factors times vertex factors, factor by factor."""
    w = 1.0
    for (u, v), A in zip(edges, A_per_edge):
        w *= A[sigma[u]][sigma[v]]
    for v, b in enumerate(b_per_vertex):
        w *= b[sigma[v]]
    return w


def all_sigmas(n, q):
    """Every configuration as a tuple, little-endian rank order."""
    for rank in range(q ** n):
        sigma = []
        r = rank
        for _ in range(n):
            sigma.append(r % q)
            r //= q
        yield tuple(sigma)


def naive_gibbs(edges, A_per_edge, b_per_vertex, n, q):
    """(probs keyed by rank, Z) by exhaustive summation."""
    weights = [naive_weight(edges, A_per_edge, b_per_vertex, s)
               for s in all_sigmas(n, q)]
    Z = sum(weights)
    return [w / Z for w in weights] if Z > 0 else None, Z


def is_proper_coloring(edges, sigma):
    return all(sigma[u] != sigma[v] for u, v in edges)


def independent_sets(edges, n):
    """All 0/1 tuples selecting no edge's both endpoints."""
    out = []
    for bits in itertools.product((0, 1), repeat=n):
        if all(not (bits[u] and bits[v]) for u, v in edges):
            out.append(bits)
    return out


def naive_marginal(edges, A_per_edge, b_per_vertex, q, v, x):
    """Conditional spin distribution at v given neighbor spins in x."""
    numer = []
    for c in range(q):
        p = b_per_vertex[v][c]
        for (a, b), A in zip(edges, A_per_edge):
            if a == v:
                p *= A[c][x[b]]
            elif b == v:
                p *= A[c][x[a]]
        numer.append(p)
    Z = sum(numer)
    return None if Z == 0 else [p / Z for p in numer]


def naive_tv(p, r):
    return 0.5 * sum(abs(a - b) for a, b in zip(p, r))
