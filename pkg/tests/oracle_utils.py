"""Shared brute-force oracles used by the unit and acceptance suites.

These deliberately avoid the library's own code paths (convolutions,
count-signature shortcuts) so they can arbitrate disagreements.
"""

import itertools
from collections import defaultdict
from fractions import Fraction


def brute_force_pair_law(xbits, ybits, D):
    """Exact law of the randomized pair by enumerating every mask pair,
    every admissible pad, and every permutation of the columns."""
    d = len(xbits)
    L = 4 * d + D
    law = defaultdict(int)
    total = 0
    pads = [
        (xp, yp)
        for xp in itertools.product((0, 1), repeat=D)
        for yp in itertools.product((0, 1), repeat=D)
        if sum(a & b for a, b in zip(xp, yp)) % 2 == 0
    ]
    perms = list(itertools.permutations(range(L)))
    for xm in itertools.product((0, 1), repeat=d):
        for ym in itertools.product((0, 1), repeat=d):
            xs = tuple(a ^ m for a, m in zip(xbits, xm))
            ys = tuple(a ^ m for a, m in zip(ybits, ym))
            for xp, yp in pads:
                A = xs + xm + xs + xm + xp
                B = ys + ym + ym + ys + yp
                for p in perms:
                    X = tuple(A[i] for i in p)
                    Y = tuple(B[i] for i in p)
                    law[(X, Y)] += 1
                    total += 1
    return {k: Fraction(v, total) for k, v in law.items()}
