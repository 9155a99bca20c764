"""Independent reference implementations used to freeze expected values.

Everything here is deliberately naive: exact rational arithmetic and
brute-force enumeration, kept separate from the library's computation
paths so the two sides of each check stay independent.
"""

import itertools
from collections import defaultdict
from fractions import Fraction
from math import comb


def pmf_exact(m: int, n: int, s: int, k: int) -> Fraction:
    if k > m or s - k > n - m:
        return Fraction(0)
    return Fraction(comb(m, k) * comb(n - m, s - k), comb(n, s))


def tail_upper_exact(m: int, n: int, s: int, k: int) -> Fraction:
    return sum((pmf_exact(m, n, s, j) for j in range(k, s + 1)), Fraction(0))


def tail_lower_exact(m: int, n: int, s: int, k: int) -> Fraction:
    return sum((pmf_exact(m, n, s, j) for j in range(0, k + 1)), Fraction(0))


def invert_lower_exact(n: int, s: int, k: int, delta: Fraction) -> Fraction:
    for m in range(0, n + 1):
        if tail_upper_exact(m, n, s, k) >= delta:
            return Fraction(m, n)
    raise AssertionError("unreachable: m = n always has upper tail 1")


def invert_upper_exact(n: int, s: int, k: int, delta: Fraction) -> Fraction:
    best = None
    for m in range(0, n + 1):
        if tail_lower_exact(m, n, s, k) >= delta:
            best = Fraction(m, n)
    assert best is not None, "m = 0 always has lower tail 1"
    return best


def sigma_hat_pairwise(values) -> float:
    """All-pairs form of the sample standard deviation."""
    s = len(values)
    total = sum((a - b) ** 2 for a in values for b in values)
    return (total / (2 * s * s)) ** 0.5


def enumerate_procedure_law(n: int, ell: int, t: int, s: int):
    """Exact joint law of (train, validation) under the split procedure.

    Walks the full branching tree with rational arithmetic: the labeled
    pool is a uniform size-ell draw from the population, then each step of
    the procedure contributes its exact probability.
    """
    population = range(n)
    joint = defaultdict(Fraction)
    p_pool = Fraction(1, comb(n, ell))
    for pool in itertools.combinations(population, ell):
        for train in itertools.combinations(pool, t):
            p_train = p_pool / comb(ell, t)
            train_set = set(train)
            rest = [x for x in pool if x not in train_set]
            for i in range(0, min(t, s) + 1):
                p_i = Fraction(comb(t, i) * comb(n - t, s - i), comb(n, s))
                if p_i == 0:
                    continue
                for from_train in itertools.combinations(train, i):
                    p3 = p_train * p_i / comb(t, i)
                    for from_rest in itertools.combinations(rest, s - i):
                        p = p3 / comb(len(rest), s - i)
                        key = (
                            frozenset(train),
                            frozenset(from_train) | frozenset(from_rest),
                        )
                        joint[key] += p
    return joint


def chisq_pvalue(observed, probs: dict, runs: int) -> float:
    """Goodness-of-fit p-value, merging cells with expected count < 5."""
    from scipy.stats import chi2

    support = sorted(probs)
    bins = []
    cur_o, cur_e = 0.0, 0.0
    for v in support:
        cur_o += observed.get(v, 0)
        cur_e += probs[v] * runs
        if cur_e >= 5.0:
            bins.append((cur_o, cur_e))
            cur_o, cur_e = 0.0, 0.0
    if cur_e > 0 and bins:
        o, e = bins[-1]
        bins[-1] = (o + cur_o, e + cur_e)
    stat = sum((o - e) ** 2 / e for o, e in bins)
    return float(chi2.sf(stat, df=len(bins) - 1))
