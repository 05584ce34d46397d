"""Independent reference implementations used only by the tests."""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def reflection_closure_roots(cartan):
    """Positive roots by repeated reflection of the simple roots, all roots kept."""
    A = np.asarray(cartan)
    n = len(A)
    roots = {tuple(int(i == j) for j in range(n)) for i in range(n)}
    changed = True
    while changed:
        changed = False
        for r in list(roots):
            for i in range(n):
                pair = sum(A[i, j] * r[j] for j in range(n))
                s = list(r)
                s[i] -= pair
                s = tuple(int(x) for x in s)
                if s not in roots:
                    roots.add(s)
                    changed = True
    return sorted(r for r in roots if all(x >= 0 for x in r))


def subword_leq(group, v, w):
    """Subword property: v <= w iff some reduced word of w has a subword equal to v."""
    word = w.word
    for mask in itertools.product((0, 1), repeat=len(word)):
        sub = [i for i, m in zip(word, mask) if m]
        if group.from_word(sub) == v:
            return True
    return False


def weyl_dimension(rs, lam):
    """Weyl dimension formula prod (λ+ρ, α)/(ρ, α) over positive roots."""
    num = den = Fraction(1)
    for a in rs.positive_roots:
        a = np.array(a)
        # (μ, α) for μ in ω-coords: (ω_i, α_j) = d_j δ_ij
        pair_l = sum(Fraction(int(l)) * int(rs.symmetrizers[j]) * int(a[j]) for j, l in enumerate(lam))
        pair_r = sum(int(rs.symmetrizers[j]) * int(a[j]) for j in range(len(lam)))
        num *= pair_l + pair_r
        den *= pair_r
    return int(num / den)


def freudenthal(rs, lam):
    """Weight multiplicities of V_λ by Freudenthal's recursion."""
    A = rs.cartan
    n = rs.rank
    G = np.diag(rs.symmetrizers) @ np.linalg.inv(A.astype(float))  # form on ω-coords
    pos = [A @ np.array(r) for r in rs.positive_roots]  # positive roots in ω-coords
    lam = np.array(lam)
    rho = np.ones(n, dtype=int)

    def form(mu, nu):
        return float(mu @ G @ nu)

    top = form(lam + rho, lam + rho)
    mult = {tuple(lam): 1}
    level = [tuple(lam)]
    depth = 0
    while level:
        depth += 1
        cands = sorted({tuple(np.array(mu) - A[:, i]) for mu in level for i in range(n)})
        level = []
        for mu in cands:
            mu_a = np.array(mu)
            denom = top - form(mu_a + rho, mu_a + rho)
            if abs(denom) < 1e-9:
                continue
            s = 0.0
            for a in pos:
                for k in range(1, depth + 1):
                    s += mult.get(tuple(mu_a + k * a), 0) * form(mu_a + k * a, a)
            m = round(2 * s / denom)
            if m > 0:
                mult[mu] = m
                level.append(mu)
    return mult
