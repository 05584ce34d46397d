"""Integer lattice arithmetic for subtori of the maximal torus.

A closed connected subtorus ``exp(V)`` of ``T`` is determined by a real
subspace ``V`` spanned by coroots.  It is stored as the saturated lattice
``V ∩ Z^n`` (coroot coordinates) in row Hermite normal form, so equal
subtori have identical representations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


def _row_hnf(rows: list[list[int]], ncols_echelon: int | None = None):
    """Row Hermite normal form with unimodular transform.

    Returns ``(H, U)`` with ``U @ A == H``; ``H`` has its nonzero rows first,
    positive pivots, and entries above each pivot reduced into ``[0, pivot)``.
    Only the first ``ncols_echelon`` columns are used for pivoting.
    """
    A = [list(map(int, r)) for r in rows]
    m = len(A)
    ncols = len(A[0]) if m else 0
    if ncols_echelon is None:
        ncols_echelon = ncols
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    piv_row = 0
    pivots = []
    for col in range(ncols_echelon):
        if piv_row >= m:
            break
        # Euclid on the column below piv_row
        while True:
            nz = [r for r in range(piv_row, m) if A[r][col] != 0]
            if not nz:
                break
            best = min(nz, key=lambda r: abs(A[r][col]))
            A[piv_row], A[best] = A[best], A[piv_row]
            U[piv_row], U[best] = U[best], U[piv_row]
            done = True
            for r in range(piv_row + 1, m):
                if A[r][col]:
                    f = A[r][col] // A[piv_row][col]
                    A[r] = [a - f * b for a, b in zip(A[r], A[piv_row])]
                    U[r] = [a - f * b for a, b in zip(U[r], U[piv_row])]
                    if A[r][col]:
                        done = False
            if done:
                break
        if A[piv_row][col] == 0:
            continue
        if A[piv_row][col] < 0:
            A[piv_row] = [-a for a in A[piv_row]]
            U[piv_row] = [-a for a in U[piv_row]]
        p = A[piv_row][col]
        for r in range(piv_row):
            f = A[r][col] // p
            if f:
                A[r] = [a - f * b for a, b in zip(A[r], A[piv_row])]
                U[r] = [a - f * b for a, b in zip(U[r], U[piv_row])]
        pivots.append(col)
        piv_row += 1
    return A, U, piv_row


def hermite_rows(vectors: Iterable[Sequence[int]], n: int) -> tuple[tuple[int, ...], ...]:
    """Canonical row-HNF basis of the lattice spanned by ``vectors`` in Z^n."""
    rows = [list(map(int, v)) for v in vectors]
    rows = [r for r in rows if any(r)]
    if not rows:
        return ()
    H, _, rank = _row_hnf(rows)
    return tuple(tuple(r) for r in H[:rank])


def integer_kernel(C: Sequence[Sequence[int]], n: int) -> list[list[int]]:
    """Basis of ``{x in Z^n : C x = 0}``."""
    if not C:
        return [[int(i == j) for j in range(n)] for i in range(n)]
    # rows of [C^T] with transform: U C^T = H, kernel rows are U rows with zero H row
    Ct = [[int(C[r][c]) for r in range(len(C))] for c in range(n)]
    H, U, rank = _row_hnf(Ct)
    return [U[r] for r in range(rank, n)]


def _rational_complement(rows: list[list[int]], n: int) -> list[list[int]]:
    """Integer basis of the orthogonal complement (over Q) of ``rows``."""
    if not rows:
        return [[int(i == j) for j in range(n)] for i in range(n)]
    # reduced row echelon over Q
    M = [[Fraction(x) for x in r] for r in rows]
    pivots = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        pv = M[r][c]
        M[r] = [x / pv for x in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    free = [c for c in range(n) if c not in pivots]
    out = []
    for fc in free:
        v = [Fraction(0)] * n
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -M[i][fc]
        den = math.lcm(*(x.denominator for x in v))
        out.append([int(x * den) for x in v])
    return out


def saturate(vectors: Iterable[Sequence[int]], n: int) -> tuple[tuple[int, ...], ...]:
    """HNF basis of ``span_R(vectors) ∩ Z^n``."""
    rows = [list(map(int, v)) for v in vectors if any(v)]
    if not rows:
        return ()
    comp = _rational_complement(rows, n)
    # vectors annihilated by the complement = the saturated lattice
    return hermite_rows(integer_kernel(comp, n), n)


@dataclass(frozen=True, order=True)
class TorusLattice:
    """Saturated coroot sublattice representing the subtorus ``exp(span)``.

    ``rows`` holds the basis vectors (coroot coordinates) in canonical
    row-HNF; the ``basis`` property returns them as matrix columns.
    """

    n: int
    rows: tuple[tuple[int, ...], ...] = ()

    @classmethod
    def span(cls, vectors: Iterable[Sequence[int]], n: int) -> "TorusLattice":
        return cls(n, saturate(vectors, n))

    @property
    def rank(self) -> int:
        return len(self.rows)

    @property
    def basis(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((self.n, 0), dtype=np.int64)
        return np.array(self.rows, dtype=np.int64).T

    def __add__(self, other: "TorusLattice") -> "TorusLattice":
        # product of subtori: exp(V1) exp(V2) = exp(V1 + V2)
        if self.n != other.n:
            raise ValueError("lattices live in different ranks")
        return TorusLattice.span(self.rows + other.rows, self.n)

    def contains(self, vec: Sequence[int]) -> bool:
        return TorusLattice.span(self.rows + (tuple(vec),), self.n) == self

    def pairing(self, weight: Sequence[int]) -> tuple[int, ...]:
        """Integer exponents of the character ``z^weight`` restricted here.

        ``weight`` is in fundamental-weight coordinates, the basis in coroot
        coordinates, so the pairing is the plain dot product.
        """
        w = np.asarray(weight, dtype=np.int64)
        return tuple(int(np.dot(w, r)) for r in self.rows)

    def coordinates_of(self, vec: Sequence[int]) -> tuple[int, ...]:
        """Integer coordinates of a lattice vector in this basis."""
        if not self.rows:
            if any(vec):
                raise ValueError("vector not in rank-0 lattice")
            return ()
        B = np.array(self.rows, dtype=float).T
        sol, *_ = np.linalg.lstsq(B, np.asarray(vec, dtype=float), rcond=None)
        coords = np.rint(sol).astype(np.int64)
        if not np.array_equal(np.array(self.rows, dtype=np.int64).T @ coords, np.asarray(vec, dtype=np.int64)):
            raise ValueError(f"{tuple(vec)} is not in the lattice {self.rows}")
        return tuple(int(c) for c in coords)

    def to_json(self) -> dict:
        return {"n": self.n, "rank": self.rank, "basis_rows": [list(r) for r in self.rows]}
