"""Truncated operators on tensor powers of l²(Z₊) and the SU_q(2) calculus.

Every operator carries a cutoff ``N`` per factor and a guard ``g``: matrix
entries whose row and column multi-indices have all components below
``N - g`` coincide with those of the untruncated operator.  Shift-type base
operators carry guard 1, diagonal ones guard 0; products add guards, sums and
tensor products take the maximum.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_NORM_LIMIT = 1200
LANCZOS_TOL = 1e-9
DENSE_SPECTRUM_LIMIT = 6000


class CutoffError(ValueError):
    pass


def _as_csr(M) -> sp.csr_matrix:
    return sp.csr_matrix(M, dtype=complex)


def _labels(M: sp.csr_matrix):
    """Component labels of rows and columns in the bipartite sparsity graph."""
    from scipy.sparse.csgraph import connected_components

    r, c = M.shape
    coo = M.tocoo()
    adj = sp.csr_matrix((np.ones(coo.nnz), (coo.row, coo.col + r)), shape=(r + c, r + c))
    ncomp, labels = connected_components(adj, directed=False)
    return ncomp, labels[:r], labels[r:], coo


def _local_positions(labels: np.ndarray, ncomp: int):
    """Members of each label (ascending) and each index's position within its label."""
    order = np.argsort(labels, kind="stable")
    starts = np.searchsorted(labels[order], np.arange(ncomp + 1))
    pos = np.empty(labels.size, dtype=np.int64)
    pos[order] = np.arange(labels.size) - starts[labels[order]]
    return order, starts, pos


def block_arrays(M, max_side: int | None = None) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]] | None:
    """(rows, cols, dense block) for every connected block with at least one row and column.

    Returns None when some block is larger than ``max_side``.
    """
    M = sp.csr_matrix(M)
    M.eliminate_zeros()
    ncomp, rl, cl, coo = _labels(M)
    rorder, rstarts, rpos = _local_positions(rl, ncomp)
    corder, cstarts, cpos = _local_positions(cl, ncomp)
    if max_side is not None and max(np.diff(rstarts).max(initial=0), np.diff(cstarts).max(initial=0)) > max_side:
        return None
    comp = rl[coo.row]
    eorder = np.argsort(comp, kind="stable")
    estarts = np.searchsorted(comp[eorder], np.arange(ncomp + 1))
    out = []
    for k in range(ncomp):
        rows = rorder[rstarts[k] : rstarts[k + 1]]
        cols = corder[cstarts[k] : cstarts[k + 1]]
        if not rows.size or not cols.size:
            continue
        B = np.zeros((rows.size, cols.size), dtype=M.dtype)
        e = eorder[estarts[k] : estarts[k + 1]]
        B[rpos[coo.row[e]], cpos[coo.col[e]]] = coo.data[e]
        out.append((rows, cols, B))
    return out


def _components(M: sp.spmatrix):
    """Row/column blocks of the bipartite sparsity graph of ``M``."""
    M = sp.csr_matrix(M)
    M.eliminate_zeros()
    ncomp, rl, cl, _ = _labels(M)
    rorder, rstarts, _ = _local_positions(rl, ncomp)
    corder, cstarts, _ = _local_positions(cl, ncomp)
    for k in range(ncomp):
        rows = rorder[rstarts[k] : rstarts[k + 1]]
        cols = corder[cstarts[k] : cstarts[k + 1]]
        if rows.size and cols.size:
            yield rows, cols


def _is_monomial(M: sp.csr_matrix) -> bool:
    """At most one stored entry per row and per column."""
    return bool(np.all(np.diff(M.indptr) <= 1) and np.all(np.bincount(M.indices, minlength=M.shape[1]) <= 1))


def _batched_singular_values(blocks) -> list[np.ndarray]:
    """Singular values of many small dense blocks, batched by shape."""
    by_shape: dict[tuple[int, int], list[int]] = {}
    for k, B in enumerate(blocks):
        by_shape.setdefault(B.shape, []).append(k)
    out: list = [None] * len(blocks)
    for shape, ks in by_shape.items():
        sv = np.linalg.svd(np.stack([blocks[k] for k in ks]), compute_uv=False)
        for k, v in zip(ks, sv):
            out[k] = v
    return out


def singular_values(M) -> np.ndarray:
    """All singular values (descending, zeros included) via sparsity blocks."""
    if not sp.issparse(M):
        return np.linalg.svd(np.asarray(M), compute_uv=False)
    M = sp.csr_matrix(M)
    M.eliminate_zeros()
    n = min(M.shape)
    if _is_monomial(M):
        out = np.abs(M.data)
    else:
        found = block_arrays(M, DENSE_SPECTRUM_LIMIT)
        if found is None:
            raise MemoryError(f"a connected block exceeds {DENSE_SPECTRUM_LIMIT} indices; full spectrum unavailable")
        blocks = [B for _, _, B in found]
        out = np.concatenate([np.zeros(0)] + _batched_singular_values(blocks))
    out = np.concatenate([out, np.zeros(max(0, n - out.size))])
    return np.sort(out)[::-1][:n]


def spectral_norm(M, rtol: float | None = None) -> float:
    """Largest singular value.

    Dense for small matrices; otherwise the sparsity graph is split into
    independent blocks, with a fixed-start Lanczos fallback when a block is
    still large. ``rtol`` is the Lanczos residual tolerance on the squared
    norm, so the fallback result is low by at most ``rtol / 2`` relative.
    """
    if min(M.shape) == 0:
        return 0.0
    if not sp.issparse(M):
        return float(np.linalg.norm(np.asarray(M), 2))
    M = sp.csr_matrix(M)
    M.eliminate_zeros()
    if M.nnz == 0:
        return 0.0
    if _is_monomial(M):
        return float(np.max(np.abs(M.data)))
    if min(M.shape) <= DENSE_NORM_LIMIT:
        return float(np.linalg.norm(M.toarray(), 2))
    blocks = block_arrays(M, DENSE_NORM_LIMIT)
    if blocks is not None:
        return float(max(v[0] for v in _batched_singular_values([B for _, _, B in blocks])))
    # Lanczos on the smaller Gram operator; calling eigsh directly is far
    # cheaper than svds on clustered spectra
    A, B = (M, M.conj().T.tocsr()) if M.shape[1] <= M.shape[0] else (M.conj().T.tocsr(), M)
    n = A.shape[1]
    gram = spla.LinearOperator((n, n), matvec=lambda v: B @ (A @ v), dtype=np.result_type(M.dtype, np.float64))
    ncv = min(40, n - 1)
    v0 = np.ones(n) / np.sqrt(n)
    lam = spla.eigsh(gram, k=1, v0=v0, ncv=ncv, which="LA", tol=LANCZOS_TOL if rtol is None else rtol,
                     return_eigenvectors=False)
    return float(np.sqrt(max(lam[0], 0.0)))


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """Matrix on (C^N)^{⊗m} standing for an operator on l²(Z₊)^{⊗m}."""

    factors: int
    cutoff: int
    matrix: sp.csr_matrix
    guard: int = 0

    def __post_init__(self):
        side = self.cutoff**self.factors
        M = _as_csr(self.matrix)
        if M.shape != (side, side):
            raise ValueError(f"matrix shape {M.shape} does not match {self.factors} factors of size {self.cutoff}")
        object.__setattr__(self, "matrix", M)

    # -- constructors ----------------------------------------------------------
    @classmethod
    def identity(cls, factors: int, N: int) -> "TruncatedOperator":
        return cls(factors, N, sp.identity(N**factors, dtype=complex, format="csr"), 0)

    @classmethod
    def zero(cls, factors: int, N: int) -> "TruncatedOperator":
        return cls(factors, N, sp.csr_matrix((N**factors, N**factors), dtype=complex), 0)

    @classmethod
    def scalar(cls, value: complex) -> "TruncatedOperator":
        return cls(0, 1, sp.csr_matrix(np.array([[value]], dtype=complex)), 0)

    # -- algebra -----------------------------------------------------------------
    def _check(self, other: "TruncatedOperator"):
        if (self.factors, self.cutoff) != (other.factors, other.cutoff) and self.factors and other.factors:
            raise ValueError("operators live on different spaces")

    def __matmul__(self, other: "TruncatedOperator") -> "TruncatedOperator":
        self._check(other)
        return TruncatedOperator(self.factors, self.cutoff, self.matrix @ other.matrix, self.guard + other.guard)

    def __add__(self, other: "TruncatedOperator") -> "TruncatedOperator":
        self._check(other)
        return TruncatedOperator(self.factors, self.cutoff, self.matrix + other.matrix, max(self.guard, other.guard))

    def __sub__(self, other: "TruncatedOperator") -> "TruncatedOperator":
        return self + (-1) * other

    def __mul__(self, c: complex) -> "TruncatedOperator":
        return TruncatedOperator(self.factors, self.cutoff, self.matrix * c, self.guard)

    __rmul__ = __mul__

    def __neg__(self):
        return -1 * self

    def adjoint(self) -> "TruncatedOperator":
        return TruncatedOperator(self.factors, self.cutoff, self.matrix.conj().T.tocsr(), self.guard)

    @property
    def H(self) -> "TruncatedOperator":
        return self.adjoint()

    def kron(self, other: "TruncatedOperator") -> "TruncatedOperator":
        if self.factors == 0:
            return other * self.matrix[0, 0]
        if other.factors == 0:
            return self * other.matrix[0, 0]
        if self.cutoff != other.cutoff:
            raise ValueError("cutoffs differ")
        M = sp.kron(self.matrix, other.matrix, format="csr")
        return TruncatedOperator(self.factors + other.factors, self.cutoff, M, max(self.guard, other.guard))

    def with_guard(self, g: int) -> "TruncatedOperator":
        return TruncatedOperator(self.factors, self.cutoff, self.matrix, g)

    # -- guard bands -------------------------------------------------------------
    @property
    def side(self) -> int:
        return self.cutoff**self.factors

    def multi_indices(self) -> np.ndarray:
        if self.factors == 0:
            return np.zeros((1, 0), dtype=int)
        grids = np.indices((self.cutoff,) * self.factors).reshape(self.factors, -1).T
        return grids

    def guard_indices(self, extra: int = 0) -> np.ndarray:
        """Flat indices whose every component lies below ``N - guard - extra``."""
        if self.factors == 0:
            return np.array([0])
        limit = self.cutoff - self.guard - extra
        if limit <= 0:
            raise CutoffError(f"cutoff {self.cutoff} exhausted by guard {self.guard + extra}")
        return np.flatnonzero(np.all(self.multi_indices() < limit, axis=1))

    def guard_block(self, extra: int = 0) -> sp.csr_matrix:
        idx = self.guard_indices(extra)
        return self.matrix[idx][:, idx]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def norm(self) -> float:
        return spectral_norm(self.matrix)

    def guard_norm(self, extra: int = 0) -> float:
        return spectral_norm(self.guard_block(extra))

    def tail_indices(self, k: int) -> np.ndarray:
        """Multi-indices outside the box [0,k)^m and inside the guard band."""
        idx = self.multi_indices()
        limit = self.cutoff - self.guard
        ok = np.all(idx < limit, axis=1) & np.any(idx >= k, axis=1)
        return np.flatnonzero(ok)

    def tail_norm(self, k: int, rtol: float | None = None) -> float:
        """Norm of R_k X R_k with R_k the projection onto the tail indices."""
        if self.factors == 0:
            return abs(complex(self.matrix[0, 0]))
        idx = self.tail_indices(k)
        if idx.size == 0:
            raise CutoffError(f"no tail indices left at k={k}")
        return spectral_norm(self.matrix[idx][:, idx], rtol)

    def essential_norm(self, k: int | None = None, ks: Sequence[int] | None = None,
                       rtol: float | None = None) -> "EssentialNormEstimate":
        if self.factors == 0:
            v = abs(complex(self.matrix[0, 0]))
            return EssentialNormEstimate(v, 0, {0: v})
        usable = self.cutoff - self.guard
        k = usable // 2 if k is None else k
        ks = ks if ks is not None else sorted({max(1, k // 2), k, min(usable - 1, k + k // 2)})
        data = {int(kk): self.tail_norm(kk, rtol) for kk in ks if 0 < kk < usable}
        return EssentialNormEstimate(data.get(k, self.tail_norm(k, rtol)), k, data)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def __repr__(self):
        return f"TruncatedOperator(factors={self.factors}, N={self.cutoff}, guard={self.guard}, nnz={self.matrix.nnz})"


@dataclass(frozen=True)
class EssentialNormEstimate:
    value: float
    k: int
    by_k: Mapping[int, float]

    def spread(self) -> float:
        vals = list(self.by_k.values())
        return max(vals) - min(vals) if vals else 0.0

    def to_json(self) -> dict:
        return {"value": self.value, "k": self.k, "convergence": {str(k): v for k, v in self.by_k.items()}}


def tensor_all(ops: Iterable[TruncatedOperator]) -> TruncatedOperator:
    out = TruncatedOperator.scalar(1.0)
    for op in ops:
        out = out.kron(op)
    return out


def basis_vector(factors: int, N: int, index: Sequence[int] = ()) -> np.ndarray:
    """e_{i1} ⊗ ... ⊗ e_{im}; the default is the vacuum e_0^{⊗m}."""
    index = tuple(index) or (0,) * factors
    v = np.zeros(N**factors, dtype=complex)
    v[int(np.ravel_multi_index(index, (N,) * factors)) if factors else 0] = 1.0
    return v


# -- base operators ------------------------------------------------------------

def _check_cutoff(N: int):
    if N < 2:
        raise CutoffError("cutoff must be at least 2")


def shift(N: int) -> TruncatedOperator:
    """S e_n = e_{n+1}, with e_{N-1} ↦ 0."""
    _check_cutoff(N)
    return TruncatedOperator(1, N, sp.diags([np.ones(N - 1)], [-1], shape=(N, N)), 1)


def weight_c(q: float, N: int) -> TruncatedOperator:
    """C_q e_n = sqrt(1 - q^{2n}) e_n."""
    _check_cutoff(N)
    n = np.arange(N)
    return TruncatedOperator(1, N, sp.diags(np.sqrt(1 - q ** (2 * n))), 0)


def weight_d(q: float, N: int) -> TruncatedOperator:
    """d_q e_n = q^n e_n."""
    _check_cutoff(N)
    return TruncatedOperator(1, N, sp.diags(q ** np.arange(N, dtype=float)), 0)


SU2_LABELS = ("t11", "t12", "t21", "t22")


@lru_cache(maxsize=256)
def pi_su2_generators(q: float, N: int) -> dict[str, TruncatedOperator]:
    """Images of t11, t12, t21, t22 under Π_q."""
    S, C, d = shift(N), weight_c(q, N), weight_d(q, N)
    return {
        "t11": S.H @ C,
        "t12": q * d,
        "t21": -1 * d,
        "t22": C @ S,
    }


def su2_generator_grid(q: float, N: int) -> list[list[TruncatedOperator]]:
    g = pi_su2_generators(q, N)
    return [[g["t11"], g["t12"]], [g["t21"], g["t22"]]]


def su2_relation_residuals(q: float, N: int) -> dict[str, float]:
    """Guard-band residuals of the SU_q(2) relations for the Π_q images."""
    g = pi_su2_generators(q, N)
    a, b, c, d = g["t11"], g["t12"], g["t21"], g["t22"]
    I = TruncatedOperator.identity(1, N)
    rels = {
        "t11 t12 = q t12 t11": a @ b - q * (b @ a),
        "t11 t21 = q t21 t11": a @ c - q * (c @ a),
        "t12 t22 = q t22 t12": b @ d - q * (d @ b),
        "t21 t22 = q t22 t21": c @ d - q * (d @ c),
        "t12 t21 = t21 t12": b @ c - c @ b,
        "t11 t22 - t22 t11 = (q - 1/q) t12 t21": a @ d - d @ a - (q - 1 / q) * (b @ c),
        "t11 t22 - q t12 t21 = 1": a @ d - q * (b @ c) - I,
        "t22 t11 - 1/q t12 t21 = 1": d @ a - (1 / q) * (b @ c) - I,
        "t11* = t22": a.H - d,
        "t12* = -q t21": b.H + q * c,
    }
    return {name: _guard_max(op) for name, op in rels.items()}


def _guard_max(op: TruncatedOperator) -> float:
    blk = op.guard_block()
    return float(abs(blk).max()) if blk.nnz else 0.0


def determinant_boundary_defect(q: float, N: int) -> float:
    """|<e_{N-1}, (t11 t22 - q t12 t21 - 1) e_{N-1}>| of the truncated images."""
    g = pi_su2_generators(q, N)
    D = g["t11"] @ g["t22"] - q * (g["t12"] @ g["t21"]) - TruncatedOperator.identity(1, N)
    return abs(complex(D.matrix[N - 1, N - 1]))


# -- trigonometric polynomials ------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrigPolynomial:
    """Laurent polynomial on a torus: exponent vector ↦ coefficient."""

    nvars: int
    terms: Mapping[tuple[int, ...], complex]

    def __post_init__(self):
        clean = {}
        for e, c in self.terms.items():
            e = tuple(int(x) for x in e)
            if len(e) != self.nvars:
                raise ValueError("exponent length mismatch")
            if c != 0:
                clean[e] = clean.get(e, 0) + complex(c)
        object.__setattr__(self, "terms", {e: c for e, c in sorted(clean.items()) if c != 0})

    @classmethod
    def constant(cls, nvars: int, c: complex) -> "TrigPolynomial":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def monomial(cls, exponent: Sequence[int], c: complex = 1.0) -> "TrigPolynomial":
        return cls(len(exponent), {tuple(exponent): c})

    def __add__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0) + c
        return TrigPolynomial(self.nvars, t)

    def __sub__(self, other):
        return self + (-1) * other

    def __mul__(self, other):
        if isinstance(other, TrigPolynomial):
            t: dict = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    t[e] = t.get(e, 0) + c1 * c2
            return TrigPolynomial(self.nvars, t)
        return TrigPolynomial(self.nvars, {e: other * c for e, c in self.terms.items()})

    __rmul__ = __mul__

    def conj(self) -> "TrigPolynomial":
        return TrigPolynomial(self.nvars, {tuple(-x for x in e): np.conj(c) for e, c in self.terms.items()})

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    def evaluate(self, theta: Sequence[float]) -> complex:
        """Value at the point with angle coordinates ``theta`` (z_j = e^{iθ_j})."""
        th = np.asarray(theta, dtype=float)
        return complex(sum(c * np.exp(1j * float(np.dot(e, th))) for e, c in self.terms.items()))

    def analytic_bound(self) -> float:
        return float(sum(abs(c) for c in self.terms.values()))

    def sup_norm(self, points: int = 64) -> float:
        if not self.terms:
            return 0.0
        grid = np.linspace(0, 2 * np.pi, points, endpoint=False)
        E = np.array(list(self.terms.keys()), dtype=float)
        C = np.array(list(self.terms.values()))
        best = 0.0
        for th in itertools.product(grid, repeat=self.nvars):
            best = max(best, abs(C @ np.exp(1j * (E @ np.array(th)))))
        return float(best)

    def allclose(self, other: "TrigPolynomial", tol: float = 1e-12) -> bool:
        return (self - other).is_zero(tol)

    def to_json(self) -> dict:
        return {
            "nvars": self.nvars,
            "terms": [{"exponent": list(e), "re": c.real, "im": c.imag} for e, c in self.terms.items()],
        }


def symbol(word: Sequence[str]) -> TrigPolynomial:
    """β_q on a word in t11, t12, t21, t22: t11 ↦ z, t22 ↦ z̄, t12, t21 ↦ 0."""
    images = {
        "t11": TrigPolynomial.monomial((1,)),
        "t22": TrigPolynomial.monomial((-1,)),
        "t12": TrigPolynomial(1, {}),
        "t21": TrigPolynomial(1, {}),
    }
    out = TrigPolynomial.constant(1, 1.0)
    for w in word:
        if w not in images:
            raise ValueError(f"unknown generator {w!r}")
        out = out * images[w]
    return out


# -- spin-l coefficient operators --------------------------------------------

@lru_cache(maxsize=64)
def _spin_embedding(q: float, two_l: int) -> np.ndarray:
    """Rows ι_m: orthonormal weight basis of V_l inside V_{1/2}^{⊗2l}."""
    from .qmodule import build_module, tensor_modules
    from .weyl import RootSystem

    base = build_module(RootSystem.from_type("A1"), q, (1,))
    if two_l == 0:
        return np.ones((1, 1))
    T = base
    for _ in range(two_l - 1):
        T = tensor_modules(T, base)
    top = np.zeros(T.dimension)
    top[0] = 1.0
    rows, v = [], top
    for _ in range(two_l + 1):
        rows.append(v / np.linalg.norm(v))
        v = T.F[0] @ rows[-1]
    return np.array(rows)


@lru_cache(maxsize=4096)
def spin_coefficient_operator(q: float, two_l: int, m: int, n: int, N: int) -> TruncatedOperator:
    """Π_q(C^l_{e_m, e_n}) with e_0 the highest weight vector of V_l (l = two_l/2)."""
    if not 0 <= m <= two_l or not 0 <= n <= two_l:
        raise ValueError("spin index out of range")
    if two_l == 0:
        return TruncatedOperator.identity(1, N)
    if N <= two_l:
        raise CutoffError(f"cutoff {N} too small for guard {two_l}")
    iota = _spin_embedding(q, two_l)
    gens = su2_generator_grid(q, N)
    out = TruncatedOperator.zero(1, N)
    rm, rn = iota[m], iota[n]
    for A in np.flatnonzero(np.abs(rm) > 1e-15):
        a_bits = np.unravel_index(A, (2,) * two_l)
        for B in np.flatnonzero(np.abs(rn) > 1e-15):
            b_bits = np.unravel_index(B, (2,) * two_l)
            term = TruncatedOperator.identity(1, N)
            for a, b in zip(a_bits, b_bits):
                term = term @ gens[int(a)][int(b)]
            out = out + complex(np.conj(rm[A]) * rn[B]) * term
    guard = min(out.guard, two_l)
    return out.with_guard(guard)


def unitarity_residual(q: float, two_l: int, N: int) -> float:
    """max_{k,j} guard-band residual of Σ_i P_{ik}^† P_{ij} - δ_kj."""
    d = two_l + 1
    P = [[spin_coefficient_operator(q, two_l, i, j, N) for j in range(d)] for i in range(d)]
    worst = 0.0
    I = TruncatedOperator.identity(1, N)
    for k in range(d):
        for j in range(d):
            acc = TruncatedOperator.zero(1, N)
            for i in range(d):
                acc = acc + P[i][k].H @ P[i][j]
            if k == j:
                acc = acc - I
            worst = max(worst, _guard_max(acc))
    return worst
