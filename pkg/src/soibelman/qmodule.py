"""Finite-dimensional U_q(g) modules with their invariant inner product.

A module is stored in an orthonormal basis of weight vectors, so the
generators are plain matrices with ``E_i^† = F_i K_i`` and ``K_i^† = K_i``.

Matrix coefficients follow ``C_{η,ξ}(a) = η^† ρ(a) ξ``.  Products of
coefficients are coefficients of tensor product modules built with

    Δ(E) = E ⊗ 1 + K ⊗ E,   Δ(F) = F ⊗ K^{-1} + 1 ⊗ F,   Δ(K) = K ⊗ K,

which is compatible with the ``*``-structure above.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .weyl import RootSystem, WeylElement

RANK_CUTOFF = 1e-9
AMBIGUOUS_BAND = (1e-11, 1e-7)
DEFAULT_MAX_DIM = 512


class ModuleBuildError(RuntimeError):
    pass


def qint(n: int, q: float) -> float:
    """Symmetric quantum integer [n]_q."""
    return (q**n - q ** (-n)) / (q - 1 / q)


def qbinom(n: int, k: int, q: float) -> float:
    num = 1.0
    for j in range(k):
        num *= qint(n - j, q) / qint(j + 1, q)
    return num


@dataclass(frozen=True, eq=False)
class QModule:
    """U_q(g) module in an orthonormal weight basis."""

    rs: RootSystem
    q: float
    weights: tuple[tuple[int, ...], ...]
    E: tuple[np.ndarray, ...] = field(repr=False)
    F: tuple[np.ndarray, ...] = field(repr=False)
    highest_weight: tuple[int, ...] | None = None
    label: str = ""

    @property
    def dimension(self) -> int:
        return len(self.weights)

    @property
    def rank(self) -> int:
        return self.rs.rank

    def q_i(self, i: int) -> float:
        return self.q ** int(self.rs.symmetrizers[i])

    @cached_property
    def K(self) -> tuple[np.ndarray, ...]:
        return tuple(np.diag([self.q_i(i) ** mu[i] for mu in self.weights]) for i in range(self.rank))

    @cached_property
    def K_inv(self) -> tuple[np.ndarray, ...]:
        return tuple(np.diag([self.q_i(i) ** (-mu[i]) for mu in self.weights]) for i in range(self.rank))

    @cached_property
    def weight_index(self) -> dict[tuple[int, ...], list[int]]:
        out: dict[tuple[int, ...], list[int]] = {}
        for k, mu in enumerate(self.weights):
            out.setdefault(mu, []).append(k)
        return out

    def multiplicities(self) -> dict[tuple[int, ...], int]:
        return {mu: len(ix) for mu, ix in self.weight_index.items()}

    def key(self) -> tuple:
        return (self.label, self.rs.cartan.tobytes(), self.q)

    def tensor(self, other: "QModule") -> "QModule":
        return tensor_modules(self, other)

    def to_json(self) -> dict:
        return {
            "version": 1,
            "cartan": self.rs.cartan.tolist(),
            "q": self.q,
            "highest_weight": list(self.highest_weight) if self.highest_weight else None,
            "weights": [list(mu) for mu in self.weights],
            "E": [e.tolist() for e in self.E],
            "F": [f.tolist() for f in self.F],
        }

    @classmethod
    def from_json(cls, data: dict, rs: RootSystem | None = None) -> "QModule":
        rs = rs or RootSystem(np.array(data["cartan"]))
        lam = tuple(data["highest_weight"]) if data.get("highest_weight") else None
        return cls(
            rs,
            float(data["q"]),
            tuple(tuple(mu) for mu in data["weights"]),
            tuple(np.array(e, dtype=float) for e in data["E"]),
            tuple(np.array(f, dtype=float) for f in data["F"]),
            lam,
            _label(rs, lam),
        )


def _label(rs: RootSystem, lam) -> str:
    name = rs.name or "x".join(map(str, rs.cartan.ravel()))
    return f"{name}:{','.join(map(str, lam))}" if lam is not None else name


def _rank_select(G: np.ndarray, scale: float) -> list[int]:
    """Greedy fixed-order selection of spanning vectors, with an ambiguity guard.

    ``scale`` is the magnitude of the terms that were summed into ``G``, so
    cancellation down to rounding level reads as rank deficiency.
    """
    if scale <= 0 or not G.size:
        return []
    ev = np.linalg.eigvalsh(G) / scale
    lo, hi = AMBIGUOUS_BAND
    if np.any((ev > lo) & (ev < hi)):
        raise ModuleBuildError(f"Gram rank ambiguous: eigenvalues {ev.tolist()}")
    rank = int(np.sum(ev > RANK_CUTOFF))
    # fixed order keeps the basis continuous in q; a vector is taken when a
    # fair share of its norm survives projection onto the earlier picks
    chosen: list[int] = []
    for share in (1e-3, 1e-6, RANK_CUTOFF):
        chosen = []
        for k in range(len(G)):
            if G[k, k] / scale <= RANK_CUTOFF:
                continue
            if chosen:
                S = G[np.ix_(chosen, chosen)]
                g = G[chosen, k]
                resid = G[k, k] - g @ np.linalg.solve(S, g)
            else:
                resid = G[k, k]
            if resid > share * G[k, k] and resid / scale > RANK_CUTOFF:
                chosen.append(k)
            if len(chosen) == rank:
                break
        if len(chosen) == rank:
            break
    if len(chosen) != rank:
        raise ModuleBuildError("greedy basis selection failed to reach the Gram rank")
    return chosen


_MEMO: dict = {}
_DISK_CACHE = None


def set_disk_cache(cache) -> None:
    """Install (or remove, with None) an object with ``load(rs, q, lam)`` / ``store(module)``."""
    global _DISK_CACHE
    _DISK_CACHE = cache
    _MEMO.clear()


def build_module(rs: RootSystem, q: float, lam: Sequence[int], max_dim: int = DEFAULT_MAX_DIM) -> QModule:
    """Irreducible highest-weight module V_λ^q (memoized in-process, optionally on disk)."""
    lam = tuple(int(x) for x in lam)
    key = (rs.cartan.tobytes(), float(q), lam, max_dim)
    if key in _MEMO:
        return _MEMO[key]
    m = _DISK_CACHE.load(rs, q, lam) if _DISK_CACHE is not None else None
    if m is None:
        m = _build_module(rs, q, lam, max_dim)
        if _DISK_CACHE is not None:
            _DISK_CACHE.store(m)
    _MEMO[key] = m
    return m


def _build_module(rs: RootSystem, q: float, lam: Sequence[int], max_dim: int) -> QModule:
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    lam = tuple(int(x) for x in lam)
    n = rs.rank
    if len(lam) != n or any(x < 0 for x in lam):
        raise ValueError(f"{lam} is not a dominant weight for rank {n}")
    A = rs.cartan
    qs = [q ** int(d) for d in rs.symmetrizers]
    alpha = [tuple(int(x) for x in A[:, i]) for i in range(n)]

    def add(mu, nu, s=1):
        return tuple(a + s * b for a, b in zip(mu, nu))

    # per-weight data: dimension, E_j blocks V(μ) -> V(μ+α_j), F_i blocks V(μ+α_i) -> V(μ)
    dims: dict[tuple, int] = {lam: 1}
    Eblk: dict[tuple, np.ndarray] = {}
    Fblk: dict[tuple, np.ndarray] = {}
    order = [lam]
    level = [lam]
    total = 1
    while level:
        cands = sorted({add(mu, alpha[i], -1) for mu in level for i in range(n)}, reverse=True)
        nxt = []
        for mu in cands:
            span = [(i, k) for i in range(n) if add(mu, alpha[i]) in dims for k in range(dims[add(mu, alpha[i])])]
            M = {}
            Mabs = {}
            for j in range(n):
                tgt = add(mu, alpha[j])
                if tgt not in dims:
                    continue
                cols = np.zeros((dims[tgt], len(span)))
                mags = np.zeros((dims[tgt], len(span)))
                for c, (i, k) in enumerate(span):
                    src = add(mu, alpha[i])
                    e = np.zeros(dims[src])
                    e[k] = 1.0
                    up = add(src, alpha[j])
                    if up in dims and (src, j) in Eblk:
                        # F_i E_j b lands in V(μ+α_j)
                        term = Fblk[(tgt, i)] @ (Eblk[(src, j)] @ e)
                        cols[:, c] += term
                        mags[:, c] += np.abs(term)
                    if i == j:
                        cols[k, c] += qint(src[i], qs[i])
                        mags[k, c] += abs(qint(src[i], qs[i]))
                M[j] = cols
                Mabs[j] = mags
            G = np.zeros((len(span), len(span)))
            scale = 0.0
            for r, (i, k) in enumerate(span):
                factor = qs[i] ** (-add(mu, alpha[i])[i])
                G[r, :] = factor * M[i][k, :]
                scale = max(scale, factor * float(np.max(Mabs[i][k, :])))
            G = 0.5 * (G + G.T)
            chosen = _rank_select(G, scale)
            if not chosen:
                continue
            L = np.linalg.cholesky(G[np.ix_(chosen, chosen)])
            C = np.zeros((len(span), len(chosen)))
            C[chosen, :] = np.linalg.inv(L).T
            # residual: every spanning vector must lie in the chosen span
            resid = G - G @ C @ C.T @ G
            if np.max(np.abs(resid)) > 1e-8 * scale:
                raise ModuleBuildError(f"spanning set not captured at weight {mu}: {np.max(np.abs(resid)) / scale:.2e}")
            dims[mu] = len(chosen)
            total += len(chosen)
            if total > max_dim:
                raise ModuleBuildError(f"module dimension exceeds the bound {max_dim}")
            for j, Mj in M.items():
                Eblk[(mu, j)] = Mj @ C
            coords = C.T @ G  # coordinates of each spanning vector in the new basis
            for i in range(n):
                src = add(mu, alpha[i])
                if src in dims:
                    cols = [c for c, (ii, _) in enumerate(span) if ii == i]
                    Fblk[(mu, i)] = coords[:, cols]
            order.append(mu)
            nxt.append(mu)
        level = nxt

    offsets, weights = {}, []
    for mu in order:
        offsets[mu] = len(weights)
        weights.extend([mu] * dims[mu])
    dim = len(weights)
    E = [np.zeros((dim, dim)) for _ in range(n)]
    F = [np.zeros((dim, dim)) for _ in range(n)]
    for (mu, j), blk in Eblk.items():
        tgt = add(mu, alpha[j])
        E[j][offsets[tgt] : offsets[tgt] + dims[tgt], offsets[mu] : offsets[mu] + dims[mu]] = blk
    for (mu, i), blk in Fblk.items():
        src = add(mu, alpha[i])
        F[i][offsets[mu] : offsets[mu] + dims[mu], offsets[src] : offsets[src] + dims[src]] = blk
    return QModule(rs, float(q), tuple(weights), tuple(E), tuple(F), lam, _label(rs, lam))


def tensor_modules(V: QModule, W: QModule) -> QModule:
    if V.rs is not W.rs and not np.array_equal(V.rs.cartan, W.rs.cartan):
        raise ValueError("modules over different root systems")
    if V.q != W.q:
        raise ValueError("modules at different q")
    Iv, Iw = np.eye(V.dimension), np.eye(W.dimension)
    E = tuple(np.kron(V.E[i], Iw) + np.kron(V.K[i], W.E[i]) for i in range(V.rank))
    F = tuple(np.kron(V.F[i], W.K_inv[i]) + np.kron(Iv, W.F[i]) for i in range(V.rank))
    weights = tuple(tuple(a + b for a, b in zip(mu, nu)) for mu in V.weights for nu in W.weights)
    return QModule(V.rs, V.q, weights, E, F, None, f"({V.label})⊗({W.label})")


# -- relations -----------------------------------------------------------------

def relation_residuals(m: QModule) -> dict[str, float]:
    """Operator-norm residuals of the defining relation families."""
    n, A = m.rank, m.rs.cartan
    I = np.eye(m.dimension)
    res = dict.fromkeys(("cartan", "k_conjugation", "ef_commutator", "serre_e", "serre_f", "adjoint"), 0.0)

    def upd(key, X):
        res[key] = max(res[key], float(np.linalg.norm(X, 2)) if X.size else 0.0)

    for i in range(n):
        qi = m.q_i(i)
        upd("cartan", m.K[i] @ m.K_inv[i] - I)
        upd("adjoint", m.E[i].conj().T - m.F[i] @ m.K[i])
        upd("adjoint", m.K[i].conj().T - m.K[i])
        for j in range(n):
            upd("cartan", m.K[i] @ m.K[j] - m.K[j] @ m.K[i])
            upd("k_conjugation", m.K[i] @ m.E[j] @ m.K_inv[i] - qi ** A[i, j] * m.E[j])
            upd("k_conjugation", m.K[i] @ m.F[j] @ m.K_inv[i] - qi ** (-A[i, j]) * m.F[j])
            rhs = (m.K[i] - m.K_inv[i]) / (qi - 1 / qi) if i == j else 0
            upd("ef_commutator", m.E[i] @ m.F[j] - m.F[j] @ m.E[i] - rhs)
            if i != j:
                b = 1 - int(A[i, j])
                for key, X in (("serre_e", m.E), ("serre_f", m.F)):
                    acc = np.zeros_like(I)
                    for r in range(b + 1):
                        acc = acc + (-1) ** r * qbinom(b, r, qi) * (
                            np.linalg.matrix_power(X[i], b - r) @ X[j] @ np.linalg.matrix_power(X[i], r)
                        )
                    upd(key, acc)
    return res


# -- distinguished vectors and subspaces --------------------------------------

def extremal_vector(m: QModule, w: WeylElement) -> np.ndarray:
    """Unit vector spanning the weight space V(w·λ), first nonzero entry positive."""
    if m.highest_weight is None:
        raise ValueError("extremal vectors need an irreducible highest-weight module")
    mu = w.act_weight(m.highest_weight)
    idx = m.weight_index.get(mu, [])
    if len(idx) != 1:
        raise ModuleBuildError(f"weight space {mu} has dimension {len(idx)}, expected 1")
    v = np.zeros(m.dimension, dtype=complex)
    v[idx[0]] = 1.0
    return v


def _orth(vectors: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if vectors.shape[1] == 0:
        return vectors
    U, s, _ = np.linalg.svd(vectors, full_matrices=False)
    keep = s > tol * max(1.0, s[0])
    return U[:, keep]


def borel_submodule(m: QModule, w: WeylElement) -> np.ndarray:
    """Orthonormal basis (columns) of U_q(b)·ξ_{w·λ}."""
    Q = _orth(extremal_vector(m, w)[:, None])
    while True:
        grown = _orth(np.hstack([Q] + [E @ Q for E in m.E]))
        if grown.shape[1] == Q.shape[1]:
            return Q
        Q = grown


# -- matrix coefficients and the coordinate algebra ---------------------------

@dataclass(frozen=True, eq=False)
class MatrixCoefficient:
    """The functional a ↦ η^† ρ(a) ξ on U_q(g)."""

    module: QModule
    eta: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        d = self.module.dimension
        eta = np.asarray(self.eta, dtype=complex).reshape(-1)
        xi = np.asarray(self.xi, dtype=complex).reshape(-1)
        if eta.shape != (d,) or xi.shape != (d,):
            raise ValueError(f"coefficient vectors must have dimension {d}")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "xi", xi)

    def __call__(self, a: np.ndarray) -> complex:
        return complex(self.eta.conj() @ a @ self.xi)

    def counit(self) -> complex:
        return complex(np.vdot(self.eta, self.xi))

    def weight_components(self, vec: np.ndarray) -> dict[tuple[int, ...], np.ndarray]:
        out = {}
        for mu, idx in self.module.weight_index.items():
            part = vec[idx]
            if np.any(part != 0):
                out[mu] = part
        return out

    def __mul__(self, other: "MatrixCoefficient") -> "MatrixCoefficient":
        T = tensor_modules(self.module, other.module)
        return MatrixCoefficient(T, np.kron(self.eta, other.eta), np.kron(self.xi, other.xi))

    def as_element(self) -> "AlgebraElement":
        return AlgebraElement(((1.0, ((self, False),)),))


def coefficient(m: QModule, eta, xi) -> MatrixCoefficient:
    return MatrixCoefficient(m, eta, xi)


Factor = tuple[MatrixCoefficient, bool]


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """Finite sum of coefficients times words in (starred) matrix coefficients."""

    terms: tuple[tuple[complex, tuple[Factor, ...]], ...] = ()

    @classmethod
    def unit(cls) -> "AlgebraElement":
        return cls(((1.0, ()),))

    @classmethod
    def of(cls, mc: MatrixCoefficient, star: bool = False) -> "AlgebraElement":
        return cls(((1.0, ((mc, star),)),))

    def adjoint(self) -> "AlgebraElement":
        return AlgebraElement(
            tuple((complex(np.conj(c)), tuple((f, not s) for f, s in reversed(word))) for c, word in self.terms)
        )

    @property
    def star(self) -> "AlgebraElement":
        return self.adjoint()

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.terms + other.terms)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-1) * other

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return AlgebraElement(tuple((a * b, u + v) for a, u in self.terms for b, v in other.terms))
        return AlgebraElement(tuple((other * c, w) for c, w in self.terms))

    __rmul__ = __mul__

    def is_word_fixed_by_adjoint(self) -> bool:
        """Structural self-adjointness: the adjoint reproduces the same terms."""
        adj = self.adjoint()
        if len(adj.terms) != len(self.terms):
            return False
        return all(
            np.isclose(c1, c2) and len(w1) == len(w2) and all(f1 is f2 and s1 == s2 for (f1, s1), (f2, s2) in zip(w1, w2))
            for (c1, w1), (c2, w2) in zip(self.terms, adj.terms)
        )

    def factors(self) -> Iterable[MatrixCoefficient]:
        for _, word in self.terms:
            for f, _ in word:
                yield f


def upsilon(m: QModule, w: WeylElement) -> AlgebraElement:
    """Υ_w = (C_{w·λ,λ})^* C_{w·λ,λ}; requires λ strictly dominant."""
    lam = m.highest_weight
    if lam is None or any(x < 1 for x in lam):
        raise ValueError("Υ_w needs λ in the strictly dominant chamber")
    f = coefficient(m, extremal_vector(m, w), extremal_vector(m, w.group.identity))
    return AlgebraElement(((1.0, ((f, True), (f, False))),))
