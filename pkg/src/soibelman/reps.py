"""Soibelman representations, torus characters and their ⊠-products.

Images of a single matrix coefficient under ``π_w`` for a reduced word
``(i_1, ..., i_m)`` are assembled from the iterated coproduct

    π_w(C_{η,ξ}) = Σ_{j_1..j_{m-1}} π_{i_1}(C_{η,e_{j_1}}) ⊗ ... ⊗ π_{i_m}(C_{e_{j_{m-1}},ξ}),

built right to left with memoized per-leg operators.  Products of
coefficients are mapped to products of images.
"""
from __future__ import annotations

import itertools
import weakref
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .fock import CutoffError, TrigPolynomial, TruncatedOperator, spectral_norm, spin_coefficient_operator
from .lattice import TorusLattice
from .qmodule import AlgebraElement, MatrixCoefficient, QModule
from .weyl import WeylGroup

STRING_TOL = 1e-9
LEG_DROP = 1e-14

# -- su2_i restriction -----------------------------------------------------


@dataclass(frozen=True)
class Su2String:
    two_l: int
    vectors: np.ndarray  # rows u_0 (top) ... u_{2l}


_STRINGS: "weakref.WeakKeyDictionary[QModule, dict]" = weakref.WeakKeyDictionary()


class StringDecompositionError(RuntimeError):
    pass


def su2_strings(m: QModule, i: int) -> tuple[Su2String, ...]:
    """Orthonormal decomposition of ``m`` into irreducible U_q(su2_i) strings."""
    cache = _STRINGS.setdefault(m, {})
    if i in cache:
        return cache[i]
    E, F = m.E[i], m.F[i]
    tops = []
    for mu, idx in sorted(m.weight_index.items(), key=lambda kv: (-kv[0][i], kv[0])):
        if mu[i] < 0:
            continue
        block = E[:, idx]
        if block.size == 0 or not np.any(block):
            null = np.eye(len(idx))
        else:
            _, s, Vh = np.linalg.svd(block)
            rank = int(np.sum(s > STRING_TOL * max(1.0, s[0])))
            null = Vh[rank:].conj().T
        for c in range(null.shape[1]):
            u = np.zeros(m.dimension, dtype=complex)
            u[idx] = null[:, c]
            tops.append((int(mu[i]), u))
    strings = []
    for two_l, u in tops:
        rows = [u / np.linalg.norm(u)]
        for _ in range(two_l):
            v = F @ rows[-1]
            rows.append(v / np.linalg.norm(v))
        strings.append((two_l, np.array(rows)))
    # joint Löwdin orthonormalization of all string vectors
    U = np.vstack([r for _, r in strings])
    if U.shape[0] != m.dimension:
        raise StringDecompositionError(f"strings cover {U.shape[0]} of {m.dimension} dimensions")
    G = U.conj() @ U.T
    w, V = np.linalg.eigh(G)
    if w.min() < 0.5:
        raise StringDecompositionError("string vectors are far from orthonormal")
    U = (V @ np.diag(w**-0.5) @ V.conj().T).T @ U
    out, pos = [], 0
    for two_l, _ in strings:
        out.append(Su2String(two_l, U[pos : pos + two_l + 1]))
        pos += two_l + 1
    # closure: E and F act inside each string as on V_l
    for s in out:
        P = s.vectors.conj().T @ s.vectors
        for X in (E, F):
            resid = np.linalg.norm(X @ s.vectors.T - P @ X @ s.vectors.T)
            if resid > STRING_TOL * max(1.0, np.linalg.norm(X)):
                raise StringDecompositionError(f"string not closed under su2_{i + 1}: {resid:.2e}")
    cache[i] = tuple(out)
    return cache[i]


def restrict_to_su2(mc: MatrixCoefficient, i: int) -> list[tuple[int, np.ndarray]]:
    """ς_i(C_{η,ξ}) as [(2l, c)] with c[m, n] the weight of C^l_{e_m, e_n}."""
    out = []
    for s in su2_strings(mc.module, i):
        a = s.vectors.conj() @ mc.eta  # <u_m, η>
        b = s.vectors.conj() @ mc.xi
        c = np.outer(a.conj(), b)
        if np.any(np.abs(c) > LEG_DROP):
            out.append((s.two_l, c))
    return out


def pi_i(mc: MatrixCoefficient, i: int, N: int) -> TruncatedOperator:
    """π_i = Π_{q_i} ∘ ς_i on a single coefficient."""
    qi = mc.module.q_i(i)
    out = TruncatedOperator.zero(1, N)
    for two_l, c in restrict_to_su2(mc, i):
        for mi, ni in zip(*np.nonzero(np.abs(c) > LEG_DROP)):
            out = out + complex(c[mi, ni]) * spin_coefficient_operator(qi, two_l, int(mi), int(ni), N)
    return out


# -- π_w -------------------------------------------------------------------------


class LegCache:
    """Operators π_i(C_{e_a, e_j}) for basis vectors of one module."""

    def __init__(self, m: QModule, i: int, N: int):
        self.m, self.i, self.N = m, i, N
        qi = m.q_i(i)
        d = m.dimension
        ops: dict[tuple[int, int], TruncatedOperator] = {}
        for s in su2_strings(m, i):
            U = s.vectors  # rows u_k
            for mi in range(s.two_l + 1):
                for ni in range(s.two_l + 1):
                    P = spin_coefficient_operator(qi, s.two_l, mi, ni, N)
                    # coefficient of P in π_i(C_{e_a,e_j}) is conj(<u_m,e_a>) <u_n,e_j> = u_m[a] conj(u_n[j])
                    w = np.outer(U[mi], U[ni].conj())
                    for a, j in zip(*np.nonzero(np.abs(w) > LEG_DROP)):
                        key = (int(a), int(j))
                        term = complex(w[a, j]) * P
                        ops[key] = ops[key] + term if key in ops else term
        self.ops = ops
        self.dim = d

    def leg(self, a: int, y: np.ndarray) -> TruncatedOperator | None:
        """π_i(C_{e_a, y})."""
        out = None
        for j in np.flatnonzero(np.abs(y) > LEG_DROP):
            op = self.ops.get((a, int(j)))
            if op is None:
                continue
            term = complex(y[j]) * op
            out = term if out is None else out + term
        return out


@dataclass(frozen=True)
class RepresentationHandle:
    kind: str
    group: str
    word: tuple[int, ...] = ()
    q: float = 0.0
    cutoff: int = 0
    torus: dict | None = None
    point: tuple[float, ...] | None = None

    def to_json(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v not in (None, ())}


class SoibelmanRep:
    """π_w^q for a fixed reduced word, truncated at cutoff ``N``."""

    def __init__(self, group: WeylGroup, word: Sequence[int], N: int):
        word = tuple(int(i) for i in word)
        if not group.is_reduced(word):
            raise ValueError(f"word {word} is not reduced")
        self.group, self.word, self.N = group, word, N
        if word and N <= 2:
            raise CutoffError("cutoff too small")
        self._legs: dict[tuple[int, int], LegCache] = {}
        self._images: "weakref.WeakKeyDictionary[MatrixCoefficient, TruncatedOperator]" = weakref.WeakKeyDictionary()

    @property
    def factors(self) -> int:
        return len(self.word)

    @property
    def element(self):
        return self.group.from_word(self.word)

    def handle(self, q: float | None = None) -> RepresentationHandle:
        return RepresentationHandle("pi_w", self.group.rs.name, self.word, q or 0.0, self.N)

    def _leg_cache(self, m: QModule, i: int) -> LegCache:
        key = (id(m), i)
        if key not in self._legs:
            self._legs[key] = LegCache(m, i, self.N)
        return self._legs[key]

    def coefficient(self, mc: MatrixCoefficient) -> TruncatedOperator:
        if mc in self._images:
            return self._images[mc]
        img = self._chain(mc.module, mc.eta, mc.xi)
        self._images[mc] = img
        return img

    def _chain(self, m: QModule, eta: np.ndarray, xi: np.ndarray) -> TruncatedOperator:
        k = len(self.word)
        if k == 0:
            return TruncatedOperator.scalar(complex(np.vdot(eta, xi)))
        d = m.dimension
        # R[a] = image of C_{e_a, ξ} under the last legs
        legs = [self._leg_cache(m, i) for i in self.word]
        R: list[TruncatedOperator | None] = [legs[-1].leg(a, xi) for a in range(d)]
        for level in range(k - 2, -1, -1):
            newR: list[TruncatedOperator | None] = []
            for a in range(d):
                acc = None
                for j in range(d):
                    if R[j] is None:
                        continue
                    op = legs[level].ops.get((a, j))
                    if op is None:
                        continue
                    term = op.kron(R[j])
                    acc = term if acc is None else acc + term
                newR.append(acc)
            R = newR
        out = TruncatedOperator.zero(k, self.N)
        for a in np.flatnonzero(np.abs(eta) > LEG_DROP):
            if R[a] is not None:
                out = out + complex(np.conj(eta[a])) * R[a]
        return out

    def __call__(self, x) -> TruncatedOperator:
        if isinstance(x, MatrixCoefficient):
            return self.coefficient(x)
        return self.element_image(x)

    def element_image(self, x: AlgebraElement) -> TruncatedOperator:
        k = len(self.word)
        out = TruncatedOperator.zero(k, self.N) if k else TruncatedOperator.scalar(0.0)
        for c, word in x.terms:
            term = TruncatedOperator.identity(k, self.N) if k else TruncatedOperator.scalar(1.0)
            for f, star in word:
                img = self.coefficient(f)
                term = term @ (img.H if star else img)
            out = out + c * term
        return out

    def boxtimes_point(self, x, theta: Sequence[float]) -> TruncatedOperator:
        """(π_w ⊠ χ_t)(x) with t given by angle coordinates θ."""
        return self.element_image(_twist(x, theta))

    def boxtimes_character(self, x, lattice: TorusLattice) -> "RestrictedCharacterSum":
        """(π_w ⊠ χ_L)(x) as an exact sum of operators times restricted characters."""
        x = _as_element(x)
        k = len(self.word)
        total = RestrictedCharacterSum.zero(lattice, k, self.N)
        for c, word in x.terms:
            term = RestrictedCharacterSum.one(lattice, k, self.N)
            for f, star in word:
                piece = self._coefficient_character(f, lattice)
                term = term * (piece.adjoint() if star else piece)
            total = total + term * c
        return total

    def _coefficient_character(self, f: MatrixCoefficient, lattice: TorusLattice) -> "RestrictedCharacterSum":
        terms: dict[tuple[int, ...], TruncatedOperator] = {}
        for mu, idx in f.module.weight_index.items():
            part = np.zeros_like(f.xi)
            part[idx] = f.xi[idx]
            if not np.any(np.abs(part) > LEG_DROP):
                continue
            op = self._chain(f.module, f.eta, part)
            e = lattice.pairing(mu)
            terms[e] = terms[e] + op if e in terms else op
        return RestrictedCharacterSum(lattice, len(self.word), self.N, terms)


def _as_element(x) -> AlgebraElement:
    return AlgebraElement.of(x) if isinstance(x, MatrixCoefficient) else x


def _unitary(m: QModule, theta: Sequence[float]) -> np.ndarray:
    th = np.asarray(theta, dtype=float)
    return np.exp(1j * np.array([np.dot(mu, th) for mu in m.weights]))


def _twist(x, theta) -> AlgebraElement:
    """Replace each C_{η,ξ} by C_{η, U_t ξ}, i.e. apply (id ⊗ χ_t)∘Δ."""
    x = _as_element(x)
    cache: dict[int, MatrixCoefficient] = {}
    terms = []
    for c, word in x.terms:
        new = []
        for f, star in word:
            if id(f) not in cache:
                cache[id(f)] = MatrixCoefficient(f.module, f.eta, _unitary(f.module, theta) * f.xi)
            new.append((cache[id(f)], star))
        terms.append((c, tuple(new)))
    return AlgebraElement(tuple(terms))


# -- characters and the torus map --------------------------------------------


def chi_t(x, theta: Sequence[float]) -> complex:
    """χ_t(x); C_{η,ξ} ↦ η^† U_t ξ with U_t e^{γ} = e^{iγ·θ}."""
    x = _as_element(x)
    total = 0j
    for c, word in x.terms:
        val = complex(c)
        for f, star in word:
            v = complex(np.vdot(f.eta, _unitary(f.module, theta) * f.xi))
            val *= np.conj(v) if star else v
        total += val
    return total


def counit(x) -> complex:
    x = _as_element(x)
    n = next((f.module.rank for f in x.factors()), 1)
    return chi_t(x, (0.0,) * n)


def tau_coefficient(f: MatrixCoefficient) -> TrigPolynomial:
    terms: dict[tuple[int, ...], complex] = {}
    for mu, idx in f.module.weight_index.items():
        c = complex(np.vdot(f.eta[idx], f.xi[idx]))
        if c != 0:
            terms[mu] = terms.get(mu, 0) + c
    return TrigPolynomial(f.module.rank, terms)


def tau(x, rank: int | None = None) -> TrigPolynomial:
    """τ_q(x) as an exact Laurent polynomial in z_1..z_n."""
    x = _as_element(x)
    n = rank or next((f.module.rank for f in x.factors()), 1)
    total = TrigPolynomial(n, {})
    for c, word in x.terms:
        term = TrigPolynomial.constant(n, c)
        for f, star in word:
            p = tau_coefficient(f)
            term = term * (p.conj() if star else p)
        total = total + term
    return total


def restrict_polynomial(p: TrigPolynomial, lattice: TorusLattice) -> TrigPolynomial:
    """Restriction of p to the subtorus of ``lattice`` in its basis coordinates."""
    terms: dict[tuple[int, ...], complex] = {}
    for e, c in p.terms.items():
        r = lattice.pairing(e)
        terms[r] = terms.get(r, 0) + c
    return TrigPolynomial(lattice.rank, terms)


def restricted_character(x, lattice_or_set) -> TrigPolynomial | tuple[TrigPolynomial, ...]:
    """χ restricted to T_γ (one lattice) or to a union T_v^w (tuple of lattices)."""
    p = tau(x)
    if isinstance(lattice_or_set, TorusLattice):
        return restrict_polynomial(p, lattice_or_set)
    return tuple(restrict_polynomial(p, L) for L in lattice_or_set)


def subtorus_angles(lattice: TorusLattice, s: Sequence[float]) -> np.ndarray:
    """Angle coordinates θ of exp(2πi Σ s_k b_k)."""
    if lattice.rank == 0:
        return np.zeros(lattice.n)
    return 2 * np.pi * lattice.basis.astype(float) @ np.asarray(s, dtype=float)


# -- restricted character sums ------------------------------------------------


@dataclass(frozen=True, eq=False)
class RestrictedCharacterSum:
    """Σ_k A_k ⊗ z^{e_k} with z a point of the subtorus of ``lattice``."""

    lattice: TorusLattice
    factors: int
    cutoff: int
    terms: Mapping[tuple[int, ...], TruncatedOperator] = field(default_factory=dict)

    @classmethod
    def zero(cls, lattice, factors, N):
        return cls(lattice, factors, N, {})

    @classmethod
    def one(cls, lattice, factors, N):
        I = TruncatedOperator.identity(factors, N) if factors else TruncatedOperator.scalar(1.0)
        return cls(lattice, factors, N, {(0,) * lattice.rank: I})

    def __add__(self, other: "RestrictedCharacterSum") -> "RestrictedCharacterSum":
        t = dict(self.terms)
        for e, op in other.terms.items():
            t[e] = t[e] + op if e in t else op
        return RestrictedCharacterSum(self.lattice, self.factors, self.cutoff, t)

    def __mul__(self, other):
        if isinstance(other, RestrictedCharacterSum):
            t: dict = {}
            for e1, a in self.terms.items():
                for e2, b in other.terms.items():
                    e = tuple(x + y for x, y in zip(e1, e2))
                    t[e] = t[e] + a @ b if e in t else a @ b
            return RestrictedCharacterSum(self.lattice, self.factors, self.cutoff, t)
        return RestrictedCharacterSum(self.lattice, self.factors, self.cutoff, {e: other * a for e, a in self.terms.items()})

    def adjoint(self) -> "RestrictedCharacterSum":
        return RestrictedCharacterSum(
            self.lattice, self.factors, self.cutoff, {tuple(-x for x in e): a.H for e, a in self.terms.items()}
        )

    def at(self, s: Sequence[float]) -> TruncatedOperator:
        out = TruncatedOperator.zero(self.factors, self.cutoff) if self.factors else TruncatedOperator.scalar(0.0)
        for e, a in self.terms.items():
            out = out + complex(np.exp(2j * np.pi * np.dot(e, s))) * a
        return out

    @property
    def guard(self) -> int:
        return max((a.guard for a in self.terms.values()), default=0)

    def analytic_bound(self) -> float:
        return float(sum(a.norm() for a in self.terms.values()))

    def exponent_data(self, tol: float = 1e-12) -> dict[tuple[int, ...], TruncatedOperator]:
        return {e: a for e, a in self.terms.items() if a.matrix.nnz and abs(a.matrix).max() > tol}

    def sup_norm(self, points: int = 64, guard_only: bool = True) -> float:
        """Grid-sampled sup over the subtorus of the operator norm."""
        data = self.exponent_data()
        if not data:
            return 0.0
        exps = np.array(list(data.keys()), dtype=float).reshape(len(data), -1)
        mats = []
        for a in data.values():
            mats.append(a.guard_block(max(0, self.guard - a.guard)) if guard_only and a.factors else a.matrix)
        # only the directions actually used by the exponents need sampling
        r = exps.shape[1]
        if r == 0 or np.allclose(exps, exps[0]):
            return spectral_norm(sum(mats[1:], mats[0]))
        grid = np.arange(points) / points
        best = 0.0
        for s in itertools.product(grid, repeat=r):
            ph = np.exp(2j * np.pi * (exps @ np.array(s)))
            M = mats[0] * ph[0]
            for p, A in zip(ph[1:], mats[1:]):
                M = M + A * p
            best = max(best, spectral_norm(M))
        return best


def union_sup_norm(rep: SoibelmanRep, x, lattices: Sequence[TorusLattice], points: int = 64) -> float:
    """‖(π_v ⊠ χ_v^w)(x)‖ with χ_v^w the direct sum over the lattices of T_v^w."""
    return max((rep.boxtimes_character(x, L).sup_norm(points) for L in lattices), default=0.0)


def pullback_exponents(poly: TrigPolynomial, L: TorusLattice, *factors: TorusLattice) -> TrigPolynomial:
    """Pull a polynomial on T_L back along T_{L1} × … × T_{Lk} → T_L, (a_1, …, a_k) ↦ a_1⋯a_k."""
    mats = [
        np.array([L.coordinates_of(b) for b in F.rows], dtype=np.int64).reshape(F.rank, L.rank) for F in factors
    ]
    terms: dict[tuple[int, ...], complex] = {}
    for e, c in poly.terms.items():
        nu = np.asarray(e, dtype=np.int64)
        key = tuple(int(v) for M in mats for v in M @ nu)
        terms[key] = terms.get(key, 0) + c
    return TrigPolynomial(sum(F.rank for F in factors), terms)


def boxtimes_characters(x, *lattices: TorusLattice) -> TrigPolynomial:
    """(χ_{L1} ⊠ … ⊠ χ_{Lk})(x) computed through the iterated coproduct chain sum."""
    x = _as_element(x)
    r = sum(L.rank for L in lattices)
    total = TrigPolynomial(r, {})
    for c, word in x.terms:
        term = TrigPolynomial.constant(r, c)
        for f, star in word:
            p = _coefficient_chain(f, lattices)
            term = term * (p.conj() if star else p)
        total = total + term
    return total


def _coefficient_chain(f: MatrixCoefficient, lattices: Sequence[TorusLattice]) -> TrigPolynomial:
    m = f.module
    d = m.dimension
    basis = np.eye(d, dtype=complex)
    # Σ_{j_1..j_{k-1}} χ_{L1}(C_{η,e_{j1}}) χ_{L2}(C_{e_{j1},e_{j2}}) ⋯ χ_{Lk}(C_{e_{j_{k-1}},ξ})
    legs = {}
    terms: dict[tuple[int, ...], complex] = {}
    for chain in itertools.product(range(d), repeat=len(lattices) - 1):
        vecs = [f.eta] + [basis[j] for j in chain] + [f.xi]
        acc = {(): 1.0 + 0j}
        for k, L in enumerate(lattices):
            key = (k, chain[k - 1] if k else None, chain[k] if k < len(chain) else None)
            if key not in legs:
                legs[key] = restrict_polynomial(tau_coefficient(MatrixCoefficient(m, vecs[k], vecs[k + 1])), L).terms
            nxt: dict[tuple[int, ...], complex] = {}
            for e0, c0 in acc.items():
                for e1, c1 in legs[key].items():
                    nxt[e0 + e1] = nxt.get(e0 + e1, 0) + c0 * c1
            acc = nxt
            if not acc:
                break
        for e, c in acc.items():
            terms[e] = terms.get(e, 0) + c
    return TrigPolynomial(sum(L.rank for L in lattices), terms)


def fundamental_coefficient(m: QModule, a: int, b: int) -> MatrixCoefficient:
    d = m.dimension
    return MatrixCoefficient(m, np.eye(d)[a], np.eye(d)[b])


def commutant_dimension(ops: Sequence[TruncatedOperator], tol: float = 1e-8) -> int:
    """dim{X : XA = AX for all A}: heuristic irreducibility probe at small cutoff."""
    n = ops[0].side
    rows = []
    I = np.eye(n)
    for op in ops:
        A = op.dense()
        rows.append(np.kron(I, A) - np.kron(A.T, I))
    M = np.vstack(rows)
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s < tol * max(1.0, s[0]))) + max(0, n * n - len(s))


def all_words(group: WeylGroup):
    return itertools.chain.from_iterable(group.reduced_words(w) for w in group)
