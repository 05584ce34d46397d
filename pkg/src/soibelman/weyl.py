"""Root systems, Weyl groups, Bruhat order and labeled Bruhat paths.

Conventions
-----------
* ``cartan[i][j] = <alpha_i^vee, alpha_j>`` so ``K_i E_j K_i^-1 = q_i^{a_ij} E_j``.
* Roots are integer vectors in the simple-root basis, weights are integer
  vectors in the fundamental-weight basis and coroots are integer vectors in
  the simple-coroot basis.  ``weight(h)`` is the plain dot product.
* A cover ``v ⊲ w`` is labeled by the positive root ``gamma`` with
  ``v * s_gamma = w`` (right multiplication by the reflection).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .lattice import TorusLattice

MAX_RANK = 4

CARTAN_TYPES = ("A1", "A2", "A3", "A4", "B2", "B3", "B4", "C2", "C3", "C4", "D4", "G2")


class RootSystemError(ValueError):
    pass


def cartan_matrix(name: str) -> np.ndarray:
    """Cartan matrix for a type string like ``"A2"`` or ``"B2"`` (Bourbaki labels)."""
    name = name.strip().upper()
    if len(name) < 2 or not name[1:].isdigit():
        raise RootSystemError(f"unknown Cartan type {name!r}")
    kind, n = name[0], int(name[1:])
    if n < 1:
        raise RootSystemError(f"unknown Cartan type {name!r}")
    A = 2 * np.eye(n, dtype=np.int64)
    for i in range(n - 1):
        A[i, i + 1] = A[i + 1, i] = -1
    if kind == "A":
        pass
    elif kind == "B" and n >= 2:
        A[n - 1, n - 2] = -2
    elif kind == "C" and n >= 2:
        A[n - 2, n - 1] = -2
    elif kind == "D" and n >= 4:
        A[n - 2, n - 1] = A[n - 1, n - 2] = 0
        A[n - 3, n - 1] = A[n - 1, n - 3] = -1
    elif kind == "G" and n == 2:
        A[0, 1] = -3
    else:
        raise RootSystemError(f"unknown Cartan type {name!r}")
    return A


def _symmetrizers(A: np.ndarray) -> np.ndarray:
    """Smallest positive integers d with ``d_i a_ij = d_j a_ji``."""
    from fractions import Fraction

    n = len(A)
    d: list[Fraction | None] = [None] * n
    for start in range(n):
        if d[start] is not None:
            continue
        d[start] = Fraction(1)
        stack = [start]
        while stack:
            i = stack.pop()
            for j in range(n):
                if i != j and A[i, j] != 0:
                    if A[j, i] == 0:
                        raise RootSystemError("Cartan matrix is not symmetrizable")
                    val = d[i] * int(A[i, j]) / int(A[j, i])
                    if d[j] is None:
                        d[j] = val
                        stack.append(j)
                    elif d[j] != val:
                        raise RootSystemError("Cartan matrix is not symmetrizable")
    # per connected component: scale to minimal integers
    out = np.zeros(n, dtype=np.int64)
    seen: set[int] = set()
    for start in range(n):
        if start in seen:
            continue
        comp, stack = {start}, [start]
        while stack:
            i = stack.pop()
            for j in range(n):
                if A[i, j] != 0 and j not in comp:
                    comp.add(j)
                    stack.append(j)
        seen |= comp
        lo = min(d[k] for k in comp)
        scaled = {k: d[k] / lo for k in comp}
        den = 1
        for v in scaled.values():
            den = np.lcm(den, v.denominator)
        for k in comp:
            out[k] = int(scaled[k] * den)
    return out


@dataclass(frozen=True, eq=False)
class RootSystem:
    cartan: np.ndarray
    name: str = ""

    def __post_init__(self):
        A = np.asarray(self.cartan, dtype=np.int64)
        object.__setattr__(self, "cartan", A)
        n = A.shape[0]
        if A.ndim != 2 or A.shape != (n, n) or n == 0:
            raise RootSystemError("Cartan matrix must be square and non-empty")
        if n > MAX_RANK:
            raise RootSystemError(f"rank {n} exceeds the supported maximum {MAX_RANK}")
        if not np.all(np.diag(A) == 2):
            raise RootSystemError("Cartan matrix must have 2 on the diagonal")
        off = A - np.diag(np.diag(A))
        if np.any(off > 0):
            raise RootSystemError("off-diagonal Cartan entries must be non-positive")
        if np.any((off == 0) != (off.T == 0)):
            raise RootSystemError("a_ij = 0 must imply a_ji = 0")
        d = _symmetrizers(A)
        sym = np.diag(d) @ A
        if not np.array_equal(sym, sym.T) or np.min(np.linalg.eigvalsh(sym.astype(float))) <= 1e-9:
            raise RootSystemError(f"Cartan matrix {A.tolist()} is not of finite type")
        object.__setattr__(self, "symmetrizers", d)

    symmetrizers: np.ndarray = field(init=False, repr=False)

    @classmethod
    def from_type(cls, name: str) -> "RootSystem":
        return cls(cartan_matrix(name), name=name.strip().upper())

    @property
    def rank(self) -> int:
        return self.cartan.shape[0]

    @cached_property
    def root_form(self) -> np.ndarray:
        """Invariant form on the root lattice, ``(alpha_i, alpha_j) = d_i a_ij``."""
        return np.diag(self.symmetrizers) @ self.cartan

    def simple_reflection_roots(self, i: int) -> np.ndarray:
        """Matrix of s_i on simple-root coordinates."""
        n = self.rank
        R = np.eye(n, dtype=np.int64)
        R[i, :] -= self.cartan[i, :]
        return R

    def simple_reflection_weights(self, i: int) -> np.ndarray:
        """Matrix of s_i on fundamental-weight coordinates."""
        n = self.rank
        M = np.eye(n, dtype=np.int64)
        M[:, i] -= self.cartan[:, i]
        return M

    @cached_property
    def positive_roots(self) -> tuple[tuple[int, ...], ...]:
        n = self.rank
        simple = [tuple(int(i == j) for j in range(n)) for i in range(n)]
        found = set(simple)
        frontier = list(simple)
        refl = [self.simple_reflection_roots(i) for i in range(n)]
        while frontier:
            nxt = []
            for r in frontier:
                for R in refl:
                    s = tuple(int(x) for x in R @ np.array(r))
                    if all(x >= 0 for x in s) and s not in found:
                        found.add(s)
                        nxt.append(s)
            frontier = nxt
        return tuple(sorted(found, key=lambda r: (sum(r), tuple(-x for x in r))))

    @cached_property
    def roots(self) -> tuple[tuple[int, ...], ...]:
        pos = self.positive_roots
        return pos + tuple(tuple(-x for x in r) for r in pos)

    def root_to_weight(self, root: Sequence[int]) -> np.ndarray:
        return self.cartan @ np.asarray(root, dtype=np.int64)

    def coroot(self, root: Sequence[int]) -> tuple[int, ...]:
        c = np.asarray(root, dtype=np.int64)
        norm2 = int(c @ self.root_form @ c)  # (alpha, alpha) = 2 d_alpha
        d_alpha = norm2 // 2
        vec = c * self.symmetrizers
        if np.any(vec % d_alpha):
            raise RootSystemError(f"coroot of {tuple(c)} is not integral")
        return tuple(int(x) for x in vec // d_alpha)

    @cached_property
    def rho(self) -> tuple[int, ...]:
        return (1,) * self.rank

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "cartan": self.cartan.tolist(),
            "symmetrizers": self.symmetrizers.tolist(),
            "positive_roots": [list(r) for r in self.positive_roots],
            "coroots": [list(self.coroot(r)) for r in self.positive_roots],
        }


@dataclass(frozen=True, eq=False)
class WeylElement:
    """Element of the Weyl group, identified by its action on the root list."""

    group: "WeylGroup" = field(repr=False)
    word: tuple[int, ...]
    root_action: tuple[int, ...] = field(repr=False)
    weight_matrix: np.ndarray = field(repr=False)
    root_matrix: np.ndarray = field(repr=False)

    @property
    def length(self) -> int:
        return len(self.word)

    @property
    def canonical_word(self) -> tuple[int, ...]:
        return self.word

    def __eq__(self, other):
        return isinstance(other, WeylElement) and self.root_action == other.root_action

    def __hash__(self):
        return hash(self.root_action)

    def __mul__(self, other: "WeylElement") -> "WeylElement":
        return self.group.element_from_root_matrix(self.root_matrix @ other.root_matrix)

    def inverse(self) -> "WeylElement":
        return self.group.element_from_root_matrix(np.rint(np.linalg.inv(self.root_matrix)).astype(np.int64))

    def act_weight(self, weight: Sequence[int]) -> tuple[int, ...]:
        return tuple(int(x) for x in self.weight_matrix @ np.asarray(weight, dtype=np.int64))

    def act_root(self, root: Sequence[int]) -> tuple[int, ...]:
        return tuple(int(x) for x in self.root_matrix @ np.asarray(root, dtype=np.int64))

    @property
    def label(self) -> str:
        return "e" if not self.word else "".join(f"s{i + 1}" for i in self.word)

    def __repr__(self):
        return f"WeylElement({self.label})"


def word_label(word: Sequence[int]) -> str:
    return "e" if not word else "".join(f"s{i + 1}" for i in word)


@dataclass(frozen=True, eq=False)
class BruhatPath:
    """Labeled maximal chain ``v = v_1 ⊲ v_2 ⊲ ... ⊲ v_{m+1} = w``."""

    vertices: tuple[WeylElement, ...]
    labels: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.labels)

    @property
    def start(self) -> WeylElement:
        return self.vertices[0]

    @property
    def end(self) -> WeylElement:
        return self.vertices[-1]

    def then(self, other: "BruhatPath") -> "BruhatPath":
        if self.end != other.start:
            raise ValueError("paths do not compose")
        return BruhatPath(self.vertices + other.vertices[1:], self.labels + other.labels)

    def key(self):
        return (tuple(v.word for v in self.vertices), self.labels)

    def to_json(self) -> dict:
        return {"vertices": [v.label for v in self.vertices], "labels": [list(g) for g in self.labels]}


class WeylGroup:
    """Finite Weyl group of a root system with Bruhat order machinery."""

    def __init__(self, rs: RootSystem):
        self.rs = rs
        n = rs.rank
        self._roots = rs.roots
        self._root_index = {r: k for k, r in enumerate(self._roots)}
        self._simple_R = [rs.simple_reflection_roots(i) for i in range(n)]
        self._simple_M = [rs.simple_reflection_weights(i) for i in range(n)]
        self._by_action: dict[tuple[int, ...], WeylElement] = {}
        identity = self._make((), np.eye(n, dtype=np.int64), np.eye(n, dtype=np.int64))
        level = [identity]
        elements = [identity]
        self._by_action[identity.root_action] = identity
        # BFS in shortlex order gives shortlex-minimal reduced words
        while level:
            nxt = []
            for u in level:
                for i in range(n):
                    R = u.root_matrix @ self._simple_R[i]
                    key = self._action_key(R)
                    if key in self._by_action:
                        continue
                    M = u.weight_matrix @ self._simple_M[i]
                    el = self._make(u.word + (i,), R, M)
                    self._by_action[key] = el
                    nxt.append(el)
            elements.extend(nxt)
            level = nxt
        self.elements: tuple[WeylElement, ...] = tuple(elements)
        self._index = {el: k for k, el in enumerate(self.elements)}
        self._down: dict[WeylElement, frozenset] = {}
        self._covers: dict[WeylElement, tuple] = {}
        self._reduced: dict[WeylElement, tuple] = {}

    # -- construction helpers --------------------------------------------
    def _action_key(self, R: np.ndarray) -> tuple[int, ...]:
        out = []
        for r in self._roots:
            img = tuple(int(x) for x in R @ np.array(r))
            out.append(self._root_index[img])
        return tuple(out)

    def _make(self, word, R, M) -> WeylElement:
        return WeylElement(self, tuple(word), self._action_key(R), M, R)

    def element_from_root_matrix(self, R: np.ndarray) -> WeylElement:
        return self._by_action[self._action_key(np.asarray(R, dtype=np.int64))]

    # -- basic API ---------------------------------------------------------
    @property
    def identity(self) -> WeylElement:
        return self.elements[0]

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self):
        return len(self.elements)

    def __iter__(self) -> Iterator[WeylElement]:
        return iter(self.elements)

    def index(self, w: WeylElement) -> int:
        return self._index[w]

    def simple(self, i: int) -> WeylElement:
        return self.from_word((i,))

    def from_word(self, word: Sequence[int]) -> WeylElement:
        R = np.eye(self.rs.rank, dtype=np.int64)
        for i in word:
            R = R @ self._simple_R[i]
        return self.element_from_root_matrix(R)

    def from_label(self, label: str) -> WeylElement:
        label = label.strip()
        if label in ("e", ""):
            return self.identity
        if label == "w0":
            return self.longest
        parts = [p for p in label.replace(" ", "").split("s") if p]
        return self.from_word([int(p) - 1 for p in parts])

    def is_reduced(self, word: Sequence[int]) -> bool:
        return self.from_word(word).length == len(word)

    def length(self, w: WeylElement) -> int:
        """Number of positive roots sent to negative roots."""
        neg = 0
        for r in self.rs.positive_roots:
            img = w.act_root(r)
            if any(x < 0 for x in img):
                neg += 1
        return neg

    @cached_property
    def longest(self) -> WeylElement:
        return max(self.elements, key=lambda w: w.length)

    def reflection(self, root: Sequence[int]) -> WeylElement:
        """The reflection s_gamma for a (positive) root gamma."""
        rs = self.rs
        c = np.asarray(root, dtype=np.int64)
        h = np.asarray(rs.coroot(root), dtype=np.int64)
        # s_gamma(beta) = beta - <gamma^vee, beta> gamma, with <gamma^vee, beta> = h . (A beta)
        R = np.eye(rs.rank, dtype=np.int64) - np.outer(c, h @ rs.cartan)
        return self.element_from_root_matrix(R)

    # -- reduced words -----------------------------------------------------
    def reduced_words(self, w: WeylElement) -> tuple[tuple[int, ...], ...]:
        if w in self._reduced:
            return self._reduced[w]
        if w.length == 0:
            out: tuple = ((),)
        else:
            words = set()
            for i in range(self.rs.rank):
                u = w * self.simple(i)
                if u.length < w.length:
                    for word in self.reduced_words(u):
                        words.add(word + (i,))
            out = tuple(sorted(words, key=lambda x: (len(x), x)))
        self._reduced[w] = out
        return out

    # -- Bruhat order --------------------------------------------------------
    def covers(self, w: WeylElement) -> tuple[tuple[WeylElement, tuple[int, ...]], ...]:
        """All (v, gamma) with v ⊲ w and v * s_gamma = w."""
        if w in self._covers:
            return self._covers[w]
        out = []
        for gamma in self.rs.positive_roots:
            v = w * self.reflection(gamma)
            if v.length == w.length - 1:
                out.append((v, gamma))
        out.sort(key=lambda p: (self.index(p[0]), p[1]))
        self._covers[w] = tuple(out)
        return self._covers[w]

    def down_set(self, w: WeylElement) -> frozenset:
        if w not in self._down:
            s = {w}
            for v, _ in self.covers(w):
                s |= self.down_set(v)
            self._down[w] = frozenset(s)
        return self._down[w]

    def bruhat_leq(self, v: WeylElement, w: WeylElement) -> bool:
        return v in self.down_set(w)

    def bruhat_matrix(self) -> np.ndarray:
        m = len(self.elements)
        B = np.zeros((m, m), dtype=np.int64)
        for j, w in enumerate(self.elements):
            for i, v in enumerate(self.elements):
                B[i, j] = int(self.bruhat_leq(v, w))
        return B

    # -- paths and tori ------------------------------------------------------
    def enumerate_paths(self, v: WeylElement, w: WeylElement) -> tuple[BruhatPath, ...]:
        if not self.bruhat_leq(v, w):
            return ()
        if v == w:
            return (BruhatPath((v,), ()),)
        out = []
        for u, gamma in self.covers(w):
            if self.bruhat_leq(v, u):
                for p in self.enumerate_paths(v, u):
                    out.append(BruhatPath(p.vertices + (w,), p.labels + (gamma,)))
        out.sort(key=lambda p: (tuple(self.index(x) for x in p.vertices), p.labels))
        return tuple(out)

    def torus_of_path(self, path: BruhatPath) -> TorusLattice:
        return TorusLattice.span([self.rs.coroot(g) for g in path.labels], self.rs.rank)

    def cover_torus(self, gamma: Sequence[int]) -> TorusLattice:
        return TorusLattice.span([self.rs.coroot(gamma)], self.rs.rank)

    def torus_union(self, v: WeylElement, w: WeylElement) -> tuple[TorusLattice, ...]:
        """Canonical sorted set {T_gamma : gamma a path v ~> w}."""
        return tuple(sorted({self.torus_of_path(p) for p in self.enumerate_paths(v, w)}))

    def torus_union_factored(self, v: WeylElement, w: WeylElement) -> tuple[TorusLattice, ...]:
        """The same set assembled as the union of T_v^r T_r^w over v <= r ⊲ w."""
        if v == w:
            return (TorusLattice(self.rs.rank),)
        out = set()
        for r, _ in self.covers(w):
            if not self.bruhat_leq(v, r):
                continue
            for L1 in self.torus_union(v, r):
                for L2 in self.torus_union(r, w):
                    out.add(L1 + L2)
        return tuple(sorted(out))

    # -- export --------------------------------------------------------------
    def tables(self, with_paths: bool = True) -> dict:
        els = self.elements
        data = {
            "root_system": self.rs.to_json(),
            "order": len(els),
            "elements": [{"label": w.label, "word": list(w.word), "length": w.length} for w in els],
            "bruhat_leq": self.bruhat_matrix().tolist(),
            "covers": [
                {"w": w.label, "v": v.label, "root": list(g)} for w in els for v, g in self.covers(w)
            ],
        }
        if with_paths:
            e = self.identity
            data["paths_from_identity"] = {
                w.label: [p.to_json() for p in self.enumerate_paths(e, w)] for w in els
            }
            data["torus_lattices"] = {
                w.label: [L.to_json() for L in self.torus_union(e, w)] for w in els
            }
        return data


def load_group(spec) -> WeylGroup:
    """Build a Weyl group from a type string or an explicit Cartan matrix."""
    if isinstance(spec, WeylGroup):
        return spec
    if isinstance(spec, RootSystem):
        return WeylGroup(spec)
    if isinstance(spec, str):
        return _cached_group(spec.strip().upper())
    return WeylGroup(RootSystem(np.asarray(spec, dtype=np.int64)))


_GROUPS: dict[str, WeylGroup] = {}


def _cached_group(name: str) -> WeylGroup:
    if name not in _GROUPS:
        _GROUPS[name] = WeylGroup(RootSystem.from_type(name))
    return _GROUPS[name]


def pairs(group: WeylGroup):
    return itertools.product(group.elements, repeat=2)
