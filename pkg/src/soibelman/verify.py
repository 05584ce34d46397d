"""Executable checks producing pass/fail/inconclusive records with residuals."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from . import fock
from .fock import CutoffError, TruncatedOperator, singular_values, spectral_norm
from .lattice import TorusLattice
from .qmodule import AlgebraElement, MatrixCoefficient, QModule, borel_submodule, build_module, coefficient, extremal_vector, upsilon
from .reps import (
    SoibelmanRep,
    boxtimes_characters,
    fundamental_coefficient,
    pullback_exponents,
    restrict_polynomial,
    tau,
)
from .weyl import WeylElement, WeylGroup, load_group

NONZERO = 0.01
ZERO = 1e-6

DEFAULT_TOLERANCES = {
    "nonzero": NONZERO,
    "zero": ZERO,
    "su2_relations": 1e-12,
    "su2_defect": 1e-12,
    "unitarity": 1e-10,
    "guard_doubling": 1e-12,
    "module_relations": 1e-10,
    "alignment": 1e-8,
    "untwist": 5e-2,
    "essential_rtol": 1e-3,
    "monotonicity": 1e-3,
    "lemma5": 1e-6,
    "words": 1e-7,
    "oracle": 1e-12,
    "refinement_low": 0.3,
    "refinement_high": 0.7,
    "exact": 1e-12,
}


@dataclass
class CheckReport:
    check_id: str
    inputs: dict
    residuals: dict
    threshold: float | dict
    verdict: str
    runtime: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def body(self) -> dict:
        """Deterministic part of the record (runtime excluded)."""
        return {
            "check_id": self.check_id,
            "inputs": self.inputs,
            "residuals": self.residuals,
            "threshold": self.threshold,
            "verdict": self.verdict,
            "details": self.details,
        }


def classify(value: float, nonzero: float = NONZERO, zero: float = ZERO) -> str:
    if value > nonzero:
        return "nonzero"
    if value < zero:
        return "zero"
    return "inconclusive"


def _timed(fn: Callable[..., CheckReport]) -> Callable[..., CheckReport]:
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        rep = fn(*args, **kwargs)
        rep.runtime = time.perf_counter() - t0
        return rep

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _verdict(ok: bool, inconclusive: bool = False) -> str:
    if inconclusive:
        return "inconclusive"
    return "pass" if ok else "fail"


def _r(x: float) -> float:
    """Round for reports so that rounding noise cannot break byte-identity."""
    return float(f"{x:.12g}")


def image_norm(op: TruncatedOperator) -> float:
    """Operator norm on the guard band (scalars for the trivial word)."""
    if op.factors == 0:
        return abs(complex(op.matrix[0, 0]))
    return op.guard_norm()


# -- sample elements -----------------------------------------------------------


@dataclass(frozen=True)
class Sample:
    label: str
    element: AlgebraElement


def fundamental_modules(group: WeylGroup, q: float) -> list[QModule]:
    n = group.rs.rank
    return [build_module(group.rs, q, tuple(int(i == j) for j in range(n))) for i in range(n)]


def sample_elements(group: WeylGroup, q: float, seed: int = 0, n_random: int = 10) -> list[Sample]:
    """All fundamental-module coefficients plus seeded random words of length ≤ 2."""
    mods = fundamental_modules(group, q)
    out = []
    for i, m in enumerate(mods):
        for a in range(m.dimension):
            for b in range(m.dimension):
                out.append(Sample(f"C^w{i + 1}[{a},{b}]", AlgebraElement.of(fundamental_coefficient(m, a, b))))
    rng = np.random.default_rng(seed)
    for r in range(n_random):
        length = int(rng.integers(1, 3))
        word, tags = [], []
        for _ in range(length):
            k = int(rng.integers(len(mods)))
            m = mods[k]
            eta = rng.normal(size=m.dimension) + 1j * rng.normal(size=m.dimension)
            xi = rng.normal(size=m.dimension) + 1j * rng.normal(size=m.dimension)
            star = bool(rng.integers(2))
            word.append((coefficient(m, eta / np.linalg.norm(eta), xi / np.linalg.norm(xi)), star))
            tags.append(f"w{k + 1}{'*' if star else ''}")
        out.append(Sample(f"rand{r}:" + ".".join(tags), AlgebraElement(((1.0, tuple(word)),))))
    return out


# -- SU_q(2) -------------------------------------------------------------------------


@_timed
def check_su2(q_values: Sequence[float] = (0.3, 0.5, 0.8), N: int = 32, tol: dict | None = None) -> CheckReport:
    """SU_q(2) relations, boundary defect, spin unitarity and guard doubling."""
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    res, details = {}, {}
    for q in q_values:
        rel = fock.su2_relation_residuals(q, N)
        res[f"relations@q={q}"] = _r(max(rel.values()))
        defect = fock.determinant_boundary_defect(q, N)
        res[f"defect_error@q={q}"] = _r(abs(defect - abs(1 - q ** (2 * N))))
        for two_l in (1, 2, 3):
            res[f"unitarity@q={q},2l={two_l}"] = _r(fock.unitarity_residual(q, two_l, N))
        # guard doubling: entries of the trusted block agree between N and 2N
        worst = 0.0
        for two_l in (1, 2):
            for m in range(two_l + 1):
                for n in range(two_l + 1):
                    A = fock.spin_coefficient_operator(q, two_l, m, n, N)
                    B = fock.spin_coefficient_operator(q, two_l, m, n, 2 * N)
                    idx = A.guard_indices()
                    diff = A.matrix[idx][:, idx] - B.matrix[idx][:, idx]
                    worst = max(worst, float(abs(diff).max()) if diff.nnz else 0.0)
        res[f"guard_doubling@q={q}"] = _r(worst)
        t11 = fock.pi_su2_generators(q, N)["t11"]
        ess = t11.essential_norm()
        details[f"t11_essential_norm@q={q}"] = {str(k): _r(v) for k, v in ess.by_k.items()}
        # the tail of S*C tops out at sqrt(1 - q^{2(N-2)}) below the cutoff
        bound = 1 - np.sqrt(1 - q ** (2 * (N - 2)))
        res[f"t11_symbol_gap@q={q}"] = _r(max(0.0, abs(ess.value - fock.symbol(["t11"]).sup_norm()) - bound))
    limits = {
        "relations": tol["su2_relations"],
        "defect_error": tol["su2_defect"],
        "unitarity": tol["unitarity"],
        "guard_doubling": tol["guard_doubling"],
        "t11_symbol_gap": 1e-10,
    }
    ok = all(v <= limits[k.split("@")[0]] for k, v in res.items())
    return CheckReport("su2", {"q_values": list(q_values), "N": N}, res, limits, _verdict(ok), details=details)


# -- modules -----------------------------------------------------------------------


@_timed
def check_module_relations(group, lams, q_values, tol: dict | None = None) -> CheckReport:
    from .qmodule import relation_residuals

    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    G = load_group(group)
    res = {}
    for lam in lams:
        for q in q_values:
            m = build_module(G.rs, q, lam)
            for fam, v in relation_residuals(m).items():
                key = f"{fam}@{tuple(lam)},q={q}"
                res[key] = _r(v)
    ok = all(v <= tol["module_relations"] for v in res.values())
    return CheckReport(
        "module_relations",
        {"group": G.rs.name, "lambdas": [list(l) for l in lams], "q_values": list(q_values)},
        res,
        tol["module_relations"],
        _verdict(ok),
    )


# -- vacuum alignment ------------------------------------------------------------------


def _top_two_singular(X: sp.csr_matrix, e0: int):
    """(σ1, σ2, |<v1, e0>|) where v1 is the top right singular vector."""
    best = []
    for rows, cols, B in fock.block_arrays(X):
        U, s, Vh = np.linalg.svd(B)
        for k, val in enumerate(s):
            best.append((val, rows, cols, Vh[k] if k < Vh.shape[0] else None))
    best.sort(key=lambda t: -t[0])
    s1, _, cols1, v1 = best[0]
    s2 = best[1][0] if len(best) > 1 else 0.0
    align = 0.0
    if v1 is not None and e0 in cols1:
        align = abs(v1[list(cols1).index(e0)])
    return s1, s2, align


@_timed
def check_lemma2(group, lam, w: WeylElement | Sequence[int], q: float, N: int, ks=(4, 8, 12), tol=None) -> CheckReport:
    """π_w(C_{w·λ,λ}): contractive, compact (tail decay), e_0 top eigenvector with a gap."""
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    G = load_group(group)
    w = w if isinstance(w, WeylElement) else G.from_word(w)
    m = build_module(G.rs, q, lam)
    f = coefficient(m, extremal_vector(m, w), extremal_vector(m, G.identity))
    inputs = {"group": G.rs.name, "lambda": list(lam), "w": w.label, "q": q, "N": N}
    rep = SoibelmanRep(G, w.word, N)
    X = rep(f)
    if X.factors == 0:
        val = abs(complex(X.matrix[0, 0]))
        res = {"scalar_error": _r(abs(val - 1.0))}
        return CheckReport("lemma2", inputs, res, tol["alignment"], _verdict(res["scalar_error"] < tol["alignment"]))
    try:
        idx = X.guard_indices()
        tails = {k: X.tail_norm(k) for k in ks}
    except CutoffError as exc:
        return CheckReport("lemma2", inputs, {}, tol["alignment"], "inconclusive", details={"reason": str(exc)})
    B = X.matrix[idx][:, idx]
    e0 = 0  # vacuum is flat index 0 in every guard block
    s1, s2, align = _top_two_singular(B, e0)
    v = np.zeros(B.shape[0], dtype=complex)
    v[e0] = 1
    Xe = B @ v
    c = Xe[e0]
    eig_resid = float(np.linalg.norm(Xe - c * v)) + abs(abs(c) - 1.0)
    svals = singular_values(B)
    res = {
        "contractivity_excess": _r(max(0.0, s1 - 1.0)),
        "alignment": _r(abs(align - 1.0)),
        "eigen_residual": _r(eig_resid),
        "spectral_gap": _r(s1 - s2),
        "min_singular_value": _r(float(svals[-1])),
    }
    tail_list = [tails[k] for k in ks]
    decreasing = all(a > b for a, b in zip(tail_list, tail_list[1:]))
    res["tail_decay_slope"] = _r(float(np.polyfit(list(ks), np.log(np.maximum(tail_list, 1e-300)), 1)[0]))
    ok = (
        res["contractivity_excess"] <= 1e-10
        and res["alignment"] < tol["alignment"]
        and res["eigen_residual"] < tol["alignment"]
        and res["spectral_gap"] > 0
        and decreasing
    )
    details = {"tail_norms": {str(k): _r(v) for k, v in tails.items()}, "tails_strictly_decreasing": decreasing}
    return CheckReport("lemma2", inputs, res, tol["alignment"], _verdict(ok), details=details)


@_timed
def check_lemma2_orthogonal(group, lam, w, q, N, tol=None) -> CheckReport:
    """ζ ⊥ U_q(b)V(w·λ) ⇒ π_w(C_{ζ,λ}) = 0."""
    G = load_group(group)
    w = w if isinstance(w, WeylElement) else G.from_word(w)
    m = build_module(G.rs, q, lam)
    Q = borel_submodule(m, w)
    comp = np.eye(m.dimension) - Q @ Q.conj().T
    rep = SoibelmanRep(G, w.word, N)
    lam_vec = extremal_vector(m, G.identity)
    worst = 0.0
    U, s, _ = np.linalg.svd(comp)
    for k in np.flatnonzero(s > 0.5):
        worst = max(worst, image_norm(rep(coefficient(m, U[:, k], lam_vec))))
    res = {"max_norm": _r(worst)}
    return CheckReport(
        "lemma2_orthogonal",
        {"group": G.rs.name, "lambda": list(lam), "w": w.label, "q": q, "N": N},
        res,
        1e-8,
        _verdict(worst < 1e-8),
    )


# -- Υ support table ------------------------------------------------------


def default_cutoff(group: WeylGroup, lam) -> int:
    """Cutoff leaving a trusted block of at least 6 after Υ doubles the guard."""
    m = max(lam) if len(lam) else 1
    top = max(int(sum(lam)) * 2, 2 * m)
    return max(12, 2 * top + 6)


@_timed
def check_upsilon_support(group, lam, q: float, N: int | None = None, tol=None) -> CheckReport:
    """‖π_v(Υ_w)‖ is nonzero exactly when v ≥ w."""
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    G = load_group(group)
    N = N or default_cutoff(G, lam)
    m = build_module(G.rs, q, lam)
    reps = {v: SoibelmanRep(G, v.word, N) for v in G}
    n = G.order
    table = np.zeros((n, n))
    status = []
    inconclusive = False
    mismatches = []
    for j, w in enumerate(G):
        U = upsilon(m, w)
        for i, v in enumerate(G):
            try:
                val = image_norm(reps[v](U))
            except CutoffError:
                val = float("nan")
            table[i, j] = val
            cls = classify(val, tol["nonzero"], tol["zero"]) if np.isfinite(val) else "inconclusive"
            status.append(cls)
            if cls == "inconclusive":
                inconclusive = True
            elif (cls == "nonzero") != G.bruhat_leq(w, v):
                mismatches.append([v.label, w.label])
    nonzero_vals = table[table > tol["nonzero"]]
    zero_vals = table[table < tol["zero"]]
    res = {
        "mismatches": len(mismatches),
        "min_nonzero": _r(float(nonzero_vals.min()) if nonzero_vals.size else 0.0),
        "max_zero": _r(float(zero_vals.max()) if zero_vals.size else 0.0),
        "middle_band_count": int(sum(s == "inconclusive" for s in status)),
    }
    details = {
        "elements": [g.label for g in G],
        "norm_table_rows_v_cols_w": [[_r(x) for x in row] for row in table],
        "mismatched_pairs": mismatches,
    }
    return CheckReport(
        "upsilon_support",
        {"group": G.rs.name, "lambda": list(lam), "q": q, "N": N},
        res,
        {"nonzero": tol["nonzero"], "zero": tol["zero"]},
        _verdict(not mismatches, inconclusive and not mismatches),
        details=details,
    )


# -- untwisting ------------------------------------------------------------------


def boundary_norm(G: WeylGroup, x, w: WeylElement, N: int, points: int = 64, reps: dict | None = None) -> float:
    """max_{v⊲w} ‖(π_v ⊠ χ_v^w)(x)‖."""
    best = 0.0
    for v, _ in G.covers(w):
        rep = reps.get(v) if reps is not None else None
        if rep is None:
            rep = SoibelmanRep(G, v.word, N)
            if reps is not None:
                reps[v] = rep
        for L in G.torus_union(v, w):
            best = max(best, rep.boxtimes_character(x, L).sup_norm(points))
    return best


@_timed
def check_untwist(group, w, q: float, N: int, samples: Sequence[Sample] | None = None, N2: int | None = None,
                  seed: int = 0, points: int = 64, tol=None) -> CheckReport:
    """|essnorm(π_w(x)) - max_{v⊲w} ‖(π_v ⊠ χ_v^w)(x)‖| small and shrinking with the cutoff."""
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    G = load_group(group)
    w = w if isinstance(w, WeylElement) else G.from_word(w)
    if w == G.identity:
        raise ValueError("untwisting needs w ≠ e")
    samples = samples if samples is not None else sample_elements(G, q, seed)
    N2 = N2 or 2 * N
    per_cutoff = {}
    convergence = {}
    unstable = False
    for cutoff in (N, N2):
        rep = SoibelmanRep(G, w.word, cutoff)
        reps: dict = {}
        rows = {}
        for s in samples:
            X = rep(s.element)
            try:
                ess = X.essential_norm(rtol=tol["essential_rtol"])
            except CutoffError:
                unstable = True
                continue
            rhs = boundary_norm(G, s.element, w, cutoff, points, reps)
            rows[s.label] = _r(abs(ess.value - rhs))
            convergence[f"{s.label}@N={cutoff}"] = {"lhs": _r(ess.value), "rhs": _r(rhs), "tail_by_k": {str(k): _r(v) for k, v in ess.by_k.items()}}
        per_cutoff[cutoff] = rows
    r1 = max(per_cutoff[N].values(), default=0.0)
    r2 = max(per_cutoff[N2].values(), default=0.0)
    res = {f"max_residual@N={N}": r1, f"max_residual@N={N2}": r2}
    ok = r1 < tol["untwist"] and r2 < r1
    return CheckReport(
        "untwist",
        {"group": G.rs.name, "w": w.label, "q": q, "N": [N, N2], "samples": [s.label for s in samples]},
        res,
        tol["untwist"],
        _verdict(ok, unstable),
        details={"residuals": {str(k): v for k, v in per_cutoff.items()}, "convergence": convergence,
                 "essential_norm_relative_error_bound": tol["essential_rtol"] / 2},
    )


# -- boundary separation -----------------------------------------------------------


@_timed
def check_boundary_inclusion(group, lam, S: Sequence, q: float, N: int, seed: int = 0, tol=None) -> CheckReport:
    """(π_v ⊠ χ_v)(Υ_v) ≠ 0 and (π_w ⊠ χ_w)(Υ_v) = 0 for distinct v, w of one length."""
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    G = load_group(group)
    S = [s if isinstance(s, WeylElement) else G.from_word(s) for s in S]
    if len({s.length for s in S}) > 1:
        raise ValueError("boundary sets must consist of elements of one length")
    m = build_module(G.rs, q, lam)
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0, 2 * np.pi, size=G.rs.rank)
    table = np.zeros((len(S), len(S)))
    for j, v in enumerate(S):
        U = upsilon(m, v)
        for i, w in enumerate(S):
            rep = SoibelmanRep(G, w.word, N)
            table[i, j] = image_norm(rep.boxtimes_point(U, theta))
    diag = np.diag(table)
    off = table[~np.eye(len(S), dtype=bool)]
    res = {"min_diagonal": _r(float(diag.min())), "max_off_diagonal": _r(float(off.max()) if off.size else 0.0)}
    ok = res["min_diagonal"] > tol["nonzero"] and res["max_off_diagonal"] < tol["zero"]
    band = any(classify(x, tol["nonzero"], tol["zero"]) == "inconclusive" for x in table.ravel())
    return CheckReport(
        "boundary_inclusion",
        {"group": G.rs.name, "lambda": list(lam), "S": [s.label for s in S], "q": q, "N": N},
        res,
        {"nonzero": tol["nonzero"], "zero": tol["zero"]},
        _verdict(ok, band and not ok),
        details={"table_rows_w_cols_v": [[_r(x) for x in row] for row in table]},
    )


# -- q-continuity ------------------------------------------------------------------


def _image_at(G: WeylGroup, lam, word, labels, q: float, N: int) -> TruncatedOperator:
    m = build_module(G.rs, q, lam)
    return SoibelmanRep(G, word, N)(fundamental_coefficient(m, *labels))


def _scan(G, lam, word, labels, grid, N):
    ops = [_image_at(G, lam, word, labels, q, N) for q in grid]
    return [image_norm(b - a) if a.factors else abs(complex((b - a).matrix[0, 0])) for a, b in zip(ops, ops[1:])]


@_timed
def continuity_scan(group, lam, w, labels=(0, 0), q_grid: Sequence[float] | None = None, N: int = 12,
                    refine: bool = True, tol=None) -> CheckReport:
    """Variation of q ↦ π_w^q(C_{e_a,e_b}) along a grid, with a refinement ratio.

    The labels fix basis vectors of the weight basis; this family stands in
    for the co-algebra maps of the continuity lemma.
    """
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    G = load_group(group)
    word = tuple(w.word) if isinstance(w, WeylElement) else tuple(w)
    grid = list(q_grid) if q_grid is not None else [round(0.2 + 0.05 * k, 10) for k in range(13)]
    if len(grid) < 3:
        raise ValueError("continuity scans need at least three grid points")
    diffs = _scan(G, lam, word, labels, grid, N)
    res = {"max_step_difference": _r(max(diffs))}
    details = {"grid": grid, "step_differences": [_r(d) for d in diffs],
               "interpretation": "fixed weight-basis labels stand in for the co-algebra maps"}
    ok = all(np.isfinite(diffs))
    if refine:
        fine = sorted({round(x, 12) for x in grid} | {round((a + b) / 2, 12) for a, b in zip(grid, grid[1:])})
        fdiffs = _scan(G, lam, word, labels, fine, N)
        coarse_max = max(diffs)
        ratio = max(fdiffs) / coarse_max if coarse_max > 0 else 0.0
        res["refinement_ratio"] = _r(ratio)
        details["fine_step_differences"] = [_r(d) for d in fdiffs]
        if coarse_max > 0:
            ok = ok and tol["refinement_low"] <= ratio <= tol["refinement_high"]
    if tuple(G.rs.cartan.shape) == (1, 1) and tuple(labels) == (0, 0) and word == (0,):
        oracle = [
            max(abs(np.sqrt(1 - a ** (2 * n)) - np.sqrt(1 - b ** (2 * n))) for n in range(N))
            for a, b in zip(grid, grid[1:])
        ]
        res["oracle_error"] = _r(max(abs(d - o) for d, o in zip(diffs, oracle)))
        ok = ok and res["oracle_error"] < tol["oracle"]
    return CheckReport(
        "continuity",
        {"group": G.rs.name, "lambda": list(lam), "word": list(word), "labels": list(labels), "N": N},
        res,
        {"ratio": [tol["refinement_low"], tol["refinement_high"]], "oracle": tol["oracle"]},
        _verdict(ok),
        details=details,
    )


# -- torus algebra ---------------------------------------------------------------


@_timed
def check_torus_algebra(group, q: float = 0.5, seed: int = 0, n_random: int = 10, tol=None) -> CheckReport:
    """Cover-torus product and sum identities, cancellation of composed cover characters, and restriction/multiplication compatibility."""
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    G = load_group(group)
    mult_fail = gamma_fail = cancel_fail = 0
    mult_count = gamma_count = cancel_count = 0
    for v in G:
        for w in G:
            if G.bruhat_leq(v, w) and v != w:
                mult_count += 1
                mult_fail += G.torus_union_factored(v, w) != G.torus_union(v, w)
    for w in G:
        for r, alpha in G.covers(w):
            for v in G:
                for p in G.enumerate_paths(v, r):
                    gamma_count += 1
                    composed = TorusLattice.span(
                        [G.rs.coroot(g) for g in p.labels + (alpha,)], G.rs.rank
                    )
                    gamma_fail += composed != G.torus_of_path(p) + G.cover_torus(alpha)
    samples = sample_elements(G, q, seed, n_random)
    cancel_err = 0.0
    for w in G:
        for r, g2 in G.covers(w):
            for v, g1 in G.covers(r):
                L1, L2 = G.cover_torus(g1), G.cover_torus(g2)
                L = L1 + L2
                for s in samples:
                    cancel_count += 1
                    direct = boxtimes_characters(s.element, L1, L2)
                    pulled = pullback_exponents(restrict_polynomial(tau(s.element), L), L, L1, L2)
                    err = max((abs(c) for c in (direct - pulled).terms.values()), default=0.0)
                    same_support = set(direct.terms) == set(pulled.terms)
                    cancel_err = max(cancel_err, err)
                    cancel_fail += (err > tol["exact"]) or not same_support
    rng = np.random.default_rng(seed + 1)
    compat_err = 0.0
    lattices = sorted({L for v in G for w in G if G.bruhat_leq(v, w) for L in G.torus_union(v, w)})
    for _ in range(n_random):
        a, b = rng.choice(len(samples), size=2)
        x, y = samples[a].element, samples[b].element
        for L in lattices:
            lhs = restrict_polynomial(tau(x * y), L)
            rhs = restrict_polynomial(tau(x), L) * restrict_polynomial(tau(y), L)
            compat_err = max(compat_err, max((abs(c) for c in (lhs - rhs).terms.values()), default=0.0))
    res = {
        "mult_failures": int(mult_fail),
        "gamma1_failures": int(gamma_fail),
        "cancel_failures": int(cancel_fail),
        "cancel_max_error": _r(cancel_err),
        "restriction_compat_error": _r(compat_err),
    }
    ok = mult_fail == gamma_fail == cancel_fail == 0 and compat_err < tol["exact"]
    return CheckReport(
        "torus",
        {"group": G.rs.name, "q": q, "seed": seed},
        res,
        tol["exact"],
        _verdict(ok),
        details={"mult_triples": mult_count, "gamma1_cases": gamma_count, "cancel_cases": cancel_count},
    )


# -- τ_q checks --------------------------------------------------------------------


@_timed
def check_tau(group, q: float = 0.5, seed: int = 0, n_pairs: int = 20, tol=None) -> CheckReport:
    """τ_q(C^{ω_i}_{ω_i,ω_i}) = z_i and ev_t ∘ τ_q = χ_t on random (element, t)."""
    from .reps import chi_t

    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    G = load_group(group)
    n = G.rs.rank
    mods = fundamental_modules(G, q)
    gen_fail = 0
    for i, m in enumerate(mods):
        p = tau(fundamental_coefficient(m, 0, 0))
        expect = {tuple(int(i == j) for j in range(n)): 1.0}
        gen_fail += set(p.terms) != set(expect) or abs(p.terms.get(tuple(expect)[0], 0) - 1) > 0
    samples = sample_elements(G, q, seed)
    rng = np.random.default_rng(seed + 7)
    err = 0.0
    for _ in range(n_pairs):
        s = samples[int(rng.integers(len(samples)))]
        theta = rng.uniform(0, 2 * np.pi, size=n)
        err = max(err, abs(tau(s.element).evaluate(theta) - chi_t(s.element, theta)))
    res = {"generator_failures": int(gen_fail), "evaluation_error": _r(err)}
    ok = gen_fail == 0 and err < tol["exact"]
    return CheckReport("tau", {"group": G.rs.name, "q": q, "seed": seed}, res, tol["exact"], _verdict(ok))


# -- norm monotonicity -------------------------------------------------------------


@_timed
def check_norm_monotonicity(group, q: float, N: int, samples=None, seed: int = 0, tol=None) -> CheckReport:
    """‖π_r(x)‖ ≤ ‖π_σ(x)‖ + slack for r ≤ σ."""
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    G = load_group(group)
    samples = samples if samples is not None else sample_elements(G, q, seed)
    norms = {}
    for v in G:
        rep = SoibelmanRep(G, v.word, N)
        for s in samples:
            norms[(v, s.label)] = image_norm(rep(s.element))
    worst, violations = -np.inf, []
    for r in G:
        for sigma in G:
            if G.bruhat_leq(r, sigma) and r != sigma:
                for s in samples:
                    excess = norms[(r, s.label)] - norms[(sigma, s.label)]
                    worst = max(worst, excess)
                    if excess > tol["monotonicity"]:
                        violations.append([r.label, sigma.label, s.label, _r(excess)])
    res = {"max_excess": _r(worst), "violations": len(violations)}
    return CheckReport(
        "monotonicity",
        {"group": G.rs.name, "q": q, "N": N, "samples": [s.label for s in samples]},
        res,
        tol["monotonicity"],
        _verdict(not violations),
        details={"violations": violations[:50]},
    )


# -- vacuum projection from Υ powers ------------------------------------------------------------


@_timed
def check_lemma5(group, lam, w, q: float, N: int, max_power: int = 4096, tol=None) -> CheckReport:
    """Build p_0 ⊗ τ_q(C_{λ,λ}) from Υ_w powers and the image of C_{w·λ,λ}."""
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    G = load_group(group)
    w = w if isinstance(w, WeylElement) else G.from_word(w)
    m = build_module(G.rs, q, lam)
    rep = SoibelmanRep(G, w.word, N)
    Y = rep(upsilon(m, w))
    X = rep(coefficient(m, extremal_vector(m, w), extremal_vector(m, G.identity)))
    inputs = {"group": G.rs.name, "lambda": list(lam), "w": w.label, "q": q, "N": N}
    if X.factors == 0:
        return CheckReport("lemma5", inputs, {"error": 0.0}, tol["lemma5"], "pass")
    idx = Y.guard_indices()
    Yb = Y.matrix[idx][:, idx]
    Xb = X.matrix[idx][:, idx]
    p0 = sp.csr_matrix(([1.0], ([0], [0])), shape=Yb.shape)
    P, k = Yb.copy(), 1
    while k < max_power and spectral_norm(P - p0) > tol["lemma5"] / 4:
        P = P @ P
        k *= 2
    Z = P @ Xb @ P
    c = complex(Z[0, 0])
    err = spectral_norm(Z / c - p0) if abs(c) > 0 else float("inf")
    res = {"error": _r(err), "power": k, "scalar_modulus": _r(abs(c))}
    weights = tau(AlgebraElement.of(coefficient(m, extremal_vector(m, G.identity), extremal_vector(m, G.identity))))
    return CheckReport(
        "lemma5",
        inputs,
        res,
        tol["lemma5"],
        _verdict(err < tol["lemma5"] and abs(c) > tol["nonzero"]),
        details={"torus_factor": weights.to_json()},
    )


# -- reduced-word independence ------------------------------------------------------


def _bulk_values(X: TruncatedOperator, margin: int) -> np.ndarray:
    """Distinct singular values whose singular vectors avoid the outer ``margin`` layers."""
    M = X.matrix
    limit = X.cutoff - margin
    inner = np.all(X.multi_indices() < limit, axis=1)
    vals = []
    for rows, cols, B in fock.block_arrays(M):
        U, s, Vh = np.linalg.svd(B, full_matrices=False)
        wl = (np.abs(U) ** 2)[inner[rows]].sum(0)
        wr = (np.abs(Vh) ** 2)[:, inner[cols]].sum(1)
        vals.extend(s[(wl > 1 - 1e-12) & (wr > 1 - 1e-12)])
    vals = np.sort(vals)
    out: list[float] = []
    for x in vals:
        if not out or x - out[-1] > 1e-9:
            out.append(float(x))
    return np.array(out)


@_timed
def check_reduced_words(group, w, lam, q: float, N: int, tol=None) -> CheckReport:
    """Sorted singular values of π_w(C) for two reduced words of w."""
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    G = load_group(group)
    w = w if isinstance(w, WeylElement) else G.from_word(w)
    words = G.reduced_words(w)
    if len(words) < 2:
        raise ValueError(f"{w.label} has a single reduced word")
    m = build_module(G.rs, q, lam)
    r1, r2 = SoibelmanRep(G, words[0], N), SoibelmanRep(G, words[1], N)
    res, details = {}, {}
    for a in range(m.dimension):
        for b in range(m.dimension):
            c = fundamental_coefficient(m, a, b)
            X1, X2 = r1(c), r2(c)
            s1, s2 = singular_values(X1.guard_block(max(0, X2.guard - X1.guard))), singular_values(
                X2.guard_block(max(0, X1.guard - X2.guard))
            )
            res[f"[{a},{b}]"] = _r(float(np.max(np.abs(s1 - s2))))
            margin = max(X1.guard, X2.guard) + 3
            b1, b2 = _bulk_values(X1, margin), _bulk_values(X2, margin)
            small, big = (b1, b2) if len(b1) <= len(b2) else (b2, b1)
            matched = sum(bool(big.size) and float(np.min(np.abs(big - x))) < tol["words"] for x in small)
            details[f"[{a},{b}]"] = {"bulk_values": [len(b1), len(b2)], "bulk_matched": int(matched)}
    worst = max(res.values())
    return CheckReport(
        "reduced_words",
        {"group": G.rs.name, "w": w.label, "words": [list(x) for x in words[:2]], "lambda": list(lam), "q": q, "N": N},
        {"max_sorted_sv_difference": worst, **res},
        tol["words"],
        _verdict(worst < tol["words"]),
        details=details,
    )


# -- ladder composition ------------------------------------------------------------


@_timed
def check_ladder(group, q: float = 0.5, seed: int = 0, max_steps: int = 3, tol=None) -> CheckReport:
    """Iterated cover characters along a path equal the path character pulled back."""
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    G = load_group(group)
    samples = sample_elements(G, q, seed)
    err, failures, cases = 0.0, 0, 0
    for w in G:
        for v in G:
            steps = w.length - v.length
            if not (2 <= steps <= max_steps) or not G.bruhat_leq(v, w):
                continue
            for p in G.enumerate_paths(v, w):
                legs = [G.cover_torus(g) for g in p.labels]
                L = G.torus_of_path(p)
                for s in samples:
                    cases += 1
                    chained = boxtimes_characters(s.element, *legs)
                    direct = pullback_exponents(restrict_polynomial(tau(s.element), L), L, *legs)
                    diff = max((abs(c) for c in (chained - direct).terms.values()), default=0.0)
                    err = max(err, diff)
                    failures += diff > tol["exact"]
    res = {"failures": int(failures), "max_error": _r(err)}
    return CheckReport(
        "ladder",
        {"group": G.rs.name, "q": q, "seed": seed, "max_steps": max_steps},
        res,
        tol["exact"],
        _verdict(failures == 0),
        details={"cases": cases},
    )


# -- irreducibility heuristic -------------------------------------------------------


@_timed
def check_commutant(group, w, q: float, N: int = 3, theta: Sequence[float] | None = None) -> CheckReport:
    """Commutant dimension of the truncated images of all fundamental coefficients (heuristic)."""
    from .reps import commutant_dimension

    G = load_group(group)
    w = w if isinstance(w, WeylElement) else G.from_word(w)
    theta = np.zeros(G.rs.rank) if theta is None else np.asarray(theta, dtype=float)
    rep = SoibelmanRep(G, w.word, N)
    ops = []
    for m in fundamental_modules(G, q):
        for a in range(m.dimension):
            for b in range(m.dimension):
                ops.append(rep.boxtimes_point(fundamental_coefficient(m, a, b), theta))
    dim = commutant_dimension(ops)
    return CheckReport(
        "commutant",
        {"group": G.rs.name, "w": w.label, "q": q, "N": N, "theta": [_r(t) for t in theta]},
        {"commutant_dimension": dim},
        1,
        _verdict(dim == 1),
        details={"heuristic": True},
    )


# -- job registry ------------------------------------------------------------------

SELECTORS = (
    "su2", "lemma2", "upsilon", "untwist", "boundary", "torus", "continuity",
    "ladder", "lemma5", "words", "monotonicity", "commutant",
)


@dataclass(frozen=True)
class Job:
    check_id: str
    fn: Callable[..., CheckReport]
    kwargs: dict

    def run(self) -> CheckReport:
        return self.fn(**self.kwargs)


def _rho(G: WeylGroup) -> tuple[int, ...]:
    return tuple([1] * G.rs.rank)


def plan_jobs(selector: str, group: str, q: float, cutoff: int, seed: int, tolerances: dict) -> list[Job]:
    """Expand a selector into verifier jobs with the documented default parameters."""
    if selector != "all" and selector not in SELECTORS:
        raise ValueError(f"unknown check selector {selector!r}")
    chosen = SELECTORS if selector == "all" else (selector,)
    G = load_group(group)
    rho = _rho(G)
    w0 = G.longest
    tol = dict(tolerances)
    jobs: list[Job] = []
    for sel in chosen:
        if sel == "su2":
            jobs.append(Job("su2", check_su2, {"q_values": (q,), "N": max(cutoff, 32), "tol": tol}))
        elif sel == "lemma2":
            for w in G:
                jobs.append(Job(f"lemma2:{w.label}", check_lemma2,
                                {"group": group, "lam": rho, "w": w.word, "q": q, "N": max(cutoff, 16), "tol": tol}))
        elif sel == "upsilon":
            jobs.append(Job("upsilon", check_upsilon_support, {"group": group, "lam": rho, "q": q, "tol": tol}))
        elif sel == "untwist":
            for w in G:
                if w != G.identity:
                    jobs.append(Job(f"untwist:{w.label}", check_untwist,
                                    {"group": group, "w": w.word, "q": q, "N": cutoff, "seed": seed, "tol": tol}))
        elif sel == "boundary":
            for length in range(1, w0.length):
                S = [g.word for g in G if g.length == length]
                jobs.append(Job(f"boundary:len{length}", check_boundary_inclusion,
                                {"group": group, "lam": rho, "S": S, "q": q, "N": cutoff, "seed": seed, "tol": tol}))
        elif sel == "torus":
            jobs.append(Job("torus", check_torus_algebra, {"group": group, "q": q, "seed": seed, "tol": tol}))
            jobs.append(Job("tau", check_tau, {"group": group, "q": q, "seed": seed, "tol": tol}))
        elif sel == "continuity":
            lam = tuple(int(i == 0) for i in range(G.rs.rank))
            jobs.append(Job("continuity", continuity_scan,
                            {"group": group, "lam": lam, "w": w0.word, "N": min(cutoff, 10), "tol": tol}))
        elif sel == "ladder":
            jobs.append(Job("ladder", check_ladder, {"group": group, "q": q, "seed": seed, "tol": tol}))
        elif sel == "lemma5":
            for w in G:
                jobs.append(Job(f"lemma5:{w.label}", check_lemma5,
                                {"group": group, "lam": rho, "w": w.word, "q": q, "N": max(cutoff, 16), "tol": tol}))
        elif sel == "words":
            lam = tuple(int(i == 0) for i in range(G.rs.rank))
            jobs.append(Job("words", check_reduced_words,
                            {"group": group, "w": w0.word, "lam": lam, "q": q, "N": cutoff, "tol": tol}))
        elif sel == "monotonicity":
            jobs.append(Job("monotonicity", check_norm_monotonicity,
                            {"group": group, "q": q, "N": cutoff, "seed": seed, "tol": tol}))
        elif sel == "commutant":
            jobs.append(Job(f"commutant:{w0.label}", check_commutant, {"group": group, "w": w0.word, "q": q}))
    return jobs


def run_jobs(jobs: Sequence[Job], workers: int = 1) -> list[CheckReport]:
    """Run jobs (optionally in worker processes); results ordered by check_id."""
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(Job.run, jobs))
    else:
        reports = [j.run() for j in jobs]
    for j, r in zip(jobs, reports):
        r.check_id = j.check_id
    return sorted(reports, key=lambda r: r.check_id)


def overall_exit(reports: Sequence[CheckReport]) -> int:
    """0 all pass, 1 any fail, 2 otherwise inconclusive."""
    verdicts = {r.verdict for r in reports}
    if "fail" in verdicts:
        return 1
    if "inconclusive" in verdicts:
        return 2
    return 0
