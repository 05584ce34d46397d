"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Tolerances are pinned here rather than read from the library defaults, so a
change to the defaults cannot silently relax a criterion.  Run with
``pytest tests/test_acceptance.py -v`` or directly as a script.
"""

import json
import sys
import time

import pytest

from oracles import freudenthal, subword_leq
from soibelman import cli, report
from soibelman.qmodule import build_module
from soibelman.verify import (
    check_lemma2,
    check_module_relations,
    check_norm_monotonicity,
    check_reduced_words,
    check_su2,
    check_tau,
    check_torus_algebra,
    check_untwist,
    check_upsilon_support,
    continuity_scan,
)
from soibelman.weyl import load_group

PINNED = {
    "su2_relations": 1e-12,
    "su2_defect": 1e-12,
    "module_relations": 1e-10,
    "nonzero": 1e-2,
    "zero": 1e-6,
    "alignment": 1e-8,
    "exact": 1e-12,
    "words": 1e-7,
    "untwist": 5e-2,
    "essential_rtol": 1e-3,
    "monotonicity": 1e-3,
    "oracle": 1e-12,
    "refinement_low": 0.3,
    "refinement_high": 0.7,
}
QS = (0.3, 0.5, 0.8)


@pytest.fixture
def emit(capsys):
    def _emit(n: int, ok: bool, text: str) -> None:
        # outside capture so every criterion line reaches the log
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {text}", flush=True)

    return _emit


def _clock():
    t = time.perf_counter()
    return lambda: time.perf_counter() - t


def test_c01_su2_relations(emit):
    elapsed = _clock()
    r = check_su2(q_values=QS, N=32, tol=PINNED)
    t = elapsed()
    ok = r.verdict == "pass" and t < 5
    worst = max(v for k, v in r.residuals.items() if "gap" not in k)
    emit(1, ok, f"SU_q(2) relations and defect, worst residual {worst:.2e} (tol 1e-12), {t:.1f}s (< 5s)")
    assert ok, r.residuals


def test_c02_module_relations(emit):
    elapsed = _clock()
    G = load_group("A2")
    lams = [(1, 0), (0, 1), (1, 1)]
    r = check_module_relations("A2", lams, QS, tol=PINNED)
    mult_ok = all(build_module(G.rs, q, lam).multiplicities() == freudenthal(G.rs, lam) for q in QS for lam in lams)
    t = elapsed()
    ok = r.verdict == "pass" and mult_ok and t < 30
    worst = max(r.residuals.values())
    emit(2, ok, f"A2 module relations worst {worst:.2e} (tol 1e-10), Freudenthal match {mult_ok}, {t:.1f}s (< 30s)")
    assert ok, r.residuals


def test_c03_bruhat_and_torus_lattices(emit):
    elapsed = _clock()
    mismatches = 0
    for name in ("A2", "B2", "A3"):
        G = load_group(name)
        mismatches += sum(G.bruhat_leq(v, w) != subword_leq(G, v, w) for v in G for w in G)
    torus = {g: check_torus_algebra(g, tol=PINNED) for g in ("A2", "B2")}
    lattice_fail = sum(r.residuals["mult_failures"] + r.residuals["gamma1_failures"] for r in torus.values())
    t = elapsed()
    ok = mismatches == 0 and lattice_fail == 0 and t < 10
    emit(3, ok, f"Bruhat vs subword oracle mismatches {mismatches}, torus product/sum identity failures {lattice_fail}, {t:.1f}s (< 10s)")
    assert ok


def test_c04_reduced_word_independence(emit):
    elapsed = _clock()
    G = load_group("A2")
    r = check_reduced_words("A2", G.longest, (1, 0), 0.5, 24, tol=PINNED)
    t = elapsed()
    ok = r.verdict == "pass" and t < 120
    bulk = [d["bulk_matched"] == min(d["bulk_values"]) for d in r.details.values()]
    emit(4, ok, f"A2 w0 two reduced words, max sorted singular-value gap {r.residuals['max_sorted_sv_difference']:.3g} "
                f"(tol 1e-7), {t:.1f}s (< 2 min); diagnostic: bulk spectra matched for {sum(bulk)}/{len(bulk)} coefficients")
    assert ok, r.residuals


def test_c05_upsilon_support_and_alignment(emit):
    elapsed = _clock()
    tables = {"A2": check_upsilon_support("A2", (1, 1), 0.5, 12, tol=PINNED),
              "B2": check_upsilon_support("B2", (1, 1), 0.5, 14, tol=PINNED)}
    tables_ok = all(r.verdict == "pass" and r.residuals["middle_band_count"] == 0 for r in tables.values())
    align, gap, lemma_ok = 0.0, float("inf"), True
    for name, N in (("A2", 20), ("B2", 14)):
        G = load_group(name)
        for w in G:
            if w == G.identity:
                continue
            r = check_lemma2(name, (1, 1), w, 0.5, N, tol=PINNED)
            lemma_ok &= r.verdict == "pass"
            align = max(align, r.residuals["alignment"])
            gap = min(gap, r.residuals["spectral_gap"])
    t = elapsed()
    ok = tables_ok and lemma_ok and align < 1e-8 and gap > 0 and t < 300
    emit(5, ok, f"support tables classify as Bruhat order {tables_ok}, max alignment {align:.2e} (tol 1e-8), "
                f"min spectral gap {gap:.3g} (> 0), {t:.1f}s (< 5 min)")
    assert ok


def test_c06_torus_map(emit):
    r = check_tau("A2", n_pairs=20, tol=PINNED)
    torus = check_torus_algebra("A2", tol=PINNED)
    ok = r.verdict == "pass" and torus.residuals["cancel_failures"] == 0
    emit(6, ok, f"generator failures {r.residuals['generator_failures']}, ev∘τ vs χ error {r.residuals['evaluation_error']:.2e} "
                f"(tol 1e-12), cover-pair cancellation failures {torus.residuals['cancel_failures']}")
    assert ok


def test_c07_untwisting_isometry(emit):
    elapsed = _clock()
    reports = [check_untwist("A2", w, 0.5, 24, N2=48, tol=PINNED) for w in ((0, 1), (1, 0), (0, 1, 0))]
    t = elapsed()
    ok = all(r.verdict == "pass" for r in reports) and t < 600
    parts = ", ".join(
        f"{r.inputs['w']}: {r.residuals['max_residual@N=24']:.3g} -> {r.residuals['max_residual@N=48']:.3g}" for r in reports
    )
    emit(7, ok, f"max residual N=24 -> N=48 ({parts}), tol 5e-2, {t:.1f}s (< 10 min)")
    assert ok


def test_c08_norm_monotonicity(emit):
    r = check_norm_monotonicity("A2", 0.5, 24, tol=PINNED)
    ok = r.verdict == "pass"
    emit(8, ok, f"max excess ‖π_r(x)‖ - ‖π_σ(x)‖ = {r.residuals['max_excess']:.3g} (slack 1e-3), "
                f"{r.residuals['violations']} violations at N=24")
    assert ok, r.details["violations"][:5]


def test_c09_q_continuity(emit):
    a1 = continuity_scan("A1", (1,), (0,), (0, 0), N=32, tol=PINNED)
    a2 = continuity_scan("A2", (1, 0), load_group("A2").longest, (0, 0), N=10, tol=PINNED)
    ok = a1.residuals["oracle_error"] < 1e-12 and a2.verdict == "pass"
    emit(9, ok, f"A1 oracle error {a1.residuals['oracle_error']:.2e} (tol 1e-12), "
                f"A2 w0 refinement ratio {a2.residuals['refinement_ratio']:.3f} (in [0.3, 0.7])")
    assert ok


def test_c10_determinism(emit, tmp_path, monkeypatch):
    monkeypatch.setenv("ARTIFACT_CACHE_DIR", str(tmp_path / "cache"))
    cfg = tmp_path / "run.yaml"
    cfg.write_text("group: A2\nq_values: [0.5]\ncutoff: 12\nseed: 3\n")
    bodies, tables = [], []
    for d in ("first", "second"):
        for sel in ("su2", "torus", "upsilon"):
            code = cli.main(["verify", sel, "--config", str(cfg), "--output", str(tmp_path / d / sel)])
            assert code in (0, 1, 2)
        recs = [r for sel in ("su2", "torus", "upsilon") for r in report.read_jsonl(tmp_path / d / sel / "verify.jsonl")]
        bodies.append(json.dumps(report.strip_meta(recs), sort_keys=True).encode())
        tables.append(b"".join((tmp_path / d / sel / "verify.csv").read_bytes() for sel in ("su2", "torus", "upsilon")))
    ok = bodies[0] == bodies[1] and tables[0] == tables[1]
    emit(10, ok, f"two runs with one config give byte-identical report bodies ({len(bodies[0])} bytes)")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
