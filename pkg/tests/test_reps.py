import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from soibelman.fock import pi_su2_generators
from soibelman.lattice import TorusLattice
from soibelman.qmodule import AlgebraElement, build_module, coefficient, upsilon
from soibelman.reps import (
    SoibelmanRep,
    chi_t,
    commutant_dimension,
    counit,
    fundamental_coefficient,
    pi_i,
    restrict_polynomial,
    restrict_to_su2,
    restricted_character,
    su2_strings,
    subtorus_angles,
    tau,
)
from soibelman.verify import boundary_norm, check_reduced_words, sample_elements
from soibelman.weyl import load_group

A2 = load_group("A2")
Q = 0.5


def fund(G, i, q=Q):
    return build_module(G.rs, q, tuple(int(i == j) for j in range(G.rs.rank)))


def guard_close(A, B, tol):
    g = max(A.guard, B.guard)
    a = A.guard_block(g - A.guard).toarray()
    b = B.guard_block(g - B.guard).toarray()
    return np.max(np.abs(a - b)) if a.size else 0.0


def rand_coeff(m, rng):
    d = m.dimension
    return coefficient(m, rng.normal(size=d) + 1j * rng.normal(size=d), rng.normal(size=d) + 1j * rng.normal(size=d))


def test_string_decomposition_counts():
    m = fund(A2, 0)
    assert sorted(s.two_l for s in su2_strings(m, 0)) == [0, 1]
    A1 = load_group("A1")
    (s,) = su2_strings(build_module(A1.rs, Q, (1,)), 0)
    assert s.two_l == 1
    # A2 adjoint: strings per simple root have spins 1, 1/2, 1/2, 0
    ad = build_module(A2.rs, Q, (1, 1))
    assert sorted(s.two_l for s in su2_strings(ad, 0)) == [0, 1, 1, 2]


@pytest.mark.parametrize("i", [0, 1])
@pytest.mark.parametrize("j", [0, 1])
def test_restriction_of_highest_coefficient(i, j):
    m = fund(A2, j)
    legs = restrict_to_su2(fundamental_coefficient(m, 0, 0), i)
    assert len(legs) == 1
    two_l, c = legs[0]
    if i == j:
        assert two_l == 1 and np.allclose(c, [[1, 0], [0, 0]])
    else:
        assert two_l == 0 and np.allclose(c, [[1]])


def test_pi_i_on_highest_coefficients():
    N = 10
    S_C = pi_su2_generators(Q, N)["t11"].dense()
    m1 = fund(A2, 0)
    assert np.allclose(pi_i(fundamental_coefficient(m1, 0, 0), 0, N).dense(), S_C)
    assert np.allclose(pi_i(fundamental_coefficient(m1, 0, 0), 1, N).dense(), np.eye(N))
    A1 = load_group("A1")
    t = build_module(A1.rs, Q, (1,))
    assert np.allclose(pi_i(fundamental_coefficient(t, 0, 0), 0, N).dense(), S_C)


def test_pi_i_uses_q_i():
    B2 = load_group("B2")
    N = 10
    for i in range(2):
        m = fund(B2, i)
        qi = Q ** int(B2.rs.symmetrizers[i])
        X = pi_i(fundamental_coefficient(m, 0, 0), i, N).dense()
        assert np.allclose(X, pi_su2_generators(qi, N)["t11"].dense())


def test_pi_i_contractive():
    rng = np.random.default_rng(11)
    for _ in range(20):
        i = int(rng.integers(2))
        m = fund(A2, int(rng.integers(2)))
        f = rand_coeff(m, rng)
        X = pi_i(f, i, 16)
        assert X.guard_norm() <= np.linalg.norm(f.eta) * np.linalg.norm(f.xi) + 1e-12


def test_identity_word_is_counit():
    rep = SoibelmanRep(A2, (), 8)
    m = build_module(A2.rs, Q, (1, 1))
    for a in range(m.dimension):
        for b in range(m.dimension):
            X = rep(fundamental_coefficient(m, a, b))
            assert complex(X.matrix[0, 0]) == pytest.approx(float(a == b))


def test_non_reduced_word_rejected():
    with pytest.raises(ValueError):
        SoibelmanRep(A2, (0, 0), 8)


@pytest.mark.parametrize("word", [(0,), (1, 0), (0, 1, 0)])
def test_homomorphism_on_guard_band(word):
    rng = np.random.default_rng(len(word))
    rep = SoibelmanRep(A2, word, 10)
    for _ in range(3):
        f, g = rand_coeff(fund(A2, int(rng.integers(2))), rng), rand_coeff(fund(A2, int(rng.integers(2))), rng)
        lhs = rep(f * g)
        rhs = rep(f) @ rep(g)
        assert guard_close(lhs, rhs, 1e-9) < 1e-9


@pytest.mark.parametrize("word", [(1,), (0, 1), (1, 0, 1)])
def test_adjoint_on_guard_band(word):
    rng = np.random.default_rng(7)
    rep = SoibelmanRep(A2, word, 10)
    for _ in range(3):
        f, g = rand_coeff(fund(A2, 0), rng), rand_coeff(fund(A2, 1), rng)
        x = AlgebraElement.of(f) * AlgebraElement.of(g, star=True) + 0.5j * AlgebraElement.of(g)
        assert guard_close(rep(x.adjoint()), rep(x).H, 1e-10) < 1e-10


def test_orthogonality_relation_under_w0():
    # Σ_i π(C_{ξi,ξk})* π(C_{ξi,ξj}) = δ_kj on the guard band
    m = fund(A2, 0)
    rep = SoibelmanRep(A2, A2.longest.word, 24)
    imgs = [[rep(fundamental_coefficient(m, i, j)) for j in range(3)] for i in range(3)]
    worst = 0.0
    for k in range(3):
        for j in range(3):
            acc = sum((imgs[i][k].H @ imgs[i][j] for i in range(1, 3)), imgs[0][k].H @ imgs[0][j])
            blk = acc.guard_block()
            if k == j:
                blk = blk - sp.identity(blk.shape[0], format="csr")
            worst = max(worst, abs(blk).max() if blk.nnz else 0.0)
    assert worst < 1e-8


def test_single_leg_images_match_fock_operators():
    m = fund(A2, 0)
    rep = SoibelmanRep(A2, (0,), 12)
    g = pi_su2_generators(Q, 12)
    E = {(0, 0): "t11", (0, 1): "t12", (1, 0): "t21", (1, 1): "t22"}
    for (a, b), lab in E.items():
        assert np.allclose(rep(fundamental_coefficient(m, a, b)).dense(), g[lab].dense())
    assert np.allclose(rep(fundamental_coefficient(m, 2, 2)).dense(), np.eye(12))


@pytest.mark.parametrize("w", list(load_group("A2")))
def test_upsilon_fixes_vacuum(w):
    m = build_module(A2.rs, Q, (1, 1))
    rep = SoibelmanRep(A2, w.word, 12)
    Y = rep(upsilon(m, w))
    if Y.factors == 0:
        assert complex(Y.matrix[0, 0]) == pytest.approx(1.0)
        return
    e0 = np.zeros(Y.side)
    e0[0] = 1
    assert np.allclose(Y.apply(e0), e0, atol=1e-12)


def test_characters():
    rng = np.random.default_rng(2)
    samples = sample_elements(A2, Q, seed=4)
    for s in samples[::3]:
        assert chi_t(s.element, (0.0, 0.0)) == pytest.approx(counit(s.element), abs=1e-12)
    for i in range(2):
        th = rng.uniform(0, 2 * np.pi, 2)
        f = fundamental_coefficient(fund(A2, i), 0, 0)
        assert chi_t(f, th) == pytest.approx(np.exp(1j * th[i]))


def test_character_convolution():
    # χ_s ⊠ χ_t = χ_{st} on coefficients
    rng = np.random.default_rng(9)
    m = build_module(A2.rs, Q, (1, 1))
    d = m.dimension
    I = np.eye(d)
    for _ in range(5):
        f = rand_coeff(m, rng)
        s, t = rng.uniform(0, 6, 2), rng.uniform(0, 6, 2)
        conv = sum(chi_t(coefficient(m, f.eta, I[j]), s) * chi_t(coefficient(m, I[j], f.xi), t) for j in range(d))
        assert conv == pytest.approx(chi_t(f, s + t), abs=1e-12)


def test_tau_exact_data():
    for i in range(2):
        p = tau(fundamental_coefficient(fund(A2, i), 0, 0))
        assert p.terms == {tuple(int(i == j) for j in range(2)): 1}
    m = fund(A2, 0)
    assert tau(fundamental_coefficient(m, 0, 1)).is_zero()


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 1000), theta=st.tuples(st.floats(0, 6.3), st.floats(0, 6.3)))
def test_tau_evaluates_to_character(seed, theta):
    samples = sample_elements(A2, Q, seed=seed % 5)
    x = samples[seed % len(samples)].element
    assert tau(x).evaluate(theta) == pytest.approx(chi_t(x, theta), abs=1e-12)


def test_restriction_rank_zero_and_triviality():
    L0 = TorusLattice.span([], 2)
    f = fundamental_coefficient(build_module(A2.rs, Q, (1, 1)), 0, 0)
    p = restricted_character(f, L0)
    assert p.nvars == 0 and p.terms == {(): pytest.approx(1.0)}
    L = A2.cover_torus(A2.rs.positive_roots[0])
    for mu in [(1, 0), (0, 1), (2, -1), (-1, 2)]:
        mono = restrict_polynomial(type(p).monomial(mu), L)
        trivial = all(x == 0 for x in L.pairing(mu))
        assert (set(mono.terms) == {(0,)}) == trivial


def test_invariant_elements_twist_trivially():
    m = build_module(A2.rs, Q, (1, 1))
    w = A2.from_word((0, 1))
    rep = SoibelmanRep(A2, w.word, 10)
    U = upsilon(m, w)
    base = rep(U)
    twisted = rep.boxtimes_point(U, (0.7, -1.3))
    assert np.allclose(twisted.dense(), base.dense(), atol=1e-13)
    for L in A2.torus_union(A2.identity, w):
        data = rep.boxtimes_character(U, L).exponent_data()
        assert set(data) == {(0,) * L.rank}
        assert np.allclose(data[(0,) * L.rank].dense(), base.dense(), atol=1e-13)


def test_boxtimes_at_unit_and_consistency():
    rep = SoibelmanRep(A2, (1, 0), 10)
    samples = sample_elements(A2, Q, seed=1)
    L = A2.cover_torus(A2.rs.positive_roots[1])
    for s in samples[::7]:
        assert np.allclose(rep.boxtimes_point(s.element, (0, 0)).dense(), rep(s.element).dense(), atol=1e-13)
        for pt in ([0.1], [0.37]):
            lhs = rep.boxtimes_character(s.element, L).at(pt)
            rhs = rep.boxtimes_point(s.element, subtorus_angles(L, pt))
            assert np.allclose(lhs.dense(), rhs.dense(), atol=1e-12)


def test_boundary_norm_reproducible():
    f = fundamental_coefficient(fund(A2, 0), 0, 0)
    v = A2.simple(0)
    w0 = A2.longest
    rep = SoibelmanRep(A2, v.word, 16)
    vals = [max(rep.boxtimes_character(f, L).sup_norm() for L in A2.torus_union(v, w0)) for _ in range(2)]
    assert vals[0] > 0 and vals[0] == vals[1]
    assert boundary_norm(A2, f, w0, 16) >= vals[0]


def test_handle_json():
    h = SoibelmanRep(A2, (0, 1), 12).handle(0.5).to_json()
    assert h == {"kind": "pi_w", "group": "A2", "word": (0, 1), "q": 0.5, "cutoff": 12}


def test_commutant_is_scalar_at_small_cutoff():
    rep = SoibelmanRep(A2, (0,), 4)
    ops = [rep(fundamental_coefficient(fund(A2, i), a, b)) for i in range(2) for a in range(3) for b in range(3)]
    assert commutant_dimension(ops) == 1


def test_reduced_words_agree_in_the_bulk():
    # full sorted lists are compared in the acceptance suite; here only the
    # boundary-free part of the spectra
    r = check_reduced_words("A2", A2.longest.word, (1, 0), Q, 20)
    for key, d in r.details.items():
        assert d["bulk_matched"] == min(d["bulk_values"]), key
