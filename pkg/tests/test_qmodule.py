import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import freudenthal, weyl_dimension
from soibelman import qmodule
from soibelman.qmodule import (
    AlgebraElement,
    ModuleBuildError,
    QModule,
    borel_submodule,
    build_module,
    coefficient,
    extremal_vector,
    qbinom,
    qint,
    relation_residuals,
    upsilon,
)
from soibelman.reps import tau
from soibelman.weyl import load_group

QS = (0.3, 0.5, 0.8)


def test_q_integers():
    q = 0.5
    assert qint(1, q) == pytest.approx(1.0)
    assert qint(2, q) == pytest.approx(q + 1 / q)
    assert qint(3, q) == pytest.approx(q**2 + 1 + q**-2)
    assert qbinom(4, 2, q) == pytest.approx(qint(4, q) * qint(3, q) / (qint(2, q) * qint(1, q)))


@pytest.mark.parametrize(
    "group,lam",
    [("A1", (1,)), ("A1", (3,)), ("A2", (1, 0)), ("A2", (0, 1)), ("A2", (1, 1)), ("A2", (2, 1)), ("A2", (2, 2)),
     ("B2", (1, 0)), ("B2", (0, 1)), ("B2", (1, 1)), ("G2", (1, 0)), ("G2", (0, 1)),
     ("A3", (1, 0, 0)), ("A3", (0, 1, 0)), ("A3", (1, 1, 1))],
)
def test_multiplicities_match_freudenthal(group, lam):
    G = load_group(group)
    m = build_module(G.rs, 0.5, lam)
    assert m.multiplicities() == freudenthal(G.rs, lam)
    assert m.dimension == weyl_dimension(G.rs, lam)


@pytest.mark.parametrize("q", QS)
@pytest.mark.parametrize("lam", [(1, 0), (0, 1), (1, 1), (2, 0), (2, 2)])
def test_relations_a2(lam, q):
    m = build_module(load_group("A2").rs, q, lam)
    res = relation_residuals(m)
    assert set(res) == {"cartan", "k_conjugation", "ef_commutator", "serre_e", "serre_f", "adjoint"}
    assert max(res.values()) < 1e-10


@pytest.mark.parametrize("q", QS)
@pytest.mark.parametrize("group,lam", [("B2", (1, 1)), ("A3", (1, 1, 1)), ("G2", (1, 0))])
def test_relations_other_types(group, lam, q):
    m = build_module(load_group(group).rs, q, lam)
    assert max(relation_residuals(m).values()) < 1e-10


def test_small_examples():
    A1 = load_group("A1")
    m = build_module(A1.rs, 0.5, (1,))
    assert m.dimension == 2 and set(m.weights) == {(1,), (-1,)}
    m = build_module(load_group("A2").rs, 0.5, (1, 1))
    assert m.dimension == 8 and m.multiplicities()[(0, 0)] == 2


def test_highest_weight_vector_is_first_and_killed_by_e():
    m = build_module(load_group("B2").rs, 0.5, (1, 1))
    assert m.weights[0] == (1, 1)
    for E in m.E:
        assert np.allclose(E[:, 0], 0)


def test_weight_spaces_orthogonal_and_k_diagonal():
    m = build_module(load_group("A2").rs, 0.5, (1, 1))
    for i in range(2):
        K = m.K[i]
        assert np.allclose(K, np.diag(np.diag(K)))
        for k, mu in enumerate(m.weights):
            assert K[k, k] == pytest.approx(m.q_i(i) ** mu[i])


def test_bad_inputs():
    rs = load_group("A2").rs
    with pytest.raises(ValueError):
        build_module(rs, 1.2, (1, 0))
    with pytest.raises(ValueError):
        build_module(rs, 0.5, (-1, 1))
    with pytest.raises(ModuleBuildError):
        build_module(rs, 0.5, (3, 3), max_dim=20)


def test_ambiguous_gram_rank_is_loud():
    with pytest.raises(ModuleBuildError):
        qmodule._build_module(load_group("B2").rs, 0.3, (2, 2), 512)


def test_json_roundtrip_is_exact():
    m = build_module(load_group("A2").rs, 0.3, (1, 1))
    m2 = QModule.from_json(m.to_json(), m.rs)
    assert m2.weights == m.weights
    for a, b in zip(m.E + m.F, m2.E + m2.F):
        assert np.array_equal(a, b)


def test_rebuild_is_bit_identical():
    rs = load_group("B2").rs
    a = qmodule._build_module(rs, 0.5, (1, 1), 512)
    b = qmodule._build_module(rs, 0.5, (1, 1), 512)
    assert all(np.array_equal(x, y) for x, y in zip(a.E + a.F, b.E + b.F))


def _first_nonzero(v):
    return v[np.flatnonzero(np.abs(v) > 1e-14)[0]]


def test_extremal_vectors():
    G = load_group("A2")
    m = build_module(G.rs, 0.5, (1, 0))
    assert np.allclose(extremal_vector(m, G.identity), np.eye(3)[0])
    lines = set()
    for w in G:
        v = extremal_vector(m, w)
        assert np.linalg.norm(v) == pytest.approx(1.0)
        first = _first_nonzero(v)
        assert first.real > 0 and abs(first.imag) < 1e-15
        mu = m.weights[int(np.argmax(np.abs(v)))]
        assert mu == w.act_weight((1, 0))
        lines.add(int(np.argmax(np.abs(v))))
    assert lines == {0, 1, 2}
    # equal extremal weights give the same vector
    s2 = G.simple(1)
    assert np.allclose(extremal_vector(m, s2), extremal_vector(m, G.identity))


def test_extremal_a1_lowest():
    G = load_group("A1")
    m = build_module(G.rs, 0.5, (1,))
    assert np.allclose(extremal_vector(m, G.simple(0)), [0, 1])


def _borel_checks(group):
    G = load_group(group)
    m = build_module(G.rs, 0.5, tuple([1] * G.rs.rank))
    worst_out, worst_in = 0.0, 0.0
    for w in G:
        Q = borel_submodule(m, w)
        P = Q @ Q.conj().T
        # closed under E_i and K_i
        for E in m.E + m.K:
            assert np.linalg.norm(E @ Q - P @ E @ Q) < 1e-10
        for v in G:
            xv = extremal_vector(m, v)
            if G.bruhat_leq(v, w):
                worst_in = max(worst_in, np.linalg.norm(xv - P @ xv))
            else:
                worst_out = max(worst_out, np.linalg.norm(P @ xv))
    return worst_in, worst_out


@pytest.mark.parametrize("group", ["A2", "B2"])
def test_lemma_borel_containment_and_orthogonality(group):
    worst_in, worst_out = _borel_checks(group)
    assert worst_in < 1e-10
    assert worst_out < 1e-9


def test_borel_identity_is_highest_line():
    G = load_group("A2")
    m = build_module(G.rs, 0.5, (1, 1))
    Q = borel_submodule(m, G.identity)
    assert Q.shape[1] == 1
    assert abs(abs(Q[0, 0]) - 1) < 1e-12


def test_coefficients_counit_and_zero():
    G = load_group("A2")
    m = build_module(G.rs, 0.5, (1, 1))
    I = np.eye(m.dimension)
    for i in range(m.dimension):
        for k in range(m.dimension):
            assert coefficient(m, I[i], I[k]).counit() == pytest.approx(float(i == k))
    zero = coefficient(m, np.zeros(m.dimension), I[0])
    assert zero(m.E[0] + m.F[1] + m.K[0]) == 0
    with pytest.raises(ValueError):
        coefficient(m, I[0][:3], I[0])


def test_coefficient_sesquilinearity():
    G = load_group("A2")
    m = build_module(G.rs, 0.5, (1, 0))
    rng = np.random.default_rng(3)
    a = m.F[0] @ m.K[1] + m.E[1]
    eta, xi = rng.normal(size=3) + 1j * rng.normal(size=3), rng.normal(size=3) + 1j * rng.normal(size=3)
    c = 0.3 - 0.7j
    assert coefficient(m, c * eta, xi)(a) == pytest.approx(np.conj(c) * coefficient(m, eta, xi)(a))
    assert coefficient(m, eta, c * xi)(a) == pytest.approx(c * coefficient(m, eta, xi)(a))


def test_product_is_tensor_coefficient():
    G = load_group("A2")
    m = build_module(G.rs, 0.5, (1, 0))
    rng = np.random.default_rng(5)
    f = coefficient(m, rng.normal(size=3), rng.normal(size=3))
    g = coefficient(m, rng.normal(size=3), rng.normal(size=3))
    fg = f * g
    assert fg.module.dimension == 9
    assert fg.counit() == pytest.approx(f.counit() * g.counit())
    assert tau(fg).allclose(tau(f) * tau(g))


def test_upsilon():
    G = load_group("A2")
    m = build_module(G.rs, 0.5, (1, 1))
    for w in G:
        u = upsilon(m, w)
        assert u.is_word_fixed_by_adjoint()
    with pytest.raises(ValueError):
        upsilon(build_module(G.rs, 0.5, (1, 0)), G.identity)


def test_algebra_element_adjoint_reverses_words():
    G = load_group("A1")
    m = build_module(G.rs, 0.5, (1,))
    I = np.eye(2)
    a, b = coefficient(m, I[0], I[0]), coefficient(m, I[0], I[1])
    x = (2 - 1j) * AlgebraElement.of(a) * AlgebraElement.of(b, star=True)
    (c, word), = x.adjoint().terms
    assert c == pytest.approx(2 + 1j)
    assert word[0][0] is b and word[0][1] is False
    assert word[1][0] is a and word[1][1] is True
    assert x.adjoint().adjoint().terms[0][1] == x.terms[0][1]


@settings(max_examples=15, deadline=None)
@given(
    lam=st.tuples(st.integers(0, 2), st.integers(0, 2)).filter(any),
    q=st.floats(0.3, 0.8),
)
def test_random_a2_modules(lam, q):
    G = load_group("A2")
    m = build_module(G.rs, q, lam)
    assert m.multiplicities() == freudenthal(G.rs, lam)
    assert max(relation_residuals(m).values()) < 1e-9
