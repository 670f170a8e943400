import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from gaugework.space import (
    DimensionCapExceeded,
    LatticeConfig,
    QOperator,
    anticommutator,
    basis_tuples,
    build_space,
    commutator,
    defect,
    embed,
    fermion_lowering,
    ladder_lowering,
    op_norm,
)


@pytest.mark.parametrize(
    "sites, n_max, dim",
    [(2, 2, 64), (2, 3, 144), (3, 4, 4096)],
)
def test_total_dimension(sites, n_max, dim):
    space = build_space(LatticeConfig(num_sites=sites, n_max=n_max))
    assert space.dim == dim
    assert space.fermion_dim == 2 ** (2 * sites)
    assert space.boson_dim == n_max**sites


def test_two_dimensional_counts():
    cfg = LatticeConfig(num_sites=4, n_max=2, dimension=2)
    assert cfg.extent == (2, 2)
    assert cfg.num_links == 8 and cfg.num_plaquettes == 4
    space = build_space(cfg)
    assert len(space.links) == 8 and len(space.plaquettes) == 4
    # every link appears in exactly two plaquettes, once per orientation
    seen = {}
    for plaq in space.plaquettes:
        for l, s in plaq:
            seen.setdefault(l, []).append(s)
    assert all(sorted(v) == [-1, 1] for v in seen.values())


def test_cap_refusal_reports_sizes():
    cfg = LatticeConfig(num_sites=4, n_max=4, dim_cap=1000)
    with pytest.raises(DimensionCapExceeded) as err:
        build_space(cfg)
    assert err.value.required == 2**8 * 4**4
    assert err.value.cap == 1000
    assert "65536" in str(err.value) and "1000" in str(err.value)


def test_default_cap_is_two_to_the_twenty():
    # exactly 2**20 is allowed, one more level per link is not
    assert LatticeConfig(num_sites=5, n_max=4).total_dim == 2**20
    with pytest.raises(DimensionCapExceeded):
        build_space(LatticeConfig(num_sites=5, n_max=5))


@pytest.mark.parametrize("bad", [dict(num_sites=0, n_max=2), dict(num_sites=2, n_max=0),
                                 dict(num_sites=2, n_max=2, dimension=3), dict(num_sites=2, n_max=2, mass=-1),
                                 dict(num_sites=2, n_max=2, beta=0.0)])
def test_invalid_config(bad):
    with pytest.raises(ValueError):
        LatticeConfig(**bad)


def test_index_is_a_bijection():
    space = build_space(LatticeConfig(num_sites=2, n_max=3))
    seen = []
    for occ, lev in basis_tuples(space):
        i = space.index(occ, lev)
        assert space.unpack(i) == (occ, lev)
        seen.append(i)
    assert seen == list(range(space.dim))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(1, 4), st.data())
def test_index_roundtrip_property(sites, n_max, data):
    space = build_space(LatticeConfig(num_sites=sites, n_max=n_max))
    i = data.draw(st.integers(0, space.dim - 1))
    occ, lev = space.unpack(i)
    assert space.index(occ, lev) == i
    assert tuple(space.occupation_table[i]) == occ
    assert tuple(space.level_table[i]) == lev


def test_fermion_index_is_site_major():
    space = build_space(LatticeConfig(num_sites=2, n_max=2))
    assert [space.mode(x, s) for x in range(2) for s in range(2)] == [0, 1, 2, 3]
    # mode 0 is the most significant fermion bit; boson block is innermost
    assert space.index((1, 0, 0, 0), (0, 0)) == 8 * space.boson_dim
    assert space.index((0, 0, 0, 0), (1, 0)) == 2


def test_embed_identity_is_identity():
    space = build_space(LatticeConfig(num_sites=2, n_max=2))
    for mode in range(space.num_modes):
        assert embed(space, np.eye(2), mode=mode).is_identity
    for link in range(len(space.links)):
        assert embed(space, np.eye(2), link=link).is_identity


def test_embed_number_operator_on_link():
    space = build_space(LatticeConfig(num_sites=2, n_max=2))
    n_op = embed(space, np.diag([0.0, 1.0]), link=0).dense()
    assert np.allclose(n_op, np.diag(np.diag(n_op)))
    diag = np.diag(n_op).real
    assert sorted(set(diag)) == [0.0, 1.0]
    assert np.count_nonzero(diag) == space.dim // 2
    # the pattern repeats inside every fermion block
    block = diag[: space.boson_dim]
    assert np.array_equal(diag, np.tile(block, space.fermion_dim))


def test_car_for_distinct_modes():
    space = build_space(LatticeConfig(num_sites=2, n_max=2))
    c0 = embed(space, fermion_lowering(), mode=0)
    c1 = embed(space, fermion_lowering(), mode=1)
    assert op_norm(anticommutator(c0, c1.dag)) == 0.0
    assert op_norm(anticommutator(c0, c1)) == 0.0


def test_embed_errors():
    space = build_space(LatticeConfig(num_sites=2, n_max=3))
    with pytest.raises(KeyError):
        embed(space, np.eye(2), mode=4)
    with pytest.raises(KeyError):
        embed(space, np.eye(3), link=7)
    with pytest.raises(ValueError):
        embed(space, np.eye(2), link=0)
    with pytest.raises(ValueError):
        embed(space, np.eye(3), mode=0)
    with pytest.raises(ValueError):
        embed(space, np.eye(2))
    with pytest.raises(ValueError):
        # mixed parity has no single Jordan-Wigner dressing
        embed(space, np.array([[1.0, 1.0], [0.0, 0.0]]), mode=1)


@settings(max_examples=25, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=9, max_size=9),
    st.lists(st.floats(-3, 3), min_size=9, max_size=9),
    st.floats(-2, 2),
    st.integers(0, 1),
)
def test_embed_is_linear_on_links(xa, xb, c, link):
    space = build_space(LatticeConfig(num_sites=2, n_max=3))
    a = np.reshape(xa, (3, 3))
    b = np.reshape(xb, (3, 3))
    lhs = embed(space, a + c * b, link=link)
    rhs = embed(space, a, link=link) + c * embed(space, b, link=link)
    assert defect(lhs, rhs) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2), st.integers(0, 3))
def test_embed_is_linear_on_odd_fermion_operators(x, y, c, mode):
    space = build_space(LatticeConfig(num_sites=2, n_max=2))
    low = fermion_lowering()
    a, b = x * low, y * low.T
    lhs = embed(space, a + c * b, mode=mode)
    rhs = embed(space, a, mode=mode) + c * embed(space, b, mode=mode)
    assert defect(lhs, rhs) <= 1e-12


def test_bosons_on_distinct_links_commute():
    space = build_space(LatticeConfig(num_sites=3, n_max=3))
    a = ladder_lowering(3)
    ops = [embed(space, a, link=l) for l in range(3)] + [embed(space, a.T, link=l) for l in range(3)]
    for i, x in enumerate(ops):
        for j, y in enumerate(ops):
            if i % 3 != j % 3:
                assert op_norm(commutator(x, y)) == 0.0


def test_op_norm_examples():
    assert defect(QOperator.identity(4), QOperator.identity(4)) == 0.0
    eye = QOperator.identity(5, sparse=False)
    assert defect(eye, eye) == 0.0
    assert op_norm(QOperator(np.diag([3.0, -1.0]))) == pytest.approx(3.0, abs=1e-14)
    assert op_norm(QOperator(np.array([[0.0, 1.0], [1.0, 0.0]]))) == pytest.approx(1.0, abs=1e-14)
    assert op_norm(QOperator.zeros(3)) == 0.0


def test_op_norm_matches_svd(rng):
    m = rng.normal(size=(40, 40)) + 1j * rng.normal(size=(40, 40))
    m[:20, 20:] = 0
    m[20:, :20] = 0
    assert op_norm(QOperator(m)) == pytest.approx(np.linalg.norm(m, 2), rel=1e-12)
    assert op_norm(QOperator(sp.csr_matrix(m))) == pytest.approx(np.linalg.norm(m, 2), rel=1e-12)


def test_defect_dimension_mismatch():
    with pytest.raises(ValueError):
        defect(QOperator.identity(2), QOperator.identity(3))


def test_structural_flags():
    h = QOperator(np.array([[1.0, 2j], [-2j, 0.5]]))
    assert h.is_hermitian and not h.is_unitary
    u = QOperator(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert u.is_unitary and u.is_hermitian and not u.is_identity
    assert not QOperator(np.array([[0.0, 1.0], [0.0, 0.0]])).is_hermitian


def test_operators_are_immutable():
    op = QOperator(np.eye(3))
    with pytest.raises(ValueError):
        op.matrix[0, 0] = 2.0


def test_non_square_rejected():
    with pytest.raises(ValueError):
        QOperator(np.zeros((2, 3)))
