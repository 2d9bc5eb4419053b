import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from majorana_rp import clifford, matrix_rep
from majorana_rp.clifford import CliffordElement
from majorana_rp.matrix_rep import RepresentationError


@pytest.mark.parametrize("num_modes", [1, 2, 3, 4, 5])
def test_majoranas_anticommute_exactly(num_modes):
    cs = matrix_rep.build_majoranas(num_modes)
    dim = 1 << num_modes
    identity = np.eye(dim)

    assert len(cs) == 2 * num_modes
    for i, ci in enumerate(cs):
        np.testing.assert_array_equal(ci, ci.conj().T)
        for j, cj in enumerate(cs):
            expected = 2 * identity if i == j else np.zeros((dim, dim))
            np.testing.assert_array_equal(ci @ cj + cj @ ci, expected)


def test_reality_pattern():
    for position, c in enumerate(matrix_rep.build_majoranas(3), start=1):
        if position % 2:
            assert not np.any(c.imag)
        else:
            assert not np.any(c.real)


def test_generators_are_traceless():
    for c in matrix_rep.build_majoranas(3):
        assert np.trace(c) == 0


def test_generator_matrices_are_read_only():
    c = matrix_rep.build_majoranas(1)[0]
    with pytest.raises(ValueError):
        c[0, 0] = 5


def test_monomials_are_orthonormal():
    num_modes = 4
    dim = 1 << num_modes
    vectors = np.array(
        [
            matrix_rep.to_matrix(CliffordElement({bits: 1}, 2 * num_modes)).ravel()
            for bits in range(1 << (2 * num_modes))
        ]
    )
    gram = vectors.conj() @ vectors.T / dim

    np.testing.assert_array_equal(gram, np.eye(1 << (2 * num_modes)))


def test_non_identity_monomials_are_traceless():
    num_modes = 5
    states = np.arange(1 << num_modes)
    for bits in range(1, 1 << (2 * num_modes)):
        image, phase = matrix_rep.monomial_action(bits, num_modes)
        assert np.sum(phase[image == states]) == 0


def test_to_matrix_cases():
    np.testing.assert_array_equal(
        matrix_rep.to_matrix(clifford.identity(4)), np.eye(4)
    )
    c1, c2 = matrix_rep.build_majoranas(1)
    np.testing.assert_array_equal(
        matrix_rep.to_matrix(clifford.monomial([1, 2], 2)), c1 @ c2
    )


terms_n6 = st.dictionaries(
    st.integers(0, 63),
    st.builds(complex, st.floats(-2, 2), st.floats(-2, 2)),
    min_size=1,
    max_size=6,
).map(lambda terms: CliffordElement(terms, 6))


@settings(deadline=None, max_examples=50)
@given(terms_n6, terms_n6)
def test_to_matrix_is_a_homomorphism(a, b):
    np.testing.assert_allclose(
        matrix_rep.to_matrix(clifford.mul(a, b)),
        matrix_rep.to_matrix(a) @ matrix_rep.to_matrix(b),
        atol=1e-12,
    )


@settings(deadline=None, max_examples=50)
@given(terms_n6)
def test_from_matrix_inverts_to_matrix(a):
    assert matrix_rep.from_matrix(matrix_rep.to_matrix(a)).isclose(a, 1e-12)


def test_from_matrix_cases():
    assert matrix_rep.from_matrix(np.eye(4)) == clifford.identity(4)

    a = clifford.generator(1, 6) + clifford.monomial([2, 3], 6, 2j)
    assert matrix_rep.from_matrix(matrix_rep.to_matrix(a)).isclose(a, 1e-14)


def test_from_matrix_keeps_hermitian_matrices_self_adjoint():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    hermitian = m + m.conj().T

    assert clifford.is_self_adjoint(matrix_rep.from_matrix(hermitian), 1e-12)


def test_from_matrix_with_support_only_computes_listed_monomials():
    a = clifford.scalar(2, 4) + clifford.monomial([1, 2], 4, 1j)
    got = matrix_rep.from_matrix(matrix_rep.to_matrix(a), support=[0])

    assert got == clifford.scalar(2, 4)


def test_from_matrix_rejects_bad_shapes():
    with pytest.raises(RepresentationError):
        matrix_rep.from_matrix(np.eye(3))
    with pytest.raises(RepresentationError):
        matrix_rep.from_matrix(np.ones((2, 4)))


def test_cap_is_enforced():
    with pytest.raises(RepresentationError):
        matrix_rep.manager.check(matrix_rep.manager.max_modes + 1)
    with pytest.raises(RepresentationError):
        matrix_rep.build_majoranas(0)


def test_manager_configure_sets_cap():
    manager = matrix_rep.Manager()
    manager.configure({"max_modes": 4})

    assert manager.max_modes == 4
    with pytest.raises(RepresentationError):
        manager.majoranas(5)


def test_action_cache_stays_within_its_byte_limit():
    manager = matrix_rep.Manager()
    manager.configure({"max_action_bytes": 4096})

    for bits in range(1 << 6):
        manager.action(bits, 3)
        assert manager.action_bytes <= 4096
    last = manager.action(63, 3)
    assert manager.action(63, 3) is last
    manager.clear_actions()
    assert manager.action_bytes == 0


def test_oversized_actions_are_not_cached():
    manager = matrix_rep.Manager()
    manager.configure({"max_action_bytes": 64})

    image, phase = manager.action(0b1, 3)
    assert manager.action_bytes == 0
    np.testing.assert_array_equal(image, np.arange(8) ^ 1)
    assert not image.flags.writeable


def test_full_expansion_under_a_small_action_budget(monkeypatch):
    monkeypatch.setattr(matrix_rep.manager, "max_action_bytes", 1 << 16)
    matrix_rep.manager.clear_actions()
    rng = np.random.default_rng(11)
    m = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))

    try:
        a = matrix_rep.from_matrix(m)
        np.testing.assert_allclose(matrix_rep.to_matrix(a), m, atol=1e-12)
        assert matrix_rep.manager.action_bytes <= 1 << 16
    finally:
        matrix_rep.manager.clear_actions()


def test_weighted_trace_matches_dense_trace():
    rng = np.random.default_rng(5)
    weight = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    a = CliffordElement({0: 0.5, 0b11: 1j, 0b101101: -2.0}, 6)

    expected = np.trace(matrix_rep.to_matrix(a) @ weight)
    assert matrix_rep.weighted_trace(a, weight) == pytest.approx(expected, abs=1e-12)


def test_weighted_trace_rejects_mismatch():
    with pytest.raises(RepresentationError):
        matrix_rep.weighted_trace(clifford.identity(6), np.eye(4))


def test_reflect_matrix_cases(pair_chain, two_flavor_chain):
    c1, c2 = matrix_rep.build_majoranas(1)
    np.testing.assert_allclose(matrix_rep.reflect_matrix(c1, pair_chain), c2, atol=1e-15)
    np.testing.assert_allclose(
        matrix_rep.reflect_matrix(np.eye(2), pair_chain), np.eye(2), atol=1e-15
    )

    m = matrix_rep.to_matrix(clifford.monomial([1, 2], 4, 1j))
    expected = matrix_rep.to_matrix(clifford.monomial([3, 4], 4, -1j))
    np.testing.assert_allclose(
        matrix_rep.reflect_matrix(m, two_flavor_chain), expected, atol=1e-15
    )


def test_reflect_matrix_rejects_mismatch(pair_chain):
    with pytest.raises(RepresentationError):
        matrix_rep.reflect_matrix(np.eye(4), pair_chain)


def test_csv_dump_and_load(tmp_path):
    m = matrix_rep.to_matrix(clifford.monomial([1, 4], 4, 0.25 + 1j))
    path = tmp_path / "m.csv"
    matrix_rep.dump_csv(m, path)

    np.testing.assert_array_equal(matrix_rep.load_csv(path), m)
