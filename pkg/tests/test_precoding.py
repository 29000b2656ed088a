import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blindofdm.errors import ConfigurationError
from blindofdm.precoding import build_precoder

from conftest import crandn


def eig_sqrt(P):
    w, V = np.linalg.eigh(P)
    return (V * np.sqrt(w)) @ V.conj().T


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 4, 16, 64]), st.floats(0.0, 0.99))
def test_square_root_and_inverse(n, p):
    W = build_precoder(n, p)
    P = W.correlation()
    Wd = W.matrix()
    np.testing.assert_allclose(Wd @ Wd, P, atol=1e-12)
    np.testing.assert_allclose(Wd, Wd.T, atol=0)
    np.testing.assert_allclose(Wd, eig_sqrt(P), atol=1e-10)
    np.testing.assert_allclose(W.inverse_matrix() @ Wd, np.eye(n), atol=1e-10)
    assert np.all(np.linalg.eigvalsh(Wd) > 0)


def test_correlation_entries():
    P = build_precoder(64, 0.5).correlation()
    assert np.allclose(np.diag(P), 1) and P[3, 7] == pytest.approx(0.5)


def test_fast_apply_matches_dense(rng):
    W = build_precoder(64, 0.5)
    d = crandn(rng, 5, 64)
    np.testing.assert_allclose(W.precode(d), d @ W.matrix().T, atol=1e-12)
    np.testing.assert_allclose(W.deprecode(W.precode(d)), d, atol=1e-12)


def test_identity_when_p_zero(rng):
    W = build_precoder(16, 0.0)
    d = crandn(rng, 16)
    assert W.is_identity
    np.testing.assert_allclose(W.precode(d), d, atol=1e-15)


def test_empirical_correlation(rng):
    W = build_precoder(8, 0.5)
    x = W.precode(crandn(rng, 200_000, 8))
    R = x.T @ x.conj() / x.shape[0]
    np.testing.assert_allclose(R, W.correlation(), atol=0.02)


@pytest.mark.parametrize("p", [1.0, -0.2])
def test_invalid_p(p):
    with pytest.raises(ConfigurationError):
        build_precoder(8, p)


def test_length_check():
    with pytest.raises(ValueError):
        build_precoder(8, 0.5).precode(np.zeros(7))
