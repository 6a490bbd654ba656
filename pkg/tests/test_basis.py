import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcsbp import basis
from mcsbp.quadrature import collapsed_tri_rule


def _interior_points(rng, n):
    # uniform samples in the reference triangle, kept away from the edges
    u = rng.uniform(0.05, 0.95, (n, 2))
    flip = u.sum(axis=1) > 1.0
    u[flip] = 1.0 - u[flip]
    return -1.0 + 2.0 * u


def test_basis_dim():
    assert [basis.basis_dim(P) for P in (0, 2, 12)] == [1, 6, 91]
    with pytest.raises(ValueError):
        basis.basis_dim(-1)


def test_index_order_total_degree_then_j():
    assert basis.index_pairs(2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_constant_column(rng):
    pts = _interior_points(rng, 10)
    V = basis.eval_vandermonde(3, pts)
    np.testing.assert_allclose(V[:, 0], 1.0 / np.sqrt(2.0), atol=1e-15)


def test_gram_identity_collapsed_rule():
    rule = collapsed_tri_rule(8)
    V = basis.eval_vandermonde(4, rule.nodes)
    assert np.max(np.abs(V.T @ (rule.weights[:, None] * V) - np.eye(15))) <= 1e-12


@pytest.mark.parametrize("P", range(0, 7))
def test_continuous_orthonormality_high_degree_rule(P):
    ref = collapsed_tri_rule(20)
    V = basis.eval_vandermonde(P, ref.nodes)
    assert np.max(np.abs(V.T @ (ref.weights[:, None] * V) - np.eye(basis.basis_dim(P)))) <= 1e-12


@pytest.mark.parametrize("P", range(0, 9))
def test_projection_reproduces_monomials(P):
    rule = collapsed_tri_rule(max(2, 2 * P))
    V = basis.eval_vandermonde(P, rule.nodes)
    x1, x2 = rule.nodes.T
    for a in range(P + 1):
        for b in range(P + 1 - a):
            f = x1**a * x2**b
            assert np.max(np.abs(V @ (V.T @ (rule.weights * f)) - f)) <= 1e-11


def test_gradients_match_finite_differences(rng):
    P, eps = 5, 1e-6
    pts = _interior_points(rng, 20)
    vs = basis.eval_grad_vandermonde(P, pts)
    for d, G in enumerate((vs.V_x1, vs.V_x2)):
        step = np.zeros(2)
        step[d] = eps
        fd = (basis.eval_vandermonde(P, pts + step) - basis.eval_vandermonde(P, pts - step)) / (2 * eps)
        assert np.max(np.abs(G - fd)) <= 1e-6


def test_gradients_of_low_degree_columns():
    pts = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [-0.3, -0.2], [0.0, -1.0]])
    vs = basis.eval_grad_vandermonde(3, pts)
    assert np.all(vs.V_x1[:, 0] == 0.0) and np.all(vs.V_x2[:, 0] == 0.0)
    for G in (vs.V_x1, vs.V_x2):
        assert np.max(np.abs(G[:, 1:3] - G[0, 1:3])) <= 1e-13


def test_collapsed_vertex_is_finite():
    vs = basis.eval_grad_vandermonde(6, np.array([[-1.0, 1.0]]))
    assert np.all(np.isfinite(vs.V)) and np.all(np.isfinite(vs.V_x1)) and np.all(np.isfinite(vs.V_x2))
    # limit along a line approaching the vertex
    near = basis.eval_grad_vandermonde(6, np.array([[-1.0 + 1e-9, 1.0 - 2e-9]]))
    np.testing.assert_allclose(vs.V, near.V, atol=1e-6)
    np.testing.assert_allclose(vs.V_x1, near.V_x1, atol=1e-5)


def test_domain_error():
    with pytest.raises(basis.DomainError):
        basis.eval_vandermonde(2, np.array([[0.5, 0.5]]))


def test_eval_on_curve_matches_direct_substitution():
    t = np.linspace(-1, 1, 7)
    np.testing.assert_allclose(
        basis.eval_on_curve(4, t, (-1, -1), (1, -1)), basis.eval_vandermonde(4, np.column_stack([t, -np.ones_like(t)])),
        atol=1e-14,
    )
    s = (t + 1) / 2 * 2 - 1
    np.testing.assert_allclose(
        basis.eval_on_curve(4, t, (1, -1), (-1, 1)), basis.eval_vandermonde(4, np.column_stack([-s, s])), atol=1e-14
    )


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 1), st.floats(0, 1))
def test_eval_on_curve_any_segment(a, b, c, d):
    def clamp(u, v):
        # fold into the triangle
        return (u, v) if u + v <= 0 else (-v, -u)

    p0, p1 = clamp(a, b), clamp(2 * c - 1, 2 * d - 1)
    t = np.linspace(-1, 1, 5)
    pts = 0.5 * (1 - t)[:, None] * np.array(p0) + 0.5 * (1 + t)[:, None] * np.array(p1)
    np.testing.assert_allclose(basis.eval_on_curve(3, t, p0, p1), basis.eval_vandermonde(3, pts), atol=1e-14)


def test_monomial_vandermonde_gradients():
    pts = np.array([[-0.5, -0.25], [0.1, -0.9]])
    vs = basis.monomial_vandermonde(2, pts)
    x1, x2 = pts.T
    np.testing.assert_allclose(vs.V[:, 4], x1 * x2)
    np.testing.assert_allclose(vs.V_x1[:, 3], 2 * x1)
    np.testing.assert_allclose(vs.V_x2[:, 5], 2 * x2)
