import math

import numpy as np
import pytest

from mcsbp import quadrature as qd
from mcsbp.basis import eval_grad_vandermonde
from mcsbp.operators import compatibility_residual

from conftest import sympy_moment


def test_gauss_legendre_classical_values():
    x, w = qd.gauss_legendre(1)
    assert x.tolist() == [0.0] and w.tolist() == pytest.approx([2.0])
    x, w = qd.gauss_legendre(2)
    np.testing.assert_allclose(x, [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-15)
    np.testing.assert_allclose(w, [1.0, 1.0], atol=1e-15)


def test_gauss_legendre_moments():
    x, w = qd.gauss_legendre(5)
    assert abs(w @ x**9) <= 1e-14
    assert abs(w @ x**8 - 2 / 9) <= 1e-14


@pytest.mark.parametrize("n", [1, 2, 3, 7, 15, 30])
def test_gauss_legendre_exactness_and_symmetry(n):
    x, w = qd.gauss_legendre(n)
    assert qd.max_exact_degree_edge(x, w, cap=min(2 * n - 1, 30)) == min(2 * n - 1, 30)
    np.testing.assert_array_equal(x, -x[::-1])
    assert np.all(w > 0) and abs(w.sum() - 2) <= 1e-14


def test_triangle_moment_against_sympy():
    for a in range(7):
        for b in range(7 - a):
            assert qd.triangle_moment(a, b) == pytest.approx(sympy_moment(a, b), abs=1e-15)


@pytest.mark.parametrize("Q,N", [(4, 9), (8, 25), (12, 49)])
def test_collapsed_rule_sizes(Q, N):
    rule = qd.collapsed_tri_rule(Q)
    assert rule.N == N
    assert abs(rule.weights.sum() - 2.0) <= 1e-13


def test_collapsed_rule_x1x2_moment():
    rule = qd.collapsed_tri_rule(4)
    x1, x2 = rule.nodes.T
    assert abs(rule.weights @ (x1 * x2) - sympy_moment(1, 1)) <= 1e-14


@pytest.mark.parametrize("Q", range(2, 17, 2))
def test_collapsed_rule_positive_and_exact(Q):
    rule = qd.collapsed_tri_rule(Q)
    assert rule.strictly_positive
    assert qd.max_exact_degree(rule, Q) >= Q
    x1, x2 = rule.nodes.T
    assert np.all(x1 > -1) and np.all(x2 > -1) and np.all(x1 + x2 < 0)
    # weights against the independent sympy moments
    for a in range(Q + 1):
        b = Q - a
        assert abs(rule.weights @ (x1**a * x2**b) - sympy_moment(a, b)) <= 1e-12


@pytest.mark.parametrize("Q", [1, 3, 0])
def test_collapsed_rule_rejects_odd(Q):
    with pytest.raises(ValueError):
        qd.collapsed_tri_rule(Q)
    with pytest.raises(ValueError):
        qd.tri_edge_rules(Q)


def test_edge_rules_q4():
    faces = qd.tri_edge_rules(4)
    bottom, left, hyp = faces.edges
    s = math.sqrt(3 / 5)
    np.testing.assert_allclose(bottom.nodes, [[-s, -1], [0, -1], [s, -1]], atol=1e-15)
    assert abs(hyp.weights.sum() - 2 * math.sqrt(2)) <= 1e-13
    for e, length in zip(faces.edges, (2, 2, 2 * math.sqrt(2))):
        assert abs(e.weights.sum() - length) <= 1e-13
        assert abs(np.linalg.norm(e.normal) - 1) <= 1e-15
    np.testing.assert_allclose(hyp.nodes[:, 0], -hyp.nodes[:, 1], atol=0)
    np.testing.assert_allclose(faces.normals[faces.edge_slice(1)], [[-1, 0]] * 3)


@pytest.mark.parametrize("Q", [2, 4, 6, 8, 10, 12])
def test_edge_rule_exactness(Q):
    g, w = qd.gauss_legendre(Q // 2 + 1)
    assert qd.max_exact_degree_edge(g, w) >= Q + 1


@pytest.mark.parametrize("Q", [2, 4, 6, 8, 10, 12])
def test_compatibility(Q):
    P = Q // 2
    vol, faces = qd.collapsed_tri_rule(Q), qd.tri_edge_rules(Q)
    vs = eval_grad_vandermonde(P, vol.nodes)
    Vf = eval_grad_vandermonde(P, faces.nodes).V
    res = compatibility_residual(vs.V, np.stack([vs.V_x1, vs.V_x2]), vol.weights, Vf, faces.weights, faces.normals)
    assert res <= 1e-11


def test_liu_4c():
    rule = qd.liu_4c_rule()
    assert rule.N == 10
    assert not rule.strictly_positive
    assert rule.verified_degree == 4
    verts = np.array([[-1, -1], [1, -1], [-1, 1]])
    for v in verts:
        i = int(np.argmin(np.linalg.norm(rule.nodes - v, axis=1)))
        assert np.allclose(rule.nodes[i], v)
        assert rule.weights[i] == pytest.approx(-1 / 30, abs=1e-15)
    assert abs(rule.weights.sum() - 2) <= 1e-13
    x1, x2 = rule.nodes.T
    for a in range(5):
        for b in range(5 - a):
            assert abs(rule.weights @ (x1**a * x2**b) - sympy_moment(a, b)) <= 1e-13
    assert qd.max_exact_degree(rule) == 4


def test_max_exact_degree_cap():
    assert qd.max_exact_degree(qd.collapsed_tri_rule(6), 6) >= 6
    g, w = qd.gauss_legendre(2)
    assert qd.max_exact_degree_edge(g, w) == 3
    with pytest.raises(ValueError):
        qd.max_exact_degree(qd.collapsed_tri_rule(6), 31)
