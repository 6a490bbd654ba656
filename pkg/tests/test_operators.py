import numpy as np
import pytest

from mcsbp import densela
from mcsbp.basis import eval_grad_vandermonde, monomial_vandermonde
from mcsbp.operators import (
    OperatorError,
    build_lps,
    build_mc,
    build_mc_general,
    build_sbp_minnorm,
    build_upwind,
    collinear_extrapolation,
    export_json,
    import_json,
    minnorm_skew,
    nodal_to_mc,
    nullspace,
    verify_operator,
)
from mcsbp.quadrature import collapsed_tri_rule, liu_4c_rule, tri_edge_rules


def mc(P, Q=None):
    Q = 2 * P if Q is None else Q
    return build_mc(P, collapsed_tri_rule(Q), tri_edge_rules(Q))


def sbp(P, Q=None, method="projection"):
    Q = 2 * P if Q is None else Q
    return build_sbp_minnorm(P, collapsed_tri_rule(Q), tri_edge_rules(Q), method)


@pytest.fixture(scope="module")
def mc3():
    return mc(3)


@pytest.fixture(scope="module")
def sbp3():
    return sbp(3)


def test_mc_accuracy_and_constants(mc3):
    for d in range(2):
        assert np.max(np.abs(mc3.D[d] @ mc3.V - mc3.Vx[d])) <= 1e-12
        assert np.max(np.abs(mc3.D[d] @ np.ones(mc3.N))) <= 1e-13
        assert np.max(np.abs(mc3.Qd[d] @ np.ones(mc3.N))) <= 1e-12
    assert (mc3.N, mc3.NP) == (16, 10)


def test_mc_rank_bounded_by_basis_dim(mc3):
    s = np.linalg.svd(mc3.D[0], compute_uv=False)
    assert np.sum(s > 1e-11 * s[0]) <= 10


@pytest.mark.parametrize("P,Q", [(1, 2), (2, 4), (3, 6), (3, 12), (4, 8), (5, 10), (6, 12)])
def test_mc_lemma_and_projection(P, Q):
    op = mc(P, Q)
    for d in range(2):
        lemma = op.R.T @ ((op.wf * op.nf[:, d])[:, None] * op.R)
        assert np.max(np.abs(op.E[d] - lemma)) <= 1e-11
        np.testing.assert_array_equal(op.E[d], op.Qd[d] + op.Qd[d].T)
    Pi = op.projector
    assert np.max(np.abs(Pi @ Pi - Pi)) <= 1e-12


def test_mc_exactness_gate():
    with pytest.raises(OperatorError, match="exact to degree 4"):
        build_mc(3, liu_4c_rule(), tri_edge_rules(6))


def test_mc_compatibility_gate():
    with pytest.raises(OperatorError, match="compatible"):
        build_mc(3, collapsed_tri_rule(6), tri_edge_rules(2))


def test_mc_accepts_negative_weights():
    op = build_mc(2, liu_4c_rule(), tri_edge_rules(4))
    assert verify_operator(op).passed
    assert not verify_operator(op).positive_norm


def test_mc_general_monomial_basis():
    P, Q = 2, 4
    vol, faces = collapsed_tri_rule(Q), tri_edge_rules(Q)
    vs = monomial_vandermonde(P, vol.nodes)
    fv = monomial_vandermonde(P, faces.nodes)
    gen = build_mc_general(P, vs.V, np.stack([vs.V_x1, vs.V_x2]), fv.V, vol, faces)
    ref = build_mc(P, vol, faces)
    for name in ("D", "E", "R"):
        assert np.max(np.abs(getattr(gen, name) - getattr(ref, name))) <= 1e-11


def test_mc_general_orthonormal_input_and_random_basis(rng):
    P, Q = 3, 6
    vol, faces = collapsed_tri_rule(Q), tri_edge_rules(Q)
    ref = build_mc(P, vol, faces)
    same = build_mc_general(P, ref.V, ref.Vx, ref.Vf, vol, faces)
    assert np.max(np.abs(same.D - ref.D)) <= 1e-12
    T = np.eye(ref.NP) + 0.3 * rng.standard_normal((ref.NP, ref.NP))
    rot = build_mc_general(P, ref.V @ T, np.stack([ref.Vx[d] @ T for d in range(2)]), ref.Vf @ T, vol, faces)
    assert np.max(np.abs(rot.D[0] - ref.D[0])) <= 1e-10


def test_mc_general_singular_mass():
    vol, faces = collapsed_tri_rule(4), tri_edge_rules(4)
    vs = monomial_vandermonde(2, vol.nodes)
    V = vs.V.copy()
    V[:, 1] = V[:, 0]
    with pytest.raises(OperatorError):
        build_mc_general(2, V, np.stack([vs.V_x1, vs.V_x2]), monomial_vandermonde(2, faces.nodes).V, vol, faces)


def test_nodal_to_mc_fixed_point_and_sbp_input(mc3, sbp3):
    np.testing.assert_allclose(nodal_to_mc(mc3.D[0], mc3.V, mc3.w, mc3.Vx[0]), mc3.D[0], atol=1e-12)
    out = nodal_to_mc(sbp3.D[0], sbp3.V, sbp3.w, sbp3.Vx[0])
    assert np.max(np.abs(out - mc3.D[0])) <= 1e-10


def test_nodal_to_mc_annihilates_nullspace_perturbation(mc3, rng):
    Z = nullspace(mc3)
    C = rng.standard_normal((Z.shape[1], Z.shape[1]))
    Dp = mc3.D[0] + Z @ C @ (Z.T * mc3.w)
    assert np.max(np.abs(Dp - mc3.D[0])) > 1e-2
    np.testing.assert_allclose(nodal_to_mc(Dp, mc3.V, mc3.w, mc3.Vx[0]), mc3.D[0], atol=1e-11)


def test_nodal_to_mc_rejects_inexact(mc3):
    bad = mc3.D[0].copy()
    bad[0, 0] += 1e-3
    with pytest.raises(OperatorError, match="residual"):
        nodal_to_mc(bad, mc3.V, mc3.w, mc3.Vx[0])


@pytest.mark.parametrize("P", [1, 2, 3, 4, 5])
def test_sbp_definition(P):
    op = sbp(P)
    r = verify_operator(op)
    assert r.passed, r.as_dict()
    assert max(r.accuracy_residual, r.sbp_residual, r.boundary_accuracy_residual) <= 1e-10


def test_sbp_boundary_accuracy_against_edge_quadrature(sbp3):
    lhs = sbp3.V.T @ sbp3.E[0] @ sbp3.V
    rhs = sbp3.Vf.T @ ((sbp3.wf * sbp3.nf[:, 0])[:, None] * sbp3.Vf)
    assert np.max(np.abs(lhs - rhs)) <= 1e-11


def test_sbp_differs_from_mc(mc3, sbp3):
    assert np.max(np.abs(sbp3.D[0] - mc3.D[0])) > 1e-3


def test_sbp_boundary_operator_is_sparse(sbp3):
    n = 4
    assert np.all(np.count_nonzero(sbp3.R, axis=1) == n)


def test_sbp_needs_collapsed_rule():
    with pytest.raises(OperatorError):
        build_sbp_minnorm(2, liu_4c_rule(), tri_edge_rules(4))
    with pytest.raises(OperatorError):
        collinear_extrapolation(liu_4c_rule(), tri_edge_rules(4))


@pytest.mark.parametrize("P,Q", [(1, 2), (2, 4), (2, 6)])
def test_minnorm_skew_projection_matches_least_squares(P, Q):
    a = sbp(P, Q, "projection")
    b = sbp(P, Q, "lstsq")
    assert np.max(np.abs(a.Qd - b.Qd)) <= 1e-12


def test_minnorm_skew_is_minimal(sbp3, rng):
    B = sbp3.w[:, None] * sbp3.Vx[0] - 0.5 * sbp3.E[0] @ sbp3.V
    S = minnorm_skew(sbp3.V, B)
    np.testing.assert_allclose(S, -S.T, atol=0)
    assert np.max(np.abs(S @ sbp3.V - B)) <= 1e-11
    Z = np.linalg.svd(sbp3.V)[0][:, sbp3.NP:]  # Euclidean complement of range(V)
    for _ in range(5):
        C = rng.standard_normal((Z.shape[1], Z.shape[1]))
        X = Z @ (C - C.T) @ Z.T  # skew, X V = 0
        assert np.linalg.norm(S + 1e-3 * X) > np.linalg.norm(S)


def test_lps_identity_scaling(mc3, rng):
    Pm = build_lps(mc3.V, mc3.w)
    Z = nullspace(mc3)
    assert np.max(np.abs(Pm @ mc3.V)) <= 1e-12
    assert np.max(np.abs(Pm @ Z - mc3.w[:, None] * Z)) <= 1e-12
    np.testing.assert_allclose(Pm, mc3.W @ (np.eye(mc3.N) - mc3.projector), atol=1e-12)
    np.testing.assert_array_equal(Pm, Pm.T)
    assert np.max(np.abs(np.ones(mc3.N) @ Pm)) <= 1e-12
    for _ in range(100):
        x = rng.standard_normal(mc3.N)
        assert x @ Pm @ x >= -1e-12


def test_lps_scaled(mc3, rng):
    lam = rng.uniform(0.5, 2.0, mc3.N)
    Pm = build_lps(mc3.V, mc3.w, lam)
    Z = nullspace(mc3)
    assert np.max(np.abs(Pm @ mc3.V)) <= 1e-12
    assert np.max(np.abs(Z.T @ Pm @ Z - Z.T @ ((mc3.w * lam)[:, None] * Z))) <= 1e-12
    assert np.min(np.linalg.eigvalsh(Pm)) >= -1e-12
    P3 = build_lps(mc3.V, mc3.w, np.full(mc3.N, 3.0))
    assert np.max(np.abs(P3 @ Z - 3.0 * mc3.w[:, None] * Z)) <= 1e-12
    with pytest.raises(OperatorError):
        build_lps(mc3.V, mc3.w, -lam)


def test_upwind_operators(mc3):
    Pm = build_lps(mc3.V, mc3.w)
    Dp, Dm = build_upwind(mc3, Pm)
    np.testing.assert_allclose(Dp - Dm, 2 * Pm / mc3.w[:, None], atol=1e-12)
    assert np.max(np.abs(0.5 * (Dp + Dm) @ mc3.V - mc3.Vx[0])) <= 1e-11
    np.testing.assert_allclose(mc3.w[:, None] * (Dp - mc3.D[0]), Pm, atol=1e-12)
    WDp, WDm = mc3.w[:, None] * Dp, mc3.w[:, None] * Dm
    np.testing.assert_allclose(0.5 * (WDp + WDp.T) - 0.5 * mc3.E[0], Pm, atol=1e-11)
    assert densela.max_symmetric_eig(WDm - 0.5 * mc3.E[0]) <= 1e-12


def test_nullspace(mc3, sbp3):
    Z = nullspace(mc3)
    assert Z.shape == (16, 6)
    for d in range(2):
        assert np.max(np.abs(mc3.D[d] @ Z)) <= 1e-12
    np.testing.assert_allclose(Z.T @ (mc3.w[:, None] * Z), np.eye(6), atol=1e-12)
    assert np.max(np.abs(sbp3.D[0] @ Z)) > 1e-3
    with pytest.raises(OperatorError):
        nullspace(sbp3)
    with pytest.raises(densela.IndefiniteNormError):
        nullspace(build_mc(2, liu_4c_rule(), tri_edge_rules(4)))


def test_verify_operator_detects_corruption():
    op = mc(4)
    r = verify_operator(op)
    assert r.passed and max(r.accuracy_residual, r.boundary_accuracy_residual, r.compatibility_residual) <= 1e-11
    D = op.D.copy()
    D[0, 2, 3] += 1e-3
    from dataclasses import replace

    bad = verify_operator(replace(op, D=D))
    assert bad.accuracy_residual == pytest.approx(1e-3, rel=0.5)
    assert not bad.passed


def test_mc_nullspace_dimension_reported(mc3, sbp3):
    assert verify_operator(mc3).nullspace_dim == mc3.N - mc3.NP + 1
    assert verify_operator(sbp3).nullspace_dim == 1


def test_json_round_trip(tmp_path, mc3):
    path = tmp_path / "op.json"
    text = export_json(mc3, path)
    assert text == export_json(mc3)
    back = import_json(path)
    for name in ("w", "V", "Vx", "D", "Qd", "E", "R", "Vf", "wf", "nf", "nodes", "face_nodes"):
        np.testing.assert_array_equal(getattr(back, name), getattr(mc3, name))
    assert verify_operator(back).passed
    import json

    mats = json.loads(text)["matrices"]
    for key in ("W", "V", "D_x1", "D_x2", "Q_x1", "E_x2", "R_Gamma", "W_Gamma", "N_Gamma"):
        assert key in mats
