import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cgwish import datasets
from cgwish.errors import (
    CliqueNotPositiveDefinite,
    DimensionCapExceeded,
    EdgeNotPresent,
    NotInPG,
    NotPositiveDefinite,
)
from cgwish.graph import Graph, clique_decomposition, perfect_vertex_order, random_decomposable_graph
from cgwish.linalg import (
    CholFactor,
    IncompleteMatrix,
    check_in_pg,
    dLinv_dL,
    jacobian_qg_to_pg,
    jacobian_theta_to_sigma,
    log_jacobian_qg_to_pg,
    log_jacobian_theta_to_sigma,
    modified_cholesky,
    qg_to_pg,
    reconstruct,
    structural_zero_row,
    submatrices,
    trace_hessian_entry,
    tri_inverse,
    tri_inverse_pathsum,
)

A4 = Graph.path(4)
H = 1e-6


def random_unit_lower(g, rng):
    return CholFactor.random(g, rng).L


def trace_objective(L, D, U):
    Sigma = (L * D) @ L.T
    return np.trace(np.linalg.solve(Sigma, U))


def numeric_jacobian(fun, x, h=1e-6):
    y0 = fun(x)
    J = np.empty((y0.size, x.size))
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        J[:, k] = (fun(x + e) - fun(x - e)) / (2 * h)
    return J


class TestModifiedCholesky:
    def test_identity(self):
        f = modified_cholesky(np.eye(3))
        np.testing.assert_array_equal(f.L, np.eye(3))
        np.testing.assert_array_equal(f.D, np.ones(3))

    def test_two_by_two(self):
        f = modified_cholesky(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert f.L[1, 0] == pytest.approx(0.5)
        np.testing.assert_allclose(f.D, [2.0, 1.5])

    def test_yeast_roundtrip(self, rng):
        g = datasets.yeast_graph()
        for _ in range(20):
            S = reconstruct(CholFactor.random(g, rng))
            f = modified_cholesky(S, g)
            np.testing.assert_allclose(reconstruct(f), S, rtol=0, atol=1e-10 * np.abs(S).max())
            assert np.all(f.L[np.tril(~g.pattern(), -1)] == 0.0)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 15), st.integers(0, 2**32 - 1))
    def test_roundtrip_random(self, m, seed):
        rng = np.random.default_rng(seed)
        g = random_decomposable_graph(m, rng)
        g = g.relabel(perfect_vertex_order(g))
        for _ in range(5):
            S = reconstruct(CholFactor.random(g, rng))
            back = reconstruct(modified_cholesky(S, g))
            np.testing.assert_allclose(back, S, rtol=0, atol=1e-10 * np.abs(S).max())

    def test_not_pd(self):
        with pytest.raises(NotPositiveDefinite):
            modified_cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_order_not_in_sd(self, rng):
        # the path relabelled 2,1,3,4 has fill in the other direction
        h = A4.relabel((1, 3, 2, 4))
        S = reconstruct(CholFactor.random(A4, rng))
        pos = np.array([0, 2, 1, 3])
        Sh = np.empty_like(S)
        Sh[np.ix_(pos, pos)] = S
        with pytest.raises(NotInPG):
            modified_cholesky(Sh, h)


class TestReconstruct:
    def test_identity(self):
        np.testing.assert_array_equal(reconstruct(CholFactor.identity(3)), np.eye(3))

    def test_path_factor(self):
        L = np.eye(4)
        L[1, 0] = L[2, 1] = L[3, 2] = 0.5
        S = reconstruct(CholFactor(L, np.ones(4)))
        assert S[2, 0] == S[3, 0] == S[3, 1] == 0.0
        check_in_pg(S, A4)

    def test_inverse_of_factorisation(self, rng):
        for _ in range(100):
            m = int(rng.integers(1, 8))
            A = rng.normal(size=(m, m + 2))
            S = A @ A.T
            np.testing.assert_allclose(reconstruct(modified_cholesky(S)), S, atol=1e-10)


class TestTriangularInverse:
    def test_trivial(self):
        np.testing.assert_array_equal(tri_inverse(np.eye(3)), np.eye(3))
        np.testing.assert_array_equal(tri_inverse_pathsum(np.eye(3)), np.eye(3))
        assert tri_inverse(np.array([[1.0, 0.0], [0.7, 1.0]]))[1, 0] == pytest.approx(-0.7)

    def test_two_paths(self):
        a, b, c = 0.3, -1.2, 0.8
        L = np.array([[1, 0, 0], [a, 1, 0], [c, b, 1.0]])
        assert tri_inverse_pathsum(L)[2, 0] == pytest.approx(a * b - c)

    def test_cap(self):
        with pytest.raises(DimensionCapExceeded):
            tri_inverse_pathsum(np.eye(13))

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 10), st.integers(0, 2**32 - 1))
    def test_pathsum_matches_solve(self, m, seed):
        rng = np.random.default_rng(seed)
        g = random_decomposable_graph(m, rng, shuffle=False)
        L = random_unit_lower(g, rng)
        np.testing.assert_allclose(tri_inverse_pathsum(L), tri_inverse(L), atol=1e-10)


class TestStructuralZeros:
    def test_path(self):
        assert structural_zero_row(A4, 3) == {4}

    def test_complete_and_empty(self):
        assert structural_zero_row(Graph.complete(5), 5) == set()
        assert structural_zero_row(Graph.empty(4), 2) == {1, 3, 4}

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 9), st.integers(0, 2**32 - 1))
    def test_matches_numeric(self, m, seed):
        rng = np.random.default_rng(seed)
        g = random_decomposable_graph(m, rng)
        Ns = [tri_inverse(random_unit_lower(g, rng)) for _ in range(50)]
        for v in g.vertices:
            numeric = {w for w in g.vertices if w != v
                       and all(abs(N[v - 1, w - 1]) < 1e-12 for N in Ns)}
            assert structural_zero_row(g, v) == numeric


class TestDerivatives:
    def test_own_entry(self, rng):
        L = random_unit_lower(Graph.complete(4), rng)
        for u, v in [(2, 1), (4, 2), (3, 1)]:
            assert dLinv_dL(L, u, v)[u - 1, v - 1] == pytest.approx(-1.0)

    def test_missing_edge(self):
        with pytest.raises(EdgeNotPresent):
            dLinv_dL(np.eye(4), 3, 1, g=A4)

    def test_finite_differences(self, rng):
        for _ in range(100):
            m = int(rng.integers(2, 7))
            L = random_unit_lower(Graph.complete(m), rng)
            u = int(rng.integers(2, m + 1))
            v = int(rng.integers(1, u))
            E = np.zeros((m, m))
            E[u - 1, v - 1] = H
            fd = (tri_inverse(L + E) - tri_inverse(L - E)) / (2 * H)
            got = dLinv_dL(L, u, v)
            np.testing.assert_allclose(got, np.tril(fd, -1), atol=1e-5)
            # rows above u never move
            assert np.all(got[: u - 1] == 0.0)

    def test_hessian_hand_value(self):
        f = CholFactor.identity(2)
        assert trace_hessian_entry(f, np.eye(2), 1, 2, 2) == pytest.approx(2.0)

    def test_hessian_second_differences(self, rng):
        for _ in range(100):
            m = int(rng.integers(2, 6))
            g = Graph.complete(m)
            f = CholFactor.random(g, rng, scale=0.5)
            A = rng.normal(size=(m, m + 2))
            U = A @ A.T
            v = int(rng.integers(1, m))
            u, u2 = (int(x) for x in rng.integers(v + 1, m + 1, size=2))
            h = 1e-4

            def obj(a, b):
                L = f.L.copy()
                L[u - 1, v - 1] += a
                L[u2 - 1, v - 1] += b
                return trace_objective(L, f.D, U)

            if u == u2:
                fd = (obj(h, 0) - 2 * obj(0, 0) + obj(-h, 0)) / h**2
            else:
                fd = (obj(h, h) - obj(h, -h) - obj(-h, h) + obj(-h, -h)) / (4 * h * h)
            got = trace_hessian_entry(f, U, v, u, u2)
            assert got == pytest.approx(fd, rel=1e-4, abs=1e-4)


class TestJacobians:
    def test_identity_factor(self, rng):
        g = random_decomposable_graph(6, rng)
        assert jacobian_theta_to_sigma(CholFactor.identity(6), g) == 1.0

    def test_path_hand_value(self):
        f = CholFactor(np.eye(4), np.array([1.0, 2.0, 3.0, 4.0]))
        assert jacobian_theta_to_sigma(f, A4) == pytest.approx(6.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_theta_numeric(self, seed):
        rng = np.random.default_rng(seed)
        g = random_decomposable_graph(5, rng)
        g = g.relabel(perfect_vertex_order(g))
        edges = sorted(g.edges)
        rows = [(i, i) for i in g.vertices] + edges
        f = CholFactor.random(g, rng, d_range=(0.5, 3.0))

        def fwd(theta):
            L = np.eye(g.m)
            for k, (i, j) in enumerate(edges):
                L[i - 1, j - 1] = theta[k]
            S = (L * theta[len(edges):]) @ L.T
            return np.array([S[i - 1, j - 1] for i, j in rows])

        theta = np.concatenate([[f.L[i - 1, j - 1] for i, j in edges], f.D])
        det = abs(np.linalg.det(numeric_jacobian(fwd, theta)))
        assert jacobian_theta_to_sigma(f, g) == pytest.approx(det, rel=1e-4)
        assert log_jacobian_theta_to_sigma(f, g) == pytest.approx(np.log(det), abs=1e-4)

    def test_qg_identity(self):
        dec = clique_decomposition(A4)
        x = IncompleteMatrix.project(np.eye(4), A4)
        assert jacobian_qg_to_pg(x, dec) == pytest.approx(1.0)

    @pytest.mark.parametrize("g", [A4, Graph(4, [(2, 1), (3, 1), (3, 2), (4, 3)]),
                                   Graph(5, [(2, 1), (3, 2), (4, 2), (5, 4)])])
    def test_qg_numeric(self, g, rng):
        dec = clique_decomposition(g)
        Sigma = np.linalg.inv(reconstruct(CholFactor.random(g, rng)))
        # a point of Q_G: the projection of any positive definite matrix
        rows = [(i, i) for i in g.vertices] + sorted(g.edges)

        def sym_from(vals):
            X = np.full((g.m, g.m), np.nan)
            for k, (i, j) in enumerate(rows):
                X[i - 1, j - 1] = X[j - 1, i - 1] = vals[k]
            return X

        def fwd(vals):
            S = qg_to_pg(IncompleteMatrix(sym_from(vals), g), dec)
            return np.array([S[i - 1, j - 1] for i, j in rows])

        x0 = np.array([Sigma[i - 1, j - 1] for i, j in rows])
        det = abs(np.linalg.det(numeric_jacobian(fwd, x0)))
        x = IncompleteMatrix(sym_from(x0), g)
        assert jacobian_qg_to_pg(x, dec) == pytest.approx(det, rel=1e-4)

    def test_qg_map_inverts_completion(self, rng):
        g = Graph(5, [(2, 1), (3, 2), (4, 2), (5, 4), (4, 3)])
        dec = clique_decomposition(g)
        A = rng.normal(size=(5, 8))
        X = A @ A.T
        K = qg_to_pg(IncompleteMatrix.project(X, g), dec)
        assert np.all(K[~g.pattern()] == 0.0)
        # the completion agrees with x on the pattern
        completion = np.linalg.inv(K)
        np.testing.assert_allclose(completion[g.pattern()], X[g.pattern()], atol=1e-10)

    def test_qg_bad_clique(self):
        X = np.eye(4)
        X[1, 0] = X[0, 1] = 2.0
        dec = clique_decomposition(A4)
        with pytest.raises(CliqueNotPositiveDefinite):
            log_jacobian_qg_to_pg(IncompleteMatrix.project(X, A4), dec)


class TestSubmatrices:
    def test_empty_lower(self):
        lo, full = submatrices(np.eye(3), Graph.complete(3), 1)[:2]
        assert lo.shape == (0, 0)

    def test_complete_last(self, rng):
        A = rng.normal(size=(4, 6))
        U = A @ A.T
        lo, full = submatrices(U, Graph.complete(4), 4)[:2]
        np.testing.assert_array_equal(lo, U[:3, :3])
        np.testing.assert_array_equal(full, U)
