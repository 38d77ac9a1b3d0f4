import numpy as np
import pytest

from qotalloc.model import DomainError
from qotalloc.simplex import (project_column, project_matrix,
                              projection_threshold, qp_projection_oracle)


class TestHandWorkedCases:
    def test_two_point_example(self):
        # sorted z=(2,0): m=1 passes ((2-1)/1 < 2), m=2 fails ((1)/2 < 0 is
        # false), so the shift is 1 and the projection is (1, 0).
        theta, delta = projection_threshold(np.array([2.0, 0.0]), 1.0)
        assert (theta, delta) == (1.0, 1)
        np.testing.assert_allclose(project_column(np.array([2.0, 0.0]), 1.0),
                                   [1.0, 0.0])

    def test_point_already_on_simplex(self):
        x = np.array([0.5, 0.5])
        np.testing.assert_allclose(project_column(x, 1.0), x)

    def test_constant_vector_any_level(self):
        for c in (-3.0, 0.0, 2.5):
            out = project_column(np.full(4, c), 2.0)
            np.testing.assert_allclose(out, np.full(4, 0.5), atol=1e-15)

    def test_all_negative_shifts_up(self):
        out = project_column(np.array([-5.0, -5.0, -5.0]), 3.0)
        np.testing.assert_allclose(out, [1.0, 1.0, 1.0], atol=1e-15)

    def test_oracle_hand_case(self):
        np.testing.assert_allclose(
            qp_projection_oracle(np.array([2.0, 0.0]), 1.0), [1.0, 0.0])


class TestMatrixForm:
    def test_single_column_matches_column_form(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(5, 1))
        np.testing.assert_allclose(project_matrix(x, 1.5)[:, 0],
                                   project_column(x[:, 0], 1.5))

    def test_identical_columns(self):
        rng = np.random.default_rng(1)
        col = rng.normal(size=4)
        X = np.stack([col, col], axis=1)
        out = project_matrix(X, 2.0)
        np.testing.assert_allclose(out[:, 0], out[:, 1])

    def test_column_permutation_commutes(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(4, 6))
        perm = rng.permutation(6)
        np.testing.assert_allclose(project_matrix(X[:, perm], 1.0),
                                   project_matrix(X, 1.0)[:, perm])

    def test_columns_sum_to_budget(self):
        rng = np.random.default_rng(3)
        for K in (1, 2, 3, 7):
            X = rng.normal(size=(K, 9)) * 10
            out = project_matrix(X, 4.0)
            np.testing.assert_allclose(out.sum(axis=0), 4.0, atol=1e-12 * 4.0)
            assert np.all(out >= 0)

    def test_two_row_fast_path_matches_general(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(2, 50)) * 5
        fast = project_matrix(X, 3.0)
        general = np.stack([project_column(X[:, n], 3.0) for n in range(50)], axis=1)
        np.testing.assert_allclose(fast, general, atol=1e-12)


class TestOracleAgreement:
    def test_matches_active_set_oracle(self):
        rng = np.random.default_rng(123)
        for K in range(1, 9):
            for _ in range(50):
                x = rng.normal(size=K) * rng.uniform(0.1, 10)
                budget = rng.uniform(0.2, 3.0)
                fast = project_column(x, budget)
                exact = qp_projection_oracle(x, budget)
                assert np.max(np.abs(fast - exact)) <= 1e-9

    def test_oracle_refuses_large_inputs(self):
        with pytest.raises(ValueError):
            qp_projection_oracle(np.zeros(13), 1.0)

    def test_oracle_identity_on_simplex(self):
        x = np.array([0.2, 0.3, 0.5])
        np.testing.assert_allclose(qp_projection_oracle(x, 1.0), x, atol=1e-12)


class TestProjectionProperties:
    def test_idempotent(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            x = rng.normal(size=6) * 4
            once = project_column(x, 2.0)
            twice = project_column(once, 2.0)
            assert np.max(np.abs(twice - once)) <= 1e-12

    def test_nonexpansive(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            a = rng.normal(size=5) * 3
            b = rng.normal(size=5) * 3
            pa, pb = project_column(a, 1.0), project_column(b, 1.0)
            assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-12

    def test_order_preserving(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            x = rng.normal(size=6)
            u = project_column(x, 1.0)
            order = np.argsort(x)
            assert np.all(np.diff(u[order]) >= -1e-12)

    def test_scale_invariance(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=5)
        for c in (0.5, 2.0, 1e7):
            np.testing.assert_allclose(project_column(c * x, c * 1.0),
                                       c * project_column(x, 1.0), rtol=1e-12)

    def test_rejects_bad_inputs(self):
        with pytest.raises(DomainError):
            project_column(np.array([np.nan, 1.0]), 1.0)
        with pytest.raises(DomainError):
            project_column(np.array([1.0, 2.0]), 0.0)
