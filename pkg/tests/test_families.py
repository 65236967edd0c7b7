import math

import numpy as np
import pytest

from evochain.algebra import baric_check, nilpotent_classify, square
from evochain.families import (
    FamilyError,
    TripleSampler,
    UndefinedMatrixError,
    baric_boundary_distance,
    ck_residual,
    make_family,
    matrix_at,
    nilpotent_boundary_distance,
    predicted_baric,
    predicted_idempotents,
    predicted_nilpotent_unique,
    rank1_factors,
    verify_ck,
)

from conftest import random_family


def f1(h="t", f="0", g="0"):
    return make_family("F1", {"h": h, "f": f, "g": g})


class TestMakeFamily:
    def test_missing_role(self):
        with pytest.raises(FamilyError, match="missing \\['h'\\]"):
            make_family("F1", {"f": "0", "g": "0"})

    def test_unknown_role(self):
        with pytest.raises(FamilyError, match="unknown"):
            make_family("F1", {"h": "t", "f": "0", "g": "0", "q": "1"})

    def test_wrong_variable_for_role(self):
        with pytest.raises(FamilyError, match="may only use variable 's'"):
            make_family("F1", {"h": "t", "f": "t", "g": "0"})

    def test_step_family_needs_threshold(self):
        with pytest.raises(FamilyError, match="threshold"):
            make_family("F5", {"phi": "t", "psi": "t"})

    def test_non_step_family_rejects_threshold(self):
        with pytest.raises(FamilyError, match="no threshold"):
            make_family("F0", a=2.0)

    def test_unknown_kind(self):
        with pytest.raises(FamilyError, match="unknown family kind"):
            make_family("F9")

    def test_custom_needs_nine_entries(self):
        with pytest.raises(FamilyError):
            make_family("CUSTOM", custom=[["s"], ["t"], ["1"]])


class TestMatrixAt:
    def test_f0_zero(self):
        assert np.array_equal(matrix_at(make_family("F0"), 0.5, 2.0).entries, np.zeros((3, 3)))

    def test_f1_display(self):
        M = matrix_at(f1(), 1.0, 2.0)
        expected = np.array([[1, 1, 1], [1, 1, 1], [0, 0, 0]], dtype=float)
        assert np.array_equal(M.entries, expected)

    def test_f1_generic_entries(self):
        M = matrix_at(f1(f="0.2", g="0.5"), 1.0, 2.0)
        assert np.allclose(M.entries, np.tile([[1.2], [0.5], [0.3]], 3))

    def test_f1_undefined_at_h_zero(self):
        fam = f1(h="t - 1")
        with pytest.raises(UndefinedMatrixError, match="h\\(s\\) = 0"):
            matrix_at(fam, 1.0, 2.0)

    def test_f3_display_and_guard(self):
        fam = make_family(
            "F3",
            {"g1": "t", "g2": "2*t", "g3": "1", "psi": "s", "phi": "1"},
        )
        s, t = 1.0, 2.0
        big_phi = 1.0 + 1.0 * 2.0 + 1.0 * 1.0  # g1(s) + psi(s) g2(s) + phi(s) g3(s)
        expected = np.outer([1.0, 1.0, 1.0], [2.0, 4.0, 1.0]) / big_phi
        assert np.allclose(matrix_at(fam, s, t).entries, expected)
        degenerate = make_family(
            "F3", {"g1": "t", "g2": "1", "g3": "1", "psi": "0 - s", "phi": "0"}
        )
        with pytest.raises(UndefinedMatrixError, match="Phi"):
            matrix_at(degenerate, 1.0, 2.0)

    def test_f4_display(self):
        fam = make_family("F4", {"g": "exp(t)", "phi": "2", "f": "1"})
        M = matrix_at(fam, 1.0, 2.0)
        e = math.e
        assert np.allclose(M.entries, [[0, 0, 0], [0, 0, 0], [2 / e, 1 / e, e]])

    def test_step_families_zero_at_and_after_threshold(self):
        f5 = make_family("F5", {"phi": "t", "psi": "t^2"}, a=3.0)
        assert np.array_equal(matrix_at(f5, 1.0, 5.0).entries, np.zeros((3, 3)))
        assert np.array_equal(matrix_at(f5, 1.0, 3.0).entries, np.zeros((3, 3)))
        in_branch = matrix_at(f5, 1.0, 2.0)
        assert np.array_equal(in_branch.entries[2], [2.0, 4.0, 1.0])

    def test_time_order_enforced(self):
        with pytest.raises(ValueError, match="0 <= s <= t"):
            matrix_at(make_family("F0"), 2.0, 1.0)

    def test_custom(self):
        fam = make_family("CUSTOM", custom=[["s + t", "0", "0"], ["0"] * 3, ["0"] * 3])
        assert matrix_at(fam, 0.0, 2.0).entries[0, 0] == 2.0


class TestCkResidual:
    def test_f1_exact(self):
        assert ck_residual(f1(), 1.0, 1.5, 2.0) <= 1e-12

    def test_f0_exact_zero(self):
        assert ck_residual(make_family("F0"), 0.0, 1.0, 2.0) == 0.0

    def test_custom_non_solution(self):
        fam = make_family("CUSTOM", custom=[["s + t", "0", "0"], ["0"] * 3, ["0"] * 3])
        # a11[0,2] = 2 vs product entry (0+1)*(1+2) = 3
        assert ck_residual(fam, 0.0, 1.0, 2.0) == pytest.approx(1.0)

    def test_triple_order_enforced(self):
        with pytest.raises(ValueError):
            ck_residual(make_family("F0"), 0.0, 2.0, 1.0)


class TestVerifyCk:
    @pytest.mark.parametrize("kind", ["F1", "F2", "F3", "F4", "F5"])
    def test_families_pass(self, kind):
        rng = np.random.default_rng(42)
        fam = random_family(kind, rng)
        report = verify_ck(fam, TripleSampler(count=100, seed=1), tol=1e-9)
        assert report.passed, f"{kind}: residual {report.max_residual}"

    def test_f0_residual_zero(self):
        report = verify_ck(make_family("F0"), TripleSampler(count=20, seed=2))
        assert report.passed
        assert report.max_residual == 0.0

    def test_step_family_across_threshold(self):
        fam = make_family("F2", {"phi": "s", "psi": "0.5*s"}, a=2.0)
        report = verify_ck(fam, TripleSampler(count=200, window=(0.1, 4.0), seed=3))
        assert report.passed

    def test_custom_non_solution_fails(self):
        fam = make_family("CUSTOM", custom=[["s + t", "0", "0"], ["0"] * 3, ["0"] * 3])
        report = verify_ck(fam, TripleSampler(count=50, seed=4))
        assert not report.passed


class TestPredictedBaric:
    def test_f3_never(self):
        fam = make_family(
            "F3", {"g1": "t", "g2": "t", "g3": "t", "psi": "1", "phi": "1"}
        )
        assert predicted_baric(fam, 1.0, 2.0) is False

    def test_f4_nonzero_g(self):
        fam = make_family("F4", {"g": "exp(t)", "phi": "1", "f": "1"})
        assert predicted_baric(fam, 1.0, 2.0) is True

    def test_f5_after_threshold(self):
        fam = make_family("F5", {"phi": "t", "psi": "t"}, a=3.0)
        assert predicted_baric(fam, 1.0, 5.0) is False
        assert predicted_baric(fam, 1.0, 2.0) is True

    @pytest.mark.parametrize(
        "f,g,expected",
        [
            ("1/s", "1/s", True),  # g = f = 1/h(s)
            ("-1/s", "-1/s", True),  # g = f = -1/h(s)
            ("-1/s", "1/s", True),  # g = -f = 1/h(s)
            ("1/s", "-1/s", False),
            ("0.3", "0.3", False),
        ],
    )
    def test_f1_branches(self, f, g, expected):
        assert predicted_baric(f1(f=f, g=g), 1.0, 2.0) is expected

    def test_matches_computed_on_random_cells(self):
        rng = np.random.default_rng(5)
        for kind in ["F0", "F1", "F2", "F3", "F4", "F5"]:
            fam = random_family(kind, rng)
            for _ in range(50):
                s, t = np.sort(rng.uniform(0.1, 3.0, 2))
                if baric_boundary_distance(fam, s, t) <= 1e-3:
                    continue
                computed = baric_check(matrix_at(fam, s, t)) is not None
                assert computed == predicted_baric(fam, s, t), (kind, s, t)


class TestPredictedNilpotent:
    def test_f1_interior(self):
        assert predicted_nilpotent_unique(f1(f="0.2", g="0.5"), 1.0, 2.0) is True

    def test_f4_always_false(self):
        fam = make_family("F4", {"g": "exp(t)", "phi": "1", "f": "1"})
        assert predicted_nilpotent_unique(fam, 1.0, 2.0) is False

    def test_f2_interior(self):
        fam = make_family("F2", {"phi": "0.5", "psi": "-0.5"}, a=3.0)
        assert predicted_nilpotent_unique(fam, 1.0, 2.0) is True
        assert predicted_nilpotent_unique(fam, 1.0, 4.0) is False

    def test_f3_not_covered(self):
        fam = make_family(
            "F3", {"g1": "t", "g2": "t", "g3": "t", "psi": "1", "phi": "1"}
        )
        assert predicted_nilpotent_unique(fam, 1.0, 2.0) is None

    def test_matches_classifier_on_random_cells(self):
        rng = np.random.default_rng(6)
        for kind in ["F0", "F1", "F2", "F4", "F5"]:
            fam = random_family(kind, rng)
            for _ in range(50):
                s, t = np.sort(rng.uniform(0.1, 3.0, 2))
                if nilpotent_boundary_distance(fam, s, t) <= 1e-3:
                    continue
                unique = nilpotent_classify(matrix_at(fam, s, t)).unique
                assert unique == predicted_nilpotent_unique(fam, s, t), (kind, s, t)


class TestPredictedIdempotents:
    def test_f1_ratio_point(self):
        points = predicted_idempotents(f1(), 1.0, 2.0)
        assert len(points) == 2
        assert np.allclose(points[1], 0.5)

    def test_f2_after_threshold_zero_only(self):
        fam = make_family("F2", {"phi": "s", "psi": "s"}, a=2.0)
        assert len(predicted_idempotents(fam, 1.0, 3.0)) == 1
        assert len(predicted_idempotents(fam, 0.5, 1.0)) == 2

    def test_f5_coordinate_order(self):
        fam = make_family("F5", {"phi": "0.3", "psi": "0.7"}, a=3.0)
        points = predicted_idempotents(fam, 1.0, 2.0)
        assert np.allclose(points[1], [0.3, 0.7, 1.0])

    def test_f0_zero_only(self):
        assert len(predicted_idempotents(make_family("F0"), 0.0, 1.0)) == 1

    def test_all_points_satisfy_fixed_point_system(self):
        rng = np.random.default_rng(8)
        for kind in ["F0", "F1", "F2", "F3", "F4", "F5"]:
            fam = random_family(kind, rng)
            for _ in range(30):
                s, t = np.sort(rng.uniform(0.1, 3.0, 2))
                M = matrix_at(fam, s, t)
                for p in predicted_idempotents(fam, s, t):
                    residual = np.max(np.abs(square(M, p) - p))
                    assert residual <= 1e-8 * M.scale, (kind, s, t, p)


class TestRank1Factors:
    def test_outer_product_reproduces_matrix(self):
        rng = np.random.default_rng(9)
        for kind in ["F0", "F1", "F2", "F3", "F4", "F5"]:
            fam = random_family(kind, rng)
            for _ in range(20):
                s, t = np.sort(rng.uniform(0.1, 3.0, 2))
                u, v = rank1_factors(fam, s, t)
                assert np.allclose(np.outer(u, v), matrix_at(fam, s, t).entries)
