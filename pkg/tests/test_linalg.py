import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oproj.errors import (
    DegenerateFeatureError,
    DegenerateSubspaceError,
    DimensionError,
    FeatureLookupError,
)
from oproj.linalg import (
    FeatureMatrix,
    FeatureVector,
    ProjectionBasis,
    dot,
    orthonormalize,
    project_out,
    transform_against_feature,
    transform_against_vector,
)


def fv(name, values):
    return FeatureVector(name, np.asarray(values, dtype=float))


class TestFeatureVector:
    def test_rejects_nan(self):
        with pytest.raises(ValueError, match="non-finite"):
            fv("a", [1.0, np.nan])

    def test_rejects_inf(self):
        with pytest.raises(ValueError, match="non-finite"):
            fv("a", [np.inf, 0.0])

    def test_values_are_read_only(self):
        v = fv("a", [1.0, 2.0])
        with pytest.raises(ValueError):
            v.values[0] = 9.0

    def test_rejects_2d(self):
        with pytest.raises(DimensionError):
            FeatureVector("a", np.zeros((2, 2)))


class TestFeatureMatrix:
    def test_duplicate_names_rejected(self):
        with pytest.raises(DimensionError, match="duplicate"):
            FeatureMatrix((fv("a", [1, 2]), fv("a", [3, 4])))

    def test_length_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            FeatureMatrix((fv("a", [1, 2]), fv("b", [3, 4, 5])))

    def test_needs_two_samples(self):
        with pytest.raises(DimensionError):
            FeatureMatrix((fv("a", [1.0]),))

    def test_lookup_error_names_feature(self):
        m = FeatureMatrix((fv("a", [1, 2]),))
        with pytest.raises(FeatureLookupError, match="'zz'"):
            m.index("zz")

    def test_from_arrays_round_trip(self, rng):
        data = rng.standard_normal((10, 3))
        m = FeatureMatrix.from_arrays(["a", "b", "c"], data)
        np.testing.assert_array_equal(m.as_array(), data)
        assert m.names == ("a", "b", "c")
        assert (m.n, m.k) == (10, 3)


class TestDot:
    def test_orthogonal_plus_aligned(self):
        assert dot(fv("a", [1, 0, 0]), fv("b", [2, 3, 0])) == 2.0

    def test_direct_arithmetic(self):
        assert dot(fv("a", [1, 2]), fv("b", [2, 4])) == 10.0

    def test_zero_annihilates(self):
        assert dot(fv("a", [0, 0]), fv("b", [5, 7])) == 0.0

    def test_symmetric(self, rng):
        a = fv("a", rng.standard_normal(50))
        b = fv("b", rng.standard_normal(50))
        assert dot(a, b) == dot(b, a)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            dot(fv("a", [1, 2]), fv("b", [1, 2, 3]))


class TestProjectOut:
    def test_axis_aligned_removal(self):
        out = project_out(fv("v", [2, 3, 0]), fv("u", [1, 0, 0]))
        np.testing.assert_allclose(out.values, [0, 3, 0], atol=1e-15)

    def test_parallel_vectors_vanish(self):
        out = project_out(fv("v", [2, 4]), fv("u", [1, 2]))
        np.testing.assert_allclose(out.values, [0, 0], atol=1e-15)

    def test_direct_formula(self):
        out = project_out(fv("v", [1, 0]), fv("u", [1, 1]))
        np.testing.assert_allclose(out.values, [0.5, -0.5], rtol=1e-15)

    def test_zero_direction_rejected(self):
        with pytest.raises(DegenerateFeatureError, match="'u'"):
            project_out(fv("v", [1, 2]), fv("u", [0, 0]))

    def test_result_orthogonal_to_direction(self, rng):
        for _ in range(20):
            v = fv("v", rng.standard_normal(40))
            u = fv("u", rng.standard_normal(40))
            out = project_out(v, u)
            assert abs(dot(out, u)) <= 1e-8 * v.norm * u.norm

    def test_idempotent(self, rng):
        v = fv("v", rng.standard_normal(64))
        u = fv("u", rng.standard_normal(64))
        once = project_out(v, u)
        twice = project_out(once, u)
        np.testing.assert_allclose(twice.values, once.values, rtol=0, atol=1e-10 * v.norm)

    def test_norm_never_grows(self, rng):
        for _ in range(20):
            v = fv("v", rng.standard_normal(30))
            u = fv("u", rng.standard_normal(30))
            assert project_out(v, u).norm <= v.norm * (1 + 1e-12)

    def test_linearity(self, rng):
        v = rng.standard_normal(50)
        w = rng.standard_normal(50)
        u = fv("u", rng.standard_normal(50))
        a, b = 2.5, -1.25
        combined = project_out(fv("c", a * v + b * w), u).values
        separate = a * project_out(fv("v", v), u).values + b * project_out(fv("w", w), u).values
        np.testing.assert_allclose(combined, separate, rtol=1e-8, atol=1e-8)

    def test_reconstruction(self, rng):
        v = fv("v", rng.standard_normal(50))
        u = fv("u", rng.standard_normal(50))
        resid = project_out(v, u)
        coef = dot(u, v) / dot(u, u)
        np.testing.assert_allclose(
            resid.values + coef * u.values, v.values, rtol=1e-12, atol=1e-12
        )


@settings(deadline=None, max_examples=50)
@given(
    data=st.lists(
        st.tuples(
            st.floats(-1e6, 1e6, allow_nan=False),
            st.floats(-1e6, 1e6, allow_nan=False),
        ),
        min_size=3,
        max_size=12,
    )
)
def test_project_out_properties_hypothesis(data):
    v = np.array([t[0] for t in data])
    u = np.array([t[1] for t in data])
    n = len(u)
    if np.linalg.norm(u) <= 1e-12 * np.sqrt(n):
        return
    out = project_out(fv("v", v), fv("u", u))
    scale = max(np.linalg.norm(v) * np.linalg.norm(u), 1e-30)
    assert abs(float(np.dot(out.values, u))) <= 1e-8 * scale
    assert out.norm <= np.linalg.norm(v) * (1 + 1e-9) + 1e-12


class TestOrthonormalize:
    def test_already_orthogonal(self):
        basis = orthonormalize([fv("a", [1, 0]), fv("b", [0, 2])])
        assert basis.dropped_count == 0
        np.testing.assert_allclose(basis.vectors[0].values, [1, 0], atol=1e-15)
        np.testing.assert_allclose(basis.vectors[1].values, [0, 1], atol=1e-15)

    def test_duplicate_direction_dropped(self):
        basis = orthonormalize([fv("a", [1, 1]), fv("b", [2, 2])])
        assert basis.dropped_count == 1
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(basis.vectors[0].values, [s, s], rtol=1e-15)

    def test_three_vector_vs_qr_oracle(self):
        # Oracle: numpy's QR factorization of the same 3x3 candidate matrix.
        cands = [fv("a", [1, 0, 0]), fv("b", [1, 1, 0]), fv("c", [1, 1, 1])]
        basis = orthonormalize(cands)
        assert basis.dropped_count == 0
        assert len(basis.vectors) == 3
        q_oracle, _ = np.linalg.qr(np.column_stack([c.values for c in cands]))
        ours = basis.as_array()
        for j in range(3):
            # Columns agree up to sign.
            direction = np.sign(np.dot(q_oracle[:, j], ours[:, j]))
            np.testing.assert_allclose(ours[:, j], direction * q_oracle[:, j], atol=1e-12)

    def test_zero_vector_dropped(self):
        basis = orthonormalize([fv("a", [1, 0]), fv("z", [0, 0])])
        assert basis.dropped_count == 1

    def test_all_dropped_raises(self):
        with pytest.raises(DegenerateSubspaceError):
            orthonormalize([fv("z1", [0, 0]), fv("z2", [0, 0])])

    def test_empty_raises(self):
        with pytest.raises(DegenerateSubspaceError):
            orthonormalize([])

    def test_basis_invariants_random(self, rng):
        for _ in range(10):
            n = 60
            cands = [fv(f"c{j}", rng.standard_normal(n)) for j in range(6)]
            basis = orthonormalize(cands)
            arr = basis.as_array()
            gram = arr.T @ arr
            off = gram - np.eye(arr.shape[1])
            assert np.max(np.abs(off)) <= 1e-10 * n
            for v in basis.vectors:
                assert abs(v.norm - 1.0) <= 1e-10

    def test_near_dependent_candidate_dropped(self, rng):
        base = rng.standard_normal(80)
        nearly = base * 3.0  # exactly dependent after scaling
        basis = orthonormalize([fv("a", base), fv("b", nearly), fv("c", rng.standard_normal(80))])
        assert basis.dropped_count == 1
        assert len(basis.vectors) == 2


class TestProjectionBasisValidation:
    def test_rejects_non_unit(self):
        with pytest.raises(ValueError, match="unit-norm"):
            ProjectionBasis((fv("a", [2, 0]),))

    def test_rejects_non_orthogonal(self):
        s = 1 / np.sqrt(2)
        with pytest.raises(ValueError, match="orthogonal"):
            ProjectionBasis((fv("a", [1, 0]), fv("b", [s, s])))


class TestTransformAgainstFeature:
    def test_already_orthogonal_identity(self):
        m = FeatureMatrix((fv("x1", [1, 0]), fv("x2", [0, 1])))
        basis = orthonormalize([m.column("x1")])
        out = transform_against_feature(m, "x1", basis)
        assert out.names == ("x2",)
        np.testing.assert_allclose(out.column("x2").values, [0, 1], atol=1e-15)

    def test_identical_columns_vanish(self):
        m = FeatureMatrix((fv("x1", [1, 1]), fv("x2", [1, 1])))
        basis = orthonormalize([m.column("x1")])
        out = transform_against_feature(m, "x1", basis)
        np.testing.assert_allclose(out.column("x2").values, [0, 0], atol=1e-12)

    def test_random_matrix_orthogonality_oracle(self, rng):
        # Direct dot-product oracle on a random 200x8 matrix.
        data = rng.standard_normal((200, 8))
        m = FeatureMatrix.from_arrays([f"x{j}" for j in range(8)], data)
        basis = orthonormalize([m.column("x3")])
        out = transform_against_feature(m, "x3", basis)
        assert out.k == 7
        for col in out.columns:
            for q in basis.vectors:
                bound = 1e-8 * max(col.norm * q.norm, 1e-300)
                assert abs(float(np.dot(col.values, q.values))) <= bound

    def test_preserves_order_and_names(self, rng):
        data = rng.standard_normal((40, 5))
        names = ["a", "b", "c", "d", "e"]
        m = FeatureMatrix.from_arrays(names, data)
        basis = orthonormalize([m.column("c")])
        out = transform_against_feature(m, "c", basis)
        assert out.names == ("a", "b", "d", "e")

    def test_unknown_feature(self, rng):
        m = FeatureMatrix.from_arrays(["a", "b"], rng.standard_normal((10, 2)))
        basis = orthonormalize([m.column("a")])
        with pytest.raises(FeatureLookupError):
            transform_against_feature(m, "zz", basis)

    def test_single_column_matrix_rejected(self):
        m = FeatureMatrix((fv("a", [1.0, 2.0]),))
        basis = orthonormalize([m.column("a")])
        with pytest.raises(DimensionError):
            transform_against_feature(m, "a", basis)


class TestTransformAgainstVector:
    def test_matches_project_out_per_column(self, rng):
        data = rng.standard_normal((30, 4))
        m = FeatureMatrix.from_arrays(["a", "b", "c", "d"], data)
        u = m.column("b")
        out = transform_against_vector(m, "b", u)
        assert out.names == ("a", "c", "d")
        for name in out.names:
            expected = project_out(m.column(name), u)
            np.testing.assert_array_equal(out.column(name).values, expected.values)

    def test_orthogonal_design_unchanged(self):
        m = FeatureMatrix((fv("x1", [1, 0, 0]), fv("x2", [0, 1, 0])))
        out = transform_against_vector(m, "x1", m.column("x1"))
        np.testing.assert_allclose(out.column("x2").values, [0, 1, 0], atol=1e-15)
