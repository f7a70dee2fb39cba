import math

import numpy as np
import pytest

from oproj.errors import DegenerateSubspaceError, FeatureLookupError
from oproj.linalg import FeatureMatrix, FeatureVector, orthonormalize
from oproj.transforms import TransformSet, build_removal_candidates, expand_feature


def fv(name, values):
    return FeatureVector(name, np.asarray(values, dtype=float))


class TestTransformSet:
    def test_defaults(self):
        ts = TransformSet()
        assert ts.enable_log and ts.enable_exp
        assert ts.poly_degrees == (2, 3)
        assert ts.exp_clip == 20.0
        assert ts.count == 4

    def test_degree_below_two_rejected(self):
        with pytest.raises(ValueError, match="degrees"):
            TransformSet(poly_degrees=(1,))

    def test_nonpositive_clip_rejected(self):
        with pytest.raises(ValueError, match="exp_clip"):
            TransformSet(exp_clip=0.0)

    def test_degrees_sorted_and_deduped(self):
        ts = TransformSet(poly_degrees=(3, 2, 3))
        assert ts.poly_degrees == (2, 3)

    def test_none_is_empty(self):
        ts = TransformSet.none()
        assert ts.count == 0


class TestExpandFeature:
    def test_square_only(self):
        out = expand_feature(fv("x", [1, 2, 3]), TransformSet(False, (2,), False))
        assert len(out) == 1
        assert out[0].name == "x__pow2"
        np.testing.assert_array_equal(out[0].values, [1, 4, 9])

    def test_log_shifted(self):
        out = expand_feature(fv("x", [0, 1]), TransformSet(True, (), False))
        assert out[0].name == "x__log"
        np.testing.assert_allclose(out[0].values, [math.log(1), math.log(2)], rtol=1e-15)

    def test_exp_matches_scalar_oracle(self):
        # Oracle: per-element math.exp on the standardized values.
        vals = np.array([-1.0, 0.0, 1.0])
        std = (vals - vals.mean()) / vals.std()
        out = expand_feature(fv("x", std), TransformSet(False, (), True, exp_clip=20.0))
        assert out[0].name == "x__exp"
        expected = np.array([math.exp(v) for v in std])
        np.testing.assert_allclose(out[0].values, expected, rtol=1e-15)
        assert np.all(np.isfinite(out[0].values))

    def test_exp_clip_keeps_outputs_finite(self):
        out = expand_feature(fv("x", [-1e6, 0.0, 1e6]), TransformSet(False, (), True))
        assert np.all(np.isfinite(out[0].values))
        assert out[0].values.max() == math.exp(20.0)

    def test_fixed_order_and_count(self, rng):
        x = fv("x", rng.standard_normal(20))
        ts = TransformSet(True, (2, 3), True)
        out = expand_feature(x, ts)
        assert [v.name for v in out] == ["x__log", "x__pow2", "x__pow3", "x__exp"]
        assert len(out) == ts.count

    def test_totality_on_nasty_inputs(self, rng):
        for _ in range(10):
            x = fv("x", rng.standard_normal(30) * 1e3)
            out = expand_feature(x, TransformSet())
            for v in out:
                assert np.all(np.isfinite(v.values))

    def test_count_property(self):
        assert expand_feature(fv("x", [1, 2]), TransformSet.none()) == []
        assert len(expand_feature(fv("x", [1, 2]), TransformSet(True, (2,), False))) == 2


class TestBuildRemovalCandidates:
    def test_all_disabled_reduces_to_feature_alone(self, rng):
        m = FeatureMatrix.from_arrays(["a", "b"], rng.standard_normal((10, 2)))
        cands = build_removal_candidates(m, "a", TransformSet.none())
        assert len(cands) == 1
        np.testing.assert_array_equal(cands[0].values, m.column("a").values)

    def test_concatenation_order(self):
        m = FeatureMatrix((fv("x", [1, 2, 3]), fv("y", [4, 5, 6])))
        cands = build_removal_candidates(m, "x", TransformSet(False, (2,), False))
        assert [c.name for c in cands] == ["x", "x__pow2"]
        np.testing.assert_array_equal(cands[1].values, [1, 4, 9])

    def test_unknown_feature(self):
        m = FeatureMatrix((fv("x", [1, 2]),))
        with pytest.raises(FeatureLookupError):
            build_removal_candidates(m, "zz", TransformSet())

    def test_constant_column_rank_oracle(self):
        # Oracle: the candidate stack of a constant column has matrix rank 1,
        # so all but one candidate must be dropped downstream.
        m = FeatureMatrix((fv("c", [5.0, 5.0, 5.0]), fv("d", [1.0, 2.0, 3.0])))
        cands = build_removal_candidates(m, "c", TransformSet())
        stacked = np.column_stack([c.values for c in cands])
        rank = np.linalg.matrix_rank(stacked)
        assert rank == 1
        basis = orthonormalize(cands)
        assert basis.dropped_count == len(cands) - 1
        assert len(basis.vectors) == 1

    def test_zero_column_with_no_transforms_degenerate(self):
        m = FeatureMatrix((fv("z", [0.0, 0.0]), fv("d", [1.0, 2.0])))
        cands = build_removal_candidates(m, "z", TransformSet.none())
        with pytest.raises(DegenerateSubspaceError):
            orthonormalize(cands)
