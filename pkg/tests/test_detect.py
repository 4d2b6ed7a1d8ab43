"""Keypoint extraction: strict maxima, thresholds, ranking, truncation."""

import numpy as np
import pytest

from conftest import GRID_3X3, distinct_grid, interior_strict_maxima
from topokp import DetectConfig, HeightMap, nms_keypoints, persistence_keypoints, truncate_keypoints


class TestNms:
    def test_3x3_scaled_example(self):
        hm = HeightMap(np.asarray(GRID_3X3) / 10.0)
        kps = nms_keypoints(hm, DetectConfig(gamma=0.7))
        assert [(k.row, k.col) for k in kps] == [(1, 1)]
        assert kps[0].score == 0.9

    def test_constant_map_yields_nothing(self):
        hm = HeightMap(np.full((5, 5), 0.9))
        assert nms_keypoints(hm, DetectConfig(gamma=0.0)) == []

    def test_gamma_is_strict(self):
        hm = HeightMap(np.asarray(GRID_3X3) / 10.0)
        assert nms_keypoints(hm, DetectConfig(gamma=0.9)) == []
        assert len(nms_keypoints(hm, DetectConfig(gamma=0.89))) == 1

    def test_boundary_maxima_are_allowed(self):
        vals = np.zeros((4, 4))
        vals[0, 0] = 1.0
        kps = nms_keypoints(HeightMap(vals), DetectConfig(gamma=0.5))
        assert [(k.row, k.col) for k in kps] == [(0, 0)]

    def test_mask_matches_brute_force_interior(self):
        rng = np.random.default_rng(10)
        vals = distinct_grid(rng, 9, 9)
        kps = nms_keypoints(HeightMap(vals), DetectConfig(gamma=-1.0))
        got_interior = {
            (k.row, k.col)
            for k in kps
            if 0 < k.row < 8 and 0 < k.col < 8
        }
        assert got_interior == set(interior_strict_maxima(vals))

    def test_plateau_rejection_toggle(self):
        vals = np.zeros((5, 5))
        vals[2, 2] = vals[2, 3] = 1.0
        strict = nms_keypoints(HeightMap(vals), DetectConfig(gamma=0.5))
        assert strict == []
        loose = nms_keypoints(
            HeightMap(vals), DetectConfig(gamma=0.5, reject_plateaus=False)
        )
        # exactly one winner on the two-pixel plateau, picked by tie order
        assert [(k.row, k.col) for k in loose] == [(2, 3)]

    def test_sorted_by_score_descending(self):
        rng = np.random.default_rng(2)
        kps = nms_keypoints(HeightMap(rng.random((12, 12))), DetectConfig(gamma=0.0))
        scores = [k.score for k in kps]
        assert scores == sorted(scores, reverse=True)

    def test_max_keypoints_truncates(self):
        rng = np.random.default_rng(2)
        hm = HeightMap(rng.random((12, 12)))
        full = nms_keypoints(hm, DetectConfig(gamma=0.0))
        assert len(full) > 3
        top = nms_keypoints(hm, DetectConfig(gamma=0.0, max_keypoints=3))
        assert top == full[:3]


class TestPersistenceKeypoints:
    def test_subset_of_nms(self):
        rng = np.random.default_rng(7)
        vals = distinct_grid(rng, 10, 10)
        hm = HeightMap(vals)
        nms = {(k.row, k.col) for k in nms_keypoints(hm, DetectConfig(gamma=0.2))}
        pers = {(k.row, k.col) for k in persistence_keypoints(hm, 0.0, DetectConfig(gamma=0.2))}
        assert pers <= nms

    def test_min_persistence_filters(self):
        vals = np.asarray(GRID_3X3) / 10.0
        hm = HeightMap(vals)
        assert len(persistence_keypoints(hm, 0.05, DetectConfig(gamma=0.5))) == 1
        assert persistence_keypoints(hm, 0.2, DetectConfig(gamma=0.5)) == []

    def test_carries_persistence_and_score(self):
        hm = HeightMap(np.asarray(GRID_3X3) / 10.0)
        (kp,) = persistence_keypoints(hm, 0.0, DetectConfig(gamma=0.5))
        assert (kp.row, kp.col) == (1, 1)
        assert kp.score == 0.9
        assert kp.persistence == pytest.approx(0.1)

    def test_ranked_by_persistence(self):
        rng = np.random.default_rng(19)
        hm = HeightMap(rng.random((14, 14)))
        kps = persistence_keypoints(hm, 0.0, DetectConfig(gamma=0.0))
        pers = [k.persistence for k in kps]
        assert pers == sorted(pers, reverse=True)


class TestTruncate:
    def test_score_ranking(self):
        rng = np.random.default_rng(1)
        kps = nms_keypoints(HeightMap(rng.random((10, 10))), DetectConfig(gamma=0.0))
        top = truncate_keypoints(kps, 2, "score")
        assert len(top) == 2
        assert top[0].score >= top[1].score

    def test_budget_beyond_available_is_a_no_op(self):
        rng = np.random.default_rng(1)
        kps = nms_keypoints(HeightMap(rng.random((6, 6))), DetectConfig(gamma=0.0))
        assert truncate_keypoints(kps, 10_000, "score") == kps

    def test_persistence_ranking_requires_persistence(self):
        rng = np.random.default_rng(23)
        hm = HeightMap(rng.random((10, 10)))
        kps = persistence_keypoints(hm, 0.0, DetectConfig(gamma=0.0))
        top = truncate_keypoints(kps, 3, "persistence")
        assert [k.persistence for k in top] == sorted(
            (k.persistence for k in kps), reverse=True
        )[:3]


class TestConfigValidation:
    def test_bad_values_rejected(self):
        with pytest.raises(ValueError):
            DetectConfig(max_keypoints=0)
        with pytest.raises(ValueError):
            DetectConfig(ranking="height")
