"""Detector loss: closed forms, gradient support, finite-difference agreement."""

import numpy as np
import pytest

from conftest import GRID_3X3
from topokp import (
    CorrespondenceMap,
    HeightMap,
    LossConfig,
    detector_loss,
    gradient_check,
    symmetrized_loss,
)
from topokp.loss import error_at


def ident(shape):
    return CorrespondenceMap.identity(shape)


class TestCorrespondenceMap:
    def test_identity_lookup(self):
        u = ident((2, 3))
        assert u.lookup(1, 2) == (1, 2)
        assert u.shape == (2, 3)

    def test_sentinel_means_undefined(self):
        stacked = np.full((2, 2, 2), -1, dtype=np.int64)
        stacked[0, 0] = (1, 1)
        u = CorrespondenceMap.from_stacked(stacked, (2, 2))
        assert u.lookup(0, 0) == (1, 1)
        assert u.lookup(1, 1) is None
        assert np.array_equal(u.to_stacked(), stacked)

    def test_defined_mask(self):
        stacked = np.full((2, 2, 2), -1, dtype=np.int64)
        stacked[0, 1] = (0, 0)
        u = CorrespondenceMap.from_stacked(stacked, (3, 3))
        assert u.defined.sum() == 1
        assert bool(u.defined[0, 1])

    def test_out_of_bounds_target_rejected(self):
        stacked = np.zeros((2, 2, 2), dtype=np.int64)
        stacked[0, 0] = (5, 0)
        with pytest.raises(ValueError):
            CorrespondenceMap.from_stacked(stacked, (2, 2))

    def test_half_defined_rejected(self):
        rows = np.array([[0, -1]])
        cols = np.array([[0, 2]])
        with pytest.raises(ValueError):
            CorrespondenceMap(rows, cols, (1, 3))


class TestClosedForms:
    def test_identical_maps_identity_u(self):
        hm = HeightMap(GRID_3X3)
        res = detector_loss(hm, hm, ident(hm.shape), LossConfig(alpha=10.0))
        assert res.loss == -1.0
        assert res.n_generators == 1
        expected1 = np.zeros((3, 3))
        expected1[1, 0] = 2.0
        expected1[1, 1] = -2.0
        assert np.array_equal(res.grad_map1, expected1)
        assert np.array_equal(res.grad_map2, np.zeros((3, 3)))

    def test_constant_offset_second_map(self):
        # map2 = map1 + c: both errors are -c, Sim = 2c^2,
        # loss = -Pers(Pers - 2*alpha*c^2) with a single unit-persistence term
        hm = HeightMap(GRID_3X3)
        c = 0.05
        hm2 = HeightMap(np.asarray(GRID_3X3) + c)
        res = detector_loss(hm, hm2, ident(hm.shape), LossConfig(alpha=10.0))
        assert res.loss == pytest.approx(-(1.0 - 10.0 * 2 * c * c))
        term = res.terms[0]
        assert term.sim == pytest.approx(2 * c * c)
        # analytic gradients at the four touched positions
        pers, sim, e = 1.0, 2 * c * c, -c
        assert res.grad_map1[1, 1] == pytest.approx(-2 * pers + 10 * sim + 2 * 10 * pers * e)
        assert res.grad_map1[1, 0] == pytest.approx(2 * pers - 10 * sim + 2 * 10 * pers * e)
        assert res.grad_map2[1, 1] == pytest.approx(-2 * 10 * pers * e)
        assert res.grad_map2[1, 0] == pytest.approx(-2 * 10 * pers * e)

    def test_ramp_has_no_terms(self):
        vals = np.arange(20, dtype=float).reshape(4, 5)
        hm = HeightMap(vals)
        res = detector_loss(hm, hm, ident(hm.shape), LossConfig(alpha=10.0))
        assert res.loss == 0.0
        assert res.terms == ()
        assert not res.grad_map1.any()
        assert not res.grad_map2.any()

    def test_alpha_zero_ignores_second_map(self):
        rng = np.random.default_rng(8)
        m1 = HeightMap(rng.random((10, 10)))
        m2a = HeightMap(rng.random((10, 10)))
        m2b = HeightMap(rng.random((10, 10)))
        cfg = LossConfig(alpha=0.0)
        ra = detector_loss(m1, m2a, ident((10, 10)), cfg)
        rb = detector_loss(m1, m2b, ident((10, 10)), cfg)
        assert ra.loss == rb.loss
        assert np.array_equal(ra.grad_map1, rb.grad_map1)
        assert not ra.grad_map2.any()

    def test_alpha_zero_scaling(self):
        # with alpha = 0 the loss is -sum Pers^2, homogeneous of degree 2
        rng = np.random.default_rng(12)
        vals = rng.random((8, 8))
        cfg = LossConfig(alpha=0.0)
        u = ident((8, 8))
        base = detector_loss(HeightMap(vals), HeightMap(vals), u, cfg)
        scaled = detector_loss(HeightMap(3 * vals), HeightMap(3 * vals), u, cfg)
        assert scaled.loss == pytest.approx(9 * base.loss)

    def test_undefined_targets_zero_the_errors(self):
        hm = HeightMap(GRID_3X3)
        stacked = np.full((3, 3, 2), -1, dtype=np.int64)
        u = CorrespondenceMap.from_stacked(stacked, (3, 3))
        other = HeightMap(np.full((3, 3), 100.0))
        res = detector_loss(hm, other, u, LossConfig(alpha=10.0))
        assert res.loss == -1.0
        assert res.terms[0].sim == 0.0
        assert not res.grad_map2.any()

    def test_error_at_helper(self):
        hm1 = HeightMap([[1.0, 2.0]])
        hm2 = HeightMap([[5.0, 9.0]])
        u = ident((1, 2))
        assert error_at(hm1, hm2, u, (0, 1)) == 2.0 - 9.0
        stacked = np.full((1, 2, 2), -1, dtype=np.int64)
        und = CorrespondenceMap.from_stacked(stacked, (1, 2))
        assert error_at(hm1, hm2, und, (0, 1)) == 0.0


class TestGradientSupport:
    def test_grad_support_is_critical_positions_only(self):
        rng = np.random.default_rng(4)
        m1 = HeightMap(rng.permutation(144).reshape(12, 12) / 144.0)
        m2 = HeightMap(rng.permutation(144).reshape(12, 12) / 144.0)
        res = detector_loss(m1, m2, ident((12, 12)), LossConfig(alpha=10.0))
        touched1 = {t.saddle for t in res.terms} | {t.maximum for t in res.terms}
        nz1 = {tuple(ij) for ij in np.argwhere(res.grad_map1 != 0.0)}
        assert nz1 <= touched1
        nz2 = {tuple(ij) for ij in np.argwhere(res.grad_map2 != 0.0)}
        assert nz2 <= touched1  # identity correspondence maps onto itself

    def test_forward_only_skips_gradients(self):
        hm = HeightMap(GRID_3X3)
        res = detector_loss(hm, hm, ident((3, 3)), LossConfig(), with_grads=False)
        assert res.grad_map1 is None and res.grad_map2 is None
        assert res.loss == -1.0


class TestSymmetrized:
    def test_equal_maps_double_the_one_sided_loss(self):
        hm = HeightMap(GRID_3X3)
        u = ident((3, 3))
        one = detector_loss(hm, hm, u, LossConfig(alpha=10.0))
        two = symmetrized_loss(hm, hm, u, u, LossConfig(alpha=10.0))
        assert two.loss == pytest.approx(2 * one.loss)
        assert np.allclose(two.grad_map1, one.grad_map1 + one.grad_map2)
        assert len(two.terms) == 2 * len(one.terms)

    def test_cross_gradients_land_on_the_right_maps(self):
        rng = np.random.default_rng(17)
        m1 = HeightMap(rng.permutation(64).reshape(8, 8) / 64.0)
        m2 = HeightMap(rng.permutation(64).reshape(8, 8) / 64.0)
        u = ident((8, 8))
        cfg = LossConfig(alpha=5.0)
        r12 = detector_loss(m1, m2, u, cfg)
        r21 = detector_loss(m2, m1, u, cfg)
        sym = symmetrized_loss(m1, m2, u, u, cfg)
        assert sym.loss == pytest.approx(r12.loss + r21.loss)
        assert np.allclose(sym.grad_map1, r12.grad_map1 + r21.grad_map2)
        assert np.allclose(sym.grad_map2, r12.grad_map2 + r21.grad_map1)


class TestGradientCheck:
    def test_passes_on_lattice_maps(self):
        rng = np.random.default_rng(3)
        m1 = HeightMap(rng.permutation(256).reshape(16, 16) / 255.0)
        m2 = HeightMap(rng.permutation(256).reshape(16, 16) / 255.0)
        res = gradient_check(m1, m2, ident((16, 16)), LossConfig(alpha=10.0), n_random=20)
        assert res.passed, res.summary()
        assert res.max_rel_err < 1e-6
        assert res.max_abs_err_at_zero < 1e-9
        assert res.step_ok

    def test_flags_too_large_step(self):
        rng = np.random.default_rng(3)
        m1 = HeightMap(rng.permutation(64).reshape(8, 8) / 63.0)
        m2 = HeightMap(rng.permutation(64).reshape(8, 8) / 63.0)
        res = gradient_check(
            m1, m2, ident((8, 8)), LossConfig(alpha=10.0), step=0.02, n_random=5
        )
        assert not res.step_ok

    def test_covers_every_critical_position(self):
        # the probe set must include both touched positions of every term,
        # otherwise a wrong gradient at a saddle could slip through
        rng = np.random.default_rng(3)
        m1 = HeightMap(rng.permutation(100).reshape(10, 10) / 99.0)
        m2 = HeightMap(rng.permutation(100).reshape(10, 10) / 99.0)
        u = ident((10, 10))
        res = gradient_check(m1, m2, u, LossConfig(alpha=10.0), n_random=0)
        fwd = detector_loss(m1, m2, u, LossConfig(alpha=10.0), with_grads=False)
        critical = {t.saddle for t in fwd.terms} | {t.maximum for t in fwd.terms}
        assert res.n_positions >= len(critical)


class TestValidation:
    def test_shape_mismatch_raises(self):
        m1 = HeightMap(np.zeros((3, 3)))
        m2 = HeightMap(np.zeros((4, 4)))
        with pytest.raises(ValueError):
            detector_loss(m1, m2, ident((3, 3)), LossConfig())

    def test_bad_alpha_rejected(self):
        with pytest.raises(ValueError):
            LossConfig(alpha=-1.0)
        with pytest.raises(ValueError):
            LossConfig(alpha=float("nan"))
