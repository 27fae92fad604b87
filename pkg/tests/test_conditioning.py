"""Gaussian kernels, sparse-map rasterization, smoothing, and the binary format."""

import numpy as np
import pytest

from flowtraj import FormatError, InvalidInputError
from flowtraj.conditioning import (
    GaussianKernel,
    SparseFlowMap,
    gaussian_kernel,
    rasterize,
    read_conditioning,
    smooth,
    write_conditioning,
)
from flowtraj.tracker import Trajectory, TrajectorySet


def single_point_set(positions, width=16, height=12, exited=False):
    traj = Trajectory(0, tuple(positions), exited=exited)
    return TrajectorySet(width, height, len(positions), (traj,))


class TestGaussianKernel:
    def test_hand_computed_weights(self):
        kernel = gaussian_kernel(1, 1.0)
        offsets = np.array([-1.0, 0.0, 1.0])
        raw = np.exp(-(offsets[:, None] ** 2 + offsets[None, :] ** 2) / 2.0)
        expected = raw / raw.sum()
        assert np.allclose(kernel.weights, expected, atol=1e-12)

    def test_normalization_sweep(self):
        for k in range(9):
            for sigma in (0.5, 1.0, 2.0, 3.5, 8.0):
                kernel = gaussian_kernel(k, sigma)
                assert abs(kernel.weights.sum() - 1.0) <= 1e-9

    def test_radius_zero_is_identity_weight(self):
        kernel = gaussian_kernel(0, 2.0)
        assert kernel.weights.shape == (1, 1)
        assert kernel.weights[0, 0] == 1.0

    def test_symmetry_exact(self):
        kernel = gaussian_kernel(3, 1.7)
        w = kernel.weights
        assert np.array_equal(w, w.T)
        assert np.array_equal(w, w[::-1, :])
        assert np.array_equal(w, w[:, ::-1])

    def test_center_is_maximum(self):
        kernel = gaussian_kernel(2, 1.0)
        assert kernel.weights[2, 2] == kernel.weights.max()

    def test_invalid_parameters(self):
        with pytest.raises(InvalidInputError):
            gaussian_kernel(-1, 1.0)
        with pytest.raises(InvalidInputError):
            gaussian_kernel(2, 0.0)

    def test_kernel_type_validates_sum(self):
        with pytest.raises(InvalidInputError):
            GaussianKernel(1, 1.0, np.full((3, 3), 0.2))


class TestRasterize:
    def test_single_stamp(self):
        trajset = single_point_set([(5.0, 6.0), (6.0, 7.5)])
        flow_map = rasterize(trajset, 0)
        assert flow_map.sx[6, 5] == 1.0
        assert flow_map.sy[6, 5] == 1.5
        assert flow_map.mask[6, 5] == 1.0
        assert flow_map.mask.sum() == 1.0

    def test_rounding_half_away_from_zero(self):
        trajset = single_point_set([(4.5, 2.0), (5.0, 2.0)])
        flow_map = rasterize(trajset, 0)
        assert flow_map.mask[2, 5] == 1.0

    def test_collisions_sum_displacements(self):
        a = Trajectory(0, ((5.2, 5.0), (6.2, 5.0)))
        b = Trajectory(1, ((4.8, 5.1), (4.8, 6.1)))
        trajset = TrajectorySet(16, 12, 2, (a, b))
        flow_map = rasterize(trajset, 0)
        assert flow_map.sx[5, 5] == pytest.approx(1.0, abs=1e-12)
        assert flow_map.sy[5, 5] == pytest.approx(1.0, abs=1e-12)
        assert flow_map.mask[5, 5] == 1.0

    def test_exited_trajectories_skipped(self):
        trajset = single_point_set([(5.0, 5.0), (5.0, 5.0)], exited=True)
        flow_map = rasterize(trajset, 0)
        assert flow_map.mask.sum() == 0.0
        assert flow_map.sx.sum() == 0.0

    def test_step_out_of_range(self):
        trajset = single_point_set([(5.0, 5.0), (6.0, 5.0)])
        with pytest.raises(InvalidInputError):
            rasterize(trajset, 1)


class TestSmooth:
    def test_impulse_response_equals_kernel(self):
        sx = np.zeros((15, 15))
        sx[7, 7] = 1.0
        flow_map = SparseFlowMap(sx, np.zeros((15, 15)), np.zeros((15, 15)))
        kernel = gaussian_kernel(3, 1.5)
        smoothed = smooth(flow_map, kernel)
        assert np.max(np.abs(smoothed.sx[4:11, 4:11] - kernel.weights)) <= 1e-9
        assert smoothed.sy.sum() == 0.0

    def test_radius_zero_identity(self):
        rng = np.random.default_rng(3)
        flow_map = SparseFlowMap(
            rng.normal(size=(7, 9)), rng.normal(size=(7, 9)), rng.random((7, 9))
        )
        smoothed = smooth(flow_map, gaussian_kernel(0, 1.0))
        assert np.array_equal(smoothed.sx, flow_map.sx)
        assert np.array_equal(smoothed.sy, flow_map.sy)
        assert np.array_equal(smoothed.mask, flow_map.mask)

    def test_interior_mass_preserved(self):
        sx = np.zeros((21, 21))
        sx[10, 10] = 2.5
        sx[9, 11] = -1.25
        flow_map = SparseFlowMap(sx, np.zeros((21, 21)), np.zeros((21, 21)))
        smoothed = smooth(flow_map, gaussian_kernel(4, 2.0))
        assert smoothed.sx.sum() == pytest.approx(sx.sum(), abs=1e-9)

    def test_all_channels_smoothed(self):
        mask = np.zeros((11, 11))
        mask[5, 5] = 1.0
        flow_map = SparseFlowMap(np.zeros((11, 11)), np.zeros((11, 11)), mask)
        kernel = gaussian_kernel(2, 1.0)
        smoothed = smooth(flow_map, kernel)
        assert smoothed.mask[5, 5] == pytest.approx(kernel.weights[2, 2], abs=1e-12)
        assert smoothed.mask[3, 3] == pytest.approx(kernel.weights[0, 0], abs=1e-12)


class TestConditioningFormat:
    def build_map(self, seed=0, shape=(6, 9)):
        rng = np.random.default_rng(seed)
        h, w = shape
        return SparseFlowMap(
            rng.normal(size=(h, w)).astype(np.float32).astype(np.float64),
            rng.normal(size=(h, w)).astype(np.float32).astype(np.float64),
            (rng.random((h, w)) > 0.5).astype(np.float64),
        )

    def test_roundtrip_bit_exact(self):
        flow_map = self.build_map()
        data = write_conditioning(flow_map)
        back = read_conditioning(data)
        assert np.array_equal(back.sx, flow_map.sx)
        assert np.array_equal(back.sy, flow_map.sy)
        assert np.array_equal(back.mask, flow_map.mask)
        assert write_conditioning(back) == data

    def test_header_layout(self):
        flow_map = self.build_map(shape=(4, 7))
        data = write_conditioning(flow_map)
        assert data[:4] == b"TSKC"
        assert int.from_bytes(data[4:8], "little", signed=True) == 7
        assert int.from_bytes(data[8:12], "little", signed=True) == 4
        assert int.from_bytes(data[12:16], "little", signed=True) == 3
        assert len(data) == 16 + 3 * 4 * 7 * 4

    def test_bad_magic(self):
        data = write_conditioning(self.build_map())
        with pytest.raises(FormatError):
            read_conditioning(b"XXXX" + data[4:])

    def test_truncated(self):
        data = write_conditioning(self.build_map())
        with pytest.raises(FormatError):
            read_conditioning(data[:-3])

    def test_wrong_plane_count(self):
        flow_map = self.build_map(shape=(2, 2))
        data = bytearray(write_conditioning(flow_map))
        data[12:16] = (2).to_bytes(4, "little")
        with pytest.raises(FormatError):
            read_conditioning(bytes(data))


class TestSparseFlowMapValidation:
    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            SparseFlowMap(np.zeros((3, 3)), np.zeros((3, 4)), np.zeros((3, 3)))

    def test_non_finite(self):
        sx = np.zeros((3, 3))
        sx[0, 0] = np.nan
        with pytest.raises(InvalidInputError):
            SparseFlowMap(sx, np.zeros((3, 3)), np.zeros((3, 3)))
