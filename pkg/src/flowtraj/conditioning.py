"""Sparse conditioning maps: rasterized displacements plus Gaussian smoothing.

Per frame, each live trajectory stamps its displacement at its rounded
current position into two sparse channels (with an occupancy mask);
the channels are then convolved with a normalized isotropic Gaussian.
"""

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import FormatError, InvalidInputError
from .tracker import TrajectorySet

CONDITIONING_MAGIC = b"TSKC"
_PLANES = 3


@dataclass(eq=False)
class SparseFlowMap:
    """Two displacement channels plus an occupancy mask.

    Before smoothing, sx and sy are zero wherever mask is zero; smoothing
    spreads all three channels with the same kernel.
    """

    sx: np.ndarray
    sy: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        sx = np.asarray(self.sx, dtype=np.float64)
        sy = np.asarray(self.sy, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=np.float64)
        if sx.ndim != 2 or sx.shape != sy.shape or sx.shape != mask.shape:
            raise InvalidInputError("map channels must be matching 2-D arrays")
        if sx.shape[0] < 1 or sx.shape[1] < 1:
            raise InvalidInputError("map dimensions must be positive")
        for channel in (sx, sy, mask):
            if not np.all(np.isfinite(channel)):
                raise InvalidInputError("map channels must be finite")
        self.sx = np.ascontiguousarray(sx)
        self.sy = np.ascontiguousarray(sy)
        self.mask = np.ascontiguousarray(mask)

    @property
    def width(self) -> int:
        return self.sx.shape[1]

    @property
    def height(self) -> int:
        return self.sx.shape[0]


@dataclass(eq=False)
class GaussianKernel:
    """Normalized isotropic Gaussian weights on a (2k+1) square window."""

    radius_k: int
    sigma: float
    weights: np.ndarray

    def __post_init__(self):
        if self.radius_k < 0:
            raise InvalidInputError("radius_k must be nonnegative")
        if not self.sigma > 0:
            raise InvalidInputError("sigma must be positive")
        weights = np.asarray(self.weights, dtype=np.float64)
        side = 2 * self.radius_k + 1
        if weights.shape != (side, side):
            raise InvalidInputError("kernel weights must be (2k+1) square")
        if weights.min() < 0:
            raise InvalidInputError("kernel weights must be nonnegative")
        if abs(float(weights.sum()) - 1.0) > 1e-9:
            raise InvalidInputError("kernel weights must sum to 1")
        self.weights = np.ascontiguousarray(weights)


def gaussian_kernel(radius_k: int, sigma: float) -> GaussianKernel:
    """Build the normalized Gaussian window exp(-(i^2+j^2)/(2 sigma^2)).

    The window is formed as the outer product of a symmetric 1-D profile,
    so all reflection symmetries hold exactly, then normalized to sum 1.
    """
    if radius_k < 0:
        raise InvalidInputError("radius_k must be nonnegative")
    if not (math.isfinite(sigma) and sigma > 0):
        raise InvalidInputError("sigma must be positive")
    offsets = np.arange(-radius_k, radius_k + 1, dtype=np.float64)
    profile = np.exp(-(offsets * offsets) / (2.0 * sigma * sigma))
    weights = np.outer(profile, profile)
    weights /= weights.sum()
    return GaussianKernel(radius_k=radius_k, sigma=float(sigma), weights=weights)


def rasterize(trajset: TrajectorySet, t: int) -> SparseFlowMap:
    """Stamp displacements of live trajectories at frame t.

    Each non-exited trajectory writes its step-t displacement at its
    rounded (half away from zero) current position; colliding stamps sum
    their displacements while the mask stays at 1.
    """
    if not 0 <= t < trajset.frames - 1:
        raise InvalidInputError(f"step {t} outside 0..{trajset.frames - 2}")
    sx = np.zeros((trajset.height, trajset.width))
    sy = np.zeros((trajset.height, trajset.width))
    mask = np.zeros((trajset.height, trajset.width))
    for traj in trajset.trajectories:
        if traj.exited:
            continue
        x, y = traj.positions[t]
        nx, ny = traj.positions[t + 1]
        # positions are nonnegative, so floor(x + 0.5) rounds half away
        px = int(math.floor(x + 0.5))
        py = int(math.floor(y + 0.5))
        sx[py, px] += nx - x
        sy[py, px] += ny - y
        mask[py, px] = 1.0
    return SparseFlowMap(sx=sx, sy=sy, mask=mask)


def smooth(flow_map: SparseFlowMap, kernel: GaussianKernel) -> SparseFlowMap:
    """Convolve all three channels with the kernel (zero padding)."""
    return SparseFlowMap(
        sx=backend.convolve2d(flow_map.sx, kernel.weights),
        sy=backend.convolve2d(flow_map.sy, kernel.weights),
        mask=backend.convolve2d(flow_map.mask, kernel.weights),
    )


def write_conditioning(flow_map: SparseFlowMap) -> bytes:
    """Serialize as the three-plane binary.

    Layout: magic "TSKC", then width, height, and plane count 3 as
    little-endian int32, then the sx, sy, mask planes in row-major
    little-endian float32.
    """
    header = CONDITIONING_MAGIC + struct.pack(
        "<iii", flow_map.width, flow_map.height, _PLANES
    )
    planes = b"".join(
        np.asarray(channel, dtype="<f4").tobytes()
        for channel in (flow_map.sx, flow_map.sy, flow_map.mask)
    )
    return header + planes


def read_conditioning(data: bytes) -> SparseFlowMap:
    """Parse the three-plane binary; inverse of write_conditioning."""
    if len(data) < 4:
        raise FormatError("conditioning data truncated before magic tag")
    if data[:4] != CONDITIONING_MAGIC:
        raise FormatError("bad conditioning magic tag")
    if len(data) < 16:
        raise FormatError("conditioning data truncated before header")
    width, height, planes = struct.unpack("<iii", data[4:16])
    if width <= 0 or height <= 0:
        raise FormatError("conditioning dimensions must be positive")
    if planes != _PLANES:
        raise FormatError(f"expected {_PLANES} planes, found {planes}")
    expected = 16 + width * height * _PLANES * 4
    if len(data) != expected:
        raise FormatError(
            f"conditioning payload is {len(data) - 16} bytes, "
            f"expected {expected - 16}"
        )
    plane_size = width * height
    values = np.frombuffer(data, dtype="<f4", offset=16)
    channels = [
        values[i * plane_size : (i + 1) * plane_size]
        .astype(np.float64)
        .reshape(height, width)
        for i in range(_PLANES)
    ]
    return SparseFlowMap(sx=channels[0], sy=channels[1], mask=channels[2])
