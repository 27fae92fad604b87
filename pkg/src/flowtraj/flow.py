"""Dense optical flow estimation and flow-field utilities.

Provides a coarse-to-fine Horn-Schunck variational estimator, bilinear
sampling of flow fields at sub-pixel positions, per-pixel flow magnitude,
and bit-exact Middlebury ``.flo`` serialization so externally computed
flow can be loaded in place of the built-in estimator.
"""

import math
import operator
import struct
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import FormatError, InvalidInputError

FLO_MAGIC = b"PIEH"

# Derivatives are taken on a 0..255 intensity scale so the default
# smoothness weight keeps its classic Horn-Schunck magnitude.
_INTENSITY_SCALE = 255.0

# Smallest side length allowed at the coarsest pyramid level.
_MIN_COARSE_SIDE = 8


@dataclass(eq=False)
class Frame:
    """Single-channel intensity image with values in [0, 1].

    ``pixels`` is a (height, width) float64 array, treated as immutable
    once constructed.
    """

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.float64)
        if pixels.ndim != 2 or pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise InvalidInputError(
                "frame must be a 2-D array with positive dimensions"
            )
        if not np.all(np.isfinite(pixels)):
            raise InvalidInputError("frame intensities must be finite")
        if pixels.min() < 0.0 or pixels.max() > 1.0:
            raise InvalidInputError("frame intensities must lie in [0, 1]")
        self.pixels = np.ascontiguousarray(pixels)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(eq=False)
class FlowField:
    """Per-pixel 2-D displacement field in pixels per frame step.

    ``u`` holds the horizontal (rightward) and ``v`` the vertical
    (downward) displacement, each as a (height, width) float64 array.
    """

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        if u.ndim != 2 or u.shape != v.shape:
            raise InvalidInputError("flow components must be matching 2-D arrays")
        if u.shape[0] < 1 or u.shape[1] < 1:
            raise InvalidInputError("flow field dimensions must be positive")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise InvalidInputError("flow components must be finite")
        self.u = np.ascontiguousarray(u)
        self.v = np.ascontiguousarray(v)

    @property
    def width(self) -> int:
        return self.u.shape[1]

    @property
    def height(self) -> int:
        return self.u.shape[0]


@dataclass(frozen=True)
class FlowParams:
    """Configuration of the coarse-to-fine Horn-Schunck solver."""

    pyramid_levels: int = 4
    iterations_per_level: int = 100
    regularization_alpha: float = 15.0
    convergence_epsilon: float = 1e-4

    def __post_init__(self):
        if self.pyramid_levels < 1:
            raise InvalidInputError("pyramid_levels must be at least 1")
        if self.iterations_per_level < 1:
            raise InvalidInputError("iterations_per_level must be at least 1")
        if not self.regularization_alpha > 0:
            raise InvalidInputError("regularization_alpha must be positive")
        if self.convergence_epsilon < 0:
            raise InvalidInputError("convergence_epsilon must be nonnegative")


def bilinear_gather(values: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear lookup of a 2-D array at real-valued positions.

    Coordinates are clamped to the array rectangle (replicate border).
    Vectorized over arbitrarily shaped coordinate arrays.
    """
    h, w = values.shape
    xs = np.clip(xs, 0.0, float(w - 1))
    ys = np.clip(ys, 0.0, float(h - 1))
    x0 = np.minimum(np.floor(xs).astype(np.intp), w - 1)
    y0 = np.minimum(np.floor(ys).astype(np.intp), h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    top = values[y0, x0] + fx * (values[y0, x1] - values[y0, x0])
    bot = values[y1, x0] + fx * (values[y1, x1] - values[y1, x0])
    return top + fy * (bot - top)


def _binomial_blur_axis(img: np.ndarray, axis: int) -> np.ndarray:
    pad = [(2, 2) if a == axis else (0, 0) for a in range(2)]
    p = np.pad(img, pad, mode="edge")

    def sl(s):
        return tuple(s if a == axis else slice(None) for a in range(2))

    return (
        p[sl(slice(0, -4))]
        + 4.0 * p[sl(slice(1, -3))]
        + 6.0 * p[sl(slice(2, -2))]
        + 4.0 * p[sl(slice(3, -1))]
        + p[sl(slice(4, None))]
    ) / 16.0


def _downsample(img: np.ndarray) -> np.ndarray:
    """Halve each dimension after a 5-tap binomial prefilter."""
    blurred = _binomial_blur_axis(_binomial_blur_axis(img, 0), 1)
    return np.ascontiguousarray(blurred[::2, ::2])


def _upsample_flow(field: np.ndarray, height: int, width: int) -> np.ndarray:
    """Resize one flow component to a finer grid and double its values."""
    xs = np.arange(width, dtype=np.float64) * 0.5
    ys = np.arange(height, dtype=np.float64) * 0.5
    grid_x, grid_y = np.meshgrid(xs, ys)
    return np.ascontiguousarray(bilinear_gather(field, grid_x, grid_y) * 2.0)


def _warp(img: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Sample img at (x + u, y + v), replicating the border."""
    h, w = img.shape
    grid_x, grid_y = np.meshgrid(
        np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64)
    )
    return bilinear_gather(img, grid_x + u, grid_y + v)


def _central_dx(img: np.ndarray) -> np.ndarray:
    p = np.pad(img, ((0, 0), (1, 1)), mode="edge")
    return (p[:, 2:] - p[:, :-2]) * 0.5


def _central_dy(img: np.ndarray) -> np.ndarray:
    p = np.pad(img, ((1, 1), (0, 0)), mode="edge")
    return (p[2:, :] - p[:-2, :]) * 0.5


def _solve_level(
    img0: np.ndarray, img1: np.ndarray, u: np.ndarray, v: np.ndarray,
    params: FlowParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Refine (u, v) on one pyramid level via warped incremental updates."""
    warped = _warp(img1, u, v)
    avg = (img0 + warped) * 0.5
    ix = np.ascontiguousarray(_central_dx(avg))
    iy = np.ascontiguousarray(_central_dy(avg))
    it = np.ascontiguousarray(warped - img0)
    alpha2 = params.regularization_alpha * params.regularization_alpha
    den = np.ascontiguousarray(alpha2 + ix * ix + iy * iy)
    du = np.zeros_like(img0)
    dv = np.zeros_like(img0)
    for _ in range(params.iterations_per_level):
        ndu, ndv = backend.hs_sweep(ix, iy, it, den, du, dv)
        delta = 0.5 * (np.mean(np.abs(ndu - du)) + np.mean(np.abs(ndv - dv)))
        du, dv = ndu, ndv
        if delta < params.convergence_epsilon:
            break
    return u + du, v + dv


def estimate_flow(prev: Frame, next_frame: Frame, params: FlowParams | None = None) -> FlowField:
    """Estimate dense flow from prev to next_frame.

    Coarse-to-fine Horn-Schunck: a binomial image pyramid is solved from
    the coarsest level down, warping next_frame by the current flow and
    iterating the Jacobi update until the iteration budget is exhausted
    or the mean absolute update drops below convergence_epsilon. The
    pyramid depth is clamped so the coarsest level stays at least 8x8.
    """
    if params is None:
        params = FlowParams()
    if prev.width != next_frame.width or prev.height != next_frame.height:
        raise InvalidInputError("frames must share dimensions")
    if min(prev.width, prev.height) < _MIN_COARSE_SIDE:
        raise InvalidInputError(
            f"frames must be at least {_MIN_COARSE_SIDE}x{_MIN_COARSE_SIDE}"
        )
    pyr0 = [prev.pixels * _INTENSITY_SCALE]
    pyr1 = [next_frame.pixels * _INTENSITY_SCALE]
    while len(pyr0) < params.pyramid_levels:
        down = _downsample(pyr0[-1])
        if min(down.shape) < _MIN_COARSE_SIDE:
            break
        pyr0.append(down)
        pyr1.append(_downsample(pyr1[-1]))
    u = np.zeros_like(pyr0[-1])
    v = np.zeros_like(pyr0[-1])
    for level in range(len(pyr0) - 1, -1, -1):
        if u.shape != pyr0[level].shape:
            h, w = pyr0[level].shape
            u = _upsample_flow(u, h, w)
            v = _upsample_flow(v, h, w)
        u, v = _solve_level(pyr0[level], pyr1[level], u, v, params)
    return FlowField(u, v)


def sample_bilinear(flow: FlowField, x: float, y: float) -> tuple[float, float]:
    """Bilinearly interpolate (u, v) at a sub-pixel position.

    Coordinates are clamped to the field rectangle; at integer positions
    the stored displacement is returned exactly, and the result never
    leaves the componentwise range of the four surrounding values.
    """
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InvalidInputError("sample coordinates must be finite")
    w, h = flow.width, flow.height
    xc = min(max(float(x), 0.0), float(w - 1))
    yc = min(max(float(y), 0.0), float(h - 1))
    x0 = min(int(xc), w - 1)
    y0 = min(int(yc), h - 1)
    x1 = min(x0 + 1, w - 1)
    y1 = min(y0 + 1, h - 1)
    fx = xc - x0
    fy = yc - y0

    def interp(c: np.ndarray) -> float:
        a = c[y0, x0]
        b = c[y0, x1]
        d = c[y1, x0]
        e = c[y1, x1]
        top = a + fx * (b - a)
        bot = d + fx * (e - d)
        val = top + fy * (bot - top)
        return float(min(max(val, min(a, b, d, e)), max(a, b, d, e)))

    return interp(flow.u), interp(flow.v)


def magnitude_at(flow: FlowField, x: int, y: int) -> float:
    """L2 norm of the displacement stored at integer pixel (x, y)."""
    xi = operator.index(x)
    yi = operator.index(y)
    if not (0 <= xi < flow.width and 0 <= yi < flow.height):
        raise InvalidInputError(
            f"pixel ({xi}, {yi}) outside {flow.width}x{flow.height} field"
        )
    return math.hypot(flow.u[yi, xi], flow.v[yi, xi])


def write_flo(flow: FlowField) -> bytes:
    """Serialize a flow field in the Middlebury format.

    Layout: 4-byte magic "PIEH", little-endian int32 width and height,
    then row-major interleaved (u, v) pairs as little-endian float32.
    """
    header = FLO_MAGIC + struct.pack("<ii", flow.width, flow.height)
    inter = np.empty((flow.height, flow.width, 2), dtype="<f4")
    inter[:, :, 0] = flow.u
    inter[:, :, 1] = flow.v
    return header + inter.tobytes()


def read_flo(data: bytes) -> FlowField:
    """Parse Middlebury flow bytes; inverse of write_flo."""
    if len(data) < 4:
        raise FormatError("flow data truncated before magic tag")
    if data[:4] != FLO_MAGIC:
        raise FormatError("bad flow magic tag")
    if len(data) < 12:
        raise FormatError("flow data truncated before dimensions")
    width, height = struct.unpack("<ii", data[4:12])
    if width <= 0 or height <= 0:
        raise FormatError("flow dimensions must be positive")
    expected = 12 + width * height * 8
    if len(data) != expected:
        raise FormatError(
            f"flow payload is {len(data) - 12} bytes, expected {expected - 12}"
        )
    inter = np.frombuffer(data, dtype="<f4", offset=12).reshape(height, width, 2)
    return FlowField(
        inter[:, :, 0].astype(np.float64), inter[:, :, 1].astype(np.float64)
    )
