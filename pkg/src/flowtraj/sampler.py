"""Candidate grids and magnitude-weighted keypoint sampling.

Keypoints are drawn from a stride-lambda grid with a random offset,
with per-candidate probability proportional to the flow magnitude at
the first frame, using sequential weighted draws without replacement.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .flow import FlowField


@dataclass(frozen=True)
class CandidateGrid:
    """Jittered regular grid of integer candidate positions.

    positions are enumerated row-major (y outer, x inner) and satisfy
    x = offset_w + i*stride_lambda, y = offset_h + j*stride_lambda.
    """

    stride_lambda: int
    offset_w: int
    offset_h: int
    positions: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.stride_lambda < 1:
            raise InvalidInputError("stride_lambda must be at least 1")
        if not 0 <= self.offset_w < self.stride_lambda:
            raise InvalidInputError("offset_w must lie in [0, stride_lambda)")
        if not 0 <= self.offset_h < self.stride_lambda:
            raise InvalidInputError("offset_h must lie in [0, stride_lambda)")
        if not self.positions:
            raise InvalidInputError("candidate grid must be nonempty")


@dataclass(frozen=True)
class SamplingPlan:
    """Per-candidate probabilities plus the sampling budget and seed."""

    probabilities: tuple[float, ...]
    n_max: int
    seed: int = 0

    def __post_init__(self):
        if self.n_max < 1:
            raise InvalidInputError("n_max must be at least 1")
        probs = tuple(float(p) for p in self.probabilities)
        if not probs:
            raise InvalidInputError("probabilities must be nonempty")
        if any(p < 0 for p in probs):
            raise InvalidInputError("probabilities must be nonnegative")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise InvalidInputError("probabilities must sum to 1")
        object.__setattr__(self, "probabilities", probs)


@dataclass(frozen=True)
class KeypointSet:
    """Sampled keypoints, ordered by draw order."""

    points: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.points:
            raise InvalidInputError("keypoint set must be nonempty")
        if len(set(self.points)) != len(self.points):
            raise InvalidInputError("keypoints must be distinct")


def grid_positions(
    width: int, height: int, stride: int, offset_w: int, offset_h: int
) -> tuple[tuple[int, int], ...]:
    """Enumerate grid positions row-major for fixed offsets."""
    return tuple(
        (x, y)
        for y in range(offset_h, height, stride)
        for x in range(offset_w, width, stride)
    )


def build_candidate_grid(
    width: int, height: int, stride_lambda: int, rng: np.random.Generator
) -> CandidateGrid:
    """Build the candidate grid with offsets drawn uniformly from [0, stride)."""
    if stride_lambda < 1:
        raise InvalidInputError("stride_lambda must be at least 1")
    if stride_lambda > min(width, height):
        raise InvalidInputError(
            "stride_lambda must not exceed the smaller image dimension"
        )
    offset_w = int(rng.integers(0, stride_lambda))
    offset_h = int(rng.integers(0, stride_lambda))
    return CandidateGrid(
        stride_lambda=stride_lambda,
        offset_w=offset_w,
        offset_h=offset_h,
        positions=grid_positions(width, height, stride_lambda, offset_w, offset_h),
    )


def candidate_probabilities(
    flow0: FlowField, grid: CandidateGrid
) -> tuple[float, ...]:
    """Per-candidate probability proportional to first-frame flow magnitude.

    Falls back to the uniform distribution when every candidate sits on
    zero flow (a static first frame).
    """
    if not grid.positions:
        raise InvalidInputError("candidate grid must be nonempty")
    xs = np.array([p[0] for p in grid.positions])
    ys = np.array([p[1] for p in grid.positions])
    if xs.min() < 0 or ys.min() < 0 or xs.max() >= flow0.width or ys.max() >= flow0.height:
        raise InvalidInputError("candidate grid extends outside the flow field")
    magnitudes = np.hypot(flow0.u[ys, xs], flow0.v[ys, xs])
    total = float(magnitudes.sum())
    if total == 0.0:
        return (1.0 / len(grid.positions),) * len(grid.positions)
    return tuple(float(m) / total for m in magnitudes)


def draw_sample_count(n_max: int, rng: np.random.Generator) -> int:
    """Draw the keypoint count uniformly from {1, ..., n_max}."""
    if n_max < 1:
        raise InvalidInputError("n_max must be at least 1")
    return int(rng.integers(1, n_max + 1))


def _weighted_draw(weights: np.ndarray, rng) -> int:
    """Draw one index with probability proportional to weights.

    Uses the cumulative-sum inversion of a single uniform variate; a
    candidate with zero weight can never be returned.
    """
    total = float(weights.sum())
    if total <= 0.0:
        raise InvalidInputError("weights must have nonzero support")
    r = rng.random() * total
    cum = np.cumsum(weights)
    idx = int(np.searchsorted(cum, r, side="right"))
    if idx >= len(weights):
        # r rounded up to the full total; take the last supported candidate
        idx = int(np.flatnonzero(weights)[-1])
    return idx


def sample_keypoints(
    grid: CandidateGrid,
    plan: SamplingPlan,
    rng: np.random.Generator,
    count_override: int | None = None,
) -> KeypointSet:
    """Sample distinct keypoints by successive weighted draws.

    The count N comes from draw_sample_count (or count_override when
    given), capped at the number of candidates with nonzero probability;
    after each draw the chosen candidate's weight is zeroed and the
    remainder renormalizes implicitly. Points appear in draw order.
    """
    if len(plan.probabilities) != len(grid.positions):
        raise InvalidInputError("plan probabilities must align with grid positions")
    if count_override is None:
        count = draw_sample_count(plan.n_max, rng)
    else:
        count = int(count_override)
        if not 1 <= count <= plan.n_max:
            raise InvalidInputError("count_override must lie in [1, n_max]")
    weights = np.asarray(plan.probabilities, dtype=np.float64).copy()
    support = int(np.count_nonzero(weights))
    count = min(count, support)
    points = []
    for _ in range(count):
        idx = _weighted_draw(weights, rng)
        points.append(grid.positions[idx])
        weights[idx] = 0.0
    return KeypointSet(points=tuple(points))
