"""Oracle-based quality metrics for the pipeline.

Flow endpoint error against ground truth, mean trajectory error against
closed-form tracks, and a chi-square fit of the sampler's first-draw
frequencies against its target distribution.
"""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import FormatError, InvalidInputError
from .flow import FlowField
from .sampler import CandidateGrid, SamplingPlan, _weighted_draw
from .tracker import TrajectorySet


@dataclass(frozen=True)
class MetricReport:
    """Summary metrics of one evaluation run.

    Fields not exercised by a given run stay at their zero defaults.
    """

    mean_epe: float = 0.0
    max_epe: float = 0.0
    per_step_trajectory_error: float = 0.0
    chi_square_stat: float = 0.0
    sample_count: int = 0

    def __post_init__(self):
        for name in (
            "mean_epe", "max_epe", "per_step_trajectory_error", "chi_square_stat",
        ):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise InvalidInputError(f"{name} must be nonnegative and finite")
        if self.sample_count < 0:
            raise InvalidInputError("sample_count must be nonnegative")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        try:
            raw = json.loads(text)
            return cls(**raw)
        except (json.JSONDecodeError, TypeError) as exc:
            raise FormatError("malformed metric report") from exc


def endpoint_error(
    estimated: FlowField, truth: FlowField, mask: np.ndarray | None = None
) -> tuple[float, float]:
    """Mean and max per-pixel endpoint error over the masked region."""
    if estimated.width != truth.width or estimated.height != truth.height:
        raise InvalidInputError("flow fields must share dimensions")
    err = np.hypot(estimated.u - truth.u, estimated.v - truth.v)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != err.shape:
            raise InvalidInputError("mask must match the flow dimensions")
        err = err[mask]
        if err.size == 0:
            raise InvalidInputError("mask must cover at least one pixel")
    return float(err.mean()), float(err.max())


def trajectory_error(
    observed: TrajectorySet, oracle: list[list[tuple[float, float]]]
) -> float:
    """Mean L2 distance between observed and oracle positions.

    The oracle supplies one position sequence per trajectory, in the
    same order; the mean runs over every (trajectory, frame) pair.
    """
    if len(oracle) != len(observed.trajectories):
        raise InvalidInputError("oracle must supply one sequence per trajectory")
    if not observed.trajectories:
        raise InvalidInputError("trajectory set is empty")
    total = 0.0
    count = 0
    for traj, reference in zip(observed.trajectories, oracle):
        if len(reference) != len(traj.positions):
            raise InvalidInputError("oracle sequence length mismatch")
        for (ox, oy), (rx, ry) in zip(traj.positions, reference):
            total += math.hypot(ox - rx, oy - ry)
            count += 1
    return total / count


def sampling_fit(
    grid: CandidateGrid, plan: SamplingPlan, trials: int, rng
) -> float:
    """Chi-square statistic of empirical first draws vs the plan.

    Runs ``trials`` independent first draws through the sampler's own
    draw routine and compares per-candidate counts with the expected
    trials * p_i over the supported candidates.
    """
    if trials < 1000:
        raise InvalidInputError("at least 1000 trials are required")
    if len(grid.positions) > 64:
        raise InvalidInputError("sampling_fit supports at most 64 candidates")
    if len(plan.probabilities) != len(grid.positions):
        raise InvalidInputError("plan probabilities must align with grid positions")
    weights = np.asarray(plan.probabilities, dtype=np.float64)
    if float(weights.sum()) <= 0.0:
        raise InvalidInputError("plan has no supported candidate")
    counts = np.zeros(len(weights), dtype=np.int64)
    for _ in range(trials):
        counts[_weighted_draw(weights, rng)] += 1
    stat = 0.0
    for observed, p in zip(counts, weights):
        if p > 0.0:
            expected = trials * float(p)
            stat += (float(observed) - expected) ** 2 / expected
        elif observed:
            raise InvalidInputError("draw landed on a zero-probability candidate")
    return stat
