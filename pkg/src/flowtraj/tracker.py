"""Trajectory propagation by forward integration of dense flow.

Each keypoint is advanced one frame at a time by the flow sampled at
its current sub-pixel position. Trajectories serialize to a simple
line-delimited JSON interchange format.
"""

import json
import math
from dataclasses import dataclass

from .errors import FormatError, InvalidInputError
from .flow import FlowField, sample_bilinear
from .sampler import KeypointSet

INTERPOLATIONS = ("bilinear", "nearest")


@dataclass(frozen=True)
class Trajectory:
    """One tracked point: positions per frame plus the exit flag."""

    point_id: int
    positions: tuple[tuple[float, float], ...]
    exited: bool = False

    def __post_init__(self):
        if len(self.positions) < 1:
            raise InvalidInputError("trajectory must hold at least one position")
        for x, y in self.positions:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InvalidInputError("trajectory positions must be finite")


@dataclass(frozen=True)
class TrajectorySet:
    """Trajectories over a common frame rectangle and length.

    frames is the number of positions per trajectory (one more than the
    number of flow steps); keeping it explicit lets an empty set still
    carry its length.
    """

    width: int
    height: int
    frames: int
    trajectories: tuple[Trajectory, ...]

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidInputError("trajectory set dimensions must be positive")
        if self.frames < 1:
            raise InvalidInputError("trajectory set must span at least one frame")
        ids = [t.point_id for t in self.trajectories]
        if len(set(ids)) != len(ids):
            raise InvalidInputError("trajectory point_ids must be unique")
        for t in self.trajectories:
            if len(t.positions) != self.frames:
                raise InvalidInputError(
                    "all trajectories must have one position per frame"
                )
            for x, y in t.positions:
                if not (0.0 <= x <= self.width - 1 and 0.0 <= y <= self.height - 1):
                    raise InvalidInputError(
                        "trajectory positions must lie inside the frame"
                    )


def propagate(
    keypoints: KeypointSet,
    flows: list[FlowField],
    interpolation: str = "bilinear",
) -> TrajectorySet:
    """Integrate keypoints through the flow sequence.

    Each step adds the displacement sampled at the current sub-pixel
    position (bilinear by default, nearest-pixel as an ablation option).
    A position landing outside the frame is clamped to the border, the
    exited flag is set, and the trajectory stays frozen there.
    """
    if interpolation not in INTERPOLATIONS:
        raise InvalidInputError(f"unknown interpolation {interpolation!r}")
    if not flows:
        raise InvalidInputError("at least one flow field is required")
    width, height = flows[0].width, flows[0].height
    for f in flows:
        if f.width != width or f.height != height:
            raise InvalidInputError("flow fields must share dimensions")
    for px, py in keypoints.points:
        if not (0 <= px <= width - 1 and 0 <= py <= height - 1):
            raise InvalidInputError(f"keypoint ({px}, {py}) outside the frame")

    trajectories = []
    for point_id, (px, py) in enumerate(keypoints.points):
        x, y = float(px), float(py)
        positions = [(x, y)]
        exited = False
        for f in flows:
            if not exited:
                if interpolation == "bilinear":
                    du, dv = sample_bilinear(f, x, y)
                else:
                    xi = min(max(int(math.floor(x + 0.5)), 0), width - 1)
                    yi = min(max(int(math.floor(y + 0.5)), 0), height - 1)
                    du, dv = float(f.u[yi, xi]), float(f.v[yi, xi])
                x += du
                y += dv
                if not (0.0 <= x <= width - 1 and 0.0 <= y <= height - 1):
                    x = min(max(x, 0.0), float(width - 1))
                    y = min(max(y, 0.0), float(height - 1))
                    exited = True
            positions.append((x, y))
        trajectories.append(
            Trajectory(point_id=point_id, positions=tuple(positions), exited=exited)
        )
    return TrajectorySet(
        width=width,
        height=height,
        frames=len(flows) + 1,
        trajectories=tuple(trajectories),
    )


def displacement_at(trajset: TrajectorySet, point_id: int, t: int) -> tuple[float, float]:
    """Displacement of one trajectory between frames t and t+1."""
    for traj in trajset.trajectories:
        if traj.point_id == point_id:
            break
    else:
        raise InvalidInputError(f"no trajectory with point_id {point_id}")
    if not 0 <= t < trajset.frames - 1:
        raise InvalidInputError(f"step {t} outside 0..{trajset.frames - 2}")
    x0, y0 = traj.positions[t]
    x1, y1 = traj.positions[t + 1]
    return (x1 - x0, y1 - y0)


def write_trajectories(trajset: TrajectorySet) -> str:
    """Serialize to line-delimited JSON.

    First line is a header {"width", "height", "frames", "count"}; each
    following line is one trajectory {"id", "exited", "points"} where
    points is a list of [x, y] pairs, one per frame.
    """
    header = {
        "width": trajset.width,
        "height": trajset.height,
        "frames": trajset.frames,
        "count": len(trajset.trajectories),
    }
    lines = [json.dumps(header, separators=(",", ":"))]
    for traj in trajset.trajectories:
        record = {
            "id": traj.point_id,
            "exited": traj.exited,
            "points": [[x, y] for x, y in traj.positions],
        }
        lines.append(json.dumps(record, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def read_trajectories(text: str) -> TrajectorySet:
    """Parse the line-delimited JSON form; inverse of write_trajectories."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise FormatError("trajectory data is empty")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError("malformed trajectory header") from exc
    if not isinstance(header, dict):
        raise FormatError("trajectory header must be a JSON object")
    try:
        width = int(header["width"])
        height = int(header["height"])
        frames = int(header["frames"])
        count = int(header["count"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError("trajectory header is missing required fields") from exc
    if count != len(lines) - 1:
        raise FormatError(
            f"trajectory count {count} does not match {len(lines) - 1} records"
        )
    trajectories = []
    for line in lines[1:]:
        try:
            record = json.loads(line)
            point_id = int(record["id"])
            exited = bool(record["exited"])
            points = tuple((float(x), float(y)) for x, y in record["points"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError("malformed trajectory record") from exc
        trajectories.append(
            Trajectory(point_id=point_id, positions=points, exited=exited)
        )
    try:
        return TrajectorySet(
            width=width, height=height, frames=frames,
            trajectories=tuple(trajectories),
        )
    except InvalidInputError as exc:
        raise FormatError(f"inconsistent trajectory data: {exc}") from exc
