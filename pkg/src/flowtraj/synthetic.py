"""Synthetic scenes with analytically known flow and point trajectories.

A scene is a textured sprite (disc, square, or ring) moving over a
weakly textured static background. The motion model is closed-form, so
per-pixel ground-truth flow and exact point tracks are available as
oracles for the estimator, the tracker, and end-to-end runs.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InvalidInputError
from .flow import FlowField, Frame, bilinear_gather

MOTION_KINDS = ("translate", "circular", "scripted-waypoints")
SPRITE_SHAPES = ("disc", "square", "ring")

BG_BASE = 0.3
BG_AMPLITUDE = 0.15
SPRITE_BASE = 0.7

# The background speckle is drawn on a coarse grid and interpolated, so
# it carries gradients at every pixel without per-pixel noise.
BG_TEXEL_STRIDE = 2

# Soft-edge width plus containment margin around the sprite, in pixels.
_EDGE_MARGIN = 1.0


def _as_pair(value, name: str) -> tuple[float, float]:
    try:
        x, y = value
        pair = (float(x), float(y))
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} must be a pair of numbers") from exc
    if not (math.isfinite(pair[0]) and math.isfinite(pair[1])):
        raise InvalidInputError(f"{name} must be finite")
    return pair


@dataclass(frozen=True)
class MotionSpec:
    """Closed-form sprite-center motion over a fixed number of frames.

    kind selects the parameter set: "translate" uses velocity (and an
    optional start; when omitted the path is centered in the canvas),
    "circular" is a rigid rotation about orbit_center starting at angle
    phase, and "scripted-waypoints" follows one explicit center position
    per frame.
    """

    kind: str
    duration: int
    velocity: tuple[float, float] | None = None
    start: tuple[float, float] | None = None
    orbit_center: tuple[float, float] | None = None
    orbit_radius: float | None = None
    angular_rate: float | None = None
    phase: float = 0.0
    waypoints: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.kind not in MOTION_KINDS:
            raise InvalidInputError(f"unknown motion kind {self.kind!r}")
        if self.duration < 2:
            raise InvalidInputError("duration must be at least 2 frames")
        if self.kind == "translate":
            if self.velocity is None:
                raise InvalidInputError("translate motion requires velocity")
            object.__setattr__(self, "velocity", _as_pair(self.velocity, "velocity"))
            if self.start is not None:
                object.__setattr__(self, "start", _as_pair(self.start, "start"))
        elif self.kind == "circular":
            if (
                self.orbit_center is None
                or self.orbit_radius is None
                or self.angular_rate is None
            ):
                raise InvalidInputError(
                    "circular motion requires orbit_center, orbit_radius, "
                    "and angular_rate"
                )
            object.__setattr__(
                self, "orbit_center", _as_pair(self.orbit_center, "orbit_center")
            )
            radius = float(self.orbit_radius)
            if not (math.isfinite(radius) and radius >= 0):
                raise InvalidInputError("orbit_radius must be nonnegative")
            object.__setattr__(self, "orbit_radius", radius)
            rate = float(self.angular_rate)
            if not math.isfinite(rate):
                raise InvalidInputError("angular_rate must be finite")
            object.__setattr__(self, "angular_rate", rate)
            object.__setattr__(self, "phase", float(self.phase))
        else:
            if self.waypoints is None:
                raise InvalidInputError("scripted motion requires waypoints")
            points = tuple(
                _as_pair(p, "waypoint") for p in self.waypoints
            )
            if len(points) != self.duration:
                raise InvalidInputError(
                    "scripted motion needs exactly one waypoint per frame"
                )
            object.__setattr__(self, "waypoints", points)


@dataclass(frozen=True)
class SpriteSpec:
    """Textured sprite: shape, diameter in pixels, speckle amplitude."""

    shape: str
    size: float
    texture: float = 0.4

    def __post_init__(self):
        if self.shape not in SPRITE_SHAPES:
            raise InvalidInputError(f"unknown sprite shape {self.shape!r}")
        size = float(self.size)
        if not (math.isfinite(size) and size >= 4.0):
            raise InvalidInputError("sprite size must be at least 4 px")
        object.__setattr__(self, "size", size)
        texture = float(self.texture)
        if not (0.0 <= texture <= 0.6):
            raise InvalidInputError("texture amplitude must lie in [0, 0.6]")
        object.__setattr__(self, "texture", texture)


@dataclass(frozen=True)
class Scene:
    """A sprite, its motion, and the canvas they play on."""

    width: int
    height: int
    motion: MotionSpec
    sprite: SpriteSpec

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise InvalidInputError("canvas must be at least 8x8")
        reach = _sprite_reach(self.sprite, self.motion)
        for t in range(self.motion.duration):
            cx, cy = sprite_center(self, t)
            if (
                cx - reach < 0.0
                or cy - reach < 0.0
                or cx + reach > self.width - 1.0
                or cy + reach > self.height - 1.0
            ):
                raise InvalidInputError(
                    f"sprite leaves the frame at t={t} "
                    f"(center ({cx:.2f}, {cy:.2f}), reach {reach:.2f})"
                )


def _sprite_reach(sprite: SpriteSpec, motion: MotionSpec) -> float:
    """Circumscribed sprite radius including the soft edge."""
    half = sprite.size / 2.0
    if sprite.shape == "square" and motion.kind == "circular":
        half *= math.sqrt(2.0)
    return half + _EDGE_MARGIN


def sprite_center(scene: Scene, t: int) -> tuple[float, float]:
    """Closed-form sprite center at frame t."""
    m = scene.motion
    if not 0 <= t < m.duration:
        raise InvalidInputError(f"frame index {t} outside 0..{m.duration - 1}")
    if m.kind == "translate":
        if m.start is not None:
            sx, sy = m.start
        else:
            sx = (scene.width - 1) / 2.0 - m.velocity[0] * (m.duration - 1) / 2.0
            sy = (scene.height - 1) / 2.0 - m.velocity[1] * (m.duration - 1) / 2.0
        return (sx + m.velocity[0] * t, sy + m.velocity[1] * t)
    if m.kind == "circular":
        theta = m.phase + m.angular_rate * t
        ox, oy = m.orbit_center
        return (
            ox + m.orbit_radius * math.cos(theta),
            oy + m.orbit_radius * math.sin(theta),
        )
    return m.waypoints[t]


def _rotation_angle(scene: Scene, t: int) -> float:
    """Sprite orientation at frame t (rigid rotation for circular motion)."""
    if scene.motion.kind == "circular":
        return scene.motion.angular_rate * t
    return 0.0


def _local_coords(scene: Scene, t: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel sprite-local coordinates at frame t."""
    grid_x, grid_y = np.meshgrid(
        np.arange(scene.width, dtype=np.float64),
        np.arange(scene.height, dtype=np.float64),
    )
    cx, cy = sprite_center(scene, t)
    dx = grid_x - cx
    dy = grid_y - cy
    theta = _rotation_angle(scene, t)
    if theta == 0.0:
        return dx, dy
    c, s = math.cos(theta), math.sin(theta)
    return c * dx + s * dy, -s * dx + c * dy


def _shape_distance(sprite: SpriteSpec, lx: np.ndarray, ly: np.ndarray) -> np.ndarray:
    """Signed distance to the sprite outline in local coordinates."""
    half = sprite.size / 2.0
    if sprite.shape == "disc":
        return np.hypot(lx, ly) - half
    if sprite.shape == "square":
        return np.maximum(np.abs(lx), np.abs(ly)) - half
    r = np.hypot(lx, ly)
    return np.maximum(r - half, half / 3.0 - r)


def support_mask(scene: Scene, t: int) -> np.ndarray:
    """Boolean mask of pixels whose center lies inside the sprite at t."""
    lx, ly = _local_coords(scene, t)
    return _shape_distance(scene.sprite, lx, ly) <= 0.0


def point_on_sprite(scene: Scene, t: int, point: tuple[float, float]) -> bool:
    """Whether a (sub-pixel) position lies inside the sprite at frame t."""
    px, py = _as_pair(point, "point")
    cx, cy = sprite_center(scene, t)
    dx, dy = px - cx, py - cy
    theta = _rotation_angle(scene, t)
    if theta != 0.0:
        c, s = math.cos(theta), math.sin(theta)
        dx, dy = c * dx + s * dy, -s * dx + c * dy
    distance = _shape_distance(scene.sprite, np.float64(dx), np.float64(dy))
    return float(distance) <= 0.0


def render(scene: Scene, rng: np.random.Generator) -> list[Frame]:
    """Render the scene's frame sequence.

    The sprite carries a seeded speckle texture sampled bilinearly in
    sprite-local coordinates, so rendering is continuous in sub-pixel
    position. The background is a static weak speckle interpolated from
    a coarse texel grid, which gives it usable intensity gradients
    everywhere without per-pixel noise. Texel draws happen in a fixed
    order (sprite grid, then background), so a given (scene, seed) pair
    always renders identically.
    """
    sprite = scene.sprite
    half_cells = int(math.ceil(sprite.size / 2.0)) + 3
    texels = rng.random((2 * half_cells + 1, 2 * half_cells + 1))
    bg_rows = int(math.ceil(scene.height / BG_TEXEL_STRIDE)) + 2
    bg_cols = int(math.ceil(scene.width / BG_TEXEL_STRIDE)) + 2
    bg_texels = rng.random((bg_rows, bg_cols))
    grid_x, grid_y = np.meshgrid(
        np.arange(scene.width, dtype=np.float64),
        np.arange(scene.height, dtype=np.float64),
    )
    background = BG_BASE + BG_AMPLITUDE * (
        bilinear_gather(
            bg_texels, grid_x / BG_TEXEL_STRIDE, grid_y / BG_TEXEL_STRIDE
        )
        - 0.5
    )
    frames = []
    for t in range(scene.motion.duration):
        lx, ly = _local_coords(scene, t)
        distance = _shape_distance(sprite, lx, ly)
        alpha = np.clip(0.5 - distance, 0.0, 1.0)
        tex = bilinear_gather(texels, lx + half_cells, ly + half_cells)
        sprite_value = SPRITE_BASE + sprite.texture * (tex - 0.5)
        frames.append(Frame(background * (1.0 - alpha) + sprite_value * alpha))
    return frames


def ground_truth_flow(scene: Scene, t: int) -> FlowField:
    """Exact displacement field from frame t to t+1.

    Zero on the background; on the sprite support it equals the motion
    model (the constant center displacement for translation, the
    rigid-rotation displacement about the orbit center for circular
    motion).
    """
    m = scene.motion
    if not 0 <= t < m.duration - 1:
        raise InvalidInputError(
            f"flow step {t} outside 0..{m.duration - 2}"
        )
    mask = support_mask(scene, t)
    if m.kind == "circular":
        grid_x, grid_y = np.meshgrid(
            np.arange(scene.width, dtype=np.float64),
            np.arange(scene.height, dtype=np.float64),
        )
        ox, oy = m.orbit_center
        c, s = math.cos(m.angular_rate), math.sin(m.angular_rate)
        dx = grid_x - ox
        dy = grid_y - oy
        u = (c - 1.0) * dx - s * dy
        v = s * dx + (c - 1.0) * dy
    else:
        cx0, cy0 = sprite_center(scene, t)
        cx1, cy1 = sprite_center(scene, t + 1)
        u = np.full((scene.height, scene.width), cx1 - cx0)
        v = np.full((scene.height, scene.width), cy1 - cy0)
    zero = np.zeros((scene.height, scene.width))
    return FlowField(np.where(mask, u, zero), np.where(mask, v, zero))


def ground_truth_track(scene: Scene, start: tuple[float, float]) -> list[tuple[float, float]]:
    """Exact positions of the sprite point that starts at ``start``.

    Returns one position per frame (duration entries), matching the
    tracker's length convention of one more position than flow steps.
    """
    sx, sy = _as_pair(start, "start")
    if not point_on_sprite(scene, 0, (sx, sy)):
        raise InvalidInputError(f"start ({sx}, {sy}) is not on the sprite at t=0")
    m = scene.motion
    positions = []
    if m.kind == "circular":
        ox, oy = m.orbit_center
        for t in range(m.duration):
            theta = m.angular_rate * t
            c, s = math.cos(theta), math.sin(theta)
            dx, dy = sx - ox, sy - oy
            positions.append((ox + c * dx - s * dy, oy + s * dx + c * dy))
    else:
        cx0, cy0 = sprite_center(scene, 0)
        for t in range(m.duration):
            cx, cy = sprite_center(scene, t)
            positions.append((sx + (cx - cx0), sy + (cy - cy0)))
    return positions


def format_scene(scene: Scene) -> str:
    """Render a scene as the plain-text key = value config."""
    lines = [
        f"width = {scene.width}",
        f"height = {scene.height}",
        f"shape = {scene.sprite.shape}",
        f"size = {scene.sprite.size!r}",
        f"texture = {scene.sprite.texture!r}",
        f"motion = {scene.motion.kind}",
        f"duration = {scene.motion.duration}",
    ]
    m = scene.motion
    if m.kind == "translate":
        lines.append(f"velocity = {m.velocity[0]!r} {m.velocity[1]!r}")
        if m.start is not None:
            lines.append(f"start = {m.start[0]!r} {m.start[1]!r}")
    elif m.kind == "circular":
        lines.append(f"orbit_center = {m.orbit_center[0]!r} {m.orbit_center[1]!r}")
        lines.append(f"orbit_radius = {m.orbit_radius!r}")
        lines.append(f"angular_rate = {m.angular_rate!r}")
        lines.append(f"phase = {m.phase!r}")
    else:
        points = "; ".join(f"{x!r} {y!r}" for x, y in m.waypoints)
        lines.append(f"waypoints = {points}")
    return "\n".join(lines) + "\n"


def parse_scene(text: str) -> Scene:
    """Parse the plain-text scene config; inverse of format_scene."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"scene config line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key in values:
            raise FormatError(f"scene config line {lineno}: duplicate key {key!r}")
        values[key] = value.strip()

    known = {
        "width", "height", "shape", "size", "texture", "motion", "duration",
        "velocity", "start", "orbit_center", "orbit_radius", "angular_rate",
        "phase", "waypoints",
    }
    unknown = set(values) - known
    if unknown:
        raise FormatError(f"scene config: unknown keys {sorted(unknown)}")

    def require(key: str) -> str:
        if key not in values:
            raise FormatError(f"scene config: missing required key {key!r}")
        return values[key]

    def parse_pair(key: str) -> tuple[float, float]:
        parts = require(key).split()
        if len(parts) != 2:
            raise FormatError(f"scene config: {key} must be two numbers")
        try:
            return (float(parts[0]), float(parts[1]))
        except ValueError as exc:
            raise FormatError(f"scene config: {key} must be two numbers") from exc

    def parse_number(key: str, cast):
        try:
            return cast(require(key))
        except ValueError as exc:
            raise FormatError(f"scene config: bad value for {key}") from exc

    kind = require("motion")
    if kind == "translate":
        motion = MotionSpec(
            kind=kind,
            duration=parse_number("duration", int),
            velocity=parse_pair("velocity"),
            start=parse_pair("start") if "start" in values else None,
        )
    elif kind == "circular":
        motion = MotionSpec(
            kind=kind,
            duration=parse_number("duration", int),
            orbit_center=parse_pair("orbit_center"),
            orbit_radius=parse_number("orbit_radius", float),
            angular_rate=parse_number("angular_rate", float),
            phase=parse_number("phase", float) if "phase" in values else 0.0,
        )
    elif kind == "scripted-waypoints":
        groups = [g.strip() for g in require("waypoints").split(";") if g.strip()]
        waypoints = []
        for group in groups:
            parts = group.split()
            if len(parts) != 2:
                raise FormatError("scene config: each waypoint must be two numbers")
            try:
                waypoints.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise FormatError(
                    "scene config: each waypoint must be two numbers"
                ) from exc
        duration = (
            parse_number("duration", int) if "duration" in values else len(waypoints)
        )
        motion = MotionSpec(kind=kind, duration=duration, waypoints=tuple(waypoints))
    else:
        raise FormatError(f"scene config: unknown motion kind {kind!r}")

    sprite = SpriteSpec(
        shape=require("shape"),
        size=parse_number("size", float),
        texture=parse_number("texture", float) if "texture" in values else 0.4,
    )
    return Scene(
        width=parse_number("width", int),
        height=parse_number("height", int),
        motion=motion,
        sprite=sprite,
    )
