"""Command-line pipeline: flow, track, condition, synth, eval, overlay.

All randomness derives from one --seed value split into fixed per-stage
streams, so every subcommand is deterministic given its inputs, and
parallel runs (--jobs) are byte-identical to sequential ones.

Exit codes: 0 success, 1 I/O or computation failure, 2 usage or
configuration error.
"""

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import conditioning, metrics, pgm, sampler, synthetic, tracker
from .errors import FlowTrajError, FormatError, InvalidInputError
from .flow import Frame, FlowField, FlowParams, estimate_flow, read_flo, write_flo
from .rng import make_rng


class UsageError(FlowTrajError):
    """Bad invocation or configuration; maps to exit code 2."""


_DEFAULTS = {
    "seed": 0,
    "stride_lambda": 16,
    "n_max": 16,
    "kernel_radius": 4,
    "sigma": 2.0,
    "levels": 4,
    "iterations": 100,
    "alpha": 15.0,
    "epsilon": 1e-4,
    "jobs": 1,
    "interpolation": "bilinear",
    "trials": 10000,
    "input": None,
    "output": None,
    "flows": None,
    "trajectories": None,
    "scene": None,
}

# config-file key -> (defaults key, converter)
_CONFIG_KEYS = {
    "seed": ("seed", int),
    "lambda": ("stride_lambda", int),
    "n_max": ("n_max", int),
    "kernel_radius": ("kernel_radius", int),
    "sigma": ("sigma", float),
    "levels": ("levels", int),
    "iterations": ("iterations", int),
    "alpha": ("alpha", float),
    "epsilon": ("epsilon", float),
    "jobs": ("jobs", int),
    "interpolation": ("interpolation", str),
    "trials": ("trials", int),
    "input": ("input", str),
    "output": ("output", str),
    "flows": ("flows", str),
    "trajectories": ("trajectories", str),
    "scene": ("scene", str),
}

_DEFAULT_SCENE = synthetic.Scene(
    width=128,
    height=96,
    motion=synthetic.MotionSpec(kind="translate", duration=30, velocity=(1.5, 0.75)),
    sprite=synthetic.SpriteSpec(shape="disc", size=24, texture=0.4),
)


def _load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        dest, convert = _CONFIG_KEYS[key]
        try:
            values[dest] = convert(value.strip())
        except ValueError as exc:
            raise UsageError(f"config line {lineno}: bad value for {key!r}") from exc
    return values


def _resolve_options(args: argparse.Namespace) -> dict:
    """Apply precedence: CLI flag > config file > built-in default."""
    options = dict(_DEFAULTS)
    if getattr(args, "config", None):
        options.update(_load_config_file(args.config))
    for key in _DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            options[key] = value
    return options


def _flow_params(options: dict) -> FlowParams:
    try:
        return FlowParams(
            pyramid_levels=options["levels"],
            iterations_per_level=options["iterations"],
            regularization_alpha=options["alpha"],
            convergence_epsilon=options["epsilon"],
        )
    except InvalidInputError as exc:
        raise UsageError(f"bad flow parameters: {exc}") from exc


def _require_output(options: dict) -> Path:
    if not options["output"]:
        raise UsageError("--output is required")
    path = Path(options["output"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def _list_files(directory: str, pattern: str) -> list[Path]:
    return sorted(Path(directory).glob(pattern))


def _read_frames(directory: str) -> list:
    paths = _list_files(directory, "*.pgm")
    if len(paths) < 2:
        raise UsageError(
            f"need at least 2 .pgm frames in {directory!r}, found {len(paths)}"
        )
    frames = [pgm.read_pgm(path.read_bytes()) for path in paths]
    first = frames[0]
    for path, frame in zip(paths, frames):
        if frame.width != first.width or frame.height != first.height:
            raise InvalidInputError(f"frame {path.name} has mismatched dimensions")
    return frames


def _read_flows(directory: str) -> list[FlowField]:
    paths = _list_files(directory, "*.flo")
    if not paths:
        raise UsageError(f"no .flo files found in {directory!r}")
    flows = [read_flo(path.read_bytes()) for path in paths]
    first = flows[0]
    for path, field in zip(paths, flows):
        if field.width != first.width or field.height != first.height:
            raise InvalidInputError(f"flow {path.name} has mismatched dimensions")
    return flows


def _parallel_map(fn, items, jobs: int) -> list:
    """Map preserving order; byte-identical regardless of jobs."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def cmd_flow(args: argparse.Namespace) -> int:
    options = _resolve_options(args)
    if not options["input"]:
        raise UsageError("--input frame directory is required")
    out_dir = _require_output(options)
    frames = _read_frames(options["input"])
    params = _flow_params(options)

    def estimate_pair(t: int) -> bytes:
        return write_flo(estimate_flow(frames[t], frames[t + 1], params))

    blobs = _parallel_map(estimate_pair, range(len(frames) - 1), options["jobs"])
    for t, blob in enumerate(blobs):
        (out_dir / f"flow_{t:05d}.flo").write_bytes(blob)
    return 0


def cmd_track(args: argparse.Namespace) -> int:
    options = _resolve_options(args)
    out_dir = _require_output(options)
    if options["flows"]:
        flows = _read_flows(options["flows"])
    elif options["input"]:
        frames = _read_frames(options["input"])
        params = _flow_params(options)
        flows = _parallel_map(
            lambda t: estimate_flow(frames[t], frames[t + 1], params),
            range(len(frames) - 1),
            options["jobs"],
        )
    else:
        raise UsageError("either --flows or --input is required")

    seed = options["seed"]
    rng = make_rng(seed, "track")
    try:
        grid = sampler.build_candidate_grid(
            flows[0].width, flows[0].height, options["stride_lambda"], rng
        )
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc
    plan = sampler.SamplingPlan(
        probabilities=sampler.candidate_probabilities(flows[0], grid),
        n_max=options["n_max"],
        seed=seed,
    )
    keypoints = sampler.sample_keypoints(grid, plan, rng)
    trajset = tracker.propagate(keypoints, flows, options["interpolation"])
    (out_dir / "trajectories.jsonl").write_text(
        tracker.write_trajectories(trajset), encoding="ascii"
    )
    print(
        f"track: N={len(keypoints.points)} lambda={options['stride_lambda']} "
        f"seed={seed}",
        file=sys.stderr,
    )
    return 0


def cmd_condition(args: argparse.Namespace) -> int:
    options = _resolve_options(args)
    if not options["input"]:
        raise UsageError("--input trajectory file is required")
    out_dir = _require_output(options)
    try:
        text = Path(options["input"]).read_text(encoding="ascii")
    except OSError as exc:
        raise FormatError(f"cannot read trajectory file: {exc}") from exc
    trajset = tracker.read_trajectories(text)
    try:
        kernel = conditioning.gaussian_kernel(
            options["kernel_radius"], options["sigma"]
        )
    except InvalidInputError as exc:
        raise UsageError(f"bad kernel parameters: {exc}") from exc

    def build(t: int) -> bytes:
        return conditioning.write_conditioning(
            conditioning.smooth(conditioning.rasterize(trajset, t), kernel)
        )

    blobs = _parallel_map(build, range(trajset.frames - 1), options["jobs"])
    for t, blob in enumerate(blobs):
        (out_dir / f"cond_{t:05d}.bin").write_bytes(blob)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    options = _resolve_options(args)
    out_dir = _require_output(options)
    if options["scene"]:
        try:
            scene_text = Path(options["scene"]).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read scene file: {exc}") from exc
        try:
            scene = synthetic.parse_scene(scene_text)
        except (FormatError, InvalidInputError) as exc:
            raise UsageError(f"bad scene config: {exc}") from exc
    else:
        scene = _DEFAULT_SCENE
    frames = synthetic.render(scene, make_rng(options["seed"], "synth"))
    for t, frame in enumerate(frames):
        (out_dir / f"frame_{t:05d}.pgm").write_bytes(pgm.write_pgm(frame))
    for t in range(scene.motion.duration - 1):
        (out_dir / f"gt_flow_{t:05d}.flo").write_bytes(
            write_flo(synthetic.ground_truth_flow(scene, t))
        )
    (out_dir / "scene.cfg").write_text(
        synthetic.format_scene(scene), encoding="utf-8"
    )
    return 0


def _load_scene(options: dict) -> synthetic.Scene:
    if not options["scene"]:
        raise UsageError("--scene is required for this evaluation")
    try:
        text = Path(options["scene"]).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read scene file: {exc}") from exc
    return synthetic.parse_scene(text)


def _eval_epe(scene: synthetic.Scene, flows: list[FlowField]) -> tuple[float, float]:
    steps = min(len(flows), scene.motion.duration - 1)
    if steps < 1:
        raise UsageError("no flow steps overlap the scene duration")
    total = 0.0
    count = 0
    overall_max = 0.0
    for t in range(steps):
        truth = synthetic.ground_truth_flow(scene, t)
        mask = synthetic.support_mask(scene, t)
        mean_epe, max_epe = metrics.endpoint_error(flows[t], truth, mask)
        pixels = int(mask.sum())
        total += mean_epe * pixels
        count += pixels
        overall_max = max(overall_max, max_epe)
    return total / count, overall_max


def _eval_trajectories(
    scene: synthetic.Scene, trajset: tracker.TrajectorySet
) -> float:
    if trajset.frames > scene.motion.duration:
        raise UsageError("trajectories span more frames than the scene")
    oracle = []
    for traj in trajset.trajectories:
        sx, sy = traj.positions[0]
        if synthetic.point_on_sprite(scene, 0, (sx, sy)):
            oracle.append(
                synthetic.ground_truth_track(scene, (sx, sy))[: trajset.frames]
            )
        else:
            # off-sprite points sit on the static background
            oracle.append([(sx, sy)] * trajset.frames)
    return metrics.trajectory_error(trajset, oracle)


def cmd_eval(args: argparse.Namespace) -> int:
    options = _resolve_options(args)
    if not options["flows"] and not options["trajectories"]:
        raise UsageError("nothing to evaluate: pass --flows and/or --trajectories")
    report_fields: dict = {}
    if options["flows"]:
        flows = _read_flows(options["flows"])
        scene = _load_scene(options)
        mean_epe, max_epe = _eval_epe(scene, flows)
        report_fields["mean_epe"] = mean_epe
        report_fields["max_epe"] = max_epe
        rng = make_rng(options["seed"], "track")
        try:
            grid = sampler.build_candidate_grid(
                flows[0].width, flows[0].height, options["stride_lambda"], rng
            )
        except InvalidInputError as exc:
            raise UsageError(str(exc)) from exc
        plan = sampler.SamplingPlan(
            probabilities=sampler.candidate_probabilities(flows[0], grid),
            n_max=options["n_max"],
            seed=options["seed"],
        )
        report_fields["chi_square_stat"] = metrics.sampling_fit(
            grid, plan, options["trials"], make_rng(options["seed"], "eval")
        )
        report_fields["sample_count"] = options["trials"]
    if options["trajectories"]:
        try:
            text = Path(options["trajectories"]).read_text(encoding="ascii")
        except OSError as exc:
            raise FormatError(f"cannot read trajectory file: {exc}") from exc
        trajset = tracker.read_trajectories(text)
        scene = _load_scene(options)
        report_fields["per_step_trajectory_error"] = _eval_trajectories(
            scene, trajset
        )
    report = metrics.MetricReport(**report_fields)
    sys.stdout.write(report.to_json())
    if options["output"]:
        Path(options["output"]).write_text(report.to_json(), encoding="ascii")
    return 0


def _draw_segment(pixels: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> None:
    """Bresenham line of intensity 1.0 between two pixel positions."""
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        pixels[y0, x0] = 1.0
        if x0 == x1 and y0 == y1:
            return
        doubled = 2 * err
        if doubled >= dy:
            err += dy
            x0 += sx
        if doubled <= dx:
            err += dx
            y0 += sy


def cmd_overlay(args: argparse.Namespace) -> int:
    options = _resolve_options(args)
    if not options["input"]:
        raise UsageError("--input frame directory is required")
    if not options["trajectories"]:
        raise UsageError("--trajectories is required")
    out_dir = _require_output(options)
    paths = _list_files(options["input"], "*.pgm")
    if not paths:
        raise UsageError(f"no .pgm frames found in {options['input']!r}")
    try:
        text = Path(options["trajectories"]).read_text(encoding="ascii")
    except OSError as exc:
        raise FormatError(f"cannot read trajectory file: {exc}") from exc
    trajset = tracker.read_trajectories(text)
    for t, path in enumerate(paths):
        data = path.read_bytes()
        frame, maxval = pgm.read_pgm_with_maxval(data)
        if trajset.trajectories and (
            frame.width != trajset.width or frame.height != trajset.height
        ):
            raise InvalidInputError(
                f"frame {path.name} does not match trajectory dimensions"
            )
        pixels = frame.pixels.copy()
        upto = min(t, trajset.frames - 1)
        for traj in trajset.trajectories:
            points = [
                (int(math.floor(x + 0.5)), int(math.floor(y + 0.5)))
                for x, y in traj.positions[: upto + 1]
            ]
            for (ax, ay), (bx, by) in zip(points, points[1:]):
                _draw_segment(pixels, ax, ay, bx, by)
            if len(points) == 1:
                pixels[points[0][1], points[0][0]] = 1.0
        (out_dir / path.name).write_bytes(pgm.write_pgm(Frame(pixels), maxval))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input directory or file")
    common.add_argument("--output", help="output directory or file")
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--seed", type=int, help="top-level RNG seed (default 0)")
    common.add_argument(
        "--lambda", dest="stride_lambda", type=int,
        help="candidate grid stride in pixels (default 16)",
    )
    common.add_argument(
        "--n-max", dest="n_max", type=int,
        help="maximum keypoints per clip (default 16)",
    )
    common.add_argument(
        "--kernel-radius", dest="kernel_radius", type=int,
        help="Gaussian kernel radius in pixels (default 4)",
    )
    common.add_argument(
        "--sigma", type=float, help="Gaussian kernel sigma in pixels (default 2.0)"
    )

    flow_opts = argparse.ArgumentParser(add_help=False)
    flow_opts.add_argument("--levels", type=int, help="pyramid levels (default 4)")
    flow_opts.add_argument(
        "--iterations", type=int, help="solver iterations per level (default 100)"
    )
    flow_opts.add_argument(
        "--alpha", type=float, help="smoothness weight (default 15)"
    )
    flow_opts.add_argument(
        "--epsilon", type=float, help="convergence threshold (default 1e-4)"
    )
    jobs_opt = argparse.ArgumentParser(add_help=False)
    jobs_opt.add_argument(
        "--jobs", type=int, help="worker threads; output is identical for any value"
    )

    parser = argparse.ArgumentParser(
        prog="flowtraj",
        description="Sparse optical-flow trajectory pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "flow", parents=[common, flow_opts, jobs_opt],
        help="estimate dense flow between consecutive frames",
    )
    p.set_defaults(handler=cmd_flow)

    p = sub.add_parser(
        "track", parents=[common, flow_opts, jobs_opt],
        help="sample keypoints and integrate trajectories",
    )
    p.add_argument("--flows", help="directory of precomputed .flo files")
    p.add_argument(
        "--interpolation", choices=tracker.INTERPOLATIONS,
        help="flow sampling rule (default bilinear)",
    )
    p.set_defaults(handler=cmd_track)

    p = sub.add_parser(
        "condition", parents=[common, jobs_opt],
        help="rasterize and smooth trajectory conditioning maps",
    )
    p.set_defaults(handler=cmd_condition)

    p = sub.add_parser(
        "synth", parents=[common],
        help="render a synthetic scene with ground-truth oracles",
    )
    p.add_argument("--scene", help="scene config file (default: demo scene)")
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser(
        "eval", parents=[common],
        help="score flow and trajectories against scene oracles",
    )
    p.add_argument("--flows", help="directory of estimated .flo files")
    p.add_argument("--trajectories", help="trajectories.jsonl to score")
    p.add_argument("--scene", help="scene config file with the oracle")
    p.add_argument(
        "--trials", type=int, help="sampling-fit trial count (default 10000)"
    )
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser(
        "overlay", parents=[common],
        help="draw trajectory polylines onto frames",
    )
    p.add_argument("--trajectories", help="trajectories.jsonl to draw")
    p.set_defaults(handler=cmd_overlay)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"flowtraj: {exc}", file=sys.stderr)
        return 2
    except (InvalidInputError, FormatError, OSError) as exc:
        print(f"flowtraj: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
